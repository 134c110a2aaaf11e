//! Finite-difference weights and grid derivatives.
//!
//! Stencil weights come from Fornberg's recursion, so arbitrary one-sided
//! closures share one code path with the centred interior stencils.

use crate::error::{Error, Result};
use crate::scalar::{real, Cplx, Real};

/// Weights for the `m`-th derivative at `z` over the nodes `x` (Fornberg).
///
/// Returns one weight per node. Nodes must be pairwise distinct.
pub fn fornberg_weights<T: Real>(z: T, x: &[T], m: usize) -> Vec<T> {
    let n = x.len();
    assert!(n > m, "need more nodes than the derivative order");
    let mut c = vec![vec![T::zero(); n]; m + 1];
    let mut c1 = T::one();
    let mut c4 = x[0] - z;
    c[0][0] = T::one();
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 = c2 * c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (real::<T>(k as f64) * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - real::<T>(k as f64) * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c.pop().unwrap()
}

fn stencil_offsets(n: usize, i: usize, width: usize) -> (usize, Vec<i64>) {
    let half = width / 2;
    let start = if i < half {
        0
    } else if i + half >= n {
        n - width
    } else {
        i - half
    };
    let offs = (0..width).map(|k| (start + k) as i64 - i as i64).collect();
    (start, offs)
}

fn apply_stencils<T: Real>(
    values: &[Cplx<T>],
    h: T,
    width: usize,
    order: usize,
) -> Vec<Cplx<T>> {
    let n = values.len();
    let scale = h.powi(-(order as i32));
    let mut out = vec![Cplx::new(T::zero(), T::zero()); n];
    // weights depend only on the offset pattern; cache per start-distance
    let mut cache: Vec<Option<Vec<T>>> = vec![None; width];
    for i in 0..n {
        let (start, offs) = stencil_offsets(n, i, width);
        let key = i - start;
        if cache[key].is_none() {
            let nodes: Vec<T> = offs.iter().map(|&o| real::<T>(o as f64)).collect();
            cache[key] = Some(fornberg_weights(T::zero(), &nodes, order));
        }
        let w = cache[key].as_ref().unwrap();
        let mut acc = Cplx::new(T::zero(), T::zero());
        for (k, &wk) in w.iter().enumerate() {
            acc = acc + values[start + k] * wk;
        }
        out[i] = acc * scale;
    }
    out
}

/// First derivative on a uniform grid, 4th order (2nd order when fewer than
/// five points are available).
pub fn derivative1<T: Real>(values: &[Cplx<T>], h: T) -> Result<Vec<Cplx<T>>> {
    let n = values.len();
    if n < 3 {
        return Err(Error::contract("derivative needs at least 3 points"));
    }
    let width = if n >= 5 { 5 } else { 3 };
    Ok(apply_stencils(values, h, width, 1))
}

/// Second derivative on a uniform grid, 4th order (2nd order fallback below
/// seven points).
pub fn derivative2<T: Real>(values: &[Cplx<T>], h: T) -> Result<Vec<Cplx<T>>> {
    let n = values.len();
    if n < 4 {
        return Err(Error::contract("second derivative needs at least 4 points"));
    }
    // a width of 6 gives 4th order both at the centred interior nodes and at
    // the one-sided edge closures
    let width = if n >= 7 { 6 } else { 4 };
    Ok(apply_stencils(values, h, width, 2))
}

/// Second derivative at 6th order; used as an independent oracle for
/// residual checks. Needs at least nine points.
pub fn derivative2_order6<T: Real>(values: &[Cplx<T>], h: T) -> Result<Vec<Cplx<T>>> {
    if values.len() < 9 {
        return Err(Error::contract(
            "6th-order second derivative needs at least 9 points",
        ));
    }
    Ok(apply_stencils(values, h, 8, 2))
}

/// First derivative at 6th order.
pub fn derivative1_order6<T: Real>(values: &[Cplx<T>], h: T) -> Result<Vec<Cplx<T>>> {
    if values.len() < 8 {
        return Err(Error::contract(
            "6th-order first derivative needs at least 8 points",
        ));
    }
    Ok(apply_stencils(values, h, 7, 1))
}
