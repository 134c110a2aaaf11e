//! Characteristic functions of the two generators, the principal square
//! root, imaginary-axis margins, and a winding-number root finder for the
//! point spectrum in the left half-plane.
//!
//! The eigenvalues are the left-half-plane zeros of
//! `cosh(lambda) + sqrt(lambda) sinh(lambda)` (Dirichlet wave wall) and of
//! `sqrt(lambda) cosh(lambda) + sinh(lambda)` (Neumann, slope form). Both
//! functions are analytic off the branch cut `(-inf, 0]`, which carries the
//! continuous spectrum and no eigenvalues.

use crate::error::{Error, Result};
use crate::fit::{self, DecayFit};
use crate::scalar::{cplx, real, Cplx, Real};

/// Which generator's characteristic function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharacteristicKind {
    DirichletA,
    NeumannB,
}

/// Principal square root: branch cut along `(-inf, 0]`, `Re sqrt >= 0`,
/// and the cut itself maps from above (`sqrt(-1) = i`).
pub fn principal_sqrt<T: Real>(lambda: Cplx<T>) -> Cplx<T> {
    // normalise -0.0 so values on the cut resolve to the upper side
    let im = if lambda.im == T::zero() {
        T::zero()
    } else {
        lambda.im
    };
    Cplx::new(lambda.re, im).sqrt()
}

/// Characteristic function value.
pub fn char_value<T: Real>(kind: CharacteristicKind, lambda: Cplx<T>) -> Cplx<T> {
    let s = principal_sqrt(lambda);
    match kind {
        CharacteristicKind::DirichletA => lambda.cosh() + s * lambda.sinh(),
        CharacteristicKind::NeumannB => s * lambda.cosh() + lambda.sinh(),
    }
}

/// Analytic derivative of the characteristic function (off the cut,
/// `lambda != 0`).
pub fn char_derivative<T: Real>(kind: CharacteristicKind, lambda: Cplx<T>) -> Cplx<T> {
    let s = principal_sqrt(lambda);
    let half = real::<T>(0.5);
    let sh = lambda.sinh();
    let ch = lambda.cosh();
    match kind {
        CharacteristicKind::DirichletA => sh + sh * (half / s) + s * ch,
        CharacteristicKind::NeumannB => ch * (half / s) + s * sh + ch,
    }
}

/// Rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle<T: Real> {
    pub re_min: T,
    pub re_max: T,
    pub im_min: T,
    pub im_max: T,
}

impl<T: Real> Rectangle<T> {
    pub fn new(re_min: T, re_max: T, im_min: T, im_max: T) -> Result<Self> {
        if !(re_max > re_min) || !(im_max > im_min) {
            return Err(Error::contract("degenerate rectangle"));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn contains(&self, z: Cplx<T>, slack: T) -> bool {
        z.re >= self.re_min - slack
            && z.re <= self.re_max + slack
            && z.im >= self.im_min - slack
            && z.im <= self.im_max + slack
    }

    fn centroid(&self) -> Cplx<T> {
        let half = real::<T>(0.5);
        Cplx::new(
            (self.re_min + self.re_max) * half,
            (self.im_min + self.im_max) * half,
        )
    }

    fn split4(&self, fr: T, fi: T) -> [Self; 4] {
        let rm = self.re_min + (self.re_max - self.re_min) * fr;
        let im = self.im_min + (self.im_max - self.im_min) * fi;
        [
            Self { re_min: self.re_min, re_max: rm, im_min: self.im_min, im_max: im },
            Self { re_min: rm, re_max: self.re_max, im_min: self.im_min, im_max: im },
            Self { re_min: self.re_min, re_max: rm, im_min: im, im_max: self.im_max },
            Self { re_min: rm, re_max: self.re_max, im_min: im, im_max: self.im_max },
        ]
    }

    fn min_extent(&self) -> T {
        (self.re_max - self.re_min).min(self.im_max - self.im_min)
    }

    fn as_f64(&self) -> (f64, f64, f64, f64) {
        (
            self.re_min.to_f64().unwrap_or(f64::NAN),
            self.re_max.to_f64().unwrap_or(f64::NAN),
            self.im_min.to_f64().unwrap_or(f64::NAN),
            self.im_max.to_f64().unwrap_or(f64::NAN),
        )
    }
}

/// Zero of a characteristic function with its residual and origin cell.
#[derive(Debug, Clone)]
pub struct RootRecord<T: Real> {
    pub lambda: Cplx<T>,
    pub residual: T,
    pub cell: Rectangle<T>,
    pub newton_iterations: u32,
}

/// Residual tolerance accepted for roots.
pub const ROOT_TOLERANCE: f64 = 1e-10;
/// Half-width of the guard strip kept clear around the branch cut.
pub const CUT_GUARD: f64 = 1e-8;

fn boundary_samples<T: Real>(rect: &Rectangle<T>, n_per_edge: usize) -> Vec<Cplx<T>> {
    let mut pts = Vec::with_capacity(4 * n_per_edge);
    let step = |a: T, b: T, k: usize| a + (b - a) * real::<T>(k as f64) / real::<T>(n_per_edge as f64);
    for k in 0..n_per_edge {
        pts.push(Cplx::new(step(rect.re_min, rect.re_max, k), rect.im_min));
    }
    for k in 0..n_per_edge {
        pts.push(Cplx::new(rect.re_max, step(rect.im_min, rect.im_max, k)));
    }
    for k in 0..n_per_edge {
        pts.push(Cplx::new(step(rect.re_max, rect.re_min, k), rect.im_max));
    }
    for k in 0..n_per_edge {
        pts.push(Cplx::new(rect.re_min, step(rect.im_max, rect.im_min, k)));
    }
    pts
}

/// Winding number by trapezoid quadrature of `char'/char` around the
/// rectangle. Returns the (real) winding estimate and the smallest
/// characteristic modulus met on the boundary.
pub fn winding_number<T: Real>(
    kind: CharacteristicKind,
    rect: &Rectangle<T>,
    n_per_edge: usize,
) -> (T, T) {
    let pts = boundary_samples(rect, n_per_edge);
    let n = pts.len();
    let mut min_abs = T::infinity();
    let logd: Vec<Cplx<T>> = pts
        .iter()
        .map(|&z| {
            let f = char_value(kind, z);
            min_abs = min_abs.min(f.norm());
            char_derivative(kind, z) / f
        })
        .collect();
    let mut acc = Cplx::new(T::zero(), T::zero());
    let half = real::<T>(0.5);
    for i in 0..n {
        let j = (i + 1) % n;
        acc = acc + (logd[i] + logd[j]) * (pts[j] - pts[i]) * half;
    }
    let two_pi = real::<T>(2.0) * T::PI();
    ((acc / Cplx::new(T::zero(), two_pi)).re, min_abs)
}

/// Winding number by summing normalised phase increments of the
/// characteristic along the boundary; independent of the quadrature route
/// above and used to recount reported cells.
pub fn winding_number_by_phase<T: Real>(
    kind: CharacteristicKind,
    rect: &Rectangle<T>,
    n_per_edge: usize,
) -> (i64, T) {
    let pts = boundary_samples(rect, n_per_edge);
    let vals: Vec<Cplx<T>> = pts.iter().map(|&z| char_value(kind, z)).collect();
    let mut min_abs = T::infinity();
    for v in &vals {
        min_abs = min_abs.min(v.norm());
    }
    let mut total = T::zero();
    let n = vals.len();
    for i in 0..n {
        let j = (i + 1) % n;
        let d = (vals[j] / vals[i]).arg();
        total += d;
    }
    let two_pi = real::<T>(2.0) * T::PI();
    let w = total / two_pi;
    (w.round().to_f64().unwrap_or(0.0) as i64, min_abs)
}

fn newton_refine<T: Real>(
    kind: CharacteristicKind,
    start: Cplx<T>,
    home: &Rectangle<T>,
) -> Option<(Cplx<T>, T, u32)> {
    let mut z = start;
    let slack = (home.re_max - home.re_min) + (home.im_max - home.im_min);
    for it in 0..64u32 {
        let f = char_value(kind, z);
        let df = char_derivative(kind, z);
        if df.norm() < real::<T>(1e-300) {
            return None;
        }
        let step = f / df;
        z = z - step;
        if !home.contains(z, slack) || z.re >= -real::<T>(CUT_GUARD) {
            return None;
        }
        if step.norm() <= real::<T>(1e-13) * z.norm().max(T::one()) {
            let resid = char_value(kind, z).norm();
            if resid <= real::<T>(ROOT_TOLERANCE) {
                return Some((z, resid, it + 1));
            }
            return None;
        }
    }
    None
}

/// Configuration knobs for the root search.
#[derive(Debug, Clone, Copy)]
pub struct RootSearchConfig {
    pub boundary_points_per_edge: usize,
    pub max_depth: usize,
    pub boundary_min_abs: f64,
}

impl Default for RootSearchConfig {
    fn default() -> Self {
        Self {
            boundary_points_per_edge: 256, // 1024 points per cell boundary
            max_depth: 14,
            boundary_min_abs: 1e-6,
        }
    }
}

fn classify_cell<T: Real>(
    kind: CharacteristicKind,
    cell: &Rectangle<T>,
    cfg: &RootSearchConfig,
) -> Result<Option<i64>> {
    // `None` means the boundary is too close to a zero to integrate
    let (w1, m1) = winding_number(kind, cell, cfg.boundary_points_per_edge);
    if m1 < real::<T>(cfg.boundary_min_abs) {
        return Ok(None);
    }
    let (w2, _) = winding_number(kind, cell, cfg.boundary_points_per_edge * 2);
    let r1 = w1.round();
    let r2 = w2.round();
    let quarter = real::<T>(0.25);
    if (w1 - r1).abs() > quarter || (w2 - r2).abs() > quarter || r1 != r2 {
        // inconsistent quadrature: one more doubling before giving up
        let (w3, m3) = winding_number(kind, cell, cfg.boundary_points_per_edge * 4);
        let r3 = w3.round();
        if m3 < real::<T>(cfg.boundary_min_abs) || (w3 - r3).abs() > quarter {
            return Ok(None);
        }
        return Ok(Some(r3.to_f64().unwrap_or(f64::NAN) as i64));
    }
    Ok(Some(r1.to_f64().unwrap_or(f64::NAN) as i64))
}

fn search_cell<T: Real>(
    kind: CharacteristicKind,
    cell: Rectangle<T>,
    depth: usize,
    cfg: &RootSearchConfig,
    out: &mut Vec<RootRecord<T>>,
) -> Result<()> {
    let indeterminate = |cell: &Rectangle<T>, min_abs: T| {
        let (re_min, re_max, im_min, im_max) = cell.as_f64();
        Error::IndeterminateCell {
            re_min,
            re_max,
            im_min,
            im_max,
            min_abs: min_abs.to_f64().unwrap_or(f64::NAN),
        }
    };
    let class = classify_cell(kind, &cell, cfg)?;
    let w = match class {
        Some(w) => w,
        None => {
            // boundary too close to a zero: retry on slightly shifted splits
            if depth >= cfg.max_depth || cell.min_extent() < real::<T>(1e-7) {
                let (_, m) = winding_number(kind, &cell, cfg.boundary_points_per_edge);
                return Err(indeterminate(&cell, m));
            }
            for &(fr, fi) in &[(0.5, 0.5), (0.47, 0.53), (0.55, 0.45)] {
                let parts = cell.split4(real(fr), real(fi));
                let ok = parts.iter().all(|p| {
                    let (_, m) = winding_number(kind, p, cfg.boundary_points_per_edge);
                    m >= real::<T>(cfg.boundary_min_abs)
                });
                if ok {
                    for p in parts {
                        search_cell(kind, p, depth + 1, cfg, out)?;
                    }
                    return Ok(());
                }
            }
            let (_, m) = winding_number(kind, &cell, cfg.boundary_points_per_edge);
            return Err(indeterminate(&cell, m));
        }
    };
    if w < 0 {
        let (_, m) = winding_number(kind, &cell, cfg.boundary_points_per_edge);
        return Err(indeterminate(&cell, m));
    }
    if w == 0 {
        return Ok(());
    }
    if w == 1 {
        if let Some((z, resid, iters)) = newton_refine(kind, cell.centroid(), &cell) {
            if cell.contains(z, real::<T>(1e-9)) {
                out.push(RootRecord {
                    lambda: z,
                    residual: resid,
                    cell,
                    newton_iterations: iters,
                });
                return Ok(());
            }
        }
        // Newton missed from the centroid: subdivide toward the root
    }
    if depth >= cfg.max_depth || cell.min_extent() < real::<T>(1e-7) {
        let (_, m) = winding_number(kind, &cell, cfg.boundary_points_per_edge);
        return Err(indeterminate(&cell, m));
    }
    for p in cell.split4(real(0.5), real(0.5)) {
        search_cell(kind, p, depth + 1, cfg, out)?;
    }
    Ok(())
}

/// All characteristic zeros inside `region` (left half-plane, clear of the
/// branch cut), located by adaptive winding-number subdivision and Newton
/// refinement. Roots are returned sorted by imaginary part.
pub fn find_roots<T: Real>(
    kind: CharacteristicKind,
    region: Rectangle<T>,
    max_roots: usize,
) -> Result<Vec<RootRecord<T>>> {
    find_roots_with(kind, region, max_roots, &RootSearchConfig::default())
}

pub fn find_roots_with<T: Real>(
    kind: CharacteristicKind,
    region: Rectangle<T>,
    max_roots: usize,
    cfg: &RootSearchConfig,
) -> Result<Vec<RootRecord<T>>> {
    if max_roots < 1 {
        return Err(Error::contract("max_roots must be at least 1"));
    }
    let guard = real::<T>(CUT_GUARD);
    if region.re_max > -guard {
        return Err(Error::contract(
            "search region must lie in the open left half-plane (Re <= -1e-8)",
        ));
    }
    // clip the guard strip around the cut; no eigenvalues live there
    let mut cells = Vec::new();
    if region.im_min < -guard && region.im_max > guard {
        cells.push(Rectangle { im_min: guard, ..region });
        cells.push(Rectangle { im_max: -guard, ..region });
    } else if region.im_min.abs() <= guard {
        cells.push(Rectangle { im_min: guard, ..region });
    } else if region.im_max.abs() <= guard {
        cells.push(Rectangle { im_max: -guard, ..region });
    } else {
        cells.push(region);
    }

    let mut out = Vec::new();
    for cell in cells {
        if cell.im_max > cell.im_min {
            search_cell(kind, cell, 0, cfg, &mut out)?;
        }
    }
    // dedupe (roots on shared subdivision edges may be found twice)
    out.sort_by(|a, b| a.lambda.im.partial_cmp(&b.lambda.im).unwrap());
    let mut dedup: Vec<RootRecord<T>> = Vec::new();
    for r in out {
        if let Some(prev) = dedup.last() {
            if (prev.lambda - r.lambda).norm() < real::<T>(1e-8) {
                continue;
            }
        }
        dedup.push(r);
    }
    if dedup.len() > max_roots {
        return Err(Error::contract(format!(
            "region contains {} roots, caller capped at {max_roots}",
            dedup.len()
        )));
    }
    Ok(dedup)
}

/// Minimum characteristic modulus along the imaginary axis over a
/// log-spaced grid of `n_samples` frequencies in `[s_min, s_max]`, both
/// signs of `s` included.
pub fn axis_margin<T: Real>(
    kind: CharacteristicKind,
    s_min: T,
    s_max: T,
    n_samples: usize,
) -> Result<T> {
    if !(s_min > T::zero()) || !(s_max > s_min) {
        return Err(Error::contract("axis_margin needs 0 < s_min < s_max"));
    }
    if n_samples < 2 {
        return Err(Error::contract("axis_margin needs at least 2 samples"));
    }
    let l0 = s_min.ln();
    let l1 = s_max.ln();
    let mut min = T::infinity();
    for k in 0..n_samples {
        let t = real::<T>(k as f64) / real::<T>((n_samples - 1) as f64);
        let s = (l0 + (l1 - l0) * t).exp();
        for sign in [T::one(), -T::one()] {
            let m = char_value(kind, Cplx::new(T::zero(), sign * s)).norm();
            min = min.min(m);
        }
    }
    Ok(min)
}

/// Asymptotic centre of the k-th eigenvalue branch.
fn branch_center<T: Real>(kind: CharacteristicKind, k: usize) -> Cplx<T> {
    let pi = T::PI();
    let y = match kind {
        CharacteristicKind::DirichletA => pi * real::<T>(k as f64),
        CharacteristicKind::NeumannB => pi * (real::<T>(k as f64) + real::<T>(0.5)),
    };
    Cplx::new(T::zero(), y)
}

/// Root of the k-th branch (k >= 1), via Newton from the asymptotic
/// expansion `lambda ~ center - 1/sqrt(center)` with a cell-search
/// fallback.
pub fn branch_root<T: Real>(kind: CharacteristicKind, k: usize) -> Result<RootRecord<T>> {
    let center = branch_center(kind, k);
    let band = Rectangle::new(
        real::<T>(-3.0),
        -real::<T>(1e-8),
        center.im - T::PI() * real::<T>(0.5),
        center.im + T::PI() * real::<T>(0.5),
    )?;
    let guess = center - principal_sqrt(center).inv();
    if let Some((z, resid, iters)) = newton_refine(kind, guess, &band) {
        if band.contains(z, T::zero()) {
            return Ok(RootRecord {
                lambda: z,
                residual: resid,
                cell: band,
                newton_iterations: iters,
            });
        }
    }
    let found = find_roots(kind, band, 4)?;
    found
        .into_iter()
        .min_by(|a, b| {
            (a.lambda - center)
                .norm()
                .partial_cmp(&(b.lambda - center).norm())
                .unwrap()
        })
        .ok_or_else(|| Error::contract(format!("branch root k = {k} not found")))
}

/// Fit `|Re lambda_k| = C |Im lambda_k|^p` over the first `n_branches`
/// eigenvalue branches. The measured exponent tracks how fast the point
/// spectrum approaches the imaginary axis.
pub fn eigen_locus_fit<T: Real>(
    kind: CharacteristicKind,
    n_branches: usize,
) -> Result<DecayFit<T>> {
    if n_branches < 4 {
        return Err(Error::contract("eigen_locus_fit needs n_branches >= 4"));
    }
    let mut xs = Vec::with_capacity(n_branches);
    let mut ys = Vec::with_capacity(n_branches);
    for k in 1..=n_branches {
        let root = branch_root(kind, k)?;
        xs.push(root.lambda.im.abs());
        ys.push(root.lambda.re.abs());
    }
    fit::power_law_fit(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    type C = Cplx<f64>;

    #[test]
    fn principal_sqrt_examples() {
        assert_eq!(principal_sqrt(C::new(1.0, 0.0)), C::new(1.0, 0.0));
        let i = principal_sqrt(C::new(-1.0, 0.0));
        assert_relative_eq!(i.re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(i.im, 1.0, epsilon = 1e-15);
        // negative zero imaginary part still resolves to the upper branch
        let i2 = principal_sqrt(C::new(-4.0, -0.0));
        assert_relative_eq!(i2.im, 2.0, epsilon = 1e-15);
        let r = principal_sqrt(C::new(0.0, 1.0));
        let e = (2.0f64).sqrt() / 2.0;
        assert_relative_eq!(r.re, e, epsilon = 1e-15);
        assert_relative_eq!(r.im, e, epsilon = 1e-15);
    }

    #[test]
    fn characteristic_anchors() {
        let e = char_value(CharacteristicKind::DirichletA, C::new(1.0, 0.0));
        assert_relative_eq!(e.re, std::f64::consts::E, max_relative = 1e-14);
        assert_relative_eq!(e.im, 0.0, epsilon = 1e-15);
        let one = char_value(CharacteristicKind::DirichletA, C::new(0.0, 0.0));
        assert_eq!(one, C::new(1.0, 0.0));
        let zero = char_value(CharacteristicKind::NeumannB, C::new(0.0, 0.0));
        assert_eq!(zero, C::new(0.0, 0.0));
    }

    #[test]
    fn char_derivative_matches_finite_differences() {
        for kind in [CharacteristicKind::DirichletA, CharacteristicKind::NeumannB] {
            for z in [C::new(-0.5, 3.0), C::new(1.2, -0.7), C::new(-2.0, 9.4)] {
                let h = 1e-6;
                let fd = (char_value(kind, z + C::new(h, 0.0))
                    - char_value(kind, z - C::new(h, 0.0)))
                    / C::new(2.0 * h, 0.0);
                let an = char_derivative(kind, z);
                assert!((fd - an).norm() < 1e-7 * an.norm().max(1.0));
            }
        }
    }

    #[test]
    fn axis_margin_meets_the_one_third_bound() {
        let m = axis_margin(CharacteristicKind::DirichletA, 1e-3, 1e-1, 2048).unwrap();
        assert!(m >= 1.0 / 3.0, "margin {m}");
        let m = axis_margin(CharacteristicKind::DirichletA, 10.0, 1e4, 8192).unwrap();
        assert!(m >= 1.0 / 3.0, "margin {m}");
        let m = axis_margin(CharacteristicKind::DirichletA, 1e-4, 1e4, 16384).unwrap();
        assert!(m > 0.0);
        assert!(axis_margin(CharacteristicKind::DirichletA, 0.0, 1.0, 16).is_err());
    }

    #[test]
    fn first_dirichlet_root_sits_near_i_pi() {
        let region = Rectangle::new(-2.0, -1e-6, 2.0, 5.0).unwrap();
        let roots = find_roots(CharacteristicKind::DirichletA, region, 8).unwrap();
        assert_eq!(roots.len(), 1);
        let r = &roots[0];
        assert!(r.residual < 1e-10);
        assert!(r.lambda.re < 0.0);
        // asymptotic location: i pi - exp(-i pi / 4) / sqrt(pi)
        let guess = C::new(0.0, std::f64::consts::PI)
            - principal_sqrt(C::new(0.0, std::f64::consts::PI)).inv();
        assert!((r.lambda - guess).norm() < 0.1, "root {:?}", r.lambda);
        // independent recount
        let (w, _) = winding_number_by_phase(CharacteristicKind::DirichletA, &region, 1024);
        assert_eq!(w, 1);
    }

    #[test]
    fn low_band_is_root_free() {
        let region = Rectangle::new(-2.0, -1e-6, 0.1, 2.0).unwrap();
        let roots = find_roots(CharacteristicKind::DirichletA, region, 8).unwrap();
        assert!(roots.is_empty());
    }

    #[test]
    fn neumann_roots_come_in_conjugate_pairs() {
        let region = Rectangle::new(-1.5, -1e-4, -6.0, 6.0).unwrap();
        let roots = find_roots(CharacteristicKind::NeumannB, region, 8).unwrap();
        assert_eq!(roots.len(), 2, "roots: {roots:?}");
        let a = roots[0].lambda;
        let b = roots[1].lambda;
        assert!((a - b.conj()).norm() < 1e-8);
        for r in &roots {
            assert!(r.lambda.re < 0.0);
        }
    }

    #[test]
    fn region_pre_conditions_are_enforced() {
        let region = Rectangle::new(-2.0, 0.5, 1.0, 2.0).unwrap();
        assert!(find_roots(CharacteristicKind::DirichletA, region, 8).is_err());
        let region = Rectangle::new(-2.0, -1e-6, 2.0, 5.0).unwrap();
        assert!(find_roots(CharacteristicKind::DirichletA, region, 0).is_err());
    }

    #[test]
    fn locus_exponent_is_minus_half() {
        let fit = eigen_locus_fit::<f64>(CharacteristicKind::DirichletA, 12).unwrap();
        assert!(
            (fit.exponent + 0.5).abs() < 0.1,
            "exponent {}",
            fit.exponent
        );
        // a 4-branch fit is still defined, just looser
        let fit4 = eigen_locus_fit::<f64>(CharacteristicKind::DirichletA, 4).unwrap();
        assert!(fit4.residual.is_finite());
    }

    #[test]
    fn conjugate_reflection_off_the_cut() {
        // char(conj z) = conj(char z) for Re z > 0
        for z in [C::new(0.5, 2.0), C::new(2.0, -7.0), C::new(0.1, 0.3)] {
            let a = char_value(CharacteristicKind::DirichletA, z.conj());
            let b = char_value(CharacteristicKind::DirichletA, z).conj();
            assert!((a - b).norm() <= 1e-13 * b.norm().max(1.0));
        }
    }
}
