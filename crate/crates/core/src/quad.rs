//! Quadrature helpers on uniform grids.
//!
//! Two families:
//! * panel-cubic rules (4th order) for plain and cumulative integrals;
//! * product integration of exponential kernels against the cubic
//!   interpolant of the data, exact in the kernel. Prefix recursions built
//!   on these stay stable because every exponent points in the decaying
//!   direction.

use crate::scalar::{real, Cplx, Real};

/// Composite Simpson weights for `n` (odd, >= 3) points spaced `h`.
pub fn simpson_weights<T: Real>(n: usize, h: T) -> Vec<T> {
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd point count >= 3");
    let third = h / real::<T>(3.0);
    let mut w = vec![third; n];
    for (i, wi) in w.iter_mut().enumerate().take(n - 1).skip(1) {
        *wi = if i % 2 == 1 {
            third * real::<T>(4.0)
        } else {
            third * real::<T>(2.0)
        };
    }
    w
}

/// Coefficients of the cubic Lagrange basis over four integer offsets.
///
/// `coeffs[j][m]` is the theta^m coefficient of `L_j`, with theta measured
/// from the panel's left node (offset 0 in `offsets`).
fn lagrange_coeffs<T: Real>(offsets: &[i64; 4]) -> [[T; 4]; 4] {
    let mut out = [[T::zero(); 4]; 4];
    for j in 0..4 {
        // numerator polynomial prod_{k != j} (theta - o_k)
        let mut poly = [T::zero(); 4];
        poly[0] = T::one();
        let mut deg = 0;
        let mut denom = T::one();
        for k in 0..4 {
            if k == j {
                continue;
            }
            let ok = real::<T>(offsets[k] as f64);
            denom = denom * (real::<T>(offsets[j] as f64) - ok);
            // poly *= (theta - ok)
            let mut next = [T::zero(); 4];
            for m in 0..=deg {
                next[m + 1] = next[m + 1] + poly[m];
                next[m] = next[m] - poly[m] * ok;
            }
            poly = next;
            deg += 1;
        }
        for m in 0..4 {
            out[j][m] = poly[m] / denom;
        }
    }
    out
}

fn panel_offsets(n_panels: usize, p: usize) -> [i64; 4] {
    if p == 0 {
        [0, 1, 2, 3]
    } else if p + 1 == n_panels {
        [-2, -1, 0, 1]
    } else {
        [-1, 0, 1, 2]
    }
}

fn stencil_start(n: usize, p: usize) -> usize {
    if p == 0 {
        0
    } else if p + 2 >= n {
        n - 4
    } else {
        p - 1
    }
}

/// Weights of `int_0^1 L_j(theta) dtheta` for a given offset pattern.
fn plain_panel_weights<T: Real>(offsets: &[i64; 4]) -> [T; 4] {
    let c = lagrange_coeffs::<T>(offsets);
    let mut w = [T::zero(); 4];
    for j in 0..4 {
        for (m, cm) in c[j].iter().enumerate() {
            w[j] = w[j] + *cm / real::<T>((m + 1) as f64);
        }
    }
    w
}

/// Cumulative integral from the left end: `out[i] = int_{x_0}^{x_i} f`.
///
/// 4th order on four or more points; quadratic panels on three.
pub fn cumulative<T: Real>(values: &[Cplx<T>], h: T) -> Vec<Cplx<T>> {
    let n = values.len();
    let zero = Cplx::new(T::zero(), T::zero());
    assert!(n >= 2, "cumulative integral needs at least 2 points");
    let mut out = vec![zero; n];
    if n == 2 {
        out[1] = (values[0] + values[1]) * (h / real::<T>(2.0));
        return out;
    }
    if n == 3 {
        let c = h / real::<T>(12.0);
        out[1] = (values[0] * real::<T>(5.0) + values[1] * real::<T>(8.0) - values[2]) * c;
        out[2] = out[1]
            + (-values[0] + values[1] * real::<T>(8.0) + values[2] * real::<T>(5.0)) * c;
        return out;
    }
    let patterns = [
        plain_panel_weights::<T>(&[0, 1, 2, 3]),
        plain_panel_weights::<T>(&[-1, 0, 1, 2]),
        plain_panel_weights::<T>(&[-2, -1, 0, 1]),
    ];
    for p in 0..n - 1 {
        let start = stencil_start(n, p);
        let w = if p == 0 {
            &patterns[0]
        } else if p + 2 >= n {
            &patterns[2]
        } else {
            &patterns[1]
        };
        let mut acc = zero;
        for (k, wk) in w.iter().enumerate() {
            acc = acc + values[start + k] * *wk;
        }
        out[p + 1] = out[p] + acc * h;
    }
    out
}

/// Reverse cumulative integral: `out[i] = int_{x_i}^{x_{n-1}} f`.
///
/// Accumulated from the right so a compactly supported tail stays exactly
/// zero beyond the support.
pub fn cumulative_from_right<T: Real>(values: &[Cplx<T>], h: T) -> Vec<Cplx<T>> {
    let n = values.len();
    let zero = Cplx::new(T::zero(), T::zero());
    assert!(n >= 2);
    let mut out = vec![zero; n];
    if n == 2 {
        out[0] = (values[0] + values[1]) * (h / real::<T>(2.0));
        return out;
    }
    if n == 3 {
        let c = h / real::<T>(12.0);
        out[1] = (values[1] * real::<T>(8.0) + values[2] * real::<T>(5.0) - values[0]) * c;
        out[0] = out[1]
            + (values[0] * real::<T>(5.0) + values[1] * real::<T>(8.0) - values[2]) * c;
        return out;
    }
    let patterns = [
        plain_panel_weights::<T>(&[0, 1, 2, 3]),
        plain_panel_weights::<T>(&[-1, 0, 1, 2]),
        plain_panel_weights::<T>(&[-2, -1, 0, 1]),
    ];
    for p in (0..n - 1).rev() {
        let start = stencil_start(n, p);
        let w = if p == 0 {
            &patterns[0]
        } else if p + 2 >= n {
            &patterns[2]
        } else {
            &patterns[1]
        };
        let mut acc = zero;
        for (k, wk) in w.iter().enumerate() {
            acc = acc + values[start + k] * *wk;
        }
        out[p] = out[p + 1] + acc * h;
    }
    out
}

/// Moments `psi_m(w) = int_0^1 theta^m e^{w theta} dtheta` for m = 0..3.
///
/// Series below |w| = 2, upward recursion above; both branches are stable
/// for the decaying and oscillatory exponents used here.
pub fn exp_moments<T: Real>(w: Cplx<T>) -> [Cplx<T>; 4] {
    let one = Cplx::new(T::one(), T::zero());
    if w.norm() < real::<T>(2.0) {
        let mut out = [Cplx::new(T::zero(), T::zero()); 4];
        for (m, slot) in out.iter_mut().enumerate() {
            // sum_k w^k / (k! (m + k + 1))
            let mut term = one / real::<T>((m + 1) as f64);
            let mut acc = term;
            let mut k = 1usize;
            loop {
                term = term * w * (real::<T>((m + k) as f64))
                    / (real::<T>(k as f64) * real::<T>((m + k + 1) as f64));
                acc += term;
                if term.norm() <= acc.norm() * real::<T>(1e-20) || k > 48 {
                    break;
                }
                k += 1;
            }
            *slot = acc;
        }
        out
    } else {
        let ew = w.exp();
        let mut out = [Cplx::new(T::zero(), T::zero()); 4];
        out[0] = (ew - one) / w;
        for m in 1..4 {
            out[m] = (ew - out[m - 1] * real::<T>(m as f64)) / w;
        }
        out
    }
}

/// Product-integration weights: `pw[j] = int_0^1 L_j(theta) e^{w theta} dtheta`
/// for the cubic Lagrange basis on `offsets`.
pub fn product_panel_weights<T: Real>(w: Cplx<T>, offsets: &[i64; 4]) -> [Cplx<T>; 4] {
    let c = lagrange_coeffs::<T>(offsets);
    let psi = exp_moments(w);
    let mut pw = [Cplx::new(T::zero(), T::zero()); 4];
    for j in 0..4 {
        for m in 0..4 {
            pw[j] = pw[j] + psi[m] * c[j][m];
        }
    }
    pw
}

/// Partial-panel product weights over `theta` in `[0, frac]`, 0 < frac <= 1.
pub fn product_panel_weights_partial<T: Real>(
    w: Cplx<T>,
    offsets: &[i64; 4],
    frac: T,
) -> [Cplx<T>; 4] {
    let c = lagrange_coeffs::<T>(offsets);
    let psi = exp_moments(w * frac);
    let mut pw = [Cplx::new(T::zero(), T::zero()); 4];
    for j in 0..4 {
        let mut fp = frac; // frac^{m+1}
        for m in 0..4 {
            pw[j] = pw[j] + psi[m] * (c[j][m] * fp);
            fp = fp * frac;
        }
    }
    pw
}

/// One pass of exponential product integration over the whole grid:
/// `int_{x_0}^{x_{n-1}} f(r) e^{mu (r - x_0)} dr` with `f` interpolated by
/// sliding cubics. Exponents are measured panel-locally, so only `mu * h`
/// and the accumulated per-panel factor `e^{mu h}` appear.
pub fn integral_against_exp<T: Real>(values: &[Cplx<T>], h: T, mu: Cplx<T>) -> Cplx<T> {
    let n = values.len();
    assert!(n >= 4, "product integration needs at least 4 points");
    let w = mu * h;
    let patterns = [
        product_panel_weights(w, &[0, 1, 2, 3]),
        product_panel_weights(w, &[-1, 0, 1, 2]),
        product_panel_weights(w, &[-2, -1, 0, 1]),
    ];
    let step = w.exp();
    let mut prefac = Cplx::new(T::one(), T::zero());
    let mut acc = Cplx::new(T::zero(), T::zero());
    for p in 0..n - 1 {
        let start = stencil_start(n, p);
        let pw = if p == 0 {
            &patterns[0]
        } else if p + 2 >= n {
            &patterns[2]
        } else {
            &patterns[1]
        };
        let mut panel = Cplx::new(T::zero(), T::zero());
        for (k, pwk) in pw.iter().enumerate() {
            panel = panel + values[start + k] * *pwk;
        }
        acc = acc + panel * prefac * h;
        prefac = prefac * step;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_weights_sum_to_the_interval() {
        let w = simpson_weights::<f64>(101, 0.25);
        let sum: f64 = w.iter().sum();
        assert_relative_eq!(sum, 25.0, epsilon = 1e-12);
    }

    #[test]
    fn cumulative_is_fourth_order() {
        let f = |x: f64| (2.5 * x).cos() * x.exp();
        let truth = |x: f64| {
            // int_0^x cos(2.5 r) e^r dr
            let d = 1.0 + 2.5 * 2.5;
            ((2.5 * x).cos() * x.exp() + 2.5 * (2.5 * x).sin() * x.exp() - 1.0) / d
        };
        let err = |n: usize| {
            let h = 1.0 / (n as f64 - 1.0);
            let v: Vec<_> = (0..n)
                .map(|i| Cplx::new(f(i as f64 * h), 0.0))
                .collect();
            let c = cumulative(&v, h);
            c.iter()
                .enumerate()
                .map(|(i, z)| (z.re - truth(i as f64 * h)).abs())
                .fold(0.0, f64::max)
        };
        let rate = (err(51) / err(101)).log2();
        assert!(rate > 3.5, "rate {rate}");
    }

    #[test]
    fn reverse_cumulative_keeps_exact_zero_tails() {
        let n = 101;
        let h = 0.1;
        let mut v = vec![Cplx::new(0.0, 0.0); n];
        for (i, vi) in v.iter_mut().enumerate().take(40) {
            *vi = Cplx::new((i as f64 * h).sin(), 0.0);
        }
        let tail = cumulative_from_right(&v, h);
        for z in tail.iter().skip(44) {
            assert_eq!(z.re, 0.0);
        }
        // consistency with forward cumulative: tail[0] = total integral
        let fwd = cumulative(&v, h);
        assert_relative_eq!(tail[0].re, fwd[n - 1].re, epsilon = 1e-12);
    }

    #[test]
    fn exp_moments_match_closed_forms() {
        for &w in &[
            Cplx::new(0.3, -0.1),
            Cplx::new(-4.0, 2.0),
            Cplx::new(0.0, 25.0),
            Cplx::new(-40.0, 40.0),
        ] {
            let psi = exp_moments(w);
            let one = Cplx::new(1.0, 0.0);
            let ew = w.exp();
            assert_relative_eq!(
                (psi[0] - (ew - one) / w).norm(),
                0.0,
                epsilon = 1e-13 * psi[0].norm().max(1e-3)
            );
            // int theta e^{w theta} = (e^w (w - 1) + 1) / w^2
            let p1 = (ew * (w - one) + one) / (w * w);
            assert_relative_eq!((psi[1] - p1).norm(), 0.0, epsilon = 1e-12 * p1.norm().max(1e-4));
        }
    }

    #[test]
    fn product_integration_is_exact_for_cubics() {
        // f cubic, kernel strongly oscillatory: the rule must be exact
        let n = 33;
        let h = 1.0 / (n as f64 - 1.0);
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x + x * x * x;
        let v: Vec<_> = (0..n).map(|i| Cplx::new(f(i as f64 * h), 0.0)).collect();
        let mu = Cplx::new(0.0, 57.0);
        let got = integral_against_exp(&v, h, mu);
        // oracle: fine Simpson on 80001 points
        let m = 80001;
        let hh = 1.0 / (m as f64 - 1.0);
        let wts = simpson_weights::<f64>(m, hh);
        let mut truth = Cplx::new(0.0, 0.0);
        for i in 0..m {
            let x = i as f64 * hh;
            truth += Cplx::new(f(x), 0.0) * (mu * x).exp() * wts[i];
        }
        assert!((got - truth).norm() < 1e-9, "err {}", (got - truth).norm());
    }
}
