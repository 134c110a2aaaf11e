//! Closed-form application of the resolvent `(lambda - A)^{-1}` of the
//! Dirichlet-wall generator, resolvent-norm estimation along the imaginary
//! axis, and the approximate eigenvectors living on the continuous
//! spectrum.
//!
//! Given data `y = (f, g, h)`, the image `x = (u, v, w)` is assembled from
//!
//! ```text
//! u(xi) = a sinh(lambda (xi+1)) - U(xi),
//! U(xi) = (1/lambda) int_{-1}^xi sinh(lambda (xi-r)) (lambda f + g)(r) dr,
//! v     = lambda u - f,
//! w(xi) = (G * h)(xi) + b e^{-sqrt(lambda) xi},
//! ```
//!
//! with `(a, b)` solving the 2x2 interface system whose determinant is
//! `lambda (cosh lambda + sqrt(lambda) sinh lambda)`. All quadratures are
//! product integrations: exponential kernels are integrated exactly
//! against sliding cubic interpolants of the data, so the sampled output
//! solves the ODEs exactly for the interpolated data and every prefix
//! recursion runs in its decaying direction.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::quad::{
    self, product_panel_weights, product_panel_weights_partial,
};
use crate::scalar::{cplx, real, Cplx, Real};
use crate::spectral::{char_value, principal_sqrt, CharacteristicKind};
use crate::state::{State, Variant};
use crate::synth::smoothstep_bump;

/// Margin kept from the point spectrum: `|char(lambda)|` must exceed this.
pub const EIGENVALUE_MARGIN: f64 = 1e-8;
/// Tolerance on the interface determinant.
pub const DET_TOLERANCE: f64 = 1e-12;
/// Accepted relative residual of the reconstructed coupling rows.
pub const COUPLING_TOLERANCE: f64 = 1e-8;
/// Largest |Re lambda| before the hyperbolic prefactors lose precision.
const MAX_RE_LAMBDA: f64 = 30.0;

// ---------------------------------------------------------------------------
// product-integration building blocks
// ---------------------------------------------------------------------------

fn offsets_for_panel(n: usize, p: usize) -> ([i64; 4], usize) {
    if p == 0 {
        ([0, 1, 2, 3], 0)
    } else if p + 2 >= n {
        ([-2, -1, 0, 1], n - 4)
    } else {
        ([-1, 0, 1, 2], p - 1)
    }
}

fn reversed(offsets: &[i64; 4]) -> [i64; 4] {
    [
        1 - offsets[0],
        1 - offsets[1],
        1 - offsets[2],
        1 - offsets[3],
    ]
}

struct PanelRule<T: Real> {
    first: [Cplx<T>; 4],
    interior: [Cplx<T>; 4],
    last: [Cplx<T>; 4],
}

impl<T: Real> PanelRule<T> {
    /// Weights of `int_0^1 L_j(theta) e^{w theta} dtheta` per stencil kind.
    fn forward(w: Cplx<T>) -> Self {
        Self {
            first: product_panel_weights(w, &[0, 1, 2, 3]),
            interior: product_panel_weights(w, &[-1, 0, 1, 2]),
            last: product_panel_weights(w, &[-2, -1, 0, 1]),
        }
    }

    /// Weights of `int_0^1 L_j(theta) e^{w (1-theta)} dtheta` (exponent
    /// measured from the right edge of the panel).
    fn backward(w: Cplx<T>) -> Self {
        Self {
            first: product_panel_weights(w, &reversed(&[0, 1, 2, 3])),
            interior: product_panel_weights(w, &reversed(&[-1, 0, 1, 2])),
            last: product_panel_weights(w, &reversed(&[-2, -1, 0, 1])),
        }
    }

    fn get(&self, n: usize, p: usize) -> (&[Cplx<T>; 4], usize) {
        if p == 0 {
            (&self.first, 0)
        } else if p + 2 >= n {
            (&self.last, n - 4)
        } else {
            (&self.interior, p - 1)
        }
    }
}

fn panel_sum<T: Real>(values: &[Cplx<T>], start: usize, w: &[Cplx<T>; 4]) -> Cplx<T> {
    values[start] * w[0]
        + values[start + 1] * w[1]
        + values[start + 2] * w[2]
        + values[start + 3] * w[3]
}

/// Prefix integrals `out[i] = int_{x_0}^{x_i} f(r) e^{mu (r - x_0)} dr`.
fn prefix_integral_exp<T: Real>(values: &[Cplx<T>], h: T, mu: Cplx<T>) -> Vec<Cplx<T>> {
    let n = values.len();
    let zero = Cplx::new(T::zero(), T::zero());
    let rule = PanelRule::forward(mu * h);
    let mut out = vec![zero; n];
    for p in 0..n - 1 {
        let (w, start) = rule.get(n, p);
        let pre = (mu * (h * real::<T>(p as f64))).exp();
        out[p + 1] = out[p] + panel_sum(values, start, w) * pre * h;
    }
    out
}

/// Backward heat tails `out[i] = int_{x_i}^{x_{n-1}} f(r) e^{-s (r - x_i)} dr`
/// for `s` with nonnegative real part; every factor decays.
fn tail_integral_exp<T: Real>(values: &[Cplx<T>], h: T, s: Cplx<T>) -> Vec<Cplx<T>> {
    let n = values.len();
    let zero = Cplx::new(T::zero(), T::zero());
    let rule = PanelRule::forward(-s * h);
    let step = (-s * h).exp();
    let mut out = vec![zero; n];
    for p in (0..n - 1).rev() {
        let (w, start) = rule.get(n, p);
        out[p] = panel_sum(values, start, w) * h + step * out[p + 1];
    }
    out
}

/// Forward decaying accumulations
/// `out[i] = int_{x_0}^{x_i} f(r) e^{-s (x_i - r)} dr`.
fn near_integral_exp<T: Real>(values: &[Cplx<T>], h: T, s: Cplx<T>) -> Vec<Cplx<T>> {
    let n = values.len();
    let zero = Cplx::new(T::zero(), T::zero());
    let rule = PanelRule::backward(-s * h);
    let step = (-s * h).exp();
    let mut out = vec![zero; n];
    for p in 0..n - 1 {
        let (w, start) = rule.get(n, p);
        out[p + 1] = step * out[p] + panel_sum(values, start, w) * h;
    }
    out
}

// ---------------------------------------------------------------------------
// wave-side particular solution
// ---------------------------------------------------------------------------

fn check_lambda<T: Real>(lambda: Cplx<T>) -> Result<()> {
    if lambda.norm() == T::zero() {
        return Err(Error::contract("lambda must be nonzero"));
    }
    if lambda.re.abs() > real::<T>(MAX_RE_LAMBDA) {
        return Err(Error::contract("|Re lambda| too large for stable evaluation"));
    }
    Ok(())
}

fn forcing<T: Real>(lambda: Cplx<T>, f: &GridFunction<T>, g: &GridFunction<T>) -> Result<Vec<Cplx<T>>> {
    if !f.same_grid(g) {
        return Err(Error::contract("f and g must share one grid"));
    }
    Ok(f
        .values()
        .iter()
        .zip(g.values())
        .map(|(&fv, &gv)| fv * lambda + gv)
        .collect())
}

struct WaveParticular<T: Real> {
    lambda: Cplx<T>,
    h: T,
    n: usize,
    forcing: Vec<Cplx<T>>,
    /// prefix integrals of e^{+lambda (r+1)} f and e^{-lambda (r+1)} f
    aplus: Vec<Cplx<T>>,
    aminus: Vec<Cplx<T>>,
}

impl<T: Real> WaveParticular<T> {
    fn build(lambda: Cplx<T>, f: &GridFunction<T>, g: &GridFunction<T>) -> Result<Self> {
        check_lambda(lambda)?;
        let fc = forcing(lambda, f, g)?;
        if fc.len() < 4 {
            return Err(Error::contract("wave grid needs at least 4 points"));
        }
        let h = f.spacing();
        Ok(Self {
            lambda,
            h,
            n: fc.len(),
            aplus: prefix_integral_exp(&fc, h, lambda),
            aminus: prefix_integral_exp(&fc, h, -lambda),
            forcing: fc,
        })
    }

    /// (U, U') at wave node `i`.
    fn at_node(&self, i: usize) -> (Cplx<T>, Cplx<T>) {
        let xi1 = self.h * real::<T>(i as f64); // xi + 1
        self.combine(xi1, self.aplus[i], self.aminus[i])
    }

    fn combine(&self, xi1: T, ap: Cplx<T>, am: Cplx<T>) -> (Cplx<T>, Cplx<T>) {
        let ep = (self.lambda * xi1).exp();
        let em = (-self.lambda * xi1).exp();
        let half = real::<T>(0.5);
        let u = (ep * am - em * ap) * half / self.lambda;
        let du = (ep * am + em * ap) * half;
        (u, du)
    }

    /// (U, U') at an arbitrary `xi` in [-1, 0].
    fn at(&self, xi: T) -> (Cplx<T>, Cplx<T>) {
        let xi1 = xi + T::one();
        let pos = xi1 / self.h;
        let k = pos
            .floor()
            .to_f64()
            .map(|v| v as usize)
            .unwrap_or(0)
            .min(self.n - 2);
        let frac = pos - real::<T>(k as f64);
        if frac.abs() < real::<T>(1e-12) {
            return self.at_node(k);
        }
        let (offs, start) = offsets_for_panel(self.n, k);
        let mut ap = self.aplus[k];
        let mut am = self.aminus[k];
        for (mu, acc) in [(self.lambda, &mut ap), (-self.lambda, &mut am)] {
            let w = product_panel_weights_partial(mu * self.h, &offs, frac);
            let pre = (mu * (self.h * real::<T>(k as f64))).exp();
            *acc = *acc + panel_sum(&self.forcing, start, &w) * pre * self.h;
        }
        self.combine(xi1, ap, am)
    }
}

/// Particular wave solution `U(xi)` (flag off) or its derivative `U'(xi)`
/// (flag on) for forcing `lambda f + g` on `[-1, xi]`.
pub fn u_particular<T: Real>(
    lambda: Cplx<T>,
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    xi: T,
    derivative: bool,
) -> Result<Cplx<T>> {
    if xi < -T::one() - real::<T>(1e-12) || xi > real::<T>(1e-12) {
        return Err(Error::contract("xi must lie in [-1, 0]"));
    }
    let wp = WaveParticular::build(lambda, f, g)?;
    let (u, du) = wp.at(xi);
    Ok(if derivative { du } else { u })
}

// ---------------------------------------------------------------------------
// heat side
// ---------------------------------------------------------------------------

/// `W(xi) = (1 / 2 sqrt(lambda)) int_xi^L h(r) e^{-sqrt(lambda) (r - xi)} dr`,
/// the outgoing part of the half-line heat solution (exact once `h`
/// vanishes beyond the truncation).
pub fn heat_tail<T: Real>(lambda: Cplx<T>, h: &GridFunction<T>, xi: T) -> Result<Cplx<T>> {
    check_lambda(lambda)?;
    if xi < -real::<T>(1e-12) || xi > h.right_endpoint() + real::<T>(1e-12) {
        return Err(Error::contract("xi must lie in [0, L]"));
    }
    let s = principal_sqrt(lambda);
    let eta = h.spacing();
    let n = h.n_points();
    let tails = tail_integral_exp(h.values(), eta, s);
    let pos = xi / eta;
    let k = pos
        .floor()
        .to_f64()
        .map(|v| v as usize)
        .unwrap_or(0)
        .min(n - 2);
    let frac = pos - real::<T>(k as f64);
    let two = real::<T>(2.0);
    if frac.abs() < real::<T>(1e-12) {
        return Ok(tails[k] / (s * two));
    }
    // partial panel from xi to the next node, then the stored tail
    let (offs, start) = offsets_for_panel(n, k);
    let rem = T::one() - frac;
    let partial = {
        // int_{frac}^{1} L_j(theta) e^{-s eta (theta - frac)} dtheta
        let shifted = shift_offsets(&offs, frac);
        let w = scaled_weights(-s * eta, &shifted, rem);
        panel_sum(h.values(), start, &w) * eta
    };
    let carry = (-s * (eta * rem)).exp() * tails[k + 1];
    Ok((partial + carry) / (s * two))
}

/// Lagrange coefficients on `offsets` re-expanded around `theta = frac`.
fn shift_offsets<T: Real>(offsets: &[i64; 4], frac: T) -> [[T; 4]; 4] {
    // coefficients of L_j(phi + frac) in powers of phi
    let mut out = [[T::zero(); 4]; 4];
    let c = lagrange_coeffs_public::<T>(offsets);
    for j in 0..4 {
        for m in 0..4 {
            // sum_k c[j][k] C(k, m) frac^{k - m}
            let mut acc = T::zero();
            for k in m..4 {
                let binom = match (k, m) {
                    (0, 0) => 1.0,
                    (1, 0) | (1, 1) => 1.0,
                    (2, 0) => 1.0,
                    (2, 1) => 2.0,
                    (2, 2) => 1.0,
                    (3, 0) => 1.0,
                    (3, 1) => 3.0,
                    (3, 2) => 3.0,
                    (3, 3) => 1.0,
                    _ => unreachable!(),
                };
                acc += c[j][k] * real::<T>(binom) * frac.powi((k - m) as i32);
            }
            out[j][m] = acc;
        }
    }
    out
}

fn lagrange_coeffs_public<T: Real>(offsets: &[i64; 4]) -> [[T; 4]; 4] {
    // cubic Lagrange basis coefficients in theta measured from offset 0
    let mut out = [[T::zero(); 4]; 4];
    for j in 0..4 {
        let mut poly = [T::zero(); 4];
        poly[0] = T::one();
        let mut deg = 0usize;
        let mut denom = T::one();
        for k in 0..4 {
            if k == j {
                continue;
            }
            let ok = real::<T>(offsets[k] as f64);
            denom = denom * (real::<T>(offsets[j] as f64) - ok);
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

/// `int_0^{span} phi^m e^{w_unit phi} dphi` weights for shifted coefficients.
fn scaled_weights<T: Real>(w_unit: Cplx<T>, shifted: &[[T; 4]; 4], span: T) -> [Cplx<T>; 4] {
    let psi = quad::exp_moments(w_unit * span);
    let mut out = [Cplx::new(T::zero(), T::zero()); 4];
    for j in 0..4 {
        let mut sp = span; // span^{m+1}
        for m in 0..4 {
            out[j] = out[j] + psi[m] * (shifted[j][m] * sp);
            sp = sp * span;
        }
    }
    out
}

/// Convolution of `h` with the half-line heat kernel
/// `G(xi) = e^{-sqrt(lambda) |xi|} / (2 sqrt(lambda))`, sampled on `h`'s
/// grid via the outgoing/incoming splitting.
pub fn green_convolve<T: Real>(lambda: Cplx<T>, h: &GridFunction<T>) -> Result<GridFunction<T>> {
    check_lambda(lambda)?;
    if h.n_points() < 4 {
        return Err(Error::contract("heat grid needs at least 4 points"));
    }
    let s = principal_sqrt(lambda);
    let eta = h.spacing();
    let tails = tail_integral_exp(h.values(), eta, s);
    let nears = near_integral_exp(h.values(), eta, s);
    let den = s * real::<T>(2.0);
    let values = tails
        .iter()
        .zip(&nears)
        .map(|(&t, &p)| (t + p) / den)
        .collect();
    GridFunction::new(h.left_endpoint(), h.right_endpoint(), values)
}

// ---------------------------------------------------------------------------
// interface system and full application
// ---------------------------------------------------------------------------

/// Solve the 2x2 interface system for the free constants `(a, b)`.
pub fn solve_interface<T: Real>(lambda: Cplx<T>, y: &State<T>) -> Result<(Cplx<T>, Cplx<T>)> {
    let (a, b, _, _) = interface_pieces(lambda, y)?;
    Ok((a, b))
}

fn interface_pieces<T: Real>(
    lambda: Cplx<T>,
    y: &State<T>,
) -> Result<(Cplx<T>, Cplx<T>, WaveParticular<T>, Cplx<T>)> {
    check_lambda(lambda)?;
    let s = principal_sqrt(lambda);
    let wp = WaveParticular::build(lambda, &y.u, &y.v)?;
    let (u0, du0) = wp.at_node(wp.n - 1);
    let w0 = heat_tail(lambda, &y.w, T::zero())?;
    let ch = lambda.cosh();
    let sh = lambda.sinh();
    let det = lambda * (ch + s * sh);
    if det.norm() < real::<T>(DET_TOLERANCE) {
        return Err(Error::NearEigenvalue {
            re: lambda.re.to_f64().unwrap_or(f64::NAN),
            im: lambda.im.to_f64().unwrap_or(f64::NAN),
            det_abs: det.norm().to_f64().unwrap_or(0.0),
        });
    }
    let rhs1 = lambda * u0 + y.u.last() + w0;
    let rhs2 = du0 + s * w0;
    // M = [lambda sinh, -1; lambda cosh, sqrt(lambda)]
    let a = (s * rhs1 + rhs2) / det;
    let b = (-lambda * ch * rhs1 + lambda * sh * rhs2) / det;
    Ok((a, b, wp, w0))
}

/// Input bundle for a resolvent application.
#[derive(Debug, Clone)]
pub struct ResolventInput<T: Real> {
    pub lambda: Cplx<T>,
    pub y: State<T>,
}

impl<T: Real> ResolventInput<T> {
    /// Validates the eigenvalue margin and the heat-truncation bound
    /// `L >= 12 / Re sqrt(lambda)` so the outgoing tail is negligible at L.
    pub fn new(lambda: Cplx<T>, y: State<T>) -> Result<Self> {
        if y.variant != Variant::DirichletA {
            return Err(Error::contract(
                "the closed-form resolvent applies to the DirichletA variant",
            ));
        }
        check_lambda(lambda)?;
        let margin = char_value(CharacteristicKind::DirichletA, lambda).norm();
        if margin <= real::<T>(EIGENVALUE_MARGIN) {
            return Err(Error::NearEigenvalue {
                re: lambda.re.to_f64().unwrap_or(f64::NAN),
                im: lambda.im.to_f64().unwrap_or(f64::NAN),
                det_abs: margin.to_f64().unwrap_or(0.0),
            });
        }
        let re_sqrt = principal_sqrt(lambda).re;
        let needed = real::<T>(12.0) / re_sqrt;
        if y.heat_truncation() < needed {
            return Err(Error::contract(format!(
                "heat truncation {} shorter than 12 / Re sqrt(lambda) = {}",
                y.heat_truncation(),
                needed
            )));
        }
        Ok(Self { lambda, y })
    }
}

/// Relative residuals of the three reconstructed coupling rows.
#[derive(Debug, Clone, Copy)]
pub struct CouplingResiduals<T: Real> {
    /// |u(-1)| / scale
    pub u_left: T,
    /// |v(0) - w(0)| / scale
    pub value_match: T,
    /// |u'(0) - w'(0)| / scale
    pub flux_match: T,
}

impl<T: Real> CouplingResiduals<T> {
    pub fn max(&self) -> T {
        self.u_left.max(self.value_match).max(self.flux_match)
    }
}

/// Resolvent image together with the analytic derivative of its first slot
/// and the verified coupling residuals.
#[derive(Debug, Clone)]
pub struct ResolventSolution<T: Real> {
    pub state: State<T>,
    pub u_derivative: GridFunction<T>,
    pub couplings: CouplingResiduals<T>,
}

/// Apply the resolvent to `input.y`, sampling the image on the data grids.
pub fn apply_resolvent<T: Real>(input: &ResolventInput<T>) -> Result<ResolventSolution<T>> {
    let lambda = input.lambda;
    let y = &input.y;
    let (a, b, wp, _w0) = interface_pieces(lambda, y)?;
    let s = principal_sqrt(lambda);

    let wave_n = y.u.n_points();
    let mut uvals = Vec::with_capacity(wave_n);
    let mut duvals = Vec::with_capacity(wave_n);
    let mut vvals = Vec::with_capacity(wave_n);
    for i in 0..wave_n {
        let xi1 = y.u.xi(i) + T::one();
        let (up, dup) = wp.at_node(i);
        let u = a * (lambda * xi1).sinh() - up;
        let du = a * lambda * (lambda * xi1).cosh() - dup;
        uvals.push(u);
        duvals.push(du);
        vvals.push(lambda * u - y.u.values()[i]);
    }

    let green = green_convolve(lambda, &y.w)?;
    let heat_n = y.w.n_points();
    let mut wvals = Vec::with_capacity(heat_n);
    for i in 0..heat_n {
        let xi = y.w.xi(i);
        wvals.push(green.values()[i] + b * (-s * xi).exp());
    }

    let u = GridFunction::new(-T::one(), T::zero(), uvals)?;
    let du = GridFunction::new(-T::one(), T::zero(), duvals)?;
    let v = GridFunction::new(-T::one(), T::zero(), vvals)?;
    let w = GridFunction::new(T::zero(), y.w.right_endpoint(), wvals)?;

    // derivative of w at 0: (G*h)'(0) = sqrt(lambda) W(0) and the free tail
    let w_tail0 = heat_tail(lambda, &y.w, T::zero())?;
    let dw0 = s * w_tail0 - s * b;

    let scale = y.norm()?.max(y.u.max_abs()).max(y.w.max_abs()).max(
        real::<T>(1e-300),
    );
    let couplings = CouplingResiduals {
        u_left: u.first().norm() / scale,
        value_match: (v.last() - w.first()).norm() / scale,
        flux_match: (du.last() - dw0).norm() / scale,
    };
    if couplings.max() > real::<T>(COUPLING_TOLERANCE) {
        return Err(Error::NotConverged {
            what: "interface coupling residuals of the resolvent image".into(),
            last: couplings.max().to_f64().unwrap_or(f64::NAN),
            previous: COUPLING_TOLERANCE,
        });
    }

    let state = State::new(Variant::DirichletA, u, v, w)?;
    Ok(ResolventSolution {
        state,
        u_derivative: du,
        couplings,
    })
}

// ---------------------------------------------------------------------------
// operator-norm estimation along the imaginary axis
// ---------------------------------------------------------------------------

/// One estimate of `||R(i s, A)||` on a discretised state space.
#[derive(Debug, Clone, Copy)]
pub struct ScanPoint<T: Real> {
    pub s: T,
    pub norm_estimate: T,
    pub iterations: u32,
    pub grid_n: usize,
    pub truncation: T,
}

/// Heat truncation used by the scan at frequency `s`: the outgoing tail
/// decays like `e^{-sqrt(|s|/2) xi}`, so this keeps it below `e^{-12}`.
pub fn scan_truncation<T: Real>(s: T) -> T {
    let twelve_sqrt2 = real::<T>(12.0) * real::<T>(2.0).sqrt();
    real::<T>(40.0).max(twelve_sqrt2 / s.abs().sqrt())
}

struct DiscreteMap<T: Real> {
    lambda: Cplx<T>,
    wave: GridFunction<T>,
    heat: GridFunction<T>,
    sqrt_w_wave: Vec<T>,
    sqrt_w_heat: Vec<T>,
}

impl<T: Real> DiscreteMap<T> {
    fn new(s: T, grid_n: usize, trunc: T) -> Result<Self> {
        let wave = GridFunction::zeros(-T::one(), T::zero(), grid_n)?;
        let heat = GridFunction::zeros(T::zero(), trunc, grid_n)?;
        let sqrt_w_wave = wave.weights().iter().map(|w| w.sqrt()).collect();
        let sqrt_w_heat = heat.weights().iter().map(|w| w.sqrt()).collect();
        Ok(Self {
            lambda: Cplx::new(T::zero(), s),
            wave,
            heat,
            sqrt_w_wave,
            sqrt_w_heat,
        })
    }

    fn dim(&self) -> usize {
        2 * self.wave.n_points() + self.heat.n_points()
    }

    /// Apply the weighted resolvent map: coordinates are
    /// `(sqrt(w) f', sqrt(w) g, sqrt(w) h)` so the Euclidean norm equals
    /// the state norm on both sides.
    fn apply(&self, z: &[Cplx<T>]) -> Result<Vec<Cplx<T>>> {
        let nw = self.wave.n_points();
        let nh = self.heat.n_points();
        let mut fprime = self.wave.clone();
        let mut g = self.wave.clone();
        let mut h = self.heat.clone();
        for i in 0..nw {
            fprime.values_mut()[i] = z[i] / self.sqrt_w_wave[i];
            g.values_mut()[i] = z[nw + i] / self.sqrt_w_wave[i];
        }
        for i in 0..nh {
            h.values_mut()[i] = z[2 * nw + i] / self.sqrt_w_heat[i];
        }
        // first slot is parameterised by its derivative; rebuild f with
        // f(-1) = 0 so the norm identity is exact
        let f = fprime.cumulative();
        let y = State::new(Variant::DirichletA, f, g, h)?;
        let input = ResolventInput::new(self.lambda, y)?;
        let sol = apply_resolvent(&input)?;
        let mut out = vec![Cplx::new(T::zero(), T::zero()); self.dim()];
        for i in 0..nw {
            out[i] = sol.u_derivative.values()[i] * self.sqrt_w_wave[i];
            out[nw + i] = sol.state.v.values()[i] * self.sqrt_w_wave[i];
        }
        for i in 0..nh {
            out[2 * nw + i] = sol.state.w.values()[i] * self.sqrt_w_heat[i];
        }
        Ok(out)
    }
}

fn norm2<T: Real>(z: &[Cplx<T>]) -> T {
    z.iter()
        .map(|v| v.norm_sqr())
        .fold(T::zero(), |a, b| a + b)
        .sqrt()
}

/// Estimate `||R(i s, A)||` by block power iteration on the assembled
/// discrete map composed with its adjoint in the weighted inner product.
pub fn resolvent_norm<T: Real>(s: T, grid_n: usize) -> Result<ScanPoint<T>> {
    if s == T::zero() {
        return Err(Error::contract("resolvent_norm needs s != 0"));
    }
    if grid_n < 101 || grid_n % 2 == 0 {
        return Err(Error::contract("grid_n must be odd and at least 101"));
    }
    let trunc = scan_truncation(s);
    let map = DiscreteMap::new(s, grid_n, trunc)?;
    let n = map.dim();

    // assemble the matrix column by column (each column is one resolvent
    // application on a weighted basis vector)
    let mut columns = vec![Cplx::new(T::zero(), T::zero()); n * n];
    let mut e = vec![Cplx::new(T::zero(), T::zero()); n];
    for j in 0..n {
        e[j] = Cplx::new(T::one(), T::zero());
        let col = map.apply(&e)?;
        e[j] = Cplx::new(T::zero(), T::zero());
        for i in 0..n {
            columns[i * n + j] = col[i];
        }
    }
    let matvec = |x: &[Cplx<T>]| -> Vec<Cplx<T>> {
        let mut out = vec![Cplx::new(T::zero(), T::zero()); n];
        for i in 0..n {
            let row = &columns[i * n..(i + 1) * n];
            let mut acc = Cplx::new(T::zero(), T::zero());
            for (m, x) in row.iter().zip(x) {
                acc = acc + *m * *x;
            }
            out[i] = acc;
        }
        out
    };
    let matvec_adj = |x: &[Cplx<T>]| -> Vec<Cplx<T>> {
        let mut out = vec![Cplx::new(T::zero(), T::zero()); n];
        for i in 0..n {
            let row = &columns[i * n..(i + 1) * n];
            let xi = x[i];
            for (o, m) in out.iter_mut().zip(row) {
                *o = *o + m.conj() * xi;
            }
        }
        out
    };

    // block power iteration on M* M with a deterministic seeded start
    let seed = s.to_f64().unwrap_or(0.0).to_bits() ^ (grid_n as u64);
    let mut rng = crate::synth::seeded_rng(seed);
    let block = 4usize;
    let mut q: Vec<Vec<Cplx<T>>> = (0..block)
        .map(|_| {
            (0..n)
                .map(|_| cplx::<T>(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    orthonormalize(&mut q);
    let tol = real::<T>(1e-6);
    let mut sigma_prev = T::zero();
    for it in 1..=200u32 {
        let mut next: Vec<Vec<Cplx<T>>> = Vec::with_capacity(block);
        for qi in &q {
            let y = matvec(qi);
            next.push(matvec_adj(&y));
        }
        q = next;
        orthonormalize(&mut q);
        let sigma = norm2(&matvec(&q[0]));
        if (sigma - sigma_prev).abs() <= tol * sigma.max(real::<T>(1e-300)) {
            return Ok(ScanPoint {
                s,
                norm_estimate: sigma,
                iterations: it,
                grid_n,
                truncation: trunc,
            });
        }
        sigma_prev = sigma;
    }
    Err(Error::NotConverged {
        what: format!("power iteration for the resolvent norm at s = {s}"),
        last: sigma_prev.to_f64().unwrap_or(f64::NAN),
        previous: f64::NAN,
    })
}

fn orthonormalize<T: Real>(q: &mut [Vec<Cplx<T>>]) {
    let b = q.len();
    for i in 0..b {
        for _pass in 0..2 {
            for j in 0..i {
                let mut proj = Cplx::new(T::zero(), T::zero());
                for (a, c) in q[i].iter().zip(&q[j]) {
                    proj = proj + *a * c.conj();
                }
                // use split borrow via index arithmetic
                let (head, tail) = q.split_at_mut(i);
                for (a, c) in tail[0].iter_mut().zip(&head[j]) {
                    *a = *a - *c * proj;
                }
            }
        }
        let nrm = norm2(&q[i]).max(real::<T>(1e-300));
        for a in q[i].iter_mut() {
            *a = *a / nrm;
        }
    }
}

/// Log-spaced scan of the resolvent norm over `[s_min, s_max]`.
pub fn scan<T: Real>(
    s_min: T,
    s_max: T,
    points_per_decade: usize,
    grid_n: usize,
) -> Result<Vec<ScanPoint<T>>> {
    Ok(scan_frequencies(s_min, s_max, points_per_decade)?
        .into_iter()
        .map(|s| resolvent_norm(s, grid_n))
        .collect::<Result<Vec<_>>>()?)
}

/// The frequencies a scan visits: `points_per_decade` per decade plus the
/// endpoint.
pub fn scan_frequencies<T: Real>(
    s_min: T,
    s_max: T,
    points_per_decade: usize,
) -> Result<Vec<T>> {
    if !(s_min > T::zero()) || !(s_max > s_min) || points_per_decade == 0 {
        return Err(Error::contract(
            "scan needs 0 < s_min < s_max and points_per_decade >= 1",
        ));
    }
    let decades = (s_max / s_min).log10();
    let count = (decades * real::<T>(points_per_decade as f64))
        .round()
        .to_f64()
        .unwrap_or(1.0) as usize
        + 1;
    let l0 = s_min.ln();
    let l1 = s_max.ln();
    Ok((0..count)
        .map(|k| {
            let t = real::<T>(k as f64) / real::<T>((count - 1).max(1) as f64);
            (l0 + (l1 - l0) * t).exp()
        })
        .collect())
}

/// Lower-bound probe of the resolvent norm at an eigenvalue ordinate: apply
/// the resolvent to `(i s_k - lambda_k) x_k` where `x_k` is the eigenmode of
/// the branch-k eigenvalue `lambda_k`, on grids fine enough to carry the
/// oscillation. The response is the eigenmode itself, so the measured ratio
/// tracks `1 / |Re lambda_k|`.
pub fn resonance_probe<T: Real>(branch: usize, base_grid_n: usize) -> Result<ScanPoint<T>> {
    let root = crate::spectral::branch_root::<T>(CharacteristicKind::DirichletA, branch)?;
    let lambda_k = root.lambda;
    let s_k = lambda_k.im;
    let sq = principal_sqrt(Cplx::new(T::zero(), s_k));

    // resolve ~12 points per wavelength on the wave side
    let wave_n = next_odd(
        (real::<T>(2.0) * s_k.abs())
            .to_f64()
            .unwrap_or(0.0)
            .ceil() as usize,
    )
    .max(next_odd(base_grid_n));
    // heat side: the eigen-tail decays at rate Re sqrt(lambda_k)
    let rate = principal_sqrt(lambda_k).re.max(real::<T>(0.05));
    let trunc = (real::<T>(24.0) / rate).max(real::<T>(12.0) / sq.re);
    let heat_n = next_odd(
        (trunc * rate * real::<T>(12.0))
            .to_f64()
            .unwrap_or(0.0)
            .ceil() as usize,
    )
    .max(next_odd(base_grid_n));

    let b_e = lambda_k * lambda_k.sinh();
    let sk = principal_sqrt(lambda_k);
    let u = GridFunction::from_fn(-T::one(), T::zero(), wave_n, |x| {
        (lambda_k * (x + T::one())).sinh()
    })?;
    let v = u.scale(lambda_k);
    let w = GridFunction::from_fn(T::zero(), trunc, heat_n, |x| (-sk * x).exp() * b_e)?;
    let x_eig = State::new(Variant::DirichletA, u, v, w)?;
    let shift = Cplx::new(T::zero(), s_k) - lambda_k;
    let y = State::zero(Variant::DirichletA, wave_n, trunc, heat_n)?.axpy(&x_eig, shift)?;
    let norm_y = y.norm()?;
    let input = ResolventInput::new(Cplx::new(T::zero(), s_k), y)?;
    let sol = apply_resolvent(&input)?;
    let est = sol.state.norm()? / norm_y;
    Ok(ScanPoint {
        s: s_k,
        norm_estimate: est,
        iterations: 0,
        grid_n: wave_n,
        truncation: trunc,
    })
}

fn next_odd(n: usize) -> usize {
    if n % 2 == 1 {
        n.max(5)
    } else {
        (n + 1).max(5)
    }
}

/// Peak-refined scan: one probe per eigenvalue branch whose ordinate falls
/// in `[s_min, s_max]`, thinned to about `per_decade` log-spaced branches.
pub fn scan_peaks<T: Real>(
    s_min: T,
    s_max: T,
    per_decade: usize,
    base_grid_n: usize,
) -> Result<Vec<ScanPoint<T>>> {
    if !(s_min > T::zero()) || !(s_max > s_min) {
        return Err(Error::contract("scan_peaks needs 0 < s_min < s_max"));
    }
    let pi = T::PI().to_f64().unwrap();
    let k_min = ((s_min.to_f64().unwrap() / pi).ceil() as usize).max(1);
    let k_max = (s_max.to_f64().unwrap() / pi).floor() as usize;
    if k_max < k_min {
        return Ok(Vec::new());
    }
    let decades = ((k_max as f64) / (k_min as f64)).log10().max(1e-9);
    let want = ((decades * per_decade as f64).round() as usize + 1).max(2);
    let mut ks: Vec<usize> = (0..want)
        .map(|i| {
            let t = i as f64 / (want - 1) as f64;
            ((k_min as f64) * ((k_max as f64) / (k_min as f64)).powf(t)).round() as usize
        })
        .collect();
    ks.dedup();
    ks.iter()
        .map(|&k| resonance_probe(k, base_grid_n))
        .collect()
}

// ---------------------------------------------------------------------------
// approximate eigenvectors on the continuous spectrum
// ---------------------------------------------------------------------------

/// Bump-modulated plane wave `(0, 0, e^{i sqrt(-lambda) xi} PHI(xi/n - 1) / sqrt(n))`
/// supported on `[0, 2n]`: an approximate eigenvector for `lambda <= 0`
/// with state norm at least 1.
pub fn approx_eigvec<T: Real>(
    lambda: T,
    n: u32,
    wave_n: usize,
    heat_l: T,
    heat_n: usize,
) -> Result<State<T>> {
    if lambda > T::zero() {
        return Err(Error::contract("approx_eigvec needs lambda <= 0"));
    }
    if n < 1 {
        return Err(Error::contract("approx_eigvec needs n >= 1"));
    }
    let two_n = real::<T>(2.0 * n as f64);
    if heat_l < two_n {
        return Err(Error::contract(format!(
            "heat grid must cover [0, 2n] = [0, {two_n}], got L = {heat_l}"
        )));
    }
    let k = (-lambda).sqrt();
    let nn = real::<T>(n as f64);
    let inv_sqrt_n = nn.sqrt().recip();
    let w = GridFunction::from_fn(T::zero(), heat_l, heat_n, |x| {
        let phase = Cplx::new(T::zero(), k * x).exp();
        phase * (smoothstep_bump(x / nn - T::one()) * inv_sqrt_n)
    })?;
    let u = GridFunction::zeros(-T::one(), T::zero(), wave_n)?;
    let v = GridFunction::zeros(-T::one(), T::zero(), wave_n)?;
    State::new(Variant::DirichletA, u, v, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    type C = Cplx<f64>;

    fn grid01(n: usize, f: impl Fn(f64) -> f64) -> GridFunction<f64> {
        GridFunction::from_real_fn(-1.0, 0.0, n, f).unwrap()
    }

    #[test]
    fn u_particular_anchor_value() {
        // lambda = 1, f = 0, g = 1: U(0) = int_{-1}^0 sinh(-r) dr = cosh(1) - 1
        let f = grid01(201, |_| 0.0);
        let g = grid01(201, |_| 1.0);
        let u0 = u_particular(C::new(1.0, 0.0), &f, &g, 0.0, false).unwrap();
        assert_relative_eq!(u0.re, 1.0f64.cosh() - 1.0, max_relative = 1e-12);
        assert_relative_eq!(u0.im, 0.0, epsilon = 1e-14);
        // empty integration range at xi = -1
        let um = u_particular(C::new(1.0, 0.0), &f, &g, -1.0, false).unwrap();
        assert_eq!(um.norm(), 0.0);
        // zero data maps to zero anywhere
        let z = grid01(201, |_| 0.0);
        let u = u_particular(C::new(0.0, 3.0), &z, &z, -0.4, false).unwrap();
        assert_eq!(u.norm(), 0.0);
        assert!(u_particular(C::new(0.0, 0.0), &f, &g, 0.0, false).is_err());
    }

    #[test]
    fn u_particular_derivative_matches_fd() {
        let f = grid01(801, |x| (x + 1.0) * (2.0 * x).cos());
        let g = grid01(801, |x| x.sin());
        let lambda = C::new(0.3, 7.0);
        let du = u_particular(lambda, &f, &g, -0.5, true).unwrap();
        let h = 1e-5;
        let u1 = u_particular(lambda, &f, &g, -0.5 + h, false).unwrap();
        let u2 = u_particular(lambda, &f, &g, -0.5 - h, false).unwrap();
        let fd = (u1 - u2) / C::new(2.0 * h, 0.0);
        assert!((du - fd).norm() < 1e-7 * du.norm().max(1.0), "du {du} fd {fd}");
    }

    #[test]
    fn heat_tail_anchor_values() {
        // lambda = 1, h = e^{-r}: W(0) = 1/2 int_0^inf e^{-2r} = 1/4
        let h = GridFunction::from_real_fn(0.0, 35.0, 4001, |x| (-x).exp()).unwrap();
        let w0 = heat_tail(C::new(1.0, 0.0), &h, 0.0).unwrap();
        assert_relative_eq!(w0.re, 0.25, max_relative = 1e-9);
        assert_relative_eq!(w0.im, 0.0, epsilon = 1e-12);
        // zero data
        let z = GridFunction::zeros(0.0, 35.0, 101).unwrap();
        assert_eq!(heat_tail(C::new(1.0, 0.0), &z, 3.0).unwrap().norm(), 0.0);
        // integrand past the support of an indicator is (nearly) zero
        let ind = GridFunction::from_real_fn(0.0, 40.0, 4001, |x| if x < 1.0 { 1.0 } else { 0.0 })
            .unwrap();
        let w1 = heat_tail(C::new(4.0, 0.0), &ind, 1.0).unwrap();
        assert!(w1.norm() < 2e-3, "stencil bleed {}", w1.norm());
    }

    #[test]
    fn green_convolution_matches_direct_quadrature() {
        let h = GridFunction::from_real_fn(0.0, 30.0, 801, |x| {
            (x - 3.0).exp().min((3.0 - x).exp()) * (0.7 * x).cos()
        })
        .unwrap();
        for lambda in [C::new(1.0, 0.0), C::new(2.0, 3.0)] {
            let g = green_convolve(lambda, &h).unwrap();
            let s = principal_sqrt(lambda);
            // direct O(n^2) trapezoid oracle on the same samples
            let eta = h.spacing();
            let n = h.n_points();
            for &i in &[0usize, 100, 400, 799] {
                let xi = h.xi(i);
                let mut acc = C::new(0.0, 0.0);
                for j in 0..n {
                    let r = h.xi(j);
                    let kern = (-s * (xi - r).abs()).exp() / (s * 2.0);
                    let wt = if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
                    acc += h.values()[j] * kern * wt * eta;
                }
                let err = (g.values()[i] - acc).norm();
                assert!(err < 2e-4, "i {i} err {err}");
            }
            // Young bound with the exact kernel L1 norm
            let l1 = 1.0 / (s.norm() * s.re);
            assert!(g.norm_l2() <= l1 * h.norm_l2() * (1.0 + 1e-6));
        }
    }

    #[test]
    fn green_tail_term_matches_heat_tail_at_zero() {
        let h = GridFunction::from_real_fn(0.0, 35.0, 2001, |x| (-x).exp()).unwrap();
        let g = green_convolve(C::new(1.0, 0.0), &h).unwrap();
        assert_relative_eq!(g.values()[0].re, 0.25, max_relative = 1e-8);
    }

    #[test]
    fn interface_solve_closed_form() {
        // lambda = 1, f = g = 0, h = e^{-r}: rhs = (1/4, 1/4),
        // a = 1/(2e), b = -1/(4 e^2)
        let u = grid01(401, |_| 0.0);
        let v = grid01(401, |_| 0.0);
        let w = GridFunction::from_real_fn(0.0, 35.0, 4001, |x| (-x).exp()).unwrap();
        let y = State::new(Variant::DirichletA, u, v, w).unwrap();
        let (a, b) = solve_interface(C::new(1.0, 0.0), &y).unwrap();
        let e = std::f64::consts::E;
        assert_relative_eq!(a.re, 1.0 / (2.0 * e), max_relative = 1e-8);
        assert_relative_eq!(b.re, -1.0 / (4.0 * e * e), max_relative = 1e-8);
        // homogeneous data gives the zero solution
        let y0 = State::zero(Variant::DirichletA, 401, 35.0, 4001).unwrap();
        let (a0, b0) = solve_interface(C::new(1.0, 0.0), &y0).unwrap();
        assert_eq!(a0.norm(), 0.0);
        assert_eq!(b0.norm(), 0.0);
    }

    #[test]
    fn resolvent_image_satisfies_couplings_and_anchor() {
        let u = grid01(401, |_| 0.0);
        let v = grid01(401, |_| 0.0);
        let w = GridFunction::from_real_fn(0.0, 35.0, 4001, |x| (-x).exp()).unwrap();
        let y = State::new(Variant::DirichletA, u, v, w).unwrap();
        let input = ResolventInput::new(C::new(1.0, 0.0), y).unwrap();
        let sol = apply_resolvent(&input).unwrap();
        let e = std::f64::consts::E;
        let expect = 0.25 - 1.0 / (4.0 * e * e);
        assert_relative_eq!(sol.state.w.values()[0].re, expect, max_relative = 1e-7);
        assert_relative_eq!(sol.state.v.last().re, expect, max_relative = 1e-7);
        assert!(sol.couplings.max() < 1e-10);
    }

    #[test]
    fn resolvent_is_linear_and_zero_maps_to_zero() {
        let y0 = State::zero(Variant::DirichletA, 101, 40.0, 401).unwrap();
        let input = ResolventInput::new(C::new(0.0, 1.0), y0).unwrap();
        let sol = apply_resolvent(&input).unwrap();
        assert_eq!(sol.state.norm().unwrap(), 0.0);
    }

    #[test]
    fn near_eigenvalue_is_rejected() {
        let root = crate::spectral::branch_root::<f64>(CharacteristicKind::DirichletA, 1)
            .unwrap()
            .lambda;
        let y = State::zero(Variant::DirichletA, 101, 40.0, 401).unwrap();
        assert!(matches!(
            ResolventInput::new(root, y),
            Err(Error::NearEigenvalue { .. })
        ));
    }

    #[test]
    fn resolvent_identity_holds() {
        // R(l1) y - R(l2) y = (l2 - l1) R(l1) R(l2) y on smooth data
        let y = crate::synth::random_x_state::<f64>(Variant::DirichletA, 401, 40.0, 1601, 11)
            .unwrap();
        let l1 = C::new(1.0, 0.5);
        let l2 = C::new(2.0, -0.3);
        let r1 = apply_resolvent(&ResolventInput::new(l1, y.clone()).unwrap())
            .unwrap()
            .state;
        let r2 = apply_resolvent(&ResolventInput::new(l2, y.clone()).unwrap())
            .unwrap()
            .state;
        let r12 = apply_resolvent(&ResolventInput::new(l1, r2.clone()).unwrap())
            .unwrap()
            .state;
        let lhs = r1.axpy(&r2, C::new(-1.0, 0.0)).unwrap();
        let rhs = State::zero(Variant::DirichletA, 401, 40.0, 1601)
            .unwrap()
            .axpy(&r12, l2 - l1)
            .unwrap();
        let diff = lhs.axpy(&rhs, C::new(-1.0, 0.0)).unwrap();
        let rel = diff.norm().unwrap() / lhs.norm().unwrap().max(1e-300);
        assert!(rel < 1e-6, "resolvent identity residual {rel}");
    }

    #[test]
    fn approx_eigvec_norm_is_at_least_one() {
        for lam in [0.0, -1.0, -4.0] {
            let x = approx_eigvec(lam, 8, 33, 16.0, 2049).unwrap();
            assert!(x.norm().unwrap() >= 1.0);
        }
        assert!(approx_eigvec(-1.0, 8, 33, 10.0, 257).is_err());
        assert!(approx_eigvec(1.0, 8, 33, 40.0, 257).is_err());
    }

    #[test]
    fn scan_frequency_grid_has_documented_count() {
        let f = scan_frequencies(1e-4f64, 1e4, 8).unwrap();
        assert_eq!(f.len(), 65);
        assert_relative_eq!(f[0], 1e-4, max_relative = 1e-12);
        assert_relative_eq!(f[64], 1e4, max_relative = 1e-12);
    }

    #[test]
    fn resolvent_norm_estimate_dominates_inverse_distance() {
        let p = resolvent_norm(0.5f64, 101).unwrap();
        assert!(p.norm_estimate >= 1.0 / 0.5 * 0.99, "est {}", p.norm_estimate);
        assert!(p.iterations >= 1);
        assert!(resolvent_norm(0.0f64, 101).is_err());
        assert!(resolvent_norm(1.0f64, 100).is_err());
    }

    #[test]
    fn resonance_probe_tracks_the_branch_distance() {
        let root = crate::spectral::branch_root::<f64>(CharacteristicKind::DirichletA, 3).unwrap();
        let p = resonance_probe::<f64>(3, 101).unwrap();
        let ideal = 1.0 / root.lambda.re.abs();
        assert!(
            (p.norm_estimate - ideal).abs() < 0.15 * ideal,
            "probe {} vs 1/|Re| {}",
            p.norm_estimate,
            ideal
        );
    }
}
