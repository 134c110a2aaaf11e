//! Generator domains, the range characterisation, and the constructive
//! range-density approximation for the Neumann-wall system.
//!
//! A triple `(f, g, h)` lies in the generator's range exactly when the
//! iterated heat tails `H(xi) = int_xi^inf h` and `H2(xi) = int_xi^inf H`
//! are square integrable and the compatibility `f(0) = H2(0)` holds; the
//! Neumann variants add the mass condition `int g + int h = 0`. On a
//! truncated grid the tails are exact once `h` is compactly supported
//! inside 90% of the domain, so checks outside that class are refused as
//! inconclusive.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::scalar::{real, Cplx, Real};
use crate::state::{State, Variant};

/// Relative tolerance for numerical membership in domain/range classes.
pub const MEMBERSHIP_TOL: f64 = 1e-6;
/// Hard cap on the heat-domain length the density construction may request.
pub const EXTENT_CAP: f64 = 1e5;

fn rel<T: Real>(diff: T, scale: T) -> T {
    diff / scale.max(T::one())
}

fn state_scale<T: Real>(x: &State<T>) -> T {
    x.u.max_abs().max(x.v.max_abs()).max(x.w.max_abs())
}

/// Named residuals of the domain conditions for `x`'s variant.
pub fn domain_residuals<T: Real>(x: &State<T>) -> Result<Vec<(&'static str, T)>> {
    let scale = state_scale(x);
    let du = x.u.derivative()?;
    let dw = x.w.derivative()?;
    let mut out = Vec::new();
    match x.variant {
        Variant::DirichletA => {
            out.push(("u(-1) = 0", rel(x.u.first().norm(), scale)));
            out.push(("v(-1) = 0", rel(x.v.first().norm(), scale)));
            out.push(("u'(0) = w'(0)", rel((du.last() - dw.first()).norm(), scale)));
            out.push(("v(0) = w(0)", rel((x.v.last() - x.w.first()).norm(), scale)));
        }
        Variant::NeumannA => {
            out.push(("u'(-1) = 0", rel(du.first().norm(), scale)));
            out.push(("u'(0) = w'(0)", rel((du.last() - dw.first()).norm(), scale)));
            out.push(("v(0) = w(0)", rel((x.v.last() - x.w.first()).norm(), scale)));
        }
        Variant::NeumannB => {
            out.push(("u(-1) = 0", rel(x.u.first().norm(), scale)));
            out.push(("u(0) = w'(0)", rel((x.u.last() - dw.first()).norm(), scale)));
            out.push(("v(0) = w(0)", rel((x.v.last() - x.w.first()).norm(), scale)));
        }
    }
    Ok(out)
}

fn enforce_domain<T: Real>(x: &State<T>) -> Result<()> {
    for (name, r) in domain_residuals(x)? {
        if r > real::<T>(MEMBERSHIP_TOL) {
            return Err(Error::DomainCondition {
                condition: name.into(),
                residual: r.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(())
}

/// Apply the generator: `(v, u'', w'')` for the displacement systems,
/// `(v', u', w'')` for the slope system. The input must satisfy its
/// variant's domain conditions to `1e-6` relative.
pub fn apply_generator<T: Real>(x: &State<T>) -> Result<State<T>> {
    enforce_domain(x)?;
    match x.variant {
        Variant::DirichletA | Variant::NeumannA => State::new(
            x.variant,
            x.v.clone(),
            x.u.second_derivative()?,
            x.w.second_derivative()?,
        ),
        Variant::NeumannB => State::new(
            x.variant,
            x.v.derivative()?,
            x.u.derivative()?,
            x.w.second_derivative()?,
        ),
    }
}

/// Outcome of a range-membership check.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport<T: Real> {
    /// named condition results in the variant's order
    pub conditions: Vec<(String, bool)>,
    /// L^2 norm of the first iterated tail `int_xi^inf h`
    pub tail_norm_a: T,
    /// L^2 norm of the second iterated tail
    pub tail_norm_b: T,
    /// `|f(0) - int_0^inf int_t^inf h|`
    pub compat_residual: T,
    /// `|int g + int h|` (meaningful for the Neumann variants)
    pub mass_residual: T,
}

impl<T: Real> AdmissibilityReport<T> {
    pub fn passes(&self) -> bool {
        self.conditions.iter().all(|(_, ok)| *ok)
    }
}

fn support_edge_ok<T: Real>(w: &GridFunction<T>) -> bool {
    let n = w.n_points();
    let from = (n as f64 * 0.9).floor() as usize;
    let tol = real::<T>(1e-10) * (T::one() + w.max_abs());
    w.values()[from.min(n - 1)..]
        .iter()
        .all(|z| z.norm() <= tol)
}

/// Check the range conditions of `y`'s variant, reporting every residual.
///
/// The heat component must be numerically supported inside `[0, 0.9 L]`;
/// otherwise the tails cannot be computed faithfully and the check aborts
/// as inconclusive.
pub fn check_range<T: Real>(y: &State<T>) -> Result<AdmissibilityReport<T>> {
    if !support_edge_ok(&y.w) {
        return Err(Error::Inconclusive(
            "heat data reaches the truncation edge; tail integrals would be unfaithful".into(),
        ));
    }
    let tail1 = y.w.cumulative_from_right();
    let tail2 = tail1.cumulative_from_right();
    let tail_norm_a = tail1.norm_l2();
    let tail_norm_b = tail2.norm_l2();
    let f0 = y.u.last();
    let compat_residual = (f0 - tail2.first()).norm();
    let mass = y.v.integral() + y.w.integral();
    let mass_residual = mass.norm();
    let tol = real::<T>(MEMBERSHIP_TOL);
    let scale = T::one().max(state_scale(y));
    // (a)/(b): with compact support the tails are compactly supported and
    // automatically square integrable; the support pre-check is the gate.
    let mut conditions = vec![
        ("tail of h in L2".to_string(), true),
        ("iterated tail of h in L2".to_string(), true),
    ];
    match y.variant {
        Variant::DirichletA | Variant::NeumannA => {
            conditions.push((
                "f(0) matches the iterated tail at 0".to_string(),
                compat_residual <= tol * scale.max(tail_norm_b),
            ));
        }
        Variant::NeumannB => {}
    }
    if y.variant != Variant::DirichletA {
        conditions.push((
            "int g + int h = 0".to_string(),
            mass_residual <= tol * scale,
        ));
    }
    Ok(AdmissibilityReport {
        conditions,
        tail_norm_a,
        tail_norm_b,
        compat_residual,
        mass_residual,
    })
}

/// Map a twice-regular state into the admissible class
/// `D(A) intersect Ran(A)` by applying the generator once.
///
/// The input must be in the numerical domain and its image must be too
/// (that is, the input lies in the domain of the squared generator); the
/// output is verified against the range conditions before it is returned.
pub fn make_admissible<T: Real>(z: &State<T>) -> Result<State<T>> {
    let x = apply_generator(z)?;
    // second-level conditions: the image must again be in the domain
    for (name, r) in domain_residuals(&x)? {
        if r > real::<T>(MEMBERSHIP_TOL) {
            return Err(Error::DomainCondition {
                condition: format!("second-level {name}"),
                residual: r.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let report = check_range(&x)?;
    if !report.passes() {
        let failed: Vec<&str> = report
            .conditions
            .iter()
            .filter(|(_, ok)| !ok)
            .map(|(n, _)| n.as_str())
            .collect();
        return Err(Error::DomainCondition {
            condition: format!("range post-verification: {}", failed.join(", ")),
            residual: report
                .compat_residual
                .max(report.mass_residual)
                .to_f64()
                .unwrap_or(f64::NAN),
        });
    }
    Ok(x)
}

/// Domain length the logarithmic mass correction needs:
/// `xi_0 = e^{r0 / epsilon} - 1` solves
/// `int_0^{xi_0} epsilon / (1 + xi) dxi = r0`.
pub fn mass_correction_extent<T: Real>(r0: T, epsilon: T) -> T {
    (r0 / epsilon).exp() - T::one()
}

fn node_at_or_above<T: Real>(g: &GridFunction<T>, x: T) -> usize {
    let pos = (x / g.spacing()).to_f64().unwrap_or(0.0).ceil() as usize;
    pos.min(g.n_points() - 1)
}

/// Approximate `y` by a member of the Neumann range within `3 epsilon`.
///
/// Three corrections, each spent against the epsilon budget: cut the heat
/// profile to compact support, cancel the total mass with a node-aligned
/// `-beta e^{i theta} / (1 + xi)` profile, and repair the trace
/// compatibility with an `epsilon e^{i sigma} / (1 + xi)^2` profile of
/// length `tau = e^{c0/epsilon} - 1` plus matching constant shifts of the
/// first two slots. Correction amplitudes are tuned against the grid
/// quadrature, so the returned state passes the discrete range conditions
/// exactly.
pub fn densify_range<T: Real>(y: &State<T>, epsilon: T) -> Result<State<T>> {
    if y.variant != Variant::NeumannA {
        return Err(Error::contract("densify_range expects the NeumannA variant"));
    }
    if !(epsilon > T::zero()) {
        return Err(Error::contract("epsilon must be positive"));
    }
    let eta = y.w.spacing();
    let l_old = y.w.right_endpoint();

    // step 1: compact support cut (a smooth ramp over [0.8 L, 0.9 L])
    let ramp_lo = l_old * real::<T>(0.8);
    let ramp_hi = l_old * real::<T>(0.9);
    let h0_on_old = y.w.map(|x, z| {
        if x <= ramp_lo {
            z
        } else if x >= ramp_hi {
            Cplx::new(T::zero(), T::zero())
        } else {
            let t = (x - ramp_lo) / (ramp_hi - ramp_lo);
            z * crate::synth::smoothstep_bump(t)
        }
    });
    let cut_loss = y.w.zip(&h0_on_old, |a, b| a - b)?.norm_l2();
    if cut_loss >= epsilon {
        return Err(Error::contract(
            "support cut alone exceeds the epsilon budget; enlarge the heat grid",
        ));
    }

    // step 2: total mass and the logarithmic correction extent
    let mass = y.v.integral() + h0_on_old.integral();
    let r0 = mass.norm();
    let xi0 = mass_correction_extent(r0, epsilon);

    // provisional compatibility defect to size tau before building grids
    let tail2_prov = h0_on_old.cumulative_from_right().cumulative_from_right();
    let c_prov = (y.u.last() - tail2_prov.first()).norm() + r0;
    let tau_bound = mass_correction_extent(c_prov + epsilon, epsilon);
    let needed = (xi0.max(tau_bound) * real::<T>(1.25)).max(l_old);
    if needed > real::<T>(EXTENT_CAP) {
        return Err(Error::EpsilonTooSmall {
            needed_extent: needed.to_f64().unwrap_or(f64::INFINITY),
            cap: EXTENT_CAP,
        });
    }

    // extend the grid keeping the old spacing so old nodes are a prefix
    let (heat, n_old) = if needed > l_old {
        let n_new = {
            let n = (needed / eta).to_f64().unwrap_or(0.0).ceil() as usize + 1;
            if n % 2 == 0 {
                n + 1
            } else {
                n
            }
        };
        let l_new = eta * real::<T>((n_new - 1) as f64);
        let mut vals = vec![Cplx::new(T::zero(), T::zero()); n_new];
        vals[..h0_on_old.n_points()].copy_from_slice(h0_on_old.values());
        (GridFunction::new(T::zero(), l_new, vals)?, y.w.n_points())
    } else {
        (h0_on_old.clone(), y.w.n_points())
    };
    let _ = n_old;

    // mass correction, node-aligned and amplitude-tuned to the quadrature
    let mut h_total = heat.clone();
    if r0 > real::<T>(1e-14) * (T::one() + state_scale(y)) {
        let theta_phase = mass / Cplx::new(r0, T::zero());
        let cut = h_total.xi(node_at_or_above(&h_total, xi0));
        let profile = h_total.map(|x, _| {
            if x <= cut {
                Cplx::new((T::one() + x).recip(), T::zero())
            } else {
                Cplx::new(T::zero(), T::zero())
            }
        });
        let q = profile.integral().re; // >= log(1 + xi0) = r0 / epsilon
        let beta = r0 / q;
        h_total = h_total.zip(&profile, move |h, p| h - p * theta_phase * beta)?;
    }

    // compatibility correction
    let tail2 = h_total.cumulative_from_right().cumulative_from_right();
    let c = y.u.last() - tail2.first();
    let scale = T::one() + state_scale(y);
    let mut f_new = y.u.clone();
    let mut g_new = y.v.clone();
    if c.norm() > real::<T>(1e-9) * scale {
        let c0 = c.norm();
        let sigma_phase = c / Cplx::new(c0, T::zero());
        let tau = mass_correction_extent(c0, epsilon);
        let cut = h_total.xi(node_at_or_above(&h_total, tau));
        if cut < tau {
            return Err(Error::EpsilonTooSmall {
                needed_extent: tau.to_f64().unwrap_or(f64::INFINITY) * 1.25,
                cap: EXTENT_CAP,
            });
        }
        let amp = epsilon;
        let profile = h_total.map(|x, _| {
            if x <= cut {
                let d = T::one() + x;
                Cplx::new((d * d).recip(), T::zero())
            } else {
                Cplx::new(T::zero(), T::zero())
            }
        });
        h_total = h_total.zip(&profile, move |h, p| h + p * sigma_phase * amp)?;
        // matching constant shift of g restores the discrete mass exactly
        let delta = profile.integral().re * amp;
        g_new = g_new.map(|_, z| z - sigma_phase * delta);
    }
    // constant shift of f enforces the discrete compatibility exactly
    let tail2_final = h_total.cumulative_from_right().cumulative_from_right();
    let gamma = y.u.last() - tail2_final.first();
    f_new = f_new.map(|_, z| z - gamma);

    let y0 = State::new(Variant::NeumannA, f_new, g_new, h_total)?;
    let report = check_range(&y0)?;
    if !report.passes() {
        return Err(Error::DomainCondition {
            condition: "density construction failed its own range check".into(),
            residual: report
                .compat_residual
                .max(report.mass_residual)
                .to_f64()
                .unwrap_or(f64::NAN),
        });
    }
    Ok(y0)
}

/// X-distance between a state and a (possibly longer-grid) correction of
/// it: components compared on the shorter common grid prefix plus the
/// norm of the extension.
pub fn correction_distance<T: Real>(y: &State<T>, y0: &State<T>) -> Result<T> {
    let du = y.u.zip(&y0.u, |a, b| a - b)?;
    let du_prime = du.derivative()?;
    let dv = y.v.zip(&y0.v, |a, b| a - b)?;
    let n = y.w.n_points().min(y0.w.n_points());
    // both grids share spacing by construction; compare on the overlap and
    // add the tail of the longer one
    let (short, long) = if y.w.n_points() <= y0.w.n_points() {
        (&y.w, &y0.w)
    } else {
        (&y0.w, &y.w)
    };
    let mut wdiff_sq = T::zero();
    let wts_long = long.weights();
    for i in 0..long.n_points() {
        let a = if i < n { short.values()[i] } else { Cplx::new(T::zero(), T::zero()) };
        wdiff_sq += (long.values()[i] - a).norm_sqr() * wts_long[i];
    }
    Ok((du.norm_l2().powi(2) + du_prime.norm_l2().powi(2) + dv.norm_l2().powi(2) + wdiff_sq)
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use approx::assert_relative_eq;

    #[test]
    fn zero_state_maps_to_zero_and_passes_everything() {
        let z = State::<f64>::zero(Variant::DirichletA, 65, 40.0, 257).unwrap();
        let img = apply_generator(&z).unwrap();
        assert_eq!(img.norm().unwrap(), 0.0);
        let rep = check_range(&z).unwrap();
        assert!(rep.passes());
        assert_eq!(rep.compat_residual, 0.0);
        assert_eq!(rep.tail_norm_a, 0.0);
    }

    #[test]
    fn neumann_kernel_maps_to_exact_zero() {
        let u = GridFunction::from_real_fn(-1.0, 0.0, 65, |_| 1.0).unwrap();
        let v = GridFunction::zeros(-1.0, 0.0, 65).unwrap();
        let w = GridFunction::zeros(0.0, 40.0, 257).unwrap();
        let x = State::new(Variant::NeumannA, u, v, w).unwrap();
        let img = apply_generator(&x).unwrap();
        assert_eq!(img.norm().unwrap(), 0.0);
        // any scalar multiple as well
        for c in [0.3, -2.7, 1e-3] {
            let xs = State::new(
                Variant::NeumannA,
                x.u.scale(Cplx::new(c, 0.0)),
                x.v.clone(),
                x.w.clone(),
            )
            .unwrap();
            assert_eq!(apply_generator(&xs).unwrap().norm().unwrap(), 0.0);
        }
    }

    #[test]
    fn sine_displacement_fails_the_flux_condition() {
        let u = GridFunction::from_real_fn(-1.0, 0.0, 129, |x| {
            (std::f64::consts::PI * (x + 1.0)).sin()
        })
        .unwrap();
        let v = GridFunction::zeros(-1.0, 0.0, 129).unwrap();
        let w = GridFunction::zeros(0.0, 40.0, 129).unwrap();
        let x = State::new(Variant::DirichletA, u, v, w).unwrap();
        match apply_generator(&x) {
            Err(Error::DomainCondition { condition, .. }) => {
                assert!(condition.contains("u'(0) = w'(0)"), "got {condition}");
            }
            other => panic!("expected a domain-condition error, got {other:?}"),
        }
    }

    #[test]
    fn exponential_family_tail_integrals() {
        // h = (1 - xi) e^{-xi}: int_xi^inf h = -xi e^{-xi},
        // iterated tail = -(1 + xi) e^{-xi}
        let l = 45.0;
        let n = 4001;
        let h = GridFunction::from_real_fn(0.0, l, n, |x| (1.0 - x) * (-x).exp()).unwrap();
        let tail1 = h.cumulative_from_right();
        let tail2 = tail1.cumulative_from_right();
        for &i in &[0usize, 300, 900, 2000] {
            let xi = h.xi(i);
            assert_relative_eq!(
                tail1.values()[i].re,
                -xi * (-xi).exp(),
                epsilon = 1e-8,
                max_relative = 1e-8
            );
            assert_relative_eq!(
                tail2.values()[i].re,
                -(1.0 + xi) * (-xi).exp(),
                epsilon = 1e-8,
                max_relative = 1e-8
            );
        }
        // compatibility passes with f(0) = -1 (= iterated tail at 0)
        let u = GridFunction::from_real_fn(-1.0, 0.0, 129, |x| -(x + 1.0)).unwrap();
        let v = GridFunction::zeros(-1.0, 0.0, 129).unwrap();
        let y = State::new(Variant::DirichletA, u, v, h.clone()).unwrap();
        let rep = check_range(&y).unwrap();
        assert!(rep.passes(), "report {rep:?}");
        // and fails with f(0) = 0, with unit compatibility residual
        let u0 = GridFunction::zeros(-1.0, 0.0, 129).unwrap();
        let v0 = GridFunction::zeros(-1.0, 0.0, 129).unwrap();
        let y0 = State::new(Variant::DirichletA, u0, v0, h).unwrap();
        let rep0 = check_range(&y0).unwrap();
        assert!(!rep0.passes());
        assert_relative_eq!(rep0.compat_residual, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn support_reaching_the_edge_is_inconclusive() {
        let h = GridFunction::from_real_fn(0.0, 40.0, 801, |x| (-0.01 * x).exp()).unwrap();
        let u = GridFunction::zeros(-1.0, 0.0, 65).unwrap();
        let v = GridFunction::zeros(-1.0, 0.0, 65).unwrap();
        let y = State::new(Variant::DirichletA, u, v, h).unwrap();
        assert!(matches!(check_range(&y), Err(Error::Inconclusive(_))));
    }

    #[test]
    fn make_admissible_output_passes_and_is_linear() {
        let z1 = synth::random_domain_state::<f64>(Variant::DirichletA, 257, 40.0, 1025, 1)
            .unwrap();
        let z2 = synth::random_domain_state::<f64>(Variant::DirichletA, 257, 40.0, 1025, 2)
            .unwrap();
        let x1 = make_admissible(&z1).unwrap();
        let x2 = make_admissible(&z2).unwrap();
        assert!(check_range(&x1).unwrap().passes());
        // linearity
        let zsum = z1.axpy(&z2, Cplx::new(1.0, 0.0)).unwrap();
        let xsum = make_admissible(&zsum).unwrap();
        let direct = x1.axpy(&x2, Cplx::new(1.0, 0.0)).unwrap();
        let diff = xsum.axpy(&direct, Cplx::new(-1.0, 0.0)).unwrap();
        let rel = diff.norm().unwrap() / direct.norm().unwrap().max(1e-300);
        assert!(rel < 1e-12, "linearity residual {rel}");
        // zero maps to zero
        let zero = State::<f64>::zero(Variant::DirichletA, 257, 40.0, 1025).unwrap();
        assert_eq!(make_admissible(&zero).unwrap().norm().unwrap(), 0.0);
    }

    #[test]
    fn mass_extent_anchor() {
        // r0 = 1, epsilon = 0.25 -> e^4 - 1
        let xi0 = mass_correction_extent(1.0f64, 0.25);
        assert_relative_eq!(xi0, 4.0f64.exp() - 1.0, max_relative = 1e-12);
    }

    #[test]
    fn densify_already_admissible_state_is_cheap() {
        // build a state passing all Neumann range conditions
        let z = synth::random_domain_state::<f64>(Variant::NeumannA, 257, 40.0, 1025, 9).unwrap();
        let y = apply_generator(&z).unwrap();
        assert!(check_range(&y).unwrap().passes());
        let eps = 0.25;
        let y0 = densify_range(&y, eps).unwrap();
        assert!(check_range(&y0).unwrap().passes());
        let d = correction_distance(&y, &y0).unwrap();
        assert!(
            d < std::f64::consts::SQRT_2 * eps,
            "distance {d} exceeds sqrt(2) epsilon"
        );
    }

    #[test]
    fn densify_generic_state_lands_within_three_epsilon() {
        let mut rng = synth::seeded_rng(33);
        for _case in 0..6 {
            use rand::Rng;
            let y = neumann_test_state(&mut rng).unwrap();
            let eps = if rng.gen_bool(0.5) { 0.5 } else { 0.25 };
            let y0 = densify_range(&y, eps).unwrap();
            assert!(check_range(&y0).unwrap().passes());
            let d = correction_distance(&y, &y0).unwrap();
            assert!(d < 3.0 * eps, "distance {d} vs 3 eps {}", 3.0 * eps);
        }
    }

    #[test]
    fn densify_with_huge_mass_and_tiny_epsilon_errors_loudly() {
        let u = GridFunction::zeros(-1.0, 0.0, 65).unwrap();
        let v = GridFunction::from_real_fn(-1.0, 0.0, 65, |_| 1.0).unwrap();
        let w = GridFunction::zeros(0.0, 40.0, 1601).unwrap();
        let y = State::new(Variant::NeumannA, u, v, w).unwrap();
        // mass 1 at epsilon 0.02 needs extent e^50, far past the cap
        match densify_range(&y, 0.02) {
            Err(Error::EpsilonTooSmall { needed_extent, .. }) => {
                assert!(needed_extent > EXTENT_CAP);
            }
            other => panic!("expected epsilon-too-small, got {other:?}"),
        }
    }

    /// Random Neumann data with moderate mass and compatibility defects so
    /// the construction stays on a representable grid.
    pub fn neumann_test_state(rng: &mut rand_chacha::ChaCha8Rng) -> Result<State<f64>> {
        use rand::Rng;
        let seed: u64 = rng.gen();
        let z = synth::random_domain_state::<f64>(Variant::NeumannA, 257, 40.0, 1025, seed)?;
        let y = apply_generator(&z)?;
        // perturb: add mass and break compatibility by bounded amounts
        let dm: f64 = rng.gen_range(-0.4..0.4);
        let dc: f64 = rng.gen_range(-0.3..0.3);
        let v = y.v.map(|_, z| z + Cplx::new(dm, 0.0));
        let u = y.u.map(|_, z| z + Cplx::new(dc, 0.0));
        State::new(Variant::NeumannA, u, v, y.w.clone())
    }
}
