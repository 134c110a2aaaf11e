//! Smooth synthetic data: mollifier bumps and seeded random states used by
//! experiments, the self-test suite and the validation harness.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::GridFunction;
use crate::scalar::{real, Cplx, Real};
use crate::state::{State, Variant};

/// Smooth cutoff: 1 on `|z| <= 1/2`, 0 on `|z| >= 1`, C^infinity in between
/// (smoothstep built from the mollifier `exp(-1/t)`).
pub fn smoothstep_bump<T: Real>(z: T) -> T {
    fn rho<T: Real>(t: T) -> T {
        if t > T::zero() {
            (-t.recip()).exp()
        } else {
            T::zero()
        }
    }
    let a = rho(real::<T>(2.0) - real::<T>(2.0) * z.abs());
    let b = rho(real::<T>(2.0) * z.abs() - T::one());
    if a == T::zero() {
        T::zero()
    } else {
        a / (a + b)
    }
}

/// Bump centred at `c` with half-width `r` (support `[c - r, c + r]`,
/// identically 1 on the inner half).
pub fn bump_at<T: Real>(x: T, c: T, r: T) -> T {
    smoothstep_bump((x - c) / r)
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform<T: Real>(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> T {
    real::<T>(rng.gen_range(lo..hi))
}

/// Random superposition of interior bumps on `[left, right]`, vanishing to
/// all orders at both endpoints.
pub fn random_interior_bumps<T: Real>(
    rng: &mut ChaCha8Rng,
    left: T,
    right: T,
    n: usize,
    n_bumps: usize,
) -> Result<GridFunction<T>> {
    let len = right - left;
    let mut terms: Vec<(T, T, T)> = Vec::new();
    for _ in 0..n_bumps {
        let c: T = left + len * uniform::<T>(rng, 0.25, 0.75);
        let r: T = len * uniform::<T>(rng, 0.08, 0.2);
        let a: T = uniform::<T>(rng, -1.0, 1.0);
        terms.push((c, r, a));
    }
    GridFunction::from_real_fn(left, right, n, move |x| {
        let mut acc = T::zero();
        for &(c, r, a) in &terms {
            acc += a * bump_at(x, c, r);
        }
        acc
    })
}

/// Random smooth state with all three components interior bumps; lies in
/// the generator's domain (and every iterated domain) for all variants.
pub fn random_domain_state<T: Real>(
    variant: Variant,
    wave_n: usize,
    heat_l: T,
    heat_n: usize,
    seed: u64,
) -> Result<State<T>> {
    let mut rng = seeded_rng(seed);
    let u = random_interior_bumps(&mut rng, -T::one(), T::zero(), wave_n, 3)?;
    let v = random_interior_bumps(&mut rng, -T::one(), T::zero(), wave_n, 3)?;
    // keep the heat support well inside [0, 0.5 heat_l]
    let w = {
        let mut terms: Vec<(T, T, T)> = Vec::new();
        for _ in 0..3 {
            let c: T = heat_l * uniform::<T>(&mut rng, 0.1, 0.4);
            let r: T = heat_l * uniform::<T>(&mut rng, 0.05, 0.09);
            let a: T = uniform::<T>(&mut rng, -1.0, 1.0);
            terms.push((c, r, a));
        }
        GridFunction::from_real_fn(T::zero(), heat_l, heat_n, move |x| {
            let mut acc = T::zero();
            for &(c, r, a) in &terms {
                acc += a * bump_at(x, c, r);
            }
            acc
        })?
    };
    State::new(variant, u, v, w)
}

/// Random smooth Dirichlet state with active interface coupling: the wave
/// slot carries slope `s0` at the interface, matched by the heat profile,
/// and the velocity matches the heat trace. Lies in the generator's domain.
pub fn random_coupled_domain_state<T: Real>(
    wave_n: usize,
    heat_l: T,
    heat_n: usize,
    seed: u64,
) -> Result<State<T>> {
    let mut rng = seeded_rng(seed);
    let s0: T = uniform::<T>(&mut rng, -1.0, 1.0);
    let v0: T = uniform::<T>(&mut rng, -1.0, 1.0);
    let base = random_domain_state(Variant::DirichletA, wave_n, heat_l, heat_n, seed ^ 0x9e37)?;
    let half = real::<T>(0.5);
    // u = s0 (xi+1)^2 / 2 + interior bumps: u(-1) = 0, u'(-1) = 0, u'(0) = s0
    let u = base
        .u
        .map(|x, z| z + Cplx::new(s0 * half * (x + T::one()) * (x + T::one()), T::zero()));
    // v = v0 (xi+1) + bumps: v(-1) = 0, v(0) = v0
    let v = base
        .v
        .map(|x, z| z + Cplx::new(v0 * (x + T::one()), T::zero()));
    // w(0) = v0, w'(0) = s0, numerically compact: (v0 + (s0 + v0) xi) e^{-xi}
    let w = base.w.map(|x, z| {
        let cut = smoothstep_bump(x / (heat_l * real::<T>(0.75)));
        z + Cplx::new((v0 + (s0 + v0) * x) * (-x).exp() * cut, T::zero())
    });
    State::new(Variant::DirichletA, u, v, w)
}

/// Random smooth element of the state space itself (no domain conditions):
/// `f(-1) = 0`, all components smooth, heat part compactly supported.
pub fn random_x_state<T: Real>(
    variant: Variant,
    wave_n: usize,
    heat_l: T,
    heat_n: usize,
    seed: u64,
) -> Result<State<T>> {
    let mut rng = seeded_rng(seed);
    let a1: T = uniform::<T>(&mut rng, -1.0, 1.0);
    let a2: T = uniform::<T>(&mut rng, -1.0, 1.0);
    let a3: T = uniform::<T>(&mut rng, -1.0, 1.0);
    let b1: T = uniform::<T>(&mut rng, -1.0, 1.0);
    let b2: T = uniform::<T>(&mut rng, -1.0, 1.0);
    let pi = T::PI();
    let half = real::<T>(0.5);
    let u = GridFunction::from_real_fn(-T::one(), T::zero(), wave_n, move |x| {
        a1 * ((x + T::one()) * pi * half).sin()
            + a2 * ((x + T::one()) * pi * real::<T>(1.5)).sin()
            + a3 * (x + T::one())
    })?;
    let v = GridFunction::from_real_fn(-T::one(), T::zero(), wave_n, move |x| {
        b1 * (pi * x).cos() + b2 * x
    })?;
    let scale: T = heat_l.min(real::<T>(20.0));
    let c1: T = uniform::<T>(&mut rng, -1.0, 1.0);
    let c2: T = uniform::<T>(&mut rng, -1.0, 1.0);
    let w = GridFunction::from_real_fn(T::zero(), heat_l, heat_n, move |x| {
        let z = x / scale;
        (c1 + c2 * z) * (-real::<T>(6.0) * z * z).exp() * smoothstep_bump(z * half)
    })?;
    State::new(variant, u, v, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_one_inside_and_zero_outside() {
        assert_eq!(smoothstep_bump(0.0f64), 1.0);
        assert_eq!(smoothstep_bump(0.5f64), 1.0);
        assert_eq!(smoothstep_bump(-0.3f64), 1.0);
        assert_eq!(smoothstep_bump(1.0f64), 0.0);
        assert_eq!(smoothstep_bump(-1.2f64), 0.0);
        let mid = smoothstep_bump(0.75f64);
        assert!(mid > 0.0 && mid < 1.0);
        // symmetric midpoint
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bump_transition_is_smooth() {
        // finite differences of high order stay bounded through the seam
        let h = 1e-3;
        for x0 in [0.5f64, 1.0] {
            let d2 = (smoothstep_bump(x0 + h) - 2.0 * smoothstep_bump(x0)
                + smoothstep_bump(x0 - h))
                / (h * h);
            assert!(d2.abs() < 50.0, "kink at {x0}: {d2}");
        }
    }

    #[test]
    fn seeded_states_are_reproducible() {
        let a = random_domain_state::<f64>(Variant::DirichletA, 65, 40.0, 129, 7).unwrap();
        let b = random_domain_state::<f64>(Variant::DirichletA, 65, 40.0, 129, 7).unwrap();
        assert_eq!(a, b);
        let c = random_domain_state::<f64>(Variant::DirichletA, 65, 40.0, 129, 8).unwrap();
        assert!(a != c);
    }

    #[test]
    fn coupled_state_satisfies_domain_conditions() {
        let s = random_coupled_domain_state::<f64>(257, 40.0, 513, 3).unwrap();
        let du = s.u.derivative().unwrap();
        let dw = s.w.derivative().unwrap();
        let flux = (du.last() - dw.first()).norm();
        let trace = (s.v.last() - s.w.first()).norm();
        assert!(flux < 1e-6, "flux mismatch {flux}");
        assert!(trace < 1e-9, "trace mismatch {trace}");
        assert!(s.u.first().norm() < 1e-12);
        assert!(s.v.first().norm() < 1e-12);
    }
}
