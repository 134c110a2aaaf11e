//! State triples (u, v, w) for the coupled wave-heat system, their norms and
//! the physical energy.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::scalar::{real, Real};

/// Boundary variant of the coupled system.
///
/// * `DirichletA` — wave displacement pinned at the far wall, state space
///   norm `(||u'||^2 + ||v||^2 + ||w||^2)^{1/2}`.
/// * `NeumannA`   — free far wall, displacement formulation, full H^1 norm
///   in the first slot.
/// * `NeumannB`   — free far wall, slope/velocity formulation, all-L^2 norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    DirichletA,
    NeumannA,
    NeumannB,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::DirichletA => "dirichlet_a",
            Variant::NeumannA => "neumann_a",
            Variant::NeumannB => "neumann_b",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dirichlet_a" => Ok(Variant::DirichletA),
            "neumann_a" => Ok(Variant::NeumannA),
            "neumann_b" => Ok(Variant::NeumannB),
            other => Err(Error::Parse(format!("unknown variant `{other}`"))),
        }
    }
}

/// State of the coupled system: wave slot `u` and velocity `v` on `[-1, 0]`,
/// heat profile `w` on `[0, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct State<T: Real> {
    pub variant: Variant,
    pub u: GridFunction<T>,
    pub v: GridFunction<T>,
    pub w: GridFunction<T>,
}

impl<T: Real> State<T> {
    pub fn new(
        variant: Variant,
        u: GridFunction<T>,
        v: GridFunction<T>,
        w: GridFunction<T>,
    ) -> Result<Self> {
        let tol = real::<T>(1e-9);
        if (u.left_endpoint() + T::one()).abs() > tol || u.right_endpoint().abs() > tol {
            return Err(Error::contract("u must live on [-1, 0]"));
        }
        if !u.same_grid(&v) {
            return Err(Error::contract("u and v must share one grid"));
        }
        if w.left_endpoint().abs() > tol {
            return Err(Error::contract("w must start at 0"));
        }
        let s = Self { variant, u, v, w };
        if variant == Variant::DirichletA {
            let scale = T::one() + s.u.max_abs();
            if s.u.first().norm() > real::<T>(1e-6) * scale {
                return Err(Error::contract(
                    "DirichletA requires u(-1) = 0 to grid tolerance",
                ));
            }
        }
        Ok(s)
    }

    /// Zero state on fresh grids.
    pub fn zero(variant: Variant, wave_n: usize, heat_l: T, heat_n: usize) -> Result<Self> {
        let u = GridFunction::zeros(-T::one(), T::zero(), wave_n)?;
        let v = GridFunction::zeros(-T::one(), T::zero(), wave_n)?;
        let w = GridFunction::zeros(T::zero(), heat_l, heat_n)?;
        Self::new(variant, u, v, w)
    }

    /// Heat truncation length of this state's grid.
    pub fn heat_truncation(&self) -> T {
        self.w.right_endpoint()
    }

    /// Variant-appropriate state-space norm.
    ///
    /// DirichletA uses `||u'||` in the first slot, NeumannA the full H^1
    /// norm, NeumannB the plain L^2 norm of the slope variable.
    pub fn norm(&self) -> Result<T> {
        if self.u.n_points() < 3 {
            return Err(Error::contract("state norm needs at least 3 wave points"));
        }
        let vv = self.v.norm_l2();
        let ww = self.w.norm_l2();
        let first = match self.variant {
            Variant::DirichletA => {
                let du = self.u.derivative()?;
                du.norm_l2().powi(2)
            }
            Variant::NeumannA => {
                let du = self.u.derivative()?;
                self.u.norm_l2().powi(2) + du.norm_l2().powi(2)
            }
            Variant::NeumannB => self.u.norm_l2().powi(2),
        };
        Ok((first + vv * vv + ww * ww).sqrt())
    }

    /// Physical energy: half the squared seminorm `|u'|^2 + |v|^2 + |w|^2`
    /// (for NeumannB the slope variable already is the strain, so this is
    /// half the squared state norm).
    pub fn energy(&self) -> Result<T> {
        let half = real::<T>(0.5);
        let vv = self.v.norm_l2().powi(2);
        let ww = self.w.norm_l2().powi(2);
        let strain = match self.variant {
            Variant::DirichletA | Variant::NeumannA => self.u.derivative()?.norm_l2().powi(2),
            Variant::NeumannB => self.u.norm_l2().powi(2),
        };
        Ok(half * (strain + vv + ww))
    }

    /// Linear combination `self + other * c` on shared grids.
    pub fn axpy(&self, other: &Self, c: crate::scalar::Cplx<T>) -> Result<Self> {
        if self.variant != other.variant {
            return Err(Error::contract("state combination across variants"));
        }
        Ok(Self {
            variant: self.variant,
            u: self.u.zip(&other.u, |a, b| a + b * c)?,
            v: self.v.zip(&other.v, |a, b| a + b * c)?,
            w: self.w.zip(&other.w, |a, b| a + b * c)?,
        })
    }
}

/// Sampled energy history of a run, with the instantaneous dissipation
/// estimate `int |w_xi|^2`.
#[derive(Debug, Clone)]
pub struct EnergyTrace<T: Real> {
    pub times: Vec<T>,
    pub energies: Vec<T>,
    pub dissipation: Vec<T>,
}

impl<T: Real> EnergyTrace<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest one-step energy increase (0 for a monotone trace).
    pub fn max_uptick(&self) -> T {
        let mut worst = T::zero();
        for k in 1..self.energies.len() {
            worst = worst.max(self.energies[k] - self.energies[k - 1]);
        }
        worst
    }
}
