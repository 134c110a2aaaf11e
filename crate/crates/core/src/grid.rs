//! Complex-valued samples on a uniform 1-D grid with composite-Simpson
//! quadrature weights.

use crate::error::{Error, Result};
use crate::fd;
use crate::quad;
use crate::scalar::{real, Cplx, Real};

/// Uniformly sampled function on `[left, right]` including both endpoints.
///
/// Point counts are odd so the stored weights are an exact composite
/// Simpson rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T: Real> {
    left: T,
    right: T,
    values: Vec<Cplx<T>>,
    weights: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(left: T, right: T, values: Vec<Cplx<T>>) -> Result<Self> {
        let n = values.len();
        if !(right > left) {
            return Err(Error::contract("grid needs right_endpoint > left_endpoint"));
        }
        if n < 3 || n % 2 == 0 {
            return Err(Error::contract(format!(
                "grid needs an odd number of points >= 3, got {n}"
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::contract("grid values must be finite"));
        }
        let h = (right - left) / real::<T>((n - 1) as f64);
        let weights = quad::simpson_weights(n, h);
        Ok(Self {
            left,
            right,
            values,
            weights,
        })
    }

    pub fn zeros(left: T, right: T, n: usize) -> Result<Self> {
        Self::new(left, right, vec![Cplx::new(T::zero(), T::zero()); n])
    }

    /// Sample a complex-valued function at the grid nodes.
    pub fn from_fn(left: T, right: T, n: usize, f: impl Fn(T) -> Cplx<T>) -> Result<Self> {
        let mut g = Self::zeros(left, right, n)?;
        for i in 0..n {
            g.values[i] = f(g.xi(i));
        }
        Ok(g)
    }

    /// Sample a real-valued function at the grid nodes.
    pub fn from_real_fn(left: T, right: T, n: usize, f: impl Fn(T) -> T) -> Result<Self> {
        Self::from_fn(left, right, n, |x| Cplx::new(f(x), T::zero()))
    }

    #[inline]
    pub fn left_endpoint(&self) -> T {
        self.left
    }

    #[inline]
    pub fn right_endpoint(&self) -> T {
        self.right
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn spacing(&self) -> T {
        (self.right - self.left) / real::<T>((self.n_points() - 1) as f64)
    }

    /// Node coordinate; the last node is exactly `right_endpoint`.
    #[inline]
    pub fn xi(&self, i: usize) -> T {
        let n1 = real::<T>((self.n_points() - 1) as f64);
        self.left + (self.right - self.left) * (real::<T>(i as f64) / n1)
    }

    #[inline]
    pub fn values(&self) -> &[Cplx<T>] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Cplx<T>] {
        &mut self.values
    }

    #[inline]
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn first(&self) -> Cplx<T> {
        self.values[0]
    }

    pub fn last(&self) -> Cplx<T> {
        *self.values.last().unwrap()
    }

    /// True when both grids share endpoints and point count.
    pub fn same_grid(&self, other: &Self) -> bool {
        let tol = real::<T>(1e-12) * (T::one() + self.right.abs() + self.left.abs());
        self.n_points() == other.n_points()
            && (self.left - other.left).abs() <= tol
            && (self.right - other.right).abs() <= tol
    }

    /// Weighted L^2 norm.
    pub fn norm_l2(&self) -> T {
        let mut acc = T::zero();
        for (v, w) in self.values.iter().zip(&self.weights) {
            acc += v.norm_sqr() * *w;
        }
        acc.sqrt()
    }

    /// Weighted integral of the samples.
    pub fn integral(&self) -> Cplx<T> {
        let mut acc = Cplx::new(T::zero(), T::zero());
        for (v, w) in self.values.iter().zip(&self.weights) {
            acc = acc + *v * *w;
        }
        acc
    }

    /// Weighted inner product `<self, other>` (conjugate-linear in `other`).
    pub fn inner(&self, other: &Self) -> Result<Cplx<T>> {
        if !self.same_grid(other) {
            return Err(Error::contract("inner product on mismatched grids"));
        }
        let mut acc = Cplx::new(T::zero(), T::zero());
        for ((a, b), w) in self.values.iter().zip(other.values.iter()).zip(&self.weights) {
            acc = acc + *a * b.conj() * *w;
        }
        Ok(acc)
    }

    /// First derivative sampled on the same grid (4th order).
    pub fn derivative(&self) -> Result<Self> {
        let d = fd::derivative1(&self.values, self.spacing())?;
        Self::new(self.left, self.right, d)
    }

    /// Second derivative sampled on the same grid (4th order).
    pub fn second_derivative(&self) -> Result<Self> {
        let d = fd::derivative2(&self.values, self.spacing())?;
        Self::new(self.left, self.right, d)
    }

    /// Cumulative integral from the left endpoint.
    pub fn cumulative(&self) -> Self {
        let c = quad::cumulative(&self.values, self.spacing());
        Self::new(self.left, self.right, c).expect("same grid")
    }

    /// Tail integrals `xi -> int_xi^right`.
    pub fn cumulative_from_right(&self) -> Self {
        let c = quad::cumulative_from_right(&self.values, self.spacing());
        Self::new(self.left, self.right, c).expect("same grid")
    }

    pub fn map(&self, f: impl Fn(T, Cplx<T>) -> Cplx<T>) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| f(self.xi(i), *v))
            .collect();
        Self::new(self.left, self.right, values).expect("same grid")
    }

    /// Linear combination on a shared grid.
    pub fn zip(&self, other: &Self, f: impl Fn(Cplx<T>, Cplx<T>) -> Cplx<T>) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::contract("zip on mismatched grids"));
        }
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| f(*a, *b))
            .collect();
        Self::new(self.left, self.right, values)
    }

    pub fn scale(&self, c: Cplx<T>) -> Self {
        self.map(|_, v| v * c)
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_interval_length() {
        let g = GridFunction::<f64>::zeros(-1.0, 0.0, 257).unwrap();
        let sum: f64 = g.weights().iter().sum();
        assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
        let g = GridFunction::<f64>::zeros(0.0, 40.0, 1001).unwrap();
        let sum: f64 = g.weights().iter().sum();
        assert!((sum - 40.0).abs() / 40.0 < 1e-12);
    }

    #[test]
    fn quadrature_exact_for_low_degree_polynomials() {
        // Simpson integrates cubics exactly
        let g = GridFunction::from_real_fn(0.0, 2.0, 9, |x| {
            1.0 + x - 3.0 * x * x + 0.5 * x * x * x
        })
        .unwrap();
        let truth = 2.0 + 2.0 - 8.0 + 2.0;
        assert_relative_eq!(g.integral().re, truth, epsilon = 1e-12 * truth.abs().max(1.0));
    }

    #[test]
    fn norm_zero_iff_values_zero() {
        let g = GridFunction::<f64>::zeros(0.0, 1.0, 11).unwrap();
        assert_eq!(g.norm_l2(), 0.0);
        let mut g2 = g.clone();
        g2.values_mut()[5] = Cplx::new(1e-300, 0.0);
        assert!(g2.norm_l2() > 0.0);
    }

    #[test]
    fn norms_converge_at_quadrature_order() {
        let f = |x: f64| (3.0 * x).sin().exp();
        let norm = |n: usize| {
            GridFunction::from_real_fn(0.0, 1.0, n, f)
                .unwrap()
                .norm_l2()
        };
        let reference = norm(4097);
        let e1 = (norm(65) - reference).abs();
        let e2 = (norm(129) - reference).abs();
        let rate = (e1 / e2).log2();
        assert!(rate > 3.2 && rate < 5.0, "rate {rate}");
    }

    #[test]
    fn grid_contracts_are_enforced() {
        assert!(GridFunction::<f64>::zeros(0.0, 1.0, 4).is_err());
        assert!(GridFunction::<f64>::zeros(0.0, 1.0, 1).is_err());
        assert!(GridFunction::<f64>::zeros(1.0, 0.0, 5).is_err());
        assert!(GridFunction::new(0.0, 1.0, vec![Cplx::new(f64::NAN, 0.0); 5]).is_err());
    }

    #[test]
    fn derivative_of_linear_is_exact() {
        let g = GridFunction::from_real_fn(-1.0, 0.0, 11, |x| x + 1.0).unwrap();
        let d = g.derivative().unwrap();
        for z in d.values() {
            assert_relative_eq!(z.re, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let g = GridFunction::<f32>::from_real_fn(0.0, 1.0, 33, |x| x).unwrap();
        assert!((g.norm_l2() - (1.0f32 / 3.0).sqrt()).abs() < 1e-5);
    }
}
