//! Minimal banded-matrix storage, matvec, and LU with partial pivoting.
//!
//! Storage is LAPACK-style band-by-column with `kl` extra upper diagonals
//! reserved for pivoting fill-in.

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

#[derive(Debug, Clone)]
pub struct Banded<T: Real> {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    /// entry (i, j) lives at data[j * height + (i - j + kl + ku)]
    data: Vec<T>,
}

impl<T: Real> Banded<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let height = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            data: vec![T::zero(); n * height],
        }
    }

    #[inline]
    fn height(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.height() + (i + self.kl + self.ku - j)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        // extended band: j - i <= kl + ku (pivot fill-in), i - j <= kl
        if j > i + self.kl + self.ku || i > j + self.kl {
            return T::zero();
        }
        self.data[self.idx(i, j)]
    }

    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(i < self.n && j < self.n);
        assert!(
            j <= i + self.ku && i <= j + self.kl,
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let at = self.idx(i, j);
        self.data[at] += v;
    }

    /// y = A x for complex x with real band entries.
    pub fn matvec(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![Cplx::new(T::zero(), T::zero()); self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.kl);
            let j1 = (i + self.ku).min(self.n - 1);
            let mut acc = Cplx::new(T::zero(), T::zero());
            for j in j0..=j1 {
                acc = acc + x[j] * self.data[self.idx(i, j)];
            }
            y[i] = acc;
        }
        y
    }

    /// LU factorisation with partial pivoting (consumes a copy).
    pub fn factor(&self) -> Result<BandedLu<T>> {
        let mut a = self.clone();
        let n = a.n;
        let kl = a.kl;
        let ku = a.ku + a.kl; // effective upper bandwidth after pivoting
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            // pivot among rows k..=k+kl
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a.get(k, k).abs();
            for i in k + 1..=last {
                let v = a.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() {
                return Err(Error::contract("singular banded matrix"));
            }
            pivots[k] = p;
            if p != k {
                // swap rows k and p across columns k..=k+ku
                let jend = (k + ku).min(n - 1);
                for j in k..=jend {
                    let ik = a.idx(k, j);
                    let ip = a.idx(p, j);
                    a.data.swap(ik, ip);
                }
            }
            let akk = a.data[a.idx(k, k)];
            for i in k + 1..=last {
                let l = a.data[a.idx(i, k)] / akk;
                a.data[a.idx(i, k)] = l;
                let jend = (k + ku).min(n - 1);
                for j in k + 1..=jend {
                    let ak = a.data[a.idx(k, j)];
                    let at = a.idx(i, j);
                    a.data[at] -= l * ak;
                }
            }
        }
        Ok(BandedLu { a, pivots })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu<T: Real> {
    a: Banded<T>,
    pivots: Vec<usize>,
}

impl<T: Real> BandedLu<T> {
    /// Solve A x = b in place (real right-hand side).
    pub fn solve(&self, b: &mut [T]) {
        let n = self.a.n;
        let kl = self.a.kl;
        let ku = self.a.ku + self.a.kl;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let last = (k + kl).min(n - 1);
            let bk = b[k];
            for i in k + 1..=last {
                b[i] = b[i] - self.a.data[self.a.idx(i, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let jend = (k + ku).min(n - 1);
            let mut acc = b[k];
            for j in k + 1..=jend {
                acc = acc - self.a.data[self.a.idx(k, j)] * b[j];
            }
            b[k] = acc / self.a.data[self.a.idx(k, k)];
        }
    }

    /// Solve for a complex right-hand side (two real solves).
    pub fn solve_complex(&self, b: &mut [Cplx<T>]) {
        let n = b.len();
        let mut re = vec![T::zero(); n];
        let mut im = vec![T::zero(); n];
        for (i, z) in b.iter().enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        self.solve(&mut re);
        self.solve(&mut im);
        for i in 0..n {
            b[i] = Cplx::new(re[i], im[i]);
        }
    }
}
