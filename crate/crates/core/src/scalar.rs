//! Scalar abstraction: the whole crate is generic over the floating type.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating scalar the toolkit works over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
}

/// Complex number over the crate scalar.
pub type Cplx<T> = num_complex::Complex<T>;

/// Convert an `f64` literal into the working scalar.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal not representable in scalar type")
}

/// Complex value from `f64` literals.
#[inline]
pub fn cplx<T: Real>(re: f64, im: f64) -> Cplx<T> {
    Cplx::new(real(re), real(im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_convert_for_both_widths() {
        let a: f32 = real(0.5);
        let b: f64 = real(0.5);
        assert_eq!(a, 0.5f32);
        assert_eq!(b, 0.5f64);
        let z: Cplx<f32> = cplx(1.0, -2.0);
        assert_eq!(z.re, 1.0);
        assert_eq!(z.im, -2.0);
    }
}
