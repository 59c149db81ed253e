//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use nalgebra::{DMatrix, DVector};
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
///
/// Dense linear algebra is routed through concrete `nalgebra` matrices in
/// the per-type impls so that generic code only needs `num_traits::Float`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal.
    fn lit(v: f64) -> Self;

    /// Converts a count or index.
    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }

    fn as_f64(self) -> f64;

    /// Solves `A z = rhs` for a dense row-major `n x n` matrix via LU.
    /// Returns `None` when the factorization is singular.
    fn dense_solve(n: usize, a: &[Self], rhs: &[Self]) -> Option<Vec<Self>>;

    /// Damped Gauss-Newton step: solves `(AᵀA + damping·I) z = -Aᵀ r`.
    fn damped_normal_solve(n: usize, a: &[Self], r: &[Self], damping: Self) -> Option<Vec<Self>>;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn lit(v: f64) -> Self {
                v as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            fn dense_solve(n: usize, a: &[Self], rhs: &[Self]) -> Option<Vec<Self>> {
                debug_assert_eq!(a.len(), n * n);
                let m = DMatrix::<$t>::from_row_slice(n, n, a);
                let b = DVector::<$t>::from_column_slice(rhs);
                let z = m.lu().solve(&b)?;
                if z.iter().all(|v| v.is_finite()) {
                    Some(z.as_slice().to_vec())
                } else {
                    None
                }
            }

            fn damped_normal_solve(
                n: usize,
                a: &[Self],
                r: &[Self],
                damping: Self,
            ) -> Option<Vec<Self>> {
                let m = DMatrix::<$t>::from_row_slice(n, n, a);
                let rv = DVector::<$t>::from_column_slice(r);
                let mut normal = m.tr_mul(&m);
                for i in 0..n {
                    normal[(i, i)] += damping;
                }
                let rhs = -(m.tr_mul(&rv));
                let z = normal.cholesky()?.solve(&rhs);
                if z.iter().all(|v| v.is_finite()) {
                    Some(z.as_slice().to_vec())
                } else {
                    None
                }
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solve_small_system() {
        let a = [2.0, 1.0, 1.0, 3.0];
        let z = f64::dense_solve(2, &a, &[3.0, 5.0]).unwrap();
        assert!((z[0] - 0.8).abs() < 1e-12);
        assert!((z[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn singular_system_is_rejected() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert!(f64::dense_solve(2, &a, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn damped_normal_step_reduces_residual() {
        let a = [1.0f32, 0.0, 0.0, 2.0];
        let z = f32::damped_normal_solve(2, &a, &[1.0, 2.0], 0.0).unwrap();
        assert!((z[0] + 1.0).abs() < 1e-5);
        assert!((z[1] + 1.0).abs() < 1e-5);
    }
}
