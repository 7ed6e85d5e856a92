//! Scalar abstraction shared by every closed-form evaluator.
//!
//! `num_traits::Float` is too wide for forward-mode dual numbers, so the
//! evaluators are written against this narrower trait.  It is implemented for
//! `f32`, `f64` and `num_dual::Dual2_64`; the latter gives exact first and
//! second derivatives of any closed form, which the residual checks rely on.

use num_dual::{Dual2_64, DualNum};
use num_traits::{FromPrimitive, Num};
use std::fmt::Debug;
use std::ops::{AddAssign, DivAssign, MulAssign, Neg, SubAssign};

pub trait Real:
    Num
    + Copy
    + Debug
    + PartialOrd
    + FromPrimitive
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Lift an `f64` constant.
    fn c(x: f64) -> Self;
    /// Value part as `f64` (drops derivative parts of dual numbers).
    fn re(self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn acos(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, e: f64) -> Self;
    fn abs(self) -> Self {
        if self.re() < 0.0 {
            -self
        } else {
            self
        }
    }
    fn ci(n: i64) -> Self {
        Self::c(n as f64)
    }
}

macro_rules! impl_real_float {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn c(x: f64) -> Self {
                x as $t
            }
            #[inline]
            fn re(self) -> f64 {
                self as f64
            }
            #[inline]
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            #[inline]
            fn exp(self) -> Self {
                <$t>::exp(self)
            }
            #[inline]
            fn ln(self) -> Self {
                <$t>::ln(self)
            }
            #[inline]
            fn sin(self) -> Self {
                <$t>::sin(self)
            }
            #[inline]
            fn cos(self) -> Self {
                <$t>::cos(self)
            }
            #[inline]
            fn acos(self) -> Self {
                <$t>::acos(self)
            }
            #[inline]
            fn powi(self, n: i32) -> Self {
                <$t>::powi(self, n)
            }
            #[inline]
            fn powf(self, e: f64) -> Self {
                <$t>::powf(self, e as $t)
            }
            #[inline]
            fn abs(self) -> Self {
                <$t>::abs(self)
            }
        }
    };
}

impl_real_float!(f32);
impl_real_float!(f64);

impl Real for Dual2_64 {
    #[inline]
    fn c(x: f64) -> Self {
        Dual2_64::from_re(x)
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn sqrt(self) -> Self {
        DualNum::sqrt(&self)
    }
    #[inline]
    fn exp(self) -> Self {
        DualNum::exp(&self)
    }
    #[inline]
    fn ln(self) -> Self {
        DualNum::ln(&self)
    }
    #[inline]
    fn sin(self) -> Self {
        DualNum::sin(&self)
    }
    #[inline]
    fn cos(self) -> Self {
        DualNum::cos(&self)
    }
    #[inline]
    fn acos(self) -> Self {
        DualNum::acos(&self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        DualNum::powi(&self, n)
    }
    #[inline]
    fn powf(self, e: f64) -> Self {
        DualNum::powf(&self, e)
    }
}

/// Value, first and second derivative of `f` at `x`.
pub fn derivs2<F>(f: F, x: f64) -> (f64, f64, f64)
where
    F: Fn(Dual2_64) -> Dual2_64,
{
    let r = f(Dual2_64::from_re(x).derivative());
    (r.re, r.v1, r.v2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_derivatives_of_sin_sqrt() {
        let (v, d1, d2) = derivs2(|x| x.sin() * x.sqrt(), 0.7);
        let s = 0.7f64.sqrt();
        assert!((v - 0.7f64.sin() * s).abs() < 1e-15);
        let e1 = 0.7f64.cos() * s + 0.7f64.sin() / (2.0 * s);
        assert!((d1 - e1).abs() < 1e-14);
        let e2 = -0.7f64.sin() * s + 0.7f64.cos() / s - 0.7f64.sin() / (4.0 * s * 0.7);
        assert!((d2 - e2).abs() < 1e-13);
    }

    #[test]
    fn f32_and_f64_agree() {
        let a = <f32 as Real>::powf(2.0, 0.5);
        let b = <f64 as Real>::powf(2.0, 0.5);
        assert!((a as f64 - b).abs() < 1e-6);
    }
}
