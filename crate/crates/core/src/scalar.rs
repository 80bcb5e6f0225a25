//! Scalar abstractions.
//!
//! All discretisation and solver code is written against [`Real`] (the
//! coefficient type, `f32` or `f64`) and [`Field`] (the arithmetic type of a
//! linear system, either a `Real` or its complex extension).

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, One, ToPrimitive, Zero};

/// Real floating point coefficient type.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; used for literal constants.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Scalar type of a sparse system: a [`Real`] or `Complex<Real>`.
pub trait Field:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + 'static
{
    type Real: Real;

    fn conj(self) -> Self;
    fn modulus(self) -> Self::Real;
    fn from_real(r: Self::Real) -> Self;
    fn to_complex(self) -> Complex<Self::Real>;
    /// `None` when the value cannot be represented in this field
    /// (a non-zero imaginary part for a real field).
    fn from_complex(z: Complex<Self::Real>) -> Option<Self>;
    fn scale(self, r: Self::Real) -> Self;
}

macro_rules! impl_real_field {
    ($t:ty) => {
        impl Field for $t {
            type Real = $t;

            #[inline]
            fn conj(self) -> Self {
                self
            }
            #[inline]
            fn modulus(self) -> $t {
                self.abs()
            }
            #[inline]
            fn from_real(r: $t) -> Self {
                r
            }
            #[inline]
            fn to_complex(self) -> Complex<$t> {
                Complex::new(self, 0.0)
            }
            #[inline]
            fn from_complex(z: Complex<$t>) -> Option<Self> {
                (z.im == 0.0).then_some(z.re)
            }
            #[inline]
            fn scale(self, r: $t) -> Self {
                self * r
            }
        }
    };
}

macro_rules! impl_complex_field {
    ($t:ty) => {
        impl Field for Complex<$t> {
            type Real = $t;

            #[inline]
            fn conj(self) -> Self {
                Complex::conj(&self)
            }
            #[inline]
            fn modulus(self) -> $t {
                self.norm()
            }
            #[inline]
            fn from_real(r: $t) -> Self {
                Complex::new(r, 0.0)
            }
            #[inline]
            fn to_complex(self) -> Complex<$t> {
                self
            }
            #[inline]
            fn from_complex(z: Complex<$t>) -> Option<Self> {
                Some(z)
            }
            #[inline]
            fn scale(self, r: $t) -> Self {
                Complex::new(self.re * r, self.im * r)
            }
        }
    };
}

impl_real_field!(f32);
impl_real_field!(f64);
impl_complex_field!(f32);
impl_complex_field!(f64);

/// Euclidean norm of a vector over any field.
pub fn norm2<F: Field>(v: &[F]) -> F::Real {
    let mut scale = F::Real::zero();
    let mut ssq = F::Real::one();
    for &x in v {
        let z = x.to_complex();
        for c in [z.re, z.im] {
            if c != F::Real::zero() {
                let a = c.abs();
                if scale < a {
                    ssq = F::Real::one() + ssq * (scale / a) * (scale / a);
                    scale = a;
                } else {
                    ssq = ssq + (a / scale) * (a / scale);
                }
            }
        }
    }
    scale * ssq.sqrt()
}

/// `x^H y`.
pub fn dot_conj<F: Field>(x: &[F], y: &[F]) -> F {
    x.iter()
        .zip(y)
        .fold(F::zero(), |acc, (&a, &b)| acc + a.conj() * b)
}

/// Normalises `v` to unit 2-norm in place and returns the previous norm.
pub fn normalize<F: Field>(v: &mut [F]) -> F::Real {
    let nrm = norm2(v);
    if nrm > F::Real::zero() {
        let inv = nrm.recip();
        v.iter_mut().for_each(|x| *x = x.scale(inv));
    }
    nrm
}
