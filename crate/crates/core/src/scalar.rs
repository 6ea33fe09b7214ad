//! The real/complex field abstraction.
//!
//! Every kernel is generic over [`Scalar`], implemented for `f64` (real
//! mode) and [`Complex64`] (complex mode). Real mode carries no imaginary
//! part at all, so it can never leak a nonzero one downstream.

use core::fmt::{Debug, Display};
use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use core::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Run-wide choice of number field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldMode {
    Real,
    Complex,
}

impl FieldMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldMode::Real => "real",
            FieldMode::Complex => "complex",
        }
    }
}

impl Display for FieldMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FieldMode {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "real" => Ok(FieldMode::Real),
            "complex" => Ok(FieldMode::Complex),
            _ => Err("mode must be `real` or `complex`"),
        }
    }
}

pub trait Scalar:
    Copy
    + Debug
    + Default
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    const MODE: FieldMode;

    fn zero() -> Self {
        Self::default()
    }
    fn from_real(x: f64) -> Self;
    /// Builds a value from real and imaginary parts; real mode drops `im`.
    fn from_parts(re: f64, im: f64) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn conj(self) -> Self;
    fn norm_sqr(self) -> f64;
    fn modulus(self) -> f64;
    fn scale(self, s: f64) -> Self;
    fn is_finite(self) -> bool;
    /// Unimodular factor `self / |self|`; `1` for zero.
    fn phase(self) -> Self;

    /// Measurement-vector entry: `N(0,1)` real, `N(0,½) + jN(0,½)` complex.
    fn sample_measurement<R: Rng + ?Sized>(rng: &mut R) -> Self;
    /// Signal entry: `N(0,1)` real, `N(0,1) + jN(0,1)` complex.
    fn sample_signal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    const MODE: FieldMode = FieldMode::Real;

    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn im(self) -> f64 {
        0.0
    }
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn norm_sqr(self) -> f64 {
        self * self
    }
    #[inline]
    fn modulus(self) -> f64 {
        libm::fabs(self)
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    #[inline]
    fn phase(self) -> Self {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    fn sample_measurement<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
    fn sample_signal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Scalar for Complex64 {
    const MODE: FieldMode = FieldMode::Complex;

    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn im(self) -> f64 {
        self.im
    }
    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    #[inline]
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    #[inline]
    fn modulus(self) -> f64 {
        libm::hypot(self.re, self.im)
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        Complex64::new(self.re * s, self.im * s)
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn phase(self) -> Self {
        let r = self.modulus();
        if r == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            self.scale(1.0 / r)
        }
    }

    fn sample_measurement<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im).scale(core::f64::consts::FRAC_1_SQRT_2)
    }
    fn sample_signal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    }
}
