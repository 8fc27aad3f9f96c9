//! Floating-point abstraction for the neural kernels, with branch-free `exp`,
//! sigmoid and tanh. The slice loops carry no calls or data-dependent
//! branches, so the compiler vectorizes them; accuracy is within a few ulps of
//! the standard library.

use std::fmt::Debug;
use std::ops::{AddAssign, MulAssign, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::Float;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Real:
    LinalgScalar
    + Float
    + ScalarOperand
    + AddAssign
    + SubAssign
    + MulAssign
    + Debug
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
{
    fn of(v: f64) -> Self;
    fn as_f64(self) -> f64;
    /// `e^x`; overflows to infinity and underflows to a tiny positive value.
    fn exp_fast(self) -> Self;
}

impl Real for f64 {
    #[inline(always)]
    fn of(v: f64) -> Self {
        v
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self
    }

    #[inline(always)]
    fn exp_fast(self) -> Self {
        // 1.5 * 2^52: adding it rounds to an integer held in the low mantissa bits
        const SHIFTER: f64 = 6_755_399_441_055_744.0;
        const LN2_HI: f64 = 0.693_147_180_369_123_816_49;
        const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
        let x = self.clamp(-708.0, 710.0);
        let kf = x * std::f64::consts::LOG2_E + SHIFTER;
        let k = kf - SHIFTER;
        let r = x - k * LN2_HI - k * LN2_LO;
        // Taylor series to degree 12 on |r| <= ln2 / 2
        let mut p = 1.0 / 479_001_600.0;
        p = p * r + 1.0 / 39_916_800.0;
        p = p * r + 1.0 / 3_628_800.0;
        p = p * r + 1.0 / 362_880.0;
        p = p * r + 1.0 / 40_320.0;
        p = p * r + 1.0 / 5_040.0;
        p = p * r + 1.0 / 720.0;
        p = p * r + 1.0 / 120.0;
        p = p * r + 1.0 / 24.0;
        p = p * r + 1.0 / 6.0;
        p = p * r + 0.5;
        p = p * r + 1.0;
        p = p * r + 1.0;
        p * f64::from_bits(kf.to_bits().wrapping_add(1023) << 52)
    }
}

impl Real for f32 {
    #[inline(always)]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self as f64
    }

    #[inline(always)]
    fn exp_fast(self) -> Self {
        const SHIFTER: f32 = 12_582_912.0;
        const LN2_HI: f32 = 0.693_359_4;
        const LN2_LO: f32 = -2.121_944_4e-4;
        let x = self.clamp(-87.0, 89.0);
        let kf = x * std::f32::consts::LOG2_E + SHIFTER;
        let k = kf - SHIFTER;
        let r = x - k * LN2_HI - k * LN2_LO;
        let mut p = 1.0 / 40_320.0;
        p = p * r + 1.0 / 5_040.0;
        p = p * r + 1.0 / 720.0;
        p = p * r + 1.0 / 120.0;
        p = p * r + 1.0 / 24.0;
        p = p * r + 1.0 / 6.0;
        p = p * r + 0.5;
        p = p * r + 1.0;
        p = p * r + 1.0;
        p * f32::from_bits(kf.to_bits().wrapping_add(127) << 23)
    }
}

#[inline(always)]
pub(crate) fn sigmoid<T: Real>(z: T) -> T {
    T::one() / (T::one() + (-z).exp_fast())
}

#[inline(always)]
pub(crate) fn tanh<T: Real>(z: T) -> T {
    let two = T::one() + T::one();
    T::one() - two / ((two * z).exp_fast() + T::one())
}

pub(crate) fn sigmoid_slice<T: Real>(x: &mut [T]) {
    for v in x {
        *v = sigmoid(*v);
    }
}

pub(crate) fn tanh_slice<T: Real>(x: &mut [T]) {
    for v in x {
        *v = tanh(*v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_matches_std() {
        let mut x = -700.0f64;
        while x < 700.0 {
            let (a, b) = (x.exp_fast(), x.exp());
            assert!(((a - b) / b).abs() < 4e-16, "exp({x}) = {a}, std {b}");
            x += 0.137;
        }
        let mut x = -85.0f32;
        while x < 85.0 {
            let (a, b) = (x.exp_fast(), x.exp());
            assert!(((a - b) / b).abs() < 3e-7, "exp({x}) = {a}, std {b}");
            x += 0.0137;
        }
        assert_eq!(0.0f64.exp_fast(), 1.0);
        assert_eq!(1000.0f64.exp_fast(), f64::INFINITY);
        assert_eq!(1000.0f32.exp_fast(), f32::INFINITY);
        assert!((-1000.0f64).exp_fast() < 1e-300);
    }

    #[test]
    fn saturating_activations_are_exact() {
        assert_eq!(sigmoid(1000.0f64), 1.0);
        assert_eq!(sigmoid(-1000.0f64), 0.0);
        assert_eq!(tanh(1000.0f64), 1.0);
        assert_eq!(tanh(-1000.0f64), -1.0);
        assert_eq!(sigmoid(-1000.0f32), 0.0);
        assert_eq!(tanh(1000.0f32), 1.0);
    }

    #[test]
    fn activations_match_std() {
        for i in -400..400 {
            let z = i as f64 * 0.05;
            assert!((sigmoid(z) - 1.0 / (1.0 + (-z).exp())).abs() < 1e-15);
            assert!((tanh(z) - z.tanh()).abs() < 1e-15);
            let zf = z as f32;
            assert!((sigmoid(zf) - 1.0 / (1.0 + (-zf).exp())).abs() < 3e-7);
            assert!((tanh(zf) - zf.tanh()).abs() < 3e-7);
        }
    }
}
