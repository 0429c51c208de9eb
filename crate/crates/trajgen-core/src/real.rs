//! Floating-point abstraction so the model and samplers can run in f32 for
//! throughput and in f64 for finite-difference gradient verification.

use ndarray::NdFloat;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub trait Real: NdFloat + std::iter::Sum + 'static {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f32 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}
