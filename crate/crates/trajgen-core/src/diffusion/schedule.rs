//! Forward-process noise schedule: beta, alpha = 1 - beta and the cumulative
//! signal-retention product alpha_bar.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::real::Real;

/// Per-timestep noise schedule. Timesteps are 1-based (`1..=len`), matching
/// the convention that `x_0` is clean data; `alpha_bar(0)` is defined as 1 so
/// the final reverse hop is well formed.
#[derive(Debug, Clone)]
pub struct NoiseSchedule<F> {
    betas: Array1<F>,
    alphas: Array1<F>,
    alpha_bars: Array1<F>,
}

impl<F: Real> NoiseSchedule<F> {
    /// Linear beta ramp from `beta_start` to `beta_end` inclusive over `t_max`
    /// steps. Accumulation happens in f64 regardless of `F`.
    pub fn linear(t_max: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if t_max < 1 {
            return Err(Error::Schedule("need at least one timestep".into()));
        }
        if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
            return Err(Error::Schedule(format!(
                "need 0 < beta_start <= beta_end < 1, got [{beta_start}, {beta_end}]"
            )));
        }
        let mut betas = Vec::with_capacity(t_max);
        for i in 0..t_max {
            let frac = if t_max == 1 { 0.0 } else { i as f64 / (t_max - 1) as f64 };
            betas.push(beta_start + (beta_end - beta_start) * frac);
        }
        Ok(Self::from_betas_f64(&betas))
    }

    /// Schedule from explicit beta values (each in `(0, 1)`).
    pub fn from_betas(betas: &[f64]) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::Schedule("need at least one timestep".into()));
        }
        if betas.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(Error::Schedule("every beta must lie in (0, 1)".into()));
        }
        Ok(Self::from_betas_f64(betas))
    }

    fn from_betas_f64(betas: &[f64]) -> Self {
        let mut prod = 1.0f64;
        let mut alphas = Vec::with_capacity(betas.len());
        let mut bars = Vec::with_capacity(betas.len());
        for &b in betas {
            let a = 1.0 - b;
            prod *= a;
            alphas.push(F::from_f64(a));
            bars.push(F::from_f64(prod));
        }
        Self {
            betas: betas.iter().map(|&b| F::from_f64(b)).collect(),
            alphas: Array1::from_vec(alphas),
            alpha_bars: Array1::from_vec(bars),
        }
    }

    /// Number of diffusion timesteps T.
    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    /// `beta_t` for `t` in `1..=T`.
    pub fn beta(&self, t: usize) -> F {
        self.betas[t - 1]
    }

    /// `alpha_t = 1 - beta_t` for `t` in `1..=T`.
    pub fn alpha(&self, t: usize) -> F {
        self.alphas[t - 1]
    }

    /// Cumulative product `alpha_bar_t` for `t` in `0..=T`; `alpha_bar_0 = 1`.
    pub fn alpha_bar(&self, t: usize) -> F {
        if t == 0 {
            F::one()
        } else {
            self.alpha_bars[t - 1]
        }
    }

    pub fn betas(&self) -> &Array1<F> {
        &self.betas
    }

    pub fn alpha_bars(&self) -> &Array1<F> {
        &self.alpha_bars
    }
}
