//! Forward noising and the DDPM / DDIM reverse steps, plus the strided
//! sampling loop that turns a noise predictor into trajectories.

use ndarray::{Array3, Zip};
use serde::{Deserialize, Serialize};

use super::schedule::NoiseSchedule;
use crate::data::ConditionVector;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::{stream_rng, STREAM_SAMPLE};

/// How the per-step noise scale sigma_t is chosen during reverse sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// sigma_t chosen so each DDIM hop matches the DDPM posterior step.
    DdpmEquivalent,
    /// sigma_t = 0 everywhere: fully deterministic given x_T.
    #[default]
    DeterministicEta0,
}

/// Reverse-sampling configuration. Serialized into run configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    /// Maximum diffusion timestep T.
    pub t_max: usize,
    /// Number of reverse substeps S (T/5 by default, i.e. stride 5).
    pub substeps: usize,
    pub sigma_mode: SigmaMode,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            t_max: 1000,
            substeps: 200,
            sigma_mode: SigmaMode::default(),
            seed: 0,
        }
    }
}

/// A batch of noisy trajectories at a common timestep.
#[derive(Debug, Clone)]
pub struct NoisyState<F> {
    /// Shape `(batch, n_points, 2)`, normalized coordinates.
    pub x: Array3<F>,
    /// Timestep in `1..=T` (0 only as the output of the final reverse hop).
    pub t: usize,
}

fn check_timestep<F: Real>(t: usize, schedule: &NoiseSchedule<F>) -> Result<()> {
    if t < 1 || t > schedule.len() {
        return Err(Error::Contract(format!(
            "timestep {t} outside 1..={}",
            schedule.len()
        )));
    }
    Ok(())
}

fn check_same_shape<F: Real>(a: &Array3<F>, b: &Array3<F>, what: &str) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Contract(format!(
            "{what}: shape {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Forward process: `x_t = sqrt(alpha_bar_t) x_0 + sqrt(1 - alpha_bar_t) eps`.
pub fn forward_sample<F: Real>(
    x0: &Array3<F>,
    t: usize,
    eps: &Array3<F>,
    schedule: &NoiseSchedule<F>,
) -> Result<NoisyState<F>> {
    check_timestep(t, schedule)?;
    check_same_shape(x0, eps, "forward_sample eps")?;
    let ab = schedule.alpha_bar(t);
    let signal = ab.sqrt();
    let noise = (F::one() - ab).sqrt();
    let mut x = x0.clone();
    Zip::from(&mut x).and(eps).for_each(|x, &e| {
        *x = signal * *x + noise * e;
    });
    Ok(NoisyState { x, t })
}

/// Per-element forward process where each batch row gets its own timestep.
pub fn forward_sample_each<F: Real>(
    x0: &Array3<F>,
    ts: &[usize],
    eps: &Array3<F>,
    schedule: &NoiseSchedule<F>,
) -> Result<Array3<F>> {
    check_same_shape(x0, eps, "forward_sample eps")?;
    if ts.len() != x0.dim().0 {
        return Err(Error::Contract(format!(
            "timestep count {} vs batch {}",
            ts.len(),
            x0.dim().0
        )));
    }
    let mut x = x0.clone();
    for (i, &t) in ts.iter().enumerate() {
        check_timestep(t, schedule)?;
        let ab = schedule.alpha_bar(t);
        let signal = ab.sqrt();
        let noise = (F::one() - ab).sqrt();
        let mut row = x.index_axis_mut(ndarray::Axis(0), i);
        Zip::from(&mut row)
            .and(&eps.index_axis(ndarray::Axis(0), i))
            .for_each(|x, &e| *x = signal * *x + noise * e);
    }
    Ok(x)
}

/// One DDPM posterior step from `t` down to `t - 1`:
/// `x_{t-1} = mu_t(x_t) + sigma_t z` with
/// `mu_t = (x_t - (1 - alpha_t) / sqrt(1 - alpha_bar_t) eps_hat) / sqrt(alpha_t)`
/// and `sigma_t^2 = (1 - alpha_bar_{t-1})(1 - alpha_t) / (1 - alpha_bar_t)`.
/// `z` is ignored at `t = 1`, where the step is deterministic.
pub fn ddpm_step<F: Real>(
    state: &NoisyState<F>,
    eps_hat: &Array3<F>,
    z: &Array3<F>,
    schedule: &NoiseSchedule<F>,
) -> Result<NoisyState<F>> {
    let t = state.t;
    check_timestep(t, schedule)?;
    check_same_shape(&state.x, eps_hat, "ddpm_step eps_hat")?;
    check_same_shape(&state.x, z, "ddpm_step z")?;
    let alpha = schedule.alpha(t);
    let ab = schedule.alpha_bar(t);
    let ab_prev = schedule.alpha_bar(t - 1);
    let mean_x = F::one() / alpha.sqrt();
    let mean_e = -(F::one() - alpha) / (alpha.sqrt() * (F::one() - ab).sqrt());
    let sigma = if t == 1 {
        F::zero()
    } else {
        ((F::one() - ab_prev) * (F::one() - alpha) / (F::one() - ab)).sqrt()
    };
    let mut x = Array3::zeros(state.x.dim());
    Zip::from(&mut x)
        .and(&state.x)
        .and(eps_hat)
        .and(z)
        .for_each(|o, &x, &e, &z| {
            *o = mean_x * x + mean_e * e + sigma * z;
        });
    Ok(NoisyState { x, t: t - 1 })
}

/// sigma_t that makes the DDIM step coincide with the DDPM posterior:
/// `sqrt((1 - ab_prev) / (1 - ab_t)) * sqrt(1 - ab_t / ab_prev)`.
pub fn sigma_ddpm_equivalent<F: Real>(
    t: usize,
    t_prev: usize,
    schedule: &NoiseSchedule<F>,
) -> Result<F> {
    check_timestep(t, schedule)?;
    if t_prev >= t {
        return Err(Error::Contract(format!("need t_prev < t, got {t_prev} >= {t}")));
    }
    let ab = schedule.alpha_bar(t);
    let ab_prev = schedule.alpha_bar(t_prev);
    let v = (F::one() - ab_prev) / (F::one() - ab) * (F::one() - ab / ab_prev);
    Ok(v.max(F::zero()).sqrt())
}

/// One DDIM step from `t = state.t` down to `t_prev`:
/// `x_prev = sqrt(ab_prev) x0_pred + sqrt(1 - ab_prev - sigma^2) eps_hat + sigma z`
/// where `x0_pred = (x_t - sqrt(1 - ab_t) eps_hat) / sqrt(ab_t)`.
///
/// A radicand in `[-1e-12, 0)` is treated as float roundoff and clamped to 0;
/// anything more negative means sigma is genuinely too large.
pub fn ddim_step<F: Real>(
    state: &NoisyState<F>,
    t_prev: usize,
    eps_hat: &Array3<F>,
    sigma: F,
    z: &Array3<F>,
    schedule: &NoiseSchedule<F>,
) -> Result<NoisyState<F>> {
    let t = state.t;
    check_timestep(t, schedule)?;
    if t_prev >= t {
        return Err(Error::Contract(format!("need t_prev < t, got {t_prev} >= {t}")));
    }
    if sigma < F::zero() {
        return Err(Error::Contract("sigma must be nonnegative".into()));
    }
    check_same_shape(&state.x, eps_hat, "ddim_step eps_hat")?;
    check_same_shape(&state.x, z, "ddim_step z")?;
    let ab = schedule.alpha_bar(t);
    let ab_prev = schedule.alpha_bar(t_prev);
    let radicand = F::one() - ab_prev - sigma * sigma;
    let tol = F::from_f64(-1e-12);
    let radicand = if radicand >= F::zero() {
        radicand
    } else if radicand >= tol {
        F::zero()
    } else {
        return Err(Error::SigmaTooLarge(format!(
            "1 - alpha_bar({t_prev}) - sigma^2 = {:e}",
            radicand.to_f64()
        )));
    };
    // Coefficients on x_t, eps_hat and z.
    let c_x = (ab_prev / ab).sqrt();
    let c_e = radicand.sqrt() - (ab_prev * (F::one() - ab) / ab).sqrt();
    let mut x = Array3::zeros(state.x.dim());
    Zip::from(&mut x)
        .and(&state.x)
        .and(eps_hat)
        .and(z)
        .for_each(|o, &x, &e, &z| {
            *o = c_x * x + c_e * e + sigma * z;
        });
    Ok(NoisyState { x, t: t_prev })
}

/// Strided substep timesteps: stride `ceil(T / S)`, ending exactly at `T`,
/// strictly increasing, first element >= 1. The reverse loop walks the list
/// back to front and finishes with a hop to `t_prev = 0`.
pub fn make_substep_schedule(t_max: usize, substeps: usize) -> Vec<usize> {
    assert!(substeps >= 1 && substeps <= t_max, "need 1 <= S <= T");
    let stride = t_max.div_ceil(substeps);
    let count = (t_max - 1) / stride + 1;
    (0..count).rev().map(|i| t_max - i * stride).collect()
}

/// Anything that can estimate the forward noise from `(x_t, t, c)`.
pub trait NoisePredictor<F: Real> {
    fn predict(
        &self,
        x_t: &Array3<F>,
        ts: &[usize],
        cond: &[ConditionVector],
    ) -> Result<Array3<F>>;
}

impl<F: Real, P: Fn(&Array3<F>, &[usize], &[ConditionVector]) -> Array3<F>> NoisePredictor<F>
    for P
{
    fn predict(
        &self,
        x_t: &Array3<F>,
        ts: &[usize],
        cond: &[ConditionVector],
    ) -> Result<Array3<F>> {
        Ok(self(x_t, ts, cond))
    }
}

/// Run the strided reverse process from pure noise down to `t = 0` for one
/// condition per output trajectory.
///
/// Noise for trajectory `i` comes from ChaCha8 stream `STREAM_SAMPLE + i` of
/// `seed` (first the `n_points * 2` values of `x_T`, then one `z` per
/// stochastic hop), so the output is a pure function of
/// `(predictor, cond, configs, seed)` and independent of batching.
pub fn generate<F: Real>(
    predictor: &dyn NoisePredictor<F>,
    cond: &[ConditionVector],
    n_points: usize,
    sampler: &SamplerConfig,
    schedule: &NoiseSchedule<F>,
    seed: u64,
) -> Result<Array3<F>> {
    let n = cond.len();
    if sampler.t_max != schedule.len() {
        return Err(Error::Contract(format!(
            "sampler t_max {} vs schedule length {}",
            sampler.t_max,
            schedule.len()
        )));
    }
    if n == 0 {
        return Ok(Array3::zeros((0, n_points, 2)));
    }
    let mut rngs: Vec<_> = (0..n)
        .map(|i| stream_rng(seed, STREAM_SAMPLE + i as u64))
        .collect();

    let mut x = Array3::<F>::zeros((n, n_points, 2));
    for (i, rng) in rngs.iter_mut().enumerate() {
        for p in 0..n_points {
            for c in 0..2 {
                x[[i, p, c]] = F::std_normal(rng);
            }
        }
    }

    let ts = make_substep_schedule(sampler.t_max, sampler.substeps);
    let mut state = NoisyState { x, t: *ts.last().expect("nonempty") };
    for k in (0..ts.len()).rev() {
        debug_assert_eq!(state.t, ts[k]);
        let t_prev = if k > 0 { ts[k - 1] } else { 0 };
        // The final hop to t_prev = 0 is always deterministic.
        let sigma = match sampler.sigma_mode {
            SigmaMode::DdpmEquivalent if k > 0 => {
                sigma_ddpm_equivalent(state.t, t_prev, schedule)?
            }
            _ => F::zero(),
        };
        let eps_hat = predictor.predict(&state.x, &vec![state.t; n], cond)?;
        if eps_hat.dim() != state.x.dim() {
            return Err(Error::Contract(format!(
                "predictor returned shape {:?}, expected {:?}",
                eps_hat.dim(),
                state.x.dim()
            )));
        }
        let mut z = Array3::<F>::zeros(state.x.dim());
        if sigma > F::zero() {
            for (i, rng) in rngs.iter_mut().enumerate() {
                for p in 0..n_points {
                    for c in 0..2 {
                        z[[i, p, c]] = F::std_normal(rng);
                    }
                }
            }
        }
        state = ddim_step(&state, t_prev, &eps_hat, sigma, &z, schedule)?;
    }
    Ok(state.x)
}
