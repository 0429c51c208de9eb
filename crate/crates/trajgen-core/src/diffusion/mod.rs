//! Forward and reverse diffusion: noise schedules, the reparameterized
//! forward sample, DDPM posterior steps, DDIM steps (with the sigma that
//! makes them coincide), and the strided sampling loop.

mod sampler;
mod schedule;

pub use sampler::{
    ddim_step, ddpm_step, forward_sample, forward_sample_each, generate, make_substep_schedule,
    sigma_ddpm_equivalent, NoisePredictor, NoisyState, SamplerConfig, SigmaMode,
};
pub use schedule::NoiseSchedule;
