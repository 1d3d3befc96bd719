//! Time-domain cross-check: the atom's oscillator driven by a classical
//! Gaussian surrogate of the free field at its position.
//!
//! The forcing has the field's symmetric spectrum, so equilibrium second
//! moments of the simulated ensemble must reproduce the frequency-domain
//! predictions of [`predicted_variance`] for the same cutoff.

mod ensemble;
mod integrator;
mod io;
mod noise;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use ensemble::{
    equilibrium_stats, fit_relaxation, relaxation_spec, run_ensemble, simulate_trajectory,
    EnsembleOutcome, EnsembleSpec, EquilibriumStats, InitialState, RelaxationFit, SeriesPoint,
};
pub use integrator::{integrate, Stepper, Trajectory};
pub use io::{read_trajectory, write_trajectory};
pub use noise::{forcing_spectrum, synthesize_noise, NoiseRealization, NoiseSynthesizer};

use crate::error::Result;
use crate::greens::{kappa_coth, AtomParams, Bath, FrequencyGrid};
use crate::spectral::{integrate_spectrum, QuadratureResult};

/// Points per damping width used by [`predicted_variance`].
const VARIANCE_POINTS_PER_WIDTH: f64 = 8.0;
const MAX_VARIANCE_POINTS: usize = 1 << 23;

/// Generator for trajectory `index` of the ensemble seeded by `seed`.
///
/// Each index gets its own ChaCha stream, so draws never depend on how
/// trajectories are scheduled across workers.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Default step: half the Nyquist limit of the synthesis cutoff.
pub fn default_time_step(cutoff: f64) -> f64 {
    std::f64::consts::PI / (2.0 * cutoff)
}

fn variance_grid(p: &AtomParams, cutoff: f64) -> Result<FrequencyGrid> {
    FrequencyGrid::resolving(cutoff, p.damping(), VARIANCE_POINTS_PER_WIDTH, MAX_VARIANCE_POINTS)
}

/// Equilibrium `⟨Q²⟩ = (1/m)∫ dκ/2π coth(βκ/2) Im G̅_R(κ)` over `(−Λ, Λ)`.
///
/// Must be evaluated at the same cutoff as the noise it is compared with.
pub fn predicted_variance(p: &AtomParams, bath: Bath, cutoff: f64) -> Result<QuadratureResult<f64>> {
    let grid = variance_grid(p, cutoff)?;
    let m = p.mass();
    let mut res = integrate_spectrum(|k| coth_im_g(k, p, bath) / m, &grid)?;
    res.est_error = res.est_error.max(16.0 * f64::EPSILON * res.value.abs());
    Ok(res)
}

/// Equilibrium `⟨Q̇²⟩`, the same integral weighted by `κ²`.
pub fn predicted_velocity_variance(
    p: &AtomParams,
    bath: Bath,
    cutoff: f64,
) -> Result<QuadratureResult<f64>> {
    let grid = variance_grid(p, cutoff)?;
    let m = p.mass();
    let mut res = integrate_spectrum(|k| k * k * coth_im_g(k, p, bath) / m, &grid)?;
    res.est_error = res.est_error.max(16.0 * f64::EPSILON * res.value.abs());
    Ok(res)
}

/// `coth(βκ/2)·Im g(κ)`, written through `κ coth` so that it is finite at 0.
fn coth_im_g(k: f64, p: &AtomParams, bath: Bath) -> f64 {
    let w = p.frequency();
    let (re, im) = (w * w - k * k, 2.0 * p.damping());
    // Im g = 2γκ/|…|², so coth·Im g = 2γ·(κ coth)/|…|².
    im * kappa_coth(k, bath) / (re * re + im * im * k * k)
}
