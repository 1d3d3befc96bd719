//! Stationary Gaussian forcing with the field's symmetric spectrum at the atom.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::greens::{field_hadamard_ft, AtomParams, Bath};

/// Sampled forcing `ξ(t_n) = (e/m)·φ(z, t_n)`, `n = 0..=n_steps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseRealization {
    pub dt: f64,
    pub n_steps: usize,
    pub samples: Vec<f64>,
    pub seed: u64,
    pub cutoff: f64,
}

impl NoiseRealization {
    /// Wraps explicit samples (deterministic forcing, tests).
    pub fn from_samples(dt: f64, samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientSamples("forcing needs at least two samples".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", dt, "must be positive"));
        }
        Ok(Self {
            dt,
            n_steps: samples.len() - 1,
            samples,
            seed: 0,
            cutoff: f64::INFINITY,
        })
    }

    /// Zero forcing over `n_steps` steps.
    pub fn silent(dt: f64, n_steps: usize) -> Result<Self> {
        Self::from_samples(dt, vec![0.0; n_steps + 1])
    }

    /// Same realization with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|x| *x *= factor);
        out
    }
}

/// `S(κ) = (e/m)²·Ḡ_{0,H}(0;κ)`, the target two-sided spectral density.
pub fn forcing_spectrum(kappa: f64, p: &AtomParams, bath: Bath) -> f64 {
    let e_over_m = p.coupling() / p.mass();
    e_over_m * e_over_m * field_hadamard_ft(0.0, kappa, bath)
}

/// Precomputed mode amplitudes and FFT plan for repeated synthesis.
#[derive(Clone)]
pub struct NoiseSynthesizer {
    dt: f64,
    n_steps: usize,
    cutoff: f64,
    /// Standard deviation of each mode `k = 0..=M/2`.
    sigma: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    len: usize,
}

impl std::fmt::Debug for NoiseSynthesizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoiseSynthesizer")
            .field("dt", &self.dt)
            .field("n_steps", &self.n_steps)
            .field("cutoff", &self.cutoff)
            .field("fft_len", &self.len)
            .finish()
    }
}

impl NoiseSynthesizer {
    pub fn new(p: &AtomParams, bath: Bath, cutoff: f64, dt: f64, t_total: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", dt, "must be positive"));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::invalid("cutoff", cutoff, "must be positive"));
        }
        let limit = PI / cutoff;
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::Nyquist { dt, cutoff, limit });
        }
        if !(t_total > 0.0 && t_total.is_finite()) {
            return Err(Error::invalid("t_total", t_total, "must be positive"));
        }
        let n_steps = (t_total / dt).round().max(1.0) as usize;
        let len = (n_steps + 1).next_power_of_two().max(2);
        let dk = 2.0 * PI / (len as f64 * dt);
        let norm = 1.0 / (len as f64 * dt);
        let sigma = (0..=len / 2)
            .map(|k| {
                let kappa = k as f64 * dk;
                if kappa > cutoff {
                    0.0
                } else {
                    (forcing_spectrum(kappa, p, bath) * norm).sqrt()
                }
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(len);
        Ok(Self {
            dt,
            n_steps,
            cutoff,
            sigma,
            fft,
            len,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn fft_len(&self) -> usize {
        self.len
    }

    /// Sum of mode variances: the stationary variance of the synthesized process.
    pub fn variance(&self) -> f64 {
        let half = self.len / 2;
        self.sigma
            .iter()
            .enumerate()
            .map(|(k, s)| if k == 0 || k == half { s * s } else { 2.0 * s * s })
            .sum()
    }

    /// One realization; draws `M` standard normals from `rng` in mode order.
    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R, seed: u64) -> NoiseRealization {
        let len = self.len;
        let half = len / 2;
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for k in 0..=half {
            let s = self.sigma[k];
            if k == 0 || k == half {
                let x: f64 = rng.sample(StandardNormal);
                buf[k] = Complex64::new(s * x, 0.0);
            } else {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                let c = Complex64::new(a, b) * (s * std::f64::consts::FRAC_1_SQRT_2);
                buf[k] = c;
                buf[len - k] = c.conj();
            }
        }
        // ξ_n = Σ_k c_k e^{−2πikn/M}: the forward transform.
        self.fft.process(&mut buf);
        let samples = buf[..=self.n_steps].iter().map(|c| c.re).collect();
        NoiseRealization {
            dt: self.dt,
            n_steps: self.n_steps,
            samples,
            seed,
            cutoff: self.cutoff,
        }
    }
}

/// Synthesizes one realization seeded by `seed`.
pub fn synthesize_noise(
    bath: Bath,
    p: &AtomParams,
    cutoff: f64,
    dt: f64,
    t_total: f64,
    seed: u64,
) -> Result<NoiseRealization> {
    let synth = NoiseSynthesizer::new(p, bath, cutoff, dt, t_total)?;
    let mut rng = super::trajectory_rng(seed, 0);
    Ok(synth.realize(&mut rng, seed))
}
