//! Energy budget of a static harmonic atom coupled to a massless scalar field.
//!
//! The crate evaluates the frequency-domain Green's functions of the field and
//! of the atom's internal oscillator, checks the fluctuation-dissipation
//! identities that tie them together, integrates the far-field stress-energy
//! flux into a four-way power budget, and cross-checks the frequency-domain
//! predictions against a time-domain Langevin simulation.
//!
//! Natural units are used throughout (ħ = c = k_B = 1).
//!
//! Module map:
//! - [`greens`]: closed-form kernels and the thermal weighting factor.
//! - [`fdr`]: identity reports for the fluctuation-dissipation relations.
//! - [`spectral`]: deterministic quadrature over a symmetric cutoff grid.
//! - [`flux`]: interacting Hadamard function, flux integrand, power budget.
//! - [`langevin`]: colored-noise synthesis, exponential integrator, ensembles.
//! - [`cli`]: configuration and the command drivers behind the binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN-rejecting guards are deliberate.

pub mod cli;
pub mod error;
pub mod fdr;
pub mod flux;
pub mod greens;
pub mod langevin;
pub(crate) mod parallel;
pub mod spectral;

pub use error::{Error, Result};
pub use greens::{AtomParams, Bath, ComplexSpectrum, FrequencyGrid};

/// Runs `f` with at most `workers` threads when the `parallel` feature is on.
///
/// Results never depend on the worker count: every reduction in the crate
/// uses a fixed order.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    #[cfg(feature = "parallel")]
    {
        match workers {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
                Ok(pool.install(f))
            }
            None => Ok(f()),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        Ok(f())
    }
}
