//! Interacting-field Hadamard function, far-field flux, and the power budget.

mod budget;
mod direct;
mod integrand;
mod late;

pub use budget::{budget_grid, power_budget, BudgetOptions, PowerBudget};
pub use direct::{
    band_limited_hadamard, interacting_hadamard_direct, DirectOptions, DirectResult, InitialMoments,
};
pub use integrand::{far_field_flux_integrand, flux_terms, FieldZone, FluxTerms};
pub use late::{
    hadamard_correction_density, interacting_hadamard_late, late_time_correction,
    HadamardCorrection,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::AtomParams;

/// Default late-time safety factor: `t, t' ≥ 20/γ` and `t, t' ≥ 20·r`.
pub const DEFAULT_MARGIN: f64 = 20.0;

/// Two field points around a static atom.
///
/// `r` and `t` locate the unprimed point, `r_prime` and `t_prime` the primed
/// one; both distances are measured from the atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationFrame {
    pub r: f64,
    pub r_prime: f64,
    pub t: f64,
    pub t_prime: f64,
    /// Late-time safety factor; zero disables the check.
    pub margin: f64,
}

impl ObservationFrame {
    /// Coincident radii `r = r'`.
    pub fn new(r: f64, t: f64, t_prime: f64) -> Result<Self> {
        Self::with_radii(r, r, t, t_prime)
    }

    pub fn with_radii(r: f64, r_prime: f64, t: f64, t_prime: f64) -> Result<Self> {
        for (name, v) in [("r", r), ("r_prime", r_prime)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, v, "distance from the atom must be positive"));
            }
        }
        for (name, v) in [("t", t), ("t_prime", t_prime)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, v, "observation time must be finite"));
            }
        }
        Ok(Self {
            r,
            r_prime,
            t,
            t_prime,
            margin: DEFAULT_MARGIN,
        })
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    /// `t − t'`.
    pub fn lag(&self) -> f64 {
        self.t - self.t_prime
    }

    /// The frame with the two points exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            r: self.r_prime,
            r_prime: self.r,
            t: self.t_prime,
            t_prime: self.t,
            margin: self.margin,
        }
    }

    /// Whether both times are late enough for the stationary form.
    pub fn check_late_time(&self, p: &AtomParams) -> Result<()> {
        if self.margin <= 0.0 {
            return Ok(());
        }
        let need = (self.margin / p.damping()).max(self.margin * self.r.max(self.r_prime));
        let earliest = self.t.min(self.t_prime);
        if earliest < need {
            return Err(Error::LateTimeMargin(format!(
                "min(t, t') = {earliest} but margin {} requires at least {need}",
                self.margin
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_check() {
        let p = AtomParams::from_damping(0.05, 1.0, 1.0).unwrap();
        let f = ObservationFrame::new(30.0, 800.0, 800.0).unwrap();
        assert!(f.check_late_time(&p).is_ok());
        let f = ObservationFrame::new(30.0, 40.0, 40.0).unwrap();
        assert!(matches!(f.check_late_time(&p), Err(Error::LateTimeMargin(_))));
        assert!(f.with_margin(0.0).check_late_time(&p).is_ok());
        assert!(ObservationFrame::new(0.0, 1.0, 1.0).is_err());
        let s = ObservationFrame::with_radii(1.0, 2.0, 3.0, 4.0).unwrap().swapped();
        assert_eq!((s.r, s.r_prime, s.t, s.t_prime), (2.0, 1.0, 4.0, 3.0));
    }
}
