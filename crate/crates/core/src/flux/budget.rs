//! Four-way power budget: far-field radiation and interference flows, and the
//! atom's dissipation and fluctuation input.

use serde::Serialize;

use super::integrand::{flux_terms, FieldZone};
use crate::error::Result;
use crate::greens::{
    atom_retarded_ft, field_hadamard_ft, kappa_coth, AtomParams, Bath, FrequencyGrid,
};
use crate::spectral::{integrate_spectrum, Components};

/// Sampling density for budget grids: points per damping width `γ`.
pub const POINTS_PER_WIDTH: f64 = 4.0;
/// Largest automatically sized budget grid.
pub const MAX_BUDGET_POINTS: usize = 1 << 23;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetOptions {
    /// Radius of the far-field sphere, in units of `1/ω` times this factor.
    pub observation_radius: f64,
}

impl Default for BudgetOptions {
    fn default() -> Self {
        Self {
            observation_radius: 100.0,
        }
    }
}

/// Signed power flows at one cutoff. Outward flows are positive on the field
/// side; on the atom side `p_gamma` is the (negative) dissipated power and
/// `p_xi` the power supplied by the fluctuating field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerBudget {
    pub omega: f64,
    pub gamma: f64,
    #[serde(serialize_with = "crate::greens::serialize_bath_label")]
    pub bath: Bath,
    pub cutoff: f64,
    pub n_points: usize,
    pub observation_radius: f64,
    pub p_r: f64,
    pub p_cross: f64,
    pub p_gamma: f64,
    pub p_xi: f64,
    /// Integral of the pointwise sum of all far-field constituents.
    pub net_far_field: f64,
    pub est_error: f64,
}

impl PowerBudget {
    /// `|P_r + P_×| / |P_r|` using the pointwise-cancelled net flux.
    pub fn net_ratio(&self) -> f64 {
        self.net_far_field.abs() / self.p_r.abs()
    }

    /// `|P_γ + P_ξ| / |P_γ|`.
    pub fn atom_closure_ratio(&self) -> f64 {
        (self.p_gamma + self.p_xi).abs() / self.p_gamma.abs()
    }

    /// `||P_γ| − |P_r||`.
    pub fn magnitude_gap(&self) -> f64 {
        (self.p_gamma.abs() - self.p_r.abs()).abs()
    }

    /// `||P_×| − |P_ξ||`.
    pub fn cross_gap(&self) -> f64 {
        (self.p_cross.abs() - self.p_xi.abs()).abs()
    }
}

/// Grid resolving the resonance (`h ≈ γ/4`), capped at [`MAX_BUDGET_POINTS`].
pub fn budget_grid(p: &AtomParams, cutoff: f64) -> Result<FrequencyGrid> {
    FrequencyGrid::resolving(cutoff, p.damping(), POINTS_PER_WIDTH, MAX_BUDGET_POINTS)
}

/// All four flows and the net far-field flux, in one pass over the grid.
pub fn power_budget(
    p: &AtomParams,
    bath: Bath,
    grid: &FrequencyGrid,
    opts: &BudgetOptions,
) -> Result<PowerBudget> {
    let r = opts.observation_radius / p.frequency();
    let e2m = p.coupling_ratio();
    let gamma = p.damping();
    let res = integrate_spectrum(
        |k| {
            let t = flux_terms(r, k, p, bath, FieldZone::Far);
            let g = atom_retarded_ft(k, p);
            let h0 = field_hadamard_ft(0.0, k, bath);
            let p_r = e2m * k * kappa_coth(k, bath) / (4.0 * std::f64::consts::PI) * g.im;
            Components([
                p_r,
                t.cross().re,
                t.total().re,
                -e2m * k * g.im * h0,
                2.0 * gamma * e2m * k * k * g.norm_sqr() * h0,
            ])
        },
        grid,
    )?;
    let [p_r, p_cross, net, p_gamma, p_xi] = res.value.0;
    // Rounding floor: every component sums non-negative or non-positive terms.
    let floor = 16.0 * f64::EPSILON * res.value.0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(PowerBudget {
        omega: p.frequency(),
        gamma,
        bath,
        cutoff: grid.cutoff(),
        n_points: grid.len(),
        observation_radius: r,
        p_r,
        p_cross,
        p_gamma,
        p_xi,
        net_far_field: net,
        est_error: res.est_error.max(floor),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::thermal_factor;
    use crate::spectral::adaptive_spectrum;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn vacuum_budget_balances_and_matches_adaptive_oracle() {
        let p = AtomParams::from_damping(0.01, 1.0, 1.0).unwrap();
        let grid = budget_grid(&p, 100.0).unwrap();
        let b = power_budget(&p, Bath::Vacuum, &grid, &BudgetOptions::default()).unwrap();
        assert!(b.p_r > 0.0);
        assert!(b.net_ratio() <= 1e-10, "{b:?}");
        assert!(b.atom_closure_ratio() <= 1e-10);
        assert!(b.magnitude_gap() <= b.est_error);
        assert!(b.cross_gap() <= b.est_error + 1e-12 * b.p_r);

        let e2m = p.coupling_ratio();
        let oracle = adaptive_spectrum(
            |k| e2m * k * k / (4.0 * PI) * k.signum() * atom_retarded_ft(k, &p).im,
            100.0,
            1e-9,
        )
        .unwrap();
        assert!(oracle.converged);
        assert_relative_eq!(b.p_r, oracle.value, max_relative = 1e-3);
    }

    #[test]
    fn thermal_budget_signs() {
        let p = AtomParams::from_damping(0.1, 1.0, 1.0).unwrap();
        let grid = budget_grid(&p, 10.0).unwrap();
        let b = power_budget(&p, Bath::thermal(1.0).unwrap(), &grid, &BudgetOptions::default()).unwrap();
        assert!(b.p_r > 0.0 && b.p_cross < 0.0 && b.p_gamma < 0.0 && b.p_xi > 0.0);
        assert!(b.net_ratio() <= 1e-10);
        assert!(b.atom_closure_ratio() <= 1e-10);
    }

    #[test]
    fn budget_radiation_density_is_non_negative() {
        let p = AtomParams::from_damping(0.3, 1.0, 1.0).unwrap();
        let bath = Bath::thermal(0.5).unwrap();
        for &k in &[-10.0, -1.0, -1e-3, 1e-3, 1.0, 10.0] {
            let d = k * k * thermal_factor(k, bath).unwrap() * atom_retarded_ft(k, &p).im;
            assert!(d >= 0.0);
        }
    }
}
