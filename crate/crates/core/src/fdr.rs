//! Residual reports for the fluctuation-dissipation identities.
//!
//! Each check evaluates two independently computed sides of an identity on
//! every grid point and records the worst absolute and relative mismatch.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::greens::{
    atom_retarded_ft, field_hadamard_ft, field_retarded_ft, thermal_factor, AtomParams, Bath,
    FrequencyGrid, GridSpec,
};
use crate::parallel::map_indexed;

/// Pass thresholds. Points whose compared magnitudes are both below
/// `absolute` (kernel nodes) are judged on the absolute residual only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            relative: 1e-12,
            absolute: 1e-15,
        }
    }
}

/// Worst-case residuals of one identity over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub grid: GridSpec,
    pub max_abs_residual: f64,
    pub max_rel_residual: f64,
    pub worst_kappa: f64,
    pub tolerance: Tolerance,
    pub passed: bool,
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<22} max_rel={:.3e} max_abs={:.3e} worst_kappa={:.6e} n={} cutoff={}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.max_rel_residual,
            self.max_abs_residual,
            self.worst_kappa,
            self.grid.n_points,
            self.grid.cutoff,
        )
    }
}

/// One comparison at one frequency.
#[derive(Debug, Clone, Copy)]
struct Sample {
    kappa: f64,
    abs: f64,
    /// `None` at a node, where only the absolute residual is meaningful.
    rel: Option<f64>,
}

impl Sample {
    fn compare(kappa: f64, lhs: f64, rhs: f64, tol: Tolerance) -> Self {
        let abs = (lhs - rhs).abs();
        let scale = lhs.abs().max(rhs.abs());
        let rel = (scale > tol.absolute).then(|| abs / scale);
        Self { kappa, abs, rel }
    }
}

fn summarize(name: &str, grid: &FrequencyGrid, samples: &[Sample], tol: Tolerance) -> IdentityReport {
    let mut max_abs = 0.0f64;
    let mut max_rel = 0.0f64;
    let mut node_abs = 0.0f64;
    let mut worst_kappa = grid.values()[0];
    let mut worst_score = -1.0f64;
    for s in samples {
        max_abs = max_abs.max(s.abs);
        let score = match s.rel {
            Some(r) => {
                max_rel = max_rel.max(r);
                r
            }
            None => {
                node_abs = node_abs.max(s.abs);
                s.abs
            }
        };
        if score > worst_score {
            worst_score = score;
            worst_kappa = s.kappa;
        }
    }
    IdentityReport {
        name: name.to_string(),
        grid: grid.spec(),
        max_abs_residual: max_abs,
        max_rel_residual: max_rel,
        worst_kappa,
        tolerance: tol,
        passed: max_rel <= tol.relative && node_abs <= tol.absolute,
    }
}

/// `Ḡ_{0,H}(r;κ)` against `coth(βκ/2)·Im Ḡ_{0,R}(r;κ)`.
pub fn check_field_fdr(grid: &FrequencyGrid, r: f64, bath: Bath, tol: Tolerance) -> IdentityReport {
    let v = grid.values();
    let samples = map_indexed(v.len(), |i| {
        let k = v[i];
        let lhs = field_hadamard_ft(r, k, bath);
        let im = field_retarded_ft(r, k)
            .map(|g| g.im())
            .unwrap_or(f64::NAN);
        let rhs = thermal_factor(k, bath).unwrap_or(f64::NAN) * im;
        Sample::compare(k, lhs, rhs, tol)
    });
    summarize(&format!("field_fdr(r={r})"), grid, &samples, tol)
}

/// `Ḡ_{0,H}(0;κ)·|Ḡ_R(κ)|²` against `(m/e²)·coth(βκ/2)·Im Ḡ_R(κ)`: the
/// reduction that collapses the radiation term of the interacting Hadamard
/// function.
pub fn check_atom_fdr_reduction(
    grid: &FrequencyGrid,
    p: &AtomParams,
    bath: Bath,
    tol: Tolerance,
) -> IdentityReport {
    let v = grid.values();
    let m_over_e2 = 1.0 / p.coupling_ratio();
    let samples = map_indexed(v.len(), |i| {
        let k = v[i];
        let g = atom_retarded_ft(k, p);
        let lhs = field_hadamard_ft(0.0, k, bath) * g.norm_sqr();
        let rhs = m_over_e2 * thermal_factor(k, bath).unwrap_or(f64::NAN) * g.im;
        Sample::compare(k, lhs, rhs, tol)
    });
    summarize("atom_fdr_reduction", grid, &samples, tol)
}

/// Separation at which the field kernel's parity is checked.
pub const PARITY_FIELD_SEPARATION: f64 = 1.0;

/// Mirror-pair symmetries: `Ḡ_R(−κ) = Ḡ_R(κ)*` for the atom and the field
/// kernel, and oddness of the thermal factor.
pub fn check_parity(grid: &FrequencyGrid, p: &AtomParams, bath: Bath, tol: Tolerance) -> IdentityReport {
    let pos = grid.positive();
    let r = PARITY_FIELD_SEPARATION;
    let samples: Vec<Sample> = map_indexed(pos.len(), |j| {
        let k = pos[j];
        let (gp, gm) = (atom_retarded_ft(k, p), atom_retarded_ft(-k, p));
        let fp = field_retarded_ft(r, k).and_then(|g| g.value());
        let fm = field_retarded_ft(r, -k).and_then(|g| g.value());
        let (fp, fm) = match (fp, fm) {
            (Ok(a), Ok(b)) => (a, b),
            _ => unreachable!("field kernel is defined for r > 0"),
        };
        let cp = thermal_factor(k, bath).unwrap_or(f64::NAN);
        let cm = thermal_factor(-k, bath).unwrap_or(f64::NAN);
        [
            Sample::compare(k, gm.re, gp.re, tol),
            Sample::compare(k, gm.im, -gp.im, tol),
            Sample::compare(k, fm.re, fp.re, tol),
            Sample::compare(k, fm.im, -fp.im, tol),
            Sample::compare(k, cm, -cp, tol),
            Sample::compare(k, 0.0, (fm - fp.conj()).norm() * 4.0 * PI * r, tol),
        ]
    })
    .into_iter()
    .flatten()
    .collect();
    summarize("parity", grid, &samples, tol)
}

/// All three reports for one parameter set.
pub fn run_suite(grid: &FrequencyGrid, p: &AtomParams, bath: Bath, r: f64, tol: Tolerance) -> Vec<IdentityReport> {
    vec![
        check_field_fdr(grid, r, bath, tol),
        check_atom_fdr_reduction(grid, p, bath, tol),
        check_parity(grid, p, bath, tol),
    ]
}
