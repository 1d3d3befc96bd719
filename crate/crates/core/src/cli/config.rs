//! Run configuration: a TOML file with sections, overridden by flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fdr::Tolerance;
use crate::greens::{AtomParams, Bath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomSection {
    pub omega: f64,
    pub mass: f64,
    /// Damping rate `γ`; give this or `coupling`, not both.
    pub gamma: Option<f64>,
    /// Coupling `e`; `γ = e²/8πm`.
    pub coupling: Option<f64>,
}

impl Default for AtomSection {
    fn default() -> Self {
        Self {
            omega: 1.0,
            mass: 1.0,
            gamma: None,
            coupling: None,
        }
    }
}

/// Damping used when neither `gamma` nor `coupling` is given.
pub const DEFAULT_GAMMA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathSection {
    /// Inverse temperature, or `"vacuum"`.
    pub beta: Bath,
}

impl Default for BathSection {
    fn default() -> Self {
        Self { beta: Bath::Vacuum }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Cutoff `Λ` shared by the budget, the identity checks and the noise.
    pub cutoff: f64,
    /// Grid size; `None` sizes the grid from the damping width.
    pub n_points: Option<usize>,
    /// Cutoffs for a budget sweep; empty runs the single `cutoff`.
    pub sweep: Vec<f64>,
    /// Field-point separation used by the identity checks.
    pub separation: f64,
    /// Radius of the far-field sphere in units of `1/ω`.
    pub observation_radius: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            cutoff: 100.0,
            n_points: None,
            sweep: Vec::new(),
            separation: 1.0,
            observation_radius: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LangevinSection {
    /// Step; `None` uses `π/2Λ`.
    pub dt: Option<f64>,
    /// Duration; `None` uses `200/γ`.
    pub t_total: Option<f64>,
    pub n_traj: usize,
    pub seed: u64,
    /// Burn-in; `None` uses `20/γ`.
    pub t_burn: Option<f64>,
    /// Initial `⟨Q²⟩`; `None` uses the free ground state `1/2mω`.
    pub q2: Option<f64>,
    /// Initial `⟨P²⟩`; `None` uses `mω/2`.
    pub p2: Option<f64>,
    /// Points in the recorded variance series.
    pub record_points: usize,
    /// Number of trajectories to dump as binary files.
    pub dump: usize,
}

impl Default for LangevinSection {
    fn default() -> Self {
        Self {
            dt: None,
            t_total: None,
            n_traj: 400,
            seed: 1,
            t_burn: None,
            q2: None,
            p2: None,
            record_points: 1000,
            dump: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    /// Observation time in units of `1/γ`.
    pub t_gamma: f64,
    /// Field-point distance as a fraction of the observation time.
    pub r_fraction: f64,
    /// `t − t'`.
    pub lag: f64,
    pub time_step: f64,
    /// Band limit of the free-field kernel on both sides of the comparison.
    pub cutoff: f64,
    /// Frequency grid for the stationary side; `None` sizes it automatically.
    pub late_points: Option<usize>,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            t_gamma: 40.0,
            r_fraction: 0.05,
            lag: 0.0,
            time_step: 0.02,
            cutoff: 20.0,
            late_points: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub fdr_relative: f64,
    pub fdr_absolute: f64,
    /// Bound on `|P_r + P_×|/|P_r|`.
    pub net: f64,
    /// Bound on `|P_γ + P_ξ|/|P_γ|`.
    pub closure: f64,
    /// Relative bound on simulated versus predicted `⟨Q²⟩`.
    pub relax_relative: f64,
    /// The same comparison in standard errors.
    pub relax_sigma: f64,
    /// Ensembles smaller than this only warn.
    pub min_traj: usize,
    /// Relative bound on direct versus stationary correction.
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let fdr = Tolerance::default();
        Self {
            fdr_relative: fdr.relative,
            fdr_absolute: fdr.absolute,
            net: 1e-10,
            closure: 1e-10,
            relax_relative: 0.05,
            relax_sigma: 3.0,
            min_traj: 50,
            oracle: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Second rendering written next to each report (the canonical files
    /// keep their own format).
    pub format: Format,
    pub directory: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            format: Format::Json,
            directory: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub atom: AtomSection,
    pub bath: BathSection,
    pub grid: GridSection,
    pub langevin: LangevinSection,
    pub oracle: OracleSection,
    pub tolerances: Tolerances,
    pub output: OutputSection,
}

/// The parts of the configuration that determine results.
#[derive(Serialize)]
struct HashView<'a> {
    atom: &'a AtomSection,
    bath: &'a BathSection,
    grid: &'a GridSection,
    langevin: &'a LangevinSection,
    oracle: &'a OracleSection,
    tolerances: &'a Tolerances,
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(field, format!("must be finite and positive, got {v}")))
    }
}

fn positive_opt(field: &str, v: Option<f64>) -> Result<()> {
    v.map_or(Ok(()), |v| positive(field, v))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Re-checks every invariant of the types built from this config.
    pub fn validate(&self) -> Result<()> {
        if self.atom.gamma.is_some() && self.atom.coupling.is_some() {
            return Err(config_err("atom", "give either `gamma` or `coupling`, not both"));
        }
        self.atom_params()?;
        let g = &self.grid;
        positive("grid.cutoff", g.cutoff)?;
        positive("grid.separation", g.separation)?;
        positive("grid.observation_radius", g.observation_radius)?;
        if let Some(n) = g.n_points {
            crate::greens::FrequencyGrid::new(g.cutoff, n).map_err(|e| config_err("grid.n_points", e))?;
        }
        for &c in &g.sweep {
            positive("grid.sweep", c)?;
        }
        if g.sweep.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("grid.sweep", "cutoffs must be strictly ascending"));
        }
        let l = &self.langevin;
        positive_opt("langevin.dt", l.dt)?;
        positive_opt("langevin.t_total", l.t_total)?;
        if let Some(b) = l.t_burn {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(config_err("langevin.t_burn", format!("must be non-negative, got {b}")));
            }
        }
        for (name, v) in [("langevin.q2", l.q2), ("langevin.p2", l.p2)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(config_err(name, format!("must be non-negative, got {v}")));
                }
            }
        }
        if l.n_traj < 2 {
            return Err(config_err("langevin.n_traj", "need at least two trajectories"));
        }
        if l.dt.is_some_and(|dt| dt > std::f64::consts::PI / g.cutoff) {
            return Err(config_err(
                "langevin.dt",
                format!("exceeds the Nyquist limit pi/cutoff = {}", std::f64::consts::PI / g.cutoff),
            ));
        }
        let o = &self.oracle;
        positive("oracle.t_gamma", o.t_gamma)?;
        positive("oracle.r_fraction", o.r_fraction)?;
        positive("oracle.time_step", o.time_step)?;
        positive("oracle.cutoff", o.cutoff)?;
        if !o.lag.is_finite() {
            return Err(config_err("oracle.lag", "must be finite"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.fdr_relative", t.fdr_relative),
            ("tolerances.fdr_absolute", t.fdr_absolute),
            ("tolerances.net", t.net),
            ("tolerances.closure", t.closure),
            ("tolerances.relax_relative", t.relax_relative),
            ("tolerances.relax_sigma", t.relax_sigma),
            ("tolerances.oracle", t.oracle),
        ] {
            positive(name, v)?;
        }
        Ok(())
    }

    pub fn atom_params(&self) -> Result<AtomParams> {
        let a = &self.atom;
        let p = match (a.gamma, a.coupling) {
            (_, Some(e)) => AtomParams::new(e, a.mass, a.omega),
            (g, None) => AtomParams::from_damping(g.unwrap_or(DEFAULT_GAMMA), a.mass, a.omega),
        };
        p.map_err(|e| config_err("atom", e))
    }

    pub fn bath(&self) -> Bath {
        self.bath.beta
    }

    pub fn fdr_tolerance(&self) -> Tolerance {
        Tolerance {
            relative: self.tolerances.fdr_relative,
            absolute: self.tolerances.fdr_absolute,
        }
    }

    fn view(&self) -> HashView<'_> {
        HashView {
            atom: &self.atom,
            bath: &self.bath,
            grid: &self.grid,
            langevin: &self.langevin,
            oracle: &self.oracle,
            tolerances: &self.tolerances,
        }
    }

    /// The result-determining configuration as JSON, embedded in reports.
    pub fn results_json(&self) -> serde_json::Value {
        serde_json::to_value(self.view()).expect("config serializes")
    }

    /// SHA-256 of the result-determining configuration, hex encoded. The
    /// output directory and the worker count are excluded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(&self.view()).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.atom_params().unwrap().damping(), DEFAULT_GAMMA);
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn parses_sections_and_vacuum() {
        let c = RunConfig::from_toml(
            "[atom]\nomega = 2.0\ngamma = 0.1\n[bath]\nbeta = \"vacuum\"\n[grid]\ncutoff = 10.0\nsweep = [10.0, 100.0]\n",
        )
        .unwrap();
        c.validate().unwrap();
        assert!(c.bath().is_vacuum());
        assert_eq!(c.grid.sweep, vec![10.0, 100.0]);
        let t = RunConfig::from_toml("[bath]\nbeta = 0.5\n").unwrap();
        assert_eq!(t.bath().beta(), 0.5);
    }

    #[test]
    fn bad_beta_reports_location() {
        let err = RunConfig::from_toml("[bath]\nbeta = \"warm\"\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") && msg.contains("warm"), "{msg}");
    }

    #[test]
    fn unknown_fields_and_conflicts_are_rejected() {
        assert!(RunConfig::from_toml("[atom]\nomgea = 1.0\n").is_err());
        let both = RunConfig::from_toml("[atom]\ngamma = 0.1\ncoupling = 1.0\n").unwrap();
        assert!(both.validate().unwrap_err().to_string().contains("atom"));
        let neg = RunConfig::from_toml("[grid]\ncutoff = -1.0\n").unwrap();
        assert!(neg.validate().unwrap_err().to_string().contains("grid.cutoff"));
    }

    #[test]
    fn hash_ignores_output_but_not_physics() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output.directory = PathBuf::from("elsewhere");
        b.output.format = Format::Csv;
        assert_eq!(a.hash(), b.hash());
        b.langevin.seed = 2;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn coupling_derives_damping() {
        let c = RunConfig::from_toml("[atom]\ncoupling = 1.0\nmass = 2.0\n").unwrap();
        let p = c.atom_params().unwrap();
        assert!((p.damping() - 1.0 / (16.0 * std::f64::consts::PI)).abs() < 1e-15);
    }
}
