//! The four commands. Each writes its files and returns what to print.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::{Format, RunConfig};
use crate::error::Result;
use crate::fdr::{run_suite, IdentityReport};
use crate::flux::{
    budget_grid, interacting_hadamard_direct, late_time_correction, power_budget, BudgetOptions,
    DirectOptions, DirectResult, HadamardCorrection, InitialMoments, ObservationFrame, PowerBudget,
};
use crate::greens::{AtomParams, FrequencyGrid};
use crate::langevin::{
    predicted_variance, run_ensemble, simulate_trajectory, write_trajectory, EnsembleSpec,
    EquilibriumStats, InitialState,
};

/// Grid size for the identity checks when none is configured.
pub const FDR_DEFAULT_POINTS: usize = 1 << 14;
/// Points per resolved width on the stationary side of the oracle.
const ORACLE_POINTS_PER_WIDTH: f64 = 16.0;
const ORACLE_MAX_POINTS: usize = 1 << 22;

/// Result of one command: text for stdout and the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub passed: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Report wrapper: every JSON file starts with the config hash.
#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    config_hash: String,
    config: serde_json::Value,
    passed: bool,
    #[serde(flatten)]
    body: &'a T,
}

fn write_json<T: Serialize>(cfg: &RunConfig, name: &str, passed: bool, body: &T) -> Result<()> {
    let doc = Report {
        config_hash: cfg.hash(),
        config: cfg.results_json(),
        passed,
        body,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    write_file(&cfg.output.directory, name, &text)
}

fn write_csv(cfg: &RunConfig, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = format!("# config_hash: {}\n{}\n", cfg.hash(), header.join(","));
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_file(&cfg.output.directory, name, &text)
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), text)?;
    Ok(())
}

/// Shortest round-trip text; scientific notation outside `[1e-4, 1e7)`.
fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e7).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Serialize)]
struct FdrBody<'a> {
    reports: &'a [IdentityReport],
}

/// Runs the three identity reports.
pub fn cmd_fdr_check(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.atom_params()?;
    let grid = FrequencyGrid::new(cfg.grid.cutoff, cfg.grid.n_points.unwrap_or(FDR_DEFAULT_POINTS))?;
    let reports = run_suite(&grid, &p, cfg.bath(), cfg.grid.separation, cfg.fdr_tolerance());
    let passed = reports.iter().all(|r| r.passed);

    write_json(cfg, "fdr_report.json", passed, &FdrBody { reports: &reports })?;
    if cfg.output.format == Format::Csv {
        let rows: Vec<Vec<String>> = reports
            .iter()
            .map(|r| {
                vec![
                    r.name.clone(),
                    verdict(r.passed).to_string(),
                    num(r.max_rel_residual),
                    num(r.max_abs_residual),
                    num(r.worst_kappa),
                    r.grid.n_points.to_string(),
                ]
            })
            .collect();
        let header = ["identity", "status", "max_rel", "max_abs", "worst_kappa", "n_points"];
        write_csv(cfg, "fdr_report.csv", &header, &rows)?;
    }

    let mut out = String::new();
    for r in &reports {
        writeln!(out, "{r}").unwrap();
    }
    Ok(Outcome { stdout: out, passed })
}

#[derive(Debug, Clone, Copy, Serialize)]
struct BudgetRow {
    #[serde(flatten)]
    budget: PowerBudget,
    net_ratio: f64,
    closure_ratio: f64,
    magnitude_gap: f64,
    passed: bool,
}

#[derive(Serialize)]
struct BudgetBody<'a> {
    rows: &'a [BudgetRow],
}

fn budget_at(cfg: &RunConfig, p: &AtomParams, cutoff: f64) -> Result<BudgetRow> {
    let grid = match cfg.grid.n_points {
        Some(n) => FrequencyGrid::new(cutoff, n)?,
        None => budget_grid(p, cutoff)?,
    };
    let opts = BudgetOptions {
        observation_radius: cfg.grid.observation_radius,
    };
    let b = power_budget(p, cfg.bath(), &grid, &opts)?;
    let t = &cfg.tolerances;
    let passed = b.net_ratio() <= t.net
        && b.atom_closure_ratio() <= t.closure
        && b.magnitude_gap() <= b.est_error;
    Ok(BudgetRow {
        budget: b,
        net_ratio: b.net_ratio(),
        closure_ratio: b.atom_closure_ratio(),
        magnitude_gap: b.magnitude_gap(),
        passed,
    })
}

/// Power budget at the configured cutoff, or at each cutoff of the sweep.
pub fn cmd_budget(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.atom_params()?;
    let cutoffs = if cfg.grid.sweep.is_empty() {
        vec![cfg.grid.cutoff]
    } else {
        cfg.grid.sweep.clone()
    };
    let rows = cutoffs
        .iter()
        .map(|&c| budget_at(cfg, &p, c))
        .collect::<Result<Vec<_>>>()?;
    let passed = rows.iter().all(|r| r.passed);

    let header = [
        "omega", "gamma", "beta", "Lambda", "P_r", "P_cross", "P_gamma", "P_xi", "net", "est_error",
    ];
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let b = &r.budget;
            vec![
                num(b.omega),
                num(b.gamma),
                b.bath.label(),
                num(b.cutoff),
                num(b.p_r),
                num(b.p_cross),
                num(b.p_gamma),
                num(b.p_xi),
                num(b.net_far_field),
                num(b.est_error),
            ]
        })
        .collect();
    write_csv(cfg, "budget.csv", &header, &csv_rows)?;
    if cfg.output.format == Format::Json {
        write_json(cfg, "budget.json", passed, &BudgetBody { rows: &rows })?;
    }

    let mut out = String::new();
    for r in &rows {
        let b = &r.budget;
        writeln!(
            out,
            "{} Lambda={} P_r={:.6e} P_cross={:.6e} P_gamma={:.6e} P_xi={:.6e} net/|P_r|={:.3e} closure={:.3e} gap={:.3e} est_error={:.3e}",
            verdict(r.passed),
            b.cutoff,
            b.p_r,
            b.p_cross,
            b.p_gamma,
            b.p_xi,
            r.net_ratio,
            r.closure_ratio,
            r.magnitude_gap,
            b.est_error,
        )
        .unwrap();
    }
    Ok(Outcome { stdout: out, passed })
}

/// Ensemble parameters implied by the configuration.
pub fn relax_spec(cfg: &RunConfig) -> Result<EnsembleSpec> {
    let p = cfg.atom_params()?;
    let l = &cfg.langevin;
    let mut spec = EnsembleSpec::new(p, cfg.bath(), cfg.grid.cutoff, l.n_traj, l.seed);
    if let Some(dt) = l.dt {
        spec.dt = dt;
    }
    if let Some(t) = l.t_total {
        spec.t_total = t;
    }
    if let Some(t) = l.t_burn {
        spec.t_burn = t;
    }
    let ground = InitialMoments::ground(&p);
    spec.initial = InitialState::Gaussian {
        q2: l.q2.unwrap_or(ground.q2),
        p2: l.p2.unwrap_or(ground.p2),
    };
    let n_steps = (spec.t_total / spec.dt).round();
    spec.record_every = if l.record_points == 0 {
        0
    } else {
        ((n_steps / l.record_points as f64).round() as usize).max(1)
    };
    Ok(spec)
}

#[derive(Debug, Clone, Copy, Serialize)]
struct RelaxSummary {
    stats: EquilibriumStats,
    predicted_var_q: f64,
    predicted_est_error: f64,
    relative_deviation: f64,
    deviation_in_se: f64,
    underpowered: bool,
    dt: f64,
    t_total: f64,
}

/// Langevin ensemble against the predicted equilibrium variance.
pub fn cmd_relax(cfg: &RunConfig) -> Result<Outcome> {
    let spec = relax_spec(cfg)?;
    let outcome = run_ensemble(&spec)?;
    let pred = predicted_variance(&spec.params, spec.bath, spec.cutoff)?;
    let s = outcome.stats;
    let diff = (s.var_q - pred.value).abs();
    let rel = diff / pred.value;
    let in_se = diff / s.var_q_se.hypot(pred.est_error);
    let t = &cfg.tolerances;
    let within = rel <= t.relax_relative && in_se <= t.relax_sigma;
    let underpowered = spec.n_traj < t.min_traj;
    let summary = RelaxSummary {
        stats: s,
        predicted_var_q: pred.value,
        predicted_est_error: pred.est_error,
        relative_deviation: rel,
        deviation_in_se: in_se,
        underpowered,
        dt: spec.dt,
        t_total: spec.t_total,
    };

    let rows: Vec<Vec<String>> = outcome
        .series
        .iter()
        .map(|pt| vec![num(pt.t), num(pt.mean_q), num(pt.var_q), num(pt.var_qdot), num(pred.value)])
        .collect();
    write_csv(cfg, "relax_series.csv", &["t", "mean_Q", "var_Q", "var_Qdot", "predicted_var_Q"], &rows)?;
    match cfg.output.format {
        Format::Json => write_json(cfg, "relax_stats.json", within, &summary)?,
        Format::Csv => {
            let header = [
                "n_traj", "t_burn", "mean_Q", "mean_Q_se", "var_Q", "var_Q_se", "var_Qdot",
                "var_Qdot_se", "predicted_var_Q", "relative_deviation", "deviation_in_se",
                "underpowered",
            ];
            let row = vec![
                s.n_traj.to_string(),
                num(s.t_burn),
                num(s.mean_q),
                num(s.mean_q_se),
                num(s.var_q),
                num(s.var_q_se),
                num(s.var_qdot),
                num(s.var_qdot_se),
                num(pred.value),
                num(rel),
                num(in_se),
                underpowered.to_string(),
            ];
            write_csv(cfg, "relax_stats.csv", &header, &[row])?;
        }
    }
    if cfg.langevin.dump > 0 {
        let dir = cfg.output.directory.join("trajectories");
        fs::create_dir_all(&dir)?;
        for i in 0..cfg.langevin.dump.min(spec.n_traj) {
            let tr = simulate_trajectory(&spec, i)?;
            let file = fs::File::create(dir.join(format!("traj_{i:04}.bin")))?;
            write_trajectory(std::io::BufWriter::new(file), &tr)?;
        }
    }

    let mut out = String::new();
    if underpowered {
        writeln!(
            out,
            "WARN n_traj={} is below {}: statistical power insufficient, comparison is advisory",
            spec.n_traj, t.min_traj
        )
        .unwrap();
    }
    writeln!(
        out,
        "{} var_Q={:.6e} se={:.3e} predicted={:.6e} rel={:.3e} ({:.2} se) var_Qdot={:.6e} mean_Q={:.3e} n_traj={}",
        verdict(within),
        s.var_q,
        s.var_q_se,
        pred.value,
        rel,
        in_se,
        s.var_qdot,
        s.mean_q,
        s.n_traj
    )
    .unwrap();
    Ok(Outcome {
        stdout: out,
        passed: within || underpowered,
    })
}

#[derive(Debug, Clone, Serialize)]
struct OracleBody {
    frame: ObservationFrame,
    direct: DirectResult,
    late: HadamardCorrection,
    late_points: usize,
    deviation: f64,
    relative_deviation: f64,
    late_time_warning: Option<String>,
}

/// Stationary-side grid: resolves the resonance and the phase `κ(r + r' + |t − t'|)`.
pub fn oracle_grid(cfg: &RunConfig, p: &AtomParams, frame: &ObservationFrame) -> Result<FrequencyGrid> {
    let cutoff = cfg.oracle.cutoff;
    match cfg.oracle.late_points {
        Some(n) => FrequencyGrid::new(cutoff, n),
        None => {
            let span = frame.r + frame.r_prime + frame.lag().abs() + 1.0;
            let width = p.damping().min(std::f64::consts::PI / span);
            FrequencyGrid::resolving(cutoff, width, ORACLE_POINTS_PER_WIDTH, ORACLE_MAX_POINTS)
        }
    }
}

/// Direct time-domain correction against the stationary form.
pub fn cmd_oracle(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.atom_params()?;
    let o = &cfg.oracle;
    let t = o.t_gamma / p.damping();
    let r = o.r_fraction * t;
    let frame = ObservationFrame::with_radii(r, r, t, t - o.lag)?;
    let warning = frame.check_late_time(&p).err().map(|e| e.to_string());

    let ground = InitialMoments::ground(&p);
    let initial = InitialMoments {
        q2: cfg.langevin.q2.unwrap_or(ground.q2),
        p2: cfg.langevin.p2.unwrap_or(ground.p2),
    };
    let opts = DirectOptions::new(&p, o.time_step, o.cutoff)?.with_initial(initial);
    let direct = interacting_hadamard_direct(&frame, &p, cfg.bath(), &opts)?;
    let grid = oracle_grid(cfg, &p, &frame)?;
    let late = late_time_correction(&frame, &p, cfg.bath(), &grid)?;
    let deviation = (direct.total - late.total).abs();
    let relative_deviation = deviation / late.total.abs();
    let passed = relative_deviation <= cfg.tolerances.oracle;
    let body = OracleBody {
        frame,
        direct,
        late,
        late_points: grid.len(),
        deviation,
        relative_deviation,
        late_time_warning: warning.clone(),
    };

    write_json(cfg, "oracle.json", passed, &body)?;
    if cfg.output.format == Format::Csv {
        let header = ["r", "t", "t_prime", "direct", "transient", "late", "relative_deviation"];
        let row = vec![
            num(frame.r),
            num(frame.t),
            num(frame.t_prime),
            num(direct.total),
            num(direct.transient),
            num(late.total),
            num(relative_deviation),
        ];
        write_csv(cfg, "oracle.csv", &header, &[row])?;
    }

    let mut out = String::new();
    if let Some(w) = &warning {
        writeln!(out, "WARN {w}").unwrap();
    }
    writeln!(
        out,
        "{} r={} t={} t'={} direct={:.9e} (transient {:.3e}) late={:.9e} rel_dev={:.3e}",
        verdict(passed),
        frame.r,
        frame.t,
        frame.t_prime,
        direct.total,
        direct.transient,
        late.total,
        relative_deviation
    )
    .unwrap();
    Ok(Outcome { stdout: out, passed })
}
