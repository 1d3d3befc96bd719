//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

#![allow(clippy::type_complexity)]

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use fluxbalance::fdr::{run_suite, Tolerance};
use fluxbalance::flux::{
    budget_grid, interacting_hadamard_direct, late_time_correction, power_budget, BudgetOptions,
    DirectOptions, ObservationFrame, PowerBudget,
};
use fluxbalance::langevin::{
    fit_relaxation, predicted_variance, relaxation_spec, run_ensemble, EnsembleSpec,
};
use fluxbalance::spectral::fit_log_slope;
use fluxbalance::{AtomParams, Bath, FrequencyGrid, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GAMMAS: [f64; 4] = [1e-3, 0.1, 1.0, 10.0];
const CUTOFFS: [f64; 3] = [10.0, 100.0, 1000.0];
/// Grid cap for the runtime-bounded budget matrix. The net-flux and closure
/// ratios cancel pointwise, so they do not depend on resolving the line.
const MATRIX_MAX_POINTS: usize = 1 << 19;

fn baths() -> [Bath; 4] {
    [
        Bath::Vacuum,
        Bath::thermal(0.1).unwrap(),
        Bath::thermal(1.0).unwrap(),
        Bath::thermal(100.0).unwrap(),
    ]
}

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { passed, detail })
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn fdr_suite() -> Result<Verdict> {
    let start = Instant::now();
    let grid = FrequencyGrid::new(100.0, 1 << 14)?;
    let mut worst = 0.0f64;
    let mut all = true;
    for &g in &GAMMAS {
        let p = AtomParams::from_damping(g, 1.0, 1.0)?;
        for bath in baths() {
            for r in run_suite(&grid, &p, bath, 1.0, Tolerance::default()) {
                worst = worst.max(r.max_rel_residual);
                all &= r.passed;
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        all && worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!(
            "max_rel={worst:.2e} (<= 1e-12) over 16 cells x 3 identities, n={}, {:.3}s (< 1s)",
            grid.len(),
            secs(elapsed)
        ),
    )
}

/// Budgets for the full matrix: (γ index, bath index, cutoff index).
fn budget_matrix() -> Result<(BTreeMap<(usize, usize, usize), PowerBudget>, Duration)> {
    let start = Instant::now();
    let mut out = BTreeMap::new();
    for (gi, &g) in GAMMAS.iter().enumerate() {
        let p = AtomParams::from_damping(g, 1.0, 1.0)?;
        for (bi, bath) in baths().into_iter().enumerate() {
            for (ci, &c) in CUTOFFS.iter().enumerate() {
                let grid = FrequencyGrid::resolving(c, g, 4.0, MATRIX_MAX_POINTS)?;
                out.insert((gi, bi, ci), power_budget(&p, bath, &grid, &BudgetOptions::default())?);
            }
        }
    }
    Ok((out, start.elapsed()))
}

fn zero_net_flux(m: &BTreeMap<(usize, usize, usize), PowerBudget>, t: Duration) -> Result<Verdict> {
    let worst = m.values().map(PowerBudget::net_ratio).fold(0.0, f64::max);
    verdict(
        worst <= 1e-10 && t < Duration::from_secs(5),
        format!("max |P_r+P_x|/|P_r| = {worst:.2e} (<= 1e-10) over {} budgets, {:.2}s (< 5s)", m.len(), secs(t)),
    )
}

fn budget_closure(m: &BTreeMap<(usize, usize, usize), PowerBudget>, t: Duration) -> Result<Verdict> {
    let worst = m.values().map(PowerBudget::atom_closure_ratio).fold(0.0, f64::max);
    let gaps_ok = m.values().all(|b| b.magnitude_gap() <= b.est_error);
    let worst_gap = m.values().map(|b| b.magnitude_gap() / b.p_r.abs()).fold(0.0, f64::max);
    verdict(
        worst <= 1e-10 && gaps_ok && t < Duration::from_secs(5),
        format!(
            "max |P_g+P_xi|/|P_g| = {worst:.2e} (<= 1e-10); ||P_g|-|P_r|| <= est_error in every cell (max rel gap {worst_gap:.1e}); {:.2}s (< 5s)",
            secs(t)
        ),
    )
}

fn cutoff_independence(m: &BTreeMap<(usize, usize, usize), PowerBudget>) -> Result<Verdict> {
    let balanced = m
        .values()
        .all(|b| b.net_ratio() <= 1e-10 && b.atom_closure_ratio() <= 1e-10 && b.magnitude_gap() <= b.est_error);
    // The log tail is measured on grids that resolve the resonance.
    let mut fits = Vec::new();
    let mut ok = balanced;
    for &g in &GAMMAS {
        let p = AtomParams::from_damping(g, 1.0, 1.0)?;
        let p_r = CUTOFFS
            .iter()
            .map(|&c| Ok(power_budget(&p, Bath::Vacuum, &budget_grid(&p, c)?, &BudgetOptions::default())?.p_r))
            .collect::<Result<Vec<f64>>>()?;
        let fit = fit_log_slope(&CUTOFFS, &p_r)?;
        let cell_ok = fit.slope > 0.0 && fit.r_squared >= 0.99;
        if g <= 1.0 {
            ok &= cell_ok;
            fits.push(format!("g={g}: slope={:.2e} R2={:.5}", fit.slope, fit.r_squared));
        } else {
            fits.push(format!("g={g} (overdamped, informational): slope={:.2e} R2={:.4}", fit.slope, fit.r_squared));
        }
    }
    verdict(ok, format!("balance at every cutoff: {balanced}; vacuum P_r vs ln(Lambda): {}", fits.join("; ")))
}

fn langevin_closure() -> Result<Verdict> {
    let mut ok = true;
    let mut cells = Vec::new();
    for &g in &[0.01, 0.1] {
        let p = AtomParams::from_damping(g, 1.0, 1.0)?;
        for bath in [Bath::Vacuum, Bath::thermal(1.0)?, Bath::thermal(10.0)?] {
            let start = Instant::now();
            let spec = EnsembleSpec::new(p, bath, 50.0, 400, 20_251_015);
            let s = run_ensemble(&spec)?.stats;
            let pred = predicted_variance(&p, bath, 50.0)?;
            let elapsed = start.elapsed();
            let rel = (s.var_q - pred.value).abs() / pred.value;
            let in_se = (s.var_q - pred.value).abs() / s.var_q_se.hypot(pred.est_error);
            let cell_ok = rel <= 0.05 && in_se <= 3.0 && elapsed < Duration::from_secs(120);
            ok &= cell_ok;
            cells.push(format!(
                "[g={g} beta={} rel={rel:.2e} {in_se:.2}se {:.1}s{}]",
                bath.label(),
                secs(elapsed),
                if cell_ok { "" } else { " FAIL" }
            ));
        }
    }
    verdict(ok, format!("n_traj=400 T=200/g Lambda=50: {}", cells.join(" ")))
}

fn equipartition() -> Result<Verdict> {
    let start = Instant::now();
    let p = AtomParams::from_damping(0.01, 1.0, 1.0)?;
    let beta = 0.01;
    let v = predicted_variance(&p, Bath::thermal(beta)?, 1000.0)?;
    let elapsed = start.elapsed();
    let x = p.mass() * p.frequency().powi(2) * v.value * beta;
    verdict(
        (x - 1.0).abs() <= 0.02 && elapsed < Duration::from_secs(1),
        format!("m w^2 <Q^2> beta = {x:.5} (1 within 2%), Lambda=1000, {:.3}s (< 1s)", secs(elapsed)),
    )
}

fn relaxation_rate() -> Result<Verdict> {
    let g = 0.05;
    let p = AtomParams::from_damping(g, 1.0, 1.0)?;
    let bath = Bath::Vacuum;
    let eq = predicted_variance(&p, bath, 50.0)?.value;
    let spec = relaxation_spec(&p, bath, 50.0, 400, 7, 100.0 * eq.sqrt())?;
    let out = run_ensemble(&spec)?;
    let fit = fit_relaxation(&out.series, (0.5 / g, 2.0 / g), 20.0 / g)?;
    let rel = (fit.rate - 2.0 * g).abs() / (2.0 * g);
    verdict(
        rel <= 0.05,
        format!(
            "fitted rate {:.5} vs 2g = {} (rel {rel:.2e} <= 5%), R2={:.5}, {} points",
            fit.rate,
            2.0 * g,
            fit.r_squared,
            fit.n_points
        ),
    )
}

fn oracle_equivalence() -> Result<Verdict> {
    let start = Instant::now();
    let g = 0.05;
    let p = AtomParams::from_damping(g, 1.0, 1.0)?;
    let t = 40.0 / g;
    let r = t / 20.0;
    let frame = ObservationFrame::new(r, t, t)?;
    let cutoff = 20.0;
    let opts = DirectOptions::new(&p, 0.02, cutoff)?;
    let span = 2.0 * r + 1.0;
    let grid = FrequencyGrid::resolving(cutoff, g.min(std::f64::consts::PI / span), 16.0, 1 << 22)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for bath in [Bath::Vacuum, Bath::thermal(1.0)?] {
        let d = interacting_hadamard_direct(&frame, &p, bath, &opts)?;
        let l = late_time_correction(&frame, &p, bath, &grid)?;
        let rel = (d.total - l.total).abs() / l.total.abs();
        ok &= rel <= 0.01;
        parts.push(format!("beta={}: rel_dev={rel:.2e}", bath.label()));
    }
    let elapsed = start.elapsed();
    verdict(
        ok && elapsed < Duration::from_secs(300),
        format!("t=40/g={t} r={r}: {} (<= 1%), {:.1}s (< 300s)", parts.join(", "), secs(elapsed)),
    )
}

fn exchange_symmetry() -> Result<Verdict> {
    let p = AtomParams::from_damping(0.05, 1.0, 1.0)?;
    let bath = Bath::thermal(1.0)?;
    let grid = FrequencyGrid::new(20.0, 1 << 14)?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let r = rng.random_range(0.1..50.0);
        let rp = rng.random_range(0.1..50.0);
        let lag = rng.random_range(-100.0..100.0);
        let f = ObservationFrame::with_radii(r, rp, 1e4 + lag, 1e4)?;
        let a = late_time_correction(&f, &p, bath, &grid)?;
        let b = late_time_correction(&f.swapped(), &p, bath, &grid)?;
        worst = worst.max((a.total - b.total).abs() / a.total.abs());
    }
    verdict(worst <= 1e-10, format!("max swap residual {worst:.2e} (<= 1e-10 relative) over 100 random (r, r', t-t')"))
}

fn read_outputs(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        files.insert(path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path)?);
    }
    Ok(files)
}

fn determinism() -> Result<Verdict> {
    let tmp = tempfile::tempdir()?;
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        "[atom]\ngamma = 0.1\n[bath]\nbeta = 2.0\n[grid]\ncutoff = 20.0\nsweep = [10.0, 100.0]\n\
         [langevin]\nn_traj = 64\nt_total = 300.0\nseed = 5\n[oracle]\nt_gamma = 5.0\n",
    )?;
    let bin = env!("CARGO_BIN_EXE_fluxbalance");
    let mut reference: Option<(BTreeMap<String, Vec<u8>>, Vec<Vec<u8>>)> = None;
    let mut ok = true;
    let mut n_files = 0;
    for workers in [1, 4, 16] {
        let out = tmp.path().join(format!("w{workers}"));
        let mut stdouts = Vec::new();
        for format in ["json", "csv"] {
            for cmd in ["fdr-check", "budget", "relax", "oracle"] {
                let res = Command::new(bin)
                    .args([cmd, "--format", format, "--workers", &workers.to_string()])
                    .arg("--config")
                    .arg(&config)
                    .arg("--out")
                    .arg(&out)
                    .output()?;
                ok &= res.status.success();
                stdouts.push(res.stdout);
            }
        }
        let files = read_outputs(&out)?;
        n_files = files.len();
        match &reference {
            None => reference = Some((files, stdouts)),
            Some((f0, s0)) => ok &= *f0 == files && *s0 == stdouts,
        }
    }
    verdict(ok, format!("{n_files} output files and stdout byte-identical at workers 1, 4, 16"))
}

fn main() {
    let mut results: Vec<(u8, &str, Result<Verdict>)> = Vec::new();
    results.push((1, "FDR identity suite", fdr_suite()));
    match budget_matrix() {
        Ok((m, t)) => {
            results.push((2, "zero net far-field flux", zero_net_flux(&m, t)));
            results.push((3, "budget closure", budget_closure(&m, t)));
            results.push((4, "cutoff independence of the balance", cutoff_independence(&m)));
        }
        Err(e) => {
            for (id, name) in [(2, "zero net far-field flux"), (3, "budget closure"), (4, "cutoff independence of the balance")] {
                results.push((id, name, Err(fluxbalance::Error::Config(format!("budget matrix: {e}")))));
            }
        }
    }
    results.push((5, "Langevin FDR closure", langevin_closure()));
    results.push((6, "classical equipartition", equipartition()));
    results.push((7, "relaxation rate", relaxation_rate()));
    results.push((8, "direct vs stationary correction", oracle_equivalence()));
    results.push((9, "Hadamard exchange symmetry", exchange_symmetry()));
    results.push((10, "determinism across worker counts", determinism()));

    let mut failed = 0;
    for (id, name, res) in results {
        let (passed, detail) = match res {
            Ok(v) => (v.passed, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failed += 1;
        }
        println!("{} [{id:>2}] {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
