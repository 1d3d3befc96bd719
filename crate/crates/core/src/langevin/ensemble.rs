//! Ensembles of independent trajectories, their equilibrium statistics and
//! the relaxation envelope.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::integrator::{integrate, Stepper, Trajectory};
use super::noise::NoiseSynthesizer;
use super::{default_time_step, trajectory_rng};
use crate::error::{Error, Result};
use crate::greens::{AtomParams, Bath, HomogeneousSolution};
use crate::parallel::map_indexed;
use crate::spectral::{fit_line, LineFit};

/// Distribution of `(Q₀, Q̇₀)` across the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    /// The same point for every trajectory.
    Fixed { q: f64, qdot: f64 },
    /// Independent centred Gaussians with `⟨Q²⟩ = q2`, `⟨P²⟩ = p2`, `P = mQ̇`.
    Gaussian { q2: f64, p2: f64 },
    /// `Q₀ = A cos θ`, `Q̇₀ = Aω sin θ` with uniform phase: a fixed, large
    /// energy that makes the decay envelope easy to resolve.
    Ring { amplitude: f64 },
}

impl InitialState {
    /// Free ground-state moments `(1/2mω, mω/2)`.
    pub fn ground(p: &AtomParams) -> Self {
        let mw = p.mass() * p.frequency();
        Self::Gaussian {
            q2: 0.5 / mw,
            p2: 0.5 * mw,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, p: &AtomParams, rng: &mut R) -> (f64, f64) {
        match *self {
            Self::Fixed { q, qdot } => (q, qdot),
            Self::Gaussian { q2, p2 } => {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                (a * q2.sqrt(), b * p2.sqrt() / p.mass())
            }
            Self::Ring { amplitude } => {
                let theta = rng.random::<f64>() * std::f64::consts::TAU;
                (amplitude * theta.cos(), amplitude * p.frequency() * theta.sin())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Fixed { q, qdot } => q.is_finite() && qdot.is_finite(),
            Self::Gaussian { q2, p2 } => q2 >= 0.0 && p2 >= 0.0 && q2.is_finite() && p2.is_finite(),
            Self::Ring { amplitude } => amplitude >= 0.0 && amplitude.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid initial state {self:?}")))
        }
    }
}

/// Everything that determines an ensemble run. Given the same spec the
/// outcome is bit-identical for any number of workers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleSpec {
    pub params: AtomParams,
    #[serde(serialize_with = "crate::greens::serialize_bath_label")]
    pub bath: Bath,
    pub cutoff: f64,
    pub dt: f64,
    pub t_total: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub t_burn: f64,
    pub initial: InitialState,
    /// Record ensemble moments every this many steps; 0 disables the series.
    pub record_every: usize,
    /// Multiplies every forcing sample.
    pub noise_scale: f64,
}

impl EnsembleSpec {
    /// Defaults: `dt = π/2Λ`, `T = 200/γ`, burn-in `20/γ`, ground-state
    /// initial moments and about 1000 recorded points.
    pub fn new(params: AtomParams, bath: Bath, cutoff: f64, n_traj: usize, seed: u64) -> Self {
        let g = params.damping();
        let dt = default_time_step(cutoff);
        let t_total = 200.0 / g;
        Self {
            params,
            bath,
            cutoff,
            dt,
            t_total,
            n_traj,
            seed,
            t_burn: 20.0 / g,
            initial: InitialState::ground(&params),
            record_every: ((t_total / dt / 1000.0).round() as usize).max(1),
            noise_scale: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_traj < 2 {
            return Err(Error::InsufficientSamples(format!(
                "ensemble needs at least two trajectories, got {}",
                self.n_traj
            )));
        }
        if !(self.t_burn >= 0.0 && self.t_burn.is_finite()) {
            return Err(Error::invalid("t_burn", self.t_burn, "must be non-negative"));
        }
        if !self.noise_scale.is_finite() {
            return Err(Error::invalid("noise_scale", self.noise_scale, "must be finite"));
        }
        self.initial.validate()
    }

    fn synthesizer(&self) -> Result<NoiseSynthesizer> {
        NoiseSynthesizer::new(&self.params, self.bath, self.cutoff, self.dt, self.t_total)
    }
}

/// Ensemble moments at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub t: f64,
    pub mean_q: f64,
    pub var_q: f64,
    pub var_qdot: f64,
}

/// Time-and-ensemble averages after burn-in. Standard errors come from the
/// spread between trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumStats {
    pub mean_q: f64,
    pub mean_q_se: f64,
    pub var_q: f64,
    pub var_q_se: f64,
    pub var_qdot: f64,
    pub var_qdot_se: f64,
    pub n_traj: usize,
    pub t_burn: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleOutcome {
    pub stats: EquilibriumStats,
    pub series: Vec<SeriesPoint>,
}

/// Post-burn-in time averages of one trajectory.
#[derive(Debug, Clone, Copy, Default)]
struct TimeAverages {
    q: f64,
    q2: f64,
    qdot: f64,
    qdot2: f64,
    count: usize,
}

impl TimeAverages {
    fn add(&mut self, q: f64, qdot: f64) {
        self.q += q;
        self.q2 += q * q;
        self.qdot += qdot;
        self.qdot2 += qdot * qdot;
        self.count += 1;
    }

    fn means(&self) -> [f64; 4] {
        let n = self.count as f64;
        [self.q / n, self.q2 / n, self.qdot / n, self.qdot2 / n]
    }
}

fn burn_index(t_burn: f64, dt: f64) -> usize {
    (t_burn / dt - 1e-9).ceil().max(0.0) as usize
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn reduce_stats(per: &[TimeAverages], t_burn: f64) -> Result<EquilibriumStats> {
    if per.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "need at least two trajectories, got {}",
            per.len()
        )));
    }
    if let Some(short) = per.iter().find(|a| a.count < 2) {
        return Err(Error::InsufficientSamples(format!(
            "only {} samples after burn-in at t = {t_burn}",
            short.count
        )));
    }
    let means: Vec<[f64; 4]> = per.iter().map(TimeAverages::means).collect();
    let column = |j: usize| -> Vec<f64> { means.iter().map(|m| m[j]).collect() };
    let (mean_q, mean_q_se) = mean_and_se(&column(0));
    let (q2, q2_se) = mean_and_se(&column(1));
    let (mean_qdot, _) = mean_and_se(&column(2));
    let (qdot2, qdot2_se) = mean_and_se(&column(3));
    Ok(EquilibriumStats {
        mean_q,
        mean_q_se,
        var_q: q2 - mean_q * mean_q,
        var_q_se: q2_se,
        var_qdot: qdot2 - mean_qdot * mean_qdot,
        var_qdot_se: qdot2_se,
        n_traj: per.len(),
        t_burn,
    })
}

/// Statistics of stored trajectories after `t_burn`.
pub fn equilibrium_stats(trajs: &[Trajectory], t_burn: f64) -> Result<EquilibriumStats> {
    let per: Vec<TimeAverages> = trajs
        .iter()
        .map(|tr| {
            let mut acc = TimeAverages::default();
            for n in burn_index(t_burn, tr.dt)..tr.q.len() {
                acc.add(tr.q[n], tr.qdot[n]);
            }
            acc
        })
        .collect();
    reduce_stats(&per, t_burn)
}

/// Trajectory `index` of the ensemble, stored in full.
pub fn simulate_trajectory(spec: &EnsembleSpec, index: usize) -> Result<Trajectory> {
    spec.validate()?;
    let synth = spec.synthesizer()?;
    let mut rng = trajectory_rng(spec.seed, index as u64);
    let noise = synth.realize(&mut rng, spec.seed).scaled(spec.noise_scale);
    let (q0, qd0) = spec.initial.draw(&spec.params, &mut rng);
    integrate(&spec.params, &noise, q0, qd0)
}

/// Runs the ensemble without storing trajectories. Trajectories are spread
/// over the worker pool; every reduction runs in trajectory order.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleOutcome> {
    spec.validate()?;
    let synth = spec.synthesizer()?;
    let stepper = Stepper::new(&spec.params, spec.dt)?;
    let nb = burn_index(spec.t_burn, spec.dt);
    let every = spec.record_every;

    let per: Vec<(TimeAverages, Vec<(f64, f64)>)> = map_indexed(spec.n_traj, |i| {
        let mut rng = trajectory_rng(spec.seed, i as u64);
        let noise = synth.realize(&mut rng, spec.seed).scaled(spec.noise_scale);
        let (q0, qd0) = spec.initial.draw(&spec.params, &mut rng);
        let mut acc = TimeAverages::default();
        let mut rec = Vec::new();
        stepper.run(&noise, q0, qd0, |n, q, qd| {
            if n >= nb {
                acc.add(q, qd);
            }
            if every > 0 && n % every == 0 {
                rec.push((q, qd));
            }
        });
        (acc, rec)
    });

    let avgs: Vec<TimeAverages> = per.iter().map(|(a, _)| *a).collect();
    let stats = reduce_stats(&avgs, spec.t_burn)?;

    let n_rec = per.first().map_or(0, |(_, r)| r.len());
    let nt = spec.n_traj as f64;
    let series = (0..n_rec)
        .map(|j| {
            let (mut sq, mut sq2, mut sv, mut sv2) = (0.0, 0.0, 0.0, 0.0);
            for (_, rec) in &per {
                let (q, qd) = rec[j];
                sq += q;
                sq2 += q * q;
                sv += qd;
                sv2 += qd * qd;
            }
            let (mq, mv) = (sq / nt, sv / nt);
            SeriesPoint {
                t: (j * every) as f64 * spec.dt,
                mean_q: mq,
                var_q: (sq2 - nt * mq * mq) / (nt - 1.0),
                var_qdot: (sv2 - nt * mv * mv) / (nt - 1.0),
            }
        })
        .collect();
    Ok(EnsembleOutcome { stats, series })
}

/// Exponential fit of the variance envelope `var_Q(t) − plateau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelaxationFit {
    /// Fitted decay rate of the variance excess; `2γ` in theory.
    pub rate: f64,
    pub plateau: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Fits `ln(var_Q − plateau)` against `t` over `window`, with the plateau
/// taken as the mean recorded variance at `t ≥ plateau_after`.
pub fn fit_relaxation(
    series: &[SeriesPoint],
    window: (f64, f64),
    plateau_after: f64,
) -> Result<RelaxationFit> {
    let tail: Vec<f64> = series.iter().filter(|s| s.t >= plateau_after).map(|s| s.var_q).collect();
    if tail.is_empty() {
        return Err(Error::InsufficientSamples(format!(
            "no recorded points after t = {plateau_after} for the plateau"
        )));
    }
    let plateau = tail.iter().sum::<f64>() / tail.len() as f64;
    let (ts, ys): (Vec<f64>, Vec<f64>) = series
        .iter()
        .filter(|s| s.t >= window.0 && s.t <= window.1 && s.var_q > plateau)
        .map(|s| (s.t, (s.var_q - plateau).ln()))
        .unzip();
    let LineFit { slope, r_squared, .. } = fit_line(&ts, &ys)?;
    Ok(RelaxationFit {
        rate: -slope,
        plateau,
        r_squared,
        n_points: ts.len(),
    })
}

/// Ensemble set up to expose the relaxation envelope: a ring of initial
/// states `amplitude_factor` times the equilibrium spread, a step dividing
/// the half-period `π/Ω` exactly, and one recorded point per half-period,
/// where the homogeneous solution carries no oscillating factor. Runs to
/// `30/γ`; averages after `20/γ` give the plateau.
pub fn relaxation_spec(
    p: &AtomParams,
    bath: Bath,
    cutoff: f64,
    n_traj: usize,
    seed: u64,
    amplitude: f64,
) -> Result<EnsembleSpec> {
    let g = p.damping();
    if g >= p.frequency() {
        return Err(Error::invalid("gamma", g, "relaxation envelope needs an underdamped atom"));
    }
    let half_period = std::f64::consts::PI / HomogeneousSolution::new(p).frequency();
    let per_half = (half_period / default_time_step(cutoff)).ceil() as usize;
    let dt = half_period / per_half as f64;
    let mut spec = EnsembleSpec::new(*p, bath, cutoff, n_traj, seed);
    spec.dt = dt;
    spec.t_total = (30.0 / g / half_period).ceil() * half_period;
    spec.t_burn = 20.0 / g;
    spec.initial = InitialState::Ring { amplitude };
    spec.record_every = per_half;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::langevin::predicted_variance;

    fn quick(n_traj: usize, seed: u64) -> EnsembleSpec {
        let p = AtomParams::from_damping(0.5, 1.0, 1.0).unwrap();
        let mut s = EnsembleSpec::new(p, Bath::thermal(1.0).unwrap(), 10.0, n_traj, seed);
        s.t_total = 60.0;
        s.t_burn = 10.0;
        s
    }

    #[test]
    fn stored_and_streamed_statistics_agree() {
        let spec = quick(6, 3);
        let out = run_ensemble(&spec).unwrap();
        let trajs: Vec<Trajectory> = (0..6).map(|i| simulate_trajectory(&spec, i).unwrap()).collect();
        let stored = equilibrium_stats(&trajs, spec.t_burn).unwrap();
        assert_eq!(out.stats, stored);
        assert_eq!(trajs[0].q.len(), trajs[0].n_steps() + 1);
        assert_eq!(out.series[0].t, 0.0);
        assert_eq!(out.series[1].t, spec.record_every as f64 * spec.dt);
    }

    #[test]
    fn deterministic_across_runs() {
        let a = run_ensemble(&quick(8, 21)).unwrap();
        let b = run_ensemble(&quick(8, 21)).unwrap();
        assert_eq!(a.stats, b.stats);
        assert_eq!(a.series, b.series);
        let c = run_ensemble(&quick(8, 22)).unwrap();
        assert_ne!(a.stats.var_q, c.stats.var_q);
    }

    #[test]
    fn doubling_noise_quadruples_variance_exactly() {
        let mut spec = quick(4, 9);
        spec.initial = InitialState::Fixed { q: 0.0, qdot: 0.0 };
        let base: Vec<Trajectory> = (0..4).map(|i| simulate_trajectory(&spec, i).unwrap()).collect();
        spec.noise_scale = 2.0;
        let loud: Vec<Trajectory> = (0..4).map(|i| simulate_trajectory(&spec, i).unwrap()).collect();
        for (a, b) in base.iter().zip(&loud) {
            assert!(a.q.iter().zip(&b.q).all(|(x, y)| 2.0 * x == *y));
        }
        let sa = equilibrium_stats(&base, spec.t_burn).unwrap();
        let sb = equilibrium_stats(&loud, spec.t_burn).unwrap();
        assert_eq!(4.0 * sa.var_q, sb.var_q);
    }

    #[test]
    fn standard_error_shrinks_like_inverse_sqrt() {
        let se: Vec<f64> = [50usize, 200, 800]
            .iter()
            .map(|&n| {
                let mut s = quick(n, 5);
                s.t_total = 40.0;
                s.record_every = 0;
                run_ensemble(&s).unwrap().stats.var_q_se
            })
            .collect();
        for w in se.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.5..2.7).contains(&ratio), "{se:?}");
        }
    }

    #[test]
    fn initial_conditions_are_forgotten() {
        let mut a = quick(60, 13);
        a.initial = InitialState::Fixed { q: 3.0, qdot: -2.0 };
        let mut b = a;
        b.initial = InitialState::ground(&a.params);
        let (sa, sb) = (run_ensemble(&a).unwrap().stats, run_ensemble(&b).unwrap().stats);
        let se = (sa.var_q_se.powi(2) + sb.var_q_se.powi(2)).sqrt();
        assert!((sa.var_q - sb.var_q).abs() <= 3.0 * se);
        assert!(sa.mean_q.abs() <= 3.0 * sa.mean_q_se + 1e-12);
    }

    #[test]
    fn short_runs_are_rejected() {
        let mut s = quick(4, 1);
        s.t_burn = 100.0;
        assert!(matches!(run_ensemble(&s), Err(Error::InsufficientSamples(_))));
        assert!(matches!(run_ensemble(&quick(1, 1)), Err(Error::InsufficientSamples(_))));
    }

    #[test]
    fn relaxation_rate_is_twice_gamma() {
        let p = AtomParams::from_damping(0.25, 1.0, 1.0).unwrap();
        let bath = Bath::Vacuum;
        let eq = predicted_variance(&p, bath, 10.0).unwrap().value;
        let spec = relaxation_spec(&p, bath, 10.0, 200, 4, 100.0 * eq.sqrt()).unwrap();
        let out = run_ensemble(&spec).unwrap();
        let g = p.damping();
        let fit = fit_relaxation(&out.series, (0.5 / g, 2.0 / g), 20.0 / g).unwrap();
        assert!((fit.rate - 2.0 * g).abs() <= 0.05 * 2.0 * g, "{fit:?}");
        assert!(fit.r_squared > 0.99);
    }
}
