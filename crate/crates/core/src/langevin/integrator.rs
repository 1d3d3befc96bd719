//! Exponential integrator for `Q̈ + 2γQ̇ + ω²Q = ξ(t)`.
//!
//! The homogeneous propagator over one step is applied exactly; the forcing is
//! linear between samples, and its two moments against the propagator are
//! precomputed once per step size.

use serde::Serialize;

use super::noise::NoiseRealization;
use crate::error::{Error, Result};
use crate::greens::{AtomParams, HomogeneousSolution};

const GL_POINTS: usize = 20;

/// Gauss-Legendre nodes and weights on `[−1, 1]` by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// One-step propagator for a fixed step size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stepper {
    dt: f64,
    c: f64,
    d: f64,
    d_dot: f64,
    c_dot: f64,
    /// `∫_0^h d(u) du`.
    i0: f64,
    /// `∫_0^h d(u)(h − u)/h du`.
    i1: f64,
}

impl Stepper {
    pub fn new(p: &AtomParams, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", dt, "must be positive"));
        }
        let hom = HomogeneousSolution::new(p);
        let end = hom.at(dt);
        let (mut i0, mut i1) = (0.0, 0.0);
        for (x, w) in gauss_legendre(GL_POINTS) {
            let u = 0.5 * dt * (x + 1.0);
            let d = hom.at(u).displacement_response;
            i0 += w * d;
            i1 += w * d * (dt - u) / dt;
        }
        let w2 = p.frequency() * p.frequency();
        Ok(Self {
            dt,
            c: end.displacement,
            d: end.displacement_response,
            d_dot: end.velocity_response,
            c_dot: -w2 * end.displacement_response,
            i0: 0.5 * dt * i0,
            i1: 0.5 * dt * i1,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `(Q, Q̇)` by one step with forcing `xi0 → xi1`.
    #[inline]
    pub fn step(&self, q: f64, qdot: f64, xi0: f64, xi1: f64) -> (f64, f64) {
        let dxi = xi1 - xi0;
        (
            self.c * q + self.d * qdot + xi0 * self.i0 + dxi * self.i1,
            self.c_dot * q + self.d_dot * qdot + xi0 * self.d + dxi * self.i0 / self.dt,
        )
    }

    /// Runs over the whole forcing record, calling `visit(n, Q_n, Q̇_n)` for
    /// `n = 0..=n_steps`.
    pub fn run(&self, noise: &NoiseRealization, q0: f64, qdot0: f64, mut visit: impl FnMut(usize, f64, f64)) {
        let (mut q, mut qd) = (q0, qdot0);
        visit(0, q, qd);
        for (n, w) in noise.samples.windows(2).enumerate() {
            (q, qd) = self.step(q, qd, w[0], w[1]);
            visit(n + 1, q, qd);
        }
    }
}

/// Stored solution of one forced oscillator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub dt: f64,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub q0: f64,
    pub qdot0: f64,
    pub params: AtomParams,
    pub seed: u64,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.q.len() - 1
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// Integrates the oscillator through one forcing record.
pub fn integrate(p: &AtomParams, noise: &NoiseRealization, q0: f64, qdot0: f64) -> Result<Trajectory> {
    let stepper = Stepper::new(p, noise.dt)?;
    let mut q = Vec::with_capacity(noise.n_steps + 1);
    let mut qdot = Vec::with_capacity(noise.n_steps + 1);
    stepper.run(noise, q0, qdot0, |_, x, v| {
        q.push(x);
        qdot.push(v);
    });
    Ok(Trajectory {
        dt: noise.dt,
        q,
        qdot,
        q0,
        qdot0,
        params: *p,
        seed: noise.seed,
    })
}
