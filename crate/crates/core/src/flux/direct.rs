//! Brute-force time-domain evaluation of the interacting Hadamard function,
//! including the homogeneous-solution transient.
//!
//! The free-field kernels are delta functions on the light cone, which fixes
//! one time integral per field propagator. The remaining integrals over the
//! atom's history run on a uniform grid in the backward variable `u = T − s`
//! (Simpson, plus a short end panel). The free-field Hadamard function is
//! band-limited to `|κ| ≤ Λ` exactly as in the frequency-domain path, so the
//! two evaluations share one regularization.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::ObservationFrame;
use crate::error::{Error, Result};
use crate::greens::{AtomParams, Bath, HomogeneousSolution};
use crate::parallel::map_indexed;

/// Below this argument the closed forms switch to Taylor series.
const SERIES_THRESHOLD: f64 = 0.05;
/// `e^{−nβΛ}` tail terms are summed until the exponent exceeds this.
const TAIL_EXPONENT: f64 = 42.0;

/// Second moments of the oscillator's initial state (no cross-correlation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialMoments {
    /// `⟨Q²⟩` at `t = 0`.
    pub q2: f64,
    /// `⟨P²⟩` at `t = 0`.
    pub p2: f64,
}

impl InitialMoments {
    /// Ground state of the free oscillator: `1/(2mω)` and `mω/2`.
    pub fn ground(p: &AtomParams) -> Self {
        let (m, w) = (p.mass(), p.frequency());
        Self {
            q2: 1.0 / (2.0 * m * w),
            p2: m * w / 2.0,
        }
    }

    /// Thermal state of the free oscillator at the bath temperature.
    pub fn thermal(p: &AtomParams, bath: Bath) -> Self {
        let w = p.frequency();
        let c = crate::greens::kappa_coth(w, bath) / w;
        let g = Self::ground(p);
        Self {
            q2: g.q2 * c,
            p2: g.p2 * c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectOptions {
    pub time_step: f64,
    /// Band limit of the free-field Hadamard kernel.
    pub cutoff: f64,
    pub initial: InitialMoments,
}

impl DirectOptions {
    pub fn new(p: &AtomParams, time_step: f64, cutoff: f64) -> Result<Self> {
        if !(time_step > 0.0 && time_step.is_finite()) {
            return Err(Error::invalid("time_step", time_step, "must be positive"));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::invalid("cutoff", cutoff, "must be positive"));
        }
        Ok(Self {
            time_step,
            cutoff,
            initial: InitialMoments::ground(p),
        })
    }

    pub fn with_initial(mut self, initial: InitialMoments) -> Self {
        self.initial = initial;
        self
    }
}

/// Direct evaluation of `G_H − G_{0,H}`, term by term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectResult {
    /// Free field at the unprimed point interfering with the radiated field.
    pub interference_unprimed: f64,
    /// Free field at the primed point interfering with the radiated field.
    pub interference_primed: f64,
    pub radiation: f64,
    /// Contribution of the homogeneous solution; decays like `e^{−γ(t+t')}`.
    pub transient: f64,
    /// Sum of all four terms.
    pub total: f64,
    /// Quadrature points on the longer of the two histories.
    pub n_steps: usize,
}

/// `∫_0^Λ dκ coth(βκ/2)·sin(κa)`.
fn sine_moment(a: f64, cutoff: f64, bath: Bath) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let half = (0.5 * cutoff * a).sin();
    let vacuum = 2.0 * half * half / a;
    match bath {
        Bath::Vacuum => vacuum,
        Bath::Thermal { beta } => {
            let y = PI * a / beta;
            let coth_minus_inverse = if y.abs() < SERIES_THRESHOLD {
                let y2 = y * y;
                y * (1.0 / 3.0 - y2 / 45.0 + 2.0 * y2 * y2 / 945.0 - y2 * y2 * y2 / 4725.0)
            } else {
                1.0 / y.tanh() - 1.0 / y
            };
            let mut tail = 0.0;
            for n in 1..=tail_terms(beta, cutoff) {
                let z = Complex64::new(n as f64 * beta, -a);
                tail += ((-z * cutoff).exp() / z).im;
            }
            vacuum + PI / beta * coth_minus_inverse - 2.0 * tail
        }
    }
}

/// `∫_0^Λ dκ κ·coth(βκ/2)·cos(κτ)`.
fn cosine_moment(tau: f64, cutoff: f64, bath: Bath) -> f64 {
    let x = cutoff * tau;
    let vacuum = if x.abs() < SERIES_THRESHOLD {
        let x2 = x * x;
        cutoff * cutoff * (0.5 - x2 / 8.0 + x2 * x2 / 144.0 - x2 * x2 * x2 / 5760.0)
    } else {
        cutoff * x.sin() / tau + (x.cos() - 1.0) / (tau * tau)
    };
    match bath {
        Bath::Vacuum => vacuum,
        Bath::Thermal { beta } => {
            let s = PI / beta;
            let y = s * tau;
            // 1/τ² − (π/β)² csch²(πτ/β)
            let thermal = if y.abs() < SERIES_THRESHOLD {
                let y2 = y * y;
                s * s * (1.0 / 3.0 - y2 / 15.0 + 2.0 * y2 * y2 / 189.0 - y2 * y2 * y2 / 675.0)
            } else {
                let sh = y.sinh();
                1.0 / (tau * tau) - s * s / (sh * sh)
            };
            let mut tail = 0.0;
            for n in 1..=tail_terms(beta, cutoff) {
                let z = Complex64::new(n as f64 * beta, -tau);
                let zi = z.inv();
                tail += ((-z * cutoff).exp() * (zi * cutoff + zi * zi)).re;
            }
            vacuum + thermal - 2.0 * tail
        }
    }
}

fn tail_terms(beta: f64, cutoff: f64) -> usize {
    (TAIL_EXPONENT / (beta * cutoff)).ceil() as usize + 1
}

/// Free-field Hadamard function band-limited to `|κ| ≤ Λ`, at spatial
/// separation `r ≥ 0` and time lag `τ`.
pub fn band_limited_hadamard(r: f64, tau: f64, bath: Bath, cutoff: f64) -> f64 {
    if r == 0.0 {
        cosine_moment(tau, cutoff, bath) / (4.0 * PI * PI)
    } else {
        (sine_moment(r + tau, cutoff, bath) + sine_moment(r - tau, cutoff, bath))
            / (8.0 * PI * PI * r)
    }
}

/// Quadrature nodes on `[0, T]`: Simpson on the lattice `k·dt` up to the
/// largest even `k`, then a three-point panel to `T` if anything is left.
struct History {
    lattice: Vec<(f64, f64)>,
    extra: Vec<(f64, f64)>,
}

impl History {
    fn new(end: f64, dt: f64) -> Self {
        if end <= 0.0 {
            return Self {
                lattice: Vec::new(),
                extra: Vec::new(),
            };
        }
        let mut k = (end / dt).floor() as usize;
        if k % 2 == 1 {
            k -= 1;
        }
        let mut lattice = Vec::with_capacity(k + 1);
        if k > 0 {
            for i in 0..=k {
                let w = if i == 0 || i == k {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                lattice.push((i as f64 * dt, w * dt / 3.0));
            }
        }
        let start = k as f64 * dt;
        let rest = end - start;
        let mut extra = Vec::new();
        if rest > 1e-12 * dt {
            let w = rest / 6.0;
            if k == 0 {
                extra.push((start, w));
            } else {
                lattice[k].1 += w;
            }
            extra.push((start + 0.5 * rest, 4.0 * w));
            extra.push((end, w));
        }
        Self { lattice, extra }
    }

    fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.lattice.iter().chain(self.extra.iter()).copied()
    }

    fn len(&self) -> usize {
        self.lattice.len() + self.extra.len()
    }
}

/// Time-domain evaluation of `G_H − G_{0,H}` at `frame`.
///
/// Cost grows like `(t/Δt)·(t'/Δt)`; intended for modest times.
pub fn interacting_hadamard_direct(
    frame: &ObservationFrame,
    p: &AtomParams,
    bath: Bath,
    opts: &DirectOptions,
) -> Result<DirectResult> {
    let (r2, r1) = (frame.r, frame.r_prime);
    let (t, tp) = (frame.t, frame.t_prime);
    let dt = opts.time_step;
    let cutoff = opts.cutoff;
    let e2m = p.coupling_ratio();
    let hom = HomogeneousSolution::new(p);
    let gr = |u: f64| hom.at(u).displacement_response;

    // Retarded emission times seen from each field point.
    let big_t = t - r2;
    let big_tp = tp - r1;
    let hist = History::new(big_t, dt);
    let hist_p = History::new(big_tp, dt);

    let interference_unprimed = if big_tp > 0.0 {
        let sum = kahan(hist_p.nodes().map(|(u, w)| {
            w * gr(u) * band_limited_hadamard(r2, t - big_tp + u, bath, cutoff)
        }));
        e2m / (4.0 * PI * r1) * sum
    } else {
        0.0
    };
    let interference_primed = if big_t > 0.0 {
        let sum = kahan(hist.nodes().map(|(u, w)| {
            w * gr(u) * band_limited_hadamard(r1, tp - big_t + u, bath, cutoff)
        }));
        e2m / (4.0 * PI * r2) * sum
    } else {
        0.0
    };

    let radiation = if big_t > 0.0 && big_tp > 0.0 {
        let delta = big_t - big_tp;
        let h0 = |x: f64| band_limited_hadamard(0.0, x, bath, cutoff);
        let a: Vec<f64> = hist.lattice.iter().map(|&(u, w)| w * gr(u)).collect();
        let b: Vec<f64> = hist_p.lattice.iter().map(|&(u, w)| w * gr(u)).collect();
        let (na, nb) = (a.len(), b.len());
        // Toeplitz table: lag index (k − i) + (na − 1).
        let table = map_indexed(na + nb, |m| {
            let lag = m as f64 - (na as f64 - 1.0);
            h0(delta + lag * dt)
        });
        let rows = map_indexed(na, |i| {
            let offset = na - 1 - i;
            kahan(b.iter().enumerate().map(|(k, &bk)| bk * table[offset + k])) * a[i]
        });
        let mut sum = kahan(rows.into_iter());
        // Pairs involving the off-lattice end panel.
        for (u, w) in hist.extra.iter().copied() {
            let wa = w * gr(u);
            sum += wa * kahan(hist_p.nodes().map(|(v, wv)| wv * gr(v) * h0(delta - u + v)));
        }
        for (v, wv) in hist_p.extra.iter().copied() {
            let wb = wv * gr(v);
            sum += wb * kahan(hist.lattice.iter().map(|&(u, w)| w * gr(u) * h0(delta - u + v)));
        }
        e2m * e2m / (16.0 * PI * PI * r1 * r2) * sum
    } else {
        0.0
    };

    let transient = if big_t > 0.0 && big_tp > 0.0 {
        let (x, xp) = (hom.at(big_t), hom.at(big_tp));
        let m = p.mass();
        let e2 = p.coupling() * p.coupling();
        e2 / (16.0 * PI * PI * r1 * r2)
            * (opts.initial.q2 * x.displacement * xp.displacement
                + opts.initial.p2 / (m * m)
                    * x.displacement_response
                    * xp.displacement_response)
    } else {
        0.0
    };

    Ok(DirectResult {
        interference_unprimed,
        interference_primed,
        radiation,
        transient,
        total: interference_unprimed + interference_primed + radiation + transient,
        n_steps: hist.len().max(hist_p.len()),
    })
}

fn kahan(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}
