//! Deterministic quadrature over the symmetric grid `(−Λ, Λ)` with the
//! `dκ/2π` measure.
//!
//! Each half `[0, Λ]` is integrated with the midpoint rule plus fourth-order
//! end corrections; mirrored points are summed as pairs `f(κ) + f(−κ)` before
//! the compensated reduction, so odd integrands give exactly zero and the
//! result does not depend on how evaluations were scheduled.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::greens::FrequencyGrid;
use crate::parallel::map_indexed;

/// Endpoint weights of the corrected midpoint rule, in units of the step.
const END_WEIGHTS: [f64; 3] = [26.0 / 24.0, 21.0 / 24.0, 25.0 / 24.0];
/// Smallest half-grid that fits both sets of end weights.
const MIN_HALF: usize = 6;

/// Values that can be integrated: real, complex, or fixed-size real vectors.
pub trait SpectralValue:
    Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn is_finite(&self) -> bool;
    /// Largest absolute component.
    fn magnitude(&self) -> f64;
}

impl SpectralValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl SpectralValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn magnitude(&self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
}

/// Fixed-size vector of reals, for evaluating several integrals in one pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Components<const N: usize>(#[serde(with = "serde_arrays")] pub [f64; N]);

mod serde_arrays {
    use serde::{Serialize, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(
        v: &[f64; N],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }
}

impl<const N: usize> Add for Components<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for Components<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Mul<f64> for Components<N> {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        for a in self.0.iter_mut() {
            *a *= rhs;
        }
        self
    }
}

impl<const N: usize> SpectralValue for Components<N> {
    fn zero() -> Self {
        Components([0.0; N])
    }
    fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
    fn magnitude(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Outcome of one spectral integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult<V> {
    pub value: V,
    /// Richardson estimate from a grid with half the points; always `>= 0`.
    pub est_error: f64,
    pub n_evals: usize,
    pub cutoff: f64,
}

/// `∫_{−Λ}^{Λ} dκ/2π f(κ)` on `grid`, with a grid-halving error estimate.
pub fn integrate_spectrum<V, F>(f: F, grid: &FrequencyGrid) -> Result<QuadratureResult<V>>
where
    V: SpectralValue,
    F: Fn(f64) -> V + Sync + Send,
{
    let fine = apply_rule(&f, grid)?;
    let coarse_grid = companion_grid(grid)?;
    let coarse = apply_rule(&f, &coarse_grid)?;
    let ratio = coarse_grid.step() / grid.step();
    let est_error = (fine - coarse).magnitude() / (ratio.powi(4) - 1.0);
    Ok(QuadratureResult {
        value: fine,
        est_error,
        n_evals: grid.len() + coarse_grid.len(),
        cutoff: grid.cutoff(),
    })
}

/// Single application of the rule, without an error estimate.
pub fn integrate_on_grid<V, F>(f: F, grid: &FrequencyGrid) -> Result<V>
where
    V: SpectralValue,
    F: Fn(f64) -> V + Sync + Send,
{
    apply_rule(&f, grid)
}

fn companion_grid(grid: &FrequencyGrid) -> Result<FrequencyGrid> {
    grid.coarsened(2 * MIN_HALF)
}

fn apply_rule<V, F>(f: &F, grid: &FrequencyGrid) -> Result<V>
where
    V: SpectralValue,
    F: Fn(f64) -> V + Sync + Send,
{
    let pos = grid.positive();
    let half = pos.len();
    if half < MIN_HALF {
        return Err(Error::InvalidGrid(format!(
            "quadrature needs at least {} points",
            2 * MIN_HALF
        )));
    }
    let pairs = map_indexed(half, |j| {
        let k = pos[j];
        (f(k), f(-k))
    });

    let mut sum = V::zero();
    let mut comp = V::zero();
    for (j, (plus, minus)) in pairs.into_iter().enumerate() {
        if !plus.is_finite() {
            return Err(Error::NonFiniteIntegrand { kappa: pos[j] });
        }
        if !minus.is_finite() {
            return Err(Error::NonFiniteIntegrand { kappa: -pos[j] });
        }
        let w = end_weight(j, half);
        let term = (plus + minus) * w;
        // Kahan step.
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok(sum * (grid.step() / (2.0 * PI)))
}

fn end_weight(j: usize, half: usize) -> f64 {
    let from_end = j.min(half - 1 - j);
    END_WEIGHTS.get(from_end).copied().unwrap_or(1.0)
}

/// One result per cutoff, each on an `n_per_cutoff`-point grid.
pub fn cutoff_sweep<V, F>(
    f: F,
    cutoffs: &[f64],
    n_per_cutoff: usize,
) -> Result<Vec<QuadratureResult<V>>>
where
    V: SpectralValue,
    F: Fn(f64) -> V + Sync + Send,
{
    cutoff_sweep_with(f, cutoffs, |cutoff| FrequencyGrid::new(cutoff, n_per_cutoff))
}

/// Like [`cutoff_sweep`] with a caller-chosen grid for each cutoff.
pub fn cutoff_sweep_with<V, F, G>(f: F, cutoffs: &[f64], grid_for: G) -> Result<Vec<QuadratureResult<V>>>
where
    V: SpectralValue,
    F: Fn(f64) -> V + Sync + Send,
    G: Fn(f64) -> Result<FrequencyGrid>,
{
    if cutoffs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidGrid(
            "cutoff list must be strictly ascending".to_string(),
        ));
    }
    cutoffs
        .iter()
        .map(|&c| integrate_spectrum(&f, &grid_for(c)?))
        .collect()
}

/// Least-squares straight line with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares fit `y = slope·x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "line fit needs at least two paired points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientSamples("line fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Least-squares fit `y = slope·ln x + intercept`, the tail diagnostic for
/// log-divergent integrals.
pub fn fit_log_slope(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidGrid("log fit needs positive abscissae".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    fit_line(&lx, ys)
}

// Gauss-Kronrod 7/15 nodes and weights (QUADPACK qk15).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Result of the adaptive cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaptiveResult {
    pub value: f64,
    pub est_error: f64,
    pub n_evals: usize,
    pub converged: bool,
}

/// Globally adaptive Gauss-Kronrod integration of `∫ f` over `[a, b]`,
/// starting from `initial_panels` equal panels. Cross-check only: the panel
/// order depends on the integrand and it runs sequentially.
pub fn adaptive_integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    initial_panels: usize,
    max_panels: usize,
) -> Result<AdaptiveResult> {
    if !(a < b) {
        return Err(Error::InvalidGrid(format!("interval [{a}, {b}] is empty")));
    }
    let mut heap = BinaryHeap::new();
    let n0 = initial_panels.max(1);
    let width = (b - a) / n0 as f64;
    let mut n_evals = 0;
    for i in 0..n0 {
        let lo = a + i as f64 * width;
        let hi = if i + 1 == n0 { b } else { lo + width };
        let (value, error) = gk15(&f, lo, hi);
        n_evals += 15;
        heap.push(Panel { a: lo, b: hi, value, error });
    }
    let totals = |heap: &BinaryHeap<Panel>| {
        let mut panels: Vec<&Panel> = heap.iter().collect();
        panels.sort_by(|x, y| x.a.total_cmp(&y.a));
        panels
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
    };
    loop {
        let (value, error) = totals(&heap);
        if !value.is_finite() {
            return Err(Error::NonFiniteIntegrand { kappa: f64::NAN });
        }
        let converged = error <= rel_tol * value.abs();
        if converged || heap.len() >= max_panels {
            return Ok(AdaptiveResult {
                value,
                est_error: error,
                n_evals,
                converged,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&f, lo, hi);
            n_evals += 15;
            heap.push(Panel { a: lo, b: hi, value, error });
        }
    }
}

/// Adaptive counterpart of [`integrate_spectrum`] for real integrands:
/// `∫_{−Λ}^{Λ} dκ/2π f(κ)` with a breakpoint at `κ = 0`.
pub fn adaptive_spectrum(
    f: impl Fn(f64) -> f64,
    cutoff: f64,
    rel_tol: f64,
) -> Result<AdaptiveResult> {
    let panels = 256;
    let max = 200_000;
    let neg = adaptive_integrate(&f, -cutoff, 0.0, rel_tol, panels, max)?;
    let pos = adaptive_integrate(&f, 0.0, cutoff, rel_tol, panels, max)?;
    let scale = 1.0 / (2.0 * PI);
    Ok(AdaptiveResult {
        value: (neg.value + pos.value) * scale,
        est_error: (neg.est_error + pos.est_error) * scale,
        n_evals: neg.n_evals + pos.n_evals,
        converged: neg.converged && pos.converged,
    })
}
