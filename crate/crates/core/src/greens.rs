//! Closed-form frequency-domain kernels.
//!
//! Fourier convention: `f̄(κ) = ∫ dt f(t) e^{+iκt}`, inverse
//! `f(t) = ∫ dκ/2π f̄(κ) e^{-iκt}`.
//!
//! The atom's internal oscillator obeys `Q̈ + 2γQ̇ + ω²Q = (e/m) φ`, so its
//! retarded transform is `1/(ω² − κ² − 2iγκ)`. The free field's retarded
//! kernel is `δ(t − t' − r)/(4πr)`, with transform `e^{iκr}/(4πr)`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Below this `|βκ|` the thermal factor switches to its Laurent series.
const COTH_SERIES_THRESHOLD: f64 = 1e-4;

/// Parameters of the atom's internal degree of freedom.
///
/// The damping is tied to the coupling by `γ = e²/(8πm)`; callers give
/// either `e` or `γ` and the other is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomParams {
    coupling: f64,
    mass: f64,
    bare_frequency: Option<f64>,
    frequency: f64,
    damping: f64,
}

impl AtomParams {
    /// Builds the parameters from the coupling `e`, mass and physical frequency.
    pub fn new(coupling: f64, mass: f64, frequency: f64) -> Result<Self> {
        check_positive("coupling", coupling)?;
        check_positive("mass", mass)?;
        check_positive("frequency", frequency)?;
        let damping = coupling * coupling / (8.0 * PI * mass);
        check_positive("damping", damping)?;
        Ok(Self {
            coupling,
            mass,
            bare_frequency: None,
            frequency,
            damping,
        })
    }

    /// Builds the parameters from the damping constant; the coupling is
    /// `sqrt(8πmγ)`. The supplied `γ` is kept verbatim.
    pub fn from_damping(damping: f64, mass: f64, frequency: f64) -> Result<Self> {
        check_positive("damping", damping)?;
        check_positive("mass", mass)?;
        check_positive("frequency", frequency)?;
        Ok(Self {
            coupling: (8.0 * PI * mass * damping).sqrt(),
            mass,
            bare_frequency: None,
            frequency,
            damping,
        })
    }

    /// Reassembles stored parameters, e.g. from a trajectory header, keeping
    /// every field bit for bit.
    pub(crate) fn from_parts(coupling: f64, mass: f64, frequency: f64, damping: f64) -> Result<Self> {
        let p = Self::from_damping(damping, mass, frequency)?;
        check_positive("coupling", coupling)?;
        let implied = coupling * coupling / (8.0 * PI * mass);
        if ((implied - damping) / damping).abs() > 1e-12 {
            return Err(Error::invalid("coupling", coupling, "inconsistent with damping and mass"));
        }
        Ok(Self { coupling, ..p })
    }

    /// Records the bare frequency for reference. It never enters a computation:
    /// the renormalization shift is not modelled and `ω` is an input.
    pub fn with_bare_frequency(mut self, bare: f64) -> Self {
        self.bare_frequency = Some(bare);
        self
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn bare_frequency(&self) -> Option<f64> {
        self.bare_frequency
    }

    /// `e²/m`, the prefactor of every radiation and interference term.
    pub fn coupling_ratio(&self) -> f64 {
        8.0 * PI * self.damping
    }

    /// Same atom with the coupling scaled by `factor` (damping scales by its square).
    pub fn with_coupling_scaled(&self, factor: f64) -> Result<Self> {
        let mut p = Self::new(self.coupling * factor, self.mass, self.frequency)?;
        p.bare_frequency = self.bare_frequency;
        Ok(p)
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, value, "must be finite and positive"))
    }
}

/// Initial state of the free field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bath {
    /// `β → ∞`.
    Vacuum,
    /// Thermal state at inverse temperature `beta`.
    Thermal { beta: f64 },
}

impl Bath {
    pub fn thermal(beta: f64) -> Result<Self> {
        if beta.is_infinite() && beta > 0.0 {
            return Ok(Bath::Vacuum);
        }
        check_positive("beta", beta)?;
        Ok(Bath::Thermal { beta })
    }

    pub fn beta(&self) -> f64 {
        match *self {
            Bath::Vacuum => f64::INFINITY,
            Bath::Thermal { beta } => beta,
        }
    }

    pub fn is_vacuum(&self) -> bool {
        matches!(self, Bath::Vacuum)
    }

    /// Text form used in CSV rows and reports: `inf` or the value of β.
    pub fn label(&self) -> String {
        match *self {
            Bath::Vacuum => "inf".to_string(),
            Bath::Thermal { beta } => format!("{beta}"),
        }
    }
}

impl fmt::Display for Bath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Bath::Vacuum => write!(f, "vacuum"),
            Bath::Thermal { beta } => write!(f, "thermal(beta={beta})"),
        }
    }
}

impl Serialize for Bath {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Bath::Vacuum => s.serialize_str("vacuum"),
            Bath::Thermal { beta } => s.serialize_f64(beta),
        }
    }
}

/// Serializes a bath as its [`Bath::label`], for flat tables.
pub(crate) fn serialize_bath_label<S: Serializer>(b: &Bath, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&b.label())
}

impl<'de> Deserialize<'de> for Bath {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(beta) => Bath::thermal(beta).map_err(serde::de::Error::custom),
            Raw::Text(t) if t.eq_ignore_ascii_case("vacuum") || t.eq_ignore_ascii_case("inf") => {
                Ok(Bath::Vacuum)
            }
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "beta must be a positive number or \"vacuum\", got {t:?}"
            ))),
        }
    }
}

/// `coth(βκ/2)`, or `sgn(κ)` in the vacuum. Odd in `κ`.
///
/// Fails at `κ = 0`, where the factor is undefined (vacuum) or infinite
/// (thermal); grids never sample that point.
pub fn thermal_factor(kappa: f64, bath: Bath) -> Result<f64> {
    if kappa == 0.0 || !kappa.is_finite() {
        return Err(Error::SingularThermalFactor {
            kappa,
            bath: bath.to_string(),
        });
    }
    Ok(match bath {
        Bath::Vacuum => kappa.signum(),
        Bath::Thermal { beta } => {
            let bk = beta * kappa;
            if bk.abs() < COTH_SERIES_THRESHOLD {
                2.0 / bk + bk / 6.0 - bk * bk * bk / 360.0
            } else {
                1.0 / (0.5 * bk).tanh()
            }
        }
    })
}

/// `κ·coth(βκ/2)` (`|κ|` in the vacuum): even, non-negative and finite at
/// `κ = 0`, where it equals `2/β`.
pub fn kappa_coth(kappa: f64, bath: Bath) -> f64 {
    match bath {
        Bath::Vacuum => kappa.abs(),
        Bath::Thermal { beta } => {
            let x = 0.5 * beta * kappa;
            let x_coth_x = if x.abs() < COTH_SERIES_THRESHOLD {
                let x2 = x * x;
                1.0 + x2 / 3.0 - x2 * x2 / 45.0
            } else {
                x / x.tanh()
            };
            2.0 / beta * x_coth_x
        }
    }
}

/// `1/(ω² − κ² − 2iγκ)`.
pub fn atom_retarded_ft(kappa: f64, p: &AtomParams) -> Complex64 {
    let w = p.frequency;
    Complex64::new(w * w - kappa * kappa, -2.0 * p.damping * kappa).inv()
}

/// `Im` of the atom retarded transform divided by `κ`: `2γ/|D(κ)|²`.
/// Even in `κ` and finite at the origin.
fn atom_im_over_kappa(kappa: f64, p: &AtomParams) -> f64 {
    let w = p.frequency;
    let re = w * w - kappa * kappa;
    let im = 2.0 * p.damping * kappa;
    2.0 * p.damping / (re * re + im * im)
}

/// `coth(βκ/2)·Im Ḡ_R(κ)`, the atom's Hadamard transform. Even in `κ`,
/// non-negative, and finite at `κ = 0`.
pub fn atom_hadamard_ft(kappa: f64, p: &AtomParams, bath: Bath) -> f64 {
    kappa_coth(kappa, bath) * atom_im_over_kappa(kappa, p)
}

/// Field retarded transform at separation `r`.
///
/// At `r = 0` the real part diverges; it is absorbed into the physical
/// frequency and therefore only available through
/// [`FieldRetarded::re_regularized`], which returns zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRetarded {
    r: f64,
    re: f64,
    im: f64,
}

/// Real part of the coincident field kernel after renormalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regularized {
    pub value: f64,
    pub renormalized: bool,
}

impl FieldRetarded {
    pub fn separation(&self) -> f64 {
        self.r
    }

    pub fn is_coincident(&self) -> bool {
        self.r == 0.0
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    pub fn re(&self) -> Result<f64> {
        if self.is_coincident() {
            Err(Error::RenormalizedRealPart)
        } else {
            Ok(self.re)
        }
    }

    pub fn re_regularized(&self) -> Regularized {
        if self.is_coincident() {
            Regularized {
                value: 0.0,
                renormalized: true,
            }
        } else {
            Regularized {
                value: self.re,
                renormalized: false,
            }
        }
    }

    pub fn value(&self) -> Result<Complex64> {
        Ok(Complex64::new(self.re()?, self.im))
    }
}

/// `e^{iκr}/(4πr)` for `r > 0`; at `r = 0` only `Im = κ/(4π)` is exposed.
pub fn field_retarded_ft(r: f64, kappa: f64) -> Result<FieldRetarded> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::invalid("r", r, "separation must be finite and >= 0"));
    }
    if r == 0.0 {
        return Ok(FieldRetarded {
            r,
            re: f64::NAN,
            im: kappa / (4.0 * PI),
        });
    }
    let (s, c) = (kappa * r).sin_cos();
    let scale = 1.0 / (4.0 * PI * r);
    Ok(FieldRetarded {
        r,
        re: c * scale,
        im: s * scale,
    })
}

/// `e^{iκr}/(4πr)` as a complex number, `r > 0`.
pub(crate) fn field_retarded_value(r: f64, kappa: f64) -> Complex64 {
    let (s, c) = (kappa * r).sin_cos();
    Complex64::new(c, s) / (4.0 * PI * r)
}

/// `coth(βκ/2)·sin(κr)/(4πr)`; at `r = 0`, `coth(βκ/2)·κ/(4π)`. Even in `κ`.
pub fn field_hadamard_ft(r: f64, kappa: f64, bath: Bath) -> f64 {
    if r == 0.0 || kappa == 0.0 {
        // sin(κr)/κ → r, so both limits reduce to κ·coth/(4π).
        return kappa_coth(kappa, bath) / (4.0 * PI);
    }
    thermal_factor(kappa, bath).expect("kappa is non-zero") * (kappa * r).sin() / (4.0 * PI * r)
}

/// Retarded Green's function of the damped oscillator in the time domain,
/// `e^{−γτ} sin(Ωτ)/Ω` for `τ > 0` with `Ω = sqrt(ω² − γ²)`, and the
/// `sinh` or `τe^{−γτ}` forms when overdamped or critically damped.
pub fn atom_retarded_time(tau: f64, p: &AtomParams) -> f64 {
    if tau < 0.0 {
        return 0.0;
    }
    HomogeneousSolution::new(p).at(tau).displacement_response
}

/// Fundamental solutions of `ẍ + 2γẋ + ω²x = 0`.
#[derive(Debug, Clone, Copy)]
pub struct HomogeneousSolution {
    gamma: f64,
    omega: f64,
    regime: Regime,
}

#[derive(Debug, Clone, Copy)]
enum Regime {
    Under(f64),
    Critical,
    Over(f64),
}

/// Values of the fundamental solutions at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousValues {
    /// Solution with `x(0) = 1, ẋ(0) = 0`.
    pub displacement: f64,
    /// Solution with `x(0) = 0, ẋ(0) = 1`; equals the retarded Green's function.
    pub displacement_response: f64,
    /// Time derivative of `displacement_response`.
    pub velocity_response: f64,
}

impl HomogeneousSolution {
    pub fn new(p: &AtomParams) -> Self {
        let (g, w) = (p.damping, p.frequency);
        let disc = w * w - g * g;
        let regime = if disc.abs() <= 1e-14 * w * w {
            Regime::Critical
        } else if disc > 0.0 {
            Regime::Under(disc.sqrt())
        } else {
            Regime::Over((-disc).sqrt())
        };
        Self {
            gamma: g,
            omega: w,
            regime,
        }
    }

    pub fn at(&self, t: f64) -> HomogeneousValues {
        let g = self.gamma;
        let decay = (-g * t).exp();
        // d(t) and its derivative; x(t) = ḋ + 2γd follows from the ODE.
        let (d, d_dot) = match self.regime {
            Regime::Under(o) => {
                let (s, c) = (o * t).sin_cos();
                (decay * s / o, decay * (c - g * s / o))
            }
            Regime::Critical => (t * decay, decay * (1.0 - g * t)),
            Regime::Over(o) => {
                let (s, c) = ((o * t).sinh(), (o * t).cosh());
                (decay * s / o, decay * (c - g * s / o))
            }
        };
        HomogeneousValues {
            displacement: d_dot + 2.0 * g * d,
            displacement_response: d,
            velocity_response: d_dot,
        }
    }

    pub fn frequency(&self) -> f64 {
        self.omega
    }
}

/// Cutoff and resolution of a frequency grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub cutoff: f64,
    pub n_points: usize,
}

/// Symmetric midpoint grid on `(−Λ, Λ)`.
///
/// Points sit at `±(j + ½)h` with `h = 2Λ/n`, so `κ = 0` is never sampled and
/// `values[i] == -values[n-1-i]` holds bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    spec: GridSpec,
    step: f64,
    values: Vec<f64>,
}

impl FrequencyGrid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(cutoff: f64, n_points: usize) -> Result<Self> {
        if n_points < Self::MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "n_points = {n_points} is below the minimum {}",
                Self::MIN_POINTS
            )));
        }
        Self::build(cutoff, n_points)
    }

    /// Grid whose spacing resolves features of width `width` with at least
    /// `points_per_width` samples, rounded up to a power of two and capped at
    /// `max_points`.
    pub fn resolving(
        cutoff: f64,
        width: f64,
        points_per_width: f64,
        max_points: usize,
    ) -> Result<Self> {
        check_positive("width", width)?;
        let wanted = (2.0 * cutoff * points_per_width / width).ceil();
        let n = if wanted.is_finite() && wanted < max_points as f64 {
            (wanted as usize).next_power_of_two()
        } else {
            max_points
        };
        Self::new(cutoff, n.clamp(Self::MIN_POINTS, max_points.max(Self::MIN_POINTS)))
    }

    /// Coarser companion grid with about half the points (never fewer than
    /// `min_points`) used for error estimates.
    pub(crate) fn coarsened(&self, min_points: usize) -> Result<Self> {
        let half = (self.spec.n_points / 2).max(min_points);
        let n = if half.is_multiple_of(2) { half } else { half + 1 };
        Self::build(self.spec.cutoff, n)
    }

    fn build(cutoff: f64, n_points: usize) -> Result<Self> {
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(Error::InvalidGrid(format!("cutoff {cutoff} must be positive")));
        }
        if !n_points.is_multiple_of(2) || n_points < 6 {
            return Err(Error::InvalidGrid(format!(
                "n_points = {n_points} must be even and at least 6"
            )));
        }
        let half = n_points / 2;
        let step = 2.0 * cutoff / n_points as f64;
        let positive: Vec<f64> = (0..half).map(|j| (j as f64 + 0.5) * step).collect();
        let mut values = Vec::with_capacity(n_points);
        values.extend(positive.iter().rev().map(|k| -k));
        values.extend_from_slice(&positive);
        Ok(Self {
            spec: GridSpec { cutoff, n_points },
            step,
            values,
        })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn cutoff(&self) -> f64 {
        self.spec.cutoff
    }

    pub fn len(&self) -> usize {
        self.spec.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The `n/2` positive points in ascending order.
    pub fn positive(&self) -> &[f64] {
        &self.values[self.spec.n_points / 2..]
    }

    /// Index of the mirror image of point `i`.
    pub fn mirror(&self, i: usize) -> usize {
        self.spec.n_points - 1 - i
    }
}

/// How a sampled spectrum relates to a time-domain kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpectrumKind {
    /// Transform of a real causal kernel: `S(−κ) = S(κ)*`.
    Retarded,
    Generic,
}

/// Complex function of frequency sampled on a [`FrequencyGrid`].
#[derive(Debug, Clone)]
pub struct ComplexSpectrum {
    grid: FrequencyGrid,
    samples: Vec<Complex64>,
    kind: SpectrumKind,
}

impl ComplexSpectrum {
    pub fn sample(
        grid: &FrequencyGrid,
        kind: SpectrumKind,
        f: impl Fn(f64) -> Complex64,
    ) -> Self {
        let samples = grid.values().iter().map(|&k| f(k)).collect();
        Self {
            grid: grid.clone(),
            samples,
            kind,
        }
    }

    pub fn atom_retarded(grid: &FrequencyGrid, p: &AtomParams) -> Self {
        Self::sample(grid, SpectrumKind::Retarded, |k| atom_retarded_ft(k, p))
    }

    pub fn field_retarded(grid: &FrequencyGrid, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::invalid("r", r, "sampled field kernel needs r > 0"));
        }
        Ok(Self::sample(grid, SpectrumKind::Retarded, |k| {
            field_retarded_value(r, k)
        }))
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    /// Largest `|S(−κ) − S(κ)*|` over mirrored pairs.
    pub fn conjugate_reflection_residual(&self) -> f64 {
        let half = self.samples.len() / 2;
        (0..half)
            .map(|i| (self.samples[self.grid.mirror(i)] - self.samples[i].conj()).norm())
            .fold(0.0, f64::max)
    }
}
