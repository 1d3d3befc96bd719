//! Spectral density of the radial energy flux through a sphere of radius `r`.
//!
//! The flux is `−4πr²·∂²/∂r∂t' [G_H − G_{0,H}]` at coincidence. Acting on the
//! frequency-domain correction, `∂/∂t'` gives `+iκ` and `∂/∂r` acts on the
//! unprimed field kernels, giving `(iκ − 1/r)·Ḡ_{0,R}` and
//! `κ coth·Re Ḡ_{0,R} − Ḡ_{0,H}/r`.

use num_complex::Complex64;
use serde::Serialize;

use crate::greens::{
    atom_retarded_ft, field_hadamard_ft, field_retarded_value, kappa_coth, AtomParams, Bath,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which parts of the radial derivative are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FieldZone {
    /// Only the terms that survive as `r → ∞`.
    Far,
    /// Far terms plus the `1/r` near-field pieces (diagnostic).
    Full,
}

/// The three constituents of the flux density at one frequency, each already
/// multiplied by `−4πr²·e²/m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxTerms {
    pub kappa: f64,
    /// Interference term carrying `Ḡ_{0,R}*·Ḡ_R*`.
    pub interference_a: Complex64,
    /// Interference term carrying `Ḡ_{0,R}·Ḡ_R`.
    pub interference_b: Complex64,
    /// Pure radiation term, `∝ |Ḡ_{0,R}|²`.
    pub radiation: Complex64,
}

impl FluxTerms {
    pub fn cross(&self) -> Complex64 {
        self.interference_a + self.interference_b
    }

    pub fn total(&self) -> Complex64 {
        self.cross() + self.radiation
    }

    /// Largest real constituent, the scale for cancellation checks.
    pub fn largest(&self) -> f64 {
        self.interference_a
            .re
            .abs()
            .max(self.interference_b.re.abs())
            .max(self.radiation.re.abs())
    }
}

/// Constituents of the flux density at radius `r > 0` (integrand for `dκ/2π`).
pub fn flux_terms(r: f64, kappa: f64, p: &AtomParams, bath: Bath, zone: FieldZone) -> FluxTerms {
    let a = field_retarded_value(r, kappa);
    let g = atom_retarded_ft(kappa, p);
    let kc = kappa_coth(kappa, bath);
    let h = field_hadamard_ft(r, kappa, bath);
    // κ²·coth and coth·Im Ḡ_R written through κ·coth so both stay finite at κ → 0.
    let k2_coth = kappa * kc;
    let coth_im_g = kc * 2.0 * p.damping() / denominator_norm(kappa, p);

    let mut ia = I * (k2_coth * a.re) * a.conj() * g.conj();
    let mut ib = -(kappa * kappa * h) * a * g;
    let mut rad = Complex64::new(-kappa * kappa * coth_im_g * a.norm_sqr(), 0.0);
    if zone == FieldZone::Full {
        ia += -I * (kappa * h / r) * a.conj() * g.conj();
        ib += -I * (kappa * h / r) * a * g;
        rad += -I * (kappa * coth_im_g * a.norm_sqr() / r);
    }
    let scale = -4.0 * std::f64::consts::PI * r * r * p.coupling_ratio();
    FluxTerms {
        kappa,
        interference_a: ia * scale,
        interference_b: ib * scale,
        radiation: rad * scale,
    }
}

/// `|ω² − κ² − 2iγκ|²`.
fn denominator_norm(kappa: f64, p: &AtomParams) -> f64 {
    let w = p.frequency();
    let re = w * w - kappa * kappa;
    let im = 2.0 * p.damping() * kappa;
    re * re + im * im
}

/// Real far-field flux density: the pointwise sum of the three constituents.
/// Its imaginary part is odd in `κ` and drops out of any mirrored integral.
pub fn far_field_flux_integrand(r: f64, kappa: f64, p: &AtomParams, bath: Bath) -> f64 {
    flux_terms(r, kappa, p, bath, FieldZone::Far).total().re
}
