//! Stationary (late-time) correction to the field's Hadamard function.

use num_complex::Complex64;
use serde::Serialize;

use super::ObservationFrame;
use crate::error::Result;
use crate::greens::{
    atom_retarded_ft, field_hadamard_ft, field_retarded_value, kappa_coth, AtomParams, Bath,
    FrequencyGrid,
};
use crate::spectral::{integrate_spectrum, Components};

/// `G_H − G_{0,H}` between two field points, split into its three terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HadamardCorrection {
    /// Interference with the free field at the unprimed point.
    pub interference_unprimed: f64,
    /// Interference with the free field at the primed point.
    pub interference_primed: f64,
    /// Radiation-radiation term.
    pub radiation: f64,
    /// Sum of the three terms.
    pub total: f64,
    /// Integrated imaginary part; zero up to rounding.
    pub imag_residue: f64,
    /// Homogeneous-solution contribution; zero in the stationary form.
    pub transient: f64,
    pub est_error: f64,
}

/// Spectral density of the correction before the `e^{−iκ(t−t')}` phase, for
/// distances `r2` (unprimed) and `r1` (primed) from the atom.
pub fn hadamard_correction_density(
    r2: f64,
    r1: f64,
    kappa: f64,
    p: &AtomParams,
    bath: Bath,
) -> Complex64 {
    let [t1, t2, t3] = density_terms(r2, r1, kappa, p, bath);
    t1 + t2 + t3
}

fn density_terms(r2: f64, r1: f64, kappa: f64, p: &AtomParams, bath: Bath) -> [Complex64; 3] {
    let g = atom_retarded_ft(kappa, p);
    let a1 = field_retarded_value(r1, kappa);
    let a2 = field_retarded_value(r2, kappa);
    let e2m = p.coupling_ratio();
    let w = p.frequency();
    let (re, im) = (w * w - kappa * kappa, 2.0 * p.damping() * kappa);
    let coth_im_g = kappa_coth(kappa, bath) * 2.0 * p.damping() / (re * re + im * im);
    [
        field_hadamard_ft(r2, kappa, bath) * a1.conj() * g.conj() * e2m,
        field_hadamard_ft(r1, kappa, bath) * a2 * g * e2m,
        a2 * a1.conj() * (coth_im_g * e2m),
    ]
}

/// Stationary correction at `frame` without the late-time check.
pub fn late_time_correction(
    frame: &ObservationFrame,
    p: &AtomParams,
    bath: Bath,
    grid: &FrequencyGrid,
) -> Result<HadamardCorrection> {
    let (r2, r1, lag) = (frame.r, frame.r_prime, frame.lag());
    let res = integrate_spectrum(
        |k| {
            let phase = Complex64::new(0.0, -k * lag).exp();
            let [t1, t2, t3] = density_terms(r2, r1, k, p, bath).map(|t| t * phase);
            Components([t1.re, t2.re, t3.re, t1.im + t2.im + t3.im])
        },
        grid,
    )?;
    let [a, b, c, imag] = res.value.0;
    Ok(HadamardCorrection {
        interference_unprimed: a,
        interference_primed: b,
        radiation: c,
        total: a + b + c,
        imag_residue: imag,
        transient: 0.0,
        est_error: res.est_error,
    })
}

/// Stationary correction; fails when `frame` is not late enough, in which
/// case [`super::interacting_hadamard_direct`] is the right tool.
pub fn interacting_hadamard_late(
    frame: &ObservationFrame,
    p: &AtomParams,
    bath: Bath,
    grid: &FrequencyGrid,
) -> Result<HadamardCorrection> {
    frame.check_late_time(p)?;
    late_time_correction(frame, p, bath, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;

    fn setup() -> (AtomParams, FrequencyGrid) {
        (
            AtomParams::from_damping(0.05, 1.0, 1.0).unwrap(),
            FrequencyGrid::new(20.0, 1 << 13).unwrap(),
        )
    }

    #[test]
    fn equal_time_value_is_real() {
        let (p, grid) = setup();
        let f = ObservationFrame::new(3.0, 800.0, 800.0).unwrap();
        let c = interacting_hadamard_late(&f, &p, Bath::Vacuum, &grid).unwrap();
        assert_eq!(c.imag_residue, 0.0);
        assert!(c.total.is_finite() && c.total != 0.0);
        assert_eq!(c.transient, 0.0);
    }

    #[test]
    fn swap_with_lag() {
        let (p, grid) = setup();
        let bath = Bath::thermal(1.0).unwrap();
        let f = ObservationFrame::with_radii(3.0, 4.5, 900.7, 900.0).unwrap();
        let a = interacting_hadamard_late(&f, &p, bath, &grid).unwrap();
        let b = interacting_hadamard_late(&f.swapped(), &p, bath, &grid).unwrap();
        assert!((a.total - b.total).abs() <= 1e-10 * a.total.abs());
        assert!((a.interference_unprimed - b.interference_primed).abs() <= 1e-10 * a.total.abs());
    }

    #[test]
    fn early_times_are_rejected() {
        let (p, grid) = setup();
        let f = ObservationFrame::new(3.0, 10.0, 10.0).unwrap();
        let err = interacting_hadamard_late(&f, &p, Bath::Vacuum, &grid).unwrap_err();
        assert!(matches!(err, Error::LateTimeMargin(_)));
        assert!(err.to_string().contains("direct"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn exchange_symmetry(r in 0.2f64..20.0, rp in 0.2f64..20.0, lag in -15.0f64..15.0) {
            let p = AtomParams::from_damping(0.1, 1.0, 1.0).unwrap();
            let grid = FrequencyGrid::new(10.0, 2048).unwrap();
            let f = ObservationFrame::with_radii(r, rp, 1e4 + lag, 1e4).unwrap();
            let a = late_time_correction(&f, &p, Bath::Vacuum, &grid).unwrap();
            let b = late_time_correction(&f.swapped(), &p, Bath::Vacuum, &grid).unwrap();
            let scale = a.interference_unprimed.abs() + a.interference_primed.abs() + a.radiation.abs();
            prop_assert!((a.total - b.total).abs() <= 1e-12 * scale);
        }
    }
}
