//! Cross-module properties over random parameters.

use fluxbalance::fdr::{run_suite, Tolerance};
use fluxbalance::flux::{power_budget, BudgetOptions};
use fluxbalance::langevin::{predicted_variance, run_ensemble, EnsembleSpec, InitialState};
use fluxbalance::spectral::integrate_spectrum;
use fluxbalance::greens::atom_retarded_ft;
use fluxbalance::{AtomParams, Bath, FrequencyGrid};
use proptest::prelude::*;

fn bath_strategy() -> impl Strategy<Value = Bath> {
    prop_oneof![Just(Bath::Vacuum), (0.05f64..50.0).prop_map(|b| Bath::thermal(b).unwrap())]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn identities_hold_for_random_atoms(g in 1e-3f64..5.0, w in 0.2f64..5.0, m in 0.1f64..10.0, bath in bath_strategy()) {
        let p = AtomParams::from_damping(g, m, w).unwrap();
        let grid = FrequencyGrid::new(30.0, 2048).unwrap();
        for r in run_suite(&grid, &p, bath, 0.7, Tolerance::default()) {
            prop_assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn budget_balances_on_any_grid(g in 1e-3f64..3.0, w in 0.2f64..5.0, bath in bath_strategy(), n in 5usize..12, cutoff in 5.0f64..200.0) {
        let p = AtomParams::from_damping(g, 1.0, w).unwrap();
        let grid = FrequencyGrid::new(cutoff, 1 << n).unwrap();
        let b = power_budget(&p, bath, &grid, &BudgetOptions::default()).unwrap();
        prop_assert!(b.net_ratio() <= 1e-10);
        prop_assert!(b.atom_closure_ratio() <= 1e-10);
        prop_assert!(b.p_r > 0.0 && b.p_gamma < 0.0);
    }

    #[test]
    fn variance_exceeds_zero_point_and_sum_rule_holds(g in 0.01f64..1.0, bath in bath_strategy()) {
        let p = AtomParams::from_damping(g, 1.0, 1.0).unwrap();
        let v = predicted_variance(&p, bath, 40.0).unwrap().value;
        // Never below the vacuum value at the same cutoff.
        let vac = predicted_variance(&p, Bath::Vacuum, 40.0).unwrap().value;
        prop_assert!(v >= vac * (1.0 - 1e-12));
        let grid = FrequencyGrid::resolving(40.0, g, 8.0, 1 << 20).unwrap();
        let s = integrate_spectrum(|k| 2.0 * k * atom_retarded_ft(k, &p).im, &grid).unwrap().value;
        prop_assert!(s > 0.9 && s < 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn noise_scaling_is_exactly_quadratic(seed in any::<u64>(), g in 0.2f64..1.0) {
        let p = AtomParams::from_damping(g, 1.0, 1.0).unwrap();
        let mut spec = EnsembleSpec::new(p, Bath::thermal(1.0).unwrap(), 8.0, 3, seed);
        spec.t_total = 20.0;
        spec.t_burn = 5.0;
        spec.initial = InitialState::Fixed { q: 0.0, qdot: 0.0 };
        let base = run_ensemble(&spec).unwrap().stats;
        spec.noise_scale = 2.0;
        let loud = run_ensemble(&spec).unwrap().stats;
        prop_assert_eq!(4.0 * base.var_q, loud.var_q);
        prop_assert_eq!(4.0 * base.var_qdot, loud.var_qdot);
    }
}
