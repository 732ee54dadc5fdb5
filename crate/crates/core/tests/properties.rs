use beamspec::grid::{e_norm, Grid, SampledFn};
use beamspec::nodal::nodal_profile;
use beamspec::spectrum::{eigen_pencil_with, NodalPolicy, PencilOptions};
use beamspec::Sign;
use proptest::prelude::*;

fn grid() -> Grid<f64> {
    Grid::new(99).unwrap()
}

/// `Σ a_j sin(jπt)`, which satisfies the boundary conditions.
fn sine_series(a: &[f64]) -> SampledFn<f64> {
    SampledFn::from_fn(grid(), |t| {
        a.iter()
            .enumerate()
            .map(|(j, c)| c * ((j + 1) as f64 * std::f64::consts::PI * t).sin())
            .sum()
    })
}

fn opts() -> PencilOptions {
    PencilOptions {
        nodal: NodalPolicy::Report,
        extrapolate: false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 48,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn e_norm_is_homogeneous(a in prop::collection::vec(-2.0f64..2.0, 1..5), c in -50.0f64..50.0) {
        let u = sine_series(&a);
        let base = e_norm(&u).value;
        let scaled = e_norm(&u.scale(c)).value;
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-10 * c.abs() * base + 1e-300);
    }

    #[test]
    fn negation_flips_sigma_and_keeps_count(a in prop::collection::vec(-2.0f64..2.0, 1..5)) {
        let u = sine_series(&a);
        prop_assume!(u.max_abs() > 1e-3);
        let (Ok(p), Ok(q)) = (nodal_profile(&u), nodal_profile(&u.scale(-1.0))) else {
            return Ok(());
        };
        prop_assert_eq!(p.count, q.count);
        prop_assert_eq!(p.sigma, q.sigma.flip());
    }

    #[test]
    fn single_mode_has_expected_profile(j in 1usize..8, amp in 0.01f64..10.0, neg in any::<bool>()) {
        let c = if neg { -amp } else { amp };
        let u = SampledFn::from_fn(grid(), |t| c * (j as f64 * std::f64::consts::PI * t).sin());
        let p = nodal_profile(&u).unwrap();
        prop_assert_eq!(p.count, j - 1);
        prop_assert_eq!(p.sigma, if neg { Sign::Minus } else { Sign::Plus });
        prop_assert!(p.is_nodal);
    }

    #[test]
    fn weight_scaling_rescales_the_spectrum(b in 0.2f64..0.8, c in 0.1f64..20.0) {
        let m = SampledFn::from_fn(grid(), |t| 1.0 + b * (2.0 * std::f64::consts::PI * t).cos());
        let base = eigen_pencil_with(&m, 3, 0, opts()).unwrap();
        let pos = eigen_pencil_with(&m.scale(c), 3, 0, opts()).unwrap();
        let neg = eigen_pencil_with(&m.scale(-c), 0, 3, opts()).unwrap();
        prop_assert!(neg.positive.is_empty());
        for k in 0..3 {
            let mu = base.positive[k].mu;
            prop_assert!((pos.positive[k].mu * c - mu).abs() <= 1e-8 * mu);
            prop_assert!((neg.negative[k].mu * c + mu).abs() <= 1e-8 * mu);
        }
    }
}
