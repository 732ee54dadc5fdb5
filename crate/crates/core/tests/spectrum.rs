use std::f64::consts::PI;

use beamspec::grid::{Grid, SampledFn};
use beamspec::spectrum::{eigen_pencil, eigen_pencil_with, NodalPolicy, PencilOptions};
use beamspec::{Error, Grid32, Weight};

#[test]
fn csv_weight_reproduces_builtin_spectrum() {
    let g: Grid<f64> = Grid::new(399).unwrap();
    let path = std::env::temp_dir().join(format!("beamspec_ramp_{}.csv", std::process::id()));
    Weight::LinearRamp.sample(g).write_csv(&path).unwrap();
    let table: Weight = path.to_str().unwrap().parse().unwrap();
    std::fs::remove_file(&path).unwrap();
    let opts = PencilOptions {
        nodal: NodalPolicy::Report,
        extrapolate: false,
    };
    let a = eigen_pencil_with(&Weight::LinearRamp.sample(g), 3, 3, opts).unwrap();
    let b = eigen_pencil_with(&table.sample(g), 3, 3, opts).unwrap();
    for (p, q) in a.pairs().zip(b.pairs()) {
        assert!((p.mu - q.mu).abs() <= 1e-10 * p.mu.abs(), "{} vs {}", p.mu, q.mu);
    }
}

#[test]
fn extrapolation_reduces_error() {
    let g: Grid<f64> = Grid::new(199).unwrap();
    let m = Weight::One.sample(g);
    let plain = eigen_pencil(&m, 3, 0).unwrap();
    let opts = PencilOptions {
        nodal: NodalPolicy::Enforce,
        extrapolate: true,
    };
    let rich = eigen_pencil_with(&m, 3, 0, opts).unwrap();
    for k in 1..=3 {
        let exact = (k as f64 * PI).powi(4);
        let e0 = (plain.positive[k - 1].mu - exact).abs();
        let e1 = (rich.positive[k - 1].mu - exact).abs();
        assert!(e1 < 0.1 * e0, "k = {k}: {e1} vs {e0}");
    }
}

#[test]
fn single_precision_matches_double() {
    let g32: Grid32 = Grid::new(199).unwrap();
    let g64: Grid<f64> = Grid::new(199).unwrap();
    let s32 = eigen_pencil(&Weight::One.sample(g32), 2, 0).unwrap();
    let s64 = eigen_pencil(&Weight::One.sample(g64), 2, 0).unwrap();
    for (a, b) in s32.positive.iter().zip(&s64.positive) {
        assert!((a.mu as f64 - b.mu).abs() <= 1e-3 * b.mu);
    }
}

#[test]
fn weight_without_negative_part_reports_no_negative_pairs() {
    let g: Grid<f64> = Grid::new(99).unwrap();
    let sp = eigen_pencil(&Weight::One.sample(g), 1, 2).unwrap();
    assert!(sp.negative.is_empty());
}

#[test]
fn vanishing_weight_is_rejected() {
    let g: Grid<f64> = Grid::new(99).unwrap();
    let r = eigen_pencil(&SampledFn::zeros(g), 1, 1);
    assert!(matches!(r, Err(Error::NotInWeightClass(_))), "{r:?}");
}
