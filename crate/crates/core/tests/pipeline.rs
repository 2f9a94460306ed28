use std::f64::consts::PI;
use std::io::Cursor;
use std::sync::Arc;

use aqc_core::densities::{self, DoubleWell, EnergyDensity};
use aqc_core::envelope::{convex_biconjugate, minimize_cell, sample_density_slice, Axis, EnvelopeQuery, SolverOptions};
use aqc_core::pseudodiff::cutoff;
use aqc_core::relaxation::{loglog_slope, recovery_sequence, CubeCutoff};
use aqc_core::symbols::{self, cell_samples, sphere_samples, verify_constant_rank, CoefficientField};
use aqc_core::torus::{PeriodicField, TorusGrid};
use aqc_core::Error;
use proptest::prelude::*;

#[test]
fn every_catalog_label_builds() {
    let ops = symbols::catalog::registry();
    for name in ops.names() {
        let op = ops.build(name).unwrap();
        assert!(op.label().starts_with(name.split('(').next().unwrap()));
    }
    let dens = densities::registry();
    for name in dens.names() {
        dens.build(name).unwrap();
    }
    let cuts = cutoff::registry();
    for name in cuts.names() {
        cuts.build(name).unwrap();
    }
    match ops.build("div3d") {
        Err(Error::UnknownLabel { label, known, .. }) => {
            assert_eq!(label, "div3d");
            assert!(known.contains("div2d"));
        }
        Err(e) => panic!("wrong error {e}"),
        Ok(_) => panic!("div3d should not resolve"),
    }
    assert!(dens.build("pnorm(0.5)").is_err());
}

#[test]
fn rank_certificates_over_the_catalog() {
    let ops = symbols::catalog::registry();
    let xs = cell_samples(2, 5, 8, 3);
    let lambdas = sphere_samples(2, 32, 16, 4);
    for (name, rank, ok) in [
        ("div2d", 1, true),
        ("scalar-curl2d", 1, true),
        ("scaled-div2d", 1, true),
        ("elliptic2d", 2, true),
        ("diag-nonconstant-rank", 2, false),
    ] {
        let op = ops.build(name).unwrap();
        let cert = verify_constant_rank(op.as_ref(), &xs, &lambdas, 1e6).unwrap();
        assert_eq!(cert.passed, ok, "{name}");
        assert_eq!(cert.rank, rank, "{name}");
        assert_eq!(cert.failure_witness.is_some(), !ok, "{name}");
    }
}

#[test]
fn field_files_round_trip() {
    let grid = TorusGrid::new(2, 8).unwrap();
    let v = PeriodicField::from_fn(&grid, 2, |x, o| {
        o[0] = (2.0 * PI * x[0]).sin() / 3.0;
        o[1] = x[1] * x[0] + 1e-300;
    });
    let mut csv = Vec::new();
    v.write_csv(&mut csv).unwrap();
    let back = PeriodicField::read_csv(Cursor::new(&csv)).unwrap();
    assert_eq!(back.values(), v.values());
    let mut bin = Vec::new();
    v.write_binary(&mut bin).unwrap();
    assert_eq!(&bin[..4], b"AQCF");
    let back = PeriodicField::read_binary(Cursor::new(&bin)).unwrap();
    assert_eq!(back.values(), v.values());
    assert!(PeriodicField::read_binary(Cursor::new(&bin[..bin.len() - 3])).is_err());
}

#[test]
fn sandwich_for_double_well_under_curl() {
    let f: Arc<dyn EnergyDensity> = Arc::new(DoubleWell);
    let op = symbols::catalog::registry().build("scalar-curl2d").unwrap();
    let axes = vec![Axis::new(-2.0, 2.0, 81), Axis::new(-2.0, 2.0, 81)];
    let bi = convex_biconjugate(&sample_density_slice(f.as_ref(), &[0.0, 0.0], &[], axes)).unwrap();
    let options = SolverOptions {
        ladder: vec![8, 16],
        ..Default::default()
    };
    for xi in [[0.0, 0.0], [0.5, -0.5], [1.5, 0.0]] {
        let q = EnvelopeQuery::new(f.clone(), op.as_ref(), &[0.0, 0.0], &[], &xi, options.clone()).unwrap();
        let res = minimize_cell(&q).unwrap();
        let lower = bi.at(&xi).unwrap();
        assert!(lower <= res.value + 1e-3, "{xi:?}: {lower} > {}", res.value);
        assert!(res.value <= res.upper_oracle() + 1e-8, "{xi:?}");
    }
}

#[test]
fn operators_report_their_dimensions() {
    let op: Arc<dyn CoefficientField> = Arc::from(symbols::catalog::registry().build("div2d").unwrap());
    let dims = op.dims();
    assert_eq!((dims.space, dims.field, dims.equations), (2, 2, 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn single_tile_recovery_is_the_cell_field(seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let grid = TorusGrid::new(2, 8).unwrap();
        let values = (0..grid.len() * 2).map(|_| rng.random::<f64>() - 0.5).collect();
        let w = PeriodicField::from_values(&grid, 2, values).unwrap();
        let z = recovery_sequence(&[(&[0.0, 0.0][..], &w)], 1.0, 1, CubeCutoff::Full, &grid).unwrap();
        prop_assert_eq!(z.field.values(), w.values());
    }

    #[test]
    fn slope_recovers_power_laws(c in 0.1f64..10.0, p in -3.0f64..3.0) {
        let x = [1.0, 0.5, 0.25, 0.125];
        let y: Vec<f64> = x.iter().map(|v: &f64| c * v.powf(p)).collect();
        prop_assert!((loglog_slope(&x, &y) - p).abs() < 1e-10);
    }
}
