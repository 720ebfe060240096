mod common;

use common::*;
use fleetnet::fleet_data::{EntityDataset, Observation};
use fleetnet::regression::{fit_entity_model, fit_observations, has_full_column_rank, rse, BasisSpec};
use fleetnet::Error;

#[test]
fn coefficients_match_normal_equations() {
    let mut r = rng(11);
    for _ in 0..200 {
        let inst = random_regression_instance(&mut r);
        let model = fit_observations(&inst.observations, &inst.basis).unwrap();
        let oracle = normal_equations(&inst.design, &inst.y);
        let err = relative_error(&model.coefficients, &oracle);
        assert!(err < 1e-8, "relative error {err:e}");
    }
}

#[test]
fn rse_matches_direct_evaluation() {
    let mut r = rng(12);
    for _ in 0..200 {
        let inst = random_regression_instance(&mut r);
        let model = fit_observations(&inst.observations, &inst.basis).unwrap();
        let want = direct_rse(&inst.design, &inst.y, &model.coefficients);
        assert!((model.rse_on(&inst.observations).unwrap() - want).abs() < 1e-12);
        assert!((model.training_rse - want).abs() < 1e-12);
    }
}

#[test]
fn residual_is_orthogonal_to_design() {
    let mut r = rng(13);
    for _ in 0..100 {
        let inst = random_regression_instance(&mut r);
        let model = fit_observations(&inst.observations, &inst.basis).unwrap();
        let m = inst.design[0].len();
        for c in 0..m {
            let dot: f64 = inst
                .design
                .iter()
                .zip(&inst.y)
                .map(|(row, &y)| row[c] * (y - row.iter().zip(&model.coefficients).map(|(a, b)| a * b).sum::<f64>()))
                .sum();
            let scale: f64 = inst.design.iter().map(|row| row[c].abs()).sum::<f64>() * inst.y.iter().fold(1.0f64, |a, y| a.max(y.abs()));
            assert!(dot.abs() <= 1e-10 * scale, "column {c}: Xᵀr = {dot:e}");
        }
    }
}

#[test]
fn rank_detection_agrees_with_row_reduction() {
    let mut r = rng(14);
    for trial in 0..100 {
        let inst = random_regression_instance(&mut r);
        let mut obs = inst.observations.clone();
        let mut design = inst.design.clone();
        if trial % 2 == 0 {
            // Collapse every x to one value: only the intercept column survives.
            let x0 = obs[0].x.clone();
            for (o, row) in obs.iter_mut().zip(design.iter_mut()) {
                o.x = x0.clone();
                *row = design_row(&x0, inst.basis.degree);
            }
        }
        let full = matrix_rank(&design) == design[0].len();
        assert_eq!(has_full_column_rank(&obs, &inst.basis), full);
        match fit_observations(&obs, &inst.basis) {
            Ok(_) => assert!(full),
            Err(Error::RankDeficient) => assert!(!full),
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}

#[test]
fn exact_line_is_recovered() {
    let data = EntityDataset::from_pairs("a", &[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0), (3.0, 7.0)]);
    let model = fit_entity_model(&data, &BasisSpec::linear()).unwrap();
    assert!(relative_error(&model.coefficients, &[1.0, 2.0]) < 1e-12);
    assert!(rse(&model, &data).unwrap() < 1e-12);
}

#[test]
fn quadratic_basis_fits_a_parabola() {
    let obs: Vec<Observation> = (0..10).map(|i| {
        let x = i as f64 / 3.0;
        Observation::new(vec![x], 2.0 - x + 0.5 * x * x)
    }).collect();
    let model = fit_observations(&obs, &BasisSpec::new(2)).unwrap();
    assert!(relative_error(&model.coefficients, &[2.0, -1.0, 0.5]) < 1e-10);
}

#[test]
fn underdetermined_is_rejected() {
    let obs = vec![Observation::new(vec![1.0, 2.0], 3.0), Observation::new(vec![0.0, 1.0], 1.0)];
    assert!(matches!(
        fit_observations(&obs, &BasisSpec::linear()),
        Err(Error::Underdetermined { rows: 2, coefficients: 3 })
    ));
}
