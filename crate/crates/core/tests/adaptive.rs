//! The two-stage adaptive fit.

mod common;

use ndarray::Array2;
use spcr::{
    center, composite_coefficients, fit, fit_aspcr, lambda_grid, make_case, support_metrics,
    AdaptiveOptions, CaseId, FoldPlan, GridSpacing, SpcrConfig, WeightMatrix,
};

#[test]
fn zero_pilot_loadings_stay_zero() {
    let mut pinned = 0;
    for seed in 0..10 {
        let d = common::random_dataset(30, 6, seed, 0.5);
        let c0 = SpcrConfig::new(2);
        let grid = lambda_grid(&d, &c0, GridSpacing::Linear).unwrap();
        let c = c0.with_lambdas(grid.beta[3], grid.gamma[1]);
        let fit = fit_aspcr(&d, &c, &AdaptiveOptions::Fixed).unwrap();
        if fit.degenerate {
            continue;
        }
        let w = fit.weights.as_ref().unwrap();
        for ((l, j), v) in fit.model.b.indexed_iter() {
            if w.is_pinned(l, j) {
                pinned += 1;
                assert_eq!(*v, 0.0, "seed {seed} coordinate ({l}, {j})");
            }
        }
        assert!(fit.model.nnz() <= fit.pilot.nnz());
    }
    assert!(pinned > 0, "no instance exercised pinning");
}

#[test]
fn uniform_weights_rescale_the_penalty() {
    let d = common::random_dataset(20, 4, 6, 0.5);
    let mut c = SpcrConfig::new(2).with_lambdas(0.8, 0.3);
    c.zeta = 0.0;
    c.tol = 1e-12;
    let plain = fit(&d, &c.clone().with_lambdas(4.0 * 0.8, 0.3)).unwrap();
    let w = WeightMatrix::new(Array2::from_elem((4, 2), 4.0)).unwrap();
    let weighted = fit(&d, &c.with_weights(Some(w))).unwrap();
    assert!(common::max_abs_diff(plain.b.iter(), weighted.b.iter()) < 1e-9);
    assert!((plain.objective - weighted.objective).abs() < 1e-9 * plain.objective);
}

#[test]
fn heavy_weight_zeroes_its_coordinate() {
    let d = common::random_dataset(20, 3, 1, 0.5);
    let c = SpcrConfig::new(1).with_lambdas(0.5, 0.5);
    let base = fit(&d, &c).unwrap();
    assert_ne!(base.b[[0, 0]], 0.0);
    let mut w = Array2::ones((3, 1));
    w[[0, 0]] = 1e9;
    let m = fit(&d, &c.with_weights(Some(WeightMatrix::new(w).unwrap()))).unwrap();
    assert_eq!(m.b[[0, 0]], 0.0);
}

#[test]
fn preset_weights_are_refused() {
    let d = common::random_dataset(10, 2, 0, 0.5);
    let c = SpcrConfig::new(1).with_weights(Some(WeightMatrix::ones(2, 1)));
    assert!(fit_aspcr(&d, &c, &AdaptiveOptions::Fixed).is_err());
}

#[test]
fn recovers_the_sparse_support() {
    let mut tnr_sum = 0.0;
    for seed in 0..3 {
        let (train, _) = make_case(CaseId::C1b, 200, 0.1, seed).unwrap();
        let d = center(train.x().to_owned(), train.y().clone()).unwrap();
        let plan = FoldPlan::new(200, 5, seed).unwrap();
        let opts = AdaptiveOptions::CrossValidate {
            plan,
            spacing: GridSpacing::Linear,
            reselect: true,
        };
        let fit = fit_aspcr(&d, &SpcrConfig::new(1), &opts).unwrap();
        let truth = spcr::SimCase::new(CaseId::C1b, 200, 0.1).unwrap().true_xi;
        let (tpr, tnr) = support_metrics(composite_coefficients(&fit.model).view(), truth.view());
        assert_eq!(tpr, Some(1.0), "seed {seed}");
        tnr_sum += tnr.unwrap();
        assert!(fit.adaptive_cv.is_some());
    }
    assert!(tnr_sum / 3.0 >= 0.9, "mean TNR {}", tnr_sum / 3.0);
}

#[test]
fn reused_lambda_skips_second_search() {
    let d = common::random_dataset(25, 4, 3, 0.5);
    let plan = FoldPlan::new(25, 5, 0).unwrap();
    let opts = AdaptiveOptions::CrossValidate {
        plan,
        spacing: GridSpacing::Log,
        reselect: false,
    };
    let fit = fit_aspcr(&d, &SpcrConfig::new(1), &opts).unwrap();
    assert!(fit.adaptive_cv.is_none());
    let cv = fit.pilot_cv.unwrap();
    assert_eq!(cv.spacing, GridSpacing::Log);
}

#[test]
fn multi_component_fit_drops_whole_components() {
    for seed in 0..4 {
        let (train, _) = make_case(CaseId::C3b, 200, 0.1, seed).unwrap();
        let d = center(train.x().to_owned(), train.y().clone()).unwrap();
        let c0 = SpcrConfig::new(5);
        let grid = lambda_grid(&d, &c0, GridSpacing::Linear).unwrap();
        let c = c0.with_lambdas(grid.beta[2], grid.gamma[1]);
        let fit = fit_aspcr(&d, &c, &AdaptiveOptions::Fixed).unwrap();
        assert!(fit.model.gamma.iter().any(|g| *g == 0.0), "seed {seed}");
        let truth = spcr::SimCase::new(CaseId::C3b, 200, 0.1).unwrap().true_xi;
        let comp = composite_coefficients(&fit.model);
        let zeros = comp.iter().filter(|v| **v == 0.0).count();
        assert!(zeros >= 10, "seed {seed}: {zeros} exact zeros");
        let (tpr, _) = support_metrics(comp.view(), truth.view());
        assert!(tpr.unwrap() >= 0.9, "seed {seed}");
    }
}
