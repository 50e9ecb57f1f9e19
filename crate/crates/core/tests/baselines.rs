//! PCA and PCR against direct least squares.

mod common;

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use spcr::baselines::pcr_cv;
use spcr::{center, pca, pcr_fit, FoldPlan};

#[test]
fn full_rank_pcr_is_ordinary_least_squares() {
    let d = common::random_dataset(25, 5, 17, 0.7);
    let m = pcr_fit(&d, 5).unwrap();
    let x = d.x();
    let xm = DMatrix::from_fn(25, 5, |i, j| x[[i, j]]);
    let yc = DVector::from_iterator(25, d.y().iter().map(|v| v - d.y().mean().unwrap()));
    let ols = (xm.transpose() * &xm)
        .cholesky()
        .unwrap()
        .solve(&(xm.transpose() * yc));
    let comp = m.composite();
    for j in 0..5 {
        assert!(
            (comp[j] - ols[j]).abs() < 1e-8,
            "coef {j}: {} vs {}",
            comp[j],
            ols[j]
        );
    }
    assert!((m.gamma0 - d.y().mean().unwrap()).abs() < 1e-12);
}

#[test]
fn scores_are_uncorrelated() {
    let d = common::random_dataset(40, 6, 2, 1.0);
    let dec = pca(&d).unwrap();
    let s = dec.scores();
    let sts = s.t().dot(&s);
    for ((i, j), v) in sts.indexed_iter() {
        let want = if i == j { dec.d[i] * dec.d[i] } else { 0.0 };
        assert!((v - want).abs() < 1e-9 * dec.d[0] * dec.d[0]);
    }
    assert!(dec.d.windows(2).into_iter().all(|w| w[0] >= w[1]));
}

#[test]
fn single_predictor_recovers_the_slope() {
    let x = Array2::from_shape_fn((8, 1), |(i, _)| i as f64 * 0.5 - 1.0);
    let y = x.column(0).mapv(|v| 3.0 * v + 2.0);
    let d = center(x.clone(), y.clone()).unwrap();
    let m = pcr_fit(&d, 1).unwrap();
    assert!((m.composite()[0] - 3.0).abs() < 1e-12);
    let pred = m.predict(x.view());
    assert!(common::max_abs_diff(pred.iter(), y.iter()) < 1e-12);
}

#[test]
fn cross_validated_k_has_the_smallest_error() {
    let d = common::random_dataset(30, 5, 8, 0.5);
    let plan = FoldPlan::new(30, 10, 1).unwrap();
    let (m, errs) = pcr_cv(&d, 5, &plan).unwrap();
    assert_eq!(errs.len(), 5);
    let k = m.k();
    assert!(errs.iter().all(|e| errs[k - 1] <= *e));
    assert!(errs[..k - 1].iter().all(|e| *e > errs[k - 1]));
}

#[test]
fn uncentered_input_is_rejected() {
    let x = Array2::from_shape_fn((4, 2), |(i, j)| (i + j) as f64);
    let d = spcr::Dataset::new(x, Array1::zeros(4)).unwrap();
    assert!(pca(&d).is_err());
}
