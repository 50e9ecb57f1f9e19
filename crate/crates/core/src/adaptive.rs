//! Two-stage adaptive SPCR: fit a pilot SPCR, weight each loading's L1 penalty
//! by `1/|β̂_lj|`, refit.

use ndarray::Array2;

use crate::data::{Dataset, SpcrConfig, SpcrModel};
use crate::error::{Result, SpcrError};
use crate::selection::{cross_validate, CvResult, FoldPlan, GridSpacing};
use crate::solver::Problem;

/// Per-loading penalty weights; `+∞` pins the loading at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(Array2<f64>);

impl WeightMatrix {
    pub fn new(weights: Array2<f64>) -> Result<Self> {
        if weights.iter().any(|w| w.is_nan() || *w <= 0.0) {
            return Err(SpcrError::InvalidConfig(
                "weights must be positive or +inf".into(),
            ));
        }
        Ok(Self(weights))
    }

    pub fn ones(p: usize, k: usize) -> Self {
        Self(Array2::ones((p, k)))
    }

    #[inline]
    pub fn get(&self, l: usize, j: usize) -> f64 {
        self.0[[l, j]]
    }

    pub fn dim(&self) -> (usize, usize) {
        self.0.dim()
    }

    pub fn is_pinned(&self, l: usize, j: usize) -> bool {
        self.0[[l, j]].is_infinite()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }
}

/// `ω_lj = 1/|β̂_lj|`, with `+∞` where the pilot loading is zero. No capping.
pub fn adaptive_weights(pilot: &SpcrModel) -> WeightMatrix {
    WeightMatrix(pilot.b.mapv(|b| 1.0 / b.abs()))
}

/// How the penalty levels of both stages are chosen.
#[derive(Debug, Clone)]
pub enum AdaptiveOptions {
    /// Both stages use `lambda_beta`/`lambda_gamma` from the config.
    Fixed,
    /// The pilot uses its CV-selected pair. With `reselect`, the adaptive stage
    /// runs its own CV on a grid built with the weights; otherwise it reuses
    /// the pilot's pair.
    CrossValidate {
        plan: FoldPlan,
        spacing: GridSpacing,
        reselect: bool,
    },
}

#[derive(Debug, Clone)]
pub struct AdaptiveFit {
    pub pilot: SpcrModel,
    pub pilot_cv: Option<CvResult>,
    /// `None` when the adaptive stage was skipped.
    pub weights: Option<WeightMatrix>,
    pub adaptive_cv: Option<CvResult>,
    /// The aSPCR model (the pilot itself when `degenerate`).
    pub model: SpcrModel,
    /// The pilot had no nonzero loading, so every weight would be infinite and
    /// the refit would be the null model.
    pub degenerate: bool,
}

/// Run the aSPCR pipeline. `c.weights` must be unset (the pilot is plain SPCR).
pub fn fit_aspcr(d: &Dataset, c: &SpcrConfig, opts: &AdaptiveOptions) -> Result<AdaptiveFit> {
    if c.weights.is_some() {
        return Err(SpcrError::InvalidConfig(
            "the pilot stage expects uniform weights".into(),
        ));
    }
    let (pilot, pilot_cv) = match opts {
        AdaptiveOptions::Fixed => (Problem::new(d)?.fit(c)?, None),
        AdaptiveOptions::CrossValidate { plan, spacing, .. } => {
            let cv = cross_validate(d, c, plan, *spacing)?;
            (cv.best_model.clone(), Some(cv))
        }
    };
    if pilot.nnz() == 0 {
        return Ok(AdaptiveFit {
            model: pilot.clone(),
            pilot,
            pilot_cv,
            weights: None,
            adaptive_cv: None,
            degenerate: true,
        });
    }
    let weights = adaptive_weights(&pilot);
    let mut stage2 = c.clone().with_weights(Some(weights.clone()));
    let (model, adaptive_cv) = match opts {
        AdaptiveOptions::CrossValidate {
            plan,
            spacing,
            reselect: true,
        } => {
            let cv = cross_validate(d, &stage2, plan, *spacing)?;
            (cv.best_model.clone(), Some(cv))
        }
        AdaptiveOptions::CrossValidate {
            reselect: false, ..
        } => {
            let cv = pilot_cv.as_ref().expect("pilot ran CV");
            stage2.lambda_beta = cv.best_lambda_beta();
            stage2.lambda_gamma = cv.best_lambda_gamma();
            (Problem::new(d)?.fit(&stage2)?, None)
        }
        AdaptiveOptions::Fixed => (Problem::new(d)?.fit(&stage2)?, None),
    };
    Ok(AdaptiveFit {
        pilot,
        pilot_cv,
        weights: Some(weights),
        adaptive_cv,
        model,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    fn model_with_b(b: Array2<f64>) -> SpcrModel {
        let (p, k) = b.dim();
        SpcrModel {
            gamma0: 0.0,
            gamma: Array1::ones(k),
            a: Array2::eye(p).slice_move(ndarray::s![.., 0..k]),
            b,
            objective: 0.0,
            sweeps_used: 1,
            converged: true,
            trace: vec![],
            x_means: vec![0.0; p],
            x_scales: None,
            warnings: vec![],
        }
    }

    #[test]
    fn reciprocal_weights() {
        let w = adaptive_weights(&model_with_b(array![[1.0], [0.0], [-0.1], [0.5]]));
        assert_eq!(w.get(0, 0), 1.0);
        assert!(w.is_pinned(1, 0));
        assert_eq!(w.get(2, 0), 10.0);
        assert_eq!(w.get(3, 0), 2.0);
    }

    #[test]
    fn weight_validation() {
        assert!(WeightMatrix::new(array![[1.0, f64::INFINITY]]).is_ok());
        assert!(WeightMatrix::new(array![[0.0]]).is_err());
        assert!(WeightMatrix::new(array![[f64::NAN]]).is_err());
    }

    #[test]
    fn null_pilot_passes_through() {
        let d = crate::data::center(
            array![[1.0, 0.5], [2.0, -1.0], [0.0, 2.0], [-3.0, 0.1]],
            array![1.0, 2.0, 0.0, 1.0],
        )
        .unwrap();
        let c = SpcrConfig::new(1).with_lambdas(1e12, 1e12);
        let fit = fit_aspcr(&d, &c, &AdaptiveOptions::Fixed).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.model, fit.pilot);
        assert!(fit.weights.is_none());
    }
}
