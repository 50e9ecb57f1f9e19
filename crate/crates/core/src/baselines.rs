//! Two-stage baselines: PCA of the centered design and principal component
//! regression on its leading scores.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{center, serde_matrix, serde_vector, Dataset};
use crate::error::{Result, SpcrError};
use crate::linalg::{canonical_sign, jacobi_svd};
use crate::selection::FoldPlan;

/// Thin SVD `X = U D Vᵀ` truncated to the numerical rank `q`.
#[derive(Debug, Clone)]
pub struct PcaDecomposition {
    /// `n × q`, orthonormal columns.
    pub u: Array2<f64>,
    /// Singular values, nonincreasing.
    pub d: Array1<f64>,
    /// `p × q` loadings, each column signed so its largest entry is positive.
    pub v: Array2<f64>,
    pub rank: usize,
}

impl PcaDecomposition {
    /// Scores `X V = U D`.
    pub fn scores(&self) -> Array2<f64> {
        &self.u * &self.d
    }
}

/// PCA of a centered dataset. Singular values at or below
/// `max(n, p) · ε · d₁` are dropped.
pub fn pca(d: &Dataset) -> Result<PcaDecomposition> {
    if !d.is_centered() {
        return Err(SpcrError::InvalidConfig(
            "pca needs a centered dataset".into(),
        ));
    }
    Ok(pca_of(d.x()))
}

fn pca_of(x: ArrayView2<f64>) -> PcaDecomposition {
    let (n, p) = x.dim();
    let svd = jacobi_svd(x);
    let s1 = svd.s.first().copied().unwrap_or(0.0);
    let tol = n.max(p) as f64 * f64::EPSILON * s1;
    let rank = svd.s.iter().take_while(|&&s| s > tol && s > 0.0).count();

    let mut u = Array2::zeros((n, rank));
    let mut v = Array2::zeros((p, rank));
    for j in 0..rank {
        let sign = canonical_sign(svd.v.column(j));
        let sj = svd.s[j];
        v.column_mut(j).assign(&(&svd.v.column(j) * sign));
        u.column_mut(j).assign(&(&svd.w.column(j) * (sign / sj)));
    }
    PcaDecomposition {
        u,
        d: svd.s.slice(ndarray::s![..rank]).to_owned(),
        v,
        rank,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PcrModel {
    pub gamma0: f64,
    /// Regression coefficient of each retained score.
    #[serde(with = "serde_vector")]
    pub coefs: Array1<f64>,
    /// `p × k` loadings `V_k`.
    #[serde(with = "serde_matrix")]
    pub loadings: Array2<f64>,
    pub x_means: Vec<f64>,
    pub x_scales: Option<Vec<f64>>,
}

impl PcrModel {
    pub fn k(&self) -> usize {
        self.coefs.len()
    }

    /// Predictor-space coefficients `V_k · coefs`.
    pub fn composite(&self) -> Array1<f64> {
        self.loadings.dot(&self.coefs)
    }

    pub fn predict_processed(&self, x: ArrayView2<f64>) -> Array1<f64> {
        x.dot(&self.composite()) + self.gamma0
    }

    pub fn predict(&self, x_raw: ArrayView2<f64>) -> Array1<f64> {
        let mut x = &x_raw - &Array1::from(self.x_means.clone());
        if let Some(s) = &self.x_scales {
            x /= &Array1::from(s.clone());
        }
        self.predict_processed(x.view())
    }
}

/// Regress `y` on the top-`k` principal component scores plus an intercept.
pub fn pcr_fit(d: &Dataset, k: usize) -> Result<PcrModel> {
    let decomp = pca(d)?;
    pcr_from_pca(d, &decomp, k)
}

/// PCR reusing a decomposition of `d.x()`.
pub fn pcr_from_pca(d: &Dataset, decomp: &PcaDecomposition, k: usize) -> Result<PcrModel> {
    if k == 0 || k > decomp.rank {
        return Err(SpcrError::InvalidConfig(format!(
            "pcr needs 1 <= k <= rank = {}, got {k}",
            decomp.rank
        )));
    }
    // scores are orthogonal and centered, so each coefficient is a univariate fit
    let coefs = Array1::from_iter((0..k).map(|j| decomp.u.column(j).dot(d.y()) / decomp.d[j]));
    Ok(PcrModel {
        gamma0: d.y().mean().unwrap_or(0.0),
        coefs,
        loadings: decomp.v.slice(ndarray::s![.., ..k]).to_owned(),
        x_means: d.x_means().to_vec(),
        x_scales: d.x_scales().map(|s| s.to_vec()),
    })
}

/// Pick PCR's `k` in `1..=max_k` by K-fold CV (ties to the smaller `k`) and
/// refit on all data. Returns the model and the CV error per `k`.
pub fn pcr_cv(d: &Dataset, max_k: usize, plan: &FoldPlan) -> Result<(PcrModel, Vec<f64>)> {
    let full = pca(d)?;
    let max_k = max_k.min(full.rank);
    if max_k == 0 {
        return Err(SpcrError::InvalidConfig("design has rank zero".into()));
    }
    let mut err = vec![0.0; max_k];
    for f in 0..plan.folds {
        let (train_idx, test_idx) = plan.split(f);
        let (tx, ty) = d.rows(&train_idx);
        let (vx, vy) = d.rows(&test_idx);
        let train = center(tx, ty)?;
        let decomp = pca_of(train.x());
        let xv = (&vx - &train.x_means().view().insert_axis(Axis(0))).dot(&decomp.v);
        let ybar = train.y().mean().unwrap_or(0.0);
        let mut pred = Array1::from_elem(vy.len(), ybar);
        for (kk, e) in err.iter_mut().enumerate() {
            // a fold whose rank falls short keeps its last prediction
            if kk < decomp.rank {
                let coef = decomp.u.column(kk).dot(train.y()) / decomp.d[kk];
                pred.scaled_add(coef, &xv.column(kk));
            }
            *e += (&vy - &pred).mapv(|r| r * r).sum();
        }
    }
    err.iter_mut().for_each(|e| *e /= plan.folds as f64);
    let mut best = 0;
    for (kk, &e) in err.iter().enumerate() {
        if e < err[best] {
            best = kk;
        }
    }
    Ok((pcr_from_pca(d, &full, best + 1)?, err))
}
