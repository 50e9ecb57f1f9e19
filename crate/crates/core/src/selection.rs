//! Penalty grids and K-fold cross-validation over `(λβ, λγ)`.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{center, serde_matrix, Dataset, SpcrConfig, SpcrModel};
use crate::error::{Result, SpcrError};
use crate::solver::Problem;

/// Points per penalty grid.
pub const GRID_LEN: usize = 10;
/// `λmin = LAMBDA_MIN_RATIO · λmax`.
pub const LAMBDA_MIN_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum GridSpacing {
    /// Equally spaced on `[λmin, λmax]`.
    #[default]
    Linear,
    /// Equally spaced in `log λ`.
    Log,
}

impl std::str::FromStr for GridSpacing {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "linear" => Ok(Self::Linear),
            "log" => Ok(Self::Log),
            other => Err(format!("unknown grid spacing '{other}' (linear|log)")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LambdaGrid {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub spacing: GridSpacing,
    pub warnings: Vec<String>,
}

/// Build the `(λβ, λγ)` grids from the shrinkage thresholds at the solver's
/// initialization point.
///
/// `λγ,max = 2 max_j |(1-w) Σ_i (y_i - ȳ) x*_ij|` is the smallest `λγ` that
/// zeroes every `γ_j` in the first `γ` pass. `λβ,max` is the analogous
/// `2 max |score_lj| / (ω_lj (1-ζ))` over loadings with finite weight. When a
/// maximum is zero the grid falls back to `[LAMBDA_MIN_RATIO, 1]`.
pub fn lambda_grid(d: &Dataset, c: &SpcrConfig, spacing: GridSpacing) -> Result<LambdaGrid> {
    let prob = Problem::new(d)?;
    lambda_grid_for(&prob, c, spacing)
}

pub fn lambda_grid_for(
    prob: &Problem<'_>,
    c: &SpcrConfig,
    spacing: GridSpacing,
) -> Result<LambdaGrid> {
    let p = prob.data().p();
    let mut probe = c.clone();
    probe.lambda_beta = 1.0;
    probe.lambda_gamma = 1.0;
    probe.validate(p)?;
    let state = prob.initial_state(&probe);

    let gamma_max = (0..c.k)
        .map(|j| prob.gamma_score(&state, j, c).abs())
        .fold(0.0, f64::max)
        * 2.0;
    let mut beta_max = 0.0f64;
    for j in 0..c.k {
        for l in 0..p {
            let w = c.weight(l, j);
            if w.is_infinite() {
                continue;
            }
            let t = 2.0 * prob.beta_score(&state, l, j, c).abs() / (w * (1.0 - c.zeta));
            beta_max = beta_max.max(t);
        }
    }

    let mut warnings = Vec::new();
    let mut build = |max: f64, name: &str| {
        if max > 0.0 && max.is_finite() {
            spaced(max * LAMBDA_MIN_RATIO, max, spacing)
        } else {
            warnings.push(format!("{name} threshold is zero; using the unit grid"));
            spaced(LAMBDA_MIN_RATIO, 1.0, spacing)
        }
    };
    let beta = build(beta_max, "lambda_beta");
    let gamma = build(gamma_max, "lambda_gamma");
    Ok(LambdaGrid {
        beta,
        gamma,
        spacing,
        warnings,
    })
}

fn spaced(lo: f64, hi: f64, spacing: GridSpacing) -> Vec<f64> {
    let steps = (GRID_LEN - 1) as f64;
    let mut g: Vec<f64> = (0..GRID_LEN)
        .map(|i| {
            let t = i as f64 / steps;
            match spacing {
                GridSpacing::Linear => lo + t * (hi - lo),
                GridSpacing::Log => (lo.ln() + t * (hi.ln() - lo.ln())).exp(),
            }
        })
        .collect();
    // pin the endpoints exactly
    g[0] = lo;
    g[GRID_LEN - 1] = hi;
    g
}

/// Assignment of samples to `folds` folds (ids `0..folds`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// Seeded random permutation, then round-robin.
    pub fn new(n: usize, folds: usize, seed: u64) -> Result<Self> {
        if folds < 2 || folds > n {
            return Err(SpcrError::InvalidConfig(format!(
                "need 2 <= folds <= n, got folds = {folds}, n = {n}"
            )));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut assignment = vec![0; n];
        for (i, &s) in perm.iter().enumerate() {
            assignment[s] = i % folds;
        }
        Ok(Self {
            folds,
            assignment,
            seed,
        })
    }

    pub fn from_assignment(assignment: Vec<usize>, folds: usize) -> Result<Self> {
        if folds < 2 || assignment.iter().any(|&f| f >= folds) {
            return Err(SpcrError::InvalidConfig(
                "fold ids must lie in 0..folds".into(),
            ));
        }
        Ok(Self {
            folds,
            assignment,
            seed: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// (training rows, held-out rows) of one fold.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.assignment.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

/// Cross-validation surface over the `10 × 10` grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvResult {
    pub lambda_beta_grid: Vec<f64>,
    pub lambda_gamma_grid: Vec<f64>,
    pub spacing: GridSpacing,
    /// `cv_error[[b, g]]`: mean over folds of the held-out sum of squared
    /// prediction errors at `(λβ_b, λγ_g)`.
    #[serde(with = "serde_matrix")]
    pub cv_error: Array2<f64>,
    /// Cells where some fold fit did not converge (or failed); never selected
    /// unless every cell is flagged.
    pub flagged: Vec<Vec<bool>>,
    pub best_beta_index: usize,
    pub best_gamma_index: usize,
    /// Refit on all data at the selected cell.
    pub best_model: SpcrModel,
    pub folds: usize,
    pub warnings: Vec<String>,
}

impl CvResult {
    pub fn best_lambda_beta(&self) -> f64 {
        self.lambda_beta_grid[self.best_beta_index]
    }

    pub fn best_lambda_gamma(&self) -> f64 {
        self.lambda_gamma_grid[self.best_gamma_index]
    }

    pub fn best_error(&self) -> f64 {
        self.cv_error[[self.best_beta_index, self.best_gamma_index]]
    }
}

struct Fold {
    train: Dataset,
    test_x: Array2<f64>,
    test_y: Array1<f64>,
}

fn make_folds(d: &Dataset, plan: &FoldPlan) -> Result<Vec<Fold>> {
    if plan.len() != d.n() {
        return Err(SpcrError::Dimension(format!(
            "fold plan covers {} samples, dataset has {}",
            plan.len(),
            d.n()
        )));
    }
    (0..plan.folds)
        .map(|f| {
            let (train_idx, test_idx) = plan.split(f);
            let (tx, ty) = d.rows(&train_idx);
            let (test_x, test_y) = d.rows(&test_idx);
            Ok(Fold {
                train: center(tx, ty)?,
                test_x,
                test_y,
            })
        })
        .collect()
}

/// K-fold CV on the grid from [`lambda_grid`].
pub fn cross_validate(
    d: &Dataset,
    c: &SpcrConfig,
    plan: &FoldPlan,
    spacing: GridSpacing,
) -> Result<CvResult> {
    let full = Problem::new(d)?;
    let grid = lambda_grid_for(&full, c, spacing)?;
    cross_validate_grid(d, &full, c, plan, grid)
}

/// K-fold CV on a caller-supplied grid. Held-out rows are centered with the
/// training fold's means; every cell cold-starts.
pub fn cross_validate_grid(
    d: &Dataset,
    full: &Problem<'_>,
    c: &SpcrConfig,
    plan: &FoldPlan,
    grid: LambdaGrid,
) -> Result<CvResult> {
    let probe = c.clone().with_lambdas(1.0, 1.0);
    probe.validate(d.p())?;
    let folds = make_folds(d, plan)?;
    let problems: Vec<Problem<'_>> = folds
        .iter()
        .map(|f| Problem::new(&f.train))
        .collect::<Result<_>>()?;

    let nb = grid.beta.len();
    let ng = grid.gamma.len();
    let cells: Vec<(f64, bool)> = (0..nb * ng)
        .into_par_iter()
        .map(|cell| {
            let cfg = c
                .clone()
                .with_lambdas(grid.beta[cell / ng], grid.gamma[cell % ng]);
            let mut total = 0.0;
            let mut flagged = false;
            for (fold, prob) in folds.iter().zip(&problems) {
                match prob.fit(&cfg) {
                    Ok(m) => {
                        flagged |= !m.converged;
                        let pred = m.predict(fold.test_x.view());
                        total += (&fold.test_y - &pred).mapv(|e| e * e).sum();
                    }
                    Err(_) => {
                        flagged = true;
                        total = f64::NAN;
                    }
                }
            }
            (total / plan.folds as f64, flagged)
        })
        .collect();

    let mut cv_error = Array2::zeros((nb, ng));
    let mut flagged = vec![vec![false; ng]; nb];
    for (cell, (err, flag)) in cells.into_iter().enumerate() {
        cv_error[[cell / ng, cell % ng]] = err;
        flagged[cell / ng][cell % ng] = flag;
    }

    let mut warnings = grid.warnings.clone();
    let (bi, gi) = match select_cell(&cv_error, &flagged, true) {
        Some(best) => best,
        None => {
            warnings.push("every cell was flagged; selecting among all cells".into());
            select_cell(&cv_error, &flagged, false).ok_or_else(|| {
                SpcrError::InvalidConfig("cross-validation produced no finite error".into())
            })?
        }
    };
    let best_cfg = c.clone().with_lambdas(grid.beta[bi], grid.gamma[gi]);
    let best_model = full.fit(&best_cfg)?;
    Ok(CvResult {
        lambda_beta_grid: grid.beta,
        lambda_gamma_grid: grid.gamma,
        spacing: grid.spacing,
        cv_error,
        flagged,
        best_beta_index: bi,
        best_gamma_index: gi,
        best_model,
        folds: plan.folds,
        warnings,
    })
}

/// Argmin of the CV surface. Ties go to the larger `λβ`, then the larger `λγ`.
fn select_cell(
    err: &Array2<f64>,
    flagged: &[Vec<bool>],
    skip_flagged: bool,
) -> Option<(usize, usize)> {
    let (nb, ng) = err.dim();
    let mut best: Option<(usize, usize)> = None;
    for b in (0..nb).rev() {
        for g in (0..ng).rev() {
            let e = err[[b, g]];
            if !e.is_finite() || (skip_flagged && flagged[b][g]) {
                continue;
            }
            if best.is_none_or(|(bb, bg)| e < err[[bb, bg]]) {
                best = Some((b, g));
            }
        }
    }
    best
}

/// Pick `ζ` from `candidates` by the best CV error of each.
pub fn select_zeta(
    d: &Dataset,
    c: &SpcrConfig,
    plan: &FoldPlan,
    spacing: GridSpacing,
    candidates: &[f64],
) -> Result<(f64, CvResult)> {
    let mut best: Option<(f64, CvResult)> = None;
    for &zeta in candidates {
        let mut cz = c.clone();
        cz.zeta = zeta;
        let cv = cross_validate(d, &cz, plan, spacing)?;
        if best
            .as_ref()
            .is_none_or(|(_, b)| cv.best_error() < b.best_error())
        {
            best = Some((zeta, cv));
        }
    }
    best.ok_or_else(|| SpcrError::InvalidConfig("no zeta candidates".into()))
}

/// The `ζ` candidates used for real-data runs.
pub const ZETA_CANDIDATES: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn grid_shape() {
        for spacing in [GridSpacing::Linear, GridSpacing::Log] {
            let g = spaced(0.01, 10.0, spacing);
            assert_eq!(g.len(), GRID_LEN);
            assert!(g.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(g[0], 0.01);
            assert_eq!(g[9], 10.0);
        }
        let lin = spaced(0.0, 9.0, GridSpacing::Linear);
        assert!((lin[3] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn folds_are_balanced_and_seeded() {
        let plan = FoldPlan::new(23, 5, 7).unwrap();
        let mut sizes = [0usize; 5];
        for &f in &plan.assignment {
            sizes[f] += 1;
        }
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert_eq!(plan, FoldPlan::new(23, 5, 7).unwrap());
        assert_ne!(plan, FoldPlan::new(23, 5, 8).unwrap());
        assert!(FoldPlan::new(3, 1, 0).is_err());
        assert!(FoldPlan::new(3, 4, 0).is_err());
    }

    #[test]
    fn tie_break_prefers_sparser_cells() {
        let err = Array2::from_elem((3, 3), 1.0);
        let flags = vec![vec![false; 3]; 3];
        assert_eq!(select_cell(&err, &flags, true), Some((2, 2)));
        let mut err = array![[0.5, 1.0, 0.5], [1.0, 1.0, 1.0], [0.5, 2.0, 3.0]];
        let mut flags = vec![vec![false; 3]; 3];
        assert_eq!(select_cell(&err, &flags, true), Some((2, 0)));
        flags[2][0] = true;
        assert_eq!(select_cell(&err, &flags, true), Some((0, 2)));
        err[[0, 2]] = f64::NAN;
        assert_eq!(select_cell(&err, &flags, true), Some((0, 0)));
    }
}
