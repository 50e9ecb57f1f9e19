//! Blockwise coordinate descent for the SPCR/aSPCR objective.
//!
//! One sweep updates every loading `β_lj` (column-major, `l` fastest), then
//! every `γ_j`, then `A` by an orthogonal Procrustes step, then `γ0`. Each block
//! update is an exact minimizer with the others held fixed, so the objective is
//! nonincreasing sweep over sweep.
//!
//! Two update strategies share the same arithmetic contract:
//!
//! - [`UpdateStrategy::Covariance`] keeps `G B`, `G A` and `G B γ` (with
//!   `G = XᵀX`) cached, so every inner product a coordinate update needs is a
//!   lookup, and a changed coordinate costs `O(p)` to fold back in. Coordinates
//!   that stay at zero cost nothing.
//! - [`UpdateStrategy::Naive`] rebuilds the partial residuals from the raw data
//!   for every coordinate. It exists as a reference path.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SpcrConfig, SpcrModel, CENTER_TOL};
use crate::error::{Result, SpcrError};
use crate::linalg::{canonical_sign, gram, jacobi_svd, polar_factor};

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum UpdateStrategy {
    #[default]
    Covariance,
    Naive,
}

/// `S(z, η) = sign(z) (|z| - η)₊`.
#[inline]
pub fn soft_threshold(z: f64, eta: f64) -> f64 {
    debug_assert!(eta >= 0.0, "negative threshold {eta}");
    if z > eta {
        z - eta
    } else if z < -eta {
        z + eta
    } else {
        0.0
    }
}

/// Borrowed model parameters.
#[derive(Debug, Clone, Copy)]
pub struct ParamsRef<'a> {
    pub gamma0: f64,
    pub gamma: ArrayView1<'a, f64>,
    pub b: ArrayView2<'a, f64>,
    pub a: ArrayView2<'a, f64>,
}

impl SpcrModel {
    pub fn params(&self) -> ParamsRef<'_> {
        ParamsRef {
            gamma0: self.gamma0,
            gamma: self.gamma.view(),
            b: self.b.view(),
            a: self.a.view(),
        }
    }
}

/// The objective evaluated directly from the data:
/// `(1-w)‖y - γ0 - XBγ‖² + w‖X - XBAᵀ‖²_F + λβ(1-ζ)Σω|β| + λβζ‖B‖²_F + λγ‖γ‖₁`.
///
/// A coordinate with infinite weight contributes nothing while it is zero.
pub fn objective(d: &Dataset, params: ParamsRef<'_>, c: &SpcrConfig) -> Result<f64> {
    let (n, p) = d.x().dim();
    let k = params.gamma.len();
    if params.b.dim() != (p, k) || params.a.dim() != (p, k) {
        return Err(SpcrError::Dimension(format!(
            "parameters do not match a {n}x{p} design with k = {k}"
        )));
    }
    let finite = params.gamma0.is_finite()
        && params.gamma.iter().all(|v| v.is_finite())
        && params.b.iter().all(|v| v.is_finite())
        && params.a.iter().all(|v| v.is_finite());
    if !finite {
        return Err(SpcrError::NonFinite("model parameters".into()));
    }
    let x = d.x();
    let xb = x.dot(&params.b);
    let fitted = xb.dot(&params.gamma) + params.gamma0;
    let regression: f64 = d
        .y()
        .iter()
        .zip(fitted.iter())
        .map(|(y, f)| (y - f).powi(2))
        .sum();
    let recon_resid = &x - &xb.dot(&params.a.t());
    let reconstruction: f64 = recon_resid.iter().map(|v| v * v).sum();
    Ok((1.0 - c.w) * regression + c.w * reconstruction + penalty(params.b, params.gamma, c))
}

fn penalty(b: ArrayView2<f64>, gamma: ArrayView1<f64>, c: &SpcrConfig) -> f64 {
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for ((l, j), &v) in b.indexed_iter() {
        if v != 0.0 {
            l1 += c.weight(l, j) * v.abs();
            l2 += v * v;
        }
    }
    let g1: f64 = gamma.iter().map(|g| g.abs()).sum();
    c.lambda_beta * (1.0 - c.zeta) * l1 + c.lambda_beta * c.zeta * l2 + c.lambda_gamma * g1
}

/// Per-dataset quantities shared by every fit on that dataset: the Gram matrix,
/// cross products with `y`, and the right singular vectors used to initialize
/// `B`. Building one `Problem` and fitting many configurations on it avoids
/// recomputing them.
#[derive(Debug, Clone)]
pub struct Problem<'d> {
    data: &'d Dataset,
    gram: Array2<f64>,
    xty: Array1<f64>,
    col_sums: Array1<f64>,
    y_sum: f64,
    y_sq: f64,
    gram_trace: f64,
    right_sv: Array2<f64>,
}

impl<'d> Problem<'d> {
    pub fn new(data: &'d Dataset) -> Result<Self> {
        if !data.is_centered() {
            return Err(SpcrError::InvalidConfig(
                "the solver needs a centered dataset".into(),
            ));
        }
        let x = data.x();
        debug_assert!(x
            .mean_axis(Axis(0))
            .unwrap()
            .iter()
            .all(|m| m.abs() < CENTER_TOL * 1e3));
        let gram = gram(x);
        let xty = x.t().dot(data.y());
        let col_sums = x.sum_axis(Axis(0));
        let y_sum = data.y().sum();
        let y_sq = data.y().dot(data.y());
        let gram_trace = gram.diag().sum();
        let mut right_sv = jacobi_svd(x).v;
        for mut col in right_sv.axis_iter_mut(Axis(1)) {
            let sign = canonical_sign(col.iter());
            col.mapv_inplace(|v| v * sign);
        }
        Ok(Self {
            data,
            gram,
            xty,
            col_sums,
            y_sum,
            y_sq,
            gram_trace,
            right_sv,
        })
    }

    pub fn data(&self) -> &'d Dataset {
        self.data
    }

    pub fn gram(&self) -> ArrayView2<'_, f64> {
        self.gram.view()
    }

    /// Starting point: `B` = top-k right singular vectors of `X` (coordinates
    /// with infinite weight zeroed), `A` = polar factor of that `B`, `γ = 0`,
    /// `γ0 = ȳ`.
    pub fn initial_state(&self, c: &SpcrConfig) -> SolverState {
        let (p, k) = (self.data.p(), c.k);
        let mut b = self.right_sv.slice(s![.., 0..k]).to_owned();
        for ((l, j), v) in b.indexed_iter_mut() {
            if c.weight(l, j).is_infinite() {
                *v = 0.0;
            }
        }
        let a = polar_factor(b.view());
        let orth_error = orthogonality_error(a.view());
        let gb = self.gram.dot(&b);
        let ga = self.gram.dot(&a);
        let n = self.data.n() as f64;
        SolverState {
            gamma0: self.y_sum / n,
            gamma: Array1::zeros(k),
            b,
            a,
            gb,
            ga,
            gxi: Array1::zeros(p),
            work: 0,
            sweep_work: Vec::new(),
            trace: Vec::new(),
            warnings: Vec::new(),
            orth_error,
        }
    }

    /// `Σ_i x_il [(1-w) Y_i γ_j + w Y*_ji]` for the current state, read from
    /// the caches (`Y`, `Y*` are the partial residuals excluding `β_lj`).
    /// `β_lj` is zero after its update exactly when this is at most
    /// `λβ ω_lj (1-ζ) / 2` in magnitude.
    pub fn beta_score(&self, state: &SolverState, l: usize, j: usize, c: &SpcrConfig) -> f64 {
        let w = c.w;
        let gj = state.gamma[j];
        let xr = self.xty[l] - state.gamma0 * self.col_sums[l] - state.gxi[l];
        let xrs = state.ga[[l, j]] - state.gb[[l, j]];
        let curv = (1.0 - w) * gj * gj + w;
        (1.0 - w) * gj * xr + w * xrs + state.b[[l, j]] * self.gram[[l, l]] * curv
    }

    /// `(1-w) Σ_i y**_i x*_ij` for the current state, read from the caches.
    pub fn gamma_score(&self, state: &SolverState, j: usize, c: &SpcrConfig) -> f64 {
        let (xr, xx, _) = self.gamma_products(state, j);
        (1.0 - c.w) * (xr + state.gamma[j] * xx)
    }

    /// (`x*_jᵀ r`, `x*_jᵀ x*_j`, multiply-adds spent) over the nonzero loadings.
    fn gamma_products(&self, state: &SolverState, j: usize) -> (f64, f64, u64) {
        let mut xr = 0.0;
        let mut xx = 0.0;
        let mut work = 0;
        for l in 0..self.data.p() {
            let blj = state.b[[l, j]];
            if blj == 0.0 {
                continue;
            }
            xr += blj * (self.xty[l] - state.gamma0 * self.col_sums[l] - state.gxi[l]);
            xx += blj * state.gb[[l, j]];
            work += 2;
        }
        (xr, xx, work)
    }

    /// Objective from the Gram caches; equal to [`objective`] up to rounding.
    pub fn cached_objective(&self, state: &SolverState, c: &SpcrConfig) -> f64 {
        let n = self.data.n() as f64;
        let g0 = state.gamma0;
        let xi = state.b.dot(&state.gamma);
        let cross: f64 = xi
            .iter()
            .enumerate()
            .map(|(l, v)| (self.xty[l] - g0 * self.col_sums[l]) * v)
            .sum();
        let regression =
            self.y_sq - 2.0 * g0 * self.y_sum + n * g0 * g0 - 2.0 * cross + xi.dot(&state.gxi);
        let mut bga = 0.0;
        let mut bgb = 0.0;
        for ((l, j), &v) in state.b.indexed_iter() {
            if v != 0.0 {
                bga += v * state.ga[[l, j]];
                bgb += v * state.gb[[l, j]];
            }
        }
        let reconstruction = self.gram_trace - 2.0 * bga + bgb;
        (1.0 - c.w) * regression
            + c.w * reconstruction
            + penalty(state.b.view(), state.gamma.view(), c)
    }

    pub fn fit(&self, c: &SpcrConfig) -> Result<SpcrModel> {
        self.fit_with_state(c).map(|(m, _)| m)
    }

    /// Fit and also hand back the final solver state (work counters, caches).
    ///
    /// A component whose `γ_j` ends at zero can be a trap: with `γ_j = 0` the
    /// regression term exerts no pull on `β_j`, and the `λγ` kink keeps `γ_j`
    /// at zero. When the fit from [`Problem::initial_state`] ends that way, it
    /// is rerun from [`Problem::primed_state`], which wins only if it lowers
    /// the objective by more than the stopping tolerance (a converged run is
    /// never traded for an unconverged one).
    pub fn fit_with_state(&self, c: &SpcrConfig) -> Result<(SpcrModel, SolverState)> {
        c.validate(self.data.p())?;
        let first = self.fit_from(c, self.initial_state(c))?;
        if first.0.gamma.iter().all(|g| *g != 0.0) {
            return Ok(first);
        }
        let primed = self.primed_state(c);
        if primed.gamma.iter().all(|g| *g == 0.0) {
            return Ok(first);
        }
        let margin = c.tol * (1.0 + first.0.objective.abs());
        match self.fit_from(c, primed) {
            Ok(alt)
                if alt.0.objective < first.0.objective - margin
                    && (alt.0.converged || !first.0.converged) =>
            {
                Ok(alt)
            }
            _ => Ok(first),
        }
    }

    /// [`Problem::initial_state`] with `γ` set to the unpenalized least-squares
    /// coefficients of `y` on the initial scores `XB` (orthogonal, so each is
    /// a univariate fit).
    pub fn primed_state(&self, c: &SpcrConfig) -> SolverState {
        let mut state = self.initial_state(c);
        for j in 0..c.k {
            let xy: f64 = (0..self.data.p())
                .map(|l| state.b[[l, j]] * (self.xty[l] - state.gamma0 * self.col_sums[l]))
                .sum();
            let xx = state.b.column(j).dot(&state.gb.column(j));
            state.gamma[j] = if xx > 0.0 { xy / xx } else { 0.0 };
        }
        self.sync_caches(&mut state);
        state
    }

    /// Run the sweeps from a caller-built state. The caches are rebuilt
    /// first, so only `gamma0`, `gamma`, `b` and `a` need to be set.
    pub fn fit_from(
        &self,
        c: &SpcrConfig,
        mut state: SolverState,
    ) -> Result<(SpcrModel, SolverState)> {
        let (p, k) = (self.data.p(), c.k);
        c.validate(p)?;
        if state.b.dim() != (p, k) || state.a.dim() != (p, k) || state.gamma.len() != k {
            return Err(SpcrError::Dimension(format!(
                "starting state does not match p = {p}, k = {k}"
            )));
        }
        self.sync_caches(&mut state);
        let eval = |state: &SolverState| match c.strategy {
            UpdateStrategy::Covariance => Ok(self.cached_objective(state, c)),
            UpdateStrategy::Naive => objective(self.data, state.params(), c),
        };
        let mut prev = eval(&state)?;
        state.trace.push(prev);
        let mut converged = false;
        let mut sweeps = 0;

        for sweep in 1..=c.max_sweeps {
            sweeps = sweep;
            let work_before = state.work;
            for j in 0..k {
                for l in 0..p {
                    if !update_beta(&mut state, l, j, self, c).is_finite() {
                        return Err(SpcrError::Diverged {
                            block: "beta",
                            sweep,
                        });
                    }
                }
            }
            for j in 0..k {
                if !update_gamma(&mut state, j, self, c).is_finite() {
                    return Err(SpcrError::Diverged {
                        block: "gamma",
                        sweep,
                    });
                }
            }
            self.step_a(&mut state, c);
            if state.a.iter().any(|v| !v.is_finite()) {
                return Err(SpcrError::Diverged { block: "A", sweep });
            }
            state.gamma0 = update_gamma0(&state, self, c.strategy);
            if !state.gamma0.is_finite() {
                return Err(SpcrError::Diverged {
                    block: "gamma0",
                    sweep,
                });
            }
            let cur = eval(&state).map_err(|_| SpcrError::Diverged {
                block: "objective",
                sweep,
            })?;
            if !cur.is_finite() {
                return Err(SpcrError::Diverged {
                    block: "objective",
                    sweep,
                });
            }
            state.trace.push(cur);
            state.sweep_work.push(state.work - work_before);
            if (cur - prev).abs() <= c.tol * (1.0 + prev.abs()) {
                converged = true;
                break;
            }
            prev = cur;
        }

        let mut model = SpcrModel {
            gamma0: state.gamma0,
            gamma: state.gamma.clone(),
            b: state.b.clone(),
            a: state.a.clone(),
            objective: 0.0,
            sweeps_used: sweeps,
            converged,
            trace: state.trace.clone(),
            x_means: self.data.x_means().to_vec(),
            x_scales: self.data.x_scales().map(|s| s.to_vec()),
            warnings: state.warnings.clone(),
        };
        canonicalize(&mut model);
        model.objective = objective(self.data, model.params(), c)?;
        Ok((model, state))
    }

    /// Procrustes step on the state; refreshes the Gram caches from scratch.
    fn step_a(&self, state: &mut SolverState, c: &SpcrConfig) {
        match c.strategy {
            UpdateStrategy::Covariance => {
                state.a = polar_factor(state.gb.view());
                state.ga = self.gram.dot(&state.a);
                self.refresh_caches(state);
            }
            UpdateStrategy::Naive => {
                state.a = update_a(self.data, state.b.view());
            }
        }
        state.orth_error = state.orth_error.max(orthogonality_error(state.a.view()));
    }

    /// Recompute every cache from the state's parameters. Needed after
    /// assigning `b`, `a` or `gamma` directly.
    pub fn sync_caches(&self, state: &mut SolverState) {
        state.gb = self.gram.dot(&state.b);
        state.ga = self.gram.dot(&state.a);
        state.gxi = state.gb.dot(&state.gamma);
    }

    /// Rebuild `G B` and `G B γ` from the nonzero loadings.
    fn refresh_caches(&self, state: &mut SolverState) {
        let (p, k) = state.b.dim();
        state.gb.fill(0.0);
        state.gxi.fill(0.0);
        for j in 0..k {
            for l in 0..p {
                let blj = state.b[[l, j]];
                if blj == 0.0 {
                    continue;
                }
                let g = self.gram.row(l);
                state.gb.column_mut(j).scaled_add(blj, &g);
                state.work += p as u64;
            }
            let gj = state.gamma[j];
            if gj != 0.0 {
                let col = state.gb.column(j).to_owned();
                state.gxi.scaled_add(gj, &col);
                state.work += p as u64;
            }
        }
    }
}

/// `‖AᵀA - I‖_max`.
pub fn orthogonality_error(a: ArrayView2<f64>) -> f64 {
    let ata = a.t().dot(&a);
    ata.indexed_iter()
        .map(|((i, j), v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max)
}

/// Convenience wrapper: build the [`Problem`] and fit once.
pub fn fit(d: &Dataset, c: &SpcrConfig) -> Result<SpcrModel> {
    Problem::new(d)?.fit(c)
}

/// Flip `(b_j, a_j, γ_j)` so the largest-magnitude loading of `b_j` is positive.
fn canonicalize(model: &mut SpcrModel) {
    for j in 0..model.k() {
        if canonical_sign(model.b.column(j).iter()) < 0.0 {
            model.b.column_mut(j).mapv_inplace(|v| -v);
            model.a.column_mut(j).mapv_inplace(|v| -v);
            model.gamma[j] = -model.gamma[j];
        }
    }
}

/// Mutable solver state: parameters plus the covariance-update caches.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub gamma0: f64,
    pub gamma: Array1<f64>,
    pub b: Array2<f64>,
    pub a: Array2<f64>,
    /// `G B`
    gb: Array2<f64>,
    /// `G A`
    ga: Array2<f64>,
    /// `G B γ`
    gxi: Array1<f64>,
    work: u64,
    sweep_work: Vec<u64>,
    /// Largest `‖AᵀA - I‖_max` seen after any `A` update.
    orth_error: f64,
    trace: Vec<f64>,
    warnings: Vec<String>,
}

impl SolverState {
    pub fn params(&self) -> ParamsRef<'_> {
        ParamsRef {
            gamma0: self.gamma0,
            gamma: self.gamma.view(),
            b: self.b.view(),
            a: self.a.view(),
        }
    }

    /// Objective at initialization followed by one value per sweep.
    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    /// Total multiply-adds spent on cache maintenance.
    pub fn multiply_adds(&self) -> u64 {
        self.work
    }

    /// Cache-maintenance multiply-adds of each completed sweep.
    pub fn sweep_work(&self) -> &[u64] {
        &self.sweep_work
    }

    /// Largest `‖AᵀA - I‖_max` over the initial `A` and every `A` update.
    pub fn max_orthogonality_error(&self) -> f64 {
        self.orth_error
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn warn(&mut self, msg: String) {
        if !self.warnings.contains(&msg) {
            self.warnings.push(msg);
        }
    }

    /// Residuals rebuilt from scratch for the current parameters.
    pub fn residuals(&self, d: &Dataset) -> Residuals {
        let x = d.x();
        let x_star = x.dot(&self.b);
        let y_star = x.dot(&self.a);
        let r = d.y() - &x_star.dot(&self.gamma) - self.gamma0;
        let r_star = &y_star - &x_star;
        Residuals {
            r,
            r_star,
            x_star,
            y_star,
        }
    }

    /// Largest absolute gap between the cached inner products and the same
    /// quantities recomputed from the residuals. Only meaningful for the
    /// covariance strategy.
    pub fn cache_deviation(&self, prob: &Problem<'_>) -> f64 {
        let res = self.residuals(prob.data);
        let x = prob.data.x();
        let (p, k) = self.b.dim();
        let xr = x.t().dot(&res.r);
        let xrs = x.t().dot(&res.r_star);
        let mut dev = 0.0f64;
        for l in 0..p {
            let cached = prob.xty[l] - self.gamma0 * prob.col_sums[l] - self.gxi[l];
            dev = dev.max((cached - xr[l]).abs());
            for j in 0..k {
                let cached = self.ga[[l, j]] - self.gb[[l, j]];
                dev = dev.max((cached - xrs[[l, j]]).abs());
            }
        }
        for j in 0..k {
            let (cxr, cxx, _) = prob.gamma_products(self, j);
            let xs = res.x_star.column(j);
            dev = dev.max((cxr - xs.dot(&res.r)).abs());
            dev = dev.max((cxx - xs.dot(&xs)).abs());
        }
        dev
    }
}

/// Residual vectors: `r` (n), `r*` and `x*`, `y*` (n × k, one column per component).
#[derive(Debug, Clone)]
pub struct Residuals {
    pub r: Array1<f64>,
    pub r_star: Array2<f64>,
    pub x_star: Array2<f64>,
    pub y_star: Array2<f64>,
}

/// The single coordinate that changed since the caches were last consistent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coordinate {
    Beta { l: usize, j: usize, old: f64 },
    Gamma { j: usize, old: f64 },
    Gamma0 { old: f64 },
}

/// Fold one coordinate change into the Gram caches.
///
/// A loading change `δ` adds `δ G_{·l}` to column `j` of `G B` and `γ_j δ G_{·l}`
/// to `G B γ`; a `γ_j` change adds `δ (G B)_{·j}` to `G B γ`. `γ0` enters the
/// inner products only through `Σ_i x_il`, which is not cached. Nothing is done
/// when the value did not move, in particular when it stayed at zero.
pub fn fast_residual_refresh(state: &mut SolverState, prob: &Problem<'_>, changed: Coordinate) {
    let p = state.b.nrows();
    match changed {
        Coordinate::Beta { l, j, old } => {
            let delta = state.b[[l, j]] - old;
            if delta == 0.0 {
                return;
            }
            let g = prob.gram.row(l);
            let gj = state.gamma[j];
            state.gb.column_mut(j).scaled_add(delta, &g);
            if gj != 0.0 {
                state.gxi.scaled_add(gj * delta, &g);
                state.work += p as u64;
            }
            state.work += p as u64;
        }
        Coordinate::Gamma { j, old } => {
            let delta = state.gamma[j] - old;
            if delta == 0.0 {
                return;
            }
            let col = state.gb.column(j);
            state.gxi.scaled_add(delta, &col);
            state.work += p as u64;
        }
        Coordinate::Gamma0 { .. } => {}
    }
}

/// Coordinate update of `β_lj`; returns the new value, which is also stored.
pub fn update_beta(
    state: &mut SolverState,
    l: usize,
    j: usize,
    prob: &Problem<'_>,
    c: &SpcrConfig,
) -> f64 {
    let old = state.b[[l, j]];
    let weight = c.weight(l, j);
    let new = if weight.is_infinite() {
        0.0
    } else {
        let w = c.w;
        let gj = state.gamma[j];
        let (z, sq) = match c.strategy {
            UpdateStrategy::Covariance => (prob.beta_score(state, l, j, c), prob.gram[[l, l]]),
            UpdateStrategy::Naive => naive_beta_score(state, l, j, prob.data, w),
        };
        let denom = ((1.0 - w) * gj * gj + w) * sq + c.lambda_beta * c.zeta;
        if denom <= 0.0 {
            state.warn(format!(
                "loading ({l}, {j}) skipped: zero curvature (predictor column {l} is identically zero)"
            ));
            return old;
        }
        soft_threshold(z, c.lambda_beta * weight * (1.0 - c.zeta) / 2.0) / denom
    };
    state.b[[l, j]] = new;
    if c.strategy == UpdateStrategy::Covariance {
        fast_residual_refresh(state, prob, Coordinate::Beta { l, j, old });
    }
    new
}

/// `(Σ_i x_il [(1-w) Y_i γ_j + w Y*_ji], Σ_i x_il²)` straight from the data.
fn naive_beta_score(state: &SolverState, l: usize, j: usize, d: &Dataset, w: f64) -> (f64, f64) {
    let x = d.x();
    let y = d.y();
    let (n, p) = x.dim();
    let k = state.gamma.len();
    let mut num = 0.0;
    let mut sq = 0.0;
    for i in 0..n {
        let mut fitted = 0.0;
        for jj in 0..k {
            for ll in 0..p {
                if ll == l && jj == j {
                    continue;
                }
                fitted += state.gamma[jj] * state.b[[ll, jj]] * x[[i, ll]];
            }
        }
        let big_y = y[i] - state.gamma0 - fitted;
        let mut y_star = 0.0;
        let mut others = 0.0;
        for ll in 0..p {
            y_star += x[[i, ll]] * state.a[[ll, j]];
            if ll != l {
                others += state.b[[ll, j]] * x[[i, ll]];
            }
        }
        let big_y_star = y_star - others;
        let xil = x[[i, l]];
        num += xil * ((1.0 - w) * big_y * state.gamma[j] + w * big_y_star);
        sq += xil * xil;
    }
    (num, sq)
}

/// Coordinate update of `γ_j`; returns the new value, which is also stored.
/// A dead component (`Xβ_j = 0`) gets `γ_j = 0`.
pub fn update_gamma(state: &mut SolverState, j: usize, prob: &Problem<'_>, c: &SpcrConfig) -> f64 {
    let old = state.gamma[j];
    let (num, xx) = match c.strategy {
        UpdateStrategy::Covariance => {
            let (xr, xx, work) = prob.gamma_products(state, j);
            state.work += work;
            ((1.0 - c.w) * (xr + old * xx), xx)
        }
        UpdateStrategy::Naive => naive_gamma_score(state, j, prob.data, c.w),
    };
    let new = if xx <= 0.0 {
        0.0
    } else {
        soft_threshold(num, c.lambda_gamma / 2.0) / ((1.0 - c.w) * xx)
    };
    state.gamma[j] = new;
    if c.strategy == UpdateStrategy::Covariance {
        fast_residual_refresh(state, prob, Coordinate::Gamma { j, old });
    }
    new
}

fn naive_gamma_score(state: &SolverState, j: usize, d: &Dataset, w: f64) -> (f64, f64) {
    let x_star = d.x().dot(&state.b);
    let k = state.gamma.len();
    let mut num = 0.0;
    let mut xx = 0.0;
    for (i, row) in x_star.outer_iter().enumerate() {
        let mut y2 = d.y()[i] - state.gamma0;
        for m in 0..k {
            if m != j {
                y2 -= state.gamma[m] * row[m];
            }
        }
        num += y2 * row[j];
        xx += row[j] * row[j];
    }
    ((1.0 - w) * num, xx)
}

/// `A = U Vᵀ` where `(XᵀX) B = U D Vᵀ`: the column-orthonormal `A` minimizing
/// the reconstruction loss for fixed `B`.
pub fn update_a(d: &Dataset, b: ArrayView2<f64>) -> Array2<f64> {
    let x = d.x();
    let m = x.t().dot(&x.dot(&b));
    polar_factor(m.view())
}

/// `γ0 = (1/n) Σ_i (y_i - x_iᵀ B γ)`.
pub fn update_gamma0(state: &SolverState, prob: &Problem<'_>, strategy: UpdateStrategy) -> f64 {
    let n = prob.data.n() as f64;
    match strategy {
        UpdateStrategy::Covariance => {
            let xi = state.b.dot(&state.gamma);
            (prob.y_sum - prob.col_sums.dot(&xi)) / n
        }
        UpdateStrategy::Naive => {
            let fitted = prob.data.x().dot(&state.b).dot(&state.gamma);
            (prob.data.y() - &fitted).sum() / n
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::center;
    use ndarray::array;

    #[test]
    fn soft_threshold_branches() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(1.0, 1.0), 0.0);
    }

    fn toy() -> Dataset {
        center(
            array![
                [1.0, 2.0],
                [2.0, 1.0],
                [4.0, 5.0],
                [0.5, -1.0],
                [3.0, 3.5],
                [-1.0, 0.0]
            ],
            array![1.0, 0.0, 3.0, -1.0, 2.0, -0.5],
        )
        .unwrap()
    }

    #[test]
    fn objective_at_zero_parameters() {
        let d = toy();
        let c = SpcrConfig::new(1).with_lambdas(3.0, 5.0);
        let zero1 = Array1::zeros(1);
        let zero2 = Array2::zeros((2, 1));
        let a = array![[1.0], [0.0]];
        let val = objective(
            &d,
            ParamsRef {
                gamma0: 0.0,
                gamma: zero1.view(),
                b: zero2.view(),
                a: a.view(),
            },
            &c,
        )
        .unwrap();
        let y2: f64 = d.y().iter().map(|v| v * v).sum();
        let x2: f64 = d.x().iter().map(|v| v * v).sum();
        assert!((val - (0.9 * y2 + 0.1 * x2)).abs() < 1e-12);
    }

    #[test]
    fn uncentered_dataset_is_rejected() {
        let d = Dataset::new(array![[1.0], [2.0]], array![1.0, 2.0]).unwrap();
        assert!(Problem::new(&d).is_err());
    }

    #[test]
    fn gamma0_with_zero_gamma_is_mean() {
        let d = center(array![[1.0], [2.0], [4.0]], array![1.0, 2.0, 3.0]).unwrap();
        let prob = Problem::new(&d).unwrap();
        let st = prob.initial_state(&SpcrConfig::new(1));
        assert!((update_gamma0(&st, &prob, UpdateStrategy::Covariance) - 2.0).abs() < 1e-15);
        assert!((update_gamma0(&st, &prob, UpdateStrategy::Naive) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn dead_component_has_zero_gamma() {
        let d = toy();
        let prob = Problem::new(&d).unwrap();
        let c = SpcrConfig::new(1).with_lambdas(0.01, 0.01);
        let mut st = prob.initial_state(&c);
        st.b.fill(0.0);
        prob.refresh_caches(&mut st);
        st.gamma[0] = 1.5;
        prob.refresh_caches(&mut st);
        assert_eq!(update_gamma(&mut st, 0, &prob, &c), 0.0);
    }

    #[test]
    fn caches_track_single_updates() {
        let d = toy();
        let prob = Problem::new(&d).unwrap();
        let c = SpcrConfig::new(2).with_lambdas(0.05, 0.05);
        let mut st = prob.initial_state(&c);
        for _ in 0..3 {
            for j in 0..2 {
                for l in 0..2 {
                    update_beta(&mut st, l, j, &prob, &c);
                    assert!(st.cache_deviation(&prob) < 1e-9);
                }
            }
            for j in 0..2 {
                update_gamma(&mut st, j, &prob, &c);
                assert!(st.cache_deviation(&prob) < 1e-9);
            }
            prob.step_a(&mut st, &c);
            st.gamma0 = update_gamma0(&st, &prob, c.strategy);
            assert!(st.cache_deviation(&prob) < 1e-9);
        }
    }

    #[test]
    fn zero_column_is_skipped_with_warning() {
        let d = center(
            array![[1.0, 0.0], [2.0, 0.0], [4.0, 0.0], [0.0, 0.0]],
            array![1.0, 2.0, 4.0, 0.5],
        )
        .unwrap();
        let prob = Problem::new(&d).unwrap();
        let mut c = SpcrConfig::new(1).with_lambdas(0.1, 0.1);
        c.zeta = 0.0;
        let mut st = prob.initial_state(&c);
        let before = st.b[[1, 0]];
        assert_eq!(update_beta(&mut st, 1, 0, &prob, &c), before);
        assert_eq!(st.warnings().len(), 1);
    }

    #[test]
    fn canonical_columns_after_fit() {
        let d = toy();
        let c = SpcrConfig::new(2).with_lambdas(0.1, 0.1);
        let m = fit(&d, &c).unwrap();
        for j in 0..2 {
            assert_eq!(canonical_sign(m.b.column(j).iter()), 1.0);
        }
        let direct = objective(&d, m.params(), &c).unwrap();
        assert_eq!(direct, m.objective);
        assert!((m.trace.last().unwrap() - m.objective).abs() <= 1e-10 * m.objective.abs());
    }
}
