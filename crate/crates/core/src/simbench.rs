//! Synthetic cases 1a–3b, Monte Carlo replications and their metrics.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::{fit_aspcr, AdaptiveOptions};
use crate::baselines::pcr_cv;
use crate::data::{composite_coefficients, Dataset, SpcrConfig, SpcrModel};
use crate::error::{Result, SpcrError};
use crate::linalg::cholesky;
use crate::reference::{lookup, RefValue};
use crate::rng::{NormalRng, GENERATOR};
use crate::selection::{cross_validate, FoldPlan, GridSpacing};

/// Samples in every test pool.
pub const TEST_POOL: usize = 1000;
/// `|ξ̂_j|` at or below this counts as zero.
pub const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseId {
    #[serde(rename = "1a")]
    C1a,
    #[serde(rename = "1b")]
    C1b,
    #[serde(rename = "2")]
    C2,
    #[serde(rename = "3a")]
    C3a,
    #[serde(rename = "3b")]
    C3b,
}

impl CaseId {
    pub const ALL: [CaseId; 5] = [
        CaseId::C1a,
        CaseId::C1b,
        CaseId::C2,
        CaseId::C3a,
        CaseId::C3b,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::C1a => "1a",
            CaseId::C1b => "1b",
            CaseId::C2 => "2",
            CaseId::C3a => "3a",
            CaseId::C3b => "3b",
        }
    }

    pub fn p(self) -> usize {
        match self {
            CaseId::C1a | CaseId::C1b => 10,
            CaseId::C2 => 20,
            CaseId::C3a | CaseId::C3b => 30,
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = SpcrError;

    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| SpcrError::UnknownCase(s.to_string()))
    }
}

const NU1: [f64; 9] = [-1.0, 0.0, 1.0, 1.0, 0.0, -1.0, -1.0, 0.0, 1.0];
const NU2_SPARSE: [f64; 6] = [1.0, 0.0, -1.0, -1.0, 0.0, 1.0];

fn ar1_block(cov: &mut Array2<f64>, start: usize, len: usize) {
    for i in 0..len {
        for j in 0..len {
            cov[[start + i, start + j]] = 0.9f64.powi((i as i32 - j as i32).abs());
        }
    }
}

/// One simulation setting with its generative model `y = xᵀξ + σε`.
#[derive(Debug, Clone)]
pub struct SimCase {
    pub id: CaseId,
    pub n: usize,
    pub sigma: f64,
    pub true_xi: Array1<f64>,
    pub cov: Array2<f64>,
    chol: Array2<f64>,
}

impl SimCase {
    pub fn new(id: CaseId, n: usize, sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(SpcrError::InvalidConfig(format!(
                "sigma must be >= 0, got {sigma}"
            )));
        }
        let p = id.p();
        let mut cov = Array2::eye(p);
        let mut xi = Array1::zeros(p);
        match id {
            CaseId::C1a => {
                xi[0] = 2.0;
                xi[1] = 1.0;
            }
            CaseId::C1b => {
                cov[[1, 1]] = 9.0;
                xi[0] = 8.0;
                xi[1] = 1.0;
            }
            CaseId::C2 => {
                ar1_block(&mut cov, 0, 9);
                for (i, v) in NU1.iter().enumerate() {
                    xi[i] = 4.0 * v;
                }
            }
            CaseId::C3a | CaseId::C3b => {
                ar1_block(&mut cov, 0, 9);
                ar1_block(&mut cov, 9, 6);
                for (i, v) in NU1.iter().enumerate() {
                    xi[i] = 4.0 * v;
                }
                for i in 0..6 {
                    xi[9 + i] = if id == CaseId::C3a {
                        4.0
                    } else {
                        4.0 * NU2_SPARSE[i]
                    };
                }
            }
        }
        let chol = cholesky(cov.view())?;
        Ok(Self {
            id,
            n,
            sigma,
            true_xi: xi,
            cov,
            chol,
        })
    }

    pub fn p(&self) -> usize {
        self.id.p()
    }

    pub fn cholesky_factor(&self) -> &Array2<f64> {
        &self.chol
    }

    /// `m` draws of `(x, y)`; each row consumes `p` normals for `x = L z`
    /// followed by one for the noise.
    pub fn sample(&self, m: usize, rng: &mut NormalRng) -> (Array2<f64>, Array1<f64>) {
        let p = self.p();
        let mut x = Array2::zeros((m, p));
        let mut y = Array1::zeros(m);
        let mut z = vec![0.0; p];
        for i in 0..m {
            rng.fill(&mut z);
            for a in 0..p {
                let row = self.chol.row(a);
                x[[i, a]] = row
                    .iter()
                    .zip(&z)
                    .take(a + 1)
                    .fold(0.0, |s, (l, zb)| s + l * zb);
            }
            y[i] = x.row(i).dot(&self.true_xi) + self.sigma * rng.standard_normal();
        }
        (x, y)
    }
}

/// Raw (uncentered) training set of size `n` and a 1000-sample test pool,
/// both drawn from one stream seeded by `seed`.
pub fn make_case(id: CaseId, n: usize, sigma: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let case = SimCase::new(id, n, sigma)?;
    let mut rng = NormalRng::new(seed);
    let (x, y) = case.sample(n, &mut rng);
    let (tx, ty) = case.sample(TEST_POOL, &mut rng);
    Ok((Dataset::new(x, y)?, Dataset::new(tx, ty)?))
}

/// Mean squared prediction error.
pub fn mse(pred: ArrayView1<f64>, truth: ArrayView1<f64>) -> f64 {
    assert_eq!(pred.len(), truth.len(), "prediction length mismatch");
    let n = pred.len() as f64;
    pred.iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n
}

/// `(TPR, TNR)` of the estimated support. TNR is `None` when `xi_true` has no
/// zero entry; TPR is `None` when it has no nonzero entry.
pub fn support_metrics(
    xi_hat: ArrayView1<f64>,
    xi_true: ArrayView1<f64>,
) -> (Option<f64>, Option<f64>) {
    assert_eq!(xi_hat.len(), xi_true.len(), "support length mismatch");
    let (mut pos, mut tp, mut neg, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (h, t) in xi_hat.iter().zip(xi_true) {
        let est = h.abs() > ZERO_TOL;
        if *t != 0.0 {
            pos += 1;
            tp += est as usize;
        } else {
            neg += 1;
            tn += !est as usize;
        }
    }
    let rate = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    (rate(tp, pos), rate(tn, neg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Spcr,
    Aspcr,
    Pcr,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Spcr => "spcr",
            Method::Aspcr => "aspcr",
            Method::Pcr => "pcr",
        }
    }
}

impl FromStr for Method {
    type Err = SpcrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spcr" => Ok(Method::Spcr),
            "aspcr" => Ok(Method::Aspcr),
            "pcr" => Ok(Method::Pcr),
            _ => Err(SpcrError::UnknownMethod(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preprocess {
    Center,
    Standardize,
}

impl Preprocess {
    pub fn as_str(self) -> &'static str {
        match self {
            Preprocess::Center => "center",
            Preprocess::Standardize => "standardize",
        }
    }
}

/// One `(case, k, n, σ)` cell of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub case: CaseId,
    pub k: usize,
    pub n: usize,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub specs: Vec<BenchSpec>,
    pub methods: Vec<Method>,
    pub replications: usize,
    pub base_seed: u64,
    pub w: f64,
    pub zeta: f64,
    /// Folds for SPCR/aSPCR penalty selection.
    pub folds: usize,
    /// Folds for choosing PCR's `k`.
    pub pcr_folds: usize,
    pub spacing: GridSpacing,
    /// Re-run CV for the adaptive stage instead of reusing the pilot's pair.
    pub reselect: bool,
    /// The first mode is the primary one.
    pub preprocess: Vec<Preprocess>,
    /// Sweep cap for every SPCR/aSPCR fit.
    pub max_sweeps: usize,
}

impl BenchConfig {
    pub fn new(
        specs: Vec<BenchSpec>,
        methods: Vec<Method>,
        replications: usize,
        base_seed: u64,
    ) -> Self {
        Self {
            specs,
            methods,
            replications,
            base_seed,
            w: 0.1,
            zeta: 0.01,
            folds: 5,
            pcr_folds: 10,
            spacing: GridSpacing::Linear,
            reselect: true,
            preprocess: vec![Preprocess::Center],
            max_sweeps: SpcrConfig::new(1).max_sweeps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub case: CaseId,
    pub k: usize,
    pub n: usize,
    pub sigma: f64,
    pub preprocess: Preprocess,
    pub method: Method,
    pub replication: usize,
    pub seed: u64,
    /// `None` when the replication failed; see `error`.
    pub mse: Option<f64>,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub nnz: Option<usize>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; `None` with fewer than two values.
    pub sd: Option<f64>,
}

fn stat(values: impl Iterator<Item = f64>) -> Option<Stat> {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return None;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let sd = (v.len() > 1)
        .then(|| (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt());
    Some(Stat { mean: m, sd })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub case: CaseId,
    pub k: usize,
    pub n: usize,
    pub sigma: f64,
    pub preprocess: Preprocess,
    pub method: Method,
    pub completed: usize,
    pub failed: usize,
    pub not_converged: usize,
    pub mse: Option<Stat>,
    pub tpr: Option<Stat>,
    pub tnr: Option<Stat>,
    pub reference_mse: Option<RefValue>,
    pub reference_tpr: Option<RefValue>,
    pub reference_tnr: Option<RefValue>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub generator: &'static str,
    pub replications: usize,
    pub seeds: Vec<u64>,
    pub config: BenchConfig,
    pub summaries: Vec<MethodSummary>,
    pub records: Vec<ReplicationRecord>,
}

impl BenchReport {
    pub fn summary(
        &self,
        case: CaseId,
        k: usize,
        n: usize,
        sigma: f64,
        method: Method,
    ) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| {
            s.case == case
                && s.k == k
                && s.n == n
                && s.sigma == sigma
                && s.method == method
                && s.preprocess == self.config.preprocess[0]
        })
    }

    /// True when every replication of every method completed and converged.
    pub fn all_converged(&self) -> bool {
        self.records
            .iter()
            .all(|r| r.error.is_none() && r.converged)
    }

    /// Flat per-replication CSV.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| SpcrError::Csv {
            location: "output".into(),
            message: e.to_string(),
        };
        w.write_record([
            "case",
            "k",
            "n",
            "sigma",
            "preprocess",
            "method",
            "replication",
            "seed",
            "mse",
            "tpr",
            "tnr",
            "nnz",
            "converged",
            "error",
        ])
        .map_err(io)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.case.to_string(),
                r.k.to_string(),
                r.n.to_string(),
                r.sigma.to_string(),
                r.preprocess.as_str().to_string(),
                r.method.as_str().to_string(),
                r.replication.to_string(),
                r.seed.to_string(),
                opt(r.mse),
                opt(r.tpr),
                opt(r.tnr),
                r.nnz.map(|v| v.to_string()).unwrap_or_default(),
                r.converged.to_string(),
                r.error.clone().unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| SpcrError::Csv {
            location: "output".into(),
            message: e.to_string(),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Console table: mean (sd) per metric, reference values in brackets.
    pub fn table(&self) -> String {
        fn cell(s: &Option<Stat>, r: &Option<RefValue>) -> String {
            let mut out = match s {
                Some(Stat { mean, sd: Some(sd) }) => format!("{mean:.4e} ({sd:.2e})"),
                Some(Stat { mean, sd: None }) => format!("{mean:.4e}"),
                None => "-".into(),
            };
            if let Some(r) = r {
                out.push_str(&format!(" [{:.3e} ({:.2e})]", r.mean, r.sd));
            }
            out
        }
        let mut t = format!(
            "{:<4} {:>3} {:>4} {:>5} {:<11} {:<6} {:<34} {:<28} {:<28}\n",
            "case", "k", "n", "sigma", "preprocess", "method", "MSE", "TPR", "TNR"
        );
        for s in &self.summaries {
            t.push_str(&format!(
                "{:<4} {:>3} {:>4} {:>5} {:<11} {:<6} {:<34} {:<28} {:<28}",
                s.case.as_str(),
                s.k,
                s.n,
                s.sigma,
                s.preprocess.as_str(),
                s.method.as_str(),
                cell(&s.mse, &s.reference_mse),
                cell(&s.tpr, &s.reference_tpr),
                cell(&s.tnr, &s.reference_tnr),
            ));
            if s.failed > 0 || s.not_converged > 0 {
                t.push_str(&format!(
                    "  failed={} not_converged={}",
                    s.failed, s.not_converged
                ));
            }
            t.push('\n');
        }
        t
    }
}

struct Outcome {
    method: Method,
    result: Result<(f64, Array1<f64>, usize, bool)>,
}

fn score(model: &SpcrModel, test: &Dataset) -> (f64, Array1<f64>, usize, bool) {
    let pred = model.predict(test.x());
    (
        mse(pred.view(), test.y().view()),
        composite_coefficients(model),
        model.nnz(),
        model.converged,
    )
}

fn run_one(cfg: &BenchConfig, spec: &BenchSpec, mode: Preprocess, seed: u64) -> Vec<Outcome> {
    let mut out = Vec::new();
    let data = make_case(spec.case, spec.n, spec.sigma, seed).and_then(|(train, test)| {
        let d = Dataset::preprocess(
            train.x().to_owned(),
            train.y().clone(),
            mode == Preprocess::Standardize,
        )?;
        Ok((d, test))
    });
    let (d, test) = match data {
        Ok(v) => v,
        Err(e) => {
            let msg = e.to_string();
            return cfg
                .methods
                .iter()
                .map(|&m| Outcome {
                    method: m,
                    result: Err(SpcrError::InvalidConfig(msg.clone())),
                })
                .collect();
        }
    };

    let want_spcr = cfg.methods.contains(&Method::Spcr);
    let want_aspcr = cfg.methods.contains(&Method::Aspcr);
    if want_spcr || want_aspcr {
        let mut c = SpcrConfig::new(spec.k);
        c.w = cfg.w;
        c.zeta = cfg.zeta;
        c.seed = seed;
        c.max_sweeps = cfg.max_sweeps;
        let plan = FoldPlan::new(spec.n, cfg.folds, seed);
        if want_aspcr {
            let fit = plan.and_then(|plan| {
                fit_aspcr(
                    &d,
                    &c,
                    &AdaptiveOptions::CrossValidate {
                        plan,
                        spacing: cfg.spacing,
                        reselect: cfg.reselect,
                    },
                )
            });
            match fit {
                Ok(fit) => {
                    // the pilot is the CV-selected SPCR fit
                    let pilot_ok = fit
                        .pilot_cv
                        .as_ref()
                        .is_none_or(|cv| !cv.flagged[cv.best_beta_index][cv.best_gamma_index]);
                    let (a, b, nz, conv) = score(&fit.pilot, &test);
                    if want_spcr {
                        out.push(Outcome {
                            method: Method::Spcr,
                            result: Ok((a, b, nz, conv && pilot_ok)),
                        });
                    }
                    let (a, b, nz, conv) = score(&fit.model, &test);
                    let ada_ok = fit
                        .adaptive_cv
                        .as_ref()
                        .is_none_or(|cv| !cv.flagged[cv.best_beta_index][cv.best_gamma_index]);
                    out.push(Outcome {
                        method: Method::Aspcr,
                        result: Ok((a, b, nz, conv && pilot_ok && ada_ok)),
                    });
                }
                Err(e) => {
                    let msg = e.to_string();
                    for m in [Method::Spcr, Method::Aspcr] {
                        if cfg.methods.contains(&m) {
                            out.push(Outcome {
                                method: m,
                                result: Err(SpcrError::InvalidConfig(msg.clone())),
                            });
                        }
                    }
                }
            }
        } else {
            let res = plan
                .and_then(|plan| cross_validate(&d, &c, &plan, cfg.spacing))
                .map(|cv| {
                    let ok = !cv.flagged[cv.best_beta_index][cv.best_gamma_index];
                    let (a, b, nz, conv) = score(&cv.best_model, &test);
                    (a, b, nz, conv && ok)
                });
            out.push(Outcome {
                method: Method::Spcr,
                result: res,
            });
        }
    }
    if cfg.methods.contains(&Method::Pcr) {
        let res = FoldPlan::new(spec.n, cfg.pcr_folds.min(spec.n), seed)
            .and_then(|plan| pcr_cv(&d, spec.k, &plan))
            .map(|(m, _)| {
                let pred = m.predict(test.x());
                let xi = m.composite();
                let nz = xi.iter().filter(|v| v.abs() > ZERO_TOL).count();
                (mse(pred.view(), test.y().view()), xi, nz, true)
            });
        out.push(Outcome {
            method: Method::Pcr,
            result: res,
        });
    }
    out
}

/// Run every `(spec, preprocess, replication)` with seed `base_seed + r`.
/// Failed replications are recorded with their error and excluded from the
/// summary statistics.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.replications == 0 {
        return Err(SpcrError::InvalidConfig(
            "need at least one replication".into(),
        ));
    }
    if cfg.methods.is_empty() || cfg.preprocess.is_empty() {
        return Err(SpcrError::InvalidConfig(
            "no methods or preprocessing modes requested".into(),
        ));
    }
    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();
    let cfg = BenchConfig {
        methods,
        ..cfg.clone()
    };
    for spec in &cfg.specs {
        if spec.k == 0 || spec.k > spec.case.p() {
            return Err(SpcrError::InvalidConfig(format!(
                "case {} needs 1 <= k <= {}",
                spec.case,
                spec.case.p()
            )));
        }
        SimCase::new(spec.case, spec.n, spec.sigma)?;
    }

    let jobs: Vec<(BenchSpec, Preprocess, usize)> = cfg
        .specs
        .iter()
        .flat_map(|s| {
            cfg.preprocess
                .iter()
                .flat_map(move |&m| (0..cfg.replications).map(move |r| (*s, m, r)))
        })
        .collect();
    let results: Vec<Vec<ReplicationRecord>> = jobs
        .par_iter()
        .map(|&(spec, mode, r)| {
            let seed = cfg.base_seed.wrapping_add(r as u64);
            let case = SimCase::new(spec.case, spec.n, spec.sigma).expect("validated");
            run_one(&cfg, &spec, mode, seed)
                .into_iter()
                .map(|o| {
                    let base = ReplicationRecord {
                        case: spec.case,
                        k: spec.k,
                        n: spec.n,
                        sigma: spec.sigma,
                        preprocess: mode,
                        method: o.method,
                        replication: r,
                        seed,
                        mse: None,
                        tpr: None,
                        tnr: None,
                        nnz: None,
                        converged: false,
                        error: None,
                    };
                    match o.result {
                        Ok((m, xi, nz, conv)) => {
                            let (tpr, tnr) = support_metrics(xi.view(), case.true_xi.view());
                            ReplicationRecord {
                                mse: Some(m),
                                tpr,
                                tnr,
                                nnz: Some(nz),
                                converged: conv,
                                ..base
                            }
                        }
                        Err(e) => ReplicationRecord {
                            error: Some(e.to_string()),
                            ..base
                        },
                    }
                })
                .collect()
        })
        .collect();
    let records: Vec<ReplicationRecord> = results.into_iter().flatten().collect();

    let mut summaries = Vec::new();
    for spec in &cfg.specs {
        let refs = lookup(spec.case.as_str(), spec.k, spec.n, spec.sigma);
        for &mode in &cfg.preprocess {
            for &method in &cfg.methods {
                let rows: Vec<&ReplicationRecord> = records
                    .iter()
                    .filter(|r| {
                        r.case == spec.case
                            && r.k == spec.k
                            && r.n == spec.n
                            && r.sigma == spec.sigma
                            && r.preprocess == mode
                            && r.method == method
                    })
                    .collect();
                let ok: Vec<&&ReplicationRecord> =
                    rows.iter().filter(|r| r.error.is_none()).collect();
                let (rm, rt, rn) = match (refs, method) {
                    (Some(r), Method::Aspcr) => {
                        (Some(r.mse_aspcr), Some(r.tpr_aspcr), Some(r.tnr_aspcr))
                    }
                    (Some(r), Method::Spcr) => {
                        (Some(r.mse_spcr), Some(r.tpr_spcr), Some(r.tnr_spcr))
                    }
                    (Some(r), Method::Pcr) => (Some(r.mse_pcr), None, None),
                    (None, _) => (None, None, None),
                };
                summaries.push(MethodSummary {
                    case: spec.case,
                    k: spec.k,
                    n: spec.n,
                    sigma: spec.sigma,
                    preprocess: mode,
                    method,
                    completed: ok.len(),
                    failed: rows.len() - ok.len(),
                    not_converged: ok.iter().filter(|r| !r.converged).count(),
                    mse: stat(ok.iter().filter_map(|r| r.mse)),
                    tpr: stat(ok.iter().filter_map(|r| r.tpr)),
                    tnr: stat(ok.iter().filter_map(|r| r.tnr)),
                    reference_mse: rm,
                    reference_tpr: rt,
                    reference_tnr: rn,
                });
            }
        }
    }

    Ok(BenchReport {
        generator: GENERATOR,
        replications: cfg.replications,
        seeds: (0..cfg.replications)
            .map(|r| cfg.base_seed.wrapping_add(r as u64))
            .collect(),
        config: cfg,
        summaries,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn case_definitions() {
        let c = SimCase::new(CaseId::C1a, 50, 0.1).unwrap();
        assert_eq!(c.cov, Array2::<f64>::eye(10));
        assert_eq!(
            c.true_xi.to_vec(),
            vec![2.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );

        let c = SimCase::new(CaseId::C1b, 50, 0.1).unwrap();
        assert_eq!(c.cov[[1, 1]], 9.0);
        assert_eq!(c.true_xi[0], 8.0);

        let c = SimCase::new(CaseId::C2, 50, 0.1).unwrap();
        assert_eq!(c.cov[[0, 1]], 0.9);
        assert!((c.cov[[0, 8]] - 0.9f64.powi(8)).abs() < 1e-15);
        for i in 0..9 {
            for j in 9..20 {
                assert_eq!(c.cov[[i, j]], 0.0);
            }
        }
        assert_eq!(c.true_xi.iter().filter(|v| **v != 0.0).count(), 6);

        let a = SimCase::new(CaseId::C3a, 50, 0.1).unwrap();
        let b = SimCase::new(CaseId::C3b, 50, 0.1).unwrap();
        assert_eq!(a.true_xi.slice(ndarray::s![9..15]).to_vec(), vec![4.0; 6]);
        assert_eq!(
            b.true_xi.slice(ndarray::s![9..15]).to_vec(),
            vec![4.0, 0.0, -4.0, -4.0, 0.0, 4.0]
        );
        assert_eq!(a.cov[[9, 10]], 0.9);
        assert_eq!(a.cov[[8, 9]], 0.0);
    }

    #[test]
    fn cholesky_reconstructs_every_cov() {
        for id in CaseId::ALL {
            let c = SimCase::new(id, 10, 1.0).unwrap();
            let l = c.cholesky_factor();
            let err = (&l.dot(&l.t()) - &c.cov)
                .iter()
                .fold(0.0f64, |m, e| m.max(e.abs()));
            assert!(err < 1e-10);
        }
    }

    #[test]
    fn case_ids_round_trip() {
        for id in CaseId::ALL {
            assert_eq!(id.to_string().parse::<CaseId>().unwrap(), id);
        }
        assert!(matches!(
            "4".parse::<CaseId>(),
            Err(SpcrError::UnknownCase(_))
        ));
    }

    #[test]
    fn seeds_control_draws() {
        let (a, ta) = make_case(CaseId::C1a, 20, 0.1, 5).unwrap();
        let (b, tb) = make_case(CaseId::C1a, 20, 0.1, 5).unwrap();
        let (c, _) = make_case(CaseId::C1a, 20, 0.1, 6).unwrap();
        assert_eq!(a.x(), b.x());
        assert_eq!(a.y(), b.y());
        assert_eq!(ta.y(), tb.y());
        assert_eq!(ta.n(), TEST_POOL);
        assert_ne!(a.x(), c.x());
    }

    #[test]
    fn noiseless_response_is_linear() {
        let (d, _) = make_case(CaseId::C2, 30, 0.0, 1).unwrap();
        let case = SimCase::new(CaseId::C2, 30, 0.0).unwrap();
        let r = d.y() - &d.x().dot(&case.true_xi);
        assert!(r.iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn support_examples() {
        let t = array![2.0, 1.0, 0.0];
        assert_eq!(support_metrics(t.view(), t.view()), (Some(1.0), Some(1.0)));
        assert_eq!(
            support_metrics(array![1.0, 0.0, 0.0].view(), t.view()),
            (Some(0.5), Some(1.0))
        );
        let t10 = Array1::from_iter((0..10).map(|i| [2.0, 1.0][..].get(i).copied().unwrap_or(0.0)));
        assert_eq!(
            support_metrics(Array1::zeros(10).view(), t10.view()),
            (Some(0.0), Some(1.0))
        );
        assert_eq!(
            support_metrics(array![1e-13].view(), array![1.0].view()),
            (Some(0.0), None)
        );
    }

    #[test]
    fn mse_of_zero_predictor() {
        let y = array![1.0, -2.0, 3.0];
        assert!((mse(Array1::zeros(3).view(), y.view()) - 14.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_replication_has_no_sd() {
        let spec = BenchSpec {
            case: CaseId::C1a,
            k: 1,
            n: 30,
            sigma: 0.1,
        };
        let report = run_benchmark(&BenchConfig::new(vec![spec], vec![Method::Pcr], 1, 0)).unwrap();
        assert_eq!(report.records.len(), 1);
        let s = &report.summaries[0];
        assert_eq!(s.completed, 1);
        assert!(s.mse.as_ref().unwrap().sd.is_none());
        assert_eq!(report.to_csv().unwrap().lines().count(), 2);
    }
}
