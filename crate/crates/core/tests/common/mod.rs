#![allow(dead_code)]

use ndarray::{Array1, Array2};
use spcr::rng::NormalRng;
use spcr::{center, Dataset};

/// Centered Gaussian design with `y = 2 x₁ + x₂ + noise·ε + 1.5`.
pub fn random_dataset(n: usize, p: usize, seed: u64, noise: f64) -> Dataset {
    let mut rng = NormalRng::new(seed);
    let x = Array2::from_shape_fn((n, p), |_| rng.standard_normal());
    let coef = Array1::from_shape_fn(p, |j| if j < 2 { 2.0 - j as f64 } else { 0.0 });
    let y = x.dot(&coef) + Array1::from_shape_fn(n, |_| noise * rng.standard_normal()) + 1.5;
    center(x, y).unwrap()
}

pub fn max_abs_diff<'a>(
    a: impl IntoIterator<Item = &'a f64>,
    b: impl IntoIterator<Item = &'a f64>,
) -> f64 {
    a.into_iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Best objective over a dense grid for `k = 1`, `p = 2`: `β` on
/// `[-3, 3]²` with spacing `step`, `γ` on the same 1-D grid, `γ0` and `A` at
/// their exact minimizers. The objective is convex in `γ`, so only the grid
/// points bracketing the continuous minimizer need evaluating.
pub fn grid_oracle(d: &Dataset, c: &spcr::SpcrConfig, step: f64) -> f64 {
    assert_eq!((d.p(), c.k), (2, 1));
    let x = d.x();
    let g = x.t().dot(&x);
    let ybar = d.y().mean().unwrap();
    let yc = d.y() - ybar;
    let xy = x.t().dot(&yc);
    let syy = yc.dot(&yc);
    let tr = g[[0, 0]] + g[[1, 1]];
    let (w, lb, lg, zeta) = (c.w, c.lambda_beta, c.lambda_gamma, c.zeta);
    let m = (3.0 / step).round() as i64;
    let at = |i: i64| i as f64 * step;
    let mut best = f64::INFINITY;
    for i1 in -m..=m {
        let b1 = at(i1);
        for i2 in -m..=m {
            let b2 = at(i2);
            let gb0 = g[[0, 0]] * b1 + g[[0, 1]] * b2;
            let gb1 = g[[1, 0]] * b1 + g[[1, 1]] * b2;
            let q = b1 * gb0 + b2 * gb1;
            let u = b1 * xy[0] + b2 * xy[1];
            let recon = tr - 2.0 * (gb0 * gb0 + gb1 * gb1).sqrt() + q;
            let pen_b = lb * (1.0 - zeta) * (b1.abs() + b2.abs()) + lb * zeta * (b1 * b1 + b2 * b2);
            let f = |gam: f64| (1.0 - w) * (syy - 2.0 * gam * u + gam * gam * q) + lg * gam.abs();
            let gstar = if q > 0.0 {
                let z = (1.0 - w) * u;
                (z.signum() * (z.abs() - lg / 2.0).max(0.0) / ((1.0 - w) * q)).clamp(-3.0, 3.0)
            } else {
                0.0
            };
            let lo = ((gstar / step).floor() as i64).clamp(-m, m);
            let hi = ((gstar / step).ceil() as i64).clamp(-m, m);
            let val = f(at(lo)).min(f(at(hi))) + w * recon + pen_b;
            best = best.min(val);
        }
    }
    best
}
