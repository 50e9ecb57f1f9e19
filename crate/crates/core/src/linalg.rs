//! Dense kernels: one-sided Jacobi SVD, orthogonal polar factor, Cholesky.
//!
//! Everything here is deterministic: the same input always produces the same
//! bits, which the solver and the benchmark harness rely on.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Result, SpcrError};

const MAX_JACOBI_SWEEPS: usize = 100;

/// Singular values below this fraction of the largest one are treated as zero
/// when forming a polar factor.
pub const POLAR_RANK_TOL: f64 = 1e-12;

/// Raw output of [`jacobi_svd`] for an `m × c` input `M`.
///
/// `w = M v` has mutually orthogonal columns with norms `s`, sorted in
/// nonincreasing order. Columns of `w` with nonzero `s` are `s_j u_j`.
#[derive(Debug, Clone)]
pub struct JacobiSvd {
    pub w: Array2<f64>,
    pub s: Array1<f64>,
    pub v: Array2<f64>,
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Columns are rotated pairwise until every pair is orthogonal to working
/// precision. `v` is always a full `c × c` orthogonal matrix, even when `M` is
/// rank deficient.
pub fn jacobi_svd(m: ArrayView2<f64>) -> JacobiSvd {
    let (rows, cols) = m.dim();
    let mut w: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (alpha, beta, gamma) = {
                    let (wp, wq) = (&w[p], &w[q]);
                    let mut a = 0.0;
                    let mut b = 0.0;
                    let mut g = 0.0;
                    for i in 0..rows {
                        a += wp[i] * wp[i];
                        b += wq[i] * wq[i];
                        g += wp[i] * wq[i];
                    }
                    (a, b, g)
                };
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = w
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    // stable: equal norms keep column order
    order.sort_by(|&a, &b| {
        norms[b]
            .partial_cmp(&norms[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut w_out = Array2::zeros((rows, cols));
    let mut v_out = Array2::zeros((cols, cols));
    let mut s_out = Array1::zeros(cols);
    for (dst, &src) in order.iter().enumerate() {
        s_out[dst] = norms[src];
        for i in 0..rows {
            w_out[[i, dst]] = w[src][i];
        }
        for i in 0..cols {
            v_out[[i, dst]] = v[src][i];
        }
    }
    JacobiSvd {
        w: w_out,
        s: s_out,
        v: v_out,
    }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let cp = &mut lo[p];
    let cq = &mut hi[0];
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let x = *a;
        let y = *b;
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Sign that makes the largest-magnitude entry of `col` positive (first one on
/// ties). Zero columns keep their sign.
pub fn canonical_sign<'a>(col: impl IntoIterator<Item = &'a f64>) -> f64 {
    let mut best = 0.0f64;
    for &x in col {
        if x.abs() > best.abs() {
            best = x;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Orthonormal polar factor `U Vᵀ` of a `p × k` matrix (`k ≤ p`), where
/// `M = U D Vᵀ` is its thin SVD.
///
/// Directions with singular value below `POLAR_RANK_TOL · s_max` are null; their
/// left singular vectors are replaced by Gram–Schmidt completion against the
/// canonical basis `e_1, e_2, …`, so `M = 0` maps to `[e_1 … e_k]`.
pub fn polar_factor(m: ArrayView2<f64>) -> Array2<f64> {
    let (p, k) = m.dim();
    assert!(
        k <= p,
        "polar factor needs at least as many rows as columns"
    );
    let svd = jacobi_svd(m);
    let s_max = svd.s.iter().cloned().fold(0.0, f64::max);

    let mut u: Vec<Option<Vec<f64>>> = (0..k)
        .map(|j| {
            let sj = svd.s[j];
            if s_max > 0.0 && sj > POLAR_RANK_TOL * s_max {
                Some(svd.w.column(j).iter().map(|x| x / sj).collect())
            } else {
                None
            }
        })
        .collect();
    complete_orthonormal(&mut u, p);

    let mut a = Array2::zeros((p, k));
    for (j, uj) in u.iter().enumerate() {
        let uj = uj.as_ref().expect("completed");
        for l in 0..k {
            let vlj = svd.v[[l, j]];
            if vlj == 0.0 {
                continue;
            }
            for i in 0..p {
                a[[i, l]] += uj[i] * vlj;
            }
        }
    }
    a
}

/// Fill the `None` slots with unit vectors orthogonal to every filled slot.
fn complete_orthonormal(cols: &mut [Option<Vec<f64>>], dim: usize) {
    for j in 0..cols.len() {
        if cols[j].is_some() {
            continue;
        }
        let mut chosen = None;
        for e in 0..dim {
            let mut cand = vec![0.0; dim];
            cand[e] = 1.0;
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for other in cols.iter().flatten() {
                    let dot: f64 = other.iter().zip(&cand).map(|(a, b)| a * b).sum();
                    for (c, o) in cand.iter_mut().zip(other) {
                        *c -= dot * o;
                    }
                }
            }
            let norm = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-3 {
                cand.iter_mut().for_each(|x| *x /= norm);
                chosen = Some(cand);
                break;
            }
        }
        cols[j] = Some(chosen.expect("k <= p guarantees a completion exists"));
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
pub fn cholesky(a: ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(SpcrError::Dimension(format!(
            "cholesky needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for m in 0..j {
                sum -= l[[i, m]] * l[[j, m]];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(SpcrError::InvalidConfig(
                        "matrix is not positive definite".into(),
                    ));
                }
                l[[i, i]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// `XᵀX` for an `n × p` matrix.
pub fn gram(x: ArrayView2<f64>) -> Array2<f64> {
    x.t().dot(&x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn max_abs(a: &Array2<f64>) -> f64 {
        a.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn jacobi_reconstructs_input() {
        let m = array![
            [4.0, 1.0, -2.0],
            [1.0, 3.0, 0.5],
            [0.0, 2.0, 1.0],
            [2.0, -1.0, 3.0]
        ];
        let svd = jacobi_svd(m.view());
        let recon = svd.w.dot(&svd.v.t());
        assert!(max_abs(&(&recon - &m)) < 1e-12);
        let vtv = svd.v.t().dot(&svd.v);
        assert!(max_abs(&(&vtv - &Array2::<f64>::eye(3))) < 1e-13);
        assert!(svd.s[0] >= svd.s[1] && svd.s[1] >= svd.s[2]);
        let wtw = svd.w.t().dot(&svd.w);
        assert!(wtw[[0, 1]].abs() < 1e-12 && wtw[[0, 2]].abs() < 1e-12);
    }

    #[test]
    fn polar_of_orthonormal_is_identity_map() {
        let c = (0.3f64).cos();
        let s = (0.3f64).sin();
        let b = array![[c, 0.0], [s, 0.0], [0.0, 1.0]];
        let a = polar_factor(b.view());
        assert!(max_abs(&(&a - &b)) < 1e-14);
    }

    #[test]
    fn polar_of_zero_is_leading_canonical_basis() {
        let a = polar_factor(Array2::<f64>::zeros((4, 2)).view());
        assert_eq!(a, array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn polar_rank_deficient_is_orthonormal() {
        let m = array![[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]];
        let a = polar_factor(m.view());
        let ata = a.t().dot(&a);
        assert!(max_abs(&(&ata - &Array2::<f64>::eye(2))) < 1e-12);
    }

    #[test]
    fn cholesky_round_trip_and_rejects_indefinite() {
        let a = array![[4.0, 2.0, 0.4], [2.0, 5.0, 1.0], [0.4, 1.0, 3.0]];
        let l = cholesky(a.view()).unwrap();
        assert!(max_abs(&(&l.dot(&l.t()) - &a)) < 1e-14);
        assert!(cholesky(array![[1.0, 2.0], [2.0, 1.0]].view()).is_err());
    }

    #[test]
    fn canonical_sign_picks_largest_entry() {
        assert_eq!(canonical_sign(&[0.1, -0.9, 0.5]), -1.0);
        assert_eq!(canonical_sign(&[0.0, 0.0]), 1.0);
        assert_eq!(canonical_sign(&[-0.5, 0.5]), -1.0);
    }
}
