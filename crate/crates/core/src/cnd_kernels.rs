//! Finite certificates of conditional negativity for length functions, and the
//! positive definiteness of `e^{-tψ}` that follows from it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::free_words::{LengthFunction, Word};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// Mean-zero vector attaining the largest constrained value, scaled to unit max-norm.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub vector: Vec<f64>,
    /// `Σ a_g a_h ψ(g⁻¹h)` at `vector`.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructuralCheck {
    /// `ψ(g) = ψ(g⁻¹)` for every `g` in the set and every quotient `g⁻¹h`.
    pub symmetric: bool,
    pub asymmetric_words: Vec<Word>,
    /// Non-identity words of the set where `ψ` vanishes.
    pub nontrivial_zeros: Vec<Word>,
    pub identity_value: Option<Real>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GramReport {
    pub length: LengthFunction,
    pub test_set: Vec<Word>,
    pub matrix_dim: usize,
    pub matrix_scale: f64,
    /// `None` when the set has fewer than two words (no mean-zero directions)
    /// or when the structural check failed.
    pub max_constrained_eigenvalue: Option<f64>,
    pub tolerance: f64,
    pub structural: StructuralCheck,
    pub witness: Option<Witness>,
    pub verdict: Verdict,
}

fn same_value(x: &Real, y: &Real) -> bool {
    match (x.as_exact(), y.as_exact()) {
        (Some(a), Some(b)) => a == b,
        _ => {
            let (a, b) = (x.to_f64(), y.to_f64());
            (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
        }
    }
}

fn dedup(words: &[Word]) -> Vec<Word> {
    let mut out = words.to_vec();
    out.sort();
    out.dedup();
    out
}

fn check_ranks(words: &[Word]) -> Result<()> {
    if let Some(first) = words.first() {
        if let Some(bad) = words.iter().find(|w| w.rank() != first.rank()) {
            return Err(Error::RankMismatch {
                left: first.rank(),
                right: bad.rank(),
            });
        }
    }
    Ok(())
}

/// `M[i][j] = ψ(g_i⁻¹ g_j)` together with the structural checks.
fn length_matrix(psi: &LengthFunction, words: &[Word]) -> Result<(DMatrix<f64>, StructuralCheck)> {
    let n = words.len();
    let mut exact: Vec<Vec<Real>> = Vec::with_capacity(n);
    for g in words {
        let gi = g.inverse();
        let row = words
            .iter()
            .map(|h| psi.evaluate(&gi.multiply(h)?))
            .collect::<Result<Vec<_>>>()?;
        exact.push(row);
    }
    let mut asymmetric = Vec::new();
    let mut zeros = Vec::new();
    let mut identity_value = None;
    for g in words {
        let v = psi.evaluate(g)?;
        if g.is_identity() {
            identity_value = Some(v.clone());
        } else if v.is_zero() {
            zeros.push(g.clone());
        }
        if !same_value(&v, &psi.evaluate(&g.inverse())?) {
            asymmetric.push(g.clone());
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if !same_value(&exact[i][j], &exact[j][i]) {
                let q = words[i].inverse().multiply(&words[j])?;
                if !asymmetric.contains(&q) {
                    asymmetric.push(q);
                }
            }
        }
    }
    let m = DMatrix::from_fn(n, n, |i, j| exact[i][j].to_f64());
    Ok((
        m,
        StructuralCheck {
            symmetric: asymmetric.is_empty(),
            asymmetric_words: asymmetric,
            nontrivial_zeros: zeros,
            identity_value,
        },
    ))
}

/// Orthonormal basis of `{a : Σ a_i = 0}` as the last `n − 1` columns of the
/// Householder reflection sending `1/√n` to `e₁`.
pub fn mean_zero_basis(n: usize) -> DMatrix<f64> {
    if n <= 1 {
        return DMatrix::zeros(n, 0);
    }
    let u = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut w = u.clone();
    w[0] -= 1.0;
    let beta = 2.0 / w.norm_squared();
    let h = DMatrix::identity(n, n) - &w * w.transpose() * beta;
    h.columns(1, n - 1).into_owned()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Tests `Σ a_g a_h ψ(g⁻¹h) ≤ 0` over mean-zero `a` on the finite set `F`.
///
/// The default tolerance is `1e-9` times the largest `|ψ(g⁻¹h)|`.
pub fn cnd_gram_test(psi: &LengthFunction, set: &[Word], tol: Option<f64>) -> Result<GramReport> {
    check_ranks(set)?;
    let words = dedup(set);
    let n = words.len();
    let (m, structural) = length_matrix(psi, &words)?;
    let scale = max_abs(&m);
    let tolerance = tol.unwrap_or(1e-9 * scale);
    if !(tolerance >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be nonnegative, got {tolerance}")));
    }
    let mut report = GramReport {
        length: psi.clone(),
        test_set: words,
        matrix_dim: n,
        matrix_scale: scale,
        max_constrained_eigenvalue: None,
        tolerance,
        structural,
        witness: None,
        verdict: Verdict::Fail,
    };
    if !report.structural.symmetric {
        return Ok(report);
    }
    if n < 2 {
        report.verdict = Verdict::Pass;
        return Ok(report);
    }
    let q = mean_zero_basis(n);
    let p = q.transpose() * &m * &q;
    let p = (&p + p.transpose()) * 0.5;
    let eig = SymmetricEigen::new(p);
    let (imax, &lmax) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let mut a = &q * eig.eigenvectors.column(imax);
    let peak = a.iter().copied().fold(0.0f64, |s, v| if v.abs() > s.abs() { v } else { s });
    if peak != 0.0 {
        a /= peak;
    }
    let value = (a.transpose() * &m * &a)[(0, 0)];
    report.max_constrained_eigenvalue = Some(lmax);
    report.witness = Some(Witness {
        vector: a.iter().copied().collect(),
        value,
    });
    report.verdict = Verdict::from_bool(lmax <= tolerance);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchoenbergPoint {
    pub t: f64,
    pub min_eigenvalue: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchoenbergReport {
    pub length: LengthFunction,
    pub test_set: Vec<Word>,
    pub points: Vec<SchoenbergPoint>,
    pub verdict: Verdict,
}

/// Checks that `[e^{-tψ(g⁻¹h)}]` is positive semidefinite for each `t`.
///
/// The default tolerance is `1e-9` times the largest matrix entry.
pub fn schoenberg_test(
    psi: &LengthFunction,
    set: &[Word],
    t_grid: &[f64],
    tol: Option<f64>,
) -> Result<SchoenbergReport> {
    check_ranks(set)?;
    if let Some(bad) = t_grid.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {bad}")));
    }
    let words = dedup(set);
    let (m, _) = length_matrix(psi, &words)?;
    let points: Vec<SchoenbergPoint> = t_grid
        .par_iter()
        .map(|&t| {
            let k = m.map(|v| (-t * v).exp());
            let k = (&k + k.transpose()) * 0.5;
            let tolerance = tol.unwrap_or(1e-9 * max_abs(&k));
            let min_eigenvalue = if k.nrows() == 0 {
                0.0
            } else {
                SymmetricEigen::new(k).eigenvalues.min()
            };
            SchoenbergPoint {
                t,
                min_eigenvalue,
                tolerance,
                verdict: Verdict::from_bool(min_eigenvalue >= -tolerance),
            }
        })
        .collect();
    let verdict = Verdict::from_bool(points.iter().all(|p| p.verdict.passed()));
    Ok(SchoenbergReport {
        length: psi.clone(),
        test_set: words,
        points,
        verdict,
    })
}
