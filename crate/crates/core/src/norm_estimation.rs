//! Norm and trace estimates through compression to a ball.
//!
//! `compress(x, R)` is `P_R λ(x) P_R` on `ℓ²(B_R) ⊗ ℂⁿ`, stored as a sparse
//! matrix. Every number produced here is a lower bound for the quantity on the
//! whole group, and each report carries the radius, iteration count and
//! residual it was obtained with.

pub mod lanczos;

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::free_words::{ball_capped, ball_size, LengthFunction, Word};
use crate::nc_fourier::{bmo_defect, default_t_grid_for, h1_integrand, FourierElement};
use lanczos::{lanczos, CVec};

pub const DEFAULT_RADIUS: usize = 8;
pub const DEFAULT_KRYLOV_STEPS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormConfig {
    /// Relative tolerance on the top Ritz value.
    pub tol: f64,
    pub max_iterations: usize,
    /// Quadrature steps for spectral traces.
    pub krylov_steps: usize,
    /// Ritz values below `-positivity_tol · max(1, θ_max)` are a positivity violation.
    pub positivity_tol: f64,
    pub seed: u64,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig {
            tol: 1e-6,
            max_iterations: 400,
            krylov_steps: DEFAULT_KRYLOV_STEPS,
            positivity_tol: 1e-9,
            seed: 0,
        }
    }
}

/// The words of `B_R` with their positions.
#[derive(Debug)]
pub struct BallBasis {
    pub rank: usize,
    pub radius: usize,
    pub words: Vec<Word>,
    index: HashMap<Word, usize>,
}

impl BallBasis {
    pub fn new(rank: usize, radius: usize, budget: &Budget) -> Result<BallBasis> {
        let words = ball_capped(rank, radius, budget.max_ball_words())?;
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(BallBasis {
            rank,
            radius,
            words,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn position(&self, w: &Word) -> Option<usize> {
        self.index.get(w).copied()
    }
}

/// Compressed sparse row matrix with complex entries.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets, summing duplicates and
    /// dropping exact zeros.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, Complex64)>) -> Self {
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(t.len());
        let mut rows = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            if rows.last() == Some(&r) && col_idx.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        let keep: Vec<bool> = values.iter().map(|v| *v != Complex64::new(0.0, 0.0)).collect();
        let mut c2 = Vec::with_capacity(col_idx.len());
        let mut v2 = Vec::with_capacity(values.len());
        for i in 0..keep.len() {
            if keep[i] {
                row_ptr[rows[i] + 1] += 1;
                c2.push(col_idx[i]);
                v2.push(values[i]);
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx: c2,
            values: v2,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, v: &CVec) -> CVec {
        let mut out = vec![Complex64::new(0.0, 0.0); self.nrows];
        out.par_iter_mut().enumerate().for_each(|(r, o)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * v[self.col_idx[k]];
            }
            *o = acc;
        });
        CVec::from_vec(out)
    }

    /// `A* v`.
    pub fn adjoint_matvec(&self, v: &CVec) -> CVec {
        let mut out = CVec::zeros(self.ncols);
        for r in 0..self.nrows {
            let vr = v[r];
            if vr == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[self.col_idx[k]] += self.values[k].conj() * vr;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col_idx[k])] += self.values[k];
            }
        }
        m
    }
}

/// `P_R λ(x) P_R` together with its basis.
#[derive(Clone, Debug)]
pub struct CompressedOperator {
    pub radius: usize,
    pub coeff_dim: usize,
    pub basis: Arc<BallBasis>,
    pub matrix: CsrMatrix,
}

impl CompressedOperator {
    pub fn size(&self) -> usize {
        self.matrix.nrows
    }

    /// Index of `δ_w ⊗ e_i`.
    pub fn slot(&self, word: usize, i: usize) -> usize {
        word * self.coeff_dim + i
    }
}

/// Compression of `x` to `B_R`, building the ball afresh.
pub fn compress(x: &FourierElement, radius: usize) -> Result<CompressedOperator> {
    let budget = Budget::from_env();
    let basis = Arc::new(BallBasis::new(x.rank(), radius, &budget)?);
    compress_on(x, basis, &budget)
}

/// Compression onto an existing ball basis.
pub fn compress_on(x: &FourierElement, basis: Arc<BallBasis>, budget: &Budget) -> Result<CompressedOperator> {
    if basis.rank != x.rank() {
        return Err(Error::RankMismatch {
            left: basis.rank,
            right: x.rank(),
        });
    }
    let n = x.dim();
    let nnz_bound = (basis.len() as u128) * (x.len() as u128) * (n * n) as u128;
    if nnz_bound > budget.max_entries() {
        return Err(Error::BudgetExceeded {
            what: format!("compression to ball radius {}", basis.radius),
            required: nnz_bound,
            cap: budget.max_entries(),
        });
    }
    let terms: Vec<(&Word, &DMatrix<Complex64>)> = x.terms().collect();
    let triplets: Vec<(usize, usize, Complex64)> = basis
        .words
        .par_iter()
        .enumerate()
        .map(|(col, w)| {
            let mut local = Vec::new();
            for (g, c) in &terms {
                if g.len_usize() > basis.radius + w.len_usize() {
                    continue;
                }
                let gw = g.multiply(w).expect("ranks checked");
                if let Some(row) = basis.position(&gw) {
                    for i in 0..n {
                        for j in 0..n {
                            let v = c[(i, j)];
                            if v != Complex64::new(0.0, 0.0) {
                                local.push((row * n + i, col * n + j, v));
                            }
                        }
                    }
                }
            }
            local
        })
        .flatten()
        .collect();
    let size = basis.len() * n;
    Ok(CompressedOperator {
        radius: basis.radius,
        coeff_dim: n,
        matrix: CsrMatrix::from_triplets(size, size, triplets),
        basis,
    })
}

fn random_start(size: usize, seed: u64) -> CVec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CVec::from_fn(size, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorNormReport {
    pub radius: usize,
    pub basis_size: usize,
    /// Lower bound for `‖x‖`: square root of the top Ritz value of `A*A`.
    pub estimate: f64,
    pub iterations: usize,
    /// Residual norm of the top Ritz pair of `A*A`.
    pub residual: f64,
    pub converged: bool,
}

/// Largest singular value of `compress(x, R)` by Lanczos on `A*A`.
pub fn operator_norm_estimate(x: &FourierElement, radius: usize, cfg: &NormConfig) -> Result<OperatorNormReport> {
    let a = compress(x, radius)?;
    operator_norm_of(&a, cfg)
}

fn check_krylov_budget(size: usize, steps: usize) -> Result<()> {
    let budget = Budget::from_env();
    let need = (size as u128) * (steps as u128 + 1);
    if need > budget.max_entries() {
        return Err(Error::BudgetExceeded {
            what: format!("Krylov basis of {steps} vectors of length {size}"),
            required: need,
            cap: budget.max_entries(),
        });
    }
    Ok(())
}

pub fn operator_norm_of(a: &CompressedOperator, cfg: &NormConfig) -> Result<OperatorNormReport> {
    let size = a.size();
    let mut report = OperatorNormReport {
        radius: a.radius,
        basis_size: size,
        estimate: 0.0,
        iterations: 0,
        residual: 0.0,
        converged: true,
    };
    if a.matrix.nnz() == 0 {
        return Ok(report);
    }
    let steps = cfg.max_iterations.min(size).max(1);
    check_krylov_budget(size, steps)?;
    let start = random_start(size, cfg.seed);
    let mut last = (0.0f64, f64::INFINITY);
    let mut converged = false;
    let run = lanczos(
        |v| a.matrix.adjoint_matvec(&a.matrix.matvec(v)),
        &start,
        steps,
        |tri, beta| {
            let j = tri.len();
            if !(j <= 16 || j % 4 == 0 || beta == 0.0 || j >= steps) {
                return false;
            }
            let (vals, vecs) = tri.eigen();
            let top = vals.len() - 1;
            let theta = vals[top];
            let res = beta * vecs[(j - 1, top)].abs();
            last = (theta, res);
            converged = res <= cfg.tol * theta.abs() || beta == 0.0;
            converged
        },
    );
    report.iterations = run.tri.len();
    report.estimate = last.0.max(0.0).sqrt();
    report.residual = last.1;
    report.converged = converged || run.breakdown;
    if !report.converged {
        return Err(Error::NonConvergence {
            iterations: report.iterations,
            estimate: report.estimate,
            residual: report.residual,
        });
    }
    Ok(report)
}

/// Operator norm estimates over increasing radii.
pub fn operator_norm_ladder(x: &FourierElement, radii: &[usize], cfg: &NormConfig) -> Result<Vec<OperatorNormReport>> {
    radii.iter().map(|&r| operator_norm_estimate(x, r, cfg)).collect()
}

/// `floor((R − r_y)/r_y)`, the number of moments `⟨Y^m δ_e, δ_e⟩` that
/// compression to `B_R` reproduces exactly; `None` when `r_y = 0` (all of them).
pub fn exactness_horizon(radius: usize, support_radius: usize) -> Option<usize> {
    if support_radius == 0 {
        None
    } else {
        Some(radius.saturating_sub(support_radius) / support_radius)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralTraceReport {
    pub value: f64,
    pub radius: usize,
    pub basis_size: usize,
    pub support_radius: usize,
    pub exactness_horizon: Option<usize>,
    /// Largest number of quadrature nodes used over the matrix basis vectors.
    pub steps: usize,
    pub min_ritz: f64,
}

/// `τ ⊗ tr f(y)` for a positive element `y`, averaged over `δ_e ⊗ e_i`, by
/// Gauss quadrature on the Lanczos tridiagonal matrix of `compress(y, R)`.
pub fn spectral_trace<F: Fn(f64) -> f64 + Sync>(
    f: F,
    y: &FourierElement,
    radius: usize,
    cfg: &NormConfig,
) -> Result<SpectralTraceReport> {
    let a = compress(y, radius)?;
    let size = a.size();
    let n = a.coeff_dim;
    let steps = cfg.krylov_steps.min(size).max(1);
    check_krylov_budget(size, steps)?;
    let e = a.basis.position(&Word::identity(y.rank())).expect("ball contains e");
    let per_slot = (0..n)
        .into_par_iter()
        .map(|i| -> Result<(f64, usize, f64)> {
            let mut start = CVec::zeros(size);
            start[a.slot(e, i)] = Complex64::new(1.0, 0.0);
            let run = lanczos(|v| a.matrix.matvec(v), &start, steps, |_, _| false);
            let (vals, vecs) = run.tri.eigen();
            let top = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let floor = -cfg.positivity_tol * top;
            let mut acc = 0.0;
            let mut min_ritz = f64::INFINITY;
            for (j, &theta) in vals.iter().enumerate() {
                min_ritz = min_ritz.min(theta);
                if theta < floor {
                    return Err(Error::PositivityViolation { ritz: theta });
                }
                let w = vecs[(0, j)] * vecs[(0, j)];
                acc += w * f(theta.max(0.0));
            }
            Ok((acc, run.tri.len(), min_ritz))
        })
        .collect::<Result<Vec<_>>>()?;
    let value = per_slot.iter().map(|p| p.0).sum::<f64>() / n as f64;
    Ok(SpectralTraceReport {
        value,
        radius,
        basis_size: size,
        support_radius: y.support_radius(),
        exactness_horizon: exactness_horizon(radius, y.support_radius()),
        steps: per_slot.iter().map(|p| p.1).max().unwrap_or(0),
        min_ritz: per_slot.iter().map(|p| p.2).fold(f64::INFINITY, f64::min),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BmoPoint {
    pub t: f64,
    /// `τ ⊗ tr(T_t|x − T_t x|²)`.
    pub trace: f64,
    /// Lower bound for `‖T_t|x − T_t x|²‖`.
    pub operator: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BmoReport {
    /// `(max_t τ ⊗ tr(T_t|x − T_t x|²))^{1/2}`.
    pub trace_bound: f64,
    pub trace_argmax_t: Option<f64>,
    /// `(max_t ‖compress(T_t|x − T_t x|², R)‖)^{1/2}`.
    pub operator_bound: f64,
    pub operator_argmax_t: Option<f64>,
    pub radius: usize,
    pub t_grid: Vec<f64>,
    pub points: Vec<BmoPoint>,
}

/// Lower bounds for `‖x‖_{BMO_c}` over a grid of `t`.
///
/// The operator bound at each `t` is at least the largest diagonal entry
/// `⟨Y δ_e ⊗ e_i, δ_e ⊗ e_i⟩`, so it never falls below the trace bound.
pub fn bmo_norm_estimate(
    x: &FourierElement,
    psi: &LengthFunction,
    t_grid: Option<&[f64]>,
    radius: usize,
    cfg: &NormConfig,
) -> Result<BmoReport> {
    let grid: Vec<f64> = match t_grid {
        Some(g) => g.to_vec(),
        None => default_t_grid_for(x, psi)?,
    };
    let budget = Budget::from_env();
    let basis = Arc::new(BallBasis::new(x.rank(), radius, &budget)?);
    let points = grid
        .par_iter()
        .map(|&t| -> Result<BmoPoint> {
            let y = bmo_defect(x, t, psi)?;
            let trace = y.trace().re;
            let ce = y.coefficient_or_zero(&Word::identity(x.rank()));
            let diag = (0..y.dim()).map(|i| ce[(i, i)].re).fold(0.0f64, f64::max);
            let a = compress_on(&y, basis.clone(), &budget)?;
            let op = operator_norm_of(&a, cfg)?;
            Ok(BmoPoint {
                t,
                trace,
                operator: op.estimate.max(diag),
                iterations: op.iterations,
                residual: op.residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let arg = |key: fn(&BmoPoint) -> f64| {
        points
            .iter()
            .max_by(|a, b| key(a).total_cmp(&key(b)))
            .map(|p| (key(p), p.t))
    };
    let tr = arg(|p| p.trace);
    let op = arg(|p| p.operator);
    Ok(BmoReport {
        trace_bound: tr.map_or(0.0, |v| v.0.max(0.0).sqrt()),
        trace_argmax_t: tr.map(|v| v.1),
        operator_bound: op.map_or(0.0, |v| v.0.max(0.0).sqrt()),
        operator_argmax_t: op.map(|v| v.1),
        radius,
        t_grid: grid,
        points,
    })
}

/// `τ ⊗ tr (∫₀^∞ |∂_s T_s x|² s ds)^{1/2}` through [`spectral_trace`].
pub fn h1_norm_estimate(
    x: &FourierElement,
    psi: &LengthFunction,
    radius: usize,
    cfg: &NormConfig,
) -> Result<SpectralTraceReport> {
    let y = h1_integrand(x, psi)?;
    spectral_trace(f64::sqrt, &y, radius, cfg)
}

/// Ball size for reporting without building the ball.
pub fn basis_size(rank: usize, radius: usize, coeff_dim: usize) -> u128 {
    ball_size(rank, radius).saturating_mul(coeff_dim as u128)
}

/// Dense operator norm of a small complex matrix (largest singular value).
pub fn dense_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// `tr(M^{1/2})` for a Hermitian positive semidefinite matrix.
pub fn trace_sqrt(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().map(|v| v.max(0.0).sqrt()).sum()
}

/// Vector with one entry set, for tests and callers probing single slots.
pub fn unit_vector(size: usize, slot: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(size);
    v[slot] = Complex64::new(1.0, 0.0);
    v
}
