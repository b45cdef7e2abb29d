//! Lanczos iteration with full reorthogonalization for Hermitian operators
//! given only through a matrix-vector product.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CVec = DVector<Complex64>;

/// Symmetric tridiagonal matrix produced by the iteration.
#[derive(Clone, Debug, Default)]
pub struct Tridiagonal {
    pub alpha: Vec<f64>,
    /// `beta[j]` couples rows `j` and `j + 1`.
    pub beta: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.alpha.len();
        let mut t = DMatrix::zeros(n, n);
        for (i, a) in self.alpha.iter().enumerate() {
            t[(i, i)] = *a;
        }
        for (i, b) in self.beta.iter().enumerate().take(n.saturating_sub(1)) {
            t[(i, i + 1)] = *b;
            t[(i + 1, i)] = *b;
        }
        t
    }

    /// Ritz values and the matching eigenvectors of `T`, values ascending.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<f64>) {
        let eig = SymmetricEigen::new(self.matrix());
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }
}

#[derive(Clone, Debug)]
pub struct LanczosRun {
    pub tri: Tridiagonal,
    /// Norm of the last residual vector; zero on breakdown.
    pub residual_beta: f64,
    /// The Krylov space became invariant.
    pub breakdown: bool,
}

/// Runs up to `max_steps` steps from `start`. After each step `monitor`
/// receives the current tridiagonal matrix and the next off-diagonal entry
/// and may return `true` to stop.
pub fn lanczos<F, M>(mut op: F, start: &CVec, max_steps: usize, mut monitor: M) -> LanczosRun
where
    F: FnMut(&CVec) -> CVec,
    M: FnMut(&Tridiagonal, f64) -> bool,
{
    let mut tri = Tridiagonal::default();
    let norm = start.norm();
    if norm == 0.0 || max_steps == 0 {
        return LanczosRun {
            tri,
            residual_beta: 0.0,
            breakdown: true,
        };
    }
    let mut basis: Vec<CVec> = vec![start / Complex64::new(norm, 0.0)];
    let mut scale: f64 = 0.0;
    loop {
        let j = basis.len() - 1;
        let mut w = op(&basis[j]);
        let alpha = basis[j].dotc(&w).re;
        w.axpy(Complex64::new(-alpha, 0.0), &basis[j], Complex64::new(1.0, 0.0));
        if j > 0 {
            let b = tri.beta[j - 1];
            w.axpy(Complex64::new(-b, 0.0), &basis[j - 1], Complex64::new(1.0, 0.0));
        }
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&w);
                w.axpy(-c, q, Complex64::new(1.0, 0.0));
            }
        }
        let beta = w.norm();
        tri.alpha.push(alpha);
        scale = scale.max(alpha.abs()).max(beta);
        let breakdown = beta <= 1e-12 * scale.max(f64::MIN_POSITIVE);
        let stop = monitor(&tri, if breakdown { 0.0 } else { beta });
        if breakdown || stop || tri.alpha.len() >= max_steps || basis.len() >= start.len() {
            let exhausted = breakdown || basis.len() >= start.len();
            return LanczosRun {
                tri,
                residual_beta: if exhausted { 0.0 } else { beta },
                breakdown: exhausted,
            };
        }
        tri.beta.push(beta);
        basis.push(w / Complex64::new(beta, 0.0));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator_top_eigenvalue() {
        let d: Vec<f64> = (1..=50).map(|i| i as f64).collect();
        let op = |v: &CVec| CVec::from_fn(v.len(), |i, _| v[i] * d[i]);
        let start = CVec::from_element(50, Complex64::new(1.0, 0.0));
        let run = lanczos(op, &start, 100, |_, _| false);
        assert!(run.breakdown);
        let (vals, _) = run.tri.eigen();
        assert!((vals.last().unwrap() - 50.0).abs() < 1e-9);
        assert!((vals[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn quadrature_reproduces_moments() {
        let d = [0.5, 1.0, 2.0, 3.0];
        let op = |v: &CVec| CVec::from_fn(4, |i, _| v[i] * d[i]);
        let start = CVec::from_element(4, Complex64::new(0.5, 0.0));
        let run = lanczos(op, &start, 2, |_, _| false);
        let (vals, vecs) = run.tri.eigen();
        // two-node Gauss rule is exact up to degree 3
        for m in 0..4 {
            let exact: f64 = d.iter().map(|x| 0.25 * x.powi(m)).sum();
            let rule: f64 = (0..vals.len()).map(|j| vecs[(0, j)].powi(2) * vals[j].powi(m)).sum();
            assert!((exact - rule).abs() < 1e-12, "m={m}");
        }
    }
}
