//! Dense symmetric-matrix helpers shared by the solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// `(A + Aᵀ) / 2`.
pub fn sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Frobenius inner product, i.e. `tr(Aᵀ B)`.
pub fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

/// Eigen-decomposition with eigenvalues sorted in descending order.
pub fn sorted_eigen(s: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(s.clone());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let mut vectors = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Largest (algebraic) eigenvalue and a unit eigenvector of a symmetric
/// matrix, by full decomposition.
pub fn leading_eigenpair(s: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let (values, vectors) = sorted_eigen(s);
    (values[0], vectors.column(0).into_owned())
}

/// Leading eigenpair by Lanczos with full reorthogonalization, started from
/// `start` when given. Falls back to a full decomposition if the Ritz pair
/// does not reach a small residual after a few explicit restarts.
pub fn leading_eigenpair_warm(s: &DMatrix<f64>, start: Option<&DVector<f64>>) -> (f64, DVector<f64>) {
    let n = s.nrows();
    if n <= 16 {
        return leading_eigenpair(s);
    }
    let scale = s.norm().max(f64::MIN_POSITIVE);
    let steps = n.min(24);
    let mut v0 = match start {
        Some(v) if v.len() == n && v.norm() > 0.0 => v.clone(),
        _ => DVector::from_fn(n, |i, _| 1.0 + 0.01 * i as f64),
    };
    for _restart in 0..4 {
        let norm = v0.norm();
        if norm == 0.0 {
            break;
        }
        v0 /= norm;
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(steps);
        let mut alpha = Vec::with_capacity(steps);
        let mut beta: Vec<f64> = Vec::with_capacity(steps);
        basis.push(v0.clone());
        for j in 0..steps {
            let mut w = s * &basis[j];
            let a = w.dot(&basis[j]);
            alpha.push(a);
            for q in &basis {
                let c = w.dot(q);
                w.axpy(-c, q, 1.0);
            }
            let b = w.norm();
            if j + 1 == steps || b <= 1e-14 * scale {
                break;
            }
            beta.push(b);
            basis.push(w / b);
        }
        let m = alpha.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let (theta, y) = leading_eigenpair(&t);
        let mut ritz = DVector::zeros(n);
        for (q, c) in basis.iter().zip(y.iter()) {
            ritz.axpy(*c, q, 1.0);
        }
        let rn = ritz.norm();
        ritz /= rn;
        let resid = (s * &ritz - &ritz * theta).norm();
        if resid <= 1e-11 * scale {
            return (theta, ritz);
        }
        v0 = ritz;
    }
    leading_eigenpair(s)
}

/// Moore–Penrose inverse of a symmetric matrix; eigenvalues below
/// `rel_tol * max|λ|` are treated as zero. Returns the inverse and whether
/// any eigenvalue was dropped.
pub fn pinv_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, bool) {
    let n = m.nrows();
    if n == 0 {
        return (DMatrix::zeros(0, 0), false);
    }
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.amax();
    let cut = rel_tol * max;
    let mut out = DMatrix::zeros(n, n);
    let mut dropped = false;
    for i in 0..n {
        let lam = eig.eigenvalues[i];
        if lam.abs() <= cut || lam == 0.0 {
            dropped = true;
            continue;
        }
        let v = eig.eigenvectors.column(i);
        out += (v * v.transpose()) / lam;
    }
    (out, dropped)
}
