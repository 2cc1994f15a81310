//! Small dense linear-algebra helpers shared by the analysis modules.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value threshold used for numerical rank decisions.
pub const RANK_RTOL: f64 = 1e-9;

/// Singular values of `m`, sorted in non-increasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank with threshold `rtol * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rtol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&v| v > rtol * smax).count(),
        _ => 0,
    }
}

/// Orthonormal basis (as columns) of the null space of `m`, using the same
/// threshold as [`numerical_rank`].
pub fn null_basis(m: &DMatrix<f64>, rtol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    // Pad wide inputs with zero rows so the SVD yields a full V.
    let square = if m.nrows() < cols {
        let mut padded = DMatrix::zeros(cols, cols);
        padded.rows_mut(0, m.nrows()).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &b| a.max(b));
    let keep: Vec<usize> = (0..cols)
        .filter(|&k| smax == 0.0 || svd.singular_values[k] <= rtol * smax)
        .collect();
    let mut basis = DMatrix::zeros(cols, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        basis.set_column(c, &v_t.row(k).transpose());
    }
    basis
}

/// Orthonormal basis of the column span of `a`.
pub fn orthonormal_span(a: &DMatrix<f64>, rtol: f64) -> DMatrix<f64> {
    if a.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().fold(0.0_f64, |x, &y| x.max(y));
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| smax > 0.0 && svd.singular_values[k] > rtol * smax)
        .collect();
    let mut q = DMatrix::zeros(a.nrows(), keep.len());
    for (c, &k) in keep.iter().enumerate() {
        q.set_column(c, &u.column(k));
    }
    q
}

/// Sine of the largest principal angle between the column spans of `a` and `b`.
///
/// Returns 1 when the spans have different dimensions.
pub fn subspace_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = orthonormal_span(a, RANK_RTOL);
    let qb = orthonormal_span(b, RANK_RTOL);
    if qa.ncols() != qb.ncols() {
        return 1.0;
    }
    if qa.ncols() == 0 {
        return 0.0;
    }
    let residual = &qb - &qa * (qa.transpose() * &qb);
    singular_values(&residual).first().copied().unwrap_or(0.0).min(1.0)
}

/// The stacked translation basis `U = 1_n ⊗ I_d`.
pub fn translation_basis(n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d * n, d, |r, c| if r % d == c { 1.0 } else { 0.0 })
}

/// Orthonormal basis of the orthogonal complement of `Span{U}` in `R^{dn}`.
pub fn centroid_complement_basis(n: usize, d: usize) -> DMatrix<f64> {
    let u = translation_basis(n, d);
    let proj = DMatrix::identity(d * n, d * n) - &u * u.transpose() / n as f64;
    let eig = proj.symmetric_eigen();
    let keep: Vec<usize> = (0..d * n).filter(|&k| eig.eigenvalues[k] > 0.5).collect();
    let mut v = DMatrix::zeros(d * n, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        v.set_column(c, &eig.eigenvectors.column(k));
    }
    v
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Smallest eigenvalue `λ` of the pencil `a x = λ b x` with `b` symmetric
/// positive definite, via the Cholesky factor of `b`.
///
/// Returns `None` when `b` is not positive definite.
pub fn min_generalized_eigenvalue(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<f64> {
    let chol = b.clone().cholesky()?;
    let l = chol.l();
    // C^-1 A C^-T via two triangular solves.
    let y = l.solve_lower_triangular(a)?;
    let z = l.solve_lower_triangular(&y.transpose())?;
    Some(min_eigenvalue(&z))
}

/// Mean of the `n` blocks of length `d` in a stacked vector.
pub fn block_mean(x: &DVector<f64>, d: usize) -> DVector<f64> {
    let n = x.len() / d;
    let mut out = DVector::zeros(d);
    for i in 0..n {
        out += x.rows(i * d, d);
    }
    out / n as f64
}

/// Subtracts `shift` from every length-`d` block of `x`.
pub fn shift_blocks(x: &DVector<f64>, shift: &DVector<f64>) -> DVector<f64> {
    let d = shift.len();
    let mut out = x.clone();
    for i in 0..x.len() / d {
        let mut block = out.rows_mut(i * d, d);
        block -= shift;
    }
    out
}
