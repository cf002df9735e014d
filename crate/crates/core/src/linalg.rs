//! Dense complex linear algebra helpers on top of nalgebra. Every routine is
//! total on empty matrices so zero-dimensional subspaces flow through rank
//! computations without special cases at call sites.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

pub type C = Complex64;
pub type CMat = DMatrix<C>;
pub type CVec = DVector<C>;

pub fn c(re: f64, im: f64) -> C {
    Complex64::new(re, im)
}

pub fn cre(re: f64) -> C {
    Complex64::new(re, 0.0)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, cols: usize) -> CMat {
    CMat::zeros(r, cols)
}

/// Operator norm (largest singular value). Zero for empty shapes.
pub fn op_norm(a: &CMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

pub fn fro_norm(a: &CMat) -> f64 {
    a.norm()
}

pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
/// The input is symmetrized first; columns of the returned matrix are the
/// corresponding orthonormal eigenvectors.
pub fn herm_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "herm_eigen needs a square matrix");
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let se = hermitize(a).symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| se.eigenvalues[j].partial_cmp(&se.eigenvalues[i]).unwrap());
    let vals: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = zeros(n, n);
    for (col, &i) in idx.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Positive square root of a Hermitian PSD matrix. Eigenvalues below
/// `-neg_tol` fail; small negatives are clipped to zero.
pub fn psd_sqrt(a: &CMat, neg_tol: f64) -> Result<CMat> {
    let (vals, vecs) = herm_eigen(a);
    if let Some(min) = vals.last() {
        if *min < -neg_tol {
            return Err(Error::Validation(format!(
                "matrix is not positive semidefinite: eigenvalue {min:.3e} below -{neg_tol:.3e}"
            )));
        }
    }
    let n = a.nrows();
    let mut root = zeros(n, n);
    for (i, &v) in vals.iter().enumerate() {
        let s = if v > 0.0 { v.sqrt() } else { 0.0 };
        let col = vecs.column(i);
        root += (col * col.adjoint()).scale(s);
    }
    Ok(root)
}

/// Orthonormal eigenbasis of the numerically nonzero eigenspace of a
/// Hermitian PSD matrix: columns with eigenvalue > null_rel * max.
pub fn psd_range_basis(a: &CMat, null_rel: f64) -> CMat {
    let (vals, vecs) = herm_eigen(a);
    let max = vals.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = null_rel * max;
    let keep: Vec<usize> =
        (0..vals.len()).filter(|&i| vals[i] > cutoff && vals[i] > 0.0).collect();
    select_columns(&vecs, &keep)
}

/// Spectral square root keeping only eigenvalues above `rel * max`, so the
/// root of a numerically low-rank PSD matrix does not amplify noise.
pub fn thresholded_psd_root(a: &CMat, rel: f64) -> CMat {
    let (vals, vecs) = herm_eigen(a);
    let max = vals.first().copied().unwrap_or(0.0).max(0.0);
    let n = a.nrows();
    let mut root = zeros(n, n);
    for (i, &v) in vals.iter().enumerate() {
        if v > rel * max && v > 0.0 {
            let col = vecs.column(i);
            root += (col * col.adjoint()).scale(v.sqrt());
        }
    }
    root
}

pub(crate) fn select_columns(m: &CMat, cols: &[usize]) -> CMat {
    let mut out = zeros(m.nrows(), cols.len());
    for (j, &cidx) in cols.iter().enumerate() {
        out.set_column(j, &m.column(cidx));
    }
    out
}

/// Orthonormal basis of the column space, via SVD with relative threshold.
pub fn range_basis(a: &CMat, null_rel: f64) -> CMat {
    if a.nrows() == 0 || a.ncols() == 0 {
        return zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("svd with u requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > null_rel * smax && svd.singular_values[i] > 0.0)
        .collect();
    select_columns(&u, &keep)
}

/// Orthonormal basis of the kernel, via the eigendecomposition of a*a.
/// Works for wide matrices where the thin SVD would miss kernel directions.
pub fn null_basis(a: &CMat, null_rel: f64) -> CMat {
    let n = a.ncols();
    if n == 0 {
        return zeros(0, 0);
    }
    if a.nrows() == 0 {
        return eye(n);
    }
    let gram = a.adjoint() * a;
    let (vals, vecs) = herm_eigen(&gram);
    let max = vals.first().copied().unwrap_or(0.0).max(0.0);
    // the eigensolver itself only resolves the spectrum to about
    // n * eps * lambda_max, so exact kernels surface at that level
    let noise = (a.nrows().max(n) as f64) * f64::EPSILON;
    let cutoff = (null_rel * null_rel).max(noise) * max;
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] <= cutoff).collect();
    select_columns(&vecs, &keep)
}

/// Moore-Penrose pseudoinverse with relative singular value threshold.
pub fn pinv(a: &CMat, null_rel: f64) -> CMat {
    if a.nrows() == 0 || a.ncols() == 0 {
        return zeros(a.ncols(), a.nrows());
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd u");
    let v_t = svd.v_t.as_ref().expect("svd v_t");
    let smax = svd.singular_values.max();
    let mut inv = zeros(a.ncols(), a.nrows());
    for i in 0..svd.singular_values.len() {
        let s = svd.singular_values[i];
        if s > null_rel * smax && s > 0.0 {
            let vi = v_t.row(i).adjoint();
            let ui = u.column(i);
            inv += (vi * ui.adjoint()).scale(1.0 / s);
        }
    }
    inv
}

/// Minimum-norm least squares solution of a x = b.
pub fn solve_min_norm(a: &CMat, b: &CMat, null_rel: f64) -> CMat {
    pinv(a, null_rel) * b
}

/// Distance between subspaces given by orthonormal-column matrices:
/// the operator norm of the difference of the orthogonal projections.
pub fn subspace_distance(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.nrows(), b.nrows(), "subspace bases must share the ambient space");
    let pa = a * a.adjoint();
    let pb = b * b.adjoint();
    op_norm(&(pa - pb))
}

/// Orthonormal basis of span(whole) minus span(part); part must lie inside
/// span(whole) for the result to be meaningful. Directions survive on the
/// absolute scale of `whole`, so an empty complement stays empty instead of
/// surfacing normalized rounding noise.
pub fn complement_within(whole: &CMat, part: &CMat, null_rel: f64) -> CMat {
    if part.ncols() == 0 {
        return whole.clone();
    }
    let projected = whole - part * (part.adjoint() * whole);
    if projected.nrows() == 0 || projected.ncols() == 0 {
        return zeros(projected.nrows(), 0);
    }
    let scale = op_norm(whole);
    let svd = projected.clone().svd(true, false);
    let u = svd.u.expect("svd with u requested");
    let smax = svd.singular_values.max();
    let cutoff = (null_rel * smax).max(null_rel.sqrt() * scale);
    let keep: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > cutoff).collect();
    select_columns(&u, &keep)
}

/// Singular values, descending.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Residual certifying p is an orthogonal projection.
pub fn projection_residual(p: &CMat) -> f64 {
    let idem = op_norm(&(p * p - p));
    let herm = op_norm(&(p - p.adjoint()));
    idem.max(herm)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn block_diag(parts: &[&CMat]) -> CMat {
    let rows: usize = parts.iter().map(|m| m.nrows()).sum();
    let cols: usize = parts.iter().map(|m| m.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r0, mut c0) = (0usize, 0usize);
    for m in parts {
        out.view_mut((r0, c0), (m.nrows(), m.ncols())).copy_from(*m);
        r0 += m.nrows();
        c0 += m.ncols();
    }
    out
}

pub fn hstack(parts: &[&CMat]) -> CMat {
    if parts.is_empty() {
        return zeros(0, 0);
    }
    let rows = parts[0].nrows();
    let cols: usize = parts.iter().map(|m| m.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut c0 = 0usize;
    for m in parts {
        assert_eq!(m.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, c0), (rows, m.ncols())).copy_from(*m);
        c0 += m.ncols();
    }
    out
}

pub fn vstack(parts: &[&CMat]) -> CMat {
    if parts.is_empty() {
        return zeros(0, 0);
    }
    let cols = parts[0].ncols();
    let rows: usize = parts.iter().map(|m| m.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut r0 = 0usize;
    for m in parts {
        assert_eq!(m.ncols(), cols, "vstack column mismatch");
        out.view_mut((r0, 0), (m.nrows(), cols)).copy_from(*m);
        r0 += m.nrows();
    }
    out
}

pub fn random_cmat<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_cvec<R: Rng>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_norm_of_diag() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![cre(3.0), cre(-4.0)]));
        assert!((op_norm(&m) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn empty_shapes_are_total() {
        let e = zeros(0, 3);
        assert_eq!(op_norm(&e), 0.0);
        assert_eq!(null_basis(&e, 1e-10).ncols(), 3);
        assert_eq!(range_basis(&e, 1e-10).ncols(), 0);
        assert_eq!(pinv(&e, 1e-10).nrows(), 3);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let a = CMat::from_row_slice(2, 2, &[cre(2.0), c(0.0, 1.0), c(0.0, -1.0), cre(2.0)]);
        let r = psd_sqrt(&a, 1e-12).unwrap();
        assert!(op_norm(&(&r * &r - &a)) < 1e-12);
        assert!(op_norm(&(&r - r.adjoint())) < 1e-12);
    }

    #[test]
    fn psd_sqrt_rejects_negative() {
        let a = CMat::from_row_slice(1, 1, &[cre(-1.0)]);
        assert!(psd_sqrt(&a, 1e-12).is_err());
    }

    #[test]
    fn null_basis_of_wide_matrix() {
        let a = CMat::from_row_slice(1, 3, &[cre(1.0), cre(1.0), cre(0.0)]);
        let nb = null_basis(&a, 1e-10);
        assert_eq!(nb.ncols(), 2);
        assert!(op_norm(&(&a * &nb)) < 1e-12);
        assert!(op_norm(&(nb.adjoint() * &nb - eye(2))) < 1e-12);
    }

    #[test]
    fn pinv_recovers_inverse() {
        let a = CMat::from_row_slice(2, 2, &[cre(2.0), cre(1.0), cre(0.0), cre(1.0)]);
        let p = pinv(&a, 1e-12);
        assert!(op_norm(&(&a * &p - eye(2))) < 1e-10);
    }

    #[test]
    fn subspace_distance_detects_rotation() {
        let e1 = CMat::from_row_slice(2, 1, &[cre(1.0), cre(0.0)]);
        let e2 = CMat::from_row_slice(2, 1, &[cre(0.0), cre(1.0)]);
        assert!((subspace_distance(&e1, &e2) - 1.0).abs() < 1e-12);
        assert!(subspace_distance(&e1, &e1) < 1e-14);
    }

    #[test]
    fn complement_splits_plane() {
        let whole = eye(2);
        let part = CMat::from_row_slice(2, 1, &[cre(1.0), cre(0.0)]);
        let comp = complement_within(&whole, &part, 1e-10);
        assert_eq!(comp.ncols(), 1);
        assert!(comp[(0, 0)].norm() < 1e-12);
        assert!((comp[(1, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn block_and_stacks() {
        let a = eye(1);
        let b = eye(2).scale(2.0);
        let d = block_diag(&[&a, &b]);
        assert_eq!(d.nrows(), 3);
        assert!((d[(1, 1)].re - 2.0).abs() < 1e-15);
        assert_eq!(hstack(&[&a, &zeros(1, 2)]).ncols(), 3);
        assert_eq!(vstack(&[&a, &zeros(2, 1)]).nrows(), 3);
    }
}
