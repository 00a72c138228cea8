//! Hermitian eigendecomposition and spectral functions.

use std::cmp::Ordering;

use nalgebra::DMatrix;

use super::matrix::{c, hermiticity_deviation, hermitize, is_real, CMat, CVec, C64, ZERO};
use crate::error::{Error, Result};

/// Inputs whose Hermiticity defect exceeds this are rejected by [`eig_herm`].
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Default threshold separating the zero eigenspace in [`sign_observable`].
pub const DEFAULT_ZERO_TOL: f64 = 1e-7;

/// Eigenvalues closer than this are treated as one cluster when ordering
/// eigenvectors.
const TIE_TOL: f64 = 1e-12;

/// Spectral decomposition `A = Σ λᵢ vᵢvᵢ†`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector for `values[i]`.
    pub vectors: CMat,
}

impl Eigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> CVec {
        self.vectors.column(i).into_owned()
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("nonempty spectrum")
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    /// Σ f(λᵢ) vᵢvᵢ†
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let s = c(f(lam));
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// Projector onto the span of the eigenvectors whose eigenvalue passes `keep`.
    pub fn projector(&self, keep: impl Fn(f64) -> bool) -> CMat {
        self.apply(|l| if keep(l) { 1.0 } else { 0.0 })
    }
}

/// Rotates `v` so its first non-negligible component is real and positive.
fn fix_phase(v: &mut CVec) {
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-10).copied() {
        let phase = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

fn lex_cmp(a: &CVec, b: &CVec) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = x
            .re
            .partial_cmp(&y.re)
            .unwrap_or(Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(Ordering::Equal));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized before decomposition. Real symmetric inputs are
/// decomposed with a real solver so their eigenvectors stay real.
pub fn eig_herm(a: &CMat) -> Result<Eigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: a.ncols(),
        });
    }
    let dev = hermiticity_deviation(a);
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(eig_herm_unchecked(a))
}

/// [`eig_herm`] without the Hermiticity check; the caller guarantees it.
pub fn eig_herm_unchecked(a: &CMat) -> Eigen {
    let n = a.nrows();
    let h = hermitize(a);
    let (vals, vecs): (Vec<f64>, Vec<CVec>) = if is_real(&h) {
        let r = DMatrix::<f64>::from_fn(n, n, |i, j| h[(i, j)].re);
        let e = r.symmetric_eigen();
        let vecs = (0..n)
            .map(|j| CVec::from_fn(n, |i, _| c(e.eigenvectors[(i, j)])))
            .collect();
        (e.eigenvalues.iter().copied().collect(), vecs)
    } else {
        let e = h.symmetric_eigen();
        let vecs = (0..n).map(|j| e.eigenvectors.column(j).into_owned()).collect();
        (e.eigenvalues.iter().copied().collect(), vecs)
    };

    let mut pairs: Vec<(f64, CVec)> = vals.into_iter().zip(vecs).collect();
    for (_, v) in pairs.iter_mut() {
        fix_phase(v);
    }
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal));
    // deterministic order inside clusters of (numerically) equal eigenvalues
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].0 - pairs[end - 1].0 <= TIE_TOL {
            end += 1;
        }
        pairs[start..end].sort_by(|x, y| lex_cmp(&x.1, &y.1));
        start = end;
    }

    let mut vectors = CMat::from_element(n, n, ZERO);
    let mut values = Vec::with_capacity(n);
    for (j, (lam, v)) in pairs.into_iter().enumerate() {
        values.push(lam);
        vectors.set_column(j, &v);
    }
    Eigen { values, vectors }
}

/// Largest eigenvalue and a corresponding unit eigenvector.
pub fn top_eigen(a: &CMat) -> (f64, CVec) {
    let e = eig_herm_unchecked(a);
    let n = e.dim();
    (e.values[n - 1], e.vector(n - 1))
}

pub fn lambda_max(a: &CMat) -> f64 {
    eig_herm_unchecked(a).max()
}

pub fn lambda_min(a: &CMat) -> f64 {
    eig_herm_unchecked(a).min()
}

/// Orthogonal projectors onto the positive, negative and (near-)zero
/// eigenspaces of a Hermitian observable.
#[derive(Debug, Clone)]
pub struct SignProjectors {
    pub plus: CMat,
    pub minus: CMat,
    pub zero: CMat,
}

impl SignProjectors {
    /// Observable `P₊ − P₋`.
    pub fn observable(&self) -> CMat {
        &self.plus - &self.minus
    }

    pub fn ranks(&self) -> (usize, usize, usize) {
        let rank = |p: &CMat| p.trace().re.round() as usize;
        (rank(&self.plus), rank(&self.minus), rank(&self.zero))
    }
}

/// Splits the spectrum of `a` at `±zero_tol`.
pub fn sign_observable(a: &CMat, zero_tol: f64) -> Result<SignProjectors> {
    let e = eig_herm(a)?;
    Ok(SignProjectors {
        plus: e.projector(|l| l > zero_tol),
        minus: e.projector(|l| l < -zero_tol),
        zero: e.projector(|l| l.abs() <= zero_tol),
    })
}

/// Positive semidefinite square root (negative eigenvalues clipped to 0).
pub fn psd_sqrt(a: &CMat) -> CMat {
    eig_herm_unchecked(a).apply(|l| l.max(0.0).sqrt())
}

/// `A^{-1/2}` for a positive definite matrix, with eigenvalues floored at `floor`.
pub fn inv_sqrt(a: &CMat, floor: f64) -> CMat {
    eig_herm_unchecked(a).apply(|l| 1.0 / l.max(floor).sqrt())
}

/// Σ|λᵢ| for Hermitian `a`.
pub fn trace_norm(a: &CMat) -> f64 {
    eig_herm_unchecked(a).values.iter().map(|l| l.abs()).sum()
}

pub fn numerical_rank(a: &CMat, tol: f64) -> usize {
    eig_herm_unchecked(a)
        .values
        .iter()
        .filter(|l| l.abs() > tol)
        .count()
}

/// Unit vector in the top eigenspace of `a` (eigenvalues within `degeneracy`
/// of the maximum) that extremizes the weight ⟨v|Π|v⟩.
pub fn top_vector_extremal_weight(
    a: &CMat,
    proj: &CMat,
    degeneracy: f64,
    maximize: bool,
) -> (f64, CVec) {
    let e = eig_herm_unchecked(a);
    let n = e.dim();
    let top = e.max();
    let cols: Vec<usize> = (0..n).filter(|&j| top - e.values[j] <= degeneracy).collect();
    if cols.len() == 1 {
        return (top, e.vector(n - 1));
    }
    let basis = CMat::from_fn(n, cols.len(), |i, k| e.vectors[(i, cols[k])]);
    let compressed = basis.adjoint() * proj * &basis;
    let ce = eig_herm_unchecked(&compressed);
    let pick = if maximize { ce.dim() - 1 } else { 0 };
    let v = &basis * ce.vector(pick);
    let norm = v.norm();
    (top, v.map(|z| z / C64::new(norm, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::matrix::{diag, from_real_rows, max_abs_diff, identity, outer};

    #[test]
    fn diagonal_spectrum_sorted() {
        let e = eig_herm(&diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e = eig_herm(&x).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let rec = e.apply(|l| l);
        assert!(max_abs_diff(&rec, &x) < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let a = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(eig_herm(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn pauli_z_sign_projectors() {
        let z = diag(&[1.0, -1.0]);
        let s = sign_observable(&z, DEFAULT_ZERO_TOL).unwrap();
        assert!(max_abs_diff(&s.plus, &diag(&[1.0, 0.0])) < 1e-14);
        assert!(max_abs_diff(&s.minus, &diag(&[0.0, 1.0])) < 1e-14);
        assert!(max_abs_diff(&s.zero, &CMat::zeros(2, 2)) < 1e-14);
    }

    #[test]
    fn zero_matrix_is_all_zero_space() {
        let s = sign_observable(&CMat::zeros(3, 3), DEFAULT_ZERO_TOL).unwrap();
        assert!(max_abs_diff(&s.zero, &identity(3)) < 1e-14);
        assert_eq!(s.ranks(), (0, 0, 3));
    }

    #[test]
    fn degenerate_eigenvectors_are_deterministic() {
        let a = identity(4);
        let e1 = eig_herm(&a).unwrap();
        let e2 = eig_herm(&a).unwrap();
        assert_eq!(max_abs_diff(&e1.vectors, &e2.vectors), 0.0);
    }

    #[test]
    fn extremal_weight_in_degenerate_space() {
        let a = diag(&[1.0, 1.0, 0.0]);
        let proj = diag(&[0.0, 1.0, 0.0]);
        let (top, v) = top_vector_extremal_weight(&a, &proj, 1e-9, true);
        assert!((top - 1.0).abs() < 1e-14);
        let w = (v.adjoint() * &proj * &v)[(0, 0)].re;
        assert!((w - 1.0).abs() < 1e-12);
        let (_, v) = top_vector_extremal_weight(&a, &proj, 1e-9, false);
        let w = (v.adjoint() * &proj * &v)[(0, 0)].re;
        assert!(w.abs() < 1e-12);
        let _ = outer(&v);
    }
}
