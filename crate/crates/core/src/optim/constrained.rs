//! max Tr(Aρ) over density operators with Tr(Πρ) ≥ 1 − ε, solved through
//! the one-dimensional dual g(λ) = λ_max(A + λΠ) − λ(1 − ε), λ ≥ 0.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::matrix::{c, hermitize, max_abs_diff, op_norm, outer, trace_prod_re, CMat, CVec, C64};
use crate::qcore::spectral::{eig_herm_unchecked, top_vector_extremal_weight};

const MAX_BISECTIONS: usize = 200;
const DEGENERACY_TOL: f64 = 1e-10;
const PROJECTOR_TOL: f64 = 1e-9;
/// The initial bracket [0, 10(‖A‖+1)] is doubled until feasible, up to this
/// multiple of ‖A‖+1.
const MAX_BRACKET_GROWTH: f64 = 1e12;

/// Optimal state and certificate.
#[derive(Debug, Clone, Serialize)]
pub struct ConstrainedSolution {
    #[serde(skip)]
    pub rho: CMat,
    /// Tr(Aρ*).
    pub value: f64,
    /// g(λ*).
    pub dual_value: f64,
    pub lambda: f64,
    /// Tr(Πρ*).
    pub weight: f64,
}

fn weight(proj: &CMat, v: &CVec) -> f64 {
    (v.adjoint() * proj * v)[(0, 0)].re
}

fn pure(a: &CMat, proj: &CMat, v: &CVec, lambda: f64, target: f64) -> ConstrainedSolution {
    let rho = outer(v);
    let value = trace_prod_re(a, &rho);
    let top = eig_herm_unchecked(&(a + proj * c(lambda))).max();
    ConstrainedSolution {
        value,
        dual_value: top - lambda * target,
        lambda,
        weight: weight(proj, v),
        rho,
    }
}

/// The λ → ∞ limit: best state supported on range(Π).
fn restricted(a: &CMat, proj: &CMat) -> ConstrainedSolution {
    let e = eig_herm_unchecked(proj);
    let n = e.dim();
    let cols: Vec<usize> = (0..n).filter(|&j| e.values[j] > 0.5).collect();
    let q = CMat::from_fn(n, cols.len(), |i, k| e.vectors[(i, cols[k])]);
    let inner = eig_herm_unchecked(&(q.adjoint() * a * &q));
    let v = &q * inner.vector(inner.dim() - 1);
    let rho = outer(&v);
    ConstrainedSolution {
        value: trace_prod_re(a, &rho),
        dual_value: inner.max(),
        lambda: f64::INFINITY,
        weight: weight(proj, &v),
        rho,
    }
}

/// Maximizes Tr(Aρ) subject to ρ ⪰ 0, Tr ρ = 1, Tr(Πρ) ≥ 1 − ε.
pub fn constrained_state_opt(a: &CMat, proj: &CMat, eps: f64) -> Result<ConstrainedSolution> {
    if a.shape() != proj.shape() || !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: proj.nrows(),
        });
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::invalid(format!("ε = {eps} outside [0, 1]")));
    }
    if max_abs_diff(&(proj * proj), proj) > PROJECTOR_TOL || max_abs_diff(&proj.adjoint(), proj) > PROJECTOR_TOL {
        return Err(Error::invalid("Π is not an orthogonal projector"));
    }
    let a = hermitize(a);
    let target = 1.0 - eps;
    if eps >= 1.0 {
        let (_, v) = top_vector_extremal_weight(&a, proj, DEGENERACY_TOL, true);
        return Ok(pure(&a, proj, &v, 0.0, target));
    }
    if eps == 0.0 {
        return Ok(restricted(&a, proj));
    }

    let at = |lambda: f64| -> (f64, CVec, f64, CVec) {
        let m = &a + proj * c(lambda);
        let (_, vmax) = top_vector_extremal_weight(&m, proj, DEGENERACY_TOL, true);
        let (_, vmin) = top_vector_extremal_weight(&m, proj, DEGENERACY_TOL, false);
        (weight(proj, &vmin), vmin, weight(proj, &vmax), vmax)
    };

    let (_, _, w0, v0) = at(0.0);
    if w0 >= target {
        return Ok(pure(&a, proj, &v0, 0.0, target));
    }
    let mut lo = 0.0;
    let mut hi = 10.0 * (op_norm(&a) + 1.0);
    let (_, _, mut whi, mut vhi) = at(hi);
    while whi < target {
        hi *= 2.0;
        if hi > MAX_BRACKET_GROWTH * (op_norm(&a) + 1.0) {
            return Ok(restricted(&a, proj));
        }
        (_, _, whi, vhi) = at(hi);
    }
    let (mut wlo, mut vlo) = (w0, v0);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (wmin, vmin, wmax, vmax) = at(mid);
        if wmin >= target {
            hi = mid;
            whi = wmin;
            vhi = vmin;
        } else if wmax < target {
            lo = mid;
            wlo = wmax;
            vlo = vmax;
        } else {
            // λ* = mid; the constraint is met with equality inside the
            // degenerate top eigenspace
            lo = mid;
            hi = mid;
            whi = wmax;
            vhi = vmax;
            wlo = wmin;
            vlo = vmin;
            break;
        }
    }
    let p = if whi - wlo > 0.0 {
        ((target - wlo) / (whi - wlo)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let rho = outer(&vhi) * C64::new(p, 0.0) + outer(&vlo) * C64::new(1.0 - p, 0.0);
    let lambda = 0.5 * (lo + hi);
    let top = eig_herm_unchecked(&(&a + proj * c(lambda))).max();
    Ok(ConstrainedSolution {
        value: trace_prod_re(&a, &rho),
        dual_value: top - lambda * target,
        lambda,
        weight: trace_prod_re(proj, &rho),
        rho,
    })
}

/// g(λ) = λ_max(A + λΠ) − λ(1 − ε).
pub fn dual_objective(a: &CMat, proj: &CMat, eps: f64, lambda: f64) -> f64 {
    eig_herm_unchecked(&(hermitize(a) + proj * c(lambda))).max() - lambda * (1.0 - eps)
}
