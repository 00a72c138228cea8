//! Distance and divergence measures between states.

use super::matrix::{trace_prod_re, CMat};
use super::spectral::{eig_herm_unchecked, psd_sqrt};
use super::types::DensityOperator;
use crate::error::{Error, Result};

/// Eigenvalues of ρ at or below this count as outside its support.
pub const SUPPORT_TOL: f64 = 1e-12;
/// Weight of the first argument allowed outside the second's support.
pub const LEAK_TOL: f64 = 1e-10;

fn same_dim(a: &DensityOperator, b: &DensityOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(())
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`, clamped to [0, 1].
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_dim(rho, sigma)?;
    let s = psd_sqrt(rho.matrix());
    let inner: CMat = &s * sigma.matrix() * &s;
    let root_trace: f64 = eig_herm_unchecked(&inner)
        .values
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}

/// Quantum relative entropy `Tr ρ₀(log₂ρ₀ − log₂ρ)` in bits.
pub fn relative_entropy(rho0: &DensityOperator, rho: &DensityOperator) -> Result<f64> {
    same_dim(rho0, rho)?;
    let e0 = eig_herm_unchecked(rho0.matrix());
    let e = eig_herm_unchecked(rho.matrix());

    let mut leak = 0.0;
    let mut cross = 0.0;
    for (j, &mu) in e.values.iter().enumerate() {
        let v = e.vector(j);
        let w = (v.adjoint() * rho0.matrix() * &v)[(0, 0)].re;
        if mu <= SUPPORT_TOL {
            leak += w.max(0.0);
        } else {
            cross += w * mu.log2();
        }
    }
    if leak > LEAK_TOL {
        return Err(Error::SupportViolation { leak });
    }
    let self_term: f64 = e0
        .values
        .iter()
        .filter(|&&l| l > SUPPORT_TOL)
        .map(|&l| l * l.log2())
        .sum();
    Ok((self_term - cross).max(0.0))
}

/// Hilbert-Schmidt overlap Tr(ρσ).
pub fn overlap(a: &DensityOperator, b: &DensityOperator) -> f64 {
    trace_prod_re(a.matrix(), b.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::matrix::diag;

    fn pure0() -> DensityOperator {
        DensityOperator::single(diag(&[1.0, 0.0])).unwrap()
    }

    #[test]
    fn fidelity_identity_and_orthogonal() {
        let p0 = pure0();
        let p1 = DensityOperator::single(diag(&[0.0, 1.0])).unwrap();
        assert!((fidelity(&p0, &p0).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&p0, &p1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn fidelity_pure_vs_mixed() {
        let f = fidelity(&pure0(), &DensityOperator::maximally_mixed(2)).unwrap();
        assert!((f - 0.5).abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_closed_forms() {
        let mixed = DensityOperator::maximally_mixed(2);
        assert!(relative_entropy(&mixed, &mixed).unwrap().abs() < 1e-12);
        assert!((relative_entropy(&pure0(), &mixed).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_support_violation() {
        let mixed = DensityOperator::maximally_mixed(2);
        assert!(matches!(
            relative_entropy(&mixed, &pure0()),
            Err(Error::SupportViolation { .. })
        ));
    }

    #[test]
    fn dims_must_match() {
        let a = DensityOperator::maximally_mixed(2);
        let b = DensityOperator::maximally_mixed(3);
        assert!(fidelity(&a, &b).is_err());
        assert!(relative_entropy(&a, &b).is_err());
    }
}
