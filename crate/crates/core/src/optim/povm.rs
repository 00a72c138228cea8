//! Maximum-payoff POVM: maximize Σ_b Tr(R_b M_b) over POVMs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::matrix::{c, hermiticity_deviation, hermitize, identity, trace_prod_re, CMat};
use crate::qcore::spectral::{inv_sqrt, lambda_max, lambda_min};
use crate::qcore::types::Povm;

use super::CertifiedSolution;

const PAYOFF_HERMITIAN_TOL: f64 = 1e-9;
const SHIFT_MARGIN: f64 = 0.1;
const GAP_CHECK_EVERY: usize = 10;
const INV_SQRT_FLOOR: f64 = 1e-300;

/// One Hermitian payoff operator per outcome.
#[derive(Debug, Clone)]
pub struct PayoffEnsemble {
    payoffs: Vec<CMat>,
}

impl PayoffEnsemble {
    pub fn new(payoffs: Vec<CMat>) -> Result<Self> {
        let dim = payoffs
            .first()
            .ok_or_else(|| Error::invalid("payoff ensemble is empty"))?
            .nrows();
        for r in &payoffs {
            if r.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: r.nrows(),
                });
            }
            let dev = hermiticity_deviation(r);
            if dev > PAYOFF_HERMITIAN_TOL {
                return Err(Error::NotHermitian { deviation: dev });
            }
        }
        Ok(Self {
            payoffs: payoffs.iter().map(hermitize).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.payoffs[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.payoffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payoffs.is_empty()
    }

    pub fn payoffs(&self) -> &[CMat] {
        &self.payoffs
    }

    /// Σ_b Tr(R_b M_b).
    pub fn value(&self, effects: &[CMat]) -> f64 {
        self.payoffs
            .iter()
            .zip(effects)
            .map(|(r, m)| trace_prod_re(r, m))
            .sum()
    }

    /// Gap between the primal value of `effects` and the dual certificate
    /// Y = herm(Σ R_b M_b) + t·I with t = max(0, max_b λ_max(R_b − Y₀)).
    pub fn dual_gap(&self, effects: &[CMat]) -> f64 {
        let n = self.dim();
        let mut y0 = CMat::zeros(n, n);
        for (r, m) in self.payoffs.iter().zip(effects) {
            y0 += r * m;
        }
        let y0 = hermitize(&y0);
        let t = self
            .payoffs
            .iter()
            .map(|r| lambda_max(&(r - &y0)))
            .fold(f64::NEG_INFINITY, f64::max);
        let dual = y0.trace().re + n as f64 * t.max(0.0);
        dual - self.value(effects)
    }

    fn shifted(&self) -> Vec<CMat> {
        let n = self.dim();
        let min = self
            .payoffs
            .iter()
            .map(lambda_min)
            .fold(f64::INFINITY, f64::min);
        let alpha = (-min).max(0.0) + SHIFT_MARGIN;
        self.payoffs.iter().map(|r| r + identity(n) * c(alpha)).collect()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PovmSolverOptions {
    /// Target dual gap.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PovmSolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200_000,
        }
    }
}

fn fixed_point_step(shifted: &[CMat], effects: &mut [CMat]) {
    let n = shifted[0].nrows();
    let mut l = CMat::zeros(n, n);
    let products: Vec<CMat> = shifted
        .iter()
        .zip(effects.iter())
        .map(|(r, m)| r * m * r)
        .collect();
    for p in &products {
        l += p;
    }
    let li = inv_sqrt(&hermitize(&l), INV_SQRT_FLOOR);
    for (m, p) in effects.iter_mut().zip(products) {
        *m = hermitize(&(&li * p * &li));
    }
}

/// Runs `iters` fixed-point updates starting from `start` (mixed with a
/// little of I/B so every effect has full support). Returns the updated
/// effects and their value, or `start` unchanged if that was better.
pub fn improve_povm(ens: &PayoffEnsemble, start: &[CMat], iters: usize, mix: f64) -> (Vec<CMat>, f64) {
    let n = ens.dim();
    let nb = ens.len() as f64;
    let v0 = ens.value(start);
    let shifted = ens.shifted();
    let mut m: Vec<CMat> = start
        .iter()
        .map(|e| e * c(1.0 - mix) + identity(n) * c(mix / nb))
        .collect();
    for _ in 0..iters {
        fixed_point_step(&shifted, &mut m);
    }
    let v = ens.value(&m);
    if v >= v0 {
        (m, v)
    } else {
        (start.to_vec(), v0)
    }
}

/// Uniform POVM {I/B}.
pub fn uniform_effects(dim: usize, outcomes: usize) -> Vec<CMat> {
    vec![identity(dim) * c(1.0 / outcomes as f64); outcomes]
}

/// Solves the POVM problem from the uniform start to dual gap ≤ `opts.tol`.
pub fn max_payoff_povm_with(ens: &PayoffEnsemble, opts: PovmSolverOptions) -> Result<CertifiedSolution<Povm>> {
    let n = ens.dim();
    let nb = ens.len();
    if nb == 1 {
        let m = vec![identity(n)];
        return Ok(CertifiedSolution {
            value: ens.value(&m),
            strategy: Povm::new(m)?,
            dual_gap: Some(0.0),
            sweeps_used: 0,
            converged: true,
        });
    }
    let shifted = ens.shifted();
    let mut m = uniform_effects(n, nb);
    let mut gap = ens.dual_gap(&m);
    let mut iter = 0;
    while gap > opts.tol {
        if iter >= opts.max_iter {
            return Err(Error::NonConvergence {
                iterations: iter,
                last_gap: gap,
            });
        }
        for _ in 0..GAP_CHECK_EVERY {
            fixed_point_step(&shifted, &mut m);
        }
        iter += GAP_CHECK_EVERY;
        gap = ens.dual_gap(&m);
    }
    Ok(CertifiedSolution {
        value: ens.value(&m),
        strategy: Povm::new(m)?,
        dual_gap: Some(gap),
        sweeps_used: iter,
        converged: true,
    })
}

pub fn max_payoff_povm(ens: &PayoffEnsemble, tol: f64) -> Result<CertifiedSolution<Povm>> {
    max_payoff_povm_with(
        ens,
        PovmSolverOptions {
            tol,
            ..Default::default()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::matrix::{diag, from_real_rows, random_hermitian, Field};
    use crate::qcore::spectral::trace_norm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plus() -> CMat {
        from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]])
    }

    #[test]
    fn orthogonal_states_are_perfectly_discriminated() {
        let ens = PayoffEnsemble::new(vec![diag(&[0.5, 0.0]), diag(&[0.0, 0.5])]).unwrap();
        let s = max_payoff_povm(&ens, 1e-10).unwrap();
        assert!((s.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn helstrom_zero_plus() {
        let r0 = diag(&[0.5, 0.0]);
        let r1 = plus() * c(0.5);
        let helstrom = 0.5 * (1.0 + trace_norm(&(&r0 - &r1)));
        assert!((helstrom - (1.0 + std::f64::consts::FRAC_1_SQRT_2) / 2.0).abs() < 1e-12);
        let ens = PayoffEnsemble::new(vec![r0, r1]).unwrap();
        let s = max_payoff_povm(&ens, 1e-10).unwrap();
        assert!(s.dual_gap.unwrap() <= 1e-10);
        assert!((s.value - helstrom).abs() < 1e-9);
    }

    #[test]
    fn single_outcome_is_identity() {
        let r = diag(&[0.3, -0.1, 2.0]);
        let s = max_payoff_povm(&PayoffEnsemble::new(vec![r]).unwrap(), 1e-9).unwrap();
        assert!((s.value - 2.2).abs() < 1e-12);
    }

    #[test]
    fn warm_improvement_never_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rs: Vec<CMat> = (0..4).map(|_| random_hermitian(&mut rng, 3, Field::Complex)).collect();
        let ens = PayoffEnsemble::new(rs).unwrap();
        let mut m = uniform_effects(3, 4);
        let mut v = ens.value(&m);
        for _ in 0..20 {
            let (m2, v2) = improve_povm(&ens, &m, 5, 1e-3);
            assert!(v2 >= v);
            m = m2;
            v = v2;
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(PayoffEnsemble::new(vec![a]).is_err());
    }
}
