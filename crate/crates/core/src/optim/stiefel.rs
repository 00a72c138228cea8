//! Ascent over isometries V: C^in → C^out ⊗ C^anc (out index major), with
//! polar retraction and step-halving line search.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qcore::matrix::{c, gaussian, polar_isometry, trace_prod_re, CMat, Field};

const MIN_STEP: f64 = 1e-14;

/// A smooth real objective on isometries.
pub trait IsometryObjective {
    fn value(&self, v: &CMat) -> f64;
    /// Euclidean ascent direction ∂f/∂V̄.
    fn gradient(&self, v: &CMat) -> CMat;
}

/// f(V) = Tr(W τ(V)) where τ(V) = Tr_anc[(V ⊗ I)|ψ⟩⟨ψ|(V ⊗ I)†] lives on
/// out ⊗ ref, and |ψ⟩ = Σ Ψ_{ir}|i⟩|r⟩ on in ⊗ ref. Linear in the Choi
/// matrix of the channel V·V† followed by discarding anc.
#[derive(Debug, Clone)]
pub struct ChoiFunctional {
    /// Operator on out ⊗ ref (out index major).
    pub w: CMat,
    /// in × ref amplitude matrix of the input state.
    pub psi: CMat,
    pub out_dim: usize,
    pub anc_dim: usize,
}

impl ChoiFunctional {
    pub fn new(w: CMat, psi: CMat, out_dim: usize, anc_dim: usize) -> Result<Self> {
        let refd = psi.ncols();
        if w.shape() != (out_dim * refd, out_dim * refd) {
            return Err(Error::DimensionMismatch {
                expected: out_dim * refd,
                actual: w.nrows(),
            });
        }
        Ok(Self {
            w,
            psi,
            out_dim,
            anc_dim,
        })
    }

    fn ref_dim(&self) -> usize {
        self.psi.ncols()
    }

    /// Column vec(Ω_a) on out ⊗ ref for each ancilla level a, Ω = VΨ.
    fn slices(&self, v: &CMat) -> Vec<CMat> {
        let omega = v * &self.psi;
        let (o, r, anc) = (self.out_dim, self.ref_dim(), self.anc_dim);
        (0..anc)
            .map(|a| CMat::from_fn(o * r, 1, |idx, _| omega[((idx / r) * anc + a, idx % r)]))
            .collect()
    }

    /// Bob's effective state τ(V) on out ⊗ ref.
    pub fn output_state(&self, v: &CMat) -> CMat {
        let n = self.out_dim * self.ref_dim();
        let mut tau = CMat::zeros(n, n);
        for s in self.slices(v) {
            tau += &s * s.adjoint();
        }
        tau
    }
}

impl IsometryObjective for ChoiFunctional {
    fn value(&self, v: &CMat) -> f64 {
        trace_prod_re(&self.w, &self.output_state(v))
    }

    fn gradient(&self, v: &CMat) -> CMat {
        let (o, r, anc) = (self.out_dim, self.ref_dim(), self.anc_dim);
        let mut wo = CMat::zeros(o * anc, r);
        for (a, s) in self.slices(v).into_iter().enumerate() {
            let ws = &self.w * s;
            for idx in 0..o * r {
                wo[((idx / r) * anc + a, idx % r)] = ws[(idx, 0)];
            }
        }
        wo * self.psi.adjoint()
    }
}

/// Result of an ascent run.
#[derive(Debug, Clone)]
pub struct AscentTrace {
    pub isometry: CMat,
    pub value: f64,
    /// Objective after each accepted step (first entry is the start).
    pub history: Vec<f64>,
    pub steps_taken: usize,
}

/// Haar-like random isometry of shape (out·anc) × in.
pub fn random_isometry<R: rand::Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, field: Field) -> CMat {
    polar_isometry(&gaussian(rng, rows, cols, field))
}

/// Ascent from `start` for at most `steps` accepted steps; stops early once
/// a step improves the objective by less than `tol`.
pub fn stiefel_ascent_from<F: IsometryObjective + ?Sized>(
    objective: &F,
    start: CMat,
    steps: usize,
    tol: f64,
) -> AscentTrace {
    let mut v = start;
    let mut f = objective.value(&v);
    let mut history = vec![f];
    let mut eta = 1.0;
    let mut taken = 0;
    while taken < steps {
        let g = objective.gradient(&v);
        let (cand, fc) = loop {
            let cand = polar_isometry(&(&v + &g * c(eta)));
            let fc = objective.value(&cand);
            if fc >= f {
                break (cand, fc);
            }
            eta *= 0.5;
            if eta < MIN_STEP {
                return AscentTrace {
                    isometry: v,
                    value: f,
                    history,
                    steps_taken: taken,
                };
            }
        };
        let gain = fc - f;
        v = cand;
        f = fc;
        history.push(f);
        taken += 1;
        eta *= 2.0;
        if gain < tol {
            break;
        }
    }
    AscentTrace {
        isometry: v,
        value: f,
        history,
        steps_taken: taken,
    }
}

/// Ascent from a seeded random isometry (out_dim·anc_dim × in_dim).
pub fn stiefel_ascent<F: IsometryObjective + ?Sized>(
    objective: &F,
    in_dim: usize,
    out_dim: usize,
    anc_dim: usize,
    steps: usize,
    seed: u64,
    field: Field,
) -> Result<AscentTrace> {
    if anc_dim == 0 || in_dim == 0 || out_dim == 0 {
        return Err(Error::invalid("isometry dimensions must be positive"));
    }
    if out_dim * anc_dim < in_dim {
        return Err(Error::invalid("out_dim·anc_dim must be at least in_dim"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v0 = random_isometry(&mut rng, out_dim * anc_dim, in_dim, field);
    Ok(stiefel_ascent_from(objective, v0, steps, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::matrix::{identity, isometry_deviation, random_hermitian};
    use crate::qcore::spectral::lambda_max;

    #[test]
    fn one_column_finds_top_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = random_hermitian(&mut rng, 3, Field::Complex);
        let f = ChoiFunctional::new(w.clone(), identity(1), 3, 2).unwrap();
        let t = stiefel_ascent(&f, 1, 3, 2, 2000, 9, Field::Complex).unwrap();
        assert!((t.value - lambda_max(&w)).abs() < 1e-8, "{} vs {}", t.value, lambda_max(&w));
    }

    #[test]
    fn isometry_and_monotonicity_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random_hermitian(&mut rng, 6, Field::Complex);
        let psi = identity(3) * c(1.0 / 3f64.sqrt());
        let f = ChoiFunctional::new(w, psi, 2, 3).unwrap();
        let t = stiefel_ascent(&f, 3, 2, 3, 1000, 1, Field::Complex).unwrap();
        assert!(isometry_deviation(&t.isometry) <= 1e-8);
        for pair in t.history.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_hermitian(&mut rng, 4, Field::Complex);
        let psi = gaussian(&mut rng, 2, 2, Field::Complex);
        let f = ChoiFunctional::new(w, psi, 2, 2).unwrap();
        let v = gaussian(&mut rng, 4, 2, Field::Complex);
        let dir = gaussian(&mut rng, 4, 2, Field::Complex);
        let h = 1e-6;
        let fd = (f.value(&(&v + &dir * c(h))) - f.value(&(&v - &dir * c(h)))) / (2.0 * h);
        // df = 2 Re Tr(G† dV)
        let an = 2.0 * (f.gradient(&v).adjoint() * &dir).trace().re;
        assert!((fd - an).abs() < 1e-6, "{fd} vs {an}");
    }
}
