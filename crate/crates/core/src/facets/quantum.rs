//! Entanglement-assisted qubit-message strategies found by see-saw.
//!
//! Alice and Bob share |ψ⟩ = Σ Ψ_{ir}|i⟩_A|r⟩_B on C^d ⊗ C^d. On input x
//! Alice applies an isometry Vₓ: C^d → C² ⊗ C^d and discards the ancilla,
//! so Bob holds τₓ on C² ⊗ C^d and measures a six-outcome POVM.

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::optim::povm::uniform_effects;
use crate::optim::{
    improve_povm, max_payoff_povm_with, random_isometry, seesaw, stiefel_ascent_from, CertifiedSolution,
    ChoiFunctional, Initialization, PayoffEnsemble, PovmSolverOptions, RestartSummary, SeeSawConfig,
    SeeSawProblem,
};
use crate::qcore::matrix::{c, gaussian, identity, isometry_deviation, kron, trace_prod_re, CMat, Field};
use crate::qcore::spectral::{inv_sqrt, top_eigen};
use crate::qcore::{Povm, QuantumChannel};

use super::FacetInequality;

pub const MESSAGE_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateMode {
    /// |φ_d⟩ held fixed.
    MaximallyEntangled,
    /// Shared state optimized as a third see-saw block.
    Optimized,
}

#[derive(Debug, Clone)]
pub struct FacetStrategy {
    pub ent_dim: usize,
    /// d × d amplitude matrix of the shared state.
    pub psi: CMat,
    /// (2·d) × d isometries, message index major.
    pub isometries: Vec<CMat>,
    pub effects: Vec<CMat>,
}

impl FacetStrategy {
    fn functional(&self, w: CMat) -> ChoiFunctional {
        ChoiFunctional::new(w, self.psi.clone(), MESSAGE_DIM, self.ent_dim).expect("consistent dimensions")
    }

    /// Bob's states τₓ on message ⊗ B.
    pub fn taus(&self) -> Vec<CMat> {
        let n = MESSAGE_DIM * self.ent_dim;
        (0..self.isometries.len())
            .map(|x| self.functional(CMat::zeros(n, n)).output_state(&self.isometries[x]))
            .collect()
    }

    pub fn value(&self, f: &FacetInequality) -> f64 {
        let taus = self.taus();
        let mut s = 0.0;
        for (b, m) in self.effects.iter().enumerate() {
            for (x, t) in taus.iter().enumerate() {
                let cb = f.c[b][x];
                if cb != 0.0 {
                    s += cb * trace_prod_re(m, t);
                }
            }
        }
        s
    }

    pub fn channels(&self) -> Result<Vec<QuantumChannel>> {
        self.isometries
            .iter()
            .map(|v| QuantumChannel::from_isometry(v, MESSAGE_DIM, self.ent_dim))
            .collect()
    }

    pub fn povm(&self) -> Result<Povm> {
        Povm::with_tolerance(self.effects.clone(), 1e-8)
    }

    /// Checks the isometries, the POVM and the state normalization.
    pub fn validate(&self) -> Result<()> {
        for v in &self.isometries {
            let dev = isometry_deviation(v);
            if dev > 1e-8 {
                return Err(Error::InvalidChannel(format!("isometry deviation {dev:.3e}")));
            }
        }
        self.povm()?;
        let norm = self.psi.norm_squared();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!("shared state norm² = {norm}")));
        }
        Ok(())
    }
}

/// See-saw over (POVM, channels[, shared state]) for one facet.
#[derive(Debug, Clone)]
pub struct FacetSeeSaw {
    pub facet: FacetInequality,
    pub ent_dim: usize,
    pub mode: StateMode,
    /// Fixed-point iterations per warm-started POVM step.
    pub povm_iters: usize,
    /// Weight of I/B mixed into the POVM before each warm step.
    pub povm_mix: f64,
    /// Isometry ascent steps per input per sweep.
    pub channel_steps: usize,
    /// Dual gap targeted by the final certified POVM solve.
    pub final_tol: f64,
    pub final_max_iter: usize,
}

impl FacetSeeSaw {
    pub fn new(facet: FacetInequality, ent_dim: usize, mode: StateMode) -> Result<Self> {
        facet.validate()?;
        if !(1..=8).contains(&ent_dim) {
            return Err(Error::invalid("entanglement dimension must lie in 1..=8"));
        }
        Ok(Self {
            facet,
            ent_dim,
            mode,
            povm_iters: 20,
            povm_mix: 1e-3,
            channel_steps: 20,
            final_tol: 1e-9,
            final_max_iter: 20_000,
        })
    }

    fn payoffs(&self, taus: &[CMat]) -> Result<PayoffEnsemble> {
        let n = taus[0].nrows();
        let r = (0..self.facet.outcomes())
            .map(|b| {
                let mut m = CMat::zeros(n, n);
                for (x, t) in taus.iter().enumerate() {
                    let cb = self.facet.c[b][x];
                    if cb != 0.0 {
                        m += t * c(cb);
                    }
                }
                m
            })
            .collect();
        PayoffEnsemble::new(r)
    }

    fn witness(&self, effects: &[CMat], x: usize) -> CMat {
        let n = effects[0].nrows();
        let mut w = CMat::zeros(n, n);
        for (b, m) in effects.iter().enumerate() {
            let cb = self.facet.c[b][x];
            if cb != 0.0 {
                w += m * c(cb);
            }
        }
        w
    }

    fn povm_step(&self, s: &mut FacetStrategy) -> Result<()> {
        let ens = self.payoffs(&s.taus())?;
        s.effects = improve_povm(&ens, &s.effects, self.povm_iters, self.povm_mix).0;
        Ok(())
    }

    fn channel_step(&self, s: &mut FacetStrategy) {
        for x in 0..s.isometries.len() {
            let obj = s.functional(self.witness(&s.effects, x));
            let v = std::mem::replace(&mut s.isometries[x], CMat::zeros(0, 0));
            s.isometries[x] = stiefel_ascent_from(&obj, v, self.channel_steps, 1e-12).isometry;
        }
    }

    /// ψ ← top eigenvector of Q = Σₓ Σ_{o,p} (V_{x,o}† V_{x,p}) ⊗ W_{x,op},
    /// where V_{x,o} is the block of rows with message index o.
    fn state_step(&self, s: &mut FacetStrategy) {
        let d = self.ent_dim;
        let mut q = CMat::zeros(d * d, d * d);
        for (x, v) in s.isometries.iter().enumerate() {
            let w = self.witness(&s.effects, x);
            for o in 0..MESSAGE_DIM {
                let vo = v.rows(o * d, d);
                for p in 0..MESSAGE_DIM {
                    let vp = v.rows(p * d, d);
                    let g = vo.adjoint() * vp;
                    let wop = w.view((o * d, p * d), (d, d)).into_owned();
                    q += kron(&g, &wop);
                }
            }
        }
        let q = (&q + q.adjoint()) * c(0.5);
        let (_, mut v) = top_eigen(&q);
        let (k, _) = v.iter().enumerate().fold((0, 0.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
        let phase = v[k].conj() / v[k].norm();
        v *= phase;
        s.psi = CMat::from_fn(d, d, |i, b| v[i * d + b]);
    }
}

fn random_povm(rng: &mut ChaCha8Rng, dim: usize, outcomes: usize, field: Field) -> Vec<CMat> {
    let g: Vec<CMat> = (0..outcomes)
        .map(|_| {
            let a = gaussian(rng, dim, dim, field);
            &a * a.adjoint()
        })
        .collect();
    let mut total = CMat::zeros(dim, dim);
    for m in &g {
        total += m;
    }
    let si = inv_sqrt(&total, 1e-12);
    g.iter().map(|m| &si * m * &si).collect()
}

impl SeeSawProblem for FacetSeeSaw {
    type State = FacetStrategy;

    fn init(&self, rng: &mut ChaCha8Rng, cfg: &SeeSawConfig) -> Result<FacetStrategy> {
        let d = self.ent_dim;
        let isometries = (0..self.facet.inputs())
            .map(|_| random_isometry(rng, MESSAGE_DIM * d, d, cfg.field))
            .collect();
        let mut s = FacetStrategy {
            ent_dim: d,
            psi: identity(d) * c(1.0 / (d as f64).sqrt()),
            isometries,
            effects: Vec::new(),
        };
        match cfg.init {
            Initialization::RandomMeasurements => {
                s.effects = random_povm(rng, MESSAGE_DIM * d, self.facet.outcomes(), cfg.field);
            }
            Initialization::RandomStrategy => {
                let ens = self.payoffs(&s.taus())?;
                let start = uniform_effects(MESSAGE_DIM * d, self.facet.outcomes());
                s.effects = improve_povm(&ens, &start, self.povm_iters, 0.0).0;
            }
        }
        Ok(s)
    }

    fn blocks(&self) -> usize {
        match self.mode {
            StateMode::MaximallyEntangled => 2,
            StateMode::Optimized => 3,
        }
    }

    fn step(&self, block: usize, s: &mut FacetStrategy) -> Result<()> {
        match block {
            0 => self.povm_step(s)?,
            1 => self.channel_step(s),
            _ => self.state_step(s),
        }
        Ok(())
    }

    fn objective(&self, s: &FacetStrategy) -> f64 {
        s.value(&self.facet)
    }

    fn finalize(&self, s: &mut FacetStrategy) -> Result<Option<f64>> {
        let ens = self.payoffs(&s.taus())?;
        let opts = PovmSolverOptions {
            tol: self.final_tol,
            max_iter: self.final_max_iter,
        };
        match max_payoff_povm_with(&ens, opts) {
            Ok(sol) if sol.value >= ens.value(&s.effects) => {
                s.effects = sol.strategy.effects().to_vec();
            }
            Ok(_) | Err(Error::NonConvergence { .. }) => {}
            Err(e) => return Err(e),
        }
        Ok(Some(ens.dual_gap(&s.effects)))
    }
}

/// Best value found for one facet, entanglement dimension and state mode.
#[derive(Debug, Clone, Serialize)]
pub struct QuantumBound {
    pub label: String,
    pub ent_dim: usize,
    pub mode: StateMode,
    pub value: f64,
    pub classical_bound: Option<f64>,
    pub best_restart: usize,
    pub dual_gap: Option<f64>,
    pub config: SeeSawConfig,
    pub restarts: Vec<RestartSummary>,
    #[serde(skip)]
    pub solution: CertifiedSolution<FacetStrategy>,
}

impl QuantumBound {
    pub fn max_restart_value(&self) -> f64 {
        self.restarts.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Achievable value with a qubit message and d × d entanglement.
pub fn quantum_lower_bound(
    f: &FacetInequality,
    ent_dim: usize,
    mode: StateMode,
    cfg: &SeeSawConfig,
) -> Result<QuantumBound> {
    if !(2..=5).contains(&ent_dim) {
        return Err(Error::invalid("entanglement dimension must lie in 2..=5"));
    }
    let problem = FacetSeeSaw::new(f.clone(), ent_dim, mode)?;
    let out = seesaw(&problem, cfg)?;
    out.best.strategy.validate()?;
    Ok(QuantumBound {
        label: f.label.clone(),
        ent_dim,
        mode,
        value: out.best.value,
        classical_bound: f.classical_bound,
        best_restart: out.best_index,
        dual_gap: out.best.dual_gap,
        config: *cfg,
        restarts: out.restarts,
        solution: out.best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facets::builtin_facets;
    use crate::qcore::matrix::max_abs_diff;
    use crate::qcore::ops::partial_trace_matrix;
    use rand::SeedableRng;

    fn small_cfg(restarts: usize) -> SeeSawConfig {
        SeeSawConfig {
            restarts,
            max_sweeps: 300,
            seed: 3,
            init: Initialization::RandomStrategy,
            field: Field::Complex,
            ..Default::default()
        }
    }

    #[test]
    fn taus_match_dense_construction() {
        let f = builtin_facets()[1].clone();
        let p = FacetSeeSaw::new(f, 3, StateMode::Optimized).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = p.init(&mut rng, &small_cfg(1)).unwrap();
        p.state_step(&mut s);
        let d = 3;
        let ket: Vec<_> = (0..d * d).map(|k| s.psi[(k / d, k % d)]).collect();
        let ket = CMat::from_vec(d * d, 1, ket);
        for (x, t) in s.taus().iter().enumerate() {
            let big = kron(&s.isometries[x], &identity(d)) * &ket;
            let rho = &big * big.adjoint();
            let oracle = partial_trace_matrix(&rho, &[2, d, d], &[0, 2]).unwrap();
            assert!(max_abs_diff(t, &oracle) < 1e-12);
        }
    }

    #[test]
    fn state_step_is_exact_maximizer() {
        let f = builtin_facets()[2].clone();
        let p = FacetSeeSaw::new(f, 3, StateMode::Optimized).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut s = p.init(&mut rng, &small_cfg(1)).unwrap();
        let before = p.objective(&s);
        p.state_step(&mut s);
        assert!(p.objective(&s) >= before - 1e-12);
        assert!((s.psi.norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qubit_entanglement_stays_classical() {
        for f in builtin_facets() {
            let r = quantum_lower_bound(&f, 2, StateMode::Optimized, &small_cfg(3)).unwrap();
            assert!(r.max_restart_value() <= f.classical_bound.unwrap() + 1e-6, "{}", r.value);
            r.solution.strategy.validate().unwrap();
        }
    }

    #[test]
    fn dimension_range_checked() {
        let f = builtin_facets()[0].clone();
        assert!(quantum_lower_bound(&f, 1, StateMode::MaximallyEntangled, &small_cfg(1)).is_err());
        assert!(quantum_lower_bound(&f, 6, StateMode::MaximallyEntangled, &small_cfg(1)).is_err());
    }
}
