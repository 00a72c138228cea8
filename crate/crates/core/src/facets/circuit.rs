//! Two-qubit encodings built from X-Z rotations and CNOTs, acting on Alice's
//! halves of two EPR pairs. Qubit 1 is discarded, so each encoding is a
//! channel C⁴ → C² with two Kraus operators.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::povm::uniform_effects;
use crate::optim::{
    improve_povm, max_payoff_povm_with, seesaw, CertifiedSolution, PayoffEnsemble, PovmSolverOptions,
    RestartSummary, SeeSawConfig, SeeSawProblem,
};
use crate::qcore::matrix::{c, identity, kron, trace_prod_re, CMat, CVec};
use crate::qcore::{QuantumChannel, UnitaryOperator};

use super::FacetInequality;

const BUNDLED_ANGLES: &str = include_str!("../../data/circuit_angles.csv");

/// ((cos θ, −sin θ), (sin θ, cos θ)).
pub fn rxz(theta: f64) -> UnitaryOperator {
    UnitaryOperator::new(rxz_matrix(theta)).expect("rotation is unitary")
}

fn rxz_matrix(theta: f64) -> CMat {
    let (s, co) = theta.sin_cos();
    CMat::from_row_slice(2, 2, &[c(co), c(-s), c(s), c(co)])
}

/// Gate on two qubits; qubit 1 is the most significant tensor factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum Gate {
    Rotation { qubit: u8 },
    Cnot { control: u8 },
}

fn gate_matrix(g: Gate, theta: f64) -> CMat {
    let i2 = identity(2);
    match g {
        Gate::Rotation { qubit: 1 } => kron(&rxz_matrix(theta), &i2),
        Gate::Rotation { .. } => kron(&i2, &rxz_matrix(theta)),
        Gate::Cnot { control } => crate::protocol::cnot(control as usize),
    }
}

fn rotations(seq: &[Gate]) -> usize {
    seq.iter().filter(|g| matches!(g, Gate::Rotation { .. })).count()
}

/// Unitary of a gate sequence listed in time order, U = G_n ⋯ G_1.
/// Rotation slots consume `theta` in order.
pub fn circuit_unitary(seq: &[Gate], theta: &[f64]) -> Result<CMat> {
    if rotations(seq) != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: rotations(seq),
            actual: theta.len(),
        });
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("rotation angles must be finite"));
    }
    let mut u = identity(4);
    let mut k = 0;
    for &g in seq {
        let t = match g {
            Gate::Rotation { .. } => {
                k += 1;
                theta[k - 1]
            }
            Gate::Cnot { .. } => 0.0,
        };
        u = gate_matrix(g, t) * u;
    }
    Ok(u)
}

/// Channel ρ ↦ Tr₁[U ρ U†] with Kraus operators (⟨k| ⊗ I)U, k = 0, 1.
pub fn circuit_channel(seq: &[Gate], theta: &[f64]) -> Result<QuantumChannel> {
    let u = circuit_unitary(seq, theta)?;
    let kraus = (0..2).map(|k| u.rows(2 * k, 2).into_owned()).collect();
    QuantumChannel::from_kraus(kraus)
}

/// Per-input gate sequences. The discarded qubit is always qubit 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitTemplate {
    pub inputs: Vec<Vec<Gate>>,
}

impl CircuitTemplate {
    pub const DISCARDED_QUBIT: u8 = 1;

    pub fn angle_counts(&self) -> Vec<usize> {
        self.inputs.iter().map(|s| rotations(s)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for g in self.inputs.iter().flatten() {
            let q = match g {
                Gate::Rotation { qubit } => *qubit,
                Gate::Cnot { control } => *control,
            };
            if q != 1 && q != 2 {
                return Err(Error::invalid(format!("qubit index {q} is not 1 or 2")));
            }
        }
        Ok(())
    }

    pub fn channels(&self, angles: &[Vec<f64>]) -> Result<Vec<QuantumChannel>> {
        if angles.len() != self.inputs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.inputs.len(),
                actual: angles.len(),
            });
        }
        self.inputs.iter().zip(angles).map(|(s, t)| circuit_channel(s, t)).collect()
    }
}

/// Rotation layers on both qubits (odd angle on qubit 1, even on qubit 2)
/// alternating with CNOTs of the given controls.
pub fn layered_sequence(controls: &[u8]) -> Vec<Gate> {
    let mut seq = Vec::new();
    for i in 0..=controls.len() {
        seq.push(Gate::Rotation { qubit: 1 });
        seq.push(Gate::Rotation { qubit: 2 });
        if let Some(&ctl) = controls.get(i) {
            seq.push(Gate::Cnot { control: ctl });
        }
    }
    seq
}

fn control_patterns(n: usize) -> Vec<Vec<u8>> {
    (0..1usize << n)
        .map(|m| (0..n).map(|i| if m >> (n - 1 - i) & 1 == 0 { 1 } else { 2 }).collect())
        .collect()
}

/// Three CNOTs for the first input and two for the others, with the
/// controls of every CNOT fixed by `controls`.
pub fn standard_template(controls: &[Vec<u8>]) -> Result<CircuitTemplate> {
    if controls.len() != 6 || controls[0].len() != 3 || controls[1..].iter().any(|c| c.len() != 2) {
        return Err(Error::invalid("expected 3 controls for input 1 and 2 for inputs 2..6"));
    }
    let t = CircuitTemplate {
        inputs: controls.iter().map(|c| layered_sequence(c)).collect(),
    };
    t.validate()?;
    Ok(t)
}

/// Candidate gate sequences per input; each restart draws one per input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateFamily {
    pub options: Vec<Vec<Vec<Gate>>>,
}

impl TemplateFamily {
    /// All CNOT control choices of the layered layout: 8 for input 1 and
    /// 4 for each of inputs 2..6.
    pub fn standard() -> Self {
        let first = control_patterns(3).iter().map(|c| layered_sequence(c)).collect();
        let rest: Vec<Vec<Gate>> = control_patterns(2).iter().map(|c| layered_sequence(c)).collect();
        let mut options = vec![first];
        options.extend(std::iter::repeat_n(rest, 5));
        Self { options }
    }

    pub fn fixed(t: &CircuitTemplate) -> Self {
        Self {
            options: t.inputs.iter().map(|s| vec![s.clone()]).collect(),
        }
    }
}

/// State shared before encoding, on A1 A2 B1 B2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharedPair {
    /// |φ⁺⟩ on A1B1 and on A2B2.
    TwoEpr,
    /// |0000⟩.
    Product,
}

impl SharedPair {
    pub fn ket(self) -> CVec {
        let mut v = CVec::zeros(16);
        match self {
            SharedPair::TwoEpr => {
                for a1 in 0..2 {
                    for a2 in 0..2 {
                        v[a1 * 8 + a2 * 4 + a1 * 2 + a2] = c(0.5);
                    }
                }
            }
            SharedPair::Product => v[0] = c(1.0),
        }
        v
    }
}

/// Bob's state on A2 B1 B2 after U on A1A2 and discarding A1.
fn bob_state(u: &CMat, ket: &CVec) -> CMat {
    let v = kron(u, &identity(4)) * ket;
    CMat::from_fn(8, 8, |r, s| v[r] * v[s].conj() + v[8 + r] * v[8 + s].conj())
}

#[derive(Debug, Clone)]
pub struct CircuitState {
    /// Chosen sequence index per input.
    pub choice: Vec<usize>,
    pub angles: Vec<Vec<f64>>,
    pub effects: Vec<CMat>,
}

#[derive(Debug, Clone)]
pub struct CircuitProblem {
    pub facet: FacetInequality,
    pub family: TemplateFamily,
    pub shared: SharedPair,
    pub povm_iters: usize,
    pub povm_mix: f64,
    /// Coordinate-ascent passes over all angles per sweep.
    pub passes: usize,
    ket: CVec,
}

impl CircuitProblem {
    pub fn new(facet: FacetInequality, family: TemplateFamily, shared: SharedPair) -> Result<Self> {
        facet.validate()?;
        if family.options.len() != facet.inputs() || family.options.iter().any(|o| o.is_empty()) {
            return Err(Error::invalid("template family must offer a sequence for every input"));
        }
        Ok(Self {
            facet,
            family,
            shared,
            povm_iters: 20,
            povm_mix: 1e-3,
            passes: 2,
            ket: shared.ket(),
        })
    }

    fn sequence(&self, s: &CircuitState, x: usize) -> &[Gate] {
        &self.family.options[x][s.choice[x]]
    }

    fn tau(&self, seq: &[Gate], theta: &[f64]) -> CMat {
        bob_state(&circuit_unitary(seq, theta).expect("angle count matches template"), &self.ket)
    }

    pub fn taus(&self, s: &CircuitState) -> Vec<CMat> {
        (0..s.angles.len()).map(|x| self.tau(self.sequence(s, x), &s.angles[x])).collect()
    }

    fn payoffs(&self, taus: &[CMat]) -> Result<PayoffEnsemble> {
        let r = (0..self.facet.outcomes())
            .map(|b| {
                let mut m = CMat::zeros(8, 8);
                for (x, t) in taus.iter().enumerate() {
                    if self.facet.c[b][x] != 0.0 {
                        m += t * c(self.facet.c[b][x]);
                    }
                }
                m
            })
            .collect();
        PayoffEnsemble::new(r)
    }

    fn witness(&self, effects: &[CMat], x: usize) -> CMat {
        let mut w = CMat::zeros(8, 8);
        for (b, m) in effects.iter().enumerate() {
            if self.facet.c[b][x] != 0.0 {
                w += m * c(self.facet.c[b][x]);
            }
        }
        w
    }

    /// Exact coordinate ascent: f(θₖ) = A + B cos 2θₖ + C sin 2θₖ is fixed
    /// by three evaluations and maximized in closed form.
    fn angle_step(&self, s: &mut CircuitState) {
        for x in 0..s.angles.len() {
            let w = self.witness(&s.effects, x);
            let seq = self.family.options[x][s.choice[x]].clone();
            let f = |t: &[f64]| trace_prod_re(&w, &self.tau(&seq, t));
            for _ in 0..self.passes {
                for k in 0..s.angles[x].len() {
                    let mut t = s.angles[x].clone();
                    let mut eval = |a: f64| {
                        t[k] = a;
                        f(&t)
                    };
                    let (f0, f1, f2) = (eval(0.0), eval(FRAC_PI_4), eval(FRAC_PI_2));
                    let a = 0.5 * (f0 + f2);
                    let b = 0.5 * (f0 - f2);
                    let cc = f1 - a;
                    s.angles[x][k] = (0.5 * cc.atan2(b)).rem_euclid(PI);
                }
            }
        }
    }
}

impl SeeSawProblem for CircuitProblem {
    type State = CircuitState;

    fn init(&self, rng: &mut ChaCha8Rng, _cfg: &SeeSawConfig) -> Result<CircuitState> {
        let choice: Vec<usize> = self.family.options.iter().map(|o| rng.random_range(0..o.len())).collect();
        let angles = choice
            .iter()
            .enumerate()
            .map(|(x, &i)| (0..rotations(&self.family.options[x][i])).map(|_| rng.random_range(0.0..PI)).collect())
            .collect();
        let mut s = CircuitState {
            choice,
            angles,
            effects: Vec::new(),
        };
        let ens = self.payoffs(&self.taus(&s))?;
        s.effects = improve_povm(&ens, &uniform_effects(8, self.facet.outcomes()), 30, 0.0).0;
        Ok(s)
    }

    fn blocks(&self) -> usize {
        2
    }

    fn step(&self, block: usize, s: &mut CircuitState) -> Result<()> {
        if block == 0 {
            let ens = self.payoffs(&self.taus(s))?;
            s.effects = improve_povm(&ens, &s.effects, self.povm_iters, self.povm_mix).0;
        } else {
            self.angle_step(s);
        }
        Ok(())
    }

    fn objective(&self, s: &CircuitState) -> f64 {
        let taus = self.taus(s);
        let mut v = 0.0;
        for (b, m) in s.effects.iter().enumerate() {
            for (x, t) in taus.iter().enumerate() {
                if self.facet.c[b][x] != 0.0 {
                    v += self.facet.c[b][x] * trace_prod_re(m, t);
                }
            }
        }
        v
    }

    fn finalize(&self, s: &mut CircuitState) -> Result<Option<f64>> {
        let ens = self.payoffs(&self.taus(s))?;
        let opts = PovmSolverOptions {
            tol: 1e-9,
            max_iter: 20_000,
        };
        match max_payoff_povm_with(&ens, opts) {
            Ok(sol) if sol.value >= ens.value(&s.effects) => s.effects = sol.strategy.effects().to_vec(),
            Ok(_) | Err(Error::NonConvergence { .. }) => {}
            Err(e) => return Err(e),
        }
        Ok(Some(ens.dual_gap(&s.effects)))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CircuitOutcome {
    pub value: f64,
    pub shared: SharedPair,
    pub template: CircuitTemplate,
    pub angles_deg: Vec<Vec<f64>>,
    pub best_restart: usize,
    pub dual_gap: Option<f64>,
    pub config: SeeSawConfig,
    pub restarts: Vec<RestartSummary>,
    #[serde(skip)]
    pub solution: CertifiedSolution<CircuitState>,
}

/// Alternates certified-start POVM steps with exact angle updates over a
/// family of admissible gate orderings; returns the best restart.
pub fn optimize_circuit(
    f: &FacetInequality,
    family: &TemplateFamily,
    shared: SharedPair,
    cfg: &SeeSawConfig,
) -> Result<CircuitOutcome> {
    let problem = CircuitProblem::new(f.clone(), family.clone(), shared)?;
    let out = seesaw(&problem, cfg)?;
    let s = &out.best.strategy;
    let template = CircuitTemplate {
        inputs: (0..s.choice.len()).map(|x| problem.sequence(s, x).to_vec()).collect(),
    };
    Ok(CircuitOutcome {
        value: out.best.value,
        shared,
        template,
        angles_deg: s.angles.iter().map(|a| a.iter().map(|t| t.to_degrees()).collect()).collect(),
        best_restart: out.best_index,
        dual_gap: out.best.dual_gap,
        config: *cfg,
        restarts: out.restarts,
        solution: out.best,
    })
}

/// Printed rotation angles (radians) per input, θ₁ first.
pub fn bundled_angles() -> Result<Vec<Vec<f64>>> {
    parse_angles(BUNDLED_ANGLES)
}

pub fn bundled_angles_csv() -> &'static str {
    BUNDLED_ANGLES
}

/// Parses a degree-valued angle table (rows θₖ, columns U1..U6).
pub fn parse_angles(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); 6];
    for rec in reader.records() {
        let rec = rec?;
        for (x, col) in cols.iter_mut().enumerate() {
            let cell = rec.get(x + 1).unwrap_or("").trim();
            if !cell.is_empty() {
                let deg: f64 = cell
                    .parse()
                    .map_err(|_| Error::validation(format!("angle table row {:?}", rec.get(0)), "bad number"))?;
                col.push(deg.to_radians());
            }
        }
    }
    Ok(cols)
}

/// Score of the printed angles under one gate ordering, with the optimal
/// measurement.
#[derive(Debug, Clone, Serialize)]
pub struct AngleCheck {
    pub controls: Vec<u8>,
    pub reversed: bool,
    pub value: f64,
}

/// Scores the printed angles under every CNOT control pattern (inputs 2..6
/// reuse the first two controls) in both time directions; best first.
pub fn evaluate_bundled_angles(f: &FacetInequality) -> Result<Vec<AngleCheck>> {
    let angles = bundled_angles()?;
    let ket = SharedPair::TwoEpr.ket();
    let mut out = Vec::new();
    for ctl in control_patterns(3) {
        for reversed in [false, true] {
            let controls: Vec<Vec<u8>> = (0..6).map(|x| if x == 0 { ctl.clone() } else { ctl[..2].to_vec() }).collect();
            let t = standard_template(&controls)?;
            let taus: Vec<CMat> = t
                .inputs
                .iter()
                .zip(&angles)
                .map(|(seq, th)| {
                    let th: Vec<f64> = if reversed { th.iter().rev().copied().collect() } else { th.clone() };
                    Ok(bob_state(&circuit_unitary(seq, &th)?, &ket))
                })
                .collect::<Result<_>>()?;
            let problem = CircuitProblem::new(f.clone(), TemplateFamily::fixed(&t), SharedPair::TwoEpr)?;
            let ens = problem.payoffs(&taus)?;
            let value = match max_payoff_povm_with(&ens, PovmSolverOptions { tol: 1e-7, max_iter: 20_000 }) {
                Ok(sol) => sol.value,
                Err(Error::NonConvergence { .. }) => improve_povm(&ens, &uniform_effects(8, 6), 20_000, 0.0).1,
                Err(e) => return Err(e),
            };
            out.push(AngleCheck {
                controls: ctl.clone(),
                reversed,
                value,
            });
        }
    }
    out.sort_by(|a, b| b.value.total_cmp(&a.value));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facets::builtin_facets;
    use crate::qcore::matrix::max_abs_diff;
    use crate::qcore::ops::partial_trace_matrix;
    use rand::SeedableRng;

    #[test]
    fn rotation_examples() {
        assert!(max_abs_diff(rxz(0.0).matrix(), &identity(2)) < 1e-15);
        let q = rxz(FRAC_PI_2);
        let want = CMat::from_row_slice(2, 2, &[c(0.0), c(-1.0), c(1.0), c(0.0)]);
        assert!(max_abs_diff(q.matrix(), &want) < 1e-15);
        let ab = rxz(0.3).compose(&rxz(1.1));
        assert!(max_abs_diff(ab.matrix(), rxz(1.4).matrix()) < 1e-14);
    }

    #[test]
    fn empty_sequence_discards_qubit_one() {
        let ch = circuit_channel(&[], &[]).unwrap();
        assert_eq!(ch.kraus().len(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = crate::qcore::states::random_density(&mut rng, 4, crate::qcore::Field::Complex);
        let out = ch.apply_matrix(rho.matrix());
        let oracle = partial_trace_matrix(rho.matrix(), &[2, 2], &[1]).unwrap();
        assert!(max_abs_diff(&out, &oracle) < 1e-14);
    }

    #[test]
    fn unitary_matches_explicit_product() {
        let seq = layered_sequence(&[1, 2]);
        let th = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let u = circuit_unitary(&seq, &th).unwrap();
        let r = |t: f64| rxz_matrix(t);
        let cn1 = crate::protocol::cnot(1);
        let cn2 = crate::protocol::cnot(2);
        let oracle = kron(&r(0.5), &r(0.6)) * cn2 * kron(&r(0.3), &r(0.4)) * cn1 * kron(&r(0.1), &r(0.2));
        assert!(max_abs_diff(&u, &oracle) < 1e-12);
        let ch = circuit_channel(&seq, &th).unwrap();
        assert_eq!(ch.kraus().len(), 2);
        assert!(circuit_unitary(&seq, &th[..5]).is_err());
    }

    #[test]
    fn bob_state_is_partial_trace() {
        let u = circuit_unitary(&layered_sequence(&[2]), &[0.7, 0.2, 1.3, 2.9]).unwrap();
        let ket = SharedPair::TwoEpr.ket();
        let v = kron(&u, &identity(4)) * &ket;
        let rho = &v * v.adjoint();
        let oracle = partial_trace_matrix(&rho, &[2, 8], &[1]).unwrap();
        assert!(max_abs_diff(&bob_state(&u, &ket), &oracle) < 1e-14);
    }

    #[test]
    fn standard_family_sizes() {
        let fam = TemplateFamily::standard();
        assert_eq!(fam.options[0].len(), 8);
        assert_eq!(rotations(&fam.options[0][0]), 8);
        assert!(fam.options[1..].iter().all(|o| o.len() == 4 && rotations(&o[0]) == 6));
        let a = bundled_angles().unwrap();
        assert_eq!(a.iter().map(|v| v.len()).collect::<Vec<_>>(), vec![8, 6, 6, 6, 6, 6]);
    }

    #[test]
    fn product_state_stays_classical() {
        let f = builtin_facets()[1].clone();
        let cfg = SeeSawConfig {
            restarts: 2,
            max_sweeps: 100,
            seed: 4,
            ..Default::default()
        };
        let out = optimize_circuit(&f, &TemplateFamily::standard(), SharedPair::Product, &cfg).unwrap();
        assert!(out.value <= 3.0 + 1e-6);
    }
}
