//! The random-access-code plus state-discrimination protocol on two shared
//! EPR pairs.
//!
//! Alice holds qubits A₁A₂, Bob holds B₁B₂. For input `x` Alice applies one
//! of five two-qubit unitaries, discards A₁ and sends A₂. Bob's effective
//! state τₓ lives on A₂⊗B₁⊗B₂ (8 dimensions, in that order).

pub mod fixtures;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::matrix::{
    c, diag, from_real_rows, identity, kron, max_abs_diff, trace_prod_re, CMat, CVec,
};
use crate::qcore::ops::{partial_trace, Factor};
use crate::qcore::spectral::{eig_herm_unchecked, sign_observable, SignProjectors, DEFAULT_ZERO_TOL};
use crate::qcore::states::phi_plus;
use crate::qcore::types::{DensityOperator, Ket, Povm, UnitaryOperator};
use crate::qcore::{ops, tensor};

pub use fixtures::{printed_measurement_fixtures, MeasurementFixtures};

/// Number of encodings (four RAC inputs plus the flag).
pub const NUM_ENCODINGS: usize = 5;
/// Zero-based index of the flag encoding U₅.
pub const FLAG_INDEX: usize = 4;
/// Subsystem order of the printed 8×8 measurement matrices, as a
/// permutation of (A₂, B₁, B₂). Identity: the printed basis is |a₂ b₁ b₂⟩.
pub const MEASUREMENT_BASIS_ORDER: [usize; 3] = [0, 1, 2];

/// How a printed operator product such as `C₁C₂` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductOrder {
    /// Ordinary matrix product: the rightmost factor acts first.
    RightToLeft,
    /// Factors act in reading order.
    LeftToRight,
}

fn pauli_x() -> CMat {
    from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

fn pauli_z() -> CMat {
    diag(&[1.0, -1.0])
}

/// CNOT on two qubits (first qubit most significant), controlled on
/// `control` ∈ {1, 2}.
pub fn cnot(control: usize) -> CMat {
    let p0 = diag(&[1.0, 0.0]);
    let p1 = diag(&[0.0, 1.0]);
    let id = identity(2);
    match control {
        1 => kron(&p0, &id) + kron(&p1, &pauli_x()),
        2 => kron(&id, &p0) + kron(&pauli_x(), &p1),
        _ => panic!("control must be 1 or 2"),
    }
}

fn product(factors: &[CMat], order: ProductOrder) -> CMat {
    let mut out = identity(factors[0].nrows());
    match order {
        ProductOrder::RightToLeft => {
            for f in factors {
                out *= f;
            }
        }
        ProductOrder::LeftToRight => {
            for f in factors.iter().rev() {
                out *= f;
            }
        }
    }
    out
}

/// The five encodings U₁…U₅ on A₁A₂.
pub fn encoding_unitaries(order: ProductOrder) -> [UnitaryOperator; NUM_ENCODINGS] {
    let id = identity(2);
    let (c1, c2) = (cnot(1), cnot(2));
    let i_x = kron(&id, &pauli_x());
    let i_z = kron(&id, &pauli_z());
    let i_zx = kron(&id, &(pauli_z() * pauli_x()));
    let mats = [
        identity(4),
        product(&[c1.clone(), c2.clone()], order),
        product(&[i_x, c1, c2.clone()], order),
        i_z,
        product(&[i_zx, c2], order),
    ];
    mats.map(|m| UnitaryOperator::new(m).expect("gate products are unitary"))
}

/// `|φ₂⟩_{A₁B₁} ⊗ |φ₂⟩_{A₂B₂}`, subsystems ordered A₁, A₂, B₁, B₂.
pub fn shared_state_ket() -> Ket {
    let pair = phi_plus(2);
    let Factor::Ket(k) = tensor(&[Factor::Ket(pair.clone()), Factor::Ket(pair)]).expect("kets")
    else {
        unreachable!()
    };
    // reorder (A1 B1 A2 B2) -> (A1 A2 B1 B2)
    let amps = k.amplitudes();
    let v = CVec::from_fn(16, |idx, _| {
        let (a1, a2, b1, b2) = ((idx >> 3) & 1, (idx >> 2) & 1, (idx >> 1) & 1, idx & 1);
        amps[(a1 << 3) | (b1 << 2) | (a2 << 1) | b2]
    });
    Ket::new(v, vec![2, 2, 2, 2]).expect("normalized")
}

pub fn shared_state() -> DensityOperator {
    shared_state_ket().to_density()
}

/// τₓ = Tr_{A₁}[(Uₓ⊗I)ψ(Uₓ⊗I)†] for zero-based encoding index `x`.
pub fn encode(x: usize, order: ProductOrder) -> Result<DensityOperator> {
    if x >= NUM_ENCODINGS {
        return Err(Error::invalid(format!("encoding index {x} out of range 0..5")));
    }
    let u = &encoding_unitaries(order)[x];
    let psi = shared_state_ket();
    let full = kron(u.matrix(), &identity(4));
    let v = full * psi.amplitudes();
    let rho = Ket::new(v, vec![2, 2, 2, 2])?.to_density();
    partial_trace(&rho, &[1, 2, 3])
}

/// The five effective states τ₁…τ₅ on A₂B₁B₂.
#[derive(Debug, Clone)]
pub struct ProtocolStates {
    pub taus: Vec<DensityOperator>,
    pub labels: Vec<String>,
    pub order: ProductOrder,
}

impl ProtocolStates {
    pub fn build(order: ProductOrder) -> Result<Self> {
        let taus = (0..NUM_ENCODINGS)
            .map(|x| encode(x, order))
            .collect::<Result<Vec<_>>>()?;
        let labels = (1..=NUM_ENCODINGS).map(|i| format!("U{i}")).collect();
        Ok(Self { taus, labels, order })
    }

    pub fn tau(&self, x: usize) -> &DensityOperator {
        &self.taus[x]
    }

    pub fn flag(&self) -> &DensityOperator {
        &self.taus[FLAG_INDEX]
    }

    /// max over x ≤ 4 of Tr(τ₅τₓ).
    pub fn flag_overlap(&self) -> f64 {
        (0..FLAG_INDEX)
            .map(|x| trace_prod_re(self.flag().matrix(), self.taus[x].matrix()))
            .fold(0.0, f64::max)
    }

    /// Bob's marginal Tr_{A₂}(τₓ) for every x.
    pub fn bob_marginals(&self) -> Vec<DensityOperator> {
        self.taus
            .iter()
            .map(|t| partial_trace(t, &[1, 2]).expect("three subsystems"))
            .collect()
    }
}

/// Assignment of the RAC encodings U₁…U₄ to bit pairs (x₁, x₂).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputAssignment {
    /// `bits[i]` is the bit pair encoded by U_{i+1}.
    pub bits: [[u8; 2]; 4],
    /// One-based index of the flag encoding; always 5.
    pub flag: usize,
}

impl InputAssignment {
    pub fn new(bits: [[u8; 2]; 4]) -> Result<Self> {
        let mut seen = [false; 4];
        for b in bits {
            if b[0] > 1 || b[1] > 1 {
                return Err(Error::invalid("bits must be 0 or 1"));
            }
            let k = (b[0] * 2 + b[1]) as usize;
            if seen[k] {
                return Err(Error::invalid("assignment is not a bijection"));
            }
            seen[k] = true;
        }
        Ok(Self { bits, flag: 5 })
    }

    /// U₁=00, U₂=01, U₃=10, U₄=11.
    pub fn canonical() -> Self {
        Self::new([[0, 0], [0, 1], [1, 0], [1, 1]]).expect("bijection")
    }

    /// Bit `x_y` (y ∈ {0,1} zero-based) of encoding `x`.
    pub fn bit(&self, x: usize, y: usize) -> u8 {
        self.bits[x][y]
    }

    /// All 24 bijections in lexicographic order of the permutation.
    pub fn all() -> Vec<Self> {
        let pairs = [[0u8, 0u8], [0, 1], [1, 0], [1, 1]];
        let mut out = Vec::with_capacity(24);
        for a in 0..4 {
            for b in 0..4 {
                for cc in 0..4 {
                    for d in 0..4 {
                        let idx = [a, b, cc, d];
                        let mut s = idx;
                        s.sort_unstable();
                        if s == [0, 1, 2, 3] {
                            out.push(Self::new(idx.map(|i| pairs[i])).expect("bijection"));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Score tensor `c_{bxy}` and setting priors `p(x,y)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskSpec {
    /// `scores[y][x][b]`
    pub scores: Vec<Vec<Vec<f64>>>,
    /// `priors[y][x]`
    pub priors: Vec<Vec<f64>>,
}

impl TaskSpec {
    pub fn new(scores: Vec<Vec<Vec<f64>>>, priors: Vec<Vec<f64>>) -> Result<Self> {
        if scores.len() != priors.len()
            || scores.iter().zip(&priors).any(|(s, p)| s.len() != p.len())
        {
            return Err(Error::invalid("score tensor and priors disagree in shape"));
        }
        let total: f64 = priors.iter().flatten().sum();
        if priors.iter().flatten().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("priors must be nonnegative and sum to 1 (sum {total})")));
        }
        Ok(Self { scores, priors })
    }

    /// The RAC game: `c_{bxy} = δ_{b,x_y}/8` over y ∈ {1,2}, four inputs,
    /// two outcomes; uniform priors 1/8.
    pub fn rac(assignment: &InputAssignment) -> Self {
        let scores = (0..2)
            .map(|y| {
                (0..4)
                    .map(|x| {
                        (0..2)
                            .map(|b| if b as u8 == assignment.bit(x, y) { 0.125 } else { 0.0 })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let priors = vec![vec![0.125; 4]; 2];
        Self { scores, priors }
    }

    pub fn num_settings(&self) -> usize {
        self.scores.len()
    }

    /// Observable coefficient `(c_{0xy} − c_{1xy})/2` of a binary setting.
    pub fn observable_coefficient(&self, x: usize, y: usize) -> f64 {
        let s = &self.scores[y][x];
        (s[0] - s[1]) / 2.0
    }

    /// Largest `c_{bxy}/p(x,y)` over scored settings.
    pub fn max_score_ratio(&self) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for (y, row) in self.scores.iter().enumerate() {
            for (x, cell) in row.iter().enumerate() {
                let p = self.priors[y][x];
                if p > 0.0 {
                    for &s in cell {
                        best = best.max(s / p);
                    }
                }
            }
        }
        best
    }
}

/// Conditional distributions `p(b|x,y)`, stored as `probs[y][x][b]`.
///
/// For the RAC settings y ∈ {0,1} outcomes are b = 0 (positive eigenspace),
/// b = 1 (negative eigenspace) and b = 2 (zero eigenspace, never scored).
/// For the flag setting y = 2 outcomes are b = 0 (not flag), b = 1 (flag).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub probs: Vec<Vec<Vec<f64>>>,
}

/// Setting index of the flag measurement in a [`CorrelationTable`].
pub const FLAG_SETTING: usize = 2;

impl CorrelationTable {
    pub fn get(&self, y: usize, x: usize, b: usize) -> Option<f64> {
        self.probs.get(y)?.get(x)?.get(b).copied()
    }

    /// `p(b=0|x,y) − p(b=1|x,y)` for every (x, y).
    pub fn delta_p(&self) -> Vec<Vec<f64>> {
        self.probs
            .iter()
            .map(|row| row.iter().map(|cell| cell[0] - cell[1]).collect())
            .collect()
    }
}

/// Average RAC success `(1/8) Σ_{y,x₁,x₂} p(b = x_y | x₁x₂, y)`.
pub fn prac(corr: &CorrelationTable, assignment: &InputAssignment) -> Result<f64> {
    let mut total = 0.0;
    for y in 0..2 {
        for x in 0..4 {
            let b = assignment.bit(x, y) as usize;
            total += corr.get(y, x, b).ok_or_else(|| {
                Error::validation(
                    format!("p(b={b}|x=U{},y={})", x + 1, y + 1),
                    "missing entry",
                )
            })?;
        }
    }
    Ok(total / 8.0)
}

/// Decoding measurements built from the eigenspaces of the payoff operators.
#[derive(Debug, Clone)]
pub struct OptimalMeasurements {
    /// Sign decompositions of Σₓ c_{x,y} τₓ for y = 1, 2.
    pub rac: [SignProjectors; 2],
    /// Projector onto supp(τ₅) (rank 2).
    pub flag: CMat,
}

impl OptimalMeasurements {
    /// ±1/0 observable M_y = P₊ − P₋ (y zero-based).
    pub fn observable(&self, y: usize) -> CMat {
        self.rac[y].observable()
    }

    pub fn flag_complement(&self) -> CMat {
        identity(self.flag.nrows()) - &self.flag
    }

    /// Three-outcome POVM {P₊, P₋, P₀} for RAC setting y.
    pub fn rac_povm(&self, y: usize) -> Result<Povm> {
        let s = &self.rac[y];
        Povm::new(vec![s.plus.clone(), s.minus.clone(), s.zero.clone()])
    }

    /// {non-flag, flag}.
    pub fn flag_povm(&self) -> Result<Povm> {
        Povm::new(vec![self.flag_complement(), self.flag.clone()])
    }
}

/// Builds M₁, M₂ from the sign structure of Σₓ c_{x,y}τₓ and the flag
/// projector onto supp(τ₅).
pub fn optimal_measurements(states: &ProtocolStates, task: &TaskSpec) -> Result<OptimalMeasurements> {
    let dim = states.tau(0).dim();
    let mut rac = Vec::with_capacity(2);
    for y in 0..2 {
        let mut payoff = CMat::zeros(dim, dim);
        for x in 0..4 {
            payoff += states.tau(x).matrix() * c(task.observable_coefficient(x, y));
        }
        rac.push(sign_observable(&payoff, DEFAULT_ZERO_TOL * 1e-2)?);
    }
    let flag = eig_herm_unchecked(states.flag().matrix()).projector(|l| l > 1e-9);
    let rac: [SignProjectors; 2] = rac.try_into().expect("two settings");
    Ok(OptimalMeasurements { rac, flag })
}

/// Born-rule correlations of the five states under the given measurements.
pub fn simulate_correlations(states: &ProtocolStates, m: &OptimalMeasurements) -> Result<CorrelationTable> {
    let mut probs = Vec::with_capacity(3);
    for y in 0..2 {
        let povm = m.rac_povm(y)?;
        probs.push(
            states
                .taus
                .iter()
                .map(|t| ops::born(t, &povm))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let flag = m.flag_povm()?;
    probs.push(
        states
            .taus
            .iter()
            .map(|t| ops::born(t, &flag))
            .collect::<Result<Vec<_>>>()?,
    );
    Ok(CorrelationTable { probs })
}

/// Named benchmark values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBounds {
    pub no_entanglement: f64,
    pub dense_coding: f64,
    pub qubit_entanglement: f64,
    pub four_dim_entanglement: f64,
}

pub fn reference_bounds() -> ReferenceBounds {
    ReferenceBounds {
        no_entanglement: 0.5,
        dense_coding: 7.0 / 8.0,
        qubit_entanglement: (5.0 + 5f64.sqrt()) / 8.0,
        four_dim_entanglement: (6.0 + 2f64.sqrt()) / 8.0,
    }
}

/// Outcome of the exhaustive search over input assignments.
#[derive(Debug, Clone)]
pub struct AssignmentSearch {
    pub best: InputAssignment,
    pub value: f64,
    /// Ideal P_RAC for each of the 24 assignments, with measurements rebuilt
    /// for each, in enumeration order.
    pub values: Vec<(InputAssignment, f64)>,
}

/// Searches the 24 bijections U₁…U₄ ↔ {0,1}², rebuilding the optimal
/// measurements for each. Ties resolve to the first in enumeration order.
pub fn assign_inputs(states: &ProtocolStates) -> Result<AssignmentSearch> {
    let mut values = Vec::with_capacity(24);
    let mut best: Option<(InputAssignment, f64)> = None;
    for a in InputAssignment::all() {
        let task = TaskSpec::rac(&a);
        let m = optimal_measurements(states, &task)?;
        let corr = simulate_correlations(states, &m)?;
        let v = prac(&corr, &a)?;
        values.push((a, v));
        if best.is_none_or(|(_, bv)| v > bv + 1e-12) {
            best = Some((a, v));
        }
    }
    let (best, value) = best.expect("24 candidates");
    Ok(AssignmentSearch { best, value, values })
}

/// Reorders the qubits of an 8×8 operator on (A₂,B₁,B₂): new subsystem k is
/// old subsystem `perm[k]`.
pub fn permute_qubits(m: &CMat, perm: [usize; 3]) -> CMat {
    let map = |idx: usize| -> usize {
        let bits = [(idx >> 2) & 1, (idx >> 1) & 1, idx & 1];
        // new index bits: new[k] = old[perm[k]]  =>  old[perm[k]] = new[k]
        let mut old = [0usize; 3];
        for k in 0..3 {
            old[perm[k]] = bits[k];
        }
        (old[0] << 2) | (old[1] << 1) | old[2]
    };
    CMat::from_fn(8, 8, |i, j| m[(map(i), map(j))])
}

/// All six qubit orderings.
pub fn qubit_orderings() -> [[usize; 3]; 6] {
    [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]]
}

/// Finds the qubit ordering under which `simulated` best matches `printed`.
/// Returns (ordering, max entrywise deviation).
pub fn match_basis_order(simulated: &CMat, printed: &CMat) -> ([usize; 3], f64) {
    qubit_orderings()
        .into_iter()
        .map(|p| (p, max_abs_diff(&permute_qubits(simulated, p), printed)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("six orderings")
}

/// The fully resolved ideal protocol.
#[derive(Debug, Clone)]
pub struct IdealProtocol {
    pub states: ProtocolStates,
    pub assignment: InputAssignment,
    pub measurements: OptimalMeasurements,
    pub correlations: CorrelationTable,
    pub prac: f64,
    pub flag_overlap: f64,
}

/// Builds the protocol under `order` and checks the perfect-discrimination
/// promise and the (6+√2)/8 value.
pub fn build_ideal(order: ProductOrder) -> Result<IdealProtocol> {
    let states = ProtocolStates::build(order)?;
    let search = assign_inputs(&states)?;
    let task = TaskSpec::rac(&search.best);
    let measurements = optimal_measurements(&states, &task)?;
    let correlations = simulate_correlations(&states, &measurements)?;
    let value = prac(&correlations, &search.best)?;
    let overlap = states.flag_overlap();
    Ok(IdealProtocol {
        states,
        assignment: search.best,
        measurements,
        correlations,
        prac: value,
        flag_overlap: overlap,
    })
}

/// Resolves the operator-product convention: returns the first convention
/// under which the flag state is orthogonal to the RAC states and the ideal
/// value is (6+√2)/8, failing loudly if none qualifies.
pub fn disambiguate_convention() -> Result<IdealProtocol> {
    let target = reference_bounds().four_dim_entanglement;
    let mut report = Vec::new();
    for order in [ProductOrder::RightToLeft, ProductOrder::LeftToRight] {
        let p = build_ideal(order)?;
        if p.flag_overlap <= 1e-10 && (p.prac - target).abs() <= 1e-9 {
            return Ok(p);
        }
        report.push(format!(
            "{order:?}: overlap {:.3e}, P_RAC {:.9}",
            p.flag_overlap, p.prac
        ));
    }
    Err(Error::Convention(report.join("; ")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::spectral::numerical_rank;

    #[test]
    fn u1_identity_and_u4_diag() {
        let u = encoding_unitaries(ProductOrder::RightToLeft);
        assert_eq!(max_abs_diff(u[0].matrix(), &identity(4)), 0.0);
        assert_eq!(max_abs_diff(u[3].matrix(), &diag(&[1.0, -1.0, 1.0, -1.0])), 0.0);
        for uu in &u {
            let d = max_abs_diff(&(uu.matrix().adjoint() * uu.matrix()), &identity(4));
            assert!(d <= 1e-12);
        }
    }

    #[test]
    fn shared_state_properties() {
        let rho = shared_state();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        let alice = partial_trace(&rho, &[0, 1]).unwrap();
        assert!(max_abs_diff(alice.matrix(), &(identity(4) * c(0.25))) < 1e-14);
        // Schmidt rank across A|B = rank of the Alice marginal
        assert_eq!(numerical_rank(alice.matrix(), 1e-12), 4);
    }

    #[test]
    fn encode_rejects_bad_index() {
        assert!(encode(5, ProductOrder::RightToLeft).is_err());
    }

    #[test]
    fn taus_have_rank_at_most_two() {
        let s = ProtocolStates::build(ProductOrder::RightToLeft).unwrap();
        for t in &s.taus {
            let ev = t.eigenvalues();
            assert!(ev[5] <= 1e-9, "third largest eigenvalue {}", ev[5]);
            assert!((t.matrix().trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_convention_breaks_orthogonality() {
        let s = ProtocolStates::build(ProductOrder::LeftToRight).unwrap();
        assert!(s.flag_overlap() > 0.1);
        let s = ProtocolStates::build(ProductOrder::RightToLeft).unwrap();
        assert!(s.flag_overlap() <= 1e-10);
    }

    #[test]
    fn uniform_and_perfect_tables() {
        let a = InputAssignment::canonical();
        let uniform = CorrelationTable {
            probs: vec![vec![vec![0.5, 0.5]; 4]; 2],
        };
        assert!((prac(&uniform, &a).unwrap() - 0.5).abs() < 1e-15);
        let perfect = CorrelationTable {
            probs: (0..2)
                .map(|y| {
                    (0..4)
                        .map(|x| {
                            let b = a.bit(x, y) as usize;
                            (0..2).map(|k| if k == b { 1.0 } else { 0.0 }).collect()
                        })
                        .collect()
                })
                .collect(),
        };
        assert!((prac(&perfect, &a).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn missing_entries_error() {
        let t = CorrelationTable {
            probs: vec![vec![vec![0.5, 0.5]; 3]; 2],
        };
        assert!(prac(&t, &InputAssignment::canonical()).is_err());
    }

    #[test]
    fn assignment_must_be_bijective() {
        assert!(InputAssignment::new([[0, 0], [0, 0], [1, 0], [1, 1]]).is_err());
        assert_eq!(InputAssignment::all().len(), 24);
    }

    #[test]
    fn reference_values() {
        let r = reference_bounds();
        assert!((r.qubit_entanglement - 0.904_508_497_187_473_7).abs() < 1e-15);
        assert_eq!(r.dense_coding, 0.875);
        assert!((r.four_dim_entanglement - 0.926_776_695_296_636_9).abs() < 1e-15);
    }

    #[test]
    fn permute_identity_is_noop() {
        let f = printed_measurement_fixtures();
        assert_eq!(max_abs_diff(&permute_qubits(&f.m1, [0, 1, 2]), &f.m1), 0.0);
    }

    #[test]
    fn ideal_value_and_printed_measurements() {
        let p = disambiguate_convention().unwrap();
        assert_eq!(p.states.order, ProductOrder::RightToLeft);
        assert!((p.prac - reference_bounds().four_dim_entanglement).abs() < 1e-9);
        assert_eq!(p.assignment, InputAssignment::canonical());
        let f = printed_measurement_fixtures();
        let (order, dev) = match_basis_order(&p.measurements.observable(0), &f.m1);
        assert_eq!(order, MEASUREMENT_BASIS_ORDER);
        assert!(dev <= 5e-4, "M1 deviation {dev}");
        let (order, dev) = match_basis_order(&p.measurements.observable(1), &f.m2);
        assert_eq!(order, MEASUREMENT_BASIS_ORDER);
        assert!(dev <= 5e-4, "M2 deviation {dev}");
        assert_eq!(crate::qcore::spectral::numerical_rank(&p.measurements.flag, 1e-9), 2);
    }
}
