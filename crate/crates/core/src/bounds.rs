//! Almost-qutrit correction: discrimination rates → deviations ε → see-saw
//! bounds on P_RAC for four-dimensional states with Tr(ρₓΠ₃) ≥ 1 − εₓ.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{
    constrained_state_opt, seesaw, CertifiedSolution, RestartSummary, SeeSawConfig, SeeSawOutcome,
    SeeSawProblem,
};
use crate::qcore::matrix::{c, diag, identity, random_hermitian, trace_prod_re, CMat, Field};
use crate::qcore::spectral::eig_herm_unchecked;
use crate::stats::combine_sigma;

/// Dimension of the relaxed state space.
pub const STATE_DIM: usize = 4;
const BUNDLED_RATES: &str = include_str!("../data/bundled_rates.json");

pub fn bundled_rates_json() -> &'static str {
    BUNDLED_RATES
}

/// Π₃ = diag(1, 1, 1, 0).
pub fn pi3() -> CMat {
    diag(&[1.0, 1.0, 1.0, 0.0])
}

/// Flag-test success rates r₁…r₅ and their standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationRates {
    pub r: [f64; 5],
    pub sigma: [f64; 5],
}

impl DiscriminationRates {
    pub fn new(r: [f64; 5], sigma: [f64; 5]) -> Result<Self> {
        let rates = Self { r, sigma };
        rates.validate()?;
        Ok(rates)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &r) in self.r.iter().enumerate() {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::validation(format!("r{}", i + 1), format!("{r} outside [0, 1]")));
            }
        }
        for (i, &s) in self.sigma.iter().enumerate() {
            if !(s >= 0.0) {
                return Err(Error::validation(format!("sigma{}", i + 1), format!("{s} is negative")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rates: Self = serde_json::from_str(text)?;
        rates.validate()?;
        Ok(rates)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Rates and σ used for the reproduction run.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_RATES).expect("bundled rates are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Raw,
    Inflated { k: f64 },
}

/// Per-state deviations ε₁…ε₄ from the three-dimensional subspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationVector {
    pub eps: [f64; 4],
    pub provenance: Provenance,
}

impl DeviationVector {
    pub fn new(eps: [f64; 4], provenance: Provenance) -> Result<Self> {
        if eps.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::invalid(format!("deviations {eps:?} must lie in [0, 1]")));
        }
        Ok(Self { eps, provenance })
    }

    pub fn uniform(eps: f64) -> Result<Self> {
        Self::new([eps; 4], Provenance::Raw)
    }
}

fn clamp_unit(label: &str, value: f64) -> f64 {
    if value < 0.0 {
        log::warn!("{label} = {value:.6} is negative; clamped to 0");
    } else if value > 1.0 {
        log::warn!("{label} = {value:.6} exceeds 1; clamped to 1");
    }
    value.clamp(0.0, 1.0)
}

/// εₓ = 2 − rₓ − r₅, clamped to [0, 1].
pub fn deviations_from_rates(rates: &DiscriminationRates) -> DeviationVector {
    let r5 = rates.r[4];
    let eps = std::array::from_fn(|x| clamp_unit(&format!("eps{}", x + 1), 2.0 - rates.r[x] - r5));
    DeviationVector {
        eps,
        provenance: Provenance::Raw,
    }
}

/// εₓ + k·√(σₓ² + σ₅²), clamped to [0, 1].
pub fn inflate(raw: &DeviationVector, sigma_x: [f64; 4], sigma5: f64, k: f64) -> Result<DeviationVector> {
    if !(k >= 0.0) {
        return Err(Error::invalid(format!("σ multiplier k = {k} must be nonnegative")));
    }
    let eps = std::array::from_fn(|x| {
        clamp_unit(
            &format!("eps{}", x + 1),
            raw.eps[x] + k * combine_sigma(sigma_x[x], sigma5),
        )
    });
    Ok(DeviationVector {
        eps,
        provenance: Provenance::Inflated { k },
    })
}

/// Raw deviations from `rates`, inflated by k standard deviations.
pub fn inflated_deviations(rates: &DiscriminationRates, k: f64) -> Result<DeviationVector> {
    let raw = deviations_from_rates(rates);
    let sx = [rates.sigma[0], rates.sigma[1], rates.sigma[2], rates.sigma[3]];
    inflate(&raw, sx, rates.sigma[4], k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        }
    }
}

/// Four states and two binary measurements {P_y, I − P_y} (P_y is outcome 0).
#[derive(Debug, Clone)]
pub struct RacStrategy {
    pub states: Vec<CMat>,
    pub projectors: Vec<CMat>,
}

/// Bit y (0-based) of RAC input x = 2x₁ + x₂.
pub fn rac_bit(x: usize, y: usize) -> usize {
    if y == 0 {
        x >> 1
    } else {
        x & 1
    }
}

/// P_RAC = (1/8) Σ_{x,y} Tr(ρₓ M_{x_y|y}).
pub fn rac_value(s: &RacStrategy) -> f64 {
    let mut total = 0.0;
    for (x, rho) in s.states.iter().enumerate() {
        for (y, p) in s.projectors.iter().enumerate() {
            let hit = trace_prod_re(rho, p);
            total += if rac_bit(x, y) == 0 { hit } else { rho.trace().re - hit };
        }
    }
    total / 8.0
}

/// The almost-qutrit see-saw: states by [`constrained_state_opt`],
/// measurements by sign projectors.
#[derive(Debug, Clone)]
pub struct AlmostQutritRac {
    pub eps: DeviationVector,
    pub sense: Sense,
    proj: CMat,
}

impl AlmostQutritRac {
    pub fn new(eps: DeviationVector, sense: Sense) -> Self {
        Self {
            eps,
            sense,
            proj: pi3(),
        }
    }

    fn measurement_step(&self, s: &mut RacStrategy) {
        let sign = self.sense.sign();
        for y in 0..2 {
            let mut o = CMat::zeros(STATE_DIM, STATE_DIM);
            for (x, rho) in s.states.iter().enumerate() {
                let w = if rac_bit(x, y) == 0 { sign } else { -sign };
                o += rho * c(w);
            }
            s.projectors[y] = eig_herm_unchecked(&o).projector(|l| l > 0.0);
        }
    }

    fn state_step(&self, s: &mut RacStrategy) -> Result<()> {
        let sign = self.sense.sign();
        for x in 0..4 {
            let mut a = CMat::zeros(STATE_DIM, STATE_DIM);
            for (y, p) in s.projectors.iter().enumerate() {
                let m = if rac_bit(x, y) == 0 {
                    p.clone()
                } else {
                    identity(STATE_DIM) - p
                };
                a += m * c(sign / 8.0);
            }
            s.states[x] = constrained_state_opt(&a, &self.proj, self.eps.eps[x])?.rho;
        }
        Ok(())
    }
}

impl SeeSawProblem for AlmostQutritRac {
    type State = RacStrategy;

    fn init(&self, rng: &mut ChaCha8Rng, cfg: &SeeSawConfig) -> Result<RacStrategy> {
        let projectors = (0..2)
            .map(|_| eig_herm_unchecked(&random_hermitian(rng, STATE_DIM, cfg.field)).projector(|l| l > 0.0))
            .collect();
        let mut s = RacStrategy {
            states: vec![identity(STATE_DIM) * c(0.25); 4],
            projectors,
        };
        self.state_step(&mut s)?;
        Ok(s)
    }

    fn blocks(&self) -> usize {
        2
    }

    fn step(&self, block: usize, s: &mut RacStrategy) -> Result<()> {
        match block {
            0 => {
                self.measurement_step(s);
                Ok(())
            }
            _ => self.state_step(s),
        }
    }

    fn objective(&self, s: &RacStrategy) -> f64 {
        self.sense.sign() * rac_value(s)
    }
}

/// A corrected bound with its provenance.
#[derive(Debug, Clone, Serialize)]
pub struct BoundResult {
    pub value: f64,
    pub sense: Sense,
    pub field: Field,
    pub eps: DeviationVector,
    pub config: SeeSawConfig,
    pub best_restart: usize,
    pub restarts: Vec<RestartSummary>,
    /// Restarts within 1e-4 of the best.
    pub agreeing_restarts: usize,
    #[serde(skip)]
    pub solution: Option<CertifiedSolution<RacStrategy>>,
}

fn run_bound(eps: &DeviationVector, cfg: &SeeSawConfig, sense: Sense) -> Result<BoundResult> {
    let problem = AlmostQutritRac::new(*eps, sense);
    let out: SeeSawOutcome<RacStrategy> = seesaw(&problem, cfg)?;
    let agreeing = out.agreeing(1e-4);
    let sign = sense.sign();
    let mut restarts = out.restarts;
    for r in restarts.iter_mut() {
        r.value *= sign;
    }
    let mut solution = out.best;
    solution.value *= sign;
    Ok(BoundResult {
        value: solution.value,
        sense,
        field: cfg.field,
        eps: *eps,
        config: *cfg,
        best_restart: out.best_index,
        restarts,
        agreeing_restarts: agreeing,
        solution: Some(solution),
    })
}

/// Largest P_RAC found for almost-qutrit states (an upper benchmark for
/// qubit-entanglement strategies).
pub fn corrected_upper_bound(eps: &DeviationVector, cfg: &SeeSawConfig) -> Result<BoundResult> {
    run_bound(eps, cfg, Sense::Maximize)
}

/// Smallest P_RAC found under the same constraints.
pub fn corrected_lower_bound(eps: &DeviationVector, cfg: &SeeSawConfig) -> Result<BoundResult> {
    run_bound(eps, cfg, Sense::Minimize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_rates_give_zero() {
        let r = DiscriminationRates::new([1.0; 5], [0.0; 5]).unwrap();
        assert_eq!(deviations_from_rates(&r).eps, [0.0; 4]);
    }

    #[test]
    fn printed_rate_arithmetic() {
        let r = DiscriminationRates::new([0.9990, 0.9994, 0.9988, 0.9993, 0.9977], [0.0; 5]).unwrap();
        assert!((deviations_from_rates(&r).eps[0] - 0.0033).abs() < 1e-12);
    }

    #[test]
    fn half_rates_clamp_to_one() {
        let r = DiscriminationRates::new([0.5; 5], [0.0; 5]).unwrap();
        assert_eq!(deviations_from_rates(&r).eps, [1.0; 4]);
        let r = DiscriminationRates::new([1.0, 1.0, 1.0, 1.0, 0.9], [0.0; 5]).unwrap();
        let e = deviations_from_rates(&r);
        assert!((e.eps[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn inflation_identities() {
        let raw = DeviationVector::new([0.001, 0.002, 0.003, 0.004], Provenance::Raw).unwrap();
        assert_eq!(inflate(&raw, [0.1; 4], 0.2, 0.0).unwrap().eps, raw.eps);
        assert_eq!(inflate(&raw, [0.0; 4], 0.0, 5.0).unwrap().eps, raw.eps);
        assert!(inflate(&raw, [0.0; 4], 0.0, -1.0).is_err());
    }

    #[test]
    fn bad_rates_rejected() {
        assert!(DiscriminationRates::new([1.1, 1.0, 1.0, 1.0, 1.0], [0.0; 5]).is_err());
        assert!(DiscriminationRates::from_json(r#"{"r":[1,1,1,1],"sigma":[0,0,0,0,0]}"#).is_err());
    }

    #[test]
    fn eps_one_reaches_one_and_zero() {
        let cfg = SeeSawConfig {
            restarts: 4,
            seed: 3,
            ..Default::default()
        };
        let e = DeviationVector::uniform(1.0).unwrap();
        assert!((corrected_upper_bound(&e, &cfg).unwrap().value - 1.0).abs() < 1e-6);
        assert!(corrected_lower_bound(&e, &cfg).unwrap().value.abs() < 1e-6);
    }
}
