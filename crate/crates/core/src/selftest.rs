//! Fast invariant suite behind `eacomm selftest`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{bundled_rates_json, corrected_upper_bound, DeviationVector, DiscriminationRates};
use crate::dataio::{bin_outcomes, bundled_table_csv, BinningSpec, ExperimentTable, MeasurementLabel, ParseOptions, ValueKind};
use crate::error::Result;
use crate::facets::{builtin_facets, bundled_angles_csv, parse_angles, quantum_lower_bound, StateMode};
use crate::optim::constrained::dual_objective;
use crate::optim::{constrained_state_opt, max_payoff_povm, random_isometry, Initialization, PayoffEnsemble, SeeSawConfig};
use crate::protocol::fixtures::printed_measurement_fixtures;
use crate::protocol::{disambiguate_convention, match_basis_order, MEASUREMENT_BASIS_ORDER};
use crate::qcore::matrix::{c, max_abs_diff, random_hermitian, trace_prod_re, Field};
use crate::qcore::spectral::{numerical_rank, trace_norm};
use crate::qcore::states::random_density;
use crate::qcore::{DensityOperator, Povm, QuantumChannel};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// Text of the data fixtures the suite validates.
#[derive(Debug, Clone)]
pub struct Fixtures {
    pub table_csv: String,
    pub rates_json: String,
    pub angles_csv: String,
}

impl Fixtures {
    pub fn bundled() -> Self {
        Self {
            table_csv: bundled_table_csv().to_string(),
            rates_json: bundled_rates_json().to_string(),
            angles_csv: bundled_angles_csv().to_string(),
        }
    }
}

type Check = (bool, String);

fn fixture_table(fx: &Fixtures) -> Result<Check> {
    let t = ExperimentTable::from_csv_str(&fx.table_csv, ValueKind::Probabilities, "measured_correlations.csv", ParseOptions { row_sum_tol: 0.1 })?;
    let corr = bin_outcomes(&t, &BinningSpec::standard())?;
    let p = t.row(MeasurementLabel::M1, 0)[5];
    let r5 = corr.probs[2][4][1];
    let ok = p == 0.3209 && (r5 - 0.9977).abs() < 1e-12;
    Ok((ok, format!("(M1,U1,p6) = {p}, flag class of (MP,U5) = {r5:.4}")))
}

fn fixture_rates(fx: &Fixtures) -> Result<Check> {
    let r = DiscriminationRates::from_json(&fx.rates_json)?;
    let printed = [0.9990, 0.9994, 0.9988, 0.9993, 0.9977];
    let ok = r.r == printed;
    Ok((ok, format!("r = {:?}", r.r)))
}

fn fixture_angles(fx: &Fixtures) -> Result<Check> {
    let a = parse_angles(&fx.angles_csv)?;
    let counts: Vec<usize> = a.iter().map(|v| v.len()).collect();
    let ok = counts == [8, 6, 6, 6, 6, 6] && a.iter().flatten().all(|t| (0.0..=std::f64::consts::PI).contains(t));
    Ok((ok, format!("angle counts {counts:?}")))
}

fn measurement_fixtures() -> Result<Check> {
    let p = disambiguate_convention()?;
    let f = printed_measurement_fixtures();
    let (o1, d1) = match_basis_order(&p.measurements.observable(0), &f.m1);
    let (o2, d2) = match_basis_order(&p.measurements.observable(1), &f.m2);
    let rank = numerical_rank(&p.measurements.flag, 1e-9);
    let ok = o1 == MEASUREMENT_BASIS_ORDER && o2 == MEASUREMENT_BASIS_ORDER && d1 <= 5e-4 && d2 <= 5e-4 && rank == 2;
    Ok((ok, format!("M1 dev {d1:.2e}, M2 dev {d2:.2e}, flag rank {rank}")))
}

fn state_invariants(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst = 0.0f64;
    for dim in 2..=8 {
        for field in [Field::Real, Field::Complex] {
            let rho = random_density(rng, dim, field);
            DensityOperator::new(rho.matrix().clone(), vec![dim])?;
            worst = worst.max((crate::qcore::matrix::trace(rho.matrix()).re - 1.0).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max |Tr ρ − 1| = {worst:.1e}")))
}

fn channel_invariants(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst = 0.0f64;
    for (din, dout, anc) in [(2, 2, 2), (3, 2, 3), (4, 2, 4), (4, 2, 2)] {
        let v = random_isometry(rng, dout * anc, din, Field::Complex);
        let ch = QuantumChannel::from_isometry(&v, dout, anc)?;
        let rho = random_density(rng, din, Field::Complex);
        let out = ch.apply_matrix(rho.matrix());
        DensityOperator::new(out.clone(), vec![dout])?;
        worst = worst.max((crate::qcore::matrix::trace(&out).re - 1.0).abs());
    }
    Ok((worst <= 1e-12, format!("trace preserved to {worst:.1e}")))
}

fn helstrom(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst_gap = 0.0f64;
    let mut worst_err = 0.0f64;
    for k in 0..12 {
        let dim = 2 + k % 3;
        let p: f64 = rng.random_range(0.1..0.9);
        let r0 = random_density(rng, dim, Field::Complex).into_matrix();
        let r1 = random_density(rng, dim, Field::Complex).into_matrix();
        let a = &r0 * c(p);
        let b = &r1 * c(1.0 - p);
        let sol = max_payoff_povm(&PayoffEnsemble::new(vec![a.clone(), b.clone()])?, 1e-9)?;
        Povm::new(sol.strategy.effects().to_vec())?;
        let exact = 0.5 * (1.0 + trace_norm(&(a - b)));
        worst_err = worst_err.max((sol.value - exact).abs());
        worst_gap = worst_gap.max(sol.dual_gap.unwrap_or(f64::INFINITY));
    }
    let ok = worst_gap <= 1e-7 && worst_err <= 1e-7;
    Ok((ok, format!("max dual gap {worst_gap:.1e}, max |P − Helstrom| {worst_err:.1e}")))
}

/// min over λ ≥ 0 of the dual by a coarse grid and ternary refinement.
fn grid_dual(a: &crate::qcore::CMat, proj: &crate::qcore::CMat, eps: f64) -> f64 {
    let g = |l: f64| dual_objective(a, proj, eps, l);
    let mut hi = 1.0;
    while g(2.0 * hi) < g(hi) {
        hi *= 2.0;
    }
    hi *= 2.0;
    let n = 2000;
    let (mut best, mut arg) = (f64::INFINITY, 0.0);
    for i in 0..=n {
        let l = hi * i as f64 / n as f64;
        let v = g(l);
        if v < best {
            best = v;
            arg = l;
        }
    }
    let h = hi / n as f64;
    let (mut lo, mut up) = ((arg - h).max(0.0), arg + h);
    for _ in 0..200 {
        let m1 = lo + (up - lo) / 3.0;
        let m2 = up - (up - lo) / 3.0;
        if g(m1) < g(m2) {
            up = m2;
        } else {
            lo = m1;
        }
    }
    best.min(g(0.5 * (lo + up)))
}

fn constrained_duality(rng: &mut ChaCha8Rng) -> Result<Check> {
    let proj = crate::bounds::pi3();
    let mut worst = 0.0f64;
    for k in 0..12 {
        let field = if k % 2 == 0 { Field::Real } else { Field::Complex };
        let a = random_hermitian(rng, 4, field);
        let eps = [0.005, 0.05, 0.3][k % 3];
        let s = constrained_state_opt(&a, &proj, eps)?;
        let oracle = grid_dual(&a, &proj, eps);
        worst = worst.max((s.value - oracle).abs());
        if s.value > oracle + 1e-9 {
            return Ok((false, format!("primal {} exceeds dual {}", s.value, oracle)));
        }
        if trace_prod_re(&proj, &s.rho) < 1.0 - eps - 1e-9 {
            return Ok((false, "primal violates the weight constraint".into()));
        }
    }
    Ok((worst <= 1e-6, format!("max |primal − grid dual| = {worst:.1e}")))
}

fn protocol_invariants() -> Result<(Check, Check)> {
    let p = disambiguate_convention()?;
    let marg = p.states.bob_marginals();
    let worst = marg
        .iter()
        .map(|m| max_abs_diff(m.matrix(), marg[0].matrix()))
        .fold(0.0, f64::max);
    let overlap = p.states.flag_overlap();
    Ok((
        (worst <= 1e-10, format!("max marginal difference {worst:.1e}")),
        (overlap <= 1e-10, format!("max Tr(τ₅τₓ) = {overlap:.1e}")),
    ))
}

fn seesaw_monotone(seed: u64) -> Result<Check> {
    let cfg = SeeSawConfig {
        restarts: 4,
        seed,
        ..Default::default()
    };
    let eps = DeviationVector::uniform(0.005)?;
    let b = corrected_upper_bound(&eps, &cfg)?;
    let mut worst = b.restarts.iter().map(|r| r.max_decrease).fold(f64::NEG_INFINITY, f64::max);
    let fcfg = SeeSawConfig {
        restarts: 2,
        max_sweeps: 200,
        seed,
        init: Initialization::RandomStrategy,
        field: Field::Complex,
        ..Default::default()
    };
    let q = quantum_lower_bound(&builtin_facets()[1], 3, StateMode::Optimized, &fcfg)?;
    worst = worst.max(q.restarts.iter().map(|r| r.max_decrease).fold(f64::NEG_INFINITY, f64::max));
    Ok((worst <= 1e-9, format!("largest half-step decrease {worst:.1e}")))
}

fn run(name: &str, f: impl FnOnce() -> Result<Check>) -> CheckResult {
    let t = Instant::now();
    let (pass, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CheckResult {
        name: name.to_string(),
        pass,
        detail,
        seconds: t.elapsed().as_secs_f64(),
    }
}

pub fn run_selftest(seed: u64) -> SelftestReport {
    run_selftest_with(&Fixtures::bundled(), seed)
}

pub fn run_selftest_with(fx: &Fixtures, seed: u64) -> SelftestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = vec![
        run("fixture measured_correlations.csv", || fixture_table(fx)),
        run("fixture bundled_rates.json", || fixture_rates(fx)),
        run("fixture circuit_angles.csv", || fixture_angles(fx)),
        run("fixture printed measurements", measurement_fixtures),
        run("density operators", || state_invariants(&mut rng)),
        run("channels are CPTP", || channel_invariants(&mut rng)),
        run("POVM dual gap on Helstrom instances", || helstrom(&mut rng)),
        run("constrained eigenproblem strong duality", || constrained_duality(&mut rng)),
    ];
    let t = Instant::now();
    match protocol_invariants() {
        Ok((ns, orth)) => {
            let s = t.elapsed().as_secs_f64();
            checks.push(CheckResult { name: "no-signaling marginals".into(), pass: ns.0, detail: ns.1, seconds: s });
            checks.push(CheckResult { name: "flag orthogonality".into(), pass: orth.0, detail: orth.1, seconds: 0.0 });
        }
        Err(e) => checks.push(CheckResult {
            name: "protocol invariants".into(),
            pass: false,
            detail: format!("error: {e}"),
            seconds: t.elapsed().as_secs_f64(),
        }),
    }
    checks.push(run("see-saw monotonicity", || seesaw_monotone(seed)));
    SelftestReport { seed, checks }
}
