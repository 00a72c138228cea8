//! Round-averaged score estimator, Azuma-Hoeffding p-value bound, Poisson
//! bootstrap and σ combination.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{BinningSpec, MeasurementLabel, NUM_ENCODINGS, NUM_PROJECTORS};
use crate::error::{Error, Result};
use crate::protocol::TaskSpec;

/// Event counts per (measurement, encoding, projector).
#[derive(Debug, Clone, PartialEq)]
pub struct CountsTable {
    /// `cells[measurement][encoding][projector]`
    pub cells: [[[u64; NUM_PROJECTORS]; NUM_ENCODINGS]; 3],
    /// Total rounds N, when known independently of the counts.
    pub rounds: Option<u64>,
    /// Nominal rounds per (x, y) cell.
    pub rounds_per_cell: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct CountsJson {
    measurements: BTreeMap<String, BTreeMap<String, [u64; NUM_PROJECTORS]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rounds_per_cell: Option<u64>,
}

impl CountsTable {
    pub fn zeros() -> Self {
        Self {
            cells: [[[0; NUM_PROJECTORS]; NUM_ENCODINGS]; 3],
            rounds: None,
            rounds_per_cell: None,
        }
    }

    pub fn row(&self, m: MeasurementLabel, encoding: usize) -> &[u64; NUM_PROJECTORS] {
        &self.cells[m.index()][encoding]
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().flatten().sum()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: CountsJson = serde_json::from_str(text)?;
        let mut t = Self::zeros();
        t.rounds_per_cell = raw.rounds_per_cell;
        for m in MeasurementLabel::ALL {
            let rows = raw
                .measurements
                .get(m.as_str())
                .ok_or_else(|| Error::validation(m.as_str(), "measurement missing"))?;
            for x in 0..NUM_ENCODINGS {
                let key = format!("U{}", x + 1);
                let row = rows
                    .get(&key)
                    .ok_or_else(|| Error::validation(format!("({}, {key})", m.as_str()), "row missing"))?;
                t.cells[m.index()][x] = *row;
            }
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut measurements = BTreeMap::new();
        for m in MeasurementLabel::ALL {
            let rows = (0..NUM_ENCODINGS)
                .map(|x| (format!("U{}", x + 1), self.cells[m.index()][x]))
                .collect();
            measurements.insert(m.as_str().to_string(), rows);
        }
        Ok(serde_json::to_string_pretty(&CountsJson {
            measurements,
            rounds_per_cell: self.rounds_per_cell,
        })?)
    }

    /// Counts per outcome class b of setting (y, x) under `binning`.
    pub fn class_counts(&self, binning: &BinningSpec, y: usize, x: usize) -> Vec<u64> {
        let row = &self.cells[y][x];
        binning.classes[y]
            .iter()
            .map(|class| class.iter().map(|&k| row[k]).sum())
            .collect()
    }
}

/// P̂ = (1/N) Σ_{x,y,b} c_{bxy} n_{bxy} / p(x,y), with `task.scores[y][x][b]`
/// indexed by the binning's outcome classes of measurement y. N is the
/// table's round count if set, else the total count over the task's settings.
pub fn estimator(counts: &CountsTable, task: &TaskSpec, binning: &BinningSpec) -> Result<f64> {
    if task.num_settings() > 3 {
        return Err(Error::invalid("task has more settings than measurements"));
    }
    let mut total = 0u64;
    let mut score = 0.0;
    for (y, row) in task.scores.iter().enumerate() {
        for (x, cell) in row.iter().enumerate() {
            if x >= NUM_ENCODINGS {
                return Err(Error::invalid("task has more inputs than encodings"));
            }
            let n = counts.class_counts(binning, y, x);
            total += n.iter().sum::<u64>();
            let scored = cell.iter().any(|&s| s != 0.0);
            let p = task.priors[y][x];
            if scored && p <= 0.0 {
                return Err(Error::invalid(format!("zero prior on scored setting (x={x}, y={y})")));
            }
            for (b, &s) in cell.iter().enumerate() {
                if s != 0.0 {
                    score += s * n.get(b).copied().unwrap_or(0) as f64 / p;
                }
            }
        }
    }
    let n = counts.rounds.unwrap_or(total);
    if n == 0 {
        return Err(Error::invalid("no rounds in the scored settings"));
    }
    Ok(score / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValueInputs {
    pub n: u64,
    pub mu: f64,
    /// max_{bxy} c_{bxy}/p(x,y)
    pub c: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValue {
    pub p: f64,
    /// −2Nμ²/(c+T)², the natural log of the unclamped bound.
    pub exponent: f64,
}

/// p = exp(−2Nμ²/(c+T)²), and 1 when μ ≤ 0.
pub fn azuma_pvalue(inp: &PValueInputs) -> Result<PValue> {
    if inp.n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let range = inp.c + inp.t;
    if !(range > 0.0) {
        return Err(Error::invalid(format!("c + T = {range} must be positive")));
    }
    let exponent = -2.0 * inp.n as f64 * inp.mu * inp.mu / (range * range);
    let p = if inp.mu <= 0.0 { 1.0 } else { exponent.exp().min(1.0) };
    Ok(PValue { p, exponent })
}

/// √(σₐ² + σᵦ²).
pub fn combine_sigma(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub mean: f64,
    pub sigma: f64,
    pub n_sim: usize,
    pub seed: u64,
}

fn resample(counts: &CountsTable, rng: &mut ChaCha8Rng) -> CountsTable {
    let mut out = counts.clone();
    for cell in out.cells.iter_mut().flatten().flatten() {
        if *cell > 0 {
            let d = Poisson::new(*cell as f64).expect("positive mean");
            *cell = d.sample(rng) as u64;
        }
    }
    out.rounds = None;
    out
}

/// Mean and sample standard deviation of `f` over Poisson resamples of
/// every count. Resample i draws from stream i of a ChaCha8 generator
/// seeded with `seed`.
pub fn poisson_bootstrap<F>(counts: &CountsTable, f: F, n_sim: usize, seed: u64) -> Result<BootstrapSummary>
where
    F: Fn(&CountsTable) -> Result<f64> + Sync,
{
    if n_sim < 2 {
        return Err(Error::invalid("bootstrap needs at least two resamples"));
    }
    if counts.total() == 0 {
        return Err(Error::invalid("all counts are zero"));
    }
    let results: Vec<Result<f64>> = (0..n_sim)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            f(&resample(counts, &mut rng)).map_err(|e| Error::Resample {
                index: i,
                source: Box::new(e),
            })
        })
        .collect();
    let values = results.into_iter().collect::<Result<Vec<f64>>>()?;
    let mean = values.iter().sum::<f64>() / n_sim as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n_sim - 1) as f64;
    Ok(BootstrapSummary {
        mean,
        sigma: var.sqrt(),
        n_sim,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::InputAssignment;

    fn perfect_counts() -> CountsTable {
        let a = InputAssignment::canonical();
        let mut t = CountsTable::zeros();
        for y in 0..2 {
            for x in 0..4 {
                // positive triple = bit 0, negative triple = bit 1
                let col = if a.bit(x, y) == 0 { 6 } else { 1 };
                t.cells[y][x][col] = 100;
            }
        }
        t
    }

    #[test]
    fn all_correct_gives_one() {
        let task = TaskSpec::rac(&InputAssignment::canonical());
        let p = estimator(&perfect_counts(), &task, &BinningSpec::standard()).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_prior_rejected() {
        let mut task = TaskSpec::rac(&InputAssignment::canonical());
        task.priors[0][0] = 0.0;
        assert!(estimator(&perfect_counts(), &task, &BinningSpec::standard()).is_err());
    }

    #[test]
    fn reference_pvalue() {
        let p = azuma_pvalue(&PValueInputs {
            n: 160_000,
            mu: 0.0067,
            c: 1.0,
            t: -0.09,
        })
        .unwrap();
        let want = (-2.0 * 160_000.0 * 0.0067f64.powi(2) / 0.91f64.powi(2)).exp();
        assert!((p.p / want - 1.0).abs() < 1e-12);
        assert!((p.p / 2.9e-8 - 1.0).abs() < 0.05);
    }

    #[test]
    fn pvalue_edge_cases() {
        let base = PValueInputs {
            n: 1000,
            mu: 0.0,
            c: 1.0,
            t: 0.0,
        };
        assert_eq!(azuma_pvalue(&base).unwrap().p, 1.0);
        assert!(azuma_pvalue(&PValueInputs { t: -1.0, ..base }).is_err());
        let p1 = azuma_pvalue(&PValueInputs { mu: 0.01, ..base }).unwrap().p;
        let p2 = azuma_pvalue(&PValueInputs { mu: 0.01, n: 2000, ..base }).unwrap().p;
        assert!((p2 - p1 * p1).abs() < 1e-15);
    }

    #[test]
    fn sigma_combination() {
        assert_eq!(combine_sigma(0.0, 0.0), 0.0);
        assert_eq!(combine_sigma(3.0, 4.0), 5.0);
        let s = combine_sigma(0.0002, 0.0004);
        assert!((s - 0.000447).abs() < 1e-6);
        assert_eq!(format!("{s:.4}"), "0.0004");
    }

    #[test]
    fn bootstrap_rejects_empty_and_is_deterministic() {
        let f = |t: &CountsTable| Ok(t.total() as f64);
        assert!(poisson_bootstrap(&CountsTable::zeros(), f, 10, 1).is_err());
        let t = perfect_counts();
        let a = poisson_bootstrap(&t, f, 20, 7).unwrap();
        let b = poisson_bootstrap(&t, f, 20, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bootstrap_propagates_failure_index() {
        let t = perfect_counts();
        let r = poisson_bootstrap(&t, |_| Err(Error::invalid("boom")), 3, 0);
        assert!(matches!(r, Err(Error::Resample { index: 0, .. })));
    }

    #[test]
    fn counts_json_round_trip() {
        let mut t = perfect_counts();
        t.rounds_per_cell = Some(100);
        let back = CountsTable::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
