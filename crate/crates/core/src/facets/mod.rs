//! Facet inequalities of the (6,4,1,6) prepare-and-measure scenario:
//! classical bounds, entanglement-assisted lower bounds and a rotation/CNOT
//! circuit template.

pub mod circuit;
pub mod quantum;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use circuit::{
    circuit_channel, circuit_unitary, bundled_angles_csv, evaluate_bundled_angles, layered_sequence, optimize_circuit, bundled_angles, parse_angles, standard_template, rxz, CircuitOutcome,
    AngleCheck, CircuitProblem, CircuitState, CircuitTemplate, Gate, SharedPair, TemplateFamily,
};
pub use quantum::{quantum_lower_bound, FacetSeeSaw, FacetStrategy, QuantumBound, StateMode};

pub const NUM_INPUTS: usize = 6;
pub const NUM_OUTCOMES: usize = 6;

/// Σ_{b,x} c_{b,x} p(b|x) ≤ C, rows indexed by b and columns by x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetInequality {
    pub c: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical_bound: Option<f64>,
    pub label: String,
}

impl FacetInequality {
    pub fn new(c: Vec<Vec<f64>>, classical_bound: Option<f64>, label: &str) -> Result<Self> {
        let f = Self {
            c,
            classical_bound,
            label: label.to_string(),
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c.is_empty() || self.c.iter().any(|r| r.len() != self.c[0].len()) {
            return Err(Error::validation(&self.label, "coefficient matrix must be rectangular and non-empty"));
        }
        if self.c.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::validation(&self.label, "coefficients must be finite"));
        }
        if let Some(cb) = self.classical_bound {
            if !cb.is_finite() {
                return Err(Error::validation(&self.label, "classical bound must be finite"));
            }
        }
        Ok(())
    }

    pub fn outcomes(&self) -> usize {
        self.c.len()
    }

    pub fn inputs(&self) -> usize {
        self.c[0].len()
    }

    pub fn coefficient(&self, b: usize, x: usize) -> f64 {
        self.c[b][x]
    }

    pub fn transposed(&self) -> Self {
        let c = (0..self.inputs())
            .map(|x| (0..self.outcomes()).map(|b| self.c[b][x]).collect())
            .collect();
        Self {
            c,
            classical_bound: self.classical_bound,
            label: format!("{} (transposed)", self.label),
        }
    }

    /// Σ c_{b,x} p(b|x) for `p[x][b]`.
    pub fn evaluate(&self, p: &[Vec<f64>]) -> f64 {
        let mut s = 0.0;
        for (x, px) in p.iter().enumerate() {
            for (b, pb) in px.iter().enumerate() {
                s += self.c[b][x] * pb;
            }
        }
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn matrix(rows: [[f64; 6]; 6]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.to_vec()).collect()
}

/// The three facets c⁽¹⁾, c⁽²⁾, c⁽³⁾ with C = 3, 3, 6.
pub fn builtin_facets() -> [FacetInequality; 3] {
    let c1 = [
        [-1., 0., 0., 0., 0., 1.],
        [-1., 0., 0., 0., 1., 0.],
        [-1., 0., 0., 1., 0., 0.],
        [-1., 0., 1., 0., 0., 0.],
        [-1., 1., 0., 0., 0., 0.],
        [0., 0., 0., 0., 0., 0.],
    ];
    let c2 = [
        [-1., -1., 0., 0., 0., 1.],
        [-1., -1., 0., 0., 1., 0.],
        [-1., -1., 0., 1., 0., 0.],
        [-1., 0., 1., 0., 0., 0.],
        [0., -1., 1., 0., 0., 0.],
        [0., 0., 0., 0., 0., 0.],
    ];
    let c3 = [
        [-2., 0., 0., 0., 0., 2.],
        [-2., 0., 0., 0., 2., 0.],
        [-2., 0., 0., 2., 0., 0.],
        [-2., 1., 1., 0., 0., 0.],
        [-1., 0., 1., 1., 1., 1.],
        [0., 0., 0., 0., 0., 0.],
    ];
    [
        FacetInequality { c: matrix(c1), classical_bound: Some(3.0), label: "facet 1".into() },
        FacetInequality { c: matrix(c2), classical_bound: Some(3.0), label: "facet 2".into() },
        FacetInequality { c: matrix(c3), classical_bound: Some(6.0), label: "facet 3".into() },
    ]
}

/// A deterministic classical strategy: message e(x), guess g(m).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub encoding: Vec<usize>,
    pub decoding: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalOptimum {
    pub value: f64,
    pub message_dim: usize,
    pub strategy: DeterministicStrategy,
}

fn encoding_of(mut index: usize, inputs: usize, d: usize) -> Vec<usize> {
    let mut e = vec![0; inputs];
    for slot in e.iter_mut() {
        *slot = index % d;
        index /= d;
    }
    e
}

/// Best decoding for a fixed encoding: each message guesses the outcome with
/// the largest summed coefficient over the inputs mapped to it.
fn best_decoding(f: &FacetInequality, e: &[usize], d: usize) -> (f64, Vec<usize>) {
    let mut total = 0.0;
    let mut g = vec![0; d];
    for (m, gm) in g.iter_mut().enumerate() {
        let mut best = (f64::NEG_INFINITY, 0);
        for b in 0..f.outcomes() {
            let s: f64 = e.iter().enumerate().filter(|(_, &em)| em == m).map(|(x, _)| f.c[b][x]).sum();
            if s > best.0 {
                best = (s, b);
            }
        }
        total += best.0;
        *gm = best.1;
    }
    (total, g)
}

/// Maximum of Σₓ c_{g(e(x)),x} over all encodings e and decodings g with a
/// d-level message. Shared randomness mixes deterministic strategies and
/// cannot exceed this value.
pub fn classical_bound(f: &FacetInequality, d: usize) -> Result<ClassicalOptimum> {
    if d == 0 {
        return Err(Error::invalid("message dimension must be at least 1"));
    }
    f.validate()?;
    let n = f.inputs();
    let count = d
        .checked_pow(n as u32)
        .filter(|&c| c <= 1 << 28)
        .ok_or_else(|| Error::invalid("too many encodings to enumerate"))?;
    let (value, index, decoding) = (0..count)
        .into_par_iter()
        .map(|i| {
            let (v, g) = best_decoding(f, &encoding_of(i, n, d), d);
            (v, i, g)
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX, Vec::new()),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    Ok(ClassicalOptimum {
        value,
        message_dim: d,
        strategy: DeterministicStrategy {
            encoding: encoding_of(index, n, d),
            decoding,
        },
    })
}

/// Which reading of the coefficient matrix reproduces the stated classical
/// bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    RowsAreOutcomes,
    RowsAreInputs,
    Both,
    Neither,
}

pub fn check_orientation(f: &FacetInequality, d: usize) -> Result<Orientation> {
    let stated = f
        .classical_bound
        .ok_or_else(|| Error::validation(&f.label, "no classical bound to check against"))?;
    let direct = (classical_bound(f, d)?.value - stated).abs() < 1e-9;
    let transposed = (classical_bound(&f.transposed(), d)?.value - stated).abs() < 1e-9;
    Ok(match (direct, transposed) {
        (true, true) => Orientation::Both,
        (true, false) => Orientation::RowsAreOutcomes,
        (false, true) => Orientation::RowsAreInputs,
        (false, false) => Orientation::Neither,
    })
}

/// Loads a facet file and warns when the stated bound only matches the
/// transposed matrix.
pub fn load_facet(path: &Path, d: usize) -> Result<FacetInequality> {
    let f = FacetInequality::load(path)?;
    if f.classical_bound.is_some() && f.outcomes() == f.inputs() {
        match check_orientation(&f, d)? {
            Orientation::RowsAreInputs => log::warn!(
                "{}: stated classical bound matches the transposed matrix; rows should index outcomes",
                f.label
            ),
            Orientation::Neither => log::warn!("{}: stated classical bound is not reproduced", f.label),
            _ => {}
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(f: &FacetInequality, d: usize) -> f64 {
        let n = f.inputs();
        let nb = f.outcomes();
        let mut best = f64::NEG_INFINITY;
        for ei in 0..d.pow(n as u32) {
            let e = encoding_of(ei, n, d);
            for gi in 0..nb.pow(d as u32) {
                let g = encoding_of(gi, d, nb);
                let v: f64 = (0..n).map(|x| f.c[g[e[x]]][x]).sum();
                best = best.max(v);
            }
        }
        best
    }

    #[test]
    fn builtin_shape() {
        for f in builtin_facets() {
            assert_eq!(f.c.len(), 6);
            assert!(f.c[5].iter().all(|&v| v == 0.0));
        }
        assert!(builtin_facets()[2].c.iter().flatten().any(|v| v.abs() == 2.0));
    }

    #[test]
    fn decomposition_matches_brute_force() {
        for f in builtin_facets() {
            for d in 1..=3 {
                let fast = classical_bound(&f, d).unwrap().value;
                assert_eq!(fast, brute_force(&f, d), "{} d={d}", f.label);
            }
        }
    }

    #[test]
    fn stated_bounds_and_orientation() {
        for f in builtin_facets() {
            let opt = classical_bound(&f, 4).unwrap();
            assert_eq!(Some(opt.value), f.classical_bound);
            let s = &opt.strategy;
            let v: f64 = (0..6).map(|x| f.c[s.decoding[s.encoding[x]]][x]).sum();
            assert_eq!(v, opt.value);
            let o = check_orientation(&f, 4).unwrap();
            assert!(matches!(o, Orientation::RowsAreOutcomes | Orientation::Both));
        }
    }

    #[test]
    fn zero_matrix_and_bad_input() {
        let f = FacetInequality::new(vec![vec![0.0; 6]; 6], None, "zero").unwrap();
        assert_eq!(classical_bound(&f, 4).unwrap().value, 0.0);
        assert!(classical_bound(&f, 0).is_err());
        assert!(FacetInequality::new(vec![vec![f64::NAN; 6]; 6], None, "nan").is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = builtin_facets()[1].clone();
        assert_eq!(FacetInequality::from_json(&f.to_json().unwrap()).unwrap(), f);
    }
}
