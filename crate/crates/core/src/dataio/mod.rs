//! Measured correlation tables: parsing, outcome binning, discrimination
//! rates and reports.

pub mod report;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::DiscriminationRates;
use crate::error::{Error, Result};
use crate::protocol::{fixtures::printed_measurement_fixtures, CorrelationTable, IdealProtocol, ProtocolStates};
use crate::qcore::spectral::eig_herm_unchecked;
use crate::qcore::matrix::{c, CVec};
use crate::stats::CountsTable;

pub use report::{emit_report, parse_report, ConventionRecord, CriterionResult, DeltaPRow, Report, DELTA_P_FILE, REPORT_FILE, REPORT_SCHEMA};

pub const NUM_ENCODINGS: usize = 5;
pub const NUM_PROJECTORS: usize = 8;
/// Rounds per (x, y) cell implied when only probabilities are available.
pub const IMPLICIT_ROUNDS_PER_CELL: u64 = 20_000;
pub const DEFAULT_ROW_SUM_TOL: f64 = 0.01;
/// Tolerance the bundled table is loaded with (one of its rows sums to 1.09).
pub const BUNDLED_ROW_SUM_TOL: f64 = 0.1;

const BUNDLED_TABLE: &str = include_str!("../../data/measured_correlations.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MeasurementLabel {
    M1,
    M2,
    MP,
}

impl MeasurementLabel {
    pub const ALL: [MeasurementLabel; 3] = [Self::M1, Self::M2, Self::MP];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::M1 => "M1",
            Self::M2 => "M2",
            Self::MP => "MP",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "M1" => Some(Self::M1),
            "M2" => Some(Self::M2),
            "MP" => Some(Self::MP),
            _ => None,
        }
    }
}

fn parse_encoding(s: &str) -> Option<usize> {
    let n: usize = s.trim().strip_prefix('U')?.parse().ok()?;
    (1..=NUM_ENCODINGS).contains(&n).then_some(n - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Probabilities,
    Counts,
}

/// Per (measurement, encoding) rows of eight projector probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    /// `values[measurement][encoding][projector]`
    pub values: [[[f64; NUM_PROJECTORS]; NUM_ENCODINGS]; 3],
    pub kind: ValueKind,
    pub source: String,
    /// Rows accepted despite exceeding the default row-sum tolerance.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParseOptions {
    pub row_sum_tol: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            row_sum_tol: DEFAULT_ROW_SUM_TOL,
        }
    }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    measurement: String,
    encoding: String,
    p1: f64,
    p2: f64,
    p3: f64,
    p4: f64,
    p5: f64,
    p6: f64,
    p7: f64,
    p8: f64,
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    kind: ValueKind,
    #[serde(default)]
    source: String,
    measurements: BTreeMap<String, BTreeMap<String, [f64; NUM_PROJECTORS]>>,
}

fn cell_name(m: usize, x: usize) -> String {
    format!("({}, U{})", MeasurementLabel::ALL[m].as_str(), x + 1)
}

impl ExperimentTable {
    pub fn row(&self, m: MeasurementLabel, encoding: usize) -> &[f64; NUM_PROJECTORS] {
        &self.values[m.index()][encoding]
    }

    fn from_rows(
        rows: Vec<(usize, usize, [f64; NUM_PROJECTORS], String)>,
        kind: ValueKind,
        source: String,
        opts: ParseOptions,
    ) -> Result<Self> {
        let mut values = [[[0.0; NUM_PROJECTORS]; NUM_ENCODINGS]; 3];
        let mut seen = [[false; NUM_ENCODINGS]; 3];
        for (m, x, v, loc) in rows {
            if seen[m][x] {
                return Err(Error::validation(loc, format!("duplicate row {}", cell_name(m, x))));
            }
            seen[m][x] = true;
            values[m][x] = v;
        }
        for (m, row) in seen.iter().enumerate() {
            for (x, &ok) in row.iter().enumerate() {
                if !ok {
                    return Err(Error::validation(cell_name(m, x), "missing row"));
                }
            }
        }
        let mut table = Self {
            values,
            kind,
            source,
            warnings: Vec::new(),
        };
        table.validate(opts)?;
        Ok(table)
    }

    fn validate(&mut self, opts: ParseOptions) -> Result<()> {
        for (m, rows) in self.values.iter().enumerate() {
            for (x, row) in rows.iter().enumerate() {
                for (k, &v) in row.iter().enumerate() {
                    let bad = match self.kind {
                        ValueKind::Probabilities => !(0.0..=1.0).contains(&v),
                        ValueKind::Counts => !(v >= 0.0) || v.fract() != 0.0,
                    };
                    if bad {
                        return Err(Error::validation(
                            format!("{} p{}", cell_name(m, x), k + 1),
                            format!("invalid value {v}"),
                        ));
                    }
                }
                if self.kind == ValueKind::Probabilities {
                    let sum: f64 = row.iter().sum();
                    let dev = (sum - 1.0).abs();
                    if dev > opts.row_sum_tol + 1e-12 {
                        return Err(Error::validation(
                            cell_name(m, x),
                            format!("row sums to {sum:.4}, beyond tolerance {}", opts.row_sum_tol),
                        ));
                    }
                    if dev > DEFAULT_ROW_SUM_TOL + 1e-12 {
                        self.warnings
                            .push(format!("{} sums to {sum:.4}", cell_name(m, x)));
                    }
                }
            }
        }
        Ok(())
    }

    /// CSV with header `measurement,encoding,p1,…,p8`.
    pub fn from_csv_str(text: &str, kind: ValueKind, source: &str, opts: ParseOptions) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, rec) in reader.deserialize::<CsvRow>().enumerate() {
            let line = i + 2;
            let r = rec.map_err(|e| Error::validation(format!("line {line}"), e.to_string()))?;
            let m = MeasurementLabel::parse(&r.measurement).ok_or_else(|| {
                Error::validation(format!("line {line}, column measurement"), format!("unknown label {:?}", r.measurement))
            })?;
            let x = parse_encoding(&r.encoding).ok_or_else(|| {
                Error::validation(format!("line {line}, column encoding"), format!("unknown label {:?}", r.encoding))
            })?;
            let v = [r.p1, r.p2, r.p3, r.p4, r.p5, r.p6, r.p7, r.p8];
            rows.push((m.index(), x, v, format!("line {line}")));
        }
        Self::from_rows(rows, kind, source.to_string(), opts)
    }

    /// JSON `{"kind": …, "measurements": {"M1": {"U1": [8 values]}}}`.
    pub fn from_json_str(text: &str, opts: ParseOptions) -> Result<Self> {
        let raw: TableJson = serde_json::from_str(text)?;
        let mut rows = Vec::new();
        for (mk, enc) in &raw.measurements {
            let m = MeasurementLabel::parse(mk)
                .ok_or_else(|| Error::validation(format!("measurements.{mk}"), "unknown measurement"))?;
            for (xk, v) in enc {
                let x = parse_encoding(xk)
                    .ok_or_else(|| Error::validation(format!("measurements.{mk}.{xk}"), "unknown encoding"))?;
                rows.push((m.index(), x, *v, format!("measurements.{mk}.{xk}")));
            }
        }
        Self::from_rows(rows, raw.kind, raw.source, opts)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["measurement", "encoding", "p1", "p2", "p3", "p4", "p5", "p6", "p7", "p8"])?;
        for m in MeasurementLabel::ALL {
            for x in 0..NUM_ENCODINGS {
                let mut rec = vec![m.as_str().to_string(), format!("U{}", x + 1)];
                rec.extend(self.values[m.index()][x].iter().map(|v| v.to_string()));
                w.write_record(&rec)?;
            }
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
            .map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut measurements = BTreeMap::new();
        for m in MeasurementLabel::ALL {
            let rows = (0..NUM_ENCODINGS)
                .map(|x| (format!("U{}", x + 1), self.values[m.index()][x]))
                .collect();
            measurements.insert(m.as_str().to_string(), rows);
        }
        Ok(serde_json::to_string_pretty(&TableJson {
            kind: self.kind,
            source: self.source.clone(),
            measurements,
        })?)
    }

    /// Counts, taken verbatim for count tables and as round(p·N) with
    /// N = [`IMPLICIT_ROUNDS_PER_CELL`] for probability tables.
    pub fn to_counts(&self) -> CountsTable {
        let mut t = CountsTable::zeros();
        let scale = match self.kind {
            ValueKind::Probabilities => IMPLICIT_ROUNDS_PER_CELL as f64,
            ValueKind::Counts => 1.0,
        };
        for (m, rows) in self.values.iter().enumerate() {
            for (x, row) in rows.iter().enumerate() {
                for (k, &v) in row.iter().enumerate() {
                    t.cells[m][x][k] = (v * scale).round() as u64;
                }
            }
        }
        if self.kind == ValueKind::Probabilities {
            t.rounds_per_cell = Some(IMPLICIT_ROUNDS_PER_CELL);
        }
        t
    }

    /// Row-normalized probabilities of a count table.
    pub fn from_counts(counts: &CountsTable, source: &str) -> Result<Self> {
        let mut values = [[[0.0; NUM_PROJECTORS]; NUM_ENCODINGS]; 3];
        for (m, rows) in counts.cells.iter().enumerate() {
            for (x, row) in rows.iter().enumerate() {
                let total: u64 = row.iter().sum();
                if total == 0 {
                    return Err(Error::validation(cell_name(m, x), "row has no counts"));
                }
                for (k, &n) in row.iter().enumerate() {
                    values[m][x][k] = n as f64 / total as f64;
                }
            }
        }
        Self::from_rows(
            values
                .iter()
                .enumerate()
                .flat_map(|(m, rows)| rows.iter().enumerate().map(move |(x, v)| (m, x, *v, cell_name(m, x))))
                .collect(),
            ValueKind::Probabilities,
            source.to_string(),
            ParseOptions::default(),
        )
    }
}

/// Reads a CSV or JSON table (chosen by extension, CSV otherwise). JSON
/// tables carry their own kind; CSV values are read as `csv_kind`.
pub fn parse_table(path: &Path, csv_kind: ValueKind, opts: ParseOptions) -> Result<ExperimentTable> {
    let text = std::fs::read_to_string(path)?;
    let source = path.display().to_string();
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            let mut t = ExperimentTable::from_json_str(&text, opts)?;
            if t.source.is_empty() {
                t.source = source;
            }
            Ok(t)
        }
        _ => ExperimentTable::from_csv_str(&text, csv_kind, &source, opts),
    }
}

/// The bundled measured-correlation table, verbatim.
pub fn bundled_table() -> ExperimentTable {
    ExperimentTable::from_csv_str(
        BUNDLED_TABLE,
        ValueKind::Probabilities,
        "bundled:measured_correlations.csv",
        ParseOptions {
            row_sum_tol: BUNDLED_ROW_SUM_TOL,
        },
    )
    .expect("bundled table is valid")
}

pub fn bundled_table_csv() -> &'static str {
    BUNDLED_TABLE
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroPolicy {
    /// The zero-eigenspace class is a separate outcome that never scores.
    CountAsFailure,
    /// The zero-eigenspace class is dropped and the rest renormalized.
    Discard,
}

/// Partition of the eight projectors of each measurement into outcome
/// classes. Class b is outcome b of the corresponding correlation setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec {
    /// `classes[measurement][b]` lists projector indices (0-based).
    pub classes: [Vec<Vec<usize>>; 3],
    pub zero_policy: ZeroPolicy,
}

impl BinningSpec {
    /// M1/M2: b=0 positive triple (p6–p8), b=1 negative triple (p1–p3),
    /// b=2 zero pair (p4, p5). MP: b=0 the six non-flag projectors, b=1 the
    /// flag pair p4, p5.
    pub fn standard() -> Self {
        let rac = vec![vec![5, 6, 7], vec![0, 1, 2], vec![3, 4]];
        Self {
            classes: [rac.clone(), rac, vec![vec![0, 1, 2, 5, 6, 7], vec![3, 4]]],
            zero_policy: ZeroPolicy::CountAsFailure,
        }
    }

    /// Same partition with the flag class replaced by `flag` (0-based).
    pub fn with_flag(mut self, flag: &[usize]) -> Self {
        let rest = (0..NUM_PROJECTORS).filter(|k| !flag.contains(k)).collect();
        self.classes[2] = vec![rest, flag.to_vec()];
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (m, classes) in self.classes.iter().enumerate() {
            let mut seen = [0usize; NUM_PROJECTORS];
            for k in classes.iter().flatten() {
                if *k >= NUM_PROJECTORS {
                    return Err(Error::validation(
                        format!("binning {}", MeasurementLabel::ALL[m].as_str()),
                        format!("projector index {k} out of range"),
                    ));
                }
                seen[*k] += 1;
            }
            if seen.iter().any(|&n| n != 1) {
                return Err(Error::validation(
                    format!("binning {}", MeasurementLabel::ALL[m].as_str()),
                    "classes must cover each projector exactly once",
                ));
            }
        }
        Ok(())
    }
}

/// Class sums p(b|x,y) for every measurement and encoding.
pub fn bin_outcomes(t: &ExperimentTable, spec: &BinningSpec) -> Result<CorrelationTable> {
    spec.validate()?;
    let probs = spec
        .classes
        .iter()
        .enumerate()
        .map(|(m, classes)| {
            t.values[m]
                .iter()
                .map(|row| {
                    let mut p: Vec<f64> = classes.iter().map(|cl| cl.iter().map(|&k| row[k]).sum()).collect();
                    if m < 2 && spec.zero_policy == ZeroPolicy::Discard && p.len() == 3 {
                        let kept = p[0] + p[1];
                        p = if kept > 0.0 { vec![p[0] / kept, p[1] / kept] } else { vec![0.5, 0.5] };
                    }
                    p
                })
                .collect()
        })
        .collect();
    Ok(CorrelationTable { probs })
}

/// rₓ = non-flag probability for U₁…U₄ and r₅ = flag probability for U₅,
/// using the flag class of `spec`. σ follows from binomial statistics with
/// the row's count total, or the implicit rounds per cell for probability
/// tables.
pub fn discrimination_rates(t: &ExperimentTable, spec: &BinningSpec) -> Result<DiscriminationRates> {
    let mp = MeasurementLabel::MP.index();
    let (probs, rounds) = match t.kind {
        ValueKind::Probabilities => (t.clone(), [IMPLICIT_ROUNDS_PER_CELL as f64; NUM_ENCODINGS]),
        ValueKind::Counts => {
            let counts = t.to_counts();
            let rounds = std::array::from_fn(|x| counts.cells[mp][x].iter().sum::<u64>() as f64);
            (ExperimentTable::from_counts(&counts, &t.source)?, rounds)
        }
    };
    let corr = bin_outcomes(&probs, spec)?;
    let r: [f64; 5] = std::array::from_fn(|x| {
        let p = if x < 4 { corr.probs[mp][x][0] } else { corr.probs[mp][x][1] };
        p.clamp(0.0, 1.0)
    });
    let sigma = std::array::from_fn(|x| (r[x] * (1.0 - r[x]) / rounds[x]).sqrt());
    DiscriminationRates::new(r, sigma)
}

/// Noise-free table of the ideal protocol. Each outcome class of `spec` is
/// split into rank-one projectors of the corresponding ideal measurement.
pub fn simulate_table(ideal: &IdealProtocol, spec: &BinningSpec) -> Result<ExperimentTable> {
    spec.validate()?;
    let m = &ideal.measurements;
    let class_projectors = [
        vec![m.rac[0].plus.clone(), m.rac[0].minus.clone(), m.rac[0].zero.clone()],
        vec![m.rac[1].plus.clone(), m.rac[1].minus.clone(), m.rac[1].zero.clone()],
        vec![m.flag_complement(), m.flag.clone()],
    ];
    let mut values = [[[0.0; NUM_PROJECTORS]; NUM_ENCODINGS]; 3];
    for (y, projs) in class_projectors.iter().enumerate() {
        if projs.len() != spec.classes[y].len() {
            return Err(Error::validation(
                format!("binning {}", MeasurementLabel::ALL[y].as_str()),
                "class count does not match the ideal measurement",
            ));
        }
        for (p, cols) in projs.iter().zip(&spec.classes[y]) {
            let e = eig_herm_unchecked(p);
            let vecs: Vec<CVec> = (0..e.dim()).filter(|&i| e.values[i] > 0.5).map(|i| e.vector(i)).collect();
            if vecs.len() != cols.len() {
                return Err(Error::validation(
                    format!("binning {}", MeasurementLabel::ALL[y].as_str()),
                    format!("class of {} projectors has rank {}", cols.len(), vecs.len()),
                ));
            }
            for (v, &k) in vecs.iter().zip(cols) {
                for (x, tau) in ideal.states.taus.iter().enumerate() {
                    values[y][x][k] = (v.adjoint() * tau.matrix() * v)[(0, 0)].re.max(0.0);
                }
            }
        }
    }
    let rows = values
        .iter()
        .enumerate()
        .flat_map(|(m, rows)| rows.iter().enumerate().map(move |(x, v)| (m, x, *v, cell_name(m, x))))
        .collect();
    ExperimentTable::from_rows(rows, ValueKind::Probabilities, "simulated:ideal".to_string(), ParseOptions::default())
}

/// Result of matching measured flag-measurement columns to the ideal
/// simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnAlignment {
    /// `perm[k]` is the data column matched to printed projector k.
    pub perm: Vec<usize>,
    /// Mean absolute deviation between data and simulated rows.
    pub deviation: f64,
    /// Data columns (0-based) spanning the ideal flag support.
    pub flag_columns: Vec<usize>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Matches the measured MP columns to Born probabilities of the ideal
/// states on the printed flag-measurement vectors, by exhaustive search
/// over column permutations, and reports which data columns carry τ₅.
pub fn align_flag_columns(t: &ExperimentTable, states: &ProtocolStates) -> ColumnAlignment {
    let vecs: Vec<CVec> = printed_measurement_fixtures()
        .mp_vectors
        .iter()
        .map(|v| CVec::from_iterator(NUM_PROJECTORS, v.iter().map(|&a| c(a))))
        .collect();
    let sim: Vec<Vec<f64>> = states
        .taus
        .iter()
        .map(|tau| vecs.iter().map(|v| (v.adjoint() * tau.matrix() * v)[(0, 0)].re).collect())
        .collect();
    let data = &t.values[MeasurementLabel::MP.index()];
    let mut best = (f64::INFINITY, Vec::new());
    for perm in permutations(NUM_PROJECTORS) {
        let mut dev = 0.0;
        for x in 0..NUM_ENCODINGS {
            for k in 0..NUM_PROJECTORS {
                dev += (data[x][perm[k]] - sim[x][k]).abs();
            }
        }
        if dev < best.0 {
            best = (dev, perm);
        }
    }
    let (dev, perm) = best;
    let flag = &sim[crate::protocol::FLAG_INDEX];
    let mut flag_columns: Vec<usize> = (0..NUM_PROJECTORS).filter(|&k| flag[k] > 1e-9).map(|k| perm[k]).collect();
    flag_columns.sort_unstable();
    ColumnAlignment {
        perm,
        deviation: dev / (NUM_ENCODINGS * NUM_PROJECTORS) as f64,
        flag_columns,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_shape_and_value() {
        let t = bundled_table();
        assert_eq!(t.values.len(), 3);
        assert_eq!(t.row(MeasurementLabel::M1, 0)[5], 0.3209);
        assert_eq!(t.warnings.len(), 1);
        assert!(t.warnings[0].contains("(M1, U2)"));
    }

    #[test]
    fn default_tolerance_rejects_misprinted_row() {
        let e = ExperimentTable::from_csv_str(BUNDLED_TABLE, ValueKind::Probabilities, "t", ParseOptions::default());
        let msg = e.unwrap_err().to_string();
        assert!(msg.contains("(M1, U2)"), "{msg}");
    }

    #[test]
    fn truncated_file_names_missing_cell() {
        let text: String = BUNDLED_TABLE.lines().take(15).collect::<Vec<_>>().join("\n");
        let e = ExperimentTable::from_csv_str(&text, ValueKind::Probabilities, "t", ParseOptions { row_sum_tol: 0.1 });
        let msg = e.unwrap_err().to_string();
        assert!(msg.contains("(MP, U5)"), "{msg}");
    }

    #[test]
    fn binning_examples() {
        let t = bundled_table();
        let corr = bin_outcomes(&t, &BinningSpec::standard()).unwrap();
        assert!((corr.probs[2][4][1] - 0.9977).abs() < 1e-12);
        assert!((corr.probs[0][0][0] - 0.9169).abs() < 1e-12);
        for (m, rows) in corr.probs.iter().enumerate() {
            for (x, p) in rows.iter().enumerate() {
                let s: f64 = p.iter().sum();
                let r: f64 = t.values[m][x].iter().sum();
                assert!((s - r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_partition_rejected() {
        let mut spec = BinningSpec::standard();
        spec.classes[0][0].push(0);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn rates_from_table() {
        let r = discrimination_rates(&bundled_table(), &BinningSpec::standard()).unwrap();
        assert!((r.r[4] - 0.9977).abs() < 1e-12);
        assert!((r.r[1] - 0.9994).abs() <= 2e-4);
        assert!(r.r.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn ideal_table_reproduces_simulation() {
        let ideal = crate::protocol::disambiguate_convention().unwrap();
        let t = simulate_table(&ideal, &BinningSpec::standard()).unwrap();
        let corr = bin_outcomes(&t, &BinningSpec::standard()).unwrap();
        for (y, rows) in corr.probs.iter().enumerate() {
            for (x, p) in rows.iter().enumerate() {
                for (b, v) in p.iter().enumerate() {
                    assert!((v - ideal.correlations.probs[y][x][b]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn alignment_finds_flag_columns() {
        let ideal = crate::protocol::disambiguate_convention().unwrap();
        let a = align_flag_columns(&bundled_table(), &ideal.states);
        assert_eq!(a.flag_columns, vec![3, 4]);
        assert!(a.deviation < 0.01);
    }

    #[test]
    fn csv_and_json_round_trip() {
        let t = bundled_table();
        let opts = ParseOptions { row_sum_tol: 0.1 };
        let back = ExperimentTable::from_csv_str(&t.to_csv_string().unwrap(), t.kind, &t.source, opts).unwrap();
        assert_eq!(back.values, t.values);
        let back = ExperimentTable::from_json_str(&t.to_json_string().unwrap(), opts).unwrap();
        assert_eq!(back.values, t.values);
    }
}
