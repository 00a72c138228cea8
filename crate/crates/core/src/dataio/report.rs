//! Versioned JSON reports and the ΔP plotting series.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{DeviationVector, DiscriminationRates};
use crate::error::{Error, Result};
use crate::protocol::{CorrelationTable, InputAssignment, ProductOrder, ReferenceBounds};
use crate::stats::{BootstrapSummary, PValue};

use super::{BinningSpec, MeasurementLabel};

pub const REPORT_SCHEMA: &str = "eacomm-report/1";
pub const REPORT_FILE: &str = "report.json";
pub const DELTA_P_FILE: &str = "delta_p.csv";

/// Every convention the numbers in a report depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionRecord {
    pub product_order: ProductOrder,
    pub measurement_basis_order: [usize; 3],
    pub assignment: InputAssignment,
    /// 1-based encoding label of the flag input.
    pub flag_encoding: usize,
    pub binning: BinningSpec,
    /// Rounds per cell assumed when a table carries probabilities only.
    pub implicit_rounds_per_cell: u64,
}

/// One bar of the ΔP series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaPRow {
    pub measurement: MeasurementLabel,
    /// 1-based encoding index.
    pub encoding: usize,
    pub delta_p: f64,
    /// Outcome-class probabilities p(b|x,y).
    pub classes: Vec<f64>,
}

impl DeltaPRow {
    pub fn series(corr: &CorrelationTable) -> Vec<Self> {
        let dp = corr.delta_p();
        let mut rows = Vec::new();
        for (y, m) in MeasurementLabel::ALL.iter().enumerate().take(corr.probs.len()) {
            for (x, classes) in corr.probs[y].iter().enumerate() {
                rows.push(DeltaPRow {
                    measurement: *m,
                    encoding: x + 1,
                    delta_p: dp[y][x],
                    classes: classes.clone(),
                });
            }
        }
        rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// A command's full numeric output. Optional fields are omitted from JSON
/// when the command did not compute them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conventions: Option<ConventionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<DiscriminationRates>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_raw: Option<DeviationVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_inflated: Option<DeviationVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub four_dim_entanglement: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_bounds: Option<ReferenceBounds>,
    /// Almost-qutrit bound at ε = 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit_entanglement_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrected_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrected_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pvalue: Option<PValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta_p: Vec<DeltaPRow>,
    /// Command-specific detail (facet bounds, circuit angles, restart logs).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sections: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub criteria: Vec<CriterionResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            schema: REPORT_SCHEMA.to_string(),
            command: command.to_string(),
            seed: None,
            config: serde_json::Value::Null,
            conventions: None,
            source: None,
            p_hat: None,
            rates: None,
            eps_raw: None,
            eps_inflated: None,
            four_dim_entanglement: None,
            reference_bounds: None,
            qubit_entanglement_bound: None,
            corrected_upper: None,
            corrected_lower: None,
            mu: None,
            pvalue: None,
            bootstrap: None,
            verdict: None,
            delta_p: Vec::new(),
            sections: BTreeMap::new(),
            criteria: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn add_section<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.sections.insert(name.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Report = serde_json::from_str(text)?;
        if r.schema != REPORT_SCHEMA {
            return Err(Error::validation("schema", format!("unsupported report schema {:?}", r.schema)));
        }
        Ok(r)
    }

    pub fn delta_p_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["measurement", "encoding", "delta_p", "p_b0", "p_b1", "p_b2"])?;
        for row in &self.delta_p {
            let cls = |b: usize| row.classes.get(b).map(|v| v.to_string()).unwrap_or_default();
            w.write_record([
                row.measurement.as_str().to_string(),
                format!("U{}", row.encoding),
                row.delta_p.to_string(),
                cls(0),
                cls(1),
                cls(2),
            ])?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
            .map_err(|e| Error::invalid(e.to_string()))
    }
}

/// Writes `report.json` and, when the report carries a ΔP series,
/// `delta_p.csv` into `dir`.
pub fn emit_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let json = dir.join(REPORT_FILE);
    std::fs::write(&json, report.to_json()?)?;
    let mut written = vec![json];
    if !report.delta_p.is_empty() {
        let csv = dir.join(DELTA_P_FILE);
        std::fs::write(&csv, report.delta_p_csv()?)?;
        written.push(csv);
    }
    Ok(written)
}

/// Reads a report from a `report.json` path or a directory containing one.
pub fn parse_report(path: &Path) -> Result<Report> {
    let file = if path.is_dir() { path.join(REPORT_FILE) } else { path.to_path_buf() };
    Report::from_json(&std::fs::read_to_string(file)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{bin_outcomes, bundled_table};

    fn sample() -> Report {
        let corr = bin_outcomes(&bundled_table(), &BinningSpec::standard()).unwrap();
        let mut r = Report::new("analyze");
        r.seed = Some(7);
        r.p_hat = Some(0.1 + 0.2);
        r.corrected_upper = Some(0.91);
        r.delta_p = DeltaPRow::series(&corr);
        r.add_section("extra", &vec![1.0f64 / 3.0, 2.0]).unwrap();
        r
    }

    #[test]
    fn fifteen_delta_rows() {
        let r = sample();
        assert_eq!(r.delta_p.len(), 15);
        assert_eq!(r.delta_p_csv().unwrap().lines().count(), 16);
    }

    #[test]
    fn round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let r = sample();
        let files = emit_report(&r, dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let back = parse_report(dir.path()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json().unwrap(), r.to_json().unwrap());
    }

    #[test]
    fn wrong_schema_rejected() {
        let text = sample().to_json().unwrap().replace(REPORT_SCHEMA, "other/9");
        assert!(Report::from_json(&text).is_err());
    }
}
