//! File formats: economies and certificates as canonical JSON, slice
//! allocations as CSV, purification reports as JSON.
//!
//! Canonical JSON has sorted keys, two-space indentation, arrays of scalars on
//! one line, and every float written with 17 significant digits, so a
//! parse/serialize round trip reproduces the file byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::demand::Lottery;
use crate::economy::{Agent, ConsumptionSet, Economy, EconomyError, Price};
use crate::purification::{PurificationReport, SliceAllocation};
use crate::solver::{ConstraintModeConfig, EquilibriumCertificate, ExcessResidual, SolverConfig, SolverTrace};

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unsupported format_version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("invalid economy: {0}")]
    Economy(#[from] EconomyError),
    #[error("{0} contains a non-finite number")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentRecord {
    pub id: String,
    pub weight: f64,
    pub utility: Vec<f64>,
    pub endowment_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomyFile {
    pub dimension: usize,
    pub consumption_set: Vec<Vec<f64>>,
    pub agents: Vec<AgentRecord>,
    pub mode: ConstraintModeConfig,
    pub format_version: u32,
}

fn all_finite<'a>(values: impl IntoIterator<Item = &'a f64>) -> bool {
    values.into_iter().all(|v| v.is_finite())
}

impl EconomyFile {
    pub fn from_economy(economy: &Economy<f64>) -> Self {
        Self {
            dimension: economy.dimension(),
            consumption_set: economy.consumption_set().points().iter().map(|x| x.to_vec()).collect(),
            agents: economy
                .agents()
                .iter()
                .map(|a| AgentRecord {
                    id: a.id.clone(),
                    weight: a.weight,
                    utility: a.utility.clone(),
                    endowment_index: a.endowment,
                })
                .collect(),
            mode: economy.mode().into(),
            format_version: FORMAT_VERSION,
        }
    }

    /// Builds the economy, rejecting shape errors. Assumption checks are left
    /// to the validators.
    pub fn to_economy(&self) -> Result<Economy<f64>, IoError> {
        if self.format_version != FORMAT_VERSION {
            return Err(IoError::Version(self.format_version));
        }
        let xs = ConsumptionSet::from_rows(self.dimension, self.consumption_set.clone())?;
        let agents = self
            .agents
            .iter()
            .map(|a| Agent::new(a.id.clone(), a.weight, a.utility.clone(), a.endowment_index))
            .collect();
        Ok(Economy::new(xs, agents, self.mode.into())?)
    }

    pub fn to_canonical_json(&self) -> Result<String, IoError> {
        let finite = all_finite(self.consumption_set.iter().flatten())
            && self.agents.iter().all(|a| a.weight.is_finite() && all_finite(&a.utility));
        if !finite {
            return Err(IoError::NonFinite("economy"));
        }
        to_canonical_json(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualRecord {
    pub excess: Vec<f64>,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub format_version: u32,
    pub tool_version: String,
    /// Whether the producing run verified the certificate. Informational:
    /// `verify` recomputes everything from price and selection.
    pub verified: bool,
    pub mode: ConstraintModeConfig,
    pub price: Vec<f64>,
    pub selection: Vec<Vec<f64>>,
    pub residual: ResidualRecord,
    pub per_agent_optimality_gap: Vec<f64>,
    pub per_agent_budget_slack: Vec<f64>,
    pub solver_trace: SolverTrace,
    pub config: Option<SolverConfig>,
}

impl CertificateFile {
    pub fn from_certificate(cert: &EquilibriumCertificate<f64>, verified: bool, config: Option<&SolverConfig>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            verified,
            mode: cert.mode.into(),
            price: cert.price.to_vec(),
            selection: cert.selection.iter().map(|l| l.probs().to_vec()).collect(),
            residual: ResidualRecord { excess: cert.residual.excess.clone(), violation: cert.residual.violation },
            per_agent_optimality_gap: cert.per_agent_optimality_gap.clone(),
            per_agent_budget_slack: cert.per_agent_budget_slack.clone(),
            solver_trace: cert.solver_trace.clone(),
            config: config.cloned(),
        }
    }

    /// Rebuilds the certificate without judging it: prices and lotteries are
    /// taken as written so that verification can report what is wrong.
    pub fn to_certificate(&self) -> Result<EquilibriumCertificate<f64>, IoError> {
        if self.format_version != FORMAT_VERSION {
            return Err(IoError::Version(self.format_version));
        }
        Ok(EquilibriumCertificate {
            price: Price::from_raw(self.price.clone()),
            selection: self.selection.iter().map(|p| Lottery::from_raw(p.clone())).collect(),
            residual: ExcessResidual { excess: self.residual.excess.clone(), violation: self.residual.violation },
            per_agent_optimality_gap: self.per_agent_optimality_gap.clone(),
            per_agent_budget_slack: self.per_agent_budget_slack.clone(),
            mode: self.mode.into(),
            solver_trace: self.solver_trace.clone(),
        })
    }

    pub fn to_canonical_json(&self) -> Result<String, IoError> {
        let finite = all_finite(&self.price)
            && all_finite(self.selection.iter().flatten())
            && all_finite(&self.residual.excess)
            && self.residual.violation.is_finite()
            && all_finite(&self.per_agent_optimality_gap)
            && all_finite(&self.per_agent_budget_slack)
            && all_finite(&self.solver_trace.best_violation);
        if !finite {
            return Err(IoError::NonFinite("certificate"));
        }
        to_canonical_json(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PurificationReportFile {
    pub format_version: u32,
    /// `"split"` or `"round"`.
    pub method: String,
    pub aggregate_before: Vec<f64>,
    pub aggregate_after: Vec<f64>,
    pub utility_gap: Vec<f64>,
    pub deviation: f64,
    /// Slices whose bundle is not in the owner's pure demand (split only).
    pub slices_outside_demand: Option<Vec<usize>>,
    /// Bundle chosen per agent (round only).
    pub choice: Option<Vec<usize>>,
}

impl PurificationReportFile {
    pub fn new(method: &str, report: &PurificationReport<f64>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            method: method.to_string(),
            aggregate_before: report.aggregate_before.to_vec(),
            aggregate_after: report.aggregate_after.to_vec(),
            utility_gap: report.utility_gap.clone(),
            deviation: report.deviation,
            slices_outside_demand: None,
            choice: None,
        }
    }

    pub fn to_canonical_json(&self) -> Result<String, IoError> {
        let finite = all_finite(&self.aggregate_before)
            && all_finite(&self.aggregate_after)
            && all_finite(&self.utility_gap)
            && self.deviation.is_finite();
        if !finite {
            return Err(IoError::NonFinite("purification report"));
        }
        to_canonical_json(self)
    }
}

/// Canonical JSON text of any serializable value. Non-finite floats must be
/// rejected by the caller; serde maps them to `null`.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String, IoError> {
    let value = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &value, 0);
    out.push('\n');
    Ok(out)
}

fn format_number(n: &serde_json::Number) -> String {
    if n.is_f64() {
        format!("{:.16e}", n.as_f64().expect("f64 number"))
    } else {
        n.to_string()
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write_value(out: &mut String, value: &Value, indent: usize) {
    let pad = |out: &mut String, level: usize| out.extend(std::iter::repeat_n("  ", level));
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => out.push_str(&format_number(n)),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_value(out, item, indent);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, item, indent + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            // serde_json's default map is a BTreeMap, so keys come out sorted.
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                pad(out, indent + 1);
                let _ = write!(out, "{}: ", serde_json::to_string(key).expect("keys serialize"));
                write_value(out, item, indent + 1);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, IoError> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    parse_json(&fs::read_to_string(path)?)
}

pub fn read_economy(path: &Path) -> Result<Economy<f64>, IoError> {
    read_json::<EconomyFile>(path)?.to_economy()
}

pub fn write_economy(path: &Path, economy: &Economy<f64>) -> Result<(), IoError> {
    fs::write(path, EconomyFile::from_economy(economy).to_canonical_json()?)?;
    Ok(())
}

/// Slice allocation as CSV: `agent_id, mass, bundle_index, x0, ..., x{n-1}`.
pub fn write_slices_csv<W: io::Write>(
    writer: W,
    economy: &Economy<f64>,
    alloc: &SliceAllocation<f64>,
) -> Result<(), IoError> {
    let n = economy.dimension();
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["agent_id".to_string(), "mass".to_string(), "bundle_index".to_string()];
    header.extend((0..n).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    for s in &alloc.slices {
        let mut row = vec![economy.agent(s.agent).id.clone(), format!("{:.16e}", s.mass), s.bundle.to_string()];
        row.extend(economy.consumption_set().point(s.bundle).iter().map(|c| format!("{c:.16e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
