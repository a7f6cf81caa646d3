//! CSV result tables and the run manifest.
//!
//! Every table is written with a fixed header taken from the row type and
//! floats in shortest round-trip form, so reading a file back reproduces the
//! rows exactly.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::alloc::{Allocation, AllocationProblem};
use crate::error::{Error, Result};

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

/// Write `rows` to `path` with a header row.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize().collect::<std::result::Result<Vec<T>, _>>().map_err(|e| io_err(path, e))
}

/// One layer of an allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationRow {
    pub layer: usize,
    pub source_symbols: u64,
    pub outage_target: f64,
    pub delta: f64,
    pub symbols: u64,
    /// Probability of decoding layers up to this one at its MNRC, closed-form model.
    pub success_model: f64,
    /// Same under the exact binomial outage.
    pub success_exact: f64,
}

/// Totals and diagnostics of an allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationSummary {
    pub solver: String,
    pub n_max: u64,
    pub total_symbols: u64,
    pub feasible: bool,
    pub utility: f64,
    pub u_max: f64,
    pub loss: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub grid_size: usize,
    pub converged: bool,
    /// 1-based layer that could not be served, when infeasible.
    pub failed_layer: Option<usize>,
    pub min_base_n_max: Option<u64>,
}

pub fn allocation_rows(problem: &AllocationProblem, a: &Allocation) -> Result<Vec<AllocationRow>> {
    let assurance = if a.feasible { Some(problem.assurance(&a.deltas, &a.symbols)?) } else { None };
    Ok(problem
        .layers
        .iter()
        .enumerate()
        .map(|(l, spec)| AllocationRow {
            layer: l + 1,
            source_symbols: spec.source_symbols,
            outage_target: spec.outage_target,
            delta: a.deltas[l],
            symbols: a.symbols[l],
            success_model: assurance.as_ref().map_or(0.0, |s| s[l].model),
            success_exact: assurance.as_ref().map_or(0.0, |s| s[l].exact),
        })
        .collect())
}

pub fn allocation_summary(problem: &AllocationProblem, a: &Allocation) -> AllocationSummary {
    AllocationSummary {
        solver: a.solver.name().to_string(),
        n_max: problem.n_max,
        total_symbols: a.total_symbols(),
        feasible: a.feasible,
        utility: a.utility,
        u_max: problem.u_max(),
        loss: a.loss,
        iterations: a.diagnostics.iterations,
        evaluations: a.diagnostics.evaluations,
        grid_size: a.diagnostics.grid_size,
        converged: a.diagnostics.converged,
        failed_layer: a.infeasibility.map(|i| i.failed_layer + 1),
        min_base_n_max: a.infeasibility.map(|i| i.min_base_n_max),
    }
}

/// What a run consumed and produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub command: String,
    pub scenario: Option<String>,
    pub config_hash: Option<String>,
    pub master_seed: Option<u64>,
    /// Seed each study actually used.
    pub seeds: BTreeMap<String, u64>,
    pub files: Vec<String>,
    pub runtime_seconds: f64,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            scenario: None,
            config_hash: None,
            master_seed: None,
            seeds: BTreeMap::new(),
            files: Vec::new(),
            runtime_seconds: 0.0,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
    }
}
