//! Reproducible experiment drivers.
//!
//! Each experiment reads its section of an [`ExperimentConfig`], produces numeric tables,
//! and derives pass/fail verdicts from those tables only. Reports serialise to
//! `report.json` plus one CSV per table. Everything except [`RuntimeMeta`] is a pure
//! function of the configuration.

mod bifurcation;
mod data_convergence;
mod product_dichotomy;
mod pv_residual;
mod self_similar;
mod solver_validation;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub use bifurcation::{run_bifurcation, BifurcationConfig};
pub use data_convergence::{run_data_convergence, DataConvergenceConfig};
pub use product_dichotomy::{product_constant, run_product_dichotomy, ProductDichotomyConfig};
pub use pv_residual::{residual, run_pv_residual, PvResidualConfig, TestFunction};
pub use self_similar::{run_self_similar, ConstantTuple, SelfSimilarConfig};
pub use solver_validation::{run_solver_validation, SolverValidationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    DataConvergence,
    Bifurcation,
    ProductDichotomy,
    SelfSimilar,
    PvResidual,
    SolverValidation,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        ExperimentId::DataConvergence,
        ExperimentId::Bifurcation,
        ExperimentId::ProductDichotomy,
        ExperimentId::SelfSimilar,
        ExperimentId::PvResidual,
        ExperimentId::SolverValidation,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentId::DataConvergence => "data-convergence",
            ExperimentId::Bifurcation => "bifurcation",
            ExperimentId::ProductDichotomy => "product-dichotomy",
            ExperimentId::SelfSimilar => "self-similar",
            ExperimentId::PvResidual => "pv-residual",
            ExperimentId::SolverValidation => "solver-validation",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| LabError::Config(format!("unknown experiment id '{s}'")))
    }
}

/// All experiment settings. Every section is optional in the file and falls back to the
/// defaults used by the acceptance runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: Option<PathBuf>,
    pub data_convergence: DataConvergenceConfig,
    pub bifurcation: BifurcationConfig,
    pub product_dichotomy: ProductDichotomyConfig,
    pub self_similar: SelfSimilarConfig,
    pub pv_residual: PvResidualConfig,
    pub solver_validation: SolverValidationConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.data_convergence.validate()?;
        self.bifurcation.validate()?;
        self.product_dichotomy.validate()?;
        self.self_similar.validate()?;
        self.pv_residual.validate()?;
        self.solver_validation.validate()?;
        Ok(())
    }

    fn section_json(&self, id: ExperimentId) -> Result<serde_json::Value> {
        Ok(match id {
            ExperimentId::DataConvergence => serde_json::to_value(&self.data_convergence)?,
            ExperimentId::Bifurcation => serde_json::to_value(&self.bifurcation)?,
            ExperimentId::ProductDichotomy => serde_json::to_value(&self.product_dichotomy)?,
            ExperimentId::SelfSimilar => serde_json::to_value(&self.self_similar)?,
            ExperimentId::PvResidual => serde_json::to_value(&self.pv_residual)?,
            ExperimentId::SolverValidation => serde_json::to_value(&self.solver_validation)?,
        })
    }
}

/// A numeric table; missing entries are `None` (empty in CSV, `null` in JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_values(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| Some(v)).collect());
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One pass/fail statement with the number it was decided on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub passed: bool,
    pub measured: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

impl Verdict {
    pub fn new(criterion: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Verdict { criterion: criterion.into(), passed, measured: None, threshold: None, detail: detail.into() }
    }

    pub fn at_most(criterion: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Verdict {
            criterion: criterion.into(),
            passed: measured <= threshold,
            measured: Some(measured),
            threshold: Some(threshold),
            detail: format!("{measured:e} <= {threshold:e}"),
        }
    }

    pub fn at_least(criterion: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Verdict {
            criterion: criterion.into(),
            passed: measured >= threshold,
            measured: Some(measured),
            threshold: Some(threshold),
            detail: format!("{measured:e} >= {threshold:e}"),
        }
    }
}

/// Wall-clock dependent fields, excluded from determinism comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeMeta {
    pub elapsed_seconds: f64,
    pub crate_version: String,
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentId,
    pub config: serde_json::Value,
    /// Derived constants the run depended on (mesh steps, δ, fitted rates, ...).
    pub parameters: BTreeMap<String, f64>,
    pub tables: Vec<Table>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    pub runtime: RuntimeMeta,
}

impl ExperimentReport {
    fn new(experiment: ExperimentId, config: &ExperimentConfig) -> Result<Self> {
        Ok(ExperimentReport {
            experiment,
            config: config.section_json(experiment)?,
            parameters: BTreeMap::new(),
            tables: Vec::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
            runtime: RuntimeMeta {
                elapsed_seconds: 0.0,
                crate_version: env!("CARGO_PKG_VERSION").to_string(),
                parallel: cfg!(feature = "parallel"),
            },
        })
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn verdict(&self, criterion: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.criterion == criterion)
    }

    /// The report without its runtime block, for bit-for-bit comparisons.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("runtime");
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }

    /// Writes `report.json` and `<table>.csv` for every table into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)?)?;
        for t in &self.tables {
            t.write_csv(std::fs::File::create(dir.join(format!("{}.csv", t.name)))?)?;
        }
        Ok(())
    }
}

/// Reports of several experiments, in the order they ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub reports: Vec<ExperimentReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(ExperimentReport::passed)
    }

    pub fn deterministic_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(list) = v.get_mut("reports").and_then(|r| r.as_array_mut()) {
            for r in list {
                if let Some(obj) = r.as_object_mut() {
                    obj.remove("runtime");
                }
            }
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }

    /// Writes the combined `report.json` into `dir` and each experiment into its own
    /// subdirectory.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)?)?;
        for r in &self.reports {
            r.save(&dir.join(r.experiment.as_str()))?;
        }
        Ok(())
    }
}

pub fn run(id: ExperimentId, config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let mut report = match id {
        ExperimentId::DataConvergence => run_data_convergence(config)?,
        ExperimentId::Bifurcation => run_bifurcation(config)?,
        ExperimentId::ProductDichotomy => run_product_dichotomy(config)?,
        ExperimentId::SelfSimilar => run_self_similar(config)?,
        ExperimentId::PvResidual => run_pv_residual(config)?,
        ExperimentId::SolverValidation => run_solver_validation(config)?,
    };
    report.runtime.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

pub fn run_all(config: &ExperimentConfig) -> Result<SuiteReport> {
    let reports = ExperimentId::ALL.iter().map(|&id| run(id, config)).collect::<Result<_>>()?;
    Ok(SuiteReport { reports })
}

/// Least-squares slope of y against x.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn strictly_decreasing(values: &[f64]) -> bool {
    !values.is_empty() && values.windows(2).all(|w| w[1] < w[0])
}

fn positive_list(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(LabError::Config(format!("{name}: all values must be positive and finite")));
    }
    Ok(())
}
