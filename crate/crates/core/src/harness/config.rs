//! Configuration documents for the CLI subcommands, read from TOML or JSON
//! (chosen by file extension).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Phase-1 initializer of a pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase1 {
    Scal,
    Mohyb,
    Nsga2,
    Nsma,
}

impl Phase1 {
    pub fn name(self) -> &'static str {
        match self {
            Phase1::Scal => "scal",
            Phase1::Mohyb => "mohyb",
            Phase1::Nsga2 => "nsga2",
            Phase1::Nsma => "nsma",
        }
    }
}

/// Full pipeline identifier: initializer, whether the exploration phase
/// runs on top, and the long-budget plain genetic baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineId {
    pub phase1: Phase1,
    pub with_sfsd: bool,
    /// The `nsga2-long` baseline: phase 1 only, with the combined budget.
    pub long: bool,
}

impl PipelineId {
    pub fn parse(text: &str) -> Result<Self> {
        let id = match text {
            "scal" => PipelineId { phase1: Phase1::Scal, with_sfsd: false, long: false },
            "scal+sfsd" => PipelineId { phase1: Phase1::Scal, with_sfsd: true, long: false },
            "mohyb" => PipelineId { phase1: Phase1::Mohyb, with_sfsd: false, long: false },
            "mohyb+sfsd" => PipelineId { phase1: Phase1::Mohyb, with_sfsd: true, long: false },
            "nsga2" => PipelineId { phase1: Phase1::Nsga2, with_sfsd: false, long: false },
            "nsga2+sfsd" => PipelineId { phase1: Phase1::Nsga2, with_sfsd: true, long: false },
            "nsma" => PipelineId { phase1: Phase1::Nsma, with_sfsd: false, long: false },
            "nsma+sfsd" => PipelineId { phase1: Phase1::Nsma, with_sfsd: true, long: false },
            "nsga2-long" => PipelineId { phase1: Phase1::Nsga2, with_sfsd: false, long: true },
            other => {
                return Err(Error::Config(format!(
                    "unknown pipeline '{other}' (expected scal/mohyb/nsga2/nsma, optionally \
                     with '+sfsd', or nsga2-long)"
                )))
            }
        };
        Ok(id)
    }

    pub fn name(&self) -> String {
        if self.long {
            return "nsga2-long".to_string();
        }
        if self.with_sfsd {
            format!("{}+sfsd", self.phase1.name())
        } else {
            self.phase1.name().to_string()
        }
    }
}

/// Overrides for the genetic initializers.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaOverrides {
    pub pop_size: Option<usize>,
    pub crossover_prob: Option<f64>,
    pub mutation_prob: Option<f64>,
    pub sbx_eta: Option<f64>,
    pub mutation_eta: Option<f64>,
    pub max_generations: Option<usize>,
}

impl Default for GaOverrides {
    fn default() -> Self {
        GaOverrides {
            pop_size: None,
            crossover_prob: None,
            mutation_prob: None,
            sbx_eta: None,
            mutation_eta: None,
            max_generations: None,
        }
    }
}

fn default_phase1_budget() -> f64 {
    10.0
}

fn default_sfsd_budget() -> f64 {
    5.0
}

fn default_scal_budget() -> usize {
    5000
}

fn default_dir_budget() -> usize {
    crate::directions::L_STATIONARY_BUDGET
}

fn default_refine_every() -> usize {
    5
}

fn default_refine_steps() -> usize {
    2
}

fn default_crowding_gate() -> f64 {
    0.05
}

/// One experiment: an instance, a pipeline, seeds and budgets. Desk-scale
/// budget defaults (10 s + 5 s) keep suites fast; the full-scale budgets are
/// plain config values away.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: PathBuf,
    /// Pipeline id, e.g. "mohyb+sfsd" or "nsga2-long".
    pub pipeline: String,
    pub seeds: Vec<u64>,
    #[serde(default = "default_phase1_budget")]
    pub phase1_budget_secs: f64,
    #[serde(default = "default_sfsd_budget")]
    pub sfsd_budget_secs: f64,
    /// Optional hard iteration caps; when set they usually bind before the
    /// wall clock, which makes reruns bit-identical.
    #[serde(default)]
    pub phase1_max_iters: Option<usize>,
    #[serde(default)]
    pub sfsd_max_iters: Option<usize>,
    #[serde(default = "default_scal_budget")]
    pub scalarization_budget: usize,
    #[serde(default = "default_dir_budget")]
    pub direction_budget: usize,
    #[serde(default = "default_refine_every")]
    pub nsma_refine_every: usize,
    #[serde(default = "default_refine_steps")]
    pub nsma_refine_steps: usize,
    #[serde(default = "default_crowding_gate")]
    pub crowding_gate: f64,
    #[serde(default)]
    pub ga: GaOverrides,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<PipelineId> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if !(self.phase1_budget_secs > 0.0) || !(self.sfsd_budget_secs > 0.0) {
            return Err(Error::Config("budgets must be positive".into()));
        }
        PipelineId::parse(&self.pipeline)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = load_document(path)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Data-ingestion configuration: price/ESG files in, instance JSON out.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    pub name: String,
    pub prices_csv: PathBuf,
    pub esg_csv: PathBuf,
    /// Column of the price CSV holding the market index (used for betas and
    /// excluded from the asset universe).
    pub market_column: String,
    pub s: usize,
    /// Objective ids in report order, e.g. ["V", "ER"]. Scales default to
    /// 100 for V and ER, 0.01 for ESG, 0.1 for SW and 1 for SR.
    pub objectives: Vec<ObjectiveChoice>,
    #[serde(default)]
    pub log_returns: bool,
    #[serde(default)]
    pub sample_divisor: bool,
    #[serde(default)]
    pub lower: Option<Vec<f64>>,
    #[serde(default)]
    pub upper: Option<Vec<f64>>,
    #[serde(default)]
    pub beta_min: Option<f64>,
    #[serde(default)]
    pub beta_max: Option<f64>,
    #[serde(default)]
    pub sectors: Vec<SectorChoice>,
    #[serde(default)]
    pub turnover: Option<TurnoverChoice>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectiveChoice {
    pub id: crate::model::ObjectiveId,
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default)]
    pub sense: Option<crate::model::Sense>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectorChoice {
    pub indices: Vec<usize>,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TurnoverChoice {
    pub x0: Vec<f64>,
    pub tau: f64,
}

impl IngestConfig {
    pub fn load(path: &Path) -> Result<Self> {
        load_document(path)
    }
}

/// Reference-front construction: merge persisted fronts of one instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub instance: PathBuf,
    pub fronts: Vec<PathBuf>,
    pub out: PathBuf,
}

impl ReferenceConfig {
    pub fn load(path: &Path) -> Result<Self> {
        load_document(path)
    }
}

/// Metric reporting over finished runs: one entry per problem, each with
/// its reference front and run records; profiles aggregate across problems.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub problems: Vec<ProblemReport>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemReport {
    pub instance: PathBuf,
    pub reference: PathBuf,
    /// Run-record JSON files (one per pipeline/seed cell).
    pub runs: Vec<PathBuf>,
}

impl ReportConfig {
    pub fn load(path: &Path) -> Result<Self> {
        load_document(path)
    }
}

fn load_document<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let is_toml = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("toml"))
        .unwrap_or(false);
    if is_toml {
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    } else {
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}
