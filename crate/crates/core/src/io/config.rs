//! Run configuration: one TOML file with a section per concern, plus
//! command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::DebtRankSettings;
use crate::engine::{CorrelationSpec, SimulationConfig};
use crate::error::{Error, Result};
use crate::inference::InferenceConfig;
use crate::math::CorrelationMatrix;
use crate::model::{DiscountCurve, UpdateRule};
use crate::risk::{Binning, HistogramSpec};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    pub simulation: SimulationSection,
    pub inference: InferenceSection,
    pub report: ReportSection,
    pub impact: ImpactSection,
    pub oracle: OracleSection,
    pub baseline: BaselineSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Bank table; the bundled 35-bank sample when unset.
    pub banks: Option<PathBuf>,
    /// Rating to pd table; the built-in map when unset.
    pub rating_map: Option<PathBuf>,
    /// Replaces every bank's LGD.
    pub lgd: Option<f64>,
    pub capital_scale: f64,
    /// Edge-list CSV. When unset the network is inferred.
    pub network: Option<PathBuf>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            banks: None,
            rating_map: None,
            lgd: None,
            capital_scale: 1.0,
            network: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub periods: usize,
    pub dt: f64,
    pub rho: f64,
    /// Square CSV without header; overrides `rho`.
    pub correlation_matrix: Option<PathBuf>,
    pub rule: UpdateRule,
    pub n_paths: usize,
    pub seed: u64,
    pub discount_rate: f64,
    /// `simulate` runs every member of the inferred ensemble.
    pub ensemble: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let d = SimulationConfig::default();
        Self {
            periods: d.periods,
            dt: d.dt,
            rho: 0.5,
            correlation_matrix: None,
            rule: d.rule,
            n_paths: d.n_paths,
            seed: d.seed,
            discount_rate: 0.0,
            ensemble: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceSection {
    pub alpha: f64,
    pub min_loan_fraction: f64,
    pub ensemble_size: usize,
    pub seed: u64,
    pub max_reroutes: usize,
    /// Ensemble member used by single-network commands.
    pub member: usize,
}

impl Default for InferenceSection {
    fn default() -> Self {
        let d = InferenceConfig::default();
        Self {
            alpha: d.alpha,
            min_loan_fraction: d.min_loan_fraction,
            ensemble_size: d.ensemble_size,
            seed: d.seed,
            max_reroutes: d.max_reroutes,
            member: 0,
        }
    }
}

impl InferenceSection {
    pub fn to_config(&self) -> InferenceConfig {
        InferenceConfig {
            alpha: self.alpha,
            min_loan_fraction: self.min_loan_fraction,
            ensemble_size: self.ensemble_size,
            seed: self.seed,
            max_reroutes: self.max_reroutes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub bins: usize,
    pub binning: Binning,
    pub log_floor: f64,
    pub quantiles: Vec<f64>,
}

impl Default for ReportSection {
    fn default() -> Self {
        let h = HistogramSpec::default();
        Self {
            bins: h.bins,
            binning: h.binning,
            log_floor: h.log_floor,
            quantiles: vec![0.5, 0.9, 0.99, 0.999],
        }
    }
}

impl ReportSection {
    pub fn histogram_spec(&self) -> HistogramSpec {
        HistogramSpec {
            bins: self.bins,
            binning: self.binning,
            log_floor: self.log_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpactSection {
    /// Percentage increases of every pd.
    pub x: Vec<f64>,
}

impl Default for ImpactSection {
    fn default() -> Self {
        Self {
            x: (1..=10).map(|k| 10.0 * k as f64).collect(),
        }
    }
}

/// Symmetric two-node system for the exact Markov chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub asset: f64,
    pub pd: f64,
    pub lgd: f64,
    pub a_hat: f64,
    pub periods: usize,
    pub capital: Vec<f64>,
    pub rho: Vec<f64>,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            asset: 200.0,
            pd: 0.001,
            lgd: 0.6,
            a_hat: 1.0,
            periods: 7,
            capital: vec![0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0],
            rho: (0..20).map(|k| k as f64 / 20.0).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineModel {
    Furfine,
    Debtrank,
    Both,
}

/// An exogenous loss hitting one bank, in the units of the bank table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shock {
    pub bank: String,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    pub model: BaselineModel,
    pub tol: f64,
    pub max_iter: usize,
    /// Shocks; DebtRank starts from `min(1, amount / capital)`.
    pub shocks: Vec<Shock>,
}

impl Default for BaselineSection {
    fn default() -> Self {
        let d = DebtRankSettings::default();
        Self {
            model: BaselineModel::Both,
            tol: d.tol,
            max_iter: d.max_iter,
            shocks: Vec::new(),
        }
    }
}

/// Command-line values that replace file values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub periods: Option<usize>,
    pub rho: Option<f64>,
    pub rule: Option<UpdateRule>,
    pub discount_rate: Option<f64>,
}

fn absolute(base: &Path, p: &mut Option<PathBuf>) -> Result<()> {
    if let Some(path) = p {
        let joined = base.join(&*path);
        *path = std::path::absolute(&joined).map_err(|e| Error::io(&joined, e))?;
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it are taken from the
    /// file's directory and made absolute.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")))?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) -> Result<()> {
        absolute(base, &mut self.data.banks)?;
        absolute(base, &mut self.data.rating_map)?;
        absolute(base, &mut self.data.network)?;
        absolute(base, &mut self.simulation.correlation_matrix)
    }

    /// `--seed` sets both the simulation and the inference seed.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.simulation.seed = s;
            self.inference.seed = s;
        }
        if let Some(v) = o.paths {
            self.simulation.n_paths = v;
        }
        if let Some(v) = o.periods {
            self.simulation.periods = v;
        }
        if let Some(v) = o.rho {
            self.simulation.rho = v;
            self.simulation.correlation_matrix = None;
        }
        if let Some(v) = o.rule {
            self.simulation.rule = v;
        }
        if let Some(v) = o.discount_rate {
            self.simulation.discount_rate = v;
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serialises")
    }

    /// SHA-256 of the canonical TOML rendering, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn simulation_config(&self) -> Result<SimulationConfig> {
        let s = &self.simulation;
        let correlation = match &s.correlation_matrix {
            Some(p) => CorrelationSpec::Matrix(read_matrix(p)?),
            None => CorrelationSpec::Uniform(s.rho),
        };
        Ok(SimulationConfig {
            periods: s.periods,
            dt: s.dt,
            correlation,
            discount: DiscountCurve::flat(s.discount_rate)?,
            rule: s.rule,
            n_paths: s.n_paths,
            seed: s.seed,
            retain_period_losses: false,
        })
    }
}

/// Reads a square correlation matrix written as headerless CSV.
pub fn read_matrix(path: &Path) -> Result<CorrelationMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec?;
        rows += 1;
        for (c, field) in rec.iter().enumerate() {
            values.push(field.parse::<f64>().map_err(|_| Error::Load {
                path: path.to_path_buf(),
                row: rows,
                column: format!("{}", c + 1),
                message: format!("`{field}` is not a number"),
            })?);
        }
    }
    if values.len() != rows * rows {
        return Err(Error::config(format!(
            "{}: correlation matrix is not square",
            path.display()
        )));
    }
    CorrelationMatrix::new(rows, values)
}
