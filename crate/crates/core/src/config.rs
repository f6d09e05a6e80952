//! TOML run configuration.
//!
//! All quantities are SI; keys ending in `_db` are decibels (power ratio).
//! Unknown keys are rejected so typos surface as errors naming the key.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{Budgets, Cluster, GroundUser, NetworkInstance, PhysConstants, SatelliteLink, SemanticParams};
use crate::oracle::GridSpec;
use crate::scenarios::{self, BaselineMode, MixMode, ScenarioSpec, SweepAxis, Trajectory};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::config("format", format!("unknown format `{s}` (expected csv or json)"))),
        }
    }
}

/// Physical constants as written in the file (`beta0_db` instead of linear).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysFile {
    pub noise_psd: f64,
    pub beta0_db: f64,
    pub alpha: f64,
    pub zeta0: f64,
    pub flops_per_cycle: f64,
    pub g_sem: f64,
    pub g_con: f64,
}

impl Default for PhysFile {
    fn default() -> Self {
        let p = PhysConstants::default();
        Self {
            noise_psd: p.noise_psd,
            beta0_db: 10.0 * p.beta0.log10(),
            alpha: p.alpha,
            zeta0: p.zeta0,
            flops_per_cycle: p.flops_per_cycle,
            g_sem: p.g_sem,
            g_con: p.g_con,
        }
    }
}

impl PhysFile {
    pub fn to_phys(&self) -> PhysConstants {
        PhysConstants {
            noise_psd: self.noise_psd,
            beta0: 10f64.powf(self.beta0_db / 10.0),
            alpha: self.alpha,
            zeta0: self.zeta0,
            flops_per_cycle: self.flops_per_cycle,
            g_sem: self.g_sem,
            g_con: self.g_con,
        }
    }
}

/// Generated-instance parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub clusters: usize,
    pub n_sem: usize,
    pub n_con: usize,
    pub mix: MixMode,
    pub users_per_cluster: usize,
    pub side: f64,
    pub cluster_spacing: f64,
    pub uav_height: f64,
    pub sat_gain_db: f64,
    pub seed: u64,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        let s = ScenarioSpec::default();
        Self {
            clusters: s.clusters,
            n_sem: s.n_sem,
            n_con: s.n_con,
            mix: s.mix,
            users_per_cluster: s.users_per_cluster,
            side: s.side,
            cluster_spacing: s.cluster_spacing,
            uav_height: s.uav_height,
            sat_gain_db: s.sat_gain_db,
            seed: s.seed,
        }
    }
}

/// Explicit cluster; missing height and gain fall back to `[scenario]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterFile {
    pub uav_height: Option<f64>,
    pub sat_gain_db: Option<f64>,
    pub users: Vec<GroundUser>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepFile {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl Default for SweepFile {
    fn default() -> Self {
        Self { axis: SweepAxis::UavBandwidth, values: vec![2e6, 5e6, 10e6, 20e6, 30e6] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenariosFile {
    pub mixes: Vec<MixMode>,
}

impl Default for ScenariosFile {
    fn default() -> Self {
        Self { mixes: vec![MixMode::SemOnly, MixMode::SemConClusters, MixMode::Hybrid, MixMode::ConOnly] }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputFile {
    pub dir: Option<String>,
    pub format: Format,
    /// Write measured wall times; when false `wall_ms` is 0 so outputs are
    /// byte-reproducible.
    pub record_timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub modes: Vec<BaselineMode>,
    pub scenario: ScenarioFile,
    pub budgets: Budgets,
    pub phys: PhysFile,
    pub semantic: SemanticParams,
    pub solver: SolverConfig,
    pub clusters: Vec<ClusterFile>,
    pub sweep: SweepFile,
    pub trajectory: Trajectory,
    pub scenarios: ScenariosFile,
    pub oracle: GridSpec,
    pub output: OutputFile,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            modes: vec![BaselineMode::Joint],
            scenario: ScenarioFile::default(),
            budgets: Budgets::default(),
            phys: PhysFile::default(),
            semantic: SemanticParams::default(),
            solver: SolverConfig::default(),
            clusters: Vec::new(),
            sweep: SweepFile::default(),
            trajectory: Trajectory::default(),
            scenarios: ScenariosFile::default(),
            oracle: GridSpec::default(),
            output: OutputFile::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Applies a seed override to both the generator and the solver.
    pub fn set_seed(&mut self, seed: u64) {
        self.scenario.seed = seed;
        self.solver.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::config("modes", "mode list is empty"));
        }
        self.solver.validate()?;
        self.oracle.validate()?;
        self.trajectory.validate()?;
        self.spec().validate()?;
        for (i, c) in self.clusters.iter().enumerate() {
            if c.users.is_empty() {
                return Err(Error::config(format!("clusters[{i}].users"), "at least one user is required"));
            }
            if let Some(h) = c.uav_height {
                if !(h.is_finite() && h > 0.0) {
                    return Err(Error::config(format!("clusters[{i}].uav_height"), "must be finite and > 0"));
                }
            }
            if let Some(g) = c.sat_gain_db {
                if !g.is_finite() {
                    return Err(Error::config(format!("clusters[{i}].sat_gain_db"), "must be finite"));
                }
            }
        }
        if self.sweep.values.is_empty() {
            return Err(Error::config("sweep.values", "at least one value is required"));
        }
        if self.sweep.values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::config("sweep.values", "values must be finite and > 0"));
        }
        if self.scenarios.mixes.is_empty() {
            return Err(Error::config("scenarios.mixes", "at least one mix is required"));
        }
        // budgets and physics are checked on a probe instance
        NetworkInstance { clusters: vec![], budgets: self.budgets, phys: self.phys.to_phys(), sem: self.semantic.clone() }
            .validate()
    }

    pub fn spec(&self) -> ScenarioSpec {
        let s = &self.scenario;
        ScenarioSpec {
            clusters: s.clusters,
            n_sem: s.n_sem,
            n_con: s.n_con,
            mix: s.mix,
            users_per_cluster: s.users_per_cluster,
            side: s.side,
            cluster_spacing: s.cluster_spacing,
            uav_height: s.uav_height,
            sat_gain_db: s.sat_gain_db,
            seed: s.seed,
            budgets: self.budgets,
            phys: self.phys.to_phys(),
            sem: self.semantic.clone(),
        }
    }

    /// The explicit `[[clusters]]` if any, otherwise the generated scenario.
    pub fn instance(&self) -> Result<NetworkInstance> {
        if self.clusters.is_empty() {
            return scenarios::generate(&self.spec());
        }
        let clusters = self
            .clusters
            .iter()
            .enumerate()
            .map(|(n, c)| Cluster {
                index: n,
                uav_height: c.uav_height.unwrap_or(self.scenario.uav_height),
                users: c.users.clone(),
                sat_link: SatelliteLink::from_db(c.sat_gain_db.unwrap_or(self.scenario.sat_gain_db)),
            })
            .collect();
        let inst =
            NetworkInstance { clusters, budgets: self.budgets, phys: self.phys.to_phys(), sem: self.semantic.clone() };
        inst.validate()?;
        Ok(inst)
    }
}
