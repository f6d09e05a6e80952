//! Instance generators and experiment drivers: baseline-restricted solves,
//! user-mix scenarios, cluster scaling, budget sweeps and the satellite
//! trajectory sweep.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{
    Budgets, Cluster, GroundUser, NetworkInstance, PhysConstants, SatelliteLink, SemanticParams, UserKind,
};
use crate::solver::{optimize_blocks, BlockMask, SolveReport, SolverConfig};

/// Metres per degree of longitude on the flat-Earth track.
pub const METRES_PER_DEG: f64 = 111e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineMode {
    #[serde(rename = "joint")]
    Joint,
    #[serde(rename = "fixed-b")]
    FixedBandwidth,
    #[serde(rename = "fixed-p")]
    FixedPower,
    #[serde(rename = "fixed-l")]
    FixedLocation,
}

impl BaselineMode {
    pub const ALL: [BaselineMode; 4] =
        [BaselineMode::Joint, BaselineMode::FixedBandwidth, BaselineMode::FixedPower, BaselineMode::FixedLocation];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineMode::Joint => "joint",
            BaselineMode::FixedBandwidth => "fixed-b",
            BaselineMode::FixedPower => "fixed-p",
            BaselineMode::FixedLocation => "fixed-l",
        }
    }

    pub fn mask(self) -> BlockMask {
        let mut m = BlockMask::JOINT;
        match self {
            BaselineMode::Joint => {}
            BaselineMode::FixedBandwidth => m.bandwidth = false,
            BaselineMode::FixedPower => m.power = false,
            BaselineMode::FixedLocation => m.location = false,
        }
        m
    }
}

impl fmt::Display for BaselineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::config("modes", format!("unknown mode `{s}` (expected joint, fixed-b, fixed-p, fixed-l)")))
    }
}

/// Parses a comma-separated mode list such as `joint,fixed-b`.
pub fn parse_modes(list: &str) -> Result<Vec<BaselineMode>> {
    let modes = list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<Vec<_>>>()?;
    if modes.is_empty() {
        return Err(Error::config("modes", "mode list is empty"));
    }
    Ok(modes)
}

/// How users are split into kinds across clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixMode {
    /// Every cluster has `n_sem` semantic and `n_con` conventional users.
    Uniform,
    /// Clusters alternate between a quarter and three quarters semantic users.
    Hybrid,
    SemOnly,
    ConOnly,
    /// Clusters alternate between all-conventional and all-semantic.
    SemConClusters,
}

impl MixMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MixMode::Uniform => "uniform",
            MixMode::Hybrid => "hybrid",
            MixMode::SemOnly => "sem-only",
            MixMode::ConOnly => "con-only",
            MixMode::SemConClusters => "sem-con-clusters",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub clusters: usize,
    pub n_sem: usize,
    pub n_con: usize,
    pub mix: MixMode,
    /// Users per cluster for the non-uniform mixes.
    pub users_per_cluster: usize,
    /// Side of the square each cluster's users are drawn from, m.
    pub side: f64,
    /// Distance between neighbouring cluster centres along x, m.
    pub cluster_spacing: f64,
    pub uav_height: f64,
    pub sat_gain_db: f64,
    pub seed: u64,
    pub budgets: Budgets,
    pub phys: PhysConstants,
    pub sem: SemanticParams,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            clusters: 5,
            n_sem: 4,
            n_con: 4,
            mix: MixMode::Uniform,
            users_per_cluster: 8,
            side: 1000.0,
            cluster_spacing: 3000.0,
            uav_height: 1000.0,
            sat_gain_db: -160.0,
            seed: 1,
            budgets: Budgets::default(),
            phys: PhysConstants::default(),
            sem: SemanticParams::default(),
        }
    }
}

impl ScenarioSpec {
    /// `(n_sem, n_con)` for cluster `n`.
    pub fn counts(&self, n: usize) -> (usize, usize) {
        let u = self.users_per_cluster;
        let q = u / 4;
        match self.mix {
            MixMode::Uniform => (self.n_sem, self.n_con),
            MixMode::Hybrid if n.is_multiple_of(2) => (q, u - q),
            MixMode::Hybrid => (u - q, q),
            MixMode::SemOnly => (u, 0),
            MixMode::ConOnly => (0, u),
            MixMode::SemConClusters if n.is_multiple_of(2) => (0, u),
            MixMode::SemConClusters => (u, 0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 {
            return Err(Error::config("scenario.clusters", "must be >= 1"));
        }
        if (0..self.clusters).any(|n| {
            let (s, c) = self.counts(n);
            s + c == 0
        }) {
            return Err(Error::config("scenario", "every cluster needs at least one user"));
        }
        for (name, v) in [("scenario.side", self.side), ("scenario.uav_height", self.uav_height)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, "must be finite and > 0"));
            }
        }
        if !self.cluster_spacing.is_finite() || self.cluster_spacing < 0.0 {
            return Err(Error::config("scenario.cluster_spacing", "must be finite and >= 0"));
        }
        if !self.sat_gain_db.is_finite() {
            return Err(Error::config("scenario.sat_gain_db", "must be finite"));
        }
        Ok(())
    }

    pub fn center(&self, n: usize) -> [f64; 2] {
        [n as f64 * self.cluster_spacing, 0.0]
    }
}

/// Deterministic instance from the spec's seed. Positions are drawn in the
/// same order whatever the mix, so mixes sharing a seed share geometry.
pub fn generate(spec: &ScenarioSpec) -> Result<NetworkInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let half = 0.5 * spec.side;
    let clusters = (0..spec.clusters)
        .map(|n| {
            let (s, c) = spec.counts(n);
            let [cx, cy] = spec.center(n);
            let users = (0..s + c)
                .map(|i| GroundUser {
                    kind: if i < s { UserKind::Sem } else { UserKind::Con },
                    position: [cx + rng.gen_range(-half..=half), cy + rng.gen_range(-half..=half)],
                })
                .collect();
            Cluster { index: n, uav_height: spec.uav_height, users, sat_link: SatelliteLink::from_db(spec.sat_gain_db) }
        })
        .collect();
    let inst = NetworkInstance { clusters, budgets: spec.budgets, phys: spec.phys.clone(), sem: spec.sem.clone() };
    inst.validate()?;
    Ok(inst)
}

/// Solves with the blocks the baseline leaves free.
pub fn run_baseline(instance: &NetworkInstance, mode: BaselineMode, cfg: &SolverConfig) -> Result<SolveReport> {
    optimize_blocks(instance, cfg, mode.mask())
}

/// One row of an experiment table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub axis: String,
    pub mode: BaselineMode,
    pub sum_rate_bps: f64,
    pub iters: usize,
    pub max_residual: f64,
    pub wall_ms: f64,
    pub converged: bool,
    pub feasible: bool,
}

impl SeriesRow {
    pub fn new(axis: impl Into<String>, mode: BaselineMode, r: &SolveReport) -> Self {
        Self {
            axis: axis.into(),
            mode,
            sum_rate_bps: r.objective,
            iters: r.iterations,
            max_residual: r.max_residual,
            wall_ms: r.wall_ms,
            converged: r.converged,
            feasible: r.feasible,
        }
    }
}

/// Budget a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    UavBandwidth,
    UavPower,
    SatBandwidth,
    SatPower,
}

impl SweepAxis {
    pub fn apply(self, budgets: &mut Budgets, v: f64) {
        match self {
            SweepAxis::UavBandwidth => budgets.uav_bandwidth = v,
            SweepAxis::UavPower => budgets.uav_power = v,
            SweepAxis::SatBandwidth => budgets.sat_bandwidth = v,
            SweepAxis::SatPower => budgets.sat_power = v,
        }
    }
}

/// Re-solves `base` for each budget value and mode; rows are ordered by
/// value, then by mode in the given order.
pub fn sweep(
    axis: SweepAxis,
    values: &[f64],
    base: &NetworkInstance,
    modes: &[BaselineMode],
    cfg: &SolverConfig,
) -> Result<Vec<SeriesRow>> {
    if values.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::config("sweep.values", "must be sorted ascending"));
    }
    let jobs: Vec<(f64, BaselineMode)> = values.iter().flat_map(|&v| modes.iter().map(move |&m| (v, m))).collect();
    jobs.par_iter()
        .map(|&(v, m)| {
            let mut inst = base.clone();
            axis.apply(&mut inst.budgets, v);
            let r = run_baseline(&inst, m, cfg)?;
            Ok(SeriesRow::new(format!("{v:?}"), m, &r))
        })
        .collect()
}

/// Solves every mix on the same geometry (same seed).
pub fn scenario_sweep(
    base: &ScenarioSpec,
    mixes: &[MixMode],
    modes: &[BaselineMode],
    cfg: &SolverConfig,
) -> Result<Vec<SeriesRow>> {
    let jobs: Vec<(MixMode, BaselineMode)> = mixes.iter().flat_map(|&x| modes.iter().map(move |&m| (x, m))).collect();
    jobs.par_iter()
        .map(|&(mix, m)| {
            let inst = generate(&ScenarioSpec { mix, ..base.clone() })?;
            let r = run_baseline(&inst, m, cfg)?;
            Ok(SeriesRow::new(mix.as_str(), m, &r))
        })
        .collect()
}

/// Splits one user population round-robin into `k` clusters, each with its
/// own relay placed over the full population's square.
pub fn split_population(base: &NetworkInstance, k: usize) -> Result<NetworkInstance> {
    if k == 0 {
        return Err(Error::config("clusters", "must be >= 1"));
    }
    let template = base.clusters.first().ok_or_else(|| Error::config("clusters", "population is empty"))?;
    let users: Vec<GroundUser> = base.clusters.iter().flat_map(|c| c.users.iter().cloned()).collect();
    if users.len() < k {
        return Err(Error::config("clusters", "more clusters than users"));
    }
    let clusters = (0..k)
        .map(|n| Cluster {
            index: n,
            uav_height: template.uav_height,
            users: users.iter().skip(n).step_by(k).cloned().collect(),
            sat_link: template.sat_link,
        })
        .collect();
    let inst = NetworkInstance { clusters, ..base.clone() };
    inst.validate()?;
    Ok(inst)
}

/// Satellite ground track and cluster layout for the trajectory sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Trajectory {
    pub lon_start_deg: f64,
    pub lon_end_deg: f64,
    pub steps: usize,
    pub altitude: f64,
    /// Distance at which the satellite-hop gain equals its reference value, m.
    pub reference_distance: f64,
    /// Cluster centres on the ground, m, in the track frame (x along track).
    pub cluster_centers: Vec<[f64; 2]>,
}

impl Default for Trajectory {
    fn default() -> Self {
        let x0 = 7.0 * METRES_PER_DEG;
        // three centres equidistant (about 22.36 km) from the mid-track point
        let h = (20e3f64.powi(2) + 10e3f64.powi(2)).sqrt();
        Self {
            lon_start_deg: 0.0,
            lon_end_deg: 14.0,
            steps: 15,
            altitude: 60e3,
            reference_distance: 60e3,
            cluster_centers: vec![[x0 - 20e3, -10e3], [x0 + 20e3, -10e3], [x0, h]],
        }
    }
}

impl Trajectory {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::config("trajectory.steps", "must be >= 2"));
        }
        if !(self.altitude > 0.0 && self.reference_distance > 0.0) {
            return Err(Error::config("trajectory.altitude", "altitude and reference_distance must be > 0"));
        }
        if self.cluster_centers.is_empty() {
            return Err(Error::config("trajectory.cluster_centers", "at least one cluster is required"));
        }
        if !(self.lon_start_deg.is_finite() && self.lon_end_deg.is_finite()) {
            return Err(Error::config("trajectory.lon_start_deg", "longitudes must be finite"));
        }
        Ok(())
    }

    pub fn longitudes(&self) -> Vec<f64> {
        let n = self.steps - 1;
        (0..self.steps)
            .map(|i| self.lon_start_deg + (self.lon_end_deg - self.lon_start_deg) * i as f64 / n as f64)
            .collect()
    }

    pub fn distance(&self, lon_deg: f64, center: [f64; 2]) -> f64 {
        let dx = lon_deg * METRES_PER_DEG - center[0];
        (dx * dx + center[1] * center[1] + self.altitude * self.altitude).sqrt()
    }
}

/// Instance for the trajectory layout. Users of the first cluster are drawn
/// from the spec's square; a cluster whose centre mirrors an earlier one
/// across the mid-track line gets the mirrored users, so the layout keeps the
/// geometry's mirror symmetry.
pub fn trajectory_instance(traj: &Trajectory, spec: &ScenarioSpec) -> Result<NetworkInstance> {
    traj.validate()?;
    let mid = 0.5 * (traj.lon_start_deg + traj.lon_end_deg) * METRES_PER_DEG;
    let base = generate(&ScenarioSpec { clusters: traj.cluster_centers.len(), cluster_spacing: 0.0, ..spec.clone() })?;
    let mut clusters: Vec<Cluster> = Vec::with_capacity(traj.cluster_centers.len());
    for (n, &c) in traj.cluster_centers.iter().enumerate() {
        let mirror_of = traj.cluster_centers[..n]
            .iter()
            .position(|o| (2.0 * mid - o[0] - c[0]).abs() < 1e-6 && (o[1] - c[1]).abs() < 1e-6 && (o[0] - c[0]).abs() > 1e-6);
        let users = match mirror_of {
            Some(m) => clusters[m]
                .users
                .iter()
                .map(|u| GroundUser { kind: u.kind, position: [2.0 * mid - u.position[0], u.position[1]] })
                .collect(),
            None => base.clusters[n]
                .users
                .iter()
                .map(|u| GroundUser { kind: u.kind, position: [u.position[0] + c[0], u.position[1] + c[1]] })
                .collect(),
        };
        clusters.push(Cluster { index: n, users, ..base.clusters[n].clone() });
    }
    Ok(NetworkInstance { clusters, ..base })
}

/// Re-solves at each satellite position with every cluster's satellite-hop
/// gain rescaled as `(reference_distance / d)^2`.
pub fn trajectory_sweep(
    traj: &Trajectory,
    spec: &ScenarioSpec,
    modes: &[BaselineMode],
    cfg: &SolverConfig,
) -> Result<Vec<SeriesRow>> {
    let base = trajectory_instance(traj, spec)?;
    let g_ref = SatelliteLink::from_db(spec.sat_gain_db).gain;
    let jobs: Vec<(f64, BaselineMode)> =
        traj.longitudes().into_iter().flat_map(|l| modes.iter().map(move |&m| (l, m))).collect();
    jobs.par_iter()
        .map(|&(lon, m)| {
            let mut inst = base.clone();
            for (c, &center) in inst.clusters.iter_mut().zip(&traj.cluster_centers) {
                let r = traj.reference_distance / traj.distance(lon, center);
                c.sat_link = SatelliteLink { gain: g_ref * r * r };
            }
            let r = run_baseline(&inst, m, cfg)?;
            Ok(SeriesRow::new(format!("{lon:?}"), m, &r))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_round_trip() {
        for m in BaselineMode::ALL {
            assert_eq!(m.as_str().parse::<BaselineMode>().unwrap(), m);
        }
        assert_eq!(parse_modes("joint,fixed-l").unwrap(), vec![BaselineMode::Joint, BaselineMode::FixedLocation]);
        assert!(parse_modes("joint,bogus").is_err());
        assert!(parse_modes("").is_err());
    }

    #[test]
    fn mix_counts_follow_presets() {
        let s = ScenarioSpec { clusters: 4, mix: MixMode::Hybrid, ..Default::default() };
        assert_eq!((0..4).map(|n| s.counts(n)).collect::<Vec<_>>(), vec![(2, 6), (6, 2), (2, 6), (6, 2)]);
        let s = ScenarioSpec { mix: MixMode::SemConClusters, ..s };
        assert_eq!(s.counts(0), (0, 8));
        assert_eq!(s.counts(1), (8, 0));
    }

    #[test]
    fn default_track_is_equidistant_at_midpoint() {
        let t = Trajectory::default();
        let d: Vec<f64> = t.cluster_centers.iter().map(|&c| t.distance(7.0, c)).collect();
        assert!(d.iter().all(|x| (x - d[0]).abs() < 1e-6));
        assert_eq!(t.longitudes()[7], 7.0);
    }

    #[test]
    fn mirrored_clusters_get_mirrored_users() {
        let t = Trajectory::default();
        let inst = trajectory_instance(&t, &ScenarioSpec::default()).unwrap();
        let mid = 7.0 * METRES_PER_DEG;
        for (a, b) in inst.clusters[0].users.iter().zip(&inst.clusters[1].users) {
            assert!((a.position[0] + b.position[0] - 2.0 * mid).abs() < 1e-6);
            assert_eq!(a.position[1], b.position[1]);
        }
    }
}
