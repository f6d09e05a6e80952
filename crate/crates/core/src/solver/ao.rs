//! Initialisation and the alternating loop over the three blocks.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::auxiliary::solve_auxiliary_with;
use super::bandwidth::{solve_bandwidth_with, tighten_b_s2r, BandwidthOptions};
use super::config::SolverConfig;
use super::kkt::{kkt_residual_masked, KktMask};
use super::model::Downlink;
use super::power::{solve_power_location_with, PowerOptions};
use super::state::{AuxState, DualState, Events};
use crate::error::{Error, Result};
use crate::netmodel::{self, Allocation, ClusterAlloc, LinkAlloc, NetworkInstance, Residuals, UserKind};
use crate::roots::last_true;

/// Which variable blocks the loop may change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockMask {
    pub bandwidth: bool,
    pub power: bool,
    pub location: bool,
}

impl BlockMask {
    pub const JOINT: BlockMask = BlockMask { bandwidth: true, power: true, location: true };
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InnerIterations {
    pub bandwidth: Vec<usize>,
    pub auxiliary: Vec<usize>,
    pub power: Vec<usize>,
}

/// Block KKT residuals from the last outer cycle, each measured right after
/// its block with that block's multipliers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub bandwidth: f64,
    pub auxiliary: f64,
    pub power: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.bandwidth.max(self.auxiliary).max(self.power)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub objective: f64,
    pub allocation: Allocation,
    pub aux: AuxState,
    pub duals: DualState,
    /// Objective at initialisation followed by one entry per outer cycle.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub inner_iterations: InnerIterations,
    pub residuals: Residuals,
    /// Worst relative violation over all constraints, clipped at zero.
    pub max_residual: f64,
    pub kkt: KktReport,
    pub events: Events,
    pub converged: bool,
    pub feasible: bool,
    pub warning: Option<String>,
    pub wall_ms: f64,
}

/// Equal-split starting point with tight auxiliaries.
pub fn init_allocation(instance: &NetworkInstance, cfg: &SolverConfig) -> Result<(Allocation, AuxState)> {
    instance.validate()?;
    cfg.validate()?;
    if instance.clusters.is_empty() {
        return Err(Error::config("clusters", "at least one cluster is required"));
    }
    let bud = &instance.budgets;
    let ph = &instance.phys;
    let sem = &instance.sem;
    let n = instance.clusters.len() as f64;
    // an equal share larger than the relay budget would leave no downlink
    let b_s = (bud.sat_bandwidth / n).min(0.5 * bud.uav_bandwidth);
    let p_s = bud.sat_power / n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut clusters = Vec::with_capacity(instance.clusters.len());
    for (idx, c) in instance.clusters.iter().enumerate() {
        let k = c.users.len() as f64;
        let b_k = (bud.uav_bandwidth - b_s) / k;
        if b_k < cfg.floor_bandwidth || b_s < cfg.floor_bandwidth {
            return Err(Error::config("budgets.uav_bandwidth", format!("cluster {idx}: too small for floor allocations")));
        }
        // compute-power reserve at the largest rate the satellite hop can carry
        let g_max = c
            .users
            .iter()
            .map(|u| match u.kind {
                UserKind::Sem => ph.g_sem,
                UserKind::Con => ph.g_con,
            })
            .fold(0.0, f64::max);
        let nu_ub = g_max / ph.flops_per_cycle * sem.kappa() * b_s * (sem.a1 + sem.a2) / 1e9;
        let reserve = ph.zeta0 * nu_ub.powi(3);
        let p_avail = bud.uav_power - reserve;
        if p_avail < cfg.floor_power * k {
            return Err(Error::config("budgets.uav_power", format!("cluster {idx}: compute reserve exhausts the budget")));
        }
        let mut xy = c.centroid();
        if cfg.init_jitter > 0.0 {
            xy[0] += cfg.init_jitter * rng.gen_range(-1.0..1.0);
            xy[1] += cfg.init_jitter * rng.gen_range(-1.0..1.0);
        }
        let links = vec![LinkAlloc { bandwidth: b_k, power: p_avail / k }; c.users.len()];
        let mut ca = ClusterAlloc { b_s2r: b_s, p_s2r: p_s, uav_xy: xy, links };
        let s = netmodel::s2r_rate(instance, idx, b_s, p_s);
        let dl = Downlink::new(instance, idx, xy);
        let p: Vec<f64> = ca.links.iter().map(|l| l.power).collect();
        let rate_at = |t: f64| {
            let b: Vec<f64> = vec![b_k * t; p.len()];
            dl.rate(&b, &p)
        };
        if rate_at(1.0) > s {
            let (t, _) = last_true(|t| rate_at(t) <= s, 0.0, 1.0, 1e-15, 200);
            ca.links.iter_mut().for_each(|l| l.bandwidth = (b_k * t).max(cfg.floor_bandwidth));
        }
        clusters.push(ca);
    }
    let alloc = Allocation { clusters };
    let aux = AuxState::tight(instance, &alloc);
    Ok((alloc, aux))
}

pub fn alternating_optimize(instance: &NetworkInstance, cfg: &SolverConfig) -> Result<SolveReport> {
    optimize_blocks(instance, cfg, BlockMask::JOINT)
}

/// Alternating optimisation over the unmasked blocks.
pub fn optimize_blocks(instance: &NetworkInstance, cfg: &SolverConfig, mask: BlockMask) -> Result<SolveReport> {
    let t0 = Instant::now();
    let (mut alloc, mut aux) = init_allocation(instance, cfg)?;
    let mut duals = DualState::new(instance, cfg.dual_base_steps.clone());
    let mut obj = netmodel::sum_rate(instance, &alloc);
    let mut trace = vec![obj];
    let mut inner = InnerIterations::default();
    let mut events = Events::default();
    let mut kkt = KktReport::default();
    let mut warning = false;
    let mut converged = false;
    let mut iterations = 0;
    let accept = |new: f64, old: f64| new >= old - 1e-10 * old.abs();

    for _ in 0..cfg.outer_max_iters {
        iterations += 1;
        let prev = obj;
        if mask.bandwidth {
            let o = solve_bandwidth_with(instance, &alloc, &aux, &duals, cfg, BandwidthOptions { refill: mask.power })?;
            inner.bandwidth.push(o.iterations);
            warning |= o.warning;
            events += o.events;
            let v = netmodel::sum_rate(instance, &o.alloc);
            if accept(v, obj) {
                alloc = o.alloc;
                duals = o.duals;
                obj = v;
                aux = AuxState::tight(instance, &alloc);
                let m = KktMask { bandwidth: true, power: false, location: false };
                kkt.bandwidth = kkt_residual_masked(instance, &alloc, &aux, &duals, m);
            } else {
                events.reverts += 1;
            }
        }

        let o = solve_auxiliary_with(instance, &alloc, &aux, &duals, cfg)?;
        inner.auxiliary.push(o.iterations);
        warning |= o.warning;
        events.projections += o.projections;
        aux = o.aux;
        duals = o.duals;
        kkt.auxiliary = aux_residual(instance, &alloc, &aux);

        if mask.power || mask.location {
            let opts = PowerOptions { power: mask.power, location: mask.location };
            let o = solve_power_location_with(instance, &alloc, &aux, &duals, cfg, opts)?;
            inner.power.push(o.iterations);
            warning |= o.warning;
            events += o.events;
            let v = netmodel::sum_rate(instance, &o.alloc);
            if accept(v, obj) {
                alloc = o.alloc;
                aux = o.aux;
                duals = o.duals;
                obj = v;
                let m = if mask.power {
                    KktMask { bandwidth: false, power: true, location: mask.location }
                } else {
                    KktMask { bandwidth: true, power: false, location: true }
                };
                kkt.power = kkt_residual_masked(instance, &alloc, &aux, &duals, m);
            } else {
                events.reverts += 1;
            }
        }
        trace.push(obj);
        if (obj - prev).abs() <= cfg.outer_rel_tol * obj.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    if mask.bandwidth {
        let (a, rescaled) = tighten_b_s2r(instance, &alloc, &aux, cfg);
        if rescaled {
            events.rescales += 1;
        } else {
            alloc = a;
        }
    }
    aux = AuxState::tight(instance, &alloc);
    let residuals = netmodel::constraint_residuals(instance, &alloc, Some(&aux));
    let worst = residuals.max_violation();
    let feasible = residuals.max_original() <= 1e-8;
    let msg = if !converged {
        Some(format!("outer iteration cap {} reached", cfg.outer_max_iters))
    } else if warning {
        Some("an inner search hit its iteration cap".to_string())
    } else {
        None
    };
    Ok(SolveReport {
        objective: netmodel::sum_rate(instance, &alloc),
        allocation: alloc,
        aux,
        duals,
        objective_trace: trace,
        iterations,
        inner_iterations: inner,
        residuals,
        max_residual: worst.max(0.0),
        kkt,
        events,
        converged,
        feasible,
        warning: msg,
        wall_ms: t0.elapsed().as_secs_f64() * 1e3,
    })
}

/// Worst relative violation of the auxiliary constraints C6-C10.
fn aux_residual(instance: &NetworkInstance, alloc: &Allocation, aux: &AuxState) -> f64 {
    let r = netmodel::constraint_residuals(instance, alloc, Some(aux));
    let a = r.aux.expect("aux residuals requested");
    a.c6.iter()
        .chain(&a.c8)
        .chain(&a.c9)
        .flatten()
        .chain(&a.c10)
        .map(|x| x.rel())
        .fold(0.0, f64::max)
}
