//! Power/location block: satellite and downlink powers plus UAV placement
//! at fixed bandwidths.

use super::bandwidth::{solve_bandwidth_with, BandwidthOptions};
use super::config::SolverConfig;
use super::model::{concave_threshold, max_power_fill, solve_increasing_in_r, waterfill, Downlink, SatHop};
use super::state::{AuxState, DualState, Events};
use crate::error::Result;
use crate::netmodel::{Allocation, ClusterAlloc, NetworkInstance};
use crate::roots::find_root;
use std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy)]
pub struct PowerOptions {
    pub power: bool,
    pub location: bool,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self { power: true, location: true }
    }
}

#[derive(Debug, Clone)]
pub struct PowerOutcome {
    pub alloc: Allocation,
    pub aux: AuxState,
    pub duals: DualState,
    pub iterations: usize,
    pub warning: bool,
    pub events: Events,
}

pub fn solve_power_location(
    instance: &NetworkInstance,
    alloc: &Allocation,
    aux: &AuxState,
    duals: &DualState,
    cfg: &SolverConfig,
) -> Result<(Allocation, AuxState, DualState)> {
    let o = solve_power_location_with(instance, alloc, aux, duals, cfg, PowerOptions::default())?;
    Ok((o.alloc, o.aux, o.duals))
}

/// Centroid weights of the distance majoriser at the current point.
///
/// The link rate is convex in the squared distance, so minimising
/// `sum_k w_k |l - u_k|^2` with these weights never lowers the rate.
pub fn centroid_weights(instance: &NetworkInstance, n: usize, ca: &ClusterAlloc) -> Vec<f64> {
    let cl = &instance.clusters[n];
    let dl = Downlink::new(instance, n, ca.uav_xy);
    let m = 0.5 * instance.phys.alpha;
    cl.users
        .iter()
        .enumerate()
        .map(|(k, u)| {
            let l = &ca.links[k];
            if l.bandwidth <= 0.0 || l.power <= 0.0 {
                return 0.0;
            }
            let dx = ca.uav_xy[0] - u.position[0];
            let dy = ca.uav_xy[1] - u.position[1];
            let s = dx * dx + dy * dy + cl.uav_height * cl.uav_height;
            let x = dl.s(k, l.power) / l.bandwidth;
            dl.w[k] * l.bandwidth * m * (x / (1.0 + x)) / (s * LN_2)
        })
        .collect()
}

/// `|sum_k w_k (l - u_k)| / sum_k w_k |l - u_k|` at the current weights.
fn location_stationarity(instance: &NetworkInstance, n: usize, ca: &ClusterAlloc) -> f64 {
    let w = centroid_weights(instance, n, ca);
    let (mut g, mut mag) = ([0.0, 0.0], 0.0);
    for (u, wk) in instance.clusters[n].users.iter().zip(&w) {
        let d = [ca.uav_xy[0] - u.position[0], ca.uav_xy[1] - u.position[1]];
        g[0] += wk * d[0];
        g[1] += wk * d[1];
        mag += wk * d[0].hypot(d[1]);
    }
    if mag > 0.0 {
        g[0].hypot(g[1]) / mag
    } else {
        0.0
    }
}

/// Moves the UAV by repeated weighted-centroid steps. Returns the final
/// weights, or `None` when they all vanish and the UAV stays put.
fn relocate(instance: &NetworkInstance, n: usize, ca: &mut ClusterAlloc, cfg: &SolverConfig) -> Option<Vec<f64>> {
    let users = &instance.clusters[n].users;
    let mut w = centroid_weights(instance, n, ca);
    for _ in 0..cfg.location_max_iters {
        let tot: f64 = w.iter().sum();
        if !(tot > 0.0) {
            return None;
        }
        let x = users.iter().zip(&w).map(|(u, wk)| wk * u.position[0]).sum::<f64>() / tot;
        let y = users.iter().zip(&w).map(|(u, wk)| wk * u.position[1]).sum::<f64>() / tot;
        let step = ((x - ca.uav_xy[0]).powi(2) + (y - ca.uav_xy[1]).powi(2)).sqrt();
        ca.uav_xy = [x, y];
        w = centroid_weights(instance, n, ca);
        if step <= 1e-9 {
            break;
        }
    }
    Some(w)
}

pub fn solve_power_location_with(
    instance: &NetworkInstance,
    alloc: &Allocation,
    _aux: &AuxState,
    duals: &DualState,
    cfg: &SolverConfig,
    opts: PowerOptions,
) -> Result<PowerOutcome> {
    alloc.check_shape(instance)?;
    let mut a = alloc.clone();
    let mut next = duals.clone();
    let mut events = Events::default();
    let mut iterations = 0;
    let mut warning = false;

    if opts.location {
        for (n, ca) in a.clusters.iter_mut().enumerate() {
            match relocate(instance, n, ca, cfg) {
                Some(w) => {
                    for (d, wk) in next.lambda.clusters[n].links.iter_mut().zip(w) {
                        d.l6p = wk;
                    }
                }
                None => events.frozen_uav += 1,
            }
        }
    }

    if opts.power {
        let m = 1.0 - cfg.budget_margin;
        let bud = &instance.budgets;
        let zeta0 = instance.phys.zeta0;
        let fp = cfg.floor_power;
        let mut dls = Vec::new();
        let mut full = Vec::new();
        let mut need = Vec::new();
        for (n, ca) in a.clusters.iter().enumerate() {
            let dl = Downlink::new(instance, n, ca.uav_xy);
            let b: Vec<f64> = ca.links.iter().map(|l| l.bandwidth).collect();
            let (_, fill) = max_power_fill(&dl, &b, bud.uav_power * m, zeta0, cfg);
            let u = dl.rate(&b, &fill.p);
            let hop = SatHop::new(instance, n);
            need.push(hop.power_for_rate(ca.b_s2r, u, fp));
            dls.push((dl, b));
            full.push((fill, u));
        }
        let p_s_tot = bud.sat_power * m;
        let finite_sum: Option<f64> = need.iter().copied().sum();
        let mut lambda4 = 0.0;
        let p_s: Vec<f64> = match finite_sum {
            Some(s) if s <= p_s_tot => need.iter().map(|v| v.unwrap()).collect(),
            _ => {
                let r_c = concave_threshold(&instance.sem);
                let top = (0..a.clusters.len())
                    .map(|n| SatHop::new(instance, n).marginal_p_at(r_c))
                    .fold(0.0, f64::max)
                    * (1.0 + 1e-9);
                let demand = |l4: f64| -> Vec<f64> {
                    (0..a.clusters.len())
                        .map(|n| power_at_price(instance, n, a.clusters[n].b_s2r, l4, need[n], r_c, fp, cfg))
                        .collect()
                };
                let br = find_root(|l4| demand(l4).iter().sum::<f64>() - p_s_tot, 0.0, top, cfg.bisection_tol * top, cfg.dual_max_iters);
                iterations += br.iterations;
                warning |= !br.converged;
                lambda4 = br.hi;
                let mut p = demand(lambda4);
                let s: f64 = p.iter().sum();
                if s > p_s_tot {
                    p.iter_mut().for_each(|v| *v *= p_s_tot / s);
                    events.rescales += 1;
                }
                p
            }
        };
        next.lambda.l4 = lambda4;

        for (n, ca) in a.clusters.iter_mut().enumerate() {
            let hop = SatHop::new(instance, n);
            let (dl, b) = &dls[n];
            let (fill, u) = &full[n];
            ca.p_s2r = p_s[n];
            let s = hop.rate(ca.b_s2r, ca.p_s2r);
            let reduced = s < *u;
            let p = if reduced {
                let p_full: f64 = fill.p.iter().sum();
                let br = find_root(
                    |pt| dl.rate(b, &waterfill(dl, b, pt, fp).p) - s,
                    0.0,
                    p_full,
                    cfg.bisection_tol * p_full,
                    cfg.dual_max_iters,
                );
                iterations += br.iterations;
                warning |= !br.converged;
                waterfill(dl, b, br.lo, fp).p
            } else {
                fill.p.clone()
            };
            for (l, v) in ca.links.iter_mut().zip(&p) {
                l.power = *v;
            }
            let d = &mut next.lambda.clusters[n];
            let mp = hop.marginal_p(ca.b_s2r, ca.p_s2r);
            d.l11 = if reduced {
                1.0
            } else if lambda4 > 0.0 && mp > 0.0 {
                (lambda4 / mp).min(1.0)
            } else {
                0.0
            };
            d.l5 = if reduced { 0.0 } else { (1.0 - d.l11) * fill.level };
            let r = hop.r_db(ca.b_s2r, ca.p_s2r);
            d.l7 = d.l11 * hop.kappa * ca.b_s2r * crate::semcom::similarity_derivative(r, hop.sem);
        }
    } else if opts.location {
        // powers are pinned, so restore the relay balance through bandwidth;
        // the new split moves the centroid weights, hence the alternation
        for round in 0..cfg.location_max_iters {
            let aux = AuxState::tight(instance, &a);
            let o = solve_bandwidth_with(instance, &a, &aux, &next, cfg, BandwidthOptions { refill: false })?;
            let l6p: Vec<Vec<f64>> =
                next.lambda.clusters.iter().map(|c| c.links.iter().map(|l| l.l6p).collect()).collect();
            a = o.alloc;
            next = o.duals;
            for (c, w) in next.lambda.clusters.iter_mut().zip(&l6p) {
                c.links.iter_mut().zip(w).for_each(|(l, &v)| l.l6p = v);
            }
            iterations += o.iterations;
            warning |= o.warning;
            events += o.events;
            let worst = (0..a.clusters.len()).map(|n| location_stationarity(instance, n, &a.clusters[n])).fold(0.0, f64::max);
            if worst <= 0.1 * cfg.kkt_tol {
                break;
            }
            if round + 1 == cfg.location_max_iters {
                warning = true;
                break;
            }
            for (n, ca) in a.clusters.iter_mut().enumerate() {
                if let Some(w) = relocate(instance, n, ca, cfg) {
                    for (d, wk) in next.lambda.clusters[n].links.iter_mut().zip(w) {
                        d.l6p = wk;
                    }
                }
            }
        }
    }

    let aux = AuxState::tight(instance, &a);
    Ok(PowerOutcome { alloc: a, aux, duals: next, iterations, warning, events })
}

/// Satellite power a cluster takes when watts are priced at `l4`, capped
/// at the power that balances its downlink.
#[allow(clippy::too_many_arguments)]
fn power_at_price(
    instance: &NetworkInstance,
    n: usize,
    b_s: f64,
    l4: f64,
    cap: Option<f64>,
    r_c: f64,
    floor: f64,
    cfg: &SolverConfig,
) -> f64 {
    let hop = SatHop::new(instance, n);
    let cap = cap.unwrap_or(f64::INFINITY);
    if b_s <= 0.0 || l4 >= hop.marginal_p_at(r_c) {
        return floor.min(cap);
    }
    let r = match solve_increasing_in_r(|r| l4 - hop.marginal_p_at(r), r_c, cfg) {
        Some(r) => r,
        None => return cap.min(instance.budgets.sat_power),
    };
    let p = hop.power_at(b_s, r).max(floor);
    let v = |p: f64| hop.rate(b_s, p) - l4 * p;
    let p = if v(p) >= v(floor) { p } else { floor };
    p.min(cap)
}

/// Closed-form satellite power of the power block: `10 lambda7 / (lambda4 ln 10)`.
pub fn closed_form_p_s2r(lambda7: f64, lambda4: f64) -> f64 {
    10.0 * lambda7 / (lambda4 * std::f64::consts::LN_10)
}

/// Closed-form downlink power of the power block for one link.
///
/// `weight_b` is the rate weight times bandwidth and `a_p = H/(b N0)`.
pub fn closed_form_p_link(weight_b: f64, a_p: f64, lambda8: f64, lambda12: f64) -> f64 {
    (weight_b / LN_2) / (lambda8 * a_p + lambda12) - 1.0 / a_p
}

/// Closed-form downlink SNR bound `(lambda8 + lambda9' (2^eta - 1)) / (2 lambda9')`.
pub fn closed_form_gamma_hat(lambda8: f64, lambda9p: f64, eta_hat: f64) -> f64 {
    (lambda8 + lambda9p * (eta_hat.exp2() - 1.0)) / (2.0 * lambda9p)
}
