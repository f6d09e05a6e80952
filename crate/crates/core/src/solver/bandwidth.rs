//! Bandwidth block: satellite-hop and downlink bandwidths at fixed powers
//! and UAV positions.

use super::config::SolverConfig;
use super::model::{concave_threshold, solve_increasing_in_r, max_power_fill, split_bandwidth, waterfill, Downlink, SatHop, Split};
use super::state::{AuxState, DualState, Events};
use crate::error::Result;
use crate::netmodel::{Allocation, NetworkInstance, SemanticParams};
use crate::roots::find_root;
use crate::semcom;

#[derive(Debug, Clone, Copy)]
pub struct BandwidthOptions {
    /// Rescale powers onto their budgets before re-splitting bandwidth.
    pub refill: bool,
}

impl Default for BandwidthOptions {
    fn default() -> Self {
        Self { refill: true }
    }
}

#[derive(Debug, Clone)]
pub struct BlockOutcome {
    pub alloc: Allocation,
    pub duals: DualState,
    pub iterations: usize,
    /// Some inner search hit its iteration cap.
    pub warning: bool,
    pub events: Events,
}

/// Bandwidth block with default options.
pub fn solve_bandwidth(
    instance: &NetworkInstance,
    alloc: &Allocation,
    aux: &AuxState,
    duals: &DualState,
    cfg: &SolverConfig,
) -> Result<(Allocation, DualState)> {
    let out = solve_bandwidth_with(instance, alloc, aux, duals, cfg, BandwidthOptions::default())?;
    Ok((out.alloc, out.duals))
}

struct ClusterCtx<'a> {
    dl: Downlink,
    hop: SatHop<'a>,
    p: Vec<f64>,
    p_s: f64,
    /// Largest downlink bandwidth the compute budget allows.
    beta_cap: f64,
    /// Satellite-hop bandwidth at which the two hops balance.
    b_cross: f64,
    iterations: usize,
    warning: bool,
}

impl ClusterCtx<'_> {
    fn split(&self, beta: f64, cfg: &SolverConfig) -> Split {
        split_bandwidth(&self.dl, &self.p, beta.min(self.beta_cap), cfg)
    }
}

pub fn solve_bandwidth_with(
    instance: &NetworkInstance,
    alloc: &Allocation,
    _aux: &AuxState,
    duals: &DualState,
    cfg: &SolverConfig,
    opts: BandwidthOptions,
) -> Result<BlockOutcome> {
    alloc.check_shape(instance)?;
    let m = 1.0 - cfg.budget_margin;
    let bud = &instance.budgets;
    let b_r = bud.uav_bandwidth * m;
    let b_s_tot = bud.sat_bandwidth * m;
    let mut a = alloc.clone();
    let mut events = Events::default();
    if opts.refill {
        refill_powers(instance, &mut a, cfg);
    }
    let zeta0 = instance.phys.zeta0;
    let floor = cfg.floor_bandwidth;

    let mut ctx: Vec<ClusterCtx> = Vec::with_capacity(a.clusters.len());
    for (n, ca) in a.clusters.iter().enumerate() {
        let dl = Downlink::new(instance, n, ca.uav_xy);
        let hop = SatHop::new(instance, n);
        let p: Vec<f64> = ca.links.iter().map(|l| l.power).collect();
        let k = dl.len() as f64;
        let mut c = ClusterCtx { dl, hop, p, p_s: ca.p_s2r, beta_cap: b_r, b_cross: 0.0, iterations: 0, warning: false };
        let p_sum: f64 = c.p.iter().sum();
        let nu_cap = ((bud.uav_power * m - p_sum).max(0.0) / zeta0).cbrt();
        let load_at = |beta: f64, c: &ClusterCtx| {
            let s = split_bandwidth(&c.dl, &c.p, beta, cfg);
            c.dl.load(&s.b, &c.p)
        };
        if load_at(b_r, &c) > nu_cap {
            let br = find_root(|beta| nu_cap - load_at(beta, &c), k * floor, b_r, cfg.bisection_tol * b_r, cfg.dual_max_iters);
            c.beta_cap = br.lo;
            c.iterations += br.iterations;
            events.load_capped += 1;
        }
        // balance point between the hops
        let lo = floor;
        let hi = b_r - k * floor;
        let h = |bs: f64, c: &ClusterCtx| c.split(b_r - bs, cfg).rate - c.hop.rate(bs, c.p_s);
        c.b_cross = if h(lo, &c) <= 0.0 {
            lo
        } else if h(hi, &c) >= 0.0 {
            hi
        } else {
            let br = find_root(|bs| h(bs, &c), lo, hi, cfg.bisection_tol * b_r, cfg.dual_max_iters);
            c.iterations += br.iterations;
            c.warning |= !br.converged;
            br.hi
        };
        ctx.push(c);
    }

    // satellite bandwidth: price the shared budget when the balance points overflow it
    let cross_sum: f64 = ctx.iter().map(|c| c.b_cross).sum();
    let mut lambda2 = 0.0;
    let mut b_s: Vec<f64> = ctx.iter().map(|c| c.b_cross).collect();
    let mut iterations = 0;
    if cross_sum > b_s_tot {
        let sem = &instance.sem;
        let top = sem.kappa() * (sem.a1 + sem.a2);
        let total = |l2: f64| -> f64 { ctx.iter().map(|c| bandwidth_at_price(c, l2, floor, sem, cfg)).sum() };
        let br = find_root(|l2| total(l2) - b_s_tot, 0.0, top, cfg.bisection_tol * top, cfg.dual_max_iters);
        iterations += br.iterations;
        lambda2 = br.hi;
        b_s = ctx.iter().map(|c| bandwidth_at_price(c, lambda2, floor, sem, cfg)).collect();
        let s: f64 = b_s.iter().sum();
        if s > b_s_tot {
            // discontinuous demand: trim proportionally onto the budget
            b_s.iter_mut().for_each(|v| *v *= b_s_tot / s);
            events.rescales += 1;
        }
    }

    let mut next = duals.clone();
    next.lambda.l2 = lambda2;
    let mut warning = false;
    for (n, c) in ctx.iter().enumerate() {
        iterations += c.iterations;
        warning |= c.warning;
        let at_cross = b_s[n] >= c.b_cross;
        let bs = b_s[n].min(c.b_cross);
        let split = if at_cross {
            c.split(b_r - bs, cfg)
        } else {
            let target = c.hop.rate(bs, c.p_s);
            let top = (b_r - bs).min(c.beta_cap);
            let br = find_root(
                |beta| c.split(beta, cfg).rate - target,
                0.0,
                top,
                cfg.bisection_tol * b_r,
                cfg.dual_max_iters,
            );
            iterations += br.iterations;
            c.split(br.lo, cfg)
        };
        let ca = &mut a.clusters[n];
        for (l, &b) in ca.links.iter_mut().zip(&split.b) {
            l.bandwidth = b;
        }
        let t = split.rate;
        let bs = c.hop.bandwidth_for_rate(c.p_s, t, b_r - split.b.iter().sum::<f64>(), cfg).max(floor);
        ca.b_s2r = bs;

        let s_prime = c.hop.marginal_b(bs, c.p_s);
        let d = &mut next.lambda.clusters[n];
        let tight3 = at_cross && c.beta_cap >= b_r - bs;
        if tight3 {
            let l11 = ((lambda2 + split.level) / (s_prime + split.level)).clamp(0.0, 1.0);
            d.l11 = l11;
            d.l3 = (1.0 - l11) * split.level;
        } else {
            d.l11 = if lambda2 > 0.0 { (lambda2 / s_prime).min(1.0) } else { 1.0 };
            d.l3 = 0.0;
        }
        d.l10 = 0.0;
    }
    Ok(BlockOutcome { alloc: a, duals: next, iterations, warning, events })
}

/// Satellite-hop bandwidth a cluster takes when hertz are priced at `l2`.
fn bandwidth_at_price(c: &ClusterCtx, l2: f64, floor: f64, sem: &SemanticParams, cfg: &SolverConfig) -> f64 {
    let hop = &c.hop;
    let bx = c.b_cross;
    if c.p_s <= 0.0 {
        return if l2 < hop.kappa * sem.a1 { bx } else { floor };
    }
    let r_x = hop.r_db(bx, c.p_s);
    let r_c = concave_threshold(sem);
    let value = |b: f64| hop.rate(b, c.p_s) - l2 * b;
    if r_x >= r_c && hop.marginal_b_at(r_x) >= l2 {
        return bx;
    }
    let r_lo = r_x.max(r_c);
    let interior = solve_increasing_in_r(|r| hop.marginal_b_at(r) - l2, r_lo, cfg)
        .map(|r| hop.bandwidth_at(c.p_s, r).clamp(floor, bx));
    let mut best = (floor, value(floor));
    if let Some(b) = interior {
        if value(b) > best.1 {
            best = (b, value(b));
        }
    }
    if r_x < r_c && value(bx) > best.1 {
        best = (bx, value(bx));
    }
    best.0
}

/// Scales satellite powers up onto their budget and rescales downlink shares
/// onto the relay budget net of the compute power needed at the largest
/// load the satellite hop could feed.
pub fn refill_powers(instance: &NetworkInstance, a: &mut Allocation, cfg: &SolverConfig) {
    let m = 1.0 - cfg.budget_margin;
    let bud = &instance.budgets;
    let zeta0 = instance.phys.zeta0;
    let ps: f64 = a.clusters.iter().map(|c| c.p_s2r).sum();
    let target = bud.sat_power * m;
    if ps <= 0.0 {
        let each = target / a.clusters.len() as f64;
        a.clusters.iter_mut().for_each(|c| c.p_s2r = each);
    } else if ps < target {
        let f = target / ps;
        a.clusters.iter_mut().for_each(|c| c.p_s2r *= f);
    }
    let budget = bud.uav_power * m;
    for (n, ca) in a.clusters.iter_mut().enumerate() {
        let dl = Downlink::new(instance, n, ca.uav_xy);
        let b: Vec<f64> = ca.links.iter().map(|l| l.bandwidth).collect();
        let sum0: f64 = ca.links.iter().map(|l| l.power).sum();
        let c_max = dl.c.iter().copied().fold(0.0, f64::max);
        let nu_res = c_max * SatHop::new(instance, n).rate(bud.uav_bandwidth, ca.p_s2r);
        let total = budget - zeta0 * nu_res.powi(3);
        let k = ca.links.len() as f64;
        if total <= k * cfg.floor_power {
            if sum0 <= 0.0 {
                let (_, f) = max_power_fill(&dl, &b, budget, zeta0, cfg);
                ca.links.iter_mut().zip(f.p).for_each(|(l, p)| l.power = p);
            }
            continue;
        }
        if sum0 <= 0.0 {
            let f = waterfill(&dl, &b, total, cfg.floor_power);
            ca.links.iter_mut().zip(f.p).for_each(|(l, p)| l.power = p);
        } else {
            let f = total / sum0;
            ca.links.iter_mut().for_each(|l| l.power = (l.power * f).max(cfg.floor_power));
        }
    }
}

/// Bandwidth that makes C11 tight for the given rate sum and SNR bound.
pub fn tight_b_s2r(gamma_sum: f64, r_hat: f64, sem: &SemanticParams, floor: f64) -> f64 {
    if gamma_sum <= 0.0 {
        return floor;
    }
    sem.q_symbols / (sem.mu1 * semcom::similarity(r_hat, sem)) * gamma_sum
}

/// Re-tightens every satellite-hop bandwidth so the relay balance C11 holds
/// with equality, with the SNR bound following the new bandwidth.
///
/// Returns the allocation and whether a rescale onto the satellite budget
/// was needed.
pub fn tighten_b_s2r(instance: &NetworkInstance, alloc: &Allocation, aux: &AuxState, cfg: &SolverConfig) -> (Allocation, bool) {
    let mut a = alloc.clone();
    for (n, (ca, x)) in a.clusters.iter_mut().zip(&aux.clusters).enumerate() {
        let gsum: f64 = instance.clusters[n]
            .users
            .iter()
            .zip(ca.links.iter().zip(&x.links))
            .map(|(u, (l, la))| instance.sem.weight(u.kind) * l.bandwidth * la.eta_hat)
            .sum();
        if gsum <= 0.0 {
            ca.b_s2r = cfg.floor_bandwidth;
            continue;
        }
        let hop = SatHop::new(instance, n);
        let b_max = instance.budgets.uav_bandwidth.max(instance.budgets.sat_bandwidth);
        ca.b_s2r = hop.bandwidth_for_rate(ca.p_s2r, gsum, b_max, cfg);
    }
    let tot: f64 = a.clusters.iter().map(|c| c.b_s2r).sum();
    let rescaled = tot > instance.budgets.sat_bandwidth;
    if rescaled {
        let f = instance.budgets.sat_bandwidth / tot;
        a.clusters.iter_mut().for_each(|c| c.b_s2r *= f);
    }
    (a, rescaled)
}
