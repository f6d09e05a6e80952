//! Brute-force reference optimiser and feasibility checker for tiny
//! instances.
//!
//! The search space is parameterised so that every candidate satisfies the
//! budget constraints by construction:
//!
//! * per-link bandwidth and power shares come from stick-breaking fractions;
//! * the downlink power total is the largest one meeting the relay power
//!   budget including computation;
//! * the downlink bandwidth total is not searched: it is the balance point
//!   where the downlink rate meets the satellite hop fed by the remaining
//!   relay band (capped by the cluster's satellite share), since the
//!   objective increases in it up to that point and is infeasible beyond;
//! * any residual excess is removed by scaling downlink bandwidths and
//!   powers by a common factor, which scales every link capacity by it.
//!
//! The incumbent is always re-checked by [`feasible`], which evaluates the
//! original constraints from first principles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{
    air_channel_gain, link_capacity, s2r_rate, Allocation, ClusterAlloc, LinkAlloc, NetworkInstance, UserKind,
};

pub const MAX_CLUSTERS: usize = 2;
pub const MAX_USERS: usize = 3;
const FEAS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Upper bound on the number of points in the initial full grid; the
    /// per-axis resolution is the largest one within it, but never below 3.
    pub max_grid_points: usize,
    /// Points per axis in each refinement line search.
    pub line_points: usize,
    pub rounds: usize,
    /// Factor applied to the search radius after each round.
    pub shrink: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { max_grid_points: 60_000, line_points: 21, rounds: 40, shrink: 0.6 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.line_points < 3 {
            return Err(Error::config("oracle.line_points", "must be >= 3"));
        }
        if self.max_grid_points < 3 {
            return Err(Error::config("oracle.max_grid_points", "must be >= 3"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::config("oracle.shrink", "must lie in (0, 1)"));
        }
        Ok(())
    }

    fn resolution(&self, dims: usize) -> usize {
        let mut r = 3usize;
        while (r + 1).checked_pow(dims as u32).is_some_and(|n| n <= self.max_grid_points) {
            r += 1;
        }
        r
    }
}

/// Signed constraint values (`<= 0` satisfied) and their scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub c1: Vec<f64>,
    pub c2: f64,
    pub c3: Vec<f64>,
    pub c4: f64,
    pub c5: Vec<f64>,
    /// Names of violated constraints, e.g. `"C4"` or `"C1[0]"`.
    pub violated: Vec<String>,
}

/// Checks the original constraints C1-C5 plus nonnegativity at true gains.
pub fn feasible(instance: &NetworkInstance, alloc: &Allocation) -> Result<Feasibility> {
    alloc.check_shape(instance)?;
    let bud = &instance.budgets;
    let ph = &instance.phys;
    let mut out = Feasibility { feasible: true, c1: vec![], c2: 0.0, c3: vec![], c4: 0.0, c5: vec![], violated: vec![] };
    let flag = |name: String, value: f64, scale: f64, out: &mut Feasibility| {
        if !(value <= FEAS_TOL * scale) {
            out.feasible = false;
            out.violated.push(name);
        }
    };
    let (mut bs, mut ps) = (0.0, 0.0);
    for (n, (c, a)) in instance.clusters.iter().zip(&alloc.clusters).enumerate() {
        let neg = a.b_s2r < 0.0 || a.p_s2r < 0.0 || a.links.iter().any(|l| l.bandwidth < 0.0 || l.power < 0.0);
        if neg || !a.uav_xy.iter().all(|v| v.is_finite()) {
            out.feasible = false;
            out.violated.push(format!("bounds[{n}]"));
        }
        let uav = [a.uav_xy[0], a.uav_xy[1], c.uav_height];
        let (mut su, mut cu) = (0.0, 0.0);
        for (u, l) in c.users.iter().zip(&a.links) {
            let g = air_channel_gain(uav, u.position, ph)?;
            let cap = link_capacity(l.bandwidth, g * l.power / ph.noise_psd);
            match u.kind {
                UserKind::Sem => su += instance.sem.sem_weight() * cap,
                UserKind::Con => cu += cap,
            }
        }
        let s = s2r_rate(instance, n, a.b_s2r, a.p_s2r);
        let t = su + cu;
        out.c1.push(t - s);
        flag(format!("C1[{n}]"), t - s, s.max(t).max(1.0), &mut out);
        let bw = a.b_s2r + a.links.iter().map(|l| l.bandwidth).sum::<f64>();
        out.c3.push(bw - bud.uav_bandwidth);
        flag(format!("C3[{n}]"), bw - bud.uav_bandwidth, bud.uav_bandwidth, &mut out);
        let nu = (ph.g_sem * su + ph.g_con * cu) / ph.flops_per_cycle / 1e9;
        let pw = a.links.iter().map(|l| l.power).sum::<f64>() + ph.zeta0 * nu.powi(3);
        out.c5.push(pw - bud.uav_power);
        flag(format!("C5[{n}]"), pw - bud.uav_power, bud.uav_power, &mut out);
        bs += a.b_s2r;
        ps += a.p_s2r;
    }
    out.c2 = bs - bud.sat_bandwidth;
    flag("C2".into(), out.c2, bud.sat_bandwidth, &mut out);
    out.c4 = ps - bud.sat_power;
    flag("C4".into(), out.c4, bud.sat_power, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub allocation: Allocation,
    pub objective: f64,
    pub evaluations: usize,
    /// Incumbent objective after the initial grid and after each round.
    pub trace: Vec<f64>,
}

/// Coordinates of one candidate in the unit cube, decoded per cluster.
struct Layout {
    /// Offset of each cluster's block of coordinates.
    offsets: Vec<usize>,
    /// Bounding box of each cluster's users.
    boxes: Vec<[[f64; 2]; 2]>,
    /// Index of the satellite split coordinates, if any.
    sat: Option<usize>,
    dims: usize,
}

fn stick_breaking(u: &[f64], k: usize) -> Vec<f64> {
    let mut left = 1.0;
    let mut out = Vec::with_capacity(k);
    for &v in u.iter().take(k - 1) {
        out.push(left * v);
        left *= 1.0 - v;
    }
    out.push(left);
    out
}

impl Layout {
    fn new(instance: &NetworkInstance) -> Self {
        let mut offsets = Vec::new();
        let mut boxes = Vec::new();
        let mut dims = 0;
        for c in &instance.clusters {
            offsets.push(dims);
            let k = c.users.len();
            // bandwidth shares, power shares, x, y
            dims += 2 * (k - 1) + 2;
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for u in &c.users {
                for d in 0..2 {
                    lo[d] = lo[d].min(u.position[d]);
                    hi[d] = hi[d].max(u.position[d]);
                }
            }
            boxes.push([lo, hi]);
        }
        let sat = if instance.clusters.len() > 1 {
            let s = dims;
            dims += 2;
            Some(s)
        } else {
            None
        };
        Self { offsets, boxes, sat, dims }
    }

    fn decode(&self, instance: &NetworkInstance, u: &[f64]) -> Allocation {
        let bud = &instance.budgets;
        let n_cl = instance.clusters.len();
        let (bw_share, pw_share) = match self.sat {
            Some(s) => (vec![u[s], 1.0 - u[s]], vec![u[s + 1], 1.0 - u[s + 1]]),
            None => (vec![1.0], vec![1.0]),
        };
        let mut clusters = Vec::with_capacity(n_cl);
        for (n, c) in instance.clusters.iter().enumerate() {
            let k = c.users.len();
            let o = self.offsets[n];
            let b_frac = stick_breaking(&u[o..o + k - 1], k);
            let p_frac = stick_breaking(&u[o + k - 1..o + 2 * k - 2], k);
            let [lo, hi] = self.boxes[n];
            let xy = [lo[0] + u[o + 2 * k - 2] * (hi[0] - lo[0]), lo[1] + u[o + 2 * k - 1] * (hi[1] - lo[1])];
            let b_r = bud.uav_bandwidth;
            let cap = bw_share[n] * bud.sat_bandwidth;
            let p_s = pw_share[n] * bud.sat_power;
            let eval = Evaluator::new(instance, n, xy);
            let at = |beta: f64| {
                let b: Vec<f64> = b_frac.iter().map(|f| f * beta).collect();
                let total = eval.max_power(&b, &p_frac);
                let links: Vec<LinkAlloc> =
                    b.iter().zip(&p_frac).map(|(&b, &f)| LinkAlloc { bandwidth: b, power: f * total }).collect();
                let b_s = (b_r - beta).min(cap).max(0.0);
                (links, b_s)
            };
            let excess = |beta: f64| {
                let (links, b_s) = at(beta);
                eval.rate(&links) - s2r_rate(instance, n, b_s, p_s)
            };
            let beta = if excess(b_r) <= 0.0 {
                b_r
            } else {
                let (mut lo, mut hi) = (0.0, b_r);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if excess(mid) <= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            };
            let (mut links, b_s) = at(beta);
            let t = eval.rate(&links);
            let s = s2r_rate(instance, n, b_s, p_s);
            if t > s {
                let f = if t > 0.0 { s / t } else { 0.0 };
                for l in &mut links {
                    l.bandwidth *= f;
                    l.power *= f;
                }
            }
            clusters.push(ClusterAlloc { b_s2r: b_s, p_s2r: p_s, uav_xy: xy, links });
        }
        Allocation { clusters }
    }
}

/// Downlink evaluation for one cluster at a fixed UAV position.
struct Evaluator<'a> {
    instance: &'a NetworkInstance,
    gains: Vec<f64>,
    weights: Vec<f64>,
    flops: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    fn new(instance: &'a NetworkInstance, n: usize, xy: [f64; 2]) -> Self {
        let c = &instance.clusters[n];
        let ph = &instance.phys;
        let uav = [xy[0], xy[1], c.uav_height];
        let gains = c.users.iter().map(|u| air_channel_gain(uav, u.position, ph).unwrap_or(0.0)).collect();
        let weights = c.users.iter().map(|u| instance.sem.weight(u.kind)).collect();
        let flops = c
            .users
            .iter()
            .map(|u| match u.kind {
                UserKind::Sem => ph.g_sem,
                UserKind::Con => ph.g_con,
            })
            .collect();
        Self { instance, gains, weights, flops }
    }

    fn rate_and_load(&self, b: &[f64], p: &[f64]) -> (f64, f64) {
        let ph = &self.instance.phys;
        let (mut rate, mut flops) = (0.0, 0.0);
        for i in 0..b.len() {
            let g = self.weights[i] * link_capacity(b[i], self.gains[i] * p[i] / ph.noise_psd);
            rate += g;
            flops += self.flops[i] * g;
        }
        (rate, flops / ph.flops_per_cycle / 1e9)
    }

    fn rate(&self, links: &[LinkAlloc]) -> f64 {
        let b: Vec<f64> = links.iter().map(|l| l.bandwidth).collect();
        let p: Vec<f64> = links.iter().map(|l| l.power).collect();
        self.rate_and_load(&b, &p).0
    }

    /// Largest downlink power total within the relay power budget.
    fn max_power(&self, b: &[f64], frac: &[f64]) -> f64 {
        let bud = self.instance.budgets.uav_power;
        let zeta0 = self.instance.phys.zeta0;
        let used = |t: f64| {
            let p: Vec<f64> = frac.iter().map(|f| f * t).collect();
            t + zeta0 * self.rate_and_load(b, &p).1.powi(3)
        };
        if used(bud) <= bud {
            return bud;
        }
        // t = bud - zeta0 nu(t)^3 is a strong contraction at realistic loads
        let mut t = bud;
        for _ in 0..60 {
            let next = (bud - (used(t) - t)).max(0.0);
            if (next - t).abs() <= 1e-15 * bud {
                t = next;
                break;
            }
            t = next;
        }
        for _ in 0..8 {
            let over = used(t) - bud;
            if over <= 0.0 {
                return t;
            }
            t = (t - over.max(1e-16 * bud)).max(0.0);
        }
        let (mut lo, mut hi) = (0.0, bud);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if used(mid) <= bud {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

fn guard(instance: &NetworkInstance) -> Result<()> {
    let users = instance.num_users();
    if instance.clusters.len() > MAX_CLUSTERS || users > MAX_USERS {
        return Err(Error::Refused(format!(
            "oracle handles at most {MAX_CLUSTERS} clusters and {MAX_USERS} users, got {} clusters and {users} users",
            instance.clusters.len()
        )));
    }
    Ok(())
}

/// Full grid over the unit-cube parameterisation followed by coordinate
/// refinement rounds with a shrinking radius.
pub fn grid_search(instance: &NetworkInstance, grid: &GridSpec) -> Result<OracleResult> {
    guard(instance)?;
    instance.validate()?;
    grid.validate()?;
    let layout = Layout::new(instance);
    let d = layout.dims;
    let score = |u: &[f64]| -> f64 {
        let a = layout.decode(instance, u);
        match feasible(instance, &a) {
            Ok(f) if f.feasible => crate::netmodel::sum_rate(instance, &a),
            _ => f64::NEG_INFINITY,
        }
    };

    let res = grid.resolution(d);
    let total = res.pow(d as u32);
    let point = |mut idx: usize| -> Vec<f64> {
        let mut u = vec![0.0; d];
        for v in u.iter_mut().rev() {
            *v = (idx % res) as f64 / (res - 1) as f64;
            idx /= res;
        }
        u
    };
    // lowest index wins ties so the result does not depend on scheduling
    let (best_val, best_idx) = (0..total)
        .into_par_iter()
        .map(|i| (score(&point(i)), i))
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), pick);
    if best_idx == usize::MAX || !best_val.is_finite() {
        return Err(Error::domain("oracle found no feasible grid point"));
    }
    let mut u = point(best_idx);
    let mut best = best_val;
    let mut evaluations = total;
    let mut trace = vec![best];
    let mut radius = 1.0 / (res - 1) as f64;
    let m = grid.line_points;
    for _ in 0..grid.rounds {
        for axis in 0..d {
            let lo = (u[axis] - radius).max(0.0);
            let hi = (u[axis] + radius).min(1.0);
            let cands: Vec<Vec<f64>> = (0..m)
                .map(|j| {
                    let mut v = u.clone();
                    v[axis] = lo + (hi - lo) * j as f64 / (m - 1) as f64;
                    v
                })
                .collect();
            let (val, j) = cands
                .par_iter()
                .enumerate()
                .map(|(j, v)| (score(v), j))
                .reduce(|| (f64::NEG_INFINITY, usize::MAX), pick);
            evaluations += m;
            if j != usize::MAX && val > best {
                best = val;
                u = cands[j].clone();
            }
        }
        trace.push(best);
        radius *= grid.shrink;
    }
    let allocation = layout.decode(instance, &u);
    let objective = crate::netmodel::sum_rate(instance, &allocation);
    Ok(OracleResult { allocation, objective, evaluations, trace })
}

fn pick(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}
