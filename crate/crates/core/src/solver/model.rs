//! Per-cluster numerics shared by the block solvers.

use std::f64::consts::{LN_10, LN_2};

use super::config::SolverConfig;
use crate::netmodel::{self, NetworkInstance, SemanticParams};
use crate::roots::{find_root, last_true};
use crate::semcom;

const DB: f64 = 10.0 / LN_10;

/// Marginal rate per hertz, `d/db [b log2(1 + s/b)]`, as a function of `x = s/b`.
pub fn marginal_bw(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < 1e-5 {
        // series avoids cancellation: x^2/2 - 2x^3/3 + 3x^4/4
        return x * x * (0.5 - x * (2.0 / 3.0 - 0.75 * x)) / LN_2;
    }
    (x.ln_1p() - x / (1.0 + x)) / LN_2
}

/// Inverse of [`marginal_bw`]: the SNR at which the marginal equals `y`.
pub fn marginal_bw_inv(y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (-90.0f64, 90.0f64);
    if y >= marginal_bw(hi.exp()) {
        return hi.exp();
    }
    let mut t = if y < 0.5 {
        (2.0 * LN_2 * y).sqrt().ln()
    } else {
        ((y + 1.0 / LN_2) * LN_2).exp_m1().max(1e-300).ln()
    };
    t = t.clamp(lo, hi);
    for _ in 0..100 {
        let x = t.exp();
        let g = marginal_bw(x) - y;
        if g > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let d = x * x / ((1.0 + x) * (1.0 + x) * LN_2);
        let mut next = t - g / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-15 * (1.0 + t.abs()) || hi - lo <= 1e-15 {
            t = next;
            break;
        }
        t = next;
    }
    t.exp()
}

/// Downlink side of one cluster at a fixed UAV position.
#[derive(Debug, Clone)]
pub struct Downlink {
    /// Rate weight per link.
    pub w: Vec<f64>,
    /// True channel gain per link.
    pub h: Vec<f64>,
    /// Compute frequency (Gcycles/s) per bit/s of raw capacity.
    pub c: Vec<f64>,
    pub n0: f64,
}

impl Downlink {
    pub fn new(instance: &NetworkInstance, n: usize, xy: [f64; 2]) -> Self {
        let cl = &instance.clusters[n];
        let ph = &instance.phys;
        let uav = [xy[0], xy[1], cl.uav_height];
        let mut d = Downlink { w: vec![], h: vec![], c: vec![], n0: ph.noise_psd };
        for u in &cl.users {
            let w = instance.sem.weight(u.kind);
            let g = match u.kind {
                netmodel::UserKind::Sem => ph.g_sem,
                netmodel::UserKind::Con => ph.g_con,
            };
            d.w.push(w);
            d.h.push(netmodel::air_channel_gain(uav, u.position, ph).unwrap_or(0.0));
            d.c.push(g * w / ph.flops_per_cycle / 1e9);
        }
        d
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `s_k = H_k p_k / N0`, the bandwidth-normalised received power.
    pub fn s(&self, k: usize, p: f64) -> f64 {
        self.h[k] * p / self.n0
    }

    pub fn capacity(&self, k: usize, b: f64, p: f64) -> f64 {
        netmodel::link_capacity(b, self.s(k, p))
    }

    pub fn rate(&self, b: &[f64], p: &[f64]) -> f64 {
        (0..self.len()).map(|k| self.w[k] * self.capacity(k, b[k], p[k])).sum()
    }

    pub fn load(&self, b: &[f64], p: &[f64]) -> f64 {
        (0..self.len()).map(|k| self.c[k] * self.capacity(k, b[k], p[k])).sum()
    }

    /// `d/dp_k` of the weighted rate.
    pub fn rate_dp(&self, k: usize, b: f64, p: f64) -> f64 {
        if b <= 0.0 {
            return 0.0;
        }
        self.w[k] * b * self.h[k] / ((b * self.n0 + self.h[k] * p) * LN_2)
    }

    /// `d/db_k` of the weighted rate.
    pub fn rate_db(&self, k: usize, b: f64, p: f64) -> f64 {
        if b <= 0.0 {
            return if p > 0.0 { f64::INFINITY } else { 0.0 };
        }
        self.w[k] * marginal_bw(self.s(k, p) / b)
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub b: Vec<f64>,
    /// Common marginal rate per hertz at the split.
    pub level: f64,
    pub rate: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Rate-maximising split of `beta` hertz across links at fixed powers.
pub fn split_bandwidth(dl: &Downlink, p: &[f64], beta: f64, cfg: &SolverConfig) -> Split {
    let k = dl.len();
    let floor = cfg.floor_bandwidth;
    let s: Vec<f64> = (0..k).map(|i| dl.s(i, p[i])).collect();
    let active: Vec<usize> = (0..k).filter(|&i| s[i] > 0.0 && dl.w[i] > 0.0).collect();
    let n_inactive = k - active.len();
    let mut b = vec![floor; k];
    if active.is_empty() || beta <= floor * k as f64 {
        let each = (beta / k as f64).max(0.0);
        b.iter_mut().for_each(|v| *v = each);
        let rate = dl.rate(&b, p);
        return Split { b, level: 0.0, rate, iterations: 0, converged: true };
    }
    let budget = beta - floor * n_inactive as f64;
    // total bandwidth at log-level u and its derivative in u
    let sum_at = |u: f64, out: Option<&mut Vec<f64>>| -> (f64, f64) {
        let lam = u.exp();
        let (mut tot, mut d) = (0.0, 0.0);
        let mut out = out;
        for &i in &active {
            let x = marginal_bw_inv(lam / dl.w[i]);
            let raw = if x > 0.0 { s[i] / x } else { f64::MAX };
            let bi = raw.max(floor);
            if raw > floor && x > 0.0 {
                // db/du = -(s/x^2) * lam / (w G'(x)), with G'(x) = x / ((1+x)^2 ln2)
                d -= raw / x * lam * (1.0 + x) * (1.0 + x) * LN_2 / (dl.w[i] * x);
            }
            tot += bi;
            if let Some(o) = out.as_deref_mut() {
                o[i] = bi;
            }
        }
        (tot, d)
    };
    let each = budget / active.len() as f64;
    let mean_level = active.iter().map(|&i| dl.w[i] * marginal_bw(s[i] / each)).sum::<f64>() / active.len() as f64;
    let mut u = mean_level.max(1e-300).ln();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let tol = cfg.bisection_tol * budget;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.dual_max_iters {
        iterations += 1;
        let (tot, d) = sum_at(u, None);
        let g = tot - budget;
        if g > 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        if g.abs() <= tol || (hi - lo) <= 1e-15 * (1.0 + u.abs()) {
            converged = true;
            break;
        }
        let mut next = if d < 0.0 { u - g / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + 2.0,
                (false, true) => hi - 2.0,
                (false, false) => u,
            };
        }
        u = next;
    }
    // the upper end keeps the total within the budget
    if hi.is_finite() {
        u = hi;
    }
    sum_at(u, Some(&mut b));
    // hand rounding slack to the unfloored links so the budget is met exactly
    let tot: f64 = active.iter().map(|&i| b[i]).sum();
    let free: f64 = active.iter().filter(|&&i| b[i] > floor).map(|&i| b[i]).sum();
    if free > 0.0 && tot < budget {
        let f = 1.0 + (budget - tot) / free;
        for &i in &active {
            if b[i] > floor {
                b[i] *= f;
            }
        }
    }
    let rate = dl.rate(&b, p);
    Split { b, level: u.exp(), rate, iterations, converged }
}

#[derive(Debug, Clone)]
pub struct PowerFill {
    pub p: Vec<f64>,
    /// Multiplier of the power budget: common `d rate / d p` on active links.
    pub level: f64,
}

/// Rate-maximising split of `total` watts at fixed bandwidths (water-filling).
pub fn waterfill(dl: &Downlink, b: &[f64], total: f64, floor: f64) -> PowerFill {
    let k = dl.len();
    let avail = total - floor * k as f64;
    if avail <= 0.0 {
        return PowerFill { p: vec![(total / k as f64).max(0.0); k], level: f64::INFINITY };
    }
    // p_k = w_k b_k v - b_k N0 / H_k with v = 1/(lambda ln2)
    let mut idx: Vec<usize> = (0..k).filter(|&i| b[i] > 0.0 && dl.h[i] > 0.0 && dl.w[i] > 0.0).collect();
    let wb: Vec<f64> = (0..k).map(|i| dl.w[i] * b[i]).collect();
    let nz: Vec<f64> = (0..k).map(|i| if dl.h[i] > 0.0 { b[i] * dl.n0 / dl.h[i] } else { f64::INFINITY }).collect();
    idx.sort_by(|&x, &y| (nz[x] / wb[x]).partial_cmp(&(nz[y] / wb[y])).unwrap().then(x.cmp(&y)));
    let mut p = vec![floor; k];
    if idx.is_empty() {
        p.iter_mut().for_each(|v| *v = total / k as f64);
        return PowerFill { p, level: f64::INFINITY };
    }
    let (mut sw, mut sn) = (0.0, 0.0);
    let mut v = 0.0;
    for (m, &i) in idx.iter().enumerate() {
        sw += wb[i];
        sn += nz[i];
        v = (avail + sn) / sw;
        let next_threshold = idx.get(m + 1).map(|&j| nz[j] / wb[j]).unwrap_or(f64::INFINITY);
        if v <= next_threshold {
            break;
        }
    }
    for &i in &idx {
        p[i] += (wb[i] * v - nz[i]).max(0.0);
    }
    PowerFill { p, level: 1.0 / (v * LN_2) }
}

/// Largest total downlink power `P` whose water-filled split satisfies
/// `P + zeta0 * load^3 <= budget`, with the split it produces.
pub fn max_power_fill(dl: &Downlink, b: &[f64], budget: f64, zeta0: f64, cfg: &SolverConfig) -> (f64, PowerFill) {
    let fits = |total: f64| {
        let f = waterfill(dl, b, total, cfg.floor_power);
        let used: f64 = f.p.iter().sum();
        used + zeta0 * dl.load(b, &f.p).powi(3) <= budget
    };
    let (total, _) = last_true(fits, 0.0, budget, cfg.bisection_tol * budget, cfg.dual_max_iters);
    (total, waterfill(dl, b, total, cfg.floor_power))
}

/// Satellite-to-relay hop of one cluster.
#[derive(Debug, Clone, Copy)]
pub struct SatHop<'a> {
    pub kappa: f64,
    pub g: f64,
    pub n0: f64,
    pub sem: &'a SemanticParams,
}

impl<'a> SatHop<'a> {
    pub fn new(instance: &'a NetworkInstance, n: usize) -> Self {
        Self {
            kappa: instance.sem.kappa(),
            g: instance.clusters[n].sat_link.gain,
            n0: instance.phys.noise_psd,
            sem: &instance.sem,
        }
    }

    pub fn r_db(&self, b: f64, p: f64) -> f64 {
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if b <= 0.0 {
            return f64::INFINITY;
        }
        DB * (p * self.g / (b * self.n0)).ln()
    }

    pub fn rate(&self, b: f64, p: f64) -> f64 {
        if b <= 0.0 {
            return 0.0;
        }
        self.kappa * b * semcom::similarity(self.r_db(b, p), self.sem)
    }

    /// Marginal rate per hertz expressed through the hop SNR.
    pub fn marginal_b_at(&self, r: f64) -> f64 {
        self.kappa * (semcom::similarity(r, self.sem) - DB * semcom::similarity_derivative(r, self.sem))
    }

    pub fn marginal_b(&self, b: f64, p: f64) -> f64 {
        self.marginal_b_at(self.r_db(b, p))
    }

    /// Marginal rate per watt expressed through the hop SNR (independent of `b`).
    pub fn marginal_p_at(&self, r: f64) -> f64 {
        if !r.is_finite() {
            return 0.0;
        }
        self.kappa * self.g * semcom::similarity_derivative(r, self.sem) * DB / (self.n0 * 10f64.powf(r / 10.0))
    }

    pub fn marginal_p(&self, b: f64, p: f64) -> f64 {
        if p <= 0.0 || b <= 0.0 {
            return 0.0;
        }
        self.kappa * b * semcom::similarity_derivative(self.r_db(b, p), self.sem) * DB / p
    }

    pub fn power_at(&self, b: f64, r: f64) -> f64 {
        self.n0 * b * 10f64.powf(r / 10.0) / self.g
    }

    pub fn bandwidth_at(&self, p: f64, r: f64) -> f64 {
        p * self.g / (self.n0 * 10f64.powf(r / 10.0))
    }

    /// Bandwidth at which the hop delivers `target`, for fixed power.
    pub fn bandwidth_for_rate(&self, p: f64, target: f64, b_max: f64, cfg: &SolverConfig) -> f64 {
        if target <= 0.0 {
            return cfg.floor_bandwidth;
        }
        if self.rate(b_max, p) <= target {
            return b_max;
        }
        let br = find_root(|b| self.rate(b, p) - target, 0.0, b_max, cfg.bisection_tol * b_max, cfg.dual_max_iters);
        br.hi
    }

    /// Smallest power at which the hop delivers `target`; `None` if unreachable.
    pub fn power_for_rate(&self, b: f64, target: f64, floor: f64) -> Option<f64> {
        if b <= 0.0 {
            return if target <= 0.0 { Some(floor) } else { None };
        }
        let ratio = target / (self.kappa * b);
        let d = semcom::clamp_delta(self.sem);
        if ratio <= self.sem.a1 + d {
            return Some(floor);
        }
        if ratio >= self.sem.a1 + self.sem.a2 - d {
            return None;
        }
        let r = semcom::similarity_inverse(ratio, self.sem).ok()?;
        Some(self.power_at(b, r).max(floor))
    }
}

/// SNR above which the hop is concave in both bandwidth and power.
pub fn concave_threshold(sem: &SemanticParams) -> f64 {
    semcom::concavity_threshold_db(sem)
}

/// Root of an increasing function of the SNR on `[r_lo, inf)`.
pub fn solve_increasing_in_r(f: impl Fn(f64) -> f64, r_lo: f64, cfg: &SolverConfig) -> Option<f64> {
    if f(r_lo) >= 0.0 {
        return Some(r_lo);
    }
    let mut hi = r_lo + 10.0;
    let mut n = 0;
    while f(hi) < 0.0 {
        hi += 20.0;
        n += 1;
        if n > 50 {
            return None;
        }
    }
    let br = find_root(&f, r_lo, hi, cfg.bisection_tol * (1.0 + hi.abs()), cfg.dual_max_iters);
    Some(br.mid())
}
