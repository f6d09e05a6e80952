//! Stationarity and complementary-slackness residuals of the block problems.

use serde::{Deserialize, Serialize};

use super::model::{marginal_bw, Downlink, SatHop};
use super::power::centroid_weights;
use super::state::{AuxState, DualState};
use crate::netmodel::{self, Allocation, NetworkInstance};

/// `B_S2R` from the bandwidth-block stationarity condition:
/// `(-(l2 + l3) + l7' g P + l11 kappa eps(r_hat)) / (2 l7' N0 10^(r/10))`.
#[allow(clippy::too_many_arguments)]
pub fn stationary_b_s2r(
    lambda2: f64,
    lambda3: f64,
    lambda7p: f64,
    lambda11: f64,
    gain: f64,
    p_s: f64,
    kappa_eps: f64,
    n0: f64,
    r_db: f64,
) -> f64 {
    (-(lambda2 + lambda3) + lambda7p * gain * p_s + lambda11 * kappa_eps) / (2.0 * lambda7p * n0 * 10f64.powf(r_db / 10.0))
}

/// Derivative of the bandwidth-block Lagrangian with respect to `B_S2R`.
#[allow(clippy::too_many_arguments)]
pub fn dl1_db_s2r(
    b_s: f64,
    lambda2: f64,
    lambda3: f64,
    lambda7p: f64,
    lambda11: f64,
    gain: f64,
    p_s: f64,
    kappa_eps: f64,
    n0: f64,
    r_db: f64,
) -> f64 {
    lambda2 + lambda3 + lambda7p * (2.0 * n0 * 10f64.powf(r_db / 10.0) * b_s - gain * p_s) - lambda11 * kappa_eps
}

/// Which variable blocks are free (and therefore checked).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KktMask {
    pub bandwidth: bool,
    pub power: bool,
    pub location: bool,
}

impl Default for KktMask {
    fn default() -> Self {
        Self { bandwidth: true, power: true, location: true }
    }
}

/// Absolute Lagrangian gradients (minimisation convention) per variable.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct KktComponents {
    pub d_b: Vec<Vec<f64>>,
    pub d_b_s2r: Vec<f64>,
    pub d_p: Vec<Vec<f64>>,
    pub d_p_s2r: Vec<f64>,
    pub d_xy: Vec<[f64; 2]>,
    /// Relative stationarity violation per block, after bound handling.
    pub bandwidth: f64,
    pub power: f64,
    pub location: f64,
    pub slackness: f64,
}

fn bound_residual(grad: f64, at_floor: bool, scale: f64) -> f64 {
    let r = if at_floor { (-grad).max(0.0) } else { grad.abs() };
    if scale > 0.0 {
        r / scale
    } else {
        0.0
    }
}

pub fn kkt_components(instance: &NetworkInstance, alloc: &Allocation, _aux: &AuxState, duals: &DualState) -> KktComponents {
    let ph = &instance.phys;
    let lam = &duals.lambda;
    let mut out = KktComponents::default();
    // floors are 1e-3 Hz and 1e-9 W by default; anything within 10x counts as on the bound
    let at_floor_b = |b: f64| b <= 1e-2;
    let at_floor_p = |p: f64| p <= 1e-8;
    let res = netmodel::constraint_residuals(instance, alloc, None);
    for (n, ca) in alloc.clusters.iter().enumerate() {
        let d = &lam.clusters[n];
        let dl = Downlink::new(instance, n, ca.uav_xy);
        let hop = SatHop::new(instance, n);
        let rates = netmodel::cluster_rates(instance, n, ca);
        let nu = rates.load;
        let one = 1.0 - d.l11;
        let (mut db, mut dp) = (vec![], vec![]);
        for (k, l) in ca.links.iter().enumerate() {
            let x = if l.bandwidth > 0.0 { dl.s(k, l.power) / l.bandwidth } else { 0.0 };
            let gk = marginal_bw(x);
            let g = -one * dl.w[k] * gk + d.l3 + d.l10 * dl.c[k] * gk;
            db.push(g);
            let scale = (dl.w[k] * gk).max(d.l3);
            out.bandwidth = out.bandwidth.max(bound_residual(g, at_floor_b(l.bandwidth), scale));
            let cp = dl.rate_dp(k, l.bandwidth, l.power) / dl.w[k];
            let g = -one * dl.w[k] * cp + d.l5 * (1.0 + 3.0 * ph.zeta0 * nu * nu * dl.c[k] * cp);
            dp.push(g);
            let scale = (dl.w[k] * cp).max(d.l5);
            out.power = out.power.max(bound_residual(g, at_floor_p(l.power), scale));
        }
        out.d_b.push(db);
        out.d_p.push(dp);

        let sb = hop.marginal_b(ca.b_s2r, ca.p_s2r);
        let g = lam.l2 + d.l3 - d.l11 * sb;
        out.d_b_s2r.push(g);
        out.bandwidth = out
            .bandwidth
            .max(bound_residual(g, at_floor_b(ca.b_s2r), (lam.l2 + d.l3).max(d.l11 * sb)));
        let sp = hop.marginal_p(ca.b_s2r, ca.p_s2r);
        let g = lam.l4 - d.l11 * sp;
        out.d_p_s2r.push(g);
        out.power = out.power.max(bound_residual(g, at_floor_p(ca.p_s2r), lam.l4.max(d.l11 * sp)));

        let w = centroid_weights(instance, n, ca);
        let users = &instance.clusters[n].users;
        let mut grad = [0.0, 0.0];
        let mut mag = 0.0;
        for (u, wk) in users.iter().zip(&w) {
            let dx = ca.uav_xy[0] - u.position[0];
            let dy = ca.uav_xy[1] - u.position[1];
            grad[0] += 2.0 * one * wk * dx;
            grad[1] += 2.0 * one * wk * dy;
            mag += 2.0 * wk * (dx * dx + dy * dy).sqrt();
        }
        out.d_xy.push(grad);
        if mag > 0.0 {
            out.location = out.location.max((grad[0].hypot(grad[1])) / mag);
        }

        // multiplier positive => its constraint should be tight
        let cs = |l: f64, r: &netmodel::Residual| if l > 0.0 { r.rel().abs() } else { 0.0 };
        out.slackness = out
            .slackness
            .max(cs(d.l3, &res.c3[n]))
            .max(cs(d.l5, &res.c5[n]))
            .max(cs(d.l11, &res.c1[n]));
    }
    out.slackness = out.slackness.max(if lam.l2 > 0.0 { res.c2.rel().abs() } else { 0.0 });
    out.slackness = out.slackness.max(if lam.l4 > 0.0 { res.c4.rel().abs() } else { 0.0 });
    out
}

/// Worst relative stationarity violation over the unmasked blocks plus the
/// worst complementary-slackness violation.
pub fn kkt_residual_masked(
    instance: &NetworkInstance,
    alloc: &Allocation,
    aux: &AuxState,
    duals: &DualState,
    mask: KktMask,
) -> f64 {
    let c = kkt_components(instance, alloc, aux, duals);
    let mut s: f64 = 0.0;
    if mask.bandwidth {
        s = s.max(c.bandwidth);
    }
    if mask.power {
        s = s.max(c.power);
    }
    if mask.location {
        s = s.max(c.location);
    }
    s + c.slackness
}

pub fn kkt_residual(instance: &NetworkInstance, alloc: &Allocation, aux: &AuxState, duals: &DualState) -> f64 {
    kkt_residual_masked(instance, alloc, aux, duals, KktMask::default())
}
