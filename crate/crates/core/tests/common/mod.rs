#![allow(dead_code)]

use semrelay::netmodel::{
    Budgets, Cluster, GroundUser, NetworkInstance, PhysConstants, SatelliteLink, SemanticParams, UserKind,
};

pub fn user(kind: UserKind, x: f64, y: f64) -> GroundUser {
    GroundUser { kind, position: [x, y] }
}

pub fn sem(x: f64, y: f64) -> GroundUser {
    user(UserKind::Sem, x, y)
}

pub fn con(x: f64, y: f64) -> GroundUser {
    user(UserKind::Con, x, y)
}

pub fn cluster(index: usize, users: Vec<GroundUser>) -> Cluster {
    Cluster { index, uav_height: 1000.0, users, sat_link: SatelliteLink::from_db(-160.0) }
}

pub fn instance(clusters: Vec<Vec<GroundUser>>) -> NetworkInstance {
    NetworkInstance {
        clusters: clusters.into_iter().enumerate().map(|(n, u)| cluster(n, u)).collect(),
        budgets: Budgets::default(),
        phys: PhysConstants::default(),
        sem: SemanticParams::default(),
    }
}

/// One cluster, one semantic and one conventional user.
pub fn tiny() -> NetworkInstance {
    instance(vec![vec![sem(-200.0, 100.0), con(300.0, -150.0)]])
}

/// `b log2(1 + s/b)` computed directly.
pub fn capacity(b: f64, s: f64) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    b * (1.0 + s / b).log2()
}

/// Satellite-hop equivalent bit rate from the raw curve formula.
pub fn sat_rate(inst: &NetworkInstance, n: usize, b: f64, p: f64) -> f64 {
    let s = &inst.sem;
    let r_db = 10.0 * (p * inst.clusters[n].sat_link.gain / (b * inst.phys.noise_psd)).log10();
    let eps = s.a1 + s.a2 / (1.0 + (-s.c1 * r_db - s.c2).exp());
    s.mu1 / s.q_symbols * b * eps
}

/// Downlink `s = beta0 d^-alpha p / N0` for a UAV at `xy`.
pub fn downlink_s(inst: &NetworkInstance, n: usize, k: usize, xy: [f64; 2], p: f64) -> f64 {
    let c = &inst.clusters[n];
    let u = c.users[k].position;
    let d2 = (xy[0] - u[0]).powi(2) + (xy[1] - u[1]).powi(2) + c.uav_height.powi(2);
    inst.phys.beta0 * d2.powf(-inst.phys.alpha / 2.0) * p / inst.phys.noise_psd
}

pub fn weight(inst: &NetworkInstance, kind: UserKind) -> f64 {
    match kind {
        UserKind::Sem => inst.sem.mu1 / (inst.sem.mu2 * inst.sem.q_symbols),
        UserKind::Con => 1.0,
    }
}

/// Relay compute power `zeta0 nu^3` for weighted link rates.
pub fn compute_power(inst: &NetworkInstance, n: usize, rates: &[f64]) -> f64 {
    let ph = &inst.phys;
    let c = &inst.clusters[n];
    let flops: f64 = c
        .users
        .iter()
        .zip(rates)
        .map(|(u, r)| match u.kind {
            UserKind::Sem => ph.g_sem * r,
            UserKind::Con => ph.g_con * r,
        })
        .sum();
    let nu = flops / ph.flops_per_cycle / 1e9;
    ph.zeta0 * nu.powi(3)
}

pub fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
