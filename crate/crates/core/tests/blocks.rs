//! Single-block solves checked against brute-force grids computed here.

mod common;

use common::*;
use semrelay::netmodel::{self, Allocation, NetworkInstance};
use semrelay::solver::bandwidth::{solve_bandwidth_with, BandwidthOptions};
use semrelay::solver::power::{solve_power_location_with, PowerOptions};
use semrelay::solver::{self, init_allocation, AuxState, DualState, SolverConfig};

fn start(inst: &NetworkInstance) -> (Allocation, AuxState, DualState, SolverConfig) {
    let cfg = SolverConfig::default();
    let (a, x) = init_allocation(inst, &cfg).unwrap();
    let d = DualState::new(inst, cfg.dual_base_steps.clone());
    (a, x, d, cfg)
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
}

#[test]
fn bandwidth_block_matches_grid_single_link() {
    let inst = instance(vec![vec![con(150.0, -80.0)]]);
    let (a, x, d, cfg) = start(&inst);
    let out = solve_bandwidth_with(&inst, &a, &x, &d, &cfg, BandwidthOptions { refill: false }).unwrap();
    let got = netmodel::sum_rate(&inst, &out.alloc);
    assert!(netmodel::constraint_residuals(&inst, &out.alloc, None).max_original() <= 1e-8);

    let ca = &a.clusters[0];
    let (p_s, p) = (ca.p_s2r, ca.links[0].power);
    let s = downlink_s(&inst, 0, 0, ca.uav_xy, p);
    let b_r = inst.budgets.uav_bandwidth;
    let mut best: f64 = 0.0;
    for b_s in grid(0.0, inst.budgets.sat_bandwidth.min(b_r), 400) {
        let sat = sat_rate(&inst, 0, b_s, p_s);
        for b in grid(0.0, b_r - b_s, 400) {
            let r = capacity(b, s);
            if r <= sat && compute_power(&inst, 0, &[r]) + p <= inst.budgets.uav_power {
                best = best.max(r);
            }
        }
    }
    assert!(got >= best * 0.99, "block {got} grid {best}");
    assert!(got <= best * 1.01, "block {got} grid {best}");
}

#[test]
fn identical_semantic_users_share_equally() {
    let inst = instance(vec![vec![sem(-300.0, 0.0), sem(300.0, 0.0)]]);
    let (a, x, d, cfg) = start(&inst);
    let (b, _) = solver::solve_bandwidth(&inst, &a, &x, &d, &cfg).unwrap();
    let l = &b.clusters[0].links;
    assert!(rel_gap(l[0].bandwidth, l[1].bandwidth) < 1e-9, "{l:?}");
}

#[test]
fn semantic_user_gets_at_least_conventional_bandwidth() {
    let inst = instance(vec![vec![sem(-300.0, 0.0), con(300.0, 0.0)]]);
    let (a, x, d, cfg) = start(&inst);
    let out = solve_bandwidth_with(&inst, &a, &x, &d, &cfg, BandwidthOptions { refill: false }).unwrap();
    let l = &out.alloc.clusters[0].links;
    assert!(l[0].bandwidth >= l[1].bandwidth, "{l:?}");

    // same ordering in the brute-force optimum of the split
    let ca = &a.clusters[0];
    let s: Vec<f64> = (0..2).map(|k| downlink_s(&inst, 0, k, ca.uav_xy, ca.links[k].power)).collect();
    let total = l[0].bandwidth + l[1].bandwidth;
    let (mut best, mut arg) = (0.0, 0.0);
    for b0 in grid(0.0, total, 4000) {
        let v = 3.0 * capacity(b0, s[0]) + capacity(total - b0, s[1]);
        if v > best {
            best = v;
            arg = b0;
        }
    }
    assert!(arg >= total / 2.0);
    assert!(rel_gap(arg, l[0].bandwidth) < 1e-3, "grid {arg} block {}", l[0].bandwidth);
}

#[test]
fn auxiliary_block_matches_grid_single_link() {
    let inst = instance(vec![vec![con(150.0, -80.0)]]);
    let (a, x, d, cfg) = start(&inst);
    let (y, _) = solver::solve_auxiliary(&inst, &a, &x, &d, &cfg).unwrap();
    let lx = y.clusters[0].links[0];
    let ca = &a.clusters[0];
    let l = ca.links[0];
    let got = l.bandwidth * lx.eta_hat;

    let h = downlink_s(&inst, 0, 0, ca.uav_xy, 1.0) * inst.phys.noise_psd;
    let eta_true = (1.0 + h * l.power / (l.bandwidth * inst.phys.noise_psd)).log2();
    let sat = sat_rate(&inst, 0, ca.b_s2r, ca.p_s2r);
    let mut best: f64 = 0.0;
    let mut arg = (0.0, 0.0);
    for hh in grid(0.5 * h, 1.5 * h, 400) {
        let cap = (1.0 + hh * l.power / (l.bandwidth * inst.phys.noise_psd)).log2();
        for eta in grid(0.0, 2.0 * eta_true, 400) {
            let r = l.bandwidth * eta;
            let ok = hh <= h
                && eta <= cap
                && r <= sat
                && compute_power(&inst, 0, &[r]) + l.power <= inst.budgets.uav_power;
            if ok && r > best {
                best = r;
                arg = (hh, eta);
            }
        }
    }
    assert!(rel_gap(got, best) < 0.01, "block {got} grid {best}");
    // the optimum is flat in the gain bound; the block's bound must support its efficiency
    assert!(lx.h_hat <= h * (1.0 + 1e-12) && lx.h_hat >= arg.0 * (1.0 - 1e-12));
    assert!(lx.eta_hat <= (1.0 + lx.h_hat * l.power / (l.bandwidth * inst.phys.noise_psd)).log2() * (1.0 + 1e-12));
    assert!(rel_gap(lx.eta_hat, arg.1) < 0.01);
}

#[test]
fn auxiliary_block_keeps_gain_bound_tight() {
    let inst = instance(vec![vec![sem(-200.0, 100.0), con(300.0, -150.0)], vec![con(3000.0, 0.0)]]);
    let (a, x, d, cfg) = start(&inst);
    let (y, _) = solver::solve_auxiliary(&inst, &a, &x, &d, &cfg).unwrap();
    let res = netmodel::constraint_residuals(&inst, &a, Some(&y));
    let aux = res.aux.unwrap();
    for r in aux.c6.iter().flatten() {
        assert!(r.rel().abs() <= 1e-9, "{r:?}");
    }
}

#[test]
fn slack_compute_bound_collapses_onto_load() {
    let mut inst = instance(vec![vec![sem(-200.0, 100.0), con(300.0, -150.0)]]);
    inst.budgets.uav_power = 1e6;
    let (a, x, d, cfg) = start(&inst);
    let (y, dd) = solver::solve_auxiliary(&inst, &a, &x, &d, &cfg).unwrap();
    assert_eq!(dd.lambda.clusters[0].l10, 0.0);
    let load = netmodel::cluster_rates(&inst, 0, &a.clusters[0]).load;
    assert!(rel_gap(y.clusters[0].nu_hat, load) <= 1e-12, "{} vs {load}", y.clusters[0].nu_hat);
}

#[test]
fn power_block_matches_grid_powers_only() {
    let inst = tiny();
    let (a, x, d, cfg) = start(&inst);
    let out =
        solve_power_location_with(&inst, &a, &x, &d, &cfg, PowerOptions { power: true, location: false }).unwrap();
    let got = netmodel::sum_rate(&inst, &out.alloc);
    assert!(netmodel::constraint_residuals(&inst, &out.alloc, None).max_original() <= 1e-8);

    let ca = &a.clusters[0];
    let sat = sat_rate(&inst, 0, ca.b_s2r, inst.budgets.sat_power);
    let p_r = inst.budgets.uav_power;
    let b: Vec<f64> = ca.links.iter().map(|l| l.bandwidth).collect();
    let mut best: f64 = 0.0;
    for p0 in grid(0.0, p_r, 400) {
        for p1 in grid(0.0, p_r - p0, 400) {
            let r0 = 3.0 * capacity(b[0], downlink_s(&inst, 0, 0, ca.uav_xy, p0));
            let r1 = capacity(b[1], downlink_s(&inst, 0, 1, ca.uav_xy, p1));
            if r0 + r1 <= sat && compute_power(&inst, 0, &[r0, r1]) + p0 + p1 <= p_r {
                best = best.max(r0 + r1);
            }
        }
    }
    assert!(rel_gap(got, best) < 0.01, "block {got} grid {best}");
}

#[test]
fn symmetric_pair_keeps_uav_on_axis() {
    let inst = instance(vec![vec![con(-500.0, 0.0), con(500.0, 0.0)]]);
    let (mut a, x, d, cfg) = start(&inst);
    a.clusters[0].uav_xy = [120.0, 0.0];
    let (b, _, _) = solver::solve_power_location(&inst, &a, &x, &d, &cfg).unwrap();
    let mut alloc = b;
    for _ in 0..200 {
        let (y, _, _) = solver::solve_power_location(&inst, &alloc, &x, &d, &cfg).unwrap();
        alloc = y;
    }
    assert!(alloc.clusters[0].uav_xy[0].abs() < 1.0, "{:?}", alloc.clusters[0].uav_xy);
    assert!(alloc.clusters[0].uav_xy[1].abs() < 1e-9);
}

#[test]
fn single_user_pulls_uav_overhead() {
    let inst = instance(vec![vec![sem(400.0, -250.0)]]);
    let (mut a, x, d, cfg) = start(&inst);
    a.clusters[0].uav_xy = [0.0, 0.0];
    let (b, _, _) = solver::solve_power_location(&inst, &a, &x, &d, &cfg).unwrap();
    let xy = b.clusters[0].uav_xy;
    assert!((xy[0] - 400.0).abs() < 1e-6 && (xy[1] + 250.0).abs() < 1e-6, "{xy:?}");
}

#[test]
fn tighten_formula_example() {
    let sem = semrelay::netmodel::SemanticParams::default();
    // eps = 0.9 solved for its SNR, then the rate sum mapped back
    let r = semrelay::semcom::similarity_inverse(0.9, &sem).unwrap();
    let b = solver::bandwidth::tight_b_s2r(1.08e7, r, &sem, 1e-3);
    assert!((b - 1e6).abs() < 1e-6, "{b}");
    assert_eq!(solver::bandwidth::tight_b_s2r(0.0, r, &sem, 1e-3), 1e-3);
}

#[test]
fn tighten_makes_balance_exact() {
    let mut inst = instance(vec![vec![sem(-200.0, 100.0), con(300.0, -150.0)], vec![con(3000.0, 0.0)]]);
    // a weak relay leaves the satellite hop with slack
    inst.budgets.uav_power = 0.01;
    let (a, _, _, cfg) = start(&inst);
    let x = AuxState::tight(&inst, &a);
    let (t, rescaled) = solver::tighten_b_s2r(&inst, &a, &x, &cfg);
    assert!(!rescaled);
    let res = netmodel::constraint_residuals(&inst, &t, None);
    for r in &res.c1 {
        assert!(r.rel().abs() <= 1e-9, "{r:?}");
    }
}

#[test]
fn tighten_with_no_rate_gives_floor() {
    let inst = instance(vec![vec![con(0.0, 0.0)]]);
    let (mut a, _, _, cfg) = start(&inst);
    a.clusters[0].links[0].power = 0.0;
    let x = AuxState::tight(&inst, &a);
    let (t, _) = solver::tighten_b_s2r(&inst, &a, &x, &cfg);
    assert_eq!(t.clusters[0].b_s2r, cfg.floor_bandwidth);
}
