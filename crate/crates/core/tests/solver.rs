mod common;

use common::*;
use proptest::prelude::*;
use semrelay::netmodel::{self, Allocation};
use semrelay::scenarios::{generate, ScenarioSpec};
use semrelay::solver::kkt::{dl1_db_s2r, kkt_components, stationary_b_s2r};
use semrelay::solver::{self, alternating_optimize, dual_update, init_allocation, AuxState, DualState, Multipliers, SolverConfig};

proptest! {
    #[test]
    fn closed_form_satellite_bandwidth_is_stationary(
        l2 in 0.0..5.0f64,
        l3 in 0.0..5.0f64,
        l7p in 0.01..5.0f64,
        l11 in 0.0..5.0f64,
        gain_db in -170.0..-140.0f64,
        p_s in 1.0..1000.0f64,
        kappa_eps in 1.0..12.0f64,
        r_db in -10.0..30.0f64,
    ) {
        let gain = 10f64.powf(gain_db / 10.0);
        let n0 = 1e-20;
        let b = stationary_b_s2r(l2, l3, l7p, l11, gain, p_s, kappa_eps, n0, r_db);
        let d = dl1_db_s2r(b, l2, l3, l7p, l11, gain, p_s, kappa_eps, n0, r_db);
        let scale = (l2 + l3).max(l7p * gain * p_s).max(l11 * kappa_eps);
        prop_assert!(d.abs() <= 1e-8 * scale, "{d} vs scale {scale}");
    }
}

#[test]
fn zero_duals_give_objective_gradient() {
    let inst = tiny();
    let cfg = SolverConfig::default();
    let (a, x) = init_allocation(&inst, &cfg).unwrap();
    let d = DualState::new(&inst, cfg.dual_base_steps.clone());
    let c = kkt_components(&inst, &a, &x, &d);
    for k in 0..2 {
        let h = 1.0;
        let mut up: Allocation = a.clone();
        up.clusters[0].links[k].bandwidth += h;
        let mut dn = a.clone();
        dn.clusters[0].links[k].bandwidth -= h;
        let fd = (netmodel::sum_rate(&inst, &up) - netmodel::sum_rate(&inst, &dn)) / (2.0 * h);
        assert!(rel_gap(-c.d_b[0][k], fd) < 1e-6, "link {k}: {} vs {fd}", -c.d_b[0][k]);

        let h = 1e-6;
        let mut up = a.clone();
        up.clusters[0].links[k].power += h;
        let mut dn = a.clone();
        dn.clusters[0].links[k].power -= h;
        let fd = (netmodel::sum_rate(&inst, &up) - netmodel::sum_rate(&inst, &dn)) / (2.0 * h);
        assert!(rel_gap(-c.d_p[0][k], fd) < 1e-5, "link {k}: {} vs {fd}", -c.d_p[0][k]);
    }
    // the satellite hop does not enter the objective directly
    assert_eq!(c.d_b_s2r[0], 0.0);
    assert_eq!(c.slackness, 0.0);
}

#[test]
fn dual_step_is_projected_ascent() {
    let inst = tiny();
    let cfg = SolverConfig::default();
    let mut d = DualState::new(&inst, cfg.dual_base_steps.clone());
    let mut g = Multipliers::zeros(&inst);
    g.l2 = -1.0;
    g.clusters[0].l11 = 0.3;
    d = dual_update(&d, &g, &cfg);
    assert_eq!(d.lambda.l2, 0.0);
    assert!((d.lambda.clusters[0].l11 - 0.3).abs() < 1e-15);
    d = dual_update(&d, &g, &cfg);
    assert!((d.lambda.clusters[0].l11 - 0.3 * (1.0 + 0.5f64.sqrt())).abs() < 1e-15);
    assert_eq!(d.k, 3);
}

#[test]
fn init_splits_satellite_bandwidth_equally() {
    let inst = instance(vec![vec![sem(0.0, 0.0), con(100.0, 0.0)], vec![con(5000.0, 0.0)]]);
    let (a, _) = init_allocation(&inst, &SolverConfig::default()).unwrap();
    for c in &a.clusters {
        assert_eq!(c.b_s2r, 5e6);
        assert_eq!(c.p_s2r, 500.0);
    }
}

#[test]
fn init_places_uav_at_centroid_and_is_feasible() {
    let inst = instance(vec![vec![con(-500.0, 0.0), con(500.0, 0.0)], vec![sem(3000.0, 400.0), sem(3600.0, -200.0)]]);
    let (a, x) = init_allocation(&inst, &SolverConfig::default()).unwrap();
    assert_eq!(a.clusters[0].uav_xy, [0.0, 0.0]);
    assert_eq!(a.clusters[1].uav_xy, [3300.0, 100.0]);
    let res = netmodel::constraint_residuals(&inst, &a, Some(&x));
    assert!(res.max_violation() <= 1e-12, "{}", res.max_violation());
}

#[test]
fn init_rejects_budgets_below_floors() {
    let mut inst = tiny();
    inst.budgets.uav_bandwidth = 1e-3;
    let e = init_allocation(&inst, &SolverConfig::default()).unwrap_err();
    assert!(e.to_string().contains("budgets.uav_bandwidth"), "{e}");
}

fn monotone(trace: &[f64]) -> bool {
    trace.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs())
}

#[test]
fn larger_relay_bandwidth_never_hurts() {
    let cfg = SolverConfig::default();
    let mut inst = instance(vec![vec![sem(-200.0, 100.0), con(300.0, -150.0)]]);
    inst.budgets.uav_bandwidth = 4e6;
    let a = alternating_optimize(&inst, &cfg).unwrap();
    inst.budgets.uav_bandwidth = 8e6;
    let b = alternating_optimize(&inst, &cfg).unwrap();
    assert!(b.objective >= a.objective * (1.0 - 1e-9), "{} < {}", b.objective, a.objective);
}

#[test]
fn forty_user_instance_is_fast_and_monotone() {
    let inst = generate(&ScenarioSpec::default()).unwrap();
    assert_eq!(inst.num_users(), 40);
    let t = std::time::Instant::now();
    let r = alternating_optimize(&inst, &SolverConfig::default()).unwrap();
    assert!(t.elapsed().as_secs_f64() < 60.0);
    assert!(r.converged && r.feasible);
    assert!(monotone(&r.objective_trace), "{:?}", r.objective_trace);
    assert!(r.kkt.max() <= 1e-4, "{:?}", r.kkt);
}

#[test]
fn converged_solve_has_tight_balance_and_gains() {
    let inst = instance(vec![vec![sem(-200.0, 100.0), con(300.0, -150.0)], vec![con(3000.0, 200.0), sem(3300.0, 0.0)]]);
    let r = alternating_optimize(&inst, &SolverConfig::default()).unwrap();
    assert!(r.converged && r.feasible);
    let x = AuxState::tight(&inst, &r.allocation);
    let res = netmodel::constraint_residuals(&inst, &r.allocation, Some(&x));
    for c in &res.c1 {
        assert!(c.rel().abs() <= 1e-9, "{c:?}");
    }
    let (_, y) = solver::tighten_b_s2r(&inst, &r.allocation, &x, &SolverConfig::default());
    assert!(!y);
}
