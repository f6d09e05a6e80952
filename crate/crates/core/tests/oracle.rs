mod common;

use common::*;
use semrelay::netmodel::{self, Allocation};
use semrelay::oracle::{feasible, grid_search, GridSpec};
use semrelay::solver::{alternating_optimize, SolverConfig};
use semrelay::Error;

#[test]
fn satellite_power_overrun_flags_c4() {
    let inst = tiny();
    let mut a = Allocation::zeros(&inst);
    a.clusters[0].b_s2r = 1e6;
    a.clusters[0].p_s2r = 1.5 * inst.budgets.sat_power;
    let f = feasible(&inst, &a).unwrap();
    assert!(!f.feasible);
    assert_eq!(f.violated, vec!["C4".to_string()]);
}

#[test]
fn zero_allocation_is_feasible_with_zero_rate() {
    let inst = tiny();
    let a = Allocation::zeros(&inst);
    assert!(feasible(&inst, &a).unwrap().feasible);
    assert_eq!(netmodel::sum_rate(&inst, &a), 0.0);
}

#[test]
fn shape_mismatch_is_an_error() {
    let inst = tiny();
    let other = instance(vec![vec![con(0.0, 0.0)]]);
    assert!(feasible(&inst, &Allocation::zeros(&other)).is_err());
}

#[test]
fn single_link_optimum_binds_the_balance() {
    let inst = instance(vec![vec![con(250.0, -100.0)]]);
    let r = grid_search(&inst, &GridSpec::default()).unwrap();
    let ca = &r.allocation.clusters[0];
    assert_eq!(ca.uav_xy, [250.0, -100.0]);
    assert!(feasible(&inst, &r.allocation).unwrap().feasible);
    let res = netmodel::constraint_residuals(&inst, &r.allocation, None);
    assert!(res.c1[0].rel().abs() < 1e-6, "{:?}", res.c1[0]);
}

#[test]
fn refinement_never_loses_ground() {
    let r = grid_search(&tiny(), &GridSpec::default()).unwrap();
    assert!(r.trace.len() >= 2);
    assert!(r.trace.windows(2).all(|w| w[1] >= w[0]), "{:?}", r.trace);
    assert_eq!(*r.trace.last().unwrap(), r.objective);
    assert!(feasible(&tiny(), &r.allocation).unwrap().feasible);
}

#[test]
fn user_order_does_not_change_the_optimum() {
    let a = grid_search(&tiny(), &GridSpec::default()).unwrap();
    let swapped = instance(vec![vec![con(300.0, -150.0), sem(-200.0, 100.0)]]);
    let b = grid_search(&swapped, &GridSpec::default()).unwrap();
    assert!(rel_gap(a.objective, b.objective) < 1e-6, "{} vs {}", a.objective, b.objective);
}

#[test]
fn symmetric_pair_optimum_set_is_mirror_symmetric() {
    let inst = instance(vec![vec![con(-500.0, 0.0), con(500.0, 0.0)]]);
    let r = grid_search(&inst, &GridSpec::default()).unwrap();
    let mut m = r.allocation.clone();
    m.clusters[0].links.swap(0, 1);
    m.clusters[0].uav_xy[0] = -m.clusters[0].uav_xy[0];
    assert!(feasible(&inst, &m).unwrap().feasible);
    assert!(rel_gap(netmodel::sum_rate(&inst, &m), r.objective) < 1e-12);

    // the symmetric start is a stationary point of the solver; the optimum
    // hovers over one user and a perturbed start finds it
    let centred = alternating_optimize(&inst, &SolverConfig::default()).unwrap();
    let l = &centred.allocation.clusters[0].links;
    assert!(rel_gap(l[0].bandwidth, l[1].bandwidth) < 1e-9, "{l:?}");
    assert!(centred.objective <= r.objective * (1.0 + 1e-6));
    let cfg = SolverConfig { init_jitter: 50.0, seed: 3, ..SolverConfig::default() };
    let moved = alternating_optimize(&inst, &cfg).unwrap();
    assert!(rel_gap(moved.objective, r.objective) < 1e-3, "{} vs {}", moved.objective, r.objective);
    assert!((moved.allocation.clusters[0].uav_xy[0].abs() - 500.0).abs() < 1.0);
}

#[test]
fn oversized_instances_are_refused() {
    let inst = instance(vec![vec![sem(0.0, 0.0), con(10.0, 0.0)], vec![con(3000.0, 0.0), con(3100.0, 0.0)]]);
    assert!(matches!(grid_search(&inst, &GridSpec::default()), Err(Error::Refused(_))));
}

#[test]
fn solver_output_passes_the_checker() {
    let inst = instance(vec![vec![sem(-200.0, 100.0), con(300.0, -150.0)], vec![con(3000.0, 0.0), sem(3400.0, 0.0)]]);
    let r = alternating_optimize(&inst, &SolverConfig::default()).unwrap();
    let f = feasible(&inst, &r.allocation).unwrap();
    assert!(f.feasible, "{:?}", f.violated);
}
