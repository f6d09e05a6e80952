use semrelay::netmodel::UserKind;
use semrelay::oracle;
use semrelay::scenarios::*;
use semrelay::solver::SolverConfig;

#[test]
fn generation_is_deterministic_per_seed() {
    let spec = ScenarioSpec::default();
    let a = generate(&spec).unwrap();
    let b = generate(&spec).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = generate(&ScenarioSpec { seed: 2, ..spec }).unwrap();
    assert_ne!(a.clusters[0].users[0].position, c.clusters[0].users[0].position);
}

#[test]
fn users_stay_inside_their_square() {
    let spec = ScenarioSpec { clusters: 3, ..Default::default() };
    let inst = generate(&spec).unwrap();
    for (n, c) in inst.clusters.iter().enumerate() {
        let [cx, cy] = spec.center(n);
        assert_eq!(c.users.len(), 8);
        for u in &c.users {
            assert!((u.position[0] - cx).abs() <= 500.0 && (u.position[1] - cy).abs() <= 500.0);
        }
    }
}

#[test]
fn mixes_share_geometry_and_set_counts() {
    let base = ScenarioSpec { clusters: 4, ..Default::default() };
    let pos = |m: MixMode| {
        let i = generate(&ScenarioSpec { mix: m, ..base.clone() }).unwrap();
        i.clusters.iter().flat_map(|c| c.users.iter().map(|u| u.position)).collect::<Vec<_>>()
    };
    assert_eq!(pos(MixMode::SemOnly), pos(MixMode::ConOnly));
    assert_eq!(pos(MixMode::Hybrid), pos(MixMode::SemConClusters));
    let i = generate(&ScenarioSpec { mix: MixMode::Hybrid, ..base }).unwrap();
    let sems: Vec<usize> = i.clusters.iter().map(|c| c.users.iter().filter(|u| u.kind == UserKind::Sem).count()).collect();
    assert_eq!(sems, vec![2, 6, 2, 6]);
}

#[test]
fn split_population_keeps_every_user() {
    let pop = generate(&ScenarioSpec { clusters: 1, n_sem: 8, n_con: 8, ..Default::default() }).unwrap();
    for k in [1, 2, 4] {
        let s = split_population(&pop, k).unwrap();
        assert_eq!(s.clusters.len(), k);
        assert_eq!(s.num_users(), 16);
        assert!(s.clusters.iter().all(|c| c.users.len() == 16 / k));
    }
    assert!(split_population(&pop, 0).is_err());
}

#[test]
fn restricted_modes_return_feasible_points() {
    let inst = generate(&ScenarioSpec { clusters: 2, n_sem: 2, n_con: 2, ..Default::default() }).unwrap();
    let cfg = SolverConfig::default();
    for m in BaselineMode::ALL {
        let r = run_baseline(&inst, m, &cfg).unwrap();
        assert!(r.feasible, "{m}");
        assert!(oracle::feasible(&inst, &r.allocation).unwrap().feasible, "{m}");
    }
}

#[test]
fn relay_bandwidth_sweep_is_nondecreasing() {
    let inst = generate(&ScenarioSpec { clusters: 2, ..Default::default() }).unwrap();
    let rows = sweep(SweepAxis::UavBandwidth, &[2e6, 5e6, 10e6, 20e6], &inst, &[BaselineMode::Joint], &SolverConfig::default())
        .unwrap();
    let v: Vec<f64> = rows.iter().map(|r| r.sum_rate_bps).collect();
    assert!(v.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-6)), "{v:?}");
    assert_eq!(rows[0].axis, "2000000.0");
}

#[test]
fn unsorted_sweep_values_are_rejected() {
    let inst = generate(&ScenarioSpec { clusters: 1, ..Default::default() }).unwrap();
    let e = sweep(SweepAxis::UavPower, &[5.0, 1.0], &inst, &[BaselineMode::Joint], &SolverConfig::default()).unwrap_err();
    assert!(e.to_string().contains("sweep.values"), "{e}");
}

#[test]
fn trajectory_layout_is_mirror_symmetric() {
    let traj = Trajectory::default();
    let inst = trajectory_instance(&traj, &ScenarioSpec::default()).unwrap();
    let mid = 7.0 * 111e3;
    for (a, b) in inst.clusters[0].users.iter().zip(&inst.clusters[1].users) {
        assert!((a.position[0] + b.position[0] - 2.0 * mid).abs() < 1e-6);
        assert_eq!(a.position[1], b.position[1]);
    }
    let lons = traj.longitudes();
    assert_eq!(lons.len(), 15);
    assert_eq!(lons[7], 7.0);
}
