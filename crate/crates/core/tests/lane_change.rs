use std::sync::Arc;

use stl_splitter::lane_change::perception::features;
use stl_splitter::lane_change::*;
use stl_splitter::monitor::BoundFormula;
use stl_splitter::sim::{run_trajectory, NoiseStream, RunOptions, Sampler, Scenario};
use stl_splitter::stl::{Formula, Interval};

fn car(s: f64, d: f64, v: f64) -> VehicleState {
    VehicleState { s, d, psi: 0.0, v, length: 4.5, width: 2.0 }
}

fn sampler(seed: u64) -> Sampler {
    Sampler::target(NoiseStream::new(seed, 0))
}

/// Combined state with the ego first, then one `[s, d, psi, v]` block per car.
fn scene(ego: VehicleState, a: f64, others: &[VehicleState]) -> Vec<f64> {
    let mut x = vec![ego.s, ego.d, ego.psi, ego.v, a];
    for o in others {
        x.extend([o.s, o.d, o.psi, o.v]);
    }
    x
}

#[test]
fn straight_line_step() {
    let ego = EgoConfig::default();
    let x = dyn_step(&car(15.0, 5.25, 20.0), [0.0, 0.0], 0.1, &ego);
    assert!((x.s - 17.0).abs() < 1e-12);
    assert_eq!(x.d, 5.25);
    assert_eq!(x.psi, 0.0);

    let y = dyn_step(&car(0.0, 5.25, 20.0), [1.0, 0.0], 0.1, &ego);
    assert!((y.v - 20.1).abs() < 1e-12);

    let mut z = car(15.0, 5.25, 20.0);
    for _ in 0..40 {
        z = dyn_step(&z, [0.0, 0.0], 0.1, &ego);
    }
    assert!((z.s - 95.0).abs() < 1e-9);
}

#[test]
fn speed_is_clamped() {
    let ego = EgoConfig::default();
    let x = dyn_step(&car(0.0, 0.0, 0.5), [-10.0, 0.0], 0.1, &ego);
    assert_eq!(x.v, 0.0);
    let y = dyn_step(&car(0.0, 0.0, ego.v_max), [3.0, 0.0], 0.1, &ego);
    assert_eq!(y.v, ego.v_max);
}

#[test]
fn turning_follows_single_track_model() {
    let ego = EgoConfig::default();
    let x = dyn_step(&car(0.0, 0.0, 10.0), [0.0, 0.2], 0.1, &ego);
    // small turn rate: steering stays unclamped, so yaw rate equals the input
    assert!((x.psi - 0.02).abs() < 1e-12);
    // a huge request saturates at max_steer
    let y = dyn_step(&car(0.0, 0.0, 10.0), [0.0, 100.0], 0.1, &ego);
    let expected = 10.0 / ego.wheelbase * ego.max_steer.tan() * 0.1;
    assert!((y.psi - expected).abs() < 1e-12);
}

#[test]
fn perfect_pem_returns_truth() {
    let ego = car(0.0, 5.25, 20.0);
    let others = [car(30.0, 5.25, 5.0), car(20.0, 1.75, 10.0)];
    let obs = pem_observe(&ego, &others, &PemParams::perfect(), &mut sampler(3));
    for (o, z) in others.iter().zip(&obs) {
        let z = z.expect("always detected");
        assert_eq!((z.s, z.d, z.psi), (o.s, o.d, o.psi));
    }
}

#[test]
fn blind_pem_detects_nothing() {
    let params = PemParams { detect_coeffs: [-1e9, 0.0, 0.0], ..PemParams::perfect() };
    let ego = car(0.0, 5.25, 20.0);
    let others = [car(30.0, 5.25, 5.0), car(20.0, 1.75, 10.0)];
    let mut s = sampler(4);
    for _ in 0..20 {
        assert!(pem_observe(&ego, &others, &params, &mut s).iter().all(Option::is_none));
    }
}

#[test]
fn car_behind_a_car_is_occluded() {
    let ego = car(0.0, 5.25, 20.0);
    let near = car(20.0, 5.25, 0.0);
    let far = car(40.0, 5.25, 0.0);
    let aside = car(40.0, 12.25, 0.0);
    let f = features(&ego, &[near, far, aside]);
    assert_eq!(f[0].occlusion, 0.0);
    // the near car spans +-atan(1/17.75) and the far one +-atan(1/37.75)
    assert_eq!(f[1].occlusion, 1.0);
    assert_eq!(f[2].occlusion, 0.0);
    assert!((f[1].range - 40.0).abs() < 1e-12);
}

#[test]
fn detection_falls_with_range_and_occlusion() {
    let p = PemParams::default();
    let ego = car(0.0, 5.25, 20.0);
    let f = features(&ego, &[car(10.0, 5.25, 0.0), car(45.0, 5.25, 0.0)]);
    let near = perception::detection_probability(&p, &f[0]);
    let far = perception::detection_probability(&p, &f[1]);
    assert!(near > far && far > 0.0 && near < 1.0);
}

fn tracker_cfg(q: f64) -> TrackerConfig {
    TrackerConfig { process_accel: [q, q], ..TrackerConfig::default() }
}

#[test]
fn exact_observation_pins_the_track() {
    let o = car(50.0, 5.25, 5.0);
    let mut tr = Track::from_truth(&car(49.0, 5.0, 5.0), &tracker_cfg(0.0));
    tr.update(&Observation { s: o.s, d: o.d, psi: 0.0 }, [0.0, 0.0]);
    assert!((tr.mean[0] - 50.0).abs() < 1e-9);
    assert!((tr.mean[1] - 5.25).abs() < 1e-9);
    assert_eq!(tr.staleness, 0);
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(tr.cov[i][j], tr.cov[j][i]);
        }
    }
}

#[test]
fn unobserved_track_extrapolates() {
    let cfg = tracker_cfg(1.0);
    let mut tr = Track::from_truth(&car(10.0, 1.75, 8.0), &cfg);
    for _ in 0..25 {
        tr.predict(0.1, &cfg);
    }
    assert!((tr.mean[0] - 30.0).abs() < 1e-9);
    assert_eq!(tr.mean[1], 1.75);
    assert!(tr.cov[0][0] > cfg.init_pos_sd.powi(2));
}

#[test]
fn stationary_track_is_calibrated() {
    let cfg = tracker_cfg(0.0);
    let truth = car(40.0, 5.25, 0.0);
    let sd = [0.5, 0.1];
    let mut inside = 0;
    for run in 0..1000 {
        let mut noise = NoiseStream::new(9, run);
        let mut tr = Track::from_truth(&truth, &cfg);
        tr.mean[0] += cfg.init_pos_sd * noise.standard_normal();
        tr.mean[1] += cfg.init_pos_sd * noise.standard_normal();
        for _ in 0..40 {
            tr.predict(0.1, &cfg);
            let z = Observation {
                s: truth.s + sd[0] * noise.standard_normal(),
                d: truth.d + sd[1] * noise.standard_normal(),
                psi: 0.0,
            };
            tr.update(&z, sd);
        }
        let ok_s = (tr.mean[0] - truth.s).abs() <= 3.0 * tr.cov[0][0].sqrt();
        let ok_d = (tr.mean[1] - truth.d).abs() <= 3.0 * tr.cov[1][1].sqrt();
        inside += (ok_s && ok_d) as usize;
    }
    assert!(inside >= 990, "{inside}/1000 within 3 sigma");
}

#[test]
fn prediction_identity_and_distance() {
    let tr = Track::from_truth(&car(50.0, 5.25, 5.0), &TrackerConfig::default());
    assert_eq!(predict(&tr, 0, 0.1), tr.mean);
    let p = predict(&tr, 10, 0.1);
    assert!((p[0] - 55.0).abs() < 1e-12);
    assert_eq!(p[1], 5.25);
}

#[test]
fn prediction_composes() {
    let mut noise = NoiseStream::new(1, 1);
    for _ in 0..200 {
        let mut tr = Track::from_truth(&car(0.0, 0.0, 0.0), &TrackerConfig::default());
        tr.mean = std::array::from_fn(|_| 10.0 * noise.standard_normal());
        let (a, b) = (noise.index(20), noise.index(20));
        let mut mid = tr.clone();
        mid.mean = predict(&tr, a, 0.1);
        let once = predict(&tr, a + b, 0.1);
        let twice = predict(&mid, b, 0.1);
        for k in 0..4 {
            assert!((once[k] - twice[k]).abs() < 1e-9);
        }
    }
}

fn controller_parts() -> (ControllerConfig, EgoConfig, RoadConfig) {
    (ControllerConfig::default(), EgoConfig::default(), RoadConfig::default())
}

fn parked(s: f64, d: f64, horizon: usize) -> PredictedObstacle {
    PredictedObstacle { path: vec![(s, d); horizon], length: 4.5, width: 2.0 }
}

#[test]
fn empty_road_accelerates() {
    let (cfg, ego, road) = controller_parts();
    let c = Controller { cfg: &cfg, ego: &ego, road: &road, dt: 0.1 };
    let plan = c.plan(&car(0.0, 5.25, 20.0), 0.0, 1, &[]);
    assert!(plan.action[0] > 0.0, "{:?}", plan);
}

#[test]
fn parked_car_ahead_forces_a_lane_change() {
    let (cfg, ego, road) = controller_parts();
    let c = Controller { cfg: &cfg, ego: &ego, road: &road, dt: 0.1 };
    let x = car(0.0, 5.25, 20.0);
    let obstacle = [parked(22.0, 5.25, cfg.horizon)];
    let cands = c.candidates(&x, 0.0, 1, &obstacle);
    // scoring every candidate by hand: nothing that stays in lane 1 survives
    assert!(cands.iter().filter(|k| k.target_lane == 1).all(|k| k.cost.is_none()));
    let best = cands
        .iter()
        .filter_map(|k| k.cost.map(|v| (v, k.target_lane)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("a free lane exists");
    let plan = c.plan(&x, 0.0, 1, &obstacle);
    assert_ne!(plan.target_lane, 1);
    assert_eq!(plan.target_lane, best.1);
    assert!(plan.action[0] >= cfg.a_min && plan.action[0] <= cfg.a_max);
}

#[test]
fn boxed_in_falls_back_to_full_braking() {
    let (cfg, ego, road) = controller_parts();
    let c = Controller { cfg: &cfg, ego: &ego, road: &road, dt: 0.1 };
    let walls: Vec<_> = [1.75, 5.25, 8.75].iter().map(|&d| parked(4.0, d, cfg.horizon)).collect();
    let plan = c.plan(&car(0.0, 5.25, 20.0), 0.0, 1, &walls);
    assert_eq!(plan.action, [cfg.a_min, 0.0]);
    assert_eq!(plan.target_lane, 1);
}

#[test]
fn lateral_law_steers_towards_target() {
    let (cfg, ego, road) = controller_parts();
    let c = Controller { cfg: &cfg, ego: &ego, road: &road, dt: 0.1 };
    assert!(c.lateral_law(&car(0.0, 5.25, 20.0), 2) > 0.0);
    assert!(c.lateral_law(&car(0.0, 5.25, 20.0), 0) < 0.0);
    assert_eq!(c.lateral_law(&car(0.0, 5.25, 20.0), 1), 0.0);
    assert_eq!(c.lane_options(0), vec![0, 1]);
    assert_eq!(c.lane_options(2), vec![1, 2]);
}

#[test]
fn phi3_has_the_table_shape() {
    let cfg = LaneChangeConfig::default();
    let expected = Formula::always(
        Interval::unbounded(0),
        Formula::pred("slow_leading_vehicle").not().implies(Formula::pred("preserves_flow")),
    );
    assert_eq!(rule_formula(Rule::Phi3, &cfg), expected);
    assert_eq!(expected.to_string(), "G[0,inf] (not slow_leading_vehicle -> preserves_flow)");
}

#[test]
fn rules_parse_by_name() {
    for r in Rule::ALL {
        assert_eq!(r.name().parse::<Rule>().unwrap(), r);
    }
    assert!("phi5".parse::<Rule>().is_err());
}

#[test]
fn vehicle_rules_skip_the_parked_car() {
    let cfg = LaneChangeConfig::default();
    let f = rule_formula(Rule::Phi1, &cfg);
    let args: Vec<_> = f
        .nodes()
        .iter()
        .filter_map(|n| match n {
            stl_splitter::stl::Node::Pred { args, .. } if !args.is_empty() => Some(args[0] as usize),
            _ => None,
        })
        .collect();
    assert!(!args.contains(&1));
    assert!(args.contains(&2) && args.contains(&3));
}

fn margin(name: &str, x: &[f64], args: &[f64]) -> f64 {
    let table = LaneChange::default().predicates();
    table.get(name).unwrap().eval(x, args)
}

#[test]
fn flow_margin_is_zero_at_the_threshold() {
    let x = scene(car(0.0, 5.25, 13.6), 0.0, &[car(40.0, 5.25, 0.0), car(60.0, 5.25, 5.0), car(60.0, 1.75, 10.0)]);
    assert_eq!(margin("preserves_flow", &x, &[]), 0.0);
}

#[test]
fn safe_distance_by_hand() {
    let leader = car(50.0, 5.25, 5.0);
    let x = scene(car(0.0, 5.25, 20.0), 0.0, &[car(200.0, 1.75, 0.0), leader, car(300.0, 1.75, 10.0)]);
    let gap = 50.0 - 4.5;
    let d_safe = 20.0 * 0.3 + (400.0 - 25.0) / 20.0;
    let m = margin("keeps_safe_distance_prec", &x, &[2.0]);
    assert!((m - (gap - d_safe)).abs() < 1e-12, "{m}");
    assert!((m - 20.75).abs() < 1e-12);
}

#[test]
fn margin_signs_on_hand_built_scenes() {
    let ego = car(0.0, 5.25, 20.0);
    let ahead_same = car(30.0, 5.25, 5.0);
    let ahead_left = car(30.0, 8.75, 25.0);
    let behind_right = car(-20.0, 1.75, 10.0);
    let x = scene(ego, -3.0, &[ahead_same, ahead_left, behind_right]);
    assert!(margin("in_same_lane", &x, &[1.0]) > 0.0);
    assert!(margin("in_same_lane", &x, &[2.0]) < 0.0);
    assert!(margin("in_front_of", &x, &[1.0]) > 0.0);
    assert!(margin("in_front_of", &x, &[3.0]) < 0.0);
    assert!(margin("left_of", &x, &[2.0]) > 0.0);
    assert!(margin("left_of", &x, &[1.0]) < 0.0);
    assert!(margin("left_of", &x, &[3.0]) < 0.0);
    assert!(margin("drives_faster", &x, &[1.0]) > 0.0);
    assert!(margin("drives_faster", &x, &[2.0]) < 0.0);
    assert!(margin("slightly_higher_speed", &x, &[3.0]) < 0.0);
    assert!(margin("slow_leading_vehicle", &x, &[]) > 0.0);
    // braking hard behind a slow leader is justified
    assert!(margin("unnecessary_braking", &x, &[]) < 0.0);
    assert_eq!(margin("on_access_ramp", &x, &[]), -1.0);
    assert!(margin("on_main_carriageway", &x, &[1.0]) > 0.0);

    // same braking on an empty lane is not
    let y = scene(ego, -3.0, &[car(200.0, 1.75, 0.0), car(300.0, 8.75, 5.0), car(-50.0, 1.75, 10.0)]);
    assert!(margin("slow_leading_vehicle", &y, &[]) < 0.0);
    assert!(margin("unnecessary_braking", &y, &[]) > 0.0);
    let z = scene(ego, -1.0, &[car(200.0, 1.75, 0.0), car(300.0, 8.75, 5.0), car(-50.0, 1.75, 10.0)]);
    assert!(margin("unnecessary_braking", &z, &[]) < 0.0);
}

#[test]
fn slow_traffic_and_cut_in() {
    let ego = car(0.0, 5.25, 20.0);
    let jam = [car(30.0, 8.75, 5.0), car(40.0, 8.75, 6.0), car(-20.0, 1.75, 25.0)];
    let x = scene(ego, 0.0, &jam);
    assert!((margin("in_slow_traffic", &x, &[1.0]) - (8.3 - 6.0)).abs() < 1e-12);
    assert!(margin("in_slow_traffic", &x, &[3.0]) < 0.0);

    let mut merging = car(20.0, 3.0, 10.0);
    merging.psi = 0.1;
    let y = scene(ego, 0.0, &[merging, car(200.0, 8.75, 5.0), car(300.0, 1.75, 5.0)]);
    assert!(margin("cut_in", &y, &[1.0]) > 0.0);
    let z = scene(ego, 0.0, &[car(20.0, 1.75, 10.0), car(200.0, 8.75, 5.0), car(300.0, 1.75, 5.0)]);
    assert!(margin("cut_in", &z, &[1.0]) < 0.0);
}

#[test]
fn out_of_range_obstacle_is_unbound() {
    let x = scene(car(0.0, 5.25, 20.0), 0.0, &[car(40.0, 5.25, 0.0); 3]);
    assert!(margin("in_front_of", &x, &[0.0]).is_nan());
    assert!(margin("in_front_of", &x, &[4.0]).is_nan());
}

fn overlaps(a: &VehicleState, b: &VehicleState) -> bool {
    (a.s - b.s).abs() < (a.length + b.length) / 2.0 && (a.d - b.d).abs() < (a.width + b.width) / 2.0
}

#[test]
fn noiseless_closed_loop_is_deterministic_and_safe() {
    let cfg = LaneChangeConfig { pem: PemParams::perfect(), ..LaneChangeConfig::default() };
    let sc = LaneChange::new(cfg).unwrap();
    for rule in Rule::ALL {
        let spec = BoundFormula::new(sc.rule_formula(rule), &sc.predicates()).unwrap();
        let runs: Vec<_> = (0..3)
            .map(|seed| run_trajectory(&sc, &spec, sampler(seed), RunOptions::default()).unwrap())
            .collect();
        assert_eq!(runs[0].trajectory.len(), 41);
        assert_eq!(runs[0].levels, runs[1].levels);
        assert_eq!(runs[0].levels, runs[2].levels);
    }

    let mut sim = sc.build();
    let mut s = sampler(0);
    for _ in 0..sc.horizon() {
        use stl_splitter::sim::Simulator;
        sim.step(&mut s);
        let ego = *sim.ego();
        assert!(sim.obstacles().iter().all(|o| !overlaps(&ego, o)), "collision at t={}", sim.timestep());
        assert!(ego.d > 0.0 && ego.d < 10.5);
    }
}

#[test]
fn config_round_trips_and_validates() {
    let cfg = LaneChangeConfig::default();
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(LaneChangeConfig::from_json(&text).unwrap(), cfg);
    let partial = LaneChangeConfig::from_json(r#"{"horizon": 20, "ego": {"v": 15.0}}"#).unwrap();
    assert_eq!(partial.horizon, 20);
    assert_eq!(partial.ego.v, 15.0);
    assert_eq!(partial.ego.s, 15.0);
    assert!(matches!(LaneChangeConfig::from_json(r#"{"dt": -1}"#), Err(ConfigError::Invalid(_))));
    assert!(matches!(LaneChangeConfig::from_json(r#"{"bogus": 1}"#), Err(ConfigError::Json(_))));
    assert!(LaneChange::new(LaneChangeConfig { ego: EgoConfig { lane: 5, ..EgoConfig::default() }, ..cfg }).is_err());
}

#[test]
fn noisy_runs_differ_but_repeat() {
    let sc = LaneChange::default();
    let spec: Arc<BoundFormula> = BoundFormula::new(sc.rule_formula(Rule::Phi2), &sc.predicates()).unwrap();
    let a = run_trajectory(&sc, &spec, sampler(5), RunOptions::default()).unwrap();
    let b = run_trajectory(&sc, &spec, sampler(5), RunOptions::default()).unwrap();
    let c = run_trajectory(&sc, &spec, sampler(6), RunOptions::default()).unwrap();
    assert_eq!(a.levels, b.levels);
    assert_eq!(a.trajectory.states(), b.trajectory.states());
    assert_ne!(a.trajectory.states(), c.trajectory.states());
}
