use magrav::analysis::*;
use magrav::minimizer::*;
use magrav::sticky::simulate_sticky;
use magrav::*;

fn line(v: &[f64]) -> Cloud64 {
    Cloud::line(v).unwrap()
}

fn lattice(v: &[f64]) -> Lattice64 {
    Lattice::line(v).unwrap()
}

fn theta_traj(m: usize, f: impl Fn(f64) -> Vec<f64>) -> Trajectory<f64> {
    let states = (0..=m).map(|k| line(&f(k as f64 / m as f64))).collect();
    Trajectory::new(Gauge::Theta, 0.0, 1.0, states).unwrap()
}

fn variance(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64
}

fn sticky_pair_oracle(steps: usize) -> OracleResult<f64> {
    let a = lattice(&[-1.0, 1.0]);
    let pq = line(&[-0.1, 0.1]);
    oracle_minimizer_1d(&a, &pq, &pq, (0.0, 1.0), &OracleOptions { steps, ..Default::default() }).unwrap()
}

#[test]
fn stuck_pair_energy_is_minus_one() {
    let a = lattice(&[0.0, 1.0]);
    let e = energy_profile(&theta_traj(64, |_| vec![0.5, 0.5]), &a).unwrap();
    assert!(e.values.iter().all(|v| (v + 1.0).abs() < 1e-15));
    assert!(e.max_deviation < 1e-15);
}

#[test]
fn free_particle_energy_is_constant() {
    let a = lattice(&[0.3]);
    let z = |th: f64| 0.3 + 0.2 * th.cosh() - 0.15 * th.sinh();
    let e = energy_profile(&theta_traj(2048, |th| vec![z(th)]), &a).unwrap();
    // the singleton internal energy is a² = 0.09
    assert!((e.median - (0.15f64.powi(2) - 0.2f64.powi(2) - 0.09)).abs() <= 1e-8, "{}", e.median);
    assert!(e.max_deviation <= 1e-8, "{}", e.max_deviation);
}

#[test]
fn oracle_minimizer_conserves_energy() {
    let res = sticky_pair_oracle(2048);
    let e = energy_profile(&res.trajectory, &lattice(&[-1.0, 1.0])).unwrap();
    assert!(e.max_deviation <= 1e-3, "{}", e.max_deviation);
}

#[test]
fn reparametrization_wiggle_raises_energy_variance() {
    let res = sticky_pair_oracle(2048);
    let sol = evaluate_pattern(
        &lattice(&[-1.0, 1.0]),
        &line(&[-0.1, 0.1]),
        &line(&[-0.1, 0.1]),
        (0.0, 1.0),
        &res.pattern.partitions,
        &res.pattern.times,
    )
    .unwrap()
    .unwrap();
    let a = lattice(&[-1.0, 1.0]);
    let base = energy_profile(&res.trajectory, &a).unwrap();
    let pi = std::f64::consts::PI;
    let wiggled = theta_traj(2048, |th| {
        sol.state_at(th + 0.02 * (2.0 * pi * th).sin()).as_slice().to_vec()
    });
    let moved = energy_profile(&wiggled, &a).unwrap();
    assert!(variance(&moved.values) > variance(&base.values));
}

#[test]
fn single_particle_momentum_residual() {
    let a = lattice(&[0.4]);
    let res = oracle_minimizer_1d(&a, &line(&[1.3]), &line(&[-0.5]), (0.0, 1.0), &OracleOptions::default()).unwrap();
    assert!(momentum_residual(&res.trajectory, &a).unwrap() <= 1e-6);
}

#[test]
fn non_solution_has_large_momentum_residual() {
    let a = lattice(&[-1.0, 1.0]);
    let traj = theta_traj(256, |th| vec![-0.5 + th * th, 0.5 + 3.0 * th * th]);
    assert!(momentum_residual(&traj, &a).unwrap() >= 0.5);
}

#[test]
fn smooth_free_motion_has_no_shocks() {
    let traj = theta_traj(100, |th| vec![-1.0 + 0.1 * th, 0.5 * th.cosh(), 2.0]);
    assert!(detect_shocks(&traj, 1e-9).unwrap().is_empty());
}

#[test]
fn simulated_merge_is_detected() {
    let a = lattice(&[-1.0, 1.0]);
    let res = simulate_sticky(&line(&[-0.5, 0.5]), &line(&[1.0, -1.0]), &a, (0.0, 1.0), 512).unwrap();
    let ev = &res.events[0];
    let shocks = detect_shocks(&res.trajectory, 1e-9).unwrap();
    assert_eq!(shocks.len(), 1);
    let s = &shocks[0];
    assert_eq!(s.class, ev.class());
    assert_eq!(s.kind, ShockKind::Merge);
    assert!(s.isolated);
    assert!((s.time - ev.time).abs() <= 1.0 / 512.0, "{} vs {}", s.time, ev.time);
    assert!((s.location - ev.position).abs() <= 1e-9);
}

#[test]
fn two_separate_merges_are_isolated() {
    let traj = theta_traj(400, |th| {
        let l = (0.25 - th).max(0.0);
        let r = (0.7 - th).max(0.0);
        vec![-1.0 - l, -1.0 + l, 1.0 - r, 1.0 + r]
    });
    let shocks = detect_shocks(&traj, 1e-9).unwrap();
    assert_eq!(shocks.len(), 2);
    assert_eq!(shocks[0].class, vec![0, 1]);
    assert_eq!(shocks[1].class, vec![2, 3]);
    assert!(shocks.iter().all(|s| s.isolated));
    assert!((shocks[0].time - 0.25).abs() <= 1e-9);
    assert!((shocks[1].time - 0.7).abs() <= 1e-9);
    assert!((shocks[0].location + 1.0).abs() <= 1e-12);
    assert!((shocks[1].jump - 1.0).abs() <= 1e-9);
}

#[test]
fn simultaneous_nearby_events_are_not_isolated() {
    let traj = theta_traj(400, |th| {
        let l = (0.5 - th).max(0.0);
        vec![-l, l, 1e-10 + 2.0 * l, 1e-10 + 3.0 * l]
    });
    let shocks = detect_shocks(&traj, 1e-9).unwrap();
    assert!(!shocks.is_empty());
    // one class of four forms at once; a neighbouring record would flag it
    assert_eq!(shocks.len(), 1);
    assert_eq!(shocks[0].class, vec![0, 1, 2, 3]);
}

#[test]
fn alpha_values() {
    let traj = theta_traj(64, |th| vec![0.0, 1.0 - (0.5 - th).min(0.0).abs()]);
    let fake = ShockRecord {
        time: 0.5,
        location: 0.0,
        class: vec![0, 1],
        kind: ShockKind::Merge,
        interval: 32,
        velocities_before: vec![0.0, 0.0],
        velocities_after: vec![0.0, 0.0],
        jump: 0.0,
        spread: 0.0,
        isolated: true,
    };
    let two = check_velocity_jump(&traj, &fake, &[], &lattice(&[0.0, 1.0]), 0.2).unwrap();
    assert!((two.alpha - 0.5).abs() < 1e-15);
    assert!(!two.pass);
    let traj3 = theta_traj(64, |_| vec![0.0, 1.0, 2.0]);
    let three = check_velocity_jump(&traj3, &fake, &[], &lattice(&[0.0, 1.0, 2.0]), 0.2).unwrap();
    assert!((three.alpha - (1.0f64 / 12.0).sqrt()).abs() < 1e-12);
    assert!((three.alpha - 0.28868).abs() < 1e-5);
}

#[test]
fn oracle_shocks_meet_the_jump_bound() {
    let a = lattice(&[-1.0, 1.0]);
    let res = sticky_pair_oracle(2048);
    let shocks = detect_shocks(&res.trajectory, 1e-9).unwrap();
    assert_eq!(shocks.len(), 2);
    assert_eq!(shocks[0].kind, ShockKind::Merge);
    assert_eq!(shocks[1].kind, ShockKind::Split);
    for s in &shocks {
        assert!(s.isolated);
        let c = check_velocity_jump(&res.trajectory, s, &shocks, &a, 0.2).unwrap();
        assert!(!c.inconclusive);
        assert!(c.jump >= 0.8 * c.alpha, "{c:?}");
    }
    // stuck for the middle of the window
    let stuck = shocks[1].time - shocks[0].time;
    assert!(stuck >= 0.1);
}

#[test]
fn wrong_gauge_or_dimension_is_rejected() {
    let t = Trajectory::straight_line(Gauge::T, 1.0, 2.0, &line(&[0.0]), &line(&[1.0]), 4).unwrap();
    assert!(detect_shocks(&t, 1e-9).is_err());
    let plane = Cloud::from_points(&[vec![0.0, 0.0]]).unwrap();
    let t = Trajectory::straight_line(Gauge::Theta, 0.0, 1.0, &plane, &plane, 4).unwrap();
    assert!(detect_shocks(&t, 1e-9).is_err());
    let t = theta_traj(8, |_| vec![0.0, 1.0]);
    assert!(momentum_residual(&t, &lattice(&[0.0])).is_err());
}

#[test]
fn forward_merge_energy_jump_is_gap_minus_loss() {
    let a = lattice(&[-1.0, 0.5]);
    let res = simulate_sticky(&line(&[-0.4, 0.3]), &line(&[0.9, -0.6]), &a, (0.0, 1.0), 2048).unwrap();
    assert_eq!(res.events.len(), 1);
    let ev = &res.events[0];
    let e = energy_profile(&res.trajectory, &a).unwrap();
    let side = |before: bool| {
        let v: Vec<f64> = e
            .times
            .iter()
            .zip(&e.values)
            .filter(|(t, _)| (**t < ev.time) == before)
            .map(|(_, v)| *v)
            .collect();
        (v[0], v[v.len() - 1])
    };
    let (b0, b1) = side(true);
    let (a0, a1) = side(false);
    assert!((b0 - b1).abs() <= 1e-6 && (a0 - a1).abs() <= 1e-6);
    // targets -1 and 0.5 merge to -0.25: gap = k1 k2 / k (m1 - m2)²
    let gap = 0.5 * 1.5f64.powi(2);
    assert!(((a0 - b1) - (gap - ev.kinetic_loss)).abs() <= 1e-5, "{} vs {}", a0 - b1, gap - ev.kinetic_loss);
}
