use magrav::heatwave::*;
use magrav::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn line(v: &[f64]) -> Cloud64 {
    Cloud::line(v).unwrap()
}

fn pot(a: &[f64]) -> Potential64 {
    Potential::new(Lattice::line(a).unwrap())
}

fn random_line(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Cloud64 {
    line(&(0..n).map(|_| rng.gen_range(-r..r)).collect::<Vec<_>>())
}

#[test]
fn single_particle_velocity() {
    let p = pot(&[0.4]);
    let v = v_eps(&p, 2.5, &line(&[-1.1]), 0.3).unwrap();
    assert!((v.as_slice()[0] - (-1.1 - 0.4) / 5.0).abs() < 1e-15);
}

#[test]
fn density_is_permutation_symmetric() {
    let p = pot(&[-1.0, 0.2, 1.5]);
    let x = line(&[0.3, -0.7, 1.1]);
    let r0 = rho_eps(&p, 0.8, &x, 0.6).unwrap();
    assert!(r0 > 0.0);
    for s in Perm::all(3) {
        let r = rho_eps(&p, 0.8, &x.permute(&s).unwrap(), 0.6).unwrap();
        assert!((r - r0).abs() <= 1e-14 * r0, "{r} vs {r0}");
    }
}

#[test]
fn density_integrates_to_one() {
    let p = pot(&[-1.0, 1.0]);
    let (t, eps) = (1.0, 0.25);
    let (lo, hi, n) = (-4.0, 4.0, 200);
    let h = (hi - lo) / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = line(&[lo + (i as f64 + 0.5) * h, lo + (j as f64 + 0.5) * h]);
            total += rho_eps(&p, t, &x, eps).unwrap() * h * h;
        }
    }
    assert!((total - 1.0).abs() <= 0.01, "{total}");
}

#[test]
fn velocity_agrees_with_softmax_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=4);
        let p = Potential::new(Lattice::new(random_line(&mut rng, n, 2.0)));
        let x = random_line(&mut rng, n, 3.0);
        let (t, eps) = (rng.gen_range(0.1..4.0), rng.gen_range(0.05..2.0));
        let v = v_eps(&p, t, &x, eps).unwrap();
        let g = p.grad_f_eps(t, &x, eps).unwrap();
        let other = x.sub(&g).scale(1.0 / (2.0 * t));
        worst = worst.max(v.max_abs_diff(&other));
    }
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn velocity_is_minus_half_eps_score() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let n = rng.gen_range(1..=3);
        let p = Potential::new(Lattice::new(random_line(&mut rng, n, 2.0)));
        let x = random_line(&mut rng, n, 2.0);
        let (t, eps) = (rng.gen_range(0.5..3.0), rng.gen_range(0.2..1.5));
        let v = v_eps(&p, t, &x, eps).unwrap();
        let h = 1e-5;
        let fd: Vec<f64> = (0..n)
            .map(|i| {
                let mut up = x.clone();
                let mut dn = x.clone();
                up.as_mut_slice()[i] += h;
                dn.as_mut_slice()[i] -= h;
                let d = rho_eps(&p, t, &up, eps).unwrap().ln() - rho_eps(&p, t, &dn, eps).unwrap().ln();
                -0.5 * eps * d / (2.0 * h)
            })
            .collect();
        let fd = line(&fd);
        let rel = v.sub(&fd).norm() / v.norm().max(1e-3);
        assert!(rel <= 1e-5, "{rel}");
    }
}

#[test]
fn velocity_is_equivariant() {
    let p = pot(&[-1.0, 0.0, 2.0]);
    let x = line(&[0.5, -0.3, 1.2]);
    let v = v_eps(&p, 1.3, &x, 0.4).unwrap();
    for s in Perm::all(3) {
        let vs = v_eps(&p, 1.3, &x.permute(&s).unwrap(), 0.4).unwrap();
        assert!(vs.max_abs_diff(&v.permute(&s).unwrap()) <= 1e-14);
    }
}

fn closed_form(a: f64, x0: f64, t0: f64, t: f64) -> f64 {
    a + (x0 - a) * (t / t0).sqrt()
}

#[test]
fn companion_matches_closed_form() {
    let p = pot(&[0.7]);
    let (t0, t1) = (0.5, 4.0);
    let tr = integrate_companion(&p, &line(&[-1.2]), t0, t1, 1000, 0.3).unwrap();
    let exact = closed_form(0.7, -1.2, t0, t1);
    let rel = (tr.last().as_slice()[0] - exact).abs() / exact.abs();
    assert!(rel <= 1e-6, "{rel}");
    assert_eq!(tr.gauge(), Gauge::T);
}

#[test]
fn companion_is_fourth_order() {
    let p = pot(&[0.7]);
    let (t0, t1) = (0.2, 3.0);
    let exact = closed_form(0.7, -1.2, t0, t1);
    let err = |m| (integrate_companion(&p, &line(&[-1.2]), t0, t1, m, 0.3).unwrap().last().as_slice()[0] - exact).abs();
    let (e1, e2) = (err(20), err(40));
    let order = (e1 / e2).log2();
    assert!(order >= 3.5, "{order}");
}

#[test]
fn companion_is_equivariant_and_monotone() {
    let p = pot(&[-1.0, 0.0, 1.0]);
    let x0 = line(&[-0.4, 0.1, 0.3]);
    let base = integrate_companion(&p, &x0, 0.5, 3.0, 200, 0.5).unwrap();
    for s in base.states() {
        assert!(s.is_sorted_ascending());
    }
    for sigma in Perm::all(3) {
        let tr = integrate_companion(&p, &x0.permute(&sigma).unwrap(), 0.5, 3.0, 200, 0.5).unwrap();
        for (a, b) in tr.states().iter().zip(base.states()) {
            assert!(a.max_abs_diff(&b.permute(&sigma).unwrap()) <= 1e-13);
        }
    }
}

#[test]
fn companion_rejects_zero_start() {
    let p = pot(&[0.0]);
    let err = integrate_companion(&p, &line(&[1.0]), 0.0, 1.0, 10, 0.1).unwrap_err();
    assert!(err.to_string().contains("heat kernel requires t>0"));
    assert!(NoiseSpec::new(-1.0, 0, 10).is_err());
    assert!(NoiseSpec::new(1.0, 0, 0).is_err());
}

#[test]
fn noiseless_sde_is_euler() {
    let p = pot(&[-1.0, 1.0]);
    let x0 = line(&[-0.3, 0.2]);
    let noise = NoiseSpec::new(0.0, 99, 300).unwrap();
    let sde = sample_sde(&p, &x0, 1.0, 2.0, &noise, 0.2).unwrap();
    let euler = euler_companion(&p, &x0, 1.0, 2.0, 300, 0.2).unwrap();
    assert_eq!(sde, euler);
}

#[test]
fn sde_is_reproducible() {
    let p = pot(&[-1.0, 1.0]);
    let x0 = line(&[-0.3, 0.2]);
    let noise = NoiseSpec::new(0.05, 7, 100).unwrap();
    let a = sample_sde(&p, &x0, 1.0, 2.0, &noise, 0.2).unwrap();
    let b = sample_sde(&p, &x0, 1.0, 2.0, &noise, 0.2).unwrap();
    assert_eq!(a, b);
    let other = NoiseSpec::new(0.05, 8, 100).unwrap();
    assert_ne!(a, sample_sde(&p, &x0, 1.0, 2.0, &other, 0.2).unwrap());
    let flat = noise.with_alpha(NoiseScale::Constant(1.0));
    assert_ne!(a, sample_sde(&p, &x0, 1.0, 2.0, &flat, 0.2).unwrap());
}

#[test]
fn sde_mean_tracks_the_deterministic_path() {
    let p = pot(&[-1.0, 1.0]);
    let x0 = line(&[-0.5, 0.4]);
    let (t0, t1, steps, eps) = (1.0, 2.0, 50, 0.2);
    let det = euler_companion(&p, &x0, t0, t1, steps, eps).unwrap();
    let n = 10_000;
    let mut sum = [0.0f64; 2];
    let mut sum_sq = [0.0f64; 2];
    for seed in 0..n {
        let noise = NoiseSpec::new(1e-4, seed, steps).unwrap();
        let end = sample_sde(&p, &x0, t0, t1, &noise, eps).unwrap();
        for i in 0..2 {
            let v = end.last().as_slice()[i];
            sum[i] += v;
            sum_sq[i] += v * v;
        }
    }
    for i in 0..2 {
        let mean = sum[i] / n as f64;
        let var = sum_sq[i] / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        let target = det.last().as_slice()[i];
        assert!((mean - target).abs() <= 3.0 * se, "coord {i}: {mean} vs {target} (se {se})");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_is_positive(x in prop::collection::vec(-5.0f64..5.0, 3), t in 0.05f64..5.0, eps in 0.01f64..2.0) {
        let p = pot(&[-1.0, 0.0, 2.0]);
        let lr = log_rho_eps(&p, t, &line(&x), eps).unwrap();
        prop_assert!(lr.is_finite());
        prop_assert!(rho_eps(&p, t, &line(&x), eps).unwrap() >= 0.0);
    }
}
