use num_complex::Complex64;
use polar_bohm::{amp, State};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reference_states() -> Vec<(&'static str, State)> {
    vec![
        ("glauber", State::glauber(amp(4.0, 0.0), amp(0.0, 2.0))),
        ("su2", State::su2(amp(4.0, 0.0), amp(0.0, 2.0), 3).unwrap()),
        ("noon", State::noon(amp(4.0, 0.0), amp(0.0, 2.0), 3).unwrap()),
        ("truncated", State::glauber_truncated(amp(1.0, 0.5), amp(-0.5, 1.0), 12)),
        ("custom", State::custom(&[vec![amp(0.0, 0.0), amp(1.0, 0.0)], vec![amp(0.0, 0.7), amp(0.3, -0.2)]]).unwrap()),
    ]
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-5;
    for (name, s) in reference_states() {
        let mut checked = 0;
        while checked < 100 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let t = rng.gen_range(0.0..6.0);
            let w = s.eval(x, t);
            if w.density < 1e-6 * s.peak_density() {
                continue;
            }
            for l in 0..2 {
                let (mut xp, mut xm) = (x, x);
                xp[l] += h;
                xm[l] -= h;
                let fd = (s.psi(xp, t) - s.psi(xm, t)) / (2.0 * h);
                // the FD error is O(h^2) relative to |grad psi|; compare on that scale
                let scale = w.grad[0].norm().max(w.grad[1].norm()).max(w.psi.norm());
                let err = (fd - w.grad[l]).norm() / scale;
                assert!(err < 1e-6, "{name} x={x:?} l={l}: {err}");
            }
            checked += 1;
        }
    }
}

#[test]
fn parity_of_fixed_photon_number() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=6usize {
        let s = State::su2(amp(1.3, -0.4), amp(0.2, 0.9), n).unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        for _ in 0..20 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let t = rng.gen_range(0.0..6.0);
            let a = s.psi(x, t);
            let b = s.psi([-x[0], -x[1]], t) * sign;
            assert!((a - b).norm() < 1e-12);
        }
    }
}

#[test]
fn stationary_velocity_is_time_independent() {
    for (name, s) in reference_states() {
        if !s.is_stationary() {
            continue;
        }
        for x in [[0.3, 0.4], [-1.7, 2.2], [2.5, -0.1]] {
            let v0 = s.velocity(x, 0.0).unwrap();
            for t in [1.0, 2.5] {
                let v = s.velocity(x, t).unwrap();
                assert!((v[0] - v0[0]).abs() < 1e-12 && (v[1] - v0[1]).abs() < 1e-12, "{name}");
            }
        }
    }
}

#[test]
fn states_are_normalized_by_quadrature() {
    let n = 241;
    let h = 24.0 / (n - 1) as f64;
    let weight = |i: usize| if i == 0 || i == n - 1 { 0.5 * h } else { h };
    let mut states: Vec<State> = (1..=10).map(|k| State::su2(amp(4.0, 0.0), amp(0.0, 2.0), k).unwrap()).collect();
    states.extend((1..=10).map(|k| State::noon(amp(4.0, 0.0), amp(0.0, 2.0), k).unwrap()));
    states.push(State::glauber(amp(4.0, 0.0), amp(0.0, 2.0)));
    for s in states {
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = [-12.0 + i as f64 * h, -12.0 + j as f64 * h];
                total += weight(i) * weight(j) * s.density(x, 0.7);
            }
        }
        assert!((total - 1.0).abs() < 1e-6, "{:?}: {total}", s.family());
    }
}

#[test]
fn glauber_velocity_is_uniform() {
    let s = State::glauber(amp(4.0, 0.0), amp(0.0, 2.0));
    for t in [0.0, 0.9, 3.0] {
        let c = polar_bohm::states::glauber_center(amp(4.0, 0.0), amp(0.0, 2.0), t).x_tilde;
        let v0 = s.velocity(c, t).unwrap();
        for d in [[1.0, 1.0], [-2.0, 1.5], [2.5, -0.5]] {
            let v = s.velocity([c[0] + d[0], c[1] + d[1]], t).unwrap();
            assert!((v[0] - v0[0]).abs() < 1e-12 && (v[1] - v0[1]).abs() < 1e-12);
        }
    }
}

#[test]
fn truncated_sum_reproduces_small_glauber() {
    let exact = State::glauber(amp(1.0, 0.0), amp(0.0, 0.0));
    let sum = State::glauber_truncated(amp(1.0, 0.0), amp(0.0, 0.0), 30);
    for i in 0..=16 {
        for j in 0..=16 {
            let x = [-4.0 + 0.5 * i as f64, -4.0 + 0.5 * j as f64];
            if x[0].hypot(x[1]) <= 4.0 {
                for t in [0.0, 1.1] {
                    assert!((sum.psi(x, t) - exact.psi(x, t)).norm() < 1e-8);
                }
            }
        }
    }
}

#[test]
fn truncated_sum_reproduces_glauber() {
    let exact = State::glauber(amp(4.0, 0.0), amp(0.0, 2.0));
    let sum = State::glauber_truncated(amp(4.0, 0.0), amp(0.0, 2.0), 60);
    let v = sum.velocity([1.0, 1.0], 0.0).unwrap();
    assert!(v[0].abs() < 1e-4 && (v[1] - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-4, "{v:?}");
    let mut worst: f64 = 0.0;
    for i in 0..=40 {
        for j in 0..=40 {
            let x = [-4.0 + 0.2 * i as f64, -4.0 + 0.2 * j as f64];
            if x[0].hypot(x[1]) <= 4.0 {
                worst = worst.max((sum.psi(x, 0.0) - exact.psi(x, 0.0)).norm());
            }
        }
    }
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn noon_and_su2_agree_for_one_photon() {
    let a = State::noon(amp(1.0, 0.0), amp(0.0, 1.0), 1).unwrap();
    let b = State::su2(amp(1.0, 0.0), amp(0.0, 1.0), 1).unwrap();
    for x in [[0.5, 0.1], [-2.0, 1.0], [1.5, -1.5]] {
        let (va, vb) = (a.velocity(x, 0.0).unwrap(), b.velocity(x, 0.0).unwrap());
        assert!((va[0] - vb[0]).abs() < 1e-12 && (va[1] - vb[1]).abs() < 1e-12);
        assert!(rel(a.psi(x, 0.0), b.psi(x, 0.0)) < 1e-12);
    }
}

fn amplitude() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn current_is_density_times_velocity(a1 in amplitude(), a2 in amplitude(), n in 1usize..6,
                                         x1 in -4.0f64..4.0, x2 in -4.0f64..4.0, t in 0.0f64..6.3) {
        prop_assume!(a1.norm() + a2.norm() > 0.1);
        let s = State::su2(a1, a2, n).unwrap();
        let w = s.eval([x1, x2], t);
        prop_assert_eq!(w.density, w.psi.norm_sqr());
        if let Some(v) = w.velocity {
            for l in 0..2 {
                prop_assert!((w.current[l] - w.density * v[l]).abs() <= 1e-12 * w.current[l].abs().max(w.density));
            }
        }
    }

    #[test]
    fn glauber_center_radius_per_mode(a1 in amplitude(), a2 in amplitude(), t in -10.0f64..10.0) {
        let c = polar_bohm::states::glauber_center(a1, a2, t);
        for (l, a) in [a1, a2].iter().enumerate() {
            let r2 = c.x_tilde[l].powi(2) + c.y_tilde[l].powi(2);
            prop_assert!((r2 - 2.0 * a.norm_sqr()).abs() < 1e-12 * (1.0 + r2));
        }
    }

    #[test]
    fn su2_coefficients_sit_on_one_shell(a1 in amplitude(), a2 in amplitude(), n in 1usize..8) {
        prop_assume!(a1.norm() + a2.norm() > 0.1);
        let s = State::su2(a1, a2, n).unwrap();
        let mut norm = 0.0;
        for m in 0..=n {
            for k in 0..=n {
                let c = s.coefficient(m, k);
                if m + k != n {
                    prop_assert_eq!(c, Complex64::new(0.0, 0.0));
                }
                norm += c.norm_sqr();
            }
        }
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }
}
