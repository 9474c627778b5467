//! `verify`: the invariant suite, one pass/fail line per check.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;
use std::time::Instant;

use polar_bohm::analysis::{continuity_residual, equivariance_check};
use polar_bohm::dynamics::{circulation, glauber_analytic, integrate, IntegrationParams, Loop};
use polar_bohm::states::glauber_center;
use polar_bohm::topology::{classify_field, find_nodes};
use polar_bohm::{amp, Region, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type CheckResult = Result<String, String>;

pub struct Check {
    pub name: &'static str,
    /// Skipped by `--quick`.
    pub slow: bool,
    pub run: fn() -> CheckResult,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:<28} {} ({:.2}s)", self.name, self.detail, self.seconds)
    }
}

fn ensure(ok: bool, detail: String) -> CheckResult {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reference(kind: &str, n: usize) -> State {
    let (a1, a2) = (amp(4.0, 0.0), amp(0.0, 2.0));
    match kind {
        "su2" => State::su2(a1, a2, n).expect("valid"),
        "noon" => State::noon(a1, a2, n).expect("valid"),
        _ => State::glauber(a1, a2),
    }
}

fn gradient() -> CheckResult {
    let states = [
        reference("glauber", 0),
        reference("su2", 3),
        reference("noon", 3),
        State::glauber_truncated(amp(1.0, 0.5), amp(-0.5, 1.0), 12),
        State::custom(&[vec![amp(0.0, 0.0), amp(1.0, 0.0)], vec![amp(0.0, 0.7), amp(0.3, -0.2)]]).expect("valid"),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for s in &states {
        let mut done = 0;
        while done < 100 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let t = rng.gen_range(0.0..TAU);
            let w = s.eval(x, t);
            if w.density < 1e-6 * s.peak_density() {
                continue;
            }
            let scale = w.grad[0].norm().max(w.grad[1].norm()).max(w.psi.norm());
            for l in 0..2 {
                let (mut xp, mut xm) = (x, x);
                xp[l] += h;
                xm[l] -= h;
                let fd = (s.psi(xp, t) - s.psi(xm, t)) / (2.0 * h);
                worst = worst.max((fd - w.grad[l]).norm() / scale);
            }
            done += 1;
        }
    }
    ensure(worst < 1e-6, format!("max relative error {worst:.2e} over 500 points"))
}

fn parity() -> CheckResult {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 1..=6 {
        let s = State::su2(amp(1.3, -0.4), amp(0.2, 0.9), n).expect("valid");
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        for _ in 0..50 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let t = rng.gen_range(0.0..TAU);
            worst = worst.max((s.psi(x, t) - s.psi([-x[0], -x[1]], t) * sign).norm());
        }
    }
    ensure(worst < 1e-12, format!("max |psi(-x) - (-1)^n psi(x)| = {worst:.2e}"))
}

fn normalization() -> CheckResult {
    let n = 241;
    let h = 24.0 / (n - 1) as f64;
    let w = |i: usize| if i == 0 || i == n - 1 { 0.5 * h } else { h };
    let mut worst: f64 = 0.0;
    for k in 1..=10 {
        for s in [reference("su2", k), reference("noon", k)] {
            let mut total = 0.0;
            for i in 0..n {
                for j in 0..n {
                    total += w(i) * w(j) * s.density([-12.0 + i as f64 * h, -12.0 + j as f64 * h], 0.0);
                }
            }
            worst = worst.max((total - 1.0).abs());
        }
    }
    ensure(worst < 1e-6, format!("max |integral - 1| = {worst:.2e} for n <= 10"))
}

fn stationarity() -> CheckResult {
    let mut worst: f64 = 0.0;
    for s in [reference("su2", 3), reference("noon", 3)] {
        for x in [[0.3, 0.4], [-1.7, 2.2], [2.5, -0.1]] {
            let v0 = s.velocity(x, 0.0).ok_or("velocity undefined")?;
            for t in [1.0, 2.5] {
                let v = s.velocity(x, t).ok_or("velocity undefined")?;
                worst = worst.max((v[0] - v0[0]).abs()).max((v[1] - v0[1]).abs());
            }
        }
    }
    ensure(worst < 1e-12, format!("max velocity drift {worst:.2e}"))
}

fn glauber_oracle() -> CheckResult {
    let (a1, a2) = (amp(4.0, 0.0), amp(0.0, 2.0));
    let s = State::glauber(a1, a2);
    let c = glauber_center(a1, a2, 0.0).x_tilde;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let seed = [c[0] + rng.gen_range(-2.0..2.0), c[1] + rng.gen_range(-2.0..2.0)];
        let path = integrate(&s, seed, &IntegrationParams::span(0.0, 2.0 * TAU)).map_err(|e| e.to_string())?;
        for p in &path.samples {
            let e = glauber_analytic(a1, a2, seed, p.t);
            worst = worst.max((p.x[0] - e[0]).hypot(p.x[1] - e[1]));
        }
    }
    ensure(worst < 1e-6, format!("max deviation {worst:.2e} over [0, 4pi]"))
}

fn glauber_congruence() -> CheckResult {
    let (a1, a2) = (amp(4.0, 0.0), amp(0.0, 2.0));
    let s = State::glauber(a1, a2);
    let c = glauber_center(a1, a2, 0.0).x_tilde;
    let sd = FRAC_1_SQRT_2;
    let seeds = [c, [c[0] + sd, c[1] + sd], [c[0] - sd, c[1] - sd]];
    let paths: Vec<_> = seeds
        .iter()
        .map(|&x| integrate(&s, x, &IntegrationParams::default()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let gap = paths.iter().map(|p| (p.samples[0].x[0] - p.last().x[0]).hypot(p.samples[0].x[1] - p.last().x[1])).fold(0.0, f64::max);
    let mut spread: f64 = 0.0;
    for (k, p) in paths.iter().enumerate().skip(1) {
        let d = [seeds[k][0] - seeds[0][0], seeds[k][1] - seeds[0][1]];
        for (a, b) in paths[0].samples.iter().zip(&p.samples) {
            spread = spread.max((b.x[0] - a.x[0] - d[0]).abs()).max((b.x[1] - a.x[1] - d[1]).abs());
        }
    }
    ensure(gap < 1e-6 && spread < 1e-8, format!("return gap {gap:.2e}, offset drift {spread:.2e}"))
}

fn circular_su2() -> CheckResult {
    let mut drift: f64 = 0.0;
    for n in 1..=3usize {
        let s = State::su2(amp(1.0, 0.0), amp(0.0, 1.0), n).expect("valid");
        let nodes = find_nodes(&s, &Region::square(4.0), 0.0).map_err(|e| e.to_string())?.points;
        if nodes.len() != 1 || nodes[0].charge != Some(n as i64) || nodes[0].position[0].hypot(nodes[0].position[1]) > 1e-6 {
            return Err(format!("n = {n}: nodes {:?}", nodes.iter().map(|p| (p.position, p.charge)).collect::<Vec<_>>()));
        }
        for r in [0.5, 1.0, 2.0] {
            let path = integrate(&s, [r, 0.0], &IntegrationParams::default()).map_err(|e| e.to_string())?;
            for p in &path.samples {
                drift = drift.max((p.x[0].hypot(p.x[1]) - r).abs());
            }
        }
    }
    ensure(drift < 1e-8, format!("one node of charge +n; radius drift {drift:.2e}"))
}

fn quantization() -> CheckResult {
    let states = [reference("su2", 3), reference("noon", 3)];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut count): (f64, usize) = (0.0, 0);
    for _ in 0..200 {
        let s = &states[rng.gen_range(0..2)];
        let lp = Loop::new([rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)], rng.gen_range(0.05..3.0));
        if let Ok(c) = circulation(s, &lp, 0.0) {
            worst = worst.max((c - (c / TAU).round() * TAU).abs() / TAU);
            count += 1;
        }
    }
    ensure(worst < 1e-3 && count > 150, format!("{count} loops, max |c/2pi - k| = {worst:.2e}"))
}

fn counts(kind: &'static str, n: usize) -> Result<(usize, usize, i64, f64), String> {
    let r = classify_field(&reference(kind, n), &Region::square(6.0), 0.0).map_err(|e| e.to_string())?;
    Ok((r.node_count(), r.saddle_count(), r.total_charge, r.boundary_circulation / TAU))
}

fn su2_equilibria() -> CheckResult {
    let r = classify_field(&reference("su2", 3), &Region::square(6.0), 0.0).map_err(|e| e.to_string())?;
    let on_axis = r.nodes.iter().all(|p| p.position[1].abs() < 1e-6 && p.charge == Some(1));
    let between = r.saddles.len() == 2 && r.saddles.iter().all(|s| s.position[0].abs() < r.nodes[2].position[0] && s.position[0].abs() > 0.0);
    let circ = r.boundary_circulation / TAU;
    ensure(
        r.node_count() == 3 && on_axis && between && (circ - 3.0).abs() < 1e-3,
        format!("{} nodes, {} saddles, circulation/2pi {circ:.6}", r.node_count(), r.saddle_count()),
    )
}

fn noon_equilibria() -> CheckResult {
    let r = classify_field(&reference("noon", 3), &Region::square(6.0), 0.0).map_err(|e| e.to_string())?;
    let root = 1.5f64.sqrt();
    let placed = r.nodes.iter().all(|p| p.position.iter().all(|&c| c.abs() < 1e-6 || (c.abs() - root).abs() < 1e-6));
    let mut checker = true;
    for a in &r.nodes {
        for b in &r.nodes {
            let d = (a.position[0] - b.position[0]).hypot(a.position[1] - b.position[1]);
            if (d - root).abs() < 1e-6 && a.charge == b.charge {
                checker = false;
            }
        }
    }
    ensure(
        r.node_count() == 9 && r.saddle_count() == 4 && placed && checker,
        format!("{} nodes, {} saddles, total charge {:+}", r.node_count(), r.saddle_count(), r.total_charge),
    )
}

fn scaling() -> CheckResult {
    let mut seen = Vec::new();
    for n in 1..=5 {
        let (a, b, ..) = counts("su2", n)?;
        let (c, d, ..) = counts("noon", n)?;
        if (a, b, c, d) != (n, n - 1, n * n, (n - 1) * (n - 1)) {
            return Err(format!("n = {n}: su2 ({a}, {b}), noon ({c}, {d})"));
        }
        seen.push(format!("{a}/{b},{c}/{d}"));
    }
    Ok(format!("nodes/saddles su2,noon: {}", seen.join(" ")))
}

fn truncation() -> CheckResult {
    let exact = reference("glauber", 0);
    let sum = State::glauber_truncated(amp(4.0, 0.0), amp(0.0, 2.0), 60);
    let mut worst: f64 = 0.0;
    for i in 0..=40 {
        for j in 0..=40 {
            let x = [-4.0 + 0.2 * i as f64, -4.0 + 0.2 * j as f64];
            if x[0].hypot(x[1]) <= 4.0 {
                worst = worst.max((sum.psi(x, 0.0) - exact.psi(x, 0.0)).norm());
            }
        }
    }
    ensure(worst < 1e-4, format!("n_max = 60, max |psi_sum - psi| = {worst:.2e} on |x| <= 4"))
}

fn continuity() -> CheckResult {
    let region = Region::square(6.0);
    let mut parts = Vec::new();
    let mut ok = true;
    for kind in ["su2", "noon"] {
        let s = reference(kind, 3);
        let r: Vec<f64> = [128, 256, 512]
            .iter()
            .map(|&m| continuity_residual(&s, &region, m, m, 0.0))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let (q1, q2) = (r[0] / r[1], r[1] / r[2]);
        ok &= r[2] < 1e-2 && (3.0..5.0).contains(&q1) && (3.0..5.0).contains(&q2);
        parts.push(format!("{kind}: {:.2e} ratios {q1:.2} {q2:.2}", r[2]));
    }
    ensure(ok, parts.join("; "))
}

fn equivariance() -> CheckResult {
    let cases = [(reference("glauber", 0), PI / 2.0, 0.05), (reference("su2", 3), TAU, 0.05), (reference("su2", 3), 0.0, 0.03)];
    let mut parts = Vec::new();
    let mut ok = true;
    for (k, (s, t, tol)) in cases.iter().enumerate() {
        let r = equivariance_check(s, 100_000, *t, 50, k as u64).map_err(|e| e.to_string())?;
        ok &= r.tv_distance < *tol;
        parts.push(format!("{:?} t={t:.3}: {:.4}", s.family(), r.tv_distance));
    }
    ensure(ok, format!("TV {}", parts.join(", ")))
}

pub fn checks() -> Vec<Check> {
    vec![
        Check { name: "gradient vs finite diff", slow: false, run: gradient },
        Check { name: "parity", slow: false, run: parity },
        Check { name: "normalization", slow: false, run: normalization },
        Check { name: "stationarity", slow: false, run: stationarity },
        Check { name: "glauber oracle", slow: false, run: glauber_oracle },
        Check { name: "glauber congruence", slow: false, run: glauber_congruence },
        Check { name: "circular su2", slow: false, run: circular_su2 },
        Check { name: "circulation quantization", slow: false, run: quantization },
        Check { name: "su2 4,2i,3 equilibria", slow: false, run: su2_equilibria },
        Check { name: "noon 4,2i,3 equilibria", slow: false, run: noon_equilibria },
        Check { name: "node/saddle scaling", slow: false, run: scaling },
        Check { name: "truncated glauber sum", slow: false, run: truncation },
        Check { name: "continuity residual", slow: false, run: continuity },
        Check { name: "equivariance N=1e5", slow: true, run: equivariance },
    ]
}

/// Runs every check (or the fast subset), reporting each outcome as it lands.
pub fn run_checks(quick: bool, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    let mut out = Vec::new();
    for c in checks() {
        if quick && c.slow {
            continue;
        }
        let start = Instant::now();
        let result = (c.run)();
        let o = Outcome {
            name: c.name,
            passed: result.is_ok(),
            detail: result.unwrap_or_else(|e| e),
            seconds: start.elapsed().as_secs_f64(),
        };
        report(&o);
        out.push(o);
    }
    out
}
