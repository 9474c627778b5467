//! Trajectories of the guidance equation `dx/dt = grad S` and phase circulation.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::{lit, usize_as, Point, Real};
use crate::region::SearchRegion;
use crate::states::{glauber_center, Amplitude, TwoModeState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Dormand–Prince 5(4) with proportional step control.
    DormandPrince,
    /// Classical RK4 with constant step `max_step`; used for order checks.
    FixedRk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationParams<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Also the spacing of the dense sample output.
    pub max_step: T,
    pub min_step: T,
    pub t0: T,
    pub t1: T,
    /// Relative to the state's peak density.
    pub node_abort_density: T,
    pub method: Method,
    /// Stop once the trajectory leaves this rectangle.
    pub bounds: Option<SearchRegion<T>>,
}

impl<T: Real> Default for IntegrationParams<T> {
    fn default() -> Self {
        IntegrationParams {
            rel_tol: lit(1e-9),
            abs_tol: lit(1e-12),
            max_step: lit(0.01),
            min_step: lit(1e-10),
            t0: T::zero(),
            t1: T::TAU(),
            node_abort_density: lit(1e-12),
            method: Method::DormandPrince,
            bounds: None,
        }
    }
}

impl<T: Real> IntegrationParams<T> {
    pub fn span(t0: T, t1: T) -> Self {
        IntegrationParams { t0, t1, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.rel_tol > T::zero()) || !(self.abs_tol > T::zero()) {
            return bad("tolerances must be positive");
        }
        if !(self.min_step > T::zero()) || !(self.min_step <= self.max_step) {
            return bad("require 0 < min_step <= max_step");
        }
        if !self.t0.is_finite() || !self.t1.is_finite() {
            return bad("time span must be finite");
        }
        if !(self.node_abort_density >= T::zero()) {
            return bad("node_abort_density must be non-negative");
        }
        if let Some(b) = &self.bounds {
            b.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Completed,
    AbortedNearNode,
    StepUnderflow,
    LeftRegion,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimedPoint<T> {
    pub t: T,
    pub x: Point<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory<T> {
    pub seed: Point<T>,
    pub samples: Vec<TimedPoint<T>>,
    pub status: TrajectoryStatus,
    pub stats: StepStats,
}

impl<T: Real> Trajectory<T> {
    pub fn last(&self) -> TimedPoint<T> {
        *self.samples.last().expect("trajectory holds at least the seed")
    }
}

/// Integrates one trajectory with dense output every `max_step`.
pub fn integrate<T: Real>(state: &TwoModeState<T>, seed: Point<T>, params: &IntegrationParams<T>) -> Result<Trajectory<T>> {
    let mut samples = vec![TimedPoint { t: params.t0, x: seed }];
    let (end, status, stats) = drive(state, seed, params, Some(&mut samples))?;
    if samples.last().map(|s| s.t) != Some(end.t) {
        samples.push(end);
    }
    Ok(Trajectory { seed, samples, status, stats })
}

/// Integrates without recording intermediate samples.
pub fn integrate_endpoint<T: Real>(
    state: &TwoModeState<T>,
    seed: Point<T>,
    params: &IntegrationParams<T>,
) -> Result<(TimedPoint<T>, TrajectoryStatus)> {
    let (end, status, _) = drive(state, seed, params, None)?;
    Ok((end, status))
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Continuous extension coefficients (order 4).
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

struct Field<'a, T> {
    state: &'a TwoModeState<T>,
    floor: T,
    evaluations: usize,
}

impl<T: Real> Field<'_, T> {
    fn velocity(&mut self, t: T, x: Point<T>) -> Option<Point<T>> {
        self.evaluations += 1;
        let w = self.state.eval(x, t);
        if w.density < self.floor || w.density == T::zero() || !x[0].is_finite() || !x[1].is_finite() {
            return None;
        }
        Some([w.current[0] / w.density, w.current[1] / w.density])
    }
}

#[inline]
fn axpy<T: Real>(x: Point<T>, h: T, ks: &[Point<T>], coef: &[f64]) -> Point<T> {
    let mut out = x;
    for (k, &c) in ks.iter().zip(coef) {
        if c != 0.0 {
            let c = lit::<T>(c) * h;
            out[0] += c * k[0];
            out[1] += c * k[1];
        }
    }
    out
}

struct Output<'a, T> {
    sink: Option<&'a mut Vec<TimedPoint<T>>>,
    t0: T,
    spacing: T,
    dir: T,
    next: usize,
}

impl<T: Real> Output<'_, T> {
    /// Emits grid samples in `(ta, tb]` using the supplied interpolant.
    fn emit(&mut self, tb: T, mut at: impl FnMut(T) -> Point<T>) {
        let Some(sink) = self.sink.as_deref_mut() else { return };
        loop {
            let tau = self.t0 + self.dir * self.spacing * usize_as::<T>(self.next);
            if (tau - tb) * self.dir > T::zero() {
                break;
            }
            sink.push(TimedPoint { t: tau, x: at(tau) });
            self.next += 1;
        }
    }
}

fn drive<T: Real>(
    state: &TwoModeState<T>,
    seed: Point<T>,
    params: &IntegrationParams<T>,
    sink: Option<&mut Vec<TimedPoint<T>>>,
) -> Result<(TimedPoint<T>, TrajectoryStatus, StepStats)> {
    params.validate()?;
    let floor = params.node_abort_density * state.peak_density();
    let mut field = Field { state, floor, evaluations: 0 };
    let to_f64 = |v: T| v.to_f64().unwrap_or(f64::NAN);
    let Some(k_start) = field.velocity(params.t0, seed) else {
        return Err(Error::SeedAtNode { x1: to_f64(seed[0]), x2: to_f64(seed[1]) });
    };
    let mut stats = StepStats::default();
    let start = TimedPoint { t: params.t0, x: seed };
    if params.t1 == params.t0 {
        stats.evaluations = field.evaluations;
        return Ok((start, TrajectoryStatus::Completed, stats));
    }
    let dir = (params.t1 - params.t0).signum();
    let mut out = Output { sink, t0: params.t0, spacing: params.max_step, dir, next: 1 };
    let (end, status) = match params.method {
        Method::DormandPrince => dopri(&mut field, start, k_start, params, dir, &mut out, &mut stats),
        Method::FixedRk4 => rk4(&mut field, start, k_start, params, dir, &mut out, &mut stats),
    };
    stats.evaluations = field.evaluations;
    Ok((end, status, stats))
}

fn dopri<T: Real>(
    field: &mut Field<'_, T>,
    start: TimedPoint<T>,
    k_start: Point<T>,
    params: &IntegrationParams<T>,
    dir: T,
    out: &mut Output<'_, T>,
    stats: &mut StepStats,
) -> (TimedPoint<T>, TrajectoryStatus) {
    let (mut t, mut x) = (start.t, start.x);
    let mut k1 = k_start;
    let mut h = params.max_step.min((params.t1 - params.t0).abs());
    let mut node_failure = false;
    let safety = lit::<T>(0.9);
    let expo = lit::<T>(-0.2);
    let (fac_min, fac_max) = (lit::<T>(0.2), lit::<T>(5.0));

    while (params.t1 - t) * dir > T::zero() {
        let remaining = (params.t1 - t).abs();
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        if h < params.min_step && !last {
            let status = if node_failure { TrajectoryStatus::AbortedNearNode } else { TrajectoryStatus::StepUnderflow };
            return (TimedPoint { t, x }, status);
        }
        let hs = h * dir;
        let mut ks = [k1; 7];
        let mut failed = false;
        for s in 1..7 {
            let xs = axpy(x, hs, &ks[..s], &A[s][..s]);
            match field.velocity(t + lit::<T>(C[s]) * hs, xs) {
                Some(k) => ks[s] = k,
                None => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            node_failure = true;
            stats.rejected += 1;
            h *= lit(0.25);
            continue;
        }
        // the 7th stage is evaluated at the fifth-order solution (FSAL)
        let x_new = axpy(x, hs, &ks[..6], &A[6][..6]);
        let err_vec = axpy([T::zero(); 2], hs, &ks, &E);
        let mut err = T::zero();
        for l in 0..2 {
            let sc = params.abs_tol + params.rel_tol * x[l].abs().max(x_new[l].abs());
            err += (err_vec[l] / sc).powi(2);
        }
        err = (err * lit(0.5)).sqrt();

        if err <= T::one() {
            stats.accepted += 1;
            node_failure = false;
            let t_new = if last { params.t1 } else { t + hs };
            let ydiff = [x_new[0] - x[0], x_new[1] - x[1]];
            let bspl = [hs * k1[0] - ydiff[0], hs * k1[1] - ydiff[1]];
            let r4 = [ydiff[0] - hs * ks[6][0] - bspl[0], ydiff[1] - hs * ks[6][1] - bspl[1]];
            let r5 = axpy([T::zero(); 2], hs, &ks, &D);
            let (ta, xa) = (t, x);
            out.emit(t_new, |tau| {
                let th = (tau - ta) / hs;
                let th1 = T::one() - th;
                let mut p = [T::zero(); 2];
                for l in 0..2 {
                    p[l] = xa[l] + th * (ydiff[l] + th1 * (bspl[l] + th * (r4[l] + th1 * r5[l])));
                }
                p
            });
            t = t_new;
            x = x_new;
            k1 = ks[6];
            let fac = if err == T::zero() { fac_max } else { (safety * err.powf(expo)).max(fac_min).min(fac_max) };
            h = (h * fac).min(params.max_step);
            if let Some(b) = &params.bounds {
                if !b.contains(x) {
                    return (TimedPoint { t, x }, TrajectoryStatus::LeftRegion);
                }
            }
        } else {
            stats.rejected += 1;
            h *= (safety * err.powf(expo)).max(fac_min);
        }
    }
    (TimedPoint { t, x }, TrajectoryStatus::Completed)
}

fn rk4<T: Real>(
    field: &mut Field<'_, T>,
    start: TimedPoint<T>,
    k_start: Point<T>,
    params: &IntegrationParams<T>,
    dir: T,
    out: &mut Output<'_, T>,
    stats: &mut StepStats,
) -> (TimedPoint<T>, TrajectoryStatus) {
    let (mut t, mut x) = (start.t, start.x);
    let mut k1 = k_start;
    let half = lit::<T>(0.5);
    let sixth = lit::<T>(1.0 / 6.0);
    let two = lit::<T>(2.0);
    while (params.t1 - t) * dir > T::zero() {
        let remaining = (params.t1 - t).abs();
        let last = params.max_step >= remaining;
        let hs = if last { remaining } else { params.max_step } * dir;
        let step = (|| {
            let k2 = field.velocity(t + half * hs, [x[0] + half * hs * k1[0], x[1] + half * hs * k1[1]])?;
            let k3 = field.velocity(t + half * hs, [x[0] + half * hs * k2[0], x[1] + half * hs * k2[1]])?;
            let k4 = field.velocity(t + hs, [x[0] + hs * k3[0], x[1] + hs * k3[1]])?;
            Some([0, 1].map(|l| x[l] + sixth * hs * (k1[l] + two * k2[l] + two * k3[l] + k4[l])))
        })();
        let Some(x_new) = step else {
            return (TimedPoint { t, x }, TrajectoryStatus::AbortedNearNode);
        };
        let t_new = if last { params.t1 } else { t + hs };
        let Some(k_new) = field.velocity(t_new, x_new) else {
            return (TimedPoint { t, x }, TrajectoryStatus::AbortedNearNode);
        };
        stats.accepted += 1;
        // cubic Hermite interpolant for the dense output grid
        let (ta, xa, ka) = (t, x, k1);
        out.emit(t_new, |tau| {
            let s = (tau - ta) / hs;
            let h00 = (T::one() + two * s) * (T::one() - s) * (T::one() - s);
            let h10 = s * (T::one() - s) * (T::one() - s);
            let h01 = s * s * (lit::<T>(3.0) - two * s);
            let h11 = s * s * (s - T::one());
            [0, 1].map(|l| h00 * xa[l] + h10 * hs * ka[l] + h01 * x_new[l] + h11 * hs * k_new[l])
        });
        t = t_new;
        x = x_new;
        k1 = k_new;
        if let Some(b) = &params.bounds {
            if !b.contains(x) {
                return (TimedPoint { t, x }, TrajectoryStatus::LeftRegion);
            }
        }
    }
    (TimedPoint { t, x }, TrajectoryStatus::Completed)
}

/// Closed-form Glauber trajectory,
/// `x_l(t) = x_l(0) + sqrt2 |alpha_l| (cos(t - delta_l) - cos(delta_l))`.
pub fn glauber_analytic<T: Real>(alpha1: Amplitude<T>, alpha2: Amplitude<T>, seed: Point<T>, t: T) -> Point<T> {
    let shift = |a: Amplitude<T>| {
        let (r, delta) = (a.norm(), a.arg());
        T::SQRT_2() * r * ((t - delta).cos() - delta.cos())
    };
    [seed[0] + shift(alpha1), seed[1] + shift(alpha2)]
}

/// `x(t) - x(0) = x_tilde(t) - x_tilde(0)`, the center-displacement form of the
/// closed-form Glauber trajectory.
pub fn glauber_displacement<T: Real>(alpha1: Amplitude<T>, alpha2: Amplitude<T>, t: T) -> Point<T> {
    let a = glauber_center(alpha1, alpha2, T::zero()).x_tilde;
    let b = glauber_center(alpha1, alpha2, t).x_tilde;
    [b[0] - a[0], b[1] - a[1]]
}

/// Circular closed loop sampled as a polyline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Loop<T> {
    pub center: Point<T>,
    pub radius: T,
    pub samples: usize,
}

pub const MIN_LOOP_SAMPLES: usize = 64;
pub const MAX_LOOP_VERTICES: usize = 1 << 20;

impl<T: Real> Loop<T> {
    pub fn new(center: Point<T>, radius: T) -> Self {
        Loop { center, radius, samples: 256 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > T::zero()) || !self.radius.is_finite() {
            return Err(Error::InvalidParameter(format!("loop radius {} must be positive", self.radius)));
        }
        if self.samples < MIN_LOOP_SAMPLES {
            return Err(Error::InvalidParameter(format!("loop needs at least {MIN_LOOP_SAMPLES} samples")));
        }
        Ok(())
    }

    pub fn point(&self, theta: T) -> Point<T> {
        [self.center[0] + self.radius * theta.cos(), self.center[1] + self.radius * theta.sin()]
    }

    /// Closed polyline: first vertex repeated at the end.
    pub fn polyline(&self) -> Vec<Point<T>> {
        (0..=self.samples).map(|j| self.point(self.angle(j))).collect()
    }

    fn angle(&self, j: usize) -> T {
        if j == self.samples {
            T::TAU()
        } else {
            T::TAU() * usize_as::<T>(j) / usize_as::<T>(self.samples)
        }
    }
}

/// Sum of principal-branch phase increments of `psi` around `lp`, i.e.
/// `2 pi` times the enclosed topological charge. Edges are bisected until
/// every increment is below `pi/2` in magnitude.
pub fn circulation<T: Real>(state: &TwoModeState<T>, lp: &Loop<T>, t: T) -> Result<T> {
    lp.validate()?;
    let guard = state.node_guard();
    let sample = |theta: T| -> Result<Amplitude<T>> {
        let p = lp.point(theta);
        let psi = state.psi(p, t);
        if psi.norm_sqr() < guard || psi.norm_sqr() == T::zero() {
            return Err(Error::NodeOnLoop { x1: p[0].to_f64().unwrap_or(f64::NAN), x2: p[1].to_f64().unwrap_or(f64::NAN) });
        }
        Ok(psi)
    };
    let limit = lit::<T>(std::f64::consts::FRAC_PI_2);
    let mut vertices = lp.samples;
    let mut total = T::zero();
    let mut prev = (T::zero(), sample(T::zero())?);
    let first = prev.1;
    for j in 1..=lp.samples {
        let theta = lp.angle(j);
        let psi = if j == lp.samples { first } else { sample(theta)? };
        // explicit stack of pending sub-edges, processed left to right
        let mut stack = vec![(prev, (theta, psi))];
        while let Some((a, b)) = stack.pop() {
            let inc = increment(a.1, b.1);
            if inc.abs() < limit {
                total += inc;
                continue;
            }
            vertices += 1;
            if vertices > MAX_LOOP_VERTICES {
                return Err(Error::RefinementLimit(MAX_LOOP_VERTICES));
            }
            let mid_theta = (a.0 + b.0) * lit(0.5);
            let mid = (mid_theta, sample(mid_theta)?);
            stack.push((mid, b));
            stack.push((a, mid));
        }
        prev = (theta, psi);
    }
    Ok(total)
}

#[inline]
fn increment<T: Real>(from: Complex<T>, to: Complex<T>) -> T {
    (to * from.conj()).arg()
}

/// `circulation / 2 pi` rounded to the nearest integer.
pub fn winding_number<T: Real>(state: &TwoModeState<T>, lp: &Loop<T>, t: T) -> Result<i64> {
    let c = circulation(state, lp, t)?;
    Ok((c / T::TAU()).round().to_i64().unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{PI, SQRT_2, TAU};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn zero_span_returns_seed() {
        let s = TwoModeState::su2(c(1.0, 0.0), c(0.0, 1.0), 2).unwrap();
        let p = IntegrationParams::span(0.5, 0.5);
        let tr = integrate(&s, [1.0, 0.3], &p).unwrap();
        assert_eq!(tr.samples, vec![TimedPoint { t: 0.5, x: [1.0, 0.3] }]);
        assert_eq!(tr.status, TrajectoryStatus::Completed);
    }

    #[test]
    fn seed_on_node_rejected() {
        let s = TwoModeState::su2(c(1.0, 0.0), c(0.0, 1.0), 2).unwrap();
        let err = integrate(&s, [0.0, 0.0], &IntegrationParams::default()).unwrap_err();
        assert!(matches!(err, Error::SeedAtNode { .. }));
    }

    #[test]
    fn invalid_params_rejected() {
        let s = TwoModeState::glauber(c(1.0, 0.0), c(0.0, 0.0));
        let mut p = IntegrationParams::default();
        p.min_step = 1.0;
        assert!(integrate(&s, [1.0, 0.0], &p).is_err());
        let mut p = IntegrationParams::default();
        p.rel_tol = 0.0;
        assert!(integrate(&s, [1.0, 0.0], &p).is_err());
    }

    #[test]
    fn samples_monotone_and_capped() {
        let s = TwoModeState::su2(c(1.0, 0.0), c(0.0, 1.0), 2).unwrap();
        let p = IntegrationParams::span(0.0, 1.0);
        let tr = integrate(&s, [1.0, 0.0], &p).unwrap();
        assert_eq!(tr.samples[0], TimedPoint { t: 0.0, x: [1.0, 0.0] });
        for w in tr.samples.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(w[1].t - w[0].t <= 0.01 + 1e-12);
        }
        assert_eq!(tr.last().t, 1.0);

        let back = integrate(&s, [1.0, 0.0], &IntegrationParams::span(0.0, -1.0)).unwrap();
        for w in back.samples.windows(2) {
            assert!(w[1].t < w[0].t);
        }
    }

    #[test]
    fn circular_case_keeps_radius() {
        // v = 2 (-x2, x1) / |x|^2: angular speed 2 at unit radius
        let s = TwoModeState::su2(c(1.0, 0.0), c(0.0, 1.0), 2).unwrap();
        let tr = integrate(&s, [1.0, 0.0], &IntegrationParams::default()).unwrap();
        for p in &tr.samples {
            assert!((p.x[0].hypot(p.x[1]) - 1.0).abs() < 1e-8);
            let expected = [(2.0 * p.t).cos(), (2.0 * p.t).sin()];
            assert!((p.x[0] - expected[0]).abs() < 1e-7 && (p.x[1] - expected[1]).abs() < 1e-7);
        }
    }

    #[test]
    fn glauber_closed_form_examples() {
        let (a1, a2) = (c(4.0, 0.0), c(0.0, 2.0));
        let p = glauber_analytic(a1, a2, [4.0 * SQRT_2, 0.0], PI / 2.0);
        assert!(p[0].abs() < 1e-12);
        assert_relative_eq!(p[1], 2.0 * SQRT_2, max_relative = 1e-14);
        assert_eq!(glauber_analytic(c(0.3, -1.0), c(2.0, 0.5), [0.1, 0.2], 0.0), [0.1, 0.2]);
        let p = glauber_analytic(a1, a2, [0.0, 0.0], PI);
        assert_relative_eq!(p[0], -8.0 * SQRT_2, max_relative = 1e-14);
        assert!(p[1].abs() < 1e-12);
        let d = glauber_displacement(a1, a2, PI);
        assert_relative_eq!(d[0], -8.0 * SQRT_2, max_relative = 1e-14);
    }

    #[test]
    fn glauber_trajectory_closes() {
        let s = TwoModeState::glauber(c(4.0, 0.0), c(0.0, 2.0));
        let seed = [4.0 * SQRT_2, 0.0];
        let tr = integrate(&s, seed, &IntegrationParams::default()).unwrap();
        let end = tr.last();
        assert_eq!(end.t, TAU);
        assert!((end.x[0] - seed[0]).abs() < 1e-6 && (end.x[1] - seed[1]).abs() < 1e-6);
    }

    #[test]
    fn rk4_order() {
        let (a1, a2) = (c(4.0, 0.0), c(0.0, 2.0));
        let s = TwoModeState::glauber(a1, a2);
        let seed = [5.0, 0.5];
        let err = |h: f64| {
            let p = IntegrationParams { max_step: h, min_step: 1e-6, method: Method::FixedRk4, ..IntegrationParams::span(0.0, TAU) };
            let end = integrate(&s, seed, &p).unwrap().last();
            let exact = glauber_analytic(a1, a2, seed, end.t);
            (end.x[0] - exact[0]).hypot(end.x[1] - exact[1])
        };
        let ratio = err(0.2) / err(0.1);
        assert!(ratio > 8.0 && ratio < 32.0, "ratio {ratio}");
    }

    #[test]
    fn circulation_counts_charge() {
        let s = TwoModeState::su2(c(1.0, 0.0), c(0.0, 1.0), 3).unwrap();
        let circ = circulation(&s, &Loop::new([0.0, 0.0], 1.0), 0.0).unwrap();
        assert!((circ - 3.0 * TAU).abs() < 1e-9);
        let circ = circulation(&s, &Loop::new([2.0, 2.0], 0.5), 0.0).unwrap();
        assert!(circ.abs() < 1e-9);
    }

    #[test]
    fn circulation_refuses_node_on_loop() {
        let s = TwoModeState::noon(c(4.0, 0.0), c(0.0, 2.0), 3).unwrap();
        // the loop passes through the node at the origin
        let err = circulation(&s, &Loop::new([1.0, 0.0], 1.0), 0.0).unwrap_err();
        assert!(matches!(err, Error::NodeOnLoop { .. }));
        let bad = Loop { center: [0.0, 0.0], radius: 1.0, samples: 10 };
        assert!(circulation(&s, &bad, 0.0).is_err());
    }

    #[test]
    fn coarse_loop_is_refined() {
        // charge 5 around a loop with 64 vertices: raw increments of 5*2pi/64
        // are fine, but a far-off-center loop sees sharp phase swings
        let s = TwoModeState::su2(c(1.0, 0.0), c(0.0, 1.0), 5).unwrap();
        let lp = Loop { center: [0.3, 0.0], radius: 0.4, samples: 64 };
        let circ = circulation(&s, &lp, 0.0).unwrap();
        assert!((circ - 5.0 * TAU).abs() < 1e-9);
    }
}
