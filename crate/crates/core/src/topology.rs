//! Equilibrium points of the Bohmian flow.
//!
//! Two kinds of points carry zero current `j = Im(conj(psi) grad psi)`:
//! nodes of `psi` (vortices, where the phase is undefined and carries an
//! integer charge) and stationary points of the phase away from nodes. Every
//! stationary point met so far is hyperbolic; a phase maximum or minimum
//! would be a source or sink of trajectories and is reported as an error by
//! [`classify_field`].

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{circulation, integrate, IntegrationParams, Loop, Trajectory};
use crate::error::{Error, Result};
use crate::real::{dist, lit, norm2, usize_as, Point, Real};
use crate::region::SearchRegion;
use crate::states::{StateKind, TwoModeState};

/// Node candidates must have `|psi|^2` below this fraction of the scan peak.
pub const NODE_SCAN_FRACTION: f64 = 1e-2;
/// Absolute `|psi|^2` a refined node must reach.
pub const NODE_DENSITY_TOL: f64 = 1e-20;
/// Absolute `|j|` a refined stationary point must reach.
pub const CURRENT_TOL: f64 = 1e-12;
/// Stationary-point scan ignores cells below this fraction of the scan peak.
pub const SADDLE_SCAN_FRACTION: f64 = 1e-10;
pub const MERGE_DISTANCE: f64 = 1e-6;
pub const NODE_EXCLUSION: f64 = 1e-4;
pub const MAX_NEWTON_ITERATIONS: usize = 50;
pub const JACOBIAN_STEP: f64 = 1e-6;
pub const CHARGE_RADIUS_CAP: f64 = 0.25;
pub const SEPARATRIX_OFFSET: f64 = 1e-4;
/// Radius of the small loop used to estimate a node's multiplicity.
const MULTIPLICITY_RADIUS: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Node,
    Saddle,
    /// Stationary point with same-sign Jacobian eigenvalues.
    Extremum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumPoint<T> {
    pub position: Point<T>,
    pub kind: EquilibriumKind,
    /// Topological charge; nodes only.
    pub charge: Option<i64>,
    /// `|psi|^2` at `position`.
    pub density_residual: T,
    /// `|j|` at `position`.
    pub speed_residual: T,
    /// Eigenvalues of the velocity Jacobian (stationary points only), ascending.
    pub jacobian_eigenvalues: Option<[T; 2]>,
    /// Unit eigenvectors matching `jacobian_eigenvalues`.
    pub eigenvectors: Option<[Point<T>; 2]>,
    /// `|J12 - J21|` of the finite-difference Jacobian.
    pub jacobian_asymmetry: Option<T>,
    /// Node whose first-order Jacobian is rank deficient (multiple zero).
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSearch<T> {
    pub points: Vec<EquilibriumPoint<T>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldReport<T> {
    pub nodes: Vec<EquilibriumPoint<T>>,
    pub saddles: Vec<EquilibriumPoint<T>>,
    pub total_charge: i64,
    /// Circle inscribed in the region (radius 0.9 of the half-width).
    pub boundary_loop: Option<Loop<T>>,
    pub boundary_circulation: T,
    pub warnings: Vec<String>,
}

impl<T: Real> FieldReport<T> {
    fn empty() -> Self {
        FieldReport {
            nodes: Vec::new(),
            saddles: Vec::new(),
            total_charge: 0,
            boundary_loop: None,
            boundary_circulation: T::zero(),
            warnings: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn saddle_count(&self) -> usize {
        self.saddles.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchKind {
    /// Leaves the saddle forward in time.
    Unstable,
    /// Reaches the saddle forward in time; traced backward.
    Stable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparatrixBranch<T> {
    pub kind: BranchKind,
    pub direction: Point<T>,
    pub trajectory: Trajectory<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Separatrix<T> {
    pub saddle: EquilibriumPoint<T>,
    pub branches: Vec<SeparatrixBranch<T>>,
}

struct Scan<T> {
    n: usize,
    centers: Vec<Point<T>>,
    values: Vec<T>,
    valid: Vec<bool>,
}

impl<T: Real> Scan<T> {
    fn run(region: &SearchRegion<T>, f: impl Fn(Point<T>) -> Option<T> + Sync) -> Self {
        let n = region.scan_resolution;
        let rows: Vec<Vec<(Point<T>, Option<T>)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let p = region.cell_center(n, n, i, j);
                        (p, f(p))
                    })
                    .collect()
            })
            .collect();
        let flat: Vec<_> = rows.into_iter().flatten().collect();
        Scan {
            n,
            centers: flat.iter().map(|(p, _)| *p).collect(),
            values: flat.iter().map(|(_, v)| v.unwrap_or(T::zero())).collect(),
            valid: flat.iter().map(|(_, v)| v.is_some()).collect(),
        }
    }

    /// Interior cells whose value is `<=` every neighbour and `<` at least one.
    /// Exact ties keep only the first cell of the plateau.
    fn local_minima(&self, accept: impl Fn(T) -> bool) -> Vec<Point<T>> {
        let n = self.n;
        let mut out = Vec::new();
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let idx = i * n + j;
                if !self.valid[idx] || !accept(self.values[idx]) {
                    continue;
                }
                let v = self.values[idx];
                let mut all_valid = true;
                let mut below_all = true;
                let mut strictly_below_one = false;
                for di in [-1i64, 0, 1] {
                    for dj in [-1i64, 0, 1] {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let k = ((i as i64 + di) as usize) * n + (j as i64 + dj) as usize;
                        all_valid &= self.valid[k];
                        // ties are won by the cell that comes first in raster order
                        below_all &= if k < idx { v < self.values[k] } else { v <= self.values[k] };
                        strictly_below_one |= v < self.values[k];
                    }
                }
                if all_valid && below_all && strictly_below_one {
                    out.push(self.centers[idx]);
                }
            }
        }
        out
    }
}

fn require_number_basis<T: Real>(state: &TwoModeState<T>) -> Result<()> {
    match state.kind() {
        StateKind::Glauber => Err(Error::GlauberHasNoNodes),
        StateKind::NumberBasis => Ok(()),
    }
}

fn solve2<T: Real>(j: [[T; 2]; 2], rhs: Point<T>) -> Option<Point<T>> {
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det == T::zero() || !det.is_finite() {
        return None;
    }
    Some([(j[1][1] * rhs[0] - j[0][1] * rhs[1]) / det, (j[0][0] * rhs[1] - j[1][0] * rhs[0]) / det])
}

/// Damped Newton iteration `x <- x - lambda * factor * J^{-1} F` that halves
/// `lambda` until the residual norm drops.
fn damped_newton<T: Real>(
    start: Point<T>,
    factor: T,
    iterations: usize,
    residual: impl Fn(Point<T>) -> Option<(Point<T>, [[T; 2]; 2])>,
) -> Option<Point<T>> {
    let mut x = start;
    let (mut f, mut jac) = residual(x)?;
    for _ in 0..iterations {
        let fnorm = norm2(f);
        if fnorm == T::zero() {
            break;
        }
        let dx = solve2(jac, f)?;
        let mut lambda = factor;
        let mut moved = false;
        for _ in 0..30 {
            let trial = [x[0] - lambda * dx[0], x[1] - lambda * dx[1]];
            if let Some((ft, jt)) = residual(trial) {
                if norm2(ft) < fnorm {
                    x = trial;
                    f = ft;
                    jac = jt;
                    moved = true;
                    break;
                }
            }
            lambda *= lit(0.5);
        }
        if !moved {
            break;
        }
        let step = lambda * norm2(dx);
        if step <= lit::<T>(1e-15) * (T::one() + norm2(x)) {
            break;
        }
    }
    Some(x)
}

fn node_residual<T: Real>(state: &TwoModeState<T>, t: T) -> impl Fn(Point<T>) -> Option<(Point<T>, [[T; 2]; 2])> + '_ {
    move |x| {
        let w = state.eval(x, t);
        let jac = [[w.grad[0].re, w.grad[1].re], [w.grad[0].im, w.grad[1].im]];
        Some(([w.psi.re, w.psi.im], jac))
    }
}

/// Phase winding around a small circle, computed from `psi` alone (no guard).
fn local_winding<T: Real>(state: &TwoModeState<T>, center: Point<T>, radius: T, t: T) -> Option<i64> {
    let n = 64usize;
    let at = |theta: T| state.psi([center[0] + radius * theta.cos(), center[1] + radius * theta.sin()], t);
    let limit = lit::<T>(std::f64::consts::FRAC_PI_2);
    let mut total = T::zero();
    for j in 0..n {
        let (a, b) = (T::TAU() * usize_as::<T>(j) / usize_as::<T>(n), T::TAU() * usize_as::<T>(j + 1) / usize_as::<T>(n));
        let mut stack = vec![((a, at(a)), (b, at(b)))];
        let mut budget = 1usize << 14;
        while let Some((pa, pb)) = stack.pop() {
            if pa.1.norm_sqr() == T::zero() || pb.1.norm_sqr() == T::zero() {
                return None;
            }
            let inc = (pb.1 * pa.1.conj()).arg();
            if inc.abs() < limit {
                total += inc;
                continue;
            }
            budget = budget.checked_sub(1)?;
            let m = (pa.0 + pb.0) * lit(0.5);
            let pm = (m, at(m));
            stack.push((pm, pb));
            stack.push((pa, pm));
        }
    }
    (total / T::TAU()).round().to_i64()
}

fn merge<T: Real>(points: Vec<(Point<T>, bool)>, tol: T) -> Vec<(Point<T>, bool)> {
    let mut kept: Vec<(Point<T>, bool)> = Vec::new();
    for p in points {
        if !kept.iter().any(|q| dist(p.0, q.0) < tol) {
            kept.push(p);
        }
    }
    kept
}

fn sort_by_position<T: Real>(points: &mut [EquilibriumPoint<T>]) {
    points.sort_by(|a, b| {
        a.position[0]
            .partial_cmp(&b.position[0])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.position[1].partial_cmp(&b.position[1]).unwrap_or(std::cmp::Ordering::Equal))
    });
}

fn fmt_point<T: Real>(p: Point<T>) -> String {
    format!("({:.6}, {:.6})", p[0], p[1])
}

/// Locates nodes of `psi` inside `region` and computes their charges.
pub fn find_nodes<T: Real>(state: &TwoModeState<T>, region: &SearchRegion<T>, t: T) -> Result<EquilibriumSearch<T>> {
    require_number_basis(state)?;
    region.validate()?;
    let scan = Scan::run(region, |p| Some(state.density(p, t)));
    let peak = scan.values.iter().copied().fold(T::zero(), T::max);
    let threshold = lit::<T>(NODE_SCAN_FRACTION) * peak;
    let candidates = scan.local_minima(|v| v < threshold);

    let tol = lit::<T>(NODE_DENSITY_TOL);
    let refined: Vec<std::result::Result<(Point<T>, bool), String>> = candidates
        .par_iter()
        .map(|&x0| {
            let Some(x) = damped_newton(x0, T::one(), MAX_NEWTON_ITERATIONS, node_residual(state, t)) else {
                return Err(format!("node candidate at {}: singular Newton system", fmt_point(x0)));
            };
            let mut x = x;
            let mut degenerate = false;
            if let Some(m) = local_winding(state, x, lit(MULTIPLICITY_RADIUS), t) {
                if m.abs() >= 2 {
                    degenerate = true;
                    let factor = usize_as::<T>(m.unsigned_abs() as usize);
                    if let Some(y) = damped_newton(x, factor, 30, node_residual(state, t)) {
                        x = y;
                    }
                }
            }
            let d = state.density(x, t);
            if d < tol && region.contains(x) {
                Ok((x, degenerate))
            } else if !region.contains(x) {
                Err(format!("node candidate at {} converged outside the region", fmt_point(x0)))
            } else {
                Err(format!("node candidate at {} did not converge (|psi|^2 = {:e})", fmt_point(x0), d))
            }
        })
        .collect();

    let mut warnings = Vec::new();
    let mut found = Vec::new();
    for r in refined {
        match r {
            Ok(p) => found.push(p),
            Err(w) => warnings.push(w),
        }
    }
    let found = merge(found, lit(MERGE_DISTANCE));

    let mut points = Vec::with_capacity(found.len());
    for (i, &(x, degenerate)) in found.iter().enumerate() {
        let nearest = found
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i)
            .map(|(_, q)| dist(x, q.0))
            .fold(T::infinity(), T::min);
        let mut radius = lit::<T>(CHARGE_RADIUS_CAP).min(nearest * lit(0.5));
        let mut charge = None;
        for _ in 0..4 {
            match circulation(state, &Loop::new(x, radius), t) {
                Ok(c) => {
                    charge = (c / T::TAU()).round().to_i64();
                    break;
                }
                Err(_) => radius *= lit(0.5),
            }
        }
        match charge {
            None => warnings.push(format!("charge of node at {} could not be measured", fmt_point(x))),
            Some(0) => warnings.push(format!("node at {} has zero winding", fmt_point(x))),
            _ => {}
        }
        let w = state.eval(x, t);
        points.push(EquilibriumPoint {
            position: x,
            kind: EquilibriumKind::Node,
            charge,
            density_residual: w.density,
            speed_residual: norm2(w.current),
            jacobian_eigenvalues: None,
            eigenvectors: None,
            jacobian_asymmetry: None,
            degenerate,
        });
    }
    sort_by_position(&mut points);
    Ok(EquilibriumSearch { points, warnings })
}

/// Finite-difference Jacobian `J[a][b] = d v_a / d x_b`.
fn velocity_jacobian<T: Real>(state: &TwoModeState<T>, x: Point<T>, t: T) -> Option<[[T; 2]; 2]> {
    let h = lit::<T>(JACOBIAN_STEP);
    let two_h = h * lit(2.0);
    let v = |p: Point<T>| state.eval(p, t).velocity;
    let dx1 = (v([x[0] + h, x[1]])?, v([x[0] - h, x[1]])?);
    let dx2 = (v([x[0], x[1] + h])?, v([x[0], x[1] - h])?);
    Some([
        [(dx1.0[0] - dx1.1[0]) / two_h, (dx2.0[0] - dx2.1[0]) / two_h],
        [(dx1.0[1] - dx1.1[1]) / two_h, (dx2.0[1] - dx2.1[1]) / two_h],
    ])
}

/// Eigen-decomposition of a symmetric 2x2 matrix, eigenvalues ascending.
fn symmetric_eigen<T: Real>(m: [[T; 2]; 2]) -> ([T; 2], [Point<T>; 2]) {
    let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
    let half = lit::<T>(0.5);
    let mean = (a + c) * half;
    let rad = ((a - c) * half).hypot(b);
    let vals = [mean - rad, mean + rad];
    let vec_for = |lambda: T| {
        let u = [b, lambda - a];
        let w = [lambda - c, b];
        let pick = if norm2(u) >= norm2(w) { u } else { w };
        let n = norm2(pick);
        if n == T::zero() {
            if lambda == vals[0] && a <= c {
                [T::one(), T::zero()]
            } else if lambda == vals[0] {
                [T::zero(), T::one()]
            } else if a <= c {
                [T::zero(), T::one()]
            } else {
                [T::one(), T::zero()]
            }
        } else {
            [pick[0] / n, pick[1] / n]
        }
    };
    (vals, [vec_for(vals[0]), vec_for(vals[1])])
}

/// Locates zeros of the phase gradient away from nodes.
pub fn find_stationary_points<T: Real>(state: &TwoModeState<T>, region: &SearchRegion<T>, t: T) -> Result<EquilibriumSearch<T>> {
    let nodes = find_nodes(state, region, t)?;
    let mut search = stationary_points_near(state, region, t, &nodes.points)?;
    search.warnings.splice(0..0, nodes.warnings);
    Ok(search)
}

fn stationary_points_near<T: Real>(
    state: &TwoModeState<T>,
    region: &SearchRegion<T>,
    t: T,
    nodes: &[EquilibriumPoint<T>],
) -> Result<EquilibriumSearch<T>> {
    require_number_basis(state)?;
    region.validate()?;
    let guard = state.node_guard();
    let scan_peak = state.peak_density();
    let floor = lit::<T>(SADDLE_SCAN_FRACTION) * scan_peak;
    let scan = Scan::run(region, |p| {
        let w = state.eval(p, t);
        match w.velocity {
            Some(v) if w.density > floor => Some(v[0] * v[0] + v[1] * v[1]),
            _ => None,
        }
    });
    let candidates = scan.local_minima(|_| true);

    let residual = |x: Point<T>| {
        let v = state.eval(x, t).velocity?;
        Some((v, velocity_jacobian(state, x, t)?))
    };
    let refined: Vec<std::result::Result<Point<T>, String>> = candidates
        .par_iter()
        .map(|&x0| {
            let x = damped_newton(x0, T::one(), MAX_NEWTON_ITERATIONS, residual)
                .ok_or_else(|| format!("stationary candidate at {}: Newton failed", fmt_point(x0)))?;
            let w = state.eval(x, t);
            let v = w.velocity.ok_or_else(|| format!("stationary candidate at {} fell into the node guard", fmt_point(x0)))?;
            if !region.contains(x) {
                return Err(format!("stationary candidate at {} converged outside the region", fmt_point(x0)));
            }
            if norm2(v) > lit(1e-8) || norm2(w.current) > lit(CURRENT_TOL) || w.density <= guard {
                return Err(format!("stationary candidate at {} did not converge (|v| = {:e})", fmt_point(x0), norm2(v)));
            }
            if nodes.iter().any(|n| dist(n.position, x) < lit(NODE_EXCLUSION)) {
                return Err(format!("stationary candidate at {} coincides with a node", fmt_point(x0)));
            }
            Ok(x)
        })
        .collect();

    let mut warnings = Vec::new();
    let mut found = Vec::new();
    for r in refined {
        match r {
            Ok(p) => found.push((p, false)),
            // shallow minima of |v| that are not zeros are expected; only note them
            Err(w) => warnings.push(w),
        }
    }
    let found = merge(found, lit(MERGE_DISTANCE));
    let mut points = Vec::with_capacity(found.len());
    for (x, _) in found {
        let Some(jac) = velocity_jacobian(state, x, t) else {
            warnings.push(format!("Jacobian undefined at {}", fmt_point(x)));
            continue;
        };
        let sym = [[jac[0][0], (jac[0][1] + jac[1][0]) * lit(0.5)], [(jac[0][1] + jac[1][0]) * lit(0.5), jac[1][1]]];
        let (vals, vecs) = symmetric_eigen(sym);
        let kind = if vals[0] < T::zero() && vals[1] > T::zero() { EquilibriumKind::Saddle } else { EquilibriumKind::Extremum };
        let w = state.eval(x, t);
        points.push(EquilibriumPoint {
            position: x,
            kind,
            charge: None,
            density_residual: w.density,
            speed_residual: norm2(w.current),
            jacobian_eigenvalues: Some(vals),
            eigenvectors: Some(vecs),
            jacobian_asymmetry: Some((jac[0][1] - jac[1][0]).abs()),
            degenerate: false,
        });
    }
    sort_by_position(&mut points);
    Ok(EquilibriumSearch { points, warnings })
}

/// Nodes, saddles and the total charge seen by a loop just inside the region.
pub fn classify_field<T: Real>(state: &TwoModeState<T>, region: &SearchRegion<T>, t: T) -> Result<FieldReport<T>> {
    region.validate()?;
    if state.kind() == StateKind::Glauber {
        return Ok(FieldReport::empty());
    }
    let nodes = find_nodes(state, region, t)?;
    let stationary = stationary_points_near(state, region, t, &nodes.points)?;
    if let Some(bad) = stationary.points.iter().find(|p| p.kind != EquilibriumKind::Saddle) {
        return Err(Error::SourceOrSink {
            x1: bad.position[0].to_f64().unwrap_or(f64::NAN),
            x2: bad.position[1].to_f64().unwrap_or(f64::NAN),
        });
    }
    let mut warnings = nodes.warnings;
    warnings.extend(stationary.warnings);
    let total_charge = nodes.points.iter().filter_map(|p| p.charge).sum();
    let radius = region.width().min(region.height()) * lit(0.45);
    let boundary = Loop { center: region.center(), radius, samples: 1024 };
    let boundary_circulation = circulation(state, &boundary, t)?;
    Ok(FieldReport {
        nodes: nodes.points,
        saddles: stationary.points,
        total_charge,
        boundary_loop: Some(boundary),
        boundary_circulation,
        warnings,
    })
}

/// Stable and unstable manifolds of a saddle.
///
/// Branches start at `saddle ± 1e-4 * eigenvector`; unstable ones run forward
/// from `params.t0` and stable ones backward, each for `|t1 - t0|`.
pub fn trace_separatrices<T: Real>(
    state: &TwoModeState<T>,
    saddle: &EquilibriumPoint<T>,
    params: &IntegrationParams<T>,
) -> Result<Separatrix<T>> {
    let not_saddle = || Error::NotASaddle {
        x1: saddle.position[0].to_f64().unwrap_or(f64::NAN),
        x2: saddle.position[1].to_f64().unwrap_or(f64::NAN),
    };
    if saddle.kind != EquilibriumKind::Saddle {
        return Err(not_saddle());
    }
    let (vals, vecs) = match (saddle.jacobian_eigenvalues, saddle.eigenvectors) {
        (Some(v), Some(e)) if v[0] < T::zero() && v[1] > T::zero() => (v, e),
        _ => return Err(not_saddle()),
    };
    let duration = (params.t1 - params.t0).abs();
    let eps = lit::<T>(SEPARATRIX_OFFSET);
    let mut jobs = Vec::with_capacity(4);
    for (idx, kind) in [(1usize, BranchKind::Unstable), (0usize, BranchKind::Stable)] {
        debug_assert!(if kind == BranchKind::Unstable { vals[idx] > T::zero() } else { vals[idx] < T::zero() });
        for sign in [T::one(), -T::one()] {
            let dir = [sign * vecs[idx][0], sign * vecs[idx][1]];
            let t1 = match kind {
                BranchKind::Unstable => params.t0 + duration,
                BranchKind::Stable => params.t0 - duration,
            };
            jobs.push((kind, dir, IntegrationParams { t1, ..*params }));
        }
    }
    let branches = jobs
        .into_par_iter()
        .map(|(kind, dir, p)| {
            let seed = [saddle.position[0] + eps * dir[0], saddle.position[1] + eps * dir[1]];
            integrate(state, seed, &p).map(|trajectory| SeparatrixBranch { kind, direction: dir, trajectory })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Separatrix { saddle: saddle.clone(), branches })
}
