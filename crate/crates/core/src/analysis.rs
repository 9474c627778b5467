//! Field-level diagnostics: grids, cycle-averaged densities, continuity
//! residuals and the ensemble equivariance check.

use ndarray::Array2;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{integrate_endpoint, IntegrationParams, TrajectoryStatus};
use crate::error::{Error, Result};
use crate::real::{lit, usize_as, Point, Real};
use crate::region::SearchRegion;
use crate::states::{StateKind, TwoModeState};

pub const DEFAULT_TIME_SAMPLES: usize = 256;
/// Proposal support: cells above this fraction of the peak, padded by one unit.
pub const SUPPORT_FRACTION: f64 = 1e-8;
pub const MIN_ACCEPTANCE: f64 = 1e-4;
pub const MIN_ENSEMBLE: usize = 1000;
const SUPPORT_SCAN: usize = 96;
const BOUND_SCAN: usize = 256;
const BOUND_MARGIN: f64 = 1.2;
const BIN_QUADRATURE: usize = 4;

/// Field channels on a cell-centred grid, indexed `[i, j]` with `i` along `x1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T> {
    pub region: SearchRegion<T>,
    pub nx: usize,
    pub ny: usize,
    pub time: T,
    pub density: Array2<T>,
    /// NaN where masked.
    pub v1: Array2<T>,
    pub v2: Array2<T>,
    pub j1: Array2<T>,
    pub j2: Array2<T>,
    pub re_psi: Array2<T>,
    pub im_psi: Array2<T>,
    /// Cells inside the node guard.
    pub mask: Array2<bool>,
}

impl<T: Real> GridField<T> {
    pub fn point(&self, i: usize, j: usize) -> Point<T> {
        self.region.cell_center(self.nx, self.ny, i, j)
    }
}

/// Cycle-averaged probability density on a cell-centred grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedDensity<T> {
    pub region: SearchRegion<T>,
    pub nx: usize,
    pub ny: usize,
    pub time_samples: usize,
    pub values: Array2<T>,
}

impl<T: Real> AveragedDensity<T> {
    pub fn point(&self, i: usize, j: usize) -> Point<T> {
        self.region.cell_center(self.nx, self.ny, i, j)
    }

    /// Midpoint-rule integral over the region.
    pub fn integral(&self) -> T {
        let [dx, dy] = self.region.spacing(self.nx, self.ny);
        self.values.iter().copied().sum::<T>() * dx * dy
    }
}

fn check_grid(nx: usize, ny: usize) -> Result<()> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidParameter(format!("grid {nx}x{ny} needs at least 2 cells per axis")));
    }
    Ok(())
}

fn check_bounds<T: Real>(region: &SearchRegion<T>) -> Result<()> {
    // only the rectangle matters here; the scan resolution is unused
    SearchRegion { scan_resolution: 16, ..*region }.validate()
}

fn par_grid<T: Real, V: Send>(region: &SearchRegion<T>, nx: usize, ny: usize, f: impl Fn(Point<T>) -> V + Sync) -> Vec<V> {
    (0..nx)
        .into_par_iter()
        .flat_map_iter(|i| {
            let f = &f;
            (0..ny).map(move |j| f(region.cell_center(nx, ny, i, j)))
        })
        .collect()
}

fn to_array<T: Clone>(nx: usize, ny: usize, v: Vec<T>) -> Array2<T> {
    Array2::from_shape_vec((nx, ny), v).expect("grid length matches shape")
}

/// Evaluates every channel at the cell centres of an `nx` by `ny` grid.
pub fn sample_grid<T: Real>(state: &TwoModeState<T>, region: &SearchRegion<T>, nx: usize, ny: usize, t: T) -> Result<GridField<T>> {
    check_grid(nx, ny)?;
    check_bounds(region)?;
    let samples = par_grid(region, nx, ny, |p| state.eval(p, t));
    let channel = |f: &dyn Fn(&crate::states::WaveSample<T>) -> T| to_array(nx, ny, samples.iter().map(f).collect());
    Ok(GridField {
        region: *region,
        nx,
        ny,
        time: t,
        density: channel(&|s| s.density),
        v1: channel(&|s| s.velocity.map_or(T::nan(), |v| v[0])),
        v2: channel(&|s| s.velocity.map_or(T::nan(), |v| v[1])),
        j1: channel(&|s| s.current[0]),
        j2: channel(&|s| s.current[1]),
        re_psi: channel(&|s| s.psi.re),
        im_psi: channel(&|s| s.psi.im),
        mask: to_array(nx, ny, samples.iter().map(|s| s.velocity.is_none()).collect()),
    })
}

/// Mean of `|psi(x, t)|^2` over `time_samples` equally spaced `t` in `[0, 2 pi)`,
/// i.e. the periodic trapezoid rule over one optical cycle.
///
/// No numerical renormalization is applied: for a normalized state the result
/// integrates to one up to the mass outside `region`.
pub fn averaged_density<T: Real>(
    state: &TwoModeState<T>,
    region: &SearchRegion<T>,
    nx: usize,
    ny: usize,
    time_samples: usize,
) -> Result<AveragedDensity<T>> {
    check_grid(nx, ny)?;
    check_bounds(region)?;
    if time_samples < 2 {
        return Err(Error::InvalidParameter(format!("time_samples {time_samples} < 2")));
    }
    let times: Vec<T> = (0..time_samples).map(|s| T::TAU() * usize_as::<T>(s) / usize_as::<T>(time_samples)).collect();
    let inv = T::one() / usize_as::<T>(time_samples);
    let values = match state.kind() {
        StateKind::Glauber => {
            par_grid(region, nx, ny, |p| times.iter().map(|&t| state.density(p, t)).sum::<T>() * inv)
        }
        StateKind::NumberBasis if state.is_stationary() => par_grid(region, nx, ny, |p| state.density(p, T::zero())),
        StateKind::NumberBasis => {
            let phases: Vec<Vec<Complex<T>>> = times
                .iter()
                .map(|&t| (0..=2 * state.n_max().unwrap_or(0)).map(|n| Complex::from_polar(T::one(), -usize_as::<T>(n) * t)).collect())
                .collect();
            par_grid(region, nx, ny, |p| {
                let shells = state.photon_shells(p);
                phases
                    .iter()
                    .map(|ph| shells.iter().zip(ph).map(|(a, b)| *a * *b).sum::<Complex<T>>().norm_sqr())
                    .sum::<T>()
                    * inv
            })
        }
    };
    Ok(AveragedDensity { region: *region, nx, ny, time_samples, values: to_array(nx, ny, values) })
}

/// Largest `|div j|` over interior cells whose four neighbours are unmasked,
/// by second-order central differences.
pub fn continuity_residual<T: Real>(state: &TwoModeState<T>, region: &SearchRegion<T>, nx: usize, ny: usize, t: T) -> Result<T> {
    if !state.is_stationary() {
        return Err(Error::NotStationary);
    }
    if nx < 3 || ny < 3 {
        return Err(Error::InvalidParameter(format!("grid {nx}x{ny} has no interior cells")));
    }
    let g = sample_grid(state, region, nx, ny, t)?;
    let [dx, dy] = region.spacing(nx, ny);
    let two = lit::<T>(2.0);
    let mut worst = T::zero();
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let near = [(i, j), (i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)];
            if near.iter().any(|&c| g.mask[c]) {
                continue;
            }
            let div = (g.j1[[i + 1, j]] - g.j1[[i - 1, j]]) / (two * dx) + (g.j2[[i, j + 1]] - g.j2[[i, j - 1]]) / (two * dy);
            worst = worst.max(div.abs());
        }
    }
    Ok(worst)
}

/// Bounding box of cells above `SUPPORT_FRACTION` of the scan peak, padded by one.
fn support_box<T: Real>(state: &TwoModeState<T>, t: T) -> SearchRegion<T> {
    let e = state.extent();
    let scan = SearchRegion::square(e);
    let n = SUPPORT_SCAN;
    let vals = par_grid(&scan, n, n, |p| (p, state.density(p, t)));
    let peak = vals.iter().map(|v| v.1).fold(T::zero(), T::max);
    let floor = lit::<T>(SUPPORT_FRACTION) * peak;
    let [hx, hy] = scan.spacing(n, n);
    let pad_x = hx * lit(0.5) + T::one();
    let pad_y = hy * lit(0.5) + T::one();
    let mut b = SearchRegion { x_min: T::infinity(), x_max: T::neg_infinity(), y_min: T::infinity(), y_max: T::neg_infinity(), scan_resolution: BOUND_SCAN };
    for (p, d) in vals {
        if d > floor {
            b.x_min = b.x_min.min(p[0] - pad_x);
            b.x_max = b.x_max.max(p[0] + pad_x);
            b.y_min = b.y_min.min(p[1] - pad_y);
            b.y_max = b.y_max.max(p[1] + pad_y);
        }
    }
    b
}

/// Rejection sampler for `|psi(x, t)|^2` with a deterministic ChaCha stream.
#[derive(Debug, Clone)]
pub struct DensitySampler<'a, T: Real> {
    state: &'a TwoModeState<T>,
    t: T,
    proposal: SearchRegion<T>,
    bound: T,
    rng: ChaCha8Rng,
    attempts: u64,
    accepted: u64,
}

impl<'a, T: Real> DensitySampler<'a, T> {
    pub fn new(state: &'a TwoModeState<T>, t: T, rng_seed: u64) -> Self {
        let proposal = support_box(state, t);
        let n = BOUND_SCAN;
        let peak = par_grid(&proposal, n, n, |p| state.density(p, t)).into_iter().fold(T::zero(), T::max);
        DensitySampler {
            state,
            t,
            proposal,
            bound: peak.max(state.peak_density()) * lit(BOUND_MARGIN),
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
            attempts: 0,
            accepted: 0,
        }
    }

    pub fn proposal(&self) -> &SearchRegion<T> {
        &self.proposal
    }

    pub fn acceptance(&self) -> f64 {
        if self.attempts == 0 {
            1.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }

    /// Draws one point. Points inside the node guard are never returned.
    pub fn draw(&mut self) -> Result<Point<T>> {
        let guard = self.state.node_guard();
        loop {
            self.attempts += 1;
            let p = [
                self.rng.gen_range(self.proposal.x_min..self.proposal.x_max),
                self.rng.gen_range(self.proposal.y_min..self.proposal.y_max),
            ];
            let u: T = self.rng.gen_range(T::zero()..self.bound);
            let d = self.state.density(p, self.t);
            if u < d && d >= guard {
                self.accepted += 1;
                return Ok(p);
            }
            if self.attempts >= 1_000_000 && self.acceptance() < MIN_ACCEPTANCE {
                return Err(Error::LowAcceptance(self.acceptance()));
            }
        }
    }

    pub fn draw_many(&mut self, count: usize) -> Result<Vec<Point<T>>> {
        (0..count).map(|_| self.draw()).collect()
    }
}

/// Convenience wrapper around [`DensitySampler`].
pub fn sample_density<T: Real>(state: &TwoModeState<T>, count: usize, t: T, rng_seed: u64) -> Result<Vec<Point<T>>> {
    DensitySampler::new(state, t, rng_seed).draw_many(count)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivarianceReport<T> {
    /// Half the L1 distance between binned empirical and exact probabilities.
    pub tv_distance: T,
    pub samples: usize,
    pub bins: usize,
    /// Trajectories stopped early near a node; their last point is binned.
    pub aborted: usize,
    pub acceptance: f64,
    pub histogram_region: SearchRegion<T>,
}

/// Neumaier-compensated sum.
fn compensated_sum<T: Real>(values: impl Iterator<Item = T>) -> T {
    let (mut sum, mut comp) = (T::zero(), T::zero());
    for v in values {
        let s = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - s) + v;
        } else {
            comp += (v - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

/// Samples seeds from `|psi(x, 0)|^2`, transports them to time `t` and
/// compares the binned ensemble with `|psi(x, t)|^2`.
///
/// Trajectories use `rel_tol = 1e-8`, `abs_tol = 1e-10` and a step cap of
/// 0.1; only endpoints are needed, far below the bin resolution.
pub fn equivariance_check<T: Real>(
    state: &TwoModeState<T>,
    sample_count: usize,
    t: T,
    bins: usize,
    rng_seed: u64,
) -> Result<EquivarianceReport<T>> {
    if sample_count < MIN_ENSEMBLE {
        return Err(Error::InvalidParameter(format!("sample_count {sample_count} < {MIN_ENSEMBLE}")));
    }
    if bins < 2 {
        return Err(Error::InvalidParameter(format!("bins {bins} < 2")));
    }
    let mut sampler = DensitySampler::new(state, T::zero(), rng_seed);
    let seeds = sampler.draw_many(sample_count)?;

    let params = IntegrationParams { rel_tol: lit(1e-8), abs_tol: lit(1e-10), max_step: lit(0.1), ..IntegrationParams::span(T::zero(), t) };
    let ends: Vec<(Point<T>, bool)> = if t == T::zero() {
        seeds.iter().map(|&s| (s, false)).collect()
    } else {
        seeds
            .par_iter()
            .map(|&s| integrate_endpoint(state, s, &params).map(|(p, st)| (p.x, st == TrajectoryStatus::AbortedNearNode)))
            .collect::<Result<_>>()?
    };

    let a = support_box(state, T::zero());
    let b = support_box(state, t);
    let hist = SearchRegion {
        x_min: a.x_min.min(b.x_min),
        x_max: a.x_max.max(b.x_max),
        y_min: a.y_min.min(b.y_min),
        y_max: a.y_max.max(b.y_max),
        scan_resolution: bins.max(16),
    };
    let [bx, by] = hist.spacing(bins, bins);

    let mut counts = vec![0usize; bins * bins];
    let mut outside = 0usize;
    for (p, _) in &ends {
        let i = ((p[0] - hist.x_min) / bx).floor();
        let j = ((p[1] - hist.y_min) / by).floor();
        match (i.to_usize(), j.to_usize()) {
            // negative or non-finite coordinates give None
            (Some(i), Some(j)) if i < bins && j < bins => counts[i * bins + j] += 1,
            _ => outside += 1,
        }
    }

    // exact bin masses by a q x q midpoint rule inside each bin
    let q = BIN_QUADRATURE;
    let sub = par_grid(&hist, bins * q, bins * q, |p| state.density(p, t));
    let cell = bx * by / usize_as::<T>(q * q);
    let mut exact = vec![T::zero(); bins * bins];
    for (idx, d) in sub.into_iter().enumerate() {
        let (si, sj) = (idx / (bins * q), idx % (bins * q));
        exact[(si / q) * bins + sj / q] += d * cell;
    }
    let total = compensated_sum(exact.iter().copied());
    let n = usize_as::<T>(sample_count);
    let diff = counts
        .iter()
        .zip(&exact)
        .map(|(&c, &e)| (usize_as::<T>(c) / n - e / total).abs())
        .chain(std::iter::once(usize_as::<T>(outside) / n));
    let tv = compensated_sum(diff) * lit(0.5);

    Ok(EquivarianceReport {
        tv_distance: tv,
        samples: sample_count,
        bins,
        aborted: ends.iter().filter(|e| e.1).count(),
        acceptance: sampler.acceptance(),
        histogram_region: hist,
    })
}
