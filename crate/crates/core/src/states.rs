//! Two-mode field states in the quadrature representation.
//!
//! Units are `hbar = M = omega = 1`, so one optical cycle is `t in [0, 2 pi)`.
//! Every state is stored normalized. Number-basis states evolve as
//! `c_{m,k} -> c_{m,k} exp(-i (m + k) t)`; Glauber states are evaluated from
//! their closed Gaussian form.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::{lit, usize_as, Point, Real};
use crate::special_fn::oscillator_eigenfunctions;

/// Complex amplitude; `norm()` is the modulus and `arg()` the phase in `(-pi, pi]`.
pub type Amplitude<T> = Complex<T>;

/// Velocity is reported undefined where `|psi|^2` falls below this fraction
/// of the state's peak density.
pub const NODE_GUARD: f64 = 1e-12;

const PEAK_SCAN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Glauber,
    NumberBasis,
}

/// How a state was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Glauber,
    Su2,
    Noon,
    GlauberTruncated,
    Custom,
}

/// Immutable two-mode pure state.
#[derive(Debug, Clone)]
pub struct TwoModeState<T> {
    family: Family,
    alpha: [Amplitude<T>; 2],
    /// `n_max + 1`; zero for Glauber states.
    dim: usize,
    coefficients: Vec<Amplitude<T>>,
    terms: Vec<(usize, usize, Amplitude<T>)>,
    total_photon_number: Option<usize>,
    normalized: bool,
    peak_density: T,
    extent: T,
}

/// Local field data at one point and time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveSample<T> {
    pub psi: Amplitude<T>,
    pub grad: [Amplitude<T>; 2],
    pub density: T,
    /// `Im(grad psi / psi)`; `None` inside the node guard.
    pub velocity: Option<Point<T>>,
    /// `Im(conj(psi) grad psi)`.
    pub current: Point<T>,
}

impl<T: Real> WaveSample<T> {
    /// Velocity without the node guard, defined wherever `psi != 0`.
    pub fn raw_velocity(&self) -> Option<Point<T>> {
        if self.density > T::zero() {
            Some([self.current[0] / self.density, self.current[1] / self.density])
        } else {
            None
        }
    }
}

/// Center of a Glauber wave packet: `sqrt(2) alpha e^{-it} = x_tilde + i y_tilde`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlauberCenter<T> {
    pub x_tilde: Point<T>,
    pub y_tilde: Point<T>,
    pub t: T,
}

pub fn glauber_center<T: Real>(alpha1: Amplitude<T>, alpha2: Amplitude<T>, t: T) -> GlauberCenter<T> {
    let rot = Complex::from_polar(T::SQRT_2(), -t);
    let z1 = alpha1 * rot;
    let z2 = alpha2 * rot;
    GlauberCenter { x_tilde: [z1.re, z2.re], y_tilde: [z1.im, z2.im], t }
}

impl<T: Real> TwoModeState<T> {
    /// Two-mode Glauber coherent state `|alpha1, alpha2>`.
    pub fn glauber(alpha1: Amplitude<T>, alpha2: Amplitude<T>) -> Self {
        let radius = (alpha1.norm_sqr() + alpha2.norm_sqr()).sqrt() * T::SQRT_2();
        TwoModeState {
            family: Family::Glauber,
            alpha: [alpha1, alpha2],
            dim: 0,
            coefficients: Vec::new(),
            terms: Vec::new(),
            total_photon_number: None,
            normalized: true,
            peak_density: T::FRAC_1_PI(),
            extent: radius + lit(4.0),
        }
    }

    /// SU(2) coherent state with `n` photons,
    /// `c_{m,n-m} ∝ alpha1^m alpha2^{n-m} / sqrt(m! (n-m)!)`.
    pub fn su2(alpha1: Amplitude<T>, alpha2: Amplitude<T>, n: usize) -> Result<Self> {
        check_amplitudes(alpha1, alpha2, n)?;
        // scale out |alpha| so the powers stay bounded
        let scale = alpha1.norm().max(alpha2.norm());
        let (a1, a2) = (alpha1 / scale, alpha2 / scale);
        let dim = n + 1;
        let mut c = vec![Complex::new(T::zero(), T::zero()); dim * dim];
        for m in 0..=n {
            let k = n - m;
            let weight = (ln_factorial::<T>(m) + ln_factorial::<T>(k)) * lit(-0.5);
            c[m * dim + k] = a1.powu(m as u32) * a2.powu(k as u32) * weight.exp();
        }
        Ok(Self::number_basis(Family::Su2, [alpha1, alpha2], dim, c, Some(n)))
    }

    /// N00N state `alpha1 |n,0> + alpha2 |0,n>`.
    pub fn noon(alpha1: Amplitude<T>, alpha2: Amplitude<T>, n: usize) -> Result<Self> {
        check_amplitudes(alpha1, alpha2, n)?;
        let dim = n + 1;
        let mut c = vec![Complex::new(T::zero(), T::zero()); dim * dim];
        c[n * dim] += alpha1;
        c[n] += alpha2;
        Ok(Self::number_basis(Family::Noon, [alpha1, alpha2], dim, c, Some(n)))
    }

    /// Glauber state expanded over SU(2) states with at most `n_max` photons,
    /// `e^{-|alpha|^2/2} sum_{m+k<=n_max} alpha1^m alpha2^k / sqrt(m! k!) |m,k>`.
    pub fn glauber_truncated(alpha1: Amplitude<T>, alpha2: Amplitude<T>, n_max: usize) -> Self {
        let dim = n_max + 1;
        let zero = Complex::new(T::zero(), T::zero());
        let mut c = vec![zero; dim * dim];
        let half = lit::<T>(0.5);
        c[0] = Complex::new((-(alpha1.norm_sqr() + alpha2.norm_sqr()) * half).exp(), T::zero());
        for m in 0..dim {
            if m > 0 {
                c[m * dim] = c[(m - 1) * dim] * alpha1 / usize_as::<T>(m).sqrt();
            }
            for k in 1..(dim - m) {
                c[m * dim + k] = c[m * dim + k - 1] * alpha2 / usize_as::<T>(k).sqrt();
            }
        }
        Self::number_basis(Family::GlauberTruncated, [alpha1, alpha2], dim, c, None)
    }

    /// Arbitrary square coefficient matrix `rows[m][k]`, renormalized.
    pub fn custom(rows: &[Vec<Amplitude<T>>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Coefficients("empty matrix".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::Coefficients(format!("row {bad} has length {} (expected {dim})", rows[bad].len())));
        }
        let c: Vec<_> = rows.iter().flatten().copied().collect();
        if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Coefficients("non-finite entry".into()));
        }
        if c.iter().all(|z| z.norm_sqr() == T::zero()) {
            return Err(Error::Coefficients("all coefficients vanish".into()));
        }
        let mut shells = c
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm_sqr() > T::zero())
            .map(|(i, _)| i / dim + i % dim);
        let first = shells.next();
        let total = match first {
            Some(n) if shells.all(|s| s == n) => Some(n),
            _ => None,
        };
        let zero = Complex::new(T::zero(), T::zero());
        Ok(Self::number_basis(Family::Custom, [zero, zero], dim, c, total))
    }

    fn number_basis(
        family: Family,
        alpha: [Amplitude<T>; 2],
        dim: usize,
        mut coefficients: Vec<Amplitude<T>>,
        total_photon_number: Option<usize>,
    ) -> Self {
        let norm = coefficients.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        for z in coefficients.iter_mut() {
            *z = *z / norm;
        }
        let terms = coefficients
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm_sqr() > T::zero())
            .map(|(i, z)| (i / dim, i % dim, *z))
            .collect();
        let n_max = dim - 1;
        let extent = (lit::<T>(2.0) * usize_as::<T>(n_max) + T::one()).sqrt() + lit(4.0);
        let mut state = TwoModeState {
            family,
            alpha,
            dim,
            coefficients,
            terms,
            total_photon_number,
            normalized: true,
            peak_density: T::one(),
            extent,
        };
        state.peak_density = state.scan_peak();
        state
    }

    fn scan_peak(&self) -> T {
        let h = lit::<T>(2.0) * self.extent / usize_as::<T>(PEAK_SCAN);
        let mut peak = T::zero();
        for i in 0..PEAK_SCAN {
            let x1 = -self.extent + (usize_as::<T>(i) + lit(0.5)) * h;
            for j in 0..PEAK_SCAN {
                let x2 = -self.extent + (usize_as::<T>(j) + lit(0.5)) * h;
                peak = peak.max(self.psi([x1, x2], T::zero()).norm_sqr());
            }
        }
        peak
    }

    pub fn kind(&self) -> StateKind {
        if self.dim == 0 {
            StateKind::Glauber
        } else {
            StateKind::NumberBasis
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn alpha(&self) -> [Amplitude<T>; 2] {
        self.alpha
    }

    pub fn total_photon_number(&self) -> Option<usize> {
        self.total_photon_number
    }

    /// True when the velocity field does not depend on time.
    pub fn is_stationary(&self) -> bool {
        self.total_photon_number.is_some()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Highest photon number per mode carried by the coefficient matrix.
    pub fn n_max(&self) -> Option<usize> {
        self.dim.checked_sub(1)
    }

    /// `c_{m,k}` at `t = 0`; zero outside the stored matrix.
    pub fn coefficient(&self, m: usize, k: usize) -> Amplitude<T> {
        if m < self.dim && k < self.dim {
            self.coefficients[m * self.dim + k]
        } else {
            Complex::new(T::zero(), T::zero())
        }
    }

    /// Peak of `|psi|^2` from a coarse scan of the working square.
    pub fn peak_density(&self) -> T {
        self.peak_density
    }

    /// Half-width of a square around the origin holding essentially all probability.
    pub fn extent(&self) -> T {
        self.extent
    }

    /// Absolute density below which velocity is undefined.
    pub fn node_guard(&self) -> T {
        lit::<T>(NODE_GUARD) * self.peak_density
    }

    pub fn psi(&self, x: Point<T>, t: T) -> Amplitude<T> {
        match self.kind() {
            StateKind::Glauber => self.glauber_psi(x, t),
            StateKind::NumberBasis => {
                let n = self.dim - 1;
                let f1 = oscillator_eigenfunctions(n, x[0]);
                let f2 = oscillator_eigenfunctions(n, x[1]);
                let mut psi = Complex::new(T::zero(), T::zero());
                for &(m, k, c) in &self.terms {
                    psi += self.evolved(c, m, k, t) * (f1.get(m) * f2.get(k));
                }
                self.global_phase(psi, t)
            }
        }
    }

    /// Photon-number shells `phi_n(x)` with `psi(x, t) = sum_n phi_n(x) e^{-i n t}`,
    /// indexed by `n = m + k`. Empty for Glauber states.
    pub fn photon_shells(&self, x: Point<T>) -> Vec<Amplitude<T>> {
        if self.dim == 0 {
            return Vec::new();
        }
        let n = self.dim - 1;
        let f1 = oscillator_eigenfunctions(n, x[0]);
        let f2 = oscillator_eigenfunctions(n, x[1]);
        let mut shells = vec![Complex::new(T::zero(), T::zero()); 2 * n + 1];
        for &(m, k, c) in &self.terms {
            shells[m + k] += c * (f1.get(m) * f2.get(k));
        }
        shells
    }

    pub fn density(&self, x: Point<T>, t: T) -> T {
        self.psi(x, t).norm_sqr()
    }

    pub fn velocity(&self, x: Point<T>, t: T) -> Option<Point<T>> {
        self.eval(x, t).velocity
    }

    pub fn eval(&self, x: Point<T>, t: T) -> WaveSample<T> {
        let (psi, grad) = match self.kind() {
            StateKind::Glauber => {
                let psi = self.glauber_psi(x, t);
                let center = glauber_center(self.alpha[0], self.alpha[1], t);
                let g = |l: usize| psi * Complex::new(center.x_tilde[l] - x[l], center.y_tilde[l]);
                (psi, [g(0), g(1)])
            }
            StateKind::NumberBasis => {
                let n = self.dim - 1;
                let f1 = oscillator_eigenfunctions(n, x[0]);
                let f2 = oscillator_eigenfunctions(n, x[1]);
                let d1 = f1.derivatives();
                let d2 = f2.derivatives();
                let zero = Complex::new(T::zero(), T::zero());
                let (mut psi, mut g1, mut g2) = (zero, zero, zero);
                for &(m, k, c) in &self.terms {
                    let c = self.evolved(c, m, k, t);
                    psi += c * (f1.get(m) * f2.get(k));
                    g1 += c * (d1[m] * f2.get(k));
                    g2 += c * (f1.get(m) * d2[k]);
                }
                (self.global_phase(psi, t), [self.global_phase(g1, t), self.global_phase(g2, t)])
            }
        };
        let density = psi.norm_sqr();
        let current = [(psi.conj() * grad[0]).im, (psi.conj() * grad[1]).im];
        let velocity = (density >= self.node_guard() && density > T::zero())
            .then(|| [current[0] / density, current[1] / density]);
        WaveSample { psi, grad, density, velocity, current }
    }

    fn glauber_psi(&self, x: Point<T>, t: T) -> Amplitude<T> {
        let c = glauber_center(self.alpha[0], self.alpha[1], t);
        let half = lit::<T>(0.5);
        let dx = [x[0] - c.x_tilde[0], x[1] - c.x_tilde[1]];
        let modulus = T::FRAC_1_PI().sqrt() * (-(dx[0] * dx[0] + dx[1] * dx[1]) * half).exp();
        let phase = c.y_tilde[0] * x[0] + c.y_tilde[1] * x[1]
            - half * (c.x_tilde[0] * c.y_tilde[0] + c.x_tilde[1] * c.y_tilde[1]);
        Complex::from_polar(modulus, phase)
    }

    #[inline]
    fn evolved(&self, c: Amplitude<T>, m: usize, k: usize, t: T) -> Amplitude<T> {
        if self.total_photon_number.is_some() || t == T::zero() {
            c
        } else {
            c * Complex::from_polar(T::one(), -usize_as::<T>(m + k) * t)
        }
    }

    #[inline]
    fn global_phase(&self, z: Amplitude<T>, t: T) -> Amplitude<T> {
        match self.total_photon_number {
            Some(n) if t != T::zero() => z * Complex::from_polar(T::one(), -usize_as::<T>(n) * t),
            _ => z,
        }
    }
}

fn check_amplitudes<T: Real>(alpha1: Amplitude<T>, alpha2: Amplitude<T>, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::PhotonNumber(n));
    }
    if alpha1.norm_sqr() == T::zero() && alpha2.norm_sqr() == T::zero() {
        return Err(Error::ZeroAmplitudes);
    }
    Ok(())
}

fn ln_factorial<T: Real>(n: usize) -> T {
    (2..=n).map(|j| usize_as::<T>(j).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{PI, SQRT_2};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn glauber_center_values() {
        let g = glauber_center(c(4.0, 0.0), c(0.0, 2.0), 0.0);
        assert_relative_eq!(g.x_tilde[0], 4.0 * SQRT_2);
        assert!(g.x_tilde[1].abs() < 1e-15);
        assert!(g.y_tilde[0].abs() < 1e-15);
        assert_relative_eq!(g.y_tilde[1], 2.0 * SQRT_2);

        let g = glauber_center(c(4.0, 0.0), c(0.0, 2.0), PI / 2.0);
        assert!(g.x_tilde[0].abs() < 1e-14);
        assert_relative_eq!(g.x_tilde[1], 2.0 * SQRT_2, max_relative = 1e-15);

        let g = glauber_center(c(0.0, 0.0), c(0.0, 0.0), 1.3);
        assert_eq!(g.x_tilde, [0.0, 0.0]);
        assert_eq!(g.y_tilde, [0.0, 0.0]);
    }

    #[test]
    fn glauber_center_stays_on_circle_per_mode() {
        let (a1, a2) = (c(1.2, -0.7), c(-0.3, 2.1));
        for i in 0..20 {
            let g = glauber_center(a1, a2, i as f64 * 0.37);
            assert_relative_eq!(g.x_tilde[0].powi(2) + g.y_tilde[0].powi(2), 2.0 * a1.norm_sqr(), max_relative = 1e-13);
            assert_relative_eq!(g.x_tilde[1].powi(2) + g.y_tilde[1].powi(2), 2.0 * a2.norm_sqr(), max_relative = 1e-13);
        }
    }

    #[test]
    fn vacuum_has_no_flow() {
        let s = TwoModeState::glauber(c(0.0, 0.0), c(0.0, 0.0));
        for &x in &[[0.0, 0.0], [1.0, -0.5], [2.5, 2.0]] {
            assert_eq!(s.eval(x, 0.7).velocity.unwrap(), [0.0, 0.0]);
        }
        assert_relative_eq!(s.density([0.0, 0.0], 0.0), 1.0 / PI);
    }

    #[test]
    fn glauber_velocity_is_y_tilde() {
        let s = TwoModeState::glauber(c(4.0, 0.0), c(0.0, 2.0));
        for &x in &[[5.0, 0.3], [6.0, -1.0], [4.2, 0.9]] {
            let v = s.eval(x, 0.0).velocity.unwrap();
            assert!(v[0].abs() < 1e-12);
            assert_relative_eq!(v[1], 2.0 * SQRT_2, max_relative = 1e-12);
        }
    }

    #[test]
    fn su2_rejects_degenerate_input() {
        assert_eq!(TwoModeState::su2(c(0.0, 0.0), c(0.0, 0.0), 2).unwrap_err(), Error::ZeroAmplitudes);
        assert_eq!(TwoModeState::noon(c(0.0, 0.0), c(0.0, 0.0), 2).unwrap_err(), Error::ZeroAmplitudes);
        assert_eq!(TwoModeState::su2(c(1.0, 0.0), c(0.0, 0.0), 0).unwrap_err(), Error::PhotonNumber(0));
    }

    #[test]
    fn su2_single_mode_limit() {
        let s = TwoModeState::su2(c(1.0, 0.0), c(0.0, 0.0), 2).unwrap();
        assert_eq!(s.coefficient(2, 0), c(1.0, 0.0));
        for m in 0..=2 {
            for k in 0..=2 {
                if (m, k) != (2, 0) {
                    assert_eq!(s.coefficient(m, k), c(0.0, 0.0));
                }
            }
        }
        assert_eq!(s.total_photon_number(), Some(2));
    }

    #[test]
    fn su2_circular_velocity() {
        // psi ∝ (x1 + i x2)^2 e^{-x^2/2}  =>  v = 2 (-x2, x1) / |x|^2
        let s = TwoModeState::su2(c(1.0, 0.0), c(0.0, 1.0), 2).unwrap();
        let v = s.eval([1.0, 0.0], 0.0).velocity.unwrap();
        assert!(v[0].abs() < 1e-12);
        assert_relative_eq!(v[1], 2.0, max_relative = 1e-12);
    }

    #[test]
    fn noon_node_at_origin() {
        let s = TwoModeState::noon(c(4.0, 0.0), c(0.0, 2.0), 3).unwrap();
        let w = s.eval([0.0, 0.0], 0.0);
        assert_eq!(w.density, 0.0);
        assert!(w.velocity.is_none());
        assert!(w.raw_velocity().is_none());
    }

    #[test]
    fn pure_number_state_is_static() {
        let s = TwoModeState::noon(c(1.0, 0.0), c(0.0, 0.0), 2).unwrap();
        for &x in &[[0.3, 0.2], [-1.0, 1.5], [2.0, -0.4]] {
            let v = s.eval(x, 0.9).velocity.unwrap();
            assert!(v[0].abs() < 1e-14 && v[1].abs() < 1e-14);
        }
    }

    #[test]
    fn noon_and_su2_coincide_at_one_photon() {
        let a = TwoModeState::noon(c(1.0, 0.0), c(0.0, 1.0), 1).unwrap();
        let b = TwoModeState::su2(c(1.0, 0.0), c(0.0, 1.0), 1).unwrap();
        for &x in &[[0.3, 0.2], [-1.0, 1.5], [2.0, -0.4]] {
            let va = a.eval(x, 0.0).velocity.unwrap();
            let vb = b.eval(x, 0.0).velocity.unwrap();
            assert!((va[0] - vb[0]).abs() < 1e-12 && (va[1] - vb[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn truncated_vacuum_is_vacuum() {
        let s = TwoModeState::glauber_truncated(c(0.0, 0.0), c(0.0, 0.0), 7);
        assert_eq!(s.coefficient(0, 0), c(1.0, 0.0));
        assert_relative_eq!(s.density([0.0, 0.0], 0.0), 1.0 / PI, max_relative = 1e-14);
        assert_eq!(s.total_photon_number(), None);
    }

    #[test]
    fn custom_detects_photon_shell() {
        let z = c(0.0, 0.0);
        let rows = vec![vec![z, z, c(1.0, 0.0)], vec![z, c(0.0, 2.0), z], vec![c(1.0, 1.0), z, z]];
        let s = TwoModeState::custom(&rows).unwrap();
        assert_eq!(s.total_photon_number(), Some(2));
        let total: f64 = (0..3).flat_map(|m| (0..3).map(move |k| (m, k))).map(|(m, k)| s.coefficient(m, k).norm_sqr()).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-14);

        let rows = vec![vec![c(1.0, 0.0), z], vec![z, c(1.0, 0.0)]];
        assert_eq!(TwoModeState::custom(&rows).unwrap().total_photon_number(), None);
        assert!(TwoModeState::<f64>::custom(&[vec![z, z], vec![z]]).is_err());
        assert!(TwoModeState::<f64>::custom(&[vec![z]]).is_err());
    }

    #[test]
    fn velocity_flagged_inside_guard() {
        let s = TwoModeState::su2(c(1.0, 0.0), c(0.0, 1.0), 3).unwrap();
        let w = s.eval([1e-6, 0.0], 0.0);
        assert!(w.density < s.node_guard());
        assert!(w.velocity.is_none());
        assert!(w.raw_velocity().is_some());
    }

    #[test]
    fn single_precision_evaluation() {
        let s = TwoModeState::<f32>::su2(Complex::new(1.0, 0.0), Complex::new(0.0, 1.0), 2).unwrap();
        let v = s.eval([1.0, 0.0], 0.0).velocity.unwrap();
        assert!((v[1] - 2.0).abs() < 1e-4);
    }
}
