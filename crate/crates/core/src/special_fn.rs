//! Hermite polynomials and harmonic-oscillator eigenfunctions.
//!
//! Wave functions are always assembled from [`OscillatorTable`], where the
//! Gaussian factor is absorbed into the recurrence so that no intermediate
//! overflows even for high orders. Raw Hermite values ([`HermiteTable`]) grow
//! like `n! 2^n` and are exposed for testing and reference only.

use crate::real::{lit, usize_as, Real};

/// `H_0(x) ..= H_n(x)` at a fixed argument.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteTable<T> {
    pub x: T,
    values: Vec<T>,
}

impl<T: Real> HermiteTable<T> {
    pub fn max_order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, k: usize) -> T {
        self.values[k]
    }
}

/// Physicists' Hermite polynomials via `H_{k+1} = 2x H_k - 2k H_{k-1}`.
pub fn hermite_all<T: Real>(n: usize, x: T) -> HermiteTable<T> {
    let two = lit::<T>(2.0);
    let mut values = Vec::with_capacity(n + 1);
    values.push(T::one());
    if n >= 1 {
        values.push(two * x);
    }
    for k in 1..n {
        let next = two * x * values[k] - two * usize_as::<T>(k) * values[k - 1];
        values.push(next);
    }
    HermiteTable { x, values }
}

/// Orthonormal oscillator eigenfunctions `psi_0(x) ..= psi_n(x)`, where
/// `psi_k(x) = H_k(x) exp(-x^2/2) / sqrt(2^k k! sqrt(pi))`.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorTable<T> {
    pub x: T,
    values: Vec<T>,
}

impl<T: Real> OscillatorTable<T> {
    pub fn max_order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, k: usize) -> T {
        self.values[k]
    }

    /// `psi_k'(x) = sqrt(2k) psi_{k-1}(x) - x psi_k(x)`.
    pub fn derivative(&self, k: usize) -> T {
        let tail = self.x * self.values[k];
        if k == 0 {
            -tail
        } else {
            (lit::<T>(2.0) * usize_as::<T>(k)).sqrt() * self.values[k - 1] - tail
        }
    }

    pub fn derivatives(&self) -> Vec<T> {
        (0..self.values.len()).map(|k| self.derivative(k)).collect()
    }
}

pub fn oscillator_eigenfunctions<T: Real>(n: usize, x: T) -> OscillatorTable<T> {
    let two = lit::<T>(2.0);
    let half = lit::<T>(0.5);
    let mut values = Vec::with_capacity(n + 1);
    // pi^{-1/4} e^{-x^2/2}
    let ground = T::PI().powf(lit(-0.25)) * (-half * x * x).exp();
    values.push(ground);
    if n >= 1 {
        values.push(two.sqrt() * x * ground);
    }
    for k in 1..n {
        let kf = usize_as::<T>(k);
        let k1 = kf + T::one();
        let next = (two / k1).sqrt() * x * values[k] - (kf / k1).sqrt() * values[k - 1];
        values.push(next);
    }
    OscillatorTable { x, values }
}
