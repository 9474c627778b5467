//! Bohmian polarization trajectories for two-mode quantum light.
//!
//! The field quadratures `(x1, x2)` of two modes play the role of a
//! configuration space. A pure state `psi(x, t)` defines the velocity field
//! `v = grad S = Im(grad psi / psi)`, whose integral curves are the
//! polarization trajectories. The crate evaluates Glauber, SU(2) and N00N
//! states, integrates trajectories, finds vortices (wave-function nodes) and
//! saddles of the phase, and provides field diagnostics.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod real;
pub mod region;
pub mod special_fn;
pub mod states;
pub mod topology;

pub use error::{Error, Result};
pub use real::{Point, Real};
pub use region::SearchRegion;
pub use states::{Amplitude, Family, StateKind};

pub type State = states::TwoModeState<f64>;
pub type Sample = states::WaveSample<f64>;
pub type Center = states::GlauberCenter<f64>;
pub type Params = dynamics::IntegrationParams<f64>;
pub type Path = dynamics::Trajectory<f64>;
pub type CircleLoop = dynamics::Loop<f64>;
pub type Region = region::SearchRegion<f64>;
pub type Equilibrium = topology::EquilibriumPoint<f64>;
pub type Report = topology::FieldReport<f64>;
pub type Grid = analysis::GridField<f64>;
pub type Averaged = analysis::AveragedDensity<f64>;

/// Shorthand for a double-precision complex amplitude.
pub fn amp(re: f64, im: f64) -> Amplitude<f64> {
    Amplitude::new(re, im)
}
