//! Spectral toolkit for the rotating attractive Gross-Pitaevskii equation
//! with a harmonic trap: constrained ground states on mass spheres, their
//! energy landscape (multipliers, dilation fibers, mountain-pass saddles),
//! and symplectic time evolution.
//!
//! # Conventions
//!
//! * Integrals are periodic-box quadratures h^N * sum over nodes.
//! * The complex pairing is <u, v> = h^N sum conj(u) v; differentials use
//!   its real part.
//! * Energy: I(u) = 1/2 ||grad u||^2 + 1/2 ||x u||^2 - (2a/p) ||u||_p^p
//!   - Omega * re <u, Lz u>.
//! * The ambient norm is ||u||_Sigma^2 = ||grad u||^2 + ||x u||^2 + ||u||^2,
//!   with the homogeneous part written sigma_dot_sq. Dual residuals are
//!   measured through the operator A = -Lap + |x|^2 + 1.

pub mod config;
pub mod constants;
pub mod energy;
pub mod error;
pub mod field;
pub mod grid;
pub mod dynamics;
pub mod groundstate;
pub mod manifest;
pub mod saddle;
pub mod oracle;
pub mod physics;
pub mod rng;
pub mod sigma;
pub mod snapshot;
pub mod spectral;
pub mod states;

pub use constants::RotationConstants;
pub use energy::EnergyBreakdown;
pub use error::{Error, ErrorClass, Result};
pub use field::{C64, WaveField};
pub use grid::GridSpec;
pub use physics::PhysicsParams;
pub use spectral::Spectral;
