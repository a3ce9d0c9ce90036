//! Relativistic dynamics in the extended phase space, where time and energy
//! form the canonical pair `(q0, p0) = (c·t, -E/c)` and trajectories are
//! parameterized by a universal time `u`.
//!
//! Modules:
//!
//! - [`phase`]: extended states, units, numerical Poisson bracket, mass shell
//! - [`dynamics`]: extended Hamiltonians and their flow
//! - [`symmetry`]: Galilei/Lorentz actions, finite boosts, canonicity checks
//! - [`actionwave`]: continuity + Hamilton–Jacobi evolution of action distributions
//! - [`wigner`]: extended quantum distributions, Glauber packets, limits
//! - [`relgas`]: relativistic nondegenerate gas
//! - [`resonance`]: resonance width tables and the inverse-width fit
//!
//! ```
//! use extphase::symmetry::{boost_finite, Branch};
//! use extphase::{ExtendedState, Vec3};
//!
//! let rest = ExtendedState::on_shell(0.0, Vec3::zeros(), Vec3::zeros(), 1.0, 1.0);
//! let moving = boost_finite(&rest, &Vec3::new(0.6, 0.0, 0.0), 1.0, Branch::Lorentz)?;
//! assert!((moving.p0 + 1.25).abs() < 1e-12 && (moving.p[0] + 0.75).abs() < 1e-12);
//! # Ok::<(), extphase::Error>(())
//! ```
//!
//! Data-parallel loops go through [`par`]; disable the default `parallel`
//! feature for a purely sequential build with identical results.

pub mod actionwave;
pub mod dynamics;
pub mod error;
pub mod numerics;
pub mod par;
pub mod phase;
pub mod relgas;
pub mod resonance;
pub mod symmetry;
pub mod wigner;

pub use error::{Error, Result};
pub use par::Exec;
pub use phase::{ExtendedState, Units, Vec3};
