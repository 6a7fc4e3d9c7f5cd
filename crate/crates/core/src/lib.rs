//! Luenberger-type observers for Hamiltonian control systems in modal
//! coordinates, specialized to a pinned-pinned flexible beam carrying a
//! mass-spring body.
//!
//! * [`spectral`] solves the beam-body eigenvalue problem.
//! * [`modal`] assembles the truncated system `(Omega, B1, C1)` and the gain `F`.
//! * [`observer`] propagates plant, observer and error dynamics and evaluates
//!   the Lyapunov functional.
//! * [`resolvent`] builds the resolvent of the error generator and its
//!   Hilbert–Schmidt diagnostics.
//! * [`scenario`] and [`cli`] drive everything from a TOML scenario file.

pub mod cli;
pub mod error;
pub mod io;
pub mod modal;
pub mod observer;
pub mod quadrature;
pub mod resolvent;
pub mod scenario;
pub mod spectral;

pub use error::{Error, Result};
