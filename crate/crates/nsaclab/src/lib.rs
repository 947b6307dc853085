//! Numerical laboratory for a two-dimensional Navier-Stokes/Allen-Cahn
//! diffuse-interface model and its sharp-interface limit.
//!
//! The crate is organized around the pieces that make the model checkable at
//! desk scale:
//!
//! * [`profile`] — double-well potentials, the optimal transition profile and
//!   the scalar constants (surface tension and friends) built from it,
//! * [`inner_ode`] — the two model ODE solvers on the real line that drive the
//!   transition-layer expansion, with compatibility and matching checks,
//! * [`geometry`] — closed curves, signed distance, tubular coordinates and
//!   surface differential operators,
//! * [`expansion`] — assembly of the blended approximate solution, auxiliary
//!   fields and parabolic equations for height functions on the interface,
//! * [`diffuse`] — time integration of the coupled Navier-Stokes/Allen-Cahn
//!   system on a 2D grid with energy diagnostics,
//! * [`sharp`] — front tracking for convected mean curvature flow and residual
//!   checks of the limit jump conditions,
//! * [`spectral`] — discrete verification of the spectral lower bound of the
//!   linearized operator and the near-interface fiber decomposition,
//! * [`harness`] — configuration, experiment orchestration, rate fitting and
//!   report emission.

pub mod diffuse;
pub mod expansion;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod inner_ode;
pub mod num;
pub mod profile;
pub mod sharp;
pub mod spectral;

pub use profile::{DoubleWell, Profile, QuarticWell};
