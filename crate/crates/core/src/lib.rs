//! Simulation and analysis toolkit for superradiance of a target atomic
//! ensemble in a one-dimensional coupled-resonator waveguide, steered by a
//! control ensemble that may couple at one site (small) or two (giant).
//!
//! * [`model`]: parameters, validation, propagation phases.
//! * [`dtwa`]: discrete truncated Wigner trajectories and ensemble averages.
//! * [`observables`]: inversion, half-decay time, radiance strength,
//!   pair correlation, chirality and photon maps.
//! * [`minimal`]: one target plus one control atom, closed form and delay equations.
//! * [`oracle`]: exact single-excitation propagation on the finite lattice.
//! * [`fit`]: power-law fits, Dicke ratios and saturation plateaus.

// negated comparisons are the NaN-rejecting form throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dtwa;
pub mod fit;
pub mod minimal;
pub mod model;
pub mod observables;
pub mod oracle;

pub use model::{classify_control, derive_geometry, validate_spec, ControlClass, GeometryInfo, SystemSpec};
