//! Plane-wave superpositions, their acoustic radiation potential, and the
//! quasiperiodic particle patterns they assemble.
//!
//! The crate is organised bottom-up:
//!
//! * [`field`] evaluates the complex pressure of a plane-wave superposition,
//!   its derivatives, and the lifted field on the periodic N-torus.
//! * [`potential`] turns the pressure into the radiation potential and its
//!   analytic gradient and Hessian, pointwise or over a grid.
//! * [`geometry`] builds wavevector arrangements, decides periodic versus
//!   quasiperiodic, and measures rotational symmetry of a potential.
//! * [`minima`] finds assembly sites: grid detection, Newton refinement and
//!   overdamped relaxation of test particles.
//! * [`imaging`] is the simulation/photograph comparison pipeline.
//! * [`config`] and [`cli`] back the `quasiwave` binary.

#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod error;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod imaging;
mod linalg;
pub mod minima;
pub mod potential;

pub use error::{Error, Result};
pub use field::{
    evaluate_field, evaluate_field_batch, evaluate_field_derivatives, evaluate_periodic_field,
    FieldDerivatives, FieldSample, WaveConfig,
};
pub use geometry::{
    classify_periodicity, polygon_wavevectors, rotational_symmetry_defect, Periodicity,
    WavevectorMatrix,
};
pub use grid::{evaluate_arp_grid, FieldGrid, GridSpec};
pub use minima::{
    detect_minima, refine_minimum, relax_particles, MinimaCriteria, MinimaSet, Minimum,
    RefineOptions, RelaxOptions,
};
pub use potential::{
    arp_coefficients, evaluate_arp, evaluate_arp_batch, evaluate_arp_derivatives,
    evaluate_periodic_arp, ArpCoefficients, ArpDerivatives, ArpMode, MaterialParams,
};
