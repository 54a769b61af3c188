//! Discrete-time quantum walks with step-scaled coins.
//!
//! The crate analyzes four walk protocols (simple and split step, in one and
//! two dimensions) whose coin rotation angles grow linearly with the step
//! count, making band structure, boundary states, and topological invariants
//! tunable through the number of steps:
//!
//! - [`mat2`] / [`protocol`]: 2x2 complex algebra, Pauli basis, protocol
//!   descriptions, momentum grids, tolerances.
//! - [`kspace`]: step unitaries, dispersions, Bloch vectors, group
//!   velocities, chiral operators, symmetry verification.
//! - [`topology`]: winding numbers, Zak-phase ratios, Chern numbers,
//!   gap-closing location and Dirac/Fermi-arc/flat-band taxonomy, cell
//!   structures, and path-resolved closing counts.
//! - [`realspace`]: position-space evolution on rings and tori, including
//!   the position-dependent coin profile, with plane-wave cross-checks
//!   against the momentum-space analysis.
//! - [`sweep`]: deterministic grid engines with CSV and SVG heatmap export.
//! - [`cli`]: the `topowalk` command-line front end.
//!
//! Start with the runnable examples (`cargo run --example <name>`); each one
//! exercises a major capability end to end.

pub mod cli;
pub mod kspace;
pub mod mat2;
pub mod protocol;
pub mod realspace;
pub mod sweep;
pub mod topology;

pub use mat2::{ComplexAmplitude, Mat2, Spinor};
pub use protocol::{
    AngleRelation, Family, InhomogeneousProfile, Momentum, ProtocolSpec, StepIndex, Tolerances,
};
