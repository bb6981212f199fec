//! Full-wave FDTD toolkit for a 28 GHz dual-polarized patch element and its
//! 2×2 array, with and without an artificial-magnetic-conductor (AMC) frame.
//!
//! The crate is split along the simulation pipeline:
//!
//! * [`scene`] builds solver-independent geometry from element parameters.
//! * [`mesh`] turns a scene into a graded Yee grid with material coefficients.
//! * [`solver`] runs the leapfrog update with CPML, lumped ports and observers.
//! * [`network`] extracts S-parameters and matching/isolation metrics.
//! * [`farfield`] transforms Huygens-surface phasors into gain patterns.
//! * [`amc`] analyzes the reflection phase of the frame's unit cell.
//! * [`cli`] ties the pieces into reproducible, file-producing commands.

pub mod amc;
pub mod cli;
pub mod constants;
pub mod experiment;
pub mod farfield;
pub mod mesh;
pub mod network;
pub mod scene;
pub mod solver;
pub mod validation;

pub use num_complex::Complex64;
