//! Desk-scale toolkit for Hartree-Fock state preparation on simulated quantum hardware.

pub mod compile;
pub mod emulator;
pub mod error;
pub mod estimation;
pub mod fermion;
pub mod ham_io;
pub mod linalg;
pub mod mitigation;
pub mod pipeline;
pub mod registry;
pub mod scf;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
