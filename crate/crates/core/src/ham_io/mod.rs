//! Hamiltonian ingestion: FCIDUMP files, built-in STO-3G hydrogen integrals,
//! geometries, the core-orbital basis and frozen-core reduction.

mod fcidump;
mod geometry;
mod orbitals;
mod sto3g;

pub use fcidump::{parse_fcidump, parse_fcidump_with_header, write_fcidump, FcidumpHeader};
pub use geometry::{diazene_in_plane, diazene_out_of_plane, hydrogen_chain, parse_xyz, parse_xyz_frames, Geometry};
pub use orbitals::{core_orbital_basis, freeze_core, scf_orbitals};
pub use sto3g::{hydrogen_sto3g_integrals, BOHR_PER_ANGSTROM};
