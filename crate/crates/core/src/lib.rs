//! Numerical toolkit for ultracold atoms in an optical lattice with a
//! laser-induced effective magnetic field.
//!
//! * [`lattice`]: flux parameter, lattice geometry, Peierls-phase Hamiltonian
//! * [`spectra`]: Harper bands and the Hofstadter butterfly
//! * [`dynamics`]: single-particle propagation and density periodicity
//! * [`wannier`]: 1D band structure, Wannier functions, hopping overlaps
//! * [`laser`]: Raman coupling strength and beam-angle solver
//! * [`gutzwiller`]: mean-field ground state of the trapped Bose-Hubbard model

pub mod dynamics;
pub mod error;
pub mod gutzwiller;
pub mod laser;
pub mod lattice;
pub mod linalg;
pub mod parallel;
pub mod spectra;
pub mod wannier;

pub use error::{Error, Result};
pub use lattice::{
    apply_gauge_transform, build_hamiltonian, flux_from_wavenumber, Boundary, FluxRatio,
    HermitianOperator, HubbardParams, LatticeSpec,
};
