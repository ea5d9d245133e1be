//! Geometric phase, dynamic phase and ergotropy of a qubit under pure
//! dephasing by a bosonic bath.
//!
//! * [`spectra`]: spectral densities, diffusion coefficient, decoherence
//!   exponent and dephasing factor.
//! * [`qubit`]: density matrices, dephasing evolution, eigensystems.
//! * [`ergotropy`]: total, coherent and incoherent ergotropy.
//! * [`geophase`]: geometric phase evaluators and the dynamic phase.
//! * [`cli`]: configuration, figure datasets, sweeps and verification.

pub mod cli;
pub mod ergotropy;
pub mod geophase;
pub mod quadrature;
pub mod qubit;
pub mod spectra;

pub use ergotropy::{ErgotropySplit, Hamiltonian2};
pub use geophase::{Dephasing, Evaluator, PhaseResult, PhaseRun};
pub use quadrature::QuadratureControls;
pub use qubit::{DensityMatrix2, EigenSystem2, InitialState};
pub use spectra::{BathParams, SpectralModel};
