//! Desk-scale engine for real-time thermal correlation functions of
//! one-dimensional quantum systems on uniform position grids.
//!
//! The pipeline mirrors a path-integral Monte Carlo calculation in which
//! every propagator is emulated in linear algebra: complex-time evolution
//! is split into a real-time Strang step and an imaginary-time Boltzmann
//! step, the kinetic operator is realized either through FFT
//! diagonalization or through a banded sinc-DVR matrix split into exactly
//! exponentiable 1-sparse pieces, and a dense eigendecomposition serves as
//! the ground-truth oracle throughout.
//!
//! Modules:
//! - [`grid`] — uniform position grids, basis states, atomic-unit conversions
//! - [`hamiltonian`] — potentials, dense grid Hamiltonians, the eigen-oracle
//! - [`dvr`] — banded sinc-DVR kinetic matrix and its truncation-error bounds
//! - [`sparse`] — 1-sparse decomposition and analytic exponentials
//! - [`propagators`] — complex-time step operators, PITE emulation, element cache
//! - [`tcf`] — exact, quadrature, and Monte Carlo correlation functions
//! - [`checks`] — self-contained validation suites with independent oracles

pub mod checks;
pub mod dvr;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod linalg;
pub mod propagators;
pub mod sparse;
pub mod tcf;

pub use error::{Error, Result};
pub use grid::{StateVector, UniformGrid};
pub use hamiltonian::{DenseHamiltonian, Potential, Spectrum};
pub use propagators::{ElementCache, ImagKinetic, RealKinetic, StepOperator, StepScheme};
pub use sparse::{KineticPropagator, OneSparseMatrix, TimeKind};
pub use tcf::{Observable, TcfSeries};
