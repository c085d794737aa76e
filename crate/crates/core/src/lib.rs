//! Quadratic time-non-local Lagrangian mechanics.

pub mod analysis;
pub mod closed_form;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod kernel;
pub mod lagrangian;
pub mod oracle;
pub mod published;
pub mod quadrature;
pub mod report;
pub mod variational;

#[cfg(doctest)]
mod book;

pub use closed_form::{
    solve_closed_form, solve_closed_form_with, BoundaryData, CharacteristicVariant, ClosedFormSolution,
    ConsistencyVariant, SolveOptions,
};
pub use error::{Error, Result};
pub use grid::{Grid, Path};
pub use hamiltonian::{HamiltonianDensity, PhasePath};
pub use kernel::{KernelArgumentOrder, MemoryKernel, TabulatedKernel};
pub use lagrangian::{GeneralLagrangian, Lagrangian, OscillatorParams, ReducedLagrangian, TimeFunction, ToReduced};
pub use oracle::SolverMethod;
pub use quadrature::QuadratureRule;
pub use report::{run_validation, ValidationConfig, ValidationReport, Verdict};
pub use variational::ResidualProfile;
