//! State-relative Hamiltonian decomposition.
//!
//! A Hamiltonian `H` is split against a density operator `rho` into a part
//! `H_bar` commuting with `rho` and a remainder `H_perp` orthogonal to it. For a
//! closed bipartite system the same construction yields effective
//! Hamiltonians for each half, and with them internal energies, heat and work
//! that add up along the unitary evolution.

pub mod dynamics;
pub mod effective;
pub mod error;
pub mod hermitian;
pub mod ledger;
pub mod objective;
pub mod oracle;
pub mod random;
pub mod split;

pub use dynamics::{evolve_autonomous, evolve_driven, propagator, Schedule, TimeGrid, Trajectory};
pub use effective::{assemble, diagonal_parts, BipartiteModel, EffectiveSplit};
pub use error::{Error, Result};
pub use hermitian::{
    eig_hermitian, partial_trace, tensor, CMatrix, CVector, DensityOperator, HermitianOperator,
    SpectralDecomposition, Subsystem, Tolerances, C64,
};
pub use ledger::{closed_ledger, first_law_report, open_ledger, FirstLawReport, ThermoSample, ThermoTrajectory};
pub use objective::DiagonalSolution;
pub use split::{build_generators, lie_split, pinch, project_commuting, GeneratorBasis, LieSplit};
