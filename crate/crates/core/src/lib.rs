//! Exact lattice point counting for Diophantine approximation over imaginary
//! quadratic fields with congruence conditions, plus the supporting volume,
//! subspace-height and mean-value experiments.

pub mod asymptotics;
pub mod counting;
mod ddouble;
pub mod error;
pub mod heights;
mod intmat;
pub mod numberfield;
pub mod regions;
pub mod sampling;
pub mod siegelmc;

pub use asymptotics::{fit_error_exponent, run_convergence, ConvergenceTable, ExperimentPlan};
pub use counting::{count_brute_force, count_solutions, disc_lattice_count, CountReport, ProblemSpec, Theta};
pub use error::{Error, Result};
pub use numberfield::{congruent, FieldElement, FieldSpec, IdealRep, OmegaKind, QuadInt, Rational};
pub use regions::{PsiSpec, RegionKind, RegionSpec};
