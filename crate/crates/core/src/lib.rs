//! Aircraft cargo loading as a QUBO problem.
//!
//! The crate builds penalty-based QUBO models for placing containers on the
//! positions of an aircraft hold, solves them with tabu search or exact
//! branch and bound, and validates and benchmarks the resulting plans.

pub mod analysis;
pub mod bench;
pub mod error;
pub mod io;
pub mod model;
pub mod qubo;
pub mod solvers;

pub use analysis::{center_of_gravity, decode, shear_profile, validate, LoadingPlan, ShearCheck, ValidationReport};
pub use bench::{emit_report, run_benchmark, BenchmarkSummary, ReportFormat, TrialRecord};
pub use error::{Error, Result};
pub use model::{AircraftParams, ConstraintSet, ContainerSpec, ContainerType, ProblemInstance, ShearLimitTable};
pub use qubo::{assemble, assemble_with, calibrate_weights, AssemblyOptions, PenaltyWeights, QuadraticModel, VariableRegistry};
pub use solvers::{exact_solve, tabu_solve, ExactSolution, RawSolution, SolverParams};
