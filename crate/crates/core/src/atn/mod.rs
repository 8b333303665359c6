//! Finite-resolution AT(n) defect: step functions, shifted projections and
//! an alternating LP solver.

mod instances;
mod solver;
mod step;

pub use instances::{cylinder_targets, planted_instance, PlantedInstance};
pub use solver::{
    alternate_optimize, defect_profile, solve_coefficients, AtnProblem, AtnWitness,
    CoefficientFit, DefectEntry,
};
pub use step::{evaluate, l1_distance, shift_column, ShiftProjection, StepFunction, StepFunctionData};
