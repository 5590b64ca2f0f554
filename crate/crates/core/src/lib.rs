//! Radial Dirichlet problems for degenerate fully nonlinear elliptic
//! equations `|∇u|^α F(D²u) = f`: operators, a monotone solver, and
//! certification of regularity and comparison properties on its output.

pub mod analysis;
pub mod cli;
pub mod eigen;
pub mod error;
pub mod grid;
pub mod operators;
pub mod report;
pub mod solver;

pub use analysis::{
    c1_bound_check, c1_modulus_report, check_viscosity, holder_exponent, verify_flux_inequalities, HolderEstimate,
};
pub use eigen::{principal_eigenvalue, EigenResult, EigenSign};
pub use error::{Error, Result};
pub use grid::{
    derivative_numbers, difference_quotients, lipschitz_constant, paraboloid_eval, DerivativeNumbers,
    DiscreteRadialFunction, Domain, DomainKind, Grading, Paraboloid, RadialGrid,
};
pub use operators::{
    closed_form_alpha_laplacian, closed_form_pucci_power, eval_radial, sandwich_bounds, validate_hypotheses,
    AnalyticProfile, OperatorSpec, RadialJet, Variant,
};
pub use report::{Check, VerificationReport};
pub use solver::{comparison_oracle, discretize_residual, solve_dirichlet, Solution, SolverParams, SourceFunction};
