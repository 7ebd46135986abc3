//! Numerical Riemann–Hilbert solver and assembly of the spectral problems.

pub mod assemble;
pub mod discretize;
pub mod problem;
pub mod solver;

pub use problem::{pole_in_zeta, JumpArc, Plane, PoleColumn, PoleCondition, RHProblem};
pub use assemble::{assemble_t, assemble_xt, phase, solve_xt, t_jump, xt_jump};
pub use discretize::{Discretization, RefineOptions};
pub use solver::{recover_q, recover_qx_boundary, regularize_poles, solve, RHSolution, SolveOptions};
