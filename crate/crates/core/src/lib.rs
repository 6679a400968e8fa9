//! Numerical toolkit for almost complex structures on coordinate boxes in R^4:
//! splitting of 2-forms, multiplicities of admissible maps, planar
//! Cauchy-Riemann solvers, J-holomorphic disks, and zero sets of closed
//! J-anti-invariant forms.

pub mod cli;
pub mod cr_solver;
pub mod degree;
pub mod expr;
pub mod fixtures;
pub mod forms;
pub mod linalg;
pub mod jdisks;
pub mod zero_divisor;
