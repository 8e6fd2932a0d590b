//! Fractional Cahn-Hilliard dynamics on a bounded interval with solid
//! Dirichlet conditions (`u = w = 0` outside the domain).
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: uniform interior-node grids and zero-extended fields.
//! * [`fracop`]: the Galerkin stiffness of the weak fractional Laplacian,
//!   kernel constant, elliptic solves and dual norms.
//! * [`spectral`]: first eigenpair and its analytic bounds.
//! * [`potential`]: the power-law nonlinearity, its primitive, Yosida and
//!   truncation regularisations.
//! * [`dynamics`]: the implicit convex-splitting scheme for Cahn-Hilliard
//!   and the Allen-Cahn / porous-medium reference solvers.
//! * [`stationary`]: stationary states by energy minimisation.
//! * [`limits`]: singular-limit experiments.
//! * [`experiments`]: config parsing, orchestration and CSV artifacts.

// `!(x > 0.0)` style guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fracop;
pub mod grid;
pub mod limits;
pub mod potential;
pub mod quadrature;
pub mod spectral;
pub mod stationary;

pub use error::{Error, Result};
pub use fracop::{assemble, kernel_constant, FracOperator, KernelConstant};
pub use grid::{Domain1D, Field};
pub use potential::PotentialParams;
pub use spectral::{first_eigenpair, EigenPair};
