//! Generalized urn models with random replacement matrices, treated as a
//! stochastic approximation with random step sizes `1/S_{n+1}`.
//!
//! The crate covers the Perron–Frobenius quantities of the limiting
//! generating matrix ([`perron`]), the Lotka–Volterra drift and its flow
//! ([`dynamics`]), the urn process and its replacement generators ([`urn`]),
//! the generic step-size clock with level-crossing times and delayed sums
//! ([`sa`]), and a Monte Carlo harness that checks the four limits
//! `C_n/S_n → π_H`, `S_n/n → λ_H`, `C_n/n → λ_H π_H` and `N_n/n → π_H`
//! ([`verify`]). [`cli`] wires these into a batch front-end.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod matrix;
pub mod perron;
pub mod sa;
pub mod urn;
pub mod verify;

pub use dynamics::{drift, fixed_point_residual, integrate, settle, xi_term, OdePath, SimplexPoint};
pub use error::{Error, Result};
pub use matrix::{is_irreducible, rho, sigma, Matrix, NonnegativeMatrix};
pub use perron::{perron, PerronData};
pub use urn::{
    advance, draw_color, sa_residual, simulate, GeneratorSpec, LimitLaw, SimulationConfig,
    StepRecord, UrnProcess, UrnState, WeightLaw,
};
