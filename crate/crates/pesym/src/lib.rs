//! Verification and simulation toolkit for nonlinear parabolic-elliptic
//! reaction-diffusion systems
//!
//! ```text
//!   U_t = (D(U) U_x)_x + F(U, V)
//!   0   = V_xx + G(U, V)
//! ```
//!
//! The crate machine-checks a catalog of Lie point symmetries and reduction
//! maps for this class (via symbolic jet-space prolongation and randomized
//! residual testing), and numerically solves the associated tumour-growth
//! moving-boundary problems, validated against closed-form similarity
//! solutions.

pub mod catalog;
pub mod cli;
pub mod expr;
pub mod frontfix;
pub mod jet;
pub mod lie;
pub mod report;
pub mod similarity;
pub mod transform;
