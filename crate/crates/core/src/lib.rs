//! Physics-informed neural network solver for option pricing under
//! counterparty credit risk.
//!
//! The crate prices European options whose value obeys a nonlinear parabolic
//! PDE (Black-Scholes in one or two assets, Heston) with a piecewise-linear
//! XVA source term. A feed-forward network is trained on a uniform space-time
//! collocation grid against a volume-normalized trapezoidal loss in which the
//! boundary residuals are the model PDE restricted to each boundary face.
//!
//! Everything here is pure computation on `alloc` collections; file formats,
//! configuration and the command-line driver live in the companion crate.
//!
//! Module map:
//!
//! * [`autodiff`]: second-order input jets, a reverse-mode tape, and the
//!   batched jet/adjoint sweep used during training.
//! * [`network`]: architecture, initialization, evaluation.
//! * [`geometry`]: domains, collocation grids, trapezoid weights.
//! * [`models`]: market/XVA parameters, payoffs, region residual operators.
//! * [`loss`]: the normalized loss and its parameter gradient.
//! * [`optim`]: Adam, L-BFGS with a strong-Wolfe line search, training loop.
//! * [`reference`]: closed-form Black-Scholes and Crank-Nicolson oracles.
//! * [`metrics`]: relative error norms and the clamped error map.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod autodiff;
mod error;
pub mod geometry;
pub mod loss;
mod math;
pub mod metrics;
pub mod models;
pub mod network;
pub mod optim;
pub mod reference;

pub use error::{Error, Result};
