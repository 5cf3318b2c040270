//! Reference solutions: closed-form Black-Scholes prices and Greeks and
//! finite-difference solvers for every model.

mod banded;
mod closed_form;
mod fd;
mod surface;

pub use banded::{BandedLu, BandedMatrix};
pub use closed_form::{
    bs_greeks, bs_greeks_with, bs_price, normal_cdf, normal_pdf, risky_bs_greeks, risky_bs_greeks_with, risky_bs_price,
    risky_bs_price_with, BsGreeks,
};
pub use fd::{fd_solve, fd_solve_1d, fd_solve_2d, FdConfig};
pub use surface::{SolutionSurface, SurfaceMeta};
