//! Correlation and covariance estimation from daily OHLC prices.
//!
//! The estimator combines the product of open-to-close log returns with the
//! product of the "range residuals" `H + L - S` of the two assets:
//!
//! ```text
//! r = S1*S2/2 + (H1 + L1 - S1)(H2 + L2 - S2) / (2(1 - 2b)),   b = 2 ln 2 - 1
//! ```
//!
//! It is unbiased at correlation -1, 0 and 1 and halves the variance of
//! `S1*S2` when the assets are independent Brownian motions. Between those
//! points its mean `phi(rho)` is slightly off; averaging daily values and
//! mapping through `phi^-1` removes the bias.
//!
//! Modules:
//! - [`estimator`]: per-day estimates, standardization, pair and matrix assembly.
//! - [`special`]: the moment function `f`, its quadratic approximation, `phi` and [`PhiTable`].
//! - [`weights`]: numerical reconstruction of the optimal weights from the moment structure.
//! - [`montecarlo`]: seeded, parallel path simulation and experiment tables.

pub mod error;
pub mod estimator;
pub mod montecarlo;
pub mod quadrature;
pub mod special;
pub mod stats;
pub mod weights;

pub use error::{Error, Result};
pub use estimator::{
    day_stats_from_bar, estimate_matrix_day, estimate_pair, rho0_day, rz_day, sigma12_day,
    standardize_series, CrossProducts, DayStats, Interval, OhlcBar, PairEstimate,
};
pub use montecarlo::{
    gen_pair_day, run_experiment, run_table, ExperimentRow, Extremes, PairDay, Process, SimConfig,
};
pub use special::{b_const, f_quad_approx, f_rho, phi, InverseResult, PhiTable, QuadratureSpec};
pub use weights::{
    build_covariance_matrix, closed_form_weights, constraint_vectors, estimator_variance,
    solve_weights, WeightVector,
};
