//! Turning ensembles into numbers: Wasserstein estimates, decay-rate fits,
//! tail profiles, moment series and a few classical tests.

mod assignment;
mod fit;
mod moments;
mod series;
pub mod stats;
mod tails;
mod wasserstein;

pub use assignment::solve_assignment;
pub use fit::{fit_rate, linear_regression, LinearFit, RateFit};
pub use moments::{moment_series, MomentSeries};
pub use series::{block_of, BlockMeans, ExperimentSeries, Z_95};
pub use tails::{brownian_sup_cdf, quantile_thresholds, tail_profile, TailFit, TailPoint, TailProfile};
pub use wasserstein::{w1_empirical_1d, w1_empirical_assignment, w_f_empirical, MAX_ASSIGNMENT_POINTS};
