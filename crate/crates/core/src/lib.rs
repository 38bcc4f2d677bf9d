//! Permutation, bootstrap and asymptotic tests of sample exchangeability
//! based on the variance of pairwise distances, with the Tracy-Widom
//! largest-eigenvalue test for comparison and a simulation harness.

pub mod asymptotics;
pub mod bench;
pub mod distance;
pub mod error;
pub mod model;
pub mod numeric;
pub mod sim;
pub mod stats;
pub mod tracy_widom;
pub mod vstat;

pub use asymptotics::{
    auto_test, chi_square_test, fit_mixture, mixture_cdf, mixture_sf, normal_test,
    permutation_moments, ChiSquareMixture, PermutationMoments,
};
pub use distance::{BlockDistanceSet, DistanceMatrix, Metric};
pub use error::{Error, Result};
pub use model::{BinaryMatrix, BlockPartition, Method, NumericMatrix, TestResult};
pub use vstat::{permutation_test, v_statistic, PValueType, ResamplingPlan, TestInput, VValue};
