//! Estimators of correlation between regions of a lattice whose voxels carry
//! noisy time series.
//!
//! The crate simulates the additive model `Y = X + eps + e` (regional signal,
//! local noise, global noise), estimates inter-region correlations with ten
//! methods that trade off size bias against robustness to each noise kind, and
//! evaluates the exact large-`T` limit of every estimator.
//!
//! ```
//! use aggcorr::{estimate, limit_of, CorrelationFunction, EstimatorConfig, LimitRequest, Method, Params, PsdRepair, Simulator};
//!
//! let params = Params::four_region_study(CorrelationFunction::intra(100.0, 0.6).unwrap());
//! let data = Simulator::new(params.clone(), PsdRepair::Strict).unwrap().simulate(200, 7).unwrap();
//! let cfg = EstimatorConfig::new(Method::Ac, 0, 1);
//! let est = estimate(&data, &cfg).unwrap();
//! let lim = limit_of(&LimitRequest::from_config(&params, &cfg)).unwrap();
//! assert!((est.value - lim).abs() < 0.2);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod estimators;
pub mod lattice;
pub mod limits;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use estimators::{estimate, EstimateResult, EstimatorConfig, Method};
pub use lattice::{
    aggregated_correlation, region_voxels, sample_neighborhood, sample_neighborhood_pair, uniform_distance,
    AggregationScope, CorrelationFunction, Neighborhood, RegionId, RegionSpec, VoxelIndex,
};
pub use limits::{limit_of, Aggregates, LimitForm, LimitRequest};
pub use model::{
    build_signal_covariance, factor_signal_covariance, simulate, snr_to_sigma_e, snr_to_sigma_eps, ModelParams,
    PsdRepair, RepairReport, SignalFactor, Simulator,
};
pub use rng::{split_seed, StreamRng};
pub use scalar::{Field, Real};
pub use stats::{cor_tilde, s_hat_squared, sample_cor, sample_cov};

pub type Params = ModelParams<f64>;
pub type Params32 = ModelParams<f32>;
pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type Estimate = EstimateResult<f64>;
pub type Region = RegionSpec<f64>;
pub type Correlation = CorrelationFunction<f64>;
