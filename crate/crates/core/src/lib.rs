//! Ultra-short-term wind speed forecasting.
//!
//! The pipeline denoises a series with singular spectrum analysis, keeping
//! the shortest prefix of leading components whose reconstruction reaches a
//! Pearson correlation threshold with the original. A temporal convolutional
//! network extracts features from each delay window, a GRU summarises them,
//! and a linear head predicts the value `h` steps ahead, with one network per
//! horizon.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision for the common case.

pub mod error;
pub mod forecast;
pub mod linalg;
pub mod nn;
pub mod pssa;
pub mod scalar;
pub mod series;
pub mod synthetic;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use forecast::{
    build_pipeline, evaluate, prepare, run_experiment, run_pipeline, DenoiseMode, EvalReport, ExperimentReport,
    HorizonForecaster, HorizonPrediction, Metrics, ModelKind, PipelineConfig, Prepared,
};
pub use nn::{ForecastNet, Layer, NetSpec};
pub use pssa::{decompose, diagonal_average, embed, pearson, pssa_denoise, PssaConfig, PssaResult, SsaDecomposition};
pub use scalar::Scalar;
pub use series::{
    load_csv, make_windows, split_train_test, summarize, ColumnSelector, Scaler, SeriesStats, TimeSeries,
    WindowedDataset,
};
pub use tensor::Tensor;
pub use train::{fit, TrainConfig, TrainTrace};

pub type TimeSeries64 = TimeSeries<f64>;
pub type TimeSeries32 = TimeSeries<f32>;
pub type Tensor64 = Tensor<f64>;
pub type Tensor32 = Tensor<f32>;
pub type PssaConfig64 = PssaConfig<f64>;
pub type SsaDecomposition64 = SsaDecomposition<f64>;
pub type ForecastNet64 = ForecastNet<f64>;
pub type ForecastNet32 = ForecastNet<f32>;
pub type HorizonForecaster64 = HorizonForecaster<f64>;
pub type PipelineConfig64 = PipelineConfig<f64>;
pub type EvalReport64 = EvalReport<f64>;
