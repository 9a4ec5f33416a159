//! Differential CSI feedback over doubly-selective MIMO fading channels.
//!
//! The crate covers the full chain from channel statistics to link
//! capacity:
//!
//! - [`corrstats`]: separable time/frequency correlation of the channel.
//! - [`chansim`]: Gauss-Markov channel fields over a symbol x subchannel grid.
//! - [`predictor`]: two-dimensional MMSE prediction from the previous symbol
//!   and the previous subchannel.
//! - [`ratecalc`]: minimal feedback rates for a target distortion.
//! - [`quantizer`]: Lloyd vector quantization of channel matrices.
//! - [`linkcap`]: water-filling precoding and ergodic capacity with
//!   quantized feedback.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below name the common instantiations.

pub mod chansim;
pub mod cmat;
pub mod corrstats;
pub mod error;
pub mod linkcap;
pub mod predictor;
pub mod quantizer;
pub mod ratecalc;
pub mod rng;
pub mod scalar;

pub use chansim::{ar1_step, empirical_corr, gen_field, gen_field_with, ChannelField, FieldDims};
pub use cmat::{CMatrix, ChannelMatrix};
pub use corrstats::{
    bessel_j0, separable_corr, spectral_corr, temporal_corr, CorrelationParams, PhysicalParams,
};
pub use error::{Error, Result};
pub use linkcap::{
    capacity_ergodic, capacity_ergodic_with, capacity_instant, closed_loop, effective_noise, mean_and_stderr, precoder,
    snr_db_to_a2, svd_decompose, waterfill, ClosedLoopRun, ErgodicEstimate, ErgodicSetup, FeedbackCodebooks,
    FeedbackScheme, LloydSettings, PowerAllocation, PredictorKind, SvdTriple,
};
pub use predictor::{differential, field_prediction_mse, predict, predictor_coeffs, reconstruct, PredictorCoeffs};
pub use quantizer::{
    additive_error, distortion, quantize, quantize_matrix, train_codebook, train_codebook_from, Codebook,
    TrainingMeta, VectorSet,
};
pub use ratecalc::{
    distortion_for_rate, quant_error_corr, rate_diff_1d, rate_diff_1d_freq, rate_diff_2d, rate_nondiff,
    RateReport, RateScheme,
};
pub use rng::{ChaChaStreams, StreamKind, StreamSource};
pub use scalar::Real;

pub type CorrelationParams64 = CorrelationParams<f64>;
pub type PhysicalParams64 = PhysicalParams<f64>;
pub type ChannelMatrix64 = ChannelMatrix<f64>;
pub type ChannelField64 = ChannelField<f64>;
pub type PredictorCoeffs64 = PredictorCoeffs<f64>;
pub type RateReport64 = RateReport<f64>;
pub type Codebook64 = Codebook<f64>;
pub type VectorSet64 = VectorSet<f64>;
pub type PowerAllocation64 = PowerAllocation<f64>;
pub type SvdTriple64 = SvdTriple<f64>;
pub type ErgodicSetup64 = ErgodicSetup<f64>;
pub type ErgodicEstimate64 = ErgodicEstimate<f64>;

pub type CorrelationParams32 = CorrelationParams<f32>;
pub type PhysicalParams32 = PhysicalParams<f32>;
pub type ChannelMatrix32 = ChannelMatrix<f32>;
pub type ChannelField32 = ChannelField<f32>;
pub type PredictorCoeffs32 = PredictorCoeffs<f32>;
pub type RateReport32 = RateReport<f32>;
pub type Codebook32 = Codebook<f32>;
pub type VectorSet32 = VectorSet<f32>;
pub type PowerAllocation32 = PowerAllocation<f32>;
pub type SvdTriple32 = SvdTriple<f32>;
pub type ErgodicSetup32 = ErgodicSetup<f32>;
pub type ErgodicEstimate32 = ErgodicEstimate<f32>;
