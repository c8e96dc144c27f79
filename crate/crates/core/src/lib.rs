//! Achievable-rate computation and optimization for dirty paper coding over
//! fading MIMO channels.
//!
//! The crate covers two channel models:
//!
//! * the generalized fading dirty paper channel `Y = H1 X + H2 S + Z`, where
//!   the interference `S` is known at the transmitter ([`gfdpc`]), and
//! * the two-user MIMO cognitive radio channel, where the cognitive
//!   transmitter knows the primary message and splits its power between
//!   relaying and its own dirty-paper-coded signal ([`crc`]).
//!
//! Rates are Monte Carlo estimates of log-determinant functionals over
//! reproducible channel ensembles ([`ensemble`]); the optimizers search over
//! the DPC inflation factor and the transmit covariance factors. All rates
//! are handled internally in nats.
//!
//! Numerics are generic over the real scalar type via [`Scalar`] (`f32` or
//! `f64`); the concrete `f64` aliases below are what most callers want.

pub mod crc;
pub mod ensemble;
pub mod error;
pub mod gfdpc;
pub mod linalg;
pub mod matrix;
pub mod scalar;

pub use error::Error;
pub use scalar::Scalar;

/// Complex matrix over `f64` scalars.
pub type Matrix64 = matrix::ComplexMatrix<f64>;
/// Complex matrix over `f32` scalars.
pub type Matrix32 = matrix::ComplexMatrix<f32>;
/// Hermitian positive semidefinite matrix over `f64` scalars.
pub type Psd64 = matrix::HermitianPsd<f64>;
/// Hermitian positive semidefinite matrix over `f32` scalars.
pub type Psd32 = matrix::HermitianPsd<f32>;
/// Channel ensemble configuration over `f64` scalars.
pub type EnsembleConfig64 = ensemble::EnsembleConfig<f64>;
/// G-FDPC problem over `f64` scalars.
pub type GfdpcProblem64 = gfdpc::GfdpcProblem<f64>;
/// Cognitive radio channel problem over `f64` scalars.
pub type CrcProblem64 = crc::CrcProblem<f64>;

/// Convert a rate in nats to bits.
pub fn nats_to_bits<T: Scalar>(nats: T) -> T {
    nats / T::of(std::f64::consts::LN_2)
}

/// Convert a dB value to the linear scale.
pub fn db_to_linear<T: Scalar>(db: T) -> T {
    T::of(10.0).powf(db / T::of(10.0))
}
