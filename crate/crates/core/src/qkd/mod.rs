//! Decoy-state channel model and finite-key secret key length.

pub mod channel;
pub mod finite_key;
pub mod params;
pub mod stats;

pub use channel::{binary_entropy, bit_error_prob, detection_rate, photon_number_prob, transmittance};
pub use finite_key::{
    evaluate, finite_key_adjusted_counts, key_generation_speed, phase_error_bound,
    secret_key_length, single_photon_events_bound, vacuum_events_bound, AdjustedCount, CountKind,
    FiniteKeyBounds, KeyRateResult, PhaseErrorBound,
};
pub use params::{ChannelModel, EcLeakage, ProtocolParams, DEFAULT_PULSE_RATE_HZ};
pub use stats::{expected_statistics, sample_statistics, Basis, BasisCounts, ObservedStatistics};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QkdError {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no intensity can produce detections; raw key target unreachable")]
    UnreachableTarget,
    #[error("decoy and vacuum intensities coincide")]
    DegenerateDecoy,
    #[error("intensities violate k1(k2 - k3) > k2^2 - k3^2")]
    DecoyOrdering,
    #[error("an intensity has zero selection probability")]
    ZeroIntensityProbability,
    #[error("single-photon bounds vanished; block yields no key")]
    InsufficientStatistics,
}
