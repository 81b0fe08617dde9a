//! Receive path: link budget, L-C matching, rectifier, optional gain stage,
//! comparator. Also the sensitivity search and the matching-network sweep.

mod chain;
mod detector;
mod link;
mod matching;
mod stages;
mod tune;

pub use chain::{
    chain_response, chain_response_with_noise, inject, preset, sensitivity, ChainResponse, EnvelopeNoise,
    ReceiverChain, TracePoint, PRESET_NAMES, SENSITIVITY_CEILING_DBM, SENSITIVITY_FLOOR_DBM,
};
pub use detector::{detect_envelope, DetectorCurve, LoadClass, SQUARE_LAW_SLOPE};
pub use link::{received_power, LinkModel};
pub use matching::{matching_gain, resonant_frequency, MatchingSpec, DEFAULT_Q};
pub use stages::{amplify, compare, AmplifierStage, ComparatorStage};
pub use tune::{sweep_tune, SweepPlan, SweepTable, TuneResult};

use thiserror::Error;

use crate::catalog::CatalogError;
use crate::codec::CodecError;

#[derive(Debug, Error)]
pub enum AnalogError {
    #[error("{0}")]
    Invalid(String),
    #[error("distance {distance_m} m is inside the reference distance {reference_m} m")]
    DistanceBelowReference { distance_m: f64, reference_m: f64 },
    #[error("comparator {0} has no published input offset; supply a v_os override")]
    MissingOffset(String),
    #[error("chain {chain}: amplifier presence does not match detector load class {load:?}")]
    LoadMismatch { chain: String, load: LoadClass },
    #[error("undetectable: no wake decode even at 0 dBm")]
    Undetectable,
    #[error("no matching-network candidates to sweep")]
    NoCandidates,
    #[error("unknown chain preset {0:?}")]
    UnknownPreset(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}
