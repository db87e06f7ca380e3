use thiserror::Error;

use crate::spiking::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A node id was not found where the network topology requires it.
    #[error("topology mismatch: node {0} is not an output neuron of this network")]
    TopologyMismatch(NodeId),

    #[error("malformed genome: {0}")]
    Development(String),

    #[error(
        "interface mismatch: expected {expected_inputs} inputs / {expected_outputs} outputs, \
         found {found_inputs} inputs / {found_outputs} outputs"
    )]
    ArityMismatch {
        expected_inputs: usize,
        expected_outputs: usize,
        found_inputs: usize,
        found_outputs: usize,
    },

    #[error("lifetime {t} outside [{l_min}, {l_max}]")]
    LifetimeOutOfRange { t: u64, l_min: u64, l_max: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
