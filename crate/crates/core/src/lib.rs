//! Recurrent grow-when-required (GWR) self-organizing networks.
//!
//! The crate covers the network itself ([`network`]), temporal synapses and
//! trajectory replay ([`replay`]), the label readout ([`labeling`]), data
//! streams ([`datasets`]), the static-vs-growing experiment protocols
//! ([`protocols`]), model snapshots ([`snapshot`]) and the `gwr` command line
//! ([`cli`]).

pub mod cli;
pub mod config;
pub mod datasets;
pub mod error;
pub mod hyper;
pub mod labeling;
pub mod model;
pub mod network;
pub mod protocols;
pub mod replay;
pub mod snapshot;

pub use error::{GwrError, Result};
pub use hyper::{ContextRule, HyperParams};
pub use model::{Model, SideTables};
pub use network::{Mode, Network, Neuron, NeuronId, StepOutcome};
