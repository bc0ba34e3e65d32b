//! Versioned JSON snapshots of a [`Model`].
//!
//! Floats are written in shortest round-trip form and parsed back exactly, so
//! save -> load -> save is byte-stable.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GwrError, Result};
use crate::hyper::HyperParams;
use crate::labeling::LabelAssociations;
use crate::model::{Model, SideTables};
use crate::network::{ContextState, Mode, Network, Neuron, NeuronId};
use crate::replay::TemporalSynapses;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub schema_version: u32,
    pub dim: usize,
    pub mode: Mode,
    pub rng_seed: u64,
    pub step_count: u64,
    pub hyper: HyperParams,
    pub neurons: Vec<Neuron>,
    pub edges: Vec<(NeuronId, NeuronId)>,
    pub global_context: Vec<Vec<f64>>,
    pub prev_bmu: Option<NeuronId>,
    /// `(prev, curr, count)` triples of the temporal synapses.
    pub synapses: Vec<(NeuronId, NeuronId, u64)>,
    pub labels: Vec<String>,
    /// `(neuron, label index, count)` triples of the label histogram.
    pub label_counts: Vec<(NeuronId, usize, u64)>,
    pub replay_tally: u64,
}

impl Snapshot {
    pub fn capture(model: &Model) -> Self {
        let net = &model.network;
        Snapshot {
            schema_version: SCHEMA_VERSION,
            dim: net.dim(),
            mode: net.mode(),
            rng_seed: net.rng_seed(),
            step_count: net.step_count(),
            hyper: net.hyper().clone(),
            neurons: net.neurons().to_vec(),
            edges: net.edges().collect(),
            global_context: net.context().global.clone(),
            prev_bmu: net.context().prev_bmu,
            synapses: model.tables.synapses.triples(),
            labels: model.tables.labels.labels().to_vec(),
            label_counts: model.tables.labels.triples().collect(),
            replay_tally: model.tables.labels.replay_tally(),
        }
    }

    pub fn restore(self) -> Result<Model> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(GwrError::Snapshot(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let context = ContextState {
            global: self.global_context,
            prev_bmu: self.prev_bmu,
        };
        let network = Network::from_parts(
            self.dim,
            self.hyper,
            self.mode,
            self.neurons,
            &self.edges,
            context,
            self.rng_seed,
            self.step_count,
        )?;

        let mut synapses = TemporalSynapses::new();
        for (prev, curr, count) in self.synapses {
            network.check_id(prev)?;
            network.check_id(curr)?;
            synapses.add(prev, curr, count);
        }
        for &(n, _, _) in &self.label_counts {
            network.check_id(n)?;
        }
        let labels = LabelAssociations::restore(self.labels, self.label_counts, self.replay_tally)
            .map_err(GwrError::Snapshot)?;
        Ok(Model {
            network,
            tables: SideTables { synapses, labels },
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("snapshot serialization is infallible");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GwrError::Snapshot(e.to_string()))
    }
}

pub fn to_string(model: &Model) -> String {
    Snapshot::capture(model).to_json()
}

pub fn from_str(text: &str) -> Result<Model> {
    Snapshot::from_json(text)?.restore()
}

pub fn save(model: &Model, path: &Path) -> Result<()> {
    fs::write(path, to_string(model))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Model> {
    from_str(&fs::read_to_string(path)?)
}
