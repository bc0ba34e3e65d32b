//! A network bundled with the tables it feeds while training.

use crate::error::Result;
use crate::labeling::{classify_sample, LabelAssociations};
use crate::network::{ContextState, Network, StepOutcome};
use crate::replay::{replay_episode, ReplayReport, TemporalSynapses};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SideTables {
    pub synapses: TemporalSynapses,
    pub labels: LabelAssociations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub network: Network,
    pub tables: SideTables,
}

impl Model {
    pub fn new(network: Network) -> Self {
        Model {
            network,
            tables: SideTables::default(),
        }
    }

    pub fn step(&mut self, input: &[f64], label: Option<&str>) -> Result<StepOutcome> {
        self.network.step(input, label, &mut self.tables)
    }

    /// Trains on one ordered sequence, resetting the temporal context first.
    pub fn train_sequence<'a, I>(&mut self, frames: I) -> Result<usize>
    where
        I: IntoIterator<Item = (&'a [f64], Option<&'a str>)>,
    {
        self.network.reset_context();
        let mut n = 0;
        for (x, label) in frames {
            self.step(x, label)?;
            n += 1;
        }
        Ok(n)
    }

    pub fn replay(&mut self) -> Result<ReplayReport> {
        replay_episode(&mut self.network, &mut self.tables)
    }

    pub fn classify(&self, ctx: &mut ContextState, input: &[f64]) -> Result<Option<&str>> {
        classify_sample(&self.network, &self.tables.labels, ctx, input)
    }

    /// Fresh evaluation context for this network.
    pub fn eval_context(&self) -> ContextState {
        ContextState::new(self.network.hyper().depth(), self.network.dim())
    }
}
