//! Temporal synapses and replay of recurrent neural activity trajectories.
//!
//! Consecutive winners `i -> j` bump the directed count `P(i, j)`. After an
//! episode, every neuron seeds a trajectory by repeatedly stepping to the
//! most frequent predecessor of the current element; the trajectories are
//! then fed back through the learning dynamics as pseudo-patterns.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::labeling::LabelAssociations;
use crate::model::SideTables;
use crate::network::{Network, NeuronId, StepOptions};

/// Directed transition counts between consecutively activated neurons.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemporalSynapses {
    // target -> (source -> count)
    incoming: BTreeMap<NeuronId, BTreeMap<NeuronId, u64>>,
    total: u64,
}

impl TemporalSynapses {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts one activation of `prev` immediately followed by `curr`.
    pub fn record(&mut self, network: &Network, prev: NeuronId, curr: NeuronId) -> Result<()> {
        network.check_id(prev)?;
        network.check_id(curr)?;
        self.increment(prev, curr);
        Ok(())
    }

    pub(crate) fn increment(&mut self, prev: NeuronId, curr: NeuronId) {
        self.add(prev, curr, 1);
    }

    pub(crate) fn add(&mut self, prev: NeuronId, curr: NeuronId, count: u64) {
        *self.incoming.entry(curr).or_default().entry(prev).or_default() += count;
        self.total += count;
    }

    pub fn get(&self, prev: NeuronId, curr: NeuronId) -> u64 {
        self.incoming
            .get(&curr)
            .and_then(|m| m.get(&prev))
            .copied()
            .unwrap_or(0)
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Nonzero entries as `(prev, curr, count)` sorted by `(prev, curr)`.
    pub fn triples(&self) -> Vec<(NeuronId, NeuronId, u64)> {
        let mut out: Vec<_> = self
            .incoming
            .iter()
            .flat_map(|(&curr, m)| m.iter().map(move |(&prev, &c)| (prev, curr, c)))
            .filter(|t| t.2 > 0)
            .collect();
        out.sort_unstable();
        out
    }

    /// Most frequent predecessor of `target` outside `excluded`; smallest id on ties.
    pub fn strongest_predecessor(&self, target: NeuronId, excluded: &[NeuronId]) -> Option<NeuronId> {
        let mut best: Option<(NeuronId, u64)> = None;
        for (&prev, &c) in self.incoming.get(&target)? {
            if c == 0 || excluded.contains(&prev) {
                continue;
            }
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((prev, c));
            }
        }
        best.map(|(id, _)| id)
    }
}

/// A pseudo-pattern sequence, stored in generation order (backward in time).
#[derive(Debug, Clone, PartialEq)]
pub struct Rnat {
    pub source: NeuronId,
    pub ids: Vec<NeuronId>,
    pub weights: Vec<Vec<f64>>,
    pub labels: Vec<Option<String>>,
}

impl Rnat {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Walks predecessors from `source` for up to `K + 1` steps.
///
/// Elements already in the trajectory are never revisited, and the walk
/// stops early once no unvisited predecessor has a positive count.
pub fn generate_rnat(
    network: &Network,
    synapses: &TemporalSynapses,
    labels: &LabelAssociations,
    source: NeuronId,
) -> Result<Rnat> {
    network.check_id(source)?;
    let lambda = network.hyper().depth() + 1;
    let mut ids = Vec::with_capacity(lambda + 1);
    ids.push(source);
    while ids.len() <= lambda {
        let last = *ids.last().unwrap();
        match synapses.strongest_predecessor(last, &ids) {
            Some(next) => ids.push(next),
            None => break,
        }
    }
    let neurons = network.neurons();
    Ok(Rnat {
        source,
        weights: ids.iter().map(|id| neurons[id.index()].weight.clone()).collect(),
        labels: ids.iter().map(|&id| labels.predict(id).map(str::to_owned)).collect(),
        ids,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub trajectories: usize,
    pub steps: usize,
}

/// Generates one trajectory per neuron from a frozen snapshot, then presents
/// each one in forward temporal order with insertion disabled.
///
/// Single-element trajectories carry no temporal evidence and are skipped.
/// `P` is left unchanged; label credits go to the replay tally.
pub fn replay_episode(network: &mut Network, tables: &mut SideTables) -> Result<ReplayReport> {
    let rnats: Vec<Rnat> = {
        let net = &*network;
        let SideTables { synapses, labels } = &*tables;
        (0..net.len() as u32)
            .into_par_iter()
            .map(|i| generate_rnat(net, synapses, labels, NeuronId(i)))
            .collect::<Result<_>>()?
    };

    let mut report = ReplayReport {
        trajectories: rnats.len(),
        steps: 0,
    };
    for rnat in rnats.iter().filter(|r| r.len() >= 2) {
        network.reset_context();
        for (w, label) in rnat.weights.iter().zip(&rnat.labels).rev() {
            network.step_with(w, label.as_deref(), tables, StepOptions::REPLAY)?;
            report.steps += 1;
        }
        network.reset_context();
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyper::HyperParams;

    fn net(n: usize, k: usize) -> Network {
        let mut alpha = vec![0.5];
        alpha.extend(std::iter::repeat_n(0.5 / k.max(1) as f64, k));
        let hyper = HyperParams {
            alpha,
            n_max: n,
            ..HyperParams::default()
        };
        Network::init_static(2, hyper, &[0.0; 2], &[1.0; 2], 9).unwrap()
    }

    #[test]
    fn record_transition_counts() {
        let net = net(3, 2);
        let mut p = TemporalSynapses::new();
        p.record(&net, NeuronId(1), NeuronId(2)).unwrap();
        assert_eq!(p.get(NeuronId(1), NeuronId(2)), 1);
        p.record(&net, NeuronId(1), NeuronId(2)).unwrap();
        assert_eq!(p.get(NeuronId(1), NeuronId(2)), 2);
        assert_eq!(p.get(NeuronId(2), NeuronId(1)), 0);
        assert!(p.record(&net, NeuronId(1), NeuronId(3)).is_err());
        p.record(&net, NeuronId(2), NeuronId(2)).unwrap();
        assert_eq!(p.total(), 3);
    }

    #[test]
    fn rnat_examples() {
        let labels = LabelAssociations::new();

        let n = net(3, 0);
        let mut p = TemporalSynapses::new();
        p.add(NeuronId(0), NeuronId(1), 5);
        p.add(NeuronId(2), NeuronId(1), 3);
        let r = generate_rnat(&n, &p, &labels, NeuronId(1)).unwrap();
        assert_eq!(r.ids, vec![NeuronId(1), NeuronId(0)]);
        assert_eq!(r.weights[1], n.neurons()[0].weight);

        let empty = TemporalSynapses::new();
        assert_eq!(generate_rnat(&n, &empty, &labels, NeuronId(1)).unwrap().ids, vec![NeuronId(1)]);

        let n = net(4, 2);
        let mut p = TemporalSynapses::new();
        p.add(NeuronId(3), NeuronId(2), 9);
        p.add(NeuronId(2), NeuronId(1), 9);
        p.add(NeuronId(1), NeuronId(0), 9);
        let r = generate_rnat(&n, &p, &labels, NeuronId(0)).unwrap();
        assert_eq!(r.ids, vec![NeuronId(0), NeuronId(1), NeuronId(2), NeuronId(3)]);
    }

    #[test]
    fn rnat_skips_self_transitions_and_cycles() {
        let n = net(4, 2);
        let labels = LabelAssociations::new();
        let mut p = TemporalSynapses::new();
        p.add(NeuronId(1), NeuronId(1), 50);
        p.add(NeuronId(0), NeuronId(1), 2);
        p.add(NeuronId(1), NeuronId(0), 7);
        let r = generate_rnat(&n, &p, &labels, NeuronId(1)).unwrap();
        assert_eq!(r.ids, vec![NeuronId(1), NeuronId(0)]);
    }

    #[test]
    fn replay_preserves_size_and_synapses() {
        let mut n = net(10, 2);
        let mut tables = SideTables::default();
        let report = replay_episode(&mut n, &mut tables).unwrap();
        assert_eq!(report, ReplayReport { trajectories: 10, steps: 0 });

        for i in 0..40 {
            let x = [(i % 5) as f64 * 0.2, 0.1 * (i % 3) as f64];
            n.step(&x, Some(if i % 2 == 0 { "a" } else { "b" }), &mut tables).unwrap();
        }
        let p_before = tables.synapses.clone();
        let h_train = tables.labels.training_total();
        let report = replay_episode(&mut n, &mut tables).unwrap();
        assert_eq!(report.trajectories, 10);
        assert!(report.steps > 0);
        assert_eq!(n.len(), 10);
        assert_eq!(tables.synapses, p_before);
        assert_eq!(tables.labels.training_total(), h_train);
        assert!(n.context().prev_bmu.is_none());
    }
}
