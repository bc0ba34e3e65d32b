//! Frequency-based label readout for unsupervised neurons.

use std::collections::{BTreeMap, HashMap};

use crate::error::Result;
use crate::network::{ContextState, Network, NeuronId};

/// Per-neuron label histogram `H(j, l)`.
///
/// Labels are interned in first-seen order; that order breaks ties in
/// [`LabelAssociations::predict`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelAssociations {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    rows: BTreeMap<NeuronId, Vec<u64>>,
    replay_tally: u64,
}

impl LabelAssociations {
    pub fn new() -> Self {
        Self::default()
    }

    /// Labels in first-seen order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn record(&mut self, network: &Network, neuron: NeuronId, label: &str) -> Result<()> {
        network.check_id(neuron)?;
        self.increment(neuron, label);
        Ok(())
    }

    fn intern(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), i);
        i
    }

    pub(crate) fn increment(&mut self, neuron: NeuronId, label: &str) {
        self.add(neuron, label, 1);
    }

    /// Replay-driven credit; counted in `H` and in the replay tally.
    pub(crate) fn increment_replay(&mut self, neuron: NeuronId, label: &str) {
        self.add(neuron, label, 1);
        self.replay_tally += 1;
    }

    pub(crate) fn add(&mut self, neuron: NeuronId, label: &str, count: u64) {
        let l = self.intern(label);
        let row = self.rows.entry(neuron).or_default();
        if row.len() <= l {
            row.resize(l + 1, 0);
        }
        row[l] += count;
    }

    /// Rebuilds a table from its label list and sparse `(neuron, label index, count)` entries.
    pub(crate) fn restore(
        labels: Vec<String>,
        entries: impl IntoIterator<Item = (NeuronId, usize, u64)>,
        replay_tally: u64,
    ) -> std::result::Result<Self, String> {
        let mut h = LabelAssociations::new();
        for l in &labels {
            if h.index.contains_key(l) {
                return Err(format!("duplicate label `{l}`"));
            }
            h.intern(l);
        }
        for (n, l, c) in entries {
            let Some(label) = labels.get(l) else {
                return Err(format!("label index {l} out of range"));
            };
            h.add(n, label, c);
        }
        if replay_tally > h.total() {
            return Err("replay tally exceeds total label count".into());
        }
        h.replay_tally = replay_tally;
        Ok(h)
    }

    pub fn count(&self, neuron: NeuronId, label: &str) -> u64 {
        let (Some(&l), Some(row)) = (self.index.get(label), self.rows.get(&neuron)) else {
            return 0;
        };
        row.get(l).copied().unwrap_or(0)
    }

    /// Nonzero `(label, count)` pairs of one neuron in label order.
    pub fn row(&self, neuron: NeuronId) -> Vec<(&str, u64)> {
        self.rows
            .get(&neuron)
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, c)| **c > 0)
                    .map(|(l, c)| (self.labels[l].as_str(), *c))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Nonzero entries as `(neuron, label index, count)` in ascending order.
    pub fn triples(&self) -> impl Iterator<Item = (NeuronId, usize, u64)> + '_ {
        self.rows.iter().flat_map(|(&n, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, c)| **c > 0)
                .map(move |(l, &c)| (n, l, c))
        })
    }

    /// Most frequent label of a neuron, or `None` for an unlabeled neuron.
    pub fn predict(&self, neuron: NeuronId) -> Option<&str> {
        let row = self.rows.get(&neuron)?;
        let mut best: Option<(usize, u64)> = None;
        for (l, &c) in row.iter().enumerate() {
            if c > 0 && best.is_none_or(|(_, bc)| c > bc) {
                best = Some((l, c));
            }
        }
        best.map(|(l, _)| self.labels[l].as_str())
    }

    pub fn total(&self) -> u64 {
        self.rows.values().flatten().sum()
    }

    pub fn replay_tally(&self) -> u64 {
        self.replay_tally
    }

    /// Label credits that came from training presentations.
    pub fn training_total(&self) -> u64 {
        self.total() - self.replay_tally
    }
}

/// Evaluation-mode readout: advances the caller's context, finds the winner,
/// and returns its label. Network and tables stay untouched.
pub fn classify_sample<'a>(
    network: &Network,
    labels: &'a LabelAssociations,
    ctx: &mut ContextState,
    input: &[f64],
) -> Result<Option<&'a str>> {
    network.advance_context(ctx);
    let m = network.find_bmu_with(ctx, input)?;
    ctx.prev_bmu = Some(m.bmu);
    Ok(labels.predict(m.bmu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyper::HyperParams;
    use crate::model::SideTables;

    fn small_net() -> Network {
        let hyper = HyperParams::default().with_n_max(8);
        Network::init_static(2, hyper, &[0.0; 2], &[1.0; 2], 1).unwrap()
    }

    #[test]
    fn record_and_predict() {
        let net = small_net();
        let mut h = LabelAssociations::new();
        h.record(&net, NeuronId(3), "cup").unwrap();
        assert_eq!(h.count(NeuronId(3), "cup"), 1);
        for _ in 0..3 {
            h.record(&net, NeuronId(3), "cup").unwrap();
        }
        for _ in 0..2 {
            h.record(&net, NeuronId(3), "can").unwrap();
        }
        assert_eq!(h.row(NeuronId(3)), vec![("cup", 4), ("can", 2)]);
        assert_eq!(h.predict(NeuronId(3)), Some("cup"));
        assert!(h.row(NeuronId(5)).is_empty());
        assert_eq!(h.predict(NeuronId(5)), None);
        assert!(h.record(&net, NeuronId(99), "cup").is_err());
    }

    #[test]
    fn ties_go_to_first_seen_label() {
        let net = small_net();
        let mut h = LabelAssociations::new();
        h.record(&net, NeuronId(1), "a").unwrap();
        h.record(&net, NeuronId(1), "b").unwrap();
        h.record(&net, NeuronId(1), "b").unwrap();
        h.record(&net, NeuronId(1), "a").unwrap();
        h.record(&net, NeuronId(1), "a").unwrap();
        h.record(&net, NeuronId(1), "b").unwrap();
        assert_eq!(h.predict(NeuronId(1)), Some("a"));
    }

    #[test]
    fn classify_is_pure() {
        let mut net = Network::init_growing(2, HyperParams::default(), &[0.0, 0.0], &[5.0, 5.0]).unwrap();
        let mut tables = SideTables::default();
        net.step(&[5.0, 5.0], Some("cup"), &mut tables).unwrap();
        let before = (net.clone(), tables.clone());
        let mut ctx = ContextState::new(2, 2);
        let got = classify_sample(&net, &tables.labels, &mut ctx, &[5.0, 5.0]).unwrap();
        assert_eq!(got, Some("cup"));
        assert_eq!(ctx.prev_bmu, Some(NeuronId(1)));
        assert_eq!(before, (net.clone(), tables.clone()));

        let mut ctx = ContextState::new(2, 2);
        assert_eq!(classify_sample(&net, &tables.labels, &mut ctx, &[0.0, 0.0]).unwrap(), None);
    }
}
