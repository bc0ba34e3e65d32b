//! Network state and the learning iteration of the recurrent GWR.
//!
//! A [`Network`] owns its neurons, the undirected topology, and the global
//! temporal context used while training. Evaluation never touches the
//! training context: it threads its own [`ContextState`] through
//! [`Network::find_bmu_with`].

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GwrError, Result};
use crate::hyper::{ContextRule, HyperParams};
use crate::model::SideTables;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NeuronId(pub u32);

impl NeuronId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Static,
    Growing,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Static => "static",
            Mode::Growing => "growing",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = GwrError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(Mode::Static),
            "growing" => Ok(Mode::Growing),
            other => Err(GwrError::config(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neuron {
    pub id: NeuronId,
    pub weight: Vec<f64>,
    /// One descriptor per temporal depth 1..=K.
    pub contexts: Vec<Vec<f64>>,
    pub habituation: f64,
}

impl Neuron {
    fn fresh(id: NeuronId, weight: Vec<f64>, depth: usize) -> Self {
        let dim = weight.len();
        Neuron {
            id,
            weight,
            contexts: vec![vec![0.0; dim]; depth],
            habituation: 1.0,
        }
    }
}

/// Global temporal context `C_1..C_K` plus the winner of the previous step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextState {
    pub global: Vec<Vec<f64>>,
    pub prev_bmu: Option<NeuronId>,
}

impl ContextState {
    pub fn new(depth: usize, dim: usize) -> Self {
        ContextState {
            global: vec![vec![0.0; dim]; depth],
            prev_bmu: None,
        }
    }

    /// Sequence boundary: zero context, forget the previous winner.
    pub fn reset(&mut self) {
        for c in &mut self.global {
            c.iter_mut().for_each(|v| *v = 0.0);
        }
        self.prev_bmu = None;
    }
}

/// Winner and runner-up of a BMU search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmuMatch {
    pub bmu: NeuronId,
    pub second: NeuronId,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub bmu: NeuronId,
    pub second: NeuronId,
    pub distance: f64,
    pub activity: f64,
    pub inserted: Option<NeuronId>,
    pub adapted: Vec<NeuronId>,
    /// Winner habituation as seen by the insertion test (before any update).
    pub bmu_habituation: f64,
    /// Network size as seen by the insertion test.
    pub neurons_before: usize,
}

/// Switches that distinguish replay iterations from ordinary training.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepOptions {
    pub allow_insertion: bool,
    pub record_transition: bool,
    pub replay_label: bool,
}

impl StepOptions {
    pub const TRAINING: StepOptions = StepOptions {
        allow_insertion: true,
        record_transition: true,
        replay_label: false,
    };
    pub const REPLAY: StepOptions = StepOptions {
        allow_insertion: false,
        record_transition: false,
        replay_label: true,
    };
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Network activity `exp(-d_b)` for a winner distance `d_b >= 0`.
///
/// The result stays inside (0, 1] and equals 1 only for `d_b == 0`, even
/// where `exp` would round to 1 or underflow to 0.
pub fn activity(distance: f64) -> Result<f64> {
    if !(distance >= 0.0) {
        return Err(GwrError::contract(format!(
            "activity needs a nonnegative distance, got {distance}"
        )));
    }
    if distance == 0.0 {
        return Ok(1.0);
    }
    const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;
    Ok((-distance).exp().clamp(f64::from_bits(1), BELOW_ONE))
}

/// One habituation update `h + tau * kappa * (1 - h) - tau`, clamped to [0, 1].
pub fn habituate(h: f64, tau: f64, kappa: f64) -> f64 {
    (h + tau * kappa * (1.0 - h) - tau).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    dim: usize,
    neurons: Vec<Neuron>,
    adjacency: Vec<BTreeSet<NeuronId>>,
    context: ContextState,
    mode: Mode,
    hyper: HyperParams,
    rng_seed: u64,
    step_count: u64,
}

impl Network {
    /// Growing network seeded with two neurons copied from the first inputs.
    pub fn init_growing(dim: usize, hyper: HyperParams, first: &[f64], second: &[f64]) -> Result<Self> {
        hyper.validate()?;
        check_dim(dim, first)?;
        check_dim(dim, second)?;
        let depth = hyper.depth();
        let neurons = vec![
            Neuron::fresh(NeuronId(0), first.to_vec(), depth),
            Neuron::fresh(NeuronId(1), second.to_vec(), depth),
        ];
        Ok(Network {
            dim,
            adjacency: vec![BTreeSet::new(); 2],
            neurons,
            context: ContextState::new(depth, dim),
            mode: Mode::Growing,
            hyper,
            rng_seed: 0,
            step_count: 0,
        })
    }

    /// Static network with `n_max` neurons drawn uniformly inside `[low, high]`.
    pub fn init_static(dim: usize, hyper: HyperParams, low: &[f64], high: &[f64], seed: u64) -> Result<Self> {
        hyper.validate()?;
        check_dim(dim, low)?;
        check_dim(dim, high)?;
        if low.iter().zip(high).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(GwrError::config("static bounds must be finite with low <= high"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let depth = hyper.depth();
        let neurons: Vec<Neuron> = (0..hyper.n_max)
            .map(|i| {
                let weight = low
                    .iter()
                    .zip(high)
                    .map(|(&l, &h)| if l == h { l } else { rng.random_range(l..=h) })
                    .collect();
                Neuron::fresh(NeuronId(i as u32), weight, depth)
            })
            .collect();
        Ok(Network {
            dim,
            adjacency: vec![BTreeSet::new(); neurons.len()],
            neurons,
            context: ContextState::new(depth, dim),
            mode: Mode::Static,
            hyper,
            rng_seed: seed,
            step_count: 0,
        })
    }

    /// Rebuilds a network from stored parts, checking every structural invariant.
    pub fn from_parts(
        dim: usize,
        hyper: HyperParams,
        mode: Mode,
        neurons: Vec<Neuron>,
        edges: &[(NeuronId, NeuronId)],
        context: ContextState,
        rng_seed: u64,
        step_count: u64,
    ) -> Result<Self> {
        hyper.validate()?;
        let depth = hyper.depth();
        if neurons.len() < 2 || neurons.len() > hyper.n_max {
            return Err(GwrError::InvalidState(format!(
                "neuron count {} outside [2, {}]",
                neurons.len(),
                hyper.n_max
            )));
        }
        for (i, n) in neurons.iter().enumerate() {
            if n.id.index() != i {
                return Err(GwrError::InvalidState(format!("neuron ids must be dense, found {} at {i}", n.id)));
            }
            check_dim(dim, &n.weight)?;
            if n.contexts.len() != depth {
                return Err(GwrError::InvalidState(format!("neuron {} has {} contexts, expected {depth}", n.id, n.contexts.len())));
            }
            for c in &n.contexts {
                check_dim(dim, c)?;
            }
            if !(0.0..=1.0).contains(&n.habituation) {
                return Err(GwrError::InvalidState(format!("neuron {} habituation out of range", n.id)));
            }
        }
        if context.global.len() != depth {
            return Err(GwrError::InvalidState("global context depth mismatch".into()));
        }
        for c in &context.global {
            check_dim(dim, c)?;
        }
        let mut net = Network {
            dim,
            adjacency: vec![BTreeSet::new(); neurons.len()],
            neurons,
            context,
            mode,
            hyper,
            rng_seed,
            step_count,
        };
        if let Some(p) = net.context.prev_bmu {
            net.check_id(p)?;
        }
        for &(a, b) in edges {
            net.connect(a, b)?;
        }
        Ok(net)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn context(&self) -> &ContextState {
        &self.context
    }

    pub fn neurons(&self) -> &[Neuron] {
        &self.neurons
    }

    pub fn neuron(&self, id: NeuronId) -> Result<&Neuron> {
        self.neurons.get(id.index()).ok_or(GwrError::UnknownNeuron(id))
    }

    pub fn neighbors(&self, id: NeuronId) -> Result<&BTreeSet<NeuronId>> {
        self.adjacency.get(id.index()).ok_or(GwrError::UnknownNeuron(id))
    }

    pub fn has_edge(&self, a: NeuronId, b: NeuronId) -> bool {
        self.adjacency.get(a.index()).is_some_and(|s| s.contains(&b))
    }

    /// Undirected edges as `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NeuronId, NeuronId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, set)| {
            let a = NeuronId(i as u32);
            set.iter().filter(move |&&b| a < b).map(move |&b| (a, b))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub(crate) fn check_id(&self, id: NeuronId) -> Result<()> {
        if id.index() < self.neurons.len() {
            Ok(())
        } else {
            Err(GwrError::UnknownNeuron(id))
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dim, x)
    }

    /// Context-weighted distance of `input` to neuron `id` under the training context.
    pub fn distance(&self, id: NeuronId, input: &[f64]) -> Result<f64> {
        self.distance_with(&self.context, id, input)
    }

    pub fn distance_with(&self, ctx: &ContextState, id: NeuronId, input: &[f64]) -> Result<f64> {
        self.check_input(input)?;
        let n = self.neuron(id)?;
        Ok(self.raw_distance(ctx, n, input))
    }

    fn raw_distance(&self, ctx: &ContextState, n: &Neuron, input: &[f64]) -> f64 {
        let alpha = &self.hyper.alpha;
        let mut d = alpha[0] * squared_distance(input, &n.weight);
        for ((a, global), c) in alpha[1..].iter().zip(&ctx.global).zip(&n.contexts) {
            d += a * squared_distance(global, c);
        }
        d
    }

    pub fn find_bmu(&self, input: &[f64]) -> Result<BmuMatch> {
        self.find_bmu_with(&self.context, input)
    }

    /// Best and second-best matching units; ties go to the smaller id.
    pub fn find_bmu_with(&self, ctx: &ContextState, input: &[f64]) -> Result<BmuMatch> {
        self.check_input(input)?;
        if self.neurons.len() < 2 {
            return Err(GwrError::InvalidState("BMU search needs at least two neurons".into()));
        }
        let (mut best, mut best_d) = (0usize, f64::INFINITY);
        let (mut second, mut second_d) = (usize::MAX, f64::INFINITY);
        for (i, n) in self.neurons.iter().enumerate() {
            let d = self.raw_distance(ctx, n, input);
            // Strict comparisons keep the earlier (smaller) id on ties.
            if d < best_d {
                second = best;
                second_d = best_d;
                best = i;
                best_d = d;
            } else if d < second_d || second == usize::MAX {
                second = i;
                second_d = d;
            }
        }
        if second == usize::MAX || second == best {
            // Only reachable when every distance is NaN.
            return Err(GwrError::InvalidState("BMU search produced no runner-up".into()));
        }
        Ok(BmuMatch {
            bmu: NeuronId(best as u32),
            second: NeuronId(second as u32),
            distance: best_d,
        })
    }

    /// Recomputes the training context from the previous winner.
    pub fn update_global_context(&mut self) -> &[Vec<f64>] {
        let mut ctx = std::mem::replace(&mut self.context, ContextState::new(0, 0));
        self.advance_context(&mut ctx);
        self.context = ctx;
        &self.context.global
    }

    /// Advances `ctx` by one step: `C_k` blends the previous winner's weight
    /// with its descriptors, or resets to zero at a sequence start.
    pub fn advance_context(&self, ctx: &mut ContextState) {
        let beta = self.hyper.beta;
        let Some(prev) = ctx.prev_bmu.and_then(|p| self.neurons.get(p.index())) else {
            ctx.reset();
            return;
        };
        for (k, global) in ctx.global.iter_mut().enumerate() {
            let source = match self.hyper.context_rule {
                ContextRule::Recursive if k == 0 => &prev.weight,
                ContextRule::Recursive => &prev.contexts[k - 1],
                ContextRule::Literal => &prev.contexts[k],
            };
            for ((g, w), c) in global.iter_mut().zip(&prev.weight).zip(source) {
                *g = beta * w + (1.0 - beta) * c;
            }
        }
    }

    /// Marks a sequence boundary for training.
    pub fn reset_context(&mut self) {
        self.context.reset();
    }

    /// Moves the winner and its topological neighbours toward the input and
    /// the current context, then habituates them.
    pub fn adapt(&mut self, bmu: NeuronId, input: &[f64]) -> Result<Vec<NeuronId>> {
        self.check_input(input)?;
        self.check_id(bmu)?;
        let HyperParams { eps_b, eps_n, tau_b, tau_n, kappa, .. } = self.hyper;

        let mut touched = Vec::with_capacity(1 + self.adjacency[bmu.index()].len());
        touched.push(bmu);
        touched.extend(self.adjacency[bmu.index()].iter().copied());

        for (i, &id) in touched.iter().enumerate() {
            let (eps, tau) = if i == 0 { (eps_b, tau_b) } else { (eps_n, tau_n) };
            let n = &mut self.neurons[id.index()];
            let rate = eps * n.habituation;
            for (w, x) in n.weight.iter_mut().zip(input) {
                *w += rate * (x - *w);
            }
            for (c, global) in n.contexts.iter_mut().zip(&self.context.global) {
                for (ci, gi) in c.iter_mut().zip(global) {
                    *ci += rate * (gi - *ci);
                }
            }
            n.habituation = habituate(n.habituation, tau, kappa);
        }
        Ok(touched)
    }

    /// Inserts a neuron halfway between the winner and the input when the
    /// network is growing, the activity is low, the winner is habituated, and
    /// capacity remains.
    pub fn maybe_insert(
        &mut self,
        input: &[f64],
        bmu: NeuronId,
        second: NeuronId,
        activity: f64,
    ) -> Result<Option<NeuronId>> {
        self.check_input(input)?;
        self.check_id(bmu)?;
        self.check_id(second)?;
        if !self.insertion_allowed(bmu, activity) {
            return Ok(None);
        }
        let id = NeuronId(self.neurons.len() as u32);
        let winner = &self.neurons[bmu.index()];
        let weight = winner.weight.iter().zip(input).map(|(w, x)| 0.5 * (w + x)).collect();
        let contexts = winner
            .contexts
            .iter()
            .zip(&self.context.global)
            .map(|(c, g)| c.iter().zip(g).map(|(a, b)| 0.5 * (a + b)).collect())
            .collect();
        self.neurons.push(Neuron {
            id,
            weight,
            contexts,
            habituation: 1.0,
        });
        self.adjacency.push(BTreeSet::new());
        self.connect(id, bmu)?;
        if second != bmu {
            self.connect(id, second)?;
        }
        self.disconnect(bmu, second);
        Ok(Some(id))
    }

    fn insertion_allowed(&self, bmu: NeuronId, activity: f64) -> bool {
        self.mode == Mode::Growing
            && activity < self.hyper.insertion_threshold
            && self.neurons[bmu.index()].habituation < self.hyper.habituation_threshold
            && self.neurons.len() < self.hyper.n_max
    }

    /// Creates the undirected edge `{a, b}` if absent.
    pub fn connect(&mut self, a: NeuronId, b: NeuronId) -> Result<()> {
        if a == b {
            return Err(GwrError::contract(format!("self-edge on neuron {a}")));
        }
        self.check_id(a)?;
        self.check_id(b)?;
        self.adjacency[a.index()].insert(b);
        self.adjacency[b.index()].insert(a);
        Ok(())
    }

    fn disconnect(&mut self, a: NeuronId, b: NeuronId) {
        if let Some(s) = self.adjacency.get_mut(a.index()) {
            s.remove(&b);
        }
        if let Some(s) = self.adjacency.get_mut(b.index()) {
            s.remove(&a);
        }
    }

    /// One training iteration on `input`.
    pub fn step(&mut self, input: &[f64], label: Option<&str>, tables: &mut SideTables) -> Result<StepOutcome> {
        self.step_with(input, label, tables, StepOptions::TRAINING)
    }

    pub(crate) fn step_with(
        &mut self,
        input: &[f64],
        label: Option<&str>,
        tables: &mut SideTables,
        opts: StepOptions,
    ) -> Result<StepOutcome> {
        self.check_input(input)?;
        if self.neurons.len() < 2 {
            return Err(GwrError::InvalidState("training needs at least two neurons".into()));
        }
        self.update_global_context();
        let BmuMatch { bmu, second, distance } = self.find_bmu(input)?;
        let activity = activity(distance)?;
        let bmu_habituation = self.neurons[bmu.index()].habituation;
        let neurons_before = self.neurons.len();

        if opts.record_transition {
            if let Some(prev) = self.context.prev_bmu {
                tables.synapses.increment(prev, bmu);
            }
        }

        let inserted = if opts.allow_insertion {
            self.maybe_insert(input, bmu, second, activity)?
        } else {
            None
        };
        let adapted = match inserted {
            Some(_) => Vec::new(),
            None => {
                let touched = self.adapt(bmu, input)?;
                self.connect(bmu, second)?;
                touched
            }
        };

        if let Some(label) = label {
            let credited = inserted.unwrap_or(bmu);
            if opts.replay_label {
                tables.labels.increment_replay(credited, label);
            } else {
                tables.labels.increment(credited, label);
            }
        }

        self.context.prev_bmu = Some(bmu);
        self.step_count += 1;
        Ok(StepOutcome {
            bmu,
            second,
            distance,
            activity,
            inserted,
            adapted,
            bmu_habituation,
            neurons_before,
        })
    }
}

fn check_dim(expected: usize, v: &[f64]) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(GwrError::DimensionMismatch {
            expected,
            found: v.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyper_k0() -> HyperParams {
        HyperParams {
            alpha: vec![1.0],
            ..HyperParams::default()
        }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn distance_examples() {
        let net = Network::init_growing(2, hyper_k0(), &[0.0, 0.0], &[5.0, 5.0]).unwrap();
        assert_eq!(net.distance(NeuronId(0), &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(net.distance(NeuronId(0), &[3.0, 4.0]).unwrap(), 25.0);

        let net = Network::init_growing(2, HyperParams::default(), &[0.0, 0.0], &[5.0, 5.0]).unwrap();
        assert!(close(net.distance(NeuronId(0), &[1.0, 0.0]).unwrap(), 0.67));
    }

    #[test]
    fn distance_errors() {
        let net = Network::init_growing(2, hyper_k0(), &[0.0, 0.0], &[5.0, 5.0]).unwrap();
        assert!(matches!(
            net.distance(NeuronId(0), &[1.0]),
            Err(GwrError::DimensionMismatch { expected: 2, found: 1 })
        ));
        assert!(matches!(net.distance(NeuronId(7), &[1.0, 1.0]), Err(GwrError::UnknownNeuron(NeuronId(7)))));
    }

    #[test]
    fn bmu_examples() {
        let net = Network::init_growing(2, hyper_k0(), &[0.0, 0.0], &[5.0, 5.0]).unwrap();
        let m = net.find_bmu(&[1.0, 1.0]).unwrap();
        assert_eq!((m.bmu, m.second, m.distance), (NeuronId(0), NeuronId(1), 2.0));
        let m = net.find_bmu(&[5.0, 5.0]).unwrap();
        assert_eq!((m.bmu, m.distance), (NeuronId(1), 0.0));
    }

    #[test]
    fn bmu_ties_go_to_smaller_id() {
        let net = Network::init_growing(2, hyper_k0(), &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        let m = net.find_bmu(&[0.0, 0.0]).unwrap();
        assert_eq!((m.bmu, m.second), (NeuronId(0), NeuronId(1)));
    }

    #[test]
    fn context_update_examples() {
        let mut net = Network::init_growing(2, HyperParams::default(), &[1.0, 0.0], &[5.0, 5.0]).unwrap();
        // sequence start
        assert!(net.update_global_context().iter().all(|c| c.iter().all(|v| *v == 0.0)));

        net.context.prev_bmu = Some(NeuronId(0));
        let ctx = net.update_global_context().to_vec();
        assert!(close(ctx[0][0], 1.0) && ctx[0][1] == 0.0);
        // c_{b,1} is still zero
        assert!(close(ctx[1][0], 0.7) && ctx[1][1] == 0.0);
    }

    #[test]
    fn literal_rule_uses_same_depth_descriptor() {
        let hyper = HyperParams {
            context_rule: ContextRule::Literal,
            ..HyperParams::default()
        };
        let mut net = Network::init_growing(2, hyper, &[1.0, 0.0], &[5.0, 5.0]).unwrap();
        net.context.prev_bmu = Some(NeuronId(0));
        let ctx = net.update_global_context().to_vec();
        assert!(close(ctx[0][0], 0.7) && close(ctx[1][0], 0.7));
    }

    #[test]
    fn activity_examples() {
        assert_eq!(activity(0.0).unwrap(), 1.0);
        assert!(close(activity(0.67).unwrap(), (-0.67f64).exp()));
        assert!((activity(0.67).unwrap() - 0.5117).abs() < 1e-4);
        let tiny = activity(50.0).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-20);
        assert!(activity(-1e-9).is_err());
        assert!(activity(f64::NAN).is_err());
    }

    #[test]
    fn habituation_examples() {
        assert!(close(habituate(1.0, 0.3, 1.05), 0.7));
        let floor = 1.0 - 1.0 / 1.05;
        assert!(close(habituate(floor, 0.1, 1.05), floor));
        assert!(close(habituate(0.5, 0.1, 1.05), 0.4525));
    }

    #[test]
    fn adapt_examples() {
        let mut net = Network::init_growing(2, hyper_k0(), &[0.0, 0.0], &[5.0, 5.0]).unwrap();
        let touched = net.adapt(NeuronId(0), &[1.0, 0.0]).unwrap();
        assert_eq!(touched, vec![NeuronId(0)]);
        assert_eq!(net.neuron(NeuronId(0)).unwrap().weight, vec![0.5, 0.0]);
        assert!(close(net.neuron(NeuronId(0)).unwrap().habituation, 0.7));

        net.neurons[1].habituation = 0.0;
        net.adapt(NeuronId(1), &[0.0, 0.0]).unwrap();
        assert_eq!(net.neuron(NeuronId(1)).unwrap().weight, vec![5.0, 5.0]);

        assert!(matches!(net.adapt(NeuronId(9), &[0.0, 0.0]), Err(GwrError::UnknownNeuron(_))));
    }

    #[test]
    fn adapt_moves_neighbors_with_small_rate() {
        let mut net = Network::init_growing(1, hyper_k0(), &[0.0], &[10.0]).unwrap();
        net.connect(NeuronId(0), NeuronId(1)).unwrap();
        let touched = net.adapt(NeuronId(0), &[2.0]).unwrap();
        assert_eq!(touched, vec![NeuronId(0), NeuronId(1)]);
        assert!(close(net.neurons[1].weight[0], 10.0 + 0.005 * (2.0 - 10.0)));
        assert!(close(net.neurons[1].habituation, 0.9));
    }

    #[test]
    fn insertion_example_and_gating() {
        let mut net = Network::init_growing(2, HyperParams::default(), &[0.0, 0.0], &[5.0, 5.0]).unwrap();
        net.connect(NeuronId(0), NeuronId(1)).unwrap();

        // winner still fresh: no insertion
        assert_eq!(net.maybe_insert(&[1.0, 1.0], NeuronId(0), NeuronId(1), 0.2).unwrap(), None);

        net.neurons[0].habituation = 0.05;
        assert_eq!(net.maybe_insert(&[1.0, 1.0], NeuronId(0), NeuronId(1), 0.9).unwrap(), None);

        let id = net.maybe_insert(&[1.0, 1.0], NeuronId(0), NeuronId(1), 0.2).unwrap();
        assert_eq!(id, Some(NeuronId(2)));
        let n = net.neuron(NeuronId(2)).unwrap();
        assert_eq!(n.weight, vec![0.5, 0.5]);
        assert_eq!(n.habituation, 1.0);
        assert!(net.has_edge(NeuronId(2), NeuronId(0)));
        assert!(net.has_edge(NeuronId(2), NeuronId(1)));
        assert!(!net.has_edge(NeuronId(0), NeuronId(1)));
    }

    #[test]
    fn no_insertion_at_capacity_or_static() {
        let hyper = HyperParams::default().with_n_max(2);
        let mut net = Network::init_growing(2, hyper.clone(), &[0.0, 0.0], &[5.0, 5.0]).unwrap();
        net.neurons[0].habituation = 0.0;
        assert_eq!(net.maybe_insert(&[1.0, 1.0], NeuronId(0), NeuronId(1), 0.0).unwrap(), None);

        let mut net = Network::init_static(2, hyper.with_n_max(4), &[0.0; 2], &[1.0; 2], 3).unwrap();
        net.neurons[0].habituation = 0.0;
        assert_eq!(net.maybe_insert(&[9.0, 9.0], NeuronId(0), NeuronId(1), 0.0).unwrap(), None);
    }

    #[test]
    fn connect_examples() {
        let mut net = Network::init_growing(1, hyper_k0(), &[0.0], &[1.0]).unwrap();
        net.connect(NeuronId(0), NeuronId(1)).unwrap();
        assert!(net.has_edge(NeuronId(0), NeuronId(1)));
        net.connect(NeuronId(1), NeuronId(0)).unwrap();
        assert_eq!(net.edge_count(), 1);
        assert!(matches!(net.connect(NeuronId(1), NeuronId(1)), Err(GwrError::Contract(_))));
        assert!(matches!(net.connect(NeuronId(0), NeuronId(4)), Err(GwrError::UnknownNeuron(_))));
    }

    #[test]
    fn init_examples() {
        let net = Network::init_growing(2, HyperParams::default(), &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(net.len(), 2);
        assert_eq!(net.neurons[1].weight, vec![1.0, 1.0]);
        assert!(net.neurons.iter().all(|n| n.habituation == 1.0));
        assert!(net.neurons.iter().all(|n| n.contexts.iter().flatten().all(|v| *v == 0.0)));
        assert_eq!(net.edge_count(), 0);
        assert!(Network::init_growing(2, HyperParams::default(), &[0.0], &[1.0, 1.0]).is_err());

        let hyper = HyperParams::default();
        let a = Network::init_static(3, hyper.clone(), &[-1.0; 3], &[1.0; 3], 42).unwrap();
        let b = Network::init_static(3, hyper.clone(), &[-1.0; 3], &[1.0; 3], 42).unwrap();
        let c = Network::init_static(3, hyper.clone(), &[-1.0; 3], &[1.0; 3], 43).unwrap();
        assert_eq!(a.len(), 2500);
        assert_eq!(a, b);
        assert_ne!(a.neurons, c.neurons);

        let z = Network::init_static(3, hyper.clone().with_n_max(5), &[0.0; 3], &[0.0; 3], 1).unwrap();
        assert!(z.neurons.iter().all(|n| n.weight.iter().all(|v| *v == 0.0)));

        assert!(Network::init_static(3, hyper, &[1.0; 3], &[0.0; 3], 1).is_err());
    }

    #[test]
    fn static_step_never_inserts() {
        let hyper = HyperParams::default().with_n_max(10);
        let mut net = Network::init_static(2, hyper, &[0.0; 2], &[1.0; 2], 5).unwrap();
        let mut tables = SideTables::default();
        for i in 0..200 {
            let x = [(i % 7) as f64 * 3.0, -(i as f64)];
            let out = net.step(&x, Some("a"), &mut tables).unwrap();
            assert!(out.inserted.is_none());
            assert_eq!(net.len(), 10);
        }
    }

    #[test]
    fn first_step_of_sequence_has_zero_context_and_no_transition() {
        let mut net = Network::init_growing(2, HyperParams::default(), &[0.0, 0.0], &[5.0, 5.0]).unwrap();
        let mut tables = SideTables::default();
        net.step(&[0.1, 0.0], Some("a"), &mut tables).unwrap();
        assert!(net.context().global.iter().flatten().all(|v| *v == 0.0));
        assert_eq!(tables.synapses.total(), 0);
        net.step(&[0.2, 0.0], Some("a"), &mut tables).unwrap();
        assert_eq!(tables.synapses.total(), 1);
        net.reset_context();
        net.step(&[0.2, 0.0], Some("a"), &mut tables).unwrap();
        assert_eq!(tables.synapses.total(), 1);
    }

    #[test]
    fn growing_step_inserts_for_far_input() {
        let mut net = Network::init_growing(2, HyperParams::default(), &[0.0, 0.0], &[10.0, 10.0]).unwrap();
        net.neurons[0].habituation = 0.05;
        let mut tables = SideTables::default();
        // exp(-0.67 * 8) is far below the insertion threshold
        let out = net.step(&[2.0, 2.0], Some("a"), &mut tables).unwrap();
        assert_eq!(out.inserted, Some(NeuronId(2)));
        assert!(out.activity < 0.3);
        assert!(out.adapted.is_empty());
        assert_eq!(net.len(), 3);
        assert_eq!(net.neurons[2].weight, vec![1.0, 1.0]);
        assert_eq!(tables.labels.predict(NeuronId(2)), Some("a"));
        assert_eq!(tables.labels.predict(NeuronId(0)), None);
        assert_eq!(net.context().prev_bmu, Some(NeuronId(0)));
    }
}
