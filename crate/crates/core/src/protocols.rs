//! Batch and class-incremental experiment protocols.
//!
//! Every trial owns its model and derives all randomness from
//! `(master seed, trial index)`, so trials can run in any order or in
//! parallel without changing their results. Within one comparison, static
//! and growing runs see identical category and session orders.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{Dataset, SequenceInfo, Split};
use crate::error::{GwrError, Result};
use crate::hyper::HyperParams;
use crate::model::Model;
use crate::network::{Mode, Network, StepOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Batch,
    Incremental,
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtocolKind::Batch => "batch",
            ProtocolKind::Incremental => "incremental",
        })
    }
}

impl FromStr for ProtocolKind {
    type Err = GwrError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batch" => Ok(ProtocolKind::Batch),
            "incremental" => Ok(ProtocolKind::Incremental),
            other => Err(GwrError::config(format!("unknown protocol `{other}`"))),
        }
    }
}

/// Relative margin added on each side of the data range when drawing static weights.
pub const STATIC_INIT_MARGIN: f64 = 0.05;

/// Training passes of the batch protocol when none are given.
pub const DEFAULT_EPOCHS: usize = 35;

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub mode: Mode,
    pub replay: bool,
    /// Training passes; required for batch, ignored for incremental.
    pub epochs: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub hyper: HyperParams,
    /// Worker threads for trials; `None` uses the global pool.
    pub parallel_trials: Option<usize>,
    /// Record elapsed wall time per checkpoint (makes outputs nondeterministic).
    pub wall_clock: bool,
}

impl ProtocolSpec {
    pub fn new(kind: ProtocolKind, mode: Mode, n_max: usize) -> Self {
        ProtocolSpec {
            kind,
            mode,
            replay: false,
            epochs: match kind {
                ProtocolKind::Batch => Some(DEFAULT_EPOCHS),
                ProtocolKind::Incremental => None,
            },
            trials: 10,
            seed: 1,
            hyper: HyperParams::default().with_n_max(n_max),
            parallel_trials: None,
            wall_clock: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        if self.trials == 0 {
            return Err(GwrError::config("trials must be at least 1"));
        }
        if self.kind == ProtocolKind::Batch && !self.epochs.is_some_and(|e| e >= 1) {
            return Err(GwrError::config("batch protocol needs epochs >= 1"));
        }
        if self.parallel_trials == Some(0) {
            return Err(GwrError::config("parallel_trials must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub trial: usize,
    /// Epoch (batch) or number of encountered categories (incremental), from 1.
    pub checkpoint: usize,
    pub mode: Mode,
    pub replay: bool,
    pub n_neurons: usize,
    pub acc_overall: f64,
    pub acc_seen: f64,
    /// Accuracy per category on the full test split, in sorted category order.
    pub per_category: Vec<f64>,
    pub encountered: Vec<bool>,
    pub forgetting_mean: f64,
    pub replay_steps: usize,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub overall: f64,
    pub per_category: Vec<f64>,
    /// Frame-weighted accuracy over the categories flagged as seen.
    pub seen: f64,
}

/// Frame-level instance accuracy of a frozen model on `test`.
///
/// Each test sequence starts from a reset context; unlabeled winners count
/// as errors.
pub fn evaluate(model: &Model, test: &Dataset, categories: &[String], seen: &[bool]) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(GwrError::config("cannot evaluate on an empty test split"));
    }
    if test.dim() != model.network.dim() {
        return Err(GwrError::DimensionMismatch {
            expected: model.network.dim(),
            found: test.dim(),
        });
    }
    let per_seq: Vec<(usize, usize, usize)> = test
        .sequences()
        .par_iter()
        .map(|seq| {
            let cat = categories
                .iter()
                .position(|c| *c == seq.category)
                .ok_or_else(|| GwrError::config(format!("test category `{}` not in category list", seq.category)))?;
            let mut ctx = model.eval_context();
            let mut correct = 0;
            let frames = test.sequence_frames(seq);
            for f in frames {
                if model.classify(&mut ctx, &f.features)? == Some(f.instance.as_str()) {
                    correct += 1;
                }
            }
            Ok((cat, correct, frames.len()))
        })
        .collect::<Result<_>>()?;

    let mut hits = vec![0usize; categories.len()];
    let mut totals = vec![0usize; categories.len()];
    for (c, ok, n) in per_seq {
        hits[c] += ok;
        totals[c] += n;
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let (mut seen_hits, mut seen_total) = (0, 0);
    for c in 0..categories.len() {
        if seen.get(c).copied().unwrap_or(false) {
            seen_hits += hits[c];
            seen_total += totals[c];
        }
    }
    Ok(Evaluation {
        overall: ratio(hits.iter().sum(), totals.iter().sum()),
        per_category: hits.iter().zip(&totals).map(|(&h, &t)| ratio(h, t)).collect(),
        seen: ratio(seen_hits, seen_total),
    })
}

/// Per-category forgetting (peak minus final accuracy) over one trial's
/// checkpoints. Checkpoints where a category was not yet encountered are
/// ignored; categories never encountered at the end yield `None`.
pub fn forgetting_metrics(records: &[MetricsRecord]) -> Result<Vec<Option<f64>>> {
    if records.len() < 2 {
        return Err(GwrError::config("forgetting needs at least two checkpoints"));
    }
    let last = records.last().unwrap();
    Ok((0..last.per_category.len())
        .map(|c| {
            if !last.encountered[c] {
                return None;
            }
            let peak = records
                .iter()
                .filter(|r| r.encountered[c])
                .map(|r| r.per_category[c])
                .fold(f64::NEG_INFINITY, f64::max);
            Some(peak - last.per_category[c])
        })
        .collect())
}

fn mean_forgetting(history: &[MetricsRecord], current: &[f64], encountered: &[bool]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0;
    for c in 0..current.len() {
        if !encountered[c] {
            continue;
        }
        let peak = history
            .iter()
            .filter(|r| r.encountered[c])
            .map(|r| r.per_category[c])
            .fold(current[c], f64::max);
        sum += peak - current[c];
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// First checkpoint (1-based) whose overall accuracy reaches `fraction` of the final one.
pub fn checkpoints_to_fraction(records: &[MetricsRecord], fraction: f64) -> Option<usize> {
    let target = fraction * records.last()?.acc_overall;
    records.iter().find(|r| r.acc_overall >= target).map(|r| r.checkpoint)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under master seed `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    splitmix64(splitmix64(seed) ^ (trial as u64).wrapping_mul(0xA24B_AED4_963E_E407))
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub records: Vec<MetricsRecord>,
    pub model: Model,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub categories: Vec<String>,
    /// All records ordered by `(trial, checkpoint)`.
    pub records: Vec<MetricsRecord>,
    /// Final model of every trial.
    pub models: Vec<Model>,
}

impl RunResult {
    pub fn trial_records(&self, trial: usize) -> Vec<MetricsRecord> {
        self.records.iter().filter(|r| r.trial == trial).cloned().collect()
    }

    pub fn final_records(&self) -> Vec<&MetricsRecord> {
        let last = self.records.iter().map(|r| r.checkpoint).max().unwrap_or(0);
        self.records.iter().filter(|r| r.checkpoint == last).collect()
    }

    pub fn final_mean_accuracy(&self) -> f64 {
        let finals = self.final_records();
        finals.iter().map(|r| r.acc_overall).sum::<f64>() / finals.len().max(1) as f64
    }
}

fn bounds<'a>(frames: impl Iterator<Item = &'a [f64]>, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut low = vec![f64::INFINITY; dim];
    let mut high = vec![f64::NEG_INFINITY; dim];
    for f in frames {
        for i in 0..dim {
            low[i] = low[i].min(f[i]);
            high[i] = high[i].max(f[i]);
        }
    }
    for i in 0..dim {
        let pad = STATIC_INIT_MARGIN * (high[i] - low[i]);
        low[i] -= pad;
        high[i] += pad;
    }
    (low, high)
}

struct TrialPlan<'a> {
    /// Training units presented between checkpoints.
    episodes: Vec<Vec<&'a SequenceInfo>>,
    /// Categories encountered once each episode has been presented.
    encountered: Vec<Vec<bool>>,
    /// Frames whose range seeds the static network.
    init_frames: Vec<&'a SequenceInfo>,
}

fn plan_incremental<'a>(train: &'a Dataset, categories: &[String], rng: &mut ChaCha8Rng) -> TrialPlan<'a> {
    let mut order: Vec<usize> = (0..categories.len()).collect();
    order.shuffle(rng);
    let mut sessions = train.sessions();
    sessions.shuffle(rng);

    let mut seen = vec![false; categories.len()];
    let mut episodes = Vec::new();
    let mut encountered = Vec::new();
    for &c in &order {
        let batch: Vec<&SequenceInfo> = sessions
            .iter()
            .flat_map(|&s| {
                train
                    .sequences()
                    .iter()
                    .filter(move |q| q.session == s && q.category == categories[c])
            })
            .collect();
        seen[c] = true;
        episodes.push(batch);
        encountered.push(seen.clone());
    }
    TrialPlan {
        init_frames: episodes.first().cloned().unwrap_or_default(),
        episodes,
        encountered,
    }
}

fn plan_batch<'a>(train: &'a Dataset, categories: &[String], epochs: usize, rng: &mut ChaCha8Rng) -> TrialPlan<'a> {
    let all: Vec<&SequenceInfo> = train.sequences().iter().collect();
    let episodes: Vec<Vec<&SequenceInfo>> = (0..epochs)
        .map(|_| {
            let mut e = all.clone();
            e.shuffle(rng);
            e
        })
        .collect();
    TrialPlan {
        encountered: vec![vec![true; categories.len()]; epochs],
        episodes,
        init_frames: all,
    }
}

fn build_network(spec: &ProtocolSpec, train: &Dataset, plan: &TrialPlan<'_>, seed: u64) -> Result<Network> {
    let dim = train.dim();
    match spec.mode {
        Mode::Static => {
            let frames = plan
                .init_frames
                .iter()
                .flat_map(|s| train.sequence_frames(s))
                .map(|f| f.features.as_slice());
            let (low, high) = bounds(frames, dim);
            if low.iter().any(|v| !v.is_finite()) {
                return Err(GwrError::config("no training frames to initialize the static network"));
            }
            Network::init_static(dim, spec.hyper.clone(), &low, &high, splitmix64(seed ^ 0x5741_5449))
        }
        Mode::Growing => {
            let mut frames = plan
                .episodes
                .first()
                .into_iter()
                .flatten()
                .flat_map(|s| train.sequence_frames(s));
            match (frames.next(), frames.next()) {
                (Some(a), Some(b)) => Network::init_growing(dim, spec.hyper.clone(), &a.features, &b.features),
                _ => Err(GwrError::config("growing network needs at least two training frames")),
            }
        }
    }
}

/// Runs one trial. `observer` sees every training-step outcome (not replay).
pub fn run_trial(
    spec: &ProtocolSpec,
    split: &Split,
    categories: &[String],
    trial: usize,
    observer: &mut dyn FnMut(&StepOutcome),
) -> Result<TrialResult> {
    let started = Instant::now();
    let seed = trial_seed(spec.seed, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = &split.train;
    let plan = match spec.kind {
        ProtocolKind::Incremental => plan_incremental(train, categories, &mut rng),
        ProtocolKind::Batch => plan_batch(train, categories, spec.epochs.unwrap_or(1), &mut rng),
    };
    let mut model = Model::new(build_network(spec, train, &plan, seed)?);

    let mut records: Vec<MetricsRecord> = Vec::with_capacity(plan.episodes.len());
    for (i, (episode, encountered)) in plan.episodes.iter().zip(&plan.encountered).enumerate() {
        for seq in episode {
            model.network.reset_context();
            for f in train.sequence_frames(seq) {
                let out = model.step(&f.features, Some(&f.instance))?;
                observer(&out);
            }
        }
        model.network.reset_context();
        let replay_steps = if spec.replay { model.replay()?.steps } else { 0 };

        let eval = evaluate(&model, &split.test, categories, encountered)?;
        let forgetting_mean = mean_forgetting(&records, &eval.per_category, encountered);
        records.push(MetricsRecord {
            trial,
            checkpoint: i + 1,
            mode: spec.mode,
            replay: spec.replay,
            n_neurons: model.network.len(),
            acc_overall: eval.overall,
            acc_seen: eval.seen,
            per_category: eval.per_category,
            encountered: encountered.clone(),
            forgetting_mean,
            replay_steps,
            wall_ms: if spec.wall_clock { started.elapsed().as_millis() as u64 } else { 0 },
        });
    }
    Ok(TrialResult { records, model })
}

fn check_split(split: &Split) -> Result<Vec<String>> {
    if split.train.len() < 2 {
        return Err(GwrError::config("training split needs at least two frames"));
    }
    if split.test.is_empty() {
        return Err(GwrError::config("test split is empty"));
    }
    if split.train.dim() != split.test.dim() {
        return Err(GwrError::config("train and test dimensions differ"));
    }
    let mut categories = split.train.categories();
    for c in split.test.categories() {
        if !categories.contains(&c) {
            categories.push(c);
        }
    }
    categories.sort();
    Ok(categories)
}

/// Runs every trial of `spec` and gathers the results in trial order.
pub fn run(spec: &ProtocolSpec, split: &Split) -> Result<RunResult> {
    spec.validate()?;
    let categories = check_split(split)?;
    let go = || -> Result<Vec<TrialResult>> {
        (0..spec.trials)
            .into_par_iter()
            .map(|t| run_trial(spec, split, &categories, t, &mut |_| {}))
            .collect()
    };
    let trials = match spec.parallel_trials {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| GwrError::InvalidState(e.to_string()))?
            .install(go)?,
        None => go()?,
    };
    let mut records = Vec::new();
    let mut models = Vec::new();
    for t in trials {
        records.extend(t.records);
        models.push(t.model);
    }
    Ok(RunResult {
        categories,
        records,
        models,
    })
}

pub fn run_batch(spec: &ProtocolSpec, split: &Split) -> Result<RunResult> {
    if spec.kind != ProtocolKind::Batch {
        return Err(GwrError::config("run_batch needs a batch protocol spec"));
    }
    run(spec, split)
}

pub fn run_incremental(spec: &ProtocolSpec, split: &Split) -> Result<RunResult> {
    if spec.kind != ProtocolKind::Incremental {
        return Err(GwrError::config("run_incremental needs an incremental protocol spec"));
    }
    run(spec, split)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation (zero for a single value).
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let n = v.len() as f64;
        if v.is_empty() {
            return MeanStd { mean: 0.0, std: 0.0 };
        }
        let mean = v.iter().sum::<f64>() / n;
        let std = if v.len() > 1 {
            (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSummary {
    pub checkpoint: usize,
    pub trials: usize,
    pub acc_overall: MeanStd,
    pub acc_seen: MeanStd,
    pub n_neurons: MeanStd,
    pub forgetting_mean: MeanStd,
    pub replay_steps: MeanStd,
    pub per_category: Vec<MeanStd>,
}

/// Mean and standard deviation across trials at every checkpoint.
pub fn summarize(records: &[MetricsRecord]) -> Vec<CheckpointSummary> {
    let last = records.iter().map(|r| r.checkpoint).max().unwrap_or(0);
    (1..=last)
        .filter_map(|cp| {
            let rows: Vec<&MetricsRecord> = records.iter().filter(|r| r.checkpoint == cp).collect();
            let first = rows.first()?;
            let field = |f: &dyn Fn(&MetricsRecord) -> f64| MeanStd::of(rows.iter().map(|r| f(r)));
            Some(CheckpointSummary {
                checkpoint: cp,
                trials: rows.len(),
                acc_overall: field(&|r| r.acc_overall),
                acc_seen: field(&|r| r.acc_seen),
                n_neurons: field(&|r| r.n_neurons as f64),
                forgetting_mean: field(&|r| r.forgetting_mean),
                replay_steps: field(&|r| r.replay_steps as f64),
                per_category: (0..first.per_category.len())
                    .map(|c| MeanStd::of(rows.iter().map(|r| r.per_category[c])))
                    .collect(),
            })
        })
        .collect()
}

/// Writes the metrics CSV: one row per `(trial, checkpoint)`.
pub fn write_metrics_csv<W: std::io::Write>(out: W, categories: &[String], records: &[MetricsRecord]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(out);
    write!(
        w,
        "trial,checkpoint,mode,replay,n_neurons,acc_overall,acc_seen,forgetting_mean,replay_steps,wall_ms"
    )?;
    for c in categories {
        write!(w, ",acc_{c}")?;
    }
    writeln!(w)?;
    for r in records {
        write!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.trial,
            r.checkpoint,
            r.mode,
            r.replay,
            r.n_neurons,
            r.acc_overall,
            r.acc_seen,
            r.forgetting_mean,
            r.replay_steps,
            r.wall_ms
        )?;
        for a in &r.per_category {
            write!(w, ",{a}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}
