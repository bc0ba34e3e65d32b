//! The `gwr` command line.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on validation failure.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::datasets::{self, Dataset, SyntheticSpec};
use crate::error::GwrError;
use crate::network::Mode;
use crate::protocols::{self, CheckpointSummary, ProtocolKind};
use crate::snapshot;

#[derive(Debug, Parser)]
#[command(name = "gwr", version, about = "Recurrent grow-when-required networks and continual-learning experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic feature CSV.
    GenData(GenDataArgs),
    /// Run a batch or incremental experiment.
    Run(RunArgs),
    /// Compare the summaries of completed runs.
    Compare(CompareArgs),
    /// Pretty-print a model snapshot.
    SnapshotDump(DumpArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, default_value_t = 10)]
    pub categories: usize,
    #[arg(long, default_value_t = 5)]
    pub instances: usize,
    #[arg(long, default_value_t = 11)]
    pub sessions: usize,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 20)]
    pub frames: usize,
    #[arg(long)]
    pub spread: Option<f64>,
    #[arg(long)]
    pub walk: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub protocol: Option<ProtocolKind>,
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub replay: bool,
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Feature CSV; a synthetic corpus is generated when omitted.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Seed of the synthetic corpus.
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// Comma-separated test session ids.
    #[arg(long, value_delimiter = ',')]
    pub test_sessions: Option<Vec<u32>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the final model of every trial.
    #[arg(long)]
    pub snapshot: bool,
    #[arg(long)]
    pub parallel_trials: Option<usize>,
    /// Fill the wall_ms column (outputs are then no longer reproducible).
    #[arg(long)]
    pub wall_clock: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(required = true, num_args = 2..)]
    pub run_dirs: Vec<PathBuf>,
    /// Also write the table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    pub path: PathBuf,
    /// List every neuron.
    #[arg(long)]
    pub neurons: bool,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn validation(msg: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: msg.into(),
        }
    }

    fn runtime(msg: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: msg.into(),
        }
    }
}

impl From<GwrError> for CliError {
    fn from(e: GwrError) -> Self {
        CliError {
            code: if e.is_validation() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::runtime(e.to_string())
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

/// Parses `args` and executes the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(cli: Cli) -> CliResult {
    match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::SnapshotDump(a) => snapshot_dump(a),
    }
}

fn gen_data(a: GenDataArgs) -> CliResult {
    let defaults = SyntheticSpec::default();
    let spec = SyntheticSpec {
        categories: a.categories,
        instances: a.instances,
        sessions: a.sessions,
        dim: a.dim,
        frames_per_seq: a.frames,
        cluster_spread: a.spread.unwrap_or(defaults.cluster_spread),
        walk_step: a.walk.unwrap_or(defaults.walk_step),
        noise: a.noise.unwrap_or(defaults.noise),
    };
    let data = datasets::generate_synthetic(&spec, a.seed)?;
    data.save_csv(&a.out)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", a.out.display())))?;
    println!(
        "wrote {}: {} frames in {} sequences, dim {}",
        a.out.display(),
        data.len(),
        data.sequences().len(),
        data.dim()
    );
    Ok(())
}

fn resolve_config(a: &RunArgs) -> CliResult<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let p = &mut cfg.protocol;
    if let Some(k) = a.protocol {
        p.kind = k;
    }
    if let Some(m) = a.mode {
        p.mode = m;
    }
    if a.replay {
        p.replay = true;
    }
    if a.epochs.is_some() {
        p.epochs = a.epochs;
    }
    if let Some(t) = a.trials {
        p.trials = t;
    }
    if let Some(s) = a.seed {
        p.seed = s;
    }
    if let Some(ts) = &a.test_sessions {
        p.test_sessions = ts.clone();
    }
    if a.parallel_trials.is_some() {
        p.parallel_trials = a.parallel_trials;
    }
    if a.wall_clock {
        p.wall_clock = true;
    }
    if let Some(n) = a.nmax {
        cfg.model.n_max = n;
    }
    if let Some(d) = &a.data {
        cfg.dataset.path = Some(d.clone());
    }
    if let Some(s) = a.data_seed {
        cfg.dataset.seed = s;
    }
    if let Some(o) = &a.out {
        cfg.output.dir = Some(o.clone());
    }
    if a.snapshot {
        cfg.output.snapshot = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_dataset(cfg: &RunConfig) -> CliResult<Dataset> {
    match &cfg.dataset.path {
        Some(p) => {
            if !p.is_file() {
                return Err(CliError::validation(format!("dataset file {} not found", p.display())));
            }
            datasets::load_features(p).map_err(|e| match e {
                GwrError::Io(io) => CliError::validation(format!("cannot read {}: {io}", p.display())),
                other => other.into(),
            })
        }
        None => Ok(datasets::generate_synthetic(&cfg.dataset.synthetic, cfg.dataset.seed)?),
    }
}

/// Summary document written next to the metrics CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub test_sessions: Vec<u32>,
    pub categories: Vec<String>,
    pub checkpoints: Vec<CheckpointSummary>,
}

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.toml";

fn run(a: RunArgs) -> CliResult {
    let mut cfg = resolve_config(&a)?;
    let out_dir = cfg
        .output
        .dir
        .clone()
        .ok_or_else(|| CliError::validation("an output directory is required (--out or [output] dir)"))?;
    if out_dir.exists() && fs::read_dir(&out_dir).map(|mut d| d.next().is_some()).unwrap_or(true) {
        return Err(CliError::validation(format!(
            "output directory {} already exists and is not empty",
            out_dir.display()
        )));
    }
    let data = load_dataset(&cfg)?;
    if cfg.protocol.test_sessions.is_empty() {
        cfg.protocol.test_sessions = datasets::default_test_sessions(&data.sessions());
    }
    let split = datasets::split_by_sessions(&data, &cfg.protocol.test_sessions)?;
    for w in &split.warnings {
        eprintln!("warning: {w}");
    }
    let spec = cfg.protocol_spec();
    spec.validate()?;

    let result = protocols::run(&spec, &split)?;

    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join(CONFIG_FILE), cfg.to_toml())?;
    protocols::write_metrics_csv(
        fs::File::create(out_dir.join(METRICS_FILE))?,
        &result.categories,
        &result.records,
    )?;
    let summary = RunSummary {
        test_sessions: cfg.protocol.test_sessions.clone(),
        config: cfg.clone(),
        categories: result.categories.clone(),
        checkpoints: protocols::summarize(&result.records),
    };
    let mut json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::runtime(e.to_string()))?;
    json.push('\n');
    fs::write(out_dir.join(SUMMARY_FILE), json)?;
    if cfg.output.snapshot {
        let dir = out_dir.join("snapshots");
        fs::create_dir_all(&dir)?;
        for (t, m) in result.models.iter().enumerate() {
            snapshot::save(m, &dir.join(format!("trial_{t:03}.json")))?;
        }
    }

    let last = summary.checkpoints.last();
    println!(
        "{} {} replay={} trials={} checkpoints={} final acc {:.4} ± {:.4}, neurons {:.1}",
        cfg.protocol.kind,
        cfg.protocol.mode,
        cfg.protocol.replay,
        cfg.protocol.trials,
        summary.checkpoints.len(),
        last.map_or(0.0, |c| c.acc_overall.mean),
        last.map_or(0.0, |c| c.acc_overall.std),
        last.map_or(0.0, |c| c.n_neurons.mean),
    );
    println!("outputs in {}", out_dir.display());
    Ok(())
}

fn read_summary(dir: &Path) -> CliResult<RunSummary> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::validation(format!("{}: missing or unreadable {SUMMARY_FILE}: {e}", dir.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: invalid {SUMMARY_FILE}: {e}", dir.display())))
}

fn run_label(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

/// Aligned per-checkpoint table of mean ± std overall accuracy, with the
/// delta of every run against the first one.
pub struct Comparison {
    pub labels: Vec<String>,
    pub checkpoints: Vec<usize>,
    /// `[checkpoint][run]`
    pub cells: Vec<Vec<protocols::MeanStd>>,
}

impl Comparison {
    pub fn build(runs: &[(String, RunSummary)]) -> CliResult<Self> {
        let grid: Vec<usize> = runs[0].1.checkpoints.iter().map(|c| c.checkpoint).collect();
        for (label, s) in &runs[1..] {
            let other: Vec<usize> = s.checkpoints.iter().map(|c| c.checkpoint).collect();
            if other != grid {
                return Err(CliError::validation(format!(
                    "checkpoint grids differ: {} has {:?}, {} has {:?}",
                    runs[0].0, grid, label, other
                )));
            }
        }
        let cells = (0..grid.len())
            .map(|i| runs.iter().map(|(_, s)| s.checkpoints[i].acc_overall).collect())
            .collect();
        Ok(Comparison {
            labels: runs.iter().map(|(l, _)| l.clone()).collect(),
            checkpoints: grid,
            cells,
        })
    }

    /// Final-checkpoint mean accuracy of every run minus that of the first.
    pub fn final_deltas(&self) -> Vec<f64> {
        let Some(last) = self.cells.last() else {
            return vec![0.0; self.labels.len()];
        };
        last.iter().map(|c| c.mean - last[0].mean).collect()
    }

    pub fn to_text(&self) -> String {
        let width = self.labels.iter().map(|l| l.len()).max().unwrap_or(0).max(17);
        let mut s = format!("{:>10}", "checkpoint");
        for l in &self.labels {
            let _ = write!(s, "  {l:>width$}");
        }
        for l in &self.labels[1..] {
            let _ = write!(s, "  {:>width$}", format!("delta {l}"));
        }
        s.push('\n');
        for (cp, row) in self.checkpoints.iter().zip(&self.cells) {
            let _ = write!(s, "{cp:>10}");
            for c in row {
                let _ = write!(s, "  {:>width$}", format!("{:.4} ± {:.4}", c.mean, c.std));
            }
            for c in &row[1..] {
                let _ = write!(s, "  {:>width$}", format!("{:+.4}", c.mean - row[0].mean));
            }
            s.push('\n');
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("checkpoint");
        for l in &self.labels {
            let _ = write!(s, ",{l}_mean,{l}_std");
        }
        for l in &self.labels[1..] {
            let _ = write!(s, ",delta_{l}");
        }
        s.push('\n');
        for (cp, row) in self.checkpoints.iter().zip(&self.cells) {
            let _ = write!(s, "{cp}");
            for c in row {
                let _ = write!(s, ",{},{}", c.mean, c.std);
            }
            for c in &row[1..] {
                let _ = write!(s, ",{}", c.mean - row[0].mean);
            }
            s.push('\n');
        }
        s
    }
}

fn compare(a: CompareArgs) -> CliResult {
    let runs = a
        .run_dirs
        .iter()
        .map(|d| Ok((run_label(d), read_summary(d)?)))
        .collect::<CliResult<Vec<_>>>()?;
    let table = Comparison::build(&runs)?;
    print!("{}", table.to_text());
    let deltas = table.final_deltas();
    for (l, d) in table.labels.iter().zip(&deltas).skip(1) {
        println!("final delta {l} - {}: {:+.4}", table.labels[0], d);
    }
    if let Some(path) = a.csv {
        fs::write(&path, table.to_csv())
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn snapshot_dump(a: DumpArgs) -> CliResult {
    let text = fs::read_to_string(&a.path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", a.path.display())))?;
    let model = snapshot::from_str(&text)?;
    let net = &model.network;
    let h = net.hyper();
    let mut out = String::new();
    let _ = writeln!(out, "snapshot      {}", a.path.display());
    let _ = writeln!(out, "schema        {}", snapshot::SCHEMA_VERSION);
    let _ = writeln!(out, "mode          {}", net.mode());
    let _ = writeln!(out, "dim           {}", net.dim());
    let _ = writeln!(out, "neurons       {} / {}", net.len(), h.n_max);
    let _ = writeln!(out, "edges         {}", net.edge_count());
    let _ = writeln!(out, "steps         {}", net.step_count());
    let _ = writeln!(
        out,
        "hyper         a_T={} h_T={} tau_b={} tau_n={} kappa={} eps_b={} eps_n={} alpha={:?} beta={} rule={:?}",
        h.insertion_threshold, h.habituation_threshold, h.tau_b, h.tau_n, h.kappa, h.eps_b, h.eps_n, h.alpha, h.beta, h.context_rule
    );
    let _ = writeln!(
        out,
        "synapses      {} transitions over {} pairs",
        model.tables.synapses.total(),
        model.tables.synapses.triples().len()
    );
    let labels = &model.tables.labels;
    let labeled = (0..net.len() as u32)
        .filter(|&i| labels.predict(crate::NeuronId(i)).is_some())
        .count();
    let _ = writeln!(
        out,
        "labels        {} distinct, {} credits ({} from replay), {} labeled neurons",
        labels.labels().len(),
        labels.total(),
        labels.replay_tally(),
        labeled
    );
    let h_mean = net.neurons().iter().map(|n| n.habituation).sum::<f64>() / net.len() as f64;
    let _ = writeln!(out, "habituation   mean {h_mean:.4}");
    if a.neurons {
        let _ = writeln!(out, "\n{:>6} {:>8} {:>6} {:>10}  label", "id", "h", "degree", "|w|");
        for n in net.neurons() {
            let norm = n.weight.iter().map(|v| v * v).sum::<f64>().sqrt();
            let _ = writeln!(
                out,
                "{:>6} {:>8.4} {:>6} {:>10.4}  {}",
                n.id,
                n.habituation,
                net.neighbors(n.id).map_or(0, |s| s.len()),
                norm,
                labels.predict(n.id).unwrap_or("-")
            );
        }
    }
    std::io::stdout().write_all(out.as_bytes())?;
    Ok(())
}

impl std::str::FromStr for RunSummary {
    type Err = serde_json::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_str(s)
    }
}
