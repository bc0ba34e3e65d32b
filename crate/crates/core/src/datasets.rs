//! Labeled, temporally ordered feature-vector streams.
//!
//! A [`Dataset`] is a list of frames ordered by `(session, sequence, frame)`,
//! with every `(session, sequence)` pair forming one contiguous run. The
//! synthetic generator mimics a small object-recognition corpus: categories
//! of object instances, each filmed once per acquisition session.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, Write};
use std::ops::Range;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GwrError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub features: Vec<f64>,
    pub category: String,
    pub instance: String,
    pub session: u32,
    pub sequence: u32,
    pub frame: u32,
}

/// One contiguous `(session, sequence)` run inside a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceInfo {
    pub session: u32,
    pub sequence: u32,
    pub category: String,
    pub instance: String,
    pub range: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    frames: Vec<Frame>,
    sequences: Vec<SequenceInfo>,
}

impl Dataset {
    /// Builds a dataset from frames that are already in stream order.
    pub fn from_frames(dim: usize, frames: Vec<Frame>) -> Result<Self> {
        let mut sequences: Vec<SequenceInfo> = Vec::new();
        for (i, f) in frames.iter().enumerate() {
            if f.features.len() != dim {
                return Err(GwrError::DimensionMismatch {
                    expected: dim,
                    found: f.features.len(),
                });
            }
            match sequences.last_mut() {
                Some(s) if s.session == f.session && s.sequence == f.sequence => {
                    if f.frame <= frames[i - 1].frame {
                        return Err(GwrError::config(format!(
                            "frame index {} not increasing in session {} sequence {}",
                            f.frame, f.session, f.sequence
                        )));
                    }
                    if f.category != s.category || f.instance != s.instance {
                        return Err(GwrError::config(format!(
                            "labels change inside session {} sequence {}",
                            f.session, f.sequence
                        )));
                    }
                    s.range.end = i + 1;
                }
                prev => {
                    if let Some(p) = prev {
                        if (f.session, f.sequence) < (p.session, p.sequence) {
                            return Err(GwrError::config(format!(
                                "session {} sequence {} out of order",
                                f.session, f.sequence
                            )));
                        }
                    }
                    sequences.push(SequenceInfo {
                        session: f.session,
                        sequence: f.sequence,
                        category: f.category.clone(),
                        instance: f.instance.clone(),
                        range: i..i + 1,
                    });
                }
            }
        }
        Ok(Dataset { dim, frames, sequences })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn sequences(&self) -> &[SequenceInfo] {
        &self.sequences
    }

    pub fn sequence_frames(&self, seq: &SequenceInfo) -> &[Frame] {
        &self.frames[seq.range.clone()]
    }

    pub fn sessions(&self) -> Vec<u32> {
        self.sequences.iter().map(|s| s.session).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Category labels in sorted order.
    pub fn categories(&self) -> Vec<String> {
        self.sequences
            .iter()
            .map(|s| s.category.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn instances(&self) -> Vec<String> {
        self.sequences
            .iter()
            .map(|s| s.instance.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    fn filter_sequences(&self, mut keep: impl FnMut(&SequenceInfo) -> bool) -> Dataset {
        let frames = self
            .sequences
            .iter()
            .filter(|s| keep(s))
            .flat_map(|s| self.frames[s.range.clone()].iter().cloned())
            .collect();
        Dataset::from_frames(self.dim, frames).expect("a subset of an ordered dataset stays ordered")
    }

    /// Writes the dataset in the feature CSV format.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = io::BufWriter::new(out);
        write!(w, "label_category,label_instance,session,sequence,frame")?;
        for i in 0..self.dim {
            write!(w, ",f{i}")?;
        }
        writeln!(w)?;
        for f in &self.frames {
            write!(w, "{},{},{},{},{}", f.category, f.instance, f.session, f.sequence, f.frame)?;
            for v in &f.features {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(File::create(path)?)?;
        Ok(())
    }
}

const FIXED_COLUMNS: [&str; 5] = ["label_category", "label_instance", "session", "sequence", "frame"];

/// Reads a feature CSV. Errors carry the 1-based line number.
pub fn load_features(path: &Path) -> Result<Dataset> {
    let file = File::open(path)?;
    read_features(file, path)
}

pub fn read_features<R: io::Read>(input: R, path: &Path) -> Result<Dataset> {
    let parse_err = |line: u64, message: String| GwrError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.len() <= FIXED_COLUMNS.len() || header.iter().take(5).ne(FIXED_COLUMNS.iter().copied()) {
        return Err(parse_err(
            1,
            format!("header must start with {} followed by feature columns", FIXED_COLUMNS.join(",")),
        ));
    }
    for (i, name) in header.iter().skip(5).enumerate() {
        if name != format!("f{i}") {
            return Err(parse_err(1, format!("expected feature column f{i}, found `{name}`")));
        }
    }
    let dim = header.len() - FIXED_COLUMNS.len();

    let mut frames = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(parse_err(line, format!("expected {} columns, found {}", header.len(), rec.len())));
        }
        let int = |i: usize| {
            rec[i]
                .trim()
                .parse::<u32>()
                .map_err(|e| parse_err(line, format!("column {}: {e}", FIXED_COLUMNS[i])))
        };
        let features = rec
            .iter()
            .skip(5)
            .enumerate()
            .map(|(i, v)| {
                v.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_err(line, format!("column f{i}: invalid number `{v}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let frame = Frame {
            category: rec[0].to_owned(),
            instance: rec[1].to_owned(),
            session: int(2)?,
            sequence: int(3)?,
            frame: int(4)?,
            features,
        };
        if let Some(prev) = frames.last() {
            let prev: &Frame = prev;
            let key = (frame.session, frame.sequence);
            let prev_key = (prev.session, prev.sequence);
            if key < prev_key {
                return Err(parse_err(line, "rows not ordered by (session, sequence)".into()));
            }
            if key == prev_key && frame.frame <= prev.frame {
                return Err(parse_err(line, format!("frame index {} not increasing", frame.frame)));
            }
            if key == prev_key && (frame.category != prev.category || frame.instance != prev.instance) {
                return Err(parse_err(line, "labels change inside a sequence".into()));
            }
        }
        frames.push(frame);
    }
    Dataset::from_frames(dim, frames)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub categories: usize,
    pub instances: usize,
    pub sessions: usize,
    pub dim: usize,
    pub frames_per_seq: usize,
    /// Std of instance offsets from their category center.
    pub cluster_spread: f64,
    /// Std of one random-walk step.
    pub walk_step: f64,
    /// Std of i.i.d. observation noise.
    pub noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            categories: 10,
            instances: 5,
            sessions: 11,
            dim: 16,
            frames_per_seq: 20,
            cluster_spread: 0.4,
            walk_step: 0.1,
            noise: 0.1,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.categories == 0 || self.instances == 0 || self.sessions == 0 {
            return Err(GwrError::config("categories, instances and sessions must be at least 1"));
        }
        if self.dim < 2 {
            return Err(GwrError::config(format!("dim must be at least 2, got {}", self.dim)));
        }
        if self.frames_per_seq == 0 {
            return Err(GwrError::config("frames_per_seq must be at least 1"));
        }
        for (name, v) in [
            ("cluster_spread", self.cluster_spread),
            ("walk_step", self.walk_step),
            ("noise", self.noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(GwrError::config(format!("{name} must be finite and nonnegative")));
            }
        }
        Ok(())
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, std: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * std
        })
        .collect()
}

fn label(prefix: char, index: usize, count: usize) -> String {
    let width = count.to_string().len();
    format!("{prefix}{:0width$}", index + 1)
}

/// Deterministic synthetic corpus.
///
/// Sessions are numbered from 1, sequences by the global instance index, and
/// labels look like `c03` / `o12`.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let SyntheticSpec {
        categories,
        instances,
        sessions,
        dim,
        frames_per_seq,
        cluster_spread,
        walk_step,
        noise,
    } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let centers: Vec<Vec<f64>> = (0..categories)
        .map(|_| {
            let mut v = gaussian(&mut rng, dim, 1.0);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            v.iter_mut().for_each(|x| *x /= norm);
            v
        })
        .collect();
    let n_instances = categories * instances;
    let prototypes: Vec<Vec<f64>> = (0..n_instances)
        .map(|i| {
            let offset = gaussian(&mut rng, dim, cluster_spread);
            centers[i / instances].iter().zip(offset).map(|(c, o)| c + o).collect()
        })
        .collect();

    let bound = 3.0 * walk_step;
    let mut frames = Vec::with_capacity(n_instances * sessions * frames_per_seq);
    for session in 1..=sessions as u32 {
        for (inst, proto) in prototypes.iter().enumerate() {
            let shift = gaussian(&mut rng, dim, cluster_spread / 2.0);
            let center: Vec<f64> = proto.iter().zip(&shift).map(|(p, s)| p + s).collect();
            let mut walk = vec![0.0; dim];
            for frame in 0..frames_per_seq as u32 {
                if frame > 0 {
                    for (w, step) in walk.iter_mut().zip(gaussian(&mut rng, dim, walk_step)) {
                        *w = (*w + step).clamp(-bound, bound);
                    }
                }
                let obs = gaussian(&mut rng, dim, noise);
                let features = center.iter().zip(&walk).zip(obs).map(|((c, w), o)| c + w + o).collect();
                frames.push(Frame {
                    features,
                    category: label('c', inst / instances, categories),
                    instance: label('o', inst, n_instances),
                    session,
                    sequence: inst as u32,
                    frame,
                });
            }
        }
    }
    Dataset::from_frames(dim, frames)
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub warnings: Vec<String>,
}

/// Partitions a dataset by session id.
pub fn split_by_sessions(dataset: &Dataset, test_sessions: &[u32]) -> Result<Split> {
    let known = dataset.sessions();
    if let Some(bad) = test_sessions.iter().find(|s| !known.contains(s)) {
        return Err(GwrError::config(format!("unknown test session {bad}")));
    }
    let train = dataset.filter_sequences(|s| !test_sessions.contains(&s.session));
    let test = dataset.filter_sequences(|s| test_sessions.contains(&s.session));
    let mut warnings = Vec::new();
    if train.is_empty() {
        warnings.push("every session is a test session; the training split is empty".to_owned());
    }
    Ok(Split { train, test, warnings })
}

/// Sessions 3, 7 and 10 when present; otherwise three sessions at the same
/// relative positions.
pub fn default_test_sessions(sessions: &[u32]) -> Vec<u32> {
    if [3, 7, 10].iter().all(|s| sessions.contains(s)) {
        return vec![3, 7, 10];
    }
    if sessions.len() < 2 {
        return Vec::new();
    }
    let n = sessions.len();
    let mut picked: Vec<u32> = [3usize, 7, 10]
        .iter()
        .map(|&p| sessions[((p * n + 5) / 11).clamp(1, n) - 1])
        .collect();
    picked.dedup();
    if picked.len() >= n {
        picked.truncate(n - 1);
    }
    picked
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SyntheticSpec {
        SyntheticSpec {
            categories: 2,
            instances: 2,
            sessions: 3,
            dim: 3,
            frames_per_seq: 4,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn default_corpus_shape() {
        let spec = SyntheticSpec::default();
        let d = generate_synthetic(&spec, 7).unwrap();
        assert_eq!(d.sequences().len(), 10 * 5 * 11);
        assert_eq!(d.len(), 11000);
        assert_eq!(d.dim(), 16);
        assert_eq!(d.categories().len(), 10);
        assert_eq!(d.instances().len(), 50);
        assert_eq!(d.sessions(), (1..=11).collect::<Vec<_>>());
    }

    #[test]
    fn generator_is_deterministic() {
        assert_eq!(generate_synthetic(&tiny(), 3).unwrap(), generate_synthetic(&tiny(), 3).unwrap());
        assert_ne!(generate_synthetic(&tiny(), 3).unwrap(), generate_synthetic(&tiny(), 4).unwrap());
    }

    #[test]
    fn degenerate_spec_gives_constant_sequences() {
        let spec = SyntheticSpec {
            noise: 0.0,
            walk_step: 0.0,
            ..tiny()
        };
        let d = generate_synthetic(&spec, 1).unwrap();
        for s in d.sequences() {
            let frames = d.sequence_frames(s);
            assert!(frames.iter().all(|f| f.features == frames[0].features));
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_synthetic(&SyntheticSpec { dim: 1, ..tiny() }, 1).is_err());
        assert!(generate_synthetic(&SyntheticSpec { categories: 0, ..tiny() }, 1).is_err());
        assert!(generate_synthetic(&SyntheticSpec { noise: -1.0, ..tiny() }, 1).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = generate_synthetic(&tiny(), 11).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = read_features(buf.as_slice(), Path::new("mem.csv")).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn loader_reads_small_file() {
        let text = "label_category,label_instance,session,sequence,frame,f0,f1\n\
                    c1,o1,1,0,0,0.5,1\n\
                    c1,o1,1,0,1,0.25,-1e-3\n\
                    c2,o3,2,2,0,3,4\n";
        let d = read_features(text.as_bytes(), Path::new("x.csv")).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.sessions(), vec![1, 2]);
        let split = split_by_sessions(&d, &[2]).unwrap();
        assert_eq!(split.train.len(), 2);
        assert_eq!(split.test.len(), 1);
    }

    #[test]
    fn loader_errors_name_the_line() {
        let text = "label_category,label_instance,session,sequence,frame,f0,f1\n\
                    c1,o1,1,0,0,0.5,1\n\
                    c1,o1,1,0,1,0.25\n";
        let err = read_features(text.as_bytes(), Path::new("x.csv")).unwrap_err();
        assert!(matches!(err, GwrError::Parse { line: 3, .. }), "{err}");

        let text = "label_category,label_instance,session,sequence,frame,f0\n\
                    c1,o1,1,0,1,0.5\n\
                    c1,o1,1,0,1,0.5\n";
        let err = read_features(text.as_bytes(), Path::new("x.csv")).unwrap_err();
        assert!(matches!(err, GwrError::Parse { line: 3, .. }), "{err}");

        let text = "cat,label_instance,session,sequence,frame,f0\n";
        let err = read_features(text.as_bytes(), Path::new("x.csv")).unwrap_err();
        assert!(matches!(err, GwrError::Parse { line: 1, .. }), "{err}");

        let text = "label_category,label_instance,session,sequence,frame,f0\nc,o,1,0,0,abc\n";
        assert!(read_features(text.as_bytes(), Path::new("x.csv")).is_err());
    }

    #[test]
    fn session_split() {
        let d = generate_synthetic(&SyntheticSpec::default(), 2).unwrap();
        let split = split_by_sessions(&d, &[3, 7, 10]).unwrap();
        assert_eq!(split.train.sessions().len(), 8);
        assert_eq!(split.test.sessions(), vec![3, 7, 10]);
        assert_eq!(split.train.len() + split.test.len(), d.len());
        assert!(split.warnings.is_empty());

        let all = d.sessions();
        let split = split_by_sessions(&d, &all).unwrap();
        assert!(split.train.is_empty());
        assert_eq!(split.warnings.len(), 1);

        assert!(split_by_sessions(&d, &[12]).is_err());
    }

    #[test]
    fn default_test_sessions_scale() {
        assert_eq!(default_test_sessions(&(1..=11).collect::<Vec<_>>()), vec![3, 7, 10]);
        let five: Vec<u32> = (1..=5).collect();
        let t = default_test_sessions(&five);
        assert!(!t.is_empty() && t.len() < 5);
        assert!(default_test_sessions(&[1]).is_empty());
    }
}
