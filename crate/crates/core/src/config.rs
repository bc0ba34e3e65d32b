//! Run configuration: a TOML document with one section per subsystem.
//!
//! ```toml
//! [model]
//! n_max = 300
//!
//! [protocol]
//! kind = "incremental"
//! mode = "growing"
//! replay = true
//!
//! [dataset]
//! seed = 1
//! ```
//!
//! Unknown keys are rejected. Omitted keys take their defaults; command-line
//! flags override file values. The fully resolved document is echoed into the
//! run directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datasets::SyntheticSpec;
use crate::error::{GwrError, Result};
use crate::hyper::HyperParams;
use crate::network::Mode;
use crate::protocols::{ProtocolKind, ProtocolSpec};

/// Capacity used by the command line when none is given.
pub const DEFAULT_N_MAX: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    pub kind: ProtocolKind,
    pub mode: Mode,
    pub replay: bool,
    /// Required for batch, rejected for incremental.
    pub epochs: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Empty means the default session choice of the dataset.
    pub test_sessions: Vec<u32>,
    pub parallel_trials: Option<usize>,
    pub wall_clock: bool,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        ProtocolSection {
            kind: ProtocolKind::Incremental,
            mode: Mode::Growing,
            replay: false,
            epochs: None,
            trials: 10,
            seed: 1,
            test_sessions: Vec::new(),
            parallel_trials: None,
            wall_clock: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    /// Feature CSV; when absent a synthetic corpus is generated.
    pub path: Option<PathBuf>,
    pub seed: u64,
    pub synthetic: SyntheticSpec,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            path: None,
            seed: 1,
            synthetic: SyntheticSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub snapshot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: HyperParams,
    pub protocol: ProtocolSection,
    pub dataset: DatasetSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: HyperParams::default().with_n_max(DEFAULT_N_MAX),
            protocol: ProtocolSection::default(),
            dataset: DatasetSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| GwrError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GwrError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.protocol_spec().validate()?;
        if self.protocol.kind == ProtocolKind::Incremental && self.protocol.epochs.is_some() {
            return Err(GwrError::config("epochs only applies to the batch protocol"));
        }
        // TOML integers are signed 64-bit.
        if self.protocol.seed > i64::MAX as u64 || self.dataset.seed > i64::MAX as u64 {
            return Err(GwrError::config("seeds must not exceed 2^63 - 1"));
        }
        if self.dataset.path.is_none() {
            self.dataset.synthetic.validate()?;
        }
        Ok(())
    }

    pub fn protocol_spec(&self) -> ProtocolSpec {
        let p = &self.protocol;
        ProtocolSpec {
            kind: p.kind,
            mode: p.mode,
            replay: p.replay,
            epochs: p.epochs,
            trials: p.trials,
            seed: p.seed,
            hyper: self.model.clone(),
            parallel_trials: p.parallel_trials,
            wall_clock: p.wall_clock,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(c.model.n_max, DEFAULT_N_MAX);
        assert_eq!(c.model.alpha, vec![0.67, 0.24, 0.09]);
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_document() {
        let c = RunConfig::from_toml(
            r#"
            [model]
            n_max = 120
            [protocol]
            kind = "batch"
            mode = "static"
            epochs = 4
            "#,
        )
        .unwrap();
        assert_eq!(c.model.n_max, 120);
        assert_eq!(c.model.beta, 0.7);
        assert_eq!(c.protocol.kind, ProtocolKind::Batch);
        assert_eq!(c.protocol.trials, 10);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn rejects_unknown_keys_and_conflicts() {
        assert!(RunConfig::from_toml("[model]\nbogus = 1\n").is_err());
        assert!(RunConfig::from_toml("[nope]\n").is_err());
        let c = RunConfig::from_toml("[protocol]\nkind = \"batch\"\n").unwrap();
        assert!(c.validate().is_err());
        let c = RunConfig::from_toml("[protocol]\nkind = \"batch\"\nepochs = 0\n").unwrap();
        assert!(c.validate().is_err());
        let c = RunConfig::from_toml("[protocol]\ntrials = 0\n").unwrap();
        assert!(c.validate().is_err());
    }
}
