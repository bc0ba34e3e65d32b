//! Hyperparameters of the recurrent GWR network.

use serde::{Deserialize, Serialize};

use crate::error::{GwrError, Result};

/// How the global temporal context is propagated from the previous winner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ContextRule {
    /// `C_k = beta * w_b + (1 - beta) * c_{b,k-1}` with `c_{b,0} = w_b`.
    ///
    /// Each depth reads one level further back, so the K descriptors form a
    /// decaying trace of the winner history.
    #[default]
    Recursive,
    /// `C_k = beta * w_b + (1 - beta) * c_{b,k}`.
    ///
    /// Every depth follows the same recursion; kept for comparison runs.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperParams {
    /// Activity below which a new neuron may be inserted.
    pub insertion_threshold: f64,
    /// Winner habituation below which a new neuron may be inserted.
    pub habituation_threshold: f64,
    pub tau_b: f64,
    pub tau_n: f64,
    pub kappa: f64,
    pub eps_b: f64,
    pub eps_n: f64,
    /// Weights of the input term (index 0) and the K context terms.
    pub alpha: Vec<f64>,
    pub beta: f64,
    /// Capacity bound on the number of neurons.
    pub n_max: usize,
    pub context_rule: ContextRule,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            insertion_threshold: 0.3,
            habituation_threshold: 0.1,
            tau_b: 0.3,
            tau_n: 0.1,
            kappa: 1.05,
            eps_b: 0.5,
            eps_n: 0.005,
            alpha: vec![0.67, 0.24, 0.09],
            beta: 0.7,
            n_max: 2500,
            context_rule: ContextRule::Recursive,
        }
    }
}

impl HyperParams {
    /// Temporal depth K.
    pub fn depth(&self) -> usize {
        self.alpha.len().saturating_sub(1)
    }

    /// Habituation fixed point `1 - 1/kappa`.
    pub fn habituation_floor(&self) -> f64 {
        1.0 - 1.0 / self.kappa
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit_open = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(GwrError::config(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        unit_open("insertion_threshold", self.insertion_threshold)?;
        unit_open("habituation_threshold", self.habituation_threshold)?;
        unit_open("eps_b", self.eps_b)?;
        unit_open("eps_n", self.eps_n)?;
        unit_open("beta", self.beta)?;
        if !(self.tau_b > 0.0 && self.tau_n > 0.0) {
            return Err(GwrError::config("tau_b and tau_n must be positive"));
        }
        if !(self.kappa > 1.0 && self.kappa.is_finite()) {
            return Err(GwrError::config(format!("kappa must exceed 1, got {}", self.kappa)));
        }
        // Past tau * kappa = 1 the counter overshoots below 1 - 1/kappa and oscillates.
        if self.tau_b * self.kappa > 1.0 || self.tau_n * self.kappa > 1.0 {
            return Err(GwrError::config("tau_b * kappa and tau_n * kappa must not exceed 1"));
        }
        if self.eps_n >= self.eps_b {
            return Err(GwrError::config("eps_n must be smaller than eps_b"));
        }
        if self.alpha.is_empty() {
            return Err(GwrError::config("alpha needs at least the input weight alpha_0"));
        }
        if self.alpha.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(GwrError::config("alpha entries must be finite and nonnegative"));
        }
        if self.n_max < 2 {
            return Err(GwrError::config("n_max must be at least 2"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_table() {
        let h = HyperParams::default();
        assert_eq!(h.insertion_threshold, 0.3);
        assert_eq!(h.habituation_threshold, 0.1);
        assert_eq!(h.tau_b, 0.3);
        assert_eq!(h.tau_n, 0.1);
        assert_eq!(h.kappa, 1.05);
        assert_eq!(h.depth(), 2);
        assert_eq!(h.alpha, vec![0.67, 0.24, 0.09]);
        assert_eq!(h.beta, 0.7);
        assert_eq!(h.eps_b, 0.5);
        assert_eq!(h.eps_n, 0.005);
        assert!(h.validate().is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        let mut h = HyperParams::default();
        h.kappa = 1.0;
        assert!(h.validate().is_err());

        let mut h = HyperParams::default();
        h.eps_n = 0.6;
        assert!(h.validate().is_err());

        let mut h = HyperParams::default();
        h.alpha = vec![0.5, -0.1];
        assert!(h.validate().is_err());

        let mut h = HyperParams::default();
        h.alpha.clear();
        assert!(h.validate().is_err());

        let mut h = HyperParams::default();
        h.tau_b = 0.96;
        assert!(h.validate().is_err());
    }
}
