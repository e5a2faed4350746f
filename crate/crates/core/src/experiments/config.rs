use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{KernelKind, Micromodulus};
use crate::solver::{InitialData, ProblemSpec, ToleranceSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Validate,
    Discontinuous,
    Compare,
    Bench,
    Solve,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Validate => "validate",
            ExperimentKind::Discontinuous => "discontinuous",
            ExperimentKind::Compare => "compare",
            ExperimentKind::Bench => "bench",
            ExperimentKind::Solve => "solve",
        }
    }
}

/// Initial displacement profiles used by the studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// `e^{−x²}`
    Gaussian,
    /// `x / 2`
    Linear,
    /// `χ_[0,1]`, one on the closed interval.
    Indicator,
}

impl InitialCondition {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            InitialCondition::Gaussian => (-x * x).exp(),
            InitialCondition::Linear => 0.5 * x,
            InitialCondition::Indicator => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn data(self) -> InitialData {
        InitialData::function(move |x| self.eval(x))
    }
}

/// Gaussian micromodulus `amplitude · exp(−rate ξ²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub truncate: bool,
    pub amplitude: f64,
    pub rate: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            truncate: false,
            amplitude: 1.0,
            rate: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub n_values: Vec<usize>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default = "default_ic")]
    pub ic: InitialCondition,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_output")]
    pub output_path: String,
    #[serde(default)]
    pub seed: u64,
}

fn default_horizon() -> f64 {
    0.1
}

fn default_ic() -> InitialCondition {
    InitialCondition::Gaussian
}

fn default_alpha() -> f64 {
    1.0
}

fn default_output() -> String {
    "out".to_string()
}

impl ExperimentConfig {
    /// Desk-scale defaults for each study.
    pub fn default_for(experiment: ExperimentKind) -> Self {
        let (n_values, ic) = match experiment {
            ExperimentKind::Validate => (vec![16, 32, 64], InitialCondition::Gaussian),
            ExperimentKind::Discontinuous => (vec![16, 32, 64], InitialCondition::Indicator),
            ExperimentKind::Compare => (vec![16, 32, 64], InitialCondition::Gaussian),
            ExperimentKind::Bench => (vec![32, 64, 128], InitialCondition::Gaussian),
            ExperimentKind::Solve => (vec![32], InitialCondition::Gaussian),
        };
        Self {
            experiment,
            n_values,
            horizon: default_horizon(),
            kernel: KernelConfig::default(),
            ic,
            alpha: default_alpha(),
            output_path: default_output(),
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_values.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("n_values must be strictly increasing, got {:?}", self.n_values));
        }
        if let Some(&n) = self.n_values.first() {
            if n < 2 {
                return bad(format!("every degree must be at least 2, got {n}"));
            }
        }
        if self.n_values.is_empty() && self.experiment != ExperimentKind::Bench {
            return bad(format!(
                "{} needs at least one degree in n_values",
                self.experiment.name()
            ));
        }
        if !(self.horizon > 0.0 && self.horizon < 1.0) {
            return bad(format!("horizon must lie in (0, 1), got {}", self.horizon));
        }
        if !(self.kernel.amplitude.is_finite() && self.kernel.amplitude >= 0.0) {
            return bad(format!(
                "kernel amplitude must be non-negative, got {}",
                self.kernel.amplitude
            ));
        }
        if !(self.kernel.rate.is_finite() && self.kernel.rate >= 0.0) {
            return bad(format!("kernel rate must be non-negative, got {}", self.kernel.rate));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        self.kernel().map_err(|e| Error::Config(e.to_string()))?;
        let required = match self.experiment {
            ExperimentKind::Validate | ExperimentKind::Compare => Some(InitialCondition::Gaussian),
            ExperimentKind::Discontinuous => Some(InitialCondition::Indicator),
            ExperimentKind::Bench | ExperimentKind::Solve => None,
        };
        if let Some(ic) = required {
            if ic != self.ic {
                return bad(format!(
                    "{} runs with the {ic:?} initial condition, got {:?}",
                    self.experiment.name(),
                    self.ic
                ));
            }
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<Micromodulus> {
        let kind = KernelKind::Gaussian {
            amplitude: self.kernel.amplitude,
            rate: self.kernel.rate,
        };
        Micromodulus::new(kind, self.horizon, self.kernel.truncate)
    }

    pub fn tolerance(&self) -> ToleranceSpec {
        ToleranceSpec::power(self.alpha)
    }

    /// The problem on `[−1, 1]²` at degree `n`, zero initial velocity.
    pub fn problem(&self, n: usize) -> Result<ProblemSpec> {
        ProblemSpec::new(n, self.kernel()?, self.ic.data(), InitialData::zero())
    }
}
