use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Shape of the micromodulus before any horizon truncation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    /// `C(ξ) = amplitude · exp(-rate · ξ²)`.
    Gaussian { amplitude: f64, rate: f64 },
    /// Samples of `C` at `ξ = i · spacing`, `i = 0, 1, …`, linearly
    /// interpolated, extended evenly to negative `ξ` and by zero past the
    /// last sample.
    Tabulated { spacing: f64, values: Vec<f64> },
}

impl KernelKind {
    fn eval_abs(&self, a: f64) -> f64 {
        match self {
            KernelKind::Gaussian { amplitude, rate } => amplitude * (-rate * a * a).exp(),
            KernelKind::Tabulated { spacing, values } => {
                let pos = a / spacing;
                let i = pos.floor() as usize;
                if i + 1 >= values.len() {
                    if i + 1 == values.len() && pos == i as f64 {
                        values[i]
                    } else {
                        0.0
                    }
                } else {
                    let frac = pos - i as f64;
                    values[i] * (1.0 - frac) + values[i + 1] * frac
                }
            }
        }
    }

    fn support(&self) -> f64 {
        match self {
            KernelKind::Gaussian { .. } => f64::INFINITY,
            KernelKind::Tabulated { spacing, values } => spacing * (values.len() - 1) as f64,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            KernelKind::Gaussian { .. } => Vec::new(),
            KernelKind::Tabulated { spacing, values } => (0..values.len()).map(|i| i as f64 * spacing).collect(),
        }
    }
}

/// The even micromodulus `C` with horizon `δ` and its cached mass
/// `β = ∫ C`.
#[derive(Clone, Debug, PartialEq)]
pub struct Micromodulus {
    kind: KernelKind,
    horizon: f64,
    truncate: bool,
    beta: f64,
}

impl Micromodulus {
    pub fn new(kind: KernelKind, horizon: f64, truncate: bool) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidKernel(format!("horizon must be positive, got {horizon}")));
        }
        match &kind {
            KernelKind::Gaussian { amplitude, rate } => {
                if !amplitude.is_finite() || !rate.is_finite() || *rate < 0.0 {
                    return Err(Error::InvalidKernel(format!(
                        "gaussian needs finite amplitude and non-negative rate, got {amplitude}, {rate}"
                    )));
                }
                if *rate == 0.0 && !truncate {
                    return Err(Error::InvalidKernel(
                        "a constant gaussian is only integrable when truncated".into(),
                    ));
                }
            }
            KernelKind::Tabulated { spacing, values } => {
                if values.len() < 2 || !(spacing.is_finite() && *spacing > 0.0) {
                    return Err(Error::InvalidKernel(
                        "a tabulated kernel needs a positive spacing and at least two samples".into(),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidKernel("tabulated kernel has non-finite samples".into()));
                }
            }
        }
        let mut kernel = Self {
            kind,
            horizon,
            truncate,
            beta: 0.0,
        };
        kernel.beta = compute_beta(&kernel)?;
        Ok(kernel)
    }

    /// `C(ξ) = exp(-ξ²)`.
    pub fn gaussian(horizon: f64, truncate: bool) -> Result<Self> {
        Self::new(
            KernelKind::Gaussian {
                amplitude: 1.0,
                rate: 1.0,
            },
            horizon,
            truncate,
        )
    }

    /// Samples `values` spread uniformly over `[0, extent]`.
    pub fn tabulated(values: Vec<f64>, extent: f64, horizon: f64, truncate: bool) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidKernel("need at least two samples".into()));
        }
        let spacing = extent / (values.len() - 1) as f64;
        Self::new(KernelKind::Tabulated { spacing, values }, horizon, truncate)
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn truncate(&self) -> bool {
        self.truncate
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eval(&self, xi: f64) -> f64 {
        eval_micromodulus(self, xi)
    }

    /// Largest bond length with a nonzero kernel value.
    pub fn interaction_radius(&self) -> f64 {
        if self.truncate {
            self.horizon.min(self.kind.support())
        } else {
            self.kind.support()
        }
    }

    /// Bond lengths in `[0, radius]` where `C` has a kink, so quadrature
    /// panels can be split there.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        let r = self.interaction_radius();
        let mut pts: Vec<f64> = self
            .kind
            .breakpoints()
            .into_iter()
            .filter(|&b| b > 0.0 && b < r)
            .collect();
        if self.truncate && self.horizon < self.kind.support() {
            pts.push(self.horizon);
        }
        pts
    }

    /// The kernel expressed in a coordinate stretched by `scale`:
    /// `C_s(ξ) = scale · C(scale · ξ)` with horizon `δ / scale`. Convolving
    /// with `C_s` in normalized coordinates equals convolving with `C` in
    /// physical ones when `x_phys = scale · x + shift`.
    pub fn rescaled(&self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidKernel(format!("scale must be positive, got {scale}")));
        }
        let kind = match &self.kind {
            KernelKind::Gaussian { amplitude, rate } => KernelKind::Gaussian {
                amplitude: amplitude * scale,
                rate: rate * scale * scale,
            },
            KernelKind::Tabulated { spacing, values } => KernelKind::Tabulated {
                spacing: spacing / scale,
                values: values.iter().map(|v| v * scale).collect(),
            },
        };
        Self::new(kind, self.horizon / scale, self.truncate)
    }

    /// `∫_a^b C(ξ) dξ`, split at kinks of the kernel.
    pub(crate) fn integrate(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let r = self.interaction_radius();
        let (a, b) = (a.max(-r), b.min(r));
        if b <= a {
            return 0.0;
        }
        let mut cuts = vec![a, b];
        for p in self.breakpoints() {
            for q in [-p, p, 0.0] {
                if q > a && q < b {
                    cuts.push(q);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let rule = GaussLegendre::new(16);
        cuts.windows(2)
            .map(|w| {
                let panels = ((w[1] - w[0]) / 0.05).ceil().max(1.0) as usize;
                rule.refine(w[0], w[1], panels, 1e-15, 12, |x| self.eval(x))
            })
            .sum()
    }
}

/// `C(ξ)`, even in `ξ` and identically zero beyond the horizon when the
/// kernel is truncated.
pub fn eval_micromodulus(c: &Micromodulus, xi: f64) -> f64 {
    let a = xi.abs();
    if c.truncate && a > c.horizon {
        return 0.0;
    }
    c.kind.eval_abs(a)
}

/// `β = ∫ C`: over `[-δ, δ]` for a truncated kernel, over
/// `[-1-δ, 1+δ]` (intersected with the support) otherwise.
pub fn compute_beta(c: &Micromodulus) -> Result<f64> {
    let r = if c.truncate {
        c.horizon
    } else {
        (1.0 + c.horizon).min(c.kind.support())
    };
    let beta = c.integrate(-r, r);
    if !beta.is_finite() {
        return Err(Error::InvalidKernel(format!("kernel integral is not finite ({beta})")));
    }
    Ok(beta)
}
