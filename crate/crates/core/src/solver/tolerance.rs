use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the modulus `W` in the diagnostic tolerance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusKind {
    /// `W(z) = z^α`.
    #[default]
    Power,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSpec {
    #[serde(default)]
    pub modulus_kind: ModulusKind,
    pub alpha: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self::power(1.0)
    }
}

impl ToleranceSpec {
    pub fn power(alpha: f64) -> Self {
        Self {
            modulus_kind: ModulusKind::Power,
            alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)
    }

    pub fn modulus(&self, z: f64) -> f64 {
        match self.modulus_kind {
            ModulusKind::Power => z.powf(self.alpha),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidOptions(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// `√N / (2N − 2)² · ((2N − 2)⁻²)^α`, the level below which the collocation
/// residual is considered to be at discretization error. Informational: the
/// solver never stops on it.
pub fn dismodel_tolerance(n: usize, spec: &ToleranceSpec) -> Result<f64> {
    if n < 2 {
        return Err(Error::DegenerateGrid(n));
    }
    spec.validate()?;
    let m = (2 * n - 2) as f64;
    Ok((n as f64).sqrt() / (m * m) * spec.modulus(1.0 / (m * m)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let one = ToleranceSpec::power(1.0);
        let t = dismodel_tolerance(100, &one).unwrap();
        assert!((t - 6.506_377_223_032_604e-9).abs() < 1e-20, "{t:e}");
        let t = dismodel_tolerance(2, &one).unwrap();
        assert!((t - 2f64.sqrt() / 16.0).abs() < 1e-16);
        assert!(dismodel_tolerance(1, &one).is_err());
        assert!(dismodel_tolerance(10, &ToleranceSpec::power(0.0)).is_err());
        assert!(dismodel_tolerance(10, &ToleranceSpec::power(1.5)).is_err());
    }

    #[test]
    fn doubling_ratio_tends_to_limit() {
        let one = ToleranceSpec::power(1.0);
        let r = dismodel_tolerance(20_000, &one).unwrap() / dismodel_tolerance(10_000, &one).unwrap();
        let limit = 2f64.sqrt() / 16.0;
        assert!((r / limit - 1.0).abs() < 1e-3, "{r}");
    }

    #[test]
    fn larger_alpha_is_tighter() {
        let a = dismodel_tolerance(32, &ToleranceSpec::power(0.5)).unwrap();
        let b = dismodel_tolerance(32, &ToleranceSpec::power(1.0)).unwrap();
        assert!(b < a);
    }
}
