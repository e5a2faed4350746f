use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operator::Micromodulus;

/// Affine map between a physical interval `[lo, hi]` and `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap {
    lo: f64,
    hi: f64,
}

impl AffineMap {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidProblem(format!(
                "interval [{lo}, {hi}] is not invertible"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn identity() -> Self {
        Self { lo: -1.0, hi: 1.0 }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// `(hi - lo) / 2`, the stretch from normalized to physical coordinates.
    pub fn half_length(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn is_identity(&self) -> bool {
        self.lo == -1.0 && self.hi == 1.0
    }

    pub fn to_physical(&self, s: f64) -> f64 {
        self.lo + (s + 1.0) * self.half_length()
    }

    pub fn to_normalized(&self, p: f64) -> f64 {
        (p - self.lo) / self.half_length() - 1.0
    }
}

/// Initial displacement or velocity, as a function of the physical
/// coordinate.
#[derive(Clone)]
pub enum InitialData {
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Piecewise-linear interpolation of samples at increasing abscissae,
    /// held constant outside the sampled range.
    Tabulated {
        x: Vec<f64>,
        values: Vec<f64>,
    },
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData::Function(_) => f.write_str("InitialData::Function(..)"),
            InitialData::Tabulated { x, values } => f
                .debug_struct("InitialData::Tabulated")
                .field("x", x)
                .field("values", values)
                .finish(),
        }
    }
}

impl InitialData {
    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        InitialData::Function(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        Self::function(move |_| c)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn tabulated(x: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != values.len() {
            return Err(Error::InvalidProblem(
                "tabulated data needs matching, non-empty arrays".into(),
            ));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProblem("tabulated abscissae must increase".into()));
        }
        Ok(InitialData::Tabulated { x, values })
    }

    pub fn eval(&self, p: f64) -> f64 {
        match self {
            InitialData::Function(f) => f(p),
            InitialData::Tabulated { x, values } => {
                if p <= x[0] {
                    return values[0];
                }
                let last = x.len() - 1;
                if p >= x[last] {
                    return values[last];
                }
                let i = x.partition_point(|&v| v <= p) - 1;
                let frac = (p - x[i]) / (x[i + 1] - x[i]);
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
        }
    }
}

/// A full problem statement: degree, kernel, initial data and the maps of
/// the physical space and time intervals onto `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub n_max: usize,
    pub kernel: Micromodulus,
    pub u0: InitialData,
    pub v0: InitialData,
    pub space_map: AffineMap,
    pub time_map: AffineMap,
}

impl ProblemSpec {
    /// A problem on `[-1, 1] × [-1, 1]`.
    pub fn new(n_max: usize, kernel: Micromodulus, u0: InitialData, v0: InitialData) -> Result<Self> {
        let p = Self {
            n_max,
            kernel,
            u0,
            v0,
            space_map: AffineMap::identity(),
            time_map: AffineMap::identity(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_maps(mut self, space_map: AffineMap, time_map: AffineMap) -> Result<Self> {
        self.space_map = space_map;
        self.time_map = time_map;
        self.validate()?;
        Ok(self)
    }

    pub fn horizon(&self) -> f64 {
        self.kernel.horizon()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 2 {
            return Err(Error::InvalidProblem(format!(
                "degree must be at least 2, got {}",
                self.n_max
            )));
        }
        let half = self.space_map.half_length();
        if self.horizon() >= half {
            return Err(Error::InvalidProblem(format!(
                "horizon {} must be smaller than half the bar length {half}",
                self.horizon()
            )));
        }
        for k in 0..=self.n_max {
            let s = (k as f64 * std::f64::consts::PI / self.n_max as f64).cos();
            let p = self.space_map.to_physical(s);
            if !self.u0.eval(p).is_finite() || !self.v0.eval(p).is_finite() {
                return Err(Error::InvalidProblem(format!("initial data is not finite at x = {p}")));
            }
        }
        Ok(())
    }

    /// The kernel in normalized spatial coordinates.
    pub fn normalized_kernel(&self) -> Result<Micromodulus> {
        if self.space_map.is_identity() {
            Ok(self.kernel.clone())
        } else {
            self.kernel.rescaled(self.space_map.half_length())
        }
    }

    /// `d/dt` in physical time equals this factor times `d/ds` in the
    /// normalized one.
    pub fn time_factor(&self) -> f64 {
        1.0 / self.time_map.half_length()
    }
}
