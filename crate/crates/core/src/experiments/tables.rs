use serde::Serialize;

use crate::error::{Error, Result};

/// Relative error at one time level,
/// `E = Σ |u_n − u*_n|² / Σ |u_n|²` (squared sums, no square root), with
/// `u` the numerical and `u*` the reference values.
pub fn relative_error(numerical: &[f64], reference: &[f64]) -> Result<f64> {
    if numerical.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: numerical.len(),
            actual: reference.len(),
        });
    }
    let den: f64 = numerical.iter().map(|u| u * u).sum();
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let num: f64 = numerical.iter().zip(reference).map(|(u, r)| (u - r) * (u - r)).sum();
    Ok(num / den)
}

/// Something that can be written as CSV.
pub trait CsvTable {
    fn header(&self) -> &'static str;
    fn records(&self) -> Vec<String>;

    fn to_csv(&self) -> String {
        let mut out = String::from(self.header());
        out.push('\n');
        for r in self.records() {
            out.push_str(&r);
            out.push('\n');
        }
        out
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRow {
    pub n: usize,
    pub error: f64,
    /// `log₂` of the previous row's error over this one; absent on the first row.
    pub rate: Option<f64>,
    /// The solve behind this row settled; not written to the CSV.
    pub converged: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    pub fn from_errors(entries: &[(usize, f64, bool)]) -> Self {
        let mut rows: Vec<ErrorRow> = Vec::with_capacity(entries.len());
        for &(n, error, converged) in entries {
            let rate = rows.last().map(|prev| (prev.error / error).log2());
            rows.push(ErrorRow {
                n,
                error,
                rate,
                converged,
            });
        }
        Self { rows }
    }

    pub fn rates(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.rate).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }
}

impl CsvTable for ErrorTable {
    fn header(&self) -> &'static str {
        "n,error,rate"
    }

    fn records(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                let rate = r.rate.map(format_float).unwrap_or_default();
                format!("{},{},{}", r.n, format_float(r.error), rate)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingRow {
    pub n: usize,
    pub method: String,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TimingTable {
    pub rows: Vec<TimingRow>,
}

impl TimingTable {
    pub fn push(&mut self, n: usize, method: &str, wall_seconds: f64) {
        self.rows.push(TimingRow {
            n,
            method: method.to_string(),
            wall_seconds,
        });
        self.rows
            .sort_by(|a, b| a.n.cmp(&b.n).then_with(|| a.method.cmp(&b.method)));
    }

    pub fn methods(&self) -> Vec<String> {
        let mut m: Vec<String> = self.rows.iter().map(|r| r.method.clone()).collect();
        m.sort();
        m.dedup();
        m
    }

    pub fn times(&self, method: &str) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.method == method)
            .map(|r| (r.n, r.wall_seconds))
            .collect()
    }

    /// Least-squares slope of `log t` against `log n` for one method.
    pub fn scaling_exponent(&self, method: &str) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .times(method)
            .into_iter()
            .filter(|(_, t)| *t > 0.0)
            .map(|(n, t)| ((n as f64).ln(), t.ln()))
            .collect();
        loglog_slope(&pts)
    }
}

fn loglog_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

impl CsvTable for TimingTable {
    fn header(&self) -> &'static str {
        "n,method,wall_seconds"
    }

    fn records(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| format!("{},{},{}", r.n, r.method, format_float(r.wall_seconds)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_examples() {
        assert_eq!(relative_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(relative_error(&[3.0, -1.0], &[0.0, 0.0]).unwrap(), 1.0);
        let e = relative_error(&[1.0, 1.0], &[1.0, 1.1]).unwrap();
        assert!((e - 0.005).abs() < 1e-15);
        assert!(matches!(
            relative_error(&[0.0, 0.0], &[1.0, 1.0]),
            Err(Error::ZeroDenominator)
        ));
        assert!(relative_error(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rates_are_log_ratios() {
        let t = ErrorTable::from_errors(&[(16, 1e-2, true), (32, 2.5e-3, true), (64, 1e-3, false)]);
        assert_eq!(t.rows[0].rate, None);
        assert!((t.rows[1].rate.unwrap() - 2.0).abs() < 1e-12);
        assert!((t.rows[2].rate.unwrap() - 2.5f64.log2()).abs() < 1e-12);
        assert!(!t.all_converged());
        assert!(t.strictly_decreasing());
    }

    #[test]
    fn error_csv_layout() {
        let t = ErrorTable::from_errors(&[(16, 0.1, true), (32, 0.025, true), (64, 0.00625, true)]);
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "n,error,rate");
        assert_eq!(lines[1], "16,1.0000000000000001e-1,");
        assert_eq!(lines[2], "32,2.5000000000000001e-2,2.0000000000000000e0");
        let back: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn timing_slope() {
        let mut t = TimingTable::default();
        for n in [32usize, 64, 128] {
            t.push(n, "cubic", (n as f64).powi(3) * 1e-9);
            t.push(n, "square", (n as f64).powi(2) * 1e-9);
        }
        assert!((t.scaling_exponent("cubic").unwrap() - 3.0).abs() < 1e-12);
        assert!((t.scaling_exponent("square").unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(t.scaling_exponent("missing"), None);
        assert_eq!(t.rows[0].n, 32);
        assert_eq!(t.methods(), vec!["cubic".to_string(), "square".to_string()]);
        assert!(t.to_csv().starts_with("n,method,wall_seconds\n32,cubic,"));
    }
}
