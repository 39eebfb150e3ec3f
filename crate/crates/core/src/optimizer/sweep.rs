//! Optimizer runs over a list of apparatus sizes and the power-law fit.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{optimize_scheme_detailed, OptimizerOptions};
use crate::error::{Error, Result};

pub(crate) fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn row_seed(master: u64, n: usize) -> u64 {
    splitmix(master ^ splitmix(n as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub error_wigner: f64,
    /// NaN when the optimizer failed for this row; see `note`.
    pub error_optimized: f64,
    pub constraint_residual: f64,
    pub iters: usize,
    #[serde(skip)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: [&str; 5] = ["n", "error_wigner", "error_optimized", "constraint_residual", "iters"];

impl SweepTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                format!("{:.16e}", r.error_wigner),
                format!("{:.16e}", r.error_optimized),
                format!("{:.16e}", r.constraint_residual),
                r.iters.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        if r.headers()?.iter().ne(CSV_HEADER) {
            return Err(Error::structural("unexpected sweep table header"));
        }
        let rows = r.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>()?;
        Ok(Self { rows })
    }
}

/// Runs the optimizer once per size. Rows run in parallel, each with a seed
/// derived from `opts.seed` and its `n`, so the table does not depend on
/// scheduling. A failing row is kept with NaN errors and a note.
pub fn sweep(n_values: &[usize], d: usize, opts: &OptimizerOptions) -> Result<SweepTable> {
    if n_values.is_empty() {
        return Err(Error::domain("empty list of apparatus sizes"));
    }
    if let Some(n) = n_values.iter().find(|&&n| n < 2) {
        return Err(Error::domain(format!("apparatus size {n} is below 2")));
    }
    if d < 2 {
        return Err(Error::structural(format!("apparatus dimension {d} is below 2")));
    }
    let rows = n_values
        .par_iter()
        .map(|&n| {
            let row_opts = OptimizerOptions { seed: row_seed(opts.seed, n), ..*opts };
            let error_wigner = 1.0 / (2.0 * n as f64 - 1.0);
            match optimize_scheme_detailed(n, d, &row_opts) {
                Ok(o) => SweepRow {
                    n,
                    error_wigner,
                    error_optimized: o.objective,
                    constraint_residual: o.constraint_residual,
                    iters: o.iters,
                    note: None,
                },
                Err(e) => SweepRow {
                    n,
                    error_wigner,
                    error_optimized: f64::NAN,
                    constraint_residual: f64::NAN,
                    iters: 0,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(SweepTable { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line through `(ln n, ln error_optimized)`.
pub fn fit_scaling(table: &SweepTable) -> Result<ScalingFit> {
    if table.rows.len() < 3 {
        return Err(Error::domain(format!("need at least 3 rows, got {}", table.rows.len())));
    }
    if let Some(r) = table.rows.iter().find(|r| !(r.error_optimized > 0.0)) {
        return Err(Error::domain(format!("row n = {} has error {}", r.n, r.error_optimized)));
    }
    let pts: Vec<(f64, f64)> =
        table.rows.iter().map(|r| ((r.n as f64).ln(), r.error_optimized.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("all rows share the same n"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(ScalingFit { slope, intercept, r2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(ns: &[usize], f: impl Fn(f64) -> f64) -> SweepTable {
        SweepTable {
            rows: ns
                .iter()
                .map(|&n| SweepRow {
                    n,
                    error_wigner: 1.0 / (2.0 * n as f64 - 1.0),
                    error_optimized: f(n as f64),
                    constraint_residual: 0.0,
                    iters: 0,
                    note: None,
                })
                .collect(),
        }
    }

    #[test]
    fn exact_power_law() {
        let fit = fit_scaling(&table(&[4, 8, 16, 32], |n| 1.0 / (n * n))).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-9);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn baseline_slope_near_minus_one() {
        let ns = [4.0f64, 8.0, 16.0, 32.0];
        let fit = fit_scaling(&table(&[4, 8, 16, 32], |n| 1.0 / (2.0 * n - 1.0))).unwrap();
        // equally spaced abscissae ln 4 + k ln 2: slope = Σ (k − 1.5) y_k / (5 ln 2)
        let expect: f64 = ns.iter().enumerate().map(|(k, n)| (k as f64 - 1.5) * -(2.0 * n - 1.0).ln()).sum::<f64>()
            / (5.0 * 2f64.ln());
        assert!((fit.slope - expect).abs() < 1e-12, "{} vs {expect}", fit.slope);
        assert!(fit.slope > -1.06 && fit.slope < -1.05);
    }

    #[test]
    fn fit_rejects_bad_tables() {
        assert!(fit_scaling(&table(&[4, 8], |n| 1.0 / n)).is_err());
        assert!(fit_scaling(&table(&[4, 8, 16], |n| n - 8.0)).is_err());
        assert!(fit_scaling(&table(&[4, 8, 16], |_| f64::NAN)).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = table(&[4, 8, 16], |n| 1.0 / (n * n) + 1e-17);
        let text = t.to_csv_string();
        assert!(text.starts_with("n,error_wigner,error_optimized,constraint_residual,iters\n"));
        assert!(!text.contains('\r'));
        assert_eq!(SweepTable::read_csv(text.as_bytes()).unwrap(), t);
    }

    #[test]
    fn sweep_rejects_bad_sizes() {
        let opts = OptimizerOptions::default();
        assert!(sweep(&[], 2, &opts).is_err());
        assert!(sweep(&[1, 4], 2, &opts).is_err());
    }
}
