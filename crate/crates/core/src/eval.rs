//! Disparity error metrics.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::types::DisparityMap;

pub const DEFAULT_TAUS: [f64; 4] = [1.0, 2.0, 3.0, 4.0];

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub taus: Vec<f64>,
    /// Percentage of GT-valid pixels with error above each tau; invalid
    /// predictions count as errors.
    pub bad: Vec<f64>,
    /// Mean absolute error over pixels where both maps are valid.
    pub avg_px: f64,
    /// Pixels with valid ground truth.
    pub evaluated_pixels: usize,
    /// Of those, pixels with a valid prediction.
    pub valid_predictions: usize,
}

impl MetricsReport {
    pub fn bad_at(&self, tau: f64) -> Option<f64> {
        self.taus.iter().position(|&t| t == tau).map(|i| self.bad[i])
    }

    pub fn coverage(&self) -> f64 {
        100.0 * self.valid_predictions as f64 / self.evaluated_pixels as f64
    }

    /// `metric=value` lines.
    pub fn to_kv(&self) -> String {
        self.to_kv_prefixed("")
    }

    pub fn to_kv_prefixed(&self, prefix: &str) -> String {
        let mut out = String::new();
        for (t, b) in self.taus.iter().zip(&self.bad) {
            writeln!(out, "{prefix}bad_{}={b:.4}", tau_label(*t)).unwrap();
        }
        writeln!(out, "{prefix}avg={:.4}", self.avg_px).unwrap();
        writeln!(out, "{prefix}evaluated_pixels={}", self.evaluated_pixels).unwrap();
        writeln!(out, "{prefix}valid_predictions={}", self.valid_predictions).unwrap();
        out
    }

    /// Human-readable table, one column per report.
    pub fn table(rows: &[(&str, &MetricsReport)]) -> String {
        let mut out = String::new();
        let Some((_, first)) = rows.first() else {
            return out;
        };
        write!(out, "{:<12}", "metric").unwrap();
        for (name, _) in rows {
            write!(out, "{name:>12}").unwrap();
        }
        out.push('\n');
        for (i, t) in first.taus.iter().enumerate() {
            write!(out, "{:<12}", format!(">{}", tau_label(*t))).unwrap();
            for (_, r) in rows {
                write!(out, "{:>12.2}", r.bad[i]).unwrap();
            }
            out.push('\n');
        }
        write!(out, "{:<12}", "avg").unwrap();
        for (_, r) in rows {
            write!(out, "{:>12.3}", r.avg_px).unwrap();
        }
        out.push('\n');
        write!(out, "{:<12}", "coverage%").unwrap();
        for (_, r) in rows {
            write!(out, "{:>12.2}", r.coverage()).unwrap();
        }
        out.push('\n');
        out
    }
}

fn tau_label(t: f64) -> String {
    if t.fract() == 0.0 {
        format!("{}", t as i64)
    } else {
        format!("{t}")
    }
}

pub fn evaluate(pred: &DisparityMap, gt: &DisparityMap, taus: &[f64]) -> Result<MetricsReport> {
    if !pred.same_size(gt) {
        return Err(Error::DimensionMismatch(format!(
            "prediction {}x{} vs ground truth {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    if taus.is_empty() || taus.windows(2).any(|w| w[0] >= w[1]) || taus.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::Config(format!(
            "thresholds {taus:?} must be non-negative and strictly increasing"
        )));
    }
    let mut errors = vec![0usize; taus.len()];
    let mut evaluated = 0usize;
    let mut valid_pred = 0usize;
    let mut abs_sum = 0.0f64;
    for i in 0..gt.len() {
        let Some(g) = gt.get_index(i) else {
            continue;
        };
        evaluated += 1;
        match pred.get_index(i) {
            None => errors.iter_mut().for_each(|e| *e += 1),
            Some(p) => {
                valid_pred += 1;
                let err = (p as f64 - g as f64).abs();
                abs_sum += err;
                for (e, &t) in errors.iter_mut().zip(taus) {
                    if err > t {
                        *e += 1;
                    }
                }
            }
        }
    }
    if evaluated == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    let bad: Vec<f64> = errors
        .iter()
        .map(|&e| 100.0 * e as f64 / evaluated as f64)
        .collect();
    debug_assert!(bad.windows(2).all(|w| w[0] >= w[1]));
    Ok(MetricsReport {
        taus: taus.to_vec(),
        bad,
        avg_px: if valid_pred == 0 { 0.0 } else { abs_sum / valid_pred as f64 },
        evaluated_pixels: evaluated,
        valid_predictions: valid_pred,
    })
}
