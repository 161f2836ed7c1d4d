//! Confusion counting under changedetection.net scoring rules and the seven
//! per-video metrics.

use std::fmt::Write as _;
use std::ops::{Add, AddAssign};

use crate::error::{Error, Result};
use crate::frame::LabelMask;
use crate::io::GroundTruthFrame;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Tallies one frame. Unknown and out-of-ROI pixels are skipped; shadow
    /// pixels count as background truth.
    pub fn accumulate(&mut self, mask: &LabelMask, gt: &GroundTruthFrame) -> Result<()> {
        if mask.width() != gt.width() || mask.height() != gt.height() {
            return Err(Error::InvalidInput(format!(
                "mask is {}x{}, ground truth is {}x{}",
                mask.width(),
                mask.height(),
                gt.width(),
                gt.height()
            )));
        }
        for (label, truth) in mask.labels().iter().zip(gt.labels()) {
            if !truth.is_scored() {
                continue;
            }
            match (label.is_foreground(), truth.is_foreground()) {
                (true, true) => self.tp += 1,
                (true, false) => self.fp += 1,
                (false, true) => self.fn_ += 1,
                (false, false) => self.tn += 1,
            }
        }
        Ok(())
    }
}

impl Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, o: ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: ConfusionCounts) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = ConfusionCounts>>(iter: I) -> Self {
        iter.fold(ConfusionCounts::default(), Add::add)
    }
}

pub fn accumulate(counts: ConfusionCounts, mask: &LabelMask, gt: &GroundTruthFrame) -> Result<ConfusionCounts> {
    let mut c = counts;
    c.accumulate(mask, gt)?;
    Ok(c)
}

/// The seven metrics; `None` where a denominator is zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub pwc: Option<f64>,
    pub precision: Option<f64>,
    pub f_measure: Option<f64>,
}

/// Column names in the order they are reported.
pub const METRIC_NAMES: [&str; 7] = [
    "Recall",
    "Specificity",
    "FPR",
    "FNR",
    "PWC",
    "Precision",
    "F-Measure",
];

/// Machine-readable keys, same order as [`METRIC_NAMES`].
pub const METRIC_KEYS: [&str; 7] = ["recall", "specificity", "fpr", "fnr", "pwc", "precision", "f_measure"];

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl MetricsReport {
    pub fn values(&self) -> [Option<f64>; 7] {
        [
            self.recall,
            self.specificity,
            self.fpr,
            self.fnr,
            self.pwc,
            self.precision,
            self.f_measure,
        ]
    }

    fn from_values(v: [Option<f64>; 7]) -> Self {
        MetricsReport {
            recall: v[0],
            specificity: v[1],
            fpr: v[2],
            fnr: v[3],
            pwc: v[4],
            precision: v[5],
            f_measure: v[6],
        }
    }
}

/// Recall and specificity are computed directly; FNR and FPR as their
/// complements so the pairs sum to exactly 1.
pub fn metrics(counts: &ConfusionCounts) -> Result<MetricsReport> {
    let ConfusionCounts { tp, fp, tn, fn_ } = *counts;
    let total = counts.total();
    if total == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let recall = ratio(tp, tp + fn_);
    let specificity = ratio(tn, tn + fp);
    let precision = ratio(tp, tp + fp);
    let f_measure = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(MetricsReport {
        recall,
        specificity,
        fpr: specificity.map(|s| 1.0 - s),
        fnr: recall.map(|r| 1.0 - r),
        pwc: Some((100 * (fn_ + fp)) as f64 / total as f64),
        precision,
        f_measure,
    })
}

/// Unweighted per-metric mean over videos, skipping undefined entries.
pub fn aggregate(reports: &[MetricsReport]) -> Result<MetricsReport> {
    if reports.is_empty() {
        return Err(Error::InvalidInput("nothing to aggregate".into()));
    }
    let mut out = [None; 7];
    for (m, slot) in out.iter_mut().enumerate() {
        // Running mean: exact when every entry is equal.
        let mut n = 0usize;
        let mut mean = 0.0f64;
        for x in reports.iter().filter_map(|r| r.values()[m]) {
            n += 1;
            mean += (x - mean) / n as f64;
        }
        if n > 0 {
            *slot = Some(mean);
        }
    }
    Ok(MetricsReport::from_values(out))
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.4}"))
}

/// Fixed-width table, one row per named report.
pub fn format_table(rows: &[(String, MetricsReport)]) -> String {
    let name_w = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(10);
    let mut out = format!("{:<name_w$}", "Video");
    for name in METRIC_NAMES {
        let _ = write!(out, " {name:>11}");
    }
    out.push('\n');
    for (name, r) in rows {
        let _ = write!(out, "{name:<name_w$}");
        for v in r.values() {
            let _ = write!(out, " {:>11}", cell(v));
        }
        out.push('\n');
    }
    out
}

/// `name.metric=value` lines with full precision; undefined values are
/// written as `undefined`.
pub fn format_key_values(rows: &[(String, MetricsReport)]) -> String {
    let mut out = String::new();
    for (name, r) in rows {
        for (key, v) in METRIC_KEYS.iter().zip(r.values()) {
            let value = v.map_or_else(|| "undefined".to_string(), |x| format!("{x:?}"));
            let _ = writeln!(out, "{name}.{key}={value}");
        }
    }
    out
}
