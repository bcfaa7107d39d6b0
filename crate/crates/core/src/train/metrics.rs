use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};

/// Confusion counts, rates and curves for one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub f1: f64,
    /// `None` when only one class is present.
    pub auc: Option<f64>,
    pub sensitivity: f64,
    pub specificity: f64,
    /// `(false positive rate, true positive rate)`, from (0,0) to (1,1).
    pub roc_points: Vec<(f64, f64)>,
    /// `(recall, precision)`, starting at (0,1).
    pub pr_points: Vec<(f64, f64)>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn check(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::Contract("labels must be 0 or 1".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Contract("NaN score".into()));
    }
    Ok(())
}

/// Cumulative `(fp, tp)` after each group of equal scores, highest first.
fn sweep(scores: &[f64], labels: &[u8]) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let mut out = vec![(0, 0)];
    let (mut fp, mut tp) = (0, 0);
    for (i, &idx) in order.iter().enumerate() {
        if labels[idx] == 1 {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_group = order.get(i + 1).is_none_or(|&next| scores[next] != scores[idx]);
        if last_of_group {
            out.push((fp, tp));
        }
    }
    out
}

/// Area under the ROC curve by trapezoids over score groups; ties count ½.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::AucUndefined(format!("{pos} positive and {neg} negative labels")));
    }
    let pts = sweep(scores, labels);
    let mut area = 0.0;
    for w in pts.windows(2) {
        let (fp0, tp0) = w[0];
        let (fp1, tp1) = w[1];
        area += (fp1 - fp0) as f64 * (tp0 + tp1) as f64 / 2.0;
    }
    Ok(area / (pos * neg) as f64)
}

/// Metrics at `threshold` on the positive-class probability plus curves.
pub fn compute_metrics(scores: &[f64], labels: &[u8], threshold: f64) -> Result<MetricsReport> {
    check(scores, labels)?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let pos = tp + fn_;
    let neg = tn + fp;
    let auc = auc(scores, labels).ok();
    let pts = sweep(scores, labels);
    let roc_points = if auc.is_some() {
        pts.iter().map(|&(f, t)| (ratio(f, neg), ratio(t, pos))).collect()
    } else {
        Vec::new()
    };
    let mut pr_points = vec![(0.0, 1.0)];
    if pos > 0 {
        pr_points.extend(pts[1..].iter().map(|&(f, t)| (ratio(t, pos), ratio(t, t + f))));
    }
    Ok(MetricsReport {
        tp,
        fp,
        tn,
        fn_,
        f1: ratio(2 * tp, 2 * tp + fp + fn_),
        auc,
        sensitivity: ratio(tp, pos),
        specificity: ratio(tn, neg),
        roc_points,
        pr_points,
    })
}
