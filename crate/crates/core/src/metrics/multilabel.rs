use crate::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub average_precision: f64,
    pub positives: usize,
    /// No positive examples: left out of both macro means.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiLabelResult {
    pub per_label: Vec<LabelScore>,
    pub macro_f1: f64,
    pub macro_ap: f64,
    pub threshold: f64,
}

impl MultiLabelResult {
    pub fn n_labels(&self) -> usize {
        self.per_label.len()
    }

    pub fn n_included(&self) -> usize {
        self.per_label.iter().filter(|l| !l.excluded).count()
    }

    pub fn report(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("n_labels".to_string(), self.n_labels().to_string()),
            ("n_included".to_string(), self.n_included().to_string()),
            ("threshold".to_string(), self.threshold.to_string()),
            ("macro_f1".to_string(), self.macro_f1.to_string()),
            ("macro_ap".to_string(), self.macro_ap.to_string()),
        ];
        for (k, l) in self.per_label.iter().enumerate() {
            out.push((format!("precision_label{k}"), l.precision.to_string()));
            out.push((format!("recall_label{k}"), l.recall.to_string()));
            out.push((format!("f1_label{k}"), l.f1.to_string()));
            out.push((format!("ap_label{k}"), l.average_precision.to_string()));
            out.push((format!("excluded_label{k}"), l.excluded.to_string()));
        }
        out
    }
}

/// Area under the precision-recall step function: the mean of precision@k
/// over the ranks k of the positives. Ranking is by descending score, ties
/// by ascending index. Returns 0 when there are no positives.
///
/// The sum is kept as an exact fraction while it stays below 2^53 in both
/// terms, so small cases round correctly (e.g. exactly `5.0 / 6.0`).
pub fn average_precision(scores: &[f64], truth: &[bool]) -> f64 {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let n_pos = truth.iter().filter(|&&t| t).count();
    if n_pos == 0 {
        return 0.0;
    }
    let mut hits = 0u64;
    let mut exact = Some((0u128, 1u128));
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if truth[i] {
            hits += 1;
            let rank = rank as u64 + 1;
            sum += hits as f64 / rank as f64;
            exact = exact.and_then(|(n, d)| add_fraction(n, d, hits as u128, rank as u128));
        }
    }
    const LIMIT: u128 = 1 << 53;
    match exact.and_then(|(n, d)| reduce(n, d.checked_mul(n_pos as u128)?)) {
        Some((n, d)) if n < LIMIT && d < LIMIT => n as f64 / d as f64,
        _ => sum / n_pos as f64,
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn reduce(n: u128, d: u128) -> Option<(u128, u128)> {
    let g = gcd(n, d).max(1);
    Some((n / g, d / g))
}

fn add_fraction(n1: u128, d1: u128, n2: u128, d2: u128) -> Option<(u128, u128)> {
    let g = gcd(d1, d2);
    let l = (d1 / g).checked_mul(d2)?;
    let n = n1.checked_mul(l / d1)?.checked_add(n2.checked_mul(l / d2)?)?;
    reduce(n, l)
}

/// `scores` and `truth` are `n x L`, one row per sample.
pub fn multilabel_metrics(scores: &[Vec<f64>], truth: &[Vec<bool>], threshold: f64) -> Result<MultiLabelResult> {
    if scores.len() != truth.len() {
        return Err(Error::shape(format!("{} score rows vs {} truth rows", scores.len(), truth.len())));
    }
    if !threshold.is_finite() {
        return Err(Error::param("threshold must be finite"));
    }
    let n_labels = scores.first().map_or(0, Vec::len);
    if n_labels == 0 {
        return Err(Error::shape("no labels"));
    }
    for (i, (s, t)) in scores.iter().zip(truth).enumerate() {
        if s.len() != n_labels || t.len() != n_labels {
            return Err(Error::shape(format!(
                "row {i} has {} scores and {} truth values, expected {n_labels}",
                s.len(),
                t.len()
            )));
        }
        if s.iter().any(|v| v.is_nan()) {
            return Err(Error::data(format!("row {i} has a NaN score")));
        }
    }

    let mut per_label = Vec::with_capacity(n_labels);
    for l in 0..n_labels {
        let col: Vec<f64> = scores.iter().map(|r| r[l]).collect();
        let lab: Vec<bool> = truth.iter().map(|r| r[l]).collect();
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for (&s, &t) in col.iter().zip(&lab) {
            match (s >= threshold, t) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = ratio(2 * tp, 2 * tp + fp + fn_);
        let positives = tp + fn_;
        per_label.push(LabelScore {
            precision,
            recall,
            f1,
            average_precision: average_precision(&col, &lab),
            positives,
            excluded: positives == 0,
        });
    }
    let included: Vec<&LabelScore> = per_label.iter().filter(|l| !l.excluded).collect();
    if included.is_empty() {
        return Err(Error::data("no label has a positive example"));
    }
    let k = included.len() as f64;
    Ok(MultiLabelResult {
        macro_f1: included.iter().map(|l| l.f1).sum::<f64>() / k,
        macro_ap: included.iter().map(|l| l.average_precision).sum::<f64>() / k,
        per_label,
        threshold,
    })
}
