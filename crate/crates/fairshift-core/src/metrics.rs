//! Accuracy and fairness metrics, threshold-free ranking scores, the
//! source-only target-risk estimators, density-ratio weighting, and the
//! shift-decomposition diagnostic.
//!
//! Group conventions: the protected attribute takes values +1 (group `a`)
//! and −1 (group `d`); labels are ±1 with +1 the positive class.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::data::{format_float, DataError, Dataset, Matrix};
use crate::fair_erm::LinearModel;
use crate::logistic::fit_logistic;

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    LengthMismatch,
    SingleClass,
    NonFiniteScore,
    /// A protected group has no positive examples.
    NoPositives(String),
    /// No source rows with the requested (Y, D) combination.
    EmptyStratum { y: f64, d: f64 },
    EmptyTarget,
    /// Covariate views disagree in column names/kinds.
    SchemaMismatch,
    /// Source or target side is empty.
    DegenerateDomains,
    /// Supplied importance weights are unusable (wrong length or zero mass).
    BadWeights,
    Data(DataError),
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::LengthMismatch => write!(f, "input lengths differ"),
            MetricsError::SingleClass => write!(f, "labels contain a single class"),
            MetricsError::NonFiniteScore => write!(f, "non-finite score"),
            MetricsError::NoPositives(g) => write!(f, "group {g} has no positive examples"),
            MetricsError::EmptyStratum { y, d } => {
                write!(f, "no rows with Y={y}, D={d}")
            }
            MetricsError::EmptyTarget => write!(f, "target covariate set is empty"),
            MetricsError::SchemaMismatch => write!(f, "covariate schemas do not match"),
            MetricsError::DegenerateDomains => {
                write!(f, "need non-empty source and target samples")
            }
            MetricsError::BadWeights => write!(f, "importance weights unusable"),
            MetricsError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for MetricsError {}

impl From<DataError> for MetricsError {
    fn from(e: DataError) -> MetricsError {
        MetricsError::Data(e)
    }
}

/// Fraction of predictions equal to the label.
pub fn accuracy(labels: &[f64], predictions: &[f64]) -> f64 {
    assert_eq!(labels.len(), predictions.len());
    if labels.is_empty() {
        return 0.0;
    }
    let hits = labels.iter().zip(predictions).filter(|(l, p)| l == p).count();
    hits as f64 / labels.len() as f64
}

/// True-positive rate per protected group: TP/(TP+FN) among Y=+1, one
/// entry per distinct group value, group +1 first. Errors when any group
/// present in `groups` has no positive examples.
pub fn group_tpr(
    labels: &[f64],
    predictions: &[f64],
    groups: &[f64],
) -> Result<Vec<(f64, f64)>, MetricsError> {
    if labels.len() != predictions.len() || labels.len() != groups.len() {
        return Err(MetricsError::LengthMismatch);
    }
    let mut values: Vec<f64> = Vec::new();
    for &g in groups {
        if !values.contains(&g) {
            values.push(g);
        }
    }
    values.sort_by(|a, b| b.partial_cmp(a).expect("finite group values"));
    let mut out = Vec::with_capacity(values.len());
    for g in values {
        let mut positives = 0usize;
        let mut hits = 0usize;
        for i in 0..labels.len() {
            if groups[i] == g && labels[i] == 1.0 {
                positives += 1;
                if predictions[i] == 1.0 {
                    hits += 1;
                }
            }
        }
        if positives == 0 {
            return Err(MetricsError::NoPositives(format_group(g)));
        }
        out.push((g, hits as f64 / positives as f64));
    }
    Ok(out)
}

fn format_group(g: f64) -> String {
    if g == 1.0 {
        "+1".to_string()
    } else if g == -1.0 {
        "-1".to_string()
    } else {
        format_float(g)
    }
}

/// Difference of equal opportunity: |TPR_a − TPR_d| for exactly two groups.
pub fn deo(labels: &[f64], predictions: &[f64], groups: &[f64]) -> Result<f64, MetricsError> {
    let tprs = group_tpr(labels, predictions, groups)?;
    if tprs.len() != 2 {
        return Err(MetricsError::LengthMismatch);
    }
    Ok(libm::fabs(tprs[0].1 - tprs[1].1))
}

fn check_scores(labels: &[f64], scores: &[f64]) -> Result<(usize, usize), MetricsError> {
    if labels.len() != scores.len() {
        return Err(MetricsError::LengthMismatch);
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(MetricsError::NonFiniteScore);
    }
    let pos = labels.iter().filter(|&&y| y == 1.0).count();
    if pos == 0 || pos == labels.len() {
        return Err(MetricsError::SingleClass);
    }
    Ok((pos, labels.len() - pos))
}

/// Area under the precision-recall curve by average precision: the step
/// integral sum over descending unique score thresholds of
/// precision·Δrecall. No interpolation between points.
pub fn auprc(labels: &[f64], scores: &[f64]) -> Result<f64, MetricsError> {
    let (n_pos, _) = check_scores(labels, scores)?;
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite").then(a.cmp(&b)));
    let mut ap = 0.0;
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut prev_tp = 0usize;
    let mut i = 0;
    while i < order.len() {
        // Consume the whole tie group: a threshold admits every row whose
        // score reaches it.
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] == 1.0 {
                tp += 1;
            }
            seen += 1;
            i += 1;
        }
        let precision = tp as f64 / seen as f64;
        let delta_recall = (tp - prev_tp) as f64 / n_pos as f64;
        ap += precision * delta_recall;
        prev_tp = tp;
    }
    Ok(ap)
}

/// Area under the ROC curve via the Mann-Whitney statistic with midranks
/// for ties (equivalent to trapezoidal integration of the ROC curve).
pub fn auroc(labels: &[f64], scores: &[f64]) -> Result<f64, MetricsError> {
    let (n_pos, n_neg) = check_scores(labels, scores)?;
    let n = labels.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite").then(a.cmp(&b)));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Ranks are 1-based; tied entries share the average rank.
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] == 1.0 {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Inclusive linear-interpolation quantile: index (n-1)p between order
/// statistics. `p` in [0,1]; input need not be sorted.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty());
    assert!((0.0..=1.0).contains(&p));
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in quantile"));
    let pos = (v.len() - 1) as f64 * p;
    let lo = libm::floor(pos) as usize;
    let hi = libm::ceil(pos) as usize;
    let frac = pos - lo as f64;
    v[lo] + (v[hi] - v[lo]) * frac
}

/// Two-sample Kolmogorov-Smirnov distance: sup |F_a - F_b| over the
/// empirical CDFs.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).expect("non-finite sample"));
    sb.sort_by(|x, y| x.partial_cmp(y).expect("non-finite sample"));
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup = 0.0f64;
    while i < sa.len() && j < sb.len() {
        let t = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= t {
            i += 1;
        }
        while j < sb.len() && sb[j] <= t {
            j += 1;
        }
        let d = libm::fabs(i as f64 / sa.len() as f64 - j as f64 / sb.len() as f64);
        sup = sup.max(d);
    }
    sup
}

/// Large-sample two-sample KS rejection threshold at level `alpha`:
/// c(alpha) * sqrt((n+m)/(n*m)) with c(alpha) = sqrt(-ln(alpha/2)/2).
pub fn ks_critical_value(alpha: f64, n: usize, m: usize) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0 && n > 0 && m > 0);
    let c = libm::sqrt(-libm::log(alpha / 2.0) / 2.0);
    c * libm::sqrt((n + m) as f64 / (n as f64 * m as f64))
}

// ---------------------------------------------------------------------------
// Source-only target-risk identification

/// Number of neighbors for the conditional-loss regression.
const KNN_K: usize = 25;

fn zero_one_losses(model: &LinearModel, ds: &Dataset) -> Result<Vec<f64>, MetricsError> {
    let preds = model.predict_dataset(ds)?;
    let labels = ds.labels()?;
    Ok(labels
        .iter()
        .zip(&preds)
        .map(|(y, p)| if y == p { 0.0 } else { 1.0 })
        .collect())
}

/// Eq.-style identified target risk: the conditional expected loss given
/// the invariant covariates is fit on source data (k-nearest-neighbor
/// regression of the model's 0-1 loss, Euclidean distance on
/// source-standardized S) and averaged over the target covariate sample.
/// With `weights`, source rows contribute weighted neighbor averages.
///
/// Exact-match rule: when a target point coincides with source points
/// (distance zero), only those rows are averaged; this makes the estimator
/// reduce *exactly* to the plain empirical risk when source and target are
/// the same sample.
pub fn estimate_target_risk(
    source: &Dataset,
    target_covariates: &Dataset,
    model: &LinearModel,
    weights: Option<&[f64]>,
) -> Result<f64, MetricsError> {
    if target_covariates.n_rows() == 0 {
        return Err(MetricsError::EmptyTarget);
    }
    let names: Vec<&str> = model.feature_subset.iter().map(String::as_str).collect();
    let xs = source.feature_matrix(&names)?;
    let xt = target_covariates.feature_matrix(&names)?;
    let losses = zero_one_losses(model, source)?;
    let w = match weights {
        Some(w) => {
            if w.len() != xs.rows {
                return Err(MetricsError::BadWeights);
            }
            w.to_vec()
        }
        None => vec![1.0; xs.rows],
    };

    // Standardize both sides by the source statistics so the metric is
    // scale-free.
    let k_dim = xs.cols;
    let mut means = vec![0.0; k_dim];
    let mut sds = vec![1.0; k_dim];
    for j in 0..k_dim {
        let mut sum = 0.0;
        for i in 0..xs.rows {
            sum += xs.row(i)[j];
        }
        let mean = sum / xs.rows as f64;
        let mut var = 0.0;
        for i in 0..xs.rows {
            let d = xs.row(i)[j] - mean;
            var += d * d;
        }
        let sd = libm::sqrt(var / xs.rows as f64);
        means[j] = mean;
        sds[j] = if sd > 1e-12 { sd } else { 1.0 };
    }
    let standardize = |m: &Matrix| {
        let mut out = Vec::with_capacity(m.rows * m.cols);
        for i in 0..m.rows {
            for j in 0..m.cols {
                out.push((m.row(i)[j] - means[j]) / sds[j]);
            }
        }
        Matrix::new(out, m.rows, m.cols)
    };
    let zs = standardize(&xs);
    let zt = standardize(&xt);

    let k = KNN_K.min(zs.rows);
    let mut total = 0.0;
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(zs.rows);
    for t in 0..zt.rows {
        dist.clear();
        let trow = zt.row(t);
        let mut exact = 0usize;
        for s in 0..zs.rows {
            let srow = zs.row(s);
            let mut d2 = 0.0;
            for j in 0..k_dim {
                let d = trow[j] - srow[j];
                d2 += d * d;
            }
            if d2 == 0.0 {
                exact += 1;
            }
            dist.push((d2, s));
        }
        let neighbors: &[(f64, usize)] = if exact > 0 {
            dist.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite distance"));
            &dist[..exact]
        } else {
            let nth = k - 1;
            dist.select_nth_unstable_by(nth, |a, b| {
                a.partial_cmp(b).expect("finite distance")
            });
            &dist[..k]
        };
        let mut num = 0.0;
        let mut den = 0.0;
        for &(_, s) in neighbors {
            num += w[s] * losses[s];
            den += w[s];
        }
        if den <= 0.0 {
            return Err(MetricsError::BadWeights);
        }
        total += num / den;
    }
    Ok(total / zt.rows as f64)
}

/// Stratum risk: empirical mean 0-1 loss of `model` over source rows with
/// Y = `y` and D = `d`. Under the second graph assumption this equals the
/// target-domain class-conditional group risk.
pub fn estimate_group_class_risk(
    source: &Dataset,
    model: &LinearModel,
    y: f64,
    d: f64,
) -> Result<f64, MetricsError> {
    let labels = source.labels()?;
    let groups = source.groups()?;
    let losses = zero_one_losses(model, source)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..labels.len() {
        if labels[i] == y && groups[i] == d {
            sum += losses[i];
            count += 1;
        }
    }
    if count == 0 {
        return Err(MetricsError::EmptyStratum { y, d });
    }
    Ok(sum / count as f64)
}

/// Importance weights over source rows by probabilistic classification:
/// fit a ridge logistic discriminator between the (pooled-standardized)
/// source and target covariate samples and return
/// p̂(target|s)/p̂(source|s) · n_source/n_target, clipped to
/// [`WEIGHT_CLIP_MIN`, `WEIGHT_CLIP_MAX`].
pub const WEIGHT_CLIP_MIN: f64 = 0.05;
pub const WEIGHT_CLIP_MAX: f64 = 20.0;

pub fn density_ratio_weights(
    source_s: &Dataset,
    target_s: &Dataset,
) -> Result<Vec<f64>, MetricsError> {
    let ns = source_s.n_rows();
    let nt = target_s.n_rows();
    if ns == 0 || nt == 0 {
        return Err(MetricsError::DegenerateDomains);
    }
    let src_cols = source_s.columns();
    let tgt_cols = target_s.columns();
    if src_cols.len() != tgt_cols.len()
        || src_cols
            .iter()
            .zip(tgt_cols)
            .any(|(a, b)| a.name != b.name || a.kind != b.kind)
    {
        return Err(MetricsError::SchemaMismatch);
    }
    let names: Vec<&str> = src_cols.iter().map(|c| c.name.as_str()).collect();
    let xs = source_s.feature_matrix(&names)?;
    let xt = target_s.feature_matrix(&names)?;

    let k = xs.cols;
    let n = ns + nt;
    let mut pooled = Vec::with_capacity(n * k);
    pooled.extend_from_slice(&xs.data);
    pooled.extend_from_slice(&xt.data);
    // Pooled standardization keeps the discriminator's ridge meaningful.
    for j in 0..k {
        let mut sum = 0.0;
        for i in 0..n {
            sum += pooled[i * k + j];
        }
        let mean = sum / n as f64;
        let mut var = 0.0;
        for i in 0..n {
            let d = pooled[i * k + j] - mean;
            var += d * d;
        }
        let sd = libm::sqrt(var / n as f64);
        let sd = if sd > 1e-12 { sd } else { 1.0 };
        for i in 0..n {
            pooled[i * k + j] = (pooled[i * k + j] - mean) / sd;
        }
    }
    let x = Matrix::new(pooled, n, k);
    let mut domain = vec![0.0; ns];
    domain.extend_from_slice(&vec![1.0; nt]);
    let disc = fit_logistic(&x, &domain, 1e-3);

    let balance = ns as f64 / nt as f64;
    Ok((0..ns)
        .map(|i| {
            let p = disc.probability(x.row(i)).clamp(1e-12, 1.0 - 1e-12);
            (p / (1.0 - p) * balance).clamp(WEIGHT_CLIP_MIN, WEIGHT_CLIP_MAX)
        })
        .collect())
}

/// Decomposition of the excess target risk of a source-trained subset
/// model, on labeled target data:
///   term1 = L(subset model, source-trained) − L(subset model, target-trained)
///   term2 = L(subset model, target-trained) − L(full model, target-trained)
/// term1 vanishes asymptotically when the subset is invariant; term2 is
/// the information lost by dropping features. Requires target labels, so
/// this is an oracle-mode diagnostic.
pub fn decomposition_diagnostic(
    full_model_target: &LinearModel,
    subset_model_source: &LinearModel,
    subset_model_target: &LinearModel,
    target_labeled: &Dataset,
) -> Result<(f64, f64), MetricsError> {
    let labels = target_labeled.labels()?;
    let risk = |m: &LinearModel| -> Result<f64, MetricsError> {
        let preds = m.predict_dataset(target_labeled)?;
        Ok(1.0 - accuracy(&labels, &preds))
    };
    let subset_source = risk(subset_model_source)?;
    let subset_target = risk(subset_model_target)?;
    let full_target = risk(full_model_target)?;
    Ok((subset_source - subset_target, subset_target - full_target))
}

// ---------------------------------------------------------------------------
// Per-replicate report

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    /// (group value, TPR), group +1 first.
    pub tpr_by_group: Vec<(f64, f64)>,
    pub deo: f64,
    pub auprc: f64,
    pub auroc: f64,
    /// Source-only identified target risk, when the bound subset satisfies
    /// the first graph assumption.
    pub identified_target_risk: Option<f64>,
    /// ((y, d), stratum risk) in the fixed order
    /// (+1,a), (+1,d), (−1,a), (−1,d).
    pub group_class_risks: Option<Vec<((f64, f64), f64)>>,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "accuracy,tpr_a,tpr_d,deo,auprc,auroc,\
identified_target_risk,risk_pos_a,risk_pos_d,risk_neg_a,risk_neg_d";

    /// One CSV row matching [`Self::CSV_HEADER`]; absent optional fields
    /// render as empty cells.
    pub fn csv_row(&self) -> String {
        let mut cells: Vec<String> = vec![format_float(self.accuracy)];
        for g in [1.0, -1.0] {
            let tpr = self.tpr_by_group.iter().find(|(gv, _)| *gv == g).map(|(_, t)| *t);
            cells.push(tpr.map(format_float).unwrap_or_default());
        }
        cells.push(format_float(self.deo));
        cells.push(format_float(self.auprc));
        cells.push(format_float(self.auroc));
        cells.push(self.identified_target_risk.map(format_float).unwrap_or_default());
        for want in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let v = self
                .group_class_risks
                .as_ref()
                .and_then(|rs| rs.iter().find(|(k, _)| *k == want))
                .map(|(_, r)| *r);
            cells.push(v.map(format_float).unwrap_or_default());
        }
        cells.join(",")
    }
}

/// Assemble the label-based metrics from predictions and scores.
pub fn compute_report(
    labels: &[f64],
    predictions: &[f64],
    scores: &[f64],
    groups: &[f64],
) -> Result<MetricsReport, MetricsError> {
    Ok(MetricsReport {
        accuracy: accuracy(labels, predictions),
        tpr_by_group: group_tpr(labels, predictions, groups)?,
        deo: deo(labels, predictions, groups)?,
        auprc: auprc(labels, scores)?,
        auroc: auroc(labels, scores)?,
        identified_target_risk: None,
        group_class_risks: None,
    })
}
