//! Replicated source-to-target experiment driver: per seeded replicate,
//! build (or split) a source/target pair, train the four classifier
//! variants — all features vs. the invariant feature subset, each with and
//! without the equal-opportunity constraint — evaluate on the target, and
//! aggregate metric quartiles across replicates.
//!
//! All randomness is derived per (master seed, replicate, stage), so a
//! replicate's outputs are independent of how many others run.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::data::{
    downsample_group, format_float, impute_mean, inject_missingness, split, Dataset,
};
use crate::fair_erm::{train, Constraint, TrainConfig};
use crate::graph::{fig1b_graph, CausalGraph};
use crate::metrics::{
    compute_report, density_ratio_weights, estimate_group_class_risk, estimate_target_risk,
    quantile, MetricsReport,
};
use crate::rng::derive_seed;
use crate::scm::{generate_domain, sample_coefficients, ScmCoefficients, ScmConfig};
use crate::selection::{enumerate_subsets, rank_subsets_by_risk, select_invariant_subset};

/// Output-header variant names, in grid order.
pub const VARIANT_NAMES: [&str; 4] = [
    "SVC w. All Features",
    "SVC w. All Features + Fair Const",
    "SVC w. Feature Subset",
    "SVC w. Feature Subset + Fair Const",
];

struct VariantSpec {
    name: &'static str,
    all_features: bool,
    constrained: bool,
}

const VARIANTS: [VariantSpec; 4] = [
    VariantSpec { name: VARIANT_NAMES[0], all_features: true, constrained: false },
    VariantSpec { name: VARIANT_NAMES[1], all_features: true, constrained: true },
    VariantSpec { name: VARIANT_NAMES[2], all_features: false, constrained: false },
    VariantSpec { name: VARIANT_NAMES[3], all_features: false, constrained: true },
];

// Stage tags for per-replicate seed derivation. Frozen: changing a tag
// changes every downstream stream.
const STAGE_COEFFICIENTS: u64 = 1;
const STAGE_SOURCE: u64 = 2;
const STAGE_TARGET: u64 = 3;
const STAGE_OUTER_SPLIT: u64 = 4;
const STAGE_INNER_SPLIT: u64 = 5;
const STAGE_MISSINGNESS: u64 = 6;
const STAGE_DOWNSAMPLE: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Synthetic,
    Tabular,
}

/// Generator settings for synthetic mode. With `coefficients` unset, each
/// replicate samples fresh structural coefficients from its own stream.
#[derive(Debug, Clone)]
pub struct SyntheticSettings {
    pub gamma: f64,
    pub n: usize,
    pub coefficients: Option<ScmCoefficients>,
}

/// How the "Feature Subset" variants obtain their feature blocks.
#[derive(Debug, Clone, PartialEq)]
pub enum SubsetRule {
    /// Use these block names verbatim.
    Fixed(Vec<String>),
    /// Exhaustive enumeration, validation-risk ranking on an inner 2:1
    /// source split, then the first subset passing both graph assumptions.
    /// When none passes, fall back to the raw risk minimizer (which
    /// carries no invariance guarantee; such records report
    /// `invariant = false`).
    Auto,
}

/// Source reweighting for the identified-target-risk estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    None,
    DensityRatio,
}

/// Target-side distribution perturbations (tabular mode). All missingness
/// injections run before any downsampling, each in configuration order.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    Missingness { column: String, fraction: f64 },
    Downsample { column: String, level: f64, probability: f64 },
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub replicates: usize,
    pub master_seed: u64,
    pub train: TrainConfig,
    pub subset: SubsetRule,
    pub weighting: Weighting,
    /// Required in synthetic mode.
    pub synthetic: Option<SyntheticSettings>,
    /// Tabular mode only.
    pub perturbations: Vec<Perturbation>,
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            mode: Mode::Synthetic,
            replicates: 1,
            master_seed: 0,
            train: TrainConfig::default(),
            subset: SubsetRule::Auto,
            weighting: Weighting::None,
            synthetic: None,
            perturbations: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentError {
    /// Invalid or mode-incomplete configuration.
    Config(String),
    /// Every replicate failed; carries the first failure message.
    AllReplicatesFailed(String),
    EmptyAggregation,
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentError::Config(m) => write!(f, "config error: {m}"),
            ExperimentError::AllReplicatesFailed(m) => {
                write!(f, "all replicates failed; first error: {m}")
            }
            ExperimentError::EmptyAggregation => write!(f, "no replicate records to aggregate"),
        }
    }
}

impl core::error::Error for ExperimentError {}

/// One variant's metrics for one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub variant: &'static str,
    /// Feature blocks bound by the variant's model.
    pub features: Vec<String>,
    /// Both graph assumptions hold for the bound blocks.
    pub invariant: bool,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub metric: &'static str,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantSummary {
    pub variant: &'static str,
    /// Quartile rows in report-column order; rows for metrics no record
    /// carries (e.g. ungated risk estimates) are omitted.
    pub metrics: Vec<MetricSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSummary {
    pub variants: Vec<VariantSummary>,
    pub replicates_requested: usize,
    pub failures: usize,
}

pub struct ExperimentOutput {
    pub summary: AggregateSummary,
    /// Successful replicates only, grouped by replicate in grid order.
    pub records: Vec<ReplicateRecord>,
    pub failures: Vec<ReplicateFailure>,
}

/// Metric columns eligible for aggregation, mirroring
/// [`MetricsReport::CSV_HEADER`].
pub const METRIC_NAMES: [&str; 11] = [
    "accuracy",
    "tpr_a",
    "tpr_d",
    "deo",
    "auprc",
    "auroc",
    "identified_target_risk",
    "risk_pos_a",
    "risk_pos_d",
    "risk_neg_a",
    "risk_neg_d",
];

fn metric_value(m: &MetricsReport, name: &str) -> Option<f64> {
    let tpr = |g: f64| m.tpr_by_group.iter().find(|(gv, _)| *gv == g).map(|(_, t)| *t);
    let stratum = |y: f64, d: f64| {
        m.group_class_risks
            .as_ref()
            .and_then(|rs| rs.iter().find(|(k, _)| *k == (y, d)))
            .map(|(_, r)| *r)
    };
    match name {
        "accuracy" => Some(m.accuracy),
        "tpr_a" => tpr(1.0),
        "tpr_d" => tpr(-1.0),
        "deo" => Some(m.deo),
        "auprc" => Some(m.auprc),
        "auroc" => Some(m.auroc),
        "identified_target_risk" => m.identified_target_risk,
        "risk_pos_a" => stratum(1.0, 1.0),
        "risk_pos_d" => stratum(1.0, -1.0),
        "risk_neg_a" => stratum(-1.0, 1.0),
        "risk_neg_d" => stratum(-1.0, -1.0),
        _ => None,
    }
}

/// Quartile summary over replicate records, per variant per metric
/// (inclusive linear-interpolation quantiles). Counts are filled from the
/// records; the runners overwrite them with requested/failed totals.
pub fn aggregate_replicates(
    records: &[ReplicateRecord],
) -> Result<AggregateSummary, ExperimentError> {
    if records.is_empty() {
        return Err(ExperimentError::EmptyAggregation);
    }
    let mut names: Vec<&'static str> = VARIANT_NAMES
        .into_iter()
        .filter(|n| records.iter().any(|r| r.variant == *n))
        .collect();
    for r in records {
        if !names.contains(&r.variant) {
            names.push(r.variant);
        }
    }
    let mut variants = Vec::with_capacity(names.len());
    for name in names {
        let mut metrics = Vec::new();
        for metric in METRIC_NAMES {
            let values: Vec<f64> = records
                .iter()
                .filter(|r| r.variant == name)
                .filter_map(|r| metric_value(&r.metrics, metric))
                .collect();
            if values.is_empty() {
                continue;
            }
            metrics.push(MetricSummary {
                metric,
                q1: quantile(&values, 0.25),
                median: quantile(&values, 0.5),
                q3: quantile(&values, 0.75),
            });
        }
        variants.push(VariantSummary { variant: name, metrics });
    }
    let mut seen = Vec::new();
    for r in records {
        if !seen.contains(&r.replicate) {
            seen.push(r.replicate);
        }
    }
    Ok(AggregateSummary { variants, replicates_requested: seen.len(), failures: 0 })
}

fn msg<E: fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Resolve the feature blocks to use for the subset variants.
fn resolve_subset(
    cfg: &ExperimentConfig,
    graph: &CausalGraph,
    source: &Dataset,
    replicate: usize,
) -> Result<Vec<String>, String> {
    match &cfg.subset {
        SubsetRule::Fixed(names) => Ok(names.clone()),
        SubsetRule::Auto => {
            let seed = derive_seed(&[cfg.master_seed, replicate as u64, STAGE_INNER_SPLIT]);
            let parts = split(source, &[2.0 / 3.0, 1.0 / 3.0], seed).map_err(msg)?;
            let blocks = source.feature_blocks();
            let refs: Vec<&str> = blocks.iter().map(String::as_str).collect();
            let subsets = enumerate_subsets(&refs, refs.len()).map_err(msg)?;
            let mut ranked =
                rank_subsets_by_risk(&parts[0], &parts[1], &subsets, &cfg.train).map_err(msg)?;
            let chosen = select_invariant_subset(graph, &mut ranked).map_err(msg)?;
            Ok(ranked[chosen.unwrap_or(0)].subset.clone())
        }
    }
}

/// Train and evaluate the four-variant grid for one source/target pair.
fn run_variants(
    cfg: &ExperimentConfig,
    graph: &CausalGraph,
    source: &Dataset,
    target: &Dataset,
    replicate: usize,
) -> Result<Vec<ReplicateRecord>, String> {
    let all_blocks = source.feature_blocks();
    let subset = resolve_subset(cfg, graph, source, replicate)?;
    let target_labels = target.labels().map_err(msg)?;
    let target_groups = target.groups().map_err(msg)?;

    let mut out = Vec::with_capacity(VARIANTS.len());
    for v in &VARIANTS {
        let bound = if v.all_features { all_blocks.clone() } else { subset.clone() };
        let bound_refs: Vec<&str> = bound.iter().map(String::as_str).collect();
        let columns = source.expand_blocks(&bound_refs).map_err(msg)?;
        let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
        let constraint = if v.constrained { Constraint::EoZero } else { Constraint::None };
        let train_cfg = TrainConfig { constraint, ..cfg.train.clone() };

        let model = train(source, &column_refs, &train_cfg).map_err(msg)?;
        let scores = model.score_dataset(target).map_err(msg)?;
        let preds = model.predict_dataset(target).map_err(msg)?;
        let mut report =
            compute_report(&target_labels, &preds, &scores, &target_groups).map_err(msg)?;

        // The risk-identification formulas are only valid when their graph
        // assumption holds for the bound blocks.
        let a1 = graph.check_assumption_1(&bound_refs).map_err(msg)?;
        let a2 = graph.check_assumption_2(&bound_refs).map_err(msg)?;
        if a1 {
            let weights = match cfg.weighting {
                Weighting::None => None,
                Weighting::DensityRatio => {
                    let vs = source.select_columns(&column_refs).map_err(msg)?;
                    let vt = target.select_columns(&column_refs).map_err(msg)?;
                    Some(density_ratio_weights(&vs, &vt).map_err(msg)?)
                }
            };
            let risk = estimate_target_risk(source, target, &model, weights.as_deref())
                .map_err(msg)?;
            report.identified_target_risk = Some(risk);
        }
        if a2 {
            let mut risks = Vec::with_capacity(4);
            for (y, d) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let r = estimate_group_class_risk(source, &model, y, d).map_err(msg)?;
                risks.push(((y, d), r));
            }
            report.group_class_risks = Some(risks);
        }

        out.push(ReplicateRecord {
            replicate,
            variant: v.name,
            features: bound,
            invariant: a1 && a2,
            metrics: report,
        });
    }
    Ok(out)
}

fn run_replicates(
    cfg: &ExperimentConfig,
    mut replicate: impl FnMut(usize) -> Result<Vec<ReplicateRecord>, String>,
) -> Result<ExperimentOutput, ExperimentError> {
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for r in 0..cfg.replicates {
        match replicate(r) {
            Ok(mut rs) => records.append(&mut rs),
            Err(message) => failures.push(ReplicateFailure { replicate: r, message }),
        }
    }
    if records.is_empty() {
        let first = failures.first().map(|f| f.message.clone()).unwrap_or_default();
        return Err(ExperimentError::AllReplicatesFailed(first));
    }
    let mut summary = aggregate_replicates(&records)?;
    summary.replicates_requested = cfg.replicates;
    summary.failures = failures.len();
    Ok(ExperimentOutput { summary, records, failures })
}

fn validate(cfg: &ExperimentConfig, want: Mode) -> Result<(), ExperimentError> {
    if cfg.mode != want {
        return Err(ExperimentError::Config(format!(
            "config mode does not match the requested {} run",
            match want {
                Mode::Synthetic => "synthetic",
                Mode::Tabular => "tabular",
            }
        )));
    }
    if cfg.replicates < 1 {
        return Err(ExperimentError::Config("replicates must be at least 1".to_string()));
    }
    if want == Mode::Synthetic {
        let set = cfg
            .synthetic
            .as_ref()
            .ok_or_else(|| ExperimentError::Config("synthetic settings missing".to_string()))?;
        if !(set.gamma > 0.0) || !set.gamma.is_finite() {
            return Err(ExperimentError::Config("gamma must be positive".to_string()));
        }
        if set.n < 1 {
            return Err(ExperimentError::Config("n must be at least 1".to_string()));
        }
    }
    Ok(())
}

/// Per replicate: sample coefficients, generate a source (c1 = 0) and
/// target (c1 = 1) pair, run the variant grid, and aggregate. The causal
/// graph is the generator's own structure.
pub fn run_synthetic_experiment(
    cfg: &ExperimentConfig,
) -> Result<ExperimentOutput, ExperimentError> {
    validate(cfg, Mode::Synthetic)?;
    let set = cfg.synthetic.clone().expect("validated");
    let graph = fig1b_graph();
    run_replicates(cfg, |r| {
        let rr = r as u64;
        let coefficients = match set.coefficients {
            Some(c) => c,
            None => sample_coefficients(derive_seed(&[
                cfg.master_seed,
                rr,
                STAGE_COEFFICIENTS,
            ])),
        };
        let mk = |stage: u64, c1: f64| {
            let seed = derive_seed(&[cfg.master_seed, rr, stage]);
            generate_domain(
                &ScmConfig { coefficients, gamma: set.gamma, n: set.n, seed },
                c1,
            )
        };
        let source = mk(STAGE_SOURCE, 0.0);
        let target = mk(STAGE_TARGET, 1.0);
        run_variants(cfg, &graph, &source, &target, r)
    })
}

/// Per replicate: split the table 67/33 into source and held-out target,
/// perturb the target (missingness injections, then group downsampling),
/// mean-impute both sides from source statistics, then run the variant
/// grid. Target labels are used for evaluation only.
pub fn run_tabular_experiment(
    cfg: &ExperimentConfig,
    data: &Dataset,
    graph: &CausalGraph,
) -> Result<ExperimentOutput, ExperimentError> {
    validate(cfg, Mode::Tabular)?;
    run_replicates(cfg, |r| {
        let rr = r as u64;
        let outer = derive_seed(&[cfg.master_seed, rr, STAGE_OUTER_SPLIT]);
        let mut parts = split(data, &[0.67, 0.33], outer).map_err(msg)?;
        let mut target = parts.pop().expect("two splits");
        let source_raw = parts.pop().expect("two splits");
        for (k, p) in cfg.perturbations.iter().enumerate() {
            if let Perturbation::Missingness { column, fraction } = p {
                let seed = derive_seed(&[cfg.master_seed, rr, STAGE_MISSINGNESS, k as u64]);
                target = inject_missingness(&target, column, *fraction, seed).map_err(msg)?;
            }
        }
        for (k, p) in cfg.perturbations.iter().enumerate() {
            if let Perturbation::Downsample { column, level, probability } = p {
                let seed = derive_seed(&[cfg.master_seed, rr, STAGE_DOWNSAMPLE, k as u64]);
                target =
                    downsample_group(&target, column, *level, *probability, seed).map_err(msg)?;
            }
        }
        let source = impute_mean(&source_raw, &source_raw).map_err(msg)?;
        let target = impute_mean(&target, &source_raw).map_err(msg)?;
        run_variants(cfg, graph, &source, &target, r)
    })
}

/// Per-replicate CSV: identification columns then the metric columns.
pub fn serialize_replicates(records: &[ReplicateRecord]) -> String {
    let mut out = String::from("replicate,variant,features,invariant,");
    out.push_str(MetricsReport::CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.replicate,
            r.variant,
            r.features.join("+"),
            r.invariant,
            r.metrics.csv_row()
        ));
    }
    out
}

/// Structured-text summary: replicate counts, then one bracketed section
/// per variant with `metric q1 <v> median <v> q3 <v>` rows.
pub fn serialize_summary(s: &AggregateSummary) -> String {
    let mut out = format!("replicates {}\nfailures {}\n", s.replicates_requested, s.failures);
    for v in &s.variants {
        out.push('\n');
        out.push_str(&format!("[{}]\n", v.variant));
        for m in &v.metrics {
            out.push_str(&format!(
                "{} q1 {} median {} q3 {}\n",
                m.metric,
                format_float(m.q1),
                format_float(m.median),
                format_float(m.q3)
            ));
        }
    }
    out
}
