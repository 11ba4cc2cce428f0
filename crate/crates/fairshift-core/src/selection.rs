//! Invariant feature-subset search: exhaustively enumerate candidate
//! subsets, rank them by source-domain validation risk, then walk the
//! ranking and pick the first subset whose conditional-independence
//! assumptions hold on the causal graph. Subsets are expressed in source
//! (block) column names; one-hot expansions and missingness indicators
//! follow their source column as a unit.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::data::{format_float, DataError, Dataset};
use crate::fair_erm::{train, Constraint, FairErmError, TrainConfig};
use crate::graph::{CausalGraph, GraphError};
use crate::metrics::accuracy;

/// Hard cap for exhaustive enumeration (2^20 subsets).
pub const EXHAUSTIVE_FEATURE_GUARD: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetReport {
    pub subset: Vec<String>,
    pub validation_risk: f64,
    pub assumption1: bool,
    pub assumption2: bool,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectionError {
    TooManyFeatures(usize),
    Train(FairErmError),
    Graph(GraphError),
    Data(DataError),
}

impl fmt::Display for SelectionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionError::TooManyFeatures(n) => {
                write!(f, "{n} features exceed the exhaustive-search guard of {EXHAUSTIVE_FEATURE_GUARD}")
            }
            SelectionError::Train(e) => write!(f, "{e}"),
            SelectionError::Graph(e) => write!(f, "{e}"),
            SelectionError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SelectionError {}

impl From<FairErmError> for SelectionError {
    fn from(e: FairErmError) -> SelectionError {
        SelectionError::Train(e)
    }
}

impl From<GraphError> for SelectionError {
    fn from(e: GraphError) -> SelectionError {
        SelectionError::Graph(e)
    }
}

impl From<DataError> for SelectionError {
    fn from(e: DataError) -> SelectionError {
        SelectionError::Data(e)
    }
}

/// All non-empty subsets of `features` with at most `max_size` members,
/// ordered by size descending and lexicographically (by member-name
/// sequence) within a size. Members keep the order they have in
/// `features`.
pub fn enumerate_subsets(
    features: &[&str],
    max_size: usize,
) -> Result<Vec<Vec<String>>, SelectionError> {
    let n = features.len();
    if n > EXHAUSTIVE_FEATURE_GUARD {
        return Err(SelectionError::TooManyFeatures(n));
    }
    assert!(max_size >= 1 && max_size <= n, "max_size out of range");
    let mut out: Vec<Vec<String>> = Vec::new();
    for bits in 1u32..(1u32 << n) {
        if (bits.count_ones() as usize) > max_size {
            continue;
        }
        let subset: Vec<String> = (0..n)
            .filter(|j| bits & (1 << j) != 0)
            .map(|j| features[j].to_string())
            .collect();
        out.push(subset);
    }
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    Ok(out)
}

/// Train one unconstrained model per subset on `train_split` and sort the
/// reports by held-out 0-1 risk on `val_split`, ascending; ties prefer the
/// smaller subset, then lexicographic order. Assumption flags are filled
/// in later by [`select_invariant_subset`].
pub fn rank_subsets_by_risk(
    train_split: &Dataset,
    val_split: &Dataset,
    subsets: &[Vec<String>],
    cfg: &TrainConfig,
) -> Result<Vec<SubsetReport>, SelectionError> {
    let cfg = TrainConfig { constraint: Constraint::None, ..cfg.clone() };
    let val_labels = val_split.labels()?;
    let mut reports = Vec::with_capacity(subsets.len());
    for subset in subsets {
        let blocks: Vec<&str> = subset.iter().map(String::as_str).collect();
        let columns = train_split.expand_blocks(&blocks)?;
        let names: Vec<&str> = columns.iter().map(String::as_str).collect();
        let model = train(train_split, &names, &cfg)?;
        let preds = model.predict_dataset(val_split)?;
        reports.push(SubsetReport {
            subset: subset.clone(),
            validation_risk: 1.0 - accuracy(&val_labels, &preds),
            assumption1: false,
            assumption2: false,
            selected: false,
        });
    }
    reports.sort_by(|a, b| {
        a.validation_risk
            .partial_cmp(&b.validation_risk)
            .expect("finite risks")
            .then(a.subset.len().cmp(&b.subset.len()))
            .then_with(|| a.subset.cmp(&b.subset))
    });
    Ok(reports)
}

/// Walk the ranked reports in order, evaluating both graph assumptions for
/// each (recorded on the report), and mark the first subset passing both
/// as selected. Returns its index, or `None` when no candidate passes —
/// the caller may then fall back to the raw risk minimizer, which carries
/// no invariance guarantee.
pub fn select_invariant_subset(
    graph: &CausalGraph,
    ranked: &mut [SubsetReport],
) -> Result<Option<usize>, SelectionError> {
    let mut chosen = None;
    for (i, report) in ranked.iter_mut().enumerate() {
        let names: Vec<&str> = report.subset.iter().map(String::as_str).collect();
        report.assumption1 = graph.check_assumption_1(&names)?;
        report.assumption2 = graph.check_assumption_2(&names)?;
        report.selected = false;
        if chosen.is_none() && report.assumption1 && report.assumption2 {
            chosen = Some(i);
        }
    }
    if let Some(i) = chosen {
        ranked[i].selected = true;
    }
    Ok(chosen)
}

/// CSV audit dump: one row per report, subsets joined with `+`.
pub fn serialize_subset_reports(reports: &[SubsetReport]) -> String {
    let mut out = String::from("subset,validation_risk,assumption1,assumption2,selected\n");
    for r in reports {
        out.push_str(&r.subset.join("+"));
        out.push(',');
        out.push_str(&format_float(r.validation_risk));
        for flag in [r.assumption1, r.assumption2, r.selected] {
            out.push(',');
            out.push_str(if flag { "true" } else { "false" });
        }
        out.push('\n');
    }
    out
}
