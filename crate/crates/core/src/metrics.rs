//! Clustering evaluation: per-element B-cubed precision/recall/F1,
//! log-posterior reporting and per-step run diagnostics.

use alloc::vec::Vec;
use core::fmt;

use crate::models::{LikelihoodModel, PayloadStore};
use crate::partition::{DataId, Partition};
use crate::posterior::{ewens_log_posterior, PosteriorError};

#[derive(Clone, Debug, PartialEq)]
pub enum MetricsError {
    /// Predicted and gold partitions cover different id sets.
    CoverMismatch,
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::CoverMismatch => {
                write!(f, "predicted and gold partitions cover different ids")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MetricsError {}

/// Evaluation summary for one clustering.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub log_posterior: f64,
    pub n_clusters: usize,
}

/// B-cubed scores of a predicted partition against a gold partition.
///
/// Per element e: precision `|P(e) ∩ G(e)| / |P(e)|`, recall
/// `|P(e) ∩ G(e)| / |G(e)|`, averaged over elements. Swapping the arguments
/// swaps precision and recall.
pub fn bcubed(pred: &Partition, gold: &Partition) -> Result<(f64, f64, f64), MetricsError> {
    if pred.n_ids() != gold.n_ids() || pred.id_set() != gold.id_set() {
        return Err(MetricsError::CoverMismatch);
    }
    let n = pred.n_ids();
    let mut precision = 0.0;
    let mut recall = 0.0;
    for pc in pred.clusters() {
        for gc in gold.clusters() {
            let overlap = intersection_size(pc.members(), gc.members());
            if overlap == 0 {
                continue;
            }
            let o = overlap as f64;
            // Each of the `overlap` elements contributes o/|P| to precision
            // and o/|G| to recall.
            precision += o * o / pc.len() as f64;
            recall += o * o / gc.len() as f64;
        }
    }
    precision /= n as f64;
    recall /= n as f64;
    Ok((precision, recall, f1_score(precision, recall)))
}

/// Harmonic mean, with 0 when both sides are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn intersection_size(a: &[DataId], b: &[DataId]) -> usize {
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                k += 1;
                i += 1;
                j += 1;
            }
        }
    }
    k
}

/// Unnormalised log posterior of a clustering; the single code path behind
/// every reported posterior number.
pub fn score_clustering(
    partition: &Partition,
    alpha: f64,
    model: &dyn LikelihoodModel,
    store: &PayloadStore,
) -> Result<f64, PosteriorError> {
    ewens_log_posterior(partition, alpha, model, store)
}

/// Full report: B-cubed against gold plus the log posterior.
pub fn evaluate(
    pred: &Partition,
    gold: &Partition,
    alpha: f64,
    model: &dyn LikelihoodModel,
    store: &PayloadStore,
) -> Result<EvalReport, EvaluateError> {
    let (precision, recall, f1) = bcubed(pred, gold)?;
    let log_posterior = score_clustering(pred, alpha, model, store)?;
    Ok(EvalReport {
        precision,
        recall,
        f1,
        log_posterior,
        n_clusters: pred.n_clusters(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum EvaluateError {
    Metrics(MetricsError),
    Posterior(PosteriorError),
}

impl fmt::Display for EvaluateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvaluateError::Metrics(e) => write!(f, "{e}"),
            EvaluateError::Posterior(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EvaluateError {}

impl From<MetricsError> for EvaluateError {
    fn from(e: MetricsError) -> Self {
        EvaluateError::Metrics(e)
    }
}

impl From<PosteriorError> for EvaluateError {
    fn from(e: PosteriorError) -> Self {
        EvaluateError::Posterior(e)
    }
}

/// One per-step diagnostics record.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// Log posterior (Ewens formula) of the top-weighted clustering.
    pub top_log_posterior: f64,
    /// B-cubed F1 of the top clustering against gold over the observed ids.
    pub f1_vs_gold: Option<f64>,
    pub subproblem_count: usize,
    /// Natural log of the implicitly represented particle count.
    pub log_effective_particles: f64,
    pub cumulative_main_evals: u64,
    pub wall_secs: f64,
}

/// Per-step diagnostics for one run; step indices strictly increase.
#[derive(Clone, Debug, Default)]
pub struct RunTrace {
    pub steps: Vec<StepRecord>,
}

impl RunTrace {
    pub fn push(&mut self, record: StepRecord) {
        debug_assert!(self.steps.last().is_none_or(|last| record.step > last.step));
        self.steps.push(record);
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.steps.last()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}
