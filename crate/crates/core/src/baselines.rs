//! Offline baselines: Gibbs and Metropolis-within-Gibbs samplers over
//! cluster assignments, and Bayesian agglomerative clustering.
//!
//! The samplers operate on a dense assignment vector. One sweep visits every
//! observation in a fresh random order and redraws (or proposes) its label
//! from the marginal conditional: prior term `|c|/(alpha+n-1)` for existing
//! clusters and `alpha/(alpha+n-1)` for a fresh one, times the cluster
//! predictive. Empty clusters are compacted immediately so the conditional
//! enumeration stays well defined.
//!
//! Agglomerative clustering starts from the fully disconnected state and
//! repeatedly applies the best cluster-pair merge whose posterior gain passes
//! the acceptance threshold, where the gain is the log Bayes factor between
//! the merged and unmerged clusterings. The full variant scores every pair
//! each iteration; the batched variant scores a uniform sample of pairs and
//! terminates after a patience window without changes.

use alloc::vec::Vec;
use core::fmt;

use rand_core::RngCore;

use crate::clock::Clock;
use crate::metrics::{RunTrace, StepRecord};
use crate::models::{ModelSel, Scorer};
use crate::numeric::{ln, ln_gamma};
use crate::partition::{Cluster, CrpPrior, DataId, Partition};
use crate::posterior::ewens_log_posterior_cached;
use crate::rng::{categorical_from_log_weights, shuffle, uniform_f64, uniform_usize};
use crate::smc::EngineError;

/// Dense per-observation cluster labels, kept consistent with an explicit
/// member list per cluster.
#[derive(Clone, Debug)]
pub struct AssignmentVector {
    labels: Vec<usize>,
    clusters: Vec<Vec<DataId>>,
}

impl AssignmentVector {
    /// Every observation in its own cluster.
    pub fn all_singletons(n: usize) -> Self {
        AssignmentVector {
            labels: (0..n).collect(),
            clusters: (0..n).map(|i| alloc::vec![DataId(i as u32)]).collect(),
        }
    }

    pub fn from_partition(partition: &Partition) -> Self {
        let n = partition.n_ids();
        let mut labels = alloc::vec![usize::MAX; n];
        let mut clusters = Vec::with_capacity(partition.n_clusters());
        for (k, c) in partition.clusters().iter().enumerate() {
            for &id in c.members() {
                labels[id.index()] = k;
            }
            clusters.push(c.members().to_vec());
        }
        AssignmentVector { labels, clusters }
    }

    pub fn to_partition(&self) -> Partition {
        Partition::new(
            self.clusters
                .iter()
                .map(|members| Cluster::new(members.clone()).expect("non-empty cluster"))
                .collect(),
        )
        .expect("assignment vector induces a valid partition")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn label_of(&self, id: DataId) -> usize {
        self.labels[id.index()]
    }

    pub fn cluster_members(&self, label: usize) -> &[DataId] {
        &self.clusters[label]
    }

    /// Detaches `id` from its cluster, compacting an emptied label. Returns
    /// the target that re-assigning `id` to its previous home would use.
    fn detach(&mut self, id: DataId) -> SweepTarget {
        let label = self.labels[id.index()];
        let members = &mut self.clusters[label];
        let pos = members.binary_search(&id).expect("id in its own cluster");
        members.remove(pos);
        if members.is_empty() {
            // Swap-remove keeps labels dense; relabel the moved cluster.
            let last = self.clusters.len() - 1;
            self.clusters.swap_remove(label);
            if label != last {
                for m in self.clusters[label].clone() {
                    self.labels[m.index()] = label;
                }
            }
            self.labels[id.index()] = usize::MAX;
            SweepTarget::New
        } else {
            self.labels[id.index()] = usize::MAX;
            SweepTarget::Existing(label)
        }
    }

    fn attach(&mut self, id: DataId, target: SweepTarget) {
        match target {
            SweepTarget::Existing(label) => {
                let members = &mut self.clusters[label];
                let pos = members.binary_search(&id).unwrap_err();
                members.insert(pos, id);
                self.labels[id.index()] = label;
            }
            SweepTarget::New => {
                self.labels[id.index()] = self.clusters.len();
                self.clusters.push(alloc::vec![id]);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SweepTarget {
    Existing(usize),
    New,
}

/// Unnormalised log conditional of assigning `id` to each existing cluster
/// (in label order) and then to a fresh cluster, with `id` detached.
fn conditional_log_weights(
    z: &AssignmentVector,
    id: DataId,
    scorer: &mut Scorer<'_>,
    model: ModelSel,
    prior: CrpPrior,
) -> Result<Vec<f64>, EngineError> {
    let n = z.len();
    let mut weights = Vec::with_capacity(z.n_clusters() + 1);
    for members in &z.clusters {
        let w = prior.log_assignment_term(Some(members.len()), n)
            + scorer.log_predictive(model, id, members)?;
        weights.push(w);
    }
    weights.push(prior.log_assignment_term(None, n) + scorer.log_predictive(model, id, &[])?);
    Ok(weights)
}

fn target_from_index(index: usize, n_clusters: usize) -> SweepTarget {
    if index == n_clusters {
        SweepTarget::New
    } else {
        SweepTarget::Existing(index)
    }
}

/// One Gibbs sweep: every observation, in a fresh random order, has its
/// label redrawn from the full conditional under the main model.
pub fn gibbs_sweep<R: RngCore + ?Sized>(
    z: &mut AssignmentVector,
    scorer: &mut Scorer<'_>,
    prior: CrpPrior,
    rng: &mut R,
) -> Result<(), EngineError> {
    let mut order: Vec<DataId> = (0..z.len() as u32).map(DataId).collect();
    shuffle(rng, &mut order);
    for id in order {
        z.detach(id);
        let weights = conditional_log_weights(z, id, scorer, ModelSel::Main, prior)?;
        let pick = categorical_from_log_weights(rng, &weights);
        z.attach(id, target_from_index(pick, z.n_clusters()));
    }
    Ok(())
}

/// One Metropolis-within-Gibbs sweep: labels are proposed from the surrogate
/// conditional and accepted with the Metropolis-Hastings ratio against the
/// main-model conditional. Re-proposing the current label, or any proposal
/// with non-negative log ratio, is accepted without consuming randomness, so
/// with the surrogate equal to the main model the chain is identical to
/// Gibbs on the same RNG stream.
pub fn mwg_sweep<R: RngCore + ?Sized>(
    z: &mut AssignmentVector,
    scorer: &mut Scorer<'_>,
    prior: CrpPrior,
    rng: &mut R,
) -> Result<(), EngineError> {
    let mut order: Vec<DataId> = (0..z.len() as u32).map(DataId).collect();
    shuffle(rng, &mut order);
    for id in order {
        let current = z.detach(id);
        let proposal_weights = conditional_log_weights(z, id, scorer, ModelSel::Surrogate, prior)?;
        let pick = categorical_from_log_weights(rng, &proposal_weights);
        let proposed = target_from_index(pick, z.n_clusters());
        let chosen = if proposed == current {
            proposed
        } else {
            let current_index = match current {
                SweepTarget::Existing(k) => k,
                SweepTarget::New => z.n_clusters(),
            };
            let main_term = |z: &AssignmentVector,
                             scorer: &mut Scorer<'_>,
                             target: SweepTarget|
             -> Result<f64, EngineError> {
                let n = z.len();
                Ok(match target {
                    SweepTarget::Existing(k) => {
                        prior.log_assignment_term(Some(z.clusters[k].len()), n)
                            + scorer.log_predictive(ModelSel::Main, id, &z.clusters[k])?
                    }
                    SweepTarget::New => {
                        prior.log_assignment_term(None, n)
                            + scorer.log_predictive(ModelSel::Main, id, &[])?
                    }
                })
            };
            // The proposal normaliser cancels in the Hastings ratio; group
            // the terms so that a surrogate identical to the main model
            // cancels exactly and the acceptance draw is skipped, keeping
            // the RNG stream aligned with plain Gibbs.
            let log_ratio = (main_term(z, scorer, proposed)? - proposal_weights[pick])
                + (proposal_weights[current_index] - main_term(z, scorer, current)?);
            if log_ratio >= 0.0 || ln(uniform_f64(rng).max(f64::MIN_POSITIVE)) < log_ratio {
                proposed
            } else {
                current
            }
        };
        z.attach(id, chosen);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McmcVariant {
    Gibbs,
    /// Metropolis-within-Gibbs with the surrogate as proposal distribution.
    MetropolisWithinGibbs,
}

impl fmt::Display for McmcVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            McmcVariant::Gibbs => write!(f, "gibbs"),
            McmcVariant::MetropolisWithinGibbs => write!(f, "mwg"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct McmcConfig {
    /// Wall-clock budget: the run stops (returning best-so-far) once
    /// exceeded. `None` means unbounded.
    pub max_runtime_secs: Option<f64>,
    /// Stop after this many sweeps without a change to the MAP estimate.
    pub patience_sweeps: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            max_runtime_secs: None,
            patience_sweeps: 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McmcSummary {
    pub sweeps: usize,
    pub map_log_posterior: f64,
    pub budget_exceeded: bool,
}

/// Runs sweeps until the MAP estimate stalls for `patience_sweeps` or the
/// time budget runs out; returns the best-scoring partition visited.
pub fn mcmc_run<R: RngCore + ?Sized>(
    scorer: &mut Scorer<'_>,
    prior: CrpPrior,
    cfg: &McmcConfig,
    variant: McmcVariant,
    rng: &mut R,
    clock: &dyn Clock,
) -> Result<(Partition, McmcSummary, RunTrace), EngineError> {
    let n = scorer.store().len();
    if n == 0 {
        return Err(EngineError::EmptyStream);
    }
    if cfg.patience_sweeps == 0 {
        return Err(EngineError::ZeroParticleBudget);
    }
    let mut z = AssignmentVector::all_singletons(n);
    let mut map = z.to_partition();
    let mut map_score = ewens_log_posterior_cached(&map, prior.alpha(), scorer)?;
    let mut trace = RunTrace::default();
    let mut sweeps = 0usize;
    let mut stale = 0usize;
    let mut budget_exceeded = false;
    loop {
        if let Some(budget) = cfg.max_runtime_secs {
            if clock.elapsed_secs() >= budget {
                budget_exceeded = true;
                break;
            }
        }
        if stale >= cfg.patience_sweeps {
            break;
        }
        match variant {
            McmcVariant::Gibbs => gibbs_sweep(&mut z, scorer, prior, rng)?,
            McmcVariant::MetropolisWithinGibbs => mwg_sweep(&mut z, scorer, prior, rng)?,
        }
        sweeps += 1;
        let current = z.to_partition();
        let score = ewens_log_posterior_cached(&current, prior.alpha(), scorer)?;
        if score > map_score {
            map = current;
            map_score = score;
            stale = 0;
        } else {
            stale += 1;
        }
        trace.push(StepRecord {
            step: sweeps - 1,
            top_log_posterior: map_score,
            f1_vs_gold: None,
            subproblem_count: 1,
            log_effective_particles: 0.0,
            cumulative_main_evals: scorer.main_misses(),
            wall_secs: clock.elapsed_secs(),
        });
    }
    Ok((
        map,
        McmcSummary {
            sweeps,
            map_log_posterior: map_score,
            budget_exceeded,
        },
        trace,
    ))
}

#[derive(Clone, Debug)]
pub struct AgglomConfig {
    /// Number of candidate pairs scored per iteration; `None` scores all.
    pub batch_size: Option<usize>,
    /// Batched mode stops after this many iterations without a merge.
    pub patience_iterations: usize,
    /// A merge is performed only when its log Bayes factor exceeds this.
    pub accept_threshold: f64,
    pub max_runtime_secs: Option<f64>,
}

impl Default for AgglomConfig {
    fn default() -> Self {
        AgglomConfig {
            batch_size: None,
            patience_iterations: 100,
            accept_threshold: 0.0,
            max_runtime_secs: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgglomSummary {
    pub iterations: usize,
    pub merges: usize,
    pub log_posterior: f64,
    pub budget_exceeded: bool,
}

/// Log Bayes factor of merging clusters `a` and `b` against keeping them
/// apart: the change in the unnormalised log posterior under the merge.
fn merge_gain(
    scorer: &mut Scorer<'_>,
    prior: CrpPrior,
    a: &[DataId],
    b: &[DataId],
) -> Result<f64, EngineError> {
    let mut merged: Vec<DataId> = Vec::with_capacity(a.len() + b.len());
    merged.extend_from_slice(a);
    merged.extend_from_slice(b);
    merged.sort_unstable();
    let lp_merged = scorer.log_marginal(ModelSel::Main, &merged)?;
    let lp_a = scorer.log_marginal(ModelSel::Main, a)?;
    let lp_b = scorer.log_marginal(ModelSel::Main, b)?;
    // Prior part: Gamma(na+nb)/(Gamma(na)Gamma(nb)) and one fewer alpha
    // factor; the Ewens denominator is unchanged at fixed n.
    Ok(
        lp_merged - lp_a - lp_b + ln_gamma((a.len() + b.len()) as f64)
            - ln_gamma(a.len() as f64)
            - ln_gamma(b.len() as f64)
            - ln(prior.alpha()),
    )
}

/// Agglomerative clustering from the fully disconnected state, merging the
/// best-scoring pair per iteration while any candidate passes the threshold.
pub fn agglomerative_run<R: RngCore + ?Sized>(
    scorer: &mut Scorer<'_>,
    prior: CrpPrior,
    cfg: &AgglomConfig,
    rng: &mut R,
    clock: &dyn Clock,
) -> Result<(Partition, AgglomSummary, RunTrace), EngineError> {
    let n = scorer.store().len();
    if n == 0 {
        return Err(EngineError::EmptyStream);
    }
    let mut clusters: Vec<Vec<DataId>> = (0..n as u32).map(|i| alloc::vec![DataId(i)]).collect();
    let mut iterations = 0usize;
    let mut merges = 0usize;
    let mut stale = 0usize;
    let mut budget_exceeded = false;
    let mut trace = RunTrace::default();

    loop {
        if let Some(budget) = cfg.max_runtime_secs {
            if clock.elapsed_secs() >= budget {
                budget_exceeded = true;
                break;
            }
        }
        if clusters.len() < 2 {
            break;
        }
        let total_pairs = clusters.len() * (clusters.len() - 1) / 2;
        let candidates: Vec<(usize, usize)> = match cfg.batch_size {
            Some(batch) if batch < total_pairs => {
                // Uniform sample of distinct pairs, fresh each iteration.
                let mut seen = alloc::collections::BTreeSet::new();
                while seen.len() < batch {
                    let a = uniform_usize(rng, clusters.len());
                    let b = uniform_usize(rng, clusters.len());
                    if a != b {
                        seen.insert((a.min(b), a.max(b)));
                    }
                }
                seen.into_iter().collect()
            }
            _ => {
                let mut all = Vec::with_capacity(total_pairs);
                for j in 0..clusters.len() {
                    for k in (j + 1)..clusters.len() {
                        all.push((j, k));
                    }
                }
                all
            }
        };

        let mut best: Option<(f64, (usize, usize))> = None;
        for &(j, k) in &candidates {
            let gain = merge_gain(scorer, prior, &clusters[j], &clusters[k])?;
            if gain > cfg.accept_threshold && best.is_none_or(|(bg, _)| gain > bg) {
                best = Some((gain, (j, k)));
            }
        }
        iterations += 1;

        match best {
            Some((_, (j, k))) => {
                let absorbed = clusters.swap_remove(k);
                clusters[j].extend(absorbed);
                clusters[j].sort_unstable();
                merges += 1;
                stale = 0;
            }
            None => {
                stale += 1;
                // Exhaustive mode is done as soon as no pair passes; batched
                // mode waits out its patience window.
                if cfg.batch_size.is_none() || stale >= cfg.patience_iterations {
                    break;
                }
                continue;
            }
        }

        let partition = Partition::new(
            clusters
                .iter()
                .map(|c| Cluster::new(c.clone()).expect("non-empty"))
                .collect(),
        )?;
        let lp = ewens_log_posterior_cached(&partition, prior.alpha(), scorer)?;
        trace.push(StepRecord {
            step: iterations - 1,
            top_log_posterior: lp,
            f1_vs_gold: None,
            subproblem_count: 1,
            log_effective_particles: 0.0,
            cumulative_main_evals: scorer.main_misses(),
            wall_secs: clock.elapsed_secs(),
        });
    }

    let partition = Partition::new(
        clusters
            .into_iter()
            .map(|c| Cluster::new(c).expect("non-empty"))
            .collect(),
    )?;
    let log_posterior = ewens_log_posterior_cached(&partition, prior.alpha(), scorer)?;
    Ok((
        partition,
        AgglomSummary {
            iterations,
            merges,
            log_posterior,
            budget_exceeded,
        },
        trace,
    ))
}
