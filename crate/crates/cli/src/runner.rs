//! Loading datasets, executing one configured run, and evaluating outputs.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rand_core::SeedableRng;
use rand_pcg::Pcg64Mcg;

use dpc_core::baselines::{agglomerative_run, mcmc_run, AgglomConfig, McmcConfig, McmcVariant};
use dpc_core::clock::{Clock, WallClock};
use dpc_core::data::{gold_partition_of_fragments, gold_partition_of_points};
use dpc_core::metrics::{bcubed, score_clustering, RunTrace};
use dpc_core::models::{LikelihoodModel, PayloadStore, Scorer};
use dpc_core::partition::{Cluster, CrpPrior, DataId, Partition};
use dpc_core::rng::shuffle;
use dpc_core::smc::{run_smc, RunOptions};
use dpc_core::splitsmc::{run_split_smc, SplitSmcObserver, Subproblem};

use crate::config::{build_model, Algorithm, DataKind, Settings};

pub struct LoadedData {
    pub store: PayloadStore,
    pub gold: Option<Partition>,
    /// Original id per arrival index.
    pub original_ids: Vec<u64>,
    pub dims: usize,
    pub names: Vec<String>,
}

/// Reads a dataset, optionally shuffles it deterministically, and reassigns
/// ids to arrival order (original ids kept as metadata).
pub fn load_data(path: &Path, kind: DataKind, shuffle_seed: Option<u64>) -> Result<LoadedData> {
    match kind {
        DataKind::Points => {
            let mut points = crate::formats::read_points(path)?;
            if let Some(seed) = shuffle_seed {
                shuffle(&mut Pcg64Mcg::seed_from_u64(seed), &mut points);
            }
            let dims = points[0].coords.len();
            let store =
                PayloadStore::from_points(points.iter().map(|p| p.coords.clone()).collect())
                    .map_err(|e| anyhow!("{e}"))?;
            let gold = gold_partition_of_points(&points);
            let original_ids = points.iter().map(|p| p.original_id).collect();
            Ok(LoadedData {
                store,
                gold,
                original_ids,
                dims,
                names: Vec::new(),
            })
        }
        DataKind::Fragments => {
            let mut fragments = crate::formats::read_fragments(path)?;
            if let Some(seed) = shuffle_seed {
                shuffle(&mut Pcg64Mcg::seed_from_u64(seed), &mut fragments);
            }
            let mut names = Vec::with_capacity(fragments.len());
            for f in &fragments {
                match f.name() {
                    Some(name) if !name.is_empty() => names.push(name.to_string()),
                    _ => bail!("fragment {} has no usable 'name' attribute", f.original_id),
                }
            }
            let store = PayloadStore::from_names(names.clone());
            let gold = gold_partition_of_fragments(&fragments);
            let original_ids = fragments.iter().map(|f| f.original_id).collect();
            Ok(LoadedData {
                store,
                gold,
                original_ids,
                dims: 0,
                names,
            })
        }
    }
}

/// Counts split/merge events during a factorised run for the summary.
#[derive(Default)]
struct EventCounter {
    splits: usize,
    merges: usize,
    multinomial_merges: usize,
    merge_check_drops: usize,
}

impl SplitSmcObserver for EventCounter {
    fn on_split(&mut self, _before: &Subproblem, _after: &[Subproblem]) {
        self.splits += 1;
    }
    fn on_merge(&mut self, _ids: &dpc_core::partition::IdSet, used_multinomial: bool) {
        self.merges += 1;
        if used_multinomial {
            self.multinomial_merges += 1;
        }
    }
    fn on_merge_check_drop(&mut self, _dropped: &Subproblem) {
        self.merge_check_drops += 1;
    }
}

/// Everything a finished run reports.
pub struct RunOutcome {
    /// Cluster label per record, keyed by original id.
    pub labels: Vec<(u64, usize)>,
    pub partition: Partition,
    pub trace: RunTrace,
    pub log_posterior: f64,
    pub n_clusters: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub main_evals: u64,
    pub surrogate_evals: u64,
    pub runtime_secs: f64,
    pub budget_exceeded: bool,
    /// (splits, merges, multinomial merges, merge-check drops); split-smc only.
    pub events: Option<(usize, usize, usize, usize)>,
}

impl RunOutcome {
    pub fn summary_pairs(&self, settings: &Settings, n: usize) -> Vec<(String, String)> {
        let mut pairs = vec![
            ("algorithm".into(), settings.algorithm.as_str().into()),
            ("n".into(), n.to_string()),
            ("m".into(), settings.m.to_string()),
            (
                "m_prime".into(),
                settings.m_prime.map_or("-".into(), |v| v.to_string()),
            ),
            ("alpha".into(), settings.alpha.to_string()),
            ("seed".into(), settings.seed.to_string()),
            (
                "shuffle_seed".into(),
                settings.shuffle_seed.map_or("-".into(), |v| v.to_string()),
            ),
            ("log_posterior".into(), format!("{:.6}", self.log_posterior)),
            ("n_clusters".into(), self.n_clusters.to_string()),
            ("main_evals".into(), self.main_evals.to_string()),
            ("surrogate_evals".into(), self.surrogate_evals.to_string()),
            ("runtime_secs".into(), format!("{:.6}", self.runtime_secs)),
            ("budget_exceeded".into(), self.budget_exceeded.to_string()),
        ];
        if let Some((splits, merges, multinomial, drops)) = self.events {
            pairs.push(("split_events".into(), splits.to_string()));
            pairs.push(("merge_events".into(), merges.to_string()));
            pairs.push(("multinomial_merges".into(), multinomial.to_string()));
            pairs.push(("merge_check_drops".into(), drops.to_string()));
        }
        if let (Some(p), Some(r), Some(f1)) = (self.precision, self.recall, self.f1) {
            pairs.push(("precision".into(), format!("{p:.6}")));
            pairs.push(("recall".into(), format!("{r:.6}")));
            pairs.push(("f1".into(), format!("{f1:.6}")));
        }
        pairs
    }
}

/// Runs the configured algorithm over loaded data.
pub fn execute(settings: &Settings, data: &LoadedData) -> Result<RunOutcome> {
    let main_model = build_model(&settings.model, settings.kind, data.dims, &data.names)?;
    let surrogate_model: Option<Box<dyn LikelihoodModel>> = match &settings.surrogate {
        Some(cfg) => Some(build_model(cfg, settings.kind, data.dims, &data.names)?),
        None => None,
    };
    let mut scorer = Scorer::new(
        &data.store,
        &main_model,
        surrogate_model.as_ref().map(|m| m as &dyn LikelihoodModel),
    );

    let clock = WallClock::start();
    let n = data.store.len();
    let opts = RunOptions {
        gold: if settings.trace_f1 {
            data.gold.as_ref()
        } else {
            None
        },
        clock: &clock,
    };
    let prior = CrpPrior::new(settings.alpha).map_err(|e| anyhow!("{e}"))?;
    let mut rng = Pcg64Mcg::seed_from_u64(settings.seed);

    let mut events = None;
    let (partition, trace, budget_exceeded) = match settings.algorithm {
        Algorithm::Greedy => {
            let m_prime = settings.m_prime;
            let (set, trace) = run_smc(&mut scorer, prior, 1, m_prime, &opts)
                .map_err(|e| anyhow!("greedy run failed: {e}"))?;
            (set.top().partition.clone(), trace, false)
        }
        Algorithm::Smc => {
            let (set, trace) = run_smc(&mut scorer, prior, settings.m, settings.m_prime, &opts)
                .map_err(|e| anyhow!("smc run failed: {e}"))?;
            (set.top().partition.clone(), trace, false)
        }
        Algorithm::SplitSmc => {
            let mut counter = EventCounter::default();
            let (state, trace) = run_split_smc(
                &mut scorer,
                prior,
                settings.m,
                settings.m_prime,
                &mut rng,
                &opts,
                &mut counter,
            )
            .map_err(|e| anyhow!("split-smc run failed: {e}"))?;
            events = Some((
                counter.splits,
                counter.merges,
                counter.multinomial_merges,
                counter.merge_check_drops,
            ));
            (state.top_partition(), trace, false)
        }
        Algorithm::Gibbs | Algorithm::Mwg => {
            let cfg = McmcConfig {
                max_runtime_secs: settings.budget_secs,
                patience_sweeps: settings.patience.unwrap_or(500),
            };
            let variant = if settings.algorithm == Algorithm::Gibbs {
                McmcVariant::Gibbs
            } else {
                McmcVariant::MetropolisWithinGibbs
            };
            let (map, summary, trace) =
                mcmc_run(&mut scorer, prior, &cfg, variant, &mut rng, &clock)
                    .map_err(|e| anyhow!("mcmc run failed: {e}"))?;
            (map, trace, summary.budget_exceeded)
        }
        Algorithm::Agglom => {
            let cfg = AgglomConfig {
                batch_size: settings.batch_size,
                patience_iterations: settings.patience.unwrap_or(100),
                accept_threshold: settings.accept_threshold,
                max_runtime_secs: settings.budget_secs,
            };
            let (p, summary, trace) = agglomerative_run(&mut scorer, prior, &cfg, &mut rng, &clock)
                .map_err(|e| anyhow!("agglomerative run failed: {e}"))?;
            (p, trace, summary.budget_exceeded)
        }
    };

    let log_posterior = score_clustering(&partition, settings.alpha, &main_model, &data.store)
        .map_err(|e| anyhow!("scoring failed: {e}"))?;
    let (precision, recall, f1) = match &data.gold {
        Some(gold) => {
            let (p, r, f) = bcubed(&partition, gold).map_err(|e| anyhow!("{e}"))?;
            (Some(p), Some(r), Some(f))
        }
        None => (None, None, None),
    };

    // Labels keyed by original ids so shuffling never leaks into evaluation.
    let mut labels = Vec::with_capacity(n);
    for (k, cluster) in partition.clusters().iter().enumerate() {
        for &id in cluster.members() {
            labels.push((data.original_ids[id.index()], k));
        }
    }
    labels.sort_unstable();

    Ok(RunOutcome {
        labels,
        n_clusters: partition.n_clusters(),
        partition,
        trace,
        log_posterior,
        precision,
        recall,
        f1,
        main_evals: scorer.main_misses(),
        surrogate_evals: scorer.surrogate_misses(),
        runtime_secs: clock.elapsed_secs(),
        budget_exceeded,
        events,
    })
}

/// Reconstructs a partition over arrival ids from a clustering file keyed by
/// original ids.
pub fn partition_from_labels(labels: &[(u64, usize)], original_ids: &[u64]) -> Result<Partition> {
    let mut by_original: std::collections::BTreeMap<u64, usize> = std::collections::BTreeMap::new();
    for &(id, label) in labels {
        if by_original.insert(id, label).is_some() {
            bail!("duplicate id {id} in prediction");
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<DataId>> =
        std::collections::BTreeMap::new();
    let mut missing = Vec::new();
    for (arrival, original) in original_ids.iter().enumerate() {
        match by_original.get(original) {
            Some(&label) => groups
                .entry(label)
                .or_default()
                .push(DataId(arrival as u32)),
            None => missing.push(*original),
        }
    }
    if !missing.is_empty() {
        bail!(
            "prediction is missing {} id(s): {}",
            missing.len(),
            missing
                .iter()
                .take(10)
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    let clusters: Vec<Cluster> = groups
        .into_values()
        .map(|members| Cluster::new(members).context("empty cluster in prediction"))
        .collect::<Result<_>>()?;
    Partition::new(clusters).map_err(|e| anyhow!("invalid prediction partition: {e}"))
}
