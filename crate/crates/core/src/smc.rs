//! Vanilla SMC clustering engine and the primitives the factorised engine
//! builds on: putative expansion, greedy resampling and the per-arrival step.
//!
//! Each particle carries one complete candidate clustering. On arrival of a
//! new observation the particle set is expanded with one putative particle
//! per (particle, target cluster) pair plus one per (particle, new cluster),
//! weighted by the CRP assignment prior times the cluster predictive, then
//! greedily resampled back to `m` particles. Greedy resampling (keep the `m`
//! heaviest, renormalise) is the reverse-KL-optimal truncation of a discrete
//! distribution, and with `m` at least the number of putatives the engine
//! tracks the exact posterior.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::clock::Clock;
use crate::metrics::{bcubed, RunTrace, StepRecord};
use crate::models::{ModelError, ModelSel, Scorer};
use crate::numeric::{exp, ln, log_add_exp, normalize_log_weights};
use crate::partition::{AssignTarget, CrpPrior, DataId, IdSet, Partition, PartitionError};
use crate::posterior::{ewens_log_posterior_cached, PosteriorError};

#[derive(Clone, Debug, PartialEq)]
pub enum EngineError {
    Model(ModelError),
    Partition(PartitionError),
    Posterior(PosteriorError),
    AlreadyObserved(DataId),
    EmptyParticleSet,
    /// Resampling budget `m` must be at least one.
    ZeroParticleBudget,
    EmptyStream,
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::Model(e) => write!(f, "{e}"),
            EngineError::Partition(e) => write!(f, "{e}"),
            EngineError::Posterior(e) => write!(f, "{e}"),
            EngineError::AlreadyObserved(id) => write!(f, "observation {id} already covered"),
            EngineError::EmptyParticleSet => write!(f, "particle set must not be empty"),
            EngineError::ZeroParticleBudget => write!(f, "particle budget m must be positive"),
            EngineError::EmptyStream => write!(f, "stream must contain at least one observation"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EngineError {}

impl From<ModelError> for EngineError {
    fn from(e: ModelError) -> Self {
        EngineError::Model(e)
    }
}

impl From<PartitionError> for EngineError {
    fn from(e: PartitionError) -> Self {
        EngineError::Partition(e)
    }
}

impl From<PosteriorError> for EngineError {
    fn from(e: PosteriorError) -> Self {
        EngineError::Posterior(e)
    }
}

/// One candidate clustering with its normalised log weight.
#[derive(Clone, Debug)]
pub struct WeightedParticle {
    pub partition: Partition,
    pub log_weight: f64,
}

/// A weighted set of unique partitions covering one id set.
#[derive(Clone, Debug)]
pub struct ParticleSet {
    particles: Vec<WeightedParticle>,
    id_cover: IdSet,
}

impl ParticleSet {
    /// The one-particle set over a single observation.
    pub fn initial(x: DataId) -> Self {
        ParticleSet {
            particles: alloc::vec![WeightedParticle {
                partition: Partition::initial(x),
                log_weight: 0.0,
            }],
            id_cover: IdSet::from_ids(alloc::vec![x]).expect("single id"),
        }
    }

    /// Builds a set from weighted partitions: coalesces duplicate partitions
    /// by adding their mass, normalises, and orders particles by descending
    /// weight (canonical partition key on ties) for deterministic iteration.
    pub fn from_weighted(
        id_cover: IdSet,
        items: Vec<(Partition, f64)>,
    ) -> Result<Self, EngineError> {
        if items.is_empty() {
            return Err(EngineError::EmptyParticleSet);
        }
        let mut items = items;
        items.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Partition, f64)> = Vec::with_capacity(items.len());
        for (p, w) in items {
            match merged.last_mut() {
                Some((q, acc)) if *q == p => *acc = log_add_exp(*acc, w),
                _ => merged.push((p, w)),
            }
        }
        for (p, _) in &merged {
            if !p.covers(&id_cover) {
                return Err(EngineError::Partition(PartitionError::CoverMismatch));
            }
        }
        let mut weights: Vec<f64> = merged.iter().map(|(_, w)| *w).collect();
        normalize_log_weights(&mut weights);
        let mut particles: Vec<WeightedParticle> = merged
            .into_iter()
            .zip(weights)
            .map(|((partition, _), log_weight)| WeightedParticle {
                partition,
                log_weight,
            })
            .collect();
        particles.sort_unstable_by(|a, b| {
            b.log_weight
                .total_cmp(&a.log_weight)
                .then_with(|| a.partition.cmp(&b.partition))
        });
        Ok(ParticleSet {
            particles,
            id_cover,
        })
    }

    pub fn particles(&self) -> &[WeightedParticle] {
        &self.particles
    }

    pub fn id_cover(&self) -> &IdSet {
        &self.id_cover
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Highest-weighted particle.
    pub fn top(&self) -> &WeightedParticle {
        &self.particles[0]
    }

    /// Checks the set invariants: unique canonical partitions, exact cover,
    /// weights summing to one.
    pub fn check_invariants(&self) -> Result<(), EngineError> {
        if self.particles.is_empty() {
            return Err(EngineError::EmptyParticleSet);
        }
        let mut sorted: Vec<&Partition> = self.particles.iter().map(|p| &p.partition).collect();
        sorted.sort_unstable();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(EngineError::Partition(PartitionError::CoverMismatch));
            }
        }
        for p in &self.particles {
            if !p.partition.covers(&self.id_cover) {
                return Err(EngineError::Partition(PartitionError::CoverMismatch));
            }
        }
        let total: f64 = self.particles.iter().map(|p| exp(p.log_weight)).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(EngineError::EmptyParticleSet);
        }
        Ok(())
    }
}

/// A candidate extension of one particle by one assignment of the new
/// observation. Weights are carried as (base, predictive) so a surrogate
/// predictive can be swapped for the main-model one without re-deriving the
/// prior part.
#[derive(Clone, Debug)]
pub struct PutativeParticle {
    /// Which subproblem the source particle lives in; 0 for vanilla SMC.
    pub subproblem: usize,
    pub source_particle_index: usize,
    pub target: AssignTarget,
    /// Source log weight plus the CRP assignment term.
    log_base: f64,
    /// Log predictive of the new observation under its current model.
    log_predictive: f64,
}

impl PutativeParticle {
    pub fn log_weight(&self) -> f64 {
        self.log_base + self.log_predictive
    }

    pub fn is_singleton(&self) -> bool {
        matches!(self.target, AssignTarget::NewCluster)
    }

    pub(crate) fn set_predictive(&mut self, value: f64) {
        self.log_predictive = value;
    }

    pub(crate) fn shift_base(&mut self, delta: f64) {
        self.log_base += delta;
    }

    /// The partition this putative stands for within its subproblem.
    pub fn materialize(&self, sets: &[&ParticleSet], x: DataId) -> Result<Partition, EngineError> {
        let source = &sets[self.subproblem].particles()[self.source_particle_index].partition;
        Ok(source.with_assigned(x, self.target)?)
    }

    /// Members of the target cluster in the source partition (empty slice for
    /// a new cluster).
    pub fn target_members<'a>(&self, sets: &[&'a ParticleSet]) -> &'a [DataId] {
        match self.target {
            AssignTarget::NewCluster => &[],
            AssignTarget::Existing(k) => sets[self.subproblem].particles()
                [self.source_particle_index]
                .partition
                .clusters()[k]
                .members(),
        }
    }
}

/// Expands a particle set with every assignment of `x`, weighting by the CRP
/// term at global time `t_global` (the new observation is the t-th overall)
/// times the predictive under `model`.
///
/// Output weights are unnormalised.
pub(crate) fn expand_putative_at(
    set: &ParticleSet,
    subproblem: usize,
    x: DataId,
    scorer: &mut Scorer<'_>,
    model: ModelSel,
    prior: CrpPrior,
    t_global: usize,
) -> Result<Vec<PutativeParticle>, EngineError> {
    if set.id_cover().contains(x) {
        return Err(EngineError::AlreadyObserved(x));
    }
    let mut out = Vec::new();
    for (i, particle) in set.particles().iter().enumerate() {
        for (k, cluster) in particle.partition.clusters().iter().enumerate() {
            let log_base =
                particle.log_weight + prior.log_assignment_term(Some(cluster.len()), t_global);
            let log_predictive = scorer.log_predictive(model, x, cluster.members())?;
            out.push(PutativeParticle {
                subproblem,
                source_particle_index: i,
                target: AssignTarget::Existing(k),
                log_base,
                log_predictive,
            });
        }
        let log_base = particle.log_weight + prior.log_assignment_term(None, t_global);
        let log_predictive = scorer.log_predictive(model, x, &[])?;
        out.push(PutativeParticle {
            subproblem,
            source_particle_index: i,
            target: AssignTarget::NewCluster,
            log_base,
            log_predictive,
        });
    }
    Ok(out)
}

/// Putative expansion of a stand-alone particle set (one putative per
/// assignment of `x` on each existing particle), scored with the main model.
pub fn expand_putative(
    set: &ParticleSet,
    x: DataId,
    scorer: &mut Scorer<'_>,
    prior: CrpPrior,
) -> Result<Vec<PutativeParticle>, EngineError> {
    let t_global = set.id_cover().len() + 1;
    expand_putative_at(set, 0, x, scorer, ModelSel::Main, prior, t_global)
}

/// Keeps the `min(m, len)` heaviest items and renormalises their weights.
///
/// Ties are broken by `tie` ascending, then input order, so the result is
/// deterministic. This truncation minimises the reverse KL divergence to the
/// input distribution over all supports of size `m`.
pub fn greedy_resample_by<T>(
    items: Vec<(T, f64)>,
    m: usize,
    mut tie: impl FnMut(&T, &T) -> Ordering,
) -> Result<Vec<(T, f64)>, EngineError> {
    if m == 0 {
        return Err(EngineError::ZeroParticleBudget);
    }
    if items.is_empty() {
        return Err(EngineError::EmptyParticleSet);
    }
    let mut items = items;
    // Stable sort: equal (weight, tie) pairs keep input order.
    items.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| tie(&a.0, &b.0)));
    items.truncate(m.min(items.len()));
    let mut weights: Vec<f64> = items.iter().map(|(_, w)| *w).collect();
    normalize_log_weights(&mut weights);
    for (item, w) in items.iter_mut().zip(weights) {
        item.1 = w;
    }
    Ok(items)
}

/// [`greedy_resample_by`] with the payload's own ordering as tie-break.
pub fn greedy_resample<T: Ord>(
    items: Vec<(T, f64)>,
    m: usize,
) -> Result<Vec<(T, f64)>, EngineError> {
    greedy_resample_by(items, m, T::cmp)
}

/// Greedy resample of putatives; weight ties break on the canonical key of
/// the materialised partition.
pub(crate) fn greedy_resample_putatives(
    putatives: Vec<PutativeParticle>,
    m: usize,
    sets: &[&ParticleSet],
    x: DataId,
) -> Result<Vec<PutativeParticle>, EngineError> {
    let weighted: Vec<(PutativeParticle, f64)> = putatives
        .into_iter()
        .map(|p| {
            let w = p.log_weight();
            (p, w)
        })
        .collect();
    let picked = greedy_resample_by(weighted, m, |a, b| {
        let pa = a.materialize(sets, x).expect("valid putative");
        let pb = b.materialize(sets, x).expect("valid putative");
        pa.cmp(&pb).then_with(|| a.subproblem.cmp(&b.subproblem))
    })?;
    // Fold the normalised weights back into the bases so log_weight()
    // reflects the resampled value.
    Ok(picked
        .into_iter()
        .map(|(mut p, w)| {
            let delta = w - p.log_weight();
            p.shift_base(delta);
            p
        })
        .collect())
}

/// One SMC arrival: expansion (optionally through the surrogate proposal),
/// duplicate coalescing and greedy resampling down to `m`.
pub fn smc_step(
    set: &ParticleSet,
    x: DataId,
    scorer: &mut Scorer<'_>,
    prior: CrpPrior,
    m: usize,
    m_prime: Option<usize>,
) -> Result<ParticleSet, EngineError> {
    if m == 0 {
        return Err(EngineError::ZeroParticleBudget);
    }
    let t_global = set.id_cover().len() + 1;
    let sets = [set];
    let putatives = if scorer.has_surrogate() {
        let raw = expand_putative_at(set, 0, x, scorer, ModelSel::Surrogate, prior, t_global)?;
        let shortlist = crate::proposal::surrogate_propose(raw, m_prime.unwrap_or(m), &sets, x);
        crate::proposal::rescore_with_main(shortlist, &sets, x, scorer)?
    } else {
        expand_putative_at(set, 0, x, scorer, ModelSel::Main, prior, t_global)?
    };
    let survivors = greedy_resample_putatives(putatives, m, &sets, x)?;
    let mut cover = set.id_cover().clone();
    cover.insert(x);
    let items: Result<Vec<(Partition, f64)>, EngineError> = survivors
        .iter()
        .map(|p| Ok((p.materialize(&sets, x)?, p.log_weight())))
        .collect();
    ParticleSet::from_weighted(cover, items?)
}

/// Options shared by the streaming drivers.
pub struct RunOptions<'a> {
    /// Gold clustering for per-step B-cubed F1 of the top particle.
    pub gold: Option<&'a Partition>,
    pub clock: &'a dyn Clock,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        RunOptions {
            gold: None,
            clock: &crate::clock::NullClock,
        }
    }
}

pub(crate) fn step_record(
    step: usize,
    top: &Partition,
    alpha: f64,
    scorer: &mut Scorer<'_>,
    subproblem_count: usize,
    log_effective_particles: f64,
    opts: &RunOptions<'_>,
) -> Result<StepRecord, EngineError> {
    let top_log_posterior = ewens_log_posterior_cached(top, alpha, scorer)?;
    let f1_vs_gold = match opts.gold {
        Some(gold) => {
            let observed = top.id_set();
            let restricted = gold.restrict_intersect(&observed);
            Some(bcubed(top, &restricted).map(|(_, _, f1)| f1).unwrap_or(0.0))
        }
        None => None,
    };
    Ok(StepRecord {
        step,
        top_log_posterior,
        f1_vs_gold,
        subproblem_count,
        log_effective_particles,
        cumulative_main_evals: scorer.main_misses(),
        wall_secs: opts.clock.elapsed_secs(),
    })
}

/// Runs vanilla SMC over the whole payload store in arrival order.
///
/// `m = 1` reduces to greedy clustering: each arrival joins the single
/// highest-weighted assignment.
pub fn run_smc(
    scorer: &mut Scorer<'_>,
    prior: CrpPrior,
    m: usize,
    m_prime: Option<usize>,
    opts: &RunOptions<'_>,
) -> Result<(ParticleSet, RunTrace), EngineError> {
    let n = scorer.store().len();
    if n == 0 {
        return Err(EngineError::EmptyStream);
    }
    if m == 0 {
        return Err(EngineError::ZeroParticleBudget);
    }
    let mut trace = RunTrace::default();
    let mut set = ParticleSet::initial(DataId(0));
    // Score the initial singleton so later predictives find it cached.
    scorer.log_marginal(ModelSel::Main, &[DataId(0)])?;
    let record = step_record(0, &set.top().partition, prior.alpha(), scorer, 1, 0.0, opts)?;
    trace.push(record);
    for t in 1..n {
        let x = DataId(t as u32);
        set = smc_step(&set, x, scorer, prior, m, m_prime)?;
        let record = step_record(
            t,
            &set.top().partition,
            prior.alpha(),
            scorer,
            1,
            ln(set.len() as f64),
            opts,
        )?;
        trace.push(record);
    }
    Ok((set, trace))
}
