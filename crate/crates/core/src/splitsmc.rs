//! Factorised ("split") SMC: the particle state is a product of independent
//! subproblems, each with its own particle set.
//!
//! Under a Dirichlet process prior, the posterior factorises across subsets
//! of the data that never share a cluster. Whenever the particle set of a
//! subproblem assigns zero probability to cross-links between two groups of
//! observations, the subproblem is split along the connected components of
//! its co-occurrence graph, and each component keeps the marginal weights of
//! its restrictions. The product of those marginals is the reverse-KL-optimal
//! distribution with the same marginals, and the effective particle count
//! becomes the product of the per-subproblem set sizes at no storage cost.
//!
//! A new arrival is expanded independently on every subproblem; pooled
//! putative weights are comparable because each one is a normalised source
//! weight times the assignment probability at the global time index. The
//! fresh-cluster assignment describes the same global event on every
//! subproblem, so only the subproblem holding the highest-weighted assignment
//! keeps its singleton putatives. If the resampled survivors span several
//! subproblems, the affected subproblems are merged: low-mass contenders are
//! dropped first (an expected resample count below one makes a merge
//! redundant), and the remainder are joined either through the explicit joint
//! distribution or, when more than two carry real uncertainty, by staged
//! multinomial resampling.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::metrics::RunTrace;
use crate::models::{ModelSel, Scorer};
use crate::numeric::{ln, log_add_exp, log_sum_exp};
use crate::partition::{CrpPrior, DataId, IdSet, Partition};
use crate::proposal::{rescore_with_main, surrogate_propose};
use crate::rng::categorical_from_log_weights;
use crate::smc::{
    expand_putative_at, greedy_resample_putatives, step_record, EngineError, ParticleSet,
    PutativeParticle, RunOptions,
};

/// A subset of the observed ids together with a particle approximation to
/// the posterior over its clusterings.
#[derive(Clone, Debug)]
pub struct Subproblem {
    ids: IdSet,
    particles: ParticleSet,
}

impl Subproblem {
    pub fn from_particles(particles: ParticleSet) -> Self {
        Subproblem {
            ids: particles.id_cover().clone(),
            particles,
        }
    }

    pub fn ids(&self) -> &IdSet {
        &self.ids
    }

    pub fn particles(&self) -> &ParticleSet {
        &self.particles
    }

    pub fn min_id(&self) -> DataId {
        self.ids.min_id().expect("subproblem is never empty")
    }
}

/// The factorised particle state: disjoint subproblems covering all observed
/// ids, ordered by smallest member.
#[derive(Clone, Debug, Default)]
pub struct FactorisedState {
    subproblems: Vec<Subproblem>,
}

impl FactorisedState {
    pub fn new() -> Self {
        FactorisedState {
            subproblems: Vec::new(),
        }
    }

    pub fn from_subproblems(mut subproblems: Vec<Subproblem>) -> Self {
        subproblems.sort_unstable_by_key(Subproblem::min_id);
        FactorisedState { subproblems }
    }

    pub fn subproblems(&self) -> &[Subproblem] {
        &self.subproblems
    }

    pub fn n_subproblems(&self) -> usize {
        self.subproblems.len()
    }

    pub fn observed_count(&self) -> usize {
        self.subproblems.iter().map(|s| s.ids.len()).sum()
    }

    pub fn contains(&self, x: DataId) -> bool {
        self.subproblems.iter().any(|s| s.ids.contains(x))
    }

    /// Combined top clustering: the union of each subproblem's top particle.
    pub fn top_partition(&self) -> Partition {
        let mut acc = Partition::new(Vec::new()).expect("empty partition");
        for sub in &self.subproblems {
            acc = acc.union(&sub.particles.top().partition);
        }
        acc
    }

    /// Expands the implicit product distribution into explicit joint
    /// partitions with their log weights. Exponential in the number of
    /// subproblems; intended for small instances and tests.
    pub fn implicit_joint(&self) -> Vec<(Partition, f64)> {
        let mut acc: Vec<(Partition, f64)> =
            alloc::vec![(Partition::new(Vec::new()).expect("empty partition"), 0.0)];
        for sub in &self.subproblems {
            let mut next = Vec::with_capacity(acc.len() * sub.particles.len());
            for (joint, w) in &acc {
                for particle in sub.particles.particles() {
                    next.push((joint.union(&particle.partition), w + particle.log_weight));
                }
            }
            acc = next;
        }
        acc
    }

    /// Disjointness of subproblem id sets plus per-set invariants.
    pub fn check_invariants(&self) -> Result<(), EngineError> {
        let mut all = IdSet::new();
        for sub in &self.subproblems {
            if !all.is_disjoint(&sub.ids) {
                return Err(EngineError::Partition(
                    crate::partition::PartitionError::CoverMismatch,
                ));
            }
            all = all.union(&sub.ids);
            sub.particles.check_invariants()?;
            if sub.particles.id_cover() != &sub.ids {
                return Err(EngineError::Partition(
                    crate::partition::PartitionError::CoverMismatch,
                ));
            }
        }
        Ok(())
    }
}

/// Log of the implicitly represented particle count: the product of the
/// subproblem set sizes.
pub fn effective_particle_count(state: &FactorisedState) -> f64 {
    state
        .subproblems
        .iter()
        .map(|s| ln(s.particles.len() as f64))
        .sum()
}

/// Co-occurrence structure of one subproblem: vertices are its observations,
/// edges connect ids that share a cluster on at least one particle. Within a
/// cluster of size k the k-1 path edges suffice for connectivity, so cliques
/// are never materialised.
#[derive(Clone, Debug)]
pub struct CooccurrenceGraph {
    nodes: IdSet,
    edges: BTreeSet<(DataId, DataId)>,
}

impl CooccurrenceGraph {
    pub fn nodes(&self) -> &IdSet {
        &self.nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = (DataId, DataId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Connected components, each as a sorted id set.
    pub fn components(&self) -> Vec<IdSet> {
        let nodes: Vec<DataId> = self.nodes.iter().collect();
        let mut uf = UnionFind::new(nodes.len());
        for &(a, b) in &self.edges {
            let ia = nodes.binary_search(&a).expect("edge endpoint is a node");
            let ib = nodes.binary_search(&b).expect("edge endpoint is a node");
            uf.union(ia, ib);
        }
        let mut groups: Vec<Vec<DataId>> = alloc::vec![Vec::new(); nodes.len()];
        for (i, &id) in nodes.iter().enumerate() {
            groups[uf.find(i)].push(id);
        }
        groups
            .into_iter()
            .filter(|g| !g.is_empty())
            .map(|g| IdSet::from_ids(g).expect("unique ids"))
            .collect()
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: alloc::vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            core::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

pub fn build_cooccurrence_graph(sub: &Subproblem) -> CooccurrenceGraph {
    let mut edges = BTreeSet::new();
    for particle in sub.particles.particles() {
        for cluster in particle.partition.clusters() {
            for w in cluster.members().windows(2) {
                edges.insert((w[0], w[1]));
            }
        }
    }
    CooccurrenceGraph {
        nodes: sub.ids.clone(),
        edges,
    }
}

/// Splits a subproblem along the connected components of its co-occurrence
/// graph. Each component's particle set holds the distinct restrictions of
/// the original particles with their marginal (summed) weights; a connected
/// graph returns the input unchanged.
pub fn split(sub: Subproblem) -> Vec<Subproblem> {
    let components = build_cooccurrence_graph(&sub).components();
    if components.len() <= 1 {
        return alloc::vec![sub];
    }
    let mut out = Vec::with_capacity(components.len());
    for comp in components {
        let restricted: Vec<(Partition, f64)> = sub
            .particles
            .particles()
            .iter()
            .map(|p| (p.partition.restrict(&comp), p.log_weight))
            .collect();
        // from_weighted coalesces equal restrictions by summing mass, which
        // is exactly the marginal weight of the restriction.
        let set =
            ParticleSet::from_weighted(comp, restricted).expect("restrictions cover the component");
        out.push(Subproblem::from_particles(set));
    }
    out
}

/// Hook into split/merge events, mostly for diagnostics and tests.
pub trait SplitSmcObserver {
    fn on_split(&mut self, _before: &Subproblem, _after: &[Subproblem]) {}
    fn on_merge(&mut self, _merged_ids: &IdSet, _used_multinomial: bool) {}
    fn on_merge_check_drop(&mut self, _dropped: &Subproblem) {}
    /// Fired whenever the 1/m check runs: the subproblem holding the
    /// top-weighted survivor, then the kept and dropped subproblem indices.
    fn on_merge_check(&mut self, _argmax_subproblem: usize, _kept: &[usize], _dropped: &[usize]) {}
}

/// Ignores all events.
#[derive(Default, Clone, Copy)]
pub struct NoopObserver;

impl SplitSmcObserver for NoopObserver {}

/// A survivor of the putative resample, materialised against its source
/// subproblem: the local partition already includes the new observation.
#[derive(Clone, Debug)]
pub struct MergeSurvivor {
    /// Index of the source subproblem within the state.
    pub subproblem: usize,
    /// Local partition of the subproblem's ids plus the new observation.
    pub partition: Partition,
    pub log_weight: f64,
}

enum UpdatePlan {
    /// Replace one subproblem with new particles (its ids gain x).
    Replace {
        subproblem: usize,
        items: Vec<(Partition, f64)>,
        dropped: Vec<usize>,
    },
    /// Replace all `absorbed` subproblems with one merged subproblem.
    Merge {
        absorbed: Vec<usize>,
        dropped: Vec<usize>,
        items: Vec<(Partition, f64)>,
        used_multinomial: bool,
    },
}

/// One arrival of the factorised engine: per-subproblem expansion, pooling
/// with singleton deduplication, greedy resampling, merge handling, and a
/// split attempt on the updated subproblem.
#[allow(clippy::too_many_arguments)]
pub fn factorised_update<R: RngCore + ?Sized>(
    state: &mut FactorisedState,
    x: DataId,
    scorer: &mut Scorer<'_>,
    prior: CrpPrior,
    m: usize,
    m_prime: Option<usize>,
    rng: &mut R,
    observer: &mut dyn SplitSmcObserver,
) -> Result<(), EngineError> {
    if m == 0 {
        return Err(EngineError::ZeroParticleBudget);
    }
    if state.subproblems.is_empty() {
        scorer.log_marginal(ModelSel::Main, &[x])?;
        state
            .subproblems
            .push(Subproblem::from_particles(ParticleSet::initial(x)));
        return Ok(());
    }
    if state.contains(x) {
        return Err(EngineError::AlreadyObserved(x));
    }
    let t_global = state.observed_count() + 1;

    let plan = {
        let sets: Vec<&ParticleSet> = state
            .subproblems
            .iter()
            .map(Subproblem::particles)
            .collect();

        // Expansion on every subproblem, pooled. With a surrogate, expansion
        // weights come from it and only the shortlist sees the main model.
        let scoring = if scorer.has_surrogate() {
            ModelSel::Surrogate
        } else {
            ModelSel::Main
        };
        let mut pooled: Vec<PutativeParticle> = Vec::new();
        for (s, set) in sets.iter().enumerate() {
            pooled.extend(expand_putative_at(
                set, s, x, scorer, scoring, prior, t_global,
            )?);
        }
        let mut pooled = if scorer.has_surrogate() {
            let shortlist = surrogate_propose(pooled, m_prime.unwrap_or(m), &sets, x);
            rescore_with_main(shortlist, &sets, x, scorer)?
        } else {
            pooled
        };

        // Every subproblem proposes "x forms a singleton", which is one and
        // the same global event; keep it only on the subproblem holding the
        // highest-weighted assignment (ties toward the smallest min id).
        let keeper = {
            let mut best: Option<(f64, DataId, usize)> = None;
            for p in &pooled {
                let w = p.log_weight();
                let min_id = state.subproblems[p.subproblem].min_id();
                let candidate = (w, min_id, p.subproblem);
                let better = match &best {
                    None => true,
                    Some((bw, bmin, _)) => match w.total_cmp(bw) {
                        core::cmp::Ordering::Greater => true,
                        core::cmp::Ordering::Equal => min_id < *bmin,
                        core::cmp::Ordering::Less => false,
                    },
                };
                if better {
                    best = Some(candidate);
                }
            }
            best.expect("pooled putatives are never empty").2
        };
        pooled.retain(|p| !p.is_singleton() || p.subproblem == keeper);

        // Normalise the pooled weights so that the 1/m merge threshold and
        // the joint construction see the distribution the pool approximates.
        let z = log_sum_exp(
            &pooled
                .iter()
                .map(PutativeParticle::log_weight)
                .collect::<Vec<_>>(),
        );
        for p in &mut pooled {
            p.shift_base(-z);
        }

        let survivors = greedy_resample_putatives(pooled.clone(), m, &sets, x)?;
        let affected: BTreeSet<usize> = survivors.iter().map(|p| p.subproblem).collect();

        if affected.len() == 1 {
            let subproblem = *affected.iter().next().expect("non-empty");
            let items = materialize_all(&survivors, &sets, x)?;
            UpdatePlan::Replace {
                subproblem,
                items,
                dropped: Vec::new(),
            }
        } else {
            plan_merge(
                state, &pooled, survivors, &sets, x, m, rng, &affected, observer,
            )?
        }
    };

    apply_plan(state, plan, x, m, observer)
}

fn materialize_all(
    putatives: &[PutativeParticle],
    sets: &[&ParticleSet],
    x: DataId,
) -> Result<Vec<(Partition, f64)>, EngineError> {
    putatives
        .iter()
        .map(|p| Ok((p.materialize(sets, x)?, p.log_weight())))
        .collect()
}

/// Merge handling, following the order: threshold check, fallback when one
/// subproblem remains, explicit joint when at most two contenders carry more
/// than one particle (and the cross product stays within 10 m^2), staged
/// multinomial resampling otherwise.
#[allow(clippy::too_many_arguments)]
fn plan_merge<R: RngCore + ?Sized>(
    state: &FactorisedState,
    pooled: &[PutativeParticle],
    survivors: Vec<PutativeParticle>,
    sets: &[&ParticleSet],
    x: DataId,
    m: usize,
    rng: &mut R,
    affected: &BTreeSet<usize>,
    observer: &mut dyn SplitSmcObserver,
) -> Result<UpdatePlan, EngineError> {
    // Combined pooled mass per affected subproblem; a subproblem whose
    // assignments would be resampled less than once in expectation is dropped
    // rather than merged.
    let threshold = -ln(m as f64);
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped: Vec<usize> = Vec::new();
    for &s in affected {
        let mass = log_sum_exp(
            &pooled
                .iter()
                .filter(|p| p.subproblem == s)
                .map(PutativeParticle::log_weight)
                .collect::<Vec<_>>(),
        );
        if mass > threshold {
            kept.push(s);
        } else {
            dropped.push(s);
        }
    }
    if kept.is_empty() {
        // Degenerate: every contender is at or below 1/m. Keep the subproblem
        // of the top survivor so the update never loses the best assignment.
        let top = survivors[0].subproblem;
        kept.push(top);
        dropped.retain(|&s| s != top);
    }
    observer.on_merge_check(survivors[0].subproblem, &kept, &dropped);

    if kept.len() == 1 {
        // The merge is redundant: the surviving subproblem absorbs x on its
        // own, re-resampled from its full putative list (this equals the
        // explicit joint over a single subproblem).
        let target = kept[0];
        let own: Vec<PutativeParticle> = pooled
            .iter()
            .filter(|p| p.subproblem == target)
            .cloned()
            .collect();
        let own = greedy_resample_putatives(own, m, sets, x)?;
        let items = materialize_all(&own, sets, x)?;
        return Ok(UpdatePlan::Replace {
            subproblem: target,
            items,
            dropped,
        });
    }

    let survivors: Vec<MergeSurvivor> = survivors
        .into_iter()
        .filter(|p| kept.contains(&p.subproblem))
        .map(|p| {
            Ok(MergeSurvivor {
                subproblem: p.subproblem,
                partition: p.materialize(sets, x)?,
                log_weight: p.log_weight(),
            })
        })
        .collect::<Result<_, EngineError>>()?;

    let rich = kept
        .iter()
        .filter(|&&s| state.subproblems[s].particles().len() > 1)
        .count();
    let max_cross: u128 = kept
        .iter()
        .map(|&s| {
            kept.iter()
                .filter(|&&j| j != s)
                .map(|&j| state.subproblems[j].particles().len() as u128)
                .product::<u128>()
        })
        .max()
        .unwrap_or(1);
    let cap = 10u128 * (m as u128) * (m as u128);

    let (items, used_multinomial) = if rich <= 2 && max_cross <= cap {
        (explicit_joint_merge(state, &kept, &survivors, m)?, false)
    } else {
        (multinomial_merge(state, &kept, &survivors, m, rng), true)
    };
    Ok(UpdatePlan::Merge {
        absorbed: kept,
        dropped,
        items,
        used_multinomial,
    })
}

/// Explicit joint over the kept subproblems: every surviving putative crossed
/// with the full Cartesian product of the other subproblems' previous
/// particle sets, weights multiplying, then a greedy resample down to `m`.
/// Duplicate joints coalesce by summing mass. The output is a valid sample
/// from the joint posterior over the affected subproblems.
pub fn explicit_joint_merge(
    state: &FactorisedState,
    kept: &[usize],
    survivors: &[MergeSurvivor],
    m: usize,
) -> Result<Vec<(Partition, f64)>, EngineError> {
    let mut joint: Vec<(Partition, f64)> = Vec::new();
    for survivor in survivors {
        let others: Vec<usize> = kept
            .iter()
            .copied()
            .filter(|&j| j != survivor.subproblem)
            .collect();
        let mut combos: Vec<(Partition, f64)> =
            alloc::vec![(survivor.partition.clone(), survivor.log_weight)];
        for &j in &others {
            let mut next =
                Vec::with_capacity(combos.len() * state.subproblems[j].particles().len());
            for (p, w) in &combos {
                for particle in state.subproblems[j].particles().particles() {
                    next.push((p.union(&particle.partition), w + particle.log_weight));
                }
            }
            combos = next;
        }
        joint.append(&mut combos);
    }
    // Coalesce identical joints, then keep the m heaviest.
    joint.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let mut merged: Vec<(Partition, f64)> = Vec::with_capacity(joint.len());
    for (p, w) in joint {
        match merged.last_mut() {
            Some((q, acc)) if *q == p => *acc = log_add_exp(*acc, w),
            _ => merged.push((p, w)),
        }
    }
    crate::smc::greedy_resample(merged, m)
}

/// Staged multinomial alternative to the explicit joint when several
/// contenders carry real uncertainty: (i) sample `m` assignments of x with
/// replacement from the survivor weights, (ii) for each, draw one particle
/// independently from every other kept subproblem, (iii) coalesce duplicate
/// joints by their counts. At most `m` particles come out; when every kept
/// subproblem holds a single particle the output is deterministic and equals
/// the explicit joint.
pub fn multinomial_merge<R: RngCore + ?Sized>(
    state: &FactorisedState,
    kept: &[usize],
    survivors: &[MergeSurvivor],
    m: usize,
    rng: &mut R,
) -> Vec<(Partition, f64)> {
    let survivor_weights: Vec<f64> = survivors.iter().map(|s| s.log_weight).collect();
    let per_sub_weights: Vec<(usize, Vec<f64>)> = kept
        .iter()
        .map(|&j| {
            (
                j,
                state.subproblems[j]
                    .particles()
                    .particles()
                    .iter()
                    .map(|p| p.log_weight)
                    .collect(),
            )
        })
        .collect();

    let mut drawn: Vec<Partition> = Vec::with_capacity(m);
    for _ in 0..m {
        let pick = categorical_from_log_weights(rng, &survivor_weights);
        let survivor = &survivors[pick];
        let mut joint = survivor.partition.clone();
        for (j, weights) in &per_sub_weights {
            if *j == survivor.subproblem {
                continue;
            }
            let idx = categorical_from_log_weights(rng, weights);
            joint = joint.union(&state.subproblems[*j].particles().particles()[idx].partition);
        }
        drawn.push(joint);
    }
    drawn.sort_unstable();
    let mut counted: Vec<(Partition, f64)> = Vec::new();
    let mut run = 0usize;
    for (i, p) in drawn.iter().enumerate() {
        run += 1;
        let last = i + 1 == drawn.len();
        if last || drawn[i + 1] != *p {
            counted.push((p.clone(), ln(run as f64) - ln(m as f64)));
            run = 0;
        }
    }
    counted
}

fn apply_plan(
    state: &mut FactorisedState,
    plan: UpdatePlan,
    x: DataId,
    m: usize,
    observer: &mut dyn SplitSmcObserver,
) -> Result<(), EngineError> {
    let updated = match plan {
        UpdatePlan::Replace {
            subproblem,
            items,
            dropped,
        } => {
            for &s in &dropped {
                observer.on_merge_check_drop(&state.subproblems[s]);
            }
            let mut cover = state.subproblems[subproblem].ids.clone();
            cover.insert(x);
            let set = ParticleSet::from_weighted(cover, items)?;
            state.subproblems[subproblem] = Subproblem::from_particles(set);
            subproblem
        }
        UpdatePlan::Merge {
            absorbed,
            dropped,
            items,
            used_multinomial,
        } => {
            for &s in &dropped {
                observer.on_merge_check_drop(&state.subproblems[s]);
            }
            let mut cover = IdSet::new();
            for &s in &absorbed {
                cover = cover.union(&state.subproblems[s].ids);
            }
            cover.insert(x);
            observer.on_merge(&cover, used_multinomial);
            let set = ParticleSet::from_weighted(cover, items)?;
            let merged = Subproblem::from_particles(set);
            // Remove the absorbed subproblems (descending index), insert the
            // merged one, restore min-id order.
            let mut indices = absorbed;
            indices.sort_unstable();
            for &s in indices.iter().rev() {
                state.subproblems.remove(s);
            }
            state.subproblems.push(merged);
            state.subproblems.sort_unstable_by_key(Subproblem::min_id);
            state
                .subproblems
                .iter()
                .position(|s| s.ids.contains(x))
                .expect("merged subproblem contains x")
        }
    };

    debug_assert!(state.subproblems[updated].particles.len() <= m);
    // Attempt to split the subproblem that changed; others are untouched.
    let sub = state.subproblems.remove(updated);
    let before = sub.clone();
    let pieces = split(sub);
    if pieces.len() > 1 {
        observer.on_split(&before, &pieces);
    }
    state.subproblems.extend(pieces);
    state.subproblems.sort_unstable_by_key(Subproblem::min_id);
    Ok(())
}

/// Runs split SMC over the whole payload store in arrival order.
pub fn run_split_smc<R: RngCore + ?Sized>(
    scorer: &mut Scorer<'_>,
    prior: CrpPrior,
    m: usize,
    m_prime: Option<usize>,
    rng: &mut R,
    opts: &RunOptions<'_>,
    observer: &mut dyn SplitSmcObserver,
) -> Result<(FactorisedState, RunTrace), EngineError> {
    let n = scorer.store().len();
    if n == 0 {
        return Err(EngineError::EmptyStream);
    }
    let mut state = FactorisedState::new();
    let mut trace = RunTrace::default();
    for t in 0..n {
        let x = DataId(t as u32);
        factorised_update(&mut state, x, scorer, prior, m, m_prime, rng, observer)?;
        let record = step_record(
            t,
            &state.top_partition(),
            prior.alpha(),
            scorer,
            state.n_subproblems(),
            effective_particle_count(&state),
            opts,
        )?;
        trace.push(record);
    }
    Ok((state, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{NigGaussianModel, PayloadStore, UnitModel};
    use crate::numeric::exp;
    use crate::partition::Cluster;
    use crate::posterior::exact_posterior;
    use crate::smc::{run_smc, WeightedParticle};
    use alloc::vec;
    use rand_core::SeedableRng;
    use rand_pcg::Pcg64Mcg;

    fn ids(v: &[u32]) -> Vec<DataId> {
        v.iter().map(|&i| DataId(i)).collect()
    }

    fn partition_of(groups: &[&[u32]]) -> Partition {
        Partition::new(
            groups
                .iter()
                .map(|g| Cluster::new(ids(g)).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn set_over(cover: &[u32], items: Vec<(Partition, f64)>) -> ParticleSet {
        ParticleSet::from_weighted(IdSet::from_ids(ids(cover)).unwrap(), items).unwrap()
    }

    #[test]
    fn cooccurrence_edges_from_particles() {
        // Particles {{1,2},{3}} and {{1},{2},{3}}: only the 1-2 edge.
        let set = set_over(
            &[1, 2, 3],
            vec![
                (partition_of(&[&[1, 2], &[3]]), ln(0.6)),
                (partition_of(&[&[1], &[2], &[3]]), ln(0.4)),
            ],
        );
        let sub = Subproblem::from_particles(set);
        let graph = build_cooccurrence_graph(&sub);
        let edges: Vec<_> = graph.edges().collect();
        assert_eq!(edges, vec![(DataId(1), DataId(2))]);
        let comps = graph.components();
        assert_eq!(comps.len(), 2);
    }

    #[test]
    fn cooccurrence_single_cluster_connects() {
        let set = set_over(&[1, 2, 3], vec![(partition_of(&[&[1, 2, 3]]), 0.0)]);
        let graph = build_cooccurrence_graph(&Subproblem::from_particles(set));
        assert_eq!(graph.components().len(), 1);
        // Path edges, not the clique.
        assert_eq!(graph.n_edges(), 2);
    }

    #[test]
    fn cooccurrence_all_singletons_has_no_edges() {
        let set = set_over(&[1, 2, 3], vec![(partition_of(&[&[1], &[2], &[3]]), 0.0)]);
        let graph = build_cooccurrence_graph(&Subproblem::from_particles(set));
        assert_eq!(graph.n_edges(), 0);
        assert_eq!(graph.components().len(), 3);
    }

    #[test]
    fn split_marginal_weights() {
        // Worked example: {{1,2},{3}} w=.6 and {{1},{2},{3}} w=.4.
        let set = set_over(
            &[1, 2, 3],
            vec![
                (partition_of(&[&[1, 2], &[3]]), ln(0.6)),
                (partition_of(&[&[1], &[2], &[3]]), ln(0.4)),
            ],
        );
        let pieces = split(Subproblem::from_particles(set));
        assert_eq!(pieces.len(), 2);
        let first = &pieces[0];
        assert_eq!(first.ids().as_slice(), &ids(&[1, 2])[..]);
        assert_eq!(first.particles().len(), 2);
        let top = first.particles().top();
        assert_eq!(top.partition, partition_of(&[&[1, 2]]));
        assert!((exp(top.log_weight) - 0.6).abs() < 1e-12);
        let second = &pieces[1];
        assert_eq!(second.ids().as_slice(), &ids(&[3])[..]);
        assert_eq!(second.particles().len(), 1);
        assert!((exp(second.particles().top().log_weight) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_single_particle_full_decomposition() {
        let set = set_over(&[1, 2], vec![(partition_of(&[&[1], &[2]]), 0.0)]);
        let pieces = split(Subproblem::from_particles(set));
        assert_eq!(pieces.len(), 2);
        for p in &pieces {
            assert_eq!(p.particles().len(), 1);
            assert!((exp(p.particles().top().log_weight) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn split_connected_is_identity() {
        let set = set_over(
            &[1, 2],
            vec![
                (partition_of(&[&[1, 2]]), ln(0.7)),
                (partition_of(&[&[1], &[2]]), ln(0.3)),
            ],
        );
        let pieces = split(Subproblem::from_particles(set.clone()));
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].particles().len(), set.len());
    }

    #[test]
    fn split_is_idempotent() {
        let set = set_over(
            &[1, 2, 3],
            vec![
                (partition_of(&[&[1, 2], &[3]]), ln(0.6)),
                (partition_of(&[&[1], &[2], &[3]]), ln(0.4)),
            ],
        );
        let pieces = split(Subproblem::from_particles(set));
        let again: Vec<Subproblem> = pieces.clone().into_iter().flat_map(split).collect();
        assert_eq!(pieces.len(), again.len());
        for (a, b) in pieces.iter().zip(&again) {
            assert_eq!(a.ids(), b.ids());
            assert_eq!(a.particles().len(), b.particles().len());
            for (pa, pb) in a
                .particles()
                .particles()
                .iter()
                .zip(b.particles().particles())
            {
                assert_eq!(pa.partition, pb.partition);
                assert!((pa.log_weight - pb.log_weight).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn effective_count_is_product_of_sizes() {
        let subs = vec![
            Subproblem::from_particles(set_over(
                &[0, 1],
                vec![
                    (partition_of(&[&[0, 1]]), ln(0.5)),
                    (partition_of(&[&[0], &[1]]), ln(0.3)),
                    (partition_of(&[&[0], &[1]]), ln(0.2)),
                ],
            )),
            Subproblem::from_particles(set_over(&[2], vec![(partition_of(&[&[2]]), 0.0)])),
        ];
        // Duplicate partitions coalesce, so sizes are 2 and 1.
        let state = FactorisedState::from_subproblems(subs);
        let got = effective_particle_count(&state);
        assert!((exp(got) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn effective_count_worked_example() {
        // Sizes (3, 2, 4) multiply to 24; build them over disjoint id blocks.
        fn sized(cover: &[u32], k: usize) -> Subproblem {
            // k distinct partitions of the cover with arbitrary weights.
            let parts = crate::posterior::enumerate_partitions(&ids(cover)).unwrap();
            let items: Vec<(Partition, f64)> = parts
                .into_iter()
                .take(k)
                .enumerate()
                .map(|(i, p)| (p, ln(1.0 + i as f64)))
                .collect();
            assert_eq!(items.len(), k);
            Subproblem::from_particles(
                ParticleSet::from_weighted(IdSet::from_ids(ids(cover)).unwrap(), items).unwrap(),
            )
        }
        let state = FactorisedState::from_subproblems(vec![
            sized(&[0, 1, 2], 3),
            sized(&[3, 4], 2),
            sized(&[5, 6, 7], 4),
        ]);
        assert!((exp(effective_particle_count(&state)) - 24.0).abs() < 1e-9);
    }

    #[test]
    fn single_subproblem_reduces_to_vanilla_plus_split() {
        // Unit likelihood keeps everything symmetric; with m large enough the
        // factorised run must match vanilla SMC exactly (no split can fire
        // because every pair co-occurs on some kept particle).
        let store = PayloadStore::from_points((0..4).map(|_| vec![0.0]).collect()).unwrap();
        let model = UnitModel;
        let prior = CrpPrior::new(1.0).unwrap();

        let mut vanilla_scorer = Scorer::new(&store, &model, None);
        let (vanilla, _) = run_smc(
            &mut vanilla_scorer,
            prior,
            100,
            None,
            &RunOptions::default(),
        )
        .unwrap();

        let mut split_scorer = Scorer::new(&store, &model, None);
        let mut rng = Pcg64Mcg::seed_from_u64(1);
        let (state, _) = run_split_smc(
            &mut split_scorer,
            prior,
            100,
            None,
            &mut rng,
            &RunOptions::default(),
            &mut NoopObserver,
        )
        .unwrap();
        assert_eq!(state.n_subproblems(), 1);
        let sub = &state.subproblems()[0];
        assert_eq!(sub.particles().len(), vanilla.len());
        for (a, b) in sub.particles().particles().iter().zip(vanilla.particles()) {
            assert_eq!(a.partition, b.partition);
            assert!((a.log_weight - b.log_weight).abs() < 1e-12);
        }
    }

    #[test]
    fn separated_groups_split_and_match_exact_posterior_weights() {
        // One tight group plus two far singleton points. Splits fire once m
        // is small enough that cross clusterings fall out of the resample;
        // the far factors are single partitions, so truncation drops whole
        // options of the group factor and its marginal weights must match
        // the exact restricted posterior on the stored support.
        let xs = [0.0, 0.2, 50.0, 0.1, 90.0];
        let store = PayloadStore::from_points(xs.iter().map(|&x| vec![x]).collect()).unwrap();
        let model = NigGaussianModel::isotropic(0.0, 0.01, 2.0, 0.5, 1).unwrap();
        let prior = CrpPrior::new(1.0).unwrap();
        let mut scorer = Scorer::new(&store, &model, None);
        let mut rng = Pcg64Mcg::seed_from_u64(7);
        let (state, trace) = run_split_smc(
            &mut scorer,
            prior,
            4,
            None,
            &mut rng,
            &RunOptions::default(),
            &mut NoopObserver,
        )
        .unwrap();
        state.check_invariants().unwrap();
        assert!(
            state.n_subproblems() >= 2,
            "groups this far apart must split"
        );
        // The trace reports the factorisation.
        assert!(trace.last().unwrap().subproblem_count >= 2);

        for sub in state.subproblems() {
            let sub_ids: Vec<DataId> = sub.ids().iter().collect();
            let exact = exact_posterior(&sub_ids, 1.0, &model, &store).unwrap();
            let mut stored_mass = 0.0;
            for WeightedParticle {
                partition,
                log_weight,
            } in sub.particles().particles()
            {
                let mass = exact
                    .iter()
                    .find(|(p, _)| p == partition)
                    .map(|(_, m)| *m)
                    .expect("stored partition exists in enumeration");
                stored_mass += mass;
                let _ = log_weight;
            }
            // Weights proportional to the exact posterior restricted to the
            // stored support.
            let log_stored = ln(stored_mass);
            for WeightedParticle {
                partition,
                log_weight,
            } in sub.particles().particles()
            {
                let mass = exact
                    .iter()
                    .find(|(p, _)| p == partition)
                    .map(|(_, m)| *m)
                    .unwrap();
                let want = ln(mass) - log_stored;
                assert!(
                    (log_weight - want).abs() < 1e-9,
                    "weight mismatch: {log_weight} vs {want}"
                );
            }
        }
    }

    #[test]
    fn far_observation_leaves_other_subproblem_untouched() {
        // Once two groups split, a new point near group A must not disturb
        // group B's particles at all.
        let xs = [0.0, 0.3, 80.0, 80.2, 0.15];
        let store = PayloadStore::from_points(xs.iter().map(|&x| vec![x]).collect()).unwrap();
        let model = NigGaussianModel::isotropic(0.0, 0.01, 2.0, 0.5, 1).unwrap();
        let prior = CrpPrior::new(1.0).unwrap();
        let mut scorer = Scorer::new(&store, &model, None);
        let mut rng = Pcg64Mcg::seed_from_u64(3);
        let mut state = FactorisedState::new();
        for t in 0..4 {
            factorised_update(
                &mut state,
                DataId(t),
                &mut scorer,
                prior,
                3,
                None,
                &mut rng,
                &mut NoopObserver,
            )
            .unwrap();
        }
        assert!(state.n_subproblems() >= 2);
        let b_before: Vec<(Partition, u64)> = state
            .subproblems()
            .iter()
            .find(|s| s.ids().contains(DataId(2)))
            .unwrap()
            .particles()
            .particles()
            .iter()
            .map(|p| (p.partition.clone(), p.log_weight.to_bits()))
            .collect();

        // x = 4 lands in group A.
        factorised_update(
            &mut state,
            DataId(4),
            &mut scorer,
            prior,
            3,
            None,
            &mut rng,
            &mut NoopObserver,
        )
        .unwrap();
        let b_after: Vec<(Partition, u64)> = state
            .subproblems()
            .iter()
            .find(|s| s.ids().contains(DataId(2)))
            .unwrap()
            .particles()
            .particles()
            .iter()
            .map(|p| (p.partition.clone(), p.log_weight.to_bits()))
            .collect();
        assert_eq!(b_before, b_after, "unaffected subproblem changed");
    }

    #[test]
    fn pooled_singletons_come_from_one_subproblem() {
        // Build a two-subproblem state and count new-cluster events in the
        // pooled, deduplicated putative set via the update's effect: run one
        // update and check the keeper logic through expansion directly.
        let xs = [0.0, 60.0, 0.2];
        let store = PayloadStore::from_points(xs.iter().map(|&x| vec![x]).collect()).unwrap();
        let model = NigGaussianModel::isotropic(0.0, 0.01, 2.0, 0.5, 1).unwrap();
        let prior = CrpPrior::new(1.0).unwrap();
        let mut scorer = Scorer::new(&store, &model, None);
        let state = FactorisedState::from_subproblems(vec![
            Subproblem::from_particles(ParticleSet::initial(DataId(0))),
            Subproblem::from_particles(ParticleSet::initial(DataId(1))),
        ]);
        let sets: Vec<&ParticleSet> = state
            .subproblems()
            .iter()
            .map(Subproblem::particles)
            .collect();
        let mut pooled = Vec::new();
        for (s, set) in sets.iter().enumerate() {
            pooled.extend(
                expand_putative_at(set, s, DataId(2), &mut scorer, ModelSel::Main, prior, 3)
                    .unwrap(),
            );
        }
        // Two subproblems, one particle each: 2 joins + 2 singleton events.
        assert_eq!(pooled.len(), 4);
        assert_eq!(pooled.iter().filter(|p| p.is_singleton()).count(), 2);
        // After the update the state holds each singleton event once: total
        // mass of the implicit joint must be 1.
        let mut state = state;
        let mut rng = Pcg64Mcg::seed_from_u64(9);
        factorised_update(
            &mut state,
            DataId(2),
            &mut scorer,
            prior,
            100,
            None,
            &mut rng,
            &mut NoopObserver,
        )
        .unwrap();
        state.check_invariants().unwrap();
        let joint = state.implicit_joint();
        let total: f64 = joint.iter().map(|(_, w)| exp(*w)).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn merge_joint_weights_multiply() {
        // S = {A, B}; survivors carry putative weights, B's prior particles
        // cross in with multiplying weights.
        let a_set = set_over(
            &[0, 1],
            vec![
                (partition_of(&[&[0, 1]]), ln(0.7)),
                (partition_of(&[&[0], &[1]]), ln(0.3)),
            ],
        );
        let b_set = set_over(
            &[2, 3],
            vec![
                (partition_of(&[&[2, 3]]), ln(0.8)),
                (partition_of(&[&[2], &[3]]), ln(0.2)),
            ],
        );
        let state = FactorisedState::from_subproblems(vec![
            Subproblem::from_particles(a_set),
            Subproblem::from_particles(b_set),
        ]);
        // Survivors: x=4 joins {0,1} (w .7) on A, and {2,3} (w .3) on B.
        let survivors = vec![
            MergeSurvivor {
                subproblem: 0,
                partition: partition_of(&[&[0, 1, 4]]),
                log_weight: ln(0.7),
            },
            MergeSurvivor {
                subproblem: 1,
                partition: partition_of(&[&[2, 3, 4]]),
                log_weight: ln(0.3),
            },
        ];
        let joint = explicit_joint_merge(&state, &[0, 1], &survivors, 100).unwrap();
        // 2 survivors x 2 partner particles = 4 joints; weights multiply and
        // then normalise over a total of 1.0.
        assert_eq!(joint.len(), 4);
        let lookup = |groups: &[&[u32]]| {
            let target = partition_of(groups);
            joint
                .iter()
                .find(|(p, _)| *p == target)
                .map(|(_, w)| exp(*w))
                .expect("joint present")
        };
        assert!((lookup(&[&[0, 1, 4], &[2, 3]]) - 0.56).abs() < 1e-12);
        assert!((lookup(&[&[0, 1, 4], &[2], &[3]]) - 0.14).abs() < 1e-12);
        assert!((lookup(&[&[2, 3, 4], &[0, 1]]) - 0.21).abs() < 1e-12);
        assert!((lookup(&[&[2, 3, 4], &[0], &[1]]) - 0.09).abs() < 1e-12);
    }

    #[test]
    fn merge_then_split_restores_pre_merge_marginals() {
        // When every surviving putative lies in one subproblem, forcing the
        // explicit joint anyway and splitting it back must leave the other
        // subproblem's marginals untouched and give the survivors' weights
        // to the updated component.
        let a_set = set_over(
            &[0, 1],
            vec![
                (partition_of(&[&[0, 1]]), ln(0.7)),
                (partition_of(&[&[0], &[1]]), ln(0.3)),
            ],
        );
        let b_set = set_over(
            &[2, 3],
            vec![
                (partition_of(&[&[2, 3]]), ln(0.8)),
                (partition_of(&[&[2], &[3]]), ln(0.2)),
            ],
        );
        let state = FactorisedState::from_subproblems(vec![
            Subproblem::from_particles(a_set),
            Subproblem::from_particles(b_set),
        ]);
        // Both survivors extend subproblem A with x = 4.
        let survivors = vec![
            MergeSurvivor {
                subproblem: 0,
                partition: partition_of(&[&[0, 1, 4]]),
                log_weight: ln(0.6),
            },
            MergeSurvivor {
                subproblem: 0,
                partition: partition_of(&[&[0, 1], &[4]]),
                log_weight: ln(0.4),
            },
        ];
        let joint = explicit_joint_merge(&state, &[0, 1], &survivors, 100).unwrap();
        let merged = Subproblem::from_particles(
            ParticleSet::from_weighted(IdSet::from_ids(ids(&[0, 1, 2, 3, 4])).unwrap(), joint)
                .unwrap(),
        );
        let pieces = split(merged);
        assert_eq!(pieces.len(), 2);
        let a_piece = pieces.iter().find(|p| p.ids().contains(DataId(0))).unwrap();
        let b_piece = pieces.iter().find(|p| p.ids().contains(DataId(2))).unwrap();
        // B's marginals match its pre-merge particle set.
        assert_eq!(b_piece.particles().len(), 2);
        let b_weight = |groups: &[&[u32]]| {
            let target = partition_of(groups);
            b_piece
                .particles()
                .particles()
                .iter()
                .find(|p| p.partition == target)
                .map(|p| exp(p.log_weight))
                .unwrap()
        };
        assert!((b_weight(&[&[2, 3]]) - 0.8).abs() < 1e-12);
        assert!((b_weight(&[&[2], &[3]]) - 0.2).abs() < 1e-12);
        // A's marginals are the survivor weights.
        let a_weight = |groups: &[&[u32]]| {
            let target = partition_of(groups);
            a_piece
                .particles()
                .particles()
                .iter()
                .find(|p| p.partition == target)
                .map(|p| exp(p.log_weight))
                .unwrap()
        };
        assert!((a_weight(&[&[0, 1, 4]]) - 0.6).abs() < 1e-12);
        assert!((a_weight(&[&[0, 1], &[4]]) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn multinomial_merge_degenerate_matches_explicit() {
        // Every kept subproblem has a single particle: the multinomial merge
        // is deterministic and equals the explicit joint support.
        let a_set = set_over(&[0], vec![(partition_of(&[&[0]]), 0.0)]);
        let b_set = set_over(&[1], vec![(partition_of(&[&[1]]), 0.0)]);
        let state = FactorisedState::from_subproblems(vec![
            Subproblem::from_particles(a_set),
            Subproblem::from_particles(b_set),
        ]);
        let survivors = vec![MergeSurvivor {
            subproblem: 0,
            partition: partition_of(&[&[0, 2]]),
            log_weight: 0.0,
        }];
        let mut rng = Pcg64Mcg::seed_from_u64(11);
        let sampled = multinomial_merge(&state, &[0, 1], &survivors, 50, &mut rng);
        let exact = explicit_joint_merge(&state, &[0, 1], &survivors, 50).unwrap();
        assert_eq!(sampled.len(), 1);
        assert_eq!(exact.len(), 1);
        assert_eq!(sampled[0].0, exact[0].0);
        assert!((exp(sampled[0].1) - 1.0).abs() < 1e-12);
        assert!(sampled.len() <= 50);
    }

    #[test]
    fn multinomial_merge_frequencies_converge_to_joint() {
        // m large: empirical joint frequencies approach the explicit joint
        // weights within 3 sigma.
        let a_set = set_over(
            &[0, 1],
            vec![
                (partition_of(&[&[0, 1]]), ln(0.7)),
                (partition_of(&[&[0], &[1]]), ln(0.3)),
            ],
        );
        let b_set = set_over(
            &[2, 3],
            vec![
                (partition_of(&[&[2, 3]]), ln(0.8)),
                (partition_of(&[&[2], &[3]]), ln(0.2)),
            ],
        );
        let state = FactorisedState::from_subproblems(vec![
            Subproblem::from_particles(a_set),
            Subproblem::from_particles(b_set),
        ]);
        let survivors = vec![
            MergeSurvivor {
                subproblem: 0,
                partition: partition_of(&[&[0, 1, 4]]),
                log_weight: ln(0.7),
            },
            MergeSurvivor {
                subproblem: 1,
                partition: partition_of(&[&[2, 3, 4]]),
                log_weight: ln(0.3),
            },
        ];
        let m = 100_000;
        let mut rng = Pcg64Mcg::seed_from_u64(13);
        let sampled = multinomial_merge(&state, &[0, 1], &survivors, m, &mut rng);
        let exact = explicit_joint_merge(&state, &[0, 1], &survivors, m).unwrap();
        assert!(sampled.len() <= m);
        for (p, lw) in &exact {
            let want = exp(*lw);
            let got = sampled
                .iter()
                .find(|(q, _)| q == p)
                .map(|(_, w)| exp(*w))
                .unwrap_or(0.0);
            let sigma = (want * (1.0 - want) / m as f64).sqrt();
            assert!(
                (got - want).abs() <= 3.0 * sigma + 1e-12,
                "{p}: got {got}, want {want} (sigma {sigma})"
            );
        }
    }

    #[test]
    fn three_rich_contenders_use_multinomial_merge() {
        // Three subproblems, each with two particles, all plausible homes
        // for the new observation: the engine must take the staged
        // multinomial path and still produce a valid merged state.
        let xs = [0.0, 0.2, 3.0, 3.2, 6.0, 6.2, 3.1];
        let store = PayloadStore::from_points(xs.iter().map(|&x| vec![x]).collect()).unwrap();
        let model = NigGaussianModel::isotropic(3.0, 0.05, 2.0, 4.0, 1).unwrap();
        let prior = CrpPrior::new(1.0).unwrap();
        let mut scorer = Scorer::new(&store, &model, None);
        let sub = |a: u32, b: u32| {
            Subproblem::from_particles(set_over(
                &[a, b],
                vec![
                    (partition_of(&[&[a, b]]), ln(0.8)),
                    (partition_of(&[&[a], &[b]]), ln(0.2)),
                ],
            ))
        };
        let mut state = FactorisedState::from_subproblems(vec![sub(0, 1), sub(2, 3), sub(4, 5)]);
        struct MergeKind {
            multinomial: usize,
            explicit: usize,
        }
        impl SplitSmcObserver for MergeKind {
            fn on_merge(&mut self, _ids: &IdSet, used_multinomial: bool) {
                if used_multinomial {
                    self.multinomial += 1;
                } else {
                    self.explicit += 1;
                }
            }
        }
        let mut obs = MergeKind {
            multinomial: 0,
            explicit: 0,
        };
        let mut rng = Pcg64Mcg::seed_from_u64(33);
        factorised_update(
            &mut state,
            DataId(6),
            &mut scorer,
            prior,
            9,
            None,
            &mut rng,
            &mut obs,
        )
        .unwrap();
        state.check_invariants().unwrap();
        assert_eq!(obs.multinomial, 1, "expected the staged multinomial path");
        assert_eq!(obs.explicit, 0);
        assert!(state.contains(DataId(6)));
        // All particles stay within the budget and weights stay normalised.
        for sub in state.subproblems() {
            assert!(sub.particles().len() <= 9);
        }
    }

    #[test]
    fn merge_check_drops_low_mass_contender() {
        // B's pooled mass below 1/m: the update must not merge, and B stays
        // bit-identical. Uses a far pair so B's assignments are negligible.
        let xs = [0.0, 0.1, 400.0, 0.05];
        let store = PayloadStore::from_points(xs.iter().map(|&x| vec![x]).collect()).unwrap();
        let model = NigGaussianModel::isotropic(0.0, 0.01, 2.0, 0.5, 1).unwrap();
        let prior = CrpPrior::new(1.0).unwrap();
        let mut scorer = Scorer::new(&store, &model, None);
        let mut rng = Pcg64Mcg::seed_from_u64(5);
        let mut state = FactorisedState::new();
        struct DropCounter {
            drops: usize,
            merges: usize,
        }
        impl SplitSmcObserver for DropCounter {
            fn on_merge_check_drop(&mut self, _d: &Subproblem) {
                self.drops += 1;
            }
            fn on_merge(&mut self, _ids: &IdSet, _mn: bool) {
                self.merges += 1;
            }
        }
        let mut obs = DropCounter {
            drops: 0,
            merges: 0,
        };
        for t in 0..4 {
            factorised_update(
                &mut state,
                DataId(t),
                &mut scorer,
                prior,
                2,
                None,
                &mut rng,
                &mut obs,
            )
            .unwrap();
        }
        state.check_invariants().unwrap();
        assert_eq!(obs.merges, 0, "distant groups must never merge");
        assert!(state.n_subproblems() >= 2);
    }

    #[test]
    fn ambiguous_observation_triggers_explicit_merge() {
        // Two moderately separated pairs split first; a point midway between
        // them keeps plausible assignments on both subproblems and forces a
        // merge through the explicit joint.
        let xs = [0.0, 0.2, 6.0, 6.2, 2.6];
        let store = PayloadStore::from_points(xs.iter().map(|&x| vec![x]).collect()).unwrap();
        let model = NigGaussianModel::isotropic(3.0, 0.05, 2.0, 2.0, 1).unwrap();
        let prior = CrpPrior::new(1.0).unwrap();
        let mut scorer = Scorer::new(&store, &model, None);
        struct MergeWatch {
            merges: usize,
            multinomial: usize,
            splits: usize,
        }
        impl SplitSmcObserver for MergeWatch {
            fn on_merge(&mut self, _ids: &IdSet, used_multinomial: bool) {
                self.merges += 1;
                if used_multinomial {
                    self.multinomial += 1;
                }
            }
            fn on_split(&mut self, _b: &Subproblem, _a: &[Subproblem]) {
                self.splits += 1;
            }
        }
        let mut obs = MergeWatch {
            merges: 0,
            multinomial: 0,
            splits: 0,
        };
        let mut rng = Pcg64Mcg::seed_from_u64(21);
        let mut state = FactorisedState::new();
        for t in 0..5 {
            factorised_update(
                &mut state,
                DataId(t),
                &mut scorer,
                prior,
                4,
                None,
                &mut rng,
                &mut obs,
            )
            .unwrap();
            state.check_invariants().unwrap();
        }
        assert!(
            obs.splits >= 1,
            "pairs must split before the ambiguous point"
        );
        assert!(
            obs.merges >= 1,
            "ambiguous point must merge the subproblems"
        );
        // Two affected subproblems: the explicit joint handles it.
        assert_eq!(obs.multinomial, 0);
    }

    #[test]
    fn merge_check_drop_path_keeps_weak_subproblem_intact() {
        // A weak contender survives the resample (few putatives overall) but
        // its pooled mass is below 1/m, so it is dropped before any joint is
        // built and keeps its particles bit for bit.
        let xs = [0.0, 6.0, 1.2];
        let store = PayloadStore::from_points(xs.iter().map(|&x| vec![x]).collect()).unwrap();
        let model = NigGaussianModel::isotropic(0.0, 0.2, 2.0, 1.0, 1).unwrap();
        let prior = CrpPrior::new(1.0).unwrap();
        let mut scorer = Scorer::new(&store, &model, None);
        let state_b = Subproblem::from_particles(ParticleSet::initial(DataId(1)));
        let b_bits: Vec<u64> = state_b
            .particles()
            .particles()
            .iter()
            .map(|p| p.log_weight.to_bits())
            .collect();
        let mut state = FactorisedState::from_subproblems(vec![
            Subproblem::from_particles(ParticleSet::initial(DataId(0))),
            state_b,
        ]);
        struct DropWatch {
            drops: usize,
            merges: usize,
        }
        impl SplitSmcObserver for DropWatch {
            fn on_merge_check_drop(&mut self, _d: &Subproblem) {
                self.drops += 1;
            }
            fn on_merge(&mut self, _ids: &IdSet, _mn: bool) {
                self.merges += 1;
            }
        }
        let mut obs = DropWatch {
            drops: 0,
            merges: 0,
        };
        let mut rng = Pcg64Mcg::seed_from_u64(17);
        factorised_update(
            &mut state,
            DataId(2),
            &mut scorer,
            prior,
            4,
            None,
            &mut rng,
            &mut obs,
        )
        .unwrap();
        state.check_invariants().unwrap();
        assert_eq!(obs.drops, 1, "the weak subproblem must be dropped");
        assert_eq!(obs.merges, 0, "no joint is built after the drop");
        // x joined the strong subproblem; the weak one is untouched.
        let b = state
            .subproblems()
            .iter()
            .find(|s| s.ids().contains(DataId(1)))
            .unwrap();
        assert_eq!(b.ids().len(), 1);
        let after: Vec<u64> = b
            .particles()
            .particles()
            .iter()
            .map(|p| p.log_weight.to_bits())
            .collect();
        assert_eq!(b_bits, after);
        assert!(state
            .subproblems()
            .iter()
            .any(|s| s.ids().contains(DataId(0)) && s.ids().contains(DataId(2))));
    }

    #[test]
    fn update_rejects_duplicate_and_zero_budget() {
        let store = PayloadStore::from_points(vec![vec![0.0], vec![1.0]]).unwrap();
        let model = UnitModel;
        let prior = CrpPrior::new(1.0).unwrap();
        let mut scorer = Scorer::new(&store, &model, None);
        let mut rng = Pcg64Mcg::seed_from_u64(1);
        let mut state = FactorisedState::new();
        factorised_update(
            &mut state,
            DataId(0),
            &mut scorer,
            prior,
            4,
            None,
            &mut rng,
            &mut NoopObserver,
        )
        .unwrap();
        assert!(matches!(
            factorised_update(
                &mut state,
                DataId(0),
                &mut scorer,
                prior,
                4,
                None,
                &mut rng,
                &mut NoopObserver
            ),
            Err(EngineError::AlreadyObserved(_))
        ));
        assert!(matches!(
            factorised_update(
                &mut state,
                DataId(1),
                &mut scorer,
                prior,
                0,
                None,
                &mut rng,
                &mut NoopObserver
            ),
            Err(EngineError::ZeroParticleBudget)
        ));
    }
}
