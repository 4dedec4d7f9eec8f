//! Unnormalised partition log posterior and the exhaustive small-instance
//! oracle.
//!
//! The posterior over partitions follows Ewens's sampling formula: up to a
//! constant in `t`,
//!
//! `p(partition) ∝ alpha^(K-1) / Π_{i=0}^{t-1}(alpha+1+i)
//!                 · Π_k Γ(|c_k|) · Π_k p(c_k)`.
//!
//! The denominator is constant for fixed `t`, so only differences of values
//! are meaningful; it is kept anyway so reported numbers sit on a comparable
//! scale across runs. Everything is computed in log space.

use alloc::vec;
use alloc::vec::Vec;

use crate::models::{LikelihoodModel, ModelError, PayloadStore, Scorer};
use crate::numeric::{exp, ln, ln_gamma, log_sum_exp};
use crate::partition::{Cluster, DataId, Partition, PartitionError};

#[derive(Clone, Debug, PartialEq)]
pub enum PosteriorError {
    Partition(PartitionError),
    Model(ModelError),
}

impl core::fmt::Display for PosteriorError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PosteriorError::Partition(e) => write!(f, "{e}"),
            PosteriorError::Model(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PosteriorError {}

impl From<PartitionError> for PosteriorError {
    fn from(e: PartitionError) -> Self {
        PosteriorError::Partition(e)
    }
}

impl From<ModelError> for PosteriorError {
    fn from(e: ModelError) -> Self {
        PosteriorError::Model(e)
    }
}

/// The prior part of the Ewens formula for given cluster sizes and `t`.
pub(crate) fn ewens_log_prior_term(cluster_sizes: &[usize], alpha: f64, t: usize) -> f64 {
    let k = cluster_sizes.len();
    let mut lp = (k as f64 - 1.0) * ln(alpha);
    for i in 0..t {
        lp -= ln(alpha + 1.0 + i as f64);
    }
    for &size in cluster_sizes {
        lp += ln_gamma(size as f64);
    }
    lp
}

/// Unnormalised log posterior of a partition (Ewens prior times cluster
/// marginals), evaluated without caching.
pub fn ewens_log_posterior(
    partition: &Partition,
    alpha: f64,
    model: &dyn LikelihoodModel,
    store: &PayloadStore,
) -> Result<f64, PosteriorError> {
    if partition.n_clusters() == 0 {
        return Err(PosteriorError::Partition(PartitionError::EmptyPartition));
    }
    let t = partition.n_ids();
    let mut lp = ewens_log_prior_term(&partition.cluster_sizes(), alpha, t);
    for c in partition.clusters() {
        lp += model.log_marginal(c.members(), store)?;
    }
    Ok(lp)
}

/// Same value as [`ewens_log_posterior`] but with cluster marginals routed
/// through the run cache.
pub fn ewens_log_posterior_cached(
    partition: &Partition,
    alpha: f64,
    scorer: &mut Scorer<'_>,
) -> Result<f64, PosteriorError> {
    if partition.n_clusters() == 0 {
        return Err(PosteriorError::Partition(PartitionError::EmptyPartition));
    }
    let t = partition.n_ids();
    let mut lp = ewens_log_prior_term(&partition.cluster_sizes(), alpha, t);
    for c in partition.clusters() {
        lp += scorer.log_marginal(crate::models::ModelSel::Main, c.members())?;
    }
    Ok(lp)
}

/// Hard ceiling for exhaustive enumeration; Bell(10) = 115975.
pub const MAX_ENUMERATION: usize = 10;

/// All set partitions of the given ids, each in canonical form.
///
/// Enumerates restricted-growth strings, so the count equals the Bell number
/// of `ids.len()` and no duplicates are produced.
pub fn enumerate_partitions(ids: &[DataId]) -> Result<Vec<Partition>, PartitionError> {
    let n = ids.len();
    if n == 0 || n > MAX_ENUMERATION {
        return Err(PartitionError::TooLarge {
            n,
            max: MAX_ENUMERATION,
        });
    }
    let mut out = Vec::new();
    // rgs[i] = block index of element i; rgs[i] <= 1 + max(rgs[..i]).
    let mut rgs = vec![0usize; n];
    loop {
        let n_blocks = rgs.iter().copied().max().unwrap() + 1;
        let mut blocks: Vec<Vec<DataId>> = vec![Vec::new(); n_blocks];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(ids[i]);
        }
        let clusters: Result<Vec<Cluster>, _> = blocks.into_iter().map(Cluster::new).collect();
        out.push(Partition::new(clusters?)?);

        // Next restricted-growth string.
        let mut pos = n;
        loop {
            if pos == 1 {
                return Ok(out);
            }
            pos -= 1;
            let max_prefix = rgs[..pos].iter().copied().max().unwrap();
            if rgs[pos] <= max_prefix {
                rgs[pos] += 1;
                for r in rgs.iter_mut().skip(pos + 1) {
                    *r = 0;
                }
                break;
            }
        }
    }
}

/// Brute-force posterior over all partitions of `ids`, normalised by
/// log-sum-exp. Probabilities sum to one within 1e-12.
pub fn exact_posterior(
    ids: &[DataId],
    alpha: f64,
    model: &dyn LikelihoodModel,
    store: &PayloadStore,
) -> Result<Vec<(Partition, f64)>, PosteriorError> {
    let partitions = enumerate_partitions(ids)?;
    let mut log_masses = Vec::with_capacity(partitions.len());
    for p in &partitions {
        log_masses.push(ewens_log_posterior(p, alpha, model, store)?);
    }
    let z = log_sum_exp(&log_masses);
    Ok(partitions
        .into_iter()
        .zip(log_masses)
        .map(|(p, lm)| (p, exp(lm - z)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::UnitModel;
    use crate::partition::IdSet;
    use alloc::vec;

    fn range_ids(n: usize) -> Vec<DataId> {
        (0..n as u32).map(DataId).collect()
    }

    fn unit_store(n: usize) -> PayloadStore {
        PayloadStore::from_points((0..n).map(|_| vec![0.0]).collect()).unwrap()
    }

    fn partition_of(groups: &[&[u32]]) -> Partition {
        Partition::new(
            groups
                .iter()
                .map(|g| Cluster::new(g.iter().map(|&i| DataId(i)).collect()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn ewens_worked_examples() {
        let store = unit_store(3);
        let m = UnitModel;
        // t=1: alpha^0 Gamma(1) / (alpha+1) = 1/2.
        let p1 = partition_of(&[&[0]]);
        let got = ewens_log_posterior(&p1, 1.0, &m, &store).unwrap();
        assert!((got - ln(0.5)).abs() < 1e-13);
        // t=2: both partitions get 1/6.
        for p in [partition_of(&[&[0, 1]]), partition_of(&[&[0], &[1]])] {
            let got = ewens_log_posterior(&p, 1.0, &m, &store).unwrap();
            assert!((got - ln(1.0 / 6.0)).abs() < 1e-13);
        }
        // t=3, single block: Gamma(3)/(2*3*4) = 1/12.
        let p3 = partition_of(&[&[0, 1, 2]]);
        let got = ewens_log_posterior(&p3, 1.0, &m, &store).unwrap();
        assert!((got - ln(1.0 / 12.0)).abs() < 1e-13);
    }

    #[test]
    fn ewens_rejects_empty() {
        let store = unit_store(1);
        let empty = Partition::new(vec![]).unwrap();
        assert!(matches!(
            ewens_log_posterior(&empty, 1.0, &UnitModel, &store),
            Err(PosteriorError::Partition(PartitionError::EmptyPartition))
        ));
    }

    #[test]
    fn ewens_invariant_to_cluster_order_and_labels() {
        let store = unit_store(4);
        let a = partition_of(&[&[0, 2], &[1, 3]]);
        let b = partition_of(&[&[1, 3], &[0, 2]]);
        let va = ewens_log_posterior(&a, 0.7, &UnitModel, &store).unwrap();
        let vb = ewens_log_posterior(&b, 0.7, &UnitModel, &store).unwrap();
        assert_eq!(va.to_bits(), vb.to_bits());
    }

    #[test]
    fn bell_numbers() {
        let expected = [1usize, 2, 5, 15, 52, 203, 877, 4140];
        for (i, &want) in expected.iter().enumerate() {
            let n = i + 1;
            let got = enumerate_partitions(&range_ids(n)).unwrap().len();
            assert_eq!(got, want, "Bell({n})");
        }
    }

    #[test]
    fn enumeration_bounds() {
        assert!(enumerate_partitions(&[]).is_err());
        assert!(enumerate_partitions(&range_ids(11)).is_err());
    }

    #[test]
    fn enumeration_is_canonical_and_distinct() {
        let parts = enumerate_partitions(&range_ids(5)).unwrap();
        let cover = IdSet::range(5);
        for p in &parts {
            assert!(p.covers(&cover));
        }
        let mut sorted = parts.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), parts.len());
    }

    #[test]
    fn exact_posterior_unit_n2() {
        let store = unit_store(2);
        let post = exact_posterior(&range_ids(2), 1.0, &UnitModel, &store).unwrap();
        assert_eq!(post.len(), 2);
        for (_, p) in &post {
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_posterior_unit_n3() {
        // Hand enumeration of the 5 partitions under the formula gives masses
        // (2,1,1,1,1)/6, i.e. 1/3 for the single block and 1/6 otherwise.
        let store = unit_store(3);
        let post = exact_posterior(&range_ids(3), 1.0, &UnitModel, &store).unwrap();
        assert_eq!(post.len(), 5);
        let single = partition_of(&[&[0, 1, 2]]);
        let mut total = 0.0;
        for (p, mass) in &post {
            total += mass;
            if *p == single {
                assert!((mass - 1.0 / 3.0).abs() < 1e-12);
            } else {
                assert!((mass - 1.0 / 6.0).abs() < 1e-12);
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_posterior_large_alpha_prefers_singletons() {
        let store = unit_store(3);
        let post = exact_posterior(&range_ids(3), 1e6, &UnitModel, &store).unwrap();
        let singletons = partition_of(&[&[0], &[1], &[2]]);
        let mass = post
            .iter()
            .find(|(p, _)| *p == singletons)
            .map(|(_, m)| *m)
            .unwrap();
        assert!(mass > 0.999);
    }

    #[test]
    fn exact_posterior_masses_sum_to_one() {
        for n in 2..=6 {
            let store = unit_store(n);
            let post = exact_posterior(&range_ids(n), 0.5, &UnitModel, &store).unwrap();
            let total: f64 = post.iter().map(|(_, m)| m).sum();
            assert!((total - 1.0).abs() < 1e-12, "n={n}: {total}");
        }
    }
}
