//! Partition algebra and the Chinese-restaurant-process assignment prior.
//!
//! Observations are identified by their arrival index ([`DataId`]); two
//! observations with equal payload but different indices are distinct. A
//! [`Cluster`] is a sorted multiset of ids, a [`Partition`] a disjoint cover
//! of an id set by clusters. Both are kept in a canonical form so that equal
//! values are byte-identical, which makes them usable as cache keys and lets
//! duplicate-particle detection run in amortised constant time.

use alloc::vec::Vec;
use core::fmt;

/// Arrival-time index of an observation.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct DataId(pub u32);

impl DataId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for DataId {
    fn from(v: u32) -> Self {
        DataId(v)
    }
}

impl fmt::Display for DataId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PartitionError {
    EmptyCluster,
    DuplicateId(DataId),
    /// The partition does not cover exactly the declared id set.
    CoverMismatch,
    EmptyPartition,
    InvalidTarget {
        index: usize,
        n_clusters: usize,
    },
    InconsistentCount {
        stated: usize,
        implied: usize,
    },
    TooLarge {
        n: usize,
        max: usize,
    },
    InvalidAlpha(f64),
}

impl fmt::Display for PartitionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionError::EmptyCluster => write!(f, "cluster must be non-empty"),
            PartitionError::DuplicateId(id) => write!(f, "duplicate id {id}"),
            PartitionError::CoverMismatch => {
                write!(f, "clusters do not cover exactly the declared id set")
            }
            PartitionError::EmptyPartition => write!(f, "partition has no clusters"),
            PartitionError::InvalidTarget { index, n_clusters } => {
                write!(f, "target cluster {index} out of range (have {n_clusters})")
            }
            PartitionError::InconsistentCount { stated, implied } => {
                write!(
                    f,
                    "t={stated} inconsistent with cluster sizes (implied {implied})"
                )
            }
            PartitionError::TooLarge { n, max } => {
                write!(f, "n={n} exceeds enumeration ceiling {max}")
            }
            PartitionError::InvalidAlpha(a) => write!(f, "alpha must be positive, got {a}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PartitionError {}

/// A sorted set of [`DataId`]s.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct IdSet(Vec<DataId>);

impl IdSet {
    pub fn new() -> Self {
        IdSet(Vec::new())
    }

    /// Builds from arbitrary order; sorts and rejects duplicates.
    pub fn from_ids(mut ids: Vec<DataId>) -> Result<Self, PartitionError> {
        ids.sort_unstable();
        for w in ids.windows(2) {
            if w[0] == w[1] {
                return Err(PartitionError::DuplicateId(w[0]));
            }
        }
        Ok(IdSet(ids))
    }

    /// The contiguous range 0..n.
    pub fn range(n: usize) -> Self {
        IdSet((0..n as u32).map(DataId).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: DataId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = DataId> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[DataId] {
        &self.0
    }

    pub fn min_id(&self) -> Option<DataId> {
        self.0.first().copied()
    }

    pub fn insert(&mut self, id: DataId) -> bool {
        match self.0.binary_search(&id) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, id);
                true
            }
        }
    }

    pub fn union(&self, other: &IdSet) -> IdSet {
        let mut merged = Vec::with_capacity(self.len() + other.len());
        merged.extend_from_slice(&self.0);
        merged.extend_from_slice(&other.0);
        merged.sort_unstable();
        merged.dedup();
        IdSet(merged)
    }

    pub fn is_disjoint(&self, other: &IdSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => return false,
            }
        }
        true
    }
}

impl FromIterator<DataId> for IdSet {
    fn from_iter<I: IntoIterator<Item = DataId>>(iter: I) -> Self {
        let mut ids: Vec<DataId> = iter.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        IdSet(ids)
    }
}

/// A non-empty cluster of observation ids, members sorted ascending.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Cluster {
    members: Vec<DataId>,
}

impl Cluster {
    pub fn new(mut members: Vec<DataId>) -> Result<Self, PartitionError> {
        if members.is_empty() {
            return Err(PartitionError::EmptyCluster);
        }
        members.sort_unstable();
        for w in members.windows(2) {
            if w[0] == w[1] {
                return Err(PartitionError::DuplicateId(w[0]));
            }
        }
        Ok(Cluster { members })
    }

    pub fn singleton(id: DataId) -> Self {
        Cluster {
            members: alloc::vec![id],
        }
    }

    pub fn members(&self) -> &[DataId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn min_id(&self) -> DataId {
        self.members[0]
    }

    pub fn contains(&self, id: DataId) -> bool {
        self.members.binary_search(&id).is_ok()
    }

    /// New cluster with `id` added, preserving sort order.
    pub fn with_member(&self, id: DataId) -> Cluster {
        let mut members = Vec::with_capacity(self.members.len() + 1);
        match self.members.binary_search(&id) {
            Ok(_) => members.extend_from_slice(&self.members),
            Err(pos) => {
                members.extend_from_slice(&self.members[..pos]);
                members.push(id);
                members.extend_from_slice(&self.members[pos..]);
            }
        }
        Cluster { members }
    }
}

/// A partition of an id set into disjoint clusters.
///
/// Canonical form: every cluster's members sorted ascending, clusters sorted
/// by their smallest member. Equality and hashing operate on this form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Partition {
    clusters: Vec<Cluster>,
}

impl Partition {
    /// Canonicalises and validates disjointness.
    pub fn new(mut clusters: Vec<Cluster>) -> Result<Self, PartitionError> {
        clusters.sort_unstable_by_key(Cluster::min_id);
        let p = Partition { clusters };
        let mut seen: Vec<DataId> = p.iter_ids().collect();
        let before = seen.len();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != before {
            return Err(PartitionError::CoverMismatch);
        }
        Ok(p)
    }

    /// All ids in singleton clusters.
    pub fn singletons(ids: &IdSet) -> Partition {
        Partition {
            clusters: ids.iter().map(Cluster::singleton).collect(),
        }
    }

    /// Single observation in a single cluster.
    pub fn initial(id: DataId) -> Partition {
        Partition {
            clusters: alloc::vec![Cluster::singleton(id)],
        }
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn n_ids(&self) -> usize {
        self.clusters.iter().map(Cluster::len).sum()
    }

    pub fn iter_ids(&self) -> impl Iterator<Item = DataId> + '_ {
        self.clusters
            .iter()
            .flat_map(|c| c.members().iter().copied())
    }

    pub fn id_set(&self) -> IdSet {
        self.iter_ids().collect()
    }

    /// Index of the cluster containing `id`, if any.
    pub fn cluster_of(&self, id: DataId) -> Option<usize> {
        self.clusters.iter().position(|c| c.contains(id))
    }

    /// True when the partition covers exactly `ids`.
    pub fn covers(&self, ids: &IdSet) -> bool {
        self.n_ids() == ids.len() && self.iter_ids().all(|id| ids.contains(id))
    }

    /// Extends the partition by assigning a new observation.
    ///
    /// Canonical order is preserved without re-sorting: joining a cluster
    /// never changes its smallest member, and a fresh singleton sorts by its
    /// own id.
    pub fn with_assigned(
        &self,
        id: DataId,
        target: AssignTarget,
    ) -> Result<Partition, PartitionError> {
        match target {
            AssignTarget::Existing(k) => {
                if k >= self.clusters.len() {
                    return Err(PartitionError::InvalidTarget {
                        index: k,
                        n_clusters: self.clusters.len(),
                    });
                }
                let mut clusters = self.clusters.clone();
                clusters[k] = clusters[k].with_member(id);
                if id < self.clusters[k].min_id() {
                    clusters.sort_unstable_by_key(Cluster::min_id);
                }
                Ok(Partition { clusters })
            }
            AssignTarget::NewCluster => {
                let mut clusters = Vec::with_capacity(self.clusters.len() + 1);
                let pos = self.clusters.partition_point(|c| c.min_id() < id);
                clusters.extend_from_slice(&self.clusters[..pos]);
                clusters.push(Cluster::singleton(id));
                clusters.extend_from_slice(&self.clusters[pos..]);
                Ok(Partition { clusters })
            }
        }
    }

    /// Intersects every cluster with `ids`, dropping emptied clusters. Used
    /// to align a gold clustering with the observed prefix of a stream.
    pub fn restrict_intersect(&self, ids: &IdSet) -> Partition {
        let mut clusters: Vec<Cluster> = Vec::new();
        for c in &self.clusters {
            let members: Vec<DataId> = c
                .members()
                .iter()
                .copied()
                .filter(|&m| ids.contains(m))
                .collect();
            if !members.is_empty() {
                clusters.push(Cluster { members });
            }
        }
        clusters.sort_unstable_by_key(Cluster::min_id);
        Partition { clusters }
    }

    /// Clusters entirely contained in `ids`.
    pub fn restrict(&self, ids: &IdSet) -> Partition {
        Partition {
            clusters: self
                .clusters
                .iter()
                .filter(|c| c.members().iter().all(|&m| ids.contains(m)))
                .cloned()
                .collect(),
        }
    }

    /// Disjoint union of two partitions over disjoint id sets.
    pub fn union(&self, other: &Partition) -> Partition {
        let mut clusters = Vec::with_capacity(self.clusters.len() + other.clusters.len());
        clusters.extend_from_slice(&self.clusters);
        clusters.extend_from_slice(&other.clusters);
        clusters.sort_unstable_by_key(Cluster::min_id);
        Partition { clusters }
    }

    /// True when every cluster of `self` appears as a cluster of `other`.
    pub fn is_sub_partition_of(&self, other: &Partition) -> bool {
        self.clusters.iter().all(|c| {
            other
                .clusters
                .binary_search_by_key(&c.min_id(), Cluster::min_id)
                .is_ok_and(|i| &other.clusters[i] == c)
        })
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Cluster::len).collect()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.clusters.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{{")?;
            for (j, m) in c.members().iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{m}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

/// Dirichlet process concentration parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrpPrior {
    alpha: f64,
}

impl CrpPrior {
    pub fn new(alpha: f64) -> Result<Self, PartitionError> {
        if alpha <= 0.0 || !alpha.is_finite() {
            return Err(PartitionError::InvalidAlpha(alpha));
        }
        Ok(CrpPrior { alpha })
    }

    pub fn alpha(self) -> f64 {
        self.alpha
    }

    /// Log prior weight of one assignment choice at global time `t`
    /// (the new observation is the t-th): `size/(alpha+t-1)` for an existing
    /// cluster, `alpha/(alpha+t-1)` for a fresh one.
    #[inline]
    pub(crate) fn log_assignment_term(self, existing_size: Option<usize>, t: usize) -> f64 {
        let numerator = match existing_size {
            Some(size) => size as f64,
            None => self.alpha,
        };
        crate::numeric::ln(numerator) - crate::numeric::ln(self.alpha + (t - 1) as f64)
    }
}

/// Assignment choice for a new observation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AssignTarget {
    /// Join the cluster at this index of the source partition.
    Existing(usize),
    NewCluster,
}

/// Log CRP probability of assigning the t-th observation to `target`, given
/// existing cluster sizes.
///
/// Requires `t = 1 + Σ sizes`; the exponentials over all targets (each
/// existing cluster plus a new one) sum to one.
pub fn crp_assignment_log_prior(
    cluster_sizes: &[usize],
    alpha: f64,
    t: usize,
    target: AssignTarget,
) -> Result<f64, PartitionError> {
    let prior = CrpPrior::new(alpha)?;
    let implied = 1 + cluster_sizes.iter().sum::<usize>();
    if t != implied {
        return Err(PartitionError::InconsistentCount { stated: t, implied });
    }
    match target {
        AssignTarget::Existing(k) => {
            if k >= cluster_sizes.len() {
                return Err(PartitionError::InvalidTarget {
                    index: k,
                    n_clusters: cluster_sizes.len(),
                });
            }
            Ok(prior.log_assignment_term(Some(cluster_sizes[k]), t))
        }
        AssignTarget::NewCluster => Ok(prior.log_assignment_term(None, t)),
    }
}
