//! Cluster-likelihood models.
//!
//! A [`LikelihoodModel`] yields the log marginal likelihood of observing an
//! unordered collection of payloads as one cluster, integrating out any
//! cluster parameters. Implementations must be permutation-invariant in the
//! cluster members, and by convention return 0 for the empty cluster so the
//! predictive from an empty cluster equals the prior predictive.
//!
//! Two closed-form conjugate models are provided: a per-dimension
//! Normal-inverse-Gamma Gaussian ([`NigGaussianModel`]) and a character-level
//! Dirichlet bigram over name strings ([`DirichletBigramModel`]). Models are
//! immutable after construction; repeated evaluations are deduplicated by a
//! [`LikelihoodCache`] keyed on `(model id, canonical cluster)`.

mod bigram;
mod cache;
mod nig;

pub use bigram::{fit_bigram_pseudocounts, BigramAlphabet, DirichletBigramModel};
pub use cache::{LikelihoodCache, ModelSel, ModelToken, Scorer};
pub use nig::NigGaussianModel;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::partition::DataId;

#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    MissingPayload(DataId),
    /// The payload exists but has the wrong type for this model.
    PayloadMismatch {
        id: DataId,
        wanted: &'static str,
    },
    DimMismatch {
        id: DataId,
        got: usize,
        want: usize,
    },
    AlreadyMember(DataId),
    InvalidParameter(&'static str),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::MissingPayload(id) => write!(f, "no payload stored for id {id}"),
            ModelError::PayloadMismatch { id, wanted } => {
                write!(f, "payload for id {id} is not usable as {wanted}")
            }
            ModelError::DimMismatch { id, got, want } => {
                write!(f, "point {id} has {got} dims, model expects {want}")
            }
            ModelError::AlreadyMember(id) => write!(f, "id {id} is already a cluster member"),
            ModelError::InvalidParameter(what) => write!(f, "invalid model parameter: {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ModelError {}

/// Observation payloads indexed by arrival id.
#[derive(Clone, Debug)]
pub enum PayloadStore {
    Points { dims: usize, rows: Vec<Vec<f64>> },
    Names(Vec<String>),
}

impl PayloadStore {
    pub fn from_points(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let dims = rows.first().map_or(0, Vec::len);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dims {
                return Err(ModelError::DimMismatch {
                    id: DataId(i as u32),
                    got: r.len(),
                    want: dims,
                });
            }
        }
        Ok(PayloadStore::Points { dims, rows })
    }

    pub fn from_names(names: Vec<String>) -> Self {
        PayloadStore::Names(names)
    }

    pub fn len(&self) -> usize {
        match self {
            PayloadStore::Points { rows, .. } => rows.len(),
            PayloadStore::Names(names) => names.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, id: DataId) -> Result<&[f64], ModelError> {
        match self {
            PayloadStore::Points { rows, .. } => rows
                .get(id.index())
                .map(Vec::as_slice)
                .ok_or(ModelError::MissingPayload(id)),
            PayloadStore::Names(_) => Err(ModelError::PayloadMismatch {
                id,
                wanted: "point",
            }),
        }
    }

    pub fn name(&self, id: DataId) -> Result<&str, ModelError> {
        match self {
            PayloadStore::Names(names) => names
                .get(id.index())
                .map(String::as_str)
                .ok_or(ModelError::MissingPayload(id)),
            PayloadStore::Points { .. } => Err(ModelError::PayloadMismatch { id, wanted: "name" }),
        }
    }
}

/// Log marginal likelihood of a cluster of observations.
pub trait LikelihoodModel {
    /// Stable identifier; distinct parameterisations must yield distinct ids.
    fn model_id(&self) -> &str;

    /// Log marginal likelihood of the cluster given by `members` (canonically
    /// sorted, no duplicates). Must return 0 for the empty cluster.
    fn log_marginal(&self, members: &[DataId], store: &PayloadStore) -> Result<f64, ModelError>;
}

impl<M: LikelihoodModel + ?Sized> LikelihoodModel for &M {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn log_marginal(&self, members: &[DataId], store: &PayloadStore) -> Result<f64, ModelError> {
        (**self).log_marginal(members, store)
    }
}

impl<M: LikelihoodModel + ?Sized> LikelihoodModel for alloc::boxed::Box<M> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn log_marginal(&self, members: &[DataId], store: &PayloadStore) -> Result<f64, ModelError> {
        (**self).log_marginal(members, store)
    }
}

/// Uncached evaluation, mostly for tests and one-off scoring.
pub fn log_marginal(
    model: &dyn LikelihoodModel,
    members: &[DataId],
    store: &PayloadStore,
) -> Result<f64, ModelError> {
    model.log_marginal(members, store)
}

/// Log predictive of `x` joining `cluster`: the marginal ratio
/// `p(cluster + x) / p(cluster)` in log space. For an empty cluster this is
/// the prior predictive of `x`.
pub fn log_predictive(
    model: &dyn LikelihoodModel,
    x: DataId,
    cluster: &[DataId],
    store: &PayloadStore,
) -> Result<f64, ModelError> {
    if cluster.contains(&x) {
        return Err(ModelError::AlreadyMember(x));
    }
    let mut extended: Vec<DataId> = Vec::with_capacity(cluster.len() + 1);
    extended.extend_from_slice(cluster);
    extended.push(x);
    extended.sort_unstable();
    Ok(model.log_marginal(&extended, store)? - model.log_marginal(cluster, store)?)
}

/// Assigns every cluster log marginal 0; the posterior reduces to the CRP
/// prior. Useful for prior-only clustering and exactness tests.
#[derive(Clone, Debug, Default)]
pub struct UnitModel;

impl LikelihoodModel for UnitModel {
    fn model_id(&self) -> &str {
        "unit"
    }

    fn log_marginal(&self, _members: &[DataId], _store: &PayloadStore) -> Result<f64, ModelError> {
        Ok(0.0)
    }
}

/// Wraps a model with a per-point and a per-cluster log-scale:
/// `log p(c) = inner(c) + |c| * per_point + per_cluster` (empty clusters stay
/// at 0). The per-cluster term acts on the partition posterior exactly like
/// rescaling the concentration by `exp(per_cluster)`; the per-point term
/// shifts every marginal by the same amount per observation and leaves the
/// posterior over partitions of a fixed dataset unchanged.
#[derive(Clone, Debug)]
pub struct ScaledModel<M> {
    inner: M,
    log_scale_per_point: f64,
    log_scale_per_cluster: f64,
    id: String,
}

impl<M: LikelihoodModel> ScaledModel<M> {
    pub fn new(inner: M, log_scale_per_point: f64, log_scale_per_cluster: f64) -> Self {
        let id = format!(
            "scaled({};pt={log_scale_per_point};cl={log_scale_per_cluster})",
            inner.model_id()
        );
        ScaledModel {
            inner,
            log_scale_per_point,
            log_scale_per_cluster,
            id,
        }
    }

    pub fn per_point(inner: M, log_scale_per_point: f64) -> Self {
        Self::new(inner, log_scale_per_point, 0.0)
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }
}

impl<M: LikelihoodModel> LikelihoodModel for ScaledModel<M> {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn log_marginal(&self, members: &[DataId], store: &PayloadStore) -> Result<f64, ModelError> {
        if members.is_empty() {
            return Ok(0.0);
        }
        Ok(self.inner.log_marginal(members, store)?
            + members.len() as f64 * self.log_scale_per_point
            + self.log_scale_per_cluster)
    }
}
