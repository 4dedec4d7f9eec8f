//! Online model-based clustering under a Dirichlet process mixture prior.
//!
//! The crate maintains weighted particle approximations to the posterior over
//! partitions of a data stream. Its centrepiece is a factorised sequential
//! Monte Carlo engine ([`splitsmc`]) that dynamically decomposes the stream
//! into near-independent subproblems, each carrying its own particle set, and
//! merges them back when a new observation ties them together. Vanilla SMC,
//! greedy assignment, Gibbs / Metropolis-within-Gibbs and agglomerative
//! baselines share the same partition algebra and likelihood models.
//!
//! All probability mass is carried as natural logarithms end to end, and
//! every normalisation goes through log-sum-exp. The crate is `no_std`
//! (requires `alloc`); IO, file formats and the command-line front end live
//! in the companion `dpc-cli` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod baselines;
pub mod clock;
pub mod data;
pub mod metrics;
pub mod models;
pub mod numeric;
pub mod partition;
pub mod posterior;
pub mod proposal;
pub mod rng;
pub mod smc;
pub mod splitsmc;

pub use partition::{AssignTarget, Cluster, CrpPrior, DataId, IdSet, Partition, PartitionError};
pub use posterior::{enumerate_partitions, ewens_log_posterior, exact_posterior};
pub use smc::{ParticleSet, PutativeParticle, WeightedParticle};
pub use splitsmc::{FactorisedState, Subproblem};
