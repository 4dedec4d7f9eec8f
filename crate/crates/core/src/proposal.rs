//! Surrogate-model proposal step.
//!
//! When a cheap surrogate likelihood is configured, putative assignments are
//! first scored with it, a shortlist of the `m'` best non-singleton
//! assignments is selected by greedy resampling, and only the shortlist is
//! re-scored with the main model. Singleton (new-cluster) putatives are
//! always kept through to main-model scoring: the concentration parameter is
//! tuned against the main likelihood, so the surrogate must not be allowed
//! to discard the fresh-cluster option prematurely. The main-model cost per
//! arrival is then at most `m' + 1` distinct cluster evaluations.

use alloc::vec::Vec;

use crate::models::{ModelSel, Scorer};
use crate::partition::DataId;
use crate::smc::{
    greedy_resample_by, greedy_resample_putatives, EngineError, ParticleSet, PutativeParticle,
};

/// Shortlists putatives scored under the surrogate: the greedy top `m_prime`
/// among non-singleton assignments plus every singleton assignment
/// unconditionally. Order within the shortlist is not significant.
pub fn surrogate_propose(
    putatives: Vec<PutativeParticle>,
    m_prime: usize,
    sets: &[&ParticleSet],
    x: DataId,
) -> Vec<PutativeParticle> {
    assert!(m_prime >= 1, "proposal budget m' must be positive");
    let (singletons, joins): (Vec<_>, Vec<_>) = putatives
        .into_iter()
        .partition(PutativeParticle::is_singleton);
    let mut shortlist = singletons;
    if !joins.is_empty() {
        let weighted: Vec<(PutativeParticle, f64)> = joins
            .into_iter()
            .map(|p| {
                let w = p.log_weight();
                (p, w)
            })
            .collect();
        let kept = greedy_resample_by(weighted, m_prime, |a, b| {
            let pa = a.materialize(sets, x).expect("valid putative");
            let pb = b.materialize(sets, x).expect("valid putative");
            pa.cmp(&pb).then_with(|| a.subproblem.cmp(&b.subproblem))
        })
        .expect("non-empty joins");
        // The shortlist keeps raw surrogate weights; re-weighting happens at
        // the main-model rescore.
        shortlist.extend(kept.into_iter().map(|(p, _)| p));
    }
    shortlist
}

/// Replaces each shortlisted putative's predictive with the main-model value,
/// keeping the source-weight and prior parts untouched.
pub fn rescore_with_main(
    shortlist: Vec<PutativeParticle>,
    sets: &[&ParticleSet],
    x: DataId,
    scorer: &mut Scorer<'_>,
) -> Result<Vec<PutativeParticle>, EngineError> {
    let mut out = shortlist;
    for p in &mut out {
        let members = p.target_members(sets);
        let pred = scorer.log_predictive(ModelSel::Main, x, members)?;
        p.set_predictive(pred);
    }
    Ok(out)
}

/// Main-model re-weighting of a shortlist followed by a greedy resample down
/// to `m` particles.
pub fn rescore_and_resample(
    shortlist: Vec<PutativeParticle>,
    sets: &[&ParticleSet],
    x: DataId,
    scorer: &mut Scorer<'_>,
    m: usize,
) -> Result<Vec<PutativeParticle>, EngineError> {
    if shortlist.is_empty() {
        return Err(EngineError::EmptyParticleSet);
    }
    let rescored = rescore_with_main(shortlist, sets, x, scorer)?;
    greedy_resample_putatives(rescored, m, sets, x)
}
