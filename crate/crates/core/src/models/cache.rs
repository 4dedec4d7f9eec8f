//! Global evaluation cache and the cached scorer the engines run on.
//!
//! Cache keys are `(model id, canonical cluster)`; hits return the stored
//! value bit for bit. The miss counters are the single accounting source for
//! model-evaluation budgets, so every engine evaluation must go through
//! [`Scorer`]. One scorer (and hence one cache) is owned per run; cross-run
//! sharing would need external synchronisation.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use hashbrown::HashMap;

use super::{LikelihoodModel, ModelError, PayloadStore};
use crate::partition::DataId;

/// Index of a registered model inside a [`LikelihoodCache`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelToken(usize);

#[derive(Default)]
pub struct LikelihoodCache {
    model_ids: Vec<String>,
    tables: Vec<HashMap<Box<[DataId]>, f64>>,
    hits: Vec<u64>,
    misses: Vec<u64>,
}

impl LikelihoodCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a model id, returning the existing token when already known.
    pub fn register(&mut self, model_id: &str) -> ModelToken {
        if let Some(pos) = self.model_ids.iter().position(|id| id == model_id) {
            return ModelToken(pos);
        }
        self.model_ids.push(model_id.to_string());
        self.tables.push(HashMap::new());
        self.hits.push(0);
        self.misses.push(0);
        ModelToken(self.model_ids.len() - 1)
    }

    /// Cached lookup; evaluates and stores on a miss.
    pub fn get_or_eval(
        &mut self,
        token: ModelToken,
        members: &[DataId],
        eval: impl FnOnce() -> Result<f64, ModelError>,
    ) -> Result<f64, ModelError> {
        if let Some(&v) = self.tables[token.0].get(members) {
            self.hits[token.0] += 1;
            return Ok(v);
        }
        let v = eval()?;
        self.misses[token.0] += 1;
        self.tables[token.0].insert(members.into(), v);
        Ok(v)
    }

    pub fn misses(&self, token: ModelToken) -> u64 {
        self.misses[token.0]
    }

    pub fn hits(&self, token: ModelToken) -> u64 {
        self.hits[token.0]
    }

    pub fn total_misses(&self) -> u64 {
        self.misses.iter().sum()
    }

    pub fn entries(&self, token: ModelToken) -> usize {
        self.tables[token.0].len()
    }
}

/// Which of the scorer's models to evaluate with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelSel {
    Main,
    Surrogate,
}

/// Payloads plus main (and optional surrogate) model behind one cache.
pub struct Scorer<'a> {
    store: &'a PayloadStore,
    main: &'a dyn LikelihoodModel,
    surrogate: Option<&'a dyn LikelihoodModel>,
    cache: LikelihoodCache,
    main_tok: ModelToken,
    surr_tok: Option<ModelToken>,
    scratch: Vec<DataId>,
}

impl<'a> Scorer<'a> {
    pub fn new(
        store: &'a PayloadStore,
        main: &'a dyn LikelihoodModel,
        surrogate: Option<&'a dyn LikelihoodModel>,
    ) -> Self {
        let mut cache = LikelihoodCache::new();
        let main_tok = cache.register(main.model_id());
        let surr_tok = surrogate.map(|s| cache.register(s.model_id()));
        Scorer {
            store,
            main,
            surrogate,
            cache,
            main_tok,
            surr_tok,
            scratch: Vec::new(),
        }
    }

    pub fn store(&self) -> &'a PayloadStore {
        self.store
    }

    pub fn has_surrogate(&self) -> bool {
        self.surrogate.is_some()
    }

    fn select(&self, which: ModelSel) -> (&'a dyn LikelihoodModel, ModelToken) {
        match which {
            ModelSel::Main => (self.main, self.main_tok),
            ModelSel::Surrogate => {
                let model = self.surrogate.expect("no surrogate model configured");
                (model, self.surr_tok.expect("no surrogate model configured"))
            }
        }
    }

    /// Cached log marginal of a canonical member slice.
    pub fn log_marginal(&mut self, which: ModelSel, members: &[DataId]) -> Result<f64, ModelError> {
        if members.is_empty() {
            return Ok(0.0);
        }
        let (model, token) = self.select(which);
        let store = self.store;
        self.cache
            .get_or_eval(token, members, || model.log_marginal(members, store))
    }

    /// Cached log predictive of `x` joining `members`.
    pub fn log_predictive(
        &mut self,
        which: ModelSel,
        x: DataId,
        members: &[DataId],
    ) -> Result<f64, ModelError> {
        if members.binary_search(&x).is_ok() {
            return Err(ModelError::AlreadyMember(x));
        }
        let mut extended = core::mem::take(&mut self.scratch);
        extended.clear();
        extended.extend_from_slice(members);
        let pos = extended.partition_point(|&m| m < x);
        extended.insert(pos, x);
        let joint = self.log_marginal(which, &extended);
        self.scratch = extended;
        Ok(joint? - self.log_marginal(which, members)?)
    }

    pub fn main_misses(&self) -> u64 {
        self.cache.misses(self.main_tok)
    }

    pub fn surrogate_misses(&self) -> u64 {
        self.surr_tok.map_or(0, |t| self.cache.misses(t))
    }

    pub fn total_misses(&self) -> u64 {
        self.cache.total_misses()
    }

    pub fn cache(&self) -> &LikelihoodCache {
        &self.cache
    }
}
