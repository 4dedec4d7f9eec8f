//! Character-level Dirichlet bigram likelihood over name strings.
//!
//! For every history symbol `h` the next-symbol probabilities carry a
//! Dirichlet prior with pseudo-counts `alpha[h][i]`; the cluster marginal is
//! the product over histories of Dirichlet-multinomial compounds on the
//! pooled transition counts of all names in the cluster. Names are framed
//! with explicit begin/end sentinels, so single-character names still carry
//! information. Characters outside the configured alphabet collapse to a
//! single OTHER symbol, keeping the transition table finite.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{LikelihoodModel, ModelError, PayloadStore};
use crate::numeric::ln_gamma;
use crate::partition::DataId;

/// A transition symbol. Regular characters plus the three specials.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sym {
    Char(char),
    Other,
    Bos,
    Eos,
}

/// The character set of a bigram model, including sentinel handling.
#[derive(Clone, Debug)]
pub struct BigramAlphabet {
    chars: Vec<char>,
    case_fold: bool,
}

impl BigramAlphabet {
    /// Lowercase letters, digits, space and common name punctuation.
    pub fn default_names() -> Self {
        Self::default_names_with_case(true)
    }

    /// The default character set with explicit case-folding behaviour.
    pub fn default_names_with_case(case_fold: bool) -> Self {
        let mut chars: Vec<char> = ('a'..='z').collect();
        if !case_fold {
            chars.extend('A'..='Z');
        }
        chars.extend('0'..='9');
        chars.extend([' ', '-', '.', '\'', '&', ',']);
        Self::new(chars, case_fold).expect("default alphabet is valid")
    }

    pub fn new(mut chars: Vec<char>, case_fold: bool) -> Result<Self, ModelError> {
        chars.sort_unstable();
        chars.dedup();
        if chars.is_empty() {
            return Err(ModelError::InvalidParameter("alphabet must not be empty"));
        }
        Ok(BigramAlphabet { chars, case_fold })
    }

    /// Number of symbols including OTHER, BOS and EOS.
    pub fn size(&self) -> usize {
        self.chars.len() + 3
    }

    fn other_index(&self) -> usize {
        self.chars.len()
    }

    fn bos_index(&self) -> usize {
        self.chars.len() + 1
    }

    fn eos_index(&self) -> usize {
        self.chars.len() + 2
    }

    pub fn index_of(&self, sym: Sym) -> usize {
        match sym {
            Sym::Char(c) => {
                let c = self.fold(c);
                self.chars.binary_search(&c).unwrap_or(self.other_index())
            }
            Sym::Other => self.other_index(),
            Sym::Bos => self.bos_index(),
            Sym::Eos => self.eos_index(),
        }
    }

    fn fold(&self, c: char) -> char {
        if self.case_fold {
            c.to_lowercase().next().unwrap_or(c)
        } else {
            c
        }
    }

    /// Symbol index sequence BOS, chars..., EOS.
    fn encode(&self, name: &str) -> Vec<usize> {
        let mut seq = Vec::with_capacity(name.len() + 2);
        seq.push(self.bos_index());
        for c in name.chars() {
            seq.push(self.index_of(Sym::Char(c)));
        }
        seq.push(self.eos_index());
        seq
    }
}

#[derive(Clone, Debug)]
pub struct DirichletBigramModel {
    alphabet: BigramAlphabet,
    /// Row-major `[history][next]` pseudo-counts, all strictly positive.
    pseudo: Vec<f64>,
    row_sums: Vec<f64>,
    rescale_c: f64,
    id: String,
}

impl DirichletBigramModel {
    pub fn new(
        alphabet: BigramAlphabet,
        pseudo: Vec<f64>,
        rescale_c: f64,
    ) -> Result<Self, ModelError> {
        let n = alphabet.size();
        if pseudo.len() != n * n {
            return Err(ModelError::InvalidParameter(
                "pseudo-count shape must be |A| x |A|",
            ));
        }
        if pseudo.iter().any(|&a| a <= 0.0 || !a.is_finite()) {
            return Err(ModelError::InvalidParameter(
                "pseudo-counts must be positive",
            ));
        }
        if rescale_c <= 0.0 || rescale_c > 1.0 || rescale_c.is_nan() {
            return Err(ModelError::InvalidParameter("rescale c must lie in (0, 1]"));
        }
        let row_sums = (0..n)
            .map(|h| pseudo[h * n..(h + 1) * n].iter().sum())
            .collect();
        let id = format!(
            "bigram(n={n};c={rescale_c};fp={:016x})",
            fingerprint(&pseudo)
        );
        Ok(DirichletBigramModel {
            alphabet,
            pseudo,
            row_sums,
            rescale_c,
            id,
        })
    }

    /// Flat pseudo-counts `c` in every cell (no corpus).
    pub fn uniform(alphabet: BigramAlphabet, rescale_c: f64) -> Result<Self, ModelError> {
        let n = alphabet.size();
        Self::new(alphabet, alloc::vec![rescale_c; n * n], rescale_c)
    }

    pub fn alphabet(&self) -> &BigramAlphabet {
        &self.alphabet
    }

    pub fn rescale_c(&self) -> f64 {
        self.rescale_c
    }

    pub fn pseudo_count(&self, history: Sym, next: Sym) -> f64 {
        let n = self.alphabet.size();
        self.pseudo[self.alphabet.index_of(history) * n + self.alphabet.index_of(next)]
    }

    /// Pooled `(history, next)` transition counts of a set of names, as sorted
    /// runs over the flattened index.
    fn pooled_counts(
        &self,
        members: &[DataId],
        store: &PayloadStore,
    ) -> Result<Vec<(usize, u32)>, ModelError> {
        let n = self.alphabet.size();
        let mut cells: Vec<usize> = Vec::new();
        for &id in members {
            let name = store.name(id)?;
            let seq = self.alphabet.encode(name);
            for w in seq.windows(2) {
                cells.push(w[0] * n + w[1]);
            }
        }
        cells.sort_unstable();
        let mut runs: Vec<(usize, u32)> = Vec::new();
        for cell in cells {
            match runs.last_mut() {
                Some((c, k)) if *c == cell => *k += 1,
                _ => runs.push((cell, 1)),
            }
        }
        Ok(runs)
    }
}

impl LikelihoodModel for DirichletBigramModel {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn log_marginal(&self, members: &[DataId], store: &PayloadStore) -> Result<f64, ModelError> {
        if members.is_empty() {
            return Ok(0.0);
        }
        let n = self.alphabet.size();
        let runs = self.pooled_counts(members, store)?;
        let mut total = 0.0;
        // Per-cell terms, plus per-history normalisers over the counted rows.
        let mut row = usize::MAX;
        let mut row_count = 0u64;
        let flush = |h: usize, count: u64, total: &mut f64| {
            if count > 0 {
                let a_h = self.row_sums[h];
                *total += ln_gamma(a_h) - ln_gamma(a_h + count as f64);
            }
        };
        for &(cell, k) in &runs {
            let h = cell / n;
            if h != row {
                if row != usize::MAX {
                    flush(row, row_count, &mut total);
                }
                row = h;
                row_count = 0;
            }
            row_count += k as u64;
            let alpha = self.pseudo[cell];
            total += ln_gamma(alpha + k as f64) - ln_gamma(alpha);
        }
        if row != usize::MAX {
            flush(row, row_count, &mut total);
        }
        Ok(total)
    }
}

fn fingerprint(values: &[f64]) -> u64 {
    // FNV-1a over the bit patterns; stable across runs for identical fits.
    let mut hash = 0xcbf29ce484222325u64;
    for v in values {
        for byte in v.to_bits().to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    }
    hash
}

/// Fits per-history Dirichlet pseudo-counts from a corpus with plus-one
/// smoothing and a multiplicative rescale: `alpha[h][i] = c * (1 + count)`.
pub fn fit_bigram_pseudocounts(
    corpus: &[String],
    alphabet: BigramAlphabet,
    rescale_c: f64,
) -> Result<DirichletBigramModel, ModelError> {
    if corpus.is_empty() {
        return Err(ModelError::InvalidParameter(
            "bigram corpus must not be empty",
        ));
    }
    if rescale_c <= 0.0 || rescale_c > 1.0 || rescale_c.is_nan() {
        return Err(ModelError::InvalidParameter("rescale c must lie in (0, 1]"));
    }
    let n = alphabet.size();
    let mut counts = alloc::vec![0u64; n * n];
    for name in corpus {
        let seq = alphabet.encode(name);
        for w in seq.windows(2) {
            counts[w[0] * n + w[1]] += 1;
        }
    }
    let pseudo = counts
        .iter()
        .map(|&k| rescale_c * (1.0 + k as f64))
        .collect();
    DirichletBigramModel::new(alphabet, pseudo, rescale_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::log_predictive;
    use crate::numeric::ln;
    use alloc::string::ToString;

    fn names(v: &[&str]) -> PayloadStore {
        PayloadStore::from_names(v.iter().map(|s| s.to_string()).collect())
    }

    fn corpus(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn fit_plus_one_counts() {
        let m = fit_bigram_pseudocounts(&corpus(&["aa"]), BigramAlphabet::default_names(), 1.0)
            .unwrap();
        assert_eq!(m.pseudo_count(Sym::Char('a'), Sym::Char('a')), 2.0);
        assert_eq!(m.pseudo_count(Sym::Char('a'), Sym::Char('b')), 1.0);
        assert_eq!(m.pseudo_count(Sym::Char('b'), Sym::Char('a')), 1.0);
        // Sentinel transitions are counted per string.
        assert_eq!(m.pseudo_count(Sym::Bos, Sym::Char('a')), 2.0);
        assert_eq!(m.pseudo_count(Sym::Char('a'), Sym::Eos), 2.0);
    }

    #[test]
    fn fit_rescaling() {
        let m = fit_bigram_pseudocounts(&corpus(&["aa"]), BigramAlphabet::default_names(), 0.5)
            .unwrap();
        assert_eq!(m.pseudo_count(Sym::Char('a'), Sym::Char('a')), 1.0);
        assert_eq!(m.pseudo_count(Sym::Char('a'), Sym::Char('b')), 0.5);
    }

    #[test]
    fn fit_two_observations() {
        let m =
            fit_bigram_pseudocounts(&corpus(&["ab", "ab"]), BigramAlphabet::default_names(), 1.0)
                .unwrap();
        assert_eq!(m.pseudo_count(Sym::Char('a'), Sym::Char('b')), 3.0);
    }

    #[test]
    fn fit_errors() {
        assert!(fit_bigram_pseudocounts(&[], BigramAlphabet::default_names(), 1.0).is_err());
        assert!(
            fit_bigram_pseudocounts(&corpus(&["aa"]), BigramAlphabet::default_names(), 0.0)
                .is_err()
        );
        assert!(
            fit_bigram_pseudocounts(&corpus(&["aa"]), BigramAlphabet::default_names(), 1.5)
                .is_err()
        );
    }

    #[test]
    fn single_name_marginal_is_chain_of_priors() {
        // With one observation per history, the Dirichlet-multinomial reduces
        // to the prior mean alpha[h][i] / sum_j alpha[h][j] per transition.
        let m = DirichletBigramModel::uniform(BigramAlphabet::default_names(), 1.0).unwrap();
        let store = names(&["ab"]);
        let got = m.log_marginal(&[DataId(0)], &store).unwrap();
        let expect = [
            (Sym::Bos, Sym::Char('a')),
            (Sym::Char('a'), Sym::Char('b')),
            (Sym::Char('b'), Sym::Eos),
        ]
        .iter()
        .map(|&(h, i)| {
            let n = m.alphabet.size();
            let row: f64 = m.row_sums[m.alphabet.index_of(h)];
            let _ = n;
            ln(m.pseudo_count(h, i) / row)
        })
        .sum::<f64>();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn chain_rule_any_insertion_order() {
        let m = fit_bigram_pseudocounts(
            &corpus(&["anna", "anne", "bob", "bobby"]),
            BigramAlphabet::default_names(),
            0.8,
        )
        .unwrap();
        let store = names(&["anna b", "bo-ann", "ann"]);
        let all = [DataId(0), DataId(1), DataId(2)];
        let joint = m.log_marginal(&all, &store).unwrap();
        // Every insertion order of sequential predictives telescopes to the
        // same joint marginal.
        let orders = [[0u32, 1, 2], [2, 0, 1], [1, 2, 0], [2, 1, 0]];
        for order in orders {
            let mut acc = 0.0;
            let mut members: Vec<DataId> = Vec::new();
            for &i in &order {
                acc += log_predictive(&m, DataId(i), &members, &store).unwrap();
                members.push(DataId(i));
                members.sort_unstable();
            }
            assert!(
                (acc - joint).abs() < 1e-10,
                "order {order:?}: {acc} vs {joint}"
            );
        }
    }

    #[test]
    fn unknown_chars_collapse_to_other() {
        let m = DirichletBigramModel::uniform(BigramAlphabet::default_names(), 1.0).unwrap();
        let store = names(&["a#b", "a%b"]);
        let x = m.log_marginal(&[DataId(0)], &store).unwrap();
        let y = m.log_marginal(&[DataId(1)], &store).unwrap();
        assert!((x - y).abs() < 1e-15);
    }

    #[test]
    fn digits_and_punctuation_are_distinct_symbols() {
        // Within-alphabet characters must not collapse together; a model
        // fitted with a digit transition distinguishes it from others.
        let m = fit_bigram_pseudocounts(&corpus(&["a1"]), BigramAlphabet::default_names(), 1.0)
            .unwrap();
        assert_eq!(m.pseudo_count(Sym::Char('a'), Sym::Char('1')), 2.0);
        assert_eq!(m.pseudo_count(Sym::Char('a'), Sym::Char('2')), 1.0);
        assert_eq!(m.pseudo_count(Sym::Char('a'), Sym::Other), 1.0);
        let store = names(&["a1", "a2", "a#"]);
        let one = m.log_marginal(&[DataId(0)], &store).unwrap();
        let two = m.log_marginal(&[DataId(1)], &store).unwrap();
        assert!(one > two, "fitted digit transition must score higher");
    }

    #[test]
    fn case_folding_is_configurable() {
        let folded = DirichletBigramModel::uniform(BigramAlphabet::default_names(), 1.0).unwrap();
        let store = names(&["Ann", "ann"]);
        let a = folded.log_marginal(&[DataId(0)], &store).unwrap();
        let b = folded.log_marginal(&[DataId(1)], &store).unwrap();
        assert!((a - b).abs() < 1e-15);

        // Without folding, a model fitted on lowercase tells the two apart.
        let exact = fit_bigram_pseudocounts(
            &corpus(&["ann"]),
            BigramAlphabet::new(('a'..='z').chain('A'..='Z').collect(), false).unwrap(),
            1.0,
        )
        .unwrap();
        let a = exact.log_marginal(&[DataId(0)], &store).unwrap();
        let b = exact.log_marginal(&[DataId(1)], &store).unwrap();
        assert!((a - b).abs() > 1e-12);
    }

    #[test]
    fn empty_cluster_is_zero() {
        let m = DirichletBigramModel::uniform(BigramAlphabet::default_names(), 1.0).unwrap();
        let store = names(&["x"]);
        assert_eq!(m.log_marginal(&[], &store).unwrap(), 0.0);
    }
}
