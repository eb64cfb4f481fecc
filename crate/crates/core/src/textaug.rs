//! Long-context LM text augmentation.
//!
//! For a dialogue of `N >= 2` sentences the output is the `N` originals
//! followed by `2N` sampled pairs `s_i s_j` with `i < j`, so the text is
//! tripled. Pairs are drawn uniformly with replacement from all `N(N-1)/2`
//! chronological pairs, using a generator keyed by `(seed, dialogue_id)`.

use indexmap::IndexMap;
use rand::RngExt;

use crate::formats::Corpus;
use crate::seeding::rng_for;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dialogue {
    pub dialogue_id: String,
    /// `(utt_id, text)` in chronological order.
    pub sentences: Vec<(String, String)>,
}

/// Maps a pair index in `0..n(n-1)/2` to `(i, j)` with `i < j`, enumerating
/// pairs in lexicographic order.
fn pair_at(mut k: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
        i += 1;
    }
}

pub fn make_pairs(d: &Dialogue, seed: u64) -> Vec<String> {
    let n = d.sentences.len();
    let mut out: Vec<String> = d.sentences.iter().map(|(_, s)| s.clone()).collect();
    if n < 2 {
        return out;
    }
    let total = n * (n - 1) / 2;
    let mut rng = rng_for(seed, &d.dialogue_id);
    for _ in 0..2 * n {
        let (i, j) = pair_at(rng.random_range(0..total), n);
        out.push(format!("{} {}", d.sentences[i].1, d.sentences[j].1));
    }
    out
}

/// Groups corpus utterances into dialogues. Dialogues appear in order of
/// their first utterance; within a dialogue, corpus order is chronology.
pub fn group_dialogues(
    corpus: &Corpus,
    dialogue_of: &IndexMap<String, String>,
) -> Result<Vec<Dialogue>> {
    let mut groups: IndexMap<&str, Vec<(String, String)>> = IndexMap::new();
    for (utt, text) in &corpus.utterances {
        let dlg = dialogue_of.get(utt).ok_or_else(|| {
            Error::invalid(format!("utterance {utt:?} missing from dialogue map"))
        })?;
        groups
            .entry(dlg.as_str())
            .or_default()
            .push((utt.clone(), text.clone()));
    }
    Ok(groups
        .into_iter()
        .map(|(id, sentences)| Dialogue {
            dialogue_id: id.to_string(),
            sentences,
        })
        .collect())
}

/// Augments every dialogue; output order follows dialogue order.
pub fn augment(dialogues: &[Dialogue], seed: u64) -> Vec<String> {
    #[cfg(feature = "parallel")]
    let per: Vec<Vec<String>> = {
        use rayon::prelude::*;
        dialogues.par_iter().map(|d| make_pairs(d, seed)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per: Vec<Vec<String>> = dialogues.iter().map(|d| make_pairs(d, seed)).collect();
    per.into_iter().flatten().collect()
}
