//! N-best re-ranking with external-LM shallow fusion and internal-LM
//! subtraction.
//!
//! The combined score of a hypothesis is
//!
//! ```text
//! log P(Y|X) + lambda_lm * log P_LM(Y) - lambda_ilm * log P_ILM(Y)
//! ```
//!
//! With `lambda_ilm = 0` this is plain shallow fusion. Scores come from
//! files; nothing here evaluates a model.

use indexmap::IndexMap;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NBestEntry {
    pub utt_id: String,
    /// 1-based position in the decoder's n-best list.
    pub rank: u32,
    pub text: String,
    pub am_logp: f64,
    pub lm_logp: Option<f64>,
    pub ilm_logp: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FusionWeights {
    pub lambda_lm: f64,
    pub lambda_ilm: f64,
    /// Divide the combined score by the number of scoring units in `text`.
    pub length_normalize: bool,
}

impl FusionWeights {
    pub fn new(lambda_lm: f64, lambda_ilm: f64) -> Result<Self> {
        for (name, v) in [("lambda_lm", lambda_lm), ("lambda_ilm", lambda_ilm)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(FusionWeights {
            lambda_lm,
            lambda_ilm,
            length_normalize: false,
        })
    }

    pub fn with_length_normalization(mut self, on: bool) -> Self {
        self.length_normalize = on;
        self
    }
}

fn term(e: &NBestEntry, lambda: f64, score: Option<f64>, which: &'static str) -> Result<f64> {
    if lambda == 0.0 {
        return Ok(0.0);
    }
    score
        .map(|s| lambda * s)
        .ok_or_else(|| Error::MissingScore {
            utt_id: e.utt_id.clone(),
            rank: e.rank,
            which,
        })
}

/// Log-linear score of one entry. A score whose weight is zero may be absent.
pub fn combined_score(e: &NBestEntry, w: &FusionWeights) -> Result<f64> {
    let s = e.am_logp + term(e, w.lambda_lm, e.lm_logp, "lm")?
        - term(e, w.lambda_ilm, e.ilm_logp, "ilm")?;
    if w.length_normalize {
        let n = crate::cstext::units(&e.text).len().max(1);
        Ok(s / n as f64)
    } else {
        Ok(s)
    }
}

/// Best entry of one n-best list; ties go to the lowest original rank.
pub fn best_entry<'a>(entries: &'a [NBestEntry], w: &FusionWeights) -> Result<&'a NBestEntry> {
    let mut best: Option<(&NBestEntry, f64)> = None;
    for e in entries {
        let s = combined_score(e, w)?;
        best = match best {
            Some((b, bs)) if bs > s || (bs == s && b.rank <= e.rank) => Some((b, bs)),
            _ => Some((e, s)),
        };
    }
    best.map(|(e, _)| e)
        .ok_or_else(|| Error::invalid("empty n-best list"))
}

/// Picks the winner of every utterance's n-best list.
pub fn rerank(
    nbest: &IndexMap<String, Vec<NBestEntry>>,
    w: &FusionWeights,
) -> Result<IndexMap<String, NBestEntry>> {
    nbest
        .iter()
        .map(|(id, list)| {
            if list.is_empty() {
                return Err(Error::invalid(format!(
                    "utterance {id:?} has an empty n-best list"
                )));
            }
            Ok((id.clone(), best_entry(list, w)?.clone()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn entry(rank: u32, am: f64, lm: Option<f64>, ilm: Option<f64>) -> NBestEntry {
        NBestEntry {
            utt_id: "u".into(),
            rank,
            text: format!("h{rank}"),
            am_logp: am,
            lm_logp: lm,
            ilm_logp: ilm,
        }
    }

    #[test]
    fn combined_score_examples() {
        let w0 = FusionWeights::new(0.0, 0.0).unwrap();
        assert_eq!(
            combined_score(&entry(1, -10.0, None, None), &w0).unwrap(),
            -10.0
        );

        let w = FusionWeights::new(0.3, 0.0).unwrap();
        let s = combined_score(&entry(1, -10.5, Some(-3.0), None), &w).unwrap();
        assert_abs_diff_eq!(s, -11.4, epsilon = 1e-12);

        let w = FusionWeights::new(0.3, 0.2).unwrap();
        let s = combined_score(&entry(1, -10.5, Some(-3.0), Some(-2.0)), &w).unwrap();
        assert_abs_diff_eq!(s, -11.0, epsilon = 1e-12);
    }

    #[test]
    fn missing_score_is_named() {
        let w = FusionWeights::new(0.3, 0.0).unwrap();
        match combined_score(&entry(2, -1.0, None, None), &w) {
            Err(Error::MissingScore { rank, which, .. }) => {
                assert_eq!((rank, which), (2, "lm"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rerank_examples() {
        let pair = vec![
            entry(1, -10.0, Some(-5.0), Some(-4.0)),
            entry(2, -10.5, Some(-3.0), Some(-2.0)),
        ];
        let mut nb = IndexMap::new();
        nb.insert("u".to_string(), pair);

        let w = FusionWeights::new(0.0, 0.0).unwrap();
        assert_eq!(rerank(&nb, &w).unwrap()["u"].rank, 1);
        let w = FusionWeights::new(0.3, 0.0).unwrap();
        assert_eq!(rerank(&nb, &w).unwrap()["u"].rank, 2);
        let w = FusionWeights::new(0.3, 0.2).unwrap();
        assert_eq!(rerank(&nb, &w).unwrap()["u"].rank, 1);
    }

    #[test]
    fn ties_go_to_lower_rank() {
        let list = vec![entry(3, -1.0, None, None), entry(2, -1.0, None, None)];
        let w = FusionWeights::default();
        assert_eq!(best_entry(&list, &w).unwrap().rank, 2);
    }

    #[test]
    fn empty_list_rejected() {
        let mut nb = IndexMap::new();
        nb.insert("u".to_string(), vec![]);
        assert!(rerank(&nb, &FusionWeights::default()).is_err());
    }

    #[test]
    fn negative_lambda_rejected() {
        assert!(FusionWeights::new(-0.1, 0.0).is_err());
        assert!(FusionWeights::new(0.1, f64::INFINITY).is_err());
    }

    #[test]
    fn length_normalization() {
        let mut e = entry(1, -12.0, None, None);
        e.text = "我 爱 OK".into();
        let w = FusionWeights::default().with_length_normalization(true);
        assert_abs_diff_eq!(combined_score(&e, &w).unwrap(), -4.0);
    }
}
