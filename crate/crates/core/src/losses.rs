//! Loss kernels over explicit posterior matrices: attention cross entropy,
//! CTC negative log-likelihood, KL consistency between real and synthetic
//! speech posteriors, and the joint training objective that combines them.
//!
//! All per-sequence values are averaged over frames.

use crate::dsp::FeatureMatrix;
use crate::{Error, Result};

/// Floor applied to probabilities inside logarithms.
pub const LOG_FLOOR: f64 = 1e-12;

const ROW_SUM_TOL: f64 = 1e-6;

/// `T x V` matrix of per-frame probability distributions, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSeq {
    frames: usize,
    vocab: usize,
    probs: Vec<f64>,
}

impl PosteriorSeq {
    /// Validates shape, non-negativity and that each row sums to 1.
    pub fn new(frames: usize, vocab: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != frames * vocab {
            return Err(Error::invalid(format!(
                "posterior data has {} values, expected {frames}x{vocab}",
                probs.len()
            )));
        }
        if vocab == 0 {
            return Err(Error::invalid("posterior vocabulary is empty"));
        }
        for (t, row) in probs.chunks(vocab).enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::invalid(format!(
                    "frame {t}: probabilities must be finite and >= 0"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::invalid(format!(
                    "frame {t}: row sums to {sum}, expected 1"
                )));
            }
        }
        Ok(PosteriorSeq {
            frames,
            vocab,
            probs,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let vocab = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != vocab) {
            return Err(Error::invalid("ragged posterior rows"));
        }
        Self::new(rows.len(), vocab, rows.concat())
    }

    pub fn from_features(m: &FeatureMatrix) -> Result<Self> {
        Self::new(
            m.frames(),
            m.dims(),
            m.values().iter().map(|&v| f64::from(v)).collect(),
        )
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.frames, self.vocab)
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.probs[t * self.vocab..(t + 1) * self.vocab]
    }

    pub fn get(&self, t: usize, v: usize) -> f64 {
        self.probs[t * self.vocab + v]
    }
}

fn floored_ln(p: f64) -> f64 {
    p.max(LOG_FLOOR).ln()
}

/// `-(1/T) * sum_t ln p[t, labels[t]]`.
pub fn cross_entropy(p: &PosteriorSeq, labels: &[usize]) -> Result<f64> {
    if labels.len() != p.frames {
        return Err(Error::invalid(format!(
            "{} labels for {} frames",
            labels.len(),
            p.frames
        )));
    }
    if p.frames == 0 {
        return Err(Error::invalid("cross entropy over zero frames"));
    }
    let mut sum = 0.0;
    for (t, &l) in labels.iter().enumerate() {
        if l >= p.vocab {
            return Err(Error::invalid(format!(
                "label {l} at position {t} out of range for vocabulary {}",
                p.vocab
            )));
        }
        sum -= floored_ln(p.get(t, l));
    }
    Ok(sum / p.frames as f64)
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Minimum number of frames needed to emit `labels` under CTC: one per
/// label plus a blank between each pair of equal neighbours.
pub fn ctc_min_frames(labels: &[usize]) -> usize {
    labels.len() + labels.windows(2).filter(|w| w[0] == w[1]).count()
}

/// CTC negative log-likelihood of `labels`, by the forward recursion over
/// the blank-interleaved label sequence in log space.
///
/// Probabilities are not floored here: a zero-probability path simply does
/// not contribute, and if every path has probability zero the result is
/// `+inf`.
pub fn ctc_nll(p: &PosteriorSeq, labels: &[usize], blank: usize) -> Result<f64> {
    if p.vocab < 2 {
        return Err(Error::invalid("CTC needs a vocabulary of at least 2"));
    }
    if blank >= p.vocab {
        return Err(Error::invalid(format!("blank {blank} out of range")));
    }
    if let Some(&l) = labels.iter().find(|&&l| l == blank || l >= p.vocab) {
        return Err(Error::invalid(format!(
            "label {l} is the blank or out of range for vocabulary {}",
            p.vocab
        )));
    }
    let required = ctc_min_frames(labels);
    if p.frames < required {
        return Err(Error::InfeasibleLabel {
            labels: labels.len(),
            required,
            frames: p.frames,
        });
    }
    if p.frames == 0 {
        // only the empty labelling is feasible here, and it has probability 1
        return Ok(0.0);
    }

    // extended sequence: blank, l1, blank, l2, ..., blank
    let ext: Vec<usize> = std::iter::once(blank)
        .chain(labels.iter().flat_map(|&l| [l, blank]))
        .collect();
    let s = ext.len();
    let lp = |t: usize, k: usize| p.get(t, k).ln();

    let mut alpha = vec![f64::NEG_INFINITY; s];
    alpha[0] = lp(0, ext[0]);
    if s > 1 {
        alpha[1] = lp(0, ext[1]);
    }
    let mut next = vec![f64::NEG_INFINITY; s];
    for t in 1..p.frames {
        for i in 0..s {
            let mut a = alpha[i];
            if i >= 1 {
                a = log_add(a, alpha[i - 1]);
            }
            if i >= 2 && ext[i] != blank && ext[i] != ext[i - 2] {
                a = log_add(a, alpha[i - 2]);
            }
            next[i] = a + lp(t, ext[i]);
        }
        std::mem::swap(&mut alpha, &mut next);
    }
    let total = if s > 1 {
        log_add(alpha[s - 1], alpha[s - 2])
    } else {
        alpha[0]
    };
    Ok(-total)
}

/// Which argument of the KL divergence is the reference distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KlDirection {
    /// `KL(real || synthetic)`.
    #[default]
    RealToSynth,
    /// `KL(synthetic || real)`.
    SynthToReal,
}

/// `(1/T) * sum_t KL(p_real[t] || p_synth[t])`. Terms with `p_real = 0`
/// vanish; `p_synth` is floored at [`LOG_FLOOR`].
pub fn kl_consistency(p_real: &PosteriorSeq, p_synth: &PosteriorSeq) -> Result<f64> {
    if p_real.shape() != p_synth.shape() {
        return Err(Error::ShapeMismatch {
            left: p_real.shape(),
            right: p_synth.shape(),
        });
    }
    if p_real.frames == 0 {
        return Err(Error::invalid("KL over zero frames"));
    }
    let sum: f64 = p_real
        .probs
        .iter()
        .zip(&p_synth.probs)
        .filter(|(p, _)| **p > 0.0)
        .map(|(&p, &q)| p * (p.ln() - floored_ln(q)))
        .sum();
    Ok(sum / p_real.frames as f64)
}

pub fn kl_consistency_dir(
    p_real: &PosteriorSeq,
    p_synth: &PosteriorSeq,
    dir: KlDirection,
) -> Result<f64> {
    match dir {
        KlDirection::RealToSynth => kl_consistency(p_real, p_synth),
        KlDirection::SynthToReal => kl_consistency(p_synth, p_real),
    }
}

/// CTC weight `lambda1` and consistency weight `lambda2`; the attention
/// terms get `1 - lambda1 - lambda2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    lambda1: f64,
    lambda2: f64,
}

impl LossWeights {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !in_unit(lambda1) || !in_unit(lambda2) {
            return Err(Error::invalid(format!(
                "loss weights must lie in [0, 1], got {lambda1} and {lambda2}"
            )));
        }
        if lambda1 + lambda2 > 1.0 + 1e-12 {
            return Err(Error::invalid(format!(
                "lambda1 + lambda2 = {} exceeds 1",
                lambda1 + lambda2
            )));
        }
        Ok(LossWeights { lambda1, lambda2 })
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }
}

/// Per-term losses for one real/synthetic pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub att_real: f64,
    pub att_synth: f64,
    pub ctc_real: f64,
    pub ctc_synth: f64,
    pub consistency: f64,
}

/// `(1-l1-l2)(att + att_s) + l1 (ctc + ctc_s) + l2 cons`.
pub fn joint_loss(terms: &LossTerms, w: &LossWeights) -> f64 {
    let att = 1.0 - w.lambda1 - w.lambda2;
    att * (terms.att_real + terms.att_synth)
        + w.lambda1 * (terms.ctc_real + terms.ctc_synth)
        + w.lambda2 * terms.consistency
}
