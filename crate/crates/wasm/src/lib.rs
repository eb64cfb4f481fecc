//! Browser demo for cskit.
//!
//! Each operation is a plain function returning JSON so it can be tested
//! natively; the `js` module wraps them for wasm-bindgen.

use cskit::cstext::{self, Lang, Token};
use cskit::dsp::{self, FbankConfig, FeatureMatrix, MaskFill, SpecAugConfig, Waveform};
use cskit::rover::{self, VoteWeights};
use cskit::scoring::{self, EditOp};
use cskit::synth::{self, SynthConfig};
use cskit::Result;
use serde_json::{json, Value};

const DEMO_RATE: u32 = 16000;

fn token_json(t: Option<&Token>) -> Value {
    match t {
        Some(t) => json!({ "text": t.surface(), "lang": t.lang().as_str() }),
        None => Value::Null,
    }
}

fn rate_json(r: Option<f64>) -> Value {
    r.map_or(Value::Null, |r| json!(r))
}

/// Align two sentences and report the edit operations and error rates.
pub fn align_texts(reference: &str, hypothesis: &str) -> Result<String> {
    let r = cstext::units(reference);
    let h = cstext::units(hypothesis);
    let alignment = scoring::align(&r, &h);
    let report = scoring::score_utterance(&r, &h);
    let ops: Vec<Value> = alignment
        .ops
        .iter()
        .map(|op| {
            let kind = match op {
                EditOp::Match { .. } => "match",
                EditOp::Substitute { .. } => "sub",
                EditOp::Delete { .. } => "del",
                EditOp::Insert { .. } => "ins",
            };
            json!({
                "kind": kind,
                "ref": token_json(op.ref_token()),
                "hyp": token_json(op.hyp_token()),
            })
        })
        .collect();
    let per_lang: Vec<Value> = Lang::ALL
        .iter()
        .map(|&l| {
            let c = report.lang(l);
            json!({
                "lang": l.as_str(),
                "n_ref": c.n_ref,
                "errors": c.errors(),
                "rate": rate_json(c.rate()),
            })
        })
        .collect();
    Ok(json!({
        "ops": ops,
        "n_ref": report.n_ref(),
        "sub": report.substitutions(),
        "del": report.deletions(),
        "ins": report.insertions(),
        "mer": rate_json(report.mer()),
        "per_lang": per_lang,
    })
    .to_string())
}

/// Combine hypotheses (one per line) and show every slot of the network.
pub fn rover_vote(systems: &str, english_weight: f64, null_weight: f64) -> Result<String> {
    let hyps = systems
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(cstext::units)
        .collect::<Vec<_>>();
    if hyps.is_empty() {
        return Err(cskit::Error::InvalidArgument(
            "enter at least one hypothesis".into(),
        ));
    }
    let w = VoteWeights::new(1.0, english_weight, 1.0, null_weight)?;
    let wtn = rover::wtn_build(&hyps)?;
    let slots: Vec<Value> = wtn
        .slots
        .iter()
        .map(|slot| {
            let winner = rover::slot_winner(slot, &w);
            let votes: Vec<Value> = slot
                .votes
                .iter()
                .map(|v| {
                    json!({
                        "token": token_json(v.candidate.as_ref()),
                        "count": v.count,
                        "score": v.count as f64 * w.weight(v.candidate.as_ref()),
                        "winner": winner.is_some_and(|x| std::ptr::eq(x, v)),
                    })
                })
                .collect();
            json!({ "votes": votes })
        })
        .collect();
    let fused = rover::vote(&wtn, &w);
    Ok(json!({ "slots": slots, "fused": cstext::detokenize(&fused) }).to_string())
}

/// MER of the fused output over a range of English weights on a synthetic
/// eight-system corpus.
pub fn rover_sweep(seed: u64, utterances: usize, lo: f64, hi: f64, step: f64) -> Result<String> {
    if step.is_nan() || step <= 0.0 || hi.is_nan() || lo.is_nan() || hi < lo {
        return Err(cskit::Error::InvalidArgument(
            "need step > 0 and hi >= lo".into(),
        ));
    }
    let corpus = synth::generate(&SynthConfig {
        utterances,
        seed,
        ..Default::default()
    });
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let weights: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
    let sw = rover::sweep(
        &corpus.systems,
        &corpus.refs,
        &weights,
        &VoteWeights::default(),
    )?;
    let singles = corpus
        .systems
        .iter()
        .map(|s| scoring::score_corpus(&corpus.refs, s).map(|r| rate_json(r.mer())))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Value> = sw
        .rows
        .iter()
        .map(|r| json!({ "weight": r.english_weight, "mer": rate_json(r.report.mer()) }))
        .collect();
    Ok(json!({ "rows": rows, "best": sw.best_weight(), "systems": singles }).to_string())
}

/// A one-second voiced test signal: a gliding harmonic tone with a
/// syllable-like amplitude envelope and a little noise.
pub fn demo_signal(seed: u64) -> Waveform {
    let n = DEMO_RATE as usize;
    let mut state = seed ^ 0x9e37_79b9_7f4a_7c15;
    let mut noise = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut phase = 0.0f64;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / DEMO_RATE as f64;
            let f0 = 120.0 + 60.0 * (2.0 * std::f64::consts::PI * 1.5 * t).sin();
            phase += 2.0 * std::f64::consts::PI * f0 / DEMO_RATE as f64;
            let env = (std::f64::consts::PI * 4.0 * t).sin().abs();
            let voiced: f64 = (1..=12).map(|k| (k as f64 * phase).sin() / k as f64).sum();
            0.25 * env * voiced + 0.01 * noise()
        })
        .collect();
    Waveform {
        samples,
        sample_rate: DEMO_RATE,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoAugment {
    pub speed: f64,
    pub freq_masks: usize,
    pub max_freq_width: usize,
    pub time_masks: usize,
    pub max_time_width: usize,
    pub warp_window: usize,
    pub mean_fill: bool,
    pub seed: u64,
}

fn matrix_json(m: &FeatureMatrix) -> Value {
    json!({ "frames": m.frames(), "dims": m.dims(), "values": m.values() })
}

/// Speed-perturb the demo signal, extract 80-dim fbank and apply SpecAugment.
pub fn augment_demo(cfg: &DemoAugment) -> Result<String> {
    let wave = dsp::speed_perturb(&demo_signal(cfg.seed), cfg.speed)?;
    let clean = dsp::fbank(&wave, &FbankConfig::default())?;
    let (aug, trace) = dsp::spec_augment_traced(
        &clean,
        &SpecAugConfig {
            n_freq_masks: cfg.freq_masks,
            max_freq_width: cfg.max_freq_width,
            n_time_masks: cfg.time_masks,
            max_time_width: cfg.max_time_width,
            warp_window: cfg.warp_window,
            seed: cfg.seed,
            fill: if cfg.mean_fill {
                MaskFill::Mean
            } else {
                MaskFill::Zero
            },
        },
    )?;
    let ranges = |rs: &[std::ops::Range<usize>]| -> Vec<[usize; 2]> {
        rs.iter().map(|r| [r.start, r.end]).collect()
    };
    Ok(json!({
        "samples": wave.len(),
        "clean": matrix_json(&clean),
        "augmented": matrix_json(&aug),
        "warp": trace.warp.map(|(a, b)| [a, b]),
        "freq_masks": ranges(&trace.freq_masks),
        "time_masks": ranges(&trace.time_masks),
    })
    .to_string())
}

#[cfg(target_arch = "wasm32")]
mod js {
    use wasm_bindgen::prelude::*;

    fn err(e: cskit::Error) -> JsError {
        JsError::new(&e.to_string())
    }

    #[wasm_bindgen(js_name = alignTexts)]
    pub fn align_texts(reference: &str, hypothesis: &str) -> Result<String, JsError> {
        super::align_texts(reference, hypothesis).map_err(err)
    }

    #[wasm_bindgen(js_name = roverVote)]
    pub fn rover_vote(
        systems: &str,
        english_weight: f64,
        null_weight: f64,
    ) -> Result<String, JsError> {
        super::rover_vote(systems, english_weight, null_weight).map_err(err)
    }

    #[wasm_bindgen(js_name = roverSweep)]
    pub fn rover_sweep(
        seed: u32,
        utterances: u32,
        lo: f64,
        hi: f64,
        step: f64,
    ) -> Result<String, JsError> {
        super::rover_sweep(seed.into(), utterances as usize, lo, hi, step).map_err(err)
    }

    #[allow(clippy::too_many_arguments)]
    #[wasm_bindgen(js_name = augmentDemo)]
    pub fn augment_demo(
        speed: f64,
        freq_masks: u32,
        max_freq_width: u32,
        time_masks: u32,
        max_time_width: u32,
        warp_window: u32,
        mean_fill: bool,
        seed: u32,
    ) -> Result<String, JsError> {
        super::augment_demo(&super::DemoAugment {
            speed,
            freq_masks: freq_masks as usize,
            max_freq_width: max_freq_width as usize,
            time_masks: time_masks as usize,
            max_time_width: max_time_width as usize,
            warp_window: warp_window as usize,
            mean_fill,
            seed: seed.into(),
        })
        .map_err(err)
    }
}
