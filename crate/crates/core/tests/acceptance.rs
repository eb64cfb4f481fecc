//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use cskit::cstext::{units, Lang, Token};
use cskit::dsp::{self, FbankConfig, FeatureMatrix, MaskFill, SpecAugConfig, Waveform};
use cskit::formats;
use cskit::losses::{self, LossTerms, LossWeights, PosteriorSeq};
use cskit::rescore::{self, FusionWeights, NBestEntry};
use cskit::rover::{self, VoteWeights};
use cskit::scoring::{self, fmt_rate, EditOp};
use cskit::synth::{self, SynthConfig};
use cskit::textaug::{self, Dialogue};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn edit_distance_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xED17);
    for case in 0..1000 {
        let r = random_tokens(&mut rng, 6);
        let h = random_tokens(&mut rng, 6);
        let a = scoring::align(&r, &h);
        let expect = brute_edit_distance(&surfaces(&r), &surfaces(&h));
        ensure!(
            a.cost == expect,
            "case {case}: align cost {} != brute {expect}",
            a.cost
        );
        let non_match = a
            .ops
            .iter()
            .filter(|o| !matches!(o, EditOp::Match { .. }))
            .count();
        ensure!(non_match == a.cost, "case {case}: cost != non-match ops");
        let ref_proj: Vec<_> = a
            .ops
            .iter()
            .filter_map(EditOp::ref_token)
            .cloned()
            .collect();
        let hyp_proj: Vec<_> = a
            .ops
            .iter()
            .filter_map(EditOp::hyp_token)
            .cloned()
            .collect();
        ensure!(
            ref_proj == r && hyp_proj == h,
            "case {case}: projection mismatch"
        );
    }
    let elapsed = start.elapsed();
    ensure!(
        elapsed < Duration::from_secs(10),
        "took {elapsed:?} (limit 10 s)"
    );
    Ok(format!("1000 pairs in {elapsed:.2?}"))
}

fn mer_worked_example() -> Outcome {
    let rep = scoring::score_utterance(&units("我爱CODING"), &units("我爱CODE"));
    let mer = fmt_rate(rep.mer());
    ensure!(mer == "33.33", "MER {mer}");
    ensure!(
        rep.substitutions() == 1 && rep.deletions() == 0 && rep.insertions() == 0,
        "counts S={} D={} I={}",
        rep.substitutions(),
        rep.deletions(),
        rep.insertions()
    );
    ensure!(
        rep.cross(Lang::English, Lang::English) == 1,
        "no E->E substitution"
    );
    Ok(format!("MER {mer}%, E->E substitutions = 1"))
}

fn ctc_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC7C);
    let mut done = 0;
    let mut worst = 0.0f64;
    while done < 200 {
        let frames = rng.random_range(1..=4);
        let vocab = rng.random_range(2..=3);
        let blank = rng.random_range(0..vocab);
        let n_labels = rng.random_range(0..=2);
        let labels: Vec<usize> = (0..n_labels)
            .map(|_| loop {
                let l = rng.random_range(0..vocab);
                if l != blank {
                    break l;
                }
            })
            .collect();
        if losses::ctc_min_frames(&labels) > frames {
            continue;
        }
        let p = random_posteriors(&mut rng, frames, vocab);
        let nll = losses::ctc_nll(&p, &labels, blank).map_err(|e| e.to_string())?;
        let brute = -brute_ctc_prob(&p, &labels, blank).ln();
        worst = worst.max((nll - brute).abs());
        ensure!(
            (nll - brute).abs() <= 1e-9,
            "T={frames} V={vocab} labels={labels:?}: {nll} vs {brute}"
        );
        done += 1;
    }
    let uniform = PosteriorSeq::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
    let v = losses::ctc_nll(&uniform, &[0], 1).map_err(|e| e.to_string())?;
    ensure!((v - 0.287682).abs() <= 1e-6, "uniform case {v}");
    Ok(format!(
        "200 instances, max |diff| {worst:.1e}; uniform case {v:.6}"
    ))
}

fn kl_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4B4C);
    let mut min = f64::INFINITY;
    for i in 0..1000 {
        let frames = rng.random_range(1..=6);
        let vocab = rng.random_range(2..=8);
        let p = random_posteriors(&mut rng, frames, vocab);
        let q = random_posteriors(&mut rng, frames, vocab);
        let kl = losses::kl_consistency(&p, &q).map_err(|e| e.to_string())?;
        ensure!(kl >= 0.0, "pair {i}: KL {kl} < 0");
        min = min.min(kl);
        let same = losses::kl_consistency(&p, &p).map_err(|e| e.to_string())?;
        ensure!(same.abs() <= 1e-12, "pair {i}: KL(p||p) = {same}");
    }
    let p = PosteriorSeq::from_rows(&[vec![0.5, 0.5]]).unwrap();
    let q = PosteriorSeq::from_rows(&[vec![0.25, 0.75]]).unwrap();
    let v = losses::kl_consistency(&p, &q).map_err(|e| e.to_string())?;
    ensure!((v - 0.143841).abs() <= 1e-6, "hand case {v}");
    Ok(format!("1000 pairs, min KL {min:.3e}; hand case {v:.6}"))
}

fn joint_loss_formula() -> Outcome {
    let terms = LossTerms {
        att_real: 2.0,
        att_synth: 2.2,
        ctc_real: 3.0,
        ctc_synth: 3.4,
        consistency: 0.5,
    };
    let w = LossWeights::new(0.3, 0.1).map_err(|e| e.to_string())?;
    let j = losses::joint_loss(&terms, &w);
    ensure!((j - 4.49).abs() <= 1e-12, "joint {j}");

    let coeffs = [0.6, 0.6, 0.3, 0.3, 0.1];
    let h = 1e-4;
    let bump = |k: usize| {
        let mut t = terms;
        match k {
            0 => t.att_real += h,
            1 => t.att_synth += h,
            2 => t.ctc_real += h,
            3 => t.ctc_synth += h,
            _ => t.consistency += h,
        }
        t
    };
    for (k, c) in coeffs.iter().enumerate() {
        let plus = losses::joint_loss(&bump(k), &w);
        let slope = (plus - j) / h;
        ensure!(
            (slope - c).abs() <= 1e-8,
            "argument {k}: slope {slope} vs {c}"
        );
        // linearity: same slope away from the base point
        let far = {
            let mut t = terms;
            t.att_real += 7.0;
            t.consistency -= 3.0;
            t
        };
        let far_j = losses::joint_loss(&far, &w);
        let far_bumped = {
            let mut t = bump(k);
            t.att_real += 7.0;
            t.consistency -= 3.0;
            losses::joint_loss(&t, &w)
        };
        let far_slope = (far_bumped - far_j) / h;
        ensure!(
            (far_slope - c).abs() <= 1e-8,
            "argument {k}: slope not constant"
        );
    }
    Ok(format!("joint {j}; finite-difference slopes {coeffs:?}"))
}

/// Random multi-system instance: a base sequence and noisy copies.
fn random_systems(rng: &mut ChaCha8Rng) -> Vec<Vec<Token>> {
    let base = random_tokens(rng, 10);
    let k = rng.random_range(1..=5);
    (0..k)
        .map(|_| {
            let mut out = Vec::new();
            for t in &base {
                match rng.random_range(0..10) {
                    0 => {}
                    1 => out.extend(random_tokens(rng, 1)),
                    2 => {
                        out.push(t.clone());
                        out.extend(random_tokens(rng, 1));
                    }
                    _ => out.push(t.clone()),
                }
            }
            out.truncate(10);
            out
        })
        .collect()
}

fn random_weights(rng: &mut ChaCha8Rng) -> VoteWeights {
    let mut w = || rng.random_range(0.1..6.0);
    VoteWeights::new(w(), w(), w(), w()).unwrap()
}

fn rover_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4057);
    let mut unanimous_slots = 0usize;
    for case in 0..500 {
        let hyps = random_systems(&mut rng);
        let w = random_weights(&mut rng);

        // idempotence
        let k = hyps.len().max(2);
        let same = vec![hyps[0].clone(); k];
        let wtn = rover::wtn_build(&same).map_err(|e| e.to_string())?;
        ensure!(
            rover::vote(&wtn, &w) == hyps[0],
            "case {case}: identical systems not reproduced"
        );

        let wtn = rover::wtn_build(&hyps).map_err(|e| e.to_string())?;
        ensure!(wtn.n_systems == hyps.len(), "case {case}: n_systems");
        for (i, s) in wtn.slots.iter().enumerate() {
            ensure!(
                s.total() == wtn.n_systems,
                "case {case}: slot {i} has {} votes for {} systems",
                s.total(),
                wtn.n_systems
            );
            ensure!(!s.votes.is_empty(), "case {case}: empty slot");
            // unanimity
            if let [only] = s.votes.as_slice() {
                unanimous_slots += 1;
                let win = rover::slot_winner(s, &w).unwrap();
                ensure!(win == only, "case {case}: unanimous slot {i} lost");
            }
        }
        // scale invariance
        let c = rng.random_range(0.01..100.0);
        ensure!(
            rover::vote(&wtn, &w) == rover::vote(&wtn, &w.scaled(c)),
            "case {case}: scaling weights by {c} changed the vote"
        );
    }
    Ok(format!(
        "500 instances, {unanimous_slots} unanimous slots checked"
    ))
}

fn en_weight_sweep() -> Outcome {
    let start = Instant::now();
    let corpus = synth::generate(&SynthConfig::default());
    ensure!(corpus.systems.len() == 8, "expected 8 systems");
    let weights = [1.0, 2.0, 3.0, 4.0, 5.0];
    let sw = rover::sweep(
        &corpus.systems,
        &corpus.refs,
        &weights,
        &VoteWeights::default(),
    )
    .map_err(|e| e.to_string())?;
    let mer = |w: f64| {
        sw.rows
            .iter()
            .find(|r| r.english_weight == w)
            .and_then(|r| r.report.mer())
            .unwrap()
    };
    let (m1, m4) = (mer(1.0), mer(4.0));
    ensure!(
        m4 <= m1,
        "MER at EN weight 4 ({m4:.2}) > weight 1 ({m1:.2})"
    );
    ensure!(sw.best_weight() > 1.0, "argmin weight {}", sw.best_weight());
    let elapsed = start.elapsed();
    ensure!(
        elapsed < Duration::from_secs(30),
        "took {elapsed:?} (limit 30 s)"
    );
    let curve: Vec<String> = sw
        .rows
        .iter()
        .map(|r| format!("{}:{}", r.english_weight, fmt_rate(r.report.mer())))
        .collect();
    Ok(format!(
        "MER by EN weight [{}], argmin {} ({elapsed:.2?})",
        curve.join(" "),
        sw.best_weight()
    ))
}

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

fn rescoring() -> Outcome {
    let mut nb = IndexMap::new();
    nb.insert(
        "u".to_string(),
        vec![
            entry(1, -10.0, Some(-5.0), Some(-4.0)),
            entry(2, -10.5, Some(-3.0), Some(-2.0)),
        ],
    );
    let sf = FusionWeights::new(0.3, 0.0).unwrap();
    let win = rescore::rerank(&nb, &sf).map_err(|e| e.to_string())?;
    ensure!(
        win["u"].text == "h2",
        "shallow fusion picked {}",
        win["u"].text
    );
    let ilm = FusionWeights::new(0.3, 0.2).unwrap();
    let win = rescore::rerank(&nb, &ilm).map_err(|e| e.to_string())?;
    ensure!(
        win["u"].text == "h1",
        "ILM subtraction picked {}",
        win["u"].text
    );

    // lambda = 0 reduces to acoustic ranking on random n-best files
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x4E42);
    for f in 0..20 {
        let mut lists = formats::NBestLists::new();
        for u in 0..10 {
            let id = format!("f{f}u{u}");
            let n = rng.random_range(1..=8);
            let entries = (1..=n)
                .map(|r| NBestEntry {
                    utt_id: id.clone(),
                    rank: r,
                    text: format!("hyp {r}"),
                    // coarse grid so AM ties happen
                    am_logp: -(rng.random_range(0..20) as f64) / 2.0,
                    lm_logp: Some(-rng.random_range(0.0..30.0)),
                    ilm_logp: if rng.random_bool(0.5) {
                        Some(-rng.random_range(0.0..30.0))
                    } else {
                        None
                    },
                })
                .collect();
            lists.insert(id, entries);
        }
        let path = dir.path().join(format!("nbest{f}.tsv"));
        formats::write_file(&path, &formats::format_nbest(&lists)).map_err(|e| e.to_string())?;
        let back = formats::read_nbest(&path).map_err(|e| e.to_string())?;
        let zero = FusionWeights::new(0.0, 0.0).unwrap();
        let win = rescore::rerank(&back, &zero).map_err(|e| e.to_string())?;
        for (id, list) in &back {
            let best = list
                .iter()
                .max_by(|a, b| a.am_logp.total_cmp(&b.am_logp).then(b.rank.cmp(&a.rank)))
                .unwrap();
            ensure!(
                win[id].rank == best.rank,
                "{id}: picked rank {}",
                win[id].rank
            );
        }
    }
    Ok("h2 with shallow fusion (0.3), h1 with ILM subtraction (0.3/0.2); λ=0 = AM ranking on 20 files".into())
}

fn ramp(frames: usize, dims: usize) -> FeatureMatrix {
    let v = (0..frames * dims).map(|i| (i as f32).sin()).collect();
    FeatureMatrix::new(frames, dims, v).unwrap()
}

fn dsp_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD5);
    let samples: Vec<f64> = (0..16000).map(|_| rng.random_range(-0.5..0.5)).collect();
    let w = Waveform::new(samples, 16000).unwrap();
    let lens: Vec<usize> = [0.9, 1.0, 1.1]
        .iter()
        .map(|&f| dsp::speed_perturb(&w, f).map(|o| o.len()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure!(lens == [17777, 16000, 14545], "speed lengths {lens:?}");

    let t25 = dsp::fbank(&w, &FbankConfig::default()).map_err(|e| e.to_string())?;
    let cfg16 = FbankConfig {
        frame_len_ms: 16.0,
        frame_shift_ms: 8.0,
        n_mels: 80,
    };
    let t16 = dsp::fbank(&w, &cfg16).map_err(|e| e.to_string())?;
    ensure!(
        t25.frames() == 98 && t16.frames() == 124,
        "fbank frames {} / {}",
        t25.frames(),
        t16.frames()
    );

    let m = ramp(120, 80);
    let noop = SpecAugConfig {
        n_freq_masks: 2,
        max_freq_width: 0,
        n_time_masks: 2,
        max_time_width: 0,
        warp_window: 60,
        seed: 5,
        fill: MaskFill::Zero,
    };
    let out = dsp::spec_augment(&m, &noop).map_err(|e| e.to_string())?;
    let bit_identical = out
        .values()
        .iter()
        .zip(m.values())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    ensure!(bit_identical, "no-op SpecAugment changed values");

    let cfg = SpecAugConfig {
        seed: 1234,
        warp_window: 20,
        ..Default::default()
    };
    let a = dsp::spec_augment(&t25, &cfg).map_err(|e| e.to_string())?;
    let b = dsp::spec_augment(&t25, &cfg).map_err(|e| e.to_string())?;
    ensure!(a == b, "SpecAugment not deterministic");
    ensure!(a != t25, "default SpecAugment left input unchanged");
    Ok(format!(
        "speed {lens:?}; fbank 98/124 frames; no-op identity; fixed-seed determinism"
    ))
}

fn textaug_checks() -> Outcome {
    let d = Dialogue {
        dialogue_id: "dlg1".into(),
        sentences: vec![
            ("u1".into(), "我 想 喝 COFFEE".into()),
            ("u2".into(), "OK 没 问题".into()),
            ("u3".into(), "那 我们 走 吧".into()),
        ],
    };
    let a = textaug::make_pairs(&d, 7);
    ensure!(a.len() == 9, "{} lines", a.len());
    let pos = |s: &str| d.sentences.iter().position(|(_, t)| t == s);
    for line in &a[3..] {
        let ok = (0..3).any(|i| {
            (i + 1..3).any(|j| *line == format!("{} {}", d.sentences[i].1, d.sentences[j].1))
        });
        ensure!(ok, "line {line:?} is not a chronological pair");
    }
    ensure!(
        a[..3].iter().enumerate().all(|(i, s)| pos(s) == Some(i)),
        "originals out of order"
    );
    let b = textaug::make_pairs(&d, 7);
    ensure!(
        a.join("\n").as_bytes() == b.join("\n").as_bytes(),
        "not byte-identical"
    );
    Ok("9 lines, all pairs chronological, byte-identical at fixed seed".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("edit-distance oracle", edit_distance_oracle),
        ("MER worked example", mer_worked_example),
        ("CTC oracle", ctc_oracle),
        ("KL properties", kl_properties),
        ("joint-loss formula", joint_loss_formula),
        ("ROVER properties", rover_properties),
        ("EN weight sweep on synthetic corpus", en_weight_sweep),
        ("rescoring", rescoring),
        ("DSP", dsp_checks),
        ("textaug", textaug_checks),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome =
            catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| Err(format!("panicked: {p:?}")));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
