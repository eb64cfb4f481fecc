//! ROVER-style system combination.
//!
//! Hypotheses are aligned one after another into a word transition network
//! (WTN): an ordered list of slots, each holding competing candidates and
//! their vote counts. A NULL candidate records that a system emitted nothing
//! at that position. Voting then scores each candidate as
//! `votes * weight(language)` and keeps the best one per slot, which lets
//! English words outweigh Mandarin characters (or vice versa).
//!
//! There are no word confidences: every system votes with count 1.

use indexmap::IndexMap;

use crate::cstext::{Lang, Token};
use crate::scoring::{score_corpus, ScoreReport};
use crate::{Error, Result, TokenizedCorpus};

/// A candidate in a slot; `None` is the NULL (empty) candidate.
pub type Candidate = Option<Token>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vote {
    pub candidate: Candidate,
    pub count: usize,
    /// Index of the first system that proposed this candidate here.
    pub first_system: usize,
}

/// Candidates are kept in proposal order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Slot {
    pub votes: Vec<Vote>,
}

impl Slot {
    pub fn total(&self) -> usize {
        self.votes.iter().map(|v| v.count).sum()
    }

    pub fn count_of(&self, candidate: Option<&str>) -> usize {
        self.votes
            .iter()
            .find(|v| v.candidate.as_ref().map(Token::surface) == candidate)
            .map_or(0, |v| v.count)
    }

    fn has_surface(&self, surface: &str) -> bool {
        self.votes
            .iter()
            .any(|v| v.candidate.as_ref().is_some_and(|t| t.surface() == surface))
    }

    fn add(&mut self, candidate: Candidate, system: usize) {
        let key = candidate.as_ref().map(Token::surface);
        match self
            .votes
            .iter_mut()
            .find(|v| v.candidate.as_ref().map(Token::surface) == key)
        {
            Some(v) => v.count += 1,
            None => self.votes.push(Vote {
                candidate,
                count: 1,
                first_system: system,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WordTransitionNetwork {
    pub slots: Vec<Slot>,
    pub n_systems: usize,
}

/// Per-language voting weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoteWeights {
    pub mandarin: f64,
    pub english: f64,
    pub other: f64,
    pub null_weight: f64,
}

impl Default for VoteWeights {
    fn default() -> Self {
        VoteWeights {
            mandarin: 1.0,
            english: 1.0,
            other: 1.0,
            null_weight: 1.0,
        }
    }
}

impl VoteWeights {
    pub fn new(mandarin: f64, english: f64, other: f64, null_weight: f64) -> Result<Self> {
        let w = VoteWeights {
            mandarin,
            english,
            other,
            null_weight,
        };
        w.validate()?;
        Ok(w)
    }

    /// Mandarin, other and NULL at 1, English at `english`.
    pub fn english(english: f64) -> Result<Self> {
        Self::new(1.0, english, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mandarin", self.mandarin),
            ("english", self.english),
            ("other", self.other),
            ("null", self.null_weight),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} weight must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn weight(&self, candidate: Option<&Token>) -> f64 {
        match candidate.map(Token::lang) {
            None => self.null_weight,
            Some(Lang::Mandarin) => self.mandarin,
            Some(Lang::English) => self.english,
            Some(Lang::Other) => self.other,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        VoteWeights {
            mandarin: self.mandarin * c,
            english: self.english * c,
            other: self.other * c,
            null_weight: self.null_weight * c,
        }
    }
}

enum Step {
    Align,
    Skip,
    Insert,
}

/// Builds a WTN by aligning each hypothesis, in order, to the network built
/// so far.
///
/// Costs: 0 when the hypothesis token's surface is already a candidate in
/// the slot, 1 for a substitution, 1 for skipping a slot (the system votes
/// NULL there) and 1 for opening a new slot (earlier systems are back-filled
/// with NULL votes). Ties prefer align over skip over insert.
pub fn wtn_build(hyps: &[Vec<Token>]) -> Result<WordTransitionNetwork> {
    let (first, rest) = hyps
        .split_first()
        .ok_or_else(|| Error::invalid("wtn_build needs at least one hypothesis"))?;
    let mut wtn = WordTransitionNetwork {
        slots: first
            .iter()
            .map(|t| Slot {
                votes: vec![Vote {
                    candidate: Some(t.clone()),
                    count: 1,
                    first_system: 0,
                }],
            })
            .collect(),
        n_systems: 1,
    };
    for hyp in rest {
        add_hypothesis(&mut wtn, hyp);
    }
    Ok(wtn)
}

fn add_hypothesis(wtn: &mut WordTransitionNetwork, hyp: &[Token]) {
    let system = wtn.n_systems;
    let (n, m) = (wtn.slots.len(), hyp.len());
    let w = m + 1;
    let mut d = vec![0usize; (n + 1) * w];
    for (j, cell) in d.iter_mut().take(w).enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        d[i * w] = i;
        for j in 1..=m {
            let sub = usize::from(!wtn.slots[i - 1].has_surface(hyp[j - 1].surface()));
            d[i * w + j] = (d[(i - 1) * w + j - 1] + sub)
                .min(d[(i - 1) * w + j] + 1)
                .min(d[i * w + j - 1] + 1);
        }
    }

    let mut steps = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let sub = usize::from(!wtn.slots[i - 1].has_surface(hyp[j - 1].surface()));
            if here == d[(i - 1) * w + j - 1] + sub {
                steps.push(Step::Align);
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == d[(i - 1) * w + j] + 1 {
            steps.push(Step::Skip);
            i -= 1;
        } else {
            steps.push(Step::Insert);
            j -= 1;
        }
    }
    steps.reverse();

    let old = std::mem::take(&mut wtn.slots);
    let mut old = old.into_iter();
    let mut tokens = hyp.iter();
    let mut slots = Vec::with_capacity(n + m);
    for step in steps {
        match step {
            Step::Align => {
                let mut s = old.next().expect("slot");
                s.add(tokens.next().cloned(), system);
                slots.push(s);
            }
            Step::Skip => {
                let mut s = old.next().expect("slot");
                s.add(None, system);
                slots.push(s);
            }
            Step::Insert => {
                let mut votes = Vec::with_capacity(2);
                if system > 0 {
                    votes.push(Vote {
                        candidate: None,
                        count: system,
                        first_system: 0,
                    });
                }
                votes.push(Vote {
                    candidate: tokens.next().cloned(),
                    count: 1,
                    first_system: system,
                });
                slots.push(Slot { votes });
            }
        }
    }
    wtn.slots = slots;
    wtn.n_systems += 1;
}

/// Scores are compared with a relative tolerance so that rescaling every
/// weight by the same constant cannot flip an exact tie through rounding.
fn beats(a: f64, b: f64) -> Option<std::cmp::Ordering> {
    let tol = 1e-12 * a.abs().max(b.abs());
    if (a - b).abs() <= tol {
        None
    } else {
        a.partial_cmp(&b)
    }
}

/// Winning candidate of one slot. Ties go to a non-NULL candidate, then to
/// the earliest proposer, then to the lexicographically smaller surface.
pub fn slot_winner<'a>(slot: &'a Slot, w: &VoteWeights) -> Option<&'a Vote> {
    use std::cmp::Ordering::*;
    let mut best: Option<(&Vote, f64)> = None;
    for v in &slot.votes {
        let score = v.count as f64 * w.weight(v.candidate.as_ref());
        let Some((b, bs)) = best else {
            best = Some((v, score));
            continue;
        };
        let better = match beats(score, bs) {
            Some(Greater) => true,
            Some(_) => false,
            None => match (&v.candidate, &b.candidate) {
                (Some(_), None) => true,
                (None, Some(_)) => false,
                _ => match v.first_system.cmp(&b.first_system) {
                    Less => true,
                    Greater => false,
                    Equal => {
                        v.candidate.as_ref().map(Token::surface)
                            < b.candidate.as_ref().map(Token::surface)
                    }
                },
            },
        };
        if better {
            best = Some((v, score));
        }
    }
    best.map(|(v, _)| v)
}

/// Per-slot argmax of `votes * weight`, with NULL winners dropped.
pub fn vote(wtn: &WordTransitionNetwork, w: &VoteWeights) -> Vec<Token> {
    wtn.slots
        .iter()
        .filter_map(|s| slot_winner(s, w))
        .filter_map(|v| v.candidate.clone())
        .collect()
}

/// Fuses per-system corpora utterance by utterance.
///
/// Utterance ids are taken in order of first appearance across systems; a
/// system lacking an utterance contributes an empty hypothesis.
pub fn fuse(systems: &[TokenizedCorpus], w: &VoteWeights) -> Result<TokenizedCorpus> {
    if systems.len() < 2 {
        return Err(Error::invalid(format!(
            "fusion needs at least 2 systems, got {}",
            systems.len()
        )));
    }
    w.validate()?;
    let nets = build_networks(systems)?;
    Ok(vote_networks(&nets, w))
}

/// One WTN per utterance id, independent of the weights.
pub fn build_networks(
    systems: &[TokenizedCorpus],
) -> Result<IndexMap<String, WordTransitionNetwork>> {
    let mut ids: IndexMap<&str, ()> = IndexMap::new();
    for sys in systems {
        for id in sys.keys() {
            ids.insert(id.as_str(), ());
        }
    }
    let empty = Vec::new();
    let build = |id: &str| -> Result<(String, WordTransitionNetwork)> {
        let hyps: Vec<Vec<Token>> = systems
            .iter()
            .map(|s| s.get(id).unwrap_or(&empty).clone())
            .collect();
        Ok((id.to_string(), wtn_build(&hyps)?))
    };
    let ids: Vec<&str> = ids.into_keys().collect();

    #[cfg(feature = "parallel")]
    let built: Vec<_> = {
        use rayon::prelude::*;
        ids.into_par_iter().map(build).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let built: Vec<_> = ids.into_iter().map(build).collect::<Result<_>>()?;

    Ok(built.into_iter().collect())
}

pub fn vote_networks(
    nets: &IndexMap<String, WordTransitionNetwork>,
    w: &VoteWeights,
) -> TokenizedCorpus {
    nets.iter()
        .map(|(id, n)| (id.clone(), vote(n, w)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub english_weight: f64,
    pub report: ScoreReport,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// Index into `rows` of the lowest MER; the first such row on ties.
    pub best: usize,
}

impl Sweep {
    pub fn best_weight(&self) -> f64 {
        self.rows[self.best].english_weight
    }

    /// `weight<TAB>mer` lines.
    pub fn to_tsv(&self) -> String {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{}\t{}\n",
                    r.english_weight,
                    crate::scoring::fmt_rate(r.report.mer())
                )
            })
            .collect()
    }
}

/// Fuses and scores once per English weight, keeping the other weights of
/// `base`. Networks are built once and re-voted per weight.
pub fn sweep(
    systems: &[TokenizedCorpus],
    refs: &TokenizedCorpus,
    english_weights: &[f64],
    base: &VoteWeights,
) -> Result<Sweep> {
    if english_weights.is_empty() {
        return Err(Error::invalid("sweep needs at least one weight"));
    }
    if systems.len() < 2 {
        return Err(Error::invalid(format!(
            "fusion needs at least 2 systems, got {}",
            systems.len()
        )));
    }
    let nets = build_networks(systems)?;
    let mut rows = Vec::with_capacity(english_weights.len());
    for &ew in english_weights {
        let w = VoteWeights {
            english: ew,
            ..*base
        };
        w.validate()?;
        let fused = vote_networks(&nets, &w);
        rows.push(SweepRow {
            english_weight: ew,
            report: score_corpus(refs, &fused)?,
        });
    }
    let mer = |r: &SweepRow| r.report.mer().unwrap_or(f64::INFINITY);
    let best = (0..rows.len())
        .min_by(|&a, &b| mer(&rows[a]).total_cmp(&mer(&rows[b])).then(a.cmp(&b)))
        .expect("non-empty");
    Ok(Sweep { rows, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cstext::units;

    fn t(s: &str) -> Vec<Token> {
        units(s)
    }

    fn surfaces(ts: &[Token]) -> Vec<&str> {
        ts.iter().map(Token::surface).collect()
    }

    #[test]
    fn single_system() {
        let w = wtn_build(&[t("我 要 OK")]).unwrap();
        assert_eq!(w.slots.len(), 3);
        assert!(w.slots.iter().all(|s| s.total() == 1));
    }

    #[test]
    fn empty_list_is_error() {
        assert!(wtn_build(&[]).is_err());
    }

    #[test]
    fn three_system_example() {
        let w = wtn_build(&[t("打OK"), t("打好"), t("打好")]).unwrap();
        assert_eq!(w.slots.len(), 2);
        assert_eq!(w.slots[0].count_of(Some("打")), 3);
        assert_eq!(w.slots[1].count_of(Some("OK")), 1);
        assert_eq!(w.slots[1].count_of(Some("好")), 2);

        let out = vote(&w, &VoteWeights::english(1.0).unwrap());
        assert_eq!(surfaces(&out), ["打", "好"]);
        let out = vote(&w, &VoteWeights::english(4.0).unwrap());
        assert_eq!(surfaces(&out), ["打", "OK"]);
    }

    #[test]
    fn insertion_backfills_null() {
        let w = wtn_build(&[t("A"), t("A B")]).unwrap();
        assert_eq!(w.slots.len(), 2);
        assert_eq!(w.slots[0].count_of(Some("A")), 2);
        assert_eq!(w.slots[1].count_of(Some("B")), 1);
        assert_eq!(w.slots[1].count_of(None), 1);

        let w4 = VoteWeights::new(1.0, 4.0, 1.0, 1.0).unwrap();
        assert_eq!(surfaces(&vote(&w, &w4)), ["A", "B"]);
        // 1 vs 1 at equal weight: the non-NULL candidate wins the tie
        assert_eq!(surfaces(&vote(&w, &VoteWeights::default())), ["A", "B"]);
        // a heavier NULL drops the slot
        let wn = VoteWeights::new(1.0, 1.0, 1.0, 2.0).unwrap();
        assert_eq!(surfaces(&vote(&w, &wn)), ["A"]);
    }

    #[test]
    fn skip_adds_null_vote() {
        let w = wtn_build(&[t("我 爱 你"), t("我 你")]).unwrap();
        assert_eq!(w.slots.len(), 3);
        assert_eq!(w.slots[1].count_of(None), 1);
        assert!(w.slots.iter().all(|s| s.total() == 2));
    }

    #[test]
    fn tie_goes_to_earliest_system() {
        let w = wtn_build(&[t("你"), t("我")]).unwrap();
        assert_eq!(surfaces(&vote(&w, &VoteWeights::default())), ["你"]);
        let w = wtn_build(&[t("我"), t("你")]).unwrap();
        assert_eq!(surfaces(&vote(&w, &VoteWeights::default())), ["我"]);
    }

    #[test]
    fn fuse_requires_two_systems() {
        let mut a = TokenizedCorpus::new();
        a.insert("u".into(), t("好"));
        assert!(fuse(std::slice::from_ref(&a), &VoteWeights::default()).is_err());
        let out = fuse(&[a.clone(), a.clone()], &VoteWeights::default()).unwrap();
        assert_eq!(out, a);
    }

    #[test]
    fn fuse_missing_utterance_votes_null() {
        let mut a = TokenizedCorpus::new();
        a.insert("u1".into(), t("好"));
        let mut b = TokenizedCorpus::new();
        b.insert("u2".into(), t("OK"));
        let c = b.clone();
        let out = fuse(&[a, b, c], &VoteWeights::default()).unwrap();
        assert_eq!(out.keys().collect::<Vec<_>>(), ["u1", "u2"]);
        // u1: {好:1, NULL:2}
        assert!(out["u1"].is_empty());
        assert_eq!(surfaces(&out["u2"]), ["OK"]);
    }

    #[test]
    fn invalid_weights_rejected() {
        assert!(VoteWeights::new(1.0, 0.0, 1.0, 1.0).is_err());
        assert!(VoteWeights::new(1.0, f64::NAN, 1.0, 1.0).is_err());
        assert!(VoteWeights::new(-1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn sweep_single_and_identical() {
        let mut refs = TokenizedCorpus::new();
        refs.insert("u".into(), t("打OK"));
        let mut s = TokenizedCorpus::new();
        s.insert("u".into(), t("打好"));
        let systems = vec![s.clone(), s.clone(), s];
        let sw = sweep(&systems, &refs, &[1.0], &VoteWeights::default()).unwrap();
        assert_eq!(sw.rows.len(), 1);
        let sw = sweep(
            &systems,
            &refs,
            &[1.0, 2.0, 3.0, 4.0, 5.0],
            &VoteWeights::default(),
        )
        .unwrap();
        let mers: Vec<_> = sw.rows.iter().map(|r| r.report.mer()).collect();
        assert!(mers.windows(2).all(|p| p[0] == p[1]));
        assert_eq!(sw.best, 0);
        assert_eq!(sw.to_tsv().lines().count(), 5);
        assert_eq!(sw.to_tsv().lines().next(), Some("1\t50.00"));
    }
}
