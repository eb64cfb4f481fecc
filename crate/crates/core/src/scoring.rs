//! Levenshtein alignment and mix error rate (MER) reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::AddAssign;

use crate::cstext::{Lang, Token};
use crate::{Error, Result, TokenizedCorpus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EditKind {
    Match,
    Substitute,
    Delete,
    Insert,
}

/// One column of an alignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EditOp {
    Match { reference: Token, hypothesis: Token },
    Substitute { reference: Token, hypothesis: Token },
    Delete { reference: Token },
    Insert { hypothesis: Token },
}

impl EditOp {
    pub fn kind(&self) -> EditKind {
        match self {
            EditOp::Match { .. } => EditKind::Match,
            EditOp::Substitute { .. } => EditKind::Substitute,
            EditOp::Delete { .. } => EditKind::Delete,
            EditOp::Insert { .. } => EditKind::Insert,
        }
    }

    pub fn ref_token(&self) -> Option<&Token> {
        match self {
            EditOp::Match { reference, .. }
            | EditOp::Substitute { reference, .. }
            | EditOp::Delete { reference } => Some(reference),
            EditOp::Insert { .. } => None,
        }
    }

    pub fn hyp_token(&self) -> Option<&Token> {
        match self {
            EditOp::Match { hypothesis, .. }
            | EditOp::Substitute { hypothesis, .. }
            | EditOp::Insert { hypothesis } => Some(hypothesis),
            EditOp::Delete { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alignment {
    pub ops: Vec<EditOp>,
    pub cost: usize,
}

/// Minimum unit-cost edit alignment of `hyp` against `reference`.
///
/// Among alignments of minimum cost the one with the fewest insertions plus
/// deletions is chosen, which fixes the S/D/I split and makes it symmetric
/// when reference and hypothesis are swapped. Remaining ties are broken in
/// the backtrace (run from the end of both sequences) by preferring the
/// diagonal (match/substitute), then deletion, then insertion, so the
/// alignment is reproducible.
pub fn align(reference: &[Token], hyp: &[Token]) -> Alignment {
    // (cost, indels), compared lexicographically
    type Cell = (usize, usize);
    let (n, m) = (reference.len(), hyp.len());
    let w = m + 1;
    let mut d: Vec<Cell> = vec![(0, 0); (n + 1) * w];
    for (j, cell) in d.iter_mut().take(w).enumerate() {
        *cell = (j, j);
    }
    let step = |c: Cell, cost: usize, indel: usize| (c.0 + cost, c.1 + indel);
    for i in 1..=n {
        d[i * w] = (i, i);
        for j in 1..=m {
            let sub = usize::from(reference[i - 1].surface() != hyp[j - 1].surface());
            let diag = step(d[(i - 1) * w + j - 1], sub, 0);
            let del = step(d[(i - 1) * w + j], 1, 1);
            let ins = step(d[i * w + j - 1], 1, 1);
            d[i * w + j] = diag.min(del).min(ins);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let same = reference[i - 1].surface() == hyp[j - 1].surface();
            if here == step(d[(i - 1) * w + j - 1], usize::from(!same), 0) {
                let (r, h) = (reference[i - 1].clone(), hyp[j - 1].clone());
                ops.push(if same {
                    EditOp::Match {
                        reference: r,
                        hypothesis: h,
                    }
                } else {
                    EditOp::Substitute {
                        reference: r,
                        hypothesis: h,
                    }
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == step(d[(i - 1) * w + j], 1, 1) {
            ops.push(EditOp::Delete {
                reference: reference[i - 1].clone(),
            });
            i -= 1;
        } else {
            ops.push(EditOp::Insert {
                hypothesis: hyp[j - 1].clone(),
            });
            j -= 1;
        }
    }
    ops.reverse();
    Alignment {
        ops,
        cost: d[n * w + m].0,
    }
}

/// Reference size and error counts for one language class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LangCounts {
    pub n_ref: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
}

impl LangCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    /// Error rate in percent; `None` when there are no reference tokens.
    pub fn rate(&self) -> Option<f64> {
        (self.n_ref > 0).then(|| 100.0 * self.errors() as f64 / self.n_ref as f64)
    }
}

impl AddAssign for LangCounts {
    fn add_assign(&mut self, o: Self) {
        self.n_ref += o.n_ref;
        self.substitutions += o.substitutions;
        self.deletions += o.deletions;
        self.insertions += o.insertions;
    }
}

/// Counts for a corpus or an utterance. Reports add, so a corpus report is
/// the sum of its utterance reports.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScoreReport {
    pub utterances: usize,
    pub totals: LangCounts,
    /// Deletions and substitutions are keyed by the reference token's
    /// language, insertions by the hypothesis token's.
    pub per_lang: BTreeMap<Lang, LangCounts>,
    /// `(reference lang, hypothesis lang)` -> substitution count.
    pub cross_sub: BTreeMap<(Lang, Lang), usize>,
}

impl ScoreReport {
    pub fn n_ref(&self) -> usize {
        self.totals.n_ref
    }

    pub fn substitutions(&self) -> usize {
        self.totals.substitutions
    }

    pub fn deletions(&self) -> usize {
        self.totals.deletions
    }

    pub fn insertions(&self) -> usize {
        self.totals.insertions
    }

    /// `100 * (S + D + I) / n_ref`; `None` (undefined) when `n_ref == 0`.
    pub fn mer(&self) -> Option<f64> {
        self.totals.rate()
    }

    pub fn lang(&self, lang: Lang) -> LangCounts {
        self.per_lang.get(&lang).copied().unwrap_or_default()
    }

    pub fn cross(&self, reference: Lang, hyp: Lang) -> usize {
        self.cross_sub.get(&(reference, hyp)).copied().unwrap_or(0)
    }

    /// Machine-readable `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let t = &self.totals;
        let _ = writeln!(s, "utterances={}", self.utterances);
        let _ = writeln!(s, "n_ref={}", t.n_ref);
        let _ = writeln!(s, "substitutions={}", t.substitutions);
        let _ = writeln!(s, "deletions={}", t.deletions);
        let _ = writeln!(s, "insertions={}", t.insertions);
        let _ = writeln!(s, "mer={}", fmt_rate(self.mer()));
        for lang in Lang::ALL {
            let c = self.lang(lang);
            let k = lang.as_str();
            let _ = writeln!(s, "{k}.n_ref={}", c.n_ref);
            let _ = writeln!(s, "{k}.substitutions={}", c.substitutions);
            let _ = writeln!(s, "{k}.deletions={}", c.deletions);
            let _ = writeln!(s, "{k}.insertions={}", c.insertions);
            let _ = writeln!(s, "{k}.error_rate={}", fmt_rate(c.rate()));
        }
        for r in Lang::ALL {
            for h in Lang::ALL {
                let _ = writeln!(s, "sub.{}.{}={}", r.as_str(), h.as_str(), self.cross(r, h));
            }
        }
        s
    }

    /// Human-readable summary with per-language and cross-language tables.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let t = &self.totals;
        let _ = writeln!(
            s,
            "MER {}  (S={} D={} I={} / N={}, {} utterances)",
            fmt_rate(self.mer()),
            t.substitutions,
            t.deletions,
            t.insertions,
            t.n_ref,
            self.utterances
        );
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<10} {:>8} {:>6} {:>6} {:>6} {:>8}",
            "lang", "N", "S", "D", "I", "ER%"
        );
        for lang in Lang::ALL {
            let c = self.lang(lang);
            let _ = writeln!(
                s,
                "{:<10} {:>8} {:>6} {:>6} {:>6} {:>8}",
                lang.as_str(),
                c.n_ref,
                c.substitutions,
                c.deletions,
                c.insertions,
                fmt_rate(c.rate())
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "substitutions (rows: reference, columns: hypothesis)");
        let _ = writeln!(
            s,
            "{:<10} {:>9} {:>9} {:>9}",
            "", "mandarin", "english", "other"
        );
        for r in Lang::ALL {
            let _ = writeln!(
                s,
                "{:<10} {:>9} {:>9} {:>9}",
                r.as_str(),
                self.cross(r, Lang::Mandarin),
                self.cross(r, Lang::English),
                self.cross(r, Lang::Other)
            );
        }
        s
    }
}

impl AddAssign<&ScoreReport> for ScoreReport {
    fn add_assign(&mut self, o: &ScoreReport) {
        self.utterances += o.utterances;
        self.totals += o.totals;
        for (k, v) in &o.per_lang {
            *self.per_lang.entry(*k).or_default() += *v;
        }
        for (k, v) in &o.cross_sub {
            *self.cross_sub.entry(*k).or_default() += v;
        }
    }
}

impl std::iter::Sum for ScoreReport {
    fn sum<I: Iterator<Item = ScoreReport>>(iter: I) -> Self {
        iter.fold(ScoreReport::default(), |mut acc, r| {
            acc += &r;
            acc
        })
    }
}

/// Two decimals, or `n/a` for an undefined rate.
pub fn fmt_rate(r: Option<f64>) -> String {
    match r {
        Some(v) => format!("{v:.2}"),
        None => "n/a".to_string(),
    }
}

/// Scores one utterance from its alignment.
pub fn score_utterance(reference: &[Token], hyp: &[Token]) -> ScoreReport {
    score_alignment(reference, &align(reference, hyp))
}

fn score_alignment(reference: &[Token], alignment: &Alignment) -> ScoreReport {
    let mut rep = ScoreReport {
        utterances: 1,
        ..Default::default()
    };
    for t in reference {
        rep.per_lang.entry(t.lang()).or_default().n_ref += 1;
        rep.totals.n_ref += 1;
    }
    for op in &alignment.ops {
        match op {
            EditOp::Match { .. } => {}
            EditOp::Substitute {
                reference,
                hypothesis,
            } => {
                rep.totals.substitutions += 1;
                rep.per_lang
                    .entry(reference.lang())
                    .or_default()
                    .substitutions += 1;
                *rep.cross_sub
                    .entry((reference.lang(), hypothesis.lang()))
                    .or_default() += 1;
            }
            EditOp::Delete { reference } => {
                rep.totals.deletions += 1;
                rep.per_lang.entry(reference.lang()).or_default().deletions += 1;
            }
            EditOp::Insert { hypothesis } => {
                rep.totals.insertions += 1;
                rep.per_lang
                    .entry(hypothesis.lang())
                    .or_default()
                    .insertions += 1;
            }
        }
    }
    rep
}

/// Scores a corpus. Reference utterances absent from `hyps` count as full
/// deletions; a hypothesis id with no reference is an error.
pub fn score_corpus(refs: &TokenizedCorpus, hyps: &TokenizedCorpus) -> Result<ScoreReport> {
    if let Some(id) = hyps.keys().find(|id| !refs.contains_key(*id)) {
        return Err(Error::UnknownUtterance(id.clone()));
    }
    let empty = Vec::new();
    let score =
        |(id, r): (&String, &Vec<Token>)| score_utterance(r, hyps.get(id).unwrap_or(&empty));

    #[cfg(feature = "parallel")]
    let total = {
        use rayon::prelude::*;
        let items: Vec<_> = refs.iter().collect();
        items
            .into_par_iter()
            .map(score)
            .reduce(ScoreReport::default, |mut a, b| {
                a += &b;
                a
            })
    };
    #[cfg(not(feature = "parallel"))]
    let total: ScoreReport = refs.iter().map(score).sum();

    Ok(total)
}
