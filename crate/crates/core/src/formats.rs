//! Text file formats.
//!
//! | format | line layout |
//! |---|---|
//! | transcript | `<utt-id> <text>` |
//! | n-best | `utt_id\trank\tam_logp\tlm_logp\tilm_logp\ttext`, empty score = absent |
//! | dialogue map | `utt_id\tdialogue_id` |
//! | feature matrix | header `utt_id T F`, then `T` lines of `F` space-separated values |
//!
//! Input may use CRLF line endings; output always uses LF. Parsers reject
//! malformed lines with a line-numbered error instead of guessing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use indexmap::map::Entry;
use indexmap::IndexMap;

use crate::cstext;
use crate::dsp::FeatureMatrix;
use crate::rescore::NBestEntry;
use crate::{Error, Result, TokenizedCorpus};

/// Utterance id -> raw text, in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub utterances: IndexMap<String, String>,
    pub source: Option<PathBuf>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    /// Normalizes and tokenizes every utterance.
    pub fn tokenized(&self) -> TokenizedCorpus {
        self.utterances
            .iter()
            .map(|(id, text)| (id.clone(), cstext::units(text)))
            .collect()
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Non-blank lines with their 1-based numbers, CR stripped.
fn lines(s: &str) -> impl Iterator<Item = (usize, &str)> {
    s.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_err(origin: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        origin: origin.to_string(),
        line,
        msg: msg.into(),
    }
}

pub fn read_transcripts(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let mut c = parse_transcripts(&read_file(path)?, &path.display().to_string())?;
    c.source = Some(path.to_path_buf());
    Ok(c)
}

/// Parses transcript text. `origin` labels errors. A line holding only an
/// id is an utterance with empty text.
pub fn parse_transcripts(s: &str, origin: &str) -> Result<Corpus> {
    let mut utterances = IndexMap::new();
    let mut seen: IndexMap<String, usize> = IndexMap::new();
    for (no, line) in lines(s) {
        let line = line.trim_start();
        let (id, text) = match line.find(char::is_whitespace) {
            Some(i) => (&line[..i], line[i..].trim_start()),
            None => (line, ""),
        };
        match seen.entry(id.to_string()) {
            Entry::Occupied(e) => {
                return Err(Error::DuplicateId {
                    origin: origin.to_string(),
                    id: id.to_string(),
                    first: *e.get(),
                    second: no,
                })
            }
            Entry::Vacant(e) => {
                e.insert(no);
            }
        }
        utterances.insert(id.to_string(), text.to_string());
    }
    Ok(Corpus {
        utterances,
        source: None,
    })
}

pub fn format_transcripts<'a, I, S>(items: I) -> String
where
    I: IntoIterator<Item = (&'a String, S)>,
    S: AsRef<str>,
{
    let mut out = String::new();
    for (id, text) in items {
        let text = text.as_ref();
        if text.is_empty() {
            let _ = writeln!(out, "{id}");
        } else {
            let _ = writeln!(out, "{id} {text}");
        }
    }
    out
}

pub fn write_transcripts(path: impl AsRef<Path>, corpus: &Corpus) -> Result<()> {
    write_file(path.as_ref(), &format_transcripts(&corpus.utterances))
}

/// Renders tokenized utterances with [`cstext::detokenize`].
pub fn format_tokenized(c: &TokenizedCorpus) -> String {
    format_transcripts(c.iter().map(|(id, t)| (id, cstext::detokenize(t))))
}

pub type NBestLists = IndexMap<String, Vec<NBestEntry>>;

pub fn read_nbest(path: impl AsRef<Path>) -> Result<NBestLists> {
    let path = path.as_ref();
    parse_nbest(&read_file(path)?, &path.display().to_string())
}

fn parse_score(field: &str, name: &str, origin: &str, no: usize) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(parse_err(
            origin,
            no,
            format!("{name} field {field:?} is not a finite number"),
        )),
    }
}

/// Entries are grouped per utterance in order of first appearance; within
/// an utterance they keep file order. Ranks must be unique per utterance.
pub fn parse_nbest(s: &str, origin: &str) -> Result<NBestLists> {
    let mut out: NBestLists = IndexMap::new();
    for (no, line) in lines(s) {
        let fields: Vec<&str> = line.splitn(6, '\t').collect();
        let [utt, rank, am, lm, ilm, text] = fields[..] else {
            return Err(parse_err(
                origin,
                no,
                format!("expected 6 tab-separated fields, got {}", fields.len()),
            ));
        };
        if utt.is_empty() || utt.contains(char::is_whitespace) {
            return Err(parse_err(origin, no, format!("bad utterance id {utt:?}")));
        }
        let rank: u32 = rank.parse().ok().filter(|&r| r >= 1).ok_or_else(|| {
            parse_err(origin, no, format!("rank {rank:?} is not an integer >= 1"))
        })?;
        let am_logp = parse_score(am, "am_logp", origin, no)?
            .ok_or_else(|| parse_err(origin, no, "am_logp is required"))?;
        let entry = NBestEntry {
            utt_id: utt.to_string(),
            rank,
            text: text.to_string(),
            am_logp,
            lm_logp: parse_score(lm, "lm_logp", origin, no)?,
            ilm_logp: parse_score(ilm, "ilm_logp", origin, no)?,
        };
        let list = out.entry(utt.to_string()).or_default();
        if list.iter().any(|e| e.rank == rank) {
            return Err(parse_err(
                origin,
                no,
                format!("duplicate rank {rank} for {utt:?}"),
            ));
        }
        list.push(entry);
    }
    Ok(out)
}

pub fn format_nbest(lists: &NBestLists) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::new();
    for e in lists.values().flatten() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            e.utt_id,
            e.rank,
            e.am_logp,
            opt(e.lm_logp),
            opt(e.ilm_logp),
            e.text
        );
    }
    out
}

/// Utterance id -> dialogue id.
pub fn read_dialogue_map(path: impl AsRef<Path>) -> Result<IndexMap<String, String>> {
    let path = path.as_ref();
    parse_dialogue_map(&read_file(path)?, &path.display().to_string())
}

pub fn parse_dialogue_map(s: &str, origin: &str) -> Result<IndexMap<String, String>> {
    let mut out = IndexMap::new();
    let mut seen: IndexMap<String, usize> = IndexMap::new();
    for (no, line) in lines(s) {
        let Some((utt, dlg)) = line.split_once('\t') else {
            return Err(parse_err(origin, no, "expected utt_id<TAB>dialogue_id"));
        };
        if utt.is_empty() || dlg.is_empty() || dlg.contains('\t') {
            return Err(parse_err(origin, no, "expected utt_id<TAB>dialogue_id"));
        }
        if let Some(&first) = seen.get(utt) {
            return Err(Error::DuplicateId {
                origin: origin.to_string(),
                id: utt.to_string(),
                first,
                second: no,
            });
        }
        seen.insert(utt.to_string(), no);
        out.insert(utt.to_string(), dlg.to_string());
    }
    Ok(out)
}

pub fn format_dialogue_map(map: &IndexMap<String, String>) -> String {
    map.iter().map(|(u, d)| format!("{u}\t{d}\n")).collect()
}

/// Named feature matrices, in file order.
pub type FeatureSet = Vec<(String, FeatureMatrix)>;

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureSet> {
    let path = path.as_ref();
    parse_features(&read_file(path)?, &path.display().to_string())
}

pub fn parse_features(s: &str, origin: &str) -> Result<FeatureSet> {
    let mut out = FeatureSet::new();
    let mut it = lines(s);
    let mut ids: IndexMap<String, usize> = IndexMap::new();
    while let Some((no, header)) = it.next() {
        let h: Vec<&str> = header.split_whitespace().collect();
        let [id, t, f] = h[..] else {
            return Err(parse_err(origin, no, "expected header `utt_id T F`"));
        };
        let dim = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| parse_err(origin, no, format!("bad dimension {v:?}")))
        };
        let (frames, dims) = (dim(t)?, dim(f)?);
        if let Some(&first) = ids.get(id) {
            return Err(Error::DuplicateId {
                origin: origin.to_string(),
                id: id.to_string(),
                first,
                second: no,
            });
        }
        ids.insert(id.to_string(), no);
        let mut values = Vec::with_capacity(frames * dims);
        for r in 0..frames {
            let (rno, row) = it.next().ok_or_else(|| {
                parse_err(
                    origin,
                    no,
                    format!("{id}: expected {frames} rows, found {r}"),
                )
            })?;
            let before = values.len();
            for tok in row.split_whitespace() {
                let v: f32 = tok
                    .parse()
                    .ok()
                    .filter(|v: &f32| v.is_finite())
                    .ok_or_else(|| parse_err(origin, rno, format!("bad value {tok:?}")))?;
                values.push(v);
            }
            if values.len() - before != dims {
                return Err(parse_err(
                    origin,
                    rno,
                    format!("expected {dims} values, got {}", values.len() - before),
                ));
            }
        }
        out.push((id.to_string(), FeatureMatrix::new(frames, dims, values)?));
    }
    Ok(out)
}

/// Values use the shortest decimal that reads back to the same `f32`
/// (never more than 9 significant digits).
pub fn format_features(set: &[(String, FeatureMatrix)]) -> String {
    let mut out = String::new();
    for (id, m) in set {
        let _ = writeln!(out, "{id} {} {}", m.frames(), m.dims());
        for t in 0..m.frames() {
            let row = m.row(t);
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_features(path: impl AsRef<Path>, set: &[(String, FeatureMatrix)]) -> Result<()> {
    write_file(path.as_ref(), &format_features(set))
}
