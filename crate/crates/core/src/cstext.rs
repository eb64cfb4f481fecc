//! Transcript normalization and mixed Mandarin/English tokenization.
//!
//! Scoring units follow the usual mix-error-rate convention: every Mandarin
//! character is one unit and every English word is one unit. Anything else
//! (digits, other scripts) becomes an `Other` token.

use std::fmt;

use unicode_general_category::{get_general_category, GeneralCategory};

use crate::{Error, Result};

/// Script/language class of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lang {
    Mandarin,
    English,
    Other,
}

impl Lang {
    pub fn as_str(self) -> &'static str {
        match self {
            Lang::Mandarin => "mandarin",
            Lang::English => "english",
            Lang::Other => "other",
        }
    }

    pub fn short(self) -> char {
        match self {
            Lang::Mandarin => 'M',
            Lang::English => 'E',
            Lang::Other => 'O',
        }
    }

    pub const ALL: [Lang; 3] = [Lang::Mandarin, Lang::English, Lang::Other];
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A scoring unit: non-empty surface string plus its language class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token {
    surface: String,
    lang: Lang,
}

impl Token {
    /// Builds a token, checking the surface against the class invariants.
    pub fn new(surface: impl Into<String>, lang: Lang) -> Result<Self> {
        let surface = surface.into();
        let bad = |reason| Error::InvalidToken {
            surface: surface.clone(),
            reason,
        };
        if surface.is_empty() {
            return Err(bad("empty surface"));
        }
        if surface.chars().any(char::is_whitespace) {
            return Err(bad("surface contains whitespace"));
        }
        match lang {
            Lang::Mandarin => {
                let mut it = surface.chars();
                let c = it.next().unwrap();
                if it.next().is_some() || !is_mandarin_char(c) {
                    return Err(bad("mandarin token must be a single CJK ideograph"));
                }
            }
            Lang::English => {
                if !surface.chars().all(|c| c.is_ascii_uppercase() || c == '\'')
                    || !surface.chars().any(|c| c.is_ascii_uppercase())
                {
                    return Err(bad(
                        "english token must be uppercase ASCII letters/apostrophes",
                    ));
                }
            }
            Lang::Other => {}
        }
        Ok(Token { surface, lang })
    }

    /// Classifies a single whitespace-free unit. Lowercase ASCII is
    /// uppercased. Surfaces that mix scripts are rejected.
    pub fn classify(surface: &str) -> Result<Self> {
        let toks = tokenize(surface);
        match toks.as_slice() {
            [t] if t.surface.chars().count() == surface.chars().count() => Ok(t.clone()),
            _ => Err(Error::InvalidToken {
                surface: surface.to_string(),
                reason: "not a single token",
            }),
        }
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn lang(&self) -> Lang {
        self.lang
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.surface, self.lang.short())
    }
}

/// CJK Unified Ideographs and Extension A.
pub fn is_mandarin_char(c: char) -> bool {
    matches!(c, '\u{4E00}'..='\u{9FFF}' | '\u{3400}'..='\u{4DBF}')
}

fn is_english_char(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '\''
}

fn to_half_width(c: char) -> char {
    match c {
        '\u{FF01}'..='\u{FF5E}' => char::from_u32(c as u32 - 0xFEE0).unwrap_or(c),
        '\u{3000}' => ' ',
        // typographic apostrophe
        '\u{2019}' => '\'',
        _ => c,
    }
}

fn is_punct_or_symbol(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
            | MathSymbol
            | CurrencySymbol
            | ModifierSymbol
            | OtherSymbol
    )
}

/// Normalizes a raw transcript line.
///
/// Full-width ASCII forms become half-width, ASCII letters are uppercased,
/// punctuation and symbols are replaced by a space, and whitespace is
/// collapsed and trimmed. An apostrophe survives only between two ASCII
/// letters (`it's` -> `IT'S`).
pub fn normalize(text: &str) -> String {
    let chars: Vec<char> = text.chars().map(to_half_width).collect();
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for (i, &c) in chars.iter().enumerate() {
        let keep_apostrophe = c == '\''
            && i > 0
            && chars[i - 1].is_ascii_alphabetic()
            && chars.get(i + 1).is_some_and(|n| n.is_ascii_alphabetic());
        let is_sep = c.is_whitespace() || (!keep_apostrophe && is_punct_or_symbol(c));
        if is_sep {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(c.to_ascii_uppercase());
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RunKind {
    English,
    Digit,
    Other,
}

fn run_kind(c: char) -> RunKind {
    if is_english_char(c) {
        RunKind::English
    } else if c.is_ascii_digit() {
        RunKind::Digit
    } else {
        RunKind::Other
    }
}

/// Splits normalized text into scoring units.
///
/// Each CJK ideograph is one Mandarin token; a maximal run of ASCII letters
/// and apostrophes is one English token; digit runs and runs of any other
/// non-space characters are `Other` tokens. Script changes split tokens
/// even without whitespace.
pub fn tokenize(text: &str) -> Vec<crate::cstext::Token> {
    let mut out = Vec::new();
    let mut run = String::new();
    let mut kind = RunKind::Other;

    fn flush(run: &mut String, kind: RunKind, out: &mut Vec<Token>) {
        if run.is_empty() {
            return;
        }
        let surface = std::mem::take(run);
        let lang = match kind {
            RunKind::English if surface.chars().any(|c| c.is_ascii_alphabetic()) => Lang::English,
            _ => Lang::Other,
        };
        let surface = if lang == Lang::English {
            surface.to_ascii_uppercase()
        } else {
            surface
        };
        out.push(Token { surface, lang });
    }

    for c in text.chars() {
        if c.is_whitespace() {
            flush(&mut run, kind, &mut out);
        } else if is_mandarin_char(c) {
            flush(&mut run, kind, &mut out);
            out.push(Token {
                surface: c.to_string(),
                lang: Lang::Mandarin,
            });
        } else {
            let k = run_kind(c);
            if k != kind {
                flush(&mut run, kind, &mut out);
                kind = k;
            }
            run.push(c);
        }
    }
    flush(&mut run, kind, &mut out);
    out
}

/// `tokenize(normalize(text))`.
pub fn units(text: &str) -> Vec<Token> {
    tokenize(&normalize(text))
}

/// Joins tokens back into text: Mandarin tokens attach directly, a single
/// space separates two consecutive non-Mandarin tokens.
pub fn detokenize(tokens: &[Token]) -> String {
    let mut out = String::new();
    let mut prev: Option<Lang> = None;
    for t in tokens {
        if let Some(p) = prev {
            if p != Lang::Mandarin && t.lang != Lang::Mandarin {
                out.push(' ');
            }
        }
        out.push_str(&t.surface);
        prev = Some(t.lang);
    }
    out
}
