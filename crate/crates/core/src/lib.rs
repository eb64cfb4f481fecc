//! Toolkit for Mandarin-English code-switching ASR evaluation and system
//! combination.
//!
//! The crate is organised by concern:
//!
//! - [`cstext`]: transcript normalization and mixed-script tokenization
//!   (Mandarin characters and English words as scoring units).
//! - [`scoring`]: edit-distance alignment and mix error rate (MER) reports.
//! - [`rover`]: word transition network construction and language-weighted
//!   voting over several systems' outputs.
//! - [`rescore`]: n-best re-ranking with external and internal LM scores.
//! - [`textaug`]: same-dialogue sentence pairing for long-context LM text.
//! - [`dsp`]: WAV I/O, speed perturbation, log-Mel filterbanks, SpecAugment.
//! - [`losses`]: cross entropy, CTC, KL consistency and the joint loss over
//!   explicit posterior matrices.
//! - [`formats`]: readers and writers for every text file format used above.
//! - [`synth`]: a seeded error-injection harness producing multi-system
//!   corpora for exercising fusion.

pub mod cstext;
pub mod dsp;
mod error;
pub mod formats;
pub mod losses;
pub mod rescore;
pub mod rover;
pub mod scoring;
pub mod seeding;
pub mod synth;
pub mod textaug;

pub use error::{Error, Result};

/// Tokenized utterances keyed by utterance id, in file order.
pub type TokenizedCorpus = indexmap::IndexMap<String, Vec<cstext::Token>>;
