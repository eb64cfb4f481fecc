//! Seeded error-injection harness for system combination.
//!
//! Generates a code-switching reference corpus and several "system" outputs
//! derived from it. The dominant error is an English word recognised as a
//! similar-sounding Mandarin character, and every erring system produces
//! the *same* character, so under equal weights the wrong character often
//! out-votes the English word. Smaller rates of Mandarin substitutions,
//! Mandarin-to-English confusions, random English substitutions, deletions
//! and insertions make the picture less clean.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;

use crate::cstext::{Lang, Token};
use crate::seeding::rng_for;
use crate::TokenizedCorpus;

/// English words paired with a similar-sounding Mandarin character.
const CONFUSABLE: &[(&str, char)] = &[
    ("OK", '欧'),
    ("COFFEE", '咖'),
    ("HELLO", '哈'),
    ("BYE", '拜'),
    ("PARTY", '派'),
    ("TAXI", '的'),
    ("SHOW", '秀'),
    ("COOL", '酷'),
    ("FANS", '粉'),
    ("CHECK", '切'),
    ("MALL", '摩'),
    ("BUS", '巴'),
    ("SORRY", '索'),
    ("MENU", '么'),
    ("LOGO", '咯'),
    ("EMAIL", '伊'),
];

const MANDARIN: &str = "我你他她们是不了在有这个人上来到说要就去和也会对好没看还想很吃喝天今明年家里学做工作时间问题知道觉得可以一起朋友";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub utterances: usize,
    pub systems: usize,
    pub seed: u64,
    /// Probability that a reference token is English.
    pub english_share: f64,
    /// Mean probability that a system turns an English word into its
    /// confusable Mandarin character. Systems spread around this value.
    pub en_to_zh: f64,
    /// English word replaced by a random other English word.
    pub en_random: f64,
    /// Mandarin character replaced by a random other character.
    pub zh_sub: f64,
    /// Mandarin character recognised as a (fixed) English word.
    pub zh_to_en: f64,
    pub deletion: f64,
    pub insertion: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            utterances: 200,
            systems: 8,
            seed: 0,
            english_share: 0.3,
            en_to_zh: 0.55,
            en_random: 0.05,
            zh_sub: 0.06,
            zh_to_en: 0.03,
            deletion: 0.02,
            insertion: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub refs: TokenizedCorpus,
    pub systems: Vec<TokenizedCorpus>,
}

fn mandarin(c: char) -> Token {
    Token::new(c.to_string(), Lang::Mandarin).expect("CJK ideograph")
}

fn english(w: &str) -> Token {
    Token::new(w, Lang::English).expect("uppercase word")
}

fn random_mandarin(rng: &mut ChaCha8Rng, pool: &[char]) -> Token {
    mandarin(pool[rng.random_range(0..pool.len())])
}

fn utt_id(i: usize) -> String {
    format!("utt{i:05}")
}

pub fn generate(cfg: &SynthConfig) -> SynthCorpus {
    let pool: Vec<char> = MANDARIN.chars().collect();
    let mut rng = rng_for(cfg.seed, "reference");
    let mut refs = TokenizedCorpus::new();
    for u in 0..cfg.utterances {
        let len = rng.random_range(6..=14);
        let toks = (0..len)
            .map(|_| {
                if rng.random_bool(cfg.english_share) {
                    english(CONFUSABLE[rng.random_range(0..CONFUSABLE.len())].0)
                } else {
                    random_mandarin(&mut rng, &pool)
                }
            })
            .collect();
        refs.insert(utt_id(u), toks);
    }

    let systems = (0..cfg.systems)
        .map(|s| {
            // spread system quality over +-20% of the mean confusion rate
            let spread = if cfg.systems > 1 {
                0.8 + 0.4 * s as f64 / (cfg.systems - 1) as f64
            } else {
                1.0
            };
            let en_to_zh = (cfg.en_to_zh * spread).clamp(0.0, 1.0);
            let mut rng = rng_for(cfg.seed, &format!("system{s}"));
            refs.iter()
                .map(|(id, r)| (id.clone(), corrupt(r, cfg, en_to_zh, &pool, &mut rng)))
                .collect()
        })
        .collect();
    SynthCorpus { refs, systems }
}

fn corrupt(
    reference: &[Token],
    cfg: &SynthConfig,
    en_to_zh: f64,
    pool: &[char],
    rng: &mut ChaCha8Rng,
) -> Vec<Token> {
    let mut out = Vec::with_capacity(reference.len() + 2);
    for t in reference {
        if rng.random_bool(cfg.deletion) {
            continue;
        }
        let emitted = match t.lang() {
            Lang::English => {
                let u: f64 = rng.random();
                if u < en_to_zh {
                    let &(_, c) = CONFUSABLE
                        .iter()
                        .find(|(w, _)| *w == t.surface())
                        .expect("reference English comes from the confusable list");
                    mandarin(c)
                } else if u < en_to_zh + cfg.en_random {
                    english(CONFUSABLE[rng.random_range(0..CONFUSABLE.len())].0)
                } else {
                    t.clone()
                }
            }
            _ => {
                let u: f64 = rng.random();
                if u < cfg.zh_to_en {
                    // each character has one fixed English look-alike
                    let k = t.surface().chars().next().map_or(0, |c| c as usize);
                    english(CONFUSABLE[k % CONFUSABLE.len()].0)
                } else if u < cfg.zh_to_en + cfg.zh_sub {
                    random_mandarin(rng, pool)
                } else {
                    t.clone()
                }
            }
        };
        out.push(emitted);
        if rng.random_bool(cfg.insertion) {
            out.push(random_mandarin(rng, pool));
        }
    }
    out
}
