//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use cskit::cstext::{Lang, Token};
use cskit::losses::PosteriorSeq;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

/// Plain recursive edit distance, no memoisation.
pub fn brute_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    match (a, b) {
        ([], _) => b.len(),
        (_, []) => a.len(),
        ([x, ra @ ..], [y, rb @ ..]) => {
            let sub = brute_edit_distance(ra, rb) + usize::from(x != y);
            let del = brute_edit_distance(ra, b) + 1;
            let ins = brute_edit_distance(a, rb) + 1;
            sub.min(del).min(ins)
        }
    }
}

/// Sum over all `V^T` frame paths whose CTC collapse equals `labels`.
pub fn brute_ctc_prob(p: &PosteriorSeq, labels: &[usize], blank: usize) -> f64 {
    let (t_len, v) = p.shape();
    let mut total = 0.0;
    let mut path = vec![0usize; t_len];
    loop {
        let mut collapsed = Vec::new();
        let mut prev = None;
        for &s in &path {
            if Some(s) != prev && s != blank {
                collapsed.push(s);
            }
            prev = Some(s);
        }
        if collapsed == labels {
            total += path
                .iter()
                .enumerate()
                .map(|(t, &s)| p.get(t, s))
                .product::<f64>();
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == t_len {
                return total;
            }
            path[i] += 1;
            if path[i] < v {
                break;
            }
            path[i] = 0;
            i += 1;
        }
    }
}

pub fn random_posteriors(rng: &mut ChaCha8Rng, frames: usize, vocab: usize) -> PosteriorSeq {
    let mut rows = Vec::with_capacity(frames);
    for _ in 0..frames {
        let raw: Vec<f64> = (0..vocab).map(|_| rng.random::<f64>() + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        rows.push(raw.into_iter().map(|x| x / s).collect());
    }
    PosteriorSeq::from_rows(&rows).unwrap()
}

const ALPHABET: [(&str, Lang); 4] = [
    ("我", Lang::Mandarin),
    ("好", Lang::Mandarin),
    ("OK", Lang::English),
    ("HI", Lang::English),
];

pub fn random_tokens(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<Token> {
    let n = rng.random_range(0..=max_len);
    (0..n)
        .map(|_| {
            let (s, l) = ALPHABET[rng.random_range(0..ALPHABET.len())];
            Token::new(s, l).unwrap()
        })
        .collect()
}

pub fn surfaces(ts: &[Token]) -> Vec<&str> {
    ts.iter().map(Token::surface).collect()
}
