#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use betkit::corpus::{Corpus, PairRecord, SplitTag};
use betkit::translate::{BackendPolicy, Lexicon, MockBackend, MockConfig, Translator};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Policy without throttling or backoff sleeps.
pub fn fast_policy() -> BackendPolicy {
    BackendPolicy {
        max_requests_per_second: 1e9,
        initial_backoff_ms: 0,
        ..BackendPolicy::default()
    }
}

pub fn mock_translator(rate: f64, lexicon: Lexicon) -> Translator {
    let backend = Arc::new(MockBackend::new(
        MockConfig {
            substitution_rate: rate,
            seed: 42,
        },
        lexicon,
    ));
    Translator::uncached(backend, fast_policy()).unwrap()
}

const WORDS: [&str; 16] = [
    "the", "a", "big", "small", "cat", "dog", "house", "car", "quick", "slow", "man", "woman", "good", "bad", "happy",
    "sad",
];

/// Deterministic synthetic corpus: `pos` paraphrases (near copies) and
/// `neg` non-paraphrases (unrelated word salad), interleaved.
pub fn synthetic_corpus(pos: usize, neg: usize, split: SplitTag) -> Corpus {
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let mut next = move |bound: usize| {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state % bound as u64) as usize
    };
    let sentence = |next: &mut dyn FnMut(usize) -> usize| -> Vec<&'static str> {
        (0..8).map(|_| WORDS[next(WORDS.len())]).collect()
    };
    let mut records = Vec::with_capacity(pos + neg);
    let (mut p, mut n) = (0, 0);
    while p < pos || n < neg {
        let positive = n >= neg || (p < pos && (p + n) % 5 < 3);
        let s = sentence(&mut next);
        let para = if positive {
            let mut c = s.clone();
            let i = next(c.len());
            c[i] = WORDS[next(WORDS.len())];
            c
        } else {
            sentence(&mut next)
        };
        let id = format!("syn-{}", p + n);
        records.push(PairRecord::original(
            id,
            s.join(" "),
            para.join(" "),
            u8::from(positive),
        ));
        if positive {
            p += 1;
        } else {
            n += 1;
        }
    }
    Corpus::new("syn", split, records)
}

/// Lexicon mapping every synthetic word to a distinct replacement.
pub fn full_lexicon() -> Lexicon {
    WORDS.iter().map(|w| (w.to_string(), format!("{w}x"))).collect()
}
