//! Seeded balanced downsampling and label-stratified splitting.

use super::{class_name, Corpus, CorpusError, PairRecord, SplitTag};
use crate::rng::SeededRng;

/// Guards `floor(fraction * n)` against products like `0.29 * 100` landing
/// just below an integer.
const FLOOR_EPSILON: f64 = 1e-9;

fn floor_share(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + FLOOR_EPSILON).floor() as usize
}

/// Draws `n_per_class` records of each label without replacement.
///
/// Each label pool (label 0 first, then label 1) is shuffled in source order
/// and its first `n_per_class` records are taken; the concatenated draw is
/// then shuffled once more with the same generator.
pub fn downsample_balanced(corpus: &Corpus, n_per_class: usize, seed: u64) -> Result<Corpus, CorpusError> {
    if n_per_class == 0 {
        return Err(CorpusError::InvalidArgument("n_per_class must be positive".into()));
    }
    let mut pools: [Vec<&PairRecord>; 2] = [Vec::new(), Vec::new()];
    for r in &corpus.records {
        pools[r.quality as usize].push(r);
    }
    for quality in [1u8, 0] {
        let available = pools[quality as usize].len();
        if available < n_per_class {
            return Err(CorpusError::Shortage {
                class: class_name(quality),
                needed: n_per_class,
                available,
            });
        }
    }

    let mut rng = SeededRng::new(seed);
    let mut picked: Vec<PairRecord> = Vec::with_capacity(2 * n_per_class);
    for pool in pools.iter_mut() {
        rng.shuffle(pool);
        picked.extend(pool.iter().take(n_per_class).map(|r| (*r).clone()));
    }
    rng.shuffle(&mut picked);
    Ok(Corpus::new(corpus.dataset_id.clone(), corpus.split, picked))
}

/// Splits `corpus` into `(rest, held_out)` with
/// `|held_out| = floor(fraction * |corpus|)`, stratified by label.
///
/// Per-label quotas are `floor(fraction * n_label)`; leftover slots go to the
/// labels with the largest fractional remainders (lower label first on ties).
/// Within each label the records are shuffled and the first `quota` are held
/// out. Both outputs keep source order.
pub fn stratified_split(
    corpus: &Corpus,
    fraction: f64,
    seed: u64,
    tags: (SplitTag, SplitTag),
) -> Result<(Corpus, Corpus), CorpusError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CorpusError::InvalidArgument(format!(
            "split fraction must lie strictly between 0 and 1, got {fraction}"
        )));
    }
    let n = corpus.len();
    if n < 2 {
        return Err(CorpusError::CannotSplit(n));
    }
    let target = floor_share(fraction, n);

    let mut by_label: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, r) in corpus.records.iter().enumerate() {
        by_label[r.quality as usize].push(i);
    }
    let mut quotas = [0usize; 2];
    for label in 0..2 {
        quotas[label] = floor_share(fraction, by_label[label].len());
    }
    while quotas.iter().sum::<usize>() > target {
        let big = if quotas[0] >= quotas[1] { 0 } else { 1 };
        quotas[big] -= 1;
    }
    let mut leftover = target - quotas.iter().sum::<usize>();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let rem = |l: usize| fraction * by_label[l].len() as f64 - quotas[l] as f64;
        rem(b).total_cmp(&rem(a)).then(a.cmp(&b))
    });
    while leftover > 0 {
        let before = leftover;
        for &label in &order {
            if leftover > 0 && quotas[label] < by_label[label].len() {
                quotas[label] += 1;
                leftover -= 1;
            }
        }
        if before == leftover {
            break;
        }
    }

    let mut rng = SeededRng::new(seed);
    let mut held = vec![false; n];
    for label in 0..2 {
        let pool = &mut by_label[label];
        rng.shuffle(pool);
        for &i in pool.iter().take(quotas[label]) {
            held[i] = true;
        }
    }

    let (mut rest, mut out) = (Vec::with_capacity(n - target), Vec::with_capacity(target));
    for (r, is_held) in corpus.records.iter().zip(held) {
        if is_held {
            out.push(r.clone());
        } else {
            rest.push(r.clone());
        }
    }
    Ok((
        Corpus::new(corpus.dataset_id.clone(), tags.0, rest),
        Corpus::new(corpus.dataset_id.clone(), tags.1, out),
    ))
}

/// Returns `(train, dev)`.
pub fn split_train_dev(corpus: &Corpus, dev_fraction: f64, seed: u64) -> Result<(Corpus, Corpus), CorpusError> {
    stratified_split(corpus, dev_fraction, seed, (SplitTag::Train, SplitTag::Dev))
}

/// Returns `(remainder, test)`.
pub fn split_test(corpus: &Corpus, test_fraction: f64, seed: u64) -> Result<(Corpus, Corpus), CorpusError> {
    stratified_split(corpus, test_fraction, seed, (SplitTag::Unsplit, SplitTag::Test))
}
