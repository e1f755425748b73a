//! Synthetic inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tim_core::corpus::Document;
use tim_core::mixture::CountHistogram;

/// Corpus with a Zipf-like vocabulary.
pub fn corpus(n_docs: usize, vocab: usize, seed: u64) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cumulative = Vec::with_capacity(vocab);
    let mut total = 0.0;
    for i in 0..vocab {
        total += 1.0 / (i + 1) as f64;
        cumulative.push(total);
    }
    (0..n_docs)
        .map(|d| Document {
            doc_id: format!("doc{d:05}"),
            tokens: (0..rng.random_range(40..120))
                .map(|_| {
                    let x = rng.random_range(0.0..total);
                    format!("t{:04}", cumulative.partition_point(|&c| c < x).min(vocab - 1))
                })
                .collect(),
        })
        .collect()
}

/// Counts from a two-Poisson mixture.
pub fn mixture_counts(mu1: f64, mu0: f64, p: f64, n: usize, seed: u64) -> CountHistogram {
    use rand_distr::{Distribution, Poisson};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let elite = Poisson::new(mu1).unwrap();
    let nonelite = Poisson::new(mu0).unwrap();
    let mut hist = CountHistogram::new();
    for _ in 0..n {
        let draw: f64 = if rng.random::<f64>() < p {
            elite.sample(&mut rng)
        } else {
            nonelite.sample(&mut rng)
        };
        hist.add(draw as u64, 1);
    }
    hist
}

/// Two-block rating entries (1-10 scale) with interaction-biased
/// observation.
pub fn two_block_ratings(
    n_users: usize,
    n_items: usize,
    density: f64,
    seed: u64,
) -> Vec<(String, String, u32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for u in 0..n_users {
        for i in 0..n_items {
            let in_group = (u < n_users / 2) == (i < n_items / 2);
            let p = if in_group { 1.75 * density } else { 0.25 * density };
            if rng.random::<f64>() < p {
                let rating = if in_group {
                    rng.random_range(8..=10)
                } else {
                    rng.random_range(1..=2)
                };
                entries.push((format!("u{u:03}"), format!("i{i:03}"), rating));
            }
        }
    }
    entries
}
