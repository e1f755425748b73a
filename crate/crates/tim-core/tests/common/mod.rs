//! Deterministic synthetic inputs for the integration suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use tim_core::adhoc::QueryRepresentation;
use tim_core::corpus::Document;
use tim_core::mixture::CountHistogram;

/// Corpus with a Zipf-like vocabulary: term `i` is drawn with weight
/// `1 / (i + 1)`.
pub fn zipf_corpus(n_docs: usize, vocab: usize, seed: u64) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cumulative = Vec::with_capacity(vocab);
    let mut total = 0.0;
    for i in 0..vocab {
        total += 1.0 / (i + 1) as f64;
        cumulative.push(total);
    }
    (0..n_docs)
        .map(|d| {
            let len = rng.random_range(40..120);
            let tokens = (0..len)
                .map(|_| {
                    let x = rng.random_range(0.0..total);
                    let idx = cumulative.partition_point(|&c| c < x).min(vocab - 1);
                    format!("t{idx:04}")
                })
                .collect();
            Document {
                doc_id: format!("doc{d:05}"),
                tokens,
            }
        })
        .collect()
}

/// Queries of 2-3 distinct terms from the frequent end of the vocabulary.
pub fn random_queries(n: usize, frequent_range: usize, seed: u64) -> Vec<QueryRepresentation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|q| {
            let len = rng.random_range(2..=3usize);
            let mut terms = Vec::new();
            while terms.len() < len {
                let t = format!("t{:04}", rng.random_range(0..frequent_range));
                if !terms.contains(&t) {
                    terms.push(t);
                }
            }
            QueryRepresentation::new(format!("q{q:03}"), terms)
        })
        .collect()
}

/// Counts drawn from a two-Poisson mixture.
pub fn mixture_histogram(mu1: f64, mu0: f64, p: f64, n: usize, seed: u64) -> CountHistogram {
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

/// Rating scale of the two-block matrix.
pub const TWO_BLOCK_R_MAX: u32 = 10;

/// Two-block rating matrix on a 1-10 scale: the first half of the users
/// rates the first half of the items high (8-10) and the rest low (1-2),
/// and vice versa. `density` is the overall fraction of observed cells;
/// observation is interaction-biased the way rating data is (users mostly
/// rate items from their own block), with in-group cells observed at
/// `1.75 * density` and out-group cells at `0.25 * density`.
///
/// Two constraints force this shape. A group-independent observation
/// pattern makes the in-group and out-group evidence sums identical in
/// expectation (each collects the same mix of high- and low-rating terms),
/// so it carries no plantable signal. And clusters closer than the Poisson
/// dispersion (e.g. 4-5 vs 1-2 on a 1-5 scale) make the merged
/// single-Poisson fit the maximum-likelihood solution, collapsing every
/// per-entity mixture. Every user and item is guaranteed at least one
/// observation.
#[allow(clippy::needless_range_loop)]
pub fn two_block_entries(
    n_users: usize,
    n_items: usize,
    density: f64,
    seed: u64,
) -> Vec<(String, String, u32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let in_density = 1.75 * density;
    let out_density = 0.25 * density;
    let mut entries = Vec::new();
    let mut user_seen = vec![false; n_users];
    let mut item_seen = vec![false; n_items];
    let push = |entries: &mut Vec<(String, String, u32)>,
                rng: &mut ChaCha8Rng,
                u: usize,
                i: usize| {
        let in_group = (u < n_users / 2) == (i < n_items / 2);
        let rating = if in_group {
            rng.random_range(8..=10)
        } else {
            rng.random_range(1..=2)
        };
        entries.push((format!("u{u:03}"), format!("i{i:03}"), rating));
    };
    for u in 0..n_users {
        for i in 0..n_items {
            let p = if (u < n_users / 2) == (i < n_items / 2) {
                in_density
            } else {
                out_density
            };
            if rng.random::<f64>() < p {
                push(&mut entries, &mut rng, u, i);
                user_seen[u] = true;
                item_seen[i] = true;
            }
        }
    }
    for (u, seen) in user_seen.iter().enumerate() {
        if !seen {
            let i = rng.random_range(0..n_items);
            push(&mut entries, &mut rng, u, i);
            item_seen[i] = true;
        }
    }
    for (i, seen) in item_seen.iter().enumerate() {
        if !seen {
            let u = rng.random_range(0..n_users);
            push(&mut entries, &mut rng, u, i);
        }
    }
    entries
}

/// Whether the user/item pair sits inside a block.
pub fn in_group(n_users: usize, n_items: usize, user: usize, item: usize) -> bool {
    (user < n_users / 2) == (item < n_items / 2)
}
