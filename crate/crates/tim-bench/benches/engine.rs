use std::collections::HashMap;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use tim_core::adhoc::{search, QueryRepresentation, Scorer};
use tim_core::cf::{build_relevant_pairs, fit_all_models, CfFitConfig, RatingMatrix};
use tim_core::corpus::build_index;
use tim_core::mixture::{em_fit, fit_all_terms, gibbs_fit, FitMethod, GibbsConfig, TwoPoissonParams};

fn bench_index_build(c: &mut Criterion) {
    let docs = tim_bench::corpus(1000, 500, 1);
    c.bench_function("index_build_1k_docs", |b| {
        b.iter_batched(
            || docs.clone(),
            |docs| build_index(docs).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn bench_mixture_fits(c: &mut Criterion) {
    let hist = tim_bench::mixture_counts(5.0, 0.3, 0.2, 10_000, 2);
    let init = TwoPoissonParams::new(3.0, 1e-3, 0.5);
    c.bench_function("em_fit_10k_counts", |b| {
        b.iter(|| em_fit(&hist, init, 1e-6, 100).unwrap())
    });
    let config = GibbsConfig {
        burn_in: 500,
        samples: 1000,
        seed: 3,
        ..GibbsConfig::default()
    };
    c.bench_function("gibbs_fit_10k_counts", |b| {
        b.iter(|| gibbs_fit(&hist, &config).unwrap())
    });
}

fn bench_search(c: &mut Criterion) {
    let index = build_index(tim_bench::corpus(1000, 500, 4)).unwrap();
    let params: HashMap<String, TwoPoissonParams> =
        fit_all_terms(&index, &FitMethod::default_em(), None)
            .unwrap()
            .into_iter()
            .map(|r| (r.property, r.params))
            .collect();
    let query = QueryRepresentation::new("q", ["t0003", "t0017", "t0092"]);
    c.bench_function("search_tim_1k_docs", |b| {
        b.iter(|| search(&index, &Scorer::Tim(&params), &query, 100).unwrap())
    });
    c.bench_function("search_idf_1k_docs", |b| {
        b.iter(|| search(&index, &Scorer::Idf, &query, 100).unwrap())
    });
}

fn bench_cf(c: &mut Criterion) {
    let entries = tim_bench::two_block_ratings(100, 60, 0.2, 5);
    let matrix = RatingMatrix::from_entries(entries, 10).unwrap().matrix;
    let rel = build_relevant_pairs(&matrix, 4).unwrap();
    let models = fit_all_models(&matrix, &CfFitConfig::default()).unwrap();
    c.bench_function("cf_rank_one_user_100x60", |b| {
        b.iter(|| {
            tim_core::cf::rank_items_for_user(&matrix, &rel, &models, "u000", None, 10).unwrap()
        })
    });
}

criterion_group!(benches, bench_index_build, bench_mixture_fits, bench_search, bench_cf);
criterion_main!(benches);
