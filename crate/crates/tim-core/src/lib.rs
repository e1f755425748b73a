//! A probability-of-relevance matching engine.
//!
//! The same scoring idea drives three surfaces: an exhaustive enumerator
//! over binary description properties that serves as a small-instance
//! oracle ([`unified`]), a text-retrieval ranker built on per-term
//! two-Poisson eliteness mixtures with IDF/BM25/query-likelihood baselines
//! ([`adhoc`]), and a collaborative item ranker that propagates evidence
//! through known-relevant user/item pairs ([`cf`]). Estimation lives in
//! [`mixture`] (EM and conjugate Gibbs), corpus plumbing in [`corpus`], and
//! TREC-style evaluation in [`eval`].

#![forbid(unsafe_code)]

pub mod adhoc;
pub mod cf;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod mixture;
pub mod unified;

pub use adhoc::{
    score_binary_strict, score_document_baseline, score_document_idf, score_document_tim, search,
    BaselineConfig, BaselineModel, QueryRepresentation, RankedList, RankingModel, Scorer,
};
pub use cf::{
    build_relevant_pairs, fit_all_models, fit_item_model, fit_user_model, load_ratings,
    rank_items_for_user, score_pair, CfFitConfig, CfModels, ItemModel, RatingMatrix,
    RelevantPairSet, UserModel,
};
pub use corpus::{
    build_index, build_index_from_results, ingest_corpus, read_trec_topics, term_stats, tokenize,
    CorpusFormat, Document, InvertedIndex, Posting, TermStatistics, Tokenizer, Topic,
};
pub use error::{Error, Result};
pub use eval::{
    average_precision, evaluate_run, ndcg_at_k, precision_at_k, read_qrels, read_run,
    reciprocal_rank, write_run, Metric, MetricReport, Qrels, DEFAULT_EVAL_DEPTH,
};
pub use mixture::{
    eliteness_posterior, em_fit, fit_all_terms, gibbs_fit, init_params, log_elite_ratio,
    poisson_pmf, read_model_file, write_model_file, CountHistogram, EmFit, FitMethod, GibbsConfig,
    ModelRecord, TwoPoissonParams,
};
pub use unified::{
    enumerate_relevance_probability, single_property_score, strict_identity_joint,
    DescriptionDistribution, JointRelevanceTable, PriorTable, PropertyVector, SeekMatrix,
};
