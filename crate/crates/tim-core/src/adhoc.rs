//! Document scoring and top-k retrieval.
//!
//! The primary scorer turns fitted per-term mixtures into a sum of log
//! description/prior ratios over the query terms, shifted per term so that a
//! document containing no query terms scores exactly zero. The shift is a
//! per-query constant, so rankings are unchanged and the scorer can run off
//! postings alone. The same machinery with a presence estimator (a term
//! describes a document iff it occurs) degenerates to a pure inverse
//! document frequency ranking, which is also implemented directly as an
//! independent route for cross-checking. BM25 and query-likelihood scorers
//! (Jelinek-Mercer and Dirichlet smoothing) serve as baselines.

use std::collections::{HashMap, HashSet};
use std::collections::BTreeSet;
use std::str::FromStr;

use crate::corpus::{InvertedIndex, Tokenizer};
use crate::error::{Error, Result};
use crate::mixture::{log_elite_ratio, TwoPoissonParams};
use crate::unified::{single_property_score, DescriptionDistribution, PriorTable, PropertyVector};

/// A query as a set of elite terms: the query's terms are exactly the
/// properties assumed to describe the need, so duplicates collapse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryRepresentation {
    query_id: String,
    elite_terms: BTreeSet<String>,
}

impl QueryRepresentation {
    pub fn new<I, S>(query_id: impl Into<String>, terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            query_id: query_id.into(),
            elite_terms: terms.into_iter().map(Into::into).collect(),
        }
    }

    pub fn from_text(query_id: impl Into<String>, text: &str, tokenizer: &Tokenizer) -> Self {
        Self::new(query_id, tokenizer.tokenize(text))
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    /// Query terms in lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.elite_terms.iter().map(|s| s.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.elite_terms.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.elite_terms.contains(term)
    }
}

/// Scored documents in descending score order, ties broken by ascending
/// document id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub query_id: String,
    entries: Vec<(String, f64)>,
}

impl RankedList {
    pub fn empty(query_id: impl Into<String>) -> Self {
        Self {
            query_id: query_id.into(),
            entries: Vec::new(),
        }
    }

    /// Sorts and truncates raw scores into a ranking.
    pub fn from_scores(
        query_id: impl Into<String>,
        mut scores: Vec<(String, f64)>,
        k: usize,
    ) -> Self {
        scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scores.truncate(k);
        Self {
            query_id: query_id.into(),
            entries: scores,
        }
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(d, _)| d.as_str())
    }

    /// Truncated copy, keeping the top `depth` entries.
    pub fn truncated(&self, depth: usize) -> Self {
        Self {
            query_id: self.query_id.clone(),
            entries: self.entries.iter().take(depth).cloned().collect(),
        }
    }
}

/// Strict-identity ranking over a known need vector: the product over all
/// properties of the description/prior ratio at the need's value. Used as
/// the closed-form counterpart of the exhaustive enumerator in tests.
pub fn score_binary_strict(
    f_known: &PropertyVector,
    item_desc: &DescriptionDistribution,
    priors: &PriorTable,
) -> Result<f64> {
    let dim = f_known.dimension();
    if item_desc.dimension() != dim || priors.item_dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "need {dim}, item {}, priors {}",
            item_desc.dimension(),
            priors.item_dim()
        )));
    }
    let mut score = 1.0;
    for i in 0..dim {
        let value = f_known.get(i);
        score *= single_property_score(item_desc.prob(i, value), priors.item_prior(i, value))?;
    }
    Ok(score)
}

/// Per-term estimator of the probability that the term-description property
/// holds for a document with the observed frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TermEstimator {
    /// Posterior under a fitted two-Poisson mixture.
    Eliteness(TwoPoissonParams),
    /// The property holds exactly when the term occurs; its prior is the
    /// fraction of documents containing the term.
    Presence { df: u64, doc_count: u64 },
}

impl TermEstimator {
    /// Contribution of one query term to a document's score, shifted so a
    /// zero frequency contributes exactly zero.
    pub fn contribution(&self, tf: u64) -> f64 {
        match self {
            TermEstimator::Eliteness(params) => {
                if tf == 0 {
                    0.0
                } else {
                    log_elite_ratio(params, tf) - log_elite_ratio(params, 0)
                }
            }
            TermEstimator::Presence { df, doc_count } => {
                if tf == 0 || *df == 0 || *doc_count == 0 {
                    0.0
                } else {
                    single_property_score(1.0, *df as f64 / *doc_count as f64)
                        .expect("df/N is a valid probability")
                        .ln()
                }
            }
        }
    }
}

/// Sum of per-term contributions over the query under arbitrary estimators.
/// Terms without an estimator are skipped.
pub fn score_document_unified(
    estimators: &HashMap<String, TermEstimator>,
    doc_tfs: &HashMap<String, u64>,
    query: &QueryRepresentation,
) -> f64 {
    query
        .terms()
        .filter_map(|term| {
            let estimator = estimators.get(term)?;
            let tf = doc_tfs.get(term).copied().unwrap_or(0);
            Some(estimator.contribution(tf))
        })
        .sum()
}

/// Mixture-based document score: for each query term with fitted
/// parameters, the shifted log elite-evidence ratio at the document's term
/// frequency. Query terms without parameters are skipped with a warning.
pub fn score_document_tim(
    params: &HashMap<String, TwoPoissonParams>,
    doc_tfs: &HashMap<String, u64>,
    query: &QueryRepresentation,
) -> f64 {
    query
        .terms()
        .map(|term| match params.get(term) {
            None => {
                log::warn!("query {}: no fitted parameters for term {term:?}, skipping", query.query_id());
                0.0
            }
            Some(p) => TermEstimator::Eliteness(*p).contribution(
                doc_tfs.get(term).copied().unwrap_or(0),
            ),
        })
        .sum()
}

/// Pure IDF score: the sum of `ln(N / df)` over query terms present in the
/// document. Terms with zero document frequency are skipped. Kept as a
/// direct, independent implementation so the presence-estimator route can
/// be checked against it.
pub fn score_document_idf(
    index: &InvertedIndex,
    doc_terms: &HashSet<String>,
    query: &QueryRepresentation,
) -> f64 {
    let n = index.doc_count() as f64;
    query
        .terms()
        .filter(|t| doc_terms.contains(*t))
        .filter_map(|t| {
            let df = index.df(t);
            (df > 0).then(|| (n / df as f64).ln())
        })
        .sum()
}

/// Baseline scoring models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineModel {
    Bm25,
    LmJm,
    Dirichlet,
}

/// Baseline parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub k1: f64,
    pub b: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            k1: 1.2,
            b: 0.75,
            lambda: 0.1,
            mu: 1000.0,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k1.is_nan() || self.k1 < 0.0 {
            return Err(Error::InvalidParameter(format!("k1 = {} must be >= 0", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidParameter(format!("b = {} must be in [0, 1]", self.b)));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda = {} must be in (0, 1)",
                self.lambda
            )));
        }
        if self.mu.is_nan() || self.mu <= 0.0 {
            return Err(Error::InvalidParameter(format!("mu = {} must be > 0", self.mu)));
        }
        Ok(())
    }
}

/// Standard baseline scores. BM25 sums saturated tf times a smoothed
/// non-negative IDF over matching terms; the language models return the
/// query log-likelihood under the smoothed document model, skipping query
/// terms absent from the whole collection.
pub fn score_document_baseline(
    model: BaselineModel,
    config: &BaselineConfig,
    index: &InvertedIndex,
    doc_tfs: &HashMap<String, u64>,
    doc_len: u64,
    query: &QueryRepresentation,
) -> Result<f64> {
    config.validate()?;
    let n = index.doc_count() as f64;
    let dl = doc_len as f64;
    let collection_len = index.total_tokens() as f64;
    let score = match model {
        BaselineModel::Bm25 => {
            let avgdl = index.avg_doc_length().max(1e-9);
            query
                .terms()
                .filter_map(|t| {
                    let tf = doc_tfs.get(t).copied().unwrap_or(0) as f64;
                    let df = index.df(t) as f64;
                    if tf == 0.0 || df == 0.0 {
                        return None;
                    }
                    let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                    let sat = tf * (config.k1 + 1.0)
                        / (tf + config.k1 * (1.0 - config.b + config.b * dl / avgdl));
                    Some(idf * sat)
                })
                .sum()
        }
        BaselineModel::LmJm => query
            .terms()
            .filter_map(|t| {
                let cf = index.collection_freq(t) as f64;
                if cf == 0.0 {
                    return None;
                }
                let tf = doc_tfs.get(t).copied().unwrap_or(0) as f64;
                let p_doc = if dl > 0.0 { tf / dl } else { 0.0 };
                let p_coll = cf / collection_len;
                Some(((1.0 - config.lambda) * p_doc + config.lambda * p_coll).ln())
            })
            .sum(),
        BaselineModel::Dirichlet => query
            .terms()
            .filter_map(|t| {
                let cf = index.collection_freq(t) as f64;
                if cf == 0.0 {
                    return None;
                }
                let tf = doc_tfs.get(t).copied().unwrap_or(0) as f64;
                let p_coll = cf / collection_len;
                Some(((tf + config.mu * p_coll) / (dl + config.mu)).ln())
            })
            .sum(),
    };
    Ok(score)
}

/// Which scorer drives a search.
#[derive(Debug, Clone)]
pub enum Scorer<'a> {
    /// Fitted mixture parameters per term.
    Tim(&'a HashMap<String, TwoPoissonParams>),
    /// Presence estimator over the index statistics.
    TimBinarized,
    /// Direct IDF route.
    Idf,
    Baseline(BaselineModel, BaselineConfig),
}

/// Scores the union of documents containing at least one query term and
/// returns the top `k` by score, ties broken by ascending document id.
/// An empty query yields an empty list.
pub fn search(
    index: &InvertedIndex,
    scorer: &Scorer,
    query: &QueryRepresentation,
    k: usize,
) -> Result<RankedList> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if query.is_empty() {
        return Ok(RankedList::empty(query.query_id()));
    }

    // Union of candidate documents with the query-term frequencies seen in
    // their postings.
    let mut candidates: HashMap<u32, Vec<(String, u64)>> = HashMap::new();
    for term in query.terms() {
        if let Some(postings) = index.postings(term) {
            for posting in postings {
                candidates
                    .entry(posting.doc)
                    .or_default()
                    .push((term.to_string(), posting.tf as u64));
            }
        }
    }

    let presence_estimators: Option<HashMap<String, TermEstimator>> = match scorer {
        Scorer::TimBinarized => Some(
            query
                .terms()
                .map(|t| {
                    (
                        t.to_string(),
                        TermEstimator::Presence {
                            df: index.df(t),
                            doc_count: index.doc_count(),
                        },
                    )
                })
                .collect(),
        ),
        _ => None,
    };

    let mut scores = Vec::with_capacity(candidates.len());
    for (ordinal, term_tfs) in candidates {
        let doc_tfs: HashMap<String, u64> = term_tfs.iter().cloned().collect();
        let score = match scorer {
            Scorer::Tim(params) => score_document_tim(params, &doc_tfs, query),
            Scorer::TimBinarized => score_document_unified(
                presence_estimators.as_ref().unwrap(),
                &doc_tfs,
                query,
            ),
            Scorer::Idf => {
                let doc_terms: HashSet<String> = doc_tfs.keys().cloned().collect();
                score_document_idf(index, &doc_terms, query)
            }
            Scorer::Baseline(model, config) => score_document_baseline(
                *model,
                config,
                index,
                &doc_tfs,
                index.doc_length(ordinal),
                query,
            )?,
        };
        scores.push((index.doc_id(ordinal).to_string(), score));
    }
    Ok(RankedList::from_scores(query.query_id(), scores, k))
}

/// Ranking model selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankingModel {
    TimEm,
    TimGibbs,
    Idf,
    Bm25,
    LmJm,
    Dirichlet,
}

impl RankingModel {
    pub fn name(&self) -> &'static str {
        match self {
            RankingModel::TimEm => "tim-em",
            RankingModel::TimGibbs => "tim-gibbs",
            RankingModel::Idf => "idf",
            RankingModel::Bm25 => "bm25",
            RankingModel::LmJm => "lm-jm",
            RankingModel::Dirichlet => "dirichlet",
        }
    }

    /// Fit method expected in the model file, for the mixture-backed models.
    pub fn expected_fit(&self) -> Option<&'static str> {
        match self {
            RankingModel::TimEm => Some("em"),
            RankingModel::TimGibbs => Some("gibbs"),
            _ => None,
        }
    }
}

impl FromStr for RankingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tim-em" => Ok(RankingModel::TimEm),
            "tim-gibbs" => Ok(RankingModel::TimGibbs),
            "idf" => Ok(RankingModel::Idf),
            "bm25" => Ok(RankingModel::Bm25),
            "lm-jm" => Ok(RankingModel::LmJm),
            "dirichlet" => Ok(RankingModel::Dirichlet),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }
}

impl std::fmt::Display for RankingModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_index, Document};
    use crate::unified::{
        enumerate_relevance_probability, strict_identity_joint,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn doc(id: &str, tokens: &[&str]) -> Document {
        Document {
            doc_id: id.to_string(),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
        }
    }

    fn small_index() -> InvertedIndex {
        build_index([
            doc("d1", &["a", "a"]),
            doc("d2", &["b"]),
            doc("d3", &["a", "b", "c"]),
            doc("d4", &["c", "c"]),
        ])
        .unwrap()
    }

    #[test]
    fn binary_strict_examples() {
        // All ratios one.
        let f = PropertyVector::new(vec![true, false]);
        let item = DescriptionDistribution::new(vec![0.5, 0.5]).unwrap();
        let priors = PriorTable::new(vec![0.5, 0.5], vec![0.5, 0.5]).unwrap();
        assert!((score_binary_strict(&f, &item, &priors).unwrap() - 1.0).abs() < 1e-12);

        // Single elite property described with certainty, prior 0.25.
        let f = PropertyVector::new(vec![true]);
        let item = DescriptionDistribution::new(vec![1.0]).unwrap();
        let priors = PriorTable::new(vec![0.25], vec![0.25]).unwrap();
        assert!((score_binary_strict(&f, &item, &priors).unwrap() - 4.0).abs() < 1e-12);

        let bad = DescriptionDistribution::new(vec![0.5, 0.5]).unwrap();
        assert!(score_binary_strict(&f, &bad, &priors).is_err());
    }

    #[test]
    fn binary_strict_proportional_to_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let f = PropertyVector::new(vec![true, false]);
        let joint = strict_identity_joint(2, &f).unwrap();
        let need = DescriptionDistribution::from_known(&f);
        let priors = PriorTable::new(vec![0.3, 0.6], vec![0.3, 0.6]).unwrap();

        let mut ratio: Option<f64> = None;
        for _ in 0..25 {
            let item = DescriptionDistribution::new(vec![
                rng.random_range(0.05..0.95),
                rng.random_range(0.05..0.95),
            ])
            .unwrap();
            let enumerated =
                enumerate_relevance_probability(&need, &item, &joint, &priors).unwrap();
            let closed = score_binary_strict(&f, &item, &priors).unwrap();
            let r = enumerated / closed;
            if let Some(expected) = ratio {
                assert!((r / expected - 1.0).abs() < 1e-9, "ratio drifted: {r} vs {expected}");
            } else {
                ratio = Some(r);
            }
        }
    }

    #[test]
    fn tim_contribution_examples() {
        let params = TwoPoissonParams::new(2.0, 0.1, 0.5);
        let est = TermEstimator::Eliteness(params);
        assert_eq!(est.contribution(0), 0.0);

        // Direct evaluation of the shifted log ratio at tf = 3: the full
        // pmf kernel with the factorials cancelling inside the ratio.
        let kernel = |k: u64, mu: f64| (-mu).exp() * mu.powi(k as i32);
        let direct_s = |k: u64| {
            let a = kernel(k, 2.0);
            let b = kernel(k, 0.1);
            (a / (0.5 * a + 0.5 * b)).ln()
        };
        let s3 = log_elite_ratio(&params, 3);
        let s0 = log_elite_ratio(&params, 0);
        assert!((s3 - direct_s(3)).abs() < 1e-12);
        assert!((s0 - direct_s(0)).abs() < 1e-12);
        assert!((s3 - 0.69231).abs() < 1e-5);
        assert!((s0 - (-1.34624)).abs() < 1e-5);
        assert!((est.contribution(3) - 2.03855).abs() < 1e-5);
        assert!((est.contribution(3) - (s3 - s0)).abs() < 1e-12);
    }

    #[test]
    fn tim_contributions_add_and_skip_missing() {
        let mut params = HashMap::new();
        params.insert("a".to_string(), TwoPoissonParams::new(2.0, 0.1, 0.5));
        params.insert("b".to_string(), TwoPoissonParams::new(3.0, 0.2, 0.3));
        let query = QueryRepresentation::new("q", ["a", "b", "missing"]);
        let doc_tfs: HashMap<String, u64> =
            [("a".to_string(), 3u64), ("b".to_string(), 1u64)].into_iter().collect();
        let score = score_document_tim(&params, &doc_tfs, &query);
        let expected = TermEstimator::Eliteness(params["a"]).contribution(3)
            + TermEstimator::Eliteness(params["b"]).contribution(1);
        assert!((score - expected).abs() < 1e-12);

        // Terms absent from the document contribute nothing.
        let doc_tfs: HashMap<String, u64> = [("a".to_string(), 3u64)].into_iter().collect();
        let only_a = score_document_tim(&params, &doc_tfs, &query);
        assert!((only_a - TermEstimator::Eliteness(params["a"]).contribution(3)).abs() < 1e-12);
    }

    #[test]
    fn tim_contribution_monotone_in_tf() {
        let params = TwoPoissonParams::new(4.0, 0.2, 0.3);
        let est = TermEstimator::Eliteness(params);
        let mut prev = est.contribution(0);
        for tf in 1..=40 {
            let cur = est.contribution(tf);
            assert!(cur >= prev - 1e-12);
            prev = cur;
        }
    }

    #[test]
    fn idf_examples() {
        let index = small_index();
        // N = 4, df(b) = 2.
        let query = QueryRepresentation::new("q", ["b"]);
        let doc_terms: HashSet<String> = ["b".to_string()].into_iter().collect();
        let score = score_document_idf(&index, &doc_terms, &query);
        assert!((score - 2.0f64.ln()).abs() < 1e-12);

        // Terms with df {1, 2} both present, N = 4.
        let index2 = build_index([
            doc("d1", &["x", "y"]),
            doc("d2", &["y"]),
            doc("d3", &["z"]),
            doc("d4", &["w"]),
        ])
        .unwrap();
        let query = QueryRepresentation::new("q", ["x", "y"]);
        let doc_terms: HashSet<String> =
            ["x".to_string(), "y".to_string()].into_iter().collect();
        let score = score_document_idf(&index2, &doc_terms, &query);
        assert!((score - (4.0f64.ln() + 2.0f64.ln())).abs() < 1e-12);

        // No query term present.
        let score = score_document_idf(&index, &HashSet::new(), &query);
        assert_eq!(score, 0.0);
    }

    #[test]
    fn baseline_corner_cases() {
        let index = small_index();
        let config = BaselineConfig::default();
        let query = QueryRepresentation::new("q", ["a", "b"]);

        // BM25 with no query term in the document.
        let score = score_document_baseline(
            BaselineModel::Bm25,
            &config,
            &index,
            &HashMap::new(),
            2,
            &query,
        )
        .unwrap();
        assert_eq!(score, 0.0);

        // Dirichlet with huge mu converges to the collection model: equal
        // scores for all documents of any length.
        let huge = BaselineConfig {
            mu: 1e12,
            ..BaselineConfig::default()
        };
        let with_term = score_document_baseline(
            BaselineModel::Dirichlet,
            &huge,
            &index,
            &[("a".to_string(), 2u64)].into_iter().collect(),
            2,
            &query,
        )
        .unwrap();
        let without = score_document_baseline(
            BaselineModel::Dirichlet,
            &huge,
            &index,
            &HashMap::new(),
            3,
            &query,
        )
        .unwrap();
        assert!((with_term - without).abs() < 1e-6);

        // Jelinek-Mercer near the pure-collection corner: scores tie across
        // documents regardless of their term content.
        let corner = BaselineConfig {
            lambda: 1.0 - 1e-12,
            ..BaselineConfig::default()
        };
        let a = score_document_baseline(
            BaselineModel::LmJm,
            &corner,
            &index,
            &[("a".to_string(), 2u64)].into_iter().collect(),
            2,
            &query,
        )
        .unwrap();
        let b = score_document_baseline(
            BaselineModel::LmJm,
            &corner,
            &index,
            &[("b".to_string(), 1u64)].into_iter().collect(),
            1,
            &query,
        )
        .unwrap();
        assert!((a - b).abs() < 1e-9);

        let bad = BaselineConfig {
            lambda: 1.5,
            ..BaselineConfig::default()
        };
        assert!(
            score_document_baseline(BaselineModel::LmJm, &bad, &index, &HashMap::new(), 1, &query)
                .is_err()
        );
    }

    #[test]
    fn search_matches_and_truncates() {
        let index = build_index([doc("d1", &["a", "a"]), doc("d2", &["b"])]).unwrap();
        let query = QueryRepresentation::new("q", ["a"]);
        let ranked = search(&index, &Scorer::Idf, &query, 10).unwrap();
        assert_eq!(ranked.doc_ids().collect::<Vec<_>>(), vec!["d1"]);

        // k larger than the match count returns all matches; empty query
        // returns an empty list; k = 0 is rejected.
        let query_ab = QueryRepresentation::new("q", ["a", "b"]);
        let ranked = search(&index, &Scorer::Idf, &query_ab, 100).unwrap();
        assert_eq!(ranked.len(), 2);
        let empty = QueryRepresentation::new("q", Vec::<String>::new());
        assert!(search(&index, &Scorer::Idf, &empty, 5).unwrap().is_empty());
        assert!(search(&index, &Scorer::Idf, &query_ab, 0).is_err());
    }

    #[test]
    fn search_breaks_ties_by_doc_id() {
        let index = build_index([
            doc("d2", &["a"]),
            doc("d1", &["a"]),
            doc("d3", &["a"]),
        ])
        .unwrap();
        let query = QueryRepresentation::new("q", ["a"]);
        let ranked = search(&index, &Scorer::Idf, &query, 10).unwrap();
        assert_eq!(ranked.doc_ids().collect::<Vec<_>>(), vec!["d1", "d2", "d3"]);
    }

    #[test]
    fn binarized_matches_idf_ranking_on_small_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vocab = ["a", "b", "c", "d", "e", "f"];
        let docs: Vec<Document> = (0..40)
            .map(|i| Document {
                doc_id: format!("d{i:02}"),
                tokens: (0..rng.random_range(3..12))
                    .map(|_| vocab[rng.random_range(0..vocab.len())].to_string())
                    .collect(),
            })
            .collect();
        let index = build_index(docs).unwrap();
        for qi in 0..10 {
            let a = vocab[rng.random_range(0..vocab.len())];
            let b = vocab[rng.random_range(0..vocab.len())];
            let query = QueryRepresentation::new(format!("q{qi}"), [a, b]);
            let binarized = search(&index, &Scorer::TimBinarized, &query, 1000).unwrap();
            let idf = search(&index, &Scorer::Idf, &query, 1000).unwrap();
            assert_eq!(
                binarized.doc_ids().collect::<Vec<_>>(),
                idf.doc_ids().collect::<Vec<_>>(),
                "query ({a}, {b})"
            );
        }
    }

    #[test]
    fn ranking_model_parse() {
        assert_eq!("tim-em".parse::<RankingModel>().unwrap(), RankingModel::TimEm);
        assert_eq!("dirichlet".parse::<RankingModel>().unwrap(), RankingModel::Dirichlet);
        assert!(matches!(
            "nope".parse::<RankingModel>(),
            Err(Error::UnknownModel(_))
        ));
    }
}
