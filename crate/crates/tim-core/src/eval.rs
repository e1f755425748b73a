//! Ranking metrics and TREC-format run/qrels files.
//!
//! Relevance is binary at grade >= 1 for average precision, reciprocal rank
//! and precision; NDCG uses graded gains `2^grade - 1` with a log2 rank
//! discount. Queries with no judged-relevant document are excluded from
//! means. Run entries are re-sorted by (score desc, doc id asc) before
//! scoring so file order and rank fields cannot change a result.

use std::collections::HashMap;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use crate::adhoc::RankedList;
use crate::error::{Error, Result};

/// Rank cutoff applied to runs before scoring.
pub const DEFAULT_EVAL_DEPTH: usize = 1000;

/// Graded relevance judgments.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    grades: BTreeMap<String, HashMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, query: impl Into<String>, doc: impl Into<String>, grade: u32) -> Result<()> {
        let query = query.into();
        let doc = doc.into();
        let by_doc = self.grades.entry(query.clone()).or_default();
        if by_doc.insert(doc.clone(), grade).is_some() {
            return Err(Error::InvalidParameter(format!(
                "duplicate judgment for ({query}, {doc})"
            )));
        }
        Ok(())
    }

    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String, u32)>,
    {
        let mut qrels = Self::new();
        for (q, d, g) in entries {
            qrels.add(q, d, g)?;
        }
        Ok(qrels)
    }

    pub fn grade(&self, query: &str, doc: &str) -> u32 {
        self.grades
            .get(query)
            .and_then(|m| m.get(doc))
            .copied()
            .unwrap_or(0)
    }

    pub fn is_relevant(&self, query: &str, doc: &str) -> bool {
        self.grade(query, doc) >= 1
    }

    pub fn has_query(&self, query: &str) -> bool {
        self.grades.contains_key(query)
    }

    /// Number of judged-relevant documents for the query.
    pub fn relevant_count(&self, query: &str) -> usize {
        self.grades
            .get(query)
            .map(|m| m.values().filter(|&&g| g >= 1).count())
            .unwrap_or(0)
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.grades.keys().map(|s| s.as_str())
    }

    /// Judged grades for a query, unordered.
    pub fn grades_for(&self, query: &str) -> impl Iterator<Item = (&str, u32)> {
        self.grades
            .get(query)
            .into_iter()
            .flat_map(|m| m.iter().map(|(d, &g)| (d.as_str(), g)))
    }
}

/// Reads TREC qrels lines `qid 0 docid grade` (whitespace-separated).
pub fn read_qrels(path: impl AsRef<Path>) -> Result<Qrels> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let reader = BufReader::new(File::open(path)?);
    let mut qrels = Qrels::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                path: display,
                line: idx + 1,
                msg: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let grade: u32 = fields[3].parse().map_err(|e| Error::Parse {
            path: display.clone(),
            line: idx + 1,
            msg: format!("grade: {e}"),
        })?;
        qrels.add(fields[0], fields[2], grade).map_err(|e| Error::Parse {
            path: display.clone(),
            line: idx + 1,
            msg: e.to_string(),
        })?;
    }
    Ok(qrels)
}

/// Writes rankings in TREC run format: `qid Q0 docid rank score tag`.
pub fn write_run(w: &mut impl Write, lists: &[RankedList], tag: &str) -> std::io::Result<()> {
    for list in lists {
        for (rank, (doc, score)) in list.entries().iter().enumerate() {
            writeln!(w, "{} Q0 {} {} {:.6} {}", list.query_id, doc, rank + 1, score, tag)?;
        }
    }
    Ok(())
}

/// Reads a TREC run file into per-query rankings, re-sorted by
/// (score desc, doc id asc) and ordered by query id.
pub fn read_run(path: impl AsRef<Path>) -> Result<Vec<RankedList>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let reader = BufReader::new(File::open(path)?);
    let mut per_query: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                path: display,
                line: idx + 1,
                msg: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let score: f64 = fields[4].parse().map_err(|e| Error::Parse {
            path: display.clone(),
            line: idx + 1,
            msg: format!("score: {e}"),
        })?;
        let entries = per_query.entry(fields[0].to_string()).or_default();
        if entries.iter().any(|(doc, _)| doc == fields[2]) {
            return Err(Error::Parse {
                path: display,
                line: idx + 1,
                msg: format!("document {:?} listed twice for query {:?}", fields[2], fields[0]),
            });
        }
        entries.push((fields[2].to_string(), score));
    }
    Ok(per_query
        .into_iter()
        .map(|(query_id, scores)| RankedList::from_scores(query_id, scores, usize::MAX))
        .collect())
}

/// Average precision: the mean, over all judged-relevant documents, of the
/// precision at each relevant rank; unretrieved relevant documents count as
/// misses. Undefined (`None`) when the query has no relevant document.
pub fn average_precision(ranking: &RankedList, qrels: &Qrels) -> Option<f64> {
    let total_relevant = qrels.relevant_count(&ranking.query_id);
    if total_relevant == 0 {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (idx, (doc, _)) in ranking.entries().iter().enumerate() {
        if qrels.is_relevant(&ranking.query_id, doc) {
            hits += 1;
            sum += hits as f64 / (idx + 1) as f64;
        }
    }
    Some(sum / total_relevant as f64)
}

/// Reciprocal of the rank of the first relevant document, 0 if none is
/// retrieved.
pub fn reciprocal_rank(ranking: &RankedList, qrels: &Qrels) -> f64 {
    for (idx, (doc, _)) in ranking.entries().iter().enumerate() {
        if qrels.is_relevant(&ranking.query_id, doc) {
            return 1.0 / (idx + 1) as f64;
        }
    }
    0.0
}

/// Fraction of the top `k` that is relevant.
pub fn precision_at_k(ranking: &RankedList, qrels: &Qrels, k: usize) -> f64 {
    assert!(k >= 1, "k must be >= 1");
    let hits = ranking
        .entries()
        .iter()
        .take(k)
        .filter(|(doc, _)| qrels.is_relevant(&ranking.query_id, doc))
        .count();
    hits as f64 / k as f64
}

/// Normalized discounted cumulative gain at `k`, with gains `2^grade - 1`
/// and a `log2(rank + 1)` discount.
pub fn ndcg_at_k(ranking: &RankedList, qrels: &Qrels, k: usize) -> f64 {
    assert!(k >= 1, "k must be >= 1");
    let gain = |grade: u32| -> f64 { (1u64 << grade.min(62)) as f64 - 1.0 };
    let dcg: f64 = ranking
        .entries()
        .iter()
        .take(k)
        .enumerate()
        .map(|(idx, (doc, _))| gain(qrels.grade(&ranking.query_id, doc)) / ((idx + 2) as f64).log2())
        .sum();

    let mut ideal: Vec<u32> = qrels
        .grades_for(&ranking.query_id)
        .map(|(_, g)| g)
        .filter(|&g| g >= 1)
        .collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(idx, &g)| gain(g) / ((idx + 2) as f64).log2())
        .sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// A requested metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    Map,
    Mrr,
    PrecisionAt(usize),
    NdcgAt(usize),
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if lower == "map" {
            return Ok(Metric::Map);
        }
        if lower == "mrr" {
            return Ok(Metric::Mrr);
        }
        if let Some(k) = lower.strip_prefix("p@") {
            let k: usize = k
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad metric {s:?}")))?;
            if k == 0 {
                return Err(Error::InvalidParameter("p@0 is not a metric".into()));
            }
            return Ok(Metric::PrecisionAt(k));
        }
        if let Some(k) = lower.strip_prefix("ndcg@") {
            let k: usize = k
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad metric {s:?}")))?;
            if k == 0 {
                return Err(Error::InvalidParameter("ndcg@0 is not a metric".into()));
            }
            return Ok(Metric::NdcgAt(k));
        }
        Err(Error::InvalidParameter(format!(
            "unknown metric {s:?} (expected map, mrr, p@K or ndcg@K)"
        )))
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Map => write!(f, "map"),
            Metric::Mrr => write!(f, "mrr"),
            Metric::PrecisionAt(k) => write!(f, "p@{k}"),
            Metric::NdcgAt(k) => write!(f, "ndcg@{k}"),
        }
    }
}

/// Per-query values and means for each requested metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub per_query: BTreeMap<String, Vec<(Metric, f64)>>,
    pub means: Vec<(Metric, f64)>,
    /// Queries evaluated (with at least one judged-relevant document).
    pub evaluated_queries: usize,
    /// Queries dropped: absent from the qrels or without relevant documents.
    pub skipped_queries: Vec<String>,
}

/// Evaluates rankings against judgments.
///
/// Each ranking is truncated to `depth` first. Queries missing from the
/// qrels, or with no judged-relevant document, are skipped and reported.
/// Means are arithmetic over the evaluated queries; with none, all means
/// are zero.
pub fn evaluate_run(
    runs: &[RankedList],
    qrels: &Qrels,
    metrics: &[Metric],
    depth: usize,
) -> MetricReport {
    let mut per_query = BTreeMap::new();
    let mut skipped = Vec::new();
    let mut sums: Vec<f64> = vec![0.0; metrics.len()];
    let mut evaluated = 0usize;

    let mut sorted: Vec<&RankedList> = runs.iter().collect();
    sorted.sort_by(|a, b| a.query_id.cmp(&b.query_id));

    for run in sorted {
        if !qrels.has_query(&run.query_id) || qrels.relevant_count(&run.query_id) == 0 {
            log::warn!("query {} has no relevant judgments; skipping", run.query_id);
            skipped.push(run.query_id.clone());
            continue;
        }
        let truncated = run.truncated(depth);
        let values: Vec<(Metric, f64)> = metrics
            .iter()
            .map(|metric| {
                let value = match metric {
                    Metric::Map => average_precision(&truncated, qrels).unwrap_or(0.0),
                    Metric::Mrr => reciprocal_rank(&truncated, qrels),
                    Metric::PrecisionAt(k) => precision_at_k(&truncated, qrels, *k),
                    Metric::NdcgAt(k) => ndcg_at_k(&truncated, qrels, *k),
                };
                (*metric, value)
            })
            .collect();
        for (idx, (_, value)) in values.iter().enumerate() {
            sums[idx] += value;
        }
        evaluated += 1;
        per_query.insert(run.query_id.clone(), values);
    }

    let means = metrics
        .iter()
        .zip(&sums)
        .map(|(metric, sum)| {
            let mean = if evaluated == 0 { 0.0 } else { sum / evaluated as f64 };
            (*metric, mean)
        })
        .collect();

    MetricReport {
        per_query,
        means,
        evaluated_queries: evaluated,
        skipped_queries: skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn list(qid: &str, docs: &[(&str, f64)]) -> RankedList {
        RankedList::from_scores(
            qid,
            docs.iter().map(|&(d, s)| (d.to_string(), s)).collect(),
            usize::MAX,
        )
    }

    fn qrels(entries: &[(&str, &str, u32)]) -> Qrels {
        Qrels::from_entries(
            entries
                .iter()
                .map(|&(q, d, g)| (q.to_string(), d.to_string(), g)),
        )
        .unwrap()
    }

    #[test]
    fn average_precision_examples() {
        let q = qrels(&[("q", "d1", 1), ("q", "d3", 1)]);
        let run = list("q", &[("d1", 3.0), ("d2", 2.0), ("d3", 1.0)]);
        let ap = average_precision(&run, &q).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-12);

        // All relevant retrieved first.
        let run = list("q", &[("d1", 3.0), ("d3", 2.0), ("d2", 1.0)]);
        assert!((average_precision(&run, &q).unwrap() - 1.0).abs() < 1e-12);

        // No relevant retrieved.
        let run = list("q", &[("d2", 1.0)]);
        assert_eq!(average_precision(&run, &q).unwrap(), 0.0);

        // Undefined when the query has no relevant documents.
        let empty = qrels(&[("q", "d1", 0)]);
        assert!(average_precision(&run, &empty).is_none());
    }

    #[test]
    fn reciprocal_rank_examples() {
        let q = qrels(&[("q", "d9", 1)]);
        assert_eq!(reciprocal_rank(&list("q", &[("d1", 2.0), ("d9", 1.0)]), &q), 0.5);
        assert_eq!(reciprocal_rank(&list("q", &[("d9", 2.0)]), &q), 1.0);
        assert_eq!(reciprocal_rank(&list("q", &[("d1", 2.0)]), &q), 0.0);
    }

    #[test]
    fn precision_and_ndcg_examples() {
        let q = qrels(&[("q", "d1", 1)]);
        let run = list("q", &[("d1", 2.0), ("d2", 1.0)]);
        assert_eq!(precision_at_k(&run, &q, 2), 0.5);

        // Ideal ordering scores 1.
        let graded = qrels(&[("q", "d1", 2), ("q", "d2", 1)]);
        let ideal = list("q", &[("d1", 2.0), ("d2", 1.0)]);
        assert!((ndcg_at_k(&ideal, &graded, 2) - 1.0).abs() < 1e-12);
        let swapped = list("q", &[("d2", 2.0), ("d1", 1.0)]);
        assert!(ndcg_at_k(&swapped, &graded, 2) < 1.0);

        // Single graded item at rank 1 with k = 1.
        let single = qrels(&[("q", "d1", 1)]);
        assert!((ndcg_at_k(&list("q", &[("d1", 1.0)]), &single, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evaluate_run_means_and_skips() {
        let q = qrels(&[("q1", "d1", 1), ("q2", "d2", 1), ("q3", "d0", 0)]);
        let runs = vec![
            list("q1", &[("d1", 2.0)]),                 // AP 1.0
            list("q2", &[("d9", 2.0), ("d2", 1.0)]),    // AP 0.5
            list("q3", &[("d5", 1.0)]),                 // no relevant: skipped
            list("q4", &[("d5", 1.0)]),                 // not judged: skipped
        ];
        let report = evaluate_run(&runs, &q, &[Metric::Map, Metric::Mrr], 1000);
        assert_eq!(report.evaluated_queries, 2);
        assert_eq!(report.skipped_queries, vec!["q3".to_string(), "q4".to_string()]);
        let map = report.means.iter().find(|(m, _)| *m == Metric::Map).unwrap().1;
        assert!((map - 0.75).abs() < 1e-12);

        // Deterministic across invocations.
        let again = evaluate_run(&runs, &q, &[Metric::Map, Metric::Mrr], 1000);
        assert_eq!(report, again);

        // Empty run: zero means, nothing evaluated.
        let report = evaluate_run(&[], &q, &[Metric::Map], 1000);
        assert_eq!(report.evaluated_queries, 0);
        assert_eq!(report.means, vec![(Metric::Map, 0.0)]);
    }

    #[test]
    fn depth_truncates_before_scoring() {
        let q = qrels(&[("q", "d1", 1)]);
        let run = list("q", &[("d2", 3.0), ("d3", 2.0), ("d1", 1.0)]);
        let deep = evaluate_run(std::slice::from_ref(&run), &q, &[Metric::Map], 1000);
        let shallow = evaluate_run(&[run], &q, &[Metric::Map], 2);
        assert!(deep.means[0].1 > 0.0);
        assert_eq!(shallow.means[0].1, 0.0);
    }

    #[test]
    fn run_file_round_trip() {
        let lists = vec![
            list("q1", &[("d1", 2.0), ("d2", 1.0)]),
            list("q2", &[("d3", 0.5)]),
        ];
        let mut bytes = Vec::new();
        write_run(&mut bytes, &lists, "test").unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "q1 Q0 d1 1 2.000000 test"
        );

        let dir = std::env::temp_dir().join("tim-eval-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.txt");
        std::fs::write(&path, &text).unwrap();
        let loaded = read_run(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].doc_ids().collect::<Vec<_>>(), vec!["d1", "d2"]);

        let dup = dir.join("dup_run.txt");
        std::fs::write(&dup, "q1 Q0 d1 1 2.0 t\nq1 Q0 d1 2 1.0 t\n").unwrap();
        assert!(matches!(read_run(&dup), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn qrels_reject_duplicates() {
        let mut q = Qrels::new();
        q.add("q", "d", 1).unwrap();
        assert!(q.add("q", "d", 2).is_err());
    }

    #[test]
    fn metric_parsing() {
        assert_eq!("map".parse::<Metric>().unwrap(), Metric::Map);
        assert_eq!("P@10".parse::<Metric>().unwrap(), Metric::PrecisionAt(10));
        assert_eq!("ndcg@5".parse::<Metric>().unwrap(), Metric::NdcgAt(5));
        assert!("p@0".parse::<Metric>().is_err());
        assert!("foo".parse::<Metric>().is_err());
    }

    proptest! {
        /// Metrics stay in [0, 1] and are invariant under positive scaling
        /// of the scores (order-preserving transforms).
        #[test]
        fn metrics_bounded_and_scale_invariant(
            scores in proptest::collection::vec(0.0f64..100.0, 1..20),
            rel_mask in proptest::collection::vec(any::<bool>(), 1..20),
            scale in 0.1f64..10.0,
        ) {
            let docs: Vec<(String, f64)> = scores
                .iter()
                .enumerate()
                .map(|(i, &s)| (format!("d{i}"), s))
                .collect();
            let entries: Vec<(String, String, u32)> = rel_mask
                .iter()
                .enumerate()
                .map(|(i, &r)| ("q".to_string(), format!("d{i}"), r as u32))
                .collect();
            let q = Qrels::from_entries(entries).unwrap();
            let run = RankedList::from_scores("q", docs.clone(), usize::MAX);
            let scaled = RankedList::from_scores(
                "q",
                docs.iter().map(|(d, s)| (d.clone(), s * scale)).collect(),
                usize::MAX,
            );
            let metrics = [Metric::Map, Metric::Mrr, Metric::PrecisionAt(3), Metric::NdcgAt(5)];
            let a = evaluate_run(&[run], &q, &metrics, 1000);
            let b = evaluate_run(&[scaled], &q, &metrics, 1000);
            for ((_, va), (_, vb)) in a.means.iter().zip(&b.means) {
                prop_assert!((0.0..=1.0).contains(va));
                prop_assert!((va - vb).abs() < 1e-12);
            }
        }
    }
}
