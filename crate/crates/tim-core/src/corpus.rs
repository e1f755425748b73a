//! Corpus ingestion, tokenization and inverted-index construction.
//!
//! Documents arrive as JSONL records (`{"id": ..., "text": ...}`) or TREC
//! SGML (`<DOC>` blocks with `<DOCNO>` and `<TEXT>`); query topics come from
//! TREC topic files, title field only. The index maps each term to postings
//! of (document ordinal, term frequency) plus collection statistics, and
//! persists to a single deterministic binary file.
//!
//! # Index file layout (version 1)
//!
//! All fixed-width integers are little-endian; `varint` is unsigned LEB128.
//!
//! ```text
//! magic           4 bytes   "TIMX"
//! version         u32       1
//! doc_count       u64       N
//! for each document, in ordinal (ingestion) order:
//!     id_len      u32
//!     id          id_len bytes of UTF-8
//!     doc_length  u64       token count
//! term_count      u64
//! for each term, in lexicographic byte order:
//!     term_len    u32
//!     term        term_len bytes of UTF-8
//!     coll_freq   u64       total occurrences across the corpus
//!     df          u64       number of postings
//!     postings    df x { varint doc-ordinal delta, varint tf }
//! ```
//!
//! The first posting stores its ordinal directly; each subsequent posting
//! stores the gap to the previous ordinal. Building the same documents in
//! the same order always produces identical bytes.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mixture::CountHistogram;

/// A tokenized document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

/// Lowercases and splits on any non-alphanumeric character, dropping empty
/// tokens. No stemming, no stopword removal.
pub fn tokenize(text: &str) -> Vec<String> {
    Tokenizer::default().tokenize(text)
}

/// Tokenizer with optional plural stemming and stopword removal.
#[derive(Debug, Clone, Default)]
pub struct Tokenizer {
    stem: bool,
    stopwords: Option<HashSet<String>>,
}

impl Tokenizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_stemming(mut self, stem: bool) -> Self {
        self.stem = stem;
        self
    }

    pub fn with_stopwords(mut self, stopwords: HashSet<String>) -> Self {
        self.stopwords = Some(stopwords);
        self
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let lowered = text.to_lowercase();
        lowered
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .filter(|t| {
                self.stopwords
                    .as_ref()
                    .map(|s| !s.contains(*t))
                    .unwrap_or(true)
            })
            .map(|t| {
                if self.stem {
                    s_stem(t)
                } else {
                    t.to_string()
                }
            })
            .collect()
    }
}

/// Plural s-stemmer: IES -> Y (except aies, eies), ES -> E (except aes,
/// ees, oes), trailing S dropped (except us, ss).
fn s_stem(token: &str) -> String {
    let b = token.as_bytes();
    let n = b.len();
    if n > 3 && token.ends_with("ies") && !token.ends_with("aies") && !token.ends_with("eies") {
        return format!("{}y", &token[..n - 3]);
    }
    if n > 3
        && token.ends_with("es")
        && !token.ends_with("aes")
        && !token.ends_with("ees")
        && !token.ends_with("oes")
    {
        return token[..n - 1].to_string();
    }
    if n > 2 && token.ends_with('s') && !token.ends_with("us") && !token.ends_with("ss") {
        return token[..n - 1].to_string();
    }
    token.to_string()
}

/// Supported corpus file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    TrecSgml,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "trec-sgml" => Ok(CorpusFormat::TrecSgml),
            other => Err(Error::InvalidParameter(format!(
                "unknown corpus format {other:?} (expected jsonl or trec-sgml)"
            ))),
        }
    }
}

#[derive(Deserialize)]
struct RawJsonDoc {
    id: String,
    text: String,
}

/// Streams documents out of a corpus file, tokenizing as it goes.
/// Duplicate document ids and malformed records surface as errors carrying
/// the offending line number.
pub fn ingest_corpus(
    path: impl AsRef<Path>,
    format: CorpusFormat,
    tokenizer: &Tokenizer,
) -> Result<Box<dyn Iterator<Item = Result<Document>>>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let display = path.display().to_string();
    match format {
        CorpusFormat::Jsonl => Ok(Box::new(JsonlStream {
            lines: reader.lines(),
            line_no: 0,
            seen: HashSet::new(),
            tokenizer: tokenizer.clone(),
            path: display,
        })),
        CorpusFormat::TrecSgml => Ok(Box::new(TrecSgmlStream {
            lines: reader.lines(),
            line_no: 0,
            seen: HashSet::new(),
            tokenizer: tokenizer.clone(),
            path: display,
        })),
    }
}

struct JsonlStream {
    lines: std::io::Lines<BufReader<File>>,
    line_no: usize,
    seen: HashSet<String>,
    tokenizer: Tokenizer,
    path: String,
}

impl Iterator for JsonlStream {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawJsonDoc = match serde_json::from_str(&line) {
                Ok(raw) => raw,
                Err(e) => {
                    return Some(Err(Error::Parse {
                        path: self.path.clone(),
                        line: self.line_no,
                        msg: e.to_string(),
                    }))
                }
            };
            if !self.seen.insert(raw.id.clone()) {
                return Some(Err(Error::DuplicateDocId {
                    doc_id: raw.id,
                    line: self.line_no,
                }));
            }
            return Some(Ok(Document {
                tokens: self.tokenizer.tokenize(&raw.text),
                doc_id: raw.id,
            }));
        }
    }
}

/// Removes `<...>` tag spans, replacing each with a separator.
fn strip_tags(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut in_tag = false;
    for c in line.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => {
                in_tag = false;
                out.push(' ');
            }
            c if !in_tag => out.push(c),
            _ => {}
        }
    }
    out
}

fn between<'a>(line: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = line.find(open)? + open.len();
    let rest = &line[start..];
    match rest.find(close) {
        Some(end) => Some(&rest[..end]),
        None => Some(rest),
    }
}

struct TrecSgmlStream {
    lines: std::io::Lines<BufReader<File>>,
    line_no: usize,
    seen: HashSet<String>,
    tokenizer: Tokenizer,
    path: String,
}

impl TrecSgmlStream {
    fn parse_error(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.line_no,
            msg: msg.into(),
        }
    }
}

impl Iterator for TrecSgmlStream {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut in_doc = false;
        let mut in_text = false;
        let mut docno: Option<String> = None;
        let mut text = String::new();
        loop {
            let line = match self.lines.next() {
                Some(Ok(line)) => line,
                Some(Err(e)) => return Some(Err(e.into())),
                None => {
                    if in_doc {
                        return Some(Err(self.parse_error("unterminated <DOC> block")));
                    }
                    return None;
                }
            };
            self.line_no += 1;

            if !in_doc {
                if line.contains("<DOC>") {
                    in_doc = true;
                }
                continue;
            }
            if line.contains("<DOCNO>") {
                match between(&line, "<DOCNO>", "</DOCNO>") {
                    Some(id) => docno = Some(id.trim().to_string()),
                    None => return Some(Err(self.parse_error("unterminated <DOCNO>"))),
                }
                continue;
            }
            if let Some(start) = line.find("<TEXT>") {
                in_text = true;
                let rest = &line[start + "<TEXT>".len()..];
                if let Some(end) = rest.find("</TEXT>") {
                    text.push_str(&strip_tags(&rest[..end]));
                    text.push('\n');
                    in_text = false;
                } else {
                    text.push_str(&strip_tags(rest));
                    text.push('\n');
                }
                continue;
            }
            if in_text {
                if let Some(end) = line.find("</TEXT>") {
                    text.push_str(&strip_tags(&line[..end]));
                    text.push('\n');
                    in_text = false;
                } else {
                    text.push_str(&strip_tags(&line));
                    text.push('\n');
                }
                continue;
            }
            if line.contains("</DOC>") {
                let doc_id = match docno.take() {
                    Some(id) if !id.is_empty() => id,
                    _ => return Some(Err(self.parse_error("<DOC> block without <DOCNO>"))),
                };
                if !self.seen.insert(doc_id.clone()) {
                    return Some(Err(Error::DuplicateDocId {
                        doc_id,
                        line: self.line_no,
                    }));
                }
                return Some(Ok(Document {
                    tokens: self.tokenizer.tokenize(&text),
                    doc_id,
                }));
            }
        }
    }
}

/// A TREC topic: its number and title text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    pub number: String,
    pub title: String,
}

/// Reads a TREC topic file, extracting the title field of every topic.
pub fn read_trec_topics(path: impl AsRef<Path>) -> Result<Vec<Topic>> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let reader = BufReader::new(File::open(path)?);

    let mut topics = Vec::new();
    let mut number: Option<String> = None;
    let mut title: Option<String> = None;
    let mut in_title = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.starts_with('<') {
            in_title = false;
        }
        if let Some(rest) = between(trimmed, "<num>", "</num>") {
            if trimmed.contains("<num>") {
                let cleaned = rest.replace("Number:", "");
                number = Some(cleaned.trim().to_string());
                continue;
            }
        }
        if let Some(rest) = between(trimmed, "<title>", "</title>") {
            if trimmed.contains("<title>") {
                let cleaned = rest.replace("Topic:", "");
                title = Some(cleaned.trim().to_string());
                in_title = true;
                continue;
            }
        }
        if trimmed.contains("</top>") {
            match (number.take(), title.take()) {
                (Some(number), Some(title)) if !number.is_empty() && !title.is_empty() => {
                    topics.push(Topic { number, title });
                }
                _ => {
                    return Err(Error::Parse {
                        path: display,
                        line: idx + 1,
                        msg: "topic without number or title".into(),
                    });
                }
            }
            continue;
        }
        if in_title && !trimmed.is_empty() {
            // Multi-line title: keep appending until the next tag.
            if let Some(t) = title.as_mut() {
                t.push(' ');
                t.push_str(trimmed);
            }
        }
    }
    Ok(topics)
}

/// One posting: document ordinal and term frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct TermEntry {
    postings: Vec<Posting>,
    collection_freq: u64,
}

/// Immutable term -> postings index with collection statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    terms: BTreeMap<String, TermEntry>,
    doc_ids: Vec<String>,
    doc_ordinals: HashMap<String, u32>,
    doc_lengths: Vec<u64>,
}

/// Builds an index over the given documents.
///
/// Documents must have unique ids and at least one token each; an empty
/// stream is an error.
pub fn build_index<I>(docs: I) -> Result<InvertedIndex>
where
    I: IntoIterator<Item = Document>,
{
    build_index_from_results(docs.into_iter().map(Ok))
}

/// Streaming variant of [`build_index`]: consumes a fallible document
/// stream (e.g. straight from [`ingest_corpus`]) without collecting it.
pub fn build_index_from_results<I>(docs: I) -> Result<InvertedIndex>
where
    I: IntoIterator<Item = Result<Document>>,
{
    let mut index = InvertedIndex {
        terms: BTreeMap::new(),
        doc_ids: Vec::new(),
        doc_ordinals: HashMap::new(),
        doc_lengths: Vec::new(),
    };
    for (position, doc) in docs.into_iter().enumerate() {
        let doc = doc?;
        if doc.tokens.is_empty() {
            return Err(Error::EmptyDocument(doc.doc_id));
        }
        if index.doc_ordinals.contains_key(&doc.doc_id) {
            return Err(Error::DuplicateDocId {
                doc_id: doc.doc_id,
                line: position + 1,
            });
        }
        let ordinal = index.doc_ids.len() as u32;
        index.doc_ordinals.insert(doc.doc_id.clone(), ordinal);
        index.doc_ids.push(doc.doc_id);
        index.doc_lengths.push(doc.tokens.len() as u64);

        let mut tfs: BTreeMap<&str, u32> = BTreeMap::new();
        for token in &doc.tokens {
            *tfs.entry(token.as_str()).or_insert(0) += 1;
        }
        for (term, tf) in tfs {
            let entry = index
                .terms
                .entry(term.to_string())
                .or_insert_with(|| TermEntry {
                    postings: Vec::new(),
                    collection_freq: 0,
                });
            entry.postings.push(Posting { doc: ordinal, tf });
            entry.collection_freq += tf as u64;
        }
    }
    if index.doc_ids.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(index)
}

impl InvertedIndex {
    pub fn doc_count(&self) -> u64 {
        self.doc_ids.len() as u64
    }

    pub fn doc_id(&self, ordinal: u32) -> &str {
        &self.doc_ids[ordinal as usize]
    }

    pub fn ordinal(&self, doc_id: &str) -> Option<u32> {
        self.doc_ordinals.get(doc_id).copied()
    }

    pub fn doc_length(&self, ordinal: u32) -> u64 {
        self.doc_lengths[ordinal as usize]
    }

    pub fn postings(&self, term: &str) -> Option<&[Posting]> {
        self.terms.get(term).map(|e| e.postings.as_slice())
    }

    /// Number of documents containing the term.
    pub fn df(&self, term: &str) -> u64 {
        self.terms
            .get(term)
            .map(|e| e.postings.len() as u64)
            .unwrap_or(0)
    }

    /// Total occurrences of the term across the corpus.
    pub fn collection_freq(&self, term: &str) -> u64 {
        self.terms.get(term).map(|e| e.collection_freq).unwrap_or(0)
    }

    /// Terms in lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(|s| s.as_str())
    }

    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    /// Total token count of the corpus.
    pub fn total_tokens(&self) -> u64 {
        self.doc_lengths.iter().sum()
    }

    pub fn avg_doc_length(&self) -> f64 {
        if self.doc_ids.is_empty() {
            0.0
        } else {
            self.total_tokens() as f64 / self.doc_ids.len() as f64
        }
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(b"TIMX")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.doc_ids.len() as u64).to_le_bytes())?;
        for (id, &len) in self.doc_ids.iter().zip(&self.doc_lengths) {
            w.write_all(&(id.len() as u32).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
            w.write_all(&len.to_le_bytes())?;
        }
        w.write_all(&(self.terms.len() as u64).to_le_bytes())?;
        for (term, entry) in &self.terms {
            w.write_all(&(term.len() as u32).to_le_bytes())?;
            w.write_all(term.as_bytes())?;
            w.write_all(&entry.collection_freq.to_le_bytes())?;
            w.write_all(&(entry.postings.len() as u64).to_le_bytes())?;
            let mut prev = 0u64;
            for (i, posting) in entry.postings.iter().enumerate() {
                let ord = posting.doc as u64;
                let delta = if i == 0 { ord } else { ord - prev };
                prev = ord;
                write_varint(w, delta)?;
                write_varint(w, posting.tf as u64)?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"TIMX" {
            return Err(Error::IndexFormat("bad magic bytes".into()));
        }
        let version = read_u32(r)?;
        if version != 1 {
            return Err(Error::IndexFormat(format!("unsupported version {version}")));
        }
        let doc_count = read_u64(r)? as usize;
        let mut doc_ids = Vec::with_capacity(doc_count);
        let mut doc_lengths = Vec::with_capacity(doc_count);
        let mut doc_ordinals = HashMap::with_capacity(doc_count);
        for ordinal in 0..doc_count {
            let id = read_string(r)?;
            doc_lengths.push(read_u64(r)?);
            doc_ordinals.insert(id.clone(), ordinal as u32);
            doc_ids.push(id);
        }
        if doc_ordinals.len() != doc_count {
            return Err(Error::IndexFormat("duplicate document ids".into()));
        }

        let term_count = read_u64(r)? as usize;
        let mut terms = BTreeMap::new();
        for _ in 0..term_count {
            let term = read_string(r)?;
            let collection_freq = read_u64(r)?;
            let df = read_u64(r)? as usize;
            if df > doc_count {
                return Err(Error::IndexFormat(format!(
                    "term {term:?} has df {df} > doc count {doc_count}"
                )));
            }
            let mut postings = Vec::with_capacity(df);
            let mut ord = 0u64;
            let mut tf_sum = 0u64;
            for i in 0..df {
                let delta = read_varint(r)?;
                ord = if i == 0 { delta } else { ord + delta };
                if ord >= doc_count as u64 {
                    return Err(Error::IndexFormat(format!(
                        "posting ordinal {ord} out of range for term {term:?}"
                    )));
                }
                let tf = read_varint(r)?;
                tf_sum += tf;
                postings.push(Posting {
                    doc: ord as u32,
                    tf: tf as u32,
                });
            }
            if tf_sum != collection_freq {
                return Err(Error::IndexFormat(format!(
                    "term {term:?}: postings sum to {tf_sum}, header says {collection_freq}"
                )));
            }
            terms.insert(
                term,
                TermEntry {
                    postings,
                    collection_freq,
                },
            );
        }
        Ok(Self {
            terms,
            doc_ids,
            doc_ordinals,
            doc_lengths,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut file = std::io::BufWriter::new(File::create(path)?);
        self.write_to(&mut file)?;
        file.flush()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut file = BufReader::new(File::open(path)?);
        Self::read_from(&mut file)
    }
}

fn write_varint(w: &mut impl Write, mut value: u64) -> std::io::Result<()> {
    loop {
        let byte = (value & 0x7f) as u8;
        value >>= 7;
        if value == 0 {
            return w.write_all(&[byte]);
        }
        w.write_all(&[byte | 0x80])?;
    }
}

fn read_varint(r: &mut impl Read) -> Result<u64> {
    let mut value = 0u64;
    let mut shift = 0u32;
    loop {
        let mut byte = [0u8; 1];
        r.read_exact(&mut byte)?;
        if shift >= 64 {
            return Err(Error::IndexFormat("varint overflow".into()));
        }
        value |= ((byte[0] & 0x7f) as u64) << shift;
        if byte[0] & 0x80 == 0 {
            return Ok(value);
        }
        shift += 7;
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_string(r: &mut impl Read) -> Result<String> {
    let len = read_u32(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::IndexFormat(format!("invalid UTF-8: {e}")))
}

/// Per-term frequency statistics over the whole collection, with documents
/// not containing the term aggregated in the zero bucket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermStatistics {
    pub term: String,
    pub df: u64,
    pub tf_histogram: CountHistogram,
}

impl TermStatistics {
    /// Total documents, i.e. the histogram mass including the zero bucket.
    pub fn doc_count(&self) -> u64 {
        self.tf_histogram.total()
    }
}

/// Frequency statistics for one term. Unseen terms get all mass in the zero
/// bucket with df 0.
pub fn term_stats(index: &InvertedIndex, term: &str) -> TermStatistics {
    let mut tf_histogram = CountHistogram::new();
    let mut df = 0u64;
    if let Some(postings) = index.postings(term) {
        df = postings.len() as u64;
        for posting in postings {
            tf_histogram.add(posting.tf as u64, 1);
        }
    }
    tf_histogram.add(0, index.doc_count() - df);
    TermStatistics {
        term: term.to_string(),
        df,
        tf_histogram,
    }
}
