//! Immutable inverted index plus the extended collection statistics the
//! ranking functions need: per-document token and distinct-term counts,
//! collection and document frequencies, and their collection-wide sums.
//!
//! Build is single-writer; once built the index never mutates and can be
//! shared freely across query workers. The on-disk format is a directory
//! holding a versioned JSON manifest (magic, format version, pipeline
//! config and fingerprint, statistics, per-file checksums), a dictionary
//! file of sorted terms, a postings file with delta-encoded ordinals, and a
//! doc-table file. Saving the same index twice produces byte-identical
//! files.
//!
//! Empty documents (token stream empty after preprocessing) are indexed so
//! that the document count is honest, but they are excluded from retrieval:
//! every scoring formula divides by the document length.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, BufRead};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textprep::{tokenize, TokenPipelineConfig};

/// Dense document handle, assigned in corpus order.
pub type DocOrdinal = u32;

const MAGIC: &str = "spud-index";
const FORMAT_VERSION: u32 = 1;
const DOCS_FILE: &str = "docs.dat";
const DICT_FILE: &str = "dictionary.dat";
const POSTINGS_FILE: &str = "postings.dat";
const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("duplicate doc_id: {0}")]
    DuplicateDocId(String),
    #[error("corpus is empty: at least one document is required")]
    EmptyCorpus,
    #[error("corpus read failed at line {line}: {source}")]
    CorpusIo { line: u64, source: io::Error },
    #[error("corpus line {line} is not a document record: {message}")]
    CorpusFormat { line: u64, message: String },
    #[error("index io error: {0}")]
    Io(#[from] io::Error),
    #[error("{path} is not an index directory (magic {found:?})")]
    BadMagic { path: String, found: String },
    #[error("index format version {found} not supported (this build reads version {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("checksum mismatch in index file {file}")]
    ChecksumMismatch { file: String },
    #[error("index file {file} is truncated: {found} bytes, manifest says {expected}")]
    TruncatedFile { file: String, found: u64, expected: u64 },
    #[error("malformed index file {file}: {message}")]
    FormatError { file: String, message: String },
}

/// Per-document statistics: |d| (token count) and |d_vec| (distinct terms).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocStats {
    pub doc_id: String,
    pub length_tokens: u64,
    pub length_types: u64,
}

/// Collection-wide statistics. `total_tokens` is |c|, `sum_vector_lengths`
/// is the sum over documents of the distinct-term count, which also equals
/// the sum of document frequencies over the vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub n: u64,
    pub total_tokens: u64,
    pub vocab_size: u64,
    pub sum_vector_lengths: u64,
    pub avg_length_tokens: f64,
    pub avg_length_types: f64,
}

/// Postings for one term: document frequency, collection frequency, and
/// (ordinal, term frequency) pairs sorted by ordinal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostingsList {
    pub term: String,
    pub df: u64,
    pub cf: u64,
    pub postings: Vec<(DocOrdinal, u64)>,
}

impl PostingsList {
    /// Term frequency of this term in the given document, 0 if absent.
    pub fn tf(&self, ord: DocOrdinal) -> u64 {
        match self.postings.binary_search_by_key(&ord, |&(o, _)| o) {
            Ok(i) => self.postings[i].1,
            Err(_) => 0,
        }
    }
}

/// One corpus document before indexing.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct DocumentRecord {
    pub id: String,
    pub text: String,
}

/// Immutable term-to-postings index over a fixed corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    dictionary: BTreeMap<String, PostingsList>,
    docs: Vec<DocStats>,
    ordinals: BTreeMap<String, DocOrdinal>,
    stats: CollectionStats,
    pipeline: TokenPipelineConfig,
    pipeline_hash: String,
}

impl InvertedIndex {
    pub fn stats(&self) -> &CollectionStats {
        &self.stats
    }

    pub fn doc(&self, ord: DocOrdinal) -> &DocStats {
        &self.docs[ord as usize]
    }

    pub fn doc_count(&self) -> u64 {
        self.docs.len() as u64
    }

    pub fn doc_ordinal(&self, doc_id: &str) -> Option<DocOrdinal> {
        self.ordinals.get(doc_id).copied()
    }

    /// Documents in ordinal order.
    pub fn docs(&self) -> impl Iterator<Item = (DocOrdinal, &DocStats)> {
        self.docs.iter().enumerate().map(|(i, d)| (i as DocOrdinal, d))
    }

    /// True when the document can appear in a result list.
    pub fn retrievable(&self, ord: DocOrdinal) -> bool {
        self.docs[ord as usize].length_tokens > 0
    }

    /// Exact-match lookup on the post-pipeline term form.
    pub fn term_lookup(&self, term: &str) -> Option<&PostingsList> {
        self.dictionary.get(term)
    }

    /// All postings lists in lexicographic term order.
    pub fn terms(&self) -> impl Iterator<Item = &PostingsList> {
        self.dictionary.values()
    }

    /// The pipeline the corpus was indexed with; queries must use it too.
    pub fn pipeline(&self) -> &TokenPipelineConfig {
        &self.pipeline
    }

    pub fn pipeline_hash(&self) -> &str {
        &self.pipeline_hash
    }
}

/// Builds an index from a stream of documents. Duplicate doc ids and an
/// entirely empty corpus are build errors; a document whose token stream is
/// empty is indexed with zero lengths and excluded from retrieval.
pub fn build_index<I>(corpus: I, cfg: &TokenPipelineConfig) -> Result<InvertedIndex, IndexError>
where
    I: IntoIterator<Item = Result<DocumentRecord, IndexError>>,
{
    let mut dictionary: BTreeMap<String, PostingsList> = BTreeMap::new();
    let mut docs: Vec<DocStats> = Vec::new();
    let mut ordinals: BTreeMap<String, DocOrdinal> = BTreeMap::new();

    for record in corpus {
        let record = record?;
        let ord = docs.len() as DocOrdinal;
        if ordinals.insert(record.id.clone(), ord).is_some() {
            return Err(IndexError::DuplicateDocId(record.id));
        }
        let tokens = tokenize(&record.text, cfg);
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for t in &tokens {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
        docs.push(DocStats {
            doc_id: record.id,
            length_tokens: tokens.len() as u64,
            length_types: counts.len() as u64,
        });
        for (term, tf) in counts {
            let entry = dictionary.entry(term.to_string()).or_insert_with(|| PostingsList {
                term: term.to_string(),
                df: 0,
                cf: 0,
                postings: Vec::new(),
            });
            entry.df += 1;
            entry.cf += tf;
            entry.postings.push((ord, tf));
        }
    }

    if docs.is_empty() {
        return Err(IndexError::EmptyCorpus);
    }
    let stats = compute_stats(&docs, &dictionary);
    Ok(InvertedIndex {
        dictionary,
        docs,
        ordinals,
        stats,
        pipeline_hash: cfg.fingerprint(),
        pipeline: cfg.clone(),
    })
}

fn compute_stats(docs: &[DocStats], dictionary: &BTreeMap<String, PostingsList>) -> CollectionStats {
    let n = docs.len() as u64;
    let total_tokens: u64 = docs.iter().map(|d| d.length_tokens).sum();
    let sum_vector_lengths: u64 = docs.iter().map(|d| d.length_types).sum();
    CollectionStats {
        n,
        total_tokens,
        vocab_size: dictionary.len() as u64,
        sum_vector_lengths,
        avg_length_tokens: total_tokens as f64 / n as f64,
        avg_length_types: sum_vector_lengths as f64 / n as f64,
    }
}

/// Opens a JSON-lines corpus: one object per line with string fields `id`
/// and `text`. Blank lines are skipped. Errors carry the 1-based line
/// number.
pub fn read_corpus_jsonl(
    path: &Path,
) -> Result<impl Iterator<Item = Result<DocumentRecord, IndexError>>, IndexError> {
    let file = fs::File::open(path)?;
    let reader = io::BufReader::new(file);
    Ok(reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line_no = i as u64 + 1;
            match line {
                Err(e) => Some(Err(IndexError::CorpusIo { line: line_no, source: e })),
                Ok(l) if l.trim().is_empty() => None,
                Ok(l) => Some(serde_json::from_str::<DocumentRecord>(&l).map_err(|e| {
                    IndexError::CorpusFormat { line: line_no, message: e.to_string() }
                })),
            }
        }))
}

#[derive(Serialize, Deserialize)]
struct ManifestPipeline {
    lowercase: bool,
    stem: bool,
    stopwords: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct FileDigest {
    bytes: u64,
    sha256: String,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    magic: String,
    format_version: u32,
    pipeline_hash: String,
    pipeline: ManifestPipeline,
    stats: CollectionStats,
    files: BTreeMap<String, FileDigest>,
}

/// Writes the index as a directory. Existing files are overwritten; the
/// output for a given index is byte-identical across saves.
pub fn save_index(idx: &InvertedIndex, dir: &Path) -> Result<(), IndexError> {
    fs::create_dir_all(dir)?;
    let docs = encode_docs(&idx.docs);
    let (dict, postings) = encode_dictionary(&idx.dictionary);

    let mut files = BTreeMap::new();
    for (name, bytes) in [(DOCS_FILE, &docs), (DICT_FILE, &dict), (POSTINGS_FILE, &postings)] {
        files.insert(
            name.to_string(),
            FileDigest { bytes: bytes.len() as u64, sha256: crate::sha256_hex(bytes) },
        );
        fs::write(dir.join(name), bytes)?;
    }

    let manifest = Manifest {
        magic: MAGIC.to_string(),
        format_version: FORMAT_VERSION,
        pipeline_hash: idx.pipeline_hash.clone(),
        pipeline: ManifestPipeline {
            lowercase: idx.pipeline.lowercase,
            stem: idx.pipeline.stem,
            stopwords: idx.pipeline.stopword_list.iter().cloned().collect(),
        },
        stats: idx.stats.clone(),
        files,
    };
    let mut manifest_json =
        serde_json::to_string_pretty(&manifest).expect("manifest serialization cannot fail");
    manifest_json.push('\n');
    fs::write(dir.join(MANIFEST_FILE), manifest_json)?;
    Ok(())
}

/// Reads an index directory written by [`save_index`], verifying the magic
/// string, the format version, and each data file's length and checksum.
pub fn load_index(dir: &Path) -> Result<InvertedIndex, IndexError> {
    let manifest_text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let manifest: Manifest = serde_json::from_str(&manifest_text).map_err(|e| {
        IndexError::FormatError { file: MANIFEST_FILE.to_string(), message: e.to_string() }
    })?;
    if manifest.magic != MAGIC {
        return Err(IndexError::BadMagic {
            path: dir.display().to_string(),
            found: manifest.magic,
        });
    }
    if manifest.format_version != FORMAT_VERSION {
        return Err(IndexError::VersionMismatch {
            found: manifest.format_version,
            supported: FORMAT_VERSION,
        });
    }

    let mut contents: BTreeMap<&str, Vec<u8>> = BTreeMap::new();
    for name in [DOCS_FILE, DICT_FILE, POSTINGS_FILE] {
        let digest = manifest.files.get(name).ok_or_else(|| IndexError::FormatError {
            file: MANIFEST_FILE.to_string(),
            message: format!("manifest lists no entry for {}", name),
        })?;
        let bytes = fs::read(dir.join(name))?;
        if (bytes.len() as u64) < digest.bytes {
            return Err(IndexError::TruncatedFile {
                file: name.to_string(),
                found: bytes.len() as u64,
                expected: digest.bytes,
            });
        }
        if bytes.len() as u64 != digest.bytes || crate::sha256_hex(&bytes) != digest.sha256 {
            return Err(IndexError::ChecksumMismatch { file: name.to_string() });
        }
        contents.insert(name, bytes);
    }

    let docs = decode_docs(&contents[DOCS_FILE])?;
    let dictionary = decode_dictionary(&contents[DICT_FILE], &contents[POSTINGS_FILE], docs.len())?;

    let pipeline = TokenPipelineConfig {
        lowercase: manifest.pipeline.lowercase,
        stem: manifest.pipeline.stem,
        stopword_list: manifest.pipeline.stopwords.iter().cloned().collect::<BTreeSet<_>>(),
    };
    if pipeline.fingerprint() != manifest.pipeline_hash {
        return Err(IndexError::FormatError {
            file: MANIFEST_FILE.to_string(),
            message: "pipeline_hash does not match the stored pipeline config".to_string(),
        });
    }

    let recomputed = compute_stats(&docs, &dictionary);
    if recomputed != manifest.stats {
        return Err(IndexError::FormatError {
            file: MANIFEST_FILE.to_string(),
            message: "stored statistics disagree with the loaded postings".to_string(),
        });
    }

    let ordinals = docs
        .iter()
        .enumerate()
        .map(|(i, d)| (d.doc_id.clone(), i as DocOrdinal))
        .collect();
    Ok(InvertedIndex {
        dictionary,
        docs,
        ordinals,
        stats: recomputed,
        pipeline,
        pipeline_hash: manifest.pipeline_hash,
    })
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn encode_docs(docs: &[DocStats]) -> Vec<u8> {
    let mut out = Vec::new();
    push_u64(&mut out, docs.len() as u64);
    for d in docs {
        push_u32(&mut out, d.doc_id.len() as u32);
        out.extend_from_slice(d.doc_id.as_bytes());
        push_u64(&mut out, d.length_tokens);
        push_u64(&mut out, d.length_types);
    }
    out
}

fn encode_dictionary(dictionary: &BTreeMap<String, PostingsList>) -> (Vec<u8>, Vec<u8>) {
    let mut dict = Vec::new();
    let mut postings = Vec::new();
    push_u64(&mut dict, dictionary.len() as u64);
    for pl in dictionary.values() {
        let offset = postings.len() as u64;
        let mut prev = 0u64;
        for &(ord, tf) in &pl.postings {
            push_varint(&mut postings, ord as u64 - prev);
            push_varint(&mut postings, tf);
            prev = ord as u64;
        }
        push_u32(&mut dict, pl.term.len() as u32);
        dict.extend_from_slice(pl.term.as_bytes());
        push_u64(&mut dict, pl.df);
        push_u64(&mut dict, pl.cf);
        push_u64(&mut dict, offset);
        push_u64(&mut dict, postings.len() as u64 - offset);
    }
    (dict, postings)
}

/// Byte cursor with index-flavored errors.
struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    file: &'static str,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8], file: &'static str) -> Self {
        Cursor { buf, pos: 0, file }
    }

    fn fail(&self, message: &str) -> IndexError {
        IndexError::FormatError { file: self.file.to_string(), message: message.to_string() }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        if self.pos + n > self.buf.len() {
            return Err(self.fail("unexpected end of data"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn varint(&mut self) -> Result<u64, IndexError> {
        let mut v = 0u64;
        let mut shift = 0u32;
        loop {
            let byte = self.take(1)?[0];
            if shift >= 64 {
                return Err(self.fail("varint overflow"));
            }
            v |= u64::from(byte & 0x7f) << shift;
            if byte & 0x80 == 0 {
                return Ok(v);
            }
            shift += 7;
        }
    }

    fn string(&mut self) -> Result<String, IndexError> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| self.fail("non-UTF-8 string"))
    }

    fn at_end(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn decode_docs(buf: &[u8]) -> Result<Vec<DocStats>, IndexError> {
    let mut cur = Cursor::new(buf, DOCS_FILE);
    let count = cur.u64()? as usize;
    let mut docs = Vec::with_capacity(count);
    for _ in 0..count {
        let doc_id = cur.string()?;
        let length_tokens = cur.u64()?;
        let length_types = cur.u64()?;
        docs.push(DocStats { doc_id, length_tokens, length_types });
    }
    if !cur.at_end() {
        return Err(cur.fail("trailing bytes after doc table"));
    }
    Ok(docs)
}

fn decode_dictionary(
    dict_buf: &[u8],
    postings_buf: &[u8],
    doc_count: usize,
) -> Result<BTreeMap<String, PostingsList>, IndexError> {
    let mut cur = Cursor::new(dict_buf, DICT_FILE);
    let count = cur.u64()? as usize;
    let mut dictionary = BTreeMap::new();
    for _ in 0..count {
        let term = cur.string()?;
        let df = cur.u64()?;
        let cf = cur.u64()?;
        let offset = cur.u64()? as usize;
        let len = cur.u64()? as usize;
        if offset + len > postings_buf.len() {
            return Err(cur.fail("postings range out of bounds"));
        }
        let mut pcur = Cursor::new(&postings_buf[offset..offset + len], POSTINGS_FILE);
        let mut postings = Vec::with_capacity(df as usize);
        let mut prev = 0u64;
        for i in 0..df {
            let gap = pcur.varint()?;
            let tf = pcur.varint()?;
            let ord = prev + gap;
            if i > 0 && gap == 0 {
                return Err(pcur.fail("duplicate ordinal in postings"));
            }
            if ord >= doc_count as u64 {
                return Err(pcur.fail("posting ordinal beyond doc table"));
            }
            postings.push((ord as DocOrdinal, tf));
            prev = ord;
        }
        if !pcur.at_end() {
            return Err(pcur.fail("trailing bytes in postings block"));
        }
        dictionary.insert(term.clone(), PostingsList { term, df, cf, postings });
    }
    if !cur.at_end() {
        return Err(cur.fail("trailing bytes after dictionary"));
    }
    Ok(dictionary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain_cfg() -> TokenPipelineConfig {
        TokenPipelineConfig {
            lowercase: true,
            stopword_list: BTreeSet::new(),
            stem: false,
        }
    }

    fn doc(id: &str, text: &str) -> Result<DocumentRecord, IndexError> {
        Ok(DocumentRecord { id: id.to_string(), text: text.to_string() })
    }

    /// Four documents over two terms: d1 has t1 eight times and t2 twice,
    /// d2 and d4 each hold one t2, d3 holds three.
    pub(crate) fn toy_index() -> InvertedIndex {
        build_index(
            vec![
                doc("d1", "t1 t1 t1 t1 t1 t1 t1 t1 t2 t2"),
                doc("d2", "t2"),
                doc("d3", "t2 t2 t2"),
                doc("d4", "t2"),
            ],
            &plain_cfg(),
        )
        .unwrap()
    }

    #[test]
    fn toy_corpus_statistics() {
        let idx = toy_index();
        let s = idx.stats();
        assert_eq!(s.n, 4);
        assert_eq!(s.total_tokens, 15);
        assert_eq!(s.vocab_size, 2);
        assert_eq!(s.sum_vector_lengths, 5);

        let t1 = idx.term_lookup("t1").unwrap();
        assert_eq!((t1.df, t1.cf), (1, 8));
        assert_eq!(t1.postings, vec![(0, 8)]);
        let t2 = idx.term_lookup("t2").unwrap();
        assert_eq!((t2.df, t2.cf), (4, 7));
        assert_eq!(t2.postings, vec![(0, 2), (1, 1), (2, 3), (3, 1)]);
        assert!(idx.term_lookup("t3").is_none());

        assert_eq!(idx.doc(0).length_tokens, 10);
        assert_eq!(idx.doc(0).length_types, 2);
        assert_eq!(idx.doc(2).length_tokens, 3);
        assert_eq!(idx.doc(2).length_types, 1);
    }

    #[test]
    fn empty_document_indexed_but_not_retrievable() {
        let idx = build_index(vec![doc("a", "x y"), doc("b", "")], &plain_cfg()).unwrap();
        assert_eq!(idx.stats().n, 2);
        let b = idx.doc_ordinal("b").unwrap();
        assert_eq!(idx.doc(b).length_tokens, 0);
        assert_eq!(idx.doc(b).length_types, 0);
        assert!(!idx.retrievable(b));
        assert!(idx.retrievable(idx.doc_ordinal("a").unwrap()));
    }

    #[test]
    fn duplicate_doc_id_is_a_build_error() {
        let err = build_index(vec![doc("d", "x"), doc("d", "y")], &plain_cfg()).unwrap_err();
        match err {
            IndexError::DuplicateDocId(id) => assert_eq!(id, "d"),
            other => panic!("expected DuplicateDocId, got {:?}", other),
        }
    }

    #[test]
    fn empty_corpus_is_a_build_error() {
        let err = build_index(Vec::new(), &plain_cfg()).unwrap_err();
        assert!(matches!(err, IndexError::EmptyCorpus));
    }

    #[test]
    fn random_corpus_matches_recount_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let vocab: Vec<String> = (0..50).map(|i| format!("w{}", i)).collect();
        let mut records = Vec::new();
        let mut raw: Vec<Vec<String>> = Vec::new();
        for i in 0..100 {
            let len = rng.gen_range(0..40);
            let words: Vec<String> =
                (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].clone()).collect();
            raw.push(words.clone());
            records.push(doc(&format!("doc{}", i), &words.join(" ")));
        }
        let idx = build_index(records, &plain_cfg()).unwrap();

        // Naive recount over the raw token streams.
        let mut cf: BTreeMap<&str, u64> = BTreeMap::new();
        let mut df: BTreeMap<&str, u64> = BTreeMap::new();
        let mut postings: BTreeMap<&str, Vec<(DocOrdinal, u64)>> = BTreeMap::new();
        let mut total = 0u64;
        let mut sum_types = 0u64;
        for (i, words) in raw.iter().enumerate() {
            total += words.len() as u64;
            let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
            for w in words {
                *counts.entry(w.as_str()).or_insert(0) += 1;
            }
            sum_types += counts.len() as u64;
            for (w, c) in counts {
                *cf.entry(w).or_insert(0) += c;
                *df.entry(w).or_insert(0) += 1;
                postings.entry(w).or_default().push((i as DocOrdinal, c));
            }
        }

        let s = idx.stats();
        assert_eq!(s.total_tokens, total);
        assert_eq!(s.sum_vector_lengths, sum_types);
        assert_eq!(s.vocab_size, cf.len() as u64);
        for (term, pl) in cf.keys().map(|t| (*t, idx.term_lookup(t).unwrap())) {
            assert_eq!(pl.cf, cf[term], "cf({})", term);
            assert_eq!(pl.df, df[term], "df({})", term);
            assert_eq!(&pl.postings, &postings[term], "postings({})", term);
        }

        // Conservation identities.
        assert_eq!(idx.terms().map(|p| p.cf).sum::<u64>(), s.total_tokens);
        assert_eq!(idx.terms().map(|p| p.df).sum::<u64>(), s.sum_vector_lengths);
        for pl in idx.terms() {
            assert_eq!(pl.postings.len() as u64, pl.df);
            assert_eq!(pl.postings.iter().map(|&(_, tf)| tf).sum::<u64>(), pl.cf);
            assert!(pl.df <= pl.cf && pl.df <= s.n);
        }
    }

    #[test]
    fn save_load_round_trip_preserves_every_field() {
        let idx = toy_index();
        let dir = tempfile::tempdir().unwrap();
        save_index(&idx, dir.path()).unwrap();
        let loaded = load_index(dir.path()).unwrap();
        assert_eq!(idx, loaded);
    }

    #[test]
    fn second_save_is_byte_identical() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let vocab: Vec<String> = (0..200).map(|i| format!("term{}", i)).collect();
        let records: Vec<_> = (0..500)
            .map(|i| {
                let len = rng.gen_range(1..60);
                let words: Vec<String> =
                    (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].clone()).collect();
                doc(&format!("d{:04}", i), &words.join(" "))
            })
            .collect();
        let idx = build_index(records, &plain_cfg()).unwrap();

        let dir1 = tempfile::tempdir().unwrap();
        save_index(&idx, dir1.path()).unwrap();
        let loaded = load_index(dir1.path()).unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        save_index(&loaded, dir2.path()).unwrap();

        for name in [DOCS_FILE, DICT_FILE, POSTINGS_FILE, MANIFEST_FILE] {
            let a = fs::read(dir1.path().join(name)).unwrap();
            let b = fs::read(dir2.path().join(name)).unwrap();
            assert_eq!(a, b, "{} differs between saves", name);
        }
    }

    #[test]
    fn corrupted_postings_file_is_a_checksum_error() {
        let idx = toy_index();
        let dir = tempfile::tempdir().unwrap();
        save_index(&idx, dir.path()).unwrap();
        let p = dir.path().join(POSTINGS_FILE);
        let mut bytes = fs::read(&p).unwrap();
        bytes[0] ^= 0xff;
        fs::write(&p, bytes).unwrap();
        match load_index(dir.path()).unwrap_err() {
            IndexError::ChecksumMismatch { file } => assert_eq!(file, POSTINGS_FILE),
            other => panic!("expected ChecksumMismatch, got {:?}", other),
        }
    }

    #[test]
    fn truncated_file_is_a_truncation_error() {
        let idx = toy_index();
        let dir = tempfile::tempdir().unwrap();
        save_index(&idx, dir.path()).unwrap();
        let p = dir.path().join(DICT_FILE);
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        match load_index(dir.path()).unwrap_err() {
            IndexError::TruncatedFile { file, .. } => assert_eq!(file, DICT_FILE),
            other => panic!("expected TruncatedFile, got {:?}", other),
        }
    }

    #[test]
    fn version_mismatch_is_its_own_error() {
        let idx = toy_index();
        let dir = tempfile::tempdir().unwrap();
        save_index(&idx, dir.path()).unwrap();
        let p = dir.path().join(MANIFEST_FILE);
        let text = fs::read_to_string(&p)
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 99");
        fs::write(&p, text).unwrap();
        match load_index(dir.path()).unwrap_err() {
            IndexError::VersionMismatch { found, supported } => {
                assert_eq!((found, supported), (99, FORMAT_VERSION));
            }
            other => panic!("expected VersionMismatch, got {:?}", other),
        }
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let idx = toy_index();
        let dir = tempfile::tempdir().unwrap();
        save_index(&idx, dir.path()).unwrap();
        let p = dir.path().join(MANIFEST_FILE);
        let text = fs::read_to_string(&p).unwrap().replace(MAGIC, "not-an-index");
        fs::write(&p, text).unwrap();
        assert!(matches!(load_index(dir.path()).unwrap_err(), IndexError::BadMagic { .. }));
    }

    #[test]
    fn corpus_jsonl_reader_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        fs::write(&path, "{\"id\":\"a\",\"text\":\"one\"}\n\nnot json\n").unwrap();
        let records: Vec<_> = read_corpus_jsonl(&path).unwrap().collect();
        assert_eq!(records.len(), 2);
        assert!(records[0].is_ok());
        match records[1].as_ref().unwrap_err() {
            IndexError::CorpusFormat { line, .. } => assert_eq!(*line, 3),
            other => panic!("expected CorpusFormat, got {:?}", other),
        }
    }
}
