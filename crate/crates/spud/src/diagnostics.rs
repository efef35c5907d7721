//! Mechanical model diagnostics: length-normalization (self-concatenation)
//! checks, length-bin retrieval-vs-relevance curves, background-probability
//! ratio tables, and the document-frequency weighting curve the smoothed
//! Polya urn model implies.
//!
//! All diagnostics are read-only over the index. The concatenation check
//! scores a synthetic document d' with every term count and the token
//! length scaled by k+1 while the distinct-term count and all collection
//! statistics stay frozen; a model insensitive to pure repetition must give
//! d and d' the same score.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::evaluation::trec::{Qrels, RunFile};
use crate::index::{DocOrdinal, InvertedIndex};
use crate::ranking::{self, Query, RankingModel};

/// Verdict threshold: a model is satisfied only if every trial's score
/// difference stays within this band.
pub const LNC2_TOLERANCE: f64 = 1e-12;

/// Retrieval depth counted as "retrieved" in the length-bin analysis.
pub const LENGTH_BIN_DEPTH: usize = 1000;

pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("trial references document {doc_id} which the index does not contain")]
    UnknownDocument { doc_id: String },
    #[error("term {term} is not in the index vocabulary")]
    UnknownTerm { term: String },
    #[error("bins={0} out of range: requires at least 2")]
    BinCount(usize),
    #[error("need at least {bins} documents to form {bins} bins, index has {have}")]
    TooFewDocuments { bins: usize, have: usize },
    #[error("qrels contain no relevant documents present in the index")]
    NoRelevantDocuments,
    #[error("run contains no retrieved documents present in the index")]
    NoRetrievedDocuments,
    #[error("delta={0} out of range: requires delta > 0")]
    DeltaDomain(f64),
    #[error("df={df} out of range: requires 1 ≤ df ≤ {n}")]
    DfRange { df: u64, n: u64 },
}

/// One self-concatenation trial: score `query` against `doc_id` and against
/// the synthetic copy with k extra self-concatenations.
#[derive(Debug, Clone)]
pub struct Lnc2Trial {
    pub query: Query,
    pub doc_id: String,
    pub k: u64,
}

#[derive(Debug, Clone)]
pub struct Lnc2Observation {
    pub doc_id: String,
    pub k: u64,
    pub score_original: f64,
    pub score_concat: f64,
}

impl Lnc2Observation {
    pub fn delta(&self) -> f64 {
        self.score_concat - self.score_original
    }
}

#[derive(Debug, Clone)]
pub struct Lnc2Report {
    pub model: String,
    pub observations: Vec<Lnc2Observation>,
    pub max_abs_delta: f64,
    pub satisfied: bool,
    /// Index of the worst observation when the verdict is violated.
    pub witness: Option<usize>,
}

/// Scores every trial against the original document and its synthetic
/// (k+1)-fold self-concatenation, with collection statistics frozen, and
/// reports the per-model verdict.
pub fn check_lnc2(
    idx: &InvertedIndex,
    model: &RankingModel,
    trials: &[Lnc2Trial],
) -> Result<Lnc2Report, DiagnosticsError> {
    let cn = ranking::coll_numbers(idx);
    let mut observations = Vec::with_capacity(trials.len());
    let mut max_abs_delta = 0.0f64;
    let mut witness = None;
    for trial in trials {
        let ord = idx
            .doc_ordinal(&trial.doc_id)
            .ok_or_else(|| DiagnosticsError::UnknownDocument { doc_id: trial.doc_id.clone() })?;
        let dn = ranking::doc_numbers(idx, ord);
        let scale = (trial.k + 1) as f64;
        let score_original = ranking::score(&trial.query, ord, idx, model);
        let concat_dn = ranking::DocNumbers { dl: scale * dn.dl, dvec: dn.dvec };
        let score_concat = ranking::score_from_parts(&trial.query, model, concat_dn, cn, |term| {
            let pl = idx.term_lookup(term).expect("trial queries are in-vocabulary");
            ranking::TermNumbers {
                tf: scale * pl.tf(ord) as f64,
                cf: pl.cf as f64,
                df: pl.df as f64,
            }
        });
        let obs = Lnc2Observation {
            doc_id: trial.doc_id.clone(),
            k: trial.k,
            score_original,
            score_concat,
        };
        let delta = obs.delta().abs();
        if delta > max_abs_delta {
            max_abs_delta = delta;
            witness = Some(observations.len());
        }
        observations.push(obs);
    }
    let satisfied = max_abs_delta <= LNC2_TOLERANCE;
    Ok(Lnc2Report {
        model: model.name().to_string(),
        observations,
        max_abs_delta,
        satisfied,
        witness: if satisfied { None } else { witness },
    })
}

/// Deterministic random trial set: each trial picks a non-empty document, a
/// small query mixing the document's own terms with other vocabulary terms,
/// and a concatenation factor k in 1..=4.
pub fn random_lnc2_trials(idx: &InvertedIndex, n_trials: usize, seed: u64) -> Vec<Lnc2Trial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let docs: Vec<DocOrdinal> =
        idx.docs().filter(|&(ord, _)| idx.retrievable(ord)).map(|(ord, _)| ord).collect();
    let vocab: Vec<&str> = idx.terms().map(|pl| pl.term.as_str()).collect();
    let mut doc_terms: BTreeMap<DocOrdinal, Vec<&str>> = BTreeMap::new();
    for pl in idx.terms() {
        for &(ord, _) in &pl.postings {
            doc_terms.entry(ord).or_default().push(pl.term.as_str());
        }
    }
    let mut trials = Vec::with_capacity(n_trials);
    for _ in 0..n_trials {
        let ord = docs[rng.gen_range(0..docs.len())];
        let own = &doc_terms[&ord];
        let n_terms = rng.gen_range(1..=3usize);
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for _ in 0..n_terms {
            let term = if rng.gen_range(0..10) < 7 || vocab.len() == 1 {
                own[rng.gen_range(0..own.len())]
            } else {
                vocab[rng.gen_range(0..vocab.len())]
            };
            *counts.entry(term.to_string()).or_insert(0) += rng.gen_range(1..=2u64);
        }
        let total_len = counts.values().sum();
        trials.push(Lnc2Trial {
            query: Query { terms: counts.into_iter().collect(), total_len },
            doc_id: idx.doc(ord).doc_id.clone(),
            k: rng.gen_range(1..=4),
        });
    }
    trials
}

/// Which document length the bin analysis sorts by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthKind {
    Tokens,
    Types,
}

impl LengthKind {
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "tokens" => Some(LengthKind::Tokens),
            "types" => Some(LengthKind::Types),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LengthKind::Tokens => "tokens",
            LengthKind::Types => "types",
        }
    }

    fn of(&self, stats: &crate::index::DocStats) -> u64 {
        match self {
            LengthKind::Tokens => stats.length_tokens,
            LengthKind::Types => stats.length_types,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthBin {
    pub min_length: u64,
    pub max_length: u64,
    pub doc_count: usize,
    pub p_retrieved: f64,
    pub p_relevant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthBinCurve {
    pub kind: LengthKind,
    pub bins: Vec<LengthBin>,
}

impl LengthBinCurve {
    /// CSV with a header row and probabilities at 6 decimal places.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin,min_length,max_length,doc_count,p_retrieved,p_relevant\n");
        for (i, bin) in self.bins.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{:.6},{:.6}",
                i, bin.min_length, bin.max_length, bin.doc_count, bin.p_retrieved, bin.p_relevant
            )
            .expect("writing to a String cannot fail");
        }
        out
    }
}

/// Sorts all indexed documents by length (ties by doc id), splits them into
/// n_bins equal-count bins, and estimates P(bin | retrieved) from top-1000
/// run appearances and P(bin | relevant) from qrels positives. Each column
/// sums to 1 over the bins. Documents named by the run or qrels but missing
/// from the index are ignored.
pub fn length_bin_analysis(
    run: &RunFile,
    qrels: &Qrels,
    idx: &InvertedIndex,
    n_bins: usize,
    kind: LengthKind,
) -> Result<LengthBinCurve, DiagnosticsError> {
    if n_bins < 2 {
        return Err(DiagnosticsError::BinCount(n_bins));
    }
    let mut ordered: Vec<(u64, DocOrdinal)> =
        idx.docs().map(|(ord, stats)| (kind.of(stats), ord)).collect();
    if ordered.len() < n_bins {
        return Err(DiagnosticsError::TooFewDocuments { bins: n_bins, have: ordered.len() });
    }
    ordered.sort_unstable_by(|a, b| {
        a.0.cmp(&b.0).then_with(|| idx.doc(a.1).doc_id.cmp(&idx.doc(b.1).doc_id))
    });

    let n = ordered.len();
    let mut bin_of: BTreeMap<DocOrdinal, usize> = BTreeMap::new();
    let mut bins: Vec<LengthBin> = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        let start = b * n / n_bins;
        let end = (b + 1) * n / n_bins;
        let members = &ordered[start..end];
        for &(_, ord) in members {
            bin_of.insert(ord, b);
        }
        bins.push(LengthBin {
            min_length: members.first().map(|&(l, _)| l).unwrap_or(0),
            max_length: members.last().map(|&(l, _)| l).unwrap_or(0),
            doc_count: members.len(),
            p_retrieved: 0.0,
            p_relevant: 0.0,
        });
    }

    let mut retrieved_total = 0u64;
    for entries in run.topics.values() {
        for entry in entries.iter().take(LENGTH_BIN_DEPTH) {
            if let Some(ord) = idx.doc_ordinal(&entry.doc_id) {
                bins[bin_of[&ord]].p_retrieved += 1.0;
                retrieved_total += 1;
            }
        }
    }
    if retrieved_total == 0 {
        return Err(DiagnosticsError::NoRetrievedDocuments);
    }

    let mut relevant_total = 0u64;
    for grades in qrels.judgments.values() {
        for (doc_id, &grade) in grades {
            if grade >= 1 {
                if let Some(ord) = idx.doc_ordinal(doc_id) {
                    bins[bin_of[&ord]].p_relevant += 1.0;
                    relevant_total += 1;
                }
            }
        }
    }
    if relevant_total == 0 {
        return Err(DiagnosticsError::NoRelevantDocuments);
    }

    for bin in &mut bins {
        bin.p_retrieved /= retrieved_total as f64;
        bin.p_relevant /= relevant_total as f64;
    }
    Ok(LengthBinCurve { kind, bins })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundRatioRow {
    pub term: String,
    pub df: u64,
    pub cf: u64,
    /// Document-frequency background probability df / Σ|d_vec|.
    pub p_df: f64,
    /// Collection-frequency background probability cf / |c|.
    pub p_cf: f64,
    /// p_df / p_cf; below 1 marks terms that repeat within few documents,
    /// above 1 marks terms spread thinly across many.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundRatioTable {
    pub top: Vec<BackgroundRatioRow>,
    pub bottom: Vec<BackgroundRatioRow>,
}

impl BackgroundRatioTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,term,df,cf,p_df,p_cf,ratio\n");
        for (group, rows) in [("top", &self.top), ("bottom", &self.bottom)] {
            for row in rows {
                writeln!(
                    out,
                    "{},{},{},{},{:.6},{:.6},{:.6}",
                    group, row.term, row.df, row.cf, row.p_df, row.p_cf, row.ratio
                )
                .expect("writing to a String cannot fail");
            }
        }
        out
    }
}

fn ratio_row(idx: &InvertedIndex, term: &str) -> Option<BackgroundRatioRow> {
    let pl = idx.term_lookup(term)?;
    let s = idx.stats().sum_vector_lengths as f64;
    let total = idx.stats().total_tokens as f64;
    let p_df = pl.df as f64 / s;
    let p_cf = pl.cf as f64 / total;
    Some(BackgroundRatioRow { term: term.to_string(), df: pl.df, cf: pl.cf, p_df, p_cf, ratio: p_df / p_cf })
}

/// Computes both background probabilities and their ratio for the given
/// terms (or every indexed term), returning the top_n highest- and
/// lowest-ratio rows; ties order by term.
pub fn background_ratio_table(
    idx: &InvertedIndex,
    terms: Option<&[String]>,
    top_n: usize,
) -> Result<BackgroundRatioTable, DiagnosticsError> {
    let mut rows: Vec<BackgroundRatioRow> = match terms {
        Some(list) => {
            let mut rows = Vec::with_capacity(list.len());
            for term in list {
                rows.push(ratio_row(idx, term).ok_or_else(|| {
                    DiagnosticsError::UnknownTerm { term: term.clone() }
                })?);
            }
            rows
        }
        None => idx
            .terms()
            .map(|pl| ratio_row(idx, &pl.term).expect("iterated terms exist"))
            .collect(),
    };
    rows.sort_unstable_by(|a, b| b.ratio.total_cmp(&a.ratio).then_with(|| a.term.cmp(&b.term)));
    let top: Vec<BackgroundRatioRow> = rows.iter().take(top_n).cloned().collect();
    rows.sort_unstable_by(|a, b| a.ratio.total_cmp(&b.ratio).then_with(|| a.term.cmp(&b.term)));
    let bottom: Vec<BackgroundRatioRow> = rows.iter().take(top_n).cloned().collect();
    Ok(BackgroundRatioTable { top, bottom })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdfPoint {
    pub df: u64,
    /// ln(1 + delta·n/df), the document-frequency weight the smoothed urn
    /// model's summand applies at a representative within-document factor
    /// delta.
    pub family: f64,
    /// Classical ln(n/df) for comparison.
    pub classical: f64,
}

/// The document-frequency weighting curve ln(1 + delta·n/df) next to the
/// classical ln(n/df), over the requested df values.
pub fn idf_family_curve(
    idx: &InvertedIndex,
    delta: f64,
    df_range: &[u64],
) -> Result<Vec<IdfPoint>, DiagnosticsError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(DiagnosticsError::DeltaDomain(delta));
    }
    let n = idx.doc_count() as u64;
    let mut points = Vec::with_capacity(df_range.len());
    for &df in df_range {
        if df == 0 || df > n {
            return Err(DiagnosticsError::DfRange { df, n });
        }
        let nf = n as f64;
        let dff = df as f64;
        points.push(IdfPoint {
            df,
            family: (1.0 + delta * nf / dff).ln(),
            classical: (nf / dff).ln(),
        });
    }
    Ok(points)
}

pub fn idf_curve_to_csv(points: &[IdfPoint]) -> String {
    let mut out = String::from("df,family_weight,classical_idf\n");
    for p in points {
        writeln!(out, "{},{:.6},{:.6}", p.df, p.family, p.classical)
            .expect("writing to a String cannot fail");
    }
    out
}
