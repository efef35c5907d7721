//! TREC interchange artifacts: run files, qrels, and JSON-lines topics.
//!
//! Run lines are `topic_id Q0 doc_id rank score tag`, space-separated, with
//! the score printed to exactly 6 decimal places; writing the same run twice
//! produces byte-identical files. Qrels lines are `topic_id 0 doc_id grade`.
//! Topics are JSON objects `{"id": ..., "text": ...}`, one per line.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// One retrieved document; rank is implied by position within the topic.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub doc_id: String,
    pub score: f64,
}

/// A full retrieval run: per topic, documents in rank order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunFile {
    pub tag: String,
    pub topics: BTreeMap<String, Vec<RunEntry>>,
}

/// Relevance judgments: topic → doc → integer grade. Grades of 1 or more
/// mean relevant; judged zeros record explicit non-relevance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Qrels {
    pub judgments: BTreeMap<String, BTreeMap<String, i64>>,
}

impl Qrels {
    /// Documents judged relevant (grade ≥ 1) for a topic.
    pub fn relevant_set(&self, topic: &str) -> std::collections::BTreeSet<String> {
        self.judgments
            .get(topic)
            .map(|grades| {
                grades
                    .iter()
                    .filter(|&(_, &g)| g >= 1)
                    .map(|(d, _)| d.clone())
                    .collect()
            })
            .unwrap_or_default()
    }
}

/// One retrieval topic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub id: String,
    pub text: String,
}

pub fn write_run<W: Write>(mut w: W, run: &RunFile) -> std::io::Result<()> {
    for (topic, entries) in &run.topics {
        for (i, entry) in entries.iter().enumerate() {
            writeln!(
                w,
                "{} Q0 {} {} {:.6} {}",
                topic,
                entry.doc_id,
                i + 1,
                entry.score,
                run.tag
            )?;
        }
    }
    Ok(())
}

pub fn save_run(path: &Path, run: &RunFile) -> Result<(), EvalError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_run(&mut w, run)?;
    w.flush()?;
    Ok(())
}

/// Parses and validates a run: per topic, ranks must be contiguous from 1,
/// scores non-increasing, and no document may appear twice.
pub fn parse_run<R: BufRead>(reader: R) -> Result<RunFile, EvalError> {
    let mut run = RunFile::default();
    let mut next_rank: BTreeMap<String, usize> = BTreeMap::new();
    let mut tag_seen = false;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(EvalError::RunFormat {
                line: line_no,
                message: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let (topic, doc_id, rank_text, score_text, tag) =
            (fields[0], fields[2], fields[3], fields[4], fields[5]);
        let rank: usize = rank_text.parse().map_err(|_| EvalError::RunFormat {
            line: line_no,
            message: format!("bad rank {:?}", rank_text),
        })?;
        let score: f64 = score_text.parse().map_err(|_| EvalError::RunFormat {
            line: line_no,
            message: format!("bad score {:?}", score_text),
        })?;
        if !tag_seen {
            run.tag = tag.to_string();
            tag_seen = true;
        }
        let expected = next_rank.entry(topic.to_string()).or_insert(1);
        if rank != *expected {
            return Err(EvalError::RunFormat {
                line: line_no,
                message: format!("topic {}: expected rank {}, found {}", topic, expected, rank),
            });
        }
        *expected += 1;
        let entries = run.topics.entry(topic.to_string()).or_default();
        if let Some(last) = entries.last() {
            if score > last.score {
                return Err(EvalError::RunFormat {
                    line: line_no,
                    message: format!(
                        "topic {}: score {} rises above previous {}",
                        topic, score, last.score
                    ),
                });
            }
        }
        if entries.iter().any(|e| e.doc_id == doc_id) {
            return Err(EvalError::RunFormat {
                line: line_no,
                message: format!("topic {}: duplicate document {}", topic, doc_id),
            });
        }
        entries.push(RunEntry { doc_id: doc_id.to_string(), score });
    }
    Ok(run)
}

pub fn load_run(path: &Path) -> Result<RunFile, EvalError> {
    parse_run(BufReader::new(File::open(path)?))
}

pub fn parse_qrels<R: BufRead>(reader: R) -> Result<Qrels, EvalError> {
    let mut qrels = Qrels::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(EvalError::QrelsFormat {
                line: line_no,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let (topic, doc_id, grade_text) = (fields[0], fields[2], fields[3]);
        let grade: i64 = grade_text.parse().map_err(|_| EvalError::QrelsFormat {
            line: line_no,
            message: format!("bad grade {:?}", grade_text),
        })?;
        let previous = qrels
            .judgments
            .entry(topic.to_string())
            .or_default()
            .insert(doc_id.to_string(), grade);
        if previous.is_some() {
            return Err(EvalError::QrelsFormat {
                line: line_no,
                message: format!("duplicate judgment for topic {} doc {}", topic, doc_id),
            });
        }
    }
    Ok(qrels)
}

pub fn load_qrels(path: &Path) -> Result<Qrels, EvalError> {
    parse_qrels(BufReader::new(File::open(path)?))
}

pub fn parse_topics<R: BufRead>(reader: R) -> Result<Vec<Topic>, EvalError> {
    let mut topics: Vec<Topic> = Vec::new();
    let mut seen: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let topic: Topic = serde_json::from_str(&line).map_err(|e| EvalError::TopicsFormat {
            line: line_no,
            message: e.to_string(),
        })?;
        if !seen.insert(topic.id.clone()) {
            return Err(EvalError::TopicsFormat {
                line: line_no,
                message: format!("duplicate topic id {}", topic.id),
            });
        }
        topics.push(topic);
    }
    Ok(topics)
}

pub fn load_topics(path: &Path) -> Result<Vec<Topic>, EvalError> {
    parse_topics(BufReader::new(File::open(path)?))
}
