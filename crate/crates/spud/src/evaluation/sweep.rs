//! Batch retrieval over topic sets and parameter-grid sweeps.

use std::collections::BTreeMap;

use crate::index::InvertedIndex;
use crate::ranking::{prepare_query, retrieve, RankingModel};
use crate::textprep::TokenPipelineConfig;

use super::metrics::{evaluate_run, MetricsReport};
use super::trec::{Qrels, RunEntry, RunFile, Topic};
use super::EvalError;

/// Runs every topic through query preparation and retrieval, producing a
/// run file in topic order. Topics whose queries come out empty (all terms
/// out of vocabulary) or that match no documents are simply absent from the
/// result.
pub fn run_topics(
    idx: &InvertedIndex,
    model: &RankingModel,
    topics: &[Topic],
    pipeline: &TokenPipelineConfig,
    k: usize,
    tag: &str,
) -> Result<RunFile, EvalError> {
    let mut run = RunFile { tag: tag.to_string(), topics: BTreeMap::new() };
    for topic in topics {
        let q = prepare_query(&topic.text, idx, pipeline)?;
        if q.is_empty() {
            continue;
        }
        let ranked = retrieve(&q, idx, model, k);
        if ranked.is_empty() {
            continue;
        }
        run.topics.insert(
            topic.id.clone(),
            ranked
                .into_iter()
                .map(|s| RunEntry { doc_id: s.doc_id, score: s.score })
                .collect(),
        );
    }
    Ok(run)
}

/// One grid point's outcome; failures are recorded per point so a sweep can
/// continue past them.
#[derive(Debug)]
pub struct SweepPoint {
    pub param: f64,
    pub outcome: Result<MetricsReport, EvalError>,
}

/// Evaluates the model across a parameter grid: each point re-parameterizes
/// the model, runs every topic to depth 1000, and scores the run. Rows keep
/// the full per-topic metrics so any two points can feed a paired test.
/// Row order follows the grid; a failing point carries its error and the
/// sweep moves on.
pub fn sweep(
    idx: &InvertedIndex,
    model: &RankingModel,
    grid: &[f64],
    topics: &[Topic],
    qrels: &Qrels,
    pipeline: &TokenPipelineConfig,
    tag: &str,
) -> Vec<SweepPoint> {
    grid.iter()
        .map(|&param| {
            let outcome = model
                .with_param(param)
                .map_err(EvalError::from)
                .and_then(|m| run_topics(idx, &m, topics, pipeline, super::RECALL_K, tag))
                .map(|run| evaluate_run(&run, qrels));
            SweepPoint { param, outcome }
        })
        .collect()
}

/// The customary grid for the Dirichlet-mass family: 250, 500, …, 2500.
pub fn default_mu_grid() -> Vec<f64> {
    (1..=10).map(|i| 250.0 * i as f64).collect()
}

/// The customary grid for the interpolation weight: 0.1, 0.2, …, 1.0.
/// Note the endpoint lies outside the model's open parameter range, so its
/// sweep row reports the range error while the other rows evaluate.
pub fn default_pi_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

/// Parses a `start:end:step` grid, inclusive of the endpoint when it lands
/// on the lattice. Values are snapped to the inputs' decimal precision so a
/// spec like `0.1:1.0:0.1` yields clean tenths rather than accumulated
/// floating-point drift.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, EvalError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(EvalError::GridFormat {
            message: format!("expected start:end:step, got {:?}", text),
        });
    }
    let mut nums = [0.0f64; 3];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        *slot = part.parse().map_err(|_| EvalError::GridFormat {
            message: format!("bad number {:?}", part),
        })?;
    }
    let [start, end, step] = nums;
    if !start.is_finite() || !end.is_finite() || !(step > 0.0) {
        return Err(EvalError::GridFormat {
            message: format!("need finite bounds and positive step in {:?}", text),
        });
    }
    if start > end {
        return Err(EvalError::GridFormat {
            message: format!("start exceeds end in {:?}", text),
        });
    }
    let count = ((end - start) / step + 1e-6).floor() as usize + 1;
    let decimals = parts.iter().map(|p| decimal_places(p)).collect::<Option<Vec<_>>>();
    let snap = decimals
        .map(|d| d.into_iter().max().unwrap_or(0))
        .filter(|&d| d > 0 && d <= 12)
        .map(|d| 10f64.powi(d as i32));
    Ok((0..count)
        .map(|i| {
            let v = start + i as f64 * step;
            match snap {
                Some(s) => (v * s).round() / s,
                None => v,
            }
        })
        .collect())
}

/// Digits after the decimal point, or None for exponent notation.
fn decimal_places(text: &str) -> Option<usize> {
    if text.contains(['e', 'E']) {
        return None;
    }
    Some(text.split_once('.').map(|(_, frac)| frac.len()).unwrap_or(0))
}
