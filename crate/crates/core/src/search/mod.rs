//! Query-by-example search: subsequence DTW over posteriorgrams.
//!
//! The frame cost is `-log(x . y)`. A query matches the target span whose
//! warped distance to the whole query is smallest, and the utterance score
//! is that distance divided by the query length and negated, so higher is
//! better.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::transducer::Posteriorgram;
use crate::{Error, Result};

/// `-log(x . y)` for two floored posteriorgram rows.
pub fn frame_cost(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(dot_cost(x, y))
}

fn dot_cost(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    -dot.ln()
}

/// Best span of a target for one query. Frame indices are inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtwMatch {
    pub distance: f64,
    pub a_star: usize,
    pub b_star: usize,
}

/// Row-major `N x M` matrix of frame costs between query and target.
pub fn cost_matrix(query: &Posteriorgram, target: &Posteriorgram) -> Result<Vec<f64>> {
    if query.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: query.dim(),
            found: target.dim(),
        });
    }
    Ok(query
        .rows()
        .flat_map(|x| target.rows().map(move |y| dot_cost(x, y)))
        .collect())
}

pub fn subsequence_dtw(query: &Posteriorgram, target: &Posteriorgram) -> Result<DtwMatch> {
    let cost = cost_matrix(query, target)?;
    subsequence_dtw_costs(&cost, query.len(), target.len())
}

/// Subsequence DTW on a precomputed `n x m` cost matrix.
///
/// Steps are (1,0), (0,1), (1,1) with no weights, and the first query frame
/// may enter at any target frame. Among minimizing spans the one ending
/// earliest wins, then the one starting latest.
pub fn subsequence_dtw_costs(cost: &[f64], n: usize, m: usize) -> Result<DtwMatch> {
    if n == 0 || m == 0 || cost.len() != n * m {
        return Err(Error::InvalidArgument(format!(
            "cost matrix of {} entries does not match {n} x {m}",
            cost.len()
        )));
    }
    let mut dist = cost[..m].to_vec();
    let mut start: Vec<usize> = (0..m).collect();
    let mut next = vec![0.0; m];
    let mut next_start = vec![0; m];
    for i in 1..n {
        let row = &cost[i * m..(i + 1) * m];
        next[0] = dist[0] + row[0];
        next_start[0] = start[0];
        for j in 1..m {
            let mut best = (dist[j - 1], start[j - 1]);
            for cand in [(dist[j], start[j]), (next[j - 1], next_start[j - 1])] {
                if cand.0 < best.0 || (cand.0 == best.0 && cand.1 > best.1) {
                    best = cand;
                }
            }
            next[j] = best.0 + row[j];
            next_start[j] = best.1;
        }
        std::mem::swap(&mut dist, &mut next);
        std::mem::swap(&mut start, &mut next_start);
    }
    let mut b = 0;
    for j in 1..m {
        if dist[j] < dist[b] {
            b = j;
        }
    }
    Ok(DtwMatch {
        distance: dist[b],
        a_star: start[b],
        b_star: b,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryHit {
    pub utterance_id: String,
    /// `-distance / N`.
    pub score: f64,
    pub a_star: usize,
    pub b_star: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub query_id: String,
    /// Descending score, ties by utterance id.
    pub hits: Vec<QueryHit>,
    pub threshold: Option<f64>,
}

impl SearchResult {
    fn from_hits(query_id: String, mut hits: Vec<QueryHit>, threshold: Option<f64>) -> Self {
        if let Some(t) = threshold {
            hits.retain(|h| h.score > t);
        }
        hits.sort_by(|x, y| {
            y.score
                .total_cmp(&x.score)
                .then_with(|| x.utterance_id.cmp(&y.utterance_id))
        });
        Self {
            query_id,
            hits,
            threshold,
        }
    }

    pub fn truncate(&mut self, top: usize) {
        self.hits.truncate(top);
    }

    pub const TSV_HEADER: &'static str = "query_id\tutterance_id\tscore\ta_star\tb_star";

    /// Rows without the header; scores use shortest round-trip formatting.
    pub fn tsv_rows(&self) -> String {
        let mut out = String::new();
        for h in &self.hits {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                self.query_id, h.utterance_id, h.score, h.a_star, h.b_star
            );
        }
        out
    }

    pub fn to_tsv(&self) -> String {
        format!("{}\n{}", Self::TSV_HEADER, self.tsv_rows())
    }

    /// Reads a results table, grouping rows by query id in order of first
    /// appearance. Row order within a query is kept as written.
    pub fn parse_tsv(text: &str) -> Result<Vec<SearchResult>> {
        let mut lines = text.lines();
        if lines.next().map(str::trim_end) != Some(Self::TSV_HEADER) {
            return Err(Error::MalformedHeader(format!(
                "results table must start with {:?}",
                Self::TSV_HEADER
            )));
        }
        let mut out: Vec<SearchResult> = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::InvalidArgument(format!("results line {}: {line:?}", i + 2));
            let f: Vec<&str> = line.split('\t').collect();
            let [query, utt, score, a, b] = f.as_slice() else {
                return Err(bad());
            };
            let hit = QueryHit {
                utterance_id: utt.to_string(),
                score: score.parse().map_err(|_| bad())?,
                a_star: a.parse().map_err(|_| bad())?,
                b_star: b.parse().map_err(|_| bad())?,
            };
            match out.iter_mut().find(|r| r.query_id == *query) {
                Some(r) => r.hits.push(hit),
                None => out.push(SearchResult {
                    query_id: query.to_string(),
                    hits: vec![hit],
                    threshold: None,
                }),
            }
        }
        Ok(out)
    }
}

/// Scores every utterance of `corpus` against one query.
///
/// Utterances are processed in parallel; the output order depends only on
/// scores and ids.
pub fn search_corpus(query: &Posteriorgram, corpus: &[Posteriorgram], threshold: Option<f64>) -> Result<SearchResult> {
    let hits = score_all(query, corpus)?;
    Ok(SearchResult::from_hits(query.utterance_id.clone(), hits, threshold))
}

fn score_all(query: &Posteriorgram, corpus: &[Posteriorgram]) -> Result<Vec<QueryHit>> {
    let n = query.len() as f64;
    corpus
        .par_iter()
        .map(|target| {
            let m = subsequence_dtw(query, target)?;
            Ok(QueryHit {
                utterance_id: target.utterance_id.clone(),
                score: -m.distance / n,
                a_star: m.a_star,
                b_star: m.b_star,
            })
        })
        .collect()
}

/// How scores from several examples of one keyword are merged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    #[default]
    Max,
    Mean,
}

impl FromStr for Combine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Self::Max),
            "mean" => Ok(Self::Mean),
            other => Err(Error::Config(format!("unknown combination rule {other:?}; use max or mean"))),
        }
    }
}

/// Searches with several spoken examples of one keyword. The reported span
/// always comes from the best-scoring example.
pub fn search_keyword(
    query_id: &str,
    examples: &[Posteriorgram],
    corpus: &[Posteriorgram],
    combine: Combine,
    threshold: Option<f64>,
) -> Result<SearchResult> {
    if examples.is_empty() {
        return Err(Error::MissingInput(format!("no examples for keyword {query_id}")));
    }
    let per_example: Vec<Vec<QueryHit>> = examples
        .iter()
        .map(|q| score_all(q, corpus))
        .collect::<Result<_>>()?;
    let hits = (0..corpus.len())
        .map(|u| {
            let mut best = per_example[0][u].clone();
            let mut sum = 0.0;
            for hits in &per_example {
                let h = &hits[u];
                sum += h.score;
                if h.score > best.score {
                    best = h.clone();
                }
            }
            if combine == Combine::Mean {
                best.score = sum / examples.len() as f64;
            }
            best
        })
        .collect();
    Ok(SearchResult::from_hits(query_id.to_string(), hits, threshold))
}
