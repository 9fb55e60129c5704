//! Query, all-pairs linking and evaluation over a built index.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::MatchConfig;
use crate::eval::{mean_precision_over, Denominator, EvalError, EvalReport, GroundTruth, Scenario};
use crate::fast_match::{scan_and_shortlist, ImageMetric, ImageRecord, ShortlistEntry};
use crate::ingest::PoseIndex;
use crate::skeleton::CanonicalSkeleton;
use crate::verify::{rerank, verify_image_pair, RankedHit, SimilarityTransform, VerifiedLink};

/// Everything a query needs besides the query image itself.
#[derive(Clone, Copy)]
pub struct Engine<'a> {
    pub index: &'a PoseIndex,
    pub skeleton: &'a CanonicalSkeleton,
    pub config: &'a MatchConfig,
}

impl<'a> Engine<'a> {
    pub fn new(index: &'a PoseIndex, skeleton: &'a CanonicalSkeleton, config: &'a MatchConfig) -> Self {
        Self { index, skeleton, config }
    }

    pub fn shortlist(&self, query: &ImageRecord, metric: ImageMetric) -> Vec<ShortlistEntry> {
        scan_and_shortlist(query, self.index, self.config, metric)
    }

    /// Verifies every shortlist entry; the output is aligned with the shortlist.
    pub fn verify_shortlist(&self, query: &ImageRecord, shortlist: &[ShortlistEntry]) -> Vec<Option<VerifiedLink>> {
        shortlist
            .par_iter()
            .map(|entry| {
                let db = self.index.get(&entry.image_id)?;
                verify_image_pair(query, db, &entry.candidates, self.skeleton, self.config)
            })
            .collect()
    }

    /// Final ranking for one query; without verification this is the shortlist order.
    pub fn query(&self, query: &ImageRecord, metric: ImageMetric, verify: bool) -> Vec<RankedHit> {
        let shortlist = self.shortlist(query, metric);
        let verified = if verify {
            self.verify_shortlist(query, &shortlist)
        } else {
            vec![None; shortlist.len()]
        };
        rerank(&shortlist, &verified)
    }

    /// Queries every record against the rest and keeps the verified links.
    pub fn link_all(&self, metric: ImageMetric) -> Vec<Edge> {
        self.index
            .records()
            .par_iter()
            .map(|q| {
                self.query(q, metric, true)
                    .into_iter()
                    .filter_map(|hit| hit.verification)
                    .map(|link| Edge {
                        query_id: link.query_image_id,
                        target_id: link.db_image_id,
                        score: link.score,
                        transform: link.best_transform,
                    })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    }

    /// Match-only and verified rankings for each query under one metric.
    pub fn rankings(&self, queries: &[String], metric: ImageMetric) -> Result<MethodRankings, EvalError> {
        let rows = queries
            .par_iter()
            .map(|id| {
                let q = self.index.get(id).ok_or_else(|| EvalError::MissingQuery(id.clone()))?;
                let shortlist = self.shortlist(q, metric);
                let match_only: Vec<String> = shortlist.iter().map(|e| e.image_id.clone()).collect();
                let verified = self.verify_shortlist(q, &shortlist);
                let reranked = rerank(&shortlist, &verified).into_iter().map(|h| h.image_id).collect();
                Ok((id.clone(), match_only, reranked))
            })
            .collect::<Result<Vec<_>, EvalError>>()?;
        let mut out = MethodRankings::default();
        for (id, m, v) in rows {
            out.match_only.insert(id.clone(), m);
            out.verified.insert(id, v);
        }
        Ok(out)
    }

    /// Reports for all four method variants and the requested scenarios.
    pub fn evaluate(
        &self,
        ground_truth: &GroundTruth,
        queries: &[String],
        scenarios: &[Scenario],
        ks: &[usize],
        denominator: Denominator,
    ) -> Result<Vec<MethodReport>, EvalError> {
        let mut out = Vec::new();
        for metric in [ImageMetric::Min, ImageMetric::T] {
            let rankings = self.rankings(queries, metric)?;
            for (verified, table) in [(false, &rankings.match_only), (true, &rankings.verified)] {
                for &scenario in scenarios {
                    let report = mean_precision_over(table, ground_truth, scenario, ks, queries, denominator)?;
                    out.push(MethodReport { method: Method { metric, verified }, report });
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Default)]
pub struct MethodRankings {
    pub match_only: BTreeMap<String, Vec<String>>,
    pub verified: BTreeMap<String, Vec<String>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Method {
    pub metric: ImageMetric,
    pub verified: bool,
}

impl Method {
    pub fn label(&self) -> String {
        format!("dist_{}_{}", self.metric, if self.verified { "verified" } else { "match_only" })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub report: EvalReport,
}

/// One verified link from the all-pairs pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub query_id: String,
    pub target_id: String,
    pub score: usize,
    pub transform: SimilarityTransform,
}

/// Runs `f` on a dedicated pool with `workers` threads (the global pool when `None`).
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool builds")
            .install(f),
        None => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic_benchmark, SyntheticSpec};

    #[test]
    fn single_record_index_has_no_edges() {
        let cfg = MatchConfig::default();
        let bench = generate_synthetic_benchmark(
            &SyntheticSpec { scenes: 1, copies: 0, transfers: 0, ..Default::default() },
            1,
        )
        .unwrap();
        let index = bench.index(&cfg);
        let skel = CanonicalSkeleton::body25();
        assert!(Engine::new(&index, &skel, &cfg).link_all(ImageMetric::T).is_empty());
    }

    #[test]
    fn planted_copy_ranks_its_source_first() {
        let cfg = MatchConfig::default();
        let spec = SyntheticSpec { scenes: 40, copies: 5, transfers: 0, ..Default::default() };
        let bench = generate_synthetic_benchmark(&spec, 11).unwrap();
        let index = bench.index(&cfg);
        let skel = CanonicalSkeleton::body25();
        let engine = Engine::new(&index, &skel, &cfg);
        for plant in &bench.plants {
            let q = index.get(&plant.image_id).unwrap();
            let hits = engine.query(q, ImageMetric::T, true);
            assert_eq!(hits[0].image_id, plant.source_id);
            let link = hits[0].verification.as_ref().unwrap();
            assert_eq!(link.best_transform.flipped, plant.transform.flipped);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = MatchConfig::default();
        let spec = SyntheticSpec { scenes: 30, copies: 4, transfers: 2, transfer_family_size: 2, ..Default::default() };
        let bench = generate_synthetic_benchmark(&spec, 2).unwrap();
        let index = bench.index(&cfg);
        let skel = CanonicalSkeleton::body25();
        let engine = Engine::new(&index, &skel, &cfg);
        let one = with_workers(Some(1), || engine.link_all(ImageMetric::T));
        let many = with_workers(Some(8), || engine.link_all(ImageMetric::T));
        assert_eq!(one, many);
    }
}
