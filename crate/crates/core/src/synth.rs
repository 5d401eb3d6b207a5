//! Synthetic bipartite temporal streams from a Barabási–Albert graph.
//!
//! Three steps: grow a directed unipartite BA graph, read each directed edge
//! `u -> v` as the bipartite edge `(i_u, j_v)`, then attach timestamps.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::stream::{StreamRecord, StreamSource, Timestamp, VertexId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("attachment count m={m} must be between 1 and m0={m0}")]
    Attachment { m: usize, m0: usize },
    #[error("initial clique m0={m0} exceeds total vertices N={n}")]
    CliqueTooLarge { m0: usize, n: usize },
    #[error("{stamps} timestamps supplied for {edges} edges")]
    StampCount { stamps: usize, edges: usize },
    #[error("empty timestamp range {lo}..={hi}")]
    EmptyRange { lo: Timestamp, hi: Timestamp },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BaConfig {
    pub n_total: usize,
    pub m: usize,
    pub m0: usize,
    pub seed: u64,
}

impl BaConfig {
    /// Config with `m0 = m`.
    pub fn new(n_total: usize, m: usize, seed: u64) -> Self {
        BaConfig {
            n_total,
            m,
            m0: m,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.m == 0 || self.m > self.m0 {
            return Err(SynthError::Attachment { m: self.m, m0: self.m0 });
        }
        if self.m0 > self.n_total {
            return Err(SynthError::CliqueTooLarge {
                m0: self.m0,
                n: self.n_total,
            });
        }
        Ok(())
    }

    /// `m0(m0-1)/2 + (N-m0)·m`.
    pub fn expected_edges(&self) -> usize {
        self.m0 * (self.m0 - 1) / 2 + (self.n_total - self.m0) * self.m
    }
}

/// Directed BA edge list: a complete graph on `m0` vertices oriented low to
/// high id, then each new vertex attaches `m` out-edges to distinct existing
/// vertices picked proportionally to degree.
pub fn generate_ba_unipartite(cfg: &BaConfig) -> Result<Vec<(VertexId, VertexId)>, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut edges = Vec::with_capacity(cfg.expected_edges());
    // every edge contributes both endpoints, so a uniform draw is degree-proportional
    let mut endpoints: Vec<VertexId> = Vec::with_capacity(2 * cfg.expected_edges());
    for u in 0..cfg.m0 as VertexId {
        for v in u + 1..cfg.m0 as VertexId {
            edges.push((u, v));
            endpoints.extend([u, v]);
        }
    }
    let mut targets: Vec<VertexId> = Vec::with_capacity(cfg.m);
    for v in cfg.m0 as VertexId..cfg.n_total as VertexId {
        targets.clear();
        while targets.len() < cfg.m {
            let t = if endpoints.is_empty() {
                rng.gen_range(0..v)
            } else {
                endpoints[rng.gen_range(0..endpoints.len())]
            };
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((v, t));
            endpoints.extend([v, t]);
        }
    }
    Ok(edges)
}

/// Sources become i-vertices, destinations j-vertices. Ids are kept; the two
/// sides are separate namespaces.
pub fn project_bipartite(edges: &[(VertexId, VertexId)]) -> Vec<(VertexId, VertexId)> {
    edges.to_vec()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StampMode {
    /// Uniform integer stamps in `lo..=hi`.
    Random { lo: Timestamp, hi: Timestamp, seed: u64 },
    /// A shuffled permutation of real stamps, one per edge.
    ShuffledReal { stamps: Vec<Timestamp>, seed: u64 },
}

/// Timestamps the bipartite edges and returns them as a time-sorted stream.
pub fn assign_timestamps(edges: &[(VertexId, VertexId)], mode: &StampMode) -> Result<StreamSource, SynthError> {
    let stamps: Vec<Timestamp> = match mode {
        StampMode::Random { lo, hi, seed } => {
            if lo > hi {
                return Err(SynthError::EmptyRange { lo: *lo, hi: *hi });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..edges.len()).map(|_| rng.gen_range(*lo..=*hi)).collect()
        }
        StampMode::ShuffledReal { stamps, seed } => {
            if stamps.len() != edges.len() {
                return Err(SynthError::StampCount {
                    stamps: stamps.len(),
                    edges: edges.len(),
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut s = stamps.clone();
            s.shuffle(&mut rng);
            s
        }
    };
    let records = edges
        .iter()
        .zip(stamps)
        .map(|(&(i, j), tau)| StreamRecord::new(tau, i, j))
        .collect();
    Ok(StreamSource::from_records(records))
}

/// All three steps in one call.
pub fn generate_stream(cfg: &BaConfig, mode: &StampMode) -> Result<StreamSource, SynthError> {
    let edges = generate_ba_unipartite(cfg)?;
    assign_timestamps(&project_bipartite(&edges), mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustc_hash::FxHashSet;

    #[test]
    fn clique_only() {
        let edges = generate_ba_unipartite(&BaConfig::new(5, 5, 0)).unwrap();
        assert_eq!(edges.len(), 10);
        let bip = project_bipartite(&edges);
        let sources: FxHashSet<_> = bip.iter().map(|e| e.0).collect();
        assert_eq!(sources.len(), 4);
        assert!(!sources.contains(&4));
    }

    #[test]
    fn edge_count_closed_form() {
        let cfg = BaConfig::new(100, 3, 1);
        assert_eq!(generate_ba_unipartite(&cfg).unwrap().len(), 294);
        for (n, m) in [(50, 1), (60, 2), (200, 7), (31, 30)] {
            let cfg = BaConfig::new(n, m, 9);
            assert_eq!(generate_ba_unipartite(&cfg).unwrap().len(), cfg.expected_edges());
        }
    }

    #[test]
    fn no_repeated_targets() {
        let edges = generate_ba_unipartite(&BaConfig::new(500, 4, 2)).unwrap();
        let set: FxHashSet<_> = edges.iter().collect();
        assert_eq!(set.len(), edges.len());
        assert!(edges.iter().all(|&(u, v)| u != v));
    }

    #[test]
    fn degree_tail_is_power_law() {
        let edges = generate_ba_unipartite(&BaConfig::new(10_000, 5, 17)).unwrap();
        let mut degree = vec![0u32; 10_000];
        for &(u, v) in &edges {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        // discrete maximum-likelihood estimate above x_min
        let x_min = 10.0;
        let tail: Vec<f64> = degree.iter().map(|&d| d as f64).filter(|&d| d >= x_min).collect();
        let exponent = 1.0 + tail.len() as f64 / tail.iter().map(|d| (d / (x_min - 0.5)).ln()).sum::<f64>();
        assert!(tail.len() > 100);
        assert!((2.0..=4.0).contains(&exponent), "tail exponent {exponent}");
    }

    #[test]
    fn config_errors() {
        let bad = BaConfig { n_total: 10, m: 4, m0: 3, seed: 0 };
        assert_eq!(generate_ba_unipartite(&bad), Err(SynthError::Attachment { m: 4, m0: 3 }));
        assert_eq!(
            generate_ba_unipartite(&BaConfig::new(3, 5, 0)),
            Err(SynthError::CliqueTooLarge { m0: 5, n: 3 })
        );
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = BaConfig::new(300, 3, 42);
        assert_eq!(generate_ba_unipartite(&cfg), generate_ba_unipartite(&cfg));
    }

    #[test]
    fn random_stamps_in_range() {
        let edges = [(0, 1), (0, 2), (1, 2)];
        let mode = StampMode::Random { lo: 0, hi: 10, seed: 5 };
        let a = assign_timestamps(&edges, &mode).unwrap();
        let b = assign_timestamps(&edges, &mode).unwrap();
        assert_eq!(a.records(), b.records());
        assert!(a.records().iter().all(|r| r.tau <= 10));
        assert!(a.records().windows(2).all(|w| w[0].tau <= w[1].tau));
    }

    #[test]
    fn shuffled_stamps_preserve_multiset() {
        let edges = [(0, 1), (0, 2), (1, 2)];
        let mode = StampMode::ShuffledReal { stamps: vec![5, 9, 5], seed: 1 };
        let src = assign_timestamps(&edges, &mode).unwrap();
        let mut got: Vec<_> = src.records().iter().map(|r| r.tau).collect();
        got.sort();
        assert_eq!(got, vec![5, 5, 9]);
        let short = StampMode::ShuffledReal { stamps: vec![1], seed: 1 };
        assert_eq!(
            assign_timestamps(&edges, &short).unwrap_err(),
            SynthError::StampCount { stamps: 1, edges: 3 }
        );
    }
}
