//! Reservoir-sampling butterfly estimators in the style of FLEET.
//!
//! Edges enter a reservoir of capacity `M` with probability `p`. When the
//! reservoir overflows, each stored edge survives with probability `γ` and
//! `p` is multiplied by `γ`, so at any time the reservoir is a Bernoulli(`p`)
//! sample of every edge seen so far.
//!
//! The scaling factors below are reconstructed from unbiasedness rather than
//! copied from the original implementation:
//!
//! * `Fleet1` keeps the exact butterfly count of the reservoir (incremental on
//!   insert, recounted after every sub-sampling pass) and reports it divided
//!   by `p^4`, i.e. a `γ^-4` rescale per discarded round.
//! * `Fleet2` never recounts. A sampled edge closing `c` reservoir butterflies
//!   adds `c / p^4` (the edge itself and its three partners each survive with
//!   probability `p`).
//! * `Fleet3` scores every arriving edge before sampling it, adding `c / p^3`
//!   since only the three partner edges had to be sampled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exact::{count_butterflies, incident_unchecked};
use crate::stream::{BipartiteSnapshot, VertexId};

pub const DEFAULT_GAMMA: f64 = 0.7;

/// Reservoir sizes used for throughput comparisons.
pub const THROUGHPUT_RESERVOIRS: [usize; 4] = [75_000, 150_000, 300_000, 600_000];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FleetVariant {
    Fleet1,
    Fleet2,
    Fleet3,
}

#[derive(Debug, Error, PartialEq)]
pub enum FleetError {
    #[error("sampling probability must lie in (0, 1], got {0}")]
    Probability(f64),
    #[error("sub-sampling probability must lie in (0, 1), got {0}")]
    Gamma(f64),
    #[error("reservoir capacity must be positive")]
    Capacity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FleetConfig {
    pub variant: FleetVariant,
    pub capacity: usize,
    pub p: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl FleetConfig {
    pub fn new(variant: FleetVariant, capacity: usize) -> Self {
        FleetConfig {
            variant,
            capacity,
            p: 1.0,
            gamma: DEFAULT_GAMMA,
            seed: 0,
        }
    }

    /// Capacity as a fraction of a known stream size, at least one edge.
    pub fn for_stream(variant: FleetVariant, stream_len: usize, fraction: f64) -> Self {
        Self::new(variant, ((stream_len as f64 * fraction).round() as usize).max(1))
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Clone, Debug)]
pub struct FleetState {
    cfg: FleetConfig,
    reservoir: BipartiteSnapshot,
    p: f64,
    /// Fleet1: exact butterflies in the reservoir.
    reservoir_count: u64,
    /// Fleet2/3: scaled running estimate.
    accumulated: f64,
    rounds: usize,
    rng: ChaCha8Rng,
}

impl FleetState {
    pub fn new(cfg: FleetConfig) -> Result<Self, FleetError> {
        if !(cfg.p > 0.0 && cfg.p <= 1.0) {
            return Err(FleetError::Probability(cfg.p));
        }
        if !(cfg.gamma > 0.0 && cfg.gamma < 1.0) {
            return Err(FleetError::Gamma(cfg.gamma));
        }
        if cfg.capacity == 0 {
            return Err(FleetError::Capacity);
        }
        Ok(FleetState {
            cfg,
            reservoir: BipartiteSnapshot::new(),
            p: cfg.p,
            reservoir_count: 0,
            accumulated: 0.0,
            rounds: 0,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        })
    }

    pub fn config(&self) -> &FleetConfig {
        &self.cfg
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn reservoir(&self) -> &BipartiteSnapshot {
        &self.reservoir
    }

    pub fn subsample_rounds(&self) -> usize {
        self.rounds
    }

    /// Feeds one edge. Edges already in the reservoir are ignored; callers
    /// are expected to drop stream duplicates beforehand.
    pub fn process(&mut self, i: VertexId, j: VertexId) {
        if self.reservoir.contains_edge(i, j) {
            return;
        }
        if self.cfg.variant == FleetVariant::Fleet3 {
            let c = incident_unchecked(&self.reservoir, i, j);
            if c > 0 {
                self.accumulated += c as f64 / self.p.powi(3);
            }
        }
        if self.rng.gen::<f64>() >= self.p {
            return;
        }
        match self.cfg.variant {
            FleetVariant::Fleet1 => {
                self.reservoir_count += incident_unchecked(&self.reservoir, i, j);
            }
            FleetVariant::Fleet2 => {
                let c = incident_unchecked(&self.reservoir, i, j);
                if c > 0 {
                    self.accumulated += c as f64 / self.p.powi(4);
                }
            }
            FleetVariant::Fleet3 => {}
        }
        self.reservoir.insert_edge(i, j, 0);
        while self.reservoir.edge_count() > self.cfg.capacity {
            self.subsample();
        }
    }

    /// One sub-sampling pass: keep each reservoir edge with probability `γ`.
    fn subsample(&mut self) {
        let gamma = self.cfg.gamma;
        for (i, j) in self.reservoir.sorted_edges() {
            if self.rng.gen::<f64>() >= gamma {
                self.reservoir.remove_edge(i, j);
            }
        }
        self.p *= gamma;
        self.rounds += 1;
        if self.cfg.variant == FleetVariant::Fleet1 {
            self.reservoir_count = count_butterflies(&self.reservoir);
        }
    }

    /// Current estimate of the butterflies in the stream seen so far.
    pub fn estimate(&self) -> f64 {
        match self.cfg.variant {
            FleetVariant::Fleet1 => self.reservoir_count as f64 / self.p.powi(4),
            FleetVariant::Fleet2 | FleetVariant::Fleet3 => self.accumulated,
        }
    }
}
