//! Adaptive time-based windows.
//!
//! A window spans a fixed number of *unique* timestamps rather than a fixed
//! duration or record count. It closes when a record carrying a new stamp
//! would exceed that number; the record then opens the next window. All
//! records sharing a stamp therefore land in the same window.

use rustc_hash::FxHashSet;
use thiserror::Error;

use crate::stream::{edge_key, BipartiteSnapshot, StreamRecord, Timestamp};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WindowError {
    #[error("nt_per_window must be at least 1")]
    ZeroWidth,
    #[error("out-of-order record: tau {tau} arrived after {max_seen}")]
    OutOfOrder { tau: Timestamp, max_seen: Timestamp },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WindowMode {
    /// Disjoint consecutive windows; the graph is renewed at each boundary.
    #[default]
    Tumbling,
    /// Fixed start, growing end; the graph is never retired.
    Landmark,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowConfig {
    pub nt_per_window: usize,
    pub mode: WindowMode,
    /// Ignore edges already seen in any earlier window, not just the current one.
    pub stream_dedup: bool,
    /// Accept late records into the current window instead of failing.
    pub tolerate_disorder: bool,
    /// Keep per-edge arrival stamps in the window snapshot.
    pub edge_stamps: bool,
}

impl WindowConfig {
    pub fn new(nt_per_window: usize) -> Result<Self, WindowError> {
        if nt_per_window == 0 {
            return Err(WindowError::ZeroWidth);
        }
        Ok(WindowConfig {
            nt_per_window,
            mode: WindowMode::Tumbling,
            stream_dedup: true,
            tolerate_disorder: false,
            edge_stamps: false,
        })
    }

    pub fn landmark(nt_per_window: usize) -> Result<Self, WindowError> {
        Ok(WindowConfig {
            mode: WindowMode::Landmark,
            ..Self::new(nt_per_window)?
        })
    }

    pub fn with_mode(mut self, mode: WindowMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_edge_stamps(mut self, on: bool) -> Self {
        self.edge_stamps = on;
        self
    }

    pub fn with_stream_dedup(mut self, on: bool) -> Self {
        self.stream_dedup = on;
        self
    }

    pub fn with_tolerate_disorder(mut self, on: bool) -> Self {
        self.tolerate_disorder = on;
        self
    }
}

/// A finished window. `w_end` is exclusive: the stamp that opened the next
/// window, or one past the last stamp for a flushed final window.
#[derive(Clone, Debug)]
pub struct ClosedWindow {
    pub k: usize,
    pub w_begin: Timestamp,
    pub w_end: Timestamp,
    pub snapshot: BipartiteSnapshot,
    pub record_count: usize,
    pub unique_stamp_count: usize,
    /// Edges in this window never seen before in the stream (or in the
    /// window, without stream dedup).
    pub new_edges: usize,
}

/// Window engine state machine.
#[derive(Debug)]
pub struct AdaptiveWindows {
    cfg: WindowConfig,
    k: usize,
    w_begin: Option<Timestamp>,
    last_tau: Timestamp,
    max_seen: Option<Timestamp>,
    unique_stamps: FxHashSet<Timestamp>,
    snapshot: BipartiteSnapshot,
    record_count: usize,
    new_edges: usize,
    seen_edges: FxHashSet<u64>,
    late_records: usize,
}

impl AdaptiveWindows {
    pub fn new(cfg: WindowConfig) -> Self {
        AdaptiveWindows {
            cfg,
            k: 0,
            w_begin: None,
            last_tau: 0,
            max_seen: None,
            unique_stamps: FxHashSet::default(),
            snapshot: fresh_snapshot(&cfg),
            record_count: 0,
            new_edges: 0,
            seen_edges: FxHashSet::default(),
            late_records: 0,
        }
    }

    pub fn config(&self) -> &WindowConfig {
        &self.cfg
    }

    /// Index of the window currently being filled.
    pub fn current_index(&self) -> usize {
        self.k
    }

    pub fn current_snapshot(&self) -> &BipartiteSnapshot {
        &self.snapshot
    }

    /// Number of late records absorbed under `tolerate_disorder`.
    pub fn late_records(&self) -> usize {
        self.late_records
    }

    /// Feeds one record. Returns the window it closed, if any; the record
    /// itself always ends up in the (possibly new) current window.
    pub fn advance(&mut self, r: &StreamRecord) -> Result<Option<ClosedWindow>, WindowError> {
        if let Some(max_seen) = self.max_seen {
            if r.tau < max_seen {
                if !self.cfg.tolerate_disorder {
                    return Err(WindowError::OutOfOrder { tau: r.tau, max_seen });
                }
                self.late_records += 1;
                self.ingest(r);
                return Ok(None);
            }
        }
        self.max_seen = Some(r.tau);

        let mut closed = None;
        let is_new_stamp = !self.unique_stamps.contains(&r.tau);
        if is_new_stamp && self.unique_stamps.len() == self.cfg.nt_per_window {
            closed = Some(self.close(r.tau));
        }
        if self.w_begin.is_none() {
            self.w_begin = Some(r.tau);
        }
        self.unique_stamps.insert(r.tau);
        self.ingest(r);
        Ok(closed)
    }

    /// Emits the partially filled final window, if it holds any record.
    pub fn flush(&mut self) -> Option<ClosedWindow> {
        if self.record_count == 0 {
            return None;
        }
        let end = self.last_tau + 1;
        Some(self.close(end))
    }

    fn ingest(&mut self, r: &StreamRecord) {
        self.record_count += 1;
        self.last_tau = self.last_tau.max(r.tau);
        let fresh = match self.cfg.mode {
            WindowMode::Tumbling if self.cfg.stream_dedup => {
                self.seen_edges.insert(edge_key(r.i, r.j)) && self.snapshot.ingest(r)
            }
            _ => self.snapshot.ingest(r),
        };
        if fresh {
            self.new_edges += 1;
        }
    }

    fn close(&mut self, w_end: Timestamp) -> ClosedWindow {
        let snapshot = match self.cfg.mode {
            WindowMode::Tumbling => std::mem::replace(&mut self.snapshot, fresh_snapshot(&self.cfg)),
            WindowMode::Landmark => self.snapshot.clone(),
        };
        let window = ClosedWindow {
            k: self.k,
            w_begin: self.w_begin.unwrap_or(w_end),
            w_end,
            snapshot,
            record_count: self.record_count,
            unique_stamp_count: self.unique_stamps.len(),
            new_edges: self.new_edges,
        };
        self.k += 1;
        self.w_begin = None;
        self.unique_stamps.clear();
        self.record_count = 0;
        self.new_edges = 0;
        window
    }
}

fn fresh_snapshot(cfg: &WindowConfig) -> BipartiteSnapshot {
    if cfg.edge_stamps {
        BipartiteSnapshot::with_edge_stamps()
    } else {
        BipartiteSnapshot::new()
    }
}

/// Runs a whole record slice through the engine, flushing at the end.
pub fn split_windows(records: &[StreamRecord], cfg: WindowConfig) -> Result<Vec<ClosedWindow>, WindowError> {
    let mut engine = AdaptiveWindows::new(cfg);
    let mut out = Vec::new();
    for r in records {
        if let Some(w) = engine.advance(r)? {
            out.push(w);
        }
    }
    out.extend(engine.flush());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::Side;
    use proptest::prelude::*;

    fn stamps(ts: &[u64]) -> Vec<StreamRecord> {
        ts.iter()
            .enumerate()
            .map(|(n, &t)| StreamRecord::new(t, n as u32, n as u32))
            .collect()
    }

    #[test]
    fn closes_on_overflowing_stamp() {
        let recs = stamps(&[1, 1, 2, 2, 3]);
        let mut engine = AdaptiveWindows::new(WindowConfig::new(2).unwrap());
        for r in &recs[..4] {
            assert!(engine.advance(r).unwrap().is_none());
        }
        let w0 = engine.advance(&recs[4]).unwrap().expect("tau=3 closes W_0");
        assert_eq!(w0.k, 0);
        assert_eq!(w0.record_count, 4);
        assert_eq!(w0.unique_stamp_count, 2);
        assert_eq!((w0.w_begin, w0.w_end), (1, 3));
        let w1 = engine.flush().unwrap();
        assert_eq!((w1.k, w1.w_begin, w1.record_count), (1, 3, 1));
        assert!(engine.flush().is_none());
    }

    #[test]
    fn uniform_stamps_behave_like_count_windows() {
        let recs = stamps(&(0..23).collect::<Vec<_>>());
        let ws = split_windows(&recs, WindowConfig::new(5).unwrap()).unwrap();
        assert_eq!(ws.len(), 5);
        assert!(ws[..4].iter().all(|w| w.record_count == 5));
        assert_eq!(ws[4].record_count, 3);
    }

    #[test]
    fn flush_partial_window() {
        let mut engine = AdaptiveWindows::new(WindowConfig::new(2).unwrap());
        assert!(engine.flush().is_none());
        for r in stamps(&[7, 7, 7]) {
            engine.advance(&r).unwrap();
        }
        let w = engine.flush().unwrap();
        assert_eq!((w.unique_stamp_count, w.record_count, w.w_end), (1, 3, 8));
    }

    #[test]
    fn out_of_order_rejected_or_absorbed() {
        let recs = stamps(&[5, 3]);
        let mut strict = AdaptiveWindows::new(WindowConfig::new(2).unwrap());
        strict.advance(&recs[0]).unwrap();
        assert_eq!(
            strict.advance(&recs[1]).unwrap_err(),
            WindowError::OutOfOrder { tau: 3, max_seen: 5 }
        );
        let mut lax = AdaptiveWindows::new(WindowConfig::new(2).unwrap().with_tolerate_disorder(true));
        lax.advance(&recs[0]).unwrap();
        assert!(lax.advance(&recs[1]).unwrap().is_none());
        assert_eq!(lax.late_records(), 1);
        assert_eq!(lax.flush().unwrap().record_count, 2);
    }

    #[test]
    fn zero_width_rejected() {
        assert_eq!(WindowConfig::new(0).unwrap_err(), WindowError::ZeroWidth);
    }

    #[test]
    fn stream_dedup_skips_edges_from_earlier_windows() {
        let recs = vec![
            StreamRecord::new(1, 0, 0),
            StreamRecord::new(2, 0, 0),
            StreamRecord::new(2, 0, 1),
        ];
        let ws = split_windows(&recs, WindowConfig::new(1).unwrap()).unwrap();
        assert_eq!(ws[1].snapshot.edge_count(), 1);
        assert_eq!(ws[1].new_edges, 1);
        assert_eq!(ws[1].record_count, 2);

        let ws = split_windows(&recs, WindowConfig::new(1).unwrap().with_stream_dedup(false)).unwrap();
        assert_eq!(ws[1].snapshot.edge_count(), 2);
    }

    #[test]
    fn landmark_windows_grow() {
        let recs = stamps(&[1, 2, 3, 4, 5]);
        let ws = split_windows(&recs, WindowConfig::landmark(2).unwrap()).unwrap();
        let sizes: Vec<_> = ws.iter().map(|w| w.snapshot.edge_count()).collect();
        assert_eq!(sizes, vec![2, 4, 5]);
        assert_eq!(ws[2].snapshot.first_seen(0, Side::I), Some(1));
    }

    fn arb_stream() -> impl Strategy<Value = Vec<StreamRecord>> {
        prop::collection::vec((0u64..4, 0u32..6, 0u32..6), 1..150).prop_map(|steps| {
            let mut tau = 0;
            steps
                .into_iter()
                .map(|(dt, i, j)| {
                    tau += dt;
                    StreamRecord::new(tau, i, j)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn windows_partition_the_stream(recs in arb_stream(), nt in 1usize..7) {
            let ws = split_windows(&recs, WindowConfig::new(nt).unwrap()).unwrap();
            let total: usize = ws.iter().map(|w| w.record_count).sum();
            prop_assert_eq!(total, recs.len());

            // replay: consecutive record runs belong to consecutive windows
            let mut offset = 0;
            for (idx, w) in ws.iter().enumerate() {
                prop_assert_eq!(w.k, idx);
                let slice = &recs[offset..offset + w.record_count];
                offset += w.record_count;
                prop_assert!(slice.iter().all(|r| r.tau >= w.w_begin && r.tau < w.w_end));
                let mut uniq: Vec<_> = slice.iter().map(|r| r.tau).collect();
                uniq.dedup();
                prop_assert_eq!(uniq.len(), w.unique_stamp_count);
                if idx + 1 < ws.len() {
                    prop_assert_eq!(w.unique_stamp_count, nt);
                    prop_assert_eq!(w.w_end, ws[idx + 1].w_begin);
                } else {
                    prop_assert!(w.unique_stamp_count <= nt);
                }
            }
        }
    }
}
