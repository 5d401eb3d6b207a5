//! Cumulative butterfly estimators over adaptive tumbling windows.
//!
//! After window `k` the estimate is
//!
//! ```text
//! B̂_k = B̂_{k-1} + B_G(W_k) + [k ≠ 0] · E_k^α
//! ```
//!
//! where `B_G(W_k)` is the exact count inside the window graph and `E_k` the
//! number of distinct edges seen since the stream began. The power term
//! stands in for butterflies whose edges straddle windows. The supervised
//! variant nudges `α` by a fixed step while ground truth is available.

use thiserror::Error;

use crate::exact::count_butterflies;
use crate::stream::Side;
use crate::windowing::ClosedWindow;

pub const DEFAULT_ALPHA: f64 = 1.4;
pub const DEFAULT_TOLERANCE: f64 = 0.05;
pub const DEFAULT_STEP: f64 = 0.005;

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("window {got} arrived but window {expected} was expected")]
    OutOfSequence { expected: usize, got: usize },
    #[error("ground truth for window {k} is zero; relative error is undefined")]
    ZeroTruth { k: usize },
    #[error("exponent must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("error bounds need at least one window after W_0")]
    NoInterWindowTerm,
    #[error("cumulative edge count for window {l} is zero")]
    ZeroEdges { l: usize },
}

/// Running estimator state. The exponent only moves in supervised steps.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorState {
    b_hat: f64,
    e_total: u64,
    alpha: f64,
    k: usize,
    tolerance: f64,
    step: f64,
    prev_error: Option<f64>,
}

impl EstimatorState {
    pub fn new(alpha: f64) -> Result<Self, EstimatorError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(EstimatorError::InvalidAlpha(alpha));
        }
        Ok(EstimatorState {
            b_hat: 0.0,
            e_total: 0,
            alpha,
            k: 0,
            tolerance: DEFAULT_TOLERANCE,
            step: DEFAULT_STEP,
            prev_error: None,
        })
    }

    pub fn with_supervision(mut self, tolerance: f64, step: f64) -> Self {
        self.tolerance = tolerance;
        self.step = step;
        self
    }

    pub fn estimate(&self) -> f64 {
        self.b_hat
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn edges_total(&self) -> u64 {
        self.e_total
    }

    /// Index of the next window this state expects.
    pub fn next_window(&self) -> usize {
        self.k
    }

    /// Relative error stored after the last supervised window.
    pub fn last_error(&self) -> Option<f64> {
        self.prev_error
    }

    /// Accounts for newly ingested distinct edges.
    pub fn add_edges(&mut self, n: u64) {
        self.e_total += n;
    }

    /// Plain step: the edge counter must already include window `k`'s edges.
    pub fn sgrapp_step(&mut self, k: usize, window_count: u64) -> Result<f64, EstimatorError> {
        if k != self.k {
            return Err(EstimatorError::OutOfSequence { expected: self.k, got: k });
        }
        self.b_hat += window_count as f64;
        if k != 0 {
            self.b_hat += (self.e_total as f64).powf(self.alpha);
        }
        self.k += 1;
        Ok(self.b_hat)
    }

    /// Supervised step. When `truth` is given, the exponent is first corrected
    /// from the previous window's relative error, then the estimate is made,
    /// then this window's error is stored. Without truth the exponent stays put.
    pub fn sgrapp_x_step(&mut self, k: usize, window_count: u64, truth: Option<u64>) -> Result<f64, EstimatorError> {
        if k != self.k {
            return Err(EstimatorError::OutOfSequence { expected: self.k, got: k });
        }
        if truth == Some(0) {
            return Err(EstimatorError::ZeroTruth { k });
        }
        if truth.is_some() {
            if let Some(err) = self.prev_error {
                if err > self.tolerance && self.alpha > self.step {
                    self.alpha -= self.step;
                } else if err < -self.tolerance {
                    self.alpha += self.step;
                }
            }
        }
        let estimate = self.sgrapp_step(k, window_count)?;
        if let Some(b) = truth {
            self.prev_error = Some((estimate - b as f64) / b as f64);
        }
        Ok(estimate)
    }

    /// Counts the window graph exactly and applies [`Self::sgrapp_step`].
    /// Returns `(estimate, in-window count)`.
    pub fn observe_window(&mut self, w: &ClosedWindow) -> Result<(f64, u64), EstimatorError> {
        self.check_sequence(w.k)?;
        self.add_edges(w.new_edges as u64);
        let count = count_butterflies(&w.snapshot);
        Ok((self.sgrapp_step(w.k, count)?, count))
    }

    /// Supervised counterpart of [`Self::observe_window`].
    pub fn observe_window_supervised(&mut self, w: &ClosedWindow, truth: Option<u64>) -> Result<(f64, u64), EstimatorError> {
        self.check_sequence(w.k)?;
        if truth == Some(0) {
            return Err(EstimatorError::ZeroTruth { k: w.k });
        }
        self.add_edges(w.new_edges as u64);
        let count = count_butterflies(&w.snapshot);
        Ok((self.sgrapp_x_step(w.k, count, truth)?, count))
    }

    fn check_sequence(&self, k: usize) -> Result<(), EstimatorError> {
        if k != self.k {
            return Err(EstimatorError::OutOfSequence { expected: self.k, got: k });
        }
        Ok(())
    }
}

/// Edge and i-vertex counts of one window's graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowStats {
    pub edges: u64,
    pub i_vertices: u64,
}

impl WindowStats {
    pub fn of(w: &ClosedWindow) -> Self {
        WindowStats {
            edges: w.snapshot.edge_count() as u64,
            i_vertices: w.snapshot.vertex_count(Side::I) as u64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorBounds {
    pub lower: f64,
    pub upper: f64,
}

impl ErrorBounds {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

fn pairs(n: u64) -> f64 {
    (n as f64) * (n.saturating_sub(1) as f64) / 2.0
}

/// Absolute-error bounds after window `k`, given `E_1..E_k` (cumulative
/// distinct edges at the end of each window after the first) and the stats
/// of window `k`. The lower bound is reported unclamped.
pub fn error_bounds(cum_edges: &[u64], w: WindowStats, alpha: f64) -> Result<ErrorBounds, EstimatorError> {
    if cum_edges.is_empty() {
        return Err(EstimatorError::NoInterWindowTerm);
    }
    if let Some(l) = cum_edges.iter().position(|&e| e == 0) {
        return Err(EstimatorError::ZeroEdges { l: l + 1 });
    }
    let power_sum: f64 = cum_edges.iter().map(|&e| (e as f64).powf(alpha)).sum();
    Ok(ErrorBounds {
        lower: power_sum - pairs(w.i_vertices),
        upper: power_sum - w.edges as f64 + 2.0 * w.i_vertices as f64,
    })
}

/// Bounds on the butterflies contributed across the boundary by window `k`:
/// `|E_W| - 2|V_i,W|` below (may be negative) and `C(|V_i,W|, 2)` above.
pub fn interwindow_bounds(w: WindowStats) -> ErrorBounds {
    ErrorBounds {
        lower: w.edges as f64 - 2.0 * w.i_vertices as f64,
        upper: pairs(w.i_vertices),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_window_has_no_power_term() {
        let mut s = EstimatorState::new(1.0).unwrap();
        s.add_edges(100);
        assert_eq!(s.sgrapp_step(0, 7), Ok(7.0));
    }

    #[test]
    fn recursion_examples() {
        for (alpha, want) in [(1.0, 110.0), (1.5, 1010.0)] {
            let mut s = EstimatorState::new(alpha).unwrap();
            s.sgrapp_step(0, 7).unwrap();
            s.add_edges(100);
            let got = s.sgrapp_step(1, 3).unwrap();
            assert!((got - want).abs() < 1e-9, "alpha {alpha}: {got}");
        }
    }

    #[test]
    fn sequence_is_enforced() {
        let mut s = EstimatorState::new(1.0).unwrap();
        assert_eq!(
            s.sgrapp_step(1, 0),
            Err(EstimatorError::OutOfSequence { expected: 0, got: 1 })
        );
        assert!(matches!(EstimatorState::new(0.0), Err(EstimatorError::InvalidAlpha(_))));
        assert!(matches!(EstimatorState::new(f64::NAN), Err(EstimatorError::InvalidAlpha(_))));
    }

    fn state_with_error(err: f64) -> EstimatorState {
        let mut s = EstimatorState::new(1.2).unwrap();
        s.prev_error = Some(err);
        s.k = 1;
        s.e_total = 10;
        s
    }

    #[test]
    fn exponent_moves_only_outside_band() {
        let mut s = state_with_error(0.10);
        s.sgrapp_x_step(1, 0, Some(50)).unwrap();
        assert!((s.alpha() - 1.195).abs() < 1e-12);

        let mut s = state_with_error(-0.10);
        s.sgrapp_x_step(1, 0, Some(50)).unwrap();
        assert!((s.alpha() - 1.205).abs() < 1e-12);

        let mut s = state_with_error(0.03);
        s.sgrapp_x_step(1, 0, Some(50)).unwrap();
        assert_eq!(s.alpha(), 1.2);

        // no truth: exponent frozen even with a stale large error
        let mut s = state_with_error(0.5);
        s.sgrapp_x_step(1, 0, None).unwrap();
        assert_eq!(s.alpha(), 1.2);
    }

    #[test]
    fn error_is_stored_after_estimate() {
        let mut s = EstimatorState::new(1.0).unwrap();
        s.sgrapp_x_step(0, 8, Some(10)).unwrap();
        assert!((s.last_error().unwrap() + 0.2).abs() < 1e-12);
    }

    #[test]
    fn zero_truth_is_rejected_without_side_effects() {
        let mut s = EstimatorState::new(1.0).unwrap();
        let before = s.clone();
        assert_eq!(s.sgrapp_x_step(0, 3, Some(0)), Err(EstimatorError::ZeroTruth { k: 0 }));
        assert_eq!(s, before);
    }

    #[test]
    fn unsupervised_x_matches_plain() {
        let counts = [5u64, 0, 12, 3, 9];
        let edges = [40u64, 31, 55, 12, 70];
        let mut a = EstimatorState::new(1.37).unwrap();
        let mut b = a.clone();
        for k in 0..counts.len() {
            a.add_edges(edges[k]);
            b.add_edges(edges[k]);
            let x = a.sgrapp_step(k, counts[k]).unwrap();
            let y = b.sgrapp_x_step(k, counts[k], None).unwrap();
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn bound_examples() {
        let w = WindowStats { edges: 40, i_vertices: 10 };
        let b = error_bounds(&[100], w, 1.0).unwrap();
        assert_eq!((b.lower, b.upper), (55.0, 80.0));
        assert_eq!(error_bounds(&[], w, 1.0), Err(EstimatorError::NoInterWindowTerm));
        assert_eq!(error_bounds(&[0], w, 1.0), Err(EstimatorError::ZeroEdges { l: 1 }));

        let b = interwindow_bounds(WindowStats { edges: 10, i_vertices: 4 });
        assert_eq!((b.lower, b.upper), (2.0, 6.0));
        let b = interwindow_bounds(WindowStats { edges: 4, i_vertices: 4 });
        assert_eq!((b.lower, b.upper), (-4.0, 6.0));
    }
}
