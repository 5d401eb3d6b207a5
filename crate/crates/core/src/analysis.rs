//! Characterisation suite for butterfly streams: densification fits,
//! inter-arrival gaps of butterfly edge pairs, hub statistics and the
//! degree–support correlation.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

use crate::exact::{butterfly_support, for_each_butterfly, incident_unchecked};
use crate::stream::{BipartiteSnapshot, Side, StreamRecord, Timestamp, VertexId};

pub const DEFAULT_DENSIFICATION_PREFIX: usize = 5000;
pub const MAX_FIT_DEGREE: usize = 10;
const GRID_POINTS: usize = 1000;
const MONOTONE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("series has {0} points; at least {min} are needed", min = MAX_FIT_DEGREE + 2)]
    SeriesTooShort(usize),
    #[error("power-law fit needs at least two points with positive t and B(t)")]
    PowerLawDegenerate,
    #[error("snapshot does not carry per-edge timestamps")]
    MissingEdgeStamps,
}

/// `(t, B(t))` pairs: `t` counts records ingested, `B(t)` the exact
/// butterflies in the graph built from them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DensificationSeries {
    pub points: Vec<(u64, u64)>,
}

impl DensificationSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<u64> {
        self.points.last().map(|p| p.1)
    }

    fn xy(&self) -> (Vec<f64>, Vec<f64>) {
        self.points.iter().map(|&(t, b)| (t as f64, b as f64)).unzip()
    }
}

/// Exact `B(t)` after each of the first `limit` records, maintained by adding
/// each new edge's incident count to a running total.
pub fn densification_series(records: &[StreamRecord], limit: usize) -> DensificationSeries {
    let mut g = BipartiteSnapshot::new();
    let mut total = 0u64;
    let mut points = Vec::with_capacity(limit.min(records.len()));
    for (t, r) in records.iter().take(limit).enumerate() {
        if !g.contains_edge(r.i, r.j) {
            total += incident_unchecked(&g, r.i, r.j);
            g.insert_edge(r.i, r.j, r.tau);
        }
        points.push((t as u64 + 1, total));
    }
    DensificationSeries { points }
}

/// Least-squares polynomial in the scaled variable `u = (x - center) / scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyFit {
    pub degree: usize,
    /// Ascending powers of `u`.
    pub coefficients: Vec<f64>,
    pub center: f64,
    pub scale: f64,
    pub rmse: f64,
    pub r_squared: f64,
    pub non_decreasing: bool,
}

impl PolyFit {
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.scale;
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    /// Degrees 1 through 10 in order.
    pub fits: Vec<PolyFit>,
    /// `None` when no candidate is non-decreasing.
    pub best_degree: Option<usize>,
}

impl FitResult {
    pub fn fit(&self, degree: usize) -> Option<&PolyFit> {
        self.fits.iter().find(|f| f.degree == degree)
    }

    pub fn best(&self) -> Option<&PolyFit> {
        self.best_degree.and_then(|d| self.fit(d))
    }
}

fn fit_polynomial(x: &[f64], y: &[f64], degree: usize) -> PolyFit {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let center = (lo + hi) / 2.0;
    let scale = if hi > lo { (hi - lo) / 2.0 } else { 1.0 };
    let n = x.len();
    let a = DMatrix::from_fn(n, degree + 1, |r, c| ((x[r] - center) / scale).powi(c as i32));
    let b = DVector::from_column_slice(y);
    let coeffs = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .expect("svd computed with both factors");
    let coefficients: Vec<f64> = coeffs.iter().copied().collect();
    let mut fit = PolyFit {
        degree,
        coefficients,
        center,
        scale,
        rmse: 0.0,
        r_squared: 0.0,
        non_decreasing: false,
    };
    let mean = y.iter().sum::<f64>() / n as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        ss_res += (yi - fit.eval(xi)).powi(2);
        ss_tot += (yi - mean).powi(2);
    }
    fit.rmse = (ss_res / n as f64).sqrt();
    fit.r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res <= f64::EPSILON * n as f64 {
        1.0
    } else {
        0.0
    };
    let y_range = y.iter().copied().fold(f64::NEG_INFINITY, f64::max) - y.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = MONOTONE_TOLERANCE * y_range.max(1.0);
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let mut prev = fit.eval(lo);
    fit.non_decreasing = (1..GRID_POINTS).all(|k| {
        let v = fit.eval(lo + step * k as f64);
        let ok = v - prev >= -tol;
        prev = v;
        ok
    });
    fit
}

/// Fits degrees 1 to 10 and picks the lowest-RMSE non-decreasing candidate,
/// breaking near-ties by higher `R²` and then lower degree.
pub fn fit_densification(series: &DensificationSeries) -> Result<FitResult, AnalysisError> {
    let (x, y) = series.xy();
    fit_points(&x, &y)
}

pub fn fit_points(x: &[f64], y: &[f64]) -> Result<FitResult, AnalysisError> {
    if x.len() < MAX_FIT_DEGREE + 2 {
        return Err(AnalysisError::SeriesTooShort(x.len()));
    }
    let fits: Vec<PolyFit> = (1..=MAX_FIT_DEGREE).map(|d| fit_polynomial(x, y, d)).collect();
    let mut best: Option<&PolyFit> = None;
    for f in fits.iter().filter(|f| f.non_decreasing) {
        best = match best {
            None => Some(f),
            Some(b) => {
                let tie = (f.rmse - b.rmse).abs() <= 1e-9 * b.rmse.max(f.rmse).max(f64::MIN_POSITIVE);
                if (!tie && f.rmse < b.rmse) || (tie && f.r_squared > b.r_squared + 1e-12) {
                    Some(f)
                } else {
                    Some(b)
                }
            }
        };
    }
    let best_degree = best.map(|f| f.degree);
    Ok(FitResult { fits, best_degree })
}

/// `B(t) ≈ c · t^η`, fitted by least squares in log-log space over points
/// with positive coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawFit {
    pub eta: f64,
    pub coefficient: f64,
    pub r_squared: f64,
}

pub fn fit_power_law(series: &DensificationSeries) -> Result<PowerLawFit, AnalysisError> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = series
        .points
        .iter()
        .filter(|&&(t, b)| t > 0 && b > 0)
        .map(|&(t, b)| ((t as f64).ln(), (b as f64).ln()))
        .unzip();
    let n = lx.len() as f64;
    if lx.len() < 2 {
        return Err(AnalysisError::PowerLawDegenerate);
    }
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::PowerLawDegenerate);
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let eta = sxy / sxx;
    let intercept = my - eta * mx;
    let ss_res: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - eta * x).powi(2)).sum();
    Ok(PowerLawFit {
        eta,
        coefficient: intercept.exp(),
        r_squared: if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 },
    })
}

/// Histogram of `|τ1 - τ2|` over the six edge pairs of every butterfly; a
/// pair shared by several butterflies is counted once per butterfly.
pub fn interarrival_distribution(g: &BipartiteSnapshot) -> Result<BTreeMap<u64, u64>, AnalysisError> {
    if !g.tracks_edge_stamps() {
        return Err(AnalysisError::MissingEdgeStamps);
    }
    let mut hist = BTreeMap::new();
    for_each_butterfly(g, |b| {
        let stamps = b.edges().map(|(i, j)| g.edge_stamp(i, j).expect("edge stamp tracked"));
        for x in 0..4 {
            for y in x + 1..4 {
                *hist.entry(stamps[x].abs_diff(stamps[y])).or_insert(0) += 1;
            }
        }
    });
    Ok(hist)
}

/// Mean of the distinct degree values on a side.
pub fn unique_degree_mean(g: &BipartiteSnapshot, side: Side) -> Option<f64> {
    let unique: FxHashSet<usize> = g.degrees(side).map(|(_, d)| d).collect();
    if unique.is_empty() {
        return None;
    }
    Some(unique.iter().sum::<usize>() as f64 / unique.len() as f64)
}

/// Vertices whose degree strictly exceeds the mean of the distinct degree
/// values on their side.
pub fn hub_set(g: &BipartiteSnapshot, side: Side) -> FxHashSet<VertexId> {
    match unique_degree_mean(g, side) {
        None => FxHashSet::default(),
        Some(mean) => g.degrees(side).filter(|&(_, d)| d as f64 > mean).map(|(v, _)| v).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HubConnection {
    pub value: f64,
    /// Set when the side has no hubs and `value` is a placeholder 0.
    pub no_hubs: bool,
}

/// `Σ deg(hub) / (|E| · N_hub)`.
pub fn hub_connection_fraction(g: &BipartiteSnapshot, side: Side) -> HubConnection {
    let hubs = hub_set(g, side);
    if hubs.is_empty() || g.edge_count() == 0 {
        return HubConnection { value: 0.0, no_hubs: true };
    }
    let deg_sum: usize = hubs.iter().map(|&v| g.degree(v, side).unwrap_or(0)).sum();
    HubConnection {
        value: deg_sum as f64 / (g.edge_count() as f64 * hubs.len() as f64),
        no_hubs: false,
    }
}

/// Butterflies classified by how many of their vertices are hubs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HubFractions {
    /// Index `h`: fraction with `h` hubs among all four vertices.
    pub by_total: [f64; 5],
    pub by_i: [f64; 3],
    pub by_j: [f64; 3],
    pub butterflies: u64,
}

impl HubFractions {
    /// True when the snapshot held no butterflies and every fraction is 0.
    pub fn is_empty(&self) -> bool {
        self.butterflies == 0
    }

    /// Fraction of butterflies touching at least one hub on either side.
    pub fn with_any_hub(&self) -> f64 {
        1.0 - self.by_total[0]
    }
}

pub fn butterfly_hub_fractions(g: &BipartiteSnapshot) -> HubFractions {
    let hubs_i = hub_set(g, Side::I);
    let hubs_j = hub_set(g, Side::J);
    let mut total = [0u64; 5];
    let mut by_i = [0u64; 3];
    let mut by_j = [0u64; 3];
    let mut n = 0u64;
    for_each_butterfly(g, |b| {
        let hi = hubs_i.contains(&b.i1) as usize + hubs_i.contains(&b.i2) as usize;
        let hj = hubs_j.contains(&b.j1) as usize + hubs_j.contains(&b.j2) as usize;
        total[hi + hj] += 1;
        by_i[hi] += 1;
        by_j[hj] += 1;
        n += 1;
    });
    let mut out = HubFractions {
        butterflies: n,
        ..Default::default()
    };
    if n > 0 {
        let d = n as f64;
        out.by_total = total.map(|c| c as f64 / d);
        out.by_i = by_i.map(|c| c as f64 / d);
        out.by_j = by_j.map(|c| c as f64 / d);
    }
    out
}

/// Pearson correlation; `None` for fewer than two points or zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let (dx, dy) = (x[k] - mx, y[k] - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Degree against butterfly support over every vertex of each side.
pub fn degree_support_correlation(g: &BipartiteSnapshot) -> (Option<f64>, Option<f64>) {
    let support = butterfly_support(g);
    let side_corr = |side: Side| {
        let (deg, sup): (Vec<f64>, Vec<f64>) = g
            .degrees(side)
            .map(|(v, d)| (d as f64, support.get(v, side).unwrap_or(0) as f64))
            .unzip();
        pearson(&deg, &sup)
    };
    (side_corr(Side::I), side_corr(Side::J))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HubAges {
    pub young_i: usize,
    pub young_j: usize,
    pub old_i: usize,
    pub old_j: usize,
}

/// Hubs first seen in the last quarter of the ordered unique stamps are
/// young, those in the first quarter old. Each quarter holds `⌈N/4⌉` stamps.
pub fn young_old_hubs(g: &BipartiteSnapshot, seen_stamps: &[Timestamp]) -> HubAges {
    let mut stamps = seen_stamps.to_vec();
    stamps.sort_unstable();
    stamps.dedup();
    let mut ages = HubAges::default();
    if stamps.is_empty() {
        return ages;
    }
    let q = (stamps.len() + 3) / 4;
    let old_until = stamps[q - 1];
    let young_from = stamps[stamps.len() - q];
    for side in [Side::I, Side::J] {
        for v in hub_set(g, side) {
            let Some(first) = g.first_seen(v, side) else { continue };
            let (young, old) = match side {
                Side::I => (&mut ages.young_i, &mut ages.old_i),
                Side::J => (&mut ages.young_j, &mut ages.old_j),
            };
            if first >= young_from {
                *young += 1;
            }
            if first <= old_until {
                *old += 1;
            }
        }
    }
    ages
}

#[derive(Clone, Debug, PartialEq)]
pub struct HubReport {
    pub hubs_i: FxHashSet<VertexId>,
    pub hubs_j: FxHashSet<VertexId>,
    pub connection_i: HubConnection,
    pub connection_j: HubConnection,
    pub ages: HubAges,
    pub fractions: HubFractions,
}

pub fn hub_report(g: &BipartiteSnapshot, seen_stamps: &[Timestamp]) -> HubReport {
    HubReport {
        hubs_i: hub_set(g, Side::I),
        hubs_j: hub_set(g, Side::J),
        connection_i: hub_connection_fraction(g, Side::I),
        connection_j: hub_connection_fraction(g, Side::J),
        ages: young_old_hubs(g, seen_stamps),
        fractions: butterfly_hub_fractions(g),
    }
}

/// Degree map of a side, sorted by vertex id.
pub fn degree_table(g: &BipartiteSnapshot, side: Side) -> Vec<(VertexId, usize)> {
    let map: FxHashMap<VertexId, usize> = g.degrees(side).collect();
    let mut v: Vec<_> = map.into_iter().collect();
    v.sort_unstable();
    v
}
