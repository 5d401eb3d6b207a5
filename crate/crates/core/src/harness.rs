//! Experiment runner: ground truth, estimator and baseline execution,
//! accuracy and timing metrics, CSV output.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rustc_hash::FxHashSet;
use thiserror::Error;

use crate::baselines::{FleetConfig, FleetError, FleetState};
use crate::estimator::{EstimatorError, EstimatorState, DEFAULT_STEP, DEFAULT_TOLERANCE};
use crate::exact::count_butterflies;
use crate::stream::{edge_key, BipartiteSnapshot, EdgeListFormat, StreamError, StreamRecord, StreamSource, Timestamp};
use crate::windowing::{AdaptiveWindows, WindowConfig, WindowError, WindowMode};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Fleet(#[from] FleetError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("truth file line {line}: {msg}")]
    TruthFormat { line: usize, msg: String },
    #[error("no window has positive ground truth")]
    NoUsableTruth,
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Exact cumulative butterflies `B_k` at the end of each window.
pub type GroundTruthSeries = Vec<u64>;

/// Caps on how much of the stream the ground truth covers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TruthLimit {
    pub records: Option<usize>,
    pub windows: Option<usize>,
}

impl TruthLimit {
    pub fn records(n: usize) -> Self {
        TruthLimit {
            records: Some(n),
            windows: None,
        }
    }

    pub fn windows(n: usize) -> Self {
        TruthLimit {
            records: None,
            windows: Some(n),
        }
    }
}

/// Counts the growing graph at every window boundary. Only windows that end
/// inside the record prefix are reported; the final window is included when
/// the whole stream fits.
pub fn ground_truth_series(records: &[StreamRecord], cfg: WindowConfig, limit: TruthLimit) -> Result<GroundTruthSeries, HarnessError> {
    let boundaries = WindowConfig {
        mode: WindowMode::Tumbling,
        edge_stamps: false,
        stream_dedup: false,
        ..cfg
    };
    let mut engine = AdaptiveWindows::new(boundaries);
    let mut growing = BipartiteSnapshot::new();
    let mut out = Vec::new();
    let prefix = limit.records.unwrap_or(usize::MAX).min(records.len());
    let max_windows = limit.windows.unwrap_or(usize::MAX);
    for r in &records[..prefix] {
        if out.len() >= max_windows {
            return Ok(out);
        }
        if engine.advance(r)?.is_some() {
            out.push(count_butterflies(&growing));
            if out.len() >= max_windows {
                return Ok(out);
            }
        }
        growing.ingest(r);
    }
    if prefix == records.len() && engine.flush().is_some() && out.len() < max_windows {
        out.push(count_butterflies(&growing));
    }
    Ok(out)
}

pub fn write_truth_csv<W: Write>(truth: &[u64], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "B_k"])?;
    for (k, b) in truth.iter().enumerate() {
        w.write_record([k.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `k,B_k` rows. Rows must be consecutive from 0.
pub fn read_truth_csv<R: io::Read>(input: R) -> Result<GroundTruthSeries, HarnessError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row?;
        let line = n + 2;
        let field = |idx: usize| -> Result<u64, HarnessError> {
            row.get(idx)
                .ok_or_else(|| HarnessError::TruthFormat { line, msg: "missing column".into() })?
                .parse::<u64>()
                .map_err(|e| HarnessError::TruthFormat { line, msg: e.to_string() })
        };
        let k = field(0)?;
        if k != out.len() as u64 {
            return Err(HarnessError::TruthFormat {
                line,
                msg: format!("expected window {}, found {k}", out.len()),
            });
        }
        out.push(field(1)?);
    }
    Ok(out)
}

pub fn read_truth_path(path: impl AsRef<Path>) -> Result<GroundTruthSeries, HarnessError> {
    read_truth_csv(BufReader::new(File::open(path)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapeReport {
    pub mape: f64,
    pub windows: usize,
    /// Windows left out because their truth is zero.
    pub skipped: Vec<usize>,
}

/// Mean of `|B_k - B̂_k| / B_k` over aligned windows with `B_k > 0`.
pub fn mape(truths: &[u64], estimates: &[f64]) -> Result<MapeReport, HarnessError> {
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut skipped = Vec::new();
    for (k, (&b, &e)) in truths.iter().zip(estimates).enumerate() {
        if b == 0 {
            skipped.push(k);
            continue;
        }
        sum += (b as f64 - e).abs() / b as f64;
        used += 1;
    }
    if used == 0 {
        return Err(HarnessError::NoUsableTruth);
    }
    Ok(MapeReport {
        mape: sum / used as f64,
        windows: used,
        skipped,
    })
}

pub fn signed_relative_error(truth: u64, estimate: f64) -> Option<f64> {
    (truth > 0).then(|| (estimate - truth as f64) / truth as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Algorithm {
    Sgrapp { alpha: f64 },
    /// `supervised_fraction` of the truth windows is fed back as supervision.
    SgrappX {
        alpha: f64,
        supervised_fraction: f64,
        tolerance: f64,
        step: f64,
    },
    Fleet(FleetConfig),
}

impl Algorithm {
    pub fn sgrapp_x(alpha: f64, supervised_fraction: f64) -> Self {
        Algorithm::SgrappX {
            alpha,
            supervised_fraction,
            tolerance: DEFAULT_TOLERANCE,
            step: DEFAULT_STEP,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Algorithm::Sgrapp { .. } => "sgrapp".into(),
            Algorithm::SgrappX { .. } => "sgrapp-x".into(),
            Algorithm::Fleet(c) => format!("{:?}", c.variant).to_lowercase(),
        }
    }

    /// Human-readable parameter echo.
    pub fn describe(&self) -> String {
        match self {
            Algorithm::Sgrapp { alpha } => format!("algo=sgrapp alpha={alpha}"),
            Algorithm::SgrappX {
                alpha,
                supervised_fraction,
                tolerance,
                step,
            } => format!("algo=sgrapp-x alpha={alpha} supervised={supervised_fraction} tolerance={tolerance} step={step}"),
            Algorithm::Fleet(c) => format!(
                "algo={} reservoir={} p={} gamma={} seed={}",
                self.name(),
                c.capacity,
                c.p,
                c.gamma,
                c.seed
            ),
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        match *self {
            Algorithm::Sgrapp { alpha } | Algorithm::SgrappX { alpha, .. } if !(alpha.is_finite() && alpha > 0.0) => {
                Err(HarnessError::Config(format!("alpha must be positive, got {alpha}")))
            }
            Algorithm::SgrappX { supervised_fraction: x, .. } if !(0.0..=1.0).contains(&x) => {
                Err(HarnessError::Config(format!("supervised fraction must lie in [0, 1], got {x}")))
            }
            Algorithm::Fleet(c) => FleetState::new(c).map(|_| ()).map_err(Into::into),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowMetrics {
    pub k: usize,
    pub w_begin: Timestamp,
    pub w_end: Timestamp,
    pub record_count: usize,
    /// Distinct edges seen since the stream began, after this window.
    pub edges_total: u64,
    /// Exact in-window count; zero for the reservoir baselines.
    pub window_count: u64,
    pub estimate: f64,
    pub alpha: Option<f64>,
    pub signed_rel_err: Option<f64>,
    pub latency_us: f64,
    pub window_throughput: f64,
    pub total_throughput: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub params: String,
    pub windows: usize,
    pub records: usize,
    pub final_estimate: f64,
    pub mape: Option<f64>,
    pub mean_throughput: f64,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub metrics: Vec<WindowMetrics>,
    pub summary: RunSummary,
}

impl RunReport {
    pub fn estimates(&self) -> Vec<f64> {
        self.metrics.iter().map(|m| m.estimate).collect()
    }
}

enum Runner {
    Sgrapp(EstimatorState, bool),
    Fleet(FleetState, FxHashSet<u64>, u64),
}

/// Runs one algorithm over an in-memory stream. `truth` is used for the
/// error column, MAPE and, under sgrapp-x, supervision.
pub fn run_stream(records: &[StreamRecord], algorithm: Algorithm, window: WindowConfig, truth: Option<&[u64]>) -> Result<RunReport, HarnessError> {
    algorithm.validate()?;
    let truth = truth.unwrap_or(&[]);
    let supervised = match algorithm {
        Algorithm::SgrappX { supervised_fraction, .. } => (supervised_fraction * truth.len() as f64).floor() as usize,
        _ => 0,
    };
    let mut runner = match algorithm {
        Algorithm::Sgrapp { alpha } => Runner::Sgrapp(EstimatorState::new(alpha)?, false),
        Algorithm::SgrappX { alpha, tolerance, step, .. } => {
            Runner::Sgrapp(EstimatorState::new(alpha)?.with_supervision(tolerance, step), true)
        }
        Algorithm::Fleet(c) => Runner::Fleet(FleetState::new(c)?, FxHashSet::default(), 0),
    };
    // reservoir baselines only need window boundaries, not window graphs
    let mut engine = AdaptiveWindows::new(if matches!(runner, Runner::Fleet(..)) {
        WindowConfig {
            mode: WindowMode::Tumbling,
            stream_dedup: false,
            edge_stamps: false,
            ..window
        }
    } else {
        window
    });

    let mut metrics = Vec::new();
    let mut window_start: Option<Instant> = None;
    let mut busy_s = 0.0;
    let mut records_done = 0usize;
    let run_start = Instant::now();

    let mut finish = |closed: crate::windowing::ClosedWindow,
                      runner: &mut Runner,
                      started: Instant,
                      metrics: &mut Vec<WindowMetrics>|
     -> Result<(), HarnessError> {
        let close_at = Instant::now();
        let k = closed.k;
        let (estimate, count, edges_total, alpha) = match runner {
            Runner::Sgrapp(state, supervise) => {
                let (est, count) = if *supervise {
                    let t = (k < supervised).then(|| truth[k]).filter(|&b| b > 0);
                    state.observe_window_supervised(&closed, t)?
                } else {
                    state.observe_window(&closed)?
                };
                (est, count, state.edges_total(), Some(state.alpha()))
            }
            Runner::Fleet(state, _, distinct) => (state.estimate(), 0, *distinct, None),
        };
        let done = Instant::now();
        let window_s = done.duration_since(started).as_secs_f64();
        busy_s += window_s;
        records_done += closed.record_count;
        metrics.push(WindowMetrics {
            k,
            w_begin: closed.w_begin,
            w_end: closed.w_end,
            record_count: closed.record_count,
            edges_total,
            window_count: count,
            estimate,
            alpha,
            signed_rel_err: truth.get(k).and_then(|&b| signed_relative_error(b, estimate)),
            latency_us: done.duration_since(close_at).as_secs_f64() * 1e6,
            window_throughput: rate(closed.record_count, window_s),
            total_throughput: rate(records_done, busy_s),
        });
        Ok(())
    };

    for r in records {
        let now = Instant::now();
        let started = *window_start.get_or_insert(now);
        if let Some(closed) = engine.advance(r)? {
            finish(closed, &mut runner, started, &mut metrics)?;
            window_start = Some(Instant::now());
        }
        if let Runner::Fleet(state, seen, distinct) = &mut runner {
            if seen.insert(edge_key(r.i, r.j)) {
                *distinct += 1;
                state.process(r.i, r.j);
            }
        }
    }
    if let Some(closed) = engine.flush() {
        let started = window_start.unwrap_or_else(Instant::now);
        finish(closed, &mut runner, started, &mut metrics)?;
    }

    let estimates: Vec<f64> = metrics.iter().map(|m| m.estimate).collect();
    let mape_value = if truth.is_empty() {
        None
    } else {
        mape(truth, &estimates).ok().map(|m| m.mape)
    };
    let summary = RunSummary {
        params: format!(
            "{} nt_per_window={} mode={:?}",
            algorithm.describe(),
            window.nt_per_window,
            window.mode
        ),
        windows: metrics.len(),
        records: records.len(),
        final_estimate: estimates.last().copied().unwrap_or(0.0),
        mape: mape_value,
        mean_throughput: rate(records.len(), busy_s),
        elapsed_s: run_start.elapsed().as_secs_f64(),
    };
    Ok(RunReport { metrics, summary })
}

fn rate(n: usize, secs: f64) -> f64 {
    if secs > 0.0 {
        n as f64 / secs
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub window: WindowConfig,
    pub input: PathBuf,
    pub format: EdgeListFormat,
    pub truth: Option<PathBuf>,
    /// Per-window CSV; the summary goes to `<output>.summary.csv`.
    pub output: Option<PathBuf>,
    pub seed: u64,
}

/// Reads the input, runs the algorithm and writes the CSV outputs.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunReport, HarnessError> {
    let mut algorithm = cfg.algorithm;
    if let Algorithm::Fleet(ref mut c) = algorithm {
        c.seed = cfg.seed;
    }
    let source = StreamSource::read_path(&cfg.input, cfg.format)?;
    let truth = cfg.truth.as_ref().map(read_truth_path).transpose()?;
    let report = run_stream(source.records(), algorithm, cfg.window, truth.as_deref())?;
    if let Some(path) = &cfg.output {
        write_metrics_csv(&report.metrics, BufWriter::new(File::create(path)?))?;
        let mut summary_path = path.clone().into_os_string();
        summary_path.push(".summary.csv");
        write_summary_csv(&report.summary, BufWriter::new(File::create(summary_path)?))?;
    }
    Ok(report)
}

pub const METRICS_HEADER: [&str; 12] = [
    "k",
    "w_begin",
    "w_end",
    "records",
    "edges_total",
    "B_G_window",
    "B_hat",
    "alpha",
    "signed_rel_err",
    "latency_us",
    "window_throughput",
    "total_throughput",
];

/// Formats with six significant digits, switching to exponent notation for
/// very large or small magnitudes. Output parses back with `str::parse`.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = format!("{:.5e}", x);
    let (mantissa, e) = exp.split_once('e').expect("exponent form");
    let e: i32 = e.parse().expect("integer exponent");
    if (-5..6).contains(&e) {
        let decimals = (5 - e).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        trim_zeros(&s).to_string()
    } else {
        let mut out = trim_zeros(mantissa).to_string();
        let _ = write!(out, "e{e}");
        out
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig6).unwrap_or_default()
}

pub fn write_metrics_csv<W: Write>(metrics: &[WindowMetrics], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for m in metrics {
        w.write_record([
            m.k.to_string(),
            m.w_begin.to_string(),
            m.w_end.to_string(),
            m.record_count.to_string(),
            m.edges_total.to_string(),
            m.window_count.to_string(),
            format_sig6(m.estimate),
            opt(m.alpha),
            opt(m.signed_rel_err),
            format_sig6(m.latency_us),
            format_sig6(m.window_throughput),
            format_sig6(m.total_throughput),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_path(metrics: &[WindowMetrics], path: impl AsRef<Path>) -> Result<(), HarnessError> {
    write_metrics_csv(metrics, BufWriter::new(File::create(path)?))
}

pub fn write_summary_csv<W: Write>(s: &RunSummary, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["params", "windows", "records", "final_estimate", "mape", "mean_throughput", "elapsed_s"])?;
    w.write_record([
        s.params.clone(),
        s.windows.to_string(),
        s.records.to_string(),
        format_sig6(s.final_estimate),
        opt(s.mape),
        format_sig6(s.mean_throughput),
        format_sig6(s.elapsed_s),
    ])?;
    w.flush()?;
    Ok(())
}

/// Parses a metrics CSV written by [`write_metrics_csv`].
pub fn read_metrics_csv<R: BufRead>(input: R) -> Result<Vec<WindowMetrics>, HarnessError> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row?;
        let line = n + 2;
        let bad = |msg: String| HarnessError::TruthFormat { line, msg };
        let get = |i: usize| row.get(i).ok_or_else(|| bad(format!("missing column {}", METRICS_HEADER[i])));
        let int = |i: usize| -> Result<u64, HarnessError> { get(i)?.parse().map_err(|e| bad(format!("{e}"))) };
        let float = |i: usize| -> Result<f64, HarnessError> { get(i)?.parse().map_err(|e| bad(format!("{e}"))) };
        let maybe = |i: usize| -> Result<Option<f64>, HarnessError> {
            let s = get(i)?;
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| bad(format!("{e}")))
            }
        };
        out.push(WindowMetrics {
            k: int(0)? as usize,
            w_begin: int(1)?,
            w_end: int(2)?,
            record_count: int(3)? as usize,
            edges_total: int(4)?,
            window_count: int(5)?,
            estimate: float(6)?,
            alpha: maybe(7)?,
            signed_rel_err: maybe(8)?,
            latency_us: float(9)?,
            window_throughput: float(10)?,
            total_throughput: float(11)?,
        });
    }
    Ok(out)
}
