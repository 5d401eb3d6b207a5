use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use bistream::analysis::{
    densification_series, fit_densification, fit_power_law, hub_report, interarrival_distribution, young_old_hubs,
    degree_support_correlation, DEFAULT_DENSIFICATION_PREFIX,
};
use bistream::baselines::{FleetConfig, FleetVariant, DEFAULT_GAMMA};
use bistream::estimator::{DEFAULT_STEP, DEFAULT_TOLERANCE};
use bistream::exact::{butterfly_support, count_butterflies};
use bistream::harness::{
    format_sig6, ground_truth_series, read_truth_path, run_stream, write_metrics_csv, write_summary_csv, write_truth_csv,
    Algorithm, TruthLimit,
};
use bistream::stream::{BipartiteSnapshot, Delimiter, EdgeListFormat, Side, StreamSource};
use bistream::synth::{generate_stream, BaConfig, StampMode};
use bistream::windowing::{split_windows, WindowConfig, WindowMode};
use bistream::DEFAULT_ALPHA;

#[derive(Parser)]
#[command(name = "bistream", version, about = "Butterfly counting on bipartite edge streams")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Input layout: whitespace, csv or tsv.
    #[arg(long, global = true, value_enum, default_value_t = InputFormat::Whitespace)]
    format: InputFormat,
    /// Single-character delimiter; overrides --format.
    #[arg(long, global = true)]
    delimiter: Option<char>,
    /// Zero-based i,j,timestamp columns.
    #[arg(long, global = true, default_value = "0,1,2")]
    columns: String,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Whitespace,
    Csv,
    Tsv,
}

#[derive(Subcommand)]
enum Command {
    /// Exact butterfly count of the whole input graph.
    CountExact {
        input: PathBuf,
        /// Emit per-vertex support instead of the total.
        #[arg(long)]
        support: bool,
    },
    /// Stream the input through an estimator and write per-window metrics.
    Run(RunArgs),
    /// Generate a preferential-attachment bipartite stream.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// random:LO:HI or real:FILE
        #[arg(long, default_value = "random:0:1000")]
        stamps: String,
    },
    /// Characterisation metrics over a stream prefix.
    Analyze {
        input: PathBuf,
        #[arg(long, value_enum)]
        metric: Metric,
        #[arg(long, default_value_t = DEFAULT_DENSIFICATION_PREFIX)]
        prefix: usize,
        /// Window width for landmark checkpoints (younghubs).
        #[arg(long, default_value_t = 100)]
        nt_per_window: usize,
        /// Also write the polynomial fit table here (densification).
        #[arg(long)]
        fit_out: Option<PathBuf>,
    },
    /// Exact cumulative counts at window boundaries, as `k,B_k` rows.
    Truth {
        input: PathBuf,
        #[arg(long)]
        nt_per_window: usize,
        /// Only windows ending within this many records.
        #[arg(long)]
        prefix: Option<usize>,
        /// At most this many windows.
        #[arg(long)]
        windows: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Densification,
    Interarrival,
    Hubs,
    Correlation,
    Younghubs,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Algo {
    Sgrapp,
    SgrappX,
    Fleet1,
    Fleet2,
    Fleet3,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Tumbling,
    Landmark,
}

#[derive(Args)]
struct RunArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Algo::Sgrapp)]
    algo: Algo,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long)]
    nt_per_window: usize,
    /// `k,B_k` ground truth for error columns and supervision.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Fraction of truth windows used for supervision (sgrapp-x).
    #[arg(long, default_value_t = 1.0)]
    supervised_frac: f64,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    step: f64,
    /// Reservoir capacity; defaults to 1% of the stream.
    #[arg(long)]
    reservoir: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Tumbling)]
    window_mode: ModeArg,
    #[arg(long)]
    tolerate_disorder: bool,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn input_format(g: &Global) -> Result<EdgeListFormat> {
    let cols: Vec<usize> = g
        .columns
        .split(',')
        .map(|c| c.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad --columns {:?}", g.columns))?;
    let [i, j, t] = cols[..] else {
        bail!("--columns needs exactly three indices, got {:?}", g.columns);
    };
    let delimiter = match (g.delimiter, g.format) {
        (Some(c), _) => Delimiter::Char(c),
        (None, InputFormat::Whitespace) => Delimiter::Whitespace,
        (None, InputFormat::Csv) => Delimiter::Char(','),
        (None, InputFormat::Tsv) => Delimiter::Char('\t'),
    };
    Ok(EdgeListFormat {
        delimiter,
        ..EdgeListFormat::default().with_columns(i, j, t)
    })
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(path: &Path, fmt: EdgeListFormat) -> Result<StreamSource> {
    StreamSource::read_path(path, fmt).with_context(|| format!("reading {}", path.display()))
}

fn label(src: &StreamSource, side: Side, v: u32) -> String {
    src.interner()
        .and_then(|n| n.name(side, v))
        .map(str::to_owned)
        .unwrap_or_else(|| v.to_string())
}

fn dispatch(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::CountExact { input, support } => {
            let src = load(&input, input_format(g)?)?;
            let graph = BipartiteSnapshot::from_edges(src.records().iter().map(|r| (r.i, r.j)));
            let mut w = csv::Writer::from_writer(output(&g.out)?);
            if support {
                let s = butterfly_support(&graph);
                w.write_record(["side", "vertex", "degree", "support"])?;
                for (side, name) in [(Side::I, "i"), (Side::J, "j")] {
                    let mut vs: Vec<u32> = graph.vertices(side).collect();
                    vs.sort_unstable();
                    for v in vs {
                        w.write_record([
                            name.to_string(),
                            label(&src, side, v),
                            graph.degree(v, side).unwrap_or(0).to_string(),
                            s.get(v, side).unwrap_or(0).to_string(),
                        ])?;
                    }
                }
            } else {
                w.write_record(["records", "edges", "i_vertices", "j_vertices", "butterflies"])?;
                w.write_record([
                    src.len().to_string(),
                    graph.edge_count().to_string(),
                    graph.vertex_count(Side::I).to_string(),
                    graph.vertex_count(Side::J).to_string(),
                    count_butterflies(&graph).to_string(),
                ])?;
            }
            w.flush()?;
        }
        Command::Run(args) => run(g, args)?,
        Command::Generate { n, m, stamps } => {
            let mode = parse_stamps(&stamps, g)?;
            let src = generate_stream(&BaConfig::new(n, m, g.seed), &mode)?;
            let mut out = output(&g.out)?;
            src.write_edge_list(&mut out)?;
            out.flush()?;
        }
        Command::Analyze {
            input,
            metric,
            prefix,
            nt_per_window,
            fit_out,
        } => {
            let src = load(&input, input_format(g)?)?;
            analyze(g, &src, metric, prefix, nt_per_window, fit_out)?;
        }
        Command::Truth {
            input,
            nt_per_window,
            prefix,
            windows,
        } => {
            let src = load(&input, input_format(g)?)?;
            let truth = ground_truth_series(src.records(), WindowConfig::new(nt_per_window)?, TruthLimit { records: prefix, windows })?;
            write_truth_csv(&truth, output(&g.out)?)?;
        }
    }
    Ok(())
}

fn parse_stamps(arg: &str, g: &Global) -> Result<StampMode> {
    let seed = g.seed.wrapping_add(1);
    if let Some(range) = arg.strip_prefix("random:") {
        let (lo, hi) = range.split_once(':').ok_or_else(|| anyhow!("expected random:LO:HI, got {arg}"))?;
        return Ok(StampMode::Random {
            lo: lo.parse().context("stamp range start")?,
            hi: hi.parse().context("stamp range end")?,
            seed,
        });
    }
    if let Some(path) = arg.strip_prefix("real:") {
        let src = load(Path::new(path), input_format(g)?)?;
        return Ok(StampMode::ShuffledReal {
            stamps: src.records().iter().map(|r| r.tau).collect(),
            seed,
        });
    }
    bail!("--stamps must be random:LO:HI or real:FILE, got {arg}")
}

fn run(g: &Global, a: RunArgs) -> Result<()> {
    let src = load(&a.input, input_format(g)?)?;
    let mode = match a.window_mode {
        ModeArg::Tumbling => WindowMode::Tumbling,
        ModeArg::Landmark => WindowMode::Landmark,
    };
    let window = WindowConfig::new(a.nt_per_window)?
        .with_mode(mode)
        .with_tolerate_disorder(a.tolerate_disorder);
    let fleet = |variant| {
        let capacity = a.reservoir.unwrap_or_else(|| FleetConfig::for_stream(variant, src.len(), 0.01).capacity);
        Algorithm::Fleet(FleetConfig::new(variant, capacity).with_p(a.p).with_gamma(a.gamma).with_seed(g.seed))
    };
    let algorithm = match a.algo {
        Algo::Sgrapp => Algorithm::Sgrapp { alpha: a.alpha },
        Algo::SgrappX => Algorithm::SgrappX {
            alpha: a.alpha,
            supervised_fraction: a.supervised_frac,
            tolerance: a.tolerance,
            step: a.step,
        },
        Algo::Fleet1 => fleet(FleetVariant::Fleet1),
        Algo::Fleet2 => fleet(FleetVariant::Fleet2),
        Algo::Fleet3 => fleet(FleetVariant::Fleet3),
    };
    if a.algo == Algo::SgrappX && a.truth.is_none() {
        eprintln!("warning: sgrapp-x without --truth runs unsupervised");
    }
    let truth = a.truth.as_ref().map(read_truth_path).transpose()?;
    let report = run_stream(src.records(), algorithm, window, truth.as_deref())?;
    write_metrics_csv(&report.metrics, output(&g.out)?)?;
    match &g.out {
        Some(p) => {
            let mut path = p.clone().into_os_string();
            path.push(".summary.csv");
            write_summary_csv(&report.summary, BufWriter::new(File::create(&path)?))?;
        }
        None => write_summary_csv(&report.summary, io::stderr().lock())?,
    }
    let s = &report.summary;
    eprintln!(
        "{}: {} windows, final estimate {}, mape {}, {} edges/s",
        s.params,
        s.windows,
        format_sig6(s.final_estimate),
        s.mape.map(format_sig6).unwrap_or_else(|| "n/a".into()),
        format_sig6(s.mean_throughput)
    );
    Ok(())
}

fn prefix_graph(src: &StreamSource, prefix: usize) -> BipartiteSnapshot {
    let mut graph = BipartiteSnapshot::with_edge_stamps();
    for r in src.records().iter().take(prefix) {
        graph.ingest(r);
    }
    graph
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig6).unwrap_or_default()
}

fn analyze(g: &Global, src: &StreamSource, metric: Metric, prefix: usize, nt: usize, fit_out: Option<PathBuf>) -> Result<()> {
    let mut w = csv::Writer::from_writer(output(&g.out)?);
    match metric {
        Metric::Densification => {
            let series = densification_series(src.records(), prefix);
            w.write_record(["t", "butterflies"])?;
            for (t, b) in &series.points {
                w.write_record([t.to_string(), b.to_string()])?;
            }
            if let Ok(p) = fit_power_law(&series) {
                eprintln!("power law: eta {} (r2 {})", format_sig6(p.eta), format_sig6(p.r_squared));
            }
            if let Some(path) = fit_out {
                let fit = fit_densification(&series)?;
                let mut fw = csv::Writer::from_path(path)?;
                fw.write_record(["degree", "rmse", "r_squared", "non_decreasing", "best"])?;
                for f in &fit.fits {
                    fw.write_record([
                        f.degree.to_string(),
                        format_sig6(f.rmse),
                        format_sig6(f.r_squared),
                        f.non_decreasing.to_string(),
                        (fit.best_degree == Some(f.degree)).to_string(),
                    ])?;
                }
                fw.flush()?;
            }
        }
        Metric::Interarrival => {
            let hist = interarrival_distribution(&prefix_graph(src, prefix))?;
            w.write_record(["gap", "pairs"])?;
            for (gap, n) in hist {
                w.write_record([gap.to_string(), n.to_string()])?;
            }
        }
        Metric::Hubs => {
            let graph = prefix_graph(src, prefix);
            let stamps: Vec<u64> = src.records().iter().take(prefix).map(|r| r.tau).collect();
            let r = hub_report(&graph, &stamps);
            let f = &r.fractions;
            let mut rows: Vec<(String, String)> = vec![
                ("i_hubs".into(), r.hubs_i.len().to_string()),
                ("j_hubs".into(), r.hubs_j.len().to_string()),
                ("i_hub_connection".into(), format_sig6(r.connection_i.value)),
                ("j_hub_connection".into(), format_sig6(r.connection_j.value)),
                ("butterflies".into(), f.butterflies.to_string()),
            ];
            rows.extend((0..5).map(|h| (format!("frac_{h}_hubs"), format_sig6(f.by_total[h]))));
            rows.extend((0..3).map(|h| (format!("frac_{h}_i_hubs"), format_sig6(f.by_i[h]))));
            rows.extend((0..3).map(|h| (format!("frac_{h}_j_hubs"), format_sig6(f.by_j[h]))));
            // probability of one or two hubs on either side
            let p_t = f.by_i[1] + f.by_i[2] + f.by_j[1] + f.by_j[2];
            rows.push(("hub_probability_sum".into(), format_sig6(p_t)));
            w.write_record(["metric", "value"])?;
            for (k, v) in rows {
                w.write_record([k, v])?;
            }
        }
        Metric::Correlation => {
            let (ci, cj) = degree_support_correlation(&prefix_graph(src, prefix));
            w.write_record(["side", "pearson"])?;
            w.write_record(["i".to_string(), opt(ci)])?;
            w.write_record(["j".to_string(), opt(cj)])?;
        }
        Metric::Younghubs => {
            let records = &src.records()[..prefix.min(src.len())];
            let windows = split_windows(records, WindowConfig::landmark(nt)?)?;
            w.write_record(["k", "records", "young_i", "young_j", "old_i", "old_j"])?;
            let mut upto = 0;
            for win in &windows {
                upto += win.record_count;
                let stamps: Vec<u64> = records[..upto].iter().map(|r| r.tau).collect();
                let a = young_old_hubs(&win.snapshot, &stamps);
                w.write_record([win.k, upto, a.young_i, a.young_j, a.old_i, a.old_j].map(|x| x.to_string()))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
