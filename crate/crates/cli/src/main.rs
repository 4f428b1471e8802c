//! `mvcapa`: detect collective and point anomalies in delimited numeric tables
//! and run the simulation experiments.

mod report;
mod table;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mvcapa::simbench::{self, Affected, RuntimeKind, ScenarioSpec};
use mvcapa::{penalty, DetectorConfig, Regime, RobustBaseline};

use report::AnomalyReport;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("malformed table: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] mvcapa::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Detect collective and point anomalies in multivariate series.
///
/// All logarithms are natural logarithms.
#[derive(Debug, Parser)]
#[command(name = "mvcapa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect anomalies in a table (rows = time, columns = components) and
    /// print a JSON report.
    Detect(DetectArgs),
    /// Write a synthetic series and its ground truth.
    Simulate(SimulateArgs),
    /// Sweep the penalty scale over simulated replicates; prints scale, TPR and
    /// false positives per series.
    Roc(RocArgs),
    /// Find the penalty scale giving a target false-positive rate on
    /// anomaly-free replicates.
    Calibrate(CalibrateArgs),
    /// Time the detector over increasing sizes and fit a log-log slope.
    Runtime(RuntimeArgs),
}

#[derive(Debug, Args)]
struct DetectorFlags {
    /// Penalty regime: 1, 2, 3, composite, 2lag or theorem1 [default:
    /// composite without lags, 2lag with lags]
    #[arg(long)]
    regime: Option<Regime>,
    /// False-positive exponent [default: 2 ln n + 2 ln p]
    #[arg(long)]
    psi: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Multiplier applied to every penalty except the lag penalty.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 2)]
    min_len: usize,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long, default_value_t = 0)]
    max_lag: usize,
    /// Detect point anomalies (default).
    #[arg(long, overrides_with = "no_points")]
    points: bool,
    #[arg(long)]
    no_points: bool,
    /// Lag penalty. Required with --max-lag for regimes other than 2lag,
    /// which folds lags into beta and uses 0; 2 (1 + epsilon) ln(w + 1) is
    /// the usual value.
    #[arg(long)]
    gamma: Option<f64>,
    /// Constant of the theorem1 regime.
    #[arg(long, default_value_t = 2.0)]
    theorem1_c: f64,
    /// Disable pruning of the dynamic programme.
    #[arg(long)]
    no_pruning: bool,
}

impl DetectorFlags {
    fn config(&self, n: usize, p: usize, default_max_len: Option<usize>) -> DetectorConfig {
        let mut cfg = DetectorConfig::default_for(n, p);
        cfg.regime = self.regime.unwrap_or(if self.max_lag > 0 {
            Regime::R2Lag
        } else {
            Regime::Composite
        });
        if let Some(psi) = self.psi {
            cfg.psi = psi;
        }
        cfg.epsilon = self.epsilon;
        cfg.penalty_scale = self.scale;
        cfg.min_len = self.min_len;
        cfg.max_len = self.max_len.or(default_max_len);
        cfg.max_lag = self.max_lag;
        cfg.enable_point_anomalies = !self.no_points;
        cfg.gamma = self.gamma;
        cfg.theorem1_c = self.theorem1_c;
        cfg.pruning = !self.no_pruning;
        cfg
    }
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// Input table, or - for standard input.
    input: String,
    #[command(flatten)]
    detector: DetectorFlags,
    /// Use the data as given instead of robustly standardizing it (median and
    /// 1.4826 x MAD per column).
    #[arg(long)]
    no_standardize: bool,
    /// Known typical means, one per column; implies --no-standardize.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mu0: Option<Vec<f64>>,
    /// Known typical standard deviations, one per column; implies
    /// --no-standardize.
    #[arg(long, value_delimiter = ',')]
    sigma0: Option<Vec<f64>>,
    /// Use greedy binary segmentation instead of the exact optimum.
    #[arg(long)]
    greedy: bool,
}

#[derive(Debug, Args)]
struct ScenarioFlags {
    /// Simulation preset 1-4 [default: 1]
    #[arg(long)]
    setting: Option<u8>,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    p: usize,
    /// Per-step probability of a collective anomaly starting.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    mean_length: Option<f64>,
    /// Number of affected components, or "all".
    #[arg(long)]
    k: Option<String>,
    /// Standard deviation of the anomalous means.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    max_true_lag: Option<usize>,
    /// Number of point anomalies, each N(0, 8 ln p) on one component.
    #[arg(long, default_value_t = 0)]
    point_anomalies: usize,
    #[arg(long)]
    seed: Option<u64>,
}

impl ScenarioFlags {
    fn spec(&self, seed: u64) -> CliResult<ScenarioSpec> {
        let mut spec = ScenarioSpec::setting(self.setting.unwrap_or(1), self.n, self.p, seed)?
            .with_points(self.point_anomalies);
        if let Some(r) = self.rate {
            spec.anomaly_rate = r;
        }
        if let Some(m) = self.mean_length {
            spec.mean_length = m;
        }
        if let Some(k) = &self.k {
            spec.k_affected = if k == "all" {
                Affected::All
            } else {
                Affected::Count(
                    k.parse()
                        .map_err(|_| CliError::Usage(format!("--k must be a count or all: {k}")))?,
                )
            };
        }
        if let Some(s) = self.sigma {
            spec.sigma_anom = s;
        }
        if let Some(w) = self.max_true_lag {
            spec.max_true_lag = w;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioFlags,
    /// Two fixed windows on a 500 x 5 series instead of random placement.
    #[arg(long, conflicts_with = "setting")]
    illustration: bool,
    /// Stagger component onsets in the illustration.
    #[arg(long, requires = "illustration")]
    lagged: bool,
    /// Data file; the ground truth goes next to it with extension .truth.json.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct RocArgs {
    #[command(flatten)]
    scenario: ScenarioFlags,
    #[command(flatten)]
    detector: DetectorFlags,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,1,1.5,2,4")]
    scales: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    p: usize,
    #[arg(long, default_value_t = 0.05)]
    target: f64,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[command(flatten)]
    detector: DetectorFlags,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct RuntimeArgs {
    /// null, regular or large-p.
    #[arg(long, default_value = "null")]
    kind: RuntimeKind,
    /// Sizes to time (n, or p for large-p) [default: powers of two]
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random();
        eprintln!("seed: {s}");
        s
    })
}

fn sidecar_path(data: &Path) -> PathBuf {
    data.with_extension("truth.json")
}

fn run_detect(args: &DetectArgs) -> CliResult<()> {
    let (_, raw) = table::read(&args.input)?;
    let (n, p) = (raw.n(), raw.p());
    let (x, baseline) = if args.mu0.is_some() || args.sigma0.is_some() {
        let mu0 = args.mu0.clone().unwrap_or_else(|| vec![0.0; p]);
        let sigma0 = args.sigma0.clone().unwrap_or_else(|| vec![1.0; p]);
        let baseline = RobustBaseline::new(mu0, sigma0)?;
        (baseline.apply(&raw)?, baseline)
    } else if args.no_standardize {
        (raw, RobustBaseline::standard(p))
    } else {
        mvcapa::standardize(&raw)?
    };
    let cfg = args.detector.config(n, p, None);
    let pen = penalty::build(&cfg, p)?;
    let result = if args.greedy {
        mvcapa::greedy_cbs(&x, &pen, &cfg)?
    } else {
        mvcapa::detect(&x, &pen, &cfg)?
    };
    let report = AnomalyReport::new(n, p, cfg, baseline, result);
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    Ok(())
}

fn run_simulate(args: &SimulateArgs) -> CliResult<()> {
    let seed = resolve_seed(args.scenario.seed);
    let (x, truth) = if args.illustration {
        simbench::generate_planted(500, 5, &simbench::illustration_windows(args.lagged), seed)?
    } else {
        simbench::generate(&args.scenario.spec(seed)?)?
    };
    let file = std::fs::File::create(&args.output)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", args.output.display())))?;
    table::write(std::io::BufWriter::new(file), &x)?;
    let mut side = std::fs::File::create(sidecar_path(&args.output))?;
    serde_json::to_writer_pretty(&mut side, &truth)?;
    writeln!(side)?;
    Ok(())
}

fn run_roc(args: &RocArgs) -> CliResult<()> {
    let seed = resolve_seed(args.scenario.seed);
    let spec = args.scenario.spec(seed)?;
    let cfg = args.detector.config(spec.n, spec.p, Some(100));
    let points = simbench::roc_curve(&spec, &cfg, &args.scales, args.reps)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "scale\ttpr\tfpr")?;
    for pt in points {
        writeln!(out, "{}\t{}\t{}", pt.scale, pt.tpr, pt.fpr)?;
    }
    Ok(())
}

fn run_calibrate(args: &CalibrateArgs) -> CliResult<()> {
    let seed = resolve_seed(args.seed);
    let cfg = args.detector.config(args.n, args.p, None);
    let cal = simbench::calibrate_scale(args.n, args.p, args.target, args.reps, &cfg, seed)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "scale\tachieved")?;
    writeln!(out, "{}\t{}", cal.scale, cal.achieved)?;
    Ok(())
}

fn run_runtime(args: &RuntimeArgs) -> CliResult<()> {
    let seed = resolve_seed(args.seed);
    let sizes = args.sizes.clone().unwrap_or_else(|| match args.kind {
        RuntimeKind::LargeP => (4..=10).map(|e| 1 << e).collect(),
        _ => (9..=13).map(|e| 1 << e).collect(),
    });
    let t = simbench::runtime_sweep(args.kind, &sizes, seed)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "size\tseconds")?;
    for (size, secs) in &t.rows {
        writeln!(out, "{size}\t{secs}")?;
    }
    writeln!(out, "# slope\t{}", t.slope)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Detect(a) => run_detect(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Roc(a) => run_roc(a),
        Command::Calibrate(a) => run_calibrate(a),
        Command::Runtime(a) => run_runtime(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
