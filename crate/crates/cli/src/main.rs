//! `certicd`: train, query and evaluate learned collision detectors.
//!
//! Results go to stdout (model files, CSV, or `key=value` lines); logs go
//! to stderr.
//!
//! Exit codes: 0 success, 1 runtime failure or a failed check, 2 guarantee
//! failure or infeasible-at-this-scale, 64 usage error, 66 unreadable
//! input, 73 unwritable output.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use certicd::experiments::{
    delta_grid, estimate_delta_max, evaluate, save_sweep_csv, sweep, verify_margin,
    write_sweep_csv, ExperimentError, SweepParams, DEFAULT_MC_SAMPLES,
};
use certicd::featuremap::DEFAULT_FEATURE_CAP;
use certicd::lcd::{
    adaptive_lcd, lbcd, load_model, save_model, AdaptiveConfig, GuaranteeReport, LbcdConfig,
    LbcdOutcome, LbcdParams, TraceEntry, TrainedLcd,
};
use certicd::scene::{load_scene, parse_decimal_list};
use certicd::stats::{sample_complexity_bound, GuaranteeParams};
use certicd::{Configuration, LcdError, Mode, SceneOracle};

const FEATURE_CAP_ENV: &str = "CERTICD_FEATURE_CAP";

const EXIT_FAILURE: u8 = 1;
const EXIT_GUARANTEE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_NOINPUT: u8 = 66;
const EXIT_CANTCREAT: u8 = 73;

#[derive(Parser)]
#[command(name = "certicd", version, about = "Learned collision detection with sample-complexity bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a detector with the adaptive loop (or a single run with --single)
    Train(TrainArgs),
    /// Classify one configuration with a saved model
    Query(QueryArgs),
    /// Held-out 0-1 loss of a saved model
    Evaluate(EvaluateArgs),
    /// Interior fraction, interior error and sample bound over a δ grid
    Sweep(SweepArgs),
    /// Check the reference-separator margin on interior samples
    VerifyMargin(VerifyMarginArgs),
    /// Sample-complexity bound for (d, δ, ε, ξ)
    Complexity(ComplexityArgs),
    /// Largest δ whose interior still covers 1 − ε of the space
    DeltaMax(DeltaMaxArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    xi: f64,
    /// Starting δ (default √d/4)
    #[arg(long)]
    delta0: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    m0: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// certified | empirical
    #[arg(long, default_value = "certified", value_parser = parse_mode)]
    mode: Mode,
    #[arg(long, default_value = "model.lcd")]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    iteration_cap: u32,
    /// Largest number of samples one run may draw
    #[arg(long, default_value_t = 1_000_000_000)]
    sample_budget: u64,
    /// One run at (delta0, m0) instead of the adaptive loop
    #[arg(long)]
    single: bool,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated coordinates in [0,1]
    #[arg(long, allow_hyphen_values = true)]
    config: String,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Comma-separated ε values
    #[arg(long, default_value = "0.05,0.1,0.2")]
    epsilons: String,
    #[arg(long)]
    delta_min: f64,
    #[arg(long)]
    delta_max: f64,
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value_t = 0.05)]
    xi: f64,
    #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyMarginArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    delta: f64,
    /// Number of δ-interior points to check
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ComplexityArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    xi: f64,
}

#[derive(Args)]
struct DeltaMaxArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
    samples: u64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_mode(text: &str) -> Result<Mode, String> {
    Mode::parse(text).ok_or_else(|| format!("unknown mode `{text}` (certified|empirical)"))
}

/// A failed invocation: the exit code and what to tell the user.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        let code = match &e {
            ExperimentError::InvalidParameter(_) | ExperimentError::Stats(_) => EXIT_USAGE,
            ExperimentError::Io(_) | ExperimentError::Csv(_) => EXIT_CANTCREAT,
            _ => EXIT_FAILURE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<LcdError> for Failure {
    fn from(e: LcdError) -> Self {
        let code = match &e {
            LcdError::InvalidParameter(_) | LcdError::Stats(_) => EXIT_USAGE,
            LcdError::Infeasible { .. } => EXIT_GUARANTEE,
            _ => EXIT_FAILURE,
        };
        Failure::new(code, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Query(a) => query(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::VerifyMargin(a) => verify_margin_cmd(a),
        Command::Complexity(a) => complexity(a),
        Command::DeltaMax(a) => delta_max(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            log::error!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_scene(path: &Path) -> Result<SceneOracle, Failure> {
    load_scene(path).map_err(|e| Failure::new(EXIT_NOINPUT, format!("{}: {e}", path.display())))
}

fn read_model(path: &Path) -> Result<TrainedLcd, Failure> {
    load_model(path).map_err(|e| Failure::new(EXIT_NOINPUT, format!("{}: {e}", path.display())))
}

fn feature_cap() -> Result<(usize, Option<String>), Failure> {
    match std::env::var(FEATURE_CAP_ENV) {
        Ok(v) => {
            let cap = v
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&c| c > 0)
                .ok_or_else(|| Failure::usage(format!("{FEATURE_CAP_ENV} must be a positive integer, got `{v}`")))?;
            Ok((cap, Some(v)))
        }
        Err(_) => Ok((DEFAULT_FEATURE_CAP, None)),
    }
}

fn print_lines<K: AsRef<str>>(lines: &[(K, String)]) {
    let mut out = std::io::stdout().lock();
    for (k, v) in lines {
        let _ = writeln!(out, "{}={v}", k.as_ref());
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn report_lines(r: &GuaranteeReport) -> Vec<(&'static str, String)> {
    vec![
        ("sample_count", r.sample_count.to_string()),
        ("interior_count", r.interior_count.to_string()),
        ("p_hat", num(r.p_hat)),
        ("z", num(r.z)),
        ("epsilon_interior", num(r.epsilon_interior)),
        ("required_m", num(r.required_m)),
        ("c1", r.c1.to_string()),
        ("c2", r.c2.to_string()),
        ("normal_approx_valid", r.normal_approx_valid.to_string()),
        ("confidence", num(r.confidence)),
    ]
}

fn log_trace(trace: &[TraceEntry]) {
    for t in trace {
        log::info!(
            "iteration {}: m={} delta={} seed={} -> {}",
            t.iteration,
            t.m,
            t.delta,
            t.seed,
            t.status.as_str()
        );
    }
}

fn train(a: TrainArgs) -> Outcome {
    let scene = read_scene(&a.scene)?;
    let (cap, cap_note) = feature_cap()?;
    let config = LbcdConfig {
        mode: a.mode,
        feature_cap: cap,
        sample_budget: a.sample_budget,
        ..LbcdConfig::default()
    };
    let trained = if a.single {
        let delta = a.delta0.unwrap_or((scene.dim() as f64).sqrt() / 4.0);
        let params = LbcdParams {
            epsilon: a.epsilon,
            xi: a.xi,
            delta,
            m: a.m0,
            seed: a.seed,
        };
        match lbcd(&scene, &params, &config) {
            Ok(LbcdOutcome::Trained(lcd)) => Ok(*lcd),
            Ok(LbcdOutcome::Fail(report)) => {
                let mut lines = vec![("status", "fail".to_string())];
                lines.extend(report_lines(&report));
                print_lines(&lines);
                return Err(Failure::new(
                    EXIT_GUARANTEE,
                    format!("guarantee check failed (c1={}, c2={})", report.c1, report.c2),
                ));
            }
            Err(e) => Err(e),
        }
    } else {
        let adaptive = AdaptiveConfig {
            m0: a.m0,
            delta0: a.delta0,
            iteration_cap: a.iteration_cap,
        };
        adaptive_lcd(&scene, a.epsilon, a.xi, a.seed, &adaptive, &config)
    };
    let mut lcd = match trained {
        Ok(lcd) => lcd,
        Err(LcdError::Infeasible { reason, trace }) => {
            log_trace(&trace);
            print_lines(&[
                ("status", "infeasible-at-this-scale".to_string()),
                ("reason", reason.to_string()),
                ("iterations", trace.len().to_string()),
            ]);
            return Err(Failure::new(
                EXIT_GUARANTEE,
                format!("infeasible-at-this-scale: {reason}"),
            ));
        }
        Err(e) => return Err(e.into()),
    };
    log_trace(&lcd.provenance.trace);
    if let Some(v) = cap_note {
        lcd.provenance.notes.push((FEATURE_CAP_ENV.to_string(), v));
    }
    save_model(&lcd, &a.out)
        .map_err(|e| Failure::new(EXIT_CANTCREAT, format!("{}: {e}", a.out.display())))?;
    let mut lines = vec![
        ("status", "trained".to_string()),
        ("model", a.out.display().to_string()),
        ("mode", lcd.mode().to_string()),
        ("delta", num(lcd.provenance.delta)),
        ("m", lcd.provenance.m.to_string()),
        ("n", lcd.featuremap.n().to_string()),
        ("support_vectors", lcd.model.diagnostics.support_vectors.to_string()),
    ];
    lines.extend(report_lines(&lcd.guarantee));
    print_lines(&lines);
    Ok(())
}

fn query(a: QueryArgs) -> Outcome {
    let lcd = read_model(&a.model)?;
    let x = Configuration::parse(&a.config).map_err(|e| Failure::usage(e.to_string()))?;
    let label = lcd.classify(x.coords()).map_err(|e| Failure::usage(e.to_string()))?;
    println!("{label}");
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Outcome {
    let lcd = read_model(&a.model)?;
    let scene = read_scene(&a.scene)?;
    let report = evaluate(&lcd, &scene, a.samples, a.seed)?;
    print_lines(&report.to_key_values());
    Ok(())
}

fn sweep_cmd(a: SweepArgs) -> Outcome {
    let scene = read_scene(&a.scene)?;
    let epsilons = parse_decimal_list(&a.epsilons)
        .ok_or_else(|| Failure::usage(format!("cannot parse --epsilons `{}`", a.epsilons)))?;
    if a.steps == 0 || a.delta_max < a.delta_min {
        return Err(Failure::usage("need --steps ≥ 1 and --delta-min ≤ --delta-max"));
    }
    let params = SweepParams {
        epsilons,
        deltas: delta_grid(a.delta_min, a.delta_max, a.steps),
        xi: a.xi,
        samples: a.samples,
        seed: a.seed,
    };
    let rows = sweep(&scene, &params)?;
    match &a.out {
        Some(path) => {
            save_sweep_csv(&rows, path).map_err(|e| {
                Failure::new(EXIT_CANTCREAT, format!("{}: {e}", path.display()))
            })?;
            log::info!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => write_sweep_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn verify_margin_cmd(a: VerifyMarginArgs) -> Outcome {
    let scene = read_scene(&a.scene)?;
    let (cap, _) = feature_cap()?;
    let r = verify_margin(&scene, a.delta, a.samples, a.seed, cap)?;
    let argmin: Vec<String> = r.argmin.iter().map(|v| num(*v)).collect();
    print_lines(&[
        ("n", r.n.to_string()),
        ("gamma_star", num(r.gamma_star)),
        ("min_margin", num(r.min_margin)),
        ("argmin", argmin.join(",")),
        ("interior_points", r.interior_points.to_string()),
        ("draws", r.draws.to_string()),
        ("violations", r.violations.to_string()),
        ("holds", r.holds().to_string()),
    ]);
    if r.holds() {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_FAILURE,
            format!("{} interior points fall below the margin bound", r.violations),
        ))
    }
}

fn complexity(a: ComplexityArgs) -> Outcome {
    let params = GuaranteeParams::new(a.epsilon, a.xi, a.delta, a.d)
        .map_err(|e| Failure::usage(e.to_string()))?;
    println!("{}", sample_complexity_bound(&params));
    Ok(())
}

fn delta_max(a: DeltaMaxArgs) -> Outcome {
    let scene = read_scene(&a.scene)?;
    let e = estimate_delta_max(&scene, a.epsilon, a.samples, a.seed, a.tol)?;
    if e.degenerate {
        log::warn!("every δ keeps 1 − ε of the samples interior; reporting √d");
    }
    log::info!(
        "p_hat at the estimate is {:.6} ± {:.2e} (95% normal interval); the estimate inherits that uncertainty",
        e.p_at_estimate.value,
        e.p_at_estimate.half_width
    );
    print_lines(&[
        ("delta_max", num(e.delta_max)),
        ("upper", num(e.upper)),
        ("p_hat", num(e.p_at_estimate.value)),
        ("half_width", num(e.p_at_estimate.half_width)),
        ("degenerate", e.degenerate.to_string()),
    ]);
    Ok(())
}
