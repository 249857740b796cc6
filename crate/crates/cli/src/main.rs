use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conserva_core::{IntegratorConfig, Method};
use log::{error, info};

use conserva_cli::analysis::{analyze, AnalysisOptions, MethodChoice};
use conserva_cli::commands::{check, classify_input, convert};
use conserva_cli::csv_io::{write_plot_data, write_trajectory};
use conserva_cli::exit::{Failure, EXIT_INPUT, EXIT_OK};
use conserva_cli::input::{read_certificate, System, SystemFile, SystemKind};
use conserva_cli::simulate::{simulate, Initial, SimulateOptions};

#[derive(Parser)]
#[command(
    name = "conserva",
    version,
    about = "Constants of motion for replicator and Lotka-Volterra systems"
)]
#[command(
    after_help = "Exit codes: 0 success, 1 input error, 2 no formal equilibrium, \
3 empty certificate family, 4 runtime or domain failure.\n\
Diagnostics on stderr are controlled by CONSERVA_LOG (error, warn, info, debug)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: equilibrium, certificate search, constant of motion,
    /// classification and pointwise checks.
    Analyze(AnalyzeArgs),
    /// Integrate one flow and observe H along it.
    #[command(
        after_help = "CSV columns: t, then x1..xn (--x0), y1..ym (--y0) or u1..um (--u0), \
then H when observed, then sum_diag (simplex sum minus one) for replicator runs. \
Values use 17 significant digits. A run that stopped early ends with a '# incomplete: <reason>' line."
    )]
    Simulate(SimulateArgs),
    /// Rewrite a system in the other form.
    Convert(ConvertArgs),
    /// Classify the structure of a certificate. Input is a system file or a
    /// raw {"b": ..., "d": ...} pair.
    Classify(ClassifyArgs),
    /// Identity, push-forward, gradient and orthogonality checks at random points.
    Check(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    General,
    Reduced,
    Both,
}

#[derive(Args)]
struct Tolerances {
    /// Relative singular value cutoff for ranks and null spaces.
    #[arg(long, default_value_t = conserva_core::DEFAULT_RANK_TOL)]
    rank_tol: f64,
    /// Residual bound for accepting a certificate.
    #[arg(long, default_value_t = conserva_core::conservation::CERTIFICATE_TOL)]
    cert_tol: f64,
    /// Residual bound for a formal equilibrium.
    #[arg(long, default_value_t = conserva_core::equilibrium::FEASIBILITY_TOL)]
    feas_tol: f64,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// System file (JSON).
    input: Option<PathBuf>,
    /// Analyze every *.json file in a directory, concurrently.
    #[arg(long, conflicts_with = "input")]
    input_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    method: MethodArg,
    #[command(flatten)]
    tol: Tolerances,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also integrate the chart flow this long and report the drift of H.
    #[arg(long)]
    drift_t_end: Option<f64>,
    /// Output file; a directory with --input-dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Observe {
    #[value(name = "H")]
    H,
    None,
}

#[derive(Args)]
struct SimulateArgs {
    input: PathBuf,
    /// Simplex start; integrates the replicator flow.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        group = "start"
    )]
    x0: Option<Vec<f64>>,
    /// Orthant start; integrates the Lotka-Volterra flow.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        group = "start"
    )]
    y0: Option<Vec<f64>>,
    /// Chart start; integrates the chart field.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        group = "start"
    )]
    u0: Option<Vec<f64>>,
    /// With --u0: integrate the time-rescaled chart field.
    #[arg(long, requires = "u0")]
    rescaled: bool,
    #[arg(long, default_value_t = 20.0)]
    t_end: f64,
    /// Adaptive RK4(5) absolute and relative tolerance.
    #[arg(long, conflicts_with = "step")]
    tol: Option<f64>,
    /// Fixed RK4 step.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value_t = 1)]
    record_every: usize,
    /// Record at multiples of this interval only.
    #[arg(long)]
    output_interval: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: usize,
    #[arg(long, value_enum, default_value_t = Observe::H)]
    observe: Observe,
    /// Certificate matrix (JSON) used for H instead of a search.
    #[arg(long)]
    certificate: Option<PathBuf>,
    /// Write the CSV here; the drift summary then goes to stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Directory for h.csv and phase_i_j.csv.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    #[command(flatten)]
    tol_args: Tolerances,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Replicator,
    Lv,
}

#[derive(Args)]
struct ConvertArgs {
    input: PathBuf,
    #[arg(long, value_enum)]
    to: Target,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    input: PathBuf,
    /// Certificate matrix (JSON); searched for when absent.
    #[arg(long)]
    certificate: Option<PathBuf>,
    #[command(flatten)]
    tol: Tolerances,
}

#[derive(Args)]
struct CheckArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    tol: Tolerances,
}

fn options(tol: &Tolerances) -> AnalysisOptions {
    AnalysisOptions {
        rank_tol: tol.rank_tol,
        certificate_tol: tol.cert_tol,
        feasibility_tol: tol.feas_tol,
        ..AnalysisOptions::default()
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::from(e).context(&path.display().to_string())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run_analyze(args: AnalyzeArgs) -> Result<u8, Failure> {
    let opts = AnalysisOptions {
        method: match args.method {
            MethodArg::General => MethodChoice::General,
            MethodArg::Reduced => MethodChoice::Reduced,
            MethodArg::Both => MethodChoice::Both,
        },
        samples: args.samples,
        seed: args.seed,
        drift_t_end: args.drift_t_end,
        ..options(&args.tol)
    };
    if let Some(dir) = &args.input_dir {
        return run_batch(dir, args.out.as_deref(), &opts);
    }
    let Some(input) = &args.input else {
        return Err(Failure::new(
            EXIT_INPUT,
            "an input file or --input-dir is required",
        ));
    };
    let file = SystemFile::read(input)?;
    let (report, code) = analyze(&file, &opts)?;
    if code != EXIT_OK {
        error!("{}", report.status.message);
    }
    emit(&to_json(&report), args.out.as_deref())?;
    Ok(code)
}

/// One report per input; independent inputs run on separate threads.
fn run_batch(dir: &Path, out: Option<&Path>, opts: &AnalysisOptions) -> Result<u8, Failure> {
    let mut inputs: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    inputs.sort();
    type Outcome = Result<(serde_json::Value, u8), Failure>;
    let results: Vec<(String, Outcome)> = std::thread::scope(|s| {
        let handles: Vec<_> = inputs
            .iter()
            .map(|path| {
                s.spawn(move || {
                    SystemFile::read(path)
                        .and_then(|f| analyze(&f, opts))
                        .map(|(r, c)| (serde_json::to_value(&r).expect("reports serialize"), c))
                })
            })
            .collect();
        inputs
            .iter()
            .zip(handles)
            .map(|(p, h)| {
                let name = p
                    .file_name()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned();
                (name, h.join().expect("analysis thread panicked"))
            })
            .collect()
    });

    let mut worst = EXIT_OK;
    let mut combined = BTreeMap::new();
    if let Some(o) = out {
        std::fs::create_dir_all(o)?;
    }
    for (name, result) in results {
        let value = match result {
            Ok((report, code)) => {
                worst = worst.max(code);
                report
            }
            Err(f) => {
                error!("{name}: {f}");
                worst = worst.max(f.code);
                serde_json::json!({ "status": { "exit_code": f.code, "message": f.message } })
            }
        };
        match out {
            Some(o) => {
                let stem = name.trim_end_matches(".json");
                std::fs::write(o.join(format!("{stem}.report.json")), to_json(&value))?;
            }
            None => {
                combined.insert(name, value);
            }
        }
    }
    if out.is_none() {
        emit(&to_json(&combined), None)?;
    }
    Ok(worst)
}

fn run_simulate(args: SimulateArgs) -> Result<u8, Failure> {
    let file = SystemFile::read(&args.input)?;
    let system = file.validate()?;
    let initial = match (args.x0, args.y0, args.u0) {
        (Some(x), None, None) => Initial::X(x),
        (None, Some(y), None) => Initial::Y(y),
        (None, None, Some(u)) => Initial::U {
            u,
            rescaled: args.rescaled,
        },
        _ => {
            return Err(Failure::new(
                EXIT_INPUT,
                "exactly one of --x0, --y0, --u0 is required",
            ))
        }
    };
    let mut config = match (args.step, args.tol) {
        (Some(step), _) => IntegratorConfig::fixed(step, args.t_end),
        (None, Some(tol)) => IntegratorConfig::adaptive(tol, args.t_end),
        (None, None) => IntegratorConfig {
            t_end: args.t_end,
            ..IntegratorConfig::default()
        },
    };
    config.record_every = args.record_every;
    config.output_interval = args.output_interval;
    config.max_steps = args.max_steps;
    let m = match &system {
        System::Replicator(s) => s.n() - 1,
        System::LotkaVolterra(lv) => lv.m(),
    };
    let certificate = args
        .certificate
        .as_deref()
        .map(|p| read_certificate(p, m))
        .transpose()?;
    let mut analysis = options(&args.tol_args);
    if let Method::AdaptiveRk45 { abs_tol, .. } = config.method {
        analysis.integrator_tol = abs_tol;
    }
    let opts = SimulateOptions {
        initial,
        config,
        observe_h: args.observe == Observe::H,
        certificate,
        analysis,
    };
    let (traj, summary, code) = simulate(&file, &opts)?;
    info!("{} steps, status {}", summary.steps, summary.status);

    let mut csv = Vec::new();
    write_trajectory(&mut csv, &traj)?;
    let summary_json = to_json(&summary);
    match &args.csv {
        Some(path) => {
            std::fs::write(path, &csv)
                .map_err(|e| Failure::from(e).context(&path.display().to_string()))?;
            emit(&summary_json, None)?;
        }
        None => {
            std::io::stdout().write_all(&csv)?;
            std::io::stderr().write_all(summary_json.as_bytes())?;
        }
    }
    if let Some(dir) = &args.plot_data {
        let files = write_plot_data(dir, &traj)?;
        info!("plot data: {}", files.join(", "));
    }
    if code != EXIT_OK {
        error!("integration stopped early: {}", summary.status);
    }
    Ok(code)
}

fn run_convert(args: ConvertArgs) -> Result<u8, Failure> {
    let file = SystemFile::read(&args.input)?;
    let to = match args.to {
        Target::Replicator => SystemKind::Replicator,
        Target::Lv => SystemKind::LotkaVolterra,
    };
    let out = convert(&file, to)?;
    emit(&to_json(&out), args.out.as_deref())?;
    Ok(EXIT_OK)
}

fn run_classify(args: ClassifyArgs) -> Result<u8, Failure> {
    let text = std::fs::read_to_string(&args.input).map_err(|e| {
        Failure::new(
            EXIT_INPUT,
            format!("cannot read {}: {e}", args.input.display()),
        )
    })?;
    let (out, code) = classify_input(&text, args.certificate.as_deref(), &options(&args.tol))?;
    emit(&to_json(&out), None)?;
    Ok(code)
}

fn run_check(args: CheckArgs) -> Result<u8, Failure> {
    let file = SystemFile::read(&args.input)?;
    let opts = AnalysisOptions {
        samples: args.samples,
        seed: args.seed,
        ..options(&args.tol)
    };
    emit(&to_json(&check(&file, &opts)?), None)?;
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CONSERVA_LOG", "warn"))
        .format_timestamp(None)
        .init();
    // clap's own usage error code would read as "no formal equilibrium"
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_OK });
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => run_analyze(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Convert(a) => run_convert(a),
        Command::Classify(a) => run_classify(a),
        Command::Check(a) => run_check(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
