use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use triplane::analysis::{analyze, AnalysisRequest, DistributionFile, Stages, DEFAULT_ORDER, DEFAULT_TOL};
use triplane::distribution::PolynomialAnnihilators;
use triplane::jet::DIM;
use triplane::selftest::run_selftest;

#[derive(Parser)]
#[command(name = "triplane", version, about = "Local invariants of 3-plane fields in dimension six")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline at one or more base points and emit a JSON report.
    Analyze(AnalyzeArgs),
    /// Run the acceptance suite and print a pass/fail table.
    Selftest {
        /// Also write the deterministic JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Flat,
    Perturbed,
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    /// Distribution file in the JSON schema.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    builtin: Option<Builtin>,
    /// Perturbation size for `--builtin perturbed`.
    #[arg(long, default_value_t = 0.1)]
    c: f64,
    /// Seed for `--builtin perturbed`.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Base point as six comma-separated numbers; repeatable.
    #[arg(long = "point", value_parser = parse_point, allow_hyphen_values = true)]
    points: Vec<[f64; DIM]>,
    /// Jet order; defaults to the file's order, or 5.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Comma-separated subset of adaptation, reduction, conformal, spin, all.
    #[arg(long, default_value = "all")]
    stages: Stages,
    /// Write the report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Record wall-clock time per point (makes reports non-reproducible).
    #[arg(long)]
    timing: bool,
}

fn parse_point(s: &str) -> Result<[f64; DIM], String> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<_, _>>()?;
    vals.try_into().map_err(|v: Vec<f64>| format!("expected {DIM} coordinates, got {}", v.len()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze(args) => run_analyze(args),
        Command::Selftest { report } => {
            let rep = run_selftest();
            print!("{}", rep.table());
            if let Some(path) = report {
                if let Err(e) = std::fs::write(&path, rep.to_json()) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            let passed = rep.criteria.iter().filter(|c| c.passed).count();
            println!("{passed}/{} criteria passed", rep.criteria.len());
            if rep.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run_analyze(args: AnalyzeArgs) -> ExitCode {
    let (annihilators, file_order, file_point) = match (&args.input, args.builtin) {
        (Some(path), _) => match DistributionFile::read(path) {
            Ok(f) => (f.annihilators, Some(f.order), Some(f.base_point)),
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        (None, Some(Builtin::Flat)) => (PolynomialAnnihilators::flat(), None, None),
        (None, Some(Builtin::Perturbed)) => (PolynomialAnnihilators::perturbed(args.c, args.seed), None, None),
        (None, None) => unreachable!("clap requires a source"),
    };
    let points = if args.points.is_empty() { vec![file_point.unwrap_or([0.0; DIM])] } else { args.points };
    let mut req = AnalysisRequest::new(annihilators, points);
    req.order = args.order.or(file_order).unwrap_or(DEFAULT_ORDER);
    req.tol = args.tol;
    req.stages = args.stages;
    req.timing = args.timing;

    let report = analyze(&req);
    let json = report.to_json();
    match &args.report {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &json) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => println!("{json}"),
    }
    for (k, p) in report.points.iter().enumerate() {
        match (&p.error, p.agreement) {
            (Some(e), _) => eprintln!("point {k}: error: {e}"),
            (None, Some(false)) => eprintln!("point {k}: S-based and Weyl-based verdicts disagree"),
            _ => {}
        }
    }
    if report.all_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
