use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eulerrom::harness::{
    parse_reports_csv, reports_to_csv, run_errors, run_plan, summary_report, ExperimentPlan, RunReport,
    CSV_HEADER,
};
use eulerrom::inner_products::InnerProductKind;
use eulerrom::io::{read_snapshots, write_snapshots};
use eulerrom::pod::{build_basis, PodBasis, VariableSet};
use eulerrom::problems::{run_fom, ProblemConfig, SnapshotSet};
use eulerrom::rom::{run_reproductive, Formulation, RomSpec};
use eulerrom::Error;

/// Full-order solver, POD and reduced-order models for the Euler equations.
#[derive(Parser)]
#[command(name = "eulerrom", version)]
struct Cli {
    /// Override the random seed of turbulence initial conditions.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full-order model.
    Fom {
        #[command(subcommand)]
        action: FomAction,
    },
    /// Proper orthogonal decomposition.
    Pod {
        #[command(subcommand)]
        action: PodAction,
    },
    /// Reduced-order model.
    Rom {
        #[command(subcommand)]
        action: RomAction,
    },
    /// Summarize every report CSV in a directory.
    Report(ReportArgs),
    /// Run an experiment plan.
    Sweep(SweepArgs),
}

#[derive(Subcommand)]
enum FomAction {
    /// Solve and write the snapshots (ERSN).
    Run {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PodAction {
    /// Compute a basis from a snapshot file (ERPB).
    Build {
        snapshots: PathBuf,
        /// Configuration that produced the snapshots.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        ip: InnerProductKind,
        #[arg(long)]
        vars: VariableSet,
        #[arg(short = 'K')]
        k: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RomAction {
    /// Reproductive run; writes the trajectory (ERTJ) and a one-row report.
    Run {
        config: PathBuf,
        #[arg(long)]
        formulation: Formulation,
        #[arg(long)]
        basis: PathBuf,
        /// Training snapshots; solved from the configuration when omitted.
        #[arg(long)]
        snapshots: Option<PathBuf>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ReportArgs {
    dir: PathBuf,
    /// Restrict to dimensional (true) or non-dimensional (false) runs.
    #[arg(long)]
    dimensional: Option<bool>,
}

#[derive(Args)]
struct SweepArgs {
    plan: PathBuf,
    /// Output directory; overrides the plan's `output`.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write zero wall times so that repeated sweeps give identical files.
    #[arg(long)]
    no_timing: bool,
}

enum Outcome {
    Done,
    Unstable,
}

fn load_config(path: &Path, seed: Option<u64>) -> eulerrom::Result<ProblemConfig> {
    let mut cfg = ProblemConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn load_set(path: &Path, cfg: ProblemConfig) -> eulerrom::Result<SnapshotSet> {
    read_snapshots(path)?.into_set(cfg)
}

fn run(cli: Cli) -> eulerrom::Result<Outcome> {
    match cli.command {
        Command::Fom { action: FomAction::Run { config, output } } => {
            let cfg = load_config(&config, cli.seed)?;
            let set = run_fom(&cfg)?;
            let out = output.unwrap_or_else(|| config.with_extension("ersn"));
            write_snapshots(&out, &set)?;
            println!("wrote {} snapshots to {}", set.len(), out.display());
        }
        Command::Pod { action: PodAction::Build { snapshots, config, ip, vars, k, output } } => {
            let cfg = load_config(&config, cli.seed)?;
            let set = load_set(&snapshots, cfg)?;
            let (basis, _) = build_basis(&set, ip, vars, k)?;
            let out = output.unwrap_or_else(|| PathBuf::from(format!("{ip}-{vars}-K{k}.erpb")));
            basis.write(&out)?;
            println!("wrote {k} modes to {}", out.display());
        }
        Command::Rom { action: RomAction::Run { config, formulation, basis, snapshots, window, output } } => {
            let cfg = load_config(&config, cli.seed)?;
            let basis = PodBasis::read(&basis)?;
            let set = match snapshots {
                Some(p) => load_set(&p, cfg)?,
                None => run_fom(&cfg)?,
            };
            let mut spec = RomSpec::with_basis(formulation, basis, &set)?;
            if let Some(w) = window {
                if w == 0 {
                    return Err(Error::Config("window must be at least 1".into()));
                }
                spec.window = w;
            }
            let traj = run_reproductive(&spec, &set)?;
            let errors = run_errors(&spec, &traj, &set)?;
            let report = RunReport {
                problem: set.config.kind,
                dimensional: set.config.dimensional,
                formulation,
                k: spec.k(),
                stable: traj.stable && errors.is_some(),
                t_first_nan: traj.t_first_nan,
                errors,
                wall_seconds: traj.wall_seconds,
            };
            let out = output.unwrap_or_else(|| PathBuf::from(format!("{formulation}-K{}.ertj", spec.k())));
            traj.write(&out)?;
            let csv = out.with_extension("csv");
            std::fs::write(&csv, reports_to_csv(std::slice::from_ref(&report), true))?;
            println!("wrote {} and {}", out.display(), csv.display());
            if !report.stable {
                eprintln!("ROM became unstable at t = {:?}", report.t_first_nan);
                return Ok(Outcome::Unstable);
            }
        }
        Command::Report(args) => {
            let mut reports = Vec::new();
            let mut entries: Vec<PathBuf> = std::fs::read_dir(&args.dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            entries.sort();
            for p in entries {
                let text = std::fs::read_to_string(&p)?;
                if text.lines().next().is_some_and(|h| h.trim() == CSV_HEADER) {
                    reports.extend(parse_reports_csv(&text)?);
                }
            }
            if reports.is_empty() {
                return Err(Error::Config(format!("no run reports in {}", args.dir.display())));
            }
            let summary = summary_report(&reports, args.dimensional);
            std::fs::write(args.dir.join("summary.csv"), summary.to_csv())?;
            std::fs::write(args.dir.join("summary.txt"), summary.to_text())?;
            print!("{}", summary.to_text());
        }
        Command::Sweep(args) => {
            let mut plan = ExperimentPlan::load(&args.plan)?;
            if let Some(s) = cli.seed {
                plan.config.seed = s;
            }
            let dir = args
                .output
                .or_else(|| plan.output.clone())
                .unwrap_or_else(|| args.plan.with_extension("out"));
            let out = run_plan(&plan)?;
            out.write(&dir, !args.no_timing)?;
            print!("{}", summary_report(&out.reports(), None).to_text());
            println!("wrote {} reports to {}", out.runs.len(), dir.display());
        }
    }
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Unstable) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
