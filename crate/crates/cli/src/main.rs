use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wobble_core::plots::{emit_plot, Figure};
use wobble_core::sweep::{
    read_records, records_to_csv, run_baseline_compass, run_sweep, solve_point, Manifest, RunOptions, SweepError,
    SweepSpec, BASELINE_FILE, MANIFEST_FILE,
};

/// Sweeps, single solves and plot data for the wobbling-mass compass walker.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// Output directory (defaults to the spec's `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Continue a previously interrupted sweep.
    #[arg(long, global = true)]
    resume: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the (k, alpha, omega) grid sweep.
    Sweep { spec: PathBuf },
    /// Find one limit cycle from a cold start.
    Solve {
        spec: PathBuf,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        omega: f64,
    },
    /// Compass model without the wobbling mass, one cycle per omega.
    Baseline { spec: PathBuf },
    /// Emit the dataset behind one figure from a result file.
    Plot {
        result: PathBuf,
        #[arg(long)]
        figure: String,
    },
}

fn write(path: &Path, text: &str) -> Result<(), SweepError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| SweepError::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, text).map_err(|e| SweepError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn out_dir(cli: &Cli, spec: &SweepSpec) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| spec.output.dir.clone())
}

fn run(cli: &Cli) -> Result<(), SweepError> {
    match &cli.command {
        Command::Sweep { spec } => {
            let spec = SweepSpec::load(spec)?;
            let dir = out_dir(cli, &spec);
            let options = RunOptions {
                resume: cli.resume,
                workers: cli.workers,
                stop_after_rows: None,
            };
            let s = run_sweep(&spec, &dir, &options)?;
            println!(
                "{} of {} rows, {} records ({} solved) -> {}",
                s.rows_done,
                s.rows_total,
                s.records,
                s.solved,
                s.results.display()
            );
        }
        Command::Solve { spec, k, alpha, omega } => {
            let spec = SweepSpec::load(spec)?;
            let dir = out_dir(cli, &spec);
            let (cycle, record) = solve_point(&spec, *k, *alpha, *omega)?;
            let tr = cycle.trajectory(&spec.sim)?;
            write(&dir.join("solve.csv"), &records_to_csv(std::slice::from_ref(&record)))?;
            write(&dir.join("trajectory.csv"), &tr.to_csv())?;
            println!(
                "k={} alpha={} omega={}: {:?}, group {}, max|lambda| {:.6}, period {:.6}, d_max {:.6}, CoT {:.6}, residual {:.2e}",
                k,
                alpha,
                omega,
                record.status,
                record.group.as_deref().unwrap_or("-"),
                cycle.max_multiplier(),
                cycle.period,
                record.d_max.unwrap_or(f64::NAN),
                record.cot.unwrap_or(f64::NAN),
                cycle.residual
            );
        }
        Command::Baseline { spec } => {
            let spec = SweepSpec::load(spec)?;
            let dir = out_dir(cli, &spec);
            let records = run_baseline_compass(&spec);
            write(&dir.join(BASELINE_FILE), &records_to_csv(&records))?;
            for r in &records {
                println!(
                    "omega={}: {:?}, max|lambda| {}, d_max {}, CoT {}",
                    r.omega,
                    r.status,
                    r.max_lambda.map_or("-".into(), |v| format!("{v:.6}")),
                    r.d_max.map_or("-".into(), |v| format!("{v:.6}")),
                    r.cot.map_or("-".into(), |v| format!("{v:.6}")),
                );
            }
            if records.iter().any(|r| !r.solved()) {
                return Err(SweepError::Numerical(wobble_core::WalkerError::NoConvergence {
                    iterations: 0,
                    residual: f64::NAN,
                }));
            }
        }
        Command::Plot { result, figure } => {
            let fig: Figure = figure
                .parse()
                .map_err(|e: wobble_core::WalkerError| SweepError::Config(e.to_string()))?;
            let records = read_records(result)?;
            let source_dir = result.parent().map(Path::to_path_buf).unwrap_or_default();
            let spec = match source_dir.join(MANIFEST_FILE) {
                m if m.exists() => Manifest::load(&m)?.spec,
                _ => SweepSpec::default(),
            };
            let baseline = match source_dir.join(BASELINE_FILE) {
                b if b.exists() => read_records(&b)?,
                _ => Vec::new(),
            };
            let text = emit_plot(fig, &records, &baseline, &spec.params, &spec.sim)?;
            let dir = cli.out.clone().unwrap_or(source_dir);
            let path = dir.join(format!("{}.csv", fig.name()));
            write(&path, &text)?;
            println!("{} rows -> {}", text.lines().count().saturating_sub(1), path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
