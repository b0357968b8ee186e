//! Command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use fracwave::config::RunConfig;
use fracwave::contour::ContourKind;
use fracwave::par::Exec;
use fracwave::presets::{
    calibrate_contour, suite_max_relative_error, PresetEntry, SELFTEST_TOLERANCE,
};
use fracwave::runner::{self, RunArtifacts};
use fracwave::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fracwave",
    version,
    about = "Mesh-free solver for time-fractional KdV/Burgers equations \
             (local RBF collocation in space, Laplace contour quadrature in time)"
)]
struct Cli {
    /// Worker threads: 1 forces sequential execution, larger values size the
    /// thread pool. Default: one worker per core. Results are bit-identical
    /// either way.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run described by a flat `key = value` config file.
    Run {
        /// Config file path.
        config: PathBuf,
        /// Output directory (overrides the config's `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trailing `key=value` overrides, applied after the file.
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Execute a built-in benchmark by id with its stock settings.
    Preset {
        /// One of: problem1, problem2, problem3, periodic_kdv,
        /// periodic_burgers, periodic_kdv_burgers.
        id: String,
        /// Output directory (default: out/<id>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trailing `key=value` overrides.
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Re-invert the reference transform suite with every shipped M = 40
    /// contour preset and report the worst relative errors.
    InvertSelftest,
    /// Grid-search contour parameters for a (kind, window, M) triple and
    /// print the result as a preset-table line.
    CalibrateContour {
        /// Contour kind: parabolic or hyperbolic.
        #[arg(long)]
        kind: String,
        /// Time window as "t0,t1".
        #[arg(long)]
        window: String,
        /// Highest quadrature node index (M + 1 nodes).
        #[arg(long, default_value_t = 40)]
        m: usize,
    },
}

fn parse_window(text: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "window must be \"t0,t1\", got {text:?}"
        )));
    }
    let t0 = parts[0].trim().parse::<f64>();
    let t1 = parts[1].trim().parse::<f64>();
    match (t0, t1) {
        (Ok(t0), Ok(t1)) => Ok((t0, t1)),
        _ => Err(Error::InvalidParameter(format!(
            "window must be two numbers, got {text:?}"
        ))),
    }
}

fn resolve_exec(threads: Option<usize>) -> Result<Exec> {
    match threads {
        None => Ok(Exec::default()),
        Some(0) => Err(Error::InvalidParameter(
            "--threads must be at least 1".to_string(),
        )),
        Some(1) => Ok(Exec::sequential()),
        #[cfg(feature = "parallel")]
        Some(k) => {
            // Build the global pool once; a second invocation in the same
            // process (tests) keeps the existing pool, which is fine because
            // results do not depend on worker count.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            Ok(Exec::default())
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => {
            log::warn!("built without the parallel feature; running sequentially");
            Ok(Exec::sequential())
        }
    }
}

/// Prints a human summary of a finished run and returns whether its checks
/// passed.
fn report_run(artifacts: &RunArtifacts) -> bool {
    for grid in &artifacts.grids {
        let iters = grid.result.iterations.iter().copied().max().unwrap_or(0);
        let leak = grid
            .result
            .imag_residue
            .iter()
            .copied()
            .fold(0.0f64, f64::max);
        println!(
            "grid n={}: {} time(s), max picard iterations {}, max imaginary residue {:.3e}",
            grid.n,
            grid.result.times.len(),
            iters,
            leak
        );
        if let Some(norms) = &grid.norms {
            for (k, norm) in norms.iter().enumerate() {
                println!(
                    "  t={}: L_inf={:.6e}  L2={:.6e}  RMS={:.6e}  (picard {})",
                    grid.result.times[k],
                    norm.linf,
                    norm.l2,
                    norm.rms,
                    grid.result.iterations[k]
                );
            }
        }
    }
    for probe in &artifacts.probes {
        if let Some(r) = &probe.report {
            println!(
                "probe {} @ x={} (node x={}): amplitude={:.4e}  defect={:.4e}  ratio={:.4e}",
                probe.index, probe.x_requested, probe.x_node, r.amplitude, r.defect, r.defect_ratio
            );
        }
    }
    for check in &artifacts.checks {
        println!(
            "check {}: observed {:.6e}, threshold {:.6e} -> {}",
            check.name,
            check.observed,
            check.threshold,
            if check.passed { "pass" } else { "FAIL" }
        );
    }
    println!(
        "artifacts: {} file(s) in {}",
        artifacts.files.len() + 1,
        artifacts.out_dir.display()
    );
    artifacts.passed
}

fn run_config(cfg: RunConfig, out: Option<PathBuf>, exec: &Exec) -> Result<bool> {
    let mut cfg = cfg;
    if let Some(out) = out {
        cfg.out = Some(out);
    }
    let resolved = cfg.resolve()?;
    println!(
        "run {}: contour {} M={} window [{}, {}] ({})",
        resolved.setup.id,
        resolved.contour.kind.name(),
        resolved.contour.m,
        resolved.contour.window.0,
        resolved.contour.window.1,
        resolved.provenance.name()
    );
    let artifacts = runner::run(&resolved, exec)?;
    Ok(report_run(&artifacts))
}

fn dispatch(cli: Cli) -> Result<bool> {
    let exec = resolve_exec(cli.threads)?;
    match cli.command {
        Command::Run {
            config,
            out,
            overrides,
        } => {
            let text = std::fs::read_to_string(&config).map_err(|e| {
                std::io::Error::new(e.kind(), format!("{}: {e}", config.display()))
            })?;
            let mut cfg = RunConfig::parse(&text)?;
            for assignment in &overrides {
                cfg.apply_override(assignment)?;
            }
            run_config(cfg, out, &exec)
        }
        Command::Preset { id, out, overrides } => {
            let mut cfg = RunConfig {
                problem: id,
                ..RunConfig::default()
            };
            for assignment in &overrides {
                cfg.apply_override(assignment)?;
            }
            run_config(cfg, out, &exec)
        }
        Command::InvertSelftest => {
            let rows = fracwave::presets::run_selftest()?;
            let mut ok = true;
            for row in &rows {
                let pass = row.max_relative_error <= SELFTEST_TOLERANCE;
                ok &= pass;
                println!(
                    "{} window [{}, {}] M={}: max relative error {:.3e} -> {}",
                    row.kind.name(),
                    row.window.0,
                    row.window.1,
                    row.m,
                    row.max_relative_error,
                    if pass { "pass" } else { "FAIL" }
                );
            }
            println!(
                "selftest: {} contour(s), tolerance {:.1e} -> {}",
                rows.len(),
                SELFTEST_TOLERANCE,
                if ok { "pass" } else { "FAIL" }
            );
            Ok(ok)
        }
        Command::CalibrateContour { kind, window, m } => {
            let kind = ContourKind::from_str(&kind)?;
            let window = parse_window(&window)?;
            let spec = calibrate_contour(kind, window, m)?;
            let entry = PresetEntry {
                kind,
                window,
                m,
                v: spec.v,
                h: spec.h,
            };
            println!("# suite max relative error = {:.3e}", suite_max_relative_error(&spec));
            println!("{}", entry.format_line());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
