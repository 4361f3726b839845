//! Benchmark CLI: `run` a case, sweep explicit `stability`, or `compare`
//! the explicit and implicit schemes.

use clap::{Parser, Subcommand, ValueEnum};
use ksupg::cases::{
    compare_explicit_implicit, run_case, OutputFormat, RunOverrides, worker_threads,
};
use ksupg::analysis::{stability_sweep, write_stability_csv};
use ksupg::mesh::{build_structured_quad_mesh, Rect};
use ksupg::Error;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "ksupg", about = "KSUPG finite-element benchmark driver", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Vtk,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Run a registered benchmark case and write field/history outputs
    Run {
        /// Case name (e.g. sod, burgers2d, shock_reflection)
        case: String,
        /// Time scheme: 0 explicit, 1 implicit
        #[arg(long)]
        theta: Option<u8>,
        /// CFL number (defaults to the case's published value)
        #[arg(long)]
        cfl: Option<f64>,
        /// Grid as NXxNY (e.g. 60x20); a bare N for 1D cases
        #[arg(long)]
        grid: Option<String>,
        /// External triangle-mesh file (overrides --grid)
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// Steady-state residue tolerance
        #[arg(long)]
        steady_tol: Option<f64>,
        /// Final time for transient runs
        #[arg(long)]
        final_time: Option<f64>,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
        /// Disable the shock-capturing term
        #[arg(long)]
        no_shock_capture: bool,
        /// Row-sum lumped mass matrix in the explicit scheme
        #[arg(long)]
        lumped_mass: bool,
    },
    /// Spectral-radius sweep of the explicit linear-advection operator
    Stability {
        /// Square grid size N (N x N quadrilaterals)
        #[arg(long, default_value_t = 32)]
        grid: usize,
        /// Time-step sweep as lo:hi:steps
        #[arg(long, default_value = "0.001:0.01:10")]
        dt_sweep: String,
        /// Optional CSV output path for the sweep
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run both schemes to a residue tolerance and report speed-ups
    Compare {
        case: String,
        /// Comma-separated grid list, e.g. 60x20,120x40
        #[arg(long)]
        grids: String,
        /// Steady-state residue tolerance
        #[arg(long, default_value_t = 3.1623e-4)]
        tol: f64,
    },
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.parse::<usize>().map_err(|e| format!("bad grid '{s}': {e}"));
    match s.split_once(['x', 'X']) {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => Ok((parse(s)?, 1)),
    }
}

fn parse_sweep(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("bad sweep '{s}': expected lo:hi:steps"));
    }
    let lo: f64 = parts[0].parse().map_err(|e| format!("bad sweep lo: {e}"))?;
    let hi: f64 = parts[1].parse().map_err(|e| format!("bad sweep hi: {e}"))?;
    let steps: usize = parts[2].parse().map_err(|e| format!("bad sweep steps: {e}"))?;
    if !(lo > 0.0) || !(hi > lo) || steps < 2 {
        return Err(format!("bad sweep '{s}': need 0 < lo < hi and steps >= 2"));
    }
    Ok((lo, hi, steps))
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) => EXIT_IO,
        Error::NonConvergence { .. } | Error::LinearSolverFailure(_) | Error::InvalidState(_) => {
            EXIT_NO_CONVERGENCE
        }
        _ => EXIT_USAGE,
    }
}

fn dispatch(cli: Cli) -> Result<u8, (u8, String)> {
    match cli.command {
        Command::Run {
            case,
            theta,
            cfl,
            grid,
            mesh,
            steady_tol,
            final_time,
            out,
            format,
            no_shock_capture,
            lumped_mass,
        } => {
            let grid = grid
                .as_deref()
                .map(parse_grid)
                .transpose()
                .map_err(|m| (EXIT_USAGE, m))?;
            let overrides = RunOverrides {
                theta,
                cfl,
                grid,
                mesh_file: mesh,
                steady_tol,
                final_time,
                no_shock_capture,
                lumped_mass,
                ..Default::default()
            };
            let fmt = match format {
                Format::Csv => OutputFormat::Csv,
                Format::Vtk => OutputFormat::Vtk,
                Format::Both => OutputFormat::Both,
            };
            let artifacts = run_case(&case, &overrides, Some(&out), fmt)
                .map_err(|e| (exit_for(&e), e.to_string()))?;
            let last = artifacts.outcome.reports.last();
            println!(
                "{}: {} steps in {:.3} s, final residue {:.3e}",
                artifacts.case_name,
                artifacts.outcome.reports.len(),
                artifacts.wall_time,
                last.map_or(0.0, |r| r.residue),
            );
            for f in &artifacts.files {
                println!("wrote {}", f.display());
            }
            if !artifacts.outcome.converged {
                return Err((EXIT_NO_CONVERGENCE, "run did not converge".into()));
            }
            Ok(EXIT_OK)
        }
        Command::Stability { grid, dt_sweep, out } => {
            let (lo, hi, steps) = parse_sweep(&dt_sweep).map_err(|m| (EXIT_USAGE, m))?;
            let mesh = build_structured_quad_mesh(grid, grid, Rect::unit())
                .map_err(|e| (exit_for(&e), e.to_string()))?;
            let report = stability_sweep(&mesh, 1.0, 1.0, 1.0, lo, hi, steps)
                .map_err(|e| (exit_for(&e), e.to_string()))?;
            println!("dt,spectral_radius");
            for (dt, rho) in report.dt_values.iter().zip(&report.spectral_radii) {
                println!("{dt:.6e},{rho:.6e}");
            }
            if report.dt_critical.is_nan() {
                println!("critical dt: not bracketed by the sweep");
            } else {
                println!("critical dt: {:.6e}", report.dt_critical);
            }
            if let Some(path) = out {
                write_stability_csv(&report, &path)
                    .map_err(|e| (exit_for(&e), e.to_string()))?;
                println!("wrote {}", path.display());
            }
            Ok(EXIT_OK)
        }
        Command::Compare { case, grids, tol } => {
            let grids: Vec<(usize, usize)> = grids
                .split(',')
                .map(parse_grid)
                .collect::<Result<_, _>>()
                .map_err(|m| (EXIT_USAGE, m))?;
            if grids.is_empty() {
                return Err((EXIT_USAGE, "empty grid list".into()));
            }
            let _ = worker_threads(); // validated here so a bad value fails fast
            let report = compare_explicit_implicit(&case, &grids, tol)
                .map_err(|e| (exit_for(&e), e.to_string()))?;
            print!("{}", report.render_table());
            if report.rows.iter().any(|r| !r.converged) {
                return Err((EXIT_NO_CONVERGENCE, "a scheme did not converge".into()));
            }
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
