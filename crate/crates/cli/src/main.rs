use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use cmt_core::nalgebra::DMatrix;
use cmt_core::sim::{integrate_labeled, DEFAULT_DT, DEFAULT_T_END};
use cmt_core::spectral::DEFAULT_ZERO_TOL;
use cmt_core::stability::DEFAULT_THETA_SAMPLES;
use cmt_core::{analyze, cases, parse_system, AnalysisOptions, Status, SystemSpec};

#[derive(Parser)]
#[command(name = "cmt", version, about = "Centre-manifold reduction of polynomial ODE systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a system onto its centre manifold and classify the origin.
    Analyze {
        file: PathBuf,
        /// Highest degree kept in the manifold expansion (2..=4).
        #[arg(long, default_value_t = 2)]
        order: u32,
        /// Real parts within this band around zero count as centre.
        #[arg(long, env = "CMT_ZERO_TOL", default_value_t = DEFAULT_ZERO_TOL)]
        zero_tol: f64,
        /// Use this basis verbatim (row-major, centre columns first). Without
        /// a value, the file's `basis` stanza is required.
        #[arg(long, num_args = 0..=1, value_name = "MATRIX", allow_hyphen_values = true)]
        basis_override: Option<Option<String>>,
        #[arg(long, default_value_t = DEFAULT_THETA_SAMPLES)]
        theta_samples: usize,
        /// Upper end of the radial root search.
        #[arg(long)]
        r_max: Option<f64>,
        /// Write the report here instead of stdout.
        #[arg(long, value_name = "OUT")]
        json: Option<PathBuf>,
    },
    /// Integrate the full system with fixed-step RK4.
    Simulate {
        file: PathBuf,
        /// Initial state, comma separated, in declared variable order.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        x0: Vec<f64>,
        #[arg(long = "t", default_value_t = DEFAULT_T_END)]
        t_end: f64,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// Write the trajectory here instead of stdout.
        #[arg(long, value_name = "OUT")]
        csv: Option<PathBuf>,
    },
    /// Print or save a bundled example system.
    Examples {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_spec(path: &Path) -> Result<SystemSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_system(&text).with_context(|| format!("in {}", path.display()))
}

fn parse_matrix(text: &str, n: usize) -> Result<DMatrix<f64>> {
    let vals = text
        .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| anyhow!("basis entry `{s}`: {e}")))
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != n * n {
        bail!("basis override needs {} entries for a {n}x{n} matrix, got {}", n * n, vals.len());
    }
    Ok(DMatrix::from_row_slice(n, n, &vals))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Analyze {
            file,
            order,
            zero_tol,
            basis_override,
            theta_samples,
            r_max,
            json,
        } => {
            let spec = read_spec(&file)?;
            let basis_override = match basis_override {
                None => None,
                Some(Some(m)) => Some(parse_matrix(&m, spec.dim())?),
                Some(None) => Some(
                    spec.basis
                        .clone()
                        .ok_or_else(|| anyhow!("--basis-override without a matrix needs a `basis` stanza in the input"))?,
                ),
            };
            let opts = AnalysisOptions {
                order,
                zero_tol,
                basis_override,
                theta_samples,
                r_max,
            };
            let report = analyze(&spec, &opts)?;
            write_out(json.as_deref(), &report.to_json())?;
            if json.is_some() {
                let v = &report.verdict;
                println!(
                    "{}: {} ({}), centre dimension {}",
                    format!("{:?}", report.status()).to_lowercase(),
                    format!("{:?}", v.kind).to_lowercase(),
                    v.mechanism,
                    report.split().centre_dim
                );
            }
            Ok(match report.status() {
                Status::Ok => ExitCode::SUCCESS,
                Status::Failed => {
                    eprintln!("analysis finished but a diagnostic check failed; see `diagnostics` in the report");
                    ExitCode::from(2)
                }
            })
        }
        Command::Simulate {
            file,
            x0,
            t_end,
            dt,
            csv,
        } => {
            let spec = read_spec(&file)?;
            if x0.len() != spec.dim() {
                bail!("simulate: --x0 has {} entries, system has {} variables", x0.len(), spec.dim());
            }
            let traj = integrate_labeled(&spec.field, &x0, t_end, dt, spec.variables.clone())?;
            match csv {
                Some(p) => traj.save_csv(&p)?,
                None => traj.write_csv(io::stdout().lock())?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Examples { name, out } => {
            let text = cases::by_name(&name).ok_or_else(|| {
                anyhow!("unknown example `{name}`; available: {}", cases::names().join(", "))
            })?;
            write_out(out.as_deref(), text)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
