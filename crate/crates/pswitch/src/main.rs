use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use pswitch::applications::{critical_radius, polygon_to_system, reduce_noisy, SymmetricPolygon};
use pswitch::barabanov::{build_norm, BuildError, BuildOptions, NormResult};
use pswitch::io::{self, RunReport, SpecKind, SystemSpec};
use pswitch::stability::{decide_stability, lyapunov_exponent, DominanceCertificate};

#[derive(Parser)]
#[command(name = "pswitch", version, about = "Planar linear switching systems: stability, Lyapunov exponent, Barabanov norms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Input file (JSON spec, or polygon CSV for `inverse`)
    spec: PathBuf,
    /// Numerical tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Write the sphere polyline as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the sphere as SVG
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Write the report (or the produced spec) here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Budget choice for the P intervals, e.g. "0.1,-0.1"
    #[arg(long, allow_hyphen_values = true)]
    s_vector: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    Stability(Common),
    Lyapunov(Common),
    Norm(Common),
    BallRadius(Common),
    Inverse(Common),
    ReduceNoise(Common),
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_spec(path: &Path) -> Result<SystemSpec> {
    Ok(io::parse_spec(&read(path)?).with_context(|| format!("parsing {}", path.display()))?)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dominance_name(d: &DominanceCertificate) -> &'static str {
    match d {
        DominanceCertificate::None => "none",
        DominanceCertificate::Complex { .. } => "complex",
        DominanceCertificate::Real(_) => "real",
    }
}

fn fill_norm(report: &mut RunReport, c: &Common, norm: &NormResult) -> Result<()> {
    report.sigma = Some(norm.sigma.sigma);
    report.sigma_error = Some(norm.sigma.error);
    report.dominance = Some(dominance_name(&norm.dominance).into());
    report.uniqueness = Some(format!("{:?}", norm.uniqueness.case));
    report.partition = Some(norm.sphere.partition.iter().map(|t| t.letter()).collect());
    if let Some(p) = &c.csv {
        write(p, &io::sphere_csv(&norm.sphere)?)?;
        report.artifacts.push(p.display().to_string());
    }
    if let Some(p) = &c.svg {
        write(p, &io::sphere_svg(&norm.sphere))?;
        report.artifacts.push(p.display().to_string());
    }
    Ok(())
}

/// Exit code and report for one command.
fn run(cmd: Cmd) -> Result<(u8, RunReport, Option<PathBuf>)> {
    let t0 = Instant::now();
    let (name, c) = match &cmd {
        Cmd::Stability(c) => ("stability", c),
        Cmd::Lyapunov(c) => ("lyapunov", c),
        Cmd::Norm(c) => ("norm", c),
        Cmd::BallRadius(c) => ("ball-radius", c),
        Cmd::Inverse(c) => ("inverse", c),
        Cmd::ReduceNoise(c) => ("reduce-noise", c),
    };
    let mut report = RunReport::new(name);
    let mut code = 0;
    match &cmd {
        Cmd::Stability(c) => {
            let set = read_spec(&c.spec)?.to_control_set()?;
            let v = decide_stability(&set)?;
            report.verdict = Some(if v.stable { "stable" } else { "unstable" }.into());
            report.details = json!({ "reason": v.reason });
            code = if v.stable { 0 } else { 2 };
        }
        Cmd::Lyapunov(c) => {
            let set = read_spec(&c.spec)?.to_control_set()?;
            let r = lyapunov_exponent(&set, c.tol.unwrap_or(1e-6))?;
            report.sigma = Some(r.sigma);
            report.sigma_error = Some(r.error);
            report.details = json!({ "iterations": r.iterations });
        }
        Cmd::Norm(c) => {
            let set = read_spec(&c.spec)?.to_control_set()?;
            let s_vector = c.s_vector.as_deref().map(io::parse_s_vector).transpose()?;
            let opts = BuildOptions { tol: c.tol.unwrap_or(1e-9), s_vector, ..Default::default() };
            let norm = match build_norm(&set, &opts) {
                Err(e @ BuildError::BudgetInfeasible { .. }) => {
                    bail!("{e}; try a smaller --tol so that sigma is computed more precisely")
                }
                other => other?,
            };
            fill_norm(&mut report, c, &norm)?;
            report.details = json!({ "budget": norm.budget, "tags": norm.sphere.partition });
        }
        Cmd::BallRadius(c) => {
            let spec = read_spec(&c.spec)?;
            let r = critical_radius(spec.center_matrix()?, c.tol.unwrap_or(1e-4))?;
            report.sigma = Some(r.sigma_at_radius);
            report.partition = Some(r.sphere.partition.iter().map(|t| t.letter()).collect());
            if let Some(p) = &c.csv {
                write(p, &io::sphere_csv(&r.sphere)?)?;
                report.artifacts.push(p.display().to_string());
            }
            if let Some(p) = &c.svg {
                write(p, &io::sphere_svg(&r.sphere))?;
                report.artifacts.push(p.display().to_string());
            }
            report.details = json!({ "radius": r.radius, "iterations": r.iterations });
        }
        Cmd::Inverse(c) => {
            let poly = SymmetricPolygon::new(io::parse_polygon_csv(&read(&c.spec)?)?)?;
            let set = polygon_to_system(&poly)?;
            let mut spec = SystemSpec::from_set(&set);
            spec.allow_reducible = set.common_eigenvector().is_some();
            let text = io::spec_to_json(&spec);
            emit(&c.out, &text)?;
            report.details = json!({ "matrices": set.generators().len() });
            return Ok((0, report, None));
        }
        Cmd::ReduceNoise(c) => {
            let spec = read_spec(&c.spec)?;
            if spec.kind != SpecKind::Noisy {
                bail!("reduce-noise expects a spec of kind \"noisy\"");
            }
            let set = reduce_noisy(spec.base()?, spec.noise_model()?)?;
            emit(&c.out, &io::spec_to_json(&SystemSpec::from_set(&set)))?;
            report.details = json!({ "matrices": set.generators().len() });
            return Ok((0, report, None));
        }
    }
    report.wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    Ok((code, report, c.out.clone()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PSWITCH_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok((code, report, out)) => {
            let text = report.to_json();
            let res = match out {
                Some(p) => write(&p, &text),
                None if report.command == "inverse" || report.command == "reduce-noise" => {
                    eprint!("{text}");
                    Ok(())
                }
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            if let Err(e) = res {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
