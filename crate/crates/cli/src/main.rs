use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use morrey_core::grid::{FunctionExpr, GridFunction, GridSpec};
use morrey_core::harness::{self, ExperimentConfig, ExperimentReport, NormSpace};
use morrey_core::norms::{
    morrey_norm_ball, morrey_norm_dyadic, BallCandidates, MorreyParams, NormReport, PredualParams,
};
use morrey_core::operators::OperatorSpec;
use morrey_core::predual::{default_dictionary, predual_lower_bound, predual_upper_bound};

/// Morrey-space norms, predual certificates and operator experiments on a grid.
#[derive(Parser)]
#[command(name = "morrey", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct GridArgs {
    /// Spatial dimension, 1 or 2.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// The grid covers [-L, L]^n.
    #[arg(long, default_value_t = 8.0)]
    half_width: f64,
    /// Nodes per axis (a power of two).
    #[arg(long, default_value_t = 256)]
    points: usize,
}

impl GridArgs {
    fn spec(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(self.dim, self.half_width, self.points)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Dyadic Morrey norm of an expression, with the ball form alongside.
    Norm {
        expr: String,
        /// Exponent and shape as `p,r`.
        #[arg(long, allow_hyphen_values = true)]
        space: String,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Atomic decomposition cost and a certified lower bound.
    Predual {
        expr: String,
        /// Exponent and shape as `p,rho`.
        #[arg(long, allow_hyphen_values = true)]
        space: String,
        /// Print every atom.
        #[arg(long)]
        atoms: bool,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Applies an operator given as JSON and prints `x[,y],re,im` per node.
    Apply {
        op_json: String,
        expr: String,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Table of ‖Tf‖/‖f‖ over a corpus and successive refinements.
    BoundRatio {
        /// Operator as JSON.
        #[arg(long)]
        op: String,
        /// Corpus expressions.
        #[arg(long = "function", required = true)]
        corpus: Vec<String>,
        /// `p` for a Lebesgue space or `p,r` for a Morrey space.
        #[arg(long, allow_hyphen_values = true)]
        space: String,
        #[arg(long, default_value_t = 1)]
        refinements: usize,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Runs an experiment config; exits non-zero when a check fails.
    Check {
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Summarises a saved JSON report.
    Report {
        report: PathBuf,
        /// Print the report as CSV instead.
        #[arg(long)]
        csv: bool,
    },
}

fn parse_pair(text: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((a.parse().context("first value")?, b.parse().context("second value")?)),
        _ => bail!("expected two comma-separated numbers, got `{text}`"),
    }
}

fn parse_expr(text: &str) -> Result<FunctionExpr> {
    text.parse::<FunctionExpr>()
        .with_context(|| format!("parsing expression `{text}`"))
}

fn parse_op(text: &str) -> Result<OperatorSpec> {
    serde_json::from_str(text).with_context(|| format!("parsing operator `{text}`"))
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn norm(expr: &str, space: &str, grid: GridArgs) -> Result<()> {
    let spec = grid.spec()?;
    let (p, r) = parse_pair(space)?;
    let params = MorreyParams::new(p, r)?;
    let f = GridFunction::sample(&parse_expr(expr)?, &spec)?;
    let dyadic = morrey_norm_dyadic(&f, &params, None)?;
    let ball = morrey_norm_ball(&f, &params, &BallCandidates::default_for(&spec))?;
    let report = NormReport::new("morrey_dyadic", json!({ "p": p, "r": r }), dyadic.value, dyadic.argmax, &spec);
    print_json(&json!({ "dyadic": report, "ball": ball }))
}

fn predual(expr: &str, space: &str, atoms: bool, grid: GridArgs) -> Result<()> {
    let spec = grid.spec()?;
    let (p, rho) = parse_pair(space)?;
    let params = PredualParams::new(p, rho)?;
    params.check_dim(spec.dim())?;
    let f = GridFunction::sample(&parse_expr(expr)?, &spec)?;
    let decomposition = predual_upper_bound(&f, &params, None)?;
    let certificate = if f.is_zero() {
        None
    } else {
        let dictionary = default_dictionary(&f, &params)?;
        Some(predual_lower_bound(&f, &params, None, &dictionary)?.export())
    };
    let mut out = json!({
        "upper": decomposition.total_cost(),
        "atom_count": decomposition.atoms().len(),
        "certificate": certificate,
        "resolution": spec.points_per_axis(),
    });
    if atoms {
        out["atoms"] = serde_json::to_value(decomposition.export())?;
    }
    print_json(&out)
}

fn apply(op: &str, expr: &str, grid: GridArgs) -> Result<()> {
    let spec = grid.spec()?;
    let op = parse_op(op)?;
    op.validate(&spec)?;
    let f = GridFunction::sample(&parse_expr(expr)?, &spec)?;
    let g = op.apply(&f)?;
    let header = if spec.dim() == 1 { "x,re,im" } else { "x,y,re,im" };
    println!("{header}");
    for (k, v) in g.values().iter().enumerate() {
        let x = spec.node(k);
        let coords = x[..spec.dim()].iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        println!("{coords},{},{}", v.re, v.im);
    }
    Ok(())
}

fn bound_ratio(op: &str, corpus: &[String], space: &str, refinements: usize, grid: GridArgs) -> Result<()> {
    let spec = grid.spec()?;
    let op = parse_op(op)?;
    op.validate(&spec)?;
    let space = match space.split_once(',') {
        Some(_) => {
            let (p, r) = parse_pair(space)?;
            MorreyParams::new(p, r)?.check_dim(spec.dim())?;
            NormSpace::Morrey { p, r }
        }
        None => NormSpace::Lebesgue {
            p: space.trim().parse().context("Lebesgue exponent")?,
        },
    };
    let corpus = corpus.iter().map(|s| parse_expr(s)).collect::<Result<Vec<_>>>()?;
    let table = harness::bound_ratio(&op, &space, &corpus, &spec, refinements)?;
    print_json(&table)
}

fn summarise(report: &ExperimentReport) {
    for r in &report.records {
        let value = r.value.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"));
        let status = if r.pass { "PASS" } else { "FAIL" };
        let subject = [r.function.as_deref(), r.operator.as_deref()]
            .into_iter()
            .flatten()
            .collect::<Vec<_>>()
            .join(" | ");
        match &r.error {
            Some(e) => println!("{status} {} [{subject}] error: {e}", r.check),
            None => println!("{status} {} [{subject}] value={value} tol={:e}", r.check, r.tolerance),
        }
    }
    println!("{} passed, {} failed", report.passed, report.failed);
}

fn check(path: &Path, output: Option<PathBuf>) -> Result<ExitCode> {
    let mut config = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if output.is_some() {
        config.output_path = output;
    }
    let report = harness::run(&config)?;
    summarise(&report);
    Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn report(path: &Path, csv: bool) -> Result<()> {
    let report = ExperimentReport::load(path).with_context(|| format!("loading {}", path.display()))?;
    if csv {
        report.write_csv(std::io::stdout().lock())?;
    } else {
        summarise(&report);
    }
    Ok(())
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Norm { expr, space, grid } => norm(&expr, &space, grid)?,
        Command::Predual { expr, space, atoms, grid } => predual(&expr, &space, atoms, grid)?,
        Command::Apply { op_json, expr, grid } => apply(&op_json, &expr, grid)?,
        Command::BoundRatio { op, corpus, space, refinements, grid } => {
            bound_ratio(&op, &corpus, &space, refinements, grid)?
        }
        Command::Check { config, output } => return check(&config, output),
        Command::Report { report: path, csv } => report(&path, csv)?,
    }
    Ok(ExitCode::SUCCESS)
}
