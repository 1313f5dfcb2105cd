//! Batch front end for low multilinear-rank tensor completion.
//!
//! Four subcommands cover the whole workflow: `gen` writes a synthetic
//! problem instance to disk, `solve` completes a masked tensor and records
//! its convergence trace, `bench` sweeps a grid of problem cells and
//! aggregates trial means, and `inpaint` runs the image pipeline end to end
//! on a PPM file.
//!
//! Exit codes follow one contract everywhere: 0 for a converged solve, 2
//! when the iteration cap was reached, 3 for a numerical failure, 64 for
//! usage errors (bad flags, inconsistent problem specs), and 1 for other
//! failures such as I/O.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use serde::Deserialize;

use lrtc_core::io::{
    mask_from_image, read_mask, read_ppm, read_tensor, write_mask, write_ppm, write_summary_json,
    write_tensor, write_trace_csv, ImageTensor, MissingRule, RunSummary,
};
use lrtc_core::problems::{gen_lowrank, nrmse, rel_err, ProblemSpec};
use lrtc_core::solver::{solve, SolveResult, SolveStatus, SolverConfig};
use lrtc_core::tensor::Shape;
use lrtc_core::DenseTensor;

/// Exit code for a converged solve.
pub const EXIT_OK: i32 = 0;
/// Exit code when the iteration cap fired before the stopping test.
pub const EXIT_MAX_ITER: i32 = 2;
/// Exit code for numerical failures.
pub const EXIT_NUMERICAL: i32 = 3;
/// Exit code for usage errors.
pub const EXIT_USAGE: i32 = 64;

/// A command-line level mistake: malformed values, missing flag
/// combinations, inconsistent problem specs.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Maps a failed command to its exit code: 64 for usage-level mistakes,
/// 3 for numerical failures, 1 otherwise.
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return EXIT_USAGE;
        }
        if let Some(core) = cause.downcast_ref::<lrtc_core::Error>() {
            return match core {
                lrtc_core::Error::Numerical { .. } => EXIT_NUMERICAL,
                lrtc_core::Error::Spec { .. } | lrtc_core::Error::Parameter { .. } => EXIT_USAGE,
                _ => 1,
            };
        }
    }
    1
}

fn status_exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::MaxIter => EXIT_MAX_ITER,
        SolveStatus::NumericalError => EXIT_NUMERICAL,
    }
}

/// Parses an 'x'-separated shape such as `50x50x50`.
pub fn parse_shape(text: &str) -> Result<Shape> {
    let dims: Vec<usize> = text
        .split('x')
        .map(|tok| tok.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("invalid shape {text:?}: expected e.g. 50x50x50")))?;
    Shape::new(dims).map_err(|e| usage(format!("invalid shape {text:?}: {e}")))
}

/// Parses a comma-separated rank tuple such as `9,9,3`.
pub fn parse_ranks(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|tok| tok.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("invalid ranks {text:?}: expected e.g. 9,9,3")))
}

/// Parses a comma-separated RGB triple such as `255,0,255`.
pub fn parse_color(text: &str) -> Result<[u16; 3]> {
    let parts: Vec<u16> = text
        .split(',')
        .map(|tok| tok.trim().parse::<u16>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("invalid color {text:?}: expected e.g. 255,0,255")))?;
    let [r, g, b] = parts[..] else {
        return Err(usage(format!("invalid color {text:?}: expected three components")));
    };
    Ok([r, g, b])
}

fn shape_display(dims: &[usize]) -> String {
    dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
}

fn ranks_display(ranks: &[usize]) -> String {
    ranks.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

/// Solver parameter flags shared by every solving subcommand. Unset flags
/// fall back to the standard defaults; ε additionally adapts to the mask's
/// sampling ratio when left unset.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Initial penalty β⁰
    #[arg(long)]
    pub beta0: Option<f64>,
    /// Penalty growth factor ρ
    #[arg(long)]
    pub rho: Option<f64>,
    /// Stopping tolerance on the relative change of X
    #[arg(long)]
    pub tol: Option<f64>,
    /// Slow-change trigger ε for growing β (default 1e-4, or 1e-3 when the
    /// sampling ratio exceeds 0.5)
    #[arg(long)]
    pub eps: Option<f64>,
    /// Iteration cap
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Upper cap on β
    #[arg(long)]
    pub beta_max: Option<f64>,
}

impl ConfigArgs {
    /// Resolves the flags against the defaults for a mask with the given
    /// sampling ratio.
    pub fn resolve(&self, sampling_ratio: f64) -> SolverConfig {
        let base = SolverConfig::for_sampling_ratio(sampling_ratio);
        SolverConfig {
            beta0: self.beta0.unwrap_or(base.beta0),
            rho: self.rho.unwrap_or(base.rho),
            tol: self.tol.unwrap_or(base.tol),
            eps: self.eps.unwrap_or(base.eps),
            max_iter: self.max_iter.unwrap_or(base.max_iter),
            beta_max: self.beta_max.unwrap_or(base.beta_max),
        }
    }
}

/// Flags for `gen`.
#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Tensor shape, 'x'-separated (e.g. 50x50x50)
    #[arg(long)]
    pub shape: String,
    /// Multilinear rank, comma-separated (e.g. 9,9,3)
    #[arg(long)]
    pub ranks: String,
    /// Sampling ratio in (0, 1]
    #[arg(long)]
    pub sr: f64,
    /// Additive noise standard deviation
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// RNG seed
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory for truth.mrt, observed.mrt, mask.mrm
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Generates a synthetic problem and writes its three artifacts.
pub fn cmd_gen(args: &GenArgs) -> Result<i32> {
    let spec = ProblemSpec {
        shape: parse_shape(&args.shape)?,
        ranks: parse_ranks(&args.ranks)?,
        sampling_ratio: args.sr,
        noise_sigma: args.sigma,
        seed: args.seed,
    };
    let problem = gen_lowrank(&spec)?;
    ensure_dir(&args.out_dir)?;
    write_tensor(args.out_dir.join("truth.mrt"), &problem.truth)?;
    write_tensor(args.out_dir.join("observed.mrt"), &problem.observed)?;
    write_mask(args.out_dir.join("mask.mrm"), &problem.mask)?;
    println!(
        "generated {} ranks ({}) sr {} sigma {} seed {}: |Omega| = {} -> {}",
        shape_display(spec.shape.dims()),
        ranks_display(&spec.ranks),
        args.sr,
        args.sigma,
        args.seed,
        problem.mask.len(),
        args.out_dir.join("{truth,observed}.mrt, mask.mrm").display(),
    );
    Ok(EXIT_OK)
}

/// Flags for `solve`.
#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Observation mask file (MRM1)
    #[arg(long)]
    pub mask: PathBuf,
    /// Ground-truth tensor file (MRT1); enables rel_err and NRMSE in the
    /// summary
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output directory for recovered.mrt, trace.csv, summary.json
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// Runs the solver on a stored mask and writes its artifacts. The exit code
/// reflects the terminal status.
pub fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let mask = read_mask(&args.mask)
        .with_context(|| format!("reading mask {}", args.mask.display()))?;
    let truth = match &args.truth {
        Some(path) => Some(
            read_tensor(path).with_context(|| format!("reading truth {}", path.display()))?,
        ),
        None => None,
    };
    let cfg = args.config.resolve(mask.sampling_ratio());

    let started = Instant::now();
    let result = solve(&mask, &cfg, None)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    ensure_dir(&args.out_dir)?;
    write_artifacts(&args.out_dir, &result, &mask.shape().dims().to_vec(), None, None, None, &cfg, truth.as_ref(), &mask, wall_ms)?;

    let exit = status_exit_code(result.status);
    println!(
        "{}: {} iterations, final rel_change {:.3e} -> {}",
        status_word(result.status),
        result.trace.len(),
        result.trace.last().map_or(f64::NAN, |t| t.rel_change),
        args.out_dir.join("recovered.mrt, trace.csv, summary.json").display(),
    );
    Ok(exit)
}

fn status_word(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIter => "iteration cap reached",
        SolveStatus::NumericalError => "numerical error",
    }
}

#[allow(clippy::too_many_arguments)]
fn write_artifacts(
    out_dir: &Path,
    result: &SolveResult,
    shape: &Vec<usize>,
    ranks: Option<Vec<usize>>,
    noise_sigma: Option<f64>,
    seed: Option<u64>,
    cfg: &SolverConfig,
    truth: Option<&DenseTensor<f64>>,
    mask: &lrtc_core::SamplingMask,
    wall_ms: f64,
) -> Result<RunSummary> {
    write_tensor(out_dir.join("recovered.mrt"), &result.x)?;
    write_trace_csv(&result.trace, shape.len(), out_dir.join("trace.csv"))?;
    let (re, nr) = match truth {
        Some(m_bar) => {
            let re = rel_err(&result.x, m_bar)?;
            // NRMSE needs at least one unobserved entry; a full mask simply
            // leaves it out of the summary.
            let nr = nrmse(&result.x, m_bar, mask).ok();
            (Some(re), nr)
        }
        None => (None, None),
    };
    let summary = RunSummary {
        shape: shape.clone(),
        ranks,
        sampling_ratio: mask.sampling_ratio(),
        noise_sigma,
        seed,
        config: cfg.clone(),
        iterations: result.trace.len(),
        status: result.status,
        rel_err: re,
        nrmse: nr,
        wall_ms,
    };
    write_summary_json(&summary, out_dir.join("summary.json"))?;
    Ok(summary)
}

/// One cell of a benchmark grid.
#[derive(Debug, Clone, Deserialize)]
pub struct BenchCell {
    pub shape: Vec<usize>,
    pub ranks: Vec<usize>,
    pub sr: f64,
    #[serde(default)]
    pub sigma: f64,
    pub trials: usize,
}

/// A benchmark sweep: a base seed plus the cells to run. Trial t of every
/// cell uses seed base_seed + t.
#[derive(Debug, Clone, Deserialize)]
pub struct BenchGrid {
    pub base_seed: u64,
    pub cells: Vec<BenchCell>,
}

/// Aggregated outcome of one grid cell.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub cell: BenchCell,
    /// Mean iterations, mean metric, mean wall ms over the trials; None
    /// when the cell failed.
    pub outcome: Option<(f64, f64, f64)>,
    /// Metric name: rel_err for noiseless cells, nrmse for noisy ones.
    pub metric: &'static str,
    /// Failure description when the cell could not run.
    pub error: Option<String>,
}

/// Flags for `bench`.
#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Grid file (JSON: {"base_seed": 42, "cells": [{"shape": [...], ...}]})
    #[arg(long)]
    pub grid: PathBuf,
    /// Output directory for report.csv
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Runs every cell of a benchmark grid; per-cell failures are recorded in
/// the report without aborting the sweep.
pub fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.grid)
        .with_context(|| format!("reading grid {}", args.grid.display()))?;
    let grid: BenchGrid =
        serde_json::from_str(&text).map_err(|e| usage(format!("invalid grid file: {e}")))?;
    if grid.cells.is_empty() {
        return Err(usage("grid has no cells"));
    }
    if let Some(bad) = grid.cells.iter().find(|c| c.trials == 0) {
        return Err(usage(format!(
            "cell {} ranks ({}) has trials = 0; every cell needs at least one trial",
            shape_display(&bad.shape),
            ranks_display(&bad.ranks),
        )));
    }

    let rows: Vec<BenchRow> =
        grid.cells.iter().map(|cell| run_cell(cell, grid.base_seed)).collect();

    ensure_dir(&args.out_dir)?;
    let report_path = args.out_dir.join("report.csv");
    fs::write(&report_path, render_report_csv(&rows))?;
    print!("{}", render_report_table(&rows));
    println!("report -> {}", report_path.display());
    Ok(EXIT_OK)
}

/// Runs all trials of one cell and aggregates them.
pub fn run_cell(cell: &BenchCell, base_seed: u64) -> BenchRow {
    let metric = if cell.sigma > 0.0 { "nrmse" } else { "rel_err" };
    let mut iters_sum = 0.0f64;
    let mut metric_sum = 0.0f64;
    let mut wall_sum = 0.0f64;
    for t in 0..cell.trials {
        let trial = (|| -> Result<(f64, f64, f64)> {
            let shape = Shape::new(cell.shape.clone())?;
            let spec = ProblemSpec {
                shape,
                ranks: cell.ranks.clone(),
                sampling_ratio: cell.sr,
                noise_sigma: cell.sigma,
                seed: base_seed + t as u64,
            };
            let problem = gen_lowrank(&spec)?;
            let cfg = SolverConfig::for_sampling_ratio(cell.sr);
            let started = Instant::now();
            let result = solve(&problem.mask, &cfg, None)?;
            let wall = started.elapsed().as_secs_f64() * 1e3;
            let value = if cell.sigma > 0.0 {
                nrmse(&result.x, &problem.truth, &problem.mask)?
            } else {
                rel_err(&result.x, &problem.truth)?
            };
            Ok((result.trace.len() as f64, value, wall))
        })();
        match trial {
            Ok((iters, value, wall)) => {
                iters_sum += iters;
                metric_sum += value;
                wall_sum += wall;
            }
            Err(e) => {
                return BenchRow {
                    cell: cell.clone(),
                    outcome: None,
                    metric,
                    error: Some(format!("trial {t}: {e:#}")),
                }
            }
        }
    }
    let n = cell.trials as f64;
    BenchRow {
        cell: cell.clone(),
        outcome: Some((iters_sum / n, metric_sum / n, wall_sum / n)),
        metric,
        error: None,
    }
}

fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

/// CSV form of a bench report. Column `mean_wall_ms` is excluded from the
/// determinism guarantee; everything else is reproducible bit-for-bit for a
/// fixed grid file.
pub fn render_report_csv(rows: &[BenchRow]) -> String {
    let mut out =
        String::from("shape,ranks,sr,sigma,trials,mean_iterations,metric,mean_metric,mean_wall_ms,error\n");
    for row in rows {
        let cell = &row.cell;
        let (iters, value, wall) = match row.outcome {
            Some((i, v, w)) => (format!("{i:.1}"), format!("{v:.16e}"), format!("{w:.3}")),
            None => (String::new(), String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            csv_field(&shape_display(&cell.shape)),
            csv_field(&ranks_display(&cell.ranks)),
            cell.sr,
            cell.sigma,
            cell.trials,
            iters,
            row.metric,
            value,
            wall,
            csv_field(row.error.as_deref().unwrap_or("")),
        );
    }
    out
}

/// Human-readable table form of a bench report.
pub fn render_report_table(rows: &[BenchRow]) -> String {
    let mut out = format!(
        "{:<16} {:<12} {:>5} {:>6} {:>6} {:>10} {:>8} {:>12} {:>12}\n",
        "shape", "ranks", "sr", "sigma", "trials", "iters", "metric", "value", "wall_ms"
    );
    for row in rows {
        let cell = &row.cell;
        match &row.outcome {
            Some((iters, value, wall)) => {
                let _ = writeln!(
                    out,
                    "{:<16} {:<12} {:>5} {:>6} {:>6} {:>10.1} {:>8} {:>12.3e} {:>12.1}",
                    shape_display(&cell.shape),
                    ranks_display(&cell.ranks),
                    cell.sr,
                    cell.sigma,
                    cell.trials,
                    iters,
                    row.metric,
                    value,
                    wall,
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "{:<16} {:<12} {:>5} {:>6} {:>6} ERROR {}",
                    shape_display(&cell.shape),
                    ranks_display(&cell.ranks),
                    cell.sr,
                    cell.sigma,
                    cell.trials,
                    row.error.as_deref().unwrap_or(""),
                );
            }
        }
    }
    out
}

/// Missing-data rules selectable on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RuleArg {
    /// Keep a uniform fraction of all entries
    Random,
    /// Keep a uniform fraction of pixel sites, dropping whole RGB triples
    PixelwiseRandom,
    /// Treat pixels matching --color as missing
    SentinelColor,
}

/// Flags for `inpaint`.
#[derive(Debug, Clone, Args)]
pub struct InpaintArgs {
    /// Input image (binary PPM, 8- or 16-bit)
    #[arg(long)]
    pub image: PathBuf,
    /// How missing pixels are chosen
    #[arg(long, value_enum)]
    pub rule: RuleArg,
    /// Sampling ratio for the random rules
    #[arg(long)]
    pub sr: Option<f64>,
    /// RNG seed for the random rules
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sentinel RGB triple (e.g. 255,0,255) for rule sentinel-color
    #[arg(long)]
    pub color: Option<String>,
    /// Clean reference image for difference metrics
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output directory for restored.ppm, trace.csv, summary.json
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

impl InpaintArgs {
    fn missing_rule(&self) -> Result<MissingRule> {
        match self.rule {
            RuleArg::Random => {
                let sr = self.sr.ok_or_else(|| usage("rule random requires --sr"))?;
                Ok(MissingRule::Random { sampling_ratio: sr, seed: self.seed })
            }
            RuleArg::PixelwiseRandom => {
                let sr = self.sr.ok_or_else(|| usage("rule pixelwise-random requires --sr"))?;
                Ok(MissingRule::PixelwiseRandom { sampling_ratio: sr, seed: self.seed })
            }
            RuleArg::SentinelColor => {
                let text = self
                    .color
                    .as_deref()
                    .ok_or_else(|| usage("rule sentinel-color requires --color"))?;
                Ok(MissingRule::SentinelColor { color: parse_color(text)? })
            }
        }
    }
}

/// Restores an image with missing entries and writes the result plus the
/// usual solve artifacts. The exit code reflects the terminal status.
pub fn cmd_inpaint(args: &InpaintArgs) -> Result<i32> {
    let image = read_ppm(&args.image)
        .with_context(|| format!("reading image {}", args.image.display()))?;
    let rule = args.missing_rule()?;
    let mask = mask_from_image(&image, &rule)?;
    let cfg = args.config.resolve(mask.sampling_ratio());

    let started = Instant::now();
    let result = solve(&mask, &cfg, None)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    // Clamp into the valid pixel range before quantization; the solver is
    // free to overshoot [0, 1] on unobserved entries.
    let clamped = SolveResult {
        x: result.x.map(|v| v.clamp(0.0, 1.0)),
        status: result.status,
        trace: result.trace,
    };
    let restored = ImageTensor::new(clamped.x.clone(), image.depth, None)?;

    let truth_tensor = match (&args.truth, &rule) {
        (Some(path), _) => Some(
            read_ppm(path)
                .with_context(|| format!("reading truth image {}", path.display()))?
                .tensor,
        ),
        // Under the random rules the input itself is the intact original.
        (None, MissingRule::Random { .. } | MissingRule::PixelwiseRandom { .. }) => {
            Some(image.tensor.clone())
        }
        (None, MissingRule::SentinelColor { .. }) => None,
    };

    ensure_dir(&args.out_dir)?;
    write_ppm(args.out_dir.join("restored.ppm"), &restored)?;
    let shape = image.tensor.shape().dims().to_vec();
    let seed = match rule {
        MissingRule::SentinelColor { .. } => None,
        _ => Some(args.seed),
    };
    let summary = write_artifacts(
        &args.out_dir,
        &clamped,
        &shape,
        None,
        None,
        seed,
        &cfg,
        truth_tensor.as_ref(),
        &mask,
        wall_ms,
    )?;

    let exit = status_exit_code(clamped.status);
    match summary.rel_err {
        Some(re) => println!(
            "{}: {} iterations, rel_err {:.3e} -> {}",
            status_word(clamped.status),
            summary.iterations,
            re,
            args.out_dir.join("restored.ppm").display(),
        ),
        None => println!(
            "{}: {} iterations -> {}",
            status_word(clamped.status),
            summary.iterations,
            args.out_dir.join("restored.ppm").display(),
        ),
    }
    Ok(exit)
}
