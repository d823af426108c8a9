//! Command-line front end for the dyadic fractal analysis toolkit.

mod artifacts;
mod config;
mod runner;
mod scenario;
mod steps;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use crate::config::load_spec;
use crate::scenario::{apply_overrides, execute, format_preset_list, load_scenario_text, parse_scenario, PRESETS};
use crate::steps::*;

#[derive(Parser)]
#[command(name = "fractal", version, about = "Dyadic covers, dimension estimates, quasi-Cantor pruning, lacunary wavelet series and wavelet-leader analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Top-level seed; per-step randomness is derived from it by label.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "fractal-out")]
    out_dir: PathBuf,
    /// Worker-thread cap; 0 uses every core. Results never depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Tabular artifact format.
    #[arg(long, global = true, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
    /// Cap on the deepest dyadic scale.
    #[arg(long, global = true)]
    j_max_cap: Option<u32>,
}

#[derive(Args, Clone)]
struct SpecArg {
    /// Spec: a builtin name (full, cantor-half, cantor-third, cantor-rich,
    /// union-kn, ifs-overlap) or a path to a spec TOML file.
    #[arg(long)]
    spec: String,
}

#[derive(Args, Clone)]
struct SeriesArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    eta: f64,
    /// Dimension of the support.
    #[arg(long)]
    dim: f64,
    #[arg(long)]
    j_max: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Build the dyadic cover of a spec at one scale.
    Cover {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        j: u32,
        /// Export format: rle, bits or csv.
        #[arg(long, default_value = "rle")]
        emit: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Estimate the upper-box dimension from cover counts.
    Dims {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        j_min: u32,
        #[arg(long)]
        j_max: u32,
        #[arg(long, default_value_t = 1)]
        stride: u32,
        /// Audit the two-sided count bounds around this dimension.
        #[arg(long)]
        audit_h: Option<f64>,
        #[arg(long)]
        audit_eps: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Classify covered cells by duplication rate toward a finer scale.
    Classify {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        j: u32,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        dim: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the quasi-Cantor pruning and its audits.
    Quasicantor {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        base_scale: u32,
        #[arg(long)]
        ratio: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        dim: f64,
        #[arg(long, default_value_t = fractal_core::DEFAULT_MAX_SCALE)]
        max_scale: u32,
        /// Pruning recursion: recursive or fixed-point.
        #[arg(long, default_value = "recursive")]
        mode: String,
        #[arg(long)]
        base_rung: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Synthesize a lacunary wavelet series on the spec's support.
    Lws {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        series: SeriesArgs,
        /// Estimate the active-count growth exponent.
        #[arg(long)]
        occupancy: bool,
        /// Render Haar partial sums on the dyadic grid of this depth.
        #[arg(long)]
        render_depth: Option<u32>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compute wavelet leaders and optionally pointwise exponents.
    Leaders {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        series: SeriesArgs,
        /// Reuse an exported coefficient file instead of synthesizing.
        #[arg(long)]
        coefficients: Option<String>,
        /// Comma-separated scales whose leader rows are exported.
        #[arg(long, value_delimiter = ',')]
        emit_scales: Vec<u32>,
        /// Also estimate pointwise exponents per finest cell.
        #[arg(long)]
        holder: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Estimate the increasing multifractal spectrum.
    Spectrum {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        series: SeriesArgs,
        /// Reuse an exported coefficient file instead of synthesizing.
        #[arg(long)]
        coefficients: Option<String>,
        /// Comma-separated regularity levels.
        #[arg(long, value_delimiter = ',')]
        h_grid: Vec<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Box profiles of limsup covers of contracted balls.
    Limsup {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        series: SeriesArgs,
        /// Reuse an exported coefficient file instead of synthesizing.
        #[arg(long)]
        coefficients: Option<String>,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        tail_start: u32,
        #[arg(long)]
        resolution: u32,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Build mass-carrying generations and certify a dimension lower bound.
    Mdp {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long)]
        base_scale: u32,
        #[arg(long)]
        ratio: f64,
        #[arg(long)]
        eps: f64,
        /// Contraction exponent as a power of (1 + ratio).
        #[arg(long)]
        q0: u32,
        /// Selection-slack parameter of the generation counts.
        #[arg(long)]
        b: f64,
        #[arg(long)]
        depth: Option<u32>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a scenario file or preset.
    Run {
        /// Scenario file path or preset name.
        target: String,
        /// TOML-path overrides, e.g. --set steps.0.j=10
        #[arg(long = "set")]
        overrides: Vec<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// List the built-in scenario presets.
    ListPresets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn threads_cap(threads: usize) -> usize {
    if threads == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        threads
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::ListPresets => {
            print!("{}", format_preset_list(PRESETS));
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { target, overrides, common } => {
            let text = load_scenario_text(&target)?;
            let doc = apply_overrides(&text, &overrides)?;
            let scenario = parse_scenario(doc)?;
            run_scenario(scenario, &common, scenario_seed_default(&common))
        }
        Command::Cover { spec, j, emit, common } => one_step(
            &spec,
            &common,
            StepConfig::Cover(CoverStep { j, emit }),
        ),
        Command::Dims { spec, j_min, j_max, stride, audit_h, audit_eps, common } => one_step(
            &spec,
            &common,
            StepConfig::Dims(DimsStep { j_min, j_max, stride, audit_h, audit_eps }),
        ),
        Command::Classify { spec, j, beta, eps, dim, common } => one_step(
            &spec,
            &common,
            StepConfig::Classify(ClassifyStep { j, beta, eps, dim }),
        ),
        Command::Quasicantor {
            spec,
            base_scale,
            ratio,
            eps,
            dim,
            max_scale,
            mode,
            base_rung,
            common,
        } => one_step(
            &spec,
            &common,
            StepConfig::Quasicantor(QuasicantorStep {
                base_scale,
                ratio,
                eps,
                dim,
                max_scale,
                mode: Some(mode),
                base_rung,
            }),
        ),
        Command::Lws { spec, series, occupancy, render_depth, common } => one_step(
            &spec,
            &common,
            StepConfig::Lws(LwsStep {
                alpha: series.alpha,
                eta: series.eta,
                dim: series.dim,
                j_max: series.j_max,
                seed: Some(common.seed),
                occupancy,
                render_depth,
            }),
        ),
        Command::Leaders { spec, series, coefficients, emit_scales, holder, common } => one_step(
            &spec,
            &common,
            StepConfig::Leaders(LeadersStep {
                coefficients,
                alpha: series.alpha,
                eta: series.eta,
                dim: series.dim,
                j_max: series.j_max,
                seed: Some(common.seed),
                emit_scales,
                holder,
                holder_j_min: 3,
                h_cap: 10.0,
            }),
        ),
        Command::Spectrum { spec, series, coefficients, h_grid, gamma, common } => one_step(
            &spec,
            &common,
            StepConfig::Spectrum(SpectrumStep {
                coefficients,
                alpha: series.alpha,
                eta: series.eta,
                dim: series.dim,
                j_max: series.j_max,
                h_grid,
                seed: Some(common.seed),
                gamma,
            }),
        ),
        Command::Limsup { spec, series, coefficients, delta, tail_start, resolution, common } => one_step(
            &spec,
            &common,
            StepConfig::Limsup(LimsupStep {
                coefficients,
                alpha: series.alpha,
                eta: series.eta,
                dim: series.dim,
                j_max: series.j_max,
                delta,
                tail_start,
                resolution,
                seed: Some(common.seed),
            }),
        ),
        Command::Mdp { spec, series, base_scale, ratio, eps, q0, b, depth, common } => one_step(
            &spec,
            &common,
            StepConfig::Mdp(MdpStep {
                alpha: series.alpha,
                eta: series.eta,
                dim: series.dim,
                j_max: series.j_max,
                base_scale,
                ratio,
                eps,
                q0,
                b,
                seed: Some(common.seed),
                depth,
            }),
        ),
    }
}

fn scenario_seed_default(common: &CommonArgs) -> u64 {
    common.seed
}

fn one_step(spec_arg: &SpecArg, common: &CommonArgs, step: StepConfig) -> Result<ExitCode> {
    let (spec_config, _spec) = load_spec(&spec_arg.spec)?;
    let scenario = ScenarioConfig {
        version: 1,
        name: step.op_name().to_string(),
        spec: spec_config,
        seed: None,
        steps: vec![step],
    };
    run_scenario(scenario, common, common.seed)
}

fn run_scenario(scenario: ScenarioConfig, common: &CommonArgs, seed_flag: u64) -> Result<ExitCode> {
    let threads = threads_cap(common.threads);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .ok(); // on repeated invocation in one process the pool already exists
    let seed = scenario.seed.unwrap_or(seed_flag);
    let report = execute(&scenario, seed, &common.out_dir, threads, &common.format, common.j_max_cap)?;
    println!("manifest: {}", report.manifest_path.display());
    if report.audit_failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("audit failures: {}", report.audit_failures.join("; "));
        Ok(ExitCode::from(2))
    }
}
