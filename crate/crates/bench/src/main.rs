use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use grc_bench::checks::{self, Violation};
use grc_bench::sweep::{self, DinfSpec, Mode, SweepConfig, SweepRow};
use grc_bench::{plot, vector};
use grc_core::{gaussian_pair_for_targets, SplitRule};

#[derive(Parser)]
#[command(name = "bench", about = "Sweeps and checks for greedy rejection coding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grid sweep over (D_KL, D_inf) pairs, one CSV row per point and variant.
    Sweep(SweepArgs),
    /// Sweep with the KS goodness-of-fit check on every point.
    Unbias(SweepArgs),
    /// KL bias of depth-limited dyadic coding against extra bits.
    Bias(BiasArgs),
    /// Dimensionwise δ versus ζ coding of a vector of pairs.
    Vector(VectorArgs),
    /// Plot data and a gnuplot script from a sweep CSV.
    Plot(PlotArgs),
}

fn parse_dmax(s: &str) -> Result<Option<u64>, String> {
    match s {
        "inf" => Ok(None),
        _ => s.parse().map(Some).map_err(|e| format!("bad depth limit {s:?}: {e}")),
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "runtime_vs_dinf")]
    mode: Mode,
    #[arg(long, value_delimiter = ',', required = true)]
    dkl: Vec<f64>,
    /// Absolute values, or `+g` for D_KL + g.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    dinf: Vec<DinfSpec>,
    #[arg(long, value_delimiter = ',', default_value = "GRCG,GRCS,GRCD")]
    variants: Vec<SplitRule>,
    #[arg(long, default_value_t = 4000)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    /// Depth limits, `inf` for exact coding; extra bits in bias mode.
    #[arg(long, value_delimiter = ',', default_value = "inf", value_parser = parse_dmax)]
    dmax: Vec<Option<u64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    include_slow_global: bool,
    /// Exit with status 2 if any threshold check fails.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct BiasArgs {
    #[arg(long, default_value_t = 3.0)]
    dkl: f64,
    #[arg(long, default_value_t = 5.0)]
    dinf: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8")]
    extra: Vec<u64>,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct VectorArgs {
    #[arg(long, default_value_t = 50)]
    dims: usize,
    #[arg(long, default_value_t = 0.05)]
    dkl_min: f64,
    #[arg(long, default_value_t = 0.5)]
    dkl_max: f64,
    /// D_inf - D_KL for every lane.
    #[arg(long, default_value_t = 2.0)]
    gap: f64,
    #[arg(long, default_value_t = 1000)]
    calibration: usize,
    #[arg(long, default_value_t = 200)]
    vectors: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct PlotArgs {
    csv: PathBuf,
    #[arg(long, default_value = "plots")]
    out: PathBuf,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn report(violations: &[Violation]) -> ExitCode {
    for v in violations {
        eprintln!("check failed [{}]: {}", v.check, v.detail);
    }
    if violations.is_empty() {
        eprintln!("all checks passed");
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn sweep_command(args: SweepArgs, mode: Option<Mode>) -> Result<ExitCode> {
    let mut config = SweepConfig::new(mode.unwrap_or(args.mode), args.dkl, args.dinf);
    config.variants = args.variants;
    config.seeds_per_point = args.seeds;
    config.seed_base = args.seed_base;
    config.d_max = args.dmax;
    config.include_slow_global = args.include_slow_global;
    let rows = sweep::run_sweep(&config)?;
    sweep::write_csv(&rows, output(&args.out)?)?;
    if !args.check {
        return Ok(ExitCode::SUCCESS);
    }
    let mut violations = checks::check_rows(&rows);
    match config.mode {
        Mode::RuntimeVsDinf => violations.extend(checks::check_runtime(&rows)),
        Mode::BiasVsExtraBits => violations.extend(check_bias_groups(&rows)),
        _ => {}
    }
    Ok(report(&violations))
}

fn check_bias_groups(rows: &[SweepRow]) -> Vec<Violation> {
    let mut keys: Vec<(f64, f64, SplitRule)> = Vec::new();
    for r in rows {
        let k = (r.dkl_target, r.dinf_target, r.variant);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .flat_map(|k| {
            let group: Vec<SweepRow> =
                rows.iter().filter(|r| (r.dkl_target, r.dinf_target, r.variant) == k).cloned().collect();
            checks::check_bias(&group)
        })
        .collect()
}

fn bias_command(args: BiasArgs) -> Result<ExitCode> {
    let rows = sweep::run_bias(args.dkl, args.dinf, &args.extra, args.seed_base)?;
    sweep::write_csv(&rows, output(&args.out)?)?;
    Ok(if args.check { report(&checks::check_bias(&rows)) } else { ExitCode::SUCCESS })
}

fn vector_command(args: VectorArgs) -> Result<ExitCode> {
    anyhow::ensure!(args.dims > 0, "need at least one dimension");
    let pairs = (0..args.dims)
        .map(|i| {
            let t = if args.dims == 1 { 0.0 } else { i as f64 / (args.dims - 1) as f64 };
            let dkl = args.dkl_min + t * (args.dkl_max - args.dkl_min);
            gaussian_pair_for_targets(dkl, dkl + args.gap).with_context(|| format!("lane {i}"))
        })
        .collect::<Result<Vec<_>>>()?;
    let options = vector::VectorOptions { calibration_runs: args.calibration, test_vectors: args.vectors };
    let rep = vector::encode_vector(&pairs, args.seed, &options);

    let mut w = csv::Writer::from_writer(output(&args.out)?);
    w.write_record([
        "lane",
        "dkl",
        "exponent",
        "mean_delta_bits",
        "mean_zeta_ideal_bits",
        "mean_grcd_bits",
        "delta_overhead",
        "error",
    ])?;
    let num = |v: f64| if v.is_nan() { String::new() } else { v.to_string() };
    for l in &rep.lanes {
        w.write_record([
            l.lane.to_string(),
            l.dkl.to_string(),
            l.exponent.map(|e| e.to_string()).unwrap_or_default(),
            num(l.mean_delta_bits),
            num(l.mean_zeta_ideal_bits),
            num(l.mean_grcd_bits),
            num(l.delta_overhead),
            l.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    eprintln!(
        "mean bits per vector: delta {:.3}, zeta {:.3} (sum D_KL {:.3})",
        rep.mean_delta_total, rep.mean_zeta_total, rep.sum_dkl
    );
    if !args.check {
        return Ok(ExitCode::SUCCESS);
    }
    let mut violations = Vec::new();
    for l in rep.lanes.iter().filter(|l| l.error.is_some()) {
        violations.push(Violation { check: "vector_lane", detail: format!("lane {}: {}", l.lane, l.error.as_ref().unwrap()) });
    }
    if rep.mean_zeta_total > rep.mean_delta_total {
        violations.push(Violation {
            check: "zeta_vs_delta",
            detail: format!("zeta {:.3} > delta {:.3} bits per vector", rep.mean_zeta_total, rep.mean_delta_total),
        });
    }
    Ok(report(&violations))
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Sweep(a) => sweep_command(a, None),
        Command::Unbias(a) => sweep_command(a, Some(Mode::Unbiasedness)),
        Command::Bias(a) => bias_command(a),
        Command::Vector(a) => vector_command(a),
        Command::Plot(a) => {
            for p in plot::emit_plots(&a.csv, &a.out)? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
