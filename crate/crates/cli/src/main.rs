use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use monoboot::bootstrap::{
    bootstrap_ci, bootstrap_distribution, BootstrapScheme, IntervalKind, SchemeOptions,
};
use monoboot::empirical::{read_sample, Sample};
use monoboot::experiments::{
    coverage_study, histogram_export, quantile_summary, quantile_tracking, reference_quantile,
    simulate_delta, write_csv, write_meta, ExperimentConfig, TrackingConfig,
};
use monoboot::lcm::grenander;
use monoboot::limitsim::{chernoff_draws, limit_pair_draws, DEFAULT_HALF_WIDTH, DEFAULT_STEP};
use monoboot::model::{builtin_model, check_conditions, limit_scale};
use monoboot::rng::{derive_seed, RngStream};
use monoboot::stats::correlation;
use monoboot::Error;

#[derive(Parser, Debug)]
#[command(
    name = "monoboot",
    version,
    about = "Bootstrap inference for the Grenander estimator"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Worker threads (outputs do not depend on this).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Grenander estimate of the density at a point.
    Estimate(EstimateArgs),
    /// Bootstrap confidence interval for the density at a point.
    Ci(CiArgs),
    /// Coverage study driven by a TOML config.
    Coverage(CoverageArgs),
    /// Bootstrap quantiles along nested growing samples.
    TrackQuantiles(TrackArgs),
    /// Histogram of Δ_n draws or of bootstrap roots.
    Histogram(HistogramArgs),
    /// Draws of the limit slope pair.
    Limit(LimitArgs),
    /// Draws from Chernoff's distribution.
    Chernoff(ChernoffArgs),
    /// Regularity conditions and limit constant of a built-in model.
    CheckModel(CheckModelArgs),
}

#[derive(Args, Debug, Serialize)]
struct EstimateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    t0: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SchemeArgs {
    /// Kernel for the smoothed scheme.
    #[arg(long, default_value = "gaussian")]
    kernel: String,
    /// Bandwidth constant c in h = c n^(-e).
    #[arg(long, default_value_t = 0.5)]
    bandwidth_c: f64,
    /// Bandwidth exponent e in h = c n^(-e).
    #[arg(long, default_value_t = 1.0 / 6.0)]
    bandwidth_exp: f64,
    /// Exponent β in m = ceil(n^β) for m-of-n schemes.
    #[arg(long, default_value_t = 2.0 / 3.0)]
    m_exponent: f64,
}

impl SchemeArgs {
    fn options(&self) -> SchemeOptions {
        SchemeOptions {
            kernel: self.kernel.clone(),
            bandwidth_c: self.bandwidth_c,
            bandwidth_exp: self.bandwidth_exp,
            m_exponent: self.m_exponent,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct CiArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    t0: f64,
    /// edf, npmle, smoothed, m-of-n-edf or m-of-n-npmle.
    #[arg(long)]
    scheme: String,
    #[arg(long = "B", default_value_t = 1000)]
    b: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// basic or percentile.
    #[arg(long, default_value = "basic")]
    interval: String,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    scheme_args: SchemeArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct CoverageArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct TrackArgs {
    #[arg(long, default_value = "exp1")]
    model: String,
    #[arg(long, default_value_t = 1.0)]
    t0: f64,
    #[arg(long, value_delimiter = ',', default_value = "edf,npmle")]
    schemes: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long = "B", default_value_t = 1000)]
    b: usize,
    #[arg(long, default_value_t = 2)]
    sequences: usize,
    #[arg(long, default_value_t = 0.95)]
    quantile: f64,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    scheme_args: SchemeArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct HistogramArgs {
    #[arg(long, default_value = "exp1")]
    model: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    t0: f64,
    /// Δ_n draws, or bootstrap replicates when --scheme is given.
    #[arg(long, default_value_t = 10_000)]
    draws: usize,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    /// Histogram the bootstrap roots of one sample under this scheme.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    scheme_args: SchemeArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct LimitArgs {
    #[arg(long = "f")]
    f: f64,
    #[arg(long = "fprime", allow_hyphen_values = true)]
    fprime: f64,
    #[arg(long, default_value_t = 10_000)]
    draws: usize,
    #[arg(long, default_value_t = DEFAULT_HALF_WIDTH)]
    c: f64,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    delta: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ChernoffArgs {
    #[arg(long, default_value_t = 100_000)]
    draws: usize,
    #[arg(long, default_value_t = DEFAULT_HALF_WIDTH)]
    c: f64,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    delta: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct CheckModelArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    t0: Option<f64>,
}

/// Errors caused by the invocation rather than by the computation.
fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Io { .. } | Error::Parse(_) | Error::Config(_) | Error::Domain(_)
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k as usize)
            .build_global()
        {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_usage_error(&e) { 2 } else { 1 })
        }
    }
}

fn prepare_out(dir: &Path) -> monoboot::Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn run(command: Command) -> monoboot::Result<()> {
    let start = Instant::now();
    match command {
        Command::Estimate(a) => {
            let sample = read_sample(&a.data)?;
            if !(a.t0 > 0.0) {
                return Err(Error::Domain(format!("t0 = {} must be positive", a.t0)));
            }
            let (_, density) = grenander(&sample)?;
            println!("{:.6}", density.eval(a.t0));
        }
        Command::Ci(a) => {
            let sample = read_sample(&a.data)?;
            let scheme = BootstrapScheme::by_name(&a.scheme, &a.scheme_args.options())?;
            let kind: IntervalKind = a.interval.parse()?;
            prepare_out(&a.out)?;
            let record = bootstrap_ci(&sample, &scheme, a.t0, a.b, a.level, kind, a.seed)?;
            println!(
                "{}",
                serde_json::to_string(&record).expect("record serialises")
            );
            write_meta(
                &a.out,
                "ci",
                &a,
                start.elapsed().as_secs_f64(),
                serde_json::to_value(&record).unwrap(),
            )?;
        }
        Command::Coverage(a) => {
            let mut config = ExperimentConfig::read(&a.config)?;
            if let Some(seed) = a.seed {
                config.master_seed = seed;
            }
            prepare_out(&a.out)?;
            let result = coverage_study(&config)?;
            write_csv(a.out.join("coverage.csv"), &result.rows)?;
            let runtimes: Vec<_> = result
                .rows
                .iter()
                .map(|r| serde_json::json!({"n": r.n, "runtime_secs": r.runtime_secs}))
                .collect();
            write_meta(
                &a.out,
                "coverage",
                &config,
                start.elapsed().as_secs_f64(),
                serde_json::json!(runtimes),
            )?;
            println!("scheme,n,coverage,mc_stderr");
            for r in &result.rows {
                println!("{},{},{:.4},{:.4}", r.scheme, r.n, r.coverage, r.mc_stderr);
            }
        }
        Command::TrackQuantiles(a) => {
            let config = TrackingConfig {
                model: a.model.clone(),
                t0: a.t0,
                schemes: a.schemes.clone(),
                scheme_options: a.scheme_args.options(),
                sample_sizes: a.sizes.clone(),
                n_boot: a.b,
                sequences: a.sequences,
                quantile: a.quantile,
                master_seed: a.seed,
            };
            config.validate()?;
            prepare_out(&a.out)?;
            let rows = quantile_tracking(&config)?;
            write_csv(a.out.join("quantiles.csv"), &rows)?;
            let reference = if a.quantile == 0.95 {
                Some(reference_quantile(&builtin_model(&a.model)?, a.t0)?)
            } else {
                None
            };
            write_meta(
                &a.out,
                "track-quantiles",
                &config,
                start.elapsed().as_secs_f64(),
                serde_json::json!({ "reference_quantile": reference }),
            )?;
        }
        Command::Histogram(a) => {
            let model = builtin_model(&a.model)?;
            prepare_out(&a.out)?;
            let values = match &a.scheme {
                None => simulate_delta(&model, a.n, a.t0, a.draws, a.seed)?,
                Some(name) => {
                    let scheme = BootstrapScheme::by_name(name, &a.scheme_args.options())?;
                    let mut rng =
                        RngStream::new(derive_seed(a.seed, "data", &[a.n as u64]), 0).rng();
                    let sample: Sample = model.sample(a.n, &mut rng)?;
                    let seed = derive_seed(a.seed, "boot", &[a.n as u64]);
                    bootstrap_distribution(&sample, &scheme, a.t0, a.draws, seed)?
                        .roots()
                        .to_vec()
                }
            };
            let hist = histogram_export(&values, a.bins)?;
            write_csv(a.out.join("hist.csv"), &hist)?;
            write_meta(
                &a.out,
                "histogram",
                &a,
                start.elapsed().as_secs_f64(),
                serde_json::Value::Null,
            )?;
        }
        Command::Limit(a) => {
            prepare_out(&a.out)?;
            let draws = limit_pair_draws(a.f, a.fprime, a.c, a.delta, a.draws, a.seed)?;
            #[derive(Serialize)]
            struct Row {
                slope_z: f64,
                slope_z20: f64,
            }
            let rows: Vec<Row> = draws
                .iter()
                .map(|d| Row {
                    slope_z: d.slope_z,
                    slope_z20: d.slope_z20,
                })
                .collect();
            write_csv(a.out.join("limit.csv"), &rows)?;
            let xs: Vec<f64> = draws.iter().map(|d| d.slope_z).collect();
            let ys: Vec<f64> = draws.iter().map(|d| d.slope_z20).collect();
            let r = correlation(&xs, &ys);
            println!("correlation {r:.4}");
            write_meta(
                &a.out,
                "limit",
                &a,
                start.elapsed().as_secs_f64(),
                serde_json::json!({ "correlation": r }),
            )?;
        }
        Command::Chernoff(a) => {
            prepare_out(&a.out)?;
            let draws = chernoff_draws(a.draws, a.c, a.delta, a.seed)?;
            monoboot::experiments::write_values_csv(a.out.join("chernoff.csv"), "draw", &draws)?;
            let summary = quantile_summary(&draws, &[0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975]);
            write_csv(a.out.join("summary.csv"), &summary)?;
            for q in &summary {
                println!("q{:<6} {:.4}", q.p, q.value);
            }
            write_meta(
                &a.out,
                "chernoff",
                &a,
                start.elapsed().as_secs_f64(),
                serde_json::Value::Null,
            )?;
        }
        Command::CheckModel(a) => {
            let model = builtin_model(&a.model)?;
            let report = check_conditions(&model);
            let scale = a.t0.map(|t0| limit_scale(&model, t0)).transpose()?;
            let out = serde_json::json!({
                "model": model.name(),
                "conditions": report,
                "t0": a.t0,
                "limit_scale": scale,
            });
            println!(
                "{}",
                serde_json::to_string_pretty(&out).expect("report serialises")
            );
        }
    }
    Ok(())
}
