//! Monte Carlo studies: interval coverage, bootstrap quantile tracking along
//! growing samples, sampling distributions of `Δ_n`, and their flat-file
//! outputs.
//!
//! Every random quantity is drawn from a stream whose seed is derived from
//! the master seed and the coordinates of the quantity (role, sample size,
//! replicate), so results do not depend on thread count or on which other
//! sample sizes are in the study.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{
    bootstrap_ci, bootstrap_distribution, BootstrapScheme, IntervalKind, SchemeOptions,
};
use crate::error::{domain, Error, Result};
use crate::lcm::{grenander_density_at, HullScratch};
use crate::limitsim::{chernoff_draws, DEFAULT_HALF_WIDTH, DEFAULT_STEP};
use crate::model::{builtin_model, limit_scale, TrueModel};
use crate::rng::{derive_seed, RngStream};
use crate::stats::{quantile, quantile_sorted, sorted_copy};

/// 0.95 quantile of Chernoff's distribution.
pub const CHERNOFF_Q95: f64 = 0.845;

/// Scheme name for intervals built from the true limit law.
pub const ORACLE_SCHEME: &str = "oracle";

/// `limit_scale · q_{0.95}(ℂ)`, the limit of the 0.95 quantile of `Δ_n`.
pub fn reference_quantile(model: &TrueModel, t0: f64) -> Result<f64> {
    Ok(limit_scale(model, t0)? * CHERNOFF_Q95)
}

/// Settings for the Chernoff quantiles behind oracle intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleOptions {
    pub draws: usize,
    pub half_width: f64,
    pub step: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            draws: 20_000,
            half_width: DEFAULT_HALF_WIDTH,
            step: DEFAULT_STEP,
        }
    }
}

fn default_level() -> f64 {
    0.95
}

/// A coverage study, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: String,
    pub t0: f64,
    /// A bootstrap scheme name or `oracle`.
    pub scheme: String,
    #[serde(default)]
    pub scheme_options: SchemeOptions,
    #[serde(default)]
    pub interval: IntervalKind,
    pub sample_sizes: Vec<usize>,
    pub n_intervals: usize,
    pub n_boot: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub oracle: OracleOptions,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let model = builtin_model(&self.model)?;
        limit_scale(&model, self.t0).map_err(|e| Error::Config(e.to_string()))?;
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return Err(Error::Config(
                "sample_sizes must be a nonempty list of positive counts".into(),
            ));
        }
        if self.n_intervals == 0 || self.n_boot == 0 {
            return Err(Error::Config(
                "n_intervals and n_boot must be positive".into(),
            ));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!(
                "level must lie in (0, 1), got {}",
                self.level
            )));
        }
        if self.scheme == ORACLE_SCHEME {
            if self.oracle.draws < 100 {
                return Err(Error::Config(
                    "oracle needs at least 100 Chernoff draws".into(),
                ));
            }
        } else {
            BootstrapScheme::by_name(&self.scheme, &self.scheme_options)?;
        }
        Ok(())
    }
}

/// Coverage at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub scheme: String,
    pub n: usize,
    pub coverage: f64,
    pub mc_stderr: f64,
    pub mean_length: f64,
    #[serde(skip)]
    pub runtime_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageResult {
    pub rows: Vec<CoverageRow>,
}

impl CoverageResult {
    pub fn coverage(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.coverage).collect()
    }
}

enum Method {
    Bootstrap(BootstrapScheme),
    /// Chernoff quantiles `(q(α/2), q(1-α/2))` and the limit scale.
    Oracle {
        q_lo: f64,
        q_hi: f64,
        scale: f64,
    },
}

fn grenander_at(values: &[f64], t0: f64) -> f64 {
    grenander_density_at(values, t0, &mut HullScratch::default())
}

/// Fraction of `R` intervals per sample size that cover `f(t0)`.
pub fn coverage_study(config: &ExperimentConfig) -> Result<CoverageResult> {
    config.validate()?;
    let model = builtin_model(&config.model)?;
    let truth = model.pdf(config.t0);
    let alpha = 1.0 - config.level;
    let method = if config.scheme == ORACLE_SCHEME {
        let o = &config.oracle;
        let draws = chernoff_draws(
            o.draws,
            o.half_width,
            o.step,
            derive_seed(config.master_seed, "chernoff", &[]),
        )?;
        let sorted = sorted_copy(&draws);
        Method::Oracle {
            q_lo: quantile_sorted(&sorted, alpha / 2.0),
            q_hi: quantile_sorted(&sorted, 1.0 - alpha / 2.0),
            scale: limit_scale(&model, config.t0)?,
        }
    } else {
        Method::Bootstrap(BootstrapScheme::by_name(
            &config.scheme,
            &config.scheme_options,
        )?)
    };

    let mut rows = Vec::with_capacity(config.sample_sizes.len());
    for &n in &config.sample_sizes {
        let start = Instant::now();
        let intervals: Vec<(f64, f64)> = (0..config.n_intervals)
            .into_par_iter()
            .map(|r| {
                let coords = [n as u64, r as u64];
                let mut rng =
                    RngStream::new(derive_seed(config.master_seed, "data", &coords), 0).rng();
                let sample = model.sample(n, &mut rng)?;
                match &method {
                    Method::Bootstrap(scheme) => {
                        let seed = derive_seed(config.master_seed, "boot", &coords);
                        let ci = bootstrap_ci(
                            &sample,
                            scheme,
                            config.t0,
                            config.n_boot,
                            config.level,
                            config.interval,
                            seed,
                        )?;
                        Ok((ci.lo, ci.hi))
                    }
                    Method::Oracle { q_lo, q_hi, scale } => {
                        let est = grenander_at(sample.values(), config.t0);
                        let s = scale / (n as f64).cbrt();
                        Ok(((est - s * q_hi).max(0.0), est - s * q_lo))
                    }
                }
            })
            .collect::<Result<_>>()?;
        let covered = intervals
            .iter()
            .filter(|(lo, hi)| *lo <= truth && truth <= *hi)
            .count();
        let r = intervals.len() as f64;
        let coverage = covered as f64 / r;
        rows.push(CoverageRow {
            scheme: config.scheme.clone(),
            n,
            coverage,
            mc_stderr: (coverage * (1.0 - coverage) / r).sqrt(),
            mean_length: intervals.iter().map(|(lo, hi)| hi - lo).sum::<f64>() / r,
            runtime_secs: start.elapsed().as_secs_f64(),
        });
    }
    Ok(CoverageResult { rows })
}

/// Bootstrap quantile tracking along nested samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingConfig {
    pub model: String,
    pub t0: f64,
    pub schemes: Vec<String>,
    #[serde(default)]
    pub scheme_options: SchemeOptions,
    pub sample_sizes: Vec<usize>,
    pub n_boot: usize,
    pub sequences: usize,
    pub quantile: f64,
    pub master_seed: u64,
}

impl TrackingConfig {
    pub fn validate(&self) -> Result<()> {
        let model = builtin_model(&self.model)?;
        limit_scale(&model, self.t0).map_err(|e| Error::Config(e.to_string()))?;
        if self.sample_sizes.is_empty()
            || self.sample_sizes[0] == 0
            || !self.sample_sizes.windows(2).all(|w| w[0] < w[1])
        {
            return Err(Error::Config(
                "sample_sizes must be positive and strictly increasing".into(),
            ));
        }
        if self.n_boot == 0 || self.sequences == 0 {
            return Err(Error::Config(
                "n_boot and sequences must be positive".into(),
            ));
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(Error::Config(format!(
                "quantile must lie in (0, 1), got {}",
                self.quantile
            )));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("at least one scheme is required".into()));
        }
        for s in &self.schemes {
            BootstrapScheme::by_name(s, &self.scheme_options)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackingRow {
    pub sequence: usize,
    pub scheme: String,
    pub n: usize,
    pub quantile: f64,
}

/// One data sequence: the first `len` draws of a single stream, so that
/// every prefix is a sample of that size.
pub fn nested_sequence(model: &TrueModel, len: usize, seed: u64) -> Vec<f64> {
    let mut rng = RngStream::new(seed, 0).rng();
    (0..len).map(|_| model.draw(&mut rng)).collect()
}

/// The requested quantile of the bootstrap roots at every prefix size, for
/// each scheme and each independent sequence.
pub fn quantile_tracking(config: &TrackingConfig) -> Result<Vec<TrackingRow>> {
    config.validate()?;
    let model = builtin_model(&config.model)?;
    let max_n = *config.sample_sizes.last().unwrap();
    let sequences: Vec<Vec<f64>> = (0..config.sequences)
        .map(|s| {
            nested_sequence(
                &model,
                max_n,
                derive_seed(config.master_seed, "sequence", &[s as u64]),
            )
        })
        .collect();
    let schemes: Vec<BootstrapScheme> = config
        .schemes
        .iter()
        .map(|s| BootstrapScheme::by_name(s, &config.scheme_options))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (s, seq) in sequences.iter().enumerate() {
        for (scheme, name) in schemes.iter().zip(&config.schemes) {
            for &n in &config.sample_sizes {
                let sample = crate::empirical::Sample::new(seq[..n].to_vec())?;
                let seed = derive_seed(config.master_seed, "track-boot", &[s as u64, n as u64]);
                let dist = bootstrap_distribution(&sample, scheme, config.t0, config.n_boot, seed)?;
                rows.push(TrackingRow {
                    sequence: s,
                    scheme: name.clone(),
                    n,
                    quantile: dist.quantile(config.quantile),
                });
            }
        }
    }
    Ok(rows)
}

/// `draws` independent copies of `Δ_n = n^{1/3}(f̃_n(t0) - f(t0))`.
pub fn simulate_delta(
    model: &TrueModel,
    n: usize,
    t0: f64,
    draws: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n == 0 || draws == 0 {
        return domain("n and draws must be positive");
    }
    if !(t0 > 0.0 && t0 < model.support_end()) {
        return domain(format!("t0 = {t0} is not interior to the support"));
    }
    let truth = model.pdf(t0);
    let r = (n as f64).cbrt();
    Ok((0..draws)
        .into_par_iter()
        .map_init(
            || (Vec::with_capacity(n), HullScratch::default()),
            |(buf, scratch), i| {
                let mut rng = RngStream::new(seed, i as u64).rng();
                buf.clear();
                buf.extend((0..n).map(|_| model.draw(&mut rng)));
                buf.sort_unstable_by(f64::total_cmp);
                r * (grenander_density_at(buf, t0, scratch) - truth)
            },
        )
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: usize,
    pub density: f64,
}

/// Minimum number of values accepted by [`histogram_export`].
pub const MIN_HISTOGRAM_VALUES: usize = 100;

/// Equal-width histogram spanning the data, normalised to unit area. A
/// constant input yields one bin of width 1 centred on the value.
pub fn histogram_export(values: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if values.len() < MIN_HISTOGRAM_VALUES {
        return domain(format!(
            "histogram needs at least {MIN_HISTOGRAM_VALUES} values, got {}",
            values.len()
        ));
    }
    if bins == 0 {
        return domain("histogram needs at least one bin");
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return domain(format!("non-finite value {v}"));
    }
    let total = values.len() as f64;
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    if lo == hi {
        return Ok(vec![HistogramBin {
            bin_left: lo - 0.5,
            bin_right: lo + 0.5,
            count: values.len(),
            density: 1.0,
        }]);
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| {
            let bin_left = lo + k as f64 * width;
            let bin_right = if k + 1 == bins {
                hi
            } else {
                lo + (k + 1) as f64 * width
            };
            HistogramBin {
                bin_left,
                bin_right,
                count,
                density: count as f64 / (total * (bin_right - bin_left)),
            }
        })
        .collect())
}

/// Quantile summary of a batch of draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileSummary {
    pub p: f64,
    pub value: f64,
}

pub fn quantile_summary(values: &[f64], ps: &[f64]) -> Vec<QuantileSummary> {
    ps.iter()
        .map(|&p| QuantileSummary {
            p,
            value: quantile(values, p),
        })
        .collect()
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    }
}

/// Writes `rows` as CSV with a header row.
pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

/// Single-column CSV of values under `header`.
pub fn write_values_csv(path: impl AsRef<Path>, header: &str, values: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    w.write_record([header]).map_err(|e| io_error(path, e))?;
    for v in values {
        w.write_record([v.to_string()])
            .map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

/// `git describe --always --dirty`, or `unknown` outside a checkout.
pub fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}

/// Writes `meta.json` next to an experiment's CSV outputs.
pub fn write_meta(
    dir: impl AsRef<Path>,
    command: &str,
    config: &impl Serialize,
    runtime_secs: f64,
    extra: serde_json::Value,
) -> Result<()> {
    let path = dir.as_ref().join("meta.json");
    let meta = serde_json::json!({
        "command": command,
        "config": config,
        "version": env!("CARGO_PKG_VERSION"),
        "git_describe": git_describe(),
        "threads": rayon::current_num_threads(),
        "runtime_secs": runtime_secs,
        "extra": extra,
    });
    let text = serde_json::to_string_pretty(&meta).map_err(|e| io_error(&path, e))?;
    std::fs::write(&path, text + "\n").map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
