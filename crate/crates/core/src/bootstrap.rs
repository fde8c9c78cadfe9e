//! Bootstrap schemes for the Grenander estimator at a point.
//!
//! A scheme fixes where resamples come from (the EDF, the Grenander CDF, or
//! its log-scale smoothing), how many points each resample has (`m_n`), and
//! the center `f̂_n(t0)` of the root
//!
//! ```text
//! Δ*_n = m_n^{1/3} (f̃*_{n,m_n}(t0) - f̂_n(t0))
//! ```
//!
//! whose empirical law over `B` replicates is the [`BootstrapDistribution`].
//! Replicate `b` always draws from `RngStream::new(seed, b)`, so results do
//! not depend on how replicates are scheduled across threads.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirical::Sample;
use crate::error::{domain, Error, Result};
use crate::lcm::{grenander, grenander_density_at, HullScratch, PiecewiseLinearCdf};
use crate::rng::{RngStream, StreamRng};
use crate::smoothing::{BandwidthRule, GaussianKernel, Kernel, SmoothedCdf};
use crate::stats::{quantile_sorted, sorted_copy};

/// Intervals need at least this many replicates.
pub const MIN_CI_REPLICATES: usize = 100;

/// Default `β` in `m_n = ⌈n^β⌉`; satisfies both `m = o(n)` and
/// `m = o(n (log n)^{-3/2})`.
pub const DEFAULT_M_EXPONENT: f64 = 2.0 / 3.0;

/// Distribution the resamples are drawn from.
#[derive(Clone)]
pub enum Source {
    Edf,
    Npmle,
    Smoothed {
        kernel: Arc<dyn Kernel>,
        bandwidth: BandwidthRule,
    },
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Edf => f.write_str("Edf"),
            Source::Npmle => f.write_str("Npmle"),
            Source::Smoothed { kernel, bandwidth } => f
                .debug_struct("Smoothed")
                .field("kernel", &kernel.name())
                .field("bandwidth", bandwidth)
                .finish(),
        }
    }
}

/// Resample size rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MRule {
    /// `m = n`.
    Full,
    /// `m = ⌈n^β⌉` with `0 < β < 1`.
    Power(f64),
    /// A fixed `m`, capped at `n`.
    Fixed(usize),
}

impl MRule {
    pub fn resample_size(&self, n: usize) -> usize {
        match *self {
            MRule::Full => n,
            // Guard against n^β landing a hair above an integer.
            MRule::Power(beta) => (((n as f64).powf(beta) - 1e-9).ceil() as usize).clamp(1, n),
            MRule::Fixed(m) => m.clamp(1, n),
        }
    }
}

/// Center `f̂_n(t0)` of the bootstrap root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Center {
    /// The Grenander estimate `f̃_n(t0)`.
    Grenander,
    /// The density of the resampling distribution at `t0` (`f̌_n(t0)` for
    /// smoothed resampling, `f̃_n(t0)` otherwise since the EDF has none).
    FittedDensity,
    Value(f64),
}

#[derive(Debug, Clone)]
pub struct BootstrapScheme {
    source: Source,
    m_rule: MRule,
    center: Center,
}

impl BootstrapScheme {
    pub fn new(source: Source, m_rule: MRule, center: Center) -> Result<Self> {
        if let MRule::Power(beta) = m_rule {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::Config(format!(
                    "m-of-n exponent must lie in (0, 1), got {beta}"
                )));
            }
        }
        if matches!(m_rule, MRule::Fixed(0)) {
            return Err(Error::Config("resample size must be positive".into()));
        }
        if matches!(source, Source::Smoothed { .. }) && m_rule != MRule::Full {
            return Err(Error::Config("smoothed resampling uses m = n".into()));
        }
        Ok(Self {
            source,
            m_rule,
            center,
        })
    }

    /// Naive bootstrap from the EDF.
    pub fn edf() -> Self {
        Self::new(Source::Edf, MRule::Full, Center::Grenander).unwrap()
    }

    /// Naive bootstrap from the Grenander CDF.
    pub fn npmle() -> Self {
        Self::new(Source::Npmle, MRule::Full, Center::Grenander).unwrap()
    }

    /// Resampling from the log-smoothed Grenander CDF, centered at its own
    /// density `f̌_n(t0)`.
    pub fn smoothed(kernel: Arc<dyn Kernel>, bandwidth: BandwidthRule) -> Self {
        Self::new(
            Source::Smoothed { kernel, bandwidth },
            MRule::Full,
            Center::FittedDensity,
        )
        .unwrap()
    }

    pub fn m_of_n_edf(beta: f64) -> Result<Self> {
        Self::new(Source::Edf, MRule::Power(beta), Center::Grenander)
    }

    pub fn m_of_n_npmle(beta: f64) -> Result<Self> {
        Self::new(Source::Npmle, MRule::Power(beta), Center::Grenander)
    }

    /// One of `edf`, `npmle`, `smoothed`, `m-of-n-edf`, `m-of-n-npmle`.
    pub fn by_name(name: &str, options: &SchemeOptions) -> Result<Self> {
        match name {
            "edf" => Ok(Self::edf()),
            "npmle" => Ok(Self::npmle()),
            "smoothed" => Ok(Self::smoothed(
                crate::smoothing::kernel_by_name(&options.kernel)?,
                BandwidthRule::new(options.bandwidth_c, options.bandwidth_exp)?,
            )),
            "m-of-n-edf" => Self::m_of_n_edf(options.m_exponent),
            "m-of-n-npmle" => Self::m_of_n_npmle(options.m_exponent),
            other => Err(Error::Config(format!(
                "unknown scheme `{other}` (expected edf, npmle, smoothed, m-of-n-edf or m-of-n-npmle)"
            ))),
        }
    }

    pub fn with_center(mut self, center: Center) -> Self {
        self.center = center;
        self
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn m_rule(&self) -> MRule {
        self.m_rule
    }

    pub fn center(&self) -> Center {
        self.center
    }

    pub fn label(&self) -> &'static str {
        match (&self.source, self.m_rule) {
            (Source::Edf, MRule::Full) => "edf",
            (Source::Npmle, MRule::Full) => "npmle",
            (Source::Smoothed { .. }, _) => "smoothed",
            (Source::Edf, _) => "m-of-n-edf",
            (Source::Npmle, _) => "m-of-n-npmle",
        }
    }
}

/// Tuning knobs for [`BootstrapScheme::by_name`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeOptions {
    pub kernel: String,
    pub bandwidth_c: f64,
    pub bandwidth_exp: f64,
    pub m_exponent: f64,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        let bw = BandwidthRule::default();
        Self {
            kernel: GaussianKernel.name().to_string(),
            bandwidth_c: bw.constant(),
            bandwidth_exp: bw.exponent(),
            m_exponent: DEFAULT_M_EXPONENT,
        }
    }
}

/// A resampling distribution fitted to data.
#[derive(Debug, Clone)]
pub enum Fitted {
    Edf(Sample),
    Npmle(PiecewiseLinearCdf),
    Smoothed(SmoothedCdf),
}

/// Fits the scheme's resampling distribution to `sample`.
pub fn fit(scheme: &BootstrapScheme, sample: &Sample) -> Result<Fitted> {
    Ok(match scheme.source() {
        Source::Edf => Fitted::Edf(sample.clone()),
        Source::Npmle => Fitted::Npmle(grenander(sample)?.0),
        Source::Smoothed { kernel, bandwidth } => {
            let h = bandwidth.bandwidth(sample.len())?;
            Fitted::Smoothed(SmoothedCdf::new(grenander(sample)?.0, kernel.clone(), h)?)
        }
    })
}

/// Reusable buffers for resampling and refitting.
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    counts: Vec<u32>,
    uniforms: Vec<f64>,
    hull: HullScratch,
}

/// Order statistics of `m` uniforms from normalised exponential spacings.
fn sorted_uniforms(m: usize, rng: &mut StreamRng, out: &mut Vec<f64>) {
    out.clear();
    let mut acc = 0.0;
    for _ in 0..m {
        let e: f64 = rng.sample(Exp1);
        acc += e;
        out.push(acc);
    }
    let e: f64 = rng.sample(Exp1);
    let total = acc + e;
    out.iter_mut().for_each(|v| *v /= total);
}

impl Fitted {
    /// Draws `m` points into `out`, sorted ascending.
    pub fn resample_into(
        &self,
        m: usize,
        rng: &mut StreamRng,
        scratch: &mut Scratch,
        out: &mut Vec<f64>,
    ) {
        match self {
            Fitted::Edf(sample) => {
                let values = sample.values();
                let counts = &mut scratch.counts;
                counts.clear();
                counts.resize(values.len(), 0);
                for _ in 0..m {
                    counts[rng.random_range(0..values.len())] += 1;
                }
                out.clear();
                for (&v, &c) in values.iter().zip(counts.iter()) {
                    out.extend(std::iter::repeat_n(v, c as usize));
                }
            }
            Fitted::Npmle(cdf) => {
                sorted_uniforms(m, rng, &mut scratch.uniforms);
                cdf.invert_sorted_into(&scratch.uniforms, out);
            }
            Fitted::Smoothed(s) => {
                sorted_uniforms(m, rng, &mut scratch.uniforms);
                s.base().invert_sorted_into(&scratch.uniforms, out);
                let h = s.bandwidth();
                if h > 0.0 {
                    let kernel = s.kernel();
                    for v in out.iter_mut() {
                        *v *= (h * kernel.draw(rng)).exp();
                    }
                    out.sort_unstable_by(f64::total_cmp);
                }
            }
        }
    }

    /// Density of the fitted distribution at `t0`, if it has one.
    pub fn density_at(&self, t0: f64) -> Option<f64> {
        match self {
            Fitted::Edf(_) => None,
            Fitted::Npmle(cdf) => Some(cdf.density().eval(t0)),
            Fitted::Smoothed(s) => s.pdf(t0).ok(),
        }
    }
}

/// Draws a resample of size `m` from a fitted distribution.
pub fn resample(fitted: &Fitted, m: usize, rng: &mut StreamRng) -> Result<Sample> {
    if m == 0 {
        return domain("resample size must be positive");
    }
    let mut out = Vec::with_capacity(m);
    fitted.resample_into(m, rng, &mut Scratch::default(), &mut out);
    Ok(Sample::from_sorted_unchecked(out))
}

/// `m^{1/3} (f̃*(t0) - center)` for a sorted resample of size `m`.
pub fn root_of_resample(sorted: &[f64], t0: f64, center: f64, scratch: &mut HullScratch) -> f64 {
    let m = sorted.len() as f64;
    m.cbrt() * (grenander_density_at(sorted, t0, scratch) - center)
}

/// Empirical law of the bootstrap root over `B` replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDistribution {
    roots: Vec<f64>,
    sorted: Vec<f64>,
    m: usize,
    n: usize,
}

impl BootstrapDistribution {
    pub fn new(roots: Vec<f64>, m: usize, n: usize) -> Result<Self> {
        if roots.is_empty() {
            return domain("bootstrap distribution needs at least one root");
        }
        if let Some(r) = roots.iter().find(|r| !r.is_finite()) {
            return domain(format!("non-finite bootstrap root {r}"));
        }
        let sorted = sorted_copy(&roots);
        Ok(Self {
            roots,
            sorted,
            m,
            n,
        })
    }

    /// Roots in replicate order.
    pub fn roots(&self) -> &[f64] {
        &self.roots
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn quantile(&self, p: f64) -> f64 {
        quantile_sorted(&self.sorted, p)
    }
}

/// The Grenander estimate `f̃_n(t0)` and the root center for `scheme`.
pub fn estimate_and_center(
    sample: &Sample,
    fitted: &Fitted,
    scheme: &BootstrapScheme,
    t0: f64,
) -> Result<(f64, f64)> {
    let estimate = grenander(sample)?.1.eval(t0);
    let center = match scheme.center() {
        Center::Grenander => estimate,
        Center::FittedDensity => fitted.density_at(t0).unwrap_or(estimate),
        Center::Value(v) => v,
    };
    Ok((estimate, center))
}

fn check_t0(sample: &Sample, t0: f64) -> Result<()> {
    if !(t0 > 0.0 && t0 < sample.max()) {
        return domain(format!("t0 = {t0} must lie in (0, {})", sample.max()));
    }
    Ok(())
}

/// Bootstrap distribution of the root for `scheme` at `t0`, replicate `b`
/// drawing from `RngStream::new(seed, b)`.
pub fn bootstrap_distribution(
    sample: &Sample,
    scheme: &BootstrapScheme,
    t0: f64,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapDistribution> {
    Ok(bootstrap_run(sample, scheme, t0, replicates, seed)?.distribution)
}

/// A bootstrap distribution together with the data-side quantities.
#[derive(Debug, Clone)]
pub struct BootstrapRun {
    pub estimate: f64,
    pub center: f64,
    pub distribution: BootstrapDistribution,
}

pub fn bootstrap_run(
    sample: &Sample,
    scheme: &BootstrapScheme,
    t0: f64,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapRun> {
    if replicates == 0 {
        return domain("need at least one bootstrap replicate");
    }
    check_t0(sample, t0)?;
    let fitted = fit(scheme, sample)?;
    let (estimate, center) = estimate_and_center(sample, &fitted, scheme, t0)?;
    let n = sample.len();
    let m = scheme.m_rule().resample_size(n);
    let roots: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map_init(
            || (Scratch::default(), Vec::with_capacity(m)),
            |(scratch, buf), b| {
                let mut rng = RngStream::new(seed, b as u64).rng();
                fitted.resample_into(m, &mut rng, scratch, buf);
                root_of_resample(buf, t0, center, &mut scratch.hull)
            },
        )
        .collect();
    Ok(BootstrapRun {
        estimate,
        center,
        distribution: BootstrapDistribution::new(roots, m, n)?,
    })
}

/// How quantiles of the root become an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalKind {
    /// `[e - n^{-1/3} q(1-α/2), e - n^{-1/3} q(α/2)]`.
    #[default]
    Basic,
    /// `[e + n^{-1/3} q(α/2), e + n^{-1/3} q(1-α/2)]`.
    Percentile,
}

impl std::str::FromStr for IntervalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" => Ok(Self::Basic),
            "percentile" => Ok(Self::Percentile),
            other => Err(Error::Config(format!("unknown interval kind `{other}`"))),
        }
    }
}

/// Root-based interval for `f(t0)` at confidence `level`; the lower end is
/// floored at zero.
pub fn confidence_interval(
    dist: &BootstrapDistribution,
    estimate: f64,
    n: usize,
    level: f64,
    kind: IntervalKind,
) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return domain(format!("confidence level must lie in (0, 1), got {level}"));
    }
    if dist.len() < MIN_CI_REPLICATES {
        return Err(Error::TooFewReplicates {
            required: MIN_CI_REPLICATES,
            got: dist.len(),
        });
    }
    let alpha = 1.0 - level;
    let scale = (n as f64).cbrt().recip();
    let (q_lo, q_hi) = (dist.quantile(alpha / 2.0), dist.quantile(1.0 - alpha / 2.0));
    let (lo, hi) = match kind {
        IntervalKind::Basic => (estimate - scale * q_hi, estimate - scale * q_lo),
        IntervalKind::Percentile => (estimate + scale * q_lo, estimate + scale * q_hi),
    };
    Ok((lo.max(0.0), hi))
}

/// Result of a single bootstrap interval computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiRecord {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    pub scheme: String,
    #[serde(rename = "B")]
    pub replicates: usize,
    pub seed: u64,
}

pub fn bootstrap_ci(
    sample: &Sample,
    scheme: &BootstrapScheme,
    t0: f64,
    replicates: usize,
    level: f64,
    kind: IntervalKind,
    seed: u64,
) -> Result<CiRecord> {
    let run = bootstrap_run(sample, scheme, t0, replicates, seed)?;
    let (lo, hi) = confidence_interval(&run.distribution, run.estimate, sample.len(), level, kind)?;
    Ok(CiRecord {
        estimate: run.estimate,
        lo,
        hi,
        scheme: scheme.label().to_string(),
        replicates,
        seed,
    })
}
