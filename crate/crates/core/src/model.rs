//! Analytic decreasing densities on `[0, ∞)` used as ground truth.
//!
//! A [`TrueModel`] bundles the distribution function `F`, the density `f`, its
//! derivative `f'` and the right end of the support `α₁(F) = inf{x: F(x) = 1}`.
//! Two models are built in (`exp1` and `half_normal`); arbitrary models can be
//! supplied as closures through [`TrueModel::custom`], which validates them on
//! a grid.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::empirical::Sample;
use crate::error::{Error, Result};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Probability mass left beyond the grid when the support is unbounded.
pub const TAIL_TRUNCATION: f64 = 1e-6;

const CONDITION_GRID: usize = 10_000;
const VALIDATION_GRID: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    Exp1,
    HalfNormal,
    Custom,
}

/// Analytic `(F, f, f')` triple of a nonincreasing density on `[0, ∞)`.
#[derive(Clone)]
pub struct TrueModel {
    name: String,
    cdf: RealFn,
    pdf: RealFn,
    pdf_deriv: RealFn,
    support_end: f64,
    family: Family,
}

impl fmt::Debug for TrueModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrueModel")
            .field("name", &self.name)
            .field("support_end", &self.support_end)
            .finish_non_exhaustive()
    }
}

impl TrueModel {
    /// Exponential(1): `f(x) = e^{-x}`.
    pub fn exp1() -> Self {
        Self {
            name: "exp1".into(),
            cdf: Arc::new(|x| if x <= 0.0 { 0.0 } else { -(-x).exp_m1() }),
            pdf: Arc::new(|x| if x < 0.0 { 0.0 } else { (-x).exp() }),
            pdf_deriv: Arc::new(|x| if x < 0.0 { 0.0 } else { -(-x).exp() }),
            support_end: f64::INFINITY,
            family: Family::Exp1,
        }
    }

    /// Law of `|Z|` for standard normal `Z`: `f(x) = 2φ(x)`.
    pub fn half_normal() -> Self {
        let c = (2.0 / PI).sqrt();
        Self {
            name: "half_normal".into(),
            cdf: Arc::new(|x| if x <= 0.0 { 0.0 } else { libm::erf(x / SQRT_2) }),
            pdf: Arc::new(move |x| {
                if x < 0.0 {
                    0.0
                } else {
                    c * (-0.5 * x * x).exp()
                }
            }),
            pdf_deriv: Arc::new(move |x| {
                if x < 0.0 {
                    0.0
                } else {
                    -x * c * (-0.5 * x * x).exp()
                }
            }),
            support_end: f64::INFINITY,
            family: Family::HalfNormal,
        }
    }

    /// A user-supplied model. The closures are checked on a grid of the
    /// support: `F(0) = 0`, `F` nondecreasing and reaching 1, `f`
    /// nonincreasing, `F' = f` (relative 1e-6) and `f'` matching the numerical
    /// derivative of `f` (relative 1e-4).
    pub fn custom<F, P, D>(
        name: impl Into<String>,
        cdf: F,
        pdf: P,
        pdf_deriv: D,
        support_end: f64,
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        P: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(support_end > 0.0) {
            return Err(Error::Config(format!(
                "support end must be positive, got {support_end}"
            )));
        }
        let model = Self {
            name: name.into(),
            cdf: Arc::new(cdf),
            pdf: Arc::new(pdf),
            pdf_deriv: Arc::new(pdf_deriv),
            support_end,
            family: Family::Custom,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (self.cdf)(x)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        (self.pdf)(x)
    }

    pub fn pdf_deriv(&self, x: f64) -> f64 {
        (self.pdf_deriv)(x)
    }

    /// `α₁(F)`, possibly infinite.
    pub fn support_end(&self) -> f64 {
        self.support_end
    }

    /// Generalized inverse `F^#(p) = inf{x: F(x) >= p}`, by bisection except
    /// where a closed form exists.
    pub fn quantile(&self, p: f64) -> f64 {
        assert!((0.0..=1.0).contains(&p), "probability out of range: {p}");
        if self.family == Family::Exp1 {
            return -(-p).ln_1p();
        }
        if p == 0.0 {
            return 0.0;
        }
        let mut hi = if self.support_end.is_finite() {
            self.support_end
        } else {
            let mut hi = 1.0;
            while self.cdf(hi) < p && hi < 1e300 {
                hi *= 2.0;
            }
            hi
        };
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Right end of the grid used for numerical checks: `α₁` when finite,
    /// otherwise the `1 - 1e-6` quantile.
    pub fn effective_upper(&self) -> f64 {
        if self.support_end.is_finite() {
            self.support_end
        } else {
            self.quantile(1.0 - TAIL_TRUNCATION)
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            Family::Exp1 => rng.sample(Exp1),
            Family::HalfNormal => {
                let z: f64 = rng.sample(StandardNormal);
                z.abs()
            }
            Family::Custom => {
                // Uniform on (0, 1]; p = 0 would map to the origin.
                let u = 1.0 - rng.random::<f64>();
                self.quantile(u)
            }
        }
    }

    /// An i.i.d. sample of size `n`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Sample> {
        Sample::new((0..n).map(|_| self.draw(rng)).collect())
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Config(format!("model `{}`: {what}", self.name)));
        if self.cdf(0.0).abs() > 1e-12 {
            return bad(format!("F(0) = {} but must be 0", self.cdf(0.0)));
        }
        let upper = self.effective_upper();
        if self.support_end.is_finite() {
            if (self.cdf(upper) - 1.0).abs() > 1e-9 {
                return bad(format!("F(α₁) = {} but must be 1", self.cdf(upper)));
            }
        } else if self.cdf(upper) < 1.0 - 10.0 * TAIL_TRUNCATION {
            return bad("F does not tend to 1".into());
        }
        let grid: Vec<f64> = (1..=VALIDATION_GRID)
            .map(|i| upper * i as f64 / (VALIDATION_GRID + 1) as f64)
            .collect();
        for w in grid.windows(2) {
            if self.cdf(w[1]) < self.cdf(w[0]) - 1e-14 {
                return bad(format!("F decreases between {} and {}", w[0], w[1]));
            }
            if self.pdf(w[1]) > self.pdf(w[0]) + 1e-14 {
                return bad(format!("f increases between {} and {}", w[0], w[1]));
            }
        }
        let step = 1e-5 * upper;
        for &x in &grid {
            let fd = (self.cdf(x + step) - self.cdf(x - step)) / (2.0 * step);
            let f = self.pdf(x);
            if (fd - f).abs() > 1e-6 * f.abs() + 1e-9 {
                return bad(format!("F' = {fd} but f = {f} at x = {x}"));
            }
            let fd = (self.pdf(x + step) - self.pdf(x - step)) / (2.0 * step);
            let d = self.pdf_deriv(x);
            if (fd - d).abs() > 1e-4 * d.abs() + 1e-7 {
                return bad(format!(
                    "f' = {d} but numerical derivative is {fd} at x = {x}"
                ));
            }
        }
        Ok(())
    }
}

/// Look up a built-in model by name (`exp1` or `half_normal`).
pub fn builtin_model(name: &str) -> Result<TrueModel> {
    match name {
        "exp1" => Ok(TrueModel::exp1()),
        "half_normal" => Ok(TrueModel::half_normal()),
        other => Err(Error::Config(format!(
            "unknown model `{other}` (expected exp1 or half_normal)"
        ))),
    }
}

/// Scale `2|f(t0) f'(t0) / 2|^{1/3}` of the Chernoff limit of
/// `n^{1/3}(f̃_n(t0) - f(t0))`.
pub fn limit_scale(model: &TrueModel, t0: f64) -> Result<f64> {
    if !(t0 > 0.0 && t0 < model.support_end()) {
        return Err(Error::Domain(format!(
            "t0 = {t0} is not interior to (0, {})",
            model.support_end()
        )));
    }
    let f = model.pdf(t0);
    let fp = model.pdf_deriv(t0);
    if !(f > 0.0) {
        return Err(Error::DegenerateModel(format!(
            "f(t0) = {f} must be positive"
        )));
    }
    if !(fp < 0.0) {
        return Err(Error::DegenerateModel(format!(
            "f'(t0) = {fp} must be negative"
        )));
    }
    Ok(2.0 * (0.5 * f * fp).abs().cbrt())
}

/// Grid evaluation of the conditions on `F` under which bootstrapping
/// `m_n` out of `n` from the Grenander CDF is consistent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelConditionsReport {
    pub alpha1_finite: bool,
    /// `sup|f'| / inf f²`; infinite when `f` vanishes on the grid.
    pub gamma_f: f64,
    /// `inf |f'| / f²`.
    pub beta_f: f64,
    pub satisfied: bool,
}

pub fn check_conditions(model: &TrueModel) -> ModelConditionsReport {
    let alpha1_finite = model.support_end().is_finite();
    let upper = model.effective_upper();
    let mut sup_abs_deriv = 0.0_f64;
    let mut inf_pdf_sq = f64::INFINITY;
    let mut beta = f64::INFINITY;
    for i in 1..=CONDITION_GRID {
        let x = upper * i as f64 / (CONDITION_GRID + 1) as f64;
        let f = model.pdf(x);
        let d = model.pdf_deriv(x).abs();
        sup_abs_deriv = sup_abs_deriv.max(d);
        inf_pdf_sq = inf_pdf_sq.min(f * f);
        let ratio = if f > 0.0 { d / (f * f) } else { f64::INFINITY };
        beta = beta.min(ratio);
    }
    let gamma_f = if inf_pdf_sq > 0.0 {
        sup_abs_deriv / inf_pdf_sq
    } else {
        f64::INFINITY
    };
    ModelConditionsReport {
        alpha1_finite,
        gamma_f,
        beta_f: beta,
        satisfied: alpha1_finite && gamma_f.is_finite() && beta > 0.0,
    }
}
