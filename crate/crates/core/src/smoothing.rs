//! Log-scale kernel smoothing of the Grenander CDF.
//!
//! With `x = e^y`, the smoothed distribution function is the convolution of
//! `y ↦ F̃_n(e^y)` with a kernel scaled by the bandwidth `h`:
//!
//! ```text
//! F̌_n(x) = ∫ K(z) F̃_n(x e^{-hz}) dz
//! ```
//!
//! Smoothing on the log scale keeps the mass on `(0, ∞)` and preserves a
//! nonincreasing density. A draw from `F̌_n` is `X̃ e^{hZ}` with `X̃ ~ F̃_n` and
//! `Z ~ K`.
//!
//! Because `F̃_n` is piecewise linear, each hull segment contributes a term
//! `α Φ_K + β x ∫ K(z) e^{-hz} dz` over a `z`-interval, so [`SmoothedCdf`]
//! evaluates the CDF, the density and its derivative exactly from two kernel
//! primitives ([`Kernel::cdf`] and [`Kernel::tilted_mass`]). The fixed-node
//! quadrature forms (`quadrature_*`) integrate the same quantities against
//! `K`, `K'` and `K''` and serve as an independent route.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::lcm::PiecewiseLinearCdf;
use crate::model::TrueModel;
use crate::stats::{normal_cdf, normal_mass, normal_pdf, simpson, simpson_rule};

/// Number of nodes of the fixed quadrature rule over `[-z_max, z_max]`.
pub const QUADRATURE_NODES: usize = 201;

/// A twice differentiable symmetric probability density with exponential
/// moments of its first two derivatives.
pub trait Kernel: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn density(&self, z: f64) -> f64;
    fn deriv1(&self, z: f64) -> f64;
    fn deriv2(&self, z: f64) -> f64;
    /// An exponent `η > 0` with `∫ (K + |K'| + |K''|) e^{η|z|} dz < ∞`.
    fn eta(&self) -> f64;
    /// Half-width beyond which the kernel carries less than `1e-12` mass.
    fn tail_cutoff(&self) -> f64;
    fn draw(&self, rng: &mut dyn RngCore) -> f64;

    /// `∫_{-∞}^z K`.
    fn cdf(&self, z: f64) -> f64 {
        let c = self.tail_cutoff();
        if z <= -c {
            0.0
        } else if z >= c {
            1.0
        } else {
            simpson(|t| self.density(t), -c, z, 2000)
        }
    }

    /// `∫_a^b K(z) e^{-hz} dz`.
    fn tilted_mass(&self, a: f64, b: f64, h: f64) -> f64 {
        let c = self.tail_cutoff();
        let (lo, hi) = (a.max(-c), b.min(c));
        if lo >= hi {
            return 0.0;
        }
        simpson(|t| self.density(t) * (-h * t).exp(), lo, hi, 2000)
    }
}

/// Standard normal kernel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GaussianKernel;

impl Kernel for GaussianKernel {
    fn name(&self) -> &str {
        "gaussian"
    }

    fn density(&self, z: f64) -> f64 {
        normal_pdf(z)
    }

    fn deriv1(&self, z: f64) -> f64 {
        -z * normal_pdf(z)
    }

    fn deriv2(&self, z: f64) -> f64 {
        (z * z - 1.0) * normal_pdf(z)
    }

    fn eta(&self) -> f64 {
        // Any positive exponent works for the normal.
        1.0
    }

    fn tail_cutoff(&self) -> f64 {
        8.0
    }

    fn draw(&self, rng: &mut dyn RngCore) -> f64 {
        rng.sample(StandardNormal)
    }

    fn cdf(&self, z: f64) -> f64 {
        normal_cdf(z)
    }

    fn tilted_mass(&self, a: f64, b: f64, h: f64) -> f64 {
        // Completing the square: φ(z) e^{-hz} = e^{h²/2} φ(z + h).
        (0.5 * h * h).exp() * normal_mass(a + h, b + h)
    }
}

/// Kernel by name; only `gaussian` is provided.
pub fn kernel_by_name(name: &str) -> Result<Arc<dyn Kernel>> {
    match name {
        "gaussian" => Ok(Arc::new(GaussianKernel)),
        other => Err(Error::Config(format!(
            "unknown kernel `{other}` (expected gaussian)"
        ))),
    }
}

/// Bandwidth `h_n = c · n^{-exponent}` with `0 < exponent < 1/4`, so that
/// `h_n → 0` while `h_n² √(n / log log n) → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthRule {
    constant: f64,
    exponent: f64,
}

impl Default for BandwidthRule {
    fn default() -> Self {
        Self {
            constant: 0.5,
            exponent: 1.0 / 6.0,
        }
    }
}

impl BandwidthRule {
    pub fn new(constant: f64, exponent: f64) -> Result<Self> {
        if !(constant > 0.0 && constant.is_finite()) {
            return Err(Error::Config(format!(
                "bandwidth constant must be positive, got {constant}"
            )));
        }
        if !(exponent > 0.0 && exponent < 0.25) {
            return Err(Error::Config(format!(
                "bandwidth exponent must lie in (0, 1/4), got {exponent}"
            )));
        }
        Ok(Self { constant, exponent })
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn bandwidth(&self, n: usize) -> Result<f64> {
        if n < 2 {
            return domain(format!("bandwidth needs n >= 2, got {n}"));
        }
        Ok(self.constant * (n as f64).powf(-self.exponent))
    }
}

/// `∫ K(z) G(x e^{-hz}) dz` by the fixed Simpson rule on
/// `[-z_max, z_max]`, normalised by the rule's kernel mass.
pub fn log_smooth<G: Fn(f64) -> f64>(kernel: &dyn Kernel, h: f64, x: f64, g: G) -> f64 {
    let c = kernel.tail_cutoff();
    let (mut num, mut den) = (0.0, 0.0);
    for (z, w) in simpson_rule(-c, c, QUADRATURE_NODES) {
        let k = w * kernel.density(z);
        num += k * g(x * (-h * z).exp());
        den += k;
    }
    num / den
}

/// Log-scale smoothing of a Grenander CDF.
#[derive(Debug, Clone)]
pub struct SmoothedCdf {
    base: PiecewiseLinearCdf,
    kernel: Arc<dyn Kernel>,
    h: f64,
}

impl SmoothedCdf {
    /// `h = 0` is allowed and reproduces the base distribution.
    pub fn new(base: PiecewiseLinearCdf, kernel: Arc<dyn Kernel>, h: f64) -> Result<Self> {
        if !(h >= 0.0 && h.is_finite()) {
            return domain(format!("bandwidth must be nonnegative, got {h}"));
        }
        Ok(Self { base, kernel, h })
    }

    pub fn base(&self) -> &PiecewiseLinearCdf {
        &self.base
    }

    pub fn kernel(&self) -> &Arc<dyn Kernel> {
        &self.kernel
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    fn check_x(x: f64) -> Result<()> {
        if !(x > 0.0 && x.is_finite()) {
            return domain(format!("smoothed CDF is evaluated on (0, ∞), got {x}"));
        }
        Ok(())
    }

    /// Boundaries `z_k = ln(x / x_k) / h` of the hull segments in kernel
    /// coordinates; `z_0 = +∞` for the knot at the origin.
    fn edges(&self, x: f64) -> Vec<f64> {
        let lx = x.ln();
        self.base
            .knots_x()
            .iter()
            .map(|&xk| {
                if xk == 0.0 {
                    f64::INFINITY
                } else {
                    (lx - xk.ln()) / self.h
                }
            })
            .collect()
    }

    /// `F̌_n(x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        if self.h == 0.0 {
            return Ok(self.base.eval(x));
        }
        let k = &*self.kernel;
        let xs = self.base.knots_x();
        let ys = self.base.knots_y();
        let slopes = self.base.hull().slopes();
        let edges = self.edges(x);
        let phi: Vec<f64> = edges.iter().map(|&z| k.cdf(z)).collect();
        let last = edges.len() - 1;
        let mut total = phi[last];
        for (s, &slope) in slopes.iter().enumerate() {
            let (a, b) = (edges[s + 1], edges[s]);
            let intercept = ys[s] - slope * xs[s];
            total += intercept * (phi[s] - phi[s + 1]) + slope * x * k.tilted_mass(a, b, self.h);
        }
        Ok(total.clamp(0.0, 1.0))
    }

    /// `f̌_n(x) = Σ_k s_k ∫_{segment k} K(z) e^{-hz} dz`.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        if self.h == 0.0 {
            return Ok(self.base.density().eval(x));
        }
        let edges = self.edges(x);
        Ok(self
            .base
            .hull()
            .slopes()
            .iter()
            .enumerate()
            .map(|(s, &slope)| slope * self.kernel.tilted_mass(edges[s + 1], edges[s], self.h))
            .sum())
    }

    /// `f̌_n'(x)`, the derivative of [`SmoothedCdf::pdf`].
    pub fn pdf_deriv(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        if self.h == 0.0 {
            return Ok(0.0);
        }
        let k = &*self.kernel;
        let xs = self.base.knots_x();
        let edges = self.edges(x);
        let kd = |z: f64| if z.is_finite() { k.density(z) } else { 0.0 };
        let acc: f64 = self
            .base
            .hull()
            .slopes()
            .iter()
            .enumerate()
            .map(|(s, &slope)| slope * (kd(edges[s]) * xs[s] - kd(edges[s + 1]) * xs[s + 1]))
            .sum();
        Ok(acc / (self.h * x * x))
    }

    /// `F̌_n(x)` by the fixed Simpson rule.
    pub fn quadrature_cdf(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        Ok(log_smooth(&*self.kernel, self.h, x, |u| self.base.eval(u)))
    }

    fn kernel_moment<D: Fn(f64) -> f64>(&self, x: f64, deriv: D) -> f64 {
        let c = self.kernel.tail_cutoff();
        simpson_rule(-c, c, QUADRATURE_NODES)
            .into_iter()
            .map(|(z, w)| w * deriv(z) * self.base.eval(x * (-self.h * z).exp()))
            .sum()
    }

    /// `f̌_n(x) = (hx)^{-1} ∫ K'(z) F̃_n(x e^{-hz}) dz` by the fixed rule.
    pub fn quadrature_pdf(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        if self.h == 0.0 {
            return domain("quadrature density needs a positive bandwidth");
        }
        let m1 = self.kernel_moment(x, |z| self.kernel.deriv1(z));
        Ok(m1 / (self.h * x))
    }

    /// `f̌_n'(x) = (hx²)^{-1} [h^{-1} ∫ K'' F̃_n - ∫ K' F̃_n]` by the fixed rule.
    pub fn quadrature_pdf_deriv(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        if self.h == 0.0 {
            return domain("quadrature density derivative needs a positive bandwidth");
        }
        let m1 = self.kernel_moment(x, |z| self.kernel.deriv1(z));
        let m2 = self.kernel_moment(x, |z| self.kernel.deriv2(z));
        Ok((m2 / self.h - m1) / (self.h * x * x))
    }

    /// One draw `X̃ e^{hZ}`.
    pub fn draw(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        let base = self.base.invert(u).expect("uniform draw lies in [0, 1]");
        if self.h == 0.0 {
            base
        } else {
            base * (self.h * self.kernel.draw(rng)).exp()
        }
    }
}

/// The population counterpart `F̄_h` of [`SmoothedCdf`], with the true `F`
/// in place of `F̃_n`; used to separate smoothing bias from sampling error.
#[derive(Debug, Clone)]
pub struct PopulationSmoother {
    model: TrueModel,
    kernel: Arc<dyn Kernel>,
    h: f64,
}

pub fn population_smoother(
    model: &TrueModel,
    kernel: Arc<dyn Kernel>,
    h: f64,
) -> Result<PopulationSmoother> {
    if !(h > 0.0 && h.is_finite()) {
        return domain(format!("bandwidth must be positive, got {h}"));
    }
    Ok(PopulationSmoother {
        model: model.clone(),
        kernel,
        h,
    })
}

impl PopulationSmoother {
    pub fn cdf(&self, x: f64) -> Result<f64> {
        SmoothedCdf::check_x(x)?;
        Ok(log_smooth(&*self.kernel, self.h, x, |u| self.model.cdf(u)))
    }

    /// `f̄_h(x) = ∫ K(z) f(x e^{-hz}) e^{-hz} dz`.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        SmoothedCdf::check_x(x)?;
        let h = self.h;
        let c = self.kernel.tail_cutoff();
        Ok(simpson_rule(-c, c, QUADRATURE_NODES)
            .into_iter()
            .map(|(z, w)| {
                let e = (-h * z).exp();
                w * self.kernel.density(z) * self.model.pdf(x * e) * e
            })
            .sum())
    }

    /// `f̄_h'(x) = ∫ K(z) f'(x e^{-hz}) e^{-2hz} dz`.
    pub fn pdf_deriv(&self, x: f64) -> Result<f64> {
        SmoothedCdf::check_x(x)?;
        let h = self.h;
        let c = self.kernel.tail_cutoff();
        Ok(simpson_rule(-c, c, QUADRATURE_NODES)
            .into_iter()
            .map(|(z, w)| {
                let e = (-h * z).exp();
                w * self.kernel.density(z) * self.model.pdf_deriv(x * e) * e * e
            })
            .sum())
    }
}
