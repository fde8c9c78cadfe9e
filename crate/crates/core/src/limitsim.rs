//! Discretised two-sided Brownian motion, Chernoff's distribution and the
//! limit processes of the naive bootstrap.
//!
//! Paths live on the symmetric grid `{-kδ, …, 0, …, kδ}` with `k = round(c/δ)`.
//! A path's right half is generated first, then its left half, each by
//! cumulating Gaussian increments outward from zero.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::empirical::StepCdf;
use crate::error::{domain, Error, Result};
use crate::lcm::lcm_of_points;
use crate::rng::{RngStream, StreamRng};

pub const DEFAULT_HALF_WIDTH: f64 = 4.0;
pub const DEFAULT_STEP: f64 = 0.001;
/// Smallest half-width accepted for Chernoff draws.
pub const MIN_CHERNOFF_HALF_WIDTH: f64 = 2.5;

/// Values of a process on a symmetric arithmetic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessPath {
    k: usize,
    delta: f64,
    values: Vec<f64>,
}

impl ProcessPath {
    /// Grid with `k = round(c/δ)` steps on each side.
    pub fn grid_size(c: f64, delta: f64) -> Result<usize> {
        if !(c > 0.0 && delta > 0.0 && delta < c && c.is_finite()) {
            return domain(format!("need 0 < delta < c, got c = {c}, delta = {delta}"));
        }
        Ok((c / delta).round() as usize)
    }

    /// Wraps values already laid out on the grid of half-size `k`.
    pub fn from_values(k: usize, delta: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != 2 * k + 1 || k == 0 || !(delta > 0.0) {
            return domain(format!(
                "{} values do not fit a grid with k = {k}",
                values.len()
            ));
        }
        Ok(Self { k, delta, values })
    }

    /// Half the number of steps.
    pub fn half_len(&self) -> usize {
        self.k
    }

    pub fn step(&self) -> f64 {
        self.delta
    }

    pub fn half_width(&self) -> f64 {
        self.k as f64 * self.delta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the grid point 0.
    pub fn center_index(&self) -> usize {
        self.k
    }

    pub fn abscissa(&self, i: usize) -> f64 {
        (i as f64 - self.k as f64) * self.delta
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.abscissa(i)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `s = jδ`.
    pub fn at(&self, j: isize) -> f64 {
        self.values[(self.k as isize + j) as usize]
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.abscissa(i), v))
            .collect()
    }

    /// Every `factor`-th grid point; `factor` must divide `k`.
    pub fn decimate(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.k.is_multiple_of(factor) {
            return domain(format!("factor {factor} does not divide k = {}", self.k));
        }
        Ok(Self {
            k: self.k / factor,
            delta: self.delta * factor as f64,
            values: self.values.iter().step_by(factor).copied().collect(),
        })
    }

    /// The path on `[-c, c]` for `c` at most the current half-width.
    pub fn restrict(&self, c: f64) -> Result<Self> {
        let k = (c / self.delta).round() as usize;
        if k == 0 || k > self.k {
            return domain(format!(
                "cannot restrict half-width {} to {c}",
                self.half_width()
            ));
        }
        Ok(Self {
            k,
            delta: self.delta,
            values: self.values[self.k - k..=self.k + k].to_vec(),
        })
    }

    /// Pointwise `self + other` on a common grid.
    pub fn add(&self, other: &ProcessPath) -> Result<Self> {
        if self.k != other.k || self.delta != other.delta {
            return domain("paths live on different grids");
        }
        Ok(Self {
            k: self.k,
            delta: self.delta,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Left derivative at 0 of the concave majorant of the path.
    pub fn majorant_slope_at_zero(&self) -> Result<f64> {
        check_nondegenerate(self)?;
        lcm_of_points(&self.points())?.left_slope_at(0.0)
    }
}

fn check_nondegenerate(path: &ProcessPath) -> Result<()> {
    let first = path.values[0];
    if path.values.iter().all(|&v| v == first) {
        return Err(Error::DegeneratePath("all path values are equal".into()));
    }
    Ok(())
}

/// Two-sided Brownian motion `W(f s)` on `[-c, c]` with step `δ`.
pub fn brownian_path(f_t0: f64, c: f64, delta: f64, rng: &mut StreamRng) -> Result<ProcessPath> {
    if !(f_t0 > 0.0 && f_t0.is_finite()) {
        return domain(format!("variance rate must be positive, got {f_t0}"));
    }
    let k = ProcessPath::grid_size(c, delta)?;
    let sd = (f_t0 * delta).sqrt();
    let mut values = vec![0.0; 2 * k + 1];
    let mut w = 0.0;
    for v in &mut values[k + 1..] {
        w += sd * rng.sample::<f64, _>(StandardNormal);
        *v = w;
    }
    w = 0.0;
    for v in values[..k].iter_mut().rev() {
        w += sd * rng.sample::<f64, _>(StandardNormal);
        *v = w;
    }
    Ok(ProcessPath { k, delta, values })
}

/// Running argmax over candidates visited in a fixed order; a later
/// candidate replaces the current one only when strictly larger, or when
/// equal and closer to zero.
#[derive(Debug, Clone, Copy)]
struct Argmax {
    value: f64,
    at: f64,
}

impl Argmax {
    fn offer(&mut self, value: f64, at: f64) {
        if value > self.value || (value == self.value && at.abs() < self.at.abs()) {
            self.value = value;
            self.at = at;
        }
    }
}

/// `argmax_s [path(s) - s²]` over the grid, ties toward the smallest `|s|`.
pub fn argmax_drifted(path: &ProcessPath) -> f64 {
    let mut best = Argmax {
        value: f64::NEG_INFINITY,
        at: 0.0,
    };
    for (i, &v) in path.values.iter().enumerate() {
        let s = path.abscissa(i);
        best.offer(v - s * s, s);
    }
    best.at
}

/// One draw of `argmax_s [W(s) - s²]` on `[-c, c]` with step `δ`. Consumes the
/// generator exactly as [`brownian_path`] with unit rate does.
pub fn chernoff_draw(c: f64, delta: f64, rng: &mut StreamRng) -> Result<f64> {
    if !(c >= MIN_CHERNOFF_HALF_WIDTH) {
        return domain(format!(
            "half-width must be at least {MIN_CHERNOFF_HALF_WIDTH}, got {c}"
        ));
    }
    let k = ProcessPath::grid_size(c, delta)?;
    let sd = delta.sqrt();
    let mut best = Argmax {
        value: 0.0,
        at: 0.0,
    };
    for sign in [1.0, -1.0] {
        let mut w = 0.0;
        for j in 1..=k {
            w += sd * rng.sample::<f64, _>(StandardNormal);
            let s = sign * ((j as f64) * delta);
            best.offer(w - s * s, s);
        }
    }
    Ok(best.at)
}

/// `draws` Chernoff variates, draw `i` using `RngStream::new(seed, i)`.
pub fn chernoff_draws(draws: usize, c: f64, delta: f64, seed: u64) -> Result<Vec<f64>> {
    (0..draws)
        .into_par_iter()
        .map(|i| chernoff_draw(c, delta, &mut RngStream::new(seed, i as u64).rng()))
        .collect()
}

/// Slopes at zero of the majorants of `Z` and `Z₂⁰`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitDraw {
    pub slope_z: f64,
    pub slope_z20: f64,
}

/// One draw of the pair of limit slopes for density value `f(t0)` and
/// derivative `f'(t0) < 0`. `W₁` is generated before `W₂`.
pub fn limit_pair_draw(
    f_t0: f64,
    fprime_t0: f64,
    c: f64,
    delta: f64,
    rng: &mut StreamRng,
) -> Result<LimitDraw> {
    if !(fprime_t0 < 0.0) {
        return domain(format!("f'(t0) must be negative, got {fprime_t0}"));
    }
    let w1 = brownian_path(f_t0, c, delta, rng)?;
    let mut z20 = brownian_path(f_t0, c, delta, rng)?;
    for i in 0..z20.len() {
        let h = z20.abscissa(i);
        z20.values[i] += 0.5 * fprime_t0 * h * h;
    }
    check_nondegenerate(&z20)?;
    let hull = lcm_of_points(&z20.points())?;
    let slope_z20 = hull.left_slope_at(0.0)?;
    let grid = z20.grid();
    let at_zero = hull.eval(0.0);
    let z2: Vec<f64> = hull
        .eval_sorted(&grid)
        .into_iter()
        .zip(&grid)
        .map(|(l, &h)| l - at_zero - slope_z20 * h)
        .collect();
    let z = ProcessPath {
        k: w1.k,
        delta,
        values: w1.values.iter().zip(&z2).map(|(a, b)| a + b).collect(),
    };
    Ok(LimitDraw {
        slope_z: z.majorant_slope_at_zero()?,
        slope_z20,
    })
}

/// `draws` limit pairs, draw `i` using `RngStream::new(seed, i)`.
pub fn limit_pair_draws(
    f_t0: f64,
    fprime_t0: f64,
    c: f64,
    delta: f64,
    draws: usize,
    seed: u64,
) -> Result<Vec<LimitDraw>> {
    (0..draws)
        .into_par_iter()
        .map(|i| {
            limit_pair_draw(
                f_t0,
                fprime_t0,
                c,
                delta,
                &mut RngStream::new(seed, i as u64).rng(),
            )
        })
        .collect()
}

/// `Z_n(h) = m^{2/3} {F(t0 + m^{-1/3} h) - F(t0) - f_n m^{-1/3} h}` on the grid
/// `[-a, a]` with step `δ`, for any distribution function `F`.
pub fn finite_n_z_process<F: Fn(f64) -> f64>(
    cdf: F,
    t0: f64,
    f_n: f64,
    m: usize,
    a: f64,
    delta: f64,
) -> Result<ProcessPath> {
    if m == 0 {
        return domain("m must be positive");
    }
    let k = ProcessPath::grid_size(a, delta)?;
    let scale = (m as f64).cbrt().recip();
    let half = k as f64 * delta;
    if !(t0 - half * scale >= 0.0) {
        return domain(format!(
            "window [-{half}, {half}] reaches below zero at t0 = {t0}, m = {m}"
        ));
    }
    let base = cdf(t0);
    let outer = scale.recip() * scale.recip();
    let values = (0..=2 * k)
        .map(|i| {
            let h = (i as f64 - k as f64) * delta;
            if i == k {
                0.0
            } else {
                outer * (cdf(t0 + scale * h) - base - f_n * scale * h)
            }
        })
        .collect();
    Ok(ProcessPath { k, delta, values })
}

/// The step process `Z_n` of an EDF at its corners: `(0, 0)` and every jump,
/// mapped to `h = m^{1/3}(x - t0)`. Its majorant is the image of the
/// Grenander majorant.
pub fn z_process_points(edf: &StepCdf, t0: f64, f_n: f64, m: usize) -> Vec<(f64, f64)> {
    let r = (m as f64).cbrt();
    let base = edf.eval(t0);
    let map = |x: f64, y: f64| {
        let h = r * (x - t0);
        (h, r * r * (y - base) - r * f_n * h)
    };
    let mut pts = Vec::with_capacity(edf.jump_points().len() + 1);
    if edf.jump_points()[0] > 0.0 {
        pts.push(map(0.0, 0.0));
    }
    pts.extend(
        edf.jump_points()
            .iter()
            .zip(edf.cum_probs())
            .map(|(&x, &y)| map(x, y)),
    );
    pts
}

/// Left slope at 0 of the majorant of `Z_n`, i.e. `m^{1/3}(f̃_m(t0) - f_n)`.
pub fn z_process_slope_at_zero(edf: &StepCdf, t0: f64, f_n: f64, m: usize) -> Result<f64> {
    let pts = z_process_points(edf, t0, f_n, m);
    lcm_of_points(&pts)?.left_slope_at(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::{edf, Sample};
    use crate::lcm::grenander;
    use crate::model::TrueModel;
    use crate::stats::{correlation, kolmogorov_critical, ks_two_sample, mean, variance};

    fn rng(seed: u64) -> StreamRng {
        RngStream::new(seed, 0).rng()
    }

    #[test]
    fn grid_layout() {
        let p = brownian_path(1.0, 1.0, 0.1, &mut rng(1)).unwrap();
        assert_eq!(p.len(), 21);
        assert_eq!(p.at(0), 0.0);
        let g = p.grid();
        assert_eq!(g[0], -1.0);
        assert_eq!(g[20], 1.0);
        assert!(g.iter().zip(g.iter().rev()).all(|(a, b)| a == &-b));
        assert!(brownian_path(0.0, 1.0, 0.1, &mut rng(1)).is_err());
        assert!(brownian_path(1.0, 1.0, 2.0, &mut rng(1)).is_err());
    }

    #[test]
    fn brownian_variance_and_independent_increments() {
        let f = 2.0;
        let n = 10_000;
        let paths: Vec<ProcessPath> = (0..n)
            .map(|i| brownian_path(f, 2.0, 0.05, &mut RngStream::new(3, i).rng()).unwrap())
            .collect();
        let se = f * (2.0 / (n as f64 - 1.0)).sqrt();
        for j in [-20isize, 20] {
            let v: Vec<f64> = paths.iter().map(|p| p.at(j)).collect();
            assert!((variance(&v) - f).abs() < 5.0 * se, "{}", variance(&v));
        }
        let first: Vec<f64> = paths.iter().map(|p| p.at(20)).collect();
        let second: Vec<f64> = paths.iter().map(|p| p.at(40) - p.at(20)).collect();
        let left: Vec<f64> = paths.iter().map(|p| p.at(-20)).collect();
        assert!(correlation(&first, &second).abs() < 5.0 / (n as f64).sqrt());
        assert!(correlation(&first, &left).abs() < 5.0 / (n as f64).sqrt());
    }

    #[test]
    fn streaming_draw_matches_path_argmax() {
        for seed in 0..20 {
            let path = brownian_path(1.0, 3.0, 0.01, &mut rng(seed)).unwrap();
            let draw = chernoff_draw(3.0, 0.01, &mut rng(seed)).unwrap();
            assert_eq!(argmax_drifted(&path), draw);
        }
        assert!(chernoff_draw(2.0, 0.01, &mut rng(0)).is_err());
    }

    #[test]
    fn argmax_ties_go_to_smallest_abs() {
        let p = ProcessPath::from_values(2, 1.0, vec![4.0, 1.0, 0.0, 1.0, 4.0]).unwrap();
        assert_eq!(argmax_drifted(&p), 0.0);
        let p = ProcessPath::from_values(2, 1.0, vec![4.0, 2.0, 0.0, 2.0, 4.0]).unwrap();
        assert_eq!(argmax_drifted(&p).abs(), 1.0);
    }

    #[test]
    fn decimate_and_restrict() {
        let p = brownian_path(1.0, 1.0, 0.1, &mut rng(5)).unwrap();
        let d = p.decimate(2).unwrap();
        assert_eq!(d.len(), 11);
        assert_eq!(d.at(1), p.at(2));
        assert_eq!(d.at(-5), p.at(-10));
        let r = p.restrict(0.5).unwrap();
        assert_eq!(r.len(), 11);
        assert_eq!(r.at(-5), p.at(-5));
        assert!(p.decimate(3).is_err());
        assert!(p.restrict(2.0).is_err());
    }

    #[test]
    fn chernoff_is_symmetric() {
        let d = chernoff_draws(20_000, 3.0, 0.005, 6).unwrap();
        let sd = variance(&d).sqrt();
        assert!(mean(&d).abs() < 5.0 * sd / (d.len() as f64).sqrt());
    }

    #[test]
    fn limit_pair_rejects_increasing_density() {
        assert!(limit_pair_draw(1.0, 0.0, 3.0, 0.01, &mut rng(0)).is_err());
        assert!(limit_pair_draw(1.0, 0.5, 3.0, 0.01, &mut rng(0)).is_err());
    }

    #[test]
    fn degenerate_path_is_an_error() {
        let p = ProcessPath::from_values(1, 1.0, vec![0.0; 3]).unwrap();
        assert!(matches!(
            p.majorant_slope_at_zero(),
            Err(Error::DegeneratePath(_))
        ));
    }

    #[test]
    fn slope_of_z20_has_scaled_chernoff_law() {
        let (f, fp) = (1.0, -2.0);
        let pairs = limit_pair_draws(f, fp, 4.0, 0.002, 10_000, 7).unwrap();
        let scale = 2.0 * (0.5 * f * fp).abs().cbrt();
        let slopes: Vec<f64> = pairs.iter().map(|d| d.slope_z20 / scale).collect();
        let chern = chernoff_draws(10_000, 4.0, 0.002, 8).unwrap();
        let d = ks_two_sample(&slopes, &chern);
        let crit = kolmogorov_critical(0.01) * (2.0 / 10_000.0_f64).sqrt();
        assert!(d < crit, "KS {d} vs {crit}");
        assert!(pairs
            .iter()
            .all(|p| p.slope_z.is_finite() && p.slope_z20.is_finite()));
    }

    #[test]
    fn z_process_is_zero_at_zero_and_checks_the_window() {
        let m = TrueModel::exp1();
        let p = finite_n_z_process(|x| m.cdf(x), 1.0, m.pdf(1.0), 1000, 2.0, 0.1).unwrap();
        assert_eq!(p.at(0), 0.0);
        assert!(finite_n_z_process(|x| m.cdf(x), 1.0, 1.0, 8, 3.0, 0.1).is_err());
        assert!(finite_n_z_process(|x| m.cdf(x), 1.0, 1.0, 0, 3.0, 0.1).is_err());
    }

    #[test]
    fn z_process_of_true_cdf_approaches_the_parabola() {
        let model = TrueModel::exp1();
        let (t0, mm) = (1.0, 1_000_000);
        let p = finite_n_z_process(|x| model.cdf(x), t0, model.pdf(t0), mm, 2.0, 0.01).unwrap();
        let fp = model.pdf_deriv(t0);
        let err = (0..p.len())
            .map(|i| {
                let h = p.abscissa(i);
                (p.values()[i] - 0.5 * fp * h * h).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < (mm as f64).cbrt().recip(), "{err}");
    }

    #[test]
    fn majorant_slope_identity() {
        let model = TrueModel::exp1();
        for seed in 0..50u64 {
            let n = 20 + 40 * seed as usize;
            let sample: Sample = model.sample(n, &mut rng(seed)).unwrap();
            let t0 = 0.7;
            if t0 >= sample.max() {
                continue;
            }
            let f_n = model.pdf(t0);
            let direct = (n as f64).cbrt() * (grenander(&sample).unwrap().1.eval(t0) - f_n);
            let via_z = z_process_slope_at_zero(&edf(&sample), t0, f_n, n).unwrap();
            assert!((direct - via_z).abs() < 1e-9, "{direct} vs {via_z}");
        }
    }
}
