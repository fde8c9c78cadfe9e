//! Least concave majorants and the Grenander estimator.
//!
//! The majorant of a finite point set is its upper concave hull, built by a
//! single stack-based pass over points sorted by abscissa (Andrew's monotone
//! chain restricted to the upper chain). The Grenander estimator of a
//! nonincreasing density is the left derivative of the majorant of the
//! empirical distribution function, which only needs the origin and the EDF
//! values at the jump points.
//!
//! All slopes follow the left-derivative convention: at a hull vertex the
//! reported slope is that of the segment on its left.

use crate::empirical::{edf, Sample};
use crate::error::{domain, Result};

/// Relative tolerance under which adjacent chord slopes count as equal.
pub const COLLINEAR_RTOL: f64 = 1e-12;

/// Upper concave hull of a point set: vertices with strictly decreasing
/// chord slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcaveHull {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

#[inline]
fn slope(x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    (y1 - y0) / (x1 - x0)
}

/// True when the middle point is not strictly above the chord, i.e. the
/// chain through it fails to be strictly concave.
#[inline]
fn middle_is_redundant(s_left: f64, s_right: f64) -> bool {
    s_left <= s_right + COLLINEAR_RTOL * s_left.abs().max(s_right.abs())
}

/// Stack-based upper hull of points with strictly increasing abscissae,
/// writing vertex coordinates into `hx`/`hy`.
fn upper_hull_into<I>(points: I, hx: &mut Vec<f64>, hy: &mut Vec<f64>)
where
    I: IntoIterator<Item = (f64, f64)>,
{
    hx.clear();
    hy.clear();
    for (x, y) in points {
        while hx.len() >= 2 {
            let k = hx.len();
            let s_left = slope(hx[k - 2], hy[k - 2], hx[k - 1], hy[k - 1]);
            let s_right = slope(hx[k - 1], hy[k - 1], x, y);
            if middle_is_redundant(s_left, s_right) {
                hx.pop();
                hy.pop();
            } else {
                break;
            }
        }
        hx.push(x);
        hy.push(y);
    }
}

impl ConcaveHull {
    fn from_vertices(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let slopes = xs
            .windows(2)
            .zip(ys.windows(2))
            .map(|(x, y)| slope(x[0], y[0], x[1], y[1]))
            .collect();
        Self { xs, ys, slopes }
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Slope of segment `i`, joining vertices `i` and `i + 1`.
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn vertices(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Linear interpolant of the vertices; outside the x-range the end
    /// segments are extended.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.xs.partition_point(|&v| v < x);
        let seg = k.clamp(1, self.xs.len() - 1) - 1;
        self.ys[seg] + self.slopes[seg] * (x - self.xs[seg])
    }

    /// Evaluates at nondecreasing abscissae in one merged pass.
    pub fn eval_sorted(&self, xs: &[f64]) -> Vec<f64> {
        let mut seg = 0;
        let last = self.slopes.len() - 1;
        xs.iter()
            .map(|&x| {
                while seg < last && self.xs[seg + 1] < x {
                    seg += 1;
                }
                self.ys[seg] + self.slopes[seg] * (x - self.xs[seg])
            })
            .collect()
    }

    /// Slope of the segment whose half-open interval `(x_{k-1}, x_k]`
    /// contains `x`.
    pub fn left_slope_at(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.x_range();
        if !(x > lo && x <= hi) {
            return domain(format!("left slope requested at {x}, outside ({lo}, {hi}]"));
        }
        let k = self.xs.partition_point(|&v| v < x);
        Ok(self.slopes[k - 1])
    }
}

fn check_points(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < 2 {
        return domain(format!("need at least 2 points, got {}", points.len()));
    }
    if let Some(p) = points
        .iter()
        .find(|(x, y)| !(x.is_finite() && y.is_finite()))
    {
        return domain(format!("non-finite point {p:?}"));
    }
    if let Some(w) = points.windows(2).find(|w| !(w[0].0 < w[1].0)) {
        return domain(format!(
            "abscissae must be strictly increasing, got {} then {}",
            w[0].0, w[1].0
        ));
    }
    Ok(())
}

/// Least concave majorant of a point set with strictly increasing
/// abscissae. Hull vertices are a subset of the input; collinear vertices
/// are merged.
pub fn lcm_of_points(points: &[(f64, f64)]) -> Result<ConcaveHull> {
    check_points(points)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    upper_hull_into(points.iter().copied(), &mut xs, &mut ys);
    Ok(ConcaveHull::from_vertices(xs, ys))
}

/// Majorant of the points whose abscissa lies in `[a, b]`.
pub fn restricted_lcm(points: &[(f64, f64)], a: f64, b: f64) -> Result<ConcaveHull> {
    if !(a <= b) {
        return domain(format!("empty window [{a}, {b}]"));
    }
    let inside: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, _)| x >= a && x <= b)
        .collect();
    if inside.len() < 2 {
        return domain(format!(
            "window [{a}, {b}] contains {} point(s), need at least 2",
            inside.len()
        ));
    }
    lcm_of_points(&inside)
}

/// Concave piecewise-linear distribution function starting at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearCdf {
    hull: ConcaveHull,
}

impl PiecewiseLinearCdf {
    pub fn knots_x(&self) -> &[f64] {
        self.hull.xs()
    }

    pub fn knots_y(&self) -> &[f64] {
        self.hull.ys()
    }

    pub fn hull(&self) -> &ConcaveHull {
        &self.hull
    }

    /// Right end of the support.
    pub fn support_end(&self) -> f64 {
        self.hull.x_range().1
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= self.support_end() {
            1.0
        } else {
            self.hull.eval(x)
        }
    }

    /// Quantile function; the distribution is a mixture of uniforms on the
    /// hull segments.
    pub fn invert(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return domain(format!("probability {u} outside [0, 1]"));
        }
        Ok(self.invert_unchecked(u))
    }

    fn invert_unchecked(&self, u: f64) -> f64 {
        let ys = self.hull.ys();
        let k = ys.partition_point(|&y| y < u).clamp(1, ys.len() - 1);
        self.hull.xs()[k - 1] + (u - ys[k - 1]) / self.hull.slopes()[k - 1]
    }

    /// Inverts nondecreasing probabilities in one merged pass.
    pub(crate) fn invert_sorted_into(&self, us: &[f64], out: &mut Vec<f64>) {
        let xs = self.hull.xs();
        let ys = self.hull.ys();
        let slopes = self.hull.slopes();
        let last = slopes.len() - 1;
        let mut seg = 0;
        out.clear();
        out.extend(us.iter().map(|&u| {
            while seg < last && ys[seg + 1] < u {
                seg += 1;
            }
            xs[seg] + (u - ys[seg]) / slopes[seg]
        }));
    }

    /// Left derivative (the density).
    pub fn density(&self) -> StepDensity {
        StepDensity {
            breakpoints: self.hull.xs().to_vec(),
            heights: self.hull.slopes().to_vec(),
        }
    }

    /// `sup_x |F(x) - G(x)|` for `G` concave on `[0, ∞)` with `G(0) = 0` and
    /// `G <= 1`. On each segment `G - F` is concave, so its maximum is found by
    /// golden-section search; `F - G` peaks at the knots.
    pub fn sup_distance_concave<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let xs = self.hull.xs();
        let mut d = xs
            .iter()
            .map(|&x| (self.eval(x) - g(x)).abs())
            .fold(0.0_f64, f64::max);
        let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
        for w in xs.windows(2) {
            let gap = |x: f64| g(x) - self.eval(x);
            let (mut a, mut b) = (w[0], w[1]);
            let mut c = b - inv_phi * (b - a);
            let mut e = a + inv_phi * (b - a);
            let (mut gc, mut ge) = (gap(c), gap(e));
            for _ in 0..80 {
                if gc > ge {
                    b = e;
                    e = c;
                    ge = gc;
                    c = b - inv_phi * (b - a);
                    gc = gap(c);
                } else {
                    a = c;
                    c = e;
                    gc = ge;
                    e = a + inv_phi * (b - a);
                    ge = gap(e);
                }
            }
            d = d.max(gc.abs()).max(ge.abs());
        }
        d.max((1.0 - g(self.support_end())).abs())
    }
}

/// Nonincreasing step density; piece `i` is `(b_i, b_{i+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDensity {
    breakpoints: Vec<f64>,
    heights: Vec<f64>,
}

impl StepDensity {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    /// Left-continuous evaluation; at the left end the first height, beyond
    /// the last breakpoint zero.
    pub fn eval(&self, x: f64) -> f64 {
        let b = &self.breakpoints;
        if x < b[0] || x > b[b.len() - 1] {
            return 0.0;
        }
        let k = b.partition_point(|&v| v < x).max(1);
        self.heights[k - 1]
    }

    pub fn integral(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .zip(&self.heights)
            .map(|(w, h)| h * (w[1] - w[0]))
            .sum()
    }
}

/// Origin plus the EDF values at its jump points.
fn edf_points(sample: &Sample) -> Result<Vec<(f64, f64)>> {
    if sample.min() <= 0.0 {
        return domain(
            "the Grenander estimator is unbounded at the origin when a sample value is 0",
        );
    }
    let f = edf(sample);
    let mut points = Vec::with_capacity(f.jump_points().len() + 1);
    points.push((0.0, 0.0));
    points.extend(
        f.jump_points()
            .iter()
            .copied()
            .zip(f.cum_probs().iter().copied()),
    );
    Ok(points)
}

/// The Grenander estimator: the majorant `F̃_n` of the EDF and its left
/// derivative `f̃_n`.
pub fn grenander(sample: &Sample) -> Result<(PiecewiseLinearCdf, StepDensity)> {
    let hull = lcm_of_points(&edf_points(sample)?)?;
    let cdf = PiecewiseLinearCdf { hull };
    let density = cdf.density();
    Ok((cdf, density))
}

/// Buffers reused across repeated Grenander fits.
#[derive(Debug, Default, Clone)]
pub struct HullScratch {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

/// `f̃(t0)` for a sorted nonempty sample and `t0 > 0`, without materialising
/// the EDF. Returns 0 beyond the largest value. Mass at zero starts the
/// majorant at `(0, F_n(0))`.
pub fn grenander_density_at(sorted: &[f64], t0: f64, scratch: &mut HullScratch) -> f64 {
    debug_assert!(!sorted.is_empty() && t0 > 0.0);
    let n = sorted.len();
    if t0 > sorted[n - 1] {
        return 0.0;
    }
    let n_f = n as f64;
    // Jump points with merged ties: keep the last index of each run.
    let jumps = sorted.iter().enumerate().filter_map(|(i, &x)| {
        if i + 1 < n && sorted[i + 1] == x {
            None
        } else {
            Some((x, (i + 1) as f64 / n_f))
        }
    });
    let HullScratch { xs, ys } = scratch;
    let origin = (sorted[0] > 0.0).then_some((0.0, 0.0));
    upper_hull_into(origin.into_iter().chain(jumps), xs, ys);
    let k = xs.partition_point(|&v| v < t0).max(1);
    slope(xs[k - 1], ys[k - 1], xs[k], ys[k])
}
