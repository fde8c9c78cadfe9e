//! Samples on `[0, ∞)` and their empirical distribution function.

use std::path::Path;

use crate::error::{domain, Error, Result};

/// A sorted sample of nonnegative reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    /// Sorts `values` and checks they are finite and nonnegative.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return domain("empty sample");
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return domain(format!(
                "sample value {bad} is not a finite nonnegative real"
            ));
        }
        values.sort_unstable_by(f64::total_cmp);
        Ok(Self { values })
    }

    /// Caller guarantees `values` is nonempty, sorted, finite and nonnegative.
    pub(crate) fn from_sorted_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    /// Multiplies every value by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return domain(format!("scale factor must be positive, got {factor}"));
        }
        Ok(Self {
            values: self.values.iter().map(|v| v * factor).collect(),
        })
    }
}

/// Reads a sample stored one value per line. Blank lines and lines starting
/// with `#` are skipped.
pub fn read_sample(path: impl AsRef<Path>) -> Result<Sample> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_sample(&text)
}

pub fn parse_sample(text: &str) -> Result<Sample> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: `{line}` is not a number", lineno + 1)))?;
        values.push(v);
    }
    Sample::new(values)
}

/// Right-continuous step distribution function with jumps at distinct points.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCdf {
    jump_points: Vec<f64>,
    cum_probs: Vec<f64>,
}

impl StepCdf {
    pub fn jump_points(&self) -> &[f64] {
        &self.jump_points
    }

    pub fn cum_probs(&self) -> &[f64] {
        &self.cum_probs
    }

    /// `#{X_i <= x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.jump_points.partition_point(|&p| p <= x);
        if k == 0 {
            0.0
        } else {
            self.cum_probs[k - 1]
        }
    }

    /// `inf{x: F(x) >= u}` for `u ∈ (0, 1]`.
    pub fn invert(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return domain(format!("probability {u} outside (0, 1]"));
        }
        let k = self.cum_probs.partition_point(|&c| c < u);
        Ok(self.jump_points[k.min(self.jump_points.len() - 1)])
    }

    /// `sup_x |F_n(x) - G(x)|` for a continuous `G`, attained at the jump
    /// points or their left limits.
    pub fn sup_distance<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let mut prev = 0.0;
        let mut d = 0.0_f64;
        for (&x, &c) in self.jump_points.iter().zip(&self.cum_probs) {
            let gx = g(x);
            d = d.max((c - gx).abs()).max((prev - gx).abs());
            prev = c;
        }
        d
    }
}

/// The EDF of `sample`, ties merged into single jumps.
pub fn edf(sample: &Sample) -> StepCdf {
    let values = sample.values();
    let n = values.len() as f64;
    let mut jump_points = Vec::with_capacity(values.len());
    let mut cum_probs = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        let count = (i + 1) as f64 / n;
        if jump_points.last() == Some(&v) {
            *cum_probs.last_mut().unwrap() = count;
        } else {
            jump_points.push(v);
            cum_probs.push(count);
        }
    }
    StepCdf {
        jump_points,
        cum_probs,
    }
}
