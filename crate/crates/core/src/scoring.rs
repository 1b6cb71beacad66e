//! CRPS and weighted CRPS.
//!
//! Closed forms cover the generalized Pareto, exponential, normal and
//! two-component normal mixture families; every family can be scored by
//! adaptive quadrature of `int (F(x) - 1{x >= y})^2 w(x) dx`, and
//! ensembles through the empirical energy form.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::numeric::{self, QuadOptions};

/// Piecewise-linear non-negative weight tabulated on an increasing grid.
/// Zero below the first grid point, constant beyond the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedWeight {
    grid: Vec<f64>,
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl TabulatedWeight {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::InvalidParameter(
                "tabulated weight needs at least two (x, w) pairs of equal length".into(),
            ));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("weight grid must be finite and strictly increasing".into()));
        }
        if values.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter("weights must be finite and non-negative".into()));
        }
        let mut cumulative = Vec::with_capacity(grid.len());
        cumulative.push(0.0);
        for i in 1..grid.len() {
            let step = 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
            cumulative.push(cumulative[i - 1] + step);
        }
        Ok(Self { grid, values, cumulative })
    }

    fn segment(&self, x: f64) -> usize {
        self.grid.partition_point(|&g| g <= x).saturating_sub(1).min(self.grid.len() - 2)
    }

    pub fn weight(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x < self.grid[0] {
            return 0.0;
        }
        if x >= self.grid[n - 1] {
            return self.values[n - 1];
        }
        let i = self.segment(x);
        let t = (x - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    pub fn antiderivative(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x <= self.grid[0] {
            return 0.0;
        }
        if x >= self.grid[n - 1] {
            return self.cumulative[n - 1] + self.values[n - 1] * (x - self.grid[n - 1]);
        }
        let i = self.segment(x);
        let wx = self.weight(x);
        self.cumulative[i] + 0.5 * (self.values[i] + wx) * (x - self.grid[i])
    }
}

/// Weight `w` of a weighted CRPS together with its antiderivative `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightFunction {
    /// `w = 1`, `W(x) = x`: the plain CRPS.
    Unit,
    /// `w(x) = 1{x >= q}`, `W(x) = max(x - q, 0)`.
    QuantileIndicator(f64),
    Custom(TabulatedWeight),
}

impl WeightFunction {
    pub fn weight(&self, x: f64) -> f64 {
        match self {
            WeightFunction::Unit => 1.0,
            WeightFunction::QuantileIndicator(q) => {
                if x >= *q {
                    1.0
                } else {
                    0.0
                }
            }
            WeightFunction::Custom(t) => t.weight(x),
        }
    }

    pub fn antiderivative(&self, x: f64) -> f64 {
        match self {
            WeightFunction::Unit => x,
            WeightFunction::QuantileIndicator(q) => (x - q).max(0.0),
            WeightFunction::Custom(t) => t.antiderivative(x),
        }
    }

    /// Left edge of the weight's support.
    fn lower_edge(&self) -> f64 {
        match self {
            WeightFunction::Unit => f64::NEG_INFINITY,
            WeightFunction::QuantileIndicator(q) => *q,
            WeightFunction::Custom(t) => t.grid[0],
        }
    }

    fn tail_weight_vanishes(&self) -> bool {
        matches!(self, WeightFunction::Custom(t) if *t.values.last().unwrap() == 0.0)
    }

    fn knots(&self) -> Vec<f64> {
        match self {
            WeightFunction::Unit => vec![],
            WeightFunction::QuantileIndicator(q) => vec![*q],
            WeightFunction::Custom(t) => t.grid.clone(),
        }
    }

    fn kind(&self) -> ScoreKind {
        match self {
            WeightFunction::Unit => ScoreKind::Crps,
            WeightFunction::QuantileIndicator(q) => ScoreKind::QuantileWeighted(*q),
            WeightFunction::Custom(_) => ScoreKind::Weighted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScoreKind {
    Crps,
    /// Weighted with `1{x >= q}`.
    QuantileWeighted(f64),
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreValue {
    pub value: f64,
    pub kind: ScoreKind,
}

impl ScoreValue {
    fn crps(value: f64) -> Self {
        Self { value, kind: ScoreKind::Crps }
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// `E|N(m, s^2)|`.
fn abs_normal_mean(m: f64, s: f64) -> f64 {
    let z = m / s;
    m * (2.0 * std_normal_cdf(z) - 1.0) + 2.0 * s * std_normal_pdf(z)
}

/// GP shapes at or above one have no mean; the CRPS is then undefined in
/// its energy form and every scoring route refuses.
fn require_finite_mean(dist: &Distribution) -> Result<()> {
    match dist.mean() {
        Err(Error::InfiniteMean(s)) => Err(Error::InfiniteMean(s)),
        Err(e) => Err(e),
        Ok(_) => Ok(()),
    }
}

/// Closed-form CRPS.
pub fn crps_closed(dist: &Distribution, y: f64) -> Result<ScoreValue> {
    if !y.is_finite() {
        return Err(Error::Domain(format!("observation must be finite, got {y}")));
    }
    dist.validate()?;
    let value = match *dist {
        Distribution::GeneralizedPareto { location, scale, shape } => {
            if shape >= 1.0 {
                return Err(Error::InfiniteMean(shape));
            }
            let z = y - location;
            if z < 0.0 {
                -z + scale / (2.0 - shape)
            } else {
                let tail = dist.sf(y);
                z + 2.0 * tail * (scale + shape * z) / (1.0 - shape)
                    - 2.0 * scale * (1.0 / (1.0 - shape) - 1.0 / (2.0 * (2.0 - shape)))
            }
        }
        Distribution::Exponential { rate } => {
            if y < 0.0 {
                0.5 / rate - y
            } else {
                y + 2.0 * (-rate * y).exp() / rate - 1.5 / rate
            }
        }
        Distribution::Normal { mean, sd } => {
            let z = (y - mean) / sd;
            sd * (z * (2.0 * std_normal_cdf(z) - 1.0) + 2.0 * std_normal_pdf(z) - 1.0 / PI.sqrt())
        }
        Distribution::NormalMixture2 { weight, mean1, sd1, mean2, sd2 } => {
            let w = [weight, 1.0 - weight];
            let m = [mean1, mean2];
            let s = [sd1, sd2];
            let mut accuracy = 0.0;
            let mut spread = 0.0;
            for i in 0..2 {
                accuracy += w[i] * abs_normal_mean(y - m[i], s[i]);
                for j in 0..2 {
                    spread += w[i] * w[j] * abs_normal_mean(m[i] - m[j], s[i].hypot(s[j]));
                }
            }
            accuracy - 0.5 * spread
        }
        _ => return Err(Error::UnsupportedFamily(dist.family().name())),
    };
    Ok(ScoreValue::crps(value.max(0.0)))
}

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-13,
        max_intervals: 4000,
    }
}

/// Weighted CRPS by adaptive quadrature, split at the observation and at
/// the distribution's and weight's knots.
pub fn crps_quadrature(dist: &Distribution, y: f64, weight: &WeightFunction) -> Result<ScoreValue> {
    if !y.is_finite() {
        return Err(Error::Domain(format!("observation must be finite, got {y}")));
    }
    dist.validate()?;
    if !weight.tail_weight_vanishes() {
        if let Err(Error::InfiniteMean(s)) = require_finite_mean(dist) {
            return Err(Error::Divergent(format!(
                "tail shape {s} gives an infinite weighted mean"
            )));
        }
    }
    let (lo, hi) = dist.support();
    let edge = weight.lower_edge();
    let mut knots = dist.knots();
    knots.extend(weight.knots());
    knots.push(y);
    let scale = dist.scale_hint();
    let opts = quad_opts();

    // (-inf, y): F^2 w. Below the support F vanishes.
    let lower_start = lo.max(edge);
    let lower = if y > lower_start {
        numeric::integrate_split(
            |x| {
                let f = dist.cdf(x);
                f * f * weight.weight(x)
            },
            lower_start,
            y,
            &knots,
            scale,
            opts,
        )?
        .value
    } else {
        0.0
    };
    // [y, inf): (1 - F)^2 w. Above the support the survival vanishes.
    let upper_start = y.max(edge);
    let upper = if upper_start < hi {
        numeric::integrate_split(
            |x| {
                let s = dist.sf(x);
                s * s * weight.weight(x)
            },
            upper_start,
            hi,
            &knots,
            scale,
            opts,
        )
        .map_err(|e| match e {
            Error::Quadrature { .. } => Error::Divergent(format!("upper tail integral: {e}")),
            other => other,
        })?
        .value
    } else {
        0.0
    };
    Ok(ScoreValue {
        value: lower + upper,
        kind: weight.kind(),
    })
}

/// CRPS by the closed form when the family has one, otherwise quadrature.
pub fn crps(dist: &Distribution, y: f64) -> Result<f64> {
    match crps_closed(dist, y) {
        Ok(s) => Ok(s.value),
        Err(Error::UnsupportedFamily(_)) => Ok(crps_quadrature(dist, y, &WeightFunction::Unit)?.value),
        Err(e) => Err(e),
    }
}

/// `int_q^inf (1 - F(x))^2 dx`.
pub fn survival_square_integral(dist: &Distribution, q: f64) -> Result<f64> {
    if !q.is_finite() {
        return Err(Error::Domain(format!("threshold must be finite, got {q}")));
    }
    dist.validate()?;
    match *dist {
        Distribution::Exponential { rate } => Ok(if q <= 0.0 {
            -q + 0.5 / rate
        } else {
            (-2.0 * rate * q).exp() * 0.5 / rate
        }),
        Distribution::GeneralizedPareto { location, scale, shape } => {
            if shape >= 1.0 {
                return Err(Error::Divergent(format!(
                    "tail shape {shape} gives an infinite weighted mean"
                )));
            }
            let z = q - location;
            if z <= 0.0 {
                Ok(-z + scale / (2.0 - shape))
            } else {
                let s = dist.sf(q);
                Ok(s * s * (scale + shape * z) / (2.0 - shape))
            }
        }
        Distribution::Normal { mean, sd } => {
            let z = (q - mean) / sd;
            let s = std_normal_sf(z);
            let v = -z * s * s + 2.0 * std_normal_pdf(z) * s - std_normal_sf(SQRT_2 * z) / PI.sqrt();
            Ok(sd * v.max(0.0))
        }
        _ => {
            if let Err(Error::InfiniteMean(s)) = require_finite_mean(dist) {
                return Err(Error::Divergent(format!(
                    "tail shape {s} gives an infinite weighted mean"
                )));
            }
            let (lo, hi) = dist.support();
            let start = q.max(lo);
            let head = start - q;
            if start >= hi {
                return Ok(0.0);
            }
            let r = numeric::integrate_split(
                |x| {
                    let s = dist.sf(x);
                    s * s
                },
                start,
                hi,
                &dist.knots(),
                dist.scale_hint(),
                quad_opts(),
            )?;
            Ok(head + r.value)
        }
    }
}

/// CRPS weighted by `1{x >= q}`, through the two branches of the
/// threshold decomposition: the survival-square tail alone when `q > y`,
/// plus `CRPS(F, y) - CRPS(F, q)` otherwise.
pub fn wcrps_quantile(dist: &Distribution, y: f64, q: f64) -> Result<ScoreValue> {
    if !y.is_finite() {
        return Err(Error::Domain(format!("observation must be finite, got {y}")));
    }
    let tail = survival_square_integral(dist, q)?;
    let value = if q > y {
        tail
    } else {
        let diff = crps(dist, y).map_err(divergent)? - crps(dist, q).map_err(divergent)?;
        diff + tail
    };
    Ok(ScoreValue {
        value: value.max(0.0),
        kind: ScoreKind::QuantileWeighted(q),
    })
}

fn divergent(e: Error) -> Error {
    match e {
        Error::InfiniteMean(s) => Error::Divergent(format!("tail shape {s} gives an infinite weighted mean")),
        other => other,
    }
}

/// `c_F(q) = CRPS(F, q) - int_q^inf (1 - F)^2 = int_{-inf}^q F^2`: the
/// offset between the quantile-weighted CRPS and the CRPS above `q`.
pub fn crps_shift_constant(dist: &Distribution, q: f64) -> Result<f64> {
    let c = crps(dist, q).map_err(divergent)? - survival_square_integral(dist, q)?;
    Ok(c.max(0.0))
}

/// Ensemble CRPS with the empirical-measure convention:
/// `(1/m) sum |x_i - y| - (1/(2 m^2)) sum_ij |x_i - x_j|`.
pub fn crps_ensemble(members: &[f64], y: f64) -> Result<ScoreValue> {
    if members.is_empty() {
        return Err(Error::Domain("ensemble has no members".into()));
    }
    if !y.is_finite() || members.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("ensemble members and observation must be finite".into()));
    }
    let owned;
    let xs = if members.windows(2).all(|w| w[0] <= w[1]) {
        members
    } else {
        owned = crate::stats::sorted(members);
        &owned[..]
    };
    let m = xs.len() as f64;
    let accuracy = xs.iter().map(|x| (x - y).abs()).sum::<f64>() / m;
    // sum_ij |x_i - x_j| = 2 sum_i (2i - m - 1) x_(i), 1-based ranks.
    let spread: f64 = xs
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i as f64 + 1.0) - m - 1.0) * x)
        .sum::<f64>()
        / (m * m);
    Ok(ScoreValue::crps((accuracy - spread).max(0.0)))
}

/// Weighted CRPS through its expectation form
/// `W(y) + 2 (1 - F(y)) E(W(X) - W(y) | X > y) - 2 E(W(X) F(X))`,
/// valid for continuous weights. Independent of [`crps_quadrature`].
pub fn wcrps_expectation_form(dist: &Distribution, y: f64, weight: &WeightFunction) -> Result<f64> {
    if let WeightFunction::QuantileIndicator(_) = weight {
        return Err(Error::Domain(
            "expectation form requires a continuous weight; use wcrps_quantile".into(),
        ));
    }
    require_finite_mean(dist).map_err(divergent)?;
    let (lo, hi) = dist.support();
    let mut knots = dist.knots();
    knots.extend(weight.knots());
    knots.push(y);
    let scale = dist.scale_hint();
    let opts = quad_opts();
    let wy = weight.antiderivative(y);
    // (1 - F(y)) E(W(X) - W(y) | X > y) = E[(W(X) - W(y)) 1{X > y}].
    let excess = numeric::integrate_split(
        |x| (weight.antiderivative(x) - wy) * dist.pdf(x),
        y.max(lo),
        hi,
        &knots,
        scale,
        opts,
    )?
    .value;
    let cross = numeric::integrate_split(
        |x| {
            let d = dist.pdf(x);
            if d == 0.0 {
                0.0
            } else {
                weight.antiderivative(x) * dist.cdf(x) * d
            }
        },
        lo,
        hi,
        &knots,
        scale,
        opts,
    )?
    .value;
    Ok(wy + 2.0 * excess - 2.0 * cross)
}
