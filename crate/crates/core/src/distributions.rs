//! Parametric forecast and data-generating laws.
//!
//! Every family exposes its cdf, survival, density, quantile and an
//! inverse-cdf sampler. The generalized Pareto family carries an explicit
//! location so that threshold-shifted tails can be represented directly.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::io::DistributionSpec;
use crate::numeric::{self, QuadOptions};

/// Below this magnitude the GP shape is treated as exactly zero.
pub const GP_SHAPE_EPS: f64 = 1e-8;

/// Family tag used in serialized forecasts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Normal,
    NormalMixture2,
    Exponential,
    Gamma,
    GeneralizedPareto,
    UniformMixture,
    Spliced,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::NormalMixture2 => "normal_mixture2",
            Family::Exponential => "exponential",
            Family::Gamma => "gamma",
            Family::GeneralizedPareto => "generalized_pareto",
            Family::UniformMixture => "uniform_mixture",
            Family::Spliced => "spliced",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "normal" => Family::Normal,
            "normal_mixture2" => Family::NormalMixture2,
            "exponential" => Family::Exponential,
            "gamma" => Family::Gamma,
            "generalized_pareto" => Family::GeneralizedPareto,
            "uniform_mixture" => Family::UniformMixture,
            "spliced" => Family::Spliced,
            _ => return None,
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A law whose upper tail above `splice_point` is replaced by a shifted
/// excess law: `G(x) = F(x)` for `x <= u` and
/// `1 - G(x) = (1 - H(x - u)) (1 - F(u))` above.
///
/// Build through [`crate::tail_analysis::splice_tail`], which checks the
/// stochastic-ordering condition.
#[derive(Debug, Clone, PartialEq)]
pub struct SplicedTail {
    pub base: Distribution,
    pub replacement: Distribution,
    pub splice_point: f64,
}

/// A parametric forecast distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionSpec", into = "DistributionSpec")]
pub enum Distribution {
    Normal {
        mean: f64,
        sd: f64,
    },
    /// `weight * N(mean1, sd1^2) + (1 - weight) * N(mean2, sd2^2)`.
    NormalMixture2 {
        weight: f64,
        mean1: f64,
        sd1: f64,
        mean2: f64,
        sd2: f64,
    },
    Exponential {
        rate: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    /// Survival `(1 + shape (x - location) / scale)^(-1/shape)` above `location`.
    GeneralizedPareto {
        location: f64,
        scale: f64,
        shape: f64,
    },
    /// `weight * U[low1, high1] + (1 - weight) * U[low2, high2]`.
    UniformMixture {
        weight: f64,
        low1: f64,
        high1: f64,
        low2: f64,
        high2: f64,
    },
    Spliced(Box<SplicedTail>),
}

/// Point evaluation of a distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub cdf: f64,
    pub pdf: f64,
    pub survival: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

fn unit_weight(v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("mixture weight must lie in [0, 1], got {v}")))
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

fn uniform_cdf(x: f64, lo: f64, hi: f64) -> f64 {
    ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
}

fn uniform_pdf(x: f64, lo: f64, hi: f64) -> f64 {
    if x >= lo && x <= hi {
        1.0 / (hi - lo)
    } else {
        0.0
    }
}

impl Distribution {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        finite("mean", mean)?;
        positive("sd", sd)?;
        Ok(Distribution::Normal { mean, sd })
    }

    pub fn normal_mixture2(weight: f64, mean1: f64, sd1: f64, mean2: f64, sd2: f64) -> Result<Self> {
        unit_weight(weight)?;
        finite("mean1", mean1)?;
        finite("mean2", mean2)?;
        positive("sd1", sd1)?;
        positive("sd2", sd2)?;
        Ok(Distribution::NormalMixture2 { weight, mean1, sd1, mean2, sd2 })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        positive("rate", rate)?;
        Ok(Distribution::Exponential { rate })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("rate", rate)?;
        Ok(Distribution::Gamma { shape, rate })
    }

    /// Generalized Pareto with location 0.
    pub fn gp(scale: f64, shape: f64) -> Result<Self> {
        Self::gp_at(0.0, scale, shape)
    }

    pub fn gp_at(location: f64, scale: f64, shape: f64) -> Result<Self> {
        finite("location", location)?;
        positive("scale", scale)?;
        finite("shape", shape)?;
        Ok(Distribution::GeneralizedPareto { location, scale, shape })
    }

    pub fn uniform_mixture(weight: f64, low1: f64, high1: f64, low2: f64, high2: f64) -> Result<Self> {
        unit_weight(weight)?;
        for (name, v) in [("low1", low1), ("high1", high1), ("low2", low2), ("high2", high2)] {
            finite(name, v)?;
        }
        if !(low1 < high1 && low2 < high2) {
            return Err(Error::InvalidParameter(format!(
                "uniform components need low < high, got [{low1}, {high1}] and [{low2}, {high2}]"
            )));
        }
        Ok(Distribution::UniformMixture { weight, low1, high1, low2, high2 })
    }

    /// Re-checks parameter constraints (useful after deserialization or
    /// direct enum construction).
    pub fn validate(&self) -> Result<()> {
        match *self {
            Distribution::Normal { mean, sd } => Self::normal(mean, sd).map(|_| ()),
            Distribution::NormalMixture2 { weight, mean1, sd1, mean2, sd2 } => {
                Self::normal_mixture2(weight, mean1, sd1, mean2, sd2).map(|_| ())
            }
            Distribution::Exponential { rate } => Self::exponential(rate).map(|_| ()),
            Distribution::Gamma { shape, rate } => Self::gamma(shape, rate).map(|_| ()),
            Distribution::GeneralizedPareto { location, scale, shape } => {
                Self::gp_at(location, scale, shape).map(|_| ())
            }
            Distribution::UniformMixture { weight, low1, high1, low2, high2 } => {
                Self::uniform_mixture(weight, low1, high1, low2, high2).map(|_| ())
            }
            Distribution::Spliced(ref s) => {
                s.base.validate()?;
                s.replacement.validate()?;
                finite("splice point", s.splice_point)
            }
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Distribution::Normal { .. } => Family::Normal,
            Distribution::NormalMixture2 { .. } => Family::NormalMixture2,
            Distribution::Exponential { .. } => Family::Exponential,
            Distribution::Gamma { .. } => Family::Gamma,
            Distribution::GeneralizedPareto { .. } => Family::GeneralizedPareto,
            Distribution::UniformMixture { .. } => Family::UniformMixture,
            Distribution::Spliced(_) => Family::Spliced,
        }
    }

    /// Flat parameter vector in serialization order.
    pub fn params(&self) -> Vec<f64> {
        match *self {
            Distribution::Normal { mean, sd } => vec![mean, sd],
            Distribution::NormalMixture2 { weight, mean1, sd1, mean2, sd2 } => {
                vec![weight, mean1, sd1, mean2, sd2]
            }
            Distribution::Exponential { rate } => vec![rate],
            Distribution::Gamma { shape, rate } => vec![shape, rate],
            Distribution::GeneralizedPareto { location, scale, shape } => {
                if location == 0.0 {
                    vec![scale, shape]
                } else {
                    vec![scale, shape, location]
                }
            }
            Distribution::UniformMixture { weight, low1, high1, low2, high2 } => {
                vec![weight, low1, high1, low2, high2]
            }
            Distribution::Spliced(ref s) => vec![s.splice_point],
        }
    }

    /// Closure of the support as `(lower, upper)`; either may be infinite.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Distribution::Normal { .. } | Distribution::NormalMixture2 { .. } => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            Distribution::Exponential { .. } | Distribution::Gamma { .. } => (0.0, f64::INFINITY),
            Distribution::GeneralizedPareto { location, scale, shape } => {
                let upper = if shape < -GP_SHAPE_EPS {
                    location - scale / shape
                } else {
                    f64::INFINITY
                };
                (location, upper)
            }
            Distribution::UniformMixture { weight, low1, high1, low2, high2 } => {
                let lo = match weight {
                    w if w == 1.0 => low1,
                    w if w == 0.0 => low2,
                    _ => low1.min(low2),
                };
                let hi = match weight {
                    w if w == 1.0 => high1,
                    w if w == 0.0 => high2,
                    _ => high1.max(high2),
                };
                (lo, hi)
            }
            Distribution::Spliced(ref s) => {
                let (lo, _) = s.base.support();
                let (_, hi) = s.replacement.support();
                (lo, s.splice_point + hi)
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Normal { mean, sd } => std_normal_cdf((x - mean) / sd),
            Distribution::NormalMixture2 { weight, mean1, sd1, mean2, sd2 } => {
                weight * std_normal_cdf((x - mean1) / sd1)
                    + (1.0 - weight) * std_normal_cdf((x - mean2) / sd2)
            }
            Distribution::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Distribution::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(shape, rate * x)
                }
            }
            Distribution::GeneralizedPareto { .. } => {
                let ls = self.log_sf(x);
                -ls.exp_m1()
            }
            Distribution::UniformMixture { weight, low1, high1, low2, high2 } => {
                weight * uniform_cdf(x, low1, high1) + (1.0 - weight) * uniform_cdf(x, low2, high2)
            }
            Distribution::Spliced(ref s) => {
                if x <= s.splice_point {
                    s.base.cdf(x)
                } else {
                    1.0 - s.replacement.sf(x - s.splice_point) * s.base.sf(s.splice_point)
                }
            }
        }
    }

    /// Survival function `1 - F(x)`, computed without cancellation where
    /// the family allows it.
    pub fn sf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Normal { mean, sd } => std_normal_sf((x - mean) / sd),
            Distribution::NormalMixture2 { weight, mean1, sd1, mean2, sd2 } => {
                weight * std_normal_sf((x - mean1) / sd1)
                    + (1.0 - weight) * std_normal_sf((x - mean2) / sd2)
            }
            Distribution::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            Distribution::Gamma { shape, rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    gamma_ur(shape, rate * x)
                }
            }
            Distribution::GeneralizedPareto { .. } => self.log_sf(x).exp(),
            Distribution::UniformMixture { .. } => 1.0 - self.cdf(x),
            Distribution::Spliced(ref s) => {
                if x <= s.splice_point {
                    s.base.sf(x)
                } else {
                    s.replacement.sf(x - s.splice_point) * s.base.sf(s.splice_point)
                }
            }
        }
    }

    /// Log-survival; exact for the GP and exponential families.
    pub fn log_sf(&self, x: f64) -> f64 {
        match *self {
            Distribution::GeneralizedPareto { location, scale, shape } => {
                let z = (x - location) / scale;
                if z <= 0.0 {
                    return 0.0;
                }
                if shape.abs() < GP_SHAPE_EPS {
                    -z
                } else {
                    let t = shape * z;
                    if t <= -1.0 {
                        f64::NEG_INFINITY
                    } else {
                        -t.ln_1p() / shape
                    }
                }
            }
            Distribution::Exponential { rate } => -rate * x.max(0.0),
            _ => self.sf(x).ln(),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Normal { mean, sd } => std_normal_pdf((x - mean) / sd) / sd,
            Distribution::NormalMixture2 { weight, mean1, sd1, mean2, sd2 } => {
                weight * std_normal_pdf((x - mean1) / sd1) / sd1
                    + (1.0 - weight) * std_normal_pdf((x - mean2) / sd2) / sd2
            }
            Distribution::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            Distribution::Gamma { shape, rate } => {
                if x < 0.0 || (x == 0.0 && shape > 1.0) {
                    0.0
                } else if x == 0.0 {
                    if shape == 1.0 {
                        rate
                    } else {
                        f64::INFINITY
                    }
                } else {
                    ((shape - 1.0) * x.ln() - rate * x + shape * rate.ln() - ln_gamma(shape)).exp()
                }
            }
            Distribution::GeneralizedPareto { location, scale, shape } => {
                let z = (x - location) / scale;
                if z < 0.0 {
                    return 0.0;
                }
                if shape.abs() < GP_SHAPE_EPS {
                    (-z).exp() / scale
                } else {
                    let t = shape * z;
                    if t <= -1.0 {
                        0.0
                    } else {
                        (-(1.0 / shape + 1.0) * t.ln_1p()).exp() / scale
                    }
                }
            }
            Distribution::UniformMixture { weight, low1, high1, low2, high2 } => {
                weight * uniform_pdf(x, low1, high1) + (1.0 - weight) * uniform_pdf(x, low2, high2)
            }
            Distribution::Spliced(ref s) => {
                if x <= s.splice_point {
                    s.base.pdf(x)
                } else {
                    s.replacement.pdf(x - s.splice_point) * s.base.sf(s.splice_point)
                }
            }
        }
    }

    pub fn eval(&self, x: f64) -> Result<Evaluation> {
        if x.is_nan() {
            return Err(Error::Domain("x is NaN".into()));
        }
        self.validate()?;
        Ok(Evaluation {
            cdf: self.cdf(x),
            pdf: self.pdf(x),
            survival: self.sf(x),
        })
    }

    /// Inverse cdf on the open unit interval.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {p}")));
        }
        Ok(self.quantile_unchecked(p))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        match *self {
            Distribution::Normal { mean, sd } => mean - sd * SQRT_2 * erfc_inv(2.0 * p),
            Distribution::Exponential { rate } => -(-p).ln_1p() / rate,
            Distribution::GeneralizedPareto { location, scale, shape } => {
                let l = (-p).ln_1p();
                let z = if shape.abs() < GP_SHAPE_EPS {
                    -l
                } else {
                    (-shape * l).exp_m1() / shape
                };
                location + scale * z
            }
            Distribution::NormalMixture2 { weight, mean1, sd1, mean2, sd2 } => {
                let q1 = mean1 - sd1 * SQRT_2 * erfc_inv(2.0 * p);
                let q2 = mean2 - sd2 * SQRT_2 * erfc_inv(2.0 * p);
                if weight == 1.0 {
                    return q1;
                }
                if weight == 0.0 {
                    return q2;
                }
                self.invert_bracketed(p, q1.min(q2), q1.max(q2))
            }
            Distribution::UniformMixture { weight, low1, high1, low2, high2 } => {
                if weight == 1.0 {
                    return low1 + p * (high1 - low1);
                }
                if weight == 0.0 {
                    return low2 + p * (high2 - low2);
                }
                let (lo, hi) = self.support();
                self.invert_bracketed(p, lo, hi)
            }
            Distribution::Gamma { shape, rate } => {
                let mut hi = (shape / rate).max(1.0 / rate);
                while self.cdf(hi) < p {
                    hi *= 2.0;
                }
                self.invert_bracketed(p, 0.0, hi)
            }
            Distribution::Spliced(ref s) => {
                let fu = s.base.cdf(s.splice_point);
                if p <= fu {
                    s.base.quantile_unchecked(p)
                } else {
                    let inner = ((p - fu) / s.base.sf(s.splice_point)).clamp(0.0, 1.0);
                    if inner <= 0.0 {
                        s.splice_point
                    } else {
                        s.splice_point + s.replacement.quantile_unchecked(inner.min(1.0 - f64::EPSILON))
                    }
                }
            }
        }
    }

    fn invert_bracketed(&self, p: f64, lo: f64, hi: f64) -> f64 {
        if lo == hi {
            return lo;
        }
        let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        numeric::brent(|x| self.cdf(x) - p, lo, hi, tol).unwrap_or(0.5 * (lo + hi))
    }

    /// One draw. Single-component families use the inverse cdf, mixtures
    /// select a component first; Gamma uses rejection sampling.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::NormalMixture2 { weight, mean1, sd1, mean2, sd2 } => {
                let u: f64 = rng.random();
                let (m, s) = if u < weight { (mean1, sd1) } else { (mean2, sd2) };
                let p: f64 = rng.sample(Open01);
                m - s * SQRT_2 * erfc_inv(2.0 * p)
            }
            Distribution::UniformMixture { weight, low1, high1, low2, high2 } => {
                let u: f64 = rng.random();
                let (lo, hi) = if u < weight { (low1, high1) } else { (low2, high2) };
                let p: f64 = rng.sample(Open01);
                lo + p * (hi - lo)
            }
            Distribution::Gamma { shape, rate } => {
                let g = rand_distr::Gamma::new(shape, 1.0 / rate).expect("validated parameters");
                rng.sample(g)
            }
            _ => {
                let p: f64 = rng.sample(Open01);
                self.quantile_unchecked(p)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::Domain("sample size must be at least 1".into()));
        }
        self.validate()?;
        Ok((0..n).map(|_| self.sample_one(rng)).collect())
    }

    pub fn mean(&self) -> Result<f64> {
        Ok(match *self {
            Distribution::Normal { mean, .. } => mean,
            Distribution::NormalMixture2 { weight, mean1, mean2, .. } => {
                weight * mean1 + (1.0 - weight) * mean2
            }
            Distribution::Exponential { rate } => 1.0 / rate,
            Distribution::Gamma { shape, rate } => shape / rate,
            Distribution::GeneralizedPareto { location, scale, shape } => {
                if shape >= 1.0 {
                    return Err(Error::InfiniteMean(shape));
                }
                location + scale / (1.0 - shape)
            }
            Distribution::UniformMixture { weight, low1, high1, low2, high2 } => {
                weight * 0.5 * (low1 + high1) + (1.0 - weight) * 0.5 * (low2 + high2)
            }
            Distribution::Spliced(ref s) => {
                let u = s.splice_point;
                let tail = s.base.sf(u);
                if tail == 0.0 {
                    s.base.mean()?
                } else {
                    s.base.mean()? - tail * s.base.mean_excess(u)? + tail * s.replacement.mean()?
                }
            }
        })
    }

    /// Mean excess `E(X - u | X > u)`.
    pub fn mean_excess(&self, u: f64) -> Result<f64> {
        finite("threshold", u)?;
        let tail = self.sf(u);
        if tail <= 0.0 {
            return Err(Error::NullEvent(u));
        }
        match *self {
            Distribution::Exponential { rate } => Ok(1.0 / rate + (-u).max(0.0)),
            Distribution::GeneralizedPareto { location, scale, shape } => {
                if shape >= 1.0 {
                    return Err(Error::InfiniteMean(shape));
                }
                if u <= location {
                    Ok(location - u + scale / (1.0 - shape))
                } else {
                    Ok((scale + shape * (u - location)) / (1.0 - shape))
                }
            }
            Distribution::Spliced(ref s) if u >= s.splice_point => {
                s.replacement.mean_excess(u - s.splice_point)
            }
            _ => {
                self.mean()?;
                let (lo, hi) = self.support();
                let start = u.max(lo);
                let head = start - u;
                let r = numeric::integrate_split(
                    |x| self.sf(x),
                    start,
                    hi,
                    &self.knots(),
                    self.scale_hint(),
                    QuadOptions::default(),
                )?;
                Ok(head + r.value / tail)
            }
        }
    }

    /// Points where the cdf has kinks or concentrates mass; quadrature
    /// splits there.
    pub(crate) fn knots(&self) -> Vec<f64> {
        match *self {
            Distribution::Normal { mean, .. } => vec![mean],
            Distribution::NormalMixture2 { mean1, mean2, .. } => vec![mean1, mean2],
            Distribution::Exponential { .. } => vec![0.0],
            Distribution::Gamma { shape, rate } => vec![0.0, ((shape - 1.0) / rate).max(0.0)],
            Distribution::GeneralizedPareto { .. } => {
                let (lo, hi) = self.support();
                let mut k = vec![lo];
                if hi.is_finite() {
                    k.push(hi);
                }
                k
            }
            Distribution::UniformMixture { low1, high1, low2, high2, .. } => {
                vec![low1, high1, low2, high2]
            }
            Distribution::Spliced(ref s) => {
                let mut k = s.base.knots();
                k.retain(|&x| x < s.splice_point);
                k.push(s.splice_point);
                k.extend(s.replacement.knots().into_iter().map(|x| x + s.splice_point));
                k
            }
        }
    }

    /// Typical spread, used to scale semi-infinite quadrature maps.
    pub(crate) fn scale_hint(&self) -> f64 {
        match *self {
            Distribution::Normal { sd, .. } => sd,
            Distribution::NormalMixture2 { sd1, sd2, .. } => sd1.max(sd2),
            Distribution::Exponential { rate } => 1.0 / rate,
            Distribution::Gamma { shape, rate } => shape.sqrt() / rate,
            Distribution::GeneralizedPareto { scale, .. } => scale,
            Distribution::UniformMixture { low1, high1, low2, high2, .. } => {
                (high1 - low1).max(high2 - low2)
            }
            Distribution::Spliced(ref s) => s.base.scale_hint().max(s.replacement.scale_hint()),
        }
    }
}

/// A generalized Pareto tail anchored at `threshold_ref`, i.e. the law of
/// `X` given `X > threshold_ref` for a GP-tailed variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpTail {
    pub sigma: f64,
    pub gamma: f64,
    pub threshold_ref: f64,
}

impl GpTail {
    pub fn new(sigma: f64, gamma: f64, threshold_ref: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        finite("gamma", gamma)?;
        finite("threshold_ref", threshold_ref)?;
        Ok(Self { sigma, gamma, threshold_ref })
    }

    pub fn to_distribution(&self) -> Distribution {
        Distribution::GeneralizedPareto {
            location: self.threshold_ref,
            scale: self.sigma,
            shape: self.gamma,
        }
    }

    /// `H(x)`: the GP cdf of the excess `x - threshold_ref`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.to_distribution().cdf(x)
    }

    pub fn sf(&self, x: f64) -> f64 {
        self.to_distribution().sf(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn families() -> Vec<Distribution> {
        vec![
            Distribution::normal(0.3, 1.7).unwrap(),
            Distribution::normal_mixture2(0.5, 0.0, 1.0, 2.0, 1.0).unwrap(),
            Distribution::normal_mixture2(0.3, -1.0, 0.5, 2.0, 2.0).unwrap(),
            Distribution::exponential(1.3).unwrap(),
            Distribution::gamma(4.0, 4.0).unwrap(),
            Distribution::gamma(0.7, 2.0).unwrap(),
            Distribution::gp(1.0, 0.25).unwrap(),
            Distribution::gp(2.0, 0.0).unwrap(),
            Distribution::gp_at(1.0, 1.5, -0.2).unwrap(),
            Distribution::uniform_mixture(2.0 / 3.0, 0.5, 1.0, 1.0, 2.0).unwrap(),
        ]
    }

    #[test]
    fn gp_survival_examples() {
        let exp_limit = Distribution::gp(1.0, 0.0).unwrap();
        assert!((exp_limit.sf(1.0) - (-1f64).exp()).abs() < 1e-15);
        assert!((exp_limit.sf(1.0) - 0.367879).abs() < 1e-6);
        let gp = Distribution::gp(1.0, 0.25).unwrap();
        assert!((gp.sf(1.0) - 0.4096).abs() < 1e-14);
    }

    #[test]
    fn cdf_at_lower_endpoint_is_zero() {
        for d in families() {
            let (lo, _) = d.support();
            if lo.is_finite() {
                assert_eq!(d.cdf(lo), 0.0, "{d:?}");
            } else {
                assert!(d.cdf(-1e6) < 1e-300);
            }
        }
    }

    #[test]
    fn cdf_plus_survival_is_one() {
        for d in families() {
            for i in -40..=80 {
                let x = i as f64 * 0.1;
                let e = d.eval(x).unwrap();
                assert!((e.cdf + e.survival - 1.0).abs() < 1e-14, "{d:?} at {x}");
                assert!(e.pdf >= 0.0);
            }
        }
    }

    #[test]
    fn quantile_examples() {
        let gp = Distribution::gp(1.0, 0.25).unwrap();
        assert!((gp.quantile(0.5).unwrap() - 0.756828).abs() < 1e-6);
        assert!((gp.quantile(0.5).unwrap() - 4.0 * (0.5f64.powf(-0.25) - 1.0)).abs() < 1e-14);
        let e = Distribution::exponential(1.0).unwrap();
        assert!((e.quantile(1.0 - (-1f64).exp()).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(gp.quantile(0.0), Err(Error::Domain(_))));
        assert!(matches!(gp.quantile(1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn quantile_inverts_cdf() {
        for d in families() {
            for i in 1..200 {
                let p = i as f64 / 200.0;
                let x = d.quantile(p).unwrap();
                assert!((d.cdf(x) - p).abs() < 1e-10, "{d:?} p={p}");
            }
        }
    }

    #[test]
    fn pdf_is_derivative_of_cdf() {
        for d in families() {
            let (lo, hi) = d.support();
            for i in 1..100 {
                let x = d.quantile(i as f64 / 100.0).unwrap();
                let h = 1e-4 * d.scale_hint().min((x - lo) / 4.0);
                if x - 2.0 * h <= lo || x + 2.0 * h >= hi {
                    continue;
                }
                // Skip the kinks of the uniform mixture.
                if d.knots().iter().any(|k| (x - k).abs() < 4.0 * h) {
                    continue;
                }
                let num = (8.0 * (d.cdf(x + h) - d.cdf(x - h)) - (d.cdf(x + 2.0 * h) - d.cdf(x - 2.0 * h))) / (12.0 * h);
                assert!((num - d.pdf(x)).abs() < 1e-6, "{d:?} at {x}: {num} vs {}", d.pdf(x));
            }
        }
    }

    #[test]
    fn gp_threshold_stability() {
        let (sigma, gamma) = (1.0, 0.25);
        let gp = Distribution::gp(sigma, gamma).unwrap();
        for &u in &[0.5, 2.0, 10.0] {
            let shifted = Distribution::gp(sigma + gamma * u, gamma).unwrap();
            for i in 0..200 {
                let z = i as f64 * 0.25;
                let conditional = gp.sf(u + z) / gp.sf(u);
                assert!((conditional - shifted.sf(z)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mean_excess_closed_forms() {
        let gp = Distribution::gp(1.0, 0.25).unwrap();
        assert!((gp.mean_excess(2.0).unwrap() - 2.0).abs() < 1e-14);
        let e = Distribution::exponential(2.5).unwrap();
        for u in [0.0, 1.0, 7.0] {
            assert!((e.mean_excess(u).unwrap() - 0.4).abs() < 1e-14);
        }
        // Grows like u * gamma / (1 - gamma).
        let ratio = gp.mean_excess(1e8).unwrap() / 1e8;
        assert!((ratio - 1.0 / 3.0).abs() < 1e-7);
    }

    #[test]
    fn mean_excess_quadrature_matches_gp_closed_form() {
        for &(sigma, gamma) in &[(1.0, 0.25), (2.0, 0.1), (0.5, 0.4), (1.0, -0.3)] {
            let gp = Distribution::gp(sigma, gamma).unwrap();
            for &u in &[0.0, 0.3, 1.0, 1.5] {
                if gp.sf(u) == 0.0 {
                    continue;
                }
                let closed = gp.mean_excess(u).unwrap();
                let (lo, hi) = gp.support();
                let quad = numeric::integrate_split(
                    |x| gp.sf(x),
                    u.max(lo),
                    hi,
                    &[],
                    sigma,
                    QuadOptions::default(),
                )
                .unwrap()
                .value
                    / gp.sf(u);
                assert!(((quad - closed) / closed).abs() < 1e-8, "{sigma} {gamma} {u}");
            }
        }
    }

    #[test]
    fn mean_excess_errors() {
        let bounded = Distribution::gp(1.0, -0.5).unwrap();
        assert!(matches!(bounded.mean_excess(2.0), Err(Error::NullEvent(_))));
        let heavy = Distribution::gp(1.0, 1.2).unwrap();
        assert!(matches!(heavy.mean_excess(2.0), Err(Error::InfiniteMean(_))));
    }

    #[test]
    fn normal_mean_excess_by_quadrature() {
        // E(Z - u | Z > u) = phi(u)/Phi_bar(u) - u for the standard normal.
        let n = Distribution::normal(0.0, 1.0).unwrap();
        for &u in &[-1.0, 0.0, 1.5] {
            let exact = std_normal_pdf(u) / std_normal_sf(u) - u;
            assert!((n.mean_excess(u).unwrap() - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(Distribution::normal(0.0, 0.0).is_err());
        assert!(Distribution::exponential(-1.0).is_err());
        assert!(Distribution::gp(0.0, 0.1).is_err());
        assert!(Distribution::normal_mixture2(1.2, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(Distribution::uniform_mixture(0.5, 1.0, 0.5, 1.0, 2.0).is_err());
        let bad = Distribution::Normal { mean: 0.0, sd: -1.0 };
        assert!(matches!(bad.eval(0.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = Distribution::gp(1.0, 0.25).unwrap();
        let a = d.sample(&mut ChaCha8Rng::seed_from_u64(3), 100).unwrap();
        let b = d.sample(&mut ChaCha8Rng::seed_from_u64(3), 100).unwrap();
        assert_eq!(a, b);
        assert!(d.sample(&mut ChaCha8Rng::seed_from_u64(3), 0).is_err());
    }
}
