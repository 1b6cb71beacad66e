//! Pareto expected-score curve, the ambiguity cup, and tail splicing.
//!
//! For an observation `Y ~ GP(sigma, gamma)` scored against forecasts
//! `GP(a sigma, a gamma)`, the expected CRPS is a function of `a` alone,
//! minimised at `a = 1`. Forecasts on either side of the minimum can
//! share the same expected score; the cup between `a = 0` and its mirror
//! point `a0 = 3 / (1 + gamma)` measures how large that ambiguity is.

use serde::{Deserialize, Serialize};

pub use crate::distributions::SplicedTail;
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::numeric::{self, QuadOptions};
use crate::scoring::WeightFunction;

/// Below this shape the cup area uses a series for the `log(.)/gamma^2` term.
const AREA_SERIES_CUTOFF: f64 = 1e-3;

fn check_scale(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("scale must be > 0, got {sigma}")))
    }
}

fn phi_unchecked(sigma: f64, gamma: f64, a: f64) -> f64 {
    sigma / (1.0 - gamma) + 2.0 * a * sigma * (0.5 / (2.0 - a * gamma) - 1.0 / (1.0 + a - a * gamma))
}

/// Expected CRPS of the forecast `GP(a sigma, a gamma)` under
/// `Y ~ GP(sigma, gamma)`.
pub fn expected_crps_pareto(sigma: f64, gamma: f64, a: f64) -> Result<f64> {
    check_scale(sigma)?;
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("shape must lie in [0, 1), got {gamma}")));
    }
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::InvalidParameter(format!("proportionality must be >= 0, got {a}")));
    }
    if a * gamma >= 1.0 {
        return Err(Error::InfiniteMean(a * gamma));
    }
    Ok(phi_unchecked(sigma, gamma, a))
}

/// Geometry of the region where two forecasts with different tails share
/// one expected score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CupGeometry {
    pub gamma: f64,
    pub sigma: f64,
    /// Right edge of the cup, where the curve returns to its `a = 0` level.
    pub a0: f64,
    pub area: f64,
    /// Set when `gamma >= 0.5`: the forecast shape at the cup edge reaches
    /// one, outside the range where the closed form was established.
    pub beyond_established_range: bool,
}

impl CupGeometry {
    /// Curve values `(a, phi(a))` on `n` evenly spaced points of `[0, a_max]`.
    pub fn curve(&self, a_max: f64, n: usize) -> Vec<(f64, f64)> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let a = a_max * i as f64 / (n - 1) as f64;
                (a, phi_unchecked(self.sigma, self.gamma, a))
            })
            .collect()
    }
}

fn cup_edge(gamma: f64) -> f64 {
    3.0 / (1.0 + gamma)
}

/// `[log(1 - gamma/2) - log(1 + gamma) + 3 gamma / 2] / gamma^2`.
fn log_ratio_term(gamma: f64) -> f64 {
    if gamma.abs() < AREA_SERIES_CUTOFF {
        // sum_{k>=2} ((-1)^k - 2^-k) / k * gamma^(k-2), through gamma^4.
        let mut s = 0.0;
        let mut g = 1.0;
        for k in 2..=6 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s += (sign - 0.5f64.powi(k)) / k as f64 * g;
            g *= gamma;
        }
        s
    } else {
        ((-0.5 * gamma).ln_1p() - gamma.ln_1p() + 1.5 * gamma) / (gamma * gamma)
    }
}

/// Area of the ambiguity cup `phi(0) a0 - int_0^a0 phi(a) da`.
pub fn ambiguity_region(gamma: f64, sigma: f64) -> Result<CupGeometry> {
    check_scale(sigma)?;
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("shape must lie in [0, 1), got {gamma}")));
    }
    let a0 = cup_edge(gamma);
    let bracket = if gamma < AREA_SERIES_CUTOFF {
        log_ratio_term(gamma) + 1.5 / (1.0 - gamma)
            - ((4.0 - 2.0 * gamma) / (1.0 + gamma)).ln() / (1.0 - gamma).powi(2)
    } else {
        a0 * (1.0 + gamma) / (2.0 * gamma * (1.0 - gamma))
            - ((1.0 - gamma) * a0).ln_1p() / (1.0 - gamma).powi(2)
            + (-0.5 * a0 * gamma).ln_1p() / (gamma * gamma)
    };
    Ok(CupGeometry {
        gamma,
        sigma,
        a0,
        area: 2.0 * sigma * bracket,
        beyond_established_range: gamma >= 0.5,
    })
}

/// Cup area by direct quadrature of its definition.
pub fn ambiguity_area_quadrature(gamma: f64, sigma: f64) -> Result<f64> {
    check_scale(sigma)?;
    let a0 = cup_edge(gamma);
    let integral = numeric::integrate(|a| phi_unchecked(sigma, gamma, a), 0.0, a0, QuadOptions::default())?;
    Ok(phi_unchecked(sigma, gamma, 0.0) * a0 - integral.value)
}

/// Location of the minimum of `phi` inside the cup.
pub fn cup_minimiser(gamma: f64, sigma: f64) -> f64 {
    numeric::golden_min(|a| phi_unchecked(sigma, gamma, a), 0.0, cup_edge(gamma), 1e-12)
}

/// The other proportionality `a'` with the same expected score as `a`.
pub fn ambiguous_counterpart(a: f64, gamma: f64, sigma: f64) -> Result<f64> {
    check_scale(sigma)?;
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("shape must lie in [0, 1), got {gamma}")));
    }
    let a0 = cup_edge(gamma);
    if !(a > 0.0 && a < a0) {
        return Err(Error::OutsideCup { a, a0 });
    }
    let amin = cup_minimiser(gamma, sigma);
    // The curve is flat to second order at its minimum; golden-section
    // locates it to about sqrt(machine epsilon).
    if (a - amin).abs() < 1e-7 {
        return Err(Error::UniquePoint(a));
    }
    let level = phi_unchecked(sigma, gamma, a);
    let f = |x: f64| phi_unchecked(sigma, gamma, x) - level;
    let (lo, hi) = if a > amin { (0.0, amin) } else { (amin, a0) };
    numeric::brent(f, lo, hi, 1e-14)
}

/// Splices `replacement` (a law on `[0, inf)`) onto `base` above `u`.
///
/// The ordering `1 - H(x - u) <= (1 - F(x)) / (1 - F(u))` is checked on a
/// 10^4-point log-spaced grid of excesses.
pub fn splice_tail(base: Distribution, replacement: Distribution, u: f64) -> Result<SplicedTail> {
    base.validate()?;
    replacement.validate()?;
    if !u.is_finite() {
        return Err(Error::Construction(format!("splice point must be finite, got {u}")));
    }
    let (rlo, _) = replacement.support();
    if rlo < 0.0 {
        return Err(Error::Construction("replacement must be supported on [0, inf)".into()));
    }
    replacement
        .mean()
        .map_err(|e| Error::Construction(format!("replacement needs a finite mean: {e}")))?;
    let tail_u = base.sf(u);
    if tail_u <= 0.0 {
        return Err(Error::Construction(format!("base has no mass above {u}")));
    }
    let (_, bhi) = base.support();
    let spread = base.scale_hint().max(base.mean_excess(u).unwrap_or(0.0)).max(f64::MIN_POSITIVE);
    let lo = (spread * 1e-6).ln();
    let hi = if bhi.is_finite() {
        (bhi - u).ln()
    } else {
        (spread * 1e6).ln()
    };
    const GRID: usize = 10_000;
    for i in 0..GRID {
        let z = (lo + (hi - lo) * i as f64 / (GRID - 1) as f64).exp();
        let allowed = base.sf(u + z) / tail_u;
        let actual = replacement.sf(z);
        if actual > allowed * (1.0 + 1e-10) + 1e-300 {
            return Err(Error::Construction(format!(
                "ordering violated at excess {z}: replacement survival {actual} exceeds {allowed}"
            )));
        }
    }
    Ok(SplicedTail {
        base,
        replacement,
        splice_point: u,
    })
}

impl SplicedTail {
    pub fn into_distribution(self) -> Distribution {
        Distribution::Spliced(Box::new(self))
    }
}

/// Upper bound `2 (1 - F(u))^2 E(W(X) - W(u) | X > u)` on the change of
/// expected weighted CRPS caused by any admissible splice at `u`.
pub fn wcrps_gap_bound(base: &Distribution, u: f64, weight: &WeightFunction) -> Result<f64> {
    base.validate()?;
    let tail = base.sf(u);
    if tail <= 0.0 {
        return Ok(0.0);
    }
    if let WeightFunction::Unit = weight {
        let me = base.mean_excess(u).map_err(|e| match e {
            Error::InfiniteMean(s) => Error::Divergent(format!("tail shape {s} gives E W(X) = inf")),
            other => other,
        })?;
        return Ok(2.0 * tail * tail * me);
    }
    if let Err(Error::InfiniteMean(s)) = base.mean() {
        return Err(Error::Divergent(format!("tail shape {s} gives E W(X) = inf")));
    }
    // (1 - F(u)) E(W(X) - W(u) | X > u) = int_u^inf w(x) (1 - F(x)) dx.
    let (_, hi) = base.support();
    let mut knots = base.knots();
    if let WeightFunction::QuantileIndicator(q) = weight {
        knots.push(*q);
    }
    let r = numeric::integrate_split(
        |x| weight.weight(x) * base.sf(x),
        u,
        hi,
        &knots,
        base.scale_hint(),
        QuadOptions::default(),
    )?;
    Ok(2.0 * tail * r.value)
}
