//! Generalized Pareto fits to threshold excesses.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::GpTail;
use crate::error::{Error, Result};
use crate::numeric;
use crate::stats;

/// Fewer excesses than this are refused rather than extrapolated.
pub const MIN_EXCESSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Pwm,
    Mle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// GP negative log-likelihood of the excesses at the fitted parameters;
    /// infinite when an excess lies beyond a fitted finite endpoint.
    pub neg_log_lik: f64,
    /// Sample mean excess minus the fitted `sigma / (1 - gamma)`.
    pub mean_residual: f64,
    /// Set when MLE was requested but the PWM estimate was returned.
    pub fell_back_to_pwm: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpFitResult {
    pub fit: GpTail,
    pub method: FitMethod,
    pub n_excesses: usize,
    pub u0: f64,
    pub diagnostics: FitDiagnostics,
}

fn gp_nll(excesses: &[f64], sigma: f64, gamma: f64) -> f64 {
    let n = excesses.len() as f64;
    if gamma.abs() < 1e-12 {
        return n * sigma.ln() + excesses.iter().sum::<f64>() / sigma;
    }
    let mut s = 0.0;
    for &x in excesses {
        let z = 1.0 + gamma * x / sigma;
        if z <= 0.0 {
            return f64::INFINITY;
        }
        s += z.ln();
    }
    n * sigma.ln() + (1.0 + 1.0 / gamma) * s
}

fn pwm(sorted: &[f64]) -> Result<(f64, f64)> {
    let n = sorted.len();
    let a0 = stats::mean(sorted);
    let a1 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (n - 1 - i) as f64 / (n - 1) as f64 * x)
        .sum::<f64>()
        / n as f64;
    let d = a0 - 2.0 * a1;
    if d <= 0.0 {
        return Err(Error::Degenerate("probability-weighted moments imply an infinite shape".into()));
    }
    Ok((2.0 * a0 * a1 / d, 2.0 - a0 / d))
}

/// Profile likelihood in `theta = gamma / sigma`: for fixed `theta` the
/// shape maximising the likelihood is `mean(ln(1 + theta x))`.
fn mle(sorted: &[f64]) -> Option<(f64, f64)> {
    let n = sorted.len() as f64;
    let xmax = *sorted.last()?;
    let mean = stats::mean(sorted);
    let profile = |theta: f64| -> (f64, f64) {
        if theta.abs() * xmax < 1e-10 {
            return (mean, 0.0);
        }
        let g = sorted.iter().map(|&x| (theta * x).ln_1p()).sum::<f64>() / n;
        (g / theta, g)
    };
    let objective = |theta: f64| -> f64 {
        if theta * xmax <= -1.0 {
            return f64::INFINITY;
        }
        let (sigma, gamma) = profile(theta);
        if !(sigma > 0.0) || gamma <= -0.5 {
            return f64::INFINITY;
        }
        gp_nll(sorted, sigma, gamma)
    };
    let lo = -(1.0 - 1e-9) / xmax;
    let hi = 50.0 / mean;
    // Coarse scan in a stretched coordinate, then golden-section refinement.
    const STEPS: usize = 400;
    let map = |s: f64| if s < 0.0 { -lo * s } else { hi * s * s };
    let mut best = (f64::INFINITY, 0);
    for k in 0..=STEPS {
        let s = -1.0 + 2.0 * k as f64 / STEPS as f64;
        let v = objective(map(s));
        if v < best.0 {
            best = (v, k);
        }
    }
    if !best.0.is_finite() || best.1 == 0 || best.1 == STEPS {
        return None;
    }
    let s_at = |k: usize| -1.0 + 2.0 * k as f64 / STEPS as f64;
    let s = numeric::golden_min(|s| objective(map(s)), s_at(best.1 - 1), s_at(best.1 + 1), 1e-13);
    let (sigma, gamma) = profile(map(s));
    if sigma > 0.0 && gamma > -0.5 && sigma.is_finite() && gamma.is_finite() {
        Some((sigma, gamma))
    } else {
        None
    }
}

/// Fits `GP(sigma, gamma)` to excesses (values above a threshold, minus it).
/// The result is anchored at `u0 = 0`.
pub fn fit_gp(excesses: &[f64], method: FitMethod) -> Result<GpFitResult> {
    if excesses.len() < MIN_EXCESSES {
        return Err(Error::InsufficientData {
            needed: MIN_EXCESSES,
            got: excesses.len(),
        });
    }
    if let Some(&bad) = excesses.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::Domain(format!("excesses must be finite and non-negative, got {bad}")));
    }
    let sorted = stats::sorted(excesses);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::Degenerate("excesses have zero spread".into()));
    }
    let (mut sigma, mut gamma) = pwm(&sorted)?;
    let mut fell_back = false;
    if method == FitMethod::Mle {
        match mle(&sorted) {
            Some((s, g)) => {
                sigma = s;
                gamma = g;
            }
            None => fell_back = true,
        }
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Degenerate(format!("fitted scale {sigma} is not positive")));
    }
    let mean_residual = if gamma < 1.0 {
        stats::mean(&sorted) - sigma / (1.0 - gamma)
    } else {
        f64::NAN
    };
    Ok(GpFitResult {
        fit: GpTail::new(sigma, gamma, 0.0)?,
        method,
        n_excesses: sorted.len(),
        u0: 0.0,
        diagnostics: FitDiagnostics {
            neg_log_lik: gp_nll(&sorted, sigma, gamma),
            mean_residual,
            fell_back_to_pwm: fell_back,
        },
    })
}

/// Fits the excesses `x - u0` of the observations strictly above `u0`.
pub fn fit_gp_above(observations: &[f64], u0: f64, method: FitMethod) -> Result<GpFitResult> {
    let excesses: Vec<f64> = observations.iter().filter(|&&x| x > u0).map(|&x| x - u0).collect();
    let mut r = fit_gp(&excesses, method)?;
    r.u0 = u0;
    r.fit.threshold_ref = u0;
    Ok(r)
}

/// Moves a GP tail to a higher threshold: `sigma_w = sigma + gamma (w - u)`.
pub fn shift_tail(tail: &GpTail, w: f64) -> Result<GpTail> {
    if w < tail.threshold_ref {
        return Err(Error::BelowThreshold {
            w,
            u0: tail.threshold_ref,
        });
    }
    let sigma = tail.sigma + tail.gamma * (w - tail.threshold_ref);
    if !(sigma > 0.0) {
        return Err(Error::EndpointExceeded(w));
    }
    Ok(GpTail {
        sigma,
        gamma: tail.gamma,
        threshold_ref: w,
    })
}

/// Threshold-stable scale of a fit at `w >= u0`.
pub fn shift_scale(fit: &GpFitResult, w: f64) -> Result<GpTail> {
    let base = GpTail {
        threshold_ref: fit.u0,
        ..fit.fit
    };
    shift_tail(&base, w)
}

/// Empirical (type-7) quantiles of the observations at sorted orders.
pub fn threshold_grid(observations: &[f64], orders: &[f64]) -> Result<Vec<f64>> {
    if orders.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Domain("quantile orders must be sorted".into()));
    }
    stats::quantiles(observations, orders)
}

/// Fits above every threshold in parallel; failures are kept per threshold.
pub fn fit_over_thresholds(
    observations: &[f64],
    thresholds: &[f64],
    method: FitMethod,
) -> Vec<Result<GpFitResult>> {
    thresholds
        .par_iter()
        .map(|&u| fit_gp_above(observations, u, method))
        .collect()
}
