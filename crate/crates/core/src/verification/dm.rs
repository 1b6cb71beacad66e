//! Diebold–Mariano tests of equal expected score.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Minimum paired sample size.
pub const MIN_PAIRS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    /// Positive when `b` has the lower mean score.
    pub stat: f64,
    pub p_two_sided: f64,
    /// Set when the loss differential has zero variance but nonzero mean.
    pub infinite: bool,
}

/// Test on `d_t = a_t - b_t` with the plain sample variance.
pub fn diebold_mariano(scores_a: &[f64], scores_b: &[f64]) -> Result<DmResult> {
    diebold_mariano_hac(scores_a, scores_b, 0)
}

/// As [`diebold_mariano`], with a Bartlett-weighted long-run variance over
/// `lag` autocovariances for serially dependent data.
pub fn diebold_mariano_hac(scores_a: &[f64], scores_b: &[f64], lag: usize) -> Result<DmResult> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::LengthMismatch(scores_a.len(), scores_b.len()));
    }
    let n = scores_a.len();
    if n < MIN_PAIRS {
        return Err(Error::InsufficientData { needed: MIN_PAIRS, got: n });
    }
    if lag >= n {
        return Err(Error::InvalidParameter(format!("lag {lag} must be below the sample size {n}")));
    }
    let d: Vec<f64> = scores_a.iter().zip(scores_b).map(|(a, b)| a - b).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let autocov = |k: usize| -> f64 {
        d[k..].iter().zip(&d[..n - k]).map(|(x, y)| (x - mean) * (y - mean)).sum::<f64>()
    };
    // Unbiased at lag 0, matching the iid statistic.
    let mut var = autocov(0) / (nf - 1.0);
    for k in 1..=lag {
        let w = 1.0 - k as f64 / (lag as f64 + 1.0);
        var += 2.0 * w * autocov(k) / nf;
    }
    if var <= 0.0 {
        return Ok(if mean == 0.0 {
            DmResult { stat: 0.0, p_two_sided: 1.0, infinite: false }
        } else {
            DmResult {
                stat: f64::INFINITY.copysign(mean),
                p_two_sided: 0.0,
                infinite: true,
            }
        });
    }
    let stat = mean / (var / nf).sqrt();
    Ok(DmResult {
        stat,
        p_two_sided: erfc(stat.abs() * FRAC_1_SQRT_2),
        infinite: false,
    })
}

/// `M[r][c]` tests column `c` against row `r`; positive entries mean the
/// row forecast scored lower. The diagonal is zero.
pub fn dm_matrix(series: &[&[f64]], lag: usize) -> Result<Vec<Vec<DmResult>>> {
    let k = series.len();
    let mut out = vec![vec![DmResult { stat: 0.0, p_two_sided: 1.0, infinite: false }; k]; k];
    for r in 0..k {
        for c in 0..k {
            if r != c {
                out[r][c] = diebold_mariano_hac(series[c], series[r], lag)?;
            }
        }
    }
    Ok(out)
}
