//! The extremes index `1 - p_F / p_clim` over a grid of thresholds.

use serde::{Deserialize, Serialize};

use super::cvm::{cvm_log_pvalue, cvm_statistic};
use super::{pit_calibration, score_series, ForecastObsRecord};
use crate::error::{Error, Result};
use crate::evt_fit::{fit_gp_above, shift_scale, threshold_grid, FitMethod, GpFitResult, MIN_EXCESSES};
use crate::stats;

/// One threshold of an index curve. Gap rows carry the reason and NaN
/// numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    pub order: Option<f64>,
    pub threshold: f64,
    pub m: usize,
    pub t_forecast: f64,
    pub t_clim: f64,
    pub log_p_forecast: f64,
    pub log_p_clim: f64,
    pub p_forecast: f64,
    pub p_clim: f64,
    pub index: f64,
    /// `ln p_forecast - ln p_clim`; keeps ordering information once the
    /// index itself saturates at 1.
    pub log_p_ratio: f64,
    /// `p_forecast > p_clim`: the index is negative and not interpretable.
    pub pathological: bool,
    pub gap: Option<String>,
}

impl IndexRow {
    fn gap(order: Option<f64>, threshold: f64, reason: String) -> Self {
        IndexRow {
            order,
            threshold,
            m: 0,
            t_forecast: f64::NAN,
            t_clim: f64::NAN,
            log_p_forecast: f64::NAN,
            log_p_clim: f64::NAN,
            p_forecast: f64::NAN,
            p_clim: f64::NAN,
            index: f64::NAN,
            log_p_ratio: f64::NAN,
            pathological: false,
            gap: Some(reason),
        }
    }

    pub fn is_gap(&self) -> bool {
        self.gap.is_some()
    }
}

/// `1 - p_f / p_clim`.
pub fn index_from_pvalues(p_forecast: f64, p_clim: f64) -> f64 {
    1.0 - p_forecast / p_clim
}

fn check_shared_observations(a: &[ForecastObsRecord], b: &[ForecastObsRecord]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::Empty("records"));
    }
    if let Some(i) = a.iter().zip(b).position(|(x, y)| x.y != y.y) {
        return Err(Error::InvalidParameter(format!(
            "forecast and climatology records disagree on the observation at position {i}"
        )));
    }
    Ok(())
}

fn row_from_scores(
    obs: &[f64],
    scores_f: &[f64],
    scores_clim: &[f64],
    u: f64,
    fit: &GpFitResult,
    order: Option<f64>,
) -> Result<IndexRow> {
    let idx: Vec<usize> = (0..obs.len()).filter(|&i| obs[i] > u).collect();
    if idx.len() < MIN_EXCESSES {
        return Err(Error::InsufficientData {
            needed: MIN_EXCESSES,
            got: idx.len(),
        });
    }
    let tail = shift_scale(fit, u)?;
    let vf: Vec<f64> = idx.iter().map(|&i| scores_f[i]).collect();
    let vc: Vec<f64> = idx.iter().map(|&i| scores_clim[i]).collect();
    let t_forecast = cvm_statistic(&vf, &tail)?;
    let t_clim = cvm_statistic(&vc, &tail)?;
    let log_p_forecast = cvm_log_pvalue(t_forecast);
    let log_p_clim = cvm_log_pvalue(t_clim);
    // The ratio is formed in log space: at large samples both p-values
    // underflow while their ratio does not.
    let log_p_ratio = log_p_forecast - log_p_clim;
    let index = 0.0 - log_p_ratio.exp_m1();
    Ok(IndexRow {
        order,
        threshold: u,
        m: idx.len(),
        t_forecast,
        t_clim,
        log_p_forecast,
        log_p_clim,
        p_forecast: log_p_forecast.exp(),
        p_clim: log_p_clim.exp(),
        index,
        log_p_ratio,
        pathological: log_p_forecast > log_p_clim,
        gap: None,
    })
}

/// Index at one threshold `u`, with the GP tail of the exceedances taken
/// from `fit` shifted to `u`.
pub fn extremes_index(
    records_f: &[ForecastObsRecord],
    records_clim: &[ForecastObsRecord],
    u: f64,
    fit: &GpFitResult,
) -> Result<IndexRow> {
    check_shared_observations(records_f, records_clim)?;
    let obs: Vec<f64> = records_f.iter().map(|r| r.y).collect();
    let n_above = obs.iter().filter(|&&y| y > u).count();
    if n_above < MIN_EXCESSES {
        return Err(Error::InsufficientData {
            needed: MIN_EXCESSES,
            got: n_above,
        });
    }
    let sf = score_series(records_f)?.values;
    let sc = score_series(records_clim)?.values;
    row_from_scores(&obs, &sf, &sc, u, fit, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexOptions {
    /// Order of the observation quantile used as the fitting threshold;
    /// defaults to the smallest requested order.
    pub base_order: Option<f64>,
    pub method: FitMethod,
    /// Significance level of the PIT screening band.
    pub screen_alpha: f64,
}

impl Default for IndexOptions {
    fn default() -> Self {
        IndexOptions {
            base_order: None,
            method: FitMethod::Pwm,
            screen_alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub rows: Vec<IndexRow>,
    pub fit: GpFitResult,
    /// Largest PIT deviation of the forecast under evaluation.
    pub pit_max_dev: f64,
    pub pit_band: f64,
    /// False when the forecast fails the PIT band; its index is still
    /// reported but should not be ranked.
    pub calibration_screened: bool,
    pub pit_approximate: bool,
}

/// Index over thresholds at the given observation-quantile orders. A
/// threshold that cannot be evaluated becomes a gap row.
pub fn index_curve(
    records_f: &[ForecastObsRecord],
    records_clim: &[ForecastObsRecord],
    quantile_orders: &[f64],
    options: &IndexOptions,
) -> Result<IndexReport> {
    check_shared_observations(records_f, records_clim)?;
    if quantile_orders.is_empty() {
        return Err(Error::Empty("quantile orders"));
    }
    let obs: Vec<f64> = records_f.iter().map(|r| r.y).collect();
    let thresholds = threshold_grid(&obs, quantile_orders)?;
    let base_order = options.base_order.unwrap_or(quantile_orders[0]);
    let u0 = stats::quantiles(&obs, &[base_order])?[0];
    let fit = fit_gp_above(&obs, u0, options.method)?;
    let sf = score_series(records_f)?.values;
    let sc = score_series(records_clim)?.values;
    let rows = quantile_orders
        .iter()
        .zip(&thresholds)
        .map(|(&q, &u)| {
            row_from_scores(&obs, &sf, &sc, u, &fit, Some(q))
                .unwrap_or_else(|e| IndexRow::gap(Some(q), u, e.to_string()))
        })
        .collect();
    let pit = pit_calibration(records_f)?;
    let pit_band = stats::ks_critical(records_f.len(), options.screen_alpha);
    Ok(IndexReport {
        rows,
        fit,
        pit_max_dev: pit.max_dev,
        pit_band,
        calibration_screened: pit.max_dev <= pit_band,
        pit_approximate: pit.approximate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Distribution;
    use crate::rng::Substreams;
    use crate::verification::Forecast;

    fn records(f: impl Fn(usize) -> Distribution, n: usize, seed: u64) -> Vec<ForecastObsRecord> {
        let y = Distribution::gp(1.0, 0.25)
            .unwrap()
            .sample(&mut Substreams::new(seed).stream(0), n)
            .unwrap();
        y.iter()
            .enumerate()
            .map(|(t, &y)| ForecastObsRecord::new(t as u64, Forecast::Dist(f(t)), y, None).unwrap())
            .collect()
    }

    #[test]
    fn arithmetic() {
        assert!((index_from_pvalues(0.01, 0.5) - 0.98).abs() < 1e-15);
    }

    #[test]
    fn self_comparison_is_zero() {
        let clim = records(|_| Distribution::gp(1.0, 0.25).unwrap(), 5000, 1);
        let r = index_curve(&clim, &clim, &[0.8, 0.9, 0.95], &IndexOptions::default()).unwrap();
        for row in &r.rows {
            assert_eq!(row.index, 0.0);
            assert!(!row.pathological);
        }
        let single = extremes_index(&clim, &clim, r.rows[1].threshold, &r.fit).unwrap();
        assert_eq!(single.t_forecast, r.rows[1].t_forecast);
    }

    #[test]
    fn sparse_threshold_becomes_gap() {
        let clim = records(|_| Distribution::gp(1.0, 0.25).unwrap(), 10_000, 2);
        let r = index_curve(&clim, &clim, &[0.9, 0.9999], &IndexOptions::default()).unwrap();
        assert!(!r.rows[0].is_gap());
        assert!(r.rows[1].is_gap());
        let err = extremes_index(&clim, &clim, r.rows[1].threshold, &r.fit);
        assert!(matches!(err, Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn mismatched_observations_are_rejected() {
        let a = records(|_| Distribution::exponential(1.0).unwrap(), 100, 3);
        let b = records(|_| Distribution::exponential(1.0).unwrap(), 100, 4);
        assert!(index_curve(&a, &b, &[0.5], &IndexOptions::default()).is_err());
    }
}
