//! Diagnostics built on the distribution of CRPS values.
//!
//! Paired scores `CRPS(F_t, y_t)` are compared with scores against a
//! shuffled observation vector, with the climatological forecast, and
//! with a generalized Pareto tail on exceedances.

mod cvm;
mod dm;
mod index;

pub use cvm::{cvm_from_probabilities, cvm_log_pvalue, cvm_pvalue, cvm_statistic};
pub use dm::{diebold_mariano, diebold_mariano_hac, dm_matrix, DmResult};
pub use index::{
    extremes_index, index_curve, index_from_pvalues, IndexOptions, IndexReport, IndexRow,
};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::evt_fit::{fit_gp_above, FitMethod, GpFitResult, MIN_EXCESSES};
use crate::rng::Substreams;
use crate::scoring::{self, crps_ensemble};
use crate::stats;

/// A forecast issued as a parametric law or as ensemble members.
#[derive(Debug, Clone, PartialEq)]
pub enum Forecast {
    Dist(Distribution),
    Ensemble(Vec<f64>),
}

impl Forecast {
    pub fn crps(&self, y: f64) -> Result<f64> {
        match self {
            Forecast::Dist(d) => scoring::crps(d, y),
            Forecast::Ensemble(m) => Ok(crps_ensemble(m, y)?.value),
        }
    }

    pub fn score(&self, y: f64, rule: ScoreRule) -> Result<f64> {
        match (rule, self) {
            (ScoreRule::Crps, _) => self.crps(y),
            (ScoreRule::QuantileWeighted(q), Forecast::Dist(d)) => Ok(scoring::wcrps_quantile(d, y, q)?.value),
            (ScoreRule::QuantileWeighted(q), Forecast::Ensemble(m)) => {
                // CRPS(F, max(y, q)) - CRPS(F, q) with the ensemble's empirical law.
                Ok(crps_ensemble(m, y.max(q))?.value - crps_ensemble(m, q)?.value)
            }
        }
    }

    pub fn as_distribution(&self) -> Option<&Distribution> {
        match self {
            Forecast::Dist(d) => Some(d),
            Forecast::Ensemble(_) => None,
        }
    }
}

/// Which score a series holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScoreRule {
    Crps,
    /// Weight `1{x >= q}` at the threshold value `q`.
    QuantileWeighted(f64),
}

/// One time step: the forecast, the observation, and (in simulations) the
/// hidden state that determines the true conditional law.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastObsRecord {
    pub t: u64,
    pub forecast: Forecast,
    pub y: f64,
    pub hidden: Option<f64>,
}

impl ForecastObsRecord {
    pub fn new(t: u64, forecast: Forecast, y: f64, hidden: Option<f64>) -> Result<Self> {
        if !y.is_finite() {
            return Err(Error::InvalidParameter(format!("observation must be finite, got {y}")));
        }
        match &forecast {
            Forecast::Dist(d) => d.validate()?,
            Forecast::Ensemble(m) if m.is_empty() => return Err(Error::Empty("ensemble")),
            Forecast::Ensemble(m) => {
                if m.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter("ensemble members must be finite".into()));
                }
            }
        }
        Ok(Self { t, forecast, y, hidden })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pairing {
    Paired,
    Shuffled,
}

/// Scores aligned with the observations they were computed against.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    pub values: Vec<f64>,
    pub pairing: Pairing,
    pub obs: Vec<f64>,
}

impl ScoreSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        stats::mean(&self.values)
    }
}

fn score_against(records: &[ForecastObsRecord], obs: &[f64], rule: ScoreRule) -> Result<Vec<f64>> {
    if records.is_empty() {
        return Err(Error::Empty("records"));
    }
    records
        .par_iter()
        .zip(obs.par_iter())
        .enumerate()
        .map(|(i, (r, &y))| r.forecast.score(y, rule).map_err(|e| e.at_record(i)))
        .collect()
}

/// Scores every forecast against its own observation.
pub fn score_series(records: &[ForecastObsRecord]) -> Result<ScoreSeries> {
    score_series_with(records, ScoreRule::Crps)
}

pub fn score_series_with(records: &[ForecastObsRecord], rule: ScoreRule) -> Result<ScoreSeries> {
    let obs: Vec<f64> = records.iter().map(|r| r.y).collect();
    Ok(ScoreSeries {
        values: score_against(records, &obs, rule)?,
        pairing: Pairing::Paired,
        obs,
    })
}

/// Seeded Fisher–Yates permutation of `0..n`.
pub fn shuffle_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut Substreams::new(seed).stream(0));
    perm
}

/// Scores `F_t` against `y_{perm[t]}`.
pub fn permuted_score_series(records: &[ForecastObsRecord], perm: &[usize]) -> Result<ScoreSeries> {
    if perm.len() != records.len() {
        return Err(Error::LengthMismatch(perm.len(), records.len()));
    }
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidParameter("not a permutation".into()));
        }
    }
    let obs: Vec<f64> = perm.iter().map(|&p| records[p].y).collect();
    Ok(ScoreSeries {
        values: score_against(records, &obs, ScoreRule::Crps)?,
        pairing: Pairing::Shuffled,
        obs,
    })
}

/// Scores against a seeded shuffle of the observation vector.
pub fn shuffled_score_series(records: &[ForecastObsRecord], seed: u64) -> Result<ScoreSeries> {
    permuted_score_series(records, &shuffle_permutation(records.len(), seed))
}

/// qq and pp data for two score samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqPp {
    /// Pairs of order statistics.
    pub qq: Vec<(f64, f64)>,
    /// `(F1(t), F2(t))` on a grid of pooled sample values.
    pub pp: Vec<(f64, f64)>,
    /// Two-sample Kolmogorov–Smirnov distance.
    pub ks: f64,
}

fn ecdf(sorted: &[f64], t: f64) -> f64 {
    sorted.partition_point(|&v| v <= t) as f64 / sorted.len() as f64
}

/// qq/pp data; at most `max_points` points are emitted per plot, the KS
/// distance is always exact.
pub fn qq_pp(s1: &ScoreSeries, s2: &ScoreSeries, max_points: usize) -> Result<QqPp> {
    if s1.len() != s2.len() {
        return Err(Error::LengthMismatch(s1.len(), s2.len()));
    }
    if s1.is_empty() {
        return Err(Error::Empty("score series"));
    }
    let a = stats::sorted(&s1.values);
    let b = stats::sorted(&s2.values);
    let n = a.len();
    let keep = max_points.clamp(2, n.max(2));
    let idx: Vec<usize> = if n <= keep {
        (0..n).collect()
    } else {
        (0..keep).map(|k| k * (n - 1) / (keep - 1)).collect()
    };
    let qq = idx.iter().map(|&i| (a[i], b[i])).collect();
    let mut pooled: Vec<f64> = a.iter().chain(&b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let m = pooled.len();
    let pp = (0..keep.min(m))
        .map(|k| {
            let t = pooled[k * (m - 1) / (keep.min(m) - 1).max(1)];
            (ecdf(&a, t), ecdf(&b, t))
        })
        .collect();
    Ok(QqPp {
        qq,
        pp,
        ks: stats::ks_two_sample(&a, &b),
    })
}

/// `int (F_f(t) - F_g(t)) dt` between the empirical cdfs of two paired
/// score samples, integrated exactly over the pooled support.
pub fn discrepancy(scores_f: &ScoreSeries, scores_g: &ScoreSeries) -> Result<f64> {
    if scores_f.is_empty() || scores_g.is_empty() {
        return Err(Error::Empty("score series"));
    }
    if scores_f.pairing != Pairing::Paired || scores_g.pairing != Pairing::Paired {
        return Err(Error::InvalidParameter("discrepancy needs paired scores".into()));
    }
    let f = stats::sorted(&scores_f.values);
    let g = stats::sorted(&scores_g.values);
    let (nf, ng) = (f.len() as f64, g.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut t = f[0].min(g[0]);
    let mut total = 0.0;
    while i < f.len() || j < g.len() {
        let next = match (f.get(i), g.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / nf - j as f64 / ng) * (next - t);
        t = next;
        while i < f.len() && f[i] <= t {
            i += 1;
        }
        while j < g.len() && g[j] <= t {
            j += 1;
        }
    }
    Ok(total)
}

/// Probability integral transform values and their largest deviation from
/// uniformity.
#[derive(Debug, Clone, PartialEq)]
pub struct PitResult {
    pub pit: Vec<f64>,
    pub max_dev: f64,
    /// Set for ensemble forecasts, where a mid-rank PIT is used.
    pub approximate: bool,
}

pub fn pit_calibration(records: &[ForecastObsRecord]) -> Result<PitResult> {
    if records.is_empty() {
        return Err(Error::Empty("records"));
    }
    let approximate = records.iter().any(|r| matches!(r.forecast, Forecast::Ensemble(_)));
    let pit: Vec<f64> = records
        .par_iter()
        .map(|r| match &r.forecast {
            Forecast::Dist(d) => d.cdf(r.y),
            Forecast::Ensemble(m) => {
                let below = m.iter().filter(|&&v| v < r.y).count() as f64;
                let ties = m.iter().filter(|&&v| v == r.y).count() as f64;
                (below + 0.5 * ties + 0.5) / (m.len() as f64 + 1.0)
            }
        })
        .collect();
    let sorted = stats::sorted(&pit);
    let max_dev = stats::ks_one_sample(&sorted, |p| p.clamp(0.0, 1.0));
    Ok(PitResult { pit, max_dev, approximate })
}

/// `mean_t G_t^{-1}(F_t(x)) - x` on a grid, for records whose true
/// conditional law `G_t` is given by `truth(hidden_t)`.
pub fn exceedance_calibration<T>(records: &[ForecastObsRecord], truth: T, x_grid: &[f64]) -> Result<Vec<(f64, f64)>>
where
    T: Fn(f64) -> Result<Distribution> + Sync,
{
    if records.is_empty() {
        return Err(Error::Empty("records"));
    }
    let laws: Vec<(Distribution, Distribution)> = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let h = r
                .hidden
                .ok_or_else(|| Error::Unavailable("true conditional law needs the hidden state".into()))?;
            let f = r
                .forecast
                .as_distribution()
                .ok_or_else(|| Error::Unavailable("exceedance calibration needs distribution forecasts".into()))?;
            Ok((f.clone(), truth(h).map_err(|e| e.at_record(i))?))
        })
        .collect::<Result<_>>()?;
    let lo = f64::MIN_POSITIVE;
    let hi = 1.0 - f64::EPSILON;
    Ok(x_grid
        .iter()
        .map(|&x| {
            let s: f64 = laws
                .par_iter()
                .map(|(f, g)| g.quantile(f.cdf(x).clamp(lo, hi)).expect("level clamped into (0, 1)"))
                .sum();
            (x, s / laws.len() as f64 - x)
        })
        .collect())
}

/// GP fit on scores whose paired observation exceeds `u`. Excesses are
/// taken over the smallest selected score.
pub fn tail_shape_of_scores(series: &ScoreSeries, u: f64, method: FitMethod) -> Result<GpFitResult> {
    let selected: Vec<f64> = series
        .values
        .iter()
        .zip(&series.obs)
        .filter(|(_, &y)| y > u)
        .map(|(&v, _)| v)
        .collect();
    if selected.len() < MIN_EXCESSES + 1 {
        return Err(Error::InsufficientData {
            needed: MIN_EXCESSES + 1,
            got: selected.len(),
        });
    }
    let floor = selected.iter().copied().fold(f64::INFINITY, f64::min);
    if selected.iter().all(|&v| v == floor) {
        return Err(Error::Degenerate("selected scores are all equal".into()));
    }
    fit_gp_above(&selected, floor, method)
}
