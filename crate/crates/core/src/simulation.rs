//! Two hidden-state designs with known conditional laws.
//!
//! * `Nn`: `Delta ~ N(0, 1)`, `Y | Delta ~ N(Delta, 1)`.
//! * `Ge`: `Delta ~ Gamma(4, rate 4)`, `Y | Delta ~ Exp(Delta)`; marginally
//!   `Y ~ GP(1, 1/4)`.
//!
//! Each record draws, in this order and from its own substream of the
//! seed: `Delta`, `y`, then the unfocused forecaster's random bias. The
//! four forecasters therefore see identical observations for a given seed.

use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::rng::Substreams;
use crate::scoring;
use crate::stats;
use crate::verification::{Forecast, ForecastObsRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Nn,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForecasterKind {
    Ideal,
    Climatological,
    Unfocused,
    Extremist,
}

impl ForecasterKind {
    pub const ALL: [ForecasterKind; 4] = [
        ForecasterKind::Ideal,
        ForecasterKind::Climatological,
        ForecasterKind::Unfocused,
        ForecasterKind::Extremist,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ForecasterKind::Ideal => "ideal",
            ForecasterKind::Climatological => "climatological",
            ForecasterKind::Unfocused => "unfocused",
            ForecasterKind::Extremist => "extremist",
        }
    }
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Nn => "nn",
            Model::Ge => "ge",
        }
    }

    /// Unconditional law of `Y`.
    pub fn climatology(self) -> Distribution {
        match self {
            Model::Nn => Distribution::Normal {
                mean: 0.0,
                sd: std::f64::consts::SQRT_2,
            },
            Model::Ge => Distribution::GeneralizedPareto {
                location: 0.0,
                scale: 1.0,
                shape: 0.25,
            },
        }
    }

    /// Law of `Y` given the hidden state.
    pub fn truth(self, hidden: f64) -> Result<Distribution> {
        match self {
            Model::Nn => Distribution::normal(hidden, 1.0),
            Model::Ge => Distribution::exponential(hidden),
        }
    }

    /// The forecaster's law given the hidden state and its bias draw.
    pub fn forecast(self, kind: ForecasterKind, hidden: f64, bias: f64) -> Result<Distribution> {
        match (self, kind) {
            (_, ForecasterKind::Ideal) => self.truth(hidden),
            (_, ForecasterKind::Climatological) => Ok(self.climatology()),
            (Model::Nn, ForecasterKind::Unfocused) => {
                Distribution::normal_mixture2(0.5, hidden, 1.0, hidden + bias, 1.0)
            }
            (Model::Nn, ForecasterKind::Extremist) => Distribution::normal(hidden + 2.5, 1.0),
            (Model::Ge, ForecasterKind::Unfocused) => Distribution::exponential(hidden / bias),
            (Model::Ge, ForecasterKind::Extremist) => Distribution::exponential(hidden / 1.5),
        }
    }
}

macro_rules! parse_enum {
    ($ty:ty, $($name:literal => $v:expr),+) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($name => Ok($v),)+
                    _ => Err(Error::InvalidParameter(format!("unknown {}: `{s}`", stringify!($ty)))),
                }
            }
        }
    };
}

parse_enum!(Model, "nn" => Model::Nn, "ge" => Model::Ge);
parse_enum!(ForecasterKind,
    "ideal" => ForecasterKind::Ideal,
    "climatological" => ForecasterKind::Climatological,
    "clim" => ForecasterKind::Climatological,
    "unfocused" => ForecasterKind::Unfocused,
    "extremist" => ForecasterKind::Extremist);

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for ForecasterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Hidden state, observation and unfocused bias of one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub hidden: f64,
    pub y: f64,
    pub bias: f64,
}

fn ge_shape_rate() -> rand_distr::Gamma<f64> {
    rand_distr::Gamma::new(4.0, 0.25).expect("valid gamma parameters")
}

/// The draws of time step `t`; a pure function of `(model, seed, t)`.
pub fn draw(model: Model, seed: u64, t: u64) -> Draw {
    let mut rng = Substreams::new(seed).stream(t);
    match model {
        Model::Nn => {
            let hidden: f64 = rng.sample(StandardNormal);
            let noise: f64 = rng.sample(StandardNormal);
            let bias = if rng.random::<bool>() { 2.0 } else { -2.0 };
            Draw {
                hidden,
                y: hidden + noise,
                bias,
            }
        }
        Model::Ge => {
            let hidden = rng.sample(ge_shape_rate());
            let u: f64 = rng.sample(Open01);
            let y = -u.ln() / hidden;
            let u1 = rng.random_range(0.5..1.0);
            let u2 = rng.random_range(1.0..2.0);
            Draw {
                hidden,
                y,
                bias: 2.0 / 3.0 * u1 + 1.0 / 3.0 * u2,
            }
        }
    }
}

/// Records `t = 0..T` for one forecaster, generated in parallel and
/// returned in time order.
pub fn simulate(model: Model, kind: ForecasterKind, t_len: usize, seed: u64) -> Result<Vec<ForecastObsRecord>> {
    if t_len == 0 {
        return Err(Error::InvalidParameter("T must be at least 1".into()));
    }
    (0..t_len as u64)
        .into_par_iter()
        .map(|t| {
            let d = draw(model, seed, t);
            let f = model.forecast(kind, d.hidden, d.bias)?;
            ForecastObsRecord::new(t, Forecast::Dist(f), d.y, Some(d.hidden))
        })
        .collect()
}

pub fn simulate_nn(t_len: usize, kind: ForecasterKind, seed: u64) -> Result<Vec<ForecastObsRecord>> {
    simulate(Model::Nn, kind, t_len, seed)
}

pub fn simulate_ge(t_len: usize, kind: ForecasterKind, seed: u64) -> Result<Vec<ForecastObsRecord>> {
    simulate(Model::Ge, kind, t_len, seed)
}

/// CRPS of the GE climatology written directly in the observation:
/// `y - 8/3 (1 - (1 + y/4)^-3) + 4/7` for `y >= 0`.
pub fn ge_climatology_crps(y: f64) -> f64 {
    if y < 0.0 {
        return 4.0 / 7.0 - y;
    }
    y - 8.0 / 3.0 * (1.0 - (1.0 + 0.25 * y).powi(-3)) + 4.0 / 7.0
}

/// Mean quantile-weighted CRPS per forecaster over a grid of threshold
/// orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub model: Model,
    pub forecasters: Vec<ForecasterKind>,
    pub orders: Vec<f64>,
    pub thresholds: Vec<f64>,
    /// `mean_wcrps[i][k]`: order `i`, forecaster `k`.
    pub mean_wcrps: Vec<Vec<f64>>,
    pub log1p_mean_wcrps: Vec<Vec<f64>>,
    /// 1 is the lowest mean score.
    pub ranks: Vec<Vec<usize>>,
    pub mean_crps: Vec<f64>,
    pub crps_ranks: Vec<usize>,
}

fn ranks(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut r = vec![0; values.len()];
    for (pos, &i) in idx.iter().enumerate() {
        r[i] = pos + 1;
    }
    r
}

pub fn wcrps_ranking_curve(model: Model, t_len: usize, quantile_orders: &[f64], seed: u64) -> Result<RankingTable> {
    let forecasters = ForecasterKind::ALL.to_vec();
    let sets = forecasters
        .iter()
        .map(|&k| simulate(model, k, t_len, seed))
        .collect::<Result<Vec<_>>>()?;
    let obs: Vec<f64> = sets[0].iter().map(|r| r.y).collect();
    let thresholds = stats::quantiles(&obs, quantile_orders)?;
    let mean_score = |set: &[ForecastObsRecord], q: Option<f64>| -> Result<f64> {
        let s: f64 = set
            .par_iter()
            .map(|r| {
                let d = r.forecast.as_distribution().expect("simulated forecasts are distributions");
                match q {
                    Some(q) => scoring::wcrps_quantile(d, r.y, q).map(|v| v.value),
                    None => scoring::crps(d, r.y),
                }
            })
            .sum::<Result<f64>>()?;
        Ok(s / set.len() as f64)
    };
    let mut mean_wcrps = Vec::with_capacity(thresholds.len());
    for &q in &thresholds {
        mean_wcrps.push(sets.iter().map(|s| mean_score(s, Some(q))).collect::<Result<Vec<_>>>()?);
    }
    let mean_crps = sets.iter().map(|s| mean_score(s, None)).collect::<Result<Vec<_>>>()?;
    Ok(RankingTable {
        model,
        forecasters,
        orders: quantile_orders.to_vec(),
        thresholds,
        log1p_mean_wcrps: mean_wcrps.iter().map(|row| row.iter().map(|v| v.ln_1p()).collect()).collect(),
        ranks: mean_wcrps.iter().map(|row| ranks(row)).collect(),
        crps_ranks: ranks(&mean_crps),
        mean_wcrps,
        mean_crps,
    })
}
