//! JSON and JSON-lines serialization of forecasts and records.
//!
//! A distribution is written as `{"family": name, "params": [...]}`; a
//! spliced law adds `"parts": [base, replacement]` and carries its splice
//! point as the single parameter. Parameter orders:
//!
//! | family              | params                          |
//! |---------------------|---------------------------------|
//! | `normal`            | mean, sd                        |
//! | `normal_mixture2`   | weight, mean1, sd1, mean2, sd2  |
//! | `exponential`       | rate                            |
//! | `gamma`             | shape, rate                     |
//! | `generalized_pareto`| scale, shape \[, location\]     |
//! | `uniform_mixture`   | weight, low1, high1, low2, high2|
//! | `spliced`           | splice point                    |

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::distributions::{Distribution, Family, SplicedTail};
use crate::error::{Error, Result};
use crate::verification::{Forecast, ForecastObsRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub family: String,
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parts: Option<Vec<DistributionSpec>>,
}

fn arity(family: &str, params: &[f64], allowed: &[usize]) -> Result<()> {
    if allowed.contains(&params.len()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "`{family}` takes {allowed:?} parameters, got {}",
            params.len()
        )))
    }
}

impl TryFrom<DistributionSpec> for Distribution {
    type Error = Error;

    fn try_from(spec: DistributionSpec) -> Result<Self> {
        let family = Family::from_name(&spec.family)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown family `{}`", spec.family)))?;
        let p = &spec.params;
        let name = family.name();
        match family {
            Family::Normal => {
                arity(name, p, &[2])?;
                Distribution::normal(p[0], p[1])
            }
            Family::NormalMixture2 => {
                arity(name, p, &[5])?;
                Distribution::normal_mixture2(p[0], p[1], p[2], p[3], p[4])
            }
            Family::Exponential => {
                arity(name, p, &[1])?;
                Distribution::exponential(p[0])
            }
            Family::Gamma => {
                arity(name, p, &[2])?;
                Distribution::gamma(p[0], p[1])
            }
            Family::GeneralizedPareto => {
                arity(name, p, &[2, 3])?;
                Distribution::gp_at(p.get(2).copied().unwrap_or(0.0), p[0], p[1])
            }
            Family::UniformMixture => {
                arity(name, p, &[5])?;
                Distribution::uniform_mixture(p[0], p[1], p[2], p[3], p[4])
            }
            Family::Spliced => {
                arity(name, p, &[1])?;
                let parts = spec.parts.unwrap_or_default();
                let [base, replacement]: [DistributionSpec; 2] = parts
                    .try_into()
                    .map_err(|_| Error::InvalidParameter("`spliced` needs exactly two parts".into()))?;
                let tail = SplicedTail {
                    base: base.try_into()?,
                    replacement: replacement.try_into()?,
                    splice_point: p[0],
                };
                let d = tail.into_distribution();
                d.validate()?;
                Ok(d)
            }
        }
    }
}

impl From<Distribution> for DistributionSpec {
    fn from(d: Distribution) -> Self {
        let family = d.family().name().to_string();
        match d {
            Distribution::Spliced(s) => DistributionSpec {
                family,
                params: vec![s.splice_point],
                parts: Some(vec![s.base.into(), s.replacement.into()]),
            },
            Distribution::GeneralizedPareto { location, scale, shape } => DistributionSpec {
                family,
                params: if location == 0.0 {
                    vec![scale, shape]
                } else {
                    vec![scale, shape, location]
                },
                parts: None,
            },
            other => DistributionSpec {
                family,
                params: other.params(),
                parts: None,
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    t: u64,
    y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hidden: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    forecast: Option<Distribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ensemble: Option<Vec<f64>>,
}

impl From<&ForecastObsRecord> for RecordLine {
    fn from(r: &ForecastObsRecord) -> Self {
        let (forecast, ensemble) = match &r.forecast {
            Forecast::Dist(d) => (Some(d.clone()), None),
            Forecast::Ensemble(m) => (None, Some(m.clone())),
        };
        RecordLine {
            t: r.t,
            y: r.y,
            hidden: r.hidden,
            forecast,
            ensemble,
        }
    }
}

impl TryFrom<RecordLine> for ForecastObsRecord {
    type Error = Error;

    fn try_from(l: RecordLine) -> Result<Self> {
        let forecast = match (l.forecast, l.ensemble) {
            (Some(d), None) => Forecast::Dist(d),
            (None, Some(m)) => Forecast::Ensemble(m),
            _ => {
                return Err(Error::InvalidParameter(
                    "exactly one of `forecast` and `ensemble` must be present".into(),
                ))
            }
        };
        ForecastObsRecord::new(l.t, forecast, l.y, l.hidden)
    }
}

pub fn record_to_json(r: &ForecastObsRecord) -> String {
    serde_json::to_string(&RecordLine::from(r)).expect("record serialization is infallible")
}

pub fn record_from_json(line: &str) -> Result<ForecastObsRecord> {
    let raw: RecordLine =
        serde_json::from_str(line).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    raw.try_into()
}

/// Writes one JSON object per line.
pub fn write_records<W: Write>(mut out: W, records: &[ForecastObsRecord]) -> Result<()> {
    for r in records {
        writeln!(out, "{}", record_to_json(r))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads JSON-lines records, skipping blank lines. Errors carry the
/// 1-based line number.
pub fn read_records<R: BufRead>(input: R) -> Result<Vec<ForecastObsRecord>> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r = record_from_json(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(r);
    }
    Ok(records)
}
