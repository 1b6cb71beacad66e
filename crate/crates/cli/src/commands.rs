use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use crps_core::tail_analysis::{ambiguity_region, cup_minimiser};
use crps_core::verification::{
    dm_matrix, index_curve as core_index_curve, qq_pp, score_series, score_series_with, shuffled_score_series,
    tail_shape_of_scores, IndexOptions, ScoreRule,
};
use crps_core::{expected_crps_pareto, fit_gp_above, io, simulation, stats, Error, ForecastObsRecord, ForecasterKind};
use serde::Serialize;

use crate::output::{sink, write_json, write_rows};
use crate::{CupArgs, DmArgs, FitGpArgs, Format, IndexCurveArgs, QqppArgs, ScoreArgs, SimulateArgs};

/// A command line that parsed but makes no sense.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(Usage(msg.into()))
}

/// 1 usage, 2 data, 3 numeric failure.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 1;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::Quadrature { .. } | Error::RootFinding(_) | Error::Divergent(_)) => 3,
        _ => 2,
    }
}

pub fn default_index_orders() -> Vec<f64> {
    (75..100).map(|k| k as f64 / 100.0).collect()
}

fn check_order(name: &str, q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("{name} must lie in (0, 1), got {q}")))
    }
}

fn read(path: &Path) -> Result<Vec<ForecastObsRecord>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let records = io::read_records(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    if records.is_empty() {
        bail!(Error::Empty("record file"));
    }
    Ok(records)
}

fn observation_quantile(records: &[ForecastObsRecord], q: f64) -> Result<f64> {
    let y: Vec<f64> = records.iter().map(|r| r.y).collect();
    Ok(stats::quantiles(&y, &[q])?[0])
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    if a.t == 0 {
        return Err(usage("--t must be positive"));
    }
    let records = simulation::simulate(a.model, a.forecaster, a.t, a.seed)?;
    let mut w = sink(a.out.as_deref())?;
    io::write_records(&mut w, &records)?;
    w.flush()?;
    let y: Vec<f64> = records.iter().map(|r| r.y).collect();
    eprintln!(
        "{} {} records: y mean {:.6}, sd {:.6}",
        records.len(),
        a.forecaster,
        stats::mean(&y),
        stats::variance(&y).sqrt()
    );
    Ok(())
}

pub fn score(a: &ScoreArgs) -> Result<()> {
    if let Some(q) = a.weight_quantile {
        check_order("--weight-quantile", q)?;
    }
    let records = read(&a.input)?;
    let crps = score_series(&records)?.values;
    let weighted = match a.weight_quantile {
        Some(q) => {
            let u = observation_quantile(&records, q)?;
            eprintln!("weight threshold u = {u}");
            Some((format!("wcrps_q{q}"), score_series_with(&records, ScoreRule::QuantileWeighted(u))?.values))
        }
        None => None,
    };
    let shuffled = match a.shuffle_seed {
        Some(seed) => Some(shuffled_score_series(&records, seed)?.values),
        None => None,
    };

    let mut w = sink(a.output.out.as_deref())?;
    match a.output.format {
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(&mut w);
            let mut header = vec!["t".to_string(), "y".into(), "crps".into()];
            if let Some((name, _)) = &weighted {
                header.push(name.clone());
            }
            if shuffled.is_some() {
                header.push("crps_shuffled".into());
            }
            csv.write_record(&header)?;
            for (i, r) in records.iter().enumerate() {
                let mut row = vec![r.t.to_string(), r.y.to_string(), crps[i].to_string()];
                if let Some((_, v)) = &weighted {
                    row.push(v[i].to_string());
                }
                if let Some(v) = &shuffled {
                    row.push(v[i].to_string());
                }
                csv.write_record(&row)?;
            }
            csv.flush()?;
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = records
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let mut obj = serde_json::json!({ "t": r.t, "y": r.y, "crps": crps[i] });
                    if let Some((name, v)) = &weighted {
                        obj[name] = v[i].into();
                    }
                    if let Some(v) = &shuffled {
                        obj["crps_shuffled"] = v[i].into();
                    }
                    obj
                })
                .collect();
            serde_json::to_writer_pretty(&mut w, &rows)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct IndexCsvRow {
    order: Option<f64>,
    threshold: f64,
    m: usize,
    t_forecast: f64,
    t_clim: f64,
    p_forecast: f64,
    p_clim: f64,
    log_p_forecast: f64,
    log_p_clim: f64,
    index: f64,
    log_p_ratio: f64,
    pathological: bool,
    gap: String,
}

pub fn index_curve(a: &IndexCurveArgs) -> Result<()> {
    for &q in &a.quantiles {
        check_order("--quantiles", q)?;
    }
    if let Some(q) = a.threshold_order {
        check_order("--threshold-order", q)?;
    }
    let f = read(&a.forecast)?;
    let clim = read(&a.clim)?;
    let options = IndexOptions {
        base_order: a.threshold_order,
        method: a.method.into(),
        ..IndexOptions::default()
    };
    let report = core_index_curve(&f, &clim, &a.quantiles, &options)?;
    eprintln!(
        "fit above u0 = {}: sigma {}, gamma {} ({} excesses); PIT max deviation {} vs band {}{}",
        report.fit.u0,
        report.fit.fit.sigma,
        report.fit.fit.gamma,
        report.fit.n_excesses,
        report.pit_max_dev,
        report.pit_band,
        if report.calibration_screened { "" } else { "; forecast fails the calibration screen" }
    );
    match a.output.format {
        Format::Json => write_json(&report, a.output.out.as_deref()),
        Format::Csv => {
            let rows: Vec<IndexCsvRow> = report
                .rows
                .iter()
                .map(|r| IndexCsvRow {
                    order: r.order,
                    threshold: r.threshold,
                    m: r.m,
                    t_forecast: r.t_forecast,
                    t_clim: r.t_clim,
                    p_forecast: r.p_forecast,
                    p_clim: r.p_clim,
                    log_p_forecast: r.log_p_forecast,
                    log_p_clim: r.log_p_clim,
                    index: r.index,
                    log_p_ratio: r.log_p_ratio,
                    pathological: r.pathological,
                    gap: r.gap.clone().unwrap_or_default(),
                })
                .collect();
            write_rows(&rows, Format::Csv, a.output.out.as_deref())
        }
    }
}

#[derive(Serialize)]
struct DmCsvRow {
    quantile: Option<f64>,
    threshold: Option<f64>,
    row: String,
    column: String,
    stat: f64,
    p_value: f64,
}

#[derive(Serialize)]
struct DmBlock {
    quantile: Option<f64>,
    threshold: Option<f64>,
    labels: Vec<String>,
    stat: Vec<Vec<f64>>,
    p_value: Vec<Vec<f64>>,
}

fn dm_inputs(a: &DmArgs) -> Result<(Vec<String>, Vec<Vec<ForecastObsRecord>>)> {
    if !a.input.is_empty() {
        if a.model.is_some() || a.t.is_some() || a.seed.is_some() {
            return Err(usage("--input excludes --model, --t and --seed"));
        }
        let labels = a
            .input
            .iter()
            .map(|p| p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned()))
            .collect();
        let sets = a.input.iter().map(|p| read(p)).collect::<Result<Vec<_>>>()?;
        return Ok((labels, sets));
    }
    let (Some(model), Some(t), Some(seed)) = (a.model, a.t, a.seed) else {
        return Err(usage("give --input files or all of --model, --t and --seed"));
    };
    if t == 0 {
        return Err(usage("--t must be positive"));
    }
    let labels = ForecasterKind::ALL.iter().map(|k| k.name().to_string()).collect();
    let sets = ForecasterKind::ALL
        .iter()
        .map(|&k| simulation::simulate(model, k, t, seed))
        .collect::<crps_core::Result<Vec<_>>>()?;
    Ok((labels, sets))
}

pub fn dm(a: &DmArgs) -> Result<()> {
    for &q in &a.quantiles {
        check_order("--quantiles", q)?;
    }
    let (labels, sets) = dm_inputs(a)?;
    if sets.len() < 2 {
        return Err(usage("at least two forecasters are needed"));
    }
    let orders: Vec<Option<f64>> = if a.quantiles.is_empty() {
        vec![None]
    } else {
        a.quantiles.iter().copied().map(Some).collect()
    };
    let mut blocks = Vec::new();
    for q in orders {
        let (threshold, rule) = match q {
            Some(q) => {
                let u = observation_quantile(&sets[0], q)?;
                (Some(u), ScoreRule::QuantileWeighted(u))
            }
            None => (None, ScoreRule::Crps),
        };
        let scores = sets
            .iter()
            .map(|s| Ok(score_series_with(s, rule)?.values))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&[f64]> = scores.iter().map(Vec::as_slice).collect();
        let m = dm_matrix(&refs, a.lag)?;
        blocks.push(DmBlock {
            quantile: q,
            threshold,
            labels: labels.clone(),
            stat: m.iter().map(|r| r.iter().map(|c| c.stat).collect()).collect(),
            p_value: m.iter().map(|r| r.iter().map(|c| c.p_two_sided).collect()).collect(),
        });
    }
    match a.output.format {
        Format::Json => write_json(&blocks, a.output.out.as_deref()),
        Format::Csv => {
            let mut rows = Vec::new();
            for b in &blocks {
                for (i, r) in b.labels.iter().enumerate() {
                    for (j, c) in b.labels.iter().enumerate() {
                        rows.push(DmCsvRow {
                            quantile: b.quantile,
                            threshold: b.threshold,
                            row: r.clone(),
                            column: c.clone(),
                            stat: b.stat[i][j],
                            p_value: b.p_value[i][j],
                        });
                    }
                }
            }
            write_rows(&rows, Format::Csv, a.output.out.as_deref())
        }
    }
}

#[derive(Serialize)]
struct PlotRow {
    plot: &'static str,
    x: f64,
    y: f64,
}

pub fn qqpp(a: &QqppArgs) -> Result<()> {
    if a.max_points < 2 {
        return Err(usage("--max-points must be at least 2"));
    }
    let records = read(&a.input)?;
    let s1 = score_series(&records)?;
    let s2 = shuffled_score_series(&records, a.shuffle_seed)?;
    let r = qq_pp(&s1, &s2, a.max_points)?;
    eprintln!("two-sample KS distance {}", r.ks);
    match a.output.format {
        Format::Json => write_json(&r, a.output.out.as_deref()),
        Format::Csv => {
            let rows: Vec<PlotRow> = r
                .qq
                .iter()
                .map(|&(x, y)| PlotRow { plot: "qq", x, y })
                .chain(r.pp.iter().map(|&(x, y)| PlotRow { plot: "pp", x, y }))
                .collect();
            write_rows(&rows, Format::Csv, a.output.out.as_deref())
        }
    }
}

#[derive(Serialize)]
struct CupRow {
    a: f64,
    phi: f64,
    in_cup: bool,
}

#[derive(Serialize)]
struct CupReport {
    gamma: f64,
    sigma: f64,
    a0: f64,
    area: f64,
    minimiser: f64,
    beyond_established_range: bool,
    curve: Vec<CupRow>,
}

pub fn cup(a: &CupArgs) -> Result<()> {
    if !(a.gamma > 0.0 && a.gamma < 1.0) {
        return Err(usage("--gamma must lie in (0, 1)"));
    }
    if !(a.sigma > 0.0) || a.points < 2 {
        return Err(usage("--sigma must be positive and --points at least 2"));
    }
    let g = ambiguity_region(a.gamma, a.sigma)?;
    // The expected score is finite only for a * gamma < 1.
    let a_max = a.a_max.unwrap_or(1.25 * g.a0).min(0.999 / a.gamma);
    if !(a_max > 0.0) {
        return Err(usage("--a-max must be positive"));
    }
    let curve = (1..=a.points)
        .map(|i| {
            let x = a_max * i as f64 / a.points as f64;
            Ok(CupRow {
                a: x,
                phi: expected_crps_pareto(a.sigma, a.gamma, x)?,
                in_cup: x < g.a0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    eprintln!("cup edge a0 = {}, area {}", g.a0, g.area);
    match a.output.format {
        Format::Csv => write_rows(&curve, Format::Csv, a.output.out.as_deref()),
        Format::Json => write_json(
            &CupReport {
                gamma: g.gamma,
                sigma: g.sigma,
                a0: g.a0,
                area: g.area,
                minimiser: cup_minimiser(a.gamma, a.sigma),
                beyond_established_range: g.beyond_established_range,
                curve,
            },
            a.output.out.as_deref(),
        ),
    }
}

#[derive(Serialize)]
struct FitRow {
    threshold_order: f64,
    u0: f64,
    n_excesses: usize,
    sigma: f64,
    gamma: f64,
    method: String,
    neg_log_lik: f64,
    mean_residual: f64,
    fell_back_to_pwm: bool,
}

pub fn fit_gp(a: &FitGpArgs) -> Result<()> {
    check_order("--threshold-order", a.threshold_order)?;
    let records = read(&a.input)?;
    let u = observation_quantile(&records, a.threshold_order)?;
    let fit = if a.scores {
        tail_shape_of_scores(&score_series(&records)?, u, a.method.into())?
    } else {
        let y: Vec<f64> = records.iter().map(|r| r.y).collect();
        fit_gp_above(&y, u, a.method.into())?
    };
    let row = FitRow {
        threshold_order: a.threshold_order,
        u0: fit.u0,
        n_excesses: fit.n_excesses,
        sigma: fit.fit.sigma,
        gamma: fit.fit.gamma,
        method: serde_json::to_value(fit.method)?.as_str().unwrap_or_default().to_string(),
        neg_log_lik: fit.diagnostics.neg_log_lik,
        mean_residual: fit.diagnostics.mean_residual,
        fell_back_to_pwm: fit.diagnostics.fell_back_to_pwm,
    };
    write_rows(&[row], a.output.format, a.output.out.as_deref())
}
