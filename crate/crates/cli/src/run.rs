//! Dispatch of a validated [`RunConfig`] to the core library.

use serde::Serialize;

use tempus_core::moment_lab::{stable_series, SeriesOutcome};
use tempus_core::strong_error::ErrorReport;
use tempus_core::{
    classify, euler_maruyama, moment_mc, ClockPath, Error, MomentQuery, Purpose, StreamFactory, Verdict,
};

use crate::args::{Experiment, RunConfig};
use crate::output::OutputDir;

/// Relative tolerance of the stable series written to moment.json.
const SERIES_TOL: f64 = 1e-15;

/// Simulated paths use this path index of the seed-derivation contract.
const SINGLE_PATH: u64 = 0;

#[derive(Debug, Serialize)]
struct MomentRecord<'a> {
    query: &'a MomentQuery,
    verdict: Verdict,
    critical_r: f64,
    detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    series_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    series_log_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_bracket: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_paths: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_delta: Option<f64>,
    seed: u64,
}

/// Runs the experiment, writes its files and returns the summary line.
pub fn run(config: &RunConfig) -> Result<String, Error> {
    let streams = StreamFactory::new(config.seed);
    let out = OutputDir::create(&config.output_dir, config.timestamp)?;
    match &config.experiment {
        Experiment::SimulateClock { model, delta, horizon } => {
            let clock = ClockPath::build(
                model,
                *delta,
                *horizon,
                &mut streams.stream(SINGLE_PATH, Purpose::Clock),
            )?;
            let path = out.write_csv(
                "clock.csv",
                &["n", "tau_n", "E_delta_level"],
                clock
                    .staircase()
                    .map(|(n, tau, level)| vec![n.to_string(), tau.to_string(), level.to_string()]),
            )?;
            Ok(format!(
                "simulate-clock model={model} delta={delta} T={horizon} steps={} E_T={} -> {}",
                clock.crossing_index(),
                clock.terminal_level(),
                path.display()
            ))
        }
        Experiment::SimulateSde {
            model,
            coeffs,
            delta,
            horizon,
            x0,
        } => {
            let clock = ClockPath::build(
                model,
                *delta,
                *horizon,
                &mut streams.stream(SINGLE_PATH, Purpose::Clock),
            )?;
            let pair = coeffs.build()?;
            let approx = euler_maruyama(clock, &pair, *x0, &mut streams.stream(SINGLE_PATH, Purpose::Brownian))?;
            let path = out.write_csv(
                "paths.csv",
                &["n", "tau_n", "E_delta_level", "X_value"],
                approx
                    .rows()
                    .map(|(n, tau, level, x)| vec![n.to_string(), tau.to_string(), level.to_string(), x.to_string()]),
            )?;
            Ok(format!(
                "simulate-sde model={model} coeffs={coeffs} delta={delta} T={horizon} steps={} X_T={} -> {}",
                approx.clock().crossing_index(),
                approx.terminal_value(),
                path.display()
            ))
        }
        Experiment::Moment {
            query,
            delta,
            paths,
            force_mc,
        } => {
            let verdict = classify(query)?;
            let series = if query.model.is_stable() && query.drift_a == 0.0 && verdict.verdict.is_finite() {
                match stable_series(query.model.rv_index(), query.lambda, query.t, query.r, SERIES_TOL)? {
                    SeriesOutcome::Converged { value, log_value, .. } => Some((value, log_value)),
                    SeriesOutcome::Diverges => None,
                }
            } else {
                None
            };
            let mc = if query.drift_a == 0.0 && (verdict.verdict.is_finite() || *force_mc) {
                Some(moment_mc(query, *delta, *paths, &streams, *force_mc)?)
            } else {
                None
            };
            let record = MomentRecord {
                query,
                verdict: verdict.verdict,
                critical_r: verdict.critical_r,
                detail: verdict.detail,
                series_value: series.map(|s| s.0),
                series_log_value: series.map(|s| s.1),
                mc_estimate: mc.map(|m| m.estimate),
                mc_bracket: mc.map(|m| m.bracket),
                std_error: mc.map(|m| m.std_error),
                mc_paths: mc.map(|m| m.n_paths),
                mc_delta: mc.map(|_| *delta),
                seed: config.seed,
            };
            let path = out.write_json("moment.json", &record)?;
            let mut line = format!(
                "moment model={} r={} verdict={:?}",
                query.model, query.r, verdict.verdict
            );
            if let Some((v, _)) = series {
                line += &format!(" series={v}");
            }
            if let Some(m) = mc {
                line += &format!(" mc={} se={}", m.estimate, m.std_error);
            }
            Ok(format!("{line} -> {}", path.display()))
        }
        Experiment::Converge(experiment) => {
            let report = experiment.run(&streams)?;
            let json = out.write_json("convergence.json", &report)?;
            out.write_csv(
                "convergence.csv",
                &[
                    "delta",
                    "sup_error_mean",
                    "sup_error_se",
                    "endpoint_error_mean",
                    "endpoint_error_se",
                ],
                report.records.iter().map(|r| {
                    vec![
                        r.delta.to_string(),
                        r.sup_error_mean.to_string(),
                        r.sup_error_se.to_string(),
                        r.endpoint_error_mean.to_string(),
                        r.endpoint_error_se.to_string(),
                    ]
                }),
            )?;
            Ok(converge_summary(&report, &json.display().to_string()))
        }
    }
}

fn converge_summary(report: &ErrorReport, path: &str) -> String {
    let slope = |s: Option<f64>| s.map_or_else(|| "n/a".to_string(), |s| format!("{s:.4}"));
    format!(
        "converge model={} coeffs={} paths={} sup_slope={} endpoint_slope={} expected={}{} -> {path}",
        report.model,
        report.coeffs,
        report.records.first().map_or(0, |r| r.n_paths),
        slope(report.sup_slope()),
        slope(report.endpoint_slope()),
        report.expected_order,
        if report.hypotheses_violated {
            " hypotheses_violated"
        } else {
            ""
        },
    )
}
