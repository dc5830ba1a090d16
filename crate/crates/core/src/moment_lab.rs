//! Exponential moments `E[exp(lambda E_t^r)]` of powers of an inverse subordinator.
//!
//! Finiteness is decided by the regular-variation index `beta` of `psi`:
//! finite for `r < 1/(1-beta)`, infinite for `r > 1/(1-beta)`. For a stable
//! clock the moment is the power series
//!
//! ```text
//! E[exp(lambda E_t^r)] = sum_n a_n z^n,   a_n = Gamma(rn+1) / (n! Gamma(rn beta+1)),   z = lambda t^(r beta),
//! ```
//!
//! whose ratio test reproduces the rule and also settles the critical case
//! `r = 1/(1-beta)`: finite when `lambda t^(r-1) < (r-1)^(r-1)/r^r`, infinite
//! when it is larger.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::inverse_clock::ClockPath;
use crate::levy_clock::SubordinatorModel;
use crate::rng::{Purpose, StreamFactory};
use crate::stats::RunningMoments;

/// Relative tolerance for deciding `r == 1/(1-beta)` and threshold equality.
pub const THRESHOLD_RTOL: f64 = 1e-12;

/// Hard cap on series terms.
pub const MAX_SERIES_TERMS: usize = 100_000;

/// Consecutive negligible terms required before the series is truncated.
const STABLE_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentQuery {
    pub model: SubordinatorModel,
    pub lambda: f64,
    pub t: f64,
    pub r: f64,
    /// Drift `a` of `psi_hat(s) = a s + psi(s)`; classifier only.
    #[serde(default)]
    pub drift_a: f64,
}

impl MomentQuery {
    pub fn new(model: SubordinatorModel, lambda: f64, t: f64, r: f64) -> Result<Self> {
        let q = Self {
            model,
            lambda,
            t,
            r,
            drift_a: 0.0,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn with_drift(mut self, drift_a: f64) -> Result<Self> {
        self.drift_a = drift_a;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [("lambda", self.lambda), ("t", self.t), ("r", self.r)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{what} must be > 0, got {v}")));
            }
        }
        if !(self.drift_a.is_finite() && self.drift_a >= 0.0) {
            return Err(Error::Domain(format!("drift a must be >= 0, got {}", self.drift_a)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Finite,
    Infinite,
    ThresholdFinite,
    ThresholdInfinite,
    ThresholdUndetermined,
}

impl Verdict {
    pub fn is_finite(self) -> bool {
        matches!(self, Verdict::Finite | Verdict::ThresholdFinite)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVerdict {
    pub verdict: Verdict,
    /// `1/(1-beta)`.
    pub critical_r: f64,
    pub detail: String,
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= THRESHOLD_RTOL * a.abs().max(b.abs())
}

/// Decides whether `E[exp(lambda E_t^r)]` is finite.
pub fn classify(query: &MomentQuery) -> Result<MomentVerdict> {
    query.validate()?;
    let beta = query.model.rv_index();
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::Unsupported(format!(
            "regular-variation index {beta} outside [0,1)"
        )));
    }
    let critical_r = 1.0 / (1.0 - beta);
    let r = query.r;

    if query.drift_a > 0.0 {
        // D_u >= a u, so E_t <= t/a: the moment is finite for every r, which
        // contains the r < 1/(1-beta) statement available from the tail bounds.
        return Ok(MomentVerdict {
            verdict: Verdict::Finite,
            critical_r,
            detail: format!(
                "drift a = {} > 0 bounds E_t <= t/a = {}; finite for all r (tail-bound argument covers r < {critical_r})",
                query.drift_a,
                query.t / query.drift_a
            ),
        });
    }

    if !near(r, critical_r) {
        let (verdict, rel) = if r < critical_r {
            (Verdict::Finite, "<")
        } else {
            (Verdict::Infinite, ">")
        };
        return Ok(MomentVerdict {
            verdict,
            critical_r,
            detail: format!("psi regularly varying with index {beta}; r = {r} {rel} 1/(1-beta) = {critical_r}"),
        });
    }

    if beta == 0.0 {
        // r = 1: every inverse subordinator with infinite Lévy measure has
        // all exponential moments E[exp(lambda E_t)].
        return Ok(MomentVerdict {
            verdict: Verdict::ThresholdFinite,
            critical_r,
            detail: "r = 1 = 1/(1-beta): exponential moment of E_t exists for infinite Lévy measure".into(),
        });
    }

    if !query.model.is_stable() {
        return Ok(MomentVerdict {
            verdict: Verdict::ThresholdUndetermined,
            critical_r,
            detail: format!("r = 1/(1-beta) = {critical_r}; threshold rule known only for stable clocks"),
        });
    }

    let z = query.lambda * query.t.powf(r - 1.0);
    let radius = threshold_radius(r);
    let verdict = if near(z, radius) {
        Verdict::ThresholdUndetermined
    } else if z < radius {
        Verdict::ThresholdFinite
    } else {
        Verdict::ThresholdInfinite
    };
    Ok(MomentVerdict {
        verdict,
        critical_r,
        detail: format!("threshold r = {r}: lambda t^(r-1) = {z} vs (r-1)^(r-1)/r^r = {radius}"),
    })
}

/// `(r-1)^(r-1) / r^r`, the radius of convergence of the stable series at the threshold.
pub fn threshold_radius(r: f64) -> f64 {
    ((r - 1.0) * (r - 1.0).ln() - r * r.ln()).exp()
}

/// `ln Gamma(x + h) - ln Gamma(x)` for `x > 0`, `h >= 0`, without the
/// cancellation of differencing two large log-gammas.
pub fn ln_gamma_diff(x: f64, h: f64) -> f64 {
    if x < 50.0 {
        return ln_gamma(x + h) - ln_gamma(x);
    }
    let corr = |y: f64| {
        let y2 = y * y;
        (1.0 / 12.0 - (1.0 / 360.0 - 1.0 / (1260.0 * y2)) / y2) / y
    };
    (x - 0.5) * (h / x).ln_1p() + h * (x + h).ln() - h + (corr(x + h) - corr(x))
}

/// `ln(a_n z^n)`.
pub fn series_log_term(beta: f64, r: f64, z: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    ln_gamma(r * nf + 1.0) - ln_gamma(nf + 1.0) - ln_gamma(r * nf * beta + 1.0) + nf * z.ln()
}

/// `ln(a_{n+1} z^{n+1} / (a_n z^n))`.
pub fn series_log_ratio(beta: f64, r: f64, z: f64, n: u64) -> f64 {
    let nf = n as f64;
    ln_gamma_diff(r * nf + 1.0, r) - (nf + 1.0).ln() - ln_gamma_diff(r * beta * nf + 1.0, r * beta) + z.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RatioTest {
    Converges,
    Diverges,
    Inconclusive,
}

/// Far-tail points at which the term ratio is examined.
const RATIO_PROBES: [u64; 3] = [1_000_000_000_000, 1_000_000_000_000_000, 1_000_000_000_000_000_000];

/// The ratio test on the stable series: term ratios far in the tail are
/// compared against 1.
pub fn ratio_test(beta: f64, r: f64, z: f64) -> RatioTest {
    let logs: Vec<f64> = RATIO_PROBES.iter().map(|&n| series_log_ratio(beta, r, z, n)).collect();
    if logs.iter().all(|&l| l < -1e-9) {
        RatioTest::Converges
    } else if logs.iter().all(|&l| l > 1e-9) {
        RatioTest::Diverges
    } else {
        RatioTest::Inconclusive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SeriesOutcome {
    Converged {
        value: f64,
        /// `ln(value)`, finite even when `value` overflows.
        log_value: f64,
        terms: usize,
    },
    Diverges,
}

impl SeriesOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            SeriesOutcome::Converged { value, .. } => Some(*value),
            SeriesOutcome::Diverges => None,
        }
    }
}

/// Sums the stable-clock series for `E[exp(lambda E_t^r)]`.
///
/// Terminates once `STABLE_WINDOW` consecutive terms fall below `tol` times
/// the partial sum. Returns [`SeriesOutcome::Diverges`] without summing when
/// the classifier does not report a finite moment.
pub fn stable_series(beta: f64, lambda: f64, t: f64, r: f64, tol: f64) -> Result<SeriesOutcome> {
    let model = SubordinatorModel::stable(beta)?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Domain(format!("tolerance must lie in (0,1), got {tol}")));
    }
    let query = MomentQuery::new(model, lambda, t, r)?;
    if !classify(&query)?.verdict.is_finite() {
        return Ok(SeriesOutcome::Diverges);
    }
    let z = lambda * t.powf(r * beta);
    // running sum kept as acc * exp(scale)
    let mut scale = 0.0f64;
    let mut acc = 1.0f64;
    let mut quiet = 0;
    for n in 1..MAX_SERIES_TERMS as u64 {
        let lt = series_log_term(beta, r, z, n);
        if lt > scale {
            acc = acc * (scale - lt).exp() + 1.0;
            scale = lt;
        } else {
            acc += (lt - scale).exp();
        }
        let log_partial = scale + acc.ln();
        if lt - log_partial < tol.ln() {
            quiet += 1;
            if quiet == STABLE_WINDOW {
                return Ok(SeriesOutcome::Converged {
                    value: log_partial.exp(),
                    log_value: log_partial,
                    terms: n as usize + 1,
                });
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::NonConvergence {
        terms: MAX_SERIES_TERMS,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    /// Mean of `exp(lambda (E^delta_t)^r)`.
    pub estimate: f64,
    pub std_error: f64,
    /// `[mean exp(lambda (E^delta_t)^r), mean exp(lambda (E^delta_t + delta)^r)]`,
    /// which brackets the true moment up to Monte Carlo error because
    /// `E^delta_t <= E_t <= E^delta_t + delta` on every path.
    pub bracket: (f64, f64),
    pub upper_std_error: f64,
    pub n_paths: u64,
}

/// Monte Carlo estimate of `E[exp(lambda E_t^r)]` from discretized clocks.
///
/// Refuses queries the classifier does not call finite unless
/// `allow_infinite` is set (used to demonstrate divergence).
pub fn moment_mc(
    query: &MomentQuery,
    delta: f64,
    n_paths: u64,
    streams: &StreamFactory,
    allow_infinite: bool,
) -> Result<MomentEstimate> {
    let verdict = classify(query)?;
    if !verdict.verdict.is_finite() && !allow_infinite {
        return Err(Error::Refused(format!(
            "moment is {:?} ({}); Monte Carlo would not estimate anything",
            verdict.verdict, verdict.detail
        )));
    }
    if query.drift_a > 0.0 {
        return Err(Error::Unsupported("samplers do not support a drift term".into()));
    }
    if n_paths == 0 {
        return Err(Error::Domain("n_paths must be > 0".into()));
    }
    query.model.check_step(delta)?;
    let (lambda, r) = (query.lambda, query.r);
    let samples: Vec<(f64, f64)> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = streams.stream(p, Purpose::Clock);
            let level = ClockPath::build(&query.model, delta, query.t, &mut rng)?.terminal_level();
            Ok(((lambda * level.powf(r)).exp(), (lambda * (level + delta).powf(r)).exp()))
        })
        .collect::<Result<_>>()?;
    let mut low = RunningMoments::new();
    let mut high = RunningMoments::new();
    for (lo, hi) in samples {
        low.push(lo);
        high.push(hi);
    }
    Ok(MomentEstimate {
        estimate: low.mean(),
        std_error: low.std_error(),
        bracket: (low.mean(), high.mean()),
        upper_std_error: high.std_error(),
        n_paths,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trend {
    Increasing,
    Decreasing,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub s: f64,
    /// `s x(s)` with `x(s) = g(s^r)`.
    pub s_x: f64,
    /// `R(g^{-1}(x(s))) / s^(r-1) = R(s^r) / s^(r-1)`.
    pub remainder_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RvDiagnostic {
    pub rows: Vec<DiagnosticRow>,
    pub s_x_trend: Trend,
    pub remainder_trend: Trend,
    /// Common trend of both sequences, `Indeterminate` if they disagree.
    pub trend: Trend,
}

fn tail_trend(ys: &[f64]) -> Trend {
    const STEP_RTOL: f64 = 1e-9;
    let tail = &ys[ys.len() / 2..];
    if tail.len() < 2 {
        return Trend::Indeterminate;
    }
    if tail.windows(2).all(|w| w[1] > w[0] * (1.0 + STEP_RTOL)) {
        Trend::Increasing
    } else if tail.windows(2).all(|w| w[1] < w[0] * (1.0 - STEP_RTOL)) {
        Trend::Decreasing
    } else {
        Trend::Indeterminate
    }
}

/// Evaluates the two limit diagnostics in closed form on `s_grid` and
/// reports their trend over the upper half of the grid.
pub fn rv_diagnostic(model: &SubordinatorModel, r: f64, s_grid: &[f64]) -> Result<RvDiagnostic> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Domain(format!("r must be > 0, got {r}")));
    }
    if s_grid.iter().any(|&s| s.is_nan() || s <= 0.0) || s_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("s grid must be positive and increasing".into()));
    }
    let rows = s_grid
        .iter()
        .map(|&s| {
            let u = s.powf(r);
            let (g, rem) = model.psi_derivatives(u)?;
            Ok(DiagnosticRow {
                s,
                s_x: s * g,
                remainder_ratio: rem / s.powf(r - 1.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let s_x_trend = tail_trend(&rows.iter().map(|d| d.s_x).collect::<Vec<_>>());
    let remainder_trend = tail_trend(&rows.iter().map(|d| d.remainder_ratio).collect::<Vec<_>>());
    let trend = if s_x_trend == remainder_trend {
        s_x_trend
    } else {
        Trend::Indeterminate
    };
    Ok(RvDiagnostic {
        rows,
        s_x_trend,
        remainder_trend,
        trend,
    })
}
