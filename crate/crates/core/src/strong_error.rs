//! Coupled multi-resolution strong-error experiments.
//!
//! Each Monte Carlo path is simulated once at the reference step `delta_ref`.
//! Every coarse resolution `delta_k = m_k delta_ref` reuses the same
//! randomness: its clock reads every `m_k`-th fine cumulative value and its
//! Brownian increments are sums of `m_k` consecutive fine increments. The
//! reference solution stands in for the exact `X`, so
//!
//! ```text
//! sup error      = sup_{t <= T} |X^ref_t - X^{delta_k}_t|
//! endpoint error = |X^ref_T - X^{delta_k}_T|
//! ```
//!
//! are pure discretization errors. Both processes are constant between
//! consecutive fine jump times and every coarse jump time is a fine jump
//! time, so the supremum is a maximum over fine jump times.
//!
//! Convergence orders come from an ordinary least-squares fit of
//! `log(mean error)` on `log(delta_k)`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inverse_clock::{RefinedClock, DEFAULT_MAX_STEPS};
use crate::levy_clock::SubordinatorModel;
use crate::rng::{Purpose, StreamFactory};
use crate::stats::RunningMoments;
use crate::tc_sde::{euler_maruyama_with_increments, ApproximatePath, CoefficientPair};

/// Default `epsilon` subtracted from 1/2 in the expected order.
pub const DEFAULT_EPS_SLACK: f64 = 0.05;

/// Smallest coarse factor for which the reference is treated as exact
/// without a warning.
pub const PROXY_MIN_FACTOR: usize = 16;

/// Fewest resolutions a slope can be fitted from.
pub const MIN_RESOLUTIONS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionLadder {
    delta_ref: f64,
    factors: Vec<usize>,
}

impl ResolutionLadder {
    /// `factors` must be strictly increasing, each at least 2, with
    /// `delta_ref * max(factors) < 1`.
    pub fn new(delta_ref: f64, factors: Vec<usize>) -> Result<Self> {
        if !(delta_ref.is_finite() && delta_ref > 0.0) {
            return Err(Error::Config(format!("delta_ref must be > 0, got {delta_ref}")));
        }
        if factors.is_empty() {
            return Err(Error::Config("ladder needs at least one coarse factor".into()));
        }
        if let Some(&m) = factors.iter().find(|&&m| m < 2) {
            return Err(Error::Config(format!("coarse factors must be >= 2, got {m}")));
        }
        if factors.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("coarse factors must be strictly increasing".into()));
        }
        let max = *factors.last().expect("non-empty");
        if delta_ref * max as f64 >= 1.0 {
            return Err(Error::Config(format!(
                "coarsest step {} must be < 1",
                delta_ref * max as f64
            )));
        }
        Ok(Self { delta_ref, factors })
    }

    /// `delta_ref` and factors `2^lo, ..., 2^hi`.
    pub fn dyadic(delta_ref: f64, lo: u32, hi: u32) -> Result<Self> {
        Self::new(delta_ref, (lo..=hi).map(|k| 1usize << k).collect())
    }

    pub fn delta_ref(&self) -> f64 {
        self.delta_ref
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn deltas(&self) -> impl Iterator<Item = f64> + '_ {
        self.factors.iter().map(|&m| m as f64 * self.delta_ref)
    }
}

/// One path at the reference step and at every coarse step of a ladder.
#[derive(Debug, Clone)]
pub struct CoupledPath {
    pub reference: ApproximatePath,
    /// In ladder order.
    pub coarse: Vec<ApproximatePath>,
}

impl CoupledPath {
    #[allow(clippy::too_many_arguments)]
    pub fn simulate(
        model: &SubordinatorModel,
        coeffs: &CoefficientPair,
        x0: f64,
        horizon: f64,
        ladder: &ResolutionLadder,
        streams: &StreamFactory,
        path: u64,
        max_steps: usize,
    ) -> Result<Self> {
        let max_factor = *ladder.factors().last().expect("validated ladder");
        let clock = RefinedClock::build(
            model,
            ladder.delta_ref(),
            horizon,
            max_factor,
            max_steps,
            &mut streams.stream(path, Purpose::Clock),
        )?;
        let fine = clock.fine();
        let mut brownian = streams.stream(path, Purpose::Brownian);
        let scale = ladder.delta_ref().sqrt();
        let fine_db: Vec<f64> = (0..fine.crossing_index())
            .map(|_| scale * brownian.sample::<f64, _>(StandardNormal))
            .collect();
        let coarse = ladder
            .factors()
            .iter()
            .map(|&m| {
                let c = clock.coarse(m)?;
                let db = coarse_increments(&fine_db, m, c.crossing_index());
                euler_maruyama_with_increments(c, coeffs, x0, db)
            })
            .collect::<Result<Vec<_>>>()?;
        let reference = euler_maruyama_with_increments(fine, coeffs, x0, fine_db)?;
        Ok(Self { reference, coarse })
    }
}

/// `B_{(k+1) m delta} - B_{k m delta}` as the sum of the `m` fine increments
/// in the cell, for `k < steps`.
pub fn coarse_increments(fine: &[f64], m: usize, steps: usize) -> Vec<f64> {
    fine.chunks(m).take(steps).map(|c| c.iter().sum()).collect()
}

/// `sup_{t <= T} |X^fine_t - X^coarse_t|`, exact when every coarse jump time
/// is a fine jump time.
pub fn sup_error(fine: &ApproximatePath, coarse: &ApproximatePath) -> f64 {
    let fd = fine.clock().d_values();
    let cd = coarse.clock().d_values();
    let (nf, nc) = (fine.clock().crossing_index(), coarse.clock().crossing_index());
    let (xf, xc) = (fine.values(), coarse.values());
    let mut k = 0;
    let mut sup = 0.0f64;
    for n in 0..=nf {
        // empty cell: the value at this time belongs to a later index
        if n < nf && fd[n + 1] == fd[n] {
            continue;
        }
        let t = fd[n];
        while k < nc && cd[k + 1] <= t {
            k += 1;
        }
        sup = sup.max((xf[n] - xc[k]).abs());
    }
    sup
}

pub fn endpoint_error(fine: &ApproximatePath, coarse: &ApproximatePath) -> f64 {
    (fine.terminal_value() - coarse.terminal_value()).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    /// `log C` in `error ~ C delta^slope`.
    pub intercept: f64,
    pub slope_se: f64,
}

/// OLS of `log(mean)` on `log(delta)`.
pub fn fit_order(deltas: &[f64], means: &[f64]) -> Result<SlopeFit> {
    if deltas.len() != means.len() {
        return Err(Error::Degenerate("deltas and means differ in length".into()));
    }
    if deltas.len() < MIN_RESOLUTIONS {
        return Err(Error::Degenerate(format!(
            "need at least {MIN_RESOLUTIONS} resolutions, got {}",
            deltas.len()
        )));
    }
    if let Some(e) = means.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::Degenerate(format!("error means must be positive, got {e}")));
    }
    if let Some(d) = deltas.iter().find(|&&d| !(d > 0.0 && d.is_finite())) {
        return Err(Error::Degenerate(format!("steps must be positive, got {d}")));
    }
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = means.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all steps are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let slope_se = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        slope_se,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRecord {
    pub delta: f64,
    pub factor: usize,
    pub sup_error_mean: f64,
    pub sup_error_se: f64,
    pub endpoint_error_mean: f64,
    pub endpoint_error_se: f64,
    pub n_paths: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub model: SubordinatorModel,
    pub coeffs: String,
    pub horizon: f64,
    pub x0: f64,
    pub delta_ref: f64,
    pub seed: u64,
    /// Sorted by `delta`.
    pub records: Vec<ResolutionRecord>,
    pub sup_fit: Option<SlopeFit>,
    pub endpoint_fit: Option<SlopeFit>,
    /// Every error was exactly zero, so no slope was fitted.
    pub zero_error: bool,
    /// `min(theta_F, theta_G, 1/2 - eps_slack)`.
    pub expected_order: f64,
    pub eps_slack: f64,
    /// Neither `rv_index in (1/2, 1)` nor `G(t,x) = G(t)` holds, so the
    /// strong-convergence guarantee does not apply and the run is exploratory.
    pub hypotheses_violated: bool,
    pub warnings: Vec<String>,
}

impl ErrorReport {
    pub fn sup_slope(&self) -> Option<f64> {
        self.sup_fit.map(|f| f.slope)
    }

    pub fn endpoint_slope(&self) -> Option<f64> {
        self.endpoint_fit.map(|f| f.slope)
    }
}

/// Everything that defines a convergence experiment.
#[derive(Debug, Clone)]
pub struct ConvergenceExperiment {
    pub model: SubordinatorModel,
    pub coeffs: CoefficientPair,
    pub x0: f64,
    pub horizon: f64,
    pub ladder: ResolutionLadder,
    pub n_paths: u64,
    pub eps_slack: f64,
    pub max_steps: usize,
}

impl ConvergenceExperiment {
    pub fn new(
        model: SubordinatorModel,
        coeffs: CoefficientPair,
        x0: f64,
        horizon: f64,
        ladder: ResolutionLadder,
        n_paths: u64,
    ) -> Self {
        Self {
            model,
            coeffs,
            x0,
            horizon,
            ladder,
            n_paths,
            eps_slack: DEFAULT_EPS_SLACK,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    /// Whether `rv_index in (1/2, 1)` or `G(t, x) = G(t)` holds.
    pub fn hypotheses_hold(&self) -> bool {
        let beta = self.model.rv_index();
        (beta > 0.5 && beta < 1.0) || self.coeffs.regularity().g_x_independent
    }

    pub fn run(&self, streams: &StreamFactory) -> Result<ErrorReport> {
        if self.ladder.factors().len() < MIN_RESOLUTIONS {
            return Err(Error::Config(format!(
                "insufficient ladder: {} resolutions, need at least {MIN_RESOLUTIONS}",
                self.ladder.factors().len()
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be > 0".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if !(self.eps_slack > 0.0 && self.eps_slack < 0.5) {
            return Err(Error::Config(format!(
                "eps_slack must lie in (0, 1/2), got {}",
                self.eps_slack
            )));
        }
        self.model
            .check_step(self.ladder.delta_ref() * *self.ladder.factors().last().unwrap() as f64)?;

        let mut warnings = Vec::new();
        let hypotheses_violated = !self.hypotheses_hold();
        if hypotheses_violated {
            let msg = format!(
                "convergence hypotheses fail: rv_index {} not in (1/2,1) and G depends on x; exploratory run",
                self.model.rv_index()
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
        if self.ladder.factors()[0] < PROXY_MIN_FACTOR {
            let msg = format!(
                "finest coarse factor {} < {PROXY_MIN_FACTOR}; reference bias may be visible",
                self.ladder.factors()[0]
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }

        let per_path: Vec<Vec<(f64, f64)>> = (0..self.n_paths)
            .into_par_iter()
            .map(|p| {
                let cp = CoupledPath::simulate(
                    &self.model,
                    &self.coeffs,
                    self.x0,
                    self.horizon,
                    &self.ladder,
                    streams,
                    p,
                    self.max_steps,
                )?;
                Ok(cp
                    .coarse
                    .iter()
                    .map(|c| (sup_error(&cp.reference, c), endpoint_error(&cp.reference, c)))
                    .collect())
            })
            .collect::<Result<_>>()?;

        let k = self.ladder.factors().len();
        let mut sup = vec![RunningMoments::new(); k];
        let mut end = vec![RunningMoments::new(); k];
        for errs in &per_path {
            for (j, &(s, e)) in errs.iter().enumerate() {
                sup[j].push(s);
                end[j].push(e);
            }
        }
        let mut records: Vec<ResolutionRecord> = self
            .ladder
            .factors()
            .iter()
            .enumerate()
            .map(|(j, &m)| ResolutionRecord {
                delta: m as f64 * self.ladder.delta_ref(),
                factor: m,
                sup_error_mean: sup[j].mean(),
                sup_error_se: sup[j].std_error(),
                endpoint_error_mean: end[j].mean(),
                endpoint_error_se: end[j].std_error(),
                n_paths: self.n_paths,
            })
            .collect();
        records.sort_by(|a, b| a.delta.total_cmp(&b.delta));

        let zero_error = records
            .iter()
            .all(|r| r.sup_error_mean == 0.0 && r.endpoint_error_mean == 0.0);
        let deltas: Vec<f64> = records.iter().map(|r| r.delta).collect();
        let fit = |means: Vec<f64>, what: &str, warnings: &mut Vec<String>| {
            if zero_error {
                return None;
            }
            match fit_order(&deltas, &means) {
                Ok(f) => Some(f),
                Err(e) => {
                    warnings.push(format!("{what} slope not fitted: {e}"));
                    None
                }
            }
        };
        let sup_fit = fit(records.iter().map(|r| r.sup_error_mean).collect(), "sup", &mut warnings);
        let endpoint_fit = fit(
            records.iter().map(|r| r.endpoint_error_mean).collect(),
            "endpoint",
            &mut warnings,
        );

        let reg = self.coeffs.regularity();
        Ok(ErrorReport {
            model: self.model.clone(),
            coeffs: self.coeffs.name().to_string(),
            horizon: self.horizon,
            x0: self.x0,
            delta_ref: self.ladder.delta_ref(),
            seed: streams.master_seed(),
            records,
            sup_fit,
            endpoint_fit,
            zero_error,
            expected_order: reg.theta_f.min(reg.theta_g).min(0.5 - self.eps_slack),
            eps_slack: self.eps_slack,
            hypotheses_violated,
            warnings,
        })
    }
}

/// Runs a coupled experiment with default slack and step cap.
pub fn coupled_experiment(
    model: &SubordinatorModel,
    coeffs: &CoefficientPair,
    x0: f64,
    horizon: f64,
    ladder: &ResolutionLadder,
    n_paths: u64,
    streams: &StreamFactory,
) -> Result<ErrorReport> {
    ConvergenceExperiment::new(model.clone(), coeffs.clone(), x0, horizon, ladder.clone(), n_paths).run(streams)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tc_sde::builtin_coefficients;
    use proptest::prelude::*;

    fn st(beta: f64) -> SubordinatorModel {
        SubordinatorModel::stable(beta).unwrap()
    }

    #[test]
    fn ladder_validation() {
        assert!(ResolutionLadder::new(1e-3, vec![2, 4, 8]).is_ok());
        assert!(ResolutionLadder::new(1e-3, vec![1, 4, 8]).is_err());
        assert!(ResolutionLadder::new(1e-3, vec![4, 4, 8]).is_err());
        assert!(ResolutionLadder::new(0.1, vec![2, 4, 10]).is_err());
        assert!(ResolutionLadder::new(0.0, vec![2]).is_err());
        assert!(ResolutionLadder::new(1e-3, vec![]).is_err());
        let l = ResolutionLadder::dyadic(2f64.powi(-14), 4, 9).unwrap();
        assert_eq!(l.factors(), &[16, 32, 64, 128, 256, 512]);
    }

    #[test]
    fn fit_exact_power_laws() {
        let deltas = [1e-3, 2e-3, 4e-3, 8e-3];
        let f = fit_order(&deltas, &deltas.map(|d: f64| d.sqrt())).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12 && f.slope_se < 1e-10);
        let f = fit_order(&deltas, &deltas.map(|d: f64| 3.0 * d.powf(0.3))).unwrap();
        assert!((f.slope - 0.3).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fit_jittered_power_law() {
        // OLS by hand over (ln d, ln(d^0.5 (1+u))) with fixed jitter
        let deltas = [1e-3f64, 2e-3, 4e-3, 8e-3, 1.6e-2];
        let jitter = [0.05, -0.05, 0.03, -0.04, 0.05];
        let means: Vec<f64> = deltas.iter().zip(jitter).map(|(d, u)| d.sqrt() * (1.0 + u)).collect();
        let f = fit_order(&deltas, &means).unwrap();
        assert!(f.slope > 0.45 && f.slope < 0.55, "{}", f.slope);
        assert!(f.slope_se > 0.0);
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(matches!(
            fit_order(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(fit_order(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::Degenerate(_))));
        assert!(matches!(
            fit_order(&[1.0, 2.0, 3.0], &[1.0, -1.0, 2.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn zero_coefficients_give_zero_errors() {
        let zero = builtin_coefficients("linear:0,0").unwrap();
        let ladder = ResolutionLadder::new(1e-3, vec![4, 8, 16]).unwrap();
        let rep = coupled_experiment(&st(0.8), &zero, 1.0, 1.0, &ladder, 20, &StreamFactory::new(1)).unwrap();
        assert!(rep.zero_error);
        assert!(rep.sup_fit.is_none() && rep.endpoint_fit.is_none());
        assert!(rep
            .records
            .iter()
            .all(|r| r.sup_error_mean == 0.0 && r.endpoint_error_mean == 0.0));
    }

    #[test]
    fn insufficient_ladder() {
        let pair = builtin_coefficients("fig2").unwrap();
        let ladder = ResolutionLadder::new(1e-3, vec![16, 32]).unwrap();
        let err = coupled_experiment(&st(0.8), &pair, 1.0, 1.0, &ladder, 5, &StreamFactory::new(1)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn hypothesis_flag() {
        let ladder = ResolutionLadder::new(1e-3, vec![16, 32, 64]).unwrap();
        let lin = builtin_coefficients("linear:0.5,0.5").unwrap();
        let f = StreamFactory::new(4);
        assert!(
            !coupled_experiment(&st(0.75), &lin, 1.0, 1.0, &ladder, 10, &f)
                .unwrap()
                .hypotheses_violated
        );
        assert!(
            coupled_experiment(&st(0.4), &lin, 1.0, 1.0, &ladder, 10, &f)
                .unwrap()
                .hypotheses_violated
        );
        let fig2 = builtin_coefficients("fig2").unwrap();
        assert!(
            !coupled_experiment(&st(0.4), &fig2, 1.0, 1.0, &ladder, 10, &f)
                .unwrap()
                .hypotheses_violated
        );
    }

    #[test]
    fn expected_order_respects_time_regularity() {
        let ladder = ResolutionLadder::new(1e-3, vec![16, 32, 64]).unwrap();
        let f = StreamFactory::new(4);
        let fig2 = builtin_coefficients("fig2").unwrap();
        let rep = coupled_experiment(&st(0.8), &fig2, 1.0, 1.0, &ladder, 10, &f).unwrap();
        assert!((rep.expected_order - 0.45).abs() < 1e-12);
        let rough = builtin_coefficients("rough:0.3,0.5").unwrap();
        let rep = coupled_experiment(&st(0.8), &rough, 1.0, 1.0, &ladder, 10, &f).unwrap();
        assert!((rep.expected_order - 0.3).abs() < 1e-12);
    }

    #[test]
    fn small_factor_warns() {
        let ladder = ResolutionLadder::new(1e-3, vec![2, 4, 8]).unwrap();
        let fig2 = builtin_coefficients("fig2").unwrap();
        let rep = coupled_experiment(&st(0.8), &fig2, 1.0, 1.0, &ladder, 5, &StreamFactory::new(2)).unwrap();
        assert!(rep.warnings.iter().any(|w| w.contains("reference bias")));
    }

    #[test]
    fn error_mean_trend_is_monotone() {
        let ladder = ResolutionLadder::new(2f64.powi(-11), vec![16, 32, 64, 128]).unwrap();
        let fig2 = builtin_coefficients("fig2").unwrap();
        let rep = coupled_experiment(&st(0.85), &fig2, 1.0, 1.0, &ladder, 300, &StreamFactory::new(8)).unwrap();
        for w in rep.records.windows(2) {
            let slack = 2.0 * (w[0].sup_error_se + w[1].sup_error_se);
            assert!(w[0].sup_error_mean <= w[1].sup_error_mean + slack, "{:?}", rep.records);
        }
        assert!(rep.sup_slope().unwrap() > 0.0);
    }

    #[test]
    fn report_is_deterministic() {
        let ladder = ResolutionLadder::new(1e-3, vec![16, 32, 64]).unwrap();
        let fig2 = builtin_coefficients("fig2").unwrap();
        let a = coupled_experiment(&st(0.8), &fig2, 1.0, 1.0, &ladder, 40, &StreamFactory::new(5)).unwrap();
        let b = coupled_experiment(&st(0.8), &fig2, 1.0, 1.0, &ladder, 40, &StreamFactory::new(5)).unwrap();
        assert_eq!(a, b);
        let c = coupled_experiment(&st(0.8), &fig2, 1.0, 1.0, &ladder, 40, &StreamFactory::new(6)).unwrap();
        assert_ne!(a.records, c.records);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn coupling_is_bit_exact(seed in any::<u64>()) {
            let ladder = ResolutionLadder::new(1e-3, vec![3, 8, 20]).unwrap();
            let pair = builtin_coefficients("linear:0.5,0.5").unwrap();
            let f = StreamFactory::new(seed);
            let cp = CoupledPath::simulate(&st(0.75), &pair, 1.0, 1.0, &ladder, &f, 0, DEFAULT_MAX_STEPS).unwrap();
            let fine_d = cp.reference.clock().d_values();
            let fine_db = cp.reference.brownian_increments();
            for (c, &m) in cp.coarse.iter().zip(ladder.factors()) {
                for (k, &d) in c.clock().d_values().iter().enumerate() {
                    if k * m < fine_d.len() {
                        prop_assert_eq!(d.to_bits(), fine_d[k * m].to_bits());
                    }
                }
                for (k, &db) in c.brownian_increments().iter().enumerate() {
                    let sum: f64 = fine_db[k * m..(k + 1) * m].iter().sum();
                    prop_assert_eq!(db.to_bits(), sum.to_bits());
                }
            }
        }

        #[test]
        fn sup_over_jumps_equals_dense_evaluation(seed in any::<u64>()) {
            let ladder = ResolutionLadder::new(1e-3, vec![4, 16, 32]).unwrap();
            let pair = builtin_coefficients("fig2").unwrap();
            let f = StreamFactory::new(seed);
            let cp = CoupledPath::simulate(&st(0.8), &pair, 1.0, 1.0, &ladder, &f, 0, DEFAULT_MAX_STEPS).unwrap();
            let fine = &cp.reference;
            let clock = fine.clock();
            let mut times = Vec::new();
            for n in 0..=clock.crossing_index() {
                let a = clock.tau(n);
                let b = clock.tau(n + 1).min(1.0);
                times.push(a);
                for j in 1..10 {
                    times.push(a + (b - a) * j as f64 / 10.0);
                }
            }
            times.push(1.0);
            for c in &cp.coarse {
                let dense = times
                    .iter()
                    .map(|&t| (fine.value_at(t).unwrap() - c.value_at(t).unwrap()).abs())
                    .fold(0.0, f64::max);
                prop_assert_eq!(dense, sup_error(fine, c));
            }
        }
    }
}
