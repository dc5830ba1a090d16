//! Subordinator families and their increments.
//!
//! A subordinator here is a drift-free, killing-free Lévy clock with infinite
//! Lévy measure, described entirely by its Laplace exponent
//! `E[exp(-s D_t)] = exp(-t psi(s))`:
//!
//! | family          | `psi(s)`                  | RV index at infinity |
//! |-----------------|---------------------------|----------------------|
//! | stable          | `s^beta`                  | `beta`               |
//! | tempered stable | `(s+kappa)^beta-kappa^beta` | `beta`             |
//! | gamma           | `log(1+s)`                | `0`                  |
//! | stable mixture  | `sum_j a_j s^beta_j`      | `max_j beta_j`       |
//!
//! Increments `D_delta` are drawn exactly: Kanter's representation for the
//! one-sided stable law, exponential tilting by rejection for the tempered
//! family, and the boosted Marsaglia-Tsang gamma sampler.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tilted rejection is refused once the expected number of proposals,
/// `exp(delta * kappa^beta)`, exceeds `exp(5)`.
pub const MAX_TILT_EXPONENT: f64 = 5.0;

/// Hard cap on proposals per tempered-stable draw.
const MAX_REJECTION_ATTEMPTS: usize = 1_000_000;

/// The family and parameters of a [`SubordinatorModel`].
///
/// This is also the config-file form: `{kind = "stable", beta = 0.9}`,
/// `{kind = "tempered", beta = 0.5, kappa = 1.0}`, `{kind = "gamma"}`,
/// `{kind = "mixture", weights = [..], betas = [..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    Stable {
        beta: f64,
    },
    #[serde(rename = "tempered")]
    TemperedStable {
        beta: f64,
        kappa: f64,
    },
    Gamma,
    #[serde(rename = "mixture")]
    StableMixture {
        weights: Vec<f64>,
        betas: Vec<f64>,
    },
}

/// A validated subordinator model. Immutable; share freely across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelKind", into = "ModelKind")]
pub struct SubordinatorModel {
    kind: ModelKind,
}

fn check_index(beta: f64, what: &str) -> Result<()> {
    if beta.is_finite() && beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must lie in (0,1), got {beta}")))
    }
}

impl SubordinatorModel {
    pub fn stable(beta: f64) -> Result<Self> {
        check_index(beta, "stability index beta")?;
        Ok(Self {
            kind: ModelKind::Stable { beta },
        })
    }

    pub fn tempered_stable(beta: f64, kappa: f64) -> Result<Self> {
        check_index(beta, "stability index beta")?;
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::Config(format!(
                "tempering factor kappa must be finite and >= 0, got {kappa}"
            )));
        }
        Ok(Self {
            kind: ModelKind::TemperedStable { beta, kappa },
        })
    }

    pub fn gamma() -> Self {
        Self { kind: ModelKind::Gamma }
    }

    pub fn stable_mixture(weights: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != betas.len() {
            return Err(Error::Config(format!(
                "mixture needs matching non-empty weights and betas, got {} and {}",
                weights.len(),
                betas.len()
            )));
        }
        for &a in &weights {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::Config(format!("mixture weight must be > 0, got {a}")));
            }
        }
        for &b in &betas {
            check_index(b, "mixture index")?;
        }
        Ok(Self {
            kind: ModelKind::StableMixture { weights, betas },
        })
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn is_stable(&self) -> bool {
        matches!(self.kind, ModelKind::Stable { .. })
    }

    /// `psi(s)` in closed form.
    pub fn laplace_exponent(&self, s: f64) -> Result<f64> {
        check_positive(s)?;
        Ok(match &self.kind {
            ModelKind::Stable { beta } => s.powf(*beta),
            ModelKind::TemperedStable { beta, kappa } => tempered_psi(*beta, *kappa, s),
            ModelKind::Gamma => s.ln_1p(),
            ModelKind::StableMixture { weights, betas } => weights.iter().zip(betas).map(|(a, b)| a * s.powf(*b)).sum(),
        })
    }

    /// `(g(s), R(s))` with `g = psi'` and `R = psi - s psi'`, both in closed form.
    pub fn psi_derivatives(&self, s: f64) -> Result<(f64, f64)> {
        check_positive(s)?;
        Ok(match &self.kind {
            ModelKind::Stable { beta } => {
                let sb = s.powf(*beta);
                (beta * sb / s, (1.0 - beta) * sb)
            }
            ModelKind::TemperedStable { beta, kappa } => {
                if *kappa == 0.0 {
                    let sb = s.powf(*beta);
                    (beta * sb / s, (1.0 - beta) * sb)
                } else {
                    let u = s / kappa;
                    let g = beta * (s + kappa).powf(beta - 1.0);
                    // R = kappa^beta [ (1+u)^(beta-1) (1 + (1-beta) u) - 1 ]
                    let expo = (beta - 1.0) * u.ln_1p() + ((1.0 - beta) * u).ln_1p();
                    (g, kappa.powf(*beta) * expo.exp_m1())
                }
            }
            ModelKind::Gamma => (1.0 / (1.0 + s), gamma_remainder(s)),
            ModelKind::StableMixture { weights, betas } => {
                weights.iter().zip(betas).fold((0.0, 0.0), |(g, r), (a, b)| {
                    let sb = s.powf(*b);
                    (g + a * b * sb / s, r + a * (1.0 - b) * sb)
                })
            }
        })
    }

    /// Regular-variation index of `psi` at infinity.
    pub fn rv_index(&self) -> f64 {
        match &self.kind {
            ModelKind::Stable { beta } | ModelKind::TemperedStable { beta, .. } => *beta,
            ModelKind::Gamma => 0.0,
            ModelKind::StableMixture { betas, .. } => betas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Checks that increments of length `delta` can be sampled.
    pub fn check_step(&self, delta: f64) -> Result<()> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Domain(format!("step delta must be > 0, got {delta}")));
        }
        if let ModelKind::TemperedStable { beta, kappa } = &self.kind {
            let tilt = delta * kappa.powf(*beta);
            if tilt > MAX_TILT_EXPONENT {
                return Err(Error::Config(format!(
                    "tempered-stable rejection impractical: delta*kappa^beta = {tilt:.3} > {MAX_TILT_EXPONENT}; use a smaller delta"
                )));
            }
        }
        Ok(())
    }

    /// One draw of `D_delta`, which has Laplace transform `exp(-delta psi(s))`.
    ///
    /// Draws too small for an `f64` are returned as `f64::MIN_POSITIVE` so
    /// increments stay strictly positive.
    pub fn sample_increment<R: Rng + ?Sized>(&self, delta: f64, rng: &mut R) -> Result<f64> {
        self.check_step(delta)?;
        let z = match &self.kind {
            ModelKind::Stable { beta } => (log_standard_stable(*beta, rng) + delta.ln() / beta).exp(),
            ModelKind::TemperedStable { beta, kappa } => sample_tempered(*beta, *kappa, delta, rng)?,
            ModelKind::Gamma => sample_gamma(delta, rng),
            ModelKind::StableMixture { weights, betas } => weights
                .iter()
                .zip(betas)
                .map(|(a, b)| {
                    // a^(1/b) * delta^(1/b) * S_b carries psi(s) = a s^b
                    (log_standard_stable(*b, rng) + (a * delta).ln() / b).exp()
                })
                .sum(),
        };
        Ok(z.max(f64::MIN_POSITIVE))
    }
}

impl TryFrom<ModelKind> for SubordinatorModel {
    type Error = Error;

    fn try_from(kind: ModelKind) -> Result<Self> {
        match kind {
            ModelKind::Stable { beta } => Self::stable(beta),
            ModelKind::TemperedStable { beta, kappa } => Self::tempered_stable(beta, kappa),
            ModelKind::Gamma => Ok(Self::gamma()),
            ModelKind::StableMixture { weights, betas } => Self::stable_mixture(weights, betas),
        }
    }
}

impl From<SubordinatorModel> for ModelKind {
    fn from(model: SubordinatorModel) -> Self {
        model.kind
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for SubordinatorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ModelKind::Stable { beta } => write!(f, "stable:{beta}"),
            ModelKind::TemperedStable { beta, kappa } => write!(f, "tempered:{beta}:{kappa}"),
            ModelKind::Gamma => write!(f, "gamma"),
            ModelKind::StableMixture { weights, betas } => {
                write!(f, "mixture:{}:{}", join(weights), join(betas))
            }
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("not a number: {x:?}")))
        })
        .collect()
}

/// Parses the flag form: `stable:0.9`, `tempered:0.5:1.0` (or `tempered:0.5,1.0`),
/// `gamma`, `mixture:1,2:0.4,0.8` (weights then indices).
impl FromStr for SubordinatorModel {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let bad = || Error::Config(format!("malformed model spec {spec:?}"));
        match name.to_ascii_lowercase().as_str() {
            "stable" => {
                let p = parse_list(rest)?;
                match p.as_slice() {
                    [beta] => Self::stable(*beta),
                    _ => Err(bad()),
                }
            }
            "tempered" => {
                let p = parse_list(&rest.replace(':', ","))?;
                match p.as_slice() {
                    [beta, kappa] => Self::tempered_stable(*beta, *kappa),
                    _ => Err(bad()),
                }
            }
            "gamma" if rest.is_empty() => Ok(Self::gamma()),
            "mixture" => {
                let (w, b) = rest.split_once(':').ok_or_else(bad)?;
                Self::stable_mixture(parse_list(w)?, parse_list(b)?)
            }
            _ => Err(Error::UnknownName(format!("subordinator model {spec:?}"))),
        }
    }
}

fn check_positive(s: f64) -> Result<()> {
    if s > 0.0 && !s.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!("argument s must be > 0, got {s}")))
    }
}

fn tempered_psi(beta: f64, kappa: f64, s: f64) -> f64 {
    if kappa == 0.0 {
        s.powf(beta)
    } else {
        kappa.powf(beta) * (beta * (s / kappa).ln_1p()).exp_m1()
    }
}

/// `R(s) = log(1+s) - s/(1+s)` for the gamma subordinator, with a series
/// near zero where the two terms cancel.
fn gamma_remainder(s: f64) -> f64 {
    if s < 1e-3 {
        // sum_{k>=2} (-1)^k (k-1)/k s^k
        let mut term = s * s;
        let mut total = 0.0;
        for k in 2..12 {
            let kf = k as f64;
            total += (kf - 1.0) / kf * term;
            term *= -s;
        }
        total
    } else {
        s.ln_1p() - s / (1.0 + s)
    }
}

/// `log S` for a standard one-sided stable `S` with `E[exp(-sS)] = exp(-s^beta)`
/// (Kanter / Chambers-Mallows-Stuck).
fn log_standard_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let u: f64 = PI * rng.sample::<f64, _>(Open01);
    let log_w = (-rng.sample::<f64, _>(Open01).ln()).ln();
    let one_minus = 1.0 - beta;
    (beta * u).sin().ln() - u.sin().ln() / beta + one_minus / beta * (((one_minus * u).sin()).ln() - log_w)
}

fn sample_tempered<R: Rng + ?Sized>(beta: f64, kappa: f64, delta: f64, rng: &mut R) -> Result<f64> {
    let scale = delta.ln() / beta;
    if kappa == 0.0 {
        return Ok((log_standard_stable(beta, rng) + scale).exp());
    }
    for _ in 0..MAX_REJECTION_ATTEMPTS {
        let x = (log_standard_stable(beta, rng) + scale).exp();
        let u: f64 = rng.random();
        if u < (-kappa * x).exp() {
            return Ok(x);
        }
    }
    Err(Error::Resource(format!(
        "tempered-stable rejection exceeded {MAX_REJECTION_ATTEMPTS} proposals"
    )))
}

/// Gamma(delta, 1) as `Y * U^(1/delta)` with `Y ~ Gamma(1+delta, 1)`, in log
/// space so small shapes do not underflow to zero prematurely.
fn sample_gamma<R: Rng + ?Sized>(delta: f64, rng: &mut R) -> f64 {
    let boosted = Gamma::new(1.0 + delta, 1.0).expect("shape 1+delta is valid");
    let y: f64 = boosted.sample(rng);
    let u: f64 = rng.sample(Open01);
    (y.ln() + u.ln() / delta).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, StreamFactory};
    use proptest::prelude::*;

    fn models() -> Vec<SubordinatorModel> {
        vec![
            SubordinatorModel::stable(0.5).unwrap(),
            SubordinatorModel::stable(0.9).unwrap(),
            SubordinatorModel::tempered_stable(0.5, 1.0).unwrap(),
            SubordinatorModel::tempered_stable(0.7, 0.0).unwrap(),
            SubordinatorModel::gamma(),
            SubordinatorModel::stable_mixture(vec![1.0, 1.0], vec![0.3, 0.7]).unwrap(),
        ]
    }

    #[test]
    fn closed_form_values() {
        let st = SubordinatorModel::stable(0.5).unwrap();
        assert!((st.laplace_exponent(4.0).unwrap() - 2.0).abs() < 1e-15);
        let ts = SubordinatorModel::tempered_stable(0.5, 0.0).unwrap();
        assert!((ts.laplace_exponent(9.0).unwrap() - 3.0).abs() < 1e-15);
        let g = SubordinatorModel::gamma();
        let e = std::f64::consts::E;
        assert!((g.laplace_exponent(e - 1.0).unwrap() - 1.0).abs() < 1e-15);
        let tk = SubordinatorModel::tempered_stable(0.5, 1.0).unwrap();
        assert!((tk.laplace_exponent(1.0).unwrap() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        let mix = SubordinatorModel::stable_mixture(vec![1.0, 2.0], vec![0.5, 0.25]).unwrap();
        assert!((mix.laplace_exponent(16.0).unwrap() - (4.0 + 4.0)).abs() < 1e-13);
    }

    #[test]
    fn nonpositive_argument_is_domain_error() {
        for m in models() {
            assert!(matches!(m.laplace_exponent(0.0), Err(Error::Domain(_))));
            assert!(matches!(m.psi_derivatives(-1.0), Err(Error::Domain(_))));
            assert!(matches!(m.laplace_exponent(f64::NAN), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn constructor_rejects_bad_parameters() {
        assert!(SubordinatorModel::stable(1.0).is_err());
        assert!(SubordinatorModel::stable(0.0).is_err());
        assert!(SubordinatorModel::stable(f64::NAN).is_err());
        assert!(SubordinatorModel::tempered_stable(0.5, -0.1).is_err());
        assert!(SubordinatorModel::stable_mixture(vec![1.0, 0.0], vec![0.3, 0.7]).is_err());
        assert!(SubordinatorModel::stable_mixture(vec![1.0], vec![0.3, 0.7]).is_err());
        assert!(SubordinatorModel::stable_mixture(vec![], vec![]).is_err());
        assert!(SubordinatorModel::stable_mixture(vec![1.0], vec![1.2]).is_err());
    }

    #[test]
    fn derivatives_known_values() {
        let (g, r) = SubordinatorModel::stable(0.5).unwrap().psi_derivatives(1.0).unwrap();
        assert!((g - 0.5).abs() < 1e-15 && (r - 0.5).abs() < 1e-15);
        let (g, r) = SubordinatorModel::gamma().psi_derivatives(1.0).unwrap();
        assert!((g - 0.5).abs() < 1e-15);
        assert!((r - (2f64.ln() - 0.5)).abs() < 1e-15);
    }

    /// Central differences of `psi` are the oracle for `g`; `R` follows from it.
    #[test]
    fn derivatives_match_finite_differences() {
        for m in models() {
            for &s in &[0.05, 0.3, 1.0, 2.5, 10.0] {
                let h = 1e-5 * s;
                let psi = |x: f64| m.laplace_exponent(x).unwrap();
                let fd = (psi(s + h) - psi(s - h)) / (2.0 * h);
                let (g, r) = m.psi_derivatives(s).unwrap();
                assert!((g - fd).abs() < 1e-8 * (1.0 + g.abs()), "{m} s={s}: g={g} fd={fd}");
                let r_fd = psi(s) - s * fd;
                assert!((r - r_fd).abs() < 1e-8 * (1.0 + r.abs()), "{m} s={s}: R={r} fd={r_fd}");
            }
        }
    }

    #[test]
    fn remainder_vanishes_at_zero() {
        for m in models() {
            let (_, r_small) = m.psi_derivatives(1e-12).unwrap();
            let (_, r_tiny) = m.psi_derivatives(1e-20).unwrap();
            assert!((0.0..1e-3).contains(&r_small), "{m}: {r_small}");
            assert!(r_tiny <= r_small, "{m}");
        }
    }

    #[test]
    fn psi_increasing_g_decreasing_r_increasing() {
        let grid: Vec<f64> = (0..60).map(|k| 10f64.powf(-4.0 + k as f64 * 0.15)).collect();
        for m in models() {
            for w in grid.windows(2) {
                let (s1, s2) = (w[0], w[1]);
                assert!(m.laplace_exponent(s1).unwrap() < m.laplace_exponent(s2).unwrap(), "{m}");
                let (g1, r1) = m.psi_derivatives(s1).unwrap();
                let (g2, r2) = m.psi_derivatives(s2).unwrap();
                assert!(g1 > g2, "{m}: g({s1})={g1} g({s2})={g2}");
                assert!(r1 < r2, "{m}: R({s1})={r1} R({s2})={r2}");
            }
            assert!(m.laplace_exponent(1e-300).unwrap() < 1e-12);
        }
    }

    #[test]
    fn rv_indices() {
        assert_eq!(SubordinatorModel::stable(0.9).unwrap().rv_index(), 0.9);
        assert_eq!(SubordinatorModel::tempered_stable(0.6, 3.0).unwrap().rv_index(), 0.6);
        assert_eq!(SubordinatorModel::gamma().rv_index(), 0.0);
        let mix = SubordinatorModel::stable_mixture(vec![1.0, 1.0], vec![0.3, 0.7]).unwrap();
        assert_eq!(mix.rv_index(), 0.7);
    }

    #[test]
    fn tilt_guard() {
        let m = SubordinatorModel::tempered_stable(0.5, 100.0).unwrap();
        let mut rng = StreamFactory::new(1).stream(0, Purpose::Clock);
        assert!(matches!(m.sample_increment(1.0, &mut rng), Err(Error::Config(_))));
        assert!(m.sample_increment(0.01, &mut rng).is_ok());
        assert!(matches!(m.sample_increment(0.0, &mut rng), Err(Error::Domain(_))));
    }

    #[test]
    fn small_stable_step_is_positive() {
        let m = SubordinatorModel::stable(0.5).unwrap();
        let mut rng = StreamFactory::new(3).stream(0, Purpose::Clock);
        for _ in 0..10_000 {
            assert!(m.sample_increment(0.01, &mut rng).unwrap() > 0.0);
        }
    }

    #[test]
    fn gamma_mean_is_shape() {
        let m = SubordinatorModel::gamma();
        let mut rng = StreamFactory::new(11).stream(0, Purpose::Clock);
        let n = 1_000_000;
        let mean = (0..n).map(|_| m.sample_increment(2.0, &mut rng).unwrap()).sum::<f64>() / n as f64;
        // sd of the mean is sqrt(2)/1000
        assert!((mean - 2.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn tempered_laplace_transform_at_small_step() {
        let m = SubordinatorModel::tempered_stable(0.5, 1.0).unwrap();
        let mut rng = StreamFactory::new(12).stream(0, Purpose::Clock);
        let n = 1_000_000;
        let est = (0..n)
            .map(|_| (-m.sample_increment(0.01, &mut rng).unwrap()).exp())
            .sum::<f64>()
            / n as f64;
        let exact = (-0.01 * (2f64.sqrt() - 1.0)).exp();
        assert!(((est - exact) / exact).abs() < 0.01, "{est} vs {exact}");
    }

    #[test]
    fn parse_and_display() {
        for spec in ["stable:0.9", "tempered:0.5:1", "gamma", "mixture:1,2:0.4,0.8"] {
            let m: SubordinatorModel = spec.parse().unwrap();
            assert_eq!(m.to_string(), spec);
        }
        let t: SubordinatorModel = "tempered:0.5,1.0".parse().unwrap();
        assert_eq!(t, SubordinatorModel::tempered_stable(0.5, 1.0).unwrap());
        assert!(matches!(
            "levy:0.5".parse::<SubordinatorModel>(),
            Err(Error::UnknownName(_))
        ));
        assert!("stable:1.5".parse::<SubordinatorModel>().is_err());
        assert!("stable".parse::<SubordinatorModel>().is_err());
    }

    #[test]
    fn tagged_record_form() {
        let m: SubordinatorModel =
            serde_json::from_str(r#"{"kind":"mixture","weights":[1,2],"betas":[0.4,0.8]}"#).unwrap();
        assert_eq!(m.rv_index(), 0.8);
        let json = serde_json::to_string(&SubordinatorModel::tempered_stable(0.5, 1.0).unwrap()).unwrap();
        assert_eq!(json, r#"{"kind":"tempered","beta":0.5,"kappa":1.0}"#);
        assert!(serde_json::from_str::<SubordinatorModel>(r#"{"kind":"stable","beta":2}"#).is_err());
    }

    proptest! {
        #[test]
        fn increments_positive(beta in 0.05f64..0.95, delta in 1e-4f64..1.0, seed in any::<u64>()) {
            let mut rng = StreamFactory::new(seed).stream(0, Purpose::Clock);
            for m in [
                SubordinatorModel::stable(beta).unwrap(),
                SubordinatorModel::tempered_stable(beta, 2.0).unwrap(),
                SubordinatorModel::gamma(),
                SubordinatorModel::stable_mixture(vec![0.5, 1.5], vec![beta, 0.5]).unwrap(),
            ] {
                for _ in 0..20 {
                    let z = m.sample_increment(delta, &mut rng).unwrap();
                    prop_assert!(z > 0.0 && z.is_finite());
                }
            }
        }
    }
}
