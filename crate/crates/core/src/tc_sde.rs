//! Euler-Maruyama on the random grid of a discretized inverse clock.
//!
//! For `X_t = x0 + int F(s, X_s) dE_s + int G(s, X_s) dB_{E_s}` the scheme is
//!
//! ```text
//! X_0 = x0,
//! X_{tau_{n+1}} = X_{tau_n} + F(tau_n, X_{tau_n}) delta + G(tau_n, X_{tau_n}) (B_{(n+1) delta} - B_{n delta}),
//! X_t = X_{tau_{n_t}},
//! ```
//!
//! with coefficients evaluated at physical jump times `tau_n` and the
//! Brownian motion sampled only at operational times `n delta`,
//! independently of the clock.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inverse_clock::ClockPath;

/// `|X^delta|` beyond this aborts the path.
pub const DIVERGENCE_BOUND: f64 = 1e12;

pub type CoefficientFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Declared constants of the coefficient conditions:
///
/// ```text
/// |F(t,x) - F(t,y)| + |G(t,x) - G(t,y)| <= K |x - y|
/// |F(t,x)| + |G(t,x)|                   <= K (1 + |x|)
/// |F(s,x) - F(t,x)|                     <= K (1 + |x|) |s - t|^theta_F
/// |G(s,x) - G(t,x)|                     <= K (1 + |x|) |s - t|^theta_G
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    pub k: f64,
    pub theta_f: f64,
    pub theta_g: f64,
    /// `G(t, x) = G(t)`.
    pub g_x_independent: bool,
}

/// Drift `F(t, x)` against `dE` and diffusion `G(t, x)` against `dB o E`.
#[derive(Clone)]
pub struct CoefficientPair {
    name: String,
    drift: CoefficientFn,
    diffusion: CoefficientFn,
    regularity: Regularity,
}

impl fmt::Debug for CoefficientPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientPair")
            .field("name", &self.name)
            .field("regularity", &self.regularity)
            .finish_non_exhaustive()
    }
}

impl CoefficientPair {
    pub fn new<F, G>(name: impl Into<String>, drift: F, diffusion: G, regularity: Regularity) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let Regularity {
            k, theta_f, theta_g, ..
        } = regularity;
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::Config(format!("constant K must be > 0, got {k}")));
        }
        for (what, th) in [("theta_F", theta_f), ("theta_G", theta_g)] {
            if !(th > 0.0 && th <= 1.0) {
                return Err(Error::Config(format!("{what} must lie in (0,1], got {th}")));
            }
        }
        Ok(Self {
            name: name.into(),
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            regularity,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    #[inline]
    pub fn drift(&self, t: f64, x: f64) -> f64 {
        (self.drift)(t, x)
    }

    #[inline]
    pub fn diffusion(&self, t: f64, x: f64) -> f64 {
        (self.diffusion)(t, x)
    }

    /// Randomized spot check of the declared constants on `[0, horizon] x [-x_box, x_box]`.
    pub fn check_regularity<R: Rng + ?Sized>(
        &self,
        horizon: f64,
        x_box: f64,
        samples: usize,
        rng: &mut R,
    ) -> RegularityReport {
        let mut rep = RegularityReport::default();
        let Regularity { theta_f, theta_g, .. } = self.regularity;
        for _ in 0..samples {
            let t = rng.random_range(0.0..=horizon);
            let s = rng.random_range(0.0..=horizon);
            let x = rng.random_range(-x_box..=x_box);
            let y = rng.random_range(-x_box..=x_box);
            if x != y {
                let lip = ((self.drift(t, x) - self.drift(t, y)).abs()
                    + (self.diffusion(t, x) - self.diffusion(t, y)).abs())
                    / (x - y).abs();
                rep.lipschitz = rep.lipschitz.max(lip);
            }
            let growth = (self.drift(t, x).abs() + self.diffusion(t, x).abs()) / (1.0 + x.abs());
            rep.growth = rep.growth.max(growth);
            if s != t {
                let w = (1.0 + x.abs()) * (s - t).abs().powf(theta_f);
                rep.holder_f = rep.holder_f.max((self.drift(s, x) - self.drift(t, x)).abs() / w);
                let w = (1.0 + x.abs()) * (s - t).abs().powf(theta_g);
                rep.holder_g = rep
                    .holder_g
                    .max((self.diffusion(s, x) - self.diffusion(t, x)).abs() / w);
            }
            if self.regularity.g_x_independent {
                rep.g_x_spread = rep.g_x_spread.max((self.diffusion(t, x) - self.diffusion(t, y)).abs());
            }
        }
        rep
    }
}

/// Largest observed ratios in [`CoefficientPair::check_regularity`]; each must not exceed `K`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RegularityReport {
    pub lipschitz: f64,
    pub growth: f64,
    pub holder_f: f64,
    pub holder_g: f64,
    /// Largest `|G(t,x) - G(t,y)|` seen when `G` is declared `x`-independent.
    pub g_x_spread: f64,
}

impl RegularityReport {
    pub fn within(&self, k: f64) -> bool {
        let tol = 1e-12 * (1.0 + k);
        self.lipschitz <= k + tol
            && self.growth <= k + tol
            && self.holder_f <= k + tol
            && self.holder_g <= k + tol
            && self.g_x_spread == 0.0
    }
}

/// The built-in coefficient families.
///
/// Config form: `{family = "fig2"}`, `{family = "linear", a = 0.5, b = 0.5}`, ...
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CoefficientSpec {
    /// `F = sin(t) x`, `G = 1`.
    Fig2,
    /// `F = a x`, `G = b x`.
    Linear { a: f64, b: f64 },
    /// `F = mu`, `G = sigma`.
    Additive { mu: f64, sigma: f64 },
    /// `F = -theta x`, `G = sigma`.
    Ou { theta: f64, sigma: f64 },
    /// `F = x |t - t0|^theta`, `G = 1`: Hölder-`theta` in time, for the
    /// regime where the time regularity caps the order. Constants hold on `[0, 1]`.
    Rough { theta: f64, t0: f64 },
}

impl CoefficientSpec {
    /// Suggested `(x0, T)`; `X_0 = 1` on `[0, 1]` for every family.
    pub fn defaults(&self) -> (f64, f64) {
        (1.0, 1.0)
    }

    pub fn build(&self) -> Result<CoefficientPair> {
        let positive = |v: f64| if v > 0.0 { v } else { 1.0 };
        match *self {
            CoefficientSpec::Fig2 => CoefficientPair::new(
                self.to_string(),
                |t: f64, x: f64| t.sin() * x,
                |_, _| 1.0,
                Regularity {
                    k: 1.0,
                    theta_f: 1.0,
                    theta_g: 1.0,
                    g_x_independent: true,
                },
            ),
            CoefficientSpec::Linear { a, b } => CoefficientPair::new(
                self.to_string(),
                move |_, x| a * x,
                move |_, x| b * x,
                Regularity {
                    k: positive(a.abs() + b.abs()),
                    theta_f: 1.0,
                    theta_g: 1.0,
                    g_x_independent: b == 0.0,
                },
            ),
            CoefficientSpec::Additive { mu, sigma } => CoefficientPair::new(
                self.to_string(),
                move |_, _| mu,
                move |_, _| sigma,
                Regularity {
                    k: positive(mu.abs() + sigma.abs()),
                    theta_f: 1.0,
                    theta_g: 1.0,
                    g_x_independent: true,
                },
            ),
            CoefficientSpec::Ou { theta, sigma } => CoefficientPair::new(
                self.to_string(),
                move |_, x| -theta * x,
                move |_, _| sigma,
                Regularity {
                    k: positive(theta.abs().max(sigma.abs())),
                    theta_f: 1.0,
                    theta_g: 1.0,
                    g_x_independent: true,
                },
            ),
            CoefficientSpec::Rough { theta, t0 } => {
                if !(0.0..=1.0).contains(&t0) {
                    return Err(Error::Config(format!("rough family needs t0 in [0,1], got {t0}")));
                }
                CoefficientPair::new(
                    self.to_string(),
                    move |t: f64, x: f64| x * (t - t0).abs().powf(theta),
                    |_, _| 1.0,
                    Regularity {
                        k: 1.0,
                        theta_f: theta,
                        theta_g: 1.0,
                        g_x_independent: true,
                    },
                )
            }
        }
    }
}

impl fmt::Display for CoefficientSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientSpec::Fig2 => write!(f, "fig2"),
            CoefficientSpec::Linear { a, b } => write!(f, "linear:{a},{b}"),
            CoefficientSpec::Additive { mu, sigma } => write!(f, "additive:{mu},{sigma}"),
            CoefficientSpec::Ou { theta, sigma } => write!(f, "ou:{theta},{sigma}"),
            CoefficientSpec::Rough { theta, t0 } => write!(f, "rough:{theta},{t0}"),
        }
    }
}

/// `fig2`, `linear[:a,b]`, `additive[:mu,sigma]`, `ou[:theta,sigma]`,
/// `rough[:theta,t0]`. Omitted parameters take the defaults
/// `a = b = 0.5`, `mu = 0, sigma = 1`, `theta = sigma = 1`, `theta = 0.3, t0 = 0.5`.
impl FromStr for CoefficientSpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let params: Vec<f64> = if rest.is_empty() {
            Vec::new()
        } else {
            rest.split(',')
                .map(|p| {
                    p.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("not a number: {p:?}")))
                })
                .collect::<Result<_>>()?
        };
        let pair = |d: (f64, f64)| match params.as_slice() {
            [] => Ok(d),
            [p, q] => Ok((*p, *q)),
            _ => Err(Error::Config(format!("{name} takes two parameters, got {spec:?}"))),
        };
        match name.to_ascii_lowercase().as_str() {
            "fig2" if params.is_empty() => Ok(CoefficientSpec::Fig2),
            "linear" => pair((0.5, 0.5)).map(|(a, b)| CoefficientSpec::Linear { a, b }),
            "additive" => pair((0.0, 1.0)).map(|(mu, sigma)| CoefficientSpec::Additive { mu, sigma }),
            "ou" => pair((1.0, 1.0)).map(|(theta, sigma)| CoefficientSpec::Ou { theta, sigma }),
            "rough" => pair((0.3, 0.5)).map(|(theta, t0)| CoefficientSpec::Rough { theta, t0 }),
            _ => Err(Error::UnknownName(format!("coefficient family {spec:?}"))),
        }
    }
}

/// Looks up a built-in pair by its flag form (see [`CoefficientSpec`]).
pub fn builtin_coefficients(name: &str) -> Result<CoefficientPair> {
    name.parse::<CoefficientSpec>()?.build()
}

/// The piecewise-constant approximation `X^delta` on one clock.
#[derive(Debug, Clone)]
pub struct ApproximatePath {
    clock: ClockPath,
    x0: f64,
    values: Vec<f64>,
    brownian_increments: Vec<f64>,
}

impl ApproximatePath {
    pub fn clock(&self) -> &ClockPath {
        &self.clock
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// `X^delta_{tau_0}, ..., X^delta_{tau_N}`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn brownian_increments(&self) -> &[f64] {
        &self.brownian_increments
    }

    pub fn terminal_value(&self) -> f64 {
        *self.values.last().expect("values start with x0")
    }

    /// `X^delta_t = X^delta_{tau_{n_t}}`.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        Ok(self.values[self.clock.grid_index(t)?])
    }

    /// Rows `(n, tau_n, n delta, X_n)`.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, f64, f64)> + '_ {
        self.clock
            .staircase()
            .zip(&self.values)
            .map(|((n, tau, level), &x)| (n, tau, level, x))
    }
}

/// Runs the scheme, drawing `N(0, delta)` Brownian increments from `rng`
/// (which must be independent of the stream that built `clock`).
pub fn euler_maruyama<R: Rng + ?Sized>(
    clock: ClockPath,
    coeffs: &CoefficientPair,
    x0: f64,
    rng: &mut R,
) -> Result<ApproximatePath> {
    let scale = clock.delta().sqrt();
    let increments: Vec<f64> = (0..clock.crossing_index())
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    euler_maruyama_with_increments(clock, coeffs, x0, increments)
}

/// Runs the scheme on given Brownian increments `B_{(n+1) delta} - B_{n delta}`,
/// one per step (`N` in total).
pub fn euler_maruyama_with_increments(
    clock: ClockPath,
    coeffs: &CoefficientPair,
    x0: f64,
    brownian_increments: Vec<f64>,
) -> Result<ApproximatePath> {
    let steps = clock.crossing_index();
    if brownian_increments.len() != steps {
        return Err(Error::Domain(format!(
            "need {steps} Brownian increments, got {}",
            brownian_increments.len()
        )));
    }
    if !x0.is_finite() {
        return Err(Error::Domain(format!("initial value must be finite, got {x0}")));
    }
    let values = recursion(&clock, coeffs, x0, &brownian_increments)?;
    Ok(ApproximatePath {
        clock,
        x0,
        values,
        brownian_increments,
    })
}

fn recursion(clock: &ClockPath, coeffs: &CoefficientPair, x0: f64, db: &[f64]) -> Result<Vec<f64>> {
    let delta = clock.delta();
    let taus = clock.d_values();
    let mut values = Vec::with_capacity(db.len() + 1);
    let mut x = x0;
    values.push(x);
    for (n, (&tau, &dbn)) in taus.iter().zip(db).enumerate() {
        x = x + coeffs.drift(tau, x) * delta + coeffs.diffusion(tau, x) * dbn;
        if x.is_nan() || x.abs() > DIVERGENCE_BOUND {
            return Err(Error::PathDivergence { step: n + 1, value: x });
        }
        values.push(x);
    }
    Ok(values)
}
