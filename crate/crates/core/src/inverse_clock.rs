//! The discretized inverse subordinator.
//!
//! Given i.i.d. increments `Z_i ~ D_delta`, the subordinator is sampled on
//! the operational grid, `D_0 = 0`, `D_{i delta} = D_{(i-1) delta} + Z_i`,
//! until the first index `N + 1` with `D_{(N+1) delta} > T`. The staircase
//!
//! ```text
//! E^delta_t = n delta   for t in [D_{n delta}, D_{(n+1) delta}),
//! ```
//!
//! satisfies `E_t - delta <= E^delta_t <= E_t`. The physical jump times
//! `tau_n = D_{n delta}` form the random grid of the SDE scheme.

use rand::Rng;

use crate::error::{Error, Result};
use crate::levy_clock::SubordinatorModel;

/// Default cap on the number of operational steps in one clock.
pub const DEFAULT_MAX_STEPS: usize = 1_000_000_000;

/// One realized clock on `[0, T]`.
///
/// `d_values` holds `D_0, ..., D_{(N+1) delta}`. In exact arithmetic the
/// values are strictly increasing; in floating point an increment below
/// one ulp of the running sum leaves two neighbours equal (common for the
/// gamma clock with small `delta`), so only `D_n <= D_{n+1}` is guaranteed.
/// Equal neighbours make an empty cell, which every query here handles.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockPath {
    delta: f64,
    horizon: f64,
    d_values: Vec<f64>,
    crossing: usize,
}

fn check_grid(delta: f64, horizon: f64) -> Result<()> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::Domain(format!("step delta must be > 0, got {delta}")));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Domain(format!("horizon T must be > 0, got {horizon}")));
    }
    Ok(())
}

impl ClockPath {
    /// Simulates a clock with the default step cap.
    pub fn build<R: Rng + ?Sized>(model: &SubordinatorModel, delta: f64, horizon: f64, rng: &mut R) -> Result<Self> {
        Self::build_capped(model, delta, horizon, DEFAULT_MAX_STEPS, rng)
    }

    /// Simulates a clock, failing with a resource error once `N` would
    /// exceed `max_steps`.
    pub fn build_capped<R: Rng + ?Sized>(
        model: &SubordinatorModel,
        delta: f64,
        horizon: f64,
        max_steps: usize,
        rng: &mut R,
    ) -> Result<Self> {
        check_grid(delta, horizon)?;
        model.check_step(delta)?;
        let mut d_values = vec![0.0];
        let mut d = 0.0;
        while d <= horizon {
            if d_values.len() > max_steps + 1 {
                return Err(Error::Resource(format!(
                    "clock exceeded {max_steps} steps before crossing T = {horizon}"
                )));
            }
            d += model.sample_increment(delta, rng)?;
            d_values.push(d);
        }
        let crossing = d_values.len() - 2;
        Ok(Self {
            delta,
            horizon,
            d_values,
            crossing,
        })
    }

    /// Builds a clock from given increments, consuming them until the
    /// horizon is crossed. Deterministic increments give fixture clocks
    /// (e.g. `Z_i = delta` reproduces the classical grid `E^delta_t = delta floor(t/delta)`).
    pub fn from_increments<I>(delta: f64, horizon: f64, increments: I) -> Result<Self>
    where
        I: IntoIterator<Item = f64>,
    {
        check_grid(delta, horizon)?;
        let mut d_values = vec![0.0];
        let mut d = 0.0;
        let mut it = increments.into_iter();
        while d <= horizon {
            let z = it
                .next()
                .ok_or_else(|| Error::Domain(format!("increments exhausted before crossing T = {horizon}")))?;
            if !(z > 0.0 && z.is_finite()) {
                return Err(Error::Domain(format!("increment must be positive, got {z}")));
            }
            d += z;
            d_values.push(d);
        }
        let crossing = d_values.len() - 2;
        Ok(Self {
            delta,
            horizon,
            d_values,
            crossing,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `D_0, ..., D_{(N+1) delta}`; length `N + 2`.
    pub fn d_values(&self) -> &[f64] {
        &self.d_values
    }

    /// `N`, the index with `T in [D_{N delta}, D_{(N+1) delta})`.
    pub fn crossing_index(&self) -> usize {
        self.crossing
    }

    /// `tau_n = D_{n delta}`.
    pub fn tau(&self, n: usize) -> f64 {
        self.d_values[n]
    }

    /// The subordinator increments `Z_1, ..., Z_{N+1}`.
    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.d_values.windows(2).map(|w| w[1] - w[0])
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if (0.0..=self.horizon).contains(&t) {
            Ok(())
        } else {
            Err(Error::Domain(format!("time {t} outside [0, {}]", self.horizon)))
        }
    }

    /// `n_t = max{n : tau_n <= t}` by binary search.
    pub fn grid_index(&self, t: f64) -> Result<usize> {
        self.check_time(t)?;
        // d_values[0] = 0 <= t, so the partition point is at least 1.
        Ok(self.d_values.partition_point(|&d| d <= t) - 1)
    }

    /// `E^delta_t = n_t delta`.
    pub fn inverse_at(&self, t: f64) -> Result<f64> {
        Ok(self.grid_index(t)? as f64 * self.delta)
    }

    /// `E^delta_T = N delta`.
    pub fn terminal_level(&self) -> f64 {
        self.crossing as f64 * self.delta
    }

    /// Rows `(n, tau_n, n delta)` for `n = 0..=N`, the staircase on `[0, T]`.
    pub fn staircase(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.d_values[..=self.crossing]
            .iter()
            .enumerate()
            .map(move |(n, &tau)| (n, tau, n as f64 * self.delta))
    }
}

/// A fine cumulative clock from which coarser clocks on the same `omega` are
/// read off.
///
/// The clock with step `m * delta` uses `D_{k m delta}`, the running sum of
/// consecutive groups of `m` fine increments; it is taken straight from the
/// fine cumulative values so shared grid points agree bit for bit.
#[derive(Debug, Clone)]
pub struct RefinedClock {
    delta: f64,
    horizon: f64,
    cumulative: Vec<f64>,
    fine_crossing: usize,
    max_factor: usize,
}

impl RefinedClock {
    /// Simulates fine increments up to the crossing of `T`, plus enough
    /// padding for every coarsening factor up to `max_factor`.
    pub fn build<R: Rng + ?Sized>(
        model: &SubordinatorModel,
        delta: f64,
        horizon: f64,
        max_factor: usize,
        max_steps: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if max_factor == 0 {
            return Err(Error::Config("coarsening factor must be >= 1".into()));
        }
        let fine = ClockPath::build_capped(model, delta, horizon, max_steps, rng)?;
        let fine_crossing = fine.crossing;
        let mut cumulative = fine.d_values;
        let mut d = *cumulative.last().expect("non-empty");
        for _ in 1..max_factor {
            d += model.sample_increment(delta, rng)?;
            cumulative.push(d);
        }
        Ok(Self {
            delta,
            horizon,
            cumulative,
            fine_crossing,
            max_factor,
        })
    }

    /// Uses explicit fine cumulative values `D_0 = 0, D_delta, ...`.
    pub fn from_cumulative(delta: f64, horizon: f64, cumulative: Vec<f64>, max_factor: usize) -> Result<Self> {
        check_grid(delta, horizon)?;
        if cumulative.first() != Some(&0.0) {
            return Err(Error::Domain("cumulative clock must start at 0".into()));
        }
        if cumulative
            .windows(2)
            .any(|w| w[0].is_nan() || w[1].is_nan() || w[1] < w[0])
        {
            return Err(Error::Domain("cumulative clock must be nondecreasing".into()));
        }
        let fine_crossing = cumulative
            .iter()
            .position(|&d| d > horizon)
            .ok_or_else(|| Error::Domain("cumulative clock never crosses T".into()))?
            - 1;
        if cumulative.len() < fine_crossing + 1 + max_factor {
            return Err(Error::Domain(format!(
                "cumulative clock too short for coarsening factor {max_factor}"
            )));
        }
        Ok(Self {
            delta,
            horizon,
            cumulative,
            fine_crossing,
            max_factor,
        })
    }

    pub fn fine_delta(&self) -> f64 {
        self.delta
    }

    /// The fine cumulative values, padding included.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn fine(&self) -> ClockPath {
        self.coarse(1).expect("factor 1 is always available")
    }

    /// The clock with step `factor * delta` on the same path.
    pub fn coarse(&self, factor: usize) -> Result<ClockPath> {
        if factor == 0 || factor > self.max_factor {
            return Err(Error::Config(format!(
                "coarsening factor {factor} outside 1..={}",
                self.max_factor
            )));
        }
        let crossing = self.fine_crossing / factor;
        // (crossing + 1) * factor <= fine_crossing + factor, covered by the padding
        let d_values: Vec<f64> = (0..=crossing + 1).map(|k| self.cumulative[k * factor]).collect();
        debug_assert!(d_values[crossing] <= self.horizon && d_values[crossing + 1] > self.horizon);
        Ok(ClockPath {
            delta: self.delta * factor as f64,
            horizon: self.horizon,
            d_values,
            crossing,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, StreamFactory};
    use proptest::prelude::*;

    fn fixed_clock() -> ClockPath {
        ClockPath::from_increments(0.1, 1.0, [0.2, 0.1, 0.3, 0.15, 0.05, 0.4]).unwrap()
    }

    #[test]
    fn layout() {
        let c = fixed_clock();
        // D = 0, .2, .3, .6, .75, .8, 1.2
        assert_eq!(c.crossing_index(), 5);
        assert_eq!(c.d_values().len(), c.crossing_index() + 2);
        assert!(c.tau(5) <= 1.0 && c.tau(6) > 1.0);
    }

    #[test]
    fn immediate_crossing() {
        let c = ClockPath::from_increments(0.5, 1.0, [3.0]).unwrap();
        assert_eq!(c.crossing_index(), 0);
        assert_eq!(c.d_values(), &[0.0, 3.0]);
        assert_eq!(c.inverse_at(1.0).unwrap(), 0.0);
    }

    #[test]
    fn queries_at_ends_and_cells() {
        let c = fixed_clock();
        assert_eq!(c.grid_index(0.0).unwrap(), 0);
        assert_eq!(c.inverse_at(0.0).unwrap(), 0.0);
        assert_eq!(c.grid_index(1.0).unwrap(), c.crossing_index());
        assert_eq!(c.inverse_at(1.0).unwrap(), c.terminal_level());
        // [tau_3, tau_4) = [0.6, 0.75)
        for t in [c.tau(3), 0.65, 0.7499] {
            assert_eq!(c.grid_index(t).unwrap(), 3);
            assert!((c.inverse_at(t).unwrap() - 0.3).abs() < 1e-15);
        }
        // a jump time belongs to the cell it opens
        assert_eq!(c.grid_index(c.tau(4)).unwrap(), 4);
    }

    #[test]
    fn out_of_range_times() {
        let c = fixed_clock();
        assert!(matches!(c.inverse_at(-1e-12), Err(Error::Domain(_))));
        assert!(matches!(c.grid_index(1.0 + 1e-12), Err(Error::Domain(_))));
        assert!(matches!(c.grid_index(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn bad_construction() {
        assert!(ClockPath::from_increments(0.1, 1.0, [0.5]).is_err());
        assert!(ClockPath::from_increments(0.1, 1.0, [0.5, 0.0, 1.0]).is_err());
        assert!(ClockPath::from_increments(0.0, 1.0, [2.0]).is_err());
        assert!(ClockPath::from_increments(0.1, -1.0, [2.0]).is_err());
    }

    #[test]
    fn step_cap_is_a_resource_error() {
        let m = SubordinatorModel::stable(0.9).unwrap();
        let mut rng = StreamFactory::new(5).stream(0, Purpose::Clock);
        let err = ClockPath::build_capped(&m, 1e-4, 1.0, 100, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }

    #[test]
    fn gamma_clock_invariants() {
        let m = SubordinatorModel::gamma();
        for path in 0..20 {
            let mut rng = StreamFactory::new(9).stream(path, Purpose::Clock);
            let c = ClockPath::build(&m, 0.01, 5.0, &mut rng).unwrap();
            let d = c.d_values();
            assert_eq!(d[0], 0.0);
            assert!(d.windows(2).all(|w| w[0] <= w[1]));
            assert!(c.tau(c.crossing_index()) <= 5.0 && 5.0 < c.tau(c.crossing_index() + 1));
        }
    }

    #[test]
    fn stable_clock_is_strictly_increasing() {
        let m = SubordinatorModel::stable(0.9).unwrap();
        let mut rng = StreamFactory::new(10).stream(0, Purpose::Clock);
        let c = ClockPath::build(&m, 1e-3, 1.0, &mut rng).unwrap();
        assert!(c.d_values().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn mean_level_of_inverse_stable() {
        // E[E_1] = 1 / Gamma(1 + beta); E^delta sits in [E - delta, E].
        let beta = 0.9;
        let delta = 1e-2;
        let m = SubordinatorModel::stable(beta).unwrap();
        let f = StreamFactory::new(2024);
        let levels: crate::stats::RunningMoments = (0..20_000)
            .map(|p| {
                let mut rng = f.stream(p, Purpose::Clock);
                ClockPath::build(&m, delta, 1.0, &mut rng).unwrap().terminal_level()
            })
            .collect();
        let exact = 1.0 / statrs::function::gamma::gamma(1.0 + beta);
        let se = levels.std_error();
        assert!(
            levels.mean() >= exact - delta - 3.0 * se,
            "{} vs {exact}",
            levels.mean()
        );
        assert!(levels.mean() <= exact + 3.0 * se, "{} vs {exact}", levels.mean());
    }

    #[test]
    fn coarse_clock_reads_fine_cumulative() {
        let cum = vec![0.0, 0.1, 0.25, 0.4, 0.7, 0.9, 1.3, 1.5, 1.6];
        let rc = RefinedClock::from_cumulative(0.1, 1.0, cum, 3).unwrap();
        assert_eq!(rc.fine().crossing_index(), 5);
        let c2 = rc.coarse(2).unwrap();
        assert_eq!(c2.d_values(), &[0.0, 0.25, 0.7, 1.3]);
        assert_eq!(c2.crossing_index(), 2);
        let c3 = rc.coarse(3).unwrap();
        assert_eq!(c3.d_values(), &[0.0, 0.4, 1.3]);
        assert!(rc.coarse(4).is_err());
    }

    #[test]
    fn staircase_rows() {
        let c = fixed_clock();
        let rows: Vec<_> = c.staircase().collect();
        assert_eq!(rows.len(), c.crossing_index() + 1);
        assert_eq!(rows[2].0, 2);
        assert_eq!(rows[2].1, c.tau(2));
        assert!((rows[2].2 - 0.2).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn grid_index_matches_linear_scan(seed in any::<u64>(), beta in 0.3f64..0.95, ts in prop::collection::vec(0.0f64..=1.0, 1..30)) {
            let m = SubordinatorModel::stable(beta).unwrap();
            let mut rng = StreamFactory::new(seed).stream(0, Purpose::Clock);
            let c = ClockPath::build(&m, 0.01, 1.0, &mut rng).unwrap();
            for t in ts {
                let scan = c.d_values().iter().rposition(|&d| d <= t).unwrap();
                prop_assert_eq!(c.grid_index(t).unwrap(), scan);
            }
        }

        #[test]
        fn coarse_sandwich(seed in any::<u64>(), m in 2usize..40) {
            let model = SubordinatorModel::stable(0.7).unwrap();
            let mut rng = StreamFactory::new(seed).stream(0, Purpose::Clock);
            let rc = RefinedClock::build(&model, 1e-3, 1.0, m, DEFAULT_MAX_STEPS, &mut rng).unwrap();
            let fine = rc.fine();
            let coarse = rc.coarse(m).unwrap();
            for k in 0..=200 {
                let t = k as f64 / 200.0;
                let nf = fine.grid_index(t).unwrap();
                let nc = coarse.grid_index(t).unwrap();
                // in fine-step units: 0 <= nf - m nc <= m
                prop_assert!(m * nc <= nf && nf <= m * nc + m);
                let gap = fine.inverse_at(t).unwrap() - coarse.inverse_at(t).unwrap();
                prop_assert!(gap >= -1e-12 && gap <= coarse.delta() + 1e-12);
            }
        }
    }
}
