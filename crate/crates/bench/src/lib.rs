//! Shared fixtures for the criterion benches.

use tempus_core::{ClockPath, Purpose, StreamFactory, SubordinatorModel};

pub const SEED: u64 = 0xbe9c;

pub fn stable(beta: f64) -> SubordinatorModel {
    SubordinatorModel::stable(beta).expect("valid index")
}

/// One clock on `[0, 1]` from path 0 of the bench seed.
pub fn clock(model: &SubordinatorModel, delta: f64) -> ClockPath {
    let mut rng = StreamFactory::new(SEED).stream(0, Purpose::Clock);
    ClockPath::build(model, delta, 1.0, &mut rng).expect("valid clock")
}
