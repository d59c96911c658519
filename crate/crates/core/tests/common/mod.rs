#![allow(dead_code)]

use std::path::PathBuf;

use flocktrack::data::{load_initial_data, DataCell, InitialData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RANDOM_BV_SEED: u64 = 20_251_014;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn load(name: &str) -> InitialData {
    load_initial_data(data_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Eight cells of moderate variation; values are rounded to three decimals so
/// the JSON copy in `data/` is exact.
pub fn random_bv(seed: u64) -> InitialData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let round = |x: f64| (x * 1000.0).round() / 1000.0;
    let cells = (0..8)
        .map(|_| DataCell {
            len: round(rng.random_range(0.08..0.17)),
            rho: round(rng.random_range(0.8..1.25)),
            v: round(rng.random_range(-0.15..0.15)),
        })
        .collect();
    InitialData::new(0.0, cells).unwrap()
}
