//! Fixtures shared by the benchmarks in `benches/`.

use mlota::experiments::Instance;
use mlota::ExperimentConfig;

/// First feasible instance with `k` devices at `snr_db`, scanning trials from 0.
pub fn feasible_instance(cfg: &ExperimentConfig, k: usize, snr_db: f64) -> Instance {
    (0..1000)
        .find_map(|trial| Instance::build(cfg, k, snr_db, trial).ok())
        .expect("no feasible instance in 1000 trials")
}
