//! Seeded Monte Carlo sweeps over received SNR or device count.
//!
//! Every trial draws its topology, channels and IVAs from seeds derived from
//! `(master seed, K, trial)` only, so all schemes and SNR points see the same
//! instances, and results do not depend on how trials are scheduled.

mod config;
mod output;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    constraint_set, effective_power_budgets, snr_calibrated_noise, ConstraintSet, NoiseProfile,
};
use crate::digital::{digital_resource_blocks, digital_shuffle_mse, DigitalScheme};
use crate::mapreduce::{IvaDistribution, IvaProfile};
use crate::optimize::{
    solve_common, solve_dinkelbach, solve_rayleigh_quotient, solve_unbiased, DinkelbachOptions,
    Solution,
};
use crate::protocol::empirical_mse;
use crate::rng::derive_seed;
use crate::topology::{build_mst_prim, random_geometric_topology, AggregationTree};
use crate::{Error, Result};

pub use config::{
    parse_range, DeviceValues, Evaluation, ExperimentConfig, NoiseMode, QuantizerMode, Scheme,
    SweepPoint,
};
pub use output::{parse_csv, plot_data, write_csv, write_plot_data};

/// One aggregated output record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep: f64,
    pub scheme: Scheme,
    pub nmse_mean: f64,
    pub nmse_se: f64,
    /// Mean OTA slots or digital resource blocks per feasible trial.
    pub resources: f64,
    pub infeasible_rate: f64,
    /// Mean Dinkelbach outer iterations (zero for other schemes).
    pub iters: f64,
    pub seed: u64,
}

const STREAM_TOPOLOGY: u64 = 0;
const STREAM_IVA: u64 = 1;
const STREAM_DIGITAL: u64 = 2;
const STREAM_DINKELBACH: u64 = 3;
const STREAM_NOISE: u64 = 4;

/// A feasible problem instance at one sweep point.
#[derive(Debug, Clone)]
pub struct Instance {
    pub tree: AggregationTree,
    pub ivas: IvaProfile,
    pub noise: NoiseProfile,
    /// Transmit caps of the sources.
    pub power: Vec<f64>,
    pub caps: ConstraintSet,
    /// Aggregate destination noise `sigma^2`.
    pub sigma_sq: f64,
    pub snr_linear: f64,
    pub seed: u64,
}

/// Per-scheme result on one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeOutcome {
    pub mse: f64,
    pub nmse: f64,
    pub resources: usize,
    pub iterations: usize,
}

impl Instance {
    /// Builds trial `trial` of a sweep point. Infeasible budgets surface as
    /// [`Error::Infeasible`].
    pub fn build(cfg: &ExperimentConfig, k: usize, snr_db: f64, trial: u64) -> Result<Self> {
        let seed = derive_seed(cfg.seed, &[k as u64, trial]);
        let topo = random_geometric_topology(
            k,
            cfg.radius,
            derive_seed(seed, &[STREAM_TOPOLOGY]),
            &cfg.fading,
        )?;
        let tree = build_mst_prim(&topo.graph)?;
        let ivas = cfg.iva.sample(k, derive_seed(seed, &[STREAM_IVA]))?;
        let base = NoiseProfile::new(cfg.sigma_sq.values(k))?;
        let mut power = cfg.power.values(k - 1);
        let snr_linear = 10f64.powf(snr_db / 10.0);
        let noise = match cfg.noise_mode {
            NoiseMode::Calibrated => snr_calibrated_noise(&tree, &ivas, &base, &power, snr_linear)?,
            NoiseMode::Fixed => {
                for p in &mut power {
                    *p *= snr_linear;
                }
                base
            }
        };
        let budget = effective_power_budgets(&tree, &noise, &power)?;
        let caps = constraint_set(&tree, &budget, &ivas)?;
        let sigma_sq = noise.aggregate_variance(&tree);
        Ok(Self {
            tree,
            ivas,
            noise,
            power,
            caps,
            sigma_sq,
            snr_linear,
            seed,
        })
    }

    pub fn solve(&self, scheme: Scheme, cfg: &ExperimentConfig) -> Result<Solution> {
        match scheme {
            Scheme::Common => solve_common(&self.caps, &self.ivas, self.sigma_sq),
            Scheme::Unbiased => solve_unbiased(&self.caps, &self.ivas, self.sigma_sq),
            Scheme::Rayleigh => solve_rayleigh_quotient(&self.caps, &self.ivas, self.sigma_sq),
            Scheme::Dinkelbach => {
                let opts = DinkelbachOptions {
                    eps: cfg.dinkelbach_eps,
                    max_iter: cfg.dinkelbach_max_iter,
                    rounds: cfg.randomization_rounds,
                    seed: derive_seed(self.seed, &[STREAM_DINKELBACH]),
                    ..DinkelbachOptions::default()
                };
                solve_dinkelbach(&self.caps, &self.ivas, self.sigma_sq, &opts)
            }
            Scheme::Qam4 | Scheme::Qam16 => Err(Error::InvalidInput(format!(
                "{scheme} is not a transceiver design"
            ))),
        }
    }

    /// Per-hop transmit powers for the digital schemes. In calibrated mode
    /// each hop's received SNR equals the sweep SNR; otherwise the OTA caps
    /// are reused.
    pub fn digital_powers(&self, mode: NoiseMode) -> Vec<f64> {
        match mode {
            NoiseMode::Fixed => self.power.clone(),
            NoiseMode::Calibrated => (0..self.tree.sources())
                .map(|u| {
                    let receiver = self.tree.parent(u).expect("sources have parents");
                    self.snr_linear * self.noise.get(receiver) / self.tree.hop_channel(u).norm_sqr()
                })
                .collect(),
        }
    }

    pub fn evaluate(&self, scheme: Scheme, cfg: &ExperimentConfig) -> Result<SchemeOutcome> {
        let truth = self.ivas.ground_truth().norm_sqr();
        if let Some(q) = scheme.q_bits() {
            let digital = DigitalScheme::for_distribution(
                q,
                &cfg.iva,
                cfg.quantizer == QuantizerMode::Randomized,
            )?;
            let out = digital_shuffle_mse(
                &self.tree,
                &self.ivas,
                &digital,
                &self.digital_powers(cfg.noise_mode),
                &self.noise,
                cfg.digital_draws,
                derive_seed(self.seed, &[STREAM_DIGITAL, q as u64]),
            )?;
            return Ok(SchemeOutcome {
                mse: out.mse,
                nmse: out.nmse,
                resources: digital_resource_blocks(&self.tree),
                iterations: 0,
            });
        }
        let sol = self.solve(scheme, cfg)?;
        let mse = match cfg.evaluation {
            Evaluation::Analytic => sol.mse,
            Evaluation::Simulated => {
                empirical_mse(
                    &self.tree,
                    &self.ivas,
                    &sol.design,
                    &self.noise,
                    cfg.noise_draws,
                    derive_seed(self.seed, &[STREAM_NOISE]),
                )?
                .0
            }
        };
        Ok(SchemeOutcome {
            mse,
            nmse: mse / truth,
            resources: self.tree.depth(),
            iterations: sol.iterations,
        })
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = compensated_sum(values.iter().map(|v| (v - mean).powi(2))) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

type TrialResult = Option<Vec<SchemeOutcome>>;

fn run_trial(cfg: &ExperimentConfig, point: &SweepPoint, trial: u64) -> Result<TrialResult> {
    let instance = match Instance::build(cfg, point.k, point.snr_db, trial) {
        Ok(inst) => inst,
        Err(Error::Infeasible { devices }) => {
            log::debug!("K={} snr={} trial {trial}: infeasible at {devices:?}", point.k, point.snr_db);
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    cfg.schemes
        .iter()
        .map(|&s| instance.evaluate(s, cfg))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn aggregate(cfg: &ExperimentConfig, point: &SweepPoint, trials: &[TrialResult]) -> Vec<ResultRow> {
    let feasible: Vec<&Vec<SchemeOutcome>> = trials.iter().flatten().collect();
    let infeasible_rate = 1.0 - feasible.len() as f64 / trials.len() as f64;
    cfg.schemes
        .iter()
        .enumerate()
        .map(|(idx, &scheme)| {
            let nmse: Vec<f64> = feasible.iter().map(|t| t[idx].nmse).collect();
            let (nmse_mean, nmse_se) = mean_and_se(&nmse);
            let n = feasible.len().max(1) as f64;
            ResultRow {
                sweep: point.value,
                scheme,
                nmse_mean,
                nmse_se,
                resources: compensated_sum(feasible.iter().map(|t| t[idx].resources as f64)) / n,
                infeasible_rate,
                iters: compensated_sum(feasible.iter().map(|t| t[idx].iterations as f64)) / n,
                seed: cfg.seed,
            }
        })
        .collect()
}

fn sweep_all(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for point in cfg.sweep_points() {
        let trials: Vec<TrialResult> = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(cfg, &point, t))
            .collect::<Result<_>>()?;
        log::info!("sweep point {} done ({} trials)", point.value, trials.len());
        rows.extend(aggregate(cfg, &point, &trials));
    }
    Ok(rows)
}

/// Runs the configured sweep; rows are ordered by sweep point, then by the
/// configured scheme order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| sweep_all(cfg)),
        None => sweep_all(cfg),
    }
}

/// Mean MSE of the common-coefficient and unbiased designs versus
/// `P_min / sigma^2` with `sigma^2 = 1` and `CN(0, 0.2)` source IVAs, averaged
/// over `trials` IVA draws. Rows report raw (not normalized) MSE.
pub fn fig4_rows(pmin_snr_db: &[f64], k: usize, trials: usize, seed: u64) -> Result<Vec<ResultRow>> {
    if k < 2 || trials == 0 || pmin_snr_db.is_empty() {
        return Err(Error::Config("fig4 needs k >= 2, trials >= 1 and a non-empty sweep".into()));
    }
    let dist = IvaDistribution::ComplexGaussian { mean: 0.0, var: 0.2 };
    let powers: Vec<f64> = (0..trials)
        .map(|t| {
            dist.sample(k, derive_seed(seed, &[k as u64, t as u64]))
                .map(|ivas| ivas.source_sum().norm_sqr())
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &db in pmin_snr_db {
        let p_min = 10f64.powf(db / 10.0);
        for scheme in [Scheme::Common, Scheme::Unbiased] {
            let mse: Vec<f64> = powers
                .iter()
                .map(|&s| match scheme {
                    Scheme::Common => crate::optimize::common_mse(p_min, 1.0, s),
                    _ => crate::optimize::unbiased_mse(p_min, 1.0),
                })
                .collect();
            let (mean, se) = mean_and_se(&mse);
            rows.push(ResultRow {
                sweep: db,
                scheme,
                nmse_mean: mean,
                nmse_se: se,
                resources: 1.0,
                infeasible_rate: 0.0,
                iters: 0.0,
                seed,
            });
        }
    }
    Ok(rows)
}
