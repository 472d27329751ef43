//! Fading and noise generation, effective power budgets and the per-source
//! transmit-coefficient caps.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::mapreduce::IvaProfile;
use crate::rng::rng_from;
use crate::topology::{distance, AggregationTree, MIN_CHANNEL_GAIN};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingModel {
    /// Circularly symmetric complex Gaussian coefficient.
    Rayleigh,
    /// Deterministic real coefficient with the mean power.
    Fixed,
}

/// Channel power is `reference_gain * distance^(-pathloss_exponent)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FadingConfig {
    pub model: FadingModel,
    pub pathloss_exponent: f64,
    pub reference_gain: f64,
    pub seed: u64,
}

impl Default for FadingConfig {
    fn default() -> Self {
        Self {
            model: FadingModel::Rayleigh,
            pathloss_exponent: 0.0,
            reference_gain: 1.0,
            seed: 0,
        }
    }
}

impl FadingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pathloss_exponent >= 0.0) || !self.pathloss_exponent.is_finite() {
            return Err(Error::InvalidInput(format!(
                "pathloss exponent must be >= 0, got {}",
                self.pathloss_exponent
            )));
        }
        if !(self.reference_gain > 0.0) || !self.reference_gain.is_finite() {
            return Err(Error::InvalidInput(format!(
                "reference gain must be > 0, got {}",
                self.reference_gain
            )));
        }
        Ok(())
    }

    pub fn mean_power(&self, d: f64) -> f64 {
        self.reference_gain * d.powf(-self.pathloss_exponent)
    }
}

/// Draws one coefficient per position pair, in the order given.
///
/// Rayleigh draws below [`MIN_CHANNEL_GAIN`] are rejected and redrawn.
pub fn draw_channels(
    positions: &[[f64; 2]],
    pairs: &[(usize, usize)],
    fading: &FadingConfig,
) -> Result<Vec<Complex64>> {
    fading.validate()?;
    let mut rng = rng_from(fading.seed, &[]);
    pairs
        .iter()
        .map(|&(i, j)| {
            let d = distance(&positions[i], &positions[j]);
            if d == 0.0 && fading.pathloss_exponent > 0.0 {
                return Err(Error::InvalidInput(format!(
                    "devices {} and {} share a position",
                    i + 1,
                    j + 1
                )));
            }
            let power = fading.mean_power(d);
            match fading.model {
                FadingModel::Fixed => Ok(Complex64::new(power.sqrt(), 0.0)),
                FadingModel::Rayleigh => {
                    let scale = (power / 2.0).sqrt();
                    loop {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        let h = Complex64::new(scale * re, scale * im);
                        if h.norm() >= MIN_CHANNEL_GAIN {
                            break Ok(h);
                        }
                    }
                }
            }
        })
        .collect()
}

/// Receiver noise variance per device (`sigma_j^2`).
///
/// Zero variances are accepted so noiseless runs can be expressed; the
/// general Dinkelbach solver routes those to the closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProfile {
    sigma_sq: Vec<f64>,
}

impl NoiseProfile {
    pub fn new(sigma_sq: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = sigma_sq
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0) || !v.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "noise variance of device {} must be finite and >= 0, got {v}",
                i + 1
            )));
        }
        Ok(Self { sigma_sq })
    }

    pub fn uniform(k: usize, sigma_sq: f64) -> Result<Self> {
        Self::new(vec![sigma_sq; k])
    }

    pub fn zero(k: usize) -> Self {
        Self {
            sigma_sq: vec![0.0; k],
        }
    }

    pub fn len(&self) -> usize {
        self.sigma_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma_sq.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.sigma_sq[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.sigma_sq
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            sigma_sq: self.sigma_sq.iter().map(|v| v * factor).collect(),
        }
    }

    /// Aggregate destination noise
    /// `sigma^2 = sum_{j in inter} |h_{j->K}|^2 sigma_j^2 + sigma_K^2`.
    pub fn aggregate_variance(&self, tree: &AggregationTree) -> f64 {
        tree.intermediates()
            .into_iter()
            .map(|j| tree.effective_channel(j).norm_sqr() * self.sigma_sq[j])
            .sum::<f64>()
            + self.sigma_sq[tree.root()]
    }

    /// Noise power an intermediate forwards along with its own receiver noise:
    /// `sum_{j in N_i^+ cap inter} |h_{j->i}|^2 sigma_j^2 + sigma_i^2`. Zero for leaves.
    pub fn forwarded_power(&self, tree: &AggregationTree, i: usize) -> f64 {
        if !tree.is_intermediate(i) {
            return 0.0;
        }
        tree.descendants(i)
            .iter()
            .filter(|&&j| tree.is_intermediate(j))
            .map(|&j| tree.path_channel(j, i).norm_sqr() * self.sigma_sq[j])
            .sum::<f64>()
            + self.sigma_sq[i]
    }
}

/// Transmit caps `P_i` and effective budgets `P̄_i` for the sources.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerBudget {
    pub p: Vec<f64>,
    pub p_bar: Vec<f64>,
}

impl PowerBudget {
    /// Computes `P̄` without rejecting infeasible sources.
    pub fn compute(tree: &AggregationTree, noise: &NoiseProfile, p: &[f64]) -> Result<Self> {
        check_lengths(tree, noise, p)?;
        let p_bar = (0..tree.sources())
            .map(|i| p[i] - noise.forwarded_power(tree, i))
            .collect();
        Ok(Self {
            p: p.to_vec(),
            p_bar,
        })
    }

    /// 1-based indices of sources with `P̄_i <= 0`.
    pub fn infeasible_devices(&self) -> Vec<usize> {
        self.p_bar
            .iter()
            .enumerate()
            .filter(|(_, &v)| !(v > 0.0))
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn is_feasible(&self) -> bool {
        self.p_bar.iter().all(|&v| v > 0.0)
    }
}

fn check_lengths(tree: &AggregationTree, noise: &NoiseProfile, p: &[f64]) -> Result<()> {
    if noise.len() != tree.k() {
        return Err(Error::InvalidInput(format!(
            "noise profile covers {} devices, tree has {}",
            noise.len(),
            tree.k()
        )));
    }
    if p.len() != tree.sources() {
        return Err(Error::InvalidInput(format!(
            "{} power caps given for {} sources",
            p.len(),
            tree.sources()
        )));
    }
    if let Some((i, v)) = p.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "power cap of device {} must be > 0, got {v}",
            i + 1
        )));
    }
    Ok(())
}

/// Effective power budgets; fails if any source is left with `P̄_i <= 0`.
pub fn effective_power_budgets(
    tree: &AggregationTree,
    noise: &NoiseProfile,
    p: &[f64],
) -> Result<PowerBudget> {
    let budget = PowerBudget::compute(tree, noise, p)?;
    let bad = budget.infeasible_devices();
    if bad.is_empty() {
        Ok(budget)
    } else {
        Err(Error::Infeasible { devices: bad })
    }
}

/// Per-source caps on `|eta_i|^2` and the vectors `b_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    /// `c_i = |h_{i->K}|^2 P̄_i / |1^T b_i|^2`.
    pub caps: Vec<f64>,
    /// `b_i` holds `a_j^agg` at every `j` in the subtree of `i` (itself
    /// included) and zero elsewhere.
    pub b: Vec<Vec<Complex64>>,
    /// `1^T b_i`.
    pub subtree_sums: Vec<Complex64>,
}

impl ConstraintSet {
    pub fn sources(&self) -> usize {
        self.caps.len()
    }

    /// `P_min = min_i c_i`.
    pub fn p_min(&self) -> f64 {
        self.caps.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_satisfied(&self, eta: &[Complex64], rel_tol: f64) -> bool {
        eta.iter()
            .zip(&self.caps)
            .all(|(e, c)| e.norm_sqr() <= c * (1.0 + rel_tol))
    }
}

pub fn constraint_set(
    tree: &AggregationTree,
    budget: &PowerBudget,
    ivas: &IvaProfile,
) -> Result<ConstraintSet> {
    let m = tree.sources();
    if ivas.k() != tree.k() {
        return Err(Error::InvalidInput(format!(
            "IVA profile has {} devices, tree has {}",
            ivas.k(),
            tree.k()
        )));
    }
    if budget.p_bar.len() != m {
        return Err(Error::InvalidInput("budget does not match tree".into()));
    }
    let bad = budget.infeasible_devices();
    if !bad.is_empty() {
        return Err(Error::Infeasible { devices: bad });
    }
    let a = ivas.values();
    let mut caps = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    let mut subtree_sums = Vec::with_capacity(m);
    for i in 0..m {
        let mut bi = vec![Complex64::new(0.0, 0.0); m];
        bi[i] = a[i];
        for &j in tree.descendants(i) {
            bi[j] = a[j];
        }
        let sum: Complex64 = bi.iter().sum();
        if sum.norm_sqr() == 0.0 {
            return Err(Error::DegenerateIva { device: i + 1 });
        }
        caps.push(tree.effective_channel(i).norm_sqr() * budget.p_bar[i] / sum.norm_sqr());
        b.push(bi);
        subtree_sums.push(sum);
    }
    Ok(ConstraintSet {
        caps,
        b,
        subtree_sums,
    })
}

/// Scales `base` so the received SNR `P_min / sigma^2` equals `target_snr`
/// (linear).
///
/// With noise `s * base`, each source contributes the bound
/// `s <= A_i P_i / (target * sigma_base^2 + A_i q_i)` where
/// `A_i = |h_{i->K}|^2 / |1^T b_i|^2` and `q_i` is its forwarded noise at unit
/// scale; the largest admissible `s` is the minimum of those bounds.
pub fn snr_calibrated_noise(
    tree: &AggregationTree,
    ivas: &IvaProfile,
    base: &NoiseProfile,
    p: &[f64],
    target_snr: f64,
) -> Result<NoiseProfile> {
    check_lengths(tree, base, p)?;
    if !(target_snr > 0.0) || !target_snr.is_finite() {
        return Err(Error::InvalidInput(format!(
            "target SNR must be positive, got {target_snr}"
        )));
    }
    let sigma_base = base.aggregate_variance(tree);
    if !(sigma_base > 0.0) {
        return Err(Error::InvalidInput(
            "cannot calibrate SNR with a zero noise profile".into(),
        ));
    }
    let a = ivas.values();
    let mut scale = f64::INFINITY;
    for i in 0..tree.sources() {
        let mut sum = a[i];
        for &j in tree.descendants(i) {
            sum += a[j];
        }
        if sum.norm_sqr() == 0.0 {
            return Err(Error::DegenerateIva { device: i + 1 });
        }
        let gain = tree.effective_channel(i).norm_sqr() / sum.norm_sqr();
        let q = base.forwarded_power(tree, i);
        scale = scale.min(gain * p[i] / (target_snr * sigma_base + gain * q));
    }
    Ok(base.scaled(scale))
}
