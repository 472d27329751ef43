use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::FadingConfig;
use crate::mapreduce::IvaDistribution;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Scheme {
    Common,
    Unbiased,
    Dinkelbach,
    Rayleigh,
    Qam4,
    Qam16,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Dinkelbach,
        Scheme::Rayleigh,
        Scheme::Common,
        Scheme::Unbiased,
        Scheme::Qam4,
        Scheme::Qam16,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Common => "common",
            Scheme::Unbiased => "unbiased",
            Scheme::Dinkelbach => "dinkelbach",
            Scheme::Rayleigh => "rayleigh",
            Scheme::Qam4 => "qam4",
            Scheme::Qam16 => "qam16",
        }
    }

    pub fn is_digital(self) -> bool {
        matches!(self, Scheme::Qam4 | Scheme::Qam16)
    }

    /// Bits per IVA component for the digital schemes.
    pub fn q_bits(self) -> Option<u32> {
        match self {
            Scheme::Qam4 => Some(2),
            Scheme::Qam16 => Some(4),
            _ => None,
        }
    }

    /// Parses a comma-separated list.
    pub fn parse_list(s: &str) -> Result<Vec<Scheme>> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?}")))
    }
}

impl TryFrom<String> for Scheme {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Scheme> for String {
    fn from(s: Scheme) -> String {
        s.as_str().to_string()
    }
}

/// How the sweep's SNR value sets noise and power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// Scale the noise profile so that `P_min / sigma^2` equals the sweep SNR;
    /// every digital hop then sees the same received SNR.
    Calibrated,
    /// Keep the configured noise and scale all power caps by the sweep SNR
    /// (in dB, relative to the configured caps). Trials may be infeasible.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantizerMode {
    Deterministic,
    Randomized,
}

impl FromStr for QuantizerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deterministic" => Ok(QuantizerMode::Deterministic),
            "randomized" => Ok(QuantizerMode::Randomized),
            _ => Err(Error::Config(format!("unknown quantizer mode {s:?}"))),
        }
    }
}

/// How the OTA schemes' MSE is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Evaluation {
    Analytic,
    /// Mean squared error of the protocol simulator over `noise_draws` draws.
    Simulated,
}

/// A default value with per-device overrides keyed by 1-based device index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceValues {
    pub default: f64,
    pub overrides: BTreeMap<String, f64>,
}

impl DeviceValues {
    pub fn uniform(default: f64) -> Self {
        Self {
            default,
            overrides: BTreeMap::new(),
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        for key in self.overrides.keys() {
            match key.parse::<usize>() {
                Ok(d) if d >= 1 => {}
                _ => {
                    return Err(Error::Config(format!(
                        "{what} override key {key:?} is not a 1-based device index"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Values for `count` devices (0-based positions).
    pub fn values(&self, count: usize) -> Vec<f64> {
        let mut out = vec![self.default; count];
        for (key, v) in &self.overrides {
            if let Ok(d) = key.parse::<usize>() {
                if (1..=count).contains(&d) {
                    out[d - 1] = *v;
                }
            }
        }
        out
    }
}

impl Default for DeviceValues {
    fn default() -> Self {
        Self::uniform(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k: usize,
    pub radius: f64,
    pub fading: FadingConfig,
    /// Received SNR points in dB; with a non-empty `k_sweep` only the first is used.
    pub snr_db: Vec<f64>,
    pub k_sweep: Vec<usize>,
    pub iva: IvaDistribution,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    pub seed: u64,
    pub noise_mode: NoiseMode,
    pub sigma_sq: DeviceValues,
    pub power: DeviceValues,
    pub dinkelbach_eps: f64,
    pub dinkelbach_max_iter: usize,
    pub randomization_rounds: usize,
    pub quantizer: QuantizerMode,
    /// Channel-noise realizations per instance for the digital schemes.
    pub digital_draws: usize,
    pub evaluation: Evaluation,
    pub noise_draws: usize,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k: 20,
            radius: 0.4,
            fading: FadingConfig::default(),
            snr_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            k_sweep: Vec::new(),
            iva: IvaDistribution::Uniform { lo: 1.0, hi: 5.0 },
            schemes: Scheme::ALL.to_vec(),
            trials: 200,
            seed: 1,
            noise_mode: NoiseMode::Calibrated,
            sigma_sq: DeviceValues::uniform(1.0),
            power: DeviceValues::uniform(1.0),
            dinkelbach_eps: 1e-6,
            dinkelbach_max_iter: 50,
            randomization_rounds: 100,
            quantizer: QuantizerMode::Randomized,
            digital_draws: 20,
            evaluation: Evaluation::Analytic,
            noise_draws: 1000,
            threads: None,
            out: None,
        }
    }
}

/// One point of a sweep: the device count and the SNR it runs at, plus the
/// value reported in the `sweep` column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub k: usize,
    pub snr_db: f64,
    pub value: f64,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return fail("trials must be >= 1".into());
        }
        if self.schemes.is_empty() {
            return fail("at least one scheme is required".into());
        }
        if self.snr_db.is_empty() {
            return fail("the SNR sweep is empty".into());
        }
        if self.snr_db.iter().any(|v| !v.is_finite()) {
            return fail("SNR values must be finite".into());
        }
        if self.k_sweep.is_empty() && self.k < 2 || self.k_sweep.iter().any(|&k| k < 2) {
            return fail("device counts must be >= 2".into());
        }
        if !(self.radius > 0.0) {
            return fail(format!("radius must be positive, got {}", self.radius));
        }
        if !(self.dinkelbach_eps > 0.0) || self.dinkelbach_max_iter == 0 {
            return fail("Dinkelbach tolerance and iteration cap must be positive".into());
        }
        if self.digital_draws == 0 || self.noise_draws < 2 {
            return fail("digital_draws must be >= 1 and noise_draws >= 2".into());
        }
        if self.threads == Some(0) {
            return fail("threads must be >= 1".into());
        }
        if self.sigma_sq.default < 0.0 || self.sigma_sq.overrides.values().any(|v| *v < 0.0) {
            return fail("noise variances must be >= 0".into());
        }
        if self.power.default <= 0.0 || self.power.overrides.values().any(|v| *v <= 0.0) {
            return fail("power caps must be > 0".into());
        }
        self.sigma_sq.validate("sigma_sq")?;
        self.power.validate("power")?;
        self.fading.validate()?;
        self.iva.validate()
    }

    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        if self.k_sweep.is_empty() {
            self.snr_db
                .iter()
                .map(|&snr| SweepPoint {
                    k: self.k,
                    snr_db: snr,
                    value: snr,
                })
                .collect()
        } else {
            self.k_sweep
                .iter()
                .map(|&k| SweepPoint {
                    k,
                    snr_db: self.snr_db[0],
                    value: k as f64,
                })
                .collect()
        }
    }
}

/// Parses `a,b,c` or `start:stop:step` (inclusive of `stop` up to rounding).
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot parse range {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let (start, stop, step) = (v[0], v[1], v[2]);
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| start + i as f64 * step).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("-5:20:5").unwrap(), vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0]);
        assert_eq!(parse_range("1, 2.5").unwrap(), vec![1.0, 2.5]);
        assert!(parse_range("3:1:1").is_err());
        assert!(parse_range("x").is_err());
    }

    #[test]
    fn toml_round_trip_and_overrides() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            k = 5
            schemes = ["common", "qam4"]
            iva = "cgauss:3:1.3333"
            [sigma_sq]
            default = 0.5
            overrides = { "5" = 0.25 }
            [power]
            default = 2.0
            "#,
        )
        .unwrap();
        assert_eq!(cfg.sigma_sq.values(5), vec![0.5, 0.5, 0.5, 0.5, 0.25]);
        assert_eq!(cfg.power.values(4), vec![2.0; 4]);
        assert_eq!(cfg.schemes, vec![Scheme::Common, Scheme::Qam4]);
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml_str("trials = 0").is_err());
        assert!(ExperimentConfig::from_toml_str("schemes = []").is_err());
        assert!(ExperimentConfig::from_toml_str("schemes = [\"fancy\"]").is_err());
        assert!(ExperimentConfig::from_toml_str("[power]\noverrides = { \"x\" = 1.0 }").is_err());
        assert!(ExperimentConfig::from_toml_str("unknown_key = 1").is_err());
    }
}
