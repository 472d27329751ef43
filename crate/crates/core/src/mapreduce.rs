//! Nomographic MapReduce decomposition and partially aggregated IVAs.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::rng::rng_from;
use crate::{Error, Result};

/// Partially aggregated IVAs `a_k^agg`, one per device; the last entry is the
/// destination's own value.
#[derive(Debug, Clone, PartialEq)]
pub struct IvaProfile {
    values: Vec<Complex64>,
}

impl IvaProfile {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 devices, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput(format!("IVA of device {} is not finite", i + 1)));
        }
        Ok(Self { values })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// The source vector `a` (all devices but the destination).
    pub fn sources(&self) -> &[Complex64] {
        &self.values[..self.values.len() - 1]
    }

    pub fn destination_value(&self) -> Complex64 {
        self.values[self.values.len() - 1]
    }

    /// `1^T a`.
    pub fn source_sum(&self) -> Complex64 {
        self.sources().iter().sum()
    }

    pub fn ground_truth(&self) -> Complex64 {
        self.values.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceFn {
    Identity,
    Exp,
}

impl ReduceFn {
    pub fn apply(self, x: Complex64) -> Complex64 {
        match self {
            ReduceFn::Identity => x,
            ReduceFn::Exp => x.exp(),
        }
    }
}

/// Map outputs `a_n`, the outer function `psi` and the file placement
/// `{F_k}` (one list of file indices per device).
#[derive(Debug, Clone, PartialEq)]
pub struct NomographicTask {
    pub map_outputs: Vec<Complex64>,
    pub reduce: ReduceFn,
    pub assignment: Vec<Vec<usize>>,
}

impl NomographicTask {
    pub fn validate(&self) -> Result<()> {
        let n = self.map_outputs.len();
        let mut seen = vec![false; n];
        for (k, files) in self.assignment.iter().enumerate() {
            for &f in files {
                if f >= n {
                    return Err(Error::Partition(format!(
                        "device {} holds unknown file {f}",
                        k + 1
                    )));
                }
                if std::mem::replace(&mut seen[f], true) {
                    return Err(Error::Partition(format!("file {f} is assigned twice")));
                }
            }
        }
        if let Some(f) = seen.iter().position(|s| !s) {
            return Err(Error::Partition(format!("file {f} is not assigned")));
        }
        Ok(())
    }

    /// `psi(sum_n a_n)` evaluated directly, without the per-device split.
    pub fn evaluate_direct(&self) -> Complex64 {
        self.reduce.apply(self.map_outputs.iter().sum())
    }
}

/// `a_k^agg = sum_{n in F_k} a_n` for every device.
pub fn partial_aggregate(task: &NomographicTask) -> Result<IvaProfile> {
    task.validate()?;
    IvaProfile::new(
        task.assignment
            .iter()
            .map(|files| files.iter().map(|&f| task.map_outputs[f]).sum())
            .collect(),
    )
}

/// Weighted arithmetic and geometric averages of the denoised files `d^T f_n`,
/// each computed through the decomposition with one file per source device
/// and an empty destination.
pub fn weighted_averages(files: &[Vec<f64>], weights: &[f64], denoiser: &[f64]) -> Result<(f64, f64)> {
    if files.is_empty() || files.len() != weights.len() {
        return Err(Error::InvalidInput(format!(
            "{} files and {} weights",
            files.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !(w > 0.0 && w <= 1.0)) {
        return Err(Error::InvalidInput("weights must lie in (0, 1]".into()));
    }
    if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("weights must sum to 1".into()));
    }
    let mut projected = Vec::with_capacity(files.len());
    for (n, f) in files.iter().enumerate() {
        if f.len() != denoiser.len() {
            return Err(Error::InvalidInput(format!(
                "file {n} has length {}, denoiser {}",
                f.len(),
                denoiser.len()
            )));
        }
        projected.push(f.iter().zip(denoiser).map(|(x, d)| x * d).sum::<f64>());
    }
    if let Some(n) = projected.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Domain(format!(
            "d^T f_{n} = {} is not positive; geometric average undefined",
            projected[n]
        )));
    }
    let mut assignment: Vec<Vec<usize>> = (0..files.len()).map(|n| vec![n]).collect();
    assignment.push(Vec::new());

    let run = |map_outputs: Vec<Complex64>, reduce| -> Result<f64> {
        let task = NomographicTask {
            map_outputs,
            reduce,
            assignment: assignment.clone(),
        };
        let ivas = partial_aggregate(&task)?;
        Ok(reduce.apply(ivas.ground_truth()).re)
    };
    let arithmetic = run(
        projected
            .iter()
            .zip(weights)
            .map(|(v, w)| Complex64::new(w * v, 0.0))
            .collect(),
        ReduceFn::Identity,
    )?;
    let geometric = run(
        projected
            .iter()
            .zip(weights)
            .map(|(v, w)| Complex64::new(w * v.ln(), 0.0))
            .collect(),
        ReduceFn::Exp,
    )?;
    Ok((arithmetic, geometric))
}

/// IVA generator. `ComplexGaussian` splits `var` equally between the real and
/// imaginary parts around the real mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum IvaDistribution {
    Uniform { lo: f64, hi: f64 },
    ComplexGaussian { mean: f64, var: f64 },
}

impl IvaDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            IvaDistribution::Uniform { lo, hi } if lo.is_finite() && hi.is_finite() && lo < hi => {
                Ok(())
            }
            IvaDistribution::ComplexGaussian { mean, var } if mean.is_finite() && var > 0.0 && var.is_finite() => {
                Ok(())
            }
            other => Err(Error::InvalidInput(format!("invalid IVA distribution {other}"))),
        }
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<IvaProfile> {
        self.validate()?;
        let values = match *self {
            IvaDistribution::Uniform { lo, hi } => {
                let u = Uniform::new_inclusive(lo, hi)
                    .map_err(|e| Error::InvalidInput(e.to_string()))?;
                (0..k)
                    .map(|_| Complex64::new(u.sample(rng), u.sample(rng)))
                    .collect()
            }
            IvaDistribution::ComplexGaussian { mean, var } => {
                let n = Normal::new(mean, (var / 2.0).sqrt())
                    .map_err(|e| Error::InvalidInput(e.to_string()))?;
                let im = Normal::new(0.0, (var / 2.0).sqrt())
                    .map_err(|e| Error::InvalidInput(e.to_string()))?;
                (0..k)
                    .map(|_| Complex64::new(n.sample(rng), im.sample(rng)))
                    .collect()
            }
        };
        IvaProfile::new(values)
    }

    pub fn sample(&self, k: usize, seed: u64) -> Result<IvaProfile> {
        self.sample_with(k, &mut rng_from(seed, &[]))
    }

    /// Per-component windows `(re_lo, re_hi, im_lo, im_hi)` that hold the
    /// samples (exactly for uniform, to three standard deviations for Gaussian).
    pub fn component_windows(&self) -> [(f64, f64); 2] {
        match *self {
            IvaDistribution::Uniform { lo, hi } => [(lo, hi), (lo, hi)],
            IvaDistribution::ComplexGaussian { mean, var } => {
                let w = 3.0 * (var / 2.0).sqrt();
                [(mean - w, mean + w), (-w, w)]
            }
        }
    }
}

impl fmt::Display for IvaDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IvaDistribution::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
            IvaDistribution::ComplexGaussian { mean, var } => write!(f, "cgauss:{mean}:{var}"),
        }
    }
}

impl FromStr for IvaDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::InvalidInput(format!("cannot parse IVA distribution {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let x: f64 = parts[1].parse().map_err(|_| bad())?;
        let y: f64 = parts[2].parse().map_err(|_| bad())?;
        let dist = match parts[0] {
            "uniform" => IvaDistribution::Uniform { lo: x, hi: y },
            "cgauss" => IvaDistribution::ComplexGaussian { mean: x, var: y },
            _ => return Err(bad()),
        };
        dist.validate()?;
        Ok(dist)
    }
}

impl TryFrom<String> for IvaDistribution {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<IvaDistribution> for String {
    fn from(d: IvaDistribution) -> String {
        d.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hand_summed_partition() {
        let task = NomographicTask {
            map_outputs: vec![c(1.0, 1.0), c(2.0, 0.0), c(3.0, 0.0), c(-1.0, 0.0)],
            reduce: ReduceFn::Identity,
            assignment: vec![vec![0, 1], vec![2], vec![3]],
        };
        let ivas = partial_aggregate(&task).unwrap();
        assert_eq!(ivas.values(), &[c(3.0, 1.0), c(3.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(ivas.ground_truth(), c(5.0, 1.0));
        assert_eq!(ivas.source_sum(), c(6.0, 1.0));
    }

    #[test]
    fn empty_device_and_unit_files() {
        let task = NomographicTask {
            map_outputs: vec![c(1.0, 0.0); 3],
            reduce: ReduceFn::Identity,
            assignment: vec![vec![0], vec![1], vec![2], vec![]],
        };
        let ivas = partial_aggregate(&task).unwrap();
        assert_eq!(ivas.destination_value(), c(0.0, 0.0));
        assert_eq!(ivas.ground_truth(), c(3.0, 0.0));
    }

    #[test]
    fn bad_partitions() {
        let mut task = NomographicTask {
            map_outputs: vec![c(1.0, 0.0); 2],
            reduce: ReduceFn::Identity,
            assignment: vec![vec![0, 1], vec![1]],
        };
        assert!(matches!(partial_aggregate(&task), Err(Error::Partition(_))));
        task.assignment = vec![vec![0], vec![]];
        assert!(matches!(partial_aggregate(&task), Err(Error::Partition(_))));
    }

    #[test]
    fn example_averages() {
        let files = vec![vec![2.0], vec![8.0]];
        let (a, g) = weighted_averages(&files, &[0.5, 0.5], &[1.0]).unwrap();
        assert!((a - 5.0).abs() < 1e-12);
        assert!((g - 4.0).abs() < 1e-12);

        let (a, g) = weighted_averages(&[vec![1.0, 2.0]], &[1.0], &[0.5, 1.0]).unwrap();
        assert!((a - 2.5).abs() < 1e-12 && (g - 2.5).abs() < 1e-12);

        let files = vec![vec![1.0, 1.0], vec![-3.0, 1.0]];
        assert!(matches!(
            weighted_averages(&files, &[0.5, 0.5], &[1.0, 1.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn parse_distributions() {
        assert_eq!(
            "uniform:1:5".parse::<IvaDistribution>().unwrap(),
            IvaDistribution::Uniform { lo: 1.0, hi: 5.0 }
        );
        let g: IvaDistribution = "cgauss:3:1.3333".parse().unwrap();
        assert_eq!(g, IvaDistribution::ComplexGaussian { mean: 3.0, var: 1.3333 });
        assert_eq!(g.to_string().parse::<IvaDistribution>().unwrap(), g);
        assert!("uniform:5:1".parse::<IvaDistribution>().is_err());
        assert!("poisson:1:2".parse::<IvaDistribution>().is_err());
    }

    #[test]
    fn uniform_samples_in_range_and_seeded() {
        let d = IvaDistribution::Uniform { lo: 1.0, hi: 5.0 };
        let ivas = d.sample(500, 9).unwrap();
        assert!(ivas
            .values()
            .iter()
            .all(|v| (1.0..=5.0).contains(&v.re) && (1.0..=5.0).contains(&v.im)));
        assert_eq!(ivas, d.sample(500, 9).unwrap());
    }

    #[test]
    fn gaussian_sample_mean() {
        let d = IvaDistribution::ComplexGaussian { mean: 3.0, var: 4.0 / 3.0 };
        let ivas = d.sample(100_000, 1).unwrap();
        let mean = ivas.ground_truth() / 100_000.0;
        assert!((mean.re - 3.0).abs() < 0.06);
        assert!(mean.im.abs() < 0.06);
    }
}
