use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::ConstraintSet;
use crate::mapreduce::IvaProfile;
use crate::{Error, Result};

/// Real-valued form of the MSE at the optimal receive factor.
///
/// With `eta_ext = [Re eta; Im eta]`, `a1^T eta_ext = Re(a^T eta)` and
/// `a2^T eta_ext = Im(a^T eta)`, and `a3^T eta_ext = Im(u a^T eta)` where
/// `u = conj(1^T a) / |1^T a|` rotates the sum onto the positive real axis.
/// Then
///
/// ```text
/// MSE(eta) = |1^T a|^2 (eta_ext^T a3 a3^T eta_ext + sigma^2)
///                     / (eta_ext^T (a1 a1^T + a2 a2^T) eta_ext + sigma^2).
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct RealifiedProblem {
    pub a1: DVector<f64>,
    pub a2: DVector<f64>,
    pub a3: DVector<f64>,
    pub sigma_sq: f64,
    pub caps: Vec<f64>,
    pub source_sum: Complex64,
    pub phasor: Complex64,
}

impl RealifiedProblem {
    pub fn new(ivas: &IvaProfile, caps: &ConstraintSet, sigma_sq: f64) -> Result<Self> {
        Self::from_parts(ivas.sources(), caps.caps.clone(), sigma_sq)
    }

    pub fn from_parts(a: &[Complex64], caps: Vec<f64>, sigma_sq: f64) -> Result<Self> {
        let m = a.len();
        if caps.len() != m {
            return Err(Error::InvalidInput(format!("{} caps for {m} sources", caps.len())));
        }
        if !(sigma_sq >= 0.0) {
            return Err(Error::InvalidInput(format!("sigma^2 must be >= 0, got {sigma_sq}")));
        }
        let source_sum: Complex64 = a.iter().sum();
        if source_sum.norm_sqr() == 0.0 {
            return Err(Error::Domain("source IVAs sum to zero".into()));
        }
        let phasor = source_sum.conj() / source_sum.norm();
        let a1 = DVector::from_fn(2 * m, |i, _| if i < m { a[i].re } else { -a[i - m].im });
        let a2 = DVector::from_fn(2 * m, |i, _| if i < m { a[i].im } else { a[i - m].re });
        let a3 = DVector::from_fn(2 * m, |i, _| {
            if i < m {
                (phasor * a[i]).im
            } else {
                (phasor * a[i - m]).re
            }
        });
        Ok(Self {
            a1,
            a2,
            a3,
            sigma_sq,
            caps,
            source_sum,
            phasor,
        })
    }

    pub fn sources(&self) -> usize {
        self.caps.len()
    }

    pub fn numerator(&self, eta_ext: &DVector<f64>) -> f64 {
        self.a3.dot(eta_ext).powi(2) + self.sigma_sq
    }

    pub fn denominator(&self, eta_ext: &DVector<f64>) -> f64 {
        self.a1.dot(eta_ext).powi(2) + self.a2.dot(eta_ext).powi(2) + self.sigma_sq
    }

    /// `xi = numerator / denominator`; one when both vanish.
    pub fn ratio(&self, eta_ext: &DVector<f64>) -> f64 {
        let d = self.denominator(eta_ext);
        if d == 0.0 {
            1.0
        } else {
            self.numerator(eta_ext) / d
        }
    }

    /// `F(eta_ext, xi) = numerator - xi * denominator`.
    pub fn f_value(&self, eta_ext: &DVector<f64>, xi: f64) -> f64 {
        self.numerator(eta_ext) - xi * self.denominator(eta_ext)
    }

    pub fn mse_at_optimal_gamma(&self, eta_ext: &DVector<f64>) -> f64 {
        self.source_sum.norm_sqr() * self.ratio(eta_ext)
    }

    /// `B(xi) = a3 a3^T - xi (a1 a1^T + a2 a2^T)`.
    pub fn b_matrix(&self, xi: f64) -> DMatrix<f64> {
        &self.a3 * self.a3.transpose()
            - (&self.a1 * self.a1.transpose() + &self.a2 * self.a2.transpose()) * xi
    }

    pub fn to_complex(&self, eta_ext: &DVector<f64>) -> Vec<Complex64> {
        let m = self.sources();
        (0..m).map(|i| Complex64::new(eta_ext[i], eta_ext[i + m])).collect()
    }

    pub fn to_real(&self, eta: &[Complex64]) -> DVector<f64> {
        let m = eta.len();
        DVector::from_fn(2 * m, |i, _| if i < m { eta[i].re } else { eta[i - m].im })
    }

    pub fn is_feasible(&self, eta_ext: &DVector<f64>, rel_tol: f64) -> bool {
        let m = self.sources();
        (0..m).all(|i| eta_ext[i].powi(2) + eta_ext[i + m].powi(2) <= self.caps[i] * (1.0 + rel_tol))
    }
}
