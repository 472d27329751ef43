use num_complex::Complex64;

use super::Solution;
use crate::channel::ConstraintSet;
use crate::mapreduce::IvaProfile;
use crate::protocol::{analytic_mse, TransceiverDesign};
use crate::{Error, Result};

fn source_power(ivas: &IvaProfile) -> Result<f64> {
    let s = ivas.source_sum().norm_sqr();
    if s == 0.0 {
        Err(Error::Domain("source IVAs sum to zero".into()))
    } else {
        Ok(s)
    }
}

/// Optimal receive factor for a common real coefficient:
/// `gamma = eta + sigma^2 / (eta |1^T a|^2)`.
pub fn optimal_gamma_scalar(eta: f64, ivas: &IvaProfile, sigma_sq: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("eta must be positive, got {eta}")));
    }
    Ok(eta + sigma_sq / (eta * source_power(ivas)?))
}

/// Optimal receive factor for arbitrary `eta`:
/// `gamma = (|eta^T a|^2 + sigma^2) / Re(eta^T a conj(1^T a))`.
pub fn optimal_gamma_vector(eta: &[Complex64], ivas: &IvaProfile, sigma_sq: f64) -> Result<f64> {
    let a = ivas.sources();
    let s: Complex64 = eta.iter().zip(a).map(|(e, a)| e * a).sum();
    let den = (s * ivas.source_sum().conj()).re;
    if !(den > 0.0) {
        return Err(Error::Orientation(den));
    }
    Ok((s.norm_sqr() + sigma_sq) / den)
}

/// Negates `eta` when `Re(eta^T a conj(1^T a)) <= 0`; the MSE at the optimal
/// receive factor is invariant under the sign flip.
pub fn orient(mut eta: Vec<Complex64>, ivas: &IvaProfile) -> Vec<Complex64> {
    let s: Complex64 = eta.iter().zip(ivas.sources()).map(|(e, a)| e * a).sum();
    if (s * ivas.source_sum().conj()).re <= 0.0 {
        for e in &mut eta {
            *e = -*e;
        }
    }
    eta
}

/// `sigma^2 / (P_min + sigma^2 / |1^T a|^2)`.
pub fn common_mse(p_min: f64, sigma_sq: f64, source_power: f64) -> f64 {
    sigma_sq / (p_min + sigma_sq / source_power)
}

/// `sigma^2 / P_min`.
pub fn unbiased_mse(p_min: f64, sigma_sq: f64) -> f64 {
    sigma_sq / p_min
}

/// Common coefficient `eta = sqrt(P_min)` with its optimal receive factor.
///
/// A real common coefficient needs no phase rotation: the MSE depends on the
/// sum only through `|1^T a|^2`.
pub fn solve_common(caps: &ConstraintSet, ivas: &IvaProfile, sigma_sq: f64) -> Result<Solution> {
    let eta = caps.p_min().sqrt();
    let gamma = optimal_gamma_scalar(eta, ivas, sigma_sq)?;
    let design = TransceiverDesign::new(vec![Complex64::new(eta, 0.0); caps.sources()], gamma)?;
    let mse = analytic_mse(&design, ivas, sigma_sq)?;
    Ok(Solution::closed_form(design, mse))
}

/// `eta = gamma = sqrt(P_min)`, the zero-bias design.
pub fn solve_unbiased(caps: &ConstraintSet, ivas: &IvaProfile, sigma_sq: f64) -> Result<Solution> {
    source_power(ivas)?;
    let eta = caps.p_min().sqrt();
    let design = TransceiverDesign::new(vec![Complex64::new(eta, 0.0); caps.sources()], eta)?;
    let mse = analytic_mse(&design, ivas, sigma_sq)?;
    Ok(Solution::closed_form(design, mse))
}

/// Full-power, phase-aligned coefficients `eta_i = sqrt(c_i) e^{j(arg 1^T a - arg a_i)}`
/// with the optimal receive factor. Every term of `eta^T a` then lines up
/// with `1^T a`; used for the noiseless case.
pub fn phase_aligned(caps: &ConstraintSet, ivas: &IvaProfile, sigma_sq: f64) -> Result<Solution> {
    let target = ivas.source_sum();
    if target.norm_sqr() == 0.0 {
        return Err(Error::Domain("source IVAs sum to zero".into()));
    }
    let target_phase = target / target.norm();
    let eta: Vec<Complex64> = ivas
        .sources()
        .iter()
        .zip(&caps.caps)
        .map(|(a, c)| {
            let align = if a.norm_sqr() > 0.0 {
                a.conj() / a.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            target_phase * align * c.sqrt()
        })
        .collect();
    let gamma = optimal_gamma_vector(&eta, ivas, sigma_sq)?;
    let design = TransceiverDesign::new(eta, gamma)?;
    let mse = analytic_mse(&design, ivas, sigma_sq)?;
    Ok(Solution::closed_form(design, mse))
}
