//! Inference on an observed path: drift exponent by maximum likelihood,
//! diffusion scale by quadratic variation.
//!
//! The stochastic integral `int_0^t x/(T-s) dx` is never summed directly. It
//! is replaced by the Ito identity
//!
//! ```text
//! int_0^t x/(T-s) dx = 1/2 * ( x(t)^2/(T-t) - int_0^t x^2/(T-s)^2 ds - ln(T/(T-t)) )
//! ```
//!
//! so the only discretized quantity is the energy integral.

use serde::{Deserialize, Serialize};

use crate::error::{BridgeError, Result};
use crate::model::SamplePath;

/// Energies below this are treated as zero.
pub const ZERO_ENERGY: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub alpha_hat: f64,
    pub sigma2_hat: f64,
    pub energy: f64,
    pub stoch_integral: f64,
    pub horizon_t: f64,
    pub n_points: usize,
}

/// All estimates at observation time `t` (the last grid point when `None`).
pub fn estimate(path: &SamplePath, t: Option<f64>) -> Result<EstimateReport> {
    let t = t.unwrap_or_else(|| path.last_time());
    let energy = energy_integral(path, t)?;
    let stoch_integral = stoch_integral_closed_form(path, t)?;
    let alpha_hat = ratio_estimate(stoch_integral, energy)?;
    let n_points = path.times().partition_point(|&p| p <= t);
    let observed = SamplePath::new(
        crate::model::TimeGrid::new(path.times()[..n_points].to_vec())?,
        path.values()[..n_points].to_vec(),
        path.horizon(),
    )?;
    let sigma2_hat = qv_sigma2(&observed)?;
    Ok(EstimateReport {
        alpha_hat,
        sigma2_hat,
        energy,
        stoch_integral,
        horizon_t: t,
        n_points,
    })
}

/// Trapezoidal `int_0^t x(s)^2 / (T - s)^2 ds` on the observed grid. A `t`
/// between grid points closes with a partial step to the interpolated value.
pub fn energy_integral(path: &SamplePath, t: f64) -> Result<f64> {
    check_observed(path, t)?;
    let horizon = path.horizon();
    let density = |s: f64, x: f64| {
        let r = x / (horizon - s);
        r * r
    };
    let times = path.times();
    let values = path.values();
    let end = times.partition_point(|&p| p <= t);
    let mut acc = 0.0;
    let mut prev = density(times[0], values[0]);
    for k in 1..end {
        let cur = density(times[k], values[k]);
        acc += 0.5 * (prev + cur) * (times[k] - times[k - 1]);
        prev = cur;
    }
    let t_last = times[end - 1];
    if t > t_last {
        let cur = density(t, path.value_at(t)?);
        acc += 0.5 * (prev + cur) * (t - t_last);
    }
    Ok(acc)
}

/// `int_0^t x/(T-s) dx` through the Ito identity.
pub fn stoch_integral_closed_form(path: &SamplePath, t: f64) -> Result<f64> {
    check_observed(path, t)?;
    let horizon = path.horizon();
    let energy = energy_integral(path, t)?;
    let x = path.value_at(t)?;
    let log_term = -(-t / horizon).ln_1p();
    Ok(0.5 * (x * x / (horizon - t) - energy - log_term))
}

/// Maximum likelihood estimate of alpha from the path on `[0, t]`.
pub fn mle_alpha(path: &SamplePath, t: f64) -> Result<f64> {
    let energy = energy_integral(path, t)?;
    let integral = stoch_integral_closed_form(path, t)?;
    ratio_estimate(integral, energy)
}

fn ratio_estimate(integral: f64, energy: f64) -> Result<f64> {
    if energy < ZERO_ENERGY {
        return Err(BridgeError::DegenerateEstimate(format!(
            "energy {energy:e} is zero; the path vanishes on the observed window"
        )));
    }
    Ok(-integral / energy)
}

/// `ln dP_alpha/dP_0` restricted to `[0, t]`, where `P_0` is Wiener measure.
pub fn log_likelihood_ratio(path: &SamplePath, alpha: f64, t: f64) -> Result<f64> {
    let energy = energy_integral(path, t)?;
    let integral = stoch_integral_closed_form(path, t)?;
    Ok(-alpha * integral - 0.5 * alpha * alpha * energy)
}

/// Realized quadratic variation per unit time, `sum (dx)^2 / (t_n - t_0)`.
pub fn qv_sigma2(path: &SamplePath) -> Result<f64> {
    if path.len() < 2 {
        return Err(BridgeError::DegeneratePath(format!(
            "quadratic variation needs at least 2 points, got {}",
            path.len()
        )));
    }
    let sum: f64 = path.values().windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    let times = path.times();
    Ok(sum / (times[times.len() - 1] - times[0]))
}

/// Hellinger process of order 1/2 between the alpha and beta laws,
/// `(alpha - beta)^2 / 8 * energy`.
pub fn hellinger_half(path: &SamplePath, alpha: f64, beta: f64, t: f64) -> Result<f64> {
    let energy = energy_integral(path, t)?;
    Ok((alpha - beta).powi(2) / 8.0 * energy)
}

/// Candidate nearest to the MLE; ties go to the smaller candidate.
pub fn classify_alpha(path: &SamplePath, t: f64, candidates: &[f64]) -> Result<f64> {
    if candidates.is_empty() {
        return Err(BridgeError::Argument("candidate list is empty".into()));
    }
    let alpha_hat = mle_alpha(path, t)?;
    Ok(nearest_candidate(alpha_hat, candidates))
}

pub fn nearest_candidate(alpha_hat: f64, candidates: &[f64]) -> f64 {
    candidates
        .iter()
        .copied()
        .min_by(|a, b| {
            (a - alpha_hat)
                .abs()
                .total_cmp(&(b - alpha_hat).abs())
                .then(a.total_cmp(b))
        })
        .expect("candidates nonempty")
}

fn check_observed(path: &SamplePath, t: f64) -> Result<()> {
    if !(t >= 0.0 && t <= path.last_time()) {
        return Err(BridgeError::Domain(format!(
            "observation time {t} outside observed range [0, {}]",
            path.last_time()
        )));
    }
    if t >= path.horizon() {
        return Err(BridgeError::Domain(format!("t = {t} must be < T = {}", path.horizon())));
    }
    Ok(())
}
