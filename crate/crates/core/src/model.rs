//! Model parameters, observation grids, sampled paths and the closed-form
//! moment formulas of the alpha-Wiener bridge
//!
//! ```text
//! dX_t = -alpha / (T - t) * X_t dt + sigma dB_t,   X_0 = 0,   t in [0, T)
//! ```
//!
//! Every formula here is an integral of a power of `(T - u)`. They are all
//! evaluated through [`scaled_expm1`], which stays accurate when the power
//! approaches the logarithmic branch point.

use serde::{Deserialize, Serialize};

use crate::error::{BridgeError, Result};

/// `|1 - gamma|` below which the logarithmic branch is used.
pub const BRANCH_EPS: f64 = 1e-10;

/// `(exp(c * l) - 1) / c`, continued by `l` at `c = 0`.
pub fn scaled_expm1(c: f64, l: f64) -> f64 {
    if c.abs() < BRANCH_EPS {
        l
    } else {
        (c * l).exp_m1() / c
    }
}

/// The model triple `(alpha, sigma, T)` of one alpha-Wiener bridge law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeParams {
    pub alpha: f64,
    pub sigma: f64,
    #[serde(rename = "horizon_T")]
    pub horizon: f64,
}

impl BridgeParams {
    pub fn new(alpha: f64, sigma: f64, horizon: f64) -> Result<Self> {
        let params = BridgeParams { alpha, sigma, horizon };
        params.validate()?;
        Ok(params)
    }

    /// Unit diffusion scale, i.e. the process of the plain SDE.
    pub fn standard(alpha: f64, horizon: f64) -> Result<Self> {
        Self::new(alpha, 1.0, horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(BridgeError::domain(format!("alpha must be finite, got {}", self.alpha)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(BridgeError::domain(format!("sigma must be > 0, got {}", self.sigma)));
        }
        check_horizon(self.horizon)
    }

    pub fn with_sigma(self, sigma: f64) -> Result<Self> {
        Self::new(self.alpha, sigma, self.horizon)
    }
}

/// Strictly increasing observation times starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        match points.first() {
            None => return Err(BridgeError::Grid("grid is empty".into())),
            Some(&p) if p != 0.0 => return Err(BridgeError::Grid(format!("grid must start at 0, got {p}"))),
            _ => {}
        }
        for (i, w) in points.windows(2).enumerate() {
            if !w[1].is_finite() || w[1] <= w[0] {
                return Err(BridgeError::Grid(format!(
                    "grid not strictly increasing at index {}: {} -> {}",
                    i + 1,
                    w[0],
                    w[1]
                )));
            }
        }
        Ok(TimeGrid { points })
    }

    /// `steps` equal steps over `[0, t_end]`.
    pub fn uniform(t_end: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(BridgeError::Grid("uniform grid needs at least one step".into()));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(BridgeError::Grid(format!("grid end must be > 0, got {t_end}")));
        }
        let h = t_end / steps as f64;
        let mut points: Vec<f64> = (0..steps).map(|k| k as f64 * h).collect();
        points.push(t_end);
        Self::new(points)
    }

    /// `2^level` equal steps over `[0, t_end]`.
    pub fn dyadic(t_end: f64, level: u32) -> Result<Self> {
        if level > 30 {
            return Err(BridgeError::Grid(format!("dyadic level {level} too large")));
        }
        Self::uniform(t_end, 1usize << level)
    }

    /// Points `T - T * ratio^k` for `k = 0, 1, ...` strictly below `t_end`,
    /// followed by `t_end` itself. The spacing shrinks in proportion to the
    /// distance from `T`.
    pub fn geometric(horizon: f64, ratio: f64, t_end: f64) -> Result<Self> {
        check_horizon(horizon)?;
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(BridgeError::Grid(format!(
                "geometric ratio must be in (0, 1), got {ratio}"
            )));
        }
        if !(t_end > 0.0 && t_end < horizon) {
            return Err(BridgeError::Grid(format!(
                "grid end {t_end} must lie in (0, T) with T = {horizon}"
            )));
        }
        let mut points = Vec::new();
        let mut gap = horizon;
        loop {
            let p = horizon - gap;
            // skip points indistinguishable from t_end
            if p >= t_end || (t_end - p) <= 1e-12 * horizon {
                break;
            }
            points.push(p);
            gap *= ratio;
        }
        points.push(t_end);
        Self::new(points)
    }

    /// The grid with extra times merged in. Times already present (to within
    /// `1e-14` relative) are not duplicated.
    pub fn with_points(&self, extra: &[f64]) -> Result<Self> {
        let mut points = self.points.clone();
        points.extend_from_slice(extra);
        points.sort_by(f64::total_cmp);
        points.dedup_by(|b, a| (*b - *a).abs() <= 1e-14 * a.abs().max(1.0));
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.points.last().expect("grid is never empty")
    }

    /// Checks that the grid lies strictly inside `[0, T)`.
    pub fn check_within(&self, horizon: f64) -> Result<()> {
        if self.last() >= horizon {
            return Err(BridgeError::Grid(format!(
                "last grid point {} must be < T = {}",
                self.last(),
                horizon
            )));
        }
        Ok(())
    }
}

/// One discretized trajectory. `horizon` is the terminal time `T` the path
/// lives under; `params` records the law it was sampled from, when known.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    values: Vec<f64>,
    horizon: f64,
    params: Option<BridgeParams>,
}

impl SamplePath {
    pub fn new(grid: TimeGrid, values: Vec<f64>, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        grid.check_within(horizon)?;
        if values.len() != grid.len() {
            return Err(BridgeError::Argument(format!(
                "path has {} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if values[0] != 0.0 {
            return Err(BridgeError::Argument(format!(
                "path must start at 0, got {}",
                values[0]
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(BridgeError::Numerical(format!("non-finite path value at index {i}")));
        }
        Ok(SamplePath {
            grid,
            values,
            horizon,
            params: None,
        })
    }

    pub fn with_params(mut self, params: BridgeParams) -> Self {
        self.params = Some(params);
        self
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        self.grid.points()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn params(&self) -> Option<&BridgeParams> {
        self.params.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last_time(&self) -> f64 {
        self.grid.last()
    }

    pub fn last_value(&self) -> f64 {
        *self.values.last().expect("path is never empty")
    }

    /// Same grid, values multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let values = self.values.iter().map(|v| c * v).collect();
        let mut out = SamplePath::new(self.grid.clone(), values, self.horizon)?;
        out.params = self.params;
        Ok(out)
    }

    /// Linear interpolation of the path at `t` in `[0, last_time]`.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let times = self.times();
        if !(0.0..=self.last_time()).contains(&t) {
            return Err(BridgeError::domain(format!(
                "time {t} outside observed range [0, {}]",
                self.last_time()
            )));
        }
        let k = times.partition_point(|&p| p <= t);
        let i = k - 1;
        if times[i] == t || i + 1 == times.len() {
            return Ok(self.values[i]);
        }
        let w = (t - times[i]) / (times[i + 1] - times[i]);
        Ok(self.values[i] + w * (self.values[i + 1] - self.values[i]))
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(BridgeError::domain(format!("horizon T must be > 0, got {horizon}")));
    }
    Ok(())
}

fn check_time(name: &str, t: f64, horizon: f64) -> Result<()> {
    if !(t >= 0.0 && t < horizon) {
        return Err(BridgeError::domain(format!(
            "{name} = {t} must lie in [0, T) with T = {horizon}"
        )));
    }
    Ok(())
}

/// `Cov(X_s^(alpha), X_t^(beta))` for two bridges driven by the same
/// Brownian motion.
pub fn covariance(alpha: f64, beta: f64, s: f64, t: f64, horizon: f64) -> Result<f64> {
    check_horizon(horizon)?;
    check_time("s", s, horizon)?;
    check_time("t", t, horizon)?;
    let m = s.min(t);
    if m == 0.0 {
        return Ok(0.0);
    }
    let c = 1.0 - alpha - beta;
    // ln((T - m) / T) <= 0
    let l = (-m / horizon).ln_1p();
    let log_prefactor = alpha * (horizon - s).ln() + beta * (horizon - t).ln() + c * horizon.ln();
    Ok(log_prefactor.exp() * -scaled_expm1(c, l))
}

/// `E (X_t^(alpha))^2` for unit sigma.
pub fn variance(alpha: f64, t: f64, horizon: f64) -> Result<f64> {
    check_horizon(horizon)?;
    check_time("t", t, horizon)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    // (T - t) * ((T / (T - t))^(1 - 2 alpha) - 1) / (1 - 2 alpha)
    let l = -(-t / horizon).ln_1p();
    Ok((horizon - t) * scaled_expm1(1.0 - 2.0 * alpha, l))
}

/// Quadratic variation `<M>_t = int_0^t (T - s)^(-2 alpha) ds` of the
/// rescaled martingale `M_t = X_t / (T - t)^alpha`.
pub fn rescaled_qv(alpha: f64, t: f64, horizon: f64) -> Result<f64> {
    check_horizon(horizon)?;
    check_time("t", t, horizon)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let c = 1.0 - 2.0 * alpha;
    let l = (-t / horizon).ln_1p();
    Ok((c * horizon.ln()).exp() * -scaled_expm1(c, l))
}

/// Mean and variance of `X_t` given `X_s = x_s`, including the `sigma^2`
/// factor.
pub fn transition_moments(params: &BridgeParams, s: f64, t: f64, x_s: f64) -> Result<(f64, f64)> {
    params.validate()?;
    let horizon = params.horizon;
    check_time("t", t, horizon)?;
    if !(s >= 0.0 && s <= t) {
        return Err(BridgeError::domain(format!("need 0 <= s <= t, got s = {s}, t = {t}")));
    }
    if s == t {
        return Ok((x_s, 0.0));
    }
    let (decay, unit_var) = unit_transition(params.alpha, s, t, horizon);
    Ok((decay * x_s, params.sigma * params.sigma * unit_var))
}

/// Decay factor `((T-t)/(T-s))^alpha` and the unit-sigma conditional
/// variance over `[s, t]`. Caller guarantees `0 <= s < t < T`.
pub(crate) fn unit_transition(alpha: f64, s: f64, t: f64, horizon: f64) -> (f64, f64) {
    let rem = horizon - t;
    // ln((T - s) / (T - t)) >= 0
    let l = ((t - s) / rem).ln_1p();
    let decay = (-alpha * l).exp();
    let var = rem * scaled_expm1(1.0 - 2.0 * alpha, l);
    (decay, var)
}

/// Iterated-logarithm envelope of `X_t` as `t -> T`, for `alpha >= 1/2`.
pub fn lil_envelope(alpha: f64, t: f64, horizon: f64) -> Result<f64> {
    check_horizon(horizon)?;
    if !alpha.is_finite() || alpha < 0.5 {
        return Err(BridgeError::domain(format!("envelope needs alpha >= 1/2, got {alpha}")));
    }
    if !(t < horizon) || !t.is_finite() {
        return Err(BridgeError::domain(format!("t = {t} must be < T = {horizon}")));
    }
    let rem = horizon - t;
    let l1 = -rem.ln();
    if !(l1 > 0.0) {
        return Err(BridgeError::domain(format!("ln(1/(T-t)) = {l1} is not positive")));
    }
    let l2 = l1.ln();
    if !(l2 > 0.0) {
        return Err(BridgeError::domain(format!("ln ln(1/(T-t)) = {l2} is not positive")));
    }
    if alpha > 0.5 {
        return Ok((2.0 * rem / (2.0 * alpha - 1.0) * l2).sqrt());
    }
    let l3 = l2.ln();
    if !(l3 > 0.0) {
        return Err(BridgeError::domain(format!("ln ln ln(1/(T-t)) = {l3} is not positive")));
    }
    Ok((2.0 * rem * l1 * l3).sqrt())
}

/// Variance `T^(1-2 alpha) / (1 - 2 alpha)` of the terminal value of the
/// rescaled martingale, finite only for `alpha < 1/2`.
pub fn limit_variance(alpha: f64, horizon: f64) -> Result<f64> {
    check_horizon(horizon)?;
    if !alpha.is_finite() || alpha >= 0.5 {
        return Err(BridgeError::domain(format!(
            "limit variance needs alpha < 1/2, got {alpha}"
        )));
    }
    let c = 1.0 - 2.0 * alpha;
    Ok(horizon.powf(c) / c)
}
