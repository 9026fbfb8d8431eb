//! Finite-sample diagnostics for path behavior as `t -> T`.

use serde::{Deserialize, Serialize};

use crate::error::{BridgeError, Result};
use crate::model::{self, SamplePath};

/// Observation window `[t_lo, t_hi]` inside `[0, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub t_lo: f64,
    pub t_hi: f64,
}

impl WindowSpec {
    pub fn new(t_lo: f64, t_hi: f64) -> Result<Self> {
        if !(t_lo >= 0.0 && t_lo < t_hi && t_hi.is_finite()) {
            return Err(BridgeError::Domain(format!("invalid window [{t_lo}, {t_hi}]")));
        }
        Ok(WindowSpec { t_lo, t_hi })
    }

    pub fn check_within(&self, horizon: f64) -> Result<()> {
        if !(self.t_lo >= 0.0 && self.t_lo < self.t_hi && self.t_hi < horizon) {
            return Err(BridgeError::Domain(format!(
                "window [{}, {}] must satisfy 0 <= t_lo < t_hi < T = {horizon}",
                self.t_lo, self.t_hi
            )));
        }
        Ok(())
    }
}

/// Grid points of `path` falling in `window`, as `(t, x)` pairs.
fn in_window(path: &SamplePath, window: &WindowSpec) -> Result<Vec<(f64, f64)>> {
    window.check_within(path.horizon())?;
    let pts: Vec<(f64, f64)> = path
        .times()
        .iter()
        .zip(path.values())
        .filter(|(t, _)| **t >= window.t_lo && **t <= window.t_hi)
        .map(|(t, x)| (*t, *x))
        .collect();
    if pts.is_empty() {
        return Err(BridgeError::Domain(format!(
            "no grid points in window [{}, {}]",
            window.t_lo, window.t_hi
        )));
    }
    Ok(pts)
}

/// `max |x(t)|` over grid points in the window.
pub fn terminal_sup(path: &SamplePath, window: &WindowSpec) -> Result<f64> {
    Ok(in_window(path, window)?
        .into_iter()
        .map(|(_, x)| x.abs())
        .fold(0.0, f64::max))
}

/// Max and min of `x(t) / envelope(t)` over grid points in the window.
pub fn envelope_ratio(path: &SamplePath, alpha: f64, window: &WindowSpec) -> Result<(f64, f64)> {
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for (t, x) in in_window(path, window)? {
        let r = x / model::lil_envelope(alpha, t, path.horizon())?;
        sup = sup.max(r);
        inf = inf.min(r);
    }
    Ok((sup, inf))
}

/// `x(t_last) / (T - t_last)^alpha`, the rescaled martingale at the last
/// observed time.
pub fn rescaled_terminal(path: &SamplePath, alpha: f64) -> f64 {
    let rem = path.horizon() - path.last_time();
    path.last_value() * (-alpha * rem.ln()).exp()
}

/// Fractions of values above `threshold`, below `-threshold`, and in between.
pub fn sign_split(values: &[f64], threshold: f64) -> Result<(f64, f64, f64)> {
    if values.is_empty() {
        return Err(BridgeError::Argument("sign_split needs at least one value".into()));
    }
    if !(threshold > 0.0) {
        return Err(BridgeError::Argument(format!("threshold must be > 0, got {threshold}")));
    }
    let n = values.len();
    let plus = values.iter().filter(|v| **v > threshold).count();
    let minus = values.iter().filter(|v| **v < -threshold).count();
    let n = n as f64;
    let (frac_plus, frac_minus) = (plus as f64 / n, minus as f64 / n);
    // (frac_plus + frac_minus) + frac_small == 1.0 holds exactly in binary64
    let frac_small = 1.0 - (frac_plus + frac_minus);
    Ok((frac_plus, frac_minus, frac_small))
}
