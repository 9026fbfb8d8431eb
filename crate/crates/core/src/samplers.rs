//! Path samplers.
//!
//! All three samplers draw the unit-sigma path first and multiply by sigma at
//! the end, so a path for `(alpha, sigma, T, seed)` is exactly `sigma` times
//! the path for `(alpha, 1, T, seed)`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{BridgeError, Result};
use crate::model::{self, BridgeParams, SamplePath, TimeGrid};

/// Largest grid accepted by [`sample_joint`].
pub const MAX_JOINT_POINTS: usize = 4096;

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub root_seed: u64,
    pub replicate_index: u64,
}

impl SeedSpec {
    pub fn new(root_seed: u64, replicate_index: u64) -> Self {
        SeedSpec {
            root_seed,
            replicate_index,
        }
    }

    /// ChaCha keyed by the root seed, on the stream numbered by the
    /// replicate index. Streams never overlap, and any replicate can be
    /// regenerated without touching the others.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root_seed);
        rng.set_stream(self.replicate_index);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    #[default]
    Exact,
    Joint,
    Euler,
}

pub fn sample(kind: SamplerKind, params: &BridgeParams, grid: &TimeGrid, seed: SeedSpec) -> Result<SamplePath> {
    match kind {
        SamplerKind::Exact => sample_exact(params, grid, seed),
        SamplerKind::Joint => sample_joint(params, grid, seed),
        SamplerKind::Euler => sample_euler(params, grid, seed),
    }
}

/// Sequential draw from the exact Gaussian transition law. Valid on any grid
/// inside `[0, T)`, however close to `T`.
pub fn sample_exact(params: &BridgeParams, grid: &TimeGrid, seed: SeedSpec) -> Result<SamplePath> {
    check(params, grid)?;
    let times = grid.points();
    let mut rng = seed.rng();
    let mut unit = Vec::with_capacity(times.len());
    unit.push(0.0);
    let mut x = 0.0;
    for w in times.windows(2) {
        let (decay, var) = model::unit_transition(params.alpha, w[0], w[1], params.horizon);
        let z: f64 = StandardNormal.sample(&mut rng);
        x = decay * x + var.sqrt() * z;
        unit.push(x);
    }
    finish(params, grid, unit)
}

/// One multivariate Gaussian draw from the covariance matrix of the grid.
pub fn sample_joint(params: &BridgeParams, grid: &TimeGrid, seed: SeedSpec) -> Result<SamplePath> {
    check(params, grid)?;
    if grid.len() > MAX_JOINT_POINTS {
        return Err(BridgeError::Grid(format!(
            "joint sampler supports at most {MAX_JOINT_POINTS} points, got {}",
            grid.len()
        )));
    }
    // X_0 = 0 is deterministic, so factor only the interior block.
    let inner = &grid.points()[1..];
    let n = inner.len();
    let mut unit = vec![0.0; grid.len()];
    if n == 0 {
        return finish(params, grid, unit);
    }
    let factor = cholesky_with_jitter(covariance_matrix(params.alpha, inner, params.horizon)?)?;
    let mut rng = seed.rng();
    let z = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
    let x = factor * z;
    unit[1..].copy_from_slice(x.as_slice());
    finish(params, grid, unit)
}

/// Explicit Euler-Maruyama:
/// `X_{k+1} = X_k - alpha X_k / (T - t_k) dt_k + sigma sqrt(dt_k) xi_k`.
pub fn sample_euler(params: &BridgeParams, grid: &TimeGrid, seed: SeedSpec) -> Result<SamplePath> {
    check(params, grid)?;
    let times = grid.points();
    let gains = euler_gains(params, grid)?;
    let mut rng = seed.rng();
    let mut unit = Vec::with_capacity(times.len());
    unit.push(0.0);
    let mut x = 0.0;
    for (w, gain) in times.windows(2).zip(&gains) {
        let z: f64 = StandardNormal.sample(&mut rng);
        x = gain * x + (w[1] - w[0]).sqrt() * z;
        unit.push(x);
    }
    finish(params, grid, unit)
}

/// Variance of the Euler scheme at every grid point, by the deterministic
/// recursion `v_{k+1} = (1 - alpha dt_k / (T - t_k))^2 v_k + sigma^2 dt_k`.
pub fn euler_variance(params: &BridgeParams, grid: &TimeGrid) -> Result<Vec<f64>> {
    check(params, grid)?;
    let gains = euler_gains(params, grid)?;
    let s2 = params.sigma * params.sigma;
    let mut out = Vec::with_capacity(grid.len());
    let mut v = 0.0;
    out.push(v);
    for (w, gain) in grid.points().windows(2).zip(&gains) {
        v = gain * gain * v + s2 * (w[1] - w[0]);
        out.push(v);
    }
    Ok(out)
}

fn euler_gains(params: &BridgeParams, grid: &TimeGrid) -> Result<Vec<f64>> {
    grid.points()
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let ratio = params.alpha * (w[1] - w[0]) / (params.horizon - w[0]);
            if ratio >= 1.0 {
                Err(BridgeError::StepSize { index: k, ratio })
            } else {
                Ok(1.0 - ratio)
            }
        })
        .collect()
}

/// Unit-sigma covariance matrix of `X^(alpha)` at the given times.
pub fn covariance_matrix(alpha: f64, times: &[f64], horizon: f64) -> Result<DMatrix<f64>> {
    let n = times.len();
    let mut cov = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let c = model::covariance(alpha, alpha, times[i], times[j], horizon)?;
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    Ok(cov)
}

/// Lower Cholesky factor; on failure retries once with `1e-12 * trace / n`
/// added to the diagonal.
pub fn cholesky_with_jitter(mut cov: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = cov.clone().cholesky() {
        return Ok(ch.unpack());
    }
    let n = cov.nrows();
    let jitter = 1e-12 * cov.trace() / n as f64;
    for i in 0..n {
        cov[(i, i)] += jitter;
    }
    cov.cholesky().map(|ch| ch.unpack()).ok_or_else(|| {
        BridgeError::Numerical(format!(
            "covariance of {n} points not factorable after jitter {jitter:e}"
        ))
    })
}

fn check(params: &BridgeParams, grid: &TimeGrid) -> Result<()> {
    params.validate()?;
    grid.check_within(params.horizon)
}

fn finish(params: &BridgeParams, grid: &TimeGrid, unit: Vec<f64>) -> Result<SamplePath> {
    let values = unit.into_iter().map(|x| params.sigma * x).collect();
    Ok(SamplePath::new(grid.clone(), values, params.horizon)?.with_params(*params))
}
