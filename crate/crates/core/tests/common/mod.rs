//! Test-only oracles, independent of the library's formulas.
#![allow(dead_code, clippy::excessive_precision)]

use alpha_bridge::{BridgeParams, SamplePath, SeedSpec, TimeGrid};

// 15-point Kronrod nodes/weights on [-1, 1] with embedded 7-point Gauss.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature of `f` over `[a, b]` to relative
/// tolerance `rel` (absolute floor `abs`).
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel: f64, abs: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: (f64, f64), rel: f64, abs: f64, depth: u32) -> f64 {
        let (val, err) = whole;
        if err <= abs.max(rel * val.abs()) || depth > 60 {
            return val;
        }
        let m = 0.5 * (a + b);
        let left = gk15(f, a, m);
        let right = gk15(f, m, b);
        rec(f, a, m, left, rel, abs, depth + 1) + rec(f, m, b, right, rel, abs, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    rec(f, a, b, gk15(f, a, b), rel, abs, 0)
}

/// `int_0^{s^t} (T-s)^a (T-t)^b (T-u)^(-a-b) du`
pub fn covariance_oracle(a: f64, b: f64, s: f64, t: f64, big_t: f64) -> f64 {
    let m = s.min(t);
    let pre = (big_t - s).powf(a) * (big_t - t).powf(b);
    pre * integrate(&|u| (big_t - u).powf(-a - b), 0.0, m, 1e-14, 0.0)
}

/// `int_0^t ((T-t)/(T-u))^(2a) du`
pub fn variance_oracle(a: f64, t: f64, big_t: f64) -> f64 {
    integrate(&|u| ((big_t - t) / (big_t - u)).powf(2.0 * a), 0.0, t, 1e-14, 0.0)
}

/// `int_0^t (T-s)^(-2a) ds`
pub fn rescaled_qv_oracle(a: f64, t: f64, big_t: f64) -> f64 {
    integrate(&|u| (big_t - u).powf(-2.0 * a), 0.0, t, 1e-14, 0.0)
}

/// `sigma^2 int_s^t ((T-t)/(T-u))^(2a) du`
pub fn transition_variance_oracle(p: &BridgeParams, s: f64, t: f64) -> f64 {
    let big_t = p.horizon;
    p.sigma * p.sigma * integrate(&|u| ((big_t - t) / (big_t - u)).powf(2.0 * p.alpha), s, t, 1e-14, 0.0)
}

/// Standard normal CDF by quadrature of the density.
pub fn normal_cdf_oracle(z: f64) -> f64 {
    let density = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let half = integrate(&density, 0.0, z.abs().min(40.0), 1e-13, 1e-17);
    if z >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// KS distance to `N(0, variance)`, through the quadrature CDF.
pub fn ks_oracle(values: &[f64], variance: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let sd = variance.sqrt();
    let mut d: f64 = 0.0;
    for (i, x) in v.iter().enumerate() {
        let f = normal_cdf_oracle(x / sd);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Trapezoidal energy on `refine`-times finer linear interpolation.
pub fn refined_energy(path: &SamplePath, refine: usize) -> f64 {
    let big_t = path.horizon();
    let (t, x) = (path.times(), path.values());
    let mut acc = 0.0;
    for k in 1..t.len() {
        let h = (t[k] - t[k - 1]) / refine as f64;
        for j in 0..refine {
            let w0 = j as f64 / refine as f64;
            let w1 = (j + 1) as f64 / refine as f64;
            let s0 = t[k - 1] + j as f64 * h;
            let s1 = s0 + h;
            let x0 = x[k - 1] + w0 * (x[k] - x[k - 1]);
            let x1 = x[k - 1] + w1 * (x[k] - x[k - 1]);
            let f0 = (x0 / (big_t - s0)).powi(2);
            let f1 = (x1 / (big_t - s1)).powi(2);
            acc += 0.5 * (f0 + f1) * h;
        }
    }
    acc
}

/// Left-endpoint Ito sum of `int x/(T-s) dx` on the path's own grid,
/// optionally skipping to every `stride`-th point.
pub fn ito_sum(path: &SamplePath, stride: usize) -> f64 {
    let big_t = path.horizon();
    let t: Vec<f64> = path.times().iter().step_by(stride).copied().collect();
    let x: Vec<f64> = path.values().iter().step_by(stride).copied().collect();
    (1..t.len())
        .map(|k| x[k - 1] / (big_t - t[k - 1]) * (x[k] - x[k - 1]))
        .sum()
}

pub fn seeds(root: u64, n: usize) -> impl Iterator<Item = SeedSpec> {
    (0..n as u64).map(move |i| SeedSpec::new(root, i))
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Geometric grid accumulating at `T = 1`, with all `horizons` included.
pub fn geometric_to(ratio: f64, t_end: f64) -> TimeGrid {
    TimeGrid::geometric(1.0, ratio, t_end).unwrap()
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

pub fn presets_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets")
}

pub fn preset(name: &str) -> alpha_bridge::ExperimentSpec {
    alpha_bridge::ExperimentSpec::load(&presets_dir().join(format!("{name}.json"))).unwrap()
}

/// Each preset with the checks that carry its acceptance criterion.
pub const PRESET_CRITERIA: &[(&str, &[&str])] = &[
    ("covariance-check", &["covariance-max-z", "mean-max-z"]),
    ("consistency-sweep", &["median-error-decreasing", "final-median-error"]),
    ("classification", &["accuracy", "confusion-row-conserved"]),
    ("qv-dichotomy", &["final-relative-error", "error-increases"]),
    ("terminal-bridge", &["terminal-abs-p99"]),
    ("terminal-divergence", &["frac-small", "frac-plus"]),
    ("rescaled-limit", &["ks-distance"]),
    ("energy-divergence", &["energy-increasing"]),
    ("lil-diagnostic", &["median-sup-ratio"]),
];
