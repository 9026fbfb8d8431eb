use crate::error::{BridgeError, Result};
use crate::estimators;
use crate::model::{self, BridgeParams, SamplePath, TimeGrid};
use crate::path_stats;
use crate::pathio;
use crate::samplers::{self, SeedSpec};

use super::stats::{ks_distance_normal, mean, median, quantile, std_error};
use super::thresholds as th;
use super::{replicate, Cell, Check, ExperimentSpec, GridPolicy, RunOptions};

pub(super) struct Context<'a> {
    pub spec: &'a ExperimentSpec,
    pub options: &'a RunOptions,
}

type Outcome = Result<(Vec<Cell>, Vec<Check>)>;

impl Context<'_> {
    fn sample(&self, params: &BridgeParams, grid: &TimeGrid, seed: SeedSpec) -> Result<SamplePath> {
        let path = samplers::sample(self.spec.sampler, params, grid, seed)?;
        if let Some(dir) = &self.options.dump_dir {
            let cell = seed.replicate_index >> 32;
            let rep = seed.replicate_index & 0xffff_ffff;
            pathio::write_path_csv(&path, &dir.join(format!("cell{cell}_rep{rep}.csv")))?;
        }
        Ok(path)
    }

    /// Runs every replicate of a cell; failed replicates are counted.
    fn collect<T, F>(&self, cell: &mut Cell, index: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(SeedSpec) -> Result<T> + Sync,
    {
        let mut ok = Vec::with_capacity(self.spec.replicates);
        for r in replicate(self.spec, index, f) {
            match r {
                Ok(v) => ok.push(v),
                Err(_) => cell.failures += 1,
            }
        }
        if ok.is_empty() {
            return Err(BridgeError::Numerical(format!(
                "every replicate of {} failed",
                cell.label
            )));
        }
        Ok(ok)
    }
}

pub(super) fn covariance_check(ctx: &Context) -> Outcome {
    let spec = ctx.spec;
    let mut cells = Vec::new();
    let mut checks = Vec::new();
    for (c, p) in spec.params().iter().enumerate() {
        let mut cell = Cell::new(c, p);
        let grid = spec.grid.build(p.horizon, spec.horizons[0])?;
        // t = 0 carries no randomness
        let times: Vec<f64> = grid.points()[1..].to_vec();
        let draws = ctx.collect(&mut cell, c, |seed| {
            Ok(ctx.sample(p, &grid, seed)?.values()[1..].to_vec())
        })?;
        let s2 = p.sigma * p.sigma;
        let mut max_dev: f64 = 0.0;
        let mut max_z_cov: f64 = 0.0;
        let mut max_z_mean: f64 = 0.0;
        let mut min_se = f64::INFINITY;
        let mut cov_emp = Vec::new();
        let mut cov_se = Vec::new();
        for i in 0..times.len() {
            let xs: Vec<f64> = draws.iter().map(|v| v[i]).collect();
            let se = std_error(&xs);
            min_se = min_se.min(se);
            max_z_mean = max_z_mean.max(mean(&xs).abs() / se);
            for j in 0..=i {
                let prods: Vec<f64> = draws.iter().map(|v| v[i] * v[j]).collect();
                let emp = mean(&prods);
                let se = std_error(&prods);
                let truth = s2 * model::covariance(p.alpha, p.alpha, times[i], times[j], p.horizon)?;
                let dev = (emp - truth).abs();
                max_dev = max_dev.max(dev);
                max_z_cov = max_z_cov.max(dev / se);
                min_se = min_se.min(se);
                cov_emp.push(emp);
                cov_se.push(se);
            }
        }
        cell.stats.insert("max_abs_deviation".into(), max_dev);
        cell.stats.insert("max_z_covariance".into(), max_z_cov);
        cell.stats.insert("max_z_mean".into(), max_z_mean);
        cell.stats.insert("min_standard_error".into(), min_se);
        cell.series.insert("times".into(), times);
        cell.series.insert("covariance_lower_triangle".into(), cov_emp);
        cell.series.insert("covariance_standard_error".into(), cov_se);
        checks.push(Check::within(
            "covariance-max-z",
            &cell.label,
            max_z_cov,
            None,
            Some(th::MAX_Z),
        ));
        checks.push(Check::within(
            "mean-max-z",
            &cell.label,
            max_z_mean,
            None,
            Some(th::MAX_Z),
        ));
        cells.push(cell);
    }
    Ok((cells, checks))
}

pub(super) fn consistency_sweep(ctx: &Context) -> Outcome {
    let spec = ctx.spec;
    let horizons = &spec.horizons;
    let last = *horizons.last().expect("validated");
    let mut cells = Vec::new();
    let mut checks = Vec::new();
    for (c, p) in spec.params().iter().enumerate() {
        let mut cell = Cell::new(c, p);
        let grid = spec.grid.build(p.horizon, last)?.with_points(horizons)?;
        let rows = ctx.collect(&mut cell, c, |seed| {
            let path = ctx.sample(p, &grid, seed)?;
            horizons
                .iter()
                .map(|&h| Ok((estimators::mle_alpha(&path, h)?, estimators::energy_integral(&path, h)?)))
                .collect::<Result<Vec<(f64, f64)>>>()
        })?;
        let mut med_err = Vec::new();
        let mut se_err = Vec::new();
        let mut med_alpha = Vec::new();
        let mut med_energy = Vec::new();
        for k in 0..horizons.len() {
            let errs: Vec<f64> = rows.iter().map(|r| (r[k].0 - p.alpha).abs()).collect();
            let alphas: Vec<f64> = rows.iter().map(|r| r[k].0).collect();
            let energies: Vec<f64> = rows.iter().map(|r| r[k].1).collect();
            med_err.push(median(&errs));
            se_err.push(std_error(&errs));
            med_alpha.push(median(&alphas));
            med_energy.push(median(&energies));
        }
        let decreasing = med_err.windows(2).all(|w| w[1] < w[0]);
        let increasing = med_energy.windows(2).all(|w| w[1] > w[0]);
        checks.push(Check::holds("median-error-decreasing", &cell.label, decreasing));
        checks.push(Check::within(
            "final-median-error",
            &cell.label,
            *med_err.last().expect("nonempty"),
            None,
            Some(th::CONSISTENCY_FINAL_MEDIAN_ERROR),
        ));
        checks.push(Check::holds("energy-increasing", &cell.label, increasing));
        cell.series.insert("horizons".into(), horizons.clone());
        cell.series.insert("median_abs_error".into(), med_err);
        cell.series.insert("abs_error_standard_error".into(), se_err);
        cell.series.insert("median_alpha_hat".into(), med_alpha);
        cell.series.insert("median_energy".into(), med_energy);
        cells.push(cell);
    }
    Ok((cells, checks))
}

pub(super) fn classification(ctx: &Context) -> Outcome {
    let spec = ctx.spec;
    let h = spec.horizons[0];
    let candidates = &spec.candidates;
    let mut cells = Vec::new();
    let mut correct = 0u64;
    let mut total = 0u64;
    let mut checks = Vec::new();
    for (c, p) in spec.params().iter().enumerate() {
        let mut cell = Cell::new(c, p);
        let grid = spec.grid.build(p.horizon, h)?;
        let labels = ctx.collect(&mut cell, c, |seed| {
            let path = ctx.sample(p, &grid, seed)?;
            estimators::classify_alpha(&path, h, candidates)
        })?;
        let mut row = vec![0u64; candidates.len()];
        for label in &labels {
            let k = candidates
                .iter()
                .position(|c| c == label)
                .expect("label is a candidate");
            row[k] += 1;
        }
        let hits = labels.iter().filter(|l| **l == p.alpha).count() as u64;
        correct += hits;
        total += spec.replicates as u64;
        let rows_conserved = row.iter().sum::<u64>() + cell.failures == spec.replicates as u64;
        checks.push(Check::holds("confusion-row-conserved", &cell.label, rows_conserved));
        cell.stats
            .insert("accuracy".into(), hits as f64 / spec.replicates as f64);
        cell.series.insert("candidates".into(), candidates.clone());
        cell.counts.insert("confusion_row".into(), row);
        cells.push(cell);
    }
    let accuracy = correct as f64 / total as f64;
    checks.push(Check::within(
        "accuracy",
        "all",
        accuracy,
        Some(th::CLASSIFICATION_MIN_ACCURACY),
        None,
    ));
    Ok((cells, checks))
}

pub(super) fn qv_dichotomy(ctx: &Context) -> Outcome {
    let spec = ctx.spec;
    let h = spec.horizons[0];
    let GridPolicy::Dyadic { min_level, max_level } = spec.grid else {
        unreachable!("validated");
    };
    let levels: Vec<u32> = (min_level..=max_level).collect();
    let mut cells = Vec::new();
    let mut checks = Vec::new();
    for (c, p) in spec.params().iter().enumerate() {
        let mut cell = Cell::new(c, p);
        let grid = spec.grid.build(p.horizon, h)?;
        let rows = ctx.collect(&mut cell, c, |seed| {
            let path = ctx.sample(p, &grid, seed)?;
            levels
                .iter()
                .map(|&level| {
                    let stride = 1usize << (max_level - level);
                    let times: Vec<f64> = path.times().iter().step_by(stride).copied().collect();
                    let values: Vec<f64> = path.values().iter().step_by(stride).copied().collect();
                    estimators::qv_sigma2(&SamplePath::new(TimeGrid::new(times)?, values, p.horizon)?)
                })
                .collect::<Result<Vec<f64>>>()
        })?;
        let s2 = p.sigma * p.sigma;
        let mut med = Vec::new();
        let mut med_err = Vec::new();
        for k in 0..levels.len() {
            let est: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            let errs: Vec<f64> = est.iter().map(|e| (e - s2).abs()).collect();
            med.push(median(&est));
            med_err.push(median(&errs));
        }
        let increases = med_err.windows(2).filter(|w| w[1] > w[0]).count();
        let final_rel = (med.last().expect("nonempty") - s2).abs() / s2;
        checks.push(Check::within(
            "final-relative-error",
            &cell.label,
            final_rel,
            None,
            Some(th::QV_REL_TOL),
        ));
        checks.push(Check::within(
            "error-increases",
            &cell.label,
            increases as f64,
            None,
            Some(th::QV_ALLOWED_INCREASES as f64),
        ));
        cell.stats.insert("final_relative_error".into(), final_rel);
        cell.series
            .insert("levels".into(), levels.iter().map(|l| *l as f64).collect());
        cell.series.insert("median_sigma2".into(), med);
        cell.series.insert("median_abs_error".into(), med_err);
        cells.push(cell);
    }
    Ok((cells, checks))
}

pub(super) fn terminal_behavior(ctx: &Context) -> Outcome {
    let spec = ctx.spec;
    let h = spec.horizons[0];
    let threshold = spec.threshold.unwrap_or(th::DIVERGENCE_THRESHOLD);
    let mut cells = Vec::new();
    let mut checks = Vec::new();
    for (c, p) in spec.params().iter().enumerate() {
        let mut cell = Cell::new(c, p);
        let mut grid = spec.grid.build(p.horizon, h)?;
        if let Some(w) = &spec.window {
            grid = grid.with_points(&[w.t_lo, w.t_hi])?;
        }
        let terminal_index = grid.points().partition_point(|&t| t <= h) - 1;
        let rows = ctx.collect(&mut cell, c, |seed| {
            let path = ctx.sample(p, &grid, seed)?;
            let sup = match &spec.window {
                Some(w) => Some(path_stats::terminal_sup(&path, w)?),
                None => None,
            };
            Ok((path.values()[terminal_index], sup))
        })?;
        let terminal: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let abs: Vec<f64> = terminal.iter().map(|x| x.abs()).collect();
        cell.stats.insert("horizon".into(), h);
        cell.stats.insert("terminal_mean".into(), mean(&terminal));
        cell.stats
            .insert("terminal_mean_standard_error".into(), std_error(&terminal));
        cell.stats.insert("terminal_abs_p99".into(), quantile(&abs, 0.99));
        cell.stats.insert("terminal_abs_median".into(), median(&abs));
        let sups: Vec<f64> = rows.iter().filter_map(|r| r.1).collect();
        if !sups.is_empty() {
            cell.stats.insert("window_sup_p99".into(), quantile(&sups, 0.99));
        }
        if p.alpha > 0.0 {
            checks.push(Check::within(
                "terminal-abs-p99",
                &cell.label,
                quantile(&abs, 0.99),
                None,
                Some(th::BRIDGE_TERMINAL_P99),
            ));
        } else {
            let (plus, minus, small) = path_stats::sign_split(&terminal, threshold)?;
            cell.stats.insert("threshold".into(), threshold);
            cell.stats.insert("frac_plus".into(), plus);
            cell.stats.insert("frac_minus".into(), minus);
            cell.stats.insert("frac_small".into(), small);
            checks.push(Check::within(
                "frac-small",
                &cell.label,
                small,
                None,
                Some(th::DIVERGENCE_MAX_SMALL),
            ));
            let (lo, hi) = th::DIVERGENCE_PLUS_BAND;
            checks.push(Check::within("frac-plus", &cell.label, plus, Some(lo), Some(hi)));
        }
        cells.push(cell);
    }
    Ok((cells, checks))
}

pub(super) fn lil_diagnostic(ctx: &Context) -> Outcome {
    let spec = ctx.spec;
    let window = spec.window.expect("validated");
    let mut cells = Vec::new();
    let mut checks = Vec::new();
    for (c, p) in spec.params().iter().enumerate() {
        let mut cell = Cell::new(c, p);
        let grid = spec.grid.build(p.horizon, window.t_hi)?.with_points(&[window.t_lo])?;
        let rows = ctx.collect(&mut cell, c, |seed| {
            let path = ctx.sample(p, &grid, seed)?;
            path_stats::envelope_ratio(&path, p.alpha, &window)
        })?;
        let sups: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let infs: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let med_sup = median(&sups);
        cell.stats.insert("median_sup_ratio".into(), med_sup);
        cell.stats.insert("median_inf_ratio".into(), median(&infs));
        cell.stats.insert("sup_ratio_standard_error".into(), std_error(&sups));
        cell.stats.insert("inf_ratio_standard_error".into(), std_error(&infs));
        let (lo, hi) = th::LIL_SUP_BAND;
        checks.push(Check::within(
            "median-sup-ratio",
            &cell.label,
            med_sup,
            Some(lo),
            Some(hi),
        ));
        cells.push(cell);
    }
    Ok((cells, checks))
}

pub(super) fn rescaled_limit(ctx: &Context) -> Outcome {
    let spec = ctx.spec;
    let h = spec.horizons[0];
    let mut cells = Vec::new();
    let mut checks = Vec::new();
    for (c, p) in spec.params().iter().enumerate() {
        let mut cell = Cell::new(c, p);
        let grid = spec.grid.build(p.horizon, h)?;
        let values = ctx.collect(&mut cell, c, |seed| {
            let path = ctx.sample(p, &grid, seed)?;
            Ok(path_stats::rescaled_terminal(&path, p.alpha))
        })?;
        let limit = p.sigma * p.sigma * model::limit_variance(p.alpha, p.horizon)?;
        let ks = ks_distance_normal(&values, limit);
        let second: Vec<f64> = values.iter().map(|v| v * v).collect();
        cell.stats.insert("ks_distance".into(), ks);
        cell.stats.insert("limit_variance".into(), limit);
        cell.stats.insert("mean".into(), mean(&values));
        cell.stats.insert("mean_standard_error".into(), std_error(&values));
        cell.stats.insert("second_moment".into(), mean(&second));
        cell.stats
            .insert("second_moment_standard_error".into(), std_error(&second));
        checks.push(Check::within(
            "ks-distance",
            &cell.label,
            ks,
            None,
            Some(th::RESCALED_MAX_KS),
        ));
        cells.push(cell);
    }
    Ok((cells, checks))
}
