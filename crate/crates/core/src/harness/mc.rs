//! Monte Carlo driver for the null distribution of the statistic and the
//! coverage of the confidence set.
//!
//! Replication `r` (0-based) uses seed `derive_seed(master, r)`. With
//! `fixed_x`, covariates and equilibrium come from seed
//! `derive_seed(master, FIXED_DESIGN_STREAM)` and are shared by all
//! replications.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{Dataset, Estimator};
use crate::inference::{
    chi2_cdf, chi2_quantile, confidence_set_with, projection_intervals, ThetaGrid,
};
use crate::model::{CovariateSupport, Theta};
use crate::rng::derive_seed;

use super::config::ExperimentConfig;
use super::{draw_design, draw_networks, Design};

/// Stream index reserved for the shared design of fixed-covariate runs.
pub const FIXED_DESIGN_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub seed: u64,
    pub residual: Option<f64>,
    pub statistic: Option<f64>,
    /// `T_n(θ0)` at or below the critical value.
    pub accepted: Option<bool>,
    /// Accepted grid points, when a grid is configured.
    pub ci_size: Option<usize>,
    /// Every projection interval contains the true coordinate, up to grid
    /// rounding.
    pub projection_covers: Option<bool>,
    /// The grid point equal to `θ0` is in the confidence set (when the grid
    /// contains it).
    pub truth_in_ci: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub replications: usize,
    pub failures: usize,
    pub dof: usize,
    pub alpha: f64,
    pub critical_value: f64,
    pub fixed_x: bool,
    /// Share of successful replications accepting `θ0`.
    pub coverage: f64,
    pub rejection_rate: f64,
    /// Kolmogorov-Smirnov distance of the statistics to `χ²_J`.
    pub ks_distance: f64,
    /// Share of replications whose projection intervals all cover `θ0`.
    pub projection_coverage: Option<f64>,
    #[serde(skip)]
    pub records: Vec<ReplicationRecord>,
}

/// `sup_t |F_R(t) - F(t)|` for the empirical distribution of `sample`.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let r = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let f = cdf(t);
            (f - k as f64 / r).max((k + 1) as f64 / r - f)
        })
        .fold(0.0, f64::max)
}

/// Grid points within rounding of `θ0` count as `θ0`.
fn same_point(a: &Theta, b: &Theta) -> bool {
    let (a, b) = (a.coordinates(), b.coordinates());
    a.len() == b.len()
        && a.iter()
            .zip(&b)
            .all(|(u, v)| (u - v).abs() <= 1e-12 * (1.0 + v.abs()))
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    support: CovariateSupport,
    theta: Theta,
    grid: Option<ThetaGrid>,
    /// Position of `θ0` in the grid.
    truth_index: Option<usize>,
    critical_value: f64,
    fixed: Option<Design>,
}

fn replicate(ctx: &Context<'_>, r: usize, seed: u64) -> ReplicationRecord {
    let mut rec = ReplicationRecord {
        replication: r,
        seed,
        residual: None,
        statistic: None,
        accepted: None,
        ci_size: None,
        projection_covers: None,
        truth_in_ci: None,
        error: None,
    };
    if let Err(e) = fill_record(ctx, seed, &mut rec) {
        log::warn!("replication {r}: {e}");
        rec.error = Some(e.to_string());
    }
    rec
}

fn fill_record(ctx: &Context<'_>, seed: u64, rec: &mut ReplicationRecord) -> Result<()> {
    let fresh;
    let design = match &ctx.fixed {
        Some(d) => d,
        None => {
            fresh = draw_design(ctx.cfg, &ctx.support, seed)?;
            &fresh
        }
    };
    rec.residual = Some(design.equilibrium.residual);
    let (_, observed) = draw_networks(ctx.cfg, design, seed)?;
    let data = Dataset::new(observed, design.x.clone(), ctx.support.clone())?;
    let est = Estimator::new(&data)?;
    let t = est.test_stat(&ctx.theta)?;
    rec.statistic = Some(t);
    rec.accepted = Some(t <= ctx.critical_value);
    if let Some(grid) = &ctx.grid {
        let cs = confidence_set_with(&est, grid, ctx.cfg.alpha)?;
        rec.ci_size = Some(cs.num_accepted());
        rec.truth_in_ci = ctx.truth_index.map(|k| cs.points[k].accepted);
        rec.projection_covers = Some(match projection_intervals(&cs) {
            Ok(iv) => iv.iter().zip(ctx.theta.coordinates()).all(|(b, v)| {
                let slack = 1e-12 * (1.0 + v.abs());
                b[0] - slack <= v && v <= b[1] + slack
            }),
            Err(Error::EmptySet) => false,
            Err(e) => return Err(e),
        });
    }
    Ok(())
}

/// Runs the configured experiment with replications spread over the thread pool.
pub fn run_mc_coverage(cfg: &ExperimentConfig) -> Result<RunReport> {
    run_mc_coverage_with(cfg, true)
}

/// As [`run_mc_coverage`], optionally running replications one at a time.
/// Both modes give identical reports.
pub fn run_mc_coverage_with(cfg: &ExperimentConfig, parallel: bool) -> Result<RunReport> {
    cfg.validate()?;
    let support = cfg.support()?;
    let theta = cfg.theta_true()?;
    let dof = support.len();
    let fixed = if cfg.fixed_x {
        Some(draw_design(
            cfg,
            &support,
            derive_seed(cfg.seed, FIXED_DESIGN_STREAM),
        )?)
    } else {
        None
    };
    let grid = if cfg.has_grid() {
        Some(cfg.grid()?)
    } else {
        None
    };
    let truth_index = grid
        .as_ref()
        .and_then(|g| g.points().iter().position(|t| same_point(t, &theta)));
    let ctx = Context {
        cfg,
        grid,
        truth_index,
        critical_value: chi2_quantile(dof, 1.0 - cfg.alpha)?,
        support,
        theta,
        fixed,
    };
    let run = |r: usize| replicate(&ctx, r, derive_seed(cfg.seed, r as u64));
    let records: Vec<ReplicationRecord> = if parallel {
        (0..cfg.replications).into_par_iter().map(run).collect()
    } else {
        (0..cfg.replications).map(run).collect()
    };

    let failures = records.iter().filter(|r| r.error.is_some()).count();
    if failures * 20 > cfg.replications {
        return Err(Error::ReplicationFailures {
            failed: failures,
            total: cfg.replications,
        });
    }
    let stats: Vec<f64> = records.iter().filter_map(|r| r.statistic).collect();
    let ok = records
        .iter()
        .filter(|r| r.accepted.is_some())
        .count()
        .max(1) as f64;
    let accepted = records.iter().filter(|r| r.accepted == Some(true)).count() as f64;
    let projection_coverage = ctx.grid.as_ref().map(|_| {
        records
            .iter()
            .filter(|r| r.projection_covers == Some(true))
            .count() as f64
            / ok
    });
    Ok(RunReport {
        replications: cfg.replications,
        failures,
        dof,
        alpha: cfg.alpha,
        critical_value: ctx.critical_value,
        fixed_x: cfg.fixed_x,
        coverage: accepted / ok,
        rejection_rate: 1.0 - accepted / ok,
        ks_distance: ks_distance(&stats, |t| chi2_cdf(dof, t)),
        projection_coverage,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_uniform_grid() {
        let sample: Vec<f64> = (0..10).map(|k| (k as f64 + 0.5) / 10.0).collect();
        let d = ks_distance(&sample, |t| t.clamp(0.0, 1.0));
        assert!((d - 0.05).abs() < 1e-15);
        assert_eq!(ks_distance(&[0.5], |t| t.clamp(0.0, 1.0)), 0.5);
    }
}
