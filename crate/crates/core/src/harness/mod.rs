//! Configuration, data files and the drivers behind the command-line tool.
//!
//! A simulation keyed by `seed` draws covariates from `derive_seed(seed, 0)`,
//! structural shocks from `derive_seed(seed, 1)` and misclassification flips
//! from `derive_seed(seed, 2)`.

pub mod config;
pub mod io;
pub mod mc;

use std::path::Path;

use serde::Serialize;

use crate::equilibrium::{solve_equilibrium, Equilibrium, LinkSampler};
use crate::error::{Error, Result};
use crate::estimation::{Dataset, Estimator};
use crate::inference::{confidence_set_with, projection_intervals, ConfidenceSet};
use crate::misclassification::apply_misclassification;
use crate::model::{CovariateSupport, Network, PairCovariates, Theta};
use crate::rng::derive_seed;
use crate::semiparametric::{sp_identified_set, SpSet};

pub use config::{Assignment, ExperimentConfig, NetworkFormat};
pub use mc::{run_mc_coverage, run_mc_coverage_with, ReplicationRecord, RunReport};

/// Covariates with their solved equilibrium.
pub struct Design {
    pub x: PairCovariates,
    pub equilibrium: Equilibrium,
    pub sampler: LinkSampler,
}

pub fn draw_design(
    cfg: &ExperimentConfig,
    support: &CovariateSupport,
    seed: u64,
) -> Result<Design> {
    let x = cfg.covariates(support, derive_seed(seed, 0))?;
    let equilibrium = solve_equilibrium(&x, support, &cfg.b1, &cfg.b2, &cfg.solver())?;
    let sampler = LinkSampler::new(&equilibrium.beliefs, &x, support, &cfg.b1, &cfg.b2)?;
    Ok(Design {
        x,
        equilibrium,
        sampler,
    })
}

/// True and observed networks drawn from a design.
pub fn draw_networks(
    cfg: &ExperimentConfig,
    design: &Design,
    seed: u64,
) -> Result<(Network, Network)> {
    let gstar = design.sampler.sample(derive_seed(seed, 1));
    let g = apply_misclassification(&gstar, cfg.rho0, cfg.rho1, derive_seed(seed, 2))?;
    Ok((gstar, g))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn create_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub n: usize,
    pub cells: usize,
    pub seed: u64,
    pub equilibrium_residual: f64,
    pub equilibrium_iterations: usize,
    pub true_links: usize,
    pub observed_links: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

/// Simulates one dataset and writes `support.csv`, `covariates.csv`,
/// `true_network.csv`, `observed_network.csv` and `summary.json` to `out`.
pub fn run_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<SimulationSummary> {
    cfg.validate()?;
    let support = cfg.support()?;
    let design = draw_design(cfg, &support, cfg.seed)?;
    let (gstar, g) = draw_networks(cfg, &design, cfg.seed)?;
    create_dir(out)?;
    io::write_support(&out.join("support.csv"), &support)?;
    io::write_covariates(&out.join("covariates.csv"), &design.x)?;
    io::write_network(&out.join("true_network.csv"), &gstar)?;
    io::write_network(&out.join("observed_network.csv"), &g)?;
    let (mut fp, mut fn_) = (0, 0);
    for (a, b) in gstar.as_slice().iter().zip(g.as_slice()) {
        match (a, b) {
            (0, 1) => fp += 1,
            (1, 0) => fn_ += 1,
            _ => {}
        }
    }
    let summary = SimulationSummary {
        n: cfg.n,
        cells: support.len(),
        seed: cfg.seed,
        equilibrium_residual: design.equilibrium.residual,
        equilibrium_iterations: design.equilibrium.iterations,
        true_links: gstar.link_count(),
        observed_links: g.link_count(),
        false_positives: fp,
        false_negatives: fn_,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Observed data named by the config: `network_file`, with covariates from
/// `covariates_file` or regenerated from the assignment rule and seed as in
/// [`run_simulate`].
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    cfg.validate()?;
    let support = cfg.support()?;
    let network_file = cfg
        .network_file
        .as_ref()
        .ok_or_else(|| Error::Config("network_file is required".into()))?;
    let x = match &cfg.covariates_file {
        Some(path) => io::read_covariates(path, support.len())?,
        None => cfg.covariates(&support, derive_seed(cfg.seed, 0))?,
    };
    if x.n() != cfg.n {
        return Err(Error::Config(format!(
            "covariates describe {} agents, n = {}",
            x.n(),
            cfg.n
        )));
    }
    let g = io::read_network(network_file, cfg.network_format, cfg.n)?;
    Dataset::new(g, x, support)
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateSummary {
    pub theta: Vec<f64>,
    pub statistic: Option<f64>,
    pub min_eigenvalue: f64,
    pub condition_number: f64,
    pub error: Option<String>,
}

/// Writes cell estimates and the moment (`cells.csv`), `Ŝ` (`variance.csv`)
/// and the statistic at the configured `θ` (`summary.json`).
pub fn run_estimate(cfg: &ExperimentConfig, out: &Path) -> Result<EstimateSummary> {
    let data = load_dataset(cfg)?;
    let theta = cfg.theta_true()?;
    let est = Estimator::new(&data)?;
    let m = est.moment(&theta)?;
    let v = est.variance_unchecked(&theta)?;
    let statistic = est.test_stat(&theta);
    create_dir(out)?;

    let cells = est.cells();
    let support = data.support();
    let mut header = vec!["cell".to_string()];
    header.extend((1..=support.dim()).map(|k| format!("x_{k}")));
    header.extend(
        [
            "pairs",
            "p_hat",
            "gamma_1",
            "gamma_2",
            "gamma_3",
            "gamma_4",
            "link_rate",
            "moment",
        ]
        .map(String::from),
    );
    let rows = (0..data.num_cells()).map(|c| {
        let mut row = vec![(c + 1).to_string()];
        row.extend(support.point(c).iter().map(|v| v.to_string()));
        row.push(cells.counts[c].to_string());
        row.push(cells.p_hat[c].to_string());
        row.extend(cells.gamma_hat[c].iter().map(|v| v.to_string()));
        row.push(cells.link_rate[c].to_string());
        row.push(m.0[c].to_string());
        row
    });
    write_table(&out.join("cells.csv"), header, rows)?;
    let jn = data.num_cells();
    write_table(
        &out.join("variance.csv"),
        (1..=jn).map(|k| format!("s_{k}")).collect(),
        (0..jn).map(|a| (0..jn).map(|b| v.0[(a, b)].to_string()).collect::<Vec<_>>()),
    )?;
    let summary = EstimateSummary {
        theta: theta.coordinates(),
        statistic: statistic.as_ref().ok().copied(),
        min_eigenvalue: v.min_eigenvalue(),
        condition_number: v.condition_number(),
        error: statistic.err().map(|e| e.to_string()),
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn write_table<I, R>(path: &Path, header: Vec<String>, rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    let to_err = |e: csv::Error| Error::InvalidInput(format!("writing {}: {e}", path.display()));
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(row).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Serialize)]
pub struct CiSummary {
    pub alpha: f64,
    pub critical_value: f64,
    pub dof: usize,
    pub grid_points: usize,
    pub accepted: usize,
    pub degenerate: usize,
    pub coordinates: Vec<String>,
    /// `None` when no grid point is accepted.
    pub projection: Option<Vec<[f64; 2]>>,
}

/// Writes `confidence_set.csv`, `projection.csv` (when nonempty) and
/// `summary.json`.
pub fn run_ci(cfg: &ExperimentConfig, out: &Path) -> Result<(ConfidenceSet, CiSummary)> {
    let data = load_dataset(cfg)?;
    let grid = cfg.grid()?;
    let est = Estimator::new(&data)?;
    let cs = confidence_set_with(&est, &grid, cfg.alpha)?;
    create_dir(out)?;
    cs.write_csv(&out.join("confidence_set.csv"))?;
    let names = Theta::coordinate_names(data.support().dim());
    let projection = match projection_intervals(&cs) {
        Ok(iv) => {
            write_table(
                &out.join("projection.csv"),
                ["coordinate", "lower", "upper"].map(String::from).to_vec(),
                names
                    .iter()
                    .zip(&iv)
                    .map(|(n, b)| vec![n.clone(), b[0].to_string(), b[1].to_string()]),
            )?;
            Some(iv)
        }
        Err(Error::EmptySet) => {
            log::warn!("no grid point accepted at alpha = {}", cfg.alpha);
            None
        }
        Err(e) => return Err(e),
    };
    let summary = CiSummary {
        alpha: cs.alpha,
        critical_value: cs.critical_value,
        dof: cs.dof,
        grid_points: cs.points.len(),
        accepted: cs.num_accepted(),
        degenerate: cs.points.iter().filter(|p| p.statistic.is_none()).count(),
        coordinates: names,
        projection,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok((cs, summary))
}

#[derive(Debug, Clone, Serialize)]
pub struct SpSummary {
    pub grid_points: usize,
    pub members: usize,
}

/// Writes `sp_set.csv` and `summary.json`.
pub fn run_sp_set(cfg: &ExperimentConfig, out: &Path) -> Result<(SpSet, SpSummary)> {
    let data = load_dataset(cfg)?;
    let grid = cfg.grid()?;
    let set = sp_identified_set(&data, &grid)?;
    create_dir(out)?;
    set.write_csv(&out.join("sp_set.csv"), data.support().dim())?;
    let summary = SpSummary {
        grid_points: set.points.len(),
        members: set.members().count(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok((set, summary))
}

/// Writes `replications.csv` and `summary.json` for a Monte Carlo run.
pub fn write_run_report(report: &RunReport, out: &Path) -> Result<()> {
    create_dir(out)?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
    let flag = |v: Option<bool>| v.map_or_else(String::new, |v| u8::from(v).to_string());
    write_table(
        &out.join("replications.csv"),
        [
            "replication",
            "seed",
            "residual",
            "statistic",
            "accepted",
            "ci_size",
            "projection_covers",
            "truth_in_ci",
            "error",
        ]
        .map(String::from)
        .to_vec(),
        report.records.iter().map(|r| {
            vec![
                (r.replication + 1).to_string(),
                r.seed.to_string(),
                opt(r.residual),
                opt(r.statistic),
                flag(r.accepted),
                r.ci_size.map_or_else(String::new, |v| v.to_string()),
                flag(r.projection_covers),
                flag(r.truth_in_ci),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )?;
    write_json(&out.join("summary.json"), report)
}
