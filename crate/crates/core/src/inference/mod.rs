//! Confidence sets by inverting the quadratic-form moment test over a grid.

mod chi2;
mod grid;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

pub use chi2::{chi2_cdf, chi2_quantile};
pub use grid::{Axis, ThetaGrid};

use crate::error::{Error, Result};
use crate::estimation::{Dataset, Estimator};
use crate::model::Theta;

/// Test outcome at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub theta: Theta,
    /// `None` when the statistic could not be formed.
    pub statistic: Option<f64>,
    pub accepted: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceSet {
    pub alpha: f64,
    pub critical_value: f64,
    /// Degrees of freedom, the number of covariate cells.
    pub dof: usize,
    /// Every grid point, in grid order.
    pub points: Vec<GridPoint>,
}

impl ConfidenceSet {
    pub fn accepted(&self) -> impl Iterator<Item = &GridPoint> {
        self.points.iter().filter(|p| p.accepted)
    }

    pub fn num_accepted(&self) -> usize {
        self.accepted().count()
    }

    /// Columns: θ coordinates, `statistic`, `accepted`, `reason`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let dim = self.points.first().map_or(0, |p| p.theta.b2.len());
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        let to_err =
            |e: csv::Error| Error::InvalidInput(format!("writing {}: {e}", path.display()));
        let mut header = Theta::coordinate_names(dim);
        header.extend(["statistic", "accepted", "reason"].map(String::from));
        w.write_record(&header).map_err(to_err)?;
        for p in &self.points {
            let mut row: Vec<String> = p
                .theta
                .coordinates()
                .iter()
                .map(|v| v.to_string())
                .collect();
            row.push(p.statistic.map_or_else(String::new, |s| s.to_string()));
            row.push(u8::from(p.accepted).to_string());
            row.push(p.reason.clone().unwrap_or_default());
            w.write_record(&row).map_err(to_err)?;
        }
        w.into_inner()
            .map_err(|e| Error::InvalidInput(e.to_string()))?
            .flush()
            .map_err(|e| Error::io(path, e))
    }
}

/// Evaluates the statistic at every grid point and keeps those at or below the
/// `1 - alpha` quantile of `χ²_J`.
///
/// Points with a degenerate variance estimate are rejected and carry the
/// reason.
pub fn confidence_set(data: &Dataset, grid: &ThetaGrid, alpha: f64) -> Result<ConfidenceSet> {
    let est = Estimator::new(data)?;
    confidence_set_with(&est, grid, alpha)
}

/// [`confidence_set`] reusing a prepared estimator.
pub fn confidence_set_with(
    est: &Estimator<'_>,
    grid: &ThetaGrid,
    alpha: f64,
) -> Result<ConfidenceSet> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if grid.dim() != est.data().support().dim() {
        return Err(Error::Dimension(format!(
            "grid has b2 of length {}, covariates have dimension {}",
            grid.dim(),
            est.data().support().dim()
        )));
    }
    let dof = est.data().num_cells();
    let critical_value = chi2_quantile(dof, 1.0 - alpha)?;
    let points = grid
        .points()
        .par_iter()
        .map(|theta| match est.test_stat(theta) {
            Ok(t) => Ok(GridPoint {
                theta: theta.clone(),
                statistic: Some(t),
                accepted: t <= critical_value,
                reason: None,
            }),
            Err(e @ Error::DegenerateVariance { .. }) => {
                log::debug!("grid point {:?}: {e}", theta.coordinates());
                Ok(GridPoint {
                    theta: theta.clone(),
                    statistic: None,
                    accepted: false,
                    reason: Some(e.to_string()),
                })
            }
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConfidenceSet {
        alpha,
        critical_value,
        dof,
        points,
    })
}

/// Coordinatewise `[min, max]` over the accepted points, in the order of
/// [`Theta::coordinates`].
pub fn projection_intervals(cs: &ConfidenceSet) -> Result<Vec<[f64; 2]>> {
    let mut accepted = cs.accepted().map(|p| p.theta.coordinates());
    let first = accepted.next().ok_or(Error::EmptySet)?;
    let mut out: Vec<[f64; 2]> = first.iter().map(|&v| [v, v]).collect();
    for coords in accepted {
        for (iv, v) in out.iter_mut().zip(coords) {
            iv[0] = iv[0].min(v);
            iv[1] = iv[1].max(v);
        }
    }
    Ok(out)
}
