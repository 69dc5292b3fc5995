//! Membership in the identified set that leaves the shock distribution
//! unrestricted.
//!
//! With an unknown link function, `θ` is consistent with the cell means when
//! `r0 <= E[G | x] <= 1 - r1` in every cell and some weakly increasing `Λ`
//! passes through the points `(index_j(θ), mean_j)`. The latter holds iff
//! cells with a strictly larger mean also have a strictly larger index.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{cell_estimates, cell_indices, Dataset};
use crate::inference::ThetaGrid;
use crate::misclassification::correction_maps;
use crate::model::{CovariateSupport, Theta};

/// Observed belief statistics and link rate for each covariate cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub support: CovariateSupport,
    pub gamma: Vec<[f64; 4]>,
    pub means: Vec<f64>,
}

impl CellSummary {
    /// Sample cell summary of a dataset.
    pub fn from_data(data: &Dataset) -> Result<Self> {
        let est = cell_estimates(data)?;
        Ok(Self {
            support: data.support().clone(),
            gamma: est.gamma_hat,
            means: est.link_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// `(c + C γ(x_j))'b1 + x_j'b2` for every cell.
    pub fn index(&self, theta: &Theta) -> Result<Vec<f64>> {
        if theta.b2.len() != self.support.dim() {
            return Err(Error::Dimension(
                "b2 does not match the covariate dimension".into(),
            ));
        }
        let maps = correction_maps(theta.r0, theta.r1)?;
        Ok(cell_indices(&self.support, &self.gamma, theta, &maps))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `r0` exceeds the cell mean.
    FalsePositive { cell: usize, mean: f64, r0: f64 },
    /// `r1` exceeds one minus the cell mean.
    FalseNegative { cell: usize, mean: f64, r1: f64 },
    /// `higher` has the larger mean but not the larger index.
    Rank {
        higher: usize,
        lower: usize,
        index_higher: f64,
        index_lower: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::FalsePositive { cell, mean, r0 } => {
                write!(f, "r0={r0} exceeds mean {mean:.6} of cell {}", cell + 1)
            }
            Violation::FalseNegative { cell, mean, r1 } => {
                write!(f, "r1={r1} exceeds 1 - mean {mean:.6} of cell {}", cell + 1)
            }
            Violation::Rank {
                higher,
                lower,
                index_higher,
                index_lower,
            } => write!(
                f,
                "cell {} has the larger mean but index {index_higher:.6} <= {index_lower:.6} of cell {}",
                higher + 1,
                lower + 1
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub member: bool,
    pub violations: Vec<Violation>,
}

/// Checks the bound and rank conditions at `theta`.
pub fn sp_membership(cells: &CellSummary, theta: &Theta) -> Result<Membership> {
    let index = cells.index(theta)?;
    let mut violations = Vec::new();
    for (cell, &mean) in cells.means.iter().enumerate() {
        if theta.r0 > mean {
            violations.push(Violation::FalsePositive {
                cell,
                mean,
                r0: theta.r0,
            });
        }
        if theta.r1 > 1.0 - mean {
            violations.push(Violation::FalseNegative {
                cell,
                mean,
                r1: theta.r1,
            });
        }
    }
    for a in 0..cells.len() {
        for b in 0..cells.len() {
            if cells.means[a] > cells.means[b] && index[a] <= index[b] {
                violations.push(Violation::Rank {
                    higher: a,
                    lower: b,
                    index_higher: index[a],
                    index_lower: index[b],
                });
            }
        }
    }
    Ok(Membership {
        member: violations.is_empty(),
        violations,
    })
}

#[derive(Debug, Clone)]
pub struct SpPoint {
    pub theta: Theta,
    pub membership: Membership,
}

/// Membership verdicts over a grid, in grid order.
#[derive(Debug, Clone)]
pub struct SpSet {
    pub points: Vec<SpPoint>,
}

impl SpSet {
    pub fn members(&self) -> impl Iterator<Item = &Theta> {
        self.points
            .iter()
            .filter(|p| p.membership.member)
            .map(|p| &p.theta)
    }

    /// Columns: θ coordinates, `member`, `violations` (`;`-separated).
    pub fn write_csv(&self, path: &Path, dim: usize) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        let mut header = Theta::coordinate_names(dim);
        header.push("member".into());
        header.push("violations".into());
        let to_err =
            |e: csv::Error| Error::InvalidInput(format!("writing {}: {e}", path.display()));
        w.write_record(&header).map_err(to_err)?;
        for p in &self.points {
            let mut row: Vec<String> = p
                .theta
                .coordinates()
                .iter()
                .map(|v| v.to_string())
                .collect();
            row.push(u8::from(p.membership.member).to_string());
            row.push(
                p.membership
                    .violations
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("; "),
            );
            w.write_record(&row).map_err(to_err)?;
        }
        w.into_inner()
            .map_err(|e| Error::InvalidInput(e.to_string()))?
            .flush()
            .map_err(|e| Error::io(path, e))
    }
}

/// Evaluates [`sp_membership`] on the sample cell summary at every grid point.
pub fn sp_identified_set(data: &Dataset, grid: &ThetaGrid) -> Result<SpSet> {
    let cells = CellSummary::from_data(data)?;
    sp_set_from_cells(&cells, grid)
}

pub fn sp_set_from_cells(cells: &CellSummary, grid: &ThetaGrid) -> Result<SpSet> {
    let points = grid
        .points()
        .par_iter()
        .map(|theta| {
            sp_membership(cells, theta).map(|membership| SpPoint {
                theta: theta.clone(),
                membership,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpSet { points })
}
