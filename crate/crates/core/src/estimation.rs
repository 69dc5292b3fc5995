//! Plug-in estimators from one observed network.
//!
//! All pair sums run over ordered pairs `i != j`, so the pair count is
//! `N = n(n-1)` and `p̂(x)` partitions exactly across cells. Inner sums over a
//! third agent `k` run over all agents, with the zero diagonal removing the
//! `k = i` and `k = j` terms where they would involve a self-link.
//!
//! Every cell-level sum is accumulated in integers, so cell estimates and the
//! per-agent influence terms do not depend on summation order.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::misclassification::{correction_maps, CorrectionMaps};
use crate::model::{dot, CovariateSupport, Network, PairCovariates, Theta};
use crate::normal;

/// Smallest eigenvalue of `Ŝ` accepted before the variance is declared degenerate.
pub const VARIANCE_FLOOR: f64 = 1e-10;
/// Largest condition number of `Ŝ` accepted by the quadratic-form statistic.
pub const MAX_CONDITION: f64 = 1e12;

/// An observed network with its pair covariates.
#[derive(Debug, Clone)]
pub struct Dataset {
    network: Network,
    covariates: PairCovariates,
    support: CovariateSupport,
}

impl Dataset {
    pub fn new(
        network: Network,
        covariates: PairCovariates,
        support: CovariateSupport,
    ) -> Result<Self> {
        if network.n() != covariates.n() {
            return Err(Error::Dimension(format!(
                "network has n={}, covariates n={}",
                network.n(),
                covariates.n()
            )));
        }
        if covariates.num_points() != support.len() {
            return Err(Error::Dimension(format!(
                "covariates index {} support points, support has {}",
                covariates.num_points(),
                support.len()
            )));
        }
        if network.n() < 2 {
            return Err(Error::InvalidInput(
                "at least two agents are required".into(),
            ));
        }
        Ok(Self {
            network,
            covariates,
            support,
        })
    }

    pub fn n(&self) -> usize {
        self.network.n()
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn covariates(&self) -> &PairCovariates {
        &self.covariates
    }

    pub fn support(&self) -> &CovariateSupport {
        &self.support
    }

    /// Number of support points `J`.
    pub fn num_cells(&self) -> usize {
        self.support.len()
    }

    fn num_pairs(&self) -> f64 {
        let n = self.n() as f64;
        n * (n - 1.0)
    }
}

/// Cell frequencies `p̂(x_j)`, observed belief statistics `γ̂(x_j)` and cell
/// link rates.
#[derive(Debug, Clone, PartialEq)]
pub struct CellEstimates {
    /// Off-diagonal pairs per cell.
    pub counts: Vec<usize>,
    pub p_hat: Vec<f64>,
    /// One 4-vector per cell: reciprocity, target in-degree, common
    /// in-neighbours, summed in-degree (the last three scaled by `1/n`).
    pub gamma_hat: Vec<[f64; 4]>,
    /// Cell average of `G_ij`.
    pub link_rate: Vec<f64>,
}

/// Sample moment vector `m̂_n(θ)`, one entry per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector(pub Vec<f64>);

impl MomentVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Variance estimate `Ŝ(θ)` of the moment vector.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceMatrix(pub DMatrix<f64>);

impl VarianceMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    fn eigen_range(&self) -> (f64, f64) {
        let eig = self.0.clone().symmetric_eigen().eigenvalues;
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (min, max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen_range().0
    }

    /// Ratio of the largest to the smallest eigenvalue (infinite when the
    /// smallest is not positive).
    pub fn condition_number(&self) -> f64 {
        let (min, max) = self.eigen_range();
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Fails with [`Error::DegenerateVariance`] when the smallest eigenvalue is
    /// below [`VARIANCE_FLOOR`] or the condition number exceeds [`MAX_CONDITION`].
    pub fn check(&self) -> Result<()> {
        let (min, max) = self.eigen_range();
        let condition = if min <= 0.0 { f64::INFINITY } else { max / min };
        if min < VARIANCE_FLOOR || condition > MAX_CONDITION {
            Err(Error::DegenerateVariance {
                min_eigenvalue: min,
                condition,
            })
        } else {
            Ok(())
        }
    }
}

/// Pair counts by cell along rows and columns, excluding the diagonal.
struct CellMargins {
    counts: Vec<u64>,
    /// `row[i * J + x]` = #{j != i : X_ij = x}
    row: Vec<u64>,
    /// `col[j * J + x]` = #{i != j : X_ij = x}
    col: Vec<u64>,
}

impl CellMargins {
    fn new(x: &PairCovariates) -> Self {
        let n = x.n();
        let jn = x.num_points();
        let mut counts = vec![0; jn];
        let mut row = vec![0; n * jn];
        let mut col = vec![0; n * jn];
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let c = x.cell(i, j);
                counts[c] += 1;
                row[i * jn + c] += 1;
                col[j * jn + c] += 1;
            }
        }
        Self { counts, row, col }
    }
}

fn out_neighbours(g: &Network, k: usize) -> Vec<usize> {
    g.row(k)
        .iter()
        .enumerate()
        .filter_map(|(j, &a)| (a == 1).then_some(j))
        .collect()
}

/// Integer sums behind agent `k`'s contribution to `γ̂`, per cell:
/// `Σ_{(i,j) in x} (G_kj, G_ki G_kj, G_ki + G_kj)` over off-diagonal pairs and
/// `Σ_{i != k, X_ik = x} G_ki`.
fn agent_sums(data: &Dataset, margins: &CellMargins, k: usize) -> Vec<[u64; 4]> {
    let g = data.network();
    let x = data.covariates();
    let jn = x.num_points();
    let nbrs = out_neighbours(g, k);
    let mut sums = vec![[0u64; 4]; jn];
    for &j in &nbrs {
        for c in 0..jn {
            // G_kj summed over pairs (i, j) of cell c.
            sums[c][1] += margins.col[j * jn + c];
            // G_ki summed over pairs (i, j') of cell c with i = j.
            sums[c][3] += margins.row[j * jn + c];
        }
        // Reciprocal term: pair (j, k) with G_kj.
        if j != k {
            sums[x.cell(j, k)][0] += 1;
        }
    }
    for &a in &nbrs {
        for &b in &nbrs {
            if a != b {
                sums[x.cell(a, b)][2] += 1;
            }
        }
    }
    // Slot 3 holds Σ G_ki rowcount; add Σ G_kj colcount to form G_ki + G_kj.
    for s in sums.iter_mut() {
        s[3] += s[1];
    }
    sums
}

/// Cell frequencies and observed belief statistics.
///
/// Fails with [`Error::EmptyCell`] if some support point has no pairs.
pub fn cell_estimates(data: &Dataset) -> Result<CellEstimates> {
    let margins = CellMargins::new(data.covariates());
    cell_estimates_with(data, &margins)
}

fn cell_estimates_with(data: &Dataset, margins: &CellMargins) -> Result<CellEstimates> {
    if let Some(c) = margins.counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyCell(c));
    }
    let n = data.n();
    let jn = data.num_cells();
    let g = data.network();
    let x = data.covariates();

    let totals = (0..n)
        .into_par_iter()
        .map(|k| agent_sums(data, margins, k))
        .reduce(
            || vec![[0u64; 4]; jn],
            |mut acc, s| {
                for (a, b) in acc.iter_mut().zip(s) {
                    for t in 0..4 {
                        a[t] += b[t];
                    }
                }
                acc
            },
        );
    let mut links = vec![0u64; jn];
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            links[x.cell(i, j)] += g.get(i, j) as u64;
        }
    }

    let pairs = data.num_pairs();
    let nf = n as f64;
    let mut est = CellEstimates {
        counts: margins.counts.iter().map(|&c| c as usize).collect(),
        p_hat: Vec::with_capacity(jn),
        gamma_hat: Vec::with_capacity(jn),
        link_rate: Vec::with_capacity(jn),
    };
    for c in 0..jn {
        let cnt = margins.counts[c] as f64;
        let t = totals[c];
        est.p_hat.push(cnt / pairs);
        est.gamma_hat.push([
            t[0] as f64 / cnt,
            t[1] as f64 / (nf * cnt),
            t[2] as f64 / (nf * cnt),
            t[3] as f64 / (nf * cnt),
        ]);
        est.link_rate.push(links[c] as f64 / cnt);
    }
    Ok(est)
}

/// Influence of agent `k` on `γ̂(x)` for every cell, given integer sums.
fn influence_from_sums(sums: &[[u64; 4]], counts: &[u64], n: usize) -> Vec<[f64; 4]> {
    let nf = n as f64;
    sums.iter()
        .zip(counts)
        .map(|(s, &cnt)| {
            let cnt = cnt as f64;
            // First term: average over pairs of the cell; second: agent k's
            // own reciprocal links, scaled so that the agents' influences
            // average to γ̂.
            [
                nf * s[0] as f64 / cnt,
                s[1] as f64 / cnt,
                s[2] as f64 / cnt,
                s[3] as f64 / cnt,
            ]
        })
        .collect()
}

/// Agent `k`'s influence term `ψ̂_{γ,k}(x_cell)` for the cell estimate `γ̂(x_cell)`.
///
/// Averaging over agents reproduces the estimate: `(1/n) Σ_k ψ̂_{γ,k}(x) = γ̂(x)`.
pub fn psi_gamma(data: &Dataset, k: usize, cell: usize, cells: &CellEstimates) -> Result<[f64; 4]> {
    if k >= data.n() {
        return Err(Error::InvalidInput(format!("agent {k} out of range")));
    }
    if cell >= data.num_cells() {
        return Err(Error::InvalidInput(format!("cell {cell} out of range")));
    }
    if cells.counts[cell] == 0 {
        return Err(Error::EmptyCell(cell));
    }
    let margins = CellMargins::new(data.covariates());
    let sums = agent_sums(data, &margins, k);
    Ok(influence_from_sums(&sums, &margins.counts, data.n())[cell])
}

fn check_theta(data: &Dataset, theta: &Theta) -> Result<CorrectionMaps> {
    if theta.b2.len() != data.support().dim() {
        return Err(Error::Dimension(format!(
            "b2 has length {}, covariate dimension is {}",
            theta.b2.len(),
            data.support().dim()
        )));
    }
    correction_maps(theta.r0, theta.r1)
}

/// Corrected single index `û(x) = (c + C γ̂(x))'b1 + x'b2` for each cell.
pub fn cell_indices(
    support: &CovariateSupport,
    gamma: &[[f64; 4]],
    theta: &Theta,
    maps: &CorrectionMaps,
) -> Vec<f64> {
    gamma
        .iter()
        .enumerate()
        .map(|(c, g)| dot(&maps.recover(g), &theta.b1) + dot(support.point(c), &theta.b2))
        .collect()
}

/// Precomputed, parameter-free pieces of the estimator for one dataset.
///
/// Evaluating the moment, variance and statistic at a new `θ` costs `O(nJ)`.
#[derive(Debug, Clone)]
pub struct Estimator<'a> {
    data: &'a Dataset,
    cells: CellEstimates,
    /// `influence[k * J + x]` = ψ̂_{γ,k}(x).
    influence: Vec<[f64; 4]>,
    /// `own[k * J + x]` = (1/(n-1)) Σ_{j != k} G_kj 1{X_kj = x}.
    own: Vec<f64>,
}

impl<'a> Estimator<'a> {
    pub fn new(data: &'a Dataset) -> Result<Self> {
        let margins = CellMargins::new(data.covariates());
        let cells = cell_estimates_with(data, &margins)?;
        Ok(Self::assemble(data, cells, &margins))
    }

    /// Uses externally supplied cell estimates in the parameter-dependent
    /// terms (the influence terms are always computed from `data`).
    pub fn with_cells(data: &'a Dataset, cells: CellEstimates) -> Result<Self> {
        if cells.counts.len() != data.num_cells() {
            return Err(Error::Dimension(
                "cell estimates do not match the support".into(),
            ));
        }
        let margins = CellMargins::new(data.covariates());
        if let Some(c) = margins.counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyCell(c));
        }
        Ok(Self::assemble(data, cells, &margins))
    }

    fn assemble(data: &'a Dataset, cells: CellEstimates, margins: &CellMargins) -> Self {
        let n = data.n();
        let jn = data.num_cells();
        let influence = (0..n)
            .into_par_iter()
            .flat_map_iter(|k| {
                influence_from_sums(&agent_sums(data, margins, k), &margins.counts, n)
            })
            .collect();
        let g = data.network();
        let x = data.covariates();
        let scale = 1.0 / (n as f64 - 1.0);
        let mut own = vec![0.0; n * jn];
        for k in 0..n {
            let mut links = vec![0u64; jn];
            for j in (0..n).filter(|&j| j != k) {
                links[x.cell(k, j)] += g.get(k, j) as u64;
            }
            for c in 0..jn {
                own[k * jn + c] = links[c] as f64 * scale;
            }
        }
        Self {
            data,
            cells,
            influence,
            own,
        }
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn cells(&self) -> &CellEstimates {
        &self.cells
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    /// ψ̂_{γ,k}(x) for every cell.
    pub fn gamma_influence(&self, k: usize) -> &[[f64; 4]] {
        let jn = self.data.num_cells();
        &self.influence[k * jn..(k + 1) * jn]
    }

    fn indices(&self, theta: &Theta, maps: &CorrectionMaps) -> Vec<f64> {
        cell_indices(self.data.support(), &self.cells.gamma_hat, theta, maps)
    }

    /// `m̂_n(θ)`: per cell, `p̂(x) (Ḡ(x) - r0 - (1-r0-r1) Φ(û(x)))`.
    pub fn moment(&self, theta: &Theta) -> Result<MomentVector> {
        let maps = check_theta(self.data, theta)?;
        let s = theta.signal();
        let idx = self.indices(theta, &maps);
        Ok(MomentVector(
            (0..self.data.num_cells())
                .map(|c| {
                    self.cells.p_hat[c]
                        * (self.cells.link_rate[c] - theta.r0 - s * normal::cdf(idx[c]))
                })
                .collect(),
        ))
    }

    /// Per-agent influence vectors `ψ̂_i(θ)`.
    pub fn psi(&self, theta: &Theta) -> Result<Vec<Vec<f64>>> {
        let maps = check_theta(self.data, theta)?;
        let s = theta.signal();
        let jn = self.data.num_cells();
        let idx = self.indices(theta, &maps);
        let slope = maps.weighted_slope(&theta.b1);
        let weight: Vec<f64> = (0..jn)
            .map(|c| s * self.cells.p_hat[c] * normal::pdf(idx[c]))
            .collect();
        Ok((0..self.n())
            .map(|i| {
                let infl = self.gamma_influence(i);
                (0..jn)
                    .map(|c| self.own[i * jn + c] - weight[c] * dot(&slope, &infl[c]))
                    .collect()
            })
            .collect())
    }

    /// `Ŝ(θ)` without the degeneracy check.
    pub fn variance_unchecked(&self, theta: &Theta) -> Result<VarianceMatrix> {
        let psi = self.psi(theta)?;
        Ok(VarianceMatrix(centered_second_moment(
            &psi,
            self.data.num_cells(),
        )))
    }

    /// `Ŝ(θ)`, failing with [`Error::DegenerateVariance`] when near-singular.
    pub fn variance(&self, theta: &Theta) -> Result<VarianceMatrix> {
        let v = self.variance_unchecked(theta)?;
        v.check()?;
        Ok(v)
    }

    /// `n m̂' Ŝ⁻¹ m̂`.
    pub fn test_stat(&self, theta: &Theta) -> Result<f64> {
        let m = self.moment(theta)?;
        let v = self.variance_unchecked(theta)?;
        quadratic_statistic(self.n(), &m, &v)
    }
}

/// `(1/n) Σ (ψ_i - ψ̄)(ψ_i - ψ̄)'`, algebraically equal to
/// `(1/n) Σ ψ_i ψ_i' - ψ̄ ψ̄'`.
fn centered_second_moment(psi: &[Vec<f64>], dim: usize) -> DMatrix<f64> {
    let nf = psi.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in psi {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= nf);
    let mut s = DMatrix::zeros(dim, dim);
    for p in psi {
        for a in 0..dim {
            let da = p[a] - mean[a];
            for b in 0..=a {
                s[(a, b)] += da * (p[b] - mean[b]);
            }
        }
    }
    for a in 0..dim {
        for b in 0..=a {
            let v = s[(a, b)] / nf;
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    s
}

/// `n m' S⁻¹ m` by a Cholesky solve, after checking that `S` is well conditioned.
pub fn quadratic_statistic(n: usize, m: &MomentVector, s: &VarianceMatrix) -> Result<f64> {
    if m.len() != s.0.nrows() {
        return Err(Error::Dimension(
            "moment and variance dimensions differ".into(),
        ));
    }
    s.check()?;
    let chol = s.0.clone().cholesky().ok_or(Error::DegenerateVariance {
        min_eigenvalue: s.min_eigenvalue(),
        condition: s.condition_number(),
    })?;
    let mv = DVector::from_column_slice(&m.0);
    let sol = chol.solve(&mv);
    Ok((n as f64 * mv.dot(&sol)).max(0.0))
}

/// Sample moment vector at `θ` using the supplied cell estimates.
pub fn moment(data: &Dataset, theta: &Theta, cells: &CellEstimates) -> Result<MomentVector> {
    Estimator::with_cells(data, cells.clone())?.moment(theta)
}

/// Per-agent influence vectors `ψ̂_i(θ)` using the supplied cell estimates.
pub fn psi_hat(data: &Dataset, theta: &Theta, cells: &CellEstimates) -> Result<Vec<Vec<f64>>> {
    Estimator::with_cells(data, cells.clone())?.psi(theta)
}

/// Variance estimate `Ŝ(θ)`; fails if its smallest eigenvalue is below
/// [`VARIANCE_FLOOR`].
pub fn variance_hat(
    data: &Dataset,
    theta: &Theta,
    cells: &CellEstimates,
) -> Result<VarianceMatrix> {
    Estimator::with_cells(data, cells.clone())?.variance(theta)
}

/// Test statistic `n m̂_n(θ)' Ŝ(θ)⁻¹ m̂_n(θ)`.
pub fn test_stat(data: &Dataset, theta: &Theta) -> Result<f64> {
    Estimator::new(data)?.test_stat(theta)
}
