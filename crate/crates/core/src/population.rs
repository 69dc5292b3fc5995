//! Exact cell-level quantities implied by a known design.
//!
//! Given covariates, equilibrium beliefs and true parameters, these are the
//! probability limits of the sample cell estimates: cell frequencies, the
//! expected observed belief statistics and the expected observed link rates.

use crate::equilibrium::{extended_stats_from_beliefs, BeliefMatrix};
use crate::error::{Error, Result};
use crate::estimation::cell_indices;
use crate::misclassification::correction_maps;
use crate::model::{dot, CovariateSupport, PairCovariates, Theta};
use crate::normal;
use crate::semiparametric::CellSummary;

#[derive(Debug, Clone)]
pub struct PopulationCells {
    pub support: CovariateSupport,
    /// Share of off-diagonal pairs in each cell.
    pub cell_prob: Vec<f64>,
    /// Cell average of the extended true statistics `γ*_ext`.
    pub gamma_star_ext: Vec<[f64; 4]>,
    /// Cell average of the true link probabilities.
    pub true_link_prob: Vec<f64>,
    pub r0: f64,
    pub r1: f64,
}

impl PopulationCells {
    pub fn from_equilibrium(
        x: &PairCovariates,
        support: &CovariateSupport,
        p_eq: &BeliefMatrix,
        b1: &[f64; 3],
        b2: &[f64],
        r0: f64,
        r1: f64,
    ) -> Result<Self> {
        correction_maps(r0, r1)?;
        let n = x.n();
        let jn = support.len();
        if p_eq.n() != n || x.num_points() != jn || b2.len() != support.dim() {
            return Err(Error::Dimension("design components disagree".into()));
        }
        let stats = extended_stats_from_beliefs(p_eq);
        let mut counts = vec![0usize; jn];
        let mut gamma = vec![[0.0; 4]; jn];
        let mut prob = vec![0.0; jn];
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let c = x.cell(i, j);
                let s = stats[i * n + j];
                counts[c] += 1;
                for t in 0..4 {
                    gamma[c][t] += s[t];
                }
                let index = dot(&s[..3], b1) + dot(support.point(c), b2);
                prob[c] += normal::cdf(index);
            }
        }
        if let Some(c) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyCell(c));
        }
        let pairs = (n * (n - 1)) as f64;
        for c in 0..jn {
            let k = counts[c] as f64;
            gamma[c].iter_mut().for_each(|g| *g /= k);
            prob[c] /= k;
        }
        Ok(Self {
            support: support.clone(),
            cell_prob: counts.iter().map(|&k| k as f64 / pairs).collect(),
            gamma_star_ext: gamma,
            true_link_prob: prob,
            r0,
            r1,
        })
    }

    /// Expected observed statistics `γ(x)`, the forward image of `γ*_ext(x)`.
    pub fn observed_gamma(&self) -> Vec<[f64; 4]> {
        let maps = correction_maps(self.r0, self.r1).expect("rates validated at construction");
        self.gamma_star_ext
            .iter()
            .map(|g| maps.forward(g))
            .collect()
    }

    /// Expected observed link rate `r0 + (1 - r0 - r1) P(G* = 1 | x)`.
    pub fn observed_means(&self) -> Vec<f64> {
        let s = 1.0 - self.r0 - self.r1;
        self.true_link_prob
            .iter()
            .map(|p| self.r0 + s * p)
            .collect()
    }

    /// Population moment vector at `theta`.
    pub fn moment(&self, theta: &Theta) -> Result<Vec<f64>> {
        if theta.b2.len() != self.support.dim() {
            return Err(Error::Dimension(
                "b2 does not match the covariate dimension".into(),
            ));
        }
        let maps = correction_maps(theta.r0, theta.r1)?;
        let idx = cell_indices(&self.support, &self.observed_gamma(), theta, &maps);
        let s = theta.signal();
        Ok(self
            .observed_means()
            .iter()
            .zip(&idx)
            .zip(&self.cell_prob)
            .map(|((m, u), p)| p * (m - theta.r0 - s * normal::cdf(*u)))
            .collect())
    }

    pub fn cell_summary(&self) -> CellSummary {
        CellSummary {
            support: self.support.clone(),
            gamma: self.observed_gamma(),
            means: self.observed_means(),
        }
    }
}
