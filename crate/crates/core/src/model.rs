//! Primitive types of the network-formation game and the link decision rule.
//!
//! Agents `0..n` choose directed links. Each ordered pair `(i, j)` carries a
//! discrete covariate `X_ij` drawn from a finite [`CovariateSupport`]; pairs
//! are mapped to support indices by [`PairCovariates`]. An agent links to `j`
//! when its utility index plus a private shock is non-negative.

use crate::error::{Error, Result};

/// The finite support `x_1, .., x_J` of the pair covariate, in strictly
/// increasing lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateSupport {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl CovariateSupport {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidInput("covariate support is empty".into()))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidInput(
                "covariate dimension must be positive".into(),
            ));
        }
        for (j, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Dimension(format!(
                    "support point {} has dimension {}, expected {dim}",
                    j + 1,
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "support point {} is not finite",
                    j + 1
                )));
            }
        }
        for (j, w) in points.windows(2).enumerate() {
            if lexicographic_cmp(&w[0], &w[1]) != std::cmp::Ordering::Less {
                return Err(Error::InvalidInput(format!(
                    "support points {} and {} are not in strictly increasing lexicographic order",
                    j + 1,
                    j + 2
                )));
            }
        }
        Ok(Self { points, dim })
    }

    /// Number of support points `J`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Covariate dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
}

fn lexicographic_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).expect("finite support points") {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

/// Assignment of every ordered pair `(i, j)` to a support index in `0..J`.
///
/// Diagonal entries are stored but never read by the model or the estimators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCovariates {
    n: usize,
    num_points: usize,
    cells: Vec<usize>,
}

impl PairCovariates {
    /// `cells` is row-major `n x n` with 0-based support indices.
    pub fn new(n: usize, num_points: usize, cells: Vec<usize>) -> Result<Self> {
        if cells.len() != n * n {
            return Err(Error::Dimension(format!(
                "pair covariates need {} entries for n={n}, got {}",
                n * n,
                cells.len()
            )));
        }
        if let Some(pos) = cells.iter().position(|&c| c >= num_points) {
            return Err(Error::InvalidInput(format!(
                "pair ({}, {}) refers to support index {} but J={num_points}",
                pos / n + 1,
                pos % n + 1,
                cells[pos] + 1
            )));
        }
        Ok(Self {
            n,
            num_points,
            cells,
        })
    }

    pub fn from_fn(n: usize, num_points: usize, f: impl Fn(usize, usize) -> usize) -> Result<Self> {
        let cells = (0..n * n).map(|k| f(k / n, k % n)).collect();
        Self::new(n, num_points, cells)
    }

    /// Circulant design: agent `i` has type `i mod J` and pair `(i, j)` falls
    /// in cell `(type_j - type_i) mod J`.
    ///
    /// When `J` divides `n` every agent sees the same number of pairs in each
    /// cell as sender and as receiver, so symmetric equilibrium beliefs depend
    /// on the pair only through its cell.
    pub fn circulant(n: usize, num_points: usize) -> Result<Self> {
        if num_points == 0 {
            return Err(Error::InvalidInput("circulant design needs J >= 1".into()));
        }
        Self::from_fn(n, num_points, |i, j| {
            (j % num_points + num_points - i % num_points) % num_points
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        self.cells[i * self.n + j]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// Number of off-diagonal pairs in each cell.
    pub fn cell_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_points];
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    counts[self.cell(i, j)] += 1;
                }
            }
        }
        counts
    }
}

/// Structural parameter `θ = (b1, b2, r0, r1)`.
///
/// `b1` weights the expected reciprocity, in-degree and common in-neighbour
/// statistics, `b2` the pair covariate; `r0` and `r1` are the false-positive
/// and false-negative link rates.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta {
    pub b1: [f64; 3],
    pub b2: Vec<f64>,
    pub r0: f64,
    pub r1: f64,
}

impl Theta {
    pub fn new(b1: [f64; 3], b2: Vec<f64>, r0: f64, r1: f64) -> Result<Self> {
        check_rates(r0, r1)?;
        if b1.iter().chain(&b2).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "preference weights must be finite".into(),
            ));
        }
        Ok(Self { b1, b2, r0, r1 })
    }

    /// `1 - r0 - r1`, the weight of the true link probability in the observed one.
    pub fn signal(&self) -> f64 {
        1.0 - self.r0 - self.r1
    }

    /// Coordinates in reporting order: `b1`, `b2`, `r0`, `r1`.
    pub fn coordinates(&self) -> Vec<f64> {
        let mut v = self.b1.to_vec();
        v.extend_from_slice(&self.b2);
        v.push(self.r0);
        v.push(self.r1);
        v
    }

    pub fn coordinate_names(dim: usize) -> Vec<String> {
        let mut names: Vec<String> = (1..=3).map(|k| format!("b1_{k}")).collect();
        names.extend((1..=dim).map(|k| format!("b2_{k}")));
        names.push("r0".into());
        names.push("r1".into());
        names
    }
}

pub(crate) fn check_rates(r0: f64, r1: f64) -> Result<()> {
    if r0.is_finite() && r1.is_finite() && r0 >= 0.0 && r1 >= 0.0 && r0 + r1 < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidRates { r0, r1 })
    }
}

/// Directed adjacency matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    n: usize,
    adj: Vec<u8>,
}

impl Network {
    pub fn new(n: usize, adj: Vec<u8>) -> Result<Self> {
        if adj.len() != n * n {
            return Err(Error::Dimension(format!(
                "adjacency matrix needs {} entries for n={n}, got {}",
                n * n,
                adj.len()
            )));
        }
        if let Some(pos) = adj.iter().position(|&a| a > 1) {
            return Err(Error::InvalidInput(format!(
                "entry ({}, {}) is {}, expected 0 or 1",
                pos / n + 1,
                pos % n + 1,
                adj[pos]
            )));
        }
        if let Some(i) = (0..n).find(|&i| adj[i * n + i] != 0) {
            return Err(Error::InvalidInput(format!("self-link at agent {}", i + 1)));
        }
        Ok(Self { n, adj })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            adj: vec![0; n * n],
        }
    }

    /// Complete directed network without self-links.
    pub fn complete(n: usize) -> Self {
        let adj = (0..n * n).map(|k| u8::from(k / n != k % n)).collect();
        Self { n, adj }
    }

    pub(crate) fn from_rows_unchecked(n: usize, adj: Vec<u8>) -> Self {
        debug_assert_eq!(adj.len(), n * n);
        Self { n, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.adj[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, link: bool) {
        assert!(i != j || !link, "self-links are not allowed");
        self.adj[i * self.n + j] = u8::from(link);
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.adj[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.adj
    }

    pub fn link_count(&self) -> usize {
        self.adj.iter().map(|&a| a as usize).sum()
    }

    /// In-degree of every agent.
    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for row in self.adj.chunks_exact(self.n) {
            for (d, &a) in deg.iter_mut().zip(row) {
                *d += a as usize;
            }
        }
        deg
    }
}

/// Belief statistics of a pair: the payoff-relevant expectations `γ*` and the
/// corresponding expectations `γ` on observed links.
///
/// `gamma_star` is (reciprocity, in-degree of the target, common
/// in-neighbours); `gamma_obs` repeats those on observed links and appends the
/// summed in-degree of both endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefStats {
    pub gamma_star: [f64; 3],
    pub gamma_obs: [f64; 4],
}

/// Utility index `γ*'b1 + x'b2`.
#[inline]
pub fn utility_index(gamma_star: &[f64; 3], x: &[f64], b1: &[f64; 3], b2: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), b2.len());
    dot(gamma_star, b1) + dot(x, b2)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Link rule: form the link iff `index + eps >= 0`.
#[inline]
pub fn decide_link(index: f64, eps: f64) -> bool {
    index + eps >= 0.0
}

/// Realised utility of agent `i` choosing links `choice` against the other
/// agents' links in `others` (row `i` of `others` is ignored).
///
/// Evaluates `(1/n) Σ_j g_ij [(G_ji, (1/n)Σ_{k≠i} G_kj, (1/n)Σ_{k≠i} G_ki G_kj, X_ij')β + ε_ij]`.
#[allow(clippy::too_many_arguments)]
pub fn total_utility(
    i: usize,
    choice: &[u8],
    others: &Network,
    covariates: &PairCovariates,
    support: &CovariateSupport,
    eps: &[f64],
    b1: &[f64; 3],
    b2: &[f64],
) -> f64 {
    let n = others.n();
    assert_eq!(choice.len(), n);
    assert_eq!(eps.len(), n);
    assert_eq!(choice[i], 0, "self-link in choice vector");
    let nf = n as f64;
    let mut total = 0.0;
    for j in (0..n).filter(|&j| choice[j] == 1) {
        let mut in_degree = 0.0;
        let mut common = 0.0;
        for k in (0..n).filter(|&k| k != i) {
            let gkj = others.get(k, j) as f64;
            in_degree += gkj;
            common += others.get(k, i) as f64 * gkj;
        }
        let stats = [others.get(j, i) as f64, in_degree / nf, common / nf];
        let x = support.point(covariates.cell(i, j));
        total += utility_index(&stats, x, b1, b2) + eps[j];
    }
    total / nf
}
