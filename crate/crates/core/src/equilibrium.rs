//! Symmetric equilibrium beliefs and simulation of true networks.
//!
//! Beliefs are held at pair level: `p_ij` is the equilibrium probability that
//! `i` links to `j` given the covariate profile. Shocks are independent across
//! all ordered pairs, so the expected common in-neighbour statistic factorises
//! into `Σ_k p_ki p_kj`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{decide_link, utility_index, CovariateSupport, Network, PairCovariates};
use crate::normal;
use crate::rng::row_rng;

/// Pairwise equilibrium link probabilities, zero on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefMatrix {
    n: usize,
    p: Vec<f64>,
}

impl BeliefMatrix {
    pub fn new(n: usize, p: Vec<f64>) -> Result<Self> {
        if p.len() != n * n {
            return Err(Error::Dimension(format!(
                "belief matrix needs {} entries for n={n}, got {}",
                n * n,
                p.len()
            )));
        }
        if let Some(pos) = p.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput(format!(
                "belief ({}, {}) = {} is not a probability",
                pos / n + 1,
                pos % n + 1,
                p[pos]
            )));
        }
        if let Some(i) = (0..n).find(|&i| p[i * n + i] != 0.0) {
            return Err(Error::InvalidInput(format!(
                "nonzero self-belief at agent {}",
                i + 1
            )));
        }
        Ok(Self { n, p })
    }

    /// Constant off-diagonal beliefs.
    pub fn uniform(n: usize, q: f64) -> Result<Self> {
        Self::new(
            n,
            (0..n * n)
                .map(|k| if k / n == k % n { 0.0 } else { q })
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    /// Sup-norm distance between two belief matrices of equal size.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Damped fixed-point iteration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Stop once the sup-norm residual `|BR(p) - p|` is at most `tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Step size in `(0, 1]`; 1 is plain best-response iteration.
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            damping: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "solver tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

/// A converged equilibrium together with its diagnostics.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub beliefs: BeliefMatrix,
    /// Sup-norm residual `|BR(p) - p|` at the returned beliefs.
    pub residual: f64,
    /// Number of best-response evaluations performed.
    pub iterations: usize,
}

fn column_sums(p: &BeliefMatrix) -> Vec<f64> {
    let n = p.n;
    let mut sums = vec![0.0; n];
    for row in p.p.chunks_exact(n) {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    sums
}

/// Row `i` of `P'P`, i.e. `Σ_k p_ki p_kj` for every `j`.
fn common_row(p: &BeliefMatrix, i: usize) -> Vec<f64> {
    let n = p.n;
    let mut out = vec![0.0; n];
    for k in 0..n {
        let pki = p.get(k, i);
        if pki == 0.0 {
            continue;
        }
        for (o, pkj) in out.iter_mut().zip(&p.p[k * n..(k + 1) * n]) {
            *o += pki * pkj;
        }
    }
    out
}

/// Expected network statistics `γ*_ij` implied by beliefs, row-major `n x n`.
///
/// Entry `(i, j)` is `(p_ji, (1/n)Σ_{k≠i} p_kj, (1/n)Σ_{k≠i} p_ki p_kj)`.
/// Diagonal entries are zero.
pub fn network_stats_from_beliefs(p: &BeliefMatrix) -> Vec<[f64; 3]> {
    extended_stats_from_beliefs(p)
        .into_iter()
        .map(|s| [s[0], s[1], s[2]])
        .collect()
}

/// `γ*` extended by the expected summed in-degree `(1/n)Σ_{k≠i}(p_ki + p_kj)`.
pub fn extended_stats_from_beliefs(p: &BeliefMatrix) -> Vec<[f64; 4]> {
    let n = p.n;
    let nf = n as f64;
    let colsum = column_sums(p);
    (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let common = common_row(p, i);
            let colsum = &colsum;
            (0..n).map(move |j| {
                if i == j {
                    return [0.0; 4];
                }
                let pij = p.get(i, j);
                [
                    p.get(j, i),
                    (colsum[j] - pij) / nf,
                    common[j] / nf,
                    (colsum[i] + colsum[j] - pij) / nf,
                ]
            })
        })
        .collect()
}

fn index_matrix(
    p: &BeliefMatrix,
    x: &PairCovariates,
    support: &CovariateSupport,
    b1: &[f64; 3],
    b2: &[f64],
) -> Vec<f64> {
    let n = p.n;
    let stats = network_stats_from_beliefs(p);
    (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            if i == j {
                f64::NEG_INFINITY
            } else {
                utility_index(&stats[k], support.point(x.cell(i, j)), b1, b2)
            }
        })
        .collect()
}

fn check_dims(n: usize, x: &PairCovariates, support: &CovariateSupport, b2: &[f64]) -> Result<()> {
    if x.n() != n {
        return Err(Error::Dimension(format!(
            "beliefs have n={n}, covariates n={}",
            x.n()
        )));
    }
    if x.num_points() != support.len() {
        return Err(Error::Dimension(format!(
            "covariates index {} support points, support has {}",
            x.num_points(),
            support.len()
        )));
    }
    if b2.len() != support.dim() {
        return Err(Error::Dimension(format!(
            "b2 has length {}, covariate dimension is {}",
            b2.len(),
            support.dim()
        )));
    }
    Ok(())
}

/// One best-response step: `p'_ij = Φ(γ*_ij(p)'b1 + X_ij'b2)` off the diagonal.
pub fn best_response(
    p: &BeliefMatrix,
    x: &PairCovariates,
    support: &CovariateSupport,
    b1: &[f64; 3],
    b2: &[f64],
) -> Result<BeliefMatrix> {
    check_dims(p.n, x, support, b2)?;
    let p = index_matrix(p, x, support, b1, b2)
        .into_iter()
        .map(normal::cdf)
        .collect();
    Ok(BeliefMatrix { n: x.n(), p })
}

/// Externality-free beliefs `Φ(X_ij'b2)`, the starting point of the iteration.
pub fn initial_beliefs(
    x: &PairCovariates,
    support: &CovariateSupport,
    b2: &[f64],
) -> Result<BeliefMatrix> {
    let n = x.n();
    check_dims(n, x, support, b2)?;
    let p = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            if i == j {
                0.0
            } else {
                normal::cdf(crate::model::dot(support.point(x.cell(i, j)), b2))
            }
        })
        .collect();
    Ok(BeliefMatrix { n, p })
}

/// Solves for symmetric equilibrium beliefs by damped best-response iteration
/// from [`initial_beliefs`].
///
/// Returns the first iterate whose residual is within `cfg.tol`.
pub fn solve_equilibrium(
    x: &PairCovariates,
    support: &CovariateSupport,
    b1: &[f64; 3],
    b2: &[f64],
    cfg: &SolverConfig,
) -> Result<Equilibrium> {
    cfg.validate()?;
    let mut p = initial_beliefs(x, support, b2)?;
    let mut residual = f64::INFINITY;
    for iteration in 1..=cfg.max_iter {
        let br = best_response(&p, x, support, b1, b2)?;
        residual = br.sup_distance(&p);
        if residual <= cfg.tol {
            return Ok(Equilibrium {
                beliefs: p,
                residual,
                iterations: iteration,
            });
        }
        if cfg.damping == 1.0 {
            p = br;
        } else {
            let d = cfg.damping;
            for (a, b) in p.p.iter_mut().zip(&br.p) {
                *a = (1.0 - d) * *a + d * b;
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        residual,
    })
}

/// Draws a true network: `G*_ij = 1{γ*_ij(p)'b1 + X_ij'b2 + ε_ij >= 0}` with
/// i.i.d. standard normal shocks. Row `i` uses random stream `i` of `seed`.
pub fn simulate_true_network(
    p_eq: &BeliefMatrix,
    x: &PairCovariates,
    support: &CovariateSupport,
    b1: &[f64; 3],
    b2: &[f64],
    seed: u64,
) -> Result<Network> {
    check_dims(p_eq.n, x, support, b2)?;
    let index = index_matrix(p_eq, x, support, b1, b2);
    Ok(simulate_from_index(p_eq.n, &index, seed))
}

/// Simulation from a precomputed row-major index matrix.
pub(crate) fn simulate_from_index(n: usize, index: &[f64], seed: u64) -> Network {
    let adj: Vec<u8> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = row_rng(seed, i);
            let row = &index[i * n..(i + 1) * n];
            (0..n)
                .map(|j| {
                    if i == j {
                        0
                    } else {
                        let eps: f64 = StandardNormal.sample(&mut rng);
                        u8::from(decide_link(row[j], eps))
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Network::from_rows_unchecked(n, adj)
}

/// Precomputes the utility index of every pair at fixed beliefs, for repeated
/// simulation from one equilibrium.
pub struct LinkSampler {
    n: usize,
    index: Vec<f64>,
}

impl LinkSampler {
    pub fn new(
        p_eq: &BeliefMatrix,
        x: &PairCovariates,
        support: &CovariateSupport,
        b1: &[f64; 3],
        b2: &[f64],
    ) -> Result<Self> {
        check_dims(p_eq.n, x, support, b2)?;
        Ok(Self {
            n: p_eq.n,
            index: index_matrix(p_eq, x, support, b1, b2),
        })
    }

    pub fn sample(&self, seed: u64) -> Network {
        simulate_from_index(self.n, &self.index, seed)
    }

    /// Link probability `Φ(index_ij)` of pair `(i, j)`.
    pub fn link_probability(&self, i: usize, j: usize) -> f64 {
        normal::cdf(self.index[i * self.n + j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::total_utility;

    fn binary_support() -> CovariateSupport {
        CovariateSupport::new(vec![vec![0.0], vec![1.0]]).unwrap()
    }

    fn random_covariates(n: usize, j: usize, seed: u64) -> PairCovariates {
        use rand::Rng;
        let mut rng = row_rng(seed, 0);
        let cells = (0..n * n).map(|_| rng.random_range(0..j)).collect();
        PairCovariates::new(n, j, cells).unwrap()
    }

    /// Direct summation over `k`, independent of the column-sum shortcut.
    fn stats_by_summation(p: &BeliefMatrix, i: usize, j: usize) -> [f64; 4] {
        let n = p.n();
        let nf = n as f64;
        let mut s = [p.get(j, i), 0.0, 0.0, 0.0];
        for k in (0..n).filter(|&k| k != i) {
            s[1] += p.get(k, j) / nf;
            s[2] += p.get(k, i) * p.get(k, j) / nf;
            s[3] += (p.get(k, i) + p.get(k, j)) / nf;
        }
        s
    }

    #[test]
    fn stats_of_zero_beliefs_vanish() {
        let p = BeliefMatrix::uniform(5, 0.0).unwrap();
        assert!(network_stats_from_beliefs(&p)
            .iter()
            .all(|s| *s == [0.0; 3]));
    }

    #[test]
    fn stats_of_uniform_beliefs() {
        for &(n, q) in &[(3usize, 0.4f64), (7, 0.25), (20, 0.8)] {
            let p = BeliefMatrix::uniform(n, q).unwrap();
            let stats = network_stats_from_beliefs(&p);
            let nf = n as f64;
            let expected = [q, (nf - 2.0) * q / nf, (nf - 2.0) * q * q / nf];
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    let s = stats[i * n + j];
                    for c in 0..3 {
                        assert!((s[c] - expected[c]).abs() < 1e-15, "n={n} component {c}");
                    }
                }
            }
        }
        let p = BeliefMatrix::uniform(3, 0.6).unwrap();
        let s = network_stats_from_beliefs(&p)[1];
        assert!((s[0] - 0.6).abs() < 1e-15);
        assert!((s[1] - 0.2).abs() < 1e-15);
        assert!((s[2] - 0.12).abs() < 1e-15);
    }

    #[test]
    fn extended_stats_match_direct_summation() {
        let x = random_covariates(9, 2, 3);
        let eq = solve_equilibrium(
            &x,
            &binary_support(),
            &[0.4, -0.6, 0.9],
            &[0.7],
            &SolverConfig::default(),
        )
        .unwrap();
        let p = &eq.beliefs;
        let ext = extended_stats_from_beliefs(p);
        for i in 0..9 {
            for j in (0..9).filter(|&j| j != i) {
                let direct = stats_by_summation(p, i, j);
                for c in 0..4 {
                    assert!((ext[i * 9 + j][c] - direct[c]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn best_response_examples() {
        let support = binary_support();
        let x = random_covariates(6, 2, 1);
        let p = BeliefMatrix::uniform(6, 0.3).unwrap();
        let br = best_response(&p, &x, &support, &[0.0; 3], &[0.0]).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(br.get(i, j), if i == j { 0.0 } else { 0.5 });
            }
        }
        let br = best_response(&p, &x, &support, &[0.0; 3], &[-1.2]).unwrap();
        let other = best_response(
            &BeliefMatrix::uniform(6, 0.9).unwrap(),
            &x,
            &support,
            &[0.0; 3],
            &[-1.2],
        )
        .unwrap();
        assert_eq!(br, other);
        for i in 0..6 {
            for j in (0..6).filter(|&j| j != i) {
                let expected = normal::cdf(-1.2 * x.cell(i, j) as f64);
                assert_eq!(br.get(i, j), expected);
            }
        }
        let br = best_response(&p, &x, &support, &[3.0, -2.0, 1.0], &[0.5]).unwrap();
        assert!((0..36)
            .filter(|k| k / 6 != k % 6)
            .all(|k| br.as_slice()[k] > 0.0 && br.as_slice()[k] < 1.0));
    }

    #[test]
    fn externality_free_solution_is_immediate() {
        let support = binary_support();
        let x = random_covariates(10, 2, 5);
        let eq =
            solve_equilibrium(&x, &support, &[0.0; 3], &[0.8], &SolverConfig::default()).unwrap();
        assert_eq!(eq.iterations, 1);
        assert_eq!(eq.residual, 0.0);
        assert_eq!(eq.beliefs, initial_beliefs(&x, &support, &[0.8]).unwrap());

        let eq =
            solve_equilibrium(&x, &support, &[0.0; 3], &[0.0], &SolverConfig::default()).unwrap();
        assert_eq!(eq.residual, 0.0);
        assert_eq!(eq.beliefs, BeliefMatrix::uniform(10, 0.5).unwrap());
    }

    #[test]
    fn moderate_externalities_converge() {
        let support = binary_support();
        let x = random_covariates(30, 2, 11);
        let b1 = [0.8, -0.9, 1.0];
        let eq = solve_equilibrium(&x, &support, &b1, &[-0.4], &SolverConfig::default()).unwrap();
        assert!(eq.residual <= 1e-10);
        let br = best_response(&eq.beliefs, &x, &support, &b1, &[-0.4]).unwrap();
        assert!(br.sup_distance(&eq.beliefs) <= 1e-10);
    }

    #[test]
    fn damping_reaches_the_same_fixed_point() {
        let support = binary_support();
        let x = random_covariates(15, 2, 2);
        let b1 = [0.5, 0.5, 0.5];
        let plain = solve_equilibrium(&x, &support, &b1, &[0.3], &SolverConfig::default()).unwrap();
        let cfg = SolverConfig {
            damping: 0.5,
            ..SolverConfig::default()
        };
        let damped = solve_equilibrium(&x, &support, &b1, &[0.3], &cfg).unwrap();
        assert!(plain.beliefs.sup_distance(&damped.beliefs) < 1e-9);
    }

    #[test]
    fn exhausting_iterations_reports_nonconvergence() {
        let support = binary_support();
        let x = random_covariates(8, 2, 4);
        let cfg = SolverConfig {
            max_iter: 2,
            ..SolverConfig::default()
        };
        match solve_equilibrium(&x, &support, &[1.0, 1.0, 1.0], &[0.2], &cfg) {
            Err(Error::NonConvergence {
                iterations,
                residual,
            }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-10);
            }
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn constant_covariate_gives_constant_beliefs() {
        let support = binary_support();
        let x = PairCovariates::from_fn(12, 2, |_, _| 1).unwrap();
        let cfg = SolverConfig::default();
        let eq = solve_equilibrium(&x, &support, &[0.7, -0.5, 0.9], &[-0.2], &cfg).unwrap();
        let q = eq.beliefs.get(0, 1);
        for i in 0..12 {
            for j in (0..12).filter(|&j| j != i) {
                assert!((eq.beliefs.get(i, j) - q).abs() <= 10.0 * cfg.tol);
            }
        }
    }

    #[test]
    fn relabeling_agents_permutes_beliefs() {
        let support = binary_support();
        let n = 9;
        let x = random_covariates(n, 2, 8);
        let perm: Vec<usize> = (0..n).map(|i| (i * 4 + 3) % n).collect();
        let xp = PairCovariates::from_fn(n, 2, |i, j| x.cell(perm[i], perm[j])).unwrap();
        for b1 in [[0.0; 3], [0.6, 0.4, -0.8]] {
            let a = solve_equilibrium(&x, &support, &b1, &[0.9], &SolverConfig::default()).unwrap();
            let b =
                solve_equilibrium(&xp, &support, &b1, &[0.9], &SolverConfig::default()).unwrap();
            for i in 0..n {
                for j in 0..n {
                    assert!((b.beliefs.get(i, j) - a.beliefs.get(perm[i], perm[j])).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn simulation_is_deterministic_and_respects_tails() {
        let support = binary_support();
        let x = random_covariates(20, 2, 9);
        let b2 = [0.0];
        let p = initial_beliefs(&x, &support, &b2).unwrap();
        let g1 = simulate_true_network(&p, &x, &support, &[0.0; 3], &b2, 77).unwrap();
        let g2 = simulate_true_network(&p, &x, &support, &[0.0; 3], &b2, 77).unwrap();
        let g3 = simulate_true_network(&p, &x, &support, &[0.0; 3], &b2, 78).unwrap();
        assert_eq!(g1, g2);
        assert_ne!(g1, g3);

        let x = PairCovariates::from_fn(40, 2, |_, _| 1).unwrap();
        let p = initial_beliefs(&x, &support, &[-8.0]).unwrap();
        let g = simulate_true_network(&p, &x, &support, &[0.0; 3], &[-8.0], 1).unwrap();
        assert_eq!(g.link_count(), 0);
    }

    #[test]
    fn zero_parameter_link_frequency_is_one_half() {
        let support = binary_support();
        let n = 100;
        let x = random_covariates(n, 2, 10);
        let p = BeliefMatrix::uniform(n, 0.5).unwrap();
        let g = simulate_true_network(&p, &x, &support, &[0.0; 3], &[0.0], 2024).unwrap();
        let pairs = (n * (n - 1)) as f64;
        let freq = g.link_count() as f64 / pairs;
        let se = (0.25 / pairs).sqrt();
        assert!((freq - 0.5).abs() <= 4.0 * se, "frequency {freq}");
    }

    #[test]
    fn componentwise_rule_maximises_expected_utility() {
        // Exact expectation over the other agents' independent links, for n <= 4.
        let support = binary_support();
        for (n, seed) in [(3usize, 1u64), (4, 2), (4, 3)] {
            let x = random_covariates(n, 2, seed);
            let b1 = [1.3, -2.0, 2.5];
            let b2 = [0.4];
            let eq = solve_equilibrium(&x, &support, &b1, &b2, &SolverConfig::default()).unwrap();
            let p = &eq.beliefs;
            let stats = network_stats_from_beliefs(p);
            let i = 0;
            let mut rng = row_rng(seed, 99);
            let eps: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();

            let free: Vec<(usize, usize)> = (1..n)
                .flat_map(|k| (0..n).filter(move |&j| j != k).map(move |j| (k, j)))
                .collect();
            let expected_utility = |choice: &[u8]| {
                let mut total = 0.0;
                for mask in 0u32..(1 << free.len()) {
                    let mut others = Network::empty(n);
                    let mut prob = 1.0;
                    for (bit, &(k, j)) in free.iter().enumerate() {
                        let on = mask >> bit & 1 == 1;
                        others.set(k, j, on);
                        prob *= if on { p.get(k, j) } else { 1.0 - p.get(k, j) };
                    }
                    total += prob * total_utility(i, choice, &others, &x, &support, &eps, &b1, &b2);
                }
                total
            };

            let mut best = (f64::NEG_INFINITY, vec![]);
            for mask in 0u32..(1 << (n - 1)) {
                let mut choice = vec![0u8; n];
                for j in 1..n {
                    choice[j] = (mask >> (j - 1) & 1) as u8;
                }
                let u = expected_utility(&choice);
                if u > best.0 {
                    best = (u, choice);
                }
            }
            let rule: Vec<u8> = (0..n)
                .map(|j| {
                    if j == i {
                        0
                    } else {
                        let idx =
                            utility_index(&stats[i * n + j], support.point(x.cell(i, j)), &b1, &b2);
                        u8::from(decide_link(idx, eps[j]))
                    }
                })
                .collect();
            assert_eq!(best.1, rule, "n={n}");
        }
    }
}
