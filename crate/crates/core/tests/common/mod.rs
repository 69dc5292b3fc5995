//! Independent reference implementations used by the integration tests.
//!
//! Everything here is written with plain loops over agents and pairs, in the
//! most literal form of each formula, and shares no code with the library
//! beyond its data types and the normal distribution functions.

#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix4, Vector4};
use netform::model::{Network, PairCovariates, Theta};
use netform::normal;

pub fn g(net: &Network, i: usize, j: usize) -> f64 {
    net.get(i, j) as f64
}

pub struct BruteCells {
    pub p_hat: Vec<f64>,
    pub gamma_hat: Vec<[f64; 4]>,
    pub link_rate: Vec<f64>,
}

/// Cell frequencies and cell averages of the per-pair statistics over
/// ordered pairs `i != j`; inner sums over every `k`.
pub fn brute_cells(net: &Network, x: &PairCovariates, jn: usize) -> BruteCells {
    let n = net.n();
    let nf = n as f64;
    let pairs = nf * (nf - 1.0);
    let mut p_hat = vec![0.0; jn];
    let mut gamma_hat = vec![[0.0; 4]; jn];
    let mut link_rate = vec![0.0; jn];
    for c in 0..jn {
        let mut count = 0.0;
        let mut acc = [0.0; 4];
        let mut links = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j || x.cell(i, j) != c {
                    continue;
                }
                count += 1.0;
                links += g(net, i, j);
                acc[0] += g(net, j, i);
                for k in 0..n {
                    acc[1] += g(net, k, j) / nf;
                    acc[2] += g(net, k, i) * g(net, k, j) / nf;
                    acc[3] += (g(net, k, i) + g(net, k, j)) / nf;
                }
            }
        }
        p_hat[c] = count / pairs;
        gamma_hat[c] = acc.map(|a| a / count);
        link_rate[c] = links / count;
    }
    BruteCells {
        p_hat,
        gamma_hat,
        link_rate,
    }
}

/// `D(r0, r1)` inverted numerically, giving `(c, C)`.
pub fn numeric_correction(r0: f64, r1: f64) -> ([f64; 3], [[f64; 4]; 3]) {
    let s = 1.0 - r0 - r1;
    let d = Matrix4::new(
        s,
        0.0,
        0.0,
        0.0, //
        0.0,
        s,
        0.0,
        0.0, //
        0.0,
        0.0,
        s * s,
        r0 * s, //
        0.0,
        0.0,
        0.0,
        s,
    );
    let inv = d.try_inverse().expect("D is invertible");
    let c = -(inv * Vector4::new(r0, r0, r0 * r0, r0));
    (
        [c[0], c[1], c[2]],
        std::array::from_fn(|r| std::array::from_fn(|k| inv[(r, k)])),
    )
}

fn corrected_index(gamma: &[f64; 4], x: &[f64], theta: &Theta) -> f64 {
    let (c, cc) = numeric_correction(theta.r0, theta.r1);
    let mut u = 0.0;
    for r in 0..3 {
        let mut v = c[r];
        for k in 0..4 {
            v += cc[r][k] * gamma[k];
        }
        u += v * theta.b1[r];
    }
    u + x.iter().zip(&theta.b2).map(|(a, b)| a * b).sum::<f64>()
}

/// Moment vector as a sum over pairs.
pub fn brute_moment(
    net: &Network,
    x: &PairCovariates,
    support: &[Vec<f64>],
    theta: &Theta,
) -> Vec<f64> {
    let n = net.n();
    let jn = support.len();
    let cells = brute_cells(net, x, jn);
    let pairs = (n * (n - 1)) as f64;
    let s = 1.0 - theta.r0 - theta.r1;
    let mut m = vec![0.0; jn];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let c = x.cell(i, j);
            let u = corrected_index(&cells.gamma_hat[c], &support[c], theta);
            m[c] += (g(net, i, j) - theta.r0 - s * normal::cdf(u)) / pairs;
        }
    }
    m
}

/// Influence of agent `k` on `γ̂(x_c)`: an average over the pairs of the cell
/// plus agent `k`'s reciprocal links, the latter scaled by `n / count`.
pub fn brute_psi_gamma(net: &Network, x: &PairCovariates, k: usize, c: usize) -> [f64; 4] {
    let n = net.n();
    let mut count = 0.0;
    let mut first = [0.0; 4];
    for i1 in 0..n {
        for j1 in 0..n {
            if i1 == j1 || x.cell(i1, j1) != c {
                continue;
            }
            count += 1.0;
            first[1] += g(net, k, j1);
            first[2] += g(net, k, i1) * g(net, k, j1);
            first[3] += g(net, k, i1) + g(net, k, j1);
        }
    }
    let mut recip = 0.0;
    for i1 in 0..n {
        if i1 != k && x.cell(i1, k) == c {
            recip += g(net, k, i1);
        }
    }
    [
        n as f64 * recip / count,
        first[1] / count,
        first[2] / count,
        first[3] / count,
    ]
}

/// Per-agent influence vectors of the moment.
pub fn brute_psi(
    net: &Network,
    x: &PairCovariates,
    support: &[Vec<f64>],
    theta: &Theta,
) -> Vec<Vec<f64>> {
    let n = net.n();
    let jn = support.len();
    let cells = brute_cells(net, x, jn);
    let (_, cc) = numeric_correction(theta.r0, theta.r1);
    let s = 1.0 - theta.r0 - theta.r1;
    let pairs = (n * (n - 1)) as f64;
    (0..n)
        .map(|i| {
            let mut psi = vec![0.0; jn];
            for j in 0..n {
                if j != i {
                    psi[x.cell(i, j)] += g(net, i, j) * n as f64 / pairs;
                }
            }
            for l in 0..n {
                for j in 0..n {
                    if l == j {
                        continue;
                    }
                    let c = x.cell(l, j);
                    let u = corrected_index(&cells.gamma_hat[c], &support[c], theta);
                    let infl = brute_psi_gamma(net, x, i, c);
                    let mut slope = 0.0;
                    for r in 0..3 {
                        for k in 0..4 {
                            slope += theta.b1[r] * cc[r][k] * infl[k];
                        }
                    }
                    psi[c] -= s * normal::pdf(u) * slope / pairs;
                }
            }
            psi
        })
        .collect()
}

/// `(1/n)Σ ψψ' - ψ̄ψ̄'`.
pub fn brute_variance(
    net: &Network,
    x: &PairCovariates,
    support: &[Vec<f64>],
    theta: &Theta,
) -> DMatrix<f64> {
    let psi = brute_psi(net, x, support, theta);
    let n = psi.len() as f64;
    let jn = support.len();
    let mut second = DMatrix::<f64>::zeros(jn, jn);
    let mut mean = vec![0.0; jn];
    for p in &psi {
        for a in 0..jn {
            mean[a] += p[a] / n;
            for b in 0..jn {
                second[(a, b)] += p[a] * p[b] / n;
            }
        }
    }
    DMatrix::from_fn(jn, jn, |a, b| second[(a, b)] - mean[a] * mean[b])
}

/// `ln Γ(a)` by the Lanczos approximation (g = 7, 9 terms).
fn ln_gamma(a: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if a < 0.5 {
        return (std::f64::consts::PI / (std::f64::consts::PI * a).sin()).ln() - ln_gamma(1.0 - a);
    }
    let a = a - 1.0;
    let mut x = COEF[0];
    for (k, c) in COEF.iter().enumerate().skip(1) {
        x += c / (a + k as f64);
    }
    let t = a + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (a + 0.5) * t.ln() - t + x.ln()
}

/// Regularized lower incomplete gamma `P(a, x)`: power series below `a + 1`,
/// Lentz continued fraction for the upper tail above.
pub fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let prefactor = (a * x.ln() - x - ln_gamma(a)).exp();
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        sum * prefactor
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        1.0 - prefactor * h
    }
}

/// Bisection for the `prob` quantile of `χ²_dof`.
pub fn chi2_quantile_bisect(dof: usize, prob: f64) -> f64 {
    let cdf = |q: f64| reg_lower_gamma(dof as f64 / 2.0, q / 2.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    while cdf(hi) < prob {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Reference quantiles from an external statistics library:
/// `(dof, [q_0.90, q_0.95, q_0.99])`.
pub const CHI2_REFERENCE: [(usize, [f64; 3]); 4] = [
    (
        1,
        [2.705543454095404, 3.841458820694124, 6.6348966010212145],
    ),
    (2, [4.605170185988092, 5.991464547107979, 9.21034037197618]),
    (
        3,
        [6.251388631170325, 7.814727903251179, 11.344866730144373],
    ),
    (
        5,
        [9.236356899781123, 11.070497693516351, 15.08627246938899],
    ),
];

/// Expected observed statistics of pair `(i, j)` with the third agent ranging
/// over `k != i`, computed from true link probabilities `p` and independent
/// flips, including the terms that vanish because `G_jj = G_ii = 0`.
pub fn exact_observed_stats(p: &[f64], n: usize, i: usize, j: usize, r0: f64, r1: f64) -> [f64; 4] {
    let s = 1.0 - r0 - r1;
    let q = |a: usize, b: usize| if a == b { 0.0 } else { r0 + s * p[a * n + b] };
    let nf = n as f64;
    let mut out = [q(j, i), 0.0, 0.0, 0.0];
    for k in (0..n).filter(|&k| k != i) {
        out[1] += q(k, j) / nf;
        out[2] += q(k, i) * q(k, j) / nf;
        out[3] += (q(k, i) + q(k, j)) / nf;
    }
    out
}
