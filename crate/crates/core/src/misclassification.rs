//! Link misclassification and the affine map between true and observed
//! belief statistics.
//!
//! An observed link differs from the true one with probability `r0` when the
//! true link is absent and `r1` when it is present, independently across
//! pairs. Expectations of the observed statistics are then an affine image of
//! the true ones,
//!
//! ```text
//! γ = (r0, r0, r0², r0)' + D(r0, r1) γ*_ext,
//! D = [ s  0  0   0   ]
//!     [ 0  s  0   0   ]
//!     [ 0  0  s²  r0 s]      s = 1 - r0 - r1
//!     [ 0  0  0   s   ]
//! ```
//!
//! and inverting `D` recovers the payoff-relevant statistics as
//! `γ* = c(r0, r1) + C(r0, r1) γ`. `D` is block upper-triangular, so its
//! inverse is written out in closed form.

use rand::Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::model::{check_rates, Network};
use crate::rng::row_rng;

/// Flips links of `gstar` independently: an absent link is observed with
/// probability `r0`, a present link is missed with probability `r1`.
/// The diagonal stays zero. Row `i` uses random stream `i` of `seed`.
pub fn apply_misclassification(gstar: &Network, r0: f64, r1: f64, seed: u64) -> Result<Network> {
    check_rates(r0, r1)?;
    let n = gstar.n();
    let adj: Vec<u8> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut rng = row_rng(seed, i);
            gstar
                .row(i)
                .iter()
                .enumerate()
                .map(|(j, &link)| {
                    if i == j {
                        return 0;
                    }
                    let u: f64 = rng.random();
                    match link {
                        0 => u8::from(u < r0),
                        _ => u8::from(u >= r1),
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(Network::from_rows_unchecked(n, adj))
}

/// Correction terms `c(r0, r1)` and `C(r0, r1)` with the forward matrix `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionMaps {
    pub r0: f64,
    pub r1: f64,
    /// Intercept `c = -[I_3 | 0] D⁻¹ (r0, r0, r0², r0)'`.
    pub c: [f64; 3],
    /// Slope `C = [I_3 | 0] D⁻¹`.
    pub big_c: [[f64; 4]; 3],
    /// Forward matrix `D`.
    pub d: [[f64; 4]; 4],
}

/// Offset `(r0, r0, r0², r0)'` of the forward map.
pub fn forward_offset(r0: f64) -> [f64; 4] {
    [r0, r0, r0 * r0, r0]
}

/// Forward matrix `D(r0, r1)`.
pub fn forward_matrix(r0: f64, r1: f64) -> [[f64; 4]; 4] {
    let s = 1.0 - r0 - r1;
    [
        [s, 0.0, 0.0, 0.0],
        [0.0, s, 0.0, 0.0],
        [0.0, 0.0, s * s, r0 * s],
        [0.0, 0.0, 0.0, s],
    ]
}

/// Builds `c` and `C` from the block inverse of `D`.
pub fn correction_maps(r0: f64, r1: f64) -> Result<CorrectionMaps> {
    check_rates(r0, r1)?;
    let s = 1.0 - r0 - r1;
    let inv_s = 1.0 / s;
    let inv_s2 = inv_s * inv_s;
    // Lower-right block [[s², r0 s], [0, s]] inverts to [[1/s², -r0/s²], [0, 1/s]].
    let big_c = [
        [inv_s, 0.0, 0.0, 0.0],
        [0.0, inv_s, 0.0, 0.0],
        [0.0, 0.0, inv_s2, -r0 * inv_s2],
    ];
    let offset = forward_offset(r0);
    let c = [
        -offset[0] * inv_s,
        -offset[1] * inv_s,
        // r0² / s² - r0 · r0 / s² cancels exactly.
        -(offset[2] * inv_s2 - r0 * offset[3] * inv_s2),
    ];
    Ok(CorrectionMaps {
        r0,
        r1,
        c,
        big_c,
        d: forward_matrix(r0, r1),
    })
}

impl CorrectionMaps {
    /// `c + C γ`.
    #[inline]
    pub fn recover(&self, gamma_obs: &[f64; 4]) -> [f64; 3] {
        std::array::from_fn(|r| {
            self.c[r]
                + self.big_c[r]
                    .iter()
                    .zip(gamma_obs)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
        })
    }

    /// `(r0, r0, r0², r0)' + D γ*_ext`.
    pub fn forward(&self, gamma_star_ext: &[f64; 4]) -> [f64; 4] {
        let offset = forward_offset(self.r0);
        std::array::from_fn(|r| {
            offset[r]
                + self.d[r]
                    .iter()
                    .zip(gamma_star_ext)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
        })
    }

    /// Row vector `b1' C`.
    pub fn weighted_slope(&self, b1: &[f64; 3]) -> [f64; 4] {
        std::array::from_fn(|col| (0..3).map(|r| b1[r] * self.big_c[r][col]).sum())
    }
}

/// True belief statistics `c + C γ` recovered from observed ones.
pub fn true_beliefs_from_observed(gamma_obs: &[f64; 4], r0: f64, r1: f64) -> Result<[f64; 3]> {
    Ok(correction_maps(r0, r1)?.recover(gamma_obs))
}

/// Observed belief statistics `(r0, r0, r0², r0)' + D γ*_ext` implied by true ones.
pub fn observed_beliefs_from_true(gamma_star_ext: &[f64; 4], r0: f64, r1: f64) -> Result<[f64; 4]> {
    Ok(correction_maps(r0, r1)?.forward(gamma_star_ext))
}
