//! Chi-squared distribution function and quantiles.

use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

/// `P(χ²_dof <= x)`.
pub fn chi2_cdf(dof: usize, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        gamma_lr(dof as f64 / 2.0, x / 2.0)
    }
}

fn chi2_pdf(dof: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = dof as f64 / 2.0;
    ((k - 1.0) * x.ln() - x / 2.0 - k * std::f64::consts::LN_2 - ln_gamma(k)).exp()
}

/// The `prob` quantile of `χ²_dof`, located by bracketing followed by
/// safeguarded Newton steps.
pub fn chi2_quantile(dof: usize, prob: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::InvalidInput(
            "chi-squared degrees of freedom must be positive".into(),
        ));
    }
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidInput(format!(
            "probability must lie in (0, 1), got {prob}"
        )));
    }
    let mut lo = 0.0;
    let mut hi = dof as f64;
    while chi2_cdf(dof, hi) < prob {
        lo = hi;
        hi *= 2.0;
    }
    let mut q = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = chi2_cdf(dof, q) - prob;
        if f.abs() <= 1e-13 {
            break;
        }
        if f < 0.0 {
            lo = q;
        } else {
            hi = q;
        }
        let d = chi2_pdf(dof, q);
        let newton = q - f / d;
        q = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(q)
}
