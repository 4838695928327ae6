//! Explicit formulas for geometric service (Ber/Geo/1/1).
//!
//! All expressions carry a `(gamma - p)` denominator. Differences of powers
//! `(1-p)^n - (1-gamma)^n` go through [`pow_diff`] so the numerators keep
//! relative accuracy as `p` approaches `gamma`; below [`DEGENERACY_EPS`] the
//! closed forms are refused and callers should use the general path.

use crate::distribution::{AoiDistribution, Provenance};
use crate::error::{AoiError, Result};
use crate::numeric::pow_diff;

/// Minimum `gamma - p` accepted by the closed forms.
pub const DEGENERACY_EPS: f64 = 1e-9;

/// Horizon cap for [`aoi_distribution_geo`] in automatic mode.
const AUTO_CAP: usize = 1 << 22;

fn check(p: f64, gamma: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) || !(gamma > 0.0 && gamma < 1.0) {
        return Err(AoiError::InvalidParameter(format!(
            "need 0 < p < 1 and 0 < gamma < 1, got p = {p}, gamma = {gamma}"
        )));
    }
    if gamma - p <= DEGENERACY_EPS {
        return Err(AoiError::Degenerate { p, gamma });
    }
    Ok(())
}

/// `p + gamma - p*gamma`
fn busy_denominator(p: f64, gamma: f64) -> f64 {
    p + gamma - p * gamma
}

/// Stationary probability `pi(n, m)` of the age-state `(n, m)`.
pub fn stationary_geo(p: f64, gamma: f64, n: usize, m: usize) -> Result<f64> {
    check(p, gamma)?;
    if n == 0 || m >= n {
        return Ok(0.0);
    }
    let (a, b) = (1.0 - p, 1.0 - gamma);
    let denom = busy_denominator(p, gamma) * (gamma - p);
    let d = pow_diff(a, b, gamma - p, (n - m) as u32);
    Ok(if m == 0 {
        p * gamma * gamma * d / denom
    } else {
        // (1-p)^{n-m} (1-g)^m - (1-g)^n = (1-g)^m [(1-p)^{n-m} - (1-g)^{n-m}]
        (p * gamma).powi(2) * b.powi(m as i32) * d / denom
    })
}

/// `Pr{Delta = n}`.
pub fn aoi_pmf_geo(p: f64, gamma: f64, n: usize) -> Result<f64> {
    check(p, gamma)?;
    if n == 0 {
        return Ok(0.0);
    }
    let (a, b) = (1.0 - p, 1.0 - gamma);
    let k = busy_denominator(p, gamma);
    let gap = gamma - p;
    let d = pow_diff(a, b, gap, n as u32);
    Ok(p * a * gamma.powi(3) * d / (k * gap * gap)
        - (p * gamma).powi(2) * n as f64 * b.powi(n as i32) / (k * gap))
}

/// `Pr{Delta <= k}`.
pub fn aoi_cdf_geo(p: f64, gamma: f64, k: usize) -> Result<f64> {
    check(p, gamma)?;
    if k == 0 {
        return Ok(0.0);
    }
    let (a, b) = (1.0 - p, 1.0 - gamma);
    let kk = busy_denominator(p, gamma);
    let gap = gamma - p;
    let e = (k + 1) as i32;
    Ok(1.0 - a * gamma * gamma * (a.powi(e) * gamma - p * b.powi(e)) / (kk * gap * gap)
        + p * p * (1.0 + k as f64 * gamma) * b.powi(e) / (kk * gap))
}

/// `Pr{Delta > k}`, evaluated directly rather than as `1 - cdf`.
pub fn aoi_tail_geo(p: f64, gamma: f64, k: usize) -> Result<f64> {
    check(p, gamma)?;
    let (a, b) = (1.0 - p, 1.0 - gamma);
    let kk = busy_denominator(p, gamma);
    let gap = gamma - p;
    let e = (k + 1) as u32;
    // a^{e} g - p b^{e} = g (a^e - b^e) + (g - p) b^e
    let d = pow_diff(a, b, gap, e);
    let be = b.powi(e as i32);
    let tail = a * gamma.powi(3) * d / (kk * gap * gap)
        + (a * gamma * gamma - p * p * (1.0 + k as f64 * gamma)) * be / (kk * gap);
    Ok(tail.max(0.0))
}

/// Limiting time-average AoI,
/// `(1/gamma) ((1-gamma) + 1/rho + rho / (1/(1-gamma) + rho))` with `rho = p/gamma`.
pub fn mean_aoi_geo(p: f64, gamma: f64) -> Result<f64> {
    check(p, gamma)?;
    let rho = p / gamma;
    Ok(((1.0 - gamma) + 1.0 / rho + rho / (1.0 / (1.0 - gamma) + rho)) / gamma)
}

/// Average AoI of the continuous-time M/M/1/1 queue,
/// `(1/mu) (1 + 1/rho + rho / (1 + rho))` with `rho = lambda / mu`.
pub fn mean_aoi_mm11(lambda: f64, mu: f64) -> Result<f64> {
    if !(lambda > 0.0 && mu > 0.0) || !lambda.is_finite() || !mu.is_finite() {
        return Err(AoiError::InvalidParameter(format!(
            "rates must be positive, got lambda = {lambda}, mu = {mu}"
        )));
    }
    let rho = lambda / mu;
    Ok((1.0 + 1.0 / rho + rho / (1.0 + rho)) / mu)
}

/// Closed-form AoI distribution up to `n_max`, or up to the first horizon
/// whose tail is at most `tol` when `n_max` is `None`.
pub fn aoi_distribution_geo(
    p: f64,
    gamma: f64,
    n_max: Option<usize>,
    tol: f64,
) -> Result<AoiDistribution> {
    check(p, gamma)?;
    let horizon = match n_max {
        Some(0) => return Err(AoiError::InvalidParameter("n_max must be >= 1".into())),
        Some(n) => n,
        None => {
            let mut k = 1;
            while aoi_tail_geo(p, gamma, k)? > tol && k < AUTO_CAP {
                k += 1;
            }
            k
        }
    };
    let tail = aoi_tail_geo(p, gamma, horizon)?;
    if tail > tol {
        return Err(AoiError::TailTooLarge {
            tail,
            tol,
            n_max: horizon,
        });
    }
    let pmf = (1..=horizon)
        .map(|n| aoi_pmf_geo(p, gamma, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(AoiDistribution::from_pmf(pmf, tail, Provenance::Analytic))
}
