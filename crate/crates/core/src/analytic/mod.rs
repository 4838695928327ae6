//! Closed-form stationary analysis of the Ber/G/1/1 age process.
//!
//! The general path evaluates the age-state probabilities
//!
//! ```text
//! pi(n, 0) = p * G(p, n) / D
//! pi(n, m) = p^2 (1 - q_1) G(p, n - m) Pr{B > m - 1} / D      (n > m >= 1)
//! D        = 1 + p (1 - q_1) E[B]
//! ```
//!
//! where `G(p, n) = q_1 F(p, n)` is the rescaled polynomial. Working with `G`
//! instead of `F` keeps every expression finite when `q_1 = 0`; the `1 / q_1`
//! factor inside `F` is never formed. The geometric special case lives in
//! [`geo`].

pub mod geo;

use serde::{Deserialize, Serialize};

use crate::distribution::{AoiDistribution, JointStateTable, KernelConvention, Provenance};
use crate::error::{AoiError, Result};
use crate::numeric::CompensatedSum;
use crate::service::ServiceDistribution;

pub use geo::{
    aoi_cdf_geo, aoi_distribution_geo, aoi_pmf_geo, aoi_tail_geo, mean_aoi_geo, mean_aoi_mm11,
    stationary_geo, DEGENERACY_EPS,
};

/// Default tail-mass tolerance for truncated distributions.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Row limit when the horizon is chosen automatically.
pub const AUTO_N_MAX_CAP: usize = 4096;

/// Parameters of a Ber/G/1/1 status-update system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Per-slot arrival probability.
    pub p: f64,
    pub service: ServiceDistribution,
    /// Truncation horizon; `None` grows the table until the tail drops below `tol`.
    pub n_max: Option<usize>,
    pub tol: f64,
    pub kernel: KernelConvention,
}

impl SystemParams {
    pub fn new(p: f64, service: ServiceDistribution) -> Result<Self> {
        let params = Self {
            p,
            service,
            n_max: None,
            tol: DEFAULT_TOL,
            kernel: KernelConvention::Paper,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = Some(n_max);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_kernel(mut self, kernel: KernelConvention) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(AoiError::InvalidParameter(format!(
                "arrival probability p must lie in (0, 1), got {}",
                self.p
            )));
        }
        if self.n_max == Some(0) {
            return Err(AoiError::InvalidParameter("n_max must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(AoiError::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }

    /// Discrete traffic intensity `p / gamma` for geometric service.
    pub fn rho_d(&self) -> Option<f64> {
        self.service.geometric_rate().map(|g| self.p / g)
    }

    fn require_paper_kernel(&self) -> Result<()> {
        match self.kernel {
            KernelConvention::Paper => Ok(()),
            KernelConvention::Natural => Err(AoiError::InvalidParameter(
                "closed forms describe the paper kernel; solve the natural kernel with the chain module"
                    .into(),
            )),
        }
    }
}

/// `F(p, n)` by the one-step recursion `F(n) = (1-p) F(n-1) + (1-q_1)/q_1 * q_{n-1}`.
pub fn f_poly(p: f64, service: &ServiceDistribution, n: usize) -> Result<f64> {
    Ok(*f_poly_seq(p, service, n)?.last().unwrap_or(&1.0))
}

/// `[F(p, 1), ..., F(p, len)]`.
pub fn f_poly_seq(p: f64, service: &ServiceDistribution, len: usize) -> Result<Vec<f64>> {
    let q1 = service.q1();
    if q1 <= 0.0 {
        return Err(AoiError::ZeroFirstMass);
    }
    if len == 0 {
        return Err(AoiError::InvalidParameter("F(p, n) needs n >= 1".into()));
    }
    let ratio = (1.0 - q1) / q1;
    let mut out = Vec::with_capacity(len);
    out.push(1.0);
    for n in 2..=len {
        out.push((1.0 - p) * out[n - 2] + ratio * service.pmf(n - 1));
    }
    Ok(out)
}

/// Rescaled `G(p, n) = q_1 F(p, n)`, defined for every service including `q_1 = 0`.
pub fn g_poly(p: f64, service: &ServiceDistribution, n: usize) -> f64 {
    g_poly_seq(p, service, n.max(1))[n.max(1) - 1]
}

/// `[G(p, 1), ..., G(p, len)]`.
pub fn g_poly_seq(p: f64, service: &ServiceDistribution, len: usize) -> Vec<f64> {
    let q1 = service.q1();
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    out.push(q1);
    for n in 2..=len {
        out.push((1.0 - p) * out[n - 2] + (1.0 - q1) * service.pmf(n - 1));
    }
    out
}

/// `D = 1 + p (1 - q_1) E[B]`; the double sum over the service tail collapses
/// to the mean by the tail-sum identity.
pub fn normalizer(p: f64, service: &ServiceDistribution) -> f64 {
    1.0 + p * (1.0 - service.q1()) * service.mean()
}

/// Incremental evaluator of the general-service table rows.
struct RowGenerator<'a> {
    p: f64,
    service: &'a ServiceDistribution,
    q1: f64,
    idle_factor: f64,
    busy_factor: f64,
    g: Vec<f64>,
    /// `survival[m - 1] = Pr{B > m - 1}`
    survival: Vec<f64>,
}

impl<'a> RowGenerator<'a> {
    fn new(p: f64, service: &'a ServiceDistribution) -> Self {
        let d = normalizer(p, service);
        let q1 = service.q1();
        Self {
            p,
            service,
            q1,
            idle_factor: p / d,
            busy_factor: p * p * (1.0 - q1) / d,
            g: Vec::new(),
            survival: Vec::new(),
        }
    }

    fn next_row(&mut self, row: &mut Vec<f64>) {
        let n = self.g.len() + 1;
        let g_n = match n {
            1 => self.q1,
            _ => (1.0 - self.p) * self.g[n - 2] + (1.0 - self.q1) * self.service.pmf(n - 1),
        };
        self.g.push(g_n);
        self.survival.push(self.service.survival(n - 1));

        row.clear();
        row.push(self.idle_factor * g_n);
        for m in 1..n {
            row.push(self.busy_factor * self.g[n - m - 1] * self.survival[m - 1]);
        }
    }
}

/// Joint stationary table `pi(n, m)` for the paper kernel.
///
/// With `n_max = None` rows are added until the uncaptured mass is at most
/// `tol` (capped at [`AUTO_N_MAX_CAP`]). A fixed horizon whose tail exceeds
/// `tol` is rejected.
pub fn stationary_general(params: &SystemParams) -> Result<JointStateTable> {
    params.validate()?;
    params.require_paper_kernel()?;

    let limit = params.n_max.unwrap_or(AUTO_N_MAX_CAP);
    let mut gen = RowGenerator::new(params.p, &params.service);
    let mut table = JointStateTable::with_capacity(params.n_max.unwrap_or(256));
    let mut row = Vec::with_capacity(limit);
    let mut mass = CompensatedSum::new();

    for _ in 0..limit {
        gen.next_row(&mut row);
        mass.extend(row.iter().copied());
        table.push_row(&row);
        if params.n_max.is_none() && 1.0 - mass.value() <= params.tol {
            break;
        }
    }

    let tail = (1.0 - mass.value()).max(0.0);
    if tail > params.tol {
        return Err(AoiError::TailTooLarge {
            tail,
            tol: params.tol,
            n_max: table.n_max(),
        });
    }
    table.set_tail(tail);
    Ok(table)
}

/// `Pr{Delta = n}` as row sums of [`stationary_general`].
pub fn aoi_pmf_general(params: &SystemParams) -> Result<AoiDistribution> {
    let table = stationary_general(params)?;
    Ok(AoiDistribution::from_table(&table, Provenance::Analytic))
}

/// Marginal law of the service-age component `M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServiceAgeMarginal {
    /// `pmf[m - 1] = Pr{M = m}` for `m = 1..=m_max`.
    pub pmf: Vec<f64>,
    /// `Pr{system is not idle} = 1 - sum_n pi(n, 0)`.
    pub busy: f64,
}

impl ServiceAgeMarginal {
    /// `Pr{M = m} / Pr{busy}`.
    pub fn conditional(&self, m: usize) -> f64 {
        match m {
            0 => 0.0,
            m => self.pmf.get(m - 1).copied().unwrap_or(0.0) / self.busy,
        }
    }
}

/// `Pr{M = m} = sum_{n > m} pi(n, m)` for `m = 1..=m_max`, summed over the
/// full (untruncated) state space.
///
/// Every entry of column `m` factors as `pi(n - m, 0) p (1 - q_1) Pr{B > m - 1}`
/// and `sum_k pi(k, 0) = 1 / D`, so the column sum is exact.
pub fn service_age_marginal(params: &SystemParams, m_max: usize) -> Result<ServiceAgeMarginal> {
    params.validate()?;
    params.require_paper_kernel()?;
    let d = normalizer(params.p, &params.service);
    let scale = params.p * (1.0 - params.service.q1()) / d;
    let pmf = (1..=m_max)
        .map(|m| scale * params.service.survival(m - 1))
        .collect();
    let busy = params.p * (1.0 - params.service.q1()) * params.service.mean() / d;
    Ok(ServiceAgeMarginal { pmf, busy })
}

/// Column sums of a truncated table: `sum_{m < n <= n_max} pi(n, m)`, plus the
/// busy probability `1 - sum_n pi(n, 0)` over the same rows.
pub fn service_age_marginal_from_table(table: &JointStateTable, m_max: usize) -> ServiceAgeMarginal {
    let mut cols = vec![CompensatedSum::new(); m_max + 1];
    for ((_, m), v) in table.iter() {
        if m <= m_max {
            cols[m].add(v);
        }
    }
    let idle = cols[0].value();
    ServiceAgeMarginal {
        pmf: cols[1..].iter().map(CompensatedSum::value).collect(),
        busy: 1.0 - idle,
    }
}

/// Largest absolute residual when `table` is substituted into the stationary
/// equations of the paper kernel:
///
/// ```text
/// pi(n, m) = pi(n-1, m-1) Pr{B > m-1 | B > m-2}                   n > m >= 2
/// pi(n, 1) = pi(n-1, 0) p Pr{B > 1}                              n >= 2
/// pi(n, 0) = pi(n-1, 0)(1-p) + sum_k pi(k, n-1) Pr{B = n-1 | B > n-2}
/// pi(1, 0) = sum_k pi(k, 0) p Pr{B = 1}
/// ```
///
/// Infinite sums run over the stored rows only, so the result also carries
/// the truncation error (bounded by the table tail).
pub fn balance_residual(params: &SystemParams, table: &JointStateTable) -> f64 {
    let p = params.p;
    let service = &params.service;
    let n_max = table.n_max();

    let mut cols = vec![CompensatedSum::new(); n_max + 1];
    for ((_, m), v) in table.iter() {
        cols[m].add(v);
    }
    let col = |m: usize| cols[m].value();
    let cont = |m: usize| service.cond_continue(m).unwrap_or(0.0);
    let finish = |m: usize| service.cond_finish(m).unwrap_or(0.0);

    let mut worst: f64 = 0.0;
    for ((n, m), v) in table.iter() {
        let rhs = match (n, m) {
            (1, 0) => col(0) * p * service.q1(),
            (_, 0) => table.get(n - 1, 0) * (1.0 - p) + col(n - 1) * finish(n - 1),
            (_, 1) => table.get(n - 1, 0) * p * service.survival(1),
            _ => table.get(n - 1, m - 1) * cont(m - 1),
        };
        worst = worst.max((v - rhs).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo(gamma: f64) -> ServiceDistribution {
        ServiceDistribution::geometric(gamma).unwrap()
    }

    #[test]
    fn f_poly_examples() {
        let s = geo(0.5);
        assert_eq!(f_poly(0.25, &s, 1).unwrap(), 1.0);
        assert!((f_poly(0.25, &s, 2).unwrap() - 1.25).abs() < 1e-15);
        assert!((f_poly(0.25, &s, 3).unwrap() - 1.1875).abs() < 1e-15);
    }

    #[test]
    fn f_poly_rejects_zero_first_mass() {
        let d = ServiceDistribution::deterministic(2).unwrap();
        assert!(matches!(f_poly(0.25, &d, 3), Err(AoiError::ZeroFirstMass)));
    }

    #[test]
    fn f_poly_matches_direct_convolution() {
        let s = ServiceDistribution::table(vec![0.2, 0.3, 0.1, 0.4]).unwrap();
        let p = 0.3;
        let q1 = s.q1();
        let seq = f_poly_seq(p, &s, 12).unwrap();
        for n in 2..=12usize {
            let conv: f64 = (0..=n - 2)
                .map(|j| (1.0 - p).powi(j as i32) * s.pmf(n - 1 - j))
                .sum();
            let direct = (1.0 - p).powi(n as i32 - 1) + (1.0 - q1) / q1 * conv;
            assert!((seq[n - 1] - direct).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn g_poly_examples() {
        assert!((g_poly(0.25, &geo(0.5), 2) - 0.625).abs() < 1e-15);
        let d = ServiceDistribution::deterministic(2).unwrap();
        assert_eq!(g_poly(0.25, &d, 2), 0.0);
        assert_eq!(g_poly(0.25, &d, 3), 1.0);
        assert_eq!(g_poly(0.25, &d, 4), 0.75);
    }

    #[test]
    fn g_poly_is_continuous_as_q1_vanishes() {
        // Table with q_1 = eps approaches the q_1 = 0 table.
        let p = 0.4;
        let limit = ServiceDistribution::table(vec![0.0, 0.6, 0.4]).unwrap();
        let target = g_poly_seq(p, &limit, 10);
        let eps = 1e-9;
        let near = ServiceDistribution::table(vec![eps, 0.6 - eps, 0.4]).unwrap();
        let approx = g_poly_seq(p, &near, 10);
        for (a, b) in target.iter().zip(&approx) {
            assert!((a - b).abs() < 1e-8);
        }
        // and G = q_1 F wherever F exists
        let f = f_poly_seq(p, &near, 10).unwrap();
        for (g, f) in approx.iter().zip(&f) {
            assert!((g - eps * f).abs() < 1e-15);
        }
    }

    #[test]
    fn stationary_examples() {
        let params = SystemParams::new(0.25, geo(0.5)).unwrap();
        let t = stationary_general(&params).unwrap();
        assert!((t.get(1, 0) - 0.1).abs() < 1e-15);
        assert!((t.get(2, 0) - 0.125).abs() < 1e-15);
        assert!((t.get(2, 1) - 0.0125).abs() < 1e-15);
        assert_eq!(t.get(3, 3), 0.0);
        assert_eq!(t.get(3, 7), 0.0);
        assert!(t.tail() <= params.tol);
        assert!((t.total() + t.tail() - 1.0).abs() <= params.tol);
    }

    #[test]
    fn aoi_pmf_examples() {
        let params = SystemParams::new(0.25, geo(0.5)).unwrap();
        let d = aoi_pmf_general(&params).unwrap();
        assert!((d.pmf(1) - 0.1).abs() < 1e-15);
        assert!((d.pmf(2) - 0.1375).abs() < 1e-15);
        assert!((d.cdf(d.n_max()) - 1.0).abs() <= 1e-12);
        assert_eq!(d.provenance(), Provenance::Analytic);
        assert!((d.mean() - 5.4).abs() < 1e-9);
    }

    #[test]
    fn fixed_horizon_too_short_is_rejected() {
        let params = SystemParams::new(0.25, geo(0.5)).unwrap().with_n_max(10);
        assert!(matches!(
            stationary_general(&params),
            Err(AoiError::TailTooLarge { n_max: 10, .. })
        ));
    }

    #[test]
    fn natural_kernel_is_rejected() {
        let params = SystemParams::new(0.25, geo(0.5))
            .unwrap()
            .with_kernel(KernelConvention::Natural);
        assert!(stationary_general(&params).is_err());
    }

    #[test]
    fn invalid_params() {
        assert!(SystemParams::new(0.0, geo(0.5)).is_err());
        assert!(SystemParams::new(1.0, geo(0.5)).is_err());
        let bad = SystemParams::new(0.5, geo(0.5)).unwrap().with_tol(0.0);
        assert!(stationary_general(&bad).is_err());
    }

    #[test]
    fn general_path_accepts_p_above_gamma() {
        let params = SystemParams::new(0.8, geo(0.3)).unwrap();
        let d = aoi_pmf_general(&params).unwrap();
        assert!((d.cdf(d.n_max()) + d.tail() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn marginal_examples() {
        let params = SystemParams::new(0.25, geo(0.5)).unwrap();
        let m = service_age_marginal(&params, 5).unwrap();
        assert!((m.busy - 0.2).abs() < 1e-15);
        assert!((m.pmf[0] - 0.1).abs() < 1e-15);
        assert!((m.conditional(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn marginal_from_table_converges_to_exact() {
        let params = SystemParams::new(0.25, geo(0.5)).unwrap().with_n_max(400);
        let table = stationary_general(&params).unwrap();
        let exact = service_age_marginal(&params, 20).unwrap();
        let summed = service_age_marginal_from_table(&table, 20);
        assert!((exact.busy - summed.busy).abs() < 1e-14);
        for (a, b) in exact.pmf.iter().zip(&summed.pmf) {
            assert!((a - b).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn balance_residual_is_tiny_for_general_service() {
        for service in [
            geo(0.5),
            ServiceDistribution::deterministic(2).unwrap(),
            ServiceDistribution::deterministic(5).unwrap(),
            ServiceDistribution::table(vec![0.5, 0.0, 0.5]).unwrap(),
            ServiceDistribution::table(vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
        ] {
            let params = SystemParams::new(0.3, service).unwrap().with_tol(1e-14);
            let table = stationary_general(&params).unwrap();
            let r = balance_residual(&params, &table);
            assert!(r < 1e-12, "{}: residual {r:e}", params.service);
        }
    }

    #[test]
    fn deterministic_two_never_delivers_age_two() {
        let params = SystemParams::new(0.25, ServiceDistribution::deterministic(2).unwrap()).unwrap();
        let d = aoi_pmf_general(&params).unwrap();
        assert_eq!(d.pmf(1), 0.0);
        assert_eq!(d.pmf(2), 0.0);
        assert!(d.pmf(3) > 0.0);
    }
}
