//! Discrete service-time distributions on `{1, 2, ...}`.
//!
//! A [`ServiceDistribution`] answers the handful of queries the rest of the
//! crate needs: point masses `q_j`, the survival function `Pr{B > m}`, the
//! mean, and the per-slot conditionals used by the age-state transitions.
//! Geometric and deterministic services are evaluated in closed form; table
//! services are normalized once on construction and keep suffix sums so that
//! every survival query is a lookup.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AoiError, Result};

/// Default tolerance on missing mass for table distributions.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

/// JSON descriptor, e.g. `{"kind":"geometric","gamma":0.5}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ServiceDescriptor {
    Geometric { gamma: f64 },
    Deterministic { k: usize },
    Table { pmf: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Geometric {
        gamma: f64,
    },
    Deterministic {
        k: usize,
    },
    Table {
        /// Normalized `q_1..q_J`, trailing zeros trimmed.
        pmf: Vec<f64>,
        /// `survival[m] = Pr{B > m}` for `m = 0..=J`.
        survival: Vec<f64>,
        /// Mass missing from the input before normalization.
        residual: f64,
    },
}

/// Service time `B` with `Pr{B = j} = q_j`, `j >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ServiceDescriptor", into = "ServiceDescriptor")]
pub struct ServiceDistribution {
    kind: Kind,
}

impl ServiceDistribution {
    pub fn geometric(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(AoiError::InvalidParameter(format!(
                "geometric gamma must lie in (0, 1), got {gamma}"
            )));
        }
        Ok(Self {
            kind: Kind::Geometric { gamma },
        })
    }

    pub fn deterministic(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(AoiError::InvalidParameter(
                "deterministic service needs k >= 1".into(),
            ));
        }
        Ok(Self {
            kind: Kind::Deterministic { k },
        })
    }

    /// Table distribution from `[q_1, q_2, ...]` with the default tail tolerance.
    pub fn table(pmf: Vec<f64>) -> Result<Self> {
        Self::table_with_tolerance(pmf, DEFAULT_TAIL_TOLERANCE)
    }

    /// Table distribution whose mass must lie in `[1 - tail_tol, 1]`. The
    /// accepted pmf is renormalized and the missing mass is kept as
    /// [`residual`](Self::residual).
    pub fn table_with_tolerance(mut pmf: Vec<f64>, tail_tol: f64) -> Result<Self> {
        if let Some(bad) = pmf.iter().find(|q| !q.is_finite() || **q < 0.0) {
            return Err(AoiError::InvalidParameter(format!(
                "table pmf entries must be finite and nonnegative, got {bad}"
            )));
        }
        while pmf.last() == Some(&0.0) {
            pmf.pop();
        }
        let total = crate::numeric::compensated_sum(pmf.iter().copied());
        if pmf.is_empty() || total < 1.0 - tail_tol || total > 1.0 + tail_tol {
            return Err(AoiError::InvalidParameter(format!(
                "table pmf sums to {total}, outside [1 - {tail_tol:e}, 1]"
            )));
        }
        for q in &mut pmf {
            *q /= total;
        }
        let mut survival = vec![0.0; pmf.len() + 1];
        for m in (0..pmf.len()).rev() {
            survival[m] = survival[m + 1] + pmf[m];
        }
        survival[0] = 1.0;
        Ok(Self {
            kind: Kind::Table {
                pmf,
                survival,
                residual: (1.0 - total).max(0.0),
            },
        })
    }

    pub fn from_descriptor(desc: ServiceDescriptor) -> Result<Self> {
        match desc {
            ServiceDescriptor::Geometric { gamma } => Self::geometric(gamma),
            ServiceDescriptor::Deterministic { k } => Self::deterministic(k),
            ServiceDescriptor::Table { pmf } => Self::table(pmf),
        }
    }

    pub fn descriptor(&self) -> ServiceDescriptor {
        match &self.kind {
            Kind::Geometric { gamma } => ServiceDescriptor::Geometric { gamma: *gamma },
            Kind::Deterministic { k } => ServiceDescriptor::Deterministic { k: *k },
            Kind::Table { pmf, .. } => ServiceDescriptor::Table { pmf: pmf.clone() },
        }
    }

    /// `Some(gamma)` for geometric service.
    pub fn geometric_rate(&self) -> Option<f64> {
        match self.kind {
            Kind::Geometric { gamma } => Some(gamma),
            _ => None,
        }
    }

    /// Largest `j` with `q_j > 0`, or `None` for unbounded support.
    pub fn support_max(&self) -> Option<usize> {
        match &self.kind {
            Kind::Geometric { .. } => None,
            Kind::Deterministic { k } => Some(*k),
            Kind::Table { pmf, .. } => Some(pmf.len()),
        }
    }

    /// Mass dropped from a table input before normalization (zero otherwise).
    pub fn residual(&self) -> f64 {
        match &self.kind {
            Kind::Table { residual, .. } => *residual,
            _ => 0.0,
        }
    }

    /// `q_j = Pr{B = j}`; zero for `j = 0`.
    pub fn pmf(&self, j: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Geometric { gamma } => (1.0 - gamma).powi((j - 1) as i32) * gamma,
            Kind::Deterministic { k } => {
                if j == *k {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Table { pmf, .. } => pmf.get(j - 1).copied().unwrap_or(0.0),
        }
    }

    pub fn q1(&self) -> f64 {
        self.pmf(1)
    }

    /// `Pr{B > m}`.
    pub fn survival(&self, m: usize) -> f64 {
        match &self.kind {
            Kind::Geometric { gamma } => (1.0 - gamma).powi(m as i32),
            Kind::Deterministic { k } => {
                if m < *k {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Table { survival, .. } => survival.get(m).copied().unwrap_or(0.0),
        }
    }

    /// `E[B] = sum_{m >= 1} Pr{B >= m}`.
    pub fn mean(&self) -> f64 {
        match &self.kind {
            Kind::Geometric { gamma } => 1.0 / gamma,
            Kind::Deterministic { k } => *k as f64,
            Kind::Table { survival, .. } => {
                crate::numeric::compensated_sum(survival[..survival.len() - 1].iter().copied())
            }
        }
    }

    /// `Pr{B > m | B > m - 1}` for `m >= 1`.
    pub fn cond_continue(&self, m: usize) -> Result<f64> {
        if m == 0 {
            return Err(AoiError::InvalidParameter(
                "conditional service probabilities need m >= 1".into(),
            ));
        }
        let prev = self.survival(m - 1);
        if prev <= 0.0 {
            return Err(AoiError::UnreachableAge { age: m });
        }
        Ok(match self.kind {
            Kind::Geometric { gamma } => 1.0 - gamma,
            _ => self.survival(m) / prev,
        })
    }

    /// `Pr{B = m | B > m - 1}` for `m >= 1`; always `1 - cond_continue(m)`.
    pub fn cond_finish(&self, m: usize) -> Result<f64> {
        let cont = self.cond_continue(m)?;
        Ok(match self.kind {
            Kind::Geometric { gamma } => gamma,
            _ => 1.0 - cont,
        })
    }

    /// Builds a sampler that draws whole service times.
    pub fn sampler(&self) -> ServiceSampler {
        let inner = match &self.kind {
            Kind::Geometric { gamma } => SamplerKind::Geometric(
                rand_distr::Geometric::new(*gamma).expect("gamma validated on construction"),
            ),
            Kind::Deterministic { k } => SamplerKind::Constant(*k as u64),
            Kind::Table { pmf, .. } => SamplerKind::Table(
                WeightedIndex::new(pmf.iter().copied()).expect("table validated on construction"),
            ),
        };
        ServiceSampler { inner }
    }
}

impl TryFrom<ServiceDescriptor> for ServiceDistribution {
    type Error = AoiError;

    fn try_from(desc: ServiceDescriptor) -> Result<Self> {
        Self::from_descriptor(desc)
    }
}

impl From<ServiceDistribution> for ServiceDescriptor {
    fn from(d: ServiceDistribution) -> Self {
        d.descriptor()
    }
}

impl std::fmt::Display for ServiceDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            Kind::Geometric { gamma } => write!(f, "Geometric({gamma})"),
            Kind::Deterministic { k } => write!(f, "Deterministic({k})"),
            Kind::Table { pmf, .. } => write!(f, "Table(J={})", pmf.len()),
        }
    }
}

#[derive(Clone, Debug)]
enum SamplerKind {
    Geometric(rand_distr::Geometric),
    Constant(u64),
    Table(WeightedIndex<f64>),
}

/// Draws whole service times `B >= 1`.
#[derive(Clone, Debug)]
pub struct ServiceSampler {
    inner: SamplerKind,
}

impl ServiceSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.inner {
            // rand_distr counts failures before the first success
            SamplerKind::Geometric(g) => 1 + g.sample(rng),
            SamplerKind::Constant(k) => *k,
            SamplerKind::Table(w) => 1 + w.sample(rng) as u64,
        }
    }
}
