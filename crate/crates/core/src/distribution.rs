//! Result types shared by the analytic, chain and simulation paths.

use serde::{Deserialize, Serialize};

use crate::numeric::CompensatedSum;

/// Which reading of the per-slot service conditionals drives the age-state
/// transitions.
///
/// `Paper` applies `Pr{B > m | B > m-1}` from service age `m`, exactly as the
/// closed forms assume. `Natural` conditions on what the entry path already
/// guarantees and uses `Pr{B > m+1 | B > m}`. Both coincide for geometric
/// service.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelConvention {
    #[default]
    Paper,
    Natural,
}

impl std::fmt::Display for KernelConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Paper => "paper",
            Self::Natural => "natural",
        })
    }
}

impl std::str::FromStr for KernelConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(Self::Paper),
            "natural" => Ok(Self::Natural),
            other => Err(format!("unknown kernel convention '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Chain,
    Empirical,
}

/// Stationary probabilities `pi(n, m)` over age-states `1 <= n <= n_max`,
/// `0 <= m < n`, stored row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct JointStateTable {
    n_max: usize,
    values: Vec<f64>,
    tail: f64,
}

#[inline]
fn row_offset(n: usize) -> usize {
    n * (n - 1) / 2
}

impl JointStateTable {
    pub(crate) fn with_capacity(n_max: usize) -> Self {
        Self {
            n_max: 0,
            values: Vec::with_capacity(row_offset(n_max + 1)),
            tail: 0.0,
        }
    }

    /// Appends row `n = n_max + 1`; `row.len()` must equal that `n`.
    pub(crate) fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.n_max + 1);
        self.values.extend_from_slice(row);
        self.n_max += 1;
    }

    pub(crate) fn set_tail(&mut self, tail: f64) {
        self.tail = tail;
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Probability mass outside the stored rows.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// `pi(n, m)`; zero outside the state space or beyond `n_max`.
    pub fn get(&self, n: usize, m: usize) -> f64 {
        if n == 0 || m >= n || n > self.n_max {
            return 0.0;
        }
        self.values[row_offset(n) + m]
    }

    /// Row `n` as `[pi(n,0), ..., pi(n,n-1)]`.
    pub fn row(&self, n: usize) -> &[f64] {
        assert!(n >= 1 && n <= self.n_max, "row {n} outside 1..={}", self.n_max);
        &self.values[row_offset(n)..row_offset(n + 1)]
    }

    pub fn total(&self) -> f64 {
        crate::numeric::compensated_sum(self.values.iter().copied())
    }

    /// Iterates `((n, m), pi)` in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        (1..=self.n_max).flat_map(move |n| {
            self.row(n)
                .iter()
                .enumerate()
                .map(move |(m, &v)| ((n, m), v))
        })
    }
}

/// Stationary AoI distribution `Pr{Delta = n}` for `n = 1..=n_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AoiDistribution {
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    mean: f64,
    tail: f64,
    provenance: Provenance,
}

impl AoiDistribution {
    /// `pmf[i]` is `Pr{Delta = i + 1}`; `tail` is the mass beyond the last entry.
    pub fn from_pmf(pmf: Vec<f64>, tail: f64, provenance: Provenance) -> Self {
        let mut acc = CompensatedSum::new();
        let cdf = pmf
            .iter()
            .map(|&x| {
                acc.add(x);
                acc.value()
            })
            .collect();
        let mean = crate::numeric::compensated_sum(
            pmf.iter().enumerate().map(|(i, &x)| (i + 1) as f64 * x),
        );
        Self {
            pmf,
            cdf,
            mean,
            tail,
            provenance,
        }
    }

    /// Row sums of a joint table.
    pub fn from_table(table: &JointStateTable, provenance: Provenance) -> Self {
        let pmf = (1..=table.n_max())
            .map(|n| crate::numeric::compensated_sum(table.row(n).iter().copied()))
            .collect();
        Self::from_pmf(pmf, table.tail(), provenance)
    }

    pub fn n_max(&self) -> usize {
        self.pmf.len()
    }

    /// `Pr{Delta = n}`; zero outside `1..=n_max`.
    pub fn pmf(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        self.pmf.get(n - 1).copied().unwrap_or(0.0)
    }

    /// `Pr{Delta <= k}`, saturating at the last stored value.
    pub fn cdf(&self, k: usize) -> f64 {
        match k {
            0 => 0.0,
            k => self.cdf[(k - 1).min(self.cdf.len() - 1)],
        }
    }

    pub fn pmf_values(&self) -> &[f64] {
        &self.pmf
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }

    /// `sum n * Pr{Delta = n}` over the stored support.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Smallest `k` with `Pr{Delta <= k} >= level`.
    pub fn quantile(&self, level: f64) -> Option<usize> {
        self.cdf.iter().position(|&c| c >= level).map(|i| i + 1)
    }

    /// `(n, Pr{Delta = n})` at the mode.
    pub fn peak(&self) -> (usize, f64) {
        self.pmf
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &x)| {
                if x > best.1 {
                    (i + 1, x)
                } else {
                    best
                }
            })
    }

    pub fn total_variation(&self, other: &AoiDistribution) -> f64 {
        crate::numeric::total_variation(&self.pmf, &other.pmf)
    }

    /// Largest pointwise `|pmf - other.pmf|`.
    pub fn max_abs_diff(&self, other: &AoiDistribution) -> f64 {
        let len = self.n_max().max(other.n_max());
        (1..=len)
            .map(|n| (self.pmf(n) - other.pmf(n)).abs())
            .fold(0.0, f64::max)
    }
}
