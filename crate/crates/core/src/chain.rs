//! Numerical oracle: the age-state chain on a truncated state space.
//!
//! States are `(n, m)` with `1 <= n <= N` and `0 <= m < n`, enumerated in
//! lexicographic order. Each state has at most three successors:
//!
//! * idle `(n, 0)`: no arrival `-> (n+1, 0)`, arrival served in one slot
//!   `-> (1, 0)`, arrival still in service `-> (n+1, 1)`;
//! * busy `(n, m)`: service continues `-> (n+1, m+1)` or completes
//!   `-> (m+1, 0)`.
//!
//! Transitions that would leave the space through `n = N + 1` are folded
//! back onto row `N` (`(N+1, m') -> (N, m')`, or a self-loop when `m' = N`),
//! so rows stay stochastic and the mass piled on the boundary row is reported
//! instead of hidden. Unreachable states (those needing `Pr{B > m - 1} = 0`
//! to be entered) are pruned.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analytic::SystemParams;
use crate::distribution::{AoiDistribution, JointStateTable, KernelConvention, Provenance};
use crate::error::{AoiError, Result};
use crate::numeric::CompensatedSum;
use crate::service::ServiceDistribution;

/// Largest state count the automatic solver hands to the dense direct solve.
pub const DIRECT_STATE_LIMIT: usize = 1500;

const PRUNED: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    pub p: f64,
    pub service: ServiceDistribution,
    /// Truncation bound `N` on the AoI component.
    pub cap: usize,
    pub convention: KernelConvention,
}

impl KernelSpec {
    pub fn new(p: f64, service: ServiceDistribution, cap: usize) -> Result<Self> {
        let spec = Self {
            p,
            service,
            cap,
            convention: KernelConvention::Paper,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_params(params: &SystemParams, cap: usize) -> Result<Self> {
        Ok(Self::new(params.p, params.service.clone(), cap)?.with_convention(params.kernel))
    }

    pub fn with_convention(mut self, convention: KernelConvention) -> Self {
        self.convention = convention;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(AoiError::InvalidParameter(format!(
                "arrival probability p must lie in (0, 1), got {}",
                self.p
            )));
        }
        if self.cap < 2 {
            return Err(AoiError::InvalidParameter(format!(
                "truncation bound must be >= 2, got {}",
                self.cap
            )));
        }
        if self.cap > 60_000 {
            return Err(AoiError::InvalidParameter(format!(
                "truncation bound {} is too large for a dense state index",
                self.cap
            )));
        }
        Ok(())
    }

    /// Service age at which the busy-state conditionals are evaluated.
    fn conditioning_age(&self, m: usize) -> usize {
        match self.convention {
            KernelConvention::Paper => m,
            KernelConvention::Natural => m + 1,
        }
    }

    /// Whether a state with service age `m` can be entered.
    fn admissible(&self, m: usize) -> bool {
        let needed = match self.convention {
            // entering (n, 1) needs B > 1; (n, m) then needs B > m - 1
            KernelConvention::Paper => m.saturating_sub(1).max(1),
            KernelConvention::Natural => m,
        };
        m == 0 || self.service.survival(needed) > 0.0
    }

    /// Successors of `(n, m)` before boundary folding.
    fn successors(&self, n: usize, m: usize) -> Result<[((usize, usize), f64); 3]> {
        let p = self.p;
        if m == 0 {
            let finish = self.service.cond_finish(1)?;
            let cont = self.service.cond_continue(1)?;
            Ok([
                ((n + 1, 0), 1.0 - p),
                ((1, 0), p * finish),
                ((n + 1, 1), p * cont),
            ])
        } else {
            let age = self.conditioning_age(m);
            Ok([
                ((n + 1, m + 1), self.service.cond_continue(age)?),
                ((m + 1, 0), self.service.cond_finish(age)?),
                ((0, 0), 0.0),
            ])
        }
    }
}

/// Sparse row-stochastic transition kernel in compressed-row form.
#[derive(Clone, Debug)]
pub struct Kernel {
    spec: KernelSpec,
    states: Vec<(u32, u32)>,
    lookup: Vec<u32>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    probs: Vec<f64>,
}

#[inline]
fn tri_index(n: usize, m: usize) -> usize {
    n * (n - 1) / 2 + m
}

/// Builds the truncated kernel for `spec`.
pub fn build_kernel(spec: &KernelSpec) -> Result<Kernel> {
    spec.validate()?;
    let cap = spec.cap;
    let mut lookup = vec![PRUNED; tri_index(cap + 1, 0)];
    let mut states = Vec::new();
    for n in 1..=cap {
        for m in 0..n {
            if spec.admissible(m) {
                lookup[tri_index(n, m)] = states.len() as u32;
                states.push((n as u32, m as u32));
            }
        }
    }

    let mut offsets = Vec::with_capacity(states.len() + 1);
    let mut targets = Vec::with_capacity(3 * states.len());
    let mut probs = Vec::with_capacity(3 * states.len());
    offsets.push(0);
    for (i, &(n, m)) in states.iter().enumerate() {
        let (n, m) = (n as usize, m as usize);
        let row_start = targets.len();
        for ((tn, tm), prob) in spec.successors(n, m)? {
            if prob == 0.0 {
                continue;
            }
            let (tn, tm) = if tn > cap { (cap, tm) } else { (tn, tm) };
            let target = if tm >= tn {
                i as u32
            } else {
                let t = lookup[tri_index(tn, tm)];
                assert_ne!(t, PRUNED, "positive transition into pruned state ({tn}, {tm})");
                t
            };
            match targets[row_start..].iter().position(|&t| t == target) {
                Some(k) => probs[row_start + k] += prob,
                None => {
                    targets.push(target);
                    probs.push(prob);
                }
            }
        }
        offsets.push(targets.len());
    }

    Ok(Kernel {
        spec: spec.clone(),
        states,
        lookup,
        offsets,
        targets,
        probs,
    })
}

impl Kernel {
    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    /// `(n, m)` of state index `i`.
    pub fn state(&self, i: usize) -> (usize, usize) {
        let (n, m) = self.states[i];
        (n as usize, m as usize)
    }

    pub fn index_of(&self, n: usize, m: usize) -> Option<usize> {
        if n == 0 || m >= n || n > self.spec.cap {
            return None;
        }
        match self.lookup[tri_index(n, m)] {
            PRUNED => None,
            i => Some(i as usize),
        }
    }

    /// Nonzero entries `(target index, probability)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.probs[range])
            .map(|(&t, &p)| (t as usize, p))
    }

    /// `P[(n, m), (n', m')]`, zero when either state is absent.
    pub fn transition(&self, from: (usize, usize), to: (usize, usize)) -> f64 {
        match (self.index_of(from.0, from.1), self.index_of(to.0, to.1)) {
            (Some(i), Some(j)) => self
                .row(i)
                .find(|&(t, _)| t == j)
                .map_or(0.0, |(_, p)| p),
            _ => 0.0,
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        crate::numeric::compensated_sum(self.row(i).map(|(_, p)| p))
    }

    /// `out = pi P`
    fn push_forward(&self, pi: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, &mass) in pi.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (t, p) in self.row(i) {
                out[t] += mass * p;
            }
        }
    }

    /// `||pi P - pi||_1`
    pub fn residual(&self, pi: &[f64]) -> f64 {
        let mut next = vec![0.0; pi.len()];
        self.push_forward(pi, &mut next);
        crate::numeric::compensated_sum(next.iter().zip(pi).map(|(a, b)| (a - b).abs()))
    }

    /// Writes `from_n,from_m,to_n,to_m,prob` triplets, one per nonzero entry.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "from_n,from_m,to_n,to_m,prob")?;
        for i in 0..self.n_states() {
            let (n, m) = self.state(i);
            for (t, p) in self.row(i) {
                let (tn, tm) = self.state(t);
                writeln!(w, "{n},{m},{tn},{tm},{p:e}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    /// Direct solve up to [`DIRECT_STATE_LIMIT`] states, power iteration above.
    #[default]
    Auto,
    Power,
    Direct,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub method: SolverMethod,
    /// Target L1 residual `||pi P - pi||_1`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: SolverMethod::Auto,
            tol: 1e-13,
            max_iter: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryReport {
    pub method: SolverMethod,
    pub iterations: usize,
    /// `||pi P - pi||_1` of the returned vector.
    pub residual: f64,
    /// Stationary mass on the boundary row `n = N`.
    pub boundary_mass: f64,
    pub n_states: usize,
}

/// Solves `pi P = pi`, `sum pi = 1`.
///
/// The returned table holds rows `1..N-1`; the lumped boundary row `N` is
/// reported as the table tail and as [`StationaryReport::boundary_mass`].
pub fn solve_stationary(
    kernel: &Kernel,
    opts: &SolveOptions,
) -> Result<(JointStateTable, StationaryReport)> {
    let method = match opts.method {
        SolverMethod::Auto if kernel.n_states() <= DIRECT_STATE_LIMIT => SolverMethod::Direct,
        SolverMethod::Auto => SolverMethod::Power,
        m => m,
    };
    let (pi, iterations) = match method {
        SolverMethod::Direct => (direct_solve(kernel)?, 1),
        _ => power_iterate(kernel, opts)?,
    };
    let residual = kernel.residual(&pi);
    if method == SolverMethod::Direct && residual > opts.tol.max(1e-12) {
        return Err(AoiError::NoConvergence {
            iterations,
            residual,
        });
    }

    let cap = kernel.spec.cap;
    let mut table = JointStateTable::with_capacity(cap - 1);
    let mut row = Vec::with_capacity(cap);
    for n in 1..cap {
        row.clear();
        row.extend((0..n).map(|m| kernel.index_of(n, m).map_or(0.0, |i| pi[i])));
        table.push_row(&row);
    }
    let boundary_mass = crate::numeric::compensated_sum(
        (0..cap).filter_map(|m| kernel.index_of(cap, m).map(|i| pi[i])),
    );
    table.set_tail(boundary_mass);

    Ok((
        table,
        StationaryReport {
            method,
            iterations,
            residual,
            boundary_mass,
            n_states: kernel.n_states(),
        },
    ))
}

fn normalize(v: &mut [f64]) {
    let total = crate::numeric::compensated_sum(v.iter().copied());
    for x in v.iter_mut() {
        *x /= total;
    }
}

fn power_iterate(kernel: &Kernel, opts: &SolveOptions) -> Result<(Vec<f64>, usize)> {
    let n = kernel.n_states();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        kernel.push_forward(&pi, &mut next);
        normalize(&mut next);
        let mut diff = CompensatedSum::new();
        diff.extend(next.iter().zip(&pi).map(|(a, b)| (a - b).abs()));
        residual = diff.value();
        std::mem::swap(&mut pi, &mut next);
        if residual < opts.tol {
            return Ok((pi, iter));
        }
    }
    Err(AoiError::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

fn direct_solve(kernel: &Kernel) -> Result<Vec<f64>> {
    let n = kernel.n_states();
    // (P^T - I) pi = 0 with the first equation replaced by sum(pi) = 1
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] -= 1.0;
        for (t, p) in kernel.row(i) {
            a[(t, i)] += p;
        }
    }
    for j in 0..n {
        a[(0, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[0] = 1.0;
    let x = a.lu().solve(&b).ok_or(AoiError::NoConvergence {
        iterations: 1,
        residual: f64::INFINITY,
    })?;
    let mut pi: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
    normalize(&mut pi);
    Ok(pi)
}

/// `Pr{Delta = n} = sum_m pi(n, m)` from a chain table.
pub fn aoi_marginal(table: &JointStateTable) -> AoiDistribution {
    AoiDistribution::from_table(table, Provenance::Chain)
}

/// Builds, solves and marginalizes in one step.
pub fn chain_distribution(
    spec: &KernelSpec,
    opts: &SolveOptions,
) -> Result<(AoiDistribution, StationaryReport)> {
    let kernel = build_kernel(spec)?;
    let (table, report) = solve_stationary(&kernel, opts)?;
    Ok((aoi_marginal(&table), report))
}
