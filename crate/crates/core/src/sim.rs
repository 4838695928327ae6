//! Slot-level Monte Carlo simulation of the Ber/G/1/1 status-update system.
//!
//! Each slot: an idle server admits a Bernoulli(`p`) arrival at the slot
//! start (arrivals during service are blocked); at the slot end the AoI is
//! reset to the system time of a packet that just completed, otherwise it
//! grows by one. The run starts with an empty system and `a(0) = 1`.
//!
//! Under [`KernelConvention::Paper`] completion is drawn every slot with the
//! same conditionals the analytic kernel uses, so the simulator realizes that
//! chain exactly. Under [`KernelConvention::Natural`] the service time is
//! drawn whole on arrival and the packet leaves at the end of its `B`-th slot.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{AoiDistribution, KernelConvention, Provenance};
use crate::error::{AoiError, Result};
use crate::service::{ServiceDistribution, ServiceSampler};

/// Name of the generator recorded in every result.
pub const RNG_NAME: &str = "ChaCha8Rng(seed_from_u64(seed), stream = replication)";

/// The quantities a simulation is parameterized by; results merge only when
/// these agree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub p: f64,
    pub service: ServiceDistribution,
    pub kernel: KernelConvention,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub params: SimParams,
    /// Slots per replication, warmup included.
    pub slots: u64,
    pub seed: u64,
    pub replications: u32,
    /// Leading slots discarded from each replication.
    pub warmup: u64,
}

impl SimulationConfig {
    pub fn new(p: f64, service: ServiceDistribution, slots: u64, seed: u64) -> Result<Self> {
        let config = Self {
            params: SimParams {
                p,
                service,
                kernel: KernelConvention::Paper,
            },
            slots,
            seed,
            replications: 1,
            warmup: 0,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_kernel(mut self, kernel: KernelConvention) -> Self {
        self.params.kernel = kernel;
        self
    }

    pub fn with_replications(mut self, replications: u32) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_warmup(mut self, warmup: u64) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.params.p;
        if !(p > 0.0 && p <= 1.0) {
            return Err(AoiError::InvalidParameter(format!(
                "arrival probability must lie in (0, 1], got {p}"
            )));
        }
        if self.slots == 0 {
            return Err(AoiError::InvalidParameter("need at least one slot".into()));
        }
        if self.warmup >= self.slots {
            return Err(AoiError::InvalidParameter(format!(
                "warmup {} must be below the slot count {}",
                self.warmup, self.slots
            )));
        }
        if self.replications == 0 {
            return Err(AoiError::InvalidParameter(
                "need at least one replication".into(),
            ));
        }
        Ok(())
    }
}

/// Completion probabilities per service age, precomputed once per run.
#[derive(Clone, Debug)]
enum FinishSchedule {
    Constant(f64),
    /// `table[m - 1] = Pr{B = m | B > m - 1}` over the support.
    Table(Vec<f64>),
}

impl FinishSchedule {
    fn new(service: &ServiceDistribution) -> Self {
        match (service.geometric_rate(), service.support_max()) {
            (Some(gamma), _) => Self::Constant(gamma),
            (None, Some(j)) => Self::Table(
                (1..=j)
                    .map(|m| service.cond_finish(m).unwrap_or(1.0))
                    .collect(),
            ),
            (None, None) => unreachable!("unbounded support is geometric"),
        }
    }

    #[inline]
    fn at(&self, age: u64) -> f64 {
        match self {
            Self::Constant(g) => *g,
            Self::Table(t) => t.get(age as usize - 1).copied().unwrap_or(1.0),
        }
    }
}

#[derive(Clone, Debug)]
enum Server {
    Idle,
    /// `age` slots served so far; `target` is the whole service time under
    /// the natural convention.
    Busy { age: u64, target: u64 },
}

/// One sample path of the AoI process; yields `a(1), a(2), ...`.
#[derive(Clone, Debug)]
pub struct SlotSimulator<R> {
    p: f64,
    convention: KernelConvention,
    finish: FinishSchedule,
    sampler: ServiceSampler,
    rng: R,
    aoi: u64,
    server: Server,
}

impl<R: Rng> SlotSimulator<R> {
    pub fn new(params: &SimParams, rng: R) -> Self {
        Self {
            p: params.p,
            convention: params.kernel,
            finish: FinishSchedule::new(&params.service),
            sampler: params.service.sampler(),
            rng,
            aoi: 1,
            server: Server::Idle,
        }
    }

    /// Current AoI `a(k)`.
    pub fn aoi(&self) -> u64 {
        self.aoi
    }

    /// Service age `m` of the packet in the server, zero when idle.
    pub fn service_age(&self) -> u64 {
        match self.server {
            Server::Idle => 0,
            Server::Busy { age, .. } => age,
        }
    }

    /// Advances one slot and returns the AoI recorded at its end.
    pub fn step(&mut self) -> u64 {
        if let Server::Idle = self.server {
            if self.rng.random::<f64>() < self.p {
                let target = match self.convention {
                    KernelConvention::Natural => self.sampler.sample(&mut self.rng),
                    KernelConvention::Paper => 0,
                };
                self.server = Server::Busy { age: 0, target };
            }
        }
        match self.server {
            Server::Idle => self.aoi += 1,
            Server::Busy { age, target } => {
                let done = match self.convention {
                    KernelConvention::Paper => {
                        self.rng.random::<f64>() < self.finish.at(age.max(1))
                    }
                    KernelConvention::Natural => age + 1 == target,
                };
                if done {
                    self.aoi = age + 1;
                    self.server = Server::Idle;
                } else {
                    self.aoi += 1;
                    self.server = Server::Busy {
                        age: age + 1,
                        target,
                    };
                }
            }
        }
        self.aoi
    }
}

impl<R: Rng> Iterator for SlotSimulator<R> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        Some(self.step())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub params: SimParams,
    /// Recorded slots, warmup excluded.
    #[serde(rename = "T")]
    pub slots: u64,
    pub seed: u64,
    pub rng: String,
    /// `histogram[n - 1]` counts slots with `a(k) = n`.
    pub histogram: Vec<u64>,
    pub mean: f64,
    pub replication_means: Vec<f64>,
}

impl SimulationResult {
    fn from_histogram(
        params: SimParams,
        seed: u64,
        histogram: Vec<u64>,
        replication_means: Vec<f64>,
    ) -> Self {
        let slots: u64 = histogram.iter().sum();
        let weighted: u128 = histogram
            .iter()
            .enumerate()
            .map(|(i, &c)| (i as u128 + 1) * c as u128)
            .sum();
        Self {
            params,
            slots,
            seed,
            rng: RNG_NAME.to_string(),
            mean: weighted as f64 / slots as f64,
            histogram,
            replication_means,
        }
    }

    /// Largest AoI observed.
    pub fn max_aoi(&self) -> usize {
        self.histogram.len()
    }

    /// Empirical `|{k : a(k) = n}| / T`.
    pub fn frequency(&self, n: usize) -> f64 {
        match n {
            0 => 0.0,
            n => self.histogram.get(n - 1).copied().unwrap_or(0) as f64 / self.slots as f64,
        }
    }

    pub fn distribution(&self) -> AoiDistribution {
        let pmf = (1..=self.max_aoi()).map(|n| self.frequency(n)).collect();
        AoiDistribution::from_pmf(pmf, 0.0, Provenance::Empirical)
    }

    /// Sample standard error of the mean across replications.
    pub fn replication_std_error(&self) -> Option<f64> {
        let r = self.replication_means.len();
        if r < 2 {
            return None;
        }
        let mean = self.replication_means.iter().sum::<f64>() / r as f64;
        let var = self
            .replication_means
            .iter()
            .map(|x| (x - mean).powi(2))
            .sum::<f64>()
            / (r - 1) as f64;
        Some((var / r as f64).sqrt())
    }
}

/// Generator for replication `index`: one ChaCha stream per replication.
pub fn replication_rng(seed: u64, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Runs a single replication.
pub fn run_replication(config: &SimulationConfig, index: u32) -> Result<SimulationResult> {
    config.validate()?;
    let mut sim = SlotSimulator::new(&config.params, replication_rng(config.seed, index));
    let mut histogram: Vec<u64> = Vec::with_capacity(64);
    for _ in 0..config.warmup {
        sim.step();
    }
    for _ in config.warmup..config.slots {
        let a = sim.step() as usize;
        if a > histogram.len() {
            histogram.resize(a, 0);
        }
        histogram[a - 1] += 1;
    }
    let mut result =
        SimulationResult::from_histogram(config.params.clone(), config.seed, histogram, vec![]);
    result.replication_means.push(result.mean);
    Ok(result)
}

/// Runs all replications (in parallel) and pools them in index order.
pub fn run(config: &SimulationConfig) -> Result<SimulationResult> {
    config.validate()?;
    let runs = (0..config.replications)
        .into_par_iter()
        .map(|i| run_replication(config, i))
        .collect::<Result<Vec<_>>>()?;
    merge(&runs)
}

/// Pools results with identical parameters: histograms add, the mean is
/// recomputed and per-replication means are concatenated.
pub fn merge(results: &[SimulationResult]) -> Result<SimulationResult> {
    let first = results
        .first()
        .ok_or_else(|| AoiError::Mismatch("nothing to merge".into()))?;
    let mut histogram = Vec::new();
    let mut replication_means = Vec::new();
    for r in results {
        if r.params != first.params {
            return Err(AoiError::Mismatch(format!(
                "parameters differ: {:?} vs {:?}",
                r.params, first.params
            )));
        }
        if r.histogram.len() > histogram.len() {
            histogram.resize(r.histogram.len(), 0);
        }
        for (acc, c) in histogram.iter_mut().zip(&r.histogram) {
            *acc += c;
        }
        replication_means.extend_from_slice(&r.replication_means);
    }
    Ok(SimulationResult::from_histogram(
        first.params.clone(),
        first.seed,
        histogram,
        replication_means,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geo(gamma: f64) -> ServiceDistribution {
        ServiceDistribution::geometric(gamma).unwrap()
    }

    #[test]
    fn always_arriving_one_slot_service_pins_age_to_one() {
        let config = SimulationConfig::new(0.999, ServiceDistribution::deterministic(1).unwrap(), 100_000, 3)
            .unwrap();
        let r = run(&config).unwrap();
        assert!((r.mean - 1.0).abs() < 0.01, "{}", r.mean);
        assert!(r.frequency(1) > 0.99);
    }

    #[test]
    fn certain_arrival_path_is_constant() {
        let params = SimParams {
            p: 1.0,
            service: ServiceDistribution::deterministic(1).unwrap(),
            kernel: KernelConvention::Paper,
        };
        let sim = SlotSimulator::new(&params, replication_rng(1, 0));
        assert!(sim.take(1000).all(|a| a == 1));
    }

    #[test]
    fn deterministic_delivery_ages() {
        for (kernel, delivered) in [(KernelConvention::Paper, 3), (KernelConvention::Natural, 2)] {
            let params = SimParams {
                p: 0.25,
                service: ServiceDistribution::deterministic(2).unwrap(),
                kernel,
            };
            let mut sim = SlotSimulator::new(&params, replication_rng(9, 0));
            let mut resets = Vec::new();
            let mut prev = sim.aoi();
            for _ in 0..10_000 {
                let a = sim.step();
                if a != prev + 1 {
                    resets.push(a);
                }
                prev = a;
            }
            assert!(!resets.is_empty());
            assert!(resets.iter().all(|&a| a == delivered), "{kernel}: {resets:?}");
        }
    }

    #[test]
    fn seeded_runs_are_bit_identical() {
        let config = SimulationConfig::new(0.25, geo(0.5), 50_000, 42)
            .unwrap()
            .with_replications(4);
        assert_eq!(run(&config).unwrap(), run(&config).unwrap());
        let other = SimulationConfig { seed: 43, ..config.clone() };
        assert_ne!(run(&config).unwrap().histogram, run(&other).unwrap().histogram);
    }

    #[test]
    fn replications_use_distinct_streams() {
        let config = SimulationConfig::new(0.25, geo(0.5), 10_000, 42).unwrap();
        let a = run_replication(&config, 0).unwrap();
        let b = run_replication(&config, 1).unwrap();
        assert_ne!(a.histogram, b.histogram);
    }

    #[test]
    fn warmup_is_excluded() {
        let config = SimulationConfig::new(0.25, geo(0.5), 1000, 1)
            .unwrap()
            .with_warmup(100);
        let r = run(&config).unwrap();
        assert_eq!(r.slots, 900);
        assert!(SimulationConfig::new(0.25, geo(0.5), 100, 1)
            .unwrap()
            .with_warmup(100)
            .validate()
            .is_err());
    }

    #[test]
    fn merge_examples() {
        let config = SimulationConfig::new(0.25, geo(0.5), 20_000, 5).unwrap();
        let a = run_replication(&config, 0).unwrap();
        let b = run_replication(&config, 1).unwrap();
        assert_eq!(merge(std::slice::from_ref(&a)).unwrap(), a);
        let ab = merge(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(ab.slots, 40_000);
        assert!((ab.mean - (a.mean + b.mean) / 2.0).abs() < 1e-12);
        assert_eq!(ab.replication_means, vec![a.mean, b.mean]);
        assert_eq!(merge(&[b.clone(), a.clone()]).unwrap().histogram, ab.histogram);

        let mut c = b.clone();
        c.params.p = 0.3;
        assert!(matches!(merge(&[a, c]), Err(AoiError::Mismatch(_))));
        assert!(merge(&[]).is_err());
    }

    #[test]
    fn result_json_uses_documented_keys() {
        let config = SimulationConfig::new(0.25, geo(0.5), 100, 5).unwrap();
        let r = run(&config).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["params", "T", "seed", "histogram", "mean", "replication_means"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let back: SimulationResult = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sample_path_shape(
            p in 0.05f64..0.95,
            gamma in 0.05f64..0.95,
            k in 1usize..6,
            which in 0usize..3,
            natural in any::<bool>(),
            seed in any::<u64>(),
        ) {
            let service = match which {
                0 => geo(gamma),
                1 => ServiceDistribution::deterministic(k).unwrap(),
                _ => ServiceDistribution::table(vec![gamma, 0.0, 1.0 - gamma]).unwrap(),
            };
            let kernel = if natural { KernelConvention::Natural } else { KernelConvention::Paper };
            let params = SimParams { p, service, kernel };
            let mut sim = SlotSimulator::new(&params, replication_rng(seed, 0));
            let mut prev = sim.aoi();
            for _ in 0..2000 {
                let a = sim.step();
                prop_assert!(a >= 1);
                prop_assert!(a == prev + 1 || a <= prev, "{} -> {}", prev, a);
                prop_assert!(sim.service_age() < a);
                prev = a;
            }
        }

        #[test]
        fn histogram_accounts_for_every_slot(slots in 1u64..5000, warmup_frac in 0.0f64..0.9, seed in any::<u64>()) {
            let warmup = (slots as f64 * warmup_frac) as u64;
            let config = SimulationConfig::new(0.3, geo(0.4), slots, seed).unwrap().with_warmup(warmup);
            let r = run(&config).unwrap();
            prop_assert_eq!(r.histogram.iter().sum::<u64>(), slots - warmup);
            let mean: f64 = r.histogram.iter().enumerate().map(|(i, &c)| (i + 1) as f64 * c as f64).sum::<f64>() / r.slots as f64;
            prop_assert!((mean - r.mean).abs() < 1e-9 * mean);
        }
    }
}
