//! Order-finding runs, the full factoring loop and the four recorded experiments.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cert::{self, CertificationReport, CertifyParams, WindowMode, DEFAULT_ALPHA};
use crate::circuit::{build_qpe_circuit, Backend};
use crate::error::{Error, Result};
use crate::noise::{apply_noise, NoiseSpec};
use crate::numtheory::{
    default_phase_bits, extract_factors, gcd, is_prime, prime_power, recover_order,
    OrderFindingInstance, DEFAULT_MULTIPLE_CAP,
};
use crate::sim::{execute, rng_stream, sample_distribution, Histogram, SimRng};

pub const DEFAULT_ATTEMPT_CAP: u32 = 20;
pub const DEFAULT_SHOTS: u64 = 2048;

fn default_shots() -> u64 {
    DEFAULT_SHOTS
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_attempt_cap() -> u32 {
    DEFAULT_ATTEMPT_CAP
}

fn default_multiple_cap() -> u64 {
    DEFAULT_MULTIPLE_CAP
}

fn default_backend() -> Backend {
    Backend::Permutation
}

/// Everything needed to reproduce one simulated experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub modulus: u64,
    /// Drawn uniformly from the coprime bases when absent.
    #[serde(default)]
    pub base: Option<u64>,
    /// Defaults to `2 ceil(log2 N)`.
    #[serde(default)]
    pub phase_bits: Option<u32>,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_backend")]
    pub backend: Backend,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub mode: WindowMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_attempt_cap")]
    pub attempt_cap: u32,
    #[serde(default = "default_multiple_cap")]
    pub multiple_cap: u64,
}

impl ExperimentConfig {
    pub fn new(modulus: u64) -> Self {
        Self {
            modulus,
            base: None,
            phase_bits: None,
            shots: DEFAULT_SHOTS,
            backend: default_backend(),
            noise: NoiseSpec::None,
            alpha: DEFAULT_ALPHA,
            mode: WindowMode::default(),
            seed: 0,
            attempt_cap: DEFAULT_ATTEMPT_CAP,
            multiple_cap: DEFAULT_MULTIPLE_CAP,
        }
    }

    pub fn resolved_phase_bits(&self) -> u32 {
        self.phase_bits
            .unwrap_or_else(|| default_phase_bits(self.modulus))
    }

    /// Checks field ranges and that the modulus is composite.
    pub fn validate(&self) -> Result<()> {
        if self.modulus < 3 {
            return Err(Error::InvalidArgument(format!(
                "modulus must be at least 3, got {}",
                self.modulus
            )));
        }
        if is_prime(self.modulus) {
            return Err(Error::Precondition(format!(
                "N = {} is prime; there is nothing to factor",
                self.modulus
            )));
        }
        if let Some(a) = self.base {
            if a <= 1 || a >= self.modulus {
                return Err(Error::InvalidArgument(format!(
                    "base must satisfy 1 < a < {}, got {a}",
                    self.modulus
                )));
            }
        }
        if self.phase_bits == Some(0) {
            return Err(Error::InvalidArgument("phase bits must be at least 1".into()));
        }
        if self.shots == 0 {
            return Err(Error::InvalidArgument("shots must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie strictly between 0 and 1, got {}",
                self.alpha
            )));
        }
        if self.attempt_cap == 0 {
            return Err(Error::InvalidArgument("attempt cap must be at least 1".into()));
        }
        self.noise.validate()
    }
}

/// Bases `1 < a < N` coprime to `N`.
pub fn coprime_bases(modulus: u64) -> Vec<u64> {
    (2..modulus)
        .filter(|&a| gcd(a, modulus).is_ok_and(|g| g == 1))
        .collect()
}

/// Outcome distribution of the phase register after noise, from the statevector engine.
pub fn phase_distribution(
    instance: &OrderFindingInstance,
    phase_bits: u32,
    backend: Backend,
    noise: &NoiseSpec,
) -> Result<Vec<f64>> {
    let circuit = build_qpe_circuit(instance, phase_bits, backend)?;
    let state = execute(&circuit, 0)?;
    let phase: Vec<usize> = (0..phase_bits as usize).collect();
    let probs = state.marginal(&phase)?;
    apply_noise(&probs, instance.order(), phase_bits, noise)
}

type CacheKey = (u64, u64, u32, Backend, String);

/// Memoizes phase distributions so repeated runs with the same
/// `(N, a, t, backend, noise)` simulate the circuit only once.
#[derive(Debug, Default)]
pub struct DistributionCache {
    entries: HashMap<CacheKey, Arc<Vec<f64>>>,
}

impl DistributionCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(
        &mut self,
        instance: &OrderFindingInstance,
        phase_bits: u32,
        backend: Backend,
        noise: &NoiseSpec,
    ) -> Result<Arc<Vec<f64>>> {
        let key = (
            instance.modulus(),
            instance.base(),
            phase_bits,
            backend,
            noise.to_string(),
        );
        if let Some(hit) = self.entries.get(&key) {
            return Ok(Arc::clone(hit));
        }
        let probs = Arc::new(phase_distribution(instance, phase_bits, backend, noise)?);
        self.entries.insert(key, Arc::clone(&probs));
        Ok(probs)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn draw_coprime_base<R: Rng>(modulus: u64, rng: &mut R) -> u64 {
    loop {
        let a = rng.random_range(2..modulus);
        if gcd(a, modulus).is_ok_and(|g| g == 1) {
            return a;
        }
    }
}

/// One simulated order-finding experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFindingRun {
    pub instance: OrderFindingInstance,
    pub phase_bits: u32,
    pub histogram: Histogram,
    /// Smallest order recovered from any observed outcome.
    pub recovered_order: Option<u64>,
}

impl OrderFindingRun {
    /// The outcome of a single-shot run.
    pub fn outcome(&self) -> Option<u64> {
        if self.histogram.shots() != 1 {
            return None;
        }
        self.histogram
            .counts()
            .iter()
            .position(|&c| c == 1)
            .map(|y| y as u64)
    }
}

/// Simulates `config.shots` shots of phase estimation and decodes the order.
pub fn order_finding_run(
    config: &ExperimentConfig,
    cache: &mut DistributionCache,
    rng: &mut SimRng,
) -> Result<OrderFindingRun> {
    config.validate()?;
    let base = match config.base {
        Some(a) => a,
        None => draw_coprime_base(config.modulus, rng),
    };
    let instance = OrderFindingInstance::new(config.modulus, base)?;
    let phase_bits = config.resolved_phase_bits();
    let probs = cache.get(&instance, phase_bits, config.backend, &config.noise)?;
    let histogram = sample_distribution(&probs, config.shots, rng)?;
    let grid = histogram.grid_size();
    let mut recovered: Option<u64> = None;
    for (y, &c) in histogram.counts().iter().enumerate() {
        if c == 0 {
            continue;
        }
        let found = recover_order(
            y as u64,
            grid,
            base,
            config.modulus,
            config.modulus,
            config.multiple_cap,
        )?;
        if let Some(r) = found {
            recovered = Some(recovered.map_or(r, |best| best.min(r)));
        }
    }
    Ok(OrderFindingRun {
        instance,
        phase_bits,
        histogram,
        recovered_order: recovered,
    })
}

/// Simulates a histogram for `config` and certifies it against the true order.
pub fn simulate_and_certify(config: &ExperimentConfig) -> Result<(OrderFindingRun, CertificationReport)> {
    let mut rng = rng_stream(config.seed, 0);
    let run = order_finding_run(config, &mut DistributionCache::new(), &mut rng)?;
    let params = CertifyParams::new(config.modulus, Some(run.instance.base()), run.instance.order())
        .alpha(config.alpha)
        .mode(config.mode);
    let report = cert::certify(&run.histogram, &params)?.with_run(config.seed, config.backend, config.noise);
    Ok((run, report))
}

/// How a factoring attempt ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// The random base already shares a factor with `N`.
    LuckyGcd,
    /// No convergent of the outcome validated as an order.
    NoOrder,
    OddOrder,
    /// `a^{r/2} = -1 (mod N)`, or the recovered exponent gave no split.
    TrivialRoot,
    Factored,
}

impl Branch {
    pub fn succeeded(self) -> bool {
        matches!(self, Branch::LuckyGcd | Branch::Factored)
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::LuckyGcd => "lucky gcd",
            Branch::NoOrder => "no order recovered",
            Branch::OddOrder => "odd order",
            Branch::TrivialRoot => "trivial square root",
            Branch::Factored => "factored",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub base: u64,
    pub outcome: Option<u64>,
    pub recovered_order: Option<u64>,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactoringResult {
    pub modulus: u64,
    /// `(f, N / f)` with `f <= N / f`.
    pub factors: Option<(u64, u64)>,
    pub attempts: Vec<Attempt>,
    /// Attempts that needed a quantum order-finding run.
    pub total_runs: u32,
}

impl FactoringResult {
    pub fn succeeded(&self) -> bool {
        self.factors.is_some()
    }
}

/// Rejects moduli outside the reach of the order-finding reduction.
pub fn check_factorable(modulus: u64) -> Result<()> {
    if modulus < 3 {
        return Err(Error::InvalidArgument(format!(
            "modulus must be at least 3, got {modulus}"
        )));
    }
    if modulus % 2 == 0 {
        return Err(Error::Precondition(format!(
            "N = {modulus} is even (factor 2 classically)"
        )));
    }
    if is_prime(modulus) {
        return Err(Error::Precondition(format!("N = {modulus} is prime")));
    }
    if let Some((p, k)) = prime_power(modulus) {
        return Err(Error::Precondition(format!(
            "N = {modulus} = {p}^{k} is a prime power"
        )));
    }
    Ok(())
}

/// The randomized factoring loop. Attempt `i` draws from its own stream of
/// `config.seed`, so the trace does not depend on how attempts are scheduled.
pub fn shor_factor(config: &ExperimentConfig, cache: &mut DistributionCache) -> Result<FactoringResult> {
    let modulus = config.modulus;
    check_factorable(modulus)?;
    let single = ExperimentConfig {
        shots: 1,
        ..*config
    };
    single.validate()?;
    let phase_bits = single.resolved_phase_bits();
    let mut attempts = Vec::new();
    let mut total_runs = 0;
    for i in 0..config.attempt_cap {
        let mut rng = rng_stream(config.seed, u64::from(i) + 1);
        let base = match config.base {
            Some(a) => a,
            None => rng.random_range(2..modulus),
        };
        let g = gcd(base, modulus)?;
        if g > 1 {
            attempts.push(Attempt {
                base,
                outcome: None,
                recovered_order: None,
                branch: Branch::LuckyGcd,
            });
            let other = modulus / g;
            return Ok(FactoringResult {
                modulus,
                factors: Some((g.min(other), g.max(other))),
                attempts,
                total_runs,
            });
        }
        total_runs += 1;
        let instance = OrderFindingInstance::new(modulus, base)?;
        let probs = cache.get(&instance, phase_bits, single.backend, &single.noise)?;
        let y = sample_distribution(&probs, 1, &mut rng)?
            .counts()
            .iter()
            .position(|&c| c == 1)
            .expect("one shot recorded") as u64;
        let recovered = recover_order(
            y,
            1u64 << phase_bits,
            base,
            modulus,
            modulus,
            single.multiple_cap,
        )?;
        let (branch, factors) = match recovered {
            None => (Branch::NoOrder, None),
            Some(r) if r % 2 == 1 => (Branch::OddOrder, None),
            Some(r) => match extract_factors(base, r, modulus)? {
                Some(pair) => (Branch::Factored, Some(pair)),
                None => (Branch::TrivialRoot, None),
            },
        };
        attempts.push(Attempt {
            base,
            outcome: Some(y),
            recovered_order: recovered,
            branch,
        });
        if factors.is_some() {
            return Ok(FactoringResult {
                modulus,
                factors,
                attempts,
                total_runs,
            });
        }
    }
    Ok(FactoringResult {
        modulus,
        factors: None,
        attempts,
        total_runs,
    })
}

/// The four recorded hardware experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PaperExperiment {
    N15,
    N21,
    #[serde(rename = "N35_a4")]
    N35A4,
    #[serde(rename = "N35_a8")]
    N35A8,
}

/// Parameters and recorded outcome of one hardware run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RecordedRun {
    pub modulus: u64,
    pub base: u64,
    pub phase_bits: u32,
    pub shots: u64,
    pub hits: u64,
    pub order: u64,
}

impl RecordedRun {
    pub fn grid_size(&self) -> u64 {
        1 << self.phase_bits
    }
}

impl PaperExperiment {
    pub const ALL: [PaperExperiment; 4] = [Self::N15, Self::N21, Self::N35A4, Self::N35A8];

    pub fn name(self) -> &'static str {
        match self {
            Self::N15 => "N15",
            Self::N21 => "N21",
            Self::N35A4 => "N35_a4",
            Self::N35A8 => "N35_a8",
        }
    }

    pub fn recorded(self) -> RecordedRun {
        let (modulus, base, phase_bits, shots, hits, order) = match self {
            Self::N15 => (15, 7, 9, 2048, 741, 4),
            Self::N21 => (21, 2, 11, 4096, 988, 6),
            Self::N35A4 => (35, 4, 10, 4096, 751, 6),
            Self::N35A8 => (35, 8, 10, 4096, 1144, 4),
        };
        RecordedRun {
            modulus,
            base,
            phase_bits,
            shots,
            hits,
            order,
        }
    }

    /// Experiment config matching the recorded run.
    pub fn config(self, seed: u64) -> ExperimentConfig {
        let rec = self.recorded();
        ExperimentConfig {
            base: Some(rec.base),
            phase_bits: Some(rec.phase_bits),
            shots: rec.shots,
            seed,
            ..ExperimentConfig::new(rec.modulus)
        }
    }
}

impl fmt::Display for PaperExperiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PaperExperiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown experiment {s:?} (expected N15, N21, N35_a4 or N35_a8)"
                ))
            })
    }
}

/// Where the histogram for a replication comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// Noiseless simulation at the recorded parameters.
    Simulate,
    /// The recorded hit count and shot total.
    PaperCounts,
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simulate" => Ok(Self::Simulate),
            "paper-counts" | "recorded" => Ok(Self::PaperCounts),
            _ => Err(Error::InvalidArgument(format!(
                "unknown source {s:?} (expected simulate or paper-counts)"
            ))),
        }
    }
}

/// Certifies one recorded experiment, either from its counts or by simulation.
pub fn replicate_experiment(
    experiment: PaperExperiment,
    source: Source,
    seed: u64,
) -> Result<CertificationReport> {
    let rec = experiment.recorded();
    match source {
        Source::PaperCounts => {
            let params = CertifyParams::new(rec.modulus, Some(rec.base), rec.order);
            cert::certify_counts(rec.hits, rec.shots, rec.grid_size(), &params)
        }
        Source::Simulate => simulate_and_certify(&experiment.config(seed)).map(|(_, rep)| rep),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cert::Verdict;

    #[test]
    fn precondition_messages_name_the_check() {
        let msg = |n| check_factorable(n).unwrap_err().to_string();
        assert!(msg(16).contains("even"));
        assert!(msg(9).contains("prime power"));
        assert!(msg(13).contains("prime"));
        assert!(check_factorable(15).is_ok());
        assert!(matches!(check_factorable(1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn factors_small_semiprimes() {
        let mut cache = DistributionCache::new();
        for (n, want) in [(15, (3, 5)), (21, (3, 7)), (35, (5, 7))] {
            let cfg = ExperimentConfig {
                seed: 7,
                ..ExperimentConfig::new(n)
            };
            let res = shor_factor(&cfg, &mut cache).unwrap();
            assert_eq!(res.factors, Some(want), "N={n}: {:?}", res.attempts);
            assert!(res.attempts.last().unwrap().branch.succeeded());
        }
    }

    #[test]
    fn pinned_base_with_odd_order_exhausts_cap() {
        // 4 has order 3 mod 21 (4^3 = 64 = 1 + 3 * 21)
        let cfg = ExperimentConfig {
            base: Some(4),
            attempt_cap: 5,
            ..ExperimentConfig::new(21)
        };
        let res = shor_factor(&cfg, &mut DistributionCache::new()).unwrap();
        assert!(!res.succeeded());
        assert_eq!(res.attempts.len(), 5);
        assert!(res
            .attempts
            .iter()
            .all(|a| matches!(a.branch, Branch::OddOrder | Branch::NoOrder)));
    }

    #[test]
    fn lucky_gcd_short_circuits() {
        let cfg = ExperimentConfig {
            base: Some(6),
            ..ExperimentConfig::new(15)
        };
        let res = shor_factor(&cfg, &mut DistributionCache::new()).unwrap();
        assert_eq!(res.factors, Some((3, 5)));
        assert_eq!(res.total_runs, 0);
        assert_eq!(res.attempts[0].branch, Branch::LuckyGcd);
    }

    #[test]
    fn factoring_is_deterministic_per_seed() {
        let cfg = ExperimentConfig {
            seed: 99,
            ..ExperimentConfig::new(35)
        };
        let a = shor_factor(&cfg, &mut DistributionCache::new()).unwrap();
        let b = shor_factor(&cfg, &mut DistributionCache::new()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn recorded_runs_match_their_windows() {
        for e in PaperExperiment::ALL {
            let rec = e.recorded();
            let inst = OrderFindingInstance::new(rec.modulus, rec.base).unwrap();
            assert_eq!(inst.order(), rec.order, "{e}");
            assert_eq!(e.name().parse::<PaperExperiment>().unwrap(), e);
        }
        assert!("N99".parse::<PaperExperiment>().is_err());
    }

    #[test]
    fn simulated_n15_is_fully_in_window() {
        let rep = replicate_experiment(PaperExperiment::N15, Source::Simulate, 1).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.hits, rep.shots);
        assert!(rep.log10_p_value < -27.0);
    }

    #[test]
    fn single_shot_run_reports_its_outcome() {
        let cfg = ExperimentConfig {
            base: Some(7),
            phase_bits: Some(9),
            shots: 1,
            ..ExperimentConfig::new(15)
        };
        let run = order_finding_run(&cfg, &mut DistributionCache::new(), &mut rng_stream(3, 0)).unwrap();
        let y = run.outcome().unwrap();
        assert_eq!(y % 128, 0);
        if y == 0 {
            assert_eq!(run.recovered_order, None);
        } else {
            assert_eq!(run.recovered_order, Some(4));
        }
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::new(13).validate().is_err());
        let bad = ExperimentConfig {
            shots: 0,
            ..ExperimentConfig::new(15)
        };
        assert!(bad.validate().is_err());
        let json = serde_json::json!({ "modulus": 21, "base": 2 });
        let cfg: ExperimentConfig = serde_json::from_value(json).unwrap();
        assert_eq!(cfg.resolved_phase_bits(), 10);
        assert_eq!(cfg.shots, DEFAULT_SHOTS);
        assert_eq!(cfg.attempt_cap, DEFAULT_ATTEMPT_CAP);
    }
}
