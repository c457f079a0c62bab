//! Acceptance windows, baselines and the one-sided binomial certification test.
//!
//! For order `r` on a grid of `L = 2^t` outcomes, peak `s` sits at
//! `round(sL/r)` and the window around it has half-width `floor(L / (2 r^2))`.
//! A histogram is certified when the number of shots landing in the union of
//! windows is improbably large for a flat spectrum.

pub mod binomial;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::Backend;
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::sim::Histogram;

pub use binomial::{binomial_pvalue, format_sci, normal_pvalue, pvalue, PValue, PValueMethod};

pub const DEFAULT_ALPHA: f64 = 0.01;

/// Lower bound on the classical success fraction that holds for every odd
/// composite modulus that is not a prime power.
pub const DEFAULT_NU: f64 = 0.5;

/// Whether a window of half-width `w0` holds `2 w0` or `2 w0 + 1` bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// Offsets `-w0 ..= w0 - 1` around each center.
    Strict,
    /// Offsets `-w0 ..= w0` around each center.
    #[default]
    Inclusive,
}

impl FromStr for WindowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Self::Strict),
            "inclusive" => Ok(Self::Inclusive),
            _ => Err(Error::InvalidArgument(format!(
                "unknown window mode {s:?} (expected strict or inclusive)"
            ))),
        }
    }
}

impl fmt::Display for WindowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Strict => "strict",
            Self::Inclusive => "inclusive",
        })
    }
}

fn check_grid(grid_size: u64) -> Result<()> {
    if grid_size < 2 || !grid_size.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "grid size must be a power of two >= 2, got {grid_size}"
        )));
    }
    Ok(())
}

/// `floor(L / (2 r^2))`.
pub fn window_halfwidth(grid_size: u64, order: u64) -> Result<u64> {
    check_grid(grid_size)?;
    if order == 0 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    let denom = 2u128 * order as u128 * order as u128;
    Ok((grid_size as u128 / denom) as u64)
}

/// `round(sL / r) mod L` with ties rounded up.
pub fn peak_center(peak: u64, grid_size: u64, order: u64) -> u64 {
    let num = 2 * peak as u128 * grid_size as u128 + order as u128;
    ((num / (2 * order as u128)) % grid_size as u128) as u64
}

/// The union of acceptance windows over all `r` peaks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceWindows {
    pub grid_size: u64,
    pub order: u64,
    pub half_width: u64,
    pub mode: WindowMode,
    pub centers: Vec<u64>,
    /// Accepted outcomes, sorted and without duplicates.
    pub bins: Vec<u64>,
}

impl AcceptanceWindows {
    /// Fraction of the grid covered: the in-window probability of a flat spectrum.
    pub fn baseline(&self) -> f64 {
        self.bins.len() as f64 / self.grid_size as f64
    }

    pub fn contains(&self, y: u64) -> bool {
        self.bins.binary_search(&y).is_ok()
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

pub fn acceptance_set(grid_size: u64, order: u64, mode: WindowMode) -> Result<AcceptanceWindows> {
    let half_width = window_halfwidth(grid_size, order)?;
    let centers: Vec<u64> = (0..order)
        .map(|s| peak_center(s, grid_size, order))
        .collect();
    let w = half_width as i64;
    let upper = match mode {
        WindowMode::Strict => w - 1,
        WindowMode::Inclusive => w,
    };
    let mut bins = Vec::with_capacity(centers.len() * (2 * half_width as usize + 1));
    for &c in &centers {
        for d in -w..=upper {
            bins.push((c as i64 + d).rem_euclid(grid_size as i64) as u64);
        }
    }
    bins.sort_unstable();
    bins.dedup();
    Ok(AcceptanceWindows {
        grid_size,
        order,
        half_width,
        mode,
        centers,
        bins,
    })
}

/// Shots landing inside the windows.
pub fn count_hits(histogram: &Histogram, windows: &AcceptanceWindows) -> Result<u64> {
    if histogram.grid_size() != windows.grid_size {
        return Err(Error::InvalidArgument(format!(
            "histogram has {} bins but the windows cover a grid of {}",
            histogram.grid_size(),
            windows.grid_size
        )));
    }
    Ok(windows.bins.iter().map(|&y| histogram.count(y)).sum())
}

/// Probability mass of `probs` inside the windows. Panics if `probs` is shorter than the grid.
pub fn window_mass(probs: &[f64], windows: &AcceptanceWindows) -> f64 {
    windows.bins.iter().map(|&y| probs[y as usize]).sum()
}

/// Smallest `k >= 0` with `p_hat >= (log2 N)^-k`; `None` when `p_hat` is zero.
pub fn polylog_exponent(p_hat: f64, modulus: u64) -> Option<u32> {
    if p_hat.is_nan() || p_hat <= 0.0 || modulus < 3 {
        return None;
    }
    if p_hat >= 1.0 {
        return Some(0);
    }
    let base = (modulus as f64).log2();
    let mut k = (-p_hat.ln() / base.ln()).ceil().max(0.0) as u32;
    while k > 0 && p_hat >= base.powi(-(k as i32 - 1)) {
        k -= 1;
    }
    while p_hat < base.powi(-(k as i32)) {
        k += 1;
    }
    Some(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
        })
    }
}

/// Inputs to [`certify`] besides the histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyParams {
    pub modulus: u64,
    pub base: Option<u64>,
    pub order: u64,
    pub alpha: f64,
    pub mode: WindowMode,
    pub method: PValueMethod,
}

impl CertifyParams {
    pub fn new(modulus: u64, base: Option<u64>, order: u64) -> Self {
        Self {
            modulus,
            base,
            order,
            alpha: DEFAULT_ALPHA,
            mode: WindowMode::default(),
            method: PValueMethod::default(),
        }
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn mode(mut self, mode: WindowMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn method(mut self, method: PValueMethod) -> Self {
        self.method = method;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub modulus: u64,
    pub base: Option<u64>,
    pub order: u64,
    pub phase_bits: u32,
    pub grid_size: u64,
    pub mode: WindowMode,
    pub half_width: u64,
    pub accepted_bins: u64,
    pub baseline: f64,
    pub hits: u64,
    pub shots: u64,
    pub p_hat: f64,
    pub excess: f64,
    /// `None` when the tail is below 1e-300; see `log10_p_value`.
    pub p_value: Option<f64>,
    pub log10_p_value: f64,
    pub method: PValueMethod,
    pub alpha: f64,
    pub verdict: Verdict,
    pub polylog_k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<Backend>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
}

impl CertificationReport {
    pub fn p(&self) -> PValue {
        PValue::from_ln(self.log10_p_value * std::f64::consts::LN_10)
    }

    /// Attaches how the histogram was produced.
    pub fn with_run(mut self, seed: u64, backend: Backend, noise: NoiseSpec) -> Self {
        self.seed = Some(seed);
        self.backend = Some(backend);
        self.noise = Some(noise);
        self
    }

    /// `N=35 a=4: FAIL (p=1.17e-02, Δ=+0.013)`.
    pub fn summary_line(&self) -> String {
        let who = match self.base {
            Some(a) => format!("N={} a={a}", self.modulus),
            None => format!("N={} r={}", self.modulus, self.order),
        };
        format!(
            "{who}: {} (p={}, Δ={:+.3})",
            self.verdict,
            self.p(),
            self.excess
        )
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie strictly between 0 and 1, got {alpha}"
        )));
    }
    Ok(())
}

/// Certifies a measured histogram against the windows for `params.order`.
pub fn certify(histogram: &Histogram, params: &CertifyParams) -> Result<CertificationReport> {
    let windows = acceptance_set(histogram.grid_size(), params.order, params.mode)?;
    let hits = count_hits(histogram, &windows)?;
    report_from(hits, histogram.shots(), &windows, params)
}

/// Certifies from a recorded hit count when the full histogram is unavailable.
pub fn certify_counts(
    hits: u64,
    shots: u64,
    grid_size: u64,
    params: &CertifyParams,
) -> Result<CertificationReport> {
    let windows = acceptance_set(grid_size, params.order, params.mode)?;
    report_from(hits, shots, &windows, params)
}

fn report_from(
    hits: u64,
    shots: u64,
    windows: &AcceptanceWindows,
    params: &CertifyParams,
) -> Result<CertificationReport> {
    check_alpha(params.alpha)?;
    if shots == 0 {
        return Err(Error::InvalidArgument("histogram has zero shots".into()));
    }
    if windows.is_empty() || windows.len() as u64 == windows.grid_size {
        return Err(Error::DegenerateModel(format!(
            "acceptance set covers {} of {} bins (half-width {}); the test needs a baseline strictly between 0 and 1",
            windows.len(),
            windows.grid_size,
            windows.half_width
        )));
    }
    let baseline = windows.baseline();
    let p = pvalue(hits, shots, baseline, params.method)?;
    let p_hat = hits as f64 / shots as f64;
    let verdict = if p.le(params.alpha) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(CertificationReport {
        modulus: params.modulus,
        base: params.base,
        order: params.order,
        phase_bits: windows.grid_size.trailing_zeros(),
        grid_size: windows.grid_size,
        mode: windows.mode,
        half_width: windows.half_width,
        accepted_bins: windows.len() as u64,
        baseline,
        hits,
        shots,
        p_hat,
        excess: p_hat - baseline,
        p_value: p.reportable(),
        log10_p_value: p.log10(),
        method: params.method,
        alpha: params.alpha,
        verdict,
        polylog_k: polylog_exponent(p_hat, params.modulus),
        seed: None,
        backend: None,
        noise: None,
    })
}

/// Unit-cost proxy for one run: `(log2 N)^2 * log2 log2 N`.
pub fn run_cost(modulus: u64) -> f64 {
    let bits = (modulus as f64).log2();
    bits * bits * bits.log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuccessModel {
    pub p_succ: f64,
    pub expected_repetitions: f64,
    pub expected_runtime_units: f64,
}

/// Per-run success probability `mass * nu` and the implied expected cost.
pub fn success_model(window_mass: f64, nu: f64, modulus: u64) -> Result<SuccessModel> {
    for (name, v) in [("window mass", window_mass), ("nu", nu)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must lie in (0, 1], got {v}"
            )));
        }
    }
    if modulus < 3 {
        return Err(Error::InvalidArgument(format!(
            "modulus must be at least 3, got {modulus}"
        )));
    }
    let p_succ = window_mass * nu;
    let expected_repetitions = 1.0 / p_succ;
    Ok(SuccessModel {
        p_succ,
        expected_repetitions,
        expected_runtime_units: expected_repetitions * run_cost(modulus),
    })
}
