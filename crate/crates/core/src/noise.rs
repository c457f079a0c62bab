//! Distribution-level decoherence models for the phase register.
//!
//! Phase truncation keeps only the leading `kept_bits` of each eigenphase's
//! binary expansion. Eigenphases whose expansion already terminates within
//! those bits are fixed points of the truncation and survive; each survivor
//! contributes one broad `cos^2` lobe after the inverse QFT. The uniform-mix
//! channel interpolates linearly between a distribution and the flat one.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    #[default]
    None,
    PhaseTruncation {
        kept_bits: u32,
        #[serde(default)]
        exclude_zero_phase: bool,
    },
    UniformMix {
        lambda: f64,
    },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::PhaseTruncation { kept_bits, .. } => {
                if (1..=63).contains(&kept_bits) {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!(
                        "kept_bits must be in 1..=63, got {kept_bits}"
                    )))
                }
            }
            NoiseSpec::UniformMix { lambda } => {
                if (0.0..=1.0).contains(&lambda) {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!(
                        "mixing weight must be in [0, 1], got {lambda}"
                    )))
                }
            }
        }
    }
}

impl FromStr for NoiseSpec {
    type Err = Error;

    /// Parses `none`, `trunc:KEPT[,nozero]` or `uniform:LAMBDA`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidArgument(format!(
                "bad noise spec {s:?} (expected none, trunc:KEPT[,nozero] or uniform:LAMBDA)"
            ))
        };
        let spec = match s.trim().split_once(':') {
            None if s.trim() == "none" => NoiseSpec::None,
            Some(("trunc", rest)) => {
                let (kept, flag) = match rest.split_once(',') {
                    Some((k, "nozero")) => (k, true),
                    Some(_) => return Err(bad()),
                    None => (rest, false),
                };
                NoiseSpec::PhaseTruncation {
                    kept_bits: kept.trim().parse().map_err(|_| bad())?,
                    exclude_zero_phase: flag,
                }
            }
            Some(("uniform", lambda)) => NoiseSpec::UniformMix {
                lambda: lambda.trim().parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::None => write!(f, "none"),
            NoiseSpec::PhaseTruncation {
                kept_bits,
                exclude_zero_phase,
            } => {
                write!(f, "trunc:{kept_bits}")?;
                if *exclude_zero_phase {
                    write!(f, ",nozero")?;
                }
                Ok(())
            }
            NoiseSpec::UniformMix { lambda } => write!(f, "uniform:{lambda}"),
        }
    }
}

/// An eigenphase `numerator / order` of the modular multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Eigenphase {
    pub numerator: u64,
    pub order: u64,
}

impl Eigenphase {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.order as f64
    }
}

/// Eigenphases `s/r` that survive truncation to the most significant
/// fractional bit unchanged.
pub fn stable_eigenphases(order: u64, exclude_zero_phase: bool) -> Result<Vec<Eigenphase>> {
    stable_eigenphases_with(order, 1, exclude_zero_phase)
}

/// Eigenphases `s/r` whose binary expansion terminates within `kept_bits` bits,
/// i.e. `s 2^kept_bits` is divisible by `r`.
pub fn stable_eigenphases_with(
    order: u64,
    kept_bits: u32,
    exclude_zero_phase: bool,
) -> Result<Vec<Eigenphase>> {
    if order == 0 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    if !(1..=63).contains(&kept_bits) {
        return Err(Error::InvalidArgument(format!(
            "kept_bits must be in 1..=63, got {kept_bits}"
        )));
    }
    let scale = 1u128 << kept_bits;
    Ok((0..order)
        .filter(|&s| !(exclude_zero_phase && s == 0))
        .filter(|&s| (s as u128 * scale) % order as u128 == 0)
        .map(|s| Eigenphase {
            numerator: s,
            order,
        })
        .collect())
}

/// Equal mixture of normalized `cos^2(pi (x - x*) / L)` lobes, one per stable
/// eigenphase, with `x* = L phi` and indices wrapping modulo `L`.
pub fn truncated_phase_distribution(order: u64, phase_bits: u32, spec: &NoiseSpec) -> Result<Vec<f64>> {
    let NoiseSpec::PhaseTruncation {
        kept_bits,
        exclude_zero_phase,
    } = *spec
    else {
        return Err(Error::InvalidArgument(format!(
            "truncated distribution needs a phase_truncation spec, got {spec}"
        )));
    };
    if phase_bits == 0 || phase_bits > 26 {
        return Err(Error::InvalidArgument(format!(
            "phase bits {phase_bits} outside 1..=26"
        )));
    }
    let phases = stable_eigenphases_with(order, kept_bits, exclude_zero_phase)?;
    if phases.is_empty() {
        return Err(Error::DegenerateModel(format!(
            "no stable eigenphase for order {order} with {kept_bits} kept bit(s)"
        )));
    }
    let grid = 1u64 << phase_bits;
    let mut mix = vec![0.0; grid as usize];
    for phase in &phases {
        let lobe = cos2_lobe(grid, phase);
        let total: f64 = lobe.iter().sum();
        let weight = 1.0 / (phases.len() as f64 * total);
        for (m, v) in mix.iter_mut().zip(lobe) {
            *m += v * weight;
        }
    }
    Ok(mix)
}

fn cos2_lobe(grid: u64, phase: &Eigenphase) -> Vec<f64> {
    let l = grid as f64;
    let exact = (phase.numerator as u128 * grid as u128) % phase.order as u128 == 0;
    if exact {
        let center = (phase.numerator as u128 * grid as u128 / phase.order as u128) as i64;
        let half = grid as i64 / 2;
        (0..grid as i64)
            .map(|x| {
                let mut d = (x - center).rem_euclid(grid as i64);
                if d >= half && grid > 1 {
                    d -= grid as i64;
                }
                let c = (PI * d as f64 / l).cos();
                c * c
            })
            .collect()
    } else {
        let center = l * phase.value();
        (0..grid)
            .map(|x| {
                let c = (PI * (x as f64 - center) / l).cos();
                c * c
            })
            .collect()
    }
}

/// `(1 - lambda) p + lambda / L`.
pub fn mix_with_uniform(p: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!(
            "mixing weight must be in [0, 1], got {lambda}"
        )));
    }
    if p.is_empty() {
        return Err(Error::InvalidArgument("empty distribution".into()));
    }
    let flat = lambda / p.len() as f64;
    Ok(p.iter().map(|&v| (1.0 - lambda) * v + flat).collect())
}

/// Applies `spec` to an ideal outcome distribution of an order-`r` instance.
pub fn apply_noise(ideal: &[f64], order: u64, phase_bits: u32, spec: &NoiseSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    match spec {
        NoiseSpec::None => Ok(ideal.to_vec()),
        NoiseSpec::UniformMix { lambda } => mix_with_uniform(ideal, *lambda),
        NoiseSpec::PhaseTruncation { .. } => truncated_phase_distribution(order, phase_bits, spec),
    }
}
