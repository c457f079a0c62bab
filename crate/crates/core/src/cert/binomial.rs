//! Upper tail of the binomial distribution, in log space.
//!
//! The point mass at the starting index uses Loader's saddle-point form
//! (Stirling remainders plus the deviance `bd0`), which keeps full relative
//! precision far into the tails. The remaining terms are accumulated as ratios
//! to that mass, starting at the mode or at `k`, whichever is larger, so no
//! partial sum can overflow.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A probability held as its natural logarithm so that tails far below the
/// `f64` range remain representable.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PValue {
    ln: f64,
}

impl PValue {
    pub fn from_ln(ln: f64) -> Self {
        Self { ln: ln.min(0.0) }
    }

    pub fn from_value(p: f64) -> Self {
        Self::from_ln(p.ln())
    }

    pub fn ln(&self) -> f64 {
        self.ln
    }

    pub fn log10(&self) -> f64 {
        self.ln / std::f64::consts::LN_10
    }

    /// The probability as an `f64`; underflows to zero below ~1e-308.
    pub fn value(&self) -> f64 {
        self.ln.exp()
    }

    /// `Some(p)` when `p >= 1e-300`, otherwise `None` (report `log10` instead).
    pub fn reportable(&self) -> Option<f64> {
        (self.log10() >= -300.0).then(|| self.value())
    }

    pub fn le(&self, alpha: f64) -> bool {
        self.ln <= alpha.ln()
    }
}

impl fmt::Display for PValue {
    /// `3.50e-27` style, or `10^-412.35` below 1e-300.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.reportable() {
            Some(p) => f.write_str(&format_sci(p, 2)),
            None => write!(f, "10^{:.2}", self.log10()),
        }
    }
}

/// Scientific notation with a signed two-digit exponent: `1.17e-02`.
pub fn format_sci(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return format!("{:.*}e+00", digits, 0.0);
    }
    let s = format!("{:.*e}", digits, x);
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// How the one-sided p-value is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    /// Exact binomial tail.
    #[default]
    Exact,
    /// Normal approximation with continuity correction.
    NormalContinuity,
}

impl std::str::FromStr for PValueMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "normal" | "normal_continuity" => Ok(Self::NormalContinuity),
            _ => Err(Error::InvalidArgument(format!(
                "unknown p-value method {s:?} (expected exact or normal)"
            ))),
        }
    }
}

fn check_args(k: u64, n: u64, b: f64) -> Result<()> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "baseline must lie strictly between 0 and 1, got {b}"
        )));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("hits {k} exceed shots {n}")));
    }
    Ok(())
}

/// `Pr[X >= k]` for `X ~ Binomial(n, b)`.
pub fn binomial_pvalue(k: u64, n: u64, b: f64) -> Result<PValue> {
    check_args(k, n, b)?;
    Ok(PValue::from_ln(ln_upper_tail(k, n, b)))
}

/// Normal approximation `Pr[Z >= (k - 1/2 - n b) / sqrt(n b (1 - b))]`.
pub fn normal_pvalue(k: u64, n: u64, b: f64) -> Result<PValue> {
    check_args(k, n, b)?;
    if k == 0 {
        return Ok(PValue::from_ln(0.0));
    }
    let nf = n as f64;
    let z = (k as f64 - 0.5 - nf * b) / (nf * b * (1.0 - b)).sqrt();
    Ok(PValue::from_ln(ln_normal_upper(z)))
}

pub fn pvalue(k: u64, n: u64, b: f64, method: PValueMethod) -> Result<PValue> {
    match method {
        PValueMethod::Exact => binomial_pvalue(k, n, b),
        PValueMethod::NormalContinuity => normal_pvalue(k, n, b),
    }
}

/// `ln Pr[Z >= z]` for a standard normal `Z`.
fn ln_normal_upper(z: f64) -> f64 {
    if z < 30.0 {
        (0.5 * libm::erfc(z / std::f64::consts::SQRT_2)).ln()
    } else {
        // Mills-ratio asymptotic series; relative error below 1e-15 here
        let z2 = z * z;
        let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
        -0.5 * z2 - z.ln() - 0.5 * (2.0 * PI).ln() + series.ln()
    }
}

fn ln_upper_tail(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let q = 1.0 - p;
    let odds = p / q;
    let mode = (((n + 1) as f64 * p).floor() as u64).min(n);
    let start = k.max(mode);
    let ln_start = ln_binom_pmf(start, n, p, q);

    let mut sum = 1.0;
    let mut term = 1.0;
    let mut j = start;
    while j < n {
        term *= (n - j) as f64 / (j + 1) as f64 * odds;
        j += 1;
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    term = 1.0;
    j = start;
    while j > k {
        term *= j as f64 / (n - j + 1) as f64 / odds;
        j -= 1;
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    (ln_start + sum.ln()).min(0.0)
}

/// `ln C(n, x) p^x q^(n-x)` with `q = 1 - p` supplied separately.
pub(crate) fn ln_binom_pmf(x: u64, n: u64, p: f64, q: f64) -> f64 {
    if x == 0 {
        return if n == 0 { 0.0 } else { n as f64 * (-p).ln_1p() };
    }
    if x == n {
        return n as f64 * p.ln();
    }
    let (xf, nf) = (x as f64, n as f64);
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(xf, nf * p) - bd0(nf - xf, nf * q);
    let lf = LN_2PI + xf.ln() + (-xf / nf).ln_1p();
    lc - 0.5 * lf
}

/// `ln(n!) - ln(sqrt(2 pi n) (n/e)^n)`.
fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    if n <= 15 {
        let ln_fact: f64 = (2..=n).map(|i| (i as f64).ln()).sum();
        return ln_fact - (nf * nf.ln() - nf + 0.5 * (2.0 * PI * nf).ln());
    }
    let nn = nf * nf;
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
}

/// Deviance term `x ln(x / np) + np - x`, evaluated stably near `x = np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        return s;
    }
    x * (x / np).ln() + np - x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_hits_is_certain() {
        assert_eq!(binomial_pvalue(0, 100, 0.3).unwrap().value(), 1.0);
        assert_eq!(normal_pvalue(0, 100, 0.3).unwrap().value(), 1.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(binomial_pvalue(3, 10, 0.0).is_err());
        assert!(binomial_pvalue(3, 10, 1.0).is_err());
        assert!(binomial_pvalue(11, 10, 0.5).is_err());
    }

    #[test]
    fn small_cases_by_hand() {
        // Pr[X >= 1], n = 3, b = 1/2 is 7/8; Pr[X = 3] is 1/8
        assert!((binomial_pvalue(1, 3, 0.5).unwrap().value() - 0.875).abs() < 1e-15);
        assert!((binomial_pvalue(3, 3, 0.5).unwrap().value() - 0.125).abs() < 1e-15);
        assert!((binomial_pvalue(2, 4, 0.25).unwrap().value() - 67.0 / 256.0).abs() < 1e-15);
    }

    #[test]
    fn recorded_experiment_tails() {
        // exact tails, cross-checked against an independent arbitrary-precision sum
        let cases = [
            (741u64, 2048u64, 132.0 / 512.0, 2.023_449_974_923_552_7e-25),
            (988, 4096, 342.0 / 2048.0, 5.891_107_311_589_152_1e-34),
            (751, 4096, 174.0 / 1024.0, 1.225_024_132_404_144e-2),
            (1144, 4096, 260.0 / 1024.0, 1.166_994_721_446_544_4e-4),
        ];
        for (k, n, b, expect) in cases {
            let p = binomial_pvalue(k, n, b).unwrap().value();
            assert!(((p - expect) / expect).abs() < 1e-12, "k={k}: {p:e} vs {expect:e}");
        }
    }

    #[test]
    fn normal_approximation_values() {
        let p = normal_pvalue(741, 2048, 132.0 / 512.0).unwrap().value();
        assert!(((p - 3.501_743_339_156_986e-27) / p).abs() < 1e-6);
        let p = normal_pvalue(988, 4096, 342.0 / 2048.0).unwrap().value();
        assert!(((p - 2.449_941_346_688_563_5e-37) / p).abs() < 1e-6);
    }

    #[test]
    fn deep_tails_stay_in_log_space() {
        let p = binomial_pvalue(1000, 1000, 0.1).unwrap();
        assert!((p.log10() + 1000.0).abs() < 1e-9);
        assert_eq!(p.reportable(), None);
        assert_eq!(p.to_string(), "10^-1000.00");
        assert!((ln_normal_upper(40.0) + 804.608_442_013_753_9).abs() < 1e-9);
        // both sides of the switch to the asymptotic series
        assert!((ln_normal_upper(29.9999) + 454.318_240_635_371_07).abs() < 1e-9);
        assert!((ln_normal_upper(30.0001) + 454.324_247_287_304_5).abs() < 1e-9);
    }

    #[test]
    fn formatting() {
        assert_eq!(format_sci(0.01225, 2), "1.23e-02");
        assert_eq!(format_sci(3.5e-27, 2), "3.50e-27");
        assert_eq!(format_sci(12.0, 1), "1.2e+01");
        assert_eq!(PValue::from_value(1.17e-4).to_string(), "1.17e-04");
    }

    #[test]
    fn stirlerr_continuity_at_switch() {
        let ln_fact = |n: u64| (2..=n).map(|i| (i as f64).ln()).sum::<f64>();
        for n in [16u64, 17, 30, 100] {
            let nf = n as f64;
            let direct = ln_fact(n) - (nf * nf.ln() - nf + 0.5 * (2.0 * PI * nf).ln());
            assert!((stirlerr(n) - direct).abs() < 1e-12, "n={n}");
        }
    }
}
