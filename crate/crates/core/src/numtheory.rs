//! Classical number theory for order finding: gcd, modular exponentiation,
//! brute-force multiplicative order, continued-fraction convergents, order
//! recovery from a phase-estimation outcome and factor extraction.
//!
//! All arithmetic is on `u64` with `u128` intermediates, so any modulus that
//! fits in a `u64` is handled exactly. The simulator itself is limited to far
//! smaller moduli (the work register must fit in a dense statevector), and the
//! brute-force order search is linear in the order, so in practice moduli are
//! expected to stay below 2^20.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the multiplier `m` tried when a convergent denominator is a
/// proper divisor of the order.
pub const DEFAULT_MULTIPLE_CAP: u64 = 8;

/// Greatest common divisor. Both inputs zero is rejected.
pub fn gcd(a: u64, b: u64) -> Result<u64> {
    if a == 0 && b == 0 {
        return Err(Error::InvalidArgument("gcd(0, 0) is undefined".into()));
    }
    Ok(gcd_raw(a, b))
}

#[inline]
pub(crate) fn gcd_raw(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

#[inline]
fn mul_mod(a: u64, b: u64, modulus: u64) -> u64 {
    ((a as u128 * b as u128) % modulus as u128) as u64
}

/// `a^e mod modulus` by square-and-multiply.
pub fn mod_pow(a: u64, e: u64, modulus: u64) -> Result<u64> {
    if modulus < 2 {
        return Err(Error::InvalidArgument(format!(
            "modulus must be at least 2, got {modulus}"
        )));
    }
    if a >= modulus {
        return Err(Error::InvalidArgument(format!(
            "base {a} must be reduced modulo {modulus}"
        )));
    }
    Ok(mod_pow_raw(a, e, modulus))
}

pub(crate) fn mod_pow_raw(a: u64, mut e: u64, modulus: u64) -> u64 {
    let mut base = a % modulus;
    let mut acc = 1 % modulus;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, modulus);
        }
        base = mul_mod(base, base, modulus);
        e >>= 1;
    }
    acc
}

/// Modular inverse of `a` modulo `modulus`, if it exists.
pub fn mod_inverse(a: u64, modulus: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128, modulus as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(modulus as i128) as u64)
}

/// Smallest `r > 0` with `a^r = 1 (mod modulus)`, found by iterating powers.
///
/// This is deliberately the naive search; it is the reference the quantum
/// pipeline is checked against.
pub fn multiplicative_order(a: u64, modulus: u64) -> Result<u64> {
    if modulus < 2 || a == 0 || a >= modulus {
        return Err(Error::InvalidArgument(format!(
            "need 0 < a < modulus, got a = {a}, modulus = {modulus}"
        )));
    }
    let g = gcd_raw(a, modulus);
    if g != 1 {
        return Err(Error::NotCoprime { a, modulus, gcd: g });
    }
    let mut x = a;
    let mut r = 1;
    while x != 1 {
        x = mul_mod(x, a, modulus);
        r += 1;
    }
    Ok(r)
}

/// Number of bits needed to hold every residue `0..modulus`, i.e. `ceil(log2 N)`.
pub fn bit_width(modulus: u64) -> u32 {
    if modulus <= 1 {
        return 0;
    }
    u64::BITS - (modulus - 1).leading_zeros()
}

/// Default phase-register width `2 * ceil(log2 N)`.
pub fn default_phase_bits(modulus: u64) -> u32 {
    2 * bit_width(modulus)
}

/// A modulus together with a coprime base and its multiplicative order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderFindingInstance {
    modulus: u64,
    base: u64,
    order: u64,
}

impl OrderFindingInstance {
    /// Validates `1 < a < N`, `N >= 3`, `gcd(a, N) = 1` and computes the order.
    pub fn new(modulus: u64, base: u64) -> Result<Self> {
        if modulus < 3 {
            return Err(Error::InvalidArgument(format!(
                "modulus must be at least 3, got {modulus}"
            )));
        }
        if base <= 1 || base >= modulus {
            return Err(Error::InvalidArgument(format!(
                "base must satisfy 1 < a < {modulus}, got {base}"
            )));
        }
        let order = multiplicative_order(base, modulus)?;
        Ok(Self {
            modulus,
            base,
            order,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    /// Work-register width `ceil(log2 N)`.
    pub fn work_bits(&self) -> u32 {
        bit_width(self.modulus)
    }
}

/// A continued-fraction convergent `numerator / denominator` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergent {
    pub numerator: u64,
    pub denominator: u64,
}

/// Convergents of `y / grid` ordered by strictly increasing denominator.
///
/// The expansion of a value in `[1/2, 1)` starts `[0; 1, ...]`, whose first two
/// convergents `0/1` and `1/1` share a denominator; only the later one is kept.
pub fn convergents(y: u64, grid: u64) -> Result<Vec<Convergent>> {
    if grid == 0 {
        return Err(Error::InvalidArgument("grid size must be positive".into()));
    }
    if y >= grid {
        return Err(Error::InvalidArgument(format!(
            "outcome {y} outside grid 0..{grid}"
        )));
    }
    let mut out: Vec<Convergent> = Vec::new();
    // h_{-1} = 1, h_{-2} = 0; k_{-1} = 0, k_{-2} = 1
    let (mut h_prev, mut h_prev2) = (1u128, 0u128);
    let (mut k_prev, mut k_prev2) = (0u128, 1u128);
    let (mut num, mut den) = (y as u128, grid as u128);
    loop {
        let q = num / den;
        let h = q * h_prev + h_prev2;
        let k = q * k_prev + k_prev2;
        let c = Convergent {
            numerator: h as u64,
            denominator: k as u64,
        };
        match out.last_mut() {
            Some(last) if last.denominator == c.denominator => *last = c,
            _ => out.push(c),
        }
        (h_prev2, h_prev) = (h_prev, h);
        (k_prev2, k_prev) = (k_prev, k);
        let rem = num - q * den;
        if rem == 0 {
            break;
        }
        (num, den) = (den, rem);
    }
    Ok(out)
}

/// Attempts to recover the order of `a` modulo `modulus` from a measured
/// outcome `y` on a grid of size `grid`.
///
/// Every convergent denominator `d <= max_order` is validated by checking
/// `a^d = 1`. If none validates, multiples `m * d` for `2 <= m <= multiple_cap`
/// are tried, which covers numerators sharing a factor with the order.
/// Denominator-1 convergents carry no information and are never expanded into
/// multiples. Returns the smallest validated exponent.
pub fn recover_order(
    y: u64,
    grid: u64,
    a: u64,
    modulus: u64,
    max_order: u64,
    multiple_cap: u64,
) -> Result<Option<u64>> {
    if max_order == 0 {
        return Err(Error::InvalidArgument("max_order must be at least 1".into()));
    }
    if modulus < 2 || a >= modulus {
        return Err(Error::InvalidArgument(format!(
            "need a < modulus, got a = {a}, modulus = {modulus}"
        )));
    }
    let g = gcd_raw(a, modulus);
    if g != 1 {
        return Err(Error::NotCoprime { a, modulus, gcd: g });
    }
    let candidates: Vec<u64> = convergents(y, grid)?
        .into_iter()
        .filter(|c| c.numerator != 0 && c.denominator <= max_order)
        .map(|c| c.denominator)
        .collect();

    let validates = |d: u64| mod_pow_raw(a, d, modulus) == 1;

    if let Some(&d) = candidates.iter().find(|&&d| validates(d)) {
        return Ok(Some(d));
    }
    let best = candidates
        .iter()
        .filter(|&&d| d > 1)
        .flat_map(|&d| (2..=multiple_cap).map(move |m| m * d))
        .filter(|&md| md <= max_order && validates(md))
        .min();
    Ok(best)
}

/// Classical post-processing: from an even order with `a^{r/2} != -1 (mod N)`
/// returns a non-trivial factor pair `(f, N / f)` with `f <= N / f`.
///
/// Returns `Ok(None)` on the retry branches (odd order, `a^{r/2} = -1`, or no
/// non-trivial gcd).
pub fn extract_factors(a: u64, order: u64, modulus: u64) -> Result<Option<(u64, u64)>> {
    if modulus < 3 || a >= modulus || order == 0 {
        return Err(Error::InvalidArgument(format!(
            "need a < modulus and order > 0, got a = {a}, order = {order}, modulus = {modulus}"
        )));
    }
    if mod_pow_raw(a, order, modulus) != 1 {
        return Err(Error::InvalidOrder { a, order, modulus });
    }
    if order % 2 == 1 {
        return Ok(None);
    }
    let half = mod_pow_raw(a, order / 2, modulus);
    if half == modulus - 1 {
        return Ok(None);
    }
    for candidate in [half + modulus - 1, half + 1] {
        let f = gcd_raw(candidate % modulus, modulus);
        if f > 1 && f < modulus {
            let g = modulus / f;
            return Ok(Some((f.min(g), f.max(g))));
        }
    }
    Ok(None)
}

/// Deterministic primality by trial division; adequate for simulator-sized moduli.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// If `n = p^k` for a prime `p` and `k >= 2`, returns `(p, k)`.
pub fn prime_power(n: u64) -> Option<(u64, u32)> {
    if n < 4 {
        return None;
    }
    for k in (2..=u64::BITS - n.leading_zeros()).rev() {
        let root = integer_root(n, k);
        if root >= 2 && root.checked_pow(k) == Some(n) && is_prime(root) {
            return Some((root, k));
        }
    }
    None
}

fn integer_root(n: u64, k: u32) -> u64 {
    let mut guess = (n as f64).powf(1.0 / k as f64).round() as u64;
    while guess > 0 && guess.checked_pow(k).map_or(true, |p| p > n) {
        guess -= 1;
    }
    while (guess + 1).checked_pow(k).is_some_and(|p| p <= n) {
        guess += 1;
    }
    guess
}

/// Fraction of bases `1 < a < N` coprime to `N` whose order is even with
/// `a^{r/2} != -1 (mod N)`: the exact conditional success probability of the
/// classical step, by enumeration.
pub fn classical_success_fraction(modulus: u64) -> Result<f64> {
    if modulus < 3 {
        return Err(Error::InvalidArgument(format!(
            "modulus must be at least 3, got {modulus}"
        )));
    }
    let mut total = 0u64;
    let mut good = 0u64;
    for a in 2..modulus {
        if gcd_raw(a, modulus) != 1 {
            continue;
        }
        total += 1;
        let r = multiplicative_order(a, modulus)?;
        if r % 2 == 0 && mod_pow_raw(a, r / 2, modulus) != modulus - 1 {
            good += 1;
        }
    }
    if total == 0 {
        return Err(Error::InvalidArgument(format!(
            "no coprime bases for modulus {modulus}"
        )));
    }
    Ok(good as f64 / total as f64)
}
