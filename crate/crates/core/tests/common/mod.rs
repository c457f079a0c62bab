//! Exact rational oracles shared by the integration tests.

#![allow(dead_code)]

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// Splits a probability in `(0, 1)` into `m / 2^e` with `m` odd.
pub fn dyadic(b: f64) -> (u64, u32) {
    assert!(b > 0.0 && b < 1.0);
    let mut m = b;
    let mut e = 0u32;
    while m.fract() != 0.0 {
        m *= 2.0;
        e += 1;
    }
    let mut m = m as u64;
    while m % 2 == 0 && e > 0 {
        m /= 2;
        e -= 1;
    }
    (m, e)
}

/// `num / den` rounded to `f64`, valid while the quotient stays above ~1e-300.
pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = den.bits() as i64 - num.bits() as i64 + 64;
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    let mut v = q.to_f64().expect("finite quotient") * 2f64.powi(-64);
    let mut rest = shift - 64;
    while rest > 0 {
        let step = rest.min(1000);
        v *= 2f64.powi(-(step as i32));
        rest -= step;
    }
    while rest < 0 {
        let step = (-rest).min(1000);
        v *= 2f64.powi(step as i32);
        rest += step;
    }
    v
}

/// Every upper tail `Pr[X >= k]`, `k = 0..=n`, for `X ~ Binomial(n, b)`,
/// as exact numerators over the common denominator `2^(e n)`.
pub struct ExactTails {
    pub numerators: Vec<BigUint>,
    pub denominator: BigUint,
}

impl ExactTails {
    pub fn new(n: u64, b: f64) -> Self {
        let (m, e) = dyadic(b);
        let succ = BigUint::from(m);
        let fail = (BigUint::one() << e) - &succ;
        let nn = n as usize;

        let mut succ_pow = Vec::with_capacity(nn + 1);
        let mut fail_pow = Vec::with_capacity(nn + 1);
        succ_pow.push(BigUint::one());
        fail_pow.push(BigUint::one());
        for i in 1..=nn {
            succ_pow.push(&succ_pow[i - 1] * &succ);
            fail_pow.push(&fail_pow[i - 1] * &fail);
        }

        let mut binom = BigUint::one();
        let mut terms = Vec::with_capacity(nn + 1);
        for j in 0..=nn {
            terms.push(&binom * &succ_pow[j] * &fail_pow[nn - j]);
            binom = binom * BigUint::from((nn - j) as u64) / BigUint::from((j + 1) as u64);
        }
        let mut numerators = vec![BigUint::zero(); nn + 1];
        let mut acc = BigUint::zero();
        for j in (0..=nn).rev() {
            acc += &terms[j];
            numerators[j] = acc.clone();
        }
        Self {
            numerators,
            denominator: BigUint::one() << (u64::from(e) * n),
        }
    }

    pub fn tail(&self, k: u64) -> f64 {
        ratio_to_f64(&self.numerators[k as usize], &self.denominator)
    }
}
