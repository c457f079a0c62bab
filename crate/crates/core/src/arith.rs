//! Modular multiplication backends.
//!
//! Two interchangeable implementations of `|x> -> |a x mod N>`:
//!
//! * [`PermutationTable`], a dense permutation of the `2^n` work-register basis
//!   states, applied by the simulator as an index remapping;
//! * [`modular_multiplier_circuit`], a gate-level reversible circuit built from
//!   Cuccaro ripple-carry adders, constant loads and an overflow comparator.
//!
//! Both fix every `x >= N`, so on every basis input they agree exactly.

use serde::Serialize;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::numtheory::{gcd_raw, mod_inverse, mod_pow_raw};

/// Largest work register a dense table may cover.
pub const MAX_TABLE_BITS: u32 = 20;

/// Largest adder width; basis states of the adder fragment must fit in a `u64`.
pub const MAX_ADDER_BITS: usize = 30;

/// Bijection on `0..2^n`: `x -> a x mod N` for `x < N`, identity above.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PermutationTable {
    multiplier: u64,
    modulus: u64,
    width: u32,
    #[serde(skip)]
    mapping: Vec<u32>,
}

impl PermutationTable {
    pub fn new(multiplier: u64, modulus: u64, width: u32) -> Result<Self> {
        if width == 0 || width > MAX_TABLE_BITS {
            return Err(Error::Capacity(format!(
                "permutation width {width} outside 1..={MAX_TABLE_BITS}"
            )));
        }
        let size = 1u64 << width;
        if modulus < 2 || modulus > size {
            return Err(Error::Capacity(format!(
                "modulus {modulus} does not fit a {width}-qubit register"
            )));
        }
        let multiplier = multiplier % modulus;
        let g = gcd_raw(multiplier, modulus);
        if g != 1 {
            return Err(Error::NotCoprime {
                a: multiplier,
                modulus,
                gcd: g,
            });
        }
        let mapping: Vec<u32> = (0..size)
            .map(|x| {
                if x < modulus {
                    ((multiplier as u128 * x as u128) % modulus as u128) as u32
                } else {
                    x as u32
                }
            })
            .collect();
        let table = Self {
            multiplier,
            modulus,
            width,
            mapping,
        };
        if !table.is_bijection() {
            return Err(Error::InvalidArgument(format!(
                "multiplication by {multiplier} mod {modulus} is not a permutation"
            )));
        }
        Ok(table)
    }

    pub fn multiplier(&self) -> u64 {
        self.multiplier
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn size(&self) -> usize {
        self.mapping.len()
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.mapping[x] as usize
    }

    pub fn mapping(&self) -> &[u32] {
        &self.mapping
    }

    pub fn is_bijection(&self) -> bool {
        let mut hit = vec![false; self.mapping.len()];
        for &y in &self.mapping {
            match hit.get_mut(y as usize) {
                Some(slot) if !*slot => *slot = true,
                _ => return false,
            }
        }
        true
    }

    pub fn inverse(&self) -> Self {
        let mut mapping = vec![0u32; self.mapping.len()];
        for (x, &y) in self.mapping.iter().enumerate() {
            mapping[y as usize] = x as u32;
        }
        Self {
            multiplier: mod_inverse(self.multiplier, self.modulus).unwrap_or(1),
            modulus: self.modulus,
            width: self.width,
            mapping,
        }
    }
}

/// Permutation for `x -> a x mod N`.
pub fn mod_mult_permutation(a: u64, modulus: u64, width: u32) -> Result<PermutationTable> {
    PermutationTable::new(a, modulus, width)
}

/// Permutation for multiplication by `a^{2^k} mod N`, from the precomputed
/// multiplier rather than by composing `k` tables.
pub fn controlled_power_table(a: u64, modulus: u64, k: u32, width: u32) -> Result<PermutationTable> {
    if modulus < 2 {
        return Err(Error::InvalidArgument(format!("modulus {modulus} < 2")));
    }
    let mut m = a % modulus;
    for _ in 0..k {
        m = mod_pow_raw(m, 2, modulus);
    }
    PermutationTable::new(m, modulus, width)
}

/// Constants for the shift-and-add modular multiplier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModularArithmeticPlan {
    pub width: u32,
    pub modulus: u64,
    pub multiplier: u64,
    /// `2^n - N`; adding it to an `n`-bit value overflows iff the value is `>= N`.
    pub nbar: u64,
    /// `a 2^i mod N` for `i < n`.
    pub multiplier_constants: Vec<u64>,
    /// `a^{-1} 2^i mod N`, used to uncompute the input register.
    pub inverse_constants: Vec<u64>,
}

impl ModularArithmeticPlan {
    pub fn new(multiplier: u64, modulus: u64, width: u32) -> Result<Self> {
        if width == 0 || width as usize > MAX_ADDER_BITS {
            return Err(Error::Capacity(format!(
                "arithmetic width {width} outside 1..={MAX_ADDER_BITS}"
            )));
        }
        if modulus < 2 || modulus > 1u64 << width {
            return Err(Error::Capacity(format!(
                "modulus {modulus} does not fit a {width}-qubit register"
            )));
        }
        let multiplier = multiplier % modulus;
        let inverse = mod_inverse(multiplier, modulus).ok_or(Error::NotCoprime {
            a: multiplier,
            modulus,
            gcd: gcd_raw(multiplier, modulus),
        })?;
        let constants = |c: u64| -> Vec<u64> {
            (0..width)
                .map(|i| ((c as u128) << i).rem_euclid(modulus as u128) as u64)
                .collect()
        };
        Ok(Self {
            width,
            modulus,
            multiplier,
            nbar: (1u64 << width) - modulus,
            multiplier_constants: constants(multiplier),
            inverse_constants: constants(inverse),
        })
    }

    /// `-N` as an `(n+1)`-bit two's-complement constant, i.e. `nbar + 2^n`.
    pub fn negated_modulus(&self) -> u64 {
        self.nbar + (1u64 << self.width)
    }
}

/// Qubit layout of [`modular_multiplier_circuit`] for an `n`-bit work register.
///
/// | qubits            | role                                   |
/// |-------------------|----------------------------------------|
/// | `0..n`            | `x`, multiplied in place               |
/// | `n..2n+1`         | accumulator (one overflow bit)         |
/// | `2n+1..3n+2`      | constant register                      |
/// | `3n+2`            | adder carry-in                         |
/// | `3n+3`            | modular-reduction flag                 |
/// | `3n+4`            | range guard (`x < N`)                  |
/// | `3n+5`            | control                                |
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiplierLayout {
    n: usize,
}

impl MultiplierLayout {
    pub fn new(width: u32) -> Self {
        Self { n: width as usize }
    }

    pub fn x(&self) -> Vec<usize> {
        (0..self.n).collect()
    }

    pub fn acc(&self) -> Vec<usize> {
        (self.n..2 * self.n + 1).collect()
    }

    pub fn konst(&self) -> Vec<usize> {
        (2 * self.n + 1..3 * self.n + 2).collect()
    }

    pub fn carry(&self) -> usize {
        3 * self.n + 2
    }

    pub fn flag(&self) -> usize {
        3 * self.n + 3
    }

    pub fn guard(&self) -> usize {
        3 * self.n + 4
    }

    pub fn control(&self) -> usize {
        3 * self.n + 5
    }

    /// Ancillas between the work register and the control.
    pub fn ancilla_count(&self) -> usize {
        2 * self.n + 5
    }

    /// Work register plus ancillas, excluding the control.
    pub fn total(&self) -> usize {
        self.n + self.ancilla_count()
    }

    pub fn num_qubits(&self) -> usize {
        self.total() + 1
    }

    /// Bit mask of every ancilla qubit.
    pub fn ancilla_mask(&self) -> u64 {
        ((1u64 << self.ancilla_count()) - 1) << self.n
    }
}

fn maj(c: &mut Circuit, carry: usize, b: usize, a: usize) -> Result<()> {
    c.push(Gate::cx(a, b))?;
    c.push(Gate::cx(a, carry))?;
    c.push(Gate::ccx(carry, b, a))
}

fn uma(c: &mut Circuit, carry: usize, b: usize, a: usize) -> Result<()> {
    c.push(Gate::ccx(carry, b, a))?;
    c.push(Gate::cx(a, carry))?;
    c.push(Gate::cx(carry, b))
}

fn maj_inverse(c: &mut Circuit, carry: usize, b: usize, a: usize) -> Result<()> {
    c.push(Gate::ccx(carry, b, a))?;
    c.push(Gate::cx(a, carry))?;
    c.push(Gate::cx(a, b))
}

/// Cuccaro adder: `b += a` over `a.len()` bits, `carry_out ^= carry`.
/// `carry_in` must be a clean ancilla and is restored.
fn cuccaro_add(
    c: &mut Circuit,
    a: &[usize],
    b: &[usize],
    carry_in: usize,
    carry_out: Option<usize>,
) -> Result<()> {
    let n = a.len();
    debug_assert_eq!(n, b.len());
    let below = |i: usize| if i == 0 { carry_in } else { a[i - 1] };
    for i in 0..n {
        maj(c, below(i), b[i], a[i])?;
    }
    if let Some(z) = carry_out {
        c.push(Gate::cx(a[n - 1], z))?;
    }
    for i in (0..n).rev() {
        uma(c, below(i), b[i], a[i])?;
    }
    Ok(())
}

/// `carry_out ^= carry(a + b)`, leaving `a` and `b` unchanged.
fn carry_only(c: &mut Circuit, a: &[usize], b: &[usize], carry_in: usize, carry_out: usize) -> Result<()> {
    let n = a.len();
    let below = |i: usize| if i == 0 { carry_in } else { a[i - 1] };
    for i in 0..n {
        maj(c, below(i), b[i], a[i])?;
    }
    c.push(Gate::cx(a[n - 1], carry_out))?;
    for i in (0..n).rev() {
        maj_inverse(c, below(i), b[i], a[i])?;
    }
    Ok(())
}

/// `b += a (mod 2^m)` for `m`-bit registers.
fn add_mod_pow2(c: &mut Circuit, a: &[usize], b: &[usize], carry_in: usize) -> Result<()> {
    let m = a.len();
    if m == 1 {
        return c.push(Gate::cx(a[0], b[0]));
    }
    cuccaro_add(c, &a[..m - 1], &b[..m - 1], carry_in, Some(b[m - 1]))?;
    c.push(Gate::cx(a[m - 1], b[m - 1]))
}

fn sub_mod_pow2(c: &mut Circuit, a: &[usize], b: &[usize], carry_in: usize) -> Result<()> {
    let mut tmp = Circuit::new(c.num_qubits());
    add_mod_pow2(&mut tmp, a, b, carry_in)?;
    for g in tmp.inverse().gates() {
        c.push(g.clone())?;
    }
    Ok(())
}

/// XORs the bits of `value` into `reg`, each flip controlled on `controls`.
fn load_constant(c: &mut Circuit, value: u64, reg: &[usize], controls: &[usize]) -> Result<()> {
    for (i, &q) in reg.iter().enumerate() {
        if (value >> i) & 1 == 1 {
            c.push(Gate::mcx(controls, q))?;
        }
    }
    Ok(())
}

/// Ripple-carry adder fragment on `2n + 2` qubits.
///
/// Layout: `a` on `0..n`, `b` on `n..2n+1` (the top bit receives the carry-out),
/// carry-in ancilla at `2n+1`. Maps `|a, b, 0> -> |a, (a + b) mod 2^{n+1}, 0>`
/// using only CNOT and Toffoli gates.
pub fn ripple_carry_adder(n: usize) -> Result<Circuit> {
    if n == 0 {
        return Err(Error::InvalidArgument("adder width must be at least 1".into()));
    }
    if n > MAX_ADDER_BITS {
        return Err(Error::Capacity(format!(
            "adder width {n} exceeds {MAX_ADDER_BITS}"
        )));
    }
    let mut c = Circuit::with_registers(&[("a", n), ("b", n + 1), ("carry", 1)]);
    let a: Vec<usize> = (0..n).collect();
    let b: Vec<usize> = (n..2 * n).collect();
    cuccaro_add(&mut c, &a, &b, 2 * n + 1, Some(2 * n))?;
    Ok(c)
}

/// `acc = (acc + k) mod N` when every qubit in `controls` is set, for `acc < N`.
///
/// Adds the constant, subtracts `N` by adding its two's complement, records the
/// sign in `flag`, adds `N` back under `flag`, then clears `flag` by comparing
/// the result against `k`.
fn modular_add_constant(
    c: &mut Circuit,
    plan: &ModularArithmeticPlan,
    k: u64,
    layout: &MultiplierLayout,
    controls: &[usize],
) -> Result<()> {
    let acc = layout.acc();
    let konst = layout.konst();
    let carry = layout.carry();
    let flag = layout.flag();
    let top = *acc.last().expect("accumulator is non-empty");

    let add_const = |c: &mut Circuit, value: u64, ctl: &[usize], subtract: bool| -> Result<()> {
        load_constant(c, value, &konst, ctl)?;
        if subtract {
            sub_mod_pow2(c, &konst, &acc, carry)?;
        } else {
            add_mod_pow2(c, &konst, &acc, carry)?;
        }
        load_constant(c, value, &konst, ctl)
    };

    add_const(c, k, controls, false)?;
    add_const(c, plan.negated_modulus(), &[], false)?;
    c.push(Gate::cx(top, flag))?;
    add_const(c, plan.modulus, &[flag], false)?;
    add_const(c, k, controls, true)?;
    c.push(Gate::x(top))?;
    c.push(Gate::cx(top, flag))?;
    c.push(Gate::x(top))?;
    add_const(c, k, controls, false)
}

fn range_guard(c: &mut Circuit, plan: &ModularArithmeticPlan, layout: &MultiplierLayout) -> Result<()> {
    let n = plan.width as usize;
    let konst = &layout.konst()[..n];
    load_constant(c, plan.nbar, konst, &[])?;
    carry_only(c, konst, &layout.x(), layout.carry(), layout.guard())?;
    load_constant(c, plan.nbar, konst, &[])
}

/// Controlled in-place multiplication by `a` modulo `N` on an `n`-bit register.
///
/// See [`MultiplierLayout`] for the qubit assignment. With the control set and
/// `x < N` the register becomes `a x mod N`; otherwise it is unchanged. Every
/// ancilla starts and ends in `|0>`.
pub fn modular_multiplier_circuit(a: u64, modulus: u64, width: u32) -> Result<Circuit> {
    let plan = ModularArithmeticPlan::new(a, modulus, width)?;
    let layout = MultiplierLayout::new(width);
    let n = width as usize;
    let mut c = Circuit::with_registers(&[
        ("x", n),
        ("acc", n + 1),
        ("const", n + 1),
        ("carry", 1),
        ("flag", 1),
        ("guard", 1),
        ("control", 1),
    ]);
    let x = layout.x();
    let acc = layout.acc();
    let ctrl = layout.control();
    let guard = layout.guard();

    // guard = [x < N]
    range_guard(&mut c, &plan, &layout)?;
    c.push(Gate::x(guard))?;

    for (i, &k) in plan.multiplier_constants.iter().enumerate() {
        modular_add_constant(&mut c, &plan, k, &layout, &[ctrl, guard, x[i]])?;
    }
    for i in 0..n {
        c.push(Gate::new(GateKind::Swap, vec![x[i], acc[i]], vec![ctrl, guard]))?;
    }
    // acc now holds the original x; subtract a^{-1} (a x) to clear it
    let mut clear = Circuit::new(c.num_qubits());
    for (i, &k) in plan.inverse_constants.iter().enumerate() {
        modular_add_constant(&mut clear, &plan, k, &layout, &[ctrl, guard, x[i]])?;
    }
    for g in clear.inverse().gates() {
        c.push(g.clone())?;
    }

    c.push(Gate::x(guard))?;
    range_guard(&mut c, &plan, &layout)?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(c: &Circuit, input: u64) -> u64 {
        c.apply_to_basis(input).unwrap()
    }

    #[test]
    fn permutation_examples() {
        let t = mod_mult_permutation(7, 15, 4).unwrap();
        assert_eq!(
            [t.apply(1), t.apply(7), t.apply(4), t.apply(13)],
            [7, 4, 13, 1]
        );
        assert_eq!(t.apply(15), 15);

        let id = mod_mult_permutation(1, 15, 4).unwrap();
        assert!((0..16).all(|x| id.apply(x) == x));

        let t = mod_mult_permutation(2, 21, 5).unwrap();
        assert!((21..32).all(|x| t.apply(x) == x));
        assert!(matches!(
            mod_mult_permutation(3, 21, 5),
            Err(Error::NotCoprime { gcd: 3, .. })
        ));
        assert!(matches!(mod_mult_permutation(2, 21, 4), Err(Error::Capacity(_))));
    }

    #[test]
    fn power_table_examples() {
        let t = controlled_power_table(7, 15, 1, 4).unwrap();
        assert_eq!(t, mod_mult_permutation(4, 15, 4).unwrap());
        let t = controlled_power_table(7, 15, 2, 4).unwrap();
        assert!((0..15).all(|x| t.apply(x) == x));
        for (a, n, w) in [(2u64, 21u64, 5u32), (7, 15, 4), (4, 35, 6)] {
            assert_eq!(
                controlled_power_table(a, n, 0, w).unwrap(),
                mod_mult_permutation(a, n, w).unwrap()
            );
        }
    }

    #[test]
    fn power_table_matches_composition() {
        for n in [15u64, 21, 33, 35] {
            let w = crate::numtheory::bit_width(n);
            for a in 2..n {
                if gcd_raw(a, n) != 1 {
                    continue;
                }
                let base = mod_mult_permutation(a, n, w).unwrap();
                for k in 0..4u32 {
                    let t = controlled_power_table(a, n, k, w).unwrap();
                    assert!(t.is_bijection());
                    for x in 0..n as usize {
                        let mut y = x;
                        for _ in 0..(1u32 << k) {
                            y = base.apply(y);
                        }
                        assert_eq!(t.apply(x), y);
                    }
                }
            }
        }
    }

    #[test]
    fn inverse_table_undoes_table() {
        let t = mod_mult_permutation(8, 35, 6).unwrap();
        let inv = t.inverse();
        assert_eq!(inv.multiplier(), 22);
        assert!((0..64).all(|x| inv.apply(t.apply(x)) == x));
    }

    #[test]
    fn adder_examples() {
        // n = 2: a on qubits 0-1, b on 2-4, carry on 5
        let c = ripple_carry_adder(2).unwrap();
        assert_eq!(run(&c, 1 | (2 << 2)), 1 | (3 << 2));
        // n = 3: a on 0-2, b on 3-6
        let c = ripple_carry_adder(3).unwrap();
        let out = run(&c, 5 | (6 << 3));
        assert_eq!(out, 5 | (11 << 3));
        assert_eq!((out >> 6) & 1, 1, "carry bit set");
        for b in 0..16u64 {
            assert_eq!(run(&c, b << 3), b << 3);
        }
        assert!(ripple_carry_adder(0).is_err());
    }

    #[test]
    fn adder_uses_only_x_family_gates() {
        let c = ripple_carry_adder(4).unwrap();
        for g in c.gates() {
            assert!(matches!(g.kind, GateKind::PauliX));
            assert!(g.controls.len() <= 2);
        }
    }

    #[test]
    fn plan_constants() {
        let p = ModularArithmeticPlan::new(7, 15, 4).unwrap();
        assert_eq!(p.nbar, 1);
        assert_eq!(p.multiplier_constants, vec![7, 14, 13, 11]);
        assert_eq!(p.inverse_constants, vec![13, 11, 7, 14]);
        assert_eq!(p.negated_modulus(), 17);
        assert!(ModularArithmeticPlan::new(5, 15, 4).is_err());
    }

    #[test]
    fn multiplier_examples() {
        for (a, n, w) in [(7u64, 15u64, 4u32), (2, 21, 5), (1, 15, 4)] {
            let layout = MultiplierLayout::new(w);
            let c = modular_multiplier_circuit(a, n, w).unwrap();
            assert_eq!(c.num_qubits(), layout.num_qubits());
            let table = mod_mult_permutation(a, n, w).unwrap();
            let ctrl = 1u64 << layout.control();
            for x in 0..n {
                let out = run(&c, x | ctrl);
                assert_eq!(out & layout.ancilla_mask(), 0);
                assert_eq!(out & ((1 << w) - 1), table.apply(x as usize) as u64);
            }
        }
    }
}
