//! Gate-level circuit representation and the phase-estimation scaffold.
//!
//! Qubit `i` is bit `i` of a basis-state index (little-endian). Registers are
//! contiguous qubit ranges. The measured outcome of a circuit is the integer
//! whose bit `i` is the result of measuring `measurement_map[i]`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::arith::{self, PermutationTable};
use crate::error::{Error, Result};
use crate::numtheory::{mod_pow_raw, OrderFindingInstance};

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GateKind {
    Hadamard,
    /// X on the target; with controls this is CNOT / Toffoli / multi-controlled X.
    PauliX,
    /// Multiplies the amplitude by `e^{i angle}` when the target and all controls are 1.
    ControlledPhase { angle: f64 },
    Swap,
    /// Permutes the basis states of the target register (little-endian) by the table.
    ControlledPermutation { table: Arc<PermutationTable> },
    Measure,
}

#[derive(Debug, Clone, Serialize)]
pub struct Gate {
    #[serde(flatten)]
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<usize>,
}

impl Gate {
    pub fn h(q: usize) -> Self {
        Self::new(GateKind::Hadamard, vec![q], vec![])
    }

    pub fn x(q: usize) -> Self {
        Self::new(GateKind::PauliX, vec![q], vec![])
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self::new(GateKind::PauliX, vec![target], vec![control])
    }

    pub fn ccx(c0: usize, c1: usize, target: usize) -> Self {
        Self::new(GateKind::PauliX, vec![target], vec![c0, c1])
    }

    pub fn mcx(controls: &[usize], target: usize) -> Self {
        Self::new(GateKind::PauliX, vec![target], controls.to_vec())
    }

    pub fn cphase(control: usize, target: usize, angle: f64) -> Self {
        Self::new(GateKind::ControlledPhase { angle }, vec![target], vec![control])
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Self::new(GateKind::Swap, vec![a, b], vec![])
    }

    pub fn new(kind: GateKind, targets: Vec<usize>, controls: Vec<usize>) -> Self {
        Self {
            kind,
            targets,
            controls,
        }
    }

    /// Adds `extra` controls to the gate.
    pub fn controlled_by(mut self, extra: &[usize]) -> Self {
        self.controls.extend_from_slice(extra);
        self
    }

    /// True for gates that map basis states to basis states.
    pub fn is_classical(&self) -> bool {
        matches!(
            self.kind,
            GateKind::PauliX | GateKind::Swap | GateKind::ControlledPermutation { .. } | GateKind::Measure
        )
    }

    fn inverse(&self) -> Self {
        let kind = match &self.kind {
            GateKind::ControlledPhase { angle } => GateKind::ControlledPhase { angle: -angle },
            GateKind::ControlledPermutation { table } => GateKind::ControlledPermutation {
                table: Arc::new(table.inverse()),
            },
            other => other.clone(),
        };
        Self::new(kind, self.targets.clone(), self.controls.clone())
    }

    fn validate(&self, num_qubits: usize) -> Result<()> {
        let expected_targets = match &self.kind {
            GateKind::Swap => Some(2),
            GateKind::ControlledPermutation { table } => Some(table.width() as usize),
            GateKind::Measure => None,
            _ => Some(1),
        };
        if let Some(n) = expected_targets {
            if self.targets.len() != n {
                return Err(Error::InvalidCircuit(format!(
                    "{:?} expects {n} targets, got {}",
                    self.kind_name(),
                    self.targets.len()
                )));
            }
        }
        if let GateKind::ControlledPhase { angle } = self.kind {
            if !angle.is_finite() {
                return Err(Error::InvalidCircuit("phase angle must be finite".into()));
            }
        }
        let mut seen = vec![false; num_qubits];
        for &q in self.targets.iter().chain(&self.controls) {
            if q >= num_qubits {
                return Err(Error::InvalidCircuit(format!(
                    "qubit {q} out of range for {num_qubits}-qubit circuit"
                )));
            }
            if seen[q] {
                return Err(Error::InvalidCircuit(format!(
                    "qubit {q} used twice in {}",
                    self.kind_name()
                )));
            }
            seen[q] = true;
        }
        Ok(())
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            GateKind::Hadamard => "h",
            GateKind::PauliX => "x",
            GateKind::ControlledPhase { .. } => "phase",
            GateKind::Swap => "swap",
            GateKind::ControlledPermutation { .. } => "permutation",
            GateKind::Measure => "measure",
        }
    }
}

/// A named contiguous range of qubits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Register {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

impl Register {
    pub fn qubit(&self, i: usize) -> usize {
        assert!(i < self.len, "index {i} outside register {}", self.name);
        self.start + i
    }

    pub fn qubits(&self) -> Vec<usize> {
        (self.start..self.start + self.len).collect()
    }
}

/// Which implementation of the controlled modular multiplier to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Dense permutation of the work register.
    #[serde(alias = "perm")]
    Permutation,
    /// Reversible ripple-carry arithmetic with explicit ancillas.
    #[serde(alias = "arith")]
    Arithmetic,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perm" | "permutation" => Ok(Backend::Permutation),
            "arith" | "arithmetic" => Ok(Backend::Arithmetic),
            _ => Err(Error::InvalidArgument(format!(
                "unknown backend {s:?} (expected perm or arith)"
            ))),
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Permutation => "perm",
            Backend::Arithmetic => "arith",
        })
    }
}

/// Optional provenance carried by phase-estimation circuits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QpeMetadata {
    pub modulus: u64,
    pub base: u64,
    pub order: u64,
    pub phase_bits: u32,
    pub backend: Backend,
}

#[derive(Debug, Clone, Serialize)]
pub struct Circuit {
    num_qubits: usize,
    registers: Vec<Register>,
    gates: Vec<Gate>,
    /// Classical bit `i` of the outcome is read from qubit `measurement_map[i]`.
    measurement_map: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    metadata: Option<QpeMetadata>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            registers: Vec::new(),
            gates: Vec::new(),
            measurement_map: Vec::new(),
            metadata: None,
        }
    }

    /// Builds an empty circuit from consecutive registers.
    pub fn with_registers(layout: &[(&str, usize)]) -> Self {
        let mut c = Self::new(0);
        for &(name, len) in layout {
            c.add_register(name, len);
        }
        c
    }

    /// Appends a fresh register after the existing qubits.
    pub fn add_register(&mut self, name: &str, len: usize) -> Register {
        let reg = Register {
            name: name.to_string(),
            start: self.num_qubits,
            len,
        };
        self.num_qubits += len;
        self.registers.push(reg.clone());
        reg
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn register(&self, name: &str) -> Option<&Register> {
        self.registers.iter().find(|r| r.name == name)
    }

    pub fn measurement_map(&self) -> &[usize] {
        &self.measurement_map
    }

    pub fn metadata(&self) -> Option<&QpeMetadata> {
        self.metadata.as_ref()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Appends `fragment`, mapping its qubit `i` to `qubit_map[i]`.
    pub fn append_mapped(&mut self, fragment: &Circuit, qubit_map: &[usize]) -> Result<()> {
        if qubit_map.len() != fragment.num_qubits {
            return Err(Error::InvalidCircuit(format!(
                "qubit map has {} entries for a {}-qubit fragment",
                qubit_map.len(),
                fragment.num_qubits
            )));
        }
        for g in &fragment.gates {
            let mapped = Gate::new(
                g.kind.clone(),
                g.targets.iter().map(|&q| qubit_map[q]).collect(),
                g.controls.iter().map(|&q| qubit_map[q]).collect(),
            );
            self.push(mapped)?;
        }
        Ok(())
    }

    /// Appends `fragment` with every gate additionally controlled on `controls`.
    pub fn append_controlled(
        &mut self,
        fragment: &Circuit,
        qubit_map: &[usize],
        controls: &[usize],
    ) -> Result<()> {
        let mut tmp = Circuit::new(self.num_qubits);
        tmp.append_mapped(fragment, qubit_map)?;
        for g in tmp.gates {
            self.push(g.controlled_by(controls))?;
        }
        Ok(())
    }

    /// The adjoint circuit: gates reversed and individually inverted.
    pub fn inverse(&self) -> Circuit {
        let mut out = self.clone();
        out.gates = self
            .gates
            .iter()
            .rev()
            .filter(|g| !matches!(g.kind, GateKind::Measure))
            .map(Gate::inverse)
            .collect();
        out.measurement_map.clear();
        out
    }

    /// Declares the measured qubits; classical bit `i` reads `qubits[i]`.
    pub fn measure(&mut self, qubits: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.num_qubits];
        for &q in qubits {
            if q >= self.num_qubits || seen[q] {
                return Err(Error::InvalidCircuit(format!(
                    "measurement map must list distinct qubits, bad entry {q}"
                )));
            }
            seen[q] = true;
        }
        for &q in qubits {
            self.gates.push(Gate::new(GateKind::Measure, vec![q], vec![]));
        }
        self.measurement_map = qubits.to_vec();
        Ok(())
    }

    /// Applies a circuit made only of basis-preserving gates to a basis state.
    pub fn apply_to_basis(&self, index: u64) -> Result<u64> {
        if self.num_qubits > 64 {
            return Err(Error::Capacity(format!(
                "{} qubits do not fit a 64-bit basis index",
                self.num_qubits
            )));
        }
        let mut state = index;
        for g in &self.gates {
            let ctrl_mask = g.controls.iter().fold(0u64, |m, &q| m | 1 << q);
            if state & ctrl_mask != ctrl_mask {
                continue;
            }
            match &g.kind {
                GateKind::PauliX => state ^= 1 << g.targets[0],
                GateKind::Swap => {
                    let (a, b) = (g.targets[0], g.targets[1]);
                    if (state >> a) & 1 != (state >> b) & 1 {
                        state ^= (1 << a) | (1 << b);
                    }
                }
                GateKind::ControlledPermutation { table } => {
                    let value = g
                        .targets
                        .iter()
                        .enumerate()
                        .fold(0usize, |v, (i, &q)| v | (((state >> q) & 1) as usize) << i);
                    let image = table.apply(value);
                    for (i, &q) in g.targets.iter().enumerate() {
                        state = (state & !(1 << q)) | ((((image >> i) & 1) as u64) << q);
                    }
                }
                GateKind::Measure => {}
                _ => {
                    return Err(Error::InvalidCircuit(format!(
                        "{} gate does not map basis states to basis states",
                        g.kind_name()
                    )))
                }
            }
        }
        Ok(state)
    }

    /// Count of gates by kind name.
    pub fn gate_counts(&self) -> std::collections::BTreeMap<&'static str, usize> {
        let mut m = std::collections::BTreeMap::new();
        for g in &self.gates {
            *m.entry(g.kind_name()).or_insert(0) += 1;
        }
        m
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Inverse quantum Fourier transform on `t` qubits.
///
/// Maps `(1/sqrt L) sum_x e^{2 pi i x y / L} |x>` to `|y>` with the
/// little-endian convention: a Hadamard and controlled-phase ladder with
/// angles `-pi / 2^j`, followed by the bit-reversal swap network.
pub fn inverse_qft(t: usize) -> Result<Circuit> {
    if t == 0 {
        return Err(Error::InvalidArgument("inverse QFT needs at least one qubit".into()));
    }
    let mut c = Circuit::new(t);
    c.registers.push(Register {
        name: "phase".into(),
        start: 0,
        len: t,
    });
    // qubit j starts with phase 0.y_{t-1-j} ... y_0; once the higher qubits are
    // decoded, the trailing bits are cancelled and the Hadamard reads y_{t-1-j}
    for j in (0..t).rev() {
        for m in ((j + 1)..t).rev() {
            let angle = -PI / (1u64 << (m - j)) as f64;
            c.push(Gate::cphase(m, j, angle))?;
        }
        c.push(Gate::h(j))?;
    }
    // the ladder leaves bit j of y on qubit t-1-j
    for i in 0..t / 2 {
        c.push(Gate::swap(i, t - 1 - i))?;
    }
    Ok(c)
}

/// Builds the parallel phase-estimation circuit for order finding.
///
/// Layout: phase register (qubits `0..t`), work register (`t..t+n`), then any
/// ancillas the backend needs. The work register is prepared in `|1>`; phase
/// qubit `k` controls multiplication by `a^{2^k} mod N`. Only the phase register
/// is measured.
pub fn build_qpe_circuit(
    instance: &OrderFindingInstance,
    phase_bits: u32,
    backend: Backend,
) -> Result<Circuit> {
    if phase_bits == 0 {
        return Err(Error::InvalidArgument("phase register needs at least one qubit".into()));
    }
    let t = phase_bits as usize;
    let n = instance.work_bits();
    let modulus = instance.modulus();
    if n > arith::MAX_TABLE_BITS {
        return Err(Error::Capacity(format!(
            "work register of {n} qubits exceeds the {}-qubit limit",
            arith::MAX_TABLE_BITS
        )));
    }

    let mut c = Circuit::new(0);
    let phase = c.add_register("phase", t);
    let work = c.add_register("work", n as usize);
    let multiplier_ancillas = match backend {
        Backend::Permutation => None,
        Backend::Arithmetic => {
            let layout = arith::MultiplierLayout::new(n);
            Some((c.add_register("ancilla", layout.ancilla_count()), layout))
        }
    };

    for q in phase.qubits() {
        c.push(Gate::h(q))?;
    }
    c.push(Gate::x(work.qubit(0)))?;

    let mut multiplier = instance.base();
    for k in 0..t {
        let control = phase.qubit(k);
        match &multiplier_ancillas {
            None => {
                let table = PermutationTable::new(multiplier, modulus, n)?;
                c.push(Gate::new(
                    GateKind::ControlledPermutation {
                        table: Arc::new(table),
                    },
                    work.qubits(),
                    vec![control],
                ))?;
            }
            Some((ancilla, layout)) => {
                if multiplier != 1 {
                    let frag = arith::modular_multiplier_circuit(multiplier, modulus, n)?;
                    let mut map = work.qubits();
                    map.extend(ancilla.qubits());
                    debug_assert_eq!(map.len(), layout.total());
                    map.push(control);
                    c.append_mapped(&frag, &map)?;
                }
            }
        }
        multiplier = mod_pow_raw(multiplier, 2, modulus);
    }

    let iqft = inverse_qft(t)?;
    c.append_mapped(&iqft, &phase.qubits())?;
    c.measure(&phase.qubits())?;
    c.metadata = Some(QpeMetadata {
        modulus,
        base: instance.base(),
        order: instance.order(),
        phase_bits,
        backend,
    });
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_qubit_inverse_qft_is_hadamard() {
        let c = inverse_qft(1).unwrap();
        assert_eq!(c.gates().len(), 1);
        assert!(matches!(c.gates()[0].kind, GateKind::Hadamard));
    }

    #[test]
    fn two_qubit_inverse_qft_gate_sequence() {
        let c = inverse_qft(2).unwrap();
        let kinds: Vec<_> = c.gates().iter().map(Gate::kind_name).collect();
        assert_eq!(kinds, ["h", "phase", "h", "swap"]);
        match c.gates()[1].kind {
            GateKind::ControlledPhase { angle } => assert!((angle + PI / 2.0).abs() < 1e-15),
            _ => unreachable!(),
        }
        assert!(inverse_qft(0).is_err());
    }

    #[test]
    fn paper_instances_register_sizes() {
        for (n, a, t, work) in [(15, 7, 9, 4), (21, 2, 11, 5), (35, 8, 10, 6)] {
            let inst = OrderFindingInstance::new(n, a).unwrap();
            let c = build_qpe_circuit(&inst, t, Backend::Permutation).unwrap();
            assert_eq!(c.register("phase").unwrap().len, t as usize);
            assert_eq!(c.register("work").unwrap().len, work);
            assert_eq!(c.num_qubits(), t as usize + work);
            assert_eq!(c.measurement_map(), &(0..t as usize).collect::<Vec<_>>()[..]);
        }
    }

    #[test]
    fn qpe_never_measures_work_register() {
        let inst = OrderFindingInstance::new(21, 2).unwrap();
        for backend in [Backend::Permutation, Backend::Arithmetic] {
            let c = build_qpe_circuit(&inst, 6, backend).unwrap();
            let work = c.register("work").unwrap().clone();
            for g in c.gates() {
                if matches!(g.kind, GateKind::Measure) {
                    assert!(g.targets[0] < work.start);
                }
            }
            assert_eq!(c.measurement_map().len(), 6);
        }
    }

    #[test]
    fn gate_validation_rejects_bad_qubits() {
        let mut c = Circuit::new(2);
        assert!(c.push(Gate::cx(0, 0)).is_err());
        assert!(c.push(Gate::x(2)).is_err());
        assert!(c.push(Gate::cphase(0, 1, f64::NAN)).is_err());
        assert!(c.push(Gate::new(GateKind::Swap, vec![0], vec![])).is_err());
        assert!(c.measure(&[0, 0]).is_err());
    }

    #[test]
    fn circuit_serializes_to_json() {
        let inst = OrderFindingInstance::new(15, 7).unwrap();
        let c = build_qpe_circuit(&inst, 3, Backend::Permutation).unwrap();
        let v: serde_json::Value = serde_json::from_str(&c.to_json().unwrap()).unwrap();
        assert_eq!(v["num_qubits"], 7);
        assert_eq!(v["metadata"]["backend"], "permutation");
        assert_eq!(v["gates"][0]["kind"], "hadamard");
        assert_eq!(v["measurement_map"].as_array().unwrap().len(), 3);
    }
}
