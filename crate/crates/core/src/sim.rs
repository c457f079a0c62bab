//! Dense statevector execution, shot sampling and the closed-form ideal
//! phase-estimation distribution.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Deserialize;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};

/// Largest register the dense engine accepts (2^26 amplitudes, 1 GiB).
pub const MAX_QUBITS: usize = 26;

/// Generator used for every sampled artifact.
pub type SimRng = ChaCha20Rng;

/// Name recorded in artifact metadata so histograms can be regenerated.
pub const RNG_ALGORITHM: &str = "chacha20";

/// Seeded generator for independent stream `stream` of `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Normalized amplitudes over `2^q` basis states; qubit `i` is bit `i` of the index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The basis state `|index>` on `num_qubits` qubits.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "{num_qubits} qubits exceed the dense-simulation limit of {MAX_QUBITS}"
            )));
        }
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} outside 0..{dim}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes; the length must be a power of two and the norm 1.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude count {dim} is not a power of two"
            )));
        }
        let num_qubits = dim.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "{num_qubits} qubits exceed the dense-simulation limit of {MAX_QUBITS}"
            )));
        }
        let s = Self {
            num_qubits,
            amplitudes,
        };
        if (s.norm_sqr() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "state is not normalized (norm^2 = {})",
                s.norm_sqr()
            )));
        }
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    /// Outcome distribution of measuring `qubits`; bit `i` of the outcome is `qubits[i]`.
    /// All other qubits are traced out.
    pub fn marginal(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        if qubits.iter().any(|&q| q >= self.num_qubits) {
            return Err(Error::InvalidArgument("marginal qubit out of range".into()));
        }
        let mut probs = vec![0.0; 1usize << qubits.len()];
        let low_block = qubits.iter().enumerate().all(|(i, &q)| i == q);
        if low_block {
            let mask = probs.len() - 1;
            for (i, a) in self.amplitudes.iter().enumerate() {
                probs[i & mask] += a.norm_sqr();
            }
        } else {
            for (i, a) in self.amplitudes.iter().enumerate() {
                let y = qubits
                    .iter()
                    .enumerate()
                    .fold(0usize, |y, (b, &q)| y | ((i >> q) & 1) << b);
                probs[y] += a.norm_sqr();
            }
        }
        Ok(probs)
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        let q = self.num_qubits;
        if gate.targets.iter().chain(&gate.controls).any(|&i| i >= q) {
            return Err(Error::InvalidCircuit(format!(
                "{} gate addresses a qubit outside the {q}-qubit state",
                gate.kind_name()
            )));
        }
        let cmask = gate.controls.iter().fold(0usize, |m, &c| m | 1 << c);
        let amps = &mut self.amplitudes;
        match &gate.kind {
            GateKind::Hadamard => {
                let t = 1usize << gate.targets[0];
                for_each_base(q, cmask | t, cmask, |i| {
                    let (a, b) = (amps[i], amps[i | t]);
                    amps[i] = (a + b) * FRAC_1_SQRT_2;
                    amps[i | t] = (a - b) * FRAC_1_SQRT_2;
                });
            }
            GateKind::PauliX => {
                let t = 1usize << gate.targets[0];
                for_each_base(q, cmask | t, cmask, |i| amps.swap(i, i | t));
            }
            GateKind::ControlledPhase { angle } => {
                let t = 1usize << gate.targets[0];
                let phase = Complex64::from_polar(1.0, *angle);
                for_each_base(q, cmask | t, cmask | t, |i| amps[i] *= phase);
            }
            GateKind::Swap => {
                let (a, b) = (1usize << gate.targets[0], 1usize << gate.targets[1]);
                for_each_base(q, cmask | a | b, cmask | a, |i| amps.swap(i, i ^ a ^ b));
            }
            GateKind::ControlledPermutation { table } => {
                let src = amps.clone();
                let contiguous = gate.targets.windows(2).all(|w| w[1] == w[0] + 1);
                if contiguous {
                    let start = gate.targets[0];
                    let reg_mask = (table.size() - 1) << start;
                    for_each_base(q, cmask, cmask, |i| {
                        let v = (i & reg_mask) >> start;
                        let j = (i & !reg_mask) | (table.apply(v) << start);
                        amps[j] = src[i];
                    });
                } else {
                    let reg_mask = gate.targets.iter().fold(0usize, |m, &t| m | 1 << t);
                    for_each_base(q, cmask, cmask, |i| {
                        let v = gate
                            .targets
                            .iter()
                            .enumerate()
                            .fold(0usize, |v, (b, &t)| v | ((i >> t) & 1) << b);
                        let image = table.apply(v);
                        let scattered = gate
                            .targets
                            .iter()
                            .enumerate()
                            .fold(0usize, |s, (b, &t)| s | ((image >> b) & 1) << t);
                        amps[(i & !reg_mask) | scattered] = src[i];
                    });
                }
            }
            GateKind::Measure => {}
        }
        Ok(())
    }
}

/// Calls `f(i)` for every index whose bits under `fixed` equal `value`.
#[inline]
fn for_each_base(num_qubits: usize, fixed: usize, value: usize, mut f: impl FnMut(usize)) {
    let free_bits = num_qubits - fixed.count_ones() as usize;
    let positions: Vec<usize> = (0..num_qubits).filter(|&b| fixed >> b & 1 == 1).collect();
    for k in 0..(1usize << free_bits) {
        let mut i = k;
        for &p in &positions {
            i = ((i >> p) << (p + 1)) | (i & ((1 << p) - 1));
        }
        f(i | value);
    }
}

/// Runs `circuit` on the basis state `|initial>`.
pub fn execute(circuit: &Circuit, initial: usize) -> Result<StateVector> {
    let mut state = StateVector::basis(circuit.num_qubits(), initial)?;
    for gate in circuit.gates() {
        state.apply(gate)?;
    }
    debug_assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
    Ok(state)
}

/// Shot counts over the `L = 2^t` outcomes of a `t`-bit register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    phase_bits: u32,
    counts: Vec<u64>,
    shots: u64,
}

impl Histogram {
    pub fn new(phase_bits: u32) -> Result<Self> {
        if phase_bits == 0 || phase_bits as usize > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "histogram width {phase_bits} outside 1..={MAX_QUBITS}"
            )));
        }
        Ok(Self {
            phase_bits,
            counts: vec![0; 1 << phase_bits],
            shots: 0,
        })
    }

    /// Builds from dense counts; the length must be `2^t` with `t >= 1`.
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let len = counts.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "histogram length {len} is not a power of two >= 2"
            )));
        }
        let shots = counts.iter().sum();
        Ok(Self {
            phase_bits: len.trailing_zeros(),
            counts,
            shots,
        })
    }

    pub fn record(&mut self, y: u64, count: u64) -> Result<()> {
        let slot = self.counts.get_mut(y as usize).ok_or_else(|| {
            Error::InvalidArgument(format!("outcome {y} outside grid of {}", 1u64 << self.phase_bits))
        })?;
        *slot += count;
        self.shots += count;
        Ok(())
    }

    pub fn phase_bits(&self) -> u32 {
        self.phase_bits
    }

    pub fn grid_size(&self) -> u64 {
        1 << self.phase_bits
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn count(&self, y: u64) -> u64 {
        self.counts.get(y as usize).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Outcome `y` as a `t`-character bitstring, most significant bit first.
    pub fn bitstring(&self, y: u64) -> String {
        format!("{:0width$b}", y, width = self.phase_bits as usize)
    }

    /// Writes `y,bitstring,count` rows for every outcome, preceded by `# key=value`
    /// metadata lines.
    pub fn write_csv<W: Write>(&self, mut out: W, metadata: &[(String, String)]) -> Result<()> {
        for (k, v) in metadata {
            writeln!(out, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["y", "bitstring", "count"])?;
        for (y, &c) in self.counts.iter().enumerate() {
            w.write_record([y.to_string(), self.bitstring(y as u64), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses the CSV written by [`Histogram::write_csv`]. Rows may be omitted
    /// (count zero); the width is taken from the bitstring column.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            y: u64,
            bitstring: String,
            count: u64,
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut width: Option<usize> = None;
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<Row>() {
            let row = rec?;
            let w = row.bitstring.len();
            if w == 0 || !row.bitstring.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(Error::InvalidArgument(format!(
                    "malformed bitstring {:?}",
                    row.bitstring
                )));
            }
            if *width.get_or_insert(w) != w {
                return Err(Error::InvalidArgument("inconsistent bitstring widths".into()));
            }
            let parsed = u64::from_str_radix(&row.bitstring, 2).expect("validated binary");
            if parsed != row.y {
                return Err(Error::InvalidArgument(format!(
                    "row y={} disagrees with bitstring {}",
                    row.y, row.bitstring
                )));
            }
            rows.push((row.y, row.count));
        }
        let width = width.ok_or_else(|| Error::InvalidArgument("histogram has no rows".into()))?;
        let mut h = Histogram::new(width as u32)?;
        for (y, c) in rows {
            h.record(y, c)?;
        }
        Ok(h)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let counts: BTreeMap<String, u64> = self
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(y, &c)| (y.to_string(), c))
            .collect();
        serde_json::json!({
            "phase_bits": self.phase_bits,
            "grid_size": self.grid_size(),
            "shots": self.shots,
            "counts": counts,
        })
    }

    pub fn from_json_value(v: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            phase_bits: u32,
            counts: BTreeMap<String, u64>,
            #[serde(default)]
            shots: Option<u64>,
        }
        let doc: Doc = serde_json::from_value(v.clone())?;
        let mut h = Histogram::new(doc.phase_bits)?;
        for (k, c) in doc.counts {
            let y: u64 = k
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad outcome key {k:?}")))?;
            h.record(y, c)?;
        }
        if let Some(s) = doc.shots {
            if s != h.shots {
                return Err(Error::InvalidArgument(format!(
                    "declared shots {s} but counts sum to {}",
                    h.shots
                )));
            }
        }
        Ok(h)
    }
}

/// Draws `shots` outcomes from a (not necessarily normalized) distribution.
pub fn sample_distribution<R: Rng>(probs: &[f64], shots: u64, rng: &mut R) -> Result<Histogram> {
    let mut h = Histogram::from_counts(vec![0; probs.len()])?;
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut total = 0.0;
    for &p in probs {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidArgument(format!("invalid probability {p}")));
        }
        total += p;
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Err(Error::InvalidArgument("distribution has zero mass".into()));
    }
    let last_nonzero = probs.iter().rposition(|&p| p > 0.0).expect("positive mass");
    for _ in 0..shots {
        let u = rng.random::<f64>() * total;
        let y = cumulative.partition_point(|&c| c <= u).min(last_nonzero);
        h.counts[y] += 1;
    }
    h.shots = shots;
    Ok(h)
}

/// Samples the low `phase_bits` qubits of `state` `shots` times with a seeded generator.
pub fn sample(state: &StateVector, phase_bits: u32, shots: u64, seed: u64) -> Result<Histogram> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let qubits: Vec<usize> = (0..phase_bits as usize).collect();
    let probs = state.marginal(&qubits)?;
    sample_distribution(&probs, shots, &mut rng_stream(seed, 0))
}

/// Exact noiseless outcome distribution of order-finding phase estimation:
/// an equal mixture over `s = 0..r` of squared Dirichlet kernels centred at `s/r`.
pub fn ideal_qpe_distribution(order: u64, phase_bits: u32) -> Result<Vec<f64>> {
    if order == 0 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    if phase_bits == 0 || phase_bits as usize > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!(
            "phase bits {phase_bits} outside 1..={MAX_QUBITS}"
        )));
    }
    let grid = 1u64 << phase_bits;
    let r = order as i128;
    let l = grid as i128;
    let mut probs = Vec::with_capacity(grid as usize);
    for y in 0..l {
        let mut p = 0.0;
        for s in 0..r {
            p += fejer_kernel((s * l - y * r).rem_euclid(r * l), r, l);
        }
        probs.push(p / order as f64);
    }
    Ok(probs)
}

/// `sin^2(pi L d) / (L^2 sin^2(pi d))` for `d = num / (r L)` with `0 <= num < r L`.
fn fejer_kernel(num: i128, r: i128, l: i128) -> f64 {
    if num == 0 {
        return 1.0;
    }
    let den = r * l;
    let folded = num.min(den - num);
    let inner = (PI * folded as f64 / den as f64).sin();
    let outer = (PI * (num % r) as f64 / r as f64).sin();
    let lf = l as f64;
    (outer * outer) / (lf * lf * inner * inner)
}

/// Total-variation distance between two distributions of equal length.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must have equal length");
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
