// SPDX-License-Identifier: Apache-2.0
//! Bit-parallel logic simulation and error metrics.
//!
//! Each signal is a packed row of bits, one bit per input vector, 64 vectors
//! per word. Bits past `num_vectors` in the last word are always zero.

use std::borrow::Cow;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::netlist::{GateId, GateKind, Netlist, NetlistError, Signal};

/// Largest input count accepted for exhaustive enumeration.
pub const MAX_EXHAUSTIVE_INPUTS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("exhaustive simulation of {0} inputs exceeds the limit of {MAX_EXHAUSTIVE_INPUTS}")]
    TooManyInputs(usize),
    #[error("vector set drives {vectors} inputs but the netlist has {netlist}")]
    InputCountMismatch { vectors: usize, netlist: usize },
    #[error("netlists disagree on interface: {0}")]
    InterfaceMismatch(String),
    #[error("Monte Carlo vector count must be positive")]
    NoVectors,
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VectorMode {
    Exhaustive,
    MonteCarlo { num: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VectorSource {
    Exhaustive,
    MonteCarlo { seed: u64 },
}

/// Packed stimulus: `rows[i]` is the bit row of primary input `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorSet {
    num_inputs: usize,
    num_vectors: usize,
    rows: Vec<Vec<u64>>,
    source: VectorSource,
}

fn words_for(num_vectors: usize) -> usize {
    num_vectors.div_ceil(64)
}

fn tail_mask(num_vectors: usize) -> u64 {
    match num_vectors % 64 {
        0 => !0,
        r => (1u64 << r) - 1,
    }
}

impl VectorSet {
    /// Exhaustive sets enumerate vector `k` with input `i` set to bit `i` of
    /// `k`, so input 0 toggles fastest. Monte Carlo sets draw each input as
    /// an independent fair bit from a ChaCha stream seeded by `seed`.
    pub fn generate(num_inputs: usize, mode: VectorMode) -> Result<Self, SimError> {
        match mode {
            VectorMode::Exhaustive => {
                if num_inputs > MAX_EXHAUSTIVE_INPUTS {
                    return Err(SimError::TooManyInputs(num_inputs));
                }
                let num_vectors = 1usize << num_inputs;
                let words = words_for(num_vectors);
                let rows = (0..num_inputs)
                    .map(|i| {
                        let mut row: Vec<u64> = (0..words)
                            .map(|w| {
                                if i < 6 {
                                    // period 2^(i+1) inside every word
                                    let mut pat = 0u64;
                                    for lane in 0..64 {
                                        if (lane >> i) & 1 == 1 {
                                            pat |= 1 << lane;
                                        }
                                    }
                                    pat
                                } else if (w >> (i - 6)) & 1 == 1 {
                                    !0
                                } else {
                                    0
                                }
                            })
                            .collect();
                        if let Some(last) = row.last_mut() {
                            *last &= tail_mask(num_vectors);
                        }
                        row
                    })
                    .collect();
                Ok(VectorSet { num_inputs, num_vectors, rows, source: VectorSource::Exhaustive })
            }
            VectorMode::MonteCarlo { num, seed } => {
                if num == 0 {
                    return Err(SimError::NoVectors);
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let words = words_for(num);
                let rows = (0..num_inputs)
                    .map(|_| {
                        let mut row: Vec<u64> = (0..words).map(|_| rng.next_u64()).collect();
                        *row.last_mut().expect("num > 0") &= tail_mask(num);
                        row
                    })
                    .collect();
                Ok(VectorSet { num_inputs, num_vectors: num, rows, source: VectorSource::MonteCarlo { seed } })
            }
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_vectors(&self) -> usize {
        self.num_vectors
    }

    pub fn words(&self) -> usize {
        words_for(self.num_vectors)
    }

    pub fn source(&self) -> VectorSource {
        self.source
    }

    pub fn row(&self, input: usize) -> &[u64] {
        &self.rows[input]
    }

    pub fn bit(&self, input: usize, vector: usize) -> bool {
        (self.rows[input][vector / 64] >> (vector % 64)) & 1 == 1
    }
}

/// Simulated waveform of every gate, indexed by gate ID.
#[derive(Clone, Debug)]
pub struct SignalTrace {
    num_vectors: usize,
    rows: Vec<Vec<u64>>,
}

impl SignalTrace {
    pub fn num_vectors(&self) -> usize {
        self.num_vectors
    }

    pub fn words(&self) -> usize {
        words_for(self.num_vectors)
    }

    /// Row of a gate; panics if the gate was not part of the simulated netlist.
    pub fn gate(&self, id: GateId) -> &[u64] {
        &self.rows[id.0 as usize]
    }

    pub fn signal(&self, s: Signal) -> Cow<'_, [u64]> {
        match s {
            Signal::Gate(id) => Cow::Borrowed(self.gate(id)),
            Signal::Const0 => Cow::Owned(vec![0; self.words()]),
            Signal::Const1 => Cow::Owned(const_one_row(self.num_vectors)),
        }
    }

    pub fn bit(&self, id: GateId, vector: usize) -> bool {
        (self.gate(id)[vector / 64] >> (vector % 64)) & 1 == 1
    }
}

fn const_one_row(num_vectors: usize) -> Vec<u64> {
    let mut row = vec![!0u64; words_for(num_vectors)];
    if let Some(last) = row.last_mut() {
        *last &= tail_mask(num_vectors);
    }
    row
}

pub fn simulate(n: &Netlist, v: &VectorSet) -> Result<SignalTrace, SimError> {
    if v.num_inputs() != n.inputs().len() {
        return Err(SimError::InputCountMismatch { vectors: v.num_inputs(), netlist: n.inputs().len() });
    }
    let words = v.words();
    let mask = tail_mask(v.num_vectors());
    let zeros = vec![0u64; words];
    let ones = const_one_row(v.num_vectors());
    let mut rows: Vec<Vec<u64>> = vec![Vec::new(); n.id_bound()];
    for (i, pi) in n.inputs().iter().enumerate() {
        rows[pi.0 as usize] = v.row(i).to_vec();
    }
    for &id in n.topological_order() {
        let gate = &n.gates()[&id];
        if gate.kind == GateKind::Input {
            continue;
        }
        let fetch = |s: &Signal| -> &[u64] {
            match s {
                Signal::Gate(f) => &rows[f.0 as usize],
                Signal::Const0 => &zeros,
                Signal::Const1 => &ones,
            }
        };
        let mut out = fetch(&gate.fanins[0]).to_vec();
        let rest = &gate.fanins[1..];
        match gate.kind {
            GateKind::And | GateKind::Nand => {
                for s in rest {
                    out.iter_mut().zip(fetch(s)).for_each(|(o, x)| *o &= x);
                }
            }
            GateKind::Or | GateKind::Nor => {
                for s in rest {
                    out.iter_mut().zip(fetch(s)).for_each(|(o, x)| *o |= x);
                }
            }
            GateKind::Xor | GateKind::Xnor => {
                for s in rest {
                    out.iter_mut().zip(fetch(s)).for_each(|(o, x)| *o ^= x);
                }
            }
            GateKind::Not | GateKind::Buf | GateKind::Input => {}
        }
        if matches!(gate.kind, GateKind::Nand | GateKind::Nor | GateKind::Xnor | GateKind::Not) {
            out.iter_mut().for_each(|o| *o = !*o);
            if let Some(last) = out.last_mut() {
                *last &= mask;
            }
        }
        rows[id.0 as usize] = out;
    }
    Ok(SignalTrace { num_vectors: v.num_vectors(), rows })
}

/// Packed rows of the primary outputs, in output order.
pub fn output_rows(n: &Netlist, traces: &SignalTrace) -> Vec<Vec<u64>> {
    n.outputs().iter().map(|s| traces.signal(*s).into_owned()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub er: f64,
    pub nmed: f64,
    pub per_po_error: Vec<f64>,
    pub num_vectors: usize,
}

impl ErrorReport {
    pub fn zero(num_outputs: usize, num_vectors: usize) -> Self {
        ErrorReport { er: 0.0, nmed: 0.0, per_po_error: vec![0.0; num_outputs], num_vectors }
    }
}

pub fn error_report(accurate: &Netlist, approx: &Netlist, v: &VectorSet) -> Result<ErrorReport, SimError> {
    check_interface(accurate, approx)?;
    let a = output_rows(accurate, &simulate(accurate, v)?);
    let b = output_rows(approx, &simulate(approx, v)?);
    Ok(compare_outputs(&a, &b, v.num_vectors()))
}

pub fn check_interface(accurate: &Netlist, approx: &Netlist) -> Result<(), SimError> {
    if accurate.inputs().len() != approx.inputs().len() {
        return Err(SimError::InterfaceMismatch(format!(
            "{} vs {} primary inputs",
            accurate.inputs().len(),
            approx.inputs().len()
        )));
    }
    if accurate.outputs().len() != approx.outputs().len() {
        return Err(SimError::InterfaceMismatch(format!(
            "{} vs {} primary outputs",
            accurate.outputs().len(),
            approx.outputs().len()
        )));
    }
    Ok(())
}

/// ER, NMED and per-output mismatch rates between two sets of output rows.
/// Output index 0 is the least significant bit of the output word.
pub fn compare_outputs(accurate: &[Vec<u64>], approx: &[Vec<u64>], num_vectors: usize) -> ErrorReport {
    assert_eq!(accurate.len(), approx.len(), "output count mismatch");
    let n = accurate.len();
    let words = words_for(num_vectors);
    let mut per_po = vec![0u64; n];
    let mut differ = 0u64;
    let mut dist = DistanceSum::new(n);
    for w in 0..words {
        let mut any = 0u64;
        for i in 0..n {
            let d = accurate[i][w] ^ approx[i][w];
            per_po[i] += u64::from(d.count_ones());
            any |= d;
        }
        differ += u64::from(any.count_ones());
        let mut lanes = any;
        while lanes != 0 {
            let lane = lanes.trailing_zeros();
            lanes &= lanes - 1;
            dist.add_vector(n, |i| (accurate[i][w] >> lane) & 1 == 1, |i| (approx[i][w] >> lane) & 1 == 1);
        }
    }
    let total = num_vectors as f64;
    ErrorReport {
        er: differ as f64 / total,
        nmed: dist.mean_normalized(n, num_vectors),
        per_po_error: per_po.into_iter().map(|c| c as f64 / total).collect(),
        num_vectors,
    }
}

/// Accumulates |V_acc - V_app| over vectors, exactly when the output word
/// fits in 64 bits.
enum DistanceSum {
    Exact(u128),
    Float(f64),
}

impl DistanceSum {
    fn new(n: usize) -> Self {
        if n <= 64 {
            DistanceSum::Exact(0)
        } else {
            DistanceSum::Float(0.0)
        }
    }

    fn add_vector(&mut self, n: usize, acc: impl Fn(usize) -> bool, app: impl Fn(usize) -> bool) {
        match self {
            DistanceSum::Exact(sum) => {
                let (mut va, mut vb) = (0u64, 0u64);
                for i in 0..n {
                    va |= u64::from(acc(i)) << i;
                    vb |= u64::from(app(i)) << i;
                }
                *sum += u128::from(va.abs_diff(vb));
            }
            DistanceSum::Float(sum) => {
                // difference scaled by 2^-n, so any width stays finite
                let mut d = 0.0f64;
                for i in 0..n {
                    let scale = (i as f64 - n as f64).exp2();
                    d += (f64::from(u8::from(acc(i))) - f64::from(u8::from(app(i)))) * scale;
                }
                *sum += d.abs();
            }
        }
    }

    fn mean_normalized(&self, n: usize, num_vectors: usize) -> f64 {
        match *self {
            DistanceSum::Exact(sum) => {
                let max = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
                if max == 0 {
                    return 0.0;
                }
                sum as f64 / max as f64 / num_vectors as f64
            }
            // (2^n - 1) / 2^n == 1 at this width
            DistanceSum::Float(sum) => sum / num_vectors as f64,
        }
    }
}

/// Per-candidate agreement counts for one target gate.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityTable {
    pub target: GateId,
    pub num_vectors: usize,
    pub const0: u64,
    pub const1: u64,
    /// Strict transitive fan-in of the target, ascending ID.
    pub gates: Vec<(GateId, u64)>,
}

impl SimilarityTable {
    pub fn similarity(&self, s: Signal) -> Option<f64> {
        let count = match s {
            Signal::Const0 => self.const0,
            Signal::Const1 => self.const1,
            Signal::Gate(id) if id == self.target => self.num_vectors as u64,
            Signal::Gate(id) => self.gates.iter().find(|(g, _)| *g == id)?.1,
        };
        Some(count as f64 / self.num_vectors as f64)
    }

    /// All candidates with their agreement counts: constants first, then gates.
    pub fn candidates(&self) -> impl Iterator<Item = (Signal, u64)> + '_ {
        [(Signal::Const0, self.const0), (Signal::Const1, self.const1)]
            .into_iter()
            .chain(self.gates.iter().map(|(g, c)| (Signal::Gate(*g), *c)))
    }
}

pub fn similarity_table(n: &Netlist, target: GateId, traces: &SignalTrace) -> Result<SimilarityTable, SimError> {
    let mut tfi = n.tfi(Signal::Gate(target))?;
    tfi.remove(&target);
    let t = traces.gate(target);
    let ones: u64 = t.iter().map(|w| u64::from(w.count_ones())).sum();
    let total = traces.num_vectors() as u64;
    let mask = tail_mask(traces.num_vectors());
    let words = traces.words();
    let gates = tfi
        .into_iter()
        .map(|g| {
            let r = traces.gate(g);
            let mut agree = 0u64;
            for w in 0..words {
                let mut same = !(t[w] ^ r[w]);
                if w + 1 == words {
                    same &= mask;
                }
                agree += u64::from(same.count_ones());
            }
            (g, agree)
        })
        .collect();
    Ok(SimilarityTable { target, num_vectors: traces.num_vectors(), const0: total - ones, const1: ones, gates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;

    fn bits(row: &[u64], n: usize) -> String {
        (0..n).map(|k| if (row[k / 64] >> (k % 64)) & 1 == 1 { '1' } else { '0' }).collect()
    }

    #[test]
    fn exhaustive_two_inputs() {
        let v = VectorSet::generate(2, VectorMode::Exhaustive).unwrap();
        assert_eq!(v.num_vectors(), 4);
        assert_eq!(bits(v.row(0), 4), "0101");
        assert_eq!(bits(v.row(1), 4), "0011");
    }

    #[test]
    fn exhaustive_rows_enumerate_all_inputs() {
        let v = VectorSet::generate(9, VectorMode::Exhaustive).unwrap();
        for k in 0..v.num_vectors() {
            for i in 0..9 {
                assert_eq!(v.bit(i, k), (k >> i) & 1 == 1);
            }
        }
        assert_eq!(VectorSet::generate(25, VectorMode::Exhaustive), Err(SimError::TooManyInputs(25)));
    }

    #[test]
    fn monte_carlo_is_reproducible_and_balanced() {
        let mode = VectorMode::MonteCarlo { num: 100_000, seed: 1 };
        let a = VectorSet::generate(32, mode).unwrap();
        assert_eq!(a, VectorSet::generate(32, mode).unwrap());
        for i in 0..32 {
            let ones: u32 = a.row(i).iter().map(|w| w.count_ones()).sum();
            let p = f64::from(ones) / 1e5;
            assert!((p - 0.5).abs() <= 0.01, "input {i}: {p}");
        }
        let last = a.row(0).last().unwrap();
        assert_eq!(last >> (100_000 % 64), 0);
    }

    #[test]
    fn truth_tables() {
        let v = VectorSet::generate(2, VectorMode::Exhaustive).unwrap();
        let and = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(c)\nc = AND(a, b)").unwrap();
        let t = simulate(&and, &v).unwrap();
        assert_eq!(bits(t.gate(GateId(2)), 4), "0001");
        let xor = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(c)\nc = XOR(a, b)").unwrap();
        let t = simulate(&xor, &v).unwrap();
        assert_eq!(bits(t.gate(GateId(2)), 4), "0110");
        let nor = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(c)\nc = NOR(a, b)").unwrap();
        let t = simulate(&nor, &v).unwrap();
        assert_eq!(t.gate(GateId(2)), &[0b0001]);
    }

    #[test]
    fn input_count_mismatch() {
        let v = VectorSet::generate(3, VectorMode::Exhaustive).unwrap();
        let n = parse_bench("INPUT(a)\nOUTPUT(c)\nc = NOT(a)").unwrap();
        assert!(matches!(simulate(&n, &v), Err(SimError::InputCountMismatch { .. })));
    }

    #[test]
    fn identity_and_complement_errors() {
        let v = VectorSet::generate(2, VectorMode::Exhaustive).unwrap();
        let n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(c)\nc = AND(a, b)").unwrap();
        let r = error_report(&n, &n, &v).unwrap();
        assert_eq!(r, ErrorReport::zero(1, 4));
        let c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(c)\nc = NAND(a, b)").unwrap();
        let r = error_report(&n, &c, &v).unwrap();
        assert_eq!((r.er, r.nmed), (1.0, 1.0));
        assert_eq!(r.per_po_error, vec![1.0]);
    }

    #[test]
    fn similarity_of_worked_trace() {
        // target low on 14 of 16 cycles: AND of four inputs is high on 1/16,
        // OR with a 2-input AND pattern gives exactly two high cycles
        let n = parse_bench(
            "INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nOUTPUT(t)\n\
             x = AND(a, b, c)\nt = AND(x, b)\n",
        )
        .unwrap();
        let v = VectorSet::generate(4, VectorMode::Exhaustive).unwrap();
        let tr = simulate(&n, &v).unwrap();
        let t = GateId(5);
        let table = similarity_table(&n, t, &tr).unwrap();
        assert_eq!(table.const0, 14);
        assert_eq!(table.similarity(Signal::Const0), Some(0.875));
        assert_eq!(table.similarity(Signal::Const0).unwrap() + table.similarity(Signal::Const1).unwrap(), 1.0);
        // x computes the same function as t
        assert_eq!(table.similarity(Signal::Gate(GateId(4))), Some(1.0));
        assert_eq!(table.similarity(Signal::Gate(t)), Some(1.0));
    }

    #[test]
    fn pi_target_has_only_constants() {
        let n = parse_bench("INPUT(a)\nOUTPUT(c)\nc = NOT(a)").unwrap();
        let v = VectorSet::generate(1, VectorMode::Exhaustive).unwrap();
        let table = similarity_table(&n, GateId(0), &simulate(&n, &v).unwrap()).unwrap();
        assert!(table.gates.is_empty());
        assert_eq!(table.candidates().count(), 2);
    }
}
