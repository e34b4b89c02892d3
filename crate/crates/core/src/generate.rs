// SPDX-License-Identifier: Apache-2.0
//! Parameterized benchmark circuits.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::netlist::{Gate, GateId, GateKind, Netlist, Signal};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenerateError {
    #[error("invalid size: {0}")]
    InvalidSize(String),
}

/// Incremental netlist construction with sequential IDs and names.
struct Builder {
    gates: BTreeMap<GateId, Gate>,
    names: BTreeMap<GateId, String>,
    inputs: Vec<GateId>,
}

impl Builder {
    fn new() -> Self {
        Builder { gates: BTreeMap::new(), names: BTreeMap::new(), inputs: Vec::new() }
    }

    fn next_id(&self) -> GateId {
        GateId(self.gates.len() as u32)
    }

    fn input(&mut self, name: String) -> Signal {
        let id = self.next_id();
        self.gates.insert(id, Gate::input(id));
        self.names.insert(id, name);
        self.inputs.push(id);
        Signal::Gate(id)
    }

    fn gate(&mut self, name: String, kind: GateKind, fanins: Vec<Signal>) -> Signal {
        let id = self.next_id();
        self.gates.insert(id, Gate::new(id, kind, fanins));
        self.names.insert(id, name);
        Signal::Gate(id)
    }

    fn finish(self, name: &str, outputs: Vec<Signal>) -> Netlist {
        Netlist::new(name, self.gates.into_values(), self.inputs, outputs)
            .expect("generated netlists are valid by construction")
            .with_names(self.names)
    }
}

/// Ripple-carry adder with PIs `a0..`, `b0..` and POs `s0..`, `cout`.
/// Bit 0 is a half adder; every other bit is the usual five-gate full adder.
pub fn ripple_carry_adder(bits: usize) -> Netlist {
    try_ripple_carry_adder(bits).expect("adder width must be positive")
}

pub fn try_ripple_carry_adder(bits: usize) -> Result<Netlist, GenerateError> {
    if bits == 0 || bits > 4096 {
        return Err(GenerateError::InvalidSize(format!("adder width {bits}")));
    }
    let mut b = Builder::new();
    let xs: Vec<Signal> = (0..bits).map(|i| b.input(format!("a{i}"))).collect();
    let ys: Vec<Signal> = (0..bits).map(|i| b.input(format!("b{i}"))).collect();
    let mut sums = Vec::with_capacity(bits + 1);
    let mut carry: Option<Signal> = None;
    for i in 0..bits {
        let p = b.gate(format!("p{i}"), GateKind::Xor, vec![xs[i], ys[i]]);
        let g = b.gate(format!("g{i}"), GateKind::And, vec![xs[i], ys[i]]);
        match carry {
            None => {
                sums.push(p);
                carry = Some(g);
            }
            Some(c) => {
                sums.push(b.gate(format!("s{i}"), GateKind::Xor, vec![p, c]));
                let t = b.gate(format!("t{i}"), GateKind::And, vec![p, c]);
                carry = Some(b.gate(format!("c{}", i + 1), GateKind::Or, vec![g, t]));
            }
        }
    }
    sums.push(carry.expect("bits > 0"));
    Ok(b.finish(&format!("rca{bits}"), sums))
}

/// `2^sel`-to-1 multiplexer tree built from AND/OR/NOT, data inputs first.
pub fn mux_tree(sel: usize) -> Result<Netlist, GenerateError> {
    if sel == 0 || sel > 12 {
        return Err(GenerateError::InvalidSize(format!("select width {sel} (expected 1..=12)")));
    }
    let mut b = Builder::new();
    let mut level: Vec<Signal> = (0..1usize << sel).map(|i| b.input(format!("d{i}"))).collect();
    let selects: Vec<Signal> = (0..sel).map(|i| b.input(format!("s{i}"))).collect();
    for (l, &s) in selects.iter().enumerate() {
        let ns = b.gate(format!("ns{l}"), GateKind::Not, vec![s]);
        level = level
            .chunks(2)
            .enumerate()
            .map(|(k, pair)| {
                let lo = b.gate(format!("m{l}_{k}_lo"), GateKind::And, vec![pair[0], ns]);
                let hi = b.gate(format!("m{l}_{k}_hi"), GateKind::And, vec![pair[1], s]);
                b.gate(format!("m{l}_{k}"), GateKind::Or, vec![lo, hi])
            })
            .collect();
    }
    Ok(b.finish(&format!("mux{sel}"), level))
}

/// Random acyclic netlist with `pis` inputs and `gates` logic gates. Fan-ins
/// favour recent signals, which gives deep, reconvergent logic. Every gate
/// without a consumer becomes an output, so nothing is dangling.
pub fn random_dag(gates: usize, pis: usize, seed: u64) -> Result<Netlist, GenerateError> {
    if pis == 0 || gates == 0 || pis > 1 << 16 || gates > 1 << 20 {
        return Err(GenerateError::InvalidSize(format!("{gates} gates over {pis} inputs")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Builder::new();
    let mut pool: Vec<Signal> = (0..pis).map(|i| b.input(format!("i{i}"))).collect();
    let mut used = vec![false; pis + gates];
    let window = (2 * pis).max(8);
    for g in 0..gates {
        let kind = GateKind::LOGIC[rng.gen_range(0..GateKind::LOGIC.len())];
        let arity = match kind {
            GateKind::Not | GateKind::Buf => 1,
            _ if rng.gen_bool(0.2) => 3,
            _ => 2,
        };
        let mut fanins: Vec<Signal> = Vec::with_capacity(arity);
        while fanins.len() < arity.min(pool.len()) {
            let k = if rng.gen_bool(0.7) {
                pool.len() - 1 - rng.gen_range(0..window.min(pool.len()))
            } else {
                rng.gen_range(0..pool.len())
            };
            if !fanins.contains(&pool[k]) {
                fanins.push(pool[k]);
            }
        }
        if fanins.len() < arity {
            fanins.push(fanins[0]);
        }
        for f in &fanins {
            if let Some(id) = f.gate() {
                used[id.0 as usize] = true;
            }
        }
        pool.push(b.gate(format!("n{g}"), kind, fanins));
    }
    let outputs: Vec<Signal> =
        (pis..pis + gates).filter(|&i| !used[i]).map(|i| Signal::Gate(GateId(i as u32))).collect();
    Ok(b.finish(&format!("random{gates}_{pis}_{seed}"), outputs))
}
