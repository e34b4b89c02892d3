// SPDX-License-Identifier: Apache-2.0
//! Gate-level circuits stored as fan-in adjacency lists keyed by integer IDs.
//!
//! A [`Netlist`] is immutable once built: every transform returns a fresh,
//! fully validated value. Constants are never gates; they appear only as
//! [`Signal::Const0`] / [`Signal::Const1`] fan-ins or output drivers.

mod bench;

pub(crate) use bench::parse_named;
pub use bench::{emit_bench, emit_bench_annotated, parse_bench, read_annotations, ANNOTATION_PREFIX};

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GateId(pub u32);

impl fmt::Display for GateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    Input,
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
}

impl GateKind {
    pub const LOGIC: [GateKind; 8] = [
        GateKind::And,
        GateKind::Nand,
        GateKind::Or,
        GateKind::Nor,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Not,
        GateKind::Buf,
    ];

    pub fn arity_ok(self, n: usize) -> bool {
        match self {
            GateKind::Input => n == 0,
            GateKind::Not | GateKind::Buf => n == 1,
            _ => n >= 2,
        }
    }

    /// Evaluates the gate over one packed word per fan-in.
    #[inline]
    pub fn eval_words(self, fanins: &[u64]) -> u64 {
        let fold = |init: u64, op: fn(u64, u64) -> u64| fanins.iter().fold(init, |acc, &w| op(acc, w));
        match self {
            GateKind::Input => 0,
            GateKind::And => fold(!0, |a, b| a & b),
            GateKind::Nand => !fold(!0, |a, b| a & b),
            GateKind::Or => fold(0, |a, b| a | b),
            GateKind::Nor => !fold(0, |a, b| a | b),
            GateKind::Xor => fold(0, |a, b| a ^ b),
            GateKind::Xnor => !fold(0, |a, b| a ^ b),
            GateKind::Not => !fanins[0],
            GateKind::Buf => fanins[0],
        }
    }

    pub fn eval_bool(self, fanins: &[bool]) -> bool {
        match self {
            GateKind::Input => false,
            GateKind::And => fanins.iter().all(|&b| b),
            GateKind::Nand => !fanins.iter().all(|&b| b),
            GateKind::Or => fanins.iter().any(|&b| b),
            GateKind::Nor => !fanins.iter().any(|&b| b),
            GateKind::Xor => fanins.iter().fold(false, |a, &b| a ^ b),
            GateKind::Xnor => !fanins.iter().fold(false, |a, &b| a ^ b),
            GateKind::Not => !fanins[0],
            GateKind::Buf => fanins[0],
        }
    }

    pub fn bench_keyword(self) -> &'static str {
        match self {
            GateKind::Input => "INPUT",
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUFF",
        }
    }

    pub fn from_keyword(word: &str) -> Option<GateKind> {
        let kind = match word.to_ascii_uppercase().as_str() {
            "AND" => GateKind::And,
            "NAND" => GateKind::Nand,
            "OR" => GateKind::Or,
            "NOR" => GateKind::Nor,
            "XOR" => GateKind::Xor,
            "XNOR" => GateKind::Xnor,
            "NOT" | "INV" => GateKind::Not,
            "BUFF" | "BUF" => GateKind::Buf,
            _ => return None,
        };
        Some(kind)
    }
}

/// A fan-in reference: another gate's output or a constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Signal {
    Const0,
    Const1,
    Gate(GateId),
}

impl Signal {
    pub fn gate(self) -> Option<GateId> {
        match self {
            Signal::Gate(id) => Some(id),
            _ => None,
        }
    }
}

impl From<GateId> for Signal {
    fn from(id: GateId) -> Self {
        Signal::Gate(id)
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Signal::Const0 => f.write_str("con0"),
            Signal::Const1 => f.write_str("con1"),
            Signal::Gate(id) => write!(f, "{id}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gate {
    pub id: GateId,
    pub kind: GateKind,
    pub fanins: Vec<Signal>,
}

impl Gate {
    pub fn input(id: GateId) -> Self {
        Gate { id, kind: GateKind::Input, fanins: Vec::new() }
    }

    pub fn new(id: GateId, kind: GateKind, fanins: Vec<Signal>) -> Self {
        Gate { id, kind, fanins }
    }
}

/// A place that reads a signal: a gate's fan-in list or a primary-output slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Consumer {
    Gate(GateId),
    Output(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetlistError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: undefined signal `{name}`")]
    Undefined { line: usize, name: String },
    #[error("line {line}: signal `{name}` defined more than once")]
    Redefined { line: usize, name: String },
    #[error("gate {id}: {kind:?} cannot take {count} fan-ins")]
    Arity { id: GateId, kind: GateKind, count: usize },
    #[error("gate {id} references missing gate {missing}")]
    Unresolved { id: GateId, missing: GateId },
    #[error("gate map key {key} holds gate {id}")]
    IdMismatch { key: GateId, id: GateId },
    #[error("primary input {0} is not an INPUT gate")]
    NotAnInput(GateId),
    #[error("INPUT gate {0} is not listed as a primary input")]
    StrayInput(GateId),
    #[error("primary input {0} listed twice")]
    DuplicateInput(GateId),
    #[error("netlist has no primary outputs")]
    NoOutputs,
    #[error("primary output {index} references missing gate {missing}")]
    UnresolvedOutput { index: usize, missing: GateId },
    #[error("combinational cycle through gates {0:?}")]
    Cycle(Vec<GateId>),
    #[error("{consumer:?} does not read {old}")]
    SlotNotFound { consumer: Consumer, old: Signal },
    #[error("unknown gate {0}")]
    UnknownGate(GateId),
}

#[derive(Clone, Debug)]
pub struct Netlist {
    name: String,
    gates: BTreeMap<GateId, Gate>,
    inputs: Vec<GateId>,
    outputs: Vec<Signal>,
    names: Arc<BTreeMap<GateId, String>>,
    order: Vec<GateId>,
}

impl PartialEq for Netlist {
    fn eq(&self, other: &Self) -> bool {
        self.gates == other.gates && self.inputs == other.inputs && self.outputs == other.outputs
    }
}

impl Eq for Netlist {}

impl Netlist {
    /// Builds and validates a netlist. Output list order fixes bit
    /// significance: index 0 is the least significant bit.
    pub fn new(
        name: impl Into<String>,
        gates: impl IntoIterator<Item = Gate>,
        inputs: Vec<GateId>,
        outputs: Vec<Signal>,
    ) -> Result<Self, NetlistError> {
        let gates: BTreeMap<GateId, Gate> = gates.into_iter().map(|g| (g.id, g)).collect();
        Self::from_map(name.into(), gates, inputs, outputs, Arc::new(BTreeMap::new()))
    }

    pub(crate) fn from_map(
        name: String,
        gates: BTreeMap<GateId, Gate>,
        inputs: Vec<GateId>,
        outputs: Vec<Signal>,
        names: Arc<BTreeMap<GateId, String>>,
    ) -> Result<Self, NetlistError> {
        validate_parts(&gates, &inputs, &outputs)?;
        let order = topological_order(&gates)?;
        Ok(Netlist { name, gates, inputs, outputs, names, order })
    }

    pub fn with_names(mut self, names: BTreeMap<GateId, String>) -> Self {
        self.names = Arc::new(names);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn gates(&self) -> &BTreeMap<GateId, Gate> {
        &self.gates
    }

    pub fn gate(&self, id: GateId) -> Option<&Gate> {
        self.gates.get(&id)
    }

    pub fn inputs(&self) -> &[GateId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Signal] {
        &self.outputs
    }

    pub fn signal_name(&self, id: GateId) -> Option<&str> {
        self.names.get(&id).map(String::as_str)
    }

    pub(crate) fn names(&self) -> &Arc<BTreeMap<GateId, String>> {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Number of non-INPUT gates.
    pub fn logic_gate_count(&self) -> usize {
        self.gates.values().filter(|g| g.kind != GateKind::Input).count()
    }

    /// One past the largest gate ID, handy for dense per-gate tables.
    pub fn id_bound(&self) -> usize {
        self.gates.keys().next_back().map_or(0, |id| id.0 as usize + 1)
    }

    /// Gates in an order where every gate follows all of its fan-ins.
    /// Always succeeds because construction rejects cycles.
    pub fn topological_order(&self) -> &[GateId] {
        &self.order
    }

    pub fn contains(&self, s: Signal) -> bool {
        match s {
            Signal::Gate(id) => self.gates.contains_key(&id),
            _ => true,
        }
    }

    /// Transitive fan-in of `root`, including `root` itself when it is a gate.
    pub fn tfi(&self, root: Signal) -> Result<BTreeSet<GateId>, NetlistError> {
        let mut seen = BTreeSet::new();
        let Signal::Gate(start) = root else {
            return Ok(seen);
        };
        if !self.gates.contains_key(&start) {
            return Err(NetlistError::UnknownGate(start));
        }
        let mut stack = vec![start];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            for s in &self.gates[&id].fanins {
                if let Signal::Gate(f) = *s {
                    if !seen.contains(&f) {
                        stack.push(f);
                    }
                }
            }
        }
        Ok(seen)
    }

    /// Every fan-in slot and output slot that reads each gate.
    pub fn consumers(&self) -> BTreeMap<GateId, Vec<Consumer>> {
        let mut map: BTreeMap<GateId, Vec<Consumer>> = BTreeMap::new();
        for g in self.gates.values() {
            for s in &g.fanins {
                if let Signal::Gate(f) = *s {
                    map.entry(f).or_default().push(Consumer::Gate(g.id));
                }
            }
        }
        for (i, s) in self.outputs.iter().enumerate() {
            if let Signal::Gate(f) = *s {
                map.entry(f).or_default().push(Consumer::Output(i));
            }
        }
        map
    }

    /// Fan-out slot counts indexed by `GateId.0` (consumer fan-in slots plus
    /// output slots).
    pub fn fanout_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.id_bound()];
        for g in self.gates.values() {
            for s in &g.fanins {
                if let Signal::Gate(f) = *s {
                    counts[f.0 as usize] += 1;
                }
            }
        }
        for s in &self.outputs {
            if let Signal::Gate(f) = *s {
                counts[f.0 as usize] += 1;
            }
        }
        counts
    }

    /// Gates that can reach some primary output (PIs included).
    pub fn live_gates(&self) -> BTreeSet<GateId> {
        let mut live = BTreeSet::new();
        let mut stack: Vec<GateId> = self.outputs.iter().filter_map(|s| s.gate()).collect();
        while let Some(id) = stack.pop() {
            if !live.insert(id) {
                continue;
            }
            for s in &self.gates[&id].fanins {
                if let Signal::Gate(f) = *s {
                    if !live.contains(&f) {
                        stack.push(f);
                    }
                }
            }
        }
        live
    }

    /// Non-PI gates with an empty transitive fan-out toward the outputs.
    pub fn dangling_gates(&self) -> BTreeSet<GateId> {
        let live = self.live_gates();
        self.gates.values().filter(|g| g.kind != GateKind::Input && !live.contains(&g.id)).map(|g| g.id).collect()
    }

    pub fn remove_dangling(&self) -> Netlist {
        let dangling = self.dangling_gates();
        if dangling.is_empty() {
            return self.clone();
        }
        let gates: BTreeMap<GateId, Gate> =
            self.gates.iter().filter(|(id, _)| !dangling.contains(id)).map(|(id, g)| (*id, g.clone())).collect();
        let order = self.order.iter().copied().filter(|id| !dangling.contains(id)).collect();
        Netlist {
            name: self.name.clone(),
            gates,
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            names: Arc::clone(&self.names),
            order,
        }
    }

    /// Rewrites exactly one slot: the first occurrence of `old` in the
    /// consumer's fan-in list, or the named output slot.
    pub fn apply_fanin_edit(&self, consumer: Consumer, old: Signal, new: Signal) -> Result<Netlist, NetlistError> {
        if let Signal::Gate(id) = new {
            if !self.gates.contains_key(&id) {
                return Err(NetlistError::UnknownGate(id));
            }
        }
        let not_found = || NetlistError::SlotNotFound { consumer, old };
        self.edit(|gates, outputs| match consumer {
            Consumer::Gate(id) => {
                let gate = gates.get_mut(&id).ok_or(NetlistError::UnknownGate(id))?;
                let slot = gate.fanins.iter_mut().find(|s| **s == old).ok_or_else(not_found)?;
                *slot = new;
                Ok(())
            }
            Consumer::Output(i) => match outputs.get_mut(i) {
                Some(slot) if *slot == old => {
                    *slot = new;
                    Ok(())
                }
                _ => Err(not_found()),
            },
        })
    }

    /// Clones the adjacency, lets `f` mutate it and re-validates the result.
    pub(crate) fn edit<F>(&self, f: F) -> Result<Netlist, NetlistError>
    where
        F: FnOnce(&mut BTreeMap<GateId, Gate>, &mut Vec<Signal>) -> Result<(), NetlistError>,
    {
        let mut gates = self.gates.clone();
        let mut outputs = self.outputs.clone();
        f(&mut gates, &mut outputs)?;
        Netlist::from_map(self.name.clone(), gates, self.inputs.clone(), outputs, Arc::clone(&self.names))
    }

    /// Simple structural fingerprint used to drop duplicate candidates.
    pub fn structure_key(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for g in self.gates.values() {
            g.hash(&mut h);
        }
        self.outputs.hash(&mut h);
        h.finish()
    }
}

fn validate_parts(gates: &BTreeMap<GateId, Gate>, inputs: &[GateId], outputs: &[Signal]) -> Result<(), NetlistError> {
    for (key, g) in gates {
        if *key != g.id {
            return Err(NetlistError::IdMismatch { key: *key, id: g.id });
        }
        if !g.kind.arity_ok(g.fanins.len()) {
            return Err(NetlistError::Arity { id: g.id, kind: g.kind, count: g.fanins.len() });
        }
        for s in &g.fanins {
            if let Signal::Gate(f) = *s {
                if !gates.contains_key(&f) {
                    return Err(NetlistError::Unresolved { id: g.id, missing: f });
                }
            }
        }
    }
    let mut seen = BTreeSet::new();
    for id in inputs {
        match gates.get(id) {
            Some(g) if g.kind == GateKind::Input => {}
            _ => return Err(NetlistError::NotAnInput(*id)),
        }
        if !seen.insert(*id) {
            return Err(NetlistError::DuplicateInput(*id));
        }
    }
    if let Some(g) = gates.values().find(|g| g.kind == GateKind::Input && !seen.contains(&g.id)) {
        return Err(NetlistError::StrayInput(g.id));
    }
    if outputs.is_empty() {
        return Err(NetlistError::NoOutputs);
    }
    for (index, s) in outputs.iter().enumerate() {
        if let Signal::Gate(f) = *s {
            if !gates.contains_key(&f) {
                return Err(NetlistError::UnresolvedOutput { index, missing: f });
            }
        }
    }
    Ok(())
}

/// Kahn's algorithm, smallest ready ID first. Fan-in references to missing
/// gates are ignored here; `Netlist::new` rejects them separately.
pub fn topological_order(gates: &BTreeMap<GateId, Gate>) -> Result<Vec<GateId>, NetlistError> {
    let mut pending: BTreeMap<GateId, usize> = BTreeMap::new();
    let mut readers: BTreeMap<GateId, Vec<GateId>> = BTreeMap::new();
    for g in gates.values() {
        let mut count = 0;
        for s in &g.fanins {
            if let Signal::Gate(f) = *s {
                if gates.contains_key(&f) {
                    count += 1;
                    readers.entry(f).or_default().push(g.id);
                }
            }
        }
        pending.insert(g.id, count);
    }
    let mut ready: BinaryHeap<Reverse<GateId>> =
        pending.iter().filter(|(_, &c)| c == 0).map(|(id, _)| Reverse(*id)).collect();
    let mut order = Vec::with_capacity(gates.len());
    while let Some(Reverse(id)) = ready.pop() {
        order.push(id);
        for r in readers.get(&id).into_iter().flatten() {
            let c = pending.get_mut(r).expect("reader is a gate");
            *c -= 1;
            if *c == 0 {
                ready.push(Reverse(*r));
            }
        }
    }
    if order.len() == gates.len() {
        return Ok(order);
    }
    let stuck: BTreeSet<GateId> = pending.iter().filter(|(_, &c)| c > 0).map(|(id, _)| *id).collect();
    Err(NetlistError::Cycle(find_cycle(gates, &stuck)))
}

/// Walks fan-ins inside the unsorted remainder until a gate repeats.
fn find_cycle(gates: &BTreeMap<GateId, Gate>, stuck: &BTreeSet<GateId>) -> Vec<GateId> {
    let Some(&start) = stuck.iter().next() else {
        return Vec::new();
    };
    let mut path = vec![start];
    let mut pos: BTreeMap<GateId, usize> = BTreeMap::from([(start, 0)]);
    let mut cur = start;
    loop {
        let next = gates[&cur]
            .fanins
            .iter()
            .filter_map(|s| s.gate())
            .find(|f| stuck.contains(f))
            .expect("every stuck gate has a stuck fan-in");
        if let Some(&i) = pos.get(&next) {
            let mut cycle = path.split_off(i);
            cycle.reverse();
            return cycle;
        }
        pos.insert(next, path.len());
        path.push(next);
        cur = next;
    }
}
