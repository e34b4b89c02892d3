// SPDX-License-Identifier: Apache-2.0
//! Local approximate changes: replace every reader of a target gate with a
//! similar signal from its transitive fan-in, or with a constant.

use indexmap::IndexSet;
use rand::Rng;
use thiserror::Error;

use crate::netlist::{GateId, GateKind, Netlist, NetlistError, Signal};
use crate::sim::{similarity_table, SignalTrace, SimError, SimilarityTable};
use crate::sta::TimingReport;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LacError {
    #[error("no gates on any critical path")]
    EmptyTargetSet,
    #[error("switch {switch} is not in the fan-in cone of target {target}")]
    InvalidSwitch { target: GateId, switch: Signal },
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// One substitution: readers of `target` are rewired to `switch`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lac {
    pub target: GateId,
    pub switch: Signal,
    pub similarity: f64,
}

/// Candidate targets: every gate on the extracted critical paths, plus the
/// gate fan-ins of those gates that won a fair coin flip.
pub fn build_target_set<R: Rng + ?Sized>(
    n: &Netlist,
    timing: &TimingReport,
    rng: &mut R,
) -> Result<IndexSet<GateId>, LacError> {
    let on_paths = timing.critical_gates(n);
    if on_paths.is_empty() {
        return Err(LacError::EmptyTargetSet);
    }
    let mut targets: IndexSet<GateId> = on_paths.iter().copied().collect();
    for id in on_paths {
        let u: f64 = rng.gen();
        if u > 0.5 {
            for f in n.gates()[&id].fanins.iter().filter_map(|s| s.gate()) {
                if n.gates()[&f].kind != GateKind::Input {
                    targets.insert(f);
                }
            }
        }
    }
    Ok(targets)
}

/// Highest-similarity candidate. Ties go to constants (0 before 1), then to
/// the lower gate ID.
pub fn choose_switch(table: &SimilarityTable) -> Lac {
    let mut best = (Signal::Const0, table.const0);
    for (s, count) in table.candidates() {
        if count > best.1 {
            best = (s, count);
        }
    }
    Lac { target: table.target, switch: best.0, similarity: best.1 as f64 / table.num_vectors as f64 }
}

/// Rewrites every fan-in slot and output slot that reads the target.
pub fn apply_lac(n: &Netlist, lac: &Lac) -> Result<Netlist, LacError> {
    if !n.contains(Signal::Gate(lac.target)) {
        return Err(NetlistError::UnknownGate(lac.target).into());
    }
    if let Signal::Gate(s) = lac.switch {
        if s == lac.target || !n.tfi(Signal::Gate(lac.target))?.contains(&s) {
            return Err(LacError::InvalidSwitch { target: lac.target, switch: lac.switch });
        }
    }
    let from = Signal::Gate(lac.target);
    let out = n.edit(|gates, outputs| {
        for g in gates.values_mut() {
            for slot in g.fanins.iter_mut().filter(|s| **s == from) {
                *slot = lac.switch;
            }
        }
        for slot in outputs.iter_mut().filter(|s| **s == from) {
            *slot = lac.switch;
        }
        Ok(())
    })?;
    Ok(out)
}

/// Picks the best switch for `target` using the simulated traces of `n`.
pub fn best_lac(n: &Netlist, target: GateId, traces: &SignalTrace) -> Result<Lac, LacError> {
    Ok(choose_switch(&similarity_table(n, target, traces)?))
}

/// One similarity-guided substitution on a random critical-path target.
pub fn circuit_searching<R: Rng + ?Sized>(
    n: &Netlist,
    timing: &TimingReport,
    traces: &SignalTrace,
    rng: &mut R,
) -> Result<(Netlist, Lac), LacError> {
    let targets = build_target_set(n, timing, rng)?;
    let target = targets[rng.gen_range(0..targets.len())];
    let lac = best_lac(n, target, traces)?;
    Ok((apply_lac(n, &lac)?, lac))
}
