// SPDX-License-Identifier: Apache-2.0
//! Post-optimization: drop dangling gates, then upsize critical gates under
//! an area budget.

use log::{debug, warn};

use crate::dcgwo::ReferenceContext;
use crate::netlist::{GateId, Netlist};
use crate::sim::{self, ErrorReport, SimError, VectorSet};
use crate::sta::{self, SizingMap, TIE_TOLERANCE};

#[derive(Clone, Debug)]
pub struct PostOptResult {
    pub final_netlist: Netlist,
    pub sizing: SizingMap,
    pub cpd_fac: f64,
    /// `cpd_fac / cpd_ori`.
    pub ratio_cpd: f64,
    pub final_area: f64,
    /// Error on the independent vector set passed to `post_optimize`.
    pub final_error: ErrorReport,
    /// Set when the circuit at X1 already exceeds the area budget; sizing
    /// is then skipped.
    pub area_infeasible: bool,
    /// cpd before sizing followed by cpd after each accepted upsize.
    pub cpd_history: Vec<f64>,
}

/// One accepted sizing step.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Upsize {
    gate: GateId,
    cpd: f64,
    added_area: f64,
}

/// Greedy benefit/cost sizing of `n` (dangling gates are removed first).
/// `fresh` is the vector set used for the reported error.
pub fn post_optimize(
    n: &Netlist,
    ctx: &ReferenceContext,
    area_con: f64,
    fresh: &VectorSet,
) -> Result<PostOptResult, SimError> {
    let live = n.remove_dangling();
    let (sizing, history, area_infeasible) = greedy_sizing(&live, ctx, area_con);
    let timing = sta::analyze(&live, &ctx.lib, &sizing);
    let final_area = sta::area(&live, &ctx.lib, &sizing, false);
    let final_error = sim::error_report(&ctx.accurate, &live, fresh)?;
    Ok(PostOptResult {
        ratio_cpd: timing.cpd / ctx.cpd_ori,
        cpd_fac: timing.cpd,
        final_area,
        final_error,
        area_infeasible,
        cpd_history: history,
        sizing,
        final_netlist: live,
    })
}

/// Returns the sizing, the cpd after every accepted step, and whether the
/// X1 circuit already broke the budget.
pub fn greedy_sizing(n: &Netlist, ctx: &ReferenceContext, area_con: f64) -> (SizingMap, Vec<f64>, bool) {
    let lib = &ctx.lib;
    let mut sizing = SizingMap::new();
    let mut area = sta::area(n, lib, &sizing, false);
    let mut cpd = sta::analyze(n, lib, &sizing).cpd;
    let mut history = vec![cpd];
    if area > area_con {
        warn!("area {area} at X1 exceeds the budget {area_con}; sizing skipped");
        return (sizing, history, true);
    }
    while let Some(step) = best_upsize(n, ctx, &sizing, cpd, area_con - area) {
        let drive = sizing.get(step.gate).upsized().expect("candidate was upsizable");
        sizing.set(step.gate, drive);
        area += step.added_area;
        cpd = step.cpd;
        history.push(cpd);
        debug!("upsized {:?} to {drive}: cpd {cpd:.4}, area {area:.2}", step.gate);
    }
    (sizing, history, false)
}

fn best_upsize(n: &Netlist, ctx: &ReferenceContext, sizing: &SizingMap, cpd: f64, budget: f64) -> Option<Upsize> {
    let lib = &ctx.lib;
    let timing = sta::analyze(n, lib, sizing);
    let mut best: Option<(f64, Upsize)> = None;
    let mut candidates = timing.critical_gates(n);
    candidates.sort_unstable();
    for g in candidates {
        let gate = &n.gates()[&g];
        let from = sizing.get(g);
        let Some(to) = from.upsized() else { continue };
        let added = lib.area_of(gate.kind, to, gate.fanins.len()) - lib.area_of(gate.kind, from, gate.fanins.len());
        if added > budget + TIE_TOLERANCE {
            continue;
        }
        let mut trial = sizing.clone();
        trial.set(g, to);
        let new_cpd = sta::analyze(n, lib, &trial).cpd;
        let gain = cpd - new_cpd;
        if gain <= TIE_TOLERANCE {
            continue;
        }
        let score = gain / added.max(f64::MIN_POSITIVE);
        if best.as_ref().is_none_or(|(s, _)| score > *s + TIE_TOLERANCE) {
            best = Some((score, Upsize { gate: g, cpd: new_cpd, added_area: added }));
        }
    }
    best.map(|(_, u)| u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcgwo::default_vectors;
    use crate::netlist::parse_bench;
    use crate::sta::{CellLibrary, Drive};

    fn chain() -> Netlist {
        parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(z)\nx1 = AND(a, b)\nx2 = NOT(x1)\nz = OR(x2, b)").unwrap()
    }

    fn ctx(n: &Netlist) -> ReferenceContext {
        let v = default_vectors(n.inputs().len(), 0, 0).unwrap();
        ReferenceContext::new(n.clone(), CellLibrary::default(), v).unwrap()
    }

    #[test]
    fn generous_budget_reaches_x4() {
        let n = chain();
        let c = ctx(&n);
        let v = default_vectors(2, 0, 0).unwrap();
        let r = post_optimize(&n, &c, 1e9, &v).unwrap();
        for g in n.gates().values().filter(|g| g.kind != crate::netlist::GateKind::Input) {
            assert_eq!(r.sizing.get(g.id), Drive::X4);
        }
        assert!(r.cpd_fac < c.cpd_ori);
        assert!(r.cpd_history.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(r.final_error.er, 0.0);
    }

    #[test]
    fn tight_budget_keeps_x1() {
        let n = chain();
        let c = ctx(&n);
        let v = default_vectors(2, 0, 0).unwrap();
        let r = post_optimize(&n, &c, c.area_ori, &v).unwrap();
        assert!(r.sizing.is_empty());
        assert_eq!(r.ratio_cpd, 1.0);
        assert!(!r.area_infeasible);
        let r = post_optimize(&n, &c, c.area_ori - 1.0, &v).unwrap();
        assert!(r.area_infeasible);
    }

    #[test]
    fn dangling_gates_are_removed() {
        let n = parse_bench("INPUT(a)\nOUTPUT(z)\nd = NOT(a)\nz = BUFF(a)").unwrap();
        let c = ctx(&n);
        let v = default_vectors(1, 0, 0).unwrap();
        let r = post_optimize(&n, &c, 100.0, &v).unwrap();
        assert_eq!(r.final_netlist.logic_gate_count(), 1);
        assert!(r.final_area <= 100.0);
    }
}
