// SPDX-License-Identifier: Apache-2.0
//! Reference implementations used as test oracles. Each one is written
//! directly from the definitions, independently of the library's
//! bit-parallel, peeling or dynamic-programming code.
#![allow(dead_code)]

use std::collections::HashMap;

use tdals::netlist::{GateId, GateKind, Netlist, Signal};
use tdals::sta::Drive;

/// Evaluates one gate function on booleans, written out per kind.
pub fn gate_fn(kind: GateKind, ins: &[bool]) -> bool {
    match kind {
        GateKind::And => ins.iter().all(|&b| b),
        GateKind::Nand => !ins.iter().all(|&b| b),
        GateKind::Or => ins.iter().any(|&b| b),
        GateKind::Nor => !ins.iter().any(|&b| b),
        GateKind::Xor => ins.iter().filter(|&&b| b).count() % 2 == 1,
        GateKind::Xnor => ins.iter().filter(|&&b| b).count() % 2 == 0,
        GateKind::Not => !ins[0],
        GateKind::Buf => ins[0],
        GateKind::Input => unreachable!("inputs carry assigned values"),
    }
}

/// Memoized recursive evaluation of every gate for one input assignment.
pub fn interpret_all(n: &Netlist, assignment: &[bool]) -> HashMap<GateId, bool> {
    fn eval(n: &Netlist, id: GateId, memo: &mut HashMap<GateId, bool>) -> bool {
        if let Some(&v) = memo.get(&id) {
            return v;
        }
        let g = &n.gates()[&id];
        let ins: Vec<bool> = g
            .fanins
            .iter()
            .map(|s| match *s {
                Signal::Const0 => false,
                Signal::Const1 => true,
                Signal::Gate(f) => eval(n, f, memo),
            })
            .collect();
        let v = gate_fn(g.kind, &ins);
        memo.insert(id, v);
        v
    }
    let mut memo: HashMap<GateId, bool> = n.inputs().iter().copied().zip(assignment.iter().copied()).collect();
    for &id in n.gates().keys() {
        eval(n, id, &mut memo);
    }
    memo
}

pub fn interpret(n: &Netlist, assignment: &[bool]) -> Vec<bool> {
    let values = interpret_all(n, assignment);
    n.outputs()
        .iter()
        .map(|s| match *s {
            Signal::Const0 => false,
            Signal::Const1 => true,
            Signal::Gate(id) => values[&id],
        })
        .collect()
}

/// Input `i` takes bit `i` of `k`.
pub fn assignment(m: usize, k: usize) -> Vec<bool> {
    (0..m).map(|i| (k >> i) & 1 == 1).collect()
}

pub fn output_value(bits: &[bool]) -> f64 {
    bits.iter().enumerate().map(|(i, &b)| if b { (i as f64).exp2() } else { 0.0 }).sum()
}

/// Exact ER and NMED by enumerating every input vector one at a time.
pub fn exact_errors(acc: &Netlist, app: &Netlist) -> (f64, f64) {
    let m = acc.inputs().len();
    let total = 1usize << m;
    let n = acc.outputs().len();
    let max = (n as f64).exp2() - 1.0;
    let mut wrong = 0usize;
    let mut dist = 0.0;
    for k in 0..total {
        let a = interpret(acc, &assignment(m, k));
        let b = interpret(app, &assignment(m, k));
        if a != b {
            wrong += 1;
        }
        dist += (output_value(&a) - output_value(&b)).abs();
    }
    (wrong as f64 / total as f64, dist / total as f64 / max)
}

pub fn exhaustively_equivalent(a: &Netlist, b: &Netlist) -> bool {
    let m = a.inputs().len();
    m == b.inputs().len()
        && (0..1usize << m).all(|k| interpret(a, &assignment(m, k)) == interpret(b, &assignment(m, k)))
}

/// Pareto ranks by definition: rank r holds the points not dominated by any
/// point outside ranks 0..r.
pub fn brute_force_ranks(points: &[(f64, f64)]) -> Vec<usize> {
    let dominates = |a: (f64, f64), b: (f64, f64)| a.0 >= b.0 && a.1 >= b.1 && (a.0 > b.0 || a.1 > b.1);
    let mut rank = vec![usize::MAX; points.len()];
    let mut r = 0;
    while rank.contains(&usize::MAX) {
        let layer: Vec<usize> = (0..points.len())
            .filter(|&i| rank[i] == usize::MAX)
            .filter(|&i| !(0..points.len()).any(|j| rank[j] == usize::MAX && dominates(points[j], points[i])))
            .collect();
        for i in layer {
            rank[i] = r;
        }
        r += 1;
    }
    rank
}

/// Default library numbers, restated.
pub fn ref_delay(kind: GateKind, drive: Drive, fanins: usize, fanout: usize) -> f64 {
    let intrinsic = match kind {
        GateKind::Input => return 0.0,
        GateKind::Not | GateKind::Buf => 1.0,
        GateKind::Xor | GateKind::Xnor => 2.0,
        _ => 1.5,
    };
    let mult = match drive {
        Drive::X1 => 1.0,
        Drive::X2 => 2.0,
        Drive::X4 => 4.0,
    };
    intrinsic + 0.25 * fanins.saturating_sub(2) as f64 + 0.2 / mult * fanout as f64
}

pub fn ref_area(kind: GateKind, drive: Drive, fanins: usize) -> f64 {
    let base = match kind {
        GateKind::Input => return 0.0,
        GateKind::Not | GateKind::Buf => 1.0,
        GateKind::Xor | GateKind::Xnor => 3.0,
        _ => 2.0,
    };
    let scale = match drive {
        Drive::X1 => 1.0,
        Drive::X2 => 1.8,
        Drive::X4 => 3.2,
    };
    base * scale + 0.5 * fanins.saturating_sub(2) as f64
}

fn ref_fanout(n: &Netlist, id: GateId) -> usize {
    let slots = n.gates().values().flat_map(|g| g.fanins.iter()).filter(|s| **s == Signal::Gate(id)).count();
    slots + n.outputs().iter().filter(|s| **s == Signal::Gate(id)).count()
}

/// Longest PI-to-PO path delay by enumerating every path (exponential;
/// small circuits only).
pub fn all_paths_cpd(n: &Netlist, drive: &dyn Fn(GateId) -> Drive) -> f64 {
    fn longest(n: &Netlist, id: GateId, drive: &dyn Fn(GateId) -> Drive) -> f64 {
        let g = &n.gates()[&id];
        let d = ref_delay(g.kind, drive(id), g.fanins.len(), ref_fanout(n, id));
        let mut best = 0.0f64;
        for s in &g.fanins {
            if let Signal::Gate(f) = *s {
                best = best.max(longest(n, f, drive));
            }
        }
        best + d
    }
    n.outputs().iter().filter_map(|s| s.gate()).map(|id| longest(n, id, drive)).fold(0.0, f64::max)
}

/// Minimum cpd over every drive assignment whose area fits `budget`.
pub fn exhaustive_best_cpd(n: &Netlist, budget: f64) -> f64 {
    let logic: Vec<GateId> = n.gates().values().filter(|g| g.kind != GateKind::Input).map(|g| g.id).collect();
    let drives = [Drive::X1, Drive::X2, Drive::X4];
    let mut best = f64::INFINITY;
    for code in 0..3usize.pow(logic.len() as u32) {
        let mut c = code;
        let mut map = HashMap::new();
        for &id in &logic {
            map.insert(id, drives[c % 3]);
            c /= 3;
        }
        let area: f64 = logic
            .iter()
            .map(|id| {
                let g = &n.gates()[id];
                ref_area(g.kind, map[id], g.fanins.len())
            })
            .sum();
        if area <= budget + 1e-9 {
            best = best.min(all_paths_cpd(n, &|id| map.get(&id).copied().unwrap_or(Drive::X1)));
        }
    }
    best
}

/// `n` with up to `k` similarity-guided LACs on random live targets.
pub fn approximate(n: &Netlist, k: usize, seed: u64) -> Netlist {
    use rand::{Rng, SeedableRng};
    use tdals::sim::{simulate, VectorMode, VectorSet};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let m = n.inputs().len();
    let v = VectorSet::generate(m, VectorMode::MonteCarlo { num: 512, seed }).unwrap();
    let mut cur = n.clone();
    for _ in 0..k {
        let live: Vec<GateId> =
            cur.remove_dangling().gates().values().filter(|g| g.kind != GateKind::Input).map(|g| g.id).collect();
        if live.is_empty() {
            break;
        }
        let traces = simulate(&cur, &v).unwrap();
        let target = live[rng.gen_range(0..live.len())];
        let lac = tdals::lac::best_lac(&cur, target, &traces).unwrap();
        cur = tdals::lac::apply_lac(&cur, &lac).unwrap();
    }
    cur
}
