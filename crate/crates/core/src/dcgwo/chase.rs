// SPDX-License-Identifier: Apache-2.0
//! Population division, the two chases, circuit searching and circuit
//! reproduction.

use std::collections::{BTreeMap, BTreeSet};

use log::{debug, warn};
use rand::Rng;
use thiserror::Error;

use crate::lac;
use crate::netlist::{Gate, GateId, Netlist};
use crate::sim::{self, SimError};
use crate::sta::{self, SizingMap};

use super::individual::{Individual, ReferenceContext, EPSILON};
use super::schedule::{encircling_coeff, scaling_factor};
use super::OptimizerConfig;

/// Number of elite circuits (fitness ranks 2 to 4).
pub const ELITES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Leader,
    Elite,
    Omega,
}

#[derive(Debug, Error)]
pub enum ChaseError {
    #[error("the leader does not chase")]
    LeaderChase,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Population indices ordered by fitness, best first (ties by lineage).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PopulationDivision {
    order: Vec<usize>,
}

impl PopulationDivision {
    pub fn new(pop: &[Individual]) -> Self {
        assert!(pop.len() > ELITES, "population too small to divide");
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| pop[b].fit.total_cmp(&pop[a].fit).then(pop[a].lineage.cmp(&pop[b].lineage)));
        PopulationDivision { order }
    }

    pub fn leader(&self) -> usize {
        self.order[0]
    }

    pub fn elites(&self) -> &[usize] {
        &self.order[1..=ELITES]
    }

    pub fn omegas(&self) -> &[usize] {
        &self.order[ELITES + 1..]
    }

    pub fn role(&self, idx: usize) -> Role {
        match self.order.iter().position(|&i| i == idx) {
            Some(0) => Role::Leader,
            Some(p) if p <= ELITES => Role::Elite,
            _ => Role::Omega,
        }
    }
}

/// Distance of an elite to the scaled leader fitness, or of an omega to the
/// scaled mean elite fitness.
pub fn distance_from(role: Role, fit: f64, leader_fit: f64, elite_fit_sum: f64, r_c: f64) -> Result<f64, ChaseError> {
    match role {
        Role::Leader => Err(ChaseError::LeaderChase),
        Role::Elite => Ok(r_c * leader_fit - fit),
        Role::Omega => Ok(r_c / ELITES as f64 * elite_fit_sum - fit),
    }
}

/// Draws `r_c ~ U(0, 2)` and returns the fitness distance of `pop[idx]`.
pub fn fitness_distance<R: Rng + ?Sized>(
    pop: &[Individual],
    division: &PopulationDivision,
    idx: usize,
    rng: &mut R,
) -> Result<f64, ChaseError> {
    let role = division.role(idx);
    if role == Role::Leader {
        return Err(ChaseError::LeaderChase);
    }
    let r_c: f64 = rng.gen_range(0.0..=2.0);
    let elite_sum: f64 = division.elites().iter().map(|&i| pop[i].fit).sum();
    distance_from(role, pop[idx].fit, pop[division.leader()].fit, elite_sum, r_c)
}

/// Per-output score combining timing slack and error; higher is better.
pub fn level(po_arrival: f64, po_error: f64, w_t: f64, w_e: f64) -> f64 {
    w_t / po_arrival.max(EPSILON) + w_e / po_error.max(EPSILON)
}

/// Merges the better output cones of two parents. Gate adjacency is taken
/// from whichever cone writes a gate first; gates outside every chosen cone
/// come from `x`, then `y`.
pub fn reproduce(
    x: &Individual,
    y: &Individual,
    ctx: &ReferenceContext,
    cfg: &OptimizerConfig,
    lineage: u64,
) -> Result<Individual, SimError> {
    let (w_t, w_e) = cfg.level_weights(ctx.cpd_ori);
    let picks: Vec<bool> = (0..x.netlist.outputs().len())
        .map(|i| {
            let lx = level(x.po_arrival[i], x.err.per_po_error[i], w_t, w_e);
            let ly = level(y.po_arrival[i], y.err.per_po_error[i], w_t, w_e);
            ly > lx
        })
        .collect();
    match merge_cones(&x.netlist, &y.netlist, &picks) {
        Ok(child) => Individual::evaluate(child, ctx, cfg, lineage),
        Err(e) => {
            warn!("reproduction of {} and {} rejected: {e}", x.lineage, y.lineage);
            let better = if y.fit > x.fit { y } else { x };
            Ok(Individual { lineage, ..better.clone() })
        }
    }
}

/// Structural half of reproduction: `take_y[i]` selects the parent whose
/// cone drives output `i`.
pub fn merge_cones(x: &Netlist, y: &Netlist, take_y: &[bool]) -> Result<Netlist, crate::netlist::NetlistError> {
    let mut written: BTreeMap<GateId, Gate> = BTreeMap::new();
    let mut outputs = Vec::with_capacity(take_y.len());
    for (i, &use_y) in take_y.iter().enumerate() {
        let parent = if use_y { y } else { x };
        let root = parent.outputs()[i];
        outputs.push(root);
        let mut stack: Vec<GateId> = root.gate().into_iter().collect();
        while let Some(id) = stack.pop() {
            if written.contains_key(&id) {
                continue;
            }
            let gate = parent.gates()[&id].clone();
            stack.extend(gate.fanins.iter().rev().filter_map(|s| s.gate()));
            written.insert(id, gate);
        }
    }
    for parent in [x, y] {
        for (id, g) in parent.gates() {
            written.entry(*id).or_insert_with(|| g.clone());
        }
    }
    Netlist::from_map(x.name().to_string(), written, x.inputs().to_vec(), outputs, x.names().clone())
}

/// One similarity-guided substitution on `ind`; returns a copy of `ind`
/// when no substitution is possible.
pub fn search<R: Rng + ?Sized>(
    ind: &Individual,
    ctx: &ReferenceContext,
    cfg: &OptimizerConfig,
    rng: &mut R,
    lineage: u64,
) -> Result<Individual, SimError> {
    let live = ind.netlist.remove_dangling();
    let timing = sta::analyze(&live, &ctx.lib, &SizingMap::new());
    let traces = sim::simulate(&ind.netlist, &ctx.vectors)?;
    match lac::circuit_searching(&ind.netlist, &timing, &traces, rng) {
        Ok((next, applied)) => {
            debug!("lineage {lineage}: target {} -> {}", applied.target, applied.switch);
            Individual::evaluate(next, ctx, cfg, lineage)
        }
        Err(e) => {
            debug!("searching on {} skipped: {e}", ind.lineage);
            Ok(ind.clone())
        }
    }
}

/// What a chasing circuit does this iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChaseAction {
    /// Elite with `W > S_e`: reproduce with the leader.
    ReproduceWithLeader,
    /// Elite with `W <= S_e`, or the searching side of the omega coin.
    Search,
    /// Omega with `W > S_omega`: reproduce with an elite, then search the child.
    ReproduceThenSearch,
    /// Reproducing side of the omega coin.
    ReproduceWithElite,
}

/// Chooses the action; the omega coin flip is drawn from `rng` only when
/// needed.
pub fn dispatch<R: Rng + ?Sized>(role: Role, w: f64, cfg: &OptimizerConfig, rng: &mut R) -> ChaseAction {
    match role {
        Role::Elite if w > cfg.s_e => ChaseAction::ReproduceWithLeader,
        Role::Elite | Role::Leader => ChaseAction::Search,
        Role::Omega if w > cfg.s_omega => ChaseAction::ReproduceThenSearch,
        Role::Omega => {
            if rng.gen_bool(0.5) {
                ChaseAction::Search
            } else {
                ChaseAction::ReproduceWithElite
            }
        }
    }
}

/// Carries out `action` for `pop[idx]`. New individuals get lineage IDs
/// `lineage`, `lineage + 1`.
#[allow(clippy::too_many_arguments)]
pub fn execute<R: Rng + ?Sized>(
    action: ChaseAction,
    pop: &[Individual],
    division: &PopulationDivision,
    idx: usize,
    ctx: &ReferenceContext,
    cfg: &OptimizerConfig,
    rng: &mut R,
    lineage: u64,
) -> Result<Vec<Individual>, SimError> {
    let ind = &pop[idx];
    let elite = |rng: &mut R| &pop[division.elites()[rng.gen_range(0..ELITES)]];
    Ok(match action {
        ChaseAction::ReproduceWithLeader => {
            vec![reproduce(ind, &pop[division.leader()], ctx, cfg, lineage)?]
        }
        ChaseAction::Search => vec![search(ind, ctx, cfg, rng, lineage)?],
        ChaseAction::ReproduceWithElite => {
            let partner = elite(rng);
            vec![reproduce(ind, partner, ctx, cfg, lineage)?]
        }
        ChaseAction::ReproduceThenSearch => {
            let partner = elite(rng);
            let child = reproduce(ind, partner, ctx, cfg, lineage)?;
            let grandchild = search(&child, ctx, cfg, rng, lineage + 1)?;
            vec![child, grandchild]
        }
    })
}

/// Full chase of one elite or omega at iteration `iter`: `W = A * D`, then
/// dispatch and execute.
#[allow(clippy::too_many_arguments)]
pub fn chase_step<R: Rng + ?Sized>(
    pop: &[Individual],
    division: &PopulationDivision,
    idx: usize,
    iter: usize,
    ctx: &ReferenceContext,
    cfg: &OptimizerConfig,
    rng: &mut R,
    lineage: u64,
) -> Result<(ChaseAction, Vec<Individual>), ChaseError> {
    let a = scaling_factor(iter, cfg.iterations);
    let big_a = encircling_coeff(a, rng);
    let d = fitness_distance(pop, division, idx, rng)?;
    let w = big_a * d;
    let action = dispatch(division.role(idx), w, cfg, rng);
    debug!("slot {idx}: W = {w:.4}, {action:?}");
    Ok((action, execute(action, pop, division, idx, ctx, cfg, rng, lineage)?))
}

/// Gate IDs whose adjacency differs between two netlists, plus differing
/// output slots.
pub fn structural_diff(a: &Netlist, b: &Netlist) -> (BTreeSet<GateId>, BTreeSet<usize>) {
    let ids: BTreeSet<GateId> = a.gates().keys().chain(b.gates().keys()).copied().collect();
    let gates = ids.into_iter().filter(|id| a.gate(*id) != b.gate(*id)).collect();
    let outs =
        (0..a.outputs().len().max(b.outputs().len())).filter(|&i| a.outputs().get(i) != b.outputs().get(i)).collect();
    (gates, outs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcgwo::individual::default_vectors;
    use crate::netlist::{parse_bench, Signal};
    use crate::sim::VectorSet;
    use crate::sta::CellLibrary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ind_with_fit(fit: f64, lineage: u64) -> Individual {
        let n = parse_bench("INPUT(a)\nOUTPUT(z)\nz = NOT(a)").unwrap();
        Individual {
            netlist: n,
            fit,
            depth: 1.0,
            area: 1.0,
            err: crate::sim::ErrorReport::zero(1, 2),
            po_arrival: vec![1.0],
            lineage,
            degenerate: false,
        }
    }

    #[test]
    fn division_orders_by_fitness() {
        let pop: Vec<Individual> =
            [1.0, 3.0, 2.0, 2.0, 0.5, 5.0].iter().enumerate().map(|(i, f)| ind_with_fit(*f, i as u64)).collect();
        let d = PopulationDivision::new(&pop);
        assert_eq!(d.leader(), 5);
        assert_eq!(d.elites(), &[1, 2, 3]);
        assert_eq!(d.omegas(), &[0, 4]);
        assert_eq!(d.role(4), Role::Omega);
        assert_eq!(d.role(2), Role::Elite);
    }

    #[test]
    fn distance_arithmetic() {
        assert_eq!(distance_from(Role::Elite, 1.5, 1.5, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(distance_from(Role::Omega, 2.0, 9.0, 6.0, 1.0).unwrap(), 0.0);
        assert_eq!(distance_from(Role::Elite, 1.0, 1.5, 0.0, 2.0).unwrap(), 2.0);
        assert!(matches!(distance_from(Role::Leader, 1.0, 1.0, 0.0, 1.0), Err(ChaseError::LeaderChase)));
        let pop: Vec<Individual> = (0..5).map(|i| ind_with_fit(i as f64, i)).collect();
        let d = PopulationDivision::new(&pop);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(fitness_distance(&pop, &d, d.leader(), &mut rng).is_err());
    }

    #[test]
    fn level_prefers_low_error_and_early_arrival() {
        assert!(level(2.0, 0.1, 1.0, 0.1) > level(2.0, 0.2, 1.0, 0.1));
        assert!(level(1.0, 0.1, 1.0, 0.1) > level(2.0, 0.1, 1.0, 0.1));
        // error-free output beats any erroneous one at equal arrival
        assert!(level(2.0, 0.0, 1.0, 0.1) > level(2.0, 1e-6, 1.0, 0.1));
        let cpd = 7.0;
        let l = level(cpd, 0.0, 0.9 * cpd, 0.2);
        assert!((l - (0.9 + 0.2 / EPSILON)).abs() < 1e-6);
    }

    #[test]
    fn dispatch_branches() {
        let cfg = OptimizerConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(dispatch(Role::Elite, cfg.s_e + 1.0, &cfg, &mut rng), ChaseAction::ReproduceWithLeader);
        assert_eq!(dispatch(Role::Elite, cfg.s_e, &cfg, &mut rng), ChaseAction::Search);
        assert_eq!(dispatch(Role::Omega, cfg.s_omega + 1.0, &cfg, &mut rng), ChaseAction::ReproduceThenSearch);
        let mut seen = BTreeSet::new();
        for _ in 0..64 {
            seen.insert(format!("{:?}", dispatch(Role::Omega, -1.0, &cfg, &mut rng)));
        }
        assert_eq!(seen.len(), 2);
    }

    // two independent output cones over shared inputs
    const TWO_PO: &str = "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(p)\nOUTPUT(q)\n\
        x = AND(a, b)\np = XOR(x, c)\ny = OR(b, c)\nq = NAND(y, a)\n";

    fn ctx_for(text: &str) -> ReferenceContext {
        let n = parse_bench(text).unwrap();
        let v: VectorSet = default_vectors(n.inputs().len(), 0, 0).unwrap();
        ReferenceContext::new(n, CellLibrary::default(), v).unwrap()
    }

    #[test]
    fn self_cross_preserves_function() {
        let ctx = ctx_for(TWO_PO);
        let cfg = OptimizerConfig::default();
        let x = Individual::evaluate(ctx.accurate.clone(), &ctx, &cfg, 0).unwrap();
        let child = reproduce(&x, &x, &ctx, &cfg, 1).unwrap();
        assert_eq!(child.netlist, x.netlist);
        assert_eq!(child.err.er, 0.0);
    }

    #[test]
    fn cone_taken_from_better_parent() {
        let ctx = ctx_for(TWO_PO);
        let cfg = OptimizerConfig::default();
        let x = Individual::evaluate(ctx.accurate.clone(), &ctx, &cfg, 0).unwrap();
        // y rewires output 1 (q) to y = OR(b, c): shorter, some error
        let yn = ctx
            .accurate
            .apply_fanin_edit(crate::netlist::Consumer::Output(1), Signal::Gate(GateId(6)), Signal::Gate(GateId(5)))
            .unwrap();
        let y = Individual::evaluate(yn.clone(), &ctx, &cfg, 1).unwrap();
        // force the choice structurally
        let child = merge_cones(&x.netlist, &y.netlist, &[false, true]).unwrap();
        let (gates, outs) = structural_diff(&child, &x.netlist);
        assert!(gates.is_empty());
        assert_eq!(outs, BTreeSet::from([1]));
        assert_eq!(child.outputs()[1], y.netlist.outputs()[1]);
        assert_eq!(child, yn);
        // and through the level comparison: y's output 1 errs, x's does not
        let via_level = reproduce(&x, &y, &ctx, &cfg, 2).unwrap();
        assert_eq!(via_level.netlist, x.netlist);
    }

    #[test]
    fn first_write_wins_on_shared_gates() {
        // x and y disagree on shared gate s; output 0 comes from y, so y's s wins
        let base = "INPUT(a)\nINPUT(b)\nOUTPUT(o0)\nOUTPUT(o1)\ns = AND(a, b)\no0 = NOT(s)\no1 = BUFF(s)\n";
        let x = parse_bench(base).unwrap();
        let y = x
            .apply_fanin_edit(crate::netlist::Consumer::Gate(GateId(2)), Signal::Gate(GateId(1)), Signal::Const1)
            .unwrap();
        let child = merge_cones(&x, &y, &[true, false]).unwrap();
        assert_eq!(child.gate(GateId(2)), y.gate(GateId(2)));
        let child = merge_cones(&x, &y, &[false, true]).unwrap();
        assert_eq!(child.gate(GateId(2)), x.gate(GateId(2)));
    }

    #[test]
    fn forced_branches_produce_expected_counts() {
        let ctx = ctx_for(TWO_PO);
        let cfg = OptimizerConfig::default();
        let pop: Vec<Individual> =
            (0..6).map(|i| Individual::evaluate(ctx.accurate.clone(), &ctx, &cfg, i).unwrap()).collect();
        let d = PopulationDivision::new(&pop);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let elite = d.elites()[0];
        let omega = d.omegas()[0];
        let out =
            execute(dispatch(Role::Elite, cfg.s_e + 1.0, &cfg, &mut rng), &pop, &d, elite, &ctx, &cfg, &mut rng, 100)
                .unwrap();
        assert_eq!(out.len(), 1);
        let out = execute(
            dispatch(Role::Omega, cfg.s_omega + 1.0, &cfg, &mut rng),
            &pop,
            &d,
            omega,
            &ctx,
            &cfg,
            &mut rng,
            200,
        )
        .unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!((out[0].lineage, out[1].lineage), (200, 201));
        // a = 0 at the cap, so W = 0 and elites search
        let (action, _) = chase_step(&pop, &d, elite, cfg.iterations, &ctx, &cfg, &mut rng, 300).unwrap();
        assert_eq!(action, ChaseAction::Search);
    }
}
