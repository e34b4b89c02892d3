// SPDX-License-Identifier: Apache-2.0
//! Double-chase grey wolf optimizer over approximate circuits.
//!
//! Each iteration divides the population into a leader, three elites and
//! the remaining omegas by fitness. Elites chase the leader and omegas chase
//! the elites; each chase either searches (one LAC on a critical path) or
//! reproduces (merges output cones with a fitter partner). The population
//! before and after the chase is then filtered by the relaxed error bound,
//! ranked into Pareto fronts over (depth ratio, area ratio) and truncated by
//! crowding distance.

mod chase;
mod config;
mod individual;
pub mod pareto;
mod schedule;

pub use chase::{
    chase_step, dispatch, distance_from, execute, fitness_distance, level, merge_cones, reproduce, search,
    structural_diff, ChaseAction, ChaseError, PopulationDivision, Role, ELITES,
};
pub use config::{ConfigError, Metric, OptimizerConfig};
pub use individual::{
    default_vectors, fitness, fitness_from, Individual, ReferenceContext, DEFAULT_VECTORS, EPSILON, EXHAUSTIVE_LIMIT,
};
pub use schedule::{encircling_coeff, encircling_from, relax_bound, scaling_factor, stream, stream_seed, Purpose};

use std::collections::HashMap;
use std::fmt::Write;

use log::{info, warn};
use rand::Rng;
use thiserror::Error;

use crate::lac;
use crate::netlist::GateKind;
use crate::par;
use crate::sim::{self, SimError};

/// Attempts per initial LAC to find one that respects the starting bound.
const INIT_ATTEMPTS: usize = 4;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Chase(#[from] ChaseError),
}

/// Candidates that passed the error filter, partitioned into fronts.
#[derive(Clone, Debug)]
pub struct ParetoRanking {
    pub members: Vec<Individual>,
    pub fronts: Vec<Vec<usize>>,
    pub dominated_by: Vec<Vec<usize>>,
    pub dist: Vec<f64>,
}

impl ParetoRanking {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Drops candidates whose error exceeds `bound`, then ranks the rest.
pub fn rank_candidates(
    candidates: Vec<Individual>,
    bound: f64,
    metric: Metric,
    ctx: &ReferenceContext,
) -> ParetoRanking {
    let members: Vec<Individual> = candidates.into_iter().filter(|c| c.error(metric) <= bound).collect();
    let points: Vec<(f64, f64)> = members.iter().map(|m| (m.depth_ratio(ctx), m.area_ratio(ctx))).collect();
    let sorted = pareto::nondominated_sort(&points);
    let mut dist = vec![0.0; members.len()];
    for front in &sorted.fronts {
        let pts: Vec<(f64, f64)> = front.iter().map(|&i| points[i]).collect();
        let keys: Vec<u64> = front.iter().map(|&i| members[i].lineage).collect();
        for (k, d) in pareto::crowding(&pts, &keys).into_iter().enumerate() {
            dist[front[k]] = d;
        }
    }
    ParetoRanking { members, fronts: sorted.fronts, dominated_by: sorted.dominated_by, dist }
}

fn best_index(pop: &[Individual]) -> Option<usize> {
    (0..pop.len()).min_by(|&a, &b| pop[b].fit.total_cmp(&pop[a].fit).then(pop[a].lineage.cmp(&pop[b].lineage)))
}

/// Fronts in rank order, each sorted by crowding distance (largest first),
/// truncated to `n`. The fittest member always survives; a short pool is
/// padded with copies of it.
pub fn select_next(ranking: &ParetoRanking, n: usize) -> Vec<Individual> {
    let Some(best) = best_index(&ranking.members) else {
        return Vec::new();
    };
    let mut order = Vec::with_capacity(ranking.members.len());
    for front in &ranking.fronts {
        let dist: Vec<f64> = front.iter().map(|&i| ranking.dist[i]).collect();
        let keys: Vec<u64> = front.iter().map(|&i| ranking.members[i].lineage).collect();
        order.extend(pareto::by_crowding(&dist, &keys).into_iter().map(|k| front[k]));
    }
    order.truncate(n);
    if !order.contains(&best) {
        *order.last_mut().expect("n > 0") = best;
    }
    while order.len() < n {
        order.push(best);
    }
    order.into_iter().map(|i| ranking.members[i].clone()).collect()
}

/// Drops structurally identical netlists, keeping the first occurrence.
pub fn dedup(candidates: Vec<Individual>) -> Vec<Individual> {
    let mut seen: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut out: Vec<Individual> = Vec::with_capacity(candidates.len());
    for c in candidates {
        let key = c.netlist.structure_key();
        let bucket = seen.entry(key).or_default();
        if bucket.iter().any(|&i| out[i].netlist == c.netlist) {
            continue;
        }
        bucket.push(out.len());
        out.push(c);
    }
    out
}

/// Accurate circuit plus 1..=`init_lacs_max` random-target LACs per slot.
/// A LAC that would push the error past the starting bound is redrawn a
/// few times and otherwise skipped.
pub fn init_population(ctx: &ReferenceContext, cfg: &OptimizerConfig) -> Result<Vec<Individual>, OptimizeError> {
    cfg.validate()?;
    let bound = relax_bound(0, cfg);
    let parallel = cfg.jobs != 1;
    par::map_indexed(cfg.population, parallel, |slot| -> Result<Individual, OptimizeError> {
        let mut rng = stream(cfg.seed, 0, slot, Purpose::Init);
        let k = rng.gen_range(1..=cfg.init_lacs_max);
        let mut current = ctx.accurate.clone();
        for _ in 0..k {
            let live: Vec<_> = current
                .remove_dangling()
                .gates()
                .values()
                .filter(|g| g.kind != GateKind::Input)
                .map(|g| g.id)
                .collect();
            if live.is_empty() {
                break;
            }
            let traces = sim::simulate(&current, &ctx.vectors)?;
            for _ in 0..INIT_ATTEMPTS {
                let target = live[rng.gen_range(0..live.len())];
                let Ok(choice) = lac::best_lac(&current, target, &traces) else { continue };
                let Ok(next) = lac::apply_lac(&current, &choice) else { continue };
                let err = ctx.error_of(&next)?;
                let e = match cfg.metric {
                    Metric::Er => err.er,
                    Metric::Nmed => err.nmed,
                };
                if e <= bound {
                    current = next;
                    break;
                }
            }
        }
        Ok(Individual::evaluate(current, ctx, cfg, slot as u64)?)
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub bound: f64,
    pub best_fit: f64,
    pub best_depth_ratio: f64,
    pub best_area_ratio: f64,
    pub feasible_count: usize,
}

/// Per-iteration summary of the run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,bound,best_fit,best_depth_ratio,best_area_ratio,feasible_count\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.iter, r.bound, r.best_fit, r.best_depth_ratio, r.best_area_ratio, r.feasible_count
            );
        }
        out
    }
}

/// State handed to a run observer after each population update.
pub struct IterationView<'a> {
    pub iter: usize,
    pub bound: f64,
    pub population: &'a [Individual],
    pub candidates: usize,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub best: Individual,
    pub trace: ConvergenceTrace,
    /// False when no individual met the final bound; `best` is then the
    /// accurate circuit.
    pub feasible: bool,
    pub population: Vec<Individual>,
}

pub fn run(ctx: &ReferenceContext, cfg: &OptimizerConfig) -> Result<RunOutcome, OptimizeError> {
    run_observed(ctx, cfg, |_| {})
}

pub fn run_observed<F>(
    ctx: &ReferenceContext,
    cfg: &OptimizerConfig,
    mut observe: F,
) -> Result<RunOutcome, OptimizeError>
where
    F: FnMut(&IterationView<'_>) + Send,
{
    cfg.validate()?;
    par::with_jobs(cfg.jobs, || {
        let parallel = cfg.jobs != 1;
        let mut pop = init_population(ctx, cfg)?;
        let mut trace = ConvergenceTrace::default();
        let initial_bound = relax_bound(0, cfg);
        trace.rows.push(summarize(0, initial_bound, &pop, pop.len(), ctx));
        observe(&IterationView { iter: 0, bound: initial_bound, population: &pop, candidates: pop.len() });

        for iter in 1..=cfg.iterations {
            let division = PopulationDivision::new(&pop);
            let chasers: Vec<usize> = division.elites().iter().chain(division.omegas()).copied().collect();
            let base = (iter as u64) << 32;
            let chased = par::map_indexed(chasers.len() + 1, parallel, |k| -> Result<Vec<Individual>, OptimizeError> {
                if k == 0 {
                    let mut rng = stream(cfg.seed, iter, 0, Purpose::LeaderSearch);
                    let leader = &pop[division.leader()];
                    return Ok(vec![search(leader, ctx, cfg, &mut rng, base)?]);
                }
                let mut rng = stream(cfg.seed, iter, k, Purpose::Chase);
                let (_, out) =
                    chase_step(&pop, &division, chasers[k - 1], iter, ctx, cfg, &mut rng, base | (k as u64) << 2)?;
                Ok(out)
            });
            let mut candidates = pop.clone();
            for out in chased {
                candidates.extend(out?);
            }
            let candidates = dedup(candidates);
            let pool = candidates.len();
            let bound = relax_bound(iter, cfg);
            let ranking = rank_candidates(candidates, bound, cfg.metric, ctx);
            let feasible = ranking.members.len();
            if ranking.is_empty() {
                warn!("iteration {iter}: no candidate within bound {bound}; keeping population");
            } else {
                pop = select_next(&ranking, cfg.population);
            }
            let row = summarize(iter, bound, &pop, feasible, ctx);
            info!(
                "iter {iter}: bound {bound:.5} best fit {:.4} depth x{:.3} area x{:.3} ({feasible}/{pool} feasible)",
                row.best_fit, row.best_depth_ratio, row.best_area_ratio
            );
            trace.rows.push(row);
            observe(&IterationView { iter, bound, population: &pop, candidates: pool });
        }

        let feasible_pop: Vec<Individual> = pop.iter().filter(|i| i.error(cfg.metric) <= cfg.e_max).cloned().collect();
        let (best, feasible) = match best_index(&feasible_pop) {
            Some(i) => (feasible_pop[i].clone(), true),
            None => {
                warn!("no individual satisfies the final bound {}", cfg.e_max);
                (Individual::evaluate(ctx.accurate.clone(), ctx, cfg, u64::MAX)?, false)
            }
        };
        Ok(RunOutcome { best, trace, feasible, population: pop })
    })
}

fn summarize(iter: usize, bound: f64, pop: &[Individual], feasible_count: usize, ctx: &ReferenceContext) -> TraceRow {
    let best = &pop[best_index(pop).expect("population is never empty")];
    TraceRow {
        iter,
        bound,
        best_fit: best.fit,
        best_depth_ratio: best.depth / ctx.depth_ori,
        best_area_ratio: best.area / ctx.area_ori,
        feasible_count,
    }
}
