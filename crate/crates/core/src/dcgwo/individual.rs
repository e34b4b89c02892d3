// SPDX-License-Identifier: Apache-2.0
use crate::netlist::Netlist;
use crate::sim::{self, ErrorReport, SimError, VectorMode, VectorSet};
use crate::sta::{self, CellLibrary, SizingMap};

use super::{Metric, OptimizerConfig};

/// Floor applied to zero depth/area/error denominators.
pub const EPSILON: f64 = 1e-9;

/// Inputs up to this count are evaluated exhaustively by default.
pub const EXHAUSTIVE_LIMIT: usize = 16;

/// Default Monte Carlo sample count.
pub const DEFAULT_VECTORS: usize = 100_000;

/// Exhaustive for small input counts, otherwise `count` Monte Carlo samples.
pub fn default_vectors(num_inputs: usize, count: usize, seed: u64) -> Result<VectorSet, SimError> {
    if num_inputs <= EXHAUSTIVE_LIMIT {
        VectorSet::generate(num_inputs, VectorMode::Exhaustive)
    } else {
        VectorSet::generate(num_inputs, VectorMode::MonteCarlo { num: count, seed })
    }
}

/// The accurate circuit and everything derived from it once per run.
#[derive(Clone, Debug)]
pub struct ReferenceContext {
    pub accurate: Netlist,
    pub depth_ori: f64,
    pub area_ori: f64,
    pub cpd_ori: f64,
    pub vectors: VectorSet,
    pub lib: CellLibrary,
    accurate_outputs: Vec<Vec<u64>>,
}

impl ReferenceContext {
    pub fn new(accurate: Netlist, lib: CellLibrary, vectors: VectorSet) -> Result<Self, SimError> {
        let live = accurate.remove_dangling();
        let timing = sta::analyze(&live, &lib, &SizingMap::new());
        let area_ori = sta::area(&live, &lib, &SizingMap::new(), false);
        let traces = sim::simulate(&accurate, &vectors)?;
        let accurate_outputs = sim::output_rows(&accurate, &traces);
        Ok(ReferenceContext {
            accurate,
            depth_ori: timing.cpd,
            area_ori,
            cpd_ori: timing.cpd,
            vectors,
            lib,
            accurate_outputs,
        })
    }

    /// Error of `approx` against the accurate circuit on the run's vectors.
    pub fn error_of(&self, approx: &Netlist) -> Result<ErrorReport, SimError> {
        sim::check_interface(&self.accurate, approx)?;
        let traces = sim::simulate(approx, &self.vectors)?;
        let rows = sim::output_rows(approx, &traces);
        Ok(sim::compare_outputs(&self.accurate_outputs, &rows, self.vectors.num_vectors()))
    }
}

/// One candidate circuit with cached evaluation results.
#[derive(Clone, Debug)]
pub struct Individual {
    /// Full netlist, dangling gates included, so gate IDs stay stable.
    pub netlist: Netlist,
    pub fit: f64,
    pub depth: f64,
    pub area: f64,
    pub err: ErrorReport,
    /// Arrival time at each output of the live circuit.
    pub po_arrival: Vec<f64>,
    pub lineage: u64,
    pub degenerate: bool,
}

impl Individual {
    pub fn evaluate(
        netlist: Netlist,
        ctx: &ReferenceContext,
        cfg: &OptimizerConfig,
        lineage: u64,
    ) -> Result<Self, SimError> {
        let live = netlist.remove_dangling();
        let timing = sta::analyze(&live, &ctx.lib, &SizingMap::new());
        let area = sta::area(&live, &ctx.lib, &SizingMap::new(), false);
        let err = ctx.error_of(&live)?;
        let (fit, degenerate) = fitness(timing.cpd, area, ctx, cfg);
        Ok(Individual {
            netlist,
            fit,
            depth: timing.cpd,
            area,
            err,
            po_arrival: timing.po_arrival,
            lineage,
            degenerate,
        })
    }

    pub fn error(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Er => self.err.er,
            Metric::Nmed => self.err.nmed,
        }
    }

    /// `f_d = depth_ori / depth_app`.
    pub fn depth_ratio(&self, ctx: &ReferenceContext) -> f64 {
        ctx.depth_ori / self.depth.max(EPSILON)
    }

    /// `f_a = area_ori / area_app`.
    pub fn area_ratio(&self, ctx: &ReferenceContext) -> f64 {
        ctx.area_ori / self.area.max(EPSILON)
    }
}

/// Weighted depth and area improvement ratios. The flag reports a zero
/// depth or area that was floored at `EPSILON`.
pub fn fitness(depth_app: f64, area_app: f64, ctx: &ReferenceContext, cfg: &OptimizerConfig) -> (f64, bool) {
    fitness_from(depth_app, area_app, ctx.depth_ori, ctx.area_ori, cfg.w_d)
}

pub fn fitness_from(depth_app: f64, area_app: f64, depth_ori: f64, area_ori: f64, w_d: f64) -> (f64, bool) {
    let degenerate = depth_app <= 0.0 || area_app <= 0.0;
    let fit = w_d * depth_ori / depth_app.max(EPSILON) + (1.0 - w_d) * area_ori / area_app.max(EPSILON);
    (fit, degenerate)
}
