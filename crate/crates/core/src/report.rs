// SPDX-License-Identifier: Apache-2.0
//! Machine-readable run report: a flat TOML table with stable keys.

use serde::{Deserialize, Serialize};

use crate::dcgwo::{Individual, Metric, OptimizerConfig, ReferenceContext};
use crate::postopt::PostOptResult;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub input_name: String,
    /// FNV-1a hash of the input file bytes, hex encoded.
    pub input_hash: String,
    pub seed: u64,
    pub metric: Metric,
    pub bound: f64,
    pub area_con: f64,
    pub population: usize,
    pub iterations: usize,
    pub w_d: f64,
    pub w_t: f64,
    pub w_e: f64,
    pub s_e: f64,
    pub s_omega: f64,
    pub e_0: f64,
    pub b: f64,
    pub num_vectors: usize,
    pub fresh_vectors: usize,
    pub cpd_ori: f64,
    pub area_ori: f64,
    pub feasible: bool,
    pub opt_depth: f64,
    pub opt_area: f64,
    pub opt_er: f64,
    pub opt_nmed: f64,
    pub opt_fit: f64,
    pub cpd_fac: f64,
    pub ratio_cpd: f64,
    pub final_area: f64,
    pub final_er: f64,
    pub final_nmed: f64,
    pub area_infeasible: bool,
    pub upsized_gates: usize,
    pub final_gates: usize,
    pub wall_seconds: f64,
}

impl RunReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        input_name: &str,
        input_bytes: &[u8],
        cfg: &OptimizerConfig,
        ctx: &ReferenceContext,
        area_con: f64,
        best: &Individual,
        feasible: bool,
        post: &PostOptResult,
        fresh_vectors: usize,
        wall_seconds: f64,
    ) -> Self {
        let (w_t, w_e) = cfg.level_weights(ctx.cpd_ori);
        RunReport {
            schema_version: SCHEMA_VERSION,
            input_name: input_name.to_string(),
            input_hash: format!("{:016x}", fnv1a(input_bytes)),
            seed: cfg.seed,
            metric: cfg.metric,
            bound: cfg.e_max,
            area_con,
            population: cfg.population,
            iterations: cfg.iterations,
            w_d: cfg.w_d,
            w_t,
            w_e,
            s_e: cfg.s_e,
            s_omega: cfg.s_omega,
            e_0: cfg.initial_bound(),
            b: cfg.relaxation(),
            num_vectors: ctx.vectors.num_vectors(),
            fresh_vectors,
            cpd_ori: ctx.cpd_ori,
            area_ori: ctx.area_ori,
            feasible,
            opt_depth: best.depth,
            opt_area: best.area,
            opt_er: best.err.er,
            opt_nmed: best.err.nmed,
            opt_fit: best.fit,
            cpd_fac: post.cpd_fac,
            ratio_cpd: post.ratio_cpd,
            final_area: post.final_area,
            final_er: post.final_error.er,
            final_nmed: post.final_error.nmed,
            area_infeasible: post.area_infeasible,
            upsized_gates: post.sizing.len(),
            final_gates: post.final_netlist.logic_gate_count(),
            wall_seconds,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat report always serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}
