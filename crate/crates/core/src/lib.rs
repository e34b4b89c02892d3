// SPDX-License-Identifier: Apache-2.0
//! Timing-driven approximate logic synthesis.
//!
//! Gate-level netlists are approximated by local changes (a wire replaced by
//! a similar wire or a constant) chosen on critical paths. A double-chase
//! grey wolf optimizer explores such circuits under a gradually relaxed
//! error bound, trading depth against area, and a greedy gate-sizing pass
//! spends a fixed area budget on the final critical path.

pub mod cli;
pub mod dcgwo;
pub mod generate;
pub mod lac;
pub mod netlist;
pub mod par;
pub mod postopt;
pub mod report;
pub mod sim;
pub mod sta;
