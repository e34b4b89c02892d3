// SPDX-License-Identifier: Apache-2.0
//! Command-line driver: `optimize`, `eval`, `sta` and `gen`.
//!
//! Exit status is 0 on success, 1 on unreadable or invalid input and 2 when
//! `optimize` finds no circuit within the error bound.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Deserialize;

use crate::dcgwo::{self, stream_seed, Metric, OptimizerConfig, Purpose, ReferenceContext, DEFAULT_VECTORS};
use crate::generate;
use crate::netlist::{emit_bench, emit_bench_annotated, parse_named, read_annotations, Netlist};
use crate::postopt;
use crate::report::RunReport;
use crate::sim::{self, VectorMode, VectorSet};
use crate::sta::{self, CellLibrary, SizingMap, DEFAULT_MAX_PATHS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tdals", version, about = "Timing-driven approximate logic synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Approximate a netlist under an error bound, then size its gates.
    Optimize(OptimizeArgs),
    /// Compare an approximate netlist against its accurate reference.
    Eval(EvalArgs),
    /// Report timing and area of a netlist.
    Sta(StaArgs),
    /// Write a generated benchmark circuit.
    Gen(GenArgs),
}

#[derive(Debug, Args, Default)]
pub struct LibraryArgs {
    /// Unit gate delays: cpd becomes the logic depth in levels.
    #[arg(long)]
    pub unit_delay: bool,
    /// Cell library file (`KIND DRIVE area intrinsic load_coeff` lines).
    #[arg(long)]
    pub lib: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct VectorArgs {
    /// Enumerate every input vector (at most 24 inputs).
    #[arg(long)]
    pub exhaustive: bool,
    /// Monte Carlo sample count for circuits with more than 16 inputs.
    #[arg(long)]
    pub vectors: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub netlist: PathBuf,
    #[arg(long)]
    pub metric: Option<Metric>,
    /// Final error bound.
    #[arg(long)]
    pub bound: Option<f64>,
    /// Area budget for gate sizing; defaults to the accurate circuit's area.
    #[arg(long)]
    pub area_con: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub pop: Option<usize>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub library: LibraryArgs,
    #[command(flatten)]
    pub vectors: VectorArgs,
    /// `key = value` file with defaults for any of the options.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Final netlist in `.bench` format.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run report (TOML).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Convergence trace (CSV).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub accurate: PathBuf,
    #[arg(long)]
    pub approx: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub vectors: VectorArgs,
}

#[derive(Debug, Args)]
pub struct StaArgs {
    #[arg(long)]
    pub netlist: PathBuf,
    #[command(flatten)]
    pub library: LibraryArgs,
    /// Number of critical paths to list.
    #[arg(long, default_value_t = DEFAULT_MAX_PATHS)]
    pub paths: usize,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(subcommand)]
    pub kind: GenKind,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// Ripple-carry adder of the given width.
    Rca { bits: usize },
    /// Multiplexer tree with the given number of select lines.
    MuxTree { select: usize },
    /// Random acyclic netlist.
    Random {
        #[arg(long)]
        gates: usize,
        #[arg(long)]
        pis: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Optional settings read from a `key = value` file. Command-line flags
/// take precedence over these, and these over the built-in defaults.
#[derive(Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub population: Option<usize>,
    pub iterations: Option<usize>,
    pub w_d: Option<f64>,
    pub w_t: Option<f64>,
    pub w_e: Option<f64>,
    pub s_e: Option<f64>,
    pub s_omega: Option<f64>,
    pub metric: Option<Metric>,
    pub bound: Option<f64>,
    pub e_0: Option<f64>,
    pub b: Option<f64>,
    pub seed: Option<u64>,
    pub init_lacs_max: Option<usize>,
    pub jobs: Option<usize>,
    pub area_con: Option<f64>,
    pub vectors: Option<usize>,
    pub exhaustive: Option<bool>,
    pub unit_delay: Option<bool>,
    pub lib: Option<PathBuf>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid config file")
    }
}

/// Settings of one `optimize` run after merging flags, file and defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub cfg: OptimizerConfig,
    pub area_con: Option<f64>,
    pub vectors: usize,
    pub exhaustive: bool,
    pub unit_delay: bool,
    pub lib: Option<PathBuf>,
}

pub fn resolve(args: &OptimizeArgs, file: &ConfigFile) -> Resolved {
    let d = OptimizerConfig::default();
    let cfg = OptimizerConfig {
        population: args.pop.or(file.population).unwrap_or(d.population),
        iterations: args.iters.or(file.iterations).unwrap_or(d.iterations),
        w_d: file.w_d.unwrap_or(d.w_d),
        w_t: file.w_t.or(d.w_t),
        w_e: file.w_e.or(d.w_e),
        s_e: file.s_e.unwrap_or(d.s_e),
        s_omega: file.s_omega.unwrap_or(d.s_omega),
        metric: args.metric.or(file.metric).unwrap_or(d.metric),
        e_max: args.bound.or(file.bound).unwrap_or(d.e_max),
        e_0: file.e_0.or(d.e_0),
        b: file.b.or(d.b),
        seed: args.seed.or(file.seed).unwrap_or(d.seed),
        init_lacs_max: file.init_lacs_max.unwrap_or(d.init_lacs_max),
        jobs: args.jobs.or(file.jobs).unwrap_or(d.jobs),
    };
    Resolved {
        cfg,
        area_con: args.area_con.or(file.area_con),
        vectors: args.vectors.vectors.or(file.vectors).unwrap_or(DEFAULT_VECTORS),
        exhaustive: args.vectors.exhaustive || file.exhaustive.unwrap_or(false),
        unit_delay: args.library.unit_delay || file.unit_delay.unwrap_or(false),
        lib: args.library.lib.clone().or_else(|| file.lib.clone()),
    }
}

/// Parses the arguments and runs the command, returning the exit status.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_INPUT
        }
    }
}

pub fn execute(command: &Command) -> Result<i32> {
    match command {
        Command::Optimize(a) => optimize(a),
        Command::Eval(a) => eval(a),
        Command::Sta(a) => sta_cmd(a),
        Command::Gen(a) => gen(a),
    }
}

pub fn read_netlist(path: &Path) -> Result<(Netlist, Vec<u8>)> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let text = String::from_utf8_lossy(&bytes);
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "bench".into());
    let n = parse_named(&text, &name).with_context(|| format!("{}", path.display()))?;
    Ok((n, bytes))
}

fn library(unit_delay: bool, lib: Option<&Path>) -> Result<CellLibrary> {
    match (unit_delay, lib) {
        (true, Some(_)) => bail!("--unit-delay and --lib are mutually exclusive"),
        (true, None) => Ok(CellLibrary::unit_delay()),
        (false, Some(p)) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            CellLibrary::parse(&text).with_context(|| format!("{}", p.display()))
        }
        (false, None) => Ok(CellLibrary::default()),
    }
}

/// Training vectors (`purpose = Vectors`) or the independent set used for
/// the final error (`purpose = FreshVectors`). Small circuits, or any
/// circuit with `exhaustive`, use every vector in both roles.
pub fn vectors_for(
    num_inputs: usize,
    count: usize,
    exhaustive: bool,
    seed: u64,
    purpose: Purpose,
) -> Result<VectorSet> {
    let mode = if exhaustive || num_inputs <= dcgwo::EXHAUSTIVE_LIMIT {
        VectorMode::Exhaustive
    } else {
        if count == 0 {
            bail!("vector count must be positive");
        }
        VectorMode::MonteCarlo { num: count, seed: stream_seed(seed, 0, 0, purpose) }
    };
    Ok(VectorSet::generate(num_inputs, mode)?)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn optimize(args: &OptimizeArgs) -> Result<i32> {
    let start = Instant::now();
    let file = match &args.config {
        Some(p) => ConfigFile::parse(&fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?)?,
        None => ConfigFile::default(),
    };
    let r = resolve(args, &file);
    r.cfg.validate()?;
    let (accurate, bytes) = read_netlist(&args.netlist)?;
    let lib = library(r.unit_delay, r.lib.as_deref())?;
    let m = accurate.inputs().len();
    let train = vectors_for(m, r.vectors, r.exhaustive, r.cfg.seed, Purpose::Vectors)?;
    let fresh = vectors_for(m, r.vectors, r.exhaustive, r.cfg.seed, Purpose::FreshVectors)?;
    let ctx = ReferenceContext::new(accurate, lib, train)?;
    let area_con = r.area_con.unwrap_or(ctx.area_ori);
    info!(
        "{}: {} gates, cpd {:.3}, area {:.2}, {} {} bound {}",
        ctx.accurate.name(),
        ctx.accurate.logic_gate_count(),
        ctx.cpd_ori,
        ctx.area_ori,
        ctx.vectors.num_vectors(),
        r.cfg.metric,
        r.cfg.e_max
    );
    let outcome = dcgwo::run(&ctx, &r.cfg)?;
    let post = postopt::post_optimize(&outcome.best.netlist, &ctx, area_con, &fresh)?;
    let report = RunReport::new(
        &args.netlist.display().to_string(),
        &bytes,
        &r.cfg,
        &ctx,
        area_con,
        &outcome.best,
        outcome.feasible,
        &post,
        fresh.num_vectors(),
        start.elapsed().as_secs_f64(),
    );
    if let Some(p) = &args.out {
        fs::write(p, emit_bench_annotated(&post.final_netlist, &sta::sizing_notes(&post.sizing)))
            .with_context(|| format!("cannot write {}", p.display()))?;
    }
    if let Some(p) = &args.trace {
        fs::write(p, outcome.trace.to_csv()).with_context(|| format!("cannot write {}", p.display()))?;
    }
    match &args.report {
        Some(p) => fs::write(p, report.to_toml()).with_context(|| format!("cannot write {}", p.display()))?,
        None => print!("{}", report.to_toml()),
    }
    if !outcome.feasible {
        eprintln!("no circuit within the error bound {}", r.cfg.e_max);
        return Ok(EXIT_INFEASIBLE);
    }
    Ok(EXIT_OK)
}

fn eval(args: &EvalArgs) -> Result<i32> {
    let (accurate, _) = read_netlist(&args.accurate)?;
    let (approx, _) = read_netlist(&args.approx)?;
    let count = args.vectors.vectors.unwrap_or(DEFAULT_VECTORS);
    let v = vectors_for(accurate.inputs().len(), count, args.vectors.exhaustive, args.seed, Purpose::FreshVectors)?;
    let e = sim::error_report(&accurate, &approx, &v)?;
    let mut out = String::new();
    writeln!(out, "vectors = {}", e.num_vectors)?;
    writeln!(out, "er = {}", e.er)?;
    writeln!(out, "nmed = {}", e.nmed)?;
    for (i, p) in e.per_po_error.iter().enumerate() {
        writeln!(out, "po{i} = {p}")?;
    }
    print!("{out}");
    Ok(EXIT_OK)
}

/// Timing summary as printed by `sta`.
pub fn sta_text(n: &Netlist, lib: &CellLibrary, sizing: &SizingMap, paths: usize) -> String {
    let t = sta::analyze_with_paths(n, lib, sizing, paths);
    let mut out = String::new();
    let _ = writeln!(out, "cpd = {}", t.cpd);
    let _ = writeln!(out, "area = {}", sta::area(n, lib, sizing, false));
    let _ = writeln!(out, "upsized = {}", sizing.len());
    for (i, a) in t.po_arrival.iter().enumerate() {
        let _ = writeln!(out, "po{i} = {a}");
    }
    for (i, p) in t.critical_paths.iter().enumerate() {
        let names: Vec<String> =
            p.iter().map(|id| n.signal_name(*id).map(str::to_owned).unwrap_or_else(|| format!("_g{}", id.0))).collect();
        let _ = writeln!(out, "path{i} = {}", names.join(" -> "));
    }
    out
}

fn sta_cmd(args: &StaArgs) -> Result<i32> {
    let (n, bytes) = read_netlist(&args.netlist)?;
    let lib = library(args.library.unit_delay, args.library.lib.as_deref())?;
    let sizing = sta::sizing_from_annotations(&n, &read_annotations(&String::from_utf8_lossy(&bytes)))?;
    print!("{}", sta_text(&n, &lib, &sizing, args.paths));
    Ok(EXIT_OK)
}

fn gen(args: &GenArgs) -> Result<i32> {
    let n = match &args.kind {
        GenKind::Rca { bits } => generate::try_ripple_carry_adder(*bits)?,
        GenKind::MuxTree { select } => generate::mux_tree(*select)?,
        GenKind::Random { gates, pis, seed } => generate::random_dag(*gates, *pis, *seed)?,
    };
    write_out(args.out.as_deref(), &emit_bench(&n))?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(extra: &[&str]) -> OptimizeArgs {
        let mut argv = vec!["tdals", "optimize", "--netlist", "x.bench"];
        argv.extend_from_slice(extra);
        match Cli::try_parse_from(argv).unwrap().command {
            Command::Optimize(a) => a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn precedence_flags_over_file_over_defaults() {
        let file = ConfigFile::parse("population = 12\nbound = 0.1\nmetric = \"nmed\"\nseed = 9\n").unwrap();
        let r = resolve(&args(&["--bound", "0.2", "--pop", "8"]), &file);
        assert_eq!(r.cfg.population, 8);
        assert_eq!(r.cfg.e_max, 0.2);
        assert_eq!(r.cfg.metric, Metric::Nmed);
        assert_eq!(r.cfg.seed, 9);
        assert_eq!(r.cfg.iterations, 20);
        assert_eq!(r.vectors, DEFAULT_VECTORS);
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        assert!(ConfigFile::parse("populaton = 3").is_err());
    }

    #[test]
    fn missing_file_exits_one() {
        assert_eq!(run_from(["tdals", "sta", "--netlist", "/nonexistent/x.bench"]), EXIT_INPUT);
    }
}
