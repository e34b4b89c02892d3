// SPDX-License-Identifier: Apache-2.0
//! Static timing analysis and area accounting over a small built-in cell
//! library.
//!
//! Gate delay is `intrinsic + load_coeff * fanout`, where fanout counts every
//! consumer fan-in slot and output slot reading the gate. Primary inputs and
//! constants arrive at time zero.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::netlist::{GateId, GateKind, Netlist, Signal};

/// Arrival times closer than this are treated as ties.
pub const TIE_TOLERANCE: f64 = 1e-9;
/// Default number of critical paths extracted per analysis.
pub const DEFAULT_MAX_PATHS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Drive {
    #[default]
    X1,
    X2,
    X4,
}

impl Drive {
    pub const ALL: [Drive; 3] = [Drive::X1, Drive::X2, Drive::X4];

    pub fn multiplier(self) -> f64 {
        match self {
            Drive::X1 => 1.0,
            Drive::X2 => 2.0,
            Drive::X4 => 4.0,
        }
    }

    /// The next stronger variant, if any.
    pub fn upsized(self) -> Option<Drive> {
        match self {
            Drive::X1 => Some(Drive::X2),
            Drive::X2 => Some(Drive::X4),
            Drive::X4 => None,
        }
    }
}

impl fmt::Display for Drive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Drive::X1 => "X1",
            Drive::X2 => "X2",
            Drive::X4 => "X4",
        })
    }
}

impl FromStr for Drive {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "X1" => Ok(Drive::X1),
            "X2" => Ok(Drive::X2),
            "X4" => Ok(Drive::X4),
            _ => Err(format!("unknown drive strength `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub area: f64,
    pub intrinsic: f64,
    pub load_coeff: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LibraryError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{kind:?}: {message}")]
    NotMonotone { kind: GateKind, message: String },
    #[error("annotation for `{name}`: {message}")]
    Annotation { name: String, message: String },
}

/// Per (kind, drive) cell data for two-input (or single-input) gates, plus
/// per-extra-fan-in increments for wider gates.
#[derive(Clone, Debug, PartialEq)]
pub struct CellLibrary {
    cells: BTreeMap<(GateKind, Drive), Cell>,
    pub extra_fanin_area: f64,
    pub extra_fanin_delay: f64,
}

impl Default for CellLibrary {
    fn default() -> Self {
        let mut cells = BTreeMap::new();
        for kind in GateKind::LOGIC {
            let (intrinsic, area) = match kind {
                GateKind::Not | GateKind::Buf => (1.0, 1.0),
                GateKind::Xor | GateKind::Xnor => (2.0, 3.0),
                _ => (1.5, 2.0),
            };
            for drive in Drive::ALL {
                let scale = match drive {
                    Drive::X1 => 1.0,
                    Drive::X2 => 1.8,
                    Drive::X4 => 3.2,
                };
                cells.insert(
                    (kind, drive),
                    Cell { area: area * scale, intrinsic, load_coeff: 0.2 / drive.multiplier() },
                );
            }
        }
        CellLibrary { cells, extra_fanin_area: 0.5, extra_fanin_delay: 0.25 }
    }
}

impl CellLibrary {
    /// Every gate costs one delay unit regardless of load; areas as default.
    pub fn unit_delay() -> Self {
        let mut lib = CellLibrary::default();
        for cell in lib.cells.values_mut() {
            cell.intrinsic = 1.0;
            cell.load_coeff = 0.0;
        }
        lib.extra_fanin_delay = 0.0;
        lib
    }

    /// Parses `KIND DRIVE area intrinsic load_coeff` lines on top of the
    /// default table. `EXTRA_FANIN area intrinsic` overrides the wide-gate
    /// increments.
    pub fn parse(text: &str) -> Result<Self, LibraryError> {
        let mut lib = CellLibrary::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let err = |message: String| LibraryError::Syntax { line, message };
            let fields: Vec<&str> = body.split_whitespace().collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
            if fields[0].eq_ignore_ascii_case("EXTRA_FANIN") {
                if fields.len() != 3 {
                    return Err(err("expected `EXTRA_FANIN area intrinsic`".into()));
                }
                lib.extra_fanin_area = num(fields[1])?;
                lib.extra_fanin_delay = num(fields[2])?;
                continue;
            }
            if fields.len() != 5 {
                return Err(err("expected `KIND DRIVE area intrinsic load_coeff`".into()));
            }
            let kind = GateKind::from_keyword(fields[0]).ok_or_else(|| err(format!("unknown kind `{}`", fields[0])))?;
            let drive: Drive = fields[1].parse().map_err(err)?;
            let cell = Cell { area: num(fields[2])?, intrinsic: num(fields[3])?, load_coeff: num(fields[4])? };
            if cell.area < 0.0 || cell.intrinsic < 0.0 || cell.load_coeff < 0.0 {
                return Err(err("negative cell parameter".into()));
            }
            lib.cells.insert((kind, drive), cell);
        }
        lib.check_monotone()?;
        Ok(lib)
    }

    /// Stronger drives must cost more area, carry strictly less load
    /// sensitivity and have no larger intrinsic delay, so an upsize never
    /// slows a gate down.
    pub fn check_monotone(&self) -> Result<(), LibraryError> {
        for kind in GateKind::LOGIC {
            for pair in Drive::ALL.windows(2) {
                let (lo, hi) = (self.cell(kind, pair[0]), self.cell(kind, pair[1]));
                let message = if hi.area <= lo.area {
                    format!("{} area must exceed {}", pair[1], pair[0])
                } else if hi.load_coeff >= lo.load_coeff {
                    format!("{} load_coeff must be below {}", pair[1], pair[0])
                } else if hi.intrinsic > lo.intrinsic {
                    format!("intrinsic delay of {} exceeds {}", pair[1], pair[0])
                } else {
                    continue;
                };
                return Err(LibraryError::NotMonotone { kind, message });
            }
        }
        Ok(())
    }

    pub fn cell(&self, kind: GateKind, drive: Drive) -> Cell {
        self.cells[&(kind, drive)]
    }

    fn extra(fanins: usize) -> f64 {
        fanins.saturating_sub(2) as f64
    }

    pub fn area_of(&self, kind: GateKind, drive: Drive, fanins: usize) -> f64 {
        if kind == GateKind::Input {
            return 0.0;
        }
        self.cell(kind, drive).area + Self::extra(fanins) * self.extra_fanin_area
    }

    pub fn intrinsic_of(&self, kind: GateKind, drive: Drive, fanins: usize) -> f64 {
        if kind == GateKind::Input {
            return 0.0;
        }
        self.cell(kind, drive).intrinsic + Self::extra(fanins) * self.extra_fanin_delay
    }

    pub fn delay_of(&self, kind: GateKind, drive: Drive, fanins: usize, fanout: usize) -> f64 {
        if kind == GateKind::Input {
            return 0.0;
        }
        self.intrinsic_of(kind, drive, fanins) + self.cell(kind, drive).load_coeff * fanout as f64
    }
}

/// Drive strength per gate; gates not listed are at X1.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SizingMap(BTreeMap<GateId, Drive>);

impl SizingMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: GateId) -> Drive {
        self.0.get(&id).copied().unwrap_or_default()
    }

    pub fn set(&mut self, id: GateId, drive: Drive) {
        if drive == Drive::X1 {
            self.0.remove(&id);
        } else {
            self.0.insert(id, drive);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (GateId, Drive)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Annotation notes (`drive X2`, `drive X4`) for every gate above X1.
pub fn sizing_notes(sizing: &SizingMap) -> BTreeMap<GateId, String> {
    sizing.iter().filter(|(_, d)| *d != Drive::X1).map(|(id, d)| (id, format!("drive {d}"))).collect()
}

/// Sizing recovered from `drive` annotations, matched to gates by name.
pub fn sizing_from_annotations(n: &Netlist, notes: &[(String, String)]) -> Result<SizingMap, LibraryError> {
    let by_name: BTreeMap<&str, GateId> = n.gates().keys().filter_map(|id| Some((n.signal_name(*id)?, *id))).collect();
    let mut sizing = SizingMap::new();
    for (name, note) in notes {
        let Some(drive) = note.strip_prefix("drive ") else { continue };
        let err = |message: String| LibraryError::Annotation { name: name.clone(), message };
        let id = *by_name.get(name.as_str()).ok_or_else(|| err("no such gate".into()))?;
        sizing.set(id, drive.trim().parse().map_err(err)?);
    }
    Ok(sizing)
}

pub fn gate_delay(n: &Netlist, g: GateId, lib: &CellLibrary, sizing: &SizingMap) -> f64 {
    let gate = &n.gates()[&g];
    let fanout = n.fanout_counts()[g.0 as usize];
    lib.delay_of(gate.kind, sizing.get(g), gate.fanins.len(), fanout)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimingReport {
    /// Arrival time per gate, indexed by `GateId.0`; NaN for absent IDs.
    arrival: Vec<f64>,
    pub po_arrival: Vec<f64>,
    pub cpd: f64,
    /// Gate sequences from a primary input (or constant-fed gate) to an
    /// output driver, each with arrival within tolerance of `cpd`.
    pub critical_paths: Vec<Vec<GateId>>,
}

impl TimingReport {
    pub fn arrival(&self, id: GateId) -> f64 {
        self.arrival[id.0 as usize]
    }

    pub fn signal_arrival(&self, s: Signal) -> f64 {
        match s {
            Signal::Gate(id) => self.arrival(id),
            _ => 0.0,
        }
    }

    /// Distinct non-input gates on the extracted critical paths, in path order.
    pub fn critical_gates(&self, n: &Netlist) -> Vec<GateId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for path in &self.critical_paths {
            for id in path {
                if n.gates()[id].kind != GateKind::Input && seen.insert(*id) {
                    out.push(*id);
                }
            }
        }
        out
    }
}

pub fn analyze(n: &Netlist, lib: &CellLibrary, sizing: &SizingMap) -> TimingReport {
    analyze_with_paths(n, lib, sizing, DEFAULT_MAX_PATHS)
}

pub fn analyze_with_paths(n: &Netlist, lib: &CellLibrary, sizing: &SizingMap, max_paths: usize) -> TimingReport {
    let fanout = n.fanout_counts();
    let mut arrival = vec![f64::NAN; n.id_bound()];
    for &id in n.topological_order() {
        let g = &n.gates()[&id];
        let a = if g.kind == GateKind::Input {
            0.0
        } else {
            let latest = g
                .fanins
                .iter()
                .map(|s| match s {
                    Signal::Gate(f) => arrival[f.0 as usize],
                    _ => 0.0,
                })
                .fold(0.0, f64::max);
            latest + lib.delay_of(g.kind, sizing.get(id), g.fanins.len(), fanout[id.0 as usize])
        };
        arrival[id.0 as usize] = a;
    }
    let at = |s: Signal| match s {
        Signal::Gate(id) => arrival[id.0 as usize],
        _ => 0.0,
    };
    let po_arrival: Vec<f64> = n.outputs().iter().map(|s| at(*s)).collect();
    let cpd = po_arrival.iter().copied().fold(0.0, f64::max);

    let mut paths = Vec::new();
    let mut seen_paths = BTreeSet::new();
    let mut seen_roots = BTreeSet::new();
    for (i, s) in n.outputs().iter().enumerate() {
        if paths.len() >= max_paths {
            break;
        }
        let Signal::Gate(root) = *s else { continue };
        if po_arrival[i] < cpd - TIE_TOLERANCE || !seen_roots.insert(root) {
            continue;
        }
        let mut suffix = vec![root];
        backtrack(n, &arrival, root, &mut suffix, &mut paths, &mut seen_paths, max_paths);
    }
    TimingReport { arrival, po_arrival, cpd, critical_paths: paths }
}

/// Depth-first walk toward the inputs through every fan-in whose arrival
/// ties the latest one. `suffix` holds the path from `at` to the output,
/// reversed.
fn backtrack(
    n: &Netlist,
    arrival: &[f64],
    at: GateId,
    suffix: &mut Vec<GateId>,
    paths: &mut Vec<Vec<GateId>>,
    seen: &mut BTreeSet<Vec<GateId>>,
    max_paths: usize,
) {
    if paths.len() >= max_paths {
        return;
    }
    let g = &n.gates()[&at];
    let mut preds: Vec<(f64, GateId)> =
        g.fanins.iter().filter_map(|s| s.gate()).map(|f| (arrival[f.0 as usize], f)).collect();
    let latest_const = if g.fanins.iter().any(|s| s.gate().is_none()) { 0.0 } else { f64::NEG_INFINITY };
    let latest = preds.iter().map(|p| p.0).fold(latest_const, f64::max);
    preds.retain(|p| p.0 >= latest - TIE_TOLERANCE);
    // stable: latest first, then fan-in order
    preds.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut uniq = BTreeSet::new();
    preds.retain(|p| uniq.insert(p.1));
    if preds.is_empty() {
        let path: Vec<GateId> = suffix.iter().rev().copied().collect();
        if seen.insert(path.clone()) {
            paths.push(path);
        }
        return;
    }
    for (_, f) in preds {
        suffix.push(f);
        backtrack(n, arrival, f, suffix, paths, seen, max_paths);
        suffix.pop();
        if paths.len() >= max_paths {
            return;
        }
    }
}

/// Total cell area. With `exclude_dangling`, gates that cannot reach an
/// output contribute nothing.
pub fn area(n: &Netlist, lib: &CellLibrary, sizing: &SizingMap, exclude_dangling: bool) -> f64 {
    let dangling = if exclude_dangling { n.dangling_gates() } else { BTreeSet::new() };
    n.gates()
        .values()
        .filter(|g| !dangling.contains(&g.id))
        .map(|g| lib.area_of(g.kind, sizing.get(g.id), g.fanins.len()))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{parse_bench, Consumer};

    #[test]
    fn inverter_delay_by_drive() {
        let n = parse_bench("INPUT(a)\nOUTPUT(z)\nx = NOT(a)\nz = BUFF(x)").unwrap();
        let lib = CellLibrary::default();
        let mut sizing = SizingMap::new();
        assert!((gate_delay(&n, GateId(1), &lib, &sizing) - 1.2).abs() < 1e-12);
        sizing.set(GateId(1), Drive::X4);
        assert!((gate_delay(&n, GateId(1), &lib, &sizing) - 1.05).abs() < 1e-12);
    }

    #[test]
    fn dangling_gate_has_intrinsic_only() {
        let n = parse_bench("INPUT(a)\nOUTPUT(a)\nx = NOT(a)").unwrap();
        let lib = CellLibrary::default();
        assert_eq!(gate_delay(&n, GateId(1), &lib, &SizingMap::new()), 1.0);
    }

    #[test]
    fn single_buffer() {
        let n = parse_bench("INPUT(a)\nOUTPUT(z)\nz = BUFF(a)").unwrap();
        let t = analyze(&n, &CellLibrary::default(), &SizingMap::new());
        assert!((t.cpd - 1.2).abs() < 1e-12);
        assert_eq!(t.critical_paths, vec![vec![GateId(0), GateId(1)]]);
    }

    #[test]
    fn balanced_tree_caps_paths() {
        let mut text = String::new();
        for i in 0..8 {
            text += &format!("INPUT(i{i})\n");
        }
        text += "OUTPUT(r)\n";
        for j in 0..4 {
            text += &format!("l{j} = AND(i{}, i{})\n", 2 * j, 2 * j + 1);
        }
        text += "m0 = AND(l0, l1)\nm1 = AND(l2, l3)\nr = AND(m0, m1)\n";
        let n = parse_bench(&text).unwrap();
        let t = analyze(&n, &CellLibrary::default(), &SizingMap::new());
        assert!((t.cpd - 3.0 * 1.7).abs() < 1e-9);
        assert_eq!(t.critical_paths.len(), DEFAULT_MAX_PATHS);
        let all = analyze_with_paths(&n, &CellLibrary::default(), &SizingMap::new(), 100);
        assert_eq!(all.critical_paths.len(), 8);
        for p in &all.critical_paths {
            assert_eq!(p.len(), 4);
            assert_eq!(*p.last().unwrap(), GateId(14));
        }
    }

    #[test]
    fn unit_delay_counts_levels() {
        let n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(z)\nx = AND(a, b, a)\ny = NOT(x)\nz = OR(y, b)").unwrap();
        let t = analyze(&n, &CellLibrary::unit_delay(), &SizingMap::new());
        assert_eq!(t.cpd, 3.0);
    }

    #[test]
    fn area_accounting() {
        let lib = CellLibrary::default();
        let wires = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(a)\nOUTPUT(b)").unwrap();
        assert_eq!(area(&wires, &lib, &SizingMap::new(), true), 0.0);
        let n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(z)\nx = AND(a, b)\ny = OR(a, b)\nz = NAND(x, y)").unwrap();
        assert_eq!(area(&n, &lib, &SizingMap::new(), false), 6.0);
        let e = n.apply_fanin_edit(Consumer::Output(0), Signal::Gate(GateId(4)), Signal::Gate(GateId(2))).unwrap();
        assert_eq!(area(&e, &lib, &SizingMap::new(), true), 2.0);
        assert_eq!(area(&e, &lib, &SizingMap::new(), false), 6.0);
        let mut s = SizingMap::new();
        s.set(GateId(2), Drive::X2);
        assert!((area(&n, &lib, &s, false) - 7.6).abs() < 1e-12);
    }

    #[test]
    fn wide_gates_pay_extra() {
        let lib = CellLibrary::default();
        assert_eq!(lib.area_of(GateKind::And, Drive::X1, 4), 3.0);
        assert_eq!(lib.intrinsic_of(GateKind::And, Drive::X1, 3), 1.75);
    }

    #[test]
    fn library_file_overrides() {
        let lib = CellLibrary::parse("# custom\nNOT X1 0.5 1.2 0.3\nEXTRA_FANIN 1.0 0.1\n").unwrap();
        assert_eq!(lib.cell(GateKind::Not, Drive::X1).intrinsic, 1.2);
        assert_eq!(lib.extra_fanin_area, 1.0);
        assert!(matches!(CellLibrary::parse("NOT X2 0.1 1.0 0.1"), Err(LibraryError::NotMonotone { .. })));
        assert!(matches!(CellLibrary::parse("NOT X9 1 1 1"), Err(LibraryError::Syntax { line: 1, .. })));
        assert!(CellLibrary::default().check_monotone().is_ok());
    }
}
