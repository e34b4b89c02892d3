// SPDX-License-Identifier: Apache-2.0
//! ISCAS `.bench` reader and writer.
//!
//! Accepted lines: `INPUT(x)`, `OUTPUT(x)`, `x = KIND(a, b, ...)`,
//! `x = CONST0`, `x = CONST1`. Keywords are case-insensitive, whitespace is
//! ignored and `#` starts a comment. Constant lines define aliases for the
//! constant signals and do not consume a gate ID.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write;
use std::sync::Arc;

use super::{Gate, GateId, GateKind, Netlist, NetlistError, Signal};

enum Def {
    Input,
    Gate { kind: GateKind, args: Vec<String> },
}

pub fn parse_bench(text: &str) -> Result<Netlist, NetlistError> {
    parse_named(text, "bench")
}

pub(crate) fn parse_named(text: &str, name: &str) -> Result<Netlist, NetlistError> {
    // (line, name, definition) in file order; IDs follow this order
    let mut defs: Vec<(usize, String, Def)> = Vec::new();
    let mut consts: HashMap<String, Signal> = HashMap::new();
    let mut outputs: Vec<(usize, String)> = Vec::new();
    let mut defined: HashSet<String> = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let stmt: String = body.chars().filter(|c| !c.is_whitespace()).collect();
        if stmt.is_empty() {
            continue;
        }
        let syntax = |message: &str| NetlistError::Syntax { line, message: message.to_string() };

        if let Some((lhs, rhs)) = stmt.split_once('=') {
            check_ident(lhs).map_err(|m| syntax(&m))?;
            if !defined.insert(lhs.to_string()) {
                return Err(NetlistError::Redefined { line, name: lhs.to_string() });
            }
            let upper = rhs.to_ascii_uppercase();
            let constant = match upper.trim_end_matches("()") {
                "CONST0" | "GND" => Some(Signal::Const0),
                "CONST1" | "VDD" => Some(Signal::Const1),
                _ => None,
            };
            if let Some(c) = constant {
                consts.insert(lhs.to_string(), c);
                continue;
            }
            let (kw, args) = call(rhs).ok_or_else(|| syntax("expected KIND(args)"))?;
            let kind = GateKind::from_keyword(kw).ok_or_else(|| syntax(&format!("unknown gate kind `{kw}`")))?;
            let args: Vec<String> =
                if args.is_empty() { Vec::new() } else { args.split(',').map(str::to_string).collect() };
            for a in &args {
                check_ident(a).map_err(|m| syntax(&m))?;
            }
            defs.push((line, lhs.to_string(), Def::Gate { kind, args }));
        } else {
            let (kw, arg) = call(&stmt).ok_or_else(|| syntax("expected INPUT(x), OUTPUT(x) or an assignment"))?;
            check_ident(arg).map_err(|m| syntax(&m))?;
            match kw.to_ascii_uppercase().as_str() {
                "INPUT" => {
                    if !defined.insert(arg.to_string()) {
                        return Err(NetlistError::Redefined { line, name: arg.to_string() });
                    }
                    defs.push((line, arg.to_string(), Def::Input));
                }
                "OUTPUT" => outputs.push((line, arg.to_string())),
                other => return Err(syntax(&format!("unknown directive `{other}`"))),
            }
        }
    }

    let ids: HashMap<&str, GateId> =
        defs.iter().enumerate().map(|(i, (_, n, _))| (n.as_str(), GateId(i as u32))).collect();
    let resolve = |line: usize, name: &str| -> Result<Signal, NetlistError> {
        if let Some(c) = consts.get(name) {
            return Ok(*c);
        }
        ids.get(name)
            .map(|id| Signal::Gate(*id))
            .ok_or_else(|| NetlistError::Undefined { line, name: name.to_string() })
    };

    let mut gates = BTreeMap::new();
    let mut inputs = Vec::new();
    let mut names = BTreeMap::new();
    for (i, (line, n, def)) in defs.iter().enumerate() {
        let id = GateId(i as u32);
        names.insert(id, n.clone());
        let gate = match def {
            Def::Input => {
                inputs.push(id);
                Gate::input(id)
            }
            Def::Gate { kind, args } => {
                let fanins = args.iter().map(|a| resolve(*line, a)).collect::<Result<Vec<_>, _>>()?;
                if !kind.arity_ok(fanins.len()) {
                    return Err(NetlistError::Arity { id, kind: *kind, count: fanins.len() });
                }
                Gate::new(id, *kind, fanins)
            }
        };
        gates.insert(id, gate);
    }
    let outputs = outputs.iter().map(|(line, n)| resolve(*line, n)).collect::<Result<Vec<_>, _>>()?;
    Netlist::from_map(name.to_string(), gates, inputs, outputs, Arc::new(names))
}

fn call(s: &str) -> Option<(&str, &str)> {
    let open = s.find('(')?;
    let inner = s[open + 1..].strip_suffix(')')?;
    Some((&s[..open], inner))
}

fn check_ident(s: &str) -> Result<(), String> {
    if s.is_empty() {
        return Err("empty signal name".into());
    }
    if s.contains(['(', ')', ',', '=']) {
        return Err(format!("bad signal name `{s}`"));
    }
    Ok(())
}

/// Serializes `n` so that `parse_bench` yields the same gates, with IDs
/// renumbered in ascending order (identical when IDs are dense).
pub fn emit_bench(n: &Netlist) -> String {
    emit_bench_annotated(n, &BTreeMap::new())
}

/// Prefix of annotation lines. They are comments to the parser.
pub const ANNOTATION_PREFIX: &str = "#@";

/// Like `emit_bench`, followed by one `#@ NAME NOTE` line per entry of
/// `notes`, with NAME the gate's name in the emitted file.
pub fn emit_bench_annotated(n: &Netlist, notes: &BTreeMap<GateId, String>) -> String {
    let mut used: HashSet<String> = HashSet::new();
    let mut names: BTreeMap<GateId, String> = BTreeMap::new();
    for id in n.gates().keys() {
        if let Some(s) = n.signal_name(*id) {
            if used.insert(s.to_string()) {
                names.insert(*id, s.to_string());
            }
        }
    }
    for id in n.gates().keys() {
        if !names.contains_key(id) {
            let name = fresh(&mut used, &format!("_g{}", id.0));
            names.insert(*id, name);
        }
    }
    let mut const_names: [Option<String>; 2] = [None, None];
    let mut sig = |s: Signal, used: &mut HashSet<String>| -> String {
        match s {
            Signal::Gate(id) => names[&id].clone(),
            Signal::Const0 => const_names[0].get_or_insert_with(|| fresh(used, "_const0")).clone(),
            Signal::Const1 => const_names[1].get_or_insert_with(|| fresh(used, "_const1")).clone(),
        }
    };

    let mut body = String::new();
    for g in n.gates().values() {
        if g.kind == GateKind::Input {
            let _ = writeln!(body, "INPUT({})", sig(Signal::Gate(g.id), &mut used));
        } else {
            let args: Vec<String> = g.fanins.iter().map(|s| sig(*s, &mut used)).collect();
            let lhs = sig(Signal::Gate(g.id), &mut used);
            let _ = writeln!(body, "{lhs} = {}({})", g.kind.bench_keyword(), args.join(", "));
        }
    }
    let mut head = String::new();
    let _ = writeln!(head, "# {}", n.name());
    let _ =
        writeln!(head, "# {} inputs, {} outputs, {} gates", n.inputs().len(), n.outputs().len(), n.logic_gate_count());
    for s in n.outputs() {
        let _ = writeln!(head, "OUTPUT({})", sig(*s, &mut used));
    }
    for (i, c) in const_names.iter().enumerate() {
        if let Some(c) = c {
            let _ = writeln!(head, "{c} = CONST{i}");
        }
    }
    for (id, note) in notes {
        if let Some(name) = names.get(id) {
            let _ = writeln!(body, "{ANNOTATION_PREFIX} {name} {note}");
        }
    }
    head + &body
}

/// `(name, note)` pairs of the annotation lines in `text`.
pub fn read_annotations(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.trim().strip_prefix(ANNOTATION_PREFIX))
        .filter_map(|rest| {
            let mut it = rest.trim().splitn(2, char::is_whitespace);
            Some((it.next()?.to_string(), it.next()?.trim().to_string()))
        })
        .collect()
}

fn fresh(used: &mut HashSet<String>, base: &str) -> String {
    let mut name = base.to_string();
    let mut k = 1;
    while used.contains(&name) {
        name = format!("{base}_{k}");
        k += 1;
    }
    used.insert(name.clone());
    name
}
