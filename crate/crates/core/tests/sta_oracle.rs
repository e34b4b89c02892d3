// SPDX-License-Identifier: Apache-2.0
mod common;

use tdals::generate::random_dag;
use tdals::netlist::{parse_bench, GateKind};
use tdals::sta::{analyze, area, CellLibrary, Drive, SizingMap};

#[test]
fn cpd_matches_path_enumeration() {
    let lib = CellLibrary::default();
    for seed in 0..15 {
        let n = random_dag(30, 5, seed).unwrap();
        let t = analyze(&n, &lib, &SizingMap::new());
        let reference = common::all_paths_cpd(&n, &|_| Drive::X1);
        assert!((t.cpd - reference).abs() < 1e-9, "seed {seed}: {} vs {reference}", t.cpd);
        for path in &t.critical_paths {
            let g = &n.gates()[path.last().unwrap()];
            assert!((t.arrival(g.id) - t.cpd).abs() < 1e-9);
            for w in path.windows(2) {
                assert!(n.gates()[&w[1]].fanins.iter().any(|s| s.gate() == Some(w[0])));
            }
        }
    }
}

#[test]
fn sized_cpd_matches_path_enumeration() {
    let lib = CellLibrary::default();
    let n = random_dag(25, 4, 77).unwrap();
    let mut sizing = SizingMap::new();
    let pick = |i: u32| [Drive::X1, Drive::X2, Drive::X4][(i % 3) as usize];
    for g in n.gates().values().filter(|g| g.kind != GateKind::Input) {
        sizing.set(g.id, pick(g.id.0));
    }
    let t = analyze(&n, &lib, &sizing);
    let reference = common::all_paths_cpd(&n, &|id| pick(id.0));
    assert!((t.cpd - reference).abs() < 1e-9);
    let expect: f64 = n.gates().values().map(|g| common::ref_area(g.kind, sizing.get(g.id), g.fanins.len())).sum();
    assert!((area(&n, &lib, &sizing, false) - expect).abs() < 1e-9);
}

#[test]
fn upsizing_never_slows_a_circuit() {
    let lib = CellLibrary::default();
    let n = random_dag(60, 8, 5).unwrap();
    let mut sizing = SizingMap::new();
    let mut cpd = analyze(&n, &lib, &sizing).cpd;
    for g in n.gates().values().filter(|g| g.kind != GateKind::Input) {
        while let Some(d) = sizing.get(g.id).upsized() {
            sizing.set(g.id, d);
            let next = analyze(&n, &lib, &sizing).cpd;
            assert!(next <= cpd + 1e-12);
            cpd = next;
        }
    }
}

#[test]
fn unit_delay_counts_levels() {
    let n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(z)\nx = AND(a, b)\ny = NOT(x)\nz = OR(y, a)").unwrap();
    assert_eq!(analyze(&n, &CellLibrary::unit_delay(), &SizingMap::new()).cpd, 3.0);
}
