//! Exact joint-chain marginals frozen from tools/reference_oracle.py, an
//! independent enumeration that shares no code with this crate. Fractions come
//! from its rational solve; the triangle values from its sparse float solve.

use dcf::io::{bin, ReportBin};
use dcf::{oracle, ProtocolParams, Topology};

const TOL: f64 = 1e-12;

fn check(topo: &Topology, m: u32, expected: &[(usize, &str, f64)]) {
    let solution = oracle::solve_exact(topo, &ProtocolParams::reference(m)).expect("oracle");
    let binned: Vec<_> = solution.marginals.iter().map(bin).collect();
    for &(node, name, want) in expected {
        let key: ReportBin = name.parse().expect("bin name");
        let got = binned[node].get(&key).copied().unwrap_or(0.0);
        assert!((got - want).abs() <= TOL, "x{} {name}: got {got:.15e}, want {want:.15e}", node + 1);
    }
    // Every bin the oracle produced is accounted for by the expectation.
    for (node, b) in binned.iter().enumerate() {
        let listed = expected.iter().filter(|e| e.0 == node).count();
        assert_eq!(b.len(), listed, "bin count at x{}", node + 1);
    }
}

#[test]
fn two_node_without_retries() {
    let per_node = |x| {
        [
            (x, "(0;1)", 1.0 / 12.0),
            (x, "(0;2)", 5.0 / 96.0),
            (x, "(0;3)", 1.0 / 48.0),
            (x, "Rcv", 5.0 / 16.0),
            (x, "Snt", 7.0 / 16.0),
            (x, "Wait", 3.0 / 32.0),
        ]
    };
    let expected: Vec<_> = per_node(0).into_iter().chain(per_node(1)).collect();
    check(&Topology::two_node(), 0, &expected);
}

#[test]
fn two_node_one_retry() {
    let per_node = |x| {
        [
            (x, "(0;1)", 1293743.0 / 25115928.0),
            (x, "(0;2)", 815249.0 / 25115928.0),
            (x, "(0;3)", 81959.0 / 6278982.0),
            (x, "(1;1)", 24101.0 / 1046497.0),
            (x, "(1;2)", 39011.0 / 2092994.0),
            (x, "(1;3)", 30237.0 / 2092994.0),
            (x, "(1;4)", 21699.0 / 2092994.0),
            (x, "(1;5)", 13741.0 / 2092994.0),
            (x, "(1;6)", 3109.0 / 1046497.0),
            (x, "Rcv", 338405.0 / 1046497.0),
            (x, "Snt", 899249.0 / 2092994.0),
            (x, "Wait", 77379.0 / 1046497.0),
        ]
    };
    let expected: Vec<_> = per_node(0).into_iter().chain(per_node(1)).collect();
    check(&Topology::two_node(), 1, &expected);
}

#[test]
fn hidden_terminal_without_retries() {
    let sender = |x| {
        [
            (x, "(0;1)", 9277.0 / 86502.0),
            (x, "(0;2)", 3010.0 / 43251.0),
            (x, "(0;3)", 503.0 / 14417.0),
            (x, "NAV", 687.0 / 14417.0),
            (x, "Ovh", 229.0 / 14417.0),
            (x, "Snt", 6907.0 / 14417.0),
            (x, "Wait", 7083.0 / 28834.0),
        ]
    };
    let receiver = [(1, "Idle", 5689.0 / 14417.0), (1, "Rcv", 6451.0 / 14417.0), (1, "U", 2277.0 / 14417.0)];
    let expected: Vec<_> = sender(0).into_iter().chain(receiver).chain(sender(2)).collect();
    check(&Topology::hidden_terminal(), 0, &expected);
}

#[test]
fn triangle_without_retries() {
    let per_node = |x| {
        [
            (x, "(0;1)", 8.496339756663371e-02),
            (x, "(0;2)", 5.410783305017578e-02),
            (x, "(0;3)", 2.316858742424698e-02),
            (x, "NAV", 1.247790870069445e-01),
            (x, "Ovh", 2.833600864624864e-02),
            (x, "Rcv", 1.416800432312410e-01),
            (x, "Snt", 3.020629795699971e-01),
            (x, "U", 1.618235880962744e-02),
            (x, "Wait", 2.247197046948997e-01),
        ]
    };
    let expected: Vec<_> = (0..3).flat_map(per_node).collect();
    check(&Topology::triangle(), 0, &expected);
}
