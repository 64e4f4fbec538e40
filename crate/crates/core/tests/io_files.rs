//! Experiment file parsing and CSV output.

use std::path::Path;

use dcf::io::{
    bin, emit_binned, emit_distribution, load_experiment, parse_binned, parse_distribution, parse_experiment,
    ExperimentSource, Fixture, Mode,
};
use dcf::solver::{solve, SolverConfig};
use dcf::{Error, NodeId, ProtocolParams, QueueMode, Topology};

fn parse(text: &str) -> dcf::Result<dcf::io::ExperimentSpec> {
    parse_experiment(text, Path::new("."))
}

fn config_field(err: Error) -> String {
    match err {
        Error::Config { field, .. } => field,
        other => panic!("expected a configuration error, got {other}"),
    }
}

#[test]
fn shipped_experiments_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments");
    let triangle = load_experiment(&ExperimentSource::File(dir.join("triangle.toml"))).unwrap();
    assert_eq!(triangle.name, "triangle-m1");
    assert_eq!(triangle.params, ProtocolParams::reference(1));
    assert_eq!(triangle.sim.replications, 2);
    assert!(triangle.output.binned);
    assert_eq!(triangle.thresholds, Fixture::Triangle.thresholds());

    let chain = load_experiment(&ExperimentSource::File(dir.join("chain.toml"))).unwrap();
    assert_eq!(chain.modes, vec![Mode::Solve, Mode::Simulate]);
    assert_eq!(chain.topology.len(), 4);
    assert_eq!(chain.topology.queue(NodeId(3)), QueueMode::Sink);
    assert_eq!(chain.topology.routing(NodeId(1)), &[(NodeId(2), 1.0)]);
    assert_eq!(chain.topology.routing(NodeId(0)), &[(NodeId(1), 1.0)]);
}

#[test]
fn unknown_fields_are_rejected_with_their_path() {
    let at_top = parse("bogus = 1\n[topology]\nfixture = \"two-node\"\n").unwrap_err();
    assert!(matches!(at_top, Error::Config { .. }), "{at_top}");

    let in_params = parse("[topology]\nfixture = \"two-node\"\n[params]\nwindow = 4\n").unwrap_err();
    assert_eq!(config_field(in_params), "params.window");

    let in_topology = parse("[topology]\nnodes = 2\nedges = [[\"x1\", \"x2\"]]\nbogus = 3\n").unwrap_err();
    let message = in_topology.to_string();
    assert!(message.contains("topology") && message.contains("bogus"), "{message}");
}

#[test]
fn out_of_range_values_are_rejected() {
    let zero_slots = parse("[topology]\nfixture = \"two-node\"\n[sim]\nslots = 0\n").unwrap_err();
    assert_eq!(config_field(zero_slots), "sim.slots");

    let zero_window = parse("[topology]\nfixture = \"two-node\"\n[params]\nw = 0\n").unwrap_err();
    assert_eq!(config_field(zero_window), "params.w");

    let damping = parse("[topology]\nfixture = \"two-node\"\n[solver]\ndamping = 1.0\n").unwrap_err();
    assert_eq!(config_field(damping), "solver.damping");

    let stranger = parse("[topology]\nnodes = 2\nedges = [[\"x1\", \"x9\"]]\n").unwrap_err();
    assert_eq!(config_field(stranger), "topology.edges[0]");

    let both = parse("[topology]\nfixture = \"two-node\"\nnodes = 2\n").unwrap_err();
    assert_eq!(config_field(both), "topology");

    let unknown_fixture = parse("[topology]\nfixture = \"square\"\n").unwrap_err();
    assert!(matches!(unknown_fixture, Error::Config { .. }), "{unknown_fixture}");
}

#[test]
fn durations_discretize_and_overrides_win() {
    let text = "[topology]\nfixture = \"two-node\"\n\
                [params]\nt_data = 4\n\
                [params.durations]\nrts = 280.0\ncts = 280.0\ndata_ack = 842.0\ntimeout = 420.0\nsigma = 140.0\n";
    let spec = parse(text).unwrap();
    let want = ProtocolParams { t_data: 4, ..ProtocolParams::reference(0) };
    assert_eq!(spec.params, want);
}

#[test]
fn fixture_source_uses_reference_settings() {
    let spec = load_experiment(&ExperimentSource::Fixture(Fixture::HiddenTerminal)).unwrap();
    assert_eq!(spec.topology, Topology::hidden_terminal());
    assert_eq!(spec.params, ProtocolParams::reference(0));
    assert_eq!(spec.modes, vec![Mode::Solve, Mode::Simulate, Mode::Oracle]);
}

#[test]
fn raw_csv_round_trips() {
    let pi = solve(&Topology::hidden_terminal(), &ProtocolParams::reference(1), &SolverConfig::default()).unwrap().pi;
    let text = emit_distribution(&pi);
    let back = parse_distribution(&text).unwrap();
    assert_eq!(back.len(), pi.len());
    for (a, b) in pi.iter().zip(&back) {
        assert_eq!(a.owner(), b.owner());
        // Twelve significant digits survive the trip.
        assert!(a.l1(b) < 1e-10, "l1 {}", a.l1(b));
    }
    assert_eq!(emit_distribution(&back), text);
}

#[test]
fn binned_csv_round_trips() {
    let pi = solve(&Topology::triangle(), &ProtocolParams::reference(0), &SolverConfig::default()).unwrap().pi;
    let text = emit_binned(&pi);
    let back = parse_binned(&text).unwrap();
    for (d, b) in pi.iter().zip(&back) {
        let expected = bin(d);
        assert_eq!(b.keys().collect::<Vec<_>>(), expected.keys().collect::<Vec<_>>());
        for (k, v) in &expected {
            assert!((b[k] - v).abs() <= 1e-5 * v.abs(), "{k}: {} vs {v}", b[k]);
        }
    }
}

#[test]
fn malformed_csv_is_rejected() {
    assert!(matches!(parse_distribution("node,prob\nx1,1\n"), Err(Error::Parse(_))));
    assert!(matches!(parse_binned("node,bin,prob\nx1,(0;x),1\n"), Err(Error::Parse(_))));
    assert!(matches!(parse_binned("node,bin,prob\nx1,Nowhere,1\n"), Err(Error::Parse(_))));
}
