//! Small topologies whose answers are known without the generic machinery.

use approx::assert_abs_diff_eq;
use dcf::io::{bin, compare, Thresholds};
use dcf::solver::{solve, SolverConfig};
use dcf::{
    discretize_times, enumerate_states, evaluate_transition, oracle, Action, Distribution, Error, Family, LabelKind,
    NodeId, NodeState, ProtocolParams, QueueMode, Topology, TransitionLabel,
};

fn uniform(topo: &Topology, params: &ProtocolParams) -> Vec<Distribution> {
    topo.nodes()
        .map(|x| {
            let states = enumerate_states(topo, params, x).unwrap();
            Distribution::normalized(x, states.into_iter().map(|s| (s, 1.0))).unwrap()
        })
        .collect()
}

fn conditioning(topo: &Topology, params: &ProtocolParams, x: NodeId, family: Family) -> Vec<NodeState> {
    enumerate_states(topo, params, x).unwrap().into_iter().filter(|s| Family::at(s) == Some(family)).collect()
}

#[test]
fn reference_durations_discretize_to_reference_slots() {
    let t = discretize_times(280.0, 280.0, 842.0, 420.0, 140.0).unwrap();
    let p = ProtocolParams::from_times(3, 0, t, 140.0).unwrap();
    assert_eq!(p, ProtocolParams::reference(0));
}

#[test]
fn nonpositive_duration_is_rejected() {
    let err = discretize_times(280.0, 0.0, 842.0, 420.0, 140.0).unwrap_err();
    assert!(matches!(err, Error::Config { ref field, .. } if field == "durations.cts"), "{err}");
}

#[test]
fn isolated_sink_stays_idle() {
    let params = ProtocolParams::reference(0);
    let topo = Topology::isolated_sink();
    let states = enumerate_states(&topo, &params, NodeId(0)).unwrap();
    assert_eq!(states.len(), 1);
    assert_eq!(states[0].action, Action::Idle);

    let report = solve(&topo, &params, &SolverConfig::default()).unwrap();
    assert!(report.converged);
    assert!(report.iterations <= 1, "took {} iterations", report.iterations);
    assert_abs_diff_eq!(report.pi[0].get(&states[0]), 1.0, epsilon = 1e-15);

    let exact = oracle::solve_exact(&topo, &params).unwrap();
    assert_abs_diff_eq!(exact.marginals[0].get(&states[0]), 1.0, epsilon = 1e-15);
}

#[test]
fn pair_has_nothing_hidden() {
    // With no third node, receptions that can only be spoiled by a hidden
    // neighbor succeed with certainty on any marginals.
    let params = ProtocolParams::reference(1);
    let topo = Topology::two_node();
    let inputs = [uniform(&topo, &params), solve(&topo, &params, &SolverConfig::default()).unwrap().pi];
    let cases = [
        (Family::RtsReceive, LabelKind::RtsRecvOk),
        (Family::DataReceive, LabelKind::DataRecvOk),
        (Family::CtsReceive, LabelKind::CtsRecvOk),
    ];
    for dists in &inputs {
        for x in topo.nodes() {
            for (family, kind) in cases {
                let states = conditioning(&topo, &params, x, family);
                assert!(!states.is_empty(), "no {family:?} state at {x}");
                for s in states {
                    let peer = s.action.peer().unwrap();
                    let e = evaluate_transition(&TransitionLabel::with(kind, peer), x, &s, dists, &topo, &params).unwrap();
                    assert_eq!(e.value, 1.0, "{} at {x} {s}", kind.code());
                }
            }
        }
    }
}

#[test]
fn leaf_sender_in_hidden_terminal_is_never_disturbed_while_receiving_cts() {
    let params = ProtocolParams::reference(0);
    let topo = Topology::hidden_terminal();
    let dists = uniform(&topo, &params);
    for x in [NodeId(0), NodeId(2)] {
        for s in conditioning(&topo, &params, x, Family::CtsReceive) {
            let label = TransitionLabel::with(LabelKind::CtsRecvOk, NodeId(1));
            assert_eq!(evaluate_transition(&label, x, &s, &dists, &topo, &params).unwrap().value, 1.0);
        }
    }
}

#[test]
fn disjoint_pairs_factor_exactly() {
    let params = ProtocolParams::reference(0);
    let pair = Topology::two_node();
    let two_pairs = Topology::from_edges(4, &[(0, 1), (2, 3)], vec![QueueMode::Saturated; 4]).unwrap();

    let single = oracle::solve_exact(&pair, &params).unwrap();
    let double = oracle::solve_exact(&two_pairs, &params).unwrap();
    assert_eq!(double.chain.len(), single.chain.len().pow(2));
    for x in 0..4 {
        let expected = bin(&single.marginals[x % 2]);
        let got = bin(&double.marginals[x]);
        for (k, v) in &expected {
            assert_abs_diff_eq!(got[k], v, epsilon = 1e-12);
        }
        assert_eq!(got.len(), expected.len());
    }

    let model_pair = solve(&pair, &params, &SolverConfig::default()).unwrap();
    let model_double = solve(&two_pairs, &params, &SolverConfig::default()).unwrap();
    for x in 0..4 {
        let a = bin(&model_pair.pi[x % 2]);
        let b = bin(&model_double.pi[x]);
        for (k, v) in &a {
            assert_abs_diff_eq!(b[k], v, epsilon = 1e-9);
        }
    }
}

#[test]
fn engine_compared_with_itself_is_at_distance_zero() {
    let params = ProtocolParams::reference(0);
    let pi = solve(&Topology::triangle(), &params, &SolverConfig::default()).unwrap().pi;
    let c = compare(&pi, Some(&pi), None).unwrap();
    let d = c.distance("model", "oracle").unwrap();
    assert_eq!(d.max_l1(), 0.0);
    assert_eq!(d.max_bin_diff, 0.0);
    assert!(c.violations(&Thresholds { model_oracle: 0.0, model_sim: 0.0, sim_oracle: 0.0 }).is_empty());
}

#[test]
fn compare_rejects_mismatched_node_counts() {
    let params = ProtocolParams::reference(0);
    let a = uniform(&Topology::two_node(), &params);
    let b = uniform(&Topology::triangle(), &params);
    assert!(compare(&a, Some(&b), None).is_err());
}

#[test]
fn evaluation_checks_its_inputs() {
    let params = ProtocolParams::reference(0);
    let topo = Topology::two_node();
    let dists = uniform(&topo, &params);
    let sensing = conditioning(&topo, &params, NodeId(0), Family::Sense)[0];
    let quiet = TransitionLabel::plain(LabelKind::SenseQuiet);

    // Marginals for the wrong number of nodes.
    assert!(evaluate_transition(&quiet, NodeId(0), &sensing, &dists[..1], &topo, &params).is_err());
    // A label outside the family of the conditioning state.
    let answered = TransitionLabel::with(LabelKind::RtsAnswered, NodeId(1));
    assert!(matches!(
        evaluate_transition(&answered, NodeId(0), &sensing, &dists, &topo, &params),
        Err(Error::Contract(_))
    ));
    // A node the topology does not have.
    assert!(evaluate_transition(&quiet, NodeId(5), &sensing, &dists, &topo, &params).is_err());
}

#[test]
fn invalid_topologies_are_rejected() {
    let sat = |n| vec![QueueMode::Saturated; n];
    assert!(Topology::from_edges(2, &[(0, 0)], sat(2)).is_err());
    assert!(Topology::from_edges(2, &[(0, 2)], sat(2)).is_err());
    assert!(Topology::from_edges(3, &[(0, 1)], sat(3)).is_err(), "saturated node without neighbors");
    assert!(Topology::new(vec![vec![NodeId(1)], vec![]], sat(2), None).is_err(), "asymmetric adjacency");
    let bad_route = Some(vec![vec![(NodeId(1), 0.5)], vec![(NodeId(0), 1.0)]]);
    assert!(Topology::new(vec![vec![NodeId(1)], vec![NodeId(0)]], sat(2), bad_route).is_err());
}

#[test]
fn distribution_rejects_bad_mass() {
    let s = NodeState::idle(dcf::Queue { receiver: None, len: dcf::QueueLen::Saturated });
    assert!(Distribution::new(NodeId(0), [(s, 0.5)]).is_err());
    assert!(Distribution::new(NodeId(0), [(s, -1.0), (s, 2.0)]).is_err());
    assert!(Distribution::normalized(NodeId(0), [(s, 0.0)]).is_err());
    assert!(Distribution::normalized(NodeId(0), [(s, f64::NAN)]).is_err());
}
