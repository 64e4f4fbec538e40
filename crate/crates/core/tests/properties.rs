//! Invariants over random networks and random marginals.

use dcf::io::{bin, emit_distribution, parse_distribution};
use dcf::sim::{run, SimConfig};
use dcf::solver::{SolverConfig, System};
use dcf::{
    enumerate_states, evaluate_transition, Distribution, Family, NodeId, NodeState, ProtocolParams, QueueMode,
    Topology, TransitionLabel,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALL_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Four saturated nodes, each with at least one neighbor.
fn network() -> impl Strategy<Value = Topology> {
    (1u32..64)
        .prop_map(|mask| ALL_EDGES.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, e)| *e).collect())
        .prop_filter("every node needs a neighbor", |edges: &Vec<(usize, usize)>| {
            (0..4).all(|x| edges.iter().any(|&(a, b)| a == x || b == x))
        })
        .prop_map(|edges| Topology::from_edges(4, &edges, vec![QueueMode::Saturated; 4]).unwrap())
}

fn random_marginals(topo: &Topology, params: &ProtocolParams, seed: u64) -> Vec<Distribution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    topo.nodes()
        .map(|x| {
            let states = enumerate_states(topo, params, x).unwrap();
            Distribution::normalized(x, states.into_iter().map(|s| (s, rng.gen_range(0.05..1.0)))).unwrap()
        })
        .collect()
}

fn family_labels(topo: &Topology, x: NodeId, s: &NodeState, family: Family) -> Vec<TransitionLabel> {
    family
        .members()
        .iter()
        .flat_map(|&kind| match (kind.is_pairwise(), family) {
            (false, _) => vec![TransitionLabel::plain(kind)],
            (true, Family::Sense) => topo.neighbors(x).iter().map(|&z| TransitionLabel::with(kind, z)).collect(),
            (true, _) => vec![TransitionLabel::with(kind, s.action.peer().or(s.queue.receiver).unwrap())],
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn families_are_complete_on_any_marginals(topo in network(), seed in any::<u64>()) {
        let params = ProtocolParams::reference(0);
        let dists = random_marginals(&topo, &params, seed);
        for x in topo.nodes() {
            for s in enumerate_states(&topo, &params, x).unwrap() {
                let Some(family) = Family::at(&s) else { continue };
                let mut total = 0.0;
                let mut undefined = false;
                for label in family_labels(&topo, x, &s, family) {
                    let e = evaluate_transition(&label, x, &s, &dists, &topo, &params).unwrap();
                    prop_assert!((0.0..=1.0).contains(&e.value), "{label} at {x} {s}: {}", e.value);
                    total += e.value;
                    undefined |= e.zero_denominator;
                }
                if !undefined {
                    prop_assert!((total - 1.0).abs() <= 1e-12, "{family:?} at {x} {s} sums to {total}");
                }
            }
        }
    }

    #[test]
    fn transition_rows_are_stochastic(topo in network(), seed in any::<u64>()) {
        let params = ProtocolParams::reference(0);
        let system = System::build(&topo, &params).unwrap();
        let dists = random_marginals(&topo, &params, seed);
        for x in topo.nodes() {
            for row in system.transition_rows(x, Some(&dists)) {
                prop_assert!(row.iter().all(|&(_, p)| (0.0..=1.0 + 1e-15).contains(&p)));
                let total: f64 = row.iter().map(|r| r.1).sum();
                prop_assert!((total - 1.0).abs() <= 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Renaming the nodes renames the solution and changes nothing else.
    #[test]
    fn solution_is_equivariant_under_relabeling(topo_mask in 1u32..64, perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
        let edges: Vec<(usize, usize)> =
            ALL_EDGES.iter().enumerate().filter(|(k, _)| topo_mask & (1 << k) != 0).map(|(_, e)| *e).collect();
        prop_assume!((0..4).all(|x| edges.iter().any(|&(a, b)| a == x || b == x)));
        let renamed: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        let sat = || vec![QueueMode::Saturated; 4];
        let params = ProtocolParams::reference(0);
        let solve = |e: &[(usize, usize)]| {
            System::build(&Topology::from_edges(4, e, sat()).unwrap(), &params)
                .unwrap()
                .solve(&SolverConfig::default())
                .unwrap()
        };
        let (a, b) = (solve(&edges), solve(&renamed));
        prop_assert!(a.converged && b.converged);
        for x in 0..4 {
            let (p, q) = (bin(&a.pi[x]), bin(&b.pi[perm[x]]));
            prop_assert_eq!(p.len(), q.len());
            for (k, v) in &p {
                prop_assert!((q[k] - v).abs() <= 1e-9, "x{} {k}: {v} vs {}", x + 1, q[k]);
            }
        }
    }

    #[test]
    fn simulation_is_a_function_of_its_seed(seed in any::<u64>()) {
        let mut c = SimConfig::new(Topology::triangle(), ProtocolParams::reference(1), seed, 3_000);
        c.warmup_slots = 100;
        c.audit = true;
        let (a, b) = (run(&c).unwrap(), run(&c).unwrap());
        prop_assert_eq!(&a.occupancy, &b.occupancy);
        for d in &a.occupancy {
            prop_assert!((d.total() - 1.0).abs() <= 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn bins_partition_the_mass(seed in any::<u64>(), m in 0u32..3) {
        let topo = Topology::hidden_terminal();
        let params = ProtocolParams::reference(m);
        for d in random_marginals(&topo, &params, seed) {
            let binned: f64 = bin(&d).values().sum();
            prop_assert!((binned - d.total()).abs() <= 1e-12);
        }
    }

    #[test]
    fn raw_csv_round_trips(seed in any::<u64>()) {
        let topo = Topology::triangle();
        let dists = random_marginals(&topo, &ProtocolParams::reference(1), seed);
        let back = parse_distribution(&emit_distribution(&dists)).unwrap();
        prop_assert_eq!(back.len(), dists.len());
        for (a, b) in dists.iter().zip(&back) {
            prop_assert_eq!(a.len(), b.len());
            prop_assert!(a.l1(b) <= 1e-9);
        }
    }
}
