//! Node permutations that preserve adjacency, queue modes and routing.

use crate::model::{NodeId, Topology};

/// Brute-force enumeration is skipped above this many nodes.
const MAX_BRUTE_FORCE: usize = 8;

/// A permutation `map[x] = image of x`.
pub type Permutation = Vec<NodeId>;

fn preserves(topo: &Topology, map: &[NodeId]) -> bool {
    topo.nodes().all(|x| {
        let y = map[x.0];
        topo.queue(x) == topo.queue(y)
            && topo.neighbors(x).len() == topo.neighbors(y).len()
            && topo.neighbors(x).iter().all(|&z| {
                topo.are_neighbors(y, map[z.0]) && topo.route_prob(x, z) == topo.route_prob(y, map[z.0])
            })
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// All automorphisms, identity first. Large topologies get only the identity.
pub fn automorphisms(topo: &Topology) -> Vec<Permutation> {
    let n = topo.len();
    let identity: Permutation = topo.nodes().collect();
    if n > MAX_BRUTE_FORCE {
        return vec![identity];
    }
    let mut out = vec![identity.clone()];
    out.extend(
        permutations(n)
            .into_iter()
            .map(|p| p.into_iter().map(NodeId).collect::<Permutation>())
            .filter(|p| *p != identity && preserves(topo, p)),
    );
    out
}

/// For each node, its orbit representative (the smallest node of the orbit) and an
/// automorphism carrying the representative onto it.
pub fn representatives(topo: &Topology) -> Vec<(NodeId, Permutation)> {
    let autos = automorphisms(topo);
    topo.nodes()
        .map(|y| {
            autos
                .iter()
                .filter_map(|p| p.iter().position(|&img| img == y).map(|src| (NodeId(src), p)))
                .min_by_key(|(src, _)| *src)
                .map(|(src, p)| (src, p.clone()))
                .expect("identity maps every node to itself")
        })
        .collect()
}
