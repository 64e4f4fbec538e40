//! Reachable per-node state spaces.
//!
//! Whether a labeled edge can fire depends on what the neighbors can be doing, and
//! that in turn depends on which of their edges can fire. The spaces are therefore
//! computed jointly as a fixpoint over the whole network.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::diagram::{diagram_edges, initial_states, Edge, TransitionLabel};
use crate::error::{Error, Result};
use crate::kernel::{status, Status, Triviality};
use crate::model::{Action, NodeId, NodeState, ProtocolParams, Topology};

const MAX_ROUNDS: usize = 64;

/// Reachable states of every node, each list sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    per_node: Vec<Vec<NodeState>>,
}

impl StateSpace {
    pub fn states(&self, x: NodeId) -> &[NodeState] {
        &self.per_node[x.0]
    }

    pub fn supports(&self) -> &[Vec<NodeState>] {
        &self.per_node
    }

    pub fn index_of(&self, x: NodeId, s: &NodeState) -> Option<usize> {
        self.per_node[x.0].binary_search(s).ok()
    }

    pub fn total(&self) -> usize {
        self.per_node.iter().map(Vec::len).sum()
    }
}

/// Memoized label status; a status depends on the conditioning state only through
/// its action and timer.
pub struct StatusCache<'a> {
    topo: &'a Topology,
    params: &'a ProtocolParams,
    supports: &'a [Vec<NodeState>],
    rules: Triviality,
    memo: HashMap<(NodeId, TransitionLabel, Action, u32), Status>,
}

impl<'a> StatusCache<'a> {
    pub fn new(
        topo: &'a Topology,
        params: &'a ProtocolParams,
        supports: &'a [Vec<NodeState>],
        rules: Triviality,
    ) -> Self {
        StatusCache { topo, params, supports, rules, memo: HashMap::new() }
    }

    pub fn status(&mut self, x: NodeId, cond: &NodeState, label: &TransitionLabel) -> Result<Status> {
        let key = (x, *label, cond.action, cond.timer);
        if let Some(s) = self.memo.get(&key) {
            return Ok(*s);
        }
        let s = status(label, x, cond, self.topo, self.params, self.supports, self.rules)?;
        self.memo.insert(key, s);
        Ok(s)
    }

    /// Edges of `s` whose label can occur given the supports.
    pub fn live_edges(&mut self, x: NodeId, s: &NodeState) -> Result<Vec<Edge>> {
        let mut out = Vec::new();
        for e in diagram_edges(self.topo, self.params, x, s) {
            let live = match &e.label {
                None => true,
                Some(l) => self.status(x, s, l)?.possible,
            };
            if live {
                out.push(e);
            }
        }
        Ok(out)
    }
}

fn explore(
    topo: &Topology,
    params: &ProtocolParams,
    supports: &[Vec<NodeState>],
    rules: Triviality,
) -> Result<Vec<Vec<NodeState>>> {
    let mut cache = StatusCache::new(topo, params, supports, rules);
    let mut out = Vec::with_capacity(topo.len());
    for x in topo.nodes() {
        let mut seen: BTreeSet<NodeState> = initial_states(topo, params, x).into_iter().map(|(s, _)| s).collect();
        let mut queue: VecDeque<NodeState> = seen.iter().copied().collect();
        while let Some(s) = queue.pop_front() {
            debug_assert!(s.check(params, topo.queue(x)).is_ok(), "inadmissible state {s} of {x}");
            for e in cache.live_edges(x, &s)? {
                if seen.insert(e.target) {
                    queue.push_back(e.target);
                }
            }
        }
        out.push(seen.into_iter().collect());
    }
    Ok(out)
}

/// Joint fixpoint of the per-node reachable sets, starting from the initial states.
pub fn closure(topo: &Topology, params: &ProtocolParams, rules: Triviality) -> Result<StateSpace> {
    params.validate()?;
    let mut current: Vec<Vec<NodeState>> = topo
        .nodes()
        .map(|x| {
            let mut v: Vec<NodeState> = initial_states(topo, params, x).into_iter().map(|(s, _)| s).collect();
            v.sort();
            v
        })
        .collect();
    for _ in 0..MAX_ROUNDS {
        let next = explore(topo, params, &current, rules)?;
        if next == current {
            return Ok(StateSpace { per_node: current });
        }
        current = next;
    }
    Err(Error::Numerical { equation: format!("state-space fixpoint after {MAX_ROUNDS} rounds") })
}

/// Reachable states of one node, under the solver's rules.
pub fn enumerate_states(topo: &Topology, params: &ProtocolParams, x: NodeId) -> Result<Vec<NodeState>> {
    topo.check(x)?;
    Ok(closure(topo, params, Triviality::Dynamics)?.per_node.swap_remove(x.0))
}
