//! Static classification of which labels stay random on a given topology.

use std::collections::{BTreeMap, BTreeSet};

use crate::diagram::{diagram_edges, LabelKind, TransitionLabel};
use crate::error::Result;
use crate::kernel::Triviality;
use crate::model::{Action, NodeId, ProtocolParams, Topology};
use crate::space::{closure, StatusCache};

/// Conditioning states sharing an action (peer included) and timer share every
/// label status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateClass {
    pub action: Action,
    pub timer: u32,
}

/// Per node, the state classes with at least one label that is neither
/// impossible nor certain, and those labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Specialization {
    pub per_node: Vec<BTreeMap<StateClass, BTreeSet<TransitionLabel>>>,
}

impl Specialization {
    /// Label codes (partners dropped) that are nontrivial somewhere at `x`.
    pub fn codes(&self, x: NodeId) -> BTreeSet<&'static str> {
        self.kinds(x).into_iter().map(LabelKind::code).collect()
    }

    pub fn kinds(&self, x: NodeId) -> BTreeSet<LabelKind> {
        self.per_node[x.0].values().flatten().map(|l| l.kind).collect()
    }
}

/// Scans every reachable state under `rules` and keeps the labels whose status is
/// undetermined by the supports.
pub fn specialize(topo: &Topology, params: &ProtocolParams, rules: Triviality) -> Result<Specialization> {
    let space = closure(topo, params, rules)?;
    let mut cache = StatusCache::new(topo, params, space.supports(), rules);
    let mut per_node = Vec::with_capacity(topo.len());
    for x in topo.nodes() {
        let mut classes: BTreeMap<StateClass, BTreeSet<TransitionLabel>> = BTreeMap::new();
        for s in space.states(x) {
            for label in diagram_edges(topo, params, x, s).into_iter().filter_map(|e| e.label) {
                let st = cache.status(x, s, &label)?;
                if st.possible && !st.certain {
                    classes.entry(StateClass { action: s.action, timer: s.timer }).or_default().insert(label);
                }
            }
        }
        per_node.push(classes);
    }
    Ok(Specialization { per_node })
}

/// Per-example classification under the full rule catalog.
pub fn specialize_example(topo: &Topology, params: &ProtocolParams) -> Result<Specialization> {
    specialize(topo, params, Triviality::Tables)
}
