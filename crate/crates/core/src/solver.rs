//! Damped fixed-point iteration of the coupled per-node chains.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::diagram::TransitionLabel;
use crate::error::{Error, Result};
use crate::diagram::initial_states;
use crate::kernel::{Form, Triviality};
use crate::model::{Action, Distribution, NodeId, NodeState, ProtocolParams, Topology};
use crate::space::{closure, StateSpace, StatusCache};
use crate::symmetry::{representatives, Permutation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Weight kept on the previous iterate.
    pub damping: f64,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { damping: 0.5, tol: 1e-10, max_iterations: 100_000 }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// Largest `|π P(π) - π|` entry over all nodes at the returned iterate.
    pub residual: f64,
    /// Largest `|Σ π - 1|` over all nodes.
    pub normalization_error: f64,
    pub pi: Vec<Distribution>,
}

#[derive(Debug, Clone)]
enum SlotMode {
    Constant(f64),
    /// Evaluated from the neighbors; `fallback` applies when conditioning mass is zero.
    Evaluate { form: Form, fallback: f64 },
}

#[derive(Debug, Clone)]
struct Slot {
    label: TransitionLabel,
    cond: NodeState,
    mode: SlotMode,
}

#[derive(Debug, Clone, Copy)]
struct Term {
    target: usize,
    weight: f64,
    slot: Option<usize>,
}

/// One node's chain with its label probabilities left symbolic.
#[derive(Debug, Clone)]
struct NodeSystem {
    rows: Vec<Vec<Term>>,
    slots: Vec<Slot>,
    anchors: Vec<usize>,
    /// Position of each state among the anchors, if it is one.
    anchor_pos: Vec<Option<usize>>,
    /// Non-anchor states, every state before its successors (self-loops aside).
    order: Vec<usize>,
}

/// The coupled system: reachable spaces, symbolic chains and symmetry ties.
pub struct System {
    topo: Topology,
    params: ProtocolParams,
    space: StateSpace,
    nodes: Vec<NodeSystem>,
    ties: Vec<(NodeId, Permutation)>,
}

fn is_anchor(s: &NodeState) -> bool {
    matches!(s.action, Action::Backoff | Action::Idle)
}

fn topological_order(rows: &[Vec<Term>], anchor: &[bool]) -> Result<Vec<usize>> {
    let n = rows.len();
    let mut indegree = vec![0usize; n];
    for (i, row) in rows.iter().enumerate() {
        if anchor[i] {
            continue;
        }
        for t in row.iter().filter(|t| t.target != i && !anchor[t.target]) {
            indegree[t.target] += 1;
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| !anchor[i] && indegree[i] == 0).collect();
    let mut order = Vec::new();
    while let Some(i) = ready.pop() {
        order.push(i);
        for t in rows[i].iter().filter(|t| t.target != i && !anchor[t.target]) {
            indegree[t.target] -= 1;
            if indegree[t.target] == 0 {
                ready.push(t.target);
            }
        }
    }
    if order.len() != anchor.iter().filter(|a| !**a).count() {
        return Err(Error::Numerical { equation: "excursion graph between backoff states has a cycle".into() });
    }
    Ok(order)
}

impl System {
    pub fn build(topo: &Topology, params: &ProtocolParams) -> Result<System> {
        let space = closure(topo, params, Triviality::Dynamics)?;
        let mut cache = StatusCache::new(topo, params, space.supports(), Triviality::Dynamics);
        let mut nodes = Vec::with_capacity(topo.len());
        for x in topo.nodes() {
            let states = space.states(x);
            let mut slots: Vec<Slot> = Vec::new();
            let mut slot_index: HashMap<(TransitionLabel, Action, u32), usize> = HashMap::new();
            let mut rows = Vec::with_capacity(states.len());
            for s in states {
                let live = cache.live_edges(x, s)?;
                let possible: Vec<TransitionLabel> = {
                    let mut v: Vec<TransitionLabel> = live.iter().filter_map(|e| e.label).collect();
                    v.sort();
                    v.dedup();
                    v
                };
                let mut row = Vec::with_capacity(live.len());
                for e in &live {
                    let target = space
                        .index_of(x, &e.target)
                        .ok_or_else(|| Error::Contract(format!("successor {} of {x} outside the closure", e.target)))?;
                    let slot = match e.label {
                        None => None,
                        Some(label) => {
                            let key = (label, s.action, s.timer);
                            let idx = match slot_index.get(&key) {
                                Some(&i) => i,
                                None => {
                                    let mode = if possible.len() == 1 {
                                        SlotMode::Constant(1.0)
                                    } else {
                                        let form = crate::kernel::form_of(&label, x, s, topo, params)?;
                                        let fallback = if label.kind.is_primary() { 1.0 } else { 0.0 };
                                        SlotMode::Evaluate { form, fallback }
                                    };
                                    slots.push(Slot { label, cond: *s, mode });
                                    slot_index.insert(key, slots.len() - 1);
                                    slots.len() - 1
                                }
                            };
                            Some(idx)
                        }
                    };
                    row.push(Term { target, weight: e.weight, slot });
                }
                rows.push(row);
            }
            let anchor: Vec<bool> = states.iter().map(is_anchor).collect();
            let order = topological_order(&rows, &anchor)?;
            let anchors: Vec<usize> = (0..states.len()).filter(|&i| anchor[i]).collect();
            let mut anchor_pos = vec![None; states.len()];
            for (k, &a) in anchors.iter().enumerate() {
                anchor_pos[a] = Some(k);
            }
            nodes.push(NodeSystem { rows, slots, anchors, anchor_pos, order });
        }
        Ok(System { topo: topo.clone(), params: *params, space, nodes, ties: representatives(topo) })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    /// Labels that the mask leaves to evaluation at `x`, as `(label, conditioning state)`.
    pub fn evaluated_labels(&self, x: NodeId) -> Vec<(TransitionLabel, NodeState)> {
        self.nodes[x.0]
            .slots
            .iter()
            .filter(|s| matches!(s.mode, SlotMode::Evaluate { .. }))
            .map(|s| (s.label, s.cond))
            .collect()
    }

    fn slot_values(&self, x: NodeId, dists: Option<&[Distribution]>) -> Vec<f64> {
        self.nodes[x.0]
            .slots
            .iter()
            .map(|slot| match (&slot.mode, dists) {
                (SlotMode::Constant(v), _) => *v,
                (SlotMode::Evaluate { fallback, .. }, None) => *fallback,
                (SlotMode::Evaluate { form, fallback }, Some(d)) => {
                    let e = form.evaluate(d);
                    if e.zero_denominator {
                        *fallback
                    } else {
                        e.value
                    }
                }
            })
            .collect()
    }

    /// Row-stochastic transition rows of `x`: `rows[s]` lists `(target, probability)`.
    /// Without marginals every evaluated label takes its fallback value.
    pub fn transition_rows(&self, x: NodeId, dists: Option<&[Distribution]>) -> Vec<Vec<(usize, f64)>> {
        let values = self.slot_values(x, dists);
        self.nodes[x.0]
            .rows
            .iter()
            .map(|row| {
                let raw: Vec<(usize, f64)> =
                    row.iter().map(|t| (t.target, t.weight * t.slot.map_or(1.0, |k| values[k]))).collect();
                let total: f64 = raw.iter().map(|r| r.1).sum();
                if total > 0.0 {
                    raw.into_iter().map(|(t, p)| (t, p / total)).collect()
                } else {
                    // Every outcome evaluated to zero: fall back to the quiet/success branch.
                    let fallback: Vec<(usize, f64)> = row
                        .iter()
                        .filter(|t| t.slot.is_none_or(|k| self.nodes[x.0].slots[k].label.kind.is_primary()))
                        .map(|t| (t.target, t.weight))
                        .collect();
                    let total: f64 = fallback.iter().map(|r| r.1).sum();
                    fallback.into_iter().map(|(t, p)| (t, p / total)).collect()
                }
            })
            .collect()
    }

    /// Anchor reduction of a node's chain. Returns the anchor-to-anchor matrix `Q`
    /// and the expected visits `V[a][s]` to non-anchor states during one excursion
    /// from anchor `a`.
    pub fn anchor_matrix(&self, x: NodeId, rows: &[Vec<(usize, f64)>]) -> Result<(Vec<usize>, DMatrix<f64>, DMatrix<f64>)> {
        let sys = &self.nodes[x.0];
        let n = rows.len();
        let k = sys.anchors.len();
        let mut q = DMatrix::<f64>::zeros(k, k);
        let mut v = DMatrix::<f64>::zeros(k, n);
        let mut inflow = vec![0.0; n];
        for (ai, &a) in sys.anchors.iter().enumerate() {
            inflow.iter_mut().for_each(|f| *f = 0.0);
            let push = |t: usize, p: f64, inflow: &mut Vec<f64>, q: &mut DMatrix<f64>| match sys.anchor_pos[t] {
                Some(bt) => q[(ai, bt)] += p,
                None => inflow[t] += p,
            };
            for &(t, p) in &rows[a] {
                push(t, p, &mut inflow, &mut q);
            }
            for &s in &sys.order {
                if inflow[s] == 0.0 {
                    continue;
                }
                let stay: f64 = rows[s].iter().filter(|r| r.0 == s).map(|r| r.1).sum();
                if stay >= 1.0 {
                    return Err(Error::Numerical {
                        equation: format!("excursion from {} is trapped in {}", self.space.states(x)[a], self.space.states(x)[s]),
                    });
                }
                let visits = inflow[s] / (1.0 - stay);
                v[(ai, s)] = visits;
                for &(t, p) in rows[s].iter().filter(|r| r.0 != s) {
                    push(t, visits * p, &mut inflow, &mut q);
                }
            }
        }
        Ok((sys.anchors.clone(), q, v))
    }

    /// Stationary distribution of one node's chain.
    pub fn node_stationary(&self, x: NodeId, rows: &[Vec<(usize, f64)>]) -> Result<Distribution> {
        let (anchors, q, v) = self.anchor_matrix(x, rows)?;
        let k = anchors.len();
        // ν (Q - I) = 0 with the last equation replaced by the normalization of π.
        let mut a = (q - DMatrix::<f64>::identity(k, k)).transpose();
        for ai in 0..k {
            a[(k - 1, ai)] = 1.0 + v.row(ai).sum();
        }
        let mut b = DVector::<f64>::zeros(k);
        b[k - 1] = 1.0;
        let nu = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Numerical { equation: format!("anchor balance of {x}") })?;
        let states = self.space.states(x);
        let mut pi = vec![0.0; states.len()];
        for (ai, &an) in anchors.iter().enumerate() {
            pi[an] += nu[ai];
            for s in 0..states.len() {
                pi[s] += nu[ai] * v[(ai, s)];
            }
        }
        Distribution::normalized(x, states.iter().copied().zip(pi.into_iter().map(|p| p.max(0.0))))
    }

    /// Fills tied nodes from their representatives.
    fn tie(&self, reps: &[Option<Distribution>]) -> Result<Vec<Distribution>> {
        self.ties
            .iter()
            .enumerate()
            .map(|(y, (rep, perm))| {
                let d = reps[rep.0].as_ref().expect("representatives are solved");
                if rep.0 == y {
                    Ok(d.clone())
                } else {
                    let map = |z: NodeId| perm[z.0];
                    Distribution::new(NodeId(y), d.iter().map(|(s, p)| (s.relabel(map), p)))
                }
            })
            .collect()
    }

    fn solve_all(&self, dists: Option<&[Distribution]>) -> Result<Vec<Distribution>> {
        let reps: Vec<Option<Distribution>> = self
            .ties
            .iter()
            .enumerate()
            .map(|(y, (rep, _))| {
                if rep.0 == y {
                    let x = NodeId(y);
                    self.node_stationary(x, &self.transition_rows(x, dists)).map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<_>>()?;
        self.tie(&reps)
    }

    /// Starting point: senders spread uniformly over stage-0 backoff counters and
    /// receivers, everyone else idle.
    pub fn initial_distribution(&self) -> Result<Vec<Distribution>> {
        self.topo.nodes().map(|x| Distribution::new(x, initial_states(&self.topo, &self.params, x))).collect()
    }

    /// Largest `|π P(π) - π|` entry over all nodes.
    pub fn balance_residual(&self, pi: &[Distribution]) -> f64 {
        self.topo
            .nodes()
            .map(|x| {
                let rows = self.transition_rows(x, Some(pi));
                let states = self.space.states(x);
                let mut flow = vec![0.0; states.len()];
                for (i, row) in rows.iter().enumerate() {
                    let p = pi[x.0].get(&states[i]);
                    for &(t, q) in row {
                        flow[t] += p * q;
                    }
                }
                states.iter().zip(flow).map(|(s, f)| (f - pi[x.0].get(s)).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn solve(&self, config: &SolverConfig) -> Result<SolveReport> {
        if !(0.0..1.0).contains(&config.damping) {
            return Err(Error::config("solver.damping", "must lie in [0, 1)"));
        }
        let mut pi = self.initial_distribution()?;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < config.max_iterations {
            iterations += 1;
            let next = self.solve_all(Some(&pi))?;
            let gap = pi.iter().zip(&next).map(|(a, b)| max_abs_diff(a, b)).fold(0.0, f64::max);
            let blended: Vec<Option<Distribution>> = self
                .ties
                .iter()
                .enumerate()
                .map(|(y, (rep, _))| (rep.0 == y).then(|| blend(&pi[y], &next[y], config.damping)))
                .collect();
            pi = self.tie(&blended)?;
            if gap <= config.tol {
                converged = true;
                break;
            }
        }
        let residual = self.balance_residual(&pi);
        let normalization_error = pi.iter().map(|d| (d.total() - 1.0).abs()).fold(0.0, f64::max);
        Ok(SolveReport { converged, iterations, residual, normalization_error, pi })
    }
}

fn max_abs_diff(a: &Distribution, b: &Distribution) -> f64 {
    let mut m: f64 = 0.0;
    for (s, p) in a.iter() {
        m = m.max((p - b.get(s)).abs());
    }
    for (s, p) in b.iter() {
        m = m.max((p - a.get(s)).abs());
    }
    m
}

/// `damping * a + (1 - damping) * b`, over the union of supports.
fn blend(a: &Distribution, b: &Distribution, damping: f64) -> Distribution {
    let entries = a.iter().map(|(s, p)| (*s, damping * p)).chain(b.iter().map(|(s, p)| (*s, (1.0 - damping) * p)));
    Distribution::normalized(a.owner(), entries).expect("blend of distributions is a distribution")
}

/// Builds the system and runs the damped iteration.
pub fn solve(topo: &Topology, params: &ProtocolParams, config: &SolverConfig) -> Result<SolveReport> {
    System::build(topo, params)?.solve(config)
}
