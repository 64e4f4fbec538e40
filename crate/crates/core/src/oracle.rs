//! Exact joint Markov chain over all nodes, for topologies small enough to enumerate.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::diagram::{initial_states, TransitionLabel};
use crate::error::{Error, Result};
use crate::model::{Distribution, NodeId, NodeState, ProtocolParams, Topology};
use crate::step::{Next, Stepper};

/// Joint states beyond which enumeration is refused.
pub const STATE_CAP: usize = 2_000_000;

/// Dense LU is used up to this many recurrent states; larger chains use Gauss-Seidel.
const DENSE_LIMIT: usize = 2_500;

const ITERATIVE_TOL: f64 = 1e-15;
const ITERATIVE_MAX_SWEEPS: usize = 200_000;

/// One joint transition: probability and the label each node fired.
#[derive(Debug, Clone, PartialEq)]
pub struct JointEdge {
    pub target: usize,
    pub prob: f64,
    pub labels: Vec<Option<TransitionLabel>>,
}

#[derive(Debug, Clone)]
pub struct JointChain {
    pub states: Vec<Vec<NodeState>>,
    pub edges: Vec<Vec<JointEdge>>,
}

impl JointChain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `source,target,probability,labels` per edge, labels joined by `;`.
    pub fn edge_list(&self) -> String {
        let mut out = String::from("source,target,probability,labels\n");
        for (i, row) in self.edges.iter().enumerate() {
            for e in row {
                let labels: Vec<String> =
                    e.labels.iter().map(|l| l.map_or_else(|| "-".to_string(), |l| l.to_string())).collect();
                writeln!(out, "{i},{},{:.12e},{}", e.target, e.prob, labels.join(";")).expect("string write");
            }
        }
        out
    }
}

/// Product of per-node successor options.
fn expand(options: &[Vec<(NodeState, f64)>]) -> Vec<(Vec<NodeState>, f64)> {
    let mut acc: Vec<(Vec<NodeState>, f64)> = vec![(Vec::with_capacity(options.len()), 1.0)];
    for opts in options {
        acc = acc
            .into_iter()
            .flat_map(|(prefix, p)| {
                opts.iter().map(move |(s, w)| {
                    let mut v = prefix.clone();
                    v.push(*s);
                    (v, p * w)
                })
            })
            .collect();
    }
    acc
}

/// Breadth-first enumeration of the joint states reachable from the initial product.
pub fn build_joint_chain(topo: &Topology, params: &ProtocolParams) -> Result<JointChain> {
    params.validate()?;
    let stepper = Stepper::new(topo, params);
    let init: Vec<Vec<(NodeState, f64)>> = topo.nodes().map(|x| initial_states(topo, params, x)).collect();
    let mut index: HashMap<Vec<NodeState>, usize> = HashMap::new();
    let mut states = Vec::new();
    let mut queue = VecDeque::new();
    for (w, _) in expand(&init) {
        if !index.contains_key(&w) {
            index.insert(w.clone(), states.len());
            queue.push_back(states.len());
            states.push(w);
        }
    }
    let mut edges: Vec<Vec<JointEdge>> = Vec::new();
    while let Some(i) = queue.pop_front() {
        let world = states[i].clone();
        let resolved: Vec<_> = topo.nodes().map(|x| stepper.resolve(&world, x)).collect();
        let options: Vec<Vec<(NodeState, f64)>> = resolved
            .iter()
            .map(|r| match &r.next {
                Next::Fixed(t) => vec![(*t, 1.0)],
                Next::Redraw(v) => v.clone(),
            })
            .collect();
        let labels: Vec<Option<TransitionLabel>> = resolved.iter().map(|r| r.label).collect();
        let mut row: Vec<JointEdge> = Vec::new();
        for (next, prob) in expand(&options) {
            let target = match index.get(&next) {
                Some(&t) => t,
                None => {
                    let t = states.len();
                    if t >= STATE_CAP {
                        return Err(Error::Size { count: t + 1, cap: STATE_CAP });
                    }
                    index.insert(next.clone(), t);
                    states.push(next);
                    queue.push_back(t);
                    t
                }
            };
            match row.iter_mut().find(|e| e.target == target) {
                Some(e) => e.prob += prob,
                None => row.push(JointEdge { target, prob, labels: labels.clone() }),
            }
        }
        if edges.len() <= i {
            edges.resize(i + 1, Vec::new());
        }
        edges[i] = row;
    }
    edges.resize(states.len(), Vec::new());
    Ok(JointChain { states, edges })
}

fn describe(world: &[NodeState]) -> String {
    world.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
}

/// Indices of the unique closed communicating class.
pub fn recurrent_class(chain: &JointChain) -> Result<Vec<usize>> {
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(chain.len(), 0);
    let nodes: Vec<_> = (0..chain.len()).map(|_| g.add_node(())).collect();
    for (i, row) in chain.edges.iter().enumerate() {
        for e in row.iter().filter(|e| e.prob > 0.0) {
            g.add_edge(nodes[i], nodes[e.target], ());
        }
    }
    let sccs = tarjan_scc(&g);
    let mut comp = vec![0usize; chain.len()];
    for (c, scc) in sccs.iter().enumerate() {
        for n in scc {
            comp[n.index()] = c;
        }
    }
    let closed: Vec<&Vec<_>> = sccs
        .iter()
        .enumerate()
        .filter(|(c, scc)| {
            scc.iter().all(|n| chain.edges[n.index()].iter().filter(|e| e.prob > 0.0).all(|e| comp[e.target] == *c))
        })
        .map(|(_, scc)| scc)
        .collect();
    match closed.as_slice() {
        [one] => {
            let mut v: Vec<usize> = one.iter().map(|n| n.index()).collect();
            v.sort_unstable();
            Ok(v)
        }
        many => Err(Error::MultipleRecurrentClasses(
            many.iter().map(|scc| describe(&chain.states[scc.iter().map(|n| n.index()).min().unwrap_or(0)])).collect(),
        )),
    }
}

/// Stationary distribution over the recurrent class, as `(joint index, probability)`.
pub fn stationary(chain: &JointChain) -> Result<Vec<(usize, f64)>> {
    let class = recurrent_class(chain)?;
    let local: HashMap<usize, usize> = class.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let n = class.len();
    let pi = if n <= DENSE_LIMIT { dense(chain, &class, &local)? } else { gauss_seidel(chain, &class, &local)? };
    Ok(class.into_iter().zip(pi).collect())
}

/// Solves `π (P - I) = 0` with the last balance row replaced by normalization.
fn dense(chain: &JointChain, class: &[usize], local: &HashMap<usize, usize>) -> Result<Vec<f64>> {
    let n = class.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (k, &i) in class.iter().enumerate() {
        for e in &chain.edges[i] {
            // Row of the transposed system: equation for the target's balance.
            a[(local[&e.target], k)] += e.prob;
        }
        a[(k, k)] -= 1.0;
    }
    for k in 0..n {
        a[(n - 1, k)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b).ok_or_else(|| Error::Numerical { equation: "joint balance equations".into() })?;
    Ok(x.iter().map(|v| v.max(0.0)).collect())
}

fn gauss_seidel(chain: &JointChain, class: &[usize], local: &HashMap<usize, usize>) -> Result<Vec<f64>> {
    let n = class.len();
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut stay = vec![0.0; n];
    for (k, &i) in class.iter().enumerate() {
        for e in &chain.edges[i] {
            let t = local[&e.target];
            if t == k {
                stay[k] += e.prob;
            } else {
                incoming[t].push((k, e.prob));
            }
        }
    }
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..ITERATIVE_MAX_SWEEPS {
        let mut delta: f64 = 0.0;
        for t in 0..n {
            let v = incoming[t].iter().map(|&(k, p)| pi[k] * p).sum::<f64>() / (1.0 - stay[t]);
            delta = delta.max((v - pi[t]).abs());
            pi[t] = v;
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|v| *v /= total);
        if delta < ITERATIVE_TOL {
            return Ok(pi);
        }
    }
    Err(Error::Numerical { equation: "joint balance equations (Gauss-Seidel did not converge)".into() })
}

/// Largest violation of `π = π P` over the class.
pub fn balance_residual(chain: &JointChain, pi: &[(usize, f64)]) -> f64 {
    let mut flow: HashMap<usize, f64> = pi.iter().map(|&(i, _)| (i, 0.0)).collect();
    for &(i, p) in pi {
        for e in &chain.edges[i] {
            *flow.entry(e.target).or_insert(0.0) += p * e.prob;
        }
    }
    let own: HashMap<usize, f64> = pi.iter().copied().collect();
    flow.iter().map(|(i, f)| (f - own.get(i).copied().unwrap_or(0.0)).abs()).fold(0.0, f64::max)
}

/// Per-node marginals of a joint distribution.
pub fn marginals(chain: &JointChain, pi: &[(usize, f64)], n_nodes: usize) -> Result<Vec<Distribution>> {
    (0..n_nodes)
        .map(|x| Distribution::new(NodeId(x), pi.iter().map(|&(i, p)| (chain.states[i][x], p))))
        .collect()
}

/// Oracle output for one topology.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub chain: JointChain,
    pub pi: Vec<(usize, f64)>,
    pub marginals: Vec<Distribution>,
    pub residual: f64,
}

pub fn solve_exact(topo: &Topology, params: &ProtocolParams) -> Result<OracleSolution> {
    let chain = build_joint_chain(topo, params)?;
    let pi = stationary(&chain)?;
    let residual = balance_residual(&chain, &pi);
    let marginals = marginals(&chain, &pi, topo.len())?;
    Ok(OracleSolution { chain, pi, marginals, residual })
}
