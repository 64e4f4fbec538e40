//! Domain types: protocol timing, neighbor graphs, per-node states and marginals.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0 + 1)
    }
}

impl std::str::FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.strip_prefix('x').ok_or_else(|| Error::Parse(format!("node id `{s}`")))?;
        match digits.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(NodeId(n - 1)),
            _ => Err(Error::Parse(format!("node id `{s}`"))),
        }
    }
}

/// Fraction of a slot by which a duration may exceed a whole number of slots and
/// still be counted as that number. Absorbs PHY preamble rounding such as a
/// 562 µs frame on a 140 µs slot grid.
pub const SLOT_GUARD: f64 = 0.05;

/// Slot counts obtained from continuous durations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotTimes {
    pub rts: u32,
    pub cts: u32,
    pub data: u32,
    pub out: u32,
    pub nav_rts: u32,
    pub nav_cts: u32,
}

/// Converts durations to timer start values: a frame occupying `n` slots runs its
/// timer from `n - 1` down to 0.
pub fn discretize_times(
    rts: f64,
    cts: f64,
    data_ack: f64,
    timeout: f64,
    sigma: f64,
) -> Result<SlotTimes> {
    let named = [("rts", rts), ("cts", cts), ("data_ack", data_ack), ("timeout", timeout), ("sigma", sigma)];
    for (name, v) in named {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::config(format!("durations.{name}"), format!("must be positive, got {v}")));
        }
    }
    let slots = |t: f64| -> u32 { ((t / sigma - SLOT_GUARD).ceil().max(1.0) as u32) - 1 };
    Ok(SlotTimes {
        rts: slots(rts),
        cts: slots(cts),
        data: slots(data_ack),
        out: slots(timeout),
        nav_rts: slots(cts + data_ack),
        nav_cts: slots(data_ack),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    /// Initial contention window; stage `i` draws from `[1, w << i]`.
    pub w: u32,
    /// Highest backoff stage, which is also the RTS retry limit.
    pub m: u32,
    pub t_rts: u32,
    pub t_cts: u32,
    /// DATA plus its ACK.
    pub t_data: u32,
    pub t_out: u32,
    pub t_nav_rts: u32,
    pub t_nav_cts: u32,
    /// Physical slot length in microseconds; informational only.
    pub sigma: f64,
}

impl ProtocolParams {
    /// 140 µs slots, 280 µs control frames, 842 µs DATA+ACK, 420 µs timeout, window 3.
    pub fn reference(m: u32) -> Self {
        ProtocolParams { w: 3, m, t_rts: 1, t_cts: 1, t_data: 5, t_out: 2, t_nav_rts: 7, t_nav_cts: 5, sigma: 140.0 }
    }

    pub fn from_times(w: u32, m: u32, times: SlotTimes, sigma: f64) -> Result<Self> {
        let p = ProtocolParams {
            w,
            m,
            t_rts: times.rts,
            t_cts: times.cts,
            t_data: times.data,
            t_out: times.out,
            t_nav_rts: times.nav_rts,
            t_nav_cts: times.nav_cts,
            sigma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("w", self.w),
            ("t_rts", self.t_rts),
            ("t_cts", self.t_cts),
            ("t_data", self.t_data),
            ("t_out", self.t_out),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::config(format!("params.{name}"), "must be at least 1"));
            }
        }
        if self.t_rts != self.t_cts {
            return Err(Error::config("params.t_cts", "RTS and CTS durations must be equal"));
        }
        if self.t_out < self.t_cts {
            return Err(Error::config("params.t_out", "timeout must cover the CTS duration"));
        }
        if self.m > 16 {
            return Err(Error::config("params.m", "backoff stage above 16 overflows the window"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::config("params.sigma", "must be positive"));
        }
        Ok(())
    }

    /// Contention window of a stage.
    pub fn window(&self, stage: u32) -> u32 {
        self.w << stage
    }

    /// Whether both NAV timers end in the same slot as the DATA they protect.
    pub fn nav_aligned(&self) -> bool {
        self.t_nav_rts == self.t_cts + self.t_data + 1 && self.t_nav_cts == self.t_data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueueMode {
    /// Always has a head-of-line packet.
    Saturated,
    /// Never originates traffic; consumes what it receives.
    Sink,
    /// Relay with room for this many packets.
    Finite(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    neighbors: Vec<Vec<NodeId>>,
    queues: Vec<QueueMode>,
    routing: Vec<Vec<(NodeId, f64)>>,
}

impl Topology {
    /// `routing[x]` lists receiver probabilities; `None` routes uniformly over neighbors.
    pub fn new(
        neighbors: Vec<Vec<NodeId>>,
        queues: Vec<QueueMode>,
        routing: Option<Vec<Vec<(NodeId, f64)>>>,
    ) -> Result<Self> {
        let n = neighbors.len();
        if n == 0 {
            return Err(Error::config("topology.nodes", "at least one node required"));
        }
        if queues.len() != n {
            return Err(Error::config("topology.queues", format!("expected {n} entries, got {}", queues.len())));
        }
        let mut neighbors = neighbors;
        for (x, list) in neighbors.iter_mut().enumerate() {
            list.sort();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::config(format!("topology.neighbors.x{}", x + 1), "duplicate neighbor"));
            }
            for z in list.iter() {
                if z.0 >= n {
                    return Err(Error::config(format!("topology.neighbors.x{}", x + 1), format!("{z} out of range")));
                }
                if z.0 == x {
                    return Err(Error::config(format!("topology.neighbors.x{}", x + 1), "self loop"));
                }
            }
        }
        for x in 0..n {
            for z in &neighbors[x] {
                if neighbors[z.0].binary_search(&NodeId(x)).is_err() {
                    return Err(Error::config(
                        format!("topology.neighbors.x{}", x + 1),
                        format!("adjacency is asymmetric: {z} does not list x{}", x + 1),
                    ));
                }
            }
        }
        let routing = match routing {
            Some(r) => {
                if r.len() != n {
                    return Err(Error::config("topology.routing", format!("expected {n} entries")));
                }
                r
            }
            None => (0..n)
                .map(|x| match queues[x] {
                    QueueMode::Sink => Vec::new(),
                    _ => {
                        let k = neighbors[x].len() as f64;
                        neighbors[x].iter().map(|&z| (z, 1.0 / k)).collect()
                    }
                })
                .collect(),
        };
        let mut routing = routing;
        for x in 0..n {
            let field = format!("topology.routing.x{}", x + 1);
            let r = &mut routing[x];
            r.sort_by_key(|a| a.0);
            r.retain(|&(_, p)| p != 0.0);
            match queues[x] {
                QueueMode::Sink => {
                    if !r.is_empty() {
                        return Err(Error::config(field, "sink nodes do not route"));
                    }
                }
                _ => {
                    if neighbors[x].is_empty() {
                        return Err(Error::config(field, "a node with traffic needs at least one neighbor"));
                    }
                    for &(y, p) in r.iter() {
                        if neighbors[x].binary_search(&y).is_err() {
                            return Err(Error::config(field.clone(), format!("{y} is not a neighbor")));
                        }
                        if !(0.0..=1.0).contains(&p) {
                            return Err(Error::config(field.clone(), format!("probability {p} out of range")));
                        }
                    }
                    let total: f64 = r.iter().map(|e| e.1).sum();
                    if (total - 1.0).abs() > 1e-9 {
                        return Err(Error::config(field, format!("probabilities sum to {total}, not 1")));
                    }
                }
            }
            if let QueueMode::Finite(0) = queues[x] {
                return Err(Error::config(format!("topology.queues.x{}", x + 1), "finite queue needs capacity"));
            }
        }
        Ok(Topology { neighbors, queues, routing })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)], queues: Vec<QueueMode>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::config("topology.edges", format!("edge ({a}, {b}) out of range")));
            }
            adj[a].push(NodeId(b));
            adj[b].push(NodeId(a));
        }
        Topology::new(adj, queues, None)
    }

    /// Nodes within `range` of each other sense each other.
    pub fn from_positions(points: &[(f64, f64)], range: f64, queues: Vec<QueueMode>) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
                if dx.hypot(dy) <= range {
                    edges.push((i, j));
                }
            }
        }
        Topology::from_edges(points.len(), &edges, queues)
    }

    pub fn two_node() -> Self {
        Topology::from_edges(2, &[(0, 1)], vec![QueueMode::Saturated; 2]).expect("fixture is valid")
    }

    pub fn triangle() -> Self {
        Topology::from_edges(3, &[(0, 1), (1, 2), (0, 2)], vec![QueueMode::Saturated; 3]).expect("fixture is valid")
    }

    /// Two saturated senders either side of a sink that cannot hear each other.
    pub fn hidden_terminal() -> Self {
        Topology::from_edges(3, &[(0, 1), (1, 2)], vec![QueueMode::Saturated, QueueMode::Sink, QueueMode::Saturated])
            .expect("fixture is valid")
    }

    pub fn isolated_sink() -> Self {
        Topology::new(vec![Vec::new()], vec![QueueMode::Sink], None).expect("fixture is valid")
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.len()).map(NodeId)
    }

    pub fn check(&self, x: NodeId) -> Result<()> {
        if x.0 < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownNode(x))
        }
    }

    pub fn neighbors(&self, x: NodeId) -> &[NodeId] {
        &self.neighbors[x.0]
    }

    pub fn are_neighbors(&self, a: NodeId, b: NodeId) -> bool {
        self.neighbors[a.0].binary_search(&b).is_ok()
    }

    /// Neighbors of `x` that cannot sense `peer` (and are not `peer`).
    pub fn hidden_set(&self, x: NodeId, peer: NodeId) -> Vec<NodeId> {
        self.neighbors(x).iter().copied().filter(|&z| z != peer && !self.are_neighbors(z, peer)).collect()
    }

    pub fn queue(&self, x: NodeId) -> QueueMode {
        self.queues[x.0]
    }

    pub fn routing(&self, x: NodeId) -> &[(NodeId, f64)] {
        &self.routing[x.0]
    }

    pub fn route_prob(&self, x: NodeId, y: NodeId) -> f64 {
        self.routing[x.0].iter().find(|e| e.0 == y).map_or(0.0, |e| e.1)
    }

    /// Whether `from` can ever address an RTS (and so a DATA frame) to `to`.
    pub fn can_address(&self, from: NodeId, to: NodeId) -> bool {
        self.queue(from) != QueueMode::Sink && self.route_prob(from, to) > 0.0
    }
}

/// What a node is doing in a slot. Peer-carrying variants name the other end of
/// the exchange: the receiver for sender-side actions, the source otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Idle,
    Backoff,
    /// Channel busy with nothing decodable.
    Unknown,
    /// CTS timeout after an unanswered RTS.
    Wait,
    RtsSend(NodeId),
    RtsRecv(NodeId),
    RtsOverhear(NodeId),
    CtsSend(NodeId),
    CtsRecv(NodeId),
    CtsOverhear(NodeId),
    DataSend(NodeId),
    DataRecv(NodeId),
    Nav(NodeId),
}

impl Action {
    pub fn peer(self) -> Option<NodeId> {
        use Action::*;
        match self {
            Idle | Backoff | Unknown | Wait => None,
            RtsSend(z) | RtsRecv(z) | RtsOverhear(z) | CtsSend(z) | CtsRecv(z) | CtsOverhear(z) | DataSend(z)
            | DataRecv(z) | Nav(z) => Some(z),
        }
    }

    pub fn is_transmitting(self) -> bool {
        matches!(self, Action::RtsSend(_) | Action::CtsSend(_) | Action::DataSend(_))
    }

    /// Actions on the initiating side of a handshake.
    pub fn is_sender_side(self) -> bool {
        matches!(self, Action::RtsSend(_) | Action::CtsRecv(_) | Action::DataSend(_) | Action::Wait)
    }

    pub fn is_timed(self) -> bool {
        !matches!(self, Action::Idle | Action::Backoff | Action::Unknown)
    }

    /// Stable short name used in tables and logs.
    pub fn code(self) -> &'static str {
        use Action::*;
        match self {
            Idle => "I",
            Backoff => "B",
            Unknown => "U",
            Wait => "W",
            RtsSend(_) => "R_snt",
            RtsRecv(_) => "R_rcv",
            RtsOverhear(_) => "R_ovh",
            CtsSend(_) => "C_snt",
            CtsRecv(_) => "C_rcv",
            CtsOverhear(_) => "C_ovh",
            DataSend(_) => "A_snt",
            DataRecv(_) => "A_rcv",
            Nav(_) => "D",
        }
    }

    pub fn from_code(code: &str, peer: Option<NodeId>) -> Result<Self> {
        use Action::*;
        let need = || peer.ok_or_else(|| Error::Parse(format!("action {code} needs a peer")));
        Ok(match code {
            "I" => Idle,
            "B" => Backoff,
            "U" => Unknown,
            "W" => Wait,
            "R_snt" => RtsSend(need()?),
            "R_rcv" => RtsRecv(need()?),
            "R_ovh" => RtsOverhear(need()?),
            "C_snt" => CtsSend(need()?),
            "C_rcv" => CtsRecv(need()?),
            "C_ovh" => CtsOverhear(need()?),
            "A_snt" => DataSend(need()?),
            "A_rcv" => DataRecv(need()?),
            "D" => Nav(need()?),
            other => return Err(Error::Parse(format!("unknown action `{other}`"))),
        })
    }

    pub fn with_peer(self, map: impl Fn(NodeId) -> NodeId) -> Self {
        use Action::*;
        match self {
            Idle | Backoff | Unknown | Wait => self,
            RtsSend(z) => RtsSend(map(z)),
            RtsRecv(z) => RtsRecv(map(z)),
            RtsOverhear(z) => RtsOverhear(map(z)),
            CtsSend(z) => CtsSend(map(z)),
            CtsRecv(z) => CtsRecv(map(z)),
            CtsOverhear(z) => CtsOverhear(map(z)),
            DataSend(z) => DataSend(map(z)),
            DataRecv(z) => DataRecv(map(z)),
            Nav(z) => Nav(map(z)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QueueLen {
    Count(u32),
    Saturated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Queue {
    pub receiver: Option<NodeId>,
    pub len: QueueLen,
}

impl Queue {
    pub const EMPTY: Queue = Queue { receiver: None, len: QueueLen::Count(0) };

    pub fn saturated(receiver: NodeId) -> Self {
        Queue { receiver: Some(receiver), len: QueueLen::Saturated }
    }

    pub fn is_occupied(&self) -> bool {
        match self.len {
            QueueLen::Saturated => true,
            QueueLen::Count(l) => l > 0,
        }
    }

    /// Layer index: 0 for an empty queue, 1 for saturated.
    pub fn layer(&self) -> u32 {
        match self.len {
            QueueLen::Saturated => 1,
            QueueLen::Count(l) => l,
        }
    }
}

/// One node's slot state. Receive, overhear, NAV and unknown states keep the
/// backoff stage and counter that were frozen on entry; sender-side states carry
/// counter 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeState {
    pub stage: u32,
    pub counter: u32,
    pub action: Action,
    pub timer: u32,
    pub queue: Queue,
}

impl NodeState {
    pub fn backoff(stage: u32, counter: u32, queue: Queue) -> Self {
        NodeState { stage, counter, action: Action::Backoff, timer: 0, queue }
    }

    pub fn idle(queue: Queue) -> Self {
        NodeState { stage: 0, counter: 0, action: Action::Idle, timer: 0, queue }
    }

    /// Same frozen backoff context, different action.
    pub fn with(&self, action: Action, timer: u32) -> Self {
        NodeState { action, timer, ..*self }
    }

    /// Backoff (or idle) state the node returns to after a wait or a foreign exchange.
    pub fn resumed(&self) -> Self {
        if self.queue.is_occupied() {
            NodeState::backoff(self.stage, self.counter, self.queue)
        } else {
            NodeState::idle(self.queue)
        }
    }

    pub fn is_backoff_zero(&self) -> bool {
        self.action == Action::Backoff && self.counter == 0
    }

    /// The node starts an RTS, a CTS or a DATA frame in the next slot.
    pub fn begins(&self) -> bool {
        self.is_backoff_zero()
            || (matches!(self.action, Action::RtsRecv(_) | Action::CtsRecv(_)) && self.timer == 0)
    }

    /// Transmitting with at least one more slot to go.
    pub fn mid_sending(&self) -> bool {
        self.action.is_transmitting() && self.timer > 0
    }

    /// Radio busy in the next slot as seen by any neighbor.
    pub fn emits_next(&self) -> bool {
        self.mid_sending() || self.begins()
    }

    /// Admissibility against the action/queue table and the timer and counter domains.
    pub fn check(&self, params: &ProtocolParams, mode: QueueMode) -> std::result::Result<(), String> {
        use Action::*;
        if self.stage > params.m {
            return Err(format!("stage {} above m={}", self.stage, params.m));
        }
        if self.counter > params.window(self.stage) {
            return Err(format!("counter {} above window {}", self.counter, params.window(self.stage)));
        }
        let max_timer = match self.action {
            Idle | Backoff | Unknown => 0,
            RtsSend(_) | RtsRecv(_) | RtsOverhear(_) => params.t_rts,
            CtsSend(_) | CtsRecv(_) | CtsOverhear(_) => params.t_cts,
            DataSend(_) | DataRecv(_) => params.t_data,
            Wait => params.t_out,
            Nav(_) => params.t_nav_rts.max(params.t_nav_cts),
        };
        if self.timer > max_timer {
            return Err(format!("timer {} above {max_timer} for {}", self.timer, self.action.code()));
        }
        match self.action {
            Idle if self.queue.is_occupied() => return Err("idle with an occupied queue".into()),
            Backoff | Wait | RtsSend(_) | CtsRecv(_) | DataSend(_) if !self.queue.is_occupied() => {
                return Err(format!("{} with an empty queue", self.action.code()))
            }
            _ => {}
        }
        if self.action.is_sender_side() && self.counter != 0 {
            return Err("sender-side state with a nonzero counter".into());
        }
        if let RtsSend(y) | CtsRecv(y) | DataSend(y) = self.action {
            if self.queue.receiver != Some(y) {
                return Err("sender-side peer differs from the head-of-line receiver".into());
            }
        }
        match (mode, self.queue.len) {
            (QueueMode::Saturated, QueueLen::Saturated) => {}
            (QueueMode::Sink, QueueLen::Count(0)) => {}
            (QueueMode::Finite(cap), QueueLen::Count(l)) if l <= cap => {}
            _ => return Err(format!("queue {:?} incompatible with mode {mode:?}", self.queue.len)),
        }
        if self.queue.is_occupied() != self.queue.receiver.is_some() {
            return Err("receiver set without a packet, or a packet without receiver".into());
        }
        Ok(())
    }

    pub fn relabel(&self, map: impl Fn(NodeId) -> NodeId + Copy) -> Self {
        NodeState {
            action: self.action.with_peer(map),
            queue: Queue { receiver: self.queue.receiver.map(map), len: self.queue.len },
            ..*self
        }
    }
}

impl fmt::Display for NodeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{}", self.stage, self.counter, self.action.code())?;
        if let Some(p) = self.action.peer() {
            write!(f, "[{p}]")?;
        }
        write!(f, ",{}", self.timer)?;
        match (self.queue.receiver, self.queue.len) {
            (Some(y), QueueLen::Saturated) => write!(f, ",<{y},inf>)"),
            (Some(y), QueueLen::Count(l)) => write!(f, ",<{y},{l}>)"),
            (None, _) => write!(f, ",<-,0>)"),
        }
    }
}

/// Probability mass over one node's states, kept sorted by state.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    owner: NodeId,
    entries: Vec<(NodeState, f64)>,
}

/// Allowed deviation of a distribution's total from 1 at construction.
pub const NORMALIZATION_TOL: f64 = 1e-9;

impl Distribution {
    pub fn new(owner: NodeId, entries: impl IntoIterator<Item = (NodeState, f64)>) -> Result<Self> {
        let d = Distribution::collect(owner, entries)?;
        let total = d.total();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Numerical { equation: format!("normalization of {owner}: total {total}") });
        }
        Ok(d)
    }

    /// Scales arbitrary nonnegative weights to a distribution.
    pub fn normalized(owner: NodeId, entries: impl IntoIterator<Item = (NodeState, f64)>) -> Result<Self> {
        let mut d = Distribution::collect(owner, entries)?;
        let total = d.total();
        if !(total > 0.0) {
            return Err(Error::Numerical { equation: format!("normalization of {owner}: zero total") });
        }
        for e in &mut d.entries {
            e.1 /= total;
        }
        Ok(d)
    }

    fn collect(owner: NodeId, entries: impl IntoIterator<Item = (NodeState, f64)>) -> Result<Self> {
        let mut entries: Vec<(NodeState, f64)> = entries.into_iter().collect();
        entries.sort_by_key(|a| a.0);
        let mut merged: Vec<(NodeState, f64)> = Vec::with_capacity(entries.len());
        for (s, p) in entries {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Numerical { equation: format!("mass {p} of {owner} at {s}") });
            }
            match merged.last_mut() {
                Some(last) if last.0 == s => last.1 += p,
                _ => merged.push((s, p)),
            }
        }
        Ok(Distribution { owner, entries: merged })
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeState, f64)> + '_ {
        self.entries.iter().map(|(s, p)| (s, *p))
    }

    pub fn entries(&self) -> &[(NodeState, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, s: &NodeState) -> f64 {
        self.entries.binary_search_by(|e| e.0.cmp(s)).map_or(0.0, |i| self.entries[i].1)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn mass(&self, pred: impl Fn(&NodeState) -> bool) -> f64 {
        self.entries.iter().filter(|e| pred(&e.0)).map(|e| e.1).sum()
    }

    /// L1 distance over the union of supports.
    pub fn l1(&self, other: &Distribution) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() || j < b.len() {
            let ord = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) => x.0.cmp(&y.0),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            match ord {
                Ordering::Less => {
                    acc += a[i].1;
                    i += 1;
                }
                Ordering::Greater => {
                    acc += b[j].1;
                    j += 1;
                }
                Ordering::Equal => {
                    acc += (a[i].1 - b[j].1).abs();
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}
