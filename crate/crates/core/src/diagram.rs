//! Structural transition diagram of a single node: which successor states exist
//! from a given state, under which probabilistic label, with which static weight.

use std::fmt;

use crate::model::{Action, NodeId, NodeState, ProtocolParams, Queue, QueueLen, QueueMode, Topology};

/// Groups of mutually exclusive outcomes evaluated at one conditioning state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Sense,
    RtsReceive,
    RtsOverhear,
    CtsOverhear,
    CtsSendEnd,
    DataReceive,
    NavEnd,
    UnknownEnd,
    RtsSendEnd,
    CtsReceive,
    TimeoutEnd,
}

impl Family {
    pub const ALL: [Family; 11] = [
        Family::Sense,
        Family::RtsReceive,
        Family::RtsOverhear,
        Family::CtsOverhear,
        Family::CtsSendEnd,
        Family::DataReceive,
        Family::NavEnd,
        Family::UnknownEnd,
        Family::RtsSendEnd,
        Family::CtsReceive,
        Family::TimeoutEnd,
    ];

    /// Label kinds of the family, success member first.
    pub fn members(self) -> &'static [LabelKind] {
        use LabelKind::*;
        match self {
            Family::Sense => &[SenseQuiet, SenseRts, OverhearRts, OverhearCts, SenseBusy],
            Family::RtsReceive => &[RtsRecvOk, RtsRecvLost],
            Family::RtsOverhear => &[RtsOvhOk, RtsOvhLost],
            Family::CtsOverhear => &[CtsOvhOk, CtsOvhLost],
            Family::CtsSendEnd => &[CtsDelivered, CtsUnanswered],
            Family::DataReceive => &[DataRecvOk, DataRecvLost],
            Family::NavEnd => &[NavClear, NavBusy],
            Family::UnknownEnd => &[UnknownClear, UnknownBusy],
            Family::RtsSendEnd => &[RtsAnswered, RtsFailed],
            Family::CtsReceive => &[CtsRecvOk, CtsRecvLost],
            Family::TimeoutEnd => &[TimeoutClear, TimeoutBusy],
        }
    }

    /// Family applying at a conditioning state, if the state branches at all.
    pub fn at(s: &NodeState) -> Option<Family> {
        use Action::*;
        let end = s.timer == 0;
        Some(match s.action {
            Idle => Family::Sense,
            Backoff if s.counter > 0 => Family::Sense,
            RtsRecv(_) if !end => Family::RtsReceive,
            RtsOverhear(_) if !end => Family::RtsOverhear,
            CtsOverhear(_) if !end => Family::CtsOverhear,
            CtsSend(_) if end => Family::CtsSendEnd,
            DataRecv(_) if !end => Family::DataReceive,
            Nav(_) if end => Family::NavEnd,
            Unknown => Family::UnknownEnd,
            RtsSend(_) if end => Family::RtsSendEnd,
            CtsRecv(_) if !end => Family::CtsReceive,
            Wait if end => Family::TimeoutEnd,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LabelKind {
    SenseQuiet,
    SenseRts,
    OverhearRts,
    OverhearCts,
    SenseBusy,
    RtsRecvOk,
    RtsRecvLost,
    RtsOvhOk,
    RtsOvhLost,
    CtsOvhOk,
    CtsOvhLost,
    CtsDelivered,
    CtsUnanswered,
    DataRecvOk,
    DataRecvLost,
    NavClear,
    NavBusy,
    UnknownClear,
    UnknownBusy,
    RtsAnswered,
    RtsFailed,
    CtsRecvOk,
    CtsRecvLost,
    TimeoutClear,
    TimeoutBusy,
}

impl LabelKind {
    pub const ALL: [LabelKind; 25] = {
        use LabelKind::*;
        [
            SenseQuiet, SenseRts, OverhearRts, OverhearCts, SenseBusy, RtsRecvOk, RtsRecvLost, RtsOvhOk, RtsOvhLost,
            CtsOvhOk, CtsOvhLost, CtsDelivered, CtsUnanswered, DataRecvOk, DataRecvLost, NavClear, NavBusy,
            UnknownClear, UnknownBusy, RtsAnswered, RtsFailed, CtsRecvOk, CtsRecvLost, TimeoutClear, TimeoutBusy,
        ]
    };

    /// Short diagram code such as `1a` or `9b`.
    pub fn code(self) -> &'static str {
        use LabelKind::*;
        match self {
            SenseQuiet => "1a",
            SenseRts => "1b",
            OverhearRts => "1c",
            OverhearCts => "1d",
            SenseBusy => "1e",
            RtsRecvOk => "2a",
            RtsRecvLost => "2b",
            RtsOvhOk => "3a",
            RtsOvhLost => "3b",
            CtsOvhOk => "4a",
            CtsOvhLost => "4b",
            CtsDelivered => "5a",
            CtsUnanswered => "5b",
            DataRecvOk => "6a",
            DataRecvLost => "6b",
            NavClear => "7a",
            NavBusy => "7b",
            UnknownClear => "8a",
            UnknownBusy => "8b",
            RtsAnswered => "9a",
            RtsFailed => "9b",
            CtsRecvOk => "10a",
            CtsRecvLost => "10b",
            TimeoutClear => "11a",
            TimeoutBusy => "11b",
        }
    }

    pub fn from_code(code: &str) -> Option<LabelKind> {
        LabelKind::ALL.into_iter().find(|k| k.code() == code)
    }

    pub fn family(self) -> Family {
        use LabelKind::*;
        match self {
            SenseQuiet | SenseRts | OverhearRts | OverhearCts | SenseBusy => Family::Sense,
            RtsRecvOk | RtsRecvLost => Family::RtsReceive,
            RtsOvhOk | RtsOvhLost => Family::RtsOverhear,
            CtsOvhOk | CtsOvhLost => Family::CtsOverhear,
            CtsDelivered | CtsUnanswered => Family::CtsSendEnd,
            DataRecvOk | DataRecvLost => Family::DataReceive,
            NavClear | NavBusy => Family::NavEnd,
            UnknownClear | UnknownBusy => Family::UnknownEnd,
            RtsAnswered | RtsFailed => Family::RtsSendEnd,
            CtsRecvOk | CtsRecvLost => Family::CtsReceive,
            TimeoutClear | TimeoutBusy => Family::TimeoutEnd,
        }
    }

    /// Whether the label names one specific neighbor.
    pub fn is_pairwise(self) -> bool {
        !matches!(self, LabelKind::SenseQuiet | LabelKind::SenseBusy | LabelKind::UnknownClear | LabelKind::UnknownBusy)
    }

    /// The success/quiet member of a two-way family, or 1a for carrier sense.
    pub fn is_primary(self) -> bool {
        self.family().members()[0] == self
    }
}

/// A circled transition, with the partner node for pairwise labels. For the
/// carrier-sense labels 1b..1d the partner is the neighbor that begins to send;
/// for every other pairwise label it is the peer of the conditioning state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionLabel {
    pub kind: LabelKind,
    pub partner: Option<NodeId>,
}

impl TransitionLabel {
    pub fn new(kind: LabelKind, partner: Option<NodeId>) -> Self {
        TransitionLabel { kind, partner }
    }

    pub fn plain(kind: LabelKind) -> Self {
        TransitionLabel { kind, partner: None }
    }

    pub fn with(kind: LabelKind, partner: NodeId) -> Self {
        TransitionLabel { kind, partner: Some(partner) }
    }
}

impl fmt::Display for TransitionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.partner {
            Some(p) => write!(f, "{}[{p}]", self.kind.code()),
            None => f.write_str(self.kind.code()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub target: NodeState,
    pub label: Option<TransitionLabel>,
    /// Static factor multiplied with the label probability: backoff and receiver
    /// draws. Weights of edges sharing a label sum to 1.
    pub weight: f64,
}

/// Starting states with their probabilities: a uniform stage-0 draw over the
/// window and the routing targets for nodes with traffic, idle otherwise.
pub fn initial_states(topo: &Topology, params: &ProtocolParams, x: NodeId) -> Vec<(NodeState, f64)> {
    match topo.queue(x) {
        QueueMode::Saturated => fresh_packet(topo, params, x, QueueLen::Saturated),
        QueueMode::Sink | QueueMode::Finite(_) => vec![(NodeState::idle(Queue::EMPTY), 1.0)],
    }
}

/// Stage-0 backoff states for a new head-of-line packet.
pub fn fresh_packet(topo: &Topology, params: &ProtocolParams, x: NodeId, len: QueueLen) -> Vec<(NodeState, f64)> {
    let w = params.window(0);
    let mut out = Vec::with_capacity(topo.routing(x).len() * w as usize);
    for &(y, p) in topo.routing(x) {
        for k in 1..=w {
            out.push((NodeState::backoff(0, k, Queue { receiver: Some(y), len }), p / w as f64));
        }
    }
    out
}

/// Where a sender goes once its head-of-line packet leaves the queue, delivered or dropped.
pub fn after_packet(topo: &Topology, params: &ProtocolParams, x: NodeId, s: &NodeState) -> Vec<(NodeState, f64)> {
    match s.queue.len {
        QueueLen::Saturated => fresh_packet(topo, params, x, QueueLen::Saturated),
        QueueLen::Count(l) if l > 1 => fresh_packet(topo, params, x, QueueLen::Count(l - 1)),
        QueueLen::Count(_) => vec![(NodeState::idle(Queue::EMPTY), 1.0)],
    }
}

/// Where a receiver goes once a DATA frame completes.
pub fn after_delivery(topo: &Topology, params: &ProtocolParams, x: NodeId, s: &NodeState) -> Vec<(NodeState, f64)> {
    match (topo.queue(x), s.queue.len) {
        (QueueMode::Finite(cap), QueueLen::Count(l)) => {
            if l == 0 {
                fresh_packet(topo, params, x, QueueLen::Count(1))
            } else if l < cap {
                let mut r = s.resumed();
                r.queue.len = QueueLen::Count(l + 1);
                vec![(r, 1.0)]
            } else {
                // Full queue: the packet is dropped.
                vec![(s.resumed(), 1.0)]
            }
        }
        _ => vec![(s.resumed(), 1.0)],
    }
}

/// Timeout value on a CTS failure at receive timer `j`, counted from the end of the RTS.
pub fn timeout_after_cts_loss(params: &ProtocolParams, j: u32) -> u32 {
    params.t_out - 1 - (params.t_cts - j)
}

/// Every successor of `s` allowed by the node's capabilities: neighbors that can
/// never address an RTS or reply with a CTS produce no edge.
pub fn diagram_edges(topo: &Topology, params: &ProtocolParams, x: NodeId, s: &NodeState) -> Vec<Edge> {
    use Action::*;
    use LabelKind::*;
    let fixed = |target: NodeState, label: Option<TransitionLabel>| Edge { target, label, weight: 1.0 };
    let lab = |k: LabelKind, p: NodeId| Some(TransitionLabel::with(k, p));
    let plain = |k: LabelKind| Some(TransitionLabel::plain(k));
    let spread = |targets: Vec<(NodeState, f64)>, label: Option<TransitionLabel>| {
        targets.into_iter().map(move |(target, weight)| Edge { target, label, weight })
    };
    let j = s.timer;
    let mut out = Vec::new();
    match s.action {
        Backoff if s.counter == 0 => {
            let y = s.queue.receiver.expect("backoff implies a receiver");
            out.push(fixed(s.with(RtsSend(y), params.t_rts), None));
        }
        Backoff | Idle => {
            let quiet = if s.action == Backoff { NodeState { counter: s.counter - 1, ..*s } } else { *s };
            out.push(fixed(quiet, plain(SenseQuiet)));
            for &z in topo.neighbors(x) {
                if topo.can_address(z, x) {
                    out.push(fixed(s.with(RtsRecv(z), params.t_rts), lab(SenseRts, z)));
                }
                if topo.routing(z).iter().any(|&(y, _)| y != x) {
                    out.push(fixed(s.with(RtsOverhear(z), params.t_rts), lab(OverhearRts, z)));
                }
                if topo.neighbors(z).iter().any(|&w| w != x && topo.can_address(w, z)) {
                    out.push(fixed(s.with(CtsOverhear(z), params.t_cts), lab(OverhearCts, z)));
                }
            }
            out.push(fixed(s.with(Unknown, 0), plain(SenseBusy)));
        }
        RtsRecv(z) if j > 0 => {
            out.push(fixed(s.with(RtsRecv(z), j - 1), lab(RtsRecvOk, z)));
            out.push(fixed(s.with(Unknown, 0), lab(RtsRecvLost, z)));
        }
        RtsRecv(z) => out.push(fixed(s.with(CtsSend(z), params.t_cts), None)),
        RtsOverhear(z) if j > 0 => {
            out.push(fixed(s.with(RtsOverhear(z), j - 1), lab(RtsOvhOk, z)));
            out.push(fixed(s.with(Unknown, 0), lab(RtsOvhLost, z)));
        }
        RtsOverhear(z) => out.push(fixed(s.with(Nav(z), params.t_nav_rts), None)),
        CtsOverhear(z) if j > 0 => {
            out.push(fixed(s.with(CtsOverhear(z), j - 1), lab(CtsOvhOk, z)));
            out.push(fixed(s.with(Unknown, 0), lab(CtsOvhLost, z)));
        }
        CtsOverhear(z) => out.push(fixed(s.with(Nav(z), params.t_nav_cts), None)),
        CtsSend(z) if j > 0 => out.push(fixed(s.with(CtsSend(z), j - 1), None)),
        CtsSend(z) => {
            out.push(fixed(s.with(DataRecv(z), params.t_data), lab(CtsDelivered, z)));
            out.push(fixed(s.resumed(), lab(CtsUnanswered, z)));
        }
        DataRecv(z) if j > 0 => {
            out.push(fixed(s.with(DataRecv(z), j - 1), lab(DataRecvOk, z)));
            out.push(fixed(s.with(Unknown, 0), lab(DataRecvLost, z)));
        }
        DataRecv(_) => out.extend(spread(after_delivery(topo, params, x, s), None)),
        Nav(z) if j > 0 => out.push(fixed(s.with(Nav(z), j - 1), None)),
        Nav(z) => {
            out.push(fixed(s.resumed(), lab(NavClear, z)));
            out.push(fixed(*s, lab(NavBusy, z)));
        }
        Unknown => {
            out.push(fixed(s.resumed(), plain(UnknownClear)));
            out.push(fixed(*s, plain(UnknownBusy)));
        }
        RtsSend(y) if j > 0 => out.push(fixed(s.with(RtsSend(y), j - 1), None)),
        RtsSend(y) => {
            out.push(fixed(s.with(CtsRecv(y), params.t_cts), lab(RtsAnswered, y)));
            out.push(fixed(s.with(Wait, params.t_out), lab(RtsFailed, y)));
        }
        CtsRecv(y) if j > 0 => {
            out.push(fixed(s.with(CtsRecv(y), j - 1), lab(CtsRecvOk, y)));
            out.push(fixed(s.with(Wait, timeout_after_cts_loss(params, j)), lab(CtsRecvLost, y)));
        }
        CtsRecv(y) => out.push(fixed(s.with(DataSend(y), params.t_data), None)),
        DataSend(y) if j > 0 => out.push(fixed(s.with(DataSend(y), j - 1), None)),
        DataSend(_) => out.extend(spread(after_packet(topo, params, x, s), None)),
        Wait if j > 0 => out.push(fixed(s.with(Wait, j - 1), None)),
        Wait => {
            let y = s.queue.receiver.expect("wait implies a receiver");
            let clear = lab(TimeoutClear, y);
            if s.stage < params.m {
                let next = s.stage + 1;
                let w = params.window(next);
                for k in 1..=w {
                    out.push(Edge { target: NodeState::backoff(next, k, s.queue), label: clear, weight: 1.0 / w as f64 });
                }
            } else {
                out.extend(spread(after_packet(topo, params, x, s), clear));
            }
            out.push(fixed(*s, lab(TimeoutBusy, y)));
        }
    }
    out
}
