//! Slot-synchronous network dynamics shared by the simulator and the joint oracle.
//! Every node's next state is decided from the same snapshot of the current slot.

use crate::diagram::{after_delivery, after_packet, timeout_after_cts_loss, LabelKind, TransitionLabel};
use crate::model::{Action, NodeId, NodeState, ProtocolParams, Topology};

/// Successor of one node: fixed, or a random draw of backoff counter and receiver.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Next {
    Fixed(NodeState),
    Redraw(Vec<(NodeState, f64)>),
}

impl Next {
    fn from_spread(mut v: Vec<(NodeState, f64)>) -> Next {
        if v.len() == 1 {
            Next::Fixed(v.pop().expect("one element").0)
        } else {
            Next::Redraw(v)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Resolved {
    pub label: Option<TransitionLabel>,
    pub next: Next,
}

/// Topology-derived lookups reused every slot.
pub(crate) struct Stepper<'a> {
    pub topo: &'a Topology,
    pub params: &'a ProtocolParams,
    /// `hidden[x][peer]`: neighbors of `x` that cannot hear `peer`.
    hidden: Vec<Vec<Vec<NodeId>>>,
}

impl<'a> Stepper<'a> {
    pub fn new(topo: &'a Topology, params: &'a ProtocolParams) -> Self {
        let hidden = topo
            .nodes()
            .map(|x| topo.nodes().map(|p| if topo.are_neighbors(x, p) { topo.hidden_set(x, p) } else { Vec::new() }).collect())
            .collect();
        Stepper { topo, params, hidden }
    }

    fn channel_clear(&self, world: &[NodeState], x: NodeId) -> bool {
        self.topo.neighbors(x).iter().all(|z| !world[z.0].emits_next())
    }

    /// Some neighbor of `x` that cannot hear `peer` starts or continues a frame.
    fn corrupted(&self, world: &[NodeState], x: NodeId, peer: NodeId) -> bool {
        self.hidden[x.0][peer.0].iter().any(|a| world[a.0].emits_next())
    }

    /// Outcome of carrier sensing for a listening node.
    fn sense(&self, world: &[NodeState], x: NodeId, s: &NodeState) -> (LabelKind, Option<NodeId>, NodeState) {
        use Action::*;
        let p = self.params;
        let mut emitters = self.topo.neighbors(x).iter().filter(|z| world[z.0].emits_next());
        let (first, second) = (emitters.next(), emitters.next());
        match (first, second) {
            (None, _) => {
                let quiet = if s.action == Backoff { NodeState { counter: s.counter - 1, ..*s } } else { *s };
                (LabelKind::SenseQuiet, None, quiet)
            }
            (Some(&z), None) => {
                let zs = &world[z.0];
                if zs.is_backoff_zero() && zs.queue.receiver == Some(x) {
                    (LabelKind::SenseRts, Some(z), s.with(RtsRecv(z), p.t_rts))
                } else if zs.is_backoff_zero() {
                    (LabelKind::OverhearRts, Some(z), s.with(RtsOverhear(z), p.t_rts))
                } else if matches!(zs.action, RtsRecv(_)) && zs.timer == 0 {
                    (LabelKind::OverhearCts, Some(z), s.with(CtsOverhear(z), p.t_cts))
                } else {
                    (LabelKind::SenseBusy, None, s.with(Unknown, 0))
                }
            }
            _ => (LabelKind::SenseBusy, None, s.with(Unknown, 0)),
        }
    }

    pub fn resolve(&self, world: &[NodeState], x: NodeId) -> Resolved {
        use Action::*;
        use LabelKind::*;
        let (topo, p) = (self.topo, self.params);
        let s = world[x.0];
        let j = s.timer;
        let fixed = |label: Option<TransitionLabel>, t: NodeState| Resolved { label, next: Next::Fixed(t) };
        let lab = |k: LabelKind, z: NodeId| Some(TransitionLabel::with(k, z));
        let plain = |k: LabelKind| Some(TransitionLabel::plain(k));
        let tick = |a: Action| fixed(None, s.with(a, j - 1));
        match s.action {
            Backoff if s.counter == 0 => {
                let y = s.queue.receiver.expect("backoff implies a receiver");
                fixed(None, s.with(RtsSend(y), p.t_rts))
            }
            Backoff | Idle => {
                let (kind, partner, t) = self.sense(world, x, &s);
                fixed(Some(TransitionLabel::new(kind, partner)), t)
            }
            RtsRecv(z) | RtsOverhear(z) | CtsOverhear(z) | DataRecv(z) | CtsRecv(z) if j > 0 => {
                let (ok, lost) = match s.action {
                    RtsRecv(_) => (RtsRecvOk, RtsRecvLost),
                    RtsOverhear(_) => (RtsOvhOk, RtsOvhLost),
                    CtsOverhear(_) => (CtsOvhOk, CtsOvhLost),
                    DataRecv(_) => (DataRecvOk, DataRecvLost),
                    _ => (CtsRecvOk, CtsRecvLost),
                };
                if !self.corrupted(world, x, z) {
                    fixed(lab(ok, z), s.with(s.action, j - 1))
                } else if lost == CtsRecvLost {
                    fixed(lab(lost, z), s.with(Wait, timeout_after_cts_loss(p, j)))
                } else {
                    fixed(lab(lost, z), s.with(Unknown, 0))
                }
            }
            RtsRecv(z) => fixed(None, s.with(CtsSend(z), p.t_cts)),
            RtsOverhear(z) => fixed(None, s.with(Nav(z), p.t_nav_rts)),
            CtsOverhear(z) => fixed(None, s.with(Nav(z), p.t_nav_cts)),
            DataRecv(_) => Resolved { label: None, next: Next::from_spread(after_delivery(topo, p, x, &s)) },
            CtsRecv(y) => fixed(None, s.with(DataSend(y), p.t_data)),
            CtsSend(_) | RtsSend(_) | DataSend(_) | Nav(_) | Wait if j > 0 => tick(s.action),
            CtsSend(z) => {
                let w = &world[z.0];
                if w.action == CtsRecv(x) && w.timer == 0 {
                    fixed(lab(CtsDelivered, z), s.with(DataRecv(z), p.t_data))
                } else {
                    fixed(lab(CtsUnanswered, z), s.resumed())
                }
            }
            RtsSend(y) => {
                let w = &world[y.0];
                if w.action == RtsRecv(x) && w.timer == 0 {
                    fixed(lab(RtsAnswered, y), s.with(CtsRecv(y), p.t_cts))
                } else {
                    fixed(lab(RtsFailed, y), s.with(Wait, p.t_out))
                }
            }
            DataSend(_) => Resolved { label: None, next: Next::from_spread(after_packet(topo, p, x, &s)) },
            Nav(z) if self.channel_clear(world, x) => fixed(lab(NavClear, z), s.resumed()),
            Nav(z) => fixed(lab(NavBusy, z), s),
            Unknown if self.channel_clear(world, x) => fixed(plain(UnknownClear), s.resumed()),
            Unknown => fixed(plain(UnknownBusy), s),
            Wait => {
                let y = s.queue.receiver.expect("wait implies a receiver");
                if !self.channel_clear(world, x) {
                    return fixed(lab(TimeoutBusy, y), s);
                }
                let next = if s.stage < p.m {
                    let stage = s.stage + 1;
                    let w = p.window(stage);
                    (1..=w).map(|k| (NodeState::backoff(stage, k, s.queue), 1.0 / w as f64)).collect()
                } else {
                    after_packet(topo, p, x, &s)
                };
                Resolved { label: lab(TimeoutClear, y), next: Next::from_spread(next) }
            }
        }
    }
}

/// Lock-step invariants between the two ends of an exchange, and between an
/// overheard frame and its sender. Returns a description of the first violation.
pub(crate) fn check_consistency(topo: &Topology, world: &[NodeState]) -> Option<String> {
    use Action::*;
    for x in topo.nodes() {
        let s = world[x.0];
        let j = s.timer;
        let ok = match s.action {
            DataRecv(y) => world[y.0].action == DataSend(x) && world[y.0].timer == j,
            RtsRecv(y) => world[y.0].action == RtsSend(x) && world[y.0].timer == j,
            CtsRecv(y) => world[y.0].action == CtsSend(x) && world[y.0].timer == j,
            RtsOverhear(z) => matches!(world[z.0].action, RtsSend(_)) && world[z.0].timer == j,
            CtsOverhear(z) => matches!(world[z.0].action, CtsSend(_)) && world[z.0].timer == j,
            _ => true,
        };
        if !ok {
            return Some(format!("{x} in {s} but its peer is in {}", world[s.action.peer().map_or(x, |p| p).0]));
        }
    }
    None
}
