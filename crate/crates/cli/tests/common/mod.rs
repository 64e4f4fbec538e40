//! Closed-form transition probabilities for the three built-in networks, written
//! directly from the per-network set definitions rather than through the generic
//! neighbor predicates. Node indices: x1 = 0, x2 = 1, x3 = 2.

#![allow(dead_code)]

use dcf::{Action, Distribution, LabelKind, NodeId, NodeState, TransitionLabel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const X1: NodeId = NodeId(0);
pub const X2: NodeId = NodeId(1);
pub const X3: NodeId = NodeId(2);

/// A conditioning predicate on the evaluating node's own state, the label and
/// the hand-coded value.
pub struct HandCase {
    pub node: NodeId,
    pub label: TransitionLabel,
    pub applies: fn(&NodeState) -> bool,
    pub value: f64,
}

fn mass(d: &Distribution, pred: impl Fn(&NodeState) -> bool) -> f64 {
    d.iter().filter(|(s, _)| pred(s)).map(|(_, p)| p).sum()
}

fn is_b(s: &NodeState) -> bool {
    s.action == Action::Backoff
}

fn is_b_counting(s: &NodeState) -> bool {
    is_b(s) && s.counter != 0
}

fn is_b_zero_to(s: &NodeState, y: NodeId) -> bool {
    is_b(s) && s.counter == 0 && s.queue.receiver == Some(y)
}

fn is_w(s: &NodeState) -> bool {
    s.action == Action::Wait
}

fn is_u(s: &NodeState) -> bool {
    s.action == Action::Unknown
}

fn sensing(s: &NodeState) -> bool {
    s.action == Action::Idle || is_b_counting(s)
}

fn rts_end_at(s: &NodeState, peer: NodeId) -> bool {
    s.action == Action::RtsSend(peer) && s.timer == 0
}

fn label(kind: LabelKind) -> TransitionLabel {
    TransitionLabel::plain(kind)
}

fn pair(kind: LabelKind, z: NodeId) -> TransitionLabel {
    TransitionLabel::with(kind, z)
}

/// Ratio of the receiver's last RTS slot to the sender's last RTS slot.
pub fn rts_answer_raw(d: &[Distribution], x: NodeId, y: NodeId) -> f64 {
    let num = mass(&d[y.0], |s| s.action == Action::RtsRecv(x) && s.timer == 0);
    let den = mass(&d[x.0], |s| s.action == Action::RtsSend(y) && s.timer == 0);
    num / den
}

/// On consistent marginals every answered RTS was sent, so the raw ratio is at
/// most one; arbitrary marginals can break that and the probability saturates.
fn rts_answer(d: &[Distribution], x: NodeId, y: NodeId) -> f64 {
    rts_answer_raw(d, x, y).min(1.0)
}

/// Product-measure mass of `(lead_a x rest_b) ∪ (rest_a x lead_b)` by inclusion-exclusion.
/// The predicates also receive the node index.
fn union_two(
    da: &Distribution,
    db: &Distribution,
    lead: impl Fn(&NodeState, usize) -> bool,
    rest: impl Fn(&NodeState, usize) -> bool,
    ia: usize,
    ib: usize,
) -> f64 {
    let la = mass(da, |s| lead(s, ia));
    let ra = mass(da, |s| rest(s, ia));
    let lb = mass(db, |s| lead(s, ib));
    let rb = mass(db, |s| rest(s, ib));
    let lra = mass(da, |s| lead(s, ia) && rest(s, ia));
    let lrb = mass(db, |s| lead(s, ib) && rest(s, ib));
    la * rb + lb * ra - lra * lrb
}

pub fn two_node(d: &[Distribution]) -> Vec<HandCase> {
    use LabelKind::*;
    let x2 = &d[1];
    let den = mass(x2, |s| is_b(s) || is_w(s));
    let quiet = mass(x2, |s| is_b_counting(s) || is_w(s)) / den;
    let rts = mass(x2, |s| is_b_zero_to(s, X1)) / den;
    let answer = rts_answer(d, X1, X2);
    vec![
        HandCase { node: X1, label: label(SenseQuiet), applies: sensing, value: quiet },
        HandCase { node: X1, label: pair(SenseRts, X2), applies: sensing, value: rts },
        HandCase { node: X1, label: pair(RtsAnswered, X2), applies: |s| rts_end_at(s, X2), value: answer },
        HandCase { node: X1, label: pair(RtsFailed, X2), applies: |s| rts_end_at(s, X2), value: 1.0 - answer },
    ]
}

fn sends_to(a: Action, peers: &[NodeId]) -> bool {
    match a {
        Action::RtsSend(p) | Action::CtsSend(p) | Action::DataSend(p) => peers.contains(&p),
        _ => false,
    }
}

pub fn triangle(d: &[Distribution]) -> Vec<HandCase> {
    use LabelKind::*;
    let den = |a: usize| mass(&d[a], |s| is_b(s) || is_w(s) || is_u(s));
    let quiet = |a: usize| mass(&d[a], |s| is_b_counting(s) || is_w(s) || is_u(s)) / den(a);
    let starts = |a: usize, y: NodeId| mass(&d[a], |s| is_b_zero_to(s, y)) / den(a);

    let p1a = quiet(1) * quiet(2);
    let p1b_2 = starts(1, X1) * quiet(2);
    let p1b_3 = starts(2, X1) * quiet(1);
    let p1c_2 = starts(1, X3) * quiet(2);
    let p1c_3 = starts(2, X2) * quiet(1);
    let p1e = 1.0 - p1a - p1b_2 - p1b_3 - p1c_2 - p1c_3;

    // The "other" of node index 1 is x3 and of 2 is x2.
    let other = |i: usize| if i == 1 { X3 } else { X2 };
    let lead = move |s: &NodeState, i: usize| match s.action {
        Action::RtsSend(p) | Action::DataSend(p) => p == X1 || p == other(i),
        Action::CtsSend(p) => p == other(i),
        _ => false,
    };
    let rest = |s: &NodeState, _: usize| {
        !matches!(
            s.action,
            Action::RtsRecv(X1)
                | Action::RtsOverhear(X1)
                | Action::CtsSend(X1)
                | Action::CtsRecv(X1)
                | Action::CtsOverhear(X1)
                | Action::DataRecv(X1)
        )
    };
    let lead_end = move |s: &NodeState, i: usize| lead(s, i) && s.timer == 0;
    let rest_quiet = move |s: &NodeState, i: usize| {
        rest(s, i)
            && !(sends_to(s.action, &[X1, other(i)]) && s.timer != 0)
            && !(is_b(s) && s.counter == 0)
    };
    let p8a = union_two(&d[1], &d[2], lead_end, rest_quiet, 1, 2) / union_two(&d[1], &d[2], lead, rest, 1, 2);

    let a2 = rts_answer(d, X1, X2);
    let a3 = rts_answer(d, X1, X3);
    vec![
        HandCase { node: X1, label: label(SenseQuiet), applies: sensing, value: p1a },
        HandCase { node: X1, label: pair(SenseRts, X2), applies: sensing, value: p1b_2 },
        HandCase { node: X1, label: pair(SenseRts, X3), applies: sensing, value: p1b_3 },
        HandCase { node: X1, label: pair(OverhearRts, X2), applies: sensing, value: p1c_2 },
        HandCase { node: X1, label: pair(OverhearRts, X3), applies: sensing, value: p1c_3 },
        HandCase { node: X1, label: label(SenseBusy), applies: sensing, value: p1e },
        HandCase { node: X1, label: label(UnknownClear), applies: is_u, value: p8a },
        HandCase { node: X1, label: label(UnknownBusy), applies: is_u, value: 1.0 - p8a },
        HandCase { node: X1, label: pair(RtsAnswered, X2), applies: |s| rts_end_at(s, X2), value: a2 },
        HandCase { node: X1, label: pair(RtsFailed, X2), applies: |s| rts_end_at(s, X2), value: 1.0 - a2 },
        HandCase { node: X1, label: pair(RtsAnswered, X3), applies: |s| rts_end_at(s, X3), value: a3 },
        HandCase { node: X1, label: pair(RtsFailed, X3), applies: |s| rts_end_at(s, X3), value: 1.0 - a3 },
    ]
}

pub fn hidden_terminal(d: &[Distribution]) -> Vec<HandCase> {
    use LabelKind::*;
    // Sender x1 against the receiver's state.
    let r = &d[1];
    let den1 = mass(r, |s| s.action == Action::Idle || matches!(s.action, Action::RtsRecv(X3)) || is_u(s));
    let p1a_x1 = mass(r, |s| {
        (s.action == Action::RtsRecv(X3) && s.timer != 0) || s.action == Action::Idle || is_u(s)
    }) / den1;
    let p1d_x1 = mass(r, |s| s.action == Action::RtsRecv(X3) && s.timer == 0) / den1;
    let a1 = rts_answer(d, X1, X2);

    // Receiver x2 against both senders.
    let den = |a: usize| mass(&d[a], |s| is_b(s) || is_w(s));
    let quiet = |a: usize| mass(&d[a], |s| is_b_counting(s) || is_w(s)) / den(a);
    let starts = |a: usize| mass(&d[a], |s| is_b_zero_to(s, X2)) / den(a);
    let p1a = quiet(0) * quiet(2);
    let p1b_1 = starts(0) * quiet(2);
    let p1b_3 = starts(2) * quiet(0);
    let p1e = 1.0 - p1a - p1b_1 - p1b_3;
    let lead = |s: &NodeState, _: usize| matches!(s.action, Action::RtsSend(X2) | Action::DataSend(X2));
    let rest = |s: &NodeState, _: usize| !matches!(s.action, Action::CtsRecv(X2) | Action::CtsOverhear(X2));
    let lead_end = move |s: &NodeState, i: usize| lead(s, i) && s.timer == 0;
    let rest_quiet = move |s: &NodeState, i: usize| {
        rest(s, i)
            && !(s.action == Action::RtsSend(X2) && s.timer == 1)
            && !(s.action == Action::DataSend(X2) && s.timer != 0)
            && !(is_b(s) && s.counter == 0)
    };
    let p8a = union_two(&d[0], &d[2], lead_end, rest_quiet, 0, 2) / union_two(&d[0], &d[2], lead, rest, 0, 2);

    vec![
        HandCase { node: X1, label: label(SenseQuiet), applies: sensing, value: p1a_x1 },
        HandCase { node: X1, label: pair(OverhearCts, X2), applies: sensing, value: p1d_x1 },
        HandCase { node: X1, label: pair(RtsAnswered, X2), applies: |s| rts_end_at(s, X2), value: a1 },
        HandCase { node: X1, label: pair(RtsFailed, X2), applies: |s| rts_end_at(s, X2), value: 1.0 - a1 },
        HandCase { node: X2, label: label(SenseQuiet), applies: sensing, value: p1a },
        HandCase { node: X2, label: pair(SenseRts, X1), applies: sensing, value: p1b_1 },
        HandCase { node: X2, label: pair(SenseRts, X3), applies: sensing, value: p1b_3 },
        HandCase { node: X2, label: label(SenseBusy), applies: sensing, value: p1e },
        HandCase {
            node: X2,
            label: pair(RtsRecvOk, X1),
            applies: |s| s.action == Action::RtsRecv(X1) && s.timer > 0,
            value: quiet(2),
        },
        HandCase {
            node: X2,
            label: pair(RtsRecvLost, X1),
            applies: |s| s.action == Action::RtsRecv(X1) && s.timer > 0,
            value: 1.0 - quiet(2),
        },
        HandCase {
            node: X2,
            label: pair(RtsRecvOk, X3),
            applies: |s| s.action == Action::RtsRecv(X3) && s.timer > 0,
            value: quiet(0),
        },
        HandCase {
            node: X2,
            label: pair(RtsRecvLost, X3),
            applies: |s| s.action == Action::RtsRecv(X3) && s.timer > 0,
            value: 1.0 - quiet(0),
        },
        HandCase { node: X2, label: label(UnknownClear), applies: is_u, value: p8a },
        HandCase { node: X2, label: label(UnknownBusy), applies: is_u, value: 1.0 - p8a },
    ]
}

/// Random marginal with full support on `states`.
pub fn random_marginal(rng: &mut ChaCha8Rng, x: NodeId, states: &[NodeState]) -> Distribution {
    Distribution::normalized(x, states.iter().map(|s| (*s, rng.gen_range(0.05..1.0)))).expect("positive weights")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
