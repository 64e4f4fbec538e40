//! Transition probabilities of one node as functions of its neighbors' marginals.
//!
//! Every label is a ratio of joint masses over sets of neighbor states. Under the
//! independence closure the joint masses factor into per-neighbor masses, so each
//! label reduces to a [`Form`] over [`OmegaPredicate`] filters.

use crate::diagram::{Family, LabelKind, TransitionLabel};
use crate::error::{Error, Result};
use crate::model::{Action, Distribution, NodeId, NodeState, ProtocolParams, Queue, Topology};

/// Filter over one neighbor's state, parameterized by the conditioning node `x`.
/// Variants named `Omega<n>` are the restricted (numerator) sets; the others are
/// the compatibility (denominator) sets they refine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OmegaPredicate {
    /// Neither transmitting nor engaged with `x` or its neighbors, as required
    /// when `x` senses in backoff or idle. `guard` is `N_x ∪ {x}`.
    Omega { x: NodeId, guard: Vec<NodeId> },
    /// Compatible and not about to start a frame.
    Omega1a { x: NodeId, guard: Vec<NodeId> },
    /// About to send an RTS to `x`.
    Omega1b { x: NodeId },
    /// About to send an RTS elsewhere.
    Omega1c { x: NodeId },
    /// Compatible and about to send a CTS.
    Omega1d { x: NodeId, guard: Vec<NodeId> },
    /// Hidden neighbor while `x` receives DATA: compatible, or deferring on the
    /// CTS of `x` with exactly `nav_timer` slots left.
    OmegaData { x: NodeId, guard: Vec<NodeId>, nav_timer: u32 },
    Omega6 { x: NodeId, guard: Vec<NodeId>, nav_timer: u32 },
    /// Hidden neighbor while `x` receives a CTS: compatible, or deferring on the
    /// RTS of `x` with `nav_timer` slots left.
    OmegaCts { x: NodeId, guard: Vec<NodeId>, nav_timer: u32 },
    Omega10 { x: NodeId, guard: Vec<NodeId>, nav_timer: u32 },
    /// Neighbor of `x` at the end of its NAV; the partner additionally is not mid-DATA.
    OmegaNav { x: NodeId, partner: bool },
    Omega7 { x: NodeId, partner: bool },
    /// Transmitting something other than a CTS to `x`.
    OmegaUnknownLead { x: NodeId },
    Omega8Lead { x: NodeId },
    /// Not receiving from, overhearing, or sending a CTS to `x`.
    OmegaUnknownRest { x: NodeId },
    Omega8Rest { x: NodeId },
    /// Neighbor of `x` at the end of a CTS timeout. Non-partners may also be
    /// deferring on the RTS of `x` with `nav_timer` slots left.
    OmegaTimeout { x: NodeId, nav_timer: Option<u32> },
    Omega11 { x: NodeId, nav_timer: Option<u32> },
    /// Last slot of receiving an RTS from `x`.
    Omega9 { x: NodeId },
    /// Last slot of sending an RTS to `peer`.
    OmegaRtsEnd { peer: NodeId },
    /// Last slot of receiving a CTS from `x`.
    Omega5 { x: NodeId },
    /// Last slot of sending a CTS to `peer`.
    OmegaCtsEnd { peer: NodeId },
}

fn compatible(guard: &[NodeId], s: &NodeState) -> bool {
    use Action::*;
    match s.action {
        RtsSend(_) | CtsSend(_) | DataSend(_) | CtsRecv(_) | DataRecv(_) => false,
        RtsRecv(z) | RtsOverhear(z) | CtsOverhear(z) | Nav(z) => guard.binary_search(&z).is_err(),
        Idle | Backoff | Unknown | Wait => true,
    }
}

fn interacting(x: NodeId, s: &NodeState) -> bool {
    use Action::*;
    matches!(
        s.action,
        RtsRecv(z) | RtsOverhear(z) | CtsSend(z) | CtsRecv(z) | CtsOverhear(z) | DataSend(z) | DataRecv(z) | Nav(z)
            if z == x
    )
}

impl OmegaPredicate {
    pub fn holds(&self, s: &NodeState) -> bool {
        use Action::*;
        use OmegaPredicate::*;
        let rts_begin = s.is_backoff_zero();
        let cts_begin = matches!(s.action, RtsRecv(_)) && s.timer == 0;
        match self {
            Omega { guard, .. } => compatible(guard, s),
            Omega1a { guard, .. } => compatible(guard, s) && !s.begins(),
            Omega1b { x } => rts_begin && s.queue.receiver == Some(*x),
            Omega1c { x } => rts_begin && s.queue.receiver != Some(*x),
            Omega1d { guard, .. } => compatible(guard, s) && cts_begin,
            OmegaData { x, guard, nav_timer } | OmegaCts { x, guard, nav_timer } => {
                compatible(guard, s) || (s.action == Nav(*x) && s.timer == *nav_timer)
            }
            Omega6 { x, guard, nav_timer } => {
                OmegaData { x: *x, guard: guard.clone(), nav_timer: *nav_timer }.holds(s) && !rts_begin && !cts_begin
            }
            Omega10 { x, guard, nav_timer } => {
                OmegaCts { x: *x, guard: guard.clone(), nav_timer: *nav_timer }.holds(s) && !rts_begin
            }
            OmegaNav { x, partner } => {
                let mid_data = matches!(s.action, DataSend(_) | DataRecv(_)) && s.timer != 0;
                !interacting(*x, s) && !(*partner && mid_data)
            }
            Omega7 { x, partner } => {
                OmegaNav { x: *x, partner: *partner }.holds(s) && !s.mid_sending() && !s.begins()
            }
            OmegaUnknownLead { x } => s.action.is_transmitting() && s.action != CtsSend(*x),
            Omega8Lead { x } => OmegaUnknownLead { x: *x }.holds(s) && s.timer == 0,
            OmegaUnknownRest { x } => !matches!(
                s.action,
                RtsRecv(z) | RtsOverhear(z) | CtsRecv(z) | CtsOverhear(z) | DataRecv(z) | CtsSend(z) if z == *x
            ),
            Omega8Rest { x } => OmegaUnknownRest { x: *x }.holds(s) && !s.mid_sending() && !rts_begin,
            OmegaTimeout { x, nav_timer } => {
                let base = match s.action {
                    Idle | Backoff | Unknown | RtsSend(_) => true,
                    RtsRecv(z) | RtsOverhear(z) => z != *x,
                    _ => false,
                };
                base || matches!(nav_timer, Some(t) if s.action == Nav(*x) && s.timer == *t)
            }
            Omega11 { x, nav_timer } => {
                OmegaTimeout { x: *x, nav_timer: *nav_timer }.holds(s)
                    && !rts_begin
                    && !matches!(s.action, RtsSend(_))
            }
            Omega9 { x } => s.action == RtsRecv(*x) && s.timer == 0,
            OmegaRtsEnd { peer } => s.action == RtsSend(*peer) && s.timer == 0,
            Omega5 { x } => s.action == CtsRecv(*x) && s.timer == 0,
            OmegaCtsEnd { peer } => s.action == CtsSend(*peer) && s.timer == 0,
        }
    }

    /// The compatibility set a restricted predicate refines.
    pub fn base(&self) -> Option<OmegaPredicate> {
        use OmegaPredicate::*;
        Some(match self {
            Omega1a { x, guard } | Omega1d { x, guard } => Omega { x: *x, guard: guard.clone() },
            Omega1b { x } | Omega1c { x } => Omega { x: *x, guard: Vec::new() },
            Omega6 { x, guard, nav_timer } => OmegaData { x: *x, guard: guard.clone(), nav_timer: *nav_timer },
            Omega10 { x, guard, nav_timer } => OmegaCts { x: *x, guard: guard.clone(), nav_timer: *nav_timer },
            Omega7 { x, partner } => OmegaNav { x: *x, partner: *partner },
            Omega8Lead { x } => OmegaUnknownLead { x: *x },
            Omega8Rest { x } => OmegaUnknownRest { x: *x },
            Omega11 { x, nav_timer } => OmegaTimeout { x: *x, nav_timer: *nav_timer },
            _ => return None,
        })
    }
}

/// Probability mass of the neighbor's states that satisfy the predicate.
pub fn omega_filter(predicate: &OmegaPredicate, neighbor: &Distribution) -> f64 {
    neighbor.iter().filter(|(s, _)| predicate.holds(s)).map(|(_, p)| p).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub node: NodeId,
    pub den: OmegaPredicate,
    pub num: OmegaPredicate,
}

/// Closed form of a label under the independence closure.
#[derive(Debug, Clone, PartialEq)]
pub enum Form {
    /// Product of per-neighbor ratios; the empty product is 1.
    Product(Vec<Factor>),
    /// Ratio of union masses: some neighbor satisfies `lead` while all the others
    /// satisfy `rest`.
    Union { nodes: Vec<NodeId>, lead: (OmegaPredicate, OmegaPredicate), rest: (OmegaPredicate, OmegaPredicate) },
    /// Partner-side mass over own mass.
    Cross { num_node: NodeId, num: OmegaPredicate, den_node: NodeId, den: OmegaPredicate },
    /// One minus the sum of the listed forms.
    Complement(Vec<Form>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Some conditioning mass was zero; the value was set to 0.
    pub zero_denominator: bool,
}

/// Union mass over per-node category masses indexed by `lead as usize | (rest as usize) << 1`.
fn union_mass(per_node: &[[f64; 4]]) -> f64 {
    let r = per_node.len();
    let mut total = 0.0;
    for combo in 0..4usize.pow(r as u32) {
        let mut mass = 1.0;
        let mut cats = Vec::with_capacity(r);
        let mut c = combo;
        for node in per_node {
            let cat = c % 4;
            c /= 4;
            mass *= node[cat];
            cats.push(cat);
        }
        if mass == 0.0 {
            continue;
        }
        if union_holds(&cats) {
            total += mass;
        }
    }
    total
}

fn union_holds(cats: &[usize]) -> bool {
    (0..cats.len()).any(|a| cats[a] & 1 == 1 && cats.iter().enumerate().all(|(b, &c)| b == a || c & 2 == 2))
}

fn category(lead: &OmegaPredicate, rest: &OmegaPredicate, s: &NodeState) -> usize {
    lead.holds(s) as usize | (rest.holds(s) as usize) << 1
}

impl Form {
    pub fn evaluate(&self, dists: &[Distribution]) -> Evaluation {
        match self {
            Form::Product(factors) => {
                let mut value = 1.0;
                for f in factors {
                    let d = &dists[f.node.0];
                    let den = omega_filter(&f.den, d);
                    if den <= 0.0 {
                        return Evaluation { value: 0.0, zero_denominator: true };
                    }
                    value *= omega_filter(&f.num, d) / den;
                }
                Evaluation { value: value.clamp(0.0, 1.0), zero_denominator: false }
            }
            Form::Union { nodes, lead, rest } => {
                let masses = |lead: &OmegaPredicate, rest: &OmegaPredicate| -> Vec<[f64; 4]> {
                    nodes
                        .iter()
                        .map(|z| {
                            let mut m = [0.0; 4];
                            for (s, p) in dists[z.0].iter() {
                                m[category(lead, rest, s)] += p;
                            }
                            m
                        })
                        .collect()
                };
                let den = union_mass(&masses(&lead.0, &rest.0));
                if den <= 0.0 {
                    return Evaluation { value: 0.0, zero_denominator: true };
                }
                let num = union_mass(&masses(&lead.1, &rest.1));
                Evaluation { value: (num / den).clamp(0.0, 1.0), zero_denominator: false }
            }
            Form::Cross { num_node, num, den_node, den } => {
                let d = omega_filter(den, &dists[den_node.0]);
                if d <= 0.0 {
                    return Evaluation { value: 0.0, zero_denominator: true };
                }
                let n = omega_filter(num, &dists[num_node.0]);
                Evaluation { value: (n / d).clamp(0.0, 1.0), zero_denominator: false }
            }
            Form::Complement(parts) => {
                let mut sum = 0.0;
                let mut zero = false;
                for p in parts {
                    let e = p.evaluate(dists);
                    sum += e.value;
                    zero |= e.zero_denominator;
                }
                Evaluation { value: (1.0 - sum).clamp(0.0, 1.0), zero_denominator: zero }
            }
        }
    }
}

/// Neighbor supports used by the structural (possible / certain) checks.
pub type Supports<'a> = &'a [Vec<NodeState>];

fn any_holds(pred: &OmegaPredicate, supp: &[NodeState]) -> bool {
    supp.iter().any(|s| pred.holds(s))
}

/// `den` is nonempty on the support and everything in it also satisfies `num`.
fn coincide(den: &OmegaPredicate, num: &OmegaPredicate, supp: &[NodeState]) -> bool {
    let mut seen = false;
    for s in supp.iter().filter(|s| den.holds(s)) {
        seen = true;
        if !num.holds(s) {
            return false;
        }
    }
    seen
}

/// Distinct `(lead_den, rest_den, lead_num, rest_num)` signatures per node.
fn union_signatures(
    nodes: &[NodeId],
    lead: &(OmegaPredicate, OmegaPredicate),
    rest: &(OmegaPredicate, OmegaPredicate),
    supports: Supports,
) -> Vec<Vec<[bool; 4]>> {
    nodes
        .iter()
        .map(|z| {
            let mut sigs: Vec<[bool; 4]> = supports[z.0]
                .iter()
                .map(|s| [lead.0.holds(s), rest.0.holds(s), lead.1.holds(s), rest.1.holds(s)])
                .collect();
            sigs.sort();
            sigs.dedup();
            sigs
        })
        .collect()
}

/// Calls `visit` with every combination of one signature per node.
fn each_combination(sigs: &[Vec<[bool; 4]>], mut visit: impl FnMut(&[[bool; 4]])) {
    if sigs.iter().any(|s| s.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; sigs.len()];
    let mut combo: Vec<[bool; 4]> = sigs.iter().map(|s| s[0]).collect();
    loop {
        visit(&combo);
        let mut pos = 0;
        loop {
            if pos == sigs.len() {
                return;
            }
            idx[pos] += 1;
            if idx[pos] < sigs[pos].len() {
                combo[pos] = sigs[pos][idx[pos]];
                break;
            }
            idx[pos] = 0;
            combo[pos] = sigs[pos][0];
            pos += 1;
        }
    }
}

fn union_of(combo: &[[bool; 4]], lead: usize, rest: usize) -> bool {
    (0..combo.len()).any(|a| combo[a][lead] && combo.iter().enumerate().all(|(b, c)| b == a || c[rest]))
}

impl Form {
    /// Some joint configuration on the supports satisfies the numerator.
    pub fn possible(&self, supports: Supports) -> bool {
        match self {
            Form::Product(factors) => factors.iter().all(|f| any_holds(&f.num, &supports[f.node.0])),
            Form::Union { nodes, lead, rest } => {
                let mut found = false;
                each_combination(&union_signatures(nodes, lead, rest, supports), |c| found |= union_of(c, 2, 3));
                found
            }
            Form::Cross { num_node, num, .. } => any_holds(num, &supports[num_node.0]),
            Form::Complement(parts) => !parts.iter().any(|p| p.certain(supports)),
        }
    }

    /// Every joint configuration on the supports that satisfies the denominator
    /// also satisfies the numerator, and at least one exists.
    pub fn certain(&self, supports: Supports) -> bool {
        match self {
            Form::Product(factors) => factors.iter().all(|f| coincide(&f.den, &f.num, &supports[f.node.0])),
            Form::Union { nodes, lead, rest } => {
                let (mut any_den, mut all_num) = (false, true);
                each_combination(&union_signatures(nodes, lead, rest, supports), |c| {
                    if union_of(c, 0, 1) {
                        any_den = true;
                        all_num &= union_of(c, 2, 3);
                    }
                });
                any_den && all_num
            }
            Form::Cross { .. } => false,
            Form::Complement(parts) => parts.iter().all(|p| !p.possible(supports)),
        }
    }
}

/// Neighbors of `x` that cannot sense `peer`.
fn hidden(topo: &Topology, x: NodeId, peer: NodeId) -> Vec<NodeId> {
    topo.hidden_set(x, peer)
}

fn guard_of(topo: &Topology, x: NodeId) -> Vec<NodeId> {
    let mut g: Vec<NodeId> = topo.neighbors(x).to_vec();
    g.push(x);
    g.sort();
    g
}

fn sense_factors(topo: &Topology, x: NodeId, special: Option<(NodeId, OmegaPredicate)>) -> Vec<Factor> {
    let guard = guard_of(topo, x);
    topo.neighbors(x)
        .iter()
        .map(|&a| {
            let den = OmegaPredicate::Omega { x, guard: guard.clone() };
            let num = match &special {
                Some((p, pred)) if *p == a => pred.clone(),
                _ => OmegaPredicate::Omega1a { x, guard: guard.clone() },
            };
            Factor { node: a, den, num }
        })
        .collect()
}

fn quiet_hidden(topo: &Topology, x: NodeId, peer: NodeId) -> Form {
    let guard = guard_of(topo, x);
    Form::Product(
        hidden(topo, x, peer)
            .into_iter()
            .map(|a| Factor {
                node: a,
                den: OmegaPredicate::Omega { x, guard: guard.clone() },
                num: OmegaPredicate::Omega1a { x, guard: guard.clone() },
            })
            .collect(),
    )
}

/// Every neighbor of `x` has `x` as its only neighbor.
pub fn leaf_rule(topo: &Topology, x: NodeId) -> bool {
    topo.neighbors(x).iter().all(|&n| topo.neighbors(n) == [x])
}

/// Checks that `label` applies at `cond` for node `x`.
pub fn check_admissible(topo: &Topology, x: NodeId, cond: &NodeState, label: &TransitionLabel) -> Result<()> {
    topo.check(x)?;
    let family = Family::at(cond)
        .ok_or_else(|| Error::Contract(format!("state {cond} of {x} does not branch; no label applies")))?;
    if family != label.kind.family() {
        return Err(Error::Contract(format!("label {label} does not apply to state {cond} of {x}")));
    }
    let expected = match family {
        Family::Sense => {
            return match (label.kind.is_pairwise(), label.partner) {
                (false, None) => Ok(()),
                (true, Some(p)) if topo.are_neighbors(x, p) => Ok(()),
                _ => Err(Error::Contract(format!("label {label} needs a neighbor of {x} as partner"))),
            };
        }
        Family::UnknownEnd => None,
        Family::TimeoutEnd => cond.queue.receiver,
        _ => cond.action.peer(),
    };
    if label.partner != expected {
        return Err(Error::Contract(format!("label {label} has the wrong partner for state {cond} of {x}")));
    }
    Ok(())
}

/// Closed form of `label` for node `x` conditioned on `cond`.
pub fn form_of(
    label: &TransitionLabel,
    x: NodeId,
    cond: &NodeState,
    topo: &Topology,
    params: &ProtocolParams,
) -> Result<Form> {
    use LabelKind::*;
    use OmegaPredicate as P;
    check_admissible(topo, x, cond, label)?;
    let partner = label.partner;
    let peer = || partner.expect("checked: pairwise label");
    let j = cond.timer;
    let complement = |kind: LabelKind| -> Result<Form> {
        let primary = TransitionLabel { kind, partner };
        Ok(Form::Complement(vec![form_of(&primary, x, cond, topo, params)?]))
    };
    Ok(match label.kind {
        SenseQuiet => Form::Product(sense_factors(topo, x, None)),
        SenseRts => Form::Product(sense_factors(topo, x, Some((peer(), P::Omega1b { x })))),
        OverhearRts => Form::Product(sense_factors(topo, x, Some((peer(), P::Omega1c { x })))),
        OverhearCts => {
            Form::Product(sense_factors(topo, x, Some((peer(), P::Omega1d { x, guard: guard_of(topo, x) }))))
        }
        SenseBusy => {
            let mut parts = vec![Form::Product(sense_factors(topo, x, None))];
            for &z in topo.neighbors(x) {
                parts.push(Form::Product(sense_factors(topo, x, Some((z, P::Omega1b { x })))));
                parts.push(Form::Product(sense_factors(topo, x, Some((z, P::Omega1c { x })))));
                parts.push(Form::Product(sense_factors(
                    topo,
                    x,
                    Some((z, P::Omega1d { x, guard: guard_of(topo, x) })),
                )));
            }
            Form::Complement(parts)
        }
        RtsRecvOk | RtsOvhOk | CtsOvhOk => quiet_hidden(topo, x, peer()),
        DataRecvOk | CtsRecvOk if leaf_rule(topo, x) => Form::Product(Vec::new()),
        DataRecvOk => {
            let guard = guard_of(topo, x);
            Form::Product(
                hidden(topo, x, peer())
                    .into_iter()
                    .map(|a| Factor {
                        node: a,
                        den: P::OmegaData { x, guard: guard.clone(), nav_timer: j },
                        num: P::Omega6 { x, guard: guard.clone(), nav_timer: j },
                    })
                    .collect(),
            )
        }
        CtsRecvOk => {
            let guard = guard_of(topo, x);
            let nav_timer = params.t_nav_cts + 1 + j;
            Form::Product(
                hidden(topo, x, peer())
                    .into_iter()
                    .map(|a| Factor {
                        node: a,
                        den: P::OmegaCts { x, guard: guard.clone(), nav_timer },
                        num: P::Omega10 { x, guard: guard.clone(), nav_timer },
                    })
                    .collect(),
            )
        }
        CtsDelivered => {
            Form::Cross { num_node: peer(), num: P::Omega5 { x }, den_node: x, den: P::OmegaCtsEnd { peer: peer() } }
        }
        RtsAnswered => {
            Form::Cross { num_node: peer(), num: P::Omega9 { x }, den_node: x, den: P::OmegaRtsEnd { peer: peer() } }
        }
        NavClear => Form::Product(
            topo.neighbors(x)
                .iter()
                .map(|&a| {
                    let partner = a == peer();
                    Factor { node: a, den: P::OmegaNav { x, partner }, num: P::Omega7 { x, partner } }
                })
                .collect(),
        ),
        UnknownClear => Form::Union {
            nodes: topo.neighbors(x).to_vec(),
            lead: (P::OmegaUnknownLead { x }, P::Omega8Lead { x }),
            rest: (P::OmegaUnknownRest { x }, P::Omega8Rest { x }),
        },
        TimeoutClear => Form::Product(
            topo.neighbors(x)
                .iter()
                .map(|&a| {
                    let nav_timer = if a == peer() { None } else { Some(params.t_nav_cts) };
                    Factor { node: a, den: P::OmegaTimeout { x, nav_timer }, num: P::Omega11 { x, nav_timer } }
                })
                .collect(),
        ),
        RtsRecvLost => complement(RtsRecvOk)?,
        RtsOvhLost => complement(RtsOvhOk)?,
        CtsOvhLost => complement(CtsOvhOk)?,
        CtsUnanswered => complement(CtsDelivered)?,
        DataRecvLost => complement(DataRecvOk)?,
        NavBusy => complement(NavClear)?,
        UnknownBusy => complement(UnknownClear)?,
        RtsFailed => complement(RtsAnswered)?,
        CtsRecvLost => complement(CtsRecvOk)?,
        TimeoutBusy => complement(TimeoutClear)?,
    })
}

fn check_marginals(topo: &Topology, dists: &[Distribution]) -> Result<()> {
    if dists.len() != topo.len() {
        return Err(Error::Mismatch(format!("{} marginals for {} nodes", dists.len(), topo.len())));
    }
    for (i, d) in dists.iter().enumerate() {
        if d.owner() != NodeId(i) {
            return Err(Error::Mismatch(format!("marginal at position {i} belongs to {}", d.owner())));
        }
    }
    Ok(())
}

/// Probability of `label` for node `x` in state `cond` given every node's marginal.
/// A zero conditioning mass yields 0 with `zero_denominator` set.
pub fn evaluate_transition(
    label: &TransitionLabel,
    x: NodeId,
    cond: &NodeState,
    dists: &[Distribution],
    topo: &Topology,
    params: &ProtocolParams,
) -> Result<Evaluation> {
    check_marginals(topo, dists)?;
    let form = form_of(label, x, cond, topo, params)?;
    Ok(form.evaluate(dists))
}

/// Structural status of a label on given supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Status {
    pub possible: bool,
    pub certain: bool,
}

/// No neighbor `β` hidden from `α` relative to `x` can start a frame while `α`
/// would still be listening, for every `α` hidden from `peer` relative to `x`;
/// so every such `α` reliably learns the NAV announced by `x`.
fn nav_protected(topo: &Topology, x: NodeId, peer: NodeId, supports: Supports) -> bool {
    topo.hidden_set(x, peer).into_iter().all(|a| {
        let guard = guard_of(topo, a);
        topo.hidden_set(a, x)
            .into_iter()
            .all(|b| !supports[b.0].iter().any(|s| compatible(&guard, s) && s.begins()))
    })
}

fn is_clique(topo: &Topology, nodes: &[NodeId]) -> bool {
    nodes.iter().enumerate().all(|(i, &a)| nodes[i + 1..].iter().all(|&b| topo.are_neighbors(a, b)))
}

/// Which topology arguments may declare a label certain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Triviality {
    /// The full argument catalog, including the claim that a timeout in a clique
    /// always ends on a quiet channel. Used for the per-example label tables.
    Tables,
    /// As `Tables`, but the timeout argument is applied only to an isolated pair.
    /// In a larger clique a node that sensed the collision resumes its backoff
    /// before the timeout expires and can be transmitting when it does.
    #[default]
    Dynamics,
}

/// Structural certainty of a primary label from topology rules, independent of the
/// product check.
fn certain_by_rule(
    label: &TransitionLabel,
    x: NodeId,
    topo: &Topology,
    params: &ProtocolParams,
    supports: Supports,
    rules: Triviality,
) -> bool {
    use LabelKind::*;
    let Some(p) = label.partner else { return false };
    match label.kind {
        DataRecvOk | CtsRecvOk => leaf_rule(topo, x) || nav_protected(topo, x, p, supports),
        NavClear => topo.neighbors(x).iter().all(|&a| a == p || topo.are_neighbors(a, p)),
        TimeoutClear => match rules {
            Triviality::Tables => {
                let mut group = topo.neighbors(x).to_vec();
                group.push(x);
                is_clique(topo, &group)
            }
            Triviality::Dynamics => topo.neighbors(x) == [p] && topo.neighbors(p) == [x],
        },
        CtsDelivered => {
            let can_finish = supports[p.0].iter().any(|s| s.action == Action::CtsRecv(x) && s.timer == 0);
            can_finish
                && (1..=params.t_cts).all(|j| {
                    let cond = NodeState { stage: 0, counter: 0, action: Action::CtsRecv(x), timer: j, queue: Queue::EMPTY };
                    let ok = TransitionLabel::with(CtsRecvOk, x);
                    status(&ok, p, &cond, topo, params, supports, rules).map(|s| s.certain).unwrap_or(false)
                })
        }
        _ => false,
    }
}

/// Whether `label` can occur, and whether it is the only outcome of its family, at `cond`.
pub fn status(
    label: &TransitionLabel,
    x: NodeId,
    cond: &NodeState,
    topo: &Topology,
    params: &ProtocolParams,
    supports: Supports,
    rules: Triviality,
) -> Result<Status> {
    let kind = label.kind;
    if kind == LabelKind::SenseBusy {
        return Ok(Status { possible: sense_busy_possible(topo, x, supports), certain: false });
    }
    if kind.family() == Family::Sense {
        let form = form_of(label, x, cond, topo, params)?;
        return Ok(Status { possible: form.possible(supports), certain: form.certain(supports) });
    }
    if kind.is_primary() {
        let form = form_of(label, x, cond, topo, params)?;
        let rule = certain_by_rule(label, x, topo, params, supports, rules);
        let certain = rule || form.certain(supports);
        return Ok(Status { possible: certain || form.possible(supports), certain });
    }
    let primary = TransitionLabel { kind: kind.family().members()[0], partner: label.partner };
    let p = status(&primary, x, cond, topo, params, supports, rules)?;
    Ok(Status { possible: !p.certain, certain: !p.possible })
}

/// A busy outcome needs two neighbors starting together, or one starting a frame
/// that none of the decodable cases covers.
fn sense_busy_possible(topo: &Topology, x: NodeId, supports: Supports) -> bool {
    let guard = guard_of(topo, x);
    let mut starters = 0;
    for &a in topo.neighbors(x) {
        let compat: Vec<&NodeState> = supports[a.0].iter().filter(|s| compatible(&guard, s)).collect();
        if compat.is_empty() {
            return false;
        }
        let starting: Vec<&&NodeState> = compat.iter().filter(|s| s.begins()).collect();
        if starting.iter().any(|s| !s.is_backoff_zero() && !(matches!(s.action, Action::RtsRecv(_)) && s.timer == 0)) {
            return true;
        }
        if !starting.is_empty() {
            starters += 1;
        }
    }
    starters >= 2
}
