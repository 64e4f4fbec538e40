//! Slot-synchronous discrete-event simulation of the full network.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagram::{diagram_edges, initial_states, LabelKind};
use crate::error::{Error, Result};
use crate::model::{Action, Distribution, NodeId, NodeState, ProtocolParams, Topology};
use crate::step::{check_consistency, Next, Stepper};

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub topology: Topology,
    pub params: ProtocolParams,
    pub seed: u64,
    /// Slots tallied into the occupancy, after the warmup.
    pub n_slots: u64,
    pub warmup_slots: u64,
    /// Record every action change.
    pub log: bool,
    /// Check each slot against the lock-step invariants and the single-node
    /// diagram; a violation aborts the run.
    pub audit: bool,
}

impl SimConfig {
    pub fn new(topology: Topology, params: ProtocolParams, seed: u64, n_slots: u64) -> Self {
        SimConfig { topology, params, seed, n_slots, warmup_slots: 10_000, log: false, audit: cfg!(debug_assertions) }
    }
}

/// Per-node event counts over the tallied slots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    /// RTS frames completed; each is either answered or failed.
    pub rts_sent: u64,
    pub rts_answered: u64,
    pub rts_failed: u64,
    /// RTS frames addressed to this node that were corrupted mid-reception.
    pub rts_corrupted: u64,
    pub data_started: u64,
    pub data_received: u64,
    pub data_corrupted: u64,
    /// Packets discarded after exhausting the retry limit.
    pub drops: u64,
}

/// One action change: the node entered `action` with `timer` slots to go.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub slot: u64,
    pub node: NodeId,
    pub action: Action,
    pub timer: u32,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let partner = self.action.peer().map_or_else(|| "-".to_string(), |p| p.to_string());
        write!(f, "{},{},{},{},{}", self.slot, self.node, self.action.code(), self.timer, partner)
    }
}

#[derive(Debug, Clone)]
pub struct SimResult {
    /// Empirical marginal of each node over the tallied slots.
    pub occupancy: Vec<Distribution>,
    pub counters: Vec<Counters>,
    pub log: Option<Vec<Event>>,
}

fn draw(rng: &mut ChaCha8Rng, options: &[(NodeState, f64)]) -> NodeState {
    let total: f64 = options.iter().map(|o| o.1).sum();
    let mut u = rng.gen::<f64>() * total;
    for (s, w) in options {
        if u < *w {
            return *s;
        }
        u -= w;
    }
    options.last().expect("nonempty draw").0
}

fn tally(c: &mut Counters, s: &NodeState, label: Option<LabelKind>, next: &NodeState, m: u32) {
    use LabelKind::*;
    match label {
        Some(RtsAnswered) => {
            c.rts_sent += 1;
            c.rts_answered += 1;
        }
        Some(RtsFailed) => {
            c.rts_sent += 1;
            c.rts_failed += 1;
        }
        Some(RtsRecvLost) => c.rts_corrupted += 1,
        Some(DataRecvLost) => c.data_corrupted += 1,
        Some(TimeoutClear) if s.stage == m => c.drops += 1,
        _ => {}
    }
    if matches!(next.action, Action::DataSend(_)) && !matches!(s.action, Action::DataSend(_)) {
        c.data_started += 1;
    }
    if matches!(s.action, Action::DataRecv(_)) && s.timer == 0 {
        c.data_received += 1;
    }
}

pub fn run(config: &SimConfig) -> Result<SimResult> {
    let SimConfig { topology: topo, params, .. } = config;
    params.validate()?;
    if config.n_slots == 0 {
        return Err(Error::config("sim.slots", "must be positive"));
    }
    let n = topo.len();
    let stepper = Stepper::new(topo, params);
    let mut rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|x| {
            let mut r = ChaCha8Rng::seed_from_u64(config.seed);
            r.set_stream(x as u64);
            r
        })
        .collect();
    let mut world: Vec<NodeState> = topo.nodes().map(|x| draw(&mut rngs[x.0], &initial_states(topo, params, x))).collect();
    let mut occupancy: Vec<HashMap<NodeState, u64>> = vec![HashMap::new(); n];
    let mut counters = vec![Counters::default(); n];
    let mut log = config.log.then(Vec::new);
    let total = config.warmup_slots + config.n_slots;
    for slot in 0..total {
        let tallied = slot >= config.warmup_slots;
        if tallied {
            for (x, s) in world.iter().enumerate() {
                *occupancy[x].entry(*s).or_insert(0) += 1;
            }
        }
        let mut next = Vec::with_capacity(n);
        for x in topo.nodes() {
            let r = stepper.resolve(&world, x);
            let t = match &r.next {
                Next::Fixed(t) => *t,
                Next::Redraw(options) => draw(&mut rngs[x.0], options),
            };
            let s = world[x.0];
            if config.audit {
                let legal = diagram_edges(topo, params, x, &s).iter().any(|e| e.target == t && e.label == r.label);
                if !legal {
                    let label = r.label.map_or_else(|| "none".to_string(), |l| l.to_string());
                    return Err(Error::Contract(format!(
                        "slot {slot}: {x} moved {s} -> {t} under {label}, which the diagram does not allow"
                    )));
                }
            }
            if tallied {
                tally(&mut counters[x.0], &s, r.label.map(|l| l.kind), &t, params.m);
            }
            if let Some(log) = log.as_mut() {
                if t.action != s.action || t.timer > s.timer {
                    log.push(Event { slot: slot + 1, node: x, action: t.action, timer: t.timer });
                }
            }
            next.push(t);
        }
        world = next;
        if config.audit {
            if let Some(msg) = check_consistency(topo, &world) {
                return Err(Error::Contract(format!("slot {}: {msg}", slot + 1)));
            }
        }
    }
    let slots = config.n_slots as f64;
    let occupancy = occupancy
        .into_iter()
        .enumerate()
        .map(|(x, counts)| {
            let mut entries: Vec<(NodeState, f64)> = counts.into_iter().map(|(s, c)| (s, c as f64 / slots)).collect();
            entries.sort_by_key(|a| a.0);
            Distribution::new(NodeId(x), entries)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimResult { occupancy, counters, log })
}

/// Independent runs with seeds `seed, seed + 1, ...`, one thread each.
/// Results come back in seed order regardless of scheduling.
pub fn replicate(config: &SimConfig, replications: u32) -> Result<Vec<SimResult>> {
    if replications == 0 {
        return Err(Error::config("sim.replications", "must be positive"));
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..replications)
            .map(|r| {
                let cfg = SimConfig { seed: config.seed.wrapping_add(u64::from(r)), ..config.clone() };
                scope.spawn(move || run(&cfg))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    })
}

/// Mean occupancy over runs of the same network.
pub fn average(results: &[SimResult]) -> Result<Vec<Distribution>> {
    let Some(first) = results.first() else {
        return Err(Error::Mismatch("no simulation runs to average".into()));
    };
    let k = results.len() as f64;
    (0..first.occupancy.len())
        .map(|x| {
            let mut acc: HashMap<NodeState, f64> = HashMap::new();
            for r in results {
                for (s, p) in r.occupancy[x].iter() {
                    *acc.entry(*s).or_insert(0.0) += p / k;
                }
            }
            let mut entries: Vec<(NodeState, f64)> = acc.into_iter().collect();
            entries.sort_by_key(|a| a.0);
            Distribution::normalized(NodeId(x), entries)
        })
        .collect()
}
