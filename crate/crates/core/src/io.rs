//! Experiment files, reporting bins, CSV output and engine comparison.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{
    discretize_times, Action, Distribution, NodeId, NodeState, ProtocolParams, Queue, QueueLen, QueueMode, Topology,
};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fixture {
    TwoNode,
    Triangle,
    HiddenTerminal,
}

impl Fixture {
    pub fn topology(self) -> Topology {
        match self {
            Fixture::TwoNode => Topology::two_node(),
            Fixture::Triangle => Topology::triangle(),
            Fixture::HiddenTerminal => Topology::hidden_terminal(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Fixture::TwoNode => "two-node",
            Fixture::Triangle => "triangle",
            Fixture::HiddenTerminal => "hidden-terminal",
        }
    }

    /// Default pass thresholds for binned L1 distances.
    pub fn thresholds(self) -> Thresholds {
        match self {
            Fixture::TwoNode => Thresholds { model_oracle: 0.05, model_sim: 0.10, sim_oracle: 0.02 },
            Fixture::Triangle => Thresholds { model_oracle: 0.08, model_sim: 0.10, sim_oracle: 0.02 },
            Fixture::HiddenTerminal => Thresholds { model_oracle: 0.15, model_sim: 0.15, sim_oracle: 0.02 },
        }
    }
}

impl FromStr for Fixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-node" => Ok(Fixture::TwoNode),
            "triangle" => Ok(Fixture::Triangle),
            "hidden-terminal" => Ok(Fixture::HiddenTerminal),
            other => Err(Error::config("topology.fixture", format!("unknown fixture `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Solve,
    Simulate,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub model_oracle: f64,
    pub model_sim: f64,
    pub sim_oracle: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { model_oracle: 0.10, model_sim: 0.10, sim_oracle: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimOptions {
    pub seed: u64,
    pub slots: u64,
    pub warmup: u64,
    /// Independent runs with seeds `seed, seed + 1, ...`, averaged.
    pub replications: u32,
    pub log: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { seed: 1, slots: 1_000_000, warmup: 10_000, replications: 1, log: false }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputOptions {
    pub dir: Option<PathBuf>,
    pub binned: bool,
    /// Also write the joint chain's edge list when running the oracle.
    pub edges: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    damping: Option<f64>,
    tol: Option<f64>,
    max_iterations: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct Durations {
    rts: f64,
    cts: f64,
    data_ack: f64,
    timeout: f64,
    sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    w: Option<u32>,
    m: Option<u32>,
    t_rts: Option<u32>,
    t_cts: Option<u32>,
    t_data: Option<u32>,
    t_out: Option<u32>,
    t_nav_rts: Option<u32>,
    t_nav_cts: Option<u32>,
    /// Continuous durations in microseconds, discretized before the explicit overrides apply.
    durations: Option<Durations>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawQueue {
    Saturated,
    Sink,
    Finite(u32),
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InlineTopology {
    nodes: usize,
    #[serde(default)]
    edges: Vec<(String, String)>,
    /// Missing nodes are saturated.
    #[serde(default)]
    queues: BTreeMap<String, RawQueue>,
    /// Missing nodes route uniformly over their neighbors.
    #[serde(default)]
    routing: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopology {
    fixture: Option<Fixture>,
    file: Option<PathBuf>,
    #[serde(flatten)]
    inline: Option<InlineTopology>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    name: Option<String>,
    topology: RawTopology,
    #[serde(default)]
    params: RawParams,
    modes: Option<Vec<Mode>>,
    solver: Option<RawSolver>,
    #[serde(default)]
    sim: SimOptions,
    #[serde(default)]
    output: OutputOptions,
    compare: Option<Thresholds>,
}

/// Fully resolved experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    pub topology: Topology,
    pub params: ProtocolParams,
    pub modes: Vec<Mode>,
    pub solver: SolverConfig,
    pub sim: SimOptions,
    pub output: OutputOptions,
    pub thresholds: Thresholds,
}

impl ExperimentSpec {
    pub fn fixture(fixture: Fixture, m: u32) -> Self {
        ExperimentSpec {
            name: fixture.name().to_string(),
            topology: fixture.topology(),
            params: ProtocolParams::reference(m),
            modes: vec![Mode::Solve, Mode::Simulate, Mode::Oracle],
            solver: SolverConfig::default(),
            sim: SimOptions::default(),
            output: OutputOptions::default(),
            thresholds: fixture.thresholds(),
        }
    }
}

/// Where an experiment comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentSource {
    File(PathBuf),
    Fixture(Fixture),
}

fn deserialize<'de, T: Deserialize<'de>>(text: &'de str) -> Result<T> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::Parse(e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config { field: path, reason: e.into_inner().message().trim().to_string() }
    })
}

fn node_key(field: &str, key: &str, n: usize) -> Result<NodeId> {
    let id: NodeId = key.parse().map_err(|_| Error::config(field, format!("`{key}` is not a node name like x1")))?;
    if id.0 >= n {
        return Err(Error::config(field, format!("{id} is beyond the {n} declared nodes")));
    }
    Ok(id)
}

fn inline_topology(t: &InlineTopology, prefix: &str) -> Result<Topology> {
    let n = t.nodes;
    if n == 0 {
        return Err(Error::config(format!("{prefix}nodes"), "at least one node required"));
    }
    let mut adj = vec![Vec::new(); n];
    for (k, (a, b)) in t.edges.iter().enumerate() {
        let field = format!("{prefix}edges[{k}]");
        let (a, b) = (node_key(&field, a, n)?, node_key(&field, b, n)?);
        adj[a.0].push(b);
        adj[b.0].push(a);
    }
    let mut queues = vec![QueueMode::Saturated; n];
    for (key, q) in &t.queues {
        let x = node_key(&format!("{prefix}queues.{key}"), key, n)?;
        queues[x.0] = match q {
            RawQueue::Saturated => QueueMode::Saturated,
            RawQueue::Sink => QueueMode::Sink,
            RawQueue::Finite(c) => QueueMode::Finite(*c),
        };
    }
    let routing = if t.routing.is_empty() {
        None
    } else {
        let mut r: Vec<Vec<(NodeId, f64)>> = (0..n)
            .map(|x| match queues[x] {
                QueueMode::Sink => Vec::new(),
                _ => adj[x].iter().map(|&z| (z, 1.0 / adj[x].len() as f64)).collect(),
            })
            .collect();
        for (key, targets) in &t.routing {
            let x = node_key(&format!("{prefix}routing.{key}"), key, n)?;
            r[x.0] = targets
                .iter()
                .map(|(y, p)| Ok((node_key(&format!("{prefix}routing.{key}.{y}"), y, n)?, *p)))
                .collect::<Result<_>>()?;
        }
        Some(r)
    };
    Topology::new(adj, queues, routing)
}

fn resolve_params(raw: &RawParams) -> Result<ProtocolParams> {
    let mut p = ProtocolParams::reference(0);
    if let Some(d) = raw.durations {
        let times = discretize_times(d.rts, d.cts, d.data_ack, d.timeout, d.sigma)
            .map_err(|e| match e {
                Error::Config { field, reason } => Error::Config { field: format!("params.{field}"), reason },
                other => other,
            })?;
        p = ProtocolParams { t_rts: times.rts, t_cts: times.cts, t_data: times.data, t_out: times.out, t_nav_rts: times.nav_rts, t_nav_cts: times.nav_cts, sigma: d.sigma, ..p };
    }
    let overrides = [
        (&mut p.w, raw.w),
        (&mut p.m, raw.m),
        (&mut p.t_rts, raw.t_rts),
        (&mut p.t_cts, raw.t_cts),
        (&mut p.t_data, raw.t_data),
        (&mut p.t_out, raw.t_out),
        (&mut p.t_nav_rts, raw.t_nav_rts),
        (&mut p.t_nav_cts, raw.t_nav_cts),
    ];
    for (slot, v) in overrides {
        if let Some(v) = v {
            *slot = v;
        }
    }
    p.validate()?;
    Ok(p)
}

/// Parses an experiment file's text; relative topology files resolve against `base`.
pub fn parse_experiment(text: &str, base: &Path) -> Result<ExperimentSpec> {
    let raw: RawExperiment = deserialize(text)?;
    let t = &raw.topology;
    let (name, topology, fixture) = match (&t.fixture, &t.file, &t.inline) {
        (Some(f), None, None) => (f.name().to_string(), f.topology(), Some(*f)),
        (None, Some(path), None) => {
            let full = base.join(path);
            let text = std::fs::read_to_string(&full).map_err(Error::file(&full))?;
            let inline: InlineTopology = deserialize(&text)?;
            (full.display().to_string(), inline_topology(&inline, "")?, None)
        }
        (None, None, Some(inline)) => ("inline".to_string(), inline_topology(inline, "topology.")?, None),
        _ => return Err(Error::config("topology", "give exactly one of `fixture`, `file` or inline `nodes`")),
    };
    let params = resolve_params(&raw.params)?;
    let mut solver = SolverConfig::default();
    if let Some(s) = raw.solver {
        solver.damping = s.damping.unwrap_or(solver.damping);
        solver.tol = s.tol.unwrap_or(solver.tol);
        solver.max_iterations = s.max_iterations.unwrap_or(solver.max_iterations);
    }
    if !(0.0..1.0).contains(&solver.damping) {
        return Err(Error::config("solver.damping", "must lie in [0, 1)"));
    }
    if raw.sim.slots == 0 {
        return Err(Error::config("sim.slots", "must be positive"));
    }
    if raw.sim.replications == 0 {
        return Err(Error::config("sim.replications", "must be positive"));
    }
    let default_thresholds = fixture.map_or_else(Thresholds::default, Fixture::thresholds);
    Ok(ExperimentSpec {
        name: raw.name.unwrap_or(name),
        topology,
        params,
        modes: raw.modes.unwrap_or_else(|| vec![Mode::Solve, Mode::Simulate, Mode::Oracle]),
        solver,
        sim: raw.sim,
        output: raw.output,
        thresholds: raw.compare.unwrap_or(default_thresholds),
    })
}

pub fn load_experiment(source: &ExperimentSource) -> Result<ExperimentSpec> {
    match source {
        ExperimentSource::Fixture(f) => Ok(ExperimentSpec::fixture(*f, 0)),
        ExperimentSource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(Error::file(path))?;
            parse_experiment(&text, path.parent().unwrap_or(Path::new(".")))
        }
    }
}

/// Aggregation used in reports. Transmit-entry states `(i, 0)` are grouped with
/// the sending chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReportBin {
    Backoff { stage: u32, counter: u32 },
    Snt,
    Rcv,
    Ovh,
    Wait,
    Nav,
    Unknown,
    Idle,
}

impl ReportBin {
    pub fn of(s: &NodeState) -> ReportBin {
        use Action::*;
        match s.action {
            Backoff if s.counter == 0 => ReportBin::Snt,
            Backoff => ReportBin::Backoff { stage: s.stage, counter: s.counter },
            RtsSend(_) | CtsRecv(_) | DataSend(_) => ReportBin::Snt,
            RtsRecv(_) | CtsSend(_) | DataRecv(_) => ReportBin::Rcv,
            RtsOverhear(_) | CtsOverhear(_) => ReportBin::Ovh,
            Wait => ReportBin::Wait,
            Nav(_) => ReportBin::Nav,
            Unknown => ReportBin::Unknown,
            Idle => ReportBin::Idle,
        }
    }
}

impl fmt::Display for ReportBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportBin::Backoff { stage, counter } => write!(f, "({stage};{counter})"),
            ReportBin::Snt => f.write_str("Snt"),
            ReportBin::Rcv => f.write_str("Rcv"),
            ReportBin::Ovh => f.write_str("Ovh"),
            ReportBin::Wait => f.write_str("Wait"),
            ReportBin::Nav => f.write_str("NAV"),
            ReportBin::Unknown => f.write_str("U"),
            ReportBin::Idle => f.write_str("Idle"),
        }
    }
}

impl FromStr for ReportBin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Snt" => ReportBin::Snt,
            "Rcv" => ReportBin::Rcv,
            "Ovh" => ReportBin::Ovh,
            "Wait" => ReportBin::Wait,
            "NAV" => ReportBin::Nav,
            "U" => ReportBin::Unknown,
            "Idle" => ReportBin::Idle,
            other => {
                let inner = other
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|r| r.split_once(';'))
                    .ok_or_else(|| Error::Parse(format!("unknown bin `{other}`")))?;
                let num = |v: &str| v.parse::<u32>().map_err(|_| Error::Parse(format!("unknown bin `{other}`")));
                ReportBin::Backoff { stage: num(inner.0)?, counter: num(inner.1)? }
            }
        })
    }
}

pub type Binned = BTreeMap<ReportBin, f64>;

pub fn bin(d: &Distribution) -> Binned {
    let mut out = Binned::new();
    for (s, p) in d.iter() {
        *out.entry(ReportBin::of(s)).or_insert(0.0) += p;
    }
    out
}

/// L1 distance between two binned distributions.
pub fn binned_l1(a: &Binned, b: &Binned) -> f64 {
    let keys: std::collections::BTreeSet<&ReportBin> = a.keys().chain(b.keys()).collect();
    keys.into_iter().map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs()).sum()
}

/// Binned L1 of each node.
pub fn node_l1(a: &[Distribution], b: &[Distribution]) -> Result<Vec<f64>> {
    check_same_nodes(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| binned_l1(&bin(x), &bin(y))).collect())
}

fn check_same_nodes(a: &[Distribution], b: &[Distribution]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Mismatch(format!("topology.nodes: {} versus {}", a.len(), b.len())));
    }
    for (x, y) in a.iter().zip(b) {
        if x.owner() != y.owner() {
            return Err(Error::Mismatch(format!("node order: {} versus {}", x.owner(), y.owner())));
        }
    }
    Ok(())
}

const RAW_HEADER: [&str; 8] = ["node", "stage", "counter", "action", "timer", "receiver", "layer", "probability"];
const BINNED_HEADER: [&str; 3] = ["node", "bin", "probability"];

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("ascii output")
}

/// Raw CSV: one row per state with nonzero mass, probabilities to 12 significant digits.
pub fn emit_distribution(dists: &[Distribution]) -> String {
    let mut w = csv_writer();
    w.write_record(RAW_HEADER).expect("in-memory writer");
    for d in dists {
        for (s, p) in d.iter().filter(|(_, p)| *p > 0.0) {
            let action = match s.action.peer() {
                Some(z) => format!("{}[{z}]", s.action.code()),
                None => s.action.code().to_string(),
            };
            let receiver = s.queue.receiver.map_or_else(|| "-".to_string(), |y| y.to_string());
            let layer = match s.queue.len {
                QueueLen::Saturated => "inf".to_string(),
                QueueLen::Count(l) => l.to_string(),
            };
            w.write_record([
                d.owner().to_string(),
                s.stage.to_string(),
                s.counter.to_string(),
                action,
                s.timer.to_string(),
                receiver,
                layer,
                format!("{p:.11e}"),
            ])
            .expect("in-memory writer");
        }
    }
    finish(w)
}

/// Binned CSV, probabilities to 6 significant digits.
pub fn emit_binned(dists: &[Distribution]) -> String {
    let mut w = csv_writer();
    w.write_record(BINNED_HEADER).expect("in-memory writer");
    for d in dists {
        for (b, p) in bin(d) {
            w.write_record([d.owner().to_string(), b.to_string(), format!("{p:.5e}")]).expect("in-memory writer");
        }
    }
    finish(w)
}

fn read_rows(text: &str, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let found = r.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse(format!("expected header {}", header.join(","))));
    }
    r.records().map(|rec| rec.map_err(|e| Error::Parse(e.to_string()))).collect()
}

fn parse_num<T: FromStr>(field: &str, what: &str) -> Result<T> {
    field.parse().map_err(|_| Error::Parse(format!("bad {what} `{field}`")))
}

/// Inverse of [`emit_distribution`].
pub fn parse_distribution(text: &str) -> Result<Vec<Distribution>> {
    let mut per_node: BTreeMap<NodeId, Vec<(NodeState, f64)>> = BTreeMap::new();
    for rec in read_rows(text, &RAW_HEADER)? {
        let node: NodeId = rec[0].parse()?;
        let (code, peer) = match rec[3].split_once('[') {
            Some((c, rest)) => (c, Some(rest.trim_end_matches(']').parse::<NodeId>()?)),
            None => (&rec[3], None),
        };
        let receiver = match &rec[5] {
            "-" => None,
            y => Some(y.parse::<NodeId>()?),
        };
        let len = match &rec[6] {
            "inf" => QueueLen::Saturated,
            l => QueueLen::Count(parse_num(l, "layer")?),
        };
        let s = NodeState {
            stage: parse_num(&rec[1], "stage")?,
            counter: parse_num(&rec[2], "counter")?,
            action: Action::from_code(code, peer)?,
            timer: parse_num(&rec[4], "timer")?,
            queue: Queue { receiver, len },
        };
        per_node.entry(node).or_default().push((s, parse_num(&rec[7], "probability")?));
    }
    per_node
        .into_iter()
        .enumerate()
        .map(|(k, (node, entries))| {
            if node.0 != k {
                return Err(Error::Parse(format!("node {} missing", NodeId(k))));
            }
            Distribution::new(node, entries)
        })
        .collect()
}

/// Inverse of [`emit_binned`].
pub fn parse_binned(text: &str) -> Result<Vec<Binned>> {
    let mut out: Vec<Binned> = Vec::new();
    for rec in read_rows(text, &BINNED_HEADER)? {
        let node: NodeId = rec[0].parse()?;
        if node.0 >= out.len() {
            out.resize(node.0 + 1, Binned::new());
        }
        out[node.0].insert(rec[1].parse()?, parse_num(&rec[2], "probability")?);
    }
    Ok(out)
}

/// Distances between two engines.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDistance {
    pub pair: (&'static str, &'static str),
    pub l1: Vec<f64>,
    pub max_bin_diff: f64,
}

impl PairDistance {
    pub fn max_l1(&self) -> f64 {
        self.l1.iter().copied().fold(0.0, f64::max)
    }
}

/// Side-by-side binned table of up to three engines.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub engines: Vec<(&'static str, Vec<Binned>)>,
    pub distances: Vec<PairDistance>,
}

pub fn compare(model: &[Distribution], oracle: Option<&[Distribution]>, sim: Option<&[Distribution]>) -> Result<Comparison> {
    let mut engines: Vec<(&'static str, &[Distribution])> = vec![("model", model)];
    engines.extend(oracle.map(|o| ("oracle", o)));
    engines.extend(sim.map(|s| ("sim", s)));
    for (_, e) in &engines[1..] {
        check_same_nodes(model, e)?;
    }
    let binned: Vec<(&'static str, Vec<Binned>)> =
        engines.iter().map(|(name, d)| (*name, d.iter().map(bin).collect())).collect();
    let mut distances = Vec::new();
    for i in 0..binned.len() {
        for j in i + 1..binned.len() {
            let (a, b) = (&binned[i].1, &binned[j].1);
            let l1 = a.iter().zip(b).map(|(x, y)| binned_l1(x, y)).collect();
            let max_bin_diff = a
                .iter()
                .zip(b)
                .flat_map(|(x, y)| {
                    x.keys().chain(y.keys()).map(move |k| (x.get(k).unwrap_or(&0.0) - y.get(k).unwrap_or(&0.0)).abs())
                })
                .fold(0.0, f64::max);
            distances.push(PairDistance { pair: (binned[i].0, binned[j].0), l1, max_bin_diff });
        }
    }
    Ok(Comparison { engines: binned, distances })
}

impl Comparison {
    pub fn distance(&self, a: &str, b: &str) -> Option<&PairDistance> {
        self.distances.iter().find(|d| (d.pair.0 == a && d.pair.1 == b) || (d.pair.0 == b && d.pair.1 == a))
    }

    /// Threshold breaches, one message each.
    pub fn violations(&self, t: &Thresholds) -> Vec<String> {
        let limits = [("model", "oracle", t.model_oracle), ("model", "sim", t.model_sim), ("oracle", "sim", t.sim_oracle)];
        limits
            .iter()
            .filter_map(|&(a, b, limit)| {
                let d = self.distance(a, b)?;
                (d.max_l1() > limit).then(|| format!("{a}-{b} binned L1 {:.6} exceeds {limit}", d.max_l1()))
            })
            .collect()
    }

    /// CSV table of every bin followed by `#`-prefixed summary lines.
    pub fn render(&self) -> String {
        let mut w = csv_writer();
        let mut header: Vec<String> = vec!["node".into(), "bin".into()];
        header.extend(self.engines.iter().map(|e| e.0.to_string()));
        header.extend(self.distances.iter().map(|d| format!("|{}-{}|", d.pair.0, d.pair.1)));
        w.write_record(&header).expect("in-memory writer");
        let nodes = self.engines[0].1.len();
        for x in 0..nodes {
            let bins: std::collections::BTreeSet<ReportBin> =
                self.engines.iter().flat_map(|e| e.1[x].keys().copied()).collect();
            for b in bins {
                let value = |name: &str| {
                    self.engines.iter().find(|e| e.0 == name).map_or(0.0, |e| *e.1[x].get(&b).unwrap_or(&0.0))
                };
                let mut row = vec![NodeId(x).to_string(), b.to_string()];
                row.extend(self.engines.iter().map(|e| format!("{:.5e}", value(e.0))));
                row.extend(self.distances.iter().map(|d| format!("{:.5e}", (value(d.pair.0) - value(d.pair.1)).abs())));
                w.write_record(&row).expect("in-memory writer");
            }
        }
        let mut out = finish(w);
        for d in &self.distances {
            let per_node: Vec<String> = d.l1.iter().map(|v| format!("{v:.6}")).collect();
            out.push_str(&format!(
                "# {}-{} l1 per node: {}; max l1 {:.6}; max bin diff {:.6}\n",
                d.pair.0,
                d.pair.1,
                per_node.join(" "),
                d.max_l1(),
                d.max_bin_diff
            ));
        }
        out
    }
}
