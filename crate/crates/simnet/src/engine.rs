//! Deterministic discrete-event engine.
//!
//! Virtual time is integer microseconds. Links are store-and-forward with
//! FIFO serialization per direction: a packet departs when the link frees
//! up, occupies it for `size/bandwidth`, and arrives one latency later.
//! Identical inputs and seed give byte-identical run logs; every source of
//! randomness derives from the run seed, and all keyed state iterates in
//! deterministic order.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, BTreeMap, VecDeque};

use andana_core::forwarder::{Action, Forwarder, ForwarderConfig, IfaceId, APP_IFACE};
use andana_core::names::Name;
use andana_core::packets::{Data, Interest};
use andana_core::router::{ArConfig, ArState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::adversary::{Adversary, AdversaryState};
use crate::apps::{
    AppOutput, ArApp, ConsumerApp, CostModel, DirectoryApp, FetchReport, FetchRequest, ProducerApp,
};
use crate::topology::{ConfigError, Role, Topology};
use crate::trace::{render_name, TraceLog};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("compromise scheduled too soon (minimum delay {min_us} us)")]
    TooSoon { min_us: u64 },
    #[error("packet not observed by the adversary")]
    NotObserved,
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("{0}")]
    Config(String),
}

impl From<ConfigError> for SimError {
    fn from(e: ConfigError) -> Self {
        SimError::Config(e.to_string())
    }
}

pub enum AppKind {
    None,
    Consumer(ConsumerApp),
    Ar(ArApp),
    Producer(ProducerApp),
    Directory(DirectoryApp),
}

struct NodeRt {
    id: String,
    forwarder: Forwarder,
    app: AppKind,
    rng: ChaCha20Rng,
}

struct LinkRt {
    ends: [(usize, u32); 2],
    latency_us: u64,
    bw_bps: u64,
    next_free_us: [u64; 2],
}

#[derive(Debug)]
enum Event {
    Deliver { node: usize, iface: u32, bytes: Vec<u8> },
    Fetch { node: usize, req: FetchRequest },
    SendPacket { node: usize, bytes: Vec<u8> },
    RotateKey { node: usize },
    Compromise { node: String },
    Replay { node: usize, iface: u32, prefix: Name },
}

struct Scheduled {
    at: u64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub trace: bool,
    pub fetch_window: usize,
    /// Override for the minimum compromise scheduling delay; derived from
    /// the topology diameter when absent.
    pub min_compromise_delay_us: Option<u64>,
    pub max_events: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            trace: true,
            fetch_window: 4,
            min_compromise_delay_us: None,
            max_events: 50_000_000,
        }
    }
}

/// Everything a finished run reports.
#[derive(Debug)]
pub struct RunOutput {
    pub trace: TraceLog,
    pub fetches: Vec<FetchReport>,
    pub wire_bytes: u64,
    pub workload_errors: Vec<String>,
    pub final_time_us: u64,
}

pub struct Sim {
    clock_us: u64,
    seq: u64,
    queue: BinaryHeap<Reverse<Scheduled>>,
    nodes: Vec<NodeRt>,
    node_idx: BTreeMap<String, usize>,
    links: Vec<LinkRt>,
    iface_map: BTreeMap<(usize, u32), (usize, usize)>,
    trace: TraceLog,
    adversary: AdversaryState,
    cost: CostModel,
    opts: SimOptions,
    min_compromise_delay_us: u64,
    wire_bytes: u64,
    workload_errors: Vec<String>,
    events_processed: u64,
}

pub struct SimBuilder {
    topology: Topology,
    adversary: Adversary,
    seed: u64,
    cost: CostModel,
    opts: SimOptions,
    publishes: Vec<(String, Name, u64)>,
    exit_deny: BTreeMap<String, Vec<Name>>,
}

impl SimBuilder {
    pub fn new(topology: Topology, seed: u64) -> Self {
        SimBuilder {
            topology,
            adversary: Adversary::none(),
            seed,
            cost: CostModel::default(),
            opts: SimOptions::default(),
            publishes: Vec::new(),
            exit_deny: BTreeMap::new(),
        }
    }

    pub fn adversary(mut self, adversary: Adversary) -> Self {
        self.adversary = adversary;
        self
    }

    pub fn cost_model(mut self, cost: CostModel) -> Self {
        self.cost = cost;
        self
    }

    pub fn options(mut self, opts: SimOptions) -> Self {
        self.opts = opts;
        self
    }

    /// Publishes `total_bytes` of content under `base` at a producer node,
    /// as 4 KB segments named `base/0 .. base/k`.
    pub fn publish(mut self, producer: &str, base: Name, total_bytes: u64) -> Self {
        self.publishes.push((producer.to_string(), base, total_bytes));
        self
    }

    pub fn exit_deny(mut self, ar: &str, prefix: Name) -> Self {
        self.exit_deny.entry(ar.to_string()).or_default().push(prefix);
        self
    }

    pub fn build(self) -> Result<Sim, SimError> {
        self.topology.validate()?;
        let adversary = self.adversary.normalize(&self.topology);

        let mut root_rng = ChaCha20Rng::seed_from_u64(self.seed);
        let mut nodes = Vec::new();
        let mut node_idx = BTreeMap::new();

        // Pass 1: per-node RNGs and key material, in topology order.
        let mut node_rngs: Vec<ChaCha20Rng> = Vec::new();
        for _ in &self.topology.nodes {
            node_rngs.push(ChaCha20Rng::seed_from_u64(root_rng.gen()));
        }

        // Link rate per node, for the routers' cache reservations.
        let mut max_bw: BTreeMap<String, u64> = BTreeMap::new();
        for l in &self.topology.links {
            for id in [&l.a, &l.b] {
                let e = max_bw.entry(id.clone()).or_default();
                *e = (*e).max(l.bw_bps);
            }
        }

        let mut ar_states: BTreeMap<String, ArState> = BTreeMap::new();
        let mut producer_apps: BTreeMap<String, ProducerApp> = BTreeMap::new();
        for (spec, rng) in self.topology.nodes.iter().zip(node_rngs.iter_mut()) {
            match spec.role {
                Role::Ar => {
                    let ns = self
                        .topology
                        .namespace_of(spec)
                        .ok_or_else(|| SimError::Config(format!("no namespace for {}", spec.id)))?;
                    let mut config = ArConfig::new(ns, self.topology.organization_of(spec));
                    config.rate_bytes_per_s = *max_bw.get(&spec.id).unwrap_or(&1_000_000);
                    config.cache_reservation_bytes = config.required_reservation().max(8 << 20);
                    if let Some(deny) = self.exit_deny.get(&spec.id) {
                        config.exit_deny_prefixes = deny.clone();
                    }
                    let state = ArState::new(config, 0, rng)
                        .map_err(|e| SimError::Config(e.to_string()))?;
                    ar_states.insert(spec.id.clone(), state);
                }
                Role::Producer => {
                    let ns = self.topology.namespace_of(spec).unwrap();
                    let signing = andana_core::crypto::KeyPair::generate(
                        andana_core::crypto::KeyRole::Signing,
                        andana_core::crypto::KeyStrength::Rsa1024,
                        rng,
                    );
                    let mut app = ProducerApp::new(ns, signing, self.seed);
                    for (producer, base, bytes) in &self.publishes {
                        if producer == &spec.id {
                            app.publish(base.clone(), *bytes);
                        }
                    }
                    producer_apps.insert(spec.id.clone(), app);
                }
                Role::Directory => {
                    // Signing key generated in pass 2 once descriptors exist.
                }
                _ => {}
            }
        }

        // Shared views: router listing and producer trust anchors.
        let listing: Vec<_> = self
            .topology
            .nodes
            .iter()
            .filter(|s| s.role == Role::Ar)
            .map(|s| {
                let bw = *max_bw.get(&s.id).unwrap_or(&0);
                ar_states[&s.id].descriptor(0, bw, 0.0)
            })
            .collect();
        let trust: BTreeMap<[u8; 32], andana_core::crypto::PublicKey> = producer_apps
            .values()
            .map(|p| {
                (
                    andana_core::crypto::fingerprint(p.public_key()),
                    p.public_key().clone(),
                )
            })
            .collect();
        let directory_ns = self
            .topology
            .nodes
            .iter()
            .find(|s| s.role == Role::Directory)
            .and_then(|s| self.topology.namespace_of(s));

        // Pass 2: assemble runtime nodes.
        for (i, (spec, mut rng)) in self
            .topology
            .nodes
            .iter()
            .zip(node_rngs)
            .enumerate()
        {
            let mut fconfig = ForwarderConfig::default();
            if let Some(state) = ar_states.get(&spec.id) {
                fconfig.cs_capacity_bytes = state.config().cache_reservation_bytes as usize;
            }
            let mut forwarder = Forwarder::new(fconfig);
            for rule in self.topology.fibs.get(&spec.id).into_iter().flatten() {
                forwarder.add_route(Name::parse(&rule.prefix).unwrap(), IfaceId(rule.iface));
            }
            if let Some(ns) = self.topology.namespace_of(spec) {
                forwarder.add_route(ns, APP_IFACE);
            }

            let app = match spec.role {
                Role::Ar => AppKind::Ar(ArApp::new(ar_states.remove(&spec.id).unwrap())),
                Role::Producer => AppKind::Producer(producer_apps.remove(&spec.id).unwrap()),
                Role::Directory => {
                    let ns = self.topology.namespace_of(spec).unwrap();
                    let signing = andana_core::crypto::KeyPair::generate(
                        andana_core::crypto::KeyRole::Signing,
                        andana_core::crypto::KeyStrength::Rsa1024,
                        &mut rng,
                    );
                    let mut app = DirectoryApp::new(ns, signing);
                    for desc in &listing {
                        app.directory
                            .register(desc.clone())
                            .map_err(|e| SimError::Config(e.to_string()))?;
                    }
                    AppKind::Directory(app)
                }
                Role::Consumer => AppKind::Consumer(ConsumerApp::new(
                    spec.id.clone(),
                    listing.clone(),
                    directory_ns.clone(),
                    trust.clone(),
                )),
                Role::Router => AppKind::None,
            };

            node_idx.insert(spec.id.clone(), i);
            nodes.push(NodeRt {
                id: spec.id.clone(),

                forwarder,
                app,
                rng,
            });
        }

        let mut links = Vec::new();
        let mut iface_map = BTreeMap::new();
        for l in &self.topology.links {
            let a = node_idx[&l.a];
            let b = node_idx[&l.b];
            let idx = links.len();
            iface_map.insert((a, l.ai), (idx, 0));
            iface_map.insert((b, l.bi), (idx, 1));
            links.push(LinkRt {
                ends: [(a, l.ai), (b, l.bi)],
                latency_us: l.latency_ms * 1_000,
                bw_bps: l.bw_bps,
                next_free_us: [0, 0],
            });
        }

        let min_delay = self.opts.min_compromise_delay_us.unwrap_or_else(|| {
            // Ten times the worst round trip across the topology.
            10 * 2 * diameter_us(&self.topology, &node_idx)
        });

        Ok(Sim {
            clock_us: 0,
            seq: 0,
            queue: BinaryHeap::new(),
            nodes,
            node_idx,
            links,
            iface_map,
            trace: TraceLog::new(self.opts.trace),
            adversary: AdversaryState::new(adversary),
            cost: self.cost,
            opts: self.opts,
            min_compromise_delay_us: min_delay,
            wire_bytes: 0,
            workload_errors: Vec::new(),
            events_processed: 0,
        })
    }
}

fn diameter_us(topology: &Topology, node_idx: &BTreeMap<String, usize>) -> u64 {
    // Longest shortest-path latency between any two nodes.
    let n = node_idx.len();
    let mut dist = vec![vec![u64::MAX / 4; n]; n];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = 0;
    }
    for l in &topology.links {
        let a = node_idx[&l.a];
        let b = node_idx[&l.b];
        let w = l.latency_ms * 1_000;
        dist[a][b] = dist[a][b].min(w);
        dist[b][a] = dist[b][a].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = dist[i][k] + dist[k][j];
                if via < dist[i][j] {
                    dist[i][j] = via;
                }
            }
        }
    }
    let mut max = 0;
    for row in &dist {
        for &d in row {
            if d < u64::MAX / 4 {
                max = max.max(d);
            }
        }
    }
    max.max(1_000)
}

impl Sim {
    pub fn clock_us(&self) -> u64 {
        self.clock_us
    }

    pub fn trace(&self) -> &TraceLog {
        &self.trace
    }

    pub fn observations(&self) -> &[crate::adversary::Observation] {
        &self.adversary.observations
    }

    pub fn min_compromise_delay_us(&self) -> u64 {
        self.min_compromise_delay_us
    }

    /// Router listing as consumers see it.
    pub fn ar_listing(&self) -> Vec<andana_core::directory::ArDescriptor> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.app {
                AppKind::Ar(ar) => {
                    let bw = self
                        .iface_map
                        .keys()
                        .filter(|(idx, _)| self.nodes[*idx].id == n.id)
                        .map(|k| self.links[self.iface_map[k].0].bw_bps)
                        .max()
                        .unwrap_or(0);
                    Some(ar.state.descriptor(self.clock_us / 1_000, bw, 0.0))
                }
                _ => None,
            })
            .collect()
    }

    pub fn producer_key(
        &self,
        producer: &str,
    ) -> Option<andana_core::crypto::PublicKey> {
        let idx = *self.node_idx.get(producer)?;
        match &self.nodes[idx].app {
            AppKind::Producer(p) => Some(p.public_key().clone()),
            _ => None,
        }
    }

    pub fn producer_segment_digest(&self, producer: &str, name: &Name) -> Option<[u8; 32]> {
        let idx = *self.node_idx.get(producer)?;
        match &self.nodes[idx].app {
            AppKind::Producer(p) => p.segment_digest(name),
            _ => None,
        }
    }

    /// Digest over all published segments of `base`, in order; None until
    /// every segment has been served at least once.
    pub fn producer_content_digest(
        &self,
        producer: &str,
        base: &Name,
        total_bytes: u64,
    ) -> Option<[u8; 32]> {
        use sha2::{Digest, Sha256};
        let segments = ProducerApp::segment_count(total_bytes);
        let mut hasher = Sha256::new();
        for seg in 0..segments {
            let name = base.append(seg.to_string().into_bytes()).ok()?;
            hasher.update(self.producer_segment_digest(producer, &name)?);
        }
        Some(hasher.finalize().into())
    }

    fn push(&mut self, at: u64, event: Event) {
        self.seq += 1;
        self.queue.push(Reverse(Scheduled {
            at,
            seq: self.seq,
            event,
        }));
    }

    fn resolve(&self, node: &str) -> Result<usize, SimError> {
        self.node_idx
            .get(node)
            .copied()
            .ok_or_else(|| SimError::UnknownNode(node.to_string()))
    }

    pub fn schedule_fetch(
        &mut self,
        at_us: u64,
        consumer: &str,
        req: FetchRequest,
    ) -> Result<(), SimError> {
        let node = self.resolve(consumer)?;
        self.push(at_us, Event::Fetch { node, req });
        Ok(())
    }

    /// Injects a pre-encoded packet from a node's application face.
    pub fn schedule_send_packet(
        &mut self,
        at_us: u64,
        node: &str,
        bytes: Vec<u8>,
    ) -> Result<(), SimError> {
        let node = self.resolve(node)?;
        self.push(at_us, Event::SendPacket { node, bytes });
        Ok(())
    }

    pub fn schedule_rotate_key(&mut self, at_us: u64, ar: &str) -> Result<(), SimError> {
        let node = self.resolve(ar)?;
        self.push(at_us, Event::RotateKey { node });
        Ok(())
    }

    /// Schedules a compromise. The target's state becomes visible to the
    /// adversary only from `at_us` on. Rejected if scheduled closer than the
    /// minimum delay, which models compromise taking much longer than a
    /// round trip.
    pub fn schedule_compromise(&mut self, at_us: u64, target: &str) -> Result<(), SimError> {
        self.resolve(target)?;
        if at_us < self.clock_us + self.min_compromise_delay_us {
            return Err(SimError::TooSoon {
                min_us: self.min_compromise_delay_us,
            });
        }
        self.push(at_us, Event::Compromise {
            node: target.to_string(),
        });
        Ok(())
    }

    /// Schedules a replay: the most recent adversary-observed interest with
    /// the given name prefix is re-injected from `(node, iface)`.
    pub fn schedule_replay(
        &mut self,
        at_us: u64,
        node: &str,
        iface: u32,
        prefix: Name,
    ) -> Result<(), SimError> {
        let node = self.resolve(node)?;
        self.push(at_us, Event::Replay {
            node,
            iface,
            prefix,
        });
        Ok(())
    }

    /// Runs until the queue is empty or `until_us` is reached.
    pub fn run_until(&mut self, until_us: u64) {
        while let Some(Reverse(head)) = self.queue.peek() {
            if head.at > until_us {
                break;
            }
            if self.events_processed >= self.opts.max_events {
                self.workload_errors.push("event budget exhausted".into());
                self.queue.clear();
                break;
            }
            let Reverse(sch) = self.queue.pop().unwrap();
            self.clock_us = self.clock_us.max(sch.at);
            self.events_processed += 1;
            self.dispatch(sch.at, sch.event);
        }
        self.clock_us = self.clock_us.max(until_us);
    }

    pub fn run_to_completion(&mut self) {
        while let Some(Reverse(head)) = self.queue.peek() {
            let at = head.at;
            self.run_until(at);
        }
    }

    pub fn finish(mut self) -> RunOutput {
        self.run_to_completion();
        let now = self.clock_us;
        let mut fetches = Vec::new();
        for node in &mut self.nodes {
            if let AppKind::Consumer(c) = &mut node.app {
                c.abort_incomplete(now);
                fetches.extend(c.take_reports());
            }
        }
        RunOutput {
            trace: self.trace,
            fetches,
            wire_bytes: self.wire_bytes,
            workload_errors: self.workload_errors,
            final_time_us: now,
        }
    }

    fn dispatch(&mut self, at: u64, event: Event) {
        match event {
            Event::Deliver { node, iface, bytes } => {
                self.observe_point(at, node, iface, &bytes);
                let kind = packet_kind(&bytes);
                let name = packet_name(&bytes);
                self.trace.event(
                    at,
                    &self.nodes[node].id.clone(),
                    &format!("recv_{kind}"),
                    &name,
                    &iface.to_string(),
                );
                self.ingest(node, IfaceId(iface), bytes, at);
            }
            Event::Fetch { node, req } => {
                let output = {
                    let cost = self.cost.clone();
                    let n = &mut self.nodes[node];
                    let AppKind::Consumer(c) = &mut n.app else {
                        self.workload_errors.push("fetch on non-consumer".into());
                        return;
                    };
                    c.start_fetch(req, at, &cost, &mut n.rng)
                };
                self.apply_app_output(node, output, at);
            }
            Event::SendPacket { node, bytes } => {
                self.apply_app_output(
                    node,
                    AppOutput {
                        emit: vec![bytes],
                        ..Default::default()
                    },
                    at,
                );
            }
            Event::RotateKey { node } => {
                let n = &mut self.nodes[node];
                if let AppKind::Ar(ar) = &mut n.app {
                    let cert = ar.state.rotate_encryption_key(at / 1_000, &mut n.rng);
                    let id = n.id.clone();
                    self.trace.event(
                        at,
                        &id,
                        "rotate_key",
                        &format!("not_after={}", cert.not_after),
                        "app",
                    );
                }
            }
            Event::Compromise { node } => {
                self.adversary.scheduled.insert(node.clone(), at);
                self.trace.view(at, &node, "state", "compromised");
            }
            Event::Replay { node, iface, prefix } => {
                if !self.adversary.observes(&self.nodes[node].id, iface, at) {
                    self.workload_errors
                        .push(format!("replay point {}:{iface} not observed", self.nodes[node].id));
                    return;
                }
                let found = self
                    .adversary
                    .find_observed_interest(&prefix, at)
                    .map(|o| o.bytes.clone());
                match found {
                    Some(bytes) => {
                        let id = self.nodes[node].id.clone();
                        self.trace
                            .event(at, &id, "replay_inject", &render_name(&prefix), &iface.to_string());
                        self.transmit(node, iface, bytes, at);
                    }
                    None => self
                        .workload_errors
                        .push(format!("{}", SimError::NotObserved)),
                }
            }
        }
    }

    fn observe_point(&mut self, at: u64, node: usize, iface: u32, bytes: &[u8]) {
        let id = self.nodes[node].id.clone();
        if self.adversary.observes(&id, iface, at) {
            self.adversary.record(at, &id, iface, bytes);
            let detail = format!("{} {} {}B", packet_kind(bytes), packet_name(bytes), bytes.len());
            self.trace.view(at, &id, &iface.to_string(), &detail);
        }
    }

    /// Runs a packet through a node's forwarder and application, collecting
    /// external emissions, then puts them on their links.
    fn ingest(&mut self, node: usize, from: IfaceId, bytes: Vec<u8>, at: u64) {
        let mut queue: VecDeque<(IfaceId, Vec<u8>, u64)> = VecDeque::new();
        queue.push_back((from, bytes, 0));
        let mut emissions: Vec<(u32, Vec<u8>, u64)> = Vec::new();

        while let Some((iface, bytes, delay)) = queue.pop_front() {
            let now = at + delay;
            let cost = self.cost.clone();
            let compromised;
            let mut trace_items: Vec<(&'static str, String)> = Vec::new();
            let mut view_items: Vec<String> = Vec::new();
            {
                let n = &mut self.nodes[node];
                compromised =
                    self.adversary.router_compromised_at(&n.id, now);
                let now_ms = now / 1_000;
                let actions = if let Ok(interest) = Interest::decode(&bytes) {
                    n.forwarder.on_interest(interest, iface, now_ms)
                } else if let Ok(data) = Data::decode(&bytes) {
                    n.forwarder.on_data(data, iface, now_ms)
                } else {
                    trace_items.push(("drop_malformed", String::new()));
                    Vec::new()
                };

                for action in actions {
                    match action {
                        Action::ForwardInterest { iface: out, interest } => {
                            if out == APP_IFACE {
                                let output = app_on_interest(n, &interest, now, &cost);
                                for e in output.emit {
                                    queue.push_back((
                                        APP_IFACE,
                                        e,
                                        delay + cost.forward_us + output.delay_us,
                                    ));
                                }
                                trace_items.extend(output.trace);
                                view_items.extend(output.view);
                            } else {
                                emissions.push((
                                    out.0,
                                    interest.encode(),
                                    delay + cost.forward_us,
                                ));
                            }
                        }
                        Action::EmitData { iface: out, data } => {
                            if out == APP_IFACE {
                                let output = app_on_data(n, &data, now, &cost);
                                for e in output.emit {
                                    queue.push_back((
                                        APP_IFACE,
                                        e,
                                        delay + cost.forward_us + output.delay_us,
                                    ));
                                }
                                trace_items.extend(output.trace);
                                view_items.extend(output.view);
                            } else {
                                emissions.push((out.0, data.encode(), delay + cost.forward_us));
                            }
                        }
                        Action::CacheHit => trace_items.push(("cache_hit", String::new())),
                        Action::Collapsed => trace_items.push(("pit_collapse", String::new())),
                        Action::DropNoRoute => trace_items.push(("drop_noroute", String::new())),
                        Action::DropUnsolicited => {
                            trace_items.push(("drop_unsolicited", String::new()))
                        }
                    }
                }
            }
            let id = self.nodes[node].id.clone();
            for (event, name) in trace_items {
                self.trace.event(now, &id, event, &name, "app");
            }
            if compromised {
                for detail in view_items {
                    self.trace.view(now, &id, "app", &detail);
                }
            }
        }

        for (iface, bytes, delay) in emissions {
            self.transmit(node, iface, bytes, at + delay);
        }
    }

    /// Pushes app emissions into the node's forwarder as if the application
    /// sent them, then transmits whatever leaves the node.
    fn apply_app_output(&mut self, node: usize, output: AppOutput, at: u64) {
        let id = self.nodes[node].id.clone();
        for (event, name) in &output.trace {
            self.trace.event(at, &id, event, name, "app");
        }
        if self.adversary.router_compromised_at(&id, at) {
            for detail in &output.view {
                self.trace.view(at, &id, "app", detail);
            }
        }
        for bytes in output.emit {
            self.ingest(node, APP_IFACE, bytes, at + output.delay_us);
        }
    }

    fn transmit(&mut self, node: usize, iface: u32, bytes: Vec<u8>, at: u64) {
        let kind = packet_kind(&bytes);
        let name = packet_name(&bytes);
        let id = self.nodes[node].id.clone();
        self.trace
            .event(at, &id, &format!("send_{kind}"), &name, &iface.to_string());
        self.observe_point(at, node, iface, &bytes);

        let Some(&(link_idx, dir)) = self.iface_map.get(&(node, iface)) else {
            self.trace
                .event(at, &id, "drop_nolink", &name, &iface.to_string());
            return;
        };
        let link = &mut self.links[link_idx];
        let ser_us = (bytes.len() as u64)
            .saturating_mul(1_000_000)
            .div_ceil(link.bw_bps);
        let departure = at.max(link.next_free_us[dir]);
        link.next_free_us[dir] = departure + ser_us;
        let arrival = departure + ser_us + link.latency_us;
        self.wire_bytes += bytes.len() as u64;

        let (peer_node, peer_iface) = link.ends[1 - dir];
        self.push(arrival, Event::Deliver {
            node: peer_node,
            iface: peer_iface,
            bytes,
        });
    }
}

fn app_on_interest(n: &mut NodeRt, interest: &Interest, now_us: u64, cost: &CostModel) -> AppOutput {
    let now_ms = now_us / 1_000;
    match &mut n.app {
        AppKind::Ar(ar) => ar.on_interest(interest, now_ms, cost, &mut n.rng),
        AppKind::Producer(p) => p.on_interest(interest, cost, &mut n.rng),
        AppKind::Directory(d) => d.on_interest(interest, now_ms, cost, &mut n.rng),
        AppKind::Consumer(_) | AppKind::None => AppOutput::default(),
    }
}

fn app_on_data(n: &mut NodeRt, data: &Data, now_us: u64, cost: &CostModel) -> AppOutput {
    match &mut n.app {
        AppKind::Ar(ar) => ar.on_data(data, now_us / 1_000, cost, &mut n.rng),
        AppKind::Consumer(c) => c.on_data(data, now_us, cost, &mut n.rng),
        AppKind::Producer(_) | AppKind::Directory(_) | AppKind::None => AppOutput::default(),
    }
}

fn packet_kind(bytes: &[u8]) -> &'static str {
    match bytes.first().zip(bytes.get(1)) {
        Some((0x00, 0x10)) => "interest",
        Some((0x00, 0x11)) => "data",
        _ => "packet",
    }
}

fn packet_name(bytes: &[u8]) -> String {
    if let Ok(i) = Interest::decode(bytes) {
        render_name(&i.name)
    } else if let Ok(d) = Data::decode(bytes) {
        render_name(&d.name)
    } else {
        "?".into()
    }
}
