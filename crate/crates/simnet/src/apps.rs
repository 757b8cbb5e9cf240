//! Applications running on simulated nodes, behind each node's forwarder.
//!
//! Every app consumes packets delivered on the node's app interface and may
//! emit packets back through it. Crypto work is charged to the virtual
//! clock through [`CostModel`], which models per-operation computation time
//! so overhead ratios are a property of the configuration, not of the host
//! machine.

use std::collections::BTreeMap;

use andana_core::consumer::{
    begin_session, complete_session, decapsulate_content, encrypt_interest_asymmetric,
    encrypt_interest_session, select_circuit, CircuitMode, EphemeralCircuit, HandshakeMode,
    HandshakePending, RttEstimator,
};
use andana_core::crypto::PublicKey;
use andana_core::directory::{ArDescriptor, Directory};
use andana_core::names::Name;
use andana_core::packets::{sign_data, verify_data, Data, Interest};
use andana_core::router::{ArIntResult, ArState, RejectReason, CS_COMPONENT};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::trace::render_name;

/// Simulated computation cost of each cryptographic operation, in
/// microseconds of virtual time. Defaults approximate 1024-bit RSA on the
/// single-core hardware class the overlay's measurements assume.
#[derive(Debug, Clone)]
pub struct CostModel {
    pub pke_encrypt_us: u64,
    pub pke_decrypt_us: u64,
    pub sign_us: u64,
    pub verify_us: u64,
    pub sym_us_per_kb: u64,
    pub dh_us: u64,
    pub forward_us: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            pke_encrypt_us: 80,
            pke_decrypt_us: 1_500,
            sign_us: 1_500,
            verify_us: 80,
            sym_us_per_kb: 10,
            dh_us: 500,
            forward_us: 10,
        }
    }
}

impl CostModel {
    pub fn sym_us(&self, bytes: usize) -> u64 {
        self.sym_us_per_kb * (bytes.div_ceil(1024) as u64)
    }
}

/// Result of one app activation.
#[derive(Debug, Default)]
pub struct AppOutput {
    /// Processing time to charge before any emission leaves.
    pub delay_us: u64,
    /// Encoded packets pushed into this node's forwarder from the app face.
    pub emit: Vec<Vec<u8>>,
    /// (event, rendered-name) pairs for the run log.
    pub trace: Vec<(&'static str, String)>,
    /// Details revealed to the adversary when this node is compromised.
    pub view: Vec<String>,
}

impl AppOutput {
    fn traced(mut self, event: &'static str, name: &Name) -> Self {
        self.trace.push((event, render_name(name)));
        self
    }
}

// ---------------------------------------------------------------------------
// Producer

const SEGMENT_SIZE: u64 = 4_096;

struct PublishedContent {
    base: Name,
    total_bytes: u64,
}

pub struct ProducerApp {
    pub namespace: Name,
    signing: andana_core::crypto::KeyPair,
    published: Vec<PublishedContent>,
    signed: BTreeMap<Vec<u8>, Data>,
    content_seed: u64,
    pub freshness_ms: u64,
}

impl ProducerApp {
    pub fn new(namespace: Name, signing: andana_core::crypto::KeyPair, content_seed: u64) -> Self {
        ProducerApp {
            namespace,
            signing,
            published: Vec::new(),
            signed: BTreeMap::new(),
            content_seed,
            freshness_ms: 4_000,
        }
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.signing.public
    }

    pub fn publish(&mut self, base: Name, total_bytes: u64) {
        self.published.push(PublishedContent { base, total_bytes });
    }

    pub fn segment_count(total_bytes: u64) -> u64 {
        total_bytes.div_ceil(SEGMENT_SIZE).max(1)
    }

    fn segment_payload(&self, base: &Name, seg: u64, total: u64) -> Vec<u8> {
        use rand::{RngCore, SeedableRng};
        let offset = seg * SEGMENT_SIZE;
        let len = (total - offset).min(SEGMENT_SIZE) as usize;
        let mut hasher = Sha256::new();
        hasher.update(self.content_seed.to_be_bytes());
        hasher.update(base.encode());
        hasher.update(seg.to_be_bytes());
        let mut rng = ChaCha20Rng::from_seed(hasher.finalize().into());
        let mut payload = vec![0u8; len];
        rng.fill_bytes(&mut payload);
        payload
    }

    fn serve(&mut self, name: &Name, rng: &mut ChaCha20Rng) -> Option<(Data, u64)> {
        let key = name.encode();
        if let Some(d) = self.signed.get(&key) {
            return Some((d.clone(), 0));
        }
        let content = self
            .published
            .iter()
            .find(|p| p.base.is_prefix_of(name) && name.len() == p.base.len() + 1)?;
        let seg: u64 = std::str::from_utf8(name.components().last()?)
            .ok()?
            .parse()
            .ok()?;
        if seg >= Self::segment_count(content.total_bytes) {
            return None;
        }
        let payload = self.segment_payload(&content.base, seg, content.total_bytes);
        let data = sign_data(
            name.clone(),
            payload,
            self.namespace.append(b"key".to_vec()).ok()?,
            self.freshness_ms,
            &self.signing.public,
            self.signing.secret(),
            rng,
        );
        self.signed.insert(key, data.clone());
        Some((data, 1))
    }

    /// Digest of a signed segment's full wire bytes, if it has been served.
    pub fn segment_digest(&self, name: &Name) -> Option<[u8; 32]> {
        self.signed
            .get(&name.encode())
            .map(|d| Sha256::digest(d.encode()).into())
    }

    pub fn on_interest(
        &mut self,
        interest: &Interest,
        cost: &CostModel,
        rng: &mut ChaCha20Rng,
    ) -> AppOutput {
        match self.serve(&interest.name, rng) {
            Some((data, fresh_signs)) => AppOutput {
                delay_us: cost.sign_us * fresh_signs,
                emit: vec![data.encode()],
                ..Default::default()
            }
            .traced("producer_serve", &interest.name),
            None => AppOutput::default().traced("producer_no_content", &interest.name),
        }
    }
}

// ---------------------------------------------------------------------------
// Anonymizing router

pub struct ArApp {
    pub state: ArState,
}

impl ArApp {
    pub fn new(state: ArState) -> Self {
        ArApp { state }
    }

    pub fn on_interest(
        &mut self,
        interest: &Interest,
        now_ms: u64,
        cost: &CostModel,
        rng: &mut ChaCha20Rng,
    ) -> AppOutput {
        let ns_len = self.state.namespace().len();
        let comps = interest.name.components();
        if comps.len() > ns_len && comps[ns_len] == CS_COMPONENT {
            let reply = self.state.handle_createsession(interest, now_ms, rng);
            // Mode byte decides the cost: DH exchange or key unwrap.
            let hs_cost = handshake_cost(interest, ns_len, cost);
            return AppOutput {
                delay_us: hs_cost + cost.sign_us,
                emit: vec![reply.encode()],
                ..Default::default()
            }
            .traced("ar_createsession", &interest.name);
        }

        // Relay path: session legs carry sid + ciphertext, asymmetric legs
        // just the ciphertext.
        let is_session_leg = comps.len() == ns_len + 2;
        let peel_cost = if is_session_leg {
            cost.sym_us(comps.last().map_or(0, |c| c.len()))
        } else {
            cost.pke_decrypt_us
        };
        match self.state.handle_encrypted_interest(interest, now_ms) {
            ArIntResult::Forward(inner) => {
                let view = format!(
                    "peel {} -> {}",
                    render_name(&interest.name),
                    render_name(&inner.name)
                );
                let mut out = AppOutput {
                    delay_us: peel_cost,
                    emit: vec![inner.encode()],
                    view: vec![view],
                    ..Default::default()
                }
                .traced("ar_forward", &interest.name);
                out.trace.push(("ar_forward_inner", render_name(&inner.name)));
                out
            }
            ArIntResult::Reject(reason) => {
                let event = match reason {
                    RejectReason::BadDecryption => "ar_reject_baddecrypt",
                    RejectReason::StaleTimestamp => "ar_reject_stale",
                    RejectReason::UnknownSession => "ar_reject_unknownsid",
                    RejectReason::PolicyDenied => "ar_reject_policy",
                };
                AppOutput {
                    delay_us: peel_cost,
                    ..Default::default()
                }
                .traced(event, &interest.name)
            }
        }
    }

    pub fn on_data(
        &mut self,
        data: &Data,
        now_ms: u64,
        cost: &CostModel,
        rng: &mut ChaCha20Rng,
    ) -> AppOutput {
        match self.state.handle_returning_content(data, now_ms, rng) {
            Ok(responses) => {
                let mut out = AppOutput::default();
                for resp in responses {
                    out.delay_us += cost.sym_us(resp.payload.len()) + cost.sign_us;
                    out.trace.push(("ar_wrap", render_name(&resp.name)));
                    out.emit.push(resp.encode());
                }
                out
            }
            Err(_) => AppOutput::default().traced("ar_drop_nostate", &data.name),
        }
    }
}

fn handshake_cost(interest: &Interest, ns_len: usize, cost: &CostModel) -> u64 {
    use andana_core::router::{CS_MODE_DH, TYPE_CS_MODE};
    use andana_core::tlv::Reader;
    let comps = interest.name.components();
    if comps.len() != ns_len + 2 {
        return 0;
    }
    let mut r = Reader::new(&comps[ns_len + 1]);
    match r.read_expected(TYPE_CS_MODE) {
        Ok([m]) if *m == CS_MODE_DH => cost.dh_us,
        Ok(_) => cost.pke_decrypt_us,
        Err(_) => 0,
    }
}

// ---------------------------------------------------------------------------
// Directory

pub struct DirectoryApp {
    pub namespace: Name,
    pub directory: Directory,
    signing: andana_core::crypto::KeyPair,
}

impl DirectoryApp {
    pub fn new(namespace: Name, signing: andana_core::crypto::KeyPair) -> Self {
        DirectoryApp {
            namespace,
            directory: Directory::new(),
            signing,
        }
    }

    pub fn on_interest(
        &mut self,
        interest: &Interest,
        now_ms: u64,
        cost: &CostModel,
        rng: &mut ChaCha20Rng,
    ) -> AppOutput {
        let snapshot = self.directory.snapshot(now_ms);
        let data = sign_data(
            interest.name.clone(),
            snapshot,
            self.namespace.append(b"key".to_vec()).unwrap(),
            10_000,
            &self.signing.public,
            self.signing.secret(),
            rng,
        );
        AppOutput {
            delay_us: cost.sign_us,
            emit: vec![data.encode()],
            ..Default::default()
        }
        .traced("directory_serve", &interest.name)
    }
}

// ---------------------------------------------------------------------------
// Consumer

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FetchMode {
    Plain,
    AndanaA,
    AndanaS,
}

impl FetchMode {
    pub fn label(&self) -> &'static str {
        match self {
            FetchMode::Plain => "plain",
            FetchMode::AndanaA => "andana-a",
            FetchMode::AndanaS => "andana-s",
        }
    }

    pub fn parse(s: &str) -> Option<FetchMode> {
        match s {
            "plain" => Some(FetchMode::Plain),
            "andana-a" => Some(FetchMode::AndanaA),
            "andana-s" => Some(FetchMode::AndanaS),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FetchRequest {
    pub base: Name,
    pub size_bytes: u64,
    pub mode: FetchMode,
    pub window: usize,
}

/// Everything measured about one completed (or failed) fetch.
#[derive(Debug, Clone)]
pub struct FetchReport {
    pub consumer: String,
    pub base: Name,
    pub mode: FetchMode,
    pub segments: u64,
    pub completed: u64,
    pub start_us: u64,
    pub setup_us: u64,
    pub end_us: u64,
    pub rtt_series_us: Vec<u64>,
    /// Digest over all recovered segment packets in order.
    pub content_digest: [u8; 32],
    /// True iff every producer signature verified.
    pub verified: bool,
    pub timed_out: bool,
}

impl FetchReport {
    pub fn total_us(&self) -> u64 {
        self.end_us - self.start_us
    }

    pub fn transfer_us(&self) -> u64 {
        self.total_us() - self.setup_us
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    FetchDirectory,
    Handshake(usize),
    Transfer,
}

struct InFlight {
    seg: u64,
    sent_us: u64,
    circuit: Option<EphemeralCircuit>,
}

struct ActiveFetch {
    req: FetchRequest,
    phase: Phase,
    start_us: u64,
    setup_done_us: Option<u64>,
    total_segs: u64,
    next_seg: u64,
    completed: u64,
    in_flight: BTreeMap<Vec<u8>, InFlight>,
    sessions: Vec<andana_core::consumer::SessionState>,
    pending_hs: Option<HandshakePending>,
    hs_expected_name: Option<Name>,
    rtt: RttEstimator,
    rtt_series_us: Vec<u64>,
    seg_digests: BTreeMap<u64, [u8; 32]>,
    verified: bool,
}

pub struct ConsumerApp {
    pub id: String,
    listing: Vec<ArDescriptor>,
    directory_ns: Option<Name>,
    trust: BTreeMap<[u8; 32], PublicKey>,
    active: Option<ActiveFetch>,
    reports: Vec<FetchReport>,
    expected_dir_name: Option<Name>,
    pub session_ttl_ms: u64,
}

impl ConsumerApp {
    pub fn new(
        id: String,
        listing: Vec<ArDescriptor>,
        directory_ns: Option<Name>,
        trust: BTreeMap<[u8; 32], PublicKey>,
    ) -> Self {
        ConsumerApp {
            id,
            listing,
            directory_ns,
            trust,
            active: None,
            reports: Vec::new(),
            expected_dir_name: None,
            session_ttl_ms: 3_600_000,
        }
    }

    pub fn listing(&self) -> &[ArDescriptor] {
        &self.listing
    }

    pub fn start_fetch(
        &mut self,
        req: FetchRequest,
        now_us: u64,
        cost: &CostModel,
        rng: &mut ChaCha20Rng,
    ) -> AppOutput {
        let total_segs = ProducerApp::segment_count(req.size_bytes);
        let needs_dir = req.mode != FetchMode::Plain && self.directory_ns.is_some();
        let mut fetch = ActiveFetch {
            phase: Phase::Transfer,
            start_us: now_us,
            setup_done_us: None,
            total_segs,
            next_seg: 0,
            completed: 0,
            in_flight: BTreeMap::new(),
            sessions: Vec::new(),
            pending_hs: None,
            hs_expected_name: None,
            rtt: RttEstimator::default(),
            rtt_series_us: Vec::new(),
            seg_digests: BTreeMap::new(),
            verified: true,
            req,
        };

        let mut out = AppOutput::default();
        out.trace.push(("fetch_start", render_name(&fetch.req.base)));
        if needs_dir {
            fetch.phase = Phase::FetchDirectory;
            let name = self
                .directory_ns
                .clone()
                .unwrap()
                .append(b"snapshot".to_vec())
                .unwrap();
            self.expected_dir_name = Some(name.clone());
            out.emit.push(Interest::new(name).encode());
            self.active = Some(fetch);
            return out;
        }
        if fetch.req.mode == FetchMode::AndanaS {
            fetch.phase = Phase::Handshake(0);
            self.active = Some(fetch);
            let hs = self.begin_handshake(0, now_us, cost, rng);
            return merge(out, hs);
        }
        fetch.setup_done_us = Some(now_us);
        self.active = Some(fetch);
        merge(out, self.fill_window(now_us, cost, rng))
    }

    fn begin_handshake(
        &mut self,
        idx: usize,
        now_us: u64,
        cost: &CostModel,
        rng: &mut ChaCha20Rng,
    ) -> AppOutput {
        let ar = self.listing[idx].clone();
        let fetch = self.active.as_mut().unwrap();
        let (interest, pending) = begin_session(&ar, HandshakeMode::Dh, now_us / 1_000, rng)
            .expect("handshake construction");
        fetch.pending_hs = Some(pending);
        fetch.hs_expected_name = Some(interest.name.clone());
        AppOutput {
            delay_us: cost.dh_us,
            emit: vec![interest.encode()],
            ..Default::default()
        }
        .traced("session_handshake", &ar.namespace)
    }

    fn fill_window(&mut self, now_us: u64, cost: &CostModel, rng: &mut ChaCha20Rng) -> AppOutput {
        let mut out = AppOutput::default();
        loop {
            let Some(fetch) = self.active.as_mut() else {
                return out;
            };
            if fetch.next_seg >= fetch.total_segs
                || fetch.in_flight.len() >= fetch.req.window
            {
                return out;
            }
            let seg = fetch.next_seg;
            fetch.next_seg += 1;
            let issue = self.issue_segment(seg, now_us, cost, rng);
            out = merge(out, issue);
        }
    }

    fn issue_segment(
        &mut self,
        seg: u64,
        now_us: u64,
        cost: &CostModel,
        rng: &mut ChaCha20Rng,
    ) -> AppOutput {
        let fetch = self.active.as_mut().unwrap();
        let seg_name = fetch
            .req
            .base
            .append(seg.to_string().into_bytes())
            .expect("segment name fits");
        let interest = Interest::new(seg_name.clone());
        let now_ms = now_us / 1_000;
        let rtt_ms = fetch.rtt.estimate_ms();

        let (wire, circuit, delay) = match fetch.req.mode {
            FetchMode::Plain => (interest, None, 0),
            FetchMode::AndanaA => {
                let mut circuit = select_circuit(&self.listing, CircuitMode::Asymmetric, now_ms, rng)
                    .expect("eligible routers");
                let wire = encrypt_interest_asymmetric(&mut circuit, &interest, now_ms, rtt_ms, rng)
                    .expect("wrap interest");
                (wire, Some(circuit), 2 * cost.pke_encrypt_us)
            }
            FetchMode::AndanaS => {
                let mut circuit = select_circuit(&self.listing, CircuitMode::Session, now_ms, rng)
                    .expect("eligible routers");
                let entry_sess = fetch
                    .sessions
                    .iter()
                    .find(|s| s.ar.namespace == circuit.entry.namespace)
                    .expect("session with entry")
                    .clone();
                let exit_sess = fetch
                    .sessions
                    .iter()
                    .find(|s| s.ar.namespace == circuit.exit.namespace)
                    .expect("session with exit")
                    .clone();
                let wire = encrypt_interest_session(
                    &mut circuit,
                    (&entry_sess, &exit_sess),
                    self.session_ttl_ms,
                    &interest,
                    now_ms,
                    rtt_ms,
                    rng,
                )
                .expect("wrap interest");
                // Two symmetric layers over padded plaintext; approximate
                // with the wire component size.
                let ct_len = wire.name.components().last().map_or(0, |c| c.len());
                (wire, Some(circuit), 2 * cost.sym_us(ct_len))
            }
        };

        fetch.in_flight.insert(
            wire.name.encode(),
            InFlight {
                seg,
                sent_us: now_us + delay,
                circuit,
            },
        );
        AppOutput {
            delay_us: delay,
            emit: vec![wire.encode()],
            ..Default::default()
        }
        .traced("segment_request", &seg_name)
    }

    pub fn on_data(
        &mut self,
        data: &Data,
        now_us: u64,
        cost: &CostModel,
        rng: &mut ChaCha20Rng,
    ) -> AppOutput {
        let Some(phase) = self.active.as_ref().map(|f| f.phase) else {
            return AppOutput::default().traced("consumer_drop", &data.name);
        };
        match phase {
            Phase::FetchDirectory => self.on_directory_data(data, now_us, cost, rng),
            Phase::Handshake(idx) => self.on_handshake_data(idx, data, now_us, cost, rng),
            Phase::Transfer => self.on_segment_data(data, now_us, cost, rng),
        }
    }

    fn on_directory_data(
        &mut self,
        data: &Data,
        now_us: u64,
        cost: &CostModel,
        rng: &mut ChaCha20Rng,
    ) -> AppOutput {
        if Some(&data.name) != self.expected_dir_name.as_ref() {
            return AppOutput::default().traced("consumer_drop", &data.name);
        }
        match Directory::load_snapshot(&data.payload) {
            Ok(listing) if !listing.is_empty() => self.listing = listing,
            _ => return AppOutput::default().traced("consumer_bad_directory", &data.name),
        }
        let fetch = self.active.as_mut().unwrap();
        if fetch.req.mode == FetchMode::AndanaS {
            fetch.phase = Phase::Handshake(0);
            return self.begin_handshake(0, now_us, cost, rng);
        }
        fetch.phase = Phase::Transfer;
        fetch.setup_done_us = Some(now_us);
        self.fill_window(now_us, cost, rng)
    }

    fn on_handshake_data(
        &mut self,
        idx: usize,
        data: &Data,
        now_us: u64,
        cost: &CostModel,
        rng: &mut ChaCha20Rng,
    ) -> AppOutput {
        let fetch = self.active.as_mut().unwrap();
        if Some(&data.name) != fetch.hs_expected_name.as_ref() {
            return AppOutput::default().traced("consumer_drop", &data.name);
        }
        let pending = fetch.pending_hs.take().unwrap();
        let session = match complete_session(pending, data, now_us / 1_000) {
            Ok(s) => s,
            Err(_) => {
                return AppOutput::default().traced("consumer_handshake_failed", &data.name);
            }
        };
        fetch.sessions.push(session);
        let hs_delay = cost.dh_us + cost.verify_us;
        if idx + 1 < self.listing.len() {
            fetch.phase = Phase::Handshake(idx + 1);
            let mut hs = self.begin_handshake(idx + 1, now_us + hs_delay, cost, rng);
            hs.delay_us += hs_delay;
            return hs;
        }
        fetch.phase = Phase::Transfer;
        fetch.setup_done_us = Some(now_us + hs_delay);
        let mut out = self.fill_window(now_us + hs_delay, cost, rng);
        out.delay_us += hs_delay;
        out
    }

    fn on_segment_data(
        &mut self,
        data: &Data,
        now_us: u64,
        cost: &CostModel,
        rng: &mut ChaCha20Rng,
    ) -> AppOutput {
        let fetch = self.active.as_mut().unwrap();
        let key = data.name.encode();
        let Some(inflight) = fetch.in_flight.remove(&key) else {
            return AppOutput::default().traced("consumer_drop", &data.name);
        };
        let mut delay = 0;
        let original = match &inflight.circuit {
            None => data.clone(),
            Some(circuit) => {
                delay += 2 * cost.sym_us(data.payload.len());
                match decapsulate_any(circuit, data, &self.trust) {
                    Ok(d) => d,
                    Err(_) => {
                        fetch.verified = false;
                        fetch.completed += 1;
                        return AppOutput {
                            delay_us: delay,
                            ..Default::default()
                        }
                        .traced("consumer_decap_failed", &data.name);
                    }
                }
            }
        };
        delay += cost.verify_us;
        if inflight.circuit.is_none() {
            let ok = self
                .trust
                .get(&original.signer_id)
                .map(|pk| verify_data(&original, pk))
                .unwrap_or(false);
            if !ok {
                fetch.verified = false;
            }
        }
        let rtt_us = now_us.saturating_sub(inflight.sent_us);
        fetch.rtt.observe(rtt_us / 1_000);
        fetch.rtt_series_us.push(rtt_us);
        fetch
            .seg_digests
            .insert(inflight.seg, Sha256::digest(original.encode()).into());
        fetch.completed += 1;

        let done = fetch.completed >= fetch.total_segs;
        let base = fetch.req.base.clone();
        let mut out = AppOutput {
            delay_us: delay,
            ..Default::default()
        }
        .traced("segment_done", &original.name);
        if done {
            self.finalize(now_us, false);
            out.trace.push(("fetch_done", render_name(&base)));
        } else {
            out = merge(out, self.fill_window(now_us + delay, cost, rng));
        }
        out
    }

    fn finalize(&mut self, now_us: u64, timed_out: bool) {
        let Some(fetch) = self.active.take() else {
            return;
        };
        let mut hasher = Sha256::new();
        for d in fetch.seg_digests.values() {
            hasher.update(d);
        }
        self.reports.push(FetchReport {
            consumer: self.id.clone(),
            base: fetch.req.base,
            mode: fetch.req.mode,
            segments: fetch.total_segs,
            completed: fetch.completed,
            start_us: fetch.start_us,
            setup_us: fetch.setup_done_us.map_or(0, |t| t - fetch.start_us),
            end_us: now_us,
            rtt_series_us: fetch.rtt_series_us,
            content_digest: hasher.finalize().into(),
            verified: fetch.verified,
            timed_out,
        });
    }

    /// Called when the event queue drains with a fetch still outstanding.
    pub fn abort_incomplete(&mut self, now_us: u64) {
        if self.active.is_some() {
            self.finalize(now_us, true);
        }
    }

    pub fn take_reports(&mut self) -> Vec<FetchReport> {
        std::mem::take(&mut self.reports)
    }
}

fn decapsulate_any(
    circuit: &EphemeralCircuit,
    data: &Data,
    trust: &BTreeMap<[u8; 32], PublicKey>,
) -> Result<Data, andana_core::consumer::ConsumerError> {
    use andana_core::consumer::ConsumerError;
    let mut last = Err(ConsumerError::DecryptionFailed);
    for pk in trust.values() {
        match decapsulate_content(circuit, data, pk) {
            Ok(d) => return Ok(d),
            Err(e) => last = Err(e),
        }
    }
    last
}

fn merge(mut a: AppOutput, b: AppOutput) -> AppOutput {
    a.delay_us += b.delay_us;
    a.emit.extend(b.emit);
    a.trace.extend(b.trace);
    a.view.extend(b.view);
    a
}
