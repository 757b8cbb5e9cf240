//! A name-based forwarding node.
//!
//! The same machinery runs on every node kind: plain routers, anonymizing
//! routers' hosts, consumers and producers. Interests are matched against
//! the content store first (prefix satisfaction, freshness respected), then
//! collapsed into an existing PIT entry for the exact same name, and only
//! otherwise forwarded along the FIB's longest matching prefix. Returning
//! data follows PIT state back downstream; unsolicited data is dropped.
//!
//! PIT entries are keyed by exact name. Data satisfies an entry when the
//! entry's name is a prefix of the data's name. Collapsed interests do not
//! extend a PIT entry's expiry.

use std::collections::BTreeMap;

use crate::names::Name;
use crate::packets::{Data, Interest};

/// Interface identifier, unique per node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IfaceId(pub u32);

/// Reserved interface connecting the forwarder to its local application.
pub const APP_IFACE: IfaceId = IfaceId(u32::MAX);

/// Default PIT entry lifetime. Exceeds the overlay's timestamp window so a
/// re-issued encrypted interest still collapses onto pending state.
pub const DEFAULT_PIT_LIFETIME_MS: u64 = 4_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibEntry {
    pub prefix: Name,
    pub next_hops: Vec<IfaceId>,
}

#[derive(Debug, Clone)]
pub struct PitEntry {
    pub name: Name,
    pub downstream: Vec<IfaceId>,
    pub created_at: u64,
    pub expiry: u64,
}

#[derive(Debug, Clone)]
struct CsEntry {
    data: Data,
    inserted_at: u64,
    last_used: u64,
    size: usize,
}

/// Cache of data packets bounded by capacity and per-packet freshness.
#[derive(Debug)]
pub struct ContentStore {
    entries: BTreeMap<Vec<u8>, CsEntry>,
    capacity_bytes: usize,
    used_bytes: usize,
}

impl ContentStore {
    pub fn new(capacity_bytes: usize) -> Self {
        ContentStore {
            entries: BTreeMap::new(),
            capacity_bytes,
            used_bytes: 0,
        }
    }

    pub fn capacity_bytes(&self) -> usize {
        self.capacity_bytes
    }

    pub fn used_bytes(&self) -> usize {
        self.used_bytes
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn fresh(entry: &CsEntry, now: u64) -> bool {
        now <= entry.inserted_at.saturating_add(entry.data.freshness_ms)
    }

    /// First fresh entry (in name order) satisfying the interest.
    pub fn lookup(&mut self, interest: &Interest, now: u64) -> Option<Data> {
        let key = self
            .entries
            .iter()
            .find(|(_, e)| Self::fresh(e, now) && e.data.satisfies(interest))
            .map(|(k, _)| k.clone())?;
        let entry = self.entries.get_mut(&key).unwrap();
        entry.last_used = now;
        Some(entry.data.clone())
    }

    pub fn insert(&mut self, data: Data, now: u64) -> Vec<Name> {
        let size = data.wire_len();
        if size > self.capacity_bytes {
            // Cannot ever hold it; it is evicted before it lands.
            return vec![data.name];
        }
        let key = data.name.encode();
        if let Some(old) = self.entries.remove(&key) {
            self.used_bytes -= old.size;
        }
        self.entries.insert(
            key,
            CsEntry {
                data,
                inserted_at: now,
                last_used: now,
                size,
            },
        );
        self.used_bytes += size;
        self.evict(now)
    }

    /// Evicts to capacity: expired entries first, then least recently used.
    pub fn evict(&mut self, now: u64) -> Vec<Name> {
        let mut evicted = Vec::new();
        while self.used_bytes > self.capacity_bytes {
            let victim = self
                .entries
                .iter()
                .min_by_key(|(k, e)| (Self::fresh(e, now), e.last_used, (*k).clone()))
                .map(|(k, _)| k.clone());
            match victim {
                Some(k) => {
                    let e = self.entries.remove(&k).unwrap();
                    self.used_bytes -= e.size;
                    evicted.push(e.data.name);
                }
                None => break,
            }
        }
        evicted
    }
}

/// One step of forwarding: what the node should do with a packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// Send the interest out of this interface.
    ForwardInterest { iface: IfaceId, interest: Interest },
    /// Send the data out of this interface.
    EmitData { iface: IfaceId, data: Data },
    /// Interest satisfied from the content store (data emitted separately).
    CacheHit,
    /// Interest collapsed onto existing PIT state; nothing forwarded.
    Collapsed,
    /// No FIB match; the interest was dropped.
    DropNoRoute,
    /// Data without matching PIT state; dropped, cache untouched.
    DropUnsolicited,
}

#[derive(Debug, Clone)]
pub struct ForwarderConfig {
    pub pit_lifetime_ms: u64,
    pub cs_capacity_bytes: usize,
}

impl Default for ForwarderConfig {
    fn default() -> Self {
        ForwarderConfig {
            pit_lifetime_ms: DEFAULT_PIT_LIFETIME_MS,
            cs_capacity_bytes: 8 << 20,
        }
    }
}

#[derive(Debug)]
pub struct Forwarder {
    fib: Vec<FibEntry>,
    pit: BTreeMap<Vec<u8>, PitEntry>,
    cs: ContentStore,
    config: ForwarderConfig,
}

impl Forwarder {
    pub fn new(config: ForwarderConfig) -> Self {
        Forwarder {
            fib: Vec::new(),
            pit: BTreeMap::new(),
            cs: ContentStore::new(config.cs_capacity_bytes),
            config,
        }
    }

    /// Installs a route; at most one entry per exact prefix.
    pub fn add_route(&mut self, prefix: Name, iface: IfaceId) {
        if let Some(e) = self.fib.iter_mut().find(|e| e.prefix == prefix) {
            if !e.next_hops.contains(&iface) {
                e.next_hops.push(iface);
            }
            return;
        }
        self.fib.push(FibEntry {
            prefix,
            next_hops: vec![iface],
        });
    }

    pub fn fib(&self) -> &[FibEntry] {
        &self.fib
    }

    pub fn pit_len(&self) -> usize {
        self.pit.len()
    }

    pub fn content_store(&self) -> &ContentStore {
        &self.cs
    }

    pub fn content_store_mut(&mut self) -> &mut ContentStore {
        &mut self.cs
    }

    /// Longest-prefix FIB lookup. Ties are impossible: one entry per prefix.
    pub fn lookup_route(&self, name: &Name) -> Option<&FibEntry> {
        self.fib
            .iter()
            .filter(|e| e.prefix.is_prefix_of(name))
            .max_by_key(|e| e.prefix.len())
    }

    fn purge_expired_pit(&mut self, now: u64) {
        self.pit.retain(|_, e| e.expiry > now);
    }

    pub fn on_interest(&mut self, interest: Interest, from: IfaceId, now: u64) -> Vec<Action> {
        self.purge_expired_pit(now);

        // (a) Content store: a fresh prefix-satisfying packet answers the
        // interest on the arrival interface and nothing is forwarded.
        if let Some(data) = self.cs.lookup(&interest, now) {
            return vec![Action::CacheHit, Action::EmitData { iface: from, data }];
        }

        // (b) PIT: an exact-name entry collapses the interest.
        let key = interest.name.encode();
        if let Some(entry) = self.pit.get_mut(&key) {
            if !entry.downstream.contains(&from) {
                entry.downstream.push(from);
            }
            return vec![Action::Collapsed];
        }

        // (c) FIB: create state and forward upstream.
        let Some(route) = self.lookup_route(&interest.name) else {
            return vec![Action::DropNoRoute];
        };
        let upstream = route.next_hops[0];
        self.pit.insert(
            key,
            PitEntry {
                name: interest.name.clone(),
                downstream: vec![from],
                created_at: now,
                expiry: now + self.config.pit_lifetime_ms,
            },
        );
        vec![Action::ForwardInterest {
            iface: upstream,
            interest,
        }]
    }

    pub fn on_data(&mut self, data: Data, _from: IfaceId, now: u64) -> Vec<Action> {
        self.purge_expired_pit(now);

        let matching: Vec<Vec<u8>> = self
            .pit
            .iter()
            .filter(|(_, e)| e.name.is_prefix_of(&data.name))
            .map(|(k, _)| k.clone())
            .collect();
        if matching.is_empty() {
            return vec![Action::DropUnsolicited];
        }

        let mut actions = Vec::new();
        for key in matching {
            let entry = self.pit.remove(&key).unwrap();
            for iface in entry.downstream {
                actions.push(Action::EmitData {
                    iface,
                    data: data.clone(),
                });
            }
        }
        self.cs.insert(data, now);
        actions
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{KeyPair, KeyRole, KeyStrength};
    use crate::packets::sign_data;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn name(s: &str) -> Name {
        Name::parse(s).unwrap()
    }

    struct Fixture {
        keys: KeyPair,
        rng: ChaCha20Rng,
    }

    impl Fixture {
        fn new() -> Self {
            let mut rng = ChaCha20Rng::seed_from_u64(99);
            let keys = KeyPair::generate(KeyRole::Signing, KeyStrength::Rsa1024, &mut rng);
            Fixture { keys, rng }
        }

        fn data(&mut self, n: &str, payload: &[u8], freshness_ms: u64) -> Data {
            sign_data(
                name(n),
                payload.to_vec(),
                name("/keys"),
                freshness_ms,
                &self.keys.public,
                self.keys.secret(),
                &mut self.rng,
            )
        }
    }

    fn forwarder() -> Forwarder {
        let mut f = Forwarder::new(ForwarderConfig::default());
        f.add_route(name("/data"), IfaceId(1));
        f
    }

    #[test]
    fn collapses_duplicate_interests() {
        let mut f = forwarder();
        let i = Interest::new(name("/data/x"));
        let a1 = f.on_interest(i.clone(), IfaceId(10), 0);
        assert!(matches!(a1[0], Action::ForwardInterest { iface: IfaceId(1), .. }));
        let a2 = f.on_interest(i.clone(), IfaceId(11), 1);
        assert_eq!(a2, vec![Action::Collapsed]);
        assert_eq!(f.pit_len(), 1);

        // Data fans out to both downstream interfaces and flushes the entry.
        let mut fx = Fixture::new();
        let d = fx.data("/data/x", b"hi", 4_000);
        let out = f.on_data(d, IfaceId(1), 2);
        let emitted: Vec<IfaceId> = out
            .iter()
            .filter_map(|a| match a {
                Action::EmitData { iface, .. } => Some(*iface),
                _ => None,
            })
            .collect();
        assert_eq!(emitted, vec![IfaceId(10), IfaceId(11)]);
        assert_eq!(f.pit_len(), 0);
    }

    #[test]
    fn cache_hit_serves_prefix_match_without_forwarding() {
        let mut f = forwarder();
        let mut fx = Fixture::new();
        let d = fx.data("/data/x/seg1", b"cached", 4_000);
        f.content_store_mut().insert(d, 0);

        let out = f.on_interest(Interest::new(name("/data/x")), IfaceId(7), 10);
        assert_eq!(out[0], Action::CacheHit);
        assert!(matches!(&out[1], Action::EmitData { iface: IfaceId(7), data }
            if data.name == name("/data/x/seg1")));
        assert_eq!(f.pit_len(), 0);
    }

    #[test]
    fn expired_cache_entry_not_served() {
        let mut f = forwarder();
        let mut fx = Fixture::new();
        let d = fx.data("/data/x", b"stale", 100);
        f.content_store_mut().insert(d, 0);
        // At now=100 the entry is still fresh (inclusive bound); at 101 not.
        let out = f.on_interest(Interest::new(name("/data/x")), IfaceId(7), 101);
        assert!(matches!(out[0], Action::ForwardInterest { .. }));
    }

    #[test]
    fn no_fib_match_drops_without_state() {
        let mut f = forwarder();
        let out = f.on_interest(Interest::new(name("/other/x")), IfaceId(2), 0);
        assert_eq!(out, vec![Action::DropNoRoute]);
        assert_eq!(f.pit_len(), 0);
    }

    #[test]
    fn longest_prefix_wins() {
        let mut f = forwarder();
        f.add_route(name("/data/special"), IfaceId(5));
        let out = f.on_interest(Interest::new(name("/data/special/x")), IfaceId(2), 0);
        assert!(matches!(out[0], Action::ForwardInterest { iface: IfaceId(5), .. }));
        let out = f.on_interest(Interest::new(name("/data/plain")), IfaceId(2), 0);
        assert!(matches!(out[0], Action::ForwardInterest { iface: IfaceId(1), .. }));
    }

    #[test]
    fn unsolicited_data_dropped_and_not_cached() {
        let mut f = forwarder();
        let mut fx = Fixture::new();
        let d = fx.data("/data/x", b"unsolicited", 4_000);
        let out = f.on_data(d, IfaceId(1), 0);
        assert_eq!(out, vec![Action::DropUnsolicited]);
        assert!(f.content_store().is_empty());

        // Second identical data after a legitimate flush is also dropped.
        f.on_interest(Interest::new(name("/data/x")), IfaceId(3), 0);
        let d = fx.data("/data/x", b"first", 4_000);
        let first = f.on_data(d.clone(), IfaceId(1), 1);
        assert!(first.iter().any(|a| matches!(a, Action::EmitData { .. })));
        let second = f.on_data(d, IfaceId(1), 2);
        assert_eq!(second, vec![Action::DropUnsolicited]);
    }

    #[test]
    fn collapsing_n_interests_one_upstream_n_deliveries() {
        for n in [2u32, 5, 10] {
            let mut f = forwarder();
            let i = Interest::new(name("/data/x"));
            let mut upstream = 0;
            for k in 0..n {
                let acts = f.on_interest(i.clone(), IfaceId(100 + k), 0);
                upstream += acts
                    .iter()
                    .filter(|a| matches!(a, Action::ForwardInterest { .. }))
                    .count();
            }
            assert_eq!(upstream, 1);
            let mut fx = Fixture::new();
            let d = fx.data("/data/x", b"payload", 4_000);
            let out = f.on_data(d, IfaceId(1), 1);
            let deliveries = out
                .iter()
                .filter(|a| matches!(a, Action::EmitData { .. }))
                .count();
            assert_eq!(deliveries, n as usize);
        }
    }

    #[test]
    fn pit_expiry_is_not_extended_by_collapsing() {
        let mut f = forwarder();
        let i = Interest::new(name("/data/x"));
        f.on_interest(i.clone(), IfaceId(1), 0);
        f.on_interest(i.clone(), IfaceId(2), 3_999);
        // Entry created at 0 expires at 4000 regardless of the collapse.
        let acts = f.on_interest(i, IfaceId(3), 4_000);
        assert!(matches!(acts[0], Action::ForwardInterest { .. }));
    }

    #[test]
    fn eviction_lru_with_expired_first() {
        let mut fx = Fixture::new();
        let d1 = fx.data("/data/a", &[1u8; 100], 50); // expires quickly
        let d2 = fx.data("/data/b", &[2u8; 100], 10_000);
        let d3 = fx.data("/data/c", &[3u8; 100], 10_000);
        let budget = d1.wire_len() + d2.wire_len() + d3.wire_len();

        let mut cs = ContentStore::new(budget);
        cs.insert(d1, 0);
        cs.insert(d2, 1);
        cs.insert(d3, 2);
        assert_eq!(cs.len(), 3);

        // d2 is older by last_used than d3, but d1 is expired by now=200.
        let d4 = fx.data("/data/d", &[4u8; 100], 10_000);
        let evicted = cs.insert(d4, 200);
        assert_eq!(evicted, vec![name("/data/a")]);

        // Next insert evicts the least recently used live entry (d2).
        let d5 = fx.data("/data/e", &[5u8; 100], 10_000);
        let evicted = cs.insert(d5, 201);
        assert_eq!(evicted, vec![name("/data/b")]);
    }

    #[test]
    fn zero_capacity_store_holds_nothing() {
        let mut fx = Fixture::new();
        let mut cs = ContentStore::new(0);
        let d = fx.data("/data/a", b"x", 1_000);
        let evicted = cs.insert(d, 0);
        assert_eq!(evicted, vec![name("/data/a")]);
        assert!(cs.is_empty());
    }

    #[test]
    fn flow_balance_data_emissions_bounded_by_interests() {
        // Pull model: per interface, data emissions for a name never exceed
        // interests received for prefixes of it.
        use std::collections::HashMap;
        let mut f = forwarder();
        let mut fx = Fixture::new();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut interests_by_iface: HashMap<u32, usize> = HashMap::new();
        let mut data_by_iface: HashMap<u32, usize> = HashMap::new();
        for step in 0..400u64 {
            let which = rand::Rng::gen_range(&mut rng, 0..4);
            let iface = rand::Rng::gen_range(&mut rng, 10..14u32);
            let n = format!("/data/{}", rand::Rng::gen_range(&mut rng, 0..3));
            if rand::Rng::gen_bool(&mut rng, 0.6) {
                *interests_by_iface.entry(iface).or_default() += 1;
                f.on_interest(Interest::new(name(&n)), IfaceId(iface), step);
            } else {
                let d = fx.data(&format!("{n}/s{which}"), b"p", 4_000);
                for a in f.on_data(d, IfaceId(1), step) {
                    if let Action::EmitData { iface: IfaceId(i), .. } = a {
                        *data_by_iface.entry(i).or_default() += 1;
                    }
                }
            }
        }
        for (iface, count) in &data_by_iface {
            assert!(count <= interests_by_iface.get(iface).unwrap_or(&0));
        }
    }
}
