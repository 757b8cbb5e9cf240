//! Consumer side of the anonymizing overlay.
//!
//! A consumer picks an ephemeral circuit — an ordered pair of anonymizing
//! routers from different organizations with non-nested namespaces — and
//! wraps each interest in two encryption layers. The outer layer is
//! addressed to the entry router, the inner one to the exit router, and the
//! innermost plaintext is the complete original interest (all fields).
//! Each layer also carries a symmetric key for the return path and a
//! timestamp; the inner timestamp is advanced by half the estimated round
//! trip so it is still current when it reaches the exit router.
//!
//! Returning content is unwrapped with the circuit's two symmetric keys in
//! entry-then-exit order, the entry router's signature is discarded and the
//! producer's original signature is verified.
//!
//! Layer plaintext framing, padded to a multiple of [`PAD_CLASS`] bytes
//! before encryption so ciphertext sizes fall into few classes:
//!
//! ```text
//! NEXT_NAME (NAME TLV) || CIPHERTEXT TLV || KEY(16) || TIMESTAMP(8 BE) || PAD
//! ```
//!
//! For the inner (exit) layer the CIPHERTEXT TLV carries the encoded
//! original interest rather than a further ciphertext; the two cases are
//! structurally distinguishable because ciphertexts and packets start with
//! different bytes.

use rand::{CryptoRng, Rng, RngCore};
use thiserror::Error;

use crate::crypto::{
    self, dh_agree, dh_keygen, CryptoError, DhSecret, PublicKey, SymmetricKey, SYM_KEY_LEN,
};
use crate::directory::ArDescriptor;
use crate::names::Name;
use crate::packets::{verify_data, Data, Interest};
use crate::router::{
    self, CS_COMPONENT, TYPE_CS_ERROR, TYPE_CS_SERVER_VALUE, TYPE_CS_SID,
};
use crate::tlv::{self, Reader};

/// TLV type for the opaque bytes carried inside a layer plaintext.
pub const TYPE_LAYER_CIPHERTEXT: u16 = 0x0040;

/// Inner plaintexts are padded to the next multiple of this before each
/// encryption layer, bounding what packet sizes leak.
pub const PAD_CLASS: usize = 256;

/// Bound on the encoded size of an interest accepted for wrapping.
pub const MAX_INNER_INTEREST: usize = 8_192;

/// Session identifiers are 16 random bytes, chosen by the router.
pub const SID_LEN: usize = 16;

/// Default estimate used before any round trip has been observed.
pub const DEFAULT_RTT_MS: u64 = 200;

/// Smoothing factor for the round-trip-time estimator.
pub const RTT_EWMA_ALPHA: f64 = 0.125;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConsumerError {
    #[error("no eligible router pair")]
    NoEligiblePair,
    #[error("interest too large for layered encryption")]
    InteriorTooLarge,
    #[error("circuit already used for its maximum number of interests")]
    CircuitExhausted,
    #[error("session expired or missing")]
    SessionExpired,
    #[error("handshake failed: {0}")]
    HandshakeFailed(String),
    #[error("decryption failed")]
    DecryptionFailed,
    #[error("producer signature invalid")]
    ProducerSignatureInvalid,
    #[error("malformed layer plaintext")]
    MalformedLayer,
}

impl From<CryptoError> for ConsumerError {
    fn from(_: CryptoError) -> Self {
        ConsumerError::DecryptionFailed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircuitMode {
    Asymmetric,
    Session,
}

/// Ordered pair of anonymizing routers plus the two content keys. Transports
/// one interest by default and is then discarded.
#[derive(Debug, Clone)]
pub struct EphemeralCircuit {
    pub entry: ArDescriptor,
    pub exit: ArDescriptor,
    /// Key handed to the entry router (outer layer).
    pub k1: SymmetricKey,
    /// Key handed to the exit router (inner layer).
    pub k2: SymmetricKey,
    pub created_at: u64,
    pub mode: CircuitMode,
    pub used_count: u32,
    pub max_interests: u32,
}

/// Established symmetric state with one router.
#[derive(Debug, Clone)]
pub struct SessionState {
    pub sid: [u8; SID_LEN],
    pub shared_key: SymmetricKey,
    pub ar: ArDescriptor,
    pub established_at: u64,
}

/// Two routers are circuit-compatible when they are distinct, belong to
/// different organizations, and neither namespace is a prefix of the other.
pub fn eligible_pair(a: &ArDescriptor, b: &ArDescriptor) -> bool {
    a.namespace != b.namespace
        && a.organization != b.organization
        && !a.namespace.is_prefix_of(&b.namespace)
        && !b.namespace.is_prefix_of(&a.namespace)
}

/// Selects an ephemeral circuit uniformly at random among eligible ordered
/// pairs, by rejection sampling over the listing.
pub fn select_circuit<R: RngCore + CryptoRng>(
    listing: &[ArDescriptor],
    mode: CircuitMode,
    now: u64,
    rng: &mut R,
) -> Result<EphemeralCircuit, ConsumerError> {
    let any_eligible = listing
        .iter()
        .enumerate()
        .any(|(i, a)| listing.iter().enumerate().any(|(j, b)| i != j && eligible_pair(a, b)));
    if !any_eligible {
        return Err(ConsumerError::NoEligiblePair);
    }
    loop {
        let i = rng.gen_range(0..listing.len());
        let j = rng.gen_range(0..listing.len());
        if i == j || !eligible_pair(&listing[i], &listing[j]) {
            continue;
        }
        return Ok(EphemeralCircuit {
            entry: listing[i].clone(),
            exit: listing[j].clone(),
            k1: SymmetricKey::random(rng),
            k2: SymmetricKey::random(rng),
            created_at: now,
            mode,
            used_count: 0,
            max_interests: 1,
        });
    }
}

/// How one layer of the onion is keyed.
pub enum LayerSpec<'a> {
    /// Encrypt under the router's advertised public key.
    Asymmetric { key: &'a PublicKey },
    /// Encrypt under an established session key, tagged by cleartext sid.
    Session { state: &'a SessionState },
}

fn build_layer_plaintext(next_name: &Name, body: &[u8], key: &SymmetricKey, ts_ms: u64) -> Vec<u8> {
    let mut out = Vec::new();
    next_name.encode_into(&mut out);
    tlv::write_tlv(&mut out, TYPE_LAYER_CIPHERTEXT, body);
    out.extend_from_slice(&key.0);
    out.extend_from_slice(&ts_ms.to_be_bytes());
    let padded = out.len().div_ceil(PAD_CLASS) * PAD_CLASS;
    out.resize(padded, 0);
    out
}

/// Parsed layer plaintext as seen by a router peeling one layer.
pub struct Layer {
    pub next_name: Name,
    pub body: Vec<u8>,
    pub key: SymmetricKey,
    pub timestamp_ms: u64,
}

pub fn parse_layer_plaintext(bytes: &[u8]) -> Result<Layer, ConsumerError> {
    let mut r = Reader::new(bytes);
    let next_name = Name::decode_from(&mut r).map_err(|_| ConsumerError::MalformedLayer)?;
    let body = r
        .read_expected(TYPE_LAYER_CIPHERTEXT)
        .map_err(|_| ConsumerError::MalformedLayer)?
        .to_vec();
    let fixed = r.remaining();
    if fixed.len() < SYM_KEY_LEN + 8 {
        return Err(ConsumerError::MalformedLayer);
    }
    let key = SymmetricKey::from_bytes(&fixed[..SYM_KEY_LEN]).unwrap();
    let timestamp_ms = u64::from_be_bytes(fixed[SYM_KEY_LEN..SYM_KEY_LEN + 8].try_into().unwrap());
    // Everything after the timestamp is padding.
    Ok(Layer {
        next_name,
        body,
        key,
        timestamp_ms,
    })
}

fn encrypt_layer<R: RngCore + CryptoRng>(
    spec: &LayerSpec<'_>,
    plaintext: &[u8],
    rng: &mut R,
) -> Result<Vec<u8>, ConsumerError> {
    match spec {
        LayerSpec::Asymmetric { key } => Ok(crypto::pke_encrypt(key, plaintext, rng)?),
        LayerSpec::Session { state } => Ok(crypto::sym_encrypt(&state.shared_key, plaintext, rng)?),
    }
}

/// Name the wire interest carries for one hop: the router's namespace, the
/// cleartext sid when the layer is session-keyed, then the ciphertext as the
/// single trailing component.
fn hop_name(ar_namespace: &Name, spec: &LayerSpec<'_>, ciphertext: &[u8]) -> Name {
    let mut name = ar_namespace.clone();
    if let LayerSpec::Session { state } = spec {
        name = name.append(state.sid.to_vec()).expect("sid component fits");
    }
    name.append(ciphertext.to_vec()).expect("ciphertext component fits")
}

/// Keying and addressing for both hops of a circuit.
pub struct CircuitLegs<'a> {
    pub entry_ns: &'a Name,
    pub exit_ns: &'a Name,
    pub entry: LayerSpec<'a>,
    pub exit: LayerSpec<'a>,
    pub k1: &'a SymmetricKey,
    pub k2: &'a SymmetricKey,
}

/// Wraps `interest` for a two-hop circuit with explicit per-leg keying.
/// Returns the wire interest addressed to the entry router.
pub fn encrypt_interest_layers<R: RngCore + CryptoRng>(
    legs: &CircuitLegs<'_>,
    interest: &Interest,
    now_ms: u64,
    rtt_estimate_ms: u64,
    rng: &mut R,
) -> Result<Interest, ConsumerError> {
    let encoded = interest.encode();
    if encoded.len() > MAX_INNER_INTEREST {
        return Err(ConsumerError::InteriorTooLarge);
    }

    // Inner (exit) layer: carries the whole original interest. Its timestamp
    // is advanced by half the estimated round trip.
    let inner_plain = build_layer_plaintext(
        &interest.name,
        &encoded,
        legs.k2,
        now_ms + rtt_estimate_ms / 2,
    );
    let inner_ct = encrypt_layer(&legs.exit, &inner_plain, rng)?;

    // The name the entry router must rebuild for the inner interest: exit
    // namespace (plus sid for a session leg), with the ciphertext appended
    // by the router.
    let mut inner_next = legs.exit_ns.clone();
    if let LayerSpec::Session { state } = &legs.exit {
        inner_next = inner_next.append(state.sid.to_vec()).expect("sid fits");
    }

    let outer_plain = build_layer_plaintext(&inner_next, &inner_ct, legs.k1, now_ms);
    let outer_ct = encrypt_layer(&legs.entry, &outer_plain, rng)?;

    Ok(Interest::new(hop_name(legs.entry_ns, &legs.entry, &outer_ct)))
}

/// Asymmetric flavor: both layers under the routers' advertised public keys.
pub fn encrypt_interest_asymmetric<R: RngCore + CryptoRng>(
    circuit: &mut EphemeralCircuit,
    interest: &Interest,
    now_ms: u64,
    rtt_estimate_ms: u64,
    rng: &mut R,
) -> Result<Interest, ConsumerError> {
    if circuit.used_count >= circuit.max_interests {
        return Err(ConsumerError::CircuitExhausted);
    }
    let entry_key = circuit
        .entry
        .current_encryption_key(now_ms)
        .ok_or(ConsumerError::NoEligiblePair)?
        .clone();
    let exit_key = circuit
        .exit
        .current_encryption_key(now_ms)
        .ok_or(ConsumerError::NoEligiblePair)?
        .clone();
    let out = encrypt_interest_layers(
        &CircuitLegs {
            entry_ns: &circuit.entry.namespace,
            exit_ns: &circuit.exit.namespace,
            entry: LayerSpec::Asymmetric { key: &entry_key },
            exit: LayerSpec::Asymmetric { key: &exit_key },
            k1: &circuit.k1,
            k2: &circuit.k2,
        },
        interest,
        now_ms,
        rtt_estimate_ms,
        rng,
    )?;
    circuit.used_count += 1;
    Ok(out)
}

/// Session flavor: both layers under pre-established symmetric keys, each
/// tagged with its cleartext session identifier.
pub fn encrypt_interest_session<R: RngCore + CryptoRng>(
    circuit: &mut EphemeralCircuit,
    sessions: (&SessionState, &SessionState),
    session_ttl_ms: u64,
    interest: &Interest,
    now_ms: u64,
    rtt_estimate_ms: u64,
    rng: &mut R,
) -> Result<Interest, ConsumerError> {
    if circuit.used_count >= circuit.max_interests {
        return Err(ConsumerError::CircuitExhausted);
    }
    let (entry_sess, exit_sess) = sessions;
    for s in [entry_sess, exit_sess] {
        if now_ms.saturating_sub(s.established_at) > session_ttl_ms {
            return Err(ConsumerError::SessionExpired);
        }
    }
    let out = encrypt_interest_layers(
        &CircuitLegs {
            entry_ns: &circuit.entry.namespace,
            exit_ns: &circuit.exit.namespace,
            entry: LayerSpec::Session { state: entry_sess },
            exit: LayerSpec::Session { state: exit_sess },
            k1: &circuit.k1,
            k2: &circuit.k2,
        },
        interest,
        now_ms,
        rtt_estimate_ms,
        rng,
    )?;
    circuit.used_count += 1;
    Ok(out)
}

/// Unwraps content returned by the entry router: decrypt with k1, then k2,
/// decode the producer's original packet and verify its signature.
pub fn decapsulate_content(
    circuit: &EphemeralCircuit,
    data_from_entry: &Data,
    producer_pk: &PublicKey,
) -> Result<Data, ConsumerError> {
    let middle = crypto::sym_decrypt(&circuit.k1, &data_from_entry.payload)?;
    let original_bytes = crypto::sym_decrypt(&circuit.k2, &middle)?;
    let original =
        Data::decode(&original_bytes).map_err(|_| ConsumerError::DecryptionFailed)?;
    if !verify_data(&original, producer_pk) {
        return Err(ConsumerError::ProducerSignatureInvalid);
    }
    Ok(original)
}

// ---------------------------------------------------------------------------
// Session establishment (consumer half of the 2-packet handshake).

pub enum HandshakeMode {
    Dh,
    EncryptToKey,
}

/// Consumer-side secret kept between sending the handshake interest and
/// receiving the router's reply.
pub struct HandshakePending {
    secret: HandshakeSecret,
    ar: ArDescriptor,
}

enum HandshakeSecret {
    Dh(DhSecret),
    Wrapped(SymmetricKey),
}

/// Builds the `createsession` interest for a router. The returned pending
/// state completes the handshake when the signed reply arrives.
pub fn begin_session<R: RngCore + CryptoRng>(
    ar: &ArDescriptor,
    mode: HandshakeMode,
    now_ms: u64,
    rng: &mut R,
) -> Result<(Interest, HandshakePending), ConsumerError> {
    let (payload, secret) = match mode {
        HandshakeMode::Dh => {
            let (public, secret) = dh_keygen(rng);
            (
                router::encode_handshake_dh(&public.0),
                HandshakeSecret::Dh(secret),
            )
        }
        HandshakeMode::EncryptToKey => {
            let fresh = SymmetricKey::random(rng);
            let ar_key = ar
                .current_encryption_key(now_ms)
                .ok_or(ConsumerError::NoEligiblePair)?;
            let wrapped = crypto::pke_encrypt(ar_key, &fresh.0, rng)?;
            (
                router::encode_handshake_wrap(&wrapped),
                HandshakeSecret::Wrapped(fresh),
            )
        }
    };
    let name = ar
        .namespace
        .append(CS_COMPONENT.to_vec())
        .and_then(|n| n.append(payload))
        .map_err(|_| ConsumerError::HandshakeFailed("name too long".into()))?;
    Ok((
        Interest::new(name),
        HandshakePending {
            secret,
            ar: ar.clone(),
        },
    ))
}

/// Completes the handshake from the router's signed reply.
pub fn complete_session(
    pending: HandshakePending,
    reply: &Data,
    now_ms: u64,
) -> Result<SessionState, ConsumerError> {
    if !verify_data(reply, &pending.ar.signing_pk) {
        return Err(ConsumerError::HandshakeFailed(
            "reply signature invalid".into(),
        ));
    }
    let mut r = Reader::new(&reply.payload);
    if r.peek_type() == Some(TYPE_CS_ERROR) {
        let msg = r.read_expected(TYPE_CS_ERROR).unwrap_or(b"");
        return Err(ConsumerError::HandshakeFailed(
            String::from_utf8_lossy(msg).into_owned(),
        ));
    }
    let sid: [u8; SID_LEN] = r
        .read_expected(TYPE_CS_SID)
        .map_err(|_| ConsumerError::HandshakeFailed("missing sid".into()))?
        .try_into()
        .map_err(|_| ConsumerError::HandshakeFailed("bad sid length".into()))?;
    let shared_key = match pending.secret {
        HandshakeSecret::Dh(secret) => {
            let server_value = r
                .read_expected(TYPE_CS_SERVER_VALUE)
                .map_err(|_| ConsumerError::HandshakeFailed("missing server value".into()))?;
            dh_agree(&secret, &crypto::DhPublic(server_value.to_vec()))
                .map_err(|_| ConsumerError::HandshakeFailed("bad server value".into()))?
        }
        HandshakeSecret::Wrapped(key) => key,
    };
    Ok(SessionState {
        sid,
        shared_key,
        ar: pending.ar,
        established_at: now_ms,
    })
}

/// Exponentially weighted RTT estimator (ms).
#[derive(Debug, Clone)]
pub struct RttEstimator {
    estimate_ms: f64,
}

impl Default for RttEstimator {
    fn default() -> Self {
        RttEstimator {
            estimate_ms: DEFAULT_RTT_MS as f64,
        }
    }
}

impl RttEstimator {
    pub fn observe(&mut self, sample_ms: u64) {
        self.estimate_ms =
            (1.0 - RTT_EWMA_ALPHA) * self.estimate_ms + RTT_EWMA_ALPHA * sample_ms as f64;
    }

    pub fn estimate_ms(&self) -> u64 {
        self.estimate_ms.round() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{sign, KeyPair, KeyRole, KeyStrength};
    use crate::directory::EncryptionCert;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::collections::HashMap;

    fn name(s: &str) -> Name {
        Name::parse(s).unwrap()
    }

    pub(crate) fn descriptor_with_keys(
        ns: &str,
        org: &str,
        rng: &mut ChaCha20Rng,
    ) -> (ArDescriptor, KeyPair, KeyPair) {
        let signing = KeyPair::generate(KeyRole::Signing, KeyStrength::Rsa1024, rng);
        let enc = KeyPair::generate(KeyRole::Encryption, KeyStrength::Rsa1024, rng);
        let not_after = u64::MAX;
        let sig = sign(
            signing.secret(),
            &EncryptionCert::signed_bytes(&enc.public, not_after),
            rng,
        )
        .unwrap();
        let desc = ArDescriptor {
            namespace: name(ns),
            organization: org.into(),
            signing_fingerprint: crypto::fingerprint(&signing.public),
            signing_pk: signing.public.clone(),
            encryption_certs: vec![EncryptionCert {
                public_key: enc.public.clone(),
                not_after,
                signature: sig,
            }],
            bandwidth_bps: 1,
            avg_load: 0.0,
            uptime_ms: 0,
        };
        (desc, signing, enc)
    }

    #[test]
    fn two_ars_yield_one_of_two_ordered_pairs() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let (a, _, _) = descriptor_with_keys("/andana/a1", "org-a", &mut rng);
        let (b, _, _) = descriptor_with_keys("/andana/a2", "org-b", &mut rng);
        let listing = vec![a.clone(), b.clone()];
        for _ in 0..20 {
            let c = select_circuit(&listing, CircuitMode::Asymmetric, 0, &mut rng).unwrap();
            assert_ne!(c.entry.namespace, c.exit.namespace);
            assert!(
                (c.entry.namespace == a.namespace && c.exit.namespace == b.namespace)
                    || (c.entry.namespace == b.namespace && c.exit.namespace == a.namespace)
            );
        }
    }

    #[test]
    fn same_organization_everywhere_is_ineligible() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (a, _, _) = descriptor_with_keys("/andana/a1", "org-a", &mut rng);
        let (b, _, _) = descriptor_with_keys("/andana/a2", "org-a", &mut rng);
        let (c, _, _) = descriptor_with_keys("/andana/a3", "org-a", &mut rng);
        assert_eq!(
            select_circuit(&[a, b, c], CircuitMode::Asymmetric, 0, &mut rng).err(),
            Some(ConsumerError::NoEligiblePair)
        );
    }

    #[test]
    fn nested_namespaces_are_ineligible() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let (a, _, _) = descriptor_with_keys("/andana/a1", "org-a", &mut rng);
        let (b, _, _) = descriptor_with_keys("/andana/a1/sub", "org-b", &mut rng);
        assert!(!eligible_pair(&a, &b));
        assert!(!eligible_pair(&b, &a));
    }

    #[test]
    fn selection_uniform_over_valid_pairs() {
        // 4 routers in 2 organizations: 8 valid ordered pairs. The empirical
        // distribution over 10^5 draws must sit within 5% of uniform.
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let descs: Vec<ArDescriptor> = [
            ("/andana/a1", "org-a"),
            ("/andana/a2", "org-a"),
            ("/andana/b1", "org-b"),
            ("/andana/b2", "org-b"),
        ]
        .iter()
        .map(|(ns, org)| descriptor_with_keys(ns, org, &mut rng).0)
        .collect();

        let mut valid = Vec::new();
        for (i, a) in descs.iter().enumerate() {
            for (j, b) in descs.iter().enumerate() {
                if i != j && eligible_pair(a, b) {
                    valid.push((a.namespace.clone(), b.namespace.clone()));
                }
            }
        }
        assert_eq!(valid.len(), 8);

        let mut counts: HashMap<(String, String), u64> = HashMap::new();
        let draws = 100_000;
        for _ in 0..draws {
            let c = select_circuit(&descs, CircuitMode::Asymmetric, 0, &mut rng).unwrap();
            *counts
                .entry((c.entry.namespace.to_string(), c.exit.namespace.to_string()))
                .or_default() += 1;
        }
        assert_eq!(counts.len(), 8);
        let expected = draws as f64 / 8.0;
        for (_, n) in counts {
            let deviation = (n as f64 - expected).abs() / expected;
            assert!(deviation < 0.05, "pair frequency off by {deviation}");
        }
    }

    #[test]
    fn inner_timestamp_is_outer_plus_half_rtt() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let (entry, _, entry_enc) = descriptor_with_keys("/andana/a1", "org-a", &mut rng);
        let (exit, _, exit_enc) = descriptor_with_keys("/andana/a2", "org-b", &mut rng);
        let mut circuit =
            select_circuit(&[entry, exit], CircuitMode::Asymmetric, 0, &mut rng).unwrap();
        let interest = Interest::new(name("/data/p/file/0"));
        let now = 10_000;
        let rtt = 200;
        let wire = encrypt_interest_asymmetric(&mut circuit, &interest, now, rtt, &mut rng).unwrap();

        // Peel by hand with the routers' secret keys.
        let entry_sk = if circuit.entry.namespace == name("/andana/a1") {
            &entry_enc
        } else {
            &exit_enc
        };
        let exit_sk = if circuit.entry.namespace == name("/andana/a1") {
            &exit_enc
        } else {
            &entry_enc
        };
        let outer_ct = wire.name.components().last().unwrap().clone();
        let outer = parse_layer_plaintext(&crypto::pke_decrypt(entry_sk.secret(), &outer_ct).unwrap())
            .unwrap();
        assert_eq!(outer.timestamp_ms, now);
        let inner = parse_layer_plaintext(&crypto::pke_decrypt(exit_sk.secret(), &outer.body).unwrap())
            .unwrap();
        assert_eq!(inner.timestamp_ms, now + rtt / 2);
        // The innermost body is the complete original interest.
        assert_eq!(Interest::decode(&inner.body).unwrap(), interest);
    }

    #[test]
    fn two_encryptions_differ_on_same_circuit() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let (entry, _, _) = descriptor_with_keys("/andana/a1", "org-a", &mut rng);
        let (exit, _, _) = descriptor_with_keys("/andana/a2", "org-b", &mut rng);
        let mut circuit =
            select_circuit(&[entry, exit], CircuitMode::Asymmetric, 0, &mut rng).unwrap();
        circuit.max_interests = 2;
        let interest = Interest::new(name("/data/x"));
        let w1 = encrypt_interest_asymmetric(&mut circuit, &interest, 0, 200, &mut rng).unwrap();
        let w2 = encrypt_interest_asymmetric(&mut circuit, &interest, 0, 200, &mut rng).unwrap();
        assert_ne!(w1.encode(), w2.encode());
    }

    #[test]
    fn circuit_is_single_use_by_default() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let (entry, _, _) = descriptor_with_keys("/andana/a1", "org-a", &mut rng);
        let (exit, _, _) = descriptor_with_keys("/andana/a2", "org-b", &mut rng);
        let mut circuit =
            select_circuit(&[entry, exit], CircuitMode::Asymmetric, 0, &mut rng).unwrap();
        let interest = Interest::new(name("/data/x"));
        encrypt_interest_asymmetric(&mut circuit, &interest, 0, 200, &mut rng).unwrap();
        assert_eq!(
            encrypt_interest_asymmetric(&mut circuit, &interest, 1, 200, &mut rng).err(),
            Some(ConsumerError::CircuitExhausted)
        );
    }

    #[test]
    fn oversized_interest_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let (entry, _, _) = descriptor_with_keys("/andana/a1", "org-a", &mut rng);
        let (exit, _, _) = descriptor_with_keys("/andana/a2", "org-b", &mut rng);
        let mut circuit =
            select_circuit(&[entry, exit], CircuitMode::Asymmetric, 0, &mut rng).unwrap();
        let mut interest = Interest::new(name("/data/x"));
        interest.exclusion_filter = Some(vec![0u8; MAX_INNER_INTEREST]);
        assert_eq!(
            encrypt_interest_asymmetric(&mut circuit, &interest, 0, 200, &mut rng).err(),
            Some(ConsumerError::InteriorTooLarge)
        );
    }

    #[test]
    fn rtt_estimator_converges() {
        let mut est = RttEstimator::default();
        assert_eq!(est.estimate_ms(), DEFAULT_RTT_MS);
        for _ in 0..200 {
            est.observe(60);
        }
        assert!((est.estimate_ms() as i64 - 60).abs() <= 1);
    }
}
