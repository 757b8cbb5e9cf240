//! Interest and data packets: the only two packet types on the wire.
//!
//! Data packets carry a mandatory signature binding the content to its name,
//! plus the metadata any node needs to verify it: the publisher's key
//! fingerprint and a key-locator name. The signature covers
//! `name || payload || signer_id || key_locator || freshness`.
//!
//! TLV types: INTEREST=0x0010, DATA=0x0011, SCOPE=0x0012, EXCL=0x0013,
//! NONCE=0x0014, PAYLOAD=0x0020, SIG=0x0021, SIGNER=0x0022, KEYLOC=0x0023,
//! FRESH=0x0024.

use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::crypto::{self, PublicKey, SecretKey};
use crate::names::{Name, NameError};
use crate::tlv::{self, Reader, TlvError};

pub const TYPE_INTEREST: u16 = 0x0010;
pub const TYPE_DATA: u16 = 0x0011;
pub const TYPE_SCOPE: u16 = 0x0012;
pub const TYPE_EXCLUSION: u16 = 0x0013;
pub const TYPE_NONCE: u16 = 0x0014;
pub const TYPE_PAYLOAD: u16 = 0x0020;
pub const TYPE_SIGNATURE: u16 = 0x0021;
pub const TYPE_SIGNER: u16 = 0x0022;
pub const TYPE_KEY_LOCATOR: u16 = 0x0023;
pub const TYPE_FRESHNESS: u16 = 0x0024;

/// Content-store residency bound applied when a producer does not choose one.
pub const DEFAULT_FRESHNESS_MS: u64 = 4_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PacketError {
    #[error("malformed packet: {0}")]
    Malformed(String),
    #[error("bad TLV: {0}")]
    Tlv(#[from] TlvError),
    #[error("bad name: {0}")]
    Name(#[from] NameError),
}

/// Request for content by name. All four fields take part in the bytes that
/// get layer-encrypted, so nothing here is assumed public once wrapped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interest {
    pub name: Name,
    pub scope: Option<u8>,
    pub exclusion_filter: Option<Vec<u8>>,
    /// Duplicate-suppression nonce.
    pub nonce: Option<Vec<u8>>,
}

impl Interest {
    pub fn new(name: Name) -> Self {
        Interest {
            name,
            scope: None,
            exclusion_filter: None,
            nonce: None,
        }
    }

    pub fn with_nonce(mut self, nonce: Vec<u8>) -> Self {
        self.nonce = Some(nonce);
        self
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut inner = Vec::new();
        self.name.encode_into(&mut inner);
        if let Some(scope) = self.scope {
            tlv::write_tlv(&mut inner, TYPE_SCOPE, &[scope]);
        }
        if let Some(excl) = &self.exclusion_filter {
            tlv::write_tlv(&mut inner, TYPE_EXCLUSION, excl);
        }
        if let Some(nonce) = &self.nonce {
            tlv::write_tlv(&mut inner, TYPE_NONCE, nonce);
        }
        let mut out = Vec::new();
        tlv::write_tlv(&mut out, TYPE_INTEREST, &inner);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PacketError> {
        let mut outer = Reader::new(bytes);
        let inner = outer.read_expected(TYPE_INTEREST)?;
        outer.finish()?;

        let mut r = Reader::new(inner);
        let name = Name::decode_from(&mut r)?;
        let scope = match r.read_optional(TYPE_SCOPE)? {
            Some([s]) => Some(*s),
            Some(_) => return Err(PacketError::Malformed("scope must be one byte".into())),
            None => None,
        };
        let exclusion_filter = r.read_optional(TYPE_EXCLUSION)?.map(<[u8]>::to_vec);
        let nonce = r.read_optional(TYPE_NONCE)?.map(<[u8]>::to_vec);
        r.finish()?;
        Ok(Interest {
            name,
            scope,
            exclusion_filter,
            nonce,
        })
    }
}

/// Signed content packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Data {
    pub name: Name,
    pub payload: Vec<u8>,
    /// Fingerprint of the publisher's signing key.
    pub signer_id: [u8; 32],
    /// Where to fetch the verification key.
    pub key_locator: Name,
    pub freshness_ms: u64,
    pub signature: Vec<u8>,
}

impl Data {
    /// Satisfaction rule: data named `X'` satisfies an interest for `X` iff
    /// `X` is a prefix of `X'`.
    pub fn satisfies(&self, interest: &Interest) -> bool {
        interest.name.is_prefix_of(&self.name)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut inner = self.signed_portion();
        tlv::write_tlv(&mut inner, TYPE_SIGNATURE, &self.signature);
        let mut out = Vec::new();
        tlv::write_tlv(&mut out, TYPE_DATA, &inner);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PacketError> {
        let mut outer = Reader::new(bytes);
        let inner = outer.read_expected(TYPE_DATA)?;
        outer.finish()?;

        let mut r = Reader::new(inner);
        let name = Name::decode_from(&mut r)?;
        let payload = r.read_expected(TYPE_PAYLOAD)?.to_vec();
        let signer: [u8; 32] = r
            .read_expected(TYPE_SIGNER)?
            .try_into()
            .map_err(|_| PacketError::Malformed("signer id must be 32 bytes".into()))?;
        let key_locator = {
            let raw = r.read_expected(TYPE_KEY_LOCATOR)?;
            Name::decode(raw)?
        };
        let freshness_raw = r.read_expected(TYPE_FRESHNESS)?;
        let freshness_ms = u64::from_be_bytes(
            freshness_raw
                .try_into()
                .map_err(|_| PacketError::Malformed("freshness must be 8 bytes".into()))?,
        );
        let signature = r.read_expected(TYPE_SIGNATURE)?.to_vec();
        r.finish()?;
        Ok(Data {
            name,
            payload,
            signer_id: signer,
            key_locator,
            freshness_ms,
            signature,
        })
    }

    /// The byte string the signature binds.
    fn signed_portion(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.name.encode_into(&mut out);
        tlv::write_tlv(&mut out, TYPE_PAYLOAD, &self.payload);
        tlv::write_tlv(&mut out, TYPE_SIGNER, &self.signer_id);
        tlv::write_tlv(&mut out, TYPE_KEY_LOCATOR, &self.key_locator.encode());
        tlv::write_tlv(&mut out, TYPE_FRESHNESS, &self.freshness_ms.to_be_bytes());
        out
    }

    pub fn wire_len(&self) -> usize {
        self.encode().len()
    }
}

/// Builds a signed data packet. The signer id is derived from the signing
/// key, so the packet verifies under the matching public key by construction.
pub fn sign_data<R: RngCore + CryptoRng>(
    name: Name,
    payload: Vec<u8>,
    key_locator: Name,
    freshness_ms: u64,
    signer_public: &PublicKey,
    signer_secret: &SecretKey,
    rng: &mut R,
) -> Data {
    let mut data = Data {
        name,
        payload,
        signer_id: crypto::fingerprint(signer_public),
        key_locator,
        freshness_ms,
        signature: Vec::new(),
    };
    data.signature = crypto::sign(signer_secret, &data.signed_portion(), rng)
        .expect("signing key role checked by caller");
    data
}

/// True iff the signature is valid over the packet's envelope under `pk`.
pub fn verify_data(data: &Data, pk: &PublicKey) -> bool {
    crypto::verify(pk, &data.signed_portion(), &data.signature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{KeyPair, KeyRole, KeyStrength};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn name(s: &str) -> Name {
        Name::parse(s).unwrap()
    }

    fn signing_keys(seed: u64) -> (KeyPair, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let kp = KeyPair::generate(KeyRole::Signing, KeyStrength::Rsa1024, &mut rng);
        (kp, rng)
    }

    #[test]
    fn interest_round_trip_with_nonce() {
        let i = Interest::new(name("/a")).with_nonce(vec![0x01]);
        let bytes = i.encode();
        assert_eq!(Interest::decode(&bytes).unwrap(), i);
    }

    #[test]
    fn interest_round_trip_all_fields_absent() {
        let i = Interest::new(name("/x/y"));
        assert_eq!(Interest::decode(&i.encode()).unwrap(), i);
    }

    #[test]
    fn interest_round_trip_all_fields_present() {
        let i = Interest {
            name: name("/a/b"),
            scope: Some(2),
            exclusion_filter: Some(vec![9, 9]),
            nonce: Some(vec![1, 2, 3, 4]),
        };
        assert_eq!(Interest::decode(&i.encode()).unwrap(), i);
    }

    #[test]
    fn interest_decode_rejects_truncation_and_garbage() {
        let bytes = Interest::new(name("/a/b/c")).encode();
        for cut in 1..bytes.len() {
            assert!(Interest::decode(&bytes[..cut]).is_err());
        }
        let mut extended = bytes.clone();
        extended.push(0);
        assert!(Interest::decode(&extended).is_err());
    }

    #[test]
    fn sign_then_verify() {
        let (kp, mut rng) = signing_keys(1);
        let d = sign_data(
            name("/data/x"),
            b"payload".to_vec(),
            name("/keys/x"),
            DEFAULT_FRESHNESS_MS,
            &kp.public,
            kp.secret(),
            &mut rng,
        );
        assert!(verify_data(&d, &kp.public));

        let other = KeyPair::generate(KeyRole::Signing, KeyStrength::Rsa1024, &mut rng);
        assert!(!verify_data(&d, &other.public));
    }

    #[test]
    fn verify_rejects_tampered_fields() {
        let (kp, mut rng) = signing_keys(2);
        let d = sign_data(
            name("/data/x"),
            b"payload".to_vec(),
            name("/keys/x"),
            1234,
            &kp.public,
            kp.secret(),
            &mut rng,
        );
        let mut tampered = d.clone();
        tampered.name = name("/data/y");
        assert!(!verify_data(&tampered, &kp.public));

        let mut tampered = d.clone();
        tampered.freshness_ms = 1235;
        assert!(!verify_data(&tampered, &kp.public));

        let empty = sign_data(
            name("/data/empty"),
            Vec::new(),
            name("/keys/x"),
            1,
            &kp.public,
            kp.secret(),
            &mut rng,
        );
        assert!(verify_data(&empty, &kp.public));
    }

    #[test]
    fn every_single_bit_flip_of_payload_fails_verification() {
        // Exhaustive over the 128 bit positions of a 16-byte payload.
        let (kp, mut rng) = signing_keys(3);
        let payload = b"sixteen byte msg".to_vec();
        assert_eq!(payload.len(), 16);
        let d = sign_data(
            name("/data/flip"),
            payload,
            name("/keys/flip"),
            100,
            &kp.public,
            kp.secret(),
            &mut rng,
        );
        assert!(verify_data(&d, &kp.public));
        let mut failures = 0;
        for byte in 0..16 {
            for bit in 0..8 {
                let mut tampered = d.clone();
                tampered.payload[byte] ^= 1 << bit;
                if !verify_data(&tampered, &kp.public) {
                    failures += 1;
                }
            }
        }
        assert_eq!(failures, 128);
    }

    #[test]
    fn data_round_trip() {
        let (kp, mut rng) = signing_keys(4);
        let d = sign_data(
            name("/data/rt"),
            vec![7; 100],
            name("/keys/rt"),
            42,
            &kp.public,
            kp.secret(),
            &mut rng,
        );
        let decoded = Data::decode(&d.encode()).unwrap();
        assert_eq!(decoded, d);
        assert!(verify_data(&decoded, &kp.public));
    }

    #[test]
    fn satisfaction_is_prefix_based() {
        let (kp, mut rng) = signing_keys(5);
        let d = sign_data(
            name("/data/a/seg1"),
            vec![],
            name("/k"),
            1,
            &kp.public,
            kp.secret(),
            &mut rng,
        );
        assert!(d.satisfies(&Interest::new(name("/data/a"))));
        assert!(d.satisfies(&Interest::new(name("/data/a/seg1"))));
        assert!(!d.satisfies(&Interest::new(name("/data/b"))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn interest_decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..300)) {
            if let Ok(i) = Interest::decode(&bytes) {
                // Anything accepted must re-encode to the same canonical bytes.
                prop_assert_eq!(i.encode(), bytes);
            }
        }

        #[test]
        fn data_decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..300)) {
            if let Ok(d) = Data::decode(&bytes) {
                prop_assert_eq!(d.encode(), bytes);
            }
        }
    }
}
