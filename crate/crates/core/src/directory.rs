//! Registry of anonymizing-router advertisements.
//!
//! A router joins the overlay by advertising its identity — namespace,
//! organization and signing-key fingerprint — together with its current
//! encryption-key certificates and auxiliary statistics (bandwidth, average
//! load, uptime). The long-lived signing key certifies the short-lived
//! encryption keys; the registry re-checks that chain on registration and
//! filters expired certificates out of listings.
//!
//! Descriptors serialize to a TLV record stream so a directory node can
//! serve its snapshot as ordinary signed content, and the CLI can dump and
//! reload it.

use thiserror::Error;

use crate::crypto::{self, PublicKey};
use crate::names::Name;
use crate::tlv::{self, Reader, TlvError};

pub const TYPE_AR_DESCRIPTOR: u16 = 0x0030;
pub const TYPE_ORGANIZATION: u16 = 0x0031;
pub const TYPE_SIGNING_KEY: u16 = 0x0032;
pub const TYPE_FINGERPRINT: u16 = 0x0033;
pub const TYPE_ENC_CERT: u16 = 0x0034;
pub const TYPE_ENC_KEY: u16 = 0x0035;
pub const TYPE_NOT_AFTER: u16 = 0x0036;
pub const TYPE_CERT_SIG: u16 = 0x0037;
pub const TYPE_BANDWIDTH: u16 = 0x0038;
pub const TYPE_AVG_LOAD: u16 = 0x0039;
pub const TYPE_UPTIME: u16 = 0x003A;

/// Context string binding certificate signatures to their purpose.
pub const CERT_CONTEXT: &[u8] = b"andana-encryption-key-certificate";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DirectoryError {
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("unknown anonymizing router")]
    UnknownAr,
    #[error("bad encoding: {0}")]
    Wire(#[from] TlvError),
}

/// Certificate over a short-lived encryption key, issued by the router's
/// long-lived signing key.
#[derive(Debug, Clone, PartialEq)]
pub struct EncryptionCert {
    pub public_key: PublicKey,
    pub not_after: u64,
    pub signature: Vec<u8>,
}

impl EncryptionCert {
    /// The byte string the certificate signature covers.
    pub fn signed_bytes(public_key: &PublicKey, not_after: u64) -> Vec<u8> {
        let mut out = CERT_CONTEXT.to_vec();
        out.extend_from_slice(&public_key.encode());
        out.extend_from_slice(&not_after.to_be_bytes());
        out
    }

    pub fn verify(&self, signing_pk: &PublicKey) -> bool {
        crypto::verify(
            signing_pk,
            &Self::signed_bytes(&self.public_key, self.not_after),
            &self.signature,
        )
    }

    pub fn is_live(&self, now: u64) -> bool {
        now <= self.not_after
    }
}

/// Advertised identity and keys of one anonymizing router.
#[derive(Debug, Clone, PartialEq)]
pub struct ArDescriptor {
    pub namespace: Name,
    pub organization: String,
    pub signing_pk: PublicKey,
    pub signing_fingerprint: [u8; 32],
    pub encryption_certs: Vec<EncryptionCert>,
    pub bandwidth_bps: u64,
    pub avg_load: f64,
    pub uptime_ms: u64,
}

impl ArDescriptor {
    /// Checks internal consistency: fingerprint matches the signing key and
    /// every encryption certificate verifies under it.
    pub fn validate(&self) -> Result<(), DirectoryError> {
        if self.signing_fingerprint != crypto::fingerprint(&self.signing_pk) {
            return Err(DirectoryError::InvalidDescriptor(
                "fingerprint does not match signing key".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.avg_load) {
            return Err(DirectoryError::InvalidDescriptor(
                "load must be a fraction".into(),
            ));
        }
        for cert in &self.encryption_certs {
            if !cert.verify(&self.signing_pk) {
                return Err(DirectoryError::InvalidDescriptor(
                    "encryption certificate does not verify".into(),
                ));
            }
        }
        Ok(())
    }

    /// Certificates still live at `now`, newest expiry first.
    pub fn live_certs(&self, now: u64) -> Vec<&EncryptionCert> {
        let mut certs: Vec<&EncryptionCert> = self
            .encryption_certs
            .iter()
            .filter(|c| c.is_live(now))
            .collect();
        certs.sort_by_key(|c| std::cmp::Reverse(c.not_after));
        certs
    }

    /// The encryption key a consumer should use right now.
    pub fn current_encryption_key(&self, now: u64) -> Option<&PublicKey> {
        self.live_certs(now).first().map(|c| &c.public_key)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut inner = Vec::new();
        self.namespace.encode_into(&mut inner);
        tlv::write_tlv(&mut inner, TYPE_ORGANIZATION, self.organization.as_bytes());
        tlv::write_tlv(&mut inner, TYPE_SIGNING_KEY, &self.signing_pk.encode());
        tlv::write_tlv(&mut inner, TYPE_FINGERPRINT, &self.signing_fingerprint);
        for cert in &self.encryption_certs {
            let mut c = Vec::new();
            tlv::write_tlv(&mut c, TYPE_ENC_KEY, &cert.public_key.encode());
            tlv::write_tlv(&mut c, TYPE_NOT_AFTER, &cert.not_after.to_be_bytes());
            tlv::write_tlv(&mut c, TYPE_CERT_SIG, &cert.signature);
            tlv::write_tlv(&mut inner, TYPE_ENC_CERT, &c);
        }
        tlv::write_tlv(&mut inner, TYPE_BANDWIDTH, &self.bandwidth_bps.to_be_bytes());
        tlv::write_tlv(&mut inner, TYPE_AVG_LOAD, &self.avg_load.to_be_bytes());
        tlv::write_tlv(&mut inner, TYPE_UPTIME, &self.uptime_ms.to_be_bytes());

        let mut out = Vec::new();
        tlv::write_tlv(&mut out, TYPE_AR_DESCRIPTOR, &inner);
        out
    }

    pub fn decode_from(reader: &mut Reader<'_>) -> Result<Self, DirectoryError> {
        let inner = reader.read_expected(TYPE_AR_DESCRIPTOR)?;
        let mut r = Reader::new(inner);
        let namespace = Name::decode_from(&mut r)
            .map_err(|e| DirectoryError::InvalidDescriptor(e.to_string()))?;
        let organization = String::from_utf8(r.read_expected(TYPE_ORGANIZATION)?.to_vec())
            .map_err(|_| DirectoryError::InvalidDescriptor("organization not UTF-8".into()))?;
        let signing_pk = PublicKey::decode(r.read_expected(TYPE_SIGNING_KEY)?)
            .map_err(|_| DirectoryError::InvalidDescriptor("bad signing key".into()))?;
        let signing_fingerprint: [u8; 32] = r
            .read_expected(TYPE_FINGERPRINT)?
            .try_into()
            .map_err(|_| DirectoryError::InvalidDescriptor("fingerprint must be 32 bytes".into()))?;

        let mut encryption_certs = Vec::new();
        while r.peek_type() == Some(TYPE_ENC_CERT) {
            let raw = r.read_expected(TYPE_ENC_CERT)?;
            let mut cr = Reader::new(raw);
            let public_key = PublicKey::decode(cr.read_expected(TYPE_ENC_KEY)?)
                .map_err(|_| DirectoryError::InvalidDescriptor("bad encryption key".into()))?;
            let not_after = u64::from_be_bytes(
                cr.read_expected(TYPE_NOT_AFTER)?
                    .try_into()
                    .map_err(|_| DirectoryError::InvalidDescriptor("bad expiry".into()))?,
            );
            let signature = cr.read_expected(TYPE_CERT_SIG)?.to_vec();
            cr.finish()?;
            encryption_certs.push(EncryptionCert {
                public_key,
                not_after,
                signature,
            });
        }

        let bandwidth_bps = u64::from_be_bytes(
            r.read_expected(TYPE_BANDWIDTH)?
                .try_into()
                .map_err(|_| DirectoryError::InvalidDescriptor("bad bandwidth".into()))?,
        );
        let avg_load = f64::from_be_bytes(
            r.read_expected(TYPE_AVG_LOAD)?
                .try_into()
                .map_err(|_| DirectoryError::InvalidDescriptor("bad load".into()))?,
        );
        let uptime_ms = u64::from_be_bytes(
            r.read_expected(TYPE_UPTIME)?
                .try_into()
                .map_err(|_| DirectoryError::InvalidDescriptor("bad uptime".into()))?,
        );
        r.finish()?;

        Ok(ArDescriptor {
            namespace,
            organization,
            signing_pk,
            signing_fingerprint,
            encryption_certs,
            bandwidth_bps,
            avg_load,
            uptime_ms,
        })
    }
}

/// Centralized registry of router advertisements.
#[derive(Debug, Default)]
pub struct Directory {
    ars: Vec<ArDescriptor>,
}

impl Directory {
    pub fn new() -> Self {
        Directory::default()
    }

    pub fn register(&mut self, desc: ArDescriptor) -> Result<(), DirectoryError> {
        desc.validate()?;
        if let Some(existing) = self
            .ars
            .iter_mut()
            .find(|d| d.namespace == desc.namespace)
        {
            *existing = desc;
        } else {
            self.ars.push(desc);
        }
        Ok(())
    }

    /// All routers with at least one live encryption certificate; expired
    /// certificates are filtered from the returned descriptors.
    pub fn list_ars(&self, now: u64) -> Vec<ArDescriptor> {
        self.ars
            .iter()
            .filter_map(|d| {
                let live: Vec<EncryptionCert> = d
                    .encryption_certs
                    .iter()
                    .filter(|c| c.is_live(now))
                    .cloned()
                    .collect();
                if live.is_empty() {
                    return None;
                }
                let mut out = d.clone();
                out.encryption_certs = live;
                Some(out)
            })
            .collect()
    }

    pub fn lookup(&self, namespace: &Name) -> Result<&ArDescriptor, DirectoryError> {
        self.ars
            .iter()
            .find(|d| &d.namespace == namespace)
            .ok_or(DirectoryError::UnknownAr)
    }

    /// Serializes the live descriptors as a TLV stream.
    pub fn snapshot(&self, now: u64) -> Vec<u8> {
        let mut out = Vec::new();
        for d in self.list_ars(now) {
            out.extend_from_slice(&d.encode());
        }
        out
    }

    pub fn load_snapshot(bytes: &[u8]) -> Result<Vec<ArDescriptor>, DirectoryError> {
        let mut reader = Reader::new(bytes);
        let mut out = Vec::new();
        while !reader.is_empty() {
            let desc = ArDescriptor::decode_from(&mut reader)?;
            desc.validate()?;
            out.push(desc);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{sign, KeyPair, KeyRole, KeyStrength};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn name(s: &str) -> Name {
        Name::parse(s).unwrap()
    }

    fn make_descriptor(seed: u64, ns: &str, org: &str) -> (ArDescriptor, KeyPair, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let signing = KeyPair::generate(KeyRole::Signing, KeyStrength::Rsa1024, &mut rng);
        let enc = KeyPair::generate(KeyRole::Encryption, KeyStrength::Rsa1024, &mut rng);
        let not_after = 60_000;
        let sig = sign(
            signing.secret(),
            &EncryptionCert::signed_bytes(&enc.public, not_after),
            &mut rng,
        )
        .unwrap();
        let desc = ArDescriptor {
            namespace: name(ns),
            organization: org.to_string(),
            signing_fingerprint: crypto::fingerprint(&signing.public),
            signing_pk: signing.public.clone(),
            encryption_certs: vec![EncryptionCert {
                public_key: enc.public.clone(),
                not_after,
                signature: sig,
            }],
            bandwidth_bps: 125_000_000,
            avg_load: 0.25,
            uptime_ms: 1_000_000,
        };
        (desc, signing, rng)
    }

    #[test]
    fn register_and_list() {
        let (desc, _, _) = make_descriptor(1, "/andana/a1", "org-a");
        let mut dir = Directory::new();
        dir.register(desc.clone()).unwrap();
        let listed = dir.list_ars(0);
        assert_eq!(listed.len(), 1);
        assert_eq!(listed[0].namespace, desc.namespace);
        assert_eq!(dir.lookup(&name("/andana/a1")).unwrap().organization, "org-a");
        assert_eq!(
            dir.lookup(&name("/andana/zz")).err(),
            Some(DirectoryError::UnknownAr)
        );
    }

    #[test]
    fn rejects_cert_signed_by_different_key() {
        let (mut desc, _, mut rng) = make_descriptor(2, "/andana/a1", "org-a");
        let rogue = KeyPair::generate(KeyRole::Signing, KeyStrength::Rsa1024, &mut rng);
        let cert = &mut desc.encryption_certs[0];
        cert.signature = sign(
            rogue.secret(),
            &EncryptionCert::signed_bytes(&cert.public_key, cert.not_after),
            &mut rng,
        )
        .unwrap();
        let mut dir = Directory::new();
        assert!(matches!(
            dir.register(desc),
            Err(DirectoryError::InvalidDescriptor(_))
        ));
    }

    #[test]
    fn rejects_fingerprint_mismatch() {
        let (mut desc, _, _) = make_descriptor(3, "/andana/a1", "org-a");
        desc.signing_fingerprint[0] ^= 0xFF;
        let mut dir = Directory::new();
        assert!(matches!(
            dir.register(desc),
            Err(DirectoryError::InvalidDescriptor(_))
        ));
    }

    #[test]
    fn expired_certs_filtered_but_ar_kept_while_one_lives() {
        let (mut desc, signing, mut rng) = make_descriptor(4, "/andana/a1", "org-a");
        let enc2 = KeyPair::generate(KeyRole::Encryption, KeyStrength::Rsa1024, &mut rng);
        let sig2 = sign(
            signing.secret(),
            &EncryptionCert::signed_bytes(&enc2.public, 10_000),
            &mut rng,
        )
        .unwrap();
        desc.encryption_certs.push(EncryptionCert {
            public_key: enc2.public.clone(),
            not_after: 10_000,
            signature: sig2,
        });
        let mut dir = Directory::new();
        dir.register(desc).unwrap();

        // Both certs live early on.
        assert_eq!(dir.list_ars(0)[0].encryption_certs.len(), 2);
        // After 10s only the 60s cert remains; the AR is still listed.
        let listed = dir.list_ars(20_000);
        assert_eq!(listed.len(), 1);
        assert_eq!(listed[0].encryption_certs.len(), 1);
        assert_eq!(listed[0].encryption_certs[0].not_after, 60_000);
        // After everything expires the AR disappears.
        assert!(dir.list_ars(120_000).is_empty());
    }

    #[test]
    fn snapshot_round_trip() {
        let (d1, _, _) = make_descriptor(5, "/andana/a1", "org-a");
        let (d2, _, _) = make_descriptor(6, "/andana/a2", "org-b");
        let mut dir = Directory::new();
        dir.register(d1.clone()).unwrap();
        dir.register(d2.clone()).unwrap();
        let snapshot = dir.snapshot(0);
        let loaded = Directory::load_snapshot(&snapshot).unwrap();
        assert_eq!(loaded, vec![d1, d2]);
    }
}
