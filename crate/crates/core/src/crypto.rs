//! Cryptographic primitives backing the overlay.
//!
//! Public-key encryption is a hybrid scheme: a fresh AES-128 key and
//! HMAC-SHA-256 key are wrapped under RSA-OAEP, the body is AES-CTR and the
//! whole frame is authenticated with encrypt-then-MAC. Decryption verifies
//! the MAC before releasing anything and collapses every failure mode into
//! one [`CryptoError::DecryptionFailed`], which is the robustness contract
//! the anonymizing routers rely on: a ciphertext modified in transit, or one
//! not encrypted under the router's key, fails indistinguishably.
//!
//! Ciphertext framing (identical for the public-key and symmetric flavors):
//!
//! ```text
//! VERSION(1 byte = 0x01) || wrapped-keys-len(2 bytes BE) || wrapped-keys
//!     || IV(16) || body || MAC(32)
//! ```
//!
//! The symmetric flavor has an empty wrapped-keys field and derives its
//! cipher and MAC keys from a 16-byte secret. Signatures are RSA-PSS over
//! SHA-256. Key agreement is classic Diffie-Hellman in the 2048-bit MODP
//! group, with the shared secret run through SHA-256 and truncated to the
//! 128-bit symmetric key size.

use aes::cipher::{KeyIvInit, StreamCipher};
use hmac::{Hmac, Mac};
use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};
use rsa::pkcs1::{DecodeRsaPublicKey, EncodeRsaPublicKey};
use rsa::pss::{Signature, SigningKey, VerifyingKey};
use rsa::signature::{RandomizedSigner, SignatureEncoding, Verifier};
use rsa::traits::PublicKeyParts;
use rsa::{Oaep, RsaPrivateKey, RsaPublicKey};
use sha2::{Digest, Sha256};
use thiserror::Error;

type Aes128Ctr = ctr::Ctr128BE<aes::Aes128>;
type HmacSha256 = Hmac<Sha256>;

/// Symmetric keys are κ/8 bytes with κ = 128.
pub const SYM_KEY_LEN: usize = 16;
const IV_LEN: usize = 16;
const MAC_LEN: usize = 32;
const CIPHERTEXT_VERSION: u8 = 0x01;
/// Wrapped under OAEP: 16-byte AES key followed by a 32-byte MAC key.
const WRAPPED_LEN: usize = 48;
pub const MAX_PLAINTEXT: usize = 1 << 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CryptoError {
    /// Uniform failure for wrong key, MAC mismatch or malformed ciphertext.
    #[error("decryption failed")]
    DecryptionFailed,
    #[error("invalid Diffie-Hellman public value")]
    InvalidPublicValue,
    #[error("key role does not permit this operation")]
    WrongKeyRole,
    #[error("plaintext exceeds {MAX_PLAINTEXT} bytes")]
    PlaintextTooLarge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeyRole {
    Encryption,
    Signing,
}

/// RSA modulus size. 1024-bit keys match the measurements the overlay's
/// defaults are calibrated against; 2048 is available as a knob.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyStrength {
    Rsa1024,
    Rsa2048,
}

impl KeyStrength {
    fn bits(self) -> usize {
        match self {
            KeyStrength::Rsa1024 => 1024,
            KeyStrength::Rsa2048 => 2048,
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct PublicKey {
    role: KeyRole,
    rsa: RsaPublicKey,
}

impl std::fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PublicKey({:?}, {} bits)", self.role, self.rsa.size() * 8)
    }
}

impl PublicKey {
    pub fn role(&self) -> KeyRole {
        self.role
    }

    /// Canonical encoding: one role byte followed by the PKCS#1 DER body.
    pub fn encode(&self) -> Vec<u8> {
        let der = self
            .rsa
            .to_pkcs1_der()
            .expect("RSA public key DER encoding cannot fail");
        let mut out = Vec::with_capacity(1 + der.as_bytes().len());
        out.push(match self.role {
            KeyRole::Encryption => 0x01,
            KeyRole::Signing => 0x02,
        });
        out.extend_from_slice(der.as_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CryptoError> {
        let (&role, der) = bytes.split_first().ok_or(CryptoError::DecryptionFailed)?;
        let role = match role {
            0x01 => KeyRole::Encryption,
            0x02 => KeyRole::Signing,
            _ => return Err(CryptoError::DecryptionFailed),
        };
        let rsa = RsaPublicKey::from_pkcs1_der(der).map_err(|_| CryptoError::DecryptionFailed)?;
        Ok(PublicKey { role, rsa })
    }
}

#[derive(Clone)]
pub struct SecretKey {
    role: KeyRole,
    rsa: RsaPrivateKey,
}

/// Keypair plus the expiry carried by short-lived encryption keys. Signing
/// keys are long-lived and never carry an expiry.
#[derive(Clone)]
pub struct KeyPair {
    pub public: PublicKey,
    secret: SecretKey,
    pub not_after: Option<u64>,
}

impl KeyPair {
    pub fn generate<R: RngCore + CryptoRng>(
        role: KeyRole,
        strength: KeyStrength,
        rng: &mut R,
    ) -> Self {
        let rsa = RsaPrivateKey::new(rng, strength.bits()).expect("RSA key generation");
        let public = PublicKey {
            role,
            rsa: rsa.to_public_key(),
        };
        KeyPair {
            public,
            secret: SecretKey { role, rsa },
            not_after: None,
        }
    }

    pub fn with_not_after(mut self, t: u64) -> Self {
        self.not_after = Some(t);
        self
    }

    pub fn secret(&self) -> &SecretKey {
        &self.secret
    }
}

/// 16-byte symmetric key, the κ = 128 security-parameter size.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymmetricKey(pub [u8; SYM_KEY_LEN]);

impl std::fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SymmetricKey(..)")
    }
}

impl SymmetricKey {
    pub fn random<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut k = [0u8; SYM_KEY_LEN];
        rng.fill_bytes(&mut k);
        SymmetricKey(k)
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        let arr: [u8; SYM_KEY_LEN] = bytes.try_into().ok()?;
        Some(SymmetricKey(arr))
    }
}

/// SHA-256 of the canonical public-key encoding.
pub fn fingerprint(pk: &PublicKey) -> [u8; 32] {
    fingerprint_bytes(&pk.encode())
}

pub fn fingerprint_bytes(encoded_key: &[u8]) -> [u8; 32] {
    Sha256::digest(encoded_key).into()
}

// ---------------------------------------------------------------------------
// Hybrid public-key encryption.

pub fn pke_encrypt<R: RngCore + CryptoRng>(
    pk: &PublicKey,
    plaintext: &[u8],
    rng: &mut R,
) -> Result<Vec<u8>, CryptoError> {
    if pk.role != KeyRole::Encryption {
        return Err(CryptoError::WrongKeyRole);
    }
    if plaintext.len() > MAX_PLAINTEXT {
        return Err(CryptoError::PlaintextTooLarge);
    }
    let mut wrapped_plain = [0u8; WRAPPED_LEN];
    rng.fill_bytes(&mut wrapped_plain);
    let aes_key: [u8; 16] = wrapped_plain[..16].try_into().unwrap();
    let mac_key: [u8; 32] = wrapped_plain[16..].try_into().unwrap();

    let wrapped = pk
        .rsa
        .encrypt(rng, Oaep::new::<Sha256>(), &wrapped_plain)
        .expect("OAEP encryption of the fixed-size key block");

    Ok(seal_frame(&wrapped, &aes_key, &mac_key, plaintext, rng))
}

pub fn pke_decrypt(sk: &SecretKey, ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if sk.role != KeyRole::Encryption {
        return Err(CryptoError::WrongKeyRole);
    }
    let frame = parse_frame(ciphertext)?;
    let wrapped_plain = sk
        .rsa
        .decrypt(Oaep::new::<Sha256>(), frame.wrapped)
        .map_err(|_| CryptoError::DecryptionFailed)?;
    if wrapped_plain.len() != WRAPPED_LEN {
        return Err(CryptoError::DecryptionFailed);
    }
    let aes_key: [u8; 16] = wrapped_plain[..16].try_into().unwrap();
    let mac_key: [u8; 32] = wrapped_plain[16..].try_into().unwrap();
    open_frame(ciphertext, &frame, &aes_key, &mac_key)
}

// ---------------------------------------------------------------------------
// Symmetric authenticated encryption (same frame, direct keying).

pub fn sym_encrypt<R: RngCore + CryptoRng>(
    key: &SymmetricKey,
    plaintext: &[u8],
    rng: &mut R,
) -> Result<Vec<u8>, CryptoError> {
    if plaintext.len() > MAX_PLAINTEXT {
        return Err(CryptoError::PlaintextTooLarge);
    }
    let (aes_key, mac_key) = derive_sym_keys(key);
    Ok(seal_frame(&[], &aes_key, &mac_key, plaintext, rng))
}

pub fn sym_decrypt(key: &SymmetricKey, ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
    let frame = parse_frame(ciphertext)?;
    if !frame.wrapped.is_empty() {
        return Err(CryptoError::DecryptionFailed);
    }
    let (aes_key, mac_key) = derive_sym_keys(key);
    open_frame(ciphertext, &frame, &aes_key, &mac_key)
}

fn derive_sym_keys(key: &SymmetricKey) -> ([u8; 16], [u8; 32]) {
    let enc: [u8; 32] = Sha256::new_with_prefix([0x01])
        .chain_update(key.0)
        .finalize()
        .into();
    let mac: [u8; 32] = Sha256::new_with_prefix([0x02])
        .chain_update(key.0)
        .finalize()
        .into();
    (enc[..16].try_into().unwrap(), mac)
}

struct Frame<'a> {
    wrapped: &'a [u8],
    iv: [u8; IV_LEN],
    body: &'a [u8],
    mac: &'a [u8],
    mac_input_len: usize,
}

fn seal_frame<R: RngCore + CryptoRng>(
    wrapped: &[u8],
    aes_key: &[u8; 16],
    mac_key: &[u8; 32],
    plaintext: &[u8],
    rng: &mut R,
) -> Vec<u8> {
    let mut iv = [0u8; IV_LEN];
    rng.fill_bytes(&mut iv);

    let mut out = Vec::with_capacity(1 + 2 + wrapped.len() + IV_LEN + plaintext.len() + MAC_LEN);
    out.push(CIPHERTEXT_VERSION);
    out.extend_from_slice(&(wrapped.len() as u16).to_be_bytes());
    out.extend_from_slice(wrapped);
    out.extend_from_slice(&iv);

    let body_start = out.len();
    out.extend_from_slice(plaintext);
    let mut cipher = Aes128Ctr::new(aes_key.into(), (&iv).into());
    cipher.apply_keystream(&mut out[body_start..]);

    let mut mac = <HmacSha256 as Mac>::new_from_slice(mac_key).unwrap();
    mac.update(&out);
    let tag = mac.finalize().into_bytes();
    out.extend_from_slice(&tag);
    out
}

fn parse_frame(ciphertext: &[u8]) -> Result<Frame<'_>, CryptoError> {
    if ciphertext.len() < 1 + 2 + IV_LEN + MAC_LEN {
        return Err(CryptoError::DecryptionFailed);
    }
    if ciphertext[0] != CIPHERTEXT_VERSION {
        return Err(CryptoError::DecryptionFailed);
    }
    let wrapped_len = u16::from_be_bytes([ciphertext[1], ciphertext[2]]) as usize;
    let header_end = 3 + wrapped_len;
    if ciphertext.len() < header_end + IV_LEN + MAC_LEN {
        return Err(CryptoError::DecryptionFailed);
    }
    let wrapped = &ciphertext[3..header_end];
    let iv: [u8; IV_LEN] = ciphertext[header_end..header_end + IV_LEN]
        .try_into()
        .unwrap();
    let body = &ciphertext[header_end + IV_LEN..ciphertext.len() - MAC_LEN];
    let mac = &ciphertext[ciphertext.len() - MAC_LEN..];
    Ok(Frame {
        wrapped,
        iv,
        body,
        mac,
        mac_input_len: ciphertext.len() - MAC_LEN,
    })
}

fn open_frame(
    ciphertext: &[u8],
    frame: &Frame<'_>,
    aes_key: &[u8; 16],
    mac_key: &[u8; 32],
) -> Result<Vec<u8>, CryptoError> {
    let mut mac = <HmacSha256 as Mac>::new_from_slice(mac_key).unwrap();
    mac.update(&ciphertext[..frame.mac_input_len]);
    mac.verify_slice(frame.mac)
        .map_err(|_| CryptoError::DecryptionFailed)?;

    let mut plaintext = frame.body.to_vec();
    let mut cipher = Aes128Ctr::new(aes_key.into(), (&frame.iv).into());
    cipher.apply_keystream(&mut plaintext);
    Ok(plaintext)
}

// ---------------------------------------------------------------------------
// Signatures (RSA-PSS over SHA-256).

pub fn sign<R: RngCore + CryptoRng>(
    sk: &SecretKey,
    message: &[u8],
    rng: &mut R,
) -> Result<Vec<u8>, CryptoError> {
    if sk.role != KeyRole::Signing {
        return Err(CryptoError::WrongKeyRole);
    }
    let signing = SigningKey::<Sha256>::new(sk.rsa.clone());
    Ok(signing.sign_with_rng(rng, message).to_vec())
}

pub fn verify(pk: &PublicKey, message: &[u8], signature: &[u8]) -> bool {
    if pk.role != KeyRole::Signing {
        return false;
    }
    let Ok(sig) = Signature::try_from(signature) else {
        return false;
    };
    let verifying = VerifyingKey::<Sha256>::new(pk.rsa.clone());
    verifying.verify(message, &sig).is_ok()
}

// ---------------------------------------------------------------------------
// Diffie-Hellman key agreement (2048-bit MODP group, generator 2).

/// RFC 3526 group 14 prime.
const MODP_2048_PRIME_HEX: &str = "\
FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74\
020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437\
4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED\
EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05\
98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB\
9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B\
E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718\
3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF";

const DH_EXPONENT_BITS: u64 = 256;
const DH_VALUE_LEN: usize = 256;

fn modp_prime() -> BigUint {
    BigUint::parse_bytes(MODP_2048_PRIME_HEX.as_bytes(), 16).unwrap()
}

#[derive(Clone, PartialEq, Eq)]
pub struct DhPublic(pub Vec<u8>);

#[derive(Clone)]
pub struct DhSecret(BigUint);

impl std::fmt::Debug for DhPublic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DhPublic({} bytes)", self.0.len())
    }
}

pub fn dh_keygen<R: RngCore + CryptoRng>(rng: &mut R) -> (DhPublic, DhSecret) {
    let prime = modp_prime();
    let mut exp_bytes = vec![0u8; (DH_EXPONENT_BITS / 8) as usize];
    loop {
        rng.fill_bytes(&mut exp_bytes);
        let secret = BigUint::from_bytes_be(&exp_bytes);
        if secret < BigUint::from(2u8) {
            continue;
        }
        let public = BigUint::from(2u8).modpow(&secret, &prime);
        let mut bytes = public.to_bytes_be();
        while bytes.len() < DH_VALUE_LEN {
            bytes.insert(0, 0);
        }
        return (DhPublic(bytes), DhSecret(secret));
    }
}

pub fn dh_agree(secret: &DhSecret, peer: &DhPublic) -> Result<SymmetricKey, CryptoError> {
    let prime = modp_prime();
    let peer_value = BigUint::from_bytes_be(&peer.0);
    let one = BigUint::from(1u8);
    // Reject the identity and other degenerate elements of the group.
    if peer_value <= one || peer_value >= &prime - &one {
        return Err(CryptoError::InvalidPublicValue);
    }
    let shared = peer_value.modpow(&secret.0, &prime);
    let mut shared_bytes = shared.to_bytes_be();
    while shared_bytes.len() < DH_VALUE_LEN {
        shared_bytes.insert(0, 0);
    }
    let digest = Sha256::digest(&shared_bytes);
    Ok(SymmetricKey(digest[..SYM_KEY_LEN].try_into().unwrap()))
}
