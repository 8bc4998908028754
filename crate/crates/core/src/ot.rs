//! 1-of-2 oblivious transfer built from ElGamal-style public keys drawn from
//! a common reference string.
//!
//! The receiver knows the secret key of exactly one of `pk0`, `pk1` with
//! `pk0 + pk1 = W`; only `pk0` travels. The sender hybrid-encrypts `m_i`
//! under `pk_i`.

use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use crate::codec::{put_element, DecodeError, Reader};
use crate::group::{Group, ELEMENT_BYTES};

const CRS_DOMAIN: &[u8] = b"sdfe/ot/crs";
const KEY_DOMAIN: &[u8] = b"sdfe/ot/slot-key";

/// Bytes of one encoded choice on the wire.
pub const CHOICE_BYTES: usize = ELEMENT_BYTES;

/// Common reference string `W`; nobody knows `log_g W`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OtCrs<G: Group> {
    pub w: G::Element,
}

impl<G: Group> OtCrs<G> {
    pub fn from_seed(seed: &[u8]) -> Self {
        OtCrs {
            w: G::hash_to_element(CRS_DOMAIN, seed),
        }
    }
}

impl<G: Group> Default for OtCrs<G> {
    fn default() -> Self {
        Self::from_seed(b"default")
    }
}

/// Receiver secret. Deliberately neither `Clone` into messages nor
/// serializable.
#[derive(Debug)]
pub struct OtReceiverState<G: Group> {
    choice: bool,
    r: G::Scalar,
}

impl<G: Group> OtReceiverState<G> {
    pub fn choice(&self) -> bool {
        self.choice
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OtEncodedChoice<G: Group> {
    pub pk0: G::Element,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OtSlot<G: Group> {
    pub ephemeral: G::Element,
    pub masked: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OtResponse<G: Group> {
    pub slots: [OtSlot<G>; 2],
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OtError {
    #[error("message lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

pub fn encode<G: Group, R: RngCore + CryptoRng>(
    crs: &OtCrs<G>,
    choice: bool,
    rng: &mut R,
) -> (OtEncodedChoice<G>, OtReceiverState<G>) {
    let r = G::random_scalar(rng);
    let known = G::mul_base(&r);
    let pk0 = if choice { crs.w - known } else { known };
    (OtEncodedChoice { pk0 }, OtReceiverState { choice, r })
}

pub fn compute<G: Group, R: RngCore + CryptoRng>(
    crs: &OtCrs<G>,
    messages: (&[u8], &[u8]),
    choice: &OtEncodedChoice<G>,
    rng: &mut R,
) -> Result<OtResponse<G>, OtError> {
    let (m0, m1) = messages;
    if m0.len() != m1.len() {
        return Err(OtError::LengthMismatch(m0.len(), m1.len()));
    }
    let pks = [choice.pk0, crs.w - choice.pk0];
    let seal = |slot: u8, pk: &G::Element, m: &[u8], rng: &mut R| {
        let e = G::random_scalar(rng);
        let ephemeral = G::mul_base(&e);
        let pad = keystream::<G>(slot, &ephemeral, &(*pk * e), m.len());
        OtSlot {
            ephemeral,
            masked: xor(m, &pad),
        }
    };
    Ok(OtResponse {
        slots: [seal(0, &pks[0], m0, rng), seal(1, &pks[1], m1, rng)],
    })
}

/// Recovers `m_b`. The other slot's key is unknown to the receiver, so its
/// plaintext is never computed.
pub fn decode<G: Group>(state: &OtReceiverState<G>, resp: &OtResponse<G>) -> Vec<u8> {
    let slot = &resp.slots[state.choice as usize];
    let shared = slot.ephemeral * state.r;
    let pad = keystream::<G>(state.choice as u8, &slot.ephemeral, &shared, slot.masked.len());
    xor(&slot.masked, &pad)
}

fn keystream<G: Group>(slot: u8, ephemeral: &G::Element, shared: &G::Element, len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len.next_multiple_of(32));
    let mut ctr = 0u32;
    while out.len() < len {
        let mut h = Sha256::new();
        h.update(KEY_DOMAIN);
        h.update([slot]);
        h.update(ctr.to_be_bytes());
        h.update(G::element_to_bytes(ephemeral));
        h.update(G::element_to_bytes(shared));
        out.extend_from_slice(&h.finalize());
        ctr += 1;
    }
    out.truncate(len);
    out
}

fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

impl<G: Group> OtEncodedChoice<G> {
    pub fn write(&self, out: &mut Vec<u8>) {
        put_element::<G>(out, &self.pk0);
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(OtEncodedChoice {
            pk0: r.element::<G>()?,
        })
    }
}

impl<G: Group> OtResponse<G> {
    /// Wire size for messages of `msg_len` bytes.
    pub const fn encoded_len(msg_len: usize) -> usize {
        2 * (ELEMENT_BYTES + msg_len)
    }

    pub fn write(&self, out: &mut Vec<u8>) {
        for s in &self.slots {
            put_element::<G>(out, &s.ephemeral);
            out.extend_from_slice(&s.masked);
        }
    }

    pub fn read(r: &mut Reader<'_>, msg_len: usize) -> Result<Self, DecodeError> {
        let mut slot = || -> Result<OtSlot<G>, DecodeError> {
            Ok(OtSlot {
                ephemeral: r.element::<G>()?,
                masked: r.take(msg_len)?.to_vec(),
            })
        };
        let s0 = slot()?;
        let s1 = slot()?;
        Ok(OtResponse { slots: [s0, s1] })
    }
}
