//! Prime-order group abstraction.
//!
//! Every protocol component is generic over [`Group`]. Two backends exist:
//! [`Ristretto`] is the production group (order ≈ 2^252, 32-byte canonical
//! encodings) and [`ToyGroup`] is a Schnorr subgroup of order ≈ 2^20 used by
//! the statistical test harnesses, where events of probability `1/p` must be
//! observable.
//!
//! The group law is written additively: `a + b` is the group operation and
//! `e * k` is scalar exponentiation, so `g^m · h^y` reads `G * m + H * y`.

mod ristretto;
mod toy;

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha512};

pub use ristretto::Ristretto;
pub use toy::{ToyElement, ToyGroup, ToyScalar, TOY_MODULUS, TOY_ORDER};

/// Length in bytes of every canonical element encoding.
pub const ELEMENT_BYTES: usize = 32;
/// Length in bytes of every canonical (big-endian) scalar encoding.
pub const SCALAR_BYTES: usize = 32;

/// A cyclic group of prime order `p` with a fixed generator.
pub trait Group: Copy + Clone + Debug + Default + Send + Sync + 'static {
    type Scalar: Copy
        + Clone
        + Debug
        + PartialEq
        + Eq
        + Send
        + Sync
        + Add<Output = Self::Scalar>
        + Sub<Output = Self::Scalar>
        + Mul<Output = Self::Scalar>
        + Neg<Output = Self::Scalar>;

    type Element: Copy
        + Clone
        + Debug
        + PartialEq
        + Eq
        + Send
        + Sync
        + Add<Output = Self::Element>
        + Sub<Output = Self::Element>
        + Neg<Output = Self::Element>
        + Mul<Self::Scalar, Output = Self::Element>;

    /// Precomputation for repeated multiplication of one fixed element.
    type Table: Clone + Send + Sync;

    /// Wire identifier of the group, stored in artifact headers.
    const ID: u8;
    const NAME: &'static str;
    /// Bit length of the group order.
    const ORDER_BITS: u32;

    fn generator() -> Self::Element;
    fn identity() -> Self::Element;
    /// `generator * s`, possibly through a precomputed table.
    fn mul_base(s: &Self::Scalar) -> Self::Element;

    fn table(e: &Self::Element) -> Self::Table;
    fn mul_table(t: &Self::Table, s: &Self::Scalar) -> Self::Element;

    fn scalar_from_u64(v: u64) -> Self::Scalar;
    fn scalar_invert(s: &Self::Scalar) -> Option<Self::Scalar>;
    fn random_scalar<R: RngCore + CryptoRng>(rng: &mut R) -> Self::Scalar;
    /// Reduces 64 uniform bytes into a scalar with negligible bias.
    fn scalar_from_wide(bytes: &[u8; 64]) -> Self::Scalar;
    /// 32-byte big-endian encoding.
    fn scalar_to_bytes(s: &Self::Scalar) -> [u8; SCALAR_BYTES];
    /// Rejects non-canonical (unreduced) encodings.
    fn scalar_from_bytes(bytes: &[u8; SCALAR_BYTES]) -> Option<Self::Scalar>;

    fn element_to_bytes(e: &Self::Element) -> [u8; ELEMENT_BYTES];
    /// Rejects encodings that are not canonical members of the group.
    fn element_from_bytes(bytes: &[u8; ELEMENT_BYTES]) -> Option<Self::Element>;
    /// Maps a message to a group element with unknown discrete log.
    fn hash_to_element(domain: &[u8], msg: &[u8]) -> Self::Element;

    fn scalar_zero() -> Self::Scalar {
        Self::scalar_from_u64(0)
    }

    fn scalar_one() -> Self::Scalar {
        Self::scalar_from_u64(1)
    }

    fn scalar_from_i64(v: i64) -> Self::Scalar {
        if v < 0 {
            -Self::scalar_from_u64(v.unsigned_abs())
        } else {
            Self::scalar_from_u64(v as u64)
        }
    }

    fn scalar_is_zero(s: &Self::Scalar) -> bool {
        *s == Self::scalar_zero()
    }

    fn random_nonzero_scalar<R: RngCore + CryptoRng>(rng: &mut R) -> Self::Scalar {
        loop {
            let s = Self::random_scalar(rng);
            if !Self::scalar_is_zero(&s) {
                return s;
            }
        }
    }

    fn random_element<R: RngCore + CryptoRng>(rng: &mut R) -> Self::Element {
        Self::mul_base(&Self::random_scalar(rng))
    }

    /// Hashes arbitrary bytes to a scalar under a domain tag.
    fn hash_to_scalar(domain: &[u8], msg: &[u8]) -> Self::Scalar {
        let mut h = Sha512::new();
        h.update((domain.len() as u32).to_be_bytes());
        h.update(domain);
        h.update(msg);
        let wide: [u8; 64] = h.finalize().into();
        Self::scalar_from_wide(&wide)
    }

    /// `generator * m` for a small signed integer `m`.
    fn encode_int(m: i64) -> Self::Element {
        Self::mul_base(&Self::scalar_from_i64(m))
    }
}

/// Group backends selectable at runtime (CLI flags, artifact headers).
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    Ristretto,
    Toy,
}

impl GroupKind {
    pub fn id(self) -> u8 {
        match self {
            GroupKind::Ristretto => Ristretto::ID,
            GroupKind::Toy => ToyGroup::ID,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            x if x == Ristretto::ID => Some(GroupKind::Ristretto),
            x if x == ToyGroup::ID => Some(GroupKind::Toy),
            _ => None,
        }
    }
}

impl std::str::FromStr for GroupKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ristretto" => Ok(GroupKind::Ristretto),
            "toy" => Ok(GroupKind::Toy),
            other => Err(format!("unknown group `{other}` (expected ristretto|toy)")),
        }
    }
}

impl std::fmt::Display for GroupKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GroupKind::Ristretto => Ristretto::NAME,
            GroupKind::Toy => ToyGroup::NAME,
        })
    }
}
