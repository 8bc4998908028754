use curve25519_dalek::constants::{RISTRETTO_BASEPOINT_POINT, RISTRETTO_BASEPOINT_TABLE};
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoBasepointTable, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::Identity;
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha512};

use super::{Group, ELEMENT_BYTES, SCALAR_BYTES};

/// The Ristretto255 prime-order group.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Ristretto;

impl Group for Ristretto {
    type Scalar = Scalar;
    type Element = RistrettoPoint;
    type Table = Box<RistrettoBasepointTable>;

    const ID: u8 = 1;
    const NAME: &'static str = "ristretto";
    const ORDER_BITS: u32 = 253;

    fn generator() -> RistrettoPoint {
        RISTRETTO_BASEPOINT_POINT
    }

    fn identity() -> RistrettoPoint {
        RistrettoPoint::identity()
    }

    fn mul_base(s: &Scalar) -> RistrettoPoint {
        s * RISTRETTO_BASEPOINT_TABLE
    }

    fn table(e: &RistrettoPoint) -> Self::Table {
        Box::new(RistrettoBasepointTable::create(e))
    }

    fn mul_table(t: &Self::Table, s: &Scalar) -> RistrettoPoint {
        s * &**t
    }

    fn scalar_from_u64(v: u64) -> Scalar {
        Scalar::from(v)
    }

    fn scalar_invert(s: &Scalar) -> Option<Scalar> {
        if *s == Scalar::ZERO {
            None
        } else {
            Some(s.invert())
        }
    }

    fn random_scalar<R: RngCore + CryptoRng>(rng: &mut R) -> Scalar {
        Scalar::random(rng)
    }

    fn scalar_from_wide(bytes: &[u8; 64]) -> Scalar {
        Scalar::from_bytes_mod_order_wide(bytes)
    }

    fn scalar_to_bytes(s: &Scalar) -> [u8; SCALAR_BYTES] {
        let mut b = s.to_bytes();
        b.reverse();
        b
    }

    fn scalar_from_bytes(bytes: &[u8; SCALAR_BYTES]) -> Option<Scalar> {
        let mut le = *bytes;
        le.reverse();
        Option::from(Scalar::from_canonical_bytes(le))
    }

    fn element_to_bytes(e: &RistrettoPoint) -> [u8; ELEMENT_BYTES] {
        e.compress().to_bytes()
    }

    fn element_from_bytes(bytes: &[u8; ELEMENT_BYTES]) -> Option<RistrettoPoint> {
        CompressedRistretto(*bytes).decompress()
    }

    fn hash_to_element(domain: &[u8], msg: &[u8]) -> RistrettoPoint {
        let mut h = Sha512::new();
        h.update((domain.len() as u32).to_be_bytes());
        h.update(domain);
        h.update(msg);
        let wide: [u8; 64] = h.finalize().into();
        RistrettoPoint::from_uniform_bytes(&wide)
    }
}
