use std::ops::{Add, Mul, Neg, Sub};

use rand::{CryptoRng, Rng, RngCore};
use sha2::{Digest, Sha512};

use super::{Group, ELEMENT_BYTES, SCALAR_BYTES};

/// Prime order of the toy subgroup.
pub const TOY_ORDER: u64 = 1_048_571;
/// Safe prime `2 * TOY_ORDER + 1`; the group is its quadratic residues.
pub const TOY_MODULUS: u64 = 2 * TOY_ORDER + 1;
const TOY_GENERATOR: u64 = 4;

/// Quadratic-residue subgroup of `Z_q^*` with `q = 2p + 1`, `p ≈ 2^20`.
///
/// Only for tests and statistical harnesses: discrete logs are trivial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ToyGroup;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ToyScalar(u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ToyElement(u64);

impl ToyScalar {
    pub fn value(self) -> u64 {
        self.0
    }
}

impl ToyElement {
    pub fn value(self) -> u64 {
        self.0
    }
}

// q < 2^22, so products of residues fit in a u64.
fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    a * b % m
}

fn powmod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

impl Add for ToyScalar {
    type Output = ToyScalar;
    fn add(self, rhs: ToyScalar) -> ToyScalar {
        ToyScalar((self.0 + rhs.0) % TOY_ORDER)
    }
}

impl Sub for ToyScalar {
    type Output = ToyScalar;
    fn sub(self, rhs: ToyScalar) -> ToyScalar {
        ToyScalar((self.0 + TOY_ORDER - rhs.0) % TOY_ORDER)
    }
}

impl Mul for ToyScalar {
    type Output = ToyScalar;
    fn mul(self, rhs: ToyScalar) -> ToyScalar {
        ToyScalar(mulmod(self.0, rhs.0, TOY_ORDER))
    }
}

impl Neg for ToyScalar {
    type Output = ToyScalar;
    fn neg(self) -> ToyScalar {
        ToyScalar((TOY_ORDER - self.0) % TOY_ORDER)
    }
}

impl Add for ToyElement {
    type Output = ToyElement;
    fn add(self, rhs: ToyElement) -> ToyElement {
        ToyElement(mulmod(self.0, rhs.0, TOY_MODULUS))
    }
}

impl Neg for ToyElement {
    type Output = ToyElement;
    fn neg(self) -> ToyElement {
        // Inverse in the order-p subgroup: x^(p-1).
        ToyElement(powmod(self.0, TOY_ORDER - 1, TOY_MODULUS))
    }
}

impl Sub for ToyElement {
    type Output = ToyElement;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: ToyElement) -> ToyElement {
        self + (-rhs)
    }
}

impl Mul<ToyScalar> for ToyElement {
    type Output = ToyElement;
    fn mul(self, rhs: ToyScalar) -> ToyElement {
        ToyElement(powmod(self.0, rhs.0, TOY_MODULUS))
    }
}

fn u64_to_be32(v: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    out[24..].copy_from_slice(&v.to_be_bytes());
    out
}

fn be32_to_u64(bytes: &[u8; 32]) -> Option<u64> {
    if bytes[..24].iter().any(|&b| b != 0) {
        return None;
    }
    Some(u64::from_be_bytes(bytes[24..].try_into().expect("8 bytes")))
}

impl Group for ToyGroup {
    type Scalar = ToyScalar;
    type Element = ToyElement;
    type Table = ToyElement;

    const ID: u8 = 0x7f;
    const NAME: &'static str = "toy";
    const ORDER_BITS: u32 = 20;

    fn generator() -> ToyElement {
        ToyElement(TOY_GENERATOR)
    }

    fn identity() -> ToyElement {
        ToyElement(1)
    }

    fn mul_base(s: &ToyScalar) -> ToyElement {
        ToyElement(powmod(TOY_GENERATOR, s.0, TOY_MODULUS))
    }

    fn table(e: &ToyElement) -> ToyElement {
        *e
    }

    fn mul_table(t: &ToyElement, s: &ToyScalar) -> ToyElement {
        *t * *s
    }

    fn scalar_from_u64(v: u64) -> ToyScalar {
        ToyScalar(v % TOY_ORDER)
    }

    fn scalar_invert(s: &ToyScalar) -> Option<ToyScalar> {
        if s.0 == 0 {
            None
        } else {
            Some(ToyScalar(powmod(s.0, TOY_ORDER - 2, TOY_ORDER)))
        }
    }

    fn random_scalar<R: RngCore + CryptoRng>(rng: &mut R) -> ToyScalar {
        ToyScalar(rng.gen_range(0..TOY_ORDER))
    }

    fn scalar_from_wide(bytes: &[u8; 64]) -> ToyScalar {
        let v = u128::from_be_bytes(bytes[..16].try_into().expect("16 bytes"));
        ToyScalar((v % TOY_ORDER as u128) as u64)
    }

    fn scalar_to_bytes(s: &ToyScalar) -> [u8; SCALAR_BYTES] {
        u64_to_be32(s.0)
    }

    fn scalar_from_bytes(bytes: &[u8; SCALAR_BYTES]) -> Option<ToyScalar> {
        be32_to_u64(bytes)
            .filter(|&v| v < TOY_ORDER)
            .map(ToyScalar)
    }

    fn element_to_bytes(e: &ToyElement) -> [u8; ELEMENT_BYTES] {
        u64_to_be32(e.0)
    }

    fn element_from_bytes(bytes: &[u8; ELEMENT_BYTES]) -> Option<ToyElement> {
        let v = be32_to_u64(bytes)?;
        if v == 0 || v >= TOY_MODULUS || powmod(v, TOY_ORDER, TOY_MODULUS) != 1 {
            return None;
        }
        Some(ToyElement(v))
    }

    fn hash_to_element(domain: &[u8], msg: &[u8]) -> ToyElement {
        let mut counter = 0u32;
        loop {
            let mut h = Sha512::new();
            h.update((domain.len() as u32).to_be_bytes());
            h.update(domain);
            h.update(msg);
            h.update(counter.to_be_bytes());
            let d = h.finalize();
            let x = u64::from_be_bytes(d[..8].try_into().expect("8 bytes")) % TOY_MODULUS;
            // Squaring lands in the quadratic residues; reject 0 and ±1.
            let e = mulmod(x, x, TOY_MODULUS);
            if e > 1 {
                return ToyElement(e);
            }
            counter += 1;
        }
    }
}
