//! Lifted (exponential) ElGamal: additively homomorphic encryption whose
//! decryption stops at `g^m`.
//!
//! Plaintexts are scalars. Decryption never attempts a discrete logarithm;
//! callers that need the integer value test membership in a small window of
//! candidate exponents with [`WindowTable`].

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};

use rand::{CryptoRng, RngCore};

use crate::codec::{put_element, DecodeError, Reader};
use crate::group::{Group, ELEMENT_BYTES};

/// Serialized ciphertext length: `c1 ∥ c2`.
pub const CIPHERTEXT_BYTES: usize = 2 * ELEMENT_BYTES;
/// Ciphertext length in bits (`λ_AHE`).
pub const CIPHERTEXT_BITS: u64 = 8 * CIPHERTEXT_BYTES as u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PublicKey<G: Group> {
    pub h: G::Element,
}

#[derive(Clone, Copy, Debug)]
pub struct SecretKey<G: Group> {
    x: G::Scalar,
}

#[derive(Clone, Copy, Debug)]
pub struct Keypair<G: Group> {
    pub pk: PublicKey<G>,
    pub sk: SecretKey<G>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ciphertext<G: Group> {
    pub c1: G::Element,
    pub c2: G::Element,
}

pub fn keygen<G: Group, R: RngCore + CryptoRng>(rng: &mut R) -> Keypair<G> {
    Keypair::from_secret(SecretKey {
        x: G::random_scalar(rng),
    })
}

impl<G: Group> Keypair<G> {
    pub fn from_secret(sk: SecretKey<G>) -> Self {
        Keypair {
            pk: PublicKey {
                h: G::mul_base(&sk.x),
            },
            sk,
        }
    }
}

impl<G: Group> SecretKey<G> {
    pub fn from_scalar(x: G::Scalar) -> Self {
        SecretKey { x }
    }

    pub fn scalar(&self) -> &G::Scalar {
        &self.x
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        G::scalar_to_bytes(&self.x)
    }

    pub fn from_bytes(bytes: &[u8; 32]) -> Option<Self> {
        G::scalar_from_bytes(bytes).map(|x| SecretKey { x })
    }

    /// `c2 - c1 * x = g^m`.
    pub fn decrypt_to_group(&self, ct: &Ciphertext<G>) -> G::Element {
        ct.c2 - ct.c1 * self.x
    }
}

impl<G: Group> PublicKey<G> {
    pub fn encrypt<R: RngCore + CryptoRng>(&self, m: &G::Scalar, rng: &mut R) -> Ciphertext<G> {
        self.encrypt_with_randomness(m, &G::random_scalar(rng))
    }

    /// Deterministic encryption under explicit randomness `y`; provers and
    /// reproducible tests need the randomness, production paths use
    /// [`PublicKey::encrypt`].
    pub fn encrypt_with_randomness(&self, m: &G::Scalar, y: &G::Scalar) -> Ciphertext<G> {
        Ciphertext {
            c1: G::mul_base(y),
            c2: G::mul_base(m) + self.h * *y,
        }
    }

    pub fn encrypt_int<R: RngCore + CryptoRng>(&self, m: i64, rng: &mut R) -> Ciphertext<G> {
        self.encrypt(&G::scalar_from_i64(m), rng)
    }

    /// Fresh ciphertext of the same plaintext: `ct ⊞ Enc(0)`.
    pub fn randomize<R: RngCore + CryptoRng>(
        &self,
        ct: &Ciphertext<G>,
        rng: &mut R,
    ) -> Ciphertext<G> {
        *ct + self.encrypt(&G::scalar_zero(), rng)
    }

    /// Multiplies the plaintext by a uniform non-zero scalar and
    /// re-randomizes, so zero stays zero and anything else becomes uniform
    /// over the non-zero plaintexts.
    pub fn mulrand<R: RngCore + CryptoRng>(
        &self,
        ct: &Ciphertext<G>,
        rng: &mut R,
    ) -> Ciphertext<G> {
        let k = G::random_nonzero_scalar(rng);
        self.randomize(&(*ct * k), rng)
    }

    pub fn to_bytes(&self) -> [u8; ELEMENT_BYTES] {
        G::element_to_bytes(&self.h)
    }

    pub fn from_bytes(bytes: &[u8; ELEMENT_BYTES]) -> Option<Self> {
        G::element_from_bytes(bytes).map(|h| PublicKey { h })
    }
}

/// Public key with a fixed-base table for `h`, for bulk encryption under
/// one key (model encoding, initial accumulators).
#[derive(Clone)]
pub struct Encryptor<G: Group> {
    pub pk: PublicKey<G>,
    table: G::Table,
}

impl<G: Group> Encryptor<G> {
    pub fn new(pk: &PublicKey<G>) -> Self {
        Encryptor {
            pk: *pk,
            table: G::table(&pk.h),
        }
    }

    pub fn encrypt_with_randomness(&self, m: &G::Scalar, y: &G::Scalar) -> Ciphertext<G> {
        Ciphertext {
            c1: G::mul_base(y),
            c2: G::mul_base(m) + G::mul_table(&self.table, y),
        }
    }

    pub fn encrypt<R: RngCore + CryptoRng>(&self, m: &G::Scalar, rng: &mut R) -> Ciphertext<G> {
        self.encrypt_with_randomness(m, &G::random_scalar(rng))
    }

    pub fn encrypt_int<R: RngCore + CryptoRng>(&self, m: i64, rng: &mut R) -> Ciphertext<G> {
        self.encrypt(&G::scalar_from_i64(m), rng)
    }

    pub fn randomize<R: RngCore + CryptoRng>(&self, ct: &Ciphertext<G>, rng: &mut R) -> Ciphertext<G> {
        *ct + self.encrypt(&G::scalar_zero(), rng)
    }

    pub fn mulrand<R: RngCore + CryptoRng>(&self, ct: &Ciphertext<G>, rng: &mut R) -> Ciphertext<G> {
        let k = G::random_nonzero_scalar(rng);
        self.randomize(&(*ct * k), rng)
    }
}

impl<G: Group> Ciphertext<G> {
    pub fn write(&self, out: &mut Vec<u8>) {
        put_element::<G>(out, &self.c1);
        put_element::<G>(out, &self.c2);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(CIPHERTEXT_BYTES);
        self.write(&mut out);
        out
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Ciphertext {
            c1: r.element::<G>()?,
            c2: r.element::<G>()?,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let ct = Self::read(&mut r)?;
        r.finish()?;
        Ok(ct)
    }
}

impl<G: Group> Add for Ciphertext<G> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Ciphertext {
            c1: self.c1 + rhs.c1,
            c2: self.c2 + rhs.c2,
        }
    }
}

impl<G: Group> Sub for Ciphertext<G> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Ciphertext {
            c1: self.c1 - rhs.c1,
            c2: self.c2 - rhs.c2,
        }
    }
}

impl<G: Group> Neg for Ciphertext<G> {
    type Output = Self;
    fn neg(self) -> Self {
        Ciphertext {
            c1: -self.c1,
            c2: -self.c2,
        }
    }
}

/// Scalar multiplication of the plaintext (`k ⊠ ct`).
impl<G: Group> Mul<G::Scalar> for Ciphertext<G>
where
    G::Scalar: Copy,
{
    type Output = Self;
    fn mul(self, k: G::Scalar) -> Self {
        Ciphertext {
            c1: self.c1 * k,
            c2: self.c2 * k,
        }
    }
}

/// Lookup table `{g^i : lo <= i <= hi}` for recovering small exponents.
#[derive(Clone, Debug)]
pub struct WindowTable<G: Group> {
    lo: i64,
    hi: i64,
    entries: HashMap<[u8; ELEMENT_BYTES], i64>,
    _group: std::marker::PhantomData<G>,
}

impl<G: Group> WindowTable<G> {
    pub fn new(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi, "empty window [{lo}, {hi}]");
        let g = G::generator();
        let mut cur = G::encode_int(lo);
        let mut entries = HashMap::with_capacity((hi - lo + 1) as usize);
        for i in lo..=hi {
            entries.insert(G::element_to_bytes(&cur), i);
            cur = cur + g;
        }
        WindowTable {
            lo,
            hi,
            entries,
            _group: std::marker::PhantomData,
        }
    }

    pub fn bounds(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn lookup(&self, elem: &G::Element) -> Option<i64> {
        self.entries.get(&G::element_to_bytes(elem)).copied()
    }
}

/// Returns `m` if `elem = g^m` for some `m ∈ [lo, hi]`.
pub fn window_check<G: Group>(elem: &G::Element, lo: i64, hi: i64) -> Option<i64> {
    WindowTable::<G>::new(lo, hi).lookup(elem)
}
