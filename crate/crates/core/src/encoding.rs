//! The offline table `C_{i,j}^k`: one ciphertext per (path, node position,
//! input value), shared by both protocol modes.

use rand::{CryptoRng, RngCore};

use crate::ahe::{Ciphertext, Encryptor, PublicKey};
use crate::forest::{max_value, Mode};
use crate::group::Group;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("expected {expected} paths of inputs, got {got}")]
    PathCount { expected: usize, got: usize },
    #[error("path {path}: expected {expected} inputs, got {got}")]
    NodeCount {
        path: usize,
        expected: usize,
        got: usize,
    },
    #[error("path {path} node {node}: input {x} out of range")]
    InputRange { path: usize, node: usize, x: u32 },
    #[error(transparent)]
    Layout(#[from] crate::forest::ForestError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedModel<G: Group> {
    pub mode: Mode,
    pub pk: PublicKey<G>,
    pub nu: u8,
    pub paths: usize,
    pub len: usize,
    /// Feature index per (path, position), public.
    pub layout: Vec<Vec<usize>>,
    /// Row-major over `(i, j, k)`.
    pub cts: Vec<Ciphertext<G>>,
}

impl<G: Group> EncodedModel<G> {
    /// Encrypts `value(i, j, k)` for every cell. Each cell gets fresh
    /// randomness.
    pub fn build<R: RngCore + CryptoRng>(
        mode: Mode,
        pk: &PublicKey<G>,
        nu: u8,
        layout: Vec<Vec<usize>>,
        rng: &mut R,
        mut value: impl FnMut(usize, usize, u32) -> i64,
    ) -> Self {
        let paths = layout.len();
        let len = layout.first().map_or(0, Vec::len);
        let enc = Encryptor::new(pk);
        let mut cts = Vec::with_capacity((paths * len) << nu);
        for i in 0..paths {
            for j in 0..len {
                for k in 0..=max_value(nu) {
                    cts.push(enc.encrypt_int(value(i, j, k), rng));
                }
            }
        }
        EncodedModel {
            mode,
            pk: *pk,
            nu,
            paths,
            len,
            layout,
            cts,
        }
    }

    pub fn values_per_node(&self) -> usize {
        1 << self.nu
    }

    pub fn get(&self, i: usize, j: usize, k: u32) -> &Ciphertext<G> {
        &self.cts[(i * self.len + j) * self.values_per_node() + k as usize]
    }

    /// Per path, the homomorphic sum of the cells selected by `inputs`.
    pub fn path_sums(&self, inputs: &[Vec<u32>]) -> Result<Vec<Ciphertext<G>>, EvalError> {
        if inputs.len() != self.paths {
            return Err(EvalError::PathCount {
                expected: self.paths,
                got: inputs.len(),
            });
        }
        let top = max_value(self.nu);
        inputs
            .iter()
            .enumerate()
            .map(|(i, row)| {
                if row.len() != self.len {
                    return Err(EvalError::NodeCount {
                        path: i,
                        expected: self.len,
                        got: row.len(),
                    });
                }
                let mut acc = Ciphertext {
                    c1: G::identity(),
                    c2: G::identity(),
                };
                for (j, &x) in row.iter().enumerate() {
                    if x > top {
                        return Err(EvalError::InputRange { path: i, node: j, x });
                    }
                    acc = acc + *self.get(i, j, x);
                }
                Ok(acc)
            })
            .collect()
    }

    /// Payload size `2^ν · L · P · λ_AHE` in bits.
    pub fn payload_bits(&self) -> u64 {
        self.cts.len() as u64 * crate::ahe::CIPHERTEXT_BITS
    }
}
