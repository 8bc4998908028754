//! Honest-but-curious protocol.
//!
//! Offline the server publishes `C_{i,j}^k = Enc(0)` when input `k`
//! satisfies node `(i, j)` and `Enc(1)` otherwise. Online the client adds
//! the cells its inputs select, so `S_i` counts the failed comparisons of
//! path `i`, then permutes and multiplicatively randomizes the `P` sums. The
//! server accepts iff at least `τ` of them decrypt to zero.

use rand::seq::SliceRandom;
use rand::{CryptoRng, RngCore};

use crate::ahe::{Ciphertext, Encryptor, Keypair, PublicKey, SecretKey};
use crate::encoding::{EncodedModel, EvalError};
use crate::forest::{ForestModel, Mode};
use crate::group::Group;
use crate::Decision;

pub type EncodedModelHbc<G> = EncodedModel<G>;

/// Plaintext of `C_{i,j}^k`: `1 - v` when `k <= t`, else `v`.
pub fn cell_value(t: u32, v: u8, k: u32) -> i64 {
    if k <= t {
        1 - v as i64
    } else {
        v as i64
    }
}

pub fn encode_model<G: Group, R: RngCore + CryptoRng>(
    pk: &PublicKey<G>,
    model: &ForestModel,
    rng: &mut R,
) -> EncodedModelHbc<G> {
    EncodedModel::build(Mode::Binary, pk, model.nu, model.layout(), rng, |i, j, k| {
        let c = &model.paths[i].nodes[j];
        cell_value(c.t, c.v, k)
    })
}

/// `⟦S_i⟧ = ⊞_j C_{i,j}^{x_{i,j}}`.
pub fn eval_paths<G: Group>(
    encoded: &EncodedModelHbc<G>,
    inputs: &[Vec<u32>],
) -> Result<Vec<Ciphertext<G>>, EvalError> {
    encoded.path_sums(inputs)
}

/// Uniform permutation, then `mulrand` on each score.
pub fn randomize_paths<G: Group, R: RngCore + CryptoRng>(
    pk: &PublicKey<G>,
    scores: &[Ciphertext<G>],
    rng: &mut R,
) -> Vec<Ciphertext<G>> {
    let enc = Encryptor::new(pk);
    let mut out: Vec<Ciphertext<G>> = scores.to_vec();
    out.shuffle(rng);
    out.iter().map(|ct| enc.mulrand(ct, rng)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HbcOutcome {
    pub decision: Decision,
    /// Number of paths that decrypted to zero, the tolerated leakage.
    pub zero_count: usize,
}

pub fn eval_model<G: Group>(sk: &SecretKey<G>, scores: &[Ciphertext<G>], tau: i64) -> HbcOutcome {
    let zero_count = scores
        .iter()
        .filter(|ct| sk.decrypt_to_group(ct) == G::identity())
        .count();
    HbcOutcome {
        decision: Decision::from_bool(zero_count as i64 >= tau),
        zero_count,
    }
}

/// Client message built from the zero count alone: what the server sees is
/// reproducible without the client's input.
pub fn simulate_scores<G: Group, R: RngCore + CryptoRng>(
    pk: &PublicKey<G>,
    paths: usize,
    zero_count: usize,
    rng: &mut R,
) -> Vec<Ciphertext<G>> {
    let enc = Encryptor::new(pk);
    let mut out: Vec<Ciphertext<G>> = (0..paths)
        .map(|i| {
            let m = if i < zero_count {
                G::scalar_zero()
            } else {
                G::random_nonzero_scalar(rng)
            };
            enc.encrypt(&m, rng)
        })
        .collect();
    out.shuffle(rng);
    out
}

/// The known break of this protocol: a client that sends `P` encryptions
/// of zero is accepted whatever its input.
pub fn all_zeros_attack<G: Group, R: RngCore + CryptoRng>(
    pk: &PublicKey<G>,
    paths: usize,
    rng: &mut R,
) -> Vec<Ciphertext<G>> {
    let enc = Encryptor::new(pk);
    (0..paths).map(|_| enc.encrypt_int(0, rng)).collect()
}

/// One honest run in memory, for tests and the oracle harness.
pub fn run_local<G: Group, R: RngCore + CryptoRng>(
    server: &Keypair<G>,
    model: &ForestModel,
    encoded: &EncodedModelHbc<G>,
    x: &[u32],
    rng: &mut R,
) -> Result<HbcOutcome, EvalError> {
    let inputs = crate::forest::resolve(&encoded.layout, x, encoded.nu)?;
    let scores = eval_paths(encoded, &inputs)?;
    let sent = randomize_paths(&server.pk, &scores, rng);
    Ok(eval_model(&server.sk, &sent, model.tau))
}
