//! Malicious-client protocol.
//!
//! Offline the server encrypts, per path and permuted node position, `1`
//! for a satisfied intermediate comparison and `L` for a terminal satisfied
//! under the path polarity, so the path sum `S_i` is `2L - 1` for `+1`,
//! `L - 1` for `-1` and anything else for `0`. Online:
//!
//! 1. client → server: `⟦α_i + S_i⟧_S` and one garbled bundle per path on
//!    `a_i = H(g^{α_i + L - 1})`;
//! 2. server → client: OT choices for the bits of `H(g^{β_i})` (test B) and
//!    `H(g^{β_i - L})` (test A);
//! 3. client → server: OT responses carrying evaluator labels;
//! 4. server → client: `ζ · ⟦θ + Σ p_i (σ_A + σ_B) / 2⟧_C`;
//! 5. client → server: the decrypted group element.
//!
//! The server accepts iff `ζ^{-1}·elem - θ·g` lies in `[τ, T]`. A path whose
//! bundle fails to evaluate or whose proofs do not verify resets the
//! accumulator to a fresh random `θ'`, so the result is uniform and the
//! session still completes.

pub mod adversary;

use rand::seq::SliceRandom;
use rand::{CryptoRng, RngCore};

use crate::ahe::{Ciphertext, Encryptor, Keypair, PublicKey, SecretKey, WindowTable};
use crate::encoding::{EncodedModel, EvalError};
use crate::forest::{Comparison, ForestModel, Mode};
use crate::gc::{self, EvaluatorLabels, GarbledPathBundle, Label, TableValues, LABEL_BYTES};
use crate::group::Group;
use crate::ot::{self, OtCrs, OtEncodedChoice, OtReceiverState, OtResponse};
use crate::zkp::verify_pm_pair;
use crate::Decision;

pub type EncodedModelMal<G> = EncodedModel<G>;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MalError {
    #[error("model is not ternary")]
    NotTernary,
    #[error("{what}: expected {expected}, got {got}")]
    Count {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Ot(#[from] ot::OtError),
}

fn count(what: &'static str, expected: usize, got: usize) -> Result<(), MalError> {
    if expected == got {
        Ok(())
    } else {
        Err(MalError::Count { what, expected, got })
    }
}

/// Public session parameters shared by both parties.
#[derive(Clone, Debug)]
pub struct Params<G: Group> {
    pub crs: OtCrs<G>,
    /// Comparand width `λ_GC` in bits.
    pub width: usize,
}

impl<G: Group> Default for Params<G> {
    fn default() -> Self {
        Params {
            crs: OtCrs::default(),
            width: gc::DEFAULT_WIDTH,
        }
    }
}

/// Plaintext of a cell: intermediate nodes give `1` when satisfied; the
/// terminal gives `len` when satisfied after inverting it for `p = -1`.
pub fn cell_value(c: &Comparison, terminal: bool, polarity: i8, len: usize, k: u32) -> i64 {
    if !terminal {
        return c.holds(k) as i64;
    }
    let c = if polarity < 0 { c.inverted() } else { *c };
    if c.holds(k) {
        len as i64
    } else {
        0
    }
}

/// Maps a plaintext path sum to the pre-polarity outcome.
pub fn sum_to_outcome(sum: i64, len: usize) -> i64 {
    let len = len as i64;
    if sum == 2 * len - 1 {
        1
    } else if sum == len - 1 {
        -1
    } else {
        0
    }
}

/// Encodes a ternary model. Each path's nodes are shuffled independently;
/// the returned layout reflects the shuffled order.
pub fn encode_model_mal<G: Group, R: RngCore + CryptoRng>(
    pk: &PublicKey<G>,
    model: &ForestModel,
    rng: &mut R,
) -> Result<EncodedModelMal<G>, MalError> {
    if model.mode != Mode::Ternary {
        return Err(MalError::NotTernary);
    }
    let mut paths = model.paths.clone();
    for p in &mut paths {
        let mut perm: Vec<usize> = (0..p.len()).collect();
        perm.shuffle(rng);
        p.permute(&perm);
    }
    let layout = paths
        .iter()
        .map(|p| p.nodes.iter().map(|c| c.feature).collect())
        .collect();
    Ok(EncodedModel::build(Mode::Ternary, pk, model.nu, layout, rng, |i, j, k| {
        let p = &paths[i];
        cell_value(&p.nodes[j], j == p.terminal, p.polarity, p.len(), k)
    }))
}

/// Flow 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FirstFlow<G: Group> {
    /// `⟦β_i⟧_S`.
    pub betas: Vec<Ciphertext<G>>,
    pub bundles: Vec<GarbledPathBundle<G>>,
}

/// What the client keeps between flows 1 and 3.
#[derive(Clone, Debug)]
pub struct ClientSecrets<G: Group> {
    pub alphas: Vec<G::Scalar>,
    pub labels: Vec<EvaluatorLabels>,
    /// Generator comparand `a_i` per path.
    pub comparands: Vec<Vec<bool>>,
}

/// Generator comparand `H(g^{α + L - 1})`.
pub fn comparand<G: Group>(alpha: &G::Scalar, len: usize, width: usize) -> Vec<bool> {
    let e = G::mul_base(&(*alpha + G::scalar_from_i64(len as i64 - 1)));
    gc::hash_comparand::<G>(&e, width)
}

/// Flow 1 with every knob exposed: fixed masks (test mode) and table
/// plaintexts (adversaries).
pub fn client_first_flow_with<G: Group, R: RngCore + CryptoRng>(
    params: &Params<G>,
    client: &Keypair<G>,
    encoded: &EncodedModelMal<G>,
    inputs: &[Vec<u32>],
    alphas: Option<Vec<G::Scalar>>,
    values: &TableValues,
    rng: &mut R,
) -> Result<(FirstFlow<G>, ClientSecrets<G>), MalError> {
    let sums = encoded.path_sums(inputs)?;
    let alphas = match alphas {
        Some(a) => {
            count("masks", encoded.paths, a.len())?;
            a
        }
        None => (0..encoded.paths).map(|_| G::random_scalar(rng)).collect(),
    };
    let server = Encryptor::new(&encoded.pk);
    let mut flow = FirstFlow {
        betas: Vec::with_capacity(encoded.paths),
        bundles: Vec::with_capacity(encoded.paths),
    };
    let mut secrets = ClientSecrets {
        alphas: alphas.clone(),
        labels: Vec::with_capacity(encoded.paths),
        comparands: Vec::with_capacity(encoded.paths),
    };
    for (sum, alpha) in sums.iter().zip(&alphas) {
        flow.betas.push(server.randomize(&(server.encrypt(alpha, rng) + *sum), rng));
        let a = comparand::<G>(alpha, encoded.len, params.width);
        let (bundle, labels) = gc::generate_with(&client.pk, &a, values, rng);
        flow.bundles.push(bundle);
        secrets.labels.push(labels);
        secrets.comparands.push(a);
    }
    Ok((flow, secrets))
}

pub fn client_init_and_eval<G: Group, R: RngCore + CryptoRng>(
    params: &Params<G>,
    client: &Keypair<G>,
    encoded: &EncodedModelMal<G>,
    inputs: &[Vec<u32>],
    rng: &mut R,
) -> Result<(FirstFlow<G>, ClientSecrets<G>), MalError> {
    client_first_flow_with(params, client, encoded, inputs, None, &gc::HONEST_VALUES, rng)
}

/// Server comparands `[b_A, b_B] = [H(g^{β} - L·g), H(g^β)]`.
pub fn server_comparands<G: Group>(g_beta: &G::Element, len: usize, width: usize) -> [Vec<bool>; 2] {
    let shifted = *g_beta - G::encode_int(len as i64);
    [
        gc::hash_comparand::<G>(&shifted, width),
        gc::hash_comparand::<G>(g_beta, width),
    ]
}

/// Flow 2: `2·width` choices per path, test A bits first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OtRequest<G: Group> {
    pub choices: Vec<OtEncodedChoice<G>>,
}

/// Receiver state the server keeps between flows 2 and 3.
#[derive(Debug)]
pub struct ServerPending<G: Group> {
    receivers: Vec<OtReceiverState<G>>,
    pub comparands: Vec<[Vec<bool>; 2]>,
}

pub fn server_decrypt_and_ot<G: Group, R: RngCore + CryptoRng>(
    params: &Params<G>,
    server: &SecretKey<G>,
    len: usize,
    betas: &[Ciphertext<G>],
    rng: &mut R,
) -> (OtRequest<G>, ServerPending<G>) {
    let mut choices = Vec::with_capacity(betas.len() * 2 * params.width);
    let mut receivers = Vec::with_capacity(choices.capacity());
    let mut comparands = Vec::with_capacity(betas.len());
    for beta in betas {
        let bits = server_comparands::<G>(&server.decrypt_to_group(beta), len, params.width);
        for &b in bits.iter().flatten() {
            let (c, st) = ot::encode(&params.crs, b, rng);
            choices.push(c);
            receivers.push(st);
        }
        comparands.push(bits);
    }
    (OtRequest { choices }, ServerPending { receivers, comparands })
}

/// Flow 3, one response per choice in the same order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OtReply<G: Group> {
    pub responses: Vec<OtResponse<G>>,
}

/// Answers each choice with the label pair of the matching evaluator wire.
/// `pick` may replace the pair (adversaries); honest callers pass the pair
/// through.
pub fn client_ot_respond_with<G: Group, R: RngCore + CryptoRng>(
    params: &Params<G>,
    secrets: &ClientSecrets<G>,
    request: &OtRequest<G>,
    mut pick: impl FnMut(usize, usize, usize, [Label; 2]) -> [Label; 2],
    rng: &mut R,
) -> Result<OtReply<G>, MalError> {
    let w = params.width;
    count("OT choices", secrets.labels.len() * 2 * w, request.choices.len())?;
    let mut responses = Vec::with_capacity(request.choices.len());
    for (n, choice) in request.choices.iter().enumerate() {
        let (path, test, bit) = (n / (2 * w), (n / w) % 2, n % w);
        let pair = pick(path, test, bit, secrets.labels[path].pairs[test][bit]);
        responses.push(ot::compute(&params.crs, (&pair[0].0, &pair[1].0), choice, rng)?);
    }
    Ok(OtReply { responses })
}

pub fn client_ot_respond<G: Group, R: RngCore + CryptoRng>(
    params: &Params<G>,
    secrets: &ClientSecrets<G>,
    request: &OtRequest<G>,
    rng: &mut R,
) -> Result<OtReply<G>, MalError> {
    client_ot_respond_with(params, secrets, request, |_, _, _, p| p, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathVerdict<G: Group> {
    Fired([Ciphertext<G>; 2]),
    Failure,
    ProofRejected,
}

impl<G: Group> PathVerdict<G> {
    pub fn is_cheat(&self) -> bool {
        !matches!(self, PathVerdict::Fired(_))
    }
}

/// Evaluates every bundle on the OT-delivered labels and checks both
/// proofs. Wrong counts are a protocol violation; per-path faults become
/// verdicts.
pub fn server_evaluate<G: Group>(
    params: &Params<G>,
    client_pk: &PublicKey<G>,
    bundles: &[GarbledPathBundle<G>],
    pending: &ServerPending<G>,
    reply: &OtReply<G>,
) -> Result<Vec<PathVerdict<G>>, MalError> {
    let refs: Vec<_> = bundles.iter().map(Some).collect();
    server_evaluate_partial(params, client_pk, &refs, pending, reply)
}

/// As [`server_evaluate`]; a missing bundle (one that failed to parse)
/// counts as a failed path.
pub fn server_evaluate_partial<G: Group>(
    params: &Params<G>,
    client_pk: &PublicKey<G>,
    bundles: &[Option<&GarbledPathBundle<G>>],
    pending: &ServerPending<G>,
    reply: &OtReply<G>,
) -> Result<Vec<PathVerdict<G>>, MalError> {
    let w = params.width;
    count("bundles", pending.comparands.len(), bundles.len())?;
    count("OT responses", pending.receivers.len(), reply.responses.len())?;
    let label = |n: usize| {
        let m = ot::decode(&pending.receivers[n], &reply.responses[n]);
        let mut l = [0u8; LABEL_BYTES];
        let k = m.len().min(LABEL_BYTES);
        l[..k].copy_from_slice(&m[..k]);
        Label(l)
    };
    Ok(bundles
        .iter()
        .enumerate()
        .map(|(i, bundle)| {
            let Some(bundle) = bundle else {
                return PathVerdict::Failure;
            };
            let base = i * 2 * w;
            let labels = [
                (0..w).map(|k| label(base + k)).collect(),
                (0..w).map(|k| label(base + w + k)).collect(),
            ];
            match gc::eval(bundle, &labels) {
                Err(_) => PathVerdict::Failure,
                Ok(fired) => {
                    let ok = (0..2).all(|t| {
                        let [e0, e1] = &bundle.table[t];
                        verify_pm_pair(client_pk, &e0.sigma, &e1.sigma, &bundle.proofs[t])
                    });
                    if ok {
                        PathVerdict::Fired(fired.sigma)
                    } else {
                        PathVerdict::ProofRejected
                    }
                }
            }
        })
        .collect())
}

/// Server secrets for the final check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Blinding<G: Group> {
    pub theta: G::Scalar,
    pub zeta: G::Scalar,
}

/// Flow 4: `ζ · ⟦S_Ω⟧_C`.
pub fn compute_score<G: Group, R: RngCore + CryptoRng>(
    client_pk: &PublicKey<G>,
    polarities: &[i8],
    verdicts: &[PathVerdict<G>],
    rng: &mut R,
) -> (Ciphertext<G>, Blinding<G>) {
    assert_eq!(polarities.len(), verdicts.len());
    let enc = Encryptor::new(client_pk);
    let half = G::scalar_invert(&G::scalar_from_u64(2)).expect("2 is invertible");
    let theta = G::random_scalar(rng);
    let mut acc = enc.encrypt(&theta, rng);
    for (&p, v) in polarities.iter().zip(verdicts) {
        match v {
            PathVerdict::Fired([sa, sb]) => {
                acc = acc + (*sa + *sb) * (G::scalar_from_i64(p as i64) * half);
            }
            // θ' is discarded, so the unblinded result is uniform.
            _ => acc = enc.encrypt(&G::random_scalar(rng), rng),
        }
    }
    let zeta = G::random_nonzero_scalar(rng);
    (acc * zeta, Blinding { theta, zeta })
}

pub fn client_decrypt<G: Group>(client: &SecretKey<G>, ct: &Ciphertext<G>) -> G::Element {
    client.decrypt_to_group(ct)
}

/// `ζ^{-1}·elem - θ·g`, the unblinded score as a group element.
pub fn unblind<G: Group>(b: &Blinding<G>, elem: &G::Element) -> G::Element {
    let inv = G::scalar_invert(&b.zeta).expect("ζ is nonzero");
    *elem * inv - G::mul_base(&b.theta)
}

pub fn compute_result<G: Group>(b: &Blinding<G>, window: &WindowTable<G>, elem: &G::Element) -> Decision {
    Decision::from_bool(window.lookup(&unblind(b, elem)).is_some())
}

/// The server side of one session, owning its keys and model.
pub struct Server<G: Group> {
    pub params: Params<G>,
    pub keys: Keypair<G>,
    pub model: ForestModel,
    pub window: WindowTable<G>,
}

impl<G: Group> Server<G> {
    pub fn new(params: Params<G>, keys: Keypair<G>, model: ForestModel) -> Self {
        let window = WindowTable::new(model.tau, model.max_score());
        Server {
            params,
            keys,
            model,
            window,
        }
    }

    pub fn polarities(&self) -> Vec<i8> {
        self.model.paths.iter().map(|p| p.polarity).collect()
    }
}

#[cfg(test)]
mod tests;
