//! Client strategies and an in-memory session driver for the soundness
//! harnesses. The server side is always honest.

use rand::seq::index::sample;
use rand::{CryptoRng, Rng, RngCore};

use super::*;
use crate::gc::Corruption;

/// How a forcing client steers each path's pre-polarity outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    /// Lie about `⟦β_i⟧`: send `⟦α_i + s⟧` with the sum `s` of the target.
    Sums,
    /// Keep `⟦β_i⟧` honest and feed the evaluator labels that make the
    /// wanted equality tests fire, whatever the server's comparands.
    Labels,
}

/// Per-path targets in `{-1, 0, +1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    AllPlus,
    AllMinus,
    Alternating,
    /// Guess the polarity of `k` random paths and push them to the guess,
    /// zero everywhere else.
    GuessK { k: usize },
    Fixed(Vec<i8>),
}

impl Rule {
    pub fn targets<R: Rng>(&self, paths: usize, rng: &mut R) -> Vec<i8> {
        match self {
            Rule::AllPlus => vec![1; paths],
            Rule::AllMinus => vec![-1; paths],
            Rule::Alternating => (0..paths).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect(),
            Rule::GuessK { k } => {
                let mut t = vec![0; paths];
                for i in sample(rng, paths, (*k).min(paths)) {
                    t[i] = if rng.gen() { 1 } else { -1 };
                }
                t
            }
            Rule::Fixed(t) => {
                assert_eq!(t.len(), paths, "fixed rule length");
                t.clone()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Adversary {
    Honest,
    Forced { rule: Rule, channel: Channel },
    /// Table plaintexts swapped in both tests: still a valid `{+1, -1}`
    /// pair, so the proofs pass and every outcome flips sign.
    SwappedTables,
    /// The honest-but-curious break transplanted: every path sum claimed
    /// to be `0`.
    AllZeros,
    /// One bit of one random half-gate row in one random path.
    CorruptGate,
    /// One proof response in one random path.
    CorruptProof,
    /// Flow 5 replaced by a random group element.
    RandomDecryption,
}

impl std::str::FromStr for Adversary {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let forced = |rule| Adversary::Forced {
            rule,
            channel: Channel::Labels,
        };
        Ok(match s {
            "honest" => Adversary::Honest,
            "all-plus" | "forced" => forced(Rule::AllPlus),
            "all-minus" => forced(Rule::AllMinus),
            "alternating" => forced(Rule::Alternating),
            "swapped-tables" => Adversary::SwappedTables,
            "all-zeros" => Adversary::AllZeros,
            "corrupt-gate" => Adversary::CorruptGate,
            "corrupt-proof" => Adversary::CorruptProof,
            "random-decryption" => Adversary::RandomDecryption,
            _ => match s.strip_prefix("guess-").map(str::parse) {
                Some(Ok(k)) => forced(Rule::GuessK { k }),
                _ => return Err(format!("unknown adversary {s:?}")),
            },
        })
    }
}

/// Plaintext path sum that yields `target` before polarity.
pub fn target_sum(target: i8, len: usize) -> i64 {
    let len = len as i64;
    match target {
        1 => 2 * len - 1,
        -1 => len - 1,
        _ => 2 * len,
    }
}

/// The client half of a session under some strategy.
pub struct Client<'a, G: Group> {
    pub params: &'a Params<G>,
    pub keys: &'a Keypair<G>,
    pub adversary: &'a Adversary,
    targets: Vec<i8>,
    secrets: Option<ClientSecrets<G>>,
}

impl<'a, G: Group> Client<'a, G> {
    pub fn new(params: &'a Params<G>, keys: &'a Keypair<G>, adversary: &'a Adversary) -> Self {
        Client {
            params,
            keys,
            adversary,
            targets: Vec::new(),
            secrets: None,
        }
    }

    /// Targets actually drawn by a forcing rule, for the harness.
    pub fn targets(&self) -> &[i8] {
        &self.targets
    }

    pub fn first_flow<R: RngCore + CryptoRng>(
        &mut self,
        encoded: &EncodedModelMal<G>,
        x: &[u32],
        rng: &mut R,
    ) -> Result<FirstFlow<G>, MalError> {
        let inputs = crate::forest::resolve(&encoded.layout, x, encoded.nu).map_err(EvalError::from)?;
        let values = match self.adversary {
            Adversary::SwappedTables => [[1, -1], [-1, 1]],
            _ => gc::HONEST_VALUES,
        };
        let (mut flow, secrets) =
            client_first_flow_with(self.params, self.keys, encoded, &inputs, None, &values, rng)?;
        let server = Encryptor::new(&encoded.pk);
        match self.adversary {
            Adversary::Forced { rule, channel } => {
                self.targets = rule.targets(encoded.paths, rng);
                if *channel == Channel::Sums {
                    for (i, beta) in flow.betas.iter_mut().enumerate() {
                        let s = G::scalar_from_i64(target_sum(self.targets[i], encoded.len));
                        *beta = server.encrypt(&(secrets.alphas[i] + s), rng);
                    }
                }
            }
            Adversary::AllZeros => {
                for (beta, alpha) in flow.betas.iter_mut().zip(&secrets.alphas) {
                    *beta = server.encrypt(alpha, rng);
                }
            }
            Adversary::CorruptGate => {
                let path = rng.gen_range(0..flow.bundles.len());
                let b = &mut flow.bundles[path];
                let test = rng.gen_range(0..2);
                if !b.gates[test].is_empty() {
                    Corruption::GateBit {
                        test,
                        gate: rng.gen_range(0..b.gates[test].len()),
                        row: rng.gen_range(0..2),
                        bit: rng.gen_range(0..8 * LABEL_BYTES),
                    }
                    .apply(b);
                }
            }
            Adversary::CorruptProof => {
                let path = rng.gen_range(0..flow.bundles.len());
                Corruption::ProofResponse {
                    test: rng.gen_range(0..2),
                }
                .apply(&mut flow.bundles[path]);
            }
            _ => {}
        }
        self.secrets = Some(secrets);
        Ok(flow)
    }

    pub fn ot_flow<R: RngCore + CryptoRng>(
        &mut self,
        request: &OtRequest<G>,
        rng: &mut R,
    ) -> Result<OtReply<G>, MalError> {
        let secrets = self.secrets.as_ref().expect("first flow precedes OT");
        let forcing = matches!(
            self.adversary,
            Adversary::Forced {
                channel: Channel::Labels,
                ..
            }
        );
        if !forcing {
            return client_ot_respond(self.params, secrets, request, rng);
        }
        let targets = &self.targets;
        let a = &secrets.comparands;
        client_ot_respond_with(
            self.params,
            secrets,
            request,
            |path, test, bit, pair| {
                // Equal on the wanted test: every bit matches a_i. Otherwise
                // bit 0 mismatches.
                let equal = match targets[path] {
                    1 => test == gc::TEST_A,
                    -1 => test == gc::TEST_B,
                    _ => false,
                };
                let value = a[path][bit] ^ (!equal && bit == 0);
                let l = pair[value as usize];
                [l, l]
            },
            rng,
        )
    }

    pub fn final_flow<R: RngCore + CryptoRng>(&self, score: &Ciphertext<G>, rng: &mut R) -> G::Element {
        match self.adversary {
            Adversary::RandomDecryption => G::random_element(rng),
            _ => client_decrypt(&self.keys.sk, score),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SessionOutcome {
    pub decision: Decision,
    /// Paths whose bundle failed or whose proofs were rejected.
    pub detected: usize,
    /// Unblinded score when it falls in `[-P, P]`.
    pub score: Option<i64>,
}

/// Runs all five flows in memory.
pub fn run_session<G: Group, R: RngCore + CryptoRng>(
    server: &Server<G>,
    encoded: &EncodedModelMal<G>,
    client: &mut Client<'_, G>,
    x: &[u32],
    rng: &mut R,
) -> Result<SessionOutcome, MalError> {
    let p = server.model.p;
    let flow1 = client.first_flow(encoded, x, rng)?;
    count("masked sums", p, flow1.betas.len())?;
    let (request, pending) = server_decrypt_and_ot(
        &server.params,
        &server.keys.sk,
        server.model.path_len(),
        &flow1.betas,
        rng,
    );
    let reply = client.ot_flow(&request, rng)?;
    let verdicts = server_evaluate(&server.params, &client.keys.pk, &flow1.bundles, &pending, &reply)?;
    let (score, blinding) = compute_score(&client.keys.pk, &server.polarities(), &verdicts, rng);
    let elem = client.final_flow(&score, rng);
    let bound = p as i64;
    Ok(SessionOutcome {
        decision: compute_result(&blinding, &server.window, &elem),
        detected: verdicts.iter().filter(|v| v.is_cheat()).count(),
        score: crate::ahe::window_check::<G>(&unblind(&blinding, &elem), -bound, bound),
    })
}
