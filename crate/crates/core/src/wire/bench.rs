//! Online bandwidth: the closed-form accounting and measured
//! loopback sessions.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use super::artifact::{self, ArtifactHeader};
use super::session::{run_loopback, ClientSession, ServerConfig};
use super::transport::Direction;
use super::WireError;
use crate::ahe::keygen;
use crate::forest::{ForestModel, Tree};
use crate::gc::GarbledPathBundle;
use crate::group::Group;
use crate::malicious::adversary::Adversary;
use crate::malicious::{encode_model_mal, Params};
use crate::zkp::PROOF_BYTES;

/// Serialized ciphertext, bits.
pub const LAMBDA_AHE: u64 = 512;
/// Comparand width, bits.
pub const LAMBDA_GC: u64 = 64;
/// Hash output (label) size, bits.
pub const KAPPA_H: u64 = 256;
/// OT receiver message, bits.
pub const LAMBDA_OT_R: u64 = 512;
/// OT sender message, bits.
pub const LAMBDA_OT_S: u64 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchMode {
    Hbc,
    Malicious,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Accounting {
    Formula,
    Measured,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Item {
    pub party: &'static str,
    pub name: &'static str,
    pub bits: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BenchRow {
    pub mode: BenchMode,
    pub accounting: Accounting,
    pub paths: usize,
    pub client_bits: u64,
    pub server_bits: u64,
    /// Measured mode: itemized components, summing to the totals.
    pub items: Vec<Item>,
}

impl BenchRow {
    pub fn client(&self) -> String {
        format_size(self.client_bits)
    }

    pub fn server(&self) -> String {
        format_size(self.server_bits)
    }
}

/// Client bits per path spent on garbled material: three ciphertexts and
/// label vectors plus two labels.
pub fn formula_gc_bits_per_path() -> u64 {
    3 * (LAMBDA_AHE + LAMBDA_GC * KAPPA_H) + 2 * KAPPA_H
}

pub fn formula_row(mode: BenchMode, paths: usize) -> BenchRow {
    let p = paths as u64;
    let (client_bits, server_bits) = match mode {
        BenchMode::Hbc => (p * LAMBDA_AHE, 0),
        BenchMode::Malicious => (
            p * (formula_gc_bits_per_path() + LAMBDA_GC * LAMBDA_OT_S),
            p * LAMBDA_GC * LAMBDA_OT_R,
        ),
    };
    BenchRow {
        mode,
        accounting: Accounting::Formula,
        paths,
        client_bits,
        server_bits,
        items: Vec::new(),
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Rounds `num / den` half-up to an integer.
fn round_div(num: u128, den: u128) -> u128 {
    (2 * num + den) / (2 * den)
}

/// KiB with two decimals below 1 MiB, MiB with one decimal above, both
/// rounded half-up with trailing zeros dropped: `3.13 KB`, `1.4 MB`.
pub fn format_size(bits: u64) -> String {
    let bits = bits as u128;
    let kib = 8 * 1024;
    if bits < 1024 * kib {
        let h = round_div(bits * 100, kib);
        trim(format!("{}.{:02}", h / 100, h % 100)) + " KB"
    } else {
        let t = round_div(bits * 10, 1024 * kib);
        trim(format!("{}.{}", t / 10, t % 10)) + " MB"
    }
}

/// A model with exactly `paths` paths; content is irrelevant to the byte
/// counts.
pub fn bench_model<R: rand::Rng>(mode: BenchMode, paths: usize, delta: usize, rng: &mut R) -> ForestModel {
    let features = 4;
    let accept = vec![Tree::leaf(true); paths];
    match mode {
        BenchMode::Hbc => ForestModel::binary(&accept, delta, 3, features).expect("leaf trees compile"),
        BenchMode::Malicious => {
            // Leaf trees complete to 2^{δ-1} paths each; top up with
            // always-accepting paths.
            let per_tree = 1usize << (delta - 1);
            let trees = vec![Tree::leaf(true); paths / per_tree];
            let extra = paths - trees.len() * per_tree;
            ForestModel::ternary(&trees, delta, 3, features, extra, rng).expect("leaf trees compile")
        }
    }
}

/// Runs one loopback session at `paths` paths and reports the bytes on the
/// wire, itemized.
pub fn measured_row<G: Group>(
    mode: BenchMode,
    paths: usize,
    width: usize,
    seed: u64,
) -> Result<BenchRow, WireError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let model = bench_model(mode, paths, 2, &mut rng);
    measured_for_model::<G>(&model, width, seed)
}

/// As [`measured_row`] on a caller-supplied model.
pub fn measured_for_model<G: Group>(model: &ForestModel, width: usize, seed: u64) -> Result<BenchRow, WireError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mode = match model.mode {
        crate::forest::Mode::Binary => BenchMode::Hbc,
        crate::forest::Mode::Ternary => BenchMode::Malicious,
    };
    let server_keys = keygen::<G, _>(&mut rng);
    let client_keys = keygen::<G, _>(&mut rng);
    let params = Params::<G> {
        width,
        ..Params::default()
    };
    let encoded = match mode {
        BenchMode::Hbc => crate::hbc::encode_model(&server_keys.pk, model, &mut rng),
        BenchMode::Malicious => encode_model_mal(&server_keys.pk, model, &mut rng)?,
    };
    let hash = artifact::model_hash(model);
    let header: ArtifactHeader = artifact::peek_header(&artifact::export(&encoded, &hash, width as u16))?;
    let cfg = ServerConfig::new(params.clone(), server_keys, model.clone(), None);
    let session = ClientSession {
        header: &header,
        encoded: &encoded,
        params: &params,
        keys: Some(&client_keys),
        adversary: &Adversary::Honest,
    };
    let x = vec![0; model.features.max(1)];
    let (_, transcript) = run_loopback(&cfg, &session, &x, seed)?;
    let up = transcript.totals(Direction::ClientToServer);
    let down = transcript.totals(Direction::ServerToClient);
    let p = model.p as u64;
    let w = width as u64;
    let bits = |bytes: u64| 8 * bytes;
    let items = match mode {
        BenchMode::Hbc => vec![
            Item {
                party: "client",
                name: "path scores",
                bits: bits(up.flow_bytes as u64),
            },
            Item {
                party: "client",
                name: "framing and setup",
                bits: bits(up.overhead() as u64),
            },
            Item {
                party: "server",
                name: "framing and setup",
                bits: bits(down.overhead() as u64),
            },
        ],
        BenchMode::Malicious => {
            let gates = p * 2 * w.saturating_sub(1) * 64;
            let labels = p * w * 32;
            let tables = p * 4 * 96;
            let proofs = p * 2 * PROOF_BYTES as u64;
            debug_assert_eq!(
                gates + labels + tables + proofs,
                p * GarbledPathBundle::<G>::encoded_len(width) as u64
            );
            vec![
                Item {
                    party: "client",
                    name: "masked sums",
                    bits: bits(p * 64),
                },
                Item {
                    party: "client",
                    name: "garbled gates (both tests)",
                    bits: bits(gates),
                },
                Item {
                    party: "client",
                    name: "generator labels",
                    bits: bits(labels),
                },
                Item {
                    party: "client",
                    name: "transition tables",
                    bits: bits(tables),
                },
                Item {
                    party: "client",
                    name: "table proofs",
                    bits: bits(proofs),
                },
                Item {
                    party: "client",
                    name: "OT responses (both tests)",
                    bits: bits(p * 2 * w * 128),
                },
                Item {
                    party: "client",
                    name: "decrypted score",
                    bits: bits(32),
                },
                Item {
                    party: "client",
                    name: "framing and setup",
                    bits: bits(up.overhead() as u64),
                },
                Item {
                    party: "server",
                    name: "OT choices (both tests)",
                    bits: bits(p * 2 * w * 32),
                },
                Item {
                    party: "server",
                    name: "blinded score",
                    bits: bits(64),
                },
                Item {
                    party: "server",
                    name: "framing and setup",
                    bits: bits(down.overhead() as u64),
                },
            ]
        }
    };
    let row = BenchRow {
        mode,
        accounting: Accounting::Measured,
        paths: model.p,
        client_bits: bits(up.frame_bytes as u64),
        server_bits: bits(down.frame_bytes as u64),
        items,
    };
    let sum = |party| row.items.iter().filter(|i| i.party == party).map(|i| i.bits).sum::<u64>();
    if sum("client") != row.client_bits || sum("server") != row.server_bits {
        return Err(WireError::Protocol("itemized bytes do not add up".into()));
    }
    Ok(row)
}
