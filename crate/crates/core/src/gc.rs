//! Garbled equality tests with free-XOR, half-gates and point-and-permute.
//!
//! A path bundle holds two equality circuits over `width`-bit inputs that
//! share the generator's input wires and the global offset `Δ`:
//! test A compares `a` with `b_A`, test B compares `a` with `b_B`. Each
//! circuit is `width` free XNORs feeding a tree of `width - 1` AND gates,
//! two `κ_H`-bit rows per AND.
//!
//! The output label selects one of two transition-table rows by its
//! permute bit; the row carries a digest of the label (mismatch means
//! FAILURE) and a ciphertext of ±1 under the generator's key.

use std::ops::BitXor;

use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use crate::ahe::{Ciphertext, PublicKey, CIPHERTEXT_BYTES};
use crate::codec::{DecodeError, Reader};
use crate::group::Group;
use crate::zkp::{self, PmPairProof, PROOF_BYTES};

/// Wire label length in bytes (`κ_H = 256` bits).
pub const LABEL_BYTES: usize = 32;
/// Default comparand width (`λ_GC`).
pub const DEFAULT_WIDTH: usize = 64;
pub const TEST_A: usize = 0;
pub const TEST_B: usize = 1;

const GATE_DOMAIN: &[u8] = b"gc/and";
const OUT_DOMAIN: &[u8] = b"gc/out";
const INPUT_DOMAIN: &[u8] = b"sdfe/gc/comparand";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Label(pub [u8; LABEL_BYTES]);

impl Label {
    pub fn random<R: RngCore>(rng: &mut R) -> Self {
        let mut b = [0u8; LABEL_BYTES];
        rng.fill_bytes(&mut b);
        Label(b)
    }

    /// Point-and-permute bit.
    pub fn lsb(&self) -> bool {
        self.0[0] & 1 == 1
    }

    fn select(self, bit: bool) -> Label {
        if bit {
            self
        } else {
            Label::default()
        }
    }
}

impl BitXor for Label {
    type Output = Label;
    fn bitxor(mut self, rhs: Label) -> Label {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a ^= b;
        }
        self
    }
}

/// Free-XOR offset; its permute bit is 1 so paired labels have opposite
/// permute bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Delta(Label);

impl Delta {
    pub fn random<R: RngCore>(rng: &mut R) -> Self {
        let mut l = Label::random(rng);
        l.0[0] |= 1;
        Delta(l)
    }

    pub fn label(&self) -> Label {
        self.0
    }
}

/// Half-gates ciphertexts `(T_G, T_E)` of one AND gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AndGate {
    pub rows: [Label; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TableEntry<G: Group> {
    pub digest: [u8; 32],
    pub sigma: Ciphertext<G>,
}

/// Everything the evaluator receives directly (evaluator labels travel by
/// OT instead).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GarbledPathBundle<G: Group> {
    pub gates: [Vec<AndGate>; 2],
    pub generator_labels: Vec<Label>,
    /// `table[test][permute bit]`.
    pub table: [[TableEntry<G>; 2]; 2],
    /// Proof that `table[test][0].sigma, table[test][1].sigma` is `{+1, -1}`.
    pub proofs: [PmPairProof<G>; 2],
}

/// Evaluator label pairs kept by the generator, `pairs[test][bit][value]`.
#[derive(Clone, Debug)]
pub struct EvaluatorLabels {
    pub pairs: [Vec<[Label; 2]>; 2],
}

impl EvaluatorLabels {
    /// Labels an honest OT run delivers for the comparands `b_A`, `b_B`.
    pub fn select(&self, b_a: &[bool], b_b: &[bool]) -> [Vec<Label>; 2] {
        let pick = |pairs: &[[Label; 2]], bits: &[bool]| {
            pairs.iter().zip(bits).map(|(p, &b)| p[b as usize]).collect()
        };
        [pick(&self.pairs[TEST_A], b_a), pick(&self.pairs[TEST_B], b_b)]
    }
}

/// Plaintext written behind test `test`'s output when equality does or
/// does not hold.
pub fn table_value(test: usize, equal: bool) -> i64 {
    HONEST_VALUES[test][equal as usize]
}

/// Hashes a group element to the `width`-bit comparand fed to the circuits.
pub fn hash_comparand<G: Group>(elem: &G::Element, width: usize) -> Vec<bool> {
    assert!(width <= 256, "comparand width {width} exceeds the hash output");
    let mut h = Sha256::new();
    h.update(INPUT_DOMAIN);
    h.update(G::element_to_bytes(elem));
    let d = h.finalize();
    (0..width).map(|i| (d[i / 8] >> (7 - i % 8)) & 1 == 1).collect()
}

fn gate_hash(label: &Label, tweak: u64) -> Label {
    let mut h = Sha256::new();
    h.update(GATE_DOMAIN);
    h.update(tweak.to_be_bytes());
    h.update(label.0);
    Label(h.finalize().into())
}

fn out_digest(test: usize, label: &Label) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(OUT_DOMAIN);
    h.update([test as u8]);
    h.update(label.0);
    h.finalize().into()
}

fn tweak(test: usize, gate: usize, half: u64) -> u64 {
    ((test as u64) << 48) | ((gate as u64) << 1) | half
}

/// Pairs wires level by level, carrying an odd wire to the next level.
/// Calls `and(u, v, gate_index)` for each of the `n - 1` gates.
fn and_tree<T: Copy>(mut wires: Vec<T>, mut and: impl FnMut(T, T, usize) -> T) -> T {
    assert!(!wires.is_empty());
    let mut gate = 0;
    while wires.len() > 1 {
        let mut next = Vec::with_capacity(wires.len().div_ceil(2));
        for pair in wires.chunks(2) {
            match *pair {
                [u, v] => {
                    next.push(and(u, v, gate));
                    gate += 1;
                }
                [u] => next.push(u),
                _ => unreachable!(),
            }
        }
        wires = next;
    }
    wires[0]
}

fn garble_and(a0: Label, b0: Label, delta: &Delta, test: usize, gate: usize) -> (AndGate, Label) {
    let d = delta.label();
    let (pa, pb) = (a0.lsb(), b0.lsb());
    let (j0, j1) = (tweak(test, gate, 0), tweak(test, gate, 1));
    let (ha0, ha1) = (gate_hash(&a0, j0), gate_hash(&(a0 ^ d), j0));
    let (hb0, hb1) = (gate_hash(&b0, j1), gate_hash(&(b0 ^ d), j1));
    let tg = ha0 ^ ha1 ^ d.select(pb);
    let wg0 = ha0 ^ tg.select(pa);
    let te = hb0 ^ hb1 ^ a0;
    let we0 = hb0 ^ (te ^ a0).select(pb);
    (AndGate { rows: [tg, te] }, wg0 ^ we0)
}

fn eval_and(a: Label, b: Label, g: &AndGate, test: usize, gate: usize) -> Label {
    let (sa, sb) = (a.lsb(), b.lsb());
    let wg = gate_hash(&a, tweak(test, gate, 0)) ^ g.rows[0].select(sa);
    let we = gate_hash(&b, tweak(test, gate, 1)) ^ (g.rows[1] ^ a).select(sb);
    wg ^ we
}

/// `values[test][equal]`: the plaintext behind each test's outputs.
pub type TableValues = [[i64; 2]; 2];

/// Test A: equal → +1, unequal → -1. Test B: equal → -1, unequal → +1.
pub const HONEST_VALUES: TableValues = [[-1, 1], [1, -1]];

/// Garbles both tests for generator input `a` and builds the transition
/// table under `pk` (the generator's AHE key).
pub fn generate<G: Group, R: RngCore + CryptoRng>(
    pk: &PublicKey<G>,
    a: &[bool],
    rng: &mut R,
) -> (GarbledPathBundle<G>, EvaluatorLabels) {
    generate_with(pk, a, &HONEST_VALUES, rng)
}

/// As [`generate`] with caller-chosen table plaintexts. Each test's pair
/// must still be `{+1, -1}` so that its proof exists.
pub fn generate_with<G: Group, R: RngCore + CryptoRng>(
    pk: &PublicKey<G>,
    a: &[bool],
    values: &TableValues,
    rng: &mut R,
) -> (GarbledPathBundle<G>, EvaluatorLabels) {
    for v in values {
        assert!(v[0] + v[1] == 0 && v[0].abs() == 1, "table pair {v:?} is not ±1");
    }
    let width = a.len();
    let delta = Delta::random(rng);
    let d = delta.label();
    let gen_zero: Vec<Label> = (0..width).map(|_| Label::random(rng)).collect();
    let generator_labels = gen_zero
        .iter()
        .zip(a)
        .map(|(l, &bit)| *l ^ d.select(bit))
        .collect();

    let mut gates: [Vec<AndGate>; 2] = [Vec::new(), Vec::new()];
    let mut pairs: [Vec<[Label; 2]>; 2] = [Vec::new(), Vec::new()];
    let mut out_zero = [Label::default(); 2];
    for test in [TEST_A, TEST_B] {
        let eval_zero: Vec<Label> = (0..width).map(|_| Label::random(rng)).collect();
        pairs[test] = eval_zero.iter().map(|l| [*l, *l ^ d]).collect();
        // XNOR zero-label: the XOR zero-label shifted by Δ.
        let xnor_zero: Vec<Label> = gen_zero
            .iter()
            .zip(&eval_zero)
            .map(|(g, e)| *g ^ *e ^ d)
            .collect();
        let mut rows = Vec::with_capacity(width.saturating_sub(1));
        out_zero[test] = and_tree(xnor_zero, |u, v, gate| {
            let (g, w) = garble_and(u, v, &delta, test, gate);
            rows.push(g);
            w
        });
        gates[test] = rows;
    }

    let mut table = [[None, None], [None, None]];
    let mut proofs = Vec::with_capacity(2);
    for test in [TEST_A, TEST_B] {
        let o = [out_zero[test], out_zero[test] ^ d];
        // slot = permute bit of the label; slot 0 holds the "equal" output
        // exactly when the zero-label has permute bit 1.
        let equal_slot = o[1].lsb() as usize;
        let slot0_value = values[test][(equal_slot == 0) as usize];
        let swapped = slot0_value == -1;
        let (s0, s1, proof) = zkp::encrypt_pm_pair(pk, swapped, rng);
        for (value, label) in o.iter().enumerate() {
            let slot = label.lsb() as usize;
            table[test][slot] = Some(TableEntry {
                digest: out_digest(test, label),
                sigma: if slot == 0 { s0 } else { s1 },
            });
            debug_assert_eq!(value == 1, slot == equal_slot);
        }
        proofs.push(proof);
    }
    let table = table.map(|row| row.map(|e| e.expect("both slots filled")));
    let bundle = GarbledPathBundle {
        gates,
        generator_labels,
        table,
        proofs: [proofs[0], proofs[1]],
    };
    (bundle, EvaluatorLabels { pairs })
}

/// Fired table entries of a successful evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fired<G: Group> {
    pub slots: [usize; 2],
    pub sigma: [Ciphertext<G>; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("garbled evaluation failed")]
    Failure,
    #[error("label count mismatch")]
    Shape,
}

/// Gate rows the evaluator actually read, `(test, gate, row)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalTrace {
    pub consumed: Vec<(usize, usize, usize)>,
}

pub fn eval<G: Group>(
    bundle: &GarbledPathBundle<G>,
    evaluator_labels: &[Vec<Label>; 2],
) -> Result<Fired<G>, EvalError> {
    eval_traced(bundle, evaluator_labels, None)
}

pub fn eval_traced<G: Group>(
    bundle: &GarbledPathBundle<G>,
    evaluator_labels: &[Vec<Label>; 2],
    mut trace: Option<&mut EvalTrace>,
) -> Result<Fired<G>, EvalError> {
    let width = bundle.generator_labels.len();
    let mut slots = [0usize; 2];
    let mut sigma = [bundle.table[0][0].sigma; 2];
    for test in [TEST_A, TEST_B] {
        if evaluator_labels[test].len() != width
            || bundle.gates[test].len() != width.saturating_sub(1)
        {
            return Err(EvalError::Shape);
        }
        let inputs: Vec<Label> = bundle
            .generator_labels
            .iter()
            .zip(&evaluator_labels[test])
            .map(|(g, e)| *g ^ *e)
            .collect();
        let gates = &bundle.gates[test];
        let out = and_tree(inputs, |u, v, gate| {
            if let Some(t) = trace.as_deref_mut() {
                if u.lsb() {
                    t.consumed.push((test, gate, 0));
                }
                if v.lsb() {
                    t.consumed.push((test, gate, 1));
                }
            }
            eval_and(u, v, &gates[gate], test, gate)
        });
        let slot = out.lsb() as usize;
        let entry = &bundle.table[test][slot];
        if entry.digest != out_digest(test, &out) {
            return Err(EvalError::Failure);
        }
        slots[test] = slot;
        sigma[test] = entry.sigma;
    }
    Ok(Fired { slots, sigma })
}

impl<G: Group> GarbledPathBundle<G> {
    pub fn width(&self) -> usize {
        self.generator_labels.len()
    }

    /// Serialized length for comparand width `width`.
    pub const fn encoded_len(width: usize) -> usize {
        let and_gates = if width == 0 { 0 } else { width - 1 };
        4 * and_gates * LABEL_BYTES
            + width * LABEL_BYTES
            + 4 * (32 + CIPHERTEXT_BYTES)
            + 2 * PROOF_BYTES
    }

    /// Layout: gates of test A, gates of test B, generator labels, table in
    /// (test, slot) order, proofs of test A then B.
    pub fn write(&self, out: &mut Vec<u8>) {
        for test in [TEST_A, TEST_B] {
            for g in &self.gates[test] {
                out.extend_from_slice(&g.rows[0].0);
                out.extend_from_slice(&g.rows[1].0);
            }
        }
        for l in &self.generator_labels {
            out.extend_from_slice(&l.0);
        }
        for row in &self.table {
            for e in row {
                out.extend_from_slice(&e.digest);
                e.sigma.write(out);
            }
        }
        for p in &self.proofs {
            p.write(out);
        }
    }

    pub fn read(r: &mut Reader<'_>, width: usize) -> Result<Self, DecodeError> {
        let label = |r: &mut Reader<'_>| r.array::<LABEL_BYTES>().map(Label);
        let mut gates: [Vec<AndGate>; 2] = [Vec::new(), Vec::new()];
        for g in gates.iter_mut() {
            for _ in 0..width.saturating_sub(1) {
                g.push(AndGate {
                    rows: [label(r)?, label(r)?],
                });
            }
        }
        let generator_labels = (0..width).map(|_| label(r)).collect::<Result<_, _>>()?;
        let entry = |r: &mut Reader<'_>| -> Result<TableEntry<G>, DecodeError> {
            Ok(TableEntry {
                digest: r.array()?,
                sigma: Ciphertext::read(r)?,
            })
        };
        let table = [
            [entry(r)?, entry(r)?],
            [entry(r)?, entry(r)?],
        ];
        let proofs = [PmPairProof::read(r)?, PmPairProof::read(r)?];
        Ok(GarbledPathBundle {
            gates,
            generator_labels,
            table,
            proofs,
        })
    }
}

/// Fault injection for the failure-attack harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Corruption {
    /// Flip one bit of one half-gate row.
    GateBit {
        test: usize,
        gate: usize,
        row: usize,
        bit: usize,
    },
    /// Flip one bit of a generator input label.
    GeneratorLabelBit { wire: usize, bit: usize },
    /// Replace one table digest with garbage.
    TableDigest { test: usize, slot: usize },
    /// Flip one bit of a proof response.
    ProofResponse { test: usize },
}

impl Corruption {
    pub fn apply<G: Group>(&self, b: &mut GarbledPathBundle<G>) {
        match *self {
            Corruption::GateBit {
                test,
                gate,
                row,
                bit,
            } => b.gates[test][gate].rows[row].0[bit / 8] ^= 1 << (bit % 8),
            Corruption::GeneratorLabelBit { wire, bit } => {
                b.generator_labels[wire].0[bit / 8] ^= 1 << (bit % 8)
            }
            Corruption::TableDigest { test, slot } => b.table[test][slot].digest[0] ^= 0x80,
            Corruption::ProofResponse { test } => {
                b.proofs[test].z = b.proofs[test].z + G::scalar_one();
            }
        }
    }
}
