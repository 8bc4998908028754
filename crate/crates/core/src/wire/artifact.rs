//! Offline artifact: the encoded model table plus the public parameters
//! needed to use it.
//!
//! ```text
//! "SDFE" ‖ version ‖ mode ‖ group id ‖ ν ‖ P (u32) ‖ L (u32)
//!        ‖ λ_AHE (u16) ‖ λ_GC (u16) ‖ κ_H (u16) ‖ model hash (32) ‖ pk (32)
//!        ‖ layout: P·L feature indices (u16)
//!        ‖ table: P·L·2^ν ciphertexts
//! ```
//!
//! Integers are big-endian.

use sha2::{Digest, Sha256};

use crate::ahe::{Ciphertext, PublicKey, CIPHERTEXT_BITS, CIPHERTEXT_BYTES};
use crate::codec::{DecodeError, Reader};
use crate::encoding::EncodedModel;
use crate::forest::{ForestModel, Mode};
use crate::group::Group;

pub const MAGIC: [u8; 4] = *b"SDFE";
pub const VERSION: u8 = 1;
/// Fixed part of the header, up to and including the public key.
pub const FIXED_HEADER_BYTES: usize = 4 + 4 + 8 + 6 + 32 + 32;
/// Label size in bits.
pub const KAPPA_H: u16 = 256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArtifactHeader {
    pub version: u8,
    pub mode: Mode,
    pub group: u8,
    pub nu: u8,
    pub paths: u32,
    pub len: u32,
    pub lambda_ahe: u16,
    pub lambda_gc: u16,
    pub kappa_h: u16,
    pub model_hash: [u8; 32],
}

impl ArtifactHeader {
    /// Bytes before the table.
    pub fn header_bytes(&self) -> usize {
        FIXED_HEADER_BYTES + 2 * self.paths as usize * self.len as usize
    }

    pub fn payload_bits(&self) -> u64 {
        ((self.paths as u64 * self.len as u64) << self.nu) * CIPHERTEXT_BITS
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("not an artifact (bad magic)")]
    Magic,
    #[error("unsupported artifact version {0}")]
    Version(u8),
    #[error("artifact is for group {found}, expected {expected}")]
    Group { expected: u8, found: u8 },
    #[error("bad header field: {0}")]
    Field(&'static str),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Version identifier: SHA-256 over the canonical model JSON.
pub fn model_hash(model: &ForestModel) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"sdfe/model");
    h.update(model.to_json().as_bytes());
    h.finalize().into()
}

pub fn export<G: Group>(encoded: &EncodedModel<G>, model_hash: &[u8; 32], lambda_gc: u16) -> Vec<u8> {
    let mut out = Vec::with_capacity(
        FIXED_HEADER_BYTES + 2 * encoded.paths * encoded.len + encoded.cts.len() * CIPHERTEXT_BYTES,
    );
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(match encoded.mode {
        Mode::Binary => 0,
        Mode::Ternary => 1,
    });
    out.push(G::ID);
    out.push(encoded.nu);
    out.extend_from_slice(&(encoded.paths as u32).to_be_bytes());
    out.extend_from_slice(&(encoded.len as u32).to_be_bytes());
    out.extend_from_slice(&(CIPHERTEXT_BITS as u16).to_be_bytes());
    out.extend_from_slice(&lambda_gc.to_be_bytes());
    out.extend_from_slice(&KAPPA_H.to_be_bytes());
    out.extend_from_slice(model_hash);
    out.extend_from_slice(&encoded.pk.to_bytes());
    for row in &encoded.layout {
        for &f in row {
            out.extend_from_slice(&(f as u16).to_be_bytes());
        }
    }
    for ct in &encoded.cts {
        ct.write(&mut out);
    }
    out
}

fn read_header(r: &mut Reader<'_>) -> Result<ArtifactHeader, ArtifactError> {
    if r.array::<4>()? != MAGIC {
        return Err(ArtifactError::Magic);
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(ArtifactError::Version(version));
    }
    let mode = match r.u8()? {
        0 => Mode::Binary,
        1 => Mode::Ternary,
        _ => return Err(ArtifactError::Field("mode")),
    };
    let group = r.u8()?;
    let nu = r.u8()?;
    if !(1..=16).contains(&nu) {
        return Err(ArtifactError::Field("nu"));
    }
    let header = ArtifactHeader {
        version,
        mode,
        group,
        nu,
        paths: r.u32()?,
        len: r.u32()?,
        lambda_ahe: r.u16()?,
        lambda_gc: r.u16()?,
        kappa_h: r.u16()?,
        model_hash: r.array()?,
    };
    if header.lambda_ahe as u64 != CIPHERTEXT_BITS {
        return Err(ArtifactError::Field("lambda_ahe"));
    }
    if header.lambda_gc == 0 || header.lambda_gc > 256 {
        return Err(ArtifactError::Field("lambda_gc"));
    }
    Ok(header)
}

/// Reads only the header, for dispatching on the group id.
pub fn peek_header(bytes: &[u8]) -> Result<ArtifactHeader, ArtifactError> {
    read_header(&mut Reader::new(bytes))
}

pub fn import<G: Group>(bytes: &[u8]) -> Result<(ArtifactHeader, EncodedModel<G>), ArtifactError> {
    let mut r = Reader::new(bytes);
    let header = read_header(&mut r)?;
    if header.group != G::ID {
        return Err(ArtifactError::Group {
            expected: G::ID,
            found: header.group,
        });
    }
    let pk = PublicKey { h: r.element::<G>()? };
    let (paths, len) = (header.paths as usize, header.len as usize);
    let expected = paths
        .checked_mul(len)
        .and_then(|n| n.checked_mul(2 + (CIPHERTEXT_BYTES << header.nu)))
        .ok_or(ArtifactError::Field("size"))?;
    if r.remaining() != expected {
        return Err(ArtifactError::Field("table size"));
    }
    let mut layout = Vec::with_capacity(paths);
    for _ in 0..paths {
        layout.push((0..len).map(|_| r.u16().map(usize::from)).collect::<Result<_, _>>()?);
    }
    let cts = (0..(paths * len) << header.nu)
        .map(|_| Ciphertext::read(&mut r))
        .collect::<Result<_, _>>()?;
    r.finish()?;
    let encoded = EncodedModel {
        mode: header.mode,
        pk,
        nu: header.nu,
        paths,
        len,
        layout,
        cts,
    };
    Ok((header, encoded))
}
