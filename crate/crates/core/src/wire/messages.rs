//! Payload codecs for each frame tag. Every payload has a size fixed by
//! the public parameters, checked before any field is parsed.

use crate::ahe::{Ciphertext, CIPHERTEXT_BYTES};
use crate::codec::{put_element, DecodeError, Reader};
use crate::forest::Mode;
use crate::gc::{GarbledPathBundle, LABEL_BYTES};
use crate::group::{Group, ELEMENT_BYTES};
use crate::malicious::{FirstFlow, OtReply, OtRequest};
use crate::ot::{OtEncodedChoice, OtResponse, OtSlot, CHOICE_BYTES};

fn exact(bytes: &[u8], want: usize) -> Result<(), DecodeError> {
    match bytes.len().cmp(&want) {
        std::cmp::Ordering::Less => Err(DecodeError::Truncated {
            offset: bytes.len(),
            needed: want - bytes.len(),
        }),
        std::cmp::Ordering::Greater => Err(DecodeError::Trailing(bytes.len() - want)),
        std::cmp::Ordering::Equal => Ok(()),
    }
}

/// Session opening, client to server.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hello<G: Group> {
    pub mode: Mode,
    pub group: u8,
    pub width: u16,
    pub model_hash: [u8; 32],
    /// Malicious mode only.
    pub client_pk: Option<G::Element>,
}

impl<G: Group> Hello<G> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![
            match self.mode {
                Mode::Binary => 0,
                Mode::Ternary => 1,
            },
            self.group,
        ];
        out.extend_from_slice(&self.width.to_be_bytes());
        out.extend_from_slice(&self.model_hash);
        if let Some(pk) = &self.client_pk {
            put_element::<G>(&mut out, pk);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let mode = match r.u8()? {
            0 => Mode::Binary,
            1 => Mode::Ternary,
            m => return Err(DecodeError::Invalid(format!("mode {m}"))),
        };
        let group = r.u8()?;
        if group != G::ID {
            return Err(DecodeError::Invalid(format!("group {group}")));
        }
        let width = r.u16()?;
        let model_hash = r.array()?;
        let client_pk = match mode {
            Mode::Binary => None,
            Mode::Ternary => Some(r.element::<G>()?),
        };
        r.finish()?;
        Ok(Hello {
            mode,
            group,
            width,
            model_hash,
            client_pk,
        })
    }
}

pub fn encode_ciphertexts<G: Group>(cts: &[Ciphertext<G>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(cts.len() * CIPHERTEXT_BYTES);
    for ct in cts {
        ct.write(&mut out);
    }
    out
}

pub fn decode_ciphertexts<G: Group>(bytes: &[u8], n: usize) -> Result<Vec<Ciphertext<G>>, DecodeError> {
    exact(bytes, n * CIPHERTEXT_BYTES)?;
    let mut r = Reader::new(bytes);
    (0..n).map(|_| Ciphertext::read(&mut r)).collect()
}

pub fn first_flow_len(paths: usize, width: usize) -> usize {
    paths * (CIPHERTEXT_BYTES + GarbledPathBundle::<crate::group::Ristretto>::encoded_len(width))
}

pub fn encode_first_flow<G: Group>(flow: &FirstFlow<G>) -> Vec<u8> {
    let mut out = encode_ciphertexts(&flow.betas);
    for b in &flow.bundles {
        b.write(&mut out);
    }
    out
}

/// Masked sums must parse; a bundle that does not parse is returned as
/// `None` and treated as a failed path.
#[allow(clippy::type_complexity)]
pub fn decode_first_flow<G: Group>(
    bytes: &[u8],
    paths: usize,
    width: usize,
) -> Result<(Vec<Ciphertext<G>>, Vec<Option<GarbledPathBundle<G>>>), DecodeError> {
    exact(bytes, first_flow_len(paths, width))?;
    let split = paths * CIPHERTEXT_BYTES;
    let betas = decode_ciphertexts(&bytes[..split], paths)?;
    let bundle_len = GarbledPathBundle::<G>::encoded_len(width);
    let bundles = bytes[split..]
        .chunks(bundle_len)
        .map(|c| {
            let mut r = Reader::new(c);
            GarbledPathBundle::read(&mut r, width).ok()
        })
        .collect();
    Ok((betas, bundles))
}

pub fn encode_ot_request<G: Group>(req: &OtRequest<G>) -> Vec<u8> {
    let mut out = Vec::with_capacity(req.choices.len() * CHOICE_BYTES);
    for c in &req.choices {
        c.write(&mut out);
    }
    out
}

pub fn decode_ot_request<G: Group>(bytes: &[u8], n: usize) -> Result<OtRequest<G>, DecodeError> {
    exact(bytes, n * CHOICE_BYTES)?;
    let mut r = Reader::new(bytes);
    let choices = (0..n).map(|_| OtEncodedChoice::read(&mut r)).collect::<Result<_, _>>()?;
    Ok(OtRequest { choices })
}

pub const OT_RESPONSE_BYTES: usize = OtResponse::<crate::group::Ristretto>::encoded_len(LABEL_BYTES);

pub fn encode_ot_reply<G: Group>(reply: &OtReply<G>) -> Vec<u8> {
    let mut out = Vec::with_capacity(reply.responses.len() * OT_RESPONSE_BYTES);
    for r in &reply.responses {
        r.write(&mut out);
    }
    out
}

/// An unparsable response becomes one that decodes to a junk label, so
/// its path fails evaluation like any other bad label.
pub fn decode_ot_reply<G: Group>(bytes: &[u8], n: usize) -> Result<OtReply<G>, DecodeError> {
    exact(bytes, n * OT_RESPONSE_BYTES)?;
    let junk = || OtResponse {
        slots: [0, 1].map(|_| OtSlot {
            ephemeral: G::identity(),
            masked: vec![0; LABEL_BYTES],
        }),
    };
    let responses = bytes
        .chunks(OT_RESPONSE_BYTES)
        .map(|c| OtResponse::read(&mut Reader::new(c), LABEL_BYTES).unwrap_or_else(|_| junk()))
        .collect();
    Ok(OtReply { responses })
}

pub fn decode_element<G: Group>(bytes: &[u8]) -> Result<G::Element, DecodeError> {
    exact(bytes, ELEMENT_BYTES)?;
    Reader::new(bytes).element::<G>()
}

pub fn encode_element<G: Group>(e: &G::Element) -> Vec<u8> {
    G::element_to_bytes(e).to_vec()
}
