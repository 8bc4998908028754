//! Length-prefixed frames: `tag (1) ‖ session id (16) ‖ len (4, BE) ‖ payload`.

use std::io::{self, Read, Write};

pub const HEADER_BYTES: usize = 1 + 16 + 4;
/// Refuse frames above 1 GiB rather than allocate on a peer's say-so.
pub const MAX_PAYLOAD: u32 = 1 << 30;

pub type SessionId = [u8; 16];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
#[repr(u8)]
pub enum Tag {
    Hello = 0x01,
    Ready = 0x02,
    HbcScores = 0x03,
    MalMaskedSums = 0x10,
    MalOtChoices = 0x11,
    MalOtResponses = 0x12,
    MalScore = 0x13,
    MalDecryption = 0x14,
    OfflineRequest = 0x20,
    OfflineArtifact = 0x21,
    Abort = 0x7F,
}

impl Tag {
    pub const ALL: [Tag; 11] = [
        Tag::Hello,
        Tag::Ready,
        Tag::HbcScores,
        Tag::MalMaskedSums,
        Tag::MalOtChoices,
        Tag::MalOtResponses,
        Tag::MalScore,
        Tag::MalDecryption,
        Tag::OfflineRequest,
        Tag::OfflineArtifact,
        Tag::Abort,
    ];

    pub fn from_u8(b: u8) -> Option<Tag> {
        Tag::ALL.into_iter().find(|t| *t as u8 == b)
    }

    /// Protocol flows proper, as opposed to session setup and control.
    pub fn is_flow(self) -> bool {
        matches!(
            self,
            Tag::HbcScores
                | Tag::MalMaskedSums
                | Tag::MalOtChoices
                | Tag::MalOtResponses
                | Tag::MalScore
                | Tag::MalDecryption
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub tag: Tag,
    pub sid: SessionId,
    pub payload: Vec<u8>,
}

#[derive(Debug, thiserror::Error)]
pub enum FrameError {
    #[error("unknown frame tag {0:#04x}")]
    UnknownTag(u8),
    #[error("payload of {0} bytes exceeds the limit")]
    TooLarge(u32),
    #[error("truncated frame")]
    Truncated,
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Frame {
    pub fn new(tag: Tag, sid: SessionId, payload: Vec<u8>) -> Self {
        Frame { tag, sid, payload }
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_BYTES + self.payload.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.push(self.tag as u8);
        out.extend_from_slice(&self.sid);
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(&self.to_bytes())?;
        w.flush()
    }

    /// `Ok(None)` on a clean end of stream before any header byte.
    pub fn read_from<R: Read>(r: &mut R) -> Result<Option<Frame>, FrameError> {
        let mut header = [0u8; HEADER_BYTES];
        let mut got = 0;
        while got < HEADER_BYTES {
            match r.read(&mut header[got..]) {
                Ok(0) if got == 0 => return Ok(None),
                Ok(0) => return Err(FrameError::Truncated),
                Ok(n) => got += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        let tag = Tag::from_u8(header[0]).ok_or(FrameError::UnknownTag(header[0]))?;
        let sid: SessionId = header[1..17].try_into().expect("16 bytes");
        let len = u32::from_be_bytes(header[17..21].try_into().expect("4 bytes"));
        if len > MAX_PAYLOAD {
            return Err(FrameError::TooLarge(len));
        }
        let mut payload = vec![0u8; len as usize];
        r.read_exact(&mut payload).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => FrameError::Truncated,
            _ => e.into(),
        })?;
        Ok(Some(Frame { tag, sid, payload }))
    }

    /// Splits a concatenation of frames.
    pub fn parse_all(mut bytes: &[u8]) -> Result<Vec<Frame>, FrameError> {
        let mut out = Vec::new();
        while let Some(f) = Frame::read_from(&mut bytes)? {
            out.push(f);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unknown_tag_rejected() {
        let mut b = Frame::new(Tag::Hello, [7; 16], vec![1, 2]).to_bytes();
        b[0] = 0x55;
        assert!(matches!(Frame::parse_all(&b), Err(FrameError::UnknownTag(0x55))));
    }

    #[test]
    fn truncated_payload_rejected() {
        let b = Frame::new(Tag::MalScore, [0; 16], vec![9; 10]).to_bytes();
        assert!(matches!(Frame::parse_all(&b[..b.len() - 1]), Err(FrameError::Truncated)));
        assert!(matches!(Frame::parse_all(&b[..5]), Err(FrameError::Truncated)));
    }

    #[test]
    fn header_layout() {
        let b = Frame::new(Tag::Abort, [1; 16], vec![0xAA; 258]).to_bytes();
        assert_eq!(b[0], 0x7F);
        assert_eq!(&b[17..21], &[0, 0, 1, 2]);
        assert_eq!(b.len(), HEADER_BYTES + 258);
    }

    proptest! {
        #[test]
        fn concatenation_reparses(frames in proptest::collection::vec(
            (0..Tag::ALL.len(), any::<[u8; 16]>(), proptest::collection::vec(any::<u8>(), 0..64)),
            0..8,
        )) {
            let frames: Vec<Frame> = frames
                .into_iter()
                .map(|(t, sid, p)| Frame::new(Tag::ALL[t], sid, p))
                .collect();
            let bytes: Vec<u8> = frames.iter().flat_map(Frame::to_bytes).collect();
            prop_assert_eq!(Frame::parse_all(&bytes).unwrap(), frames);
        }
    }
}
