//! Frame transports and the per-session transcript.

use std::collections::VecDeque;
use std::io::{BufReader, BufWriter, Read, Write};
use std::net::TcpStream;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::frame::{Frame, FrameError, Tag, HEADER_BYTES};
use super::WireError;

pub trait Transport {
    fn send(&mut self, frame: &Frame) -> Result<(), WireError>;
    fn recv(&mut self) -> Result<Frame, WireError>;
}

/// Any byte stream, typically a `TcpStream`.
pub struct StreamTransport<R: Read, W: Write> {
    reader: R,
    writer: W,
}

impl StreamTransport<BufReader<TcpStream>, BufWriter<TcpStream>> {
    pub fn tcp(stream: TcpStream) -> std::io::Result<Self> {
        stream.set_nodelay(true)?;
        Ok(StreamTransport {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
        })
    }
}

impl<R: Read, W: Write> StreamTransport<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        StreamTransport { reader, writer }
    }
}

impl<R: Read, W: Write> Transport for StreamTransport<R, W> {
    fn send(&mut self, frame: &Frame) -> Result<(), WireError> {
        frame.write_to(&mut self.writer).map_err(FrameError::from)?;
        Ok(())
    }

    fn recv(&mut self) -> Result<Frame, WireError> {
        Frame::read_from(&mut self.reader)?.ok_or(WireError::Closed)
    }
}

/// In-process pair of endpoints carrying serialized frames.
pub struct ChannelTransport {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
}

pub fn loopback_pair() -> (ChannelTransport, ChannelTransport) {
    let (a_tx, b_rx) = channel();
    let (b_tx, a_rx) = channel();
    (
        ChannelTransport { tx: a_tx, rx: a_rx },
        ChannelTransport { tx: b_tx, rx: b_rx },
    )
}

impl Transport for ChannelTransport {
    fn send(&mut self, frame: &Frame) -> Result<(), WireError> {
        self.tx.send(frame.to_bytes()).map_err(|_| WireError::Closed)
    }

    fn recv(&mut self) -> Result<Frame, WireError> {
        let bytes = self.rx.recv().map_err(|_| WireError::Closed)?;
        let mut frames = Frame::parse_all(&bytes)?;
        match (frames.pop(), frames.is_empty()) {
            (Some(f), true) => Ok(f),
            _ => Err(WireError::Protocol("one frame per message".into())),
        }
    }
}

/// Replays recorded incoming frames and keeps whatever is sent, for
/// file-based exchange.
#[derive(Default)]
pub struct ReplayTransport {
    pub incoming: VecDeque<Frame>,
    pub sent: Vec<Frame>,
}

impl ReplayTransport {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        Ok(ReplayTransport {
            incoming: Frame::parse_all(bytes)?.into(),
            sent: Vec::new(),
        })
    }
}

impl Transport for ReplayTransport {
    fn send(&mut self, frame: &Frame) -> Result<(), WireError> {
        self.sent.push(frame.clone());
        Ok(())
    }

    fn recv(&mut self) -> Result<Frame, WireError> {
        self.incoming.pop_front().ok_or(WireError::Closed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    ClientToServer,
    ServerToClient,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub direction: Direction,
    pub tag: Tag,
    pub frame_bytes: usize,
    pub payload_bytes: usize,
    /// Microseconds since the transcript started.
    pub t_us: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Totals {
    pub frames: usize,
    pub frame_bytes: usize,
    /// Payload bytes of protocol flows only (no setup or control frames).
    pub flow_bytes: usize,
}

impl Totals {
    pub fn overhead(&self) -> usize {
        self.frame_bytes - self.flow_bytes
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    pub records: Vec<Record>,
}

impl Transcript {
    pub fn totals(&self, direction: Direction) -> Totals {
        let mut t = Totals::default();
        for r in self.records.iter().filter(|r| r.direction == direction) {
            t.frames += 1;
            t.frame_bytes += r.frame_bytes;
            if r.tag.is_flow() {
                t.flow_bytes += r.payload_bytes;
            }
        }
        t
    }

    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }

    pub fn from_jsonl(s: &str) -> Result<Self, serde_json::Error> {
        let records = s
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(Transcript { records })
    }
}

/// Wraps a transport and logs every frame from the point of view of one
/// party. Raw bytes are kept per direction when `capture` is set.
pub struct Recorder<T: Transport> {
    inner: T,
    outgoing: Direction,
    start: Instant,
    pub transcript: Transcript,
    pub capture: Option<[Vec<u8>; 2]>,
}

impl<T: Transport> Recorder<T> {
    pub fn new(inner: T, outgoing: Direction) -> Self {
        Recorder {
            inner,
            outgoing,
            start: Instant::now(),
            transcript: Transcript::default(),
            capture: None,
        }
    }

    pub fn capturing(mut self) -> Self {
        self.capture = Some([Vec::new(), Vec::new()]);
        self
    }

    fn log(&mut self, frame: &Frame, direction: Direction) {
        self.transcript.records.push(Record {
            direction,
            tag: frame.tag,
            frame_bytes: HEADER_BYTES + frame.payload.len(),
            payload_bytes: frame.payload.len(),
            t_us: self.start.elapsed().as_micros() as u64,
        });
        if let Some(c) = &mut self.capture {
            c[direction as usize].extend(frame.to_bytes());
        }
    }

    pub fn into_inner(self) -> (T, Transcript) {
        (self.inner, self.transcript)
    }
}

impl<T: Transport> Transport for Recorder<T> {
    fn send(&mut self, frame: &Frame) -> Result<(), WireError> {
        self.inner.send(frame)?;
        self.log(frame, self.outgoing);
        Ok(())
    }

    fn recv(&mut self) -> Result<Frame, WireError> {
        let f = self.inner.recv()?;
        let incoming = match self.outgoing {
            Direction::ClientToServer => Direction::ServerToClient,
            Direction::ServerToClient => Direction::ClientToServer,
        };
        self.log(&f, incoming);
        Ok(f)
    }
}
