//! Per-session state machines for both parties.

use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::artifact::ArtifactHeader;
use super::frame::{Frame, SessionId, Tag};
use super::messages::*;
use super::transport::{loopback_pair, Direction, Recorder, Transcript, Transport};
use super::WireError;
use crate::ahe::{Keypair, PublicKey};
use crate::encoding::EncodedModel;
use crate::forest::{ForestModel, Mode};
use crate::group::Group;
use crate::hbc;
use crate::malicious::adversary::{Adversary, Client};
use crate::malicious::{self, Params, Server};
use crate::Decision;

/// Everything a server needs to answer sessions.
pub struct ServerConfig<G: Group> {
    pub server: Server<G>,
    pub model_hash: [u8; 32],
    /// Served on `OfflineRequest`.
    pub artifact: Option<Vec<u8>>,
}

impl<G: Group> ServerConfig<G> {
    pub fn new(params: Params<G>, keys: Keypair<G>, model: ForestModel, artifact: Option<Vec<u8>>) -> Self {
        let model_hash = super::artifact::model_hash(&model);
        ServerConfig {
            server: Server::new(params, keys, model),
            model_hash,
            artifact,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServerReport {
    pub sid: SessionId,
    pub mode: Option<Mode>,
    /// `None` when the session was aborted or only served the artifact.
    pub decision: Option<Decision>,
    /// HbC: zero-decrypting paths. Malicious: paths flagged as cheating.
    pub detail: usize,
    pub aborted: Option<String>,
}

fn abort<T: Transport>(t: &mut T, report: &mut ServerReport, reason: impl Into<String>) -> Result<(), WireError> {
    let reason = reason.into();
    t.send(&Frame::new(Tag::Abort, report.sid, reason.clone().into_bytes()))?;
    report.aborted = Some(reason);
    Ok(())
}

/// Receives a frame of the expected tag on this session, turning a peer
/// abort into an error.
fn expect<T: Transport>(t: &mut T, sid: &SessionId, tag: Tag) -> Result<Vec<u8>, WireError> {
    let f = t.recv()?;
    if f.tag == Tag::Abort {
        return Err(WireError::Aborted(String::from_utf8_lossy(&f.payload).into_owned()));
    }
    if f.sid != *sid {
        return Err(WireError::Protocol("session id changed mid-session".into()));
    }
    if f.tag != tag {
        return Err(WireError::Protocol(format!("expected {tag:?}, got {:?}", f.tag)));
    }
    Ok(f.payload)
}

/// Serves one session. Artifact requests are answered and do not end
/// the session; the first `Hello` starts the online phase.
pub fn serve_session<G: Group, T: Transport, R: RngCore + CryptoRng>(
    cfg: &ServerConfig<G>,
    t: &mut T,
    rng: &mut R,
) -> Result<ServerReport, WireError> {
    let mut first = t.recv()?;
    let mut report = ServerReport {
        sid: first.sid,
        mode: None,
        decision: None,
        detail: 0,
        aborted: None,
    };
    while first.tag == Tag::OfflineRequest {
        match &cfg.artifact {
            Some(a) => t.send(&Frame::new(Tag::OfflineArtifact, first.sid, a.clone()))?,
            None => {
                abort(t, &mut report, "no artifact available")?;
                return Ok(report);
            }
        }
        first = match t.recv() {
            Ok(f) => f,
            Err(WireError::Closed) => return Ok(report),
            Err(e) => return Err(e),
        };
    }
    report.sid = first.sid;
    if first.tag != Tag::Hello {
        abort(t, &mut report, format!("expected Hello, got {:?}", first.tag))?;
        return Ok(report);
    }
    let hello = match Hello::<G>::from_bytes(&first.payload) {
        Ok(h) => h,
        Err(e) => {
            abort(t, &mut report, format!("bad Hello: {e}"))?;
            return Ok(report);
        }
    };
    let s = &cfg.server;
    report.mode = Some(hello.mode);
    if hello.model_hash != cfg.model_hash {
        abort(t, &mut report, "model version mismatch")?;
        return Ok(report);
    }
    if hello.mode != s.model.mode {
        abort(t, &mut report, "mode mismatch")?;
        return Ok(report);
    }
    if hello.mode == Mode::Ternary && hello.width as usize != s.params.width {
        abort(t, &mut report, "comparand width mismatch")?;
        return Ok(report);
    }
    t.send(&Frame::new(Tag::Ready, report.sid, Vec::new()))?;
    let sid = report.sid;
    let p = s.model.p;
    match hello.mode {
        Mode::Binary => {
            let payload = expect(t, &sid, Tag::HbcScores)?;
            let scores = match decode_ciphertexts::<G>(&payload, p) {
                Ok(c) => c,
                Err(e) => {
                    abort(t, &mut report, format!("bad scores: {e}"))?;
                    return Ok(report);
                }
            };
            let out = hbc::eval_model(&s.keys.sk, &scores, s.model.tau);
            report.decision = Some(out.decision);
            report.detail = out.zero_count;
        }
        Mode::Ternary => {
            let client_pk = PublicKey::<G> {
                h: hello.client_pk.expect("ternary Hello carries a key"),
            };
            let w = s.params.width;
            let payload = expect(t, &sid, Tag::MalMaskedSums)?;
            let (betas, bundles) = match decode_first_flow::<G>(&payload, p, w) {
                Ok(v) => v,
                Err(e) => {
                    abort(t, &mut report, format!("bad masked sums: {e}"))?;
                    return Ok(report);
                }
            };
            let (request, pending) =
                malicious::server_decrypt_and_ot(&s.params, &s.keys.sk, s.model.path_len(), &betas, rng);
            t.send(&Frame::new(Tag::MalOtChoices, sid, encode_ot_request(&request)))?;
            let payload = expect(t, &sid, Tag::MalOtResponses)?;
            let reply = match decode_ot_reply::<G>(&payload, request.choices.len()) {
                Ok(r) => r,
                Err(e) => {
                    abort(t, &mut report, format!("bad OT responses: {e}"))?;
                    return Ok(report);
                }
            };
            let refs: Vec<_> = bundles.iter().map(Option::as_ref).collect();
            let verdicts = malicious::server_evaluate_partial(&s.params, &client_pk, &refs, &pending, &reply)?;
            report.detail = verdicts.iter().filter(|v| v.is_cheat()).count();
            let (score, blinding) = malicious::compute_score(&client_pk, &s.polarities(), &verdicts, rng);
            t.send(&Frame::new(Tag::MalScore, sid, score.to_bytes()))?;
            let payload = expect(t, &sid, Tag::MalDecryption)?;
            report.decision = Some(match decode_element::<G>(&payload) {
                Ok(e) => malicious::compute_result(&blinding, &s.window, &e),
                Err(_) => Decision::Reject,
            });
        }
    }
    Ok(report)
}

/// Client-side knowledge for one session.
pub struct ClientSession<'a, G: Group> {
    pub header: &'a ArtifactHeader,
    pub encoded: &'a EncodedModel<G>,
    pub params: &'a Params<G>,
    /// Required in malicious mode.
    pub keys: Option<&'a Keypair<G>>,
    pub adversary: &'a Adversary,
}

pub fn random_sid<R: RngCore>(rng: &mut R) -> SessionId {
    let mut sid = [0u8; 16];
    rng.fill_bytes(&mut sid);
    sid
}

/// Runs the client's flows for input `x`.
pub fn client_session<G: Group, T: Transport, R: RngCore + CryptoRng>(
    c: &ClientSession<'_, G>,
    t: &mut T,
    x: &[u32],
    rng: &mut R,
) -> Result<SessionId, WireError> {
    if c.header.group != G::ID || c.header.mode != c.encoded.mode {
        return Err(WireError::Protocol("artifact does not match session".into()));
    }
    let sid = random_sid(rng);
    let hello = Hello::<G> {
        mode: c.encoded.mode,
        group: G::ID,
        width: c.params.width as u16,
        model_hash: c.header.model_hash,
        client_pk: match c.encoded.mode {
            Mode::Binary => None,
            Mode::Ternary => Some(c.keys.ok_or(WireError::MissingKeys)?.pk.h),
        },
    };
    t.send(&Frame::new(Tag::Hello, sid, hello.to_bytes()))?;
    expect(t, &sid, Tag::Ready)?;
    match c.encoded.mode {
        Mode::Binary => {
            let sent = match c.adversary {
                Adversary::AllZeros => hbc::all_zeros_attack(&c.encoded.pk, c.encoded.paths, rng),
                _ => {
                    let inputs = crate::forest::resolve(&c.encoded.layout, x, c.encoded.nu)
                        .map_err(crate::encoding::EvalError::from)?;
                    let scores = hbc::eval_paths(c.encoded, &inputs)?;
                    hbc::randomize_paths(&c.encoded.pk, &scores, rng)
                }
            };
            t.send(&Frame::new(Tag::HbcScores, sid, encode_ciphertexts(&sent)))?;
        }
        Mode::Ternary => {
            let keys = c.keys.ok_or(WireError::MissingKeys)?;
            let mut client = Client::new(c.params, keys, c.adversary);
            let flow1 = client.first_flow(c.encoded, x, rng)?;
            t.send(&Frame::new(Tag::MalMaskedSums, sid, encode_first_flow(&flow1)))?;
            let n = c.encoded.paths * 2 * c.params.width;
            let request = decode_ot_request::<G>(&expect(t, &sid, Tag::MalOtChoices)?, n)?;
            let reply = client.ot_flow(&request, rng)?;
            t.send(&Frame::new(Tag::MalOtResponses, sid, encode_ot_reply(&reply)))?;
            let score = crate::ahe::Ciphertext::<G>::from_bytes(&expect(t, &sid, Tag::MalScore)?)?;
            let elem = client.final_flow(&score, rng);
            t.send(&Frame::new(Tag::MalDecryption, sid, encode_element::<G>(&elem)))?;
        }
    }
    Ok(sid)
}

/// Asks the server for its offline artifact.
pub fn fetch_artifact<T: Transport, R: RngCore>(t: &mut T, rng: &mut R) -> Result<Vec<u8>, WireError> {
    let sid = random_sid(rng);
    t.send(&Frame::new(Tag::OfflineRequest, sid, Vec::new()))?;
    expect(t, &sid, Tag::OfflineArtifact)
}

/// HbC over files: the request file holds `Hello ‖ HbcScores`.
pub fn hbc_request_file<G: Group, R: RngCore + CryptoRng>(
    c: &ClientSession<'_, G>,
    x: &[u32],
    rng: &mut R,
) -> Result<Vec<u8>, WireError> {
    if c.encoded.mode != Mode::Binary {
        return Err(WireError::Protocol(
            "file exchange supports the one-flow honest-but-curious mode only".into(),
        ));
    }
    let mut t = ScriptedClient::default();
    client_session(c, &mut t, x, rng)?;
    Ok(t.sent.iter().flat_map(Frame::to_bytes).collect())
}

/// Answers `Ready` to whatever Hello it sees, recording the rest.
#[derive(Default)]
struct ScriptedClient {
    sent: Vec<Frame>,
}

impl Transport for ScriptedClient {
    fn send(&mut self, frame: &Frame) -> Result<(), WireError> {
        self.sent.push(frame.clone());
        Ok(())
    }

    fn recv(&mut self) -> Result<Frame, WireError> {
        match self.sent.last() {
            Some(f) if f.tag == Tag::Hello => Ok(Frame::new(Tag::Ready, f.sid, Vec::new())),
            _ => Err(WireError::Closed),
        }
    }
}

pub fn serve_file<G: Group, R: RngCore + CryptoRng>(
    cfg: &ServerConfig<G>,
    request: &[u8],
    rng: &mut R,
) -> Result<ServerReport, WireError> {
    let mut t = super::transport::ReplayTransport::from_bytes(request)?;
    serve_session(cfg, &mut t, rng)
}

/// Runs server and client on two threads over an in-process channel.
/// Returns the server's report and the client-side transcript.
pub fn run_loopback<G: Group>(
    cfg: &ServerConfig<G>,
    client: &ClientSession<'_, G>,
    x: &[u32],
    seed: u64,
) -> Result<(ServerReport, Transcript), WireError> {
    let (a, b) = loopback_pair();
    std::thread::scope(|scope| {
        let server = scope.spawn(move || {
            let mut t = b;
            let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5e);
            serve_session(cfg, &mut t, &mut rng)
        });
        let mut t = Recorder::new(a, Direction::ClientToServer);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let client_result = client_session(client, &mut t, x, &mut rng);
        let (_, transcript) = t.into_inner();
        let report = server.join().expect("server thread")?;
        match (client_result, &report.aborted) {
            (Err(WireError::Aborted(_)), Some(_)) | (Ok(_), _) => Ok((report, transcript)),
            (Err(e), _) => Err(e),
        }
    })
}
