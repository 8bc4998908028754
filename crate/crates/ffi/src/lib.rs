//! C ABI over `sdfe`.
//!
//! Handles (`SdfeModel`, `SdfeKeys`) are opaque and owned by the caller;
//! release them with the matching `*_free`. Byte results come back as
//! [`SdfeBytes`] and are released with [`sdfe_bytes_free`]. Every fallible
//! call returns an [`SdfeStatus`]; the message of the last failure on the
//! calling thread is read with [`sdfe_last_error`]. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rand::rngs::OsRng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use sdfe::ahe::{keygen, Keypair};
use sdfe::analysis::oracle_eval;
use sdfe::forest::{ForestModel, Mode};
use sdfe::group::{Group, GroupKind, Ristretto, ToyGroup};
use sdfe::keyfile::KeyFile;
use sdfe::malicious::adversary::Adversary;
use sdfe::malicious::{encode_model_mal, Params};
use sdfe::wire::artifact;
use sdfe::wire::session::{self, ClientSession, ServerConfig, ServerReport};
use sdfe::wire::transport::Direction;
use sdfe::Decision;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdfeStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    /// Unparsable model, key file, artifact or request.
    Malformed = 3,
    /// Keys, artifact and model disagree on the group.
    GroupMismatch = 4,
    /// The protocol run itself failed or was aborted.
    Protocol = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdfeGroup {
    Ristretto = 0,
    /// Small-order group for statistics only; offers no security.
    Toy = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdfeDecision {
    Reject = 0,
    Accept = 1,
    /// Aborted session, or one that only served the artifact.
    None = 2,
}

/// Heap bytes handed to the caller.
#[repr(C)]
#[derive(Debug)]
pub struct SdfeBytes {
    pub data: *mut u8,
    pub len: usize,
}

/// What the server learned from one session.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SdfeReport {
    pub decision: SdfeDecision,
    /// Binary mode: paths that decrypted to zero. Ternary mode: paths
    /// flagged as cheating.
    pub detail: u64,
    pub aborted: bool,
    /// Bytes on the wire including framing. File exchange reports the
    /// request size and zero.
    pub client_bytes: u64,
    pub server_bytes: u64,
}

/// Server model.
pub struct SdfeModel(ForestModel);

/// AHE key pair for one group.
pub struct SdfeKeys(AnyKeys);

enum AnyKeys {
    Ristretto(Keypair<Ristretto>),
    Toy(Keypair<ToyGroup>),
}

impl AnyKeys {
    fn file(&self) -> KeyFile {
        match self {
            AnyKeys::Ristretto(k) => KeyFile::from_keypair(k),
            AnyKeys::Toy(k) => KeyFile::from_keypair(k),
        }
    }

    fn kind(&self) -> GroupKind {
        match self {
            AnyKeys::Ristretto(_) => GroupKind::Ristretto,
            AnyKeys::Toy(_) => GroupKind::Toy,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Fail(SdfeStatus, String);

impl Fail {
    fn new(status: SdfeStatus, msg: impl std::fmt::Display) -> Self {
        Fail(status, msg.to_string())
    }
}

type Res<T> = Result<T, Fail>;

/// Runs `f`, records any failure for [`sdfe_last_error`], and maps panics
/// to [`SdfeStatus::Panic`].
fn guard(f: impl FnOnce() -> Res<()>) -> SdfeStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (SdfeStatus::Ok, String::new()),
        Ok(Err(Fail(s, m))) => (s, m),
        Err(e) => {
            let m = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            (SdfeStatus::Panic, m)
        }
    };
    LAST_ERROR.with(|l| *l.borrow_mut() = msg);
    status
}

fn nonnull<'a, T>(p: *const T, what: &str) -> Res<&'a T> {
    // SAFETY: caller passes either null or a pointer to a live `T`.
    unsafe { p.as_ref() }.ok_or_else(|| Fail::new(SdfeStatus::NullArgument, format!("{what} is null")))
}

fn out<'a, T>(p: *mut T, what: &str) -> Res<&'a mut T> {
    // SAFETY: caller passes either null or a writable `T`.
    unsafe { p.as_mut() }.ok_or_else(|| Fail::new(SdfeStatus::NullArgument, format!("{what} is null")))
}

fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Res<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::new(SdfeStatus::NullArgument, format!("{what} is null")));
    }
    // SAFETY: caller guarantees `len` readable elements at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn string<'a>(p: *const c_char, what: &str) -> Res<&'a str> {
    if p.is_null() {
        return Err(Fail::new(SdfeStatus::NullArgument, format!("{what} is null")));
    }
    // SAFETY: caller passes a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Fail::new(SdfeStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn bytes_out(v: Vec<u8>, dst: &mut SdfeBytes) {
    let b = v.into_boxed_slice();
    dst.len = b.len();
    dst.data = Box::into_raw(b) as *mut u8;
}

fn malformed(e: impl std::fmt::Display) -> Fail {
    Fail::new(SdfeStatus::Malformed, e)
}

fn protocol(e: impl std::fmt::Display) -> Fail {
    Fail::new(SdfeStatus::Protocol, e)
}

fn seeded(seed: *const u64) -> ChaCha20Rng {
    // SAFETY: null or a readable u64.
    match unsafe { seed.as_ref() } {
        Some(&s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_rng(OsRng).expect("OS randomness"),
    }
}

fn report(r: &ServerReport, client_bytes: u64, server_bytes: u64) -> SdfeReport {
    SdfeReport {
        decision: match r.decision {
            Some(Decision::Accept) => SdfeDecision::Accept,
            Some(Decision::Reject) => SdfeDecision::Reject,
            None => SdfeDecision::None,
        },
        detail: r.detail as u64,
        aborted: r.aborted.is_some(),
        client_bytes,
        server_bytes,
    }
}

/// Library version, static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sdfe_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `cap > 0`). Returns the full message length
/// without the terminator; `0` after a successful call.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sdfe_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|l| {
        let msg = l.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// # Safety
/// `b` must be null or a value filled by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sdfe_bytes_free(b: *mut SdfeBytes) {
    if let Some(b) = b.as_mut() {
        if !b.data.is_null() {
            drop(Box::from_raw(ptr::slice_from_raw_parts_mut(b.data, b.len)));
        }
        b.data = ptr::null_mut();
        b.len = 0;
    }
}

/// Parses and validates a compiled model (the JSON written by
/// `sdfe compile-model`).
///
/// # Safety
/// `json` must be NUL-terminated; `model_out` writable.
#[no_mangle]
pub unsafe extern "C" fn sdfe_model_from_json(json: *const c_char, model_out: *mut *mut SdfeModel) -> SdfeStatus {
    guard(|| {
        let dst = out(model_out, "model_out")?;
        let m = ForestModel::from_json(string(json, "json")?).map_err(malformed)?;
        m.validate().map_err(malformed)?;
        *dst = Box::into_raw(Box::new(SdfeModel(m)));
        Ok(())
    })
}

/// # Safety
/// `model` live; `json_out` writable.
#[no_mangle]
pub unsafe extern "C" fn sdfe_model_to_json(model: *const SdfeModel, json_out: *mut SdfeBytes) -> SdfeStatus {
    guard(|| {
        let m = nonnull(model, "model")?;
        bytes_out(m.0.to_json().into_bytes(), out(json_out, "json_out")?);
        Ok(())
    })
}

/// # Safety
/// `model` null or owned by the caller; not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sdfe_model_free(model: *mut SdfeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of paths `P`, or 0 for a null handle.
///
/// # Safety
/// `model` null or live.
#[no_mangle]
pub unsafe extern "C" fn sdfe_model_paths(model: *const SdfeModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.p)
}

/// Length of the feature vector the model expects.
///
/// # Safety
/// `model` null or live.
#[no_mangle]
pub unsafe extern "C" fn sdfe_model_features(model: *const SdfeModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.features)
}

/// Plaintext evaluation on quantized input `x[0..len]`.
///
/// # Safety
/// `x` readable for `len` values; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn sdfe_model_oracle(
    model: *const SdfeModel,
    x: *const u32,
    len: usize,
    decision_out: *mut SdfeDecision,
    score_out: *mut i64,
) -> SdfeStatus {
    guard(|| {
        let m = nonnull(model, "model")?;
        let x = slice(x, len, "x")?;
        let (d, s) = (out(decision_out, "decision_out")?, out(score_out, "score_out")?);
        let r = oracle_eval(&m.0, x).map_err(|e| Fail::new(SdfeStatus::InvalidArgument, e))?;
        *d = if r.decision.is_accept() {
            SdfeDecision::Accept
        } else {
            SdfeDecision::Reject
        };
        *s = r.score;
        Ok(())
    })
}

/// Fresh key pair. `seed` may be null for OS randomness.
///
/// # Safety
/// `seed` null or readable; `keys_out` writable.
#[no_mangle]
pub unsafe extern "C" fn sdfe_keys_generate(group: SdfeGroup, seed: *const u64, keys_out: *mut *mut SdfeKeys) -> SdfeStatus {
    guard(|| {
        let dst = out(keys_out, "keys_out")?;
        let mut rng = seeded(seed);
        let k = match group {
            SdfeGroup::Ristretto => AnyKeys::Ristretto(keygen(&mut rng)),
            SdfeGroup::Toy => AnyKeys::Toy(keygen(&mut rng)),
        };
        *dst = Box::into_raw(Box::new(SdfeKeys(k)));
        Ok(())
    })
}

/// Loads the JSON key file format written by `sdfe keygen`.
///
/// # Safety
/// `json` NUL-terminated; `keys_out` writable.
#[no_mangle]
pub unsafe extern "C" fn sdfe_keys_from_json(json: *const c_char, keys_out: *mut *mut SdfeKeys) -> SdfeStatus {
    guard(|| {
        let dst = out(keys_out, "keys_out")?;
        let f: KeyFile = serde_json::from_str(string(json, "json")?).map_err(malformed)?;
        let k = match f.kind().map_err(malformed)? {
            GroupKind::Ristretto => AnyKeys::Ristretto(f.keypair().map_err(malformed)?),
            GroupKind::Toy => AnyKeys::Toy(f.keypair().map_err(malformed)?),
        };
        *dst = Box::into_raw(Box::new(SdfeKeys(k)));
        Ok(())
    })
}

/// Serializes the key pair, secret included.
///
/// # Safety
/// `keys` live; `json_out` writable.
#[no_mangle]
pub unsafe extern "C" fn sdfe_keys_to_json(keys: *const SdfeKeys, json_out: *mut SdfeBytes) -> SdfeStatus {
    guard(|| {
        let k = nonnull(keys, "keys")?;
        let s = serde_json::to_string(&k.0.file()).map_err(protocol)?;
        bytes_out(s.into_bytes(), out(json_out, "json_out")?);
        Ok(())
    })
}

/// # Safety
/// `keys` null or owned by the caller; not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sdfe_keys_free(keys: *mut SdfeKeys) {
    if !keys.is_null() {
        drop(Box::from_raw(keys));
    }
}

fn encode_for<G: Group>(kp: &Keypair<G>, model: &ForestModel, width: u16, rng: &mut ChaCha20Rng) -> Res<Vec<u8>> {
    let enc = match model.mode {
        Mode::Binary => sdfe::hbc::encode_model(&kp.pk, model, rng),
        Mode::Ternary => encode_model_mal(&kp.pk, model, rng).map_err(malformed)?,
    };
    Ok(artifact::export(&enc, &artifact::model_hash(model), width))
}

/// Encrypts `model` under the server's `keys` into the offline artifact.
/// `width` is the garbled comparand width (64 in production).
///
/// # Safety
/// Handles live; `seed` null or readable; `artifact_out` writable.
#[no_mangle]
pub unsafe extern "C" fn sdfe_artifact_encode(
    model: *const SdfeModel,
    keys: *const SdfeKeys,
    width: u16,
    seed: *const u64,
    artifact_out: *mut SdfeBytes,
) -> SdfeStatus {
    guard(|| {
        let (m, k) = (nonnull(model, "model")?, nonnull(keys, "keys")?);
        let dst = out(artifact_out, "artifact_out")?;
        if !(1..=256).contains(&width) {
            return Err(Fail::new(SdfeStatus::InvalidArgument, format!("width {width} outside 1..=256")));
        }
        let mut rng = seeded(seed);
        let bytes = match &k.0 {
            AnyKeys::Ristretto(kp) => encode_for(kp, &m.0, width, &mut rng)?,
            AnyKeys::Toy(kp) => encode_for(kp, &m.0, width, &mut rng)?,
        };
        bytes_out(bytes, dst);
        Ok(())
    })
}

fn artifact_group(bytes: &[u8], keys: Option<GroupKind>) -> Res<(artifact::ArtifactHeader, GroupKind)> {
    let h = artifact::peek_header(bytes).map_err(malformed)?;
    let g = GroupKind::from_id(h.group).ok_or_else(|| malformed(format!("unknown group id {}", h.group)))?;
    if keys.is_some_and(|k| k != g) {
        return Err(Fail::new(SdfeStatus::GroupMismatch, format!("artifact is for {g}")));
    }
    Ok((h, g))
}

fn hbc_request<G: Group>(bytes: &[u8], x: &[u32], rng: &mut ChaCha20Rng) -> Res<Vec<u8>> {
    let (header, encoded) = artifact::import::<G>(bytes).map_err(malformed)?;
    let params = Params::<G> {
        width: header.lambda_gc as usize,
        ..Params::default()
    };
    let c = ClientSession {
        header: &header,
        encoded: &encoded,
        params: &params,
        keys: None,
        adversary: &Adversary::Honest,
    };
    session::hbc_request_file(&c, x, rng).map_err(protocol)
}

/// Client side of the one-flow binary mode: builds the request file for
/// input `x` from the artifact alone.
///
/// # Safety
/// Buffers readable for their lengths; `request_out` writable.
#[no_mangle]
pub unsafe extern "C" fn sdfe_hbc_request(
    artifact: *const u8,
    artifact_len: usize,
    x: *const u32,
    x_len: usize,
    seed: *const u64,
    request_out: *mut SdfeBytes,
) -> SdfeStatus {
    guard(|| {
        let bytes = slice(artifact, artifact_len, "artifact")?;
        let x = slice(x, x_len, "x")?;
        let dst = out(request_out, "request_out")?;
        let mut rng = seeded(seed);
        let req = match artifact_group(bytes, None)?.1 {
            GroupKind::Ristretto => hbc_request::<Ristretto>(bytes, x, &mut rng)?,
            GroupKind::Toy => hbc_request::<ToyGroup>(bytes, x, &mut rng)?,
        };
        bytes_out(req, dst);
        Ok(())
    })
}

/// Server side of the binary mode: answers one request file.
///
/// # Safety
/// Handles live; `request` readable; `report_out` writable.
#[no_mangle]
pub unsafe extern "C" fn sdfe_hbc_serve(
    model: *const SdfeModel,
    keys: *const SdfeKeys,
    request: *const u8,
    request_len: usize,
    report_out: *mut SdfeReport,
) -> SdfeStatus {
    guard(|| {
        let (m, k) = (nonnull(model, "model")?, nonnull(keys, "keys")?);
        let req = slice(request, request_len, "request")?;
        let dst = out(report_out, "report_out")?;
        let r = match &k.0 {
            AnyKeys::Ristretto(kp) => {
                let cfg = ServerConfig::new(Params::default(), *kp, m.0.clone(), None);
                session::serve_file(&cfg, req, &mut OsRng)
            }
            AnyKeys::Toy(kp) => {
                let cfg = ServerConfig::new(Params::default(), *kp, m.0.clone(), None);
                session::serve_file(&cfg, req, &mut OsRng)
            }
        }
        .map_err(malformed)?;
        *dst = report(&r, req.len() as u64, 0);
        Ok(())
    })
}

fn loopback<G: Group>(
    model: &ForestModel,
    server_keys: &Keypair<G>,
    bytes: &[u8],
    x: &[u32],
    adversary: &Adversary,
    seed: u64,
) -> Res<SdfeReport> {
    let (header, encoded) = artifact::import::<G>(bytes).map_err(malformed)?;
    let params = Params::<G> {
        width: header.lambda_gc as usize,
        ..Params::default()
    };
    let client_keys = keygen::<G, _>(&mut ChaCha20Rng::seed_from_u64(seed ^ 0xc1));
    let cfg = ServerConfig::new(params.clone(), *server_keys, model.clone(), None);
    let c = ClientSession {
        header: &header,
        encoded: &encoded,
        params: &params,
        keys: Some(&client_keys),
        adversary,
    };
    let (r, t) = session::run_loopback(&cfg, &c, x, seed).map_err(protocol)?;
    Ok(report(
        &r,
        t.totals(Direction::ClientToServer).frame_bytes as u64,
        t.totals(Direction::ServerToClient).frame_bytes as u64,
    ))
}

/// Runs a complete session in-process (server and client on two threads)
/// for either mode. `adversary` names a client strategy as accepted by
/// the CLI (`honest`, `all-zeros`, `all-plus`, `corrupt-proof`, ...) and
/// may be null for `honest`.
///
/// # Safety
/// Handles live; buffers readable; `adversary` null or NUL-terminated;
/// `report_out` writable.
#[no_mangle]
pub unsafe extern "C" fn sdfe_session_run(
    model: *const SdfeModel,
    server_keys: *const SdfeKeys,
    artifact: *const u8,
    artifact_len: usize,
    x: *const u32,
    x_len: usize,
    adversary: *const c_char,
    seed: u64,
    report_out: *mut SdfeReport,
) -> SdfeStatus {
    guard(|| {
        let (m, k) = (nonnull(model, "model")?, nonnull(server_keys, "server_keys")?);
        let bytes = slice(artifact, artifact_len, "artifact")?;
        let x = slice(x, x_len, "x")?;
        let dst = out(report_out, "report_out")?;
        let adversary: Adversary = if adversary.is_null() {
            Adversary::Honest
        } else {
            string(adversary, "adversary")?
                .parse()
                .map_err(|e: String| Fail::new(SdfeStatus::InvalidArgument, e))?
        };
        artifact_group(bytes, Some(k.0.kind()))?;
        *dst = match &k.0 {
            AnyKeys::Ristretto(kp) => loopback(&m.0, kp, bytes, x, &adversary, seed)?,
            AnyKeys::Toy(kp) => loopback(&m.0, kp, bytes, x, &adversary, seed)?,
        };
        Ok(())
    })
}
