use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use sdfe::forest::{example_tree, ForestModel};
use sdfe::Decision;
use sdfe_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe {
        sdfe_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn ternary_json() -> CString {
    let mut rng = <rand_chacha::ChaCha20Rng as rand::SeedableRng>::seed_from_u64(1);
    let m = ForestModel::ternary(&[example_tree(), example_tree()], 3, 3, 7, 1, &mut rng).unwrap();
    CString::new(m.to_json()).unwrap()
}

fn binary_json() -> CString {
    CString::new(ForestModel::binary(&[example_tree()], 3, 3, 7).unwrap().to_json()).unwrap()
}

unsafe fn model(json: &CString) -> *mut SdfeModel {
    let mut m = ptr::null_mut();
    assert_eq!(sdfe_model_from_json(json.as_ptr(), &mut m), SdfeStatus::Ok);
    m
}

unsafe fn keys(group: SdfeGroup, seed: u64) -> *mut SdfeKeys {
    let mut k = ptr::null_mut();
    assert_eq!(sdfe_keys_generate(group, &seed, &mut k), SdfeStatus::Ok);
    k
}

unsafe fn artifact(m: *const SdfeModel, k: *const SdfeKeys, width: u16) -> SdfeBytes {
    let mut a = SdfeBytes {
        data: ptr::null_mut(),
        len: 0,
    };
    let seed = 5;
    assert_eq!(sdfe_artifact_encode(m, k, width, &seed, &mut a), SdfeStatus::Ok);
    a
}

fn oracle(json: &CString, x: &[u32]) -> Decision {
    let m = ForestModel::from_json(json.to_str().unwrap()).unwrap();
    sdfe::analysis::oracle_eval(&m, x).unwrap().decision
}

fn decision(d: SdfeDecision) -> Option<Decision> {
    match d {
        SdfeDecision::Accept => Some(Decision::Accept),
        SdfeDecision::Reject => Some(Decision::Reject),
        SdfeDecision::None => None,
    }
}

#[test]
fn malicious_session_matches_oracle() {
    let json = ternary_json();
    unsafe {
        let m = model(&json);
        let k = keys(SdfeGroup::Toy, 1);
        let mut a = artifact(m, k, 16);
        for (i, x) in [[0u32; 7], [7; 7], [2, 2, 3, 2, 5, 6, 7]].iter().enumerate() {
            let mut r = std::mem::zeroed::<SdfeReport>();
            let st = sdfe_session_run(m, k, a.data, a.len, x.as_ptr(), x.len(), ptr::null(), i as u64, &mut r);
            assert_eq!(st, SdfeStatus::Ok, "{}", last_error());
            assert_eq!(decision(r.decision), Some(oracle(&json, x)));
            assert!(!r.aborted && r.detail == 0 && r.client_bytes > r.server_bytes);
        }
        let adv = CString::new("corrupt-proof").unwrap();
        let mut r = std::mem::zeroed::<SdfeReport>();
        let x = [0u32; 7];
        assert_eq!(sdfe_session_run(m, k, a.data, a.len, x.as_ptr(), 7, adv.as_ptr(), 9, &mut r), SdfeStatus::Ok);
        assert_eq!((r.decision, r.detail), (SdfeDecision::Reject, 1));
        sdfe_bytes_free(&mut a);
        assert!(a.data.is_null());
        sdfe_keys_free(k);
        sdfe_model_free(m);
    }
}

#[test]
fn hbc_file_exchange() {
    let json = binary_json();
    unsafe {
        let m = model(&json);
        let k = keys(SdfeGroup::Ristretto, 2);
        let mut a = artifact(m, k, 64);
        let x = [0u32, 2, 3, 0, 5, 0, 0];
        let mut req = SdfeBytes {
            data: ptr::null_mut(),
            len: 0,
        };
        assert_eq!(sdfe_hbc_request(a.data, a.len, x.as_ptr(), x.len(), ptr::null(), &mut req), SdfeStatus::Ok);
        let mut r = std::mem::zeroed::<SdfeReport>();
        assert_eq!(sdfe_hbc_serve(m, k, req.data, req.len, &mut r), SdfeStatus::Ok);
        assert_eq!(decision(r.decision), Some(oracle(&json, &x)));
        assert_eq!(r.client_bytes, req.len as u64);
        sdfe_bytes_free(&mut req);
        sdfe_bytes_free(&mut a);
        sdfe_keys_free(k);
        sdfe_model_free(m);
    }
}

#[test]
fn keys_round_trip_through_json() {
    unsafe {
        let k = keys(SdfeGroup::Ristretto, 3);
        let mut j = SdfeBytes {
            data: ptr::null_mut(),
            len: 0,
        };
        assert_eq!(sdfe_keys_to_json(k, &mut j), SdfeStatus::Ok);
        let text = CString::new(std::slice::from_raw_parts(j.data, j.len)).unwrap();
        let mut back = ptr::null_mut();
        assert_eq!(sdfe_keys_from_json(text.as_ptr(), &mut back), SdfeStatus::Ok);
        let mut j2 = SdfeBytes {
            data: ptr::null_mut(),
            len: 0,
        };
        assert_eq!(sdfe_keys_to_json(back, &mut j2), SdfeStatus::Ok);
        assert_eq!(
            std::slice::from_raw_parts(j.data, j.len),
            std::slice::from_raw_parts(j2.data, j2.len)
        );
        sdfe_bytes_free(&mut j);
        sdfe_bytes_free(&mut j2);
        sdfe_keys_free(back);
        sdfe_keys_free(k);
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(sdfe_model_from_json(ptr::null(), &mut m), SdfeStatus::NullArgument);
        assert!(last_error().contains("json"));
        let bad = CString::new("{not json").unwrap();
        assert_eq!(sdfe_model_from_json(bad.as_ptr(), &mut m), SdfeStatus::Malformed);
        assert!(m.is_null());

        let json = ternary_json();
        let m = model(&json);
        assert_eq!(sdfe_last_error(ptr::null_mut(), 0), 0);
        let toy = keys(SdfeGroup::Toy, 4);
        let rist = keys(SdfeGroup::Ristretto, 4);
        let mut a = artifact(m, toy, 16);
        let x = [0u32; 7];
        let mut r = std::mem::zeroed::<SdfeReport>();
        let st = sdfe_session_run(m, rist, a.data, a.len, x.as_ptr(), 7, ptr::null(), 0, &mut r);
        assert_eq!(st, SdfeStatus::GroupMismatch);
        let nope = CString::new("nonsense").unwrap();
        let st = sdfe_session_run(m, toy, a.data, a.len, x.as_ptr(), 7, nope.as_ptr(), 0, &mut r);
        assert_eq!(st, SdfeStatus::InvalidArgument);
        let st = sdfe_session_run(m, toy, a.data, a.len / 2, x.as_ptr(), 7, ptr::null(), 0, &mut r);
        assert_eq!(st, SdfeStatus::Malformed);
        let mut out = SdfeBytes {
            data: ptr::null_mut(),
            len: 0,
        };
        assert_eq!(sdfe_artifact_encode(m, toy, 0, ptr::null(), &mut out), SdfeStatus::InvalidArgument);
        // Ternary artifacts have no file exchange.
        assert_eq!(sdfe_hbc_request(a.data, a.len, x.as_ptr(), 7, ptr::null(), &mut out), SdfeStatus::Protocol);
        let (mut d, mut s) = (SdfeDecision::None, 0i64);
        assert_eq!(sdfe_model_oracle(m, x.as_ptr(), 3, &mut d, &mut s), SdfeStatus::InvalidArgument);
        assert_eq!(sdfe_model_paths(ptr::null()), 0);
        assert_eq!(sdfe_model_paths(m), 9);
        sdfe_bytes_free(&mut a);
        sdfe_bytes_free(ptr::null_mut());
        sdfe_keys_free(toy);
        sdfe_keys_free(rist);
        sdfe_model_free(m);
        sdfe_model_free(ptr::null_mut());
    }
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(sdfe_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/sdfe.h")).unwrap();
    let src = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
}

/// Compiles the C smoke program against the static library and runs it.
/// Needs `cc` on PATH.
#[test]
fn c_program_links_and_runs() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<this test> -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libsdfe_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let out = std::env::temp_dir().join(format!("sdfe_smoke_{}", std::process::id()));
    let status = Command::new("cc")
        .arg(dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .expect("cc runs");
    assert!(status.success());
    let run = Command::new(&out).arg(ternary_json().to_str().unwrap()).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8_lossy(&run.stdout);
    let want = match oracle(&ternary_json(), &[0; 7]) {
        Decision::Accept => "decision=1 oracle=1",
        Decision::Reject => "decision=0 oracle=0",
    };
    assert!(stdout.starts_with(want), "{stdout}");
}
