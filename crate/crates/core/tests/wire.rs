use std::net::{TcpListener, TcpStream};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use sdfe::ahe::{keygen, Keypair};
use sdfe::analysis::oracle_eval;
use sdfe::forest::{example_tree, gen, ForestModel, Mode};
use sdfe::group::{Group, Ristretto, ToyGroup};
use sdfe::malicious::adversary::Adversary;
use sdfe::malicious::{encode_model_mal, Params};
use sdfe::wire::artifact::{self, ArtifactError, ArtifactHeader};
use sdfe::wire::session::{self, ClientSession, ServerConfig};
use sdfe::wire::transport::{Direction, Recorder, StreamTransport, Transcript};
use sdfe::wire::{Tag, WireError};
use sdfe::Decision;

type Toy = ToyGroup;

struct Fixture<G: Group> {
    model: ForestModel,
    server: Keypair<G>,
    client: Keypair<G>,
    params: Params<G>,
    artifact: Vec<u8>,
}

impl<G: Group> Fixture<G> {
    fn new(model: ForestModel, width: usize, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let server = keygen::<G, _>(&mut rng);
        let client = keygen::<G, _>(&mut rng);
        let enc = match model.mode {
            Mode::Binary => sdfe::hbc::encode_model(&server.pk, &model, &mut rng),
            Mode::Ternary => encode_model_mal(&server.pk, &model, &mut rng).unwrap(),
        };
        let artifact = artifact::export(&enc, &artifact::model_hash(&model), width as u16);
        Fixture {
            model,
            server,
            client,
            params: Params {
                width,
                ..Params::default()
            },
            artifact,
        }
    }

    fn config(&self) -> ServerConfig<G> {
        ServerConfig::new(self.params.clone(), self.server, self.model.clone(), Some(self.artifact.clone()))
    }
}

fn ternary(seed: u64) -> ForestModel {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let trees = gen::random_forest(&mut rng, 3, 3, 7, 3);
    ForestModel::ternary(&trees, 3, 3, 7, 2, &mut rng).unwrap()
}

#[test]
fn tcp_session_matches_oracle() {
    let fx = Fixture::<Toy>::new(ternary(1), 16, 1);
    let cfg = fx.config();
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let inputs: Vec<Vec<u32>> = (0..3).map(|_| gen::random_input(&mut rng, 7, 3)).collect();
    std::thread::scope(|s| {
        let server = s.spawn(|| {
            let mut reports = Vec::new();
            let mut rng = ChaCha20Rng::seed_from_u64(3);
            for conn in listener.incoming().take(inputs.len()) {
                let mut t = StreamTransport::tcp(conn.unwrap()).unwrap();
                reports.push(session::serve_session(&cfg, &mut t, &mut rng).unwrap());
            }
            reports
        });
        // The client starts from the downloaded artifact only.
        let bytes = {
            let mut t = StreamTransport::tcp(TcpStream::connect(addr).unwrap()).unwrap();
            session::fetch_artifact(&mut t, &mut rng).unwrap()
        };
        assert_eq!(bytes, fx.artifact);
        let (header, encoded) = artifact::import::<Toy>(&bytes).unwrap();
        let c = ClientSession {
            header: &header,
            encoded: &encoded,
            params: &fx.params,
            keys: Some(&fx.client),
            adversary: &Adversary::Honest,
        };
        for x in &inputs[1..] {
            let mut t = StreamTransport::tcp(TcpStream::connect(addr).unwrap()).unwrap();
            session::client_session(&c, &mut t, x, &mut rng).unwrap();
        }
        let reports = server.join().unwrap();
        assert_eq!(reports[0].decision, None);
        for (r, x) in reports[1..].iter().zip(&inputs[1..]) {
            assert_eq!(r.decision, Some(oracle_eval(&fx.model, x).unwrap().decision));
            assert_eq!((r.detail, r.aborted.as_deref()), (0, None));
        }
    });
}

#[test]
fn transcript_reparses_and_matches_wire_sizes() {
    let fx = Fixture::<Toy>::new(ternary(2), 16, 2);
    let (header, encoded) = artifact::import::<Toy>(&fx.artifact).unwrap();
    let c = ClientSession {
        header: &header,
        encoded: &encoded,
        params: &fx.params,
        keys: Some(&fx.client),
        adversary: &Adversary::Honest,
    };
    let (report, transcript) = session::run_loopback(&fx.config(), &c, &[1; 7], 9).unwrap();
    assert!(report.decision.is_some());
    let back = Transcript::from_jsonl(&transcript.to_jsonl()).unwrap();
    assert_eq!(back, transcript);
    let tags: Vec<Tag> = transcript.records.iter().map(|r| r.tag).collect();
    assert_eq!(
        tags,
        [Tag::Hello, Tag::Ready, Tag::MalMaskedSums, Tag::MalOtChoices, Tag::MalOtResponses, Tag::MalScore, Tag::MalDecryption]
    );
    let p = fx.model.p;
    let w = fx.params.width;
    let up = transcript.totals(Direction::ClientToServer);
    let down = transcript.totals(Direction::ServerToClient);
    let bundle = sdfe::gc::GarbledPathBundle::<Toy>::encoded_len(w);
    // Masked sums and bundles, OT responses, decryption.
    assert_eq!(up.flow_bytes, p * (64 + bundle) + p * 2 * w * 128 + 32);
    // OT choices and the blinded score.
    assert_eq!(down.flow_bytes, p * 2 * w * 32 + 64);
}

#[test]
fn stale_artifact_is_refused() {
    let fx = Fixture::<Toy>::new(ternary(3), 16, 3);
    // Same keys, different model: the hash in Hello no longer matches.
    let other = Fixture::<Toy>::new(ternary(4), 16, 3);
    let (header, encoded) = artifact::import::<Toy>(&other.artifact).unwrap();
    let c = ClientSession {
        header: &header,
        encoded: &encoded,
        params: &fx.params,
        keys: Some(&fx.client),
        adversary: &Adversary::Honest,
    };
    let (report, transcript) = session::run_loopback(&fx.config(), &c, &[0; 7], 1).unwrap();
    assert_eq!(report.decision, None);
    assert_eq!(report.aborted.as_deref(), Some("model version mismatch"));
    assert_eq!(transcript.records.last().unwrap().tag, Tag::Abort);
}

#[test]
fn width_mismatch_is_refused() {
    let fx = Fixture::<Toy>::new(ternary(5), 16, 5);
    let (header, encoded) = artifact::import::<Toy>(&fx.artifact).unwrap();
    let params = Params::<Toy> {
        width: 32,
        ..Params::default()
    };
    let c = ClientSession {
        header: &header,
        encoded: &encoded,
        params: &params,
        keys: Some(&fx.client),
        adversary: &Adversary::Honest,
    };
    let (report, _) = session::run_loopback(&fx.config(), &c, &[0; 7], 1).unwrap();
    assert_eq!(report.aborted.as_deref(), Some("comparand width mismatch"));
}

#[test]
fn artifact_version_and_group_are_checked() {
    let fx = Fixture::<Toy>::new(ternary(6), 16, 6);
    let mut bytes = fx.artifact.clone();
    bytes[4] = artifact::VERSION + 1;
    assert!(matches!(artifact::import::<Toy>(&bytes), Err(ArtifactError::Version(_))));
    assert!(matches!(artifact::import::<Ristretto>(&fx.artifact), Err(ArtifactError::Group { .. })));
    let truncated = &fx.artifact[..fx.artifact.len() - 1];
    assert!(artifact::import::<Toy>(truncated).is_err());
}

#[test]
fn hbc_file_exchange_on_ristretto() {
    let model = ForestModel::binary(&[example_tree(), example_tree()], 3, 3, 7).unwrap().with_tau(2);
    let fx = Fixture::<Ristretto>::new(model, 64, 7);
    let header: ArtifactHeader = artifact::peek_header(&fx.artifact).unwrap();
    let (_, encoded) = artifact::import::<Ristretto>(&fx.artifact).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    for (x, adversary, want) in [
        ([0u32; 7], Adversary::Honest, Decision::Accept),
        ([7u32; 7], Adversary::Honest, Decision::Accept),
        ([0, 0, 3, 0, 0, 7, 0], Adversary::Honest, Decision::Reject),
        ([0, 0, 3, 0, 0, 7, 0], Adversary::AllZeros, Decision::Accept),
    ] {
        let c = ClientSession {
            header: &header,
            encoded: &encoded,
            params: &fx.params,
            keys: None,
            adversary: &adversary,
        };
        let req = session::hbc_request_file(&c, &x, &mut rng).unwrap();
        let report = session::serve_file(&fx.config(), &req, &mut rng).unwrap();
        if adversary == Adversary::Honest {
            assert_eq!(want, oracle_eval(&fx.model, &x).unwrap().decision);
        }
        assert_eq!(report.decision, Some(want));
    }
}

#[test]
fn malicious_mode_needs_client_keys() {
    let fx = Fixture::<Toy>::new(ternary(9), 16, 9);
    let (header, encoded) = artifact::import::<Toy>(&fx.artifact).unwrap();
    let c = ClientSession {
        header: &header,
        encoded: &encoded,
        params: &fx.params,
        keys: None,
        adversary: &Adversary::Honest,
    };
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    assert!(matches!(session::hbc_request_file(&c, &[0; 7], &mut rng), Err(WireError::Protocol(_))));
    let (a, _b) = sdfe::wire::transport::loopback_pair();
    let mut t = Recorder::new(a, Direction::ClientToServer);
    assert!(matches!(session::client_session(&c, &mut t, &[0; 7], &mut rng), Err(WireError::MissingKeys)));
}
