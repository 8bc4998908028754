use std::collections::HashMap;
use std::fs;
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::rngs::OsRng;
use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use sdfe::ahe::{keygen, Keypair};
use sdfe::analysis::{self, Strategy};
use sdfe::forest::{self, assign_balanced_polarities, Calibration, ForestModel, Tree};
use sdfe::group::{Group, GroupKind, Ristretto, ToyGroup};
use sdfe::keyfile::KeyFile;
use sdfe::malicious::adversary::{run_session, Adversary, Client};
use sdfe::malicious::{encode_model_mal, Params, Server};
use sdfe::wire::artifact::{self, ArtifactHeader};
use sdfe::wire::bench::{self, Accounting, BenchMode};
use sdfe::wire::session::{self, ClientSession, ServerConfig};
use sdfe::wire::transport::{Direction, Recorder, StreamTransport};
use sdfe::Decision;

#[derive(Parser)]
#[command(name = "sdfe", version, about = "Secure two-party decision-forest evaluation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Binary,
    Ternary,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum BenchModeArg {
    Hbc,
    Malicious,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum AccountingArg {
    Formula,
    Measured,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    GuessK,
    AllNonzero,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an AHE key pair.
    Keygen {
        #[arg(long, default_value = "ristretto")]
        group: GroupKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compile a JSON tree list into a path model.
    CompileModel {
        #[arg(long)]
        trees: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        delta: usize,
        #[arg(long, default_value_t = 4)]
        nu: u8,
        /// Feature-vector length; defaults to one past the largest index.
        #[arg(long)]
        features: Option<usize>,
        #[arg(long, default_value_t = 0)]
        always_accepting: usize,
        #[arg(long)]
        tau: Option<i64>,
        /// Pad each path to this many comparisons with dummies.
        #[arg(long)]
        chi: Option<usize>,
        /// Re-draw polarities until the sign counts differ by at most this.
        #[arg(long)]
        balance_slack: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encrypt a model into the offline artifact.
    EncodeModel {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        keys: PathBuf,
        #[arg(long, default_value_t = 64)]
        width: u16,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Answer sessions over TCP, or one HbC request file.
    Serve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        keys: PathBuf,
        /// Served to clients that request it.
        #[arg(long)]
        artifact: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        #[arg(long, default_value_t = 64)]
        width: usize,
        /// Stop after this many connections.
        #[arg(long)]
        sessions: Option<usize>,
        #[arg(long)]
        exchange_file: Option<PathBuf>,
    },
    /// Download the offline artifact from a server.
    FetchArtifact {
        #[arg(long)]
        connect: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the client side of one session.
    Eval {
        #[arg(long)]
        artifact: PathBuf,
        /// JSON array of quantized features, or a JSON object of raw values
        /// with --calibration.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long)]
        connect: Option<String>,
        /// Write the HbC request here instead of connecting.
        #[arg(long)]
        exchange_file: Option<PathBuf>,
        /// Client keys (malicious mode); fresh ones are drawn otherwise.
        #[arg(long)]
        keys: Option<PathBuf>,
        #[arg(long, default_value = "honest")]
        adversary: Adversary,
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Online bandwidth table.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "50,100,150,200")]
        paths: Vec<usize>,
        #[arg(long, value_enum, default_value = "both")]
        mode: BenchModeArg,
        #[arg(long, value_enum, default_value = "formula")]
        accounting: AccountingArg,
        #[arg(long, default_value = "ristretto")]
        group: GroupKind,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long)]
        json: bool,
    },
    /// Attacker success: exact value and Monte Carlo, or full sessions.
    Attack {
        #[arg(long, value_enum, default_value = "all-nonzero")]
        strategy: StrategyArg,
        #[arg(long, default_value_t = 120)]
        paths: u64,
        #[arg(long, default_value_t = 20)]
        tau: i64,
        /// Window top; defaults to P.
        #[arg(long)]
        hi: Option<i64>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Run full protocol sessions against this model instead.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "all-plus")]
        adversary: Adversary,
        #[arg(long, default_value = "toy")]
        group: GroupKind,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Plaintext evaluation, or metrics over a labeled CSV.
    Oracle {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Columns: one per feature plus `label` (0/1).
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
}

fn rng_from(seed: Option<u64>) -> ChaCha20Rng {
    match seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_rng(OsRng).expect("OS randomness"),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let s = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&s).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn read_model(path: &Path) -> Result<ForestModel> {
    let s = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let m = ForestModel::from_json(&s).map_err(anyhow::Error::msg)?;
    m.validate()?;
    Ok(m)
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum TreesFile {
    List(Vec<Tree>),
    Wrapped { trees: Vec<Tree> },
}

fn max_feature(t: &Tree) -> Option<usize> {
    match t {
        Tree::Leaf { .. } => None,
        Tree::Split { feature, le, gt, .. } => [Some(*feature), max_feature(le), max_feature(gt)]
            .into_iter()
            .flatten()
            .max(),
    }
}

/// Quantized input: a JSON array, or raw values mapped through a
/// calibration.
fn read_input(path: &Path, calibration: Option<&Path>, nu: u8) -> Result<Vec<u32>> {
    match calibration {
        None => read_json(path),
        Some(c) => {
            let cal: Calibration = read_json(c)?;
            let raw: HashMap<String, f64> = read_json(path)?;
            Ok(forest::quantize(&raw, nu, &cal)?)
        }
    }
}

fn load_keys<G: Group>(path: &Path) -> Result<Keypair<G>> {
    let f: KeyFile = read_json(path)?;
    Ok(f.keypair::<G>()?)
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Keygen { group, out, seed } => {
            let mut rng = rng_from(seed);
            let f = match group {
                GroupKind::Ristretto => KeyFile::from_keypair(&keygen::<Ristretto, _>(&mut rng)),
                GroupKind::Toy => KeyFile::from_keypair(&keygen::<ToyGroup, _>(&mut rng)),
            };
            write_json(&out, &f)?;
            println!("wrote {} key pair to {}", group, out.display());
        }
        Cmd::CompileModel {
            trees,
            mode,
            delta,
            nu,
            features,
            always_accepting,
            tau,
            chi,
            balance_slack,
            seed,
            out,
        } => {
            let mut rng = rng_from(seed);
            let trees = match read_json::<TreesFile>(&trees)? {
                TreesFile::List(t) | TreesFile::Wrapped { trees: t } => t,
            };
            let features = features.unwrap_or_else(|| trees.iter().filter_map(max_feature).max().map_or(1, |m| m + 1));
            let mut model = match mode {
                ModeArg::Binary => ForestModel::binary(&trees, delta, nu, features)?,
                ModeArg::Ternary => ForestModel::ternary(&trees, delta, nu, features, always_accepting, &mut rng)?,
            };
            if let Some(slack) = balance_slack {
                assign_balanced_polarities(&mut model.paths, slack, &mut rng);
            }
            if let Some(chi) = chi {
                model = model.with_dummies(chi, &mut rng)?;
            }
            if let Some(t) = tau {
                model = model.with_tau(t);
            }
            fs::write(&out, model.to_json() + "\n")?;
            println!(
                "P = {}, path length = {}, tau = {}, window top = {}",
                model.p,
                model.path_len(),
                model.tau,
                model.max_score()
            );
        }
        Cmd::EncodeModel {
            model,
            keys,
            width,
            seed,
            out,
        } => {
            let model = read_model(&model)?;
            let kf: KeyFile = read_json(&keys)?;
            let mut rng = rng_from(seed);
            let bytes = match kf.kind()? {
                GroupKind::Ristretto => encode::<Ristretto, _>(&kf, &model, width, &mut rng)?,
                GroupKind::Toy => encode::<ToyGroup, _>(&kf, &model, width, &mut rng)?,
            };
            fs::write(&out, &bytes)?;
            let h = artifact::peek_header(&bytes)?;
            println!(
                "artifact {}: {} bytes, table {} bits",
                out.display(),
                bytes.len(),
                h.payload_bits()
            );
        }
        Cmd::Serve {
            model,
            keys,
            artifact,
            listen,
            width,
            sessions,
            exchange_file,
        } => {
            let model = read_model(&model)?;
            let kf: KeyFile = read_json(&keys)?;
            let artifact = artifact.map(fs::read).transpose()?;
            match kf.kind()? {
                GroupKind::Ristretto => serve::<Ristretto>(&kf, model, artifact, &listen, width, sessions, exchange_file)?,
                GroupKind::Toy => serve::<ToyGroup>(&kf, model, artifact, &listen, width, sessions, exchange_file)?,
            }
        }
        Cmd::FetchArtifact { connect, out } => {
            let mut t = StreamTransport::tcp(TcpStream::connect(&connect)?)?;
            let bytes = session::fetch_artifact(&mut t, &mut OsRng)?;
            artifact::peek_header(&bytes)?;
            fs::write(&out, &bytes)?;
            println!("wrote {} bytes to {}", bytes.len(), out.display());
        }
        Cmd::Eval {
            artifact,
            input,
            calibration,
            connect,
            exchange_file,
            keys,
            adversary,
            transcript,
        } => {
            let bytes = fs::read(&artifact)?;
            let header = artifact::peek_header(&bytes)?;
            let x = read_input(&input, calibration.as_deref(), header.nu)?;
            let args = EvalArgs {
                connect,
                exchange_file,
                keys,
                adversary,
                transcript,
            };
            match GroupKind::from_id(header.group) {
                Some(GroupKind::Ristretto) => eval::<Ristretto>(&bytes, &x, &args)?,
                Some(GroupKind::Toy) => eval::<ToyGroup>(&bytes, &x, &args)?,
                None => bail!("artifact names unknown group {}", header.group),
            }
        }
        Cmd::Bench {
            paths,
            mode,
            accounting,
            group,
            width,
            json,
        } => {
            let modes: Vec<BenchMode> = match mode {
                BenchModeArg::Hbc => vec![BenchMode::Hbc],
                BenchModeArg::Malicious => vec![BenchMode::Malicious],
                BenchModeArg::Both => vec![BenchMode::Hbc, BenchMode::Malicious],
            };
            let mut rows = Vec::new();
            for m in modes {
                for &p in &paths {
                    rows.push(match accounting {
                        AccountingArg::Formula => bench::formula_row(m, p),
                        AccountingArg::Measured => match group {
                            GroupKind::Ristretto => bench::measured_row::<Ristretto>(m, p, width, p as u64)?,
                            GroupKind::Toy => bench::measured_row::<ToyGroup>(m, p, width, p as u64)?,
                        },
                    });
                }
            }
            print_bench(&rows, json)?;
        }
        Cmd::Attack {
            strategy,
            paths,
            tau,
            hi,
            trials,
            model,
            adversary,
            group,
            width,
            seed,
        } => {
            let mut rng = rng_from(seed);
            match model {
                Some(m) => {
                    let model = read_model(&m)?;
                    match group {
                        GroupKind::Ristretto => attack_sessions::<Ristretto>(&model, &adversary, width, trials, &mut rng)?,
                        GroupKind::Toy => attack_sessions::<ToyGroup>(&model, &adversary, width, trials, &mut rng)?,
                    }
                }
                None => {
                    let hi = hi.unwrap_or(paths as i64);
                    let (s, name) = match strategy {
                        StrategyArg::GuessK => (Strategy::GuessK, "guess-k"),
                        StrategyArg::AllNonzero => (Strategy::AllNonzero, "all-nonzero"),
                    };
                    let exact = match s {
                        Strategy::GuessK => analysis::attack_success(paths, tau, s),
                        Strategy::AllNonzero => analysis::attack_success_window(paths, tau, hi),
                    };
                    let wins = analysis::monte_carlo(paths as usize, tau, hi, s, trials, &mut rng);
                    let rate = wins as f64 / trials as f64;
                    let p = exact.to_f64();
                    let se = (p * (1.0 - p) / trials as f64).sqrt();
                    println!("strategy      {name}");
                    println!("P, tau, hi    {paths}, {tau}, {hi}");
                    println!("exact         {p:.6e}");
                    println!("monte carlo   {wins}/{trials} = {rate:.6e} ({:+.2} se)", if se > 0.0 { (rate - p) / se } else { 0.0 });
                }
            }
        }
        Cmd::Oracle {
            model,
            input,
            csv,
            calibration,
        } => {
            let model = read_model(&model)?;
            match (input, csv) {
                (Some(i), None) => {
                    let x = read_input(&i, calibration.as_deref(), model.nu)?;
                    let r = analysis::oracle_eval(&model, &x)?;
                    println!(
                        "{}",
                        serde_json::json!({
                            "decision": r.decision,
                            "score": r.score,
                            "accepting": r.accepting,
                            "outcomes": r.outcomes,
                        })
                    );
                }
                (None, Some(c)) => oracle_csv(&model, &c, calibration.as_deref())?,
                _ => bail!("give exactly one of --input or --csv"),
            }
        }
    }
    Ok(())
}

fn encode<G: Group, R: RngCore + CryptoRng>(kf: &KeyFile, model: &ForestModel, width: u16, rng: &mut R) -> Result<Vec<u8>> {
    let kp = kf.keypair::<G>()?;
    let enc = match model.mode {
        forest::Mode::Binary => sdfe::hbc::encode_model(&kp.pk, model, rng),
        forest::Mode::Ternary => encode_model_mal(&kp.pk, model, rng)?,
    };
    Ok(artifact::export(&enc, &artifact::model_hash(model), width))
}

fn serve<G: Group>(
    kf: &KeyFile,
    model: ForestModel,
    artifact: Option<Vec<u8>>,
    listen: &str,
    width: usize,
    sessions: Option<usize>,
    exchange_file: Option<PathBuf>,
) -> Result<()> {
    let params = Params::<G> {
        width,
        ..Params::default()
    };
    let cfg = ServerConfig::new(params, kf.keypair::<G>()?, model, artifact);
    let report_json = |r: &session::ServerReport| {
        serde_json::json!({
            "sid": hex::encode(r.sid),
            "decision": r.decision,
            "detail": r.detail,
            "aborted": r.aborted,
        })
    };
    if let Some(path) = exchange_file {
        let r = session::serve_file(&cfg, &fs::read(&path)?, &mut OsRng)?;
        println!("{}", report_json(&r));
        return Ok(());
    }
    let listener = TcpListener::bind(listen)?;
    eprintln!("listening on {}", listener.local_addr()?);
    for (n, conn) in listener.incoming().enumerate() {
        let mut t = StreamTransport::tcp(conn?)?;
        match session::serve_session(&cfg, &mut t, &mut OsRng) {
            Ok(r) => println!("{}", report_json(&r)),
            Err(e) => eprintln!("session error: {e}"),
        }
        if sessions.is_some_and(|s| n + 1 >= s) {
            break;
        }
    }
    Ok(())
}

struct EvalArgs {
    connect: Option<String>,
    exchange_file: Option<PathBuf>,
    keys: Option<PathBuf>,
    adversary: Adversary,
    transcript: Option<PathBuf>,
}

fn eval<G: Group>(bytes: &[u8], x: &[u32], a: &EvalArgs) -> Result<()> {
    let (header, encoded): (ArtifactHeader, _) = artifact::import::<G>(bytes)?;
    let keys = match &a.keys {
        Some(k) => load_keys::<G>(k)?,
        None => keygen::<G, _>(&mut OsRng),
    };
    let params = Params::<G> {
        width: header.lambda_gc as usize,
        ..Params::default()
    };
    let c = ClientSession {
        header: &header,
        encoded: &encoded,
        params: &params,
        keys: Some(&keys),
        adversary: &a.adversary,
    };
    match (&a.connect, &a.exchange_file) {
        (Some(addr), None) => {
            let t = StreamTransport::tcp(TcpStream::connect(addr)?)?;
            let mut t = Recorder::new(t, Direction::ClientToServer);
            let sid = session::client_session(&c, &mut t, x, &mut OsRng)?;
            let (_, transcript) = t.into_inner();
            let up = transcript.totals(Direction::ClientToServer);
            let down = transcript.totals(Direction::ServerToClient);
            println!(
                "session {} complete: sent {} bytes, received {} bytes",
                hex::encode(sid),
                up.frame_bytes,
                down.frame_bytes
            );
            if let Some(p) = &a.transcript {
                fs::write(p, transcript.to_jsonl())?;
            }
        }
        (None, Some(out)) => {
            let req = session::hbc_request_file(&c, x, &mut OsRng)?;
            fs::write(out, &req)?;
            println!("wrote {} byte request to {}", req.len(), out.display());
        }
        _ => bail!("give exactly one of --connect or --exchange-file"),
    }
    Ok(())
}

fn print_bench(rows: &[bench::BenchRow], json: bool) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(rows)?);
        return Ok(());
    }
    println!("{:<10} {:<9} {:>5} {:>12} {:>12}", "mode", "counting", "P", "client", "server");
    for r in rows {
        let mode = match r.mode {
            BenchMode::Hbc => "hbc",
            BenchMode::Malicious => "malicious",
        };
        let acc = match r.accounting {
            Accounting::Formula => "formula",
            Accounting::Measured => "measured",
        };
        println!("{:<10} {:<9} {:>5} {:>12} {:>12}", mode, acc, r.paths, r.client(), r.server());
        for i in &r.items {
            println!("    {:<7} {:<28} {:>12}", i.party, i.name, bench::format_size(i.bits));
        }
    }
    Ok(())
}

fn attack_sessions<G: Group>(
    model: &ForestModel,
    adversary: &Adversary,
    width: usize,
    trials: u64,
    rng: &mut ChaCha20Rng,
) -> Result<()> {
    let params = Params::<G> {
        width,
        ..Params::default()
    };
    let client_keys = keygen::<G, _>(rng);
    let server_keys = keygen::<G, _>(rng);
    let x = vec![0; model.features.max(1)];
    let (mut accepts, mut detected) = (0u64, 0u64);
    for _ in 0..trials {
        // Fresh polarities and encoding: the client never sees either.
        let mut m = model.clone();
        forest::assign_polarities(&mut m.paths, rng);
        let server = Server::new(params.clone(), server_keys, m.clone());
        let enc = encode_model_mal(&server.keys.pk, &m, rng)?;
        let mut client = Client::new(&params, &client_keys, adversary);
        let out = run_session(&server, &enc, &mut client, &x, rng)?;
        accepts += (out.decision == Decision::Accept) as u64;
        detected += (out.detected > 0) as u64;
    }
    println!("adversary     {adversary:?}");
    println!("sessions      {trials}");
    println!("accepted      {accepts} ({:.4e})", accepts as f64 / trials as f64);
    println!("detected      {detected}");
    Ok(())
}

fn oracle_csv(model: &ForestModel, path: &Path, calibration: Option<&Path>) -> Result<()> {
    let cal: Option<Calibration> = calibration.map(read_json).transpose()?;
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let label_col = headers
        .iter()
        .position(|h| h == "label")
        .context("CSV needs a `label` column")?;
    let (mut decisions, mut labels) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let label = rec[label_col].trim() == "1";
        let x: Vec<u32> = match &cal {
            Some(cal) => {
                let raw: HashMap<String, f64> = headers
                    .iter()
                    .zip(rec.iter())
                    .filter(|(h, _)| *h != "label")
                    .map(|(h, v)| Ok((h.to_string(), v.trim().parse::<f64>()?)))
                    .collect::<Result<_>>()?;
                forest::quantize(&raw, model.nu, cal)?
            }
            None => rec
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != label_col)
                .map(|(_, v)| v.trim().parse::<u32>().map_err(anyhow::Error::from))
                .collect::<Result<_>>()?,
        };
        decisions.push(analysis::oracle_eval(model, &x)?.decision);
        labels.push(label);
    }
    let m = analysis::metrics(&decisions, &labels)?;
    println!("samples  {}", decisions.len());
    println!("FPR      {:.4}", m.fpr);
    println!("FNR      {:.4}", m.fnr);
    println!("F1       {:.4}", m.f1);
    Ok(())
}
