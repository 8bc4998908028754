use super::adversary::*;
use super::*;
use crate::ahe::keygen;
use crate::analysis::oracle_eval;
use crate::forest::{gen, Path};
use crate::group::{Ristretto, ToyGroup};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type T = ToyGroup;

fn small_params() -> Params<T> {
    Params {
        crs: OtCrs::default(),
        width: 16,
    }
}

fn random_model(rng: &mut ChaCha20Rng, trees: usize, delta: usize, always: usize) -> ForestModel {
    let nu = 3;
    let t = gen::random_forest(rng, trees, delta, 5, nu);
    ForestModel::ternary(&t, delta, nu, 5, always, rng).unwrap()
}

#[test]
fn cell_sums_follow_targets() {
    let c = |feature| Comparison { feature, t: 3, v: 1 };
    let path = Path {
        polarity: 1,
        nodes: vec![c(0), c(1), c(2)],
        terminal: 2,
        tree: Some(0),
    };
    let sum = |x: [u32; 3], polarity: i8| -> i64 {
        (0..3)
            .map(|j| cell_value(&path.nodes[j], j == path.terminal, polarity, 3, x[j]))
            .sum()
    };
    assert_eq!(sum([0, 0, 0], 1), 5);
    assert_eq!(sum([0, 0, 7], 1), 2);
    assert_eq!(sum([7, 0, 0], 1), 4);
    // Negative polarity inverts only the terminal.
    assert_eq!(sum([0, 0, 7], -1), 5);
    assert_eq!(sum([0, 0, 0], -1), 2);
    assert_eq!(sum_to_outcome(5, 3), 1);
    assert_eq!(sum_to_outcome(2, 3), -1);
    assert_eq!(sum_to_outcome(4, 3), 0);
}

#[test]
fn encoded_sums_match_plaintext_outcomes() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let kp = keygen::<T, _>(&mut rng);
    for _ in 0..30 {
        let model = random_model(&mut rng, 3, 3, 1);
        let enc = encode_model_mal(&kp.pk, &model, &mut rng).unwrap();
        let x = gen::random_input(&mut rng, 5, 3);
        let inputs = crate::forest::resolve(&enc.layout, &x, 3).unwrap();
        let sums = enc.path_sums(&inputs).unwrap();
        let want = oracle_eval(&model, &x).unwrap().outcomes;
        for (i, s) in sums.iter().enumerate() {
            let e = kp.sk.decrypt_to_group(s);
            let v = (0..=2 * enc.len as i64).find(|&m| T::encode_int(m) == e).unwrap();
            // The client-visible outcome carries the polarity.
            assert_eq!(sum_to_outcome(v, enc.len), want[i] * model.paths[i].polarity as i64);
        }
    }
}

#[test]
fn binary_model_refused() {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let kp = keygen::<T, _>(&mut rng);
    let m = ForestModel::binary(&[crate::forest::example_tree()], 3, 3, 7).unwrap();
    assert_eq!(encode_model_mal(&kp.pk, &m, &mut rng), Err(MalError::NotTernary));
}

#[test]
fn zero_masks_make_comparands_equal() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let params = small_params();
    let (server, client) = (keygen::<T, _>(&mut rng), keygen::<T, _>(&mut rng));
    let len = 4;
    let a = comparand::<T>(&T::scalar_zero(), len, params.width);
    for (s, test) in [(2 * len as i64 - 1, gc::TEST_A), (len as i64 - 1, gc::TEST_B)] {
        let beta = server.pk.encrypt_int(s, &mut rng);
        let (_, pending) = server_decrypt_and_ot(&params, &server.sk, len, &[beta], &mut rng);
        assert_eq!(pending.comparands[0][test], a);
        assert_ne!(pending.comparands[0][1 - test], a);
    }
    let _ = client;
}

#[test]
fn random_masks_do_not_change_equalities() {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let params = small_params();
    let (server, client) = (keygen::<T, _>(&mut rng), keygen::<T, _>(&mut rng));
    for _ in 0..10 {
        let model = random_model(&mut rng, 3, 3, 1);
        let enc = encode_model_mal(&server.pk, &model, &mut rng).unwrap();
        let x = gen::random_input(&mut rng, 5, 3);
        let inputs = crate::forest::resolve(&enc.layout, &x, 3).unwrap();
        let eq = |alphas: Option<Vec<_>>, rng: &mut ChaCha20Rng| {
            let (flow, sec) =
                client_first_flow_with(&params, &client, &enc, &inputs, alphas, &gc::HONEST_VALUES, rng)
                    .unwrap();
            let (_, pend) = server_decrypt_and_ot(&params, &server.sk, enc.len, &flow.betas, rng);
            pend.comparands
                .iter()
                .zip(&sec.comparands)
                .map(|(b, a)| [b[0] == *a, b[1] == *a])
                .collect::<Vec<_>>()
        };
        let zero = eq(Some(vec![T::scalar_zero(); enc.paths]), &mut rng);
        assert_eq!(zero, eq(None, &mut rng));
    }
}

fn session<G: Group>(
    params: &Params<G>,
    model: &ForestModel,
    adv: &Adversary,
    x: &[u32],
    rng: &mut ChaCha20Rng,
) -> (SessionOutcome, Vec<i8>) {
    let server_keys = keygen::<G, _>(rng);
    let client_keys = keygen::<G, _>(rng);
    let server = Server::new(params.clone(), server_keys, model.clone());
    let enc = encode_model_mal(&server.keys.pk, model, rng).unwrap();
    let mut client = Client::new(params, &client_keys, adv);
    let out = run_session(&server, &enc, &mut client, x, rng).unwrap();
    (out, client.targets().to_vec())
}

#[test]
fn honest_sessions_match_oracle() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let params = small_params();
    for _ in 0..20 {
        let trees = rng.gen_range(1..4);
        let (delta, always) = (rng.gen_range(1..4), rng.gen_range(0..3));
        let model = random_model(&mut rng, trees, delta, always);
        let x = gen::random_input(&mut rng, 5, 3);
        let want = oracle_eval(&model, &x).unwrap();
        let (out, _) = session(&params, &model, &Adversary::Honest, &x, &mut rng);
        assert_eq!(out.detected, 0);
        assert_eq!(out.score, Some(want.score));
        assert_eq!(out.decision, want.decision);
    }
}

#[test]
fn honest_session_on_ristretto() {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let model = random_model(&mut rng, 2, 2, 1);
    let x = gen::random_input(&mut rng, 5, 3);
    let want = oracle_eval(&model, &x).unwrap();
    let (out, _) = session(&Params::<Ristretto>::default(), &model, &Adversary::Honest, &x, &mut rng);
    assert_eq!((out.score, out.decision), (Some(want.score), want.decision));
}

#[test]
fn compute_score_example() {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let kp = keygen::<T, _>(&mut rng);
    let e = |m| kp.pk.encrypt_int(m, &mut ChaCha20Rng::seed_from_u64(m as u64 ^ 10));
    // Outcomes (+1, 0, -1, +1) as (σ_A, σ_B) pairs.
    let verdicts = [(1, 1), (-1, 1), (-1, -1), (1, 1)].map(|(a, b)| PathVerdict::Fired([e(a), e(b)]));
    let (ct, b) = compute_score(&kp.pk, &[1, 1, 1, 1], &verdicts, &mut rng);
    let got = unblind(&b, &client_decrypt(&kp.sk, &ct));
    assert_eq!(got, T::encode_int(1));
    let (ct, b) = compute_score(&kp.pk, &[-1, 1, 1, 1], &verdicts, &mut rng);
    assert_eq!(unblind(&b, &client_decrypt(&kp.sk, &ct)), T::encode_int(-1));
    let ignore = [(-1, 1); 3].map(|(a, s)| PathVerdict::Fired([e(a), e(s)]));
    let (ct, b) = compute_score(&kp.pk, &[1, -1, 1], &ignore, &mut rng);
    assert_eq!(unblind(&b, &client_decrypt(&kp.sk, &ct)), T::identity());
}

#[test]
fn window_boundaries() {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let b = Blinding::<T> {
        theta: T::random_scalar(&mut rng),
        zeta: T::random_nonzero_scalar(&mut rng),
    };
    let window = WindowTable::<T>::new(3, 7);
    let returned = |s: i64| (T::encode_int(s) + T::mul_base(&b.theta)) * b.zeta;
    assert_eq!(compute_result(&b, &window, &returned(3)), Decision::Accept);
    assert_eq!(compute_result(&b, &window, &returned(7)), Decision::Accept);
    assert_eq!(compute_result(&b, &window, &returned(2)), Decision::Reject);
    assert_eq!(compute_result(&b, &window, &returned(8)), Decision::Reject);
}

#[test]
fn random_decryption_rarely_accepts() {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let b = Blinding::<T> {
        theta: T::random_scalar(&mut rng),
        zeta: T::random_nonzero_scalar(&mut rng),
    };
    let window = WindowTable::<T>::new(1, 10);
    let n = 100_000;
    let acc = (0..n)
        .filter(|_| compute_result(&b, &window, &T::random_element(&mut rng)).is_accept())
        .count();
    // Expected about 0.95 hits; Pr[Poisson(0.95) >= 8] < 1e-5.
    assert!(10 * n < crate::group::TOY_ORDER as usize);
    assert!(acc <= 7, "{acc}");
}

fn polarity_sum(model: &ForestModel, targets: &[i8]) -> i64 {
    model.paths.iter().zip(targets).map(|(p, &t)| p.polarity as i64 * t as i64).sum()
}

#[test]
fn forcing_adversaries_get_polarity_weighted_targets() {
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let params = small_params();
    for channel in [Channel::Labels, Channel::Sums] {
        for rule in [Rule::AllPlus, Rule::AllMinus, Rule::Alternating, Rule::GuessK { k: 2 }] {
            let model = random_model(&mut rng, 3, 3, 2);
            let x = gen::random_input(&mut rng, 5, 3);
            let adv = Adversary::Forced { rule, channel };
            let (out, targets) = session(&params, &model, &adv, &x, &mut rng);
            assert_eq!(out.detected, 0);
            assert_eq!(out.score, Some(polarity_sum(&model, &targets)));
        }
    }
}

#[test]
fn swapped_tables_flip_every_outcome() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let params = small_params();
    for _ in 0..5 {
        let model = random_model(&mut rng, 3, 3, 2);
        let x = gen::random_input(&mut rng, 5, 3);
        let want = oracle_eval(&model, &x).unwrap().score;
        let (out, _) = session(&params, &model, &Adversary::SwappedTables, &x, &mut rng);
        assert_eq!((out.detected, out.score), (0, Some(-want)));
    }
}

#[test]
fn all_zeros_client_scores_zero() {
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let model = random_model(&mut rng, 3, 3, 2);
    let x = gen::random_input(&mut rng, 5, 3);
    let (out, _) = session(&small_params(), &model, &Adversary::AllZeros, &x, &mut rng);
    assert_eq!((out.score, out.decision), (Some(0), Decision::Reject));
}

#[test]
fn corrupt_proof_is_detected_and_randomizes() {
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    let params = Params::<Ristretto> {
        crs: OtCrs::default(),
        width: 16,
    };
    let mut model = random_model(&mut rng, 2, 2, 2);
    // Every path forced to +1 after polarity would otherwise accept.
    for p in &mut model.paths {
        p.polarity = 1;
    }
    let x = gen::random_input(&mut rng, 5, 3);
    let (out, _) = session(&params, &model, &Adversary::CorruptProof, &x, &mut rng);
    assert_eq!(out.detected, 1);
    assert_eq!((out.score, out.decision), (None, Decision::Reject));
}

#[test]
fn corrupt_gate_either_fails_or_is_harmless() {
    let mut rng = ChaCha20Rng::seed_from_u64(14);
    let params = small_params();
    let mut seen = [0; 2];
    for _ in 0..40 {
        let model = random_model(&mut rng, 2, 3, 1);
        let x = gen::random_input(&mut rng, 5, 3);
        let want = oracle_eval(&model, &x).unwrap();
        let (out, _) = session(&params, &model, &Adversary::CorruptGate, &x, &mut rng);
        if out.detected == 0 {
            assert_eq!(out.score, Some(want.score));
        }
        seen[out.detected.min(1)] += 1;
    }
    assert!(seen[0] > 0 && seen[1] > 0, "{seen:?}");
}

#[test]
fn adversary_names_parse() {
    assert_eq!("honest".parse::<Adversary>(), Ok(Adversary::Honest));
    assert_eq!(
        "guess-20".parse::<Adversary>(),
        Ok(Adversary::Forced {
            rule: Rule::GuessK { k: 20 },
            channel: Channel::Labels
        })
    );
    assert!("nope".parse::<Adversary>().is_err());
}
