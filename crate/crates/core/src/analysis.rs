//! Plaintext reference evaluation, accuracy metrics and exact attacker
//! success probabilities.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::forest::{resolve, ForestError, ForestModel, Mode};
use crate::Decision;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    /// Binary: `1` for a satisfied path. Ternary: outcome in `{-1, 0, +1}`.
    /// Polarity never changes an honest outcome.
    pub outcomes: Vec<i64>,
    /// Binary: satisfied paths. Ternary: paths with nonzero outcome.
    pub accepting: usize,
    /// Binary: equal to `accepting`. Ternary: `#(+1) - #(-1)`.
    pub score: i64,
    pub decision: Decision,
}

/// Evaluates the model in the clear on a quantized input vector. Ternary
/// decisions use the window `[τ, T]` with `T` the largest honest score.
pub fn oracle_eval(model: &ForestModel, x: &[u32]) -> Result<OracleResult, ForestError> {
    let inputs = resolve(&model.layout(), x, model.nu)?;
    let outcomes: Vec<i64> = match model.mode {
        Mode::Binary => model
            .paths
            .iter()
            .zip(&inputs)
            .map(|(p, xi)| p.satisfied(xi) as i64)
            .collect(),
        Mode::Ternary => model
            .paths
            .iter()
            .zip(&inputs)
            .map(|(p, xi)| p.ternary_outcome(xi))
            .collect(),
    };
    let accepting = outcomes.iter().filter(|&&o| o != 0).count();
    let score = outcomes.iter().sum();
    let accept = match model.mode {
        Mode::Binary => score >= model.tau,
        Mode::Ternary => (model.tau..=model.max_score()).contains(&score),
    };
    Ok(OracleResult {
        outcomes,
        accepting,
        score,
        decision: Decision::from_bool(accept),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub fpr: f64,
    pub fnr: f64,
    pub f1: f64,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no samples")]
    Empty,
    #[error("{0} decisions but {1} labels")]
    Length(usize, usize),
}

/// `F1 = (1 - FPR) / (1 + (FNR - FPR) / 2)`. `labels[i]` is true for a
/// sample that should be accepted. A class with no samples has rate 0.
pub fn f1_score(fpr: f64, fnr: f64) -> f64 {
    (1.0 - fpr) / (1.0 + (fnr - fpr) / 2.0)
}

pub fn metrics(decisions: &[Decision], labels: &[bool]) -> Result<Metrics, MetricsError> {
    if decisions.len() != labels.len() {
        return Err(MetricsError::Length(decisions.len(), labels.len()));
    }
    if decisions.is_empty() {
        return Err(MetricsError::Empty);
    }
    let (mut fp, mut neg, mut fneg, mut pos) = (0u64, 0u64, 0u64, 0u64);
    for (d, &l) in decisions.iter().zip(labels) {
        if l {
            pos += 1;
            fneg += !d.is_accept() as u64;
        } else {
            neg += 1;
            fp += d.is_accept() as u64;
        }
    }
    let rate = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let (fpr, fnr) = (rate(fp, neg), rate(fneg, pos));
    Ok(Metrics {
        fpr,
        fnr,
        f1: f1_score(fpr, fnr),
    })
}

/// An exact probability `num / den`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exact {
    pub num: BigUint,
    pub den: BigUint,
}

impl Exact {
    pub fn to_f64(&self) -> f64 {
        // Shift both sides down so the ratio survives f64 range limits.
        let shift = self.den.bits().saturating_sub(1000);
        let n = (&self.num >> shift).to_f64().unwrap_or(f64::INFINITY);
        let d = (&self.den >> shift).to_f64().unwrap_or(f64::INFINITY);
        n / d
    }
}

fn binomial_row(n: u64) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for k in 0..n {
        let next = &row[k as usize] * BigUint::from(n - k) / BigUint::from(k + 1);
        row.push(next);
    }
    row
}

/// `Pr[lo <= Bin(n, 1/2) <= hi]`.
pub fn binomial_range(n: u64, lo: u64, hi: u64) -> Exact {
    let row = binomial_row(n);
    let mut num = BigUint::zero();
    for k in lo..=hi.min(n) {
        num += &row[k as usize];
    }
    Exact {
        num,
        den: BigUint::one() << n,
    }
}

/// `Pr[Bin(n, 1/2) >= m]`.
pub fn binomial_tail(n: u64, m: u64) -> Exact {
    binomial_range(n, m, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Force `τ` paths to the guessed polarity, zero the rest.
    GuessK,
    /// Force every path to `+1`.
    AllNonzero,
}

/// Success probability against uniformly hidden polarities. `AllNonzero`
/// succeeds when at least `⌈(P + τ) / 2⌉` polarities are positive.
pub fn attack_success(p: u64, tau: i64, strategy: Strategy) -> Exact {
    match strategy {
        Strategy::GuessK => Exact {
            num: BigUint::one(),
            den: BigUint::one() << tau.max(0) as u64,
        },
        Strategy::AllNonzero => binomial_tail(p, all_nonzero_threshold(p, tau)),
    }
}

/// `AllNonzero` against the full window `[τ, hi]`: the score is
/// `2·#(+1) - P`.
pub fn attack_success_window(p: u64, tau: i64, hi: i64) -> Exact {
    let top = (p as i64 + hi).div_euclid(2).clamp(0, p as i64) as u64;
    binomial_range(p, all_nonzero_threshold(p, tau), top)
}

fn all_nonzero_threshold(p: u64, tau: i64) -> u64 {
    ((p as i64 + tau).max(0) as u64).div_ceil(2).min(p + 1)
}

/// Outcome-level simulation: each trial draws fresh polarities and
/// forces the strategy's targets. Returns the number of accepted trials.
pub fn monte_carlo<R: Rng>(
    p: usize,
    tau: i64,
    hi: i64,
    strategy: Strategy,
    trials: u64,
    rng: &mut R,
) -> u64 {
    let mut wins = 0;
    for _ in 0..trials {
        let score: i64 = match strategy {
            Strategy::AllNonzero => (0..p).map(|_| if rng.gen() { 1 } else { -1 }).sum(),
            Strategy::GuessK => (0..tau.max(0) as usize)
                .map(|_| {
                    let polarity: bool = rng.gen();
                    let guess: bool = rng.gen();
                    if polarity == guess {
                        1
                    } else {
                        -1
                    }
                })
                .sum(),
        };
        wins += (tau..=hi).contains(&score) as u64;
    }
    wins
}
