//! Bernoulli-factory combinators, up to the division factory used by the
//! mechanism frameworks to flip `(c - eps) / p*` coins exactly.
//!
//! Toss accounting convention: the counter reports samples consumed from
//! coins, transitively down to leaf coins (a constant coin counts one toss
//! per sample, and the scaling gate is itself a constant coin). Bare
//! selector draws used for routing (the fair coin inside averaging and
//! division) are not coin tosses.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BernoulliError {
    #[error("probability {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("margin delta must be positive (got {0})")]
    BadDelta(f64),
}

/// A sampling procedure returning {0, 1} with a toss counter and, for
/// known-constant coins, a declared bias.
pub trait Coin {
    fn flip(&mut self, rng: &mut ChaCha8Rng) -> bool;
    /// Total leaf tosses consumed so far, transitively through combinators.
    fn tosses(&self) -> u64;
    /// Declared bias, when the coin's bias is known in closed form.
    fn bias(&self) -> Option<f64> {
        None
    }
}

pub type BoxCoin<'a> = Box<dyn Coin + 'a>;

/// Exact `p`-coin drawn from the randomness stream; one toss per sample.
pub struct ConstantCoin {
    p: f64,
    tosses: u64,
}

/// Build a constant coin; errors outside [0, 1].
pub fn constant_coin(p: f64) -> Result<ConstantCoin, BernoulliError> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(BernoulliError::OutOfRange(p));
    }
    Ok(ConstantCoin { p, tosses: 0 })
}

impl Coin for ConstantCoin {
    fn flip(&mut self, rng: &mut ChaCha8Rng) -> bool {
        self.tosses += 1;
        rng.gen::<f64>() < self.p
    }
    fn tosses(&self) -> u64 {
        self.tosses
    }
    fn bias(&self) -> Option<f64> {
        Some(self.p)
    }
}

/// `1 - p`: one sample of the inner coin.
pub struct NegateCoin<'a> {
    inner: BoxCoin<'a>,
}

pub fn negate(inner: BoxCoin<'_>) -> NegateCoin<'_> {
    NegateCoin { inner }
}

impl Coin for NegateCoin<'_> {
    fn flip(&mut self, rng: &mut ChaCha8Rng) -> bool {
        !self.inner.flip(rng)
    }
    fn tosses(&self) -> u64 {
        self.inner.tosses()
    }
    fn bias(&self) -> Option<f64> {
        self.inner.bias().map(|p| 1.0 - p)
    }
}

/// `lambda * p`: the gate is a constant coin, short-circuiting the inner
/// sample when it fails, so at most two tosses per sample.
pub struct ScaleCoin<'a> {
    gate: ConstantCoin,
    inner: BoxCoin<'a>,
}

pub fn scale(inner: BoxCoin<'_>, lambda: f64) -> Result<ScaleCoin<'_>, BernoulliError> {
    Ok(ScaleCoin { gate: constant_coin(lambda)?, inner })
}

impl Coin for ScaleCoin<'_> {
    fn flip(&mut self, rng: &mut ChaCha8Rng) -> bool {
        self.gate.flip(rng) && self.inner.flip(rng)
    }
    fn tosses(&self) -> u64 {
        self.gate.tosses() + self.inner.tosses()
    }
    fn bias(&self) -> Option<f64> {
        self.inner.bias().map(|p| self.gate.p * p)
    }
}

/// `(p0 + p1) / 2`: route a fair selector to one of the two coins; one
/// underlying sample per flip.
pub struct AverageCoin<'a> {
    c0: BoxCoin<'a>,
    c1: BoxCoin<'a>,
}

pub fn average<'a>(c0: BoxCoin<'a>, c1: BoxCoin<'a>) -> AverageCoin<'a> {
    AverageCoin { c0, c1 }
}

impl Coin for AverageCoin<'_> {
    fn flip(&mut self, rng: &mut ChaCha8Rng) -> bool {
        if rng.gen_bool(0.5) {
            self.c1.flip(rng)
        } else {
            self.c0.flip(rng)
        }
    }
    fn tosses(&self) -> u64 {
        self.c0.tosses() + self.c1.tosses()
    }
    fn bias(&self) -> Option<f64> {
        match (self.c0.bias(), self.c1.bias()) {
            (Some(a), Some(b)) => Some(0.5 * (a + b)),
            _ => None,
        }
    }
}

/// One-sided truncation residual of the doubling construction.
const DOUBLE_RESIDUAL: f64 = 1e-12;

/// Flip count of the doubling construction at margin `delta`.
fn double_horizon(delta: f64) -> u64 {
    let d = delta.clamp(1e-6, 0.5);
    (((2.0 / DOUBLE_RESIDUAL).ln() / (2.0 * d * d)).ceil() as u64).max(8)
}

/// One `2p` sample from a black-box `p`-coin with `p <= 1/2 - delta`.
///
/// Bernstein construction at a fixed horizon `n*`: flip the base coin `n*`
/// times, observe `S` successes, and return a Bernoulli draw with parameter
/// `min(2 S / n*, 1)`. The output bias is exactly
/// `2p - E[(2 S / n* - 1)+]`, and the deducted term is at most
/// `2 exp(-2 n* delta^2) <= 1e-12` on the promised domain (Hoeffding), far
/// below the resolution of any statistical contract test and below the f64
/// representation error of the coin biases themselves. Tosses per sample are
/// `n* = O(log(1/residual) / delta^2)`, deterministic.
fn double_flip<F: FnMut(&mut ChaCha8Rng) -> bool>(
    base: &mut F,
    delta: f64,
    rng: &mut ChaCha8Rng,
) -> bool {
    let n = double_horizon(delta);
    let mut successes = 0u64;
    for _ in 0..n {
        if base(rng) {
            successes += 1;
        }
    }
    let q = (2.0 * successes as f64 / n as f64).min(1.0);
    rng.gen::<f64>() < q
}

/// `2p` for `p <= 1/2 - delta`.
pub struct DoubleCoin<'a> {
    inner: BoxCoin<'a>,
    delta: f64,
}

pub fn double(inner: BoxCoin<'_>, delta: f64) -> Result<DoubleCoin<'_>, BernoulliError> {
    if delta <= 0.0 || !delta.is_finite() {
        return Err(BernoulliError::BadDelta(delta));
    }
    Ok(DoubleCoin { inner, delta })
}

impl Coin for DoubleCoin<'_> {
    fn flip(&mut self, rng: &mut ChaCha8Rng) -> bool {
        let inner = &mut self.inner;
        double_flip(&mut |r| inner.flip(r), self.delta, rng)
    }
    fn tosses(&self) -> u64 {
        self.inner.tosses()
    }
    fn bias(&self) -> Option<f64> {
        self.inner.bias().map(|p| 2.0 * p)
    }
}

/// `p0 + p1` for `p0 + p1 <= 1 - delta`: average the coins, then double
/// with margin `delta / 2`.
pub struct AddCoin<'a> {
    avg: AverageCoin<'a>,
    delta: f64,
}

pub fn add<'a>(c0: BoxCoin<'a>, c1: BoxCoin<'a>, delta: f64) -> Result<AddCoin<'a>, BernoulliError> {
    if delta <= 0.0 || !delta.is_finite() {
        return Err(BernoulliError::BadDelta(delta));
    }
    Ok(AddCoin { avg: average(c0, c1), delta })
}

impl Coin for AddCoin<'_> {
    fn flip(&mut self, rng: &mut ChaCha8Rng) -> bool {
        let avg = &mut self.avg;
        double_flip(&mut |r| avg.flip(r), self.delta / 2.0, rng)
    }
    fn tosses(&self) -> u64 {
        self.avg.tosses()
    }
    fn bias(&self) -> Option<f64> {
        self.avg.bias().map(|a| 2.0 * a)
    }
}

/// `p1 - p0` for `p1 - p0 >= delta`: negate, add, negate.
pub struct SubtractCoin<'a> {
    // average of (1 - p1)-coin and p0-coin; doubling it yields 1 - (p1 - p0).
    avg: AverageCoin<'a>,
    delta: f64,
}

pub fn subtract<'a>(
    c0: BoxCoin<'a>,
    c1: BoxCoin<'a>,
    delta: f64,
) -> Result<SubtractCoin<'a>, BernoulliError> {
    if delta <= 0.0 || !delta.is_finite() {
        return Err(BernoulliError::BadDelta(delta));
    }
    Ok(SubtractCoin { avg: average(Box::new(negate(c1)), c0), delta })
}

impl Coin for SubtractCoin<'_> {
    fn flip(&mut self, rng: &mut ChaCha8Rng) -> bool {
        let avg = &mut self.avg;
        !double_flip(&mut |r| avg.flip(r), self.delta / 2.0, rng)
    }
    fn tosses(&self) -> u64 {
        self.avg.tosses()
    }
    fn bias(&self) -> Option<f64> {
        self.avg.bias().map(|a| 1.0 - 2.0 * a)
    }
}

/// `p0 / p1` for `p1 - p0 >= delta`, by the division loop: flip a fair
/// selector; on tails sample the `p0`-coin and return 1 on success, on heads
/// sample the `(p1 - p0)`-subtraction coin and return 0 on success;
/// otherwise run another round.
pub struct DivideCoin<'a> {
    c0: BoxCoin<'a>,
    c1: BoxCoin<'a>,
    delta: f64,
    /// Rounds consumed by the most recent flip.
    pub last_rounds: u64,
}

pub fn divide<'a>(
    c0: BoxCoin<'a>,
    c1: BoxCoin<'a>,
    delta: f64,
) -> Result<DivideCoin<'a>, BernoulliError> {
    if delta <= 0.0 || !delta.is_finite() {
        return Err(BernoulliError::BadDelta(delta));
    }
    Ok(DivideCoin { c0, c1, delta, last_rounds: 0 })
}

impl DivideCoin<'_> {
    /// One sample of the `(p1 - p0)`-coin, composed in place over the two
    /// children (negate(add(negate(p1), p0)) with doubling margin delta/2).
    fn flip_difference(&mut self, rng: &mut ChaCha8Rng) -> bool {
        let (c0, c1) = (&mut self.c0, &mut self.c1);
        let delta = self.delta;
        !double_flip(
            &mut |r: &mut ChaCha8Rng| {
                if r.gen_bool(0.5) {
                    !c1.flip(r)
                } else {
                    c0.flip(r)
                }
            },
            delta / 2.0,
            rng,
        )
    }
}

impl Coin for DivideCoin<'_> {
    fn flip(&mut self, rng: &mut ChaCha8Rng) -> bool {
        self.last_rounds = 0;
        loop {
            self.last_rounds += 1;
            if !rng.gen_bool(0.5) {
                if self.c0.flip(rng) {
                    return true;
                }
            } else if self.flip_difference(rng) {
                return false;
            }
        }
    }
    fn tosses(&self) -> u64 {
        self.c0.tosses() + self.c1.tosses()
    }
    fn bias(&self) -> Option<f64> {
        match (self.c0.bias(), self.c1.bias()) {
            (Some(a), Some(b)) if b > 0.0 => Some(a / b),
            _ => None,
        }
    }
}
