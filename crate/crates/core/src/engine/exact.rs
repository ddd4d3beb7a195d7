//! Exact enumeration of every random branch of an experiment.
//!
//! Each run draws through an [`ExactSource`] that replays a prefix of branch
//! choices and takes the first branch afterwards. Depth-first backtracking over
//! the recorded arities visits every leaf once, with its exact probability.

use std::collections::HashMap;
use std::hash::Hash;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::run::{Experiment, RandomSource, RunOptions, RunOutcome, Runner};
use crate::error::{Error, Result};

/// Default cap on enumerated leaves.
pub const DEFAULT_LIMIT: u64 = 1 << 24;

pub struct ExactSource {
    pinned: Vec<bool>,
    prefix: Vec<u32>,
    taken: Vec<u32>,
    arity: Vec<u32>,
    num: u128,
    den: u128,
    overflow: bool,
}

impl ExactSource {
    fn new(prefix: Vec<u32>, pinned: Vec<bool>) -> Self {
        ExactSource { pinned, prefix, taken: Vec::new(), arity: Vec::new(), num: 1, den: 1, overflow: false }
    }

    fn is_pinned(&self, block: usize) -> bool {
        self.pinned.get(block).copied().unwrap_or(false)
    }

    fn next(&mut self, arity: u64) -> u32 {
        if arity > u32::MAX as u64 {
            self.overflow = true;
            return 0;
        }
        let pos = self.taken.len();
        let c = self.prefix.get(pos).copied().unwrap_or(0).min(arity as u32 - 1);
        self.taken.push(c);
        self.arity.push(arity as u32);
        c
    }

    fn scale(&mut self, num: u64, den: u64) {
        match (self.num.checked_mul(num as u128), self.den.checked_mul(den as u128)) {
            (Some(n), Some(d)) => {
                let g = gcd(n, d);
                self.num = n / g;
                self.den = d / g;
            }
            _ => self.overflow = true,
        }
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl RandomSource for ExactSource {
    fn uniform(&mut self, block: usize, n: u64) -> u64 {
        if n <= 1 || self.is_pinned(block) {
            return 0;
        }
        let c = self.next(n);
        self.scale(1, n);
        c as u64
    }

    fn weighted(&mut self, block: usize, weights: &[u64]) -> usize {
        let live = if self.is_pinned(block) { 1 } else { weights.iter().filter(|&&w| w > 0).count() };
        let total: u64 = weights.iter().sum();
        let pick = if live <= 1 { 0 } else { self.next(live as u64) as usize };
        let (i, &w) = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0)
            .nth(pick)
            .expect("at least one positive weight");
        if live > 1 {
            self.scale(w, total);
        }
        i
    }
}

/// Outcome distribution keyed by a function of each run.
#[derive(Debug, Clone)]
pub struct Distribution<K> {
    pub outcomes: HashMap<K, BigRational>,
    pub leaves: u64,
}

impl<K: Eq + Hash> Distribution<K> {
    pub fn prob(&self, k: &K) -> BigRational {
        self.outcomes.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn total(&self) -> BigRational {
        self.outcomes.values().fold(BigRational::zero(), |a, b| a + b)
    }
}

/// Enumerates every branch of `exp`, grouping leaf probabilities by `key`.
pub fn enumerate<K, F>(exp: &Experiment, limit: u64, opts: &RunOptions, key: F) -> Result<Distribution<K>>
where
    K: Eq + Hash,
    F: FnMut(&RunOutcome) -> K,
{
    enumerate_pinned(exp, limit, opts, &[], key)
}

/// Like [`enumerate`], but every draw made by a box named in `pinned` takes
/// its first outcome with probability one. Only sound when the key is known
/// to be invariant under those draws (a symmetry reduction).
pub fn enumerate_pinned<K, F>(
    exp: &Experiment,
    limit: u64,
    opts: &RunOptions,
    pinned: &[String],
    mut key: F,
) -> Result<Distribution<K>>
where
    K: Eq + Hash,
    F: FnMut(&RunOutcome) -> K,
{
    for name in pinned {
        if !exp.metas.iter().any(|m| m.name == *name) {
            return Err(Error::Usage(format!("cannot pin unknown box {name:?}")));
        }
    }
    let pins: Vec<bool> = exp.metas.iter().map(|m| pinned.contains(&m.name)).collect();
    let mut runner = Runner::new(exp);
    // per key: (denominator, numerator sum) pairs
    let mut acc: HashMap<K, Vec<(u128, u128)>> = HashMap::new();
    let mut prefix = Vec::new();
    let mut leaves: u64 = 0;
    loop {
        let mut src = ExactSource::new(prefix, pins.clone());
        let out = runner.run(&mut src, opts)?;
        if src.overflow {
            return Err(Error::Size("branch probability exceeds exact arithmetic range".into()));
        }
        leaves += 1;
        if leaves == 1 {
            let est = src.arity.iter().fold(1u128, |a, &n| a.saturating_mul(n as u128));
            if est > limit as u128 {
                return Err(Error::Size(format!(
                    "about {est} branches to enumerate, above the limit of {limit}"
                )));
            }
        }
        if leaves > limit {
            return Err(Error::Size(format!("more than {limit} branches to enumerate")));
        }
        let slot = acc.entry(key(&out)).or_default();
        match slot.iter_mut().find(|(d, _)| *d == src.den) {
            Some((_, n)) => *n += src.num,
            None => slot.push((src.den, src.num)),
        }
        let mut i = src.taken.len();
        let mut next = None;
        while i > 0 {
            i -= 1;
            if src.taken[i] + 1 < src.arity[i] {
                let mut p = src.taken[..i].to_vec();
                p.push(src.taken[i] + 1);
                next = Some(p);
                break;
            }
        }
        match next {
            Some(p) => prefix = p,
            None => break,
        }
    }
    let outcomes = acc
        .into_iter()
        .map(|(k, parts)| {
            let p = parts.into_iter().fold(BigRational::zero(), |a, (d, n)| {
                a + BigRational::new(BigInt::from(n), BigInt::from(d))
            });
            (k, p)
        })
        .collect();
    Ok(Distribution { outcomes, leaves })
}

/// Exact probability that the distinguisher outputs 1.
pub fn probability_of_one(exp: &Experiment, limit: u64) -> Result<BigRational> {
    let d = enumerate(exp, limit, &RunOptions::default(), |o| o.decision)?;
    Ok(d.prob(&true))
}
