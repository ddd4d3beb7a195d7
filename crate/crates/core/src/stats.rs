//! Advantage estimation, exact tails, concentration bounds and the two
//! event-probability lemmas used to turn tails into advantage bounds.

use std::collections::HashMap;
use std::hash::Hash;
use std::thread;

use num_bigint::BigInt;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::engine::exact::{enumerate, enumerate_pinned, Distribution};
use crate::engine::{Experiment, MonteCarlo, RunOptions, System, View};
use crate::error::{Error, Result};

/// Confidence level of every reported interval.
pub const CONFIDENCE: f64 = 0.99;
pub const MIN_TRIALS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    MonteCarlo,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::MonteCarlo => "montecarlo",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntervalKind {
    #[default]
    Hoeffding,
    Wilson,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdvantageReport {
    pub mode: Mode,
    pub value: f64,
    /// Exact value as a reduced fraction, in exact mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub seed: Option<u64>,
}

impl AdvantageReport {
    pub fn exact(v: &BigRational, leaves: u64) -> Self {
        let f = to_f64(v);
        AdvantageReport {
            mode: Mode::Exact,
            value: f,
            exact: Some(v.to_string()),
            ci_low: f,
            ci_high: f,
            trials: leaves,
            seed: None,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }
}

pub fn to_f64(v: &BigRational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

fn hoeffding_half_width(trials: u64, sides: f64) -> f64 {
    ((2.0 * sides / (1.0 - CONFIDENCE)).ln() / (2.0 * trials as f64)).sqrt()
}

fn wilson(ones: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = ones as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

// two-sided normal quantiles used by Wilson intervals
const Z_99: f64 = 2.575_829_303_548_901;
const Z_995: f64 = 2.807_033_768_343_811;

fn check_trials(trials: u64) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::Input(format!("at least {MIN_TRIALS} trials are needed, got {trials}")));
    }
    Ok(())
}

/// Seeded count of runs where the distinguisher outputs 1. Trials are split
/// across threads by contiguous ranges; the result does not depend on the split.
pub fn count_ones(exp: &Experiment, seed: u64, trials: u64) -> Result<u64> {
    let workers = thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(16) as u64;
    if workers <= 1 || trials < 1000 {
        return crate::engine::count_ones(exp, seed, trials);
    }
    let chunk = trials.div_ceil(workers);
    thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let lo = w * chunk;
                let hi = ((w + 1) * chunk).min(trials);
                s.spawn(move || count_range(exp, seed, lo, hi))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).sum()
    })
}

fn count_range(exp: &Experiment, seed: u64, lo: u64, hi: u64) -> Result<u64> {
    let mut rng = MonteCarlo::new(seed, lo);
    let mut runner = crate::engine::Runner::new(exp);
    let mut opts = RunOptions::default();
    let mut ones = 0;
    for trial in lo..hi {
        rng.set_trial(trial);
        opts.trial = trial;
        if runner.run(&mut rng, &opts)?.decision {
            ones += 1;
        }
    }
    Ok(ones)
}

/// Monte Carlo estimate of `P[D outputs 1]` with a two-sided 99% interval.
pub fn estimate_probability(exp: &Experiment, trials: u64, seed: u64, kind: IntervalKind) -> Result<AdvantageReport> {
    check_trials(trials)?;
    let ones = count_ones(exp, seed, trials)?;
    let p = ones as f64 / trials as f64;
    let (lo, hi) = match kind {
        IntervalKind::Hoeffding => {
            let e = hoeffding_half_width(trials, 1.0);
            ((p - e).max(0.0), (p + e).min(1.0))
        }
        IntervalKind::Wilson => wilson(ones, trials, Z_99),
    };
    Ok(AdvantageReport {
        mode: Mode::MonteCarlo,
        value: p,
        exact: None,
        ci_low: lo.min(p),
        ci_high: hi.max(p),
        trials,
        seed: Some(seed),
    })
}

/// `|p̂_R − p̂_S|` from two independent seeded runs of `trials` each.
pub fn estimate_advantage(d: &System, r: &System, s: &System, trials: u64, seed: u64) -> Result<AdvantageReport> {
    estimate_advantage_with(d, r, s, trials, seed, IntervalKind::Hoeffding)
}

pub fn estimate_advantage_with(
    d: &System,
    r: &System,
    s: &System,
    trials: u64,
    seed: u64,
    kind: IntervalKind,
) -> Result<AdvantageReport> {
    let er = Experiment::new(r.clone(), d.clone())?;
    let es = Experiment::new(s.clone(), d.clone())?;
    estimate_difference(&er, &es, trials, seed, kind)
}

/// Interval for the difference of two proportions: each gets half the error
/// budget.
pub fn estimate_difference(
    er: &Experiment,
    es: &Experiment,
    trials: u64,
    seed: u64,
    kind: IntervalKind,
) -> Result<AdvantageReport> {
    check_trials(trials)?;
    let a = count_ones(er, seed, trials)?;
    let b = count_ones(es, seed, trials)?;
    let (pa, pb) = (a as f64 / trials as f64, b as f64 / trials as f64);
    let ((la, ha), (lb, hb)) = match kind {
        IntervalKind::Hoeffding => {
            let e = hoeffding_half_width(trials, 2.0);
            ((pa - e, pa + e), (pb - e, pb + e))
        }
        IntervalKind::Wilson => (wilson(a, trials, Z_995), wilson(b, trials, Z_995)),
    };
    let diff_lo = la - hb;
    let diff_hi = ha - lb;
    let value = (pa - pb).abs();
    let (lo, hi) = if diff_lo >= 0.0 {
        (diff_lo, diff_hi)
    } else if diff_hi <= 0.0 {
        (-diff_hi, -diff_lo)
    } else {
        (0.0, diff_hi.max(-diff_lo))
    };
    Ok(AdvantageReport {
        mode: Mode::MonteCarlo,
        value,
        exact: None,
        ci_low: lo.clamp(0.0, 1.0).min(value),
        ci_high: hi.clamp(0.0, 1.0).max(value),
        trials,
        seed: Some(seed),
    })
}

/// Exact `P[D outputs 1]` by enumeration.
pub fn exact_probability(exp: &Experiment, limit: u64) -> Result<(BigRational, u64)> {
    exact_probability_pinned(exp, limit, &[])
}

/// [`exact_probability`] with the draws of the named boxes pinned.
pub fn exact_probability_pinned(exp: &Experiment, limit: u64, pinned: &[String]) -> Result<(BigRational, u64)> {
    let d = enumerate_pinned(exp, limit, &RunOptions::default(), pinned, |o| o.decision)?;
    Ok((d.prob(&true), d.leaves))
}

/// Exact `|P[D[R]=1] − P[D[S]=1]|`.
pub fn exact_advantage(d: &System, r: &System, s: &System, limit: u64) -> Result<AdvantageReport> {
    let (pr, lr) = exact_probability(&Experiment::new(r.clone(), d.clone())?, limit)?;
    let (ps, ls) = exact_probability(&Experiment::new(s.clone(), d.clone())?, limit)?;
    Ok(AdvantageReport::exact(&(pr - ps).abs(), lr + ls))
}

/// Exact distribution of what the distinguisher receives.
pub fn view_distribution(exp: &Experiment, limit: u64) -> Result<Distribution<View>> {
    enumerate(exp, limit, &RunOptions::viewing(), |o| o.view.clone().unwrap_or_default())
}

/// Total variation distance: the best advantage of any decision rule on
/// these two outcome distributions.
pub fn total_variation<K: Eq + Hash + Clone>(a: &HashMap<K, BigRational>, b: &HashMap<K, BigRational>) -> BigRational {
    let mut sum = BigRational::zero();
    for (k, p) in a {
        let q = b.get(k).cloned().unwrap_or_else(BigRational::zero);
        sum += (p - q).abs();
    }
    for (k, q) in b {
        if !a.contains_key(k) {
            sum += q.clone();
        }
    }
    sum / BigRational::from_integer(2.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// `P[X < k]`
    Lt(u64),
    /// `P[X >= k]`
    Ge(u64),
}

pub(crate) fn ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact binomial tail with rational `p`.
pub fn binomial_tail(n: u64, p: &BigRational, tail: Tail) -> Result<BigRational> {
    let k = match tail {
        Tail::Lt(k) | Tail::Ge(k) => k,
    };
    if k > n + 1 {
        return Err(Error::Input(format!("tail threshold {k} exceeds n + 1 = {}", n + 1)));
    }
    if p.is_negative() || *p > BigRational::one() {
        return Err(Error::Input(format!("probability {p} outside [0,1]")));
    }
    let q = BigRational::one() - p;
    let term = |j: u64| -> BigRational {
        let c = binomial(BigInt::from(n), BigInt::from(j));
        BigRational::from_integer(c) * pow(p, j) * pow(&q, n - j)
    };
    let below: BigRational = (0..k.min(n + 1)).map(term).fold(BigRational::zero(), |a, b| a + b);
    Ok(match tail {
        Tail::Lt(_) => below,
        Tail::Ge(_) => BigRational::one() - below,
    })
}

fn pow(x: &BigRational, e: u64) -> BigRational {
    num_traits::pow(x.clone(), e as usize)
}

pub fn half() -> BigRational {
    ratio(1, 2)
}

/// `P[H = z]` for `h` draws without replacement from `n` objects, `x` marked.
pub fn hypergeometric_pmf(n: u64, x: u64, h: u64, z: u64) -> BigRational {
    if x > n || h > n || z > x || z > h || h - z > n - x {
        return BigRational::zero();
    }
    let c = |a: u64, b: u64| binomial(BigInt::from(a), BigInt::from(b));
    BigRational::new(c(x, z) * c(n - x, h - z), c(n, h))
}

/// Exact `P[H <= E[H] - t h]` and `P[H >= E[H] + t h]`.
pub fn hypergeometric_tails(n: u64, x: u64, h: u64, t: &BigRational) -> (BigRational, BigRational) {
    let mean = ratio(x * h, n.max(1));
    let shift = t * BigRational::from_integer(BigInt::from(h));
    let lo = &mean - &shift;
    let hi = &mean + &shift;
    let mut low = BigRational::zero();
    let mut high = BigRational::zero();
    for z in 0..=h.min(x) {
        let zr = BigRational::from_integer(BigInt::from(z));
        let p = hypergeometric_pmf(n, x, h, z);
        if zr <= lo {
            low += &p;
        }
        if zr >= hi {
            high += &p;
        }
    }
    (low, high)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSide {
    Upper,
    Lower,
}

/// `e^{-δ²μ/3}` bounds `P[X >= (1+δ)μ]`; `e^{-δ²μ/2}` bounds `P[X <= (1-δ)μ]`.
pub fn chernoff_upper(mu: f64, delta: f64, side: TailSide) -> Result<f64> {
    if !(mu > 0.0) || !(delta >= 0.0) || !mu.is_finite() || !delta.is_finite() {
        return Err(Error::Input(format!("need mu > 0 and delta >= 0, got mu={mu}, delta={delta}")));
    }
    let d = match side {
        TailSide::Upper => 3.0,
        TailSide::Lower => 2.0,
    };
    Ok((-delta * delta * mu / d).exp())
}

/// `e^{-2t²h}`, valid for `0 < t < x/n`.
pub fn hoeffding_hypergeometric(n: u64, x: u64, h: u64, t: f64) -> Result<f64> {
    if n == 0 || x > n || h > n {
        return Err(Error::Input(format!("need 0 <= x, h <= n with n > 0, got n={n}, x={x}, h={h}")));
    }
    if !(t > 0.0 && t < x as f64 / n as f64) {
        return Err(Error::Input(format!("need 0 < t < x/n = {}, got t={t}", x as f64 / n as f64)));
    }
    Ok((-2.0 * t * t * h as f64).exp())
}

/// Probabilities of the eight atoms of three events. Atom `i` has
/// `X = i & 1`, `Y = i >> 1 & 1`, `Z = i >> 2 & 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable(pub [BigRational; 8]);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaCheck {
    Holds,
    Violated,
    NotApplicable,
}

impl JointTable {
    pub fn from_weights(w: [u64; 8]) -> Result<JointTable> {
        let total: u64 = w.iter().sum();
        if total == 0 {
            return Err(Error::Input("joint table has zero mass".into()));
        }
        Ok(JointTable(w.map(|x| ratio(x, total))))
    }

    pub fn is_distribution(&self) -> bool {
        self.0.iter().all(|p| !p.is_negative()) && self.sum(|_| true) == BigRational::one()
    }

    fn sum(&self, f: impl Fn(usize) -> bool) -> BigRational {
        (0..8).filter(|&i| f(i)).map(|i| self.0[i].clone()).fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn p(&self, f: impl Fn(bool, bool, bool) -> bool) -> BigRational {
        self.sum(|i| f(i & 1 == 1, i & 2 == 2, i & 4 == 4))
    }
}

/// If `P(X ∧ ¬Z) = P(Y ∧ ¬Z)` then `|P(X) − P(Y)| <= P(Z)`.
pub fn difference_lemma(t: &JointTable) -> LemmaCheck {
    if !t.is_distribution() || t.p(|x, _, z| x && !z) != t.p(|_, y, z| y && !z) {
        return LemmaCheck::NotApplicable;
    }
    let gap = (t.p(|x, _, _| x) - t.p(|_, y, _| y)).abs();
    if gap <= t.p(|_, _, z| z) {
        LemmaCheck::Holds
    } else {
        LemmaCheck::Violated
    }
}

/// If `Z ⊆ X` and `X ∩ Y = ∅` then `|P(Z|X) − P(Z|Y)| >= P(Z)`.
pub fn separation_lemma(t: &JointTable) -> LemmaCheck {
    let px = t.p(|x, _, _| x);
    let py = t.p(|_, y, _| y);
    if !t.is_distribution()
        || !t.p(|x, _, z| z && !x).is_zero()
        || !t.p(|x, y, _| x && y).is_zero()
        || px.is_zero()
        || py.is_zero()
    {
        return LemmaCheck::NotApplicable;
    }
    let zx = t.p(|x, _, z| x && z) / px;
    let zy = t.p(|_, y, z| y && z) / py;
    if (zx - zy).abs() >= t.p(|_, _, z| z) {
        LemmaCheck::Holds
    } else {
        LemmaCheck::Violated
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: u64, d: u64) -> BigRational {
        ratio(n, d)
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial_tail(3, &half(), Tail::Lt(1)).unwrap(), r(1, 8));
        assert_eq!(binomial_tail(9, &r(1, 3), Tail::Ge(0)).unwrap(), BigRational::one());
        // 1 + 12 + 66 + 220
        assert_eq!(binomial_tail(12, &half(), Tail::Lt(4)).unwrap(), r(299, 4096));
        assert!(binomial_tail(3, &half(), Tail::Lt(5)).is_err());
        assert_eq!(binomial_tail(3, &half(), Tail::Lt(4)).unwrap(), BigRational::one());
    }

    #[test]
    fn binomial_denominators_are_powers_of_the_probability_denominator() {
        for n in 1..20u64 {
            let v = binomial_tail(n, &r(1, 3), Tail::Lt(n / 2)).unwrap();
            let mut d = v.denom().clone();
            while (&d % BigInt::from(3)).is_zero() {
                d /= 3;
            }
            assert!(d.is_one(), "n={n}: {v}");
        }
    }

    #[test]
    fn chernoff_examples() {
        assert_eq!(chernoff_upper(5.0, 0.0, TailSide::Upper).unwrap(), 1.0);
        assert_eq!(chernoff_upper(6.0, 1.0, TailSide::Upper).unwrap(), (-2.0f64).exp());
        assert!(chernoff_upper(0.0, 1.0, TailSide::Lower).is_err());
    }

    #[test]
    fn hoeffding_examples() {
        assert_eq!(hoeffding_hypergeometric(24, 12, 12, 0.25).unwrap(), (-1.5f64).exp());
        assert!(hoeffding_hypergeometric(24, 12, 12, 1e-9).unwrap() > 0.999_999);
        assert!(hoeffding_hypergeometric(24, 12, 12, 0.5).is_err());
        assert!(hoeffding_hypergeometric(24, 30, 12, 0.1).is_err());
    }

    #[test]
    fn hypergeometric_pmf_sums_to_one() {
        for (n, x, h) in [(12, 6, 6), (24, 5, 11), (7, 0, 3), (7, 7, 7)] {
            let s = (0..=h).map(|z| hypergeometric_pmf(n, x, h, z)).fold(BigRational::zero(), |a, b| a + b);
            assert_eq!(s, BigRational::one());
        }
    }

    #[test]
    fn lemma_examples() {
        // Z impossible, X = Y
        let t = JointTable::from_weights([1, 0, 0, 3, 0, 0, 0, 0]).unwrap();
        assert_eq!(difference_lemma(&t), LemmaCheck::Holds);
        // P(Z) = 0 under the separation hypotheses
        let t = JointTable::from_weights([2, 1, 1, 0, 0, 0, 0, 0]).unwrap();
        assert_eq!(separation_lemma(&t), LemmaCheck::Holds);
        let t = JointTable::from_weights([1, 1, 1, 1, 1, 1, 1, 1]).unwrap();
        assert_eq!(separation_lemma(&t), LemmaCheck::NotApplicable);
    }

    #[test]
    fn total_variation_of_coins() {
        let a: HashMap<u8, BigRational> = [(0, r(1, 2)), (1, r(1, 2))].into();
        let b: HashMap<u8, BigRational> = [(0, r(1, 4)), (1, r(3, 4))].into();
        assert_eq!(total_variation(&a, &b), r(1, 4));
        let c: HashMap<u8, BigRational> = [(2, BigRational::one())].into();
        assert_eq!(total_variation(&a, &c), BigRational::one());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn difference_lemma_never_fails(shared in prop::array::uniform4(0u64..50), z in prop::array::uniform4(0u64..50), only in 0u64..50) {
            // force P(X ∧ ¬Z) = P(Y ∧ ¬Z): atoms x¬y¬z and ¬xy¬z get the same weight
            let w = [shared[0], only, only, shared[1], z[0], z[1], z[2], z[3]];
            prop_assume!(w.iter().sum::<u64>() > 0);
            let t = JointTable::from_weights(w).unwrap();
            prop_assert_eq!(difference_lemma(&t), LemmaCheck::Holds);
        }

        #[test]
        fn separation_lemma_never_fails(w in prop::array::uniform8(0u64..50)) {
            // keep only atoms with Z ⊆ X and X ∩ Y = ∅
            let mut w = w;
            for i in 0..8 {
                let (x, y, z) = (i & 1 == 1, i & 2 == 2, i & 4 == 4);
                if (z && !x) || (x && y) {
                    w[i] = 0;
                }
            }
            prop_assume!(w.iter().sum::<u64>() > 0);
            let t = JointTable::from_weights(w).unwrap();
            prop_assert_ne!(separation_lemma(&t), LemmaCheck::Violated);
        }

        #[test]
        fn wilson_and_hoeffding_contain_the_estimate(ones in 0u64..1000, extra in 0u64..1000) {
            let trials = ones + extra + MIN_TRIALS;
            let (lo, hi) = wilson(ones, trials, Z_99);
            let p = ones as f64 / trials as f64;
            prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
        }
    }
}
