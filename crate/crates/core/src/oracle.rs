//! Ground truth by brute force.
//!
//! Enumerators walk every outcome of a small experiment and sum
//! `Pr(outcome) · f(x)` directly. None of them touch the Stirling or
//! surjection tables, so agreement with the moment engine is evidence
//! rather than a restatement. The Monte Carlo sampler covers parameters too
//! large to enumerate.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::combinat::{choose, compensated_sum, Rational, Scalar};
use crate::distributions::{DistSpec, MomentType};

/// Identifier of the Monte Carlo generator, recorded with every sample run.
pub const RNG_ALGORITHM: &str = "chacha8";

pub const MAX_INDEPENDENT_N: usize = 20;
pub const MAX_MATCHING_N: usize = 8;
pub const MAX_OUTCOMES: u64 = 1_000_000;
pub const MIN_SAMPLES: u64 = 1_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("enumeration needs {required} outcomes, over the limit of {limit}")]
    SubsetExplosion { required: u128, limit: u128 },
    #[error("{0} has unbounded support")]
    InfiniteSupport(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, OracleError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    Enumeration,
    PmfSum,
    MonteCarlo,
}

impl OracleMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleMethod::Enumeration => "enumeration",
            OracleMethod::PmfSum => "pmf_sum",
            OracleMethod::MonteCarlo => "monte_carlo",
        }
    }
}

/// Moments of orders `0..=kmax` in all three families.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub method: OracleMethod,
    pub raw: Vec<Scalar>,
    pub central: Vec<Scalar>,
    pub factorial: Vec<Scalar>,
    pub sample_count: Option<u64>,
    /// Standard errors of the raw, central and factorial sample moments.
    pub stderr: Option<StdErrors>,
    pub rng: Option<&'static str>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StdErrors {
    pub raw: Vec<f64>,
    pub central: Vec<f64>,
    pub factorial: Vec<f64>,
}

impl StdErrors {
    pub fn get(&self, kind: MomentType) -> &[f64] {
        match kind {
            MomentType::Raw => &self.raw,
            MomentType::Central => &self.central,
            MomentType::Factorial => &self.factorial,
        }
    }
}

impl OracleResult {
    pub fn values(&self, kind: MomentType) -> &[Scalar] {
        match kind {
            MomentType::Raw => &self.raw,
            MomentType::Central => &self.central,
            MomentType::Factorial => &self.factorial,
        }
    }

    pub fn get(&self, kind: MomentType, k: usize) -> Option<&Scalar> {
        self.values(kind).get(k)
    }

    pub fn kmax(&self) -> usize {
        self.raw.len().saturating_sub(1)
    }

    /// Probability mass collected by an exact enumeration, keyed by value.
    fn from_pmf(method: OracleMethod, pmf: &BTreeMap<u64, Scalar>, kmax: usize) -> Self {
        let power = |x: &Scalar, k: usize| (0..k).fold(Scalar::one(), |acc, _| acc * x);
        let weighted = |f: &dyn Fn(u64) -> Scalar| {
            crate::combinat::sum_mixed(pmf.iter().map(|(&x, p)| f(x) * p))
        };
        let mean = weighted(&|x| Scalar::from(x as i64));
        let raw = (0..=kmax)
            .map(|k| weighted(&|x| power(&Scalar::from(x as i64), k)))
            .collect();
        let central = (0..=kmax)
            .map(|k| weighted(&|x| power(&(Scalar::from(x as i64) - &mean), k)))
            .collect();
        let factorial = (0..=kmax)
            .map(|k| {
                weighted(&|x| {
                    let falling: i64 = (0..k as i64).map(|i| x as i64 - i).product();
                    Scalar::from(falling)
                })
            })
            .collect();
        OracleResult {
            method,
            raw,
            central,
            factorial,
            sample_count: None,
            stderr: None,
            rng: None,
        }
    }
}

fn add_mass(pmf: &mut BTreeMap<u64, Scalar>, x: u64, p: Scalar) {
    let slot = pmf.entry(x).or_insert_with(Scalar::zero);
    *slot = &*slot + p;
}

fn counts_to_pmf(counts: &BTreeMap<u64, u64>, total: u64) -> BTreeMap<u64, Scalar> {
    counts
        .iter()
        .map(|(&x, &c)| (x, Scalar::Exact(Rational::new(c as i64, total as i64))))
        .collect()
}

/// All `2^n` outcomes of independent indicators with success
/// probabilities `p`.
pub fn enumerate_independent(p: &[Scalar], kmax: usize) -> Result<OracleResult> {
    if p.len() > MAX_INDEPENDENT_N {
        return Err(OracleError::SubsetExplosion {
            required: 1u128 << p.len(),
            limit: 1u128 << MAX_INDEPENDENT_N,
        });
    }
    fn walk(p: &[Scalar], i: usize, ones: u64, prob: Scalar, pmf: &mut BTreeMap<u64, Scalar>) {
        if prob.is_zero() {
            return;
        }
        if i == p.len() {
            add_mass(pmf, ones, prob);
            return;
        }
        walk(p, i + 1, ones + 1, &prob * &p[i], pmf);
        walk(p, i + 1, ones, prob * p[i].complement(), pmf);
    }
    let mut pmf = BTreeMap::new();
    walk(p, 0, 0, Scalar::one(), &mut pmf);
    Ok(OracleResult::from_pmf(
        OracleMethod::Enumeration,
        &pmf,
        kmax,
    ))
}

/// Fixed points over all `n!` permutations.
pub fn enumerate_matching(n: usize, kmax: usize) -> Result<OracleResult> {
    if n > MAX_MATCHING_N {
        return Err(OracleError::SubsetExplosion {
            required: (1..=n as u128).product(),
            limit: (1..=MAX_MATCHING_N as u128).product(),
        });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut counts = BTreeMap::new();
    let mut total = 0u64;
    let mut record = |perm: &[usize]| {
        let fixed = perm.iter().enumerate().filter(|(i, &v)| *i == v).count() as u64;
        *counts.entry(fixed).or_insert(0u64) += 1;
        total += 1;
    };
    // Heap's algorithm
    let mut c = vec![0usize; n];
    record(&perm);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            record(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(OracleResult::from_pmf(
        OracleMethod::Enumeration,
        &counts_to_pmf(&counts, total),
        kmax,
    ))
}

fn check_outcomes(required: BigInt) -> Result<u64> {
    match required.to_u64() {
        Some(r) if r <= MAX_OUTCOMES => Ok(r),
        _ => Err(OracleError::SubsetExplosion {
            required: required.to_u128().unwrap_or(u128::MAX),
            limit: MAX_OUTCOMES as u128,
        }),
    }
}

/// Empty-urn counts over all `C(balls+urns-1, balls)` equally likely
/// placements of indistinguishable balls.
pub fn enumerate_urns(urns: usize, balls: usize, kmax: usize) -> Result<OracleResult> {
    if urns == 0 {
        return Err(OracleError::InvalidInput("need at least one urn".into()));
    }
    check_outcomes(choose(balls + urns - 1, balls))?;
    // occupancy vectors in lexicographic order
    fn walk(left: usize, urns_left: usize, empty: u64, counts: &mut BTreeMap<u64, u64>) {
        if urns_left == 1 {
            let e = empty + u64::from(left == 0);
            *counts.entry(e).or_insert(0) += 1;
            return;
        }
        for here in 0..=left {
            walk(
                left - here,
                urns_left - 1,
                empty + u64::from(here == 0),
                counts,
            );
        }
    }
    let mut counts = BTreeMap::new();
    walk(balls, urns, 0, &mut counts);
    let total = counts.values().sum();
    Ok(OracleResult::from_pmf(
        OracleMethod::Enumeration,
        &counts_to_pmf(&counts, total),
        kmax,
    ))
}

/// Marked items over all `C(population, draws)` equally likely samples,
/// the first `successes` items being marked.
pub fn enumerate_hypergeometric(
    population: usize,
    successes: usize,
    draws: usize,
    kmax: usize,
) -> Result<OracleResult> {
    if successes > population || draws > population {
        return Err(OracleError::InvalidInput(format!(
            "need g <= N and n <= N, got N={population}, g={successes}, n={draws}"
        )));
    }
    check_outcomes(choose(population, draws))?;
    fn walk(
        next: usize,
        left: usize,
        marked: u64,
        population: usize,
        successes: usize,
        counts: &mut BTreeMap<u64, u64>,
    ) {
        if left == 0 {
            *counts.entry(marked).or_insert(0) += 1;
            return;
        }
        for item in next..=population - left {
            let m = marked + u64::from(item < successes);
            walk(item + 1, left - 1, m, population, successes, counts);
        }
    }
    let mut counts = BTreeMap::new();
    walk(0, draws, 0, population, successes, &mut counts);
    let total = counts.values().sum();
    Ok(OracleResult::from_pmf(
        OracleMethod::Enumeration,
        &counts_to_pmf(&counts, total),
        kmax,
    ))
}

/// `Σ_x f(x) pmf(x)` over a finite support.
pub fn pmf_moments(spec: &DistSpec, kmax: usize) -> Result<OracleResult> {
    let support = spec.support();
    let max = support
        .max
        .ok_or(OracleError::InfiniteSupport(spec.name()))?;
    let pmf: BTreeMap<u64, Scalar> = (support.min..=max).map(|x| (x, spec.pmf(x))).collect();
    Ok(OracleResult::from_pmf(OracleMethod::PmfSum, &pmf, kmax))
}

type Sampler = Box<dyn FnMut(&mut ChaCha8Rng) -> u64>;

fn sampler(spec: &DistSpec) -> Result<Sampler> {
    let bad = |e: &dyn std::fmt::Display| OracleError::InvalidInput(e.to_string());
    Ok(match spec {
        DistSpec::Binomial { n, p } => {
            let d = rand_distr::Binomial::new(*n as u64, p.to_f64()).map_err(|e| bad(&e))?;
            Box::new(move |rng| d.sample(rng))
        }
        DistSpec::PoissonBinomial { probs } => {
            let ds = probs
                .iter()
                .map(|p| rand::distr::Bernoulli::new(p.to_f64()).map_err(|e| bad(&e)))
                .collect::<Result<Vec<_>>>()?;
            Box::new(move |rng| ds.iter().filter(|d| d.sample(rng)).count() as u64)
        }
        DistSpec::Hypergeometric {
            population,
            successes,
            draws,
        } => {
            let d = rand_distr::Hypergeometric::new(
                *population as u64,
                *successes as u64,
                *draws as u64,
            )
            .map_err(|e| bad(&e))?;
            Box::new(move |rng| d.sample(rng))
        }
        DistSpec::EmptyUrns { urns, balls } => {
            let (urns, balls) = (*urns, *balls);
            // stars and bars: the ball positions among balls + urns - 1 slots
            Box::new(move |rng| {
                let slots = balls + urns - 1;
                let mut stars = vec![false; slots];
                for i in rand::seq::index::sample(rng, slots, balls) {
                    stars[i] = true;
                }
                let mut empty = 0u64;
                let mut in_urn = 0usize;
                for is_star in stars {
                    if is_star {
                        in_urn += 1;
                    } else {
                        empty += u64::from(in_urn == 0);
                        in_urn = 0;
                    }
                }
                empty + u64::from(in_urn == 0)
            })
        }
        DistSpec::Matching { n } => {
            let mut perm: Vec<usize> = (0..*n).collect();
            Box::new(move |rng| {
                perm.shuffle(rng);
                perm.iter().enumerate().filter(|(i, &v)| *i == v).count() as u64
            })
        }
        DistSpec::Poisson { lambda } => {
            let l = lambda.to_f64();
            if l == 0.0 {
                Box::new(|_| 0)
            } else {
                let d = rand_distr::Poisson::new(l).map_err(|e| bad(&e))?;
                Box::new(move |rng| d.sample(rng) as u64)
            }
        }
        DistSpec::Geometric { p } => {
            // failures before the first success, shifted to count the success
            let d = rand_distr::Geometric::new(p.to_f64()).map_err(|e| bad(&e))?;
            Box::new(move |rng| d.sample(rng) + 1)
        }
        DistSpec::CmpBinomial { .. } | DistSpec::Soliton { .. } | DistSpec::Benford { .. } => {
            let support = spec.support();
            let max = support
                .max
                .ok_or(OracleError::InfiniteSupport(spec.name()))?;
            let weights: Vec<f64> = (support.min..=max).map(|x| spec.pmf(x).to_f64()).collect();
            let d = WeightedIndex::new(weights).map_err(|e| bad(&e))?;
            let min = support.min;
            Box::new(move |rng| min + d.sample(rng) as u64)
        }
    })
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone, count: f64) -> (f64, f64) {
    let mean = compensated_sum(values.clone()) / count;
    let var = compensated_sum(values.map(|v| (v - mean) * (v - mean))) / (count - 1.0);
    (mean, (var / count).sqrt())
}

/// Per-draw statistic with the value and standard-error lists it feeds.
type Family<'a> = (&'a dyn Fn(f64) -> f64, &'a mut Vec<Scalar>, &'a mut Vec<f64>);

/// Sample moments over `samples` draws, reproducible for a given `seed`.
pub fn monte_carlo(spec: &DistSpec, kmax: usize, samples: u64, seed: u64) -> Result<OracleResult> {
    if samples < MIN_SAMPLES {
        return Err(OracleError::InvalidInput(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let mut draw = sampler(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..samples).map(|_| draw(&mut rng) as f64).collect();
    let count = samples as f64;
    let sample_mean = compensated_sum(xs.iter().copied()) / count;

    let mut out = OracleResult {
        method: OracleMethod::MonteCarlo,
        raw: Vec::new(),
        central: Vec::new(),
        factorial: Vec::new(),
        sample_count: Some(samples),
        stderr: None,
        rng: Some(RNG_ALGORITHM),
    };
    let mut errs = StdErrors {
        raw: Vec::new(),
        central: Vec::new(),
        factorial: Vec::new(),
    };
    for k in 0..=kmax {
        let e = k as i32;
        let families: [Family<'_>; 3] = [
            (&|x: f64| x.powi(e), &mut out.raw, &mut errs.raw),
            (
                &|x: f64| (x - sample_mean).powi(e),
                &mut out.central,
                &mut errs.central,
            ),
            (
                &|x: f64| (0..k).map(|i| x - i as f64).product(),
                &mut out.factorial,
                &mut errs.factorial,
            ),
        ];
        for (f, values, se) in families {
            let (m, s) = mean_and_stderr(xs.iter().map(|&x| f(x)), count);
            values.push(Scalar::Approx(m));
            se.push(s);
        }
    }
    out.stderr = Some(errs);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_examples() {
        let half = vec![Scalar::ratio(1, 2); 3];
        assert_eq!(
            enumerate_independent(&half, 2).unwrap().raw[2],
            Scalar::from(3)
        );
        assert_eq!(
            enumerate_independent(&[Scalar::one()], 5).unwrap().raw[5],
            Scalar::one()
        );
        let zeros = enumerate_independent(&[Scalar::zero(), Scalar::zero()], 3).unwrap();
        assert!(zeros.raw[1..].iter().all(Scalar::is_zero));
        assert!(enumerate_independent(&vec![Scalar::ratio(1, 2); 21], 1).is_err());
    }

    #[test]
    fn matching_examples() {
        let three = enumerate_matching(3, 2).unwrap();
        assert_eq!(three.raw[1], Scalar::one());
        assert_eq!(three.raw[2], Scalar::from(2));
        let one = enumerate_matching(1, 4).unwrap();
        assert!(one.raw.iter().all(|v| *v == Scalar::one()));
        assert!(enumerate_matching(9, 1).is_err());
    }

    #[test]
    fn urn_examples() {
        assert_eq!(enumerate_urns(3, 2, 1).unwrap().raw[1], Scalar::ratio(3, 2));
        assert_eq!(enumerate_urns(2, 0, 1).unwrap().raw[1], Scalar::from(2));
        assert_eq!(enumerate_urns(2, 1, 2).unwrap().raw[2], Scalar::one());
    }

    #[test]
    fn hypergeometric_counts() {
        let r = enumerate_hypergeometric(5, 3, 2, 2).unwrap();
        // E([X]_2) = 2 · 3/10
        assert_eq!(r.factorial[2], Scalar::ratio(3, 5));
    }

    #[test]
    fn pmf_sum_examples() {
        let soliton = pmf_moments(&DistSpec::soliton(5).unwrap(), 1).unwrap();
        assert_eq!(soliton.raw[1], Scalar::ratio(137, 60));
        let bern = pmf_moments(&DistSpec::binomial(1, Scalar::ratio(2, 7)).unwrap(), 4).unwrap();
        assert!(bern.raw[1..].iter().all(|v| *v == Scalar::ratio(2, 7)));
        assert!(pmf_moments(&DistSpec::geometric(Scalar::ratio(1, 2)).unwrap(), 1).is_err());
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let spec = DistSpec::binomial(100, Scalar::Approx(0.3)).unwrap();
        let a = monte_carlo(&spec, 2, 20_000, 7).unwrap();
        let b = monte_carlo(&spec, 2, 20_000, 7).unwrap();
        assert_eq!(a, b);
        let se = a.stderr.as_ref().unwrap().raw[1];
        assert!((a.raw[1].to_f64() - 30.0).abs() < 4.0 * se);
        assert_eq!(a.rng, Some(RNG_ALGORITHM));
        assert!(monte_carlo(&spec, 1, 10, 7).is_err());
    }

    #[test]
    fn monte_carlo_samplers_hit_their_means() {
        let cases = [
            (DistSpec::poisson(Scalar::from(2)).unwrap(), 2usize, 6.0),
            (DistSpec::geometric(Scalar::ratio(1, 4)).unwrap(), 1, 4.0),
            (DistSpec::empty_urns(4, 3).unwrap(), 1, 2.0),
            (DistSpec::soliton(5).unwrap(), 1, 137.0 / 60.0),
        ];
        for (spec, k, want) in cases {
            let r = monte_carlo(&spec, k, 50_000, 11).unwrap();
            let se = r.stderr.as_ref().unwrap().raw[k];
            assert!(
                (r.raw[k].to_f64() - want).abs() < 5.0 * se,
                "{spec}: {:?}",
                r.raw[k]
            );
        }
    }
}
