//! Moment engine for sums of Bernoulli indicators.
//!
//! A [`JointModel`] describes a family `Y_1, ..., Y_n` of 0/1 indicators by
//! its joint expectations `E(Y_{i1} ... Y_{im})`. Since indicators are
//! idempotent, `X^k = (Y_1 + ... + Y_n)^k` expands into surjection-weighted
//! sums of subset products, so every raw, central and factorial moment of
//! `X` is a finite linear combination of
//!
//! ```text
//! E(C(X, m)) = Σ_{|I| = m} E(Π_{i ∈ I} Y_i).
//! ```
//!
//! The [`Engine`] computes those subset sums (collapsed for exchangeable and
//! independent families, enumerated for general ones under a budget) and
//! combines them with the kernels from [`crate::combinat`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::combinat::{
    choose, factorial, format_significant, sign, stirling1_signed, stirling2, surjections, Scalar,
};

/// Default cap on the number of joint-expectation evaluations a single
/// request may perform for [`ModelKind::General`] families.
pub const DEFAULT_BUDGET: u64 = 2_000_000;

/// Largest family size accepted by [`JointModel::general`].
pub const MAX_GENERAL_N: usize = 25;

/// Largest family size for which the expected factorial of a general family
/// is computed (it visits all `2^n` subsets).
pub const MAX_EXPECTED_FACTORIAL_N: usize = 20;

const PROBABILITY_SLACK: f64 = 1e-12;

pub type SubsetJointFn = Arc<dyn Fn(&[usize]) -> Scalar + Send + Sync>;
pub type SizeJointFn = Arc<dyn Fn(usize) -> Scalar + Send + Sync>;
pub type ProbabilityFn = Arc<dyn Fn(usize) -> Scalar + Send + Sync>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("subset enumeration needs {required} joint evaluations but the budget is {budget}")]
    SubsetExplosion { required: u128, budget: u64 },
    #[error("invalid joint model: {0}")]
    InvalidModel(String),
    #[error("operation needs a finite family; truncated infinite sums are not supported here")]
    NotFinite,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, EngineError>;

/// How the joint expectations of a family are supplied.
#[derive(Clone)]
pub enum ModelKind {
    /// Arbitrary family: `joint(indices)` for any sorted index subset of `0..n`.
    General { n: usize, joint: SubsetJointFn },
    /// Joint expectation depends only on the subset size.
    Exchangeable { n: usize, joint: SizeJointFn },
    /// Independent indicators with the given success probabilities.
    Independent { probs: Vec<Scalar> },
    /// Infinite independent family cut at `n_max` terms. The caller asserts
    /// `Σ_{i >= n_max} p_i <= tail_bound`.
    IndependentTruncated {
        prob: ProbabilityFn,
        n_max: usize,
        tail_bound: Scalar,
    },
}

/// A validated joint-expectation provider for a Bernoulli family.
#[derive(Clone)]
pub struct JointModel(ModelKind);

impl fmt::Debug for JointModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            ModelKind::General { n, .. } => write!(f, "General {{ n: {n} }}"),
            ModelKind::Exchangeable { n, .. } => write!(f, "Exchangeable {{ n: {n} }}"),
            ModelKind::Independent { probs } => f
                .debug_struct("Independent")
                .field(
                    "probs",
                    &probs.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                )
                .finish(),
            ModelKind::IndependentTruncated {
                n_max, tail_bound, ..
            } => write!(
                f,
                "IndependentTruncated {{ n_max: {n_max}, tail_bound: {tail_bound} }}"
            ),
        }
    }
}

fn check_probability(value: &Scalar, what: impl Fn() -> String) -> Result<()> {
    let ok = match value {
        Scalar::Exact(_) => value.is_probability(),
        Scalar::Approx(x) => {
            x.is_finite() && *x >= -PROBABILITY_SLACK && *x <= 1.0 + PROBABILITY_SLACK
        }
    };
    if ok {
        Ok(())
    } else {
        Err(EngineError::InvalidModel(format!(
            "{} = {value} is not in [0, 1]",
            what()
        )))
    }
}

impl JointModel {
    pub fn general(
        n: usize,
        joint: impl Fn(&[usize]) -> Scalar + Send + Sync + 'static,
    ) -> Result<Self> {
        if n > MAX_GENERAL_N {
            return Err(EngineError::InvalidModel(format!(
                "general families are limited to n <= {MAX_GENERAL_N}, got {n}"
            )));
        }
        Ok(JointModel(ModelKind::General {
            n,
            joint: Arc::new(joint),
        }))
    }

    /// Exchangeable family; `joint(m)` must be defined on `0..=n` with
    /// `joint(0) = 1`, stay in `[0, 1]` and be non-increasing in `m`.
    pub fn exchangeable(
        n: usize,
        joint: impl Fn(usize) -> Scalar + Send + Sync + 'static,
    ) -> Result<Self> {
        let e0 = joint(0);
        let is_one = match &e0 {
            Scalar::Exact(r) => r.is_one(),
            Scalar::Approx(x) => (x - 1.0).abs() <= PROBABILITY_SLACK,
        };
        if !is_one {
            return Err(EngineError::InvalidModel(format!(
                "exchangeable joint(0) must be 1, got {e0}"
            )));
        }
        let mut prev = e0;
        for m in 1..=n {
            let e = joint(m);
            check_probability(&e, || format!("joint({m})"))?;
            let increases = match (&e, &prev) {
                (Scalar::Exact(a), Scalar::Exact(b)) => a > b,
                _ => e.to_f64() > prev.to_f64() + PROBABILITY_SLACK,
            };
            if increases {
                return Err(EngineError::InvalidModel(format!(
                    "joint({m}) = {e} exceeds joint({}) = {prev}",
                    m - 1
                )));
            }
            prev = e;
        }
        Ok(JointModel(ModelKind::Exchangeable {
            n,
            joint: Arc::new(joint),
        }))
    }

    pub fn independent(probs: Vec<Scalar>) -> Result<Self> {
        for (i, p) in probs.iter().enumerate() {
            check_probability(p, || format!("p[{i}]"))?;
        }
        Ok(JointModel(ModelKind::Independent { probs }))
    }

    /// Independent `p_0, p_1, ...` truncated to the first `n_max` terms.
    pub fn independent_truncated(
        prob: impl Fn(usize) -> Scalar + Send + Sync + 'static,
        n_max: usize,
        tail_bound: Scalar,
    ) -> Result<Self> {
        for i in 0..n_max {
            check_probability(&prob(i), || format!("p[{i}]"))?;
        }
        if tail_bound.to_f64() < 0.0 {
            return Err(EngineError::InvalidModel(
                "tail bound must be non-negative".into(),
            ));
        }
        Ok(JointModel(ModelKind::IndependentTruncated {
            prob: Arc::new(prob),
            n_max,
            tail_bound,
        }))
    }

    pub fn kind(&self) -> &ModelKind {
        &self.0
    }

    /// Number of indicators the engine sums over (`n_max` when truncated).
    pub fn len(&self) -> usize {
        match &self.0 {
            ModelKind::General { n, .. } | ModelKind::Exchangeable { n, .. } => *n,
            ModelKind::Independent { probs } => probs.len(),
            ModelKind::IndependentTruncated { n_max, .. } => *n_max,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self.0, ModelKind::IndependentTruncated { .. })
    }

    /// `E(Π_{i ∈ indices} Y_i)` for a set of distinct indices.
    pub fn joint(&self, indices: &[usize]) -> Scalar {
        match &self.0 {
            ModelKind::General { joint, .. } => {
                let mut sorted = indices.to_vec();
                sorted.sort_unstable();
                joint(&sorted)
            }
            ModelKind::Exchangeable { joint, .. } => joint(indices.len()),
            ModelKind::Independent { probs } => indices.iter().map(|&i| probs[i].clone()).product(),
            ModelKind::IndependentTruncated { prob, .. } => {
                indices.iter().map(|&i| prob(i)).product()
            }
        }
    }
}

/// Which family of moments a report holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MomentKind {
    Raw,
    Central,
    Factorial,
    ExpectedFactorial,
    Choose,
}

impl MomentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MomentKind::Raw => "raw",
            MomentKind::Central => "central",
            MomentKind::Factorial => "factorial",
            MomentKind::ExpectedFactorial => "expected_factorial",
            MomentKind::Choose => "choose",
        }
    }
}

impl fmt::Display for MomentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MomentKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "raw" => Ok(MomentKind::Raw),
            "central" => Ok(MomentKind::Central),
            "factorial" => Ok(MomentKind::Factorial),
            "expected_factorial" | "expected-factorial" => Ok(MomentKind::ExpectedFactorial),
            "choose" => Ok(MomentKind::Choose),
            other => Err(format!("unknown moment kind `{other}`")),
        }
    }
}

/// Where the numbers in a report came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    Engine,
    ClosedForm,
    Oracle,
    Tail,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Engine => "engine",
            Provenance::ClosedForm => "closed_form",
            Provenance::Oracle => "oracle",
            Provenance::Tail => "tail",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Moments of one kind for `k = 0..=kmax`.
///
/// Expected-factorial reports hold their single value under key `0`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub kind: MomentKind,
    pub values: BTreeMap<usize, Scalar>,
    pub mu: Option<Scalar>,
    pub provenance: Provenance,
    pub truncation_bound: Option<f64>,
}

impl MomentReport {
    pub fn new(kind: MomentKind, values: Vec<Scalar>, provenance: Provenance) -> Self {
        MomentReport {
            kind,
            values: values.into_iter().enumerate().collect(),
            mu: None,
            provenance,
            truncation_bound: None,
        }
    }

    pub fn kmax(&self) -> usize {
        self.values.keys().next_back().copied().unwrap_or(0)
    }

    pub fn get(&self, k: usize) -> Option<&Scalar> {
        self.values.get(&k)
    }

    pub fn is_approx(&self) -> bool {
        self.values.values().any(|v| !v.is_exact())
    }

    /// JSON rendering; `float` switches values to decimals with `digits`
    /// significant digits.
    pub fn to_json(&self, float: bool, digits: usize) -> String {
        serde_json::to_string(&ReportJson {
            report: self,
            float,
            digits,
        })
        .expect("report serialization is infallible")
    }
}

impl Serialize for MomentReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ReportJson {
            report: self,
            float: false,
            digits: 17,
        }
        .serialize(serializer)
    }
}

struct ReportJson<'a> {
    report: &'a MomentReport,
    float: bool,
    digits: usize,
}

struct ValuesJson<'a> {
    values: &'a BTreeMap<usize, Scalar>,
    float: bool,
    digits: usize,
}

impl Serialize for ValuesJson<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_map(
            self.values
                .iter()
                .map(|(k, v)| (k.to_string(), v.render(self.float, self.digits))),
        )
    }
}

impl Serialize for ReportJson<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let r = self.report;
        let mut map = serializer.serialize_map(Some(6))?;
        map.serialize_entry("kind", r.kind.as_str())?;
        map.serialize_entry("kmax", &r.kmax())?;
        map.serialize_entry(
            "values",
            &ValuesJson {
                values: &r.values,
                float: self.float,
                digits: self.digits,
            },
        )?;
        map.serialize_entry("provenance", r.provenance.as_str())?;
        map.serialize_entry("approx", &r.is_approx())?;
        map.serialize_entry(
            "truncation_bound",
            &r.truncation_bound.map(|b| format_significant(b, 6)),
        )?;
        map.end()
    }
}

/// One term `S(k,m) · C(n,m)` of the expansion of `(y_1 + ... + y_n)^k`
/// for commuting idempotents: `S(k,m)` ordered ways to produce each of the
/// `C(n,m)` distinct products of `m` indicators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdempotentTerm {
    pub size: usize,
    pub surjections: BigInt,
    pub subsets: BigInt,
}

/// Structured expansion of `(y_1 + ... + y_n)^k` where every `y_i^2 = y_i`.
/// The multiplicities `Σ S(k,m) C(n,m)` add up to `n^k`.
pub fn expand_idempotent_power(n: usize, k: usize) -> Vec<IdempotentTerm> {
    if k == 0 {
        return vec![IdempotentTerm {
            size: 0,
            surjections: BigInt::from(1),
            subsets: BigInt::from(1),
        }];
    }
    (1..=k.min(n))
        .map(|m| IdempotentTerm {
            size: m,
            surjections: surjections(k, m),
            subsets: choose(n, m),
        })
        .collect()
}

/// `E(X^k) = Σ_{m=1}^{k} S₂(k,m) E([X]_m)`.
pub fn moments_from_factorial(factorials: &[Scalar], k: usize) -> Result<Scalar> {
    require_len(factorials, k)?;
    if k == 0 {
        return Ok(factorials[0].clone());
    }
    Ok((1..=k)
        .map(|m| Scalar::from(stirling2(k, m)) * &factorials[m])
        .sum())
}

/// `E([X]_k) = Σ_{m=1}^{k} S₁(k,m) E(X^m)` with signed Stirling numbers.
pub fn factorial_from_moments(moments: &[Scalar], k: usize) -> Result<Scalar> {
    require_len(moments, k)?;
    if k == 0 {
        return Ok(moments[0].clone());
    }
    Ok((1..=k)
        .map(|m| Scalar::from(stirling1_signed(k, m)) * &moments[m])
        .sum())
}

/// `E((X-μ)^k) = (-μ)^k + Σ_{ℓ=1}^{k} C(k,ℓ) (-μ)^{k-ℓ} E(X^ℓ)` with `μ = moments[1]`.
pub fn central_from_raw(moments: &[Scalar], k: usize) -> Result<Scalar> {
    require_len(moments, k)?;
    if k == 0 {
        return Ok(Scalar::one());
    }
    let neg_mu = -&moments[1];
    let mut total = neg_mu.pow(k as i32);
    for (l, m) in moments.iter().enumerate().take(k + 1).skip(1) {
        total = total + Scalar::from(choose(k, l)) * neg_mu.pow((k - l) as i32) * m;
    }
    Ok(total)
}

/// Central moment straight from factorial moments:
/// `(-μ)^k + Σ_{j=1}^{k} (Σ_{m=j}^{k} S₂(m,j) C(k,m) (-μ)^{k-m}) E([X]_j)`.
pub fn central_from_factorial(factorials: &[Scalar], mu: &Scalar, k: usize) -> Result<Scalar> {
    require_len(factorials, k)?;
    if k == 0 {
        return Ok(Scalar::one());
    }
    let neg_mu = -mu;
    let mut total = neg_mu.pow(k as i32);
    for (j, f) in factorials.iter().enumerate().take(k + 1).skip(1) {
        let weight: Scalar = (j..=k)
            .map(|m| Scalar::from(stirling2(m, j) * choose(k, m)) * neg_mu.pow((k - m) as i32))
            .sum();
        total = total + weight * f;
    }
    Ok(total)
}

fn require_len(values: &[Scalar], k: usize) -> Result<()> {
    if values.len() <= k {
        return Err(EngineError::InvalidInput(format!(
            "need values for orders 0..={k}, got {}",
            values.len()
        )));
    }
    Ok(())
}

/// Computes moments of Bernoulli sums from a [`JointModel`].
#[derive(Clone, Copy, Debug)]
pub struct Engine {
    budget: u64,
}

impl Default for Engine {
    fn default() -> Self {
        Engine {
            budget: DEFAULT_BUDGET,
        }
    }
}

impl Engine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_budget(budget: u64) -> Self {
        Engine { budget }
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    fn charge(&self, required: u128) -> Result<()> {
        if required > self.budget as u128 {
            Err(EngineError::SubsetExplosion {
                required,
                budget: self.budget,
            })
        } else {
            Ok(())
        }
    }

    /// `E(C(X, m))` for `m = 0..=mmax`, sharing work across orders.
    pub fn choose_expectations(&self, model: &JointModel, mmax: usize) -> Result<Vec<Scalar>> {
        let n = model.len();
        let mut out = vec![Scalar::zero(); mmax + 1];
        out[0] = Scalar::one();
        match model.kind() {
            ModelKind::Exchangeable { joint, .. } => {
                for (m, slot) in out.iter_mut().enumerate().take(mmax.min(n) + 1).skip(1) {
                    *slot = Scalar::from(choose(n, m)) * joint(m);
                }
            }
            ModelKind::Independent { probs } => {
                elementary_symmetric(probs.iter().cloned(), &mut out);
            }
            ModelKind::IndependentTruncated { prob, n_max, .. } => {
                elementary_symmetric((0..*n_max).map(|i| prob(i)), &mut out);
            }
            ModelKind::General { joint, .. } => {
                let top = mmax.min(n);
                let required: u128 = (1..=top)
                    .map(|m| u128::try_from(choose(n, m)).unwrap_or(u128::MAX))
                    .fold(0u128, |a, b| a.saturating_add(b));
                self.charge(required)?;
                for (m, slot) in out.iter_mut().enumerate().take(top + 1).skip(1) {
                    let mut total = Scalar::zero();
                    for subset in Combinations::new(n, m) {
                        let e = joint(&subset);
                        check_probability(&e, || format!("joint({subset:?})"))?;
                        total = total + e;
                    }
                    *slot = total;
                }
            }
        }
        Ok(out)
    }

    /// `E(C(X, m)) = Σ_{|I|=m} E(Π_{i∈I} Y_i)`.
    pub fn choose_expectation(&self, model: &JointModel, m: usize) -> Result<Scalar> {
        Ok(self.choose_expectations(model, m)?.swap_remove(m))
    }

    /// `E(X^k) = Σ_{m=1}^{min(k,n)} S(k,m) E(C(X,m))`.
    pub fn raw_moment(&self, model: &JointModel, k: usize) -> Result<Scalar> {
        let chooses = self.choose_expectations(model, k)?;
        Ok(raw_from_chooses(&chooses, k))
    }

    /// `E([X]_k) = k! E(C(X,k))`.
    pub fn factorial_moment(&self, model: &JointModel, k: usize) -> Result<Scalar> {
        Ok(Scalar::from(factorial(k)) * self.choose_expectation(model, k)?)
    }

    pub fn central_moment(&self, model: &JointModel, k: usize) -> Result<Scalar> {
        let chooses = self.choose_expectations(model, k.max(1))?;
        let raws: Vec<Scalar> = (0..=k.max(1))
            .map(|j| raw_from_chooses(&chooses, j))
            .collect();
        central_from_raw(&raws, k)
    }

    /// `E(X!) = Σ_{H ⊆ I} |H|! E(Π_{i∈H} Y_i Π_{i∉H} (1 - Y_i))`.
    pub fn expected_factorial(&self, model: &JointModel) -> Result<Scalar> {
        let pmf = self.pmf(model)?;
        Ok(pmf
            .iter()
            .enumerate()
            .map(|(x, p)| Scalar::from(factorial(x)) * p)
            .sum())
    }

    /// Distribution of `X` over `0..=n`, from the probabilities of each
    /// exact success pattern.
    pub fn pmf(&self, model: &JointModel) -> Result<Vec<Scalar>> {
        let n = model.len();
        match model.kind() {
            ModelKind::IndependentTruncated { .. } => Err(EngineError::NotFinite),
            ModelKind::Independent { probs } => {
                let mut pmf = vec![Scalar::zero(); n + 1];
                pmf[0] = Scalar::one();
                for (i, p) in probs.iter().enumerate() {
                    let q = p.complement();
                    for x in (0..=i + 1).rev() {
                        let stay = &pmf[x] * &q;
                        pmf[x] = if x > 0 { stay + &pmf[x - 1] * p } else { stay };
                    }
                }
                Ok(pmf)
            }
            ModelKind::Exchangeable { joint, .. } => {
                // Pr(X = x) = C(n,x) Σ_j (-1)^j C(n-x,j) e(x+j)
                let e: Vec<Scalar> = (0..=n).map(|m| joint(m)).collect();
                Ok((0..=n)
                    .map(|x| {
                        let inner: Scalar = (0..=n - x)
                            .map(|j| {
                                Scalar::from(sign(j)) * Scalar::from(choose(n - x, j)) * &e[x + j]
                            })
                            .sum();
                        Scalar::from(choose(n, x)) * inner
                    })
                    .collect())
            }
            ModelKind::General { joint, .. } => {
                if n > MAX_EXPECTED_FACTORIAL_N {
                    return Err(EngineError::SubsetExplosion {
                        required: 1u128 << n,
                        budget: self.budget,
                    });
                }
                self.charge(1u128 << n)?;
                // joint moments for every subset, then a superset Möbius
                // transform turns them into exact-pattern probabilities
                let size = 1usize << n;
                let mut f: Vec<Scalar> = Vec::with_capacity(size);
                let mut indices = Vec::with_capacity(n);
                for mask in 0..size {
                    indices.clear();
                    indices.extend((0..n).filter(|i| mask >> i & 1 == 1));
                    let e = joint(&indices);
                    check_probability(&e, || format!("joint({indices:?})"))?;
                    f.push(e);
                }
                for bit in 0..n {
                    for mask in 0..size {
                        if mask >> bit & 1 == 0 {
                            let upper = f[mask | (1 << bit)].clone();
                            f[mask] = &f[mask] - upper;
                        }
                    }
                }
                let mut pmf = vec![Scalar::zero(); n + 1];
                for (mask, p) in f.into_iter().enumerate() {
                    let x = mask.count_ones() as usize;
                    pmf[x] = &pmf[x] + p;
                }
                Ok(pmf)
            }
        }
    }

    /// Moments of one kind for `k = 0..=kmax`, sharing the subset sums.
    pub fn report(
        &self,
        model: &JointModel,
        kind: MomentKind,
        kmax: usize,
    ) -> Result<MomentReport> {
        if kind == MomentKind::ExpectedFactorial {
            let value = self.expected_factorial(model)?;
            return Ok(MomentReport::new(kind, vec![value], Provenance::Engine));
        }
        let chooses = self.choose_expectations(model, kmax.max(1))?;
        let raws: Vec<Scalar> = (0..=kmax.max(1))
            .map(|k| raw_from_chooses(&chooses, k))
            .collect();
        let values: Vec<Scalar> = match kind {
            MomentKind::Choose => chooses[..=kmax].to_vec(),
            MomentKind::Raw => raws[..=kmax].to_vec(),
            MomentKind::Factorial => (0..=kmax)
                .map(|k| Scalar::from(factorial(k)) * &chooses[k])
                .collect(),
            MomentKind::Central => (0..=kmax)
                .map(|k| central_from_raw(&raws, k))
                .collect::<Result<_>>()?,
            MomentKind::ExpectedFactorial => unreachable!(),
        };
        let mut report = MomentReport::new(kind, values, Provenance::Engine);
        report.mu = Some(raws[1].clone());
        if let ModelKind::IndependentTruncated { tail_bound, .. } = model.kind() {
            let bounds = truncation_bounds(&raws, tail_bound.to_f64(), kmax);
            report.truncation_bound = Some(match kind {
                MomentKind::Raw => bounds.raw[kmax],
                MomentKind::Choose => bounds.choose[kmax],
                MomentKind::Factorial => bounds.choose[kmax] * factorial_f64(kmax),
                MomentKind::Central => bounds.central(&raws, kmax),
                MomentKind::ExpectedFactorial => unreachable!(),
            });
        }
        Ok(report)
    }

    /// Worst-case error of the truncated raw moment `E(X^k)` relative to the
    /// infinite sum, given the caller's tail bound. `None` for finite models.
    pub fn truncation_bound(&self, model: &JointModel, k: usize) -> Result<Option<f64>> {
        let ModelKind::IndependentTruncated { tail_bound, .. } = model.kind() else {
            return Ok(None);
        };
        let chooses = self.choose_expectations(model, k.max(1))?;
        let raws: Vec<Scalar> = (0..=k.max(1))
            .map(|j| raw_from_chooses(&chooses, j))
            .collect();
        Ok(Some(
            truncation_bounds(&raws, tail_bound.to_f64(), k).raw[k],
        ))
    }
}

fn raw_from_chooses(chooses: &[Scalar], k: usize) -> Scalar {
    if k == 0 {
        return Scalar::one();
    }
    (1..=k)
        .filter(|&m| m < chooses.len())
        .map(|m| Scalar::from(surjections(k, m)) * &chooses[m])
        .sum()
}

/// Fills `out[m]` with the m-th elementary symmetric polynomial of `probs`.
fn elementary_symmetric(probs: impl Iterator<Item = Scalar>, out: &mut [Scalar]) {
    let mmax = out.len() - 1;
    for (i, p) in probs.enumerate() {
        for j in (1..=mmax.min(i + 1)).rev() {
            let add = &out[j - 1] * &p;
            out[j] = &out[j] + add;
        }
    }
}

fn factorial_f64(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

struct TruncationBounds {
    choose: Vec<f64>,
    raw: Vec<f64>,
}

impl TruncationBounds {
    /// Bound on the central moment error from perturbations of `μ` and of
    /// each raw moment: `|ab - âb̂| <= (|â|+ε_a)(|b̂|+ε_b) - |â||b̂|`.
    fn central(&self, raws: &[Scalar], k: usize) -> f64 {
        let mu = raws[1].to_f64().abs();
        let mu_err = self.raw[1];
        (0..=k)
            .map(|l| {
                let c = choose(k, l).to_f64().unwrap_or(f64::INFINITY);
                let a = mu.powi((k - l) as i32);
                let a_hi = (mu + mu_err).powi((k - l) as i32);
                let b = raws[l].to_f64().abs();
                let b_hi = b + self.raw[l];
                c * (a_hi * b_hi - a * b)
            })
            .sum()
    }
}

/// With `τ` bounding the omitted probabilities, the omitted part of
/// `e_m(p)` is at most `τ · e_{m-1}(p) <= τ (μ_N + τ)^{m-1} / (m-1)!`.
fn truncation_bounds(raws: &[Scalar], tau: f64, k: usize) -> TruncationBounds {
    let total_mean = raws[1].to_f64() + tau;
    let mut choose_err = vec![0.0; k + 1];
    for (m, slot) in choose_err.iter_mut().enumerate().skip(1) {
        *slot = tau * total_mean.powi((m - 1) as i32) / factorial_f64(m - 1);
    }
    let mut raw_err = vec![0.0; k + 1];
    for (j, slot) in raw_err.iter_mut().enumerate().skip(1) {
        *slot = (1..=j)
            .map(|m| surjections(j, m).to_f64().unwrap_or(f64::INFINITY) * choose_err[m])
            .sum();
    }
    TruncationBounds {
        choose: choose_err,
        raw: raw_err,
    }
}

/// Lexicographic `m`-subsets of `0..n`.
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, m: usize) -> Self {
        Combinations {
            n,
            current: (m <= n).then(|| (0..m).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().unwrap();
        let m = cur.len();
        let mut i = m;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if cur[i] < self.n - m + i {
                cur[i] += 1;
                for j in i + 1..m {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Convenience: raw moment with the default engine.
pub fn raw_moment(model: &JointModel, k: usize) -> Result<Scalar> {
    Engine::default().raw_moment(model, k)
}

/// Convenience: central moment with the default engine.
pub fn central_moment(model: &JointModel, k: usize) -> Result<Scalar> {
    Engine::default().central_moment(model, k)
}

/// Convenience: factorial moment with the default engine.
pub fn factorial_moment(model: &JointModel, k: usize) -> Result<Scalar> {
    Engine::default().factorial_moment(model, k)
}

/// Convenience: `E(C(X, m))` with the default engine.
pub fn choose_expectation(model: &JointModel, m: usize) -> Result<Scalar> {
    Engine::default().choose_expectation(model, m)
}

/// Convenience: `E(X!)` with the default engine.
pub fn expected_factorial(model: &JointModel) -> Result<Scalar> {
    Engine::default().expected_factorial(model)
}

/// `p^m` for an iid family, as an exchangeable joint function.
pub fn iid_joint(p: Scalar) -> impl Fn(usize) -> Scalar + Send + Sync + 'static {
    move |m| p.pow(m as i32)
}
