//! Moments of a count variable `N` from its upper tail `Pr(N >= M)`.
//!
//! Writing `N = Σ_{i>=1} 1{N >= i}` turns any count into a Bernoulli sum,
//! which gives
//!
//! ```text
//! E(C(N, m)) = Σ_{M>=m} C(M-1, m-1) Pr(N >= M)
//! E(N^k)     = Σ_m S(k, m) E(C(N, m))
//! ```
//!
//! with `S(k, m)` the surjection counts. Infinite supports are truncated
//! under a geometric decay certificate and report the omitted mass.

use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::combinat::{choose, compensated_sum, factorial, surjections, Scalar};
use crate::distributions::{poisson_scaled_tail, DistError, DistSpec};

pub const DEFAULT_EPSILON: f64 = 1e-15;
pub const DEFAULT_MAX_TERMS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TailError {
    #[error("tail series did not meet its decay certificate after {terms} terms")]
    DivergenceSuspected { terms: u64 },
    #[error("pmf is not normalized: total mass {0}")]
    NotNormalized(String),
    #[error("tail is not a non-increasing function in [0, 1] (first violation at M = {at})")]
    NotMonotone { at: u64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}

pub type Result<T> = std::result::Result<T, TailError>;

/// Where the tail vanishes, or how fast it decays.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SupportBound {
    /// `Pr(N >= M) = 0` for `M > max`.
    Finite { max: u64 },
    /// `Pr(N >= M) <= c q^M` for every `M >= from`, with `0 < q < 1`.
    Infinite { c: f64, q: f64, from: u64 },
}

type TailFn = Arc<dyn Fn(u64) -> Scalar + Send + Sync>;

/// A count distribution given by its upper tail.
#[derive(Clone)]
pub struct CountDist {
    tail: TailFn,
    /// Raw tail values for `M = 1..=len`, shared between clones.
    memo: Arc<Mutex<Vec<Scalar>>>,
    support: SupportBound,
    /// Constant factor applied to every tail value once, after summation.
    scale: Option<f64>,
    epsilon: f64,
    max_terms: u64,
}

impl std::fmt::Debug for CountDist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CountDist")
            .field("support", &self.support)
            .field("scale", &self.scale)
            .field("epsilon", &self.epsilon)
            .finish_non_exhaustive()
    }
}

/// A tail-series value with its truncation bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct TailValue {
    pub value: Scalar,
    /// Upper bound on the omitted part of the series; `None` when nothing
    /// was omitted.
    pub residual_bound: Option<f64>,
    /// Number of tail terms summed.
    pub terms: u64,
}

/// Monotonicity is checked on at most this many leading terms.
const CHECK_LIMIT: u64 = 10_000;

impl CountDist {
    /// Validates that the tail starts at most 1, stays non-negative and
    /// never increases. The decay certificate is trusted as given.
    pub fn new(
        tail: impl Fn(u64) -> Scalar + Send + Sync + 'static,
        support: SupportBound,
    ) -> Result<Self> {
        Self::scaled(tail, support, None)
    }

    /// Tail values are `scale · tail(M)`; the certificate bounds `tail(M)`.
    fn scaled(
        tail: impl Fn(u64) -> Scalar + Send + Sync + 'static,
        support: SupportBound,
        scale: Option<f64>,
    ) -> Result<Self> {
        if let SupportBound::Infinite { c, q, from } = support {
            if !(q > 0.0 && q < 1.0) || c < 0.0 || !c.is_finite() || from == 0 {
                return Err(TailError::InvalidInput(format!(
                    "decay certificate needs 0 < q < 1, finite c >= 0 and from >= 1 (got c={c}, q={q}, from={from})"
                )));
            }
        }
        let dist = CountDist {
            tail: Arc::new(tail),
            memo: Arc::default(),
            support,
            scale,
            epsilon: DEFAULT_EPSILON,
            max_terms: DEFAULT_MAX_TERMS,
        };
        dist.check_monotone()?;
        Ok(dist)
    }

    /// The degenerate variable `N ≡ c`.
    pub fn point_mass(c: u64) -> Self {
        CountDist::new(
            move |m| {
                if m <= c {
                    Scalar::one()
                } else {
                    Scalar::zero()
                }
            },
            SupportBound::Finite { max: c },
        )
        .expect("indicator tail is monotone")
    }

    /// Sets the truncation tolerance for infinite supports.
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// Caps the number of tail terms summed for infinite supports.
    pub fn with_max_terms(mut self, max_terms: u64) -> Self {
        self.max_terms = max_terms;
        self
    }

    pub fn support(&self) -> SupportBound {
        self.support
    }

    /// Memoized unscaled tail value.
    fn raw_tail(&self, m: u64) -> Scalar {
        const MEMO_LIMIT: u64 = 1 << 16;
        if m == 0 || m > MEMO_LIMIT {
            return (self.tail)(m);
        }
        let mut memo = self.memo.lock().unwrap_or_else(|e| e.into_inner());
        while (memo.len() as u64) < m {
            let next = memo.len() as u64 + 1;
            memo.push((self.tail)(next));
        }
        memo[m as usize - 1].clone()
    }

    /// `Pr(N >= m)`.
    pub fn tail(&self, m: u64) -> Scalar {
        let raw = self.raw_tail(m);
        match self.scale {
            Some(s) => Scalar::Approx(raw.to_f64() * s),
            None => raw,
        }
    }

    fn check_monotone(&self) -> Result<()> {
        let last = match self.support {
            SupportBound::Finite { max } => max.saturating_add(1).min(CHECK_LIMIT),
            SupportBound::Infinite { from, .. } => from.saturating_add(64).min(CHECK_LIMIT),
        };
        let mut prev = Scalar::one();
        for m in 1..=last {
            let t = self.tail(m);
            let slack = if t.is_exact() && prev.is_exact() {
                0.0
            } else {
                1e-12
            };
            let below_zero = match &t {
                Scalar::Exact(r) => r.is_negative(),
                Scalar::Approx(x) => *x < -slack,
            };
            let rises = match (&t, &prev) {
                (Scalar::Exact(a), Scalar::Exact(b)) => a > b,
                _ => t.to_f64() > prev.to_f64() + slack,
            };
            if below_zero || rises {
                return Err(TailError::NotMonotone { at: m });
            }
            prev = t;
        }
        Ok(())
    }

    /// `Σ_{M>=1} w(M) Pr(N >= M)` with `w` exact. `majorant` bounds `w` from
    /// above for large `M`; `ratio(M)` bounds `majorant(M'+1)/majorant(M')`
    /// for every `M' >= M`. Summation stops once `M >= min_stop` and the
    /// certified remainder drops below `epsilon·(|partial| + 1)`.
    fn weighted_sum(
        &self,
        weight: impl Fn(u64) -> BigInt,
        majorant: impl Fn(u64) -> f64,
        ratio: impl Fn(u64) -> f64,
        min_stop: u64,
    ) -> Result<TailValue> {
        let mut terms: Vec<Scalar> = Vec::new();
        let mut running = Vec::new();
        match self.support {
            SupportBound::Finite { max } => {
                for m in 1..=max {
                    let w = weight(m);
                    if w.is_zero() {
                        continue;
                    }
                    terms.push(Scalar::from(w) * self.raw_tail(m));
                }
                Ok(TailValue {
                    value: self.finish(terms),
                    residual_bound: None,
                    terms: max,
                })
            }
            SupportBound::Infinite { c, q, from } => {
                let mut m = 0u64;
                loop {
                    m += 1;
                    if m > self.max_terms {
                        return Err(TailError::DivergenceSuspected {
                            terms: self.max_terms,
                        });
                    }
                    let t = self.raw_tail(m);
                    let tf = t.to_f64();
                    let cert = c * q.powf(m as f64);
                    if m >= from && tf > cert * (1.0 + 1e-9) + f64::MIN_POSITIVE {
                        return Err(TailError::DivergenceSuspected { terms: m });
                    }
                    let w = weight(m);
                    if !w.is_zero() {
                        let term = Scalar::from(w) * t;
                        running.push(term.to_f64());
                        terms.push(term);
                    }
                    if m < from.max(min_stop) {
                        continue;
                    }
                    let rho = q * ratio(m + 1);
                    if rho >= 1.0 {
                        continue;
                    }
                    let residual = majorant(m + 1) * c * q.powf((m + 1) as f64) / (1.0 - rho);
                    let partial = compensated_sum(running.iter().copied()).abs();
                    if residual < self.epsilon * (partial + 1.0) {
                        let scale = self.scale.unwrap_or(1.0);
                        let value = self.finish(terms).to_approx();
                        return Ok(TailValue {
                            value,
                            residual_bound: Some(residual * scale),
                            terms: m,
                        });
                    }
                }
            }
        }
    }

    fn finish(&self, terms: Vec<Scalar>) -> Scalar {
        let sum = crate::combinat::sum_mixed(terms);
        match self.scale {
            Some(s) => Scalar::Approx(sum.to_f64() * s),
            None => sum,
        }
    }

    /// `E(C(N, m)) = Σ_{M>=m} C(M-1, m-1) Pr(N >= M)` for `m >= 1`.
    pub fn choose_from_tail(&self, m: usize) -> Result<TailValue> {
        if m == 0 {
            return Ok(TailValue {
                value: Scalar::one(),
                residual_bound: None,
                terms: 0,
            });
        }
        let j = m as u64;
        self.weighted_sum(
            |big_m| {
                if big_m < j {
                    BigInt::zero()
                } else {
                    choose((big_m - 1) as usize, m - 1)
                }
            },
            |big_m| binom_f64(big_m.saturating_sub(1), j - 1),
            // C(M, j-1)/C(M-1, j-1) = M/(M-j+1), non-increasing in M
            |big_m| big_m as f64 / (big_m + 1).saturating_sub(j).max(1) as f64,
            j,
        )
    }

    /// `E([N]_k) = k! Σ_{M>=k} C(M-1, k-1) Pr(N >= M)`.
    pub fn factorial_moment_from_tail(&self, k: usize) -> Result<TailValue> {
        let mut out = self.choose_from_tail(k)?;
        let f = factorial(k);
        out.value = Scalar::from(f.clone()) * out.value;
        out.residual_bound = out.residual_bound.map(|r| r * big_to_f64(&f));
        Ok(out)
    }

    /// `E(N^k) = Σ_m S(k, m) E(C(N, m))`.
    pub fn moment_from_tail(&self, k: usize) -> Result<TailValue> {
        if k == 0 {
            return self.choose_from_tail(0);
        }
        let mut values = Vec::with_capacity(k);
        let mut residual: Option<f64> = None;
        let mut terms = 0;
        for m in 1..=k {
            let s = surjections(k, m);
            let part = self.choose_from_tail(m)?;
            if let Some(r) = part.residual_bound {
                *residual.get_or_insert(0.0) += r * big_to_f64(&s);
            }
            terms = terms.max(part.terms);
            values.push(Scalar::from(s) * part.value);
        }
        Ok(TailValue {
            value: crate::combinat::sum_mixed(values),
            residual_bound: residual,
            terms,
        })
    }

    /// `E((N - μ)^k)` from the tail-based raw moments. The residual bound
    /// covers the truncation error of every raw moment and of `μ`:
    /// `Σ_j C(k,j) [δ_j (|μ|+δ_1)^{k-j} + |E(N^j)| ((|μ|+δ_1)^{k-j} - |μ|^{k-j})]`.
    pub fn central_from_tail(&self, k: usize) -> Result<TailValue> {
        let raws = (0..=k.max(1))
            .map(|j| self.moment_from_tail(j))
            .collect::<Result<Vec<_>>>()?;
        let values: Vec<Scalar> = raws.iter().map(|r| r.value.clone()).collect();
        let value =
            crate::bernoulli::central_from_raw(&values, k).expect("raw moments cover 0..=k");
        let residual = if raws.iter().all(|r| r.residual_bound.is_none()) {
            None
        } else {
            let delta = |j: usize| raws[j].residual_bound.unwrap_or(0.0);
            let mu = values[1].to_f64().abs();
            let shifted = mu + delta(1);
            let bound = (0..=k)
                .map(|j| {
                    let e = (k - j) as i32;
                    big_to_f64(&choose(k, j))
                        * (delta(j) * shifted.powi(e)
                            + values[j].to_f64().abs() * (shifted.powi(e) - mu.powi(e)))
                })
                .sum();
            Some(bound)
        };
        Ok(TailValue {
            value,
            residual_bound: residual,
            terms: raws.iter().map(|r| r.terms).max().unwrap_or(0),
        })
    }

    /// `E(N^k) = Σ_{i>=0} ((i+1)^k - i^k) Pr(N > i)`, computed without
    /// surjection counts as an independent check.
    pub fn moment_chakra(&self, k: usize) -> Result<TailValue> {
        if k == 0 {
            return self.choose_from_tail(0);
        }
        let kk = k as u32;
        self.weighted_sum(
            |big_m| BigInt::from(big_m).pow(kk) - BigInt::from(big_m - 1).pow(kk),
            // M^k - (M-1)^k <= k M^(k-1)
            |big_m| k as f64 * (big_m as f64).powi(k as i32 - 1),
            |big_m| ((big_m + 1) as f64 / big_m as f64).powi(k as i32 - 1),
            1,
        )
    }
}

fn big_to_f64(b: &BigInt) -> f64 {
    num_traits::ToPrimitive::to_f64(b).unwrap_or(f64::INFINITY)
}

fn binom_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Tail of a finite-support pmf on `0..=max` by suffix sums.
pub fn tail_from_pmf(pmf: impl Fn(u64) -> Scalar, max: u64) -> Result<CountDist> {
    let masses: Vec<Scalar> = (0..=max).map(&pmf).collect();
    if let Some(x) = masses.iter().position(|p| p.to_f64() < 0.0) {
        return Err(TailError::InvalidInput(format!("negative mass at x = {x}")));
    }
    let total = crate::combinat::sum_mixed(masses.iter().cloned());
    let normalized = match &total {
        Scalar::Exact(r) => r.is_one(),
        Scalar::Approx(x) => (x - 1.0).abs() <= 1e-9,
    };
    if !normalized {
        return Err(TailError::NotNormalized(total.to_string()));
    }
    // suffix[m] = Σ_{x>=m} pmf(x)
    let mut suffix = vec![Scalar::zero(); masses.len() + 1];
    for x in (0..masses.len()).rev() {
        suffix[x] = &suffix[x + 1] + &masses[x];
    }
    CountDist::new(
        move |m| suffix.get(m as usize).cloned().unwrap_or_else(Scalar::zero),
        SupportBound::Finite { max },
    )
}

impl DistSpec {
    /// The tail representation of this distribution, using its closed-form
    /// tail and, for infinite supports, a geometric decay certificate.
    pub fn count_dist(&self) -> Result<CountDist> {
        match self {
            DistSpec::Geometric { p } => {
                let q = p.complement();
                if q.is_zero() {
                    return Ok(CountDist::point_mass(1));
                }
                let qf = q.to_f64();
                let spec = self.clone();
                CountDist::new(
                    move |m| spec.tail(m),
                    SupportBound::Infinite {
                        c: 1.0 / qf,
                        q: qf,
                        from: 1,
                    },
                )
            }
            DistSpec::Poisson { lambda } => {
                let lf = lambda.to_f64();
                if lambda.is_zero() {
                    return Ok(CountDist::point_mass(0));
                }
                // past ℓ = 2λ the terms λ^ℓ/ℓ! at least halve, so
                // Σ_{ℓ>=M} λ^ℓ/ℓ! <= 2 (λ^M0/M0!) 2^M0 (1/2)^M for M >= M0
                let m0 = (2.0 * lf).ceil().max(1.0) as u64;
                let head = (1..=m0).fold(1.0, |acc, i| acc * lf / i as f64);
                let c = 2.0 * head * 2f64.powf(m0 as f64);
                let support = SupportBound::Infinite {
                    c,
                    q: 0.5,
                    from: m0,
                };
                match lambda {
                    Scalar::Exact(l) => {
                        let l = l.clone();
                        CountDist::scaled(
                            move |m| Scalar::Exact(poisson_scaled_tail(&l, m)),
                            support,
                            Some((-lf).exp()),
                        )
                    }
                    Scalar::Approx(_) => {
                        let spec = self.clone();
                        let scale = (-lf).exp();
                        CountDist::scaled(
                            move |m| Scalar::Approx(spec.tail(m).to_f64() / scale),
                            support,
                            Some(scale),
                        )
                    }
                }
            }
            _ => {
                let max = self
                    .support()
                    .max
                    .expect("every other family has finite support");
                let spec = self.clone();
                CountDist::new(move |m| spec.tail(m), SupportBound::Finite { max })
            }
        }
    }
}

/// `Σ_x x^k pmf(x)` over `0..=max`, the reference value for finite supports.
pub fn moment_from_pmf(pmf: impl Fn(u64) -> Scalar, max: u64, k: usize) -> Scalar {
    crate::combinat::sum_mixed((0..=max).map(|x| {
        let xk = BigInt::from(x).pow(k as u32);
        Scalar::from(xk) * pmf(x)
    }))
}
