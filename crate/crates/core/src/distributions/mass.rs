//! Probability masses, upper tails and joint expectations.

use num_traits::ToPrimitive;

use super::{DistError, DistSpec, Result};
use crate::bernoulli::{JointModel, MAX_GENERAL_N};
use crate::combinat::{choose, factorial, falling, sign, sum_mixed, Rational, Scalar};

/// `C(n, l)^exp`, exact for integral exponents.
pub(super) fn binom_power(n: usize, l: usize, exp: f64) -> Scalar {
    let c = choose(n, l);
    if exp.fract() == 0.0 && exp.abs() <= i32::MAX as f64 {
        Scalar::Exact(Rational::from(c).pow(exp as i32))
    } else {
        Scalar::Approx(c.to_f64().unwrap_or(f64::INFINITY).powf(exp))
    }
}

/// `C(n, l)^exp p^l (1-p)^{n-l}`.
pub(super) fn cmp_term(n: usize, p: &Scalar, l: usize, exp: f64) -> Scalar {
    binom_power(n, l, exp) * p.pow(l as i32) * p.complement().pow((n - l) as i32)
}

/// Normalizing constant `Σ_j C(n,j)^ν p^j (1-p)^{n-j}`.
pub(super) fn cmp_normalizer(n: usize, p: &Scalar, nu: f64) -> Scalar {
    sum_mixed((0..=n).map(|j| cmp_term(n, p, j, nu)))
}

fn ratio_of_fallings(top: usize, bottom: usize, m: usize) -> Scalar {
    let num = falling(&num_bigint::BigInt::from(top), m);
    let den = falling(&num_bigint::BigInt::from(bottom), m);
    if num == num_bigint::BigInt::from(0) {
        Scalar::zero()
    } else {
        Scalar::Exact(Rational::new(num, den))
    }
}

fn exp_neg(lambda: &Scalar) -> f64 {
    (-lambda.to_f64()).exp()
}

/// `Σ_{ℓ >= m} λ^ℓ / ℓ!` as an exact rational, summed until the omitted
/// remainder is below `2^-200` of the partial sum. Multiplying by `e^{-λ}`
/// gives the Poisson upper tail `Pr(N >= m)`.
pub fn poisson_scaled_tail(lambda: &Rational, m: u64) -> Rational {
    if lambda.is_zero() {
        return if m == 0 {
            Rational::one()
        } else {
            Rational::zero()
        };
    }
    let mut term = Rational::one();
    for l in 1..=m {
        term = term * lambda / Rational::from(l);
    }
    let two_lambda = lambda.to_f64() * 2.0;
    let tiny = 2f64.powi(-200);
    let mut sum = Rational::zero();
    let mut l = m;
    loop {
        sum = &sum + &term;
        l += 1;
        term = term * lambda / Rational::from(l);
        // past ℓ = 2λ each term at least halves, so the remainder is < 2·term
        if (l as f64) > two_lambda && term.to_f64() <= tiny * sum.to_f64() {
            break;
        }
    }
    sum
}

impl DistSpec {
    /// `E(Y_{i1} ... Y_{im})` for any `m` distinct indicators of an
    /// exchangeable Bernoulli-sum construction.
    pub fn joint_expectation(&self, m: usize) -> Result<Scalar> {
        let n = self
            .trial_count()
            .ok_or(DistError::NotBernoulliSum(self.name()))?;
        if m > n {
            return Err(DistError::InvalidArgument(format!(
                "subset size {m} exceeds the {n} indicators"
            )));
        }
        Ok(match self {
            DistSpec::Binomial { p, .. } => p.pow(m as i32),
            DistSpec::PoissonBinomial { .. } => {
                return Err(DistError::NotExchangeable(self.name()))
            }
            DistSpec::Hypergeometric {
                population,
                successes,
                ..
            } => ratio_of_fallings(*successes, *population, m),
            DistSpec::CmpBinomial { n, p, nu } => {
                let terms = (m..=*n)
                    .map(|l| Scalar::from(choose(n - m, l - m)) * cmp_term(*n, p, l, nu - 1.0));
                sum_mixed(terms) / cmp_normalizer(*n, p, *nu)
            }
            DistSpec::EmptyUrns { urns, balls } => {
                if *balls == 0 {
                    Scalar::one()
                } else {
                    ratio_of_fallings(urns - 1, balls + urns - 1, m)
                }
            }
            DistSpec::Matching { n } => {
                Scalar::Exact(Rational::new(factorial(n - m), factorial(*n)))
            }
            _ => unreachable!("non-Bernoulli-sum specs have no trial count"),
        })
    }

    /// Joint expectation of the indicators at `indices` (distinct, 0-based).
    pub fn subset_joint(&self, indices: &[usize]) -> Result<Scalar> {
        match self {
            DistSpec::PoissonBinomial { probs } => indices
                .iter()
                .map(|&i| {
                    probs.get(i).cloned().ok_or_else(|| {
                        DistError::InvalidArgument(format!("index {i} out of range"))
                    })
                })
                .product(),
            _ => self.joint_expectation(indices.len()),
        }
    }

    /// The Bernoulli family behind this distribution.
    pub fn as_joint_model(&self) -> Result<JointModel> {
        let n = self
            .trial_count()
            .ok_or(DistError::NotBernoulliSum(self.name()))?;
        let model = match self {
            DistSpec::PoissonBinomial { probs } if probs.len() <= MAX_GENERAL_N => {
                let probs = probs.clone();
                JointModel::general(n, move |idx| {
                    idx.iter().map(|&i| probs[i].clone()).product()
                })
            }
            DistSpec::PoissonBinomial { probs } => JointModel::independent(probs.clone()),
            _ => {
                let spec = self.clone();
                JointModel::exchangeable(n, move |m| {
                    spec.joint_expectation(m)
                        .expect("subset size within the validated range")
                })
            }
        };
        model.map_err(|e| DistError::InvalidParameter(e.to_string()))
    }

    /// `Pr(X = x)`; zero outside the support.
    pub fn pmf(&self, x: u64) -> Scalar {
        let support = self.support();
        if x < support.min || support.max.is_some_and(|max| x > max) {
            return Scalar::zero();
        }
        let xu = x as usize;
        match self {
            DistSpec::Binomial { n, p } => {
                Scalar::from(choose(*n, xu))
                    * p.pow(xu as i32)
                    * p.complement().pow((n - xu) as i32)
            }
            DistSpec::PoissonBinomial { probs } => {
                let mut pmf = vec![Scalar::zero(); probs.len() + 1];
                pmf[0] = Scalar::one();
                for (i, p) in probs.iter().enumerate() {
                    let q = p.complement();
                    for j in (0..=i + 1).rev() {
                        let stay = &pmf[j] * &q;
                        pmf[j] = if j > 0 { stay + &pmf[j - 1] * p } else { stay };
                    }
                }
                pmf.swap_remove(xu)
            }
            DistSpec::Hypergeometric {
                population,
                successes,
                draws,
            } => {
                if xu > *draws {
                    return Scalar::zero();
                }
                let num = choose(*successes, xu) * choose(population - successes, draws - xu);
                Scalar::Exact(Rational::new(num, choose(*population, *draws)))
            }
            DistSpec::CmpBinomial { n, p, nu } => {
                cmp_term(*n, p, xu, *nu) / cmp_normalizer(*n, p, *nu)
            }
            DistSpec::EmptyUrns { urns, balls } => {
                if *balls == 0 {
                    return if xu == *urns {
                        Scalar::one()
                    } else {
                        Scalar::zero()
                    };
                }
                let occupied = urns - xu;
                if occupied == 0 {
                    return Scalar::zero();
                }
                let ways = choose(*urns, xu) * choose(balls - 1, occupied - 1);
                Scalar::Exact(Rational::new(ways, choose(balls + urns - 1, *balls)))
            }
            DistSpec::Matching { n } => {
                // (1/x!) Σ_{j=0}^{n-x} (-1)^j / j!
                let inner: Rational = (0..=n - xu)
                    .map(|j| Rational::new(sign(j), factorial(j)))
                    .sum();
                Scalar::Exact(inner / Rational::from(factorial(xu)))
            }
            DistSpec::Poisson { lambda } => match lambda {
                Scalar::Exact(l) => {
                    let ratio = l.pow(xu as i32) / Rational::from(factorial(xu));
                    Scalar::Approx(ratio.to_f64() * exp_neg(lambda))
                }
                Scalar::Approx(l) => {
                    let mut term = (-l).exp();
                    for i in 1..=xu {
                        term *= l / i as f64;
                    }
                    Scalar::Approx(term)
                }
            },
            DistSpec::Geometric { p } => p.complement().pow(xu as i32 - 1) * p,
            DistSpec::Soliton { r } => {
                if xu == 1 {
                    Scalar::ratio(1, *r as i64)
                } else {
                    Scalar::ratio(1, (xu * (xu - 1)) as i64)
                }
            }
            DistSpec::Benford { base } => {
                let ln_b = (*base as f64).ln();
                Scalar::Approx(((x + 1) as f64).ln() / ln_b - (x as f64).ln() / ln_b)
            }
        }
    }

    /// Upper tail `Pr(X >= m)`; `tail(0) = 1`.
    pub fn tail(&self, m: u64) -> Scalar {
        let support = self.support();
        if m <= support.min {
            return Scalar::one();
        }
        if support.max.is_some_and(|max| m > max) {
            return Scalar::zero();
        }
        match self {
            DistSpec::Soliton { r } => {
                // (r-1)/r - (m-2)/(m-1) for 2 <= m <= r
                Scalar::ratio(*r as i64 - 1, *r as i64) - Scalar::ratio(m as i64 - 2, m as i64 - 1)
            }
            DistSpec::Benford { base } => {
                Scalar::Approx(1.0 - (m as f64).ln() / (*base as f64).ln())
            }
            DistSpec::Geometric { p } => p.complement().pow(m as i32 - 1),
            DistSpec::Poisson { lambda } => match lambda {
                Scalar::Exact(l) => {
                    Scalar::Approx(poisson_scaled_tail(l, m).to_f64() * exp_neg(lambda))
                }
                Scalar::Approx(l) => {
                    let mut term = (-l).exp();
                    for i in 1..=m {
                        term *= l / i as f64;
                    }
                    let mut terms = Vec::new();
                    let mut i = m;
                    let first = term;
                    loop {
                        terms.push(term);
                        i += 1;
                        term *= l / i as f64;
                        if (i as f64) > 2.0 * l && term <= 1e-20 * first {
                            break;
                        }
                    }
                    Scalar::Approx(crate::combinat::compensated_sum(terms))
                }
            },
            _ => {
                let max = support.max.expect("remaining specs have finite support");
                sum_mixed((m..=max).map(|x| self.pmf(x)))
            }
        }
    }
}
