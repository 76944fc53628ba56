//! Closed-form moments.
//!
//! Every moment here is assembled from `E(C(X, m))`: raw moments as
//! `Σ_m S(k,m) E(C(X,m))` (surjection counts), factorial moments as
//! `k! E(C(X,k))`, and central moments from the raw ones by binomial
//! expansion around the mean.

use num_traits::ToPrimitive;

use super::mass::{binom_power, cmp_normalizer};
use super::{DistSpec, MomentType};
use crate::bernoulli::central_from_raw;
use crate::combinat::{
    bell, binom, choose, factorial, falling, harmonic, stirling2, sum_mixed, surjections, Rational,
    Scalar,
};

fn falling_ratio(a: usize, b: usize, k: usize) -> Rational {
    let num = falling(&num_bigint::BigInt::from(a), k);
    if num == num_bigint::BigInt::from(0) {
        return Rational::zero();
    }
    Rational::new(num, falling(&num_bigint::BigInt::from(b), k))
}

/// Soliton `E(C(N, m))` for `m >= 2`:
/// `(r-1)/r C(r,m) - C(r-1,m) - (m-2)/(m-1) C(r-1,m-1)`.
fn soliton_choose(r: usize, m: usize) -> Rational {
    let (r_i, m_i) = (r as i64, m as i64);
    Rational::new(r_i - 1, r_i) * Rational::from(binom(r_i, m_i))
        - Rational::from(binom(r_i - 1, m_i))
        - Rational::new(m_i - 2, m_i - 1) * Rational::from(binom(r_i - 1, m_i - 1))
}

/// The bracket as it is usually printed, with `C(r-3, ·)` arguments and a
/// squared `(m-2)` coefficient. It only agrees with the true value for small
/// `m` and is kept to document the discrepancy.
fn soliton_choose_printed(r: usize, m: usize) -> Rational {
    let (r_i, m_i) = (r as i64, m as i64);
    Rational::new(r_i - 1, r_i) * Rational::from(binom(r_i, m_i))
        - Rational::from(binom(r_i - 3, m_i))
        - Rational::from((m_i - 2) * (m_i - 2)) * Rational::from(binom(r_i - 3, m_i - 1))
}

/// Soliton moments computed with the printed coefficients instead of the
/// corrected ones. Raw moments use `H_r + Σ_{m>=2} S(k,m)[...]`.
pub fn soliton_as_printed(r: usize, kind: MomentType, k: usize) -> Scalar {
    let choose_printed = |m: usize| match m {
        0 => Rational::one(),
        1 => harmonic(r),
        _ => soliton_choose_printed(r, m),
    };
    let raw = |j: usize| -> Scalar {
        if j == 0 {
            return Scalar::one();
        }
        Scalar::Exact(
            (1..=j)
                .map(|m| Rational::from(surjections(j, m)) * choose_printed(m))
                .sum(),
        )
    };
    match kind {
        MomentType::Raw => raw(k),
        MomentType::Factorial => Scalar::Exact(Rational::from(factorial(k)) * choose_printed(k)),
        MomentType::Central => {
            let raws: Vec<Scalar> = (0..=k.max(1)).map(raw).collect();
            central_from_raw(&raws, k).expect("raw moments cover 0..=k")
        }
    }
}

impl DistSpec {
    /// `E(C(X, m))` in closed form.
    pub fn choose_moment(&self, m: usize) -> Scalar {
        if m == 0 {
            return Scalar::one();
        }
        match self {
            DistSpec::Binomial { n, p } => Scalar::from(choose(*n, m)) * p.pow(m as i32),
            DistSpec::PoissonBinomial { probs } => {
                // m-th elementary symmetric polynomial of the probabilities
                let mut e = vec![Scalar::zero(); m + 1];
                e[0] = Scalar::one();
                for (i, p) in probs.iter().enumerate() {
                    for j in (1..=m.min(i + 1)).rev() {
                        let add = &e[j - 1] * p;
                        e[j] = &e[j] + add;
                    }
                }
                e.swap_remove(m)
            }
            DistSpec::Hypergeometric {
                population,
                successes,
                draws,
            } => Scalar::Exact(
                Rational::from(choose(*draws, m)) * falling_ratio(*successes, *population, m),
            ),
            DistSpec::CmpBinomial { n, p, nu } => {
                // (1/C) Σ_{ℓ=m}^{n} C(ℓ,m) C(n,ℓ)^ν p^ℓ (1-p)^{n-ℓ}
                if m > *n {
                    return Scalar::zero();
                }
                let terms = (m..=*n).map(|l| {
                    Scalar::from(choose(l, m))
                        * binom_power(*n, l, *nu)
                        * p.pow(l as i32)
                        * p.complement().pow((n - l) as i32)
                });
                sum_mixed(terms) / cmp_normalizer(*n, p, *nu)
            }
            DistSpec::EmptyUrns { urns, balls } => {
                let subsets = Rational::from(choose(*urns, m));
                if *balls == 0 {
                    Scalar::Exact(subsets)
                } else {
                    Scalar::Exact(subsets * falling_ratio(urns - 1, balls + urns - 1, m))
                }
            }
            DistSpec::Matching { n } => {
                if m > *n {
                    Scalar::zero()
                } else {
                    Scalar::Exact(Rational::new(1, factorial(m)))
                }
            }
            DistSpec::Poisson { lambda } => lambda.pow(m as i32) / Scalar::from(factorial(m)),
            DistSpec::Geometric { p } => p.complement().pow(m as i32 - 1) / p.pow(m as i32),
            DistSpec::Soliton { r } => {
                if m == 1 {
                    Scalar::Exact(harmonic(*r))
                } else {
                    Scalar::Exact(soliton_choose(*r, m))
                }
            }
            DistSpec::Benford { base } => {
                // C(b-1,m) - Σ_{M=m}^{b-1} C(M-1,m-1) log_b M
                let ln_b = (*base as f64).ln();
                let logs = (m..*base).map(|big_m| {
                    -choose(big_m - 1, m - 1).to_f64().unwrap_or(f64::INFINITY)
                        * (big_m as f64).ln()
                        / ln_b
                });
                let head = choose(base - 1, m).to_f64().unwrap_or(f64::INFINITY);
                Scalar::Approx(crate::combinat::compensated_sum(
                    std::iter::once(head).chain(logs),
                ))
            }
        }
    }

    /// Closed-form raw, central or factorial moment of order `k`.
    pub fn closed_form_moment(&self, kind: MomentType, k: usize) -> Scalar {
        match kind {
            MomentType::Factorial => self.closed_form_factorial(k),
            MomentType::Raw => self.closed_form_raw(k),
            MomentType::Central => {
                let raws: Vec<Scalar> = (0..=k.max(1)).map(|j| self.closed_form_raw(j)).collect();
                central_from_raw(&raws, k).expect("raw moments cover 0..=k")
            }
        }
    }

    /// Closed-form moments for `k = 0..=kmax`.
    pub fn closed_form_moments(&self, kind: MomentType, kmax: usize) -> Vec<Scalar> {
        match kind {
            MomentType::Central => {
                let raws: Vec<Scalar> =
                    (0..=kmax.max(1)).map(|j| self.closed_form_raw(j)).collect();
                (0..=kmax)
                    .map(|k| central_from_raw(&raws, k).expect("raw moments cover 0..=k"))
                    .collect()
            }
            _ => (0..=kmax)
                .map(|k| self.closed_form_moment(kind, k))
                .collect(),
        }
    }

    fn closed_form_factorial(&self, k: usize) -> Scalar {
        match self {
            DistSpec::Binomial { n, p } => {
                Scalar::from(falling(&num_bigint::BigInt::from(*n), k)) * p.pow(k as i32)
            }
            DistSpec::Hypergeometric {
                population,
                successes,
                draws,
            } => Scalar::Exact(
                Rational::from(falling(&num_bigint::BigInt::from(*draws), k))
                    * falling_ratio(*successes, *population, k),
            ),
            DistSpec::EmptyUrns { urns, balls } => {
                let head = Rational::from(falling(&num_bigint::BigInt::from(*urns), k));
                if *balls == 0 {
                    Scalar::Exact(head)
                } else {
                    Scalar::Exact(head * falling_ratio(urns - 1, balls + urns - 1, k))
                }
            }
            DistSpec::Matching { n } => {
                if k <= *n {
                    Scalar::one()
                } else {
                    Scalar::zero()
                }
            }
            DistSpec::Poisson { lambda } => lambda.pow(k as i32),
            _ => Scalar::from(factorial(k)) * self.choose_moment(k),
        }
    }

    fn closed_form_raw(&self, k: usize) -> Scalar {
        if k == 0 {
            return Scalar::one();
        }
        match self {
            DistSpec::Matching { n } => {
                // B_k, less the partitions with more than n blocks
                let excess: num_bigint::BigInt = (n + 1..=k).map(|m| stirling2(k, m)).sum();
                Scalar::from(bell(k) - excess)
            }
            DistSpec::Poisson { lambda } => (1..=k)
                .map(|m| Scalar::from(stirling2(k, m)) * lambda.pow(m as i32))
                .sum(),
            _ => {
                sum_mixed((1..=k).map(|m| Scalar::from(surjections(k, m)) * self.choose_moment(m)))
            }
        }
    }
}
