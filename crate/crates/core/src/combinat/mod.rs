//! Exact combinatorial kernels: surjection counts, Stirling and Bell numbers,
//! binomial coefficients and falling factorials.
//!
//! Everything here is a pure function on big integers or rationals.

mod rational;
mod scalar;

use std::ops::{Mul, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

pub use rational::{ParseRationalError, Rational};
pub use scalar::{compensated_sum, format_significant, sum_mixed, Scalar};

/// `n!` for `n >= 0`.
pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Binomial coefficient with the combinatorial zero extension: `C(a, b) = 0`
/// whenever `a < 0`, `b < 0` or `b > a`.
pub fn binom(a: i64, b: i64) -> BigInt {
    if a < 0 || b < 0 || b > a {
        return BigInt::zero();
    }
    let b = b.min(a - b);
    let mut acc = BigInt::one();
    for i in 0..b {
        acc *= BigInt::from(a - i);
        acc /= BigInt::from(i + 1);
    }
    acc
}

/// `binom` for non-negative arguments.
pub fn choose(a: usize, b: usize) -> BigInt {
    binom(a as i64, b as i64)
}

/// Number of surjections from a `k`-set onto an `m`-set,
/// `S(k,m) = Σ_{v=0}^{m-1} (-1)^v C(m,v) (m-v)^k`, with `S(0,0) = 1`.
pub fn surjections(k: usize, m: usize) -> BigInt {
    if m > k {
        return BigInt::zero();
    }
    if m == 0 {
        return if k == 0 {
            BigInt::one()
        } else {
            BigInt::zero()
        };
    }
    let mut total = BigInt::zero();
    for v in 0..m {
        let term = choose(m, v) * num_traits::pow(BigInt::from(m - v), k);
        if v.is_odd() {
            total -= term;
        } else {
            total += term;
        }
    }
    total
}

/// Stirling number of the second kind, `S(k,m) / m!`.
pub fn stirling2(k: usize, m: usize) -> BigInt {
    let (q, r) = surjections(k, m).div_rem(&factorial(m));
    debug_assert!(r.is_zero());
    q
}

/// Signed Stirling number of the first kind: the coefficient of `x^m` in
/// the falling factorial `x(x-1)...(x-k+1)`. Zero for `m > k`.
pub fn stirling1_signed(k: usize, m: usize) -> BigInt {
    if m > k {
        return BigInt::zero();
    }
    // row[j] holds the coefficient of x^j in [x]_i
    let mut row = vec![BigInt::zero(); k + 1];
    row[0] = BigInt::one();
    for i in 0..k {
        let shift = BigInt::from(i);
        for j in (0..=i + 1).rev() {
            let lower = if j > 0 {
                row[j - 1].clone()
            } else {
                BigInt::zero()
            };
            row[j] = lower - &shift * &row[j];
        }
    }
    row[m].clone()
}

/// Bell number `B_k`, the number of partitions of a `k`-set.
pub fn bell(k: usize) -> BigInt {
    if k == 0 {
        return BigInt::one();
    }
    (1..=k).map(|m| stirling2(k, m)).sum()
}

/// Falling factorial `[x]_k = x (x-1) ... (x-k+1)`, with `[x]_0 = 1`.
pub fn falling<T>(x: &T, k: usize) -> T
where
    T: Clone + From<i64> + Mul<Output = T> + Sub<Output = T>,
{
    let mut acc = T::from(1);
    for i in 0..k {
        acc = acc * (x.clone() - T::from(i as i64));
    }
    acc
}

/// Exact harmonic number `H_r`.
pub fn harmonic(r: usize) -> Rational {
    (1..=r).map(|i| Rational::new(1, i as i64)).sum()
}

/// Closed form of `Σ_{M=0}^{r} M [M]_m`:
/// `(m+1)! C(r+1, r-m-1) + m·m! C(r+1, r-m)`.
pub fn weighted_falling_sum(m: usize, r: usize) -> BigInt {
    let (m_i, r_i) = (m as i64, r as i64);
    factorial(m + 1) * binom(r_i + 1, r_i - m_i - 1)
        + BigInt::from(m) * factorial(m) * binom(r_i + 1, r_i - m_i)
}

/// `(-1)^e` as a sign multiplier.
pub(crate) fn sign(e: usize) -> i64 {
    if e.is_multiple_of(2) {
        1
    } else {
        -1
    }
}
