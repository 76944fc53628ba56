//! Truncated moment, factorial-moment and probability generating functions.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::combinat::{choose, factorial, sign, stirling2, surjections, Rational, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenfunError {
    #[error("shifting a truncated factorial series does not give a truncated pgf; the series must be an exact polynomial")]
    TruncationUnsound,
    #[error("alternating sum for Pr(X = {x}) has not settled by j = {jmax}")]
    AlternatingSeriesUnstable { x: usize, jmax: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, GenfunError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Mgf,
    Fmgf,
    Pgf,
}

impl SeriesKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesKind::Mgf => "mgf",
            SeriesKind::Fmgf => "fmgf",
            SeriesKind::Pgf => "pgf",
        }
    }
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeriesKind {
    type Err = GenfunError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mgf" => Ok(SeriesKind::Mgf),
            "fmgf" => Ok(SeriesKind::Fmgf),
            "pgf" => Ok(SeriesKind::Pgf),
            other => Err(GenfunError::InvalidInput(format!(
                "unknown series kind `{other}`"
            ))),
        }
    }
}

/// Coefficients `c_0..=c_K` of a generating function in `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesPoly {
    pub kind: SeriesKind,
    pub coeffs: Vec<Scalar>,
}

impl SeriesPoly {
    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// JSON form `{"kind":..,"order":..,"coeffs":[..]}` with coefficients
    /// rendered as strings.
    pub fn to_json(&self, float: bool, digits: usize) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind.as_str(),
            "order": self.order(),
            "coeffs": self.coeffs.iter().map(|c| c.render(float, digits)).collect::<Vec<_>>(),
        })
    }
}

impl Serialize for SeriesPoly {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        self.to_json(false, 17).serialize(serializer)
    }
}

fn divided_by_factorials(kind: SeriesKind, values: &[Scalar], order: usize) -> Result<SeriesPoly> {
    if values.len() <= order {
        return Err(GenfunError::InvalidInput(format!(
            "need {} values for order {order}, got {}",
            order + 1,
            values.len()
        )));
    }
    if values[0] != Scalar::one() && (values[0].to_f64() - 1.0).abs() > 1e-12 {
        return Err(GenfunError::InvalidInput(format!(
            "the order-0 value must be 1, got {}",
            values[0]
        )));
    }
    let coeffs = values[..=order]
        .iter()
        .enumerate()
        .map(|(k, v)| v / Scalar::from(factorial(k)))
        .collect();
    Ok(SeriesPoly { kind, coeffs })
}

/// `c_k = E(X^k)/k!`.
pub fn mgf_series(moments: &[Scalar], order: usize) -> Result<SeriesPoly> {
    divided_by_factorials(SeriesKind::Mgf, moments, order)
}

/// `c_k = E([X]_k)/k!`.
pub fn fmgf_series(factorials: &[Scalar], order: usize) -> Result<SeriesPoly> {
    divided_by_factorials(SeriesKind::Fmgf, factorials, order)
}

/// `G(s) = H(s - 1)`, expanded by the binomial theorem.
///
/// Only sound when `h` is the whole factorial generating polynomial, which
/// the caller asserts with `exact_degree`.
pub fn pgf_from_fmgf(h: &SeriesPoly, exact_degree: bool) -> Result<SeriesPoly> {
    if h.kind != SeriesKind::Fmgf {
        return Err(GenfunError::InvalidInput(format!(
            "expected an fmgf series, got {}",
            h.kind
        )));
    }
    if !exact_degree {
        return Err(GenfunError::TruncationUnsound);
    }
    let order = h.order();
    let mut coeffs = vec![Scalar::zero(); order + 1];
    for (k, hk) in h.coeffs.iter().enumerate() {
        if hk.is_zero() {
            continue;
        }
        for (j, c) in coeffs.iter_mut().enumerate().take(k + 1) {
            let w = Scalar::from(choose(k, j) * sign(k - j));
            *c = &*c + w * hk;
        }
    }
    Ok(SeriesPoly {
        kind: SeriesKind::Pgf,
        coeffs,
    })
}

/// `Pr(X = x) = Σ_{j=x}^{jmax} (-1)^{x+j} C(j, x) E([X]_j)/j!`.
///
/// Exact when `E([X]_j) = 0` for `j > jmax`. If `factorials` extends past
/// `jmax` with a term that still matters, the truncated sum is rejected.
pub fn pmf_from_factorial_moments(factorials: &[Scalar], x: usize, jmax: usize) -> Result<Scalar> {
    if factorials.len() <= jmax {
        return Err(GenfunError::InvalidInput(format!(
            "need factorial moments up to order {jmax}, got {}",
            factorials.len().saturating_sub(1)
        )));
    }
    let term = |j: usize| {
        Scalar::from(choose(j, x) * sign(x + j)) * &factorials[j] / Scalar::from(factorial(j))
    };
    if let Some(next) = factorials.get(jmax + 1) {
        if x <= jmax + 1 && !next.is_zero() && term(jmax + 1).to_f64().abs() >= 1e-12 {
            return Err(GenfunError::AlternatingSeriesUnstable { x, jmax });
        }
    }
    if x > jmax {
        return Ok(Scalar::zero());
    }
    Ok(crate::combinat::sum_mixed((x..=jmax).map(term)))
}

/// `|E(B^k) - E(P^k)|` for `B ~ Binomial(n, λ/n)` and `P ~ Poisson(λ)`.
pub fn poisson_limit_gap(n: usize, lambda: &Scalar, k: usize) -> Result<Scalar> {
    if n == 0 {
        return Err(GenfunError::InvalidInput("n must be at least 1".into()));
    }
    if lambda.to_f64() < 0.0 || lambda.to_f64() > n as f64 {
        return Err(GenfunError::InvalidInput(format!(
            "need 0 <= λ <= n, got λ = {lambda}"
        )));
    }
    let p = lambda / Scalar::from(Rational::from(n as i64));
    let binomial: Scalar = (1..=k)
        .map(|m| Scalar::from(surjections(k, m) * choose(n, m)) * p.pow(m as i32))
        .sum();
    let poisson: Scalar = (1..=k)
        .map(|m| Scalar::from(stirling2(k, m)) * lambda.pow(m as i32))
        .sum();
    Ok((binomial - poisson).abs())
}
