//! JSON and flag input for distribution specs.

use serde::{Deserialize, Serialize};

use super::{DistError, DistSpec, Result};
use crate::combinat::Scalar;

/// A numeric field written as an integer, a float, or a string such as
/// `"1/3"` or `"0.25"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumberInput {
    Int(i64),
    Float(f64),
    Text(String),
}

impl NumberInput {
    /// Floats and decimal strings become approximate values.
    pub fn to_scalar(&self, field: &str) -> Result<Scalar> {
        match self {
            NumberInput::Int(i) => Ok(Scalar::from(*i)),
            NumberInput::Float(x) => Ok(Scalar::Approx(*x)),
            NumberInput::Text(s) => s
                .parse()
                .map_err(|e| DistError::InvalidParameter(format!("{field}: {e}"))),
        }
    }

    pub fn to_f64(&self, field: &str) -> Result<f64> {
        self.to_scalar(field).map(|s| s.to_f64())
    }
}

impl From<&str> for NumberInput {
    fn from(s: &str) -> Self {
        NumberInput::Text(s.to_string())
    }
}

/// Flat description of a distribution, e.g.
/// `{"dist":"binomial","n":10,"p":"1/2"}`.
///
/// `n` is the trial count, sample size, urn count or pair count depending on
/// `dist`; the hypergeometric population and success count are `N` and `g`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistInput {
    pub dist: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<NumberInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<NumberInput>>,
    #[serde(
        default,
        rename = "N",
        alias = "population",
        skip_serializing_if = "Option::is_none"
    )]
    pub population: Option<usize>,
    #[serde(
        default,
        rename = "g",
        alias = "successes",
        skip_serializing_if = "Option::is_none"
    )]
    pub successes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<NumberInput>,
    #[serde(default, alias = "l", skip_serializing_if = "Option::is_none")]
    pub balls: Option<usize>,
    #[serde(default, alias = "λ", skip_serializing_if = "Option::is_none")]
    pub lambda: Option<NumberInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, alias = "b", skip_serializing_if = "Option::is_none")]
    pub base: Option<usize>,
}

fn need<T: Clone>(value: &Option<T>, field: &str, dist: &str) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| DistError::InvalidParameter(format!("{dist} requires `{field}`")))
}

impl DistInput {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| DistError::InvalidParameter(e.to_string()))
    }
}

impl DistSpec {
    /// Builds a checked spec from flat input.
    pub fn from_input(input: &DistInput) -> Result<Self> {
        let dist = input.dist.trim().to_ascii_lowercase().replace('_', "-");
        let d = dist.as_str();
        match d {
            "binomial" => DistSpec::binomial(
                need(&input.n, "n", d)?,
                need(&input.p, "p", d)?.to_scalar("p")?,
            ),
            "poisson-binomial" => {
                let probs = need(&input.probs, "probs", d)?
                    .iter()
                    .map(|p| p.to_scalar("probs"))
                    .collect::<Result<Vec<_>>>()?;
                DistSpec::poisson_binomial(probs)
            }
            "hypergeometric" => DistSpec::hypergeometric(
                need(&input.population, "N", d)?,
                need(&input.successes, "g", d)?,
                need(&input.n, "n", d)?,
            ),
            "cmp-binomial" => DistSpec::cmp_binomial(
                need(&input.n, "n", d)?,
                need(&input.p, "p", d)?.to_scalar("p")?,
                need(&input.nu, "nu", d)?.to_f64("nu")?,
            ),
            "empty-urns" => {
                DistSpec::empty_urns(need(&input.n, "n", d)?, need(&input.balls, "balls", d)?)
            }
            "matching" => DistSpec::matching(need(&input.n, "n", d)?),
            "poisson" => DistSpec::poisson(need(&input.lambda, "lambda", d)?.to_scalar("lambda")?),
            "geometric" => DistSpec::geometric(need(&input.p, "p", d)?.to_scalar("p")?),
            "soliton" => DistSpec::soliton(need(&input.r, "r", d)?),
            "benford" => DistSpec::benford(need(&input.base, "base", d)?),
            _ => Err(DistError::UnknownDistribution(input.dist.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rational_and_float_probabilities() {
        let exact = DistInput::from_json(r#"{"dist":"binomial","n":10,"p":"1/2"}"#).unwrap();
        let spec = DistSpec::from_input(&exact).unwrap();
        assert_eq!(spec, DistSpec::binomial(10, Scalar::ratio(1, 2)).unwrap());
        assert!(spec.is_exact());

        let approx = DistInput::from_json(r#"{"dist":"binomial","n":10,"p":0.5}"#).unwrap();
        assert!(!DistSpec::from_input(&approx).unwrap().is_exact());
    }

    #[test]
    fn hypergeometric_fields() {
        let input = DistInput::from_json(r#"{"dist":"hypergeometric","N":8,"g":3,"n":4}"#).unwrap();
        assert_eq!(
            DistSpec::from_input(&input).unwrap(),
            DistSpec::hypergeometric(8, 3, 4).unwrap()
        );
    }

    #[test]
    fn rejects_bad_input() {
        let unknown = DistInput::from_json(r#"{"dist":"zipf"}"#).unwrap();
        assert!(matches!(
            DistSpec::from_input(&unknown),
            Err(DistError::UnknownDistribution(_))
        ));
        let missing = DistInput::from_json(r#"{"dist":"binomial","n":3}"#).unwrap();
        assert!(DistSpec::from_input(&missing).is_err());
        let out_of_range = DistInput::from_json(r#"{"dist":"geometric","p":"3/2"}"#).unwrap();
        assert!(DistSpec::from_input(&out_of_range).is_err());
        assert!(DistInput::from_json(r#"{"dist":"matching","n":3,"x":1}"#).is_err());
    }
}
