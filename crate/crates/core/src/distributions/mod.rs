//! Closed-form providers for classic count distributions.
//!
//! Six of them are built as Bernoulli sums with known joint expectations
//! (binomial, Poisson binomial, hypergeometric, CMP-binomial, empty urns,
//! matching) and bridge to the engine through [`DistSpec::as_joint_model`].
//! The remaining four (Poisson, geometric, ideal soliton, Benford) are
//! handled through their upper-tail probabilities.

mod closed_form;
mod mass;
mod parse;

use std::fmt;

use crate::combinat::Scalar;

pub use closed_form::soliton_as_printed;
pub use mass::poisson_scaled_tail;
pub use parse::{DistInput, NumberInput};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{0} is not a Bernoulli-sum construction; use the tail-moment route")]
    NotBernoulliSum(&'static str),
    #[error("{0} is not exchangeable; joint expectations depend on the chosen indices")]
    NotExchangeable(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown distribution `{0}`")]
    UnknownDistribution(String),
}

pub type Result<T> = std::result::Result<T, DistError>;

/// Moment family computed by [`DistSpec::closed_form_moment`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MomentType {
    Raw,
    Central,
    Factorial,
}

impl MomentType {
    pub fn as_str(self) -> &'static str {
        match self {
            MomentType::Raw => "raw",
            MomentType::Central => "central",
            MomentType::Factorial => "factorial",
        }
    }
}

/// A named distribution with its parameters.
///
/// Build through the checked constructors (or [`DistSpec::from_input`]) so
/// the parameter invariants hold.
#[derive(Clone, Debug, PartialEq)]
pub enum DistSpec {
    Binomial {
        n: usize,
        p: Scalar,
    },
    PoissonBinomial {
        probs: Vec<Scalar>,
    },
    /// `draws` items drawn without replacement from `population`, of which
    /// `successes` carry the trait.
    Hypergeometric {
        population: usize,
        successes: usize,
        draws: usize,
    },
    /// Conway-Maxwell-Poisson binomial; `nu = 1` is the binomial.
    CmpBinomial {
        n: usize,
        p: Scalar,
        nu: f64,
    },
    /// Number of empty urns after `balls` indistinguishable balls are placed
    /// uniformly at random (uniform over multisets) into `urns` urns.
    EmptyUrns {
        urns: usize,
        balls: usize,
    },
    /// Fixed points of a uniform random permutation of `n` items.
    Matching {
        n: usize,
    },
    Poisson {
        lambda: Scalar,
    },
    /// Number of tosses up to and including the first success.
    Geometric {
        p: Scalar,
    },
    /// Ideal soliton on `1..=r`.
    Soliton {
        r: usize,
    },
    /// Leading digit in base `base`, supported on `1..base`.
    Benford {
        base: usize,
    },
}

/// Support of a distribution: `min..=max`, with `max = None` for infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Support {
    pub min: u64,
    pub max: Option<u64>,
}

impl Support {
    pub fn is_finite(&self) -> bool {
        self.max.is_some()
    }
}

fn check_prob(name: &str, p: &Scalar) -> Result<()> {
    if p.to_f64().is_finite() && p.is_probability() {
        Ok(())
    } else {
        Err(DistError::InvalidParameter(format!(
            "{name} = {p} must lie in [0, 1]"
        )))
    }
}

impl DistSpec {
    pub fn binomial(n: usize, p: Scalar) -> Result<Self> {
        Self::Binomial { n, p }.validated()
    }

    pub fn poisson_binomial(probs: Vec<Scalar>) -> Result<Self> {
        Self::PoissonBinomial { probs }.validated()
    }

    pub fn hypergeometric(population: usize, successes: usize, draws: usize) -> Result<Self> {
        Self::Hypergeometric {
            population,
            successes,
            draws,
        }
        .validated()
    }

    pub fn cmp_binomial(n: usize, p: Scalar, nu: f64) -> Result<Self> {
        Self::CmpBinomial { n, p, nu }.validated()
    }

    pub fn empty_urns(urns: usize, balls: usize) -> Result<Self> {
        Self::EmptyUrns { urns, balls }.validated()
    }

    pub fn matching(n: usize) -> Result<Self> {
        Self::Matching { n }.validated()
    }

    pub fn poisson(lambda: Scalar) -> Result<Self> {
        Self::Poisson { lambda }.validated()
    }

    pub fn geometric(p: Scalar) -> Result<Self> {
        Self::Geometric { p }.validated()
    }

    pub fn soliton(r: usize) -> Result<Self> {
        Self::Soliton { r }.validated()
    }

    pub fn benford(base: usize) -> Result<Self> {
        Self::Benford { base }.validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Checks the parameter invariants.
    pub fn validate(&self) -> Result<()> {
        match self {
            DistSpec::Binomial { p, .. } => check_prob("p", p),
            DistSpec::PoissonBinomial { probs } => probs
                .iter()
                .enumerate()
                .try_for_each(|(i, p)| check_prob(&format!("p[{i}]"), p)),
            DistSpec::Hypergeometric {
                population,
                successes,
                draws,
            } => {
                if successes > population || draws > population {
                    Err(DistError::InvalidParameter(format!(
                        "need successes ({successes}) and draws ({draws}) <= population ({population})"
                    )))
                } else {
                    Ok(())
                }
            }
            DistSpec::CmpBinomial { p, nu, .. } => {
                check_prob("p", p)?;
                if nu.is_finite() {
                    Ok(())
                } else {
                    Err(DistError::InvalidParameter(format!(
                        "nu = {nu} must be finite"
                    )))
                }
            }
            DistSpec::EmptyUrns { urns, .. } => {
                if *urns == 0 {
                    Err(DistError::InvalidParameter("need at least one urn".into()))
                } else {
                    Ok(())
                }
            }
            DistSpec::Matching { .. } => Ok(()),
            DistSpec::Poisson { lambda } => {
                if lambda.to_f64().is_finite()
                    && lambda.cmp_value(&Scalar::zero()).is_some_and(|o| o.is_ge())
                {
                    Ok(())
                } else {
                    Err(DistError::InvalidParameter(format!(
                        "lambda = {lambda} must be non-negative"
                    )))
                }
            }
            DistSpec::Geometric { p } => {
                check_prob("p", p)?;
                if p.is_zero() {
                    Err(DistError::InvalidParameter(
                        "geometric p must be positive".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            DistSpec::Soliton { r } => {
                if *r < 2 {
                    Err(DistError::InvalidParameter(format!(
                        "soliton r = {r} must be >= 2"
                    )))
                } else {
                    Ok(())
                }
            }
            DistSpec::Benford { base } => {
                if *base < 2 {
                    Err(DistError::InvalidParameter(format!(
                        "benford base = {base} must be >= 2"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DistSpec::Binomial { .. } => "binomial",
            DistSpec::PoissonBinomial { .. } => "poisson-binomial",
            DistSpec::Hypergeometric { .. } => "hypergeometric",
            DistSpec::CmpBinomial { .. } => "cmp-binomial",
            DistSpec::EmptyUrns { .. } => "empty-urns",
            DistSpec::Matching { .. } => "matching",
            DistSpec::Poisson { .. } => "poisson",
            DistSpec::Geometric { .. } => "geometric",
            DistSpec::Soliton { .. } => "soliton",
            DistSpec::Benford { .. } => "benford",
        }
    }

    /// Number of indicators for the Bernoulli-sum constructions.
    pub fn trial_count(&self) -> Option<usize> {
        match self {
            DistSpec::Binomial { n, .. }
            | DistSpec::CmpBinomial { n, .. }
            | DistSpec::Matching { n } => Some(*n),
            DistSpec::PoissonBinomial { probs } => Some(probs.len()),
            DistSpec::Hypergeometric { draws, .. } => Some(*draws),
            DistSpec::EmptyUrns { urns, .. } => Some(*urns),
            DistSpec::Poisson { .. }
            | DistSpec::Geometric { .. }
            | DistSpec::Soliton { .. }
            | DistSpec::Benford { .. } => None,
        }
    }

    pub fn is_bernoulli_sum(&self) -> bool {
        self.trial_count().is_some()
    }

    pub fn support(&self) -> Support {
        let finite = |min: usize, max: usize| Support {
            min: min as u64,
            max: Some(max as u64),
        };
        match self {
            DistSpec::Geometric { p } if p.to_f64() == 1.0 => finite(1, 1),
            DistSpec::Poisson { lambda } if lambda.is_zero() => finite(0, 0),
            DistSpec::Poisson { .. } => Support { min: 0, max: None },
            DistSpec::Geometric { .. } => Support { min: 1, max: None },
            DistSpec::Soliton { r } => finite(1, *r),
            DistSpec::Benford { base } => finite(1, base - 1),
            _ => finite(0, self.trial_count().unwrap_or(0)),
        }
    }

    /// Whether every value this distribution produces is exact.
    pub fn is_exact(&self) -> bool {
        match self {
            DistSpec::Binomial { p, .. } | DistSpec::Geometric { p } => p.is_exact(),
            DistSpec::PoissonBinomial { probs } => probs.iter().all(Scalar::is_exact),
            DistSpec::CmpBinomial { p, nu, .. } => p.is_exact() && nu.fract() == 0.0,
            DistSpec::Poisson { lambda } => lambda.is_zero(),
            DistSpec::Benford { .. } => false,
            DistSpec::Hypergeometric { .. }
            | DistSpec::EmptyUrns { .. }
            | DistSpec::Matching { .. }
            | DistSpec::Soliton { .. } => true,
        }
    }
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistSpec::Binomial { n, p } => write!(f, "binomial(n={n}, p={p})"),
            DistSpec::PoissonBinomial { probs } => {
                let ps: Vec<String> = probs.iter().map(|p| p.to_string()).collect();
                write!(f, "poisson-binomial(p=[{}])", ps.join(", "))
            }
            DistSpec::Hypergeometric {
                population,
                successes,
                draws,
            } => write!(
                f,
                "hypergeometric(N={population}, g={successes}, n={draws})"
            ),
            DistSpec::CmpBinomial { n, p, nu } => write!(f, "cmp-binomial(n={n}, p={p}, nu={nu})"),
            DistSpec::EmptyUrns { urns, balls } => write!(f, "empty-urns(n={urns}, balls={balls})"),
            DistSpec::Matching { n } => write!(f, "matching(n={n})"),
            DistSpec::Poisson { lambda } => write!(f, "poisson(lambda={lambda})"),
            DistSpec::Geometric { p } => write!(f, "geometric(p={p})"),
            DistSpec::Soliton { r } => write!(f, "soliton(r={r})"),
            DistSpec::Benford { base } => write!(f, "benford(base={base})"),
        }
    }
}
