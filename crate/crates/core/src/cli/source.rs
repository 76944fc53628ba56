use std::collections::BTreeMap;

use serde_json::Value;

use super::{CliError, CliResult, ComputeArgs, DistArgs, MethodArg, Via};
use crate::bernoulli::{Engine, MomentKind, MomentReport, Provenance};
use crate::combinat::Scalar;
use crate::distributions::{DistInput, DistSpec, MomentType, NumberInput};
use crate::genfun::GenfunError;
use crate::tail_moments::{tail_from_pmf, CountDist, TailValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Route {
    ClosedForm,
    Engine,
    Tail,
}

pub(super) enum Source {
    Spec(DistSpec),
    /// A pmf read from a file; `masses[x] = Pr(X = x)`.
    Pmf {
        masses: Vec<Scalar>,
        dist: CountDist,
    },
}

fn text(v: &Option<String>) -> Option<NumberInput> {
    v.as_deref().map(NumberInput::from)
}

fn moment_type(kind: MomentKind) -> Option<MomentType> {
    match kind {
        MomentKind::Raw => Some(MomentType::Raw),
        MomentKind::Central => Some(MomentType::Central),
        MomentKind::Factorial => Some(MomentType::Factorial),
        MomentKind::Choose | MomentKind::ExpectedFactorial => None,
    }
}

/// Reads `[{"x":0,"prob":"1/2"},...]` or `{"0":"1/2",...}`.
pub(super) fn parse_pmf_json(text: &str) -> CliResult<BTreeMap<u64, Scalar>> {
    let bad = |msg: String| CliError::Usage(format!("pmf file: {msg}"));
    let value: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    let prob = |v: &Value| -> CliResult<Scalar> {
        let n: NumberInput = serde_json::from_value(v.clone()).map_err(|e| bad(e.to_string()))?;
        n.to_scalar("prob").map_err(|e| bad(e.to_string()))
    };
    let mut pmf = BTreeMap::new();
    let mut insert = |x: u64, p: Scalar| -> CliResult<()> {
        if pmf.insert(x, p).is_some() {
            return Err(bad(format!("x = {x} listed twice")));
        }
        Ok(())
    };
    match &value {
        Value::Array(rows) => {
            for row in rows {
                let x = row
                    .get("x")
                    .and_then(Value::as_u64)
                    .ok_or_else(|| bad(format!("row without a non-negative integer `x`: {row}")))?;
                let p = row
                    .get("prob")
                    .ok_or_else(|| bad(format!("row without `prob`: {row}")))?;
                insert(x, prob(p)?)?;
            }
        }
        Value::Object(map) => {
            for (k, v) in map {
                let x = k
                    .parse::<u64>()
                    .map_err(|_| bad(format!("key `{k}` is not a non-negative integer")))?;
                insert(x, prob(v)?)?;
            }
        }
        _ => return Err(bad("expected an array or an object".into())),
    }
    if pmf.is_empty() {
        return Err(bad("no masses listed".into()));
    }
    Ok(pmf)
}

impl Source {
    pub(super) fn from_args(args: &DistArgs) -> CliResult<Self> {
        if let Some(path) = &args.pmf_file {
            let body = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let pmf = parse_pmf_json(&body)?;
            let max = *pmf.keys().next_back().expect("non-empty pmf");
            let masses: Vec<Scalar> = (0..=max)
                .map(|x| pmf.get(&x).cloned().unwrap_or_else(Scalar::zero))
                .collect();
            let lookup = masses.clone();
            let dist = tail_from_pmf(move |x| lookup[x as usize].clone(), max)?;
            return Ok(Source::Pmf { masses, dist });
        }
        let input = if let Some(json) = &args.spec {
            DistInput::from_json(json)?
        } else if let Some(dist) = &args.dist {
            DistInput {
                dist: dist.clone(),
                n: args.n,
                p: text(&args.p),
                probs: args
                    .probs
                    .as_ref()
                    .map(|ps| ps.iter().map(|p| NumberInput::from(p.as_str())).collect()),
                population: args.population,
                successes: args.successes,
                nu: text(&args.nu),
                balls: args.balls,
                lambda: text(&args.lambda),
                r: args.r,
                base: args.base,
            }
        } else {
            return Err(CliError::Usage(
                "no distribution given; use --dist, --spec or --pmf-file".into(),
            ));
        };
        Ok(Source::Spec(DistSpec::from_input(&input)?))
    }

    pub(super) fn spec(&self) -> Option<&DistSpec> {
        match self {
            Source::Spec(s) => Some(s),
            Source::Pmf { .. } => None,
        }
    }

    pub(super) fn name(&self) -> String {
        match self {
            Source::Spec(s) => s.to_string(),
            Source::Pmf { .. } => "pmf-file".into(),
        }
    }

    pub(super) fn route(&self, method: MethodArg) -> CliResult<Route> {
        let spec = self.spec();
        match method {
            MethodArg::Auto => Ok(match spec {
                Some(s) if s.is_bernoulli_sum() => Route::Engine,
                _ => Route::Tail,
            }),
            MethodArg::Engine => match spec {
                Some(s) if s.is_bernoulli_sum() => Ok(Route::Engine),
                Some(s) => Err(CliError::Usage(format!(
                    "{} is not a Bernoulli sum; use --method tail",
                    s.name()
                ))),
                None => Err(CliError::Usage(
                    "a pmf file only supports --method tail".into(),
                )),
            },
            MethodArg::ClosedForm => match spec {
                Some(_) => Ok(Route::ClosedForm),
                None => Err(CliError::Usage(
                    "a pmf file only supports --method tail".into(),
                )),
            },
            MethodArg::Tail => Ok(Route::Tail),
        }
    }

    pub(super) fn count_dist(&self, epsilon: f64) -> CliResult<CountDist> {
        Ok(match self {
            Source::Spec(s) => s.count_dist()?.with_epsilon(epsilon),
            Source::Pmf { dist, .. } => dist.clone(),
        })
    }

    /// Moments of `kind` for `k = 0..=kmax` by the chosen route.
    pub(super) fn report(
        &self,
        route: Route,
        kind: MomentKind,
        kmax: usize,
        compute: &ComputeArgs,
    ) -> CliResult<MomentReport> {
        let unsupported = || {
            CliError::Usage(format!(
                "{kind} moments are only available from the engine (--method engine)"
            ))
        };
        match route {
            Route::Engine => {
                let spec = self.spec().expect("engine route requires a spec");
                let model = spec.as_joint_model()?;
                Ok(Engine::with_budget(compute.budget()).report(&model, kind, kmax)?)
            }
            Route::ClosedForm => {
                let spec = self.spec().expect("closed-form route requires a spec");
                let values = match (kind, moment_type(kind)) {
                    (_, Some(t)) => spec.closed_form_moments(t, kmax),
                    (MomentKind::Choose, None) => {
                        (0..=kmax).map(|k| spec.choose_moment(k)).collect()
                    }
                    _ => return Err(unsupported()),
                };
                let mut report = MomentReport::new(kind, values, Provenance::ClosedForm);
                report.mu = Some(spec.closed_form_moment(MomentType::Raw, 1));
                Ok(report)
            }
            Route::Tail => {
                let dist = self.count_dist(compute.epsilon)?;
                let one = |k: usize| -> CliResult<TailValue> {
                    Ok(match kind {
                        MomentKind::Raw => dist.moment_from_tail(k)?,
                        MomentKind::Central => dist.central_from_tail(k)?,
                        MomentKind::Factorial => dist.factorial_moment_from_tail(k)?,
                        MomentKind::Choose => dist.choose_from_tail(k)?,
                        MomentKind::ExpectedFactorial => return Err(unsupported()),
                    })
                };
                let values = (0..=kmax).map(one).collect::<CliResult<Vec<_>>>()?;
                let bound = values
                    .iter()
                    .filter_map(|v| v.residual_bound)
                    .fold(None, |acc: Option<f64>, b| {
                        Some(acc.map_or(b, |a| a.max(b)))
                    });
                let mut report = MomentReport::new(
                    kind,
                    values.into_iter().map(|v| v.value).collect(),
                    Provenance::Tail,
                );
                report.mu = Some(dist.moment_from_tail(1)?.value);
                report.truncation_bound = bound;
                Ok(report)
            }
        }
    }

    /// Factorial moments `0..=jmax` by the route `method` selects.
    pub(super) fn factorials(
        &self,
        method: MethodArg,
        jmax: usize,
        compute: &ComputeArgs,
    ) -> CliResult<Vec<Scalar>> {
        let route = self.route(method)?;
        let report = self.report(route, MomentKind::Factorial, jmax, compute)?;
        Ok(report.values.into_values().collect())
    }

    pub(super) fn finite_max(&self) -> Option<u64> {
        match self {
            Source::Spec(s) => s.support().max,
            Source::Pmf { masses, .. } => Some(masses.len() as u64 - 1),
        }
    }

    fn min(&self) -> u64 {
        match self {
            Source::Spec(s) => s.support().min,
            Source::Pmf { .. } => 0,
        }
    }

    /// Values of `x` to list. Inversion routes need the whole finite support.
    pub(super) fn pmf_range(&self, via: Via, xmax: Option<u64>) -> CliResult<(u64, u64)> {
        let min = self.min();
        match (self.finite_max(), via) {
            (Some(max), Via::Direct) => Ok((min, xmax.map_or(max, |x| x.min(max)))),
            (Some(max), _) => Ok((min, max)),
            (None, Via::Direct) => match xmax {
                Some(x) => Ok((min, x.max(min))),
                None => Err(CliError::Usage(
                    "unbounded support; pass --xmax to list the pmf directly".into(),
                )),
            },
            (None, _) => Err(GenfunError::TruncationUnsound.into()),
        }
    }

    pub(super) fn pmf(&self, x: u64) -> Scalar {
        match self {
            Source::Spec(s) => s.pmf(x),
            Source::Pmf { masses, .. } => {
                masses.get(x as usize).cloned().unwrap_or_else(Scalar::zero)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_json_forms() {
        let rows = parse_pmf_json(r#"[{"x":0,"prob":"1/4"},{"x":2,"prob":"3/4"}]"#).unwrap();
        assert_eq!(rows[&2], Scalar::ratio(3, 4));
        let map = parse_pmf_json(r#"{"1":0.5,"3":"1/2"}"#).unwrap();
        assert_eq!(map[&1], Scalar::Approx(0.5));
        assert!(parse_pmf_json(r#"[{"x":-1,"prob":"1"}]"#).is_err());
        assert!(parse_pmf_json("[]").is_err());
    }
}
