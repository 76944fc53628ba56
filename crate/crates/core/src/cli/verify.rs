//! Side-by-side comparison of every available route to the moments.

use num_traits::ToPrimitive;

use super::source::Source;
use super::{CliError, CliResult, Format, Table, VerifyArgs};
use crate::bernoulli::{Engine, MomentKind};
use crate::combinat::{choose, Scalar};
use crate::distributions::{soliton_as_printed, DistSpec, MomentType};
use crate::oracle::{self, OracleResult, MAX_INDEPENDENT_N, MAX_MATCHING_N, MAX_OUTCOMES};

/// Relative tolerance when either side is approximate.
pub const APPROX_RTOL: f64 = 1e-9;
/// Monte Carlo values must fall within this many standard errors.
pub const MC_SIGMAS: f64 = 4.0;

const KINDS: [MomentType; 3] = [MomentType::Raw, MomentType::Central, MomentType::Factorial];

#[derive(Clone, Debug)]
struct Cell {
    value: Scalar,
    /// Certified bound on the truncation error.
    residual: f64,
    stderr: Option<f64>,
}

impl Cell {
    fn exact(value: Scalar) -> Self {
        Cell {
            value,
            residual: 0.0,
            stderr: None,
        }
    }
}

struct Column {
    name: String,
    /// Indexed by kind position in `KINDS`, then by order.
    cells: [Vec<Cell>; 3],
}

impl Column {
    fn new(
        name: impl Into<String>,
        f: impl Fn(MomentType) -> CliResult<Vec<Cell>>,
    ) -> CliResult<Self> {
        Ok(Column {
            name: name.into(),
            cells: [f(KINDS[0])?, f(KINDS[1])?, f(KINDS[2])?],
        })
    }

    fn from_oracle(name: &str, r: &OracleResult) -> Self {
        let cells = |t: MomentType| {
            let se = r.stderr.as_ref().map(|s| s.get(t).to_vec());
            r.values(t)
                .iter()
                .enumerate()
                .map(|(k, v)| Cell {
                    value: v.clone(),
                    residual: 0.0,
                    stderr: se.as_ref().map(|s| s[k]),
                })
                .collect()
        };
        Column {
            name: name.to_string(),
            cells: [cells(KINDS[0]), cells(KINDS[1]), cells(KINDS[2])],
        }
    }
}

fn agree(a: &Cell, b: &Cell) -> bool {
    if let Some(se) = a.stderr.or(b.stderr) {
        let scale = a.value.to_f64().abs().max(b.value.to_f64().abs()).max(1.0);
        return (a.value.to_f64() - b.value.to_f64()).abs() <= MC_SIGMAS * se + 1e-12 * scale;
    }
    match (&a.value, &b.value) {
        (Scalar::Exact(x), Scalar::Exact(y)) if a.residual == 0.0 && b.residual == 0.0 => x == y,
        _ => {
            let (x, y) = (a.value.to_f64(), b.value.to_f64());
            let scale = x.abs().max(y.abs()).max(1.0);
            (x - y).abs() <= APPROX_RTOL * scale + a.residual + b.residual
        }
    }
}

/// The enumeration oracle when the experiment is small enough, otherwise
/// the pmf sum over a finite support.
fn oracle_for(spec: &DistSpec, kmax: usize) -> CliResult<Option<(&'static str, OracleResult)>> {
    let small = |c: num_bigint::BigInt| c.to_u64().is_some_and(|c| c <= MAX_OUTCOMES);
    let enumerated = match spec {
        DistSpec::Binomial { n, p } if *n <= MAX_INDEPENDENT_N => {
            Some(oracle::enumerate_independent(&vec![p.clone(); *n], kmax)?)
        }
        DistSpec::PoissonBinomial { probs } if probs.len() <= MAX_INDEPENDENT_N => {
            Some(oracle::enumerate_independent(probs, kmax)?)
        }
        DistSpec::Hypergeometric {
            population,
            successes,
            draws,
        } if small(choose(*population, *draws)) => Some(oracle::enumerate_hypergeometric(
            *population,
            *successes,
            *draws,
            kmax,
        )?),
        DistSpec::Matching { n } if *n <= MAX_MATCHING_N => {
            Some(oracle::enumerate_matching(*n, kmax)?)
        }
        DistSpec::EmptyUrns { urns, balls } if small(choose(balls + urns - 1, *balls)) => {
            Some(oracle::enumerate_urns(*urns, *balls, kmax)?)
        }
        _ => None,
    };
    if let Some(r) = enumerated {
        return Ok(Some(("enumeration", r)));
    }
    if spec.support().is_finite() {
        return Ok(Some(("pmf_sum", oracle::pmf_moments(spec, kmax)?)));
    }
    Ok(None)
}

fn columns(spec: &DistSpec, a: &VerifyArgs) -> CliResult<Vec<Column>> {
    let kmax = a.kmax;
    let mut cols = vec![Column::new("closed_form", |t| {
        Ok(spec
            .closed_form_moments(t, kmax)
            .into_iter()
            .map(Cell::exact)
            .collect())
    })?];

    if spec.is_bernoulli_sum() {
        let model = spec.as_joint_model()?;
        let engine = Engine::with_budget(a.compute.budget());
        cols.push(Column::new("engine", |t| {
            let kind = match t {
                MomentType::Raw => MomentKind::Raw,
                MomentType::Central => MomentKind::Central,
                MomentType::Factorial => MomentKind::Factorial,
            };
            let report = engine.report(&model, kind, kmax)?;
            Ok(report.values.into_values().map(Cell::exact).collect())
        })?);
    }

    let dist = spec.count_dist()?.with_epsilon(a.compute.epsilon);
    cols.push(Column::new("tail", |t| {
        (0..=kmax)
            .map(|k| {
                let v = match t {
                    MomentType::Raw => dist.moment_from_tail(k)?,
                    MomentType::Central => dist.central_from_tail(k)?,
                    MomentType::Factorial => dist.factorial_moment_from_tail(k)?,
                };
                Ok(Cell {
                    value: v.value,
                    residual: v.residual_bound.unwrap_or(0.0),
                    stderr: None,
                })
            })
            .collect()
    })?);

    if let Some((name, r)) = oracle_for(spec, kmax)? {
        cols.push(Column::from_oracle(name, &r));
    }

    if let DistSpec::EmptyUrns { urns, balls } = spec {
        if *balls >= 1 {
            let (population, successes) = (balls + urns - 1, urns - 1);
            let twin = DistSpec::hypergeometric(population, successes, *urns)?;
            let name = format!("hypergeometric({population},{successes},{urns})");
            cols.push(Column::new(name, |t| {
                Ok(twin
                    .closed_form_moments(t, kmax)
                    .into_iter()
                    .map(Cell::exact)
                    .collect())
            })?);
        }
    }

    if a.as_printed {
        let DistSpec::Soliton { r } = spec else {
            return Err(CliError::Usage(
                "--as-printed only applies to soliton".into(),
            ));
        };
        cols.push(Column::new("as_printed", |t| {
            Ok((0..=kmax)
                .map(|k| Cell::exact(soliton_as_printed(*r, t, k)))
                .collect())
        })?);
    }

    if a.samples > 0 {
        let r = oracle::monte_carlo(spec, kmax, a.samples, a.seed)?;
        cols.push(Column::from_oracle("monte_carlo", &r));
    }
    Ok(cols)
}

struct Mismatch {
    kind: MomentType,
    k: usize,
    left: usize,
    right: usize,
}

/// Runs the comparison; the flag is false on any disagreement.
pub(super) fn cmd_verify(a: &VerifyArgs) -> CliResult<(String, bool)> {
    let source = Source::from_args(&a.dist)?;
    let Some(spec) = source.spec() else {
        return Err(CliError::Usage(
            "verify needs a named distribution, not a pmf file".into(),
        ));
    };
    let cols = columns(spec, a)?;
    let mc = cols.iter().position(|c| c.name == "monte_carlo");

    let mut mismatches = Vec::new();
    let mut row_ok = Vec::new();
    for (ki, &kind) in KINDS.iter().enumerate() {
        for k in 0..=a.kmax {
            let mut ok = true;
            for i in 0..cols.len() {
                for j in i + 1..cols.len() {
                    // sampling is only held against the closed form
                    if (Some(i) == mc || Some(j) == mc) && i != 0 {
                        continue;
                    }
                    if let (Some(x), Some(y)) = (cols[i].cells[ki].get(k), cols[j].cells[ki].get(k))
                    {
                        if !agree(x, y) {
                            ok = false;
                            mismatches.push(Mismatch {
                                kind,
                                k,
                                left: j,
                                right: i,
                            });
                        }
                    }
                }
            }
            row_ok.push(ok);
        }
    }

    let (float, digits) = (a.output.float, a.output.digits as usize);
    let cell_text =
        |c: &Column, ki: usize, k: usize| c.cells[ki].get(k).map(|v| v.value.render(float, digits));
    let all_ok = mismatches.is_empty();

    let text = match a.output.format {
        Format::Json => {
            let mut rows = Vec::new();
            for (ki, kind) in KINDS.iter().enumerate() {
                for k in 0..=a.kmax {
                    let values: serde_json::Map<String, serde_json::Value> = cols
                        .iter()
                        .map(|c| (c.name.clone(), cell_text(c, ki, k).into()))
                        .collect();
                    rows.push(serde_json::json!({
                        "kind": kind.as_str(),
                        "k": k,
                        "values": values,
                        "ok": row_ok[ki * (a.kmax + 1) + k],
                    }));
                }
            }
            let diffs: Vec<_> = mismatches
                .iter()
                .map(|m| {
                    let ki = KINDS.iter().position(|t| *t == m.kind).expect("known kind");
                    serde_json::json!({
                        "kind": m.kind.as_str(),
                        "k": m.k,
                        "columns": [cols[m.left].name, cols[m.right].name],
                        "values": [cell_text(&cols[m.left], ki, m.k), cell_text(&cols[m.right], ki, m.k)],
                    })
                })
                .collect();
            let body = serde_json::json!({
                "dist": spec.to_string(),
                "columns": cols.iter().map(|c| c.name.clone()).collect::<Vec<_>>(),
                "rows": rows,
                "mismatches": diffs,
                "ok": all_ok,
            });
            format!("{body}\n")
        }
        format => {
            let mut headers = vec!["kind".to_string(), "k".to_string()];
            headers.extend(cols.iter().map(|c| c.name.clone()));
            headers.push("status".into());
            let mut table = Table::new(headers);
            for (ki, kind) in KINDS.iter().enumerate() {
                for k in 0..=a.kmax {
                    let mut row = vec![kind.as_str().to_string(), k.to_string()];
                    row.extend(
                        cols.iter()
                            .map(|c| cell_text(c, ki, k).unwrap_or_else(|| "-".into())),
                    );
                    let ok = row_ok[ki * (a.kmax + 1) + k];
                    row.push(if ok { "ok" } else { "MISMATCH" }.into());
                    table.push(row);
                }
            }
            let mut text = String::new();
            if format == Format::Table {
                text.push_str(&format!("{}\n", spec));
            }
            text.push_str(&table.render(format));
            if format == Format::Table {
                for m in &mismatches {
                    let ki = KINDS.iter().position(|t| *t == m.kind).expect("known kind");
                    text.push_str(&format!(
                        "mismatch: {} k={}: {} {} vs {} {}\n",
                        m.kind.as_str(),
                        m.k,
                        cols[m.left].name,
                        cell_text(&cols[m.left], ki, m.k).unwrap_or_default(),
                        cols[m.right].name,
                        cell_text(&cols[m.right], ki, m.k).unwrap_or_default(),
                    ));
                }
                text.push_str(if all_ok {
                    "verify: ok\n"
                } else {
                    "verify: MISMATCH\n"
                });
            }
            text
        }
    };
    Ok((text, all_ok))
}
