//! Shorthand curve specifications accepted wherever the tool reads a curve.
//!
//! Grammar: `approx:EPS,DELTA` | `gdp:MU` | `agdp:MU,DELTA` | `delta:D` |
//! `id` | `file:PATH` | `json:{...}`. Files and inline JSON carry any
//! document the serializers write (a PLD, a piecewise curve, or a Gaussian
//! with an optional intercept shift).

use fdp_core::compose::CurveHandle;
use fdp_core::curves::{make_approx_dp, make_pure_delta};
use fdp_core::pld::tradeoff_to_pld;
use fdp_core::serial::{any_curve_from_json, ParsedCurve};
use fdp_core::{DiscretePld, Error, Result};

/// A parsed curve specification, parameters retained.
#[derive(Debug, Clone)]
pub enum CurveSpec {
    /// `approx:EPS,DELTA` — the (ε, δ) tradeoff curve.
    Approx {
        /// Log likelihood-ratio bound.
        eps: f64,
        /// Failure mass.
        delta: f64,
    },
    /// `gdp:MU` — the Gaussian curve G_μ.
    Gaussian {
        /// Mean-shift parameter.
        mu: f64,
    },
    /// `agdp:MU,DELTA` — G_μ under a δ intercept shift.
    ApproxGaussian {
        /// Mean-shift parameter.
        mu: f64,
        /// Intercept mass.
        delta: f64,
    },
    /// `delta:D` — the pure-δ curve f_{0,δ}.
    PureDelta {
        /// Failure mass.
        delta: f64,
    },
    /// `id` — the identity curve (no leakage).
    Identity,
    /// `file:PATH` or `json:{...}` — an explicit curve document.
    Document(ParsedCurve),
}

fn grammar_error(text: &str) -> Error {
    Error::Parse(format!(
        "unrecognized curve spec {text:?}; expected approx:EPS,DELTA | gdp:MU \
         | agdp:MU,DELTA | delta:D | id | file:PATH | json:{{...}}"
    ))
}

fn one_float(text: &str, what: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("{what}: expected a number, got {text:?}")))
}

fn two_floats(text: &str, what: &str) -> Result<(f64, f64)> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("{what}: expected two comma-separated numbers, got {text:?}")))?;
    Ok((one_float(a, what)?, one_float(b, what)?))
}

/// Parses one shorthand spec.
pub fn parse_spec(text: &str) -> Result<CurveSpec> {
    let t = text.trim();
    if t == "id" {
        return Ok(CurveSpec::Identity);
    }
    let (head, rest) = t.split_once(':').ok_or_else(|| grammar_error(t))?;
    match head {
        "approx" => {
            let (eps, delta) = two_floats(rest, "approx spec")?;
            Ok(CurveSpec::Approx { eps, delta })
        }
        "gdp" => Ok(CurveSpec::Gaussian {
            mu: one_float(rest, "gdp spec")?,
        }),
        "agdp" => {
            let (mu, delta) = two_floats(rest, "agdp spec")?;
            Ok(CurveSpec::ApproxGaussian { mu, delta })
        }
        "delta" => Ok(CurveSpec::PureDelta {
            delta: one_float(rest, "delta spec")?,
        }),
        "file" => {
            let body = std::fs::read_to_string(rest)
                .map_err(|e| Error::Parse(format!("cannot read {rest:?}: {e}")))?;
            Ok(CurveSpec::Document(any_curve_from_json(&body)?))
        }
        "json" => Ok(CurveSpec::Document(any_curve_from_json(rest)?)),
        _ => Err(grammar_error(t)),
    }
}

impl CurveSpec {
    /// Materializes the spec as a composable curve handle.
    pub fn to_handle(&self) -> Result<CurveHandle> {
        match self {
            CurveSpec::Approx { eps, delta } => {
                CurveHandle::from_tradeoff(make_approx_dp(*eps, *delta)?)
            }
            CurveSpec::Gaussian { mu } => CurveHandle::gaussian(*mu),
            CurveSpec::ApproxGaussian { mu, delta } => CurveHandle::approx_gaussian(*mu, *delta),
            CurveSpec::PureDelta { delta } => CurveHandle::from_tradeoff(make_pure_delta(*delta)?),
            CurveSpec::Identity => Ok(CurveHandle::identity()),
            CurveSpec::Document(ParsedCurve::Pld(p)) => CurveHandle::from_pld(p.clone()),
            CurveSpec::Document(ParsedCurve::Curve(c)) => CurveHandle::from_tradeoff(c.clone()),
            CurveSpec::Document(ParsedCurve::Gaussian(mu, delta)) => {
                if *delta == 0.0 {
                    CurveHandle::gaussian(*mu)
                } else {
                    CurveHandle::approx_gaussian(*mu, *delta)
                }
            }
        }
    }

    /// The spec's privacy loss distribution; errors for Gaussian curves,
    /// whose PLD has no finite support.
    pub fn to_pld(&self) -> Result<DiscretePld> {
        match self {
            CurveSpec::Gaussian { .. }
            | CurveSpec::ApproxGaussian { .. }
            | CurveSpec::Document(ParsedCurve::Gaussian(..)) => Err(Error::Domain(
                "Gaussian curves have no finite privacy loss distribution; \
                 this operation needs a piecewise curve"
                    .into(),
            )),
            CurveSpec::Document(ParsedCurve::Pld(p)) => Ok(p.clone()),
            CurveSpec::Document(ParsedCurve::Curve(c)) => tradeoff_to_pld(c),
            CurveSpec::Approx { eps, delta } => tradeoff_to_pld(&make_approx_dp(*eps, *delta)?),
            CurveSpec::PureDelta { delta } => tradeoff_to_pld(&make_pure_delta(*delta)?),
            CurveSpec::Identity => Ok(DiscretePld::identity()),
        }
    }

    /// `(ε, δ)` when this is an `approx:` spec; used to derive budgets from
    /// the crossing-pair construction.
    pub fn approx_params(&self) -> Option<(f64, f64)> {
        match self {
            CurveSpec::Approx { eps, delta } => Some((*eps, *delta)),
            _ => None,
        }
    }
}
