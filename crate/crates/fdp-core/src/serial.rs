//! JSON and CSV serialization for every type the command-line tool emits.
//!
//! Writers hand-assemble the documents so key order and number formatting
//! are fixed: floats are printed through [`fmt_json`] (17 significant
//! digits, enough for exact `f64` round-trips) and CSV cells through
//! [`fmt_csv`] (12 significant digits). Parsers go through `serde_json` and
//! accept the writers' output verbatim, so every emitted document
//! round-trips; they also tolerate insignificant variations (key order,
//! whitespace, plain decimal literals).

use serde_json::Value;

use crate::curves::{Segment, TradeoffCurve};
use crate::filter::{CrossingBundle, GdpBudgetKind, GdpBundle, SessionTranscript, ValueReport};
use crate::num::{fmt_csv, fmt_json};
use crate::order::{CommutativityReport, CompareOutcome, OrderVerdict, WellOrderReport, Witness};
use crate::pld::DiscretePld;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

fn num(v: f64) -> String {
    debug_assert!(v.is_finite(), "serializing non-finite value {v}");
    fmt_json(v)
}

fn string(s: &str) -> String {
    Value::String(s.to_owned()).to_string()
}

fn seq<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    let body: Vec<String> = items.iter().map(f).collect();
    format!("[{}]", body.join(","))
}

/// Stable lowercase name of an order verdict, as used in JSON reports.
pub fn verdict_name(v: OrderVerdict) -> &'static str {
    match v {
        OrderVerdict::Equivalent => "equivalent",
        OrderVerdict::FirstWithinSecond => "first_within_second",
        OrderVerdict::SecondWithinFirst => "second_within_first",
        OrderVerdict::Crossing => "crossing",
    }
}

fn get<'v>(v: &'v Value, key: &str, what: &str) -> Result<&'v Value> {
    v.get(key)
        .ok_or_else(|| Error::Parse(format!("{what}: missing key \"{key}\"")))
}

fn as_f64(v: &Value, what: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::Parse(format!("{what}: expected a number, got {v}")))
}

fn as_pair(v: &Value, what: &str) -> Result<(f64, f64)> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::Parse(format!("{what}: expected a two-element array, got {v}")))?;
    Ok((as_f64(&arr[0], what)?, as_f64(&arr[1], what)?))
}

// ---------------------------------------------------------------------------
// Privacy loss distributions
// ---------------------------------------------------------------------------

/// Serializes a PLD as `{"atoms":[[z,p],…],"mass_at_infinity":m}`.
pub fn pld_to_json(pld: &DiscretePld) -> String {
    let atoms = seq(pld.atoms(), |&(z, p)| format!("[{},{}]", num(z), num(p)));
    format!(
        "{{\"atoms\":{atoms},\"mass_at_infinity\":{}}}",
        num(pld.mass_at_infinity())
    )
}

/// Parses a PLD from an in-memory JSON value (shape as in [`pld_to_json`]).
pub fn pld_from_value(v: &Value) -> Result<DiscretePld> {
    let atoms_v = get(v, "atoms", "PLD document")?
        .as_array()
        .ok_or_else(|| Error::Parse("PLD document: \"atoms\" must be an array".into()))?;
    let mut atoms = Vec::with_capacity(atoms_v.len());
    for a in atoms_v {
        atoms.push(as_pair(a, "PLD atom")?);
    }
    let mass = as_f64(get(v, "mass_at_infinity", "PLD document")?, "mass_at_infinity")?;
    DiscretePld::new(atoms, mass)
}

/// Parses a PLD from JSON text.
pub fn pld_from_json(s: &str) -> Result<DiscretePld> {
    let v: Value =
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("PLD document: {e}")))?;
    pld_from_value(&v)
}

// ---------------------------------------------------------------------------
// Tradeoff curves
// ---------------------------------------------------------------------------

/// Serializes a piecewise-linear tradeoff curve as
/// `{"delta_at_zero":d,"segments":[{"width":w,"slope":s},…]}`.
pub fn curve_to_json(curve: &TradeoffCurve) -> String {
    let segments = seq(curve.segments(), |s| {
        format!("{{\"width\":{},\"slope\":{}}}", num(s.width), num(s.slope))
    });
    format!(
        "{{\"delta_at_zero\":{},\"segments\":{segments}}}",
        num(curve.delta_at_zero())
    )
}

/// Parses a tradeoff curve from an in-memory JSON value.
pub fn curve_from_value(v: &Value) -> Result<TradeoffCurve> {
    let delta = as_f64(get(v, "delta_at_zero", "curve document")?, "delta_at_zero")?;
    let segs_v = get(v, "segments", "curve document")?
        .as_array()
        .ok_or_else(|| Error::Parse("curve document: \"segments\" must be an array".into()))?;
    let mut segments = Vec::with_capacity(segs_v.len());
    for s in segs_v {
        let width = as_f64(get(s, "width", "curve segment")?, "segment width")?;
        let slope = as_f64(get(s, "slope", "curve segment")?, "segment slope")?;
        segments.push(Segment::new(width, slope));
    }
    TradeoffCurve::new(segments, delta)
}

/// Parses a tradeoff curve from JSON text.
pub fn curve_from_json(s: &str) -> Result<TradeoffCurve> {
    let v: Value =
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("curve document: {e}")))?;
    curve_from_value(&v)
}

/// Serializes a Gaussian tradeoff curve as `{"mu":m}`.
pub fn gaussian_to_json(mu: f64) -> String {
    format!("{{\"mu\":{}}}", num(mu))
}

/// Serializes an intercept-shifted Gaussian curve as
/// `{"delta_at_zero":d,"mu":m}`.
pub fn approx_gaussian_to_json(mu: f64, delta: f64) -> String {
    format!("{{\"delta_at_zero\":{},\"mu\":{}}}", num(delta), num(mu))
}

/// Any curve document the tool reads from a file or inline JSON.
#[derive(Debug, Clone)]
pub enum ParsedCurve {
    /// A privacy loss distribution (`{"atoms":…}`).
    Pld(DiscretePld),
    /// A piecewise-linear tradeoff curve (`{"segments":…}`).
    Curve(TradeoffCurve),
    /// A Gaussian curve (`{"mu":…}`), with its intercept shift (0 when the
    /// document has no `delta_at_zero` key).
    Gaussian(f64, f64),
}

/// Detects and parses any of the curve document shapes this module writes.
pub fn any_curve_from_json(s: &str) -> Result<ParsedCurve> {
    let v: Value =
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("curve document: {e}")))?;
    any_curve_from_value(&v)
}

/// [`any_curve_from_json`] on an already-parsed value.
pub fn any_curve_from_value(v: &Value) -> Result<ParsedCurve> {
    if !v.is_object() {
        return Err(Error::Parse(format!(
            "curve document: expected a JSON object, got {v}"
        )));
    }
    if v.get("atoms").is_some() {
        return Ok(ParsedCurve::Pld(pld_from_value(v)?));
    }
    if v.get("segments").is_some() {
        return Ok(ParsedCurve::Curve(curve_from_value(v)?));
    }
    if let Some(mu_v) = v.get("mu") {
        let mu = as_f64(mu_v, "mu")?;
        let delta = match v.get("delta_at_zero") {
            Some(d) => as_f64(d, "delta_at_zero")?,
            None => 0.0,
        };
        return Ok(ParsedCurve::Gaussian(mu, delta));
    }
    Err(Error::Parse(
        "curve document: expected one of the keys \"atoms\", \"segments\", or \"mu\"".into(),
    ))
}

// ---------------------------------------------------------------------------
// Comparison reports
// ---------------------------------------------------------------------------

fn witness_to_json(w: &Witness) -> String {
    format!(
        "{{\"x\":{},\"lhs\":{},\"rhs\":{},\"gap\":{}}}",
        num(w.x),
        num(w.lhs),
        num(w.rhs),
        num(w.gap)
    )
}

/// Serializes a comparison outcome, witnesses included.
pub fn compare_to_json(c: &CompareOutcome) -> String {
    format!(
        "{{\"verdict\":{},\"witnesses\":{},\"exact\":{},\"tolerance\":{}}}",
        string(verdict_name(c.verdict)),
        seq(&c.witnesses, witness_to_json),
        c.exact,
        num(c.tolerance)
    )
}

/// Serializes a well-ordering report over a composition closure.
pub fn well_order_to_json(r: &WellOrderReport) -> String {
    let pair = match &r.crossing_pair {
        Some((a, b)) => format!(
            "[{},{}]",
            seq(a, |i| i.to_string()),
            seq(b, |i| i.to_string())
        ),
        None => "null".into(),
    };
    format!(
        "{{\"ordered\":{},\"member_count\":{},\"degenerate_count\":{},\"crossing_pair\":{pair},\"witnesses\":{}}}",
        r.ordered,
        r.member_count,
        r.degenerate_count,
        seq(&r.witnesses, witness_to_json)
    )
}

/// Serializes a compose-versus-sup commutativity report.
pub fn commutativity_to_json(r: &CommutativityReport) -> String {
    format!(
        "{{\"commutes\":{},\"max_gap\":{},\"location\":{},\"compose_with_sup\":{},\"sup_of_composes\":{}}}",
        r.commutes,
        num(r.max_gap),
        num(r.location),
        curve_to_json(&r.compose_with_sup),
        curve_to_json(&r.sup_of_composes)
    )
}

/// Serializes a freeness report (adversary value against a budget).
pub fn value_report_to_json(r: &ValueReport) -> String {
    format!(
        "{{\"free\":{},\"value\":{},\"comparison\":{}}}",
        r.free,
        pld_to_json(&r.value),
        compare_to_json(&r.comparison)
    )
}

// ---------------------------------------------------------------------------
// Session transcripts
// ---------------------------------------------------------------------------

/// Serializes a simulated filter session, embedded PLDs included.
pub fn transcript_to_json(t: &SessionTranscript) -> String {
    let steps = seq(&t.steps, |s| {
        format!(
            "{{\"path\":{},\"query\":{},\"accepted\":{},\"consumed_after\":{}}}",
            seq(&s.path, |i| i.to_string()),
            pld_to_json(&s.query),
            s.accepted,
            pld_to_json(&s.consumed_after)
        )
    });
    let warning = match &t.warning {
        Some(w) => string(w),
        None => "null".into(),
    };
    format!(
        "{{\"steps\":{steps},\"realized\":{},\"budget\":{},\"verdict\":{},\"within_budget\":{},\"warning\":{warning}}}",
        pld_to_json(&t.realized),
        pld_to_json(&t.budget),
        compare_to_json(&t.verdict),
        t.within_budget
    )
}

// ---------------------------------------------------------------------------
// Counter-example bundles
// ---------------------------------------------------------------------------

/// Serializes a crossing-pair counter-example bundle.
pub fn crossing_bundle_to_json(b: &CrossingBundle) -> String {
    let lhs_cf = match b.lhs_slope_closed_form {
        Some(v) => num(v),
        None => "null".into(),
    };
    format!(
        "{{\"case_id\":{},\"eps1\":{},\"delta1\":{},\"eps2\":{},\"delta2\":{},\
         \"alpha_range_end\":{},\"lhs_slope\":{},\"rhs_slope\":{},\
         \"lhs_slope_closed_form\":{lhs_cf},\"rhs_slope_closed_form\":{},\
         \"max_gap\":{},\"gap_location\":{},\"lhs_curve\":{},\"rhs_curve\":{}}}",
        b.case_id,
        num(b.eps1),
        num(b.delta1),
        num(b.eps2),
        num(b.delta2),
        num(b.alpha_range_end),
        num(b.lhs_slope),
        num(b.rhs_slope),
        num(b.rhs_slope_closed_form),
        num(b.max_gap),
        num(b.gap_location),
        curve_to_json(&b.lhs_curve),
        curve_to_json(&b.rhs_curve)
    )
}

/// Serializes a certified Gaussian-budget counter-example bundle (the point
/// samples are omitted; they are emitted separately as CSV).
pub fn gdp_bundle_to_json(b: &GdpBundle) -> String {
    let kind = match b.kind {
        GdpBudgetKind::Pure => "pure",
        GdpBudgetKind::Approx => "approx",
    };
    format!(
        "{{\"kind\":{},\"mu\":{},\"budget_delta\":{},\"accept_margin\":{},\
         \"accept_margin_at\":{},\"violation_gap\":{},\"violation_at\":{},\
         \"near_zero_cutoff\":{},\"tail_chord_ok\":{},\"grid_points\":{},\
         \"grid_lo\":{},\"grid_hi\":{},\"searched_mus\":{},\
         \"lhs_curve\":{},\"rhs_curve\":{}}}",
        string(kind),
        num(b.mu),
        num(b.budget_delta),
        num(b.accept_margin),
        num(b.accept_margin_at),
        num(b.violation_gap),
        num(b.violation_at),
        num(b.near_zero_cutoff),
        b.tail_chord_ok,
        b.grid_points,
        num(b.grid_lo),
        num(b.grid_hi),
        seq(&b.searched_mus, |&m| num(m)),
        curve_to_json(&b.lhs_curve),
        curve_to_json(&b.rhs_curve)
    )
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Writes a CSV table: one named column per entry, a mandatory header row,
/// `.` as the decimal separator, and 12 significant digits per cell.
///
/// All columns must be non-empty and of equal length.
pub fn csv_table(columns: &[(&str, Vec<f64>)]) -> Result<String> {
    if columns.is_empty() {
        return Err(Error::Domain("CSV table needs at least one column".into()));
    }
    let rows = columns[0].1.len();
    if rows == 0 || columns.iter().any(|(_, c)| c.len() != rows) {
        return Err(Error::Domain(
            "CSV columns must be non-empty and of equal length".into(),
        ));
    }
    let mut out = String::new();
    let headers: Vec<&str> = columns.iter().map(|(h, _)| *h).collect();
    out.push_str(&headers.join(","));
    out.push('\n');
    for i in 0..rows {
        let cells: Vec<String> = columns.iter().map(|(_, c)| fmt_csv(c[i])).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}
