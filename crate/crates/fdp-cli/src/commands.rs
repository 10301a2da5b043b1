//! Implementations of the `fdp` subcommands.
//!
//! Every command returns the process exit code on success; library errors
//! bubble up to `main`, which maps them onto the stable exit-code table.

use std::fs;
use std::path::{Path, PathBuf};

use fdp_core::compose::{compose_handles, compose_piecewise};
use fdp_core::curves::{make_approx_dp, TradeoffCurve};
use fdp_core::filter::{
    build_crossing_counterexample, build_gdp_budget_counterexample, is_free, run_session,
    CrossingBundle, GdpBudgetKind, StrategyTree,
};
use fdp_core::order::{
    check_commutativity, check_well_ordered as well_ordered_scan, compare_handles, compare_plds,
    CompareOutcome, OrderVerdict,
};
use fdp_core::pld::tradeoff_to_pld;
use fdp_core::serial::{
    self, any_curve_from_value, commutativity_to_json, compare_to_json, crossing_bundle_to_json,
    csv_table, curve_to_json, gdp_bundle_to_json, transcript_to_json, value_report_to_json,
    well_order_to_json, ParsedCurve,
};
use fdp_core::{DiscretePld, Error, Result};

use crate::spec::{parse_spec, CurveSpec};
use crate::{
    CommutesArgs, ComposeArgs, FigureArgs, FreeArgs, OrderArgs, SimulateArgs, WellOrderedArgs,
};

/// Certified-margin requirement for the figure-3 budget searches.
const FIGURE_MARGIN: f64 = 1e-4;

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content)
        .map_err(|e| Error::Parse(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn uniform_grid(cells: usize) -> Vec<f64> {
    (0..=cells).map(|i| i as f64 / cells as f64).collect()
}

fn parse_family(specs: &[String]) -> Result<Vec<CurveSpec>> {
    specs.iter().map(|s| parse_spec(s)).collect()
}

fn family_plds(specs: &[CurveSpec]) -> Result<Vec<DiscretePld>> {
    specs.iter().map(|s| s.to_pld()).collect()
}

// ---------------------------------------------------------------------------
// compose
// ---------------------------------------------------------------------------

/// `fdp compose`: fold the inputs with exact composition and write the
/// result in the tightest available representation.
pub fn compose(args: &ComposeArgs) -> Result<i32> {
    let mut handles = Vec::with_capacity(args.inputs.len());
    for input in &args.inputs {
        handles.push(parse_spec(input)?.to_handle()?);
    }
    let mut acc = handles[0].clone();
    for h in &handles[1..] {
        acc = compose_handles(&acc, h)?;
    }

    // Tightest representation: exact piecewise stays piecewise, Gaussian
    // products keep their closed form; anything else must be sampled onto
    // an explicit grid.
    let (json, sampled): (String, Option<TradeoffCurve>) = if let Some(c) = acc.as_piecewise() {
        (curve_to_json(c), None)
    } else if let Some((mu, delta)) = acc.as_shifted_gaussian() {
        let doc = if delta == 0.0 {
            serial::gaussian_to_json(mu)
        } else {
            serial::approx_gaussian_to_json(mu, delta)
        };
        (doc, None)
    } else {
        match args.grid {
            Some(cells) => {
                let c = acc.sample_piecewise(cells)?;
                (curve_to_json(&c), Some(c))
            }
            None => return Err(Error::MixedNeedsGrid),
        }
    };
    emit(&args.out, &format!("{json}\n"))?;

    if let Some(csv_path) = &args.csv {
        let alphas = uniform_grid(1000);
        let betas: Vec<f64> = match (&sampled, acc.as_piecewise()) {
            (Some(c), _) | (None, Some(c)) => alphas.iter().map(|&a| c.eval(a)).collect(),
            (None, None) => alphas.iter().map(|&a| acc.eval_tradeoff(a)).collect(),
        };
        write_file(csv_path, &csv_table(&[("alpha", alphas), ("beta", betas)])?)?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

/// `fdp check order`: compare two mechanisms; exit 0 when they are
/// comparable, 1 when they cross.
pub fn check_order(args: &OrderArgs) -> Result<i32> {
    let mut specs: Vec<&str> = args.a.iter().map(String::as_str).collect();
    if let Some(b) = &args.b {
        specs.push(b);
    }
    if specs.len() != 2 {
        return Err(Error::Parse(
            "check order needs exactly two curves (repeat --a, or pass --a and --b)".into(),
        ));
    }
    let sa = parse_spec(specs[0])?;
    let sb = parse_spec(specs[1])?;
    // Discrete pairs get the exact decision; anything Gaussian falls back
    // to the certified grid comparison.
    let outcome: CompareOutcome = match (sa.to_pld(), sb.to_pld()) {
        (Ok(a), Ok(b)) => compare_plds(&a, &b),
        _ => compare_handles(&sa.to_handle()?, &sb.to_handle()?),
    };
    println!("{}", compare_to_json(&outcome));
    Ok(if outcome.verdict == OrderVerdict::Crossing {
        1
    } else {
        0
    })
}

/// `fdp check well-ordered`: exit 0 when every pair in the composition
/// closure is comparable, 1 with the crossing pair otherwise.
pub fn check_well_ordered(args: &WellOrderedArgs) -> Result<i32> {
    let plds = family_plds(&parse_family(&args.family)?)?;
    let report = well_ordered_scan(&plds, args.depth)?;
    println!("{}", well_order_to_json(&report));
    Ok(if report.ordered { 0 } else { 1 })
}

/// `fdp check commutes`: exit 0 when composing with `--a` commutes with
/// the family supremum, 1 with the gap location otherwise.
pub fn check_commutes(args: &CommutesArgs) -> Result<i32> {
    let a = parse_spec(&args.a)?.to_pld()?;
    let bs = family_plds(&parse_family(&args.family)?)?;
    let report = check_commutativity(&a, &bs)?;
    println!("{}", commutativity_to_json(&report));
    Ok(if report.commutes { 0 } else { 1 })
}

/// Derives the tangent budget of the corollary from a two-member crossing
/// family: intercept mass of the two-step sessions, initial slope of their
/// envelope.
fn corollary_budget(specs: &[CurveSpec]) -> Result<DiscretePld> {
    let params: Vec<(f64, f64)> = specs.iter().filter_map(CurveSpec::approx_params).collect();
    if specs.len() != 2 || params.len() != 2 {
        return Err(Error::Domain(
            "--budget-from-corollary needs a family of exactly two approx:EPS,DELTA curves".into(),
        ));
    }
    let bundle = build_crossing_counterexample(params[0].0, params[0].1, params[1].0, params[1].1)?;
    let delta_b = bundle.delta1 + bundle.delta2 - bundle.delta1 * bundle.delta2;
    let eps_b = (-bundle.rhs_slope_closed_form).ln();
    tradeoff_to_pld(&make_approx_dp(eps_b, delta_b)?)
}

/// `fdp check free`: exit 0 when no k-step adaptive strategy can exceed the
/// budget, 1 with the excess witness otherwise.
pub fn check_free(args: &FreeArgs) -> Result<i32> {
    let specs = parse_family(&args.family)?;
    let family = family_plds(&specs)?;
    let budget = match (&args.budget, args.budget_from_corollary) {
        (Some(spec), false) => parse_spec(spec)?.to_pld()?,
        (None, true) => corollary_budget(&specs)?,
        (None, false) => {
            return Err(Error::Parse(
                "check free needs --budget SPEC or --budget-from-corollary".into(),
            ))
        }
        (Some(_), true) => unreachable!("clap conflicts_with prevents this"),
    };
    let report = is_free(&family, &budget, args.k)?;
    println!("{}", value_report_to_json(&report));
    Ok(if report.free { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// figure
// ---------------------------------------------------------------------------

fn crossing_figure(dir: &Path, name: &str, bundle: &CrossingBundle) -> Result<Vec<PathBuf>> {
    let f1 = make_approx_dp(bundle.eps1, bundle.delta1)?;
    let f2 = make_approx_dp(bundle.eps2, bundle.delta2)?;
    let session_11 = compose_piecewise(&f1, &f1)?;
    let session_12 = compose_piecewise(&f1, &f2)?;
    let alphas = uniform_grid(1000);
    let col = |c: &TradeoffCurve| -> Vec<f64> { alphas.iter().map(|&a| c.eval(a)).collect() };
    let table = csv_table(&[
        ("alpha", alphas.clone()),
        ("adaptive", col(&bundle.lhs_curve)),
        ("envelope", col(&bundle.rhs_curve)),
        ("session_11", col(&session_11)),
        ("session_12", col(&session_12)),
    ])?;
    let csv_path = dir.join(format!("figure-{name}.csv"));
    write_file(&csv_path, &table)?;
    let json_path = dir.join(format!("figure-{name}.json"));
    write_file(&json_path, &format!("{}\n", crossing_bundle_to_json(bundle)))?;
    Ok(vec![csv_path, json_path])
}

fn pure_chain_figure(dir: &Path, name: &str, eps1: f64, eps2: f64) -> Result<Vec<PathBuf>> {
    let small = make_approx_dp(eps2, 0.0)?;
    let large = make_approx_dp(eps1, 0.0)?;
    let double = compose_piecewise(&small, &small)?;
    let alphas = uniform_grid(1000);
    let col = |c: &TradeoffCurve| -> Vec<f64> { alphas.iter().map(|&a| c.eval(a)).collect() };
    let table = csv_table(&[
        ("alpha", alphas.clone()),
        ("single_large", col(&large)),
        ("single_small", col(&small)),
        ("double_small", col(&double)),
    ])?;
    let path = dir.join(format!("figure-{name}.csv"));
    write_file(&path, &table)?;
    Ok(vec![path])
}

fn gdp_figure(dir: &Path, name: &str, kind: GdpBudgetKind) -> Result<Vec<PathBuf>> {
    let bundle = build_gdp_budget_counterexample(kind, FIGURE_MARGIN)?;
    let mut alphas = Vec::with_capacity(bundle.samples.len());
    let (mut lhs, mut rhs, mut budget) = (Vec::new(), Vec::new(), Vec::new());
    for &(a, l, r, b) in &bundle.samples {
        alphas.push(a);
        lhs.push(l);
        rhs.push(r);
        budget.push(b);
    }
    let table = csv_table(&[
        ("alpha", alphas),
        ("adaptive", lhs),
        ("envelope", rhs),
        ("budget", budget),
    ])?;
    let csv_path = dir.join(format!("figure-{name}.csv"));
    write_file(&csv_path, &table)?;
    let json_path = dir.join(format!("figure-{name}.json"));
    write_file(&json_path, &format!("{}\n", gdp_bundle_to_json(&bundle)))?;
    Ok(vec![csv_path, json_path])
}

/// `fdp figure`: write the CSV (and certification JSON) data behind one of
/// the six counter-example figures.
pub fn figure(args: &FigureArgs) -> Result<i32> {
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::Parse(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let dir = args.out_dir.as_path();
    let ln = |x: f64| x.ln();
    let written = match args.which.as_str() {
        // Adaptive-vs-envelope separation for a crossing pair, in both
        // initial-slope regimes.
        "1a" => crossing_figure(
            dir,
            "1a",
            &build_crossing_counterexample(ln(4.0), 0.01, ln(2.0), 0.1)?,
        )?,
        "1b" => crossing_figure(
            dir,
            "1b",
            &build_crossing_counterexample(ln(2.0), 0.01, ln(1.1), 0.3)?,
        )?,
        // An ordered pure-DP chain (no crossing anywhere) ...
        "2a" => pure_chain_figure(dir, "2a", ln(4.0), ln(2.0))?,
        // ... versus generators whose two-step closure crosses.
        "2b" => pure_chain_figure(dir, "2b", ln(3.0), ln(2.0))?,
        "3a" => gdp_figure(dir, "3a", GdpBudgetKind::Pure)?,
        "3b" => gdp_figure(dir, "3b", GdpBudgetKind::Approx)?,
        other => {
            return Err(Error::Parse(format!(
                "unknown figure {other:?}; expected 1a | 1b | 2a | 2b | 3a | 3b"
            )))
        }
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn strategy_from_value(v: &serde_json::Value) -> Result<StrategyTree> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Parse(format!("strategy node must be an object, got {v}")))?;
    let qv = obj
        .get("query")
        .ok_or_else(|| Error::Parse("strategy node missing \"query\"".into()))?;
    let query = match qv {
        serde_json::Value::String(s) => parse_spec(s)?.to_pld()?,
        doc => match any_curve_from_value(doc)? {
            ParsedCurve::Pld(p) => p,
            ParsedCurve::Curve(c) => tradeoff_to_pld(&c)?,
            ParsedCurve::Gaussian(..) => {
                return Err(Error::Domain(
                    "Gaussian queries have no finite privacy loss distribution; \
                     use a piecewise query"
                        .into(),
                ))
            }
        },
    };
    let children = match obj.get("children") {
        None | Some(serde_json::Value::Null) => Vec::new(),
        Some(serde_json::Value::Array(items)) => {
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                out.push(match item {
                    serde_json::Value::Null => None,
                    node => Some(strategy_from_value(node)?),
                });
            }
            out
        }
        Some(other) => {
            return Err(Error::Parse(format!(
                "strategy \"children\" must be an array or null, got {other}"
            )))
        }
    };
    Ok(StrategyTree { query, children })
}

/// `fdp simulate`: run a strategy file against a filter and write the
/// session transcript.
pub fn simulate(args: &SimulateArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.strategy)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", args.strategy.display())))?;
    let doc: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("strategy file: {e}")))?;
    let strategy = strategy_from_value(&doc)?;
    let budget = parse_spec(&args.budget)?.to_pld()?;
    let transcript = run_session(&strategy, &budget, args.capacity)?;
    emit(&args.out, &format!("{}\n", transcript_to_json(&transcript)))?;
    Ok(0)
}
