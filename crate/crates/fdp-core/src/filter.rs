//! Privacy filters and adaptive-session analysis.
//!
//! A *filter* guards a privacy budget (a PLD) against a stream of queries:
//! each query is accepted only if the running composition stays dominated by
//! the budget, and rejected queries are not run. This module provides
//!
//! * the filter state machine ([`FilterState`], [`filter_step`],
//!   [`fdp_filter_step`]) and its Gaussian closed-form counterpart
//!   ([`GaussianFilterState`]);
//! * the exact value of an adaptive adversary against a filter
//!   ([`value_recursion`]) and the derived freeness check ([`is_free`]): a
//!   filter is *free* when no adaptive strategy can realize more leakage
//!   than the budget itself;
//! * explicit adversary strategies ([`StrategyTree`], [`witness_strategy`])
//!   and a simulator that replays one against a filter ([`run_session`]);
//! * constructors for the two counter-example families showing that
//!   per-session accounting does not bound adaptive adversaries:
//!   [`build_crossing_counterexample`] (piecewise-linear budgets) and
//!   [`build_gdp_budget_counterexample`] (Gaussian budgets).

use std::collections::HashMap;

use crate::curves::{make_approx_dp, GaussianTradeoff, TradeoffCurve};
use crate::num::{normal_cdf, ATOM_MERGE_TOL, PROB_FLOOR};
use crate::order::{check_commutativity, compare_plds, sup_plds, CompareOutcome};
use crate::pld::{convolve, pld_to_hockey, tradeoff_to_pld, DiscretePld};
use crate::{compose::compose_piecewise, Error, Result};

/// Maximum number of strategy branches [`value_recursion`] will enumerate.
const VALUE_BRANCH_GUARD: f64 = 1_000_000.0;

/// Maximum recursion depth accepted by [`value_recursion`].
const VALUE_DEPTH_GUARD: usize = 64;

fn is_identity_pld(p: &DiscretePld) -> bool {
    p.mass_at_infinity() <= PROB_FLOOR
        && p.atoms().len() == 1
        && p.atoms()[0].0.abs() <= ATOM_MERGE_TOL
}

// ---------------------------------------------------------------------------
// Filter state machine
// ---------------------------------------------------------------------------

/// Running state of a privacy filter: the budget it guards, the composition
/// of everything accepted so far, and the query history.
#[derive(Debug, Clone)]
pub struct FilterState {
    budget: DiscretePld,
    consumed: DiscretePld,
    history: Vec<(DiscretePld, bool)>,
    capacity: usize,
    steps_used: usize,
}

impl FilterState {
    /// Creates a fresh filter guarding `budget`, willing to consider at most
    /// `capacity` queries (accepted or not). Nothing is consumed initially.
    pub fn new(budget: DiscretePld, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Domain("filter capacity must be positive".into()));
        }
        Ok(Self {
            budget,
            consumed: DiscretePld::identity(),
            history: Vec::new(),
            capacity,
            steps_used: 0,
        })
    }

    /// The budget this filter guards.
    pub fn budget(&self) -> &DiscretePld {
        &self.budget
    }

    /// Composition of all accepted queries so far.
    pub fn consumed(&self) -> &DiscretePld {
        &self.consumed
    }

    /// Every query seen so far, paired with its accept/reject decision.
    pub fn history(&self) -> &[(DiscretePld, bool)] {
        &self.history
    }

    /// Maximum number of queries the filter will consider.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Number of queries considered so far (accepted or not).
    pub fn steps_used(&self) -> usize {
        self.steps_used
    }

    /// Queries the filter is still willing to consider.
    pub fn remaining_steps(&self) -> usize {
        self.capacity - self.steps_used
    }
}

/// Offers one query to the filter.
///
/// The query is accepted exactly when the composition of everything accepted
/// so far with this query is still dominated by the budget; only then is it
/// added to the consumed total. Either way the step counts against capacity
/// and is recorded in the history. Errors with
/// [`Error::CapacityExhausted`] once `capacity` queries have been seen.
pub fn filter_step(state: &mut FilterState, query: &DiscretePld) -> Result<bool> {
    if state.steps_used >= state.capacity {
        return Err(Error::CapacityExhausted(format!(
            "filter capacity {} exhausted",
            state.capacity
        )));
    }
    let candidate = convolve(&state.consumed, query)?;
    let accepted = compare_plds(&candidate, &state.budget).first_within_second();
    if accepted {
        state.consumed = candidate;
    }
    state.steps_used += 1;
    state.history.push((query.clone(), accepted));
    Ok(accepted)
}

/// [`filter_step`] for a query given as a tradeoff curve: the curve is
/// converted to its PLD and offered to the filter.
pub fn fdp_filter_step(state: &mut FilterState, query: &TradeoffCurve) -> Result<bool> {
    let q = tradeoff_to_pld(query)?;
    filter_step(state, &q)
}

// ---------------------------------------------------------------------------
// Gaussian filter (closed form)
// ---------------------------------------------------------------------------

/// Closed-form filter for Gaussian queries against a Gaussian budget.
///
/// Because `G_a ⪯ G_b` exactly when `a ≤ b` and Gaussian parameters compose
/// by root-sum-of-squares, domination checks reduce to comparing `Σ μᵢ²`
/// with the budget parameter squared — no curve machinery needed.
#[derive(Debug, Clone)]
pub struct GaussianFilterState {
    budget_mu: f64,
    consumed_sq: f64,
    history: Vec<(f64, bool)>,
    capacity: usize,
    steps_used: usize,
}

impl GaussianFilterState {
    /// Creates a Gaussian filter guarding the budget `G_{budget_mu}`.
    pub fn new(budget_mu: f64, capacity: usize) -> Result<Self> {
        if !budget_mu.is_finite() || budget_mu < 0.0 {
            return Err(Error::Domain(format!(
                "Gaussian budget parameter must be finite and non-negative, got {budget_mu}"
            )));
        }
        if capacity == 0 {
            return Err(Error::Domain("filter capacity must be positive".into()));
        }
        Ok(Self {
            budget_mu,
            consumed_sq: 0.0,
            history: Vec::new(),
            capacity,
            steps_used: 0,
        })
    }

    /// The budget parameter μ.
    pub fn budget_mu(&self) -> f64 {
        self.budget_mu
    }

    /// Parameter of the composition of all accepted queries, `√(Σ μᵢ²)`.
    pub fn consumed_mu(&self) -> f64 {
        self.consumed_sq.sqrt()
    }

    /// Every query parameter seen so far with its accept/reject decision.
    pub fn history(&self) -> &[(f64, bool)] {
        &self.history
    }

    /// Number of queries considered so far.
    pub fn steps_used(&self) -> usize {
        self.steps_used
    }
}

/// Offers the Gaussian query `G_mu` to the filter; accepts exactly while the
/// running sum of squared parameters stays within the budget's square.
pub fn gaussian_filter_step(state: &mut GaussianFilterState, mu: f64) -> Result<bool> {
    if state.steps_used >= state.capacity {
        return Err(Error::CapacityExhausted(format!(
            "filter capacity {} exhausted",
            state.capacity
        )));
    }
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::Domain(format!(
            "Gaussian query parameter must be finite and non-negative, got {mu}"
        )));
    }
    let accepted =
        state.consumed_sq + mu * mu <= state.budget_mu * state.budget_mu + 1e-12;
    if accepted {
        state.consumed_sq += mu * mu;
    }
    state.steps_used += 1;
    state.history.push((mu, accepted));
    Ok(accepted)
}

// ---------------------------------------------------------------------------
// Value recursion and freeness
// ---------------------------------------------------------------------------

type StateKey = (usize, Vec<(i64, i64)>, i64);

fn quantized_key(k: usize, pld: &DiscretePld) -> StateKey {
    let atoms = pld
        .atoms()
        .iter()
        .map(|&(z, p)| {
            (
                (z / ATOM_MERGE_TOL).round() as i64,
                (p / ATOM_MERGE_TOL).round() as i64,
            )
        })
        .collect();
    (
        k,
        atoms,
        (pld.mass_at_infinity() / ATOM_MERGE_TOL).round() as i64,
    )
}

fn value_with_memo(
    family: &[DiscretePld],
    budget: &DiscretePld,
    k: usize,
    consumed: &DiscretePld,
    memo: &mut HashMap<StateKey, DiscretePld>,
) -> Result<DiscretePld> {
    if k == 0 {
        return Ok(DiscretePld::identity());
    }
    let key = quantized_key(k, consumed);
    if let Some(v) = memo.get(&key) {
        return Ok(v.clone());
    }
    // Stopping is always available; playing the identity is equivalent to a
    // shorter strategy, so explicit identity members add nothing and are
    // skipped.
    let mut achievable = vec![DiscretePld::identity()];
    for q in family {
        if is_identity_pld(q) {
            continue;
        }
        let candidate = convolve(consumed, q)?;
        if !compare_plds(&candidate, budget).first_within_second() {
            continue;
        }
        let continuation = value_with_memo(family, budget, k - 1, &candidate, memo)?;
        achievable.push(convolve(q, &continuation)?);
    }
    let value = sup_plds(&achievable)?;
    memo.insert(key, value.clone());
    Ok(value)
}

fn check_value_guards(family: &[DiscretePld], k: usize) -> Result<usize> {
    if family.is_empty() {
        return Err(Error::Domain(
            "query family must contain at least one member".into(),
        ));
    }
    if k > VALUE_DEPTH_GUARD {
        return Err(Error::Guard(format!(
            "value recursion depth {k} exceeds the guard of {VALUE_DEPTH_GUARD}"
        )));
    }
    let n = family
        .iter()
        .filter(|q| !is_identity_pld(q))
        .count()
        .max(1);
    if (n as f64).powi(k as i32) > VALUE_BRANCH_GUARD {
        return Err(Error::Guard(format!(
            "value recursion would enumerate about {n}^{k} strategy branches; \
             reduce the family size or the depth"
        )));
    }
    Ok(n)
}

/// Exact value of a `k`-step adaptive adversary drawing queries from
/// `family` against a filter guarding `budget`.
///
/// The value is the least upper bound, over all adaptive strategies every
/// one of whose accepted prefixes stays dominated by the budget, of the PLD
/// the strategy realizes. It satisfies the recursion `V_0 = Id` and
/// `V_k(λ) = sup_q q ⊗ V_{k−1}(λ ⊗ q)` over accepted queries `q`, with
/// stopping always allowed (so an explicit identity member in `family` is
/// redundant but harmless). States are memoized on the consumed PLD.
pub fn value_recursion(
    family: &[DiscretePld],
    budget: &DiscretePld,
    k: usize,
) -> Result<DiscretePld> {
    check_value_guards(family, k)?;
    let mut memo = HashMap::new();
    value_with_memo(family, budget, k, &DiscretePld::identity(), &mut memo)
}

/// Outcome of a freeness check: the adversary value, its comparison against
/// the budget, and the verdict.
#[derive(Debug, Clone)]
pub struct ValueReport {
    /// The adversary value `V_k` from [`value_recursion`].
    pub value: DiscretePld,
    /// Comparison of the value against the budget; when not free its
    /// witnesses locate the strict excess.
    pub comparison: CompareOutcome,
    /// True when the value is dominated by the budget.
    pub free: bool,
}

/// Checks whether the filter guarding `budget` is *free* for `k`-step
/// adversaries over `family`: free means no adaptive strategy can realize
/// more leakage than the budget itself admits.
pub fn is_free(family: &[DiscretePld], budget: &DiscretePld, k: usize) -> Result<ValueReport> {
    let value = value_recursion(family, budget, k)?;
    let comparison = compare_plds(&value, budget);
    let free = comparison.first_within_second();
    Ok(ValueReport {
        value,
        comparison,
        free,
    })
}

// ---------------------------------------------------------------------------
// Strategy trees and session simulation
// ---------------------------------------------------------------------------

/// A deterministic adaptive strategy: a query to issue, and one continuation
/// per observable outcome of that query.
///
/// `children` is indexed by the outcome labels of the query's testing-pair
/// realization, in order: one entry per finite atom (ascending likelihood
/// exponent), then the +∞ label if the query has mass at infinity, then the
/// deficit label if present. `None` stops that branch; an empty vector stops
/// on every outcome. Continuations attached to the +∞ or deficit labels are
/// ignored: the deficit label never occurs under the null distribution, and
/// once the likelihood ratio is infinite no further query can change it.
#[derive(Debug, Clone)]
pub struct StrategyTree {
    /// The query issued at this node.
    pub query: DiscretePld,
    /// Continuations per outcome label; see the type-level docs for layout.
    pub children: Vec<Option<StrategyTree>>,
}

impl StrategyTree {
    /// A strategy that issues `query` once and stops on every outcome.
    pub fn leaf(query: DiscretePld) -> Self {
        Self {
            query,
            children: Vec::new(),
        }
    }
}

/// One filter interaction in a simulated session.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// Outcome indices from the root to the node that issued this query.
    pub path: Vec<usize>,
    /// The query offered to the filter.
    pub query: DiscretePld,
    /// Whether the filter accepted it.
    pub accepted: bool,
    /// Composition consumed on this path after the decision.
    pub consumed_after: DiscretePld,
}

/// Full record of an adaptive strategy run against a filter.
#[derive(Debug, Clone)]
pub struct SessionTranscript {
    /// Every query issued, in pre-order over the strategy tree.
    pub steps: Vec<StepRecord>,
    /// The PLD the strategy realizes end to end.
    pub realized: DiscretePld,
    /// The budget the filter guarded.
    pub budget: DiscretePld,
    /// Comparison of the realized PLD against the budget.
    pub verdict: CompareOutcome,
    /// True when the realized PLD is dominated by the budget.
    pub within_budget: bool,
    /// Set when the strategy was deeper than the session capacity and had to
    /// be truncated.
    pub warning: Option<String>,
}

#[allow(clippy::too_many_arguments)]
fn walk_strategy(
    node: &StrategyTree,
    consumed: &DiscretePld,
    depth_remaining: usize,
    path: &mut Vec<usize>,
    budget: &DiscretePld,
    steps: &mut Vec<StepRecord>,
    warning: &mut Option<String>,
    capacity: usize,
) -> Result<DiscretePld> {
    if depth_remaining == 0 {
        if warning.is_none() {
            *warning = Some(format!(
                "strategy tree is deeper than the session capacity {capacity}; \
                 queries beyond the capacity were not issued"
            ));
        }
        return Ok(DiscretePld::identity());
    }
    let query = &node.query;
    let candidate = convolve(consumed, query)?;
    let accepted = compare_plds(&candidate, budget).first_within_second();
    steps.push(StepRecord {
        path: path.clone(),
        query: query.clone(),
        accepted,
        consumed_after: if accepted {
            candidate.clone()
        } else {
            consumed.clone()
        },
    });
    if !accepted {
        // A rejected query is not run, so the adversary observes nothing and
        // this branch of the session ends.
        return Ok(DiscretePld::identity());
    }
    let mut label_count = query.atoms().len();
    if query.mass_at_infinity() > 0.0 {
        label_count += 1;
    }
    if 1.0 - query.ee_neg_z() > PROB_FLOOR {
        label_count += 1;
    }
    if !node.children.is_empty() && node.children.len() != label_count {
        return Err(Error::Domain(format!(
            "strategy node has {} children but its query has {} outcome labels",
            node.children.len(),
            label_count
        )));
    }
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    let mut inf_mass = query.mass_at_infinity();
    for (idx, &(z, p)) in query.atoms().iter().enumerate() {
        match node.children.get(idx).and_then(|c| c.as_ref()) {
            None => atoms.push((z, p)),
            Some(child) => {
                path.push(idx);
                let sub = walk_strategy(
                    child,
                    &candidate,
                    depth_remaining - 1,
                    path,
                    budget,
                    steps,
                    warning,
                    capacity,
                )?;
                path.pop();
                for &(zc, pc) in sub.atoms() {
                    atoms.push((z + zc, p * pc));
                }
                inf_mass += p * sub.mass_at_infinity();
            }
        }
    }
    DiscretePld::new(atoms, inf_mass)
}

/// Replays an adaptive strategy against a filter guarding `budget`.
///
/// The walk visits every strategy branch (each branch is one possible
/// session); per branch the filter state is the composition of the accepted
/// queries along that path. Rejected queries end their branch. Branches
/// deeper than `capacity` are truncated and reported in `warning`. The
/// realized PLD mixes each outcome's likelihood contribution with its
/// subtree's realization, so a strategy that ignores outcomes realizes
/// exactly the convolution of its queries.
pub fn run_session(
    strategy: &StrategyTree,
    budget: &DiscretePld,
    capacity: usize,
) -> Result<SessionTranscript> {
    if capacity == 0 {
        return Err(Error::Domain("session capacity must be positive".into()));
    }
    let mut steps = Vec::new();
    let mut warning = None;
    let mut path = Vec::new();
    let realized = walk_strategy(
        strategy,
        &DiscretePld::identity(),
        capacity,
        &mut path,
        budget,
        &mut steps,
        &mut warning,
        capacity,
    )?;
    let verdict = compare_plds(&realized, budget);
    let within_budget = verdict.first_within_second();
    Ok(SessionTranscript {
        steps,
        realized,
        budget: budget.clone(),
        verdict,
        within_budget,
        warning,
    })
}

/// Builds an adaptive strategy maximizing the realized hockey-stick value at
/// threshold `x` over `steps` filter interactions.
///
/// At each state the builder plays the accepted query maximizing the value
/// recursion's continuation at the branch-local threshold, then recurses per
/// finite outcome with the threshold reweighted by that outcome's
/// likelihood. Branches where stopping is optimal return leaves. The
/// resulting tree, run through [`run_session`], realizes the value
/// recursion's hockey-stick value at `x` exactly.
pub fn witness_strategy(
    menu: &[DiscretePld],
    budget: &DiscretePld,
    steps: usize,
    x: f64,
) -> Result<StrategyTree> {
    if steps == 0 {
        return Err(Error::Domain(
            "witness strategy needs at least one step".into(),
        ));
    }
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!(
            "hockey-stick threshold must be finite and non-negative, got {x}"
        )));
    }
    check_value_guards(menu, steps)?;
    let mut memo = HashMap::new();
    let node = witness_node(menu, budget, steps, &DiscretePld::identity(), x, &mut memo)?;
    Ok(node.unwrap_or_else(|| StrategyTree {
        query: DiscretePld::identity(),
        children: vec![None],
    }))
}

fn witness_node(
    menu: &[DiscretePld],
    budget: &DiscretePld,
    remaining: usize,
    consumed: &DiscretePld,
    x: f64,
    memo: &mut HashMap<StateKey, DiscretePld>,
) -> Result<Option<StrategyTree>> {
    if remaining == 0 {
        return Ok(None);
    }
    let stop_value = (1.0 - x).max(0.0);
    let mut best: Option<(f64, usize, DiscretePld)> = None;
    for (idx, q) in menu.iter().enumerate() {
        if is_identity_pld(q) {
            continue;
        }
        let candidate = convolve(consumed, q)?;
        if !compare_plds(&candidate, budget).first_within_second() {
            continue;
        }
        let continuation = value_with_memo(menu, budget, remaining - 1, &candidate, memo)?;
        let played = convolve(q, &continuation)?;
        let score = pld_to_hockey(&played).eval(x);
        if best.as_ref().is_none_or(|&(s, _, _)| score > s + 1e-12) {
            best = Some((score, idx, candidate));
        }
    }
    let Some((score, idx, candidate)) = best else {
        return Ok(None);
    };
    if score <= stop_value + 1e-12 {
        return Ok(None);
    }
    let query = menu[idx].clone();
    let mut children = Vec::new();
    for &(z, _) in query.atoms() {
        let target = x * (-z).exp();
        children.push(witness_node(
            menu,
            budget,
            remaining - 1,
            &candidate,
            target,
            memo,
        )?);
    }
    if query.mass_at_infinity() > 0.0 {
        children.push(None);
    }
    if 1.0 - query.ee_neg_z() > PROB_FLOOR {
        children.push(None);
    }
    Ok(Some(StrategyTree { query, children }))
}

// ---------------------------------------------------------------------------
// Crossing counter-example
// ---------------------------------------------------------------------------

/// Certified counter-example showing that composing with a supremum leaks
/// strictly more than the envelope of fixed compositions when the two
/// generator curves cross.
///
/// Both curves are linear on `(0, alpha_range_end]` starting from the same
/// value at 0, so the strict separation there is certified by the slope
/// comparison; the bundle carries measured and closed-form slopes plus the
/// maximal gap over the whole range.
#[derive(Debug, Clone)]
pub struct CrossingBundle {
    /// Which initial-slope regime the pair falls in (1 or 2).
    pub case_id: u8,
    /// Steeper generator's parameters (after normalization `eps1 > eps2`).
    pub eps1: f64,
    /// Steeper generator's intercept mass.
    pub delta1: f64,
    /// Shallower generator's parameter.
    pub eps2: f64,
    /// Shallower generator's intercept mass.
    pub delta2: f64,
    /// Right end of the certified strict-separation range (the square of the
    /// steeper curve's fixed-point abscissa).
    pub alpha_range_end: f64,
    /// Tradeoff curve of the adaptive route: steeper generator composed with
    /// the supremum of both.
    pub lhs_curve: TradeoffCurve,
    /// Tradeoff curve of the per-session route: lower convex envelope of the
    /// two fixed compositions.
    pub rhs_curve: TradeoffCurve,
    /// Measured initial slope of the adaptive route.
    pub lhs_slope: f64,
    /// Measured initial slope of the per-session route.
    pub rhs_slope: f64,
    /// Closed-form initial slope of the adaptive route (available in case 1
    /// only).
    pub lhs_slope_closed_form: Option<f64>,
    /// Closed-form initial slope of the per-session route.
    pub rhs_slope_closed_form: f64,
    /// Largest pointwise gap between the routes.
    pub max_gap: f64,
    /// α position of the largest gap.
    pub gap_location: f64,
}

/// Builds and certifies a crossing counter-example from two approximate-DP
/// generators `(eps1, delta1)` and `(eps2, delta2)`.
///
/// The arguments are normalized so the first generator is the steeper one;
/// if the two curves do not properly cross the construction is impossible
/// and a [`Error::Domain`] is returned. The adaptive route (compose with the
/// supremum) and the per-session route (envelope of the fixed compositions)
/// are computed independently and the strict separation near 0 is verified
/// before the bundle is returned.
pub fn build_crossing_counterexample(
    eps1: f64,
    delta1: f64,
    eps2: f64,
    delta2: f64,
) -> Result<CrossingBundle> {
    let (e1, d1, e2, d2) = if eps1 >= eps2 {
        (eps1, delta1, eps2, delta2)
    } else {
        (eps2, delta2, eps1, delta1)
    };
    let f1 = make_approx_dp(e1, d1)?;
    let f2 = make_approx_dp(e2, d2)?;

    // A proper crossing needs the steeper curve to start higher (smaller
    // intercept mass) yet dip below the shallower one; since the difference
    // is piecewise linear it suffices to check the two interior kinks.
    let alpha1_star = (1.0 - d1) / (1.0 + e1.exp());
    let alpha2_star = (1.0 - d2) / (1.0 + e2.exp());
    let diff = |alpha: f64| f1.eval(alpha) - f2.eval(alpha);
    let starts_higher = d2 - d1 > 1e-12;
    let dips_below = diff(alpha1_star) < -1e-12 || diff(alpha2_star) < -1e-12;
    if !(starts_higher && dips_below) {
        return Err(Error::Domain(format!(
            "curves do not cross: ({e1}, {d1}) and ({e2}, {d2}) are ordered"
        )));
    }

    let g1 = tradeoff_to_pld(&f1)?;
    let g2 = tradeoff_to_pld(&f2)?;
    let report = check_commutativity(&g1, &[g1.clone(), g2])?;
    let lhs_curve = report.compose_with_sup;
    let rhs_curve = report.sup_of_composes;

    let f11 = compose_piecewise(&f1, &f1)?;
    let f12 = compose_piecewise(&f1, &f2)?;
    let alpha_range_end = alpha1_star * alpha1_star;
    let case_id: u8 = if f11.eval(alpha_range_end) < f12.eval(alpha_range_end) - 1e-12 {
        1
    } else {
        2
    };

    let ee1 = e1.exp();
    let rhs_slope_closed_form = if case_id == 1 {
        (1.0 + ee1) * (d2 - d1) / alpha1_star - ee1 * ee1
    } else {
        -(e1 + e2).exp()
    };
    let lhs_slope_closed_form = (case_id == 1)
        .then(|| ee1 * (d2 - d1) / alpha1_star - ee1 * ee1);

    let lhs_slope = lhs_curve.segments()[0].slope;
    let rhs_slope = rhs_curve.segments()[0].slope;

    // Both routes agree at 0 and are linear up to alpha_range_end, so strict
    // separation on the half-open range follows from a strict gap at the end
    // point; check the midpoint as well as a numerical belt-and-braces.
    for alpha in [alpha_range_end, 0.5 * alpha_range_end] {
        if rhs_curve.eval(alpha) - lhs_curve.eval(alpha) <= 1e-12 {
            return Err(Error::SearchFailure(format!(
                "strict separation failed to certify at alpha = {alpha} for \
                 generators ({e1}, {d1}) and ({e2}, {d2})"
            )));
        }
    }

    Ok(CrossingBundle {
        case_id,
        eps1: e1,
        delta1: d1,
        eps2: e2,
        delta2: d2,
        alpha_range_end,
        lhs_curve,
        rhs_curve,
        lhs_slope,
        rhs_slope,
        lhs_slope_closed_form,
        rhs_slope_closed_form,
        max_gap: report.max_gap,
        gap_location: report.location,
    })
}

// ---------------------------------------------------------------------------
// Gaussian-budget counter-example
// ---------------------------------------------------------------------------

/// Which generator pair a Gaussian-budget counter-example is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GdpBudgetKind {
    /// Pure generators: a single step against the composition of two smaller
    /// pure steps.
    Pure,
    /// Approximate generators with a matching intercept-shifted budget.
    Approx,
}

/// Certified counter-example for Gaussian budgets: a shifted Gaussian
/// tradeoff curve that dominates every fixed session from a crossing
/// generator pair yet is exceeded by the adaptive route.
#[derive(Debug, Clone)]
pub struct GdpBundle {
    /// The generator pair the bundle was built from.
    pub kind: GdpBudgetKind,
    /// Certified Gaussian budget parameter.
    pub mu: f64,
    /// Intercept mass the budget is shifted by (0 for the pure pair).
    pub budget_delta: f64,
    /// Tradeoff curve of the adaptive route (compose with the supremum).
    pub lhs_curve: TradeoffCurve,
    /// Lower convex envelope of the fixed sessions.
    pub rhs_curve: TradeoffCurve,
    /// Smallest grid margin by which the budget stays below the envelope.
    pub accept_margin: f64,
    /// α position of the smallest acceptance margin.
    pub accept_margin_at: f64,
    /// Largest amount by which the budget exceeds the adaptive route.
    pub violation_gap: f64,
    /// α position of the largest violation.
    pub violation_at: f64,
    /// Right end of the near-zero region certified structurally (by slope
    /// comparison) rather than on the grid.
    pub near_zero_cutoff: f64,
    /// Whether the tail beyond the grid was certified by the chord bound.
    pub tail_chord_ok: bool,
    /// Number of certification grid points.
    pub grid_points: usize,
    /// Lower end of the certification grid.
    pub grid_lo: f64,
    /// Upper end of the certification grid.
    pub grid_hi: f64,
    /// Budget parameters tried, in order, up to and including the certified
    /// one.
    pub searched_mus: Vec<f64>,
    /// `(α, adaptive, envelope, budget)` samples on a uniform 1001-point
    /// grid over [0, 1].
    pub samples: Vec<(f64, f64, f64, f64)>,
}

/// Searches a small parameter grid for a shifted Gaussian budget that
/// certifies the counter-example of the given kind.
///
/// Certification demands, for some `μ` in the grid: the budget stays below
/// the fixed-session envelope by at least `margin` on a 2000-point interior
/// grid, the near-zero region is covered by a slope-comparison argument and
/// the far tail by a chord bound, and the adaptive route dips below the
/// budget by at least `margin` somewhere. Fails with
/// [`Error::SearchFailure`] (summarizing the searched grid) when no
/// parameter certifies, e.g. for unattainably large margins.
pub fn build_gdp_budget_counterexample(kind: GdpBudgetKind, margin: f64) -> Result<GdpBundle> {
    if !margin.is_finite() || margin <= 0.0 {
        return Err(Error::Domain(format!(
            "certification margin must be finite and positive, got {margin}"
        )));
    }
    let (g1, g2, budget_delta, mu_grid) = match kind {
        GdpBudgetKind::Pure => {
            // The adaptive pivot must be the two-step composite: its three
            // outcomes spread the branch thresholds widely enough that
            // different branches prefer different continuations, which is
            // what opens the gap. (With the single-step mechanism as the
            // pivot the adaptive route collapses onto the envelope.)
            let single = tradeoff_to_pld(&make_approx_dp(3.0f64.ln(), 0.0)?)?;
            let half = tradeoff_to_pld(&make_approx_dp(2.0f64.ln(), 0.0)?)?;
            let double = convolve(&half, &half)?;
            let grid: Vec<f64> = (0..=10).map(|i| 1.40 + 0.02 * i as f64).collect();
            (double, single, 0.0, grid)
        }
        GdpBudgetKind::Approx => {
            let g1 = tradeoff_to_pld(&make_approx_dp(4.0f64.ln(), 0.01)?)?;
            let g2 = tradeoff_to_pld(&make_approx_dp(2.0f64.ln(), 0.1)?)?;
            let delta = 1.0 - 0.99 * 0.9;
            (g1, g2, delta, vec![1.8, 1.9, 2.0, 2.1])
        }
    };
    let report = check_commutativity(&g1, &[g1.clone(), g2])?;
    let lhs_curve = report.compose_with_sup;
    let rhs_curve = report.sup_of_composes;

    let scale = 1.0 - budget_delta;
    let grid_lo = 1e-3;
    let grid_hi = 0.995 * scale;
    let grid_points = 2000usize;

    // Structural ingredients of the envelope used off the grid: its initial
    // slope (near-zero region), its final descending slope and zero point
    // (tail chord).
    let first_slope = rhs_curve.segments()[0].slope.abs();
    let first_width = rhs_curve.segments()[0].width;
    let mut final_slope = f64::INFINITY;
    let mut zero_point = 1.0;
    for seg in rhs_curve.segments() {
        if seg.slope < -1e-15 && seg.width > 0.0 {
            final_slope = seg.slope.abs();
        }
    }
    for (alpha, value) in rhs_curve.breakpoints() {
        if value <= 1e-12 {
            zero_point = alpha;
            break;
        }
    }

    let mut searched_mus = Vec::new();
    let mut best_summary = String::new();
    for mu in mu_grid {
        searched_mus.push(mu);
        let gauss = GaussianTradeoff::new(mu)?;
        let budget = |alpha: f64| {
            if alpha >= scale {
                0.0
            } else {
                scale * gauss.eval(alpha / scale)
            }
        };

        // Near-zero region: the budget's slope magnitude exceeds the
        // envelope's initial slope up to this cutoff, pinning the budget
        // under the envelope's first ray there.
        let cutoff = scale * normal_cdf((-first_slope.ln() - 0.5 * mu * mu) / mu);
        let near_zero_ok = cutoff >= grid_lo && cutoff <= first_width;

        // Tail: the envelope dominates the chord of slope `final_slope`
        // into its zero point, and the convex budget stays under that chord
        // as soon as it is under it at the last grid point.
        let tail_chord_ok =
            zero_point > grid_hi && budget(grid_hi) <= final_slope * (zero_point - grid_hi);

        let mut accept_margin = f64::INFINITY;
        let mut accept_margin_at = grid_lo;
        let mut violation = f64::INFINITY;
        let mut violation_at = grid_lo;
        for i in 0..grid_points {
            let alpha =
                grid_lo + (grid_hi - grid_lo) * i as f64 / (grid_points - 1) as f64;
            let b = budget(alpha);
            let head = rhs_curve.eval(alpha) - b;
            if head < accept_margin {
                accept_margin = head;
                accept_margin_at = alpha;
            }
            let excess = lhs_curve.eval(alpha) - b;
            if excess < violation {
                violation = excess;
                violation_at = alpha;
            }
        }

        if near_zero_ok && tail_chord_ok && accept_margin >= margin && violation <= -margin {
            let samples = (0..=1000)
                .map(|i| {
                    let alpha = i as f64 / 1000.0;
                    (
                        alpha,
                        lhs_curve.eval(alpha),
                        rhs_curve.eval(alpha),
                        budget(alpha),
                    )
                })
                .collect();
            return Ok(GdpBundle {
                kind,
                mu,
                budget_delta,
                lhs_curve,
                rhs_curve,
                accept_margin,
                accept_margin_at,
                violation_gap: -violation,
                violation_at,
                near_zero_cutoff: cutoff,
                tail_chord_ok,
                grid_points,
                grid_lo,
                grid_hi,
                searched_mus,
                samples,
            });
        }
        best_summary.push_str(&format!(
            " mu={mu:.2}: acceptance margin {accept_margin:.3e}, \
             best violation {violation:.3e};"
        ));
    }
    Err(Error::SearchFailure(format!(
        "no Gaussian budget certified at margin {margin:.3e}; searched{best_summary}"
    )))
}
