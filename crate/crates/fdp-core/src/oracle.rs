//! Brute-force Neyman–Pearson oracles over explicit finite testing pairs.
//!
//! These routines never touch the closed-form conversion code: they sweep
//! likelihood ratios directly. They exist so the exact algorithms elsewhere
//! in the crate can be cross-checked against an independent computation,
//! and they stay deliberately naive — product spaces are materialized in
//! full, with a guard on size.

use crate::curves::{Segment, TradeoffCurve};
use crate::pld::TestingPair;
use crate::{Error, Result};

/// Exact tradeoff curve of a finite testing pair by the Neyman–Pearson
/// sweep: outcomes are rejected in increasing order of `P(i)/Q(i)`.
///
/// Outcomes with `P(i) = 0` are rejected for free and form the α = 0 drop;
/// outcomes with `Q(i) = 0` can never reduce the type II error and form the
/// terminal zero-slope run.
pub fn np_tradeoff(pair: &TestingPair) -> Result<TradeoffCurve> {
    let (p_total, q_total) = pair.totals();
    if (p_total - 1.0).abs() > 1e-6 || (q_total - 1.0).abs() > 1e-6 {
        return Err(Error::Domain(format!(
            "testing pair marginals must each sum to 1 (got {p_total}, {q_total})"
        )));
    }
    let mut delta_at_zero = 0.0;
    let mut segments: Vec<Segment> = Vec::with_capacity(pair.outcomes.len());
    for &(p, q) in &pair.outcomes {
        if p < 0.0 || q < 0.0 || !p.is_finite() || !q.is_finite() {
            return Err(Error::Domain(format!(
                "testing pair entries must be finite and non-negative (got ({p}, {q}))"
            )));
        }
        if p == 0.0 {
            delta_at_zero += q;
        } else if q == 0.0 {
            segments.push(Segment::new(p, 0.0));
        } else {
            segments.push(Segment::new(p, -q / p));
        }
    }
    // TradeoffCurve::new sorts steepest-first (ascending ratio) and merges
    // equal-ratio groups, which is exactly the Neyman–Pearson ordering.
    TradeoffCurve::new(segments, delta_at_zero)
}

/// Realizes a tradeoff curve as a concrete testing pair on a uniform grid.
///
/// P is uniform over `grid` cells; cell `i` (covering `α ∈ [i/g, (i+1)/g]`)
/// gets Q-mass `f(1−(i+1)/g) − f(1−i/g)`, and a terminal label that P never
/// emits carries Q's α = 0 drop `1 − f(0)`. The Neyman–Pearson curve of the
/// result converges to `f` from above as the grid refines.
pub fn realize(f: &TradeoffCurve, grid: usize) -> Result<TestingPair> {
    if !(10..=2_000_000).contains(&grid) {
        return Err(Error::Guard(format!(
            "realization grid must be in [10, 2000000], got {grid}"
        )));
    }
    let g = grid as f64;
    let p_cell = 1.0 / g;
    let mut outcomes = Vec::with_capacity(grid + 1);
    for i in 0..grid {
        let a = i as f64 / g;
        let b = (i + 1) as f64 / g;
        let q = (f.eval(1.0 - b) - f.eval(1.0 - a)).max(0.0);
        outcomes.push((p_cell, q));
    }
    let drop = 1.0 - f.eval(0.0);
    if drop > 0.0 {
        outcomes.push((0.0, drop));
    }
    Ok(TestingPair { outcomes })
}

/// The product testing pair: labels are ordered pairs of labels, with
/// independent probabilities under both hypotheses.
pub fn product_pair(a: &TestingPair, b: &TestingPair) -> Result<TestingPair> {
    let n = a.outcomes.len().saturating_mul(b.outcomes.len());
    if n > 4_000_000 {
        return Err(Error::Guard(format!(
            "product testing pair would have {n} outcomes"
        )));
    }
    let mut outcomes = Vec::with_capacity(n);
    for &(p1, q1) in &a.outcomes {
        for &(p2, q2) in &b.outcomes {
            outcomes.push((p1 * p2, q1 * q2));
        }
    }
    Ok(TestingPair { outcomes })
}

/// Composition oracle for testing pairs: the tradeoff curve of running both
/// pairs and testing on the joint outcome, computed by brute force on the
/// product space.
pub fn np_compose_pairs(a: &TestingPair, b: &TestingPair) -> Result<TradeoffCurve> {
    np_tradeoff(&product_pair(a, b)?)
}

/// Composition oracle for tradeoff curves: realizes each curve on a uniform
/// grid, forms the product testing pair, and sweeps its likelihood ratios.
///
/// This route never touches the piecewise composition algebra, so it serves
/// as an independent check of it. The result converges to the exact composed
/// curve from above as the grid refines; the approximation error is bounded
/// by (steepest slope magnitude) / grid.
pub fn np_compose_oracle(f1: &TradeoffCurve, f2: &TradeoffCurve, grid: usize) -> Result<TradeoffCurve> {
    if grid > 2000 {
        return Err(Error::Guard(format!(
            "composition oracle grid must be at most 2000, got {grid}"
        )));
    }
    np_compose_pairs(&realize(f1, grid)?, &realize(f2, grid)?)
}
