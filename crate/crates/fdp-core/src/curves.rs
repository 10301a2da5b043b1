//! Tradeoff curves: piecewise-linear test-error profiles (covering every
//! (ε,δ)-style guarantee) and the analytic Gaussian family.
//!
//! A tradeoff curve maps a type-I error budget α ∈ [0,1] to the least
//! type-II error β achievable by any test distinguishing a mechanism's
//! outputs on neighbouring inputs. Every valid curve is continuous, convex,
//! decreasing, bounded above by 1 − α, and reaches 0 at α = 1.
//!
//! Piecewise-linear curves are stored as `(width, slope)` runs sorted
//! steepest-first together with the deficit 1 − f(0) at α = 0. This is the
//! representation in which exact composition is naturally stated; breakpoint
//! lists are derived on demand.

use crate::num::eps;
use crate::{Error, Result};

/// One linear run of a piecewise-linear tradeoff curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    /// Horizontal extent of the run; strictly positive. All widths sum to 1.
    pub width: f64,
    /// Slope of the run; never positive.
    pub slope: f64,
}

impl Segment {
    /// Convenience constructor.
    pub fn new(width: f64, slope: f64) -> Self {
        Segment { width, slope }
    }
}

/// Piecewise-linear tradeoff curve in canonical form.
///
/// Canonical form means: segments sorted by decreasing slope magnitude, no
/// two adjacent segments within slope tolerance of each other, no zero-width
/// segments, widths summing to 1, and `(1 − delta_at_zero) − Σ width·|slope|
/// = 0` so the curve reaches 0 exactly at α = 1. A terminal zero-slope
/// segment is present whenever the curve hits 0 before α = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffCurve {
    segments: Vec<Segment>,
    delta_at_zero: f64,
}

impl TradeoffCurve {
    /// Builds a curve from raw segments, canonicalizing (sort steepest-first,
    /// merge near-equal slopes, drop empty runs) and validating.
    pub fn new(segments: Vec<Segment>, delta_at_zero: f64) -> Result<Self> {
        let mut segs: Vec<Segment> = Vec::with_capacity(segments.len());
        for (i, s) in segments.iter().enumerate() {
            if !s.width.is_finite() || !s.slope.is_finite() {
                return Err(Error::Invalid {
                    kind: "tradeoff curve",
                    violations: vec![format!("segment {i} is not finite: {s:?}")],
                });
            }
            if s.width < -eps() {
                return Err(Error::Invalid {
                    kind: "tradeoff curve",
                    violations: vec![format!("segment {i} has negative width {}", s.width)],
                });
            }
            if s.slope > eps() {
                return Err(Error::Invalid {
                    kind: "tradeoff curve",
                    violations: vec![format!("segment {i} has positive slope {}", s.slope)],
                });
            }
            if s.width <= 0.0 {
                continue; // empty run carries nothing
            }
            segs.push(Segment::new(s.width, s.slope.min(0.0)));
        }
        segs.sort_by(|a, b| a.slope.total_cmp(&b.slope));
        let mut merged: Vec<Segment> = Vec::with_capacity(segs.len());
        for s in segs {
            match merged.last_mut() {
                Some(last) => {
                    let tol = eps() * 1.0_f64.max(last.slope.abs()).max(s.slope.abs());
                    if (last.slope - s.slope).abs() <= tol {
                        // Mass-weighted slope keeps both Σwidth and
                        // Σ width·slope unchanged by the merge.
                        let w = last.width + s.width;
                        last.slope = (last.width * last.slope + s.width * s.slope) / w;
                        last.width = w;
                    } else {
                        merged.push(s);
                    }
                }
                None => merged.push(s),
            }
        }
        let curve = TradeoffCurve {
            segments: merged,
            delta_at_zero,
        };
        let violations = curve.validate();
        if violations.is_empty() {
            Ok(curve)
        } else {
            Err(Error::Invalid {
                kind: "tradeoff curve",
                violations,
            })
        }
    }

    /// Builds a curve from its breakpoint polyline. The vertices must start
    /// at α = 0, end at exactly (1, 0), be strictly increasing in α, and
    /// trace a convex decreasing function.
    pub fn from_vertices(vertices: &[(f64, f64)]) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Domain(
                "need at least two vertices for a tradeoff polyline".into(),
            ));
        }
        let first = vertices[0];
        let last = vertices[vertices.len() - 1];
        if first.0.abs() > eps() || (last.0 - 1.0).abs() > eps() || last.1.abs() > eps() {
            return Err(Error::Domain(format!(
                "tradeoff polyline must span (0, f(0)) to (1, 0); got {first:?} .. {last:?}"
            )));
        }
        let mut segments = Vec::with_capacity(vertices.len() - 1);
        for pair in vertices.windows(2) {
            let (a0, v0) = pair[0];
            let (a1, v1) = pair[1];
            let w = a1 - a0;
            if w <= 0.0 {
                continue;
            }
            segments.push(Segment::new(w, (v1 - v0) / w));
        }
        // The last vertex pins f(1) = 0, so the accumulated drop matches
        // f(0) by construction and validation will pass.
        TradeoffCurve::new(segments, 1.0 - first.1)
    }

    /// Builds a curve without canonicalization or validation. Intended for
    /// diagnostics and tests that need to inspect invalid representations
    /// via [`TradeoffCurve::validate`].
    pub fn from_raw_parts(segments: Vec<Segment>, delta_at_zero: f64) -> Self {
        TradeoffCurve {
            segments,
            delta_at_zero,
        }
    }

    /// The identity curve f(α) = 1 − α of a perfectly private mechanism.
    pub fn identity() -> Self {
        TradeoffCurve {
            segments: vec![Segment::new(1.0, -1.0)],
            delta_at_zero: 0.0,
        }
    }

    /// Canonical segment list, steepest slope first.
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// The deficit 1 − f(0) at α = 0.
    pub fn delta_at_zero(&self) -> f64 {
        self.delta_at_zero
    }

    /// Checks every representation invariant; returns one message per
    /// violation (empty for a valid canonical curve).
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(-eps()..=1.0 + eps()).contains(&self.delta_at_zero) {
            out.push(format!("deltaAtZero {} outside [0, 1]", self.delta_at_zero));
        }
        let mut width_sum = 0.0;
        let mut drop_sum = 0.0;
        for (i, s) in self.segments.iter().enumerate() {
            if !s.width.is_finite() || s.width <= 0.0 {
                out.push(format!("segment {i} width {} not strictly positive", s.width));
            }
            if !s.slope.is_finite() || s.slope > eps() {
                out.push(format!("segment {i} slope {} is positive", s.slope));
            }
            if i > 0 {
                let prev = self.segments[i - 1].slope;
                let tol = eps() * 1.0_f64.max(prev.abs()).max(s.slope.abs());
                if s.slope < prev - tol {
                    out.push(format!(
                        "segment {i} slope {} steeper than predecessor {} (not sorted)",
                        s.slope, prev
                    ));
                }
            }
            width_sum += s.width;
            drop_sum += s.width * s.slope.abs();
        }
        if (width_sum - 1.0).abs() > eps() {
            out.push(format!("widths sum to {width_sum}, expected 1"));
        }
        let residual = (1.0 - self.delta_at_zero) - drop_sum;
        if residual.abs() > eps() {
            out.push(format!(
                "f(1) = {residual} instead of 0 (total drop {drop_sum} vs f(0) = {})",
                1.0 - self.delta_at_zero
            ));
        }
        out
    }

    /// Evaluates the curve at `alpha` ∈ [0, 1].
    pub fn eval(&self, alpha: f64) -> f64 {
        assert!(
            (-eps()..=1.0 + eps()).contains(&alpha),
            "tradeoff curve evaluated outside [0,1]: {alpha}"
        );
        let mut remaining = alpha.clamp(0.0, 1.0);
        let mut value = 1.0 - self.delta_at_zero;
        for s in &self.segments {
            let take = remaining.min(s.width);
            value += take * s.slope;
            remaining -= take;
            if remaining <= 0.0 {
                break;
            }
        }
        value.clamp(0.0, 1.0)
    }

    /// Breakpoint polyline: (0, f(0)), one vertex after each segment, ending
    /// at (1, 0) up to float noise.
    pub fn breakpoints(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        let mut a = 0.0;
        let mut v = 1.0 - self.delta_at_zero;
        out.push((a, v));
        for s in &self.segments {
            a += s.width;
            v += s.width * s.slope;
            out.push((a.min(1.0), v.max(0.0)));
        }
        out
    }

    /// The unique α with f(α) = α; exists because f(α) − α falls strictly
    /// from f(0) ≥ 0 to −1.
    pub fn symmetric_fixed_point(&self) -> f64 {
        let mut a0 = 0.0;
        let mut v0 = 1.0 - self.delta_at_zero;
        if v0 <= 0.0 {
            return 0.0;
        }
        for s in &self.segments {
            let a1 = a0 + s.width;
            let v1 = v0 + s.width * s.slope;
            // Solve v0 + slope·(α − a0) = α on this run.
            let candidate = (v0 - s.slope * a0) / (1.0 - s.slope);
            if candidate >= a0 - eps() && candidate <= a1 + eps() {
                return candidate.clamp(0.0, 1.0);
            }
            a0 = a1;
            v0 = v1;
        }
        // f(1) = 0 < 1 guarantees we never get here with a valid curve.
        1.0_f64.min(a0)
    }
}

/// The (ε,δ) tradeoff curve max{0, 1 − δ − e^ε·α, e^{−ε}(1 − δ − α)}.
///
/// Canonically: slope −e^ε on [0, α*] with α* = (1−δ)/(1+e^ε), slope −e^{−ε}
/// on [α*, 1−δ], slope 0 on [1−δ, 1]. Degenerate parameters collapse
/// segments (ε = 0 merges the first two; δ = 1 yields the zero curve).
pub fn make_approx_dp(epsilon: f64, delta: f64) -> Result<TradeoffCurve> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::Domain(format!(
            "approx-DP needs finite ε ≥ 0, got {epsilon}"
        )));
    }
    if epsilon > 700.0 {
        return Err(Error::Domain(format!("ε = {epsilon} overflows e^ε")));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Domain(format!("δ = {delta} outside [0, 1]")));
    }
    if delta >= 1.0 {
        return TradeoffCurve::new(vec![Segment::new(1.0, 0.0)], 1.0);
    }
    let e = epsilon.exp();
    let alpha_star = (1.0 - delta) / (1.0 + e);
    TradeoffCurve::new(
        vec![
            Segment::new(alpha_star, -e),
            Segment::new((1.0 - delta) - alpha_star, -1.0 / e),
            Segment::new(delta, 0.0),
        ],
        delta,
    )
}

/// The pure-δ curve f(α) = max{0, 1 − δ − α}; equals `make_approx_dp(0, δ)`.
pub fn make_pure_delta(delta: f64) -> Result<TradeoffCurve> {
    make_approx_dp(0.0, delta)
}

/// The Gaussian tradeoff curve G_μ(α) = Φ(Φ⁻¹(1−α) − μ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTradeoff {
    mu: f64,
}

impl GaussianTradeoff {
    /// Builds G_μ; μ must be finite and non-negative. G_0 is the identity.
    pub fn new(mu: f64) -> Result<Self> {
        if !mu.is_finite() || mu < 0.0 {
            return Err(Error::Domain(format!("Gaussian curve needs μ ≥ 0, got {mu}")));
        }
        Ok(GaussianTradeoff { mu })
    }

    /// The noise-scale parameter μ.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Evaluates G_μ(α); endpoints return the limits 1 and 0.
    pub fn eval(&self, alpha: f64) -> f64 {
        assert!(
            (-eps()..=1.0 + eps()).contains(&alpha),
            "Gaussian curve evaluated outside [0,1]: {alpha}"
        );
        let a = alpha.clamp(0.0, 1.0);
        if a <= 0.0 {
            return 1.0;
        }
        if a >= 1.0 {
            return 0.0;
        }
        crate::num::normal_cdf(crate::num::normal_quantile(1.0 - a) - self.mu)
    }

    /// The hockey-stick curve of G_μ in closed form:
    /// h(x) = Φ(μ/2 − ln x / μ) − x·Φ(−μ/2 − ln x / μ); for μ = 0 this
    /// degenerates to (1 − x)₊.
    pub fn hockey(&self, x: f64) -> f64 {
        assert!(x >= 0.0, "hockey-stick curves are defined for x ≥ 0, got {x}");
        if x == 0.0 {
            return 1.0;
        }
        if self.mu == 0.0 {
            return (1.0 - x).max(0.0);
        }
        let t = x.ln() / self.mu;
        let h = crate::num::normal_cdf(self.mu / 2.0 - t)
            - x * crate::num::normal_cdf(-self.mu / 2.0 - t);
        h.clamp(0.0, 1.0)
    }
}
