//! Finite-support privacy loss distributions and the exact three-way
//! conversions among PLD, hockey-stick curve, and tradeoff curve.
//!
//! A privacy loss distribution is the law of the log-likelihood ratio
//! `log(dP/dQ)` under `P`, supported on ℝ ∪ {+∞}. A finite-support law is
//! a PLD of some testing pair exactly when `E[e^{−Z}] ≤ 1`; the companion
//! distribution is recovered by the Esscher tilt `dQ = e^{−z} dP` with the
//! deficit `1 − E[e^{−Z}]` parked on a fresh outcome that `P` never emits.
//!
//! All three views carry the same information and the conversions here are
//! exact (closed-form, no grids): atoms of the PLD are bends of the
//! hockey-stick curve at `x = e^z` and segments of the tradeoff curve with
//! slope `−e^{−z}`.

use crate::curves::{Segment, TradeoffCurve};
use crate::num::{eps, ATOM_MERGE_TOL, PROB_FLOOR};
use crate::{Error, Result};

/// Largest |z| accepted for a finite atom; keeps e^{±z} inside f64 range.
const MAX_ABS_Z: f64 = 700.0;

/// A finite-support privacy loss distribution.
///
/// Atoms are `(z, p)` pairs sorted strictly increasing in `z`, with all
/// `p > 0`, plus a separate mass at +∞. Invariants: masses sum to 1 and
/// `E[e^{−Z}] ≤ 1` (both within the global tolerance).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePld {
    atoms: Vec<(f64, f64)>,
    mass_at_infinity: f64,
}

impl DiscretePld {
    /// Builds a PLD from raw atoms, merging near-duplicate `z` values,
    /// folding sub-floor masses into their nearest neighbour, and validating.
    pub fn new(atoms: Vec<(f64, f64)>, mass_at_infinity: f64) -> Result<Self> {
        if !mass_at_infinity.is_finite() || !(-eps()..=1.0 + eps()).contains(&mass_at_infinity) {
            return Err(Error::Invalid {
                kind: "PLD",
                violations: vec![format!("mass at infinity {mass_at_infinity} outside [0, 1]")],
            });
        }
        let mut work: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (i, &(z, p)) in atoms.iter().enumerate() {
            if !z.is_finite() || z.abs() > MAX_ABS_Z {
                return Err(Error::Invalid {
                    kind: "PLD",
                    violations: vec![format!("atom {i} has unrepresentable z = {z}")],
                });
            }
            if !p.is_finite() || p < -eps() {
                return Err(Error::Invalid {
                    kind: "PLD",
                    violations: vec![format!("atom {i} has negative mass {p}")],
                });
            }
            if p > 0.0 {
                work.push((z, p));
            }
        }
        work.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Merge atoms that coincide in z up to the merge tolerance; the
        // merged position is the mass-weighted mean.
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(work.len());
        for (z, p) in work {
            match merged.last_mut() {
                Some((mz, mp)) if (z - *mz).abs() <= ATOM_MERGE_TOL => {
                    let total = *mp + p;
                    *mz = (*mz * *mp + z * p) / total;
                    *mp = total;
                }
                _ => merged.push((z, p)),
            }
        }
        // Fold sub-floor atoms into their nearest surviving neighbour so the
        // total mass is preserved while support stays bounded.
        let mut kept: Vec<(f64, f64)> = Vec::with_capacity(merged.len());
        let mut dropped: Vec<(f64, f64)> = Vec::new();
        for &(z, p) in &merged {
            if p < PROB_FLOOR {
                dropped.push((z, p));
            } else {
                kept.push((z, p));
            }
        }
        let mut inf = mass_at_infinity.clamp(0.0, 1.0);
        for (z, p) in dropped {
            if kept.is_empty() {
                inf += p;
                continue;
            }
            let nearest = kept
                .iter_mut()
                .min_by(|a, b| (a.0 - z).abs().total_cmp(&(b.0 - z).abs()))
                .expect("kept is nonempty");
            nearest.1 += p;
        }
        let pld = DiscretePld {
            atoms: kept,
            mass_at_infinity: inf,
        };
        let violations = pld.validate();
        if violations.is_empty() {
            Ok(pld)
        } else {
            Err(Error::Invalid {
                kind: "PLD",
                violations,
            })
        }
    }

    /// Builds a PLD without canonicalization or checks, for diagnostics and
    /// negative tests against [`DiscretePld::validate`].
    pub fn from_raw_parts(atoms: Vec<(f64, f64)>, mass_at_infinity: f64) -> Self {
        DiscretePld {
            atoms,
            mass_at_infinity,
        }
    }

    /// The unit element: a point mass at z = 0 (indistinguishable outputs).
    pub fn identity() -> Self {
        DiscretePld {
            atoms: vec![(0.0, 1.0)],
            mass_at_infinity: 0.0,
        }
    }

    /// Finite atoms, sorted strictly increasing in z.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// Mass at +∞ (outputs only the null hypothesis can produce).
    pub fn mass_at_infinity(&self) -> f64 {
        self.mass_at_infinity
    }

    /// `E[e^{−Z}]` over the finite atoms; at most 1 for a valid PLD, with
    /// the shortfall being the Esscher partner's mass on the fresh label.
    pub fn ee_neg_z(&self) -> f64 {
        self.atoms.iter().map(|&(z, p)| p * (-z).exp()).sum()
    }

    /// Checks every invariant; returns one message per violation.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut total = self.mass_at_infinity;
        for (i, &(z, p)) in self.atoms.iter().enumerate() {
            if !z.is_finite() || z.abs() > MAX_ABS_Z {
                out.push(format!("atom {i} has unrepresentable z = {z}"));
            }
            if !(p > 0.0) {
                out.push(format!("atom {i} has non-positive mass {p}"));
            }
            if i > 0 && z <= self.atoms[i - 1].0 {
                out.push(format!("atom {i} out of order: z = {z} after {}", self.atoms[i - 1].0));
            }
            total += p;
        }
        if !(-eps()..=1.0 + eps()).contains(&self.mass_at_infinity) {
            out.push(format!(
                "mass at infinity {} outside [0, 1]",
                self.mass_at_infinity
            ));
        }
        if (total - 1.0).abs() > eps() {
            out.push(format!("masses sum to {total}, expected 1"));
        }
        let ee = self.ee_neg_z();
        if ee > 1.0 + eps() {
            out.push(format!("validity violation: E[e^-Z] = {ee} exceeds 1"));
        }
        out
    }

    /// True when the PLD has at most one finite atom (a degenerate member
    /// for which chained-order arguments need care).
    pub fn is_degenerate(&self) -> bool {
        self.atoms.len() <= 1
    }
}

/// A testing pair (P, Q) over a shared finite label set; entry `i` carries
/// `(P(i), Q(i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestingPair {
    /// Per-label probability pairs.
    pub outcomes: Vec<(f64, f64)>,
}

impl TestingPair {
    /// Total masses of both marginals, for normalization checks.
    pub fn totals(&self) -> (f64, f64) {
        self.outcomes
            .iter()
            .fold((0.0, 0.0), |(p, q), &(a, b)| (p + a, q + b))
    }
}

/// Realizes a PLD as a testing pair via the Esscher tilt.
///
/// Label layout: one label per finite atom (in z order) with
/// `(P, Q) = (p, p·e^{−z})`; then, if present, the +∞ label with `(m∞, 0)`;
/// finally, if present, a fresh label holding Q's deficit `1 − E[e^{−Z}]`
/// with `(0, deficit)`. The PLD of the pair is the original PLD.
pub fn esscher_pair(pld: &DiscretePld) -> TestingPair {
    let mut outcomes: Vec<(f64, f64)> = pld
        .atoms()
        .iter()
        .map(|&(z, p)| (p, p * (-z).exp()))
        .collect();
    if pld.mass_at_infinity() > 0.0 {
        outcomes.push((pld.mass_at_infinity(), 0.0));
    }
    let deficit = 1.0 - pld.ee_neg_z();
    if deficit > PROB_FLOOR {
        outcomes.push((0.0, deficit));
    }
    TestingPair { outcomes }
}

/// Convolution of two PLDs: the PLD of running both mechanisms. Atom sums
/// carry product masses; anything that hits +∞ stays there, so
/// `m∞ = 1 − (1 − m∞₁)(1 − m∞₂)`.
pub fn convolve(a: &DiscretePld, b: &DiscretePld) -> Result<DiscretePld> {
    let n = a.atoms().len().saturating_mul(b.atoms().len());
    if n > 4_000_000 {
        return Err(Error::Guard(format!(
            "convolution support would have {n} atoms before merging"
        )));
    }
    let mut atoms = Vec::with_capacity(n);
    for &(za, pa) in a.atoms() {
        for &(zb, pb) in b.atoms() {
            atoms.push((za + zb, pa * pb));
        }
    }
    let inf = 1.0 - (1.0 - a.mass_at_infinity()) * (1.0 - b.mass_at_infinity());
    DiscretePld::new(atoms, inf)
}

/// A hockey-stick curve `h(x) = sup_E P(E) − x·Q(E)`: convex, decreasing,
/// starting at `lim_{x→0} h = 1`, never below `(1 − x)₊`, flat at
/// `terminal_value` after the last bend.
#[derive(Debug, Clone, PartialEq)]
pub struct HockeyStickCurve {
    bends: Vec<(f64, f64)>,
    initial_slope: f64,
    terminal_value: f64,
}

impl HockeyStickCurve {
    /// Builds and validates a hockey-stick curve from its bend list, the
    /// slope on `(0, first bend)`, and the flat terminal value.
    pub fn new(bends: Vec<(f64, f64)>, initial_slope: f64, terminal_value: f64) -> Result<Self> {
        let h = HockeyStickCurve {
            bends,
            initial_slope,
            terminal_value,
        };
        let violations = h.validate();
        if violations.is_empty() {
            Ok(h)
        } else {
            Err(Error::Invalid {
                kind: "hockey-stick curve",
                violations,
            })
        }
    }

    /// Bend points `(x, h(x))`, sorted strictly increasing in x.
    pub fn bends(&self) -> &[(f64, f64)] {
        &self.bends
    }

    /// Slope on `(0, first bend)`; equals `−E[e^{−Z}]` of the underlying PLD.
    pub fn initial_slope(&self) -> f64 {
        self.initial_slope
    }

    /// Value as `x → ∞`; equals the PLD's mass at +∞.
    pub fn terminal_value(&self) -> f64 {
        self.terminal_value
    }

    /// Checks every invariant; returns one message per violation.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.initial_slope > eps() {
            out.push(format!("initial slope {} is positive", self.initial_slope));
        }
        if !(-eps()..=1.0 + eps()).contains(&self.terminal_value) {
            out.push(format!("terminal value {} outside [0, 1]", self.terminal_value));
        }
        if self.bends.is_empty() {
            // Constant curve: only h ≡ 1 satisfies lim_{x→0} h = 1.
            if self.initial_slope.abs() > eps() || (self.terminal_value - 1.0).abs() > eps() {
                out.push("bend-free curve must be constant 1".into());
            }
            return out;
        }
        let (x1, v1) = self.bends[0];
        let at_zero = v1 - self.initial_slope * x1;
        if (at_zero - 1.0).abs() > eps().max(1e-9 * x1.abs()) {
            out.push(format!("h(0) = {at_zero} instead of 1"));
        }
        if self.initial_slope < -1.0 - eps() {
            out.push(format!(
                "initial slope {} steeper than -1 (would dip below (1-x)+)",
                self.initial_slope
            ));
        }
        let mut prev_slope = self.initial_slope;
        for (i, &(x, v)) in self.bends.iter().enumerate() {
            if !(x > 0.0) || !x.is_finite() {
                out.push(format!("bend {i} has non-positive x = {x}"));
            }
            if !(-eps()..=1.0 + eps()).contains(&v) {
                out.push(format!("bend {i} value {v} outside [0, 1]"));
            }
            if v < (1.0 - x).max(0.0) - eps() {
                out.push(format!("bend {i} dips below (1-x)+: h({x}) = {v}"));
            }
            if i > 0 {
                let (xp, vp) = self.bends[i - 1];
                if x <= xp {
                    out.push(format!("bend {i} x = {x} not after {xp}"));
                    continue;
                }
                let slope = (v - vp) / (x - xp);
                if slope > eps() {
                    out.push(format!("bend {i}: increasing stretch (slope {slope})"));
                }
                if slope < prev_slope - eps() {
                    out.push(format!(
                        "bend {i}: convexity violated (slope {slope} after {prev_slope})"
                    ));
                }
                prev_slope = slope;
            }
        }
        // After the last bend the curve is flat, which must not break
        // convexity, and the stored terminal must match the last bend.
        if prev_slope > eps() {
            out.push("slope before terminal plateau is positive".into());
        }
        let last = self.bends[self.bends.len() - 1].1;
        if (last - self.terminal_value).abs() > eps() {
            out.push(format!(
                "terminal value {} does not match last bend value {last}",
                self.terminal_value
            ));
        }
        out
    }

    /// Evaluates h at `x ≥ 0` (linear between bends, flat beyond the last,
    /// the initial-slope ray before the first; h(0) = 1).
    pub fn eval(&self, x: f64) -> f64 {
        assert!(x >= 0.0, "hockey-stick curves are defined for x ≥ 0, got {x}");
        if self.bends.is_empty() {
            return if x == 0.0 { 1.0 } else { self.terminal_value };
        }
        let (x1, v1) = self.bends[0];
        if x <= x1 {
            return (v1 + self.initial_slope * (x - x1)).clamp(0.0, 1.0);
        }
        let (xn, _) = self.bends[self.bends.len() - 1];
        if x >= xn {
            return self.terminal_value;
        }
        // Binary search for the bracketing bend interval.
        let idx = self
            .bends
            .partition_point(|&(bx, _)| bx < x);
        let (xa, va) = self.bends[idx - 1];
        let (xb, vb) = self.bends[idx];
        let t = (x - xa) / (xb - xa);
        (va + t * (vb - va)).clamp(0.0, 1.0)
    }

    /// The bend x-coordinates (the support of the underlying PLD under
    /// `z = ln x`).
    pub fn support(&self) -> Vec<f64> {
        self.bends.iter().map(|&(x, _)| x).collect()
    }
}

/// Converts a PLD to its hockey-stick curve
/// `h(x) = m∞ + Σᵢ pᵢ·(1 − x·e^{−zᵢ})₊` with bends exactly at `x = e^{zᵢ}`.
pub fn pld_to_hockey(pld: &DiscretePld) -> HockeyStickCurve {
    let atoms = pld.atoms();
    let n = atoms.len();
    // Suffix sums over atoms strictly above each bend: mass and e^{-z} mass.
    let mut suffix_p = vec![0.0; n + 1];
    let mut suffix_w = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let (z, p) = atoms[i];
        suffix_p[i] = suffix_p[i + 1] + p;
        suffix_w[i] = suffix_w[i + 1] + p * (-z).exp();
    }
    let mut bends = Vec::with_capacity(n);
    for (i, &(z, _)) in atoms.iter().enumerate() {
        let x = z.exp();
        let v = pld.mass_at_infinity() + suffix_p[i + 1] - x * suffix_w[i + 1];
        bends.push((x, v.clamp(0.0, 1.0)));
    }
    HockeyStickCurve {
        bends,
        initial_slope: -suffix_w[0],
        terminal_value: pld.mass_at_infinity(),
    }
}

/// Inverts [`pld_to_hockey`]: each bend at `x_b` with slope increase `Δs`
/// becomes the atom `(ln x_b, Δs·x_b)`; the terminal value becomes the mass
/// at +∞.
pub fn hockey_to_pld(h: &HockeyStickCurve) -> Result<DiscretePld> {
    let bends = h.bends();
    let mut atoms = Vec::with_capacity(bends.len());
    let mut slope_before = h.initial_slope();
    for (i, &(x, v)) in bends.iter().enumerate() {
        let slope_after = if i + 1 < bends.len() {
            let (xn, vn) = bends[i + 1];
            (vn - v) / (xn - x)
        } else {
            0.0
        };
        let ds = slope_after - slope_before;
        if ds < -eps() {
            return Err(Error::Invalid {
                kind: "hockey-stick curve",
                violations: vec![format!(
                    "bend {i} at x = {x} is concave (slope change {ds})"
                )],
            });
        }
        if ds > 0.0 {
            atoms.push((x.ln(), ds * x));
        }
        slope_before = slope_after;
    }
    DiscretePld::new(atoms, h.terminal_value())
}

/// Converts a PLD to its tradeoff curve.
///
/// Rejection regions fill in increasing likelihood-ratio order, so atoms in
/// ascending z become segments `(width pᵢ, slope −e^{−zᵢ})` — automatically
/// steepest-first — followed by a zero-slope run of width `m∞` (outcomes Q
/// cannot produce). The α = 0 deficit is Q's mass on the fresh Esscher
/// label: `deltaAtZero = 1 − E[e^{−Z}]`.
pub fn pld_to_tradeoff(pld: &DiscretePld) -> Result<TradeoffCurve> {
    let mut segments: Vec<Segment> = pld
        .atoms()
        .iter()
        .map(|&(z, p)| Segment::new(p, -(-z).exp()))
        .collect();
    if pld.mass_at_infinity() > 0.0 {
        segments.push(Segment::new(pld.mass_at_infinity(), 0.0));
    }
    TradeoffCurve::new(segments, 1.0 - pld.ee_neg_z())
}

/// Converts a tradeoff curve to its hockey-stick curve via the conjugacy
/// `h(x) = sup_{α∈[0,1]} 1 − α − x·f(α)`, which for a piecewise-linear f is
/// attained at a breakpoint — here in closed form: each segment of slope
/// `s < 0` yields a bend at `x = 1/|s|` whose value is read off at the
/// segment's right breakpoint.
pub fn tradeoff_to_hockey(f: &TradeoffCurve) -> HockeyStickCurve {
    let mut bends = Vec::new();
    let mut alpha_after = 0.0;
    let mut value_after = 1.0 - f.delta_at_zero();
    let nonzero = f.segments().iter().filter(|s| s.slope < 0.0).count();
    let mut seen = 0;
    for s in f.segments() {
        if s.slope >= 0.0 {
            break; // canonical order puts all zero-slope runs last
        }
        alpha_after += s.width;
        value_after += s.width * s.slope;
        seen += 1;
        let x = -1.0 / s.slope;
        let v = if seen == nonzero {
            // Last sloped run: f has dropped to 0 (validated), so the bend
            // value is exactly the remaining zero-slope width.
            1.0 - alpha_after
        } else {
            1.0 - alpha_after - x * value_after
        };
        bends.push((x, v.clamp(0.0, 1.0)));
    }
    let terminal = if bends.is_empty() {
        1.0
    } else {
        bends[bends.len() - 1].1
    };
    HockeyStickCurve {
        bends,
        initial_slope: -(1.0 - f.delta_at_zero()),
        terminal_value: terminal,
    }
}

/// Converts a tradeoff curve to its PLD (hockey-stick route; exact).
pub fn tradeoff_to_pld(f: &TradeoffCurve) -> Result<DiscretePld> {
    hockey_to_pld(&tradeoff_to_hockey(f))
}
