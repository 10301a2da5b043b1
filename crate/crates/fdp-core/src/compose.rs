//! Exact and analytic composition of tradeoff curves.
//!
//! Composition of mechanisms is tensoring of tradeoff curves, which in the
//! PLD view is plain convolution. For piecewise-linear curves this is exact
//! and closed-form: every pair of segments contributes a product segment
//! `(w₁·w₂, −|s₁·s₂|)`. Two independent routes compute it — the direct
//! segment-product construction and the PLD-convolution route — so each can
//! check the other.
//!
//! [`CurveHandle`] carries curves that need not be piecewise-linear
//! (Gaussian curves, δ-shifted curves, and unevaluated products) and
//! evaluates their hockey-stick and tradeoff functions exactly where closed
//! forms exist, numerically otherwise.

use crate::curves::{GaussianTradeoff, Segment, TradeoffCurve};
use crate::num::{eps, golden_max, log_grid, normal_pdf};
use crate::pld::{
    convolve, hockey_to_pld, pld_to_tradeoff, tradeoff_to_hockey, DiscretePld, HockeyStickCurve,
};
use crate::{Error, Result};

/// Composes two piecewise-linear tradeoff curves exactly.
///
/// Each segment pair `(w₁, s₁) × (w₂, s₂)` contributes `(w₁w₂, −s₁s₂·sign)`
/// — slopes multiply in magnitude (log-likelihood ratios add), widths
/// multiply (independent probabilities), zero-slope runs absorb everything
/// they meet. The α = 0 drops combine as `δ₁ + δ₂ − δ₁δ₂`.
pub fn compose_piecewise(f1: &TradeoffCurve, f2: &TradeoffCurve) -> Result<TradeoffCurve> {
    let n = f1.segments().len().saturating_mul(f2.segments().len());
    if n > 4_000_000 {
        return Err(Error::Guard(format!(
            "piecewise composition would have {n} segments before merging"
        )));
    }
    let mut segments = Vec::with_capacity(n);
    for a in f1.segments() {
        for b in f2.segments() {
            segments.push(Segment::new(a.width * b.width, -(a.slope * b.slope)));
        }
    }
    let d1 = f1.delta_at_zero();
    let d2 = f2.delta_at_zero();
    TradeoffCurve::new(segments, d1 + d2 - d1 * d2)
}

/// Composes two Gaussian tradeoff curves: `G_{μ₁} ⊗ G_{μ₂} = G_{√(μ₁²+μ₂²)}`.
pub fn compose_gaussian(g1: &GaussianTradeoff, g2: &GaussianTradeoff) -> GaussianTradeoff {
    GaussianTradeoff::new((g1.mu() * g1.mu() + g2.mu() * g2.mu()).sqrt())
        .expect("hypotenuse of finite non-negative μ values is valid")
}

/// Composes two piecewise-linear curves through the PLD route: convert both
/// to PLDs, convolve, convert back. Agrees with [`compose_piecewise`] but
/// shares no code with it; kept as an independent cross-check.
pub fn compose_pld_check(f1: &TradeoffCurve, f2: &TradeoffCurve) -> Result<TradeoffCurve> {
    let l1 = hockey_to_pld(&tradeoff_to_hockey(f1))?;
    let l2 = hockey_to_pld(&tradeoff_to_hockey(f2))?;
    pld_to_tradeoff(&convolve(&l1, &l2)?)
}

/// δ-shifts a hockey-stick curve: the curve of `f_{0,δ} ⊗ F` is
/// `x ↦ δ + (1−δ)·h_F(x)`, exactly (bends keep their x positions).
pub fn compose_delta_with_hockey(delta: f64, h: &HockeyStickCurve) -> Result<HockeyStickCurve> {
    if !(0.0..=1.0).contains(&delta) || !delta.is_finite() {
        return Err(Error::Domain(format!("delta must lie in [0, 1], got {delta}")));
    }
    let bends = h
        .bends()
        .iter()
        .map(|&(x, v)| (x, delta + (1.0 - delta) * v))
        .collect();
    HockeyStickCurve::new(
        bends,
        (1.0 - delta) * h.initial_slope(),
        delta + (1.0 - delta) * h.terminal_value(),
    )
}

/// Number of Simpson intervals for integrating against a Gaussian
/// privacy-loss density (even; covers ±12 standard deviations).
const SIMPSON_INTERVALS: usize = 4000;

/// Representation of a tradeoff curve for evaluation and composition.
#[derive(Debug, Clone)]
enum HandleKind {
    /// Fully materialized piecewise-linear curve with its two conjugate views.
    Piecewise {
        curve: TradeoffCurve,
        hockey: HockeyStickCurve,
        pld: DiscretePld,
    },
    /// A Gaussian curve `G_μ`, kept symbolic (closed forms throughout).
    Gaussian(GaussianTradeoff),
    /// `f_{0,δ} ⊗ inner`, kept symbolic (exact scaling identities).
    DeltaShifted { delta: f64, inner: Box<CurveHandle> },
    /// An unevaluated product of two curves (evaluated on demand).
    Product(Box<CurveHandle>, Box<CurveHandle>),
}

/// A tradeoff curve that may be piecewise-linear, Gaussian, δ-shifted, or a
/// lazy product of such curves.
///
/// Piecewise handles evaluate everything exactly; Gaussian and δ-shifted
/// handles use closed forms; products fall back to numeric quadrature and
/// conjugate duality only when a Gaussian factor forces them to.
#[derive(Debug, Clone)]
pub struct CurveHandle {
    kind: HandleKind,
}

impl CurveHandle {
    /// Wraps a piecewise-linear curve, materializing its hockey-stick and
    /// PLD views.
    pub fn from_tradeoff(curve: TradeoffCurve) -> Result<Self> {
        let hockey = tradeoff_to_hockey(&curve);
        let pld = hockey_to_pld(&hockey)?;
        Ok(CurveHandle {
            kind: HandleKind::Piecewise { curve, hockey, pld },
        })
    }

    /// Wraps an existing PLD (piecewise view derived from it).
    pub fn from_pld(pld: DiscretePld) -> Result<Self> {
        let curve = pld_to_tradeoff(&pld)?;
        let hockey = crate::pld::pld_to_hockey(&pld);
        Ok(CurveHandle {
            kind: HandleKind::Piecewise { curve, hockey, pld },
        })
    }

    /// The Gaussian curve `G_μ`.
    pub fn gaussian(mu: f64) -> Result<Self> {
        Ok(CurveHandle {
            kind: HandleKind::Gaussian(GaussianTradeoff::new(mu)?),
        })
    }

    /// The approximate-Gaussian curve `f_{0,δ} ⊗ G_μ`.
    pub fn approx_gaussian(mu: f64, delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) || !delta.is_finite() {
            return Err(Error::Domain(format!("delta must lie in [0, 1], got {delta}")));
        }
        Ok(CurveHandle {
            kind: HandleKind::DeltaShifted {
                delta,
                inner: Box::new(Self::gaussian(mu)?),
            },
        })
    }

    /// The identity curve (no privacy loss).
    pub fn identity() -> Self {
        Self::from_tradeoff(TradeoffCurve::identity())
            .expect("identity curve is valid")
    }

    /// A lazy product of two handles (no simplification attempted).
    pub fn lazy_product(a: CurveHandle, b: CurveHandle) -> Self {
        CurveHandle {
            kind: HandleKind::Product(Box::new(a), Box::new(b)),
        }
    }

    /// The piecewise-linear curve, when this handle is one.
    pub fn as_piecewise(&self) -> Option<&TradeoffCurve> {
        match &self.kind {
            HandleKind::Piecewise { curve, .. } => Some(curve),
            _ => None,
        }
    }

    /// The PLD, when this handle is piecewise-linear.
    pub fn as_pld(&self) -> Option<&DiscretePld> {
        match &self.kind {
            HandleKind::Piecewise { pld, .. } => Some(pld),
            _ => None,
        }
    }

    /// The Gaussian parameter, when this handle is a pure Gaussian curve.
    pub fn as_gaussian_mu(&self) -> Option<f64> {
        match &self.kind {
            HandleKind::Gaussian(g) => Some(g.mu()),
            _ => None,
        }
    }

    /// `(μ, δ)` when this handle is a Gaussian curve under zero or more
    /// intercept shifts (`f_{0,δ} ⊗ G_μ`); `None` otherwise.
    pub fn as_shifted_gaussian(&self) -> Option<(f64, f64)> {
        match &self.kind {
            HandleKind::Gaussian(g) => Some((g.mu(), 0.0)),
            HandleKind::DeltaShifted { delta, inner } => inner
                .as_shifted_gaussian()
                .map(|(mu, d)| (mu, delta + d - delta * d)),
            _ => None,
        }
    }

    /// True when every evaluation on this handle is closed-form exact.
    pub fn is_exact(&self) -> bool {
        match &self.kind {
            HandleKind::Piecewise { .. } | HandleKind::Gaussian(_) => true,
            HandleKind::DeltaShifted { inner, .. } => inner.is_exact(),
            HandleKind::Product(a, b) => {
                // A product forces quadrature unless a factor is piecewise
                // (then it reduces to a finite mixture of the other factor).
                (a.is_piecewise_like() || b.is_piecewise_like()) && a.is_exact() && b.is_exact()
            }
        }
    }

    fn is_piecewise_like(&self) -> bool {
        match &self.kind {
            HandleKind::Piecewise { .. } => true,
            HandleKind::DeltaShifted { inner, .. } => inner.is_piecewise_like(),
            HandleKind::Product(a, b) => a.is_piecewise_like() && b.is_piecewise_like(),
            HandleKind::Gaussian(_) => false,
        }
    }

    /// The value `f(0) = 1 − h(∞-limit at 0⁺)`… concretely the α = 0 drop δ.
    pub fn delta_at_zero(&self) -> f64 {
        match &self.kind {
            HandleKind::Piecewise { curve, .. } => curve.delta_at_zero(),
            HandleKind::Gaussian(_) => 0.0,
            HandleKind::DeltaShifted { delta, inner } => {
                delta + (1.0 - delta) * inner.delta_at_zero()
            }
            HandleKind::Product(a, b) => {
                let da = a.delta_at_zero();
                let db = b.delta_at_zero();
                da + db - da * db
            }
        }
    }

    /// Evaluates the hockey-stick curve `h(x)` of this handle.
    ///
    /// Exact for piecewise and Gaussian leaves and δ-shifts; products mix
    /// the right factor's curve over the left factor's PLD — a finite sum
    /// when a factor is piecewise, Simpson quadrature against the normal
    /// privacy-loss density when both factors are continuous.
    pub fn hockey(&self, x: f64) -> f64 {
        assert!(x >= 0.0, "hockey-stick curves are defined for x ≥ 0, got {x}");
        match &self.kind {
            HandleKind::Piecewise { hockey, .. } => hockey.eval(x),
            HandleKind::Gaussian(g) => g.hockey(x),
            HandleKind::DeltaShifted { delta, inner } => delta + (1.0 - delta) * inner.hockey(x),
            HandleKind::Product(a, b) => {
                if x == 0.0 {
                    return 1.0;
                }
                // Prefer mixing over a finite PLD when available.
                if a.as_pld().is_some() {
                    Self::hockey_mixture(a.as_pld().unwrap(), b, x)
                } else if b.as_pld().is_some() {
                    Self::hockey_mixture(b.as_pld().unwrap(), a, x)
                } else {
                    match &a.kind {
                        HandleKind::Gaussian(g) => Self::hockey_gaussian_mixture(g, b, x),
                        HandleKind::DeltaShifted { delta, inner } => {
                            delta
                                + (1.0 - delta)
                                    * CurveHandle::lazy_product((**inner).clone(), (**b).clone())
                                        .hockey(x)
                        }
                        HandleKind::Product(a1, a2) => {
                            // Re-associate so a leaf surfaces on the left.
                            CurveHandle::lazy_product(
                                (**a1).clone(),
                                CurveHandle::lazy_product((**a2).clone(), (**b).clone()),
                            )
                            .hockey(x)
                        }
                        HandleKind::Piecewise { .. } => unreachable!("handled above"),
                    }
                }
            }
        }
    }

    /// `h_{A⊗B}(x) = Σ_a p_a · h_B(x·e^{−z_a}) + m∞(A)`, exact over A's atoms.
    fn hockey_mixture(a: &DiscretePld, b: &CurveHandle, x: f64) -> f64 {
        let mut acc = a.mass_at_infinity();
        for &(z, p) in a.atoms() {
            acc += p * b.hockey(x * (-z).exp());
        }
        acc.clamp(0.0, 1.0)
    }

    /// Same mixture with A Gaussian: Z ~ N(μ²/2, μ²), Simpson on ±12 σ.
    fn hockey_gaussian_mixture(g: &GaussianTradeoff, b: &CurveHandle, x: f64) -> f64 {
        let mu = g.mu();
        if mu == 0.0 {
            return b.hockey(x);
        }
        let mean = mu * mu / 2.0;
        let lo = mean - 12.0 * mu;
        let hi = mean + 12.0 * mu;
        let n = SIMPSON_INTERVALS;
        let h = (hi - lo) / n as f64;
        let ln_x = x.ln();
        let mut acc = 0.0;
        for i in 0..=n {
            let z = lo + h * i as f64;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            // b.hockey(x e^{−z}) with the argument computed in log space to
            // dodge overflow at the integration edges.
            let arg = (ln_x - z).exp();
            acc += w * normal_pdf((z - mean) / mu) / mu * b.hockey(arg);
        }
        (acc * h / 3.0).clamp(0.0, 1.0)
    }

    /// Evaluates the tradeoff curve `f(α)` of this handle.
    ///
    /// Piecewise and Gaussian handles are closed-form; δ-shifts use the
    /// exact scaling `f(α) = (1−δ)·f_inner(α/(1−δ))` for `α ≤ 1−δ` (0
    /// beyond); products go through conjugate duality
    /// `f(α) = sup_{x>0} (1 − α − h(x))/x` on a log grid with golden-section
    /// refinement.
    pub fn eval_tradeoff(&self, alpha: f64) -> f64 {
        assert!(
            (-eps()..=1.0 + eps()).contains(&alpha),
            "tradeoff curves are defined on [0, 1], got {alpha}"
        );
        let alpha = alpha.clamp(0.0, 1.0);
        match &self.kind {
            HandleKind::Piecewise { curve, .. } => curve.eval(alpha),
            HandleKind::Gaussian(g) => g.eval(alpha),
            HandleKind::DeltaShifted { delta, inner } => {
                let keep = 1.0 - delta;
                if alpha >= keep {
                    0.0
                } else if keep == 0.0 {
                    0.0
                } else {
                    keep * inner.eval_tradeoff(alpha / keep)
                }
            }
            HandleKind::Product(_, _) => self.conjugate_eval(alpha),
        }
    }

    /// `f(α) = sup_{x>0} (1 − α − h(x))/x`, maximized over a log grid and
    /// polished with golden-section search around the best bracket.
    fn conjugate_eval(&self, alpha: f64) -> f64 {
        let score = |x: f64| (1.0 - alpha - self.hockey(x)) / x;
        let grid = log_grid((-30.0_f64).exp(), (30.0_f64).exp(), 601);
        let mut best_i = 0;
        let mut best = f64::NEG_INFINITY;
        for (i, &x) in grid.iter().enumerate() {
            let v = score(x);
            if v > best {
                best = v;
                best_i = i;
            }
        }
        let lo = grid[best_i.saturating_sub(1)];
        let hi = grid[(best_i + 1).min(grid.len() - 1)];
        let (_, refined) = golden_max(lo, hi, score);
        best.max(refined).clamp(0.0, 1.0 - alpha).max(0.0)
    }

    /// Samples this handle into a piecewise-linear curve on a uniform α
    /// grid (`grid` cells), taking the lower convex hull of the samples.
    pub fn sample_piecewise(&self, grid: usize) -> Result<TradeoffCurve> {
        if !(2..=1_000_000).contains(&grid) {
            return Err(Error::Guard(format!(
                "sampling grid must be in [2, 1000000], got {grid}"
            )));
        }
        let mut pts = Vec::with_capacity(grid + 1);
        for i in 0..=grid {
            let a = i as f64 / grid as f64;
            pts.push((a, self.eval_tradeoff(a)));
        }
        // Lower convex hull (monotone chain over already-sorted x).
        let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for p in pts {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        if let Some(last) = hull.last_mut() {
            // Force the (1, 0) endpoint so validation sees an exact zero.
            last.1 = 0.0;
        }
        TradeoffCurve::from_vertices(&hull)
    }
}

/// Composes two handles, simplifying wherever a closed form exists:
/// piecewise×piecewise stays piecewise, Gaussian×Gaussian stays Gaussian,
/// δ-shifts are pulled out and combined, anything else becomes a lazy
/// product.
pub fn compose_handles(a: &CurveHandle, b: &CurveHandle) -> Result<CurveHandle> {
    let (da, ca) = split_delta(a);
    let (db, cb) = split_delta(b);
    let delta = da + db - da * db;
    let core = match (&ca.kind, &cb.kind) {
        (HandleKind::Piecewise { curve: f1, .. }, HandleKind::Piecewise { curve: f2, .. }) => {
            CurveHandle::from_tradeoff(compose_piecewise(f1, f2)?)?
        }
        (HandleKind::Gaussian(g1), HandleKind::Gaussian(g2)) => CurveHandle {
            kind: HandleKind::Gaussian(compose_gaussian(g1, g2)),
        },
        _ => CurveHandle::lazy_product(ca.clone(), cb.clone()),
    };
    if delta > 0.0 {
        Ok(CurveHandle {
            kind: HandleKind::DeltaShifted {
                delta,
                inner: Box::new(core),
            },
        })
    } else {
        Ok(core)
    }
}

/// Pulls explicit δ-shift wrappers off a handle: returns `(δ, core)` with
/// the handle equal to `f_{0,δ} ⊗ core`. Piecewise curves keep their α = 0
/// drop internal (their representation is already exact).
fn split_delta(h: &CurveHandle) -> (f64, CurveHandle) {
    match &h.kind {
        HandleKind::DeltaShifted { delta, inner } => {
            let (d2, core) = split_delta(inner);
            (delta + d2 - delta * d2, core)
        }
        _ => (0.0, h.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::make_approx_dp;

    const LN2: f64 = std::f64::consts::LN_2;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn pure_dp_self_composition_worked_example() {
        let f = make_approx_dp(LN2, 0.0).unwrap();
        let ff = compose_piecewise(&f, &f).unwrap();
        let segs = ff.segments();
        assert_eq!(segs.len(), 3);
        assert_close(segs[0].width, 1.0 / 9.0, 1e-12);
        assert_close(segs[0].slope, -4.0, 1e-12);
        assert_close(segs[1].width, 4.0 / 9.0, 1e-12);
        assert_close(segs[1].slope, -1.0, 1e-12);
        assert_close(segs[2].width, 4.0 / 9.0, 1e-12);
        assert_close(segs[2].slope, -0.25, 1e-12);
        assert_close(ff.symmetric_fixed_point(), 1.0 / 3.0, 1e-12);
    }

    #[test]
    fn approx_dp_self_composition_worked_example() {
        let f = make_approx_dp(LN2, 0.1).unwrap();
        let ff = compose_piecewise(&f, &f).unwrap();
        assert_close(ff.delta_at_zero(), 0.19, 1e-12);
        let segs = ff.segments();
        assert_eq!(segs.len(), 4);
        assert_close(segs[0].width, 0.09, 1e-12);
        assert_close(segs[0].slope, -4.0, 1e-12);
        assert_close(segs[1].width, 0.36, 1e-12);
        assert_close(segs[1].slope, -1.0, 1e-12);
        assert_close(segs[2].width, 0.36, 1e-12);
        assert_close(segs[2].slope, -0.25, 1e-12);
        assert_close(segs[3].width, 0.19, 1e-12);
        assert_close(segs[3].slope, 0.0, 1e-15);
        assert_close(ff.eval(0.09), 0.45, 1e-12);
        assert_close(ff.symmetric_fixed_point(), 0.27, 1e-12);
    }

    #[test]
    fn mixed_parameters_composition_worked_example() {
        let f1 = make_approx_dp(4.0_f64.ln(), 0.01).unwrap();
        let f2 = make_approx_dp(LN2, 0.1).unwrap();
        let ff = compose_piecewise(&f1, &f2).unwrap();
        assert_close(ff.delta_at_zero(), 0.109, 1e-12);
        let segs = ff.segments();
        assert_eq!(segs.len(), 5);
        let expect = [
            (0.0594, -8.0),
            (0.1188, -2.0),
            (0.2376, -0.5),
            (0.4752, -0.125),
            (0.109, 0.0),
        ];
        for (s, (w, sl)) in segs.iter().zip(expect) {
            assert_close(s.width, w, 1e-12);
            assert_close(s.slope, sl, 1e-12);
        }
    }

    #[test]
    fn identity_is_neutral_for_composition() {
        let f = make_approx_dp(1.3, 0.05).unwrap();
        let out = compose_piecewise(&f, &TradeoffCurve::identity()).unwrap();
        for i in 0..=100 {
            let a = i as f64 / 100.0;
            assert_close(out.eval(a), f.eval(a), 1e-12);
        }
    }

    #[test]
    fn dual_routes_agree() {
        let cases = [
            (make_approx_dp(LN2, 0.1).unwrap(), make_approx_dp(4.0_f64.ln(), 0.01).unwrap()),
            (make_approx_dp(1.0, 0.0).unwrap(), make_approx_dp(0.5, 0.2).unwrap()),
        ];
        for (f1, f2) in cases {
            let direct = compose_piecewise(&f1, &f2).unwrap();
            let via_pld = compose_pld_check(&f1, &f2).unwrap();
            assert_close(direct.delta_at_zero(), via_pld.delta_at_zero(), 1e-10);
            for i in 0..=500 {
                let a = i as f64 / 500.0;
                assert_close(direct.eval(a), via_pld.eval(a), 1e-10);
            }
        }
    }

    #[test]
    fn gaussian_composition_is_pythagorean() {
        let g = compose_gaussian(
            &GaussianTradeoff::new(0.6).unwrap(),
            &GaussianTradeoff::new(0.8).unwrap(),
        );
        assert_close(g.mu(), 1.0, 1e-15);
    }

    #[test]
    fn product_handle_matches_gaussian_closed_form() {
        // Numerically tensor G_1 with G_1 and compare against G_√2.
        let prod = CurveHandle::lazy_product(
            CurveHandle::gaussian(1.0).unwrap(),
            CurveHandle::gaussian(1.0).unwrap(),
        );
        let exact = GaussianTradeoff::new(2.0_f64.sqrt()).unwrap();
        for x in [0.2, 0.5, 1.0, 2.0, 5.0] {
            assert_close(prod.hockey(x), exact.hockey(x), 1e-5);
        }
        for a in [0.05, 0.2, 0.5] {
            assert_close(prod.eval_tradeoff(a), exact.eval(a), 1e-4);
        }
    }

    #[test]
    fn compose_handles_simplifies_closed_forms() {
        let g = compose_handles(
            &CurveHandle::gaussian(1.0).unwrap(),
            &CurveHandle::gaussian(1.0).unwrap(),
        )
        .unwrap();
        assert_close(g.as_gaussian_mu().unwrap(), 2.0_f64.sqrt(), 1e-15);

        let p = compose_handles(
            &CurveHandle::from_tradeoff(make_approx_dp(LN2, 0.1).unwrap()).unwrap(),
            &CurveHandle::from_tradeoff(make_approx_dp(LN2, 0.1).unwrap()).unwrap(),
        )
        .unwrap();
        let curve = p.as_piecewise().unwrap();
        assert_close(curve.delta_at_zero(), 0.19, 1e-12);
        assert_close(curve.eval(0.09), 0.45, 1e-12);
    }

    #[test]
    fn delta_shift_scaling_identity() {
        let h = CurveHandle::approx_gaussian(1.5, 0.2).unwrap();
        let g = GaussianTradeoff::new(1.5).unwrap();
        for a in [0.0, 0.1, 0.3, 0.5, 0.7, 0.79] {
            assert_close(h.eval_tradeoff(a), 0.8 * g.eval(a / 0.8), 1e-12);
        }
        assert_eq!(h.eval_tradeoff(0.8), 0.0);
        assert_eq!(h.eval_tradeoff(0.9), 0.0);
        for x in [0.3, 1.0, 3.0] {
            assert_close(h.hockey(x), 0.2 + 0.8 * g.hockey(x), 1e-12);
        }
        assert_close(h.delta_at_zero(), 0.2, 1e-15);
    }

    #[test]
    fn delta_shifts_combine_across_composition() {
        let a = CurveHandle::approx_gaussian(0.6, 0.1).unwrap();
        let b = CurveHandle::approx_gaussian(0.8, 0.2).unwrap();
        let c = compose_handles(&a, &b).unwrap();
        assert_close(c.delta_at_zero(), 0.1 + 0.2 - 0.02, 1e-12);
        // Core collapsed to a Gaussian, so evaluation is closed-form.
        assert!(c.is_exact());
        let g1 = GaussianTradeoff::new(1.0).unwrap();
        for x in [0.5, 1.0, 2.0] {
            assert_close(c.hockey(x), 0.28 + 0.72 * g1.hockey(x), 1e-12);
        }
    }

    #[test]
    fn delta_with_hockey_shift_is_exact() {
        let f = make_approx_dp(LN2, 0.0).unwrap();
        let h = tradeoff_to_hockey(&f);
        let shifted = compose_delta_with_hockey(0.1, &h).unwrap();
        // f_{0,0.1} ⊗ f_{ln2,0} = f_{ln2,0.1} as hockey-stick curves.
        let expect = tradeoff_to_hockey(&make_approx_dp(LN2, 0.1).unwrap());
        for x in crate::num::log_grid(1e-2, 1e2, 41) {
            assert_close(shifted.eval(x), expect.eval(x), 1e-12);
        }
    }

    #[test]
    fn product_of_piecewise_and_gaussian_stays_consistent() {
        // Exactness flag: piecewise × gaussian mixes over finitely many
        // atoms, so hockey values are closed-form.
        let f = CurveHandle::from_tradeoff(make_approx_dp(LN2, 0.0).unwrap()).unwrap();
        let g = CurveHandle::gaussian(1.0).unwrap();
        let prod = compose_handles(&f, &g).unwrap();
        assert!(prod.is_exact());
        // The ln2 randomized response has atoms (−ln2, 1/3) and (ln2, 2/3),
        // so h(x) = (1/3)·h_G(2x) + (2/3)·h_G(x/2).
        let gexact = GaussianTradeoff::new(1.0).unwrap();
        for x in [0.4, 1.0, 2.5] {
            let expect = gexact.hockey(2.0 * x) / 3.0 + gexact.hockey(0.5 * x) * (2.0 / 3.0_f64);
            assert_close(prod.hockey(x), expect, 1e-12);
        }
    }

    #[test]
    fn sample_piecewise_recovers_piecewise_curve() {
        let f = make_approx_dp(LN2, 0.1).unwrap();
        let h = CurveHandle::from_tradeoff(f.clone()).unwrap();
        let sampled = h.sample_piecewise(1000).unwrap();
        for i in 0..=1000 {
            let a = i as f64 / 1000.0;
            assert_close(sampled.eval(a), f.eval(a), 2e-3);
        }
    }
}
