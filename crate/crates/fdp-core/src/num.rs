//! Shared numeric plumbing: comparison tolerances, the standard normal
//! distribution, deterministic float formatting, and small search helpers.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use std::sync::OnceLock;

/// Default comparison tolerance for slopes, widths, masses, and curve values.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Atoms closer than this in log-likelihood value are merged.
pub const ATOM_MERGE_TOL: f64 = 1e-12;

/// Probability mass below this floor is folded into the nearest neighbour.
pub const PROB_FLOOR: f64 = 1e-15;

/// Analytic comparisons (Gaussian handles on grids) cannot certify gaps
/// smaller than this; verdicts inside the band are "equal within tolerance".
pub const ANALYTIC_TOL: f64 = 1e-7;

/// Global comparison tolerance. Reads `PFL_EPS` once on first use and falls
/// back to [`DEFAULT_EPS`] when unset, unparsable, or non-positive.
pub fn eps() -> f64 {
    static EPS: OnceLock<f64> = OnceLock::new();
    *EPS.get_or_init(|| {
        std::env::var("PFL_EPS")
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite() && *v > 0.0)
            .unwrap_or(DEFAULT_EPS)
    })
}

fn unit_normal() -> &'static Normal {
    static N: OnceLock<Normal> = OnceLock::new();
    N.get_or_init(|| Normal::new(0.0, 1.0).expect("unit normal is well formed"))
}

/// Standard normal CDF Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    unit_normal().cdf(x)
}

/// Standard normal density φ(x).
pub fn normal_pdf(x: f64) -> f64 {
    unit_normal().pdf(x)
}

/// Standard normal quantile Φ⁻¹(p), polished with Newton steps so the
/// roundtrip Φ(Φ⁻¹(p)) = p holds to full double precision.
pub fn normal_quantile(p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "quantile needs p in [0,1], got {p}");
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = unit_normal().inverse_cdf(p);
    for _ in 0..2 {
        let d = normal_pdf(x);
        if d <= f64::MIN_POSITIVE {
            break;
        }
        let step = (normal_cdf(x) - p) / d;
        if !step.is_finite() {
            break;
        }
        x -= step;
    }
    x
}

/// Format with 17 significant digits — enough for exact f64 round-trips —
/// for JSON emission.
pub fn fmt_json(v: f64) -> String {
    format!("{v:.16e}")
}

/// Format with 12 significant digits for CSV emission.
pub fn fmt_csv(v: f64) -> String {
    format!("{v:.11e}")
}

/// `n` log-spaced points on `[lo, hi]` inclusive; requires `0 < lo < hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2, "bad log grid [{lo}, {hi}] x {n}");
    let (la, lb) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Golden-section maximization of a function on `[a, b]`, assumed unimodal
/// there. Returns `(argmax, max)`.
pub fn golden_max(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    if b < a {
        std::mem::swap(&mut a, &mut b);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..120 {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-12, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-6] {
            let x = normal_quantile(p);
            assert!((normal_cdf(x) - p).abs() < 1e-14, "p = {p}");
        }
        assert_eq!(normal_quantile(0.5), 0.0);
    }

    #[test]
    fn cdf_reference_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        // The backing erf implementation is accurate to ~1e-11, far inside
        // the 1e-7 analytic comparison tolerance used everywhere else.
        let lo = normal_cdf(-1.0);
        assert!(
            (lo - 0.158_655_253_931_457_05).abs() < 1e-9,
            "cdf(-1) = {lo:.17e}"
        );
        let hi = normal_cdf(1.96);
        assert!(
            (hi - 0.975_002_104_851_779_7).abs() < 1e-9,
            "cdf(1.96) = {hi:.17e}"
        );
    }

    #[test]
    fn json_format_round_trips() {
        for &v in &[0.1, 1.0 / 3.0, 0.198, 2.619_387_944_158_635, 1e-15, 0.0] {
            let s = fmt_json(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, v, "{s}");
        }
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, fx) = golden_max(-3.0, 5.0, |x| 1.0 - (x - 1.25) * (x - 1.25));
        assert!((x - 1.25).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_grid_endpoints_exact_length() {
        let g = log_grid(1e-3, 1e3, 7);
        assert_eq!(g.len(), 7);
        assert!((g[0] - 1e-3).abs() < 1e-18);
        assert!((g[6] - 1e3).abs() < 1e-9);
        assert!((g[3] - 1.0).abs() < 1e-12);
    }
}
