//! Exact accounting for differential privacy: tradeoff curves, privacy loss
//! distributions, hockey-stick curves, exact composition, Blackwell-order
//! decisions, and adaptive privacy filters.
//!
//! The library keeps three interchangeable views of a mechanism's privacy:
//!
//! * a **tradeoff curve** — the minimal type-II error achievable at each
//!   type-I error level when testing neighbouring inputs ([`curves`]);
//! * a **privacy loss distribution** (PLD) — the law of the log-likelihood
//!   ratio under the null hypothesis, which composes by convolution
//!   ([`pld`]);
//! * a **hockey-stick curve** — the privacy profile
//!   `x ↦ sup_E P(E) − x·Q(E)` ([`pld`]).
//!
//! Conversions among the three are exact for finite-support PLDs, which cover
//! every (ε,δ)-style curve. Composition is exact for piecewise-linear curves
//! and closed-form for Gaussian ones ([`compose`]); order decisions, suprema,
//! and envelopes are exact ([`order`]); and the filter machinery ([`filter`])
//! decides when adaptive composition against a fixed budget incurs no
//! penalty. The [`oracle`] module is an independent brute-force route —
//! realizers plus Neyman–Pearson sweeps — used to validate every exact
//! algorithm before trusting it.

pub mod compose;
pub mod curves;
pub mod filter;
pub mod num;
pub mod oracle;
pub mod order;
pub mod pld;
pub mod serial;

pub use compose::CurveHandle;
pub use curves::{GaussianTradeoff, Segment, TradeoffCurve};
pub use order::OrderVerdict;
pub use pld::{DiscretePld, HockeyStickCurve};

/// Errors surfaced by the accounting library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input outside an operation's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A structured value failed its invariants.
    #[error("invalid {kind}: {}", violations.join("; "))]
    Invalid {
        /// Which kind of value failed (curve, PLD, hockey-stick, ...).
        kind: &'static str,
        /// One entry per violated invariant.
        violations: Vec<String>,
    },
    /// An enumeration or memory guard would be exceeded.
    #[error("guard exceeded: {0}")]
    Guard(String),
    /// Malformed textual input (JSON documents, shorthand specs, strategies).
    #[error("parse error: {0}")]
    Parse(String),
    /// A deterministic parameter search found no admissible configuration.
    #[error("search failed: {0}")]
    SearchFailure(String),
    /// Mixing analytic and piecewise curves needs an explicit evaluation grid.
    #[error("mixed analytic and piecewise inputs require an evaluation grid")]
    MixedNeedsGrid,
    /// A filter was asked to step past its capacity.
    #[error("capacity exhausted: {0}")]
    CapacityExhausted(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
