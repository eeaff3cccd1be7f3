//! Finite lattice models of quantum phase sums.
//!
//! The central object is the finite structure 𝕌(n): the integer lattice
//! ℤ ∩ [−n/2, n/2) embedded at spacing δ = √(2π/n), together with a Planck
//! integer h coprime to n. On it the crate evaluates windowed and global
//! phase sums
//!
//!   E^(m₁,m₂) φ = δ·Σ_{m₁ ≤ kδ ≤ m₂} φ(k),   E^glob φ = (1/√n)·Σ_k φ(k),
//!
//! exactly where closed forms exist (quadratic Gaussian phases, discrete
//! deltas) and by deterministic compensated summation everywhere else.
//! Weyl shift and phase operators, the h-twisted Fourier transform, and
//! free/harmonic propagators act on concrete state vectors over the same
//! lattice. A small expression language parses, canonicalizes, and
//! classifies phase predicates, and the verify module packages every
//! claimed identity as a reproducible report with explicit tolerances.
//!
//! Signs follow one convention set, versioned as [`SIGN_LEDGER_VERSION`]:
//! discrete Gauss sums carry the unit phase e^{−iπ/4}, their continuum
//! partners e^{+iπ/4·sgn a}, and the forward Fourier kernel is
//! e^{+2πi·h·rp/n}/√n.

pub mod dsl;
pub mod error;
pub mod forms;
pub mod operators;
pub mod phase;
pub mod quantifier;
pub mod report;
pub mod summation;
pub mod universe;
pub mod verify;

pub use error::{Error, Result, SourcePos};
pub use forms::{
    GaussianPredicate, LinearForm, PerturbedGaussianPredicate, QuadraticForm, Rational,
    SampledPredicate,
};
pub use phase::PhaseExponent;
pub use quantifier::{
    global_quantify, inner_product, local_quantify, norm, window_quantify, KPredicate,
    LocalMode, LocalOutcome, QuantifierResult, Window, WindowPolicy,
};
pub use report::{Report, SIGN_LEDGER_VERSION};
pub use summation::{sum_half_open, sum_range, SumOutcome};
pub use universe::{highly_divisible, ContinuumRef, FiniteUniverse, Interval};
