//! Asymptotic solution of the singularly perturbed Painlevé-2 equation
//!
//! ```text
//!     ε² u″ + 2u³ + t u = 1,        0 < ε ≪ 1,
//! ```
//!
//! across the saddle-center bifurcation of its slow equilibria at
//! t* = −3·2^(−1/3), u* = −4^(−1/3), where the stable and unstable branches
//! of the cubic 2u³ + tu = 1 coalesce and the solution jumps from slow
//! drift to fast nonlinear oscillation ("hard loss of stability").
//!
//! The crate implements the five asymptotic regimes of this passage and the
//! machinery to cross-validate them against direct integration at finite ε:
//!
//! * [`equilibria`] — the cubic root structure, discriminant and branch
//!   stability; the closed-form critical constants.
//! * [`outer`] — region I, the algebraic expansion
//!   u = u₀(t) + ε²u¹(t) + ε⁴u²(t) on the stable branch, with its exact
//!   residual and validity predicate.
//! * [`p1`] — region II, the first inner layer in the stretched variables
//!   τ = (t−t*)ε^(−4/5), v = (u−u*)ε^(−2/5): integration of the
//!   Painlevé-1 equation v″ + 6u*v² + u*τ = 0 through its second-order
//!   poles, Laurent data (τₖ, cₖ), and the first correction v¹ with its
//!   connection constants across each pole.
//! * [`pole_layer`] — region III, the layer of width ε^(1/5) (in τ) around
//!   each pole: the explicit algebraic soliton profile, linear corrections
//!   by variation of constants, and the phase shifts.
//! * [`boutroux`] — the τ → +∞ elliptic regime: the Weierstrass-℘ leading
//!   profile with invariants fixed by the vanishing (regularized) real
//!   cycle integral, and the piecewise-linear modulated phase shift.
//! * [`kuzmak`] — region IV, fast oscillation with slowly varying envelope:
//!   the averaged (Whitham) energy law I₀ = 2π, the quartic root
//!   parameterization, the phase S(t)/ε, and the implicit leading profile.
//! * [`oracle`] — adaptive direct integration of the equation at finite ε
//!   with event detection and envelope extraction, used as ground truth.
//! * [`composite`] — regime classification and dispatch to the evaluator
//!   valid at a given (t, ε), with overlap arbitration by residual.
//!
//! All numerics are deterministic pure f64 with no global state. The crate
//! is `no_std` (with `alloc`); IO, CSV/JSON export and the command-line
//! front end live in the companion binary crate.

#![no_std]
#![deny(unsafe_code)]
// Test builds link std, whose inherent f64 methods shadow the libm-backed
// trait in `real`; the imports are still needed for the no_std build proper.
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;

pub mod boutroux;
pub mod composite;
pub mod equilibria;
pub mod error;
pub mod kuzmak;
pub mod num;
pub mod oracle;
pub mod outer;
pub mod p1;
pub mod pole_layer;
mod real;
pub mod sample;

pub use error::Error;
pub use sample::{Regime, RegimeTag, SolutionSample, Validity};

/// Library result type.
pub type Result<T> = core::result::Result<T, Error>;
