//! Crate-wide error type.

use core::fmt;

/// Everything that can go wrong in the numerics.
///
/// Variants are shared across modules; the payloads carry enough context to
/// report the failure without allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Error {
    /// Requested an expansion on or past the degenerate branch point.
    DegenerateBranch { t: f64 },
    /// A validity predicate failed; carries the violated inequality and the
    /// margin actually achieved.
    OutOfValidity {
        constraint: &'static str,
        margin: f64,
    },
    /// Asymptotic seed requested outside its regime.
    SeedOutOfRange { tau0: f64 },
    /// Error-controlled integration could not meet the tolerance.
    ToleranceFailure,
    /// Adaptive step size fell below the floor.
    StepUnderflow { x: f64 },
    /// Laurent fit near a pole did not converge or left a large residual.
    PoleFitFailure { residual: f64 },
    /// Collocation projection matrix numerically singular.
    ProjectionIllConditioned,
    /// A pole-layer frame is missing data required for the requested term.
    FrameIncomplete { needs: &'static str },
    /// Root bracketing failed (no sign change on the search interval).
    BracketFailure { what: &'static str },
    /// Evaluation requested too close to a lattice point of ℘.
    NearPole,
    /// Regularized integrand still singular after subtracting its pole part.
    RegularizationFailure,
    /// Adaptive quadrature exceeded its subdivision budget.
    QuadratureFailure,
    /// Quartic/cubic root structure incompatible with the requested regime.
    RootStructureError { real_roots: usize },
    /// Envelope window contains no oscillation events.
    EmptyWindow,
    /// Phase reduction failed (argument not reducible to one period).
    OutOfRange { value: f64 },
    /// No asymptotic regime is valid at this point.
    NoValidRegime { t: f64, eps: f64 },
    /// Root index outside the root count at this parameter value.
    IndexOutOfRange { index: usize, count: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Error::DegenerateBranch { t } => {
                write!(f, "branch degenerate at t = {t:e} (need t < t*)")
            }
            Error::OutOfValidity { constraint, margin } => {
                write!(f, "outside validity: {constraint} (margin {margin:.3e})")
            }
            Error::SeedOutOfRange { tau0 } => {
                write!(f, "seed at tau0 = {tau0:e} outside asymptotic range (need tau0 <= -10)")
            }
            Error::ToleranceFailure => write!(f, "integrator could not meet tolerance"),
            Error::StepUnderflow { x } => write!(f, "step size underflow at x = {x:e}"),
            Error::PoleFitFailure { residual } => {
                write!(f, "pole Laurent fit failed (residual {residual:.3e})")
            }
            Error::ProjectionIllConditioned => write!(f, "projection system ill-conditioned"),
            Error::FrameIncomplete { needs } => write!(f, "pole frame incomplete: needs {needs}"),
            Error::BracketFailure { what } => write!(f, "bracketing failed for {what}"),
            Error::NearPole => write!(f, "evaluation too close to a lattice pole"),
            Error::RegularizationFailure => {
                write!(f, "regularized integrand still singular after subtraction")
            }
            Error::QuadratureFailure => write!(f, "adaptive quadrature did not converge"),
            Error::RootStructureError { real_roots } => {
                write!(f, "unexpected root structure ({real_roots} real roots)")
            }
            Error::EmptyWindow => write!(f, "window contains no oscillation events"),
            Error::OutOfRange { value } => write!(f, "argument {value:e} not reducible"),
            Error::NoValidRegime { t, eps } => {
                write!(f, "no valid regime at t = {t:e}, eps = {eps:e}")
            }
            Error::IndexOutOfRange { index, count } => {
                write!(f, "root index {index} out of range (count {count})")
            }
        }
    }
}

impl core::error::Error for Error {}
