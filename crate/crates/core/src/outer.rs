//! Region-I slow branch: the algebraic expansion u = u₀(t) + ε²u¹(t) + ε⁴u²(t)
//! on the stable equilibrium below the fold.
//!
//! u₀(t) is the least root of 2u³ + tu = 1. Differentiating that relation
//! twice gives the closed forms
//!
//! ```text
//!   u₀′ = −u₀ / D,        u₀″ = 2t·u₀ / D³,        D = 6u₀² + t,
//! ```
//!
//! and the correction chain D·u¹ = −u₀″, D·u² = −u¹″ − 6u₀(u¹)².  u¹″ is not
//! worth carrying symbolically (the chain rule stack is deep and fragile); it
//! is evaluated by five-point centered differences on a step that tracks the
//! distance to the fold.  The exact residual of the truncation under
//! ε²u″ + 2u³ + tu − 1 collapses, after the order-by-order relations cancel,
//! to
//!
//! ```text
//!   F = ε⁶(u²″ + 12u₀u¹u² + 2u¹³) + ε⁸(6u₀u²² + 6u¹²u²)
//!     + ε¹⁰·6u¹u²² + ε¹²·2u²³ = O(ε⁶ (t*−t)^{−13/2}),
//! ```
//!
//! which is what `outer_residual` evaluates (no catastrophic cancellation:
//! the O(1)…O(ε⁴) orders are removed analytically, not numerically).

use crate::equilibria::{critical_point, equilibrium_roots};
use crate::real::Real;
use crate::sample::{Regime, SolutionSample, Validity};
use crate::{Error, Result};

/// Default validity threshold for (t* − t)·ε^{−4/5}.
pub const M_OUTER: f64 = 5.0;
/// Default extent of region I below the fold: t ≥ t* − A_DEFAULT.
pub const A_DEFAULT: f64 = 1.0;

/// Expansion data of the slow branch at one t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterTerms {
    pub t: f64,
    /// Leading term u₀(t): least real root of 2u³ + tu = 1.
    pub u0: f64,
    /// ε² coefficient u¹(t).
    pub u1c: f64,
    /// ε⁴ coefficient u²(t).
    pub u2c: f64,
    /// D = 6u₀² + t (> 0 on this branch for t < t*).
    pub denom: f64,
}

fn least_root(t: f64) -> Result<f64> {
    if t >= critical_point().t_star {
        return Err(Error::DegenerateBranch { t });
    }
    Ok(equilibrium_roots(t).roots()[0])
}

fn u1c_at(t: f64) -> Result<f64> {
    let u0 = least_root(t)?;
    let denom = 6.0 * u0 * u0 + t;
    Ok(-2.0 * t * u0 / denom.powi(4))
}

/// Five-point centered second derivative.
fn fd_second<F: Fn(f64) -> Result<f64>>(f: F, t: f64, h: f64) -> Result<f64> {
    let fm2 = f(t - 2.0 * h)?;
    let fm1 = f(t - h)?;
    let f0 = f(t)?;
    let fp1 = f(t + h)?;
    let fp2 = f(t + 2.0 * h)?;
    Ok((-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h))
}

/// Expansion coefficients of the slow branch at t < t*.
pub fn outer_terms(t: f64) -> Result<OuterTerms> {
    let u0 = least_root(t)?;
    let denom = 6.0 * u0 * u0 + t;
    let u1c = -2.0 * t * u0 / denom.powi(4);
    let d = critical_point().t_star - t;
    // Step for u¹″; the right end of the stencil must stay below the fold.
    let h = 1e-5f64.max(1e-3 * d).min(d / 5.0);
    let u1pp = fd_second(u1c_at, t, h)?;
    let u2c = (-u1pp - 6.0 * u0 * u1c * u1c) / denom;
    Ok(OuterTerms {
        t,
        u0,
        u1c,
        u2c,
        denom,
    })
}

/// Exact residual of the three-term truncation in ε²u″ + 2u³ + tu − 1.
pub fn outer_residual(t: f64, eps: f64) -> Result<f64> {
    let o = outer_terms(t)?;
    if eps == 0.0 {
        return Ok(0.0);
    }
    let d = critical_point().t_star - t;
    let h = 1e-4f64.max(1e-2 * d).min(d / 5.0);
    let u2pp = fd_second(|x| outer_terms(x).map(|o| o.u2c), t, h)?;
    let (u0, u1, u2) = (o.u0, o.u1c, o.u2c);
    let e2 = eps * eps;
    let e6 = e2 * e2 * e2;
    Ok(e6
        * (u2pp
            + 12.0 * u0 * u1 * u2
            + 2.0 * u1 * u1 * u1
            + e2 * (6.0 * u0 * u2 * u2 + 6.0 * u1 * u1 * u2)
            + e2 * e2 * 6.0 * u1 * u2 * u2
            + e2 * e2 * e2 * 2.0 * u2 * u2 * u2))
}

/// Validity with the default margin and extent.
pub fn outer_validity(t: f64, eps: f64) -> Validity {
    outer_validity_with(t, eps, M_OUTER, A_DEFAULT)
}

/// True iff (t* − t)·ε^{−4/5} > m and t ≥ t* − a.
pub fn outer_validity_with(t: f64, eps: f64, m: f64, a: f64) -> Validity {
    let t_star = critical_point().t_star;
    let margin = (t_star - t) * eps.powf(-0.8);
    Validity {
        ok: margin > m && t >= t_star - a,
        margin,
    }
}

/// Evaluate the truncation u₀ + ε²u¹ + ε⁴u² inside its validity region.
pub fn outer_eval(t: f64, eps: f64) -> Result<SolutionSample> {
    let v = outer_validity(t, eps);
    if !v.ok {
        return Err(Error::OutOfValidity {
            constraint: "(t_star - t)*eps^{-4/5} > M_outer and t >= t_star - 1",
            margin: v.margin,
        });
    }
    let o = outer_terms(t)?;
    let e2 = eps * eps;
    let u = o.u0 + e2 * o.u1c + e2 * e2 * o.u2c;
    let residual = outer_residual(t, eps)?;
    Ok(SolutionSample::new(t, u, Regime::OuterI, residual))
}
