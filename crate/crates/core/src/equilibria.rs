//! Equilibrium structure of the slow cubic 2u³ + t·u = 1.
//!
//! For t < t* the cubic has three real roots u₁ < u₂ < u₃; the lower pair
//! merges at t = t* = −3·2^(−1/3) with double root u* = −4^(−1/3), the
//! saddle-center point where the slow branch loses existence. All constants
//! here are closed-form; no iteration beyond one Newton polish per root.

use crate::error::Error;
use crate::num::roots::cubic_depressed;
use crate::real::Real;
use crate::Result;

/// Closed-form constants of the saddle-center degeneration.
///
/// `e_star` is the energy E = u⁴ + t·u² − 2u + (εu′)² of the separatrix at
/// t*, i.e. the value at which the quartic −x⁴ − t*x² + 2x + E acquires the
/// triple root u*: E* = 3u*⁴. `alpha_star` is the remaining simple root,
/// −3u*, which is the peak of the first post-bifurcation burst.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalData {
    pub t_star: f64,
    pub u_star: f64,
    pub e_star: f64,
    pub alpha_star: f64,
}

/// Real equilibria at one parameter value, ascending, with the cubic
/// discriminant D = (t/6)³ + (1/4)²: three real roots iff D < 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumSet {
    pub t: f64,
    roots: [f64; 3],
    count: usize,
    pub discriminant: f64,
}

impl EquilibriumSet {
    pub fn roots(&self) -> &[f64] {
        &self.roots[..self.count]
    }
}

/// Linearized classification of a branch: sign of 6u² + t.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    /// 6u² + t > 0: perturbations oscillate (center).
    Stable,
    /// 6u² + t < 0: exponential growth (saddle).
    Unstable,
    /// |6u² + t| below the degeneracy threshold.
    Degenerate,
}

/// Threshold below which 6u² + t is treated as exactly degenerate.
///
/// A fold is a double root, computed to O(√ε_machine) ≈ 1e-8 only, and a
/// root error δ shifts the indicator by ≈ 12u·δ, so the threshold cannot
/// sit below ~1e-7.
pub const DEGENERACY_TOL: f64 = 1e-6;

/// The critical constants, in closed form.
pub fn critical_point() -> CriticalData {
    let u_star = -0.25f64.cbrt();
    let t_star = -3.0 * 0.5f64.cbrt();
    CriticalData {
        t_star,
        u_star,
        e_star: 3.0 * u_star.powi(4),
        alpha_star: -3.0 * u_star,
    }
}

/// All real roots of 2u³ + t·u = 1 at this t, ascending.
pub fn equilibrium_roots(t: f64) -> EquilibriumSet {
    // Monic depressed form u³ + (t/2)u − 1/2.
    let p = t / 2.0;
    let q = -0.5;
    let (count, roots) = cubic_depressed(p, q);
    let discriminant = (t / 6.0).powi(3) + 0.0625;
    EquilibriumSet {
        t,
        roots,
        count,
        discriminant,
    }
}

/// Stability tag of root `index` (ascending order) at this t.
pub fn branch_stability(t: f64, index: usize) -> Result<Stability> {
    let set = equilibrium_roots(t);
    let roots = set.roots();
    let u = *roots.get(index).ok_or(Error::IndexOutOfRange {
        index,
        count: roots.len(),
    })?;
    let s = 6.0 * u * u + t;
    Ok(if s.abs() < DEGENERACY_TOL {
        Stability::Degenerate
    } else if s > 0.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    })
}
