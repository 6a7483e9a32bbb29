//! Region-IV fast oscillation: the averaged (Kuzmak) modulation system
//! above the fold.
//!
//! For t > t* the solution is a fast nonlinear oscillation with a slowly
//! drifting envelope,
//!
//! ```text
//!     u(t, ε) = U⁰(t₁, t) + O(ε),        t₁ = S(t)/ε + φ(t),
//! ```
//!
//! whose leading profile integrates once to the closed orbit
//!
//! ```text
//!     (S′ ∂t₁U⁰)² = −(U⁰)⁴ − t (U⁰)² + 2U⁰ + E(t)
//!                 = (α − U⁰)(U⁰ − β)((U⁰ − m)² + n²),     β ≤ U⁰ ≤ α.
//! ```
//!
//! Three anti-resonance conditions close the slow system:
//!
//! * the t₁-period of U⁰ is one fixed constant — equivalently
//!   S′ = T/(√2·J(t)) with J = ∫_β^α dx/√F — which keeps the first
//!   correction's forcing bounded;
//! * the action I₀ = 2∫_β^α √F dx is conserved, with degeneration value 2π;
//!   this is the equation that pins E(t);
//! * (∂_E I₀ / ∂_E S′)·φ′ = a for a free constant a (default 0), which
//!   keeps the second correction bounded.
//!
//! Degeneration t → t*⁺: the complex pair (m, n) pinches the lower turning
//! point β, all three approaching u*, while α stays near −3u*. With
//! η = t − t* the pinch geometry is fixed by the root k of
//!
//! ```text
//!     c(k) = −(8/5) ∫₀^∞ y^{5/2} (k² + 1 − k y) / ((y−k)² + 1)^{5/2} dy,
//! ```
//!
//! the coefficient of the η^{5/4} term of the action across the pinch;
//! c(k) = 0 at k = 0.4620527969, giving
//!
//! ```text
//!     n ≈ ν₁ √η,    m − u* ≈ μ₁ √η,    E − E* ≈ γ₁ η,
//!     ν₁ = √(3/(2(3−k²))),    μ₁ = (k/3) ν₁,    γ₁ = u*².
//! ```
//!
//! The period constant is normalized so that S′ → η^{1/4} exactly (the
//! η^{1/4}-coefficient of S′ is 1):
//!
//! ```text
//!     T = √2 C*(k) / (2|u*|^{1/2}) · ((6 − 2k²)/3)^{1/4} = 4.1421573368,
//!     C*(k) = ∫₀^∞ dy / √(y ((y−k)² + 1)),
//! ```
//!
//! so S(t) = (4/5) η^{5/4} (1 + O(√η)) with S(t*) = 0. The full t₁-period
//! of U⁰ is then 2S′J ≡ √2·T = 5.8578950832, which matches the real
//! lattice period Ω of the region-II∞ elliptic profile to twelve digits:
//! the two regimes count oscillations identically across their seam.

use alloc::vec::Vec;

use crate::equilibria::critical_point;
use crate::error::Error;
use crate::num::quad::{adaptive, gk15};
use crate::num::roots::{brent, cubic_depressed, newton_safe};
use crate::real::Real;
use crate::sample::{Regime, SolutionSample, Validity};
use crate::Result;

use core::f64::consts::{FRAC_PI_2, PI};

/// Validity margin: (t − t*)·ε^{−2/3} must exceed this.
pub const M_KUZ: f64 = 5.0;
/// Extent of region IV above the fold: t ≤ t* + A_KUZ.
pub const A_KUZ: f64 = 1.0;
/// Below this n the period integral switches to its pinch expansion
/// J = C*(k̂)·δ^{−1/2}/(α−β), k̂ = (m−β)/n, δ = n/(α−β). The switch seam
/// is O(√δ) ≈ 1e−3 relative, and is only reached for η < 2e−8.
pub const N_PINCH: f64 = 1e-4;

/// Absolute tolerance of the adaptive quadratures.
const QTOL: f64 = 1e-12;
/// Panels for the fixed-grid k-integrals (both are analytic after the
/// substitutions below, so the panel error is far below 1e−13 already
/// at this count; doubling is the convergence check).
const K_PANELS: usize = 24;
/// Largest σ = (t−t*)^{1/4} panel of the phase quadrature. The integrand
/// 4σ³S′ is a smooth series in σ² there, so 4-point Gauss per panel keeps
/// the phase error near rounding.
const SIG_PANEL: f64 = 0.02;
/// Below this σ the phase march uses the exact degeneration head
/// S′ = (t − t*)^{1/4} in closed form instead of solving the slow system:
/// there n² sinks under the rounding floor of the factorization and the
/// period integral turns to noise, while the neglected correction
/// contributes ∫4σ³·σ·O(σ²) dσ ≲ 2e−12 to S over the whole head.
const SIG_ASY: f64 = 0.05;
/// 4-point Gauss–Legendre nodes and weights on [0, 1].
const G4X: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_87,
    0.669_990_521_792_428_13,
    0.930_568_155_797_026_3,
];
const G4W: [f64; 4] = [
    0.173_927_422_568_726_93,
    0.326_072_577_431_273_07,
    0.326_072_577_431_273_07,
    0.173_927_422_568_726_93,
];

/// One solved point of the slow (averaged) system.
///
/// The quartic data satisfies
/// −x⁴ − t x² + 2x + E = (α−x)(x−β)((x−m)²+n²) with α > β the real turning
/// points and n ≥ 0. `solve_e` populates the energy and root fields and
/// leaves the phase fields (`s_prime`, `s`, `phi`) at 0; `solve_phase`
/// fills them.
#[derive(Debug, Clone, Copy)]
pub struct ModulationState {
    pub t: f64,
    pub e: f64,
    pub alpha: f64,
    pub beta: f64,
    pub m: f64,
    pub n: f64,
    pub s_prime: f64,
    pub s: f64,
    pub phi: f64,
}

/// The constants of the degeneration t → t*⁺, solved once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegenerationConstants {
    /// Root of c(k) = 0.
    pub k: f64,
    /// C*(k) at the root.
    pub c_star: f64,
    /// Period constant T; the full t₁-period of U⁰ is √2·T.
    pub t_period: f64,
    /// (m − u*)/√η coefficient, (k/3)·ν₁.
    pub mu1: f64,
    /// n/√η coefficient, √(3/(2(3−k²))).
    pub nu1: f64,
    /// (E − E*)/η coefficient, u*².
    pub gamma1: f64,
}

/// Solved modulation sweep: states at the requested grid nodes.
#[derive(Debug, Clone)]
pub struct ModulationTable {
    pub constants: DegenerationConstants,
    /// The free phase constant a of (∂_E I₀/∂_E S′)·φ′ = a.
    pub phase_a: f64,
    pub states: Vec<ModulationState>,
}

impl ModulationTable {
    /// Covered t-range.
    pub fn span(&self) -> (f64, f64) {
        (
            self.states.first().map_or(f64::NAN, |s| s.t),
            self.states.last().map_or(f64::NAN, |s| s.t),
        )
    }

    /// Index of the last node with t_node ≤ t.
    fn locate(&self, t: f64) -> Result<usize> {
        let (lo, hi) = self.span();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfRange { value: t });
        }
        Ok(self
            .states
            .partition_point(|s| s.t <= t)
            .saturating_sub(1))
    }
}

/// Composite Gauss–Kronrod on a fixed panel grid (deterministic, used for
/// the one-time k-integrals so node doubling is a meaningful check).
fn panel_quad(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for i in 0..panels {
        s += gk15(f, a + i as f64 * h, a + (i + 1) as f64 * h).0;
    }
    s
}

/// ∫₀^∞ y^{5/2}(k²+1−ky)/((y−k)²+1)^{5/2} dy, rationalized: y = x² on
/// [0, 10] and y = 1/w² beyond, so both pieces are analytic on closed
/// intervals and the fixed panels converge spectrally.
fn ck_integral(k: f64, panels: usize) -> f64 {
    let head = |x: f64| {
        let y = x * x;
        let d = (y - k) * (y - k) + 1.0;
        2.0 * x.powi(6) * (k * k + 1.0 - k * y) / (d * d * d.sqrt())
    };
    let tail = |w: f64| {
        let z = w * w;
        let d = (1.0 - k * z) * (1.0 - k * z) + z * z;
        2.0 * ((k * k + 1.0) * z - k) / (d * d * d.sqrt())
    };
    panel_quad(&head, 0.0, 10.0f64.sqrt(), panels)
        + panel_quad(&tail, 0.0, 0.1f64.sqrt(), panels)
}

/// Same rationalization for C*(k) = ∫₀^∞ dy/√(y((y−k)²+1)).
fn cstar_integral(k: f64, panels: usize) -> f64 {
    let head = |x: f64| {
        let d = (x * x - k) * (x * x - k) + 1.0;
        2.0 / d.sqrt()
    };
    let tail = |w: f64| {
        let a = 1.0 - k * w * w;
        2.0 / (a * a + w * w * w * w).sqrt()
    };
    panel_quad(&head, 0.0, 10.0f64.sqrt(), panels)
        + panel_quad(&tail, 0.0, 0.1f64.sqrt(), panels)
}

/// The pinch coefficient c(k) of the action, −(8/5)·ck_integral.
pub fn c_of_k(k: f64) -> Result<f64> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::OutOfRange { value: k });
    }
    Ok(-1.6 * ck_integral(k, K_PANELS))
}

/// Solve c(k) = 0 on [0.3, 0.6] and assemble the degeneration constants.
pub fn solve_k() -> Result<DegenerationConstants> {
    let k = brent(
        |k| -1.6 * ck_integral(k, K_PANELS),
        0.3,
        0.6,
        1e-15,
        "c(k) = 0",
    )?;
    let c_star = cstar_integral(k, K_PANELS);
    let us = critical_point().u_star;
    let nu1 = (3.0 / (2.0 * (3.0 - k * k))).sqrt();
    let mu1 = k / 3.0 * nu1;
    let t_period =
        2.0f64.sqrt() * c_star / (2.0 * us.abs().sqrt()) * ((6.0 - 2.0 * k * k) / 3.0).powf(0.25);
    Ok(DegenerationConstants {
        k,
        c_star,
        t_period,
        mu1,
        nu1,
        gamma1: us * us,
    })
}

/// Split x⁴ + t x² − 2x − E into (α−x)(x−β)((x−m)²+n²) (sign-flipped).
///
/// Since the four roots sum to zero, the split (x²−sx+p)(x²+sx+q) closes
/// on the resolvent cubic in z = s²:
///
/// ```text
///     z³ + 2t z² + (t² + 4E) z − 4 = 0,
/// ```
///
/// and with s > 0 the pair sums are ±s, p = (t+z−2/s)/2, q = (t+z+2/s)/2.
/// Because q − p = 2/s > 0, the real pair (when there is one) always
/// belongs to the first factor: d₁ = s²−4p ≥ 0 ≥ d₂ = s²−4q. The
/// coefficient identities p+q−s² = t and s(p−q) = −2 hold exactly by
/// construction, and pq+E equals the cubic residual over 4z, so the
/// reconstruction stays at rounding level even at the fold, where the
/// cubic root is triple and the pinching roots themselves carry the
/// unavoidable cube-root-of-rounding error (≈1e−5).
pub fn quartic_factor(t: f64, e: f64) -> Result<(f64, f64, f64, f64)> {
    let b = 2.0 * t;
    let c = t * t + 4.0 * e;
    let dep_p = c - b * b / 3.0;
    let dep_q = 2.0 * b * b * b / 27.0 - b * c / 3.0 - 4.0;
    let (cnt, ys) = cubic_depressed(dep_p, dep_q);
    let mut best: Option<(f64, f64, f64, f64, f64)> = None;
    let mut saw_four = false;
    for &y in &ys[..cnt] {
        let mut z = y - b / 3.0;
        if z <= 0.0 {
            continue;
        }
        for _ in 0..2 {
            let f = ((z + b) * z + c) * z - 4.0;
            let df = (3.0 * z + 2.0 * b) * z + c;
            if df != 0.0 {
                z -= f / df;
            }
        }
        let s = z.sqrt();
        let d1 = -z - 2.0 * t + 4.0 / s;
        let d2 = -z - 2.0 * t - 4.0 / s;
        let slack = 1e-9 * (1.0 + z);
        if d2 > slack {
            saw_four = true;
            continue;
        }
        if d1 < -slack {
            continue;
        }
        if best.map_or(true, |(bd1, ..)| d1 > bd1) {
            let r = d1.max(0.0).sqrt();
            best = Some((
                d1,
                (s + r) / 2.0,
                (s - r) / 2.0,
                -s / 2.0,
                (-d2).max(0.0).sqrt() / 2.0,
            ));
        }
    }
    match best {
        Some((_, alpha, beta, m, n)) => Ok((alpha, beta, m, n)),
        None => Err(Error::RootStructureError {
            real_roots: if saw_four { 4 } else { 0 },
        }),
    }
}

/// I₀ from the factored roots: x = β + (α−β)sin²φ turns 2∫√F dx into
/// 4(α−β)² ∫₀^{π/2} sin²φ cos²φ √((x−m)²+n²) dφ with no endpoint
/// singularities (at the fold the remaining factor degrades to |x−m|,
/// a kink the adaptive rule still handles).
fn i0_from_roots(alpha: f64, beta: f64, m: f64, n: f64) -> Result<f64> {
    let l = alpha - beta;
    let f = |phi: f64| {
        let sp = phi.sin();
        let cp = phi.cos();
        let x = beta + l * sp * sp;
        4.0 * l * l * sp * sp * cp * cp * ((x - m) * (x - m) + n * n).sqrt()
    };
    adaptive(&f, 0.0, FRAC_PI_2, QTOL)
}

/// The action I₀(t, E) = 2∫_β^α √(−x⁴−tx²+2x+E) dx.
pub fn action_i0(t: f64, e: f64) -> Result<f64> {
    let (alpha, beta, m, n) = quartic_factor(t, e)?;
    i0_from_roots(alpha, beta, m, n)
}

/// Fixed-panel variant of the action quadrature (node-doubling checks).
#[cfg(test)]
fn i0_panels(t: f64, e: f64, panels: usize) -> Result<f64> {
    let (alpha, beta, m, n) = quartic_factor(t, e)?;
    let l = alpha - beta;
    let f = |phi: f64| {
        let sp = phi.sin();
        let cp = phi.cos();
        let x = beta + l * sp * sp;
        4.0 * l * l * sp * sp * cp * cp * ((x - m) * (x - m) + n * n).sqrt()
    };
    Ok(panel_quad(&f, 0.0, FRAC_PI_2, panels))
}

/// J = ∫_β^α dx/√F = ∂I₀/∂E. The same substitution leaves
/// 2/√((x−m)²+n²), smooth but pinched near x = m; the pinch angle is
/// split out explicitly, and below N_PINCH the expansion
/// C*(k̂) δ^{−1/2}/(α−β) replaces the quadrature (the orbit is within
/// O(δ) of homoclinic there and the quadrature peak ~1/n is no longer
/// worth resolving).
fn period_integral(alpha: f64, beta: f64, m: f64, n: f64) -> Result<f64> {
    let l = alpha - beta;
    if !(n > 0.0) {
        return Err(Error::RegularizationFailure);
    }
    let delta = n / l;
    if n < N_PINCH {
        let khat = (m - beta) / n;
        return Ok(cstar_integral(khat, K_PANELS) / (delta.sqrt() * l));
    }
    let f = |phi: f64| {
        let sp = phi.sin();
        let x = beta + l * sp * sp;
        2.0 / ((x - m) * (x - m) + n * n).sqrt()
    };
    let frac = ((m - beta) / l).max(0.0).min(1.0);
    let phi0 = frac.sqrt().asin();
    if n < 0.1 && phi0 > 1e-9 && phi0 < FRAC_PI_2 - 1e-9 {
        Ok(adaptive(&f, 0.0, phi0, QTOL)? + adaptive(&f, phi0, FRAC_PI_2, QTOL)?)
    } else {
        adaptive(&f, 0.0, FRAC_PI_2, QTOL)
    }
}

/// Solve I₀(t, E) = 2π for E; returns the state with phase fields unset.
pub fn solve_e(t: f64, e_guess: f64) -> Result<ModulationState> {
    solve_e_counted(t, e_guess).map(|(st, _)| st)
}

/// Newton on E with the exact derivative ∂I₀/∂E = J, safeguarded by a
/// bisection bracket. The lower bracket is always E*: the action at fixed
/// E decreases in t, so I₀(t, E*) < 2π for every t > t*. Returns the
/// iteration count for the continuation step control.
fn solve_e_counted(t: f64, e_guess: f64) -> Result<(ModulationState, usize)> {
    let cd = critical_point();
    if !(t > cd.t_star) {
        return Err(Error::OutOfRange { value: t });
    }
    let target = 2.0 * PI;
    let mut lo = cd.e_star - 1e-12;
    let mut hi = e_guess.max(cd.e_star + cd.u_star * cd.u_star * (t - cd.t_star));
    for _ in 0..60 {
        if action_i0(t, hi)? > target {
            break;
        }
        hi = lo + 2.0 * (hi - lo);
    }
    let mut e = e_guess.max(lo).min(hi);
    for iters in 1..=60 {
        let (alpha, beta, m, n) = quartic_factor(t, e)?;
        let f = i0_from_roots(alpha, beta, m, n)? - target;
        let done = |e: f64| ModulationState {
            t,
            e,
            alpha,
            beta,
            m,
            n,
            s_prime: 0.0,
            s: 0.0,
            phi: 0.0,
        };
        if f.abs() < 5e-12 {
            return Ok((done(e), iters));
        }
        if f < 0.0 {
            lo = e;
        } else {
            hi = e;
        }
        let j = period_integral(alpha, beta, m, n)?;
        let mut en = e - f / j;
        if !(en > lo && en < hi) || !en.is_finite() {
            en = 0.5 * (lo + hi);
        }
        if (en - e).abs() < 1e-15 * (1.0 + e.abs()) {
            return Ok((done(en), iters));
        }
        e = en;
    }
    Err(Error::BracketFailure {
        what: "I0(t, E) = 2pi",
    })
}

/// Linear continuation memory for the E(t) sweep.
struct ETracker {
    t_a: f64,
    e_a: f64,
    t_b: f64,
    e_b: f64,
}

impl ETracker {
    fn new() -> Self {
        let cd = critical_point();
        ETracker {
            t_a: cd.t_star,
            e_a: cd.e_star,
            t_b: cd.t_star,
            e_b: cd.e_star,
        }
    }

    fn guess(&self, t: f64) -> f64 {
        if self.t_b > self.t_a {
            self.e_b + (self.e_b - self.e_a) / (self.t_b - self.t_a) * (t - self.t_b)
        } else {
            // Cold start: the degeneration slope γ₁ = u*².
            let cd = critical_point();
            self.e_b + cd.u_star * cd.u_star * (t - self.t_b)
        }
    }

    fn push(&mut self, t: f64, e: f64) {
        self.t_a = self.t_b;
        self.e_a = self.e_b;
        self.t_b = t;
        self.e_b = e;
    }
}

/// Accumulator for S and φ along σ = (t−t*)^{1/4}. dS = S′·4σ³ dσ is a
/// smooth series in σ² through σ = 0, so fixed 4-point Gauss panels of
/// width ≤ SIG_PANEL integrate it to rounding; a panel whose Newton
/// continuation labors (> 8 iterations at some node) is re-done in halves.
struct PhaseAccum {
    s: f64,
    phi: f64,
    trk: ETracker,
    constants: DegenerationConstants,
    phase_a: f64,
}

impl PhaseAccum {
    fn new(constants: DegenerationConstants, phase_a: f64) -> Self {
        PhaseAccum {
            s: 0.0,
            phi: 0.0,
            trk: ETracker::new(),
            constants,
            phase_a,
        }
    }

    /// S′ = T/(√2 J) and, when a ≠ 0, φ′ = a·∂_E S′/∂_E I₀ with
    /// ∂_E I₀ = J and ∂_E J by centered differences.
    fn rates(&self, t: f64, e: f64) -> Result<(f64, f64)> {
        let (alpha, beta, m, n) = quartic_factor(t, e)?;
        let j = period_integral(alpha, beta, m, n)?;
        let tt = self.constants.t_period;
        let sp = tt / (2.0f64.sqrt() * j);
        if self.phase_a == 0.0 {
            return Ok((sp, 0.0));
        }
        let he = 1e-6 * (1.0 + e.abs());
        let jp = {
            let (a2, b2, m2, n2) = quartic_factor(t, e + he)?;
            period_integral(a2, b2, m2, n2)?
        };
        let jm = {
            let (a2, b2, m2, n2) = quartic_factor(t, e - he)?;
            period_integral(a2, b2, m2, n2)?
        };
        let djde = (jp - jm) / (2.0 * he);
        let phi_rate = -self.phase_a * tt * djde / (2.0f64.sqrt() * j * j * j);
        Ok((sp, phi_rate))
    }

    /// Advance from σ = sig0 to sig1 ≥ sig0.
    fn advance(&mut self, sig0: f64, sig1: f64) -> Result<()> {
        if sig1 - sig0 < 1e-12 {
            return Ok(());
        }
        let mut sig0 = sig0;
        if sig0 < SIG_ASY {
            let b = sig1.min(SIG_ASY);
            self.s += 0.8 * (b.powi(5) - sig0.powi(5));
            // For a ≠ 0 the φ drift inside the head is O(a σ²) and is
            // dropped with it: φ is measured from σ = SIG_ASY.
            if sig1 <= SIG_ASY {
                return Ok(());
            }
            sig0 = SIG_ASY;
        }
        let cd = critical_point();
        let n_base = ((sig1 - sig0) / SIG_PANEL).ceil() as usize;
        let h0 = (sig1 - sig0) / n_base as f64;
        let mut stack: Vec<(f64, f64)> = (0..n_base)
            .rev()
            .map(|i| (sig0 + i as f64 * h0, sig0 + (i + 1) as f64 * h0))
            .collect();
        while let Some((a, b)) = stack.pop() {
            let snap = (self.trk.t_a, self.trk.e_a, self.trk.t_b, self.trk.e_b);
            let mut ds = 0.0;
            let mut dphi = 0.0;
            let mut slow = false;
            for i in 0..4 {
                let sig = a + (b - a) * G4X[i];
                let t = cd.t_star + sig * sig * sig * sig;
                let (st, iters) = solve_e_counted(t, self.trk.guess(t))?;
                self.trk.push(t, st.e);
                if iters > 8 && b - a > 1e-6 {
                    slow = true;
                    break;
                }
                let (sp, pr) = self.rates(t, st.e)?;
                let w = G4W[i] * (b - a) * 4.0 * sig * sig * sig;
                ds += w * sp;
                dphi += w * pr;
            }
            if slow {
                (self.trk.t_a, self.trk.e_a, self.trk.t_b, self.trk.e_b) = snap;
                let mid = 0.5 * (a + b);
                stack.push((mid, b));
                stack.push((a, mid));
                continue;
            }
            self.s += ds;
            self.phi += dphi;
        }
        Ok(())
    }
}

/// Solve the slow system on an ascending grid (t > t*), default a = 0.
pub fn solve_phase(t_grid: &[f64], constants: &DegenerationConstants) -> Result<ModulationTable> {
    solve_phase_cfg(t_grid, constants, 0.0)
}

/// Like [`solve_phase`] with an explicit phase constant a.
pub fn solve_phase_cfg(
    t_grid: &[f64],
    constants: &DegenerationConstants,
    phase_a: f64,
) -> Result<ModulationTable> {
    let cd = critical_point();
    if t_grid.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let mut prev = cd.t_star;
    for &t in t_grid {
        if !(t > prev) {
            return Err(Error::OutOfRange { value: t });
        }
        prev = t;
    }
    let mut acc = PhaseAccum::new(*constants, phase_a);
    let mut states = Vec::with_capacity(t_grid.len());
    let mut sig_prev = 0.0;
    for &t in t_grid {
        let sig = (t - cd.t_star).powf(0.25);
        acc.advance(sig_prev, sig)?;
        sig_prev = sig;
        let (mut st, _) = solve_e_counted(t, acc.trk.guess(t))?;
        acc.trk.push(t, st.e);
        let (sp, _) = acc.rates(t, st.e)?;
        st.s_prime = sp;
        st.s = acc.s;
        st.phi = acc.phi;
        states.push(st);
    }
    Ok(ModulationTable {
        constants: *constants,
        phase_a,
        states,
    })
}

/// S′·∫₀^{φ_U} 2 dφ/√((x−m)²+n²): the phase t₁ accumulated from the
/// bottom turning point β up to U = β + (α−β) sin²φ_U.
fn phase_up_to(st: &ModulationState, phi_u: f64) -> Result<f64> {
    let l = st.alpha - st.beta;
    let (m, n) = (st.m, st.n);
    let beta = st.beta;
    let f = |phi: f64| {
        let sp = phi.sin();
        let x = beta + l * sp * sp;
        2.0 / ((x - m) * (x - m) + n * n).sqrt()
    };
    let frac = ((m - beta) / l).max(0.0).min(1.0);
    let phi0 = frac.sqrt().asin();
    let raw = if st.n < 0.1 && phi0 > 1e-9 && phi0 < phi_u {
        adaptive(&f, 0.0, phi0, QTOL)? + adaptive(&f, phi0, phi_u, QTOL)?
    } else {
        adaptive(&f, 0.0, phi_u, QTOL)?
    };
    Ok(st.s_prime * raw)
}

/// The leading profile U⁰(t₁) of the state's orbit.
///
/// Convention: U⁰(0) = β (the bottom turning point), U⁰ even in t₁, so the
/// top U⁰ = α sits at half the t₁-period 2S′J ≡ √2·T. The inversion folds
/// t₁ into the rising half-branch and solves the incomplete integral by
/// safeguarded Newton in the angle φ_U.
pub fn leading_u0(t1: f64, state: &ModulationState) -> Result<f64> {
    if !t1.is_finite() {
        return Err(Error::OutOfRange { value: t1 });
    }
    if !(state.s_prime > 0.0) {
        return Err(Error::OutOfRange {
            value: state.s_prime,
        });
    }
    let j = period_integral(state.alpha, state.beta, state.m, state.n)?;
    let p = 2.0 * state.s_prime * j;
    let mut r = t1 % p;
    if r < 0.0 {
        r += p;
    }
    if r > 0.5 * p {
        r = p - r;
    }
    if r < 1e-13 {
        return Ok(state.beta);
    }
    if r > 0.5 * p - 1e-13 {
        return Ok(state.alpha);
    }
    let phi = newton_safe(
        |phi| {
            let g = phase_up_to(state, phi).unwrap_or(f64::NAN);
            let sp = phi.sin();
            let x = state.beta + (state.alpha - state.beta) * sp * sp;
            let dg =
                2.0 * state.s_prime / ((x - state.m) * (x - state.m) + state.n * state.n).sqrt();
            (g - r, dg)
        },
        FRAC_PI_2 * (r / (0.5 * p)),
        0.0,
        FRAC_PI_2,
        1e-12,
        "U0 phase inversion",
    )?;
    let sp = phi.sin();
    Ok(state.beta + (state.alpha - state.beta) * sp * sp)
}

/// True iff (t − t*)·ε^{−2/3} > M_KUZ and t ≤ t* + A_KUZ.
pub fn kuzmak_validity(t: f64, eps: f64) -> Validity {
    let eta = t - critical_point().t_star;
    if eta <= 0.0 {
        return Validity {
            ok: false,
            margin: 0.0,
        };
    }
    let margin = (eta * eps.powf(-2.0 / 3.0) / M_KUZ).min(A_KUZ / eta);
    Validity {
        ok: margin >= 1.0,
        margin,
    }
}

/// Evaluate u = U⁰(S(t)/ε + φ(t), t) inside the region-IV window.
///
/// The state at t is re-solved exactly (seeded from the bracketing table
/// node), S is carried from that node by the same σ-panel quadrature the
/// sweep used, and φ is interpolated linearly in σ (exact for a = 0).
/// The residual is the formal size ε²η^{−11/4} + ε³η^{−17/4} of the terms
/// the leading order drops, η = t − t*.
pub fn kuzmak_eval(t: f64, eps: f64, table: &ModulationTable) -> Result<SolutionSample> {
    if !(eps > 0.0) {
        return Err(Error::OutOfRange { value: eps });
    }
    let v = kuzmak_validity(t, eps);
    if !v.ok {
        return Err(Error::OutOfValidity {
            constraint: "(t - t_star)*eps^{-2/3} > M_kuz and t <= t_star + 1",
            margin: v.margin,
        });
    }
    let cd = critical_point();
    let i = table.locate(t)?;
    let base = &table.states[i];
    let mut acc = PhaseAccum::new(table.constants, table.phase_a);
    acc.s = base.s;
    acc.trk.push(base.t, base.e);
    let sig_base = (base.t - cd.t_star).powf(0.25);
    let sig = (t - cd.t_star).powf(0.25);
    acc.advance(sig_base, sig)?;
    let (mut st, _) = solve_e_counted(t, acc.trk.guess(t))?;
    let (sp, _) = acc.rates(t, st.e)?;
    st.s_prime = sp;
    st.s = acc.s;
    st.phi = if i + 1 < table.states.len() {
        let next = &table.states[i + 1];
        let sig_next = (next.t - cd.t_star).powf(0.25);
        if sig_next > sig_base {
            base.phi + (next.phi - base.phi) * (sig - sig_base) / (sig_next - sig_base)
        } else {
            base.phi
        }
    } else {
        base.phi
    };
    let t1 = st.s / eps + st.phi;
    let u = leading_u0(t1, &st)?;
    let eta = t - cd.t_star;
    let residual = eps * eps * eta.powf(-2.75) + eps * eps * eps * eta.powf(-4.25);
    Ok(SolutionSample::new(t, u, Regime::KuzmakIV, residual))
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;
    use crate::boutroux::solve_g3;
    use crate::oracle::{solve_p2, EventKind, OracleConfig};
    use crate::pole_layer::w0_eval;
    use proptest::prelude::*;
    use std::sync::OnceLock;
    use std::vec::Vec;

    const TS: f64 = -2.3811015779522995;
    const US: f64 = -0.6299605249474366;
    const ES: f64 = 0.4724703937105774;

    fn constants() -> &'static DegenerationConstants {
        static K: OnceLock<DegenerationConstants> = OnceLock::new();
        K.get_or_init(|| solve_k().expect("degeneration constants"))
    }

    #[test]
    fn pinch_coefficient_root() {
        let c3 = c_of_k(0.3).unwrap();
        let c6 = c_of_k(0.6).unwrap();
        assert!((c3 - -0.264471021678).abs() < 1e-9);
        assert!((c6 - 0.252281703328).abs() < 1e-9);
        assert!(c3 * c6 < 0.0);

        let k = constants();
        assert!(k.k > 0.460 && k.k < 0.466);
        assert!((k.k - 0.462052796854).abs() < 1e-10);
        assert!(c_of_k(k.k).unwrap().abs() < 1e-12);
        // 0.463 is close to the root but distinctly not it
        let c463 = c_of_k(0.463).unwrap().abs();
        assert!(c463 < 0.02 * c3.abs() && c463 > 1e-4);
        assert!((ck_integral(k.k, K_PANELS) - ck_integral(k.k, 2 * K_PANELS)).abs() < 1e-10);

        assert!(c_of_k(0.0).is_err());
        assert!(c_of_k(1.0).is_err());
    }

    #[test]
    fn degeneration_constants_closed_forms() {
        let k = constants();
        assert!((k.nu1 - (3.0 / (2.0 * (3.0 - k.k * k.k))).sqrt()).abs() < 1e-15);
        assert!((k.mu1 - k.k / 3.0 * k.nu1).abs() < 1e-15);
        assert!((6.0 * k.mu1 * k.mu1 - 2.0 * k.nu1 * k.nu1 + 1.0).abs() < 1e-14);
        assert!((k.gamma1 - US * US).abs() < 1e-15);
        // vicinity of the rounded-k arithmetic
        assert!((k.nu1 - 0.73382).abs() < 5e-4);
        assert!((k.mu1 - 0.11325).abs() < 5e-4);
        // frozen solved values
        assert!((k.c_star - 3.982502242710).abs() < 1e-8);
        assert!(
            (cstar_integral(k.k, K_PANELS) - cstar_integral(k.k, 2 * K_PANELS)).abs() < 1e-9
        );
        assert!((k.t_period - 4.142157336800).abs() < 1e-8);
        assert!(k.t_period > 0.0 && k.t_period.is_finite());
    }

    /// The t₁-period of U⁰ is √2·T by construction; the elliptic profile of
    /// region II∞ oscillates with the lattice period Ω. The regimes match
    /// where they overlap, so the two constants — computed through entirely
    /// disjoint machinery (a pinch-coefficient root and quadratures here, a
    /// regularized cycle condition there) — must agree.
    #[test]
    fn period_matches_elliptic_lattice() {
        let k = constants();
        let p = solve_g3().unwrap();
        assert!((2.0f64.sqrt() * k.t_period - p.omega_real).abs() < 1e-9);
    }

    #[test]
    fn action_degeneration_and_beta_identity() {
        let i0 = action_i0(TS, ES).unwrap();
        assert!((i0 - 2.0 * PI).abs() < 1e-8);

        // I₀(t*, E*) = 2L³·B(5/2, 3/2) with L = α−β = 4|u*|, L³ = 16:
        // the Beta factor from its own quadrature, L³ in closed form.
        let b52 = adaptive(
            |phi: f64| {
                let s = phi.sin();
                let c = phi.cos();
                2.0 * s * s * s * s * c * c
            },
            0.0,
            FRAC_PI_2,
            1e-14,
        )
        .unwrap();
        assert!((b52 - PI / 16.0).abs() < 1e-12);
        assert!((16.0 * b52 - PI).abs() < 1e-11);
        assert!((i0 - 2.0 * 16.0 * b52).abs() < 1e-8);

        // ∂I₀/∂E equals the period integral (and is positive).
        let (t, e) = (TS + 0.3, ES + 0.12);
        let h = 1e-6;
        let fd = (action_i0(t, e + h).unwrap() - action_i0(t, e - h).unwrap()) / (2.0 * h);
        let (alpha, beta, m, n) = quartic_factor(t, e).unwrap();
        let j = period_integral(alpha, beta, m, n).unwrap();
        assert!(fd > 0.0);
        assert!((fd - j).abs() < 1e-6 * j);

        // quadrature convergence under node doubling (smooth point)
        let a48 = i0_panels(t, e, 48).unwrap();
        let a96 = i0_panels(t, e, 96).unwrap();
        assert!((a48 - a96).abs() < 1e-9);
    }

    #[test]
    fn quartic_factor_structure() {
        // Degeneration: triple root pinch; the pinching roots carry the
        // cube-root-of-rounding conditioning (~1e−5), α is well separated.
        let (alpha, beta, m, n) = quartic_factor(TS, ES).unwrap();
        assert!((alpha - -3.0 * US).abs() < 1e-9);
        assert!((beta - US).abs() < 2e-5);
        assert!((m - US).abs() < 2e-5);
        assert!(n.abs() < 2e-5);

        // Generic point: all four Viète lines at rounding level.
        let (t, e) = (TS + 0.5, 0.76);
        let (alpha, beta, m, n) = quartic_factor(t, e).unwrap();
        assert!(alpha > beta && n >= 0.0);
        assert!((alpha + beta + 2.0 * m).abs() < 1e-13);
        let mn = m * m + n * n;
        assert!((mn + alpha * beta + 2.0 * m * (alpha + beta) - t).abs() < 1e-10);
        assert!(((alpha + beta) * mn + 2.0 * m * alpha * beta - 2.0).abs() < 1e-10);
        assert!((alpha * beta * mn + e).abs() < 1e-9);

        // Root-structure rejection: four real roots below the fold, none
        // for E far under the orbit family.
        match quartic_factor(TS - 0.5, 0.3) {
            Err(Error::RootStructureError { real_roots: 4 }) => {}
            other => panic!("expected four-real-root rejection, got {other:?}"),
        }
        match quartic_factor(TS + 0.5, -5.0) {
            Err(Error::RootStructureError { real_roots: 0 }) => {}
            other => panic!("expected no-real-root rejection, got {other:?}"),
        }
    }

    #[test]
    fn energy_continuation_near_fold() {
        let k = constants();
        let mut e_prev = ES;
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for eta in [1e-4, 1e-3] {
            let st = solve_e(TS + eta, e_prev + k.gamma1 * eta).unwrap();
            e_prev = st.e;
            rows.push((eta, st.e - ES, st.n));
            // degeneration coefficients within 5%
            assert!(((st.e - ES) / (k.gamma1 * eta) - 1.0).abs() < 0.05);
            assert!((st.n / (k.nu1 * eta.sqrt()) - 1.0).abs() < 0.05);
            // the pinch similarity ratio approaches the solved k
            assert!(((st.m - st.beta) / st.n / k.k - 1.0).abs() < 0.01);
        }
        // log-slopes: E−E* linear, n like √η
        let (ea, eb) = (rows[0].1, rows[1].1);
        let slope_e = (eb / ea).ln() / 10.0f64.ln();
        assert!((slope_e - 1.0).abs() < 0.02);
        let slope_n = (rows[1].2 / rows[0].2).ln() / 10.0f64.ln();
        assert!((slope_n - 0.5).abs() < 0.02);

        // defining residual and frozen values at t* + 0.5
        let st = solve_e(TS + 0.5, ES + 0.2).unwrap();
        assert!((action_i0(st.t, st.e).unwrap() - 2.0 * PI).abs() < 1e-8);
        assert!((st.e - ES - 0.2866744).abs() < 1e-6);
        assert!((st.alpha - 1.796987832).abs() < 1e-7);
    }

    fn table() -> &'static ModulationTable {
        static T: OnceLock<ModulationTable> = OnceLock::new();
        T.get_or_init(|| {
            let mut grid: Vec<f64> = Vec::new();
            grid.push(TS + 1e-3);
            grid.push(TS + 1e-2);
            for i in 0..=13 {
                let sig = 0.35 + 0.05 * i as f64;
                grid.push(TS + sig * sig * sig * sig);
            }
            solve_phase(&grid, constants()).expect("phase sweep")
        })
    }

    #[test]
    fn phase_normalization_near_fold() {
        let tb = table();
        // S ≈ (4/5)η^{5/4} and S′ ≈ η^{1/4} with unit coefficients
        let s1 = tb.states[0];
        assert!((s1.t - (TS + 1e-3)).abs() < 1e-14);
        let ratio = s1.s / (0.8 * 1e-3f64.powf(1.25));
        assert!(ratio > 0.98 && ratio < 1.02, "S ratio {ratio}");
        let s2 = tb.states[1];
        let slope = (s2.s_prime / s1.s_prime).ln() / 10.0f64.ln();
        assert!((slope - 0.25).abs() < 0.02, "S' slope {slope}");
        // frozen sweep values
        assert!((s1.s_prime / 1e-3f64.powf(0.25) - 1.003099484).abs() < 1e-6);
        let last = tb.states.last().unwrap();
        assert!((last.t - (TS + 1.0)).abs() < 1e-9);

        // S′ > 0 throughout, S increasing, a = 0 leaves φ ≡ 0
        let mut prev_s = 0.0;
        for st in &tb.states {
            assert!(st.s_prime > 0.0);
            assert!(st.s > prev_s);
            prev_s = st.s;
            assert_eq!(st.phi, 0.0);
        }

        // action conservation along the sweep
        for st in &tb.states {
            assert!((action_i0(st.t, st.e).unwrap() - 2.0 * PI).abs() < 1e-7);
        }

        // a ≠ 0 produces a drifting φ; a = 0 is the stationary limit
        let small = solve_phase_cfg(&[TS + 0.3, TS + 0.5], constants(), 0.5).unwrap();
        assert!(small.states[1].phi != small.states[0].phi);
        assert!(small.states[0].phi != 0.0);

        // grid validation
        assert!(matches!(
            solve_phase(&[], constants()),
            Err(Error::EmptyWindow)
        ));
        assert!(solve_phase(&[TS - 0.1], constants()).is_err());
        assert!(solve_phase(&[TS + 0.2, TS + 0.1], constants()).is_err());
    }

    #[test]
    fn leading_profile_inversion() {
        let tb = table();
        let st = tb
            .states
            .iter()
            .find(|s| (s.t - (TS + 0.5)).abs() < 0.03)
            .copied()
            .unwrap_or_else(|| {
                let mut s = solve_e(TS + 0.5, ES + 0.29).unwrap();
                let j = period_integral(s.alpha, s.beta, s.m, s.n).unwrap();
                s.s_prime = constants().t_period / (2.0f64.sqrt() * j);
                s
            });
        let p = 2.0f64.sqrt() * constants().t_period;

        assert_eq!(leading_u0(0.0, &st).unwrap(), st.beta);
        assert!((leading_u0(0.5 * p, &st).unwrap() - st.alpha).abs() < 1e-12);
        // periodicity and evenness
        for t1 in [0.23 * p, 0.41 * p, 1.77 * p] {
            let u = leading_u0(t1, &st).unwrap();
            assert!((u - leading_u0(t1 + p, &st).unwrap()).abs() < 1e-9);
            assert!((u - leading_u0(-t1, &st).unwrap()).abs() < 1e-9);
            assert!(u >= st.beta - 1e-12 && u <= st.alpha + 1e-12);
        }
        // the inverted profile satisfies the orbit equation:
        // (S′ dU/dt₁)² = F(U)
        for t1 in [0.11 * p, 0.31 * p] {
            let h = 1e-6;
            let du = (leading_u0(t1 + h, &st).unwrap() - leading_u0(t1 - h, &st).unwrap())
                / (2.0 * h);
            let u = leading_u0(t1, &st).unwrap();
            let lhs = (st.s_prime * du) * (st.s_prime * du);
            let rhs = (st.alpha - u) * (u - st.beta) * ((u - st.m) * (u - st.m) + st.n * st.n);
            assert!((lhs - rhs).abs() < 1e-5 * (1.0 + rhs));
        }
        assert!(leading_u0(f64::NAN, &st).is_err());
        let unset = solve_e(TS + 0.5, ES + 0.29).unwrap();
        assert!(leading_u0(1.0, &unset).is_err());
    }

    /// Near the fold the orbit spends its period near β except for a burst
    /// to α; the burst shape is the algebraic soliton W₀(θ) = −4u*/(1+4u*²θ²)
    /// centered on the top turning point (half period under the β-at-zero
    /// convention). The sup distance over a period decays like √η.
    #[test]
    fn profile_degenerates_to_soliton_burst() {
        let k = constants();
        let p = 2.0f64.sqrt() * k.t_period;
        let mut sups: Vec<f64> = Vec::new();
        for eta in [1e-4, 1e-6] {
            let mut st = solve_e(TS + eta, ES + k.gamma1 * eta).unwrap();
            let j = period_integral(st.alpha, st.beta, st.m, st.n).unwrap();
            st.s_prime = k.t_period / (2.0f64.sqrt() * j);
            let mut sup = 0.0f64;
            for i in 0..=80 {
                let t1 = p * i as f64 / 80.0;
                let u = leading_u0(t1, &st).unwrap();
                let theta = (t1 - 0.5 * p) / st.s_prime;
                let w0 = -4.0 * US / (1.0 + 4.0 * US * US * theta * theta);
                sup = sup.max((u - (US + w0)).abs());
            }
            assert!(sup < 3.0 * eta.sqrt(), "sup {sup} at eta {eta}");
            sups.push(sup);
        }
        // √η decay between the two fold distances (factor 10 ± 60%)
        let decay = sups[0] / sups[1];
        assert!(decay > 4.0 && decay < 25.0, "decay {decay}");

        // cross-module: the burst peak α(t*) = u* + w⁰(0) = −3u*
        let (alpha, ..) = quartic_factor(TS, ES).unwrap();
        assert!((alpha - (US + w0_eval(0.0))).abs() < 1e-9);
        assert_eq!(US + w0_eval(0.0), -3.0 * US);
    }

    /// I(k, δ) = ∫₀¹ √(z(1−z))·√((z−kδ)²+δ²) dz obeys
    /// π/16 − kδ·π/8 + δ²·π/4 + c(k)·δ^{5/2} + O(δ³). At a generic k the
    /// δ^{5/2} remainder must show both the exponent and the coefficient
    /// c(k) — an independent check of c_of_k, which is computed from an
    /// entirely different (rationalized, infinite-range) integral.
    #[test]
    fn action_pinch_remainder_law() {
        let k = 0.3;
        let c = c_of_k(k).unwrap();
        let i_of = |delta: f64| {
            adaptive(
                |psi: f64| {
                    let s = psi.sin();
                    let cgs = psi.cos();
                    let z = s * s;
                    2.0 * s * s * cgs * cgs
                        * ((z - k * delta) * (z - k * delta) + delta * delta).sqrt()
                },
                0.0,
                FRAC_PI_2,
                1e-14,
            )
            .unwrap()
        };
        let deltas = [1e-2, 3e-3, 1e-3, 3e-4];
        let mut rs: Vec<f64> = Vec::new();
        for &d in &deltas {
            let model = PI / 16.0 - k * d * PI / 8.0 + d * d * PI / 4.0;
            rs.push(i_of(d) - model);
        }
        for w in rs.windows(2).zip(deltas.windows(2)) {
            let (r, d) = w;
            let slope = (r[1].abs() / r[0].abs()).ln() / (d[1] / d[0]).ln();
            assert!(slope > 2.3 && slope < 2.7, "remainder slope {slope}");
        }
        let ratio = rs[3] / deltas[3].powf(2.5);
        assert!((ratio / c - 1.0).abs() < 0.06, "coefficient {ratio} vs {c}");
    }

    /// Direct integration at finite ε against the averaged envelope and
    /// frequency. Peak-to-peak spacing measures the full t₁-period √2·T,
    /// i.e. Δt ≈ ε·√2·T/S′(t).
    #[test]
    fn oracle_envelope_and_frequency() {
        let k = constants();
        // envelope at ε² = 0.1: the t₁-period √2·T stretches to
        // Δt ≈ ε√2T/S′ ≈ 2 here, so the run has to go far above the fold
        // to collect turning points; each one must sit inside the local
        // orbit band [β(t), α(t)] up to the O(ε) correction.
        let eps = 0.1f64.sqrt();
        let run = solve_p2(&OracleConfig::new(eps, TS - 1.0, TS + 4.0).with_tol(1e-10)).unwrap();
        let mut seen = 0;
        let mut e_prev = ES + 0.2;
        for ev in &run.events {
            if ev.t >= TS + 0.35 {
                seen += 1;
                let st = solve_e(ev.t, e_prev).unwrap();
                e_prev = st.e;
                assert!(
                    ev.u >= st.beta - 3.0 * eps && ev.u <= st.alpha + 3.0 * eps,
                    "event ({}, {}) vs band [{}, {}]",
                    ev.t,
                    ev.u,
                    st.beta,
                    st.alpha
                );
            }
        }
        assert!(seen >= 2, "oscillation events in the window: {seen}");

        // frequency at ε = 1e−2, spacing checked against the local S′
        let eps = 1e-2;
        let run = solve_p2(&OracleConfig::new(eps, TS - 1.0, TS + 0.65).with_tol(1e-10)).unwrap();
        let peaks: Vec<f64> = run
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Peak && e.t >= TS + 0.35 && e.t <= TS + 0.65)
            .map(|e| e.t)
            .collect();
        assert!(peaks.len() >= 3, "peaks in the window: {}", peaks.len());
        let mut e_prev = ES + 0.25;
        for w in peaks.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let stm = solve_e(mid, e_prev).unwrap();
            e_prev = stm.e;
            let j = period_integral(stm.alpha, stm.beta, stm.m, stm.n).unwrap();
            let sp = k.t_period / (2.0f64.sqrt() * j);
            let pred = eps * 2.0f64.sqrt() * k.t_period / sp;
            assert!(
                ((w[1] - w[0]) / pred - 1.0).abs() < 0.05,
                "spacing {} vs {}",
                w[1] - w[0],
                pred
            );
        }
    }

    #[test]
    fn eval_window_and_residual() {
        let tb = table();
        let eps = 1e-2;
        // below the window: η·ε^{−2/3} too small
        match kuzmak_eval(TS + 0.1, eps, tb) {
            Err(Error::OutOfValidity { margin, .. }) => assert!(margin < 1.0),
            other => panic!("expected validity rejection, got {other:?}"),
        }
        assert!(!kuzmak_validity(TS - 0.1, eps).ok);
        assert!(!kuzmak_validity(TS + 1.4, eps).ok);

        let t = TS + 0.5;
        let s = kuzmak_eval(t, eps, tb).unwrap();
        assert_eq!(s.source, Regime::KuzmakIV);
        let eta: f64 = 0.5;
        let want = eps * eps * eta.powf(-2.75) + eps * eps * eps * eta.powf(-4.25);
        assert!((s.residual - want).abs() < 1e-15);
        let st = solve_e(t, ES + 0.29).unwrap();
        assert!(s.u >= st.beta - 1e-9 && s.u <= st.alpha + 1e-9);

        // ε → 0 at fixed t stays bounded in [β, α]
        for eps in [1e-3, 1e-5, 1e-7] {
            let s = kuzmak_eval(t, eps, tb).unwrap();
            assert!(s.u >= st.beta - 1e-9 && s.u <= st.alpha + 1e-9);
        }

        // the phase carried from different table nodes is consistent:
        // evaluating just left and right of a node agrees to the
        // inversion tolerance
        let tn = tb.states[tb.states.len() - 2].t;
        let ul = kuzmak_eval(tn - 1e-9, eps, tb).unwrap().u;
        let ur = kuzmak_eval(tn + 1e-9, eps, tb).unwrap().u;
        assert!((ul - ur).abs() < 1e-4, "seam jump {}", (ul - ur).abs());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// Any (t, E) with E above the degeneration energy factors into a
        /// valid two-real-root configuration whose Viète lines reconstruct
        /// the quartic, and the period integral is positive.
        #[test]
        fn factor_reconstructs_quartic(
            t in (TS + 1e-3)..(TS + 1.0),
            de in 1e-3..1.2f64,
        ) {
            let e = ES + de;
            let (alpha, beta, m, n) = quartic_factor(t, e).unwrap();
            prop_assert!(alpha > beta);
            prop_assert!(n >= 0.0);
            let mn = m * m + n * n;
            prop_assert!((alpha + beta + 2.0 * m).abs() < 1e-12);
            prop_assert!((mn + alpha * beta + 2.0 * m * (alpha + beta) - t).abs() < 1e-9);
            prop_assert!(((alpha + beta) * mn + 2.0 * m * alpha * beta - 2.0).abs() < 1e-9);
            prop_assert!((alpha * beta * mn + e).abs() < 1e-8);
            let j = period_integral(alpha, beta, m, n).unwrap();
            prop_assert!(j > 0.0);
        }
    }
}
