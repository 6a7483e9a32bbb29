//! Region-II inner layer: the Painlevé-1 transcendent in the stretched
//! variables τ = (t − t*)ε^{−4/5}, v = (u − u*)ε^{−2/5}.
//!
//! The leading inner profile solves
//!
//! ```text
//!   v″ + 6u*v² + u*τ = 0,
//! ```
//!
//! started on its pole-free algebraic branch v ≈ −√(−τ/6) far to the left
//! and marched to the right, where it develops a lattice of second-order
//! poles τ₁ < τ₂ < ⋯.  Near each pole
//!
//! ```text
//!   v⁰ = −1/(u*σ²) + (u*τₖ/10)σ² + (u*/6)σ³ + cₖσ⁴ + ⋯,   σ = τ − τₖ,
//! ```
//!
//! with one free constant cₖ per pole; all higher coefficients follow from a
//! quadratic recursion which this module generates on demand rather than
//! transcribing (the same recursion reproduces the displayed low-order
//! terms, which the tests pin down).  Integration restarts on the other
//! side of each pole from that series.
//!
//! The first correction v¹ solves the linearization
//!
//! ```text
//!   v¹″ + 12u*v⁰v¹ = −(τv⁰ + 2v⁰³),
//! ```
//!
//! whose behaviour at a pole is spanned by a particular Laurent solution
//! v¹_c ~ −σ⁻⁴ and the homogeneous pair v₁ ~ σ⁻³, v₂ ~ σ⁴.  The connection
//! constants (a1, b1) of v¹ = v¹_c + a1·v₁ + b1·v₂ are extracted by
//! collocation on an annulus around each pole.
//!
//! Two continuations of v¹ past a pole must be kept apart.  The marched
//! correction used for evaluation is the meromorphic continuation: the
//! local frame {v¹_c, v₁, v₂} is single-valued in the punctured disk, so
//! (a1, b1) carry across unchanged, and a direct finite-ε solve confirms
//! that continuation between poles to the order of the expansion.  The
//! matching frame handed to the pole layer is re-centered on the finite-ε
//! pole, and there the even constant shifts by Δ¹ₖ = −22u*³τₖ²/75 while a1
//! is continuous; `first_correction` seeds a short branch with that shift
//! and re-measures it by projection, publishing the result as (a1⁺, b1⁺).

use alloc::vec;
use alloc::vec::Vec;

use crate::equilibria::critical_point;
use crate::num::fit::{levmar, lstsq};
use crate::num::ode::{Dopri5, OdeSolution};
use crate::real::Real;
use crate::sample::{Regime, SolutionSample, Validity};
use crate::{Error, Result};

/// Blow-up threshold that triggers pole location.
pub const V_MAX: f64 = 1e6;
/// Weighted-rms threshold above which a pole fit is rejected.
pub const FIT_THRESHOLD: f64 = 1e-6;
/// Validity margin for the pole-distance condition ε^{−1/5}|τ−τₖ| > M_POLE.
pub const M_POLE: f64 = 5.0;
/// Validity margin for the far-field condition |τ| < ε^{−4/5}/M_FAR.
pub const M_FAR: f64 = 5.0;
/// Inner and outer radii of the projection annulus for (a1, b1).
const PROJ_IN: f64 = 0.35;
const PROJ_OUT: f64 = 0.7;
/// Laurent series are carried to this power of σ.
const NMAX: i32 = 40;

/// Integration restart distance right of a pole.  Series truncation is
/// negligible out to σ ~ 1, so the distance is chosen to skip the steep
/// stretch right of the pole where integration noise picks up a spurious
/// σ⁴-content (it reaches ~2e-5 in cₖ when restarting at 0.04).
pub fn w_pole(tau_k: f64) -> f64 {
    0.12 * tau_k.abs().powf(-0.2)
}

fn u_star() -> f64 {
    critical_point().u_star
}

/// The stretch maps between (t, u) and the inner variables (τ, v).
#[derive(Debug, Clone, Copy)]
pub struct InnerScale {
    pub eps: f64,
}

impl InnerScale {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::OutOfRange { value: eps });
        }
        Ok(InnerScale { eps })
    }

    pub fn tau_of_t(&self, t: f64) -> f64 {
        (t - critical_point().t_star) * self.eps.powf(-0.8)
    }

    pub fn t_of_tau(&self, tau: f64) -> f64 {
        critical_point().t_star + self.eps.powf(0.8) * tau
    }

    pub fn v_of_u(&self, u: f64) -> f64 {
        (u - u_star()) * self.eps.powf(-0.4)
    }

    pub fn u_of_v(&self, v: f64) -> f64 {
        u_star() + self.eps.powf(0.4) * v
    }
}

/// Truncated Laurent series Σ c[i]·σ^(j0+i).
#[derive(Debug, Clone)]
struct Laurent {
    j0: i32,
    c: Vec<f64>,
}

impl Laurent {
    fn get(&self, j: i32) -> f64 {
        let i = j - self.j0;
        if i < 0 || i as usize >= self.c.len() {
            0.0
        } else {
            self.c[i as usize]
        }
    }

    fn eval(&self, s: f64) -> f64 {
        let mut p = 0.0;
        for &ci in self.c.iter().rev() {
            p = p * s + ci;
        }
        p * s.powi(self.j0)
    }

    fn deriv(&self) -> Laurent {
        let c = self
            .c
            .iter()
            .enumerate()
            .map(|(i, &ci)| ci * (self.j0 + i as i32) as f64)
            .collect();
        Laurent {
            j0: self.j0 - 1,
            c,
        }
    }
}

/// Laurent coefficients of v⁰ at a pole: exponents −2 ..= NMAX.
///
/// Recursion: matching σ^j in the defining equation gives
/// [(j+2)(j+1)−12]·B_{j+2} = −6u*·Σ′ B_a B_b − u*τₖ·δ_{j,0} − u*·δ_{j,1},
/// the primed sum running over a+b = j, a,b > −2 (the a = −2 products are
/// the −12 on the left).  The σ⁴ coefficient is the free constant cₖ.
fn v0_series(tau_k: f64, c_k: f64) -> Laurent {
    let us = u_star();
    let n = (NMAX + 2) as usize;
    let mut b = vec![0.0; n + 1];
    b[0] = -1.0 / us; // σ⁻²
    for m in 1..=n {
        let j = m as i32 - 4; // computing B_{j+2}, stored at index m
        let fac = ((j + 2) * (j + 1) - 12) as f64;
        let mut conv = 0.0;
        for i in 1..m {
            conv += b[i] * b[m - i];
        }
        let mut rhs = -6.0 * us * conv;
        if j == 0 {
            rhs -= us * tau_k;
        }
        if j == 1 {
            rhs -= us;
        }
        if m == 6 {
            // Resonant index: σ⁴ coefficient is free; the recursion is
            // consistent there (the forcing vanishes identically).
            b[m] = c_k;
        } else {
            b[m] = rhs / fac;
        }
    }
    Laurent { j0: -2, c: b }
}

/// Solutions of the linearized operator L[y] = y″ + 12u*v⁰y around a pole.
///
/// With y = Σ y_j σ^j and forcing f = Σ f_q σ^q the recursion is
/// [(q+2)(q+1)−12]·y_{q+2} = f_q − 12u*·Σ_{m≥2} B_m y_{q−m}.  The indicial
/// roots sit at exponents −3 and 4; both resonant coefficients are set to
/// zero (conventions fixing the homogeneous admixtures) except when one of
/// them is the requested leading exponent itself.  The solutions here are
/// log-free; the resonance consistency is checked and a failure reported
/// rather than silently absorbed.
fn lame_series(v0: &Laurent, rhs: Option<&Laurent>, lead: i32) -> Result<Laurent> {
    let us = u_star();
    let mut y = Laurent {
        j0: lead,
        c: vec![0.0; (NMAX - lead + 1) as usize],
    };
    for j in lead..=NMAX {
        let q = j - 2;
        let fac = ((q + 2) * (q + 1) - 12) as f64;
        let mut s = 0.0;
        let mut scale = 0.0;
        for m in 2..=(j - 2 - lead).max(0) {
            let term = v0.get(m) * y.get(j - 2 - m);
            s += term;
            scale += term.abs();
        }
        let f = rhs.map_or(0.0, |r| r.get(q));
        let num = f - 12.0 * us * s;
        if j == -3 || j == 4 {
            let conv = f.abs() + 12.0 * us.abs() * scale;
            if num.abs() > 1e-9 * (1.0 + conv) {
                return Err(Error::RegularizationFailure);
            }
            let i = (j - lead) as usize;
            y.c[i] = if j == lead { 1.0 } else { 0.0 };
        } else {
            let i = (j - lead) as usize;
            if j == lead && rhs.is_none() {
                y.c[i] = 1.0;
            } else {
                y.c[i] = num / fac;
            }
        }
    }
    Ok(y)
}

/// Forcing of the first correction, f¹ = −(τ·v⁰ + 2v⁰³), as a Laurent
/// series at the pole (τ = τₖ + σ).
fn f1_series(tau_k: f64, v0: &Laurent) -> Laurent {
    let n = v0.c.len();
    let mut sq = vec![0.0; 2 * n - 1];
    for i in 0..n {
        for j in 0..n {
            sq[i + j] += v0.c[i] * v0.c[j];
        }
    }
    let mut cube = vec![0.0; 3 * n - 2];
    for i in 0..(2 * n - 1) {
        for j in 0..n {
            cube[i + j] += sq[i] * v0.c[j];
        }
    }
    // Exponent range −6 ..= NMAX; index i holds σ^(i−6).
    let len = (NMAX + 7) as usize;
    let mut f = vec![0.0; len];
    for (i, &c3) in cube.iter().enumerate().take(len) {
        f[i] -= 2.0 * c3; // v⁰³ starts at σ⁻⁶
    }
    for (j, &bj) in v0.c.iter().enumerate() {
        if j + 4 < len {
            f[j + 4] -= tau_k * bj; // τₖ·v⁰ starts at σ⁻²
        }
        if j + 5 < len {
            f[j + 5] -= bj; // σ·v⁰ starts at σ⁻¹
        }
    }
    Laurent { j0: -6, c: f }
}

/// The near-pole basis for the first correction.
struct PoleFrame {
    v1c: Laurent,
    v1: Laurent,
    v2: Laurent,
}

fn pole_frame(tau_k: f64, c_k: f64) -> Result<PoleFrame> {
    let v0 = v0_series(tau_k, c_k);
    let f1 = f1_series(tau_k, &v0);
    Ok(PoleFrame {
        v1c: lame_series(&v0, Some(&f1), -4)?,
        v1: lame_series(&v0, None, -3)?,
        v2: lame_series(&v0, None, 4)?,
    })
}

/// Even-constant jump of the first correction across pole k.
pub fn delta1(tau_k: f64) -> f64 {
    let us = u_star();
    -22.0 * us.powi(3) * tau_k * tau_k / 75.0
}

/// Connection constants of v¹ at one pole.  The minus pair is projected
/// left of the pole from the marched correction.  The plus pair belongs to
/// the matching frame handed to the pole layer: a branch is seeded right of
/// the pole with b1⁺ = b1⁻ + Δ¹ₖ, a1⁺ = a1⁻ and re-projected, so plus−minus
/// deviations from the jump rule measure the machinery's consistency.  The
/// marched v¹ itself continues across the pole with (a1⁻, b1⁻) unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Connection {
    pub a1_minus: f64,
    pub b1_minus: f64,
    pub a1_plus: f64,
    pub b1_plus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleData {
    pub k: usize,
    pub tau_k: f64,
    pub c_k: f64,
    /// Weighted rms of the blow-up window fit.
    pub fit_residual: f64,
    /// Filled by `first_correction`.
    pub conn: Option<Connection>,
}

/// Result of fitting the blow-up window: (τₖ, cₖ) and the fit residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleFit {
    pub tau_k: f64,
    pub c_k: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct P1Config {
    pub tau0: f64,
    pub tau1: f64,
    pub tol: f64,
    pub max_poles: usize,
    pub fit_threshold: f64,
}

impl Default for P1Config {
    fn default() -> Self {
        P1Config {
            tau0: -30.0,
            tau1: 26.0,
            tol: 1e-10,
            max_poles: 8,
            fit_threshold: FIT_THRESHOLD,
        }
    }
}

/// The marched leading profile, its poles, and (after `first_correction`)
/// the first correction, all with dense output between pole windows.
#[derive(Debug, Clone)]
pub struct P1Trajectory {
    pub seed_tau: f64,
    pub tol: f64,
    pub poles: Vec<PoleData>,
    segs: Vec<OdeSolution<2>>,
    v1_segs: Vec<OdeSolution<2>>,
}

impl P1Trajectory {
    /// Dense (v⁰, v⁰′); None inside pole windows or outside the march.
    pub fn eval_v0(&self, tau: f64) -> Option<(f64, f64)> {
        for seg in &self.segs {
            if let Some(y) = seg.eval(tau) {
                return Some((y[0], y[1]));
            }
        }
        None
    }

    /// Dense (v¹, v¹′); None until `first_correction` ran, inside the
    /// (wider) projection windows, or outside the march.
    pub fn eval_v1(&self, tau: f64) -> Option<(f64, f64)> {
        for seg in &self.v1_segs {
            if let Some(y) = seg.eval(tau) {
                return Some((y[0], y[1]));
            }
        }
        None
    }

    /// Right end of the marched range.
    pub fn end(&self) -> f64 {
        self.segs.last().map_or(self.seed_tau, |s| s.span().1)
    }

    /// (τ, v⁰, v⁰′) at accepted step endpoints.
    pub fn samples(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for seg in &self.segs {
            for step in seg.steps() {
                let x = step.x0 + step.h;
                let y = step.eval(x);
                out.push((x, y[0], y[1]));
            }
        }
        out
    }
}

/// Algebraic-branch seed: v = −√(−τ/6) + 1/(48u*τ²) + 49/(768√6·u*²(−τ)^{9/2}).
pub fn p1_seed(tau0: f64) -> Result<(f64, f64)> {
    if tau0 > -10.0 {
        return Err(Error::SeedOutOfRange { tau0 });
    }
    let us = u_star();
    let s = -tau0;
    let c3 = 49.0 / (768.0 * 6.0f64.sqrt() * us * us);
    let v = -(s / 6.0).sqrt() + 1.0 / (48.0 * us * tau0 * tau0) + c3 * s.powf(-4.5);
    // d/dτ = −d/ds term by term.
    let dv = 0.5 / (6.0f64.sqrt() * s.sqrt()) - 1.0 / (24.0 * us * tau0.powi(3))
        + 4.5 * c3 * s.powf(-5.5);
    Ok((v, dv))
}

/// First-correction seed on the algebraic branch:
/// v¹ = −τ/(18u*) + (−τ)^{−3/2}/(144√6·u*²).
fn v1_seed(tau0: f64) -> (f64, f64) {
    let us = u_star();
    let mu = 1.0 / (144.0 * 6.0f64.sqrt() * us * us);
    let s = -tau0;
    let v1 = -tau0 / (18.0 * us) + mu * s.powf(-1.5);
    let dv1 = -1.0 / (18.0 * us) + 1.5 * mu * s.powf(-2.5);
    (v1, dv1)
}

fn p1_rhs(tau: f64, y: &[f64; 2]) -> [f64; 2] {
    let us = u_star();
    [y[1], -6.0 * us * y[0] * y[0] - us * tau]
}

/// Fit the blow-up window with the fixed-coefficient Laurent model
/// v = −1/(u*σ²) + (u*τₖ/10)σ² + (u*/6)σ³ + cₖσ⁴ in (τₖ, cₖ).
///
/// Input: (τ, v) samples on the approach with |v| ≥ 1e3.  The initial τₖ
/// guess extrapolates the zero of 1/√|v|, which is asymptotically linear
/// in τ near the pole.
pub fn locate_pole(samples: &[(f64, f64)]) -> Result<PoleFit> {
    if samples.len() < 8 {
        return Err(Error::PoleFitFailure {
            residual: f64::INFINITY,
        });
    }
    let us = u_star();
    let n = samples.len();
    let (t_a, v_a) = samples[n - 2];
    let (t_b, v_b) = samples[n - 1];
    let g_a = 1.0 / v_a.abs().sqrt();
    let g_b = 1.0 / v_b.abs().sqrt();
    let tau_guess = if g_a > g_b {
        t_b + g_b * (t_b - t_a) / (g_a - g_b)
    } else {
        t_b + 0.002
    };
    let model = |tau_k: f64, c_k: f64, tau: f64| {
        let s = tau - tau_k;
        if s.abs() < 1e-13 {
            return f64::INFINITY;
        }
        -1.0 / (us * s * s) + us * tau_k / 10.0 * s * s + us / 6.0 * s * s * s
            + c_k * s * s * s * s
    };
    let (x, rms) = levmar(
        |p: &[f64; 2], r: &mut [f64]| {
            for (i, &(tau, v)) in samples.iter().enumerate() {
                r[i] = (model(p[0], p[1], tau) - v) / (1.0 + v.abs());
            }
        },
        n,
        [tau_guess, 0.0],
        1e-14,
        120,
    )?;
    Ok(PoleFit {
        tau_k: x[0],
        c_k: x[1],
        residual: rms,
    })
}

/// Sharpen cₖ against dense samples at moderate distance from the pole,
/// where the σ⁴ term is no longer drowned by the double pole.  τₖ from the
/// blow-up fit is kept (the σ⁻² term pins it far more precisely than any
/// moderate-distance data could).
fn refine_ck(seg: &OdeSolution<2>, tau_k: f64, c0: f64, side: f64) -> Result<f64> {
    let mut pts = Vec::new();
    for i in 0..9 {
        let s = side * (0.18 + 0.04 * i as f64);
        if let Some(y) = seg.eval(tau_k + s) {
            pts.push((s, y[0]));
        }
    }
    if pts.len() < 4 {
        return Ok(c0);
    }
    let m = pts.len();
    let (x, _) = levmar(
        |p: &[f64; 1], r: &mut [f64]| {
            let series = v0_series(tau_k, p[0]);
            for (i, &(s, v)) in pts.iter().enumerate() {
                r[i] = series.eval(s) - v;
            }
        },
        m,
        [c0],
        1e-14,
        60,
    )?;
    Ok(x[0])
}

/// March the leading profile from the algebraic branch through its poles.
pub fn integrate_p1(tau0: f64, tau1: f64, tol: f64) -> Result<P1Trajectory> {
    integrate_p1_cfg(&P1Config {
        tau0,
        tau1,
        tol,
        max_poles: usize::MAX,
        ..P1Config::default()
    })
}

pub fn integrate_p1_cfg(cfg: &P1Config) -> Result<P1Trajectory> {
    if !(cfg.tau0 < cfg.tau1) || !(cfg.tol > 0.0) {
        return Err(Error::OutOfRange { value: cfg.tau1 });
    }
    let (v, dv) = p1_seed(cfg.tau0)?;
    let solver = Dopri5::tol(cfg.tol, cfg.tol);
    let mut traj = P1Trajectory {
        seed_tau: cfg.tau0,
        tol: cfg.tol,
        poles: Vec::new(),
        segs: Vec::new(),
        v1_segs: Vec::new(),
    };
    let mut tau = cfg.tau0;
    let mut y = [v, dv];
    loop {
        let sol = solver.integrate_until(&p1_rhs, tau, y, cfg.tau1, |_, y| y[0].abs() > V_MAX)?;
        let stopped = sol.stopped;
        traj.segs.push(sol);
        if !stopped {
            break;
        }
        let seg = traj.segs.last().unwrap();
        let samples = blowup_window(seg);
        let fit = locate_pole(&samples)?;
        if fit.residual > cfg.fit_threshold {
            return Err(Error::PoleFitFailure {
                residual: fit.residual,
            });
        }
        let c_k = refine_ck(seg, fit.tau_k, fit.c_k, -1.0)?;
        traj.poles.push(PoleData {
            k: traj.poles.len() + 1,
            tau_k: fit.tau_k,
            c_k,
            fit_residual: fit.residual,
            conn: None,
        });
        if traj.poles.len() >= cfg.max_poles {
            break;
        }
        let w = w_pole(fit.tau_k);
        tau = fit.tau_k + w;
        if tau >= cfg.tau1 {
            break;
        }
        let series = v0_series(fit.tau_k, c_k);
        y = [series.eval(w), series.deriv().eval(w)];
    }
    Ok(traj)
}

/// Step endpoints on the blow-up approach with 1e3 ≤ |v| ≤ V_MAX, thinned
/// to at most 48 points.
fn blowup_window(seg: &OdeSolution<2>) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for step in seg.steps().iter().rev() {
        let x = step.x0 + step.h;
        let v = step.eval(x)[0];
        if v.abs() > V_MAX {
            continue;
        }
        if v.abs() < 1e3 {
            break;
        }
        pts.push((x, v));
    }
    pts.reverse();
    if pts.len() > 48 {
        let stride = pts.len() as f64 / 48.0;
        return (0..48).map(|i| pts[(i as f64 * stride) as usize]).collect();
    }
    pts
}

/// Project v¹ onto {v¹_c, v₁, v₂} at 12 annulus points on one side of a
/// pole.  The v¹_c coefficient must come out ≈ 1; anything else means the
/// collocation lost independence.
fn project_conn(
    seg: &OdeSolution<2>,
    frame: &PoleFrame,
    tau_k: f64,
    side: f64,
) -> Result<(f64, f64)> {
    const NPTS: usize = 12;
    let mut a = Vec::with_capacity(NPTS * 3);
    let mut b = Vec::with_capacity(NPTS);
    for i in 0..NPTS {
        let s = side * (PROJ_IN + (PROJ_OUT - PROJ_IN) * i as f64 / (NPTS - 1) as f64);
        let y = seg
            .eval(tau_k + s)
            .ok_or(Error::ProjectionIllConditioned)?;
        a.push(frame.v1c.eval(s));
        a.push(frame.v1.eval(s));
        a.push(frame.v2.eval(s));
        b.push(y[0]);
    }
    let x = lstsq(&a, &b, NPTS, 3)?;
    if (x[0] - 1.0).abs() > 1e-3 {
        return Err(Error::ProjectionIllConditioned);
    }
    Ok((x[1], x[2]))
}

/// Integrate the first correction along the marched trajectory, extract
/// (a1⁻, b1⁻) at each pole, continue it meromorphically, and measure the
/// matching-frame pair (a1⁺, b1⁺) on a jump-seeded branch right of the pole.
pub fn first_correction(traj: &mut P1Trajectory, tol: f64) -> Result<()> {
    let us = u_star();
    let solver = Dopri5::tol(tol, tol);
    let n_poles = traj.poles.len();
    let mut v1_segs: Vec<OdeSolution<2>> = Vec::new();
    let mut frames: Vec<PoleFrame> = Vec::new();
    for p in &traj.poles {
        frames.push(pole_frame(p.tau_k, p.c_k)?);
    }
    let seed_at = |frame: &PoleFrame, a1: f64, b1: f64, s: f64| {
        [
            frame.v1c.eval(s) + a1 * frame.v1.eval(s) + b1 * frame.v2.eval(s),
            frame.v1c.deriv().eval(s)
                + a1 * frame.v1.deriv().eval(s)
                + b1 * frame.v2.deriv().eval(s),
        ]
    };
    let mut conns: Vec<Connection> = Vec::new();

    let (v1, dv1) = v1_seed(traj.seed_tau);
    let mut y = [v1, dv1];
    let mut tau = traj.seed_tau;
    for (i, seg) in traj.segs.iter().enumerate() {
        let (_, seg_end) = seg.span();
        let stop = if i < n_poles {
            traj.poles[i].tau_k - PROJ_IN
        } else {
            seg_end
        };
        if stop <= tau {
            return Err(Error::FrameIncomplete {
                needs: "pole spacing wider than the projection annulus",
            });
        }
        let (lo, hi) = seg.span();
        let rhs = |x: f64, z: &[f64; 2]| {
            let v0 = seg.eval(x.clamp(lo, hi)).map_or(0.0, |y| y[0]);
            let f1 = -(x * v0 + 2.0 * v0 * v0 * v0);
            [z[1], -12.0 * us * v0 * z[0] + f1]
        };
        let sol = solver.integrate(&rhs, tau, y, stop)?;
        v1_segs.push(sol);
        if i >= n_poles {
            break;
        }
        let pole = &traj.poles[i];
        let frame = &frames[i];
        let (a1m, b1m) = project_conn(v1_segs.last().unwrap(), frame, pole.tau_k, -1.0)?;
        let w = PROJ_IN;
        // Matching-frame branch: seed b1⁺ = b1⁻ + Δ¹ₖ, a1⁺ = a1⁻ right of the
        // pole, carry it across the annulus, and re-project.  The branch is
        // bookkeeping for the pole layer; it does not feed the marched v¹.
        let plus = match traj.segs.get(i + 1) {
            Some(segr) if segr.span().1 >= pole.tau_k + PROJ_OUT => {
                let (rlo, rhi) = segr.span();
                let rrhs = |x: f64, z: &[f64; 2]| {
                    let v0 = segr.eval(x.clamp(rlo, rhi)).map_or(0.0, |y| y[0]);
                    let f1 = -(x * v0 + 2.0 * v0 * v0 * v0);
                    [z[1], -12.0 * us * v0 * z[0] + f1]
                };
                let y0 = seed_at(frame, a1m, b1m + delta1(pole.tau_k), w);
                let branch =
                    solver.integrate(&rrhs, pole.tau_k + w, y0, pole.tau_k + PROJ_OUT)?;
                project_conn(&branch, frame, pole.tau_k, 1.0)?
            }
            _ => (a1m, b1m + delta1(pole.tau_k)),
        };
        conns.push(Connection {
            a1_minus: a1m,
            b1_minus: b1m,
            a1_plus: plus.0,
            b1_plus: plus.1,
        });
        // The marched correction continues with (a1⁻, b1⁻): the local frame
        // is single-valued around the pole, so the constants carry across.
        // The restart sits at the annulus inner edge, not at w_pole: closer
        // in, the ratio v¹_c/v₂ ~ σ⁻⁸ reaches ~1e11 and tolerance-level
        // integration noise would wipe out the b1 content of the state.
        y = seed_at(frame, a1m, b1m, w);
        tau = pole.tau_k + w;
    }

    for (p, c) in traj.poles.iter_mut().zip(conns) {
        p.conn = Some(c);
    }
    traj.v1_segs = v1_segs;
    Ok(())
}

/// Validity of the two-term inner expansion at (t, ε).
///
/// The margin is normalized: the binding ratio among |τ| < ε^{−4/5}/M_FAR
/// and ε^{−1/5}|τ−τₖ| > M_POLE, so valid ⇔ margin > 1 (and τ inside the
/// marched range).
pub fn inner1_validity(t: f64, eps: f64, traj: &P1Trajectory) -> Validity {
    if !(eps > 0.0) {
        return Validity {
            ok: false,
            margin: 0.0,
        };
    }
    let scale = InnerScale { eps };
    let tau = scale.tau_of_t(t);
    let far = if tau == 0.0 {
        f64::INFINITY
    } else {
        eps.powf(-0.8) / (M_FAR * tau.abs())
    };
    let mut pole = f64::INFINITY;
    for p in &traj.poles {
        pole = pole.min(eps.powf(-0.2) * (tau - p.tau_k).abs() / M_POLE);
    }
    let margin = far.min(pole);
    let in_range = tau >= traj.seed_tau && tau <= traj.end();
    Validity {
        ok: margin > 1.0 && in_range,
        margin,
    }
}

/// u = u* + ε^{2/5}v⁰(τ) + ε^{4/5}v¹(τ) inside the layer's validity region.
pub fn inner1_eval(t: f64, eps: f64, traj: &P1Trajectory) -> Result<SolutionSample> {
    let v = inner1_validity(t, eps, traj);
    if !v.ok {
        return Err(Error::OutOfValidity {
            constraint: "|tau| < eps^{-4/5}/M_far and eps^{-1/5}|tau - tau_k| > M_pole",
            margin: v.margin,
        });
    }
    let scale = InnerScale { eps };
    let tau = scale.tau_of_t(t);
    let (v0, _) = traj.eval_v0(tau).ok_or(Error::OutOfValidity {
        constraint: "tau inside a marched segment",
        margin: v.margin,
    })?;
    let (v1, _) = traj.eval_v1(tau).ok_or(Error::FrameIncomplete {
        needs: "first_correction before evaluation",
    })?;
    let e25 = eps.powf(0.4);
    let u = u_star() + e25 * v0 + e25 * e25 * v1;
    let residual = eps.powf(1.6) * (1.0 + tau * tau);
    Ok(SolutionSample::new(t, u, Regime::PainleveII, residual))
}
