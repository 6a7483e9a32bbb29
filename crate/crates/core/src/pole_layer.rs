//! Second inner layer: the soliton-like core around each pole of the first
//! layer's leading profile.
//!
//! On the scale θ = (τ − τₖ)ε^{−1/5} the pole is resolved into the smooth
//! even bump
//!
//! ```text
//!   w⁰(θ) = −4u*/(1 + 4u*²θ²),
//! ```
//!
//! which solves the autonomous core equation w″ + 6u*w² + 2w³ = 0 and decays
//! like −1/(u*θ²), reproducing the double pole it replaces.  Its peak height
//! u* + w⁰(0) = −3u* is the top branch of the post-fold oscillation.
//!
//! Corrections w¹..w⁴ solve linear problems M[y] = g against the linearized
//! operator M[y] = y″ + (12u*w⁰ + 6(w⁰)²)y, built by variation of constants
//! from the closed-form homogeneous pair
//!
//! ```text
//!   w₁ = 8θ/(1 + 4u*²θ²)²,    w₂ = w₁·∫ dθ/w₁²   (W(w₁, w₂) = 1),
//! ```
//!
//! with the growing admixture fixed by the far-field matching (θ⁴ growth is
//! removed where the forcing allows a bounded-growth solution; the resonant
//! θ⁴ direction itself carries the first layer's free constant cₖ).  The
//! frame's θ-shift is assembled from the connection constants extracted by
//! the first layer at the same pole.

use crate::num::quad::{adaptive, gk15};
use crate::p1::{InnerScale, PoleData};
use crate::real::Real;
use crate::sample::{Regime, SolutionSample, Validity};
use crate::{Error, Result};

/// Validity constant: the layer is trusted while |θ|·|τₖ|^{1/5} < M₂·ε^{−1/5}.
const M2: f64 = 5.0;
/// Relative quadrature tolerance for the variation-of-constants integrals.
const QTOL: f64 = 1e-12;

fn u_star() -> f64 {
    crate::equilibria::critical_point().u_star
}

/// Evaluation frame for one pole, frozen from the first layer's data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleLayerFrame {
    pub k: usize,
    pub tau_k: f64,
    /// First θ-shift, u*·a1ₖ⁻/2.
    pub theta_shift1: f64,
    /// Second θ-shift; needs constants the first correction does not
    /// produce, so it is optional and treated as zero when absent.
    pub theta_shift2: Option<f64>,
    /// Free σ⁴ constant of the first layer at this pole; needed for w³.
    pub c_k: Option<f64>,
    pub b1_minus: f64,
}

impl PoleLayerFrame {
    /// Build the frame from a marched pole record.  The connection
    /// constants must have been extracted (`first_correction`).
    pub fn from_pole(p: &PoleData) -> Result<Self> {
        let conn = p.conn.ok_or(Error::FrameIncomplete {
            needs: "connection constants (run the first correction)",
        })?;
        Ok(PoleLayerFrame {
            k: p.k,
            tau_k: p.tau_k,
            theta_shift1: 0.5 * u_star() * conn.a1_minus,
            theta_shift2: None,
            c_k: Some(p.c_k),
            b1_minus: conn.b1_minus,
        })
    }
}

/// Leading core profile −4u*/(1 + 4u*²θ²).
pub fn w0_eval(theta: f64) -> f64 {
    let us = u_star();
    -4.0 * us / (1.0 + 4.0 * us * us * theta * theta)
}

/// Odd homogeneous solution of M, ∝ dw⁰/dθ; decays like 1/(2u*⁴θ³).
fn w1h(theta: f64) -> f64 {
    let a = 4.0 * u_star() * u_star();
    8.0 * theta / (1.0 + a * theta * theta).powi(2)
}

fn w1h_prime(theta: f64) -> f64 {
    let a = 4.0 * u_star() * u_star();
    let d = 1.0 + a * theta * theta;
    8.0 * (1.0 - 3.0 * a * theta * theta) / d.powi(3)
}

/// Even homogeneous solution, Wronskian-normalized against w₁ (W = 1);
/// grows like (2u*⁴/7)θ⁴ = θ⁴/(56u*²).
fn w2h(theta: f64) -> f64 {
    let a = 4.0 * u_star() * u_star();
    let t2 = theta * theta;
    let p = -1.0
        + 4.0 * a * t2
        + 2.0 * a * a * t2 * t2
        + 0.8 * a.powi(3) * t2.powi(3)
        + a.powi(4) * t2.powi(4) / 7.0;
    p / (8.0 * (1.0 + a * t2).powi(2))
}

fn w2h_prime(theta: f64) -> f64 {
    let a = 4.0 * u_star() * u_star();
    let t2 = theta * theta;
    let d = 1.0 + a * t2;
    let p = -1.0
        + 4.0 * a * t2
        + 2.0 * a * a * t2 * t2
        + 0.8 * a.powi(3) * t2.powi(3)
        + a.powi(4) * t2.powi(4) / 7.0;
    let dp = theta
        * (8.0 * a + 8.0 * a * a * t2 + 4.8 * a.powi(3) * t2 * t2
            + 8.0 * a.powi(4) * t2.powi(3) / 7.0);
    (dp * d - 4.0 * a * theta * p) / (8.0 * d.powi(3))
}

/// ∫₀^θ f with the adaptive rule, tolerance scaled to a one-panel estimate.
fn integral(f: &impl Fn(f64) -> f64, theta: f64) -> Result<f64> {
    if theta == 0.0 {
        return Ok(0.0);
    }
    let (rough, _) = gk15(f, 0.0, theta);
    adaptive(f, 0.0, theta, QTOL * (1.0 + rough.abs()))
}

/// Variation of constants for M[y] = g:  y = w₂(I₁ − a∞) − w₁I₂ with
/// I₁ = ∫₀^θ w₁g, I₂ = ∫₀^θ w₂g.  `a_inf` subtracts the w₂-admixture the
/// 0-based integral would otherwise leave in the far field (by parity the
/// same constant works on both sides).  Returns (y, y′).
fn voc(g: &impl Fn(f64) -> f64, theta: f64, a_inf: f64) -> Result<(f64, f64)> {
    let i1 = integral(&|s: f64| w1h(s) * g(s), theta)?;
    let i2 = integral(&|s: f64| w2h(s) * g(s), theta)?;
    let y = w2h(theta) * (i1 - a_inf) - w1h(theta) * i2;
    let dy = w2h_prime(theta) * (i1 - a_inf) - w1h_prime(theta) * i2;
    Ok((y, dy))
}

fn correction_w_deriv(n: u8, theta: f64, frame: &PoleLayerFrame) -> Result<(f64, f64)> {
    let us = u_star();
    let tk = frame.tau_k;
    match n {
        // Forcing −τₖ(u* + w⁰), even: ∫₀^∞ w₁·(u*+w⁰) = −1/u* in closed
        // form, so the growth subtraction is a∞ = τₖ/u*.  Far field
        // (τₖu*/10)θ² − τₖ/(120u*).
        1 => voc(&|s: f64| -tk * (us + w0_eval(s)), theta, tk / us),
        // Forcing −θ(u*+w⁰), odd: the growth constant vanishes by parity.
        // Far field (u*/6)θ³ + θ/(24u*).
        2 => voc(&|s: f64| -s * (us + w0_eval(s)), theta, 0.0),
        // Resonant order: no forcing of its own, just the free constant of
        // the first layer riding the growing homogeneous direction.
        3 => {
            let ck = frame.c_k.ok_or(Error::FrameIncomplete { needs: "c_k" })?;
            let lam = 56.0 * us * us * ck;
            Ok((lam * w2h(theta), lam * w2h_prime(theta)))
        }
        // Forcing −6(u*+w⁰)(w¹)² − τₖw¹, even; the θ² growth of I₁ here is
        // genuine (θ⁶ far field, coefficient −u*³τₖ²/300).
        4 => {
            let g = |s: f64| {
                let (w1c, _) = correction_w_deriv(1, s, frame).unwrap_or((0.0, 0.0));
                -6.0 * (us + w0_eval(s)) * w1c * w1c - tk * w1c
            };
            voc(&g, theta, 0.0)
        }
        _ => Err(Error::IndexOutOfRange {
            index: n as usize,
            count: 4,
        }),
    }
}

/// n-th correction of the layer expansion at θ (orders ε^{4/5}, ε, ε^{6/5},
/// ε^{8/5} for n = 1..4).
pub fn correction_w(n: u8, theta: f64, frame: &PoleLayerFrame) -> Result<f64> {
    correction_w_deriv(n, theta, frame).map(|(y, _)| y)
}

/// Validity of the layer at (t, ε): |θ|·|τₖ|^{1/5} < M₂·ε^{−1/5}, margin
/// normalized so valid ⇔ margin > 1.
pub fn inner2_validity(t: f64, eps: f64, frame: &PoleLayerFrame) -> Validity {
    if !(eps > 0.0) {
        return Validity {
            ok: false,
            margin: 0.0,
        };
    }
    let scale = InnerScale { eps };
    let theta = (scale.tau_of_t(t) - frame.tau_k) * eps.powf(-0.2);
    let load = theta.abs() * frame.tau_k.abs().powf(0.2);
    let margin = if load == 0.0 {
        f64::INFINITY
    } else {
        M2 * eps.powf(-0.2) / load
    };
    Validity {
        ok: margin > 1.0,
        margin,
    }
}

/// u = u* + w⁰(θₖ) + ε^{4/5}w¹(θₖ) with the shifted phase
/// θₖ = (τ − τₖ)ε^{−1/5} + ε^{1/5}·shift₁ (+ ε^{2/5}·shift₂ when present).
pub fn inner2_eval(t: f64, eps: f64, frame: &PoleLayerFrame) -> Result<SolutionSample> {
    let v = inner2_validity(t, eps, frame);
    if !v.ok {
        return Err(Error::OutOfValidity {
            constraint: "theta range of the pole layer",
            margin: v.margin,
        });
    }
    let scale = InnerScale { eps };
    let mut theta = (scale.tau_of_t(t) - frame.tau_k) * eps.powf(-0.2)
        + eps.powf(0.2) * frame.theta_shift1;
    if let Some(s2) = frame.theta_shift2 {
        theta += eps.powf(0.4) * s2;
    }
    let (w1c, _) = correction_w_deriv(1, theta, frame)?;
    let u = u_star() + w0_eval(theta) + eps.powf(0.8) * w1c;
    let residual = eps.powf(1.8) * (1.0 + frame.tau_k.abs() * theta.abs().powi(5));
    Ok(SolutionSample::new(t, u, Regime::PoleIII, residual))
}
