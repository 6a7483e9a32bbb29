//! Ground truth: direct error-controlled integration of ε²u″ + 2u³ + tu = 1
//! at finite ε, with event (peak/trough) extraction and an energy-drift
//! monitor.
//!
//! The integrator is the explicit Dormand–Prince 5(4) pair from [`crate::num::ode`]
//! with dense output; the problem is oscillatory with period ∼ ε but not
//! stiff in the dissipative sense, so an explicit pair is the right tool.
//! The drift monitor tracks H = (ε²/2)u′² + u⁴/2 + (t/2)u² − u, whose exact
//! evolution on solutions is dH/dt = u²/2; the residual between ΔH and
//! ∫u²/2 dt measures accumulated integration error independently of the
//! step-control heuristics.

use alloc::vec::Vec;

use crate::equilibria::critical_point;
use crate::num::ode::{refine_event, Dopri5, OdeSolution};
use crate::num::quad::gk15;
use crate::outer::outer_terms;
use crate::real::Real;
use crate::{Error, Result};

/// Default integration tolerance (ε ≥ 1e−3 territory).
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub eps: f64,
    pub t0: f64,
    pub t1: f64,
    pub tol: f64,
}

impl OracleConfig {
    pub fn new(eps: f64, t0: f64, t1: f64) -> Self {
        OracleConfig {
            eps,
            t0,
            t1,
            tol: DEFAULT_TOL,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// u′ crosses + → −.
    Peak,
    /// u′ crosses − → +.
    Trough,
}

/// A refined zero of u′.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub u: f64,
    pub kind: EventKind,
}

/// Completed integration with dense output and extracted events.
#[derive(Debug, Clone)]
pub struct OracleRun {
    pub eps: f64,
    pub tol: f64,
    pub events: Vec<Event>,
    sol: OdeSolution<2>,
}

/// Start state on the slow branch: u = u₀(t0) + ε²u¹(t0), u′ by centered
/// differences of the same truncation.
pub fn initial_condition(t0: f64, eps: f64) -> Result<(f64, f64)> {
    if t0 >= critical_point().t_star - 0.2 {
        return Err(Error::DegenerateBranch { t: t0 });
    }
    let trunc = |t: f64| outer_terms(t).map(|o| o.u0 + eps * eps * o.u1c);
    let u = trunc(t0)?;
    let h = 1e-5;
    let du = (trunc(t0 - 2.0 * h)? - 8.0 * trunc(t0 - h)? + 8.0 * trunc(t0 + h)?
        - trunc(t0 + 2.0 * h)?)
        / (12.0 * h);
    Ok((u, du))
}

/// Integrate the full equation from the slow-branch initial condition.
pub fn solve_p2(cfg: &OracleConfig) -> Result<OracleRun> {
    if cfg.eps <= 0.0 {
        return Err(Error::OutOfRange { value: cfg.eps });
    }
    let (u, du) = initial_condition(cfg.t0, cfg.eps)?;
    let eps2 = cfg.eps * cfg.eps;
    let sys = move |t: f64, y: &[f64; 2]| {
        [y[1], (1.0 - 2.0 * y[0] * y[0] * y[0] - t * y[0]) / eps2]
    };
    let solver = Dopri5::tol(cfg.tol, cfg.tol).with_h_init(0.05 * cfg.eps);
    let sol = solver.integrate(&sys, cfg.t0, [u, du], cfg.t1)?;
    let events = find_events(&sol);
    Ok(OracleRun {
        eps: cfg.eps,
        tol: cfg.tol,
        events,
        sol,
    })
}

fn find_events(sol: &OdeSolution<2>) -> Vec<Event> {
    let mut events = Vec::new();
    for step in sol.steps() {
        let a = step.eval(step.x0);
        let b = step.eval(step.x0 + step.h);
        if a[1] == 0.0 || (a[1] > 0.0) == (b[1] > 0.0) {
            continue;
        }
        let te = refine_event(step, |_, y| y[1], 1e-12);
        let ye = step.eval(te);
        let kind = if a[1] > 0.0 {
            EventKind::Peak
        } else {
            EventKind::Trough
        };
        events.push(Event {
            t: te,
            u: ye[0],
            kind,
        });
    }
    events
}

impl OracleRun {
    /// Dense (u, u′) anywhere in the covered span.
    pub fn eval(&self, t: f64) -> Option<(f64, f64)> {
        self.sol.eval(t).map(|y| (y[0], y[1]))
    }

    pub fn span(&self) -> (f64, f64) {
        self.sol.span()
    }

    /// (t, u, u′) at the accepted step endpoints, in integration order.
    pub fn samples(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.sol.steps().len() + 1);
        if let Some(first) = self.sol.steps().first() {
            let y = first.eval(first.x0);
            out.push((first.x0, y[0], y[1]));
        }
        for step in self.sol.steps() {
            let x = step.x0 + step.h;
            let y = step.eval(x);
            out.push((x, y[0], y[1]));
        }
        out
    }

    fn energy(&self, t: f64, y: &[f64; 2]) -> f64 {
        let (u, du) = (y[0], y[1]);
        0.5 * self.eps * self.eps * du * du + 0.5 * u.powi(4) + 0.5 * t * u * u - u
    }

    /// |ΔH − ∫ u²/2 dt| per unit t: accumulated integration error made
    /// visible through the exact drift identity dH/dt = u²/2.
    pub fn h_drift_error(&self) -> f64 {
        let steps = self.sol.steps();
        if steps.is_empty() {
            return 0.0;
        }
        let first = &steps[0];
        let t0 = first.x0;
        let t1 = self.sol.x_end;
        let h0 = self.energy(t0, &first.eval(t0));
        let h1 = self.energy(t1, &self.sol.y_end);
        let mut integral = 0.0;
        for step in steps {
            let (v, _) = gk15(
                &|t| {
                    let u = step.eval(t)[0];
                    0.5 * u * u
                },
                step.x0,
                step.x0 + step.h,
            );
            integral += v;
        }
        ((h1 - h0) - integral).abs() / (t1 - t0).abs()
    }
}

/// Per-window oscillation envelope: (window midpoint, u_min, u_max).
///
/// Windows entirely before the first event report the flat slow solution;
/// windows inside the oscillatory region must contain at least two events
/// (otherwise the window undersamples a period and the call fails).
pub fn extract_envelope(run: &OracleRun, window: f64) -> Result<Vec<(f64, f64, f64)>> {
    if !(window > 0.0) {
        return Err(Error::OutOfRange { value: window });
    }
    let (t0, t1) = run.span();
    let first_event = run.events.first().map(|e| e.t);
    let mut out = Vec::new();
    let mut a = t0;
    while a < t1 {
        let b = (a + window).min(t1);
        let evs: Vec<&Event> = run
            .events
            .iter()
            .filter(|e| e.t >= a && e.t < b)
            .collect();
        if evs.len() >= 2 {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for e in &evs {
                lo = lo.min(e.u);
                hi = hi.max(e.u);
            }
            out.push((0.5 * (a + b), lo, hi));
        } else {
            match first_event {
                // Slow region (possibly truncated by the oscillation onset).
                Some(tf) if a < tf => {
                    let mid = 0.5 * (a + b.min(tf));
                    let (u, _) = run.eval(mid).ok_or(Error::EmptyWindow)?;
                    out.push((0.5 * (a + b), u, u));
                }
                Some(_) => return Err(Error::EmptyWindow),
                None => {
                    let mid = 0.5 * (a + b);
                    let (u, _) = run.eval(mid).ok_or(Error::EmptyWindow)?;
                    out.push((mid, u, u));
                }
            }
        }
        a = b;
    }
    Ok(out)
}
