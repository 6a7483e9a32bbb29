//! Explicit Dormand–Prince 5(4) with error control and dense output.
//!
//! The quintic interpolant is stored per accepted step, so a finished
//! [`OdeSolution`] can be evaluated anywhere in its span at interpolation
//! accuracy (order 4). Integration in either direction is supported.

use crate::error::Error;
use crate::real::Real;
use crate::Result;
use alloc::vec::Vec;

/// Right-hand side of an autonomous-in-form first order system y' = f(x, y).
pub trait Ode<const N: usize> {
    fn rhs(&self, x: f64, y: &[f64; N]) -> [f64; N];
}

impl<F, const N: usize> Ode<N> for F
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    #[inline]
    fn rhs(&self, x: f64, y: &[f64; N]) -> [f64; N] {
        self(x, y)
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step with its dense-output coefficients.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub x0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    /// Interpolated state at x (caller guarantees x within [x0, x0+h]).
    pub fn eval(&self, x: f64) -> [f64; N] {
        let th = (x - self.x0) / self.h;
        let th1 = 1.0 - th;
        let mut y = [0.0; N];
        for i in 0..N {
            let r = &self.rcont;
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

/// Error-controlled integration result with dense output.
#[derive(Debug, Clone)]
pub struct OdeSolution<const N: usize> {
    pub x0: f64,
    /// Final abscissa actually reached (== requested end unless stopped).
    pub x_end: f64,
    pub y_end: [f64; N],
    /// True when the caller's stop predicate ended the run early.
    pub stopped: bool,
    pub n_accepted: usize,
    pub n_rejected: usize,
    steps: Vec<DenseStep<N>>,
}

impl<const N: usize> OdeSolution<N> {
    pub fn steps(&self) -> &[DenseStep<N>] {
        &self.steps
    }

    /// Span covered, as (min, max).
    pub fn span(&self) -> (f64, f64) {
        if self.x0 <= self.x_end {
            (self.x0, self.x_end)
        } else {
            (self.x_end, self.x0)
        }
    }

    fn locate(&self, x: f64) -> Option<&DenseStep<N>> {
        let (lo, hi) = self.span();
        let slack = 1e-12 * (1.0 + hi.abs().max(lo.abs()));
        if x < lo - slack || x > hi + slack {
            return None;
        }
        // Steps are ordered in integration direction; binary search on x0.
        let fwd = self.x0 <= self.x_end;
        let mut a = 0usize;
        let mut b = self.steps.len();
        while b - a > 1 {
            let m = (a + b) / 2;
            let starts_before = if fwd {
                self.steps[m].x0 <= x
            } else {
                self.steps[m].x0 >= x
            };
            if starts_before {
                a = m;
            } else {
                b = m;
            }
        }
        Some(&self.steps[a])
    }

    /// Dense-output evaluation; None outside the integration span.
    pub fn eval(&self, x: f64) -> Option<[f64; N]> {
        self.locate(x).map(|s| s.eval(x))
    }
}

/// Dormand–Prince 5(4) driver configuration.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Magnitude of the first step; auto-selected when None.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rtol: 1e-10,
            atol: 1e-10,
            h_init: None,
            h_max: f64::INFINITY,
            h_min: 1e-14,
            max_steps: 20_000_000,
        }
    }
}

impl Dopri5 {
    pub fn tol(rtol: f64, atol: f64) -> Self {
        Dopri5 {
            rtol,
            atol,
            ..Dopri5::default()
        }
    }

    pub fn with_h_init(mut self, h: f64) -> Self {
        self.h_init = Some(h);
        self
    }

    pub fn integrate<const N: usize>(
        &self,
        sys: &impl Ode<N>,
        x0: f64,
        y0: [f64; N],
        x_end: f64,
    ) -> Result<OdeSolution<N>> {
        self.integrate_until(sys, x0, y0, x_end, |_, _| false)
    }

    /// Integrate until `x_end` or until `stop` returns true at an accepted
    /// step endpoint (the final partial step is kept in the dense output).
    pub fn integrate_until<const N: usize>(
        &self,
        sys: &impl Ode<N>,
        x0: f64,
        y0: [f64; N],
        x_end: f64,
        mut stop: impl FnMut(f64, &[f64; N]) -> bool,
    ) -> Result<OdeSolution<N>> {
        let dir = if x_end >= x0 { 1.0 } else { -1.0 };
        let mut x = x0;
        let mut y = y0;
        let mut k1 = sys.rhs(x, &y);
        let mut h = dir
            * self
                .h_init
                .unwrap_or_else(|| self.guess_h0(sys, x, &y, &k1, dir))
                .abs()
                .min(self.h_max)
                .min((x_end - x0).abs());

        let mut steps: Vec<DenseStep<N>> = Vec::new();
        let mut n_accepted = 0;
        let mut n_rejected = 0;
        let mut facmax = 5.0;

        if (x_end - x0).abs() == 0.0 {
            return Ok(OdeSolution {
                x0,
                x_end,
                y_end: y,
                stopped: false,
                n_accepted,
                n_rejected,
                steps,
            });
        }

        loop {
            if n_accepted + n_rejected > self.max_steps {
                return Err(Error::ToleranceFailure);
            }
            if h.abs() < self.h_min {
                return Err(Error::StepUnderflow { x });
            }
            // Trim the last step exactly onto the endpoint.
            let mut last = false;
            if (x + h - x_end) * dir >= 0.0 {
                h = x_end - x;
                last = true;
            }

            let mut k = [[0.0; N]; 7];
            k[0] = k1;
            let stage = |coef: &[f64], k: &[[f64; N]; 7], y: &[f64; N], h: f64| {
                let mut yn = *y;
                for (j, &a) in coef.iter().enumerate() {
                    if a != 0.0 {
                        for i in 0..N {
                            yn[i] += h * a * k[j][i];
                        }
                    }
                }
                yn
            };
            k[1] = sys.rhs(x + C[1] * h, &stage(&A2, &k, &y, h));
            k[2] = sys.rhs(x + C[2] * h, &stage(&A3, &k, &y, h));
            k[3] = sys.rhs(x + C[3] * h, &stage(&A4, &k, &y, h));
            k[4] = sys.rhs(x + C[4] * h, &stage(&A5, &k, &y, h));
            k[5] = sys.rhs(x + C[5] * h, &stage(&A6, &k, &y, h));
            let y1 = stage(&A7, &k, &y, h);
            k[6] = sys.rhs(x + h, &y1);

            // Embedded error estimate.
            let mut err = 0.0;
            for i in 0..N {
                let mut e = 0.0;
                for j in 0..7 {
                    e += E[j] * k[j][i];
                }
                e *= h;
                let sk = self.atol + self.rtol * y[i].abs().max(y1[i].abs());
                let q = e / sk;
                err += q * q;
            }
            err = (err / N as f64).sqrt();

            if !err.is_finite() {
                // Blow-up inside the step: retry smaller.
                n_rejected += 1;
                h *= 0.25;
                facmax = 1.0;
                continue;
            }

            if err <= 1.0 {
                // Accept; build dense coefficients.
                let mut rcont = [[0.0; N]; 5];
                for i in 0..N {
                    let ydiff = y1[i] - y[i];
                    let bspl = h * k[0][i] - ydiff;
                    rcont[0][i] = y[i];
                    rcont[1][i] = ydiff;
                    rcont[2][i] = bspl;
                    rcont[3][i] = ydiff - h * k[6][i] - bspl;
                    let mut d = 0.0;
                    for j in 0..7 {
                        d += D[j] * k[j][i];
                    }
                    rcont[4][i] = h * d;
                }
                steps.push(DenseStep { x0: x, h, rcont });
                n_accepted += 1;
                x += h;
                y = y1;
                k1 = k[6]; // FSAL
                let fac = 0.9 * (1.0 / err).powf(0.2);
                h *= fac.max(0.2).min(facmax);
                if h.abs() > self.h_max {
                    h = dir * self.h_max;
                }
                facmax = 5.0;
                if stop(x, &y) {
                    return Ok(OdeSolution {
                        x0,
                        x_end: x,
                        y_end: y,
                        stopped: true,
                        n_accepted,
                        n_rejected,
                        steps,
                    });
                }
                if last {
                    return Ok(OdeSolution {
                        x0,
                        x_end,
                        y_end: y,
                        stopped: false,
                        n_accepted,
                        n_rejected,
                        steps,
                    });
                }
            } else {
                n_rejected += 1;
                let fac = 0.9 * (1.0 / err).powf(0.2);
                h *= fac.max(0.2).min(1.0);
                facmax = 1.0;
            }
        }
    }

    /// Standard automatic initial step selection (Hairer–Nørsett–Wanner).
    fn guess_h0<const N: usize>(
        &self,
        sys: &impl Ode<N>,
        x: f64,
        y: &[f64; N],
        f0: &[f64; N],
        dir: f64,
    ) -> f64 {
        let norm = |v: &[f64; N], w: &[f64; N]| {
            let mut s = 0.0;
            for i in 0..N {
                let sk = self.atol + self.rtol * w[i].abs();
                let q = v[i] / sk;
                s += q * q;
            }
            (s / N as f64).sqrt()
        };
        let d0 = norm(y, y);
        let d1 = norm(f0, y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let mut y1 = *y;
        for i in 0..N {
            y1[i] += dir * h0 * f0[i];
        }
        let f1 = sys.rhs(x + dir * h0, &y1);
        let mut df = [0.0; N];
        for i in 0..N {
            df[i] = f1[i] - f0[i];
        }
        let d2 = norm(&df, y) / h0;
        let d12 = d1.max(d2);
        let h1 = if d12 <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d12).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }
}

/// Locate a zero of `g(x, y(x))` inside one dense step by bisection,
/// assuming a sign change between the step ends. Returns the refined x.
pub fn refine_event<const N: usize>(
    step: &DenseStep<N>,
    g: impl Fn(f64, &[f64; N]) -> f64,
    xtol: f64,
) -> f64 {
    let mut a = step.x0;
    let mut b = step.x0 + step.h;
    let mut ga = g(a, &step.eval(a));
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        let m = 0.5 * (a + b);
        let gm = g(m, &step.eval(m));
        if (ga <= 0.0) == (gm <= 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
