//! Scalar root finding and the depressed cubic.

use crate::error::Error;
use crate::real::Real;
use crate::Result;

/// Brent's method on a sign-changing bracket [a, b].
pub fn brent(f: impl Fn(f64) -> f64, a: f64, b: f64, xtol: f64, what: &'static str) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::BracketFailure { what });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let q0 = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * q0 * (q0 - r) - (b - a) * (r - 1.0));
                q = (q0 - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += if xm > 0.0 { tol1 } else { -tol1 };
        }
        fb = f(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Err(Error::BracketFailure { what })
}

/// Newton iteration safeguarded by a bracket; `f_df` returns (f, f').
pub fn newton_safe(
    f_df: impl Fn(f64) -> (f64, f64),
    x0: f64,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    what: &'static str,
) -> Result<f64> {
    let mut x = x0.max(lo).min(hi);
    let (mut flo, _) = f_df(lo);
    for _ in 0..100 {
        let (fx, dfx) = f_df(x);
        if fx == 0.0 {
            return Ok(x);
        }
        // Maintain the bracket.
        if (fx > 0.0) == (flo > 0.0) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let mut xn = x - fx / dfx;
        if !(xn > lo && xn < hi) || dfx == 0.0 || !xn.is_finite() {
            xn = 0.5 * (lo + hi);
        }
        if (xn - x).abs() <= xtol * (1.0 + x.abs()) {
            return Ok(xn);
        }
        x = xn;
    }
    Err(Error::BracketFailure { what })
}

/// Real roots of the depressed cubic x³ + p x + q = 0, ascending, with one
/// Newton polish per root. Returns (count, roots); only roots[..count] valid.
pub fn cubic_depressed(p: f64, q: f64) -> (usize, [f64; 3]) {
    let polish = |x: f64| {
        let f = x * x * x + p * x + q;
        let df = 3.0 * x * x + p;
        if df != 0.0 {
            x - f / df
        } else {
            x
        }
    };
    let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
    // Snap a discriminant that vanishes to rounding onto the three-root
    // (double root) branch, so degenerate cubics keep their full root list.
    let snap = 4e-15 * ((q / 2.0) * (q / 2.0) + (p / 3.0).abs().powi(3));
    if disc > snap {
        // One real root (Cardano, cancellation-safe pairing).
        let s = disc.sqrt();
        let u = (-q / 2.0 + s).cbrt();
        let v = (-q / 2.0 - s).cbrt();
        let r = polish(u + v);
        (1, [r, 0.0, 0.0])
    } else if disc == 0.0 && q == 0.0 && p == 0.0 {
        (1, [0.0, 0.0, 0.0])
    } else {
        // Three real roots (two coincide when disc == 0): trigonometric form.
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).max(-1.0).min(1.0);
        let theta = arg.acos() / 3.0;
        let mut r = [
            m * theta.cos(),
            m * (theta - 2.0 * core::f64::consts::PI / 3.0).cos(),
            m * (theta + 2.0 * core::f64::consts::PI / 3.0).cos(),
        ];
        for x in &mut r {
            *x = polish(*x);
        }
        r.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        (3, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cos_zero() {
        let x = brent(|x: f64| x.cos(), 1.0, 2.0, 1e-14, "test").unwrap();
        assert!((x - core::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn brent_requires_bracket() {
        assert!(brent(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-14, "test").is_err());
    }

    #[test]
    fn newton_safe_converges() {
        let x = newton_safe(
            |x: f64| (x * x - 2.0, 2.0 * x),
            1.0,
            0.0,
            2.0,
            1e-15,
            "sqrt2",
        )
        .unwrap();
        assert!((x - core::f64::consts::SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn cubic_three_roots() {
        // (x-1)(x-2)(x+3) = x^3 - 7x + 6
        let (n, r) = cubic_depressed(-7.0, 6.0);
        assert_eq!(n, 3);
        assert!((r[0] + 3.0).abs() < 1e-14);
        assert!((r[1] - 1.0).abs() < 1e-14);
        assert!((r[2] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cubic_single_root() {
        // x^3 + x - 2 = (x-1)(x^2+x+2)
        let (n, r) = cubic_depressed(1.0, -2.0);
        assert_eq!(n, 1);
        assert!((r[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cubic_double_root() {
        // (x-1)^2 (x+2) = x^3 - 3x + 2
        let (n, r) = cubic_depressed(-3.0, 2.0);
        assert_eq!(n, 3);
        assert!((r[0] + 2.0).abs() < 1e-12);
        assert!((r[1] - 1.0).abs() < 1e-7);
        assert!((r[2] - 1.0).abs() < 1e-7);
    }
}
