//! Small dense least squares: Levenberg–Marquardt for a handful of
//! nonlinear parameters, and linear least squares by normal equations.

use crate::error::Error;
use crate::real::Real;
use crate::Result;
use alloc::vec;
use alloc::vec::Vec;

/// Solve the n×n system in place by Gaussian elimination with partial
/// pivoting; `a` is row-major, `b` the right-hand side. Returns None when a
/// pivot collapses (singular to machine precision).
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f != 0.0 {
                for c in col..n {
                    a[r * n + c] -= f * a[col * n + c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for c in col + 1..n {
            s -= a[col * n + c] * b[c];
        }
        b[col] = s / a[col * n + col];
    }
    Some(())
}

/// Linear least squares min ‖A x − b‖₂ via normal equations (A is m×n row
/// major, m ≥ n, n small). Errors when the normal matrix is numerically
/// singular relative to its diagonal.
pub fn lstsq(a: &[f64], b: &[f64], m: usize, n: usize) -> Result<Vec<f64>> {
    debug_assert_eq!(a.len(), m * n);
    debug_assert_eq!(b.len(), m);
    // Column scaling improves the conditioning of AtA.
    let mut scale = vec![0.0; n];
    for j in 0..n {
        let mut s = 0.0;
        for i in 0..m {
            s += a[i * n + j] * a[i * n + j];
        }
        scale[j] = if s > 0.0 { 1.0 / s.sqrt() } else { 1.0 };
    }
    let mut ata = vec![0.0; n * n];
    let mut atb = vec![0.0; n];
    for j in 0..n {
        for k in j..n {
            let mut s = 0.0;
            for i in 0..m {
                s += a[i * n + j] * a[i * n + k];
            }
            s *= scale[j] * scale[k];
            ata[j * n + k] = s;
            ata[k * n + j] = s;
        }
        let mut s = 0.0;
        for i in 0..m {
            s += a[i * n + j] * b[i];
        }
        atb[j] = s * scale[j];
    }
    // Conditioning guard on the scaled normal matrix.
    for j in 0..n {
        if ata[j * n + j] < 1e-13 {
            return Err(Error::ProjectionIllConditioned);
        }
    }
    solve_dense(&mut ata, &mut atb, n).ok_or(Error::ProjectionIllConditioned)?;
    for j in 0..n {
        atb[j] *= scale[j];
    }
    Ok(atb)
}

/// Levenberg–Marquardt minimization of ‖r(x)‖² for a few parameters.
///
/// `residuals` fills the m-vector of residuals at the given parameters.
/// Jacobian by central differences. Returns (parameters, final rms).
pub fn levmar<const P: usize>(
    residuals: impl Fn(&[f64; P], &mut [f64]),
    m: usize,
    x0: [f64; P],
    xtol: f64,
    max_iter: usize,
) -> Result<([f64; P], f64)> {
    let mut x = x0;
    let mut r = vec![0.0; m];
    let mut r_try = vec![0.0; m];
    let mut jac = vec![0.0; m * P];
    residuals(&x, &mut r);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;

    for _ in 0..max_iter {
        // Central-difference Jacobian.
        for j in 0..P {
            let h = 1e-7 * (1.0 + x[j].abs());
            let mut xp = x;
            xp[j] += h;
            residuals(&xp, &mut r_try);
            let mut xm = x;
            xm[j] -= h;
            let mut rm = vec![0.0; m];
            residuals(&xm, &mut rm);
            for i in 0..m {
                jac[i * P + j] = (r_try[i] - rm[i]) / (2.0 * h);
            }
        }
        let mut jtj = [[0.0; P]; P];
        let mut jtr = [0.0; P];
        for i in 0..m {
            for j in 0..P {
                let jij = jac[i * P + j];
                jtr[j] += jij * r[i];
                for k in j..P {
                    jtj[j][k] += jij * jac[i * P + k];
                }
            }
        }
        for j in 0..P {
            for k in 0..j {
                jtj[j][k] = jtj[k][j];
            }
        }

        let mut improved = false;
        for _ in 0..12 {
            let mut a = [0.0; 64];
            let a = &mut a[..P * P];
            let mut g = [0.0; 8];
            let g = &mut g[..P];
            for j in 0..P {
                for k in 0..P {
                    a[j * P + k] = jtj[j][k];
                }
                a[j * P + j] += lambda * jtj[j][j].max(1e-30);
                g[j] = -jtr[j];
            }
            if solve_dense(a, g, P).is_none() {
                lambda *= 10.0;
                continue;
            }
            let mut xn = x;
            for j in 0..P {
                xn[j] += g[j];
            }
            residuals(&xn, &mut r_try);
            let cost_n: f64 = r_try.iter().map(|v| v * v).sum();
            if cost_n.is_finite() && cost_n < cost {
                let step: f64 = g
                    .iter()
                    .zip(x.iter())
                    .map(|(d, xi)| (d / (1.0 + xi.abs())).abs())
                    .fold(0.0, f64::max);
                x = xn;
                core::mem::swap(&mut r, &mut r_try);
                cost = cost_n;
                lambda = (lambda / 3.0).max(1e-14);
                improved = true;
                if step < xtol {
                    return Ok((x, (cost / m as f64).sqrt()));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // Stalled: either converged or stuck; report current point.
            return Ok((x, (cost / m as f64).sqrt()));
        }
    }
    Ok((x, (cost / m as f64).sqrt()))
}
