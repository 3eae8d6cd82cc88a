//! Bracketed scalar root finding and maximization.

use crate::error::{Error, Result};

/// Brent's method on `[a, b]` where `f(a)` and `f(b)` have opposite signs
/// (or one of them is zero). Iterates until the bracket is at rounding level
/// or `|b - a| ≤ xtol`.
pub fn brent<F>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracketing(format!(
            "no sign change on [{a:.12e}, {b:.12e}]: f = {fa:.3e}, {fb:.3e}"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::Bracketing("Brent iteration limit reached".into()))
}

/// Locates the maximizer of a unimodal `f` on `[a, b]`: golden-section
/// search down to `width`, then a few safeguarded secant steps on a
/// central-difference derivative.
pub fn maximize<F>(mut f: F, a: f64, b: f64, width: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > width {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        }
    }
    let (mut best, mut fbest) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };

    let delta = (1e-3 * (hi - lo)).max(1e-9 * (1.0 + best.abs()));
    let deriv = |x: f64, f: &mut F| -> Result<f64> { Ok((f(x + delta)? - f(x - delta)?) / (2.0 * delta)) };
    let (mut xa, mut da) = (lo, deriv(lo, &mut f)?);
    let (mut xb, mut db) = (hi, deriv(hi, &mut f)?);
    for _ in 0..3 {
        if da == db {
            break;
        }
        let x = xb - db * (xb - xa) / (db - da);
        if !(x > lo && x < hi) {
            break;
        }
        let fx = f(x)?;
        if fx > fbest {
            best = x;
            fbest = fx;
        }
        xa = xb;
        da = db;
        xb = x;
        db = deriv(x, &mut f)?;
    }
    Ok((best, fbest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent(|x| Ok(x * x * x - 2.0), 0.0, 3.0, 0.0).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-15);
    }

    #[test]
    fn brent_rejects_missing_sign_change() {
        assert!(matches!(brent(|x| Ok(x * x + 1.0), -1.0, 1.0, 0.0), Err(Error::Bracketing(_))));
    }

    #[test]
    fn brent_handles_flat_double_root_side() {
        // tangent at x = 1 from the right bracket end
        let r = brent(|x: f64| Ok(if x < 1.0 { -(1.0 - x) } else { (x - 1.0).powi(2) }), 0.0, 1.0, 0.0).unwrap();
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn maximize_parabola() {
        let (x, fx) = maximize(|x| Ok(1.0 - (x - 0.3).powi(2)), 0.0, 1.0, 1e-6).unwrap();
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-13);
    }
}
