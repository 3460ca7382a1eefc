//! Central finite differences.
//!
//! Every numerical derivative in the crate funnels through this module so the
//! step-size rule lives in exactly one place: a coordinate at value `x` is
//! perturbed by `sqrt(machine epsilon) * (1 + |x|)`, which balances truncation
//! against rounding for smooth functions and keeps the step proportionate for
//! large arguments. Analytic derivative providers, where systems attach them,
//! bypass this module entirely; the test suite compares the two paths.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Perturbation applied to a coordinate with value `x` for first
/// derivatives.
pub fn step(x: f64) -> f64 {
    f64::EPSILON.sqrt() * (1.0 + x.abs())
}

/// Perturbation for direct second differences. Fourth-root scaling balances
/// the `1/s^2` rounding amplification of a second difference against its
/// `s^2` truncation; reusing the first-derivative step here would lose half
/// the significant digits.
pub fn step2(x: f64) -> f64 {
    // f64::EPSILON^(1/4)
    1.22e-4 * (1.0 + x.abs())
}

/// Gradient of a scalar function by central differences.
///
/// The divisor is the realized span `(x + h) - (x - h)`, not `2h`: the
/// nominal step is generally not representable at `x`, and dividing by the
/// span the function actually saw removes that quantization error (the span
/// of two nearly equal floats is computed exactly).
pub fn grad(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut work = x.to_vec();
    let mut out = vec![0.0; x.len()];
    for i in 0..x.len() {
        let h = step(x[i]);
        let xp = x[i] + h;
        let xm = x[i] - h;
        work[i] = xp;
        let hi = f(&work);
        work[i] = xm;
        let lo = f(&work);
        work[i] = x[i];
        out[i] = (hi - lo) / (xp - xm);
    }
    out
}

/// Gradient with a finiteness check, for call sites whose contract promises a
/// numeric-domain error instead of silent NaN propagation.
pub fn grad_checked(f: impl Fn(&[f64]) -> f64, x: &[f64], context: &str) -> Result<Vec<f64>> {
    let g = grad(f, x);
    if g.iter().all(|v| v.is_finite()) {
        Ok(g)
    } else {
        Err(Error::non_finite(context))
    }
}

/// Partial gradient of a two-slot scalar function in its first slot.
pub fn grad1(f: impl Fn(&[f64], &[f64]) -> f64, a: &[f64], b: &[f64]) -> Vec<f64> {
    grad(|x| f(x, b), a)
}

/// Partial gradient of a two-slot scalar function in its second slot.
pub fn grad2(f: impl Fn(&[f64], &[f64]) -> f64, a: &[f64], b: &[f64]) -> Vec<f64> {
    grad(|x| f(a, x), b)
}

/// Jacobian of a vector function by central differences. Row `i`, column `j`
/// holds the derivative of output `i` with respect to input `j`.
pub fn jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], rows: usize) -> DMatrix<f64> {
    jacobian_scaled(f, x, rows, 1.0)
}

/// [`jacobian`] with the per-coordinate step multiplied by `scale`. Newton
/// solvers expose the multiplier through their configuration.
pub fn jacobian_scaled(
    f: impl Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
    rows: usize,
    scale: f64,
) -> DMatrix<f64> {
    let mut work = x.to_vec();
    let mut out = DMatrix::zeros(rows, x.len());
    for j in 0..x.len() {
        let h = step(x[j]) * scale;
        let xp = x[j] + h;
        let xm = x[j] - h;
        work[j] = xp;
        let hi = f(&work);
        work[j] = xm;
        let lo = f(&work);
        work[j] = x[j];
        let span = xp - xm;
        for i in 0..rows {
            out[(i, j)] = (hi[i] - lo[i]) / span;
        }
    }
    out
}

/// Jacobian of a two-slot vector function in its first slot.
pub fn jac1(
    f: impl Fn(&[f64], &[f64]) -> Vec<f64>,
    a: &[f64],
    b: &[f64],
    rows: usize,
) -> DMatrix<f64> {
    jacobian(|x| f(x, b), a, rows)
}

/// Jacobian of a two-slot vector function in its second slot.
pub fn jac2(
    f: impl Fn(&[f64], &[f64]) -> Vec<f64>,
    a: &[f64],
    b: &[f64],
    rows: usize,
) -> DMatrix<f64> {
    jacobian(|x| f(a, x), b, rows)
}

/// Hessian of a two-slot scalar function in its second slot, by direct
/// second differences of the function values. This is far more accurate
/// than differentiating a finite-difference gradient a second time, which
/// stacks two rounding amplifications and loses all but a couple of digits.
pub fn hessian2(f: impl Fn(&[f64], &[f64]) -> f64, a: &[f64], b: &[f64]) -> DMatrix<f64> {
    let n = b.len();
    let mut out = DMatrix::zeros(n, n);
    let f0 = f(a, b);
    for i in 0..n {
        let s = step2(b[i]);
        let (bp, bm) = (b[i] + s, b[i] - s);
        let mut x = b.to_vec();
        x[i] = bp;
        let fp = f(a, &x);
        x[i] = bm;
        let fm = f(a, &x);
        // Offsets as actually realized in floating point.
        let (hp, hm) = (bp - b[i], b[i] - bm);
        out[(i, i)] = 2.0 * (hm * (fp - f0) + hp * (fm - f0)) / (hp * hm * (hp + hm));
        for j in (i + 1)..n {
            let t = step2(b[j]);
            let (cp, cm) = (b[j] + t, b[j] - t);
            let mut y = b.to_vec();
            let mut corner = |bi: f64, bj: f64| {
                y[i] = bi;
                y[j] = bj;
                f(a, &y)
            };
            let quad = corner(bp, cp) - corner(bp, cm) - corner(bm, cp) + corner(bm, cm);
            let mixed = quad / ((bp - bm) * (cp - cm));
            out[(i, j)] = mixed;
            out[(j, i)] = mixed;
        }
    }
    out
}

/// Cross block of second partials of a two-slot scalar function:
/// `out[(i, j)]` differentiates once in component `i` of the second slot
/// and once in component `j` of the first slot. Uses direct four-point
/// differences of the function values for the same accuracy reason as
/// [`hessian2`].
pub fn cross21(f: impl Fn(&[f64], &[f64]) -> f64, a: &[f64], b: &[f64]) -> DMatrix<f64> {
    let rows = b.len();
    let cols = a.len();
    let mut out = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        let s = step2(b[i]);
        let (bp, bm) = (b[i] + s, b[i] - s);
        for j in 0..cols {
            let t = step2(a[j]);
            let (ap, am) = (a[j] + t, a[j] - t);
            let mut u = a.to_vec();
            let mut w = b.to_vec();
            let mut corner = |aj: f64, bi: f64| {
                u[j] = aj;
                w[i] = bi;
                f(&u, &w)
            };
            let quad = corner(ap, bp) - corner(ap, bm) - corner(am, bp) + corner(am, bm);
            out[(i, j)] = quad / ((ap - am) * (bp - bm));
        }
    }
    out
}
