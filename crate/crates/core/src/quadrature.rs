//! Adaptive Simpson quadrature for smooth scalar integrands.

const MAX_DEPTH: u32 = 48;

/// Integral of `f` over `[a, b]` (either orientation) to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    refine(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = adaptive_simpson(&|x: f64| x * x * x - 2.0 * x, -1.0, 2.0, 1e-14);
        assert!((v - (4.0 - 4.0 - (0.25 - 1.0))).abs() < 1e-13);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let f = |x: f64| x.cos();
        let fwd = adaptive_simpson(&f, 0.0, 1.0, 1e-13);
        let back = adaptive_simpson(&f, 1.0, 0.0, 1e-13);
        assert!((fwd - 1f64.sin()).abs() < 1e-12);
        assert!((fwd + back).abs() < 1e-14);
    }
}
