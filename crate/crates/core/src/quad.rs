//! Adaptive quadrature used by the verification oracles.
//!
//! Deliberately small: an adaptive Simpson rule with an absolute error
//! target. The integrands in this crate are smooth away from isolated
//! endpoints, which is exactly the regime where Simpson refinement works.

use crate::C64;

const MAX_DEPTH: u32 = 60;

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    simpson_step(&f, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, MAX_DEPTH)
}

/// Integrate a complex-valued `f` over `[a, b]` to absolute tolerance `tol`
/// (error measured in modulus).
pub fn adaptive_simpson_c<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, tol: f64) -> C64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    simpson_step_c(&f, a, b, fa, fm, fb, simpson_c(a, b, fa, fm, fb), tol, MAX_DEPTH)
}

/// Integrate `f` over `[0, inf)` given an upper cutoff beyond which the
/// integrand is below `tail_bound` in modulus and exponentially decaying.
/// The caller picks `cutoff` from a known tail estimate.
pub fn integrate_to_cutoff<F: Fn(f64) -> f64>(f: F, cutoff: f64, tol: f64) -> f64 {
    // Split at a few interior points so the initial Simpson estimates see
    // the shape of sharply peaked integrands.
    let splits = [0.0, cutoff * 0.05, cutoff * 0.2, cutoff * 0.5, cutoff];
    let mut total = 0.0;
    for w in splits.windows(2) {
        total += adaptive_simpson(&f, w[0], w[1], tol / 4.0);
    }
    total
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
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
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        return left + right + err / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn simpson_c(a: f64, b: f64, fa: C64, fm: C64, fb: C64) -> C64 {
    (fa + 4.0 * fm + fb) * ((b - a) / 6.0)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step_c<F: Fn(f64) -> C64>(
    f: &F,
    a: f64,
    b: f64,
    fa: C64,
    fm: C64,
    fb: C64,
    whole: C64,
    tol: f64,
    depth: u32,
) -> C64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_c(a, m, fa, flm, fm);
    let right = simpson_c(m, b, fm, frm, fb);
    let err = left + right - whole;
    if depth == 0 || err.norm() <= 15.0 * tol {
        return left + right + err / 15.0;
    }
    simpson_step_c(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step_c(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_tail() {
        let v = integrate_to_cutoff(|x| (-x).exp(), 40.0, 1e-13);
        assert!((v - 1.0).abs() < 1e-11);
    }

    #[test]
    fn oscillatory_complex() {
        // int_0^pi e^{ix} dx = 2i
        let v = adaptive_simpson_c(|x| C64::new(0.0, x).exp(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - C64::new(0.0, 2.0)).norm() < 1e-10);
    }
}
