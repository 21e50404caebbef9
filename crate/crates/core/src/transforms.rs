//! Scalar special functions and closed-form Laplace-Stieltjes transforms.
//!
//! Everything here is pure and reentrant, and accepts complex rate arguments
//! with positive real part so that the same evaluators drive numerical
//! transform inversion.

use crate::error::{Error, Result};
use crate::model::{BirthDeathSpec, Boundary};
use crate::C64;

const KUMMER_TERM_CAP: usize = 10_000;
const KUMMER_MAX_RHO: f64 = 600.0;
/// Certification tolerance for truncated hitting-time recursions.
const TRUNCATION_SENSITIVITY_TOL: f64 = 1e-12;

/// The resolvent / killing rate `q`. Real positive, or complex with positive
/// real part for transform-inversion work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformArgument(C64);

impl TransformArgument {
    pub fn new(value: C64) -> Result<Self> {
        if !(value.re > 0.0) || !value.im.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "transform argument must have positive real part, got {value}"
            )));
        }
        Ok(Self(value))
    }

    pub fn real(q: f64) -> Result<Self> {
        Self::new(C64::new(q, 0.0))
    }

    pub fn value(&self) -> C64 {
        self.0
    }

    pub fn is_real(&self) -> bool {
        self.0.im == 0.0
    }
}

impl From<TransformArgument> for C64 {
    fn from(q: TransformArgument) -> C64 {
        q.0
    }
}

/// Value of a Laplace-Stieltjes transform `E[e^{-q tau}]`. For real `q > 0`
/// it is real and lies in `[0, 1]`; its modulus never exceeds 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LstValue(C64);

impl LstValue {
    pub(crate) fn new(value: C64) -> Self {
        debug_assert!(
            value.norm() <= 1.0 + 1e-9,
            "transform value {value} has modulus above one"
        );
        Self(value)
    }

    pub fn value(&self) -> C64 {
        self.0
    }

    pub fn re(&self) -> f64 {
        self.0.re
    }
}

/// Kummer's confluent hypergeometric function with unit first parameter:
/// `M(1, b, z) = sum_n z^n / (b)_n`, for `Re b > 0` and `z <= 0`.
///
/// The alternating series is hopeless in double precision once `|z|` is
/// moderately large (the largest term grows like `e^{|z|}`), so we evaluate
/// through the Kummer transformation `M(1, b, z) = e^z M(b-1, b, -z)`, whose
/// series has ratio coefficients `(b-1)/(b-1+n)` and, for `Re b >= 1`, only
/// nonnegative terms. That keeps full relative precision over the whole
/// supported range.
pub fn kummer_m1(b: C64, z: f64) -> Result<C64> {
    if !(b.re > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kummer parameter must have positive real part, got {b}"
        )));
    }
    if !(z <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kummer argument must be nonpositive, got {z}"
        )));
    }
    let rho = -z;
    if rho == 0.0 {
        return Ok(C64::new(1.0, 0.0));
    }
    if rho > KUMMER_MAX_RHO {
        return Err(Error::InvalidParameter(format!(
            "kummer argument {z} outside supported range (|z| <= {KUMMER_MAX_RHO})"
        )));
    }
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    let mut small_streak = 0;
    for n in 0..KUMMER_TERM_CAP {
        let nf = n as f64;
        term *= (b - 1.0 + nf) / (b + nf) * (rho / (nf + 1.0));
        sum += term;
        if term.norm() < 1e-16 * sum.norm() {
            small_streak += 1;
            if small_streak >= 3 {
                return Ok((-rho).exp() * sum);
            }
        } else {
            small_streak = 0;
        }
    }
    Err(Error::SeriesDivergence { terms: KUMMER_TERM_CAP })
}

/// Busy-period transform of a single-server queue with arrival rate `lambda`
/// and service rate `mu`: the root of
/// `lambda psi^2 - (lambda + mu + q) psi + mu = 0` with modulus at most one.
///
/// Composing powers gives multi-level downward passage transforms:
/// `E_k[e^{-q tau_s}] = psi(q)^{k-s}` for `k > s`.
pub fn mm1_busy_period_lst(lambda: f64, mu: f64, q: &TransformArgument) -> LstValue {
    assert!(lambda > 0.0 && mu > 0.0, "rates must be positive");
    let q = q.value();
    let b = lambda + mu + q;
    let disc = b * b - 4.0 * lambda * mu;
    let psi = (b - disc.sqrt()) / (2.0 * lambda);
    assert!(
        psi.norm() <= 1.0 + 1e-9,
        "busy-period root {psi} escaped the unit disc"
    );
    LstValue(psi)
}

/// First-passage transform `E_from[e^{-q tau_target}]` of a birth-death
/// chain: the transform of the first time the chain reaches `target` from
/// `from` (birth-death paths are skip-free, so reaching and crossing
/// coincide).
///
/// Both directions run the same one-step recursion on the tridiagonal
/// generator. Downward transforms on a truncated chain are certified by
/// recomputing with the opposite boundary convention at the top; if the two
/// disagree beyond tolerance the truncation is too small.
pub fn bd_hitting_lst(
    spec: &BirthDeathSpec,
    from: i64,
    target: i64,
    q: &TransformArgument,
) -> Result<LstValue> {
    let top = spec.upper.level();
    if !(spec.lower..=top).contains(&from) || !(spec.lower..=top).contains(&target) {
        return Err(Error::Precondition(format!(
            "states {from} -> {target} outside the chain range [{}, {top}]",
            spec.lower
        )));
    }
    if from == target {
        return Ok(LstValue(C64::new(1.0, 0.0)));
    }
    let qv = q.value();
    let value = if from > target {
        match spec.upper {
            Boundary::Finite(_) => down_product(spec, from, target, qv, top, C64::new(0.0, 0.0)),
            Boundary::Truncated(t) => {
                let lo_est = down_product(spec, from, target, qv, t, C64::new(0.0, 0.0));
                let hi_est = down_product(spec, from, target, qv, t, C64::new(1.0, 0.0));
                if (lo_est - hi_est).norm() > TRUNCATION_SENSITIVITY_TOL {
                    return Err(Error::Truncation(format!(
                        "hitting transform sensitive to the truncation at {t}: \
                         bounds differ by {:.3e}",
                        (lo_est - hi_est).norm()
                    )));
                }
                (lo_est + hi_est) / 2.0
            }
        }
    } else {
        // Upward passage only sees the chain at or below the target, so the
        // forward recursion from the genuine lower boundary is exact.
        let mut u_prev = C64::new(0.0, 0.0);
        let mut product = C64::new(1.0, 0.0);
        for n in spec.lower..target {
            let lam = spec.birth_rate(n);
            let mu = spec.death_rate(n);
            let denom = qv + lam + mu - mu * u_prev;
            let u = lam / denom;
            if n >= from {
                product *= u;
            }
            u_prev = u;
        }
        product
    };
    if q.is_real() && !(value.re > -1e-15 && value.re <= 1.0 + 1e-12) {
        return Err(Error::Inconsistency(format!(
            "hitting transform {value} outside [0, 1] for real q"
        )));
    }
    Ok(LstValue::new(value))
}

/// Product of one-step-down transforms from `from` to `target`, computed by
/// the backward recursion seeded with `d_top_plus_one` above `top`.
fn down_product(
    spec: &BirthDeathSpec,
    from: i64,
    target: i64,
    q: C64,
    top: i64,
    d_top_plus_one: C64,
) -> C64 {
    let mut d_next = d_top_plus_one;
    let mut product = C64::new(1.0, 0.0);
    for n in (target + 1..=top).rev() {
        let lam = spec.birth_rate(n);
        let mu = spec.death_rate(n);
        let denom = q + lam + mu - lam * d_next;
        let d = mu / denom;
        if n <= from {
            product *= d;
        }
        d_next = d;
    }
    product
}
