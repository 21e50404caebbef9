//! Closed-form transient analysis of Markovian multi-server queues.
//!
//! The reference-point method: the pmf of the queue length at an exponential
//! time, started at the reference state `s` (the server count), is the
//! stationary weight times a hitting-time transform, normalized. Hitting
//! transforms below `s` reduce to infinite-server passage transforms built
//! from Kummer functions; above `s` they are powers of a single-server
//! busy-period root. Conditioning on the running extremum then transports
//! the law to any other initial state, which is what the four pmf cases and
//! the mean decompositions below implement.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::BirthDeathSpec;
use crate::transforms::{bd_hitting_lst, kummer_m1, mm1_busy_period_lst, LstValue, TransformArgument};
use crate::C64;

/// Outside this region the alternating double sum loses too much precision
/// and hitting transforms fall back to the tridiagonal recursion.
const CLOSED_FORM_RHO_MAX: f64 = 30.0;
const CLOSED_FORM_S_MAX: i64 = 40;

/// Parameters of an `M/M/s` (optionally `M/M/s/K`) queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsParams {
    pub lambda: f64,
    pub mu: f64,
    pub s: i64,
    pub capacity: Option<i64>,
}

impl MmsParams {
    pub fn new(lambda: f64, mu: f64, s: i64) -> Result<Self> {
        if !(lambda > 0.0) || !(mu > 0.0) || s < 1 {
            return Err(Error::InvalidParameter(
                "need lambda > 0, mu > 0, s >= 1".into(),
            ));
        }
        Ok(Self { lambda, mu, s, capacity: None })
    }

    /// Finite-capacity variant; requires `s < capacity`, the nontrivial case.
    pub fn with_capacity(lambda: f64, mu: f64, s: i64, capacity: i64) -> Result<Self> {
        let mut p = Self::new(lambda, mu, s)?;
        if capacity <= s {
            return Err(Error::Precondition(format!(
                "capacity {capacity} must exceed the server count {s}"
            )));
        }
        p.capacity = Some(capacity);
        Ok(p)
    }

    pub fn rho(&self) -> f64 {
        self.lambda / self.mu
    }
}

/// Compensated (Kahan) accumulator for complex sums with cancellation.
#[derive(Default, Clone, Copy)]
struct KahanC64 {
    sum: C64,
    carry: C64,
}

impl KahanC64 {
    fn add(&mut self, v: C64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

fn binomial(n: i64, k: i64) -> f64 {
    if k < 0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Point probability `P_k(Q(e_q) = s)` for an infinite-server queue with
/// arrival rate `lambda` and per-customer service rate `mu`, for an initial
/// level `k <= s`.
///
/// At a fixed time the law is binomial (survivors of the initial `k`)
/// convolved with Poisson (arrivals still present); integrating against the
/// exponential density turns each term into a Kummer function. The double
/// sum alternates, so it is accumulated in compensated arithmetic and
/// rejected if cancellation pushes the result outside `[0, 1]`.
pub fn mminfty_point_pmf(k: i64, s: i64, lambda: f64, mu: f64, q: &TransformArgument) -> Result<C64> {
    if !(0 <= k && k <= s) {
        return Err(Error::Precondition(format!(
            "need 0 <= k <= s, got k = {k}, s = {s}"
        )));
    }
    let rho = lambda / mu;
    if rho > CLOSED_FORM_RHO_MAX || s > CLOSED_FORM_S_MAX {
        return Err(Error::InvalidParameter(format!(
            "closed form unavailable for rho = {rho}, s = {s}; \
             use the recursion-based hitting transforms"
        )));
    }
    let qv = q.value();
    let mut acc = KahanC64::default();
    for j in 0..=k {
        // rho^{s-j} / (s-j)!
        let mut pw = 1.0f64;
        for i in 1..=(s - j) {
            pw *= rho / i as f64;
        }
        let outer = binomial(k, j) * pw;
        for m in 0..=(k + s - 2 * j) {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let weight = outer * binomial(k + s - 2 * j, m) * sign;
            let shift = (j + m) as f64;
            let kummer = kummer_m1(qv / mu + shift + 1.0, -rho)?;
            acc.add(weight * (qv / (qv + shift * mu)) * kummer);
        }
    }
    let value = acc.sum;
    if q.is_real() && !(value.re >= -1e-10 && value.re <= 1.0 + 1e-10) {
        return Err(Error::Inconsistency(format!(
            "cancellation detected: point probability {value} outside [0, 1]"
        )));
    }
    Ok(value)
}

/// Upward passage transform `E_k[e^{-q tau_s}]` of the infinite-server
/// queue, `k <= s`: the ratio of point probabilities at the target.
///
/// Outside the closed-form region the value comes from the tridiagonal
/// recursion on a truncated infinite-server chain instead.
pub fn mminfty_hitting_lst(
    k: i64,
    s: i64,
    lambda: f64,
    mu: f64,
    q: &TransformArgument,
) -> Result<LstValue> {
    if !(0 <= k && k <= s) {
        return Err(Error::Precondition(format!(
            "need 0 <= k <= s, got k = {k}, s = {s}"
        )));
    }
    if k == s {
        return Ok(LstValue::new(C64::new(1.0, 0.0)));
    }
    let rho = lambda / mu;
    if rho > CLOSED_FORM_RHO_MAX || s > CLOSED_FORM_S_MAX {
        let truncation = s + 60 + (3.0 * rho) as i64;
        let spec = BirthDeathSpec::mminfty(lambda, mu, truncation)?;
        return bd_hitting_lst(&spec, k, s, q);
    }
    let numerator = mminfty_point_pmf(k, s, lambda, mu, q)?;
    let denominator = mminfty_point_pmf(s, s, lambda, mu, q)?;
    if denominator.norm() < 1e-290 {
        return Err(Error::Inconsistency(
            "hitting-transform denominator underflow".into(),
        ));
    }
    Ok(LstValue::new(numerator / denominator))
}

/// Shared machinery for the four-case pmf and the means.
struct Engine {
    p: MmsParams,
    q: TransformArgument,
    psi: C64,
    /// Geometric ratio of the base pmf above the reference point.
    x: C64,
    up_cache: HashMap<(i64, i64), C64>,
    /// Finite-buffer downward transforms, keyed by (from, to); capacity only.
    down_cache: HashMap<(i64, i64), C64>,
}

impl Engine {
    fn new(p: MmsParams, q: TransformArgument) -> Self {
        let psi = mm1_busy_period_lst(p.lambda, p.s as f64 * p.mu, &q).value();
        let x = psi * (p.rho() / p.s as f64);
        Engine { p, q, psi, x, up_cache: HashMap::new(), down_cache: HashMap::new() }
    }

    /// `E_k[e^{-q tau_target}]` for `k <= target <= s` (infinite-server
    /// passage upward).
    fn e_up(&mut self, k: i64, target: i64) -> Result<C64> {
        if let Some(v) = self.up_cache.get(&(k, target)) {
            return Ok(*v);
        }
        let v = mminfty_hitting_lst(k, target, self.p.lambda, self.p.mu, &self.q)?.value();
        self.up_cache.insert((k, target), v);
        Ok(v)
    }

    /// `E_k[e^{-q tau_target}]` for `k >= target >= s`: busy-period powers
    /// for the unbounded queue, finite-buffer recursion otherwise.
    fn e_down(&mut self, k: i64, target: i64) -> Result<C64> {
        if k == target {
            return Ok(C64::new(1.0, 0.0));
        }
        match self.p.capacity {
            None => Ok(self.psi.powi((k - target) as i32)),
            Some(cap) => {
                if let Some(v) = self.down_cache.get(&(k, target)) {
                    return Ok(*v);
                }
                let chain =
                    BirthDeathSpec::mm1_finite(self.p.lambda, self.p.s as f64 * self.p.mu, cap - target)?;
                let v = bd_hitting_lst(&chain, k - target, 0, &self.q)?.value();
                self.down_cache.insert((k, target), v);
                Ok(v)
            }
        }
    }

    /// Unnormalized stationary weight of level `n`.
    fn weight(&self, n: i64) -> f64 {
        let rho = self.p.rho();
        let s = self.p.s;
        let mut w = 1.0f64;
        for i in 1..=n.min(s) {
            w *= rho / i as f64;
        }
        if n > s {
            w *= (rho / s as f64).powi((n - s) as i32);
        }
        w
    }

    /// Normalizer of the base pmf: sum of weight times hitting transform.
    fn base_norm(&mut self) -> Result<C64> {
        let s = self.p.s;
        let mut z = C64::new(0.0, 0.0);
        for n in 0..=s {
            z += self.weight(n) * self.e_up(n, s)?;
        }
        match self.p.capacity {
            None => {
                // Terms above s form an exact geometric series in x.
                let ws = self.weight(s);
                z += ws * self.x / (1.0 - self.x);
            }
            Some(cap) => {
                for n in s + 1..=cap {
                    z += self.weight(n) * self.e_down(n, s)?;
                }
            }
        }
        Ok(z)
    }

    /// `P_s(Q(e_q) = n)`: the reference-point pmf.
    fn base_pmf(&mut self, n: i64) -> Result<C64> {
        let s = self.p.s;
        if let Some(cap) = self.p.capacity {
            if n > cap {
                return Ok(C64::new(0.0, 0.0));
            }
        }
        let e = if n <= s {
            self.e_up(n, s)?
        } else {
            self.e_down(n, s)?
        };
        Ok(self.weight(n) * e / self.base_norm()?)
    }

    /// The loss-model law used when conditioning on the running supremum at
    /// `l < s`: `P(Q = n | sup = l)` with weights truncated at `l`.
    fn erlang_pmf(&mut self, l: i64, n: i64) -> Result<C64> {
        if n > l {
            return Ok(C64::new(0.0, 0.0));
        }
        let mut z = C64::new(0.0, 0.0);
        for j in 0..=l {
            z += self.weight(j) * self.e_up(j, l)?;
        }
        Ok(self.weight(n) * self.e_up(n, l)? / z)
    }

    /// The geometric law above `l` used when conditioning on the running
    /// infimum at `l > s` for the unbounded queue.
    fn geometric_above(&self, l: i64, n: i64) -> C64 {
        (1.0 - self.x) * self.x.powi((n - l) as i32)
    }

    /// Finite-capacity analogue of `geometric_above`: the law of the chain
    /// on `{l, ..., K}` started at its floor.
    fn floor_law_finite(&mut self, l: i64, n: i64) -> Result<C64> {
        let cap = self.p.capacity.expect("finite-capacity law needs a capacity");
        if l == cap {
            // Conditioning the full system on never leaving the ceiling.
            return Ok(C64::new(if n == cap { 1.0 } else { 0.0 }, 0.0));
        }
        let chain = BirthDeathSpec::mm1_finite(self.p.lambda, self.p.s as f64 * self.p.mu, cap - l)?;
        let ratio = self.p.lambda / (self.p.s as f64 * self.p.mu);
        let mut z = C64::new(0.0, 0.0);
        for j in l..=cap {
            let e = bd_hitting_lst(&chain, j - l, 0, &self.q)?.value();
            z += ratio.powi((j - l) as i32) * e;
        }
        let e_n = bd_hitting_lst(&chain, n - l, 0, &self.q)?.value();
        Ok(ratio.powi((n - l) as i32) * e_n / z)
    }

    fn pmf(&mut self, k: i64, n: i64) -> Result<C64> {
        let s = self.p.s;
        let base = self.base_pmf(n)?;
        let value = if k == s {
            base
        } else if k > s && n <= s {
            base * self.e_down(k, s)?
        } else if k > s {
            // Paths that never reach the reference point stay in single-
            // server territory; condition on the infimum level.
            let mut extra = C64::new(0.0, 0.0);
            for l in s + 1..=n.min(k) {
                let conditional = match self.p.capacity {
                    None => self.geometric_above(l, n),
                    Some(_) => self.floor_law_finite(l, n)?,
                };
                let weight = self.e_down(k, l)? - self.e_down(k, l - 1)?;
                extra += conditional * weight;
            }
            base * self.e_down(k, s)? + extra
        } else if n >= s {
            base * self.e_up(k, s)?
        } else {
            // k < s, n < s: condition on the running supremum, a loss model.
            let mut extra = C64::new(0.0, 0.0);
            for l in k.max(n)..=s - 1 {
                let upper = if l + 1 == s {
                    self.e_up(k, s)?
                } else {
                    self.e_up(k, l + 1)?
                };
                let weight = self.e_up(k, l)? - upper;
                extra += self.erlang_pmf(l, n)? * weight;
            }
            base * self.e_up(k, s)? + extra
        };
        if self.q.is_real() && !(value.re >= -1e-10 && value.re <= 1.0 + 1e-10) {
            return Err(Error::Inconsistency(format!(
                "pmf value {value} outside [0, 1] at (k, n) = ({k}, {n})"
            )));
        }
        Ok(value)
    }
}

/// Transient pmf `P_k(Q(e_q) = n)` of the unbounded multi-server queue.
/// For complex `q` the value is `q` times the Laplace transform of
/// `t -> P_k(Q(t) = n)`.
pub fn mms_pmf(params: &MmsParams, k: i64, n: i64, q: &TransformArgument) -> Result<C64> {
    if params.capacity.is_some() {
        return Err(Error::Precondition(
            "capacity set; use the finite-capacity pmf".into(),
        ));
    }
    if k < 0 || n < 0 {
        return Err(Error::Precondition("states must be nonnegative".into()));
    }
    Engine::new(*params, *q).pmf(k, n)
}

/// Transient pmf of the finite-capacity queue on `{0, ..., K}`.
pub fn mmsk_pmf(params: &MmsParams, k: i64, n: i64, q: &TransformArgument) -> Result<C64> {
    let cap = params.capacity.ok_or_else(|| {
        Error::Precondition("finite-capacity pmf needs a capacity".into())
    })?;
    if !(0..=cap).contains(&k) || !(0..=cap).contains(&n) {
        return Err(Error::Precondition(format!(
            "states must lie in [0, {cap}]"
        )));
    }
    Engine::new(*params, *q).pmf(k, n)
}

/// Stationary pmf of the finite-capacity queue (the `q -> 0` limit of the
/// transient pmf from any initial state).
pub fn mmsk_stationary_pmf(params: &MmsParams) -> Result<Vec<f64>> {
    let cap = params.capacity.ok_or_else(|| {
        Error::Precondition("stationary pmf needs a capacity".into())
    })?;
    let engine = Engine::new(*params, TransformArgument::real(1.0)?);
    let weights: Vec<f64> = (0..=cap).map(|n| engine.weight(n)).collect();
    let z: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / z).collect())
}

/// Transient mean of the single-server queue:
/// `E[Q(e_q) | Q(0) = n0] = lambda (1 - psi)/q + sum_k k psi^{n0-k}(1-psi)`.
///
/// The first term is the mean from an empty start (the residual busy-period
/// transform); the sum transports it to `n0` through the infimum law.
pub fn mm1_mean(n0: i64, lambda: f64, mu: f64, q: f64) -> Result<f64> {
    if !(lambda < mu) {
        return Err(Error::Precondition(
            "the mean formula assumes an ergodic queue (lambda < mu)".into(),
        ));
    }
    if n0 < 0 || !(q > 0.0) {
        return Err(Error::InvalidParameter("need n0 >= 0 and q > 0".into()));
    }
    let qa = TransformArgument::real(q)?;
    let psi = mm1_busy_period_lst(lambda, mu, &qa).re();
    let mut mean = lambda * (1.0 - psi) / q;
    for k in 1..=n0 {
        mean += k as f64 * psi.powi((n0 - k) as i32) * (1.0 - psi);
    }
    Ok(mean)
}

/// Transient mean of the multi-server queue with its internal
/// decomposition check.
#[derive(Debug, Clone, Copy)]
pub struct MeanReport {
    pub mean: f64,
    /// Gap between the direct reference-point sum and the loss-model /
    /// single-server decomposition of the mean from the reference state.
    pub decomposition_gap: f64,
}

/// Transient mean `E[Q(e_q) | Q(0) = i]` of the unbounded multi-server
/// queue.
///
/// The reference-state mean is computed twice: once by direct (truncated,
/// certified) summation of the weighted hitting transforms, and once through
/// the decomposition into a loss-model mean below the reference point and a
/// single-server mean above it. A gap beyond 1e-7 is reported as an internal
/// inconsistency. Other initial states are reached by extremum conditioning.
pub fn mms_mean(params: &MmsParams, i: i64, q: f64) -> Result<MeanReport> {
    if params.capacity.is_some() {
        return Err(Error::Precondition("mean implemented for the unbounded queue".into()));
    }
    if !(params.lambda < params.s as f64 * params.mu) {
        return Err(Error::Precondition(
            "the mean requires an ergodic queue (lambda < s mu)".into(),
        ));
    }
    if i < 0 || !(q > 0.0) {
        return Err(Error::InvalidParameter("need i >= 0 and q > 0".into()));
    }
    let qa = TransformArgument::real(q)?;
    let mut engine = Engine::new(*params, qa);
    let s = params.s;
    let psi = engine.psi.re;
    let x = engine.x.re;

    // Direct route: explicit sums, truncated when five consecutive summands
    // fall below 1e-16 of the running total.
    let mut numer = 0.0f64;
    let mut z = 0.0f64;
    for n in 0..=s {
        let e = engine.e_up(n, s)?.re;
        let w = engine.weight(n);
        numer += n as f64 * w * e;
        z += w * e;
    }
    let ws = engine.weight(s);
    let mut streak = 0;
    let mut n = s + 1;
    loop {
        let term_w = ws * x.powi((n - s) as i32);
        numer += n as f64 * term_w;
        z += term_w;
        if term_w * (n as f64) < 1e-16 * numer.abs() {
            streak += 1;
            if streak >= 5 {
                break;
            }
        } else {
            streak = 0;
        }
        n += 1;
        if n > s + 100_000 {
            return Err(Error::Truncation("mean tail did not converge".into()));
        }
    }
    let mean_s = numer / z;

    // Decomposition route, from closed forms only.
    let p_le: f64 = {
        let mut acc = 0.0;
        for m in 0..=s {
            acc += engine.weight(m) * engine.e_up(m, s)?.re;
        }
        acc / z
    };
    let p_ge = ws / z / (1.0 - x);
    let mut e_loss = 0.0f64;
    for m in 0..=s {
        e_loss += m as f64 * engine.erlang_pmf(s, m)?.re;
    }
    let e_single = params.lambda * (1.0 - psi) / q;
    let decomposition = p_le * e_loss + p_ge * e_single + s as f64 * p_ge * x;
    let gap = (mean_s - decomposition).abs();
    if gap > 1e-7 {
        return Err(Error::Inconsistency(format!(
            "mean decomposition gap {gap:.3e} exceeds 1e-7"
        )));
    }

    let mean = if i == s {
        mean_s
    } else if i < s {
        // Condition on the running supremum: below it the queue is a loss
        // model at its own capacity.
        let mut acc = mean_s * engine.e_up(i, s)?.re;
        for j in i..=s - 1 {
            let upper = if j + 1 == s {
                engine.e_up(i, s)?.re
            } else {
                engine.e_up(i, j + 1)?.re
            };
            let weight = engine.e_up(i, j)?.re - upper;
            let mut loss_mean = 0.0;
            for m in 0..=j {
                loss_mean += m as f64 * engine.erlang_pmf(j, m)?.re;
            }
            acc += loss_mean * weight;
        }
        acc
    } else {
        // Condition on the running infimum: above it the queue is single-
        // server with the pooled service rate.
        let mut acc = mean_s * psi.powi((i - s) as i32);
        for l in s + 1..=i {
            let weight = psi.powi((i - l) as i32) - psi.powi((i - l + 1) as i32);
            acc += (l as f64 + e_single) * weight;
        }
        acc
    };
    Ok(MeanReport { mean, decomposition_gap: gap })
}

/// Transient pmf of a general birth-death chain by the reference-point
/// formula with the reference at the initial state: stationary-style weight
/// times the hitting transform of the initial state, normalized.
pub fn bd_point_pmf(
    spec: &BirthDeathSpec,
    initial: i64,
    n: i64,
    q: &TransformArgument,
) -> Result<C64> {
    let top = spec.upper.level();
    if !(spec.lower..=top).contains(&initial) || !(spec.lower..=top).contains(&n) {
        return Err(Error::Precondition("state outside the chain range".into()));
    }
    // Detailed-balance weights relative to the initial state, accumulated
    // outward so neither direction overflows.
    let weight_to = |m: i64| -> f64 {
        let mut w = 1.0f64;
        if m >= initial {
            for j in initial..m {
                w *= spec.birth_rate(j) / spec.death_rate(j + 1);
            }
        } else {
            for j in (m..initial).rev() {
                w *= spec.death_rate(j + 1) / spec.birth_rate(j);
            }
        }
        w
    };
    let mut z = C64::new(0.0, 0.0);
    let mut last_small = 0;
    for j in spec.lower..=top {
        let w = weight_to(j);
        if w == 0.0 {
            continue;
        }
        let term = w * bd_hitting_lst(spec, j, initial, q)?.value();
        z += term;
        if j > initial {
            if term.norm() < 1e-14 * z.norm() {
                last_small += 1;
                if last_small >= 3 {
                    break;
                }
            } else {
                last_small = 0;
            }
        }
    }
    if matches!(spec.upper, crate::model::Boundary::Truncated(_)) && last_small < 3 {
        return Err(Error::Truncation(
            "reference-point normalizer did not converge within the truncation".into(),
        ));
    }
    let term = weight_to(n) * bd_hitting_lst(spec, n, initial, q)?.value();
    Ok(term / z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MarkovPrpSpec;
    use crate::oracles::resolvent_pmf;

    fn q(v: f64) -> TransformArgument {
        TransformArgument::real(v).unwrap()
    }

    #[test]
    fn point_pmf_reduces_to_kummer_at_the_origin() {
        // k = s = 0: only the Poisson component remains.
        let qa = q(1.3);
        let direct = mminfty_point_pmf(0, 0, 0.7, 1.1, &qa).unwrap();
        let kummer = kummer_m1(qa.value() / 1.1 + 1.0, -0.7 / 1.1).unwrap();
        assert!((direct - kummer).norm() < 1e-14);
    }

    #[test]
    fn point_pmf_known_value() {
        // rho = mu = q = 1, (k, s) = (1, 1): 2 - 4/e.
        let v = mminfty_point_pmf(1, 1, 1.0, 1.0, &q(1.0)).unwrap();
        assert!((v.re - (2.0 - 4.0 * (-1.0f64).exp())).abs() < 1e-12, "{v}");
    }

    #[test]
    fn point_pmf_huge_q_is_indicator() {
        let same = mminfty_point_pmf(3, 3, 1.0, 1.0, &q(1e9)).unwrap();
        let diff = mminfty_point_pmf(2, 3, 1.0, 1.0, &q(1e9)).unwrap();
        assert!((same.re - 1.0).abs() < 1e-8);
        assert!(diff.re.abs() < 1e-8);
    }

    #[test]
    fn hitting_known_value_and_unit_at_target() {
        let v = mminfty_hitting_lst(0, 1, 1.0, 1.0, &q(1.0)).unwrap();
        assert!((v.re() - 0.5).abs() < 1e-12);
        let one = mminfty_hitting_lst(4, 4, 1.0, 1.0, &q(1.0)).unwrap();
        assert_eq!(one.re(), 1.0);
    }

    #[test]
    fn hitting_monotone_in_start() {
        let mut last = 0.0;
        for k in 0..=5 {
            let v = mminfty_hitting_lst(k, 5, 2.0, 1.0, &q(1.0)).unwrap().re();
            assert!(v > last, "k={k}: {v} <= {last}");
            last = v;
        }
        assert_eq!(last, 1.0);
    }

    #[test]
    fn hitting_matches_recursion_oracle() {
        for (k, s) in [(0, 2), (1, 3), (2, 5)] {
            let closed = mminfty_hitting_lst(k, s, 1.0, 1.0, &q(1.0)).unwrap().re();
            let spec = BirthDeathSpec::mminfty(1.0, 1.0, 120).unwrap();
            let oracle = bd_hitting_lst(&spec, k, s, &q(1.0)).unwrap().re();
            assert!((closed - oracle).abs() < 1e-9, "({k},{s}): {closed} vs {oracle}");
        }
    }

    #[test]
    fn mms_pmf_rows_sum_to_one() {
        let params = MmsParams::new(2.0, 1.0, 3).unwrap();
        for k in [0i64, 2, 3, 7] {
            let total: f64 = (0..150)
                .map(|n| mms_pmf(&params, k, n, &q(1.0)).unwrap().re)
                .sum();
            assert!((total - 1.0).abs() < 1e-9, "k={k}: {total}");
        }
    }

    #[test]
    fn mms_pmf_matches_resolvent_for_single_server() {
        let params = MmsParams::new(1.0, 2.0, 1).unwrap();
        let spec = MarkovPrpSpec::from_birth_death(&BirthDeathSpec::mm1(1.0, 2.0, 80).unwrap());
        let gen = crate::model::build_level_generator(&spec, 0..=80).unwrap();
        for k in 0..=8 {
            let oracle = resolvent_pmf(&gen, k, C64::new(1.0, 0.0)).unwrap();
            for n in 0..=8 {
                let closed = mms_pmf(&params, k, n, &q(1.0)).unwrap().re;
                assert!(
                    (closed - oracle.prob_re(n)).abs() < 1e-8,
                    "(k,n)=({k},{n}): {closed} vs {}",
                    oracle.prob_re(n)
                );
            }
        }
    }

    #[test]
    fn mms_pmf_trivial_q_limit() {
        let params = MmsParams::new(1.0, 1.0, 2).unwrap();
        let v = mms_pmf(&params, 2, 2, &q(1e9)).unwrap().re;
        assert!((v - 1.0).abs() < 1e-8);
        let v = mms_pmf(&params, 4, 4, &q(1e9)).unwrap().re;
        assert!((v - 1.0).abs() < 1e-8);
        let v = mms_pmf(&params, 1, 1, &q(1e9)).unwrap().re;
        assert!((v - 1.0).abs() < 1e-8);
    }

    #[test]
    fn mms_pmf_matches_generic_reference_point_formula() {
        // s = 1 closed form against the birth-death reversibility pmf.
        let params = MmsParams::new(1.0, 2.0, 1).unwrap();
        let spec = BirthDeathSpec::mm1(1.0, 2.0, 250).unwrap();
        for n in 0..=6 {
            let closed = mms_pmf(&params, 1, n, &q(1.0)).unwrap().re;
            let generic = bd_point_pmf(&spec, 1, n, &q(1.0)).unwrap().re;
            assert!((closed - generic).abs() < 1e-9, "n={n}: {closed} vs {generic}");
        }
    }

    #[test]
    fn mmsk_rejects_capacity_at_server_count() {
        assert!(MmsParams::with_capacity(1.0, 1.0, 2, 2).is_err());
    }

    #[test]
    fn mmsk_pmf_exact_on_finite_chain() {
        let params = MmsParams::with_capacity(1.0, 1.0, 2, 5).unwrap();
        let spec = MarkovPrpSpec::from_birth_death(&BirthDeathSpec::mmsk(1.0, 1.0, 2, 5).unwrap());
        let gen = crate::model::build_level_generator(&spec, 0..=5).unwrap();
        for k in 0..=5 {
            let oracle = resolvent_pmf(&gen, k, C64::new(1.0, 0.0)).unwrap();
            for n in 0..=5 {
                let closed = mmsk_pmf(&params, k, n, &q(1.0)).unwrap().re;
                assert!(
                    (closed - oracle.prob_re(n)).abs() < 1e-9,
                    "(k,n)=({k},{n}): {closed} vs {}",
                    oracle.prob_re(n)
                );
            }
        }
    }

    #[test]
    fn mmsk_q_to_zero_is_stationary() {
        let params = MmsParams::with_capacity(1.0, 1.0, 2, 5).unwrap();
        let stationary = mmsk_stationary_pmf(&params).unwrap();
        for k in [0i64, 3, 5] {
            for n in 0..=5 {
                let v = mmsk_pmf(&params, k, n, &q(1e-8)).unwrap().re;
                assert!(
                    (v - stationary[n as usize]).abs() < 1e-7,
                    "(k,n)=({k},{n}): {v} vs {}",
                    stationary[n as usize]
                );
            }
        }
    }

    #[test]
    fn mm1_mean_closed_values() {
        let mean = mm1_mean(0, 1.0, 2.0, 1.0).unwrap();
        assert!((mean - (2.0f64.sqrt() - 1.0)).abs() < 1e-12);
        // q -> 0 recovers the stationary mean rho/(1-rho) = 1.
        let mean = mm1_mean(0, 1.0, 2.0, 1e-7).unwrap();
        assert!((mean - 1.0).abs() < 1e-6, "{mean}");
        // q -> infinity leaves no time to move.
        let mean = mm1_mean(4, 1.0, 2.0, 1e9).unwrap();
        assert!((mean - 4.0).abs() < 1e-7);
    }

    #[test]
    fn mms_mean_matches_resolvent() {
        let params = MmsParams::new(1.0, 1.0, 2).unwrap();
        let spec = MarkovPrpSpec::from_birth_death(&BirthDeathSpec::mms(1.0, 1.0, 2, 60).unwrap());
        let gen = crate::model::build_level_generator(&spec, 0..=60).unwrap();
        for i in [0i64, 2, 5] {
            let report = mms_mean(&params, i, 1.0).unwrap();
            let oracle = resolvent_pmf(&gen, i, C64::new(1.0, 0.0)).unwrap();
            let oracle_mean: f64 = oracle.iter().map(|(n, p)| n as f64 * p.re).sum();
            assert!(
                (report.mean - oracle_mean).abs() < 1e-7,
                "i={i}: {} vs {oracle_mean}",
                report.mean
            );
            assert!(report.decomposition_gap < 1e-7);
        }
    }

    #[test]
    fn mean_trivial_q_limit() {
        let params = MmsParams::new(1.0, 1.0, 2).unwrap();
        let report = mms_mean(&params, 2, 1e9).unwrap();
        assert!((report.mean - 2.0).abs() < 1e-7);
    }
}
