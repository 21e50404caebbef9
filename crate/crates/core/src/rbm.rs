//! Closed-form transient law of regulated Brownian motion with drift -1 and
//! unit variance at an independent exponential time.
//!
//! With `S = sqrt(1 + 2q)`, the hitting exponent is `alpha = S - 1` and the
//! stationary exponent `beta = S + 1` (`alpha beta = 2q`). The density of
//! `R(e_q)` from `x0` has one branch on each side of the starting point; the
//! branch below `x0` printed in the source derivation drops a `1/(2S)`
//! factor on its growing-exponential term, so the forms here are re-derived
//! by differentiating the survival function, and the module's tests pin them
//! down by normalization, branch continuity, the stationary limit, and
//! Monte Carlo.
//!
//! Other drifts and variances are not exposed: rescale time by `m^2/s^2` and
//! space by `m/s^2` (drift `-m`, variance `s^2`) to reduce to this law.

use crate::error::{Error, Result};
use crate::C64;

/// Query for the transient law: initial level and killing rate, with the
/// derived exponents.
#[derive(Debug, Clone, Copy)]
pub struct RbmQuery {
    pub x0: f64,
    pub q: f64,
    /// `-1 + sqrt(1 + 2q)`: decay rate of the hitting transform.
    pub alpha: f64,
    /// `1 + sqrt(1 + 2q)`: decay rate of the transient density at infinity.
    pub beta: f64,
    sqrt1p2q: f64,
}

impl RbmQuery {
    pub fn new(x0: f64, q: f64) -> Result<Self> {
        if !(x0 >= 0.0) || !(q > 0.0) {
            return Err(Error::InvalidParameter(
                "need x0 >= 0 and q > 0".into(),
            ));
        }
        let s = (1.0 + 2.0 * q).sqrt();
        // alpha written as 2q/(1+S) to avoid cancellation for small q.
        Ok(RbmQuery { x0, q, alpha: 2.0 * q / (1.0 + s), beta: 1.0 + s, sqrt1p2q: s })
    }
}

/// Transform of the first passage to zero: `E_x[e^{-q tau_0}] = e^{-alpha x}`.
pub fn rbm_hitting_lst(x: f64, q: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter("level must be nonnegative".into()));
    }
    let query = RbmQuery::new(x, q)?;
    Ok((-query.alpha * x).exp())
}

/// A law with an atom at zero plus a density on the positive half-line.
pub struct RbmTransientLaw {
    pub atom_at_zero: f64,
    density: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Upper end of the density support, infinite for the value law.
    pub support_end: f64,
}

impl RbmTransientLaw {
    pub fn density_at(&self, z: f64) -> f64 {
        (self.density)(z)
    }
}

/// Law of the running infimum of the reflected path over `[0, e_q]`: an atom
/// at zero of mass `e^{-alpha x0}` (the paths that reach the boundary) and
/// the density `alpha e^{-alpha (x0 - z)}` on `(0, x0)`.
pub fn rbm_infimum_law(query: &RbmQuery) -> Result<RbmTransientLaw> {
    if !(query.x0 > 0.0) {
        return Err(Error::Precondition(
            "the infimum law needs a positive start".into(),
        ));
    }
    let (alpha, x0) = (query.alpha, query.x0);
    Ok(RbmTransientLaw {
        atom_at_zero: (-alpha * x0).exp(),
        density: Box::new(move |z| {
            if z > 0.0 && z < x0 {
                alpha * (-alpha * (x0 - z)).exp()
            } else {
                0.0
            }
        }),
        support_end: x0,
    })
}

/// The transient law of `R(e_q)` itself: no atom, two-branch density.
pub fn rbm_transient_law(query: &RbmQuery) -> RbmTransientLaw {
    let q = *query;
    RbmTransientLaw {
        atom_at_zero: 0.0,
        density: Box::new(move |x| rbm_density(x, &q).unwrap_or(0.0)),
        support_end: f64::INFINITY,
    }
}

/// Density of `R(e_q)` at `x`, started from `x0`.
///
/// At `x = x0` the two branches are verified to agree (they do analytically;
/// a mismatch beyond 1e-9 signals a transcription error) and their average
/// is returned.
pub fn rbm_density(x: f64, query: &RbmQuery) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter("evaluation point must be nonnegative".into()));
    }
    if x > query.x0 {
        Ok(density_above(x, query))
    } else if x < query.x0 {
        Ok(density_below(x, query))
    } else {
        let above = density_above(x, query);
        let below = if query.x0 == 0.0 { above } else { density_below(x, query) };
        if (above - below).abs() > 1e-9 * above.abs().max(1.0) {
            return Err(Error::Inconsistency(format!(
                "density branches disagree at x0: {above} vs {below}"
            )));
        }
        Ok(0.5 * (above + below))
    }
}

fn density_above(x: f64, query: &RbmQuery) -> f64 {
    let RbmQuery { x0, q, alpha, beta, sqrt1p2q } = *query;
    // beta e^{-alpha x0 - beta x} + (q/S) e^{-alpha x0 - beta x}(e^{2 S x0} - 1),
    // with the growing exponential folded in to avoid overflow.
    beta * (-alpha * x0 - beta * x).exp()
        + (q / sqrt1p2q) * ((-beta * (x - x0)).exp() - (-alpha * x0 - beta * x).exp())
}

fn density_below(x: f64, query: &RbmQuery) -> f64 {
    let RbmQuery { x0, q, beta, sqrt1p2q, .. } = *query;
    // (q/S) e^{-alpha (x0 - x)} + (beta^2 / 2S) e^{-alpha x0 - beta x}.
    (q / sqrt1p2q) * (-query.alpha * (x0 - x)).exp()
        + beta * beta / (2.0 * sqrt1p2q) * (-query.alpha * x0 - beta * x).exp()
}

/// Survival function `P_{x0}(R(e_q) > x)`.
pub fn rbm_survival(x: f64, query: &RbmQuery) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter("evaluation point must be nonnegative".into()));
    }
    let RbmQuery { x0, alpha, beta, sqrt1p2q, .. } = *query;
    let shrink = 1.0 - alpha / (2.0 * sqrt1p2q);
    if x >= x0 {
        Ok(shrink * (-alpha * x0 - beta * x).exp()
            + alpha / (2.0 * sqrt1p2q) * (-beta * (x - x0)).exp())
    } else {
        Ok(1.0 - shrink * (-alpha * (x0 - x)).exp() + shrink * (-alpha * x0 - beta * x).exp())
    }
}

/// Complex-argument density evaluator, the transform-side object fed to
/// Laplace inversion: for `Re q > 0` this is `q` times the Laplace transform
/// of `t -> f_{R(t)}(x)`.
pub fn rbm_density_c(x: f64, x0: f64, q: C64) -> Result<C64> {
    if !(x >= 0.0) || !(x0 >= 0.0) {
        return Err(Error::InvalidParameter("levels must be nonnegative".into()));
    }
    if !(q.re > 0.0) {
        return Err(Error::InvalidParameter("need Re q > 0".into()));
    }
    let s = (C64::new(1.0, 0.0) + 2.0 * q).sqrt();
    let alpha = 2.0 * q / (1.0 + s);
    let beta = 1.0 + s;
    if x >= x0 {
        Ok(beta * (-alpha * x0 - beta * x).exp()
            + (q / s) * ((-beta * (x - x0)).exp() - (-alpha * x0 - beta * x).exp()))
    } else {
        Ok((q / s) * (-alpha * (x0 - x)).exp()
            + beta * beta / (2.0 * s) * (-alpha * x0 - beta * x).exp())
    }
}

/// Complex-argument survival evaluator.
pub fn rbm_survival_c(x: f64, x0: f64, q: C64) -> Result<C64> {
    if !(x >= 0.0) || !(x0 >= 0.0) {
        return Err(Error::InvalidParameter("levels must be nonnegative".into()));
    }
    if !(q.re > 0.0) {
        return Err(Error::InvalidParameter("need Re q > 0".into()));
    }
    let s = (C64::new(1.0, 0.0) + 2.0 * q).sqrt();
    let alpha = 2.0 * q / (1.0 + s);
    let beta = 1.0 + s;
    let one = C64::new(1.0, 0.0);
    let shrink = one - alpha / (2.0 * s);
    if x >= x0 {
        Ok(shrink * (-alpha * x0 - beta * x).exp()
            + alpha / (2.0 * s) * (-beta * (x - x0)).exp())
    } else {
        Ok(one - shrink * (-alpha * (x0 - x)).exp() + shrink * (-alpha * x0 - beta * x).exp())
    }
}
