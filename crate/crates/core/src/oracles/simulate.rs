//! Monte Carlo path oracles: embedded-jump-chain simulation of the level
//! process and Euler-Maruyama simulation of reflected Brownian motion.
//!
//! Reproducibility contract: replication `r` always runs on its own
//! counter-selected RNG stream, so results are bit-identical for a given
//! seed regardless of how replications are partitioned across threads.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::MarkovPrpSpec;

/// Two-sided 99% normal quantile used for every half-width in this module.
pub(crate) const Z99: f64 = 2.575_829_303_548_900_4;

const EVENT_CAP: u64 = 10_000_000;

/// Empirical joint law of `(level, running infimum)` at the exponential
/// time, with 99% confidence half-widths.
#[derive(Debug, Clone)]
pub struct SimulationEstimate {
    /// `(level, infimum) -> (point estimate, half-width)`.
    pub cells: BTreeMap<(i64, i64), (f64, f64)>,
    pub replications: u64,
    pub seed: u64,
}

impl SimulationEstimate {
    pub fn estimate(&self, level: i64, infimum: i64) -> (f64, f64) {
        self.cells
            .get(&(level, infimum))
            .copied()
            .unwrap_or((0.0, 0.0))
    }
}

fn rng_for(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

fn halfwidth(p: f64, n: u64) -> f64 {
    Z99 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Simulate the level process of `spec` to an exponential time with rate `q`
/// and record `(level, running infimum)` per replication.
///
/// The exponential horizon is sampled exactly per replication; events come
/// from competing exponential clocks via the embedded jump chain. A path
/// exceeding the hard event cap aborts the run, since that many events
/// before an exponential deadline indicates a rate misconfiguration.
pub fn simulate_prp(
    spec: &MarkovPrpSpec,
    initial: i64,
    q: f64,
    replications: u64,
    seed: u64,
) -> Result<SimulationEstimate> {
    if !(q > 0.0) {
        return Err(Error::InvalidParameter("q must be positive".into()));
    }
    if replications == 0 {
        return Err(Error::InvalidParameter("need at least one replication".into()));
    }
    let counts = (0..replications)
        .into_par_iter()
        .try_fold(
            || (HashMap::<(i64, i64), u64>::new(), HashMap::<i64, Candidates>::new()),
            |(mut counts, mut cache), rep| {
                let mut rng = rng_for(seed, rep);
                let horizon: f64 = rng.sample::<f64, _>(Exp1) / q;
                let mut level = initial;
                let mut infimum = initial;
                let mut elapsed = 0.0;
                let mut events = 0u64;
                loop {
                    let cand = cache
                        .entry(level)
                        .or_insert_with(|| Candidates::new(spec, level));
                    if cand.total == 0.0 {
                        break;
                    }
                    let wait: f64 = rng.sample::<f64, _>(Exp1) / cand.total;
                    if elapsed + wait > horizon {
                        break;
                    }
                    elapsed += wait;
                    let mut pick = rng.gen::<f64>() * cand.total;
                    let mut target = cand.moves.last().map(|(t, _)| *t).unwrap_or(level);
                    for &(t, rate) in &cand.moves {
                        if pick < rate {
                            target = t;
                            break;
                        }
                        pick -= rate;
                    }
                    level = target;
                    infimum = infimum.min(level);
                    events += 1;
                    if events > EVENT_CAP {
                        return Err(Error::Inconsistency(format!(
                            "path exceeded {EVENT_CAP} events before the exponential deadline"
                        )));
                    }
                }
                *counts.entry((level, infimum)).or_insert(0) += 1;
                Ok((counts, cache))
            },
        )
        .map(|r| r.map(|(counts, _)| counts))
        .try_reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            Ok(a)
        })?;
    let cells = counts
        .into_iter()
        .map(|(k, c)| {
            let p = c as f64 / replications as f64;
            (k, (p, halfwidth(p, replications)))
        })
        .collect();
    Ok(SimulationEstimate { cells, replications, seed })
}

struct Candidates {
    moves: Vec<(i64, f64)>,
    total: f64,
}

impl Candidates {
    fn new(spec: &MarkovPrpSpec, level: i64) -> Self {
        let moves = spec.transitions_at(level);
        let total = moves.iter().map(|(_, r)| r).sum();
        Candidates { moves, total }
    }
}

/// Fixed-width histogram over `[lo, hi)` plus one overflow bin.
#[derive(Debug, Clone, Copy)]
pub struct HistogramSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl HistogramSpec {
    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn index(&self, x: f64) -> usize {
        if x >= self.hi {
            return self.bins;
        }
        let idx = ((x - self.lo) / self.bin_width()).floor();
        (idx.max(0.0) as usize).min(self.bins)
    }

    pub fn edges(&self, bin: usize) -> (f64, f64) {
        if bin >= self.bins {
            (self.hi, f64::INFINITY)
        } else {
            (
                self.lo + bin as f64 * self.bin_width(),
                self.lo + (bin + 1) as f64 * self.bin_width(),
            )
        }
    }
}

/// How the running minimum of the regulator is tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinTracking {
    /// Minimum over the discrete grid points only. Carries the classical
    /// O(sqrt(dt)) upward boundary bias of discretely reflected schemes.
    DiscreteEndpoints,
    /// Refine each step with an exactly sampled Brownian-bridge minimum, so
    /// the regulator sees the continuum minimum and the sampled pair
    /// `(R(e_q), inf R)` is exact in distribution.
    BridgeExact,
}

/// Histogram estimates of `(R(e_q), inf R)` for reflected Brownian motion
/// with drift -1 and unit variance started at `x0`.
#[derive(Debug, Clone)]
pub struct RbmSimulation {
    /// Per-bin `(estimate, half-width)` for `R(e_q)`; the last entry is the
    /// overflow bin.
    pub value_bins: Vec<(f64, f64)>,
    /// Same binning for the running infimum of the reflected path.
    pub infimum_bins: Vec<(f64, f64)>,
    /// Fraction of paths whose continuum minimum reached zero.
    pub zero_hit: (f64, f64),
    pub replications: u64,
    pub seed: u64,
    pub dt: f64,
}

/// Euler-Maruyama simulation of the regulated path, killed at an exactly
/// sampled exponential time with rate `q`.
///
/// The reflected value is produced by the explicit running-minimum
/// regulator `R(t) = B(t) - min(0, inf B)`; `tracking` selects how the
/// running minimum is computed. Bridge refinement only samples the in-step
/// minimum when it has non-negligible probability (above `e^{-40}`) of
/// undercutting the current minimum.
pub fn simulate_rbm(
    x0: f64,
    q: f64,
    replications: u64,
    dt: f64,
    seed: u64,
    hist: &HistogramSpec,
    tracking: MinTracking,
) -> Result<RbmSimulation> {
    if !(x0 >= 0.0) || !(q > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter(
            "need x0 >= 0, q > 0, dt > 0".into(),
        ));
    }
    if replications == 0 {
        return Err(Error::InvalidParameter("need at least one replication".into()));
    }
    let n_bins = hist.bins + 1;
    let (value_counts, inf_counts, zero_hits) = (0..replications)
        .into_par_iter()
        .fold(
            || (vec![0u64; n_bins], vec![0u64; n_bins], 0u64),
            |(mut vc, mut ic, mut zh), rep| {
                let mut rng = rng_for(seed, rep);
                let horizon: f64 = rng.sample::<f64, _>(Exp1) / q;
                let mut level = x0;
                let mut min_level = x0;
                let mut t = 0.0;
                while t < horizon {
                    let h = (horizon - t).min(dt);
                    if h <= 0.0 {
                        break;
                    }
                    let z: f64 = rng.sample(StandardNormal);
                    let next = level - h + h.sqrt() * z;
                    match tracking {
                        MinTracking::DiscreteEndpoints => {
                            if next < min_level {
                                min_level = next;
                            }
                        }
                        MinTracking::BridgeExact => {
                            // P(bridge min < m) = exp(-2(a-m)(b-m)/h); skip
                            // the draw when that is below e^{-40}.
                            if (level - min_level) * (next - min_level) <= 20.0 * h {
                                let u: f64 = 1.0 - rng.gen::<f64>();
                                let gap = level - next;
                                let m = 0.5
                                    * (level + next
                                        - (gap * gap - 2.0 * h * u.ln()).sqrt());
                                if m < min_level {
                                    min_level = m;
                                }
                            }
                        }
                    }
                    level = next;
                    t += h;
                }
                let reflected = level - min_level.min(0.0);
                let inf_reflected = min_level.max(0.0);
                vc[hist.index(reflected)] += 1;
                ic[hist.index(inf_reflected)] += 1;
                if min_level <= 0.0 {
                    zh += 1;
                }
                (vc, ic, zh)
            },
        )
        .reduce(
            || (vec![0u64; n_bins], vec![0u64; n_bins], 0u64),
            |(mut va, mut ia, za), (vb, ib, zb)| {
                for (a, b) in va.iter_mut().zip(&vb) {
                    *a += b;
                }
                for (a, b) in ia.iter_mut().zip(&ib) {
                    *a += b;
                }
                (va, ia, za + zb)
            },
        );
    let to_est = |counts: Vec<u64>| {
        counts
            .into_iter()
            .map(|c| {
                let p = c as f64 / replications as f64;
                (p, halfwidth(p, replications))
            })
            .collect::<Vec<_>>()
    };
    let zp = zero_hits as f64 / replications as f64;
    Ok(RbmSimulation {
        value_bins: to_est(value_counts),
        infimum_bins: to_est(inf_counts),
        zero_hit: (zp, halfwidth(zp, replications)),
        replications,
        seed,
        dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RateMap;

    fn frozen_spec() -> MarkovPrpSpec {
        MarkovPrpSpec {
            single_arrival: RateMap::Constant(0.0),
            batch: None,
            service: RateMap::Constant(0.0),
            catastrophe: None,
            reflection_level: None,
        }
        .validated()
        .unwrap()
    }

    #[test]
    fn all_rates_zero_stays_put() {
        let est = simulate_prp(&frozen_spec(), 3, 1.0, 500, 7).unwrap();
        assert_eq!(est.estimate(3, 3).0, 1.0);
        assert_eq!(est.cells.len(), 1);
    }

    #[test]
    fn simulation_is_reproducible() {
        let spec = MarkovPrpSpec {
            single_arrival: RateMap::Constant(1.0),
            batch: None,
            service: RateMap::LinearCapped { slope: 2.0, cap: 1 },
            catastrophe: None,
            reflection_level: None,
        }
        .validated()
        .unwrap();
        let a = simulate_prp(&spec, 2, 1.0, 2_000, 42).unwrap();
        let b = simulate_prp(&spec, 2, 1.0, 2_000, 42).unwrap();
        assert_eq!(a.cells, b.cells);
    }

    #[test]
    fn rbm_histogram_masses_sum_to_one() {
        let hist = HistogramSpec { lo: 0.0, hi: 4.0, bins: 16 };
        let sim = simulate_rbm(0.5, 1.0, 4_000, 1e-2, 11, &hist, MinTracking::BridgeExact)
            .unwrap();
        let total: f64 = sim.value_bins.iter().map(|(p, _)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let inf_total: f64 = sim.infimum_bins.iter().map(|(p, _)| p).sum();
        assert!((inf_total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn halfwidths_shrink_with_sqrt_replications() {
        let spec = MarkovPrpSpec {
            single_arrival: RateMap::Constant(1.0),
            batch: None,
            service: RateMap::LinearCapped { slope: 2.0, cap: 1 },
            catastrophe: None,
            reflection_level: None,
        }
        .validated()
        .unwrap();
        let small = simulate_prp(&spec, 2, 1.0, 20_000, 5).unwrap();
        let large = simulate_prp(&spec, 2, 1.0, 40_000, 5).unwrap();
        let (ps, hs) = small.estimate(2, 2);
        let (_pl, hl) = large.estimate(2, 2);
        assert!(ps > 0.0);
        let ratio = hs / hl;
        assert!((ratio - 2f64.sqrt()).abs() < 0.1 * 2f64.sqrt(), "ratio {ratio}");
    }
}
