//! Closed-form costs of affine encoder policies `u1 = a x0` under the exact
//! conditional-mean decoder, and two-point time-sharing between them.
//!
//! For a zero-mean source and quadratic costs an intercept term is never
//! useful (it shifts the interim state away from zero at pure power cost), so
//! the policy carries the gain alone. These values are grid-free and serve as
//! anchors for the solver and the simulator: `a = -1` is zero-forcing
//! (`(Q, 0)`), `a = 0` is zero input (`(0, QN/(Q+N))`).

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CostPair, ModelParams};
use crate::solver::convex_envelope;

/// Affine encoder gain: `u1 = a x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffinePolicy {
    pub a: f64,
}

impl AffinePolicy {
    pub fn new(a: f64) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidArgument(format!("gain must be finite, got {a}")));
        }
        Ok(Self { a })
    }
}

/// Exact costs of an affine policy: `P = a^2 Q`; with `σ^2 = (1+a)^2 Q` the
/// conditional-mean decoder `u2 = σ^2/(σ^2+N) · y1` yields `S = σ^2 N / (σ^2 + N)`.
pub fn affine_costs(policy: AffinePolicy, m: ModelParams) -> CostPair {
    let p = policy.a * policy.a * m.q;
    let sigma2 = (1.0 + policy.a) * (1.0 + policy.a) * m.q;
    let s = sigma2 * m.n / (sigma2 + m.n);
    CostPair { p, s }
}

/// Componentwise convex combination of two affine operating points; the
/// decoder applies each policy's own conditional-mean gain on its sub-block,
/// so the time-shared costs are exactly the chord.
pub fn timeshare_affine(
    p1: AffinePolicy,
    p2: AffinePolicy,
    theta: f64,
    m: ModelParams,
) -> Result<CostPair> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!("theta must be in [0, 1], got {theta}")));
    }
    let c1 = affine_costs(p1, m);
    let c2 = affine_costs(p2, m);
    Ok(CostPair {
        p: theta * c1.p + (1.0 - theta) * c2.p,
        s: theta * c1.s + (1.0 - theta) * c2.s,
    })
}

/// Affine cost curve over a gain grid plus its lower convex envelope.
#[derive(Debug, Clone, Serialize)]
pub struct AffineFrontierSample {
    pub gains: Vec<f64>,
    pub samples: Vec<CostPair>,
    pub envelope: Vec<CostPair>,
}

/// Sample [`affine_costs`] over `a_grid` and attach the lower convex envelope
/// of the sampled points (the time-shared affine reference curve).
pub fn gaussian_frontier_sample(m: ModelParams, a_grid: &[f64]) -> Result<AffineFrontierSample> {
    if a_grid.is_empty() {
        return Err(Error::InvalidArgument("gain grid must be nonempty".into()));
    }
    let mut samples = Vec::with_capacity(a_grid.len());
    for &a in a_grid {
        samples.push(affine_costs(AffinePolicy::new(a)?, m));
    }
    let envelope = convex_envelope(&samples);
    Ok(AffineFrontierSample { gains: a_grid.to_vec(), samples, envelope })
}

/// Monte Carlo estimate of an affine policy's costs under the exact
/// conditional-mean decoder, with standard errors. Grid-free; this is the
/// independent cross-check for [`affine_costs`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MonteCarloAffine {
    pub costs: CostPair,
    pub se_p: f64,
    pub se_s: f64,
}

pub fn monte_carlo_affine_costs(
    policy: AffinePolicy,
    m: ModelParams,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloAffine> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let source = Normal::new(0.0, m.q.sqrt()).expect("valid source law");
    let noise = Normal::new(0.0, m.n.sqrt()).expect("valid noise law");
    let sigma2 = (1.0 + policy.a) * (1.0 + policy.a) * m.q;
    let gain = sigma2 / (sigma2 + m.n);

    let mut sum_p = 0.0;
    let mut sumsq_p = 0.0;
    let mut sum_s = 0.0;
    let mut sumsq_s = 0.0;
    for _ in 0..samples {
        let x0: f64 = source.sample(&mut rng);
        let z1: f64 = noise.sample(&mut rng);
        let u1 = policy.a * x0;
        let x1 = x0 + u1;
        let u2 = gain * (x1 + z1);
        let vp = u1 * u1;
        let vs = (x1 - u2) * (x1 - u2);
        sum_p += vp;
        sumsq_p += vp * vp;
        sum_s += vs;
        sumsq_s += vs * vs;
    }
    let nf = samples as f64;
    let c_p = sum_p / nf;
    let c_s = sum_s / nf;
    let var = |sumsq: f64, mean: f64| ((sumsq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(MonteCarloAffine {
        costs: CostPair { p: c_p, s: c_s },
        se_p: (var(sumsq_p, c_p) / nf).sqrt(),
        se_s: (var(sumsq_s, c_s) / nf).sqrt(),
    })
}

/// Monte Carlo estimate of a two-point time-shared affine scheme: a fraction
/// `θ` of the block (largest-remainder count, leading sub-block) runs `p1`
/// with its own conditional-mean gain, the rest runs `p2`. The split is part
/// of the shared schedule, so the estimate targets exactly the chord
/// `θ·costs(p1) + (1-θ)·costs(p2)`.
pub fn monte_carlo_timeshare_affine(
    p1: AffinePolicy,
    p2: AffinePolicy,
    theta: f64,
    m: ModelParams,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloAffine> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!("theta must be in [0, 1], got {theta}")));
    }
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let source = Normal::new(0.0, m.q.sqrt()).expect("valid source law");
    let noise = Normal::new(0.0, m.n.sqrt()).expect("valid noise law");
    let n1 = (theta * samples as f64).round() as usize;
    let gain_of = |p: AffinePolicy| {
        let sigma2 = (1.0 + p.a) * (1.0 + p.a) * m.q;
        sigma2 / (sigma2 + m.n)
    };

    let mut sum_p = 0.0;
    let mut sumsq_p = 0.0;
    let mut sum_s = 0.0;
    let mut sumsq_s = 0.0;
    for i in 0..samples {
        let (a, gain) = if i < n1 { (p1.a, gain_of(p1)) } else { (p2.a, gain_of(p2)) };
        let x0: f64 = source.sample(&mut rng);
        let z1: f64 = noise.sample(&mut rng);
        let u1 = a * x0;
        let x1 = x0 + u1;
        let u2 = gain * (x1 + z1);
        let vp = u1 * u1;
        let vs = (x1 - u2) * (x1 - u2);
        sum_p += vp;
        sumsq_p += vp * vp;
        sum_s += vs;
        sumsq_s += vs * vs;
    }
    let nf = samples as f64;
    let c_p = sum_p / nf;
    let c_s = sum_s / nf;
    // pooled variance; conservative for the mixed stream
    let var = |sumsq: f64, mean: f64| ((sumsq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(MonteCarloAffine {
        costs: CostPair { p: c_p, s: c_s },
        se_p: (var(sumsq_p, c_p) / nf).sqrt(),
        se_s: (var(sumsq_s, c_s) / nf).sqrt(),
    })
}
