//! Monte Carlo execution of block-length-`n` control designs.
//!
//! The source and channel noise are drawn from the true Gaussian laws; kernel
//! lookups quantize the continuous values to the nearest grid point (clamping
//! at the edges), while costs are measured against the continuous state, so
//! discretization error shows up in the measured costs instead of being hidden
//! by a fully discrete simulation.
//!
//! Three scenarios share one sampling discipline: per symbol the generator
//! draws `x0`, `z1`, one uniform for the encoder and one for the decoder, in
//! that order, regardless of scenario. Two runs with the same seed therefore
//! produce bit-identical trajectories whenever their kernels agree on the
//! inputs actually used — in particular, a feedback-blind policy under the
//! feedback scenario reproduces the plain causal run exactly.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::designs::{CausalDesign, Kernel};
use crate::error::{Error, Result};
use crate::measures::JointPmf;
use crate::mix_seed;
use crate::model::{Axis, CostPair, DiscreteModel, Grid, ModelParams};
use crate::solver::envelope_value_at;

/// Which information pattern the block simulation runs under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scenario {
    /// Causal encoder, causal decoder.
    CausalCausal,
    /// Causal encoder with access to the previous channel output.
    CausalCausalFeedback,
    /// Feedback encoder plus a decoder that also sees the previous source
    /// symbol (the outer-bound construction).
    CausalCausalFeedbackGenie,
}

/// Per-symbol encoder kernel of a stationary policy.
#[derive(Debug, Clone)]
pub enum EncPolicy {
    /// rows over `(x0, t)`
    Plain(Kernel),
    /// rows over `(x0, t, y1_prev)`; only valid in feedback scenarios
    FeedbackAware(Kernel),
}

/// Per-symbol decoder kernel of a stationary policy.
#[derive(Debug, Clone)]
pub enum DecPolicy {
    /// rows over `(t, y1)`
    Plain(Kernel),
    /// rows over `(t, y1, x0_prev)`; only valid in the genie scenario
    GenieAware(Kernel),
}

/// A stationary per-symbol strategy plus the shared time-sharing sequence.
#[derive(Debug, Clone)]
pub struct StationaryPolicy {
    pub x0_grid: Grid,
    pub u1_grid: Grid,
    pub y1_grid: Grid,
    pub u2_grid: Grid,
    pub tshare: Vec<usize>,
    pub enc: EncPolicy,
    pub dec: DecPolicy,
}

impl StationaryPolicy {
    /// Symbol-by-symbol execution of a single-letter causal design: the
    /// time-sharing sequence is the deterministic exact-type sequence of the
    /// design's `p_t`, and the per-symbol kernels are the design's kernels.
    pub fn from_causal_design(design: &CausalDesign, model: &DiscreteModel, n: usize) -> Result<Self> {
        Ok(Self {
            x0_grid: model.x0_grid.clone(),
            u1_grid: model.u1_grid.clone(),
            y1_grid: model.y1_grid.clone(),
            u2_grid: model.u2_grid.clone(),
            tshare: make_tshare_sequence(&design.p_t, n)?,
            enc: EncPolicy::Plain(design.enc.clone()),
            dec: DecPolicy::Plain(design.dec.clone()),
        })
    }

    fn t_len(&self) -> usize {
        match &self.enc {
            EncPolicy::Plain(k) | EncPolicy::FeedbackAware(k) => k.in_dims()[1],
        }
    }
}

/// Expand a plain `(x0, t)` encoder with a y1_prev axis it ignores; useful for
/// running a causal design under the feedback scenario unchanged.
pub fn feedback_blind_encoder(enc: &Kernel, ny: usize) -> Kernel {
    let nx = enc.in_dims()[0];
    let nt = enc.in_dims()[1];
    let nu = enc.out_dim();
    let mut data = Vec::with_capacity(nx * nt * ny * nu);
    for ix in 0..nx {
        for it in 0..nt {
            let row = enc.row(&[ix, it]);
            for _ in 0..ny {
                data.extend_from_slice(row);
            }
        }
    }
    Kernel::new(vec![nx, nt, ny], nu, data).expect("rows stay stochastic")
}

/// Deterministic sequence whose empirical type matches `p_t`: counts by the
/// largest-remainder rule, symbols laid out round-robin.
pub fn make_tshare_sequence(p_t: &[f64], n: usize) -> Result<Vec<usize>> {
    if p_t.is_empty() {
        return Err(Error::InvalidArgument("p_t must be nonempty".into()));
    }
    if n < p_t.len() {
        return Err(Error::InvalidArgument(format!(
            "block length {n} shorter than the time-sharing alphabet {}",
            p_t.len()
        )));
    }
    let mut counts: Vec<usize> = p_t.iter().map(|&p| (n as f64 * p).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..p_t.len()).collect();
    order.sort_by(|&i, &j| {
        let fi = n as f64 * p_t[i] - (n as f64 * p_t[i]).floor();
        let fj = n as f64 * p_t[j] - (n as f64 * p_t[j]).floor();
        fj.partial_cmp(&fi).unwrap().then(i.cmp(&j))
    });
    for k in 0..(n - assigned) {
        counts[order[k % order.len()]] += 1;
    }
    let mut seq = Vec::with_capacity(n);
    let mut left = counts;
    while seq.len() < n {
        for (sym, c) in left.iter_mut().enumerate() {
            if *c > 0 {
                seq.push(sym);
                *c -= 1;
            }
        }
    }
    Ok(seq)
}

/// Empirical costs of one simulated block, with within-block standard errors.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlockStats {
    pub n: usize,
    pub c_p: f64,
    pub c_s: f64,
    pub se_p: f64,
    pub se_s: f64,
}

/// One simulated block: costs plus (optionally) the recorded trajectory rows
/// `(t_share_index, x0, u1, x1, y1, u2)`.
#[derive(Debug, Clone)]
pub struct BlockRun {
    pub stats: BlockStats,
    pub trajectory: Option<Vec<[f64; 6]>>,
}

/// Simulate one block of length `n` under `scenario`. Continuous `x0`, `z1`
/// are drawn from the model Gaussians; kernel lookups use nearest-grid-point
/// quantization with edge clamping; costs use the continuous interim state
/// `x1 = x0 + u1`.
pub fn run_block(
    policy: &StationaryPolicy,
    scenario: Scenario,
    params: &ModelParams,
    n: usize,
    seed: u64,
    record: bool,
) -> Result<BlockRun> {
    if n == 0 {
        return Err(Error::InvalidArgument("block length must be >= 1".into()));
    }
    if policy.tshare.len() < n {
        return Err(Error::InvalidArgument(format!(
            "time-sharing sequence has {} symbols, block needs {n}",
            policy.tshare.len()
        )));
    }
    if matches!(&policy.enc, EncPolicy::FeedbackAware(_)) && scenario == Scenario::CausalCausal {
        return Err(Error::InvalidArgument(
            "feedback-aware encoder requires a feedback scenario".into(),
        ));
    }
    if matches!(&policy.dec, DecPolicy::GenieAware(_))
        && scenario != Scenario::CausalCausalFeedbackGenie
    {
        return Err(Error::InvalidArgument(
            "genie-aware decoder requires the genie scenario".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let source = Normal::new(0.0, params.q.sqrt()).expect("valid source law");
    let noise = Normal::new(0.0, params.n.sqrt()).expect("valid noise law");

    let mut y1_prev_q = policy.y1_grid.nearest_index(0.0);
    let mut x0_prev_q = policy.x0_grid.nearest_index(0.0);
    let mut sum_p = 0.0;
    let mut sumsq_p = 0.0;
    let mut sum_s = 0.0;
    let mut sumsq_s = 0.0;
    let mut trajectory = if record { Some(Vec::with_capacity(n)) } else { None };

    for step in 0..n {
        let t = policy.tshare[step];
        // fixed draw order keeps seeded runs comparable across scenarios
        let x0: f64 = source.sample(&mut rng);
        let z1: f64 = noise.sample(&mut rng);
        let eu: f64 = rng.random();
        let du: f64 = rng.random();

        let x0_q = policy.x0_grid.nearest_index(x0);
        let iu = match &policy.enc {
            EncPolicy::Plain(k) => k.sample_row(&[x0_q, t], eu),
            EncPolicy::FeedbackAware(k) => k.sample_row(&[x0_q, t, y1_prev_q], eu),
        };
        let u1 = policy.u1_grid.value(iu);
        let x1 = x0 + u1;
        let y1 = x1 + z1;
        let y1_q = policy.y1_grid.nearest_index(y1);
        let iv = match &policy.dec {
            DecPolicy::Plain(k) => k.sample_row(&[t, y1_q], du),
            DecPolicy::GenieAware(k) => k.sample_row(&[t, y1_q, x0_prev_q], du),
        };
        let u2 = policy.u2_grid.value(iv);

        let vp = u1 * u1;
        let vs = (x1 - u2) * (x1 - u2);
        sum_p += vp;
        sumsq_p += vp * vp;
        sum_s += vs;
        sumsq_s += vs * vs;
        if let Some(tr) = trajectory.as_mut() {
            tr.push([t as f64, x0, u1, x1, y1, u2]);
        }
        y1_prev_q = y1_q;
        x0_prev_q = x0_q;
    }

    let nf = n as f64;
    let c_p = sum_p / nf;
    let c_s = sum_s / nf;
    let var = |sumsq: f64, mean: f64| {
        if n > 1 {
            ((sumsq - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        }
    };
    Ok(BlockRun {
        stats: BlockStats {
            n,
            c_p,
            c_s,
            se_p: (var(sumsq_p, c_p) / nf).sqrt(),
            se_s: (var(sumsq_s, c_s) / nf).sqrt(),
        },
        trajectory,
    })
}

/// Empirical joint type of a trajectory over `(X0, T, U1, Y1, U2)`, quantized
/// onto the policy grids; comparable to an assembled single-letter joint.
pub fn empirical_joint_type(
    trajectory: &[[f64; 6]],
    policy: &StationaryPolicy,
) -> Result<JointPmf> {
    if trajectory.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let nt = policy.t_len();
    let (nx, nu, ny, nv) = (
        policy.x0_grid.len(),
        policy.u1_grid.len(),
        policy.y1_grid.len(),
        policy.u2_grid.len(),
    );
    let mut counts = vec![0.0f64; nx * nt * nu * ny * nv];
    let w = 1.0 / trajectory.len() as f64;
    for row in trajectory {
        let [t, x0, u1, _x1, y1, u2] = *row;
        let it = t as usize;
        let ix = policy.x0_grid.nearest_index(x0);
        let iu = policy.u1_grid.nearest_index(u1);
        let iy = policy.y1_grid.nearest_index(y1);
        let iv = policy.u2_grid.nearest_index(u2);
        counts[(((ix * nt + it) * nu + iu) * ny + iy) * nv + iv] += w;
    }
    JointPmf::new(
        vec![(Axis::X0, nx), (Axis::T, nt), (Axis::U1, nu), (Axis::Y1, ny), (Axis::U2, nv)],
        counts,
    )
}

/// Total variation distance between two joints on identical axes.
pub fn total_variation(a: &JointPmf, b: &JointPmf) -> Result<f64> {
    if a.axes() != b.axes() {
        return Err(Error::Schema("total variation needs identical axes".into()));
    }
    Ok(0.5 * a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Gap statistics at one block length.
#[derive(Debug, Clone, Serialize)]
pub struct GapAtLength {
    pub n: usize,
    pub mean_gap: f64,
    pub se: f64,
    pub per_seed: Vec<f64>,
}

/// Result of the achievability test: per-length expected-gap estimates, the
/// log-log slope of the gap against the block length, and the two checks the
/// schedule is asked to satisfy.
#[derive(Debug, Clone, Serialize)]
pub struct AchievabilityReport {
    pub targets: CostPair,
    pub per_length: Vec<GapAtLength>,
    pub loglog_slope: f64,
    pub non_increasing_within_2se: bool,
    pub final_gap: f64,
    pub eps_target: f64,
    pub pass: bool,
}

/// Estimate the expected achievability gap `E[|P - c_P| + |S - c_S|]` of a
/// causal design across a schedule of block lengths, by seed averaging.
pub fn verify_achievability(
    design: &CausalDesign,
    model: &DiscreteModel,
    targets: CostPair,
    n_schedule: &[usize],
    seeds: &[u64],
    eps_target: f64,
) -> Result<AchievabilityReport> {
    if n_schedule.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidArgument("need at least one length and one seed".into()));
    }
    let mut per_length = Vec::with_capacity(n_schedule.len());
    for &n in n_schedule {
        let policy = StationaryPolicy::from_causal_design(design, model, n)?;
        let per_seed: Vec<f64> = seeds
            .par_iter()
            .map(|&seed| {
                let run = run_block(&policy, Scenario::CausalCausal, &model.params, n, seed, false)?;
                Ok((targets.p - run.stats.c_p).abs() + (targets.s - run.stats.c_s).abs())
            })
            .collect::<Result<_>>()?;
        let k = per_seed.len() as f64;
        let mean = per_seed.iter().sum::<f64>() / k;
        let var = if per_seed.len() > 1 {
            per_seed.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        per_length.push(GapAtLength { n, mean_gap: mean, se: (var / k).sqrt(), per_seed });
    }

    // least-squares slope of ln(gap) against ln(n)
    let xs: Vec<f64> = per_length.iter().map(|g| (g.n as f64).ln()).collect();
    let ys: Vec<f64> = per_length.iter().map(|g| g.mean_gap.max(1e-300).ln()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - xm) * (y - ym);
        den += (x - xm) * (x - xm);
    }
    let slope = if den > 0.0 { num / den } else { 0.0 };

    let mut non_increasing = true;
    for w in per_length.windows(2) {
        let band = 2.0 * (w[0].se * w[0].se + w[1].se * w[1].se).sqrt();
        if w[1].mean_gap > w[0].mean_gap + band {
            non_increasing = false;
        }
    }
    let final_gap = per_length.last().unwrap().mean_gap;
    Ok(AchievabilityReport {
        targets,
        per_length,
        loglog_slope: slope,
        non_increasing_within_2se: non_increasing,
        final_gap,
        eps_target,
        pass: non_increasing && final_gap <= eps_target,
    })
}

/// How a random policy was generated (for report rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PolicyFamily {
    /// affine with a near-optimal decoder gain
    AffineTuned,
    /// affine with wild random gains and offsets
    AffineWild,
    /// random spiky stochastic kernels
    RandomKernels,
}

/// Outcome of one containment trial.
#[derive(Debug, Clone, Serialize)]
pub struct ContainmentRow {
    pub scenario: Scenario,
    pub family: PolicyFamily,
    pub c_p: f64,
    pub c_s: f64,
    pub se_s: f64,
    /// frontier envelope height at this policy's measured power
    pub envelope_s: f64,
    /// `envelope_s - c_s`; positive means the point lies below the envelope
    pub below_envelope: f64,
    /// tolerance band `3 se_s + 2% of Q`
    pub band: f64,
    pub violation: bool,
}

/// Report of the feedback/genie containment experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ContainmentReport {
    pub rows: Vec<ContainmentRow>,
    pub violations: usize,
    pub pass: bool,
}

fn snap_affine_enc(
    model: &DiscreteModel,
    a: f64,
    b: f64,
    c: f64,
) -> Kernel {
    let nx = model.x0_grid.len();
    let ny = model.y1_grid.len();
    let x0 = model.x0_grid.clone();
    let y1 = model.y1_grid.clone();
    let u1 = model.u1_grid.clone();
    Kernel::point_mass(vec![nx, 1, ny], model.u1_grid.len(), move |idx| {
        let v = a * x0.value(idx[0]) + b * y1.value(idx[2]) + c;
        u1.nearest_index(v)
    })
}

fn spiky_random_kernel(rng: &mut ChaCha8Rng, in_dims: Vec<usize>, out_dim: usize) -> Kernel {
    let rows: usize = in_dims.iter().product();
    let mut data = Vec::with_capacity(rows * out_dim);
    for _ in 0..rows {
        let mut row: Vec<f64> = (0..out_dim)
            .map(|_| {
                let g: f64 = rng.random::<f64>() * 2.0 - 1.0;
                (3.0 * g).exp()
            })
            .collect();
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= total);
        data.extend(row);
    }
    Kernel::new(in_dims, out_dim, data).expect("normalized rows")
}

/// Draw one random stationary feedback policy (tshare constant, `|T| = 1`).
pub fn sample_feedback_policy(model: &DiscreteModel, n: usize, seed: u64) -> StationaryPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family = match seed % 3 {
        0 => PolicyFamily::AffineTuned,
        1 => PolicyFamily::AffineWild,
        _ => PolicyFamily::RandomKernels,
    };
    sample_feedback_policy_in(model, n, &mut rng, family)
}

fn sample_feedback_policy_in(
    model: &DiscreteModel,
    n: usize,
    rng: &mut ChaCha8Rng,
    family: PolicyFamily,
) -> StationaryPolicy {
    let ny = model.y1_grid.len();
    let (enc, dec) = match family {
        PolicyFamily::AffineTuned => {
            let a = -rng.random::<f64>(); // [-1, 0]
            let b = 0.6 * rng.random::<f64>() - 0.3;
            let sigma2 = (1.0 + a) * (1.0 + a) * model.params.q;
            let g = sigma2 / (sigma2 + model.params.n) + 0.1 * rng.random::<f64>() - 0.05;
            let enc = snap_affine_enc(model, a, b, 0.0);
            let y1 = model.y1_grid.clone();
            let u2 = model.u2_grid.clone();
            let dec = Kernel::point_mass(vec![1, ny], model.u2_grid.len(), move |idx| {
                u2.nearest_index(g * y1.value(idx[1]))
            });
            (enc, dec)
        }
        PolicyFamily::AffineWild => {
            let a = 3.0 * rng.random::<f64>() - 2.0;
            let b = 1.6 * rng.random::<f64>() - 0.8;
            let c = 2.0 * rng.random::<f64>() - 1.0;
            let g = 2.0 * rng.random::<f64>() - 0.5;
            let e = 2.0 * rng.random::<f64>() - 1.0;
            let enc = snap_affine_enc(model, a, b, c);
            let y1 = model.y1_grid.clone();
            let u2 = model.u2_grid.clone();
            let dec = Kernel::point_mass(vec![1, ny], model.u2_grid.len(), move |idx| {
                u2.nearest_index(g * y1.value(idx[1]) + e)
            });
            (enc, dec)
        }
        PolicyFamily::RandomKernels => {
            let enc = spiky_random_kernel(rng, vec![model.x0_grid.len(), 1, ny], model.u1_grid.len());
            let dec = spiky_random_kernel(rng, vec![1, ny], model.u2_grid.len());
            (enc, dec)
        }
    };
    StationaryPolicy {
        x0_grid: model.x0_grid.clone(),
        u1_grid: model.u1_grid.clone(),
        y1_grid: model.y1_grid.clone(),
        u2_grid: model.u2_grid.clone(),
        tshare: vec![0; n],
        enc: EncPolicy::FeedbackAware(enc),
        dec: DecPolicy::Plain(dec),
    }
}

/// Draw one random genie policy: feedback encoder plus a decoder that mixes
/// the current channel output with the previous source symbol.
pub fn sample_genie_policy(model: &DiscreteModel, n: usize, seed: u64) -> StationaryPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ny = model.y1_grid.len();
    let nx = model.x0_grid.len();
    let a = 1.5 * rng.random::<f64>() - 1.25;
    let b = 0.6 * rng.random::<f64>() - 0.3;
    let g = 1.5 * rng.random::<f64>() - 0.25;
    let h = 1.6 * rng.random::<f64>() - 0.8;
    let enc = snap_affine_enc(model, a, b, 0.0);
    let y1 = model.y1_grid.clone();
    let x0 = model.x0_grid.clone();
    let u2 = model.u2_grid.clone();
    let dec = Kernel::point_mass(vec![1, ny, nx], model.u2_grid.len(), move |idx| {
        u2.nearest_index(g * y1.value(idx[1]) + h * x0.value(idx[2]))
    });
    StationaryPolicy {
        x0_grid: model.x0_grid.clone(),
        u1_grid: model.u1_grid.clone(),
        y1_grid: model.y1_grid.clone(),
        u2_grid: model.u2_grid.clone(),
        tshare: vec![0; n],
        enc: EncPolicy::FeedbackAware(enc),
        dec: DecPolicy::GenieAware(dec),
    }
}

/// Sample random stationary feedback and genie policies, simulate each for a
/// block of length `n`, and check that no measured cost point falls below the
/// causal frontier envelope by more than `3 SE + 2% of Q`.
pub fn feedback_containment_check(
    model: &DiscreteModel,
    envelope: &[CostPair],
    feedback_trials: usize,
    genie_trials: usize,
    n: usize,
    seed: u64,
) -> Result<ContainmentReport> {
    let q = model.params.q;
    let jobs: Vec<(Scenario, u64)> = (0..feedback_trials)
        .map(|k| (Scenario::CausalCausalFeedback, mix_seed(seed, k as u64)))
        .chain(
            (0..genie_trials).map(|k| {
                (Scenario::CausalCausalFeedbackGenie, mix_seed(seed, 0x8000_0000 + k as u64))
            }),
        )
        .collect();

    let rows: Vec<ContainmentRow> = jobs
        .par_iter()
        .map(|&(scenario, policy_seed)| -> Result<ContainmentRow> {
            let (policy, family) = match scenario {
                Scenario::CausalCausalFeedbackGenie => {
                    (sample_genie_policy(model, n, policy_seed), PolicyFamily::AffineWild)
                }
                _ => {
                    let family = match policy_seed % 3 {
                        0 => PolicyFamily::AffineTuned,
                        1 => PolicyFamily::AffineWild,
                        _ => PolicyFamily::RandomKernels,
                    };
                    (sample_feedback_policy(model, n, policy_seed), family)
                }
            };
            let run = run_block(&policy, scenario, &model.params, n, mix_seed(policy_seed, 1), false)?;
            let env_s = envelope_value_at(envelope, run.stats.c_p);
            let below = env_s - run.stats.c_s;
            let band = 3.0 * run.stats.se_s + 0.02 * q;
            Ok(ContainmentRow {
                scenario,
                family,
                c_p: run.stats.c_p,
                c_s: run.stats.c_s,
                se_s: run.stats.se_s,
                envelope_s: env_s,
                below_envelope: below,
                band,
                violation: below > band,
            })
        })
        .collect::<Result<_>>()?;

    let violations = rows.iter().filter(|r| r.violation).count();
    Ok(ContainmentReport { rows, violations, pass: violations == 0 })
}
