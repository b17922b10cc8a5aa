//! Pareto frontiers of achievable `(P, S)` pairs on the discretized model.
//!
//! The causal region is swept by scalarization: for each weight `λ` the solver
//! minimizes `S + λP` by alternating an exact conditional-mean decoder step
//! with an exact per-`x0` encoder step (enumeration over the `u1` grid), so the
//! objective is non-increasing at every alternation. Restarts randomize the
//! initial encoder. The swept points are then reduced to their lower convex
//! envelope; chords of the envelope are realizable as explicit `|T| = 2`
//! time-sharing designs.
//!
//! The feedback/noncausal region adds the information-feasibility constraint,
//! handled by a quadratic penalty on the negative part of the constraint
//! value, with the penalty weight doubled (up to three times) whenever the
//! alternation converges infeasible. Every weight also evaluates a causal
//! warm start (any causal design embeds into the feedback family with zero
//! slack) and an x0-blind decoder fallback, both of which are always feasible,
//! so the returned frontier never falls outside the region.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designs::{
    feedback_cost, CausalDesign, FeedbackNoncausalDesign, Kernel,
};
use crate::error::{Error, Result};
use crate::mix_seed;
use crate::model::{CostPair, DiscreteModel, Grid, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Slack below which a feedback point counts as infeasible.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Scalarization and search parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub lambda_schedule: Vec<f64>,
    pub restarts: usize,
    pub max_alternations: usize,
    pub tolerance: f64,
    /// Penalty weight for the information constraint; `None` defaults to `10 Q`.
    pub penalty_weight: Option<f64>,
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            lambda_schedule: log_spaced_lambdas(25, 1e-3, 1e3),
            restarts: 4,
            max_alternations: 60,
            tolerance: 1e-9,
            penalty_weight: None,
            seed: 0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_schedule.is_empty() {
            return Err(Error::InvalidArgument("lambda schedule must be nonempty".into()));
        }
        if self.lambda_schedule.iter().any(|&l| !(l.is_finite() && l >= 0.0)) {
            return Err(Error::InvalidArgument(
                "lambda weights must be finite and >= 0".into(),
            ));
        }
        if self.restarts < 1 || self.max_alternations < 1 {
            return Err(Error::InvalidArgument(
                "restarts and max_alternations must be >= 1".into(),
            ));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidArgument("tolerance must be > 0".into()));
        }
        if let Some(mu) = self.penalty_weight {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::InvalidArgument("penalty weight must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// `count` logarithmically spaced weights on `[lo, hi]`.
pub fn log_spaced_lambdas(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    assert!(count >= 1 && lo > 0.0 && hi >= lo);
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// One frontier entry: the weight that produced it, its costs, the
/// information-constraint slack (always 0 for causal designs), and the design.
#[derive(Debug, Clone)]
pub struct FrontierPoint<D> {
    pub lambda: f64,
    pub costs: CostPair,
    pub slack: f64,
    pub design: D,
}

/// Provenance carried alongside frontier points.
#[derive(Debug, Clone, Serialize)]
pub struct FrontierMeta {
    pub params: ModelParams,
    /// grid sizes (x0, u1, y1, u2)
    pub grid_points: [usize; 4],
    pub settings: SolverSettings,
    pub w1_size: Option<usize>,
    pub x0_aware_decoder: Option<bool>,
    pub warnings: Vec<String>,
}

/// A Pareto frontier: points sorted by `P`, forming their own lower convex
/// envelope.
#[derive(Debug, Clone)]
pub struct Frontier<D> {
    pub points: Vec<FrontierPoint<D>>,
    pub meta: FrontierMeta,
}

impl<D> Frontier<D> {
    pub fn cost_points(&self) -> Vec<CostPair> {
        self.points.iter().map(|p| p.costs).collect()
    }

    /// Envelope height at power `p`, extended flat beyond the swept range.
    pub fn envelope_s_at(&self, p: f64) -> f64 {
        envelope_value_at(&self.cost_points(), p)
    }
}

fn meta_for(model: &DiscreteModel, settings: &SolverSettings) -> FrontierMeta {
    FrontierMeta {
        params: model.params,
        grid_points: [
            model.x0_grid.len(),
            model.u1_grid.len(),
            model.y1_grid.len(),
            model.u2_grid.len(),
        ],
        settings: settings.clone(),
        w1_size: None,
        x0_aware_decoder: None,
        warnings: Vec::new(),
    }
}

// ---------------------------------------------------------------------------
// convex envelope
// ---------------------------------------------------------------------------

fn cross(o: CostPair, a: CostPair, b: CostPair) -> f64 {
    (a.p - o.p) * (b.s - o.s) - (a.s - o.s) * (b.p - o.p)
}

/// Indices of the lower-left Pareto convex hull of `points`, sorted by
/// ascending `P`. Ties resolve toward lower `P` first, then lower `S`;
/// collinear interior points are dropped.
pub fn lower_envelope_indices(points: &[CostPair]) -> Vec<usize> {
    assert!(!points.is_empty(), "envelope needs at least one point");
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i]
            .p
            .partial_cmp(&points[j].p)
            .unwrap()
            .then(points[i].s.partial_cmp(&points[j].s).unwrap())
            .then(i.cmp(&j))
    });
    // drop duplicates and dominated same-P points (keep lowest S per P)
    let mut cand: Vec<usize> = Vec::with_capacity(order.len());
    for &i in &order {
        if let Some(&last) = cand.last() {
            if points[i].p == points[last].p {
                continue; // same P, higher or equal S
            }
        }
        cand.push(i);
    }
    // monotone-chain lower hull
    let mut hull: Vec<usize> = Vec::with_capacity(cand.len());
    for &i in &cand {
        while hull.len() >= 2
            && cross(
                points[hull[hull.len() - 2]],
                points[hull[hull.len() - 1]],
                points[i],
            ) <= 0.0
        {
            hull.pop();
        }
        hull.push(i);
    }
    // Pareto prune: keep the strictly decreasing-S prefix
    let mut out: Vec<usize> = Vec::with_capacity(hull.len());
    for &i in &hull {
        if let Some(&last) = out.last() {
            if points[i].s >= points[last].s {
                break; // S stopped decreasing; the rest is dominated
            }
        }
        out.push(i);
    }
    out
}

/// Lower-left Pareto convex hull of a point set (see [`lower_envelope_indices`]).
pub fn convex_envelope(points: &[CostPair]) -> Vec<CostPair> {
    lower_envelope_indices(points)
        .into_iter()
        .map(|i| points[i])
        .collect()
}

/// Piecewise-linear envelope height at power `p`. Outside the swept `P` range
/// the envelope extends flat, which can only under-estimate the height, so
/// containment checks stay conservative.
pub fn envelope_value_at(envelope: &[CostPair], p: f64) -> f64 {
    assert!(!envelope.is_empty());
    if p <= envelope[0].p {
        return envelope[0].s;
    }
    if p >= envelope[envelope.len() - 1].p {
        return envelope[envelope.len() - 1].s;
    }
    for w in envelope.windows(2) {
        if p <= w[1].p {
            let t = (p - w[0].p) / (w[1].p - w[0].p);
            return w[0].s + t * (w[1].s - w[0].s);
        }
    }
    envelope[envelope.len() - 1].s
}

// ---------------------------------------------------------------------------
// causal operating-point search
// ---------------------------------------------------------------------------

fn snap(grid: &Grid, x: f64) -> usize {
    grid.nearest_index(x)
}

/// Candidate order for encoder enumeration: smaller `|u1|` first, then smaller
/// `u1`, so that exact objective ties resolve deterministically.
fn tie_break_order(grid: &Grid) -> Vec<usize> {
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (grid.value(i), grid.value(j));
        a.abs()
            .partial_cmp(&b.abs())
            .unwrap()
            .then(a.partial_cmp(&b).unwrap())
    });
    order
}

/// Conditional-mean decoder values for a deterministic encoder, snapped onto
/// the `u2` grid. Zero-probability `y1` rows map to the point nearest 0.
fn mmse_values_for(enc_idx: &[usize], model: &DiscreteModel) -> (Vec<usize>, Vec<f64>) {
    let ny = model.y1_grid.len();
    let mut num = vec![0.0; ny];
    let mut den = vec![0.0; ny];
    for (ix, &iu) in enc_idx.iter().enumerate() {
        let w = model.source_pmf()[ix];
        let x1 = model.x0_grid.value(ix) + model.u1_grid.value(iu);
        let row = model.channel_row(ix, iu);
        for iy in 0..ny {
            num[iy] += w * row[iy] * x1;
            den[iy] += w * row[iy];
        }
    }
    let mut idx = Vec::with_capacity(ny);
    let mut val = Vec::with_capacity(ny);
    for iy in 0..ny {
        let target = if den[iy] > 0.0 { num[iy] / den[iy] } else { 0.0 };
        let i = snap(&model.u2_grid, target);
        idx.push(i);
        val.push(model.u2_grid.value(i));
    }
    (idx, val)
}

/// Conditional-mean decoder for operating point `t` of an encoder kernel,
/// returned as point-mass rows over the `u2` grid (input dims `(1, n_y1)`).
/// `y1` rows with zero probability map to the grid point nearest 0.
pub fn mmse_decoder(enc: &Kernel, t: usize, model: &DiscreteModel) -> Result<Kernel> {
    let (nx, nu, ny) = (model.x0_grid.len(), model.u1_grid.len(), model.y1_grid.len());
    if enc.in_dims().first() != Some(&nx) || enc.out_dim() != nu {
        return Err(Error::Schema("encoder kernel does not match the model grids".into()));
    }
    let nt = enc.in_dims()[1];
    if t >= nt {
        return Err(Error::InvalidArgument(format!("t index {t} out of range {nt}")));
    }
    let mut num = vec![0.0; ny];
    let mut den = vec![0.0; ny];
    for ix in 0..nx {
        let w = model.source_pmf()[ix];
        let enc_row = enc.row(&[ix, t]);
        for iu in 0..nu {
            let we = w * enc_row[iu];
            if we == 0.0 {
                continue;
            }
            let x1 = model.x0_grid.value(ix) + model.u1_grid.value(iu);
            let row = model.channel_row(ix, iu);
            for iy in 0..ny {
                num[iy] += we * row[iy] * x1;
                den[iy] += we * row[iy];
            }
        }
    }
    let picks: Vec<usize> = (0..ny)
        .map(|iy| {
            let target = if den[iy] > 0.0 { num[iy] / den[iy] } else { 0.0 };
            snap(&model.u2_grid, target)
        })
        .collect();
    Ok(Kernel::point_mass(vec![1, ny], model.u2_grid.len(), move |idx| picks[idx[1]]))
}

/// Conditional-mean decoder for every operating point of a causal design.
pub fn mmse_decoder_full(design: &CausalDesign, model: &DiscreteModel) -> Result<Kernel> {
    let ny = model.y1_grid.len();
    let nv = model.u2_grid.len();
    let mut data = Vec::with_capacity(design.t_len() * ny * nv);
    for t in 0..design.t_len() {
        let dec_t = mmse_decoder(&design.enc, t, model)?;
        for iy in 0..ny {
            data.extend_from_slice(dec_t.row(&[0, iy]));
        }
    }
    Kernel::new(vec![design.t_len(), ny], nv, data)
}

fn causal_costs_for(enc_idx: &[usize], dec_val: &[f64], model: &DiscreteModel) -> CostPair {
    let ny = model.y1_grid.len();
    let mut p_cost = 0.0;
    let mut s_cost = 0.0;
    for (ix, &iu) in enc_idx.iter().enumerate() {
        let w = model.source_pmf()[ix];
        let u1 = model.u1_grid.value(iu);
        let x1 = model.x0_grid.value(ix) + u1;
        p_cost += w * u1 * u1;
        let row = model.channel_row(ix, iu);
        let mut s_row = 0.0;
        for iy in 0..ny {
            let d = x1 - dec_val[iy];
            s_row += row[iy] * d * d;
        }
        s_cost += w * s_row;
    }
    CostPair { p: p_cost, s: s_cost }
}

/// Result of one scalarized solve: costs, the `|T| = 1` design realizing them,
/// and the per-alternation objective trace (non-increasing by construction).
#[derive(Debug, Clone)]
pub struct OperatingPoint {
    pub costs: CostPair,
    pub design: CausalDesign,
    pub objective_trace: Vec<f64>,
}

impl OperatingPoint {
    pub fn objective(&self, lambda: f64) -> f64 {
        self.costs.s + lambda * self.costs.p
    }
}

/// Minimize `S + λP` over single operating points (`|T| = 1`) by alternating
/// the conditional-mean decoder with exact per-`x0` encoder enumeration; best
/// result over `settings.restarts` random initial encoders.
pub fn optimize_operating_point(
    model: &DiscreteModel,
    lambda: f64,
    settings: &SolverSettings,
) -> Result<OperatingPoint> {
    optimize_operating_point_seeded(model, lambda, settings, mix_seed(settings.seed, lambda.to_bits()))
}

/// Same as [`optimize_operating_point`] with an explicit work-item seed (used
/// by the frontier sweep, which derives one seed per schedule entry).
pub fn optimize_operating_point_seeded(
    model: &DiscreteModel,
    lambda: f64,
    settings: &SolverSettings,
    base_seed: u64,
) -> Result<OperatingPoint> {
    settings.validate()?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    let (nx, nu, ny) = (model.x0_grid.len(), model.u1_grid.len(), model.y1_grid.len());
    let order = tie_break_order(&model.u1_grid);
    let mut best: Option<OperatingPoint> = None;

    for restart in 0..settings.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(base_seed, restart as u64));
        // The first two restarts start from the canonical endpoint policies
        // (zero-forcing and zero-input); purely random initial encoders tend to
        // fall into constant-forcing local optima at small λ, which pin x1 to
        // a nonzero constant and waste power. The rest are random point masses.
        let mut enc_idx: Vec<usize> = match restart {
            0 => (0..nx)
                .map(|ix| model.u1_grid.nearest_index(-model.x0_grid.value(ix)))
                .collect(),
            1 => vec![model.u1_grid.nearest_index(0.0); nx],
            _ => (0..nx).map(|_| rng.random_range(0..nu)).collect(),
        };
        let mut trace = Vec::new();
        let mut prev_j = f64::INFINITY;
        let mut dec_val;
        loop {
            // decoder half-step (exact: the snapped conditional mean minimizes
            // S over grid-valued decoders)
            let (_, dv) = mmse_values_for(&enc_idx, model);
            dec_val = dv;
            // encoder half-step: exact per-x0 minimization over the u1 grid
            for ix in 0..nx {
                let x0 = model.x0_grid.value(ix);
                let mut best_cost = f64::INFINITY;
                let mut best_iu = enc_idx[ix];
                for &iu in &order {
                    let u1 = model.u1_grid.value(iu);
                    let x1 = x0 + u1;
                    let row = model.channel_row(ix, iu);
                    let mut c = lambda * u1 * u1;
                    for iy in 0..ny {
                        let d = x1 - dec_val[iy];
                        c += row[iy] * d * d;
                    }
                    if c < best_cost {
                        best_cost = c;
                        best_iu = iu;
                    }
                }
                enc_idx[ix] = best_iu;
            }
            let costs = causal_costs_for(&enc_idx, &dec_val, model);
            let j = costs.s + lambda * costs.p;
            trace.push(j);
            if prev_j - j < settings.tolerance || trace.len() >= settings.max_alternations {
                break;
            }
            prev_j = j;
        }
        // refresh the decoder for the final encoder
        let (dec_idx, dec_val) = mmse_values_for(&enc_idx, model);
        let costs = causal_costs_for(&enc_idx, &dec_val, model);
        trace.push(costs.s + lambda * costs.p);

        let enc_pick = enc_idx.clone();
        let design = CausalDesign::new(
            vec![1.0],
            Kernel::point_mass(vec![nx, 1], nu, move |idx| enc_pick[idx[0]]),
            Kernel::point_mass(vec![1, ny], model.u2_grid.len(), move |idx| dec_idx[idx[1]]),
        )?;
        let candidate = OperatingPoint { costs, design, objective_trace: trace };
        let better = match &best {
            None => true,
            Some(b) => candidate.objective(lambda) < b.objective(lambda),
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Sweep the λ schedule, then reduce the operating points to their lower
/// convex envelope. Chord interiors are realizable as `|T| = 2` mixtures of
/// the adjacent envelope designs (see [`crate::designs::mix_causal`]).
pub fn pareto_frontier_causal(
    model: &DiscreteModel,
    settings: &SolverSettings,
) -> Result<Frontier<CausalDesign>> {
    settings.validate()?;
    let solved: Vec<(f64, OperatingPoint)> = settings
        .lambda_schedule
        .par_iter()
        .enumerate()
        .map(|(i, &lambda)| {
            optimize_operating_point_seeded(
                model,
                lambda,
                settings,
                mix_seed(settings.seed, i as u64),
            )
            .map(|op| (lambda, op))
        })
        .collect::<Result<_>>()?;

    let costs: Vec<CostPair> = solved.iter().map(|(_, op)| op.costs).collect();
    let keep = lower_envelope_indices(&costs);
    let points = keep
        .into_iter()
        .map(|i| FrontierPoint {
            lambda: solved[i].0,
            costs: solved[i].1.costs,
            slack: 0.0,
            design: solved[i].1.design.clone(),
        })
        .collect();
    Ok(Frontier { points, meta: meta_for(model, settings) })
}

// ---------------------------------------------------------------------------
// feedback / noncausal region
// ---------------------------------------------------------------------------

/// Deterministic feedback-design state: one `u1` index per `(x0, w1)` row and
/// one `u2` index per `(x0, w1, y1)` row.
#[derive(Debug, Clone)]
struct FbState {
    p_w1: Vec<f64>,
    enc: Vec<usize>,
    dec: Vec<usize>,
}

#[derive(Clone, Copy)]
struct FbEval {
    costs: CostPair,
    slack: f64,
    objective: f64, // S + λP + μ max(0, -slack)^2
}

/// Full evaluation of a deterministic feedback state: costs, information
/// slack `I(W1;Y1) - I(U2;X0|W1,Y1)`, and the penalized objective.
fn fb_evaluate(state: &FbState, model: &DiscreteModel, lambda: f64, mu: f64) -> FbEval {
    let (nx, ny) = (model.x0_grid.len(), model.y1_grid.len());
    let nw = state.p_w1.len();
    let nv = model.u2_grid.len();

    let mut p_cost = 0.0;
    let mut s_cost = 0.0;
    let mut p_wy = vec![0.0; nw * ny];
    // joint over (x0 | w1, y1) rows, reused per (w1, y1) for the CMI term
    let mut p_xwy = vec![0.0; nx * nw * ny];

    for ix in 0..nx {
        let sx = model.source_pmf()[ix];
        let x0 = model.x0_grid.value(ix);
        for iw in 0..nw {
            let w = sx * state.p_w1[iw];
            if w == 0.0 {
                continue;
            }
            let iu = state.enc[ix * nw + iw];
            let u1 = model.u1_grid.value(iu);
            let x1 = x0 + u1;
            p_cost += w * u1 * u1;
            let row = model.channel_row(ix, iu);
            for iy in 0..ny {
                let m = w * row[iy];
                let u2 = model.u2_grid.value(state.dec[(ix * nw + iw) * ny + iy]);
                s_cost += m * (x1 - u2) * (x1 - u2);
                p_wy[iw * ny + iy] += m;
                p_xwy[(ix * nw + iw) * ny + iy] = m;
            }
        }
    }

    // I(W1; Y1)
    let mut p_w = vec![0.0; nw];
    let mut p_y = vec![0.0; ny];
    for iw in 0..nw {
        for iy in 0..ny {
            p_w[iw] += p_wy[iw * ny + iy];
            p_y[iy] += p_wy[iw * ny + iy];
        }
    }
    let mut budget = 0.0;
    for iw in 0..nw {
        for iy in 0..ny {
            let v = p_wy[iw * ny + iy];
            if v > 0.0 {
                budget += v * (v / (p_w[iw] * p_y[iy])).ln();
            }
        }
    }

    // I(U2; X0 | W1, Y1): the decoder is deterministic given (x0, w1, y1), so
    // the conditional entropy of U2 given (w1, y1) is the entropy of the
    // posterior over x0 pushed through the decoder map.
    let mut spend = 0.0;
    let mut push = vec![0.0; nv];
    for iw in 0..nw {
        for iy in 0..ny {
            let total = p_wy[iw * ny + iy];
            if total <= 0.0 {
                continue;
            }
            push.iter_mut().for_each(|v| *v = 0.0);
            for ix in 0..nx {
                let m = p_xwy[(ix * nw + iw) * ny + iy];
                if m > 0.0 {
                    push[state.dec[(ix * nw + iw) * ny + iy]] += m;
                }
            }
            let mut h = 0.0;
            for &v in push.iter() {
                if v > 0.0 {
                    h -= (v / total) * (v / total).ln();
                }
            }
            spend += total * h;
        }
    }

    let slack = budget - spend;
    let viol = (-slack).max(0.0);
    FbEval {
        costs: CostPair { p: p_cost, s: s_cost.max(0.0) },
        slack,
        objective: s_cost + lambda * p_cost + mu * viol * viol,
    }
}

/// Conditional-mean decoder step for a deterministic feedback state. With the
/// encoder deterministic, the x0-aware mean is exactly `x0 + u1(x0, w1)`; the
/// x0-blind variant averages over the posterior on `x0`.
fn fb_decoder_step(state: &mut FbState, model: &DiscreteModel, x0_aware: bool) {
    let (nx, ny) = (model.x0_grid.len(), model.y1_grid.len());
    let nw = state.p_w1.len();
    if x0_aware {
        for ix in 0..nx {
            let x0 = model.x0_grid.value(ix);
            for iw in 0..nw {
                let iu = state.enc[ix * nw + iw];
                let x1 = x0 + model.u1_grid.value(iu);
                let pick = snap(&model.u2_grid, x1);
                for iy in 0..ny {
                    state.dec[(ix * nw + iw) * ny + iy] = pick;
                }
            }
        }
    } else {
        for iw in 0..nw {
            let mut num = vec![0.0; ny];
            let mut den = vec![0.0; ny];
            for ix in 0..nx {
                let w = model.source_pmf()[ix];
                let iu = state.enc[ix * nw + iw];
                let x1 = model.x0_grid.value(ix) + model.u1_grid.value(iu);
                let row = model.channel_row(ix, iu);
                for iy in 0..ny {
                    num[iy] += w * row[iy] * x1;
                    den[iy] += w * row[iy];
                }
            }
            for iy in 0..ny {
                let target = if den[iy] > 0.0 { num[iy] / den[iy] } else { 0.0 };
                let pick = snap(&model.u2_grid, target);
                for ix in 0..nx {
                    state.dec[(ix * nw + iw) * ny + iy] = pick;
                }
            }
        }
    }
}

/// One penalized encoder sweep: per `(x0, w1)` row, commit the `u1` candidate
/// minimizing the full penalized objective with everything else held fixed.
fn fb_encoder_sweep(
    state: &mut FbState,
    model: &DiscreteModel,
    lambda: f64,
    mu: f64,
    order: &[usize],
    x0_aware: bool,
) {
    let nx = model.x0_grid.len();
    let nw = state.p_w1.len();
    let ny = model.y1_grid.len();
    for ix in 0..nx {
        for iw in 0..nw {
            let r = ix * nw + iw;
            let saved = state.enc[r];
            let mut best_iu = saved;
            let mut best_obj = f64::INFINITY;
            for &iu in order {
                state.enc[r] = iu;
                if x0_aware {
                    // keep the decoder row consistent with the candidate input
                    let x1 = model.x0_grid.value(ix) + model.u1_grid.value(iu);
                    let pick = snap(&model.u2_grid, x1);
                    for iy in 0..ny {
                        state.dec[r * ny + iy] = pick;
                    }
                }
                let eval = fb_evaluate(state, model, lambda, mu);
                if eval.objective < best_obj {
                    best_obj = eval.objective;
                    best_iu = iu;
                }
            }
            state.enc[r] = best_iu;
            if x0_aware {
                let x1 = model.x0_grid.value(ix) + model.u1_grid.value(best_iu);
                let pick = snap(&model.u2_grid, x1);
                for iy in 0..ny {
                    state.dec[r * ny + iy] = pick;
                }
            }
        }
    }
}

/// Best feasible state found along one penalized alternation run.
fn fb_alternate(
    mut state: FbState,
    model: &DiscreteModel,
    lambda: f64,
    mu0: f64,
    x0_aware: bool,
    settings: &SolverSettings,
) -> (Option<(FbState, FbEval)>, FbState) {
    let order = tie_break_order(&model.u1_grid);
    let mut feasible_best: Option<(FbState, FbEval)> = None;
    let mut mu = mu0;
    for _escalation in 0..=3 {
        let mut prev = f64::INFINITY;
        for _alt in 0..settings.max_alternations {
            fb_decoder_step(&mut state, model, x0_aware);
            fb_encoder_sweep(&mut state, model, lambda, mu, &order, x0_aware);
            let eval = fb_evaluate(&state, model, lambda, mu);
            if eval.slack >= -FEASIBILITY_TOL {
                let better = match &feasible_best {
                    None => true,
                    Some((_, b)) => eval.costs.s + lambda * eval.costs.p < b.costs.s + lambda * b.costs.p,
                };
                if better {
                    feasible_best = Some((state.clone(), eval));
                }
            }
            if prev - eval.objective < settings.tolerance {
                break;
            }
            prev = eval.objective;
        }
        let converged = fb_evaluate(&state, model, lambda, mu);
        if converged.slack >= -FEASIBILITY_TOL {
            break; // feasible convergence; no escalation needed
        }
        mu *= 2.0;
    }
    (feasible_best, state)
}

fn fb_state_to_design(state: &FbState, model: &DiscreteModel) -> Result<FeedbackNoncausalDesign> {
    let nx = model.x0_grid.len();
    let nw = state.p_w1.len();
    let ny = model.y1_grid.len();
    let enc = state.enc.clone();
    let dec = state.dec.clone();
    FeedbackNoncausalDesign::new(
        state.p_w1.clone(),
        Kernel::point_mass(vec![nx, nw], model.u1_grid.len(), move |idx| {
            enc[idx[0] * nw + idx[1]]
        }),
        Kernel::point_mass(vec![nx, nw, ny], model.u2_grid.len(), move |idx| {
            dec[(idx[0] * nw + idx[1]) * ny + idx[2]]
        }),
    )
}

/// Embed a `|T| = 1` causal design into the feedback family: the encoder
/// ignores `w1` and the decoder ignores `(x0, w1)`, which makes both
/// information terms vanish.
fn fb_embed_causal(op: &OperatingPoint, model: &DiscreteModel, w1_size: usize) -> FbState {
    let nx = model.x0_grid.len();
    let ny = model.y1_grid.len();
    let enc_of = |ix: usize| -> usize {
        let row = op.design.enc.row(&[ix, 0]);
        row.iter().position(|&v| v > 0.5).expect("point-mass encoder row")
    };
    let dec_of = |iy: usize| -> usize {
        let row = op.design.dec.row(&[0, iy]);
        row.iter().position(|&v| v > 0.5).expect("point-mass decoder row")
    };
    let mut enc = vec![0usize; nx * w1_size];
    for ix in 0..nx {
        for iw in 0..w1_size {
            enc[ix * w1_size + iw] = enc_of(ix);
        }
    }
    let mut dec = vec![0usize; nx * w1_size * ny];
    for ix in 0..nx {
        for iw in 0..w1_size {
            for iy in 0..ny {
                dec[(ix * w1_size + iw) * ny + iy] = dec_of(iy);
            }
        }
    }
    FbState {
        p_w1: vec![1.0 / w1_size as f64; w1_size],
        enc,
        dec,
    }
}

/// Scalarized sweep of the causal-encoder/noncausal-decoder-with-feedback
/// region: per weight, a penalized alternation over `(enc, dec)` with the
/// quadratic information-constraint penalty (weight `μ`, default `10 Q`,
/// doubled on infeasible convergence up to 3 times), plus two always-feasible
/// fallbacks (a causal warm start and an x0-blind decoder run). `W1` is fixed
/// to the uniform law over `w1_size` symbols. Only points with final slack
/// `>= -1e-6` are returned; weights with no feasible candidate are omitted
/// with a warning record in the frontier metadata.
pub fn solve_noncausal_feedback(
    model: &DiscreteModel,
    w1_size: usize,
    x0_aware_decoder: bool,
    settings: &SolverSettings,
) -> Result<Frontier<FeedbackNoncausalDesign>> {
    settings.validate()?;
    if w1_size < 1 {
        return Err(Error::InvalidArgument("w1_size must be >= 1".into()));
    }
    let mu0 = settings.penalty_weight.unwrap_or(10.0 * model.params.q);
    let nx = model.x0_grid.len();
    let nu = model.u1_grid.len();
    let ny = model.y1_grid.len();

    struct PerLambda {
        lambda: f64,
        best: Option<(FbState, FbEval)>,
    }

    let solved: Vec<PerLambda> = settings
        .lambda_schedule
        .par_iter()
        .enumerate()
        .map(|(i, &lambda)| -> Result<PerLambda> {
            let seed = mix_seed(settings.seed, i as u64);
            let mut candidates: Vec<(FbState, FbEval)> = Vec::new();

            // causal warm start, always feasible
            let causal = optimize_operating_point_seeded(model, lambda, settings, mix_seed(seed, 0xca))?;
            let embed = fb_embed_causal(&causal, model, w1_size);
            let eval = fb_evaluate(&embed, model, lambda, mu0);
            candidates.push((embed.clone(), eval));

            for restart in 0..settings.restarts {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, restart as u64));
                let init = FbState {
                    p_w1: vec![1.0 / w1_size as f64; w1_size],
                    enc: (0..nx * w1_size).map(|_| rng.random_range(0..nu)).collect(),
                    dec: vec![0; nx * w1_size * ny],
                };
                // penalized run in the requested decoder mode
                let (found, final_state) =
                    fb_alternate(init.clone(), model, lambda, mu0, x0_aware_decoder, settings);
                if let Some(c) = found {
                    candidates.push(c);
                }
                if x0_aware_decoder {
                    // x0-blind fallback from both the random init and wherever
                    // the penalized run ended; feasible by construction
                    for start in [init, final_state] {
                        let (found, _) =
                            fb_alternate(start, model, lambda, mu0, false, settings);
                        if let Some(c) = found {
                            candidates.push(c);
                        }
                    }
                }
            }

            let best = candidates
                .into_iter()
                .filter(|(_, e)| e.slack >= -FEASIBILITY_TOL)
                .min_by(|(_, a), (_, b)| {
                    (a.costs.s + lambda * a.costs.p)
                        .partial_cmp(&(b.costs.s + lambda * b.costs.p))
                        .unwrap()
                });
            Ok(PerLambda { lambda, best })
        })
        .collect::<Result<_>>()?;

    let mut warnings = Vec::new();
    let mut kept: Vec<(f64, FbState, FbEval)> = Vec::new();
    for pl in solved {
        match pl.best {
            Some((state, eval)) => kept.push((pl.lambda, state, eval)),
            None => warnings.push(format!(
                "lambda {} omitted: no feasible candidate (slack < -{FEASIBILITY_TOL:e})",
                pl.lambda
            )),
        }
    }
    if kept.is_empty() {
        return Err(Error::InvalidArgument(
            "no feasible operating point at any lambda".into(),
        ));
    }

    let costs: Vec<CostPair> = kept.iter().map(|(_, _, e)| e.costs).collect();
    let keep_idx = lower_envelope_indices(&costs);
    let mut points = Vec::with_capacity(keep_idx.len());
    for i in keep_idx {
        let (lambda, state, eval) = &kept[i];
        let design = fb_state_to_design(state, model)?;
        // cross-check the factored cost route against the sweep's evaluator
        let check = feedback_cost(&design, model)?;
        debug_assert!((check.p - eval.costs.p).abs() < 1e-9);
        debug_assert!((check.s - eval.costs.s).abs() < 1e-9);
        points.push(FrontierPoint {
            lambda: *lambda,
            costs: eval.costs,
            slack: eval.slack,
            design,
        });
    }
    let mut meta = meta_for(model, settings);
    meta.w1_size = Some(w1_size);
    meta.x0_aware_decoder = Some(x0_aware_decoder);
    meta.warnings = warnings;
    Ok(Frontier { points, meta })
}
