//! Factorized single-letter strategies and their assembled joint laws.
//!
//! Two families are represented. A [`CausalDesign`] carries a time-sharing
//! variable `T` (at most two symbols), an encoder kernel `P(u1 | x0, t)`, and a
//! decoder kernel `P(u2 | t, y1)`; its joint law factors as
//! `source · pT · enc · channel · dec`. A [`FeedbackNoncausalDesign`] replaces
//! `T` by an auxiliary `W1` of configurable size and lets the decoder condition
//! on the source symbol as well: `P(u2 | x0, w1, y1)`.
//!
//! Kernels are stored row-stochastic over their output grid; deterministic
//! policies are point masses, so stochastic and deterministic strategies get
//! uniform treatment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{self, JointPmf};
use crate::model::{Axis, CostPair, DiscreteModel, ModelParams, PMF_TOL};

/// Row-stochastic kernel: for each multi-index over `in_dims`, a pmf of length
/// `out_dim`. Rows are stored row-major, the last input axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    in_dims: Vec<usize>,
    out_dim: usize,
    data: Vec<f64>,
}

impl Kernel {
    pub fn new(in_dims: Vec<usize>, out_dim: usize, data: Vec<f64>) -> Result<Self> {
        if in_dims.is_empty() || in_dims.contains(&0) || out_dim == 0 {
            return Err(Error::Schema("kernel dimensions must be nonzero".into()));
        }
        let rows: usize = in_dims.iter().product();
        if rows * out_dim != data.len() {
            return Err(Error::Schema(format!(
                "kernel expects {} values, got {}",
                rows * out_dim,
                data.len()
            )));
        }
        for r in 0..rows {
            let row = &data[r * out_dim..(r + 1) * out_dim];
            if row.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(Error::InvalidPmf(format!("kernel row {r} has invalid entries")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > PMF_TOL {
                return Err(Error::InvalidPmf(format!(
                    "kernel row {r} sums to {total}, must be 1"
                )));
            }
        }
        Ok(Self { in_dims, out_dim, data })
    }

    /// Deterministic kernel: `pick` maps each input multi-index to an output
    /// index receiving the whole mass.
    pub fn point_mass(in_dims: Vec<usize>, out_dim: usize, pick: impl Fn(&[usize]) -> usize) -> Self {
        let rows: usize = in_dims.iter().product();
        let mut data = vec![0.0; rows * out_dim];
        let mut idx = vec![0usize; in_dims.len()];
        for r in 0..rows {
            let o = pick(&idx);
            assert!(o < out_dim, "point mass outside output range");
            data[r * out_dim + o] = 1.0;
            for k in (0..in_dims.len()).rev() {
                idx[k] += 1;
                if idx[k] < in_dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self { in_dims, out_dim, data }
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn n_rows(&self) -> usize {
        self.in_dims.iter().product()
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.in_dims.len());
        let mut flat = 0;
        for (k, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.in_dims[k]);
            flat = flat * self.in_dims[k] + i;
        }
        flat
    }

    pub fn row(&self, idx: &[usize]) -> &[f64] {
        self.row_flat(self.flat_index(idx))
    }

    pub fn row_flat(&self, flat: usize) -> &[f64] {
        &self.data[flat * self.out_dim..(flat + 1) * self.out_dim]
    }

    /// Inverse-CDF sample from a row given a uniform draw in `[0, 1)`.
    pub fn sample_row(&self, idx: &[usize], u: f64) -> usize {
        let row = self.row(idx);
        let mut acc = 0.0;
        for (i, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        row.len() - 1
    }
}

fn check_pmf(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidPmf(format!("{what} must be nonempty")));
    }
    if p.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidPmf(format!("{what} has invalid entries")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PMF_TOL {
        return Err(Error::InvalidPmf(format!("{what} sums to {total}, must be 1")));
    }
    Ok(())
}

/// Single-letter strategy with causal encoder and causal decoder.
///
/// `p_t` is the time-sharing pmf (`|T| <= 2`, the support-lemma bound; larger
/// mixtures are expressed through the frontier's convex envelope instead),
/// `enc` maps `(x0, t)` rows to pmfs over the `u1` grid, and `dec` maps
/// `(t, y1)` rows to pmfs over the `u2` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalDesign {
    pub p_t: Vec<f64>,
    pub enc: Kernel,
    pub dec: Kernel,
}

impl CausalDesign {
    pub fn new(p_t: Vec<f64>, enc: Kernel, dec: Kernel) -> Result<Self> {
        if p_t.is_empty() || p_t.len() > 2 {
            return Err(Error::InvalidArgument(format!(
                "|T| must be 1 or 2, got {}",
                p_t.len()
            )));
        }
        check_pmf(&p_t, "p_t")?;
        if enc.in_dims().len() != 2 || enc.in_dims()[1] != p_t.len() {
            return Err(Error::Schema("encoder kernel must have input dims (x0, t)".into()));
        }
        if dec.in_dims().len() != 2 || dec.in_dims()[0] != p_t.len() {
            return Err(Error::Schema("decoder kernel must have input dims (t, y1)".into()));
        }
        Ok(Self { p_t, enc, dec })
    }

    pub fn t_len(&self) -> usize {
        self.p_t.len()
    }
}

/// Single-letter strategy with causal encoder and noncausal decoder under
/// channel feedback: auxiliary `W1` (any size), encoder `P(u1 | x0, w1)`,
/// decoder `P(u2 | x0, w1, y1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackNoncausalDesign {
    pub p_w1: Vec<f64>,
    pub enc: Kernel,
    pub dec: Kernel,
}

impl FeedbackNoncausalDesign {
    pub fn new(p_w1: Vec<f64>, enc: Kernel, dec: Kernel) -> Result<Self> {
        check_pmf(&p_w1, "p_w1")?;
        if enc.in_dims().len() != 2 || enc.in_dims()[1] != p_w1.len() {
            return Err(Error::Schema("encoder kernel must have input dims (x0, w1)".into()));
        }
        if dec.in_dims().len() != 3 || dec.in_dims()[1] != p_w1.len() {
            return Err(Error::Schema(
                "decoder kernel must have input dims (x0, w1, y1)".into(),
            ));
        }
        if enc.in_dims()[0] != dec.in_dims()[0] {
            return Err(Error::Schema("encoder and decoder disagree on the x0 size".into()));
        }
        Ok(Self { p_w1, enc, dec })
    }

    pub fn w1_len(&self) -> usize {
        self.p_w1.len()
    }
}

fn check_causal_shapes(design: &CausalDesign, model: &DiscreteModel) -> Result<()> {
    let (nx, nu, ny, nv) = (
        model.x0_grid.len(),
        model.u1_grid.len(),
        model.y1_grid.len(),
        model.u2_grid.len(),
    );
    if design.enc.in_dims() != [nx, design.t_len()] || design.enc.out_dim() != nu {
        return Err(Error::Schema("encoder kernel does not match the model grids".into()));
    }
    if design.dec.in_dims() != [design.t_len(), ny] || design.dec.out_dim() != nv {
        return Err(Error::Schema("decoder kernel does not match the model grids".into()));
    }
    Ok(())
}

fn check_feedback_shapes(design: &FeedbackNoncausalDesign, model: &DiscreteModel) -> Result<()> {
    let (nx, nu, ny, nv) = (
        model.x0_grid.len(),
        model.u1_grid.len(),
        model.y1_grid.len(),
        model.u2_grid.len(),
    );
    if design.enc.in_dims() != [nx, design.w1_len()] || design.enc.out_dim() != nu {
        return Err(Error::Schema("encoder kernel does not match the model grids".into()));
    }
    if design.dec.in_dims() != [nx, design.w1_len(), ny] || design.dec.out_dim() != nv {
        return Err(Error::Schema("decoder kernel does not match the model grids".into()));
    }
    Ok(())
}

/// Joint law of a causal design over `(X0, T, U1, Y1, U2)`:
/// `source(x0) pT(t) enc(u1|x0,t) chan(y1|x0,u1) dec(u2|t,y1)`.
pub fn assemble_joint_causal(design: &CausalDesign, model: &DiscreteModel) -> Result<JointPmf> {
    check_causal_shapes(design, model)?;
    let (nx, nt, nu, ny, nv) = (
        model.x0_grid.len(),
        design.t_len(),
        model.u1_grid.len(),
        model.y1_grid.len(),
        model.u2_grid.len(),
    );
    let mut data = vec![0.0; nx * nt * nu * ny * nv];
    let mut flat = 0;
    for ix in 0..nx {
        let sx = model.source_pmf()[ix];
        for it in 0..nt {
            let st = sx * design.p_t[it];
            let enc_row = design.enc.row(&[ix, it]);
            for iu in 0..nu {
                let se = st * enc_row[iu];
                let chan_row = model.channel_row(ix, iu);
                for iy in 0..ny {
                    let sc = se * chan_row[iy];
                    let dec_row = design.dec.row(&[it, iy]);
                    for iv in 0..nv {
                        data[flat] = sc * dec_row[iv];
                        flat += 1;
                    }
                }
            }
        }
    }
    JointPmf::new(
        vec![(Axis::X0, nx), (Axis::T, nt), (Axis::U1, nu), (Axis::Y1, ny), (Axis::U2, nv)],
        data,
    )
}

/// Joint law of a feedback design over `(X0, W1, U1, Y1, U2)`:
/// `source(x0) pW1(w1) enc(u1|x0,w1) chan(y1|x0,u1) dec(u2|x0,w1,y1)`.
pub fn assemble_joint_feedback(
    design: &FeedbackNoncausalDesign,
    model: &DiscreteModel,
) -> Result<JointPmf> {
    check_feedback_shapes(design, model)?;
    let (nx, nw, nu, ny, nv) = (
        model.x0_grid.len(),
        design.w1_len(),
        model.u1_grid.len(),
        model.y1_grid.len(),
        model.u2_grid.len(),
    );
    let mut data = vec![0.0; nx * nw * nu * ny * nv];
    let mut flat = 0;
    for ix in 0..nx {
        let sx = model.source_pmf()[ix];
        for iw in 0..nw {
            let sw = sx * design.p_w1[iw];
            let enc_row = design.enc.row(&[ix, iw]);
            for iu in 0..nu {
                let se = sw * enc_row[iu];
                let chan_row = model.channel_row(ix, iu);
                for iy in 0..ny {
                    let sc = se * chan_row[iy];
                    let dec_row = design.dec.row(&[ix, iw, iy]);
                    for iv in 0..nv {
                        data[flat] = sc * dec_row[iv];
                        flat += 1;
                    }
                }
            }
        }
    }
    JointPmf::new(
        vec![(Axis::X0, nx), (Axis::W1, nw), (Axis::U1, nu), (Axis::Y1, ny), (Axis::U2, nv)],
        data,
    )
}

/// Expected costs of a causal design, computed from the factors without
/// materializing the joint tensor. Decoder moments are precomputed per
/// `(t, y1)` row, so the sum runs over `(x0, t, u1, y1)` only.
pub fn causal_cost(design: &CausalDesign, model: &DiscreteModel) -> Result<CostPair> {
    check_causal_shapes(design, model)?;
    let (nx, nt, nu, ny) = (
        model.x0_grid.len(),
        design.t_len(),
        model.u1_grid.len(),
        model.y1_grid.len(),
    );
    // decoder first and second moments per (t, y1)
    let mut dec_m1 = vec![0.0; nt * ny];
    let mut dec_m2 = vec![0.0; nt * ny];
    for it in 0..nt {
        for iy in 0..ny {
            let row = design.dec.row(&[it, iy]);
            let mut m1 = 0.0;
            let mut m2 = 0.0;
            for (iv, &p) in row.iter().enumerate() {
                let v = model.u2_grid.value(iv);
                m1 += p * v;
                m2 += p * v * v;
            }
            dec_m1[it * ny + iy] = m1;
            dec_m2[it * ny + iy] = m2;
        }
    }
    let mut p_cost = 0.0;
    let mut s_cost = 0.0;
    for ix in 0..nx {
        let sx = model.source_pmf()[ix];
        let x0 = model.x0_grid.value(ix);
        for it in 0..nt {
            let st = sx * design.p_t[it];
            if st == 0.0 {
                continue;
            }
            let enc_row = design.enc.row(&[ix, it]);
            for iu in 0..nu {
                let se = st * enc_row[iu];
                if se == 0.0 {
                    continue;
                }
                let u1 = model.u1_grid.value(iu);
                let x1 = x0 + u1;
                p_cost += se * u1 * u1;
                let chan_row = model.channel_row(ix, iu);
                for iy in 0..ny {
                    let w = se * chan_row[iy];
                    s_cost += w * (x1 * x1 - 2.0 * x1 * dec_m1[it * ny + iy] + dec_m2[it * ny + iy]);
                }
            }
        }
    }
    CostPair::new(p_cost, s_cost.max(0.0))
}

/// Expected costs of a feedback design; same factoring as [`causal_cost`]
/// with decoder moments per `(x0, w1, y1)` row computed on the fly.
pub fn feedback_cost(design: &FeedbackNoncausalDesign, model: &DiscreteModel) -> Result<CostPair> {
    check_feedback_shapes(design, model)?;
    let (nx, nw, nu, ny) = (
        model.x0_grid.len(),
        design.w1_len(),
        model.u1_grid.len(),
        model.y1_grid.len(),
    );
    let mut p_cost = 0.0;
    let mut s_cost = 0.0;
    for ix in 0..nx {
        let sx = model.source_pmf()[ix];
        let x0 = model.x0_grid.value(ix);
        for iw in 0..nw {
            let sw = sx * design.p_w1[iw];
            if sw == 0.0 {
                continue;
            }
            // decoder moments for this (x0, w1) slice
            let mut dec_m1 = vec![0.0; ny];
            let mut dec_m2 = vec![0.0; ny];
            for iy in 0..ny {
                let row = design.dec.row(&[ix, iw, iy]);
                for (iv, &p) in row.iter().enumerate() {
                    let v = model.u2_grid.value(iv);
                    dec_m1[iy] += p * v;
                    dec_m2[iy] += p * v * v;
                }
            }
            let enc_row = design.enc.row(&[ix, iw]);
            for iu in 0..nu {
                let se = sw * enc_row[iu];
                if se == 0.0 {
                    continue;
                }
                let u1 = model.u1_grid.value(iu);
                let x1 = x0 + u1;
                p_cost += se * u1 * u1;
                let chan_row = model.channel_row(ix, iu);
                for iy in 0..ny {
                    let w = se * chan_row[iy];
                    s_cost += w * (x1 * x1 - 2.0 * x1 * dec_m1[iy] + dec_m2[iy]);
                }
            }
        }
    }
    CostPair::new(p_cost, s_cost.max(0.0))
}

/// Time-share two single-operating-point designs into one `|T| = 2` design.
pub fn mix_causal(d1: &CausalDesign, d2: &CausalDesign, theta: f64) -> Result<CausalDesign> {
    if d1.t_len() != 1 || d2.t_len() != 1 {
        return Err(Error::InvalidArgument(
            "mixing expects two |T| = 1 designs".into(),
        ));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!("theta must be in [0,1], got {theta}")));
    }
    let nx = d1.enc.in_dims()[0];
    let nu = d1.enc.out_dim();
    let ny = d1.dec.in_dims()[1];
    let nv = d1.dec.out_dim();
    if d2.enc.in_dims()[0] != nx || d2.enc.out_dim() != nu || d2.dec.in_dims()[1] != ny || d2.dec.out_dim() != nv
    {
        return Err(Error::Schema("designs live on different grids".into()));
    }
    let mut enc_data = vec![0.0; nx * 2 * nu];
    for ix in 0..nx {
        enc_data[(ix * 2) * nu..(ix * 2 + 1) * nu].copy_from_slice(d1.enc.row(&[ix, 0]));
        enc_data[(ix * 2 + 1) * nu..(ix * 2 + 2) * nu].copy_from_slice(d2.enc.row(&[ix, 0]));
    }
    let mut dec_data = vec![0.0; 2 * ny * nv];
    for iy in 0..ny {
        dec_data[iy * nv..(iy + 1) * nv].copy_from_slice(d1.dec.row(&[0, iy]));
        dec_data[(ny + iy) * nv..(ny + iy + 1) * nv].copy_from_slice(d2.dec.row(&[0, iy]));
    }
    CausalDesign::new(
        vec![theta, 1.0 - theta],
        Kernel::new(vec![nx, 2], nu, enc_data)?,
        Kernel::new(vec![2, ny], nv, dec_data)?,
    )
}

/// Residuals of the structural properties a causal joint law must satisfy:
/// independence of `X0` and `T`, the memoryless-channel chain, and the
/// causal-decoder chain.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MarkovReport {
    /// `max |p(x0,t) - p(x0) p(t)|` (or `(x0, w1)` for feedback joints).
    pub independence_residual: f64,
    /// `I(Y1; T | X0, U1)` — the channel output depends on `(x0, u1)` only.
    pub channel_residual: f64,
    /// `I(U2; X0,U1 | T, Y1)` — the decoder sees only `(t, y1)`; for feedback
    /// joints, `I(U2; U1 | X0, W1, Y1)`.
    pub decoder_residual: f64,
}

impl MarkovReport {
    pub fn max_residual(&self) -> f64 {
        self.independence_residual
            .max(self.channel_residual)
            .max(self.decoder_residual)
    }
}

fn independence_residual(joint: &JointPmf, a: Axis, b: Axis) -> Result<f64> {
    let m_ab = joint.marginalize(&[a, b])?;
    let m_a = m_ab.marginalize(&[a])?;
    let m_b = m_ab.marginalize(&[b])?;
    let nb = m_b.data().len();
    let mut worst = 0.0f64;
    for (i, &pa) in m_a.data().iter().enumerate() {
        for (j, &pb) in m_b.data().iter().enumerate() {
            let d = (m_ab.data()[i * nb + j] - pa * pb).abs();
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

/// Markov validation for joints over `(X0, T, U1, Y1, U2)`. All three residuals
/// are `<= 1e-9` for any joint produced by [`assemble_joint_causal`]; the
/// channel chain is stated on `Y1` because `X1` is deterministic given
/// `(X0, U1)`.
pub fn validate_markov_causal(joint: &JointPmf) -> Result<MarkovReport> {
    for a in [Axis::X0, Axis::T, Axis::U1, Axis::Y1, Axis::U2] {
        if joint.axis_position(a).is_none() {
            return Err(Error::Schema(format!("causal joint needs axis {a}")));
        }
    }
    Ok(MarkovReport {
        independence_residual: independence_residual(joint, Axis::X0, Axis::T)?,
        channel_residual: measures::conditional_mutual_information(
            joint,
            &[Axis::Y1],
            &[Axis::T],
            &[Axis::X0, Axis::U1],
        )?,
        decoder_residual: measures::conditional_mutual_information(
            joint,
            &[Axis::U2],
            &[Axis::X0, Axis::U1],
            &[Axis::T, Axis::Y1],
        )?,
    })
}

/// Markov validation for joints over `(X0, W1, U1, Y1, U2)`: `X0` independent
/// of `W1`, the channel chain, and `I(U2; U1 | X0, W1, Y1) = 0`.
pub fn validate_markov_feedback(joint: &JointPmf) -> Result<MarkovReport> {
    for a in [Axis::X0, Axis::W1, Axis::U1, Axis::Y1, Axis::U2] {
        if joint.axis_position(a).is_none() {
            return Err(Error::Schema(format!("feedback joint needs axis {a}")));
        }
    }
    Ok(MarkovReport {
        independence_residual: independence_residual(joint, Axis::X0, Axis::W1)?,
        channel_residual: measures::conditional_mutual_information(
            joint,
            &[Axis::Y1],
            &[Axis::W1],
            &[Axis::X0, Axis::U1],
        )?,
        decoder_residual: measures::conditional_mutual_information(
            joint,
            &[Axis::U2],
            &[Axis::U1],
            &[Axis::X0, Axis::W1, Axis::Y1],
        )?,
    })
}

/// Serialized design document: grids plus row-major kernels, self-contained
/// for replay by the simulator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DesignFile {
    Causal {
        params: ModelParams,
        x0_grid: Vec<f64>,
        u1_grid: Vec<f64>,
        y1_grid: Vec<f64>,
        u2_grid: Vec<f64>,
        p_t: Vec<f64>,
        /// row-major over (x0, t), rows over the u1 grid
        enc: Vec<f64>,
        /// row-major over (t, y1), rows over the u2 grid
        dec: Vec<f64>,
    },
    FeedbackNoncausal {
        params: ModelParams,
        x0_grid: Vec<f64>,
        u1_grid: Vec<f64>,
        y1_grid: Vec<f64>,
        u2_grid: Vec<f64>,
        p_w1: Vec<f64>,
        /// row-major over (x0, w1), rows over the u1 grid
        enc: Vec<f64>,
        /// row-major over (x0, w1, y1), rows over the u2 grid
        dec: Vec<f64>,
    },
}

impl DesignFile {
    pub fn from_causal(design: &CausalDesign, model: &DiscreteModel) -> Self {
        DesignFile::Causal {
            params: model.params,
            x0_grid: model.x0_grid.points().to_vec(),
            u1_grid: model.u1_grid.points().to_vec(),
            y1_grid: model.y1_grid.points().to_vec(),
            u2_grid: model.u2_grid.points().to_vec(),
            p_t: design.p_t.clone(),
            enc: design.enc.data.clone(),
            dec: design.dec.data.clone(),
        }
    }

    pub fn from_feedback(design: &FeedbackNoncausalDesign, model: &DiscreteModel) -> Self {
        DesignFile::FeedbackNoncausal {
            params: model.params,
            x0_grid: model.x0_grid.points().to_vec(),
            u1_grid: model.u1_grid.points().to_vec(),
            y1_grid: model.y1_grid.points().to_vec(),
            u2_grid: model.u2_grid.points().to_vec(),
            p_w1: design.p_w1.clone(),
            enc: design.enc.data.clone(),
            dec: design.dec.data.clone(),
        }
    }

    /// Rebuild the discrete model and causal design, re-validating everything.
    pub fn into_causal(self) -> Result<(DiscreteModel, CausalDesign)> {
        match self {
            DesignFile::Causal {
                params,
                x0_grid,
                u1_grid,
                y1_grid,
                u2_grid,
                p_t,
                enc,
                dec,
            } => {
                let params = ModelParams::new(params.q, params.n)?;
                let model = DiscreteModel::build(
                    params,
                    crate::model::Grid::new(Axis::X0, x0_grid)?,
                    crate::model::Grid::new(Axis::U1, u1_grid)?,
                    crate::model::Grid::new(Axis::Y1, y1_grid)?,
                    crate::model::Grid::new(Axis::U2, u2_grid)?,
                )?;
                let nt = p_t.len();
                let design = CausalDesign::new(
                    p_t,
                    Kernel::new(vec![model.x0_grid.len(), nt], model.u1_grid.len(), enc)?,
                    Kernel::new(vec![nt, model.y1_grid.len()], model.u2_grid.len(), dec)?,
                )?;
                check_causal_shapes(&design, &model)?;
                Ok((model, design))
            }
            DesignFile::FeedbackNoncausal { .. } => Err(Error::Schema(
                "expected a causal design document, found a feedback one".into(),
            )),
        }
    }

    /// Rebuild the discrete model and feedback design, re-validating everything.
    pub fn into_feedback(self) -> Result<(DiscreteModel, FeedbackNoncausalDesign)> {
        match self {
            DesignFile::FeedbackNoncausal {
                params,
                x0_grid,
                u1_grid,
                y1_grid,
                u2_grid,
                p_w1,
                enc,
                dec,
            } => {
                let params = ModelParams::new(params.q, params.n)?;
                let model = DiscreteModel::build(
                    params,
                    crate::model::Grid::new(Axis::X0, x0_grid)?,
                    crate::model::Grid::new(Axis::U1, u1_grid)?,
                    crate::model::Grid::new(Axis::Y1, y1_grid)?,
                    crate::model::Grid::new(Axis::U2, u2_grid)?,
                )?;
                let nw = p_w1.len();
                let (nx, ny) = (model.x0_grid.len(), model.y1_grid.len());
                let design = FeedbackNoncausalDesign::new(
                    p_w1,
                    Kernel::new(vec![nx, nw], model.u1_grid.len(), enc)?,
                    Kernel::new(vec![nx, nw, ny], model.u2_grid.len(), dec)?,
                )?;
                check_feedback_shapes(&design, &model)?;
                Ok((model, design))
            }
            DesignFile::Causal { .. } => Err(Error::Schema(
                "expected a feedback design document, found a causal one".into(),
            )),
        }
    }
}
