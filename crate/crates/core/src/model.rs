//! Continuous Gaussian problem definition and its discretization.
//!
//! The instance is a zero-mean Gaussian source of variance `Q` driving a
//! two-controller chain: the first controller adds an input `u1` to the state
//! (`x1 = x0 + u1`), the second observes `y1 = x1 + z1` through additive
//! Gaussian noise of variance `N` and produces an estimate `u2`. Costs are the
//! input power `P = E[u1^2]` and the estimation error `S = E[(x1 - u2)^2]`.
//!
//! Discretization puts each alphabet on a finite grid; probability mass is
//! binned at midpoints, with the outer bins absorbing the tails so every pmf
//! sums to one without renormalization. The interim state `x1` never gets its
//! own axis: it is always the deterministic value `x0 + u1`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::measures::JointPmf;

/// Tolerance for pmf/kernel row normalization checks.
pub const PMF_TOL: f64 = 1e-12;

/// Continuous problem instance: source variance `Q` and channel-noise variance `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub q: f64,
    pub n: f64,
}

impl ModelParams {
    pub fn new(q: f64, n: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "source variance q must be finite and > 0, got {q}"
            )));
        }
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise variance n must be finite and > 0, got {n}"
            )));
        }
        Ok(Self { q, n })
    }
}

/// Axis labels for grids and joint tensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X0,
    U1,
    Y1,
    U2,
    T,
    W1,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Axis::X0 => "X0",
            Axis::U1 => "U1",
            Axis::Y1 => "Y1",
            Axis::U2 => "U2",
            Axis::T => "T",
            Axis::W1 => "W1",
        };
        f.write_str(s)
    }
}

/// A strictly increasing finite set of real points labelling one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    label: Axis,
    points: Vec<f64>,
}

impl Grid {
    pub fn new(label: Axis, points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "axis {label} needs at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid(format!("axis {label} has non-finite points")));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(format!(
                "axis {label} points must be strictly increasing"
            )));
        }
        Ok(Self { label, points })
    }

    /// Uniform grid of `count` points on `[lo, hi]`, endpoints included.
    pub fn uniform(label: Axis, lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 || lo >= hi {
            return Err(Error::InvalidGrid(format!(
                "axis {label}: need count >= 2 and lo < hi, got count={count}, lo={lo}, hi={hi}"
            )));
        }
        let step = (hi - lo) / (count - 1) as f64;
        let points = (0..count).map(|i| lo + step * i as f64).collect();
        Self::new(label, points)
    }

    /// Midtread uniform grid of `count` points with spacing `2 span / count`:
    /// `(i - count/2) * step`. Zero is always a grid point, so zero-input and
    /// zero-estimate policies have an exact representation; axes built with
    /// the same span share one lattice, which keeps zero-forcing (`u1 = -x0`)
    /// exact as well.
    pub fn uniform_midtread(label: Axis, span: f64, count: usize) -> Result<Self> {
        if count < 2 || !(span > 0.0 && span.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "axis {label}: need count >= 2 and span > 0, got count={count}, span={span}"
            )));
        }
        let step = 2.0 * span / count as f64;
        let half = (count / 2) as f64;
        let points = (0..count).map(|i| (i as f64 - half) * step).collect();
        Self::new(label, points)
    }

    pub fn label(&self) -> Axis {
        self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // at least 2 points by construction
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.points[idx]
    }

    /// Index of the grid point nearest to `x`, clamping out-of-range values to
    /// the edges. Exact midpoints resolve to the smaller point.
    pub fn nearest_index(&self, x: f64) -> usize {
        let pts = &self.points;
        // first index with pts[i] >= x
        let hi = pts.partition_point(|&p| p < x);
        if hi == 0 {
            return 0;
        }
        if hi == pts.len() {
            return pts.len() - 1;
        }
        let lo = hi - 1;
        if x - pts[lo] <= pts[hi] - x {
            lo
        } else {
            hi
        }
    }

    /// Bin edges at midpoints between consecutive points (length `len()-1`).
    fn inner_edges(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Gaussian `N(mean, var)` probability masses binned onto `grid`: bin edges sit
/// at midpoints between grid points and the outer bins extend to infinity, so
/// the masses sum to one up to rounding.
pub fn gaussian_bin_masses(mean: f64, var: f64, grid: &Grid) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let sigma = var.sqrt();
    let edges = grid.inner_edges();
    let mut cdf = Vec::with_capacity(edges.len() + 2);
    cdf.push(0.0);
    for &e in &edges {
        cdf.push(normal.cdf((e - mean) / sigma));
    }
    cdf.push(1.0);
    cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect()
}

/// Discretized source law: entry `i` is the Gaussian mass of bin `i` under
/// `N(0, Q)` with bin edges at grid midpoints and tail-absorbing outer bins.
pub fn build_source_pmf(params: ModelParams, grid: &Grid) -> Result<Vec<f64>> {
    if grid.len() < 2 {
        return Err(Error::InvalidGrid("source grid needs at least 2 points".into()));
    }
    Ok(gaussian_bin_masses(0.0, params.q, grid))
}

/// Discretized channel: for each `(x0, u1)` grid pair, the binned law of
/// `N(x0 + u1, N)` over `y1_grid`. Returned row-major as
/// `kernel[(ix0 * n_u1 + iu1) * n_y1 + iy1]`.
pub fn build_channel_kernel(
    params: ModelParams,
    x0_grid: &Grid,
    u1_grid: &Grid,
    y1_grid: &Grid,
) -> Result<Vec<f64>> {
    let (nx, nu, ny) = (x0_grid.len(), u1_grid.len(), y1_grid.len());
    if nx < 2 || nu < 2 || ny < 2 {
        return Err(Error::InvalidGrid("channel grids need at least 2 points".into()));
    }
    let mut kernel = Vec::with_capacity(nx * nu * ny);
    for &x0 in x0_grid.points() {
        for &u1 in u1_grid.points() {
            kernel.extend(gaussian_bin_masses(x0 + u1, params.n, y1_grid));
        }
    }
    Ok(kernel)
}

/// Quantized problem instance: grids, source pmf, and channel kernel.
#[derive(Debug, Clone)]
pub struct DiscreteModel {
    pub params: ModelParams,
    pub x0_grid: Grid,
    pub u1_grid: Grid,
    pub y1_grid: Grid,
    pub u2_grid: Grid,
    source_pmf: Vec<f64>,
    channel: Vec<f64>, // row-major over (x0, u1), rows over y1
}

impl DiscreteModel {
    pub fn build(
        params: ModelParams,
        x0_grid: Grid,
        u1_grid: Grid,
        y1_grid: Grid,
        u2_grid: Grid,
    ) -> Result<Self> {
        if x0_grid.label() != Axis::X0
            || u1_grid.label() != Axis::U1
            || y1_grid.label() != Axis::Y1
            || u2_grid.label() != Axis::U2
        {
            return Err(Error::Schema("grid labels must be X0, U1, Y1, U2".into()));
        }
        let source_pmf = build_source_pmf(params, &x0_grid)?;
        let channel = build_channel_kernel(params, &x0_grid, &u1_grid, &y1_grid)?;
        Ok(Self {
            params,
            x0_grid,
            u1_grid,
            y1_grid,
            u2_grid,
            source_pmf,
            channel,
        })
    }

    /// Default discretization: `points` uniform points on ±4 standard
    /// deviations for `x0` and `u1`; the `y1` grid spans the reachable range
    /// of `x0 + u1` widened by ±4 noise deviations; the `u2` grid spans the
    /// `y1` grid range.
    pub fn with_default_grids(params: ModelParams, points: usize) -> Result<Self> {
        Self::with_grids(params, points, 4.0)
    }

    /// Same as [`with_default_grids`](Self::with_default_grids) with a custom
    /// span in standard deviations.
    pub fn with_grids(params: ModelParams, points: usize, span_sigmas: f64) -> Result<Self> {
        if !(span_sigmas > 0.0 && span_sigmas.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "span_sigmas must be finite and > 0, got {span_sigmas}"
            )));
        }
        let sx = span_sigmas * params.q.sqrt();
        let sy = 2.0 * sx + span_sigmas * params.n.sqrt();
        let x0_grid = Grid::uniform_midtread(Axis::X0, sx, points)?;
        let u1_grid = Grid::uniform_midtread(Axis::U1, sx, points)?;
        let y1_grid = Grid::uniform_midtread(Axis::Y1, sy, points)?;
        let u2_grid = Grid::uniform_midtread(Axis::U2, sy, points)?;
        Self::build(params, x0_grid, u1_grid, y1_grid, u2_grid)
    }

    pub fn source_pmf(&self) -> &[f64] {
        &self.source_pmf
    }

    /// Channel row for the grid pair `(ix0, iu1)`: a pmf over `y1_grid`.
    pub fn channel_row(&self, ix0: usize, iu1: usize) -> &[f64] {
        let ny = self.y1_grid.len();
        let start = (ix0 * self.u1_grid.len() + iu1) * ny;
        &self.channel[start..start + ny]
    }
}

/// An achievable pair of costs: input power `P` and estimation cost `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostPair {
    pub p: f64,
    pub s: f64,
}

impl CostPair {
    pub fn new(p: f64, s: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 0.0 && s.is_finite() && s >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cost pair must be finite and nonnegative, got P={p}, S={s}"
            )));
        }
        Ok(Self { p, s })
    }
}

/// Expected costs of a joint law: `P = E[u1^2]` and `S = E[(x0 + u1 - u2)^2]`,
/// substituting `x1 = x0 + u1` directly. The joint may carry auxiliary axes
/// (`T`, `W1`); they are summed out implicitly.
pub fn cost_pair_from_joint(joint: &JointPmf, model: &DiscreteModel) -> Result<CostPair> {
    let ix0 = joint
        .axis_position(Axis::X0)
        .ok_or_else(|| Error::Schema("joint is missing axis X0".into()))?;
    let iu1 = joint
        .axis_position(Axis::U1)
        .ok_or_else(|| Error::Schema("joint is missing axis U1".into()))?;
    let iu2 = joint
        .axis_position(Axis::U2)
        .ok_or_else(|| Error::Schema("joint is missing axis U2".into()))?;
    if joint.axis_len(ix0) != model.x0_grid.len()
        || joint.axis_len(iu1) != model.u1_grid.len()
        || joint.axis_len(iu2) != model.u2_grid.len()
    {
        return Err(Error::Schema(
            "joint axis sizes do not match the model grids".into(),
        ));
    }

    let mut p = 0.0;
    let mut s = 0.0;
    let mut idx = vec![0usize; joint.rank()];
    for &w in joint.data() {
        if w != 0.0 {
            let u1 = model.u1_grid.value(idx[iu1]);
            let x1 = model.x0_grid.value(idx[ix0]) + u1;
            let u2 = model.u2_grid.value(idx[iu2]);
            p += w * u1 * u1;
            s += w * (x1 - u2) * (x1 - u2);
        }
        joint.advance_index(&mut idx);
    }
    CostPair::new(p, s)
}
