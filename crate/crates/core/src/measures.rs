//! Entropy and (conditional) mutual information on dense discrete joint laws.
//!
//! Everything here works in nats; conversion to bits happens only at the
//! reporting layer. Values within `±1e-10` of zero are clamped to zero so that
//! floating-point noise cannot flip a feasibility decision.

use crate::error::{Error, Result};
use crate::model::Axis;

/// Clamping tolerance around zero for information quantities.
pub const CLAMP_TOL: f64 = 1e-10;

/// Normalization tolerance for joint tensors.
pub const JOINT_TOL: f64 = 1e-10;

fn clamp_zero(x: f64) -> f64 {
    if x.abs() <= CLAMP_TOL {
        0.0
    } else {
        x
    }
}

/// Neumaier-compensated sum; keeps normalization checks meaningful on tensors
/// with tens of millions of cells.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Dense nonnegative probability tensor over named axes (row-major; the last
/// axis varies fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    axes: Vec<(Axis, usize)>,
    data: Vec<f64>,
}

impl JointPmf {
    pub fn new(axes: Vec<(Axis, usize)>, data: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Schema("joint needs at least one axis".into()));
        }
        for i in 0..axes.len() {
            for j in (i + 1)..axes.len() {
                if axes[i].0 == axes[j].0 {
                    return Err(Error::Schema(format!("duplicate axis {}", axes[i].0)));
                }
            }
        }
        let cells: usize = axes.iter().map(|&(_, n)| n).product();
        if cells != data.len() {
            return Err(Error::Schema(format!(
                "axis sizes imply {cells} cells but data has {}",
                data.len()
            )));
        }
        if data.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidPmf("joint entries must be finite and >= 0".into()));
        }
        let total = compensated_sum(data.iter().copied());
        if (total - 1.0).abs() > JOINT_TOL {
            return Err(Error::InvalidPmf(format!(
                "joint must sum to 1 within {JOINT_TOL:e}, got {total}"
            )));
        }
        Ok(Self { axes, data })
    }

    pub fn axes(&self) -> &[(Axis, usize)] {
        &self.axes
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn axis_position(&self, label: Axis) -> Option<usize> {
        self.axes.iter().position(|&(a, _)| a == label)
    }

    pub fn axis_len(&self, position: usize) -> usize {
        self.axes[position].1
    }

    /// Odometer increment of a multi-index (last axis fastest), matching the
    /// row-major layout of `data`.
    pub fn advance_index(&self, idx: &mut [usize]) {
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < self.axes[k].1 {
                return;
            }
            idx[k] = 0;
        }
    }

    /// Marginal over `keep`, with output axes ordered as listed in `keep`.
    pub fn marginalize(&self, keep: &[Axis]) -> Result<JointPmf> {
        let positions: Vec<usize> = keep
            .iter()
            .map(|&a| {
                self.axis_position(a)
                    .ok_or_else(|| Error::Schema(format!("joint has no axis {a}")))
            })
            .collect::<Result<_>>()?;
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                if positions[i] == positions[j] {
                    return Err(Error::Schema(format!("axis {} listed twice", keep[i])));
                }
            }
        }
        let out_axes: Vec<(Axis, usize)> = positions.iter().map(|&p| self.axes[p]).collect();
        let out_len: usize = out_axes.iter().map(|&(_, n)| n).product();

        // out strides per input axis (0 for dropped axes)
        let mut contrib = vec![0usize; self.rank()];
        let mut stride = 1usize;
        for k in (0..positions.len()).rev() {
            contrib[positions[k]] = stride;
            stride *= out_axes[k].1;
        }

        let mut sums = vec![0.0f64; out_len];
        let mut comps = vec![0.0f64; out_len];
        let mut idx = vec![0usize; self.rank()];
        let mut out_flat = 0usize;
        for &v in &self.data {
            let s = sums[out_flat];
            let t = s + v;
            if s.abs() >= v.abs() {
                comps[out_flat] += (s - t) + v;
            } else {
                comps[out_flat] += (v - t) + s;
            }
            sums[out_flat] = t;

            // advance odometer and maintain out_flat incrementally
            for k in (0..self.rank()).rev() {
                idx[k] += 1;
                if idx[k] < self.axes[k].1 {
                    out_flat += contrib[k];
                    break;
                }
                idx[k] = 0;
                out_flat -= contrib[k] * (self.axes[k].1 - 1);
            }
        }
        let data: Vec<f64> = sums.iter().zip(&comps).map(|(s, c)| (s + c).max(0.0)).collect();
        // construct directly: marginals of a valid joint stay valid
        Ok(JointPmf { axes: out_axes, data })
    }
}

/// Shannon entropy `-Σ p ln p` in nats, with `0 ln 0 = 0`.
pub fn entropy(p: &[f64]) -> Result<f64> {
    if p.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidPmf("entropy input must be finite and >= 0".into()));
    }
    let total = compensated_sum(p.iter().copied());
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidPmf(format!(
            "entropy input must be normalized, sums to {total}"
        )));
    }
    let h = -compensated_sum(p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()));
    Ok(h.max(0.0))
}

fn entropy_unchecked(p: &[f64]) -> f64 {
    (-compensated_sum(p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()))).max(0.0)
}

fn check_groups(joint: &JointPmf, groups: &[&[Axis]]) -> Result<()> {
    for (gi, g) in groups.iter().enumerate() {
        // the conditioning group may be empty; the others may not
        if g.is_empty() && gi < 2 {
            return Err(Error::Schema("information groups A and B must be nonempty".into()));
        }
        for &a in g.iter() {
            if joint.axis_position(a).is_none() {
                return Err(Error::Schema(format!("joint has no axis {a}")));
            }
        }
    }
    for i in 0..groups.len() {
        for j in (i + 1)..groups.len() {
            for &a in groups[i] {
                if groups[j].contains(&a) {
                    return Err(Error::Schema(format!("axis {a} appears in two groups")));
                }
            }
        }
    }
    Ok(())
}

/// Mutual information `I(A; B) = H(A) + H(B) - H(A,B)` in nats (clamped at 0
/// within tolerance).
pub fn mutual_information(joint: &JointPmf, group_a: &[Axis], group_b: &[Axis]) -> Result<f64> {
    check_groups(joint, &[group_a, group_b])?;
    let mut ab: Vec<Axis> = group_a.to_vec();
    ab.extend_from_slice(group_b);
    let m_ab = joint.marginalize(&ab)?;
    let m_a = m_ab.marginalize(group_a)?;
    let m_b = m_ab.marginalize(group_b)?;
    let mi = entropy_unchecked(m_a.data()) + entropy_unchecked(m_b.data())
        - entropy_unchecked(m_ab.data());
    Ok(clamp_zero(mi))
}

/// Conditional mutual information `I(A; B | C) = Σ_c p(c) I(A; B | C = c)` in
/// nats. An empty conditioning group reduces to [`mutual_information`].
pub fn conditional_mutual_information(
    joint: &JointPmf,
    group_a: &[Axis],
    group_b: &[Axis],
    group_c: &[Axis],
) -> Result<f64> {
    check_groups(joint, &[group_a, group_b, group_c])?;
    if group_c.is_empty() {
        return mutual_information(joint, group_a, group_b);
    }
    // order (C, A, B) so each conditioning slice is one contiguous block
    let mut order: Vec<Axis> = group_c.to_vec();
    order.extend_from_slice(group_a);
    order.extend_from_slice(group_b);
    let m = joint.marginalize(&order)?;

    let nc: usize = group_c
        .iter()
        .map(|&a| m.axis_len(m.axis_position(a).unwrap()))
        .product();
    let na: usize = group_a
        .iter()
        .map(|&a| m.axis_len(m.axis_position(a).unwrap()))
        .product();
    let nb: usize = group_b
        .iter()
        .map(|&a| m.axis_len(m.axis_position(a).unwrap()))
        .product();

    let mut cmi = 0.0;
    let mut pa = vec![0.0f64; na];
    let mut pb = vec![0.0f64; nb];
    for c in 0..nc {
        let block = &m.data()[c * na * nb..(c + 1) * na * nb];
        let pc: f64 = block.iter().sum();
        if pc <= 0.0 {
            continue;
        }
        pa.iter_mut().for_each(|v| *v = 0.0);
        pb.iter_mut().for_each(|v| *v = 0.0);
        for ia in 0..na {
            for ib in 0..nb {
                let v = block[ia * nb + ib];
                pa[ia] += v;
                pb[ib] += v;
            }
        }
        for ia in 0..na {
            if pa[ia] <= 0.0 {
                continue;
            }
            for ib in 0..nb {
                let v = block[ia * nb + ib];
                if v > 0.0 {
                    cmi += v * (v * pc / (pa[ia] * pb[ib])).ln();
                }
            }
        }
    }
    Ok(clamp_zero(cmi))
}

/// The information-feasibility value `I(W1; Y1) - I(U2; X0 | W1, Y1)` of the
/// causal-encoder/noncausal-decoder-with-feedback region; nonnegative values
/// are feasible. The joint must carry the axes `X0, W1, U1, Y1, U2`.
pub fn info_constraint_value(joint: &JointPmf) -> Result<f64> {
    for a in [Axis::X0, Axis::W1, Axis::U1, Axis::Y1, Axis::U2] {
        if joint.axis_position(a).is_none() {
            return Err(Error::Schema(format!("info constraint needs axis {a}")));
        }
    }
    let budget = mutual_information(joint, &[Axis::W1], &[Axis::Y1])?;
    let spend =
        conditional_mutual_information(joint, &[Axis::U2], &[Axis::X0], &[Axis::W1, Axis::Y1])?;
    Ok(budget - spend)
}
