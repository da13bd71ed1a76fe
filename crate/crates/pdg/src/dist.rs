//! Dense joint distributions over a world space, with marginalization,
//! conditioning, and the entropy/divergence functionals the scoring layer
//! builds on. All information quantities are in bits.

use crate::error::{PdgError, Result};
use crate::model::{Cpd, WorldSpace, MAX_WORLDS};

pub(crate) const LOG2_E: f64 = std::f64::consts::LOG2_E;

#[inline]
pub(crate) fn log2(x: f64) -> f64 {
    x.ln() * LOG2_E
}

/// A probability distribution over the worlds of a [`WorldSpace`], stored
/// densely and indexed by the space's mixed-radix encoding. Immutable once
/// constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    space: WorldSpace,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(space: WorldSpace, probs: Vec<f64>) -> Result<Self> {
        if space.size() > MAX_WORLDS {
            return Err(PdgError::TooManyWorlds {
                size: space.size(),
                cap: MAX_WORLDS,
            });
        }
        if probs.len() != space.size() {
            return Err(PdgError::InvalidInput(format!(
                "expected {} probabilities, got {}",
                space.size(),
                probs.len()
            )));
        }
        if let Some(bad) = probs.iter().find(|p| **p < 0.0 || !p.is_finite()) {
            return Err(PdgError::InvalidInput(format!(
                "invalid probability entry {bad}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(PdgError::InvalidInput(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(JointTable { space, probs })
    }

    /// Normalizes a non-negative weight vector into a distribution.
    pub fn from_weights(space: WorldSpace, weights: Vec<f64>) -> Result<Self> {
        if let Some(bad) = weights.iter().find(|w| **w < 0.0 || !w.is_finite()) {
            return Err(PdgError::InvalidInput(format!("invalid weight {bad}")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(PdgError::InvalidInput(
                "weight vector is identically zero".into(),
            ));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        JointTable::new(space, probs)
    }

    pub fn uniform(space: WorldSpace) -> Result<Self> {
        if space.size() > MAX_WORLDS {
            return Err(PdgError::TooManyWorlds {
                size: space.size(),
                cap: MAX_WORLDS,
            });
        }
        let n = space.size();
        JointTable::new(space, vec![1.0 / n as f64; n])
    }

    pub fn space(&self) -> &WorldSpace {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, world: usize) -> f64 {
        self.probs[world]
    }

    fn positions(&self, vars: &[&str]) -> Result<Vec<usize>> {
        vars.iter()
            .map(|name| {
                self.space
                    .position(name)
                    .ok_or_else(|| PdgError::UnknownVariable(name.to_string()))
            })
            .collect()
    }

    /// Sums out every variable not named in `vars`. The result keeps the
    /// surviving variables in their original declaration order.
    pub fn marginal(&self, vars: &[&str]) -> Result<JointTable> {
        let mut keep = vec![false; self.space.len()];
        for p in self.positions(vars)? {
            keep[p] = true;
        }
        let positions: Vec<usize> = (0..self.space.len()).filter(|i| keep[*i]).collect();
        let sub = WorldSpace::new(
            positions
                .iter()
                .map(|&i| (self.space.names()[i].clone(), self.space.radices()[i]))
                .collect(),
        );
        let probs = self.project(&positions, &sub);
        Ok(JointTable { space: sub, probs })
    }

    /// Accumulates this table onto the given positions, producing a vector
    /// indexed by `sub`'s encoding.
    fn project(&self, positions: &[usize], sub: &WorldSpace) -> Vec<f64> {
        let mut out = vec![0.0; sub.size()];
        let mut digits = vec![0usize; positions.len()];
        for w in 0..self.probs.len() {
            let p = self.probs[w];
            if p == 0.0 {
                continue;
            }
            for (k, &pos) in positions.iter().enumerate() {
                digits[k] = self.space.digit(w, pos);
            }
            out[sub.encode(&digits)] += p;
        }
        out
    }

    /// Conditional distribution of `target` given `given`, one row per value
    /// of `given`. Rows whose conditioning event has probability zero are
    /// flagged undefined and filled uniform.
    pub fn conditional(&self, target: &str, given: &str) -> Result<CondTable> {
        if target == given {
            return Err(PdgError::InvalidInput(
                "conditional requires distinct target and given variables".into(),
            ));
        }
        let tpos = self.positions(&[target])?[0];
        let gpos = self.positions(&[given])?[0];
        let rows = self.space.radices()[gpos];
        let cols = self.space.radices()[tpos];
        let mut joint = vec![0.0; rows * cols];
        for w in 0..self.probs.len() {
            let p = self.probs[w];
            if p == 0.0 {
                continue;
            }
            joint[self.space.digit(w, gpos) * cols + self.space.digit(w, tpos)] += p;
        }
        let mut table = Vec::with_capacity(rows);
        let mut defined = Vec::with_capacity(rows);
        for x in 0..rows {
            let row = &joint[x * cols..(x + 1) * cols];
            let mass: f64 = row.iter().sum();
            if mass > 0.0 {
                table.push(row.iter().map(|p| p / mass).collect());
                defined.push(true);
            } else {
                table.push(vec![1.0 / cols as f64; cols]);
                defined.push(false);
            }
        }
        Ok(CondTable {
            cpd: Cpd::from_rows_unchecked(table)?,
            defined,
        })
    }

    /// Shannon entropy of the whole table, in bits.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.probs)
    }

    /// Conditional entropy H(targets | givens) in bits.
    pub fn cond_entropy(&self, targets: &[&str], givens: &[&str]) -> Result<f64> {
        let mut all: Vec<&str> = targets.to_vec();
        for g in givens {
            if !all.contains(g) {
                all.push(g);
            }
        }
        let h_joint = self.marginal(&all)?.entropy();
        let h_given = if givens.is_empty() {
            0.0
        } else {
            self.marginal(givens)?.entropy()
        };
        Ok(h_joint - h_given)
    }

    /// Conditional mutual information I(x ; y | z) in bits, evaluated from the
    /// definition; `z` may be empty for plain mutual information.
    pub fn mutual_info(&self, x: &str, y: &str, z: &[&str]) -> Result<f64> {
        let mut xz: Vec<&str> = vec![x];
        xz.extend_from_slice(z);
        let mut yz: Vec<&str> = vec![y];
        yz.extend_from_slice(z);
        let mut xyz: Vec<&str> = vec![x, y];
        xyz.extend_from_slice(z);

        let m_xyz = self.marginal(&xyz)?;
        let m_xz = self.marginal(&xz)?;
        let m_yz = self.marginal(&yz)?;
        let m_z = if z.is_empty() {
            None
        } else {
            Some(self.marginal(z)?)
        };

        // Positions of each sub-space's variables inside m_xyz's space, in
        // the sub-space's own order.
        let sp = m_xyz.space();
        let pos_in = |sub: &JointTable| -> Vec<usize> {
            sub.space()
                .names()
                .iter()
                .map(|n| sp.position(n).unwrap())
                .collect()
        };
        let xz_pos = pos_in(&m_xz);
        let yz_pos = pos_in(&m_yz);
        let z_pos: Vec<usize> = m_z.as_ref().map(pos_in).unwrap_or_default();

        let mut total = 0.0;
        let mut digits = vec![0usize; sp.len()];
        for w in 0..m_xyz.probs.len() {
            let pxyz = m_xyz.probs[w];
            if pxyz == 0.0 {
                continue;
            }
            sp.decode_into(w, &mut digits);
            let pxz = m_xz.probs[encode_projection(m_xz.space(), &xz_pos, &digits)];
            let pyz = m_yz.probs[encode_projection(m_yz.space(), &yz_pos, &digits)];
            let pz = match &m_z {
                Some(m) => m.probs[encode_projection(m.space(), &z_pos, &digits)],
                None => 1.0,
            };
            total += pxyz * log2(pz * pxyz / (pxz * pyz));
        }
        // Exact arithmetic gives a non-negative value; rounding can leave a
        // tiny negative residue.
        Ok(total.max(0.0))
    }

    /// Total variation distance to another table over the same space.
    pub fn total_variation(&self, other: &JointTable) -> Result<f64> {
        if self.space != other.space {
            return Err(PdgError::SpaceMismatch);
        }
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }
}

fn encode_projection(sub: &WorldSpace, positions: &[usize], digits: &[usize]) -> usize {
    let mut proj = vec![0usize; positions.len()];
    for (k, &pos) in positions.iter().enumerate() {
        proj[k] = digits[pos];
    }
    sub.encode(&proj)
}

/// A conditional table plus a per-row flag marking rows whose conditioning
/// event had zero probability (those rows are filler, never evidence).
#[derive(Debug, Clone)]
pub struct CondTable {
    pub cpd: Cpd,
    pub defined: Vec<bool>,
}

/// Entropy of a probability vector, in bits, with `0 log 0 = 0`.
pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|x| **x > 0.0)
        .map(|x| x * log2(*x))
        .sum::<f64>()
}

/// Relative entropy D(p ‖ q) in bits, with `0 log(0/q) = 0` and `+∞` whenever
/// `p` puts mass where `q` does not. Both vectors must be normalized.
pub fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut total = 0.0;
    for (pi, qi) in p.iter().zip(q) {
        if *pi > 0.0 {
            if *qi <= 0.0 {
                return f64::INFINITY;
            }
            total += pi * log2(pi / qi);
        }
    }
    total
}
