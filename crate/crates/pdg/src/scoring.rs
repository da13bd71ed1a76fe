//! Scoring of joint distributions against a PDG: incompatibility with the
//! cpds (`inc`), information deficiency relative to the graph (`idef`), their
//! gamma-weighted sum, a per-world decomposed form of the same score, and
//! exact-consistency checks. Scores are extended reals in bits; `+∞` is a
//! first-class value.

use std::collections::BTreeMap;

use crate::dist::{log2, JointTable};
use crate::error::{PdgError, Result};
use crate::model::{Pdg, WorldSpace, MAX_WORLDS};

/// Default max-norm tolerance for consistency checks.
pub const DEFAULT_SD_TOL: f64 = 1e-7;

/// Precomputed per-edge indexing of a PDG's world space, shared by the
/// scoring routines and the solver.
#[derive(Debug, Clone)]
pub(crate) struct PdgIndex {
    pub space: WorldSpace,
    pub edges: Vec<EdgeIndex>,
}

#[derive(Debug, Clone)]
pub(crate) struct EdgeIndex {
    pub label: String,
    pub alpha: f64,
    pub beta: f64,
    pub src_arity: usize,
    pub tgt_arity: usize,
    src_stride: usize,
    tgt_stride: usize,
    /// Edge cpd, flattened row-major over (source value, target value).
    pub p: Vec<f64>,
    /// `log2` of the cpd, `-inf` at zero entries.
    pub log2_p: Vec<f64>,
}

impl EdgeIndex {
    /// Flat (source, target) pair index of a world.
    #[inline]
    pub fn pair_of(&self, world: usize) -> usize {
        let x = (world / self.src_stride) % self.src_arity;
        let y = (world / self.tgt_stride) % self.tgt_arity;
        x * self.tgt_arity + y
    }
}

impl PdgIndex {
    pub fn new(pdg: &Pdg) -> Result<Self> {
        let space = pdg.world_space();
        if space.size() > MAX_WORLDS {
            return Err(PdgError::TooManyWorlds {
                size: space.size(),
                cap: MAX_WORLDS,
            });
        }
        let strides: Vec<usize> = (0..space.len())
            .map(|i| {
                space.radices()[i + 1..]
                    .iter()
                    .product::<usize>()
            })
            .collect();
        let edges = pdg
            .edges()
            .iter()
            .map(|e| {
                let src_arity = pdg.var(e.source).arity();
                let tgt_arity = pdg.var(e.target).arity();
                let mut p = Vec::with_capacity(src_arity * tgt_arity);
                for x in 0..src_arity {
                    // Self-loops behave as the identity observation: the
                    // conditional of a variable given itself is degenerate.
                    if e.source == e.target {
                        for y in 0..tgt_arity {
                            p.push(e.cpd.p(x, y));
                        }
                    } else {
                        p.extend_from_slice(e.cpd.row(x));
                    }
                }
                let log2_p = p
                    .iter()
                    .map(|v| if *v > 0.0 { log2(*v) } else { f64::NEG_INFINITY })
                    .collect();
                EdgeIndex {
                    label: e.label.clone(),
                    alpha: e.alpha,
                    beta: e.beta,
                    src_arity,
                    tgt_arity,
                    src_stride: strides[e.source.0],
                    tgt_stride: strides[e.target.0],
                    p,
                    log2_p,
                }
            })
            .collect();
        Ok(PdgIndex { space, edges })
    }

    pub fn check_space(&self, mu: &JointTable) -> Result<()> {
        if *mu.space() != self.space {
            return Err(PdgError::SpaceMismatch);
        }
        Ok(())
    }

    /// Joint occupancy of (source, target) pairs under `probs`.
    pub fn pair_table(&self, edge: usize, probs: &[f64]) -> Vec<f64> {
        let e = &self.edges[edge];
        let mut pairs = vec![0.0; e.src_arity * e.tgt_arity];
        for (w, p) in probs.iter().enumerate() {
            if *p > 0.0 {
                pairs[e.pair_of(w)] += *p;
            }
        }
        pairs
    }
}

/// Decomposed score with per-edge attribution.
#[derive(Debug, Clone)]
pub struct ScoreReport {
    pub gamma: f64,
    /// Incompatibility in bits; `+∞` when some positive-probability world
    /// hits a cpd zero.
    pub inc: f64,
    /// Information deficiency in bits (always finite).
    pub idef: f64,
    /// `inc + gamma * idef`.
    pub total: f64,
    pub per_edge_inc: BTreeMap<String, f64>,
    pub per_edge_cond_entropy: BTreeMap<String, f64>,
}

/// Per-edge consistency report: max-norm deviation between each edge's cpd
/// and the conditional marginals of `mu`, over source settings with positive
/// probability.
#[derive(Debug, Clone)]
pub struct SdReport {
    pub consistent: bool,
    pub tol: f64,
    pub max_deviation: f64,
    pub per_edge_max_deviation: BTreeMap<String, f64>,
}

fn edge_inc_bits(e: &EdgeIndex, pairs: &[f64]) -> f64 {
    // beta * sum_x mu_X(x) * D(mu(Y | X=x) || p(x)), folded into one pass:
    // sum_{x,y} mu(x,y) log2( mu(y|x) / p(y|x) ).
    let mut total = 0.0;
    for x in 0..e.src_arity {
        let row = &pairs[x * e.tgt_arity..(x + 1) * e.tgt_arity];
        let mass: f64 = row.iter().sum();
        if mass <= 0.0 {
            continue;
        }
        for y in 0..e.tgt_arity {
            let joint = row[y];
            if joint <= 0.0 {
                continue;
            }
            let p = e.p[x * e.tgt_arity + y];
            if p <= 0.0 {
                return f64::INFINITY;
            }
            total += joint * log2(joint / (mass * p));
        }
    }
    e.beta * total
}

fn edge_cond_entropy_bits(e: &EdgeIndex, pairs: &[f64]) -> f64 {
    let mut total = 0.0;
    for x in 0..e.src_arity {
        let row = &pairs[x * e.tgt_arity..(x + 1) * e.tgt_arity];
        let mass: f64 = row.iter().sum();
        if mass <= 0.0 {
            continue;
        }
        for &joint in row {
            if joint > 0.0 {
                total -= joint * log2(joint / mass);
            }
        }
    }
    total
}

/// Incompatibility of `mu` with the PDG's cpds: the beta-weighted expected
/// relative entropy from each edge's cpd to the corresponding conditional
/// marginal of `mu`. Source settings with zero probability contribute
/// nothing; the result is `+∞` iff some positive-probability world hits a
/// cpd zero.
pub fn inc(pdg: &Pdg, mu: &JointTable) -> Result<f64> {
    let index = PdgIndex::new(pdg)?;
    index.check_space(mu)?;
    let mut total = 0.0;
    for (i, e) in index.edges.iter().enumerate() {
        total += edge_inc_bits(e, &index.pair_table(i, mu.probs()));
    }
    Ok(total)
}

/// Information deficiency of `mu` relative to the PDG's weighted multigraph:
/// the alpha-weighted sum of conditional entropies along edges minus the
/// joint entropy.
pub fn idef(pdg: &Pdg, mu: &JointTable) -> Result<f64> {
    let index = PdgIndex::new(pdg)?;
    index.check_space(mu)?;
    let mut total = -mu.entropy();
    for (i, e) in index.edges.iter().enumerate() {
        total += e.alpha * edge_cond_entropy_bits(e, &index.pair_table(i, mu.probs()));
    }
    Ok(total)
}

/// Full score `inc + gamma * idef` with per-edge attribution.
pub fn score(pdg: &Pdg, mu: &JointTable, gamma: f64) -> Result<ScoreReport> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(PdgError::InvalidInput(format!(
            "gamma must be a non-negative real, got {gamma}"
        )));
    }
    let index = PdgIndex::new(pdg)?;
    index.check_space(mu)?;

    let mut per_edge_inc = BTreeMap::new();
    let mut per_edge_cond_entropy = BTreeMap::new();
    let mut inc_total = 0.0;
    let mut idef_total = -mu.entropy();
    for (i, e) in index.edges.iter().enumerate() {
        let pairs = index.pair_table(i, mu.probs());
        let inc_term = edge_inc_bits(e, &pairs);
        let h_term = edge_cond_entropy_bits(e, &pairs);
        per_edge_inc.insert(e.label.clone(), inc_term);
        per_edge_cond_entropy.insert(e.label.clone(), h_term);
        inc_total += inc_term;
        idef_total += e.alpha * h_term;
    }
    let total = if inc_total.is_infinite() {
        f64::INFINITY
    } else {
        inc_total + gamma * idef_total
    };
    Ok(ScoreReport {
        gamma,
        inc: inc_total,
        idef: idef_total,
        total,
        per_edge_inc,
        per_edge_cond_entropy,
    })
}

/// The same score evaluated as a single expectation over worlds: each world
/// contributes its per-edge surprisal terms `beta log 1/p(y|x) +
/// (alpha gamma - beta) log 1/mu(y|x)` minus `gamma log 1/mu(w)`. Must agree
/// with [`score`] wherever both are finite.
pub fn score_decomposed(pdg: &Pdg, mu: &JointTable, gamma: f64) -> Result<f64> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(PdgError::InvalidInput(format!(
            "gamma must be a non-negative real, got {gamma}"
        )));
    }
    let index = PdgIndex::new(pdg)?;
    index.check_space(mu)?;
    let probs = mu.probs();

    // Conditional tables mu(y | x) per edge, accumulated inline.
    let mut conds: Vec<Vec<f64>> = Vec::with_capacity(index.edges.len());
    for e in &index.edges {
        let mut pairs = vec![0.0; e.src_arity * e.tgt_arity];
        for (w, p) in probs.iter().enumerate() {
            if *p > 0.0 {
                pairs[e.pair_of(w)] += *p;
            }
        }
        for x in 0..e.src_arity {
            let row = &mut pairs[x * e.tgt_arity..(x + 1) * e.tgt_arity];
            let mass: f64 = row.iter().sum();
            if mass > 0.0 {
                for v in row.iter_mut() {
                    *v /= mass;
                }
            }
        }
        conds.push(pairs);
    }

    let mut total = 0.0;
    for (w, &pw) in probs.iter().enumerate() {
        if pw <= 0.0 {
            continue;
        }
        let mut term = gamma * log2(pw);
        for (e, cond) in index.edges.iter().zip(&conds) {
            let pair = e.pair_of(w);
            if e.p[pair] <= 0.0 {
                return Ok(f64::INFINITY);
            }
            term -= e.beta * e.log2_p[pair];
            term -= (e.alpha * gamma - e.beta) * log2(cond[pair]);
        }
        total += pw * term;
    }
    Ok(total)
}

/// Whether `mu`'s conditional marginals match every edge cpd to within `tol`
/// in max-norm, over source settings with positive probability.
pub fn in_sd(pdg: &Pdg, mu: &JointTable, tol: f64) -> Result<SdReport> {
    if tol <= 0.0 {
        return Err(PdgError::InvalidInput(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let index = PdgIndex::new(pdg)?;
    index.check_space(mu)?;
    let mut per_edge = BTreeMap::new();
    let mut worst: f64 = 0.0;
    for (i, e) in index.edges.iter().enumerate() {
        let pairs = index.pair_table(i, mu.probs());
        let mut dev: f64 = 0.0;
        for x in 0..e.src_arity {
            let row = &pairs[x * e.tgt_arity..(x + 1) * e.tgt_arity];
            let mass: f64 = row.iter().sum();
            if mass <= 0.0 {
                continue;
            }
            for y in 0..e.tgt_arity {
                dev = dev.max((row[y] / mass - e.p[x * e.tgt_arity + y]).abs());
            }
        }
        worst = worst.max(dev);
        per_edge.insert(e.label.clone(), dev);
    }
    Ok(SdReport {
        consistent: worst <= tol,
        tol,
        max_deviation: worst,
        per_edge_max_deviation: per_edge,
    })
}
