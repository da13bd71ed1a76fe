//! Minimization of the score over the probability simplex.
//!
//! Worlds assigned zero probability by some cpd are forbidden: any
//! distribution giving them positive mass scores `+∞`. The solver masks them
//! out up front and runs exponentiated-gradient (entropic mirror-descent)
//! updates on the remaining face, where the objective is finite and smooth
//! and iterates stay strictly positive. Step sizes backtrack on objective
//! decrease, so the objective is non-increasing across iterations.

use rayon::prelude::*;

use crate::dist::{log2, JointTable, LOG2_E};
use crate::error::{PdgError, Result};
use crate::model::Pdg;
use crate::scoring::{self, PdgIndex, ScoreReport};

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub max_iters: usize,
    pub step_init: f64,
    /// Max-norm change between successive iterates at which a solve stops.
    pub convergence_tol: f64,
    /// Geometric decay of gamma in the limit schedule; must be in (0, 1).
    pub gamma_schedule_ratio: f64,
    /// Smallest gamma the limit schedule will visit.
    pub gamma_floor: f64,
    /// Total-variation gap between successive schedule minimizers at which
    /// the limit is declared reached.
    pub limit_tol: f64,
    /// Seed for the starting point; 0 starts from uniform.
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_iters: 50_000,
            step_init: 1.0,
            convergence_tol: 1e-9,
            gamma_schedule_ratio: 0.5,
            gamma_floor: 1e-8,
            limit_tol: 1e-7,
            seed: 0,
        }
    }
}

impl SolveConfig {
    fn check(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.step_init > 0.0
            && self.convergence_tol > 0.0
            && self.gamma_schedule_ratio > 0.0
            && self.gamma_schedule_ratio < 1.0
            && self.gamma_floor > 0.0
            && self.limit_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(PdgError::InvalidInput(
                "solver config fields must be positive, with gamma ratio in (0, 1)".into(),
            ))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub mu: JointTable,
    pub score: ScoreReport,
    pub iterations: usize,
    pub converged: bool,
    /// Worlds excluded as forbidden; `mu` assigns them probability zero.
    pub masked_worlds: Vec<usize>,
    /// Set by [`limit_distribution`]: incompatibility at the answer minus the
    /// independently minimized incompatibility.
    pub inc_optimality_gap: Option<f64>,
}

/// Largest gamma for which the score is guaranteed strictly convex:
/// `min_L beta_L / alpha_L` (`+∞` when no edge has positive alpha).
pub fn uniqueness_gamma_bound(pdg: &Pdg) -> f64 {
    pdg.edges()
        .iter()
        .filter(|e| e.alpha > 0.0)
        .map(|e| e.beta / e.alpha)
        .fold(f64::INFINITY, f64::min)
}

struct Workspace {
    pairs: Vec<Vec<f64>>,
    log_cond: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(index: &PdgIndex) -> Self {
        let sizes: Vec<usize> = index
            .edges
            .iter()
            .map(|e| e.src_arity * e.tgt_arity)
            .collect();
        Workspace {
            pairs: sizes.iter().map(|s| vec![0.0; *s]).collect(),
            log_cond: sizes.iter().map(|s| vec![0.0; *s]).collect(),
        }
    }
}

fn accumulate_pairs(index: &PdgIndex, probs: &[f64], support: Option<&[usize]>, ws: &mut Workspace) {
    for (ei, e) in index.edges.iter().enumerate() {
        let pairs = &mut ws.pairs[ei];
        pairs.fill(0.0);
        match support {
            Some(s) => {
                for &w in s {
                    pairs[e.pair_of(w)] += probs[w];
                }
            }
            None => {
                for (w, &p) in probs.iter().enumerate() {
                    if p > 0.0 {
                        pairs[e.pair_of(w)] += p;
                    }
                }
            }
        }
    }
}

/// Score of a non-negative weight vector, in bits. This is the per-world form
/// of the score extended off the simplex: conditionals are scale-invariant
/// and the global term uses the raw weights, so central differences of this
/// function are meaningful without renormalization.
fn eval_bits(
    index: &PdgIndex,
    gamma: f64,
    probs: &[f64],
    support: Option<&[usize]>,
    ws: &mut Workspace,
) -> f64 {
    accumulate_pairs(index, probs, support, ws);
    let mut total = 0.0;
    for (ei, e) in index.edges.iter().enumerate() {
        let pairs = &ws.pairs[ei];
        let t = e.tgt_arity;
        for x in 0..e.src_arity {
            let row = &pairs[x * t..(x + 1) * t];
            let mass: f64 = row.iter().sum();
            if mass <= 0.0 {
                continue;
            }
            for y in 0..t {
                let joint = row[y];
                if joint <= 0.0 {
                    continue;
                }
                if e.p[x * t + y] <= 0.0 {
                    return f64::INFINITY;
                }
                let log_cond = log2(joint / mass);
                total += joint
                    * (e.beta * (log_cond - e.log2_p[x * t + y]) - gamma * e.alpha * log_cond);
            }
        }
    }
    if gamma != 0.0 {
        let entropy_term: f64 = match support {
            Some(s) => s
                .iter()
                .map(|&w| {
                    let p = probs[w];
                    if p > 0.0 {
                        p * log2(p)
                    } else {
                        0.0
                    }
                })
                .sum(),
            None => probs
                .iter()
                .map(|&p| if p > 0.0 { p * log2(p) } else { 0.0 })
                .sum(),
        };
        total += gamma * entropy_term;
    }
    total
}

/// Objective and its gradient on the supported worlds; `probs` must be
/// strictly positive there.
fn eval_grad_bits(
    index: &PdgIndex,
    gamma: f64,
    probs: &[f64],
    support: &[usize],
    ws: &mut Workspace,
    grad: &mut [f64],
) -> f64 {
    accumulate_pairs(index, probs, Some(support), ws);
    let mut total = 0.0;
    for (ei, e) in index.edges.iter().enumerate() {
        let pairs = &ws.pairs[ei];
        let log_cond = &mut ws.log_cond[ei];
        let t = e.tgt_arity;
        for x in 0..e.src_arity {
            let row = &pairs[x * t..(x + 1) * t];
            let mass: f64 = row.iter().sum();
            for y in 0..t {
                let joint = row[y];
                if joint <= 0.0 {
                    log_cond[x * t + y] = 0.0;
                    continue;
                }
                let lc = log2(joint / mass);
                log_cond[x * t + y] = lc;
                total += joint * (e.beta * (lc - e.log2_p[x * t + y]) - gamma * e.alpha * lc);
            }
        }
    }
    for &w in support {
        let pw = probs[w];
        total += gamma * pw * log2(pw);
        let mut g = gamma * (log2(pw) + LOG2_E);
        for (ei, e) in index.edges.iter().enumerate() {
            let pair = e.pair_of(w);
            g -= e.beta * e.log2_p[pair];
            g -= (e.alpha * gamma - e.beta) * ws.log_cond[ei][pair];
        }
        grad[w] = g;
    }
    total
}

/// Worlds forbidden by a zero in some edge cpd.
fn forbidden_worlds(index: &PdgIndex) -> Vec<usize> {
    (0..index.space.size())
        .filter(|&w| index.edges.iter().any(|e| e.p[e.pair_of(w)] <= 0.0))
        .collect()
}

fn initial_point(support: &[usize], size: usize, seed: u64) -> Vec<f64> {
    let mut probs = vec![0.0; size];
    if seed == 0 {
        let u = 1.0 / support.len() as f64;
        for &w in support {
            probs[w] = u;
        }
    } else {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut total = 0.0;
        for &w in support {
            let e: f64 = -(rng.random::<f64>().max(1e-12)).ln();
            probs[w] = e;
            total += e;
        }
        for &w in support {
            probs[w] /= total;
        }
    }
    probs
}

struct MdOutcome {
    probs: Vec<f64>,
    objective: f64,
    iterations: usize,
    converged: bool,
}

/// Exponentiated-gradient descent on the feasible face.
fn run_md(
    index: &PdgIndex,
    gamma: f64,
    cfg: &SolveConfig,
    warm: Option<Vec<f64>>,
) -> Result<(MdOutcome, Vec<usize>)> {
    let masked = forbidden_worlds(index);
    let size = index.space.size();
    let support: Vec<usize> = {
        let mut allowed = vec![true; size];
        for &w in &masked {
            allowed[w] = false;
        }
        (0..size).filter(|&w| allowed[w]).collect()
    };
    if support.is_empty() {
        return Err(PdgError::EmptySupport);
    }

    let mut ws = Workspace::new(index);
    let mut probs = warm.unwrap_or_else(|| initial_point(&support, size, cfg.seed));
    if support.len() == 1 {
        probs.iter_mut().for_each(|p| *p = 0.0);
        probs[support[0]] = 1.0;
        let objective = eval_bits(index, gamma, &probs, Some(&support), &mut ws);
        return Ok((
            MdOutcome {
                probs,
                objective,
                iterations: 0,
                converged: true,
            },
            masked,
        ));
    }

    let mut grad = vec![0.0; size];
    let mut candidate = vec![0.0; size];
    let mut objective = f64::INFINITY;
    let mut eta = cfg.step_init;
    let mut converged = false;
    let mut iterations = 0;
    // Simplex stationarity: the gradient must be constant over the support,
    // up to mass-weighted slack on vanishing coordinates.
    let stationarity_tol = (100.0 * cfg.convergence_tol).max(1e-12);

    for _ in 0..cfg.max_iters {
        iterations += 1;
        objective = eval_grad_bits(index, gamma, &probs, &support, &mut ws, &mut grad);

        let mean_grad: f64 = support.iter().map(|&w| probs[w] * grad[w]).sum();
        let stationarity = support
            .iter()
            .map(|&w| probs[w] * (grad[w] - mean_grad).abs())
            .fold(0.0, f64::max);

        let shift = support
            .iter()
            .map(|&w| grad[w])
            .fold(f64::INFINITY, f64::min);
        let mut accepted = false;
        let mut trial = eta;
        while trial >= 1e-18 {
            let mut total = 0.0;
            for &w in &support {
                // arguments are <= 0 after the shift; clamp preserves positivity
                let arg = (-trial * (grad[w] - shift)).max(-200.0);
                let v = (probs[w] * arg.exp()).max(1e-308);
                candidate[w] = v;
                total += v;
            }
            for &w in &support {
                candidate[w] /= total;
            }
            let cand_obj = eval_bits(index, gamma, &candidate, Some(&support), &mut ws);
            if cand_obj <= objective {
                accepted = true;
                objective = cand_obj;
                break;
            }
            trial *= 0.5;
        }
        if !accepted {
            // no representable descent step remains
            converged = stationarity <= stationarity_tol;
            break;
        }
        let mut delta: f64 = 0.0;
        for &w in &support {
            delta = delta.max((candidate[w] - probs[w]).abs());
            probs[w] = candidate[w];
        }
        eta = (trial * 1.8).min(1e4);
        if delta <= cfg.convergence_tol && stationarity <= stationarity_tol {
            converged = true;
            break;
        }
    }

    Ok((
        MdOutcome {
            probs,
            objective,
            iterations,
            converged,
        },
        masked,
    ))
}

fn check_valid(pdg: &Pdg) -> Result<()> {
    let violations = pdg.validate();
    if violations
        .iter()
        .any(|v| v.severity == crate::model::Severity::Error)
    {
        return Err(PdgError::Invalid(violations));
    }
    Ok(())
}

fn finish(pdg: &Pdg, index: &PdgIndex, outcome: MdOutcome, masked: Vec<usize>) -> Result<SolveResult> {
    let total: f64 = outcome.probs.iter().sum();
    let probs: Vec<f64> = outcome.probs.iter().map(|p| p / total).collect();
    let mu = JointTable::new(index.space.clone(), probs)?;
    let score = scoring::score(pdg, &mu, 0.0)?;
    Ok(SolveResult {
        mu,
        score,
        iterations: outcome.iterations,
        converged: outcome.converged,
        masked_worlds: masked,
        inc_optimality_gap: None,
    })
}

/// Minimizes `inc + gamma * idef` over the simplex for a fixed `gamma > 0`.
///
/// Uniqueness of the minimizer is guaranteed for
/// `gamma <=` [`uniqueness_gamma_bound`]; callers picking a larger gamma get
/// whatever minimum the descent reaches. Non-convergence within `max_iters`
/// is reported through `converged`, never silently.
pub fn minimize_score(pdg: &Pdg, gamma: f64, cfg: &SolveConfig) -> Result<SolveResult> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(PdgError::InvalidInput(format!(
            "minimize_score requires gamma > 0, got {gamma}; use degree_of_inconsistency or \
             limit_distribution for the gamma = 0 semantics"
        )));
    }
    cfg.check()?;
    check_valid(pdg)?;
    let index = PdgIndex::new(pdg)?;
    let (outcome, masked) = run_md(&index, gamma, cfg, None)?;
    let mut result = finish(pdg, &index, outcome, masked)?;
    result.score = scoring::score(pdg, &result.mu, gamma)?;
    Ok(result)
}

/// Approximates the limit of the score minimizers as gamma tends to zero, by
/// minimizing along a geometric gamma schedule with warm starts until
/// successive minimizers agree to within `limit_tol` in total variation.
///
/// The result records how far the answer's incompatibility sits above the
/// independently minimized incompatibility.
pub fn limit_distribution(pdg: &Pdg, cfg: &SolveConfig) -> Result<SolveResult> {
    cfg.check()?;
    check_valid(pdg)?;
    let index = PdgIndex::new(pdg)?;

    let bound = uniqueness_gamma_bound(pdg);
    let mut gamma = if bound.is_finite() { bound } else { 1.0 };
    let mut iterations = 0;
    let mut inner_converged = true;
    let mut schedule_converged = false;

    let (mut outcome, masked) = run_md(&index, gamma, cfg, None)?;
    iterations += outcome.iterations;
    inner_converged &= outcome.converged;
    loop {
        gamma *= cfg.gamma_schedule_ratio;
        if gamma < cfg.gamma_floor {
            break;
        }
        let (next, _) = run_md(&index, gamma, cfg, Some(outcome.probs.clone()))?;
        iterations += next.iterations;
        inner_converged &= next.converged;
        let tv = 0.5
            * next
                .probs
                .iter()
                .zip(&outcome.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        outcome = next;
        if tv <= cfg.limit_tol {
            schedule_converged = true;
            break;
        }
    }

    outcome.iterations = iterations;
    outcome.converged = inner_converged && schedule_converged;
    let mut result = finish(pdg, &index, outcome, masked)?;
    let best_inc = degree_of_inconsistency(pdg, cfg)?;
    result.inc_optimality_gap = Some(result.score.inc - best_inc);
    Ok(result)
}

/// The minimum achievable incompatibility: `inf_mu inc(pdg, mu)`, found by
/// minimizing the convex gamma = 0 objective. Zero (within solver tolerance)
/// iff the PDG is consistent; an empty feasible support is an error.
pub fn degree_of_inconsistency(pdg: &Pdg, cfg: &SolveConfig) -> Result<f64> {
    cfg.check()?;
    check_valid(pdg)?;
    let index = PdgIndex::new(pdg)?;
    let (outcome, _) = run_md(&index, 0.0, cfg, None)?;
    Ok(outcome.objective.max(0.0))
}

/// Score of a non-negative weight vector over the full world space, together
/// with its gradient, both in bits. This is the per-world form of the score
/// extended to unnormalized weights (conditionals are scale-invariant), so
/// the gradient can be checked against central finite differences without
/// leaving the positive orthant. Weights must be strictly positive.
pub fn objective_and_gradient(pdg: &Pdg, gamma: f64, weights: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_valid(pdg)?;
    let index = PdgIndex::new(pdg)?;
    if weights.len() != index.space.size() {
        return Err(PdgError::SpaceMismatch);
    }
    if weights.iter().any(|w| *w <= 0.0 || !w.is_finite()) {
        return Err(PdgError::InvalidInput(
            "gradient evaluation requires strictly positive weights".into(),
        ));
    }
    let support: Vec<usize> = (0..weights.len()).collect();
    let mut ws = Workspace::new(&index);
    let mut grad = vec![0.0; weights.len()];
    let value = eval_grad_bits(&index, gamma, weights, &support, &mut ws, &mut grad);
    Ok((value, grad))
}

/// Exhaustive lattice scan of the simplex at the given resolution (all
/// compositions of `1/resolution`, which includes every vertex). Verification
/// oracle for tiny spaces; hard-capped at 8 worlds.
pub fn grid_oracle(pdg: &Pdg, gamma: f64, resolution: f64) -> Result<(JointTable, f64)> {
    if !(resolution > 0.0 && resolution <= 0.1) {
        return Err(PdgError::InvalidInput(format!(
            "grid resolution must lie in (0, 0.1], got {resolution}"
        )));
    }
    if gamma < 0.0 {
        return Err(PdgError::InvalidInput("gamma must be non-negative".into()));
    }
    check_valid(pdg)?;
    let index = PdgIndex::new(pdg)?;
    let k = index.space.size();
    if k > 8 {
        return Err(PdgError::InvalidInput(format!(
            "grid oracle is capped at 8 worlds, space has {k}"
        )));
    }
    let n = (1.0 / resolution).round() as usize;

    // Parallel over the first coordinate; each task enumerates the remaining
    // compositions depth-first.
    let best = (0..=n)
        .into_par_iter()
        .map_init(
            || (Workspace::new(&index), vec![0.0; k], vec![0usize; k]),
            |(ws, probs, counts), c0| {
                let mut best_val = f64::INFINITY;
                let mut best_counts = vec![0usize; k];
                counts[0] = c0;
                descend(
                    &index,
                    gamma,
                    n,
                    c0,
                    1,
                    counts,
                    probs,
                    ws,
                    &mut best_val,
                    &mut best_counts,
                );
                (best_val, best_counts)
            },
        )
        .reduce(
            || (f64::INFINITY, vec![0usize; k]),
            |a, b| if a.0 <= b.0 { a } else { b },
        );

    let (value, counts) = best;
    let probs: Vec<f64> = counts.iter().map(|c| *c as f64 / n as f64).collect();
    let mu = JointTable::from_weights(index.space.clone(), probs)?;
    Ok((mu, value))
}

#[allow(clippy::too_many_arguments)]
fn descend(
    index: &PdgIndex,
    gamma: f64,
    n: usize,
    used: usize,
    pos: usize,
    counts: &mut [usize],
    probs: &mut [f64],
    ws: &mut Workspace,
    best_val: &mut f64,
    best_counts: &mut [usize],
) {
    let k = counts.len();
    if pos == k - 1 {
        counts[k - 1] = n - used;
        let inv = 1.0 / n as f64;
        for (p, c) in probs.iter_mut().zip(counts.iter()) {
            *p = *c as f64 * inv;
        }
        let val = eval_bits(index, gamma, probs, None, ws);
        if val < *best_val {
            *best_val = val;
            best_counts.copy_from_slice(counts);
        }
        return;
    }
    for c in 0..=(n - used) {
        counts[pos] = c;
        descend(
            index, gamma, n, used + c, pos + 1, counts, probs, ws, best_val, best_counts,
        );
    }
}
