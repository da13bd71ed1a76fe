//! Conditioning by edge addition, soft-evidence (Jeffrey-style) updates, and
//! conditional queries against the limit distribution.
//!
//! Observing `Y = y` means adding an edge from the unit variable to `Y`
//! carrying the point distribution on `y`; soft evidence carries an arbitrary
//! distribution instead. The original model is untouched, so the operation is
//! reversible by deleting the added edge.

use crate::dist::CondTable;
use crate::error::{PdgError, Result};
use crate::model::{Cpd, Pdg, UNIT_NAME};
use crate::solve::{degree_of_inconsistency, limit_distribution, SolveConfig};

#[derive(Debug, Clone)]
pub enum EvidenceKind {
    /// A single observed value.
    Point(String),
    /// A prescribed distribution over the variable's values.
    Soft(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct Evidence {
    pub variable: String,
    pub kind: EvidenceKind,
    pub beta: f64,
}

impl Evidence {
    pub fn point(variable: impl Into<String>, value: impl Into<String>) -> Self {
        Evidence {
            variable: variable.into(),
            kind: EvidenceKind::Point(value.into()),
            beta: 1.0,
        }
    }

    pub fn soft(variable: impl Into<String>, dist: Vec<f64>) -> Self {
        Evidence {
            variable: variable.into(),
            kind: EvidenceKind::Soft(dist),
            beta: 1.0,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }
}

/// Returns the PDG extended with an evidence edge from the unit variable to
/// the observed one. The unit variable is declared if absent; the edge label
/// is `obs:<variable>`, suffixed if taken.
pub fn add_observation(pdg: &Pdg, evidence: &Evidence) -> Result<Pdg> {
    if evidence.beta <= 0.0 || !evidence.beta.is_finite() {
        return Err(PdgError::InvalidInput(format!(
            "evidence beta must be a positive real, got {}",
            evidence.beta
        )));
    }
    let var = pdg.require_var(&evidence.variable)?;
    let arity = pdg.var(var).arity();
    let row = match &evidence.kind {
        EvidenceKind::Point(value) => {
            let idx = pdg.var(var).value_index(value).ok_or_else(|| {
                PdgError::InvalidInput(format!(
                    "variable `{}` has no value `{value}`",
                    evidence.variable
                ))
            })?;
            let mut row = vec![0.0; arity];
            row[idx] = 1.0;
            row
        }
        EvidenceKind::Soft(dist) => {
            if dist.len() != arity {
                return Err(PdgError::InvalidInput(format!(
                    "soft evidence over `{}` needs {arity} entries, got {}",
                    evidence.variable,
                    dist.len()
                )));
            }
            if dist.iter().any(|p| *p < 0.0 || !p.is_finite()) {
                return Err(PdgError::InvalidInput(
                    "soft evidence entries must be non-negative reals".into(),
                ));
            }
            let sum: f64 = dist.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(PdgError::InvalidInput(format!(
                    "soft evidence sums to {sum}, expected 1"
                )));
            }
            dist.clone()
        }
    };
    let out = pdg.ensure_unit_variable()?;
    let label = out.fresh_label(&format!("obs:{}", evidence.variable));
    out.add_hyperedge(
        &label,
        &[UNIT_NAME],
        &evidence.variable,
        Cpd::from_rows_unchecked(vec![row])?,
        1.0,
        evidence.beta,
    )
}

/// Conditional probability of `target` given `given` under the limit
/// distribution. Rows whose conditioning value has zero probability in the
/// limit are flagged undefined.
pub fn query(pdg: &Pdg, target: &str, given: &str, cfg: &SolveConfig) -> Result<CondTable> {
    if target == given {
        return Err(PdgError::InvalidInput(
            "query requires distinct target and given variables".into(),
        ));
    }
    pdg.require_var(target)?;
    pdg.require_var(given)?;
    let limit = limit_distribution(pdg, cfg)?;
    limit.mu.conditional(target, given)
}

/// Degree of inconsistency of the model extended with a candidate answer to
/// the query `target | given`: the candidate rides on a new edge with
/// `alpha = 0` (it asserts no functional dependence) and `beta = 1`. The
/// query answer minimizes this value over candidates.
pub fn inconsistency_of_candidate(
    pdg: &Pdg,
    target: &str,
    given: &str,
    candidate: &Cpd,
    cfg: &SolveConfig,
) -> Result<f64> {
    let given_id = pdg.require_var(given)?;
    let target_id = pdg.require_var(target)?;
    if candidate.source_arity() != pdg.var(given_id).arity()
        || candidate.target_arity() != pdg.var(target_id).arity()
    {
        return Err(PdgError::ArityMismatch {
            label: "candidate".into(),
            detail: format!(
                "candidate is {}x{} but `{given}` has {} values and `{target}` has {}",
                candidate.source_arity(),
                candidate.target_arity(),
                pdg.var(given_id).arity(),
                pdg.var(target_id).arity()
            ),
        });
    }
    let label = pdg.fresh_label(&format!("cand:{target}|{given}"));
    let extended = pdg.add_hyperedge(&label, &[given], target, candidate.clone(), 0.0, 1.0)?;
    degree_of_inconsistency(&extended, cfg)
}
