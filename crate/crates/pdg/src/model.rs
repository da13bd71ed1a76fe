//! Model syntax: variables, cpds, weighted edges, and the PDG multigraph,
//! plus the mixed-radix world space their joint settings live in.
//!
//! A PDG is immutable once built; every construction operation returns a new
//! value. Hyperedges are desugared into a product variable tied to its
//! components by deterministic projection edges.

use std::collections::HashMap;
use std::fmt;

use crate::error::{PdgError, Result};

/// Name of the canonical unit variable.
pub const UNIT_NAME: &str = "1";
/// The single value of the canonical unit variable.
pub const UNIT_VALUE: &str = "⋆";

/// Hard cap on dense joint-table sizes.
pub const MAX_WORLDS: usize = 1 << 22;

/// Absolute tolerance for cpd row sums.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Index of a variable within its PDG's declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    name: String,
    values: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, values: Vec<String>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(PdgError::InvalidInput(format!(
                "variable `{name}` has an empty value list"
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if values[..i].contains(v) {
                return Err(PdgError::InvalidInput(format!(
                    "variable `{name}` repeats value label `{v}`"
                )));
            }
        }
        Ok(Variable { name, values })
    }

    /// The canonical single-valued variable `1` with value `⋆`.
    pub fn unit() -> Self {
        Variable {
            name: UNIT_NAME.to_string(),
            values: vec![UNIT_VALUE.to_string()],
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn arity(&self) -> usize {
        self.values.len()
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.values.iter().position(|v| v == label)
    }
}

/// Row-stochastic table: one distribution over target values per source setting.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpd {
    source_arity: usize,
    target_arity: usize,
    rows: Vec<f64>, // row-major, length = source_arity * target_arity
}

impl Cpd {
    /// Builds a cpd from per-row distributions, checking shape and row sums.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cpd = Self::from_rows_unchecked(rows)?;
        for x in 0..cpd.source_arity {
            let row = cpd.row(x);
            if let Some(bad) = row.iter().find(|p| **p < 0.0 || !p.is_finite()) {
                return Err(PdgError::InvalidInput(format!(
                    "cpd row {x} contains invalid entry {bad}"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(PdgError::InvalidInput(format!(
                    "cpd row {x} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(cpd)
    }

    /// Builds a cpd checking only the shape; numeric defects are left for
    /// [`Pdg::validate`] to report.
    pub fn from_rows_unchecked(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(PdgError::InvalidInput("cpd has no rows".into()));
        }
        let target_arity = rows[0].len();
        if target_arity == 0 {
            return Err(PdgError::InvalidInput("cpd rows are empty".into()));
        }
        if rows.iter().any(|r| r.len() != target_arity) {
            return Err(PdgError::InvalidInput("cpd rows have uneven lengths".into()));
        }
        let source_arity = rows.len();
        Ok(Cpd {
            source_arity,
            target_arity,
            rows: rows.into_iter().flatten().collect(),
        })
    }

    /// Deterministic cpd putting probability 1 on `f(x)` for each source row.
    pub fn delta(source_arity: usize, target_arity: usize, f: impl Fn(usize) -> usize) -> Self {
        let mut rows = vec![0.0; source_arity * target_arity];
        for x in 0..source_arity {
            rows[x * target_arity + f(x)] = 1.0;
        }
        Cpd {
            source_arity,
            target_arity,
            rows,
        }
    }

    pub fn uniform(source_arity: usize, target_arity: usize) -> Self {
        Cpd {
            source_arity,
            target_arity,
            rows: vec![1.0 / target_arity as f64; source_arity * target_arity],
        }
    }

    pub fn source_arity(&self) -> usize {
        self.source_arity
    }

    pub fn target_arity(&self) -> usize {
        self.target_arity
    }

    pub fn p(&self, x: usize, y: usize) -> f64 {
        self.rows[x * self.target_arity + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.target_arity..(x + 1) * self.target_arity]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks(self.target_arity)
    }

    /// True iff every row puts all mass on a single value.
    pub fn is_deterministic(&self) -> bool {
        (0..self.source_arity).all(|x| {
            self.row(x).iter().filter(|p| **p == 1.0).count() == 1
                && self.row(x).iter().filter(|p| **p == 0.0).count() == self.target_arity - 1
        })
    }
}

/// Directed, labeled, cpd-carrying edge with confidence weights.
///
/// `alpha` weighs the qualitative claim that the target is determined by the
/// source; `beta` weighs trust in the cpd itself.
#[derive(Debug, Clone)]
pub struct Edge {
    pub label: String,
    pub source: VarId,
    pub target: VarId,
    pub cpd: Cpd,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// One violated invariant, identified by the variable or edge it concerns.
#[derive(Debug, Clone)]
pub struct Violation {
    pub severity: Severity,
    pub message: String,
}

impl Violation {
    fn error(message: impl Into<String>) -> Self {
        Violation {
            severity: Severity::Error,
            message: message.into(),
        }
    }

    fn warning(message: impl Into<String>) -> Self {
        Violation {
            severity: Severity::Warning,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.severity {
            Severity::Error => write!(f, "error: {}", self.message),
            Severity::Warning => write!(f, "warning: {}", self.message),
        }
    }
}

/// A probabilistic dependency graph: a multigraph of variables and weighted,
/// cpd-carrying edges. Parallel edges with conflicting cpds are permitted.
#[derive(Debug, Clone, Default)]
pub struct Pdg {
    variables: Vec<Variable>,
    // Parallel to `variables`: component tuple if the variable is the product
    // of other variables, in row-major component order.
    product_of: Vec<Option<Vec<VarId>>>,
    edges: Vec<Edge>,
    index: HashMap<String, VarId>,
}

impl Pdg {
    pub fn empty() -> Self {
        Pdg::default()
    }

    pub fn builder() -> PdgBuilder {
        PdgBuilder::default()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn require_var(&self, name: &str) -> Result<VarId> {
        self.var_id(name)
            .ok_or_else(|| PdgError::UnknownVariable(name.to_string()))
    }

    pub fn edge(&self, label: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.label == label)
    }

    /// Component tuple if `id` is a product variable.
    pub fn product_components(&self, id: VarId) -> Option<&[VarId]> {
        self.product_of[id.0].as_deref()
    }

    pub fn world_space(&self) -> WorldSpace {
        WorldSpace::new(
            self.variables
                .iter()
                .map(|v| (v.name.clone(), v.arity()))
                .collect(),
        )
    }

    /// Returns this PDG with the canonical unit variable declared (appended
    /// if absent). Errors if `1` is already taken by a multi-valued variable.
    pub fn ensure_unit_variable(&self) -> Result<Pdg> {
        match self.var_id(UNIT_NAME) {
            Some(id) if self.var(id).arity() == 1 => Ok(self.clone()),
            Some(_) => Err(PdgError::InvalidInput(format!(
                "variable `{UNIT_NAME}` exists but is not single-valued"
            ))),
            None => {
                let mut out = self.clone();
                let id = VarId(out.variables.len());
                out.variables.push(Variable::unit());
                out.product_of.push(None);
                out.index.insert(UNIT_NAME.to_string(), id);
                Ok(out)
            }
        }
    }

    pub(crate) fn fresh_label(&self, base: &str) -> String {
        if self.edge(base).is_none() {
            return base.to_string();
        }
        let mut n = 2;
        loop {
            let candidate = format!("{base}~{n}");
            if self.edge(&candidate).is_none() {
                return candidate;
            }
            n += 1;
        }
    }

    /// Adds an edge from the joint setting of `sources` to `target`.
    ///
    /// With a single source this is a plain edge. With several, a product
    /// variable over the sources is created (or reused when an identical one
    /// exists), tied to each source by a deterministic projection edge with
    /// `alpha = 1`, and the cpd is attached from the product variable to the
    /// target. The cpd's rows must be indexed row-major over the sources as
    /// listed.
    pub fn add_hyperedge(
        &self,
        label: &str,
        sources: &[&str],
        target: &str,
        cpd: Cpd,
        alpha: f64,
        beta: f64,
    ) -> Result<Pdg> {
        self.add_hyperedge_weighted(label, sources, target, cpd, alpha, beta, 1.0)
    }

    /// [`Pdg::add_hyperedge`] with an explicit beta for the projection edges.
    #[allow(clippy::too_many_arguments)]
    pub fn add_hyperedge_weighted(
        &self,
        label: &str,
        sources: &[&str],
        target: &str,
        cpd: Cpd,
        alpha: f64,
        beta: f64,
        projection_beta: f64,
    ) -> Result<Pdg> {
        if sources.is_empty() {
            return Err(PdgError::InvalidInput(format!(
                "edge `{label}` has no sources"
            )));
        }
        if self.edge(label).is_some() {
            return Err(PdgError::DuplicateEdgeLabel(label.to_string()));
        }
        let target_id = self.require_var(target)?;
        let source_ids = sources
            .iter()
            .map(|s| self.require_var(s))
            .collect::<Result<Vec<_>>>()?;

        let expected_rows: usize = source_ids.iter().map(|id| self.var(*id).arity()).product();
        if cpd.source_arity() != expected_rows {
            return Err(PdgError::ArityMismatch {
                label: label.to_string(),
                detail: format!(
                    "cpd has {} rows but the joint source setting has {} values",
                    cpd.source_arity(),
                    expected_rows
                ),
            });
        }
        if cpd.target_arity() != self.var(target_id).arity() {
            return Err(PdgError::ArityMismatch {
                label: label.to_string(),
                detail: format!(
                    "cpd has {} columns but `{target}` has {} values",
                    cpd.target_arity(),
                    self.var(target_id).arity()
                ),
            });
        }

        let mut out = self.clone();
        let tail = if source_ids.len() == 1 {
            source_ids[0]
        } else {
            out.ensure_product(&source_ids, projection_beta)?
        };
        out.edges.push(Edge {
            label: label.to_string(),
            source: tail,
            target: target_id,
            cpd,
            alpha,
            beta,
        });
        Ok(out)
    }

    /// Finds or creates the product variable over `components`, together with
    /// its deterministic projection edges.
    fn ensure_product(&mut self, components: &[VarId], projection_beta: f64) -> Result<VarId> {
        let existing = self
            .product_of
            .iter()
            .position(|p| p.as_deref() == Some(components));
        let prod_id = match existing {
            Some(i) => VarId(i),
            None => {
                let name = components
                    .iter()
                    .map(|id| self.var(*id).name.as_str())
                    .collect::<Vec<_>>()
                    .join("×");
                if self.index.contains_key(&name) {
                    return Err(PdgError::DuplicateVariable(name));
                }
                let values = product_value_labels(
                    &components
                        .iter()
                        .map(|id| self.var(*id).values.as_slice())
                        .collect::<Vec<_>>(),
                );
                let id = VarId(self.variables.len());
                self.variables.push(Variable { name: name.clone(), values });
                self.product_of.push(Some(components.to_vec()));
                self.index.insert(name, id);
                id
            }
        };

        // Strides over the component tuple, row-major as listed.
        let arities: Vec<usize> = components.iter().map(|id| self.var(*id).arity()).collect();
        let prod_arity: usize = arities.iter().product();
        let mut stride = prod_arity;
        for (k, &comp) in components.iter().enumerate() {
            let arity = arities[k];
            stride /= arity;
            let s = stride;
            let has_projection = self.edges.iter().any(|e| {
                e.source == prod_id && e.target == comp && e.cpd.is_deterministic()
            });
            if has_projection {
                continue;
            }
            let label = self.fresh_label(&format!(
                "{}↠{}",
                self.var(prod_id).name,
                self.var(comp).name
            ));
            self.edges.push(Edge {
                label,
                source: prod_id,
                target: comp,
                cpd: Cpd::delta(prod_arity, arity, move |row| (row / s) % arity),
                alpha: 1.0,
                beta: projection_beta,
            });
        }
        Ok(prod_id)
    }

    /// Set union of variables by name and concatenation of edge multisets.
    /// Colliding edge labels from `other` are suffixed to keep labels unique.
    pub fn union(&self, other: &Pdg) -> Result<Pdg> {
        let mut out = self.clone();
        let mut remap = Vec::with_capacity(other.variables.len());
        for v in &other.variables {
            match out.var_id(&v.name) {
                Some(id) => {
                    if out.var(id).values != v.values {
                        return Err(PdgError::VariableClash(v.name.clone()));
                    }
                    remap.push(id);
                }
                None => {
                    let id = VarId(out.variables.len());
                    out.variables.push(v.clone());
                    out.product_of.push(None);
                    out.index.insert(v.name.clone(), id);
                    remap.push(id);
                }
            }
        }
        for (i, p) in other.product_of.iter().enumerate() {
            if let Some(components) = p {
                let mapped: Vec<VarId> = components.iter().map(|c| remap[c.0]).collect();
                let slot = &mut out.product_of[remap[i].0];
                match slot {
                    None => *slot = Some(mapped),
                    Some(existing) if *existing == mapped => {}
                    Some(_) => return Err(PdgError::VariableClash(other.variables[i].name.clone())),
                }
            }
        }
        for e in &other.edges {
            let label = out.fresh_label(&e.label);
            out.edges.push(Edge {
                label,
                source: remap[e.source.0],
                target: remap[e.target.0],
                cpd: e.cpd.clone(),
                alpha: e.alpha,
                beta: e.beta,
            });
        }
        Ok(out)
    }

    /// Keeps exactly the named variables and the edges between them.
    pub fn restrict(&self, keep: &[&str]) -> Result<Pdg> {
        let mut keep_ids = vec![false; self.variables.len()];
        for name in keep {
            keep_ids[self.require_var(name)?.0] = true;
        }
        let mut remap = vec![None; self.variables.len()];
        let mut out = Pdg::default();
        for (i, v) in self.variables.iter().enumerate() {
            if !keep_ids[i] {
                continue;
            }
            let id = VarId(out.variables.len());
            out.variables.push(v.clone());
            out.index.insert(v.name.clone(), id);
            // Product metadata survives only if every component survives.
            let meta = self.product_of[i].as_ref().and_then(|components| {
                components
                    .iter()
                    .map(|c| if keep_ids[c.0] { Some(*c) } else { None })
                    .collect::<Option<Vec<_>>>()
            });
            out.product_of.push(meta);
            remap[i] = Some(id);
        }
        for components in out.product_of.iter_mut().flatten() {
            for c in components.iter_mut() {
                *c = remap[c.0].expect("component survives restriction");
            }
        }
        for e in &self.edges {
            if let (Some(source), Some(target)) = (remap[e.source.0], remap[e.target.0]) {
                out.edges.push(Edge {
                    label: e.label.clone(),
                    source,
                    target,
                    cpd: e.cpd.clone(),
                    alpha: e.alpha,
                    beta: e.beta,
                });
            }
        }
        Ok(out)
    }

    /// Removes the edge with the given label.
    pub fn without_edge(&self, label: &str) -> Result<Pdg> {
        if self.edge(label).is_none() {
            return Err(PdgError::InvalidInput(format!("no edge labeled `{label}`")));
        }
        let mut out = self.clone();
        out.edges.retain(|e| e.label != label);
        Ok(out)
    }

    /// Returns a copy with per-edge weights replaced by `f(edge) -> (alpha, beta)`.
    pub fn reweighted(&self, mut f: impl FnMut(&Edge) -> (f64, f64)) -> Pdg {
        let mut out = self.clone();
        for e in out.edges.iter_mut() {
            let (alpha, beta) = f(e);
            e.alpha = alpha;
            e.beta = beta;
        }
        out
    }

    /// Reports every violated invariant. Empty iff the model is valid
    /// (warnings do not invalidate).
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (i, v) in self.variables.iter().enumerate() {
            if v.values.is_empty() {
                out.push(Violation::error(format!(
                    "variable `{}` has an empty value list",
                    v.name
                )));
            }
            for (k, val) in v.values.iter().enumerate() {
                if v.values[..k].contains(val) {
                    out.push(Violation::error(format!(
                        "variable `{}` repeats value label `{val}`",
                        v.name
                    )));
                }
            }
            for other in &self.variables[..i] {
                if other.name == v.name {
                    out.push(Violation::error(format!("duplicate variable `{}`", v.name)));
                }
            }
            if let Some(components) = &self.product_of[i] {
                if components.iter().any(|c| c.0 >= self.variables.len()) {
                    out.push(Violation::error(format!(
                        "product variable `{}` references an undeclared component",
                        v.name
                    )));
                    continue;
                }
                let expected = product_value_labels(
                    &components
                        .iter()
                        .map(|c| self.var(*c).values.as_slice())
                        .collect::<Vec<_>>(),
                );
                if v.values != expected {
                    out.push(Violation::error(format!(
                        "product variable `{}` does not enumerate the row-major product of its components",
                        v.name
                    )));
                }
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            for other in &self.edges[..i] {
                if other.label == e.label {
                    out.push(Violation::error(format!("duplicate edge label `{}`", e.label)));
                }
            }
            if e.source.0 >= self.variables.len() || e.target.0 >= self.variables.len() {
                out.push(Violation::error(format!(
                    "edge `{}` references an undeclared variable",
                    e.label
                )));
                continue;
            }
            if e.cpd.source_arity() != self.var(e.source).arity() {
                out.push(Violation::error(format!(
                    "edge `{}`: cpd has {} rows but `{}` has {} values",
                    e.label,
                    e.cpd.source_arity(),
                    self.var(e.source).name,
                    self.var(e.source).arity()
                )));
            }
            if e.cpd.target_arity() != self.var(e.target).arity() {
                out.push(Violation::error(format!(
                    "edge `{}`: cpd has {} columns but `{}` has {} values",
                    e.label,
                    e.cpd.target_arity(),
                    self.var(e.target).name,
                    self.var(e.target).arity()
                )));
            }
            for (x, row) in e.cpd.rows().enumerate() {
                if let Some(bad) = row.iter().find(|p| **p < 0.0 || !p.is_finite()) {
                    out.push(Violation::error(format!(
                        "edge `{}`: cpd row {x} contains invalid entry {bad}",
                        e.label
                    )));
                    continue;
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    out.push(Violation::error(format!(
                        "edge `{}`: cpd row {x} sums to {sum}, expected 1",
                        e.label
                    )));
                }
            }
            if e.beta <= 0.0 || !e.beta.is_finite() {
                out.push(Violation::error(format!(
                    "edge `{}`: beta must be a positive real, got {}",
                    e.label, e.beta
                )));
            }
            if e.alpha < 0.0 || !e.alpha.is_finite() {
                out.push(Violation::error(format!(
                    "edge `{}`: alpha must be non-negative, got {}",
                    e.label, e.alpha
                )));
            } else if e.alpha > 1.0 {
                out.push(Violation::warning(format!(
                    "edge `{}`: alpha {} exceeds 1; permitted, but outside the usual confidence range",
                    e.label, e.alpha
                )));
            }
        }
        out
    }
}

/// Value labels of a product variable: the row-major Cartesian product of the
/// component labels, each tuple rendered as `(a,b,...)`.
pub fn product_value_labels(component_values: &[&[String]]) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut first = true;
    for values in component_values {
        let mut next = Vec::with_capacity(out.len() * values.len());
        for prefix in &out {
            for v in *values {
                if first {
                    next.push(v.clone());
                } else {
                    next.push(format!("{prefix},{v}"));
                }
            }
        }
        out = next;
        first = false;
    }
    if component_values.len() > 1 {
        out = out.into_iter().map(|s| format!("({s})")).collect();
    }
    out
}

#[derive(Debug, Clone)]
struct RawEdge {
    label: String,
    source: String,
    target: String,
    cpd: Cpd,
    alpha: f64,
    beta: f64,
}

/// Accumulates declarations and resolves them into a [`Pdg`].
#[derive(Debug, Clone, Default)]
pub struct PdgBuilder {
    variables: Vec<Variable>,
    products: Vec<(String, Vec<String>)>,
    edges: Vec<RawEdge>,
}

impl PdgBuilder {
    pub fn variable(mut self, name: impl Into<String>, values: &[&str]) -> Self {
        self.variables.push(Variable {
            name: name.into(),
            values: values.iter().map(|v| v.to_string()).collect(),
        });
        self
    }

    pub fn unit_variable(mut self) -> Self {
        self.variables.push(Variable::unit());
        self
    }

    /// Declares an existing variable as the product of the named components.
    /// Its value list must enumerate the row-major Cartesian product.
    pub fn product(mut self, name: impl Into<String>, components: &[&str]) -> Self {
        self.products.push((
            name.into(),
            components.iter().map(|c| c.to_string()).collect(),
        ));
        self
    }

    pub fn edge(
        mut self,
        label: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
        cpd: Cpd,
        alpha: f64,
        beta: f64,
    ) -> Self {
        self.edges.push(RawEdge {
            label: label.into(),
            source: source.into(),
            target: target.into(),
            cpd,
            alpha,
            beta,
        });
        self
    }

    /// Unweighted convenience: `alpha = beta = 1`.
    pub fn unweighted_edge(
        self,
        label: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
        cpd: Cpd,
    ) -> Self {
        self.edge(label, source, target, cpd, 1.0, 1.0)
    }

    /// Resolves references without checking numeric invariants; used by the
    /// parser so that defects surface through [`Pdg::validate`].
    pub fn build_unvalidated(self) -> Result<Pdg> {
        let mut pdg = Pdg::default();
        for v in self.variables {
            if pdg.index.contains_key(&v.name) {
                return Err(PdgError::DuplicateVariable(v.name));
            }
            let id = VarId(pdg.variables.len());
            pdg.index.insert(v.name.clone(), id);
            pdg.variables.push(v);
            pdg.product_of.push(None);
        }
        for (name, components) in self.products {
            let id = pdg.require_var(&name)?;
            let comp_ids = components
                .iter()
                .map(|c| pdg.require_var(c))
                .collect::<Result<Vec<_>>>()?;
            pdg.product_of[id.0] = Some(comp_ids);
        }
        for e in self.edges {
            let source = pdg.require_var(&e.source)?;
            let target = pdg.require_var(&e.target)?;
            if pdg.edge(&e.label).is_some() {
                return Err(PdgError::DuplicateEdgeLabel(e.label));
            }
            pdg.edges.push(Edge {
                label: e.label,
                source,
                target,
                cpd: e.cpd,
                alpha: e.alpha,
                beta: e.beta,
            });
        }
        Ok(pdg)
    }

    /// Resolves references and checks every invariant, failing on any
    /// error-severity violation.
    pub fn build(self) -> Result<Pdg> {
        let pdg = self.build_unvalidated()?;
        let violations = pdg.validate();
        if violations.iter().any(|v| v.severity == Severity::Error) {
            return Err(PdgError::Invalid(violations));
        }
        Ok(pdg)
    }
}

/// Fixed-order mixed-radix index over the joint settings ("worlds") of a
/// variable list. The first variable is the most significant digit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldSpace {
    names: Vec<String>,
    radices: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl WorldSpace {
    pub fn new(vars: Vec<(String, usize)>) -> Self {
        let names = vars.iter().map(|(n, _)| n.clone()).collect();
        let radices: Vec<usize> = vars.iter().map(|(_, r)| *r).collect();
        let mut strides = vec![1usize; radices.len()];
        let mut size: usize = 1;
        for i in (0..radices.len()).rev() {
            strides[i] = size;
            size = size.saturating_mul(radices[i]);
        }
        WorldSpace {
            names,
            radices,
            strides,
            size,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Number of worlds (saturating at `usize::MAX` on overflow).
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn encode(&self, world: &[usize]) -> usize {
        debug_assert_eq!(world.len(), self.radices.len());
        world
            .iter()
            .zip(&self.strides)
            .map(|(w, s)| w * s)
            .sum()
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.radices.len()];
        self.decode_into(index, &mut out);
        out
    }

    pub fn decode_into(&self, index: usize, out: &mut [usize]) {
        for (digit, (stride, radix)) in out.iter_mut().zip(self.strides.iter().zip(&self.radices)) {
            *digit = (index / stride) % radix;
        }
    }

    /// Value index of the variable at position `pos` in world `index`.
    pub fn digit(&self, index: usize, pos: usize) -> usize {
        (index / self.strides[pos]) % self.radices[pos]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_binary() -> Pdg {
        Pdg::builder()
            .variable("X", &["x0", "x1"])
            .variable("Y", &["y0", "y1"])
            .build()
            .unwrap()
    }

    #[test]
    fn cpd_rejects_bad_rows() {
        assert!(Cpd::from_rows(vec![vec![0.5, 0.4]]).is_err());
        assert!(Cpd::from_rows(vec![vec![0.5, 0.5], vec![0.7]]).is_err());
        assert!(Cpd::from_rows(vec![vec![-0.1, 1.1]]).is_err());
        assert!(Cpd::from_rows(vec![vec![0.25; 4]]).is_ok());
    }

    #[test]
    fn delta_cpd_is_deterministic() {
        let d = Cpd::delta(4, 2, |x| x % 2);
        assert!(d.is_deterministic());
        assert_eq!(d.p(3, 1), 1.0);
        assert_eq!(d.p(3, 0), 0.0);
    }

    #[test]
    fn unary_hyperedge_adds_plain_edge() {
        let pdg = two_binary();
        let cpd = Cpd::from_rows(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let out = pdg.add_hyperedge("e", &["X"], "Y", cpd, 1.0, 1.0).unwrap();
        assert_eq!(out.variables().len(), 2);
        assert_eq!(out.edges().len(), 1);
        assert_eq!(out.edges()[0].source, out.var_id("X").unwrap());
    }

    #[test]
    fn hyperedge_desugars_to_product_and_projections() {
        let pdg = Pdg::builder()
            .variable("S", &["s0", "s1"])
            .variable("SH", &["h0", "h1"])
            .variable("C", &["c0", "c1"])
            .build()
            .unwrap();
        let cpd = Cpd::uniform(4, 2);
        let out = pdg
            .add_hyperedge("joint", &["S", "SH"], "C", cpd, 1.0, 1.0)
            .unwrap();
        assert_eq!(out.variables().len(), 4);
        let prod = out.var_id("S×SH").unwrap();
        assert_eq!(
            out.product_components(prod).unwrap(),
            &[out.var_id("S").unwrap(), out.var_id("SH").unwrap()]
        );
        assert_eq!(out.var(prod).values(), &["(s0,h0)", "(s0,h1)", "(s1,h0)", "(s1,h1)"]);
        // two projections plus the attached cpd
        assert_eq!(out.edges().len(), 3);
        let projections: Vec<_> = out
            .edges()
            .iter()
            .filter(|e| e.source == prod && e.cpd.is_deterministic())
            .collect();
        assert_eq!(projections.len(), 2);
        for p in &projections {
            assert_eq!(p.alpha, 1.0);
            assert_eq!(p.beta, 1.0);
            for row in p.cpd.rows() {
                assert_eq!(row.iter().filter(|v| **v == 1.0).count(), 1);
            }
        }
        assert!(out.validate().is_empty());
    }

    #[test]
    fn hyperedge_reuses_identical_product() {
        let pdg = Pdg::builder()
            .variable("A", &["0", "1"])
            .variable("B", &["0", "1"])
            .variable("C", &["0", "1"])
            .variable("D", &["0", "1"])
            .build()
            .unwrap();
        let out = pdg
            .add_hyperedge("e1", &["A", "B"], "C", Cpd::uniform(4, 2), 1.0, 1.0)
            .unwrap()
            .add_hyperedge("e2", &["A", "B"], "D", Cpd::uniform(4, 2), 1.0, 1.0)
            .unwrap();
        // one shared product variable, one shared pair of projections
        assert_eq!(out.variables().len(), 5);
        assert_eq!(out.edges().len(), 4);
    }

    #[test]
    fn hyperedge_checks_arity() {
        let pdg = two_binary();
        let err = pdg
            .add_hyperedge("e", &["X"], "Y", Cpd::uniform(3, 2), 1.0, 1.0)
            .unwrap_err();
        assert!(matches!(err, PdgError::ArityMismatch { .. }));
        assert!(pdg
            .add_hyperedge("e", &["Z"], "Y", Cpd::uniform(2, 2), 1.0, 1.0)
            .is_err());
    }

    #[test]
    fn union_identity_and_label_collision() {
        let m = two_binary()
            .add_hyperedge("e", &["X"], "Y", Cpd::uniform(2, 2), 1.0, 1.0)
            .unwrap();
        let u = m.union(&Pdg::empty()).unwrap();
        assert_eq!(u.variables().len(), m.variables().len());
        assert_eq!(u.edges().len(), m.edges().len());

        let doubled = m.union(&m).unwrap();
        assert_eq!(doubled.edges().len(), 2);
        assert_eq!(doubled.edges()[0].label, "e");
        assert_eq!(doubled.edges()[1].label, "e~2");
    }

    #[test]
    fn union_rejects_conflicting_values() {
        let a = Pdg::builder().variable("X", &["0", "1"]).build().unwrap();
        let b = Pdg::builder().variable("X", &["0", "1", "2"]).build().unwrap();
        assert!(matches!(a.union(&b), Err(PdgError::VariableClash(_))));
    }

    #[test]
    fn restrict_keeps_interior_edges() {
        let m = Pdg::builder()
            .variable("A", &["0", "1"])
            .variable("B", &["0", "1"])
            .variable("C", &["0", "1"])
            .unweighted_edge("ab", "A", "B", Cpd::uniform(2, 2))
            .unweighted_edge("bc", "B", "C", Cpd::uniform(2, 2))
            .build()
            .unwrap();
        let r = m.restrict(&["A", "B"]).unwrap();
        assert_eq!(r.variables().len(), 2);
        assert_eq!(r.edges().len(), 1);
        assert_eq!(r.edges()[0].label, "ab");

        let all: Vec<&str> = m.variables().iter().map(|v| v.name()).collect();
        assert_eq!(m.restrict(&all).unwrap().edges().len(), 2);
        let none = m.restrict(&[]).unwrap();
        assert!(none.variables().is_empty() && none.edges().is_empty());
    }

    #[test]
    fn hyperedge_then_restrict_removes_added_structure() {
        let base = Pdg::builder()
            .variable("S", &["0", "1"])
            .variable("H", &["0", "1"])
            .variable("C", &["0", "1"])
            .build()
            .unwrap();
        let grown = base
            .add_hyperedge("j", &["S", "H"], "C", Cpd::uniform(4, 2), 1.0, 1.0)
            .unwrap();
        let back = grown.restrict(&["S", "H", "C"]).unwrap();
        assert_eq!(back.variables().len(), 3);
        assert!(back.edges().is_empty());
    }

    #[test]
    fn validate_reports_defects() {
        let ok = two_binary()
            .add_hyperedge("e", &["X"], "Y", Cpd::uniform(2, 2), 1.0, 1.0)
            .unwrap();
        assert!(ok.validate().is_empty());

        let bad_row = Pdg::builder()
            .variable("X", &["0", "1"])
            .variable("Y", &["0", "1"])
            .unweighted_edge(
                "e",
                "X",
                "Y",
                Cpd::from_rows_unchecked(vec![vec![0.5, 0.4], vec![0.5, 0.5]]).unwrap(),
            )
            .build_unvalidated()
            .unwrap();
        let violations = bad_row.validate();
        assert_eq!(violations.len(), 1);
        assert!(violations[0].message.contains("edge `e`"));
        assert!(violations[0].message.contains("row 0"));

        let zero_beta = Pdg::builder()
            .variable("X", &["0", "1"])
            .variable("Y", &["0", "1"])
            .edge("e", "X", "Y", Cpd::uniform(2, 2), 1.0, 0.0)
            .build_unvalidated()
            .unwrap();
        let violations = zero_beta.validate();
        assert_eq!(violations.len(), 1);
        assert!(violations[0].message.contains("beta"));

        let big_alpha = Pdg::builder()
            .variable("X", &["0", "1"])
            .variable("Y", &["0", "1"])
            .edge("e", "X", "Y", Cpd::uniform(2, 2), 2.5, 1.0)
            .build_unvalidated()
            .unwrap();
        let violations = big_alpha.validate();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].severity, Severity::Warning);
    }

    #[test]
    fn world_space_round_trips() {
        let space = WorldSpace::new(vec![
            ("A".into(), 2),
            ("B".into(), 3),
            ("C".into(), 2),
        ]);
        assert_eq!(space.size(), 12);
        for idx in 0..space.size() {
            let w = space.decode(idx);
            assert_eq!(space.encode(&w), idx);
        }
        assert_eq!(space.encode(&[1, 2, 0]), (6 + 2 * 2));
        assert_eq!(space.digit(space.encode(&[1, 2, 0]), 1), 2);
    }
}
