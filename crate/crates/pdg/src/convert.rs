//! Translations between PDGs and neighboring formalisms: Bayesian networks,
//! factor graphs, and weighted factor graphs, together with the reference
//! distribution each formalism specifies and the variational Gibbs free
//! energy of a weighted factor graph.

use std::collections::HashMap;

use crate::dist::{log2, JointTable};
use crate::error::{PdgError, Result};
use crate::model::{product_value_labels, Cpd, Pdg, VarId, Variable, WorldSpace, UNIT_NAME};

/// A quantitative Bayesian network: an acyclic parent structure plus one cpd
/// per variable, rows indexed row-major over the parent values.
#[derive(Debug, Clone)]
pub struct BayesNet {
    variables: Vec<Variable>,
    parents: Vec<Vec<usize>>,
    cpds: Vec<Cpd>,
}

impl BayesNet {
    pub fn new(variables: Vec<Variable>, parents: Vec<Vec<usize>>, cpds: Vec<Cpd>) -> Result<Self> {
        let n = variables.len();
        if parents.len() != n || cpds.len() != n {
            return Err(PdgError::InvalidInput(
                "parents and cpds must align with the variable list".into(),
            ));
        }
        for (i, v) in variables.iter().enumerate() {
            if variables[..i].iter().any(|u| u.name() == v.name()) {
                return Err(PdgError::DuplicateVariable(v.name().to_string()));
            }
        }
        let bn = BayesNet {
            variables,
            parents,
            cpds,
        };
        for i in 0..n {
            for &p in &bn.parents[i] {
                if p >= n {
                    return Err(PdgError::InvalidInput(format!(
                        "variable `{}` lists an undeclared parent",
                        bn.variables[i].name()
                    )));
                }
            }
            let expected: usize = bn.parents[i]
                .iter()
                .map(|&p| bn.variables[p].arity())
                .product();
            if bn.cpds[i].source_arity() != expected {
                return Err(PdgError::ArityMismatch {
                    label: bn.variables[i].name().to_string(),
                    detail: format!(
                        "cpd has {} rows but the parent settings number {}",
                        bn.cpds[i].source_arity(),
                        expected
                    ),
                });
            }
            if bn.cpds[i].target_arity() != bn.variables[i].arity() {
                return Err(PdgError::ArityMismatch {
                    label: bn.variables[i].name().to_string(),
                    detail: format!(
                        "cpd has {} columns but the variable has {} values",
                        bn.cpds[i].target_arity(),
                        bn.variables[i].arity()
                    ),
                });
            }
        }
        bn.topological_order()?;
        Ok(bn)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn parents(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn cpds(&self) -> &[Cpd] {
        &self.cpds
    }

    /// Kahn's algorithm; errors if the parent graph has a cycle.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.variables.len();
        let mut indegree = vec![0usize; n];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, ps) in self.parents.iter().enumerate() {
            indegree[i] = ps.len();
            for &p in ps {
                children[p].push(i);
            }
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = queue.pop() {
            order.push(i);
            for &c in &children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push(c);
                }
            }
        }
        if order.len() != n {
            return Err(PdgError::InvalidInput(
                "parent structure contains a cycle".into(),
            ));
        }
        Ok(order)
    }
}

/// Converts a BN into the PDG carrying the same cpds: one edge per variable
/// from its (joint) parent setting, with deterministic projections tying
/// multi-parent settings to the individual parents, and the unit variable
/// standing in for empty parent sets. Each cpd edge gets `alpha = 1` and the
/// given beta; projections get `alpha = beta = 1`.
pub fn bn_to_pdg(bn: &BayesNet, beta: &[f64]) -> Result<Pdg> {
    if beta.len() != bn.variables.len() {
        return Err(PdgError::InvalidInput(
            "one beta per BN variable is required".into(),
        ));
    }
    let mut builder = Pdg::builder();
    if bn.parents.iter().any(|p| p.is_empty()) {
        builder = builder.unit_variable();
    }
    for v in &bn.variables {
        builder = builder.variable(
            v.name(),
            &v.values().iter().map(|s| s.as_str()).collect::<Vec<_>>(),
        );
    }
    let mut pdg = builder.build()?;
    for (i, v) in bn.variables.iter().enumerate() {
        let sources: Vec<&str> = if bn.parents[i].is_empty() {
            vec![UNIT_NAME]
        } else {
            bn.parents[i]
                .iter()
                .map(|&p| bn.variables[p].name())
                .collect()
        };
        pdg = pdg.add_hyperedge(
            &format!("p({})", v.name()),
            &sources,
            v.name(),
            bn.cpds[i].clone(),
            1.0,
            beta[i],
        )?;
    }
    Ok(pdg)
}

/// The distribution a BN specifies, as a joint table over the world space of
/// its converted PDG (built with unit betas): the per-world product of cpd
/// rows, extended deterministically to the parent-product variables.
pub fn bn_distribution(bn: &BayesNet) -> Result<JointTable> {
    let pdg = bn_to_pdg(bn, &vec![1.0; bn.variables.len()])?;
    let space = pdg.world_space();
    let positions: Vec<usize> = bn
        .variables
        .iter()
        .map(|v| space.position(v.name()).expect("bn variable in space"))
        .collect();

    let mut probs = vec![0.0; space.size()];
    let mut digits = vec![0usize; space.len()];
    'world: for w in 0..space.size() {
        space.decode_into(w, &mut digits);
        // product variables must agree with their components
        for (pos, _) in space.names().iter().enumerate() {
            if let Some(components) = pdg.product_components(VarId(pos)) {
                let mut expected = 0usize;
                for c in components {
                    expected = expected * space.radices()[c.0] + digits[c.0];
                }
                if digits[pos] != expected {
                    continue 'world;
                }
            }
        }
        let mut p = 1.0;
        for (i, &pos) in positions.iter().enumerate() {
            let mut row = 0usize;
            for &parent in &bn.parents[i] {
                row = row * bn.variables[parent].arity() + digits[positions[parent]];
            }
            p *= bn.cpds[i].p(row, digits[pos]);
            if p == 0.0 {
                continue 'world;
            }
        }
        probs[w] = p;
    }
    JointTable::from_weights(space, probs)
}

/// A factor over a subset of variables, with a row-major non-negative table.
#[derive(Debug, Clone)]
pub struct Factor {
    pub scope: Vec<usize>,
    pub table: Vec<f64>,
}

/// Undirected model specifying a distribution proportional to the product of
/// its factor tables.
#[derive(Debug, Clone)]
pub struct FactorGraph {
    variables: Vec<Variable>,
    factors: Vec<Factor>,
}

impl FactorGraph {
    pub fn new(variables: Vec<Variable>, factors: Vec<Factor>) -> Result<Self> {
        for (i, v) in variables.iter().enumerate() {
            if variables[..i].iter().any(|u| u.name() == v.name()) {
                return Err(PdgError::DuplicateVariable(v.name().to_string()));
            }
        }
        for (j, f) in factors.iter().enumerate() {
            if f.scope.is_empty() {
                return Err(PdgError::InvalidInput(format!("factor {j} has empty scope")));
            }
            if f.scope.iter().any(|&s| s >= variables.len()) {
                return Err(PdgError::InvalidInput(format!(
                    "factor {j} references an undeclared variable"
                )));
            }
            let expected: usize = f.scope.iter().map(|&s| variables[s].arity()).product();
            if f.table.len() != expected {
                return Err(PdgError::InvalidInput(format!(
                    "factor {j} table has {} entries, expected {expected}",
                    f.table.len()
                )));
            }
            if f.table.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                return Err(PdgError::InvalidInput(format!(
                    "factor {j} table has a negative or non-finite entry"
                )));
            }
            if !f.table.iter().any(|v| *v > 0.0) {
                return Err(PdgError::InvalidInput(format!(
                    "factor {j} has no positive entry"
                )));
            }
        }
        Ok(FactorGraph { variables, factors })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn space(&self) -> WorldSpace {
        WorldSpace::new(
            self.variables
                .iter()
                .map(|v| (v.name().to_string(), v.arity()))
                .collect(),
        )
    }

    fn factor_value_index(&self, factor: &Factor, digits: &[usize]) -> usize {
        let mut idx = 0usize;
        for &s in &factor.scope {
            idx = idx * self.variables[s].arity() + digits[s];
        }
        idx
    }
}

/// A factor graph with one non-negative exponent per factor.
#[derive(Debug, Clone)]
pub struct WeightedFactorGraph {
    pub base: FactorGraph,
    pub theta: Vec<f64>,
}

impl WeightedFactorGraph {
    pub fn new(base: FactorGraph, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != base.factors.len() {
            return Err(PdgError::InvalidInput(
                "one theta per factor is required".into(),
            ));
        }
        if theta.iter().any(|t| *t < 0.0 || !t.is_finite()) {
            return Err(PdgError::InvalidInput(
                "theta weights must be non-negative reals".into(),
            ));
        }
        Ok(WeightedFactorGraph { base, theta })
    }
}

/// One factor per edge, carrying the cpd values: for an edge from Z to Y the
/// factor has scope {Z, Y} and value `p(y|z)`. Single-valued endpoints are
/// projected out of the scope. Returns the warnings raised when the PDG
/// carries non-unit weights, which this translation discards.
pub fn pdg_to_fg(pdg: &Pdg) -> Result<(FactorGraph, Vec<String>)> {
    let mut warnings = Vec::new();
    let variables = pdg.variables().to_vec();
    let mut factors = Vec::with_capacity(pdg.edges().len());
    for e in pdg.edges() {
        if e.alpha != 1.0 || e.beta != 1.0 {
            warnings.push(format!(
                "edge `{}` carries weights (alpha={}, beta={}); the factor graph keeps only the cpd",
                e.label, e.alpha, e.beta
            ));
        }
        let src_arity = pdg.var(e.source).arity();
        let tgt_arity = pdg.var(e.target).arity();
        let (scope, table) = if e.source == e.target {
            // the conditional of a variable given itself: diagonal values
            let table = (0..src_arity).map(|x| e.cpd.p(x, x)).collect();
            (vec![e.source.0], table)
        } else if src_arity == 1 {
            (vec![e.target.0], e.cpd.row(0).to_vec())
        } else if tgt_arity == 1 {
            let table = (0..src_arity).map(|x| e.cpd.p(x, 0)).collect();
            (vec![e.source.0], table)
        } else {
            let mut table = Vec::with_capacity(src_arity * tgt_arity);
            for x in 0..src_arity {
                table.extend_from_slice(e.cpd.row(x));
            }
            (vec![e.source.0, e.target.0], table)
        };
        factors.push(Factor { scope, table });
    }
    Ok((FactorGraph::new(variables, factors)?, warnings))
}

/// Result of converting a factor graph into a PDG: the model plus the
/// normalization constant of each factor.
#[derive(Debug, Clone)]
pub struct FgAsPdg {
    pub pdg: Pdg,
    /// Per-factor normalization constants Z_J.
    pub z: Vec<f64>,
    /// Indices of factors dropped because their exponent was zero (weighted
    /// conversions only).
    pub dropped: Vec<usize>,
    pub warnings: Vec<String>,
}

struct FgConversionWeights<'a> {
    /// `(alpha, beta)` for the factor edge of factor j, or None to drop it.
    factor_edge: &'a dyn Fn(usize) -> Option<(f64, f64)>,
    projection_beta: f64,
}

fn fg_to_pdg_inner(fg: &FactorGraph, weights: FgConversionWeights) -> Result<FgAsPdg> {
    // reuse an existing unit variable (round trips carry one along)
    let existing_unit = fg.variables().iter().find(|v| v.name() == UNIT_NAME);
    if existing_unit.is_some_and(|v| v.arity() != 1) {
        return Err(PdgError::InvalidInput(format!(
            "variable `{UNIT_NAME}` exists but is not single-valued"
        )));
    }
    let mut builder = Pdg::builder();
    if existing_unit.is_none() {
        builder = builder.unit_variable();
    }
    for v in fg.variables() {
        builder = builder.variable(
            v.name(),
            &v.values().iter().map(|s| s.as_str()).collect::<Vec<_>>(),
        );
    }
    let mut pdg = builder.build()?;

    // product variables per distinct multi-variable scope, created on demand
    let mut products: HashMap<Vec<usize>, String> = HashMap::new();
    let mut z = Vec::with_capacity(fg.factors().len());
    let mut dropped = Vec::new();
    let mut warnings = Vec::new();

    for (j, factor) in fg.factors().iter().enumerate() {
        let z_j: f64 = factor.table.iter().sum();
        if z_j <= 0.0 {
            return Err(PdgError::InvalidInput(format!(
                "factor {j} has no positive entry and cannot be normalized"
            )));
        }
        z.push(z_j);
        let edge_weights = match (weights.factor_edge)(j) {
            Some(w) => w,
            None => {
                dropped.push(j);
                warnings.push(format!(
                    "factor {j} has weight zero; its belief edge is dropped (a positive beta is required)"
                ));
                continue;
            }
        };
        let normalized: Vec<f64> = factor.table.iter().map(|v| v / z_j).collect();

        let target_name: String = if factor.scope.len() == 1 {
            fg.variables()[factor.scope[0]].name().to_string()
        } else {
            match products.get(&factor.scope) {
                Some(name) => name.clone(),
                None => {
                    let name = factor
                        .scope
                        .iter()
                        .map(|&s| fg.variables()[s].name())
                        .collect::<Vec<_>>()
                        .join("×");
                    let values = product_value_labels(
                        &factor
                            .scope
                            .iter()
                            .map(|&s| fg.variables()[s].values())
                            .collect::<Vec<_>>(),
                    );
                    pdg = add_product_variable(
                        &pdg,
                        &name,
                        &values,
                        &factor
                            .scope
                            .iter()
                            .map(|&s| fg.variables()[s].name().to_string())
                            .collect::<Vec<_>>(),
                        weights.projection_beta,
                    )?;
                    products.insert(factor.scope.clone(), name.clone());
                    name
                }
            }
        };
        let (alpha, beta) = edge_weights;
        pdg = pdg.add_hyperedge(
            &format!("f{j}"),
            &[UNIT_NAME],
            &target_name,
            Cpd::from_rows_unchecked(vec![normalized])?,
            alpha,
            beta,
        )?;
    }
    Ok(FgAsPdg {
        pdg,
        z,
        dropped,
        warnings,
    })
}

/// Declares `name` as the product of `components` (whose value list must
/// enumerate the row-major Cartesian product) and wires the deterministic
/// projection edges with `alpha = 1` and the given beta.
fn add_product_variable(
    pdg: &Pdg,
    name: &str,
    values: &[String],
    components: &[String],
    projection_beta: f64,
) -> Result<Pdg> {
    let mut builder = Pdg::builder();
    for v in pdg.variables() {
        builder = builder.variable(
            v.name(),
            &v.values().iter().map(|s| s.as_str()).collect::<Vec<_>>(),
        );
    }
    builder = builder.variable(name, &values.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    for (i, v) in pdg.variables().iter().enumerate() {
        if let Some(comps) = pdg.product_components(VarId(i)) {
            let comp_names: Vec<&str> = comps.iter().map(|c| pdg.var(*c).name()).collect();
            builder = builder.product(v.name(), &comp_names);
        }
    }
    builder = builder.product(name, &components.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    for e in pdg.edges() {
        builder = builder.edge(
            e.label.clone(),
            pdg.var(e.source).name(),
            pdg.var(e.target).name(),
            e.cpd.clone(),
            e.alpha,
            e.beta,
        );
    }
    let mut out = builder.build()?;

    let arities: Vec<usize> = components
        .iter()
        .map(|c| out.var(out.var_id(c).unwrap()).arity())
        .collect();
    let prod_arity: usize = arities.iter().product();
    let mut stride = prod_arity;
    for (k, comp) in components.iter().enumerate() {
        stride /= arities[k];
        let s = stride;
        let arity = arities[k];
        out = out.add_hyperedge_weighted(
            &format!("{name}↠{comp}"),
            &[name],
            comp,
            Cpd::delta(prod_arity, arity, move |row| (row / s) % arity),
            1.0,
            projection_beta,
            projection_beta,
        )?;
    }
    Ok(out)
}

/// Encodes each factor as an unconditional belief about the joint setting of
/// its scope: a product variable per multi-variable scope, projections back
/// to the members, and an edge from the unit variable carrying the
/// normalized factor. All weights are 1.
pub fn fg_to_pdg(fg: &FactorGraph) -> Result<FgAsPdg> {
    fg_to_pdg_inner(
        fg,
        FgConversionWeights {
            factor_edge: &|_| Some((1.0, 1.0)),
            projection_beta: 1.0,
        },
    )
}

/// Weighted conversion, parameterized by the target ratio `k` of beta to
/// alpha: factor edges get `alpha = theta_J, beta = k * theta_J`, projections
/// get `alpha = 1, beta = k`. Factors with `theta_J = 0` are dropped with a
/// warning, since their belief edge would need `beta = 0`.
pub fn wfg_to_pdg(wfg: &WeightedFactorGraph, k: f64) -> Result<FgAsPdg> {
    if k <= 0.0 || !k.is_finite() {
        return Err(PdgError::InvalidInput(format!(
            "the weight ratio k must be positive, got {k}"
        )));
    }
    let theta = wfg.theta.clone();
    fg_to_pdg_inner(
        &wfg.base,
        FgConversionWeights {
            factor_edge: &move |j| {
                if theta[j] > 0.0 {
                    Some((theta[j], k * theta[j]))
                } else {
                    None
                }
            },
            projection_beta: k,
        },
    )
}

/// Forgets alpha and keeps beta as the factor exponents.
pub fn pdg_to_wfg(pdg: &Pdg) -> Result<WeightedFactorGraph> {
    let (base, _) = pdg_to_fg(pdg)?;
    let theta = pdg.edges().iter().map(|e| e.beta).collect();
    WeightedFactorGraph::new(base, theta)
}

/// The distribution a factor graph specifies: the normalized product of its
/// factor tables, over the factor graph's own variables.
pub fn fg_distribution(fg: &FactorGraph) -> Result<JointTable> {
    wfg_distribution(&WeightedFactorGraph::new(
        fg.clone(),
        vec![1.0; fg.factors().len()],
    )?)
}

/// The distribution of a weighted factor graph: proportional to the product
/// of `factor ^ theta`, with `0^0 = 1`. The normalization constant is found
/// by exhaustive summation.
pub fn wfg_distribution(wfg: &WeightedFactorGraph) -> Result<JointTable> {
    let fg = &wfg.base;
    let space = fg.space();
    if space.size() > crate::model::MAX_WORLDS {
        return Err(PdgError::TooManyWorlds {
            size: space.size(),
            cap: crate::model::MAX_WORLDS,
        });
    }
    let mut probs = vec![0.0; space.size()];
    let mut digits = vec![0usize; space.len()];
    for w in 0..space.size() {
        space.decode_into(w, &mut digits);
        let mut p = 1.0;
        for (factor, &theta) in fg.factors().iter().zip(&wfg.theta) {
            if theta == 0.0 {
                continue; // 0^0 = 1 and phi^0 = 1
            }
            let v = factor.table[fg.factor_value_index(factor, &digits)];
            if v == 0.0 {
                p = 0.0;
                break;
            }
            p *= v.powf(theta);
        }
        probs[w] = p;
    }
    JointTable::from_weights(space, probs).map_err(|_| {
        PdgError::InvalidInput("the weighted factor product is identically zero".into())
    })
}

/// Variational Gibbs free energy of a weighted factor graph at `mu`, in bits:
/// the expected theta-weighted negative log factor values minus the entropy.
/// `+∞` when `mu` puts mass on a zero of a positively-weighted factor.
pub fn gfe(wfg: &WeightedFactorGraph, mu: &JointTable) -> Result<f64> {
    let fg = &wfg.base;
    if *mu.space() != fg.space() {
        return Err(PdgError::SpaceMismatch);
    }
    let mut total = -mu.entropy();
    let mut digits = vec![0usize; mu.space().len()];
    for (w, &pw) in mu.probs().iter().enumerate() {
        if pw == 0.0 {
            continue;
        }
        mu.space().decode_into(w, &mut digits);
        for (factor, &theta) in fg.factors().iter().zip(&wfg.theta) {
            if theta == 0.0 {
                continue;
            }
            let v = factor.table[fg.factor_value_index(factor, &digits)];
            if v == 0.0 {
                return Ok(f64::INFINITY);
            }
            total -= pw * theta * log2(v);
        }
    }
    Ok(total)
}

/// Deterministically extends a distribution over base variables to the world
/// space of `pdg`, whose extra variables must be single-valued or products of
/// base variables: worlds whose product values disagree with their components
/// get probability zero.
pub fn extend_distribution(pdg: &Pdg, mu: &JointTable) -> Result<JointTable> {
    let space = pdg.world_space();
    let base = mu.space();
    enum Source {
        Base,
        Unit,
        Product(Vec<usize>),
    }
    let mut sources = Vec::with_capacity(space.len());
    for (pos, name) in space.names().iter().enumerate() {
        if let Some(b) = base.position(name) {
            if base.radices()[b] != space.radices()[pos] {
                return Err(PdgError::SpaceMismatch);
            }
            sources.push(Source::Base);
        } else if space.radices()[pos] == 1 {
            sources.push(Source::Unit);
        } else if let Some(components) = pdg.product_components(VarId(pos)) {
            sources.push(Source::Product(components.iter().map(|c| c.0).collect()));
        } else {
            return Err(PdgError::UnknownVariable(name.clone()));
        }
    }
    let base_positions: Vec<usize> = base
        .names()
        .iter()
        .map(|n| {
            space
                .position(n)
                .ok_or_else(|| PdgError::UnknownVariable(n.clone()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut probs = vec![0.0; space.size()];
    let mut digits = vec![0usize; space.len()];
    let mut base_digits = vec![0usize; base.len()];
    'world: for w in 0..space.size() {
        space.decode_into(w, &mut digits);
        for (pos, source) in sources.iter().enumerate() {
            match source {
                Source::Base | Source::Unit => {}
                Source::Product(components) => {
                    let mut expected = 0usize;
                    for &c in components {
                        expected = expected * space.radices()[c] + digits[c];
                    }
                    if digits[pos] != expected {
                        continue 'world;
                    }
                }
            }
        }
        for (k, &pos) in base_positions.iter().enumerate() {
            base_digits[k] = digits[pos];
        }
        probs[w] = mu.prob(base.encode(&base_digits));
    }
    JointTable::new(space, probs)
}
