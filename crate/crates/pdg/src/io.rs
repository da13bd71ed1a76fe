//! The `pdg-json/1` file format and report serialization.
//!
//! Every model file is an envelope `{formatVersion, kind, body}` with a
//! kind-specific body. Unknown fields are rejected, schema errors carry the
//! JSON path, and serialization is canonical: object keys are sorted,
//! arrays keep declaration order, and floats are emitted with 17 significant
//! digits so that parsing canonical output is the identity.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::convert::{BayesNet, Factor, FactorGraph, WeightedFactorGraph};
use crate::dist::{CondTable, JointTable};
use crate::error::{PdgError, Result};
use crate::model::{Cpd, Pdg, Severity, VarId, Variable};
use crate::scoring::{ScoreReport, SdReport};
use crate::solve::{SolveConfig, SolveResult};

pub const FORMAT_VERSION: &str = "pdg-json/1";

/// Any model the file format can carry.
#[derive(Debug, Clone)]
pub enum Model {
    Pdg(Pdg),
    Bn(BayesNet),
    Fg(FactorGraph),
    Wfg(WeightedFactorGraph),
    Joint(JointSpec),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Pdg(_) => "pdg",
            Model::Bn(_) => "bn",
            Model::Fg(_) => "fg",
            Model::Wfg(_) => "wfg",
            Model::Joint(_) => "joint",
        }
    }
}

/// A serialized joint distribution: probabilities in the mixed-radix world
/// order of the named variables. Resolving it against a model checks that the
/// variable order matches the model's declaration order exactly.
#[derive(Debug, Clone)]
pub struct JointSpec {
    pub variable_order: Vec<String>,
    pub probs: Vec<f64>,
}

impl JointSpec {
    pub fn resolve(&self, pdg: &Pdg) -> Result<JointTable> {
        let space = pdg.world_space();
        if self.variable_order != space.names() {
            return Err(PdgError::InvalidInput(format!(
                "joint variable order {:?} does not match the model's declaration order {:?}",
                self.variable_order,
                space.names()
            )));
        }
        JointTable::new(space, self.probs.clone())
    }

    pub fn of_table(mu: &JointTable) -> Self {
        JointSpec {
            variable_order: mu.space().names().to_vec(),
            probs: mu.probs().to_vec(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    #[serde(rename = "formatVersion")]
    format_version: String,
    kind: String,
    body: Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableJson {
    name: String,
    values: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProductJson {
    variable: String,
    components: Vec<String>,
}

fn one() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeJson {
    label: String,
    source: String,
    target: String,
    cpd: Vec<Vec<f64>>,
    #[serde(default = "one")]
    alpha: f64,
    #[serde(default = "one")]
    beta: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PdgBody {
    variables: Vec<VariableJson>,
    #[serde(default)]
    products: Vec<ProductJson>,
    #[serde(default)]
    edges: Vec<EdgeJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BnVariableJson {
    name: String,
    values: Vec<String>,
    #[serde(default)]
    parents: Vec<String>,
    cpd: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BnBody {
    variables: Vec<BnVariableJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorJson {
    scope: Vec<String>,
    /// Row-major over the scope as listed.
    table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FgBody {
    variables: Vec<VariableJson>,
    factors: Vec<FactorJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WfgBody {
    variables: Vec<VariableJson>,
    factors: Vec<FactorJson>,
    theta: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointBody {
    #[serde(rename = "variableOrder")]
    variable_order: Vec<String>,
    probs: Vec<f64>,
}

fn schema_err(path: &str, message: impl std::fmt::Display) -> PdgError {
    PdgError::Schema {
        path: path.to_string(),
        message: message.to_string(),
    }
}

fn from_body<T: DeserializeOwned>(body: Value) -> Result<T> {
    serde_path_to_error::deserialize(body).map_err(|e| PdgError::Schema {
        path: format!("body.{}", e.path()),
        message: e.inner().to_string(),
    })
}

/// Parses a model file, rejecting unknown fields and reporting schema errors
/// with their JSON path. Numeric model defects (bad row sums, non-positive
/// beta) are reported through the model-level validators.
pub fn parse(bytes: &[u8]) -> Result<Model> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| schema_err("", format!("file is not UTF-8: {e}")))?;
    let mut de = serde_json::Deserializer::from_str(text);
    let envelope: Envelope = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        PdgError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        }
    })?;
    if envelope.format_version != FORMAT_VERSION {
        return Err(schema_err(
            "formatVersion",
            format!(
                "unsupported version `{}`, expected `{FORMAT_VERSION}`",
                envelope.format_version
            ),
        ));
    }
    match envelope.kind.as_str() {
        "pdg" => Ok(Model::Pdg(pdg_from_body(from_body(envelope.body)?)?)),
        "bn" => Ok(Model::Bn(bn_from_body(from_body(envelope.body)?)?)),
        "fg" => {
            let body: FgBody = from_body(envelope.body)?;
            Ok(Model::Fg(fg_from_parts(body.variables, body.factors)?))
        }
        "wfg" => {
            let body: WfgBody = from_body(envelope.body)?;
            let base = fg_from_parts(body.variables, body.factors)?;
            Ok(Model::Wfg(WeightedFactorGraph::new(base, body.theta)?))
        }
        "joint" => {
            let body: JointBody = from_body(envelope.body)?;
            Ok(Model::Joint(JointSpec {
                variable_order: body.variable_order,
                probs: body.probs,
            }))
        }
        other => Err(schema_err(
            "kind",
            format!("unknown kind `{other}`; expected pdg, bn, fg, wfg, or joint"),
        )),
    }
}

fn pdg_from_body(body: PdgBody) -> Result<Pdg> {
    let mut builder = Pdg::builder();
    for v in &body.variables {
        builder = builder.variable(
            v.name.clone(),
            &v.values.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
        );
    }
    for p in &body.products {
        builder = builder.product(
            p.variable.clone(),
            &p.components.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
        );
    }
    for e in body.edges {
        builder = builder.edge(
            e.label,
            e.source,
            e.target,
            Cpd::from_rows_unchecked(e.cpd)?,
            e.alpha,
            e.beta,
        );
    }
    let pdg = builder.build_unvalidated()?;
    let violations = pdg.validate();
    if violations.iter().any(|v| v.severity == Severity::Error) {
        return Err(PdgError::Invalid(violations));
    }
    Ok(pdg)
}

fn bn_from_body(body: BnBody) -> Result<BayesNet> {
    let variables: Vec<Variable> = body
        .variables
        .iter()
        .map(|v| Variable::new(v.name.clone(), v.values.clone()))
        .collect::<Result<_>>()?;
    let name_index = |name: &str| -> Result<usize> {
        variables
            .iter()
            .position(|v| v.name() == name)
            .ok_or_else(|| PdgError::UnknownVariable(name.to_string()))
    };
    let mut parents = Vec::with_capacity(body.variables.len());
    let mut cpds = Vec::with_capacity(body.variables.len());
    for (i, v) in body.variables.iter().enumerate() {
        parents.push(
            v.parents
                .iter()
                .map(|p| name_index(p))
                .collect::<Result<Vec<_>>>()?,
        );
        cpds.push(Cpd::from_rows(v.cpd.clone()).map_err(|e| {
            schema_err(&format!("body.variables[{i}].cpd"), e)
        })?);
    }
    BayesNet::new(variables, parents, cpds)
}

fn fg_from_parts(vars: Vec<VariableJson>, factors: Vec<FactorJson>) -> Result<FactorGraph> {
    let variables: Vec<Variable> = vars
        .iter()
        .map(|v| Variable::new(v.name.clone(), v.values.clone()))
        .collect::<Result<_>>()?;
    let resolved = factors
        .into_iter()
        .map(|f| {
            let scope = f
                .scope
                .iter()
                .map(|name| {
                    variables
                        .iter()
                        .position(|v| v.name() == name)
                        .ok_or_else(|| PdgError::UnknownVariable(name.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Factor {
                scope,
                table: f.table,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FactorGraph::new(variables, resolved)
}

fn variable_json(v: &Variable) -> VariableJson {
    VariableJson {
        name: v.name().to_string(),
        values: v.values().to_vec(),
    }
}

fn cpd_rows(cpd: &Cpd) -> Vec<Vec<f64>> {
    cpd.rows().map(|r| r.to_vec()).collect()
}

fn pdg_body(pdg: &Pdg) -> PdgBody {
    PdgBody {
        variables: pdg.variables().iter().map(variable_json).collect(),
        products: pdg
            .variables()
            .iter()
            .enumerate()
            .filter_map(|(i, v)| {
                pdg.product_components(VarId(i)).map(|components| ProductJson {
                    variable: v.name().to_string(),
                    components: components
                        .iter()
                        .map(|c| pdg.var(*c).name().to_string())
                        .collect(),
                })
            })
            .collect(),
        edges: pdg
            .edges()
            .iter()
            .map(|e| EdgeJson {
                label: e.label.clone(),
                source: pdg.var(e.source).name().to_string(),
                target: pdg.var(e.target).name().to_string(),
                cpd: cpd_rows(&e.cpd),
                alpha: e.alpha,
                beta: e.beta,
            })
            .collect(),
    }
}

/// Canonical serialization of a model.
pub fn serialize(model: &Model) -> Vec<u8> {
    let (kind, body) = match model {
        Model::Pdg(pdg) => ("pdg", serde_json::to_value(pdg_body(pdg)).unwrap()),
        Model::Bn(bn) => {
            let body = BnBody {
                variables: bn
                    .variables()
                    .iter()
                    .enumerate()
                    .map(|(i, v)| BnVariableJson {
                        name: v.name().to_string(),
                        values: v.values().to_vec(),
                        parents: bn.parents()[i]
                            .iter()
                            .map(|&p| bn.variables()[p].name().to_string())
                            .collect(),
                        cpd: cpd_rows(&bn.cpds()[i]),
                    })
                    .collect(),
            };
            ("bn", serde_json::to_value(body).unwrap())
        }
        Model::Fg(fg) => ("fg", serde_json::to_value(fg_body(fg)).unwrap()),
        Model::Wfg(wfg) => {
            let base = fg_body(&wfg.base);
            let body = WfgBody {
                variables: base.variables,
                factors: base.factors,
                theta: wfg.theta.clone(),
            };
            ("wfg", serde_json::to_value(body).unwrap())
        }
        Model::Joint(spec) => (
            "joint",
            serde_json::to_value(JointBody {
                variable_order: spec.variable_order.clone(),
                probs: spec.probs.clone(),
            })
            .unwrap(),
        ),
    };
    let envelope = Envelope {
        format_version: FORMAT_VERSION.to_string(),
        kind: kind.to_string(),
        body,
    };
    canonical_bytes(&serde_json::to_value(envelope).unwrap())
}

fn fg_body(fg: &FactorGraph) -> FgBody {
    FgBody {
        variables: fg.variables().iter().map(variable_json).collect(),
        factors: fg
            .factors()
            .iter()
            .map(|f| FactorJson {
                scope: f
                    .scope
                    .iter()
                    .map(|&s| fg.variables()[s].name().to_string())
                    .collect(),
                table: f.table.clone(),
            })
            .collect(),
    }
}

struct CanonicalFormatter;

impl serde_json::ser::Formatter for CanonicalFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        // 17 significant digits: lossless for every finite f64
        write!(writer, "{value:.16e}")
    }
}

/// Renders a JSON value with sorted object keys and 17-significant-digit
/// floats, plus a trailing newline.
pub fn canonical_bytes(value: &Value) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter);
    value.serialize(&mut ser).expect("in-memory serialization");
    out.push(b'\n');
    out
}

/// Extended reals in reports: finite values as numbers, infinities as
/// strings.
pub fn extended_real(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v == f64::INFINITY {
        json!("inf")
    } else if v == f64::NEG_INFINITY {
        json!("-inf")
    } else {
        json!("nan")
    }
}

fn extended_map(map: &std::collections::BTreeMap<String, f64>) -> Value {
    let mut out = Map::new();
    for (k, v) in map {
        out.insert(k.clone(), extended_real(*v));
    }
    Value::Object(out)
}

pub fn score_report_value(report: &ScoreReport) -> Value {
    json!({
        "gamma": report.gamma,
        "inc": extended_real(report.inc),
        "idef": report.idef,
        "total": extended_real(report.total),
        "perEdgeInc": extended_map(&report.per_edge_inc),
        "perEdgeCondEntropy": extended_map(&report.per_edge_cond_entropy),
    })
}

pub fn joint_value(mu: &JointTable) -> Value {
    json!({
        "variableOrder": mu.space().names(),
        "probs": mu.probs(),
    })
}

pub fn solve_result_value(result: &SolveResult) -> Value {
    let mut v = json!({
        "mu": joint_value(&result.mu),
        "score": score_report_value(&result.score),
        "iterations": result.iterations,
        "converged": result.converged,
        "maskedWorlds": result.masked_worlds,
    });
    if let Some(gap) = result.inc_optimality_gap {
        v["incOptimalityGap"] = extended_real(gap);
    }
    v
}

pub fn sd_report_value(report: &SdReport) -> Value {
    json!({
        "consistent": report.consistent,
        "tol": report.tol,
        "maxDeviation": report.max_deviation,
        "perEdgeMaxDeviation": extended_map(&report.per_edge_max_deviation),
    })
}

pub fn cond_table_value(table: &CondTable, row_labels: &[String], col_labels: &[String]) -> Value {
    json!({
        "rowLabels": row_labels,
        "colLabels": col_labels,
        "rows": table.cpd.rows().map(|r| r.to_vec()).collect::<Vec<_>>(),
        "defined": table.defined,
    })
}

/// Solver configuration file: every field optional, unknown fields rejected.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct SolveConfigFile {
    pub max_iters: Option<usize>,
    pub step_init: Option<f64>,
    pub convergence_tol: Option<f64>,
    pub gamma_schedule_ratio: Option<f64>,
    pub gamma_floor: Option<f64>,
    pub limit_tol: Option<f64>,
    pub seed: Option<u64>,
}

impl SolveConfigFile {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes)
            .map_err(|e| schema_err("", format!("config is not UTF-8: {e}")))?;
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de).map_err(|e| PdgError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn apply(&self, cfg: &mut SolveConfig) {
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.step_init {
            cfg.step_init = v;
        }
        if let Some(v) = self.convergence_tol {
            cfg.convergence_tol = v;
        }
        if let Some(v) = self.gamma_schedule_ratio {
            cfg.gamma_schedule_ratio = v;
        }
        if let Some(v) = self.gamma_floor {
            cfg.gamma_floor = v;
        }
        if let Some(v) = self.limit_tol {
            cfg.limit_tol = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
    }
}
