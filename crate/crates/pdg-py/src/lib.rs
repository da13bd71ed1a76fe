//! Python bindings: a `Pdg` class wrapping construction, scoring, solving,
//! and inference, plus a `convert` function mirroring the CLI translations.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pdg::convert::{
    bn_distribution, bn_to_pdg, fg_distribution, fg_to_pdg, pdg_to_fg, pdg_to_wfg,
    wfg_distribution, wfg_to_pdg,
};
use pdg::infer::{add_observation, Evidence};
use pdg::io::{self, JointSpec, Model};
use pdg::{JointTable, SolveConfig};

fn err(e: pdg::PdgError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    max_iters: Option<usize>,
    step_init: Option<f64>,
    tol: Option<f64>,
    gamma_ratio: Option<f64>,
    gamma_floor: Option<f64>,
    limit_tol: Option<f64>,
    seed: Option<u64>,
) -> SolveConfig {
    let mut cfg = SolveConfig::default();
    if let Some(v) = max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = step_init {
        cfg.step_init = v;
    }
    if let Some(v) = tol {
        cfg.convergence_tol = v;
    }
    if let Some(v) = gamma_ratio {
        cfg.gamma_schedule_ratio = v;
    }
    if let Some(v) = gamma_floor {
        cfg.gamma_floor = v;
    }
    if let Some(v) = limit_tol {
        cfg.limit_tol = v;
    }
    if let Some(v) = seed {
        cfg.seed = v;
    }
    cfg
}

#[pyclass(name = "Pdg", frozen)]
struct PyPdg {
    inner: pdg::Pdg,
}

impl PyPdg {
    fn joint(&self, probs: Vec<f64>) -> PyResult<JointTable> {
        JointTable::new(self.inner.world_space(), probs).map_err(err)
    }

    fn score_dict<'py>(
        &self,
        py: Python<'py>,
        report: &pdg::ScoreReport,
    ) -> PyResult<Bound<'py, PyDict>> {
        let out = PyDict::new(py);
        out.set_item("gamma", report.gamma)?;
        out.set_item("inc", report.inc)?;
        out.set_item("idef", report.idef)?;
        out.set_item("total", report.total)?;
        let per_inc = PyDict::new(py);
        for (k, v) in &report.per_edge_inc {
            per_inc.set_item(k, *v)?;
        }
        out.set_item("perEdgeInc", per_inc)?;
        let per_h = PyDict::new(py);
        for (k, v) in &report.per_edge_cond_entropy {
            per_h.set_item(k, *v)?;
        }
        out.set_item("perEdgeCondEntropy", per_h)?;
        Ok(out)
    }

    fn solve_dict<'py>(
        &self,
        py: Python<'py>,
        result: &pdg::SolveResult,
    ) -> PyResult<Bound<'py, PyDict>> {
        let out = PyDict::new(py);
        out.set_item("variableOrder", result.mu.space().names().to_vec())?;
        out.set_item("probs", result.mu.probs().to_vec())?;
        out.set_item("iterations", result.iterations)?;
        out.set_item("converged", result.converged)?;
        out.set_item("maskedWorlds", result.masked_worlds.clone())?;
        out.set_item("score", self.score_dict(py, &result.score)?)?;
        if let Some(gap) = result.inc_optimality_gap {
            out.set_item("incOptimalityGap", gap)?;
        }
        Ok(out)
    }
}

#[pymethods]
impl PyPdg {
    /// Parses a pdg-json/1 file.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        match io::parse(text.as_bytes()).map_err(err)? {
            Model::Pdg(inner) => Ok(PyPdg { inner }),
            other => Err(PyValueError::new_err(format!(
                "expected a pdg file, found kind `{}`",
                other.kind()
            ))),
        }
    }

    /// Canonical pdg-json/1 text.
    fn to_json(&self) -> String {
        String::from_utf8(io::serialize(&Model::Pdg(self.inner.clone()))).expect("utf-8")
    }

    fn __repr__(&self) -> String {
        format!(
            "Pdg({} variables, {} edges, {} worlds)",
            self.inner.variables().len(),
            self.inner.edges().len(),
            self.inner.world_space().size()
        )
    }

    #[getter]
    fn variables(&self) -> Vec<String> {
        self.inner
            .variables()
            .iter()
            .map(|v| v.name().to_string())
            .collect()
    }

    #[getter]
    fn edge_labels(&self) -> Vec<String> {
        self.inner.edges().iter().map(|e| e.label.clone()).collect()
    }

    #[getter]
    fn world_size(&self) -> usize {
        self.inner.world_space().size()
    }

    fn values(&self, variable: &str) -> PyResult<Vec<String>> {
        let id = self.inner.require_var(variable).map_err(err)?;
        Ok(self.inner.var(id).values().to_vec())
    }

    /// Violation and warning messages; empty means valid.
    fn validate(&self) -> Vec<String> {
        self.inner.validate().iter().map(|v| v.to_string()).collect()
    }

    #[pyo3(signature = (label, sources, target, cpd, alpha=1.0, beta=1.0))]
    fn add_hyperedge(
        &self,
        label: &str,
        sources: Vec<String>,
        target: &str,
        cpd: Vec<Vec<f64>>,
        alpha: f64,
        beta: f64,
    ) -> PyResult<Self> {
        let cpd = pdg::Cpd::from_rows(cpd).map_err(err)?;
        let source_refs: Vec<&str> = sources.iter().map(|s| s.as_str()).collect();
        let inner = self
            .inner
            .add_hyperedge(label, &source_refs, target, cpd, alpha, beta)
            .map_err(err)?;
        Ok(PyPdg { inner })
    }

    fn union(&self, other: &PyPdg) -> PyResult<Self> {
        Ok(PyPdg {
            inner: self.inner.union(&other.inner).map_err(err)?,
        })
    }

    fn restrict(&self, keep: Vec<String>) -> PyResult<Self> {
        let refs: Vec<&str> = keep.iter().map(|s| s.as_str()).collect();
        Ok(PyPdg {
            inner: self.inner.restrict(&refs).map_err(err)?,
        })
    }

    fn without_edge(&self, label: &str) -> PyResult<Self> {
        Ok(PyPdg {
            inner: self.inner.without_edge(label).map_err(err)?,
        })
    }

    /// Adds a point observation (`value=`) or soft evidence (`dist=`).
    #[pyo3(signature = (variable, value=None, dist=None, beta=1.0))]
    fn observe(
        &self,
        variable: &str,
        value: Option<String>,
        dist: Option<Vec<f64>>,
        beta: f64,
    ) -> PyResult<Self> {
        let evidence = match (value, dist) {
            (Some(v), None) => Evidence::point(variable, v).with_beta(beta),
            (None, Some(q)) => Evidence::soft(variable, q).with_beta(beta),
            _ => {
                return Err(PyValueError::new_err(
                    "observe takes exactly one of value= or dist=",
                ))
            }
        };
        Ok(PyPdg {
            inner: add_observation(&self.inner, &evidence).map_err(err)?,
        })
    }

    /// Score report for a joint distribution given in world order.
    fn score<'py>(
        &self,
        py: Python<'py>,
        probs: Vec<f64>,
        gamma: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mu = self.joint(probs)?;
        let report = pdg::score(&self.inner, &mu, gamma).map_err(err)?;
        self.score_dict(py, &report)
    }

    fn score_decomposed(&self, probs: Vec<f64>, gamma: f64) -> PyResult<f64> {
        let mu = self.joint(probs)?;
        pdg::score_decomposed(&self.inner, &mu, gamma).map_err(err)
    }

    fn inc(&self, probs: Vec<f64>) -> PyResult<f64> {
        let mu = self.joint(probs)?;
        pdg::inc(&self.inner, &mu).map_err(err)
    }

    fn idef(&self, probs: Vec<f64>) -> PyResult<f64> {
        let mu = self.joint(probs)?;
        pdg::idef(&self.inner, &mu).map_err(err)
    }

    /// `(consistent, max_deviation)` against every edge cpd.
    #[pyo3(signature = (probs, tol=1e-7))]
    fn in_sd(&self, probs: Vec<f64>, tol: f64) -> PyResult<(bool, f64)> {
        let mu = self.joint(probs)?;
        let report = pdg::in_sd(&self.inner, &mu, tol).map_err(err)?;
        Ok((report.consistent, report.max_deviation))
    }

    /// Minimizes the score at a fixed gamma.
    #[pyo3(signature = (gamma, *, max_iters=None, step_init=None, tol=None,
                        gamma_ratio=None, gamma_floor=None, limit_tol=None, seed=None))]
    #[allow(clippy::too_many_arguments)]
    fn solve<'py>(
        &self,
        py: Python<'py>,
        gamma: f64,
        max_iters: Option<usize>,
        step_init: Option<f64>,
        tol: Option<f64>,
        gamma_ratio: Option<f64>,
        gamma_floor: Option<f64>,
        limit_tol: Option<f64>,
        seed: Option<u64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let cfg = build_config(
            max_iters,
            step_init,
            tol,
            gamma_ratio,
            gamma_floor,
            limit_tol,
            seed,
        );
        let result = pdg::minimize_score(&self.inner, gamma, &cfg).map_err(err)?;
        self.solve_dict(py, &result)
    }

    /// The limit of the score minimizers as gamma tends to zero.
    #[pyo3(signature = (*, max_iters=None, step_init=None, tol=None,
                        gamma_ratio=None, gamma_floor=None, limit_tol=None, seed=None))]
    #[allow(clippy::too_many_arguments)]
    fn limit<'py>(
        &self,
        py: Python<'py>,
        max_iters: Option<usize>,
        step_init: Option<f64>,
        tol: Option<f64>,
        gamma_ratio: Option<f64>,
        gamma_floor: Option<f64>,
        limit_tol: Option<f64>,
        seed: Option<u64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let cfg = build_config(
            max_iters,
            step_init,
            tol,
            gamma_ratio,
            gamma_floor,
            limit_tol,
            seed,
        );
        let result = pdg::limit_distribution(&self.inner, &cfg).map_err(err)?;
        self.solve_dict(py, &result)
    }

    /// Minimum achievable incompatibility.
    #[pyo3(signature = (*, max_iters=None, seed=None))]
    fn degree_of_inconsistency(&self, max_iters: Option<usize>, seed: Option<u64>) -> PyResult<f64> {
        let cfg = build_config(max_iters, None, None, None, None, None, seed);
        pdg::degree_of_inconsistency(&self.inner, &cfg).map_err(err)
    }

    /// Conditional of `target` given `given` under the limit distribution:
    /// `{"rows": [...], "defined": [...]}`.
    #[pyo3(signature = (target, given, *, max_iters=None, seed=None))]
    fn query<'py>(
        &self,
        py: Python<'py>,
        target: &str,
        given: &str,
        max_iters: Option<usize>,
        seed: Option<u64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let cfg = build_config(max_iters, None, None, None, None, None, seed);
        let answer = pdg::infer::query(&self.inner, target, given, &cfg).map_err(err)?;
        let out = PyDict::new(py);
        out.set_item(
            "rows",
            answer.cpd.rows().map(|r| r.to_vec()).collect::<Vec<_>>(),
        )?;
        out.set_item("defined", answer.defined)?;
        Ok(out)
    }
}

/// Converts a pdg-json/1 model file between kinds. Supported: bn/fg/wfg to
/// pdg, pdg to fg/wfg, and bn/fg/wfg to their specified joint distribution.
#[pyfunction]
#[pyo3(signature = (text, to, k=1.0, beta=1.0))]
fn convert(text: &str, to: &str, k: f64, beta: f64) -> PyResult<String> {
    let model = io::parse(text.as_bytes()).map_err(err)?;
    let converted = match (model, to) {
        (Model::Bn(bn), "pdg") => {
            let betas = vec![beta; bn.variables().len()];
            Model::Pdg(bn_to_pdg(&bn, &betas).map_err(err)?)
        }
        (Model::Fg(fg), "pdg") => Model::Pdg(fg_to_pdg(&fg).map_err(err)?.pdg),
        (Model::Wfg(wfg), "pdg") => Model::Pdg(wfg_to_pdg(&wfg, k).map_err(err)?.pdg),
        (Model::Pdg(p), "fg") => Model::Fg(pdg_to_fg(&p).map_err(err)?.0),
        (Model::Pdg(p), "wfg") => Model::Wfg(pdg_to_wfg(&p).map_err(err)?),
        (Model::Bn(bn), "joint") => {
            Model::Joint(JointSpec::of_table(&bn_distribution(&bn).map_err(err)?))
        }
        (Model::Fg(fg), "joint") => {
            Model::Joint(JointSpec::of_table(&fg_distribution(&fg).map_err(err)?))
        }
        (Model::Wfg(wfg), "joint") => {
            Model::Joint(JointSpec::of_table(&wfg_distribution(&wfg).map_err(err)?))
        }
        (model, to) => {
            return Err(PyValueError::new_err(format!(
                "no conversion from `{}` to `{to}`",
                model.kind()
            )))
        }
    };
    Ok(String::from_utf8(io::serialize(&converted)).expect("utf-8"))
}

#[pymodule]
fn pdg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPdg>()?;
    m.add_function(wrap_pyfunction!(convert, m)?)?;
    m.add("FORMAT_VERSION", io::FORMAT_VERSION)?;
    Ok(())
}
