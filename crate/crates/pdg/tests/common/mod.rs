#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pdg::convert::BayesNet;
use pdg::io::{self, Model};
use pdg::model::{Cpd, Pdg, Variable, WorldSpace};
use pdg::JointTable;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn fixture_bytes(name: &str) -> Vec<u8> {
    std::fs::read(fixture_path(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn fixture_model(name: &str) -> Model {
    io::parse(&fixture_bytes(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn fixture_pdg(name: &str) -> Pdg {
    match fixture_model(name) {
        Model::Pdg(p) => p,
        other => panic!("fixture {name} is a {}", other.kind()),
    }
}

pub fn fixture_bn(name: &str) -> BayesNet {
    match fixture_model(name) {
        Model::Bn(b) => b,
        other => panic!("fixture {name} is a {}", other.kind()),
    }
}

pub fn binary(name: &str) -> Variable {
    Variable::new(name, vec!["0".into(), "1".into()]).unwrap()
}

/// Binary cpd row with the head probability in [0.05, 0.95].
pub fn random_binary_row(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let p = 0.05 + 0.9 * rng.random::<f64>();
    vec![p, 1.0 - p]
}

pub fn random_binary_cpd(rng: &mut ChaCha8Rng, rows: usize) -> Cpd {
    Cpd::from_rows((0..rows).map(|_| random_binary_row(rng)).collect()).unwrap()
}

/// Random parent sets over a topological order: each earlier variable is a
/// parent with probability 1/2.
pub fn random_dag(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<usize>> {
    (0..n)
        .map(|i| (0..i).filter(|_| rng.random::<f64>() < 0.5).collect())
        .collect()
}

pub fn random_bn(rng: &mut ChaCha8Rng, n: usize) -> BayesNet {
    let variables: Vec<Variable> = (0..n).map(|i| binary(&format!("X{i}"))).collect();
    let parents = random_dag(rng, n);
    let cpds = parents
        .iter()
        .map(|ps| random_binary_cpd(rng, 1 << ps.len()))
        .collect();
    BayesNet::new(variables, parents, cpds).unwrap()
}

pub fn bn_with_parents(rng: &mut ChaCha8Rng, parents: Vec<Vec<usize>>) -> BayesNet {
    let n = parents.len();
    let variables: Vec<Variable> = (0..n).map(|i| binary(&format!("X{i}"))).collect();
    let cpds = parents
        .iter()
        .map(|ps| random_binary_cpd(rng, 1 << ps.len()))
        .collect();
    BayesNet::new(variables, parents, cpds).unwrap()
}

/// Markov chain X0 -> X1 -> ... -> X(n-1).
pub fn random_chain_bn(rng: &mut ChaCha8Rng, n: usize) -> BayesNet {
    bn_with_parents(rng, (0..n).map(|i| if i == 0 { vec![] } else { vec![i - 1] }).collect())
}

/// Every variable's parents are all its predecessors, so the per-edge
/// conditionals of any joint distribution telescope by the chain rule.
pub fn random_saturated_bn(rng: &mut ChaCha8Rng, n: usize) -> BayesNet {
    bn_with_parents(rng, (0..n).map(|i| (0..i).collect()).collect())
}

/// A plain multigraph PDG: 2-4 binary variables, unit-weight edges between
/// distinct variables, strictly positive cpds, optionally a prior edge from
/// the unit variable.
pub fn random_plain_pdg(rng: &mut ChaCha8Rng) -> Pdg {
    let n = 2 + rng.random_range(0..3usize);
    let with_unit = rng.random::<f64>() < 0.5;
    let mut builder = Pdg::builder();
    if with_unit {
        builder = builder.unit_variable();
    }
    for i in 0..n {
        builder = builder.variable(format!("X{i}"), &["0", "1"]);
    }
    let edges = 1 + rng.random_range(0..5usize);
    for k in 0..edges {
        let source;
        let target;
        if with_unit && rng.random::<f64>() < 0.3 {
            source = "1".to_string();
            target = format!("X{}", rng.random_range(0..n));
        } else {
            let s = rng.random_range(0..n);
            let mut t = rng.random_range(0..n);
            while t == s {
                t = rng.random_range(0..n);
            }
            source = format!("X{s}");
            target = format!("X{t}");
        }
        let rows = if source == "1" { 1 } else { 2 };
        builder = builder.unweighted_edge(
            format!("e{k}"),
            source,
            target,
            random_binary_cpd(rng, rows),
        );
    }
    builder.build().unwrap()
}

/// Strictly positive random distribution over a space.
pub fn random_joint(rng: &mut ChaCha8Rng, space: WorldSpace) -> JointTable {
    let weights: Vec<f64> = (0..space.size())
        .map(|_| -(rng.random::<f64>().max(1e-12)).ln() + 1e-4)
        .collect();
    JointTable::from_weights(space, weights).unwrap()
}

/// Random factor graph over 2-4 binary variables with positive tables.
pub fn random_fg(rng: &mut ChaCha8Rng) -> pdg::convert::FactorGraph {
    let n = 2 + rng.random_range(0..3usize);
    let variables: Vec<Variable> = (0..n).map(|i| binary(&format!("V{i}"))).collect();
    let m = 1 + rng.random_range(0..4usize);
    let mut factors = Vec::with_capacity(m);
    for _ in 0..m {
        let mut width = 1 + rng.random_range(0..2usize);
        if n >= 3 && rng.random::<f64>() < 0.2 {
            width = 3;
        }
        let mut scope: Vec<usize> = Vec::new();
        while scope.len() < width {
            let v = rng.random_range(0..n);
            if !scope.contains(&v) {
                scope.push(v);
            }
        }
        let table = (0..1usize << width)
            .map(|_| 0.1 + 1.9 * rng.random::<f64>())
            .collect();
        factors.push(pdg::convert::Factor { scope, table });
    }
    pdg::convert::FactorGraph::new(variables, factors).unwrap()
}

/// Total variation between the marginals of two tables on the named subset.
pub fn tv_on(a: &JointTable, b: &JointTable, vars: &[&str]) -> f64 {
    let ma = a.marginal(vars).unwrap();
    let mb = b.marginal(vars).unwrap();
    ma.total_variation(&mb).unwrap()
}

/// Conditions a table on `var = value` (slice and renormalize, same space).
pub fn condition(mu: &JointTable, var: &str, value: usize) -> JointTable {
    let space = mu.space().clone();
    let pos = space.position(var).unwrap();
    let weights: Vec<f64> = (0..space.size())
        .map(|w| {
            if space.digit(w, pos) == value {
                mu.prob(w)
            } else {
                0.0
            }
        })
        .collect();
    JointTable::from_weights(space, weights).unwrap()
}
