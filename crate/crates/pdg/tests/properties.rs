//! Cross-module invariants: algebraic laws of the model operations, the
//! Gibbs zero-set equivalence, score homogeneity, and solver reproducibility.

mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;

use pdg::convert::{bn_distribution, bn_to_pdg};
use pdg::io::{self, Model};
use pdg::model::{Cpd, Pdg, VarId, WorldSpace};
use pdg::{in_sd, inc, kl_bits, limit_distribution, minimize_score, score, JointTable, SolveConfig};

proptest! {
    #[test]
    fn world_space_encoding_is_bijective(radices in prop::collection::vec(1usize..5, 1..6)) {
        let space = WorldSpace::new(
            radices.iter().enumerate().map(|(i, r)| (format!("V{i}"), *r)).collect(),
        );
        for idx in 0..space.size() {
            let world = space.decode(idx);
            prop_assert_eq!(space.encode(&world), idx);
        }
    }

    #[test]
    fn kl_is_nonnegative_and_detects_equality(
        raw_p in prop::collection::vec(0.01f64..1.0, 4),
        raw_q in prop::collection::vec(0.01f64..1.0, 4),
    ) {
        let norm = |v: &[f64]| -> Vec<f64> {
            let s: f64 = v.iter().sum();
            v.iter().map(|x| x / s).collect()
        };
        let p = norm(&raw_p);
        let q = norm(&raw_q);
        let d = kl_bits(&p, &q);
        prop_assert!(d >= 0.0);
        prop_assert!(kl_bits(&p, &p) < 1e-12);
        let max_gap = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if d < 1e-12 {
            prop_assert!(max_gap < 1e-5);
        }
    }

    #[test]
    fn marginalization_composes(
        weights in prop::collection::vec(0.01f64..1.0, 24),
    ) {
        let space = WorldSpace::new(vec![
            ("A".into(), 2),
            ("B".into(), 3),
            ("C".into(), 4),
        ]);
        let mu = JointTable::from_weights(space, weights).unwrap();
        let via_pair = mu.marginal(&["A", "C"]).unwrap().marginal(&["A"]).unwrap();
        let direct = mu.marginal(&["A"]).unwrap();
        for (x, y) in via_pair.probs().iter().zip(direct.probs()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}

/// Canonical bytes of a PDG up to variable order and edge labeling: variables
/// are sorted by name, edges are relabeled in the order of a structural key.
fn normalized_bytes(pdg: &Pdg) -> Vec<u8> {
    let mut names: Vec<&str> = pdg.variables().iter().map(|v| v.name()).collect();
    names.sort_unstable();
    let mut builder = Pdg::builder();
    for name in &names {
        let v = pdg
            .variables()
            .iter()
            .find(|v| v.name() == *name)
            .unwrap();
        builder = builder.variable(
            v.name(),
            &v.values().iter().map(|s| s.as_str()).collect::<Vec<_>>(),
        );
    }
    for (i, v) in pdg.variables().iter().enumerate() {
        if let Some(components) = pdg.product_components(VarId(i)) {
            let comp_names: Vec<&str> = components.iter().map(|c| pdg.var(*c).name()).collect();
            builder = builder.product(v.name(), &comp_names);
        }
    }
    let mut keyed: Vec<(String, &pdg::model::Edge)> = pdg
        .edges()
        .iter()
        .map(|e| {
            let key = format!(
                "{}|{}|{:?}|{}|{}",
                pdg.var(e.source).name(),
                pdg.var(e.target).name(),
                e.cpd.rows().collect::<Vec<_>>(),
                e.alpha,
                e.beta,
            );
            (key, e)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    for (i, (_, e)) in keyed.into_iter().enumerate() {
        builder = builder.edge(
            format!("e{i}"),
            pdg.var(e.source).name(),
            pdg.var(e.target).name(),
            e.cpd.clone(),
            e.alpha,
            e.beta,
        );
    }
    io::serialize(&Model::Pdg(builder.build_unvalidated().unwrap()))
}

#[test]
fn union_is_associative_and_commutative_up_to_relabeling() {
    let mut rng = rng(42);
    for _ in 0..20 {
        let a = random_plain_pdg(&mut rng);
        let b = random_plain_pdg(&mut rng);
        let c = random_plain_pdg(&mut rng);

        let ab_c = a.union(&b).unwrap().union(&c).unwrap();
        let a_bc = a.union(&b.union(&c).unwrap()).unwrap();
        assert_eq!(normalized_bytes(&ab_c), normalized_bytes(&a_bc));

        let ab = a.union(&b).unwrap();
        let ba = b.union(&a).unwrap();
        assert_eq!(normalized_bytes(&ab), normalized_bytes(&ba));
    }
}

#[test]
fn union_with_self_doubles_incompatibility() {
    let mut rng = rng(43);
    for _ in 0..10 {
        let model = random_plain_pdg(&mut rng);
        let doubled = model.union(&model).unwrap();
        let mu = random_joint(&mut rng, model.world_space());
        let single = inc(&model, &mu).unwrap();
        let both = inc(&doubled, &mu).unwrap();
        assert!((both - 2.0 * single).abs() <= 1e-9, "{both} vs {}", 2.0 * single);
    }
}

#[test]
fn gibbs_zero_set_matches_exact_consistency() {
    let mut rng = rng(44);
    for _ in 0..10 {
        let bn = random_bn(&mut rng, 3);
        let model = bn_to_pdg(&bn, &[1.0; 3]).unwrap();
        let reference = bn_distribution(&bn).unwrap();
        assert!(inc(&model, &reference).unwrap() < 1e-9);
        assert!(in_sd(&model, &reference, 1e-9).unwrap().consistent);

        // perturb: mix with uniform on the feasible support
        let probs: Vec<f64> = reference
            .probs()
            .iter()
            .map(|p| if *p > 0.0 { 0.7 * p + 0.3 } else { 0.0 })
            .collect();
        let perturbed = JointTable::from_weights(reference.space().clone(), probs).unwrap();
        let off = inc(&model, &perturbed).unwrap();
        assert!(off > 1e-6, "perturbed distribution still scores {off}");
        assert!(!in_sd(&model, &perturbed, 1e-6).unwrap().consistent);
    }
}

#[test]
fn score_is_homogeneous_in_beta_and_gamma() {
    let mut rng = rng(45);
    for _ in 0..20 {
        let model = random_plain_pdg(&mut rng);
        let mu = random_joint(&mut rng, model.world_space());
        let gamma = 0.2 + rng.random::<f64>();
        let c = 0.3 + 2.0 * rng.random::<f64>();
        let base = score(&model, &mu, gamma).unwrap().total;
        let scaled_model = model.reweighted(|e| (e.alpha, c * e.beta));
        let scaled = score(&scaled_model, &mu, c * gamma).unwrap().total;
        assert!(
            (scaled - c * base).abs() <= 1e-9,
            "homogeneity: {scaled} vs {}",
            c * base
        );
    }
}

#[test]
fn score_is_strictly_convex_below_the_gamma_bound() {
    let mut rng = rng(48);
    for _ in 0..20 {
        let model = random_plain_pdg(&mut rng);
        let gamma = 0.5 * pdg::solve::uniqueness_gamma_bound(&model).min(1.0);
        let space = model.world_space();
        let a = random_joint(&mut rng, space.clone());
        let b = random_joint(&mut rng, space.clone());
        if a.total_variation(&b).unwrap() < 1e-3 {
            continue;
        }
        let mixed: Vec<f64> = a
            .probs()
            .iter()
            .zip(b.probs())
            .map(|(x, y)| 0.5 * (x + y))
            .collect();
        let mid = JointTable::from_weights(space, mixed).unwrap();
        let chord = 0.5 * score(&model, &a, gamma).unwrap().total
            + 0.5 * score(&model, &b, gamma).unwrap().total;
        let at_mid = score(&model, &mid, gamma).unwrap().total;
        assert!(
            at_mid < chord,
            "midpoint {at_mid} not strictly below chord {chord}"
        );
    }
}

#[test]
fn solver_objective_is_monotone_in_iteration_budget() {
    let model = fixture_pdg("floomp.pdg.json");
    let mut cfg = SolveConfig::default();
    let mut previous = f64::INFINITY;
    for budget in [1, 2, 4, 8, 16, 32, 64, 128] {
        cfg.max_iters = budget;
        let result = minimize_score(&model, 0.5, &cfg).unwrap();
        let objective = result.score.total;
        assert!(
            objective <= previous + 1e-12,
            "objective rose from {previous} to {objective} at budget {budget}"
        );
        previous = objective;
    }
}

#[test]
fn limit_is_reproducible_across_schedule_ratios() {
    let mut rng = rng(46);
    for _ in 0..5 {
        let model = random_plain_pdg(&mut rng);
        let mut cfg = SolveConfig {
            gamma_schedule_ratio: 0.5,
            ..SolveConfig::default()
        };
        let half = limit_distribution(&model, &cfg).unwrap();
        cfg.gamma_schedule_ratio = 0.7;
        let seven = limit_distribution(&model, &cfg).unwrap();
        let tv = half.mu.total_variation(&seven.mu).unwrap();
        assert!(tv <= 1e-4, "schedule ratios disagree: tv {tv:.3e}");
    }
}

#[test]
fn projection_edges_are_deterministic_and_consistent() {
    let mut rng = rng(47);
    let base = Pdg::builder()
        .variable("A", &["0", "1", "2"])
        .variable("B", &["0", "1"])
        .variable("C", &["0", "1"])
        .build()
        .unwrap();
    let rows = 6;
    let cpd = Cpd::from_rows(
        (0..rows)
            .map(|_| {
                let p = rng.random::<f64>();
                vec![p, 1.0 - p]
            })
            .collect(),
    )
    .unwrap();
    let grown = base
        .add_hyperedge("j", &["A", "B"], "C", cpd, 1.0, 1.0)
        .unwrap();
    let prod = grown.var_id("A×B").unwrap();
    for e in grown.edges() {
        if e.source == prod && e.label.contains('↠') {
            assert!(e.cpd.is_deterministic());
            for row in e.cpd.rows() {
                assert_eq!(row.iter().filter(|v| **v == 1.0).count(), 1);
            }
        }
    }
    // the product variable's value list is the row-major Cartesian product
    let values = grown.var(prod).values();
    assert_eq!(values.len(), 6);
    assert_eq!(values[0], "(0,0)");
    assert_eq!(values[1], "(0,1)");
    assert_eq!(values[5], "(2,1)");
}
