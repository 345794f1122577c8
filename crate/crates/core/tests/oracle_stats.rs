//! Statistical behaviour of the simulated oracle: sampled covariance must
//! match the closed-form solution of the linear system, the test must
//! agree with the exact oracle on easy queries, and caching/seeding must
//! be exactly reproducible.

mod common;

use std::collections::BTreeSet;

use common::{rng, vset};
use intervene::bench::{sbm_generate, SbmConfig};
use intervene::graph::DirectedGraph;
use intervene::oracle::{
    fisher_z_ci, graph_oracle_ci, sample, scm_from_graph, CiConfig, CiQuery, DataOracle,
    GraphOracle, InterventionOracle,
};
use intervene::separation::SeparationFlavor;
use nalgebra::DMatrix;
use rand::Rng;

fn closed_form_covariance(
    scm: &intervene::oracle::LinearScm,
    intervention: &BTreeSet<usize>,
) -> DMatrix<f64> {
    // Rebuilt from the published weights, independent of the library's
    // internal solver: row v collects −w(u, v) unless v is intervened.
    let n = scm.n();
    let mut m = DMatrix::<f64>::identity(n, n);
    for (u, v, w) in scm.weights() {
        if !intervention.contains(&v) {
            m[(v, u)] -= w;
        }
    }
    let inv = m.try_inverse().unwrap();
    let mut noise = DMatrix::<f64>::zeros(n, n);
    for v in 0..n {
        noise[(v, v)] = scm.noise_sd()[v].powi(2);
    }
    &inv * noise * inv.transpose()
}

#[test]
fn sampled_covariance_matches_the_closed_form() {
    let g = DirectedGraph::from_edges(4, &[(0, 1), (1, 2), (2, 1), (2, 3)]).unwrap();
    let scm = scm_from_graph(&g, 21).unwrap();
    let s = 100_000;
    for intervention in [vset(&[]), vset(&[1]), vset(&[2, 3])] {
        let data = sample(&scm, &intervention, s, 7).unwrap();
        let sigma = closed_form_covariance(&scm, &intervention);

        let mut means = vec![0.0; 4];
        for v in 0..4 {
            means[v] = (0..s).map(|r| data.value(r, v)).sum::<f64>() / s as f64;
        }
        for i in 0..4 {
            for j in i..4 {
                let emp: f64 = (0..s)
                    .map(|r| (data.value(r, i) - means[i]) * (data.value(r, j) - means[j]))
                    .sum::<f64>()
                    / (s as f64 - 1.0);
                // Var of a sample covariance of a Gaussian pair.
                let se =
                    ((sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)].powi(2)) / s as f64).sqrt();
                assert!(
                    (emp - sigma[(i, j)]).abs() < 5.0 * se.max(1e-9),
                    "cov[{i},{j}] = {emp}, want {} ± {se} under do({intervention:?})",
                    sigma[(i, j)]
                );
            }
        }
    }
}

#[test]
fn data_oracle_is_deterministic_and_caches_datasets() {
    let g = DirectedGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    let scm = scm_from_graph(&g, 3).unwrap();
    let cfg = CiConfig::new(0.01, 2000).unwrap();
    let mut a = DataOracle::new(scm.clone(), cfg, 99).unwrap();
    let mut b = DataOracle::new(scm, cfg, 99).unwrap();

    let queries = [
        CiQuery::marginal(0, 2, vset(&[])),
        CiQuery::conditional(0, 2, vec![1], vset(&[])),
        CiQuery::marginal(1, 2, vset(&[0])),
        CiQuery::marginal(0, 1, vset(&[])),
    ];
    for q in &queries {
        assert_eq!(a.ci(q).unwrap(), b.ci(q).unwrap());
    }
    assert_eq!(a.queries(), 4);
    // Two distinct interventions → two generated datasets, reused after.
    assert_eq!(a.datasets_created(), 2);
    for q in &queries {
        a.ci(q).unwrap();
    }
    assert_eq!(a.datasets_created(), 2);
    assert_eq!(a.queries(), 8);
}

#[test]
fn different_master_seeds_give_different_data() {
    let g = DirectedGraph::from_edges(2, &[(0, 1)]).unwrap();
    let scm = scm_from_graph(&g, 3).unwrap();
    let s1 = sample(&scm, &vset(&[]), 50, 1).unwrap();
    let s2 = sample(&scm, &vset(&[]), 50, 2).unwrap();
    assert_ne!(s1.data(), s2.data());
}

#[test]
fn collider_shows_marginal_independence_and_conditional_dependence() {
    let g = DirectedGraph::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
    let scm = scm_from_graph(&g, 14).unwrap();
    let data = sample(&scm, &vset(&[]), 20_000, 5).unwrap();
    assert!(fisher_z_ci(&data, 0, 1, &[], 0.01).unwrap());
    assert!(!fisher_z_ci(&data, 0, 1, &[2], 0.01).unwrap());
    assert!(!fisher_z_ci(&data, 0, 2, &[], 0.01).unwrap());
}

#[test]
fn intervening_everywhere_severs_all_dependence() {
    let g = DirectedGraph::from_edges(4, &[(0, 1), (1, 2), (2, 0), (2, 3)]).unwrap();
    let scm = scm_from_graph(&g, 8).unwrap();
    let all = vset(&[0, 1, 2, 3]);
    let data = sample(&scm, &all, 20_000, 9).unwrap();
    for x in 0..4 {
        for y in x + 1..4 {
            assert!(
                fisher_z_ci(&data, x, y, &[], 0.01).unwrap(),
                "{x} and {y} should be independent under do(V)"
            );
        }
    }
}

#[test]
fn data_oracle_mostly_agrees_with_the_exact_oracle() {
    let cfg = SbmConfig::new(10, 0.2, 3).unwrap();
    let g = sbm_generate(&cfg, 42);
    let scm = scm_from_graph(&g, 43).unwrap();
    let mut exact = GraphOracle::new(g.clone(), SeparationFlavor::D);
    let mut data = DataOracle::new(scm, CiConfig::new(0.01, 20_000).unwrap(), 44).unwrap();

    let mut rng = rng(0xa6e);
    let mut agree = 0;
    let mut total = 0;
    while total < 300 {
        let x = rng.gen_range(0..10);
        let y = rng.gen_range(0..10);
        if x == y {
            continue;
        }
        total += 1;
        let with_cond = rng.gen_bool(0.5);
        let cond: Vec<usize> = if with_cond {
            (0..10)
                .filter(|&v| v != x && v != y && rng.gen_bool(0.15))
                .collect()
        } else {
            Vec::new()
        };
        let intervention: BTreeSet<usize> = (0..10)
            .filter(|&v| v != x && v != y && !cond.contains(&v) && rng.gen_bool(0.1))
            .collect();
        let q = CiQuery::conditional(x, y, cond, intervention);
        if exact.ci(&q).unwrap() == data.ci(&q).unwrap() {
            agree += 1;
        }
    }
    assert!(
        agree * 100 >= total * 95,
        "only {agree}/{total} queries agreed"
    );
}

#[test]
fn free_function_answers_match_the_oracle_struct() {
    let g = common::rooted_four_cycle();
    let mut oracle = GraphOracle::new(g.clone(), SeparationFlavor::Sigma);
    let q = CiQuery::conditional(0, 2, vec![1, 4], vset(&[]));
    assert_eq!(
        oracle.ci(&q).unwrap(),
        graph_oracle_ci(&g, SeparationFlavor::Sigma, &q).unwrap()
    );
}
