//! Sampler exactness and estimator behaviour on small chains.

use nalgebra::{DMatrix, DVector};
use uphill::analytic::stationary_discrete;
use uphill::model::{pair_index, Configuration, EdgeRateMatrix, Graph, ProcessModel};
use uphill::rates::build_model;
use uphill::simulator::{run, run_ensemble, SimConfig};
use uphill::MacroParams;

/// Stationary law of the full chain generator over all `3^sites`
/// configurations, assembled directly from the model's rate tables.
fn exact_law(model: &ProcessModel) -> Vec<f64> {
    let v = model.sites();
    let count = 3usize.pow(v as u32);
    let decode = |mut i: usize| {
        let mut c = vec![0u8; v];
        for z in (0..v).rev() {
            c[z] = (i % 3) as u8;
            i /= 3;
        }
        c
    };
    let encode = |c: &[u8]| c.iter().fold(0usize, |a, &s| 3 * a + s as usize);
    let mut q = DMatrix::<f64>::zeros(count, count);
    for i in 0..count {
        let c = decode(i);
        for (e, &(x, y)) in model.graph.edges.iter().enumerate() {
            for a in 0..3u8 {
                for b in 0..3u8 {
                    if (a, b) == (c[x], c[y]) {
                        continue;
                    }
                    let mut d = c.clone();
                    d[x] = a;
                    d[y] = b;
                    q[(i, encode(&d))] += model.graph.edge_weights[e] * model.bulk.rate((c[x], c[y]), (a, b));
                }
            }
        }
        for (&x, w) in &model.boundary {
            for a in 0..3u8 {
                if a != c[x] {
                    let mut d = c.clone();
                    d[x] = a;
                    q[(i, encode(&d))] += model.graph.site_weights[x] * w.rate(c[x], a);
                }
            }
        }
        let s: f64 = q.row(i).iter().sum();
        q[(i, i)] = -s;
    }
    let mut a = q.transpose();
    let mut rhs = DVector::zeros(count);
    for j in 0..count {
        a[(count - 1, j)] = 1.0;
    }
    rhs[count - 1] = 1.0;
    a.lu().solve(&rhs).unwrap().iter().copied().collect()
}

fn cfg(seed: u64, burn: f64, sample: f64) -> SimConfig {
    SimConfig { seed, burn_in_time: burn, sample_time: sample, ..SimConfig::default() }
}

#[test]
fn two_site_law_matches_exact_generator() {
    let mut p = MacroParams::reference([0.2, 0.6], [0.3, 0.1]);
    p.h = 0.3;
    p.m = 0.1;
    p.upsilon = 2.0;
    let model = build_model(&p, 2).unwrap();
    let pi = exact_law(&model);
    let s = run(&model, &cfg(7, 10.0, 5.0e5)).unwrap();
    assert!(s.event_count > 1_000_000, "{}", s.event_count);
    let emp = &s.pair_correlation[0];
    let tv: f64 = 0.5 * (0..9).map(|i| (emp[i] - pi[i]).abs()).sum::<f64>();
    assert!(tv <= 0.01, "TV {tv}\n{emp:?}\n{pi:?}");
    for z in 0..2 {
        let sum: f64 = s.time_avg_occupation[z].iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
}

#[test]
fn frozen_model_keeps_initial_configuration() {
    let model = ProcessModel::new(Graph::chain(3).unwrap(), EdgeRateMatrix::zero(2), Default::default()).unwrap();
    let c = SimConfig { initial: Some(Configuration(vec![1, 0, 2])), ..cfg(1, 1.0, 10.0) };
    let s = run(&model, &c).unwrap();
    assert_eq!(s.event_count, 0);
    assert!(s.absorbed);
    assert_eq!(s.time_avg_occupation, vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]);
    assert!(s.total_current.iter().all(|&j| j == 0.0));
}

#[test]
fn pure_stirring_equidistributes_one_particle() {
    let g = EdgeRateMatrix::from_transitions(2, &[((1, 0), (0, 1), 1.0), ((0, 1), (1, 0), 1.0)]).unwrap();
    let model = ProcessModel::new(Graph::chain(2).unwrap(), g, Default::default()).unwrap();
    let c = SimConfig { initial: Some(Configuration(vec![1, 0])), ..cfg(3, 0.0, 2.0e4) };
    let s = run(&model, &c).unwrap();
    for z in 0..2 {
        let (m, se) = (s.time_avg_occupation[z][1], s.standard_error[z][1]);
        assert!((m - 0.5).abs() <= 3.0 * se, "{m} ± {se}");
    }
    assert_eq!(pair_index(1, 0, 2).unwrap(), 3);
}

#[test]
fn same_seed_gives_identical_statistics() {
    let model = build_model(&MacroParams::reference([0.2, 0.6], [0.3, 0.1]), 6).unwrap();
    let c = SimConfig { replicas: 3, ..cfg(42, 5.0, 200.0) };
    assert_eq!(run_ensemble(&model, &c).unwrap(), run_ensemble(&model, &c).unwrap());
    let one = SimConfig { replicas: 1, ..c.clone() };
    assert_eq!(run_ensemble(&model, &one).unwrap(), run(&model, &one).unwrap());
    let other = SimConfig { seed: 43, ..c };
    assert_ne!(run_ensemble(&model, &other).unwrap(), run_ensemble(&model, &one).unwrap());
}

#[test]
fn standard_error_scales_with_replicas() {
    let model = build_model(&MacroParams::reference([0.2, 0.6], [0.3, 0.1]), 5).unwrap();
    let base = cfg(5, 20.0, 2000.0);
    let one = run_ensemble(&model, &base).unwrap();
    let many = run_ensemble(&model, &SimConfig { replicas: 16, ..base }).unwrap();
    let mean_se = |s: &uphill::simulator::SimStats| {
        s.standard_error.iter().flat_map(|r| r[1..].iter()).sum::<f64>() / (2 * s.standard_error.len()) as f64
    };
    let ratio = mean_se(&one) / mean_se(&many);
    assert!((3.0..5.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn profile_and_total_current_match_discrete_solution() {
    let p = MacroParams::reference([0.2, 0.6], [0.3, 0.1]);
    let n = 5;
    let model = build_model(&p, n).unwrap();
    let s = run_ensemble(&model, &SimConfig { replicas: 4, ..cfg(9, 50.0, 5000.0) }).unwrap();
    let exact = stationary_discrete(&p, n).unwrap();
    let mut misses = 0;
    for z in 0..n {
        for a in 0..2 {
            let (m, se) = (s.time_avg_occupation[z][a + 1], s.standard_error[z][a + 1]);
            if (m - exact[z][a]).abs() > 3.0 * se {
                misses += 1;
            }
        }
    }
    assert!(misses <= 1, "{misses} components outside 3 SE");
    // Colour-blind exclusion: total current (σ11+σ21)(ρL-ρR)/(N+1) on every bond.
    let expect = p.colorblind_rate() * (0.8 - 0.4) / (n as f64 + 1.0);
    for (j, se) in s.total_current.iter().zip(&s.current_standard_error) {
        assert!(*j > 0.0 && (j - expect).abs() <= 4.0 * se, "{j} ± {se} vs {expect}");
    }
}

#[test]
fn balanced_totals_carry_no_current() {
    let p = MacroParams::reference([0.5, 0.1], [0.2, 0.4]);
    let model = build_model(&p, 4).unwrap();
    let s = run(&model, &cfg(10, 20.0, 4000.0)).unwrap();
    for (j, se) in s.total_current.iter().zip(&s.current_standard_error) {
        assert!(j.abs() <= 4.0 * se, "{j} ± {se}");
    }
}
