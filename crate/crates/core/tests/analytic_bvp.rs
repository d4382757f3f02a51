//! Stationary continuum solutions against an independent shooting solver.

mod common;

use common::bvp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uphill::analytic::{
    classify_uphill, stationary_continuum, weak_coupling_solution, BoundaryDensities, GlobalUphill, MinimizerConfig,
    ProfileShape,
};
use uphill::MacroParams;

#[test]
fn reference_current_at_left_end_matches_shooting() {
    let p = MacroParams::reference([0.2, 0.6], [0.3, 0.1]);
    let sol = stationary_continuum(&p).unwrap();
    let oracle = bvp::solve(&p, 4000);
    assert!((sol.rho1(0.0) - 0.2).abs() < 1e-15);
    let j = sol.j1(0.0);
    assert!((j - oracle.current(0, 0)).abs() < 1e-3, "closed {j} oracle {}", oracle.current(0, 0));
    assert!((j - 0.065).abs() < 1e-3 && j > 0.0, "J1(0) = {j}");
}

#[test]
fn closed_form_matches_shooting_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let p = common::valid_params(&mut rng);
        let sol = stationary_continuum(&p).unwrap();
        let oracle = bvp::solve(&p, 4000);
        for i in (0..=4000).step_by(40) {
            let x = i as f64 / 4000.0;
            let o = oracle.rho(i);
            assert!((sol.rho1(x) - o[0]).abs() < 1e-8 && (sol.rho2(x) - o[1]).abs() < 1e-8, "{p:?} at {x}");
            let dj = (sol.j1(x) - oracle.current(i, 0)).abs();
            assert!(dj < 1e-8 * (1.0 + sol.j1(x).abs()), "{p:?} x={x} dj={dj}");
        }
    }
}

#[test]
fn closed_form_satisfies_ode_and_boundary_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let p = common::valid_params(&mut rng);
        let sol = stationary_continuum(&p).unwrap();
        let ProfileShape::Coupled(k) = sol.shape else { panic!("coupled shape expected") };
        let s = p.sigma();
        let (l, r) = (p.rho_left(), p.rho_right());
        for a in 0..2 {
            assert!((sol.rho(a, 0.0) - l[a]).abs() < 1e-10);
            assert!((sol.rho(a, 1.0) - r[a]).abs() < 1e-10);
        }
        assert!(k.a > 0.0 && k.b < 0.0 && (k.a + k.b).abs() < 1e-10);
        // Second derivatives in closed form.
        let dd = |a: usize, x: f64| {
            let f = if a == 0 { k.a / k.b } else { 1.0 };
            f * k.r * k.r * (k.c * (-k.r * x).exp() + k.d * (k.r * x).exp())
        };
        let total_j = p.colorblind_rate() * (l[0] + l[1] - r[0] - r[1]);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let v = p.upsilon * (sol.rho1(x) - sol.rho2(x));
            let res0 = s[0][0] * dd(0, x) + s[0][1] * dd(1, x) - v;
            let res1 = s[1][0] * dd(0, x) + s[1][1] * dd(1, x) + v;
            assert!(res0.abs() < 1e-8 && res1.abs() < 1e-8, "{p:?} x={x}: {res0} {res1}");
            let affine = l[0] + l[1] + x * (r[0] + r[1] - l[0] - l[1]);
            assert!((sol.rho1(x) + sol.rho2(x) - affine).abs() < 1e-10);
            assert!((sol.j1(x) + sol.j2(x) - total_j).abs() < 1e-10);
        }
        let v = classify_uphill(&sol, &MinimizerConfig { scan_step: 1e-2, tol: 1e-8 });
        assert_eq!(v.global, GlobalUphill::None);
    }
}

#[test]
fn equal_reservoirs_give_constant_profile() {
    // Constant profiles also need ρ1 = ρ2, otherwise the reaction term bends them.
    let p = MacroParams::reference([0.3, 0.3], [0.3, 0.3]);
    let sol = stationary_continuum(&p).unwrap();
    let ProfileShape::Coupled(k) = sol.shape else { panic!() };
    assert!(k.c.abs() < 1e-12 && k.d.abs() < 1e-12 && k.f.abs() < 1e-12);
}

#[test]
fn weak_coupling_has_no_local_uphill_on_coarse_grid() {
    let cfg = MinimizerConfig { scan_step: 1e-2, tol: 1e-8 };
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..2000 {
        let k: f64 = rng.gen_range(0.1..10.0);
        let l = common::reservoir(&mut rng);
        let r = common::reservoir(&mut rng);
        if l[0] >= r[0] {
            continue;
        }
        let w = weak_coupling_solution(1.0, k * k, BoundaryDensities::new(l, r)).unwrap();
        let (_, min) = uphill::analytic::minimize_on_unit(|x| w.current(0, x), &cfg);
        assert!(min <= 1e-12, "k={k} {l:?} {r:?}: {min}");
    }
}

#[test]
fn weak_coupling_matches_shooting() {
    let mut p = MacroParams::reference([0.1, 0.5], [0.4, 0.2]);
    p.sigma12 = 0.0;
    p.sigma21 = 0.0;
    p.upsilon = 3.0;
    let w = weak_coupling_solution(1.0, 3.0, BoundaryDensities::of(&p)).unwrap();
    let oracle = bvp::solve(&p, 2000);
    for i in (0..=2000).step_by(50) {
        let x = i as f64 / 2000.0;
        assert!((w.rho(0, x) - oracle.rho(i)[0]).abs() < 1e-9);
        assert!((w.current(1, x) - oracle.current(i, 1)).abs() < 1e-8);
    }
}
