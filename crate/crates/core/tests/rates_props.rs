//! Properties of the aggregated-rate system and the explicit generators.

mod common;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uphill::coefficients::{check_closure, extract_edge_coefficients};
use uphill::rates::{
    assemble_xi_system, boundary_rates, build_bulk, bulk_rates, closed_form_y, solve_y, validate, y_from_generator, Side,
};
use uphill::MacroParams;

fn params(seed: u64) -> MacroParams {
    common::valid_params(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Occupancy-only view of a pair state.
fn occ(s: u8) -> usize {
    (s != 0) as usize
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn closed_form_solves_system(seed in any::<u64>()) {
        let p = params(seed);
        let y = solve_y(&p).unwrap();
        let (xi, b) = assemble_xi_system(&p);
        let res = (&xi * DVector::from_row_slice(&y) - b).amax();
        prop_assert!(res <= 1e-12, "residual {res}");
        prop_assert!(y.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn generator_aggregates_equal_closed_form(seed in any::<u64>()) {
        let p = params(seed);
        let g = build_bulk(&p).unwrap();
        prop_assert!(g.check().valid);
        prop_assert!(check_closure(&extract_edge_coefficients(&g)));
        let y = y_from_generator(&g);
        let c = solve_y(&p).unwrap();
        for j in 0..36 {
            prop_assert!((y[j] - c[j]).abs() <= 1e-12, "y{}: {} vs {}", j + 1, y[j], c[j]);
        }
    }

    #[test]
    fn colour_blind_reduction_is_exclusion(seed in any::<u64>()) {
        let p = params(seed);
        let g = build_bulk(&p).unwrap();
        let sigma = p.colorblind_rate();
        // Occupied-empty pairs jump at rate σ; nothing else changes occupancy.
        for from in 0..9usize {
            let (a, b) = ((from / 3) as u8, (from % 3) as u8);
            let mut moved = 0.0;
            for to in 0..9usize {
                let (c, d) = ((to / 3) as u8, (to % 3) as u8);
                if to == from { continue; }
                let r = g.get(from, to);
                if r.abs() <= 1e-12 { continue; }
                if (occ(c), occ(d)) != (occ(a), occ(b)) {
                    prop_assert_eq!(occ(c) + occ(d), occ(a) + occ(b));
                    moved += r;
                }
            }
            let expect = if occ(a) != occ(b) { sigma } else { 0.0 };
            prop_assert!((moved - expect).abs() <= 1e-12);
        }
        for (side, rho, v) in [(Side::Left, p.rho_left(), 0), (Side::Right, p.rho_right(), 9)] {
            let w = boundary_rates(&p, side, v, rho);
            let inject = w.rate(0, 1) + w.rate(0, 2);
            prop_assert!((inject - sigma * (rho[0] + rho[1])).abs() <= 1e-12);
            for s in 1..=2u8 {
                prop_assert!((w.rate(s, 0) - sigma * (1.0 - rho[0] - rho[1])).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn reference_boundaries_follow_displayed_form(l in 0.0f64..0.5, r in 0.0f64..0.5) {
        // In the symmetric reference family both ends share the displayed form.
        let p = MacroParams::reference([l, 0.5 - l / 2.0], [r, 0.3]);
        for side in [Side::Left, Side::Right] {
            let rho = if side == Side::Left { p.rho_left() } else { p.rho_right() };
            let w = boundary_rates(&p, side, 0, rho);
            prop_assert!((w.rate(1, 2) - (p.h + p.sigma21 * rho[0] + p.sigma22 * rho[1])).abs() < 1e-15);
            prop_assert!((w.rate(2, 1) - (p.m + p.sigma11 * rho[0] + p.sigma12 * rho[1])).abs() < 1e-15);
        }
    }
}

#[test]
fn invalid_inequalities_give_negative_aggregates() {
    let mut p = MacroParams::reference([0.1, 0.1], [0.1, 0.1]);
    p.upsilon = 0.5;
    assert!(!validate(&p).valid);
    assert!(closed_form_y(&p).iter().any(|&v| v < 0.0));
    assert!(!bulk_rates(&p).check().valid);
}

#[test]
fn equality_defect_shows_in_boundary_generators() {
    let mut p = MacroParams::reference([0.0, 1.0], [1.0, 0.0]);
    p.sigma22 = 1.2;
    assert!(!validate(&p).valid);
    assert!(bulk_rates(&p).check().valid);
    let left = boundary_rates(&p, Side::Left, 0, p.rho_left());
    let right = boundary_rates(&p, Side::Right, 1, p.rho_right());
    assert!(!left.check().valid || !right.check().valid);
}
