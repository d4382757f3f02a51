#![allow(dead_code)]

pub mod bvp;

use rand::Rng;
use uphill::MacroParams;

/// Point of the simplex `{a, b >= 0, a + b <= 1}`.
pub fn reservoir(rng: &mut impl Rng) -> [f64; 2] {
    let (a, b): (f64, f64) = (rng.gen(), rng.gen());
    if a + b > 1.0 {
        [1.0 - a, 1.0 - b]
    } else {
        [a, b]
    }
}

/// Admissible parameters with positive definite diffusion matrix.
pub fn valid_params(rng: &mut impl Rng) -> MacroParams {
    loop {
        let s11 = rng.gen_range(0.05..2.0);
        let s12: f64 = rng.gen_range(0.0..1.0);
        let s21 = rng.gen_range(0.0..1.0);
        let s22 = s11 + s21 - s12;
        if s22 <= 0.05 || s11 * s22 - s12 * s21 <= 1e-3 {
            continue;
        }
        let h: f64 = rng.gen_range(0.0..1.0);
        let m: f64 = rng.gen_range(0.0..1.0);
        let upsilon = (2.0 * s12 + m).max(2.0 * s21 + h) + rng.gen_range(0.0..2.0);
        let p = MacroParams {
            sigma11: s11,
            sigma12: s12,
            sigma21: s21,
            sigma22: s22,
            upsilon,
            h,
            m,
            ..MacroParams::reference(reservoir(rng), reservoir(rng))
        };
        assert!(uphill::rates::validate(&p).valid, "{p:?}");
        return p;
    }
}

/// Admissible symmetric parameters (`σ11 = σ22`, `σ12 = σ21`, `h = m`).
pub fn symmetric_params(rng: &mut impl Rng) -> MacroParams {
    loop {
        let s11 = rng.gen_range(0.05..2.0);
        let s12: f64 = rng.gen_range(0.0..1.0);
        if s12 >= s11 {
            continue;
        }
        let m = rng.gen_range(0.0..1.0);
        let upsilon = 2.0 * s12 + m + rng.gen_range(0.0..2.0);
        return MacroParams {
            sigma11: s11,
            sigma12: s12,
            sigma21: s12,
            sigma22: s11,
            upsilon,
            h: m,
            m,
            ..MacroParams::reference(reservoir(rng), reservoir(rng))
        };
    }
}
