//! Macroscopic parameters, admissibility conditions, the linear system for the
//! aggregated rates `y`, and the explicit bulk and boundary generators.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::model::{EdgeRateMatrix, Graph, ProcessModel, SiteRateMatrix, SpeciesLabel};
use crate::{Error, Result, TOL};

/// Diffusion matrix `Σ = [[σ11, σ12], [σ21, σ22]]`, reaction rate `Υ`,
/// intrinsic mutation rates `h` (1 → 2) and `m` (2 → 1) and reservoir densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroParams {
    pub sigma11: f64,
    pub sigma12: f64,
    pub sigma21: f64,
    pub sigma22: f64,
    pub upsilon: f64,
    #[serde(default)]
    pub h: f64,
    #[serde(default)]
    pub m: f64,
    #[serde(rename = "rhoL1")]
    pub rho_l1: f64,
    #[serde(rename = "rhoL2")]
    pub rho_l2: f64,
    #[serde(rename = "rhoR1")]
    pub rho_r1: f64,
    #[serde(rename = "rhoR2")]
    pub rho_r2: f64,
}

impl MacroParams {
    /// `σ11 = σ22 = Υ = 1`, `σ12 = σ21 = 1/2`, `h = m = 0`, with the given reservoirs.
    pub fn reference(rho_left: [f64; 2], rho_right: [f64; 2]) -> Self {
        MacroParams {
            sigma11: 1.0,
            sigma12: 0.5,
            sigma21: 0.5,
            sigma22: 1.0,
            upsilon: 1.0,
            h: 0.0,
            m: 0.0,
            rho_l1: rho_left[0],
            rho_l2: rho_left[1],
            rho_r1: rho_right[0],
            rho_r2: rho_right[1],
        }
    }

    pub fn sigma(&self) -> [[f64; 2]; 2] {
        [[self.sigma11, self.sigma12], [self.sigma21, self.sigma22]]
    }

    pub fn rho_left(&self) -> [f64; 2] {
        [self.rho_l1, self.rho_l2]
    }

    pub fn rho_right(&self) -> [f64; 2] {
        [self.rho_r1, self.rho_r2]
    }

    pub fn with_reservoirs(mut self, left: [f64; 2], right: [f64; 2]) -> Self {
        [self.rho_l1, self.rho_l2] = left;
        [self.rho_r1, self.rho_r2] = right;
        self
    }

    /// Column sum `σ11 + σ21`: the jump rate of a particle regardless of species.
    pub fn colorblind_rate(&self) -> f64 {
        self.sigma11 + self.sigma21
    }

    /// True for `σ11 = σ22`, `σ12 = σ21`, `h = m`.
    pub fn is_symmetric(&self) -> bool {
        self.sigma11 == self.sigma22 && self.sigma12 == self.sigma21 && self.h == self.m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    /// Signed slack; negative means violated (for equalities, minus the absolute defect).
    pub margin: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityVerdict {
    pub valid: bool,
    pub checks: Vec<ConditionCheck>,
}

impl ValidityVerdict {
    pub fn violations(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| !c.satisfied)
    }
}

impl fmt::Display for ValidityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.valid {
            return write!(f, "valid");
        }
        let v: Vec<String> = self.violations().map(|c| format!("{} (margin {:.3e})", c.name, c.margin)).collect();
        write!(f, "violated: {}", v.join("; "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityConfig {
    /// Absolute tolerance on `σ11 + σ21 = σ12 + σ22`.
    pub equality_tol: f64,
    /// Slack allowed on the inequalities.
    pub inequality_tol: f64,
}

impl Default for ValidityConfig {
    fn default() -> Self {
        ValidityConfig { equality_tol: TOL, inequality_tol: TOL }
    }
}

pub fn validate(p: &MacroParams) -> ValidityVerdict {
    validate_with(p, &ValidityConfig::default())
}

pub fn validate_with(p: &MacroParams, cfg: &ValidityConfig) -> ValidityVerdict {
    let mut checks = Vec::new();
    let mut ineq = |name: &str, margin: f64| {
        checks.push(ConditionCheck { name: name.into(), margin, satisfied: margin >= -cfg.inequality_tol });
    };
    ineq("sigma11 >= 0", p.sigma11);
    ineq("sigma12 >= 0", p.sigma12);
    ineq("sigma21 >= 0", p.sigma21);
    ineq("sigma22 >= 0", p.sigma22);
    ineq("upsilon >= 0", p.upsilon);
    ineq("h >= 0", p.h);
    ineq("m >= 0", p.m);
    ineq("sigma12 <= (upsilon - m)/2", (p.upsilon - p.m) / 2.0 - p.sigma12);
    ineq("sigma21 <= (upsilon - h)/2", (p.upsilon - p.h) / 2.0 - p.sigma21);
    for (name, v) in [("rhoL1", p.rho_l1), ("rhoL2", p.rho_l2), ("rhoR1", p.rho_r1), ("rhoR2", p.rho_r2)] {
        ineq(&format!("{name} >= 0"), v);
    }
    ineq("rhoL1 + rhoL2 <= 1", 1.0 - p.rho_l1 - p.rho_l2);
    ineq("rhoR1 + rhoR2 <= 1", 1.0 - p.rho_r1 - p.rho_r2);
    let defect = (p.sigma11 + p.sigma21 - p.sigma12 - p.sigma22).abs();
    checks.push(ConditionCheck {
        name: "sigma11 + sigma21 = sigma12 + sigma22".into(),
        margin: -defect,
        satisfied: defect <= cfg.equality_tol,
    });
    let det = p.sigma11 * p.sigma22 - p.sigma12 * p.sigma21;
    for (name, margin) in [("sigma11 > 0", p.sigma11), ("sigma22 > 0", p.sigma22), ("det(Sigma) > 0", det)] {
        checks.push(ConditionCheck { name: name.into(), margin, satisfied: margin > 0.0 });
    }
    let all_finite = [p.sigma11, p.sigma12, p.sigma21, p.sigma22, p.upsilon, p.h, p.m]
        .iter()
        .chain(&[p.rho_l1, p.rho_l2, p.rho_r1, p.rho_r2])
        .all(|v| v.is_finite());
    if !all_finite {
        checks.push(ConditionCheck { name: "finite values".into(), margin: f64::NAN, satisfied: false });
    }
    let valid = checks.iter().all(|c| c.satisfied);
    ValidityVerdict { valid, checks }
}

/// Which sum defines an aggregated rate: over the left target (`Σ_β Γ^{ζβ}`)
/// or the right target (`Σ_β Γ^{βζ}`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Left,
    Right,
}

/// `y_j = Σ_β Γ_{from}^{(ζ,β)}` (left slot) or `Σ_β Γ_{from}^{(β,ζ)}` (right slot),
/// summing off-diagonal rates only. Entries are listed in the order `y1..y36`.
pub const Y_DEFINITIONS: [(Slot, (SpeciesLabel, SpeciesLabel), SpeciesLabel); 36] = {
    use Slot::{Left as L, Right as R};
    [
        (R, (1, 0), 1),
        (R, (0, 0), 1),
        (L, (0, 1), 1),
        (L, (0, 0), 1),
        (L, (1, 0), 0),
        (L, (1, 0), 2),
        (R, (0, 1), 0),
        (R, (0, 1), 2),
        (R, (2, 0), 1),
        (L, (0, 2), 1),
        (R, (0, 2), 1),
        (L, (2, 0), 1),
        (R, (2, 0), 2),
        (R, (0, 0), 2),
        (L, (0, 2), 2),
        (L, (0, 0), 2),
        (L, (2, 0), 0),
        (R, (0, 2), 0),
        (R, (1, 0), 2),
        (L, (0, 1), 2),
        (R, (1, 1), 0),
        (R, (2, 1), 0),
        (R, (2, 2), 1),
        (L, (1, 1), 0),
        (L, (1, 2), 0),
        (R, (1, 2), 1),
        (L, (2, 1), 1),
        (L, (2, 2), 1),
        (R, (1, 1), 2),
        (R, (1, 2), 0),
        (R, (2, 1), 2),
        (R, (2, 2), 0),
        (L, (1, 1), 2),
        (L, (1, 2), 2),
        (L, (2, 1), 0),
        (L, (2, 2), 0),
    ]
};

fn y_index(slot: Slot, from: (SpeciesLabel, SpeciesLabel), zeta: SpeciesLabel) -> usize {
    Y_DEFINITIONS
        .iter()
        .position(|&(s, f, z)| s == slot && f == from && z == zeta)
        .expect("every off-diagonal aggregate has a y index")
}

/// Aggregated rates `y` of a two-species bulk generator.
pub fn y_from_generator(g: &EdgeRateMatrix) -> [f64; 36] {
    let mut y = [0.0; 36];
    for (j, &(slot, from, zeta)) in Y_DEFINITIONS.iter().enumerate() {
        y[j] = (0..3u8)
            .map(|b| match slot {
                Slot::Left if (zeta, b) != from => g.rate(from, (zeta, b)),
                Slot::Right if (b, zeta) != from => g.rate(from, (b, zeta)),
                _ => 0.0,
            })
            .sum();
    }
    y
}

type Form = [f64; 36];

/// Linear form in `y` of the net rate into species `zeta` at one endpoint,
/// given the pair state `from` (the "flux" whose multilinear expansion gives
/// the edge coefficients).
fn flux_form(slot: Slot, from: (SpeciesLabel, SpeciesLabel), zeta: SpeciesLabel) -> Form {
    let mut f = [0.0; 36];
    let own = match slot {
        Slot::Left => from.0,
        Slot::Right => from.1,
    };
    if own != zeta {
        f[y_index(slot, from, zeta)] = 1.0;
    } else {
        for z in (0..3u8).filter(|&z| z != zeta) {
            f[y_index(slot, from, z)] -= 1.0;
        }
    }
    f
}

fn combine(terms: &[(f64, Form)]) -> Form {
    let mut out = [0.0; 36];
    for (c, f) in terms {
        for j in 0..36 {
            out[j] += c * f[j];
        }
    }
    out
}

/// The 30 matching conditions as `(Ξ, b)`, rows ordered as
/// `F-1, F+1, F0` for the pairs `11, 12, 22, 21`, then the 16 closure
/// conditions `G+1, G-1`, then `E^1, E^2`.
pub fn assemble_xi_system(p: &MacroParams) -> (DMatrix<f64>, DVector<f64>) {
    let mut rows: Vec<Form> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let (l, r) = (Slot::Left, Slot::Right);
    let first = |slot: Slot, from: (u8, u8), z: u8| {
        combine(&[(1.0, flux_form(slot, from, z)), (-1.0, flux_form(slot, (0, 0), z))])
    };
    let sigma = p.sigma();
    for (z, b) in [(1u8, 1u8), (1, 2), (2, 2), (2, 1)] {
        let s = sigma[z as usize - 1][b as usize - 1];
        let sign = if z == b { -1.0 } else { 1.0 };
        rows.push(first(r, (b, 0), z));
        rhs.push(s);
        rows.push(first(l, (0, b), z));
        rhs.push(s);
        rows.push(combine(&[(1.0, first(l, (b, 0), z)), (1.0, first(r, (0, b), z))]));
        rhs.push(-2.0 * s + sign * p.upsilon);
    }
    for slot in [l, r] {
        for z in 1..=2u8 {
            for g in 1..=2u8 {
                for d in 1..=2u8 {
                    rows.push(combine(&[
                        (1.0, flux_form(slot, (g, d), z)),
                        (-1.0, flux_form(slot, (g, 0), z)),
                        (-1.0, flux_form(slot, (0, d), z)),
                        (1.0, flux_form(slot, (0, 0), z)),
                    ]));
                    rhs.push(0.0);
                }
            }
        }
    }
    for z in 1..=2u8 {
        rows.push(combine(&[(1.0, flux_form(l, (0, 0), z)), (1.0, flux_form(r, (0, 0), z))]));
        rhs.push(0.0);
    }
    let xi = DMatrix::from_fn(rows.len(), 36, |i, j| rows[i][j]);
    (xi, DVector::from_vec(rhs))
}

/// Closed-form aggregated rates, evaluated without checking admissibility.
/// Negative components signal that no non-negative generator exists.
pub fn closed_form_y(p: &MacroParams) -> [f64; 36] {
    let (s11, s12, s21) = (p.sigma11, p.sigma12, p.sigma21);
    let (u, h, m) = (p.upsilon, p.h, p.m);
    let g = s11 + s21;
    [
        s11,
        0.0,
        s11,
        0.0,
        g,
        u - 2.0 * s21 - h,
        g,
        h,
        s12,
        s12,
        m,
        u - 2.0 * s12 - m,
        s11 - s12 + s21,
        0.0,
        s11 - s12 + s21,
        0.0,
        g,
        g,
        s21,
        s21,
        0.0,
        0.0,
        s12 + m,
        0.0,
        0.0,
        s11 + m,
        s11 - 2.0 * s12 + u - m,
        u - s12 - m,
        s21 + h,
        0.0,
        s11 - s12 + s21 + h,
        0.0,
        u - s21 - h,
        s11 - s12 - s21 + u - h,
        0.0,
        0.0,
    ]
}

/// Aggregated rates for admissible parameters.
pub fn solve_y(p: &MacroParams) -> Result<[f64; 36]> {
    let v = validate(p);
    if !v.valid {
        return Err(Error::InvalidParams(v));
    }
    Ok(closed_form_y(p))
}

/// The explicit bulk generator, built without checking admissibility.
///
/// Entries follow the standard construction. The only freedom left by the
/// aggregated rates lies in rows `12` and `21`; when `Υ - σ12 - σ21 - h`
/// (resp. `- m`) is negative, the deficit is moved to the neighbouring entries
/// of the same row so that every aggregate is unchanged and the row stays
/// non-negative whenever the parameters are admissible.
pub fn bulk_rates(p: &MacroParams) -> EdgeRateMatrix {
    let (s11, s12, s21, s22) = (p.sigma11, p.sigma12, p.sigma21, p.sigma22);
    let (u, h, m) = (p.upsilon, p.h, p.m);
    let r12 = u - s12 - s21 - h;
    let r21 = u - s12 - s21 - m;
    let (g12_11, g12_21, g12_22) = if r12 >= 0.0 { (m, s11, r12) } else { (m - r12, s11 + r12, 0.0) };
    let (g21_11, g21_12, g21_22) = if r21 >= 0.0 { (r21, s22, h) } else { (0.0, s22 + r21, h - r21) };
    let t = [
        ((0, 1), (0, 2), h),
        ((0, 1), (1, 0), s11),
        ((0, 1), (2, 0), s21),
        ((0, 2), (0, 1), m),
        ((0, 2), (1, 0), s12),
        ((0, 2), (2, 0), s22),
        ((1, 0), (0, 1), s11),
        ((1, 0), (0, 2), s21),
        ((1, 0), (2, 0), u - 2.0 * s21 - h),
        ((1, 1), (1, 2), h),
        ((1, 1), (2, 1), u - 2.0 * s21 - h),
        ((1, 1), (2, 2), s21),
        ((1, 2), (1, 1), g12_11),
        ((1, 2), (2, 1), g12_21),
        ((1, 2), (2, 2), g12_22),
        ((2, 0), (0, 1), s12),
        ((2, 0), (0, 2), s22),
        ((2, 0), (1, 0), u - 2.0 * s12 - m),
        ((2, 1), (1, 1), g21_11),
        ((2, 1), (1, 2), g21_12),
        ((2, 1), (2, 2), g21_22),
        ((2, 2), (1, 1), s12),
        ((2, 2), (1, 2), u - 2.0 * s12 - m),
        ((2, 2), (2, 1), m),
    ];
    EdgeRateMatrix::from_transitions(2, &t).expect("labels in range")
}

/// Boundary generator for reservoir densities `rho`, built without checks.
///
/// An end site touches a single bond, so it only receives the part of the bulk
/// mutation that belongs to its end of the bond: `Υ - 2σ21 - h` (1 → 2) on the
/// left end of a bond and `h` on the right end. The reservoir supplies the
/// missing part, which is `h` at the left end of the chain and `Υ - 2σ21 - h`
/// at the right end (likewise for 2 → 1 with `σ12`, `m`).
pub fn boundary_rates(p: &MacroParams, side: Side, vertex: usize, rho: [f64; 2]) -> SiteRateMatrix {
    let (s11, s12, s21, s22) = (p.sigma11, p.sigma12, p.sigma21, p.sigma22);
    let (mut_12, mut_21) = match side {
        Side::Left => (p.h, p.m),
        Side::Right => (p.upsilon - 2.0 * s21 - p.h, p.upsilon - 2.0 * s12 - p.m),
    };
    let in1 = s11 * rho[0] + s12 * rho[1];
    let in2 = s21 * rho[0] + s22 * rho[1];
    let rows = vec![
        vec![0.0, in1, in2],
        vec![s11 + s21 - in1 - in2, 0.0, mut_12 + in2],
        vec![s22 + s12 - in1 - in2, mut_21 + in1, 0.0],
    ];
    SiteRateMatrix::from_rows(2, vertex, &rows).expect("3x3")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

fn require_valid(p: &MacroParams) -> Result<()> {
    let v = validate(p);
    if v.valid {
        Ok(())
    } else {
        Err(Error::InvalidParams(v))
    }
}

pub fn build_bulk(p: &MacroParams) -> Result<EdgeRateMatrix> {
    require_valid(p)?;
    Ok(bulk_rates(p))
}

pub fn build_boundary(p: &MacroParams, side: Side, vertex: usize) -> Result<SiteRateMatrix> {
    require_valid(p)?;
    let rho = match side {
        Side::Left => p.rho_left(),
        Side::Right => p.rho_right(),
    };
    Ok(boundary_rates(p, side, vertex, rho))
}

/// Chain of `n_sites` sites with the bulk generator on every bond and the
/// reservoirs attached to the two end sites.
pub fn build_model(p: &MacroParams, n_sites: usize) -> Result<ProcessModel> {
    if n_sites < 2 {
        return Err(Error::Domain(format!("need at least 2 sites, got {n_sites}")));
    }
    let bulk = build_bulk(p)?;
    let left = build_boundary(p, Side::Left, 0)?;
    let right = build_boundary(p, Side::Right, n_sites - 1)?;
    ProcessModel::new(Graph::chain(n_sites)?, bulk, vec![left, right])
}
