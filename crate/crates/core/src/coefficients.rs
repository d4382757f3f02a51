//! Expansion coefficients of the generator acting on occupation indicators,
//! the closed mean equations they induce, and the matching conditions against
//! a target discrete reaction-diffusion system.
//!
//! For a bond `(x, y)` the generator applied to `1{η_x = ζ}` is a multilinear
//! polynomial in the indicators of the two sites:
//!
//! ```text
//! A1^ζ + Σ_γ B1^{ζγ} 1{η_x=γ} + Σ_δ F+1^{ζδ} 1{η_y=δ} + Σ_{γδ} G+1^{ζγδ} 1{η_x=γ} 1{η_y=δ}
//! ```
//!
//! and similarly for `1{η_y = ζ}` with `A2, F-1, C2, G-1`. In every second-order
//! coefficient the first species index refers to the left endpoint `x`.
//! Species indices in the stored vectors are shifted by one (`[0]` is species 1).

use serde::{Deserialize, Serialize};

use crate::model::{EdgeRateMatrix, ProcessModel, SiteRateMatrix, SpeciesLabel};
use crate::rates::MacroParams;
use crate::{Error, Result, TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub n: usize,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub b1: Vec<Vec<f64>>,
    pub c2: Vec<Vec<f64>>,
    pub f_plus: Vec<Vec<f64>>,
    pub f_minus: Vec<Vec<f64>>,
    pub g_plus: Vec<Vec<Vec<f64>>>,
    pub g_minus: Vec<Vec<Vec<f64>>>,
}

impl CoefficientSet {
    /// `E^ζ = A1^ζ + A2^ζ`.
    pub fn e(&self, zeta: usize) -> f64 {
        self.a1[zeta] + self.a2[zeta]
    }

    /// `F0^{ζβ} = B1^{ζβ} + C2^{ζβ}`.
    pub fn f0(&self, zeta: usize, beta: usize) -> f64 {
        self.b1[zeta][beta] + self.c2[zeta][beta]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteCoefficientSet {
    pub n: usize,
    pub a: Vec<f64>,
    pub f: Vec<Vec<f64>>,
}

/// Sum of the rates `(γ,δ) → (ζ,β)` over `β`, off-diagonal entries only.
fn left_sum(g: &EdgeRateMatrix, from: (SpeciesLabel, SpeciesLabel), zeta: SpeciesLabel) -> f64 {
    (0..=g.species() as SpeciesLabel)
        .filter(|&b| (zeta, b) != from)
        .map(|b| g.rate(from, (zeta, b)))
        .sum()
}

/// Sum of the rates `(γ,δ) → (β,ζ)` over `β`, off-diagonal entries only.
fn right_sum(g: &EdgeRateMatrix, from: (SpeciesLabel, SpeciesLabel), zeta: SpeciesLabel) -> f64 {
    (0..=g.species() as SpeciesLabel)
        .filter(|&b| (b, zeta) != from)
        .map(|b| g.rate(from, (b, zeta)))
        .sum()
}

/// Rate at which the left endpoint of a bond in state `from` becomes `zeta`,
/// minus the rate at which it leaves `zeta`.
fn left_flux(g: &EdgeRateMatrix, from: (SpeciesLabel, SpeciesLabel), zeta: SpeciesLabel) -> f64 {
    if from.0 != zeta {
        left_sum(g, from, zeta)
    } else {
        -(0..=g.species() as SpeciesLabel)
            .filter(|&z| z != zeta)
            .map(|z| left_sum(g, from, z))
            .sum::<f64>()
    }
}

fn right_flux(g: &EdgeRateMatrix, from: (SpeciesLabel, SpeciesLabel), zeta: SpeciesLabel) -> f64 {
    if from.1 != zeta {
        right_sum(g, from, zeta)
    } else {
        -(0..=g.species() as SpeciesLabel)
            .filter(|&z| z != zeta)
            .map(|z| right_sum(g, from, z))
            .sum::<f64>()
    }
}

/// Extracts all edge coefficients from a bulk generator.
pub fn extract_edge_coefficients(g: &EdgeRateMatrix) -> CoefficientSet {
    let n = g.species();
    let sp = |i: usize| (i + 1) as SpeciesLabel;
    let vec2 = || vec![vec![0.0; n]; n];
    let vec3 = || vec![vec![vec![0.0; n]; n]; n];
    let mut c = CoefficientSet {
        n,
        a1: vec![0.0; n],
        a2: vec![0.0; n],
        b1: vec2(),
        c2: vec2(),
        f_plus: vec2(),
        f_minus: vec2(),
        g_plus: vec3(),
        g_minus: vec3(),
    };
    for z in 0..n {
        let zeta = sp(z);
        let l00 = left_flux(g, (0, 0), zeta);
        let r00 = right_flux(g, (0, 0), zeta);
        c.a1[z] = l00;
        c.a2[z] = r00;
        for i in 0..n {
            let s = sp(i);
            c.b1[z][i] = left_flux(g, (s, 0), zeta) - l00;
            c.f_plus[z][i] = left_flux(g, (0, s), zeta) - l00;
            c.f_minus[z][i] = right_flux(g, (s, 0), zeta) - r00;
            c.c2[z][i] = right_flux(g, (0, s), zeta) - r00;
        }
        for i in 0..n {
            for j in 0..n {
                let (gm, dl) = (sp(i), sp(j));
                c.g_plus[z][i][j] = left_flux(g, (gm, dl), zeta)
                    - left_flux(g, (gm, 0), zeta)
                    - left_flux(g, (0, dl), zeta)
                    + l00;
                c.g_minus[z][i][j] = right_flux(g, (gm, dl), zeta)
                    - right_flux(g, (gm, 0), zeta)
                    - right_flux(g, (0, dl), zeta)
                    + r00;
            }
        }
    }
    c
}

/// Extracts `A^ζ = W_0^ζ` and the first-order site coefficients.
pub fn extract_site_coefficients(w: &SiteRateMatrix) -> SiteCoefficientSet {
    let n = w.species();
    let mut a = vec![0.0; n];
    let mut f = vec![vec![0.0; n]; n];
    for z in 0..n {
        let zeta = (z + 1) as SpeciesLabel;
        a[z] = w.rate(0, zeta);
        for b in 0..n {
            let beta = (b + 1) as SpeciesLabel;
            f[z][b] = if beta != zeta {
                w.rate(beta, zeta) - w.rate(0, zeta)
            } else {
                -(0..=n as SpeciesLabel).filter(|&q| q != zeta).map(|q| w.rate(zeta, q)).sum::<f64>()
                    - w.rate(0, zeta)
            };
        }
    }
    SiteCoefficientSet { n, a, f }
}

/// Mean occupations `mu[z][ζ-1]` and, optionally, bond correlations
/// `correlations[e][γ-1][δ-1] = E[1{η_x=γ} 1{η_y=δ}]` for edge `e = (x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanState {
    pub mu: Vec<Vec<f64>>,
    pub correlations: Option<Vec<Vec<Vec<f64>>>>,
}

/// Right-hand side of the closed mean equations.
pub fn mean_rhs(model: &ProcessModel, state: &MeanState) -> Result<Vec<Vec<f64>>> {
    let n = model.species();
    let v = model.sites();
    if state.mu.len() != v || state.mu.iter().any(|m| m.len() != n) {
        return Err(Error::Dimension(format!("mean state must be {v} x {n}")));
    }
    let edges = &model.graph.edges;
    if let Some(c) = &state.correlations {
        if c.len() != edges.len() || c.iter().any(|m| m.len() != n || m.iter().any(|r| r.len() != n)) {
            return Err(Error::Dimension("correlation array does not match edges".into()));
        }
    }
    let co = extract_edge_coefficients(&model.bulk);
    let mut out = vec![vec![0.0; n]; v];
    for (e, (&(x, y), &w)) in edges.iter().zip(&model.graph.edge_weights).enumerate() {
        for z in 0..n {
            let mut left = co.a1[z];
            let mut right = co.a2[z];
            for b in 0..n {
                left += co.f_plus[z][b] * state.mu[y][b] + co.b1[z][b] * state.mu[x][b];
                right += co.f_minus[z][b] * state.mu[x][b] + co.c2[z][b] * state.mu[y][b];
            }
            if let Some(c) = &state.correlations {
                for g in 0..n {
                    for d in 0..n {
                        left += co.g_plus[z][g][d] * c[e][g][d];
                        right += co.g_minus[z][g][d] * c[e][g][d];
                    }
                }
            }
            out[x][z] += w * left;
            out[y][z] += w * right;
        }
    }
    for (&x, site) in &model.boundary {
        let sc = extract_site_coefficients(site);
        let w = model.graph.site_weights[x];
        for z in 0..n {
            let mut r = sc.a[z];
            for b in 0..n {
                r += sc.f[z][b] * state.mu[x][b];
            }
            out[x][z] += w * r;
        }
    }
    Ok(out)
}

/// True when every second-order coefficient vanishes within `TOL`.
pub fn check_closure(c: &CoefficientSet) -> bool {
    c.g_plus.iter().chain(&c.g_minus).flatten().flatten().all(|g| g.abs() <= TOL)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchEntry {
    pub name: String,
    pub target: f64,
    pub computed: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub bulk: Vec<MatchEntry>,
    pub boundary: Vec<MatchEntry>,
    pub pass: bool,
}

impl MatchReport {
    pub fn max_residual(&self) -> f64 {
        self.bulk.iter().chain(&self.boundary).map(|e| e.residual).fold(0.0, f64::max)
    }
}

fn entry(name: String, target: f64, computed: f64) -> MatchEntry {
    MatchEntry { name, target, computed, residual: (computed - target).abs() }
}

/// Compares the coefficients of a two-species chain model with the targets of
/// the discrete reaction-diffusion system defined by `params`.
///
/// Produces 30 bulk conditions (16 closure, 12 Laplacian, 2 zero-order) and
/// 12 boundary conditions (6 per end).
pub fn check_matching(model: &ProcessModel, params: &MacroParams) -> Result<MatchReport> {
    if !model.graph.is_chain() {
        return Err(Error::Domain("matching is defined on the chain only".into()));
    }
    if model.species() != 2 {
        return Err(Error::Dimension("matching needs two species".into()));
    }
    let sigma = params.sigma();
    let u = params.upsilon;
    let nv = model.sites();
    let we = model.graph.edge_weights[0];
    let co = extract_edge_coefficients(&model.bulk);
    let lap = |z: usize, b: usize| {
        let s = if z == b { -1.0 } else { 1.0 };
        -2.0 * sigma[z][b] + s * u
    };
    let mut bulk = Vec::new();
    for z in 0..2 {
        for g in 0..2 {
            for d in 0..2 {
                bulk.push(entry(format!("G+1[{},{},{}]", z + 1, g + 1, d + 1), 0.0, we * co.g_plus[z][g][d]));
                bulk.push(entry(format!("G-1[{},{},{}]", z + 1, g + 1, d + 1), 0.0, we * co.g_minus[z][g][d]));
            }
        }
    }
    for z in 0..2 {
        for b in 0..2 {
            let tag = format!("[{},{}]", z + 1, b + 1);
            bulk.push(entry(format!("F+1{tag}"), sigma[z][b], we * co.f_plus[z][b]));
            bulk.push(entry(format!("F-1{tag}"), sigma[z][b], we * co.f_minus[z][b]));
            bulk.push(entry(format!("F0{tag}"), lap(z, b), we * co.f0(z, b)));
        }
    }
    for z in 0..2 {
        bulk.push(entry(format!("E[{}]", z + 1), 0.0, we * co.e(z)));
    }

    let mut boundary = Vec::new();
    for (side, site, rho) in [("L", 0, params.rho_left()), ("R", nv - 1, params.rho_right())] {
        let Some(w) = model.boundary.get(&site) else {
            return Err(Error::Domain(format!("no boundary generator at site {site}")));
        };
        let sc = extract_site_coefficients(w);
        let ws = model.graph.site_weights[site];
        // The edge touching the end site: the left end is the bond's left endpoint.
        let we_end = if side == "L" { model.graph.edge_weights[0] } else { model.graph.edge_weights[nv - 2] };
        for z in 0..2 {
            let bulk_a = if side == "L" { co.a1[z] } else { co.a2[z] };
            let target = sigma[z][0] * rho[0] + sigma[z][1] * rho[1];
            boundary.push(entry(format!("A_{side}[{}]", z + 1), target, ws * sc.a[z] + we_end * bulk_a));
            for b in 0..2 {
                let bulk_f = if side == "L" { co.b1[z][b] } else { co.c2[z][b] };
                boundary.push(entry(
                    format!("F_{side}[{},{}]", z + 1, b + 1),
                    lap(z, b),
                    ws * sc.f[z][b] + we_end * bulk_f,
                ));
            }
        }
    }
    let pass = bulk.iter().chain(&boundary).all(|e| e.residual <= TOL);
    Ok(MatchReport { bulk, boundary, pass })
}
