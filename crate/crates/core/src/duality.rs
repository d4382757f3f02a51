//! Self-duality of the symmetric two-species process in the triplet
//! (one-hot) representation, checked exhaustively on small chains.
//!
//! A site in state `α` is written as the triplet `n^z = (n_0, n_1, n_2)` with a
//! single one at position `α`. The duality function is
//! `D(n, ℓ) = Π_z Π_{k=1,2} 1{n_k^z >= ℓ_k^z}`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::model::{mutation_map, Configuration, EdgeRateMatrix, SpeciesLabel};
use crate::rates::MacroParams;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TripletConfiguration(pub Vec<[u8; 3]>);

pub fn to_triplet(c: &Configuration) -> Result<TripletConfiguration> {
    c.0.iter()
        .map(|&a| {
            if a > 2 {
                return Err(Error::Domain(format!("species {a} out of range")));
            }
            let mut t = [0u8; 3];
            t[a as usize] = 1;
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()
        .map(TripletConfiguration)
}

pub fn from_triplet(t: &TripletConfiguration) -> Result<Configuration> {
    t.0.iter()
        .map(|s| match s {
            [1, 0, 0] => Ok(0),
            [0, 1, 0] => Ok(1),
            [0, 0, 1] => Ok(2),
            other => Err(Error::Domain(format!("{other:?} is not one-hot"))),
        })
        .collect::<Result<Vec<SpeciesLabel>>>()
        .map(Configuration)
}

pub fn duality_value(n: &TripletConfiguration, l: &TripletConfiguration) -> Result<f64> {
    if n.0.len() != l.0.len() {
        return Err(Error::Dimension(format!("lengths {} and {}", n.0.len(), l.0.len())));
    }
    Ok(duality_unchecked(n, l))
}

fn duality_unchecked(n: &TripletConfiguration, l: &TripletConfiguration) -> f64 {
    let ok = n.0.iter().zip(&l.0).all(|(a, b)| a[1] >= b[1] && a[2] >= b[2]);
    if ok {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeOperatorKind {
    /// Exchange of the two sites.
    S,
    /// Exchange followed by mutation of both sites.
    SM,
    /// Mutation of the left site.
    LM,
    /// Mutation of the right site.
    RM,
}

pub const ALL_OPERATORS: [EdgeOperatorKind; 4] =
    [EdgeOperatorKind::S, EdgeOperatorKind::SM, EdgeOperatorKind::LM, EdgeOperatorKind::RM];

fn unit(a: usize) -> [i8; 3] {
    let mut u = [0; 3];
    u[a] = 1;
    u
}

/// `Σ_{α,β} n_α^z n_β^{z+1} [f(n') - f(n)]`, where `n'` moves one unit at each
/// of the two sites as prescribed by `kind`.
pub fn apply_edge_operator(
    kind: EdgeOperatorKind,
    f: &dyn Fn(&TripletConfiguration) -> f64,
    n: &TripletConfiguration,
    z: usize,
) -> Result<f64> {
    if z + 1 >= n.0.len() {
        return Err(Error::Domain(format!("bond ({z},{}) outside chain", z + 1)));
    }
    let fn0 = f(n);
    let mut total = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            let w = (n.0[z][a] * n.0[z + 1][b]) as f64;
            if w == 0.0 {
                continue;
            }
            let bar = |s: usize| mutation_map(s as SpeciesLabel) as usize;
            // Units removed and added at (z, z+1).
            let (add_z, add_y) = match kind {
                EdgeOperatorKind::S => (b, a),
                EdgeOperatorKind::SM => (bar(b), bar(a)),
                EdgeOperatorKind::LM => (bar(a), b),
                EdgeOperatorKind::RM => (a, bar(b)),
            };
            let mut m = n.clone();
            let (ua, ub, uz, uy) = (unit(a), unit(b), unit(add_z), unit(add_y));
            for k in 0..3 {
                m.0[z][k] = (m.0[z][k] as i8 - ua[k] + uz[k]) as u8;
                m.0[z + 1][k] = (m.0[z + 1][k] as i8 - ub[k] + uy[k]) as u8;
            }
            total += w * (f(&m) - fn0);
        }
    }
    Ok(total)
}

/// Rates of the four operators in the symmetric family:
/// `σ11 S + σ12 SM + (Υ - 2σ12 - m) LM + m RM`.
pub fn operator_weights(p: &MacroParams) -> [(EdgeOperatorKind, f64); 4] {
    [
        (EdgeOperatorKind::S, p.sigma11),
        (EdgeOperatorKind::SM, p.sigma12),
        (EdgeOperatorKind::LM, p.upsilon - 2.0 * p.sigma12 - p.m),
        (EdgeOperatorKind::RM, p.m),
    ]
}

/// All `3^sites` triplet configurations in lexicographic order of labels.
pub fn all_configurations(sites: usize) -> Vec<TripletConfiguration> {
    let count = 3usize.pow(sites as u32);
    (0..count)
        .map(|mut i| {
            let mut c = vec![0u8; sites];
            for z in (0..sites).rev() {
                c[z] = (i % 3) as u8;
                i /= 3;
            }
            to_triplet(&Configuration(c)).expect("labels below 3")
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub sites: usize,
    /// `max |(L D(·,ℓ))(n) - (L D(n,·))(ℓ)|` over all pairs for the full generator.
    pub combined: f64,
    /// The same with unit rate on a single operator.
    pub per_operator: Vec<(EdgeOperatorKind, f64)>,
}

impl DualityReport {
    pub fn max_residual(&self) -> f64 {
        self.per_operator.iter().map(|p| p.1).fold(self.combined, f64::max)
    }
}

fn duality_gap(sites: usize, gen: &dyn Fn(&dyn Fn(&TripletConfiguration) -> f64, &TripletConfiguration) -> f64) -> f64 {
    let all = all_configurations(sites);
    let mut worst = 0.0f64;
    for n in &all {
        for l in &all {
            let lhs = gen(&|m| duality_unchecked(m, l), n);
            let rhs = gen(&|m| duality_unchecked(n, m), l);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

/// Exhaustive self-duality check on a chain of `sites ∈ {2, 3, 4}`.
///
/// Parameters outside the symmetric family (`σ11 = σ22`, `σ12 = σ21`, `h = m`)
/// are refused unless `exploratory` is set.
pub fn check_self_duality(p: &MacroParams, sites: usize, exploratory: bool) -> Result<DualityReport> {
    if !(2..=4).contains(&sites) {
        return Err(Error::Domain(format!("sites must be 2, 3 or 4, got {sites}")));
    }
    if !p.is_symmetric() && !exploratory {
        return Err(Error::Refused("self-duality needs σ11 = σ22, σ12 = σ21 and h = m".into()));
    }
    let weights = operator_weights(p);
    let full = |f: &dyn Fn(&TripletConfiguration) -> f64, n: &TripletConfiguration| {
        let mut s = 0.0;
        for z in 0..sites - 1 {
            for (k, w) in weights {
                s += w * apply_edge_operator(k, f, n, z).expect("bond in range");
            }
        }
        s
    };
    let combined = duality_gap(sites, &full);
    let per_operator = ALL_OPERATORS
        .iter()
        .map(|&k| {
            let single = |f: &dyn Fn(&TripletConfiguration) -> f64, n: &TripletConfiguration| {
                (0..sites - 1).map(|z| apply_edge_operator(k, f, n, z).expect("bond in range")).sum()
            };
            (k, duality_gap(sites, &single))
        })
        .collect();
    Ok(DualityReport { sites, combined, per_operator })
}

/// `(L f)(η) = Σ_z Σ_{αβ} Γ_{η_z η_{z+1}}^{αβ} [f(η^{z,αβ}) - f(η)]` for a chain.
pub fn apply_rate_matrix(g: &EdgeRateMatrix, f: &dyn Fn(&TripletConfiguration) -> f64, n: &TripletConfiguration) -> f64 {
    let c = from_triplet(n).expect("one-hot");
    let fn0 = f(n);
    let mut total = 0.0;
    for z in 0..c.len() - 1 {
        let from = (c.0[z], c.0[z + 1]);
        for a in 0..3u8 {
            for b in 0..3u8 {
                if (a, b) == from {
                    continue;
                }
                let r = g.rate(from, (a, b));
                if r != 0.0 {
                    let mut m = c.clone();
                    m.0[z] = a;
                    m.0[z + 1] = b;
                    total += r * (f(&to_triplet(&m).expect("labels")) - fn0);
                }
            }
        }
    }
    total
}

/// Largest duality defect of the chain generator defined by a bulk matrix.
pub fn self_duality_gap_of_matrix(g: &EdgeRateMatrix, sites: usize) -> Result<f64> {
    if g.species() != 2 || !(2..=4).contains(&sites) {
        return Err(Error::Domain("need two species and 2..=4 sites".into()));
    }
    Ok(duality_gap(sites, &|f, n| apply_rate_matrix(g, f, n)))
}

/// Generator of the symmetric chain as a `3^sites` square matrix (rows: from).
pub fn generator_matrix(p: &MacroParams, sites: usize) -> DMatrix<f64> {
    let all = all_configurations(sites);
    let weights = operator_weights(p);
    let mut q = DMatrix::zeros(all.len(), all.len());
    for (i, n) in all.iter().enumerate() {
        for (j, m) in all.iter().enumerate() {
            if i == j {
                continue;
            }
            let ind = |x: &TripletConfiguration| if x == m { 1.0 } else { 0.0 };
            let mut r = 0.0;
            for z in 0..sites - 1 {
                for (k, w) in weights {
                    r += w * apply_edge_operator(k, &ind, n, z).expect("bond in range");
                }
            }
            q[(i, j)] = r;
        }
        let s: f64 = q.row(i).iter().sum();
        q[(i, i)] = -s;
    }
    q
}

/// `max_{n,ℓ} |E_n D(n_t, ℓ) - E_ℓ D(n, ℓ_t)|`, using a scaling-and-squaring
/// Padé matrix exponential.
pub fn moment_identity_gap(p: &MacroParams, sites: usize, t: f64) -> f64 {
    let all = all_configurations(sites);
    let q = generator_matrix(p, sites);
    let d = DMatrix::from_fn(all.len(), all.len(), |i, j| duality_unchecked(&all[i], &all[j]));
    let e = (q * t).exp();
    let lhs = &e * &d;
    let rhs = (&e * d.transpose()).transpose();
    (lhs - rhs).amax()
}
