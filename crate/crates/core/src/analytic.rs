//! Discrete and continuum reaction-diffusion systems with reservoir boundaries:
//! right-hand side, RK4 integration, stationary profiles and uphill diagnostics.
//!
//! The macroscopic system on `[0, 1]` is
//!
//! ```text
//! ∂t ρ1 = σ11 Δρ1 + σ12 Δρ2 + Υ (ρ2 - ρ1)
//! ∂t ρ2 = σ21 Δρ1 + σ22 Δρ2 + Υ (ρ1 - ρ2)
//! ```
//!
//! with `ρ(0) = ρ_L`, `ρ(1) = ρ_R`, and currents `J^α = -σ_{α1} ρ1' - σ_{α2} ρ2'`.

use serde::{Deserialize, Serialize};

use crate::rates::MacroParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDensities {
    pub left: [f64; 2],
    pub right: [f64; 2],
}

impl BoundaryDensities {
    pub fn new(left: [f64; 2], right: [f64; 2]) -> Self {
        BoundaryDensities { left, right }
    }

    pub fn of(p: &MacroParams) -> Self {
        BoundaryDensities { left: p.rho_left(), right: p.rho_right() }
    }
}

/// Finite-difference reaction-diffusion system on `sites` interior points with
/// ghost values at the reservoirs.
///
/// With `spacing = 1` this is the mean-field system of the microscopic chain;
/// with `spacing = 1/(sites+1)` it is the method-of-lines discretisation of the
/// continuum equations on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteSystem {
    pub sigma: [[f64; 2]; 2],
    pub upsilon: f64,
    pub bc: BoundaryDensities,
    pub sites: usize,
    pub spacing: f64,
}

pub type Profile = Vec<[f64; 2]>;

impl DiscreteSystem {
    pub fn microscopic(p: &MacroParams, sites: usize) -> Self {
        DiscreteSystem { sigma: p.sigma(), upsilon: p.upsilon, bc: BoundaryDensities::of(p), sites, spacing: 1.0 }
    }

    pub fn macroscopic(p: &MacroParams, sites: usize) -> Self {
        DiscreteSystem {
            sigma: p.sigma(),
            upsilon: p.upsilon,
            bc: BoundaryDensities::of(p),
            sites,
            spacing: 1.0 / (sites as f64 + 1.0),
        }
    }

    /// Position of site `i` in the macroscopic scaling.
    pub fn position(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.spacing
    }

    fn check_len(&self, rho: &[[f64; 2]]) -> Result<()> {
        if rho.len() != self.sites || self.sites == 0 {
            return Err(Error::Dimension(format!("profile has {} sites, system {}", rho.len(), self.sites)));
        }
        Ok(())
    }

    pub fn rhs(&self, rho: &[[f64; 2]]) -> Result<Profile> {
        self.check_len(rho)?;
        let mut out = vec![[0.0; 2]; self.sites];
        self.rhs_into(rho, &mut out);
        Ok(out)
    }

    fn rhs_into(&self, rho: &[[f64; 2]], out: &mut [[f64; 2]]) {
        let n = self.sites;
        let inv_h2 = 1.0 / (self.spacing * self.spacing);
        let s = self.sigma;
        for i in 0..n {
            let prev = if i == 0 { self.bc.left } else { rho[i - 1] };
            let next = if i + 1 == n { self.bc.right } else { rho[i + 1] };
            let l1 = (prev[0] - 2.0 * rho[i][0] + next[0]) * inv_h2;
            let l2 = (prev[1] - 2.0 * rho[i][1] + next[1]) * inv_h2;
            let react = self.upsilon * (rho[i][1] - rho[i][0]);
            out[i][0] = s[0][0] * l1 + s[0][1] * l2 + react;
            out[i][1] = s[1][0] * l1 + s[1][1] * l2 - react;
        }
    }

    /// Largest RK4 step accepted by [`DiscreteSystem::integrate`].
    pub fn max_step(&self) -> f64 {
        let smax = self.sigma.iter().flatten().fold(0.0f64, |a, &b| a.max(b.abs()));
        0.1 / (smax / (self.spacing * self.spacing) + self.upsilon.abs()).max(f64::MIN_POSITIVE)
    }

    /// Classical RK4 from `rho0` up to `t_end` with steps no larger than `dt`.
    pub fn integrate(&self, rho0: &[[f64; 2]], t_end: f64, dt: f64) -> Result<Profile> {
        self.check_len(rho0)?;
        if !(t_end >= 0.0) || !(dt > 0.0) {
            return Err(Error::Domain("need t_end >= 0 and dt > 0".into()));
        }
        let limit = self.max_step();
        if dt > limit {
            return Err(Error::Refused(format!("step {dt:e} exceeds the stability limit; use dt <= {limit:e}")));
        }
        let steps = (t_end / dt).ceil() as usize;
        let mut y = rho0.to_vec();
        if steps == 0 {
            return Ok(y);
        }
        let h = t_end / steps as f64;
        let n = self.sites;
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
            (vec![[0.0; 2]; n], vec![[0.0; 2]; n], vec![[0.0; 2]; n], vec![[0.0; 2]; n], vec![[0.0; 2]; n]);
        let axpy = |tmp: &mut [[f64; 2]], y: &[[f64; 2]], k: &[[f64; 2]], a: f64| {
            for i in 0..y.len() {
                tmp[i] = [y[i][0] + a * k[i][0], y[i][1] + a * k[i][1]];
            }
        };
        for _ in 0..steps {
            self.rhs_into(&y, &mut k1);
            axpy(&mut tmp, &y, &k1, h / 2.0);
            self.rhs_into(&tmp, &mut k2);
            axpy(&mut tmp, &y, &k2, h / 2.0);
            self.rhs_into(&tmp, &mut k3);
            axpy(&mut tmp, &y, &k3, h);
            self.rhs_into(&tmp, &mut k4);
            for i in 0..n {
                for a in 0..2 {
                    y[i][a] += h / 6.0 * (k1[i][a] + 2.0 * k2[i][a] + 2.0 * k3[i][a] + k4[i][a]);
                }
            }
        }
        Ok(y)
    }

    /// Stationary profile by block-tridiagonal elimination; the residual of the
    /// scaled equations is checked against `1e-10`.
    pub fn stationary(&self) -> Result<Profile> {
        let n = self.sites;
        if n == 0 {
            return Err(Error::Domain("no sites".into()));
        }
        let s = M2(self.sigma);
        let h2u = self.upsilon * self.spacing * self.spacing;
        let diag = M2([[-2.0 * s.0[0][0] - h2u, -2.0 * s.0[0][1] + h2u], [-2.0 * s.0[1][0] + h2u, -2.0 * s.0[1][1] - h2u]]);
        let mut rhs = vec![[0.0; 2]; n];
        let l = s.mul_v(self.bc.left);
        let r = s.mul_v(self.bc.right);
        rhs[0] = [-l[0], -l[1]];
        rhs[n - 1] = [rhs[n - 1][0] - r[0], rhs[n - 1][1] - r[1]];
        let mut cp = vec![M2([[0.0; 2]; 2]); n];
        let mut dp = vec![[0.0; 2]; n];
        for i in 0..n {
            let (m, d) = if i == 0 {
                (diag, rhs[0])
            } else {
                let m = diag.sub(&s.mul(&cp[i - 1]));
                let sd = s.mul_v(dp[i - 1]);
                (m, [rhs[i][0] - sd[0], rhs[i][1] - sd[1]])
            };
            let inv = m.inverse().ok_or_else(|| Error::Numerical("singular block in stationary solve".into()))?;
            cp[i] = inv.mul(&s);
            dp[i] = inv.mul_v(d);
        }
        let mut x = vec![[0.0; 2]; n];
        x[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            let c = cp[i].mul_v(x[i + 1]);
            x[i] = [dp[i][0] - c[0], dp[i][1] - c[1]];
        }
        let res = self.rhs(&x)?;
        let scale = self.spacing * self.spacing;
        let worst = res.iter().flatten().fold(0.0f64, |a, &b| a.max((b * scale).abs()));
        if !(worst <= 1e-10) {
            return Err(Error::Numerical(format!("stationary residual {worst:e}")));
        }
        Ok(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct M2([[f64; 2]; 2]);

impl M2 {
    fn mul(&self, o: &M2) -> M2 {
        let (a, b) = (self.0, o.0);
        M2([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }
    fn mul_v(&self, v: [f64; 2]) -> [f64; 2] {
        [self.0[0][0] * v[0] + self.0[0][1] * v[1], self.0[1][0] * v[0] + self.0[1][1] * v[1]]
    }
    fn sub(&self, o: &M2) -> M2 {
        let (a, b) = (self.0, o.0);
        M2([[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]])
    }
    fn inverse(&self) -> Option<M2> {
        let a = self.0;
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if det.abs() <= 1e-300 || det.abs() <= 1e-14 * scale * scale {
            return None;
        }
        Some(M2([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]))
    }
}

/// Right-hand side of the mean-field chain (unit spacing).
pub fn ode_rhs(p: &MacroParams, rho: &[[f64; 2]]) -> Result<Profile> {
    DiscreteSystem::microscopic(p, rho.len()).rhs(rho)
}

/// Stationary profile of the mean-field chain with `n` sites.
pub fn stationary_discrete(p: &MacroParams, n: usize) -> Result<Profile> {
    DiscreteSystem::microscopic(p, n).stationary()
}

/// Closed-form constants of the coupled stationary solution:
/// `ρ2 = E + F x + C e^{-r x} + D e^{r x}` and `ρ1 = E + F x + (A/B)(C e^{-r x} + D e^{r x})`
/// with `r = √(A - B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProfileShape {
    Coupled(ClosedForm),
    /// `Υ = 0` with no cross-diffusion: independent linear profiles.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarySolution {
    pub sigma: [[f64; 2]; 2],
    pub bc: BoundaryDensities,
    pub shape: ProfileShape,
}

/// Closed-form stationary solution of the continuum system.
pub fn stationary_continuum(p: &MacroParams) -> Result<StationarySolution> {
    let s = p.sigma();
    let bc = BoundaryDensities::of(p);
    if p.upsilon == 0.0 {
        if p.sigma12 == 0.0 && p.sigma21 == 0.0 {
            return Ok(StationarySolution { sigma: s, bc, shape: ProfileShape::Linear });
        }
        return Err(Error::Refused("Υ = 0 with cross-diffusion has no closed form here".into()));
    }
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    if !(det > 1e-14) {
        return Err(Error::Refused(format!("det(Σ) = {det:e} is not positive")));
    }
    let a = p.upsilon * (p.sigma12 + p.sigma22) / det;
    let b = -p.upsilon * (p.sigma11 + p.sigma21) / det;
    if !(a - b > 0.0) || b == 0.0 {
        return Err(Error::Refused("A - B must be positive and B non-zero".into()));
    }
    let r = (a - b).sqrt();
    let ([l1, l2], [r1, r2]) = (bc.left, bc.right);
    let (er, e2r) = (r.exp(), (2.0 * r).exp());
    let e = (a * l2 - b * l1) / (a - b);
    let f = -(a * l2 - a * r2 - b * l1 + b * r1) / (a - b);
    let c = b * (l1 * e2r - l2 * e2r - r1 * er + r2 * er) / ((a - b) * (e2r - 1.0));
    let d = b * (l1 - l2 - r1 * er + r2 * er) / (a - b - a * e2r + b * e2r);
    Ok(StationarySolution { sigma: s, bc, shape: ProfileShape::Coupled(ClosedForm { a, b, c, d, e, f, r }) })
}

impl StationarySolution {
    /// Density of species `alpha ∈ {0, 1}` (species 1 and 2) at `x`.
    pub fn rho(&self, alpha: usize, x: f64) -> f64 {
        match self.shape {
            ProfileShape::Linear => self.bc.left[alpha] + (self.bc.right[alpha] - self.bc.left[alpha]) * x,
            ProfileShape::Coupled(k) => {
                let exps = k.c * (-k.r * x).exp() + k.d * (k.r * x).exp();
                let factor = if alpha == 0 { k.a / k.b } else { 1.0 };
                k.e + k.f * x + factor * exps
            }
        }
    }

    pub fn drho(&self, alpha: usize, x: f64) -> f64 {
        match self.shape {
            ProfileShape::Linear => self.bc.right[alpha] - self.bc.left[alpha],
            ProfileShape::Coupled(k) => {
                let exps = -k.r * k.c * (-k.r * x).exp() + k.r * k.d * (k.r * x).exp();
                let factor = if alpha == 0 { k.a / k.b } else { 1.0 };
                k.f + factor * exps
            }
        }
    }

    pub fn current(&self, alpha: usize, x: f64) -> f64 {
        -self.sigma[alpha][0] * self.drho(0, x) - self.sigma[alpha][1] * self.drho(1, x)
    }

    pub fn rho1(&self, x: f64) -> f64 {
        self.rho(0, x)
    }
    pub fn rho2(&self, x: f64) -> f64 {
        self.rho(1, x)
    }
    pub fn j1(&self, x: f64) -> f64 {
        self.current(0, x)
    }
    pub fn j2(&self, x: f64) -> f64 {
        self.current(1, x)
    }
}

/// Explicit solution for `σ12 = σ21 = 0`, `σ11 = σ22`; `k² = Υ/σ11`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakCouplingSolution {
    pub sigma11: f64,
    pub k: f64,
    pub bc: BoundaryDensities,
}

pub fn weak_coupling_solution(sigma11: f64, upsilon: f64, bc: BoundaryDensities) -> Result<WeakCouplingSolution> {
    if !(sigma11 > 0.0) || !(upsilon >= 0.0) {
        return Err(Error::Domain("need σ11 > 0 and Υ >= 0".into()));
    }
    Ok(WeakCouplingSolution { sigma11, k: (upsilon / sigma11).sqrt(), bc })
}

impl WeakCouplingSolution {
    fn sign(alpha: usize) -> f64 {
        if alpha == 0 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn rho(&self, alpha: usize, x: f64) -> f64 {
        let ([l1, l2], [r1, r2]) = (self.bc.left, self.bc.right);
        let base = 0.5 * (l1 + l2 + x * (r1 + r2 - l1 - l2));
        if self.k == 0.0 {
            let own = [l1, l2][alpha] + ([r1, r2][alpha] - [l1, l2][alpha]) * x;
            return own;
        }
        let s = std::f64::consts::SQRT_2 * self.k;
        let odd = ((l2 - l1) * (s * (x - 1.0)).sinh() + (r1 - r2) * (s * x).sinh()) / s.sinh();
        base - 0.5 * Self::sign(alpha) * odd
    }

    pub fn current(&self, alpha: usize, x: f64) -> f64 {
        let ([l1, l2], [r1, r2]) = (self.bc.left, self.bc.right);
        if self.k == 0.0 {
            return self.sigma11 * ([l1, l2][alpha] - [r1, r2][alpha]);
        }
        let s = std::f64::consts::SQRT_2 * self.k;
        let odd = s * ((l2 - l1) * (s * (x - 1.0)).cosh() + (r1 - r2) * (s * x).cosh()) / s.sinh();
        0.5 * self.sigma11 * (l1 + l2 - r1 - r2 + Self::sign(alpha) * odd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizerConfig {
    /// Spacing of the dense pre-scan on `[0, 1]`.
    pub scan_step: f64,
    /// Bracket width at which golden-section refinement stops.
    pub tol: f64,
}

impl Default for MinimizerConfig {
    fn default() -> Self {
        MinimizerConfig { scan_step: 1e-4, tol: 1e-10 }
    }
}

/// Minimum of `f` on `[0, 1]` as `(x, f(x))`: dense scan, then golden section
/// inside the bracket around the best sample.
pub fn minimize_on_unit(f: impl Fn(f64) -> f64, cfg: &MinimizerConfig) -> (f64, f64) {
    let n = ((1.0 / cfg.scan_step).round() as usize).max(2);
    let h = 1.0 / n as f64;
    let (mut best_i, mut best) = (0, f(0.0));
    for i in 1..=n {
        let v = f(i as f64 * h);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut lo = (best_i.saturating_sub(1)) as f64 * h;
    let mut hi = ((best_i + 1).min(n)) as f64 * h;
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > cfg.tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (lo + hi);
    let mut out = (best_i as f64 * h, best);
    for (x, v) in [(xm, f(xm)), (x1, f1), (x2, f2)] {
        if v < out.1 {
            out = (x, v);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlobalUphill {
    None,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UphillVerdict {
    /// Direction of a total current flowing against the total density gradient.
    pub global: GlobalUphill,
    pub local1: bool,
    pub local2: bool,
    pub min_j1: (f64, f64),
    pub min_j2: (f64, f64),
    pub max_j1: (f64, f64),
    pub max_j2: (f64, f64),
}

/// Uphill diagnostics of a pair of current profiles on `[0, 1]`.
///
/// Species `α` shows local uphill diffusion when its current never vanishes
/// and flows from the lower reservoir density to the higher one.
pub fn classify_currents(
    j: [&dyn Fn(f64) -> f64; 2],
    bc: &BoundaryDensities,
    cfg: &MinimizerConfig,
) -> UphillVerdict {
    let min = |a: usize| minimize_on_unit(|x| j[a](x), cfg);
    let max = |a: usize| {
        let (x, v) = minimize_on_unit(|x| -j[a](x), cfg);
        (x, -v)
    };
    let (min_j1, min_j2, max_j1, max_j2) = (min(0), min(1), max(0), max(1));
    let local = |a: usize, lo: (f64, f64), hi: (f64, f64)| {
        (bc.left[a] < bc.right[a] && lo.1 > 0.0) || (bc.left[a] > bc.right[a] && hi.1 < 0.0)
    };
    let total = j[0](0.5) + j[1](0.5);
    let grad = bc.left[0] + bc.left[1] - bc.right[0] - bc.right[1];
    let eps = 1e-12;
    let global = if total > eps && grad < -eps {
        GlobalUphill::Right
    } else if total < -eps && grad > eps {
        GlobalUphill::Left
    } else {
        GlobalUphill::None
    };
    UphillVerdict {
        global,
        local1: local(0, min_j1, max_j1),
        local2: local(1, min_j2, max_j2),
        min_j1,
        min_j2,
        max_j1,
        max_j2,
    }
}

pub fn classify_uphill(sol: &StationarySolution, cfg: &MinimizerConfig) -> UphillVerdict {
    let j1 = |x: f64| sol.j1(x);
    let j2 = |x: f64| sol.j2(x);
    classify_currents([&j1, &j2], &sol.bc, cfg)
}

/// True when `f` is monotone on `[0, 1]` at sampling resolution `step`.
pub fn is_monotone(f: impl Fn(f64) -> f64, step: f64) -> bool {
    let n = (1.0 / step).round() as usize;
    let vals: Vec<f64> = (0..=n).map(|i| f(i as f64 / n as f64)).collect();
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let tol = 1e-13 * scale;
    let up = vals.windows(2).all(|w| w[1] >= w[0] - tol);
    let down = vals.windows(2).all(|w| w[1] <= w[0] + tol);
    up || down
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> MacroParams {
        MacroParams::reference([0.2, 0.6], [0.3, 0.1])
    }

    #[test]
    fn reference_rate_is_two() {
        let s = stationary_continuum(&reference()).unwrap();
        let ProfileShape::Coupled(k) = s.shape else { panic!() };
        assert!((k.r - 2.0).abs() < 1e-14);
        assert!((s.rho1(0.0) - 0.2).abs() < 1e-12);
        assert!((s.rho2(1.0) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn reference_current_matches_explicit_formula() {
        let s = stationary_continuum(&reference()).unwrap();
        let e2 = 2f64.exp();
        let e4 = 4f64.exp();
        let ([l1, l2], [r1, r2]) = ([0.2, 0.6], [0.3, 0.1]);
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            for (a, sign) in [(0usize, -1.0), (1, 1.0)] {
                let expect = 0.75 * (l1 + l2 - r1 - r2)
                    + sign * (2.0 - 2.0 * x).exp() * (r1 - r2 - l1 * e2 + l2 * e2) / (2.0 * (e4 - 1.0))
                    - sign * (2.0 * x).exp() * (l1 - l2 - r1 * e2 + r2 * e2) / (2.0 * (e4 - 1.0));
                assert!((s.current(a, x) - expect).abs() < 1e-12, "x={x} a={a}");
            }
        }
    }

    #[test]
    fn degenerate_cases() {
        let mut p = reference();
        p.upsilon = 0.0;
        assert!(matches!(stationary_continuum(&p), Err(Error::Refused(_))));
        p.sigma12 = 0.0;
        p.sigma21 = 0.0;
        let s = stationary_continuum(&p).unwrap();
        assert!((s.rho1(0.5) - 0.25).abs() < 1e-15);
        let mut q = reference();
        q.sigma12 = 1.0;
        q.sigma21 = 1.0;
        assert!(stationary_continuum(&q).is_err());
    }

    #[test]
    fn rk4_refuses_unstable_steps() {
        let sys = DiscreteSystem::macroscopic(&reference(), 50);
        let rho0 = vec![[0.0, 0.0]; 50];
        let e = sys.integrate(&rho0, 1.0, 1e-2).unwrap_err();
        assert!(e.to_string().contains("dt <="));
        assert_eq!(sys.integrate(&rho0, 0.0, sys.max_step()).unwrap(), rho0);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let p = reference();
        let sys = DiscreteSystem::microscopic(&p, 8);
        let rho0: Profile = (0..8).map(|i| [0.1 * (i % 3) as f64, 0.05 * i as f64]).collect();
        let exact = sys.integrate(&rho0, 1.0, 1e-4).unwrap();
        let err = |dt: f64| {
            let r = sys.integrate(&rho0, 1.0, dt).unwrap();
            r.iter().zip(&exact).map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs())).fold(0.0, f64::max)
        };
        let ratio = err(0.02) / err(0.01);
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn long_time_limit_is_stationary() {
        let p = reference();
        let sys = DiscreteSystem::microscopic(&p, 6);
        let st = sys.stationary().unwrap();
        let end = sys.integrate(&vec![[0.0, 0.0]; 6], 400.0, 0.02).unwrap();
        for (a, b) in end.iter().zip(&st) {
            assert!((a[0] - b[0]).abs() < 1e-8 && (a[1] - b[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn discrete_stationary_converges_to_continuum() {
        let p = reference();
        let sol = stationary_continuum(&p).unwrap();
        let err = |n: usize| {
            let sys = DiscreteSystem::macroscopic(&p, n);
            let st = sys.stationary().unwrap();
            (0..n).map(|i| (st[i][0] - sol.rho1(sys.position(i))).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(49), err(99));
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn weak_coupling_agrees_with_general_solution() {
        let bc = BoundaryDensities::new([0.1, 0.4], [0.35, 0.2]);
        let p = MacroParams {
            sigma11: 0.7,
            sigma12: 0.0,
            sigma21: 0.0,
            sigma22: 0.7,
            upsilon: 1.3,
            ..MacroParams::reference(bc.left, bc.right)
        };
        let g = stationary_continuum(&p).unwrap();
        let w = weak_coupling_solution(0.7, 1.3, bc).unwrap();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            for a in 0..2 {
                assert!((g.rho(a, x) - w.rho(a, x)).abs() < 1e-12);
                assert!((g.current(a, x) - w.current(a, x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn golden_section_finds_interior_minimum() {
        let (x, v) = minimize_on_unit(|x| (x - 0.123456789).powi(2) + 1.0, &MinimizerConfig::default());
        assert!((x - 0.123456789).abs() < 1e-6 && (v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reference_profile_is_locally_uphill() {
        let s = stationary_continuum(&reference()).unwrap();
        let v = classify_uphill(&s, &MinimizerConfig::default());
        assert!(v.local1);
        assert_eq!(v.global, GlobalUphill::None);
        assert!((v.min_j1.1 - 0.0649649993773121).abs() < 1e-10);
    }
}
