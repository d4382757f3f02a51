//! Independent numerical solver for the stationary continuum problem
//! `Σρ'' = Υ(ρ1 - ρ2)(1, -1)` on `[0, 1]` with Dirichlet data, by linear
//! shooting with RK4.

use uphill::MacroParams;

pub struct BvpSolution {
    pub steps: usize,
    /// `(ρ1, ρ2, ρ1', ρ2')` on the uniform grid `i / steps`.
    pub states: Vec<[f64; 4]>,
    pub sigma: [[f64; 2]; 2],
}

impl BvpSolution {
    pub fn rho(&self, i: usize) -> [f64; 2] {
        [self.states[i][0], self.states[i][1]]
    }

    pub fn current(&self, i: usize, alpha: usize) -> f64 {
        let s = &self.states[i];
        -self.sigma[alpha][0] * s[2] - self.sigma[alpha][1] * s[3]
    }
}

fn field(inv: [[f64; 2]; 2], ups: f64, y: [f64; 4]) -> [f64; 4] {
    let v = ups * (y[0] - y[1]);
    [y[2], y[3], (inv[0][0] - inv[0][1]) * v, (inv[1][0] - inv[1][1]) * v]
}

fn shoot(inv: [[f64; 2]; 2], ups: f64, y0: [f64; 4], steps: usize, h: f64) -> Vec<[f64; 4]> {
    let mut out = vec![y0];
    let mut y = y0;
    let add = |a: [f64; 4], b: [f64; 4], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2], a[3] + s * b[3]];
    for _ in 0..steps {
        let k1 = field(inv, ups, y);
        let k2 = field(inv, ups, add(y, k1, h / 2.0));
        let k3 = field(inv, ups, add(y, k2, h / 2.0));
        let k4 = field(inv, ups, add(y, k3, h));
        for j in 0..4 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        out.push(y);
    }
    out
}

/// Shoots from both ends with unknown slopes and matches value and slope at
/// the midpoint, which keeps the growth of the stiff mode to `e^{r/2}`.
pub fn solve(p: &MacroParams, steps: usize) -> BvpSolution {
    assert!(steps % 2 == 0);
    let s = p.sigma();
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
    let (l, r) = (p.rho_left(), p.rho_right());
    let (half, h) = (steps / 2, 1.0 / steps as f64);
    let run = |y0: [f64; 4], dir: f64| shoot(inv, p.upsilon, y0, half, dir * h);
    let lb = run([l[0], l[1], 0.0, 0.0], 1.0);
    let l1 = run([0.0, 0.0, 1.0, 0.0], 1.0);
    let l2 = run([0.0, 0.0, 0.0, 1.0], 1.0);
    let rb = run([r[0], r[1], 0.0, 0.0], -1.0);
    let r1 = run([0.0, 0.0, 1.0, 0.0], -1.0);
    let r2 = run([0.0, 0.0, 0.0, 1.0], -1.0);
    // Unknowns (a1, a2, b1, b2): left(a) - right(b) = 0 at the midpoint.
    let mut m = nalgebra::Matrix4::zeros();
    let mut rhs = nalgebra::Vector4::zeros();
    for j in 0..4 {
        m[(j, 0)] = l1[half][j];
        m[(j, 1)] = l2[half][j];
        m[(j, 2)] = -r1[half][j];
        m[(j, 3)] = -r2[half][j];
        rhs[j] = rb[half][j] - lb[half][j];
    }
    let c = m.lu().solve(&rhs).expect("shooting system is regular");
    let mut states = Vec::with_capacity(steps + 1);
    for i in 0..=half {
        states.push(std::array::from_fn(|j| lb[i][j] + c[0] * l1[i][j] + c[1] * l2[i][j]));
    }
    for i in (0..half).rev() {
        states.push(std::array::from_fn(|j| rb[i][j] + c[2] * r1[i][j] + c[3] * r2[i][j]));
    }
    BvpSolution { steps, states, sigma: s }
}
