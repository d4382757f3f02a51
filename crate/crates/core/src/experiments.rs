//! End-to-end experiments: simulation against the mean-field stationary
//! profile, hydrodynamic convergence from a step profile, and the four
//! reference uphill profiles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    classify_uphill, is_monotone, stationary_continuum, stationary_discrete, DiscreteSystem, GlobalUphill,
    MinimizerConfig, UphillVerdict,
};
use crate::model::Configuration;
use crate::rates::{build_model, MacroParams};
use crate::simulator::{run_ensemble, simulate_snapshots, with_thread_pool, SimConfig, SimStats};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimVsOdeReport {
    pub sites: usize,
    /// `[site][species-1]`
    pub simulated: Vec<[f64; 2]>,
    pub standard_error: Vec<[f64; 2]>,
    pub stationary: Vec<[f64; 2]>,
    /// `max |simulated - stationary| / stderr` over sites and species.
    pub max_z: f64,
    pub max_standard_error: f64,
    pub stats: SimStats,
}

/// Simulates the chain built from `params` and compares time-averaged
/// occupations with the stationary mean-field profile.
pub fn sim_vs_ode(params: &MacroParams, sites: usize, cfg: &SimConfig) -> Result<SimVsOdeReport> {
    let model = build_model(params, sites)?;
    let stats = run_ensemble(&model, cfg)?;
    let stationary = stationary_discrete(params, sites)?;
    let simulated: Vec<[f64; 2]> = stats.time_avg_occupation.iter().map(|m| [m[1], m[2]]).collect();
    let standard_error: Vec<[f64; 2]> = stats.standard_error.iter().map(|e| [e[1], e[2]]).collect();
    let mut max_z = 0.0f64;
    let mut max_se = 0.0f64;
    for z in 0..sites {
        for a in 0..2 {
            let se = standard_error[z][a];
            max_se = max_se.max(se);
            let d = (simulated[z][a] - stationary[z][a]).abs();
            max_z = max_z.max(if se > 0.0 { d / se } else if d == 0.0 { 0.0 } else { f64::INFINITY });
        }
    }
    Ok(SimVsOdeReport { sites, simulated, standard_error, stationary, max_z, max_standard_error: max_se, stats })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroConfig {
    /// Diagonal diffusion rate `σ11 = σ22`; cross-diffusion is zero.
    pub sigma: f64,
    /// Macroscopic reaction rate; the microscopic rate is `Υ ε²`.
    pub upsilon: f64,
    /// Densities on `[0, 1/2)` and `[1/2, 1]`, also used as reservoirs.
    pub step_left: [f64; 2],
    pub step_right: [f64; 2],
    pub time: f64,
    pub epsilons: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    pub bin_width: f64,
    /// Reference grid refinement relative to the finest lattice.
    pub reference_refinement: usize,
}

impl Default for HydroConfig {
    fn default() -> Self {
        HydroConfig {
            sigma: 1.0,
            upsilon: 2.0,
            step_left: [0.6, 0.2],
            step_right: [0.1, 0.3],
            time: 0.05,
            epsilons: vec![1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
            replicas: 200,
            seed: 20_240_611,
            bin_width: 0.1,
            reference_refinement: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroReport {
    pub epsilons: Vec<f64>,
    /// L1 distance (summed over species) of bin-averaged profiles.
    pub errors: Vec<f64>,
    /// Expected L1 distance produced by sampling noise alone.
    pub noise_floor: Vec<f64>,
    /// Errors decrease along `epsilons`, up to the noise floor.
    pub monotone_flag: bool,
}

fn step_value(cfg: &HydroConfig, x: f64) -> [f64; 2] {
    if x < 0.5 {
        cfg.step_left
    } else {
        cfg.step_right
    }
}

/// Reference solution of the continuum equations at `cfg.time`, sampled at
/// `x = k / lattice` for `k = 1..lattice`.
fn reference_profile(cfg: &HydroConfig, lattice: usize) -> Result<Vec<[f64; 2]>> {
    let r = cfg.reference_refinement.max(1);
    let sites = lattice * r - 1;
    let p = MacroParams {
        sigma11: cfg.sigma,
        sigma12: 0.0,
        sigma21: 0.0,
        sigma22: cfg.sigma,
        upsilon: cfg.upsilon,
        h: 0.0,
        m: 0.0,
        ..MacroParams::reference(cfg.step_left, cfg.step_right)
    };
    let sys = DiscreteSystem::macroscopic(&p, sites);
    let rho0: Vec<[f64; 2]> = (0..sites).map(|i| step_value(cfg, sys.position(i))).collect();
    let end = sys.integrate(&rho0, cfg.time, sys.max_step())?;
    Ok((1..lattice).map(|k| end[k * r - 1]).collect())
}

/// Convergence of the rescaled particle system to the continuum equations.
///
/// For each `ε`, a chain of `1/ε - 1` sites with reservoirs at `x = 0, 1` is
/// started from independent sites with the step densities, run for time
/// `t/ε²` with microscopic reaction rate `Υ ε²`, and compared bin by bin on
/// `[0.1, 0.9]` with the continuum solution at time `t`.
pub fn hydro_convergence(cfg: &HydroConfig) -> Result<HydroReport> {
    if cfg.epsilons.is_empty() || cfg.replicas < 2 {
        return Err(Error::Domain("need at least one ε and two replicas".into()));
    }
    let mut errors = Vec::new();
    let mut noise = Vec::new();
    for (i, &eps) in cfg.epsilons.iter().enumerate() {
        let lattice = (1.0 / eps).round() as usize;
        if lattice < 4 || ((lattice as f64) * eps - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("ε = {eps} must be 1/M for an integer M >= 4")));
        }
        let sites = lattice - 1;
        let micro = MacroParams {
            sigma11: cfg.sigma,
            sigma12: 0.0,
            sigma21: 0.0,
            sigma22: cfg.sigma,
            upsilon: cfg.upsilon * eps * eps,
            h: 0.0,
            m: 0.0,
            ..MacroParams::reference(cfg.step_left, cfg.step_right)
        };
        let model = build_model(&micro, sites)?;
        let t_micro = cfg.time / (eps * eps);
        let positions: Vec<f64> = (1..=sites).map(|k| k as f64 * eps).collect();
        let seed = cfg.seed.wrapping_add(i as u64);
        let runs: Vec<Result<Vec<[f64; 2]>>> = with_thread_pool(|| {
            (0..cfg.replicas)
                .into_par_iter()
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(2 * r as u64 + 1);
                    let init: Vec<u8> = positions
                        .iter()
                        .map(|&x| {
                            let d = step_value(cfg, x);
                            let u: f64 = rng.gen();
                            if u < d[0] {
                                1
                            } else if u < d[0] + d[1] {
                                2
                            } else {
                                0
                            }
                        })
                        .collect();
                    let snap = simulate_snapshots(&model, &Configuration(init), seed, 2 * r as u64, &[t_micro])?;
                    Ok(snap[0].0.iter().map(|&a| [(a == 1) as u8 as f64, (a == 2) as u8 as f64]).collect())
                })
                .collect()
        });
        let runs: Vec<Vec<[f64; 2]>> = runs.into_iter().collect::<Result<_>>()?;
        let reference = reference_profile(cfg, lattice)?;

        let bins = ((0.8 / cfg.bin_width).round() as usize).max(1);
        let bin_of = |x: f64| {
            let b = ((x - 0.1) / cfg.bin_width + 1e-9).floor();
            if x < 0.1 - 1e-12 || x > 0.9 + 1e-12 {
                None
            } else {
                Some((b.max(0.0) as usize).min(bins - 1))
            }
        };
        let r = runs.len() as f64;
        let mut err = 0.0;
        let mut floor = 0.0;
        for b in 0..bins {
            let members: Vec<usize> = (0..sites).filter(|&k| bin_of(positions[k]) == Some(b)).collect();
            if members.is_empty() {
                continue;
            }
            let m = members.len() as f64;
            for a in 0..2 {
                let per_run: Vec<f64> = runs.iter().map(|run| members.iter().map(|&k| run[k][a]).sum::<f64>() / m).collect();
                let mean = per_run.iter().sum::<f64>() / r;
                let var = per_run.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
                let refv = members.iter().map(|&k| reference[k][a]).sum::<f64>() / m;
                err += cfg.bin_width * (mean - refv).abs();
                floor += cfg.bin_width * (2.0 / std::f64::consts::PI).sqrt() * (var / r).sqrt();
            }
        }
        errors.push(err);
        noise.push(floor);
    }
    let monotone_flag = errors.windows(2).zip(noise.windows(2)).all(|(e, n)| e[1] <= e[0] + n[0].max(n[1]));
    Ok(HydroReport { epsilons: cfg.epsilons.clone(), errors, noise_floor: noise, monotone_flag })
}

/// Reservoir densities `(ρL1, ρL2, ρR1, ρR2)` of the four reference profiles.
pub const FIGURE_BOUNDARIES: [[f64; 4]; 4] =
    [[0.2, 0.6, 0.3, 0.1], [0.3, 0.5, 0.4, 0.1], [0.01, 0.1, 0.02, 0.02], [0.08, 0.08, 0.09, 0.01]];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureCase {
    pub boundary: [f64; 4],
    pub verdict: UphillVerdict,
    pub j1_monotone: bool,
    pub expected_monotone: bool,
    pub pass: bool,
    /// `(x, ρ1, ρ2, J1, J2)` on an even grid.
    pub profile: Vec<[f64; 5]>,
}

/// Stationary profiles for the reference parameters and the four reservoir
/// settings; each must show local uphill diffusion of species 1, no global
/// uphill, and the expected (non-)monotonicity of `J1`.
pub fn reproduce_figures(samples: usize) -> Result<Vec<FigureCase>> {
    FIGURE_BOUNDARIES
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let p = MacroParams::reference([b[0], b[1]], [b[2], b[3]]);
            let sol = stationary_continuum(&p)?;
            let verdict = classify_uphill(&sol, &MinimizerConfig::default());
            let j1_monotone = is_monotone(|x| sol.j1(x), 1e-4);
            let expected_monotone = i >= 2;
            let pass = verdict.local1 && verdict.global == GlobalUphill::None && j1_monotone == expected_monotone;
            let profile = profile_samples(&sol, samples);
            Ok(FigureCase { boundary: *b, verdict, j1_monotone, expected_monotone, pass, profile })
        })
        .collect()
}

/// `(x, ρ1, ρ2, J1, J2)` at `samples` evenly spaced points of `[0, 1]`.
pub fn profile_samples(sol: &crate::analytic::StationarySolution, samples: usize) -> Vec<[f64; 5]> {
    let n = samples.max(2);
    (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            [x, sol.rho1(x), sol.rho2(x), sol.j1(x), sol.j2(x)]
        })
        .collect()
}
