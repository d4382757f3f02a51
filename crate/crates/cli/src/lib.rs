//! Command-line front end: parameter parsing, CSV and SVG emission, run
//! manifests and the subcommand implementations behind the `uphill` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use uphill::analytic::{classify_uphill, stationary_continuum, GlobalUphill, MinimizerConfig};
use uphill::duality::check_self_duality;
use uphill::experiments::{hydro_convergence, profile_samples, reproduce_figures, sim_vs_ode, HydroConfig};
use uphill::rates::{build_model, validate};
use uphill::simulator::{bonds_csv, run_ensemble, sites_csv, SimConfig};
use uphill::{Configuration, MacroParams, ProcessModel};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed or out-of-range input (exit code 2).
    #[error("input error: {0}")]
    Input(String),
    /// A scientific check failed or the parameters admit no process (exit code 1).
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Check(_) => 1,
        }
    }
}

impl From<uphill::Error> for CliError {
    fn from(e: uphill::Error) -> Self {
        match e {
            uphill::Error::InvalidParams(_) | uphill::Error::Refused(_) | uphill::Error::Numerical(_) => {
                CliError::Check(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

const RATE_KEYS: [&str; 7] = ["sigma11", "sigma12", "sigma21", "sigma22", "upsilon", "h", "m"];
const DENSITY_KEYS: [&str; 4] = ["rhoL1", "rhoL2", "rhoR1", "rhoR2"];

/// Parses a parameter file body. Every problem names the offending field.
pub fn params_from_json(text: &str) -> CliResult<MacroParams> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("malformed JSON: {e}")))?;
    let obj = value.as_object().ok_or_else(|| CliError::Input("expected a JSON object".into()))?;
    for k in obj.keys() {
        if !RATE_KEYS.contains(&k.as_str()) && !DENSITY_KEYS.contains(&k.as_str()) {
            return Err(CliError::Input(format!("{k}: unknown field")));
        }
    }
    let field = |k: &str| -> CliResult<Option<f64>> {
        match obj.get(k) {
            None => Ok(None),
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Ok(Some(x)),
                _ => Err(CliError::Input(format!("{k}: expected a finite number, got {v}"))),
            },
        }
    };
    let mut vals = [0.0; 11];
    for (i, k) in RATE_KEYS.iter().chain(DENSITY_KEYS.iter()).enumerate() {
        vals[i] = match field(k)? {
            Some(x) => x,
            None if *k == "h" || *k == "m" => 0.0,
            None => return Err(CliError::Input(format!("{k}: missing field"))),
        };
        if i < 7 && vals[i] < 0.0 {
            return Err(CliError::Input(format!("{k}: must be non-negative, got {}", vals[i])));
        }
        if i >= 7 && !(0.0..=1.0).contains(&vals[i]) {
            return Err(CliError::Input(format!("{k}: must lie in [0, 1], got {}", vals[i])));
        }
    }
    for (side, a, b) in [("rhoL1 + rhoL2", vals[7], vals[8]), ("rhoR1 + rhoR2", vals[9], vals[10])] {
        if a + b > 1.0 + uphill::TOL {
            return Err(CliError::Input(format!("{side}: must not exceed 1, got {}", a + b)));
        }
    }
    Ok(MacroParams {
        sigma11: vals[0],
        sigma12: vals[1],
        sigma21: vals[2],
        sigma22: vals[3],
        upsilon: vals[4],
        h: vals[5],
        m: vals[6],
        rho_l1: vals[7],
        rho_l2: vals[8],
        rho_r1: vals[9],
        rho_r2: vals[10],
    })
}

pub fn parse_params(path: &Path) -> CliResult<MacroParams> {
    params_from_json(&read(path)?).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Hex SHA-256 of the canonical JSON form of the parameters.
pub fn params_hash(p: &MacroParams) -> String {
    let canonical = serde_json::to_string(p).expect("parameters serialize");
    format!("{:x}", Sha256::digest(canonical.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params_hash: Option<String>,
    pub seeds: Vec<u64>,
    pub version: String,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    pub pass: Option<bool>,
    /// Command-specific parameters and results.
    pub details: serde_json::Value,
}

/// `x,rho1,rho2,J1,J2` rows.
pub fn profile_csv(samples: &[[f64; 5]]) -> String {
    let mut out = String::from("x,rho1,rho2,J1,J2\n");
    for s in samples {
        let _ = writeln!(out, "{},{},{},{},{}", s[0], s[1], s[2], s[3], s[4]);
    }
    out
}

pub fn read_profile_csv(text: &str) -> CliResult<Vec<[f64; 5]>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| CliError::Input(format!("profile CSV: {e}")))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "rho1", "rho2", "J1", "J2"] {
        return Err(CliError::Input("profile CSV: expected columns x,rho1,rho2,J1,J2".into()));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(format!("profile CSV: {e}")))?;
        let mut row = [0.0; 5];
        for (i, v) in rec.iter().enumerate().take(5) {
            row[i] = v
                .trim()
                .parse()
                .map_err(|_| CliError::Input(format!("profile CSV row {}: bad number {v:?}", line + 2)))?;
        }
        out.push(row);
    }
    Ok(out)
}

/// Densities as dashed lines, currents as solid lines; species 1 red and
/// species 2 blue. Densities use the left axis, currents the right one.
pub fn emit_svg(samples: &[[f64; 5]]) -> CliResult<String> {
    if samples.is_empty() {
        return Err(CliError::Input("no profile samples to plot".into()));
    }
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let range = |cols: [usize; 2]| {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in samples {
            for c in cols {
                lo = lo.min(s[c]);
                hi = hi.max(s[c]);
            }
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let m = 0.05 * (hi - lo);
        (lo - m, hi + m)
    };
    let (x0, x1) = (samples[0][0], samples[samples.len() - 1][0].max(samples[0][0] + 1e-12));
    let px = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let dens = range([1, 2]);
    let curr = range([3, 4]);
    let py = |y: f64, r: (f64, f64)| h - pad - (y - r.0) / (r.1 - r.0) * (h - 2.0 * pad);
    let mut out = String::new();
    let _ = writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(out, "<!-- uphill {VERSION} -->");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(out, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<path d=\"M{pad} {pad} V{b} H{r} V{pad}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>",
        b = h - pad,
        r = w - pad
    );
    let labels = [
        (pad, pad - 10.0, "start", format!("density {:.3}..{:.3}", dens.0, dens.1)),
        (w - pad, pad - 10.0, "end", format!("current {:.3}..{:.3}", curr.0, curr.1)),
        (w / 2.0, h - pad + 30.0, "middle", format!("x {:.2}..{:.2}", x0, x1)),
    ];
    for (x, y, anchor, text) in labels {
        let _ = writeln!(
            out,
            "<text x=\"{x}\" y=\"{y}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"{anchor}\">{text}</text>"
        );
    }
    let series = [
        (1, dens, "red", true, "rho1"),
        (2, dens, "blue", true, "rho2"),
        (3, curr, "red", false, "J1"),
        (4, curr, "blue", false, "J2"),
    ];
    for (col, r, color, dashed, name) in series {
        let pts: Vec<String> = samples.iter().map(|s| format!("{:.3},{:.3}", px(s[0]), py(s[col], r))).collect();
        let dash = if dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        let _ = writeln!(
            out,
            "<polyline id=\"{name}\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>",
            pts.join(" ")
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[derive(Debug, Parser)]
#[command(name = "uphill", version, about = "Two-species reaction-diffusion particle systems with uphill diffusion")]
pub struct Cli {
    /// Where to write the run manifest (defaults to `<out>.manifest.json`,
    /// `<dir>/manifest.json` for repro, or stderr when there is no output file).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the admissibility conditions and print each margin.
    Validate {
        #[arg(long)]
        params: PathBuf,
    },
    /// Write the chain model (bulk and reservoir generators) as JSON.
    Build {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        n_sites: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a model and write per-site and per-bond statistics.
    Simulate(SimulateArgs),
    /// Sample the stationary continuum profile and currents.
    Stationary {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify uphill diffusion over a grid of reservoir densities.
    UphillScan {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        grid: f64,
        /// Pre-scan spacing of the current minimisation.
        #[arg(long, default_value_t = 1e-3)]
        scan_step: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a profile CSV as SVG.
    Plot {
        profile: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustive self-duality check on a short chain.
    DualityCheck {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 3)]
        sites: usize,
        /// Allow parameters outside the symmetric family.
        #[arg(long)]
        exploratory: bool,
    },
    /// Reproduction experiments.
    Repro {
        #[command(subcommand)]
        which: Repro,
    },
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100.0)]
    pub burn_in: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub sample: f64,
    #[arg(long, default_value_t = 1)]
    pub replicas: usize,
    #[arg(long, default_value_t = 50)]
    pub batches: usize,
    /// Starting configuration as comma-separated labels; sampled when absent.
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Bond currents file (defaults to `<out stem>_bonds.csv`).
    #[arg(long)]
    pub bonds: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Repro {
    /// The four reference profiles (CSV and SVG each).
    Figures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
    /// Simulated stationary profile against the discrete mean-field solution.
    SimVsOde {
        #[arg(long)]
        out: PathBuf,
        /// Parameter file; the reference parameters with reservoirs (0.2, 0.6), (0.3, 0.1) when absent.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        sites: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1000.0)]
        burn_in: f64,
        #[arg(long, default_value_t = 60000.0)]
        sample: f64,
        #[arg(long, default_value_t = 4)]
        replicas: usize,
    },
    /// Convergence of the rescaled particle system from a step profile.
    Hydro {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Result of a subcommand: text for stdout, manifest content and pass state.
struct Outcome {
    stdout: String,
    params_hash: Option<String>,
    seeds: Vec<u64>,
    outputs: Vec<PathBuf>,
    manifest_path: Option<PathBuf>,
    pass: Option<bool>,
    details: serde_json::Value,
}

impl Outcome {
    fn new(stdout: String) -> Self {
        Outcome {
            stdout,
            params_hash: None,
            seeds: Vec::new(),
            outputs: Vec::new(),
            manifest_path: None,
            pass: None,
            details: serde_json::Value::Null,
        }
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn default_bonds_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "stats".into());
    out.with_file_name(format!("{stem}_bonds.csv"))
}

fn parse_configuration(s: &str) -> CliResult<Configuration> {
    s.split(',')
        .map(|t| t.trim().parse::<u8>().map_err(|_| CliError::Input(format!("initial: bad label {t:?}"))))
        .collect::<CliResult<Vec<u8>>>()
        .map(Configuration)
}

fn require_valid(p: &MacroParams) -> CliResult<()> {
    let v = validate(p);
    if v.valid {
        Ok(())
    } else {
        Err(CliError::Check(format!("parameters admit no process: {v}")))
    }
}

fn simulate(a: &SimulateArgs) -> CliResult<Outcome> {
    let model = ProcessModel::from_json(&read(&a.model)?)?;
    let cfg = SimConfig {
        seed: a.seed,
        burn_in_time: a.burn_in,
        sample_time: a.sample,
        replicas: a.replicas,
        batches: a.batches,
        initial: a.initial.as_deref().map(parse_configuration).transpose()?,
        ..SimConfig::default()
    };
    let stats = run_ensemble(&model, &cfg)?;
    let bonds = a.bonds.clone().unwrap_or_else(|| default_bonds_path(&a.out));
    write(&a.out, &sites_csv(&stats))?;
    write(&bonds, &bonds_csv(&stats))?;
    let mut o = Outcome::new(format!(
        "{} events over process time {} ({} replicas){}\n",
        stats.event_count,
        stats.elapsed_process_time,
        stats.replicas,
        if stats.absorbed { "; reached an absorbing state" } else { "" }
    ));
    o.seeds = vec![a.seed];
    o.outputs = vec![a.out.clone(), bonds];
    o.manifest_path = Some(with_suffix(&a.out, ".manifest.json"));
    o.details = serde_json::json!({ "config": cfg, "model": a.model, "events": stats.event_count });
    Ok(o)
}

fn uphill_scan(p: &MacroParams, grid: f64, scan_step: f64) -> CliResult<String> {
    if !(grid > 0.0 && grid <= 1.0) || !(scan_step > 0.0 && scan_step <= 0.5) {
        return Err(CliError::Input("grid and scan-step must lie in (0, 1]".into()));
    }
    require_valid(p)?;
    let k = (1.0 / grid).round() as usize;
    let points: Vec<[f64; 2]> = (0..=k)
        .flat_map(|i| (0..=k - i).map(move |j| [i as f64 / k as f64, j as f64 / k as f64]))
        .collect();
    let cfg = MinimizerConfig { scan_step, tol: 1e-10 };
    let mut out = String::from("rhoL1,rhoL2,rhoR1,rhoR2,global,local1,local2,min_J1,min_J2,max_J1,max_J2\n");
    for l in &points {
        for r in &points {
            let q = p.with_reservoirs(*l, *r);
            let v = classify_uphill(&stationary_continuum(&q)?, &cfg);
            let g = match v.global {
                GlobalUphill::None => "none",
                GlobalUphill::Left => "left",
                GlobalUphill::Right => "right",
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{g},{},{},{},{},{},{}",
                l[0], l[1], r[0], r[1], v.local1, v.local2, v.min_j1.1, v.min_j2.1, v.max_j1.1, v.max_j2.1
            );
        }
    }
    Ok(out)
}

fn repro(which: &Repro) -> CliResult<Outcome> {
    match which {
        Repro::Figures { out, samples } => {
            let cases = reproduce_figures(*samples)?;
            let mut o = Outcome::new(String::new());
            let mut summary = Vec::new();
            for (i, c) in cases.iter().enumerate() {
                let csv_path = out.join(format!("profile_{}.csv", i + 1));
                let svg_path = out.join(format!("profile_{}.svg", i + 1));
                write(&csv_path, &profile_csv(&c.profile))?;
                write(&svg_path, &emit_svg(&c.profile)?)?;
                o.outputs.extend([csv_path, svg_path]);
                let _ = writeln!(
                    o.stdout,
                    "{:?}: local1={} min J1={:.6} J1 monotone={} (expected {}) {}",
                    c.boundary,
                    c.verdict.local1,
                    c.verdict.min_j1.1,
                    c.j1_monotone,
                    c.expected_monotone,
                    if c.pass { "PASS" } else { "FAIL" }
                );
                summary.push(serde_json::json!({
                    "boundary": c.boundary, "verdict": c.verdict,
                    "j1_monotone": c.j1_monotone, "pass": c.pass,
                }));
            }
            o.pass = Some(cases.iter().all(|c| c.pass));
            o.params_hash = Some(params_hash(&MacroParams::reference([0.0; 2], [0.0; 2])));
            o.manifest_path = Some(out.join("manifest.json"));
            o.details = serde_json::json!({ "cases": summary });
            Ok(o)
        }
        Repro::SimVsOde { out, params, sites, seed, burn_in, sample, replicas } => {
            let p = match params {
                Some(path) => parse_params(path)?,
                None => MacroParams::reference([0.2, 0.6], [0.3, 0.1]),
            };
            require_valid(&p)?;
            let cfg = SimConfig {
                seed: *seed,
                burn_in_time: *burn_in,
                sample_time: *sample,
                replicas: *replicas,
                ..SimConfig::default()
            };
            let r = sim_vs_ode(&p, *sites, &cfg)?;
            let mut cmp = String::from("site,species,simulated,stderr,stationary\n");
            for z in 0..r.sites {
                for a in 0..2 {
                    let _ = writeln!(
                        cmp,
                        "{z},{},{},{},{}",
                        a + 1,
                        r.simulated[z][a],
                        r.standard_error[z][a],
                        r.stationary[z][a]
                    );
                }
            }
            let paths = [out.join("comparison.csv"), out.join("sites.csv"), out.join("bonds.csv")];
            write(&paths[0], &cmp)?;
            write(&paths[1], &sites_csv(&r.stats))?;
            write(&paths[2], &bonds_csv(&r.stats))?;
            let pass = r.max_z <= 3.0;
            let mut o = Outcome::new(format!(
                "max |sim - ode| / SE = {:.3}, max SE = {:.5}, events {} {}\n",
                r.max_z,
                r.max_standard_error,
                r.stats.event_count,
                if pass { "PASS" } else { "FAIL" }
            ));
            o.pass = Some(pass);
            o.params_hash = Some(params_hash(&p));
            o.seeds = vec![*seed];
            o.outputs = paths.to_vec();
            o.manifest_path = Some(out.join("manifest.json"));
            o.details = serde_json::json!({
                "params": p, "config": cfg, "sites": sites,
                "max_z": r.max_z, "max_standard_error": r.max_standard_error,
            });
            Ok(o)
        }
        Repro::Hydro { out, replicas, seed } => {
            let mut cfg = HydroConfig::default();
            if let Some(r) = replicas {
                cfg.replicas = *r;
            }
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            let r = hydro_convergence(&cfg)?;
            let mut table = String::from("epsilon,l1_error,noise_floor\n");
            for i in 0..r.epsilons.len() {
                let _ = writeln!(table, "{},{},{}", r.epsilons[i], r.errors[i], r.noise_floor[i]);
            }
            let path = out.join("hydro.csv");
            write(&path, &table)?;
            let finest = *r.errors.last().expect("at least one epsilon");
            let pass = r.monotone_flag && r.errors[r.errors.len() - 1] < r.errors[0] && finest < 0.05;
            let mut o = Outcome::new(table.clone());
            let _ = writeln!(o.stdout, "{}", if pass { "PASS" } else { "FAIL" });
            o.pass = Some(pass);
            o.seeds = vec![cfg.seed];
            o.outputs = vec![path];
            o.manifest_path = Some(out.join("manifest.json"));
            o.details = serde_json::json!({ "config": cfg, "report": r });
            Ok(o)
        }
    }
}

fn dispatch(cmd: &Command) -> CliResult<Outcome> {
    match cmd {
        Command::Validate { params } => {
            let p = parse_params(params)?;
            let v = validate(&p);
            let mut text = String::new();
            for c in &v.checks {
                let _ = writeln!(text, "{:<40} margin {:>12.4e}  {}", c.name, c.margin, if c.satisfied { "ok" } else { "VIOLATED" });
            }
            let _ = writeln!(text, "valid: {}", v.valid);
            let mut o = Outcome::new(text);
            o.params_hash = Some(params_hash(&p));
            o.pass = Some(v.valid);
            o.details = serde_json::to_value(&v).expect("verdict serializes");
            Ok(o)
        }
        Command::Build { params, n_sites, out } => {
            let p = parse_params(params)?;
            require_valid(&p)?;
            let model = build_model(&p, *n_sites)?;
            write(out, &model.to_json()?)?;
            let mut o = Outcome::new(format!("wrote {} sites to {}\n", n_sites, out.display()));
            o.params_hash = Some(params_hash(&p));
            o.outputs = vec![out.clone()];
            o.manifest_path = Some(with_suffix(out, ".manifest.json"));
            Ok(o)
        }
        Command::Simulate(a) => simulate(a),
        Command::Stationary { params, samples, out } => {
            let p = parse_params(params)?;
            require_valid(&p)?;
            let sol = stationary_continuum(&p)?;
            let data = profile_samples(&sol, *samples);
            write(out, &profile_csv(&data))?;
            let v = classify_uphill(&sol, &MinimizerConfig::default());
            let mut o = Outcome::new(format!(
                "global uphill: {:?}; local uphill species 1: {}, species 2: {}; min J1 {:.6} at x={:.4}\n",
                v.global, v.local1, v.local2, v.min_j1.1, v.min_j1.0
            ));
            o.params_hash = Some(params_hash(&p));
            o.outputs = vec![out.clone()];
            o.manifest_path = Some(with_suffix(out, ".manifest.json"));
            o.details = serde_json::json!({ "verdict": v });
            Ok(o)
        }
        Command::UphillScan { params, grid, scan_step, out } => {
            let p = parse_params(params)?;
            let table = uphill_scan(&p, *grid, *scan_step)?;
            let local = table.lines().skip(1).filter(|l| l.split(',').nth(5) == Some("true")).count();
            write(out, &table)?;
            let mut o = Outcome::new(format!("{} reservoir pairs, {local} with local uphill of species 1\n", table.lines().count() - 1));
            o.params_hash = Some(params_hash(&p));
            o.outputs = vec![out.clone()];
            o.manifest_path = Some(with_suffix(out, ".manifest.json"));
            Ok(o)
        }
        Command::Plot { profile, out } => {
            let data = read_profile_csv(&read(profile)?)?;
            write(out, &emit_svg(&data)?)?;
            let mut o = Outcome::new(String::new());
            o.outputs = vec![out.clone()];
            o.manifest_path = Some(with_suffix(out, ".manifest.json"));
            Ok(o)
        }
        Command::DualityCheck { params, sites, exploratory } => {
            let p = parse_params(params)?;
            let r = check_self_duality(&p, *sites, *exploratory)?;
            let mut text = String::new();
            for (k, v) in &r.per_operator {
                let _ = writeln!(text, "{:<8} {:.3e}", format!("{k:?}"), v);
            }
            let _ = writeln!(text, "{:<8} {:.3e}", "combined", r.combined);
            let pass = r.max_residual() <= uphill::TOL;
            let mut o = Outcome::new(text);
            o.params_hash = Some(params_hash(&p));
            o.pass = Some(pass);
            o.details = serde_json::to_value(&r).expect("report serializes");
            Ok(o)
        }
        Command::Repro { which } => repro(which),
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Validate { .. } => "validate",
        Command::Build { .. } => "build",
        Command::Simulate(_) => "simulate",
        Command::Stationary { .. } => "stationary",
        Command::UphillScan { .. } => "uphill-scan",
        Command::Plot { .. } => "plot",
        Command::DualityCheck { .. } => "duality-check",
        Command::Repro { which: Repro::Figures { .. } } => "repro figures",
        Command::Repro { which: Repro::SimVsOde { .. } } => "repro sim-vs-ode",
        Command::Repro { which: Repro::Hydro { .. } } => "repro hydro",
    }
}

/// Runs a parsed command line, prints its report and writes the manifest.
/// Returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let start = Instant::now();
    match dispatch(&cli.command) {
        Ok(o) => {
            print!("{}", o.stdout);
            let manifest = RunManifest {
                command: command_name(&cli.command).into(),
                params_hash: o.params_hash,
                seeds: o.seeds,
                version: VERSION.into(),
                wall_time_seconds: start.elapsed().as_secs_f64(),
                outputs: o.outputs.iter().map(|p| p.display().to_string()).collect(),
                pass: o.pass,
                details: o.details,
            };
            match cli.manifest.clone().or(o.manifest_path) {
                Some(path) => {
                    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
                    if let Err(e) = write(&path, &(json + "\n")) {
                        eprintln!("{e}");
                        return 2;
                    }
                }
                None => eprintln!("{}", serde_json::to_string(&manifest).expect("manifest serializes")),
            }
            if o.pass == Some(false) {
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = r#"{"sigma11":1,"sigma12":0.5,"sigma21":0.5,"sigma22":1,"upsilon":1,
        "rhoL1":0.2,"rhoL2":0.6,"rhoR1":0.3,"rhoR2":0.1}"#;

    #[test]
    fn parses_reference_with_default_mutation_rates() {
        let p = params_from_json(REFERENCE).unwrap();
        assert_eq!(p.sigma12, 0.5);
        assert_eq!((p.h, p.m), (0.0, 0.0));
    }

    #[test]
    fn rejects_overfull_reservoir() {
        let bad = REFERENCE.replace("\"rhoL1\":0.2", "\"rhoL1\":0.9").replace("\"rhoL2\":0.6", "\"rhoL2\":0.3");
        let e = params_from_json(&bad).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("rhoL1 + rhoL2"), "{e}");
    }

    #[test]
    fn field_level_messages() {
        for (text, field) in [
            (REFERENCE.replace("\"sigma11\":1", "\"sigma11\":\"x\""), "sigma11"),
            (REFERENCE.replace("\"upsilon\":1,", ""), "upsilon"),
            (REFERENCE.replace("\"rhoR2\":0.1", "\"rhoR2\":1.5"), "rhoR2"),
            (REFERENCE.replace("\"sigma12\":0.5", "\"sigma12\":-0.5"), "sigma12"),
            (REFERENCE.replace("\"upsilon\"", "\"upsilom\""), "upsilom"),
        ] {
            let e = params_from_json(&text).unwrap_err();
            assert!(e.to_string().contains(field), "{e}");
        }
        assert!(params_from_json("{").unwrap_err().to_string().contains("malformed"));
    }

    #[test]
    fn svg_styles_series() {
        let samples = [[0.0, 0.3, 0.3, 0.0, 0.0], [1.0, 0.3, 0.3, 0.0, 0.0]];
        let svg = emit_svg(&samples).unwrap();
        assert!(svg.contains(&format!("<!-- uphill {VERSION} -->")));
        let lines: Vec<&str> = svg.lines().filter(|l| l.starts_with("<polyline")).collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].contains("stroke=\"red\"") && lines[0].contains("dasharray"));
        assert!(lines[1].contains("stroke=\"blue\"") && lines[1].contains("dasharray"));
        assert!(lines[2].contains("stroke=\"red\"") && !lines[2].contains("dasharray"));
        // Constant profile: both density lines are horizontal.
        for l in &lines[..2] {
            let ys: Vec<&str> = l.split('"').nth(3).unwrap().split(' ').map(|p| p.split(',').nth(1).unwrap()).collect();
            assert!(ys.windows(2).all(|w| w[0] == w[1]));
        }
        assert!(emit_svg(&[]).is_err());
    }

    #[test]
    fn profile_csv_round_trips() {
        let s = vec![[0.0, 0.2, 0.6, 0.065, -0.1], [1.0, 0.3, 0.1, 0.01, 0.2]];
        assert_eq!(read_profile_csv(&profile_csv(&s)).unwrap(), s);
    }

    #[test]
    fn hash_is_stable() {
        let p = params_from_json(REFERENCE).unwrap();
        assert_eq!(params_hash(&p), params_hash(&p.clone()));
        assert_eq!(params_hash(&p).len(), 64);
    }
}
