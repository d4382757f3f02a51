//! Exact continuous-time simulation (Gillespie direct method) of a
//! [`ProcessModel`], with time-weighted averages and batch-means errors.
//!
//! Randomness comes from `ChaCha8Rng` seeded with `seed_from_u64(seed)`;
//! replica `r` of an ensemble uses stream `r` of that generator, so replica 0
//! reproduces a single run with the same seed. Waiting times are drawn by
//! inversion, `-ln(U)/R` with `U` uniform on `(0, 1]`.
//!
//! Every bond and every boundary site is an event channel whose total exit rate
//! is kept in a sum tree; after an event only the channels touching the changed
//! sites are recomputed. Setting `UPHILL_DEBUG_CHECKS=1` (or building with debug
//! assertions) audits the stored rates against a fresh recomputation every
//! `measurement_stride` events.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{Configuration, ProcessModel, SpeciesLabel};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub burn_in_time: f64,
    pub sample_time: f64,
    /// Events between rate-bookkeeping audits when debug checks are enabled.
    pub measurement_stride: u64,
    pub replicas: usize,
    /// Number of equal time batches used for standard errors (at least 50).
    pub batches: usize,
    /// Starting configuration; sampled from the reservoirs when absent.
    pub initial: Option<Configuration>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            burn_in_time: 100.0,
            sample_time: 1000.0,
            measurement_stride: 100_000,
            replicas: 1,
            batches: 50,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub species: usize,
    pub edges: Vec<(usize, usize)>,
    /// `[site][α]` for `α = 0..=n`; each row sums to one.
    pub time_avg_occupation: Vec<Vec<f64>>,
    pub standard_error: Vec<Vec<f64>>,
    /// `[edge][pair_index(α, β)]`: time-averaged joint law of the two endpoints.
    pub pair_correlation: Vec<Vec<f64>>,
    /// Net number of particles moved from the left to the right endpoint of each edge.
    pub total_crossings: Vec<i64>,
    pub total_current: Vec<f64>,
    pub current_standard_error: Vec<f64>,
    /// Total process time simulated over all replicas, burn-in included.
    pub elapsed_process_time: f64,
    /// Total process time over which averages were taken.
    pub sampled_time: f64,
    pub event_count: u64,
    pub replicas: usize,
    /// True when some replica reached a state with zero total rate.
    pub absorbed: bool,
}

/// Running sums of batch means, mergeable across replicas.
#[derive(Debug, Clone)]
struct Accum {
    species: usize,
    edges: Vec<(usize, usize)>,
    batches: usize,
    occ_sum: Vec<f64>,
    occ_sq: Vec<f64>,
    pair_sum: Vec<f64>,
    cur_sum: Vec<f64>,
    cur_sq: Vec<f64>,
    crossings: Vec<i64>,
    elapsed: f64,
    sampled: f64,
    events: u64,
    replicas: usize,
    absorbed: bool,
}

impl Accum {
    fn merge(&mut self, o: &Accum) {
        let add = |a: &mut Vec<f64>, b: &Vec<f64>| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.occ_sum, &o.occ_sum);
        add(&mut self.occ_sq, &o.occ_sq);
        add(&mut self.pair_sum, &o.pair_sum);
        add(&mut self.cur_sum, &o.cur_sum);
        add(&mut self.cur_sq, &o.cur_sq);
        self.crossings.iter_mut().zip(&o.crossings).for_each(|(x, y)| *x += y);
        self.batches += o.batches;
        self.elapsed += o.elapsed;
        self.sampled += o.sampled;
        self.events += o.events;
        self.replicas += o.replicas;
        self.absorbed |= o.absorbed;
    }

    fn finish(&self) -> SimStats {
        let k = self.batches as f64;
        let mean_se = |s: f64, q: f64| {
            let m = s / k;
            let var = if self.batches > 1 { ((q - k * m * m) / (k - 1.0)).max(0.0) } else { 0.0 };
            (m, (var / k).sqrt())
        };
        let q = self.species + 1;
        let v = self.occ_sum.len() / q;
        let mut occ = vec![vec![0.0; q]; v];
        let mut se = vec![vec![0.0; q]; v];
        for z in 0..v {
            for a in 0..q {
                let (m, s) = mean_se(self.occ_sum[z * q + a], self.occ_sq[z * q + a]);
                occ[z][a] = m;
                se[z][a] = s;
            }
        }
        let pq = q * q;
        let pair = (0..self.edges.len())
            .map(|e| (0..pq).map(|i| self.pair_sum[e * pq + i] / k).collect())
            .collect();
        let (cur, cur_se): (Vec<f64>, Vec<f64>) =
            (0..self.edges.len()).map(|e| mean_se(self.cur_sum[e], self.cur_sq[e])).unzip();
        SimStats {
            species: self.species,
            edges: self.edges.clone(),
            time_avg_occupation: occ,
            standard_error: se,
            pair_correlation: pair,
            total_crossings: self.crossings.clone(),
            total_current: cur,
            current_standard_error: cur_se,
            elapsed_process_time: self.elapsed,
            sampled_time: self.sampled,
            event_count: self.events,
            replicas: self.replicas,
            absorbed: self.absorbed,
        }
    }
}

/// Binary sum tree over channel rates.
#[derive(Debug, Clone)]
struct SumTree {
    cap: usize,
    t: Vec<f64>,
}

impl SumTree {
    fn new(n: usize) -> Self {
        let cap = n.next_power_of_two().max(1);
        SumTree { cap, t: vec![0.0; 2 * cap] }
    }

    fn set(&mut self, i: usize, v: f64) {
        let mut p = self.cap + i;
        self.t[p] = v;
        while p > 1 {
            p /= 2;
            self.t[p] = self.t[2 * p] + self.t[2 * p + 1];
        }
    }

    fn get(&self, i: usize) -> f64 {
        self.t[self.cap + i]
    }

    fn total(&self) -> f64 {
        self.t[1]
    }

    /// Leaf `i` with `Σ_{j<i} r_j <= u < Σ_{j<=i} r_j`, never a zero-rate leaf.
    fn select(&self, mut u: f64) -> usize {
        let mut p = 1;
        while p < self.cap {
            let (l, r) = (self.t[2 * p], self.t[2 * p + 1]);
            if (u < l && l > 0.0) || r <= 0.0 {
                u = u.min(l);
                p *= 2;
            } else {
                u -= l;
                p = 2 * p + 1;
            }
        }
        p - self.cap
    }
}

/// Outgoing transitions of one state: targets and cumulative rates.
#[derive(Debug, Clone, Default)]
struct Row {
    targets: Vec<usize>,
    cumulative: Vec<f64>,
}

impl Row {
    fn pick(&self, u: f64) -> usize {
        let total = *self.cumulative.last().unwrap_or(&0.0);
        let x = u * total;
        let i = self.cumulative.iter().position(|&c| x < c).unwrap_or(self.cumulative.len() - 1);
        self.targets[i]
    }
}

fn rows_of(rows: &[Vec<f64>]) -> Vec<Row> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = Row::default();
            let mut acc = 0.0;
            for (j, &v) in r.iter().enumerate() {
                if j != i && v > 0.0 {
                    acc += v;
                    row.targets.push(j);
                    row.cumulative.push(acc);
                }
            }
            row
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Fired {
    pub edge: Option<usize>,
    pub sites: [usize; 2],
    pub before: [SpeciesLabel; 2],
    pub after: [SpeciesLabel; 2],
}

/// Mutable simulation state shared by all drivers.
pub(crate) struct Engine<'a> {
    model: &'a ProcessModel,
    pub config: Vec<SpeciesLabel>,
    pub time: f64,
    pub events: u64,
    rng: ChaCha8Rng,
    tree: SumTree,
    bulk_rows: Vec<Row>,
    bulk_exit: Vec<f64>,
    site_rows: Vec<Vec<Row>>,
    site_exit: Vec<Vec<f64>>,
    boundary_sites: Vec<usize>,
    channel_of_site: Vec<Option<usize>>,
    pub incident: Vec<Vec<usize>>,
    audit: bool,
    stride: u64,
}

fn debug_checks() -> bool {
    cfg!(debug_assertions) || std::env::var("UPHILL_DEBUG_CHECKS").map(|v| v == "1").unwrap_or(false)
}

impl<'a> Engine<'a> {
    pub fn new(model: &'a ProcessModel, seed: u64, stream: u64) -> Result<Self> {
        if !model.is_valid() {
            return Err(Error::Domain("model contains a rate matrix that is not a generator".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let bulk = model.bulk.rows();
        let bulk_exit = (0..model.bulk.dim()).map(|i| model.bulk.exit_rate(i)).collect();
        let boundary_sites: Vec<usize> = model.boundary.keys().copied().collect();
        let site_rows = model.boundary.values().map(|w| rows_of(&w.rows())).collect();
        let site_exit = model
            .boundary
            .values()
            .map(|w| (0..w.dim()).map(|a| w.exit_rate(a as SpeciesLabel)).collect())
            .collect();
        let v = model.sites();
        let e = model.graph.edges.len();
        let mut channel_of_site = vec![None; v];
        for (k, &x) in boundary_sites.iter().enumerate() {
            channel_of_site[x] = Some(e + k);
        }
        let mut incident = vec![Vec::new(); v];
        for (i, &(x, y)) in model.graph.edges.iter().enumerate() {
            incident[x].push(i);
            incident[y].push(i);
        }
        Ok(Engine {
            model,
            config: vec![0; v],
            time: 0.0,
            events: 0,
            rng,
            tree: SumTree::new(e + boundary_sites.len()),
            bulk_rows: rows_of(&bulk),
            bulk_exit,
            site_rows,
            site_exit,
            boundary_sites,
            channel_of_site,
            incident,
            audit: debug_checks(),
            stride: 100_000,
        })
    }

    pub fn set_audit_stride(&mut self, stride: u64) {
        self.stride = stride.max(1);
    }

    /// Samples each site independently from `law[site]` (a distribution over `0..=n`).
    pub fn sample_initial(&mut self, law: &[Vec<f64>]) {
        for z in 0..self.config.len() {
            let u: f64 = self.rng.gen();
            let mut acc = 0.0;
            let mut s = law[z].len() - 1;
            for (a, &p) in law[z].iter().enumerate() {
                acc += p;
                if u < acc {
                    s = a;
                    break;
                }
            }
            self.config[z] = s as SpeciesLabel;
        }
    }

    pub fn set_config(&mut self, c: &[SpeciesLabel]) -> Result<()> {
        let n = self.model.species() as SpeciesLabel;
        if c.len() != self.config.len() || c.iter().any(|&a| a > n) {
            return Err(Error::Dimension("initial configuration does not fit the model".into()));
        }
        self.config.copy_from_slice(c);
        Ok(())
    }

    fn pair_state(&self, e: usize) -> usize {
        let (x, y) = self.model.graph.edges[e];
        (self.model.species() + 1) * self.config[x] as usize + self.config[y] as usize
    }

    fn channel_rate(&self, c: usize) -> f64 {
        let ne = self.model.graph.edges.len();
        if c < ne {
            self.model.graph.edge_weights[c] * self.bulk_exit[self.pair_state(c)]
        } else {
            let k = c - ne;
            let x = self.boundary_sites[k];
            self.model.graph.site_weights[x] * self.site_exit[k][self.config[x] as usize]
        }
    }

    pub fn refresh_all(&mut self) {
        for c in 0..self.boundary_sites.len() + self.model.graph.edges.len() {
            let r = self.channel_rate(c);
            self.tree.set(c, r);
        }
    }

    fn refresh_site(&mut self, x: usize) {
        for i in 0..self.incident[x].len() {
            let e = self.incident[x][i];
            let r = self.channel_rate(e);
            self.tree.set(e, r);
        }
        if let Some(c) = self.channel_of_site[x] {
            let r = self.channel_rate(c);
            self.tree.set(c, r);
        }
    }

    /// Time of the next event, or infinity in an absorbing state.
    pub fn propose(&mut self) -> f64 {
        let total = self.tree.total();
        if !(total > 0.0) {
            return f64::INFINITY;
        }
        let u: f64 = 1.0 - self.rng.gen::<f64>();
        self.time - u.ln() / total
    }

    /// Executes one event at time `t`.
    pub fn fire(&mut self, t: f64) -> Fired {
        self.time = t;
        self.events += 1;
        let u1: f64 = self.rng.gen::<f64>() * self.tree.total();
        let u2: f64 = self.rng.gen();
        let c = self.tree.select(u1);
        let ne = self.model.graph.edges.len();
        let k = self.model.species() + 1;
        let fired = if c < ne {
            let (x, y) = self.model.graph.edges[c];
            let from = self.pair_state(c);
            let to = self.bulk_rows[from].pick(u2);
            let before = [self.config[x], self.config[y]];
            self.config[x] = (to / k) as SpeciesLabel;
            self.config[y] = (to % k) as SpeciesLabel;
            Fired { edge: Some(c), sites: [x, y], before, after: [self.config[x], self.config[y]] }
        } else {
            let b = c - ne;
            let x = self.boundary_sites[b];
            let before = self.config[x];
            self.config[x] = self.site_rows[b][before as usize].pick(u2) as SpeciesLabel;
            Fired { edge: None, sites: [x, x], before: [before; 2], after: [self.config[x]; 2] }
        };
        self.refresh_site(fired.sites[0]);
        if fired.sites[1] != fired.sites[0] {
            self.refresh_site(fired.sites[1]);
        }
        if self.audit && self.events % self.stride == 0 {
            self.audit_rates();
        }
        fired
    }

    fn audit_rates(&self) {
        let n = self.boundary_sites.len() + self.model.graph.edges.len();
        let mut total = 0.0;
        for c in 0..n {
            let r = self.channel_rate(c);
            total += r;
            assert!((r - self.tree.get(c)).abs() <= 1e-12 * r.max(1.0), "stale rate on channel {c}");
        }
        assert!(
            (total - self.tree.total()).abs() <= 1e-9 * total.max(1.0),
            "rate total drifted: {} vs {total}",
            self.tree.total()
        );
    }
}

/// Per-site initial law: the mean of the stationary laws of the boundary site
/// generators, or all-empty when the model has no boundary.
pub fn default_initial_law(model: &ProcessModel) -> Vec<Vec<f64>> {
    let q = model.species() + 1;
    let mut law = vec![0.0; q];
    if model.boundary.is_empty() {
        law[0] = 1.0;
    } else {
        for w in model.boundary.values() {
            let pi = site_stationary_law(&w.rows());
            for a in 0..q {
                law[a] += pi[a] / model.boundary.len() as f64;
            }
        }
    }
    vec![law; model.sites()]
}

fn site_stationary_law(rows: &[Vec<f64>]) -> Vec<f64> {
    let q = rows.len();
    // πQ = 0 with Σπ = 1: replace the last equation by normalisation.
    let mut a = nalgebra::DMatrix::from_fn(q, q, |i, j| rows[j][i]);
    let mut b = nalgebra::DVector::zeros(q);
    for j in 0..q {
        a[(q - 1, j)] = 1.0;
    }
    b[q - 1] = 1.0;
    match a.lu().solve(&b) {
        Some(pi) if pi.iter().all(|p| p.is_finite() && *p >= -1e-12) => {
            let s: f64 = pi.iter().map(|p| p.max(0.0)).sum();
            pi.iter().map(|p| p.max(0.0) / s).collect()
        }
        _ => {
            let mut v = vec![0.0; q];
            v[0] = 1.0;
            v
        }
    }
}

fn run_replica(model: &ProcessModel, cfg: &SimConfig, stream: u64) -> Result<Accum> {
    if !(cfg.sample_time > 0.0) || !(cfg.burn_in_time >= 0.0) {
        return Err(Error::Domain("need sample_time > 0 and burn_in_time >= 0".into()));
    }
    if cfg.batches < 2 {
        return Err(Error::Domain("need at least two batches".into()));
    }
    let mut eng = Engine::new(model, cfg.seed, stream)?;
    eng.set_audit_stride(cfg.measurement_stride);
    match &cfg.initial {
        Some(c) => eng.set_config(&c.0)?,
        None => eng.sample_initial(&default_initial_law(model)),
    }
    eng.refresh_all();

    let v = model.sites();
    let q = model.species() + 1;
    let edges = &model.graph.edges;
    let ne = edges.len();
    let nb = cfg.batches;
    let t0 = cfg.burn_in_time;
    let width = cfg.sample_time / nb as f64;
    let t_end = t0 + cfg.sample_time;

    let mut occ = vec![0.0; v * q];
    let mut pair = vec![0.0; ne * q * q];
    let mut cross = vec![0i64; ne];
    let mut last_site = vec![t0; v];
    let mut last_edge = vec![t0; ne];
    let mut acc = Accum {
        species: model.species(),
        edges: edges.clone(),
        batches: nb,
        occ_sum: vec![0.0; v * q],
        occ_sq: vec![0.0; v * q],
        pair_sum: vec![0.0; ne * q * q],
        cur_sum: vec![0.0; ne],
        cur_sq: vec![0.0; ne],
        crossings: vec![0; ne],
        elapsed: t_end,
        sampled: cfg.sample_time,
        events: 0,
        replicas: 1,
        absorbed: false,
    };

    let flush_site = |occ: &mut [f64], last: &mut [f64], config: &[SpeciesLabel], z: usize, t: f64| {
        if t > last[z] {
            occ[z * q + config[z] as usize] += t - last[z];
            last[z] = t;
        }
    };
    let flush_edge = |pair: &mut [f64], last: &mut [f64], config: &[SpeciesLabel], e: usize, t: f64| {
        if t > last[e] {
            let (x, y) = edges[e];
            pair[e * q * q + q * config[x] as usize + config[y] as usize] += t - last[e];
            last[e] = t;
        }
    };

    let mut batch = 0;
    loop {
        let t_next = eng.propose();
        while batch < nb && t0 + (batch + 1) as f64 * width <= t_next {
            let tb = if batch + 1 == nb { t_end } else { t0 + (batch + 1) as f64 * width };
            for z in 0..v {
                flush_site(&mut occ, &mut last_site, &eng.config, z, tb);
            }
            for e in 0..ne {
                flush_edge(&mut pair, &mut last_edge, &eng.config, e, tb);
            }
            for (i, o) in occ.iter_mut().enumerate() {
                let m = *o / width;
                acc.occ_sum[i] += m;
                acc.occ_sq[i] += m * m;
                *o = 0.0;
            }
            for (i, p) in pair.iter_mut().enumerate() {
                acc.pair_sum[i] += *p / width;
                *p = 0.0;
            }
            for e in 0..ne {
                let c = cross[e] as f64 / width;
                acc.cur_sum[e] += c;
                acc.cur_sq[e] += c * c;
                acc.crossings[e] += cross[e];
                cross[e] = 0;
            }
            batch += 1;
        }
        if batch == nb || t_next >= t_end {
            acc.absorbed = t_next.is_infinite();
            break;
        }
        let fired = eng.fire(t_next);
        // Close the holding intervals of the changed sites and their bonds,
        // crediting them to the pre-event states.
        if t_next > t0 {
            for (k, &z) in fired.sites.iter().enumerate() {
                if k == 1 && fired.sites[1] == fired.sites[0] {
                    break;
                }
                if t_next > last_site[z] {
                    occ[z * q + fired.before[k] as usize] += t_next - last_site[z];
                    last_site[z] = t_next;
                }
                for &e in &eng.incident[z] {
                    if t_next > last_edge[e] {
                        let (x, y) = edges[e];
                        let sx = if x == fired.sites[0] { fired.before[0] } else if x == fired.sites[1] { fired.before[1] } else { eng.config[x] };
                        let sy = if y == fired.sites[0] { fired.before[0] } else if y == fired.sites[1] { fired.before[1] } else { eng.config[y] };
                        pair[e * q * q + q * sx as usize + sy as usize] += t_next - last_edge[e];
                        last_edge[e] = t_next;
                    }
                }
            }
            if let Some(e) = fired.edge {
                let occ_b = [fired.before[0] != 0, fired.before[1] != 0];
                let occ_a = [fired.after[0] != 0, fired.after[1] != 0];
                let conserved = occ_b[0] as i32 + occ_b[1] as i32 == occ_a[0] as i32 + occ_a[1] as i32;
                if conserved {
                    cross[e] += occ_b[0] as i64 - occ_a[0] as i64;
                }
            }
        }
    }
    acc.events = eng.events;
    Ok(acc)
}

/// A single trajectory.
pub fn run(model: &ProcessModel, cfg: &SimConfig) -> Result<SimStats> {
    Ok(run_replica(model, cfg, 0)?.finish())
}

fn thread_limit() -> Option<usize> {
    std::env::var("UPHILL_THREADS").ok().and_then(|v| v.parse().ok()).filter(|&n| n > 0)
}

/// Runs `f` on a pool honouring `UPHILL_THREADS`, or the global pool otherwise.
pub fn with_thread_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match thread_limit().and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Independent replicas (streams `0..replicas`) merged in index order: the
/// result does not depend on the number of threads.
pub fn run_ensemble(model: &ProcessModel, cfg: &SimConfig) -> Result<SimStats> {
    let r = cfg.replicas.max(1);
    let parts: Vec<Result<Accum>> =
        with_thread_pool(|| (0..r).into_par_iter().map(|i| run_replica(model, cfg, i as u64)).collect());
    let mut it = parts.into_iter();
    let mut acc = it.next().expect("at least one replica")?;
    for p in it {
        acc.merge(&p?);
    }
    Ok(acc.finish())
}

/// Configurations of one trajectory at the given increasing times.
pub fn simulate_snapshots(
    model: &ProcessModel,
    initial: &Configuration,
    seed: u64,
    stream: u64,
    times: &[f64],
) -> Result<Vec<Configuration>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("snapshot times must be increasing".into()));
    }
    let mut eng = Engine::new(model, seed, stream)?;
    eng.set_config(&initial.0)?;
    eng.refresh_all();
    let mut out = Vec::with_capacity(times.len());
    let mut next = 0;
    while next < times.len() {
        let t = eng.propose();
        while next < times.len() && times[next] < t {
            out.push(Configuration(eng.config.clone()));
            next += 1;
        }
        if next < times.len() {
            eng.fire(t);
        }
    }
    Ok(out)
}

/// Fick currents `J^α = -σ_{α1} Δμ^1 - σ_{α2} Δμ^2` across each bond `(z, z+1)`,
/// from occupations indexed `[site][α]` with `α = 0` the empty state.
pub fn fick_current(occupation: &[Vec<f64>], sigma: [[f64; 2]; 2]) -> Vec<[f64; 2]> {
    occupation
        .windows(2)
        .map(|w| {
            let d1 = w[1][1] - w[0][1];
            let d2 = w[1][2] - w[0][2];
            [-sigma[0][0] * d1 - sigma[0][1] * d2, -sigma[1][0] * d1 - sigma[1][1] * d2]
        })
        .collect()
}

/// `site,species,mean,stderr` rows, one per site and species label `0..=n`.
pub fn sites_csv(s: &SimStats) -> String {
    let mut out = String::from("site,species,mean,stderr\n");
    for (z, (m, e)) in s.time_avg_occupation.iter().zip(&s.standard_error).enumerate() {
        for a in 0..m.len() {
            out.push_str(&format!("{z},{a},{},{}\n", m[a], e[a]));
        }
    }
    out
}

/// `bond,total_current,stderr` rows; bond `i` is the `i`-th edge.
pub fn bonds_csv(s: &SimStats) -> String {
    let mut out = String::from("bond,total_current,stderr\n");
    for (i, (c, e)) in s.total_current.iter().zip(&s.current_standard_error).enumerate() {
        out.push_str(&format!("{i},{c},{e}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EdgeRateMatrix, Graph};

    fn stirring_pair() -> ProcessModel {
        let t = [((1, 0), (0, 1), 1.0), ((0, 1), (1, 0), 1.0)];
        ProcessModel::new(Graph::chain(2).unwrap(), EdgeRateMatrix::from_transitions(2, &t).unwrap(), vec![])
            .unwrap()
    }

    #[test]
    fn sum_tree_selects_proportionally() {
        let mut t = SumTree::new(5);
        for (i, r) in [1.0, 0.0, 2.0, 0.0, 1.0].iter().enumerate() {
            t.set(i, *r);
        }
        assert_eq!(t.total(), 4.0);
        assert_eq!(t.select(0.5), 0);
        assert_eq!(t.select(1.0), 2);
        assert_eq!(t.select(2.9), 2);
        assert_eq!(t.select(3.5), 4);
        assert_eq!(t.select(4.0), 4);
    }

    #[test]
    fn absorbing_model_keeps_initial_state() {
        let m = ProcessModel::new(Graph::chain(3).unwrap(), EdgeRateMatrix::zero(2), vec![]).unwrap();
        let cfg = SimConfig {
            initial: Some(Configuration(vec![1, 0, 2])),
            burn_in_time: 1.0,
            sample_time: 10.0,
            ..Default::default()
        };
        let s = run(&m, &cfg).unwrap();
        assert!(s.absorbed);
        assert_eq!(s.event_count, 0);
        assert_eq!(s.time_avg_occupation, vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]);
    }

    #[test]
    fn stirring_pair_equilibrates() {
        let cfg = SimConfig {
            initial: Some(Configuration(vec![1, 0])),
            burn_in_time: 10.0,
            sample_time: 20_000.0,
            ..Default::default()
        };
        let s = run(&stirring_pair(), &cfg).unwrap();
        for z in 0..2 {
            assert!((s.time_avg_occupation[z][1] - 0.5).abs() < 0.02);
            let total: f64 = s.time_avg_occupation[z].iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
        assert!(s.total_crossings[0].abs() <= 1);
    }

    #[test]
    fn single_replica_ensemble_equals_run() {
        let cfg = SimConfig {
            initial: Some(Configuration(vec![1, 0])),
            sample_time: 500.0,
            seed: 7,
            ..Default::default()
        };
        let a = run(&stirring_pair(), &cfg).unwrap();
        let b = run_ensemble(&stirring_pair(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn snapshots_at_time_zero_return_initial() {
        let init = Configuration(vec![1, 0]);
        let s = simulate_snapshots(&stirring_pair(), &init, 1, 0, &[0.0]).unwrap();
        assert_eq!(s[0], init);
    }

    #[test]
    fn fick_current_signs() {
        let occ = vec![vec![0.5, 0.4, 0.1], vec![0.6, 0.2, 0.2]];
        let j = fick_current(&occ, [[1.0, 0.5], [0.5, 1.0]]);
        assert!((j[0][0] - (0.2 - 0.05)).abs() < 1e-15);
        assert!((j[0][1] - (0.1 - 0.1)).abs() < 1e-15);
    }
}
