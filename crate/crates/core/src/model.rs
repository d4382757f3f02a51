//! Graphs, species labels, rate matrices and configurations.
//!
//! Pair states `(α, β)` of an edge are indexed row-major in base `n + 1`, so for
//! two species the order is `00, 01, 02, 10, 11, 12, 20, 21, 22`. Rate matrices
//! have rows indexed by the state before the transition and columns by the state
//! after it. Diagonal entries are never stored independently: they are always
//! recomputed as minus the sum of the off-diagonal entries of their row.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, TOL};

/// Species label: `0` is the empty site, `1..=n` are particle species.
pub type SpeciesLabel = u8;

/// Index of the pair state `(alpha, beta)` for `n` species.
pub fn pair_index(alpha: SpeciesLabel, beta: SpeciesLabel, n: usize) -> Result<usize> {
    if alpha as usize > n || beta as usize > n {
        return Err(Error::Domain(format!(
            "pair ({alpha},{beta}) outside species range 0..={n}"
        )));
    }
    Ok((n + 1) * alpha as usize + beta as usize)
}

/// Inverse of [`pair_index`].
pub fn pair_from_index(index: usize, n: usize) -> (SpeciesLabel, SpeciesLabel) {
    ((index / (n + 1)) as SpeciesLabel, (index % (n + 1)) as SpeciesLabel)
}

/// Exchange of the two particle species; the empty label is fixed.
pub fn mutation_map(alpha: SpeciesLabel) -> SpeciesLabel {
    match alpha {
        1 => 2,
        2 => 1,
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize)>,
    pub edge_weights: Vec<f64>,
    pub site_weights: Vec<f64>,
}

impl Graph {
    pub fn new(
        vertex_count: usize,
        edges: Vec<(usize, usize)>,
        edge_weights: Vec<f64>,
        site_weights: Vec<f64>,
    ) -> Result<Self> {
        let g = Graph { vertex_count, edges, edge_weights, site_weights };
        g.check()?;
        Ok(g)
    }

    /// Open chain `0 - 1 - ... - (n-1)`: unit bonds and unit weight on the two
    /// end sites, zero elsewhere.
    pub fn chain(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("chain needs at least 2 sites, got {n}")));
        }
        let edges = (0..n - 1).map(|z| (z, z + 1)).collect();
        let mut site_weights = vec![0.0; n];
        site_weights[0] = 1.0;
        site_weights[n - 1] = 1.0;
        Graph::new(n, edges, vec![1.0; n - 1], site_weights)
    }

    fn check(&self) -> Result<()> {
        let n = self.vertex_count;
        if n == 0 {
            return Err(Error::Domain("graph has no vertices".into()));
        }
        if self.edge_weights.len() != self.edges.len() || self.site_weights.len() != n {
            return Err(Error::Dimension("graph weight vectors do not match".into()));
        }
        for &(x, y) in &self.edges {
            if x == y || x >= n || y >= n {
                return Err(Error::Domain(format!("bad edge ({x},{y})")));
            }
        }
        if self.edge_weights.iter().chain(&self.site_weights).any(|w| !(*w >= 0.0)) {
            return Err(Error::Domain("weights must be non-negative".into()));
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(x, y) in &self.edges {
                for (a, b) in [(x, y), (y, x)] {
                    if a == v && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Domain("graph is not connected".into()));
        }
        Ok(())
    }

    /// True for the chain produced by [`Graph::chain`] up to weights.
    pub fn is_chain(&self) -> bool {
        self.vertex_count >= 2
            && self.edges.len() == self.vertex_count - 1
            && self.edges.iter().enumerate().all(|(z, &e)| e == (z, z + 1))
    }
}

/// Result of checking a candidate generator matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub valid: bool,
    /// `(row, column, value)` of every off-diagonal entry below `-TOL`.
    pub negative_entries: Vec<(usize, usize, f64)>,
    /// `(row, sum)` of every row whose sum differs from zero by more than `TOL`.
    pub bad_rows: Vec<(usize, f64)>,
}

/// Checks that `rows` is a square matrix with non-negative off-diagonal entries
/// and zero row sums.
pub fn check_generator_matrix(rows: &[Vec<f64>]) -> Result<ValidityReport> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Dimension("generator matrix is not square".into()));
    }
    let mut negative_entries = Vec::new();
    let mut bad_rows = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if i != j && !(v >= -TOL) {
                negative_entries.push((i, j, v));
            }
        }
        let s: f64 = row.iter().sum();
        if !(s.abs() <= TOL) {
            bad_rows.push((i, s));
        }
    }
    Ok(ValidityReport {
        valid: negative_entries.is_empty() && bad_rows.is_empty(),
        negative_entries,
        bad_rows,
    })
}

fn square_from_rows(rows: &[Vec<f64>], dim: usize) -> Result<Vec<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Dimension(format!("expected a {dim}x{dim} matrix")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain("rate matrix entries must be finite".into()));
    }
    let mut m: Vec<f64> = rows.iter().flatten().copied().collect();
    fix_diagonal(&mut m, dim);
    Ok(m)
}

fn fix_diagonal(m: &mut [f64], dim: usize) {
    for i in 0..dim {
        m[i * dim + i] = 0.0;
        let s: f64 = m[i * dim..(i + 1) * dim].iter().sum();
        m[i * dim + i] = -s;
    }
}

fn to_rows(m: &[f64], dim: usize) -> Vec<Vec<f64>> {
    m.chunks(dim).map(|c| c.to_vec()).collect()
}

/// Generator of a pair of neighbouring sites, `(n+1)² × (n+1)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EdgeMatrixDoc", into = "EdgeMatrixDoc")]
pub struct EdgeRateMatrix {
    n: usize,
    m: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct EdgeMatrixDoc {
    n: usize,
    pair_order: String,
    entries: Vec<Vec<f64>>,
}

impl TryFrom<EdgeMatrixDoc> for EdgeRateMatrix {
    type Error = Error;
    fn try_from(doc: EdgeMatrixDoc) -> Result<Self> {
        if doc.pair_order != "row-major base-3" && doc.n == 2 {
            return Err(Error::Domain(format!("unsupported pair_order {:?}", doc.pair_order)));
        }
        EdgeRateMatrix::from_rows(doc.n, &doc.entries)
    }
}

impl From<EdgeRateMatrix> for EdgeMatrixDoc {
    fn from(m: EdgeRateMatrix) -> Self {
        EdgeMatrixDoc {
            n: m.n,
            pair_order: format!("row-major base-{}", m.n + 1),
            entries: m.rows(),
        }
    }
}

impl EdgeRateMatrix {
    /// Builds from full rows; the supplied diagonal is ignored and recomputed.
    pub fn from_rows(n: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = (n + 1) * (n + 1);
        Ok(EdgeRateMatrix { n, m: square_from_rows(rows, dim)? })
    }

    pub fn zero(n: usize) -> Self {
        let dim = (n + 1) * (n + 1);
        EdgeRateMatrix { n, m: vec![0.0; dim * dim] }
    }

    /// Builds from a list of `((γ, δ), (α, β), rate)` off-diagonal transitions.
    pub fn from_transitions(
        n: usize,
        transitions: &[((SpeciesLabel, SpeciesLabel), (SpeciesLabel, SpeciesLabel), f64)],
    ) -> Result<Self> {
        let mut out = EdgeRateMatrix::zero(n);
        for &((g, d), (a, b), r) in transitions {
            let i = pair_index(g, d, n)?;
            let j = pair_index(a, b, n)?;
            if i == j {
                return Err(Error::Domain("diagonal transition supplied".into()));
            }
            let dim = out.dim();
            out.m[i * dim + j] = r;
        }
        let dim = out.dim();
        fix_diagonal(&mut out.m, dim);
        Ok(out)
    }

    pub fn species(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    /// Rate `Γ_{γδ}^{αβ}` of `(γ, δ) → (α, β)`; on the diagonal this is minus the exit rate.
    pub fn rate(&self, from: (SpeciesLabel, SpeciesLabel), to: (SpeciesLabel, SpeciesLabel)) -> f64 {
        let k = self.n + 1;
        let i = k * from.0 as usize + from.1 as usize;
        let j = k * to.0 as usize + to.1 as usize;
        self.m[i * self.dim() + j]
    }

    /// Entry by pair indices.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i * self.dim() + j]
    }

    /// Sets an off-diagonal entry and recomputes the diagonal of its row.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i != j, "diagonal entries are derived");
        let dim = self.dim();
        self.m[i * dim + j] = value;
        self.m[i * dim + i] = 0.0;
        let s: f64 = self.m[i * dim..(i + 1) * dim].iter().sum();
        self.m[i * dim + i] = -s;
    }

    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.m[i * self.dim() + i]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        to_rows(&self.m, self.dim())
    }

    pub fn check(&self) -> ValidityReport {
        check_generator_matrix(&self.rows()).expect("square by construction")
    }
}

/// Generator of a single (boundary) site, `(n+1) × (n+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SiteMatrixDoc", into = "SiteMatrixDoc")]
pub struct SiteRateMatrix {
    n: usize,
    pub vertex: usize,
    m: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SiteMatrixDoc {
    n: usize,
    vertex: usize,
    entries: Vec<Vec<f64>>,
}

impl TryFrom<SiteMatrixDoc> for SiteRateMatrix {
    type Error = Error;
    fn try_from(doc: SiteMatrixDoc) -> Result<Self> {
        SiteRateMatrix::from_rows(doc.n, doc.vertex, &doc.entries)
    }
}

impl From<SiteRateMatrix> for SiteMatrixDoc {
    fn from(m: SiteRateMatrix) -> Self {
        SiteMatrixDoc { n: m.n, vertex: m.vertex, entries: m.rows() }
    }
}

impl SiteRateMatrix {
    pub fn from_rows(n: usize, vertex: usize, rows: &[Vec<f64>]) -> Result<Self> {
        Ok(SiteRateMatrix { n, vertex, m: square_from_rows(rows, n + 1)? })
    }

    pub fn species(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// Rate `W_γ^α` of `γ → α`.
    pub fn rate(&self, from: SpeciesLabel, to: SpeciesLabel) -> f64 {
        self.m[from as usize * self.dim() + to as usize]
    }

    pub fn exit_rate(&self, from: SpeciesLabel) -> f64 {
        -self.rate(from, from)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        to_rows(&self.m, self.dim())
    }

    pub fn check(&self) -> ValidityReport {
        check_generator_matrix(&self.rows()).expect("square by construction")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(pub Vec<SpeciesLabel>);

impl Configuration {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Replaces the states at the endpoints of `edge` by `target`.
pub fn apply_edge_event(
    config: &Configuration,
    edge: (usize, usize),
    target: (SpeciesLabel, SpeciesLabel),
) -> Result<Configuration> {
    let (x, y) = edge;
    if x >= config.len() || y >= config.len() || x == y {
        return Err(Error::Domain(format!("edge ({x},{y}) not in configuration")));
    }
    let mut out = config.clone();
    out.0[x] = target.0;
    out.0[y] = target.1;
    Ok(out)
}

/// Replaces the state at site `x` by `target`.
pub fn apply_site_event(config: &Configuration, x: usize, target: SpeciesLabel) -> Result<Configuration> {
    if x >= config.len() {
        return Err(Error::Domain(format!("site {x} not in configuration")));
    }
    let mut out = config.clone();
    out.0[x] = target;
    Ok(out)
}

/// A complete process: graph, one bulk generator shared by all edges and
/// boundary generators attached to individual vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessModel {
    pub graph: Graph,
    pub bulk: EdgeRateMatrix,
    pub boundary: BTreeMap<usize, SiteRateMatrix>,
}

impl ProcessModel {
    pub fn new(graph: Graph, bulk: EdgeRateMatrix, boundary: Vec<SiteRateMatrix>) -> Result<Self> {
        let n = bulk.species();
        let mut map = BTreeMap::new();
        for b in boundary {
            if b.species() != n {
                return Err(Error::Dimension("boundary and bulk species counts differ".into()));
            }
            if b.vertex >= graph.vertex_count {
                return Err(Error::Domain(format!("boundary vertex {} out of range", b.vertex)));
            }
            if map.insert(b.vertex, b).is_some() {
                return Err(Error::Domain("duplicate boundary vertex".into()));
            }
        }
        Ok(ProcessModel { graph, bulk, boundary: map })
    }

    pub fn species(&self) -> usize {
        self.bulk.species()
    }

    pub fn sites(&self) -> usize {
        self.graph.vertex_count
    }

    /// True when every rate matrix passes [`check_generator_matrix`].
    pub fn is_valid(&self) -> bool {
        self.bulk.check().valid && self.boundary.values().all(|b| b.check().valid)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: ProcessModel = serde_json::from_str(s)?;
        m.graph.check()?;
        let boundary = m.boundary.into_values().collect();
        ProcessModel::new(m.graph, m.bulk, boundary)
    }
}
