//! The trace method on random `d`-regular graphs: exact walk counts, spectra,
//! the trace bound `|Tr(A^ℓ) − d^ℓ| ≤ n λ₊^ℓ` and Ramanujan-type fits of
//! non-backtracking loop counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_bigint::BigUint;
use num_traits::{CheckedAdd, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_REJECTION_BUDGET: usize = 100_000;
/// Eigenvalues closer than this are treated as equal.
pub const SPECTRAL_TOL: f64 = 1e-9;
pub const MAX_CONDITION: f64 = 1e12;
/// Largest growth of the normalized residual under doubling of the fitted
/// range that is still called bounded.
pub const RESIDUAL_GROWTH_LIMIT: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("n·d must be even and d < n (n = {n}, d = {d})")]
    BadParameters { n: usize, d: usize },
    #[error("no simple graph after {0} pairings")]
    RejectionBudget(usize),
    #[error("vertex {vertex} has degree {degree}, expected {d}")]
    NotRegular { vertex: usize, degree: usize, d: usize },
    #[error("edge {0}-{1} is a loop, repeated or out of range")]
    BadEdge(usize, usize),
    #[error("walk length must be at least {min}, got {got}")]
    BadLength { min: usize, got: usize },
    #[error("need at least {need} lengths for a degree {degree} fit, got {got}")]
    TooFewPoints { need: usize, got: usize, degree: usize },
    #[error("least-squares system has condition number {0:e}")]
    IllConditioned(f64),
    #[error("trials must be positive")]
    NoTrials,
    #[error("cannot parse edge list line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegularGraph {
    pub n: usize,
    pub d: usize,
    /// Sorted neighbour lists.
    pub adj: Vec<Vec<usize>>,
}

impl RegularGraph {
    pub fn from_edges(n: usize, d: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == v || u >= n || v >= n {
                return Err(GraphError::BadEdge(u, v));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for (vertex, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                let dup = list.windows(2).find(|w| w[0] == w[1]).map(|w| w[0]).unwrap_or(0);
                return Err(GraphError::BadEdge(vertex, dup));
            }
            if list.len() != d {
                return Err(GraphError::NotRegular {
                    vertex,
                    degree: list.len(),
                    d,
                });
            }
        }
        Ok(Self { n, d, adj })
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Self::from_edges(n, n - 1, &edges).expect("complete graph is regular")
    }

    pub fn cycle(n: usize) -> Self {
        let edges: Vec<_> = (0..n).map(|u| (u, (u + 1) % n)).collect();
        Self::from_edges(n, 2, &edges).expect("cycle is 2-regular")
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.n * self.d / 2);
        for (u, list) in self.adj.iter().enumerate() {
            out.extend(list.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for (u, list) in self.adj.iter().enumerate() {
            for &v in list {
                a[(u, v)] = 1.0;
            }
        }
        a
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    /// Two-colouring test.
    pub fn is_bipartite(&self) -> bool {
        let mut colour = vec![u8::MAX; self.n];
        for s in 0..self.n {
            if colour[s] != u8::MAX {
                continue;
            }
            colour[s] = 0;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &v in &self.adj[u] {
                    if colour[v] == u8::MAX {
                        colour[v] = 1 - colour[u];
                        stack.push(v);
                    } else if colour[v] == colour[u] {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// First line `n d`, then one `u v` per edge with `u < v`.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.d);
        for (u, v) in self.edges() {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let parse_pair = |line: usize, l: &str| -> Result<(usize, usize), GraphError> {
            let mut it = l.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
                _ => Err(GraphError::Parse {
                    line,
                    message: format!("expected two integers, got {l:?}"),
                }),
            }
        };
        let (line, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let (n, d) = parse_pair(line, header)?;
        let edges = lines.map(|(i, l)| parse_pair(i, l)).collect::<Result<Vec<_>, _>>()?;
        Self::from_edges(n, d, &edges)
    }
}

/// Pairing model: `n·d` half-edges matched by a uniform shuffle, redrawn
/// until the result has no loops and no repeated edges.
pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<RegularGraph, GraphError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_regular_with(n, d, &mut rng, DEFAULT_REJECTION_BUDGET)
}

pub fn random_regular_with(
    n: usize,
    d: usize,
    rng: &mut ChaCha8Rng,
    budget: usize,
) -> Result<RegularGraph, GraphError> {
    if d >= n || (n * d) % 2 == 1 {
        return Err(GraphError::BadParameters { n, d });
    }
    let mut points: Vec<usize> = (0..n * d).map(|p| p / d).collect();
    'attempt: for _ in 0..budget {
        points.shuffle(rng);
        let mut adj = vec![Vec::with_capacity(d); n];
        for pair in points.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v || adj[u].contains(&v) {
                continue 'attempt;
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        return Ok(RegularGraph { n, d, adj });
    }
    Err(GraphError::RejectionBudget(budget))
}

/// Counts for `ℓ = 0..=l_max` of closed walks starting at each vertex,
/// summed; `None` on overflow of `T`.
fn closed_walks_generic<T: Count>(g: &RegularGraph, l_max: usize) -> Option<Vec<T>> {
    let per_vertex: Option<Vec<Vec<T>>> = (0..g.n)
        .into_par_iter()
        .map(|u| {
            let mut cur = vec![T::zero(); g.n];
            cur[u] = T::one_like();
            let mut out = Vec::with_capacity(l_max + 1);
            out.push(cur[u].clone());
            for _ in 0..l_max {
                let mut next = vec![T::zero(); g.n];
                for (v, c) in cur.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    for &w in &g.adj[v] {
                        next[w] = next[w].checked_add(c)?;
                    }
                }
                cur = next;
                out.push(cur[u].clone());
            }
            Some(out)
        })
        .collect();
    let per_vertex = per_vertex?;
    let mut total = vec![T::zero(); l_max + 1];
    for row in per_vertex {
        for (t, c) in total.iter_mut().zip(row) {
            *t = t.checked_add(&c)?;
        }
    }
    Some(total)
}

/// `1` for the counting types without requiring `num_traits::One`'s `Mul`.
trait OneLike {
    fn one_like() -> Self;
}

impl OneLike for u128 {
    fn one_like() -> Self {
        1
    }
}

impl OneLike for BigUint {
    fn one_like() -> Self {
        BigUint::from(1u8)
    }
}

trait Count: Clone + Zero + CheckedAdd + Send + Sync + OneLike {}
impl<T: Clone + Zero + CheckedAdd + Send + Sync + OneLike> Count for T {}

fn widen(v: Vec<u128>) -> Vec<BigUint> {
    v.into_iter().map(BigUint::from).collect()
}

/// `Tr(A^ℓ)` for `ℓ = 0..=l_max`, exact.
pub fn closed_walk_counts(g: &RegularGraph, l_max: usize) -> Vec<BigUint> {
    match closed_walks_generic::<u128>(g, l_max) {
        Some(v) => widen(v),
        None => {
            log::debug!("closed walk counts overflow u128, switching to big integers");
            closed_walks_generic::<BigUint>(g, l_max).expect("big integers do not overflow")
        }
    }
}

pub fn closed_walk_count(g: &RegularGraph, ell: usize) -> Result<BigUint, GraphError> {
    if ell < 1 {
        return Err(GraphError::BadLength { min: 1, got: ell });
    }
    Ok(closed_walk_counts(g, ell).pop().expect("non-empty"))
}

/// How the last step of a closed non-backtracking walk meets the first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Closure {
    /// The closing step must not backtrack onto the first one: `Tr(B^ℓ)`
    /// for the non-backtracking edge operator `B`.
    #[default]
    Cyclic,
    /// Only consecutive steps along the walk are constrained.
    Path,
}

/// Directed edges `u → adj[u][i]` are numbered `offset[u] + i`.
struct DirectedEdges {
    offset: Vec<usize>,
    head: Vec<usize>,
    tail: Vec<usize>,
}

impl DirectedEdges {
    fn new(g: &RegularGraph) -> Self {
        let mut offset = Vec::with_capacity(g.n + 1);
        let mut head = Vec::new();
        let mut tail = Vec::new();
        for (u, list) in g.adj.iter().enumerate() {
            offset.push(head.len());
            for &v in list {
                tail.push(u);
                head.push(v);
            }
        }
        offset.push(head.len());
        Self { offset, head, tail }
    }

    fn count(&self) -> usize {
        self.head.len()
    }

    fn out(&self, v: usize) -> std::ops::Range<usize> {
        self.offset[v]..self.offset[v + 1]
    }
}

/// Both closures for `ℓ = 0..=l_max`, by a frontier transfer from every
/// starting directed edge: the frontier holds walk counts per last edge.
fn irreducible_generic<T: Count>(g: &RegularGraph, l_max: usize) -> Option<(Vec<T>, Vec<T>)> {
    let de = DirectedEdges::new(g);
    let m = de.count();
    let per_start: Option<Vec<(Vec<T>, Vec<T>)>> = (0..m)
        .into_par_iter()
        .map(|e0| {
            let (u, v) = (de.tail[e0], de.head[e0]);
            let mut cyc = vec![T::zero(); l_max + 1];
            let mut path = vec![T::zero(); l_max + 1];
            let mut counts = vec![T::zero(); m];
            let mut frontier = vec![e0];
            counts[e0] = T::one_like();
            let mut next_counts = vec![T::zero(); m];
            for len in 1..=l_max {
                for &e in &frontier {
                    if de.head[e] == u {
                        path[len] = path[len].checked_add(&counts[e])?;
                        if de.tail[e] != v {
                            cyc[len] = cyc[len].checked_add(&counts[e])?;
                        }
                    }
                }
                if len == l_max {
                    break;
                }
                let mut next_frontier = Vec::new();
                for &e in &frontier {
                    let (x, y) = (de.tail[e], de.head[e]);
                    for f in de.out(y) {
                        if de.head[f] == x {
                            continue;
                        }
                        if next_counts[f].is_zero() {
                            next_frontier.push(f);
                        }
                        next_counts[f] = next_counts[f].checked_add(&counts[e])?;
                    }
                }
                for &e in &frontier {
                    counts[e] = T::zero();
                }
                std::mem::swap(&mut counts, &mut next_counts);
                frontier = next_frontier;
            }
            Some((cyc, path))
        })
        .collect();
    let mut cyc = vec![T::zero(); l_max + 1];
    let mut path = vec![T::zero(); l_max + 1];
    for (c, p) in per_start? {
        for i in 0..=l_max {
            cyc[i] = cyc[i].checked_add(&c[i])?;
            path[i] = path[i].checked_add(&p[i])?;
        }
    }
    Some((cyc, path))
}

/// Closed non-backtracking walks of length `ℓ = 0..=l_max`, summed over all
/// base points and directions.
pub fn irreducible_loop_counts(g: &RegularGraph, l_max: usize, closure: Closure) -> Vec<BigUint> {
    let (cyc, path) = match irreducible_generic::<u128>(g, l_max) {
        Some((c, p)) => (widen(c), widen(p)),
        None => irreducible_generic::<BigUint>(g, l_max).expect("big integers do not overflow"),
    };
    match closure {
        Closure::Cyclic => cyc,
        Closure::Path => path,
    }
}

pub fn irreducible_loop_count(g: &RegularGraph, ell: usize, closure: Closure) -> Result<BigUint, GraphError> {
    if ell < 2 {
        return Err(GraphError::BadLength { min: 2, got: ell });
    }
    Ok(irreducible_loop_counts(g, ell, closure).pop().expect("non-empty"))
}

/// Exhaustive depth-first enumeration of closed walks as vertex sequences.
/// `None` counts all closed walks. Exponential; meant for `n ≤ 12, ℓ ≤ 8`.
pub fn enumerate_closed_walks(g: &RegularGraph, ell: usize, non_backtracking: Option<Closure>) -> u64 {
    fn dfs(g: &RegularGraph, walk: &mut Vec<usize>, ell: usize, nb: Option<Closure>) -> u64 {
        let last = *walk.last().expect("non-empty walk");
        if walk.len() == ell + 1 {
            if last != walk[0] {
                return 0;
            }
            if nb == Some(Closure::Cyclic) && ell >= 2 && walk[1] == walk[ell - 1] {
                return 0;
            }
            return 1;
        }
        let mut total = 0;
        for &w in &g.adj[last] {
            if nb.is_some() && walk.len() >= 2 && w == walk[walk.len() - 2] {
                continue;
            }
            walk.push(w);
            total += dfs(g, walk, ell, nb);
            walk.pop();
        }
        total
    }
    (0..g.n)
        .map(|v| {
            let mut walk = vec![v];
            dfs(g, &mut walk, ell, non_backtracking)
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub n: usize,
    pub d: usize,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub lambda_2: f64,
    pub lambda_n: f64,
    pub lambda_plus: f64,
    pub connected: bool,
    pub bipartite: bool,
    /// `λ_n = −d` within `SPECTRAL_TOL`.
    pub bipartite_spectral: bool,
}

pub fn spectrum(g: &RegularGraph) -> SpectrumReport {
    let eig = SymmetricEigen::new(g.adjacency_matrix());
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    let lambda_2 = ev.get(1).copied().unwrap_or(f64::NAN);
    let lambda_n = *ev.last().expect("non-empty graph");
    let d = g.d as f64;
    SpectrumReport {
        n: g.n,
        d: g.d,
        lambda_2,
        lambda_n,
        lambda_plus: lambda_2.max(-lambda_n),
        connected: g.is_connected(),
        bipartite: g.is_bipartite(),
        bipartite_spectral: (lambda_n + d).abs() <= SPECTRAL_TOL * d.max(1.0),
        eigenvalues: ev,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub ell: usize,
    /// Exact, as a decimal string.
    pub trace: String,
    pub deviation: f64,
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub d: usize,
    pub lambda_plus: f64,
    /// The bound is trivial on bipartite or disconnected graphs, where
    /// `λ₊ = d`; such inputs are flagged, not rejected.
    pub bipartite: bool,
    pub connected: bool,
    pub rows: Vec<BoundRow>,
    pub holds: bool,
}

fn big_to_f64(v: &BigUint) -> f64 {
    v.to_f64().unwrap_or(f64::INFINITY)
}

/// `|Tr(A^ℓ) − d^ℓ| ≤ n λ₊^ℓ` for `ℓ = 1..=l_max`. The left side is exact;
/// the comparison allows a relative `SPECTRAL_TOL` on the right.
pub fn spectral_bound_check(g: &RegularGraph, l_max: usize) -> Result<BoundReport, GraphError> {
    if l_max < 1 {
        return Err(GraphError::BadLength { min: 1, got: l_max });
    }
    let spec = spectrum(g);
    if spec.bipartite != spec.bipartite_spectral && spec.connected {
        log::warn!("two-colouring and spectrum disagree on bipartiteness");
    }
    let traces = closed_walk_counts(g, l_max);
    let mut rows = Vec::new();
    for (ell, tr) in traces.iter().enumerate().skip(1) {
        let dl = BigUint::from(g.d).pow(ell as u32);
        let diff = if *tr >= dl { tr - &dl } else { &dl - tr };
        let deviation = big_to_f64(&diff);
        let bound = g.n as f64 * spec.lambda_plus.powi(ell as i32);
        let holds = deviation <= bound * (1.0 + SPECTRAL_TOL) + SPECTRAL_TOL;
        rows.push(BoundRow {
            ell,
            trace: tr.to_string(),
            deviation,
            bound,
            slack: bound - deviation,
            holds,
        });
    }
    Ok(BoundReport {
        n: g.n,
        d: g.d,
        lambda_plus: spec.lambda_plus,
        bipartite: spec.bipartite,
        connected: spec.connected,
        holds: rows.iter().all(|r| r.holds),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundTrials {
    pub n: usize,
    pub d: usize,
    pub l_max: usize,
    pub trials: usize,
    pub seed: u64,
    pub failures: Vec<usize>,
    pub flagged: Vec<usize>,
    pub min_slack: f64,
    pub holds: bool,
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn trial_graph(n: usize, d: usize, seed: u64, trial: usize) -> Result<RegularGraph, GraphError> {
    random_regular_with(n, d, &mut trial_rng(seed, trial), DEFAULT_REJECTION_BUDGET)
}

pub fn bound_trials(n: usize, d: usize, l_max: usize, trials: usize, seed: u64) -> Result<BoundTrials, GraphError> {
    if trials == 0 {
        return Err(GraphError::NoTrials);
    }
    let reports: Vec<BoundReport> = (0..trials)
        .into_par_iter()
        .map(|t| spectral_bound_check(&trial_graph(n, d, seed, t)?, l_max))
        .collect::<Result<_, _>>()?;
    let failures = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.holds)
        .map(|(i, _)| i)
        .collect::<Vec<_>>();
    let flagged = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| r.bipartite || !r.connected)
        .map(|(i, _)| i)
        .collect();
    let min_slack = reports
        .iter()
        .flat_map(|r| r.rows.iter().map(|row| row.slack))
        .fold(f64::INFINITY, f64::min);
    Ok(BoundTrials {
        n,
        d,
        l_max,
        trials,
        seed,
        holds: failures.is_empty(),
        failures,
        flagged,
        min_slack,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McRow {
    pub ell: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McReport {
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<McRow>,
    /// Least-squares slope of `log mean` against `ℓ` over nonzero means.
    pub log_slope: f64,
}

impl McReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("ell,mean_count,stderr,n,d,trials,seed\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.ell, r.mean, r.stderr, self.n, self.d, self.trials, self.seed
            );
        }
        s
    }

    pub fn means(&self) -> BTreeMap<usize, f64> {
        self.rows.iter().map(|r| (r.ell, r.mean)).collect()
    }
}

/// Empirical mean of cyclic irreducible counts for `ℓ = 1..=l_max` over
/// independent draws; trial `t` uses stream `t` of the seeded generator.
pub fn mc_expected_irreducible(
    n: usize,
    d: usize,
    l_max: usize,
    trials: usize,
    seed: u64,
) -> Result<McReport, GraphError> {
    if trials == 0 {
        return Err(GraphError::NoTrials);
    }
    let counts: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let g = trial_graph(n, d, seed, t)?;
            Ok(irreducible_loop_counts(&g, l_max, Closure::Cyclic)
                .iter()
                .map(big_to_f64)
                .collect())
        })
        .collect::<Result<_, GraphError>>()?;
    let tn = trials as f64;
    let rows: Vec<McRow> = (1..=l_max)
        .map(|ell| {
            let mean = counts.iter().map(|c| c[ell]).sum::<f64>() / tn;
            let stderr = if trials > 1 {
                let var = counts.iter().map(|c| (c[ell] - mean).powi(2)).sum::<f64>() / (tn - 1.0);
                (var / tn).sqrt()
            } else {
                0.0
            };
            McRow { ell, mean, stderr }
        })
        .collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.mean > 0.0)
        .map(|r| (r.ell as f64, r.mean.ln()))
        .collect();
    Ok(McReport {
        n,
        d,
        trials,
        seed,
        log_slope: ols_slope(&pts),
        rows,
    })
}

fn ols_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NAN;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RamanujanReport {
    pub d: usize,
    pub degree: usize,
    /// Ascending coefficients of `p`.
    pub coefficients: Vec<f64>,
    /// `(ℓ, (f(ℓ) − p(ℓ)(d−1)^ℓ) / (d−1)^{ℓ/2})`.
    pub normalized_residuals: Vec<(usize, f64)>,
    pub max_normalized: f64,
    /// Max normalized residual of the full fit divided by that of a fit on
    /// the lower half of the lengths. A component growing faster than
    /// `(d−1)^{ℓ/2}` is partly absorbed by `p` on any fixed range, but the
    /// absorbed error grows with the range.
    pub growth_ratio: f64,
    pub condition_number: f64,
    pub bounded: bool,
}

struct NormalizedFit {
    coefficients: Vec<f64>,
    residuals: Vec<(usize, f64)>,
    condition_number: f64,
}

impl NormalizedFit {
    fn max_abs(&self) -> f64 {
        self.residuals.iter().map(|r| r.1.abs()).fold(0.0, f64::max)
    }
}

fn normalized_fit(points: &[(usize, f64)], base: f64, degree: usize) -> Result<NormalizedFit, GraphError> {
    let l_scale = points.last().map_or(1.0, |p| p.0 as f64).max(1.0);
    let cols = degree + 1;
    let mut a = DMatrix::<f64>::zeros(points.len(), cols);
    let mut b = DVector::<f64>::zeros(points.len());
    for (i, &(ell, v)) in points.iter().enumerate() {
        let l = ell as f64;
        let half = base.powf(0.5 * l);
        for j in 0..cols {
            a[(i, j)] = (l / l_scale).powi(j as i32) * half;
        }
        b[i] = v / half;
    }
    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    for (j, nrm) in norms.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / nrm);
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition_number > MAX_CONDITION {
        return Err(GraphError::IllConditioned(condition_number));
    }
    let sol = svd
        .solve(&b, 0.0)
        .map_err(|_| GraphError::IllConditioned(condition_number))?;
    let coefficients: Vec<f64> = (0..cols).map(|j| sol[j] / norms[j] / l_scale.powi(j as i32)).collect();
    let residuals = points
        .iter()
        .map(|&(ell, v)| {
            let l = ell as f64;
            let p: f64 = coefficients.iter().rev().fold(0.0, |acc, c| acc * l + c);
            (ell, (v - p * base.powf(l)) / base.powf(0.5 * l))
        })
        .collect();
    Ok(NormalizedFit {
        coefficients,
        residuals,
        condition_number,
    })
}

/// Least squares for `p` with residuals measured on the `(d−1)^{ℓ/2}`
/// scale, plus a nested refit on the lower half of the lengths.
pub fn ramanujan_residual(
    counts: &BTreeMap<usize, f64>,
    d: usize,
    degree: usize,
) -> Result<RamanujanReport, GraphError> {
    let need = degree + 3;
    if counts.len() < need {
        return Err(GraphError::TooFewPoints {
            need,
            got: counts.len(),
            degree,
        });
    }
    let base = (d as f64 - 1.0).max(1.0);
    let points: Vec<(usize, f64)> = counts.iter().map(|(l, v)| (*l, *v)).collect();
    let full = normalized_fit(&points, base, degree)?;
    let max_normalized = full.max_abs();
    let scale = points
        .iter()
        .map(|&(e, v)| v.abs() / base.powf(0.5 * e as f64))
        .fold(0.0, f64::max);
    let exact = max_normalized <= 1e-9 * scale.max(1.0);
    let half = &points[..points.len() / 2];
    let growth_ratio = if exact || half.len() < need {
        1.0
    } else {
        let head = normalized_fit(half, base, degree)?.max_abs();
        if head > 1e-9 * scale.max(1.0) {
            max_normalized / head
        } else {
            f64::INFINITY
        }
    };
    Ok(RamanujanReport {
        d,
        degree,
        coefficients: full.coefficients,
        normalized_residuals: full.residuals,
        max_normalized,
        growth_ratio,
        condition_number: full.condition_number,
        bounded: exact || growth_ratio <= RESIDUAL_GROWTH_LIMIT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// All vertex sequences `v_0 … v_{ℓ−1}`, no search pruning.
    fn brute(g: &RegularGraph, ell: usize, nb: Option<Closure>) -> u64 {
        let a = g.adjacency_matrix();
        let mut seq = vec![0usize; ell];
        let mut total = 0;
        loop {
            let ok = (0..ell).all(|i| a[(seq[i], seq[(i + 1) % ell])] == 1.0)
                && match nb {
                    None => true,
                    Some(Closure::Cyclic) => (0..ell).all(|i| seq[i] != seq[(i + 2) % ell]),
                    Some(Closure::Path) => (0..ell.saturating_sub(1)).all(|i| seq[i] != seq[(i + 2) % ell]),
                };
            if ok {
                total += 1;
            }
            let mut i = 0;
            loop {
                if i == ell {
                    return total;
                }
                seq[i] += 1;
                if seq[i] < g.n {
                    break;
                }
                seq[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn k4_counts() {
        let k4 = RegularGraph::complete(4);
        assert_eq!(closed_walk_count(&k4, 3).unwrap(), BigUint::from(24u32));
        // spectral oracle: 3^3 + 3(−1)^3
        let ev = spectrum(&k4).eigenvalues;
        let sum: f64 = ev.iter().map(|l| l.powi(3)).sum();
        assert!((sum - 24.0).abs() < 1e-9);
        assert_eq!(brute(&k4, 3, None), 24);
        assert_eq!(
            irreducible_loop_count(&k4, 3, Closure::Cyclic).unwrap(),
            BigUint::from(24u32)
        );
        let rep = spectral_bound_check(&k4, 3).unwrap();
        assert_eq!(rep.rows[2].trace, "24");
        assert!((rep.rows[2].deviation - 3.0).abs() < 1e-12);
        assert!((rep.rows[2].bound - 4.0).abs() < 1e-9);
        assert!(rep.holds);
    }

    #[test]
    fn small_length_identities() {
        for seed in 0..5 {
            let g = random_regular(10, 3, seed).unwrap();
            assert_eq!(closed_walk_count(&g, 1).unwrap(), BigUint::zero());
            assert_eq!(closed_walk_count(&g, 2).unwrap(), BigUint::from(g.n * g.d));
            assert!(closed_walk_count(&g, 0).is_err());
            assert!(irreducible_loop_count(&g, 1, Closure::Cyclic).is_err());
        }
    }

    #[test]
    fn cycle_graph_irreducible() {
        for n in [3usize, 5, 8] {
            let c = RegularGraph::cycle(n);
            let counts = irreducible_loop_counts(&c, 2 * n + 1, Closure::Cyclic);
            for (ell, v) in counts.iter().enumerate().skip(2) {
                let want = if ell % n == 0 { 2 * n } else { 0 };
                assert_eq!(*v, BigUint::from(want), "n={n} l={ell}");
            }
        }
    }

    #[test]
    fn counts_match_exhaustive_enumeration() {
        let mut graphs = vec![
            RegularGraph::complete(4),
            RegularGraph::complete(6),
            RegularGraph::cycle(7),
        ];
        for seed in 0..12u64 {
            let (n, d) = [(8, 3), (10, 3), (10, 4), (12, 3), (9, 4)][seed as usize % 5];
            graphs.push(random_regular(n, d, seed).unwrap());
        }
        for g in &graphs {
            let closed = closed_walk_counts(g, 8);
            let cyc = irreducible_loop_counts(g, 8, Closure::Cyclic);
            let path = irreducible_loop_counts(g, 8, Closure::Path);
            for ell in 2..=8 {
                let nb_c = enumerate_closed_walks(g, ell, Some(Closure::Cyclic));
                let nb_p = enumerate_closed_walks(g, ell, Some(Closure::Path));
                assert_eq!(closed[ell], BigUint::from(enumerate_closed_walks(g, ell, None)));
                assert_eq!(cyc[ell], BigUint::from(nb_c));
                assert_eq!(path[ell], BigUint::from(nb_p));
                assert!(cyc[ell] <= path[ell] && path[ell] <= closed[ell]);
                if ell <= 5 {
                    assert_eq!(nb_c, brute(g, ell, Some(Closure::Cyclic)));
                    assert_eq!(nb_p, brute(g, ell, Some(Closure::Path)));
                    assert_eq!(enumerate_closed_walks(g, ell, None), brute(g, ell, None));
                }
            }
        }
    }

    #[test]
    fn big_integer_fallback() {
        let k4 = RegularGraph::complete(4);
        // Tr(A^ℓ) = 3^ℓ + 3(−1)^ℓ overflows u128 beyond ℓ ≈ 80
        let counts = closed_walk_counts(&k4, 90);
        let want = BigUint::from(3u32).pow(90) + BigUint::from(3u32);
        assert_eq!(counts[90], want);
    }

    #[test]
    fn generator_invariants() {
        assert_eq!(random_regular(4, 3, 11).unwrap(), RegularGraph::complete(4));
        assert!(matches!(random_regular(5, 3, 0), Err(GraphError::BadParameters { .. })));
        assert!(matches!(random_regular(4, 4, 0), Err(GraphError::BadParameters { .. })));
        for seed in 0..100 {
            let g = random_regular(20, 3, seed).unwrap();
            assert!(g.adj.iter().all(|l| l.len() == 3));
            assert_eq!(RegularGraph::from_edges(20, 3, &g.edges()).unwrap(), g);
        }
        assert_eq!(random_regular(30, 4, 9).unwrap(), random_regular(30, 4, 9).unwrap());
        assert_ne!(random_regular(30, 4, 9).unwrap(), random_regular(30, 4, 10).unwrap());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = random_regular(12, 3, 4).unwrap();
        let text = g.to_edge_list();
        assert_eq!(RegularGraph::from_edge_list(&text).unwrap(), g);
        assert!(RegularGraph::from_edge_list("4 3\n0 1\n").is_err());
        assert!(matches!(
            RegularGraph::from_edge_list("x"),
            Err(GraphError::Parse { .. })
        ));
    }

    #[test]
    fn spectrum_and_bipartiteness() {
        let k4 = spectrum(&RegularGraph::complete(4));
        assert!((k4.eigenvalues[0] - 3.0).abs() < 1e-9);
        assert!((k4.lambda_plus - 1.0).abs() < 1e-9);
        let c6 = spectrum(&RegularGraph::cycle(6));
        assert!(c6.bipartite && c6.bipartite_spectral);
        let c7 = spectrum(&RegularGraph::cycle(7));
        assert!(!c7.bipartite && !c7.bipartite_spectral);
        for seed in 0..20 {
            let s = spectrum(&random_regular(16, 3, seed).unwrap());
            assert_eq!(s.bipartite, s.bipartite_spectral);
            if s.connected {
                assert!((s.eigenvalues[0] - 3.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn trace_bound_on_random_graphs() {
        let t = bound_trials(50, 3, 10, 100, 0).unwrap();
        assert!(t.holds, "{t:?}");
        assert!(t.min_slack > 0.0);
        let one = spectral_bound_check(&random_regular(20, 3, 1).unwrap(), 1).unwrap();
        assert!(one.rows[0].holds);
    }

    #[test]
    fn ramanujan_fits() {
        let exact: BTreeMap<usize, f64> = (1..=16)
            .map(|l| (l, (3.0 - 0.5 * l as f64) * 2f64.powi(l as i32)))
            .collect();
        let r = ramanujan_residual(&exact, 3, 1).unwrap();
        assert!(r.bounded);
        assert!(r.max_normalized < 1e-6, "{r:?}");
        assert!((r.coefficients[0] - 3.0).abs() < 1e-9 && (r.coefficients[1] + 0.5).abs() < 1e-9);

        let bad: BTreeMap<usize, f64> = (1..=16)
            .map(|l| {
                let l = l as f64;
                (l as usize, (1.0 + l) * 2f64.powf(l) + 2f64.powf(0.75 * l))
            })
            .collect();
        let r = ramanujan_residual(&bad, 3, 1).unwrap();
        assert!(!r.bounded, "{r:?}");

        let sqrt_noise: BTreeMap<usize, f64> = (1..=20)
            .map(|l| {
                let l = l as f64;
                (l as usize, 2f64.powf(l) + (1.0 + (1.3 * l).sin()) * 2f64.powf(0.5 * l))
            })
            .collect();
        assert!(ramanujan_residual(&sqrt_noise, 3, 1).unwrap().bounded);
        assert!(matches!(
            ramanujan_residual(&exact.iter().take(3).map(|(a, b)| (*a, *b)).collect(), 3, 1),
            Err(GraphError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn monte_carlo_basics() {
        let one = mc_expected_irreducible(30, 3, 8, 1, 5).unwrap();
        let g = trial_graph(30, 3, 5, 0).unwrap();
        let direct = irreducible_loop_counts(&g, 8, Closure::Cyclic);
        for r in &one.rows {
            assert_eq!(r.mean, big_to_f64(&direct[r.ell]));
            assert_eq!(r.stderr, 0.0);
        }
        let a = mc_expected_irreducible(40, 3, 8, 40, 1).unwrap();
        let b = mc_expected_irreducible(40, 3, 8, 80, 1).unwrap();
        let ratio = b.rows[7].stderr / a.rows[7].stderr;
        assert!(ratio > 0.5 / 3.0 && ratio < 0.5 * 3.0, "{ratio}");
        assert_eq!(a.to_csv(), mc_expected_irreducible(40, 3, 8, 40, 1).unwrap().to_csv());
        assert!(a
            .to_csv()
            .starts_with("ell,mean_count,stderr,n,d,trials,seed\n1,0,0,40,3,40,1\n"));
    }
}
