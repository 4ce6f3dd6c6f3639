//! Triangulated Maximally Filtered Graph.
//!
//! Construction is greedy: start from the four vertices with the largest
//! total pairwise similarity (a tetrahedron, four triangular faces), then
//! repeatedly insert the remaining vertex into the face that maximizes the
//! sum of its three similarities to the face's corners. Each insertion adds
//! three edges and replaces one face by three, so a graph on `n` vertices
//! ends with `3(n − 2)` edges and `2(n − 2)` faces and is planar and chordal.
//!
//! Ties are broken by lowest vertex index, then lexicographically smallest
//! face, so identical inputs give identical graphs.

use crate::corrnet::{ema, RollingCorrSeries};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::{BTreeSet, VecDeque};
use thiserror::Error;

/// Largest `n` for which the seed tetrahedron is found by exhaustive search.
pub const EXHAUSTIVE_SEED_LIMIT: usize = 100;
pub const POWER_TOLERANCE: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 10_000;
pub const PERCENTILE_LEVELS: [f64; 6] = [1.0, 5.0, 25.0, 75.0, 95.0, 99.0];

#[derive(Debug, Error, PartialEq)]
pub enum TmfgError {
    #[error("TMFG needs at least 4 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("similarity matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("similarity matrix is not symmetric at ({i}, {j})")]
    NonSymmetricInput { i: usize, j: usize },
    #[error("similarity matrix has a non-finite entry at ({i}, {j})")]
    NonFinite { i: usize, j: usize },
    #[error("power iteration did not converge in {iterations} iterations (last change {change:e})")]
    NoConvergence { iterations: usize, change: f64 },
    #[error("adjacency matrix is identically zero")]
    ZeroAdjacency,
    #[error("alpha must be in (0, 1], got {0}")]
    InvalidAlpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// One greedy step: `vertex` was placed inside `face` with the given gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Insertion {
    pub vertex: usize,
    pub face: [usize; 3],
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TmfgGraph {
    n: usize,
    seed: [usize; 4],
    edges: Vec<Edge>,
    faces: Vec<[usize; 3]>,
    insertion_log: Vec<Insertion>,
}

impl TmfgGraph {
    /// Assembles a graph from raw parts without checking anything; use
    /// [`validate`] to inspect the result.
    pub fn from_parts(
        n: usize,
        seed: [usize; 4],
        edges: Vec<Edge>,
        faces: Vec<[usize; 3]>,
        insertion_log: Vec<Insertion>,
    ) -> Self {
        Self { n, seed, edges, faces, insertion_log }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> [usize; 4] {
        self.seed
    }

    /// Edges sorted by `(source, target)` with `source < target`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Faces as sorted vertex triples, in lexicographic order.
    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn insertion_log(&self) -> &[Insertion] {
        &self.insertion_log
    }

    pub fn edge_set(&self) -> BTreeSet<(usize, usize)> {
        self.edges.iter().map(|e| (e.source, e.target)).collect()
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            if e.source < self.n && e.target < self.n {
                adj[e.source].push(e.target);
                adj[e.target].push(e.source);
            }
        }
        adj
    }

    /// Vertex order witnessing chordality: the insertion log reversed, then
    /// the seed tetrahedron.
    pub fn elimination_order(&self) -> Vec<usize> {
        self.insertion_log
            .iter()
            .rev()
            .map(|ins| ins.vertex)
            .chain(self.seed.iter().copied())
            .collect()
    }
}

fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

fn check_similarity(s: &DMatrix<f64>) -> Result<usize, TmfgError> {
    let (rows, cols) = s.shape();
    if rows != cols {
        return Err(TmfgError::NotSquare { rows, cols });
    }
    let n = rows;
    if n < 4 {
        return Err(TmfgError::TooFewVertices(n));
    }
    for i in 0..n {
        for j in i..n {
            let (a, b) = (s[(i, j)], s[(j, i)]);
            if !a.is_finite() || !b.is_finite() {
                return Err(TmfgError::NonFinite { i, j });
            }
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return Err(TmfgError::NonSymmetricInput { i, j });
            }
        }
    }
    Ok(n)
}

/// Exhaustive search over all 4-subsets for the largest sum of the six
/// pairwise similarities; the first maximum in lexicographic order wins.
fn exhaustive_seed(s: &DMatrix<f64>) -> [usize; 4] {
    let n = s.nrows();
    let mut best = [0, 1, 2, 3];
    let mut best_sum = f64::NEG_INFINITY;
    for a in 0..n {
        for b in (a + 1)..n {
            let ab = s[(a, b)];
            for c in (b + 1)..n {
                let abc = ab + s[(a, c)] + s[(b, c)];
                for d in (c + 1)..n {
                    let sum = abc + s[(a, d)] + s[(b, d)] + s[(c, d)];
                    if sum > best_sum {
                        best_sum = sum;
                        best = [a, b, c, d];
                    }
                }
            }
        }
    }
    best
}

/// The four vertices with the largest off-diagonal row sums.
fn strength_seed(s: &DMatrix<f64>) -> [usize; 4] {
    let n = s.nrows();
    let mut strength: Vec<(usize, f64)> =
        (0..n).map(|i| (i, (0..n).filter(|&j| j != i).map(|j| s[(i, j)]).sum())).collect();
    strength.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut seed = [strength[0].0, strength[1].0, strength[2].0, strength[3].0];
    seed.sort_unstable();
    seed
}

fn face_gain(s: &DMatrix<f64>, v: usize, f: &[usize; 3]) -> f64 {
    s[(v, f[0])] + s[(v, f[1])] + s[(v, f[2])]
}

/// Builds the TMFG of a symmetric similarity matrix. Larger entries are
/// stronger links; the diagonal is ignored.
pub fn build_tmfg(s: &DMatrix<f64>) -> Result<TmfgGraph, TmfgError> {
    let n = check_similarity(s)?;
    // Read every pair from the upper triangle so tiny asymmetries cannot
    // make the result depend on argument order.
    let sym = DMatrix::from_fn(n, n, |i, j| if i <= j { s[(i, j)] } else { s[(j, i)] });
    let seed = if n <= EXHAUSTIVE_SEED_LIMIT { exhaustive_seed(&sym) } else { strength_seed(&sym) };

    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (k, &a) in seed.iter().enumerate() {
        for &b in &seed[k + 1..] {
            edges.insert((a, b));
        }
    }
    let [a, b, c, d] = seed;
    let mut faces: BTreeSet<[usize; 3]> = [[a, b, c], [a, b, d], [a, c, d], [b, c, d]].into_iter().collect();
    let mut remaining: Vec<usize> = (0..n).filter(|v| !seed.contains(v)).collect();
    let mut log = Vec::with_capacity(remaining.len());

    while !remaining.is_empty() {
        let mut best: Option<(usize, [usize; 3], f64)> = None;
        for (pos, &v) in remaining.iter().enumerate() {
            for f in &faces {
                let gain = face_gain(&sym, v, f);
                if best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((pos, *f, gain));
                }
            }
        }
        let (pos, face, gain) = best.expect("faces are never empty");
        let v = remaining.remove(pos);
        faces.remove(&face);
        for (x, y) in [(face[0], face[1]), (face[0], face[2]), (face[1], face[2])] {
            faces.insert(sorted3([v, x, y]));
        }
        for &u in &face {
            edges.insert((u.min(v), u.max(v)));
        }
        log.push(Insertion { vertex: v, face, gain });
    }

    let edges = edges.into_iter().map(|(i, j)| Edge { source: i, target: j, weight: sym[(i, j)] }).collect();
    Ok(TmfgGraph { n, seed, edges, faces: faces.into_iter().collect(), insertion_log: log })
}

/// Applies the similarity transform used as TMFG gains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimilarityTransform {
    #[default]
    Raw,
    Squared,
}

impl SimilarityTransform {
    pub fn apply(self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            SimilarityTransform::Raw => m.clone(),
            SimilarityTransform::Squared => m.map(|x| x * x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn is_connected(n: usize, adj: &[Vec<usize>]) -> bool {
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

/// True when `order` is a permutation of the vertices in which every
/// vertex's later neighbours form a clique.
pub fn is_perfect_elimination_order(n: usize, edges: &BTreeSet<(usize, usize)>, order: &[usize]) -> bool {
    if order.len() != n {
        return false;
    }
    let mut pos = vec![usize::MAX; n];
    for (p, &v) in order.iter().enumerate() {
        if v >= n || pos[v] != usize::MAX {
            return false;
        }
        pos[v] = p;
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let linked = |a: usize, b: usize| edges.contains(&(a.min(b), a.max(b)));
    order.iter().all(|&v| {
        let later: Vec<usize> = adj[v].iter().copied().filter(|&u| pos[u] > pos[v]).collect();
        later.iter().enumerate().all(|(k, &x)| later[k + 1..].iter().all(|&y| linked(x, y)))
    })
}

/// Structural checks: edge and face counts, connectivity, Euler's relation
/// (faces include the outer one) and chordality via the elimination order.
pub fn validate(g: &TmfgGraph) -> ValidationReport {
    let n = g.n;
    let expected_edges = 3 * n.saturating_sub(2);
    let expected_faces = 2 * n.saturating_sub(2);
    let edge_set = g.edge_set();
    let in_range = g.edges.iter().all(|e| e.source < e.target && e.target < n);
    let adj = g.neighbors();
    let euler = n as i64 - g.edges.len() as i64 + g.faces.len() as i64;

    let checks = vec![
        Check {
            name: "edge_count",
            passed: g.edges.len() == expected_edges && edge_set.len() == g.edges.len() && in_range,
            detail: format!("{} edges, expected {expected_edges}", g.edges.len()),
        },
        Check {
            name: "face_count",
            passed: g.faces.len() == expected_faces,
            detail: format!("{} faces, expected {expected_faces}", g.faces.len()),
        },
        Check {
            name: "connected",
            passed: in_range && is_connected(n, &adj),
            detail: String::new(),
        },
        Check {
            name: "euler",
            passed: euler == 2,
            detail: format!("V - E + F = {euler}"),
        },
        Check {
            name: "chordal",
            passed: in_range && is_perfect_elimination_order(n, &edge_set, &g.elimination_order()),
            detail: "reversed insertion log followed by the seed".into(),
        },
    ];
    ValidationReport { checks }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Adjacency {
    /// Entries are `|edge weight|`.
    #[default]
    Weighted,
    /// Entries are 1 for every edge.
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityVector {
    /// Nonnegative, unit L2 norm.
    pub values: Vec<f64>,
    pub eigenvalue: f64,
    pub iterations: usize,
}

pub fn adjacency_matrix(g: &TmfgGraph, kind: Adjacency) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(g.n, g.n);
    for e in &g.edges {
        let w = match kind {
            Adjacency::Weighted => e.weight.abs(),
            Adjacency::Binary => 1.0,
        };
        a[(e.source, e.target)] = w;
        a[(e.target, e.source)] = w;
    }
    a
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dominant eigenvector of the (nonnegative) adjacency by power iteration
/// from the uniform vector, stopping once successive iterates differ by less
/// than [`POWER_TOLERANCE`] in L2.
pub fn eigenvector_centrality(g: &TmfgGraph, kind: Adjacency) -> Result<CentralityVector, TmfgError> {
    let n = g.n;
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in &g.edges {
        let w = match kind {
            Adjacency::Weighted => e.weight.abs(),
            Adjacency::Binary => 1.0,
        };
        adj[e.source].push((e.target, w));
        adj[e.target].push((e.source, w));
    }
    let mul = |v: &[f64]| -> Vec<f64> {
        adj.iter().map(|row| row.iter().map(|&(j, w)| w * v[j]).sum()).collect()
    };
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut change = f64::INFINITY;
    for iteration in 1..=POWER_MAX_ITER {
        let mut next = mul(&v);
        let norm = l2(&next);
        if norm == 0.0 {
            return Err(TmfgError::ZeroAdjacency);
        }
        next.iter_mut().for_each(|x| *x /= norm);
        change = next.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        v = next;
        if change < POWER_TOLERANCE {
            let av = mul(&v);
            let eigenvalue = v.iter().zip(&av).map(|(a, b)| a * b).sum();
            return Ok(CentralityVector { values: v, eigenvalue, iterations: iteration });
        }
    }
    Err(TmfgError::NoConvergence { iterations: POWER_MAX_ITER, change })
}

/// Linear-interpolation percentile of `sorted` (ascending), `p` in [0, 100].
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct PercentileBands {
    pub window_end: i64,
    /// Values at [`PERCENTILE_LEVELS`], non-decreasing.
    pub values: [f64; 6],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralityOptions {
    pub transform: SimilarityTransform,
    pub adjacency: Adjacency,
    pub alpha: f64,
}

impl Default for CentralityOptions {
    fn default() -> Self {
        Self { transform: SimilarityTransform::Raw, adjacency: Adjacency::Weighted, alpha: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssetCentrality {
    pub asset: String,
    pub raw: Vec<f64>,
    pub smoothed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralitySeries {
    pub window_ends: Vec<i64>,
    pub graphs: Vec<TmfgGraph>,
    pub vectors: Vec<CentralityVector>,
    /// Every asset, in panel order.
    pub per_asset: Vec<AssetCentrality>,
    pub focus: Vec<String>,
    /// Bands over the smoothed centralities of the non-focus assets; `None`
    /// when every asset is in focus.
    pub bands: Option<Vec<PercentileBands>>,
}

impl CentralitySeries {
    pub fn asset(&self, name: &str) -> Option<&AssetCentrality> {
        self.per_asset.iter().find(|a| a.asset == name)
    }
}

/// Builds a TMFG per window, computes its centrality, smooths each asset's
/// trajectory with an EMA and summarizes the non-focus assets as bands.
pub fn centrality_series(
    rolling: &RollingCorrSeries,
    focus: &[String],
    opts: &CentralityOptions,
) -> Result<CentralitySeries, TmfgError> {
    if !(opts.alpha > 0.0 && opts.alpha <= 1.0) {
        return Err(TmfgError::InvalidAlpha(opts.alpha));
    }
    let built: Vec<(TmfgGraph, CentralityVector)> = rolling
        .matrices
        .par_iter()
        .map(|m| {
            let g = build_tmfg(&opts.transform.apply(&m.matrix))?;
            let c = eigenvector_centrality(&g, opts.adjacency)?;
            Ok((g, c))
        })
        .collect::<Result<_, TmfgError>>()?;
    let (graphs, vectors): (Vec<_>, Vec<_>) = built.into_iter().unzip();
    let window_ends = rolling.window_ends();

    let per_asset: Vec<AssetCentrality> = rolling
        .assets
        .iter()
        .enumerate()
        .map(|(i, asset)| {
            let raw: Vec<f64> = vectors.iter().map(|v: &CentralityVector| v.values[i]).collect();
            let smoothed = ema(&raw, opts.alpha).expect("alpha checked above");
            AssetCentrality { asset: asset.clone(), raw, smoothed }
        })
        .collect();

    let rest: Vec<usize> = (0..rolling.assets.len()).filter(|&i| !focus.contains(&rolling.assets[i])).collect();
    let bands = (!rest.is_empty()).then(|| {
        window_ends
            .iter()
            .enumerate()
            .map(|(w, &window_end)| {
                let mut vals: Vec<f64> = rest.iter().map(|&i| per_asset[i].smoothed[w]).collect();
                vals.sort_by(f64::total_cmp);
                let mut values = [0.0; 6];
                for (slot, p) in values.iter_mut().zip(PERCENTILE_LEVELS) {
                    *slot = percentile(&vals, p);
                }
                PercentileBands { window_end, values }
            })
            .collect()
    });

    Ok(CentralitySeries {
        window_ends,
        graphs,
        vectors,
        per_asset,
        focus: focus.to_vec(),
        bands,
    })
}

/// Force-directed (Fruchterman–Reingold) layout in the unit square. Only
/// used for pictures; deterministic for a given seed.
pub fn force_layout(g: &TmfgGraph, seed: u64, iterations: usize) -> Vec<(f64, f64)> {
    let n = g.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
    if n < 2 {
        return pos;
    }
    let k = (1.0 / n as f64).sqrt();
    let mut temperature = 0.1;
    let cooling = temperature / (iterations.max(1) as f64 + 1.0);
    for _ in 0..iterations {
        let mut disp = vec![(0.0f64, 0.0f64); n];
        for i in 0..n {
            for j in (i + 1)..n {
                let (dx, dy) = (pos[i].0 - pos[j].0, pos[i].1 - pos[j].1);
                let dist = (dx * dx + dy * dy).sqrt().max(1e-6);
                let force = k * k / dist;
                let (fx, fy) = (dx / dist * force, dy / dist * force);
                disp[i].0 += fx;
                disp[i].1 += fy;
                disp[j].0 -= fx;
                disp[j].1 -= fy;
            }
        }
        for e in &g.edges {
            let (i, j) = (e.source, e.target);
            let (dx, dy) = (pos[i].0 - pos[j].0, pos[i].1 - pos[j].1);
            let dist = (dx * dx + dy * dy).sqrt().max(1e-6);
            let force = dist * dist / k * (0.5 + e.weight.abs());
            let (fx, fy) = (dx / dist * force, dy / dist * force);
            disp[i].0 -= fx;
            disp[i].1 -= fy;
            disp[j].0 += fx;
            disp[j].1 += fy;
        }
        for (p, d) in pos.iter_mut().zip(&disp) {
            let len = (d.0 * d.0 + d.1 * d.1).sqrt().max(1e-12);
            let step = len.min(temperature);
            p.0 = (p.0 + d.0 / len * step).clamp(0.0, 1.0);
            p.1 = (p.1 + d.1 / len * step).clamp(0.0, 1.0);
        }
        temperature -= cooling;
    }
    pos
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_similarity(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::identity(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rng.random::<f64>() * 2.0 - 1.0;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    #[test]
    fn k4_is_complete() {
        let g = build_tmfg(&random_similarity(4, 1)).unwrap();
        assert_eq!(g.edges().len(), 6);
        assert_eq!(g.faces().len(), 4);
        assert!(g.insertion_log().is_empty());
        assert!(validate(&g).all_passed());
    }

    #[test]
    fn sixty_one_vertices() {
        let g = build_tmfg(&random_similarity(61, 7)).unwrap();
        assert_eq!(g.edges().len(), 177);
        assert_eq!(g.faces().len(), 118);
        assert!(validate(&g).all_passed(), "{:?}", validate(&g).failures());
    }

    #[test]
    fn five_vertex_host_face_is_best() {
        for seed in 0..20 {
            let s = random_similarity(5, seed);
            let g = build_tmfg(&s).unwrap();
            let ins = g.insertion_log()[0];
            let [a, b, c, d] = g.seed();
            let best = [[a, b, c], [a, b, d], [a, c, d], [b, c, d]]
                .iter()
                .map(|f| s[(ins.vertex, f[0])] + s[(ins.vertex, f[1])] + s[(ins.vertex, f[2])])
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(ins.gain, best);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(build_tmfg(&DMatrix::identity(3, 3)), Err(TmfgError::TooFewVertices(3)));
        let mut s = random_similarity(5, 3);
        s[(0, 1)] += 0.5;
        assert!(matches!(build_tmfg(&s), Err(TmfgError::NonSymmetricInput { i: 0, j: 1 })));
        let mut s = random_similarity(5, 3);
        s[(2, 2)] = f64::NAN;
        assert!(matches!(build_tmfg(&s), Err(TmfgError::NonFinite { .. })));
    }

    #[test]
    fn validate_catches_isolated_vertex() {
        let k4 = build_tmfg(&random_similarity(4, 2)).unwrap();
        let g = TmfgGraph::from_parts(5, k4.seed(), k4.edges().to_vec(), k4.faces().to_vec(), vec![]);
        let report = validate(&g);
        assert!(!report.check("connected").unwrap().passed);
    }

    #[test]
    fn validate_catches_extra_edge() {
        let g = build_tmfg(&random_similarity(8, 5)).unwrap();
        let set = g.edge_set();
        let (a, b) = (0..8)
            .flat_map(|i| ((i + 1)..8).map(move |j| (i, j)))
            .find(|p| !set.contains(p))
            .unwrap();
        let mut edges = g.edges().to_vec();
        edges.push(Edge { source: a, target: b, weight: 0.0 });
        let bad = TmfgGraph::from_parts(8, g.seed(), edges, g.faces().to_vec(), g.insertion_log().to_vec());
        assert!(!validate(&bad).check("edge_count").unwrap().passed);
    }

    #[test]
    fn k4_equal_weights_uniform_centrality() {
        let s = DMatrix::from_element(4, 4, 0.5);
        let g = build_tmfg(&s).unwrap();
        let c = eigenvector_centrality(&g, Adjacency::Weighted).unwrap();
        assert_eq!(c.values, vec![0.5; 4]);
        assert!((c.eigenvalue - 1.5).abs() < 1e-15);
    }

    #[test]
    fn hub_vertex_is_most_central() {
        // vertex 0 is strongly tied to everyone, the rest weakly to each other
        let n = 9;
        let s = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else if i == 0 || j == 0 { 0.9 } else { 0.1 + 0.01 * ((i * j) % 5) as f64 });
        let g = build_tmfg(&s).unwrap();
        let c = eigenvector_centrality(&g, Adjacency::Weighted).unwrap();
        let argmax = (0..n).max_by(|&a, &b| c.values[a].total_cmp(&c.values[b])).unwrap();
        assert_eq!(argmax, 0);
    }

    #[test]
    fn zero_adjacency_is_reported() {
        let g = build_tmfg(&DMatrix::zeros(5, 5)).unwrap();
        assert!(validate(&g).all_passed());
        assert_eq!(eigenvector_centrality(&g, Adjacency::Weighted), Err(TmfgError::ZeroAdjacency));
        assert!(eigenvector_centrality(&g, Adjacency::Binary).is_ok());
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 50.0), 3.0);
        assert_eq!(percentile(&v, 25.0), 2.0);
        assert!((percentile(&v, 99.0) - 4.96).abs() < 1e-12);
        assert_eq!(percentile(&[7.0], 5.0), 7.0);
    }

    #[test]
    fn layout_is_deterministic() {
        let g = build_tmfg(&random_similarity(12, 9)).unwrap();
        assert_eq!(force_layout(&g, 42, 100), force_layout(&g, 42, 100));
        assert_ne!(force_layout(&g, 42, 100), force_layout(&g, 43, 100));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn structure_holds(n in 4usize..25, seed in any::<u64>()) {
            let g = build_tmfg(&random_similarity(n, seed)).unwrap();
            let report = validate(&g);
            prop_assert!(report.all_passed(), "{:?}", report.failures());
        }

        #[test]
        fn deterministic(n in 4usize..20, seed in any::<u64>()) {
            let s = random_similarity(n, seed);
            prop_assert_eq!(build_tmfg(&s).unwrap(), build_tmfg(&s).unwrap());
        }

        #[test]
        fn scale_invariant(n in 5usize..20, seed in any::<u64>(), c in 0.01f64..100.0) {
            let s = random_similarity(n, seed);
            let g = build_tmfg(&s).unwrap();
            let h = build_tmfg(&s.map(|x| x * c)).unwrap();
            prop_assert_eq!(g.edge_set(), h.edge_set());
            let cg = eigenvector_centrality(&g, Adjacency::Weighted).unwrap();
            let ch = eigenvector_centrality(&h, Adjacency::Weighted).unwrap();
            let am = |v: &[f64]| (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
            prop_assert_eq!(am(&cg.values), am(&ch.values));
        }

        #[test]
        fn centrality_residual(n in 4usize..30, seed in any::<u64>()) {
            let g = build_tmfg(&random_similarity(n, seed)).unwrap();
            let c = eigenvector_centrality(&g, Adjacency::Weighted).unwrap();
            let a = adjacency_matrix(&g, Adjacency::Weighted);
            let v = nalgebra::DVector::from_vec(c.values.clone());
            let resid = (&a * &v - &v * c.eigenvalue).norm();
            prop_assert!(resid <= 1e-8, "residual {resid}");
            prop_assert!((v.norm() - 1.0).abs() < 1e-12);
            prop_assert!(c.values.iter().all(|x| *x >= 0.0));
        }
    }
}
