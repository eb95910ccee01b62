//! Explicit finite balls of Cayley graphs (or loaded bounded-degree graphs):
//! BFS distances, geodesics, neighborhoods, growth counts.

use std::collections::{HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::models::Model;
use crate::word::Word;

pub const DEFAULT_VERTEX_BUDGET: usize = 5_000_000;
pub const BUDGET_ENV: &str = "COARSELAB_VERTEX_BUDGET";

/// Budget resolution order: explicit override, env var, default.
pub fn vertex_budget(explicit: Option<usize>) -> usize {
    if let Some(b) = explicit {
        return b;
    }
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_VERTEX_BUDGET)
}

#[derive(Debug)]
pub struct BallGraph {
    pub spec: String,
    pub generators: Vec<String>,
    pub radius: u32,
    pub basepoint: u32,
    /// canonical word per vertex (absent for external edge-list graphs)
    pub words: Option<Vec<Word>>,
    pub labels: Vec<String>,
    pub adj: Vec<Vec<u32>>,
    pub depth: Vec<u32>,
    pub max_degree: usize,
    /// true when the stored graph is the whole space, so stored distances
    /// are exact everywhere (external graphs; never Cayley ball truncations
    /// unless asserted by the caller).
    exact: bool,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    spec: String,
    radius: u32,
    vertices: Vec<String>,
    edges: Vec<(u32, u32)>,
    basepoint: u32,
}

impl BallGraph {
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Declare that stored distances are globally exact (e.g. a tree ball,
    /// where geodesics never leave the ball, or an L¹-convex grid ball).
    /// The caller owns the justification.
    pub fn assume_exact(mut self) -> BallGraph {
        self.exact = true;
        self
    }

    /// Can "d(u,v) > s" be trusted? Any path of length ≤ s between u and v
    /// stays at depth ≤ (depth(u)+depth(v)+s)/2, so if that bound fits in
    /// the ball, absence of a short stored path is conclusive.
    pub fn separation_certified(&self, u: u32, v: u32, s: u32) -> bool {
        self.exact || (self.depth[u as usize] + self.depth[v as usize] + s) / 2 <= self.radius
    }

    pub fn build(model: &Model, spec: &str, radius: u32, budget: usize) -> Result<BallGraph> {
        let mut words: Vec<Word> = vec![Word::empty()];
        let mut index: HashMap<Word, u32> = HashMap::new();
        index.insert(Word::empty(), 0);
        let mut depth = vec![0u32];
        let mut layer: Vec<u32> = vec![0];
        for d in 1..=radius {
            let mut next: Vec<Word> = Vec::new();
            for &u in &layer {
                let g = words[u as usize].clone();
                for nb in model.neighbors(&g) {
                    if !index.contains_key(&nb) && !next.contains(&nb) {
                        next.push(nb);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            next.sort();
            let mut new_layer = Vec::with_capacity(next.len());
            for w in next {
                if words.len() >= budget {
                    return Err(Error::Resource {
                        what: "ball vertices".into(),
                        limit: budget,
                    });
                }
                let id = words.len() as u32;
                index.insert(w.clone(), id);
                words.push(w);
                depth.push(d);
                new_layer.push(id);
            }
            layer = new_layer;
        }
        let n = words.len();
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for u in 0..n {
            for nb in model.neighbors(&words[u]) {
                if let Some(&v) = index.get(&nb) {
                    adj[u].push(v);
                }
            }
        }
        // symmetrize (a neighbor of a boundary vertex may list it back even
        // though the forward edge was dropped -- keep only mutual pairs,
        // which group adjacency guarantees are already mutual) and sort
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        let max_degree = adj.iter().map(Vec::len).max().unwrap_or(0);
        let names = model.generator_names();
        let labels = words.iter().map(|w| w.display(&names)).collect();
        Ok(BallGraph {
            spec: spec.to_string(),
            generators: names,
            radius,
            basepoint: 0,
            words: Some(words),
            labels,
            adj,
            depth,
            max_degree,
            exact: false,
        })
    }

    /// BFS distances from `src`, truncated at `cap` (None = unbounded).
    pub fn bfs(&self, src: u32, cap: Option<u32>) -> Vec<Option<u32>> {
        self.bfs_multi(std::slice::from_ref(&src), cap)
    }

    /// Multi-source BFS distances d(·, S).
    pub fn bfs_multi(&self, srcs: &[u32], cap: Option<u32>) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        let mut q = VecDeque::new();
        for &s in srcs {
            if dist[s as usize].is_none() {
                dist[s as usize] = Some(0);
                q.push_back(s);
            }
        }
        while let Some(u) = q.pop_front() {
            let du = dist[u as usize].unwrap();
            if let Some(c) = cap {
                if du >= c {
                    continue;
                }
            }
            for &v in &self.adj[u as usize] {
                if dist[v as usize].is_none() {
                    dist[v as usize] = Some(du + 1);
                    q.push_back(v);
                }
            }
        }
        dist
    }

    pub fn distance(&self, u: u32, v: u32) -> Result<u32> {
        self.bfs(u, None)[v as usize].ok_or_else(|| {
            Error::DisconnectedInBall(format!(
                "{} and {} are not connected within the stored ball",
                self.labels[u as usize], self.labels[v as usize]
            ))
        })
    }

    /// Deterministic shortest path: BFS distances from `v`, then walk from
    /// `u` always picking the smallest-index neighbor one step closer.
    pub fn geodesic(&self, u: u32, v: u32) -> Result<Vec<u32>> {
        let dist = self.bfs(v, None);
        let mut d = dist[u as usize].ok_or_else(|| {
            Error::DisconnectedInBall(format!(
                "{} and {} are not connected within the stored ball",
                self.labels[u as usize], self.labels[v as usize]
            ))
        })?;
        let mut path = vec![u];
        let mut cur = u;
        while d > 0 {
            let next = self.adj[cur as usize]
                .iter()
                .copied()
                .find(|&w| dist[w as usize] == Some(d - 1))
                .expect("BFS distance field must decrease along some edge");
            path.push(next);
            cur = next;
            d -= 1;
        }
        Ok(path)
    }

    /// Exactly the vertices at stored-graph distance ≤ r from S.
    pub fn neighborhood(&self, s: &[u32], r: u32) -> Vec<u32> {
        let dist = self.bfs_multi(s, Some(r));
        (0..self.len() as u32)
            .filter(|&v| dist[v as usize].is_some())
            .collect()
    }

    /// Cumulative |B_n(basepoint)| for n = 0..=radius.
    pub fn growth_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.radius as usize + 1];
        for &d in &self.depth {
            counts[d as usize] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        counts
    }

    pub fn to_json(&self) -> String {
        let mut edges = Vec::new();
        for (u, nbs) in self.adj.iter().enumerate() {
            for &v in nbs {
                if (u as u32) < v {
                    edges.push((u as u32, v));
                }
            }
        }
        serde_json::to_string_pretty(&GraphJson {
            spec: self.spec.clone(),
            radius: self.radius,
            vertices: self.labels.clone(),
            edges,
            basepoint: self.basepoint,
        })
        .expect("graph serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<BallGraph> {
        let j: GraphJson = serde_json::from_str(text)?;
        let n = j.vertices.len();
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (u, v) in &j.edges {
            let (u, v) = (*u as usize, *v as usize);
            if u >= n || v >= n {
                return Err(Error::Parse(format!("edge ({u},{v}) out of range")));
            }
            adj[u].push(v as u32);
            adj[v].push(u as u32);
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        let max_degree = adj.iter().map(Vec::len).max().unwrap_or(0);
        let mut g = BallGraph {
            spec: j.spec,
            generators: Vec::new(),
            radius: j.radius,
            basepoint: j.basepoint,
            words: None,
            labels: j.vertices,
            adj,
            depth: Vec::new(),
            max_degree,
            exact: false,
        };
        g.recompute_depths()?;
        Ok(g)
    }

    /// External edge-list file: one "i j" pair per line, 0-indexed,
    /// '#' comments. The file is taken to be the whole graph, so distances
    /// are exact; the basepoint defaults to 0.
    pub fn from_edge_list(path: &Path) -> Result<BallGraph> {
        let text = std::fs::read_to_string(path)?;
        let mut edges: Vec<(u32, u32)> = Vec::new();
        let mut max_v = 0u32;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |t: Option<&str>| -> Result<u32> {
                t.and_then(|t| t.parse().ok()).ok_or_else(|| {
                    Error::Parse(format!("bad edge on line {}", lineno + 1))
                })
            };
            let u = parse(it.next())?;
            let v = parse(it.next())?;
            max_v = max_v.max(u).max(v);
            edges.push((u, v));
        }
        if edges.is_empty() {
            return Err(Error::Parse("edge list is empty".into()));
        }
        let n = max_v as usize + 1;
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (u, v) in edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        let max_degree = adj.iter().map(Vec::len).max().unwrap_or(0);
        let mut g = BallGraph {
            spec: format!("edges({})", path.display()),
            generators: Vec::new(),
            radius: 0,
            basepoint: 0,
            words: None,
            labels: (0..n).map(|i| i.to_string()).collect(),
            adj,
            depth: Vec::new(),
            max_degree,
            exact: true,
        };
        g.recompute_depths()?;
        g.radius = g.depth.iter().copied().max().unwrap_or(0);
        Ok(g)
    }

    fn recompute_depths(&mut self) -> Result<()> {
        let dist = self.bfs(self.basepoint, None);
        let mut depth = Vec::with_capacity(self.len());
        for (i, d) in dist.iter().enumerate() {
            match d {
                Some(d) => depth.push(*d),
                None => {
                    return Err(Error::DisconnectedInBall(format!(
                        "vertex {i} unreachable from the basepoint"
                    )))
                }
            }
        }
        self.depth = depth;
        Ok(())
    }

    pub fn vertex_by_label(&self, label: &str) -> Option<u32> {
        self.labels.iter().position(|l| l == label).map(|i| i as u32)
    }

    /// Vertex index of a word given in generator names (Cayley graphs only).
    pub fn vertex_of_word(&self, model: &Model, text: &str) -> Result<u32> {
        let words = self
            .words
            .as_ref()
            .ok_or_else(|| Error::Precondition("graph has no word labels".into()))?;
        let w = model.normal_form(&Word::parse(text, &self.generators)?);
        words
            .iter()
            .position(|v| *v == w)
            .map(|i| i as u32)
            .ok_or_else(|| Error::Precondition(format!("word {text:?} is outside the ball")))
    }
}

#[derive(Serialize)]
pub struct GrowthReport {
    pub spec: String,
    pub counts: Vec<usize>,
    /// least-squares slope of log|B_n| vs n over the top half of the range
    pub log_slope: f64,
    pub residual: f64,
}

pub fn growth_report(g: &BallGraph) -> GrowthReport {
    let counts = g.growth_counts();
    let lo = counts.len() / 2;
    let xs: Vec<f64> = (lo..counts.len()).map(|n| n as f64).collect();
    let ys: Vec<f64> = (lo..counts.len()).map(|n| (counts[n] as f64).ln()).collect();
    let (slope, _, rms) = linear_fit(&xs, &ys).unwrap_or((0.0, 0.0, 0.0));
    GrowthReport {
        spec: g.spec.clone(),
        counts,
        log_slope: slope,
        residual: rms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::GroupSpec;

    pub(crate) fn ball(spec: &str, radius: u32) -> (Model, BallGraph) {
        let s = GroupSpec::parse(spec).unwrap();
        let m = Model::from_spec(&s).unwrap();
        let g = BallGraph::build(&m, spec, radius, vertex_budget(None)).unwrap();
        (m, g)
    }

    #[test]
    fn free2_ball_sizes() {
        let (_, g) = ball("free(2)", 3);
        assert_eq!(g.len(), 53); // 2*3^n - 1
        assert_eq!(g.max_degree, 4);
    }

    #[test]
    fn abelian2_ball_sizes() {
        let (_, g) = ball("abelian(2)", 3);
        assert_eq!(g.len(), 25); // 2n^2 + 2n + 1
    }

    #[test]
    fn lamplighter_ball_matches_state_enumeration() {
        use std::collections::BTreeSet;
        type State = (BTreeSet<i64>, i64);
        let start: State = (BTreeSet::new(), 0);
        let mut seen: BTreeSet<State> = [start.clone()].into();
        let mut layer = vec![start];
        for _ in 0..6 {
            let mut next = Vec::new();
            for (lamps, cur) in &layer {
                let mut cands: Vec<State> = vec![
                    (lamps.clone(), cur + 1),
                    (lamps.clone(), cur - 1),
                ];
                let mut toggled = lamps.clone();
                if !toggled.insert(*cur) {
                    toggled.remove(cur);
                }
                cands.push((toggled, *cur));
                for c in cands {
                    if seen.insert(c.clone()) {
                        next.push(c);
                    }
                }
            }
            layer = next;
        }
        let (_, g) = ball("lamplighter", 6);
        assert_eq!(g.len(), seen.len());
    }

    #[test]
    fn depths_match_distance_and_adjacent_depths_differ_by_one() {
        let (_, g) = ball("bs(1,2)", 4);
        let dist = g.bfs(0, None);
        for v in 0..g.len() {
            assert_eq!(dist[v], Some(g.depth[v]));
            for &u in &g.adj[v] {
                assert!(g.depth[v].abs_diff(g.depth[u as usize]) <= 1);
            }
        }
    }

    #[test]
    fn grid_distance_is_l1() {
        let (m, g) = ball("abelian(2)", 6);
        let u = g.vertex_of_word(&m, "a b^2").unwrap();
        let v = g.vertex_of_word(&m, "a^-1").unwrap();
        assert_eq!(g.distance(u, v).unwrap(), 4);
        assert_eq!(g.distance(u, u).unwrap(), 0);
    }

    #[test]
    fn tree_distance_matches_exhaustive_paths() {
        let (m, g) = ball("free(2)", 5);
        let u = g.vertex_of_word(&m, "a b").unwrap();
        let v = g.vertex_of_word(&m, "a^-1").unwrap();
        let d = g.distance(u, v).unwrap();
        // exhaustive DFS over all simple paths of length <= 5
        fn dfs(g: &BallGraph, cur: u32, tgt: u32, len: u32, best: &mut u32, path: &mut Vec<u32>) {
            if cur == tgt {
                *best = (*best).min(len);
                return;
            }
            if len >= 5 {
                return;
            }
            for &n in &g.adj[cur as usize] {
                if !path.contains(&n) {
                    path.push(n);
                    dfs(g, n, tgt, len + 1, best, path);
                    path.pop();
                }
            }
        }
        let mut best = u32::MAX;
        dfs(&g, u, v, 0, &mut best, &mut vec![u]);
        assert_eq!(d, best);
        assert_eq!(d, 3); // |b^-1 a^-2|
    }

    #[test]
    fn geodesic_deterministic_and_shortest() {
        let (m, g) = ball("abelian(2)", 5);
        let v = g.vertex_of_word(&m, "a^2 b").unwrap();
        let p = g.geodesic(0, v).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.first(), Some(&0));
        assert_eq!(p.last(), Some(&v));
        for w in p.windows(2) {
            assert!(g.adj[w[0] as usize].contains(&w[1]));
        }
        assert_eq!(p, g.geodesic(0, v).unwrap());
        // tree geodesic is unique
        let (mf, gf) = ball("free(2)", 4);
        let t = gf.vertex_of_word(&mf, "a b a").unwrap();
        let q = gf.geodesic(0, t).unwrap();
        assert_eq!(q.len(), 4);
    }

    #[test]
    fn neighborhood_counts() {
        let (_, g) = ball("free(2)", 3);
        assert_eq!(g.neighborhood(&[0], 0), vec![0]);
        assert_eq!(g.neighborhood(&[0], 1).len(), 5);
        let (_, grid) = ball("abelian(2)", 4);
        assert_eq!(grid.neighborhood(&[0], 2).len(), 13);
    }

    #[test]
    fn growth_rates() {
        let (_, f) = ball("free(2)", 8);
        let rep = growth_report(&f);
        assert_eq!(rep.counts[8], 2 * 3usize.pow(8) - 1);
        assert!((rep.log_slope - 3f64.ln()).abs() < 0.05);
        let (_, z2) = ball("abelian(2)", 10);
        let rep2 = growth_report(&z2);
        assert!(rep2.log_slope < rep.log_slope / 2.0);
        let (_, ll) = ball("lamplighter", 9);
        let rep3 = growth_report(&ll);
        assert!(rep3.log_slope > 0.1);
    }

    #[test]
    fn json_round_trip() {
        let (_, g) = ball("abelian(2)", 3);
        let j = g.to_json();
        let h = BallGraph::from_json(&j).unwrap();
        assert_eq!(h.len(), g.len());
        assert_eq!(h.depth, g.depth);
        assert_eq!(h.adj, g.adj);
        assert_eq!(g.to_json(), h.to_json());
    }

    #[test]
    fn vertex_budget_enforced() {
        let s = GroupSpec::parse("free(2)").unwrap();
        let m = Model::from_spec(&s).unwrap();
        let err = BallGraph::build(&m, "free(2)", 6, 100).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn edge_list_loading() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.txt");
        std::fs::write(&p, "# a 4-cycle\n0 1\n1 2\n2 3\n3 0\n").unwrap();
        let g = BallGraph::from_edge_list(&p).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.is_exact());
        assert_eq!(g.distance(0, 2).unwrap(), 2);
    }

    #[test]
    fn triangle_inequality_sampled() {
        let (_, g) = ball("bs(2,3)", 4);
        let n = g.len() as u32;
        for (a, b, c) in [(0, n / 2, n - 1), (1, n / 3, n / 2), (2, 3, 5)] {
            let ab = g.distance(a, b).unwrap();
            let bc = g.distance(b, c).unwrap();
            let ac = g.distance(a, c).unwrap();
            assert!(ac <= ab + bc);
        }
    }
}
