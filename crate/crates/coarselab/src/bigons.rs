//! (L,s,C)-bigons: verification, search, exact small-instance decision, and
//! finite-horizon counting.

use std::collections::HashSet;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::graph::BallGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BigonParams {
    /// length-factor L ≥ 1, exact rational
    pub l: Ratio<i64>,
    pub s: u32,
    pub c: u32,
}

pub fn parse_ratio(text: &str) -> Result<Ratio<i64>> {
    let t = text.trim();
    if let Some((p, q)) = t.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad_ratio(t))?;
        let q: i64 = q.trim().parse().map_err(|_| bad_ratio(t))?;
        if q == 0 {
            return Err(bad_ratio(t));
        }
        Ok(Ratio::new(p, q))
    } else {
        let p: i64 = t.parse().map_err(|_| bad_ratio(t))?;
        Ok(Ratio::from_integer(p))
    }
}

fn bad_ratio(t: &str) -> Error {
    Error::Parse(format!("expected a rational like 3 or 7/2, got {t:?}"))
}

pub fn ratio_string(r: Ratio<i64>) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl BigonParams {
    pub fn new(l: Ratio<i64>, s: u32, c: u32) -> Result<BigonParams> {
        if l < Ratio::from_integer(1) {
            return Err(Error::Precondition(format!(
                "bigon parameter L must be >= 1, got {}",
                ratio_string(l)
            )));
        }
        Ok(BigonParams { l, s, c })
    }

    /// ⌊L·d⌋, the integer path-length cap.
    pub fn length_cap(&self, d: u32) -> u32 {
        (self.l * Ratio::from_integer(d as i64)).floor().to_integer() as u32
    }
}

#[derive(Clone, Debug)]
pub struct BigonWitness {
    pub x: u32,
    pub alpha1: Vec<u32>,
    pub alpha2: Vec<u32>,
    pub params: BigonParams,
}

#[derive(Serialize, Deserialize)]
struct WitnessJson {
    x: u32,
    alpha1: Vec<u32>,
    alpha2: Vec<u32>,
    #[serde(rename = "L")]
    l: String,
    s: u32,
    #[serde(rename = "C")]
    c: u32,
}

impl BigonWitness {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&WitnessJson {
            x: self.x,
            alpha1: self.alpha1.clone(),
            alpha2: self.alpha2.clone(),
            l: ratio_string(self.params.l),
            s: self.params.s,
            c: self.params.c,
        })
        .expect("witness serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<BigonWitness> {
        let j: WitnessJson = serde_json::from_str(text)?;
        Ok(BigonWitness {
            x: j.x,
            alpha1: j.alpha1,
            alpha2: j.alpha2,
            params: BigonParams::new(parse_ratio(&j.l)?, j.s, j.c)?,
        })
    }
}

fn check_path(g: &BallGraph, path: &[u32], name: &str, x: u32) -> Result<()> {
    if path.first() != Some(&g.basepoint) || path.last() != Some(&x) {
        return Err(Error::Precondition(format!(
            "{name} must run from the basepoint to the bigon vertex"
        )));
    }
    for w in path.windows(2) {
        if !g.adj[w[0] as usize].contains(&w[1]) {
            return Err(Error::Precondition(format!(
                "{name} contains the non-edge ({}, {})",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Marks of B = N_C({x₀, x}).
fn b_set(g: &BallGraph, x: u32, c: u32) -> Vec<bool> {
    let dist = g.bfs_multi(&[g.basepoint, x], Some(c));
    dist.iter().map(|d| d.is_some()).collect()
}

/// Checks the two bigon conditions with exact arithmetic.
///
/// `Ok(false)` is always sound: path lengths are exact and a stored distance
/// ≤ s implies a true distance ≤ s. `Ok(true)` additionally requires that
/// every claimed separation "d > s" is certified (graph exact, or the pair's
/// depth admits no escaping short path); otherwise an untrusted-region error
/// is returned, never a silent verdict.
pub fn verify_bigon(g: &BallGraph, w: &BigonWitness) -> Result<bool> {
    check_path(g, &w.alpha1, "alpha1", w.x)?;
    check_path(g, &w.alpha2, "alpha2", w.x)?;
    let d = g.depth[w.x as usize];
    let cap = w.params.length_cap(d) as usize;
    if w.alpha1.len() - 1 > cap || w.alpha2.len() - 1 > cap {
        return Ok(false);
    }
    let b = b_set(g, w.x, w.params.c);
    let a1: Vec<u32> = w.alpha1.iter().copied().filter(|&v| !b[v as usize]).collect();
    let a2: Vec<u32> = w.alpha2.iter().copied().filter(|&v| !b[v as usize]).collect();
    if a1.is_empty() || a2.is_empty() {
        return Ok(true);
    }
    let dist = g.bfs_multi(&a1, Some(w.params.s));
    if a2.iter().any(|&v| dist[v as usize].is_some()) {
        return Ok(false);
    }
    // all stored separations exceed s; certify them
    for &u in &a1 {
        for &v in &a2 {
            if !g.separation_certified(u, v, w.params.s) {
                return Err(Error::UntrustedRegion(format!(
                    "separation d({u},{v}) > {} cannot be certified at depths {}+{} in radius {}",
                    w.params.s, g.depth[u as usize], g.depth[v as usize], g.radius
                )));
            }
        }
    }
    Ok(true)
}

/// Shortest path from src to dst avoiding `forbidden` (endpoints exempt),
/// length ≤ cap, deterministic via smallest-index parents.
fn bfs_path_avoiding(
    g: &BallGraph,
    src: u32,
    dst: u32,
    forbidden: &[bool],
    banned_edges: Option<&HashSet<(u32, u32)>>,
    cap: u32,
) -> Option<Vec<u32>> {
    let n = g.len();
    let mut dist: Vec<u32> = vec![u32::MAX; n];
    let mut parent: Vec<u32> = vec![u32::MAX; n];
    dist[src as usize] = 0;
    let mut q = std::collections::VecDeque::new();
    q.push_back(src);
    while let Some(u) = q.pop_front() {
        if u == dst {
            break;
        }
        let du = dist[u as usize];
        if du >= cap {
            continue;
        }
        for &v in &g.adj[u as usize] {
            if dist[v as usize] != u32::MAX {
                continue;
            }
            if v != dst && forbidden[v as usize] {
                continue;
            }
            if let Some(banned) = banned_edges {
                if banned.contains(&(u, v)) || banned.contains(&(v, u)) {
                    continue;
                }
            }
            dist[v as usize] = du + 1;
            parent[v as usize] = u;
            q.push_back(v);
        }
    }
    if dist[dst as usize] == u32::MAX || dist[dst as usize] > cap {
        return None;
    }
    let mut path = vec![dst];
    let mut cur = dst;
    while cur != src {
        cur = parent[cur as usize];
        path.push(cur);
    }
    path.reverse();
    Some(path)
}

/// Given a candidate α₁, search for a compatible α₂ (basepoint → x, length
/// ≤ cap, avoiding N_s(α₁ ∖ B) ∖ B) and assemble a verified witness.
fn complete_witness(
    g: &BallGraph,
    x: u32,
    params: BigonParams,
    alpha1: &[u32],
    b: &[bool],
    cap: u32,
) -> Result<Option<BigonWitness>> {
    let a1: Vec<u32> = alpha1.iter().copied().filter(|&v| !b[v as usize]).collect();
    let forbidden: Vec<bool> = if a1.is_empty() {
        vec![false; g.len()]
    } else {
        let dist = g.bfs_multi(&a1, Some(params.s));
        dist.iter()
            .enumerate()
            .map(|(v, d)| d.is_some() && !b[v])
            .collect()
    };
    if forbidden[g.basepoint as usize] || forbidden[x as usize] {
        return Ok(None);
    }
    let Some(alpha2) = bfs_path_avoiding(g, g.basepoint, x, &forbidden, None, cap) else {
        return Ok(None);
    };
    let w = BigonWitness { x, alpha1: alpha1.to_vec(), alpha2, params };
    match verify_bigon(g, &w) {
        Ok(true) => Ok(Some(w)),
        Ok(false) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Yen-style k shortest simple paths from the basepoint to x (unweighted).
fn k_shortest_paths(g: &BallGraph, x: u32, k: usize, cap: u32) -> Vec<Vec<u32>> {
    let none = vec![false; g.len()];
    let Some(first) = bfs_path_avoiding(g, g.basepoint, x, &none, None, cap) else {
        return Vec::new();
    };
    let mut accepted: Vec<Vec<u32>> = vec![first];
    let mut candidates: Vec<Vec<u32>> = Vec::new();
    while accepted.len() < k {
        let prev = accepted.last().unwrap().clone();
        for i in 0..prev.len() - 1 {
            let spur = prev[i];
            let root = &prev[..=i];
            let mut banned_edges: HashSet<(u32, u32)> = HashSet::new();
            for p in &accepted {
                if p.len() > i + 1 && p[..=i] == *root {
                    banned_edges.insert((p[i], p[i + 1]));
                }
            }
            let mut forbidden = vec![false; g.len()];
            for &v in &root[..i] {
                forbidden[v as usize] = true;
            }
            let remaining = cap.saturating_sub(i as u32);
            if let Some(tail) =
                bfs_path_avoiding(g, spur, x, &forbidden, Some(&banned_edges), remaining)
            {
                let mut full = root[..i].to_vec();
                full.extend_from_slice(&tail);
                if full.len() - 1 <= cap as usize
                    && !accepted.contains(&full)
                    && !candidates.contains(&full)
                {
                    candidates.push(full);
                }
            }
        }
        if candidates.is_empty() {
            break;
        }
        // shortest candidate next; ties to lexicographically smallest
        candidates.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        accepted.push(candidates.remove(0));
    }
    accepted
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchStrategy {
    /// canonical geodesic as α₁
    Geodesic,
    /// k shortest simple paths as α₁ candidates
    KShortest(usize),
}

pub const DEFAULT_K_SHORTEST: usize = 16;

/// One-sided bigon search. A returned witness always passes verify_bigon;
/// `None` does not certify absence.
pub fn find_bigon(
    g: &BallGraph,
    x: u32,
    params: BigonParams,
    strategies: &[SearchStrategy],
) -> Result<Option<BigonWitness>> {
    let d = g.depth[x as usize];
    let cap = params.length_cap(d);
    let b = b_set(g, x, params.c);
    for strat in strategies {
        let candidates: Vec<Vec<u32>> = match strat {
            SearchStrategy::Geodesic => vec![g.geodesic(g.basepoint, x)?],
            SearchStrategy::KShortest(k) => k_shortest_paths(g, x, *k, cap),
        };
        for alpha1 in candidates {
            if alpha1.len() - 1 > cap as usize {
                continue;
            }
            if let Some(w) = complete_witness(g, x, params, &alpha1, &b, cap)? {
                return Ok(Some(w));
            }
        }
    }
    Ok(None)
}

pub const DEFAULT_DFS_BUDGET: usize = 20_000_000;

/// Complete decision on small instances: enumerate all simple α₁ paths of
/// length ≤ ⌊L·d⌋ by pruned DFS, and run the α₂ search for each. Restricting
/// to simple α₁ is justified because deleting a cycle from a path shrinks
/// its vertex set (condition 2 survives) and its length (condition 1
/// survives). The decision is relative to the stored graph; for ball
/// truncations, "false" is conclusive for the whole space only when
/// cap-length paths cannot leave the ball or the caller asserted exactness.
pub fn bigon_exists_exact(
    g: &BallGraph,
    x: u32,
    params: BigonParams,
    node_budget: usize,
) -> Result<bool> {
    let d = g.depth[x as usize];
    let cap = params.length_cap(d);
    let b = b_set(g, x, params.c);
    let dist_to_x = g.bfs(x, None);
    let mut visited = 0usize;
    let mut on_path = vec![false; g.len()];
    let mut path: Vec<u32> = vec![g.basepoint];
    on_path[g.basepoint as usize] = true;

    fn dfs(
        g: &BallGraph,
        x: u32,
        params: BigonParams,
        cap: u32,
        b: &[bool],
        dist_to_x: &[Option<u32>],
        path: &mut Vec<u32>,
        on_path: &mut [bool],
        visited: &mut usize,
        budget: usize,
    ) -> Result<bool> {
        *visited += 1;
        if *visited > budget {
            return Err(Error::Resource {
                what: "exact bigon search DFS nodes".into(),
                limit: budget,
            });
        }
        let cur = *path.last().unwrap();
        if cur == x {
            if complete_witness(g, x, params, path, b, cap)?.is_some() {
                return Ok(true);
            }
            // the path may continue past x (a non-geodesic α₁ may revisit
            // depth), so fall through and keep extending
        }
        let len = path.len() as u32 - 1;
        for &v in &g.adj[cur as usize] {
            if on_path[v as usize] {
                continue;
            }
            let Some(dv) = dist_to_x[v as usize] else { continue };
            if len + 1 + dv > cap {
                continue;
            }
            path.push(v);
            on_path[v as usize] = true;
            let found = dfs(g, x, params, cap, b, dist_to_x, path, on_path, visited, budget)?;
            path.pop();
            on_path[v as usize] = false;
            if found {
                return Ok(true);
            }
        }
        Ok(false)
    }

    dfs(
        g,
        x,
        params,
        cap,
        &b,
        &dist_to_x,
        &mut path,
        &mut on_path,
        &mut visited,
        node_budget,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountMode {
    /// certified witnesses only (lower bounds)
    Heuristic,
    /// complete decision per vertex (small instances)
    Exact,
}

#[derive(Serialize)]
pub struct BigonCountReport {
    #[serde(rename = "L")]
    pub l: String,
    pub s: u32,
    #[serde(rename = "C")]
    pub c: u32,
    pub mode: String,
    /// cumulative |{x : bigon at x, d(x₀,x) ≤ n}| for n = 0..=n_max
    pub counts: Vec<usize>,
    /// ⌊(radius − s)/L⌋, reported (not enforced; verification certifies
    /// per-pair instead)
    pub trusted_radius: i64,
    pub fitted_log_base: f64,
    pub fit_residual: f64,
    pub verdict: String,
}

pub struct CountOptions {
    pub mode: CountMode,
    pub slope_threshold: f64,
    /// counts at n ≤ none_bound are ignored by the none-found verdict
    /// (default 2C+1: below that scale B covers geodesics and every vertex
    /// is trivially a bigon point)
    pub none_bound: Option<u32>,
    pub strategies: Vec<SearchStrategy>,
    pub dfs_budget: usize,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            mode: CountMode::Heuristic,
            slope_threshold: 0.05,
            none_bound: None,
            strategies: vec![
                SearchStrategy::Geodesic,
                SearchStrategy::KShortest(DEFAULT_K_SHORTEST),
            ],
            dfs_budget: DEFAULT_DFS_BUDGET,
        }
    }
}

pub fn count_bigons(
    g: &BallGraph,
    params: BigonParams,
    n_max: u32,
    opts: &CountOptions,
) -> Result<BigonCountReport> {
    let n_max = n_max.min(g.radius);
    let mut per_depth = vec![0usize; n_max as usize + 1];
    for x in 0..g.len() as u32 {
        let d = g.depth[x as usize];
        if d > n_max {
            continue;
        }
        let positive = match opts.mode {
            CountMode::Heuristic => find_bigon(g, x, params, &opts.strategies)?.is_some(),
            CountMode::Exact => bigon_exists_exact(g, x, params, opts.dfs_budget)?,
        };
        if positive {
            per_depth[d as usize] += 1;
        }
    }
    let mut counts = per_depth;
    for i in 1..counts.len() {
        counts[i] += counts[i - 1];
    }
    let trusted = if params.l > Ratio::from_integer(0) {
        ((Ratio::from_integer(g.radius.saturating_sub(params.s) as i64)) / params.l)
            .floor()
            .to_integer()
    } else {
        0
    };
    // fit log(count) vs n over the top half of [1, n_max]
    let lo = 1 + (n_max as usize) / 2;
    let pts: Vec<(f64, f64)> = (lo..counts.len())
        .filter(|&n| counts[n] > 0)
        .map(|n| (n as f64, (counts[n] as f64).ln()))
        .collect();
    let (slope, residual) = if pts.len() >= 2 {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let (m, _, r) = linear_fit(&xs, &ys).unwrap_or((0.0, 0.0, 0.0));
        (m, r)
    } else {
        (0.0, 0.0)
    };
    let none_bound = opts.none_bound.unwrap_or(2 * params.c + 1);
    let verdict = if none_bound < n_max && per_depth_is_zero_beyond(&counts, none_bound) {
        "none-found"
    } else if pts.len() >= 2 && slope > opts.slope_threshold {
        "exponential-at-horizon"
    } else {
        "inconclusive"
    };
    Ok(BigonCountReport {
        l: ratio_string(params.l),
        s: params.s,
        c: params.c,
        mode: match opts.mode {
            CountMode::Heuristic => "heuristic".into(),
            CountMode::Exact => "exact".into(),
        },
        counts,
        trusted_radius: trusted,
        fitted_log_base: slope.exp(),
        fit_residual: residual,
        verdict: verdict.into(),
    })
}

fn per_depth_is_zero_beyond(cumulative: &[usize], bound: u32) -> bool {
    let b = bound as usize;
    cumulative[b..].iter().all(|&c| c == cumulative[b])
}
