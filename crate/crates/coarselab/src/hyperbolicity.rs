//! Hyperbolicity estimates on finite graphs: thin-triangle and four-point
//! delta, geodesic-projection defect checks, and detour statistics around
//! disjoint forbidden balls.

use num_rational::Ratio;
use rand::Rng;
use rand::SeedableRng;

use crate::bigons::{ratio_string, BigonWitness};
use crate::divergence::DivLength;
use crate::error::{Error, Result};
use crate::graph::BallGraph;

#[derive(Clone, Copy, Debug)]
pub enum DeltaMode {
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct DeltaReport {
    pub method: &'static str,
    /// a lower bound for the true constant except on trees, where the
    /// canonical geodesic is the only one
    pub delta: Ratio<i64>,
    pub exhaustive: bool,
    pub tuples_examined: usize,
    pub seed: Option<u64>,
}

impl DeltaReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "method": self.method,
            "delta": ratio_string(self.delta),
            "delta_float": self.delta.to_integer() as f64
                + (*self.delta.numer() % *self.delta.denom()) as f64
                    / *self.delta.denom() as f64,
            "mode": if self.exhaustive { "exhaustive" } else { "sampled" },
            "samples": self.tuples_examined,
            "seed": self.seed,
        })
    }
}

/// hard cap on vertices for exhaustive tuple enumeration
const EXHAUSTIVE_VERTEX_CAP: usize = 150;

fn all_pairs(g: &BallGraph) -> Vec<Vec<Option<u32>>> {
    (0..g.len() as u32).map(|v| g.bfs(v, None)).collect()
}

fn check_exhaustive_cap(g: &BallGraph, what: &str) -> Result<()> {
    if g.len() > EXHAUSTIVE_VERTEX_CAP {
        return Err(Error::Resource {
            what: format!("exhaustive {what} enumeration on {} vertices", g.len()),
            limit: EXHAUSTIVE_VERTEX_CAP,
        });
    }
    Ok(())
}

/// Geodesic from u to v walking a precomputed distance matrix (same
/// smallest-index tie-break as BallGraph::geodesic).
fn geodesic_from_matrix(g: &BallGraph, dist: &[Vec<Option<u32>>], u: u32, v: u32) -> Vec<u32> {
    let row = &dist[v as usize];
    let mut d = row[u as usize].expect("connected ball");
    let mut path = vec![u];
    let mut cur = u;
    while d > 0 {
        let next = g.adj[cur as usize]
            .iter()
            .copied()
            .find(|&w| row[w as usize] == Some(d - 1))
            .expect("distance decreases along some edge");
        path.push(next);
        cur = next;
        d -= 1;
    }
    path
}

/// One-sided thinness defect of the triangle (x,y,z) with canonical
/// geodesic sides, symmetrized over the three sides.
fn triangle_defect(g: &BallGraph, dist: &[Vec<Option<u32>>], x: u32, y: u32, z: u32) -> u32 {
    let sides = [
        geodesic_from_matrix(g, dist, x, y),
        geodesic_from_matrix(g, dist, y, z),
        geodesic_from_matrix(g, dist, z, x),
    ];
    let mut worst = 0u32;
    for i in 0..3 {
        let others: Vec<u32> = sides[(i + 1) % 3]
            .iter()
            .chain(sides[(i + 2) % 3].iter())
            .copied()
            .collect();
        for &p in &sides[i] {
            let d = others
                .iter()
                .filter_map(|&q| dist[p as usize][q as usize])
                .min()
                .unwrap_or(0);
            worst = worst.max(d);
        }
    }
    worst
}

pub fn thin_triangle_delta(g: &BallGraph, mode: DeltaMode) -> Result<DeltaReport> {
    let dist = all_pairs(g);
    let n = g.len() as u32;
    let mut best = 0u32;
    let (tuples, exhaustive, seed) = match mode {
        DeltaMode::Exhaustive => {
            check_exhaustive_cap(g, "triple")?;
            let mut count = 0usize;
            for x in 0..n {
                for y in x + 1..n {
                    for z in y + 1..n {
                        best = best.max(triangle_defect(g, &dist, x, y, z));
                        count += 1;
                    }
                }
            }
            (count, true, None)
        }
        DeltaMode::Sampled { samples, seed } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                let x = rng.gen_range(0..n);
                let y = rng.gen_range(0..n);
                let z = rng.gen_range(0..n);
                if x == y || y == z || x == z {
                    continue;
                }
                best = best.max(triangle_defect(g, &dist, x, y, z));
            }
            (samples, false, Some(seed))
        }
    };
    Ok(DeltaReport {
        method: "thin-triangle",
        delta: Ratio::from_integer(best as i64),
        exhaustive,
        tuples_examined: tuples,
        seed,
    })
}

pub fn four_point_delta(g: &BallGraph, mode: DeltaMode) -> Result<DeltaReport> {
    let dist = all_pairs(g);
    let d = |a: u32, b: u32| dist[a as usize][b as usize].expect("connected ball") as i64;
    let defect2 = |x: u32, y: u32, z: u32, w: u32| -> i64 {
        // twice the Gromov-product defect: S1 − S2 over the three pairings
        let mut sums = [d(x, y) + d(z, w), d(x, z) + d(y, w), d(x, w) + d(y, z)];
        sums.sort_unstable();
        sums[2] - sums[1]
    };
    let n = g.len() as u32;
    let mut best2 = 0i64;
    let (tuples, exhaustive, seed) = match mode {
        DeltaMode::Exhaustive => {
            check_exhaustive_cap(g, "4-tuple")?;
            let mut count = 0usize;
            for x in 0..n {
                for y in x + 1..n {
                    for z in y + 1..n {
                        for w in z + 1..n {
                            best2 = best2.max(defect2(x, y, z, w));
                            count += 1;
                        }
                    }
                }
            }
            (count, true, None)
        }
        DeltaMode::Sampled { samples, seed } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                let mut t = [0u32; 4];
                for slot in t.iter_mut() {
                    *slot = rng.gen_range(0..n);
                }
                best2 = best2.max(defect2(t[0], t[1], t[2], t[3]));
            }
            (samples, false, Some(seed))
        }
    };
    Ok(DeltaReport {
        method: "four-point",
        delta: Ratio::new(best2, 2),
        exhaustive,
        tuples_examined: tuples,
        seed,
    })
}

#[derive(Clone, Debug)]
pub struct ProjectionReport {
    pub samples: usize,
    pub seed: u64,
    pub max_defect: i64,
    /// 8·delta
    pub bound: Ratio<i64>,
    pub defect_violations: usize,
    /// failures of the midpoint clause: a vertex of [p′,q′] farther than
    /// 2·delta from both of its endpoints but farther than 2·delta from [p,q]
    pub midpoint_violations: usize,
}

/// Closest-point projection of p onto the path `geo`, ties to the smallest
/// vertex index.
fn project(dist_from_p: &[Option<u32>], geo: &[u32]) -> u32 {
    let mut best = geo[0];
    let mut bd = dist_from_p[geo[0] as usize].expect("connected ball");
    for &v in &geo[1..] {
        let d = dist_from_p[v as usize].expect("connected ball");
        if d < bd || (d == bd && v < best) {
            bd = d;
            best = v;
        }
    }
    best
}

/// Samples x,y,p,q, projects p,q onto the canonical [x,y], and measures
/// d(p′,q′) − d(p,q) against the 8·delta bound, plus the midpoint clause.
pub fn projection_defect_check(
    g: &BallGraph,
    delta: Ratio<i64>,
    samples: usize,
    seed: u64,
) -> Result<ProjectionReport> {
    if delta < Ratio::from_integer(1) {
        return Err(Error::Precondition("projection defect check needs delta ≥ 1".into()));
    }
    let n = g.len() as u32;
    if n < 2 {
        return Err(Error::Precondition("graph too small".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let two_delta = Ratio::from_integer(2) * delta;
    let mut max_defect = i64::MIN;
    let mut defect_violations = 0usize;
    let mut midpoint_violations = 0usize;
    for _ in 0..samples {
        let x = rng.gen_range(0..n);
        let y = rng.gen_range(0..n);
        if x == y {
            continue;
        }
        let p = rng.gen_range(0..n);
        let q = rng.gen_range(0..n);
        let geo = g.geodesic(x, y)?;
        let dist_p = g.bfs(p, None);
        let dist_q = g.bfs(q, None);
        let pp = project(&dist_p, &geo);
        let qp = project(&dist_q, &geo);
        let dpq = dist_p[q as usize].expect("connected ball") as i64;
        let dprime = g.distance(pp, qp)? as i64;
        let defect = dprime - dpq;
        max_defect = max_defect.max(defect);
        if Ratio::from_integer(defect) > Ratio::from_integer(8) * delta {
            defect_violations += 1;
        }
        // midpoint clause over the canonical [p′,q′]
        if p != q {
            let inner = g.geodesic(pp, qp)?;
            let d_pq_geo = g.bfs_multi(&g.geodesic(p, q)?, None);
            for (i, &m) in inner.iter().enumerate() {
                let from_start = i as i64;
                let from_end = (inner.len() - 1 - i) as i64;
                if Ratio::from_integer(from_start) > two_delta
                    && Ratio::from_integer(from_end) > two_delta
                {
                    let dm = d_pq_geo[m as usize].expect("connected ball") as i64;
                    if Ratio::from_integer(dm) > two_delta {
                        midpoint_violations += 1;
                    }
                }
            }
        }
    }
    Ok(ProjectionReport {
        samples,
        seed,
        max_defect: if max_defect == i64::MIN { 0 } else { max_defect },
        bound: Ratio::from_integer(8) * delta,
        defect_violations,
        midpoint_violations,
    })
}

#[derive(Clone, Debug)]
pub struct DetourRecord {
    pub s: u32,
    pub k: usize,
    pub centers: Vec<u32>,
    pub length: DivLength,
}

/// Places k disjoint radius-s balls greedily along the canonical [x,y]
/// (every 2s+1 steps, centers at least s from the endpoints) and reports
/// the shortest avoiding-path length.
pub fn detour_statistics(
    g: &BallGraph,
    x: u32,
    y: u32,
    s: u32,
    k: usize,
) -> Result<DetourRecord> {
    let geo = g.geodesic(x, y)?;
    let len = geo.len() as u32 - 1;
    let mut centers = Vec::new();
    // closed balls: a center at distance exactly s would contain the
    // endpoint, so keep strictly more than s away
    let mut pos = s + 1;
    while centers.len() < k && pos + s + 1 <= len {
        centers.push(geo[pos as usize]);
        pos += 2 * s + 1;
    }
    if centers.len() < k {
        return Err(Error::Precondition(format!(
            "cannot place {k} disjoint radius-{s} balls on a geodesic of length {len}"
        )));
    }
    let mut forbidden = vec![false; g.len()];
    for &c in &centers {
        for (v, d) in g.bfs(c, Some(s)).iter().enumerate() {
            if d.is_some() {
                forbidden[v] = true;
            }
        }
    }
    if forbidden[x as usize] || forbidden[y as usize] {
        return Err(Error::Precondition("a forbidden ball swallowed an endpoint".into()));
    }
    let mut dist = vec![u32::MAX; g.len()];
    let mut q = std::collections::VecDeque::new();
    dist[x as usize] = 0;
    q.push_back(x);
    let mut length = DivLength::UnboundedInBall;
    while let Some(u) = q.pop_front() {
        if u == y {
            length = DivLength::Finite(dist[u as usize]);
            break;
        }
        for &v in &g.adj[u as usize] {
            if dist[v as usize] == u32::MAX && !forbidden[v as usize] {
                dist[v as usize] = dist[u as usize] + 1;
                q.push_back(v);
            }
        }
    }
    Ok(DetourRecord { s, k, centers, length })
}

#[derive(Clone, Debug)]
pub struct Claim3Report {
    pub witnesses_checked: usize,
    pub applicable: usize,
    pub violations: usize,
}

/// For each verified witness whose separation s is at least 100·delta, at
/// least one side must have length ≥ L·d(x₀,x). Vacuously true when no
/// witness reaches that separation.
pub fn long_side_check(
    g: &BallGraph,
    witnesses: &[BigonWitness],
    delta: Ratio<i64>,
) -> Claim3Report {
    let threshold = Ratio::from_integer(100) * delta;
    let mut applicable = 0usize;
    let mut violations = 0usize;
    for w in witnesses {
        if Ratio::from_integer(w.params.s as i64) < threshold {
            continue;
        }
        applicable += 1;
        let d = g.depth[w.x as usize] as i64;
        let bound = w.params.l * Ratio::from_integer(d);
        let l1 = Ratio::from_integer(w.alpha1.len() as i64 - 1);
        let l2 = Ratio::from_integer(w.alpha2.len() as i64 - 1);
        if l1 < bound && l2 < bound {
            violations += 1;
        }
    }
    Claim3Report { witnesses_checked: witnesses.len(), applicable, violations }
}
