//! Divergence: lengths of paths forced around forbidden balls, and the
//! construction turning a linear divergence bound into an explicit
//! (20D, s, 2s)-bigon.

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::Serialize;

use crate::bigons::{ratio_string, verify_bigon, BigonParams, BigonWitness};
use crate::error::{Error, Result};
use crate::fit::proportional_fit;
use crate::graph::BallGraph;

#[derive(Clone, Copy, Debug)]
pub struct DivergenceParams {
    /// fraction of d(c,{a,b}) used as forbidden radius (default 1/2)
    pub delta: Ratio<i64>,
    /// subtracted slack (default 2)
    pub gamma: Ratio<i64>,
}

impl Default for DivergenceParams {
    fn default() -> Self {
        DivergenceParams { delta: Ratio::new(1, 2), gamma: Ratio::from_integer(2) }
    }
}

impl DivergenceParams {
    /// ⌈delta·d − gamma⌉; negative means "no forbidden ball", 0 means {c}.
    pub fn forbidden_radius(&self, d: u32) -> i64 {
        (self.delta * Ratio::from_integer(d as i64) - self.gamma)
            .ceil()
            .to_integer()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DivLength {
    Finite(u32),
    UnboundedInBall,
}

impl DivLength {
    fn beats(self, other: DivLength) -> bool {
        match (self, other) {
            (DivLength::UnboundedInBall, DivLength::UnboundedInBall) => false,
            (DivLength::UnboundedInBall, _) => true,
            (_, DivLength::UnboundedInBall) => false,
            (DivLength::Finite(a), DivLength::Finite(b)) => a > b,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceRecord {
    pub a: u32,
    pub b: u32,
    /// the maximizing center (absent when no center imposes a constraint)
    pub c: Option<u32>,
    pub avoided_radius: i64,
    pub length: DivLength,
}

/// Shortest a→b length avoiding the forbidden ball around c.
pub fn divergence_rel(
    g: &BallGraph,
    a: u32,
    b: u32,
    c: u32,
    params: &DivergenceParams,
) -> Result<DivergenceRecord> {
    if c == a || c == b {
        return Err(Error::Precondition(
            "divergence center must differ from both endpoints".into(),
        ));
    }
    let dc = g
        .bfs(c, None)
        .iter()
        .zip(0u32..)
        .filter(|(_, v)| *v == a || *v == b)
        .filter_map(|(d, _)| *d)
        .min()
        .ok_or_else(|| Error::DisconnectedInBall("center sees neither endpoint".into()))?;
    let r = params.forbidden_radius(dc);
    let forbidden: Vec<bool> = if r < 0 {
        vec![false; g.len()]
    } else {
        g.bfs(c, Some(r as u32)).iter().map(|d| d.is_some()).collect()
    };
    if forbidden[a as usize] || forbidden[b as usize] {
        return Err(Error::Precondition(
            "forbidden ball swallowed an endpoint (degenerate parameters)".into(),
        ));
    }
    let length = shortest_avoiding(g, a, b, &forbidden);
    Ok(DivergenceRecord { a, b, c: Some(c), avoided_radius: r, length })
}

fn shortest_avoiding(g: &BallGraph, a: u32, b: u32, forbidden: &[bool]) -> DivLength {
    let mut dist = vec![u32::MAX; g.len()];
    let mut q = std::collections::VecDeque::new();
    dist[a as usize] = 0;
    q.push_back(a);
    while let Some(u) = q.pop_front() {
        if u == b {
            return DivLength::Finite(dist[u as usize]);
        }
        for &v in &g.adj[u as usize] {
            if dist[v as usize] == u32::MAX && !forbidden[v as usize] {
                dist[v as usize] = dist[u as usize] + 1;
                q.push_back(v);
            }
        }
    }
    DivLength::UnboundedInBall
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CandidateMode {
    /// all centers in the ball
    Exact,
    /// only centers whose forbidden ball touches the canonical a–b geodesic;
    /// all others yield exactly d(a,b), which is dominated
    Fast,
}

/// Div(a,b): the max of divergence_rel over centers (a lower bound for the
/// sup over the whole space). Ties break to the smallest center.
pub fn divergence_pair(
    g: &BallGraph,
    a: u32,
    b: u32,
    params: &DivergenceParams,
    mode: CandidateMode,
) -> Result<DivergenceRecord> {
    if a == b {
        return Err(Error::Precondition("divergence needs two distinct endpoints".into()));
    }
    let dab = g.distance(a, b)?;
    let mut best = DivergenceRecord {
        a,
        b,
        c: None,
        avoided_radius: -1,
        length: DivLength::Finite(dab),
    };
    let dist_a = g.bfs(a, None);
    let dist_b = g.bfs(b, None);
    let dist_geo: Option<Vec<Option<u32>>> = match mode {
        CandidateMode::Fast => Some(g.bfs_multi(&g.geodesic(a, b)?, None)),
        CandidateMode::Exact => None,
    };
    for c in 0..g.len() as u32 {
        if c == a || c == b {
            continue;
        }
        let (Some(da), Some(db)) = (dist_a[c as usize], dist_b[c as usize]) else {
            continue;
        };
        let r = params.forbidden_radius(da.min(db));
        if r < 0 {
            continue; // no constraint: yields exactly d(a,b)
        }
        if let Some(dg) = &dist_geo {
            match dg[c as usize] {
                Some(d) if (d as i64) <= r => {}
                _ => continue,
            }
        }
        let rec = divergence_rel(g, a, b, c, params)?;
        if rec.length.beats(best.length) {
            best = rec;
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug)]
pub enum PairMode {
    Exhaustive,
    /// sampled pairs per n with a fixed seed
    Sampled { pairs_per_n: usize, seed: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceFunctionEntry {
    pub n: u32,
    pub value: DivLength,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceFunctionReport {
    /// Div_X(n) for n = 1..=n_max; values are lower bounds ("≥"): the sup
    /// over centers is truncated to the stored ball
    pub entries: Vec<DivergenceFunctionEntry>,
    pub lower_bound_only: bool,
    /// least-squares D with Div_X(n) ≈ D·n over the top half (finite
    /// entries only), with the relative residual
    pub linear_coefficient: Option<f64>,
    pub relative_residual: Option<f64>,
    pub mode: String,
    pub seed: Option<u64>,
}

pub fn divergence_function(
    g: &BallGraph,
    n_max: u32,
    params: &DivergenceParams,
    mode: PairMode,
) -> Result<DivergenceFunctionReport> {
    let n_max = n_max.min(g.radius);
    // Pairs are anchored at the basepoint's ball: enumerate pairs (a,b) by
    // their distance; using depth(a), depth(b) ≤ n_max keeps d(a,b) ≤ 2n_max
    // candidates reachable. We measure d(a,b) exactly per pair.
    let verts: Vec<u32> =
        (0..g.len() as u32).filter(|&v| g.depth[v as usize] <= n_max).collect();
    let mut by_n: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n_max as usize + 1];
    for (i, &a) in verts.iter().enumerate() {
        let dist = g.bfs(a, Some(n_max));
        for &b in verts.iter().skip(i + 1) {
            if let Some(d) = dist[b as usize] {
                if d >= 1 {
                    by_n[d as usize].push((a, b));
                }
            }
        }
    }
    let (chosen, seed): (Vec<Vec<(u32, u32)>>, Option<u64>) = match mode {
        PairMode::Exhaustive => (by_n, None),
        PairMode::Sampled { pairs_per_n, seed } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let picked = by_n
                .into_iter()
                .map(|mut v| {
                    v.shuffle(&mut rng);
                    v.truncate(pairs_per_n);
                    v
                })
                .collect();
            (picked, Some(seed))
        }
    };
    let mut entries: Vec<DivergenceFunctionEntry> = Vec::new();
    let mut running: DivLength = DivLength::Finite(0);
    for n in 1..=n_max {
        for &(a, b) in &chosen[n as usize] {
            let rec = divergence_pair(g, a, b, params, CandidateMode::Fast)?;
            if rec.length.beats(running) {
                running = rec.length;
            }
        }
        entries.push(DivergenceFunctionEntry { n, value: running });
    }
    let lo = entries.len() / 2;
    let finite: Vec<(f64, f64)> = entries[lo..]
        .iter()
        .filter_map(|e| match e.value {
            DivLength::Finite(l) => Some((e.n as f64, l as f64)),
            DivLength::UnboundedInBall => None,
        })
        .collect();
    let fit = if finite.len() >= 2 && finite.len() == entries.len() - lo {
        let xs: Vec<f64> = finite.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = finite.iter().map(|p| p.1).collect();
        proportional_fit(&xs, &ys)
    } else {
        None
    };
    Ok(DivergenceFunctionReport {
        entries,
        lower_bound_only: true,
        linear_coefficient: fit.map(|f| f.0),
        relative_residual: fit.map(|f| f.1),
        mode: match mode {
            PairMode::Exhaustive => "exhaustive".into(),
            PairMode::Sampled { .. } => "sampled".into(),
        },
        seed,
    })
}

/// A geodesic segment from p of the requested length, every vertex w of
/// which satisfies the dichotomy d(w,p) ≤ 2s or d(w, geod) > s. An ideal
/// bi-infinite geodesic is approximated by the longest segment the ball
/// hosts; the dichotomy is re-verified vertex by vertex rather than taken
/// from theory.
pub fn find_separated_ray(
    g: &BallGraph,
    p: u32,
    geod: &[u32],
    s: u32,
    length: u32,
) -> Result<Vec<u32>> {
    if geod.first() != Some(&p) && geod.last() != Some(&p) {
        return Err(Error::Precondition("p must be an endpoint of the geodesic".into()));
    }
    let dist_p = g.bfs(p, None);
    let dist_geo = g.bfs_multi(geod, Some(s));
    let ok = |v: u32, dp: u32| dp <= 2 * s || dist_geo[v as usize].is_none();
    // DFS over geodesic segments (each extension increases d(p,·) by 1),
    // ascending vertex order for determinism.
    let mut path = vec![p];
    let mut on = vec![false; g.len()];
    on[p as usize] = true;
    fn dfs(
        g: &BallGraph,
        dist_p: &[Option<u32>],
        ok: &dyn Fn(u32, u32) -> bool,
        path: &mut Vec<u32>,
        on: &mut [bool],
        length: u32,
    ) -> bool {
        let len = path.len() as u32 - 1;
        if len == length {
            return true;
        }
        let cur = *path.last().unwrap();
        for &v in &g.adj[cur as usize] {
            if on[v as usize] {
                continue;
            }
            if dist_p[v as usize] != Some(len + 1) || !ok(v, len + 1) {
                continue;
            }
            path.push(v);
            on[v as usize] = true;
            if dfs(g, dist_p, ok, path, on, length) {
                return true;
            }
            path.pop();
            on[v as usize] = false;
        }
        false
    }
    if dfs(&g, &dist_p, &ok, &mut path, &mut on, length) {
        Ok(path)
    } else {
        Err(Error::Construction(format!(
            "no separated geodesic segment of length {length} from vertex {p} \
             within the stored ball (existence is not refuted)"
        )))
    }
}

/// The divergence-to-bigon construction: α₁ = canonical geodesic [x₀,x]; α₂
/// = ray segment to depth 10d, an avoiding path certified by divergence_rel,
/// and a ray segment back into x; parameters (20D, s, 2s). For d ≤ 4s the
/// doubled geodesic is already a witness.
pub fn construct_bigon_from_divergence(
    g: &BallGraph,
    x: u32,
    d_factor: Ratio<i64>,
    s: u32,
    div_params: &DivergenceParams,
) -> Result<BigonWitness> {
    if d_factor < Ratio::from_integer(1) {
        return Err(Error::Precondition("the divergence coefficient D must be ≥ 1".into()));
    }
    let d = g.depth[x as usize];
    let twenty_d = Ratio::from_integer(20) * d_factor;
    let params = BigonParams::new(twenty_d, s, 2 * s)?;
    let geod = g.geodesic(g.basepoint, x)?;
    if d <= 4 * s {
        let w = BigonWitness { x, alpha1: geod.clone(), alpha2: geod, params };
        return match verify_bigon(g, &w)? {
            true => Ok(w),
            false => Err(Error::Construction(
                "doubled geodesic failed verification (should be impossible for d ≤ 4s)"
                    .into(),
            )),
        };
    }
    if g.radius < 10 * d {
        return Err(Error::Construction(format!(
            "ball radius {} cannot host the construction at depth {d}; radius ≥ {} required",
            g.radius,
            10 * d
        )));
    }
    let beta = find_separated_ray(g, g.basepoint, &geod, s, 10 * d)?;
    let geod_rev: Vec<u32> = geod.iter().rev().copied().collect();
    let beta_prime = find_separated_ray(g, x, &geod_rev, s, 9 * d)?;
    let y = *beta.last().unwrap();
    let y_prime = *beta_prime.last().unwrap();
    let d1y_prime = g.distance(g.basepoint, y_prime)?;
    if d1y_prime < 8 * d {
        return Err(Error::Construction(format!(
            "ray endpoint too close to the basepoint: d(1,y') = {d1y_prime} < 8d = {}",
            8 * d
        )));
    }
    let rec = divergence_rel(g, y, y_prime, g.basepoint, div_params)?;
    let avoid_len = match rec.length {
        DivLength::Finite(l) => l,
        DivLength::UnboundedInBall => {
            return Err(Error::Construction(
                "no avoiding path between the ray endpoints inside the ball".into(),
            ))
        }
    };
    // the forbidden ball must contain N_s([1,x]) so the middle piece stays
    // separated from the geodesic
    let ns_geod = g.neighborhood(&geod, s);
    let max_depth = ns_geod.iter().map(|&v| g.depth[v as usize] as i64).max().unwrap_or(0);
    if max_depth > rec.avoided_radius {
        return Err(Error::Construction(format!(
            "N_{s}([x₀,x]) reaches depth {max_depth}, beyond the avoided radius {}",
            rec.avoided_radius
        )));
    }
    let bound = d_factor * Ratio::from_integer(d as i64);
    if Ratio::from_integer(avoid_len as i64) > bound {
        return Err(Error::Construction(format!(
            "avoiding path length {avoid_len} exceeds D·d = {}",
            ratio_string(bound)
        )));
    }
    // arithmetic audit: 10d + 9d + D·d ≤ 20D·d, exactly
    let lhs = Ratio::from_integer(19 * d as i64) + bound;
    let rhs = twenty_d * Ratio::from_integer(d as i64);
    if lhs > rhs {
        return Err(Error::Construction(format!(
            "length audit failed: 19d + Dd = {} > 20Dd = {}",
            ratio_string(lhs),
            ratio_string(rhs)
        )));
    }
    // assemble α₂ = β (x₀→y) + avoiding path (y→y′) + reversed β′ (y′→x)
    let forbidden: Vec<bool> = if rec.avoided_radius < 0 {
        vec![false; g.len()]
    } else {
        g.bfs(g.basepoint, Some(rec.avoided_radius as u32))
            .iter()
            .map(|dd| dd.is_some())
            .collect()
    };
    let middle = bfs_avoiding_path(g, y, y_prime, &forbidden).ok_or_else(|| {
        Error::Construction("avoiding path vanished on reconstruction".into())
    })?;
    let mut alpha2 = beta;
    alpha2.extend_from_slice(&middle[1..]);
    let back: Vec<u32> = beta_prime.iter().rev().copied().collect();
    alpha2.extend_from_slice(&back[1..]);
    let w = BigonWitness { x, alpha1: geod, alpha2, params };
    match verify_bigon(g, &w)? {
        true => Ok(w),
        false => Err(Error::Construction(
            "constructed witness failed verification".into(),
        )),
    }
}

fn bfs_avoiding_path(g: &BallGraph, a: u32, b: u32, forbidden: &[bool]) -> Option<Vec<u32>> {
    let mut parent = vec![u32::MAX; g.len()];
    let mut seen = vec![false; g.len()];
    let mut q = std::collections::VecDeque::new();
    seen[a as usize] = true;
    q.push_back(a);
    while let Some(u) = q.pop_front() {
        if u == b {
            let mut path = vec![b];
            let mut cur = b;
            while cur != a {
                cur = parent[cur as usize];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &v in &g.adj[u as usize] {
            if !seen[v as usize] && (!forbidden[v as usize] || v == b) {
                seen[v as usize] = true;
                parent[v as usize] = u;
                q.push_back(v);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::vertex_budget;
    use crate::models::{GroupSpec, Model};

    fn ball(spec: &str, radius: u32) -> (Model, BallGraph) {
        let s = GroupSpec::parse(spec).unwrap();
        let m = Model::from_spec(&s).unwrap();
        let g = BallGraph::build(&m, spec, radius, vertex_budget(None)).unwrap();
        (m, g)
    }

    #[test]
    fn forbidden_radius_arithmetic() {
        let p = DivergenceParams::default();
        assert_eq!(p.forbidden_radius(10), 3);
        assert_eq!(p.forbidden_radius(3), 0); // ⌈3/2 − 2⌉ = 0: just {c}
        assert_eq!(p.forbidden_radius(1), -1); // no ball
        assert_eq!(p.forbidden_radius(0), -2);
    }

    #[test]
    fn grid_closed_form() {
        // a=(−n,0), b=(n,0), c=origin: length = 2n + 2r + 2
        let (m, g) = ball("abelian(2)", 16);
        for n in [6i64, 8, 10] {
            let a = g.vertex_of_word(&m, &format!("a^-{n}")).unwrap();
            let b = g.vertex_of_word(&m, &format!("a^{n}")).unwrap();
            let rec = divergence_rel(&g, a, b, 0, &DivergenceParams::default()).unwrap();
            let r = (n as f64 / 2.0 - 2.0).ceil() as i64;
            assert_eq!(rec.avoided_radius, r);
            assert_eq!(rec.length, DivLength::Finite((2 * n + 2 * r + 2) as u32));
        }
    }

    #[test]
    fn radius_below_zero_gives_plain_distance() {
        let (m, g) = ball("abelian(2)", 6);
        let a = g.vertex_of_word(&m, "a^-1").unwrap();
        let b = g.vertex_of_word(&m, "a").unwrap();
        let c = g.vertex_of_word(&m, "b").unwrap();
        let rec = divergence_rel(&g, a, b, c, &DivergenceParams::default()).unwrap();
        assert!(rec.avoided_radius < 0);
        assert_eq!(rec.length, DivLength::Finite(2));
    }

    #[test]
    fn tree_center_on_geodesic_disconnects() {
        let (m, g) = ball("free(2)", 8);
        let a = g.vertex_of_word(&m, "a^-3").unwrap();
        let b = g.vertex_of_word(&m, "a^3").unwrap();
        let rec = divergence_rel(&g, a, b, 0, &DivergenceParams::default()).unwrap();
        assert_eq!(rec.avoided_radius, 0);
        assert_eq!(rec.length, DivLength::UnboundedInBall);
    }

    #[test]
    fn center_must_differ_from_endpoints() {
        let (_, g) = ball("abelian(2)", 3);
        assert!(divergence_rel(&g, 0, 1, 0, &DivergenceParams::default()).is_err());
    }

    #[test]
    fn pair_fast_matches_exact_on_grid() {
        let (m, g) = ball("abelian(2)", 10);
        let a = g.vertex_of_word(&m, "a^-3").unwrap();
        let b = g.vertex_of_word(&m, "a^3").unwrap();
        let p = DivergenceParams::default();
        let fast = divergence_pair(&g, a, b, &p, CandidateMode::Fast).unwrap();
        let exact = divergence_pair(&g, a, b, &p, CandidateMode::Exact).unwrap();
        assert_eq!(fast.length, exact.length);
    }

    #[test]
    fn adjacent_pair_divergence_is_one() {
        let (_, g) = ball("abelian(2)", 6);
        let a = g.adj[0][0];
        let rec =
            divergence_pair(&g, 0, a, &DivergenceParams::default(), CandidateMode::Exact)
                .unwrap();
        assert_eq!(rec.length, DivLength::Finite(1));
    }

    #[test]
    fn divergence_function_linear_on_grid() {
        let (_, g) = ball("abelian(2)", 10);
        let rep = divergence_function(
            &g,
            8,
            &DivergenceParams::default(),
            PairMode::Exhaustive,
        )
        .unwrap();
        assert_eq!(rep.entries.len(), 8);
        let d = rep.linear_coefficient.expect("finite linear fit");
        assert!(d > 1.0 && d <= 4.0, "grid divergence slope {d}");
        // prefix maxima are nondecreasing
        for w in rep.entries.windows(2) {
            if let (DivLength::Finite(a), DivLength::Finite(b)) = (w[0].value, w[1].value) {
                assert!(a <= b);
            }
        }
    }

    #[test]
    fn divergence_function_unbounded_on_tree_at_scale() {
        let (_, g) = ball("free(2)", 8);
        let rep = divergence_function(
            &g,
            8,
            &DivergenceParams::default(),
            PairMode::Sampled { pairs_per_n: 16, seed: 7 },
        )
        .unwrap();
        // pairs at distance ≥ 6 admit a disconnecting center (radius 0 at
        // d(c,{a,b}) = 3); below that the forbidden ball is empty or misses
        assert_eq!(rep.entries[7].value, DivLength::UnboundedInBall);
        assert!(matches!(rep.entries[1].value, DivLength::Finite(_)));
    }

    #[test]
    fn separated_ray_on_grid() {
        let (m, g) = ball("abelian(2)", 10);
        let x = g.vertex_of_word(&m, "a^5").unwrap();
        let geod = g.geodesic(0, x).unwrap();
        let ray = find_separated_ray(&g, 0, &geod, 2, 9).unwrap();
        assert_eq!(ray.len(), 10);
        // re-verify the dichotomy directly
        let dist_geo = g.bfs_multi(&geod, None);
        for (i, &w) in ray.iter().enumerate() {
            let dp = i as u32;
            assert!(
                dp <= 4 || dist_geo[w as usize].map_or(true, |d| d > 2),
                "dichotomy violated at ray position {i}"
            );
        }
    }

    #[test]
    fn construct_trivial_branch() {
        let (m, g) = ball("abelian(2)", 10);
        let x = g.vertex_of_word(&m, "a^3 b").unwrap(); // d = 4 ≤ 4s with s=2
        let w = construct_bigon_from_divergence(
            &g,
            x,
            Ratio::from_integer(2),
            2,
            &DivergenceParams::default(),
        )
        .unwrap();
        assert_eq!(w.alpha1, w.alpha2);
    }

    #[test]
    fn construct_on_grid_small_scale() {
        // s = 1: x at depth d = 4s+2 = 6 needs radius ≥ 10d = 60.
        // The hypothesis is Div(20d) ≤ D·d, so D must absorb the divergence
        // at scale 20d: with grid slope ≈ 3 that means D ≈ 60; D = 30
        // suffices for the particular avoiding path here.
        let (m, g) = ball("abelian(2)", 62);
        let x = g.vertex_of_word(&m, "a^6").unwrap();
        let w = construct_bigon_from_divergence(
            &g,
            x,
            Ratio::from_integer(30),
            1,
            &DivergenceParams::default(),
        )
        .unwrap();
        assert!(verify_bigon(&g, &w).unwrap());
        assert_eq!(w.params.s, 1);
        assert_eq!(w.params.c, 2);
        assert_eq!(w.params.l, Ratio::from_integer(600));
        // arithmetic audit (also enforced inside the construction)
        let d = g.depth[x as usize] as i64;
        assert!(Ratio::from_integer(19 * d) + Ratio::from_integer(30 * d)
            <= Ratio::from_integer(600 * d));
    }

    #[test]
    fn construct_reports_radius_shortfall() {
        let (m, g) = ball("abelian(2)", 12);
        let x = g.vertex_of_word(&m, "a^10").unwrap();
        let err = construct_bigon_from_divergence(
            &g,
            x,
            Ratio::from_integer(4),
            2,
            &DivergenceParams::default(),
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
