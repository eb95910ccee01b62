//! Coarse maps between ball graphs: measured control functions, basepoint
//! changes, and pushing bigon witnesses through a coarse embedding.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::bigons::{verify_bigon, BigonParams, BigonWitness};
use crate::error::{Error, Result};
use crate::graph::BallGraph;
use crate::models::Model;

#[derive(Clone, Debug)]
pub struct CoarseMap {
    pub name: String,
    /// f: source vertex index → target vertex index
    pub map: Vec<u32>,
}

/// JSON map-file payload: {source_spec, target_spec, pairs}.
#[derive(Serialize, Deserialize)]
pub struct MapFile {
    pub source_spec: String,
    pub target_spec: String,
    pub pairs: Vec<(u32, u32)>,
}

impl CoarseMap {
    pub fn identity(g: &BallGraph) -> CoarseMap {
        CoarseMap { name: "identity".into(), map: (0..g.len() as u32).collect() }
    }

    /// Inclusion of the source Cayley graph into a target whose first
    /// generators agree with the source's (e.g. a product's left factor):
    /// source words are re-read verbatim in the target and normalized there.
    pub fn factor_inclusion(
        src: &BallGraph,
        tgt: &BallGraph,
        tgt_model: &Model,
    ) -> Result<CoarseMap> {
        let src_words = src
            .words
            .as_ref()
            .ok_or_else(|| Error::Precondition("source graph has no word labels".into()))?;
        let tgt_words = tgt
            .words
            .as_ref()
            .ok_or_else(|| Error::Precondition("target graph has no word labels".into()))?;
        let index: std::collections::HashMap<&crate::word::Word, u32> =
            tgt_words.iter().zip(0u32..).collect();
        let mut map = Vec::with_capacity(src_words.len());
        for w in src_words {
            let nf = tgt_model.normal_form(w);
            let v = *index.get(&nf).ok_or_else(|| {
                Error::Precondition(format!(
                    "image of {} lies outside the target ball",
                    w.display(&src.generators)
                ))
            })?;
            map.push(v);
        }
        Ok(CoarseMap { name: "factor-inclusion".into(), map })
    }

    pub fn from_pairs(src: &BallGraph, tgt: &BallGraph, pairs: &[(u32, u32)]) -> Result<CoarseMap> {
        let mut map = vec![u32::MAX; src.len()];
        for &(s, t) in pairs {
            if s as usize >= src.len() || t as usize >= tgt.len() {
                return Err(Error::Precondition(format!(
                    "pair ({s}, {t}) outside the graphs"
                )));
            }
            map[s as usize] = t;
        }
        if let Some(missing) = map.iter().position(|&v| v == u32::MAX) {
            return Err(Error::Precondition(format!(
                "map is not total: source vertex {missing} has no image"
            )));
        }
        Ok(CoarseMap { name: "pairs".into(), map })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CoarseReport {
    /// max d_Y(f(u), f(v)) over sampled adjacent source pairs
    pub k: u32,
    /// rho[n] = min d_Y over sampled pairs at source distance n (empirical
    /// lower control); None where no pair was sampled
    pub rho: Vec<Option<u32>>,
    /// rho stopped growing while n doubled — the map fails properness at
    /// this scale (reported, not an error)
    pub non_proper: bool,
    pub vertices_sampled: usize,
}

impl CoarseReport {
    pub fn rho_at(&self, s: u32) -> Result<u32> {
        self.rho
            .get(s as usize)
            .copied()
            .flatten()
            .ok_or_else(|| {
                Error::Precondition(format!("no sampled pair at source distance {s}"))
            })
    }
}

/// Measures K and the lower control envelope over all pairs whose first
/// vertex lies in a deterministic sample (every ⌈N/budget⌉-th vertex).
pub fn verify_coarse(
    src: &BallGraph,
    tgt: &BallGraph,
    m: &CoarseMap,
    vertex_budget: usize,
) -> Result<CoarseReport> {
    if m.map.len() != src.len() {
        return Err(Error::Precondition("map is not total on the source".into()));
    }
    if let Some(&bad) = m.map.iter().find(|&&v| v as usize >= tgt.len()) {
        return Err(Error::Precondition(format!(
            "image vertex {bad} outside the target ball"
        )));
    }
    let n = src.len();
    let stride = n.div_ceil(vertex_budget.max(1));
    let mut k = 0u32;
    let mut rho: Vec<Option<u32>> = Vec::new();
    let mut sampled = 0usize;
    for u in (0..n as u32).step_by(stride) {
        sampled += 1;
        let dx = src.bfs(u, None);
        let dy = tgt.bfs(m.map[u as usize], None);
        for v in 0..n as u32 {
            let (Some(a), Some(b)) = (dx[v as usize], dy[m.map[v as usize] as usize]) else {
                continue;
            };
            if a as usize >= rho.len() {
                rho.resize(a as usize + 1, None);
            }
            let slot = &mut rho[a as usize];
            *slot = Some(slot.map_or(b, |cur| cur.min(b)));
            if a == 1 {
                k = k.max(b);
            }
        }
    }
    let mut non_proper = false;
    for i in 1..rho.len() {
        if 2 * i < rho.len() {
            if let (Some(lo), Some(hi)) = (rho[i], rho[2 * i]) {
                if hi <= lo {
                    non_proper = true;
                }
            }
        }
    }
    Ok(CoarseReport { k, rho, non_proper, vertices_sampled: sampled })
}

/// Re-expresses a bigon based at x₀′ as one based at the graph basepoint by
/// prefixing both sides with the canonical geodesic x₀ → x₀′; parameters
/// become (2L+1, s, C+d) with d = d(x₀, x₀′).
pub fn rebase_bigon(g: &BallGraph, w: &BigonWitness, x0_prime: u32) -> Result<BigonWitness> {
    if w.alpha1.first() != Some(&x0_prime) || w.alpha2.first() != Some(&x0_prime) {
        return Err(Error::Precondition(
            "input witness paths must start at the old basepoint".into(),
        ));
    }
    let d = g.distance(g.basepoint, x0_prime)?;
    let dx = g.depth[w.x as usize];
    if dx < d {
        return Err(Error::Precondition(format!(
            "basepoint-change hypothesis fails: d(x₀,x) = {dx} < d(x₀,x₀′) = {d}"
        )));
    }
    let params = BigonParams::new(
        Ratio::from_integer(2) * w.params.l + Ratio::from_integer(1),
        w.params.s,
        w.params.c + d,
    )?;
    let prefix = g.geodesic(g.basepoint, x0_prime)?;
    let glue = |tail: &[u32]| -> Vec<u32> {
        let mut p = prefix.clone();
        p.extend_from_slice(&tail[1..]);
        p
    };
    let out = BigonWitness {
        x: w.x,
        alpha1: glue(&w.alpha1),
        alpha2: glue(&w.alpha2),
        params,
    };
    // length arithmetic, checked exactly:
    // L·d(x₀′,x) + d ≤ L·(d+dx) + d ≤ (2L+1)·dx under dx ≥ d
    for a in [&out.alpha1, &out.alpha2] {
        let len = Ratio::from_integer(a.len() as i64 - 1);
        if len > params.l * Ratio::from_integer(dx as i64) {
            return Err(Error::Construction(format!(
                "rebased side of length {} exceeds (2L+1)·d(x₀,x)",
                a.len() - 1
            )));
        }
    }
    match verify_bigon(g, &out)? {
        true => Ok(out),
        false => Err(Error::Construction(
            "rebased witness failed verification".into(),
        )),
    }
}

/// Pushes a verified (L,s,C)-bigon through a coarse map: images of path
/// vertices joined by canonical target geodesics, parameters
/// (K·L·ε⁻¹, ρ(s)−2K, K·C+K).
pub fn push_bigon(
    src: &BallGraph,
    tgt: &BallGraph,
    m: &CoarseMap,
    report: &CoarseReport,
    w: &BigonWitness,
    epsilon: Ratio<i64>,
) -> Result<BigonWitness> {
    if epsilon <= Ratio::from_integer(0) {
        return Err(Error::Precondition("epsilon must be positive".into()));
    }
    let k = report.k;
    let rho_s = report.rho_at(w.params.s)?;
    if rho_s <= 2 * k {
        return Err(Error::Precondition(format!(
            "separation collapses: rho(s) = {rho_s} ≤ 2K = {}",
            2 * k
        )));
    }
    let fx = m.map[w.x as usize];
    let y0 = m.map[src.basepoint as usize];
    if y0 != tgt.basepoint {
        return Err(Error::Precondition(
            "map must send the source basepoint to the target basepoint".into(),
        ));
    }
    // A_ε membership: the image of x keeps a definite fraction of its depth
    let dx = src.depth[w.x as usize];
    let dy = tgt.distance(y0, fx)?;
    if Ratio::from_integer(dy as i64) <= epsilon * Ratio::from_integer(dx as i64) {
        return Err(Error::Precondition(format!(
            "x is not in A_ε: d_Y(y₀, f(x)) = {dy} ≤ ε·d_X(x₀, x) = ε·{dx}"
        )));
    }
    let params = BigonParams::new(
        Ratio::from_integer(k as i64) * w.params.l / epsilon,
        rho_s - 2 * k,
        k * w.params.c + k,
    )?;
    let push_path = |path: &[u32]| -> Result<Vec<u32>> {
        let mut out = vec![m.map[path[0] as usize]];
        for v in &path[1..] {
            let img = m.map[*v as usize];
            let last = *out.last().unwrap();
            if img == last {
                continue;
            }
            let seg = tgt.geodesic(last, img)?;
            out.extend_from_slice(&seg[1..]);
        }
        Ok(out)
    };
    let out = BigonWitness {
        x: fx,
        alpha1: push_path(&w.alpha1)?,
        alpha2: push_path(&w.alpha2)?,
        params,
    };
    match verify_bigon(tgt, &out)? {
        true => Ok(out),
        false => Err(Error::Construction(
            "pushed witness failed verification in the target".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::vertex_budget;
    use crate::models::GroupSpec;

    fn ball(spec: &str, radius: u32) -> (Model, BallGraph) {
        let s = GroupSpec::parse(spec).unwrap();
        let m = Model::from_spec(&s).unwrap();
        let g = BallGraph::build(&m, spec, radius, vertex_budget(None)).unwrap();
        (m, g)
    }

    /// staircase bigon on the grid translated to start at `base`:
    /// up-right to (m,m), then right-down to (2m,0), and its mirror
    fn staircase(g: &BallGraph, m: &Model, base: &str, mm: i64, s: u32) -> BigonWitness {
        let at = |x: i64, y: i64| {
            let text = format!("{base} a^{x} b^{y}");
            g.vertex_of_word(m, &text).unwrap()
        };
        let mut up = vec![at(0, 0)];
        let mut down = vec![at(0, 0)];
        for i in 0..mm {
            up.push(at(i + 1, i));
            up.push(at(i + 1, i + 1));
            down.push(at(i + 1, -i));
            down.push(at(i + 1, -i - 1));
        }
        for i in 0..mm {
            up.push(at(mm + i + 1, mm - i));
            up.push(at(mm + i + 1, mm - i - 1));
            down.push(at(mm + i + 1, i - mm));
            down.push(at(mm + i + 1, i + 1 - mm));
        }
        BigonWitness {
            x: at(2 * mm, 0),
            alpha1: up,
            alpha2: down,
            params: BigonParams::new(Ratio::from_integer(2), s, 2 * s).unwrap(),
        }
    }

    #[test]
    fn identity_map_controls() {
        let (_, g) = ball("free(2)", 4);
        let m = CoarseMap::identity(&g);
        let rep = verify_coarse(&g, &g, &m, g.len()).unwrap();
        assert_eq!(rep.k, 1);
        for (n, r) in rep.rho.iter().enumerate() {
            assert_eq!(*r, Some(n as u32));
        }
        assert!(!rep.non_proper);
    }

    #[test]
    fn factor_inclusion_is_isometric() {
        let (_, src) = ball("abelian(2)", 4);
        let (tm, tgt) = ball("product(abelian(2),free(1))", 4);
        let map = CoarseMap::factor_inclusion(&src, &tgt, &tm).unwrap();
        let rep = verify_coarse(&src, &tgt, &map, src.len()).unwrap();
        assert_eq!(rep.k, 1);
        for (n, r) in rep.rho.iter().enumerate() {
            assert_eq!(*r, Some(n as u32), "rho[{n}]");
        }
    }

    #[test]
    fn line_into_grid_inclusion() {
        let (_, src) = ball("abelian(1)", 5);
        let (tm, tgt) = ball("abelian(2)", 5);
        let map = CoarseMap::factor_inclusion(&src, &tgt, &tm).unwrap();
        let rep = verify_coarse(&src, &tgt, &map, src.len()).unwrap();
        assert_eq!(rep.k, 1);
        assert_eq!(rep.rho[5], Some(5));
    }

    #[test]
    fn constant_map_flagged_non_proper() {
        let (_, src) = ball("abelian(1)", 6);
        let (_, tgt) = ball("abelian(1)", 6);
        let pairs: Vec<(u32, u32)> = (0..src.len() as u32).map(|v| (v, 0)).collect();
        let map = CoarseMap::from_pairs(&src, &tgt, &pairs).unwrap();
        let rep = verify_coarse(&src, &tgt, &map, src.len()).unwrap();
        assert_eq!(rep.k, 0);
        assert!(rep.non_proper);
    }

    #[test]
    fn map_file_round_trip() {
        let f = MapFile {
            source_spec: "abelian(1)".into(),
            target_spec: "abelian(2)".into(),
            pairs: vec![(0, 0), (1, 1), (2, 2)],
        };
        let text = serde_json::to_string(&f).unwrap();
        let back: MapFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.pairs.len(), 3);
        assert_eq!(back.source_spec, "abelian(1)");
    }

    #[test]
    fn rebase_trivial_at_basepoint() {
        let (m, g) = ball("abelian(2)", 16);
        let w = staircase(&g, &m, "", 6, 1);
        assert!(verify_bigon(&g, &w).unwrap());
        let out = rebase_bigon(&g, &w, g.basepoint).unwrap();
        assert_eq!(out.alpha1, w.alpha1);
        assert_eq!(out.params.l, Ratio::from_integer(5));
        assert_eq!(out.params.c, w.params.c);
    }

    #[test]
    fn rebase_one_step() {
        let (m, g) = ball("abelian(2)", 16);
        // witness based at x₀′ = (0,1), apex (12,1)
        let w = staircase(&g, &m, "b", 6, 1);
        let x0p = g.vertex_of_word(&m, "b").unwrap();
        let out = rebase_bigon(&g, &w, x0p).unwrap();
        assert_eq!(out.params.l, Ratio::from_integer(5));
        assert_eq!(out.params.s, 1);
        assert_eq!(out.params.c, w.params.c + 1);
        assert!(verify_bigon(&g, &out).unwrap());
        assert_eq!(out.alpha1[0], g.basepoint);
    }

    #[test]
    fn rebase_hypothesis_violation() {
        let (m, g) = ball("abelian(2)", 8);
        // apex closer to the basepoint than x₀′ is
        let x0p = g.vertex_of_word(&m, "a^4").unwrap();
        let x = g.vertex_of_word(&m, "a^3").unwrap();
        let path = g.geodesic(x0p, x).unwrap();
        let w = BigonWitness {
            x,
            alpha1: path.clone(),
            alpha2: path,
            params: BigonParams::new(Ratio::from_integer(2), 1, 6).unwrap(),
        };
        assert!(rebase_bigon(&g, &w, x0p).is_err());
    }

    #[test]
    fn push_through_identity() {
        let (m, g) = ball("abelian(2)", 18);
        let w = staircase(&g, &m, "", 8, 3);
        assert!(verify_bigon(&g, &w).unwrap());
        let map = CoarseMap::identity(&g);
        let rep = verify_coarse(&g, &g, &map, 64).unwrap();
        // A_ε membership is strict, so ε = 1 would exclude every x under
        // the identity; ε = 1/2 keeps the whole ball
        let out = push_bigon(&g, &g, &map, &rep, &w, Ratio::new(1, 2)).unwrap();
        assert_eq!(out.params.l, Ratio::from_integer(4));
        assert_eq!(out.params.s, 1);
        assert_eq!(out.params.c, 7);
        assert_eq!(out.alpha1, w.alpha1);
    }

    #[test]
    fn push_through_factor_inclusion() {
        let (sm, src) = ball("abelian(2)", 18);
        let (tm, tgt) = ball("product(abelian(2),free(1))", 18);
        let w = staircase(&src, &sm, "", 8, 3);
        assert!(verify_bigon(&src, &w).unwrap());
        let map = CoarseMap::factor_inclusion(&src, &tgt, &tm).unwrap();
        let rep = verify_coarse(&src, &tgt, &map, 48).unwrap();
        assert_eq!(rep.k, 1);
        let out =
            push_bigon(&src, &tgt, &map, &rep, &w, Ratio::new(1, 2)).unwrap();
        assert_eq!(out.params.l, Ratio::from_integer(4));
        assert_eq!(out.params.s, rep.rho_at(3).unwrap() - 2);
        assert_eq!(out.params.c, 7);
        assert!(verify_bigon(&tgt, &out).unwrap());
    }

    #[test]
    fn push_rejects_collapsed_separation() {
        let (m, g) = ball("abelian(2)", 14);
        let w = staircase(&g, &m, "", 6, 1); // rho(1) = 1 ≤ 2K
        let map = CoarseMap::identity(&g);
        let rep = verify_coarse(&g, &g, &map, 32).unwrap();
        assert!(push_bigon(&g, &g, &map, &rep, &w, Ratio::from_integer(1)).is_err());
    }

    #[test]
    fn push_rejects_outside_a_epsilon() {
        let (m, g) = ball("abelian(2)", 18);
        let w = staircase(&g, &m, "", 8, 3);
        let map = CoarseMap::identity(&g);
        let rep = verify_coarse(&g, &g, &map, 32).unwrap();
        // ε = 2 makes A_ε empty for the identity (d_Y = d_X ≤ 2·d_X fails strictly)
        assert!(
            push_bigon(&g, &g, &map, &rep, &w, Ratio::from_integer(2)).is_err()
        );
    }
}
