//! Group presentations, piece arithmetic, C'(λ) checks, Dehn's algorithm and
//! the c·w·c²·w… relator families.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::word::{Letter, Word};

#[derive(Clone, Debug)]
pub struct Presentation {
    pub generators: Vec<String>,
    pub relators: Vec<Word>,
    /// Relators that had to be freely/cyclically reduced at load time.
    pub reduction_warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PieceEntry {
    pub relator_index: usize,
    pub relator_len: usize,
    pub max_piece: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PieceReport {
    pub entries: Vec<PieceEntry>,
    /// max over relators of max_piece/|r|, as an exact rational (num, den).
    pub lambda_ratio: (i64, i64),
}

impl PieceReport {
    pub fn lambda(&self) -> Ratio<i64> {
        Ratio::new(self.lambda_ratio.0, self.lambda_ratio.1.max(1))
    }
}

/// Two relators are considered duplicates when one is a cyclic conjugate of
/// the other or of its inverse.
fn equivalent_up_to_conj_inv(a: &Word, b: &Word) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let binv = b.inverse();
    (0..a.len().max(1)).any(|k| {
        let r = a.rotated(k);
        r == *b || r == binv
    })
}

impl Presentation {
    pub fn new(generators: Vec<String>, raw_relators: Vec<Word>) -> Result<Presentation> {
        let mut relators = Vec::new();
        let mut reduction_warnings = Vec::new();
        for (i, r) in raw_relators.into_iter().enumerate() {
            let reduced = r.free_reduce();
            let (core, conj) = reduced.cyclic_reduce();
            if core.is_empty() {
                return Err(Error::Parse(format!("relator {i} is trivial")));
            }
            if core.len() != r.len() || !conj.is_empty() {
                reduction_warnings.push(format!(
                    "relator {i} was not cyclically reduced; reduced from length {} to {}",
                    r.len(),
                    core.len()
                ));
            }
            for (j, prev) in relators.iter().enumerate() {
                if equivalent_up_to_conj_inv(prev, &core) {
                    return Err(Error::Parse(format!(
                        "relator {i} duplicates relator {j} up to cyclic conjugation/inversion"
                    )));
                }
            }
            relators.push(core);
        }
        Ok(Presentation { generators, relators, reduction_warnings })
    }

    /// Grammar: '<' gen-list '|' relator-list '>' with ',' separators,
    /// '#' line comments, powers via '^'.
    pub fn parse(text: &str) -> Result<Presentation> {
        let stripped: String = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .collect::<Vec<_>>()
            .join(" ");
        let s = stripped.trim();
        let open = s
            .find('<')
            .ok_or_else(|| Error::Parse("expected '<' opening the presentation".into()))?;
        let close = s
            .rfind('>')
            .ok_or_else(|| Error::Parse("expected '>' closing the presentation".into()))?;
        if close <= open {
            return Err(Error::Parse("'>' before '<'".into()));
        }
        let body = &s[open + 1..close];
        let bar = body
            .find('|')
            .ok_or_else(|| Error::Parse("expected '|' between generators and relators".into()))?;
        let generators: Vec<String> = body[..bar]
            .split(',')
            .map(|g| g.trim().to_string())
            .filter(|g| !g.is_empty())
            .collect();
        if generators.is_empty() {
            return Err(Error::Parse("empty generator list".into()));
        }
        for (i, g) in generators.iter().enumerate() {
            if generators[..i].contains(g) {
                return Err(Error::Parse(format!("duplicate generator name {g:?}")));
            }
        }
        let mut relators = Vec::new();
        for chunk in body[bar + 1..].split(',') {
            let chunk = chunk.trim();
            if chunk.is_empty() {
                continue;
            }
            relators.push(Word::parse(chunk, &generators)?);
        }
        Presentation::new(generators, relators)
    }

    pub fn total_relator_length(&self) -> usize {
        self.relators.iter().map(|r| r.len()).sum()
    }
}

/// The symmetrized relator set: all cyclic conjugates of all relators and
/// their inverses, deduplicated as words (proper powers have coinciding
/// rotations).
pub fn symmetrized(p: &Presentation) -> Vec<Word> {
    let mut out = Vec::new();
    for r in &p.relators {
        for base in [r.clone(), r.inverse()] {
            for k in 0..base.len() {
                out.push(base.rotated(k));
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

fn common_prefix(a: &[Letter], b: &[Letter]) -> usize {
    a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count()
}

/// Longest overlap of a suffix of `w` with a prefix of `w` (no wrap-around);
/// this is what a piece looks like inside a single proper-power relator,
/// whose nontrivial rotations coincide as words.
fn max_self_overlap(w: &[Letter]) -> usize {
    (1..w.len())
        .map(|k| common_prefix(&w[k..], w))
        .max()
        .unwrap_or(0)
}

/// Exact max piece length per relator. A piece lying in r is a common prefix
/// of one of r's (or r⁻¹'s) cyclic conjugates with a distinct word of the
/// symmetrized set; self-overlaps of each conjugate are included so that
/// proper powers (all of whose rotations coincide) get their shift pieces.
pub fn pieces(p: &Presentation) -> Result<PieceReport> {
    if p.relators.is_empty() {
        return Err(Error::Precondition("pieces requires at least one relator".into()));
    }
    // Distinct conjugates, tagged with the owning relator. Ownership is
    // unique: a shared word would mean two relators are conjugate/inverse,
    // which load rejects.
    let mut all: Vec<(Word, usize)> = Vec::new();
    for (i, r) in p.relators.iter().enumerate() {
        for base in [r.clone(), r.inverse()] {
            for k in 0..base.len() {
                all.push((base.rotated(k), i));
            }
        }
    }
    all.sort();
    all.dedup_by(|a, b| a.0 == b.0);
    // Max common prefix against any other word is achieved at a sorted
    // neighbour.
    let mut max_piece = vec![0usize; p.relators.len()];
    for i in 0..all.len() {
        let (w, ri) = &all[i];
        let mut best = max_self_overlap(&w.0);
        if i > 0 {
            best = best.max(common_prefix(&w.0, &all[i - 1].0 .0));
        }
        if i + 1 < all.len() {
            best = best.max(common_prefix(&w.0, &all[i + 1].0 .0));
        }
        max_piece[*ri] = max_piece[*ri].max(best);
    }
    let mut entries = Vec::new();
    let mut lambda = Ratio::new(0i64, 1i64);
    for (i, r) in p.relators.iter().enumerate() {
        entries.push(PieceEntry {
            relator_index: i,
            relator_len: r.len(),
            max_piece: max_piece[i],
        });
        lambda = lambda.max(Ratio::new(max_piece[i] as i64, r.len() as i64));
    }
    Ok(PieceReport { entries, lambda_ratio: (*lambda.numer(), *lambda.denom()) })
}

/// C'(λ): every piece of every relator is strictly shorter than λ·|r|.
pub fn check_metric_condition(p: &Presentation, lambda: Ratio<i64>) -> Result<(bool, PieceReport)> {
    if p.relators.is_empty() {
        // vacuously true; report is empty
        return Ok((true, PieceReport { entries: Vec::new(), lambda_ratio: (0, 1) }));
    }
    let report = pieces(p)?;
    let ok = report.entries.iter().all(|e| {
        Ratio::new(e.max_piece as i64, 1) < lambda * Ratio::new(e.relator_len as i64, 1)
    });
    Ok((ok, report))
}

/// Precomputed doubled relator strings for fast >half-relator search.
pub struct DehnTable {
    /// (doubled letters, relator length) for each relator and its inverse.
    doubled: Vec<(Vec<Letter>, usize)>,
    pub min_relator_len: usize,
    /// every qualifying match contains a window of this length...
    screen_len: usize,
    /// ...drawn from this set of doubled-relator substrings (cheap filter
    /// that skips the quadratic search for almost all words)
    screen: std::collections::HashSet<Vec<Letter>>,
}

impl DehnTable {
    pub fn new(p: &Presentation) -> DehnTable {
        let mut doubled: Vec<(Vec<Letter>, usize)> = Vec::new();
        let mut min_len = usize::MAX;
        for r in &p.relators {
            min_len = min_len.min(r.len());
            for base in [r.clone(), r.inverse()] {
                let mut d = base.0.clone();
                d.extend_from_slice(&base.0);
                doubled.push((d, base.len()));
            }
        }
        let min_len = min_len.max(1);
        // a match longer than |r_i|/2 has length ≥ ⌊min_len/2⌋ + 1
        let screen_len = min_len / 2 + 1;
        let mut screen = std::collections::HashSet::new();
        for (d, _) in &doubled {
            if d.len() >= screen_len {
                for win in d.windows(screen_len) {
                    screen.insert(win.to_vec());
                }
            }
        }
        DehnTable { doubled, min_relator_len: min_len, screen_len, screen }
    }

    /// True when `w` can possibly contain a replaceable half-relator.
    fn passes_screen(&self, w: &[Letter]) -> bool {
        w.len() >= self.screen_len
            && w.windows(self.screen_len).any(|win| self.screen.contains(win))
    }

    /// Longest occurrence in `w` of a subword of some cyclic relator
    /// conjugate with length·2 > |r|. Returns (start in w, matched length,
    /// replacement = inverse of the relator complement).
    fn find_long_match(&self, w: &[Letter]) -> Option<(usize, usize, Vec<Letter>)> {
        if w.len() * 2 <= self.min_relator_len || !self.passes_screen(w) {
            return None;
        }
        let mut best: Option<(usize, usize, usize, usize)> = None; // (len, w_end, tbl, d_end)
        for (ti, (d, rlen)) in self.doubled.iter().enumerate() {
            // lcs[i] = length of common suffix of w[..=i-1] and d[..=j-1]
            let mut prev = vec![0usize; w.len() + 1];
            let mut cur = vec![0usize; w.len() + 1];
            for j in 1..=d.len() {
                for i in 1..=w.len() {
                    cur[i] = if w[i - 1] == d[j - 1] {
                        let mut l = prev[i - 1] + 1;
                        if l > *rlen {
                            l = *rlen; // a full relator suffices
                        }
                        l
                    } else {
                        0
                    };
                    let l = cur[i];
                    // occurrence must start within the first copy of r
                    if l > 0 && j >= l && j - l < *rlen {
                        let better = match best {
                            Some((bl, ..)) => l > bl,
                            None => true,
                        };
                        if better {
                            best = Some((l, i, ti, j));
                        }
                    }
                }
                std::mem::swap(&mut prev, &mut cur);
            }
        }
        let (len, w_end, ti, d_end) = best?;
        let (d, rlen) = &self.doubled[ti];
        if len * 2 <= *rlen {
            return None;
        }
        let start_in_d = d_end - len;
        // cyclic conjugate ρ = d[start..start+|r|] = matched · tail, with
        // ρ = 1 in the group, so matched = tail⁻¹.
        let tail = &d[start_in_d + len..start_in_d + *rlen];
        let replacement: Vec<Letter> = tail.iter().rev().map(|l| l.inverse()).collect();
        Some((w_end - len, len, replacement))
    }

    /// Linear Dehn pass: repeatedly replace any subword longer than half a
    /// relator by the shorter complement, freely reducing in between.
    /// Element-preserving.
    pub fn dehn_reduce(&self, w: &Word) -> Word {
        let mut cur = w.free_reduce().0;
        while let Some((start, len, repl)) = self.find_long_match(&cur) {
            let mut next = Vec::with_capacity(cur.len());
            next.extend_from_slice(&cur[..start]);
            next.extend_from_slice(&repl);
            next.extend_from_slice(&cur[start + len..]);
            cur = Word(next).free_reduce().0;
        }
        Word(cur)
    }

    /// Complete triviality test for C'(1/6) presentations: Dehn passes plus
    /// cyclic reduction and cyclic (wrap-around) matches, which only change
    /// the word by conjugation and therefore preserve triviality.
    pub fn is_trivial(&self, w: &Word) -> bool {
        let mut cur = self.dehn_reduce(w);
        loop {
            if cur.is_empty() {
                return true;
            }
            let (core, conj) = cur.cyclic_reduce();
            if !conj.is_empty() {
                cur = self.dehn_reduce(&core);
                continue;
            }
            // wrap-around matches: search the doubled word
            let mut doubled = cur.0.clone();
            doubled.extend_from_slice(&cur.0);
            if let Some((start, len, repl)) = self.find_long_match(&doubled) {
                if start < cur.len() {
                    let rot = cur.rotated(start);
                    let mut next = Vec::new();
                    next.extend_from_slice(&repl);
                    next.extend_from_slice(&rot.0[len.min(rot.len())..]);
                    cur = self.dehn_reduce(&Word(next));
                    continue;
                }
            }
            return false;
        }
    }
}

/// Dehn's algorithm: valid for C'(1/6) presentations only.
/// Returns the empty word exactly when `w` represents the identity.
pub fn dehn_reduce(p: &Presentation, w: &Word) -> Result<Word> {
    let (ok, report) = check_metric_condition(p, Ratio::new(1, 6))?;
    if !ok {
        return Err(Error::NotSmallCancellation {
            lambda: "1/6".into(),
            detail: format!(
                "lambda ratio {}/{}",
                report.lambda_ratio.0, report.lambda_ratio.1
            ),
        });
    }
    let table = DehnTable::new(p);
    let reduced = table.dehn_reduce(w);
    if !reduced.is_empty() && table.is_trivial(&reduced) {
        return Ok(Word::empty());
    }
    Ok(reduced)
}

/// Relator r_w = c·w·c²·w·…·c^E·w on {a,b,c} for a nontrivial word w over
/// {a,b}; |r_w| = E(E+1)/2 + E|w|.
pub fn rw_relator(w: &Word, exponent_bound: u32) -> Result<Word> {
    let wr = w.free_reduce();
    if wr.is_empty() {
        return Err(Error::Precondition("w must be nontrivial".into()));
    }
    if wr.0.iter().any(|l| l.gen >= 2) {
        return Err(Error::Precondition("w must be a word over {a, b}".into()));
    }
    let mut letters = Vec::new();
    for i in 1..=exponent_bound {
        for _ in 0..i {
            letters.push(Letter::new(2, false)); // c
        }
        letters.extend_from_slice(&wr.0);
    }
    Ok(Word(letters))
}

/// Is w a proper power u^k, k ≥ 2, as a cyclic word? For the r_w family the
/// relevant test is on the literal word.
pub fn is_proper_power(w: &Word) -> bool {
    let n = w.len();
    if n < 2 {
        return false;
    }
    for period in 1..n {
        if n % period != 0 {
            continue;
        }
        if (period..n).all(|i| w.0[i] == w.0[i % period]) {
            return true;
        }
    }
    false
}

pub struct RwFamilyOptions {
    pub exponent_bound: u32,
    pub exclude_proper_powers: bool,
    /// Keep only words whose length lies in this set (lacunary variant).
    pub lacunary_lengths: Option<Vec<usize>>,
}

impl Default for RwFamilyOptions {
    fn default() -> Self {
        RwFamilyOptions {
            exponent_bound: 24,
            exclude_proper_powers: false,
            lacunary_lengths: None,
        }
    }
}

/// Presentation ⟨a,b,c | r_w for the given words⟩.
pub fn generate_rw_family(words: &[Word], opts: &RwFamilyOptions) -> Result<Presentation> {
    let mut relators = Vec::new();
    for w in words {
        let wr = w.free_reduce();
        if let Some(lens) = &opts.lacunary_lengths {
            if !lens.contains(&wr.len()) {
                continue;
            }
        }
        if opts.exclude_proper_powers && is_proper_power(&wr) {
            continue;
        }
        let r = rw_relator(&wr, opts.exponent_bound)?;
        let e = opts.exponent_bound as usize;
        debug_assert_eq!(r.len(), e * (e + 1) / 2 + e * wr.len());
        relators.push(r);
    }
    Presentation::new(
        vec!["a".into(), "b".into(), "c".into()],
        relators,
    )
}

/// All freely reduced words of the given length over {a, b}.
pub fn reduced_words_of_length(len: usize) -> Vec<Word> {
    let letters = [
        Letter::new(0, false),
        Letter::new(0, true),
        Letter::new(1, false),
        Letter::new(1, true),
    ];
    let mut acc: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &acc {
            for &l in &letters {
                if let Some(&last) = w.last() {
                    if last.gen == l.gen && last.inv != l.inv {
                        continue;
                    }
                }
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        acc = next;
    }
    acc.into_iter().map(Word).collect()
}

/// Traces the relator cycle from the basepoint and returns the two arcs as
/// a bigon witness at the antipodal cycle vertex, verified at parameters
/// (⌈|r|/2⌉/⌊|r|/2⌋, s, s). The isometric-embedding claim behind "relator
/// cycles are bigons" is checked numerically by the verification, not
/// assumed.
pub fn relator_to_bigon(
    g: &crate::graph::BallGraph,
    model: &crate::models::Model,
    r: &Word,
    s: u32,
) -> Result<crate::bigons::BigonWitness> {
    let n = r.0.len();
    if n < 2 {
        return Err(Error::Precondition("relator too short to bound a cycle".into()));
    }
    let half = (n / 2) as u32;
    if g.radius < n.div_ceil(2) as u32 + s {
        return Err(Error::Precondition(format!(
            "ball radius {} too small: the relator cycle plus separation needs {}",
            g.radius,
            n.div_ceil(2) + s as usize
        )));
    }
    let words = g
        .words
        .as_ref()
        .ok_or_else(|| Error::Precondition("graph has no word labels".into()))?;
    let index: std::collections::HashMap<&Word, u32> =
        words.iter().zip(0u32..).collect();
    // cycle[i] = vertex of the length-i prefix of r
    let mut cycle = Vec::with_capacity(n + 1);
    let mut prefix = Word(Vec::new());
    for i in 0..=n {
        let nf = model.normal_form(&prefix);
        let v = *index.get(&nf).ok_or_else(|| {
            Error::Construction(format!(
                "relator cycle leaves the stored ball at prefix length {i}"
            ))
        })?;
        cycle.push(v);
        if i < n {
            prefix.0.push(r.0[i]);
        }
    }
    if cycle[n] != g.basepoint {
        return Err(Error::Precondition("word is not a relator: cycle does not close".into()));
    }
    let x = cycle[half as usize];
    let alpha1: Vec<u32> = cycle[..=half as usize].to_vec();
    let mut alpha2: Vec<u32> = cycle[half as usize..].to_vec();
    alpha2.reverse(); // basepoint → x along the other arc
    let params = crate::bigons::BigonParams::new(
        Ratio::new(n.div_ceil(2) as i64, half as i64),
        s,
        s,
    )?;
    let w = crate::bigons::BigonWitness { x, alpha1, alpha2, params };
    match crate::bigons::verify_bigon(g, &w)? {
        true => Ok(w),
        false => Err(Error::Construction(
            "relator cycle fails bigon verification at this scale (ball too small \
             or cycle not isometrically embedded)"
                .into(),
        )),
    }
}
