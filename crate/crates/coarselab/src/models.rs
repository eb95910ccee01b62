//! Group arithmetic for the model catalogue: canonical normal forms and
//! Cayley-graph neighbor generation.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::Mutex;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::smallcanc::{check_metric_condition, DehnTable, Presentation};
use crate::word::{Letter, Word};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupSpec {
    Free(u32),
    Abelian(u32),
    Lamplighter,
    Bs(i64, i64),
    Product(Box<GroupSpec>, Box<GroupSpec>),
    Presentation(PathBuf),
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Free(k) => write!(f, "free({k})"),
            GroupSpec::Abelian(k) => write!(f, "abelian({k})"),
            GroupSpec::Lamplighter => write!(f, "lamplighter"),
            GroupSpec::Bs(m, n) => write!(f, "bs({m},{n})"),
            GroupSpec::Product(a, b) => write!(f, "product({a},{b})"),
            GroupSpec::Presentation(p) => write!(f, "presentation({:?})", p.display().to_string()),
        }
    }
}

struct SpecParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> SpecParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len()
            && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::Parse(format!(
                "expected a name at offset {start} of the group spec"
            )));
        }
        Ok(String::from_utf8_lossy(&self.s[start..self.pos]).into_owned())
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.pos < self.s.len() && self.s[self.pos] == c {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse(format!(
                "expected {:?} at offset {} of the group spec",
                c as char, self.pos
            )))
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn int(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("expected an integer at offset {start}")))
    }

    fn path_arg(&mut self) -> Result<PathBuf> {
        self.skip_ws();
        if self.peek() == Some(b'"') {
            self.pos += 1;
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos] != b'"' {
                self.pos += 1;
            }
            if self.pos == self.s.len() {
                return Err(Error::Parse("unterminated quoted path".into()));
            }
            let p = String::from_utf8_lossy(&self.s[start..self.pos]).into_owned();
            self.pos += 1;
            Ok(PathBuf::from(p))
        } else {
            let start = self.pos;
            let mut depth = 0i32;
            while self.pos < self.s.len() {
                match self.s[self.pos] {
                    b'(' => depth += 1,
                    b')' if depth == 0 => break,
                    b')' => depth -= 1,
                    _ => {}
                }
                self.pos += 1;
            }
            Ok(PathBuf::from(
                String::from_utf8_lossy(&self.s[start..self.pos]).trim().to_string(),
            ))
        }
    }

    fn spec(&mut self) -> Result<GroupSpec> {
        let name = self.ident()?;
        match name.as_str() {
            "lamplighter" => Ok(GroupSpec::Lamplighter),
            "free" | "abelian" => {
                self.expect(b'(')?;
                let k = self.int()?;
                self.expect(b')')?;
                if k < 1 {
                    return Err(Error::Parse(format!("{name}(k) requires k >= 1, got {k}")));
                }
                if name == "free" {
                    Ok(GroupSpec::Free(k as u32))
                } else {
                    Ok(GroupSpec::Abelian(k as u32))
                }
            }
            "bs" => {
                self.expect(b'(')?;
                let m = self.int()?;
                self.expect(b',')?;
                let n = self.int()?;
                self.expect(b')')?;
                if m == 0 && n == 0 {
                    return Err(Error::Parse("bs(0,0) is not a group spec".into()));
                }
                Ok(GroupSpec::Bs(m, n))
            }
            "product" => {
                self.expect(b'(')?;
                let a = self.spec()?;
                self.expect(b',')?;
                let b = self.spec()?;
                self.expect(b')')?;
                Ok(GroupSpec::Product(Box::new(a), Box::new(b)))
            }
            "presentation" => {
                self.expect(b'(')?;
                let p = self.path_arg()?;
                self.expect(b')')?;
                Ok(GroupSpec::Presentation(p))
            }
            other => Err(Error::Parse(format!("unknown group spec name {other:?}"))),
        }
    }
}

impl GroupSpec {
    pub fn parse(text: &str) -> Result<GroupSpec> {
        let mut p = SpecParser { s: text.as_bytes(), pos: 0 };
        let spec = p.spec()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(Error::Parse(format!(
                "trailing input in group spec at offset {}",
                p.pos
            )));
        }
        Ok(spec)
    }
}

/// Canonical coset representatives of Z^k modulo the integer lattice spanned
/// by the abelianized relators; used to bucket candidate-equal elements of a
/// presentation model.
pub struct AbelianReducer {
    k: usize,
    /// echelon basis rows with strictly increasing pivot columns, positive pivots
    rows: Vec<Vec<i64>>,
    pivots: Vec<usize>,
}

impl AbelianReducer {
    pub fn new(k: usize, generators_of_lattice: &[Vec<i64>]) -> AbelianReducer {
        let mut rows: Vec<Vec<i64>> = generators_of_lattice
            .iter()
            .filter(|r| r.iter().any(|&x| x != 0))
            .cloned()
            .collect();
        let mut basis: Vec<Vec<i64>> = Vec::new();
        let mut pivots = Vec::new();
        for col in 0..k {
            // euclid-combine all rows with a nonzero entry in this column
            loop {
                let mut idxs: Vec<usize> =
                    (0..rows.len()).filter(|&i| rows[i][col] != 0).collect();
                if idxs.len() <= 1 {
                    break;
                }
                idxs.sort_by_key(|&i| rows[i][col].unsigned_abs());
                let (small, big) = (idxs[0], idxs[1]);
                let q = rows[big][col].div_euclid(rows[small][col]);
                for j in 0..k {
                    rows[big][j] -= q * rows[small][j];
                }
            }
            if let Some(i) = (0..rows.len()).find(|&i| rows[i][col] != 0) {
                let mut row = rows.swap_remove(i);
                if row[col] < 0 {
                    row.iter_mut().for_each(|x| *x = -*x);
                }
                basis.push(row);
                pivots.push(col);
            }
            rows.retain(|r| r.iter().any(|&x| x != 0));
        }
        AbelianReducer { k, rows: basis, pivots }
    }

    pub fn reduce(&self, v: &[i64]) -> Vec<i64> {
        let mut v = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let q = v[p].div_euclid(row[p]);
            if q != 0 {
                for j in 0..self.k {
                    v[j] -= q * row[j];
                }
            }
        }
        v
    }
}

fn abelianize(w: &Word, k: usize) -> Vec<i64> {
    let mut v = vec![0i64; k];
    for l in &w.0 {
        v[l.gen as usize] += if l.inv { -1 } else { 1 };
    }
    v
}

/// Dehn-backed model for a C'(1/6) presentation. Equality of elements is
/// decided by triviality of u·v⁻¹; canonical representatives are the
/// first-seen Dehn-reduced words, cached per abelianization coset.
/// A homomorphism into S_n that kills every relator, found by seeded random
/// search. Distinct images certify distinct group elements, which lets the
/// normal-form cache skip almost all expensive triviality tests.
struct PermQuotient {
    images: Vec<Vec<u8>>,
    inverses: Vec<Vec<u8>>,
}

impl PermQuotient {
    const DEGREE: usize = 7;
    /// total letter-evaluation budget for the search
    const WORK_BUDGET: usize = 40_000_000;

    /// Seeded random search, resampling only the generators of relators
    /// that still fail — constraints over disjoint generator sets are then
    /// satisfied independently instead of jointly.
    fn search(p: &Presentation) -> Option<PermQuotient> {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5EED_9E12);
        let k = p.generators.len();
        let total_len: usize = p.relators.iter().map(|r| r.len()).sum();
        let attempts = Self::WORK_BUDGET / total_len.max(1);
        let fresh = |rng: &mut rand_chacha::ChaCha8Rng| {
            let mut perm: Vec<u8> = (0..Self::DEGREE as u8).collect();
            perm.shuffle(rng);
            perm
        };
        let mut q = PermQuotient {
            images: (0..k).map(|_| fresh(&mut rng)).collect(),
            inverses: Vec::new(),
        };
        for _ in 0..attempts {
            q.inverses = q.images.iter().map(|p| invert_perm(p)).collect();
            let mut resample = vec![false; k];
            let mut any = false;
            for r in &p.relators {
                if !is_identity_perm(&q.eval(r)) {
                    any = true;
                    for l in &r.0 {
                        resample[l.gen as usize] = true;
                    }
                }
            }
            if !any {
                return Some(q);
            }
            for (g, flag) in resample.into_iter().enumerate() {
                if flag {
                    q.images[g] = fresh(&mut rng);
                }
            }
        }
        None
    }

    fn eval(&self, w: &Word) -> Vec<u8> {
        let mut acc: Vec<u8> = (0..Self::DEGREE as u8).collect();
        for l in &w.0 {
            let p = if l.inv {
                &self.inverses[l.gen as usize]
            } else {
                &self.images[l.gen as usize]
            };
            for slot in acc.iter_mut() {
                *slot = p[*slot as usize];
            }
        }
        acc
    }
}

fn invert_perm(p: &[u8]) -> Vec<u8> {
    let mut inv = vec![0u8; p.len()];
    for (i, &v) in p.iter().enumerate() {
        inv[v as usize] = i as u8;
    }
    inv
}

fn is_identity_perm(p: &[u8]) -> bool {
    p.iter().enumerate().all(|(i, &v)| v as usize == i)
}

pub struct PresentationModel {
    pub presentation: Presentation,
    table: DehnTable,
    reducer: AbelianReducer,
    quotient: Option<PermQuotient>,
    /// zero coset key (trivial abelianization class), precomputed
    zero_key: Vec<i64>,
    cache: Mutex<HashMap<Vec<i64>, Vec<(Word, Vec<u8>)>>>,
}

impl PresentationModel {
    fn new(presentation: Presentation) -> Result<PresentationModel> {
        let (ok, report) = check_metric_condition(&presentation, Ratio::new(1, 6))?;
        if !ok {
            return Err(Error::NotSmallCancellation {
                lambda: "1/6".into(),
                detail: format!(
                    "max piece ratio {}/{}; Dehn normal forms would be unsound",
                    report.lambda_ratio.0, report.lambda_ratio.1
                ),
            });
        }
        let k = presentation.generators.len();
        let lattice: Vec<Vec<i64>> =
            presentation.relators.iter().map(|r| abelianize(r, k)).collect();
        let table = DehnTable::new(&presentation);
        let reducer = AbelianReducer::new(k, &lattice);
        let zero_key = reducer.reduce(&vec![0i64; k]);
        Ok(PresentationModel {
            quotient: PermQuotient::search(&presentation),
            presentation,
            table,
            reducer,
            zero_key,
            cache: Mutex::new(HashMap::new()),
        })
    }

    fn normal_form(&self, w: &Word) -> Word {
        let reduced = self.table.dehn_reduce(w);
        if reduced.is_empty() {
            return Word::empty();
        }
        let key = self
            .reducer
            .reduce(&abelianize(&reduced, self.presentation.generators.len()));
        let perm = self
            .quotient
            .as_ref()
            .map(|q| q.eval(&reduced))
            .unwrap_or_default();
        // triviality needs both invariants to vanish before the full test
        if key == self.zero_key
            && is_identity_perm(&perm)
            && self.table.is_trivial(&reduced)
        {
            return Word::empty();
        }
        let mut cache = self.cache.lock().unwrap();
        let bucket = cache.entry(key).or_default();
        for (rep, rep_perm) in bucket.iter() {
            if *rep == reduced {
                return rep.clone();
            }
            if *rep_perm == perm
                && self.table.is_trivial(&reduced.concat(&rep.inverse()))
            {
                return rep.clone();
            }
        }
        bucket.push((reduced.clone(), perm));
        reduced
    }

    fn is_identity(&self, w: &Word) -> bool {
        if let Some(q) = &self.quotient {
            if !is_identity_perm(&q.eval(w)) {
                return false;
            }
        }
        self.table.is_trivial(w)
    }
}

pub enum Model {
    Free { k: u32 },
    Abelian { k: u32 },
    Lamplighter,
    /// BS(m,n) with m,n ≠ 0, HNN extension with stable letter b.
    Bs { m: i64, n: i64 },
    /// Z_order * Z, the bs(m,0)/bs(0,n) degenerations (a^order = 1, b free).
    CyclicFree { order: i64 },
    Product { left: Box<Model>, right: Box<Model> },
    Presentation(PresentationModel),
}

impl Model {
    pub fn from_spec(spec: &GroupSpec) -> Result<Model> {
        Ok(match spec {
            GroupSpec::Free(k) => Model::Free { k: *k },
            GroupSpec::Abelian(k) => Model::Abelian { k: *k },
            GroupSpec::Lamplighter => Model::Lamplighter,
            GroupSpec::Bs(m, n) => {
                if *m != 0 && *n != 0 {
                    Model::Bs { m: *m, n: *n }
                } else {
                    // relator forces a^m = 1 (or a^n = 1); the group is Z_|k| * Z
                    Model::CyclicFree { order: (m + n).abs() }
                }
            }
            GroupSpec::Product(a, b) => Model::Product {
                left: Box::new(Model::from_spec(a)?),
                right: Box::new(Model::from_spec(b)?),
            },
            GroupSpec::Presentation(path) => {
                let text = std::fs::read_to_string(path)?;
                Model::Presentation(PresentationModel::new(Presentation::parse(&text)?)?)
            }
        })
    }

    pub fn from_presentation(p: Presentation) -> Result<Model> {
        Ok(Model::Presentation(PresentationModel::new(p)?))
    }

    pub fn generator_count(&self) -> usize {
        match self {
            Model::Free { k } | Model::Abelian { k } => *k as usize,
            Model::Lamplighter | Model::Bs { .. } | Model::CyclicFree { .. } => 2,
            Model::Product { left, right } => left.generator_count() + right.generator_count(),
            Model::Presentation(p) => p.presentation.generators.len(),
        }
    }

    pub fn generator_names(&self) -> Vec<String> {
        fn default_names(k: usize) -> Vec<String> {
            (0..k)
                .map(|i| {
                    if k <= 26 {
                        ((b'a' + i as u8) as char).to_string()
                    } else {
                        format!("x{i}")
                    }
                })
                .collect()
        }
        match self {
            Model::Free { k } | Model::Abelian { k } => default_names(*k as usize),
            Model::Lamplighter => vec!["t".into(), "a".into()],
            Model::Bs { .. } | Model::CyclicFree { .. } => vec!["a".into(), "b".into()],
            Model::Product { left, right } => {
                let mut names: Vec<String> =
                    left.generator_names().iter().map(|n| format!("{n}1")).collect();
                names.extend(right.generator_names().iter().map(|n| format!("{n}2")));
                names
            }
            Model::Presentation(p) => p.presentation.generators.clone(),
        }
    }

    /// Generators x with x² = 1 (for these, x and x⁻¹ label the same edge).
    pub fn involutions(&self) -> Vec<bool> {
        match self {
            Model::Free { k } | Model::Abelian { k } => vec![false; *k as usize],
            Model::Lamplighter => vec![false, true],
            Model::Bs { .. } => vec![false, false],
            Model::CyclicFree { order } => vec![*order == 2, false],
            Model::Product { left, right } => {
                let mut v = left.involutions();
                v.extend(right.involutions());
                v
            }
            Model::Presentation(p) => {
                // a generator is an involution iff its square is trivial
                (0..p.presentation.generators.len())
                    .map(|i| {
                        let sq = Word(vec![
                            Letter::new(i, false),
                            Letter::new(i, false),
                        ]);
                        p.is_identity(&sq)
                    })
                    .collect()
            }
        }
    }

    pub fn normal_form(&self, w: &Word) -> Word {
        match self {
            Model::Free { .. } => w.free_reduce(),
            Model::Abelian { k } => {
                let v = abelianize(w, *k as usize);
                let mut letters = Vec::new();
                for (i, &e) in v.iter().enumerate() {
                    for _ in 0..e.abs() {
                        letters.push(Letter::new(i, e < 0));
                    }
                }
                Word(letters)
            }
            Model::Lamplighter => lamplighter_nf(w),
            Model::Bs { m, n } => bs_nf(w, *m, *n),
            Model::CyclicFree { order } => cyclic_free_nf(w, *order),
            Model::Product { left, right } => {
                let split = left.generator_count() as u16;
                let mut lw = Vec::new();
                let mut rw = Vec::new();
                for l in &w.0 {
                    if l.gen < split {
                        lw.push(*l);
                    } else {
                        rw.push(Letter::new((l.gen - split) as usize, l.inv));
                    }
                }
                let mut out = left.normal_form(&Word(lw)).0;
                for l in right.normal_form(&Word(rw)).0 {
                    out.push(Letter::new((l.gen + split) as usize, l.inv));
                }
                Word(out)
            }
            Model::Presentation(p) => p.normal_form(w),
        }
    }

    pub fn is_identity(&self, w: &Word) -> bool {
        match self {
            Model::Presentation(p) => p.is_identity(w),
            _ => self.normal_form(w).is_empty(),
        }
    }

    /// Distinct normal forms of g·x^{±1} over all generators x, excluding g
    /// itself (a generator may be trivial in degenerate models).
    pub fn neighbors(&self, g: &Word) -> Vec<Word> {
        let inv = self.involutions();
        let mut out: Vec<Word> = Vec::new();
        for i in 0..self.generator_count() {
            let signs: &[bool] = if inv[i] { &[false] } else { &[false, true] };
            for &s in signs {
                let mut w = g.clone();
                w.push(Letter::new(i, s));
                let nf = self.normal_form(&w);
                if nf != *g && !out.contains(&nf) {
                    out.push(nf);
                }
            }
        }
        out
    }
}

/// Lamplighter Z₂ ≀ Z with t = shift (gen 0) and a = toggle (gen 1, a² = 1).
/// State: set of lit lamp positions plus cursor. Canonical word visits the
/// lit lamps in increasing position order, then moves to the cursor.
fn lamplighter_nf(w: &Word) -> Word {
    let mut lamps = std::collections::BTreeSet::new();
    let mut cursor: i64 = 0;
    for l in &w.0 {
        match l.gen {
            0 => cursor += if l.inv { -1 } else { 1 },
            _ => {
                if !lamps.insert(cursor) {
                    lamps.remove(&cursor);
                }
            }
        }
    }
    let mut letters = Vec::new();
    let mut at: i64 = 0;
    let shift_to = |letters: &mut Vec<Letter>, at: &mut i64, p: i64| {
        let d = p - *at;
        for _ in 0..d.abs() {
            letters.push(Letter::new(0, d < 0));
        }
        *at = p;
    };
    for &p in &lamps {
        shift_to(&mut letters, &mut at, p);
        letters.push(Letter::new(1, false));
    }
    shift_to(&mut letters, &mut at, cursor);
    Word(letters)
}

/// Britton normal form for BS(m,n) = ⟨a,b | b⁻¹aᵐba⁻ⁿ⟩, m,n ≠ 0.
/// Syllable view a^{e₀} b^{ε₁} a^{e₁} … ; using b·aⁿ = aᵐ·b, the exponent
/// after each b is reduced into [0,|n|) (after b⁻¹: [0,|m|)) with the excess
/// pushed left, then pinches b^ε a⁰ b^{−ε} are cancelled; repeat to fixpoint.
fn bs_nf(w: &Word, m: i64, n: i64) -> Word {
    // a is gen 0, b is gen 1
    let mut head: i64 = 0; // exponent of a before the first b
    let mut sylls: Vec<(i64, i64)> = Vec::new(); // (b sign, following a-exponent)
    for l in &w.0 {
        let s = if l.inv { -1i64 } else { 1 };
        match l.gen {
            0 => {
                if let Some(last) = sylls.last_mut() {
                    last.1 += s;
                } else {
                    head += s;
                }
            }
            _ => sylls.push((s, 0)),
        }
    }
    loop {
        let mut changed = false;
        for i in 0..sylls.len() {
            let (eps, e) = sylls[i];
            let (modulus, through) = if eps > 0 { (n.abs(), n) } else { (m.abs(), m) };
            let push = if eps > 0 { m } else { n };
            let r = e.rem_euclid(modulus);
            if r != e {
                let q = (e - r) / through;
                sylls[i].1 = r;
                let add = push * q;
                if i == 0 {
                    head += add;
                } else {
                    sylls[i - 1].1 += add;
                }
                changed = true;
            }
        }
        // pinch removal: b^ε a⁰ b^{−ε}
        let mut i = 0;
        while i + 1 < sylls.len() {
            if sylls[i].1 == 0 && sylls[i].0 == -sylls[i + 1].0 {
                let tail = sylls[i + 1].1;
                sylls.drain(i..=i + 1);
                if i == 0 {
                    head += tail;
                } else {
                    sylls[i - 1].1 += tail;
                }
                changed = true;
                i = i.saturating_sub(1);
            } else {
                i += 1;
            }
        }
        if !changed {
            break;
        }
    }
    let mut letters = Vec::new();
    let push_a = |letters: &mut Vec<Letter>, e: i64| {
        for _ in 0..e.abs() {
            letters.push(Letter::new(0, e < 0));
        }
    };
    push_a(&mut letters, head);
    for (eps, e) in sylls {
        letters.push(Letter::new(1, eps < 0));
        push_a(&mut letters, e);
    }
    Word(letters)
}

/// Normal form in Z_order * Z (a^order = 1, b free): alternating syllables
/// a^{e}, 1 ≤ e < order, and b^{f}, f ≠ 0. order ≤ 1 makes a trivial.
fn cyclic_free_nf(w: &Word, order: i64) -> Word {
    #[derive(Clone, Copy)]
    enum S {
        A(i64),
        B(i64),
    }
    let mut sylls: Vec<S> = Vec::new();
    for l in &w.0 {
        let s = if l.inv { -1i64 } else { 1 };
        match (l.gen, sylls.last_mut()) {
            (0, Some(S::A(e))) => *e += s,
            (0, _) => sylls.push(S::A(s)),
            (_, Some(S::B(f))) => *f += s,
            (_, _) => sylls.push(S::B(s)),
        }
        // normalize the tail eagerly so cancellations merge neighbors
        loop {
            match sylls.last() {
                Some(S::A(e)) if order >= 1 && e.rem_euclid(order.max(1)) == 0 => {
                    sylls.pop();
                }
                Some(S::A(0)) | Some(S::B(0)) => {
                    sylls.pop();
                }
                _ => break,
            }
            match (sylls.len().checked_sub(2), sylls.last().copied()) {
                (Some(i), Some(last)) => {
                    let prev = sylls[i];
                    match (prev, last) {
                        (S::A(x), S::A(y)) => {
                            sylls.truncate(i);
                            sylls.push(S::A(x + y));
                            continue;
                        }
                        (S::B(x), S::B(y)) => {
                            sylls.truncate(i);
                            sylls.push(S::B(x + y));
                            continue;
                        }
                        _ => break,
                    }
                }
                _ => break,
            }
        }
    }
    let mut letters = Vec::new();
    for s in sylls {
        match s {
            S::A(e) => {
                let r = if order >= 1 { e.rem_euclid(order) } else { e };
                for _ in 0..r.abs() {
                    letters.push(Letter::new(0, r < 0));
                }
            }
            S::B(f) => {
                for _ in 0..f.abs() {
                    letters.push(Letter::new(1, f < 0));
                }
            }
        }
    }
    Word(letters)
}
