//! Words over a signed generator alphabet, the unit of group arithmetic.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// A single generator occurrence: generator index plus inversion flag.
#[derive(
    Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize,
)]
pub struct Letter {
    pub gen: u16,
    pub inv: bool,
}

impl Letter {
    pub fn new(gen: usize, inv: bool) -> Self {
        Letter { gen: gen as u16, inv }
    }

    pub fn inverse(self) -> Self {
        Letter { gen: self.gen, inv: !self.inv }
    }
}

/// A freely storable word; canonical-form guarantees are the group model's job.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize, Deserialize)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn single(gen: usize, inv: bool) -> Self {
        Word(vec![Letter::new(gen, inv)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, l: Letter) {
        self.0.push(l);
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Free reduction: cancel adjacent x·x⁻¹ pairs.
    pub fn free_reduce(&self) -> Word {
        let mut out: Vec<Letter> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if let Some(&last) = out.last() {
                if last.gen == l.gen && last.inv != l.inv {
                    out.pop();
                    continue;
                }
            }
            out.push(l);
        }
        Word(out)
    }

    /// Cyclic reduction: strip matching first/last inverse pairs.
    /// Returns (core, conjugator) with self = conjugator · core · conjugator⁻¹
    /// after free reduction.
    pub fn cyclic_reduce(&self) -> (Word, Word) {
        let mut w = self.free_reduce().0;
        let mut conj = Vec::new();
        while w.len() >= 2 {
            let first = w[0];
            let last = *w.last().unwrap();
            if first.gen == last.gen && first.inv != last.inv {
                conj.push(first);
                w.remove(0);
                w.pop();
            } else {
                break;
            }
        }
        (Word(w), Word(conj))
    }

    pub fn rotated(&self, k: usize) -> Word {
        let n = self.0.len();
        if n == 0 {
            return Word::empty();
        }
        let k = k % n;
        let mut v = Vec::with_capacity(n);
        v.extend_from_slice(&self.0[k..]);
        v.extend_from_slice(&self.0[..k]);
        Word(v)
    }

    /// Render with the given generator names, e.g. `a b^-1 a`.
    pub fn display(&self, names: &[String]) -> String {
        if self.0.is_empty() {
            return "1".to_string();
        }
        let mut parts = Vec::with_capacity(self.0.len());
        for l in &self.0 {
            let name = names
                .get(l.gen as usize)
                .map(|s| s.as_str())
                .unwrap_or("?");
            if l.inv {
                parts.push(format!("{name}^-1"));
            } else {
                parts.push(name.to_string());
            }
        }
        parts.join(" ")
    }

    /// Parse a word over the given generator names. Tokens are generator
    /// names with optional `^<int>` powers; juxtaposition (with or without
    /// whitespace) is the product. `1` denotes the empty word.
    pub fn parse(text: &str, names: &[String]) -> Result<Word> {
        let mut letters = Vec::new();
        let bytes = text.as_bytes();
        let mut i = 0;
        // longest-match first
        let mut order: Vec<usize> = (0..names.len()).collect();
        order.sort_by_key(|&g| std::cmp::Reverse(names[g].len()));
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_whitespace() || c == '*' || c == '·' {
                i += 1;
                continue;
            }
            if c == '1' {
                i += 1;
                continue;
            }
            let rest = &text[i..];
            let gen = order
                .iter()
                .copied()
                .find(|&g| !names[g].is_empty() && rest.starts_with(names[g].as_str()));
            let Some(gen) = gen else {
                return Err(Error::Parse(format!(
                    "unknown generator at position {i} in {text:?} (alphabet {names:?})"
                )));
            };
            i += names[gen].len();
            let mut power: i64 = 1;
            if i < bytes.len() && bytes[i] == b'^' {
                i += 1;
                let start = i;
                if i < bytes.len() && (bytes[i] == b'-' || bytes[i] == b'+') {
                    i += 1;
                }
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                power = text[start..i]
                    .parse::<i64>()
                    .map_err(|_| Error::Parse(format!("bad exponent in {text:?}")))?;
            }
            let inv = power < 0;
            for _ in 0..power.unsigned_abs() {
                letters.push(Letter::new(gen, inv));
            }
        }
        Ok(Word(letters))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Fallback rendering with alphabetic names a, b, c, ...
        let names: Vec<String> = (0..26u8)
            .map(|i| ((b'a' + i) as char).to_string())
            .collect();
        write!(f, "{}", self.display(&names))
    }
}
