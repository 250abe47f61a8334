//! Signed-letter words and the shortlex order used for every deterministic
//! tie-break in the crate.
//!
//! A letter is a non-zero `i32`: `k` is the k-th generator and `-k` its
//! inverse. Words carry no normal-form guarantee by themselves; canonical
//! forms are produced by [`crate::model::ActionModel::canon`].

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Position of a letter in the fixed total order `1 < -1 < 2 < -2 < ...`.
#[inline]
pub fn letter_rank(letter: i32) -> u32 {
    2 * (letter.unsigned_abs() - 1) + u32::from(letter < 0)
}

/// Inverse of [`letter_rank`].
#[inline]
pub fn letter_from_rank(rank: u32) -> i32 {
    let g = (rank / 2 + 1) as i32;
    if rank.is_multiple_of(2) {
        g
    } else {
        -g
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<i32>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(l: i32) -> Self {
        Word(vec![l])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    /// Concatenation without any reduction.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Formal inverse: reversed, every letter negated.
    pub fn formal_inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| -l).collect())
    }

    /// Free reduction (cancels adjacent `l, -l`).
    pub fn free_reduce(&self) -> Word {
        let mut out: Vec<i32> = Vec::with_capacity(self.len());
        for &l in &self.0 {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn is_freely_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != -w[1])
    }

    /// Formal power `w^k` (negative `k` uses the formal inverse), unreduced.
    pub fn formal_power(&self, k: i64) -> Word {
        let base = if k < 0 { self.formal_inverse() } else { self.clone() };
        let mut v = Vec::with_capacity(base.len() * k.unsigned_abs() as usize);
        for _ in 0..k.unsigned_abs() {
            v.extend_from_slice(&base.0);
        }
        Word(v)
    }

    /// Renders the word with the given letter alphabet; inverses in uppercase.
    pub fn render(&self, alphabet: &[char]) -> String {
        if self.is_empty() {
            return "1".to_string();
        }
        self.0
            .iter()
            .map(|&l| {
                let c = alphabet
                    .get(l.unsigned_abs() as usize - 1)
                    .copied()
                    .unwrap_or('?');
                if l < 0 {
                    c.to_ascii_uppercase()
                } else {
                    c
                }
            })
            .collect()
    }

    /// Parses letters from `alphabet` (lowercase); an uppercase letter or a
    /// trailing `'` marks an inverse. `1` or the empty string is the identity.
    /// The result is freely reduced.
    pub fn parse(text: &str, alphabet: &[char]) -> Result<Word, String> {
        let mut letters: Vec<i32> = Vec::new();
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "1" {
            return Ok(Word::empty());
        }
        for c in trimmed.chars() {
            if c.is_whitespace() {
                continue;
            }
            if c == '\'' {
                match letters.last_mut() {
                    Some(l) => *l = -*l,
                    None => return Err(format!("dangling ' in {text:?}")),
                }
                continue;
            }
            let lower = c.to_ascii_lowercase();
            let idx = alphabet
                .iter()
                .position(|&a| a == lower)
                .ok_or_else(|| format!("unknown letter {c:?} in {text:?}"))?;
            let g = idx as i32 + 1;
            letters.push(if c.is_ascii_uppercase() { -g } else { g });
        }
        Ok(Word(letters).free_reduce())
    }
}

impl Ord for Word {
    /// Shortlex with letters ordered `1 < -1 < 2 < -2 < ...`.
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| {
            for (a, b) in self.0.iter().zip(other.0.iter()) {
                let o = letter_rank(*a).cmp(&letter_rank(*b));
                if o != Ordering::Equal {
                    return o;
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<i32>> for Word {
    fn from(v: Vec<i32>) -> Self {
        Word(v)
    }
}

impl<const N: usize> From<[i32; N]> for Word {
    fn from(v: [i32; N]) -> Self {
        Word(v.to_vec())
    }
}

/// Length of the longest common prefix.
#[inline]
pub fn common_prefix(a: &[i32], b: &[i32]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}
