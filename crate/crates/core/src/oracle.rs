//! Brute-force word oracle: enumerates reduced words in two letters `x, y`,
//! substitutes `x -> a`, `y -> b`, and tests triviality and distinctness.
//!
//! Evaluation is incremental over a depth-first walk of the reduced-word
//! tree. In the Cayley models an element is held as a stack of slices of
//! the four canonical generator words; concatenating normal forms only
//! cancels at the junction, so each push costs the length of the
//! cancellation rather than the length of the generator. Finite models
//! hold the element as a vertex permutation.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionModel, Point};
use crate::rational::{self, Rational};
use crate::word::{letter_from_rank, Word};

const HASH_MOD: u64 = (1 << 61) - 1;
const HASH_BASE: u64 = 1_000_003;

#[inline]
fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % HASH_MOD as u128) as u64
}

#[inline]
fn addmod(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= HASH_MOD {
        s - HASH_MOD
    } else {
        s
    }
}

#[inline]
fn letter_code(l: i32) -> u64 {
    (l as i64 + 1_000) as u64
}

/// Number of reduced words of length exactly `len` over `rank` letters.
pub fn count_reduced_words(rank: u64, len: u32) -> u64 {
    if len == 0 {
        1
    } else {
        2 * rank * (2 * rank - 1).pow(len - 1)
    }
}

/// All freely reduced words of length `1..=max_len`, length first, then
/// lexicographic in the letter order `x < X < y < Y < ...`.
pub fn enumerate_reduced_words(rank: u32, max_len: u32) -> Result<Vec<Word>> {
    if rank == 0 || max_len == 0 {
        return Err(Error::Precondition("rank and max_len must be >= 1".into()));
    }
    let letters: Vec<i32> = (0..2 * rank).map(letter_from_rank).collect();
    let mut out = Vec::new();
    let mut layer = vec![Word::empty()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * (2 * rank as usize - 1));
        for w in &layer {
            for &l in &letters {
                if w.letters().last() != Some(&-l) {
                    let mut v = w.0.clone();
                    v.push(l);
                    next.push(Word(v));
                }
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    Ok(out)
}

/// Index into the generator table: x, X, y, Y.
#[inline]
fn slot(letter: i32) -> usize {
    match letter {
        1 => 0,
        -1 => 1,
        2 => 2,
        -2 => 3,
        _ => panic!("oracle words use letters x and y only"),
    }
}

#[derive(Clone, Copy, Debug)]
struct Piece {
    src: usize,
    lo: usize,
    hi: usize,
}

#[derive(Debug, Default)]
struct Frame {
    popped: Vec<(Piece, u64)>,
    trimmed: Option<(usize, u64)>,
    pushed: bool,
    parity_flip: bool,
}

struct RopeEval {
    gens: [Vec<i32>; 4],
    prefix: [Vec<u64>; 4],
    pow: Vec<u64>,
    parity_gen: [bool; 4],
    involution: Option<i32>,
    pieces: Vec<Piece>,
    cum: Vec<u64>,
    len: u64,
    parity: bool,
    central: Option<i32>,
    log: Vec<Frame>,
}

impl RopeEval {
    fn new(model: &ActionModel, elems: [Word; 4]) -> Self {
        let central = model.central_involution();
        let split = |w: &Word| -> (Vec<i32>, bool) {
            match central {
                Some(s) => {
                    let free: Vec<i32> = w.letters().iter().copied().filter(|l| l.abs() != s).collect();
                    {
                        let odd = (w.letters().len() - free.len()) % 2 == 1;
                        (free, odd)
                    }
                }
                None => (w.0.clone(), false),
            }
        };
        let parts: Vec<(Vec<i32>, bool)> = elems.iter().map(split).collect();
        let max_len = parts.iter().map(|p| p.0.len()).max().unwrap_or(0);
        let mut pow = vec![1u64; max_len + 1];
        for i in 1..=max_len {
            pow[i] = mulmod(pow[i - 1], HASH_BASE);
        }
        let prefix_of = |w: &[i32]| {
            let mut p = vec![0u64; w.len() + 1];
            for (i, &l) in w.iter().enumerate() {
                p[i + 1] = addmod(mulmod(p[i], HASH_BASE), letter_code(l));
            }
            p
        };
        let gens: [Vec<i32>; 4] = std::array::from_fn(|i| parts[i].0.clone());
        let prefix: [Vec<u64>; 4] = std::array::from_fn(|i| prefix_of(&gens[i]));
        RopeEval {
            parity_gen: std::array::from_fn(|i| parts[i].1),
            gens,
            prefix,
            pow,
            involution: model.involution(),
            pieces: Vec::new(),
            cum: Vec::new(),
            len: 0,
            parity: false,
            central,
            log: Vec::new(),
        }
    }

    #[inline]
    fn inverse_letter(&self, l: i32) -> i32 {
        if Some(l) == self.involution {
            l
        } else {
            -l
        }
    }

    fn piece_hash(&self, p: &Piece) -> u64 {
        let pre = &self.prefix[p.src];
        let sub = mulmod(pre[p.lo], self.pow[p.hi - p.lo]);
        addmod(pre[p.hi], HASH_MOD - sub)
    }

    fn cum_with(&self, prev: u64, p: &Piece) -> u64 {
        addmod(mulmod(prev, self.pow[p.hi - p.lo]), self.piece_hash(p))
    }

    fn push(&mut self, letter: i32) {
        let src = slot(letter);
        let n = self.gens[src].len();
        let mut frame = Frame { parity_flip: self.parity_gen[src], ..Default::default() };
        let mut start = 0;
        while start < n {
            let Some(top) = self.pieces.last().copied() else { break };
            let top_len = top.hi - top.lo;
            let mut k = 0;
            while k < top_len && start + k < n {
                let t = self.gens[top.src][top.hi - 1 - k];
                if t != self.inverse_letter(self.gens[src][start + k]) {
                    break;
                }
                k += 1;
            }
            if k == 0 {
                break;
            }
            start += k;
            self.len -= k as u64;
            if k == top_len {
                let h = self.cum.pop().expect("parallel stacks");
                frame.popped.push((self.pieces.pop().expect("non-empty"), h));
            } else {
                let idx = self.pieces.len() - 1;
                let old = self.cum[idx];
                frame.trimmed = Some((top.hi, old));
                self.pieces[idx].hi -= k;
                let prev = if idx == 0 { 0 } else { self.cum[idx - 1] };
                self.cum[idx] = self.cum_with(prev, &self.pieces[idx]);
                break;
            }
        }
        if start < n {
            let p = Piece { src, lo: start, hi: n };
            let prev = self.cum.last().copied().unwrap_or(0);
            self.cum.push(self.cum_with(prev, &p));
            self.pieces.push(p);
            self.len += (n - start) as u64;
            frame.pushed = true;
        }
        if frame.parity_flip {
            self.parity = !self.parity;
        }
        self.log.push(frame);
    }

    fn pop(&mut self) {
        let frame = self.log.pop().expect("pop without push");
        if frame.parity_flip {
            self.parity = !self.parity;
        }
        if frame.pushed {
            let p = self.pieces.pop().expect("pushed piece");
            self.cum.pop();
            self.len -= (p.hi - p.lo) as u64;
        }
        if let Some((old_hi, old_cum)) = frame.trimmed {
            let idx = self.pieces.len() - 1;
            self.len += (old_hi - self.pieces[idx].hi) as u64;
            self.pieces[idx].hi = old_hi;
            self.cum[idx] = old_cum;
        }
        for (p, h) in frame.popped.into_iter().rev() {
            self.len += (p.hi - p.lo) as u64;
            self.pieces.push(p);
            self.cum.push(h);
        }
    }

    fn is_trivial(&self) -> bool {
        self.pieces.is_empty() && !self.parity
    }

    fn fingerprint(&self) -> (u64, u64, bool) {
        (self.cum.last().copied().unwrap_or(0), self.len, self.parity)
    }

    fn materialize(&self) -> Word {
        let mut v = Vec::with_capacity(self.len as usize + 1);
        for p in &self.pieces {
            v.extend_from_slice(&self.gens[p.src][p.lo..p.hi]);
        }
        if self.parity {
            v.push(self.central.expect("parity only in the doubled model"));
        }
        Word(v)
    }

    fn origin_displacement(&self) -> u64 {
        self.len + u64::from(self.parity)
    }
}

struct PermEval {
    gens: [Vec<usize>; 4],
    stack: Vec<Vec<usize>>,
}

impl PermEval {
    fn new(model: &ActionModel, elems: [Word; 4]) -> Self {
        let points = model.all_points().expect("finite model");
        let perm = |w: &Word| -> Vec<usize> {
            points
                .iter()
                .map(|p| match model.apply(w, p).expect("valid point") {
                    Point::Vertex(v) => v,
                    Point::Word(_) => unreachable!(),
                })
                .collect()
        };
        PermEval {
            gens: std::array::from_fn(|i| perm(&elems[i])),
            stack: vec![(0..points.len()).collect()],
        }
    }

    fn top(&self) -> &Vec<usize> {
        self.stack.last().expect("identity at the bottom")
    }

    fn push(&mut self, letter: i32) {
        let g = &self.gens[slot(letter)];
        // (w g)(v) = w(g(v))
        let cur = self.top();
        let next: Vec<usize> = g.iter().map(|&gv| cur[gv]).collect();
        self.stack.push(next);
    }

    fn pop(&mut self) {
        self.stack.pop();
    }

    fn is_trivial(&self) -> bool {
        self.top().iter().enumerate().all(|(i, &v)| i == v)
    }

    fn fingerprint(&self) -> (u64, u64, bool) {
        let h = self.top().iter().fold(0u64, |h, &v| addmod(mulmod(h, HASH_BASE), v as u64 + 1));
        (h, 0, false)
    }
}

enum Evaluator {
    Rope(RopeEval),
    Perm(PermEval),
}

/// Element handle for exact comparison after a fingerprint collision.
#[derive(PartialEq, Eq, Debug)]
enum Materialized {
    Word(Word),
    Perm(Vec<usize>),
}

impl Evaluator {
    fn new(model: &ActionModel, a: &Word, b: &Word) -> Self {
        let elems = [model.canon(a), model.inverse(a), model.canon(b), model.inverse(b)];
        if model.is_cayley() {
            Evaluator::Rope(RopeEval::new(model, elems))
        } else {
            Evaluator::Perm(PermEval::new(model, elems))
        }
    }

    fn push(&mut self, l: i32) {
        match self {
            Evaluator::Rope(r) => r.push(l),
            Evaluator::Perm(p) => p.push(l),
        }
    }

    fn pop(&mut self) {
        match self {
            Evaluator::Rope(r) => r.pop(),
            Evaluator::Perm(p) => p.pop(),
        }
    }

    fn is_trivial(&self) -> bool {
        match self {
            Evaluator::Rope(r) => r.is_trivial(),
            Evaluator::Perm(p) => p.is_trivial(),
        }
    }

    fn fingerprint(&self) -> (u64, u64, bool) {
        match self {
            Evaluator::Rope(r) => r.fingerprint(),
            Evaluator::Perm(p) => p.fingerprint(),
        }
    }

    fn materialize(&self) -> Materialized {
        match self {
            Evaluator::Rope(r) => Materialized::Word(r.materialize()),
            Evaluator::Perm(p) => Materialized::Perm(p.top().clone()),
        }
    }

    fn displacement(&self, model: &ActionModel, base: &Point) -> Result<u64> {
        match self {
            Evaluator::Rope(r) if *base == model.origin() => Ok(r.origin_displacement()),
            Evaluator::Rope(r) => {
                let g = r.materialize();
                model.displacement(&g, base)
            }
            Evaluator::Perm(p) => match base {
                Point::Vertex(v) => model.distance(base, &Point::Vertex(p.top()[*v])),
                Point::Word(_) => Err(Error::PointOutsideModel(format!("{base:?}"))),
            },
        }
    }
}

fn check_pair(model: &ActionModel, a: &Word, b: &Word) -> Result<()> {
    for (name, g) in [("a", a), ("b", b)] {
        if g.letters().iter().any(|l| *l == 0 || l.unsigned_abs() as usize > model.generator_count()) {
            return Err(Error::InvalidWord(format!("{name} uses letters outside the model")));
        }
    }
    Ok(())
}

/// Evaluates a word in `x, y` at `(a, b)`, as a canonical element.
pub fn evaluate(model: &ActionModel, word: &Word, a: &Word, b: &Word) -> Result<Word> {
    check_pair(model, a, b)?;
    let mut acc = Vec::new();
    for &l in word.letters() {
        let g = match l {
            1 => a.clone(),
            -1 => a.formal_inverse(),
            2 => b.clone(),
            -2 => b.formal_inverse(),
            _ => return Err(Error::InvalidWord(format!("letter {l} is not x or y"))),
        };
        acc.extend_from_slice(g.letters());
    }
    Ok(model.canon(&Word(acc)))
}

/// Exact triviality of `w(a, b)`: empty canonical form in the Cayley
/// models, identity permutation on finite graphs.
pub fn is_trivial(model: &ActionModel, word: &Word, a: &Word, b: &Word) -> Result<bool> {
    if !word.is_freely_reduced() {
        return Err(Error::InvalidWord("word must be freely reduced".into()));
    }
    Ok(model.is_identity(&evaluate(model, word, a, b)?))
}

/// Triviality judged only by the action on a ball around the origin.
pub fn acts_trivially_on_ball(model: &ActionModel, word: &Word, a: &Word, b: &Word, radius: u64) -> Result<bool> {
    let g = evaluate(model, word, a, b)?;
    let pts = match model.all_points() {
        Some(p) => p,
        None => model.ball(&model.origin(), radius)?,
    };
    for p in &pts {
        if model.apply(&g, p)? != *p {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Ball radius at which two distinct elements of word length `<= depth`
/// in `a, b` cannot act identically.
pub fn safe_verify_radius(a: &Word, b: &Word, depth: u64) -> u64 {
    depth * (a.len().max(b.len()) as u64) + 2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleVerdict {
    FreeToDepth,
    RelationFound,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleReport {
    pub depth: u32,
    pub verdict: OracleVerdict,
    pub relation: Option<Word>,
    pub words_checked: u64,
    #[serde(default, with = "rational::serde_opt_str", skip_serializing_if = "Option::is_none")]
    pub min_displacement_ratio: Option<Rational>,
    #[serde(default, with = "rational::serde_opt_str", skip_serializing_if = "Option::is_none")]
    pub fitted_l: Option<Rational>,
    #[serde(default, with = "rational::serde_opt_str", skip_serializing_if = "Option::is_none")]
    pub fitted_c: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_holds: Option<bool>,
}

const LETTERS: [i32; 4] = [1, -1, 2, -2];

/// Depth-first walk over reduced words of length exactly `target`,
/// returning the first (lexicographically least) trivial one.
fn first_trivial_at(ev: &mut Evaluator, prefix: &mut Vec<i32>, target: usize) -> Option<Word> {
    if prefix.len() == target {
        return ev.is_trivial().then(|| Word(prefix.clone()));
    }
    for &l in &LETTERS {
        if prefix.last() == Some(&-l) {
            continue;
        }
        ev.push(l);
        prefix.push(l);
        // a trivial proper prefix was already reported at a shorter length
        let found = first_trivial_at(ev, prefix, target);
        prefix.pop();
        ev.pop();
        if found.is_some() {
            return found;
        }
    }
    None
}

fn walk<F: FnMut(&Evaluator, &[i32]) -> Result<bool>>(
    ev: &mut Evaluator,
    prefix: &mut Vec<i32>,
    depth: usize,
    visit: &mut F,
) -> Result<bool> {
    if !prefix.is_empty() && !visit(ev, prefix)? {
        return Ok(false);
    }
    if prefix.len() == depth {
        return Ok(true);
    }
    for &l in &LETTERS {
        if prefix.last() == Some(&-l) {
            continue;
        }
        ev.push(l);
        prefix.push(l);
        let go_on = walk(ev, prefix, depth, visit)?;
        prefix.pop();
        ev.pop();
        if !go_on {
            return Ok(false);
        }
    }
    Ok(true)
}

fn evaluate_fresh(model: &ActionModel, a: &Word, b: &Word, w: &[i32]) -> Materialized {
    let mut ev = Evaluator::new(model, a, b);
    for &l in w {
        ev.push(l);
    }
    ev.materialize()
}

/// Checks that every reduced word of length `1..=depth` in `x, y` is
/// nontrivial at `(a, b)` and that all of them are pairwise distinct.
pub fn freeness_to_depth(model: &ActionModel, a: &Word, b: &Word, depth: u32) -> Result<OracleReport> {
    if depth == 0 {
        return Err(Error::Precondition("depth must be >= 1".into()));
    }
    check_pair(model, a, b)?;
    let mut ev = Evaluator::new(model, a, b);
    for len in 1..=depth as usize {
        if let Some(rel) = first_trivial_at(&mut ev, &mut Vec::new(), len) {
            return Ok(OracleReport {
                depth,
                verdict: OracleVerdict::RelationFound,
                relation: Some(rel),
                words_checked: 0,
                min_displacement_ratio: None,
                fitted_l: None,
                fitted_c: None,
                predicted_holds: None,
            });
        }
    }
    // all nontrivial; now pairwise distinctness
    let mut seen: HashMap<(u64, u64, bool), Vec<i32>> = HashMap::new();
    let mut clash: Option<Word> = None;
    let mut count = 0u64;
    walk(&mut ev, &mut Vec::new(), depth as usize, &mut |ev, w| {
        count += 1;
        let fp = ev.fingerprint();
        match seen.get(&fp) {
            None => {
                seen.insert(fp, w.to_vec());
                Ok(true)
            }
            Some(other) => {
                if evaluate_fresh(model, a, b, other) == ev.materialize() {
                    let rel = Word(other.clone()).formal_inverse().concat(&Word(w.to_vec())).free_reduce();
                    clash = Some(rel);
                    Ok(false)
                } else {
                    Ok(true)
                }
            }
        }
    })?;
    Ok(OracleReport {
        depth,
        verdict: if clash.is_some() { OracleVerdict::RelationFound } else { OracleVerdict::FreeToDepth },
        relation: clash,
        words_checked: count,
        min_displacement_ratio: None,
        fitted_l: None,
        fitted_c: None,
        predicted_holds: None,
    })
}

/// Orbit-embedding quality at `base`: the minimum of `|w(base) - base| / |w|`
/// over reduced words up to `depth`, compared with a predicted constant
/// (additive constant zero).
pub fn embedding_fit(
    model: &ActionModel,
    a: &Word,
    b: &Word,
    base: &Point,
    depth: u32,
    predicted: Option<Rational>,
) -> Result<OracleReport> {
    if depth == 0 {
        return Err(Error::Precondition("depth must be >= 1".into()));
    }
    check_pair(model, a, b)?;
    if model.is_identity(a) || model.is_identity(b) {
        return Err(Error::Precondition("a and b must be nontrivial".into()));
    }
    model.validate_point(base)?;
    // |w(u) - u| = |u^-1 w u|: conjugate and measure at the origin
    let (a, b, base) = match base {
        Point::Word(u) if model.is_cayley() && *base != model.origin() => {
            let ui = model.inverse(u);
            let conj = |g: &Word| model.canon(&ui.concat(g).concat(u));
            (conj(a), conj(b), model.origin())
        }
        _ => (a.clone(), b.clone(), base.clone()),
    };
    let (a, b, base) = (&a, &b, &base);
    let mut ev = Evaluator::new(model, a, b);
    let mut min_ratio: Option<Rational> = None;
    let mut max_ratio: Option<Rational> = None;
    let mut count = 0u64;
    walk(&mut ev, &mut Vec::new(), depth as usize, &mut |ev, w| {
        count += 1;
        let d = ev.displacement(model, base)?;
        let r = Rational::new(d as i128, w.len() as i128);
        min_ratio = Some(min_ratio.map_or(r, |m| m.min(r)));
        max_ratio = Some(max_ratio.map_or(r, |m| m.max(r)));
        Ok(true)
    })?;
    let min_r = min_ratio.expect("depth >= 1 gives words");
    let max_r = max_ratio.expect("depth >= 1 gives words");
    let fitted_l = if min_r > Rational::from_integer(0) {
        Some(max_r.max(min_r.recip()))
    } else {
        None
    };
    Ok(OracleReport {
        depth,
        verdict: if min_r > Rational::from_integer(0) { OracleVerdict::FreeToDepth } else { OracleVerdict::RelationFound },
        relation: None,
        words_checked: count,
        min_displacement_ratio: Some(min_r),
        fitted_l,
        fitted_c: fitted_l.map(|_| Rational::from_integer(0)),
        predicted_holds: predicted.map(|p| min_r >= p),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Certified,
    FreeToDepth,
    RelationFound,
    Unchecked,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: i64,
    pub m: i64,
    pub certifier: Option<String>,
    pub oracle: CellStatus,
    pub status: CellStatus,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub exceptional_pairs: Vec<(i64, i64)>,
    /// Cells the certifier claimed but the oracle refuted. Must be empty.
    pub disagreements: Vec<(i64, i64)>,
}

/// Sweeps `(n, m)` cells in order of `n + m`, recording the certifier's
/// verdict (via `certify`) and the oracle's.
pub fn exceptional_sweep<F>(
    model: &ActionModel,
    a: &Word,
    b: &Word,
    n_range: (i64, i64),
    m_range: (i64, i64),
    depth: u32,
    mut certify: F,
) -> Result<SweepTable>
where
    F: FnMut(i64, i64) -> Option<String>,
{
    if depth < 2 {
        return Err(Error::Precondition("sweep depth must be >= 2".into()));
    }
    let mut cells: Vec<(i64, i64)> = Vec::new();
    for n in n_range.0..=n_range.1 {
        for m in m_range.0..=m_range.1 {
            if n != 0 && m != 0 {
                cells.push((n, m));
            }
        }
    }
    cells.sort_by_key(|&(n, m)| (n.abs() + m.abs(), n, m));
    let mut rows = Vec::with_capacity(cells.len());
    let mut exceptional = Vec::new();
    let mut disagreements = Vec::new();
    for (n, m) in cells {
        let an = model.power(a, n);
        let bm = model.power(b, m);
        let (oracle, witness) = match freeness_to_depth(model, &an, &bm, depth) {
            Ok(r) if r.verdict == OracleVerdict::FreeToDepth => (CellStatus::FreeToDepth, None),
            Ok(r) => (CellStatus::RelationFound, r.relation.map(|w| w.render(&['x', 'y']))),
            Err(Error::CapExceeded { .. }) => (CellStatus::Unchecked, None),
            Err(e) => return Err(e),
        };
        let cert = certify(n, m);
        if oracle == CellStatus::RelationFound {
            exceptional.push((n, m));
            if cert.is_some() {
                disagreements.push((n, m));
            }
        }
        let status = match (&cert, oracle) {
            (Some(_), CellStatus::FreeToDepth) => CellStatus::Certified,
            (_, s) => s,
        };
        rows.push(SweepRow { n, m, certifier: cert, oracle, status, witness });
    }
    Ok(SweepTable { rows, exceptional_pairs: exceptional, disagreements })
}

/// Writes the sweep as CSV, one row per cell.
pub fn write_sweep_csv<W: std::io::Write>(table: &SweepTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Precondition(format!("csv: {e}"));
    w.write_record(["n", "m", "certifier", "oracle", "status", "witness"]).map_err(io)?;
    for r in &table.rows {
        let status = |s: CellStatus| serde_json::to_value(s).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        w.write_record([
            r.n.to_string(),
            r.m.to_string(),
            r.certifier.clone().unwrap_or_default(),
            status(r.oracle),
            status(r.status),
            r.witness.clone().unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Precondition(format!("csv: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ModelSpec};
    use proptest::prelude::*;

    const XY: [char; 2] = ['x', 'y'];

    fn xy(s: &str) -> Word {
        Word::parse(s, &XY).unwrap()
    }

    #[test]
    fn word_counts() {
        let w = enumerate_reduced_words(2, 8).unwrap();
        for len in 1..=8u32 {
            let n = w.iter().filter(|x| x.len() == len as usize).count() as u64;
            assert_eq!(n, 4 * 3u64.pow(len - 1));
            assert_eq!(n, count_reduced_words(2, len));
        }
        assert_eq!(enumerate_reduced_words(2, 1).unwrap().len(), 4);
        assert_eq!(w.iter().filter(|x| x.len() == 3).count(), 36);
        let r1 = enumerate_reduced_words(1, 3).unwrap();
        assert_eq!(r1, vec![xy("x"), xy("X"), xy("xx"), xy("XX"), xy("xxx"), xy("XXX")]);
        // order: length, then x < X < y < Y
        let mut sorted = w.clone();
        sorted.sort();
        assert_eq!(sorted, w);
        let words6 = enumerate_reduced_words(2, 6).unwrap().len();
        let words5 = enumerate_reduced_words(2, 5).unwrap().len();
        assert_eq!((words5, words6), (484, 1456));
    }

    #[test]
    fn triviality_examples() {
        let f2 = build_model(&ModelSpec::free_group(2)).unwrap();
        let (a, b) = (Word::from([1]), Word::from([2]));
        assert!(!is_trivial(&f2, &xy("xyXY"), &a, &b).unwrap());
        assert!(is_trivial(&f2, &xy("xY"), &a, &a).unwrap());
        let zp = build_model(&ModelSpec::free_product()).unwrap();
        let g = Word::from([1, 1, 2]);
        let h = Word::from([1, 1]);
        assert!(is_trivial(&zp, &xy("YxYx"), &g, &h).unwrap());
        assert!(acts_trivially_on_ball(&zp, &xy("YxYx"), &g, &h, 3).unwrap());
        assert!(is_trivial(&zp, &xy("xxY"), &g, &h).is_ok());
    }

    #[test]
    fn freeness_examples() {
        let f2 = build_model(&ModelSpec::free_group(2)).unwrap();
        let r = freeness_to_depth(&f2, &Word::from([1, 1]), &Word::from([2, 2]), 6).unwrap();
        assert_eq!(r.verdict, OracleVerdict::FreeToDepth);
        assert_eq!(r.words_checked, 1456);
        let r = freeness_to_depth(&f2, &Word::from([1]), &Word::from([1]), 2).unwrap();
        assert_eq!(r.relation, Some(xy("xY")));
        let zp = build_model(&ModelSpec::free_product()).unwrap();
        let r = freeness_to_depth(&zp, &Word::from([1, 1, 2]), &Word::from([1, 1]), 4).unwrap();
        assert_eq!(r.verdict, OracleVerdict::RelationFound);
        let rel = r.relation.unwrap();
        assert_eq!(rel.len(), 4);
        assert_eq!(rel, xy("xYxY"));
    }

    #[test]
    fn commuting_pair_found_by_distinctness_or_triviality() {
        let f2 = build_model(&ModelSpec::free_group(2)).unwrap();
        let r = freeness_to_depth(&f2, &Word::from([1]), &Word::from([1, 1]), 3).unwrap();
        assert_eq!(r.verdict, OracleVerdict::RelationFound);
        assert!(is_trivial(&f2, r.relation.as_ref().unwrap(), &Word::from([1]), &Word::from([1, 1])).unwrap());
    }

    #[test]
    fn huge_powers_are_cheap() {
        let f2 = build_model(&ModelSpec::free_group(2)).unwrap();
        let a = f2.power(&Word::from([1, 2, -1]), 116_040);
        let b = f2.power(&Word::from([2, 2, 1]), 116_040);
        let r = freeness_to_depth(&f2, &a, &b, 6).unwrap();
        assert_eq!(r.verdict, OracleVerdict::FreeToDepth);
    }

    #[test]
    fn embedding_examples() {
        let f2 = build_model(&ModelSpec::free_group(2)).unwrap();
        let a100 = f2.power(&Word::from([1]), 100);
        let b100 = f2.power(&Word::from([2]), 100);
        let r = embedding_fit(&f2, &a100, &b100, &f2.origin(), 6, Some(Rational::from_integer(1))).unwrap();
        assert_eq!(r.min_displacement_ratio, Some(Rational::from_integer(100)));
        assert_eq!(r.predicted_holds, Some(true));
        let r = embedding_fit(&f2, &Word::from([1]), &Word::from([2]), &f2.origin(), 6, Some(Rational::from_integer(1))).unwrap();
        assert_eq!(r.min_displacement_ratio, Some(Rational::from_integer(1)));
        assert!(embedding_fit(&f2, &Word::from([1]), &Word::empty(), &f2.origin(), 3, None).is_err());
    }

    #[test]
    fn embedding_off_origin_matches_direct() {
        for spec in [ModelSpec::free_group(2), ModelSpec::free_times_z2(2), ModelSpec::free_product()] {
            let m = build_model(&spec).unwrap();
            let (a, b) = (m.canon(&Word::from([1, 2])), m.canon(&Word::from([2])));
            let u = m.canon(&Word::from([2, 1, 1]));
            let base = Point::Word(u.clone());
            let r = embedding_fit(&m, &a, &b, &base, 4, None).unwrap();
            let mut min: Option<Rational> = None;
            for w in enumerate_reduced_words(2, 4).unwrap() {
                let g = evaluate(&m, &w, &a, &b).unwrap();
                let q = Rational::new(m.displacement(&g, &base).unwrap() as i128, w.len() as i128);
                min = Some(min.map_or(q, |x| x.min(q)));
            }
            assert_eq!(r.min_displacement_ratio, min);
        }
    }

    #[test]
    fn sweep_examples() {
        let f2 = build_model(&ModelSpec::free_group(2)).unwrap();
        let t = exceptional_sweep(&f2, &Word::from([1]), &Word::from([2]), (1, 5), (1, 5), 4, |_, _| None).unwrap();
        assert!(t.exceptional_pairs.is_empty());
        assert_eq!(t.rows.len(), 25);
        assert_eq!((t.rows[0].n, t.rows[0].m), (1, 1));
        let zp = build_model(&ModelSpec::free_product()).unwrap();
        let t = exceptional_sweep(&zp, &Word::from([1, 2]), &Word::from([1]), (1, 3), (1, 3), 4, |_, _| None).unwrap();
        assert!(t.exceptional_pairs.contains(&(1, 1)));
        let t = exceptional_sweep(&f2, &Word::from([1]), &Word::from([1, 1]), (1, 3), (1, 3), 4, |_, _| None).unwrap();
        assert_eq!(t.exceptional_pairs.len(), 9);
        let mut buf = Vec::new();
        write_sweep_csv(&t, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 10);
    }

    #[test]
    fn finite_model_oracle() {
        let c5 = build_model(&ModelSpec::cycle(5)).unwrap();
        let r = freeness_to_depth(&c5, &Word::from([1]), &Word::from([1, 1]), 4).unwrap();
        assert_eq!(r.verdict, OracleVerdict::RelationFound);
    }

    fn word_strategy(k: i32, max_len: usize) -> impl Strategy<Value = Word> {
        proptest::collection::vec((1..=k, any::<bool>()), 1..=max_len)
            .prop_map(|v| Word(v.into_iter().map(|(g, s)| if s { g } else { -g }).collect()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn rope_matches_direct_evaluation(a in word_strategy(2, 5), b in word_strategy(2, 5), w in word_strategy(2, 7), n in 1i64..20) {
            // rope evaluation against concatenate-then-reduce
            for spec in [ModelSpec::free_group(2), ModelSpec::free_product(), ModelSpec::free_times_z2(1)] {
                let m = build_model(&spec).unwrap();
                let a = m.power(&m.canon(&a), n);
                let b = m.canon(&b);
                let w = w.free_reduce();
                if w.is_empty() { continue; }
                let direct = evaluate(&m, &w, &a, &b).unwrap();
                let rope = match evaluate_fresh(&m, &a, &b, w.letters()) {
                    Materialized::Word(v) => v,
                    Materialized::Perm(_) => unreachable!(),
                };
                prop_assert_eq!(rope, direct);
            }
        }

        #[test]
        fn rope_undo_restores_state(a in word_strategy(2, 4), b in word_strategy(2, 4), w in word_strategy(2, 6)) {
            let m = build_model(&ModelSpec::free_group(2)).unwrap();
            let mut ev = Evaluator::new(&m, &a, &b);
            ev.push(1);
            let before = (ev.fingerprint(), ev.materialize());
            let w = w.free_reduce();
            for &l in w.letters() { ev.push(l); }
            for _ in w.letters() { ev.pop(); }
            prop_assert_eq!((ev.fingerprint(), ev.materialize()), before);
        }
    }
}
