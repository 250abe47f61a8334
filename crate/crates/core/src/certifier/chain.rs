//! Witness chains: the interpolating point sequence for one reduced word
//! in `a = f^n`, `b = g`, with every clause recomputed from distances.

use serde::{Deserialize, Serialize};

use super::three_points::{three_points_with, ThreePointsReport};
use crate::error::{Error, Result};
use crate::isometry::{translation_length, TranslationLength};
use crate::model::{ActionModel, Point};
use crate::rational::{self, int, Rational};
use crate::word::Word;

/// Largest `|A|·|B|` handed to the brute-force segment overlap.
const BRUTE_OVERLAP_LIMIT: u64 = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WordCase {
    /// `b^m`.
    O,
    /// Starts with a power of `a`.
    I,
    /// Starts with a power of `b`.
    II,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub label: String,
    pub point: Point,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub label: String,
    pub from: String,
    pub to: String,
    pub length: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseResult {
    pub clause: u8,
    pub holds: bool,
    /// Worst measured value over `j` (zero when the clause is vacuous).
    #[serde(with = "rational::serde_str")]
    pub measured: Rational,
    pub relation: String,
    #[serde(with = "rational::serde_str")]
    pub bound: Rational,
    /// The `j` attaining `measured`.
    pub worst_j: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Band {
    /// `[4 tr(a)/5, 6 tr(a)/5]`.
    Long,
    /// `[tr(a)/100, tr(a)/10]`.
    Short,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    pub gaps: Vec<u64>,
    pub bands: Vec<Option<Band>>,
    pub expected: Vec<Band>,
    pub all_in_bands: bool,
    pub pattern_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessChain {
    pub word: Word,
    pub case: WordCase,
    pub x: Point,
    pub y: Point,
    #[serde(with = "rational::serde_str")]
    pub e: Rational,
    #[serde(rename = "Q")]
    pub q: i64,
    pub delta: u64,
    pub chain: Vec<LabeledPoint>,
    /// Labels of the surviving sequence `u_k`.
    pub surviving: Vec<String>,
    pub segments: Vec<SegmentRecord>,
    pub condition_star: Vec<ClauseResult>,
    pub gap_bands: Option<GapReport>,
    pub three_points: Option<ThreePointsReport>,
    /// `L = Q·λ_0/500`, `λ_0 = (E/100 - δ)^-1 · 2 tr(a)`.
    #[serde(with = "rational::serde_str")]
    pub embedding_constant: Rational,
    /// `|w(base) - base|`, based at `x` in case (I) and `y` otherwise.
    pub displacement: u64,
    pub embedding_holds: bool,
    pub all_hold: bool,
    pub failures: Vec<String>,
}

/// `(letter, exponent)` runs of a reduced word in `x = 1`, `y = 2`.
fn syllables(word: &Word) -> Result<Vec<(i32, i64)>> {
    if word.is_empty() || !word.is_freely_reduced() {
        return Err(Error::InvalidWord("chain words must be non-empty and freely reduced".into()));
    }
    let mut out: Vec<(i32, i64)> = Vec::new();
    for &l in word.letters() {
        if !matches!(l, 1 | -1 | 2 | -2) {
            return Err(Error::InvalidWord(format!("letter {l} is not x or y")));
        }
        let sign = if l > 0 { 1 } else { -1 };
        match out.last_mut() {
            Some((g, e)) if *g == l.abs() => *e += sign,
            _ => out.push((l.abs(), sign)),
        }
    }
    Ok(out)
}

/// `m = o·Q + l` with `l` carrying the sign of `m` and `|l| < Q`.
fn split(m: i64, q: i64) -> (i64, i64) {
    (m / q, m % q)
}

/// Diameter of the `c`-overlap of segments `[u, v]` and `[p, q]`.
fn segment_overlap(model: &ActionModel, s1: (&Point, &Point), s2: (&Point, &Point), c: u64) -> Result<u64> {
    let d = |x: &Point, y: &Point| model.distance_unchecked(x, y).map(|v| v as i128);
    if model.is_tree() && c == 0 {
        // four-point formula: the shared bridge of two tree geodesics
        let s = d(s1.0, s1.1)? + d(s2.0, s2.1)?;
        let t = (d(s1.0, s2.0)? + d(s1.1, s2.1)?).min(d(s1.0, s2.1)? + d(s1.1, s2.0)?);
        return Ok(((s - t) / 2).max(0) as u64);
    }
    let ga = model.geodesic(s1.0, s1.1)?.points;
    let gb = model.geodesic(s2.0, s2.1)?.points;
    if (ga.len() as u64) * (gb.len() as u64) > BRUTE_OVERLAP_LIMIT {
        return Err(Error::Precondition("segments too long for the brute-force overlap".into()));
    }
    let near = |p: &Point, set: &[Point]| -> Result<bool> {
        for q in set {
            if model.distance_unchecked(p, q)? <= c {
                return Ok(true);
            }
        }
        Ok(false)
    };
    let mut members = Vec::new();
    for p in &ga {
        if near(p, &gb)? {
            members.push(p);
        }
    }
    for p in &gb {
        if near(p, &ga)? {
            members.push(p);
        }
    }
    let mut diam = 0;
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            diam = diam.max(model.distance_unchecked(members[i], members[j])?);
        }
    }
    Ok(diam)
}

fn band_of(gap: u64, tr: &TranslationLength) -> Option<Band> {
    let g = int(gap as i128);
    if int(5) * g >= int(4) * tr.upper && int(5) * g <= int(6) * tr.lower {
        Some(Band::Long)
    } else if int(100) * g >= tr.upper && int(10) * g <= tr.lower {
        Some(Band::Short)
    } else {
        None
    }
}

struct Builder<'m> {
    model: &'m ActionModel,
    chain: Vec<LabeledPoint>,
    keep: Vec<bool>,
}

impl Builder<'_> {
    fn add(&mut self, label: String, g: &Word, base: &Point, keep: bool) -> Result<usize> {
        self.chain.push(LabeledPoint { label, point: self.model.apply(g, base)? });
        self.keep.push(keep);
        Ok(self.chain.len() - 1)
    }
}

/// Block `j` of the chain: indices of `p_j, q_j, r_j, s_j`.
#[derive(Clone, Copy)]
struct Block {
    p: Option<usize>,
    q: Option<usize>,
    r: usize,
    s: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn build_witness_chain(
    model: &ActionModel,
    word: &Word,
    a: &Word,
    b: &Word,
    x: &Point,
    y: &Point,
    e: Rational,
    q: i64,
    delta: u64,
) -> Result<WitnessChain> {
    let syl = syllables(word)?;
    if q < 1 {
        return Err(Error::Precondition("Q must be >= 1".into()));
    }
    model.validate_point(x)?;
    model.validate_point(y)?;
    let a = model.canon(a);
    let b = model.canon(b);
    let tr_a = translation_length(model, &a, 8)?;
    let lambda0 = int(2) * tr_a.upper / (e / int(100) - int(delta as i128));
    let embedding_constant = int(q as i128) * lambda0 / int(500);
    let w_elem = model.canon(&Word(
        word.letters()
            .iter()
            .flat_map(|&l| match l {
                1 => a.letters().to_vec(),
                -1 => model.inverse(&a).0,
                2 => b.letters().to_vec(),
                _ => model.inverse(&b).0,
            })
            .collect(),
    ));
    let case = match syl[0].0 {
        2 if syl.len() == 1 => WordCase::O,
        2 => WordCase::II,
        _ => WordCase::I,
    };
    let base = if case == WordCase::I { x } else { y };
    let displacement = model.displacement(&w_elem, base)?;
    let mut out = WitnessChain {
        word: word.clone(),
        case,
        x: x.clone(),
        y: y.clone(),
        e,
        q,
        delta,
        chain: Vec::new(),
        surviving: Vec::new(),
        segments: Vec::new(),
        condition_star: Vec::new(),
        gap_bands: None,
        three_points: None,
        embedding_constant,
        displacement,
        embedding_holds: false,
        all_hold: false,
        failures: Vec::new(),
    };
    if case == WordCase::O {
        out.embedding_holds = displacement > 0;
        out.all_hold = out.embedding_holds;
        if !out.all_hold {
            out.failures.push("b^m fixes y".into());
        }
        return Ok(out);
    }

    // pairs (n_j, m_j); case (II) carries a leading m_0
    let (m0, rest) = if case == WordCase::II { (Some(syl[0].1), &syl[1..]) } else { (None, &syl[..]) };
    let mut pairs: Vec<(i64, i64)> = Vec::new();
    let mut it = rest.iter().peekable();
    while let Some(&(g, n)) = it.next() {
        debug_assert_eq!(g, 1);
        let m = match it.peek() {
            Some(&&(2, m)) => {
                it.next();
                m
            }
            _ => 0,
        };
        pairs.push((n, m));
    }
    let i = pairs.len();
    let bq = model.power(&b, q);
    let bq_inv = model.inverse(&bq);
    let a_inv = model.inverse(&a);
    let mut bld = Builder { model, chain: Vec::new(), keep: Vec::new() };
    let mut expected = Vec::new();
    let mut prefix = Word::empty();
    let mut blocks: Vec<Block> = Vec::new();

    // r-ladder from prefix(y) to prefix·b^m(y), returning the index of s
    let ladder = |bld: &mut Builder, prefix: &Word, m: i64, j: usize, keep_r: bool, keep_s: bool, expected: &mut Vec<Band>| -> Result<(usize, usize, i64)> {
        let (o, _) = split(m, q);
        let r = bld.add(format!("r{j}"), prefix, y, keep_r)?;
        let step = if m >= 0 { &bq } else { &bq_inv };
        let mut cur = prefix.clone();
        for k in 1..o.abs() {
            cur = model.compose(&cur, step);
            bld.add(format!("r{j},{k}"), &cur, y, true)?;
        }
        let s = bld.add(format!("s{j}"), &model.compose(prefix, &model.power(&b, m)), y, keep_s)?;
        expected.extend(std::iter::repeat_n(Band::Short, o.unsigned_abs() as usize));
        Ok((r, s, o))
    };

    if let Some(m0) = m0 {
        let (r, s, _) = ladder(&mut bld, &prefix, m0, 0, true, false, &mut expected)?;
        blocks.push(Block { p: None, q: None, r, s });
        prefix = model.power(&b, m0);
    }
    for (j0, &(n, m)) in pairs.iter().enumerate() {
        let j = j0 + 1;
        let last = j == i;
        let (o, _) = split(m, q);
        let p = bld.add(format!("p{j}"), &prefix, x, true)?;
        let step = if n > 0 { &a } else { &a_inv };
        let mut cur = prefix.clone();
        for k in 1..n.abs() {
            cur = model.compose(&cur, step);
            bld.add(format!("p{j},{k}"), &cur, x, true)?;
        }
        cur = model.compose(&cur, step);
        let qi = bld.add(format!("q{j}"), &cur, x, o != 0)?;
        expected.extend(std::iter::repeat_n(Band::Long, n.unsigned_abs() as usize));
        let (r, s, _) = ladder(&mut bld, &cur, m, j, false, last, &mut expected)?;
        blocks.push(Block { p: Some(p), q: Some(qi), r, s });
        prefix = model.compose(&cur, &model.power(&b, m));
    }
    let p_next = bld.add(format!("p{}", i + 1), &prefix, x, false)?;
    let Builder { chain, keep, .. } = bld;
    let pt = |k: usize| &chain[k].point;
    let dist = |u: usize, v: usize| model.distance_unchecked(pt(u), pt(v));
    let c = 10 * delta;

    // segments
    let seg = |label: String, u: usize, v: usize| -> Result<SegmentRecord> {
        Ok(SegmentRecord { label, from: chain[u].label.clone(), to: chain[v].label.clone(), length: dist(u, v)? })
    };
    let off = usize::from(m0.is_some());
    let a_blocks: Vec<(usize, usize)> = blocks[off..].iter().map(|bl| (bl.p.unwrap(), bl.q.unwrap())).collect();
    let mut segments = Vec::new();
    for (j0, bl) in blocks.iter().enumerate() {
        let j = j0 + 1 - off;
        if let (Some(p), Some(q)) = (bl.p, bl.q) {
            segments.push(seg(format!("A{j}"), p, q)?);
        }
        segments.push(seg(format!("B{j}"), bl.r, bl.s)?);
    }
    for (j0, &(p, _)) in a_blocks.iter().enumerate() {
        let j = j0 + 1;
        let p_after = a_blocks.get(j0 + 1).map_or(p_next, |n| n.0);
        if let Some(&(_, q_next)) = a_blocks.get(j0 + 1) {
            segments.push(seg(format!("C{j}"), p, q_next)?);
        }
        segments.push(seg(format!("D{j}"), p, p_after)?);
    }

    // segment conditions
    let mut clause = |n: u8, rel: &str, bound: Rational, vals: Vec<(usize, Rational)>| {
        let worst = vals.iter().copied().max_by(|x, y| x.1.cmp(&y.1).then(y.0.cmp(&x.0)));
        let worst = if rel == ">=" { vals.iter().copied().min_by(|x, y| x.1.cmp(&y.1).then(x.0.cmp(&y.0))) } else { worst };
        let holds = vals.iter().all(|(_, v)| if rel == ">=" { *v >= bound } else { *v <= bound });
        out.condition_star.push(ClauseResult {
            clause: n,
            holds,
            measured: worst.map_or(int(0), |w| w.1),
            relation: rel.into(),
            bound,
            worst_j: worst.map(|w| w.0),
        });
    };
    let two_delta = int(2 * delta as i128);
    let mut v1 = Vec::new();
    for (j0, bl) in blocks[off..].iter().enumerate() {
        let j = j0 + 1;
        v1.push((j, int(dist(bl.q.unwrap(), bl.r)? as i128)));
        match j0 + off {
            0 => v1.push((j, int(model.distance_unchecked(x, y)? as i128))),
            k => v1.push((j, int(dist(bl.p.unwrap(), blocks[k - 1].s)? as i128))),
        }
    }
    clause(1, "<=", two_delta, v1);
    let v2 = a_blocks.iter().enumerate().map(|(j0, &(p, q))| Ok((j0 + 1, int(dist(p, q)? as i128)))).collect::<Result<Vec<_>>>()?;
    clause(2, ">=", int(1000) * e, v2);
    let mut v3 = Vec::new();
    let mut v4 = Vec::new();
    for (j0, bl) in blocks[off..].iter().enumerate() {
        let (p, q) = (bl.p.unwrap(), bl.q.unwrap());
        v3.push((j0 + 1, int(segment_overlap(model, (pt(p), pt(q)), (pt(bl.r), pt(bl.s)), c)? as i128)));
        if j0 + off > 0 {
            let prev = blocks[j0 + off - 1];
            v4.push((j0 + 1, int(segment_overlap(model, (pt(prev.r), pt(prev.s)), (pt(p), pt(q)), c)? as i128)));
        }
    }
    clause(3, "<=", e, v3);
    clause(4, "<=", e, v4);
    let mut v5 = Vec::new();
    for j0 in 0..a_blocks.len().saturating_sub(1) {
        let (p1, q1) = a_blocks[j0];
        let (p2, q2) = a_blocks[j0 + 1];
        v5.push((j0 + 1, int(segment_overlap(model, (pt(p1), pt(q1)), (pt(p2), pt(q2)), c)? as i128)));
    }
    clause(5, "<=", e, v5);

    // surviving sequence
    let u: Vec<usize> = (0..chain.len()).filter(|&k| keep[k]).collect();
    let gaps: Vec<u64> = u.windows(2).map(|w| dist(w[0], w[1])).collect::<Result<_>>()?;
    let bands: Vec<Option<Band>> = gaps.iter().map(|&g| band_of(g, &tr_a)).collect();
    let all_in_bands = bands.iter().all(Option::is_some);
    let pattern_holds = bands.len() == expected.len() && bands.iter().zip(&expected).all(|(b, e)| *b == Some(*e));
    out.gap_bands = Some(GapReport { gaps, bands, expected, all_in_bands, pattern_holds });
    if u.len() >= 3 {
        out.three_points = Some(three_points_with(u.len(), |i, j| dist(u[i], u[j]), e, delta)?);
    }
    out.embedding_holds = embedding_constant * int(displacement as i128) >= int(word.len() as i128);
    out.surviving = u.iter().map(|&k| chain[k].label.clone()).collect();
    out.segments = segments;
    out.chain = chain;

    for cl in &out.condition_star {
        if !cl.holds {
            out.failures.push(format!(
                "clause ({}) fails at j={}: {} {} {}",
                cl.clause,
                cl.worst_j.unwrap_or(0),
                rational::render(&cl.measured),
                cl.relation,
                rational::render(&cl.bound)
            ));
        }
    }
    let gb = out.gap_bands.as_ref().expect("set above");
    if !gb.all_in_bands {
        out.failures.push("a surviving gap lies outside both bands".into());
    } else if !gb.pattern_holds {
        out.failures.push("gap bands do not follow the |n_j|, |o_j| pattern".into());
    }
    if let Some(tp) = &out.three_points {
        if !tp.holds {
            out.failures.push(format!("three points condition fails (first violation {:?})", tp.first_violation));
        }
    }
    if !out.embedding_holds {
        out.failures.push("L·|w(x) - x| < |w|".into());
    }
    out.all_hold = out.failures.is_empty();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ModelSpec};
    use crate::rational::ratio;

    fn setup() -> (ActionModel, Word, Word) {
        let m = build_model(&ModelSpec::free_group(2)).unwrap();
        let a = m.power(&Word::from([1]), 204);
        (m, a, Word::from([2]))
    }

    fn xy(s: &str) -> Word {
        Word::parse(s, &['x', 'y']).unwrap()
    }

    #[test]
    fn split_truncates_toward_zero() {
        assert_eq!(split(7, 3), (2, 1));
        assert_eq!(split(-7, 3), (-2, -1));
        assert_eq!(split(2, 3), (0, 2));
        assert_eq!(split(-3, 3), (-1, 0));
    }

    #[test]
    fn short_words_verify() {
        let (m, a, b) = setup();
        let e = m.origin();
        for w in ["xy", "xY", "xyxy", "XYYYYYYYx", "xxyyyyyyyX"] {
            let ch = build_witness_chain(&m, &xy(w), &a, &b, &e, &e, ratio(1, 5), 3, 0).unwrap();
            assert!(ch.all_hold, "{w}: {:?}", ch.failures);
            let c1 = &ch.condition_star[0];
            assert_eq!(c1.measured, int(0));
        }
    }

    #[test]
    fn single_letter_degenerates() {
        let (m, a, b) = setup();
        let e = m.origin();
        let ch = build_witness_chain(&m, &xy("X"), &a, &b, &e, &e, ratio(1, 5), 3, 0).unwrap();
        assert_eq!(ch.surviving, vec!["p1", "s1"]);
        assert!(ch.three_points.is_none());
        assert!(ch.all_hold);
    }

    #[test]
    fn dependent_pair_breaks_clause_five() {
        let (m, a, _) = setup();
        let e = m.origin();
        let ch = build_witness_chain(&m, &xy("xYx"), &a, &a, &e, &e, ratio(1, 5), 3, 0).unwrap();
        let c5 = ch.condition_star.iter().find(|c| c.clause == 5).unwrap();
        assert!(!c5.holds);
        assert_eq!(c5.measured, int(204));
    }

    #[test]
    fn removal_rules() {
        let (m, a, b) = setup();
        let e = m.origin();
        // m_1 = 7 = 2·3 + 1: r1,1 survives, q1 stays since o_1 != 0, q2 goes since o_2 = 0
        let ch = build_witness_chain(&m, &xy("xyyyyyyyx"), &a, &b, &e, &e, ratio(1, 5), 3, 0).unwrap();
        assert_eq!(ch.surviving, vec!["p1", "q1", "r1,1", "p2", "s2"]);
        let gb = ch.gap_bands.as_ref().unwrap();
        assert_eq!(gb.gaps, vec![204, 3, 4, 204]);
        assert!(gb.pattern_holds, "{gb:?}");
    }

    #[test]
    fn segment_overlap_tree_formula_matches_brute_force() {
        let m = build_model(&ModelSpec::free_group(2)).unwrap();
        let pts: Vec<Point> = m.ball(&m.origin(), 2).unwrap();
        for (i, u) in pts.iter().enumerate().step_by(3) {
            for v in pts.iter().skip(i).step_by(4) {
                for p in pts.iter().step_by(5) {
                    for q in pts.iter().step_by(2) {
                        let fast = segment_overlap(&m, (u, v), (p, q), 0).unwrap();
                        let brute = brute_tree(&m, u, v, p, q);
                        assert_eq!(fast, brute, "{u:?} {v:?} {p:?} {q:?}");
                    }
                }
            }
        }
    }

    fn brute_tree(m: &ActionModel, u: &Point, v: &Point, p: &Point, q: &Point) -> u64 {
        let ga = m.geodesic(u, v).unwrap().points;
        let gb = m.geodesic(p, q).unwrap().points;
        let common: Vec<&Point> = ga.iter().filter(|x| gb.contains(x)).collect();
        let mut d = 0;
        for x in &common {
            for y in &common {
                d = d.max(m.distance(x, y).unwrap());
            }
        }
        d
    }
}
