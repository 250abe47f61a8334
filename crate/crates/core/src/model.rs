//! Action models: a point space with an exact integer metric and a group
//! acting on it by isometries.
//!
//! Four families are built in:
//!
//! * `free-group`: the free group of rank k acting on its Cayley tree by
//!   left multiplication (points are reduced words).
//! * `free-product`: `Z * Z/2 = <f> * <s>` on its Cayley tree with respect to
//!   `{f, s}`; canonical form alternates f-powers and single `s` letters.
//! * `free-times-z2`: `F_k x Z/2` on the doubled tree (tree x edge). This is
//!   the built-in model with delta > 0 and hyperbolic elements, e.g. `a s`
//!   has no invariant geodesic.
//! * `cycle` and `explicit-graph`: finite graphs with a group given by
//!   rotations or by vertex permutations.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{int, Rational};
use crate::word::{common_prefix, Word};

pub const DEFAULT_CAP: u64 = 64;

fn default_cap() -> u64 {
    DEFAULT_CAP
}

/// The model spec document. Field names are part of the CLI schema.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    FreeGroup {
        rank: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generators: Option<Vec<Vec<i32>>>,
        #[serde(default = "default_cap")]
        cap: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        letters: Option<String>,
    },
    FreeProduct {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generators: Option<Vec<Vec<i32>>>,
        #[serde(default = "default_cap")]
        cap: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        letters: Option<String>,
    },
    FreeTimesZ2 {
        rank: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generators: Option<Vec<Vec<i32>>>,
        #[serde(default = "default_cap")]
        cap: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        letters: Option<String>,
    },
    Cycle {
        n: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generators: Option<Vec<Vec<i32>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        letters: Option<String>,
    },
    ExplicitGraph {
        adjacency: Vec<Vec<usize>>,
        /// `generators[i][v]` is the image of vertex `v` under generator `i`.
        generators: Vec<Vec<i64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        letters: Option<String>,
    },
}

impl ModelSpec {
    pub fn free_group(rank: u32) -> Self {
        ModelSpec::FreeGroup { rank, generators: None, cap: DEFAULT_CAP, letters: None }
    }

    pub fn free_product() -> Self {
        ModelSpec::FreeProduct { generators: None, cap: DEFAULT_CAP, letters: None }
    }

    pub fn free_times_z2(rank: u32) -> Self {
        ModelSpec::FreeTimesZ2 { rank, generators: None, cap: DEFAULT_CAP, letters: None }
    }

    pub fn cycle(n: u64) -> Self {
        ModelSpec::Cycle { n, generators: None, letters: None }
    }

    pub fn explicit(adjacency: Vec<Vec<usize>>, generators: Vec<Vec<i64>>) -> Self {
        ModelSpec::ExplicitGraph { adjacency, generators, letters: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    FreeGroup,
    FreeProduct,
    FreeTimesZ2,
    Cycle,
    ExplicitGraph,
}

/// A point: a canonical word in the Cayley models, a vertex index otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Vertex(usize),
    Word(Word),
}

impl Point {
    pub fn word(&self) -> Option<&Word> {
        match self {
            Point::Word(w) => Some(w),
            Point::Vertex(_) => None,
        }
    }
}

/// Vertex path with consecutive points at distance one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub points: Vec<Point>,
}

impl GeodesicPath {
    pub fn length(&self) -> u64 {
        self.points.len().saturating_sub(1) as u64
    }

    pub fn first(&self) -> &Point {
        &self.points[0]
    }

    pub fn last(&self) -> &Point {
        self.points.last().expect("path is never empty")
    }

    pub fn reversed(&self) -> GeodesicPath {
        let mut points = self.points.clone();
        points.reverse();
        GeodesicPath { points }
    }

    pub fn midpoint(&self) -> &Point {
        &self.points[self.points.len() / 2]
    }
}

#[derive(Clone, Debug)]
enum Structure {
    /// Cayley tree of `F_free * (Z/2)^{involution}`; the involution, if any,
    /// is letter `free + 1`.
    Tree { free: u32, involution: Option<i32> },
    /// `F_rank x Z/2`, central involution is letter `rank + 1`.
    Doubled { rank: u32 },
    Cycle { n: u64 },
    Graph(Box<Graph>),
}

#[derive(Clone, Debug)]
struct Graph {
    adjacency: Vec<Vec<usize>>,
    perms: Vec<Vec<usize>>,
    inverse_perms: Vec<Vec<usize>>,
    dist: Vec<Vec<u32>>,
}

const UNREACHABLE: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct ActionModel {
    spec: ModelSpec,
    kind: ModelKind,
    structure: Structure,
    alphabet: Vec<char>,
    cap: u64,
}

fn alphabet_from(letters: &Option<String>, default: &str, count: usize) -> Result<Vec<char>> {
    let chars: Vec<char> = match letters {
        Some(s) => s.chars().collect(),
        None => default.chars().take(count).collect(),
    };
    if chars.len() != count {
        return Err(Error::MalformedSpec(format!(
            "need {count} letters, got {}",
            chars.len()
        )));
    }
    let mut seen = HashSet::new();
    for c in &chars {
        if !c.is_ascii_lowercase() || !seen.insert(*c) {
            return Err(Error::MalformedSpec(format!("bad letter {c:?}")));
        }
    }
    Ok(chars)
}

fn check_standard_generators(generators: &Option<Vec<Vec<i32>>>, count: usize) -> Result<()> {
    if let Some(gens) = generators {
        let standard: Vec<Vec<i32>> = (1..=count as i32).map(|g| vec![g]).collect();
        if *gens != standard {
            return Err(Error::MalformedSpec(
                "Cayley models use the standard basis; generators must be [[1],[2],...]".into(),
            ));
        }
    }
    Ok(())
}

fn bfs_distances(adjacency: &[Vec<usize>], source: usize) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; adjacency.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        for &w in &adjacency[v] {
            if dist[w] == UNREACHABLE {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Builds and validates a model.
pub fn build_model(spec: &ModelSpec) -> Result<ActionModel> {
    let (kind, structure, alphabet, cap) = match spec {
        ModelSpec::FreeGroup { rank, generators, cap, letters } => {
            if *rank == 0 {
                return Err(Error::MalformedSpec("rank must be >= 1".into()));
            }
            check_standard_generators(generators, *rank as usize)?;
            let alphabet = alphabet_from(letters, "abcdefghijklmnopqrstuvwxyz", *rank as usize)?;
            (ModelKind::FreeGroup, Structure::Tree { free: *rank, involution: None }, alphabet, *cap)
        }
        ModelSpec::FreeProduct { generators, cap, letters } => {
            check_standard_generators(generators, 2)?;
            let alphabet = alphabet_from(letters, "fs", 2)?;
            (
                ModelKind::FreeProduct,
                Structure::Tree { free: 1, involution: Some(2) },
                alphabet,
                *cap,
            )
        }
        ModelSpec::FreeTimesZ2 { rank, generators, cap, letters } => {
            if *rank == 0 {
                return Err(Error::MalformedSpec("rank must be >= 1".into()));
            }
            let count = *rank as usize + 1;
            check_standard_generators(generators, count)?;
            let default: String = "abcdefghijklmnopqr".chars().take(*rank as usize).chain(['s']).collect();
            let alphabet = alphabet_from(letters, &default, count)?;
            (ModelKind::FreeTimesZ2, Structure::Doubled { rank: *rank }, alphabet, *cap)
        }
        ModelSpec::Cycle { n, generators, letters } => {
            if *n < 3 {
                return Err(Error::MalformedSpec("cycle needs n >= 3".into()));
            }
            check_standard_generators(generators, 1)?;
            let alphabet = alphabet_from(letters, "r", 1)?;
            (ModelKind::Cycle, Structure::Cycle { n: *n }, alphabet, u64::MAX)
        }
        ModelSpec::ExplicitGraph { adjacency, generators, letters } => {
            let graph = build_graph(adjacency, generators)?;
            let alphabet =
                alphabet_from(letters, "abcdefghijklmnopqrstuvwxyz", generators.len())?;
            (ModelKind::ExplicitGraph, Structure::Graph(Box::new(graph)), alphabet, u64::MAX)
        }
    };
    let model = ActionModel { spec: spec.clone(), kind, structure, alphabet, cap };
    model.check_generators_isometric()?;
    Ok(model)
}

fn build_graph(adjacency: &[Vec<usize>], generators: &[Vec<i64>]) -> Result<Graph> {
    let n = adjacency.len();
    if n == 0 {
        return Err(Error::MalformedSpec("graph has no vertices".into()));
    }
    let mut adj: Vec<Vec<usize>> = Vec::with_capacity(n);
    for (v, nbrs) in adjacency.iter().enumerate() {
        let mut sorted = nbrs.clone();
        sorted.sort_unstable();
        sorted.dedup();
        for &w in &sorted {
            if w >= n {
                return Err(Error::MalformedSpec(format!("vertex {v} lists unknown vertex {w}")));
            }
            if w == v {
                return Err(Error::MalformedSpec(format!("self-loop at {v}")));
            }
        }
        adj.push(sorted);
    }
    for v in 0..n {
        for &w in &adj[v] {
            if adj[w].binary_search(&v).is_err() {
                return Err(Error::NonSymmetricAdjacency(v, w));
            }
        }
    }
    let mut perms = Vec::new();
    let mut inverse_perms = Vec::new();
    for (i, g) in generators.iter().enumerate() {
        if g.len() != n {
            return Err(Error::NotAnAutomorphism(i + 1, format!("expected {n} images")));
        }
        let mut perm = Vec::with_capacity(n);
        for &img in g {
            if img < 0 || img as usize >= n {
                return Err(Error::NotAnAutomorphism(i + 1, format!("image {img} out of range")));
            }
            perm.push(img as usize);
        }
        let mut inv = vec![usize::MAX; n];
        for (v, &w) in perm.iter().enumerate() {
            if inv[w] != usize::MAX {
                return Err(Error::NotAnAutomorphism(i + 1, "map is not a bijection".into()));
            }
            inv[w] = v;
        }
        for v in 0..n {
            for &w in &adj[v] {
                if adj[perm[v]].binary_search(&perm[w]).is_err() {
                    return Err(Error::NotAnAutomorphism(
                        i + 1,
                        format!("edge {v}-{w} maps to non-edge {}-{}", perm[v], perm[w]),
                    ));
                }
            }
        }
        perms.push(perm);
        inverse_perms.push(inv);
    }
    let dist = (0..n).map(|v| bfs_distances(&adj, v)).collect();
    Ok(Graph { adjacency: adj, perms, inverse_perms, dist })
}

#[inline]
fn tree_inverse_letter(l: i32, involution: Option<i32>) -> i32 {
    if Some(l) == involution {
        l
    } else {
        -l
    }
}

/// Pushes one letter onto a canonical tree word; returns the cancelled
/// letter when the push shortens the word.
#[inline]
pub(crate) fn tree_push(buf: &mut Vec<i32>, letter: i32, involution: Option<i32>) -> Option<i32> {
    let l = match involution {
        Some(s) if letter == -s => s,
        _ => letter,
    };
    if buf.last() == Some(&tree_inverse_letter(l, involution)) {
        buf.pop()
    } else {
        buf.push(l);
        None
    }
}

impl ActionModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    /// Number of generator letters.
    pub fn generator_count(&self) -> usize {
        match &self.structure {
            Structure::Tree { free, involution } => *free as usize + usize::from(involution.is_some()),
            Structure::Doubled { rank } => *rank as usize + 1,
            Structure::Cycle { .. } => 1,
            Structure::Graph(g) => g.perms.len(),
        }
    }

    pub fn generators(&self) -> Vec<Word> {
        (1..=self.generator_count() as i32).map(Word::letter).collect()
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.structure, Structure::Cycle { .. } | Structure::Graph(_))
    }

    /// True for the Cayley-tree models (free group, free product).
    pub fn is_tree(&self) -> bool {
        matches!(self.structure, Structure::Tree { .. })
    }

    pub fn is_cayley(&self) -> bool {
        matches!(self.structure, Structure::Tree { .. } | Structure::Doubled { .. })
    }

    pub(crate) fn involution(&self) -> Option<i32> {
        match &self.structure {
            Structure::Tree { involution, .. } => *involution,
            _ => None,
        }
    }

    pub(crate) fn central_involution(&self) -> Option<i32> {
        match &self.structure {
            Structure::Doubled { rank } => Some(*rank as i32 + 1),
            _ => None,
        }
    }


    pub(crate) fn vertex_count(&self) -> Option<usize> {
        match &self.structure {
            Structure::Cycle { n } => Some(*n as usize),
            Structure::Graph(g) => Some(g.adjacency.len()),
            _ => None,
        }
    }

    /// Base point: the identity word, or vertex 0.
    pub fn origin(&self) -> Point {
        if self.is_cayley() {
            Point::Word(Word::empty())
        } else {
            Point::Vertex(0)
        }
    }

    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let w = Word::parse(text, &self.alphabet).map_err(Error::InvalidWord)?;
        Ok(self.canon(&w))
    }

    pub fn render(&self, w: &Word) -> String {
        w.render(&self.alphabet)
    }

    fn check_letters(&self, w: &Word) -> Result<()> {
        let k = self.generator_count() as i32;
        match w.letters().iter().find(|l| **l == 0 || l.abs() > k) {
            Some(l) => Err(Error::InvalidWord(format!("letter {l} out of range 1..={k}"))),
            None => Ok(()),
        }
    }

    /// Canonical form of a group element. Letters must be in range.
    pub fn canon(&self, w: &Word) -> Word {
        match &self.structure {
            Structure::Tree { involution, .. } => {
                let mut buf = Vec::with_capacity(w.len());
                for &l in w.letters() {
                    tree_push(&mut buf, l, *involution);
                }
                Word(buf)
            }
            Structure::Doubled { rank } => {
                let s = *rank as i32 + 1;
                let mut buf = Vec::with_capacity(w.len());
                let mut parity = false;
                for &l in w.letters() {
                    if l.abs() == s {
                        parity = !parity;
                    } else {
                        tree_push(&mut buf, l, None);
                    }
                }
                if parity {
                    buf.push(s);
                }
                Word(buf)
            }
            Structure::Cycle { n } => {
                let n = *n as i64;
                let k: i64 = w.letters().iter().map(|l| i64::from(l.signum())).sum();
                Word(vec![1; k.rem_euclid(n) as usize])
            }
            Structure::Graph(_) => w.free_reduce(),
        }
    }

    pub fn compose(&self, g: &Word, h: &Word) -> Word {
        self.canon(&g.concat(h))
    }

    pub fn inverse(&self, g: &Word) -> Word {
        self.canon(&g.formal_inverse())
    }

    pub fn power(&self, g: &Word, k: i64) -> Word {
        // square-and-multiply keeps intermediate words canonical
        let base = if k < 0 { self.inverse(g) } else { self.canon(g) };
        let mut e = k.unsigned_abs();
        let mut acc = Word::empty();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.compose(&acc, &sq);
            }
            e >>= 1;
            if e > 0 {
                sq = self.compose(&sq, &sq);
            }
        }
        acc
    }

    /// `[f, g] = f^-1 g^-1 f g`.
    pub fn commutator(&self, f: &Word, g: &Word) -> Word {
        let w = f.formal_inverse().concat(&g.formal_inverse()).concat(f).concat(g);
        self.canon(&w)
    }

    fn graph_vertex_image(&self, g: &Word, v: usize) -> usize {
        match &self.structure {
            Structure::Graph(gr) => g.letters().iter().rev().fold(v, |v, &l| {
                let i = l.unsigned_abs() as usize - 1;
                if l > 0 {
                    gr.perms[i][v]
                } else {
                    gr.inverse_perms[i][v]
                }
            }),
            Structure::Cycle { n } => {
                let k = self.canon(g).len() as u64;
                ((v as u64 + k) % n) as usize
            }
            _ => unreachable!("vertex image on a Cayley model"),
        }
    }

    /// True iff `g` acts as the identity.
    pub fn is_identity(&self, g: &Word) -> bool {
        match &self.structure {
            Structure::Graph(gr) => {
                (0..gr.adjacency.len()).all(|v| self.graph_vertex_image(g, v) == v)
            }
            _ => self.canon(g).is_empty(),
        }
    }

    pub fn elements_equal(&self, g: &Word, h: &Word) -> bool {
        self.is_identity(&g.formal_inverse().concat(h))
    }

    pub fn validate_point(&self, x: &Point) -> Result<()> {
        let ok = match (&self.structure, x) {
            (Structure::Tree { .. } | Structure::Doubled { .. }, Point::Word(w)) => {
                self.check_letters(w).is_ok() && self.canon(w) == *w
            }
            (Structure::Cycle { n }, Point::Vertex(v)) => (*v as u64) < *n,
            (Structure::Graph(g), Point::Vertex(v)) => *v < g.adjacency.len(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::PointOutsideModel(format!("{x:?}")))
        }
    }

    /// `g(x)`.
    pub fn apply(&self, g: &Word, x: &Point) -> Result<Point> {
        self.check_letters(g)?;
        self.validate_point(x)?;
        Ok(match x {
            Point::Word(w) => Point::Word(self.compose(g, w)),
            Point::Vertex(v) => Point::Vertex(self.graph_vertex_image(g, *v)),
        })
    }

    /// `d(x, y)`, exact.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<u64> {
        self.validate_point(x)?;
        self.validate_point(y)?;
        self.distance_unchecked(x, y)
    }

    /// Distance without validating that the points are canonical.
    pub(crate) fn distance_unchecked(&self, x: &Point, y: &Point) -> Result<u64> {
        match (&self.structure, x, y) {
            (Structure::Tree { .. }, Point::Word(a), Point::Word(b)) => {
                Ok(tree_distance(a.letters(), b.letters()))
            }
            (Structure::Doubled { rank }, Point::Word(a), Point::Word(b)) => {
                Ok(doubled_distance(a.letters(), b.letters(), *rank as i32 + 1))
            }
            (Structure::Cycle { n }, Point::Vertex(a), Point::Vertex(b)) => {
                let d = (*a as u64).abs_diff(*b as u64);
                Ok(d.min(n - d))
            }
            (Structure::Graph(g), Point::Vertex(a), Point::Vertex(b)) => match g.dist[*a][*b] {
                UNREACHABLE => Err(Error::Disconnected),
                d => Ok(u64::from(d)),
            },
            _ => Err(Error::PointOutsideModel(format!("{x:?} / {y:?}"))),
        }
    }

    /// `d(x, g x)`.
    pub fn displacement(&self, g: &Word, x: &Point) -> Result<u64> {
        let gx = self.apply(g, x)?;
        self.distance_unchecked(x, &gx)
    }

    /// Neighbors in the fixed order: generator index, then sign (+ first).
    pub fn neighbors(&self, x: &Point) -> Result<Vec<Point>> {
        self.validate_point(x)?;
        Ok(self.neighbors_unchecked(x))
    }

    /// [`Self::neighbors`] for a point already known to be valid.
    pub(crate) fn neighbors_unchecked(&self, x: &Point) -> Vec<Point> {
        match (&self.structure, x) {
            (Structure::Tree { .. } | Structure::Doubled { .. }, Point::Word(w)) => {
                let mut out = Vec::new();
                for g in 1..=self.generator_count() as i32 {
                    let signs: &[i32] = if Some(g) == self.involution() || Some(g) == self.central_involution() {
                        &[1]
                    } else {
                        &[1, -1]
                    };
                    for &sgn in signs {
                        let next = match &self.structure {
                            Structure::Tree { involution, .. } => {
                                let mut buf = w.letters().to_vec();
                                tree_push(&mut buf, sgn * g, *involution);
                                Word(buf)
                            }
                            _ => self.compose(w, &Word::letter(sgn * g)),
                        };
                        out.push(Point::Word(next));
                    }
                }
                out
            }
            (Structure::Cycle { n }, Point::Vertex(v)) => {
                let n = *n as usize;
                vec![Point::Vertex((v + 1) % n), Point::Vertex((v + n - 1) % n)]
            }
            (Structure::Graph(g), Point::Vertex(v)) => {
                g.adjacency[*v].iter().map(|&w| Point::Vertex(w)).collect()
            }
            _ => unreachable!(),
        }
    }

    /// All points within distance `r` of `center`, in canonical order.
    pub fn ball(&self, center: &Point, r: u64) -> Result<Vec<Point>> {
        self.validate_point(center)?;
        if !self.is_finite() && r > self.cap {
            return Err(Error::CapExceeded { requested: r, cap: self.cap });
        }
        let mut seen: HashSet<Point> = HashSet::from([center.clone()]);
        let mut frontier = vec![center.clone()];
        for _ in 0..r {
            let mut next = Vec::new();
            for p in &frontier {
                for q in self.neighbors(p)? {
                    if seen.insert(q.clone()) {
                        next.push(q);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        let mut out: Vec<Point> = seen.into_iter().collect();
        out.sort();
        Ok(out)
    }

    /// Every vertex of a finite model.
    pub fn all_points(&self) -> Option<Vec<Point>> {
        self.vertex_count().map(|n| (0..n).map(Point::Vertex).collect())
    }

    /// The canonical geodesic from `x` to `y`: at every step the first
    /// neighbor (in neighbor order) that gets one closer to `y`. This is the
    /// first path of [`crate::hyperbolicity::all_geodesics`].
    pub fn geodesic(&self, x: &Point, y: &Point) -> Result<GeodesicPath> {
        let total = self.distance(x, y)?;
        if let (Structure::Tree { .. }, Point::Word(a)) = (&self.structure, x) {
            let u = self.compose(&self.inverse(a), y.word().expect("tree point"));
            let mut points = Vec::with_capacity(u.len() + 1);
            let mut cur = a.clone();
            points.push(Point::Word(cur.clone()));
            for &l in u.letters() {
                cur = self.compose(&cur, &Word::letter(l));
                points.push(Point::Word(cur.clone()));
            }
            return Ok(GeodesicPath { points });
        }
        let mut points = vec![x.clone()];
        let mut cur = x.clone();
        let mut remaining = total;
        while remaining > 0 {
            let next = self
                .neighbors(&cur)?
                .into_iter()
                .find(|n| self.distance_unchecked(n, y).ok() == Some(remaining - 1))
                .ok_or(Error::Disconnected)?;
            points.push(next.clone());
            cur = next;
            remaining -= 1;
        }
        Ok(GeodesicPath { points })
    }

    /// Exact translation length where the model admits a closed form:
    /// the cyclically reduced length in the Cayley models, zero on finite
    /// graphs (every isometry of a finite graph has bounded orbits).
    pub fn exact_translation_length(&self, g: &Word) -> Option<Rational> {
        match &self.structure {
            Structure::Tree { involution, .. } => {
                let c = cyclic_reduction(self.canon(g).letters(), *involution);
                // a lone involution letter squares to the identity
                if c.len() == 1 && Some(c[0]) == *involution {
                    Some(int(0))
                } else {
                    Some(int(c.len() as i128))
                }
            }
            Structure::Doubled { rank } => {
                let s = *rank as i32 + 1;
                let free: Vec<i32> = self.canon(g).letters().iter().copied().filter(|l| l.abs() != s).collect();
                Some(int(cyclic_reduction(&free, None).len() as i128))
            }
            Structure::Cycle { .. } | Structure::Graph(_) => Some(int(0)),
        }
    }

    fn check_generators_isometric(&self) -> Result<()> {
        // Cayley actions are isometric by construction and explicit
        // generators were checked edge by edge; this samples the metric
        // itself as a consistency check.
        let sample = match self.vertex_count() {
            Some(n) if n <= 64 => self.all_points().unwrap_or_default(),
            _ => self.ball(&self.origin(), 2.min(self.cap))?,
        };
        for (i, g) in self.generators().iter().enumerate() {
            for x in &sample {
                for y in &sample {
                    let d = match self.distance_unchecked(x, y) {
                        Ok(d) => d,
                        Err(Error::Disconnected) => continue,
                        Err(e) => return Err(e),
                    };
                    let gx = self.apply(g, x)?;
                    let gy = self.apply(g, y)?;
                    if self.distance_unchecked(&gx, &gy)? != d {
                        return Err(Error::NotAnAutomorphism(i + 1, "distance not preserved".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn tree_distance(a: &[i32], b: &[i32]) -> u64 {
    let c = common_prefix(a, b);
    (a.len() + b.len() - 2 * c) as u64
}

#[inline]
pub(crate) fn doubled_distance(a: &[i32], b: &[i32], s: i32) -> u64 {
    let (fa, pa) = match a.last() {
        Some(&l) if l == s => (&a[..a.len() - 1], true),
        _ => (a, false),
    };
    let (fb, pb) = match b.last() {
        Some(&l) if l == s => (&b[..b.len() - 1], true),
        _ => (b, false),
    };
    tree_distance(fa, fb) + u64::from(pa != pb)
}

/// Strips matching first/last letters that cancel cyclically.
pub(crate) fn cyclic_reduction(w: &[i32], involution: Option<i32>) -> Vec<i32> {
    let mut lo = 0;
    let mut hi = w.len();
    while hi - lo >= 2 && w[hi - 1] == tree_inverse_letter(w[lo], involution) {
        lo += 1;
        hi -= 1;
    }
    w[lo..hi].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f2() -> ActionModel {
        build_model(&ModelSpec::free_group(2)).unwrap()
    }

    fn w(v: &[i32]) -> Point {
        Point::Word(Word(v.to_vec()))
    }

    #[test]
    fn free_group_distances() {
        let m = f2();
        assert_eq!(m.distance(&w(&[]), &w(&[1, 2])).unwrap(), 2);
        assert_eq!(m.distance(&w(&[1, 2]), &w(&[1])).unwrap(), 1);
        assert!(m.distance(&w(&[1, -1]), &w(&[])).is_err());
    }

    #[test]
    fn cycle_distance_and_geodesic() {
        let m = build_model(&ModelSpec::cycle(4)).unwrap();
        assert_eq!(m.distance(&Point::Vertex(0), &Point::Vertex(2)).unwrap(), 2);
        let g = m.geodesic(&Point::Vertex(0), &Point::Vertex(2)).unwrap();
        assert_eq!(g.points, vec![Point::Vertex(0), Point::Vertex(1), Point::Vertex(2)]);
        assert!(m.distance(&Point::Vertex(4), &Point::Vertex(0)).is_err());
    }

    #[test]
    fn apply_examples() {
        let m = f2();
        assert_eq!(m.apply(&Word::from([1]), &w(&[2])).unwrap(), w(&[1, 2]));
        assert_eq!(m.apply(&Word::empty(), &w(&[2, 1])).unwrap(), w(&[2, 1]));
        let zp = build_model(&ModelSpec::free_product()).unwrap();
        let x = w(&[1, 2, -1]);
        assert_eq!(zp.apply(&Word::from([2, 2]), &x).unwrap(), x);
        assert_eq!(zp.canon(&Word::from([2, -2])), Word::empty());
    }

    #[test]
    fn geodesic_examples() {
        let m = f2();
        let g = m.geodesic(&w(&[]), &w(&[1, 2])).unwrap();
        assert_eq!(g.points, vec![w(&[]), w(&[1]), w(&[1, 2])]);
        let g = m.geodesic(&w(&[2]), &w(&[2])).unwrap();
        assert_eq!(g.points, vec![w(&[2])]);
    }

    #[test]
    fn ball_sizes() {
        let m = f2();
        assert_eq!(m.ball(&m.origin(), 1).unwrap().len(), 5);
        assert_eq!(m.ball(&m.origin(), 2).unwrap().len(), 17);
        let c4 = build_model(&ModelSpec::cycle(4)).unwrap();
        assert_eq!(c4.ball(&Point::Vertex(0), 10).unwrap().len(), 4);
        assert!(matches!(m.ball(&m.origin(), 65), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn build_rejects_bad_specs() {
        assert!(build_model(&ModelSpec::free_group(0)).is_err());
        assert!(build_model(&ModelSpec::cycle(2)).is_err());
        // 0 lists 1 but 1 does not list 0
        let bad = ModelSpec::explicit(vec![vec![1], vec![]], vec![]);
        assert!(matches!(build_model(&bad), Err(Error::NonSymmetricAdjacency(0, 1))));
        // path 0-1-2: swapping 0 and 1 is not an automorphism
        let path = ModelSpec::explicit(vec![vec![1], vec![0, 2], vec![1]], vec![vec![1, 0, 2]]);
        assert!(matches!(build_model(&path), Err(Error::NotAnAutomorphism(1, _))));
        // K3 with a non-injective vertex map
        let k3 = vec![vec![1, 2], vec![0, 2], vec![0, 1]];
        let squash = ModelSpec::explicit(k3.clone(), vec![vec![1, 1, 2]]);
        assert!(matches!(build_model(&squash), Err(Error::NotAnAutomorphism(1, _))));
        let swap = ModelSpec::explicit(k3, vec![vec![1, 0, 2]]);
        assert!(build_model(&swap).is_ok());
    }

    #[test]
    fn doubled_model_metric() {
        let m = build_model(&ModelSpec::free_times_z2(2)).unwrap();
        // s is central: a s a = a a s
        assert_eq!(m.canon(&Word::from([1, 3, 1])), Word::from([1, 1, 3]));
        assert_eq!(m.distance(&w(&[]), &w(&[1, 1, 3])).unwrap(), 3);
        assert_eq!(m.distance(&w(&[3]), &w(&[1])).unwrap(), 2);
        assert_eq!(m.exact_translation_length(&Word::from([1, 3])), Some(int(1)));
    }

    #[test]
    fn translation_closed_forms() {
        let m = f2();
        assert_eq!(m.exact_translation_length(&Word::from([1, 2, -1])), Some(int(1)));
        let zp = build_model(&ModelSpec::free_product()).unwrap();
        assert_eq!(zp.exact_translation_length(&Word::from([2])), Some(int(0)));
        assert_eq!(zp.exact_translation_length(&Word::from([1, 2, -1])), Some(int(0)));
        assert_eq!(zp.exact_translation_length(&Word::from([1, 1, 2])), Some(int(3)));
    }

    fn random_point(m: &ActionModel, rng: &mut ChaCha8Rng, max_len: usize) -> Point {
        if let Some(n) = m.vertex_count() {
            return Point::Vertex(rng.gen_range(0..n));
        }
        let k = m.generator_count() as i32;
        let len = rng.gen_range(0..=max_len);
        let letters: Vec<i32> = (0..len)
            .map(|_| {
                let g = rng.gen_range(1..=k);
                if rng.gen_bool(0.5) {
                    g
                } else {
                    -g
                }
            })
            .collect();
        Point::Word(m.canon(&Word(letters)))
    }

    fn all_models() -> Vec<ActionModel> {
        vec![
            f2(),
            build_model(&ModelSpec::free_group(3)).unwrap(),
            build_model(&ModelSpec::free_product()).unwrap(),
            build_model(&ModelSpec::free_times_z2(2)).unwrap(),
            build_model(&ModelSpec::cycle(7)).unwrap(),
            build_model(&ModelSpec::explicit(
                vec![vec![1, 5], vec![0, 2], vec![1, 3], vec![2, 4], vec![3, 5], vec![4, 0]],
                vec![vec![1, 2, 3, 4, 5, 0], vec![0, 5, 4, 3, 2, 1]],
            ))
            .unwrap(),
        ]
    }

    #[test]
    fn metric_axioms_sampled() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in all_models() {
            for _ in 0..1000 {
                let x = random_point(&m, &mut rng, 10);
                let y = random_point(&m, &mut rng, 10);
                let z = random_point(&m, &mut rng, 10);
                let dxy = m.distance(&x, &y).unwrap();
                assert_eq!(m.distance(&x, &x).unwrap(), 0);
                assert_eq!(dxy, m.distance(&y, &x).unwrap());
                assert!(dxy <= m.distance(&x, &z).unwrap() + m.distance(&z, &y).unwrap());
                assert_eq!(dxy == 0, x == y);
            }
        }
    }

    #[test]
    fn generators_are_isometries_sampled() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in all_models() {
            for g in m.generators() {
                for _ in 0..200 {
                    let x = random_point(&m, &mut rng, 8);
                    let y = random_point(&m, &mut rng, 8);
                    let gx = m.apply(&g, &x).unwrap();
                    let gy = m.apply(&g, &y).unwrap();
                    assert_eq!(m.distance(&gx, &gy).unwrap(), m.distance(&x, &y).unwrap());
                }
            }
        }
    }

    #[test]
    fn action_is_compatible_with_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in all_models() {
            for _ in 0..100 {
                let g = match random_point(&m, &mut rng, 6) {
                    Point::Word(w) => w,
                    Point::Vertex(v) => Word(vec![1; v]),
                };
                let h = Word::from([1, -1, 1]);
                let x = random_point(&m, &mut rng, 6);
                let lhs = m.apply(&g, &m.apply(&h, &x).unwrap()).unwrap();
                let rhs = m.apply(&m.compose(&g, &h), &x).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn free_group_distance_is_reduced_length() {
        let m = f2();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let len = rng.gen_range(0..=10);
            let raw: Vec<i32> = (0..len).map(|_| [1, -1, 2, -2][rng.gen_range(0..4)]).collect();
            let raw = Word(raw);
            let c = m.canon(&raw);
            assert_eq!(m.canon(&c), c);
            assert_eq!(m.distance(&m.origin(), &Point::Word(c.clone())).unwrap(), raw.free_reduce().len() as u64);
        }
    }

    #[test]
    fn involution_squares_to_identity_on_ball() {
        let m = build_model(&ModelSpec::free_product()).unwrap();
        let ss = Word::from([2, 2]);
        for p in m.ball(&m.origin(), 8).unwrap() {
            assert_eq!(m.apply(&ss, &p).unwrap(), p);
        }
    }

    #[test]
    fn power_matches_repeated_composition() {
        let m = f2();
        let g = Word::from([1, 2, -1, 2]);
        let mut acc = Word::empty();
        for k in 0..7 {
            assert_eq!(m.power(&g, k), acc);
            acc = m.compose(&acc, &g);
        }
        assert_eq!(m.power(&g, -3), m.inverse(&m.power(&g, 3)));
    }
}
