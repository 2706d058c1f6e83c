//! Orthant spaces `O(E, Ω)`: a finite axis set, a simplicial complex of faces
//! over it, and points with sparse nonnegative coordinates.
//!
//! Faces are stored as bitmasks over the axis index, so a complex may have at
//! most 64 axes. Everything that enumerates faces or subsets is exponential in
//! the axis count; the intended scale is a dozen axes or fewer.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};

/// Maximum number of axes a complex may carry.
pub const MAX_AXES: usize = 64;

/// A set of axes, as a bitmask over axis indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AxisSet(pub u64);

impl AxisSet {
    pub const EMPTY: AxisSet = AxisSet(0);

    pub fn singleton(axis: usize) -> Self {
        AxisSet(1u64 << axis)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        AxisSet(indices.into_iter().fold(0u64, |m, i| m | (1u64 << i)))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, axis: usize) -> bool {
        self.0 >> axis & 1 == 1
    }

    pub fn union(self, other: AxisSet) -> AxisSet {
        AxisSet(self.0 | other.0)
    }

    pub fn intersection(self, other: AxisSet) -> AxisSet {
        AxisSet(self.0 & other.0)
    }

    pub fn difference(self, other: AxisSet) -> AxisSet {
        AxisSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: AxisSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Axis indices in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// Every subset of `self`, including the empty set and `self`.
    pub fn subsets(self) -> impl Iterator<Item = AxisSet> {
        let full = self.0;
        let mut sub = 0u64;
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = AxisSet(sub);
            if sub == full {
                done = true;
            } else {
                sub = (sub.wrapping_sub(full)) & full;
            }
            Some(out)
        })
    }
}

/// Stable fingerprint of a complex, carried by every point built from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ComplexId(pub u64);

/// An orthant space given by its axes and its (downward closed) face complex.
#[derive(Debug, Clone)]
pub struct OrthantComplex {
    axes: Vec<String>,
    index: HashMap<String, usize>,
    faces: HashSet<AxisSet>,
    dimension: usize,
    maximal_faces: Vec<AxisSet>,
    flag: bool,
    id: ComplexId,
}

impl OrthantComplex {
    /// Builds a complex from axis names and a list of faces (each a list of
    /// axis names). The downward closure is taken and every singleton is added.
    pub fn new<S: AsRef<str>>(axes: &[S], faces: &[Vec<S>]) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::EmptyAxes);
        }
        if axes.len() > MAX_AXES {
            return Err(Error::TooManyAxes(axes.len()));
        }
        let mut index = HashMap::with_capacity(axes.len());
        for (i, a) in axes.iter().enumerate() {
            if index.insert(a.as_ref().to_string(), i).is_some() {
                return Err(Error::DuplicateAxis(a.as_ref().to_string()));
            }
        }
        let mut masks = Vec::with_capacity(faces.len());
        for face in faces {
            let mut m = AxisSet::EMPTY;
            for name in face {
                let i = *index.get(name.as_ref()).ok_or_else(|| Error::UnknownAxis(name.as_ref().to_string()))?;
                m = m.union(AxisSet::singleton(i));
            }
            masks.push(m);
        }
        let axes = axes.iter().map(|a| a.as_ref().to_string()).collect();
        Ok(Self::from_masks(axes, index, masks))
    }

    fn from_masks(axes: Vec<String>, index: HashMap<String, usize>, masks: Vec<AxisSet>) -> Self {
        let mut faces: HashSet<AxisSet> = HashSet::new();
        faces.insert(AxisSet::EMPTY);
        for i in 0..axes.len() {
            faces.insert(AxisSet::singleton(i));
        }
        for m in masks {
            if faces.contains(&m) {
                continue;
            }
            faces.extend(m.subsets());
        }
        let dimension = faces.iter().map(|f| f.len()).max().unwrap_or(0);
        let mut maximal_faces: Vec<AxisSet> = faces.iter().copied().filter(|f| f.len() == dimension).collect();
        maximal_faces.sort();
        let flag = check_flag(axes.len(), &faces);
        let id = fingerprint(&axes, &faces);
        OrthantComplex { axes, index, faces, dimension, maximal_faces, flag, id }
    }

    /// The `k`-spider: `k` half-lines glued at the origin. Axes are named
    /// `"0"`, …, `"k-1"`.
    pub fn spider(k: usize) -> Result<Self> {
        let axes: Vec<String> = (0..k).map(|i| i.to_string()).collect();
        let faces: Vec<Vec<String>> = axes.iter().map(|a| vec![a.clone()]).collect();
        Self::new(&axes, &faces)
    }

    /// `k` quarter-planes sharing the axis `"e"`; the other axes are named
    /// `"a"`, `"b"`, `"c"`, … (or `"a0"`, `"a1"`, … beyond 26 pages).
    /// This is the product of a `k`-spider with a half-line.
    pub fn book(k: usize) -> Result<Self> {
        let pages: Vec<String> =
            (0..k).map(|i| if k <= 26 { ((b'a' + i as u8) as char).to_string() } else { format!("a{i}") }).collect();
        let mut axes = vec!["e".to_string()];
        axes.extend(pages.iter().cloned());
        let faces: Vec<Vec<String>> = pages.iter().map(|p| vec!["e".to_string(), p.clone()]).collect();
        Self::new(&axes, &faces)
    }

    /// Tree space for four taxa `A`–`D`: ten cluster axes (named by their taxa,
    /// e.g. `"AB"`, `"ACD"`), faces are compatible cluster pairs.
    pub fn tree_space_4() -> Self {
        let taxa = ['A', 'B', 'C', 'D'];
        let mut clusters: Vec<u8> = (1u8..15).filter(|m| (2..=3).contains(&m.count_ones())).collect();
        clusters.sort_by_key(|m| (m.count_ones(), m.reverse_bits()));
        let name =
            |m: u8| -> String { taxa.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, c)| *c).collect() };
        let axes: Vec<String> = clusters.iter().map(|&m| name(m)).collect();
        let mut faces = Vec::new();
        for (i, &a) in clusters.iter().enumerate() {
            for &b in &clusters[i + 1..] {
                let nested = a & b == a || a & b == b;
                if nested || a & b == 0 {
                    faces.push(vec![name(a), name(b)]);
                }
            }
        }
        Self::new(&axes, &faces).expect("tree space construction is well formed")
    }

    /// Parses a built-in name: `spider:k`, `book:k` or `t4`.
    pub fn builtin(name: &str) -> Result<Self> {
        let bad = || Error::UnknownSpace(name.to_string());
        if name == "t4" {
            return Ok(Self::tree_space_4());
        }
        let (kind, arg) = name.split_once(':').ok_or_else(bad)?;
        let k: usize = arg.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        match kind {
            "spider" => Self::spider(k),
            "book" => Self::book(k),
            _ => Err(bad()),
        }
    }

    pub fn axes(&self) -> &[String] {
        &self.axes
    }

    pub fn axis_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn axis_name(&self, i: usize) -> &str {
        &self.axes[i]
    }

    pub fn num_axes(&self) -> usize {
        self.axes.len()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn maximal_faces(&self) -> &[AxisSet] {
        &self.maximal_faces
    }

    /// All faces, sorted (empty face first).
    pub fn faces(&self) -> Vec<AxisSet> {
        let mut v: Vec<AxisSet> = self.faces.iter().copied().collect();
        v.sort_by_key(|f| (f.len(), *f));
        v
    }

    pub fn is_face(&self, set: AxisSet) -> bool {
        self.faces.contains(&set)
    }

    /// Whether every pairwise-compatible axis set is a face. Orthant spaces
    /// over flag complexes are exactly the CAT(0) ones.
    pub fn is_flag(&self) -> bool {
        self.flag
    }

    /// A spider is a one-dimensional complex; its legs are the axes.
    pub fn is_spider(&self) -> bool {
        self.dimension == 1
    }

    pub fn id(&self) -> ComplexId {
        self.id
    }

    pub(crate) fn require_flag(&self) -> Result<()> {
        if self.flag {
            Ok(())
        } else {
            Err(Error::NotFlag)
        }
    }

    /// Canonical point from an axis-name → coordinate map. Zero coordinates
    /// are dropped; the remaining active axes must form a face.
    pub fn point<S: AsRef<str>>(&self, coords: &[(S, f64)]) -> Result<Point> {
        let mut idx = Vec::with_capacity(coords.len());
        for (name, v) in coords {
            let i = self.axis_index(name.as_ref()).ok_or_else(|| Error::UnknownAxis(name.as_ref().to_string()))?;
            idx.push((i, *v));
        }
        self.point_from_indices(idx)
    }

    /// Same as [`OrthantComplex::point`] but keyed by axis index.
    pub fn point_from_indices(&self, coords: impl IntoIterator<Item = (usize, f64)>) -> Result<Point> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        for (i, v) in coords {
            if i >= self.axes.len() {
                return Err(Error::UnknownAxis(format!("#{i}")));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidCoordinate { axis: self.axes[i].clone(), value: v });
            }
            if out.iter().any(|&(j, _)| j == i) {
                return Err(Error::DuplicateAxis(self.axes[i].clone()));
            }
            if v > 0.0 {
                out.push((i, v));
            }
        }
        out.sort_by_key(|&(i, _)| i);
        let active = AxisSet::from_indices(out.iter().map(|&(i, _)| i));
        if !self.is_face(active) {
            return Err(Error::NotAFace(self.describe(active)));
        }
        Ok(Point { complex: self.id, active, coords: out })
    }

    pub fn origin(&self) -> Point {
        Point { complex: self.id, active: AxisSet::EMPTY, coords: Vec::new() }
    }

    /// A point on a single leg/axis. Zero gives the origin.
    pub fn axis_point(&self, axis: usize, value: f64) -> Result<Point> {
        self.point_from_indices([(axis, value)])
    }

    /// Checks that `p` was built from this complex.
    pub fn check_point(&self, p: &Point) -> Result<()> {
        if p.complex == self.id {
            Ok(())
        } else {
            Err(Error::ForeignPoint)
        }
    }

    /// Human readable face label, axes joined by `+` (`"origin"` when empty).
    pub fn describe(&self, set: AxisSet) -> String {
        if set.is_empty() {
            return "origin".to_string();
        }
        set.iter().map(|i| self.axes[i].as_str()).collect::<Vec<_>>().join("+")
    }
}

impl PartialEq for OrthantComplex {
    fn eq(&self, other: &Self) -> bool {
        self.axes == other.axes && self.faces == other.faces
    }
}

fn check_flag(n: usize, faces: &HashSet<AxisSet>) -> bool {
    let mut adjacency = vec![0u64; n];
    for f in faces.iter().filter(|f| f.len() == 2) {
        let v: Vec<usize> = f.iter().collect();
        adjacency[v[0]] |= 1 << v[1];
        adjacency[v[1]] |= 1 << v[0];
    }
    // Grow cliques one axis at a time (always adding a larger index); every
    // clique must be a face.
    let mut stack: Vec<(u64, u64)> = (0..n).map(|i| (1u64 << i, adjacency[i] & !((2u64 << i) - 1))).collect();
    while let Some((clique, candidates)) = stack.pop() {
        if !faces.contains(&AxisSet(clique)) {
            return false;
        }
        let mut c = candidates;
        while c != 0 {
            let j = c.trailing_zeros() as usize;
            c &= c - 1;
            let higher = !((2u64 << j) - 1);
            stack.push((clique | 1 << j, candidates & adjacency[j] & higher));
        }
    }
    true
}

fn fingerprint(axes: &[String], faces: &HashSet<AxisSet>) -> ComplexId {
    // FNV-1a over a canonical encoding; stable across runs and platforms.
    struct Fnv(u64);
    impl Hasher for Fnv {
        fn finish(&self) -> u64 {
            self.0
        }
        fn write(&mut self, bytes: &[u8]) {
            for b in bytes {
                self.0 ^= *b as u64;
                self.0 = self.0.wrapping_mul(0x100000001b3);
            }
        }
    }
    let mut h = Fnv(0xcbf29ce484222325);
    axes.hash(&mut h);
    let sorted: BTreeSet<u64> = faces.iter().map(|f| f.0).collect();
    for f in sorted {
        h.write_u64(f);
    }
    ComplexId(h.finish())
}

/// A point of an orthant space in canonical form: only strictly positive
/// coordinates are stored, sorted by axis index.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    complex: ComplexId,
    active: AxisSet,
    coords: Vec<(usize, f64)>,
}

impl Point {
    pub fn complex_id(&self) -> ComplexId {
        self.complex
    }

    /// The active axes (those with a positive coordinate).
    pub fn active(&self) -> AxisSet {
        self.active
    }

    pub fn coords(&self) -> &[(usize, f64)] {
        &self.coords
    }

    pub fn coord(&self, axis: usize) -> f64 {
        self.coords.iter().find(|&&(i, _)| i == axis).map_or(0.0, |&(_, v)| v)
    }

    pub fn is_origin(&self) -> bool {
        self.coords.is_empty()
    }

    /// Euclidean norm of the coordinate vector (the distance to the origin).
    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }

    /// Squared norm restricted to `axes`.
    pub fn norm_sq_on(&self, axes: AxisSet) -> f64 {
        self.coords.iter().filter(|&&(i, _)| axes.contains(i)).map(|&(_, v)| v * v).sum()
    }

    /// For points of a spider: the leg index and coordinate, `None` at the origin.
    pub fn leg(&self) -> Option<(usize, f64)> {
        self.coords.first().copied()
    }

    pub(crate) fn from_parts_unchecked(complex: ComplexId, coords: Vec<(usize, f64)>) -> Point {
        let active = AxisSet::from_indices(coords.iter().map(|&(i, _)| i));
        Point { complex, active, coords }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, (i, v)) in self.coords.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "#{i}: {v}")?;
        }
        write!(f, "}}")
    }
}

/// Axis-aligned box inside one maximal orthant. `bounds[j]` is the interval on
/// the `j`-th axis of `face` in increasing axis order; upper bounds may be
/// infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthantBox {
    pub face: AxisSet,
    pub bounds: Vec<(f64, f64)>,
}

/// A Borel set given as one or more boxes inside maximal orthants.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoxDomain {
    pub boxes: Vec<OrthantBox>,
}

impl BoxDomain {
    pub fn new(boxes: Vec<OrthantBox>) -> Result<Self> {
        for b in &boxes {
            if b.bounds.len() != b.face.len() {
                return Err(Error::InvalidDomain("bounds do not match face size".into()));
            }
            for &(lo, hi) in &b.bounds {
                if lo.is_nan() || hi.is_nan() || lo < 0.0 || lo > hi || lo.is_infinite() {
                    return Err(Error::InvalidDomain(format!("bad interval [{lo}, {hi}]")));
                }
            }
        }
        Ok(BoxDomain { boxes })
    }

    /// The same interval `[lo, hi]` on every axis of every maximal orthant.
    pub fn uniform(c: &OrthantComplex, lo: f64, hi: f64) -> Result<Self> {
        let boxes =
            c.maximal_faces().iter().map(|&face| OrthantBox { face, bounds: vec![(lo, hi); face.len()] }).collect();
        Self::new(boxes)
    }

    /// Every maximal orthant in full, `[0, ∞)` on each axis.
    pub fn whole(c: &OrthantComplex) -> Self {
        Self::uniform(c, 0.0, f64::INFINITY).expect("valid bounds")
    }

    /// Boxes of half-width `radius` around `center` (clipped to the orthants).
    /// Since every coordinate is 1-Lipschitz in the geodesic metric, the ball
    /// of radius `radius` about `center` lies inside this domain.
    pub fn around(c: &OrthantComplex, center: &Point, radius: f64) -> Self {
        let boxes = c
            .maximal_faces()
            .iter()
            .map(|&face| {
                let bounds = face
                    .iter()
                    .map(|axis| {
                        let x = center.coord(axis);
                        ((x - radius).max(0.0), x + radius)
                    })
                    .collect();
                OrthantBox { face, bounds }
            })
            .collect();
        BoxDomain { boxes }
    }
}
