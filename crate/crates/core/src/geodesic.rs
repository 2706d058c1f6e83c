//! Exact geodesics in CAT(0) orthant spaces.
//!
//! A geodesic between `x` and `y` that leaves the common orthant is described
//! by a support pair: the shared axes `C`, and ordered partitions
//! `A_1..A_k` of the remaining active axes of `x` and `B_1..B_k` of those of
//! `y`. Along the path the axes of `A_i` shrink to zero while those of `B_i`
//! grow from zero. A pair is proper when
//!
//! * (P1) for every `i > j`, `A_i` and `B_j` are nonempty and `A_i ∪ B_j` is
//!   a face, and
//! * (P2) the ratios `‖x_{A_i}‖² / ‖y_{B_i}‖²` are nondecreasing in `i`,
//!
//! and its length is
//! `sqrt(Σ_C (x_j − y_j)² + Σ_i (‖x_{A_i}‖ + ‖y_{B_i}‖)²)`. The distance is
//! the minimum over proper pairs, the same-orthant Euclidean distance and the
//! cone path through the origin. Enumeration is exhaustive over partitions of
//! the active axes, so cost grows exponentially with the number of active axes.

use std::cmp::Ordering;
use std::fmt;

use crate::complex::{AxisSet, OrthantComplex, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeodesicKind {
    /// Both endpoints lie in one closed orthant; the path is a straight segment.
    SameOrthant,
    /// The path runs through the origin.
    Cone,
    /// The path crosses a sequence of orthants described by a support pair.
    SupportSequence,
}

impl GeodesicKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GeodesicKind::SameOrthant => "same-orthant",
            GeodesicKind::Cone => "cone",
            GeodesicKind::SupportSequence => "support-sequence",
        }
    }
}

impl fmt::Display for GeodesicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ordered partition pair `(A, B)` with shared axes `common`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportPair {
    pub common: AxisSet,
    pub a: Vec<AxisSet>,
    pub b: Vec<AxisSet>,
}

impl SupportPair {
    pub fn new(common: AxisSet, a: Vec<AxisSet>, b: Vec<AxisSet>) -> Self {
        SupportPair { common, a, b }
    }

    /// Number of steps `k`.
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    fn check_well_formed(&self) -> Result<()> {
        if self.a.len() != self.b.len() {
            return Err(Error::MalformedSupport(format!("{} A-parts but {} B-parts", self.a.len(), self.b.len())));
        }
        if self.a.is_empty() {
            return Err(Error::MalformedSupport("no parts".into()));
        }
        for (name, parts) in [("A", &self.a), ("B", &self.b)] {
            let mut seen = self.common;
            for p in parts.iter() {
                if !p.intersection(seen).is_empty() {
                    return Err(Error::MalformedSupport(format!("{name}-parts overlap")));
                }
                seen = seen.union(*p);
            }
        }
        Ok(())
    }

    /// Ordering key: number of steps, then the axis sets in order.
    fn tie_key(&self) -> (usize, Vec<Vec<usize>>) {
        let sets = std::iter::once(self.common)
            .chain(self.a.iter().copied())
            .chain(self.b.iter().copied())
            .map(|s| s.iter().collect())
            .collect();
        (self.len(), sets)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicResult {
    pub distance: f64,
    pub kind: GeodesicKind,
    /// Minimizing support pair when `kind` is [`GeodesicKind::SupportSequence`].
    pub witness: Option<SupportPair>,
}

fn euclidean(x: &Point, y: &Point) -> f64 {
    let (xs, ys) = (x.coords(), y.coords());
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < xs.len() || j < ys.len() {
        let ax = xs.get(i).map_or(usize::MAX, |p| p.0);
        let ay = ys.get(j).map_or(usize::MAX, |p| p.0);
        let d = match ax.cmp(&ay) {
            Ordering::Equal => {
                i += 1;
                j += 1;
                xs[i - 1].1 - ys[j - 1].1
            }
            Ordering::Less => {
                i += 1;
                xs[i - 1].1
            }
            Ordering::Greater => {
                j += 1;
                ys[j - 1].1
            }
        };
        acc += d * d;
    }
    acc.sqrt()
}

/// Ordered partitions of `set` into `k` labelled parts, with `parts[i]`
/// required nonempty for every `i` in `nonempty`.
fn ordered_partitions(set: AxisSet, k: usize, nonempty: impl Fn(usize) -> bool) -> Vec<Vec<AxisSet>> {
    let axes: Vec<usize> = set.iter().collect();
    let mut out = Vec::new();
    let mut labels = vec![0usize; axes.len()];
    loop {
        let mut parts = vec![AxisSet::EMPTY; k];
        for (&axis, &l) in axes.iter().zip(&labels) {
            parts[l] = parts[l].union(AxisSet::singleton(axis));
        }
        if (0..k).all(|i| !nonempty(i) || !parts[i].is_empty()) {
            out.push(parts);
        }
        // next labelling in base k
        let mut pos = 0;
        loop {
            if pos == labels.len() {
                return out;
            }
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}

impl OrthantComplex {
    /// Length of the path through the origin, `‖x‖ + ‖y‖`.
    pub fn cone_distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(x.norm() + y.norm())
    }

    /// Whether `sp` satisfies the properness conditions (P1) and (P2) for the
    /// endpoints `x` and `y`. Pairs that do not partition the active axes are
    /// reported as improper.
    pub fn is_proper(&self, sp: &SupportPair, x: &Point, y: &Point) -> bool {
        if sp.check_well_formed().is_err() {
            return false;
        }
        let (ex, ey) = (x.active(), y.active());
        let a_cover = sp.a.iter().fold(sp.common, |m, p| m.union(*p));
        let b_cover = sp.b.iter().fold(sp.common, |m, p| m.union(*p));
        if !ex.is_subset(a_cover) || !ey.is_subset(b_cover) {
            return false;
        }
        let a: Vec<AxisSet> = sp.a.iter().map(|p| p.intersection(ex)).collect();
        let b: Vec<AxisSet> = sp.b.iter().map(|p| p.intersection(ey)).collect();
        if sp.common.intersection(ex) != sp.common.intersection(ey) {
            return false;
        }
        self.pair_is_proper(&a, &b, x, y)
    }

    fn pair_is_proper(&self, a: &[AxisSet], b: &[AxisSet], x: &Point, y: &Point) -> bool {
        let k = a.len();
        for i in 1..k {
            for j in 0..i {
                if a[i].is_empty() || b[j].is_empty() || !self.is_face(a[i].union(b[j])) {
                    return false;
                }
            }
        }
        let na: Vec<f64> = a.iter().map(|&s| x.norm_sq_on(s)).collect();
        let nb: Vec<f64> = b.iter().map(|&s| y.norm_sq_on(s)).collect();
        ratios_nondecreasing(&na, &nb)
    }

    /// Length of the path through the support sequence `sp` if it is proper,
    /// otherwise the cone distance.
    pub fn path_length(&self, sp: &SupportPair, x: &Point, y: &Point) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        sp.check_well_formed()?;
        if !self.is_proper(sp, x, y) {
            return self.cone_distance(x, y);
        }
        let common = sp.common.intersection(x.active());
        Ok(support_length(common, &sp.a, &sp.b, x, y))
    }

    /// Geodesic distance. The complex must be flag.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<GeodesicResult> {
        self.check_point(x)?;
        self.check_point(y)?;
        self.require_flag()?;
        let (ex, ey) = (x.active(), y.active());
        if self.is_face(ex.union(ey)) {
            return Ok(GeodesicResult { distance: euclidean(x, y), kind: GeodesicKind::SameOrthant, witness: None });
        }
        let cone = x.norm() + y.norm();
        let mut best: Option<(f64, SupportPair)> = None;
        if !self.is_spider() {
            let shared = ex.intersection(ey);
            for common in shared.subsets() {
                let (rx, ry) = (ex.difference(common), ey.difference(common));
                let kmax = rx.len().min(ry.len()) + 1;
                for k in 1..=kmax {
                    let a_parts = ordered_partitions(rx, k, |i| i > 0);
                    let b_parts = ordered_partitions(ry, k, |j| j + 1 < k);
                    for a in &a_parts {
                        for b in &b_parts {
                            if !self.pair_is_proper(a, b, x, y) {
                                continue;
                            }
                            let f = support_length(common, a, b, x, y);
                            let better = match &best {
                                None => true,
                                Some((g, sp)) => match f.partial_cmp(g) {
                                    Some(Ordering::Less) => true,
                                    Some(Ordering::Equal) => {
                                        let cand = SupportPair::new(common, a.clone(), b.clone());
                                        cand.tie_key() < sp.tie_key()
                                    }
                                    _ => false,
                                },
                            };
                            if better {
                                best = Some((f, SupportPair::new(common, a.clone(), b.clone())));
                            }
                        }
                    }
                }
            }
        }
        Ok(match best {
            Some((f, sp)) if f < cone => {
                GeodesicResult { distance: f, kind: GeodesicKind::SupportSequence, witness: Some(sp) }
            }
            _ => GeodesicResult { distance: cone, kind: GeodesicKind::Cone, witness: None },
        })
    }

    /// Distance value only, with cheap shortcuts for spiders and shared orthants.
    pub fn distance_value(&self, x: &Point, y: &Point) -> Result<f64> {
        if self.is_spider() {
            self.check_point(x)?;
            self.check_point(y)?;
            return Ok(match (x.leg(), y.leg()) {
                (Some((l, u)), Some((m, v))) if l == m => (u - v).abs(),
                (p, q) => p.map_or(0.0, |(_, u)| u) + q.map_or(0.0, |(_, v)| v),
            });
        }
        Ok(self.distance(x, y)?.distance)
    }

    /// The geodesic from `x` to `y`, parametrized proportionally to arc length.
    pub fn geodesic<'a>(&'a self, x: &Point, y: &Point) -> Result<Geodesic<'a>> {
        let result = self.distance(x, y)?;
        Ok(Geodesic { complex: self, start: x.clone(), end: y.clone(), result })
    }

    /// `γ(s)` on the geodesic from `x` to `y`, for `s ∈ [0, 1]`.
    pub fn geodesic_point(&self, x: &Point, y: &Point, s: f64) -> Result<Point> {
        self.geodesic(x, y)?.point_at(s)
    }
}

fn ratios_nondecreasing(na: &[f64], nb: &[f64]) -> bool {
    for i in 1..na.len() {
        if (na[i - 1] == 0.0 && nb[i - 1] == 0.0) || (na[i] == 0.0 && nb[i] == 0.0) {
            return false;
        }
        // na[i-1]/nb[i-1] <= na[i]/nb[i], with x/0 = +inf for x > 0
        if na[i - 1] * nb[i] > na[i] * nb[i - 1] {
            return false;
        }
    }
    true
}

fn support_length(common: AxisSet, a: &[AxisSet], b: &[AxisSet], x: &Point, y: &Point) -> f64 {
    let mut terms: Vec<f64> = common
        .iter()
        .map(|j| {
            let d = x.coord(j) - y.coord(j);
            d * d
        })
        .collect();
    for (ai, bi) in a.iter().zip(b) {
        let s = x.norm_sq_on(*ai).sqrt() + y.norm_sq_on(*bi).sqrt();
        terms.push(s * s);
    }
    // summing in sorted order makes the result independent of direction
    terms.sort_by(f64::total_cmp);
    terms.iter().sum::<f64>().sqrt()
}

/// A geodesic segment with its endpoints and combinatorial description.
#[derive(Debug, Clone)]
pub struct Geodesic<'a> {
    complex: &'a OrthantComplex,
    start: Point,
    end: Point,
    result: GeodesicResult,
}

impl Geodesic<'_> {
    pub fn length(&self) -> f64 {
        self.result.distance
    }

    pub fn result(&self) -> &GeodesicResult {
        &self.result
    }

    /// The point at fraction `s` of the way from start to end.
    pub fn point_at(&self, s: f64) -> Result<Point> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidParameter(format!("geodesic parameter {s} outside [0, 1]")));
        }
        if s == 0.0 {
            return Ok(self.start.clone());
        }
        if s == 1.0 {
            return Ok(self.end.clone());
        }
        let (x, y) = (&self.start, &self.end);
        let mut coords: Vec<(usize, f64)> = Vec::new();
        let (common, a, b) = match (&self.result.kind, &self.result.witness) {
            (GeodesicKind::SameOrthant, _) => {
                for axis in x.active().union(y.active()).iter() {
                    coords.push((axis, (1.0 - s) * x.coord(axis) + s * y.coord(axis)));
                }
                return self.complex.point_from_indices(coords);
            }
            (GeodesicKind::SupportSequence, Some(sp)) => (sp.common, sp.a.clone(), sp.b.clone()),
            _ => (AxisSet::EMPTY, vec![x.active()], vec![y.active()]),
        };
        for axis in common.iter() {
            coords.push((axis, (1.0 - s) * x.coord(axis) + s * y.coord(axis)));
        }
        let mut theta_prev = 0.0f64;
        for (ai, bi) in a.iter().zip(&b) {
            let alpha = x.norm_sq_on(*ai).sqrt();
            let beta = y.norm_sq_on(*bi).sqrt();
            let theta = (alpha / (alpha + beta)).max(theta_prev);
            theta_prev = theta;
            if s < theta {
                let scale = ((1.0 - s) * alpha - s * beta) / alpha;
                coords.extend(ai.iter().map(|j| (j, x.coord(j) * scale)).filter(|&(_, v)| v > 0.0));
            } else if s > theta {
                let scale = (s * beta - (1.0 - s) * alpha) / beta;
                coords.extend(bi.iter().map(|j| (j, y.coord(j) * scale)).filter(|&(_, v)| v > 0.0));
            }
        }
        self.complex.point_from_indices(coords)
    }
}
