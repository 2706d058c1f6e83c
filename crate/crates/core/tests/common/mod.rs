//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use orthant::{AxisSet, OrthantComplex, Point};
use rand::Rng;

/// Unpruned enumeration of every labelling of the active axes of `x` and `y`
/// into parts `0..=k`, evaluating the literal max of the length term and the
/// two penalty terms.
pub fn brute_force_distance(c: &OrthantComplex, x: &Point, y: &Point) -> f64 {
    let ex: Vec<usize> = x.active().iter().collect();
    let ey: Vec<usize> = y.active().iter().collect();
    let cone = x.norm() + y.norm();
    let kmax = ex.len().max(ey.len()) + 1;
    let mut best = f64::INFINITY;
    for k in 0..=kmax {
        let base = k + 1;
        let nx = base.pow(ex.len() as u32);
        let ny = base.pow(ey.len() as u32);
        for lx in 0..nx {
            let a = parts_from_code(&ex, lx, base);
            for ly in 0..ny {
                let b = parts_from_code(&ey, ly, base);
                let l = literal_length(c, x, y, &a, &b, cone);
                if l < best {
                    best = l;
                }
            }
        }
    }
    best
}

fn parts_from_code(axes: &[usize], mut code: usize, base: usize) -> Vec<AxisSet> {
    let mut parts = vec![AxisSet::EMPTY; base];
    for &axis in axes {
        let label = code % base;
        code /= base;
        parts[label] = parts[label].union(AxisSet::singleton(axis));
    }
    parts
}

fn literal_length(c: &OrthantComplex, x: &Point, y: &Point, a: &[AxisSet], b: &[AxisSet], cone: f64) -> f64 {
    let k = a.len() - 1;
    // h: (P1)
    let mut h = 0.0;
    if a[0] != b[0] {
        h = cone;
    }
    for i in 1..=k {
        for j in 1..i {
            if a[i].is_empty() || b[j].is_empty() || !c.is_face(a[i].union(b[j])) {
                h = cone;
            }
        }
    }
    // g: (P2) ratio chain, empty product for k <= 1
    let ratio = |i: usize| {
        let num: f64 = a[i].iter().map(|e| x.coord(e).powi(2)).sum();
        let den: f64 = b[i].iter().map(|e| y.coord(e).powi(2)).sum();
        if den == 0.0 {
            if num > 0.0 {
                f64::INFINITY
            } else {
                f64::NAN
            }
        } else {
            num / den
        }
    };
    let mut g = 0.0;
    for i in 1..k {
        if !(ratio(i) <= ratio(i + 1)) {
            g = cone;
        }
    }
    // f
    let mut sq = 0.0;
    for e in a[0].iter() {
        sq += (x.coord(e) - y.coord(e)).powi(2);
    }
    for i in 1..=k {
        let na: f64 = a[i].iter().map(|e| x.coord(e).powi(2)).sum::<f64>().sqrt();
        let nb: f64 = b[i].iter().map(|e| y.coord(e).powi(2)).sum::<f64>().sqrt();
        sq += (na + nb).powi(2);
    }
    sq.sqrt().max(g).max(h)
}

/// Uniform random point on a random face with at most `max_active` axes.
/// Coordinates are drawn from a coarse lattice about a third of the time so
/// that ties between candidate paths occur.
pub fn random_point<R: Rng>(c: &OrthantComplex, max_active: usize, rng: &mut R) -> Point {
    let faces: Vec<AxisSet> = c.faces().into_iter().filter(|f| f.len() <= max_active).collect();
    let face = faces[rng.random_range(0..faces.len())];
    let lattice = rng.random_bool(0.3);
    let coords: Vec<(usize, f64)> = face
        .iter()
        .map(|axis| {
            let v = if lattice { 0.5 * rng.random_range(1..=4) as f64 } else { rng.random_range(0.01..2.0) };
            (axis, v)
        })
        .collect();
    c.point_from_indices(coords).unwrap()
}

/// Clique complex of a graph: flag by construction.
pub fn clique_complex(n: usize, edges: &[(usize, usize)]) -> OrthantComplex {
    let names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let adjacent = |i: usize, j: usize| edges.iter().any(|&(a, b)| (a, b) == (i, j) || (b, a) == (i, j));
    let mut faces = Vec::new();
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let clique = members.iter().enumerate().all(|(p, &i)| members[p + 1..].iter().all(|&j| adjacent(i, j)));
        if clique {
            faces.push(members.iter().map(|&i| names[i].clone()).collect::<Vec<_>>());
        }
    }
    OrthantComplex::new(&names, &faces).unwrap()
}

/// Node of a spider: `None` is the origin, otherwise `(leg, coordinate > 0)`.
pub type SpiderNode = Option<(usize, f64)>;

fn node_dist(a: SpiderNode, b: SpiderNode) -> f64 {
    match (a, b) {
        (None, None) => 0.0,
        (None, Some((_, u))) | (Some((_, u)), None) => u,
        (Some((la, ua)), Some((lb, ub))) => {
            if la == lb {
                (ua - ub).abs()
            } else {
                ua + ub
            }
        }
    }
}

/// Least concave majorant at `nodes` by closing the lifted points under
/// linear interpolation along geodesics until nothing changes. The data
/// points and the origin must be among the nodes.
pub fn majorant_by_closure(lifted: &[(usize, f64, f64)], nodes: &[SpiderNode]) -> Vec<f64> {
    let key = |n: SpiderNode| nodes.iter().position(|&m| m == n).expect("data points are nodes");
    let mut f = vec![f64::NEG_INFINITY; nodes.len()];
    for &(l, u, y) in lifted {
        let i = key(if u == 0.0 { None } else { Some((l, u)) });
        f[i] = f[i].max(y);
    }
    loop {
        let mut changed = false;
        for a in 0..nodes.len() {
            for b in 0..nodes.len() {
                if a == b || !f[a].is_finite() || !f[b].is_finite() {
                    continue;
                }
                let dab = node_dist(nodes[a], nodes[b]);
                for x in 0..nodes.len() {
                    let (dax, dxb) = (node_dist(nodes[a], nodes[x]), node_dist(nodes[x], nodes[b]));
                    // x lies on the geodesic from a to b
                    if (dax + dxb - dab).abs() > 1e-12 * dab.max(1.0) {
                        continue;
                    }
                    let v = f[a] + (f[b] - f[a]) * dax / dab;
                    if v > f[x] + 1e-13 {
                        f[x] = v;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return f;
        }
    }
}

/// `∫_0^1 e^{a(1−t) + bt} t^i (1−t)^j dt` by 40-point Gauss–Legendre.
fn seg_moment(a: f64, b: f64, i: i32, j: i32) -> f64 {
    let (x, w) = orthant::quadrature::gauss_legendre(40);
    x.iter()
        .zip(&w)
        .map(|(&x, &w)| {
            let t = 0.5 * (x + 1.0);
            0.5 * w * (a * (1.0 - t) + b * t).exp() * t.powi(i) * (1.0 - t).powi(j)
        })
        .sum()
}

/// Maximizer over knot values of `Σ w ψ(p) − ∫ e^ψ` for a fixed knot set, by
/// damped Newton. Returns the knot values and the objective.
fn fixed_knot_mle(pos: &[f64], w: &[f64], knots: &[usize]) -> (Vec<f64>, f64) {
    let m = knots.len();
    // hat-function data weights
    let mut wd = vec![0.0; m];
    for (i, (&p, &wi)) in pos.iter().zip(w).enumerate() {
        let s = knots.iter().rposition(|&k| k <= i).unwrap();
        if knots[s] == i || s + 1 == m {
            wd[s] += wi;
        } else {
            let (a, b) = (pos[knots[s]], pos[knots[s + 1]]);
            let t = (p - a) / (b - a);
            wd[s] += wi * (1.0 - t);
            wd[s + 1] += wi * t;
        }
    }
    let objective = |v: &[f64]| -> f64 {
        let mut f: f64 = wd.iter().zip(v).map(|(a, b)| a * b).sum();
        for s in 0..m - 1 {
            f -= (pos[knots[s + 1]] - pos[knots[s]]) * seg_moment(v[s], v[s + 1], 0, 0);
        }
        f
    };
    let mut v = vec![-(pos[pos.len() - 1] - pos[0]).ln(); m];
    for _ in 0..200 {
        let mut g = nalgebra::DVector::from_column_slice(&wd);
        let mut h = nalgebra::DMatrix::<f64>::zeros(m, m);
        for s in 0..m - 1 {
            let len = pos[knots[s + 1]] - pos[knots[s]];
            let (a, b) = (v[s], v[s + 1]);
            g[s] -= len * seg_moment(a, b, 0, 1);
            g[s + 1] -= len * seg_moment(a, b, 1, 0);
            h[(s, s)] += len * seg_moment(a, b, 0, 2);
            h[(s + 1, s + 1)] += len * seg_moment(a, b, 2, 0);
            h[(s, s + 1)] += len * seg_moment(a, b, 1, 1);
            h[(s + 1, s)] += len * seg_moment(a, b, 1, 1);
        }
        let step = h.lu().solve(&g).expect("positive definite");
        let f0 = objective(&v);
        let mut t = 1.0;
        let mut next: Vec<f64>;
        loop {
            next = v.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
            if objective(&next) >= f0 - 1e-15 || t < 1e-10 {
                break;
            }
            t *= 0.5;
        }
        let size = step.amax() * t;
        v = next;
        if size < 1e-14 {
            break;
        }
    }
    let f = objective(&v);
    (v, f)
}

/// Classical log-concave MLE on a line by exhaustive search over knot sets.
/// `pos` is strictly increasing, `w` sums to one. Returns `ψ` at every
/// position.
pub fn one_dimensional_lcmle(pos: &[f64], w: &[f64]) -> Vec<f64> {
    let n = pos.len();
    assert!((2..=16).contains(&n));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 2)) {
        let knots: Vec<usize> =
            std::iter::once(0).chain((1..n - 1).filter(|i| mask & (1 << (i - 1)) != 0)).chain([n - 1]).collect();
        let (v, f) = fixed_knot_mle(pos, w, &knots);
        let slopes: Vec<f64> =
            (0..knots.len() - 1).map(|s| (v[s + 1] - v[s]) / (pos[knots[s + 1]] - pos[knots[s]])).collect();
        if slopes.windows(2).any(|p| p[1] > p[0] + 1e-9) {
            continue;
        }
        if best.as_ref().is_none_or(|b| f > b.0) {
            let vals = (0..n)
                .map(|i| {
                    let s = knots.iter().rposition(|&k| k <= i).unwrap().min(knots.len() - 2);
                    let (a, b) = (knots[s], knots[s + 1]);
                    v[s] + (v[s + 1] - v[s]) * (pos[i] - pos[a]) / (pos[b] - pos[a])
                })
                .collect();
            best = Some((f, vals));
        }
    }
    best.expect("the two-knot candidate is always concave").1
}
