//! Active-set Newton method for the log-concave MLE on a spider.
//!
//! The fitted `ψ` is piecewise linear with knots at a subset of the distinct
//! data coordinates. For a fixed knot set the objective
//! `F(v) = Σ_i w_i ψ_v(X_i) − ∫ e^{ψ_v} dν` is smooth and strictly concave in
//! the knot values `v`, so Newton steps apply. Concavity of `ψ` is enforced
//! by two kinds of linear constraints: nonpositive kinks at interior knots
//! and, when two or more legs are occupied, `s_l + s_m ≤ 0` for the initial
//! slopes of every pair of legs. A kink that reaches zero removes its knot; a
//! pair constraint that becomes tight joins the working set. Once the
//! restricted problem is solved, a knot is inserted where the Lagrangian
//! derivative along the hat function of a data point is positive, or a pair
//! with a negative multiplier is released.

use nalgebra::{DMatrix, DVector};

use super::concave::{seg_moments, SpiderConcaveFn, SpiderLeg};
use crate::error::{Error, Result};

/// Distinct positions of the data on one leg with their empirical weights.
#[derive(Debug, Clone)]
pub(crate) struct Line {
    pub leg: usize,
    pub pos: Vec<f64>,
    pub w: Vec<f64>,
}

/// Weighted data on a spider. In junction mode two or more legs are
/// occupied and the origin is a variable; otherwise a single line carries
/// all the data (including any points at the origin, at position zero).
#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub num_legs: usize,
    pub junction: bool,
    pub w0: f64,
    pub lines: Vec<Line>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SolverOptions {
    pub release_tol: f64,
    pub max_iter: usize,
}

pub(crate) struct Solution {
    pub psi: SpiderConcaveFn,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
struct State {
    /// Per line: knot indices into `pos`, ascending.
    knots: Vec<Vec<usize>>,
    /// Flattened values: origin first in junction mode, then knots line by line.
    v: Vec<f64>,
    /// Working set of tight pair constraints, as line indices `(l, m)`, `l < m`.
    pairs: Vec<(usize, usize)>,
}

/// One linear piece between two variables.
#[derive(Debug, Clone, Copy)]
struct Seg {
    ia: usize,
    ib: usize,
    len: f64,
}

/// A linear inequality `Σ coef · v ≤ 0`.
#[derive(Debug, Clone)]
enum Constraint {
    Kink { line: usize, slot: usize, coefs: [(usize, f64); 3] },
    Pair { pair: (usize, usize), coefs: [(usize, f64); 3] },
}

impl Constraint {
    fn coefs(&self) -> &[(usize, f64); 3] {
        match self {
            Constraint::Kink { coefs, .. } | Constraint::Pair { coefs, .. } => coefs,
        }
    }

    fn apply(&self, v: &[f64]) -> f64 {
        self.coefs().iter().map(|&(i, c)| c * v[i]).sum()
    }
}

impl Problem {
    fn offsets(&self, st: &State) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.lines.len());
        let mut next = usize::from(self.junction);
        for k in &st.knots {
            off.push(next);
            next += k.len();
        }
        off
    }

    /// Anchors of a line: `(position, variable)` including the origin in junction mode.
    fn anchors(&self, st: &State, off: &[usize], line: usize) -> Vec<(f64, usize)> {
        let mut out = Vec::with_capacity(st.knots[line].len() + 1);
        if self.junction {
            out.push((0.0, 0));
        }
        for (slot, &d) in st.knots[line].iter().enumerate() {
            out.push((self.lines[line].pos[d], off[line] + slot));
        }
        out
    }

    fn segments(&self, st: &State) -> Vec<Seg> {
        let off = self.offsets(st);
        let mut segs = Vec::new();
        for line in 0..self.lines.len() {
            let a = self.anchors(st, &off, line);
            segs.extend(a.windows(2).map(|w| Seg { ia: w[0].1, ib: w[1].1, len: w[1].0 - w[0].0 }));
        }
        segs
    }

    /// Linear weights `W` with `Σ_i w_i ψ(X_i) = W · v`.
    fn data_weights(&self, st: &State) -> Vec<f64> {
        let off = self.offsets(st);
        let mut wv = vec![0.0; st.v.len()];
        if self.junction {
            wv[0] = self.w0;
        }
        for (line, data) in self.lines.iter().enumerate() {
            let anchors = self.anchors(st, &off, line);
            let mut seg = 0;
            for (&u, &w) in data.pos.iter().zip(&data.w) {
                while seg + 1 < anchors.len() && anchors[seg + 1].0 < u {
                    seg += 1;
                }
                if seg + 1 == anchors.len() || anchors[seg].0 == u {
                    wv[anchors[seg].1] += w;
                    continue;
                }
                let (pa, ia) = anchors[seg];
                let (pb, ib) = anchors[seg + 1];
                if pb == u {
                    wv[ib] += w;
                } else {
                    let t = (u - pa) / (pb - pa);
                    wv[ia] += w * (1.0 - t);
                    wv[ib] += w * t;
                }
            }
        }
        wv
    }

    fn constraints(&self, st: &State) -> Vec<Constraint> {
        let off = self.offsets(st);
        let mut out = Vec::new();
        for line in 0..self.lines.len() {
            let a = self.anchors(st, &off, line);
            for i in 1..a.len().saturating_sub(1) {
                let (p0, i0) = a[i - 1];
                let (p1, i1) = a[i];
                let (p2, i2) = a[i + 1];
                let (r, l) = (1.0 / (p2 - p1), 1.0 / (p1 - p0));
                let slot = if self.junction { i - 1 } else { i };
                out.push(Constraint::Kink { line, slot, coefs: [(i0, l), (i1, -r - l), (i2, r)] });
            }
        }
        if self.junction {
            for l in 0..self.lines.len() {
                for m in l + 1..self.lines.len() {
                    let (pl, il) = (self.lines[l].pos[st.knots[l][0]], off[l]);
                    let (pm, im) = (self.lines[m].pos[st.knots[m][0]], off[m]);
                    let coefs = [(il, 1.0 / pl), (im, 1.0 / pm), (0, -1.0 / pl - 1.0 / pm)];
                    out.push(Constraint::Pair { pair: (l, m), coefs });
                }
            }
        }
        out
    }

    fn objective(&self, segs: &[Seg], wv: &[f64], v: &[f64]) -> f64 {
        let data: f64 = wv.iter().zip(v).map(|(w, x)| w * x).sum();
        let integral: f64 = segs.iter().map(|s| seg_moments(v[s.ia], v[s.ib], s.len).j).sum();
        data - integral
    }

    fn initial_state(&self) -> State {
        if self.junction {
            let knots: Vec<Vec<usize>> = self.lines.iter().map(|l| vec![l.pos.len() - 1]).collect();
            let ends: Vec<f64> = self.lines.iter().map(|l| *l.pos.last().unwrap()).collect();
            let gamma = ends.len() as f64 / ends.iter().sum::<f64>();
            let mass: f64 = ends.iter().map(|&m| -(-gamma * m).exp_m1() / gamma).sum();
            let c = -mass.ln();
            let mut v = vec![c];
            v.extend(ends.iter().map(|&m| c - gamma * m));
            State { knots, v, pairs: Vec::new() }
        } else {
            let pos = &self.lines[0].pos;
            let n = pos.len();
            let c = -(pos[n - 1] - pos[0]).ln();
            State { knots: vec![vec![0, n - 1]], v: vec![c, c], pairs: Vec::new() }
        }
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<Solution> {
        let mut st = self.initial_state();
        let mut iterations = 0usize;
        loop {
            let lambda = self.newton(&mut st, &mut iterations, opts.max_iter)?;
            // release the most negative pair multiplier first
            if let Some((j, &l)) = lambda.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) {
                if l < -opts.release_tol {
                    st.pairs.remove(j);
                    continue;
                }
            }
            match self.best_insertion(&st, &lambda) {
                Some((gain, line, d)) if gain > opts.release_tol => self.insert_knot(&mut st, line, d),
                _ => break,
            }
        }
        Ok(Solution { psi: self.to_function(&st)?, iterations })
    }

    /// Newton iterations on the restricted problem; returns the multipliers
    /// of the working-set pairs at the solution.
    fn newton(&self, st: &mut State, iterations: &mut usize, max_iter: usize) -> Result<Vec<f64>> {
        // steps taken once the decrement is below what round-off lets the
        // objective resolve
        let mut polish = 0;
        loop {
            *iterations += 1;
            if *iterations > max_iter {
                return Err(Error::LcmleNotConverged(max_iter));
            }
            let segs = self.segments(st);
            let wv = self.data_weights(st);
            let n = st.v.len();
            let cons = self.constraints(st);
            let working: Vec<&Constraint> = st
                .pairs
                .iter()
                .map(|p| cons.iter().find(|c| matches!(c, Constraint::Pair { pair, .. } if pair == p)).unwrap())
                .collect();
            let m = working.len();

            let mut grad = DVector::from_column_slice(&wv);
            let mut kkt = DMatrix::<f64>::zeros(n + m, n + m);
            for s in &segs {
                let mo = seg_moments(st.v[s.ia], st.v[s.ib], s.len);
                grad[s.ia] -= mo.ja;
                grad[s.ib] -= mo.jb;
                kkt[(s.ia, s.ia)] -= mo.jaa;
                kkt[(s.ib, s.ib)] -= mo.jbb;
                kkt[(s.ia, s.ib)] -= mo.jab;
                kkt[(s.ib, s.ia)] -= mo.jab;
            }
            let mut rhs = DVector::<f64>::zeros(n + m);
            for i in 0..n {
                rhs[i] = -grad[i];
            }
            for (r, c) in working.iter().enumerate() {
                for &(i, a) in c.coefs() {
                    kkt[(n + r, i)] += a;
                    kkt[(i, n + r)] -= a;
                }
                rhs[n + r] = -c.apply(&st.v);
            }
            let sol = kkt.lu().solve(&rhs).ok_or(Error::LcmleNotConverged(*iterations))?;
            let d: Vec<f64> = (0..n).map(|i| sol[i]).collect();
            let lambda: Vec<f64> = (0..m).map(|r| sol[n + r]).collect();
            let decrement: f64 = (0..n).map(|i| grad[i] * d[i]).sum();
            if decrement.abs() < 1e-22 || !decrement.is_finite() {
                return Ok(lambda);
            }
            if decrement.abs() < 1e-12 {
                polish += 1;
                if polish > 3 {
                    return Ok(lambda);
                }
            }

            // longest feasible step
            let mut alpha_max = 1.0;
            let mut blocking = None;
            for (ci, c) in cons.iter().enumerate() {
                if let Constraint::Pair { pair, .. } = c {
                    if st.pairs.contains(pair) {
                        continue;
                    }
                }
                let rate = c.apply(&d);
                let scale: f64 = c.coefs().iter().map(|&(i, a)| (a * d[i]).abs()).sum();
                if rate > 1e-13 * scale && (matches!(c, Constraint::Kink { .. }) || independent(&working, c, n)) {
                    let a = (-c.apply(&st.v)).max(0.0) / rate;
                    if a < alpha_max {
                        alpha_max = a;
                        blocking = Some(ci);
                    }
                }
            }
            let f0 = self.objective(&segs, &wv, &st.v);
            let mut alpha = alpha_max;
            let mut trial: Vec<f64>;
            loop {
                trial = st.v.iter().zip(&d).map(|(v, d)| v + alpha * d).collect();
                // below 1e-12 the objective cannot resolve the predicted gain,
                // and any ascent step is accepted
                if alpha * decrement < 1e-12
                    || self.objective(&segs, &wv, &trial) >= f0 + 1e-4 * alpha * decrement
                    || alpha < 1e-14
                {
                    break;
                }
                alpha *= 0.5;
            }
            if alpha < 1e-14 && alpha != alpha_max {
                // no further progress is possible at this precision
                return Ok(lambda);
            }
            st.v = trial;
            if alpha == alpha_max {
                match blocking.map(|ci| &cons[ci]) {
                    Some(Constraint::Kink { line, slot, .. }) => self.remove_knot(st, *line, *slot),
                    Some(Constraint::Pair { pair, .. }) => st.pairs.push(*pair),
                    None => {}
                }
            }
        }
    }

    fn remove_knot(&self, st: &mut State, line: usize, slot: usize) {
        let off = self.offsets(st);
        st.v.remove(off[line] + slot);
        st.knots[line].remove(slot);
    }

    fn insert_knot(&self, st: &mut State, line: usize, d: usize) {
        let off = self.offsets(st);
        let u = self.lines[line].pos[d];
        let anchors = self.anchors(st, &off, line);
        let seg = anchors.windows(2).position(|w| w[0].0 < u && u < w[1].0).expect("insertion inside the domain");
        let (pa, ia) = anchors[seg];
        let (pb, ib) = anchors[seg + 1];
        let value = st.v[ia] + (st.v[ib] - st.v[ia]) * (u - pa) / (pb - pa);
        let slot = st.knots[line].partition_point(|&k| k < d);
        st.knots[line].insert(slot, d);
        st.v.insert(off[line] + slot, value);
    }

    /// Largest Lagrangian derivative along the hat function of a data point
    /// that is not yet a knot.
    fn best_insertion(&self, st: &State, lambda: &[f64]) -> Option<(f64, usize, usize)> {
        let off = self.offsets(st);
        let mut best: Option<(f64, usize, usize)> = None;
        for (line, data) in self.lines.iter().enumerate() {
            let anchors = self.anchors(st, &off, line);
            let pair_load: f64 =
                st.pairs.iter().zip(lambda).filter(|(p, _)| p.0 == line || p.1 == line).map(|(_, l)| l).sum();
            let mut first = 0;
            for (s, w) in anchors.windows(2).enumerate() {
                let ((pa, ia), (pb, ib)) = (w[0], w[1]);
                let (va, vb) = (st.v[ia], st.v[ib]);
                while first < data.pos.len() && data.pos[first] <= pa {
                    first += 1;
                }
                let mut last = first;
                while last < data.pos.len() && data.pos[last] < pb {
                    last += 1;
                }
                let inner = first..last;
                let (tot0, tot1) =
                    inner.clone().fold((0.0, 0.0), |(a, b), i| (a + data.w[i], b + data.w[i] * data.pos[i]));
                let (mut s0, mut s1) = (0.0, 0.0);
                for i in inner {
                    let u = data.pos[i];
                    s0 += data.w[i];
                    s1 += data.w[i] * u;
                    let left = (s1 - pa * s0) / (u - pa);
                    let right = (pb * (tot0 - s0) - (tot1 - s1)) / (pb - u);
                    let vu = va + (vb - va) * (u - pa) / (pb - pa);
                    let integral = seg_moments(va, vu, u - pa).jb + seg_moments(vu, vb, pb - u).ja;
                    let mut gain = left + right - integral;
                    if self.junction && s == 0 {
                        gain -= pair_load / u;
                    }
                    if best.is_none_or(|b| gain > b.0) {
                        best = Some((gain, line, i));
                    }
                }
                first = last;
            }
        }
        best
    }

    fn to_function(&self, st: &State) -> Result<SpiderConcaveFn> {
        let off = self.offsets(st);
        let mut legs = vec![SpiderLeg::empty(); self.num_legs];
        let mut origin = f64::NEG_INFINITY;
        for (line, data) in self.lines.iter().enumerate() {
            let mut knots: Vec<(f64, f64)> =
                st.knots[line].iter().enumerate().map(|(slot, &d)| (data.pos[d], st.v[off[line] + slot])).collect();
            if !self.junction && knots[0].0 == 0.0 {
                origin = knots.remove(0).1;
            }
            legs[data.leg].knots = knots;
        }
        if self.junction {
            origin = st.v[0];
        }
        SpiderConcaveFn::new(origin, legs)
    }
}

/// Whether `c` is linearly independent of the working constraints. A
/// dependent pair constraint is already enforced by the working set.
fn independent(working: &[&Constraint], c: &Constraint, n: usize) -> bool {
    let rows = working.len() + 1;
    let mut a = DMatrix::<f64>::zeros(rows, n);
    for (r, w) in working.iter().copied().chain(std::iter::once(c)).enumerate() {
        for &(i, x) in w.coefs() {
            a[(r, i)] += x;
        }
    }
    let sv = a.singular_values();
    let top = sv.max();
    sv.iter().filter(|&&x| x > 1e-10 * top).count() == rows
}
