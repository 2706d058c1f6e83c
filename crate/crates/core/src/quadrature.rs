//! Adaptive tensor-product Gauss–Legendre cubature over boxes.
//!
//! Every cell carries two estimates: the rule applied to the cell and the sum
//! of the rule over its `2^p` dyadic children. Their difference is the cell's
//! error estimate, and the worst cell is split until the total estimated error
//! is below `tol` relative to the integral. Infinite upper bounds are handled
//! by truncation at a caller-supplied decay radius, doubled until the added
//! shell no longer changes the estimate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::complex::{BoxDomain, OrthantComplex, Point};
use crate::error::{Error, Result};

/// Points per axis of the base rule.
const ORDER: usize = 10;
/// Initial uniform split per axis before adaptive refinement starts.
const INITIAL_SPLIT: usize = 4;
const MAX_DOUBLINGS: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Relative tolerance on the integral.
    pub tol: f64,
    /// Absolute floor, used when the integral is (close to) zero.
    pub abs_tol: f64,
    /// Initial truncation radius for infinite upper bounds.
    pub decay_radius: Option<f64>,
    /// Cap on integrand evaluations per box.
    pub max_nodes: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { tol: 1e-9, abs_tol: 1e-15, decay_radius: None, max_nodes: 1 << 20 }
    }
}

impl QuadratureOptions {
    pub fn with_tol(tol: f64) -> Self {
        QuadratureOptions { tol, ..Default::default() }
    }

    pub fn decay_radius(mut self, r: f64) -> Self {
        self.decay_radius = Some(r);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.abs_tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", self.tol)));
        }
        if let Some(r) = self.decay_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!("decay radius must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub nodes: usize,
}

impl std::ops::Add for Integral {
    type Output = Integral;
    fn add(self, o: Integral) -> Integral {
        Integral { value: self.value + o.value, error: self.error + o.error, nodes: self.nodes + o.nodes }
    }
}

impl Integral {
    pub const ZERO: Integral = Integral { value: 0.0, error: 0.0, nodes: 0 };
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn base_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

/// Tensor-product rule on one cell.
fn apply_rule<F: FnMut(&[f64]) -> f64>(f: &mut F, lo: &[f64], hi: &[f64], x: &mut [f64]) -> f64 {
    let (nodes, weights) = base_rule();
    let p = lo.len();
    if p == 0 {
        return f(&[]);
    }
    let half: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
    let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b + a)).collect();
    let mut idx = vec![0usize; p];
    let mut sum = 0.0;
    loop {
        let mut w = 1.0;
        for d in 0..p {
            x[d] = mid[d] + half[d] * nodes[idx[d]];
            w *= weights[idx[d]] * half[d];
        }
        sum += w * f(x);
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < ORDER {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == p {
                return sum;
            }
        }
    }
}

struct Cell {
    lo: Vec<f64>,
    hi: Vec<f64>,
    fine: f64,
    err: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn children(lo: &[f64], hi: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let p = lo.len();
    (0..1usize << p)
        .map(|mask| {
            let mut clo = lo.to_vec();
            let mut chi = hi.to_vec();
            for d in 0..p {
                let mid = 0.5 * (lo[d] + hi[d]);
                if mask >> d & 1 == 0 {
                    chi[d] = mid;
                } else {
                    clo[d] = mid;
                }
            }
            (clo, chi)
        })
        .collect()
}

fn evaluate_cell<F: FnMut(&[f64]) -> f64>(f: &mut F, lo: Vec<f64>, hi: Vec<f64>, x: &mut [f64]) -> Cell {
    let coarse = apply_rule(f, &lo, &hi, x);
    let fine: f64 = children(&lo, &hi).iter().map(|(a, b)| apply_rule(f, a, b, x)).sum();
    Cell { lo, hi, fine, err: (coarse - fine).abs() }
}

/// Integrates `f` over a finite box `bounds` (one `(lo, hi)` per axis).
pub fn integrate_finite_box<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    bounds: &[(f64, f64)],
    opts: &QuadratureOptions,
) -> Result<Integral> {
    opts.validate()?;
    let p = bounds.len();
    if bounds.iter().any(|&(a, b)| !(a.is_finite() && b.is_finite()) || a > b) {
        return Err(Error::InvalidDomain("finite bounds required".into()));
    }
    if p == 0 {
        return Ok(Integral { value: f(&[]), error: 0.0, nodes: 1 });
    }
    if bounds.iter().any(|&(a, b)| a == b) {
        return Ok(Integral::ZERO);
    }
    let per_cell = ORDER.pow(p as u32) * (1 + (1 << p));
    let mut x = vec![0.0; p];
    let mut heap = BinaryHeap::new();
    let mut nodes = 0usize;
    let mut total = 0.0;
    let mut total_err = 0.0;
    let splits = INITIAL_SPLIT.pow(p as u32);
    for cell_idx in 0..splits {
        let mut lo = vec![0.0; p];
        let mut hi = vec![0.0; p];
        let mut rem = cell_idx;
        for d in 0..p {
            let j = rem % INITIAL_SPLIT;
            rem /= INITIAL_SPLIT;
            let (a, b) = bounds[d];
            let w = (b - a) / INITIAL_SPLIT as f64;
            lo[d] = a + w * j as f64;
            hi[d] = if j + 1 == INITIAL_SPLIT { b } else { a + w * (j + 1) as f64 };
        }
        let cell = evaluate_cell(&mut f, lo, hi, &mut x);
        nodes += per_cell;
        total += cell.fine;
        total_err += cell.err;
        heap.push(cell);
    }
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Quadrature { estimate: total, error: total_err });
        }
        if total_err <= (opts.tol * total.abs()).max(opts.abs_tol) {
            break;
        }
        if nodes + per_cell * (1 << p) > opts.max_nodes {
            return Err(Error::Quadrature { estimate: total, error: total_err });
        }
        let worst = heap.pop().expect("heap is never empty");
        total -= worst.fine;
        total_err -= worst.err;
        for (lo, hi) in children(&worst.lo, &worst.hi) {
            let cell = evaluate_cell(&mut f, lo, hi, &mut x);
            nodes += per_cell;
            total += cell.fine;
            total_err += cell.err;
            heap.push(cell);
        }
        // Refresh the running sums now and then to keep cancellation error
        // out of the stopping test.
        if heap.len() % 256 == 0 {
            total = heap.iter().map(|c| c.fine).sum();
            total_err = heap.iter().map(|c| c.err).sum();
        }
    }
    let mut cells = heap.into_vec();
    cells.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap_or(Ordering::Equal));
    let value = cells.iter().map(|c| c.fine).sum();
    let error = cells.iter().map(|c| c.err).sum();
    Ok(Integral { value, error, nodes })
}

/// Integrates over a box whose upper bounds may be infinite. Infinite axes are
/// truncated at `lower + decay_radius`, and shells of doubling radius are added
/// until a shell contributes less than `tol` relative to the running total.
pub fn integrate_box<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    bounds: &[(f64, f64)],
    opts: &QuadratureOptions,
) -> Result<Integral> {
    opts.validate()?;
    let infinite: Vec<usize> = (0..bounds.len()).filter(|&d| bounds[d].1.is_infinite()).collect();
    if infinite.is_empty() {
        return integrate_finite_box(f, bounds, opts);
    }
    let radius =
        opts.decay_radius.ok_or_else(|| Error::InvalidDomain("unbounded domain needs a decay radius".into()))?;
    let truncated = |r: f64| -> Vec<(f64, f64)> {
        bounds.iter().map(|&(a, b)| if b.is_infinite() { (a, a + r) } else { (a, b) }).collect()
    };
    let mut r = radius;
    let mut acc = integrate_finite_box(&mut f, &truncated(r), opts)?;
    for _ in 0..MAX_DOUBLINGS {
        let mut shell = Integral::ZERO;
        for mask in 1usize..(1 << infinite.len()) {
            let mut b = truncated(r);
            for (j, &d) in infinite.iter().enumerate() {
                let a = bounds[d].0;
                if mask >> j & 1 == 1 {
                    b[d] = (a + r, a + 2.0 * r);
                }
            }
            shell = shell + integrate_finite_box(&mut f, &b, opts)?;
        }
        acc = acc + shell;
        r *= 2.0;
        if shell.value.abs() <= (opts.tol * acc.value.abs()).max(opts.abs_tol) {
            return Ok(acc);
        }
    }
    Err(Error::Quadrature { estimate: acc.value, error: acc.error })
}

impl OrthantComplex {
    /// Integrates `f` against the reference measure: the sum over maximal
    /// orthants of the Lebesgue integral of `f` on that orthant's boxes.
    /// Shared lower-dimensional faces are null sets and need no special care.
    pub fn integrate<F: FnMut(&Point) -> f64>(
        &self,
        mut f: F,
        domain: &BoxDomain,
        opts: &QuadratureOptions,
    ) -> Result<Integral> {
        let mut total = Integral::ZERO;
        for b in &domain.boxes {
            if !self.maximal_faces().contains(&b.face) {
                return Err(Error::InvalidDomain(format!("box on {} is not a maximal orthant", self.describe(b.face))));
            }
            let axes: Vec<usize> = b.face.iter().collect();
            let id = self.id();
            let r = integrate_box(
                |x: &[f64]| {
                    let coords = axes.iter().zip(x).filter(|(_, &v)| v > 0.0).map(|(&i, &v)| (i, v)).collect();
                    f(&Point::from_parts_unchecked(id, coords))
                },
                &b.bounds,
                opts,
            )?;
            total = total + r;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(ORDER);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 2n-1 = 19 is integrated exactly
        let m18: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((m18 - 2.0 / 19.0).abs() < 1e-14);
        let odd: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(19)).sum();
        assert!(odd.abs() < 1e-15);
    }

    #[test]
    fn smooth_one_dimensional() {
        let r = integrate_finite_box(|x| x[0].sin(), &[(0.0, std::f64::consts::PI)], &QuadratureOptions::default())
            .unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn discontinuous_integrand_converges() {
        let opts = QuadratureOptions::with_tol(1e-9);
        let r = integrate_finite_box(|x| if x[0] < 1.0 / 3.0 { 1.0 } else { 0.0 }, &[(0.0, 1.0)], &opts).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn two_dimensional_gaussian() {
        let opts = QuadratureOptions::with_tol(1e-10).decay_radius(5.0);
        let r =
            integrate_box(|x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp(), &[(0.0, f64::INFINITY); 2], &opts).unwrap();
        assert!((r.value - std::f64::consts::PI / 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn unbounded_needs_radius() {
        let r = integrate_box(|x| (-x[0]).exp(), &[(0.0, f64::INFINITY)], &QuadratureOptions::default());
        assert!(matches!(r, Err(Error::InvalidDomain(_))));
        let r =
            integrate_box(|x| (-x[0]).exp(), &[(0.0, f64::INFINITY)], &QuadratureOptions::default().decay_radius(1.0))
                .unwrap();
        assert!((r.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn node_cap_reports_failure() {
        let opts = QuadratureOptions { tol: 1e-14, max_nodes: 2000, ..Default::default() };
        let r = integrate_finite_box(|x| x[0].abs().sqrt() * (1.0 / x[0]).sin(), &[(1e-9, 1.0)], &opts);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
