//! Log-concave maximum likelihood estimation on spiders.
//!
//! The estimator maximizes `L(φ) = (1/N) Σ φ(X_i) − ∫ e^φ dν + 1` over
//! concave `φ`. The maximizer is piecewise linear with knots at data points,
//! its support is the convex hull of the sample, and `∫ e^φ dν = 1` at the
//! optimum.

mod concave;
mod majorant;
mod solver;

use std::collections::BTreeMap;

pub use concave::{FittedDensity, SpiderConcaveFn, SpiderLeg};
pub use majorant::least_concave_majorant;

use crate::complex::{BoxDomain, OrthantComplex, Point};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureOptions;
use solver::{Line, Problem, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Optimality tolerance on the directional derivatives of the objective.
    pub tol: f64,
    /// Cap on the total number of Newton iterations.
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { tol: 1e-10, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub psi: SpiderConcaveFn,
    /// Achieved `L(ψ)`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `∫ e^ψ dν`.
    pub integral: f64,
}

/// Leg and coordinate of each sample point (leg 0, coordinate 0 for the origin).
fn positions(c: &OrthantComplex, sample: &[Point]) -> Result<Vec<(usize, f64)>> {
    if !c.is_spider() {
        return Err(Error::NotSpider);
    }
    sample
        .iter()
        .map(|p| {
            c.check_point(p)?;
            Ok(p.leg().unwrap_or((0, 0.0)))
        })
        .collect()
}

fn build_problem(num_legs: usize, pos: &[(usize, f64)]) -> Result<Problem> {
    if pos.is_empty() {
        return Err(Error::EmptySample);
    }
    let w = 1.0 / pos.len() as f64;
    let mut origin = 0usize;
    let mut per_leg: Vec<BTreeMap<u64, usize>> = vec![BTreeMap::new(); num_legs];
    for &(leg, u) in pos {
        if u == 0.0 {
            origin += 1;
        } else {
            // positive finite floats order like their bit patterns
            *per_leg[leg].entry(u.to_bits()).or_default() += 1;
        }
    }
    let lines: Vec<Line> = per_leg
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(leg, m)| Line {
            leg,
            pos: m.keys().map(|&b| f64::from_bits(b)).collect(),
            w: m.values().map(|&n| n as f64 * w).collect(),
        })
        .collect();
    match lines.len() {
        0 => Err(Error::LcmleNonexistent),
        1 => {
            let mut line = lines.into_iter().next().unwrap();
            if origin > 0 {
                line.pos.insert(0, 0.0);
                line.w.insert(0, origin as f64 * w);
            }
            if line.pos.len() < 2 {
                return Err(Error::LcmleNonexistent);
            }
            Ok(Problem { num_legs, junction: false, w0: 0.0, lines: vec![line] })
        }
        _ => Ok(Problem { num_legs, junction: true, w0: origin as f64 * w, lines }),
    }
}

/// Log-concave MLE of a sample on a spider.
pub fn fit(c: &OrthantComplex, sample: &[Point], opts: &FitOptions) -> Result<FitResult> {
    let pos = positions(c, sample)?;
    let problem = build_problem(c.num_axes(), &pos)?;
    let sol = problem.solve(&SolverOptions { release_tol: opts.tol, max_iter: opts.max_iter })?;
    let psi = sol.psi;
    let integral = psi.integrate_exp()?;
    let mean: f64 = sample.iter().map(|p| psi.value_at(p)).sum::<f64>() / sample.len() as f64;
    Ok(FitResult { objective: mean - integral + 1.0, psi, iterations: sol.iterations, converged: true, integral })
}

/// `σ(y) = (1/N) Σ y_i − ∫ exp(majorant(y)) dν`, where the majorant is the
/// least concave majorant of the sample lifted to heights `y`.
pub fn sigma(c: &OrthantComplex, sample: &[Point], y: &[f64]) -> Result<f64> {
    if sample.len() != y.len() {
        return Err(Error::InvalidParameter("one lifted value per sample point is required".into()));
    }
    let pos = positions(c, sample)?;
    let lifted: Vec<(usize, f64, f64)> = pos.iter().zip(y).map(|(&(l, u), &v)| (l, u, v)).collect();
    let m = least_concave_majorant(c.num_axes(), &lifted)?;
    Ok(y.iter().sum::<f64>() / y.len() as f64 - m.integrate_exp()?)
}

/// Total variation distance `½ ∫ |f − g| dν`.
pub fn tv_distance(f: &dyn Density, g: &dyn Density, tol: f64) -> Result<f64> {
    let c = f.complex();
    if g.complex().id() != c.id() {
        return Err(Error::ForeignPoint);
    }
    let radius = f.support_radius().max(g.support_radius());
    let domain = BoxDomain::uniform(c, 0.0, radius)?;
    let mut failure = None;
    let v = c.integrate(
        |x| match (f.eval(x), g.eval(x)) {
            (Ok(a), Ok(b)) => 0.5 * (a - b).abs(),
            (Err(e), _) | (_, Err(e)) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &domain,
        &QuadratureOptions::with_tol(tol),
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v.value),
    }
}
