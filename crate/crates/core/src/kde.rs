//! Kernel density estimation with Gaussian-type kernels.
//!
//! Both kernels use the bump `exp(−d(x, X)² / 2h²)`. `K1` is normalized at the
//! data point, so each kernel integrates to one over the evaluation argument;
//! `K2` is normalized at the evaluation point, which removes the boundary bias
//! of `K1` near non-manifold points such as the origin of a spider.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::complex::{BoxDomain, OrthantComplex, Point};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureOptions;
use crate::special::{norm_cdf, SQRT_2PI};

pub mod bandwidth;

/// Radius, in bandwidths, beyond which the Gaussian bump is ignored.
pub const KERNEL_RADIUS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    K1,
    K2,
}

impl KernelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::K1 => "k1",
            KernelKind::K2 => "k2",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "k1" => Ok(KernelKind::K1),
            "k2" => Ok(KernelKind::K2),
            _ => Err(Error::InvalidParameter(format!("unknown kernel `{s}` (expected k1 or k2)"))),
        }
    }
}

fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("bandwidth must be positive, got {h}")))
    }
}

/// `C(x, h)`, the inverse of `∫ exp(−d(x, y)² / 2h²) dν(y)`.
///
/// On a `k`-spider this is `1 / (√(2π) h (1 + (k − 2) Φ(−‖x‖ / h)))`; other
/// complexes integrate numerically over a box of half-width `10h` about `x`.
pub fn normalizing_constant(c: &OrthantComplex, x: &Point, h: f64, tol: f64) -> Result<f64> {
    check_bandwidth(h)?;
    c.check_point(x)?;
    c.require_flag()?;
    if c.is_spider() {
        let k = c.num_axes() as f64;
        return Ok(1.0 / (SQRT_2PI * h * (1.0 + (k - 2.0) * norm_cdf(-x.norm() / h))));
    }
    let opts = QuadratureOptions::with_tol(tol);
    let domain = BoxDomain::around(c, x, KERNEL_RADIUS * h);
    let mut failure = None;
    let mass = c.integrate(
        |y| match c.distance_value(x, y) {
            Ok(d) => (-d * d / (2.0 * h * h)).exp(),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &domain,
        &opts,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(1.0 / mass.value)
}

fn bump(c: &OrthantComplex, x: &Point, y: &Point, h: f64) -> Result<f64> {
    let d = c.distance_value(x, y)?;
    Ok((-d * d / (2.0 * h * h)).exp())
}

/// `K(x | xi, h)` for either kernel.
pub fn kernel_eval(c: &OrthantComplex, kind: KernelKind, x: &Point, xi: &Point, h: f64, tol: f64) -> Result<f64> {
    let norm_at = match kind {
        KernelKind::K1 => xi,
        KernelKind::K2 => x,
    };
    Ok(normalizing_constant(c, norm_at, h, tol)? * bump(c, x, xi, h)?)
}

/// Kernel density estimate `(1/N) Σ K(x | X_i, h)` at a single point.
pub fn kde_evaluate(
    c: &OrthantComplex,
    sample: &[Point],
    x: &Point,
    h: f64,
    kind: KernelKind,
    tol: f64,
) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    check_bandwidth(h)?;
    let mut sum = 0.0;
    match kind {
        KernelKind::K1 => {
            for xi in sample {
                sum += normalizing_constant(c, xi, h, tol)? * bump(c, x, xi, h)?;
            }
            Ok(sum / sample.len() as f64)
        }
        KernelKind::K2 => {
            for xi in sample {
                sum += bump(c, x, xi, h)?;
            }
            Ok(normalizing_constant(c, x, h, tol)? * sum / sample.len() as f64)
        }
    }
}

/// A kernel density estimate that owns its sample. For `K1` the per-sample
/// normalizing constants are computed once at construction.
#[derive(Debug, Clone)]
pub struct Kde {
    complex: Arc<OrthantComplex>,
    sample: Vec<Point>,
    h: f64,
    kind: KernelKind,
    tol: f64,
    constants: Vec<f64>,
    scale: f64,
}

impl Kde {
    pub fn new(complex: Arc<OrthantComplex>, sample: Vec<Point>, h: f64, kind: KernelKind, tol: f64) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        check_bandwidth(h)?;
        for p in &sample {
            complex.check_point(p)?;
        }
        complex.require_flag()?;
        let constants = match kind {
            KernelKind::K1 => {
                sample.iter().map(|p| normalizing_constant(&complex, p, h, tol)).collect::<Result<_>>()?
            }
            KernelKind::K2 => Vec::new(),
        };
        Ok(Kde { complex, sample, h, kind, tol, constants, scale: 1.0 })
    }

    pub fn sample(&self) -> &[Point] {
        &self.sample
    }

    pub fn shared_complex(&self) -> &Arc<OrthantComplex> {
        &self.complex
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    /// Estimate at `x`. Terms are summed in sample order, so results are
    /// reproducible bit for bit.
    pub fn evaluate(&self, x: &Point) -> Result<f64> {
        let c = &*self.complex;
        c.check_point(x)?;
        let mut sum = 0.0;
        match self.kind {
            KernelKind::K1 => {
                for (xi, &ci) in self.sample.iter().zip(&self.constants) {
                    sum += ci * bump(c, x, xi, self.h)?;
                }
            }
            KernelKind::K2 => {
                for xi in &self.sample {
                    sum += bump(c, x, xi, self.h)?;
                }
                sum *= normalizing_constant(c, x, self.h, self.tol)?;
            }
        }
        Ok(self.scale * sum / self.sample.len() as f64)
    }

    /// Total mass `∫ f̂ dν`. Always one for `K1`; `K2` estimates generally
    /// deviate from one near the origin.
    pub fn mass(&self, opts: &QuadratureOptions) -> Result<f64> {
        let domain = BoxDomain::uniform(&self.complex, 0.0, self.support_radius())?;
        let mut failure = None;
        let v = self.complex.integrate(
            |y| {
                self.evaluate(y).unwrap_or_else(|e| {
                    failure.get_or_insert(e);
                    0.0
                })
            },
            &domain,
            opts,
        )?;
        match failure {
            Some(e) => Err(e),
            None => Ok(v.value),
        }
    }

    /// Rescales the estimate to unit mass and returns the mass it had before.
    pub fn renormalize(&mut self, opts: &QuadratureOptions) -> Result<f64> {
        self.scale = 1.0;
        let m = self.mass(opts)?;
        self.scale = 1.0 / m;
        Ok(m)
    }
}

impl Density for Kde {
    fn complex(&self) -> &OrthantComplex {
        &self.complex
    }

    fn eval(&self, x: &Point) -> Result<f64> {
        self.evaluate(x)
    }

    fn support_radius(&self) -> f64 {
        let far = self.sample.iter().map(|p| p.coords().iter().map(|c| c.1).fold(0.0, f64::max)).fold(0.0, f64::max);
        far + KERNEL_RADIUS * self.h
    }
}

/// The smoothed density `E_Y[K(x | Y, h)]` for `Y ~ f`, the infinite-sample
/// limit of [`kde_evaluate`], by quadrature.
pub fn smoothed_density(
    c: &OrthantComplex,
    f: &dyn Density,
    x: &Point,
    h: f64,
    kind: KernelKind,
    tol: f64,
) -> Result<f64> {
    check_bandwidth(h)?;
    c.check_point(x)?;
    if f.complex().id() != c.id() {
        return Err(Error::ForeignPoint);
    }
    let opts = QuadratureOptions::with_tol(tol);
    let domain = BoxDomain::around(c, x, KERNEL_RADIUS * h);
    let mut failure = None;
    let mut record = |r: Result<f64>| {
        r.unwrap_or_else(|e| {
            failure.get_or_insert(e);
            0.0
        })
    };
    let value = match kind {
        KernelKind::K1 => {
            c.integrate(
                |y| {
                    record((|| {
                        let fy = f.eval(y)?;
                        if fy == 0.0 {
                            return Ok(0.0);
                        }
                        Ok(normalizing_constant(c, y, h, tol)? * bump(c, x, y, h)? * fy)
                    })())
                },
                &domain,
                &opts,
            )?
            .value
        }
        KernelKind::K2 => {
            let v = c.integrate(|y| record((|| Ok(bump(c, x, y, h)? * f.eval(y)?))()), &domain, &opts)?.value;
            v * normalizing_constant(c, x, h, tol)?
        }
    };
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Limit of `∫ C(y, h) exp(−‖y‖² / 2h²) dν(y)` as `h → 0` on a `k`-spider,
/// the factor by which `K1` inflates the density at the origin.
pub fn spider_origin_inflation(k: usize) -> f64 {
    let k = k as f64;
    k / (k - 2.0) * (k / 2.0).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spider3() -> OrthantComplex {
        OrthantComplex::spider(3).unwrap()
    }

    #[test]
    fn spider_constants() {
        let c = spider3();
        let c0 = normalizing_constant(&c, &c.origin(), 1.0, 1e-10).unwrap();
        assert!((c0 - 1.0 / (SQRT_2PI * 1.5)).abs() < 1e-15);
        assert!((c0 - 0.26596).abs() < 1e-5);
        let far = c.point(&[("0", 50.0)]).unwrap();
        assert!((normalizing_constant(&c, &far, 1.0, 1e-10).unwrap() - 0.39894).abs() < 1e-5);
        let half = OrthantComplex::spider(1).unwrap();
        let v = normalizing_constant(&half, &half.origin(), 1.0, 1e-10).unwrap();
        assert!((v - 0.79788).abs() < 1e-5);
        assert!(normalizing_constant(&c, &far, 0.0, 1e-10).is_err());
        assert!(normalizing_constant(&c, &far, -1.0, 1e-10).is_err());
    }

    #[test]
    fn spider_constant_matches_quadrature() {
        let c = spider3();
        for &(u, h) in &[(0.0, 1.0), (0.3, 0.5), (2.0, 0.7)] {
            let x = c.point(&[("1", u)]).unwrap();
            let opts = QuadratureOptions::with_tol(1e-12).decay_radius(u + 12.0 * h);
            let m = c
                .integrate(
                    |y| {
                        let d = c.distance_value(&x, y).unwrap();
                        (-d * d / (2.0 * h * h)).exp()
                    },
                    &BoxDomain::whole(&c),
                    &opts,
                )
                .unwrap();
            let closed = normalizing_constant(&c, &x, h, 1e-10).unwrap();
            assert!((closed * m.value - 1.0).abs() < 1e-10, "u = {u}, h = {h}");
        }
    }

    #[test]
    fn kernel_examples() {
        let c = spider3();
        let x = c.origin();
        let xi = c.point(&[("0", 0.5)]).unwrap();
        let k2 = kernel_eval(&c, KernelKind::K2, &x, &xi, 0.5, 1e-10).unwrap();
        assert!((k2 - 0.32262).abs() < 1e-5);
        let k1 = kernel_eval(&c, KernelKind::K1, &xi, &xi, 0.5, 1e-10).unwrap();
        assert_eq!(k1, normalizing_constant(&c, &xi, 0.5, 1e-10).unwrap());
        let other = c.point(&[("1", 0.5)]).unwrap();
        let est = kde_evaluate(&c, &[xi.clone(), other], &x, 0.5, KernelKind::K2, 1e-10).unwrap();
        assert!((est - k2).abs() < 1e-15);
    }

    #[test]
    fn kde_struct_agrees_with_function() {
        let c = Arc::new(spider3());
        let sample: Vec<Point> =
            [(0, 0.2), (1, 0.7), (2, 1.3), (0, 0.05)].iter().map(|&(l, u)| c.axis_point(l, u).unwrap()).collect();
        for kind in [KernelKind::K1, KernelKind::K2] {
            let kde = Kde::new(c.clone(), sample.clone(), 0.3, kind, 1e-10).unwrap();
            for &(l, u) in &[(0usize, 0.0), (1, 0.4), (2, 2.0)] {
                let x = c.axis_point(l, u).unwrap();
                let a = kde.evaluate(&x).unwrap();
                let b = kde_evaluate(&c, &sample, &x, 0.3, kind, 1e-10).unwrap();
                assert_eq!(a, b);
            }
        }
        assert!(matches!(kde_evaluate(&c, &[], &c.origin(), 0.3, KernelKind::K1, 1e-10), Err(Error::EmptySample)));
    }

    #[test]
    fn renormalized_k2_has_unit_mass() {
        let c = Arc::new(spider3());
        let sample: Vec<Point> =
            [(0, 0.1), (1, 0.2), (2, 0.05)].iter().map(|&(l, u)| c.axis_point(l, u).unwrap()).collect();
        let opts = QuadratureOptions::with_tol(1e-10);
        let mut kde = Kde::new(c.clone(), sample, 0.3, KernelKind::K2, 1e-10).unwrap();
        let before = kde.mass(&opts).unwrap();
        assert!((before - 1.0).abs() > 1e-3);
        kde.renormalize(&opts).unwrap();
        assert!((kde.mass(&opts).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inflation_factor() {
        assert!((spider_origin_inflation(3) - 3.0 * 1.5f64.ln()).abs() < 1e-15);
        assert!((spider_origin_inflation(3) - 1.21640).abs() < 1e-5);
    }

    #[test]
    fn kernel_names_parse() {
        assert_eq!("K1".parse::<KernelKind>().unwrap(), KernelKind::K1);
        assert_eq!("k2".parse::<KernelKind>().unwrap(), KernelKind::K2);
        assert!("k3".parse::<KernelKind>().is_err());
    }
}
