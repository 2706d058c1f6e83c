use std::sync::Arc;

use crate::complex::{OrthantComplex, Point};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::kde::{normalizing_constant, Kde};
use crate::lcmle::{FittedDensity, SpiderConcaveFn};
use crate::quadrature::QuadratureOptions;

/// Gaussian-type densities are treated as zero beyond this many `σ` from
/// their center.
const GAUSSIAN_RADIUS: f64 = 12.0;

#[derive(Debug, Clone)]
pub enum DensityForm {
    /// `exp(−d(x, center)² / 2σ²)`.
    GaussianType {
        center: Point,
        sigma: f64,
    },
    /// Weighted sum of normalized components.
    Mixture(Vec<(f64, DensitySpec)>),
    /// `e^ψ` for a concave `ψ` on a spider.
    Fitted(SpiderConcaveFn),
    Kde(Kde),
}

/// A symbolic density with its normalizing constant `Z` cached, so that
/// `eval` returns `form(x) / Z`.
#[derive(Debug, Clone)]
pub struct DensitySpec {
    complex: Arc<OrthantComplex>,
    form: DensityForm,
    z: f64,
}

impl DensitySpec {
    pub fn gaussian_type(complex: Arc<OrthantComplex>, center: Point, sigma: f64, tol: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        let z = 1.0 / normalizing_constant(&complex, &center, sigma, tol)?;
        Ok(DensitySpec { complex, form: DensityForm::GaussianType { center, sigma }, z })
    }

    pub fn mixture(components: Vec<(f64, DensitySpec)>) -> Result<Self> {
        let first = components.first().ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let complex = first.1.complex.clone();
        if components.iter().any(|(_, d)| d.complex.id() != complex.id()) {
            return Err(Error::ForeignPoint);
        }
        if components.iter().any(|(w, _)| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter("mixture weights must be finite and nonnegative".into()));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(DensitySpec { complex, form: DensityForm::Mixture(components), z: 1.0 })
    }

    pub fn fitted(complex: Arc<OrthantComplex>, psi: SpiderConcaveFn) -> Result<Self> {
        if !complex.is_spider() {
            return Err(Error::NotSpider);
        }
        if psi.num_legs() != complex.num_axes() {
            return Err(Error::InvalidConcaveFn(format!(
                "{} legs on a spider with {} legs",
                psi.num_legs(),
                complex.num_axes()
            )));
        }
        let z = psi.integrate_exp()?;
        Ok(DensitySpec { complex, form: DensityForm::Fitted(psi), z })
    }

    /// A kernel estimate, rescaled to unit mass by quadrature.
    pub fn kde(kde: Kde, opts: &QuadratureOptions) -> Result<Self> {
        let complex = kde.shared_complex().clone();
        let z = kde.mass(opts)?;
        Ok(DensitySpec { complex, form: DensityForm::Kde(kde), z })
    }

    /// Gaussian-type density with `σ = 0.5` centered at coordinate `0.5` on
    /// the first leg of a spider.
    pub fn f1(complex: Arc<OrthantComplex>, tol: f64) -> Result<Self> {
        let center = complex.axis_point(0, 0.5)?;
        Self::gaussian_type(complex, center, 0.5, tol)
    }

    /// Equal mixture of Gaussian-type densities with `σ = 0.4` centered at
    /// coordinate `0.6` on the first two legs of a spider.
    pub fn f2(complex: Arc<OrthantComplex>, tol: f64) -> Result<Self> {
        let a = complex.axis_point(0, 0.6)?;
        let b = complex.axis_point(1, 0.6)?;
        Self::mixture(vec![
            (0.5, Self::gaussian_type(complex.clone(), a, 0.4, tol)?),
            (0.5, Self::gaussian_type(complex, b, 0.4, tol)?),
        ])
    }

    pub fn form(&self) -> &DensityForm {
        &self.form
    }

    pub fn complex_arc(&self) -> &Arc<OrthantComplex> {
        &self.complex
    }

    /// The cached normalizing constant `Z`.
    pub fn normalization(&self) -> f64 {
        self.z
    }

    pub fn eval(&self, x: &Point) -> Result<f64> {
        self.complex.check_point(x)?;
        self.eval_unchecked(x)
    }

    fn eval_unchecked(&self, x: &Point) -> Result<f64> {
        let raw = match &self.form {
            DensityForm::GaussianType { center, sigma } => {
                let d = self.complex.distance_value(x, center)?;
                (-d * d / (2.0 * sigma * sigma)).exp()
            }
            DensityForm::Mixture(parts) => {
                let mut sum = 0.0;
                for (w, d) in parts {
                    sum += w * d.eval_unchecked(x)?;
                }
                sum
            }
            DensityForm::Fitted(psi) => psi.evaluate(x),
            DensityForm::Kde(k) => k.evaluate(x)?,
        };
        Ok(raw / self.z)
    }
}

/// `f(x)` for a normalized density specification.
pub fn density_eval(d: &DensitySpec, x: &Point) -> Result<f64> {
    d.eval(x)
}

impl Density for DensitySpec {
    fn complex(&self) -> &OrthantComplex {
        &self.complex
    }

    fn eval(&self, x: &Point) -> Result<f64> {
        DensitySpec::eval(self, x)
    }

    fn support_radius(&self) -> f64 {
        match &self.form {
            DensityForm::GaussianType { center, sigma } => center.norm() + GAUSSIAN_RADIUS * sigma,
            DensityForm::Mixture(parts) => parts.iter().map(|p| p.1.support_radius()).fold(0.0, f64::max),
            DensityForm::Fitted(psi) => FittedDensity { complex: &self.complex, psi }.support_radius(),
            DensityForm::Kde(k) => k.support_radius(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::norm_cdf;

    #[test]
    fn f1_matches_the_closed_form() {
        let c = Arc::new(OrthantComplex::spider(3).unwrap());
        let f1 = DensitySpec::f1(c.clone(), 1e-12).unwrap();
        // ∫ on the center leg is σ√(2π) Φ(1); on each other leg σ√(2π) Φ(−1)
        let s = 0.5 * crate::special::SQRT_2PI;
        let z = s * (norm_cdf(1.0) + 2.0 * norm_cdf(-1.0));
        assert!((f1.normalization() - z).abs() < 1e-14);
        assert!((f1.normalization() - 1.4522).abs() < 1e-4);
        let peak = f1.eval(&c.axis_point(0, 0.5).unwrap()).unwrap();
        assert!((peak - 0.6886).abs() < 1e-4);
        assert!((f1.eval(&c.origin()).unwrap() - 0.4177).abs() < 1e-4);
    }

    #[test]
    fn mixture_rejects_bad_weights() {
        let c = Arc::new(OrthantComplex::spider(3).unwrap());
        let f1 = DensitySpec::f1(c, 1e-12).unwrap();
        assert!(DensitySpec::mixture(vec![(0.4, f1.clone()), (0.4, f1.clone())]).is_err());
        assert!(DensitySpec::mixture(vec![(1.5, f1.clone()), (-0.5, f1)]).is_err());
        assert!(DensitySpec::mixture(vec![]).is_err());
    }
}
