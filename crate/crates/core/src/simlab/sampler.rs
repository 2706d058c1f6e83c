use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::spec::{DensityForm, DensitySpec};
use crate::complex::{OrthantComplex, Point};
use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_ppf};

/// Generator for replicate `replicate` of an experiment seeded with `seed`.
/// Each replicate reads a disjoint ChaCha stream, so replicates can run in
/// any order or in parallel.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Standard normal conditioned on exceeding `a`.
fn truncated_standard_normal<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    // survival-function inversion: Φ(−z) = v Φ(−a) with v ∈ (0, 1]
    let v = 1.0 - rng.random::<f64>();
    -norm_ppf(v * norm_cdf(-a))
}

/// Per-leg weights and signed means of a Gaussian-type density on a spider.
/// On the center's leg the coordinate is `N(r, σ²)` restricted to `(0, ∞)`;
/// on every other leg it is `N(−r, σ²)` restricted to `(0, ∞)`.
fn gaussian_legs(c: &OrthantComplex, center: &Point, sigma: f64) -> Vec<(f64, f64)> {
    let (leg, r) = center.leg().unwrap_or((0, 0.0));
    (0..c.num_axes())
        .map(|l| {
            let mu = if l == leg { r } else { -r };
            (norm_cdf(mu / sigma), mu)
        })
        .collect()
}

fn pick<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut t = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if t < w {
            return i;
        }
        t -= w;
    }
    // round-off fallthrough: last positive weight
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

enum Plan {
    Gaussian { weights: Vec<f64>, means: Vec<f64>, sigma: f64 },
    Mixture { weights: Vec<f64>, parts: Vec<Plan> },
}

impl Plan {
    fn new(c: &OrthantComplex, d: &DensitySpec) -> Result<Plan> {
        match d.form() {
            DensityForm::GaussianType { center, sigma } => {
                let (weights, means) = gaussian_legs(c, center, *sigma).into_iter().unzip();
                Ok(Plan::Gaussian { weights, means, sigma: *sigma })
            }
            DensityForm::Mixture(parts) => Ok(Plan::Mixture {
                weights: parts.iter().map(|p| p.0).collect(),
                parts: parts.iter().map(|p| Plan::new(c, &p.1)).collect::<Result<_>>()?,
            }),
            DensityForm::Fitted(_) => Err(Error::UnsupportedDensity("sampling from a fitted density".into())),
            DensityForm::Kde(_) => Err(Error::UnsupportedDensity("sampling from a kernel estimate".into())),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        match self {
            Plan::Gaussian { weights, means, sigma } => {
                let leg = pick(weights, rng);
                let mu = means[leg];
                let z = truncated_standard_normal(-mu / sigma, rng);
                (leg, (mu + sigma * z).max(0.0))
            }
            Plan::Mixture { weights, parts } => parts[pick(weights, rng)].draw(rng),
        }
    }
}

/// `n` exact draws from a Gaussian-type density or a mixture of them on a
/// spider.
pub fn sample_with<R: Rng + ?Sized>(d: &DensitySpec, n: usize, rng: &mut R) -> Result<Vec<Point>> {
    let c = d.complex_arc();
    if !c.is_spider() {
        return Err(Error::NotSpider);
    }
    let plan = Plan::new(c, d)?;
    (0..n)
        .map(|_| {
            let (leg, u) = plan.draw(rng);
            c.axis_point(leg, u)
        })
        .collect()
}

/// `n` draws from the first replicate stream of `seed`.
pub fn sample(d: &DensitySpec, n: usize, seed: u64) -> Result<Vec<Point>> {
    sample_with(d, n, &mut replicate_rng(seed, 0))
}
