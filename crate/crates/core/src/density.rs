//! Pointwise-evaluable densities with respect to the reference measure.

use crate::complex::{OrthantComplex, Point};
use crate::error::Result;

pub trait Density: Send + Sync {
    /// The space the density lives on.
    fn complex(&self) -> &OrthantComplex;

    /// Density value at `x` (nonnegative).
    fn eval(&self, x: &Point) -> Result<f64>;

    /// Every coordinate of every point outside the box `[0, r]` has density
    /// zero or negligibly small (below the caller's tolerance).
    fn support_radius(&self) -> f64;
}
