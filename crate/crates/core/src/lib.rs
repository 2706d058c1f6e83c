//! Density estimation on CAT(0) orthant spaces: exact geodesic distances,
//! kernel density estimation with location-dependent normalization, and
//! log-concave maximum likelihood on spiders.

pub mod complex;
pub mod density;
pub mod error;
pub mod geodesic;
pub mod io;
pub mod kde;
pub mod lcmle;
pub mod quadrature;
pub mod simlab;
pub mod special;

pub use complex::{AxisSet, BoxDomain, ComplexId, OrthantBox, OrthantComplex, Point};
pub use density::Density;
pub use error::{Error, Result};
pub use geodesic::{Geodesic, GeodesicKind, GeodesicResult, SupportPair};
pub use kde::{kde_evaluate, kernel_eval, normalizing_constant, smoothed_density, Kde, KernelKind};
pub use lcmle::{fit, least_concave_majorant, FitOptions, FitResult, SpiderConcaveFn, SpiderLeg};
pub use quadrature::{Integral, QuadratureOptions};
pub use simlab::{density_eval, DensitySpec};

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
