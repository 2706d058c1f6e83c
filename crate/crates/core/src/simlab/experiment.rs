use std::io::Write;

use rayon::prelude::*;

use super::sampler::{replicate_rng, sample_with};
use super::spec::DensitySpec;
use crate::complex::{OrthantComplex, Point};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::io::{csv_err, point_label};
use crate::kde::{kde_evaluate, smoothed_density, KernelKind};
use crate::lcmle::{fit, tv_distance, FitOptions, FitResult};

/// Settings of a Monte Carlo bias study of kernel estimates.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub truth: DensitySpec,
    /// Sample size per replicate.
    pub n: usize,
    pub replicates: usize,
    pub h: f64,
    pub kernels: Vec<KernelKind>,
    pub seed: u64,
    pub eval_points: Vec<Point>,
    /// Quadrature tolerance for kernel normalizers off spiders.
    pub tol: f64,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.n == 0 {
            return bad("sample size must be at least 1");
        }
        if self.replicates == 0 {
            return bad("at least one replicate is required");
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad("bandwidth must be positive");
        }
        if self.kernels.is_empty() || self.eval_points.is_empty() {
            return bad("at least one kernel and one evaluation point are required");
        }
        for p in &self.eval_points {
            self.truth.complex_arc().check_point(p)?;
        }
        Ok(())
    }
}

pub(crate) fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Estimates and truth at one evaluation point for one kernel.
#[derive(Debug, Clone)]
pub struct BiasEntry {
    pub kernel: KernelKind,
    pub point: Point,
    pub truth: f64,
    /// One estimate per replicate, in replicate order.
    pub estimates: Vec<f64>,
}

impl BiasEntry {
    pub fn biases(&self) -> impl Iterator<Item = f64> + '_ {
        self.estimates.iter().map(move |e| e - self.truth)
    }

    pub fn mean_bias(&self) -> f64 {
        self.biases().sum::<f64>() / self.estimates.len() as f64
    }

    /// Standard error of the mean bias; zero for a single replicate.
    pub fn std_error(&self) -> f64 {
        let n = self.estimates.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean_bias();
        let var = self.biases().map(|b| (b - m) * (b - m)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct BiasReport {
    pub h: f64,
    pub n: usize,
    pub seed: u64,
    /// Kernel-major, then evaluation points in configuration order.
    pub entries: Vec<BiasEntry>,
}

impl BiasReport {
    pub fn entry(&self, kernel: KernelKind, point: usize) -> Option<&BiasEntry> {
        self.entries.iter().filter(|e| e.kernel == kernel).nth(point)
    }
}

/// Kernel estimates at every evaluation point for one replicate, kernel-major.
pub fn run_replicate(cfg: &ExperimentConfig, replicate: u64) -> Result<Vec<f64>> {
    let c = cfg.truth.complex_arc();
    let sample = sample_with(&cfg.truth, cfg.n, &mut replicate_rng(cfg.seed, replicate))?;
    let mut out = Vec::with_capacity(cfg.kernels.len() * cfg.eval_points.len());
    for &kind in &cfg.kernels {
        for x in &cfg.eval_points {
            out.push(kde_evaluate(c, &sample, x, cfg.h, kind, cfg.tol)?);
        }
    }
    Ok(out)
}

/// Draws `replicates` independent samples and records `f̂(x) − f(x)` for each
/// kernel and evaluation point.
pub fn run_bias_experiment(cfg: &ExperimentConfig) -> Result<BiasReport> {
    cfg.validate()?;
    let rows: Vec<Vec<f64>> = in_pool(cfg.jobs, || {
        (0..cfg.replicates as u64).into_par_iter().map(|r| run_replicate(cfg, r)).collect::<Result<_>>()
    })??;
    let truths: Vec<f64> = cfg.eval_points.iter().map(|x| cfg.truth.eval(x)).collect::<Result<_>>()?;
    let mut entries = Vec::new();
    for (k, &kernel) in cfg.kernels.iter().enumerate() {
        for (j, point) in cfg.eval_points.iter().enumerate() {
            let col = k * cfg.eval_points.len() + j;
            entries.push(BiasEntry {
                kernel,
                point: point.clone(),
                truth: truths[j],
                estimates: rows.iter().map(|r| r[col]).collect(),
            });
        }
    }
    Ok(BiasReport { h: cfg.h, n: cfg.n, seed: cfg.seed, entries })
}

/// `bias.csv`: one row per kernel, evaluation point and replicate.
pub fn write_bias_csv<W: Write>(c: &OrthantComplex, report: &BiasReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kernel", "eval_point", "replicate", "estimate", "truth", "bias"]).map_err(csv_err)?;
    for e in &report.entries {
        let label = point_label(c, &e.point);
        for (r, est) in e.estimates.iter().enumerate() {
            w.write_record([
                e.kernel.to_string(),
                label.clone(),
                r.to_string(),
                est.to_string(),
                e.truth.to_string(),
                (est - e.truth).to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Sampling-free value of the smoothed density at one bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub h: f64,
    pub kernel: KernelKind,
    pub point: Point,
    pub smoothed: f64,
    pub truth: f64,
}

impl SweepRow {
    pub fn bias(&self) -> f64 {
        self.smoothed - self.truth
    }

    pub fn ratio(&self) -> f64 {
        self.smoothed / self.truth
    }
}

/// `E[f̂(x)]` at every bandwidth, kernel and point, by quadrature.
pub fn smoothing_sweep(
    truth: &DensitySpec,
    points: &[Point],
    bandwidths: &[f64],
    kernels: &[KernelKind],
    tol: f64,
) -> Result<Vec<SweepRow>> {
    let c = truth.complex_arc();
    let mut jobs = Vec::new();
    for &h in bandwidths {
        for &kernel in kernels {
            for p in points {
                jobs.push((h, kernel, p));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(h, kernel, p)| {
            Ok(SweepRow {
                h,
                kernel,
                point: p.clone(),
                smoothed: smoothed_density(c, truth, p, h, kernel, tol)?,
                truth: truth.eval(p)?,
            })
        })
        .collect()
}

/// `sweep.csv`: smoothed density against truth for each bandwidth.
pub fn write_sweep_csv<W: Write>(c: &OrthantComplex, rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["h", "kernel", "eval_point", "smoothed", "truth", "bias", "ratio"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.h.to_string(),
            r.kernel.to_string(),
            point_label(c, &r.point),
            r.smoothed.to_string(),
            r.truth.to_string(),
            r.bias().to_string(),
            r.ratio().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `count` equispaced points on `[0, max]` along every leg of a spider, leg
/// by leg. Each leg starts at the origin.
pub fn leg_grid(c: &OrthantComplex, count: usize, max: f64) -> Result<Vec<(usize, f64, Point)>> {
    if !c.is_spider() {
        return Err(Error::NotSpider);
    }
    let step = if count > 1 { max / (count - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(c.num_axes() * count);
    for leg in 0..c.num_axes() {
        for i in 0..count {
            let u = i as f64 * step;
            out.push((leg, u, c.axis_point(leg, u)?));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlayRow {
    pub leg: usize,
    pub coord: f64,
    pub truth: f64,
    pub estimate: f64,
    pub method: String,
}

/// Truth and each named estimate on a per-leg grid.
pub fn overlay(
    truth: &dyn Density,
    estimates: &[(&str, &dyn Density)],
    grid: &[(usize, f64, Point)],
) -> Result<Vec<OverlayRow>> {
    let mut out = Vec::with_capacity(grid.len() * estimates.len());
    for &(name, est) in estimates {
        for (leg, u, p) in grid {
            out.push(OverlayRow {
                leg: *leg,
                coord: *u,
                truth: truth.eval(p)?,
                estimate: est.eval(p)?,
                method: name.to_string(),
            });
        }
    }
    Ok(out)
}

/// `overlay.csv`: grid values of the truth and each estimate per orthant.
pub fn write_overlay_csv<W: Write>(c: &OrthantComplex, rows: &[OverlayRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["orthant", "coord", "truth", "estimate", "method"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            c.axis_name(r.leg).to_string(),
            r.coord.to_string(),
            r.truth.to_string(),
            r.estimate.to_string(),
            r.method.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Settings of a log-concave MLE study on a spider.
#[derive(Debug, Clone)]
pub struct LcmleExperimentConfig {
    pub truth: DensitySpec,
    /// Sample sizes of the consistency curve.
    pub sizes: Vec<usize>,
    /// Independent samples per size.
    pub seeds: usize,
    pub seed: u64,
    /// Sample size of the fit shown in the overlay.
    pub overlay_n: usize,
    pub grid_points: usize,
    pub grid_max: f64,
    /// Quadrature tolerance for total variation.
    pub tol: f64,
    pub fit: FitOptions,
    pub jobs: Option<usize>,
}

impl LcmleExperimentConfig {
    pub fn new(truth: DensitySpec) -> Self {
        LcmleExperimentConfig {
            truth,
            sizes: vec![100, 1000, 10_000],
            seeds: 20,
            seed: 0,
            overlay_n: 1000,
            grid_points: 200,
            grid_max: 2.5,
            tol: 1e-8,
            fit: FitOptions::default(),
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvRow {
    pub n: usize,
    pub seed: u64,
    pub tv: f64,
}

#[derive(Debug, Clone)]
pub struct LcmleReport {
    pub tv: Vec<TvRow>,
    pub overlay: Vec<OverlayRow>,
    /// Fit and sample behind the overlay.
    pub overlay_fit: FitResult,
    pub overlay_sample: Vec<Point>,
}

impl LcmleReport {
    /// Median total variation at sample size `n`.
    pub fn median_tv(&self, n: usize) -> Option<f64> {
        let mut v: Vec<f64> = self.tv.iter().filter(|r| r.n == n).map(|r| r.tv).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
    }
}

/// Sample of size `n` from stream `stream`, its fit, and the fit's density.
pub fn fit_replicate(
    truth: &DensitySpec,
    n: usize,
    seed: u64,
    stream: u64,
    opts: &FitOptions,
) -> Result<(Vec<Point>, FitResult)> {
    let sample = sample_with(truth, n, &mut replicate_rng(seed, stream))?;
    let r = fit(truth.complex_arc(), &sample, opts)?;
    Ok((sample, r))
}

/// Fits the log-concave MLE for every size and seed, records the total
/// variation distance to the truth, and tabulates an overlay of one fit.
pub fn run_lcmle_experiment(cfg: &LcmleExperimentConfig) -> Result<LcmleReport> {
    let c = cfg.truth.complex_arc();
    if !c.is_spider() {
        return Err(Error::NotSpider);
    }
    let mut jobs = Vec::new();
    for &n in &cfg.sizes {
        for s in 0..cfg.seeds as u64 {
            jobs.push((n, s));
        }
    }
    let tv: Vec<TvRow> = in_pool(cfg.jobs, || {
        jobs.par_iter()
            .map(|&(n, s)| {
                let (_, r) = fit_replicate(&cfg.truth, n, cfg.seed, s, &cfg.fit)?;
                let fitted = DensitySpec::fitted(c.clone(), r.psi)?;
                Ok(TvRow { n, seed: s, tv: tv_distance(&fitted, &cfg.truth, cfg.tol)? })
            })
            .collect::<Result<_>>()
    })??;
    let (overlay_sample, overlay_fit) = fit_replicate(&cfg.truth, cfg.overlay_n, cfg.seed, 0, &cfg.fit)?;
    let fitted = DensitySpec::fitted(c.clone(), overlay_fit.psi.clone())?;
    let grid = leg_grid(c, cfg.grid_points, cfg.grid_max)?;
    let overlay = overlay(&cfg.truth, &[("lcmle", &fitted)], &grid)?;
    Ok(LcmleReport { tv, overlay, overlay_fit, overlay_sample })
}

/// `tv.csv`: total variation distance per sample size and seed.
pub fn write_tv_csv<W: Write>(rows: &[TvRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "seed", "tv"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.n.to_string(), r.seed.to_string(), r.tv.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
