use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::experiment::{
    leg_grid, overlay, run_bias_experiment, run_lcmle_experiment, smoothing_sweep, write_bias_csv, write_overlay_csv,
    write_sweep_csv, write_tv_csv, ExperimentConfig, LcmleExperimentConfig,
};
use super::sampler::{replicate_rng, sample_with};
use super::spec::DensitySpec;
use crate::complex::{OrthantComplex, Point};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::io::{load_space, point_json};
use crate::kde::{Kde, KernelKind};
use crate::lcmle::FitOptions;

/// Version of the on-disk experiment and output formats.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TruthFile {
    F1,
    F2,
    GaussianType { center: BTreeMap<String, f64>, sigma: f64 },
    Mixture { components: Vec<MixtureComponent> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub density: TruthFile,
}

impl TruthFile {
    pub fn build(&self, c: &Arc<OrthantComplex>, tol: f64) -> Result<DensitySpec> {
        match self {
            TruthFile::F1 => DensitySpec::f1(c.clone(), tol),
            TruthFile::F2 => DensitySpec::f2(c.clone(), tol),
            TruthFile::GaussianType { center, sigma } => {
                DensitySpec::gaussian_type(c.clone(), point_from_map(c, center)?, *sigma, tol)
            }
            TruthFile::Mixture { components } => DensitySpec::mixture(
                components.iter().map(|m| Ok((m.weight, m.density.build(c, tol)?))).collect::<Result<_>>()?,
            ),
        }
    }
}

fn point_from_map(c: &OrthantComplex, m: &BTreeMap<String, f64>) -> Result<Point> {
    let pairs: Vec<(&str, f64)> = m.iter().map(|(k, &v)| (k.as_str(), v)).collect();
    c.point(&pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LcmleSection {
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default = "default_overlay_n")]
    pub overlay_n: usize,
}

fn default_sizes() -> Vec<usize> {
    vec![100, 1000, 10_000]
}
fn default_seeds() -> usize {
    20
}
fn default_overlay_n() -> usize {
    1000
}
fn default_space() -> String {
    "spider:3".into()
}
fn default_kernels() -> Vec<KernelKind> {
    vec![KernelKind::K1, KernelKind::K2]
}
fn default_sweep() -> Vec<f64> {
    vec![0.4, 0.2, 0.1, 0.05]
}
fn default_tol() -> f64 {
    1e-9
}

/// JSON form of an experiment. Omitted evaluation points default to the
/// origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default = "default_space")]
    pub space: String,
    pub truth: TruthFile,
    pub n: usize,
    pub replicates: usize,
    pub h: f64,
    #[serde(default = "default_kernels")]
    pub kernels: Vec<KernelKind>,
    pub seed: u64,
    #[serde(default)]
    pub eval_points: Vec<BTreeMap<String, f64>>,
    /// Bandwidths of the sampling-free smoothing sweep.
    #[serde(default = "default_sweep")]
    pub sweep: Vec<f64>,
    #[serde(default)]
    pub lcmle: Option<LcmleSection>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentFile {
    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Parse(format!("experiment config: {e}")))
    }

    pub fn bias_config(&self, jobs: Option<usize>) -> Result<ExperimentConfig> {
        let c = Arc::new(load_space(&self.space)?);
        let truth = self.truth.build(&c, self.tol)?;
        let eval_points = if self.eval_points.is_empty() {
            vec![c.origin()]
        } else {
            self.eval_points.iter().map(|m| point_from_map(&c, m)).collect::<Result<_>>()?
        };
        Ok(ExperimentConfig {
            truth,
            n: self.n,
            replicates: self.replicates,
            h: self.h,
            kernels: self.kernels.clone(),
            seed: self.seed,
            eval_points,
            tol: self.tol,
            jobs,
        })
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Runs every study an experiment file asks for, writes `bias.csv`,
/// `sweep.csv`, `overlay.csv`, `tv.csv` (when an LCMLE section is present) and
/// `summary.json` into `out_dir`, and returns the summary.
pub fn run_experiment_file(file: &ExperimentFile, out_dir: &Path, jobs: Option<usize>) -> Result<Value> {
    let cfg = file.bias_config(jobs)?;
    let c = cfg.truth.complex_arc().clone();
    fs::create_dir_all(out_dir)?;

    let bias = run_bias_experiment(&cfg)?;
    write_bias_csv(&c, &bias, create(out_dir, "bias.csv")?)?;
    let bias_summary: Vec<Value> = bias
        .entries
        .iter()
        .map(|e| {
            json!({
                "kernel": e.kernel,
                "eval_point": point_json(&c, &e.point),
                "truth": e.truth,
                "mean_bias": e.mean_bias(),
                "std_error": e.std_error(),
            })
        })
        .collect();

    let sweep = smoothing_sweep(&cfg.truth, &cfg.eval_points, &file.sweep, &cfg.kernels, file.tol)?;
    write_sweep_csv(&c, &sweep, create(out_dir, "sweep.csv")?)?;

    let mut summary = json!({
        "format_version": FORMAT_VERSION,
        "tol": file.tol,
        "h": file.h,
        "n": file.n,
        "replicates": file.replicates,
        "seed": file.seed,
        "bias": bias_summary,
    });

    let mut methods: Vec<(String, Box<dyn Density>)> = Vec::new();
    if c.is_spider() {
        // kernel estimates from the first replicate's sample, for plotting
        let sample = sample_with(&cfg.truth, cfg.n, &mut replicate_rng(cfg.seed, 0))?;
        for &k in &cfg.kernels {
            methods.push((k.to_string(), Box::new(Kde::new(c.clone(), sample.clone(), cfg.h, k, cfg.tol)?)));
        }
    }

    if let Some(section) = &file.lcmle {
        let lc = LcmleExperimentConfig {
            truth: cfg.truth.clone(),
            sizes: section.sizes.clone(),
            seeds: section.seeds,
            seed: file.seed,
            overlay_n: section.overlay_n,
            grid_points: 200,
            grid_max: 2.5,
            tol: file.tol.max(1e-10),
            fit: FitOptions::default(),
            jobs,
        };
        let report = run_lcmle_experiment(&lc)?;
        write_tv_csv(&report.tv, create(out_dir, "tv.csv")?)?;
        let medians: BTreeMap<String, f64> =
            section.sizes.iter().filter_map(|&n| Some((n.to_string(), report.median_tv(n)?))).collect();
        summary["lcmle"] = json!({ "median_tv": medians, "overlay_n": section.overlay_n });
        methods.push(("lcmle".into(), Box::new(DensitySpec::fitted(c.clone(), report.overlay_fit.psi)?)));
    }

    if c.is_spider() {
        let grid = leg_grid(&c, 200, 2.5)?;
        let named: Vec<(&str, &dyn Density)> = methods.iter().map(|(n, d)| (n.as_str(), d.as_ref())).collect();
        let rows = overlay(&cfg.truth, &named, &grid)?;
        write_overlay_csv(&c, &rows, create(out_dir, "overlay.csv")?)?;
    }

    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(out_dir.join("summary.json"), text + "\n")?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let text = r#"{"truth": {"type": "f1"}, "n": 10, "replicates": 2, "h": 0.1, "seed": 5}"#;
        let f: ExperimentFile = serde_json::from_str(text).unwrap();
        assert_eq!(f.space, "spider:3");
        assert_eq!(f.kernels, vec![KernelKind::K1, KernelKind::K2]);
        let cfg = f.bias_config(None).unwrap();
        assert!(cfg.eval_points[0].is_origin());

        let mix = r#"{"type": "mixture", "components": [
            {"weight": 0.25, "density": {"type": "gaussian_type", "center": {"2": 0.3}, "sigma": 0.2}},
            {"weight": 0.75, "density": {"type": "f1"}}]}"#;
        let t: TruthFile = serde_json::from_str(mix).unwrap();
        let c = Arc::new(OrthantComplex::spider(3).unwrap());
        assert!(t.build(&c, 1e-10).is_ok());

        let unknown = r#"{"truth": {"type": "f1"}, "n": 1, "replicates": 1, "h": 0.1, "seed": 0, "extra": 1}"#;
        assert!(serde_json::from_str::<ExperimentFile>(unknown).is_err());
    }
}
