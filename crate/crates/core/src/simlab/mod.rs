//! Simulation harness for spiders: target densities, exact samplers, Monte
//! Carlo bias studies of kernel estimates, and log-concave MLE studies.

mod config;
mod experiment;
mod sampler;
mod spec;

pub use config::{run_experiment_file, ExperimentFile, LcmleSection, MixtureComponent, TruthFile, FORMAT_VERSION};
pub use experiment::{
    fit_replicate, leg_grid, overlay, run_bias_experiment, run_lcmle_experiment, run_replicate, smoothing_sweep,
    write_bias_csv, write_overlay_csv, write_sweep_csv, write_tv_csv, BiasEntry, BiasReport, ExperimentConfig,
    LcmleExperimentConfig, LcmleReport, OverlayRow, SweepRow, TvRow,
};
pub use sampler::{replicate_rng, sample, sample_with};
pub use spec::{density_eval, DensityForm, DensitySpec};
