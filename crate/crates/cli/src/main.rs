use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::{Arc, LazyLock};

use clap::{Args, Parser, Subcommand};
use orthant::io::{load_point, load_space, parse_points_jsonl, read_sample};
use orthant::simlab::{leg_grid, run_experiment_file, ExperimentFile, FORMAT_VERSION};
use orthant::{
    fit, AxisSet, Error, FitOptions, Kde, KernelKind, OrthantComplex, Point, QuadratureOptions, SupportPair,
};
use serde_json::{json, Value};

static VERSION: LazyLock<String> = LazyLock::new(|| {
    format!("{} (library {}, format {})", env!("CARGO_PKG_VERSION"), orthant::VERSION, FORMAT_VERSION)
});

/// Density estimation on CAT(0) orthant spaces.
#[derive(Debug, Parser)]
#[command(name = "orthant", version = VERSION.as_str())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a space and report whether it is flag (CAT(0)) and its dimension.
    CheckSpace {
        #[command(flatten)]
        common: Common,
    },
    /// Geodesic distance between two points.
    Distance {
        #[command(flatten)]
        common: Common,
        /// Start point: inline JSON such as '{"1":0.5}', or a file holding one.
        #[arg(long)]
        from: String,
        /// End point, in the same forms as --from.
        #[arg(long)]
        to: String,
    },
    /// Kernel density estimate on a grid, as CSV.
    Kde {
        #[command(flatten)]
        common: Common,
        /// Sample file: `leg,coord` CSV, or JSON lines when named *.jsonl.
        #[arg(long)]
        sample: PathBuf,
        #[arg(long, value_parser = parse_kernel)]
        kernel: KernelKind,
        /// Bandwidth.
        #[arg(long)]
        h: f64,
        /// `COUNT:MAX` for COUNT points on [0, MAX] along every leg of a spider,
        /// or a JSON-lines file of points.
        #[arg(long)]
        grid: GridSpec,
        /// Rescale the estimate to unit mass before evaluating.
        #[arg(long)]
        renormalize: bool,
        /// Output CSV path (standard output when omitted). A `.json` metadata
        /// file is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Log-concave maximum likelihood fit on a spider, as JSON.
    Lcmle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sample: PathBuf,
        /// Output JSON path (standard output when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = FitOptions::default().max_iter)]
        max_iter: usize,
    },
    /// Run a simulation experiment described by a JSON file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads for replicates (all cores when omitted).
        #[arg(long)]
        jobs: Option<usize>,
        /// Overrides the config's tolerance.
        #[arg(long, value_parser = parse_tol)]
        tol: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// `spider:k`, `book:k`, `t4`, or a JSON space file.
    #[arg(long)]
    space: String,
    /// Numerical tolerance.
    #[arg(long, default_value_t = 1e-10, value_parser = parse_tol)]
    tol: f64,
}

#[derive(Debug, Clone)]
enum GridSpec {
    Legs { count: usize, max: f64 },
    File(PathBuf),
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some((count, max)) = s.split_once(':') {
            if let (Ok(count), Ok(max)) = (count.parse::<usize>(), max.parse::<f64>()) {
                if count == 0 || !(max >= 0.0 && max.is_finite()) {
                    return Err(format!("grid `{s}`: need COUNT ≥ 1 and a finite MAX ≥ 0"));
                }
                return Ok(GridSpec::Legs { count, max });
            }
        }
        Ok(GridSpec::File(PathBuf::from(s)))
    }
}

fn parse_kernel(s: &str) -> Result<KernelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_tol(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if t > 0.0 && t.is_finite() => Ok(t),
        _ => Err(format!("tolerance must be a positive number, got `{s}`")),
    }
}

fn axis_names(c: &OrthantComplex, set: AxisSet) -> Value {
    set.iter().map(|i| c.axis_name(i)).collect()
}

fn witness_json(c: &OrthantComplex, w: &SupportPair) -> Value {
    json!({
        "common": axis_names(c, w.common),
        "a": w.a.iter().map(|&s| axis_names(c, s)).collect::<Vec<_>>(),
        "b": w.b.iter().map(|&s| axis_names(c, s)).collect::<Vec<_>>(),
    })
}

fn print_json(v: &Value, out: Option<&Path>) -> orthant::Result<()> {
    let text = serde_json::to_string(v).map_err(|e| Error::Parse(e.to_string()))? + "\n";
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn grid_points(c: &OrthantComplex, grid: &GridSpec) -> orthant::Result<Vec<Point>> {
    match grid {
        GridSpec::Legs { count, max } => Ok(leg_grid(c, *count, *max)?.into_iter().map(|(_, _, p)| p).collect()),
        GridSpec::File(path) => parse_points_jsonl(c, &fs::read_to_string(path)?),
    }
}

fn write_kde_csv<W: Write>(c: &OrthantComplex, kde: &Kde, points: &[Point], out: W) -> orthant::Result<()> {
    let mut out = BufWriter::new(out);
    let header: Vec<&str> =
        std::iter::once("orthant").chain(c.axes().iter().map(String::as_str)).chain(["density"]).collect();
    writeln!(out, "{}", header.join(","))?;
    for p in points {
        let mut row = vec![c.describe(p.active())];
        row.extend((0..c.num_axes()).map(|i| p.coord(i).to_string()));
        row.push(kde.evaluate(p)?.to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> orthant::Result<()> {
    match cli.command {
        Command::CheckSpace { common } => {
            let c = load_space(&common.space)?;
            print_json(&json!({ "flag": c.is_flag(), "dimension": c.dimension(), "tol": common.tol }), None)
        }
        Command::Distance { common, from, to } => {
            let c = load_space(&common.space)?;
            let (x, y) = (load_point(&c, &from)?, load_point(&c, &to)?);
            let r = c.distance(&x, &y)?;
            let witness = r.witness.as_ref().map_or(Value::Null, |w| witness_json(&c, w));
            print_json(
                &json!({ "distance": r.distance, "kind": r.kind.as_str(), "witness": witness, "tol": common.tol }),
                None,
            )
        }
        Command::Kde { common, sample, kernel, h, grid, renormalize, out } => {
            let c = Arc::new(load_space(&common.space)?);
            let data = read_sample(&c, &sample)?;
            let n = data.len();
            let mut kde = Kde::new(c.clone(), data, h, kernel, common.tol)?;
            let mass = if renormalize {
                Some(kde.renormalize(&QuadratureOptions::with_tol(common.tol.max(1e-12)))?)
            } else {
                None
            };
            let points = grid_points(&c, &grid)?;
            match &out {
                Some(path) => {
                    write_kde_csv(&c, &kde, &points, File::create(path)?)?;
                    let meta = json!({
                        "format_version": FORMAT_VERSION,
                        "kernel": kernel.as_str(),
                        "h": h,
                        "n": n,
                        "tol": common.tol,
                        "renormalized_from_mass": mass,
                    });
                    print_json(&meta, Some(&path.with_extension("json")))
                }
                None => write_kde_csv(&c, &kde, &points, io::stdout().lock()),
            }
        }
        Command::Lcmle { common, sample, out, max_iter } => {
            let c = load_space(&common.space)?;
            let data = read_sample(&c, &sample)?;
            let r = fit(&c, &data, &FitOptions { tol: common.tol, max_iter })?;
            let legs: Vec<Value> = r
                .psi
                .legs()
                .iter()
                .enumerate()
                .map(|(i, leg)| json!({ "axis": c.axis_name(i), "knots": leg.knots, "final_slope": leg.final_slope }))
                .collect();
            let origin = r.psi.origin_value();
            let v = json!({
                "format_version": FORMAT_VERSION,
                "origin_value": origin.is_finite().then_some(origin),
                "legs": legs,
                "objective": r.objective,
                "integral": r.integral,
                "iterations": r.iterations,
                "converged": r.converged,
                "n": data.len(),
                "tol": common.tol,
            });
            print_json(&v, out.as_deref())
        }
        Command::Experiment { config, out_dir, jobs, tol } => {
            let mut file = ExperimentFile::load(&config)?;
            if let Some(t) = tol {
                file.tol = t;
            }
            let dir = out_dir.or_else(|| file.output_dir.clone()).ok_or_else(|| {
                Error::InvalidParameter("no output directory: pass --out-dir or set output_dir".into())
            })?;
            let summary = run_experiment_file(&file, &dir, jobs)?;
            print_json(&summary, None)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.code(), "message": e.to_string() }));
            ExitCode::from(1)
        }
    }
}
