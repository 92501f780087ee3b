use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pustitch::datagen::{
    cosine_bells, default_bell_centers, density_sample, gen2d, grid_test_2d, shifted_bells,
    sphere_points, uniform_sphere_points, Table,
};
use pustitch::metrics::error_report;
use pustitch::stitch::{DEFAULT_ETA_GRID, DEFAULT_SIGMA_MULT_GRID};
use pustitch::tuning::grid_search;
use pustitch::{Error, FitConfig, ModelKind, PointCloud, Result, StitchedModel};

mod output;

use output::{csv_bytes, manifest_path_for, read_csv, RunManifest};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Partition-of-unity kernel ridge regression experiments.
#[derive(Debug, Parser)]
#[command(name = "pustitch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Fit a stitched model and write it as JSON.
    Fit {
        /// Training CSV: feature columns, then the response.
        #[arg(long)]
        train: PathBuf,
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Grid-search ridge and bandwidth multiplier on a validation split.
    Tune {
        #[arg(long)]
        train: PathBuf,
        /// Receives best-config.json, grid.csv and manifest.json.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated ridge values.
        #[arg(long, value_delimiter = ',', conflicts_with = "grid_default")]
        eta_grid: Option<Vec<f64>>,
        /// Comma-separated bandwidth multipliers.
        #[arg(long, value_delimiter = ',', conflicts_with = "grid_default")]
        sigma_mult_grid: Option<Vec<f64>>,
        /// Use the standard 5 x 5 grid, overriding any grid in --config.
        #[arg(long)]
        grid_default: bool,
        #[arg(long)]
        validation_fraction: Option<f64>,
    },
    /// Predict at query points (d or d+1 columns; an extra column is ignored).
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long, default_value = "predictions.csv")]
        out: PathBuf,
    },
    /// Analytic gradients at query points, d columns per row.
    Gradient {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long, default_value = "gradients.csv")]
        out: PathBuf,
    },
    /// Compare predictions with truth; both use their last column.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum GenCommand {
    /// Three-plateau 2D target on [-6, 30]^2 with a 0.2-spacing test grid.
    Synth2d {
        #[arg(long)]
        n_train: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Standard deviation of additive Gaussian noise on train responses.
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Shifted cosine-bells target on a rotated Fibonacci sphere lattice.
    Sphere {
        /// Lattice size before any thinning.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Thin the lattice towards the two bell centers.
        #[arg(long)]
        density_biased: bool,
        /// Uniform random test points.
        #[arg(long, default_value_t = 2000)]
        n_test: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelFlag {
    PuKrr,
    PuKrrPoly,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// JSON file with a full or partial fit configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Points per region.
    #[arg(long)]
    h: Option<usize>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long, value_enum)]
    model: Option<ModelFlag>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    sigma_mult: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ModelArgs {
    fn resolve(&self, manifest: &mut RunManifest) -> Result<FitConfig> {
        let mut config = match &self.config {
            Some(path) => {
                manifest.input(path)?;
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str::<FitConfig>(&text)?
            }
            None => FitConfig::default(),
        };
        if let Some(h) = self.h {
            config.h = h;
        }
        if let Some(d) = self.degree {
            config.degree = d;
        }
        if let Some(m) = self.model {
            config.model_kind = match m {
                ModelFlag::PuKrr => ModelKind::Krr,
                ModelFlag::PuKrrPoly => ModelKind::KrrPoly,
            };
        }
        if self.eta.is_some() {
            config.eta = self.eta;
        }
        if let Some(s) = self.sigma_mult {
            config.sigma_mult = s;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        Ok(config)
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_DATA
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(GenCommand::Synth2d {
            n_train,
            seed,
            noise,
            out_dir,
        }) => gen_synth2d(n_train, seed, noise, &out_dir),
        Command::Gen(GenCommand::Sphere {
            n,
            seed,
            density_biased,
            n_test,
            out_dir,
        }) => gen_sphere(n, seed, density_biased, n_test, &out_dir),
        Command::Fit { train, out, model } => fit(&train, &out, &model),
        Command::Tune {
            train,
            out_dir,
            model,
            eta_grid,
            sigma_mult_grid,
            grid_default,
            validation_fraction,
        } => {
            let mut manifest = RunManifest::new("tune");
            let mut config = model.resolve(&mut manifest)?;
            if grid_default {
                config.eta_grid = DEFAULT_ETA_GRID.to_vec();
                config.sigma_mult_grid = DEFAULT_SIGMA_MULT_GRID.to_vec();
            }
            if let Some(g) = eta_grid {
                config.eta_grid = g;
            }
            if let Some(g) = sigma_mult_grid {
                config.sigma_mult_grid = g;
            }
            if let Some(v) = validation_fraction {
                config.validation_fraction = v;
            }
            tune(&train, &out_dir, config, manifest)
        }
        Command::Predict { model, query, out } => predict(&model, &query, &out, false),
        Command::Gradient { model, query, out } => predict(&model, &query, &out, true),
        Command::Eval { pred, truth, out } => eval(&pred, &truth, &out),
    }
}

fn cloud_rows(cloud: &PointCloud) -> impl Iterator<Item = Vec<f64>> + '_ {
    cloud
        .points()
        .zip(cloud.responses())
        .map(|(p, &y)| p.iter().copied().chain([y]).collect())
}

fn feature_header(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|k| format!("{prefix}{k}")).collect()
}

fn gen_synth2d(n_train: usize, seed: u64, noise: Option<f64>, out_dir: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("gen synth2d");
    manifest.seed = Some(seed);
    manifest.config = Some(serde_json::json!({ "n_train": n_train, "noise": noise }));
    let train = gen2d(n_train, seed, noise)?;
    let grid = grid_test_2d();
    manifest.phase("generate");
    let header = ["x1", "x2", "y"];
    manifest.output(&out_dir.join("train.csv"), &csv_bytes(&header, cloud_rows(&train.cloud))?)?;
    manifest.output(&out_dir.join("grid-test.csv"), &csv_bytes(&header, cloud_rows(&grid.cloud))?)?;
    let grads = grid.gradients.expect("analytic target");
    manifest.output(
        &out_dir.join("grid-test-gradients.csv"),
        &csv_bytes(&["dy_dx1", "dy_dx2"], grads.chunks(2).map(<[f64]>::to_vec))?,
    )?;
    manifest.phase("write");
    manifest.finish(&out_dir.join("manifest.json"))
}

fn gen_sphere(n: usize, seed: u64, density_biased: bool, n_test: usize, out_dir: &Path) -> Result<()> {
    if n == 0 || n_test == 0 {
        return Err(Error::InvalidInput("--n and --n-test must be at least 1".into()));
    }
    let mut manifest = RunManifest::new("gen sphere");
    manifest.seed = Some(seed);
    manifest.config = Some(serde_json::json!({
        "n": n, "density_biased": density_biased, "n_test": n_test,
    }));
    let [p1, p2] = default_bell_centers();
    let mut pts = sphere_points(n, seed);
    if density_biased {
        let kept = density_sample(&pts, &p1, &p2, seed)?;
        pts = kept.iter().map(|&i| pts[i]).collect();
    }
    let train = shifted_bells(&pts, &p1, &p2)?;
    let qmax = pts
        .iter()
        .map(|x| cosine_bells(x, &p1, &p2))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    // test targets use the training shift so both sets share one function
    let test_pts = uniform_sphere_points(n_test, seed.wrapping_add(1));
    let mut test_rows = Vec::with_capacity(n_test);
    let mut test_grads = Vec::with_capacity(n_test);
    for x in &test_pts {
        let q = cosine_bells(x, &p1, &p2)?;
        test_rows.push(vec![x[0], x[1], x[2], qmax - q]);
        let g = pustitch::datagen::cosine_bells_grad(x, &p1, &p2)?;
        test_grads.push(g.iter().map(|v| -v).collect());
    }
    manifest.phase("generate");
    let header = ["x", "y", "z", "q_hat"];
    let grad_header = ["dq_dx", "dq_dy", "dq_dz"];
    manifest.output(&out_dir.join("train.csv"), &csv_bytes(&header, cloud_rows(&train.cloud))?)?;
    let grads = train.gradients.expect("analytic target");
    manifest.output(
        &out_dir.join("train-gradients.csv"),
        &csv_bytes(&grad_header, grads.chunks(3).map(<[f64]>::to_vec))?,
    )?;
    manifest.output(&out_dir.join("test.csv"), &csv_bytes(&header, test_rows)?)?;
    manifest.output(&out_dir.join("test-gradients.csv"), &csv_bytes(&grad_header, test_grads)?)?;
    manifest.phase("write");
    manifest.finish(&out_dir.join("manifest.json"))
}

fn load_training(path: &Path, manifest: &mut RunManifest) -> Result<PointCloud> {
    manifest.input(path)?;
    let table = read_csv(path)?;
    let cloud = table_cloud(&table)?;
    manifest.phase("read");
    Ok(cloud)
}

fn table_cloud(table: &Table) -> Result<PointCloud> {
    if table.columns < 2 {
        return Err(Error::Parse {
            line: 1,
            message: format!("need feature columns and a response column, found {} column", table.columns),
        });
    }
    let d = table.columns - 1;
    let mut coords = Vec::with_capacity(table.rows() * d);
    let mut y = Vec::with_capacity(table.rows());
    for i in 0..table.rows() {
        let row = table.row(i);
        coords.extend_from_slice(&row[..d]);
        y.push(row[d]);
    }
    PointCloud::new(d, coords, y)
}

fn fit(train: &Path, out: &Path, args: &ModelArgs) -> Result<()> {
    let mut manifest = RunManifest::new("fit");
    let config = args.resolve(&mut manifest)?;
    manifest.seed = Some(config.seed);
    manifest.config = Some(serde_json::to_value(&config)?);
    let cloud = load_training(train, &mut manifest)?;
    let model = StitchedModel::fit(&cloud, &config)?;
    manifest.phase("fit");
    let mut text = model.to_json()?;
    text.push('\n');
    manifest.output(out, text.as_bytes())?;
    manifest.phase("write");
    manifest.finish(&manifest_path_for(out))
}

fn tune(train: &Path, out_dir: &Path, config: FitConfig, mut manifest: RunManifest) -> Result<()> {
    manifest.seed = Some(config.seed);
    manifest.config = Some(serde_json::to_value(&config)?);
    let cloud = load_training(train, &mut manifest)?;
    let result = grid_search(&cloud, &config)?;
    manifest.phase("grid search");
    let mut best = serde_json::to_string_pretty(&result.best_config(&config))?;
    best.push('\n');
    manifest.output(&out_dir.join("best-config.json"), best.as_bytes())?;
    let rows = result.rows().map(|(eta, s, rmse)| vec![eta, s, rmse]);
    manifest.output(
        &out_dir.join("grid.csv"),
        &csv_bytes(&["eta", "sigma_mult", "validation_rmse"], rows)?,
    )?;
    manifest.phase("write");
    manifest.finish(&out_dir.join("manifest.json"))
}

/// Query coordinates from a table with `dim` or `dim + 1` columns.
fn query_points(table: &Table, dim: usize) -> Result<Vec<f64>> {
    if table.columns != dim && table.columns != dim + 1 {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: table.columns,
        });
    }
    let mut coords = Vec::with_capacity(table.rows() * dim);
    for i in 0..table.rows() {
        coords.extend_from_slice(&table.row(i)[..dim]);
    }
    Ok(coords)
}

fn predict(model_path: &Path, query: &Path, out: &Path, gradient: bool) -> Result<()> {
    let mut manifest = RunManifest::new(if gradient { "gradient" } else { "predict" });
    manifest.input(model_path)?;
    manifest.input(query)?;
    let model = StitchedModel::from_json(&std::fs::read_to_string(model_path)?)?;
    let table = read_csv(query)?;
    let dim = model.dim();
    let coords = query_points(&table, dim)?;
    manifest.phase("read");
    let bytes = if gradient {
        let header = feature_header("d_x", dim);
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        csv_bytes(&header, coords.chunks(dim).map(|q| model.gradient(q)))?
    } else {
        csv_bytes(&["prediction"], coords.chunks(dim).map(|q| vec![model.predict(q)]))?
    };
    manifest.phase("evaluate");
    manifest.output(out, &bytes)?;
    manifest.finish(&manifest_path_for(out))
}

fn last_column(table: &Table) -> Vec<f64> {
    (0..table.rows()).map(|i| table.row(i)[table.columns - 1]).collect()
}

fn eval(pred: &Path, truth: &Path, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("eval");
    manifest.input(pred)?;
    manifest.input(truth)?;
    let p = last_column(&read_csv(pred)?);
    let t = last_column(&read_csv(truth)?);
    let report = error_report(&t, &p)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    manifest.output(out, text.as_bytes())?;
    manifest.finish(&manifest_path_for(out))
}
