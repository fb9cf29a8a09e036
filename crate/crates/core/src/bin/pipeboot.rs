use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use pipeboot::bootstrap::{impute_labels, run_experiment, BootstrapError, CrfDenoiser, ExperimentConfig};
use pipeboot::data::{add_gaussian_noise, load_pgm, save_pgm, synth_shapes, Dataset, DatasetRole, LabeledExample, Target};
use pipeboot::graphcut::{denoise_with, CrfParams, MoveAlgorithm};
use pipeboot::metrics::{parse_report, plot_svg, ssim, MetricName, SsimConfig};
use pipeboot::nn::checkpoint::save_checkpoint;
use pipeboot::nn::{build_skip_autoencoder, train, LossKind, SgdConfig};
use pipeboot::selftest::{run_selftest, Faults};
use pipeboot::Rng;

#[derive(Parser)]
#[command(name = "pipeboot", version, about = "Bootstrap neural surrogates from a graph-cut denoising pipeline")]
struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for generated files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write clean and noisy synthetic PGM images plus a manifest.
    SynthData {
        #[arg(long, default_value_t = 16)]
        count: usize,
        #[arg(long, default_value_t = 32)]
        size: usize,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value_t = 20.0)]
        sigma: f64,
        #[arg(long, value_enum, default_value_t = Noise::StdDev)]
        noise_model: Noise,
    },
    /// Denoise one PGM with the graph-cut CRF pipeline.
    Denoise {
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Clean reference; prints `ssim=<value>`.
        #[arg(long)]
        clean: Option<PathBuf>,
        #[command(flatten)]
        crf: CrfArgs,
    },
    /// Label every noisy image of a manifest with the pipeline.
    Label {
        manifest: PathBuf,
        #[command(flatten)]
        crf: CrfArgs,
    },
    /// Train a skip autoencoder on manifest pairs and save a checkpoint.
    Train {
        manifest: PathBuf,
        /// Role of the target rows paired with the noisy inputs.
        #[arg(long, default_value = "imputed")]
        target_role: String,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 16)]
        channels: usize,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 0.03)]
        learning_rate: f64,
        #[arg(long, default_value_t = 1)]
        batch_size: usize,
    },
    /// Run the experiment or ratio sweep described by a JSON config.
    Sweep {
        config: PathBuf,
        /// Also write a line plot of the results.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Re-sort a metrics CSV and optionally plot it.
    Report {
        input: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, default_value = "ssim")]
        metric: String,
    },
    /// Run the embedded oracle checks.
    Selftest {
        #[arg(long, hide = true)]
        corrupt_ssim: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Noise {
    StdDev,
    Variance,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Expansion,
    Swap,
}

#[derive(clap::Args)]
struct CrfArgs {
    #[arg(long, default_value_t = 32)]
    labels: usize,
    #[arg(long, default_value_t = 16.0)]
    lambda: f64,
    #[arg(long, default_value_t = 32.0)]
    smooth_trunc: f64,
    #[arg(long)]
    data_trunc: Option<f64>,
    #[arg(long, value_enum, default_value_t = Algorithm::Expansion)]
    algorithm: Algorithm,
}

impl CrfArgs {
    fn denoiser(&self) -> CrfDenoiser {
        CrfDenoiser {
            params: CrfParams::uniform(self.labels, self.lambda, self.smooth_trunc, self.data_trunc),
            algorithm: match self.algorithm {
                Algorithm::Expansion => MoveAlgorithm::Expansion,
                Algorithm::Swap => MoveAlgorithm::Swap,
            },
        }
    }
}

enum Failure {
    Runtime(String),
    Config(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
    {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn out_dir(cli: &Cli) -> PathBuf {
    match &cli.out_dir {
        Some(d) => d.clone(),
        None => Cli::command()
            .error(clap::error::ErrorKind::MissingRequiredArgument, "--out-dir <OUT_DIR> is required")
            .exit(),
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::SynthData { count, size, levels, sigma, noise_model } => {
            let dir = out_dir(&cli);
            create_dir(&dir)?;
            let clean = synth_shapes(*count, *size, *levels, &mut Rng::child(seed, 1))?;
            let std = match noise_model {
                Noise::StdDev => *sigma,
                Noise::Variance => sigma.sqrt(),
            };
            let mut noise_rng = Rng::child(seed, 2);
            let mut rows = Vec::with_capacity(2 * count);
            for (i, img) in clean.iter().enumerate() {
                let noisy = add_gaussian_noise(img, std, &mut noise_rng)?;
                let (c, n) = (format!("clean_{i:04}.pgm"), format!("noisy_{i:04}.pgm"));
                save_pgm(dir.join(&c), img)?;
                save_pgm(dir.join(&n), &noisy)?;
                rows.push((c, "clean"));
                rows.push((n, "noisy"));
            }
            write_manifest(&dir.join("manifest.csv"), &rows)?;
            println!("wrote {} images to {}", 2 * count, dir.display());
        }
        Command::Denoise { input, output, clean, crf } => {
            let image = load_pgm(input)?;
            let d = crf.denoiser();
            let out = denoise_with(&image, &d.params, d.algorithm)?;
            if let Some(path) = output {
                save_pgm(path, &out.image)?;
            }
            println!("energy={}", out.energy.total);
            println!("ops={}", out.ops);
            if let Some(path) = clean {
                println!("ssim={}", ssim(&out.image, &load_pgm(path)?, &SsimConfig::default())?);
            }
        }
        Command::Label { manifest, crf } => {
            let dir = out_dir(&cli);
            create_dir(&dir)?;
            let base = manifest.parent().unwrap_or(Path::new("."));
            let noisy: Vec<PathBuf> = read_manifest(manifest)?
                .into_iter()
                .filter(|(_, role)| role == "noisy")
                .map(|(p, _)| base.join(p))
                .collect();
            let inputs = noisy.iter().map(load_pgm).collect::<Result<Vec<_>, _>>()?;
            let labeled = impute_labels(&crf.denoiser(), &Dataset::unlabeled(inputs))?;
            let mut rows = Vec::new();
            for (i, (ex, src)) in labeled.dataset.examples().iter().zip(&noisy).enumerate() {
                let name = format!("imputed_{i:04}.pgm");
                save_pgm(dir.join(&name), ex.target().and_then(Target::as_image).expect("image target"))?;
                rows.push((absolute(src), "noisy"));
                rows.push((name, "imputed"));
            }
            write_manifest(&dir.join("labels.csv"), &rows)?;
            println!("labeled {} images, ops={}", noisy.len(), labeled.ops);
        }
        Command::Train { manifest, target_role, depth, channels, epochs, learning_rate, batch_size } => {
            let dir = out_dir(&cli);
            create_dir(&dir)?;
            let base = manifest.parent().unwrap_or(Path::new("."));
            let rows = read_manifest(manifest)?;
            let pick = |role: &str| -> Vec<PathBuf> {
                rows.iter().filter(|(_, r)| r == role).map(|(p, _)| base.join(p)).collect()
            };
            let (inputs, targets) = (pick("noisy"), pick(target_role));
            if inputs.len() != targets.len() || inputs.is_empty() {
                return Err(Failure::Runtime(format!(
                    "{}: {} noisy rows but {} {target_role} rows",
                    manifest.display(),
                    inputs.len(),
                    targets.len()
                )));
            }
            let scale = |p: &PathBuf| -> Result<pipeboot::Tensor, Failure> {
                let t = load_pgm(p)?;
                let (h, w) = (t.shape()[0], t.shape()[1]);
                Ok(t.map(|v| v / 255.0).reshape(&[1, h, w])?)
            };
            let mut examples = Vec::with_capacity(inputs.len());
            for (i, t) in inputs.iter().zip(&targets) {
                examples.push(LabeledExample::ground_truth(scale(i)?, Target::Image(scale(t)?)));
            }
            let data = Dataset::new(DatasetRole::GroundTruth, examples)?;
            let mut net = build_skip_autoencoder(*depth, *channels, 1, &mut Rng::child(seed, 0))?;
            let cfg = SgdConfig {
                learning_rate: *learning_rate,
                batch_size: *batch_size,
                epochs: *epochs,
                seed,
                ..SgdConfig::default()
            };
            let log = train(&mut net, &data, LossKind::Mse, &cfg)?;
            let path = dir.join(format!("nn-skip-{depth}.pbnn"));
            save_checkpoint(&path, &net)?;
            println!("final_loss={}", log.final_loss());
            println!("checkpoint={}", path.display());
        }
        Command::Sweep { config, svg } => {
            let mut cfg = ExperimentConfig::load(config).map_err(|e| match e {
                BootstrapError::Config(msg) => Failure::Config(format!("{}: {msg}", config.display())),
                other => Failure::Runtime(other.to_string()),
            })?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let result = run_experiment(&cfg)?;
            let dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            create_dir(&dir)?;
            let csv_path = dir.join(cfg.output.clone().unwrap_or_else(|| PathBuf::from("metrics.csv")));
            write_file(&csv_path, &result.to_csv())?;
            println!("csv={}", csv_path.display());
            if let Some(svg_path) = svg {
                let metric = result.rows.first().map_or(MetricName::Ssim, |r| r.metric);
                write_file(svg_path, &plot_svg(&result.rows, metric, &format!("{:?} {:?}", cfg.task, cfg.mode)))?;
                println!("svg={}", svg_path.display());
            }
        }
        Command::Report { input, svg, metric } => {
            let text = fs::read_to_string(input).map_err(|e| Failure::Runtime(format!("{}: {e}", input.display())))?;
            let rows = parse_report(&text).map_err(|e| Failure::Runtime(format!("{}: {e}", input.display())))?;
            print!("{}", pipeboot::metrics::flops_report(&rows));
            if let Some(svg_path) = svg {
                let metric: MetricName = metric.parse()?;
                write_file(svg_path, &plot_svg(&rows, metric, &input.display().to_string()))?;
            }
        }
        Command::Selftest { corrupt_ssim } => {
            let start = std::time::Instant::now();
            let results = run_selftest(seed, Faults { corrupt_ssim: *corrupt_ssim });
            for r in &results {
                println!("{r}");
            }
            if start.elapsed().as_secs() >= 60 {
                eprintln!("warning: selftest took {:.1?}", start.elapsed());
            }
            let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
            if !failed.is_empty() {
                return Err(Failure::Runtime(format!("failed checks: {}", failed.join(", "))));
            }
        }
    }
    Ok(())
}

fn absolute(p: &Path) -> String {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf()).display().to_string()
}

fn write_manifest(path: &Path, rows: &[(String, &str)]) -> Result<(), Failure> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    w.write_record(["path", "role"])?;
    for (p, role) in rows {
        w.write_record([p.as_str(), role])?;
    }
    w.flush().map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn read_manifest(path: &Path) -> Result<Vec<(String, String)>, Failure> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
        rows.push((rec.get(0).unwrap_or_default().to_string(), rec.get(1).unwrap_or_default().to_string()));
    }
    Ok(rows)
}
