//! Command-line frontend: train, evaluate, denoise single images, and
//! inspect architectures.
//!
//! Exit codes: 0 success, 2 usage/input error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use mnist_dae::checkpoint;
use mnist_dae::data::{add_gaussian_noise, Dataset, Split};
use mnist_dae::error::{Error, Result};
use mnist_dae::loss::LossKind;
use mnist_dae::model::{build, Arch, Model, IMAGE_SIDE};
use mnist_dae::optim::AdamConfig;
use mnist_dae::pgm;
use mnist_dae::tensor::Tensor;
use mnist_dae::trainer::{evaluate, fit, validation_noise_rng, TrainConfig};
use mnist_dae::Rng;

#[derive(Parser)]
#[command(
    name = "mnist-dae",
    version,
    about = "Train and run denoising autoencoders on MNIST"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Report validation loss of a checkpoint.
    Eval(EvalArgs),
    /// Export a clean | noisy | denoised comparison panel as PGM.
    Denoise(DenoiseArgs),
    /// Print per-layer shapes and parameter counts.
    Inspect(InspectArgs),
}

fn parse_arch(s: &str) -> std::result::Result<Arch, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_loss(s: &str) -> std::result::Result<LossKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct DataDirArg {
    /// Directory holding the MNIST IDX files (or set MNIST_DIR).
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

impl DataDirArg {
    fn resolve(&self) -> Result<PathBuf> {
        if let Some(dir) = &self.data_dir {
            return Ok(dir.clone());
        }
        if let Ok(dir) = std::env::var("MNIST_DIR") {
            return Ok(PathBuf::from(dir));
        }
        Err(Error::Argument(
            "no data directory: pass --data-dir or set MNIST_DIR".into(),
        ))
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Architecture to train: dense or conv.
    #[arg(long, value_parser = parse_arch)]
    model: Arch,
    #[command(flatten)]
    data: DataDirArg,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 128)]
    batch_size: usize,
    /// Gaussian corruption strength.
    #[arg(long, default_value_t = 0.5)]
    noise_factor: f32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Training objective: bce or mse.
    #[arg(long, value_parser = parse_loss, default_value = "bce")]
    loss: LossKind,
    /// Checkpoint path (default: <model>.ckpt).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-epoch reports as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Draw the corruption once and reuse it every epoch.
    #[arg(long)]
    freeze_noise: bool,
    /// Train on only the first N images.
    #[arg(long)]
    limit: Option<usize>,
    /// Validate on only the first N test images.
    #[arg(long)]
    val_limit: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    beta2: f64,
    #[arg(long, default_value_t = 1e-7)]
    eps: f64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    data: DataDirArg,
    #[arg(long, default_value_t = 0.5)]
    noise_factor: f32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_parser = parse_loss, default_value = "bce")]
    loss: LossKind,
    /// Evaluate on only the first N test images.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args)]
#[command(group = ArgGroup::new("source").required(true).args(["index", "input"]))]
struct DenoiseArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    data: DataDirArg,
    /// Index of a test-set image to denoise.
    #[arg(long)]
    index: Option<usize>,
    /// A 28×28 PGM file to denoise instead of a test-set image.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output PGM path for the clean | noisy | denoised panel.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    noise_factor: f32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Draw 2-pixel separators between the panels.
    #[arg(long)]
    separator: bool,
}

#[derive(Args)]
#[command(group = ArgGroup::new("target").required(true).args(["model", "checkpoint"]))]
struct InspectArgs {
    /// Architecture to describe: dense or conv.
    #[arg(long, value_parser = parse_arch)]
    model: Option<Arch>,
    /// Describe the model stored in a checkpoint instead.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Denoise(args) => cmd_denoise(args),
        Command::Inspect(args) => cmd_inspect(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::NonFiniteLoss { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let dir = args.data.resolve()?;
    let mut train_set = Dataset::from_dir(&dir, Split::Train)?;
    if let Some(limit) = args.limit {
        train_set = train_set.limit(limit)?;
    }
    let mut val_set = Dataset::from_dir(&dir, Split::Test)?;
    if let Some(limit) = args.val_limit {
        val_set = val_set.limit(limit)?;
    }

    let cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        loss: args.loss,
        noise_factor: args.noise_factor,
        seed: args.seed,
        freeze_noise: args.freeze_noise,
        adam: AdamConfig {
            lr: args.lr,
            beta1: args.beta1,
            beta2: args.beta2,
            eps: args.eps,
        },
    };

    println!(
        "training {} autoencoder: {} train / {} val images, {} epochs, batch {}, loss {}, noise {}, seed {}",
        args.model.name(),
        train_set.len(),
        val_set.len(),
        cfg.epochs,
        cfg.batch_size,
        cfg.loss.name(),
        cfg.noise_factor,
        cfg.seed
    );

    let mut model = build::<f32>(args.model, &mut Rng::new(args.seed));
    let reports = fit(&mut model, &train_set, &val_set, &cfg, |r| {
        println!(
            "epoch {}/{}  train_loss {:.6}  val_loss {:.6}  {:.1}s",
            r.epoch, cfg.epochs, r.train_loss, r.val_loss, r.seconds
        );
    })?;

    if let Some(csv_path) = &args.csv {
        let mut csv = String::from("epoch,train_loss,val_loss\n");
        for r in &reports {
            csv.push_str(&format!("{},{:.6},{:.6}\n", r.epoch, r.train_loss, r.val_loss));
        }
        std::fs::write(csv_path, csv)?;
    }

    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}.ckpt", args.model.name())));
    checkpoint::save(&mut model, &out)?;
    println!("checkpoint written to {}", out.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let mut model = checkpoint::load(&args.checkpoint)?;
    let dir = args.data.resolve()?;
    let mut test_set = Dataset::from_dir(&dir, Split::Test)?;
    if let Some(limit) = args.limit {
        test_set = test_set.limit(limit)?;
    }
    let mut rng = validation_noise_rng(args.seed);
    let pairs = add_gaussian_noise(test_set.images(), args.noise_factor, &mut rng)?;
    let loss = evaluate(&mut model, &pairs, args.loss)?;
    println!("val_loss {loss:.4}");
    Ok(())
}

/// Reads a 28×28 PGM as a unit-interval image tensor.
fn load_pgm_image(path: &Path) -> Result<Tensor<f32>> {
    let (w, h, pixels) = pgm::read(path)?;
    if w != IMAGE_SIDE || h != IMAGE_SIDE {
        return Err(Error::Argument(format!(
            "input image must be 28x28, got {w}x{h}"
        )));
    }
    let data = pixels.iter().map(|&b| f32::from(b) / 255.0).collect();
    Tensor::from_vec(&[IMAGE_SIDE, IMAGE_SIDE, 1], data)
}

fn cmd_denoise(args: DenoiseArgs) -> Result<()> {
    let mut model = checkpoint::load(&args.checkpoint)?;

    let clean = if let Some(input) = &args.input {
        load_pgm_image(input)?
    } else {
        let index = args.index.expect("clap enforces index xor input");
        let test_set = Dataset::from_dir(&args.data.resolve()?, Split::Test)?;
        if index >= test_set.len() {
            return Err(Error::Argument(format!(
                "index {index} out of range, test set has {} images",
                test_set.len()
            )));
        }
        let per = IMAGE_SIDE * IMAGE_SIDE;
        Tensor::from_vec(
            &[IMAGE_SIDE, IMAGE_SIDE, 1],
            test_set.images().data()[index * per..(index + 1) * per].to_vec(),
        )?
    };

    let mut rng = Rng::new(args.seed);
    let pair = add_gaussian_noise(&clean, args.noise_factor, &mut rng)?;
    let batch = pair.noisy.reshape(&[1, IMAGE_SIDE, IMAGE_SIDE, 1])?;
    let denoised = model
        .forward(&batch)?
        .into_reshaped(&[IMAGE_SIDE, IMAGE_SIDE, 1])?;

    let (w, h, pixels) = pgm::horizontal_panel(&[&clean, &pair.noisy, &denoised], args.separator)?;
    pgm::write(&args.out, w, h, &pixels)?;
    println!("panel written to {} ({}x{})", args.out.display(), w, h);
    Ok(())
}

fn cmd_inspect(args: InspectArgs) -> Result<()> {
    let model: Model<f32> = match (&args.model, &args.checkpoint) {
        (Some(arch), None) => build(*arch, &mut Rng::new(0)),
        (None, Some(path)) => checkpoint::load(path)?,
        _ => unreachable!("clap enforces model xor checkpoint"),
    };

    let arch_name = model.arch().map_or("custom", Arch::name);
    let input_dims = dims_string(model.input_shape());
    println!("arch {arch_name}  input {input_dims}");
    for row in model.summary()? {
        println!(
            "layer {:>2}  {:<24} output {:<12} params {}",
            row.index,
            row.describe,
            dims_string(&row.output_shape),
            row.param_count
        );
    }
    if let (Some(boundary), Ok(latent)) = (model.latent_layer(), model.latent_shape()) {
        println!("latent {} (after layer {boundary})", dims_string(&latent));
    }
    println!("total_params {}", model.param_count());
    Ok(())
}

fn dims_string(shape: &[usize]) -> String {
    shape
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("x")
}
