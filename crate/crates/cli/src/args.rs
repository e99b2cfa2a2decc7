use std::path::PathBuf;

use anysize::train::parse_size;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "anysize", version, about = "Variable-resolution latent GAN toolkit")]
pub struct Cli {
    /// Worker threads; 1 gives bitwise-reproducible runs. Falls back to
    /// ANYSIZE_THREADS, then to the number of CPUs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Plain-text `key=value` file; keys are flag names of the subcommand.
    /// Flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resolution census of an image directory.
    Census(CensusArgs),
    /// Downsample a source to a reference's size with every method and score it.
    Audit(AuditArgs),
    /// Write the synthetic ellipse corpus.
    MakeToy(MakeToyArgs),
    /// Train generator and discriminator on an image directory.
    Train(TrainArgs),
    /// Sample images from a generator.
    Generate(GenerateArgs),
    /// Inception score of generated samples.
    Evaluate(EvaluateArgs),
    /// Finite-difference check of every layer.
    Gradcheck(GradcheckArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Census(_) => "census",
            Command::Audit(_) => "audit",
            Command::MakeToy(_) => "make-toy",
            Command::Train(_) => "train",
            Command::Generate(_) => "generate",
            Command::Evaluate(_) => "evaluate",
            Command::Gradcheck(_) => "gradcheck",
        }
    }
}

#[derive(Debug, Args)]
pub struct CensusArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// CSV file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MakeToyArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 32)]
    pub min_size: u32,
    #[arg(long, default_value_t = 64)]
    pub max_size: u32,
    #[arg(long, default_value_t = 8)]
    pub size_step: u32,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Continue from a checkpoint directory. Model settings come from the
    /// checkpoint; only the epoch count and checkpoint interval may change.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_size: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    #[arg(long)]
    pub z_dim: Option<usize>,
    /// Generator base grid, HxW.
    #[arg(long)]
    pub base: Option<String>,
    /// Five comma-separated generator stage widths.
    #[arg(long)]
    pub gen_channels: Option<String>,
    #[arg(long)]
    pub resize_mode: Option<String>,
    /// Comma-separated discriminator convolution widths.
    #[arg(long)]
    pub disc_channels: Option<String>,
    #[arg(long)]
    pub disc_min_input: Option<String>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenerateMode {
    /// Fresh latent and a random size per image.
    Random,
    /// One latent rendered at every size in --sizes.
    FixedZ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierKind {
    /// Always the uniform distribution.
    Uniform,
    /// Small classifier trained on a toy corpus (--toy-data).
    Toy,
}

/// `HxW,HxW,..` as given to `--sizes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeList(pub Vec<(usize, usize)>);

pub fn parse_sizes(s: &str) -> Result<SizeList, String> {
    let sizes = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_size(p).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    if sizes.is_empty() {
        return Err("no sizes given".into());
    }
    Ok(SizeList(sizes))
}

#[derive(Debug, Args)]
pub struct GeneratorSource {
    /// Checkpoint directory. Without it a freshly initialized generator is used.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Smallest side for random sizes.
    #[arg(long, default_value_t = 32)]
    pub min_size: usize,
    /// Largest side for random sizes.
    #[arg(long, default_value_t = 128)]
    pub max_size: usize,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = GenerateMode::Random)]
    pub mode: GenerateMode,
    /// Images to draw in random mode.
    #[arg(long, default_value_t = 8)]
    pub count: usize,
    /// Comma-separated HxW list for fixed-z mode.
    #[arg(long, value_parser = parse_sizes)]
    pub sizes: Option<SizeList>,
    #[command(flatten)]
    pub source: GeneratorSource,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ClassifierKind::Toy)]
    pub classifier: ClassifierKind,
    /// Toy corpus used to train the toy classifier.
    #[arg(long)]
    pub toy_data: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 10)]
    pub splits: usize,
    #[command(flatten)]
    pub source: GeneratorSource,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Random cases per layer.
    #[arg(long, default_value_t = 20)]
    pub cases: usize,
    /// Largest acceptable relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optional directory for gradcheck.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
