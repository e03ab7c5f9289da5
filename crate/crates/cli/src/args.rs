use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use radial_attention::attention::DecayMode;
use radial_attention::presets::preset;
use radial_attention::{GridShape, PatternKind, PatternSpec};

use crate::Failure;

#[derive(Debug, Parser)]
#[command(name = "radial", version, about = "Radial sparse attention masks: generation, statistics and checks")]
pub struct Cli {
    /// Indented JSON and aligned tables instead of single-line output.
    #[arg(long, global = true)]
    pub pretty: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a block layout and write it as a .ramk file.
    Mask(MaskArgs),
    /// Kept blocks, sparsity and FLOPs of a layout.
    Stats(StatsArgs),
    /// Run the complexity, error-bound and oracle checks.
    Verify(VerifyArgs),
    /// Compare patterns at matched budgets on a synthetic instance (CSV).
    Compare(CompareArgs),
    /// Decay curve of a synthetic instance as x,y CSV.
    Curves(CurvesArgs),
    /// Fit y = exp(-a x + b) to x,y CSV.
    Fit(FitArgs),
    /// Time dense against masked reference attention.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Latent frames f.
    #[arg(long, conflicts_with = "preset")]
    pub frames: Option<usize>,

    /// Tokens per frame s.
    #[arg(long, conflicts_with = "preset")]
    pub tokens: Option<usize>,

    /// Named model configuration (see presets.toml).
    #[arg(long)]
    pub preset: Option<String>,

    /// Block size B [default: 128].
    #[arg(long)]
    pub block: Option<usize>,
}

impl GridArgs {
    pub fn resolve(&self) -> Result<(GridShape, usize), Failure> {
        let (shape, default_block) = match &self.preset {
            Some(name) => {
                let p = preset(name)?;
                (p.shape(), p.block_size())
            }
            None => {
                let f = self.frames.ok_or_else(|| usage("--frames is required (or use --preset)"))?;
                let s = self.tokens.ok_or_else(|| usage("--tokens is required (or use --preset)"))?;
                (GridShape::new(f, s)?, radial_attention::blocksparse::DEFAULT_BLOCK_SIZE)
            }
        };
        let block = self.block.unwrap_or(default_block);
        if block == 0 {
            return Err(usage("--block must be at least 1"));
        }
        Ok((shape, block))
    }
}

#[derive(Debug, Args)]
pub struct PatternArgs {
    /// radial, dense, spatial, temporal, sta, power or harmonic.
    #[arg(long, default_value = "radial")]
    pub pattern: String,

    /// Attend to all of frame 0 (default for radial).
    #[arg(long, overrides_with = "no_sink")]
    pub sink: bool,

    /// Drop the frame-0 sink (default for every other pattern).
    #[arg(long, overrides_with = "sink")]
    pub no_sink: bool,

    /// Frame distance kept by spatial and sta [defaults: 1, 2].
    #[arg(long)]
    pub temporal_window: Option<usize>,

    /// Token offset kept by temporal and sta [defaults: 0, 2].
    #[arg(long)]
    pub spatial_window: Option<usize>,
}

impl PatternArgs {
    pub fn resolve(&self) -> Result<PatternSpec, Failure> {
        let kind: PatternKind = self.pattern.parse()?;
        let mut spec = PatternSpec::with_default_windows(kind);
        if let Some(t) = self.temporal_window {
            if spec.temporal_window.is_none() {
                return Err(usage(format!("--temporal-window does not apply to `{kind}`")));
            }
            spec.temporal_window = Some(t);
        }
        if let Some(x) = self.spatial_window {
            if spec.spatial_window.is_none() {
                return Err(usage(format!("--spatial-window does not apply to `{kind}`")));
            }
            spec.spatial_window = Some(x);
        }
        if self.sink {
            spec.sink = true;
        } else if self.no_sink {
            spec.sink = false;
        }
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    #[command(flatten)]
    pub grid: GridArgs,

    #[command(flatten)]
    pub pattern: PatternArgs,

    /// Output .ramk file.
    #[arg(long)]
    pub out: PathBuf,

    /// Also write the block grid as a binary PGM image.
    #[arg(long)]
    pub pgm: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Read the layout from a .ramk file instead of building it.
    #[arg(long, conflicts_with_all = ["frames", "tokens", "preset", "block", "pattern", "sink", "no_sink", "temporal_window", "spatial_window"])]
    pub mask: Option<PathBuf>,

    #[command(flatten)]
    pub grid: GridArgs,

    #[command(flatten)]
    pub pattern: PatternArgs,

    /// Head dimension for FLOPs.
    #[arg(long, default_value_t = 128)]
    pub head_dim: usize,

    /// Attention heads for FLOPs.
    #[arg(long, default_value_t = 1)]
    pub heads: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Region and headline complexity bounds [default shape: 512 x 64].
    #[arg(long)]
    pub complexity: bool,

    /// Error bound on random decay rows [default shape: 64 x 16].
    #[arg(long)]
    pub error_bound: bool,

    /// Exhaustive comparison with the brute-force mask.
    #[arg(long)]
    pub oracle: bool,

    /// Latent frames for --complexity and --error-bound.
    #[arg(long)]
    pub frames: Option<usize>,

    /// Tokens per frame for --complexity and --error-bound.
    #[arg(long)]
    pub tokens: Option<usize>,

    #[arg(long, default_value_t = 1000)]
    pub trials: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 0.1)]
    pub alpha_min: f64,

    #[arg(long, default_value_t = 2.0)]
    pub alpha_max: f64,

    #[arg(long, default_value_t = 0.1)]
    pub beta_min: f64,

    #[arg(long, default_value_t = 2.0)]
    pub beta_max: f64,

    #[arg(long, default_value_t = 1.0)]
    pub c_rel: f64,

    /// Largest f swept by --oracle.
    #[arg(long, default_value_t = 12)]
    pub max_frames: usize,

    /// Largest s swept by --oracle.
    #[arg(long, default_value_t = 12)]
    pub max_tokens: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    /// Every score on the decay envelope.
    WorstCase,
    /// Envelope times uniform(0, 1] noise.
    Random,
}

impl From<ModeArg> for DecayMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::WorstCase => DecayMode::WorstCase,
            ModeArg::Random => DecayMode::Random,
        }
    }
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,

    #[arg(long, default_value_t = 1.0)]
    pub c_rel: f64,

    #[arg(long, value_enum, default_value_t = ModeArg::Random)]
    pub mode: ModeArg,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub grid: GridArgs,

    /// Comma-separated pattern names; windows of spatial, temporal and sta
    /// are matched to the radial budget.
    #[arg(long, value_delimiter = ',', default_value = "radial,sta,spatial,temporal,dense")]
    pub patterns: Vec<String>,

    /// Leave the frame-0 sink off the baselines.
    #[arg(long)]
    pub no_baseline_sink: bool,

    #[command(flatten)]
    pub decay: DecayArgs,

    #[arg(long, default_value_t = 16)]
    pub head_dim: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Axis {
    Temporal,
    Spatial,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[arg(long)]
    pub frames: usize,

    #[arg(long)]
    pub tokens: usize,

    #[arg(long, value_enum, default_value_t = Axis::Temporal)]
    pub axis: Axis,

    #[command(flatten)]
    pub decay: DecayArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV of x,y rows with an optional header; `-` reads standard input.
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub grid: GridArgs,

    #[command(flatten)]
    pub pattern: PatternArgs,

    #[arg(long, default_value_t = 64)]
    pub head_dim: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Timed runs per kernel; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
}

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}
