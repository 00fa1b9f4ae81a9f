use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use freqaug::{ConfigDoc, Sampling, ValueRange};

#[derive(Debug, Parser)]
#[command(name = "freqaug", version, about = "Frequency-domain filtering, augmentation and spectrum analytics for video clips")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply the configured filter to every clip (probability treated as 1).
    Filter(FilterCmd),
    /// Apply the augmentation stochastically and write a manifest.
    Augment(AugmentCmd),
    /// Per-clip sigma_t and low-frequency ratio, histogram and binning.
    Analyze(AnalyzeCmd),
    /// Log-amplitude spectrum images of every clip.
    RenderSpectrum(RenderCmd),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Tensor files, frame directories, or directories containing either.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Frames to sample per clip (enables strided sampling).
    #[arg(long = "frames", value_name = "T")]
    pub num_frames: Option<usize>,
    /// Gap between sampled frames.
    #[arg(long, default_value_t = 1, requires = "num_frames")]
    pub stride: usize,
    /// First sampled frame.
    #[arg(long, default_value_t = 0, requires = "num_frames")]
    pub start: usize,
    /// Range 8-bit frames are decoded to.
    #[arg(long, default_value = "unit", value_parser = parse_range)]
    pub value_range: ValueRange,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Report and skip failing clips instead of stopping.
    #[arg(long)]
    pub keep_going: bool,
}

impl InputArgs {
    pub fn sampling(&self) -> freqaug::Result<Option<Sampling>> {
        self.num_frames
            .map(|t| Sampling::new(t, self.stride, self.start))
            .transpose()
    }

    pub fn jobs(&self) -> usize {
        self.jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }
}

fn parse_range(s: &str) -> Result<ValueRange, String> {
    s.parse().map_err(|e: freqaug::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Flat key = value config file; flags below override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Filter kind: identity, ideal, random_temporal, gaussian_hpf, amplitude_mix.
    #[arg(long)]
    pub filter: Option<String>,
    /// Named configuration: freqaug_t or freqaug_st.
    #[arg(long)]
    pub preset: Option<String>,
    /// Application probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// Temporal cutoff frequency in (0, 0.5].
    #[arg(long)]
    pub fco_t: Option<f64>,
    /// Spatial cutoff frequency in (0, 0.5].
    #[arg(long)]
    pub fco_s: Option<f64>,
    /// Band for both parts: hpf or lpf.
    #[arg(long)]
    pub band: Option<String>,
    #[arg(long)]
    pub band_t: Option<String>,
    #[arg(long)]
    pub band_s: Option<String>,
    /// Random temporal band mask with parameter M.
    #[arg(long = "random-mask-M", value_name = "M")]
    pub random_mask_m: Option<usize>,
    /// Gaussian high-pass as k,sigma,dims (dims 3d or 2d).
    #[arg(long, value_name = "K,SIGMA,DIMS")]
    pub gaussian: Option<String>,
    /// Amplitude Mix with weight drawn from U(0, eta).
    #[arg(long)]
    pub amplitude_mix_eta: Option<f64>,
    /// Seed; required whenever the run draws random numbers.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl FilterArgs {
    pub fn overrides(&self) -> ConfigDoc {
        ConfigDoc {
            filter: self.filter.clone(),
            preset: self.preset.clone(),
            p: self.p,
            seed: self.seed,
            band: self.band.clone(),
            band_t: self.band_t.clone(),
            band_s: self.band_s.clone(),
            fco_t: self.fco_t,
            fco_s: self.fco_s,
            random_mask_m: self.random_mask_m,
            gaussian: self.gaussian.clone(),
            amplitude_mix_eta: self.amplitude_mix_eta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// Binary tensor files (lossless).
    Tensor,
    /// 8-bit frame images; unit or raw_u8 clips only.
    Frames,
    /// 8-bit frames after min-max rescaling of each clip.
    Display,
}

impl From<OutputFormat> for freqaug::SaveFormat {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Tensor => freqaug::SaveFormat::TensorFile,
            OutputFormat::Frames => freqaug::SaveFormat::FrameDir,
            OutputFormat::Display => freqaug::SaveFormat::DisplayRescaled,
        }
    }
}

#[derive(Debug, Args)]
pub struct FilterCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[arg(long, value_enum, default_value = "tensor")]
    pub format: OutputFormat,
    /// Also write spectrum renderings of every output clip.
    #[arg(long)]
    pub render: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Views {
    Both,
    View1,
    View2,
}

#[derive(Debug, Args)]
pub struct AugmentCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[arg(long, value_enum, default_value = "tensor")]
    pub format: OutputFormat,
    /// Produce two independently augmented views of every clip.
    #[arg(long)]
    pub two_view: bool,
    /// Views that receive the augmentation in two-view mode.
    #[arg(long, value_enum, default_value = "both", requires = "two_view")]
    pub views: Views,
}

#[derive(Debug, Args)]
pub struct AnalyzeCmd {
    #[command(flatten)]
    pub input: InputArgs,
    /// Equal-count groups by low-frequency ratio.
    #[arg(long, default_value_t = 2)]
    pub n_bins: usize,
    /// Clips with sigma_t below this value form the "below" group.
    #[arg(long, default_value_t = freqaug::analytics::DEFAULT_SIGMA_T_THRESHOLD)]
    pub sigma_t_threshold: f64,
    /// Bin width of the sigma_t histogram.
    #[arg(long, default_value_t = 0.01)]
    pub hist_width: f64,
}

#[derive(Debug, Args)]
pub struct RenderCmd {
    #[command(flatten)]
    pub input: InputArgs,
    /// Temporal frequency bins to render, comma separated; all by default.
    #[arg(long, value_delimiter = ',')]
    pub slices: Option<Vec<usize>>,
}
