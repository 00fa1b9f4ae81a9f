//! The stochastic frequency augmentation operator.
//!
//! A draw `r ~ U(0, 1)` is taken from the caller's stream for every view; the
//! filter runs only when `r < p`. Filter-specific randomness (random band,
//! mixing weight) is drawn afterwards from the same stream, so one stream
//! fully determines an outcome.
//!
//! Stream derivation is part of the public contract:
//! * batch item `i` uses `ChaCha8Rng::seed_from_u64(seed ^ i)`
//!   ([`stream_for_index`]);
//! * a named clip uses `ChaCha8Rng::seed_from_u64(seed ^ clip_key(id))`, where
//!   `clip_key` is the first 8 bytes (little-endian) of SHA-256 of the id
//!   ([`stream_for_clip`]).

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::baseline::{self, AmplitudeMixSpec, GaussianHpfSpec};
use crate::dft::{AxisSet, DftEngine};
use crate::error::{Error, Result};
use crate::filters::{
    self, AxisFilter, Band, FilterSpec, RandomBand, RandomMaskSpec,
};
use crate::tensor::{apply_mask, FilterMask, GridShape, MaskKind, Sample, VideoClip};

/// Random stream consumed by augmentation.
pub type AugRng = ChaCha8Rng;

pub fn stream_from_seed(seed: u64) -> AugRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_for_index(seed: u64, index: u64) -> AugRng {
    ChaCha8Rng::seed_from_u64(seed ^ index)
}

/// Stable 64-bit key of a clip id.
pub fn clip_key(clip_id: &str) -> u64 {
    let digest = Sha256::digest(clip_id.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn stream_for_clip(seed: u64, clip_id: &str) -> AugRng {
    ChaCha8Rng::seed_from_u64(seed ^ clip_key(clip_id))
}

/// What the augmentation does once it fires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterConfig {
    /// All-pass mask; exercises the transform round trip only.
    Identity,
    Ideal(FilterSpec),
    /// Random temporal band rejection with mask parameter `M`.
    RandomTemporal { mask_param: usize },
    GaussianHpf(GaussianHpfSpec),
    /// Needs a partner clip, see [`FreqAug::apply_with_partner`].
    AmplitudeMix(AmplitudeMixSpec),
}

impl FilterConfig {
    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            FilterConfig::RandomTemporal { .. } | FilterConfig::AmplitudeMix(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqAugConfig {
    pub filter: FilterConfig,
    p: f64,
    pub seed: u64,
}

impl FreqAugConfig {
    pub fn new(filter: FilterConfig, p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("probability {p} outside [0, 1]")));
        }
        if let FilterConfig::RandomTemporal { mask_param } = filter {
            if mask_param < 2 {
                return Err(Error::Config(format!(
                    "random mask parameter {mask_param} must be >= 2"
                )));
            }
        }
        Ok(Self { filter, p, seed })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn with_p(self, p: f64) -> Result<Self> {
        Self::new(self.filter, p, self.seed)
    }
}

/// Named default configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Temporal high-pass at 0.1, `p = 0.5`.
    FreqAugT,
    /// `FreqAugT` plus spatial high-pass at 0.01.
    FreqAugSt,
}

impl Preset {
    pub const TEMPORAL_CUTOFF: f64 = 0.1;
    pub const SPATIAL_CUTOFF: f64 = 0.01;
    pub const PROBABILITY: f64 = 0.5;

    pub fn name(self) -> &'static str {
        match self {
            Preset::FreqAugT => "freqaug_t",
            Preset::FreqAugSt => "freqaug_st",
        }
    }

    pub fn filter_spec(self) -> FilterSpec {
        let temporal = AxisFilter::new(Band::HighPass, Self::TEMPORAL_CUTOFF).expect("valid cutoff");
        let spatial = match self {
            Preset::FreqAugT => None,
            Preset::FreqAugSt => {
                Some(AxisFilter::new(Band::HighPass, Self::SPATIAL_CUTOFF).expect("valid cutoff"))
            }
        };
        FilterSpec::new(Some(temporal), spatial).expect("temporal part present")
    }

    pub fn config(self, seed: u64) -> FreqAugConfig {
        FreqAugConfig::new(FilterConfig::Ideal(self.filter_spec()), Self::PROBABILITY, seed)
            .expect("preset is valid")
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "freqaug_t" | "freqaug-t" => Ok(Preset::FreqAugT),
            "freqaug_st" | "freqaug-st" => Ok(Preset::FreqAugSt),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }
}

/// Which views of a pair receive the augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ViewSelection {
    #[default]
    Both,
    View1Only,
    View2Only,
}

impl ViewSelection {
    fn selects(self, view: usize) -> bool {
        match self {
            ViewSelection::Both => true,
            ViewSelection::View1Only => view == 0,
            ViewSelection::View2Only => view == 1,
        }
    }
}

impl std::str::FromStr for ViewSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(ViewSelection::Both),
            "view1" | "view1_only" => Ok(ViewSelection::View1Only),
            "view2" | "view2_only" => Ok(ViewSelection::View2Only),
            other => Err(Error::Config(format!("unknown view selection `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AugOutcome<T> {
    pub clip: VideoClip<T>,
    pub applied: bool,
    /// The `U(0, 1)` draw compared against `p`; `None` for a view that was
    /// not selected for augmentation.
    pub draw: Option<f64>,
    pub mask: Option<Arc<FilterMask>>,
    pub band: Option<RandomBand>,
    pub lambda: Option<f64>,
}

impl<T> AugOutcome<T> {
    fn untouched(clip: VideoClip<T>, draw: Option<f64>) -> Self {
        Self {
            clip,
            applied: false,
            draw,
            mask: None,
            band: None,
            lambda: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoViewOutcome<T> {
    pub view1: AugOutcome<T>,
    pub view2: AugOutcome<T>,
}

impl<T> TwoViewOutcome<T> {
    pub fn flags(&self) -> (bool, bool) {
        (self.view1.applied, self.view2.applied)
    }
}

/// A configured augmentation operator with a per-grid mask cache.
#[derive(Debug)]
pub struct FreqAug {
    config: FreqAugConfig,
    masks: Mutex<HashMap<GridShape, Arc<FilterMask>>>,
}

impl Clone for FreqAug {
    fn clone(&self) -> Self {
        Self::new(self.config)
    }
}

impl FreqAug {
    pub fn new(config: FreqAugConfig) -> Self {
        Self {
            config,
            masks: Mutex::new(HashMap::new()),
        }
    }

    pub fn config(&self) -> &FreqAugConfig {
        &self.config
    }

    /// Axes the configured filter acts on.
    pub fn filter_axes(&self) -> AxisSet {
        match self.config.filter {
            FilterConfig::Identity => AxisSet::ALL,
            FilterConfig::Ideal(spec) => match (spec.temporal(), spec.spatial()) {
                (Some(_), None) => AxisSet::TEMPORAL,
                (None, Some(_)) => AxisSet::SPATIAL,
                _ => AxisSet::ALL,
            },
            FilterConfig::RandomTemporal { .. } => AxisSet::TEMPORAL,
            FilterConfig::GaussianHpf(spec) => match spec.dims() {
                baseline::GaussianDims::Spatiotemporal3d => AxisSet::ALL,
                baseline::GaussianDims::Spatial2d => AxisSet::SPATIAL,
            },
            FilterConfig::AmplitudeMix(_) => AxisSet::ALL,
        }
    }

    fn cached_mask(&self, spec: &FilterSpec, grid: GridShape) -> Arc<FilterMask> {
        let mut masks = self.masks.lock().expect("mask cache poisoned");
        masks
            .entry(grid)
            .or_insert_with(|| Arc::new(filters::build_3d_mask(spec, grid)))
            .clone()
    }

    /// Augments one clip. Amplitude Mix configs are refused here.
    pub fn apply<T: Sample, R: Rng + ?Sized>(
        &self,
        clip: &VideoClip<T>,
        rng: &mut R,
    ) -> Result<AugOutcome<T>> {
        self.apply_inner(clip, None, rng)
    }

    /// Augments `clip`, mixing with `partner` when the filter is Amplitude Mix.
    pub fn apply_with_partner<T: Sample, R: Rng + ?Sized>(
        &self,
        clip: &VideoClip<T>,
        partner: &VideoClip<T>,
        rng: &mut R,
    ) -> Result<AugOutcome<T>> {
        self.apply_inner(clip, Some(partner), rng)
    }

    fn apply_inner<T: Sample, R: Rng + ?Sized>(
        &self,
        clip: &VideoClip<T>,
        partner: Option<&VideoClip<T>>,
        rng: &mut R,
    ) -> Result<AugOutcome<T>> {
        let r: f64 = rng.random();
        if r >= self.config.p {
            return Ok(AugOutcome::untouched(clip.clone(), Some(r)));
        }
        let mut out = self.force_inner(clip, partner, rng)?;
        out.draw = Some(r);
        Ok(out)
    }

    /// Runs the filter unconditionally (as if `p = 1`) without drawing `r`.
    pub fn force<T: Sample, R: Rng + ?Sized>(
        &self,
        clip: &VideoClip<T>,
        partner: Option<&VideoClip<T>>,
        rng: &mut R,
    ) -> Result<AugOutcome<T>> {
        self.force_inner(clip, partner, rng)
    }

    fn force_inner<T: Sample, R: Rng + ?Sized>(
        &self,
        clip: &VideoClip<T>,
        partner: Option<&VideoClip<T>>,
        rng: &mut R,
    ) -> Result<AugOutcome<T>> {
        let shape = clip.shape();
        let grid = shape.grid();
        let mut out = AugOutcome::untouched(clip.clone(), None);
        out.applied = true;
        match self.config.filter {
            FilterConfig::Identity => {
                let mask = Arc::new(FilterMask::ones(grid));
                out.clip = filter_with_mask(clip, &mask, AxisSet::ALL)?;
                out.mask = Some(mask);
            }
            FilterConfig::Ideal(spec) => {
                let mask = self.cached_mask(&spec, grid);
                out.clip = filter_with_mask(clip, &mask, self.filter_axes())?;
                out.mask = Some(mask);
            }
            FilterConfig::RandomTemporal { mask_param } => {
                let spec = RandomMaskSpec::new(mask_param, grid.frames)?;
                let (temporal, band) = filters::build_random_temporal_mask(&spec, rng);
                let mask = Arc::new(filters::temporal_mask_3d(&temporal, grid, MaskKind::RandomMask));
                out.clip = filter_with_mask(clip, &mask, AxisSet::TEMPORAL)?;
                out.mask = Some(mask);
                out.band = Some(band);
            }
            FilterConfig::GaussianHpf(spec) => {
                out.clip = baseline::gaussian_hpf(clip, &spec)?;
            }
            FilterConfig::AmplitudeMix(spec) => {
                let partner = partner.ok_or_else(|| {
                    Error::Config("amplitude mix needs a partner clip".into())
                })?;
                let (mixed, lambda) = baseline::amplitude_mix(clip, partner, &spec, rng)?;
                out.clip = mixed;
                out.lambda = Some(lambda);
            }
        }
        Ok(out)
    }

    /// Two views with independent draws from one stream: view 1 first.
    pub fn apply_two_view<T: Sample, R: Rng + ?Sized>(
        &self,
        view1: &VideoClip<T>,
        view2: &VideoClip<T>,
        views: ViewSelection,
        rng: &mut R,
    ) -> Result<TwoViewOutcome<T>> {
        let mut run = |idx: usize, clip: &VideoClip<T>, other: &VideoClip<T>| {
            if views.selects(idx) {
                self.apply_inner(clip, Some(other), rng)
            } else {
                Ok(AugOutcome::untouched(clip.clone(), None))
            }
        };
        let first = run(0, view1, view2)?;
        let second = run(1, view2, view1)?;
        Ok(TwoViewOutcome {
            view1: first,
            view2: second,
        })
    }

    /// Augments each clip with the stream of its batch index. Output order
    /// and content do not depend on `jobs`.
    pub fn apply_batch<T: Sample>(
        &self,
        clips: &[VideoClip<T>],
        jobs: usize,
    ) -> Result<Vec<Result<AugOutcome<T>>>> {
        let seed = self.config.seed;
        run_indexed(jobs, clips.len(), |i| {
            self.apply(&clips[i], &mut stream_for_index(seed, i as u64))
        })
    }

    /// Two-view batch; item `i` draws both views from `stream_for_index(seed, i)`.
    pub fn apply_two_view_batch<T: Sample>(
        &self,
        pairs: &[(VideoClip<T>, VideoClip<T>)],
        views: ViewSelection,
        jobs: usize,
    ) -> Result<Vec<Result<TwoViewOutcome<T>>>> {
        let seed = self.config.seed;
        run_indexed(jobs, pairs.len(), |i| {
            let (a, b) = &pairs[i];
            self.apply_two_view(a, b, views, &mut stream_for_index(seed, i as u64))
        })
    }
}

fn run_indexed<R: Send>(jobs: usize, n: usize, f: impl Fn(usize) -> R + Sync + Send) -> Result<Vec<R>> {
    if jobs <= 1 {
        return Ok((0..n).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

/// Forward transform over `axes`, mask, inverse. The output keeps the input's
/// value range when it still fits, otherwise it is labelled normalized.
pub fn filter_with_mask<T: Sample>(
    clip: &VideoClip<T>,
    mask: &FilterMask,
    axes: AxisSet,
) -> Result<VideoClip<T>> {
    let mut engine = DftEngine::default();
    let mut spec = engine.forward(clip, axes);
    apply_mask(&mut spec, mask)?;
    let (shape, data) = engine.inverse_real(spec, axes)?;
    Ok(VideoClip::from_computed(shape, data, clip.value_range()).with_fps(clip.fps()))
}

/// Single-view augmentation with a fresh operator.
pub fn apply_freqaug<T: Sample, R: Rng + ?Sized>(
    clip: &VideoClip<T>,
    config: &FreqAugConfig,
    rng: &mut R,
) -> Result<AugOutcome<T>> {
    FreqAug::new(*config).apply(clip, rng)
}

pub fn apply_two_view<T: Sample, R: Rng + ?Sized>(
    view1: &VideoClip<T>,
    view2: &VideoClip<T>,
    config: &FreqAugConfig,
    views: ViewSelection,
    rng: &mut R,
) -> Result<TwoViewOutcome<T>> {
    FreqAug::new(*config).apply_two_view(view1, view2, views, rng)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PipelineReport {
    pub warnings: Vec<String>,
}

impl PipelineReport {
    pub fn is_ok(&self) -> bool {
        self.warnings.is_empty()
    }
}

fn is_freqaug_stage(name: &str) -> bool {
    let n = name.trim().to_ascii_lowercase().replace(['-', '_'], "");
    n == "freqaug" || n.starts_with("freqaug")
}

/// Warns when a frequency-augmentation stage is followed by any other
/// transform: it belongs after spatial augmentation and normalization.
pub fn pipeline_position_check<S: AsRef<str>>(stages: &[S]) -> PipelineReport {
    let mut report = PipelineReport::default();
    let Some(first) = stages.iter().position(|s| is_freqaug_stage(s.as_ref())) else {
        return report;
    };
    for (i, stage) in stages.iter().enumerate().skip(first + 1) {
        let name = stage.as_ref();
        if !is_freqaug_stage(name) {
            report.warnings.push(format!(
                "stage {i} `{name}` runs after `{}`; frequency augmentation should be the last transform",
                stages[first].as_ref()
            ));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{ClipShape, ValueRange};

    fn static_clip(frames: usize) -> VideoClip<f32> {
        let shape = ClipShape::new(frames, 6, 5, 3).unwrap();
        VideoClip::from_fn(shape, ValueRange::Unit, |_, h, w, c| {
            ((h * 7 + w * 3 + c * 5) % 11) as f32 / 10.0
        })
        .unwrap()
    }

    #[test]
    fn presets_match_defaults() {
        let t = Preset::FreqAugT.config(1);
        assert_eq!(t.p(), 0.5);
        let FilterConfig::Ideal(spec) = t.filter else { panic!() };
        assert_eq!(spec.temporal().unwrap().cutoff.value(), 0.1);
        assert_eq!(spec.temporal().unwrap().band, Band::HighPass);
        assert!(spec.spatial().is_none());

        let FilterConfig::Ideal(st) = Preset::FreqAugSt.config(1).filter else { panic!() };
        assert_eq!(st.spatial().unwrap().cutoff.value(), 0.01);
        assert_eq!(st.temporal(), spec.temporal());
    }

    #[test]
    fn probability_is_validated() {
        let filter = Preset::FreqAugT.config(0).filter;
        assert!(FreqAugConfig::new(filter, 1.5, 0).is_err());
        assert!(FreqAugConfig::new(filter, -0.1, 0).is_err());
    }

    #[test]
    fn p_zero_is_identity() {
        let clip = static_clip(8);
        let cfg = Preset::FreqAugSt.config(9).with_p(0.0).unwrap();
        let mut rng = stream_from_seed(9);
        for _ in 0..20 {
            let out = apply_freqaug(&clip, &cfg, &mut rng).unwrap();
            assert!(!out.applied);
            assert_eq!(out.clip, clip);
        }
    }

    #[test]
    fn forced_temporal_hpf_nulls_static_clip() {
        let cfg = Preset::FreqAugT.config(0).with_p(1.0).unwrap();
        let out = apply_freqaug(&static_clip(8), &cfg, &mut stream_from_seed(0)).unwrap();
        assert!(out.applied);
        assert!(out.clip.max_abs() < 1e-5);
        assert_eq!(out.mask.unwrap().pass_count(), 7 * 30);
    }

    #[test]
    fn all_pass_mask_round_trips() {
        let spec = FilterSpec::new(Some(AxisFilter::new(Band::LowPass, 0.5).unwrap()), None).unwrap();
        let cfg = FreqAugConfig::new(FilterConfig::Ideal(spec), 1.0, 0).unwrap();
        let shape = ClipShape::new(7, 4, 4, 1).unwrap();
        let clip = VideoClip::<f32>::from_fn(shape, ValueRange::Unit, |t, h, w, _| {
            ((t * 17 + h * 5 + w) % 13) as f32 / 12.0
        })
        .unwrap();
        let out = apply_freqaug(&clip, &cfg, &mut stream_from_seed(0)).unwrap();
        assert!(out.mask.as_ref().unwrap().is_all_ones());
        assert!(out.clip.max_abs_diff(&clip).unwrap() < 1e-5);
        assert_eq!(out.clip.value_range(), ValueRange::Unit);
    }

    #[test]
    fn amplitude_mix_without_partner_is_a_config_error() {
        let cfg = FreqAugConfig::new(
            FilterConfig::AmplitudeMix(AmplitudeMixSpec::new(0.2).unwrap()),
            1.0,
            0,
        )
        .unwrap();
        let clip = static_clip(4);
        assert!(matches!(
            apply_freqaug(&clip, &cfg, &mut stream_from_seed(0)),
            Err(Error::Config(_))
        ));
        let out = FreqAug::new(cfg)
            .apply_with_partner(&clip, &clip, &mut stream_from_seed(0))
            .unwrap();
        assert!(out.lambda.unwrap() < 0.2);
    }

    #[test]
    fn random_mask_larger_than_clip_is_rejected() {
        let cfg = FreqAugConfig::new(FilterConfig::RandomTemporal { mask_param: 9 }, 1.0, 0).unwrap();
        assert!(matches!(
            apply_freqaug(&static_clip(8), &cfg, &mut stream_from_seed(0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn view_selection_skips_views() {
        let aug = FreqAug::new(Preset::FreqAugT.config(0).with_p(1.0).unwrap());
        let clip = static_clip(8);
        let out = aug
            .apply_two_view(&clip, &clip, ViewSelection::View2Only, &mut stream_from_seed(1))
            .unwrap();
        assert_eq!(out.flags(), (false, true));
        assert!(out.view1.draw.is_none());
        assert_eq!(out.view1.clip, clip);
    }

    #[test]
    fn stream_keys_are_stable() {
        assert_eq!(clip_key("clip_0001"), clip_key("clip_0001"));
        assert_ne!(clip_key("clip_0001"), clip_key("clip_0002"));
        let a: u64 = stream_for_clip(5, "x").random();
        let b: u64 = stream_for_clip(5, "x").random();
        assert_eq!(a, b);
    }

    #[test]
    fn pipeline_order() {
        assert!(pipeline_position_check(&["crop", "flip", "normalize", "freqaug"]).is_ok());
        let bad = pipeline_position_check(&["freqaug", "crop"]);
        assert_eq!(bad.warnings.len(), 1);
        assert!(pipeline_position_check::<&str>(&[]).is_ok());
        assert!(pipeline_position_check(&["crop", "flip"]).is_ok());
        assert!(pipeline_position_check(&["normalize", "FreqAug-ST"]).is_ok());
    }
}
