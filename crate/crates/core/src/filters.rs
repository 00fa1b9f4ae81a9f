//! Ideal (binary) frequency masks and the random temporal band mask.
//!
//! Bins are never physically shifted. Bin `k` of an axis of length `N` sits
//! at the signed normalized frequency `k/N` for `k < N/2` and `(k-N)/N`
//! otherwise, so every mask built here is symmetric under `k -> N-k`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{FilterMask, GridShape, MaskKind};

/// Normalized cutoff in cycles per sample, `0 < f <= 0.5`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CutoffFrequency(f64);

impl CutoffFrequency {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value <= 0.5 {
            Ok(Self(value))
        } else {
            Err(Error::Config(format!(
                "cutoff frequency {value} outside (0, 0.5]"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for CutoffFrequency {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CutoffFrequency> for f64 {
    fn from(c: CutoffFrequency) -> f64 {
        c.0
    }
}

impl fmt::Display for CutoffFrequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    LowPass,
    HighPass,
}

impl Band {
    pub fn short_name(self) -> &'static str {
        match self {
            Band::LowPass => "lpf",
            Band::HighPass => "hpf",
        }
    }
}

impl std::str::FromStr for Band {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lpf" | "low_pass" => Ok(Band::LowPass),
            "hpf" | "high_pass" => Ok(Band::HighPass),
            other => Err(Error::Config(format!("unknown band `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisFilter {
    pub band: Band,
    pub cutoff: CutoffFrequency,
}

impl AxisFilter {
    pub fn new(band: Band, cutoff: f64) -> Result<Self> {
        Ok(Self {
            band,
            cutoff: CutoffFrequency::new(cutoff)?,
        })
    }
}

/// Temporal and/or spatial ideal filter; at least one part is present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    temporal: Option<AxisFilter>,
    spatial: Option<AxisFilter>,
}

impl FilterSpec {
    pub fn new(temporal: Option<AxisFilter>, spatial: Option<AxisFilter>) -> Result<Self> {
        if temporal.is_none() && spatial.is_none() {
            return Err(Error::Config(
                "filter needs a temporal or a spatial part".into(),
            ));
        }
        Ok(Self { temporal, spatial })
    }

    pub fn temporal(&self) -> Option<AxisFilter> {
        self.temporal
    }

    pub fn spatial(&self) -> Option<AxisFilter> {
        self.spatial
    }
}

/// Parameters of the random temporal band mask: mask parameter `M` and the
/// clip's frame count `T`, with `2 <= M <= T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomMaskSpec {
    mask_param: usize,
    frames: usize,
}

impl RandomMaskSpec {
    pub fn new(mask_param: usize, frames: usize) -> Result<Self> {
        if mask_param < 2 || mask_param > frames {
            return Err(Error::Config(format!(
                "random mask parameter M={mask_param} must satisfy 2 <= M <= T={frames}"
            )));
        }
        Ok(Self { mask_param, frames })
    }

    pub fn mask_param(&self) -> usize {
        self.mask_param
    }

    pub fn frames(&self) -> usize {
        self.frames
    }
}

/// A sampled reject band: non-negative bins `start .. start + width`,
/// mirrored onto the negative frequencies and clamped at Nyquist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomBand {
    pub start: usize,
    pub width: usize,
}

/// Signed normalized frequency of bin `k` on an axis of length `n`, in
/// `[-0.5, 0.5)`.
pub fn normalized_frequency(k: usize, n: usize) -> Result<f64> {
    if k >= n {
        return Err(Error::Index { index: k, len: n });
    }
    Ok(if 2 * k < n {
        k as f64 / n as f64
    } else {
        (k as f64 - n as f64) / n as f64
    })
}

/// `|k|` in bins: distance of bin `k` from zero frequency.
#[inline]
fn bin_distance(k: usize, n: usize) -> usize {
    k.min(n - k)
}

#[inline]
fn passes_low(k: usize, n: usize, cutoff: CutoffFrequency) -> bool {
    (bin_distance(k, n) as f64 / n as f64) < cutoff.value()
}

fn bool_mask(bits: impl Iterator<Item = bool>) -> Vec<f32> {
    bits.map(|b| if b { 1.0 } else { 0.0 }).collect()
}

/// Ideal temporal low-pass: bin passes iff `|f| < f_co`.
pub fn build_temporal_lpf(frames: usize, cutoff: CutoffFrequency) -> Vec<f32> {
    bool_mask((0..frames).map(|k| passes_low(k, frames, cutoff)))
}

/// Exact complement of [`build_temporal_lpf`].
pub fn build_temporal_hpf(frames: usize, cutoff: CutoffFrequency) -> Vec<f32> {
    complement(build_temporal_lpf(frames, cutoff))
}

/// Square spatial low-pass over `(H, W)`: a bin passes iff both `|f_h|` and
/// `|f_w|` are below the cutoff. Each axis is normalized by its own length.
pub fn build_spatial_lpf(height: usize, width: usize, cutoff: CutoffFrequency) -> Vec<f32> {
    let rows: Vec<bool> = (0..height).map(|k| passes_low(k, height, cutoff)).collect();
    let cols: Vec<bool> = (0..width).map(|k| passes_low(k, width, cutoff)).collect();
    bool_mask(rows.iter().flat_map(|&r| cols.iter().map(move |&c| r && c)))
}

/// Exact complement of [`build_spatial_lpf`].
pub fn build_spatial_hpf(height: usize, width: usize, cutoff: CutoffFrequency) -> Vec<f32> {
    complement(build_spatial_lpf(height, width, cutoff))
}

fn complement(mut mask: Vec<f32>) -> Vec<f32> {
    mask.iter_mut().for_each(|v| *v = 1.0 - *v);
    mask
}

fn temporal_part(filter: AxisFilter, frames: usize) -> Vec<f32> {
    match filter.band {
        Band::LowPass => build_temporal_lpf(frames, filter.cutoff),
        Band::HighPass => build_temporal_hpf(frames, filter.cutoff),
    }
}

fn spatial_part(filter: AxisFilter, height: usize, width: usize) -> Vec<f32> {
    match filter.band {
        Band::LowPass => build_spatial_lpf(height, width, filter.cutoff),
        Band::HighPass => build_spatial_hpf(height, width, filter.cutoff),
    }
}

/// Outer product `F_t[k_t] * F_s[k_h, k_w]`; a missing part is all-pass.
pub fn build_3d_mask(spec: &FilterSpec, grid: GridShape) -> FilterMask {
    let temporal = spec
        .temporal
        .map(|f| temporal_part(f, grid.frames))
        .unwrap_or_else(|| vec![1.0; grid.frames]);
    let spatial = spec
        .spatial
        .map(|f| spatial_part(f, grid.height, grid.width))
        .unwrap_or_else(|| vec![1.0; grid.height * grid.width]);
    outer_product(&temporal, &spatial, grid, MaskKind::IdealBinary)
}

/// Broadcasts a length-`T` temporal mask over the spatial bins.
pub fn temporal_mask_3d(temporal: &[f32], grid: GridShape, kind: MaskKind) -> FilterMask {
    outer_product(temporal, &vec![1.0; grid.height * grid.width], grid, kind)
}

fn outer_product(temporal: &[f32], spatial: &[f32], grid: GridShape, kind: MaskKind) -> FilterMask {
    assert_eq!(temporal.len(), grid.frames);
    assert_eq!(spatial.len(), grid.height * grid.width);
    let data = temporal
        .iter()
        .flat_map(|&ft| spatial.iter().map(move |&fs| ft * fs))
        .collect();
    FilterMask::from_parts(grid, data, kind)
}

/// Temporal mask rejecting `band`; bins past Nyquist are never reached.
pub fn random_band_mask(frames: usize, band: RandomBand) -> Vec<f32> {
    let end = band.start + band.width;
    bool_mask((0..frames).map(|k| {
        let d = bin_distance(k, frames);
        !(band.start <= d && d < end)
    }))
}

/// Samples a reject band and builds its temporal mask.
///
/// The start bin is uniform on the non-negative bins `0..=T/2`, the width
/// uniform on `1..=M-1` bins.
pub fn build_random_temporal_mask<R: Rng + ?Sized>(
    spec: &RandomMaskSpec,
    rng: &mut R,
) -> (Vec<f32>, RandomBand) {
    let start = rng.random_range(0..=spec.frames / 2);
    let width = rng.random_range(1..spec.mask_param);
    let band = RandomBand { start, width };
    (random_band_mask(spec.frames, band), band)
}
