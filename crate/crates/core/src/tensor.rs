//! Dense tensors shared by every stage: real video clips, complex spectra and
//! real frequency masks.
//!
//! Clips are stored row-major in `(T, H, W, C)` order. Spectra keep the same
//! logical shape but are stored channel-planar, `(C, T, H, W)`, so that each
//! channel is one contiguous block for the transform passes and a `(T, H, W)`
//! mask can be applied to every channel with a plain zip.

use std::fmt;

use num_complex::Complex;
use num_traits::Float;
use rustfft::FftNum;

use crate::error::{Error, Result};

/// On-disk element type code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DType {
    F32,
    F64,
}

impl DType {
    pub fn code(self) -> u32 {
        match self {
            DType::F32 => 1,
            DType::F64 => 2,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            1 => Some(DType::F32),
            2 => Some(DType::F64),
            _ => None,
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

/// Real scalar a clip can be stored in. Implemented for `f32` (fast path)
/// and `f64` (reference path).
pub trait Sample: FftNum + Float + Default + fmt::Display {
    const DTYPE: DType;

    fn of_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
    fn write_le(self, out: &mut Vec<u8>);
    /// `bytes` must hold exactly `DTYPE.size()` bytes.
    fn read_le(bytes: &[u8]) -> Self;
}

impl Sample for f32 {
    const DTYPE: DType = DType::F32;

    fn of_f64(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4-byte chunk"))
    }
}

impl Sample for f64 {
    const DTYPE: DType = DType::F64;

    fn of_f64(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8-byte chunk"))
    }
}

/// Extent of the `(T, H, W)` frequency grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridShape {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
}

impl GridShape {
    pub fn new(frames: usize, height: usize, width: usize) -> Result<Self> {
        if frames == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidShape(format!(
                "grid ({frames}, {height}, {width}) has a zero dimension"
            )));
        }
        Ok(Self {
            frames,
            height,
            width,
        })
    }

    pub fn len(&self) -> usize {
        self.frames * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, t: usize, h: usize, w: usize) -> usize {
        (t * self.height + h) * self.width + w
    }

    /// Index of the frequency-negated bin `(-t, -h, -w)` modulo each axis.
    #[inline]
    pub fn negated_index(&self, t: usize, h: usize, w: usize) -> usize {
        self.index(
            (self.frames - t) % self.frames,
            (self.height - h) % self.height,
            (self.width - w) % self.width,
        )
    }
}

impl fmt::Display for GridShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.frames, self.height, self.width)
    }
}

/// Shape of a clip, `(T, H, W, C)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClipShape {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl ClipShape {
    pub fn new(frames: usize, height: usize, width: usize, channels: usize) -> Result<Self> {
        let shape = Self {
            frames,
            height,
            width,
            channels,
        };
        shape.validate()?;
        Ok(shape)
    }

    fn validate(&self) -> Result<()> {
        if self.frames == 0 || self.height == 0 || self.width == 0 || self.channels == 0 {
            return Err(Error::InvalidShape(format!("{self} has a zero dimension")));
        }
        if self.channels != 1 && self.channels != 3 {
            return Err(Error::InvalidShape(format!(
                "{self}: channel count must be 1 or 3"
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> GridShape {
        GridShape {
            frames: self.frames,
            height: self.height,
            width: self.width,
        }
    }

    pub fn len(&self) -> usize {
        self.frames * self.height * self.width * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn frame_len(&self) -> usize {
        self.height * self.width * self.channels
    }

    #[inline]
    pub fn index(&self, t: usize, h: usize, w: usize, c: usize) -> usize {
        ((t * self.height + h) * self.width + w) * self.channels + c
    }

    pub fn dims(&self) -> [usize; 4] {
        [self.frames, self.height, self.width, self.channels]
    }
}

impl fmt::Display for ClipShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.frames, self.height, self.width, self.channels
        )
    }
}

/// Fraction of a range's span a computed sample may overshoot by and still
/// be clamped back in rather than relabelling the clip.
pub const ROUNDOFF_SLACK: f64 = 1e-4;

/// Declared value range of a clip's samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueRange {
    /// Every sample in `[0, 1]`.
    Unit,
    /// Signed, unbounded. Used for per-channel zero-mean data and for
    /// filter outputs that left their input range.
    Normalized,
    /// Every sample in `[0, 255]`.
    RawU8,
}

impl ValueRange {
    pub fn contains(self, v: f64) -> bool {
        match self {
            ValueRange::Unit => (0.0..=1.0).contains(&v),
            ValueRange::RawU8 => (0.0..=255.0).contains(&v),
            ValueRange::Normalized => v.is_finite(),
        }
    }

    /// Closed interval of a bounded range.
    pub fn bounds(self) -> Option<(f64, f64)> {
        match self {
            ValueRange::Unit => Some((0.0, 1.0)),
            ValueRange::RawU8 => Some((0.0, 255.0)),
            ValueRange::Normalized => None,
        }
    }

    /// Tightest range covering `[min, max]`.
    pub fn infer(min: f64, max: f64) -> Self {
        if min >= 0.0 && max <= 1.0 {
            ValueRange::Unit
        } else if min >= 0.0 && max <= 255.0 {
            ValueRange::RawU8
        } else {
            ValueRange::Normalized
        }
    }

    pub fn tag(self) -> u32 {
        match self {
            ValueRange::Unit => 0,
            ValueRange::Normalized => 1,
            ValueRange::RawU8 => 2,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            0 => Some(ValueRange::Unit),
            1 => Some(ValueRange::Normalized),
            2 => Some(ValueRange::RawU8),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ValueRange::Unit => "unit",
            ValueRange::Normalized => "normalized",
            ValueRange::RawU8 => "raw_u8",
        }
    }
}

impl std::str::FromStr for ValueRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(ValueRange::Unit),
            "normalized" => Ok(ValueRange::Normalized),
            "raw_u8" => Ok(ValueRange::RawU8),
            other => Err(Error::Config(format!("unknown value range `{other}`"))),
        }
    }
}

/// A video clip: real samples in `(T, H, W, C)` row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoClip<T = f32> {
    shape: ClipShape,
    data: Vec<T>,
    value_range: ValueRange,
    fps: Option<f64>,
}

impl<T: Sample> VideoClip<T> {
    /// Constant clip. The value range is the tightest one containing `fill`.
    pub fn new(shape: ClipShape, fill: T) -> Result<Self> {
        shape.validate()?;
        let v = fill.as_f64();
        if !v.is_finite() {
            return Err(Error::InvalidValue(format!("fill value {v} is not finite")));
        }
        Ok(Self {
            shape,
            data: vec![fill; shape.len()],
            value_range: ValueRange::infer(v, v),
            fps: None,
        })
    }

    pub fn from_vec(shape: ClipShape, data: Vec<T>, value_range: ValueRange) -> Result<Self> {
        shape.validate()?;
        if data.len() != shape.len() {
            return Err(Error::Dimension(format!(
                "{} samples supplied for shape {shape} ({} expected)",
                data.len(),
                shape.len()
            )));
        }
        for (i, v) in data.iter().enumerate() {
            let v = v.as_f64();
            if !v.is_finite() {
                return Err(Error::InvalidValue(format!("sample {i} is not finite")));
            }
            if !value_range.contains(v) {
                return Err(Error::InvalidValue(format!(
                    "sample {i} = {v} outside declared range {}",
                    value_range.name()
                )));
            }
        }
        Ok(Self {
            shape,
            data,
            value_range,
            fps: None,
        })
    }

    /// Builds a clip by evaluating `f(t, h, w, c)` for every sample.
    pub fn from_fn(
        shape: ClipShape,
        value_range: ValueRange,
        mut f: impl FnMut(usize, usize, usize, usize) -> T,
    ) -> Result<Self> {
        shape.validate()?;
        let mut data = Vec::with_capacity(shape.len());
        for t in 0..shape.frames {
            for h in 0..shape.height {
                for w in 0..shape.width {
                    for c in 0..shape.channels {
                        data.push(f(t, h, w, c));
                    }
                }
            }
        }
        Self::from_vec(shape, data, value_range)
    }

    /// Wraps computed samples, relabelling the range as `Normalized` when the
    /// samples no longer fit the requested one. Samples must be finite.
    pub(crate) fn from_computed(shape: ClipShape, mut data: Vec<T>, wanted: ValueRange) -> Self {
        debug_assert_eq!(data.len(), shape.len());
        let value_range = match wanted.bounds() {
            None => wanted,
            Some((lo, hi)) => {
                // Excursions this small are transform round-off; clamp them.
                let slack = ROUNDOFF_SLACK * (hi - lo);
                let fits = data
                    .iter()
                    .all(|v| (lo - slack..=hi + slack).contains(&v.as_f64()));
                if fits {
                    let (lo, hi) = (T::of_f64(lo), T::of_f64(hi));
                    data.iter_mut().for_each(|v| *v = v.max(lo).min(hi));
                    wanted
                } else {
                    ValueRange::Normalized
                }
            }
        };
        Self {
            shape,
            data,
            value_range,
            fps: None,
        }
    }

    pub fn with_fps(mut self, fps: Option<f64>) -> Self {
        self.fps = fps;
        self
    }

    pub fn shape(&self) -> ClipShape {
        self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn value_range(&self) -> ValueRange {
        self.value_range
    }

    pub fn fps(&self) -> Option<f64> {
        self.fps
    }

    #[inline]
    pub fn get(&self, t: usize, h: usize, w: usize, c: usize) -> T {
        self.data[self.shape.index(t, h, w, c)]
    }

    /// Samples of frame `t`, `(H, W, C)` row-major.
    pub fn frame(&self, t: usize) -> &[T] {
        let n = self.shape.frame_len();
        &self.data[t * n..(t + 1) * n]
    }

    /// Minimum and maximum sample.
    pub fn min_max(&self) -> (T, T) {
        self.data.iter().fold(
            (T::infinity(), T::neg_infinity()),
            |(lo, hi), &v| (lo.min(v), hi.max(v)),
        )
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest absolute sample difference. Shapes must match.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!(
                "{} vs {}",
                self.shape, other.shape
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.as_f64() - b.as_f64()).abs())
            .fold(0.0, f64::max))
    }

    /// Sum of squared samples, accumulated in `f64`.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.as_f64().powi(2)).sum()
    }

    pub fn cast<U: Sample>(&self) -> VideoClip<U> {
        VideoClip {
            shape: self.shape,
            data: self.data.iter().map(|v| U::of_f64(v.as_f64())).collect(),
            value_range: self.value_range,
            fps: self.fps,
        }
    }

    /// Multiplies every sample by `factor`; the range becomes whatever fits.
    pub fn scaled(&self, factor: T) -> Self {
        let data: Vec<T> = self.data.iter().map(|&v| v * factor).collect();
        let (lo, hi) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(v.as_f64()), h.max(v.as_f64()))
        });
        Self {
            shape: self.shape,
            data,
            value_range: ValueRange::infer(lo, hi),
            fps: self.fps,
        }
    }
}

/// DFT coefficients of a clip over its `(T, H, W)` axes, per channel, in
/// natural (unshifted) order. Stored channel-planar.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T = f32> {
    shape: ClipShape,
    data: Vec<Complex<T>>,
}

impl<T: Sample> Spectrum<T> {
    pub fn zeros(shape: ClipShape) -> Result<Self> {
        shape.validate()?;
        Ok(Self {
            shape,
            data: vec![Complex::new(T::zero(), T::zero()); shape.len()],
        })
    }

    /// Builds a spectrum from `f(t, h, w, c)`.
    pub fn from_fn(
        shape: ClipShape,
        mut f: impl FnMut(usize, usize, usize, usize) -> Complex<T>,
    ) -> Result<Self> {
        shape.validate()?;
        let grid = shape.grid();
        let mut data = Vec::with_capacity(shape.len());
        for c in 0..shape.channels {
            for t in 0..grid.frames {
                for h in 0..grid.height {
                    for w in 0..grid.width {
                        data.push(f(t, h, w, c));
                    }
                }
            }
        }
        Ok(Self { shape, data })
    }

    pub(crate) fn from_planar(shape: ClipShape, data: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(data.len(), shape.len());
        Self { shape, data }
    }

    pub(crate) fn into_planar(self) -> Vec<Complex<T>> {
        self.data
    }

    pub fn shape(&self) -> ClipShape {
        self.shape
    }

    #[inline]
    pub fn get(&self, t: usize, h: usize, w: usize, c: usize) -> Complex<T> {
        self.data[c * self.shape.grid().len() + self.shape.grid().index(t, h, w)]
    }

    /// Coefficients of channel `c`, `(T, H, W)` row-major.
    pub fn channel(&self, c: usize) -> &[Complex<T>] {
        let n = self.shape.grid().len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [Complex<T>] {
        let n = self.shape.grid().len();
        &mut self.data[c * n..(c + 1) * n]
    }

    /// All coefficients, channel-planar.
    pub fn planar(&self) -> &[Complex<T>] {
        &self.data
    }

    /// Sum of `|X|^2`, accumulated in `f64`.
    pub fn energy(&self) -> f64 {
        self.data
            .iter()
            .map(|z| z.re.as_f64().powi(2) + z.im.as_f64().powi(2))
            .sum()
    }

    /// Checks `X[k] = conj(X[-k])` on every bin, with tolerance
    /// `rel_tol * max|X|`.
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        let grid = self.shape.grid();
        let peak = self
            .data
            .iter()
            .map(|z| z.norm().as_f64())
            .fold(0.0, f64::max);
        let tol = rel_tol * peak.max(f64::MIN_POSITIVE);
        (0..self.shape.channels).all(|c| {
            let plane = self.channel(c);
            (0..grid.frames).all(|t| {
                (0..grid.height).all(|h| {
                    (0..grid.width).all(|w| {
                        let a = plane[grid.index(t, h, w)];
                        let b = plane[grid.negated_index(t, h, w)].conj();
                        (a - b).norm().as_f64() <= tol
                    })
                })
            })
        })
    }
}

/// Origin of a mask's values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaskKind {
    IdealBinary,
    GaussianDerived,
    RandomMask,
    AmplitudeMixPlaceholder,
}

/// Real mask over the `(T, H, W)` frequency grid, broadcast over channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterMask {
    grid: GridShape,
    data: Vec<f32>,
    kind: MaskKind,
}

impl FilterMask {
    pub fn ones(grid: GridShape) -> Self {
        Self {
            grid,
            data: vec![1.0; grid.len()],
            kind: MaskKind::IdealBinary,
        }
    }

    /// Validates values in `[0, 1]`, binarity for ideal masks and symmetry
    /// under frequency negation.
    pub fn from_vec(grid: GridShape, data: Vec<f32>, kind: MaskKind) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} mask values for grid {grid}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidValue(format!("mask value {v} outside [0, 1]")));
        }
        if matches!(kind, MaskKind::IdealBinary | MaskKind::RandomMask)
            && data.iter().any(|&v| v != 0.0 && v != 1.0)
        {
            return Err(Error::InvalidValue(
                "binary mask holds a value other than 0 or 1".into(),
            ));
        }
        let mask = Self { grid, data, kind };
        if !mask.is_symmetric() {
            return Err(Error::InvalidValue(
                "mask is not symmetric under frequency negation".into(),
            ));
        }
        Ok(mask)
    }

    pub(crate) fn from_parts(grid: GridShape, data: Vec<f32>, kind: MaskKind) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        Self { grid, data, kind }
    }

    pub fn grid(&self) -> GridShape {
        self.grid
    }

    pub fn kind(&self) -> MaskKind {
        self.kind
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, t: usize, h: usize, w: usize) -> f32 {
        self.data[self.grid.index(t, h, w)]
    }

    /// Number of bins with a non-zero value.
    pub fn pass_count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0.0).count()
    }

    pub fn is_symmetric(&self) -> bool {
        let g = self.grid;
        (0..g.frames).all(|t| {
            (0..g.height).all(|h| {
                (0..g.width).all(|w| self.data[g.index(t, h, w)] == self.data[g.negated_index(t, h, w)])
            })
        })
    }

    pub fn is_all_ones(&self) -> bool {
        self.data.iter().all(|&v| v == 1.0)
    }
}

/// `out[t, h, w, c] = mask[t, h, w] * spec[t, h, w, c]`.
pub fn elementwise_mul<T: Sample>(spec: &Spectrum<T>, mask: &FilterMask) -> Result<Spectrum<T>> {
    let mut out = spec.clone();
    apply_mask(&mut out, mask)?;
    Ok(out)
}

/// In-place form of [`elementwise_mul`].
pub fn apply_mask<T: Sample>(spec: &mut Spectrum<T>, mask: &FilterMask) -> Result<()> {
    if spec.shape.grid() != mask.grid {
        return Err(Error::Dimension(format!(
            "spectrum grid {} vs mask grid {}",
            spec.shape.grid(),
            mask.grid
        )));
    }
    if mask.is_all_ones() {
        return Ok(());
    }
    for c in 0..spec.shape.channels {
        for (z, &m) in spec.channel_mut(c).iter_mut().zip(&mask.data) {
            let m = T::from_f32(m).expect("f32 converts");
            *z = Complex::new(z.re * m, z.im * m);
        }
    }
    Ok(())
}
