//! Discrete Fourier transforms over any subset of a clip's `(T, H, W)` axes.
//!
//! Forward transforms are unnormalized; inverse transforms carry `1/N` per
//! transformed axis. Two engines share the same axis driver: the fast one
//! (mixed-radix FFT plans from `rustfft`, any length) and a direct `O(N^2)`
//! summation used as a reference and for cross-checking.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::tensor::{ClipShape, Sample, Spectrum, ValueRange, VideoClip};

/// Largest tolerated imaginary residue after an inverse transform, relative
/// to `max(1, max |real part|)`. Beyond it the spectrum was not Hermitian.
pub const IMAG_RESIDUE_ERROR: f64 = 1e-3;
/// Imaginary residue below which it is discarded without comment.
pub const IMAG_RESIDUE_SILENT: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    Temporal,
    Height,
    Width,
}

impl Axis {
    fn bit(self) -> u8 {
        match self {
            Axis::Temporal => 1,
            Axis::Height => 2,
            Axis::Width => 4,
        }
    }

    fn len(self, shape: ClipShape) -> usize {
        match self {
            Axis::Temporal => shape.frames,
            Axis::Height => shape.height,
            Axis::Width => shape.width,
        }
    }
}

/// Non-empty set of transform axes.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct AxisSet(u8);

impl AxisSet {
    pub const ALL: AxisSet = AxisSet(7);
    pub const TEMPORAL: AxisSet = AxisSet(1);
    pub const SPATIAL: AxisSet = AxisSet(6);

    pub fn new(axes: &[Axis]) -> Result<Self> {
        let mut bits = 0u8;
        for &a in axes {
            if bits & a.bit() != 0 {
                return Err(Error::Config(format!("axis {a:?} listed twice")));
            }
            bits |= a.bit();
        }
        if bits == 0 {
            return Err(Error::Config("axis set is empty".into()));
        }
        Ok(AxisSet(bits))
    }

    pub fn contains(self, axis: Axis) -> bool {
        self.0 & axis.bit() != 0
    }

    pub fn iter(self) -> impl Iterator<Item = Axis> {
        [Axis::Temporal, Axis::Height, Axis::Width]
            .into_iter()
            .filter(move |a| self.contains(*a))
    }

    /// Product of the transformed axis lengths.
    pub fn volume(self, shape: ClipShape) -> usize {
        self.iter().map(|a| a.len(shape)).product()
    }
}

impl fmt::Debug for AxisSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Which implementation evaluates each 1-D lane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Fast,
    /// Direct summation, `O(N^2)` per lane.
    Reference,
}

/// Direct evaluation of the 1-D DFT sum in `f64`, forward or inverse
/// (inverse includes the `1/N` factor).
pub fn naive_dft_1d<T: Sample>(x: &[Complex<T>], inverse: bool) -> Vec<Complex<T>> {
    let n = x.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let twiddles: Vec<Complex<f64>> = (0..n)
        .map(|m| Complex::from_polar(1.0, sign * 2.0 * PI * m as f64 / n as f64))
        .collect();
    let scale = if inverse { 1.0 / n as f64 } else { 1.0 };
    (0..n)
        .map(|k| {
            let acc = x.iter().enumerate().fold(Complex::new(0.0, 0.0), |acc, (j, v)| {
                let v = Complex::new(v.re.as_f64(), v.im.as_f64());
                acc + v * twiddles[(k * j) % n]
            });
            Complex::new(T::of_f64(acc.re * scale), T::of_f64(acc.im * scale))
        })
        .collect()
}

enum LaneOp<T: Sample> {
    Fast(Arc<dyn Fft<T>>),
    Reference { inverse: bool },
}

impl<T: Sample> LaneOp<T> {
    fn scratch_len(&self) -> usize {
        match self {
            LaneOp::Fast(fft) => fft.get_inplace_scratch_len(),
            LaneOp::Reference { .. } => 0,
        }
    }

    /// Transforms every `len`-long chunk of `buf` in place (unnormalized).
    fn run(&self, buf: &mut [Complex<T>], len: usize, scratch: &mut Vec<Complex<T>>) {
        match self {
            LaneOp::Fast(fft) => {
                let need = fft.get_inplace_scratch_len();
                if scratch.len() < need {
                    scratch.resize(need, Complex::new(T::zero(), T::zero()));
                }
                fft.process_with_scratch(buf, &mut scratch[..need]);
            }
            LaneOp::Reference { inverse } => {
                for chunk in buf.chunks_exact_mut(len) {
                    let mut out = naive_dft_1d(chunk, *inverse);
                    if *inverse {
                        // undo the 1/N: the driver applies normalization once at the end
                        let n = T::from_usize(len).expect("usize converts");
                        out.iter_mut().for_each(|z| *z = *z * n);
                    }
                    chunk.copy_from_slice(&out);
                }
            }
        }
    }
}

/// Plans and scratch buffers reused across axes and calls.
pub struct DftEngine<T: Sample> {
    engine: Engine,
    planner: FftPlanner<T>,
    scratch: Vec<Complex<T>>,
    lanes: Vec<Complex<T>>,
}

impl<T: Sample> Default for DftEngine<T> {
    fn default() -> Self {
        Self::new(Engine::Fast)
    }
}

impl<T: Sample> DftEngine<T> {
    pub fn new(engine: Engine) -> Self {
        Self {
            engine,
            planner: FftPlanner::new(),
            scratch: Vec::new(),
            lanes: Vec::new(),
        }
    }

    fn lane_op(&mut self, len: usize, direction: FftDirection) -> LaneOp<T> {
        match self.engine {
            Engine::Fast => LaneOp::Fast(self.planner.plan_fft(len, direction)),
            Engine::Reference => LaneOp::Reference {
                inverse: direction == FftDirection::Inverse,
            },
        }
    }

    /// Unnormalized transform of planar `(C, T, H, W)` data along `axes`.
    pub(crate) fn transform_planar(
        &mut self,
        data: &mut [Complex<T>],
        shape: ClipShape,
        axes: AxisSet,
        direction: FftDirection,
    ) {
        let g = shape.grid();
        for axis in axes.iter() {
            let (outer, len, inner) = match axis {
                Axis::Temporal => (shape.channels, g.frames, g.height * g.width),
                Axis::Height => (shape.channels * g.frames, g.height, g.width),
                Axis::Width => (shape.channels * g.frames * g.height, g.width, 1),
            };
            if len == 1 {
                continue;
            }
            let op = self.lane_op(len, direction);
            let want = op.scratch_len();
            if self.scratch.len() < want {
                self.scratch.resize(want, Complex::new(T::zero(), T::zero()));
            }
            if inner == 1 {
                op.run(data, len, &mut self.scratch);
                continue;
            }
            let block = len * inner;
            self.lanes.resize(block, Complex::new(T::zero(), T::zero()));
            for chunk in data.chunks_exact_mut(block) {
                transpose(chunk, &mut self.lanes, len, inner);
                op.run(&mut self.lanes, len, &mut self.scratch);
                transpose(&self.lanes, chunk, inner, len);
            }
            debug_assert_eq!(data.len(), outer * block);
        }
    }
}

/// `dst[c * rows + r] = src[r * cols + c]` for a `rows x cols` source.
fn transpose<T: Copy>(src: &[T], dst: &mut [T], rows: usize, cols: usize) {
    const TILE: usize = 32;
    for r0 in (0..rows).step_by(TILE) {
        let r1 = (r0 + TILE).min(rows);
        for c0 in (0..cols).step_by(TILE) {
            let c1 = (c0 + TILE).min(cols);
            for r in r0..r1 {
                let row = &src[r * cols..];
                for c in c0..c1 {
                    dst[c * rows + r] = row[c];
                }
            }
        }
    }
}

fn check_len(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidShape("empty sequence".into()))
    } else {
        Ok(())
    }
}

/// Forward 1-D DFT, `X[k] = sum_n x[n] exp(-2 pi i k n / N)`.
pub fn dft_1d<T: Sample>(x: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    check_len(x.len())?;
    let mut buf = x.to_vec();
    FftPlanner::new().plan_fft_forward(x.len()).process(&mut buf);
    Ok(buf)
}

/// Inverse 1-D DFT with the `1/N` factor.
pub fn idft_1d<T: Sample>(spec: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    check_len(spec.len())?;
    let mut buf = spec.to_vec();
    FftPlanner::new().plan_fft_inverse(spec.len()).process(&mut buf);
    let scale = T::one() / T::from_usize(spec.len()).expect("usize converts");
    buf.iter_mut().for_each(|z| *z = *z * scale);
    Ok(buf)
}

impl<T: Sample> DftEngine<T> {
    /// Forward transform of `clip` along `axes`; other axes are untouched.
    pub fn forward(&mut self, clip: &VideoClip<T>, axes: AxisSet) -> Spectrum<T> {
        let shape = clip.shape();
        let plane = shape.grid().len();
        let channels = shape.channels;
        let zero = Complex::new(T::zero(), T::zero());
        let mut data = vec![zero; shape.len()];
        for (g, px) in clip.data().chunks_exact(channels).enumerate() {
            for (c, &v) in px.iter().enumerate() {
                data[c * plane + g] = Complex::new(v, T::zero());
            }
        }
        self.transform_planar(&mut data, shape, axes, FftDirection::Forward);
        Spectrum::from_planar(shape, data)
    }

    /// Inverse transform along `axes`, returning the real part. Fails when
    /// the imaginary residue exceeds [`IMAG_RESIDUE_ERROR`].
    pub fn inverse(&mut self, spec: Spectrum<T>, axes: AxisSet) -> Result<VideoClip<T>> {
        let (shape, data) = self.inverse_real(spec, axes)?;
        let (lo, hi) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(v.as_f64()), h.max(v.as_f64()))
        });
        Ok(VideoClip::from_computed(shape, data, ValueRange::infer(lo, hi)))
    }

    pub(crate) fn inverse_real(
        &mut self,
        spec: Spectrum<T>,
        axes: AxisSet,
    ) -> Result<(ClipShape, Vec<T>)> {
        let shape = spec.shape();
        let mut data = spec.into_planar();
        self.transform_planar(&mut data, shape, axes, FftDirection::Inverse);
        let scale = 1.0 / axes.volume(shape) as f64;

        let mut peak_re = 0.0f64;
        let mut peak_im = 0.0f64;
        for z in &data {
            peak_re = peak_re.max(z.re.as_f64().abs());
            peak_im = peak_im.max(z.im.as_f64().abs());
        }
        let (peak_re, peak_im) = (peak_re * scale, peak_im * scale);
        let threshold = IMAG_RESIDUE_ERROR * peak_re.max(1.0);
        if !(peak_im <= threshold) {
            return Err(Error::SymmetryViolation {
                residue: peak_im,
                threshold,
            });
        }
        if peak_im > IMAG_RESIDUE_SILENT * peak_re.max(1.0) {
            log::warn!("discarding imaginary residue {peak_im:.3e} of inverse transform");
        }

        let plane = shape.grid().len();
        let channels = shape.channels;
        let scale = T::of_f64(scale);
        let mut out = vec![T::zero(); shape.len()];
        for (g, px) in out.chunks_exact_mut(channels).enumerate() {
            for (c, v) in px.iter_mut().enumerate() {
                *v = data[c * plane + g].re * scale;
            }
        }
        Ok((shape, out))
    }
}

/// Forward DFT of `clip` along `axes`, each channel independently.
pub fn dft_nd<T: Sample>(clip: &VideoClip<T>, axes: AxisSet) -> Spectrum<T> {
    DftEngine::default().forward(clip, axes)
}

/// Inverse DFT along `axes` with `1/N` per axis; the (small) imaginary part
/// is discarded.
pub fn idft_nd<T: Sample>(spec: Spectrum<T>, axes: AxisSet) -> Result<VideoClip<T>> {
    DftEngine::default().inverse(spec, axes)
}
