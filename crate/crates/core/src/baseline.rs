//! Comparison filters: Gaussian high-pass (identity minus separable blur) and
//! frequency-domain Amplitude Mix.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dft::{AxisSet, DftEngine};
use crate::error::{Error, Result};
use crate::tensor::{Sample, Spectrum, VideoClip};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianDims {
    /// Kernel over `(T, H, W)`.
    Spatiotemporal3d,
    /// Kernel over `(H, W)` only.
    Spatial2d,
}

impl std::str::FromStr for GaussianDims {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "3d" | "spatiotemporal_3d" => Ok(GaussianDims::Spatiotemporal3d),
            "2d" | "spatial_2d" => Ok(GaussianDims::Spatial2d),
            other => Err(Error::Config(format!("unknown gaussian dims `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianHpfSpec {
    kernel_size: usize,
    sigma: f64,
    dims: GaussianDims,
}

impl GaussianHpfSpec {
    pub fn new(kernel_size: usize, sigma: f64, dims: GaussianDims) -> Result<Self> {
        if kernel_size % 2 == 0 {
            return Err(Error::Config(format!(
                "gaussian kernel size {kernel_size} must be odd and positive"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("gaussian sigma {sigma} must be > 0")));
        }
        Ok(Self {
            kernel_size,
            sigma,
            dims,
        })
    }

    pub fn kernel_size(&self) -> usize {
        self.kernel_size
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dims(&self) -> GaussianDims {
        self.dims
    }

    /// Normalized 1-D taps, length `kernel_size`, summing to 1.
    pub fn taps(&self) -> Vec<f64> {
        let r = (self.kernel_size / 2) as f64;
        let raw: Vec<f64> = (0..self.kernel_size)
            .map(|i| {
                let x = i as f64 - r;
                (-x * x / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / sum).collect()
    }
}

/// Mirror index without repeating the edge sample (`d c b | a b c d | c b a`).
#[inline]
fn reflect(j: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if j < 0 {
        -j
    } else if j >= n {
        2 * (n - 1) - j
    } else {
        j
    };
    r as usize
}

/// Convolves `data` (row-major `(T, H, W, C)` with the given dims) along one
/// axis, described by its length and element stride.
fn convolve_axis<T: Sample>(data: &[T], len: usize, stride: usize, taps: &[T]) -> Vec<T> {
    if taps.len() == 1 {
        return data.to_vec();
    }
    let r = (taps.len() / 2) as isize;
    let block = len * stride;
    let mut out = vec![T::zero(); data.len()];
    for (src, dst) in data.chunks_exact(block).zip(out.chunks_exact_mut(block)) {
        for i in 0..len {
            for s in 0..stride {
                let mut acc = T::zero();
                for (o, &tap) in taps.iter().enumerate() {
                    let j = reflect(i as isize + o as isize - r, len);
                    acc = acc + tap * src[j * stride + s];
                }
                dst[i * stride + s] = acc;
            }
        }
    }
    out
}

/// Separable Gaussian blur with reflective borders.
pub fn gaussian_blur<T: Sample>(clip: &VideoClip<T>, spec: &GaussianHpfSpec) -> Result<VideoClip<T>> {
    let shape = clip.shape();
    let k = spec.kernel_size;
    let axes: &[(usize, usize, &str)] = &[
        (shape.frames, shape.height * shape.width * shape.channels, "T"),
        (shape.height, shape.width * shape.channels, "H"),
        (shape.width, shape.channels, "W"),
    ];
    let axes = match spec.dims {
        GaussianDims::Spatiotemporal3d => axes,
        GaussianDims::Spatial2d => &axes[1..],
    };
    if let Some((len, _, name)) = axes.iter().find(|(len, _, _)| *len < k) {
        return Err(Error::Config(format!(
            "gaussian kernel size {k} exceeds axis {name} of length {len}"
        )));
    }
    let taps: Vec<T> = spec.taps().into_iter().map(T::of_f64).collect();
    let mut data = clip.data().to_vec();
    for &(len, stride, _) in axes {
        data = convolve_axis(&data, len, stride, &taps);
    }
    Ok(VideoClip::from_computed(shape, data, clip.value_range()).with_fps(clip.fps()))
}

/// `clip - blur(clip)`.
pub fn gaussian_hpf<T: Sample>(clip: &VideoClip<T>, spec: &GaussianHpfSpec) -> Result<VideoClip<T>> {
    let blurred = gaussian_blur(clip, spec)?;
    let data = clip
        .data()
        .iter()
        .zip(blurred.data())
        .map(|(&x, &b)| x - b)
        .collect();
    Ok(VideoClip::from_computed(clip.shape(), data, clip.value_range()).with_fps(clip.fps()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeMixSpec {
    eta: f64,
}

impl AmplitudeMixSpec {
    pub fn new(eta: f64) -> Result<Self> {
        if eta > 0.0 && eta <= 1.0 {
            Ok(Self { eta })
        } else {
            Err(Error::Config(format!("amplitude mix eta {eta} outside (0, 1]")))
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Draws `lambda ~ U(0, eta)` and mixes; returns the output and `lambda`.
pub fn amplitude_mix<T: Sample, R: Rng + ?Sized>(
    clip_a: &VideoClip<T>,
    clip_b: &VideoClip<T>,
    spec: &AmplitudeMixSpec,
    rng: &mut R,
) -> Result<(VideoClip<T>, f64)> {
    let lambda = rng.random::<f64>() * spec.eta;
    Ok((amplitude_mix_with_lambda(clip_a, clip_b, lambda)?, lambda))
}

/// Output spectrum has amplitude `(1 - lambda)|A| + lambda|B|` and the phase
/// of `A`. Bins where `A` is numerically zero get phase 0.
pub fn amplitude_mix_with_lambda<T: Sample>(
    clip_a: &VideoClip<T>,
    clip_b: &VideoClip<T>,
    lambda: f64,
) -> Result<VideoClip<T>> {
    if clip_a.shape() != clip_b.shape() {
        return Err(Error::Dimension(format!(
            "amplitude mix of {} and {}",
            clip_a.shape(),
            clip_b.shape()
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Config(format!("mix weight {lambda} outside [0, 1]")));
    }
    let mut engine = DftEngine::default();
    let spec_a = engine.forward(clip_a, AxisSet::ALL);
    let spec_b = engine.forward(clip_b, AxisSet::ALL);

    let peak = spec_a
        .planar()
        .iter()
        .map(|z| z.norm())
        .fold(T::zero(), T::max);
    let phase_floor = peak * T::epsilon() * T::of_f64(64.0);
    let keep = T::of_f64(1.0 - lambda);
    let mix = T::of_f64(lambda);
    let one = Complex::new(T::one(), T::zero());

    let mixed = Spectrum::from_planar(
        clip_a.shape(),
        spec_a
            .planar()
            .iter()
            .zip(spec_b.planar())
            .map(|(a, b)| {
                let amp_a = a.norm();
                let amp = keep * amp_a + mix * b.norm();
                let phase = if amp_a > phase_floor { a / amp_a } else { one };
                phase * amp
            })
            .collect(),
    );
    let (shape, data) = engine.inverse_real(mixed, AxisSet::ALL)?;
    Ok(VideoClip::from_computed(shape, data, clip_a.value_range()).with_fps(clip_a.fps()))
}
