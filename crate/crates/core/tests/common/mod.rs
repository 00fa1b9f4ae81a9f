//! Test-only oracles and fixtures. Nothing here calls into the transform
//! engine of the library.
#![allow(dead_code)]

use std::f64::consts::PI;

use freqaug::{ClipShape, Sample, ValueRange, VideoClip};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn shape(t: usize, h: usize, w: usize, c: usize) -> ClipShape {
    ClipShape::new(t, h, w, c).unwrap()
}

/// Uniform `[0, 1)` samples.
pub fn random_clip<T: Sample>(shape: ClipShape, seed: u64) -> VideoClip<T> {
    let mut r = rng(seed);
    VideoClip::from_fn(shape, ValueRange::Unit, |_, _, _, _| T::of_f64(r.random::<f64>())).unwrap()
}

/// One random frame repeated `T` times.
pub fn static_clip<T: Sample>(shape: ClipShape, seed: u64) -> VideoClip<T> {
    let frame = random_clip::<T>(ClipShape::new(1, shape.height, shape.width, shape.channels).unwrap(), seed);
    VideoClip::from_fn(shape, ValueRange::Unit, |_, h, w, c| frame.get(0, h, w, c)).unwrap()
}

/// Independent uniform noise at every pixel and frame around 0.5.
pub fn temporal_noise_clip<T: Sample>(shape: ClipShape, seed: u64) -> VideoClip<T> {
    random_clip(shape, seed)
}

fn twiddles(n: usize, sign: f64) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / n as f64))
        .collect()
}

/// Direct 1-D summation `X[k] = sum_n x[n] e^{-2 pi i k n / N}`.
pub fn direct_dft_1d(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let tw = twiddles(n, -1.0);
    (0..n)
        .map(|k| x.iter().enumerate().map(|(j, &v)| v * tw[(k * j) % n]).sum())
        .collect()
}

/// Direct 1-D inverse summation, including `1/N`.
pub fn direct_idft_1d(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let tw = twiddles(n, 1.0);
    (0..n)
        .map(|k| x.iter().enumerate().map(|(j, &v)| v * tw[(k * j) % n]).sum::<Complex64>() / n as f64)
        .collect()
}

/// Direct 3-D summation over `(T, H, W)` for every channel, 64-bit. Returns
/// `[c][kt][kh][kw]` flattened. Cost is `O((T H W)^2)` per channel.
pub fn direct_dft_3d<T: Sample>(clip: &VideoClip<T>) -> Vec<Complex64> {
    let s = clip.shape();
    let (nt, nh, nw) = (s.frames, s.height, s.width);
    let (wt, wh, ww) = (twiddles(nt, -1.0), twiddles(nh, -1.0), twiddles(nw, -1.0));
    let mut out = Vec::with_capacity(s.len());
    let mut plane = vec![0.0f64; nt * nh * nw];
    for c in 0..s.channels {
        for t in 0..nt {
            for h in 0..nh {
                for w in 0..nw {
                    plane[(t * nh + h) * nw + w] = clip.get(t, h, w, c).as_f64();
                }
            }
        }
        for kt in 0..nt {
            for kh in 0..nh {
                for kw in 0..nw {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for t in 0..nt {
                        let ft = wt[(kt * t) % nt];
                        for h in 0..nh {
                            let fth = ft * wh[(kh * h) % nh];
                            let row = &plane[(t * nh + h) * nw..(t * nh + h + 1) * nw];
                            let mut inner = Complex64::new(0.0, 0.0);
                            for (w, &v) in row.iter().enumerate() {
                                inner += ww[(kw * w) % nw] * v;
                            }
                            acc += fth * inner;
                        }
                    }
                    out.push(acc);
                }
            }
        }
    }
    out
}

/// Dense 3-D convolution with a separable kernel given as 1-D taps over the
/// listed axes (`true` = convolve along T, H, W), mirrored borders
/// `d c b | a b c d | c b a`. Evaluated as one full stencil sum per output.
pub fn dense_blur(clip: &VideoClip<f64>, taps: &[f64], axes: [bool; 3]) -> Vec<f64> {
    let s = clip.shape();
    let dims = [s.frames, s.height, s.width];
    let r = (taps.len() / 2) as isize;
    let mirror = |j: isize, n: usize| -> usize {
        let n = n as isize;
        (if j < 0 { -j } else if j >= n { 2 * (n - 1) - j } else { j }) as usize
    };
    let span = |on: bool| if on { -r..=r } else { 0..=0 };
    let weight = |on: bool, o: isize| if on { taps[(o + r) as usize] } else { 1.0 };
    let mut out = vec![0.0; s.len()];
    for t in 0..s.frames {
        for h in 0..s.height {
            for w in 0..s.width {
                for c in 0..s.channels {
                    let mut acc = 0.0;
                    for ot in span(axes[0]) {
                        for oh in span(axes[1]) {
                            for ow in span(axes[2]) {
                                let k = weight(axes[0], ot) * weight(axes[1], oh) * weight(axes[2], ow);
                                let tt = mirror(t as isize + ot, dims[0]);
                                let hh = mirror(h as isize + oh, dims[1]);
                                let ww = mirror(w as isize + ow, dims[2]);
                                acc += k * clip.get(tt, hh, ww, c);
                            }
                        }
                    }
                    out[s.index(t, h, w, c)] = acc;
                }
            }
        }
    }
    out
}

/// Gaussian taps computed independently of the library.
pub fn gaussian_taps(k: usize, sigma: f64) -> Vec<f64> {
    let r = (k / 2) as f64;
    let raw: Vec<f64> = (0..k)
        .map(|i| (-(i as f64 - r).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

pub fn max_abs_diff_c(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Relative error `max|a - b| / max|b|` (absolute when `b` is zero).
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

pub fn as_f64<T: Sample>(clip: &VideoClip<T>) -> Vec<f64> {
    clip.data().iter().map(|v| v.as_f64()).collect()
}

/// Chi-square statistic of a 2x2 contingency table.
pub fn chi_square_2x2(table: [[f64; 2]; 2]) -> f64 {
    let total: f64 = table.iter().flatten().sum();
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let mut chi = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let e = rows[i] * cols[j] / total;
            chi += (table[i][j] - e).powi(2) / e;
        }
    }
    chi
}
