mod common;

use common::*;
use freqaug::baseline::*;
use freqaug::{dft_nd, AxisSet, ValueRange, VideoClip};
use proptest::prelude::*;

fn impulse(t: usize, h: usize, w: usize) -> VideoClip<f64> {
    let s = shape(5, 9, 9, 1);
    VideoClip::from_fn(s, ValueRange::Unit, |a, b, c, _| if (a, b, c) == (t, h, w) { 1.0 } else { 0.0 }).unwrap()
}

#[test]
fn impulse_response_matches_dense_convolution() {
    let taps = gaussian_taps(3, 1.0);
    let positions = [(2, 4, 4), (0, 0, 0), (4, 8, 3), (1, 0, 8)];
    for (dims, axes) in [
        (GaussianDims::Spatiotemporal3d, [true, true, true]),
        (GaussianDims::Spatial2d, [false, true, true]),
    ] {
        let spec = GaussianHpfSpec::new(3, 1.0, dims).unwrap();
        for &(t, h, w) in &positions {
            let x = impulse(t, h, w);
            let blurred = dense_blur(&x, &taps, axes);
            let want: Vec<f64> = x.data().iter().zip(&blurred).map(|(a, b)| a - b).collect();
            let got = gaussian_hpf(&x, &spec).unwrap();
            let err = got.data().iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-6, "{dims:?} at {:?}: {err}", (t, h, w));
        }
    }
    // Interior impulse: centre of the stencil is 1 - g0^3.
    let x = impulse(2, 4, 4);
    let got = gaussian_hpf(&x, &GaussianHpfSpec::new(3, 1.0, GaussianDims::Spatiotemporal3d).unwrap()).unwrap();
    assert!((got.get(2, 4, 4, 0) - (1.0 - taps[1].powi(3))).abs() < 1e-12);
}

#[test]
fn wider_kernel_matches_dense_convolution_f32() {
    let clip = random_clip::<f64>(shape(6, 11, 10, 3), 12);
    let spec = GaussianHpfSpec::new(5, 1.7, GaussianDims::Spatiotemporal3d).unwrap();
    let blurred = dense_blur(&clip, &gaussian_taps(5, 1.7), [true; 3]);
    let got = gaussian_blur(&clip.cast::<f32>(), &spec).unwrap();
    let err = got.data().iter().zip(&blurred).map(|(a, b)| (*a as f64 - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");
}

#[test]
fn degenerate_kernels() {
    let c = VideoClip::<f32>::new(shape(4, 6, 6, 3), 0.7).unwrap();
    let spec = GaussianHpfSpec::new(3, 0.8, GaussianDims::Spatiotemporal3d).unwrap();
    assert!(gaussian_hpf(&c, &spec).unwrap().max_abs() < 1e-6);
    let x = random_clip::<f32>(shape(4, 6, 6, 3), 1);
    let k1 = GaussianHpfSpec::new(1, 0.8, GaussianDims::Spatiotemporal3d).unwrap();
    assert!(gaussian_hpf(&x, &k1).unwrap().data().iter().all(|&v| v == 0.0));
}

#[test]
fn interior_mean_is_near_zero() {
    let clip = random_clip::<f64>(shape(16, 32, 32, 3), 77);
    let spec = GaussianHpfSpec::new(3, 1.0, GaussianDims::Spatiotemporal3d).unwrap();
    let out = gaussian_hpf(&clip, &spec).unwrap();
    for c in 0..3 {
        let mean = out.data().iter().skip(c).step_by(3).sum::<f64>() / (out.data().len() / 3) as f64;
        assert!(mean.abs() < 0.02, "{mean}");
    }
}

#[test]
fn mix_fixed_points() {
    let a = random_clip::<f32>(shape(4, 8, 8, 3), 3);
    let b = random_clip::<f32>(shape(4, 8, 8, 3), 4);
    let out = amplitude_mix_with_lambda(&a, &b, 0.0).unwrap();
    assert!(out.max_abs_diff(&a).unwrap() < 1e-5);
    for lambda in [0.0, 0.3, 0.77, 1.0] {
        let out = amplitude_mix_with_lambda(&a, &a, lambda).unwrap();
        assert!(out.max_abs_diff(&a).unwrap() < 1e-5, "{lambda}");
    }
}

#[test]
fn full_mix_transfers_amplitude() {
    let a = VideoClip::<f32>::new(shape(4, 8, 8, 3), 0.4).unwrap();
    let b = random_clip::<f32>(shape(4, 8, 8, 3), 5);
    let out = amplitude_mix_with_lambda(&a, &b, 1.0).unwrap();
    let (so, sb) = (dft_nd(&out, AxisSet::ALL), dft_nd(&b, AxisSet::ALL));
    let err = so
        .planar()
        .iter()
        .zip(sb.planar())
        .map(|(x, y)| (x.norm() - y.norm()).abs())
        .fold(0.0f32, f32::max);
    assert!(err < 1e-5, "{err}");
}

#[test]
fn random_lambda_is_bounded() {
    let a = random_clip::<f32>(shape(2, 4, 4, 1), 1);
    let b = random_clip::<f32>(shape(2, 4, 4, 1), 2);
    let spec = AmplitudeMixSpec::new(0.4).unwrap();
    let mut r = rng(3);
    for _ in 0..100 {
        let (_, lambda) = amplitude_mix(&a, &b, &spec, &mut r).unwrap();
        assert!((0.0..0.4).contains(&lambda));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hpf_plus_blur_is_identity(t in 3usize..8, h in 3usize..10, w in 3usize..10, seed in any::<u64>(), sigma in 0.3f64..3.0) {
        let clip = random_clip::<f64>(shape(t, h, w, 3), seed);
        let spec = GaussianHpfSpec::new(3, sigma, GaussianDims::Spatiotemporal3d).unwrap();
        let hp = gaussian_hpf(&clip, &spec).unwrap();
        let lp = gaussian_blur(&clip, &spec).unwrap();
        for ((x, a), b) in clip.data().iter().zip(hp.data()).zip(lp.data()) {
            prop_assert!((a + b - x).abs() < 1e-12);
        }
    }

    #[test]
    fn mix_outputs_stay_real(t in 1usize..6, h in 1usize..8, w in 1usize..8, seed in any::<u64>(), lambda in 0.0f64..=1.0) {
        let a = random_clip::<f32>(shape(t, h, w, 3), seed);
        let b = random_clip::<f32>(shape(t, h, w, 3), seed ^ 1);
        prop_assert!(amplitude_mix_with_lambda(&a, &b, lambda).is_ok());
    }
}
