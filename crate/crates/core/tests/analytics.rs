mod common;

use common::*;
use freqaug::analytics::*;
use freqaug::{stream_from_seed, FreqAug, Preset, ValueRange, VideoClip};
use proptest::prelude::*;

/// `sum |X|` over the `k_t = 0` plane and the `(k_h, k_w) = (0, 0)` column,
/// divided by `sum |X|` everywhere, from the direct-summation oracle with
/// channels summed.
fn oracle_lfc(clip: &VideoClip<f64>) -> f64 {
    let s = clip.shape();
    let spec = direct_dft_3d(clip);
    let plane = s.height * s.width;
    let per_channel = s.frames * plane;
    let (mut low, mut total) = (0.0, 0.0);
    for (i, z) in spec.iter().enumerate() {
        let a = z.norm();
        total += a;
        let j = i % per_channel;
        if j < plane || j % plane == 0 {
            low += a;
        }
    }
    low / total
}

#[test]
fn static_clip_has_unit_lfc_ratio() {
    for (t, c) in [(8, 3), (16, 1), (5, 3)] {
        let clip = static_clip::<f32>(shape(t, 12, 14, c), t as u64);
        assert_eq!(lfc_ratio(&clip, &LfcTarget::ZeroFrequency).unwrap(), 1.0);
        let clip = static_clip::<f64>(shape(t, 12, 14, c), t as u64);
        assert_eq!(lfc_ratio(&clip, &LfcTarget::ZeroFrequency).unwrap(), 1.0);
    }
}

#[test]
fn full_target_gives_one() {
    let clip = random_clip::<f32>(shape(4, 5, 6, 3), 1);
    assert_eq!(lfc_ratio(&clip, &LfcTarget::All).unwrap(), 1.0);
    let zero = VideoClip::<f32>::new(shape(2, 2, 2, 1), 0.0).unwrap();
    assert!(matches!(
        lfc_ratio(&zero, &LfcTarget::All),
        Err(freqaug::Error::UndefinedStatistic(_))
    ));
}

#[test]
fn lfc_matches_oracle() {
    for seed in 0..5 {
        let clip = random_clip::<f64>(shape(4, 4, 4, 1), seed);
        let got = lfc_ratio(&clip, &LfcTarget::ZeroFrequency).unwrap();
        assert!((got - oracle_lfc(&clip)).abs() < 1e-10);
    }
    let clip = random_clip::<f64>(shape(3, 5, 4, 3), 9);
    let got = lfc_ratio(&clip, &LfcTarget::ZeroFrequency).unwrap();
    assert!((got - oracle_lfc(&clip)).abs() < 1e-10);
}

#[test]
fn sigma_t_of_static_clip_exceeds_noise() {
    let s = shape(8, 16, 16, 3);
    let still = static_clip::<f32>(s, 1);
    let noise = temporal_noise_clip::<f32>(s, 2);
    let (a, b) = (sigma_t(&still).unwrap(), sigma_t(&noise).unwrap());
    assert!(a > b);
    assert!(b < 0.1 * a, "{b} vs {a}");

    let profile = temporal_profile(&still);
    let floor = LOG_FLOOR.ln();
    assert!(profile[1..].iter().all(|&v| (v - floor).abs() < 1e-9), "{profile:?}");
    assert!(profile[0] > 0.0);

    let noisy_still = VideoClip::<f32>::from_fn(s, ValueRange::Normalized, |t, h, w, c| {
        still.get(t, h, w, c) + 0.5 * (noise.get(t, h, w, c) - 0.5)
    })
    .unwrap();
    assert!(sigma_t(&noisy_still).unwrap() < a);
    assert!(sigma_t(&random_clip::<f32>(shape(1, 4, 4, 1), 0)).is_err());
}

#[test]
fn hpf_filtered_clip_has_zero_lfc() {
    // The spatio-temporal preset rejects both the zero temporal plane and
    // the zero spatial column, which together form the default target.
    let clip = random_clip::<f32>(shape(8, 16, 16, 3), 6);
    let out = FreqAug::new(Preset::FreqAugSt.config(0))
        .force(&clip, None, &mut stream_from_seed(0))
        .unwrap()
        .clip;
    assert_eq!(lfc_ratio(&out, &LfcTarget::ZeroFrequency).unwrap(), 0.0);
}

#[test]
fn binning_examples() {
    let recs = |v: &[f64]| -> Vec<(String, f64)> {
        v.iter().enumerate().map(|(i, &r)| (format!("c{i}"), r)).collect()
    };
    let b = bin_dataset_by_lfc(&recs(&[0.3, 0.1, 0.5, 0.2, 0.9]), 1).unwrap();
    assert_eq!(b.sizes(), vec![5]);

    let b = bin_dataset_by_lfc(&recs(&[0.1, 0.9, 0.5, 0.3]), 2).unwrap();
    assert_eq!(b.bins, vec![vec!["c0", "c3"], vec!["c2", "c1"]]);

    let many: Vec<f64> = (0..421).map(|i| ((i * 7919) % 421) as f64 / 421.0).collect();
    let b = bin_dataset_by_lfc(&recs(&many), 2).unwrap();
    assert_eq!(b.sizes(), vec![211, 210]);
    assert!(bin_dataset_by_lfc(&recs(&many), 0).is_err());
}

#[test]
fn histogram_and_split() {
    let h = histogram(&[0.0, 0.01, 0.049, 0.05, 0.2], 0.05).unwrap();
    assert_eq!(h.counts, vec![3, 1, 0, 0, 1]);
    assert_eq!(split_by_sigma_t(&[0.01, 0.05, 0.2], DEFAULT_SIGMA_T_THRESHOLD), vec![true, false, false]);
}

#[test]
fn renderings() {
    let still = static_clip::<f32>(shape(8, 9, 9, 3), 3);
    let r = render_spectrum(&still, None).unwrap();
    assert_eq!(r.slices.len(), 8);
    for (kt, img) in &r.slices[1..] {
        assert!(img.pixels().all(|p| p.0[0] == 0), "k_t={kt}");
    }
    assert!(r.slices[0].1.pixels().any(|p| p.0[0] > 0));

    let constant = VideoClip::<f32>::new(shape(4, 8, 10, 1), 0.6).unwrap();
    let r = render_spectrum(&constant, Some(&[0])).unwrap();
    let img = &r.slices[0].1;
    let bright: Vec<_> = img.enumerate_pixels().filter(|(_, _, p)| p.0[0] > 0).map(|(x, y, _)| (x, y)).collect();
    assert_eq!(bright, vec![(5, 4)]);

    let clip = random_clip::<f32>(shape(8, 32, 32, 3), 4);
    let filtered = FreqAug::new(Preset::FreqAugSt.config(0))
        .force(&clip, None, &mut stream_from_seed(0))
        .unwrap()
        .clip;
    let r = render_spectrum(&filtered, None).unwrap();
    assert!(r.slices[0].1.pixels().all(|p| p.0[0] == 0));
    assert!(r.slices[1].1.pixels().any(|p| p.0[0] > 0));
    assert_eq!(r.profile_plot.width(), 16 * 8);
    assert!(render_spectrum(&filtered, Some(&[8])).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lfc_is_scale_invariant(t in 2usize..8, h in 1usize..8, w in 1usize..8, seed in any::<u64>(), c in 0.01f64..50.0) {
        let clip = random_clip::<f64>(shape(t, h, w, 3), seed);
        let a = lfc_ratio(&clip, &LfcTarget::ZeroFrequency).unwrap();
        let b = lfc_ratio(&clip.scaled(c), &LfcTarget::ZeroFrequency).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn sigma_t_is_scale_invariant(t in 2usize..8, h in 1usize..8, w in 1usize..8, seed in any::<u64>(), c in 0.5f64..50.0) {
        // Random clips keep every amplitude far above the floor.
        let clip = random_clip::<f64>(shape(t, h, w, 1), seed);
        let a = sigma_t(&clip).unwrap();
        let b = sigma_t(&clip.scaled(c)).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn binning_preserves_ids(ratios in prop::collection::vec(0.0f64..1.0, 1..200), n_bins in 1usize..10) {
        let recs: Vec<(String, f64)> = ratios.iter().enumerate().map(|(i, &r)| (format!("id{i}"), r)).collect();
        let b = bin_dataset_by_lfc(&recs, n_bins).unwrap();
        let mut seen: Vec<&str> = b.bins.iter().flatten().map(String::as_str).collect();
        seen.sort();
        let mut want: Vec<&str> = recs.iter().map(|(id, _)| id.as_str()).collect();
        want.sort();
        prop_assert_eq!(seen, want);
        prop_assert!(b.bin_edges.windows(2).all(|e| e[0] <= e[1]));
        let sizes = b.sizes();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let lookup: std::collections::HashMap<&str, f64> = recs.iter().map(|(i, r)| (i.as_str(), *r)).collect();
        let flat: Vec<f64> = b.bins.iter().flatten().map(|id| lookup[id.as_str()]).collect();
        prop_assert!(flat.windows(2).all(|x| x[0] <= x[1]));
    }
}
