use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use freqaug::analytics::{lfc_ratio, sigma_t, LfcTarget};
use freqaug::baseline::{gaussian_hpf, GaussianDims, GaussianHpfSpec};
use freqaug::{dft_nd, idft_nd, stream_from_seed, AxisSet, ClipShape, FreqAug, Preset, ValueRange, VideoClip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn clip(t: usize, h: usize, w: usize) -> VideoClip<f32> {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let s = ClipShape::new(t, h, w, 3).unwrap();
    VideoClip::from_fn(s, ValueRange::Unit, |_, _, _, _| r.random::<f32>()).unwrap()
}

fn transforms(c: &mut Criterion) {
    let mut g = c.benchmark_group("dft");
    for (t, hw) in [(8, 112), (8, 224), (16, 112)] {
        let x = clip(t, hw, hw);
        g.throughput(Throughput::Elements(x.data().len() as u64));
        let id = format!("{t}x{hw}x{hw}x3");
        g.bench_with_input(BenchmarkId::new("forward", &id), &x, |b, x| b.iter(|| dft_nd(x, AxisSet::ALL)));
        let spec = dft_nd(&x, AxisSet::ALL);
        g.bench_with_input(BenchmarkId::new("round_trip", &id), &spec, |b, s| {
            b.iter(|| idft_nd(s.clone(), AxisSet::ALL).unwrap())
        });
    }
    g.finish();
}

fn augmentation(c: &mut Criterion) {
    let x = clip(8, 224, 224);
    let mut g = c.benchmark_group("forced_8x224x224x3");
    for preset in [Preset::FreqAugT, Preset::FreqAugSt] {
        let aug = FreqAug::new(preset.config(0));
        g.bench_function(preset.name(), |b| {
            b.iter(|| aug.force(&x, None, &mut stream_from_seed(0)).unwrap())
        });
    }
    let spec = GaussianHpfSpec::new(3, 1.0, GaussianDims::Spatiotemporal3d).unwrap();
    g.bench_function("gaussian_hpf", |b| b.iter(|| gaussian_hpf(&x, &spec).unwrap()));
    g.finish();
}

fn analytics(c: &mut Criterion) {
    let x = clip(16, 112, 112);
    c.bench_function("sigma_t_16x112x112x3", |b| b.iter(|| sigma_t(&x).unwrap()));
    c.bench_function("lfc_ratio_16x112x112x3", |b| {
        b.iter(|| lfc_ratio(&x, &LfcTarget::ZeroFrequency).unwrap())
    });
}

criterion_group!(benches, transforms, augmentation, analytics);
criterion_main!(benches);
