//! Spectrum statistics and log-amplitude renderings.
//!
//! Statistics are computed in `f64` on the full `(T, H, W)` spectrum with
//! amplitudes averaged over channels. Logarithms are natural.

use image::{GrayImage, Luma};

use crate::dft::{AxisSet, DftEngine};
use crate::error::{Error, Result};
use crate::tensor::{GridShape, Sample, VideoClip};

/// Amplitudes are floored here before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-8;

/// Default split point for the temporal spectrum deviation.
pub const DEFAULT_SIGMA_T_THRESHOLD: f64 = 0.05;

/// Channel-averaged (or summed) amplitude spectrum in `f64`.
struct Amplitudes {
    grid: GridShape,
    values: Vec<f64>,
}

fn amplitudes<T: Sample>(clip: &VideoClip<T>, sum_channels: bool) -> Amplitudes {
    let wide: VideoClip<f64> = clip.cast();
    let spec = DftEngine::<f64>::default().forward(&wide, AxisSet::ALL);
    let shape = clip.shape();
    let grid = shape.grid();
    let mut values = vec![0.0; grid.len()];
    for c in 0..shape.channels {
        for (acc, z) in values.iter_mut().zip(spec.channel(c)) {
            *acc += z.norm();
        }
    }
    if !sum_channels {
        let n = shape.channels as f64;
        values.iter_mut().for_each(|v| *v /= n);
    }
    Amplitudes { grid, values }
}

/// Zeroes amplitudes that are rounding noise for the clip's precision.
fn suppress_rounding_noise<T: Sample>(amp: &mut Amplitudes) {
    let peak = amp.values.iter().copied().fold(0.0, f64::max);
    let tol = peak * 64.0 * T::epsilon().as_f64();
    amp.values.iter_mut().filter(|v| **v <= tol).for_each(|v| *v = 0.0);
}

/// Mean over spatial bins of `ln(max(|X|, LOG_FLOOR))`, one value per
/// temporal frequency, natural bin order.
pub fn temporal_profile<T: Sample>(clip: &VideoClip<T>) -> Vec<f64> {
    profile_of(&amplitudes(clip, false))
}

fn profile_of(amp: &Amplitudes) -> Vec<f64> {
    let plane = amp.grid.height * amp.grid.width;
    amp.values
        .chunks_exact(plane)
        .map(|slice| slice.iter().map(|&a| a.max(LOG_FLOOR).ln()).sum::<f64>() / plane as f64)
        .collect()
}

fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Population standard deviation over temporal frequency of the temporal
/// profile. Small values mean energy spread across temporal frequencies.
pub fn sigma_t<T: Sample>(clip: &VideoClip<T>) -> Result<f64> {
    if clip.shape().frames < 2 {
        return Err(Error::UndefinedStatistic(
            "sigma_t needs at least 2 frames".into(),
        ));
    }
    Ok(population_std(&temporal_profile(clip)))
}

/// Bins counted as low frequency by [`lfc_ratio`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LfcTarget {
    /// The zero temporal-frequency plane together with the zero
    /// spatial-frequency column `(k_h, k_w) = (0, 0)`.
    ZeroFrequency,
    All,
    Bins(Vec<(usize, usize, usize)>),
}

impl LfcTarget {
    fn selects(&self, grid: GridShape) -> Result<Vec<bool>> {
        let mut sel = vec![false; grid.len()];
        match self {
            LfcTarget::ZeroFrequency => {
                for t in 0..grid.frames {
                    for h in 0..grid.height {
                        for w in 0..grid.width {
                            sel[grid.index(t, h, w)] = t == 0 || (h == 0 && w == 0);
                        }
                    }
                }
            }
            LfcTarget::All => sel.iter_mut().for_each(|s| *s = true),
            LfcTarget::Bins(bins) => {
                for &(t, h, w) in bins {
                    for (i, n) in [(t, grid.frames), (h, grid.height), (w, grid.width)] {
                        if i >= n {
                            return Err(Error::Index { index: i, len: n });
                        }
                    }
                    sel[grid.index(t, h, w)] = true;
                }
            }
        }
        Ok(sel)
    }
}

/// Share of total spectral amplitude (summed over channels) sitting on the
/// target bins.
pub fn lfc_ratio<T: Sample>(clip: &VideoClip<T>, target: &LfcTarget) -> Result<f64> {
    let mut amp = amplitudes(clip, true);
    suppress_rounding_noise::<T>(&mut amp);
    lfc_of(&amp, target)
}

fn lfc_of(amp: &Amplitudes, target: &LfcTarget) -> Result<f64> {
    let sel = target.selects(amp.grid)?;
    let total: f64 = amp.values.iter().sum();
    if total == 0.0 {
        return Err(Error::UndefinedStatistic(
            "low-frequency ratio of an all-zero clip".into(),
        ));
    }
    let hit: f64 = amp
        .values
        .iter()
        .zip(&sel)
        .filter(|(_, &s)| s)
        .map(|(a, _)| a)
        .sum();
    Ok((hit / total).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumStats {
    pub sigma_t: f64,
    pub lfc_ratio: f64,
    pub temporal_profile: Vec<f64>,
}

/// `sigma_t`, the default-target low-frequency ratio and the temporal
/// profile from a single transform.
pub fn spectrum_stats<T: Sample>(clip: &VideoClip<T>) -> Result<SpectrumStats> {
    if clip.shape().frames < 2 {
        return Err(Error::UndefinedStatistic(
            "sigma_t needs at least 2 frames".into(),
        ));
    }
    let mut amp = amplitudes(clip, true);
    let channels = clip.shape().channels as f64;
    let averaged = Amplitudes {
        grid: amp.grid,
        values: amp.values.iter().map(|v| v / channels).collect(),
    };
    let profile = profile_of(&averaged);
    suppress_rounding_noise::<T>(&mut amp);
    Ok(SpectrumStats {
        sigma_t: population_std(&profile),
        lfc_ratio: lfc_of(&amp, &LfcTarget::ZeroFrequency)?,
        temporal_profile: profile,
    })
}

/// Equal-count grouping of clips ordered by low-frequency ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBinning {
    /// `n_bins + 1` non-decreasing edges: the smallest ratio of each bin,
    /// then the largest ratio overall. Empty bins repeat their neighbour.
    pub bin_edges: Vec<f64>,
    /// Clip ids per bin, ascending by ratio.
    pub bins: Vec<Vec<String>>,
}

impl DatasetBinning {
    pub fn sizes(&self) -> Vec<usize> {
        self.bins.iter().map(Vec::len).collect()
    }

    /// Bin index of every clip, in the order of the input list.
    pub fn membership<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Vec<Option<usize>> {
        let index: std::collections::HashMap<&str, usize> = self
            .bins
            .iter()
            .enumerate()
            .flat_map(|(b, ids)| ids.iter().map(move |id| (id.as_str(), b)))
            .collect();
        ids.into_iter().map(|id| index.get(id).copied()).collect()
    }
}

/// Stable ascending sort by ratio, then contiguous bins whose sizes differ
/// by at most one, larger bins first.
pub fn bin_dataset_by_lfc(stats: &[(String, f64)], n_bins: usize) -> Result<DatasetBinning> {
    if n_bins == 0 {
        return Err(Error::Config("need at least one bin".into()));
    }
    if stats.is_empty() {
        return Err(Error::Config("cannot bin an empty dataset".into()));
    }
    let mut sorted: Vec<&(String, f64)> = stats.iter().collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1));

    let base = sorted.len() / n_bins;
    let extra = sorted.len() % n_bins;
    let mut bins = Vec::with_capacity(n_bins);
    let mut edges = Vec::with_capacity(n_bins + 1);
    let mut at = 0;
    for b in 0..n_bins {
        let size = base + usize::from(b < extra);
        let members = &sorted[at..at + size];
        let lower = members
            .first()
            .map(|m| m.1)
            .unwrap_or_else(|| sorted[at.min(sorted.len() - 1)].1);
        edges.push(lower);
        bins.push(members.iter().map(|m| m.0.clone()).collect());
        at += size;
    }
    edges.push(sorted[sorted.len() - 1].1);
    Ok(DatasetBinning {
        bin_edges: edges,
        bins,
    })
}

/// Fixed-width histogram starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn bin_range(&self, i: usize) -> (f64, f64) {
        (i as f64 * self.bin_width, (i + 1) as f64 * self.bin_width)
    }
}

/// Non-negative values only; non-finite values are skipped.
pub fn histogram(values: &[f64], bin_width: f64) -> Result<Histogram> {
    if !(bin_width > 0.0) {
        return Err(Error::Config(format!("histogram bin width {bin_width} must be > 0")));
    }
    let mut counts = Vec::new();
    for &v in values.iter().filter(|v| v.is_finite()) {
        let i = (v.max(0.0) / bin_width).floor() as usize;
        if counts.len() <= i {
            counts.resize(i + 1, 0);
        }
        counts[i] += 1;
    }
    Ok(Histogram { bin_width, counts })
}

/// Below / above partition at a `sigma_t` threshold (`value < threshold`
/// counts as below).
pub fn split_by_sigma_t(values: &[f64], threshold: f64) -> Vec<bool> {
    values.iter().map(|&v| v < threshold).collect()
}

#[derive(Debug, Clone)]
pub struct SpectrumRendering {
    /// `(k_t, image)` with zero spatial frequency at the image centre.
    pub slices: Vec<(usize, GrayImage)>,
    pub temporal_profile: Vec<f64>,
    /// Bar plot of the temporal profile, one 16 px bar per temporal bin.
    pub profile_plot: GrayImage,
}

fn normalize_to_u8(values: &[f64]) -> Vec<u8> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if !(hi > lo) {
        return vec![0; values.len()];
    }
    values
        .iter()
        .map(|&v| ((v - lo) / (hi - lo) * 255.0).round() as u8)
        .collect()
}

/// Renders `ln(max(|X|, LOG_FLOOR))` for the requested temporal bins (all when
/// `slices` is `None`). All slices share one min-max scale, so bins at the
/// floor are black in every slice; a uniform rendering is all black.
pub fn render_spectrum<T: Sample>(
    clip: &VideoClip<T>,
    slices: Option<&[usize]>,
) -> Result<SpectrumRendering> {
    let mut amp = amplitudes(clip, false);
    let profile = profile_of(&amp);
    suppress_rounding_noise::<T>(&mut amp);
    let g = amp.grid;
    let all: Vec<usize> = (0..g.frames).collect();
    let wanted = slices.unwrap_or(&all);

    if let Some(&kt) = wanted.iter().find(|&&kt| kt >= g.frames) {
        return Err(Error::Index {
            index: kt,
            len: g.frames,
        });
    }
    let plane_len = g.height * g.width;
    let logs: Vec<f64> = wanted
        .iter()
        .flat_map(|&kt| &amp.values[g.index(kt, 0, 0)..g.index(kt, 0, 0) + plane_len])
        .map(|&a| a.max(LOG_FLOOR).ln())
        .collect();
    let bytes = normalize_to_u8(&logs);

    let mut images = Vec::with_capacity(wanted.len());
    for (&kt, plane) in wanted.iter().zip(bytes.chunks_exact(plane_len)) {
        let mut img = GrayImage::new(g.width as u32, g.height as u32);
        for h in 0..g.height {
            for w in 0..g.width {
                let y = (h + g.height / 2) % g.height;
                let x = (w + g.width / 2) % g.width;
                img.put_pixel(x as u32, y as u32, Luma([plane[h * g.width + w]]));
            }
        }
        images.push((kt, img));
    }

    Ok(SpectrumRendering {
        slices: images,
        profile_plot: plot_profile(&profile),
        temporal_profile: profile,
    })
}

fn plot_profile(profile: &[f64]) -> GrayImage {
    const BAR: u32 = 16;
    const HEIGHT: u32 = 64;
    let levels = normalize_to_u8(profile);
    let mut img = GrayImage::new(BAR * profile.len() as u32, HEIGHT);
    for (i, &level) in levels.iter().enumerate() {
        let bar = 1 + (u32::from(level) * (HEIGHT - 1)) / 255;
        for x in i as u32 * BAR..(i as u32 + 1) * BAR - 1 {
            for y in HEIGHT - bar..HEIGHT {
                img.put_pixel(x, y, Luma([255]));
            }
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{ClipShape, ValueRange};

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn binning_examples() {
        let stats: Vec<(String, f64)> = (0..5).map(|i| (format!("c{i}"), i as f64 / 10.0)).collect();
        let one = bin_dataset_by_lfc(&stats, 1).unwrap();
        assert_eq!(one.sizes(), vec![5]);

        let stats = vec![
            ("a".to_string(), 0.1),
            ("b".to_string(), 0.9),
            ("c".to_string(), 0.5),
            ("d".to_string(), 0.3),
        ];
        let two = bin_dataset_by_lfc(&stats, 2).unwrap();
        assert_eq!(two.bins, vec![ids(&["a", "d"]), ids(&["c", "b"])]);
        assert_eq!(two.bin_edges, vec![0.1, 0.5, 0.9]);
        assert_eq!(
            two.membership(["a", "b", "zz"]),
            vec![Some(0), Some(1), None]
        );

        let many: Vec<(String, f64)> = (0..421).map(|i| (i.to_string(), (i * 37 % 421) as f64)).collect();
        assert_eq!(bin_dataset_by_lfc(&many, 2).unwrap().sizes(), vec![211, 210]);
    }

    #[test]
    fn binning_with_more_bins_than_items() {
        let stats = vec![("a".to_string(), 0.2), ("b".to_string(), 0.1)];
        let b = bin_dataset_by_lfc(&stats, 3).unwrap();
        assert_eq!(b.sizes(), vec![1, 1, 0]);
        assert!(b.bin_edges.windows(2).all(|w| w[0] <= w[1]));
        assert!(bin_dataset_by_lfc(&stats, 0).is_err());
        assert!(bin_dataset_by_lfc(&[], 2).is_err());
    }

    #[test]
    fn histogram_counts() {
        let h = histogram(&[0.0, 0.004, 0.011, 0.049, f64::NAN], 0.01).unwrap();
        assert_eq!(h.counts, vec![2, 1, 0, 0, 1]);
        assert!(histogram(&[1.0], 0.0).is_err());
    }

    #[test]
    fn degenerate_statistics() {
        let one_frame = VideoClip::<f32>::new(ClipShape::new(1, 4, 4, 1).unwrap(), 0.3).unwrap();
        assert!(matches!(sigma_t(&one_frame), Err(Error::UndefinedStatistic(_))));
        let zeros = VideoClip::<f32>::new(ClipShape::new(2, 4, 4, 1).unwrap(), 0.0).unwrap();
        assert!(matches!(
            lfc_ratio(&zeros, &LfcTarget::ZeroFrequency),
            Err(Error::UndefinedStatistic(_))
        ));
        assert!(matches!(
            lfc_ratio(&one_frame, &LfcTarget::Bins(vec![(0, 4, 0)])),
            Err(Error::Index { .. })
        ));
    }

    #[test]
    fn constant_clip_renders_single_centre_pixel() {
        let shape = ClipShape::new(4, 6, 8, 3).unwrap();
        let clip = VideoClip::<f32>::new(shape, 0.7).unwrap();
        let r = render_spectrum(&clip, None).unwrap();
        let (kt, img) = &r.slices[0];
        assert_eq!(*kt, 0);
        for (x, y, p) in img.enumerate_pixels() {
            let expect = if (x, y) == (4, 3) { 255 } else { 0 };
            assert_eq!(p.0[0], expect, "pixel ({x}, {y})");
        }
        for (_, img) in &r.slices[1..] {
            assert!(img.pixels().all(|p| p.0[0] == 0));
        }
        assert_eq!(r.profile_plot.width(), 64);
    }

    #[test]
    fn render_rejects_bad_slice() {
        let clip = VideoClip::<f32>::new(ClipShape::new(2, 2, 2, 1).unwrap(), 0.5).unwrap();
        assert!(render_spectrum(&clip, Some(&[2])).is_err());
    }

    #[test]
    fn stats_agree_with_individual_functions() {
        let shape = ClipShape::new(4, 5, 6, 3).unwrap();
        let clip = VideoClip::<f64>::from_fn(shape, ValueRange::Unit, |t, h, w, c| {
            ((t * 7 + h * 11 + w * 13 + c * 3) % 17) as f64 / 16.0
        })
        .unwrap();
        let s = spectrum_stats(&clip).unwrap();
        assert!((s.sigma_t - sigma_t(&clip).unwrap()).abs() < 1e-12);
        assert!((s.lfc_ratio - lfc_ratio(&clip, &LfcTarget::ZeroFrequency).unwrap()).abs() < 1e-12);
        assert_eq!(s.temporal_profile.len(), 4);
    }
}
