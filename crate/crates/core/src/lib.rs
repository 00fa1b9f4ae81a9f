//! Frequency-domain augmentation for video clips.
//!
//! Clips are real `(T, H, W, C)` tensors. The forward transform is the
//! unnormalized multi-dimensional DFT over any subset of the `T`, `H`, `W`
//! axes, channels are transformed independently, and the inverse carries the
//! `1/N` factor of every transformed axis. Filtering multiplies the spectrum
//! by a real mask that is symmetric under index negation, so filtered clips
//! stay real.
//!
//! ```
//! use freqaug::{ClipShape, FreqAug, Preset, ValueRange, VideoClip};
//!
//! let shape = ClipShape::new(8, 16, 16, 3).unwrap();
//! let clip = VideoClip::<f32>::new(shape, 0.5).unwrap();
//! let aug = FreqAug::new(Preset::FreqAugT.config(7));
//! let out = aug.force(&clip, None, &mut freqaug::stream_from_seed(7)).unwrap();
//! // A static clip has no temporal high frequencies.
//! assert!(out.clip.max_abs() < 1e-5);
//! assert_eq!(out.clip.value_range(), ValueRange::Unit);
//! ```

pub mod analytics;
pub mod augment;
pub mod baseline;
pub mod config;
pub mod dft;
pub mod error;
pub mod filters;
pub mod io;
pub mod tensor;

pub use augment::{
    apply_freqaug, apply_two_view, clip_key, stream_for_clip, stream_for_index, stream_from_seed,
    AugOutcome, AugRng, FilterConfig, FreqAug, FreqAugConfig, Preset, TwoViewOutcome,
    ViewSelection,
};
pub use config::ConfigDoc;
pub use dft::{dft_nd, idft_nd, Axis, AxisSet, DftEngine, Engine};
pub use error::{Error, Result};
pub use filters::{AxisFilter, Band, CutoffFrequency, FilterSpec, RandomBand, RandomMaskSpec};
pub use io::{ClipSource, LoadedClip, SaveFormat, Sampling};
pub use tensor::{
    ClipShape, DType, FilterMask, GridShape, MaskKind, Sample, Spectrum, ValueRange, VideoClip,
};
