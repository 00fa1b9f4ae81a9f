//! Clip persistence: frame directories and the binary tensor file.
//!
//! Tensor file layout (all integers little-endian):
//!
//! | offset | size | field                                             |
//! |--------|------|---------------------------------------------------|
//! | 0      | 6    | magic `FQCLIP`                                    |
//! | 6      | 2    | format version, `u16` = 1                         |
//! | 8      | 4    | dtype code, `u32`: 1 = f32, 2 = f64               |
//! | 12     | 32   | dims `T, H, W, C`, four `u64`                     |
//! | 44     | 4    | value range tag, `u32`: 0 unit, 1 normalized, 2 raw_u8 |
//! | 48     | ...  | samples, row-major `(T, H, W, C)`, little-endian  |
//!
//! Frame directories hold one portable image per frame (`.pgm` for one
//! channel, `.ppm` for three) named by zero-padded frame number.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, RgbImage};

use crate::error::{Error, Result};
use crate::tensor::{ClipShape, DType, Sample, ValueRange, VideoClip};

pub const TENSOR_MAGIC: &[u8; 6] = b"FQCLIP";
pub const TENSOR_VERSION: u16 = 1;
pub const TENSOR_HEADER_LEN: usize = 48;
pub const TENSOR_EXTENSION: &str = "fqt";

/// Width of zero-padded frame numbers in frame directories.
pub const FRAME_DIGITS: usize = 6;

const FRAME_EXTENSIONS: &[&str] = &["pgm", "ppm", "pnm", "png"];

/// Frames `start, start + stride, ..., start + (num_frames - 1) * stride`
/// taken from the window of `num_frames * stride` consecutive frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sampling {
    pub num_frames: usize,
    pub stride: usize,
    pub start: usize,
}

impl Sampling {
    pub fn new(num_frames: usize, stride: usize, start: usize) -> Result<Self> {
        if num_frames == 0 || stride == 0 {
            return Err(Error::Sampling(format!(
                "T={num_frames}, stride={stride}: both must be positive"
            )));
        }
        Ok(Self {
            num_frames,
            stride,
            start,
        })
    }

    pub fn indices(&self, available: usize) -> Result<Vec<usize>> {
        let window = self.num_frames * self.stride;
        if self.start + window > available {
            return Err(Error::Sampling(format!(
                "{}x{} frames from {} need {} frames, only {available} available",
                self.num_frames,
                self.stride,
                self.start,
                self.start + window
            )));
        }
        Ok((0..self.num_frames)
            .map(|i| self.start + i * self.stride)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    FrameDir,
    TensorFile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipSource {
    pub kind: SourceKind,
    pub path: PathBuf,
    pub sampling: Option<Sampling>,
    /// Range decoded 8-bit frames are scaled to. Tensor files keep theirs.
    pub value_range: ValueRange,
}

impl ClipSource {
    pub fn frame_dir(path: impl Into<PathBuf>) -> Self {
        Self {
            kind: SourceKind::FrameDir,
            path: path.into(),
            sampling: None,
            value_range: ValueRange::Unit,
        }
    }

    pub fn tensor_file(path: impl Into<PathBuf>) -> Self {
        Self {
            kind: SourceKind::TensorFile,
            path: path.into(),
            sampling: None,
            value_range: ValueRange::Unit,
        }
    }

    pub fn with_sampling(mut self, sampling: Option<Sampling>) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_value_range(mut self, range: ValueRange) -> Self {
        self.value_range = range;
        self
    }

    /// Frame directory for directories, tensor file otherwise.
    pub fn detect(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        if path.is_dir() {
            Self::frame_dir(path)
        } else {
            Self::tensor_file(path)
        }
    }
}

/// A clip in the precision it was stored with.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedClip {
    F32(VideoClip<f32>),
    F64(VideoClip<f64>),
}

impl LoadedClip {
    pub fn shape(&self) -> ClipShape {
        match self {
            LoadedClip::F32(c) => c.shape(),
            LoadedClip::F64(c) => c.shape(),
        }
    }

    pub fn dtype(&self) -> DType {
        match self {
            LoadedClip::F32(_) => DType::F32,
            LoadedClip::F64(_) => DType::F64,
        }
    }

    pub fn into_precision<T: Sample>(self) -> VideoClip<T> {
        match self {
            LoadedClip::F32(c) => c.cast(),
            LoadedClip::F64(c) => c.cast(),
        }
    }
}

pub fn encode_tensor<T: Sample>(clip: &VideoClip<T>) -> Vec<u8> {
    let shape = clip.shape();
    let mut out = Vec::with_capacity(TENSOR_HEADER_LEN + shape.len() * T::DTYPE.size());
    out.extend_from_slice(TENSOR_MAGIC);
    out.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
    out.extend_from_slice(&T::DTYPE.code().to_le_bytes());
    for d in shape.dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.extend_from_slice(&clip.value_range().tag().to_le_bytes());
    for &v in clip.data() {
        v.write_le(&mut out);
    }
    out
}

fn decode_payload<T: Sample>(
    shape: ClipShape,
    range: ValueRange,
    payload: &[u8],
    frames: Option<&[usize]>,
) -> Result<VideoClip<T>> {
    let size = T::DTYPE.size();
    let frame_bytes = shape.frame_len() * size;
    let (out_shape, data) = match frames {
        None => (
            shape,
            payload.chunks_exact(size).map(T::read_le).collect::<Vec<_>>(),
        ),
        Some(idx) => {
            let mut data = Vec::with_capacity(idx.len() * shape.frame_len());
            for &f in idx {
                let bytes = &payload[f * frame_bytes..(f + 1) * frame_bytes];
                data.extend(bytes.chunks_exact(size).map(T::read_le));
            }
            (
                ClipShape::new(idx.len(), shape.height, shape.width, shape.channels)?,
                data,
            )
        }
    };
    VideoClip::from_vec(out_shape, data, range)
}

/// Parses a tensor file image, optionally keeping only some frames.
pub fn decode_tensor(bytes: &[u8], path: &Path, sampling: Option<Sampling>) -> Result<LoadedClip> {
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < TENSOR_HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..6] != TENSOR_MAGIC {
        return Err(bad("missing FQCLIP magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u16::from_le_bytes([bytes[6], bytes[7]]);
    if version != TENSOR_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let dtype = DType::from_code(u32_at(8)).ok_or_else(|| bad(format!("dtype code {}", u32_at(8))))?;
    let dims: Vec<usize> = (0..4)
        .map(|i| usize::try_from(u64_at(12 + 8 * i)).map_err(|_| bad("dimension overflow".into())))
        .collect::<Result<_>>()?;
    let shape = ClipShape::new(dims[0], dims[1], dims[2], dims[3]).map_err(|e| bad(e.to_string()))?;
    let range = ValueRange::from_tag(u32_at(44)).ok_or_else(|| bad(format!("value range tag {}", u32_at(44))))?;

    let payload = &bytes[TENSOR_HEADER_LEN..];
    let want = shape
        .len()
        .checked_mul(dtype.size())
        .ok_or_else(|| bad("payload size overflow".into()))?;
    if payload.len() != want {
        return Err(bad(format!(
            "payload holds {} bytes, shape {shape} needs {want}",
            payload.len()
        )));
    }
    let frames = sampling.map(|s| s.indices(shape.frames)).transpose()?;
    Ok(match dtype {
        DType::F32 => LoadedClip::F32(decode_payload(shape, range, payload, frames.as_deref())?),
        DType::F64 => LoadedClip::F64(decode_payload(shape, range, payload, frames.as_deref())?),
    })
}

pub fn write_tensor_file<T: Sample>(path: &Path, clip: &VideoClip<T>) -> Result<()> {
    fs::write(path, encode_tensor(clip)).map_err(|e| Error::io(path, e))
}

pub fn read_tensor_file(path: &Path) -> Result<LoadedClip> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes, path, None)
}

/// Frame files of a directory in frame-number order.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut frames = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if !ext.is_some_and(|e| FRAME_EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        if let Some(n) = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<u64>().ok())
        {
            frames.push((n, path));
        }
    }
    frames.sort();
    Ok(frames.into_iter().map(|(_, p)| p).collect())
}

fn decode_frame(path: &Path) -> Result<(usize, usize, usize, Vec<u8>)> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(match img {
        DynamicImage::ImageLuma8(g) => (h, w, 1, g.into_raw()),
        other => (h, w, 3, other.to_rgb8().into_raw()),
    })
}

fn load_frame_dir<T: Sample>(src: &ClipSource) -> Result<VideoClip<T>> {
    let files = list_frames(&src.path)?;
    if files.is_empty() {
        return Err(Error::io(
            &src.path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no frame images"),
        ));
    }
    let picks = match src.sampling {
        Some(s) => s.indices(files.len())?,
        None => (0..files.len()).collect(),
    };
    let mut dims = None;
    let mut bytes = Vec::new();
    for &i in &picks {
        let (h, w, c, raw) = decode_frame(&files[i])?;
        match dims {
            None => dims = Some((h, w, c)),
            Some(d) if d != (h, w, c) => {
                return Err(Error::InvalidShape(format!(
                    "frame {} is {h}x{w}x{c}, earlier frames are {}x{}x{}",
                    files[i].display(),
                    d.0,
                    d.1,
                    d.2
                )))
            }
            Some(_) => {}
        }
        bytes.extend_from_slice(&raw);
    }
    let (h, w, c) = dims.expect("at least one frame");
    let shape = ClipShape::new(picks.len(), h, w, c)?;
    clip_from_u8(shape, &bytes, src.value_range)
}

/// Scales 8-bit samples to `range`: `Unit` divides by 255, `RawU8` keeps
/// them, `Normalized` divides by 255 then removes each channel's mean.
pub fn clip_from_u8<T: Sample>(shape: ClipShape, bytes: &[u8], range: ValueRange) -> Result<VideoClip<T>> {
    let mut data: Vec<f64> = bytes
        .iter()
        .map(|&b| match range {
            ValueRange::RawU8 => b as f64,
            _ => b as f64 / 255.0,
        })
        .collect();
    if range == ValueRange::Normalized {
        let c = shape.channels;
        let per = (data.len() / c) as f64;
        for ch in 0..c {
            let mean = data.iter().skip(ch).step_by(c).sum::<f64>() / per;
            data.iter_mut().skip(ch).step_by(c).for_each(|v| *v -= mean);
        }
    }
    VideoClip::from_vec(shape, data.into_iter().map(T::of_f64).collect(), range)
}

pub fn load_clip<T: Sample>(src: &ClipSource) -> Result<VideoClip<T>> {
    load_clip_native(src).map(LoadedClip::into_precision)
}

/// Loads keeping a tensor file's stored precision (frame dirs give `f32`).
pub fn load_clip_native(src: &ClipSource) -> Result<LoadedClip> {
    match src.kind {
        SourceKind::TensorFile => {
            let bytes = fs::read(&src.path).map_err(|e| Error::io(&src.path, e))?;
            decode_tensor(&bytes, &src.path, src.sampling)
        }
        SourceKind::FrameDir => load_frame_dir(src).map(LoadedClip::F32),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SaveFormat {
    /// Lossless 8-bit frames; only for unit and raw_u8 clips.
    FrameDir,
    TensorFile,
    /// 8-bit frames after mapping the clip's min to 0 and max to 255.
    DisplayRescaled,
}

impl std::str::FromStr for SaveFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frames" | "frame_dir" => Ok(SaveFormat::FrameDir),
            "tensor" | "tensor_file" => Ok(SaveFormat::TensorFile),
            "display" | "display_rescaled" => Ok(SaveFormat::DisplayRescaled),
            other => Err(Error::Config(format!("unknown output format `{other}`"))),
        }
    }
}

/// Bytes of a clip as 8-bit frames, `(T, H, W, C)` order.
pub fn quantize<T: Sample>(clip: &VideoClip<T>, format: SaveFormat) -> Result<Vec<u8>> {
    let to_byte = |v: f64| v.round().clamp(0.0, 255.0) as u8;
    match format {
        SaveFormat::TensorFile => Err(Error::Config("tensor files are not quantized".into())),
        SaveFormat::FrameDir => match clip.value_range() {
            ValueRange::Unit => Ok(clip.data().iter().map(|v| to_byte(v.as_f64() * 255.0)).collect()),
            ValueRange::RawU8 => Ok(clip.data().iter().map(|v| to_byte(v.as_f64())).collect()),
            ValueRange::Normalized => Err(Error::Config(
                "normalized clips cannot be stored as 8-bit frames; use tensor or display output".into(),
            )),
        },
        SaveFormat::DisplayRescaled => {
            let (lo, hi) = clip.min_max();
            let (lo, hi) = (lo.as_f64(), hi.as_f64());
            if !(hi > lo) {
                return Ok(vec![128; clip.data().len()]);
            }
            Ok(clip
                .data()
                .iter()
                .map(|v| to_byte((v.as_f64() - lo) / (hi - lo) * 255.0))
                .collect())
        }
    }
}

pub fn frame_file_name(index: usize, channels: usize) -> String {
    let ext = if channels == 1 { "pgm" } else { "ppm" };
    format!("{index:0width$}.{ext}", width = FRAME_DIGITS)
}

fn write_frames(dir: &Path, shape: ClipShape, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (w, h) = (shape.width as u32, shape.height as u32);
    for (t, frame) in bytes.chunks_exact(shape.frame_len()).enumerate() {
        let path = dir.join(frame_file_name(t, shape.channels));
        let saved = if shape.channels == 1 {
            GrayImage::from_raw(w, h, frame.to_vec()).expect("frame size").save(&path)
        } else {
            RgbImage::from_raw(w, h, frame.to_vec()).expect("frame size").save(&path)
        };
        saved.map_err(|source| Error::Image { path, source })?;
    }
    Ok(())
}

/// Writes `clip` to `dst`: a file path for tensor output, a directory for
/// frame output.
pub fn save_clip<T: Sample>(clip: &VideoClip<T>, dst: &Path, format: SaveFormat) -> Result<()> {
    match format {
        SaveFormat::TensorFile => write_tensor_file(dst, clip),
        _ => write_frames(dst, clip.shape(), &quantize(clip, format)?),
    }
}

pub fn save_gray(img: &GrayImage, path: &Path) -> Result<()> {
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}
