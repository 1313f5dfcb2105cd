//! Persistence: tensor and mask binary formats, trace CSV, run-summary
//! JSON, and PPM image ingestion for the inpainting pipeline.
//!
//! Binary layouts (all multi-byte fields little-endian):
//!
//! ```text
//! tensor "MRT1": magic 4 bytes; mode count u32; extents u64 each;
//!                payload f64 each, first index fastest.
//! mask   "MRM1": magic 4 bytes; mode count u32; extents u64 each;
//!                observation count u64; offsets u64 each, strictly
//!                increasing; values f64 each, aligned with offsets.
//! ```
//!
//! The mask stores the tensor shape ahead of the offset list so that a
//! mask file alone fully determines a completion problem. Both formats
//! roundtrip bit-exactly, and readers report failures with the byte
//! offset at which parsing stopped.
//!
//! Images use binary PPM (P6) with maxval 255 or 65535. A color image
//! maps to an H×W×3 tensor with entries value/(2^depth − 1); row y,
//! column x, channel c lands at linear offset y + H·(x + W·c).

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{sample_offsets, substream, STREAM_MASK};
use crate::solver::{IterTrace, SamplingMask, SolveStatus, SolverConfig};
use crate::tensor::{DenseTensor, Shape};

const TENSOR_MAGIC: &[u8; 4] = b"MRT1";
const MASK_MAGIC: &[u8; 4] = b"MRM1";

struct ByteReader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> ByteReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, offset: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.offset;
        if available < n {
            return Err(Error::format(
                self.offset as u64,
                format!("truncated while reading {what}: {} more bytes needed", n - available),
            ));
        }
        let slice = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn expect_magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        let name = String::from_utf8_lossy(magic).into_owned();
        let got = self.take(4, &format!("magic \"{name}\""))?;
        if got != magic {
            return Err(Error::format(0, format!("bad magic: expected \"{name}\", got {got:?}")));
        }
        Ok(())
    }

    fn finish(self, what: &str) -> Result<()> {
        let extra = self.bytes.len() - self.offset;
        if extra > 0 {
            return Err(Error::format(
                self.offset as u64,
                format!("{extra} unexpected trailing bytes after the {what}"),
            ));
        }
        Ok(())
    }

    /// Shared shape header of both binary formats.
    fn shape(&mut self) -> Result<Shape> {
        let ndim = self.u32("mode count")? as usize;
        let extents_offset = self.offset as u64;
        let mut dims = Vec::with_capacity(ndim.min(64));
        for i in 0..ndim {
            let e = self.u64(&format!("extent {}", i + 1))?;
            let e = usize::try_from(e).map_err(|_| {
                Error::format(extents_offset, format!("extent {} does not fit in memory", i + 1))
            })?;
            dims.push(e);
        }
        Shape::new(dims).map_err(|e| Error::format(extents_offset, format!("invalid extents: {e}")))
    }
}

/// Reads an "MRT1" tensor file.
pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor<f64>> {
    let bytes = fs::read(path)?;
    let mut r = ByteReader::new(&bytes);
    r.expect_magic(TENSOR_MAGIC)?;
    let shape = r.shape()?;
    let len = shape.len();
    let payload = r.take(len * 8, "tensor payload")?;
    let data: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    r.finish("tensor payload")?;
    DenseTensor::from_data(shape, data)
}

/// Writes an "MRT1" tensor file.
pub fn write_tensor(path: impl AsRef<Path>, t: &DenseTensor<f64>) -> Result<()> {
    let mut out = Vec::with_capacity(4 + 4 + t.shape().ndim() * 8 + t.data().len() * 8);
    out.extend_from_slice(TENSOR_MAGIC);
    out.extend_from_slice(&(t.shape().ndim() as u32).to_le_bytes());
    for &d in t.shape().dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for &v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads an "MRM1" mask file.
pub fn read_mask(path: impl AsRef<Path>) -> Result<SamplingMask> {
    let bytes = fs::read(path)?;
    let mut r = ByteReader::new(&bytes);
    r.expect_magic(MASK_MAGIC)?;
    let shape = r.shape()?;
    let count = r.u64("observation count")? as usize;
    let body_offset = r.offset as u64;
    let offset_bytes = r.take(count * 8, "mask offsets")?;
    let indices: Vec<usize> = offset_bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")) as usize)
        .collect();
    let value_bytes = r.take(count * 8, "mask values")?;
    let values: Vec<f64> = value_bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    r.finish("mask payload")?;
    SamplingMask::new(shape, indices, values)
        .map_err(|e| Error::format(body_offset, format!("invalid mask: {e}")))
}

/// Writes an "MRM1" mask file.
pub fn write_mask(path: impl AsRef<Path>, mask: &SamplingMask) -> Result<()> {
    let mut out =
        Vec::with_capacity(4 + 4 + mask.shape().ndim() * 8 + 8 + mask.len() * 16);
    out.extend_from_slice(MASK_MAGIC);
    out.extend_from_slice(&(mask.shape().ndim() as u32).to_le_bytes());
    for &d in mask.shape().dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.extend_from_slice(&(mask.len() as u64).to_le_bytes());
    for &i in mask.indices() {
        out.extend_from_slice(&(i as u64).to_le_bytes());
    }
    for &v in mask.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes the iteration trace as CSV with header
/// `iter,objective,rel_change,beta,elapsed_ms,res_1,…,res_N`. Floats are
/// printed with 17 significant digits so reloading them is lossless.
pub fn write_trace_csv(trace: &[IterTrace], n_modes: usize, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("iter,objective,rel_change,beta,elapsed_ms");
    for i in 1..=n_modes {
        out.push_str(&format!(",res_{i}"));
    }
    out.push('\n');
    for rec in trace {
        if rec.residuals.len() != n_modes {
            return Err(Error::dimension(
                format!("{n_modes} residuals"),
                format!("{}", rec.residuals.len()),
            ));
        }
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            rec.iter, rec.objective, rec.rel_change, rec.beta, rec.elapsed_ms
        ));
        for r in &rec.residuals {
            out.push_str(&format!(",{r:.16e}"));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Machine-readable record of one solve, serialized as JSON with fixed
/// keys: `shape`, `ranks` (when known), `sampling_ratio`, `noise_sigma`
/// (when known), `seed` (when known), `config`, `iterations`, `status`,
/// `rel_err`/`nrmse` (only when a ground truth was available), `wall_ms`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub shape: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranks: Option<Vec<usize>>,
    pub sampling_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: SolverConfig,
    pub iterations: usize,
    pub status: SolveStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nrmse: Option<f64>,
    pub wall_ms: f64,
}

/// Writes a run summary as pretty-printed JSON.
pub fn write_summary_json(summary: &RunSummary, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// A color image as an H×W×3 tensor with entries in [0, 1], plus the
/// pixel depth and source it came from.
#[derive(Debug, Clone)]
pub struct ImageTensor {
    pub tensor: DenseTensor<f64>,
    /// Bits per channel sample, 8 or 16.
    pub depth: u8,
    /// Path the image was read from, when it came from a file.
    pub source: Option<String>,
}

impl ImageTensor {
    pub fn new(tensor: DenseTensor<f64>, depth: u8, source: Option<String>) -> Result<Self> {
        if tensor.shape().ndim() != 3 || tensor.shape().dims()[2] != 3 {
            return Err(Error::dimension("HxWx3", tensor.shape().to_string()));
        }
        check_depth(depth)?;
        if tensor.data().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::domain("image entries must lie in [0, 1]"));
        }
        Ok(ImageTensor { tensor, depth, source })
    }

    pub fn height(&self) -> usize {
        self.tensor.shape().dims()[0]
    }

    pub fn width(&self) -> usize {
        self.tensor.shape().dims()[1]
    }
}

fn check_depth(depth: u8) -> Result<()> {
    if depth != 8 && depth != 16 {
        return Err(Error::format(0, format!("unsupported pixel depth {depth}: expected 8 or 16")));
    }
    Ok(())
}

fn max_value(depth: u8) -> u16 {
    if depth == 8 {
        255
    } else {
        65535
    }
}

fn quantize(v: f64, maxval: u16) -> u16 {
    (v.clamp(0.0, 1.0) * maxval as f64).round() as u16
}

/// Converts raster-order samples (row-major pixels, channels interleaved)
/// into an image tensor: entry = sample / (2^depth − 1).
pub fn image_to_tensor(
    samples: &[u16],
    height: usize,
    width: usize,
    depth: u8,
    source: Option<String>,
) -> Result<ImageTensor> {
    check_depth(depth)?;
    if height == 0 || width == 0 {
        return Err(Error::dimension("positive image dimensions", format!("{height}x{width}")));
    }
    if samples.len() != height * width * 3 {
        return Err(Error::dimension(
            format!("{} samples", height * width * 3),
            format!("{}", samples.len()),
        ));
    }
    let maxval = max_value(depth);
    if let Some(&bad) = samples.iter().find(|&&s| s > maxval) {
        return Err(Error::domain(format!("sample {bad} exceeds maxval {maxval}")));
    }
    let scale = 1.0 / maxval as f64;
    let shape = Shape::new(vec![height, width, 3])?;
    let mut data = vec![0.0f64; shape.len()];
    for y in 0..height {
        for x in 0..width {
            for c in 0..3 {
                data[y + height * (x + width * c)] =
                    samples[3 * (y * width + x) + c] as f64 * scale;
            }
        }
    }
    Ok(ImageTensor { tensor: DenseTensor::from_data(shape, data)?, depth, source })
}

/// Converts a tensor back to raster-order samples, clamping entries to
/// [0, 1] and rounding to the nearest representable value. Inverse of
/// [`image_to_tensor`] for tensors it produced.
pub fn tensor_to_pixels(t: &DenseTensor<f64>, depth: u8) -> Result<Vec<u16>> {
    check_depth(depth)?;
    if t.shape().ndim() != 3 || t.shape().dims()[2] != 3 {
        return Err(Error::dimension("HxWx3", t.shape().to_string()));
    }
    let (height, width) = (t.shape().dims()[0], t.shape().dims()[1]);
    let maxval = max_value(depth);
    let mut samples = vec![0u16; height * width * 3];
    for y in 0..height {
        for x in 0..width {
            for c in 0..3 {
                samples[3 * (y * width + x) + c] =
                    quantize(t.data()[y + height * (x + width * c)], maxval);
            }
        }
    }
    Ok(samples)
}

/// Reads a binary PPM (P6) file with maxval 255 or 65535. Header
/// whitespace and `#` comments are tolerated; 16-bit samples are
/// big-endian per the format.
pub fn read_ppm(path: impl AsRef<Path>) -> Result<ImageTensor> {
    let source = path.as_ref().display().to_string();
    let bytes = fs::read(path)?;
    let mut pos = 0usize;

    let magic = header_token(&bytes, &mut pos, "magic")?;
    if magic != b"P6" {
        return Err(Error::format(
            0,
            format!("bad magic: expected \"P6\", got {:?}", String::from_utf8_lossy(magic)),
        ));
    }
    let width = header_usize(&bytes, &mut pos, "width")?;
    let height = header_usize(&bytes, &mut pos, "height")?;
    let maxval_offset = pos as u64;
    let maxval = header_usize(&bytes, &mut pos, "maxval")?;
    let depth = match maxval {
        255 => 8,
        65535 => 16,
        other => {
            return Err(Error::format(
                maxval_offset,
                format!("unsupported maxval {other}: expected 255 or 65535"),
            ))
        }
    };
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::format(pos as u64, "expected single whitespace after maxval"));
    }
    pos += 1;

    let sample_count = height
        .checked_mul(width)
        .and_then(|p| p.checked_mul(3))
        .ok_or_else(|| Error::format(maxval_offset, "image dimensions overflow"))?;
    let bytes_per_sample = if depth == 8 { 1 } else { 2 };
    let need = sample_count * bytes_per_sample;
    let available = bytes.len() - pos;
    if available < need {
        return Err(Error::format(
            pos as u64,
            format!("truncated while reading pixel data: {} more bytes needed", need - available),
        ));
    }
    if available > need {
        return Err(Error::format(
            (pos + need) as u64,
            format!("{} unexpected trailing bytes after the pixel data", available - need),
        ));
    }
    let samples: Vec<u16> = if depth == 8 {
        bytes[pos..].iter().map(|&b| b as u16).collect()
    } else {
        bytes[pos..]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    image_to_tensor(&samples, height, width, depth, Some(source))
}

/// Writes a binary PPM (P6) file in canonical form:
/// `P6\n<width> <height>\n<maxval>\n` followed by raw samples.
pub fn write_ppm(path: impl AsRef<Path>, image: &ImageTensor) -> Result<()> {
    let samples = tensor_to_pixels(&image.tensor, image.depth)?;
    let file = fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write!(w, "P6\n{} {}\n{}\n", image.width(), image.height(), max_value(image.depth))?;
    if image.depth == 8 {
        let raw: Vec<u8> = samples.iter().map(|&s| s as u8).collect();
        w.write_all(&raw)?;
    } else {
        let mut raw = Vec::with_capacity(samples.len() * 2);
        for &s in &samples {
            raw.extend_from_slice(&s.to_be_bytes());
        }
        w.write_all(&raw)?;
    }
    w.flush()?;
    Ok(())
}

fn skip_header_filler(bytes: &[u8], pos: &mut usize) {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        return;
    }
}

fn header_token<'a>(bytes: &'a [u8], pos: &mut usize, what: &str) -> Result<&'a [u8]> {
    skip_header_filler(bytes, pos);
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::format(start as u64, format!("missing {what} in PPM header")));
    }
    Ok(&bytes[start..*pos])
}

fn header_usize(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let start = *pos;
    let token = header_token(bytes, pos, what)?;
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&v| v > 0)
        .ok_or_else(|| {
            Error::format(
                start as u64,
                format!("invalid {what} in PPM header: {:?}", String::from_utf8_lossy(token)),
            )
        })
}

/// How observations are chosen from an image.
#[derive(Debug, Clone, PartialEq)]
pub enum MissingRule {
    /// Keep a uniform fraction of all H·W·3 entries.
    Random { sampling_ratio: f64, seed: u64 },
    /// Keep a uniform fraction of pixel sites; a dropped site loses all
    /// three channels together.
    PixelwiseRandom { sampling_ratio: f64, seed: u64 },
    /// Treat every pixel whose quantized RGB triple equals `color` as
    /// missing in all channels.
    SentinelColor { color: [u16; 3] },
}

/// Builds the observation mask for an image under a missing-data rule.
/// Random rules draw from the mask substream of their seed.
pub fn mask_from_image(image: &ImageTensor, rule: &MissingRule) -> Result<SamplingMask> {
    let h = image.height();
    let w = image.width();
    let sites = h * w;
    let total = sites * 3;
    let data = image.tensor.data();
    let indices: Vec<usize> = match rule {
        MissingRule::Random { sampling_ratio, seed } => {
            check_sr(*sampling_ratio)?;
            let count = ((sampling_ratio * total as f64).round() as usize).clamp(1, total);
            sample_offsets(&mut substream(*seed, STREAM_MASK), total, count)
        }
        MissingRule::PixelwiseRandom { sampling_ratio, seed } => {
            check_sr(*sampling_ratio)?;
            let keep = ((sampling_ratio * sites as f64).round() as usize).clamp(1, sites);
            let kept_sites = sample_offsets(&mut substream(*seed, STREAM_MASK), sites, keep);
            let mut offsets = Vec::with_capacity(keep * 3);
            for c in 0..3 {
                for &s in &kept_sites {
                    offsets.push(s + sites * c);
                }
            }
            offsets
        }
        MissingRule::SentinelColor { color } => {
            let maxval = max_value(image.depth);
            if color.iter().any(|&c| c > maxval) {
                return Err(Error::parameter(
                    "color",
                    format!("component exceeds maxval {maxval}: {color:?}"),
                ));
            }
            let mut kept_sites = Vec::new();
            for s in 0..sites {
                let matches_sentinel =
                    (0..3).all(|c| quantize(data[s + sites * c], maxval) == color[c]);
                if !matches_sentinel {
                    kept_sites.push(s);
                }
            }
            let mut offsets = Vec::with_capacity(kept_sites.len() * 3);
            for c in 0..3 {
                for &s in &kept_sites {
                    offsets.push(s + sites * c);
                }
            }
            offsets
        }
    };
    let values = indices.iter().map(|&off| data[off]).collect();
    SamplingMask::new(image.tensor.shape().clone(), indices, values)
}

fn check_sr(sr: f64) -> Result<()> {
    if !(sr > 0.0 && sr <= 1.0) {
        return Err(Error::parameter("sampling_ratio", format!("must lie in (0, 1], got {sr}")));
    }
    Ok(())
}
