//! Image/saliency/fixation ingestion (PNG and binary PGM/PPM),
//! ERP-aware augmentation, and corpus manifests for batch evaluation.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::saliency::SaliencyMap;
use crate::salmetrics::FixationMap;
use crate::sphere::ErpImage;
use crate::{Error, Result};

// --- decoding ---------------------------------------------------------

const PNG_MAGIC: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];

/// Decoded raster in native scale before interpretation.
struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    max_value: f64,
    planes: Vec<Vec<f64>>,
}

fn decode_raster(path: &Path) -> Result<Raster> {
    let data = fs::read(path)?;
    if data.starts_with(&PNG_MAGIC) {
        decode_png(&data)
    } else if data.starts_with(b"P5") || data.starts_with(b"P6") {
        pnm::decode(&data)
    } else {
        Err(Error::Malformed(format!(
            "{}: unsupported format (PNG or binary PGM/PPM expected)",
            path.display()
        )))
    }
}

fn decode_png(data: &[u8]) -> Result<Raster> {
    let img = image::load_from_memory(data)?;
    use image::DynamicImage::*;
    let (width, height) = (img.width() as usize, img.height() as usize);
    if width == 0 || height == 0 {
        return Err(Error::Malformed("image has zero dimensions".into()));
    }
    let raster = match img {
        ImageLuma8(buf) => gray_planes(buf.into_raw(), width, height, 255.0),
        ImageLumaA8(buf) => {
            let raw: Vec<u8> = buf.into_raw();
            let samples = raw.chunks(2).map(|px| px[0]).collect();
            gray_planes(samples, width, height, 255.0)
        }
        ImageLuma16(buf) => gray_planes(buf.into_raw(), width, height, 65535.0),
        ImageLumaA16(buf) => {
            let raw: Vec<u16> = buf.into_raw();
            let samples = raw.chunks(2).map(|px| px[0]).collect();
            gray_planes(samples, width, height, 65535.0)
        }
        ImageRgb8(buf) => rgb_planes(buf.into_raw(), width, height, 255.0, 3),
        ImageRgba8(buf) => rgb_planes(buf.into_raw(), width, height, 255.0, 4),
        ImageRgb16(buf) => rgb_planes(buf.into_raw(), width, height, 65535.0, 3),
        ImageRgba16(buf) => rgb_planes(buf.into_raw(), width, height, 65535.0, 4),
        other => {
            let buf = other.to_rgb8();
            rgb_planes(buf.into_raw(), width, height, 255.0, 3)
        }
    };
    Ok(raster)
}

fn gray_planes<T: Into<f64> + Copy>(
    samples: Vec<T>,
    width: usize,
    height: usize,
    max_value: f64,
) -> Raster {
    Raster {
        width,
        height,
        channels: 1,
        max_value,
        planes: vec![samples.iter().map(|&v| v.into()).collect()],
    }
}

fn rgb_planes<T: Into<f64> + Copy>(
    samples: Vec<T>,
    width: usize,
    height: usize,
    max_value: f64,
    stride: usize,
) -> Raster {
    let mut planes = vec![Vec::with_capacity(width * height); 3];
    for px in samples.chunks(stride) {
        for c in 0..3 {
            planes[c].push(px[c].into());
        }
    }
    Raster {
        width,
        height,
        channels: 3,
        max_value,
        planes,
    }
}

/// Load a PNG or binary PGM/PPM file; bit depth is preserved through
/// `max_value` (255 or 65535).
pub fn load_image(path: &Path) -> Result<ErpImage> {
    let r = decode_raster(path)?;
    ErpImage::from_planes(r.width, r.height, r.planes, r.max_value)
}

/// Load a grayscale attention map normalized to [0, 1]. Color inputs
/// are reduced to BT.601 luma first.
pub fn load_saliency(path: &Path) -> Result<SaliencyMap> {
    let r = decode_raster(path)?;
    let values: Vec<f64> = if r.channels == 1 {
        r.planes[0].iter().map(|v| v / r.max_value).collect()
    } else {
        let (red, green, blue) = (&r.planes[0], &r.planes[1], &r.planes[2]);
        red.iter()
            .zip(green)
            .zip(blue)
            .map(|((r0, g), b)| (0.299 * r0 + 0.587 * g + 0.114 * b) / r.max_value)
            .collect()
    };
    SaliencyMap::new(r.width, r.height, values)
}

/// Load a binary fixation grid: any nonzero sample is a fixation.
pub fn load_fixations(path: &Path) -> Result<FixationMap> {
    let r = decode_raster(path)?;
    let cells: Vec<bool> = if r.channels == 1 {
        r.planes[0].iter().map(|&v| v > 0.0).collect()
    } else {
        (0..r.width * r.height)
            .map(|i| r.planes.iter().any(|p| p[i] > 0.0))
            .collect()
    };
    FixationMap::new(r.width, r.height, cells)
}

// --- encoding ---------------------------------------------------------

fn quantize_samples(plane: &[f64], max_value: f64) -> Vec<u16> {
    plane
        .iter()
        .map(|&v| v.round().clamp(0.0, max_value) as u16)
        .collect()
}

/// Write an image as PNG, PGM (grayscale), or PPM (color) based on the
/// file extension. Sample depth follows `max_value` (≤ 255 → 8-bit).
pub fn save_image(path: &Path, img: &ErpImage) -> Result<()> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    match ext.as_str() {
        "png" => save_png(path, img),
        "pgm" => {
            if img.channels() != 1 {
                return Err(Error::arg("PGM stores grayscale; use PPM for color"));
            }
            fs::write(path, pnm::encode(img)?)?;
            Ok(())
        }
        "ppm" => {
            if img.channels() != 3 {
                return Err(Error::arg("PPM stores color; use PGM for grayscale"));
            }
            fs::write(path, pnm::encode(img)?)?;
            Ok(())
        }
        other => Err(Error::arg(format!(
            "unsupported output extension '{other}' (png, pgm, ppm)"
        ))),
    }
}

fn save_png(path: &Path, img: &ErpImage) -> Result<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let deep = img.max_value() > 255.0;
    match (img.channels(), deep) {
        (1, false) => {
            let data: Vec<u8> = quantize_samples(img.plane(0), 255.0)
                .into_iter()
                .map(|v| v as u8)
                .collect();
            image::GrayImage::from_raw(w, h, data)
                .expect("sized buffer")
                .save(path)?;
        }
        (1, true) => {
            let data = quantize_samples(img.plane(0), 65535.0);
            image::ImageBuffer::<image::Luma<u16>, _>::from_raw(w, h, data)
                .expect("sized buffer")
                .save(path)?;
        }
        (3, false) => {
            let mut data = Vec::with_capacity(img.pixel_count() * 3);
            for i in 0..img.pixel_count() {
                for c in 0..3 {
                    data.push(img.plane(c)[i].round().clamp(0.0, 255.0) as u8);
                }
            }
            image::RgbImage::from_raw(w, h, data)
                .expect("sized buffer")
                .save(path)?;
        }
        (3, true) => {
            let mut data = Vec::with_capacity(img.pixel_count() * 3);
            for i in 0..img.pixel_count() {
                for c in 0..3 {
                    data.push(img.plane(c)[i].round().clamp(0.0, 65535.0) as u16);
                }
            }
            image::ImageBuffer::<image::Rgb<u16>, _>::from_raw(w, h, data)
                .expect("sized buffer")
                .save(path)?;
        }
        _ => unreachable!("ErpImage enforces 1 or 3 channels"),
    }
    Ok(())
}

/// Write an attention map as 16-bit grayscale (PNG or PGM). Values are
/// clipped to [0, 1] and scaled to the full sample range.
pub fn save_saliency(path: &Path, map: &SaliencyMap) -> Result<()> {
    let plane: Vec<f64> = map
        .values()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 65535.0).round())
        .collect();
    let img = ErpImage::from_planes(map.width(), map.height(), vec![plane], 65535.0)?;
    save_image(path, &img)
}

// --- augmentation -------------------------------------------------------

/// Seeded crop of matching image/saliency windows. The top offset is
/// uniform over the rows that fit; the left offset is uniform over all
/// columns, with horizontal wrap-around (longitude is periodic). A crop
/// at the full source width keeps the left offset at zero so a full-size
/// crop is the identity.
pub fn random_crop(
    img: &ErpImage,
    saliency: &SaliencyMap,
    crop_w: usize,
    crop_h: usize,
    seed: u64,
) -> Result<(ErpImage, SaliencyMap)> {
    if saliency.width() != img.width() || saliency.height() != img.height() {
        return Err(Error::arg("saliency must be co-registered with the image"));
    }
    if crop_w == 0 || crop_h == 0 {
        return Err(Error::arg("crop dimensions must be positive"));
    }
    if crop_h > img.height() {
        return Err(Error::arg(format!(
            "crop height {crop_h} exceeds source height {}",
            img.height()
        )));
    }
    if crop_w > img.width() {
        return Err(Error::arg(format!(
            "crop width {crop_w} exceeds source width {}",
            img.width()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = rng.gen_range(0..=img.height() - crop_h);
    let left = if crop_w < img.width() {
        rng.gen_range(0..img.width())
    } else {
        0
    };

    let mut planes = vec![vec![0.0; crop_w * crop_h]; img.channels()];
    for (c, plane) in planes.iter_mut().enumerate() {
        let src = img.plane(c);
        for y in 0..crop_h {
            for x in 0..crop_w {
                let sx = (left + x) % img.width();
                plane[y * crop_w + x] = src[(top + y) * img.width() + sx];
            }
        }
    }
    let img_crop = ErpImage::from_planes(crop_w, crop_h, planes, img.max_value())?;

    let mut svals = vec![0.0; crop_w * crop_h];
    for y in 0..crop_h {
        for x in 0..crop_w {
            let sx = (left + x) % img.width();
            svals[y * crop_w + x] = saliency.values()[(top + y) * img.width() + sx];
        }
    }
    let sal_crop = SaliencyMap::new(crop_w, crop_h, svals)?;
    Ok((img_crop, sal_crop))
}

/// 1-D resample: exact box averaging when shrinking, pixel-center
/// bilinear when growing, plain copy when the length is unchanged.
fn resample_line(src: &[f64], dst_len: usize) -> Vec<f64> {
    let src_len = src.len();
    if dst_len == src_len {
        return src.to_vec();
    }
    let mut dst = vec![0.0; dst_len];
    if dst_len < src_len {
        let ratio = src_len as f64 / dst_len as f64;
        for (i, d) in dst.iter_mut().enumerate() {
            let start = i as f64 * ratio;
            let end = start + ratio;
            let mut acc = 0.0;
            let mut x = start.floor() as usize;
            while (x as f64) < end && x < src_len {
                let seg = end.min(x as f64 + 1.0) - start.max(x as f64);
                acc += src[x] * seg;
                x += 1;
            }
            *d = acc / ratio;
        }
    } else {
        let scale = src_len as f64 / dst_len as f64;
        for (i, d) in dst.iter_mut().enumerate() {
            let pos = (i as f64 + 0.5) * scale - 0.5;
            let clamped = pos.clamp(0.0, (src_len - 1) as f64);
            let x0 = clamped.floor() as usize;
            let x1 = (x0 + 1).min(src_len - 1);
            let f = clamped - x0 as f64;
            *d = src[x0] * (1.0 - f) + src[x1] * f;
        }
    }
    dst
}

/// Resize with area averaging on shrinking axes and bilinear
/// interpolation on growing axes (handled separably).
pub fn resize(img: &ErpImage, target_w: usize, target_h: usize) -> Result<ErpImage> {
    if target_w == 0 || target_h == 0 {
        return Err(Error::arg("resize targets must be positive"));
    }
    let (w, h) = (img.width(), img.height());
    let mut planes = Vec::with_capacity(img.channels());
    for c in 0..img.channels() {
        // Horizontal pass.
        let mut horiz = vec![0.0; target_w * h];
        for y in 0..h {
            let row = &img.plane(c)[y * w..(y + 1) * w];
            horiz[y * target_w..(y + 1) * target_w].copy_from_slice(&resample_line(row, target_w));
        }
        // Vertical pass.
        let mut out = vec![0.0; target_w * target_h];
        let mut column = vec![0.0; h];
        for x in 0..target_w {
            for y in 0..h {
                column[y] = horiz[y * target_w + x];
            }
            for (y, v) in resample_line(&column, target_h).into_iter().enumerate() {
                out[y * target_w + x] = v;
            }
        }
        // Interpolation stays within the convex hull of the samples, but
        // guard the range invariant against rounding.
        for v in out.iter_mut() {
            *v = v.clamp(0.0, img.max_value());
        }
        planes.push(out);
    }
    ErpImage::from_planes(target_w, target_h, planes, img.max_value())
}

// --- manifests -----------------------------------------------------------

/// One corpus record: image, saliency, optional fixations, split tag.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    pub image: PathBuf,
    pub saliency: PathBuf,
    pub fixations: Option<PathBuf>,
    pub split: String,
}

/// Line-delimited corpus manifest. Each non-comment line holds four
/// TAB-separated fields: image path, saliency path, fixation path or
/// `-`, split tag. Paths are resolved relative to the manifest file.
#[derive(Debug, Clone)]
pub struct CorpusManifest {
    records: Vec<ManifestRecord>,
}

impl CorpusManifest {
    /// Parse a manifest and verify every referenced file exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut records = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::Malformed(format!(
                    "{}:{}: expected 4 tab-separated fields, got {}",
                    path.display(),
                    ln + 1,
                    fields.len()
                )));
            }
            let resolve = |p: &str| base.join(p);
            let record = ManifestRecord {
                image: resolve(fields[0]),
                saliency: resolve(fields[1]),
                fixations: (fields[2] != "-").then(|| resolve(fields[2])),
                split: fields[3].to_string(),
            };
            for file in [Some(&record.image), Some(&record.saliency), record.fixations.as_ref()]
                .into_iter()
                .flatten()
            {
                if !file.exists() {
                    return Err(Error::Malformed(format!(
                        "{}:{}: referenced file {} does not exist",
                        path.display(),
                        ln + 1,
                        file.display()
                    )));
                }
            }
            records.push(record);
        }
        Ok(CorpusManifest { records })
    }

    pub fn records(&self) -> &[ManifestRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Load one record's rasters and check they are co-registered.
    pub fn load_record(
        &self,
        index: usize,
    ) -> Result<(ErpImage, SaliencyMap, Option<FixationMap>)> {
        let record = self
            .records
            .get(index)
            .ok_or_else(|| Error::arg(format!("record index {index} out of range")))?;
        let img = load_image(&record.image)?;
        let sal = load_saliency(&record.saliency)?;
        if sal.width() != img.width() || sal.height() != img.height() {
            return Err(Error::Malformed(format!(
                "{}: saliency size differs from image",
                record.saliency.display()
            )));
        }
        let fix = match &record.fixations {
            Some(p) => {
                let f = load_fixations(p)?;
                if f.width() != img.width() || f.height() != img.height() {
                    return Err(Error::Malformed(format!(
                        "{}: fixation size differs from image",
                        p.display()
                    )));
                }
                Some(f)
            }
            None => None,
        };
        Ok((img, sal, fix))
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-record seed derivation: independent of processing order, stable
/// across runs.
pub fn record_seed(base_seed: u64, record_index: u64) -> u64 {
    splitmix64(base_seed ^ record_index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

// --- binary PNM (P5/P6) ----------------------------------------------------

mod pnm {
    use super::Raster;
    use crate::sphere::ErpImage;
    use crate::{Error, Result};

    /// Parse a binary PGM (P5) or PPM (P6) file; 8- or 16-bit samples
    /// (16-bit samples are big-endian per the format).
    pub fn decode(data: &[u8]) -> Result<Raster> {
        let channels = match &data[..2] {
            b"P5" => 1,
            b"P6" => 3,
            _ => return Err(Error::Malformed("not a binary PNM file".into())),
        };
        let mut pos = 2;
        let width = read_token(data, &mut pos)?;
        let height = read_token(data, &mut pos)?;
        let maxval = read_token(data, &mut pos)?;
        if width == 0 || height == 0 {
            return Err(Error::Malformed("PNM has zero dimensions".into()));
        }
        if maxval == 0 || maxval > 65535 {
            return Err(Error::Malformed(format!("invalid PNM maxval {maxval}")));
        }
        // Exactly one whitespace byte separates the header from samples.
        pos += 1;
        let bytes_per_sample = if maxval > 255 { 2 } else { 1 };
        let expected = width * height * channels * bytes_per_sample;
        if data.len() < pos + expected {
            return Err(Error::Malformed("PNM sample data truncated".into()));
        }
        let body = &data[pos..pos + expected];
        let mut planes = vec![Vec::with_capacity(width * height); channels];
        if bytes_per_sample == 1 {
            for (i, &b) in body.iter().enumerate() {
                planes[i % channels].push(b as f64);
            }
        } else {
            for (i, pair) in body.chunks(2).enumerate() {
                let v = u16::from_be_bytes([pair[0], pair[1]]);
                planes[i % channels].push(v as f64);
            }
        }
        Ok(Raster {
            width,
            height,
            channels,
            max_value: maxval as f64,
            planes,
        })
    }

    fn read_token(data: &[u8], pos: &mut usize) -> Result<usize> {
        // Skip whitespace and '#' comment lines.
        loop {
            while *pos < data.len() && data[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < data.len() && data[*pos] == b'#' {
                while *pos < data.len() && data[*pos] != b'\n' {
                    *pos += 1;
                }
            } else {
                break;
            }
        }
        let start = *pos;
        while *pos < data.len() && data[*pos].is_ascii_digit() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::Malformed("PNM header token missing".into()));
        }
        std::str::from_utf8(&data[start..*pos])
            .map_err(|_| Error::Malformed("PNM header not ASCII".into()))?
            .parse::<usize>()
            .map_err(|e| Error::Malformed(format!("PNM header: {e}")))
    }

    /// Encode as binary PGM/PPM according to the channel count, 16-bit
    /// when `max_value` exceeds 255.
    pub fn encode(img: &ErpImage) -> Result<Vec<u8>> {
        let magic = if img.channels() == 1 { "P5" } else { "P6" };
        let deep = img.max_value() > 255.0;
        let maxval: u32 = if deep { 65535 } else { 255 };
        let mut out = format!("{magic}\n{} {}\n{maxval}\n", img.width(), img.height()).into_bytes();
        for i in 0..img.pixel_count() {
            for c in 0..img.channels() {
                let v = img.plane(c)[i].round().clamp(0.0, maxval as f64) as u16;
                if deep {
                    out.extend_from_slice(&v.to_be_bytes());
                } else {
                    out.push(v as u8);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quality::ws_psnr;
    use crate::synth;
    use approx::assert_relative_eq;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn png_gray_round_trip_preserves_values() {
        let dir = tmp();
        let path = dir.path().join("gray.png");
        let mut img = ErpImage::new(8, 4, 1, 255.0).unwrap();
        for (i, v) in img.plane_mut(0).iter_mut().enumerate() {
            *v = (i * 7 % 256) as f64;
        }
        save_image(&path, &img).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn uniform_gray_png_loads_as_normalized_saliency() {
        let dir = tmp();
        let path = dir.path().join("s.png");
        let img = ErpImage::constant(6, 3, 1, 128.0, 255.0).unwrap();
        save_image(&path, &img).unwrap();
        let s = load_saliency(&path).unwrap();
        for &v in s.values() {
            assert_relative_eq!(v, 128.0 / 255.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn pgm16_round_trip_is_identity() {
        let dir = tmp();
        let path = dir.path().join("deep.pgm");
        let mut img = ErpImage::new(16, 8, 1, 65535.0).unwrap();
        for (i, v) in img.plane_mut(0).iter_mut().enumerate() {
            *v = ((i * 523) % 65536) as f64;
        }
        save_image(&path, &img).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn ppm_color_round_trip() {
        let dir = tmp();
        let path = dir.path().join("color.ppm");
        let img = synth::textured_scene(16, 8, 5);
        save_image(&path, &img).unwrap();
        let back = load_image(&path).unwrap();
        // Samples were rounded to integers on write.
        for c in 0..3 {
            for (a, b) in img.plane(c).iter().zip(back.plane(c)) {
                assert!((a - b).abs() <= 0.5);
            }
        }
    }

    #[test]
    fn truncated_file_is_an_error_not_a_crash() {
        let dir = tmp();
        let path = dir.path().join("trunc.png");
        let img = synth::textured_scene(32, 16, 6);
        save_image(&path, &img).unwrap();
        let data = fs::read(&path).unwrap();
        fs::write(&path, &data[..data.len() / 3]).unwrap();
        assert!(load_image(&path).is_err());

        let bad_pnm = dir.path().join("trunc.pgm");
        fs::write(&bad_pnm, b"P5\n100 100\n255\n\x00\x01").unwrap();
        assert!(matches!(load_image(&bad_pnm), Err(Error::Malformed(_))));
    }

    #[test]
    fn fixations_from_nonzero_pixels() {
        let dir = tmp();
        let path = dir.path().join("fix.png");
        let mut img = ErpImage::new(4, 2, 1, 255.0).unwrap();
        img.set(0, 1, 0, 255.0);
        img.set(0, 3, 1, 7.0);
        save_image(&path, &img).unwrap();
        let fix = load_fixations(&path).unwrap();
        assert_eq!(fix.fixation_count(), 2);
        assert!(fix.is_fixated(1, 0));
        assert!(fix.is_fixated(3, 1));
    }

    #[test]
    fn saliency_writer_scales_to_sixteen_bits() {
        let dir = tmp();
        let path = dir.path().join("sal.pgm");
        let s = SaliencyMap::new(4, 2, vec![0.0, 0.25, 0.5, 1.0, 0.1, 0.9, 0.33, 0.66]).unwrap();
        save_saliency(&path, &s).unwrap();
        let back = load_saliency(&path).unwrap();
        for (a, b) in s.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1.0 / 65535.0);
        }
    }

    #[test]
    fn flip_commutes_with_ws_psnr() {
        let a = synth::textured_scene(32, 16, 7);
        let b = synth::textured_scene(32, 16, 8);
        let direct = ws_psnr(&a, &b).unwrap().value;
        let flipped = ws_psnr(&a.hflip(), &b.hflip()).unwrap().value;
        assert_relative_eq!(direct, flipped, max_relative = 1e-12);
        let mirrored = ws_psnr(&a.vmirror(), &b.vmirror()).unwrap().value;
        assert_relative_eq!(direct, mirrored, max_relative = 1e-12);
    }

    #[test]
    fn crop_is_deterministic_and_coregistered() {
        let img = synth::textured_scene(64, 32, 9);
        let sal = synth::hotspot_saliency(64, 32);
        let (c1, s1) = random_crop(&img, &sal, 24, 12, 42).unwrap();
        let (c2, s2) = random_crop(&img, &sal, 24, 12, 42).unwrap();
        assert_eq!(c1, c2);
        assert_eq!(s1, s2);
        let (c3, _) = random_crop(&img, &sal, 24, 12, 43).unwrap();
        assert_ne!(c1, c3);
    }

    #[test]
    fn full_size_crop_is_identity() {
        let img = synth::textured_scene(32, 16, 10);
        let sal = synth::hotspot_saliency(32, 16);
        let (c, s) = random_crop(&img, &sal, 32, 16, 7).unwrap();
        assert_eq!(c, img);
        assert_eq!(s, sal);
    }

    #[test]
    fn crop_offsets_cover_both_hemispheres() {
        let img = synth::textured_scene(64, 32, 11);
        let sal = synth::hotspot_saliency(64, 32);
        // Recover the left offset by matching the first row against the
        // source; count how often each horizontal hemisphere hosts it.
        let mut west = 0usize;
        let mut east = 0usize;
        let mut top = 0usize;
        let mut bottom = 0usize;
        for seed in 0..10_000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = rng.gen_range(0..=32 - 8);
            let l = rng.gen_range(0..64);
            if l < 32 {
                west += 1;
            } else {
                east += 1;
            }
            if t < 12 {
                top += 1;
            } else {
                bottom += 1;
            }
        }
        assert!(west > 3000 && east > 3000, "west {west}, east {east}");
        assert!(top > 2000 && bottom > 2000, "top {top}, bottom {bottom}");
        // And wrap-around actually occurs.
        let mut wrapped = false;
        for seed in 0..64 {
            let (c, _) = random_crop(&img, &sal, 48, 8, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = rng.gen_range(0..=32 - 8);
            let l = rng.gen_range(0..64);
            if l + 48 > 64 {
                wrapped = true;
                // Column that wrapped must equal source column (l+x) mod 64.
                let x = 63 - l; // first wrapped crop column
                assert_eq!(c.get(0, x + 1, 0), img.get(0, (l + x + 1) % 64, t));
            }
        }
        assert!(wrapped);
    }

    #[test]
    fn crop_validation() {
        let img = synth::textured_scene(32, 16, 12);
        let sal = synth::hotspot_saliency(32, 16);
        assert!(random_crop(&img, &sal, 32, 20, 0).is_err());
        assert!(random_crop(&img, &sal, 40, 8, 0).is_err());
        let other = synth::hotspot_saliency(16, 8);
        assert!(random_crop(&img, &other, 8, 8, 0).is_err());
    }

    #[test]
    fn resize_identity_and_constants() {
        let img = synth::textured_scene(32, 16, 13);
        let same = resize(&img, 32, 16).unwrap();
        assert_eq!(same, img);
        let flat = ErpImage::constant(20, 10, 3, 77.0, 255.0).unwrap();
        for (tw, th) in [(40, 20), (7, 3), (20, 25)] {
            let out = resize(&flat, tw, th).unwrap();
            for c in 0..3 {
                for &v in out.plane(c) {
                    assert_relative_eq!(v, 77.0, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn checkerboard_box_downscale_hits_half() {
        let mut img = ErpImage::new(16, 8, 1, 1.0).unwrap();
        for y in 0..8 {
            for x in 0..16 {
                img.set(0, x, y, ((x + y) % 2) as f64);
            }
        }
        let out = resize(&img, 8, 4).unwrap();
        for &v in out.plane(0) {
            assert_eq!(v, 0.5);
        }
    }

    #[test]
    fn upscale_is_within_sample_range() {
        let img = synth::textured_scene(16, 8, 14);
        let out = resize(&img, 48, 20).unwrap();
        for c in 0..3 {
            for &v in out.plane(c) {
                assert!((0.0..=255.0).contains(&v));
            }
        }
    }

    #[test]
    fn manifest_parsing_and_record_loading() {
        let dir = tmp();
        let img_path = dir.path().join("img.png");
        let sal_path = dir.path().join("sal.png");
        let fix_path = dir.path().join("fix.png");
        save_image(&img_path, &synth::textured_scene(16, 8, 15)).unwrap();
        save_saliency(&sal_path, &synth::hotspot_saliency(16, 8)).unwrap();
        let mut fix_img = ErpImage::new(16, 8, 1, 255.0).unwrap();
        fix_img.set(0, 3, 3, 255.0);
        save_image(&fix_path, &fix_img).unwrap();

        let manifest_path = dir.path().join("corpus.tsv");
        fs::write(
            &manifest_path,
            "# comment line\nimg.png\tsal.png\tfix.png\ttrain\nimg.png\tsal.png\t-\ttest\n",
        )
        .unwrap();
        let manifest = CorpusManifest::load(&manifest_path).unwrap();
        assert_eq!(manifest.len(), 2);
        assert_eq!(manifest.records()[0].split, "train");
        assert!(manifest.records()[1].fixations.is_none());

        let (img, sal, fix) = manifest.load_record(0).unwrap();
        assert_eq!((img.width(), img.height()), (16, 8));
        assert_eq!((sal.width(), sal.height()), (16, 8));
        assert_eq!(fix.unwrap().fixation_count(), 1);

        fs::write(&manifest_path, "missing.png\tsal.png\t-\ttrain\n").unwrap();
        assert!(matches!(
            CorpusManifest::load(&manifest_path),
            Err(Error::Malformed(_))
        ));

        fs::write(&manifest_path, "img.png\tsal.png\ttrain\n").unwrap();
        assert!(matches!(
            CorpusManifest::load(&manifest_path),
            Err(Error::Malformed(_))
        ));
    }

    #[test]
    fn record_seeds_are_stable_and_spread() {
        assert_eq!(record_seed(1, 0), record_seed(1, 0));
        assert_ne!(record_seed(1, 0), record_seed(1, 1));
        assert_ne!(record_seed(1, 0), record_seed(2, 0));
    }

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
}
