//! Spherical geometry for equirectangular (ERP) rasters: pixel/angle
//! mappings, latitude weights, spherical coordinate channels, and
//! ERP↔cubemap resampling.
//!
//! Conventions, fixed once for the whole crate: latitude is positive
//! towards the top of the raster and spans [−π/2, π/2]; longitude spans
//! [−π, π) with −π at the left edge; angles are evaluated at pixel
//! centers. ERP rasters wrap horizontally (longitude is periodic) and
//! clamp vertically. The 3-D frame is right-handed with +y up and +z at
//! longitude 0, so a unit direction is
//! `(cos lat · sin lon, sin lat, cos lat · cos lon)`.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Planar-channel equirectangular image with real samples in
/// `[0, max_value]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErpImage {
    width: usize,
    height: usize,
    max_value: f64,
    planes: Vec<Vec<f64>>,
}

impl ErpImage {
    /// Zero-filled image. Channel count must be 1 or 3.
    pub fn new(width: usize, height: usize, channels: usize, max_value: f64) -> Result<Self> {
        check_dims(width, height, channels, max_value)?;
        Ok(ErpImage {
            width,
            height,
            max_value,
            planes: vec![vec![0.0; width * height]; channels],
        })
    }

    /// Constant-valued image.
    pub fn constant(
        width: usize,
        height: usize,
        channels: usize,
        value: f64,
        max_value: f64,
    ) -> Result<Self> {
        if !(0.0..=max_value).contains(&value) {
            return Err(Error::arg(format!(
                "constant {value} outside [0, {max_value}]"
            )));
        }
        let mut img = ErpImage::new(width, height, channels, max_value)?;
        for plane in &mut img.planes {
            plane.fill(value);
        }
        Ok(img)
    }

    /// Build from row-major planes; every sample must be finite and in
    /// `[0, max_value]`.
    pub fn from_planes(
        width: usize,
        height: usize,
        planes: Vec<Vec<f64>>,
        max_value: f64,
    ) -> Result<Self> {
        check_dims(width, height, planes.len(), max_value)?;
        for plane in &planes {
            if plane.len() != width * height {
                return Err(Error::arg("plane length does not match dimensions"));
            }
            if plane.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > max_value) {
                return Err(Error::arg(format!(
                    "sample outside [0, {max_value}] or not finite"
                )));
            }
        }
        Ok(ErpImage {
            width,
            height,
            max_value,
            planes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Canonical ERP rasters are twice as wide as tall. Violations are
    /// allowed but flagged here.
    pub fn is_canonical_erp(&self) -> bool {
        self.width == 2 * self.height
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        &self.planes[channel]
    }

    pub fn plane_mut(&mut self, channel: usize) -> &mut [f64] {
        &mut self.planes[channel]
    }

    pub fn get(&self, channel: usize, x: usize, y: usize) -> f64 {
        self.planes[channel][y * self.width + x]
    }

    pub fn set(&mut self, channel: usize, x: usize, y: usize, value: f64) {
        self.planes[channel][y * self.width + x] = value;
    }

    /// Same dimensions, channel count, and peak value.
    pub fn same_shape(&self, other: &ErpImage) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.channels() == other.channels()
            && self.max_value == other.max_value
    }

    /// Mirror left↔right.
    pub fn hflip(&self) -> ErpImage {
        let mut out = self.clone();
        for plane in &mut out.planes {
            for row in plane.chunks_mut(self.width) {
                row.reverse();
            }
        }
        out
    }

    /// Mirror top↔bottom.
    pub fn vmirror(&self) -> ErpImage {
        let mut out = self.clone();
        for (c, plane) in out.planes.iter_mut().enumerate() {
            for y in 0..self.height {
                let src = (self.height - 1 - y) * self.width;
                plane[y * self.width..(y + 1) * self.width]
                    .copy_from_slice(&self.planes[c][src..src + self.width]);
            }
        }
        out
    }
}

fn check_dims(width: usize, height: usize, channels: usize, max_value: f64) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::arg("image dimensions must be positive"));
    }
    if channels != 1 && channels != 3 {
        return Err(Error::arg(format!("channels must be 1 or 3, got {channels}")));
    }
    if !(max_value > 0.0) || !max_value.is_finite() {
        return Err(Error::arg("max_value must be a positive finite number"));
    }
    Ok(())
}

/// Per-row cos(latitude) weights for spherically uniform error metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct LatitudeWeights {
    weights: Vec<f64>,
}

impl LatitudeWeights {
    pub fn get(&self, row: usize) -> f64 {
        self.weights[row]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Latitude/longitude planes evaluated at every pixel center.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalCoordChannels {
    pub width: usize,
    pub height: usize,
    pub latitude: Vec<f64>,
    pub longitude: Vec<f64>,
}

/// Angles at the center of pixel `(u, v)`.
///
/// Row 0 is the top of the raster and maps to the most positive
/// latitude; column 0 maps to longitude −π.
pub fn erp_pixel_to_spherical(
    u: usize,
    v: usize,
    width: usize,
    height: usize,
) -> Result<(f64, f64)> {
    if width == 0 || height == 0 {
        return Err(Error::arg("grid dimensions must be positive"));
    }
    if u >= width || v >= height {
        return Err(Error::arg(format!(
            "pixel ({u}, {v}) outside {width}x{height} grid"
        )));
    }
    Ok(erp_point_to_spherical(u as f64, v as f64, width, height))
}

/// Continuous version of [`erp_pixel_to_spherical`]; `(u, v)` are pixel
/// coordinates where integer values denote pixel centers.
pub fn erp_point_to_spherical(u: f64, v: f64, width: usize, height: usize) -> (f64, f64) {
    let lat = (0.5 - (v + 0.5) / height as f64) * PI;
    let lon = ((u + 0.5) / width as f64) * 2.0 * PI - PI;
    (lat, lon)
}

/// Inverse of [`erp_point_to_spherical`]: continuous pixel coordinates
/// whose center angles are `(lat, lon)`.
pub fn spherical_to_erp_point(lat: f64, lon: f64, width: usize, height: usize) -> (f64, f64) {
    let u = (lon + PI) / (2.0 * PI) * width as f64 - 0.5;
    let v = (0.5 - lat / PI) * height as f64 - 0.5;
    (u, v)
}

/// Unit direction for `(lat, lon)` in the crate's right-handed frame.
pub fn spherical_to_direction(lat: f64, lon: f64) -> [f64; 3] {
    let (sin_lat, cos_lat) = lat.sin_cos();
    let (sin_lon, cos_lon) = lon.sin_cos();
    [cos_lat * sin_lon, sin_lat, cos_lat * cos_lon]
}

/// Angles of a direction vector (need not be normalized).
pub fn direction_to_spherical(dir: [f64; 3]) -> (f64, f64) {
    let [x, y, z] = dir;
    let lat = y.atan2(x.hypot(z));
    let lon = x.atan2(z);
    (lat, lon)
}

/// cos(latitude) of each row center: `w(j) = cos((j + 0.5 − h/2)·π/h)`.
pub fn latitude_weight_map(height: usize) -> Result<LatitudeWeights> {
    if height == 0 {
        return Err(Error::arg("height must be at least 1"));
    }
    let h = height as f64;
    let weights = (0..height)
        .map(|j| ((j as f64 + 0.5 - h / 2.0) * PI / h).cos())
        .collect();
    Ok(LatitudeWeights { weights })
}

/// Two per-pixel planes holding the latitude and longitude of every
/// pixel center.
pub fn spherical_coordinate_channels(width: usize, height: usize) -> Result<SphericalCoordChannels> {
    if width == 0 || height == 0 {
        return Err(Error::arg("grid dimensions must be positive"));
    }
    let mut latitude = vec![0.0; width * height];
    let mut longitude = vec![0.0; width * height];
    for v in 0..height {
        for u in 0..width {
            let (lat, lon) = erp_point_to_spherical(u as f64, v as f64, width, height);
            latitude[v * width + u] = lat;
            longitude[v * width + u] = lon;
        }
    }
    Ok(SphericalCoordChannels {
        width,
        height,
        latitude,
        longitude,
    })
}

/// The six cube faces in the crate's fixed priority order.
///
/// Front looks along +z (longitude 0), Right along +x (longitude +π/2),
/// Back along −z, Left along −x, Top along +y, Bottom along −y. The
/// order breaks ties when an ERP pixel is equidistant to two faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CubeFace {
    Front,
    Right,
    Back,
    Left,
    Top,
    Bottom,
}

impl CubeFace {
    pub const ALL: [CubeFace; 6] = [
        CubeFace::Front,
        CubeFace::Right,
        CubeFace::Back,
        CubeFace::Left,
        CubeFace::Top,
        CubeFace::Bottom,
    ];

    pub fn index(self) -> usize {
        match self {
            CubeFace::Front => 0,
            CubeFace::Right => 1,
            CubeFace::Back => 2,
            CubeFace::Left => 3,
            CubeFace::Top => 4,
            CubeFace::Bottom => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CubeFace::Front => "front",
            CubeFace::Right => "right",
            CubeFace::Back => "back",
            CubeFace::Left => "left",
            CubeFace::Top => "top",
            CubeFace::Bottom => "bottom",
        }
    }

    /// Face basis: (center, right, down) axes of the face plane. A face
    /// point with in-plane coordinates (a, b) ∈ [−1, 1]² lies on the ray
    /// `center + a·right + b·down`.
    fn axes(self) -> ([f64; 3], [f64; 3], [f64; 3]) {
        match self {
            CubeFace::Front => ([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, -1.0, 0.0]),
            CubeFace::Right => ([1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, -1.0, 0.0]),
            CubeFace::Back => ([0.0, 0.0, -1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]),
            CubeFace::Left => ([-1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]),
            CubeFace::Top => ([0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
            CubeFace::Bottom => ([0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]),
        }
    }
}

/// Six square faces sharing one size, channel count, and sample range.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeFaceSet {
    face_size: usize,
    channels: usize,
    max_value: f64,
    // Indexed by CubeFace::index(), then channel, then row-major samples.
    planes: Vec<Vec<Vec<f64>>>,
}

impl CubeFaceSet {
    pub fn new(face_size: usize, channels: usize, max_value: f64) -> Result<Self> {
        if face_size < 2 {
            return Err(Error::arg("face_size must be at least 2"));
        }
        check_dims(face_size, face_size, channels, max_value)?;
        Ok(CubeFaceSet {
            face_size,
            channels,
            max_value,
            planes: vec![vec![vec![0.0; face_size * face_size]; channels]; 6],
        })
    }

    pub fn face_size(&self) -> usize {
        self.face_size
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    pub fn face_plane(&self, face: CubeFace, channel: usize) -> &[f64] {
        &self.planes[face.index()][channel]
    }

    pub fn face_plane_mut(&mut self, face: CubeFace, channel: usize) -> &mut [f64] {
        &mut self.planes[face.index()][channel]
    }

    /// One face as a standalone square image.
    pub fn face_image(&self, face: CubeFace) -> Result<ErpImage> {
        ErpImage::from_planes(
            self.face_size,
            self.face_size,
            self.planes[face.index()].clone(),
            self.max_value,
        )
    }

    /// Assemble a face set from six equally sized square images.
    pub fn from_face_images(faces: &[ErpImage; 6]) -> Result<Self> {
        let size = faces[0].width();
        let channels = faces[0].channels();
        let max_value = faces[0].max_value();
        for f in faces.iter() {
            if f.width() != size || f.height() != size {
                return Err(Error::arg("cube faces must be square and equally sized"));
            }
            if f.channels() != channels || f.max_value() != max_value {
                return Err(Error::arg("cube faces must share channels and max_value"));
            }
        }
        let mut set = CubeFaceSet::new(size, channels, max_value)?;
        for (i, f) in faces.iter().enumerate() {
            for c in 0..channels {
                set.planes[i][c].copy_from_slice(f.plane(c));
            }
        }
        Ok(set)
    }
}

/// Bilinear sample with horizontal wrap-around and vertical clamping —
/// the native addressing mode for ERP rasters.
pub(crate) fn sample_wrap_clamp(plane: &[f64], width: usize, height: usize, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let fx = x - x0;
    let y0f = y.floor();
    let fy = (y - y0f).clamp(0.0, 1.0);

    let w = width as isize;
    let xi = x0 as isize;
    let x0w = xi.rem_euclid(w) as usize;
    let x1w = (xi + 1).rem_euclid(w) as usize;

    let clamp_row = |r: isize| -> usize { r.clamp(0, height as isize - 1) as usize };
    let y0 = clamp_row(y0f as isize);
    let y1 = clamp_row(y0f as isize + 1);

    let v00 = plane[y0 * width + x0w];
    let v10 = plane[y0 * width + x1w];
    let v01 = plane[y1 * width + x0w];
    let v11 = plane[y1 * width + x1w];
    let top = v00 + (v10 - v00) * fx;
    let bot = v01 + (v11 - v01) * fx;
    top + (bot - top) * fy
}

/// Bilinear sample with clamping on both axes (used inside cube faces).
fn sample_clamp(plane: &[f64], width: usize, height: usize, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let fx = (x - x0).clamp(0.0, 1.0);
    let y0 = y.floor();
    let fy = (y - y0).clamp(0.0, 1.0);

    let cx = |c: isize| -> usize { c.clamp(0, width as isize - 1) as usize };
    let cy = |r: isize| -> usize { r.clamp(0, height as isize - 1) as usize };
    let x0i = cx(x0 as isize);
    let x1i = cx(x0 as isize + 1);
    let y0i = cy(y0 as isize);
    let y1i = cy(y0 as isize + 1);

    let v00 = plane[y0i * width + x0i];
    let v10 = plane[y0i * width + x1i];
    let v01 = plane[y1i * width + x0i];
    let v11 = plane[y1i * width + x1i];
    let top = v00 + (v10 - v00) * fx;
    let bot = v01 + (v11 - v01) * fx;
    top + (bot - top) * fy
}

/// Resample an ERP image onto six gnomonic cube faces with a 90° field
/// of view per face.
pub fn erp_to_cubemap(img: &ErpImage, face_size: usize) -> Result<CubeFaceSet> {
    if face_size < 2 {
        return Err(Error::arg("face_size must be at least 2"));
    }
    let mut set = CubeFaceSet::new(face_size, img.channels(), img.max_value())?;
    let n = face_size as f64;
    for face in CubeFace::ALL {
        let (center, right, down) = face.axes();
        for j in 0..face_size {
            let b = 2.0 * (j as f64 + 0.5) / n - 1.0;
            for i in 0..face_size {
                let a = 2.0 * (i as f64 + 0.5) / n - 1.0;
                let dir = [
                    center[0] + a * right[0] + b * down[0],
                    center[1] + a * right[1] + b * down[1],
                    center[2] + a * right[2] + b * down[2],
                ];
                let (lat, lon) = direction_to_spherical(dir);
                let (u, v) = spherical_to_erp_point(lat, lon, img.width(), img.height());
                for c in 0..img.channels() {
                    let val = sample_wrap_clamp(img.plane(c), img.width(), img.height(), u, v);
                    set.face_plane_mut(face, c)[j * face_size + i] = val;
                }
            }
        }
    }
    Ok(set)
}

/// Project six cube faces back onto an ERP raster. Each ERP pixel maps
/// to exactly one face; ties between faces go to the first face in
/// [`CubeFace::ALL`].
pub fn cubemap_to_erp(faces: &CubeFaceSet, width: usize, height: usize) -> Result<ErpImage> {
    if width != 2 * height {
        return Err(Error::arg(format!(
            "ERP output must be 2:1, got {width}x{height}"
        )));
    }
    let mut img = ErpImage::new(width, height, faces.channels(), faces.max_value())?;
    let n = faces.face_size() as f64;
    let size = faces.face_size();
    for v in 0..height {
        for u in 0..width {
            let (lat, lon) = erp_point_to_spherical(u as f64, v as f64, width, height);
            let dir = spherical_to_direction(lat, lon);
            // Pick the face whose center axis has the largest projection.
            let mut best = CubeFace::Front;
            let mut best_score = f64::NEG_INFINITY;
            for face in CubeFace::ALL {
                let (center, _, _) = face.axes();
                let score = dir[0] * center[0] + dir[1] * center[1] + dir[2] * center[2];
                if score > best_score {
                    best_score = score;
                    best = face;
                }
            }
            let (center, right, down) = best.axes();
            let denom = dir[0] * center[0] + dir[1] * center[1] + dir[2] * center[2];
            let a = (dir[0] * right[0] + dir[1] * right[1] + dir[2] * right[2]) / denom;
            let b = (dir[0] * down[0] + dir[1] * down[1] + dir[2] * down[2]) / denom;
            let x = (a + 1.0) / 2.0 * n - 0.5;
            let y = (b + 1.0) / 2.0 * n - 0.5;
            for c in 0..faces.channels() {
                let val = sample_clamp(faces.face_plane(best, c), size, size, x, y);
                img.set(c, u, v, val.clamp(0.0, faces.max_value()));
            }
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn pixel_to_spherical_known_points() {
        let (lat, lon) = erp_pixel_to_spherical(1, 0, 4, 2).unwrap();
        assert_relative_eq!(lat, PI / 4.0, max_relative = 1e-15);
        assert_relative_eq!(lon, -PI / 4.0, max_relative = 1e-15);

        let (lat, lon) = erp_pixel_to_spherical(0, 0, 2, 1).unwrap();
        assert_eq!(lat, 0.0);
        assert_relative_eq!(lon, -PI / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn pixel_to_spherical_rejects_out_of_range() {
        assert!(erp_pixel_to_spherical(4, 0, 4, 2).is_err());
        assert!(erp_pixel_to_spherical(0, 2, 4, 2).is_err());
        assert!(erp_pixel_to_spherical(0, 0, 0, 2).is_err());
    }

    #[test]
    fn pixel_to_spherical_matches_brute_force_grid() {
        // Independent per-pixel evaluation of the pixel-center formula.
        let (w, h) = (8usize, 4usize);
        for v in 0..h {
            for u in 0..w {
                let expect_lat = (0.5 - (v as f64 + 0.5) / h as f64) * PI;
                let expect_lon = (u as f64 + 0.5) / w as f64 * 2.0 * PI - PI;
                let (lat, lon) = erp_pixel_to_spherical(u, v, w, h).unwrap();
                assert_eq!(lat, expect_lat);
                assert_eq!(lon, expect_lon);
            }
        }
    }

    #[test]
    fn latitude_weights_height_two() {
        let w = latitude_weight_map(2).unwrap();
        assert_relative_eq!(w.get(0), (2.0f64).sqrt() / 2.0, max_relative = 1e-15);
        assert_relative_eq!(w.get(1), (2.0f64).sqrt() / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn latitude_weights_match_direct_evaluation() {
        let w = latitude_weight_map(256).unwrap();
        let expect = (127.5 * PI / 256.0).cos();
        assert_eq!(w.get(0), expect);
    }

    #[test]
    fn latitude_weights_positive_and_bounded_for_even_heights() {
        for h in [2usize, 4, 64, 256, 510] {
            let w = latitude_weight_map(h).unwrap();
            let bound = (PI / (2.0 * h as f64)).cos();
            for j in 0..h {
                assert!(w.get(j) > 0.0);
                assert!(w.get(j) <= bound + 1e-15, "h={h} j={j}");
            }
            assert!(bound < 1.0);
            // Maximal at the two center rows.
            let center = w.get(h / 2 - 1).max(w.get(h / 2));
            for j in 0..h {
                assert!(w.get(j) <= center + 1e-15);
            }
        }
    }

    proptest! {
        #[test]
        fn latitude_weights_symmetric(h in 1usize..300) {
            let w = latitude_weight_map(h).unwrap();
            for j in 0..h {
                prop_assert_eq!(w.get(j), w.get(h - 1 - j));
            }
        }
    }

    #[test]
    fn coordinate_channels_two_by_one() {
        let ch = spherical_coordinate_channels(2, 1).unwrap();
        assert_eq!(ch.latitude, vec![0.0, 0.0]);
        assert_relative_eq!(ch.longitude[0], -PI / 2.0, max_relative = 1e-15);
        assert_relative_eq!(ch.longitude[1], PI / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn coordinate_channels_top_left_has_most_positive_latitude() {
        let ch = spherical_coordinate_channels(16, 8).unwrap();
        let top_left = ch.latitude[0];
        assert!(ch.latitude.iter().all(|&l| l <= top_left));
    }

    #[test]
    fn coordinate_channels_match_per_pixel_mapping() {
        let (w, h) = (16usize, 8usize);
        let ch = spherical_coordinate_channels(w, h).unwrap();
        for v in 0..h {
            for u in 0..w {
                let (lat, lon) = erp_pixel_to_spherical(u, v, w, h).unwrap();
                assert_eq!(ch.latitude[v * w + u], lat);
                assert_eq!(ch.longitude[v * w + u], lon);
            }
        }
    }

    /// Smooth test image defined directly from pixel-center angles.
    fn angular_image(width: usize, height: usize) -> ErpImage {
        let mut img = ErpImage::new(width, height, 1, 255.0).unwrap();
        for v in 0..height {
            for u in 0..width {
                let (lat, lon) = erp_point_to_spherical(u as f64, v as f64, width, height);
                let val = 100.0 + 50.0 * lat.sin() + 30.0 * lon.cos() * lat.cos();
                img.set(0, u, v, val);
            }
        }
        img
    }

    #[test]
    fn constant_erp_gives_constant_faces() {
        let img = ErpImage::constant(64, 32, 3, 77.0, 255.0).unwrap();
        let faces = erp_to_cubemap(&img, 16).unwrap();
        for face in CubeFace::ALL {
            for c in 0..3 {
                for &v in faces.face_plane(face, c) {
                    assert_relative_eq!(v, 77.0, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn face_centers_sample_expected_angles() {
        // Odd face size puts one pixel exactly at each face center.
        let img = angular_image(512, 256);
        let faces = erp_to_cubemap(&img, 65).unwrap();
        let f = |lat: f64, lon: f64| 100.0 + 50.0 * lat.sin() + 30.0 * lon.cos() * lat.cos();
        let mid = 32 * 65 + 32;
        let cases = [
            (CubeFace::Front, f(0.0, 0.0)),
            (CubeFace::Right, f(0.0, PI / 2.0)),
            (CubeFace::Back, f(0.0, PI)),
            (CubeFace::Left, f(0.0, -PI / 2.0)),
            (CubeFace::Top, f(PI / 2.0, 0.0)),
            (CubeFace::Bottom, f(-PI / 2.0, 0.0)),
        ];
        // Equator face centers interpolate between dense rows; pole
        // centers clamp to the outermost row, whose latitude is half a
        // pixel short of ±π/2, so they carry a slightly larger error.
        for (face, expect) in cases {
            let got = faces.face_plane(face, 0)[mid];
            let tol = match face {
                CubeFace::Top | CubeFace::Bottom => 0.5,
                _ => 0.05,
            };
            assert!(
                (got - expect).abs() < tol,
                "{}: got {got}, expected {expect}",
                face.name()
            );
        }
    }

    #[test]
    fn face_rays_consistent_with_pixel_mapping() {
        // Round-tripping a face ray through ERP coordinates must
        // reproduce the ray direction to within 1e-9 radians.
        let (w, h) = (128usize, 64usize);
        for face in CubeFace::ALL {
            let (center, right, down) = face.axes();
            let n = 8.0;
            for j in 0..8 {
                let b = 2.0 * (j as f64 + 0.5) / n - 1.0;
                for i in 0..8 {
                    let a = 2.0 * (i as f64 + 0.5) / n - 1.0;
                    let dir = [
                        center[0] + a * right[0] + b * down[0],
                        center[1] + a * right[1] + b * down[1],
                        center[2] + a * right[2] + b * down[2],
                    ];
                    let (lat, lon) = direction_to_spherical(dir);
                    let (u, v) = spherical_to_erp_point(lat, lon, w, h);
                    let (lat2, lon2) = erp_point_to_spherical(u, v, w, h);
                    let d1 = spherical_to_direction(lat, lon);
                    let d2 = spherical_to_direction(lat2, lon2);
                    let dot = d1[0] * d2[0] + d1[1] * d2[1] + d1[2] * d2[2];
                    let cross = [
                        d1[1] * d2[2] - d1[2] * d2[1],
                        d1[2] * d2[0] - d1[0] * d2[2],
                        d1[0] * d2[1] - d1[1] * d2[0],
                    ];
                    let cross_norm =
                        (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
                    // atan2 keeps small angles accurate where acos cannot.
                    let angle = cross_norm.atan2(dot);
                    assert!(angle < 1e-9, "angle {angle}");
                }
            }
        }
    }

    #[test]
    fn constant_faces_give_constant_erp() {
        let mut faces = CubeFaceSet::new(8, 1, 255.0).unwrap();
        for face in CubeFace::ALL {
            faces.face_plane_mut(face, 0).fill(42.0);
        }
        let img = cubemap_to_erp(&faces, 32, 16).unwrap();
        assert_eq!(img.width(), 32);
        assert_eq!(img.height(), 16);
        for &v in img.plane(0) {
            assert_relative_eq!(v, 42.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn cubemap_round_trip_preserves_row_means() {
        // Constant-latitude gradient: value depends on latitude only.
        let (w, h) = (256usize, 128usize);
        let mut img = ErpImage::new(w, h, 1, 255.0).unwrap();
        for v in 0..h {
            let (lat, _) = erp_point_to_spherical(0.0, v as f64, w, h);
            for u in 0..w {
                img.set(0, u, v, 150.0 + 100.0 * lat.sin());
            }
        }
        let faces = erp_to_cubemap(&img, 64).unwrap();
        let back = cubemap_to_erp(&faces, w, h).unwrap();
        for v in 0..h {
            let mean_a: f64 = (0..w).map(|u| img.get(0, u, v)).sum::<f64>() / w as f64;
            let mean_b: f64 = (0..w).map(|u| back.get(0, u, v)).sum::<f64>() / w as f64;
            assert!(
                (mean_a - mean_b).abs() / mean_a.abs() < 0.01,
                "row {v}: {mean_a} vs {mean_b}"
            );
        }
    }

    #[test]
    fn cubemap_round_trip_quality_on_band_limited_image() {
        // Degree-2 polynomial in the direction components: band-limited
        // on the sphere, so resampling losses stay small.
        let (w, h) = (256usize, 128usize);
        let mut img = ErpImage::new(w, h, 1, 255.0).unwrap();
        for v in 0..h {
            for u in 0..w {
                let (lat, lon) = erp_point_to_spherical(u as f64, v as f64, w, h);
                let [x, y, z] = spherical_to_direction(lat, lon);
                let val = 128.0 + 45.0 * x + 35.0 * y + 25.0 * z + 15.0 * x * y - 10.0 * y * z;
                img.set(0, u, v, val);
            }
        }
        let faces = erp_to_cubemap(&img, 64).unwrap();
        let back = cubemap_to_erp(&faces, w, h).unwrap();
        let mse: f64 = img
            .plane(0)
            .iter()
            .zip(back.plane(0))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / (w * h) as f64;
        let psnr = 10.0 * (255.0f64 * 255.0 / mse).log10();
        assert!(psnr >= 30.0, "round-trip PSNR {psnr:.2} dB");
    }

    #[test]
    fn cubemap_to_erp_validates_shape() {
        let faces = CubeFaceSet::new(8, 1, 255.0).unwrap();
        assert!(cubemap_to_erp(&faces, 30, 16).is_err());
    }

    #[test]
    fn flips_are_involutions() {
        let img = angular_image(16, 8);
        assert_eq!(img.hflip().hflip(), img);
        assert_eq!(img.vmirror().vmirror(), img);
    }

    #[test]
    fn image_validation() {
        assert!(ErpImage::new(0, 4, 1, 255.0).is_err());
        assert!(ErpImage::new(4, 4, 2, 255.0).is_err());
        assert!(ErpImage::from_planes(2, 2, vec![vec![0.0; 3]], 255.0).is_err());
        assert!(ErpImage::from_planes(2, 2, vec![vec![-1.0; 4]], 255.0).is_err());
        let ok = ErpImage::from_planes(2, 2, vec![vec![1.0; 4]], 255.0).unwrap();
        assert!(!ok.is_canonical_erp());
        assert!(ErpImage::new(8, 4, 1, 255.0).unwrap().is_canonical_erp());
    }
}
