//! Deterministic synthetic ERP content for tests, demos, and
//! calibration. Everything here is a pure function of its arguments
//! (seeded where randomness is involved), so downstream golden files
//! stay stable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::saliency::{equator_prior_saliency, great_circle_distance, Hotspot, SaliencyMap};
use crate::sphere::{erp_point_to_spherical, spherical_to_direction, ErpImage};

/// Low-resolution seeded noise bilinearly upsampled to the full grid;
/// returns values in [-1, 1].
fn smooth_noise(width: usize, height: usize, cell: usize, seed: u64) -> Vec<f64> {
    let gw = (width / cell).max(2);
    let gh = (height / cell).max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut out = vec![0.0; width * height];
    for y in 0..height {
        let gy = y as f64 * (gh - 1) as f64 / (height - 1).max(1) as f64;
        let y0 = gy.floor() as usize;
        let y1 = (y0 + 1).min(gh - 1);
        let fy = gy - y0 as f64;
        for x in 0..width {
            let gx = x as f64 * (gw - 1) as f64 / (width - 1).max(1) as f64;
            let x0 = gx.floor() as usize;
            let x1 = (x0 + 1).min(gw - 1);
            let fx = gx - x0 as f64;
            let top = grid[y0 * gw + x0] * (1.0 - fx) + grid[y0 * gw + x1] * fx;
            let bot = grid[y1 * gw + x0] * (1.0 - fx) + grid[y1 * gw + x1] * fx;
            out[y * width + x] = top * (1.0 - fy) + bot * fy;
        }
    }
    out
}

/// Natural-looking RGB test scene: latitude gradients, smooth seeded
/// noise, and mid-frequency ripples.
pub fn textured_scene(width: usize, height: usize, seed: u64) -> ErpImage {
    let noise_a = smooth_noise(width, height, 8, seed.wrapping_mul(3).wrapping_add(1));
    let noise_b = smooth_noise(width, height, 16, seed.wrapping_mul(3).wrapping_add(2));
    let mut planes = vec![vec![0.0; width * height]; 3];
    let phases = [0.0, 1.1, 2.3];
    let gains = [70.0, 55.0, 45.0];
    for v in 0..height {
        for u in 0..width {
            let (lat, lon) = erp_point_to_spherical(u as f64, v as f64, width, height);
            let i = v * width + u;
            let ripple = 14.0 * (6.0 * lon).sin() * (3.0 * lat).cos();
            for c in 0..3 {
                let base = 120.0 + gains[c] * (lat * 1.6 + phases[c]).sin();
                let val = base + ripple + 28.0 * noise_a[i] + 12.0 * noise_b[i];
                planes[c][i] = val.clamp(0.0, 255.0);
            }
        }
    }
    ErpImage::from_planes(width, height, planes, 255.0).expect("generated samples in range")
}

/// Gray image that is a degree-2 polynomial of the view direction —
/// band-limited on the sphere, so projection round trips should come
/// back nearly intact.
pub fn band_limited_sphere(width: usize, height: usize) -> ErpImage {
    let mut plane = vec![0.0; width * height];
    for v in 0..height {
        for u in 0..width {
            let (lat, lon) = erp_point_to_spherical(u as f64, v as f64, width, height);
            let [x, y, z] = spherical_to_direction(lat, lon);
            plane[v * width + u] =
                (128.0 + 45.0 * x + 35.0 * y + 25.0 * z + 15.0 * x * y - 10.0 * y * z)
                    .clamp(0.0, 255.0);
        }
    }
    ErpImage::from_planes(width, height, vec![plane], 255.0).expect("in range")
}

/// Angular radius of the textured hotspot in [`hotspot_texture_image`].
pub const HOTSPOT_RADIUS: f64 = 0.55;

/// RGB scene whose high-frequency texture is confined to a disk around
/// latitude/longitude (0, 0) — the region its companion saliency map
/// marks as salient.
///
/// The background (gradients plus broad waves) is band-limited through
/// the codec's own block transform so that every coefficient outside the
/// preserved low-frequency channels is exactly zero; all masked-channel
/// energy in the scene therefore belongs to the hotspot texture.
pub fn hotspot_texture_image(width: usize, height: usize) -> ErpImage {
    let tau = std::f64::consts::TAU;
    let mut planes = vec![vec![0.0; width * height]; 3];
    for v in 0..height {
        for u in 0..width {
            let (lat, lon) = erp_point_to_spherical(u as f64, v as f64, width, height);
            let i = v * width + u;
            let (x, y) = (u as f64, v as f64);
            let waves = 14.0
                * ((tau * x / 96.0).sin() * (tau * y / 80.0).cos()
                    + 0.8 * (tau * (x + 0.6 * y) / 56.0).sin()
                    + 0.6 * (tau * (x - 1.3 * y) / 44.0).cos()
                    + 0.7 * (tau * y / 108.0).sin());
            for (c, plane) in planes.iter_mut().enumerate() {
                let base = 115.0 + 30.0 * (lat + 0.4 * c as f64).cos() + 8.0 * (lon * 0.5).sin();
                plane[i] = (base + waves).clamp(40.0, 215.0);
            }
        }
    }
    let raw = ErpImage::from_planes(width, height, planes, 255.0).expect("in range");

    // Keep only the preserved low-frequency channels of the background.
    let cfg = crate::codec::CodecConfig::default();
    let mut latent = crate::codec::analysis(&raw, &cfg).expect("valid image");
    let split = cfg.preserved_channels(latent.channels());
    let zeroed = {
        let mut data = latent.data().to_vec();
        let cells = latent.cells_per_channel();
        for slot in data[split * cells..].iter_mut() {
            *slot = 0.0;
        }
        crate::saliency::LatentTensor::from_data(
            latent.channels(),
            latent.height(),
            latent.width(),
            data,
        )
        .expect("shape unchanged")
    };
    latent = zeroed;
    let mut img = crate::codec::synthesis(&latent, &cfg, width, height, 255.0).expect("valid");

    // High-frequency noise texture inside the hotspot window only.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let noise: Vec<f64> = (0..width * height).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for v in 0..height {
        for u in 0..width {
            let (lat, lon) = erp_point_to_spherical(u as f64, v as f64, width, height);
            let i = v * width + u;
            let d = great_circle_distance(lat, lon, 0.0, 0.0);
            if d < HOTSPOT_RADIUS {
                let t = d / HOTSPOT_RADIUS;
                let window = (std::f64::consts::FRAC_PI_2 * t).cos().powi(2);
                let texture = 40.0 * window * noise[i];
                for c in 0..3 {
                    let val = (img.get(c, u, v) + texture).clamp(0.0, 255.0);
                    img.set(c, u, v, val);
                }
            }
        }
    }
    img
}

/// Companion saliency for [`hotspot_texture_image`]: a thin equator band
/// plus a strong bump over the textured disk, so the raw map is close to
/// zero elsewhere. The bump width is chosen so the saturated region of
/// the rescale+sigmoid pipeline aligns with the textured disk.
pub fn hotspot_saliency(width: usize, height: usize) -> SaliencyMap {
    equator_prior_saliency(
        width,
        height,
        0.02,
        &[Hotspot {
            lat: 0.0,
            lon: 0.0,
            amplitude: 6.0,
            sigma: 0.2,
        }],
    )
    .expect("valid parameters")
}
