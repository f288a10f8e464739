//! Deterministic synthetic images with natural statistics.
//!
//! Piecewise-smooth scenes — low-frequency shading plus randomly placed
//! hard-edged shapes with gradient fills and a one-pixel antialiased rim —
//! reproduce the property the codec relies on: intensities spread over the
//! full range while the Laplacian concentrates near zero, spiking only
//! along edges. Images are rounded to integer intensities so PNG
//! round-trips and 32-bit payload storage are exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::field::{Field, RasterImage};

struct Shape {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    cos_t: f64,
    sin_t: f64,
    rectangular: bool,
    /// Per-channel fill at the shape center.
    base: [f64; 3],
    /// Fill gradient (per unit x / y in shape frame).
    gx: f64,
    gy: f64,
}

impl Shape {
    /// Signed "radius" in shape units: < 1 inside, > 1 outside.
    fn level(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.cx;
        let dy = y - self.cy;
        let lx = (dx * self.cos_t + dy * self.sin_t) / self.rx;
        let ly = (-dx * self.sin_t + dy * self.cos_t) / self.ry;
        if self.rectangular {
            lx.abs().max(ly.abs())
        } else {
            (lx * lx + ly * ly).sqrt()
        }
    }

    fn fill(&self, x: f64, y: f64, c: usize) -> f64 {
        self.base[c] + self.gx * (x - self.cx) + self.gy * (y - self.cy)
    }
}

/// A reproducible piecewise-smooth test image with integer intensities in
/// [0, 255]. `channels` must be 1 or 3.
pub fn natural_image(height: usize, width: usize, channels: usize, seed: u64) -> RasterImage {
    assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    // Smooth background: a mid gray plus a few low-frequency waves.
    let scale = height.max(width) as f64;
    let waves: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(8.0..30.0),
                rng.gen_range(0.5..2.5) * std::f64::consts::PI / scale,
                rng.gen_range(0.5..2.5) * std::f64::consts::PI / scale,
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let tint: [f64; 3] = [
        rng.gen_range(-18.0..18.0),
        rng.gen_range(-18.0..18.0),
        rng.gen_range(-18.0..18.0),
    ];

    let n_shapes = rng.gen_range(7..14);
    let shapes: Vec<Shape> = (0..n_shapes)
        .map(|_| {
            let base_l = rng.gen_range(40.0..220.0);
            let spread = rng.gen_range(0.0..35.0);
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            Shape {
                cx: rng.gen_range(0.0..width as f64),
                cy: rng.gen_range(0.0..height as f64),
                rx: rng.gen_range(0.06..0.33) * scale,
                ry: rng.gen_range(0.06..0.33) * scale,
                cos_t: theta.cos(),
                sin_t: theta.sin(),
                rectangular: rng.gen_bool(0.4),
                base: [
                    base_l + rng.gen_range(-spread..spread + 1e-9),
                    base_l + rng.gen_range(-spread..spread + 1e-9),
                    base_l + rng.gen_range(-spread..spread + 1e-9),
                ],
                gx: rng.gen_range(-0.25..0.25),
                gy: rng.gen_range(-0.25..0.25),
            }
        })
        .collect();

    Field::from_fn(height, width, channels, |c, i, j| {
        let x = j as f64;
        let y = i as f64;
        let mut v = 112.0 + tint[c];
        for &(amp, fx, fy, phase) in &waves {
            v += amp * (fx * x + fy * y + phase).cos();
        }
        // Paint shapes front to back; the rim blends over one pixel so
        // edges look antialiased rather than aliased staircases.
        for s in &shapes {
            let level = s.level(x, y);
            let rim = 1.0 / s.rx.min(s.ry);
            if level < 1.0 - rim {
                v = s.fill(x, y, c);
            } else if level < 1.0 {
                let t = (1.0 - level) / rim;
                v = v * (1.0 - t) + s.fill(x, y, c) * t;
            }
        }
        v.clamp(0.0, 255.0).round()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{laplacian, stencil, StencilId};

    #[test]
    fn deterministic_per_seed() {
        let a = natural_image(32, 32, 3, 5);
        let b = natural_image(32, 32, 3, 5);
        assert_eq!(a.as_slice(), b.as_slice());
        let c = natural_image(32, 32, 3, 6);
        assert_ne!(a.as_slice(), c.as_slice());
    }

    #[test]
    fn integer_intensities_in_range() {
        let img = natural_image(40, 40, 1, 9);
        for &v in img.as_slice() {
            assert!((0.0..=255.0).contains(&v));
            assert_eq!(v, v.round());
        }
    }

    #[test]
    fn laplacian_is_much_sparser_than_intensity() {
        // The property the whole representation rests on.
        let img = natural_image(96, 96, 1, 11);
        let field = laplacian(&img, &stencil(StencilId::K0)).unwrap();

        let central = |values: &[f64]| crate::analytics::central_band_fraction(values, 0.1);

        let mean = img.as_slice().iter().sum::<f64>() / img.as_slice().len() as f64;
        let centered: Vec<f64> = img.as_slice().iter().map(|v| v - mean).collect();
        let f_int = central(&centered);
        let f_lap = central(field.as_slice());
        assert!(
            f_lap > f_int,
            "laplacian central fraction {f_lap} <= intensity {f_int}"
        );
        assert!(f_lap > 0.5, "field not sparse: {f_lap}");
    }
}
