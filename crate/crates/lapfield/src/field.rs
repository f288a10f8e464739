//! Grid containers, the four discrete Laplacian stencils, and the forward
//! Laplacian transform.
//!
//! Everything here uses a zero exterior: pixels outside the grid are 0.
//! That convention is the discrete Dirichlet boundary condition u = 0 on
//! the domain boundary, and it is what makes the transform invertible —
//! the field alone determines the image.

use crate::error::{Error, Result};

/// A dense H x W x C grid of `f64` samples, stored channel-planar and
/// row-major within each plane.
///
/// Used both for images (intensities on the 0..255 scale) and for
/// Laplacian fields (signed, unbounded). All values are finite;
/// constructors reject NaN and infinity.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

/// An intensity image on the 0..255 scale.
pub type RasterImage = Field;
/// A signed Laplacian field on the same grid as its source image.
pub type ScalarField = Field;

impl Field {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    /// Wraps an existing channel-planar buffer, validating length and finiteness.
    pub fn from_vec(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::DataLength {
                height,
                width,
                channels,
                len: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * channels);
        for c in 0..channels {
            for i in 0..height {
                for j in 0..width {
                    data.push(f(c, i, j));
                }
            }
        }
        Self {
            height,
            width,
            channels,
            data,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// (height, width, channels)
    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    #[inline]
    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn get(&self, c: usize, i: usize, j: usize) -> f64 {
        self.data[(c * self.height + i) * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, c: usize, i: usize, j: usize, v: f64) {
        self.data[(c * self.height + i) * self.width + j] = v;
    }

    /// One channel plane, row-major.
    #[inline]
    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.pixels();
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.pixels();
        &mut self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn same_dims(&self, other: &Field) -> bool {
        self.dims() == other.dims()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// self + scale * other, element-wise.
    pub fn axpy(&self, scale: f64, other: &Field) -> Result<Field> {
        if !self.same_dims(other) {
            return Err(Error::ShapeMismatch {
                expected: self.dims(),
                got: other.dims(),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + scale * b)
            .collect();
        Ok(Field {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data,
        })
    }

    pub fn scaled(&self, scale: f64) -> Field {
        self.map(|v| scale * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Mean squared difference over all samples.
    pub fn mse(&self, other: &Field) -> f64 {
        let n = self.data.len().max(1);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<f64>()
            / n as f64
    }

    pub fn norm_l2(&self) -> f64 {
        self.data.iter().map(|&v| v * v).sum::<f64>().sqrt()
    }

    /// Clamps every sample into [0, 255]; the final step of image export.
    pub fn clamped(&self) -> Field {
        self.map(|v| v.clamp(0.0, 255.0))
    }
}

/// Identifier for the four 3x3 Laplacian discretizations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StencilId {
    K0,
    K1,
    K2,
    K3,
}

impl StencilId {
    pub const ALL: [StencilId; 4] = [StencilId::K0, StencilId::K1, StencilId::K2, StencilId::K3];

    pub fn code(self) -> u8 {
        match self {
            StencilId::K0 => 0,
            StencilId::K1 => 1,
            StencilId::K2 => 2,
            StencilId::K3 => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(StencilId::K0),
            1 => Some(StencilId::K1),
            2 => Some(StencilId::K2),
            3 => Some(StencilId::K3),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StencilId::K0 => "k0",
            StencilId::K1 => "k1",
            StencilId::K2 => "k2",
            StencilId::K3 => "k3",
        }
    }
}

impl std::str::FromStr for StencilId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k0" | "K0" => Ok(StencilId::K0),
            "k1" | "K1" => Ok(StencilId::K1),
            "k2" | "K2" => Ok(StencilId::K2),
            "k3" | "K3" => Ok(StencilId::K3),
            other => Err(Error::InvalidValue(format!("unknown stencil {other:?}"))),
        }
    }
}

impl std::fmt::Display for StencilId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A 3x3 Laplacian stencil.
///
/// Coefficients are exact rationals (integer numerators over one common
/// denominator), so the zero-sum invariant can be checked without floating
/// point. The `f64` matrix used in arithmetic is derived from them.
#[derive(Clone, Copy, Debug)]
pub struct Stencil3x3 {
    id: StencilId,
    numerators: [[i32; 3]; 3],
    denominator: i32,
    coefficients: [[f64; 3]; 3],
}

impl Stencil3x3 {
    fn new(id: StencilId, numerators: [[i32; 3]; 3], denominator: i32) -> Self {
        let mut coefficients = [[0.0; 3]; 3];
        for r in 0..3 {
            for s in 0..3 {
                coefficients[r][s] = numerators[r][s] as f64 / denominator as f64;
            }
        }
        Self {
            id,
            numerators,
            denominator,
            coefficients,
        }
    }

    pub fn id(&self) -> StencilId {
        self.id
    }

    /// The coefficient matrix, row-major.
    pub fn coefficients(&self) -> &[[f64; 3]; 3] {
        &self.coefficients
    }

    pub fn numerators(&self) -> &[[i32; 3]; 3] {
        &self.numerators
    }

    pub fn denominator(&self) -> i32 {
        self.denominator
    }

    /// Exact sum of the nine coefficients, in units of 1/denominator.
    pub fn numerator_sum(&self) -> i64 {
        self.numerators
            .iter()
            .flatten()
            .map(|&n| i64::from(n))
            .sum()
    }

    pub fn center(&self) -> f64 {
        self.coefficients[1][1]
    }
}

/// Returns one of the four published Laplacian stencils.
pub fn stencil(id: StencilId) -> Stencil3x3 {
    match id {
        StencilId::K0 => Stencil3x3::new(id, [[0, 1, 0], [1, -4, 1], [0, 1, 0]], 1),
        StencilId::K1 => Stencil3x3::new(id, [[1, 1, 1], [1, -8, 1], [1, 1, 1]], 2),
        StencilId::K2 => Stencil3x3::new(id, [[-1, 5, -1], [5, -16, 5], [-1, 5, -1]], 4),
        StencilId::K3 => Stencil3x3::new(id, [[1, 2, 1], [2, -12, 2], [1, 2, 1]], 3),
    }
}

/// Odd-sized square correlation of one channel plane with a zero exterior.
///
/// Taps are accumulated in row-major kernel order; callers rely on that
/// fixed order for bit-reproducibility. Interior pixels take a fast path
/// without bounds checks but with the identical accumulation order, so the
/// two paths produce identical bits.
pub(crate) fn correlate(src: &[f64], h: usize, w: usize, kernel: &[f64], ksize: usize, dst: &mut [f64]) {
    debug_assert_eq!(kernel.len(), ksize * ksize);
    debug_assert_eq!(src.len(), h * w);
    let r = ksize / 2;

    let edge = |dst: &mut [f64], i: usize, j0: usize, j1: usize| {
        for j in j0..j1 {
            let mut acc = 0.0;
            for di in 0..ksize {
                let ii = i as isize + di as isize - r as isize;
                if ii < 0 || ii >= h as isize {
                    continue;
                }
                for dj in 0..ksize {
                    let coeff = kernel[di * ksize + dj];
                    if coeff == 0.0 {
                        continue;
                    }
                    let jj = j as isize + dj as isize - r as isize;
                    if jj < 0 || jj >= w as isize {
                        continue;
                    }
                    acc += coeff * src[ii as usize * w + jj as usize];
                }
            }
            dst[i * w + j] = acc;
        }
    };

    if h <= 2 * r || w <= 2 * r {
        for i in 0..h {
            edge(dst, i, 0, w);
        }
        return;
    }

    // Monomorphized interior loops let the compiler unroll and vectorize;
    // adding a zero coefficient's term is exact, so skipping the
    // `coeff == 0` test cannot change any bit of the result.
    match ksize {
        3 => interior::<3>(src, h, w, kernel, dst, &edge),
        5 => interior::<5>(src, h, w, kernel, dst, &edge),
        7 => interior::<7>(src, h, w, kernel, dst, &edge),
        9 => interior::<9>(src, h, w, kernel, dst, &edge),
        11 => interior::<11>(src, h, w, kernel, dst, &edge),
        _ => interior_dyn(src, h, w, kernel, ksize, dst, &edge),
    }
}

fn interior<const K: usize>(
    src: &[f64],
    h: usize,
    w: usize,
    kernel: &[f64],
    dst: &mut [f64],
    edge: &impl Fn(&mut [f64], usize, usize, usize),
) {
    let r = K / 2;
    for i in 0..h {
        if i < r || i >= h - r {
            edge(dst, i, 0, w);
            continue;
        }
        edge(dst, i, 0, r);
        for j in r..w - r {
            let mut acc = 0.0;
            let base = (i - r) * w + (j - r);
            for di in 0..K {
                let row = base + di * w;
                for dj in 0..K {
                    acc += kernel[di * K + dj] * src[row + dj];
                }
            }
            dst[i * w + j] = acc;
        }
        edge(dst, i, w - r, w);
    }
}

fn interior_dyn(
    src: &[f64],
    h: usize,
    w: usize,
    kernel: &[f64],
    ksize: usize,
    dst: &mut [f64],
    edge: &impl Fn(&mut [f64], usize, usize, usize),
) {
    let r = ksize / 2;
    for i in 0..h {
        if i < r || i >= h - r {
            edge(dst, i, 0, w);
            continue;
        }
        edge(dst, i, 0, r);
        for j in r..w - r {
            let mut acc = 0.0;
            let base = (i - r) * w + (j - r);
            for di in 0..ksize {
                let row = base + di * w;
                for dj in 0..ksize {
                    acc += kernel[di * ksize + dj] * src[row + dj];
                }
            }
            dst[i * w + j] = acc;
        }
        edge(dst, i, w - r, w);
    }
}

/// Forward Laplacian transform `L = Δu` with zero (Dirichlet) exterior.
///
/// Channels are processed independently; the output has the same
/// dimensions as the input.
pub fn laplacian(image: &RasterImage, stencil: &Stencil3x3) -> Result<ScalarField> {
    let (h, w, c) = image.dims();
    if h < 3 || w < 3 {
        return Err(Error::GridTooSmall {
            height: h,
            width: w,
        });
    }
    let flat: Vec<f64> = stencil.coefficients().iter().flatten().copied().collect();
    let mut out = Field::zeros(h, w, c);
    for ch in 0..c {
        correlate(image.channel(ch), h, w, &flat, 3, out.channel_mut(ch));
    }
    Ok(out)
}

/// Applies the discrete Laplacian to an arbitrary field.
///
/// Same contract as [`laplacian`]; exposed under its own name so solvers
/// can form residuals `r = L - Δu` without building matrices.
pub fn apply_laplacian(u: &ScalarField, stencil: &Stencil3x3) -> Result<ScalarField> {
    laplacian(u, stencil)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_field(h: usize, w: usize, c: usize, seed: u64) -> Field {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        Field::from_fn(h, w, c, |_, _, _| rng.gen_range(-50.0..50.0))
    }

    #[test]
    fn stencil_matrices_match_published_values() {
        let k0 = stencil(StencilId::K0);
        assert_eq!(
            k0.coefficients(),
            &[[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]]
        );
        let k1 = stencil(StencilId::K1);
        assert_eq!(
            k1.coefficients(),
            &[[0.5, 0.5, 0.5], [0.5, -4.0, 0.5], [0.5, 0.5, 0.5]]
        );
        let k2 = stencil(StencilId::K2);
        assert_eq!(
            k2.coefficients(),
            &[[-0.25, 1.25, -0.25], [1.25, -4.0, 1.25], [-0.25, 1.25, -0.25]]
        );
        let k3 = stencil(StencilId::K3);
        let third = 1.0 / 3.0;
        let two_thirds = 2.0 / 3.0;
        assert_eq!(
            k3.coefficients(),
            &[
                [third, two_thirds, third],
                [two_thirds, -4.0, two_thirds],
                [third, two_thirds, third]
            ]
        );
    }

    #[test]
    fn stencils_sum_to_zero_and_center_is_minus_four() {
        for id in StencilId::ALL {
            let s = stencil(id);
            assert_eq!(s.numerator_sum(), 0, "{id}");
            assert_eq!(s.center(), -4.0, "{id}");
        }
    }

    #[test]
    fn constant_image_k0_edges_and_corners() {
        let img = Field::from_fn(8, 8, 1, |_, _, _| 5.0);
        let field = laplacian(&img, &stencil(StencilId::K0)).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let edge_i = i == 0 || i == 7;
                let edge_j = j == 0 || j == 7;
                let expected = match (edge_i, edge_j) {
                    (true, true) => -10.0,
                    (false, false) => 0.0,
                    _ => -5.0,
                };
                assert_eq!(field.get(0, i, j), expected, "({i},{j})");
            }
        }
    }

    #[test]
    fn constant_image_interior_is_zero_for_all_stencils() {
        let img = Field::from_fn(9, 7, 1, |_, _, _| 255.0);
        for id in StencilId::ALL {
            let field = laplacian(&img, &stencil(id)).unwrap();
            for i in 1..8 {
                for j in 1..6 {
                    // k3 coefficients are rounded thirds, so allow float dust.
                    assert!(field.get(0, i, j).abs() < 1e-12, "{id} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn quadratic_image_has_laplacian_four() {
        let img = Field::from_fn(10, 12, 1, |_, i, j| (i * i + j * j) as f64);
        let field = laplacian(&img, &stencil(StencilId::K0)).unwrap();
        for i in 1..9 {
            for j in 1..11 {
                assert_eq!(field.get(0, i, j), 4.0, "({i},{j})");
            }
        }
    }

    #[test]
    fn laplacian_is_linear() {
        let a = random_field(12, 9, 2, 1);
        let b = random_field(12, 9, 2, 2);
        let s = stencil(StencilId::K1);
        let combined = laplacian(&a.scaled(2.5).axpy(-1.75, &b).unwrap(), &s).unwrap();
        let separate = laplacian(&a, &s)
            .unwrap()
            .scaled(2.5)
            .axpy(-1.75, &laplacian(&b, &s).unwrap())
            .unwrap();
        let scale = combined.max_abs().max(1.0);
        assert!(combined.max_abs_diff(&separate) / scale < 1e-6);
    }

    #[test]
    fn k0_locality_touches_at_most_five_outputs() {
        let base = random_field(10, 10, 1, 3);
        let mut bumped = base.clone();
        bumped.set(0, 4, 6, bumped.get(0, 4, 6) + 10.0);
        let s = stencil(StencilId::K0);
        let fa = laplacian(&base, &s).unwrap();
        let fb = laplacian(&bumped, &s).unwrap();
        let changed = fa
            .as_slice()
            .iter()
            .zip(fb.as_slice())
            .filter(|(a, b)| a != b)
            .count();
        assert!(changed <= 5, "changed {changed} outputs");
    }

    #[test]
    fn channels_are_independent() {
        let rgb = random_field(8, 8, 3, 4);
        let s = stencil(StencilId::K2);
        let full = laplacian(&rgb, &s).unwrap();
        for c in 0..3 {
            let single =
                Field::from_vec(8, 8, 1, rgb.channel(c).to_vec()).unwrap();
            let single_out = laplacian(&single, &s).unwrap();
            assert_eq!(full.channel(c), single_out.channel(0));
        }
    }

    #[test]
    fn apply_matches_laplacian_bitwise() {
        for seed in 0..100 {
            let u = random_field(7, 11, 1, 100 + seed);
            let s = stencil(StencilId::K0);
            let a = laplacian(&u, &s).unwrap();
            let b = apply_laplacian(&u, &s).unwrap();
            assert_eq!(a.as_slice(), b.as_slice());
        }
    }

    #[test]
    fn apply_laplacian_zero_and_linearity() {
        let s = stencil(StencilId::K3);
        let zero = Field::zeros(6, 6, 1);
        assert_eq!(apply_laplacian(&zero, &s).unwrap().max_abs(), 0.0);

        let u1 = random_field(6, 6, 1, 7);
        let u2 = random_field(6, 6, 1, 8);
        let lhs = apply_laplacian(&u1.scaled(3.0).axpy(0.5, &u2).unwrap(), &s).unwrap();
        let rhs = apply_laplacian(&u1, &s)
            .unwrap()
            .scaled(3.0)
            .axpy(0.5, &apply_laplacian(&u2, &s).unwrap())
            .unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn rejects_small_grids_and_bad_data() {
        let tiny = Field::zeros(2, 5, 1);
        assert!(matches!(
            laplacian(&tiny, &stencil(StencilId::K0)),
            Err(Error::GridTooSmall { .. })
        ));
        assert!(matches!(
            Field::from_vec(3, 3, 1, vec![0.0; 8]),
            Err(Error::DataLength { .. })
        ));
        assert!(matches!(
            Field::from_vec(2, 2, 1, vec![0.0, f64::NAN, 0.0, 1.0]),
            Err(Error::NonFinite { index: 1 })
        ));
    }
}
