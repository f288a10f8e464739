//! Training data: random image patches and their Laplacian fields.
//!
//! Each sample pairs a ground-truth patch with its k0 Laplacian field
//! computed on the fly under the zero exterior, so every pair satisfies
//! the exact reconstruction identity the network is trained to invert.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::field::{laplacian, stencil, Field, RasterImage, ScalarField, StencilId};

/// One training sample: the Laplacian field and the patch it came from.
pub type TrainPair = (ScalarField, RasterImage);

/// One of the eight dihedral transforms (identity, rotations, mirrors).
/// Bit 0 transposes, bit 1 flips rows, bit 2 flips columns.
pub fn dihedral(image: &Field, transform: u8) -> Field {
    let (h, w, c) = image.dims();
    let transpose = transform & 1 != 0;
    let flip_rows = transform & 2 != 0;
    let flip_cols = transform & 4 != 0;
    let (oh, ow) = if transpose { (w, h) } else { (h, w) };
    Field::from_fn(oh, ow, c, |ch, i, j| {
        let (mut si, mut sj) = if transpose { (j, i) } else { (i, j) };
        if flip_rows {
            si = h - 1 - si;
        }
        if flip_cols {
            sj = w - 1 - sj;
        }
        image.get(ch, si, sj)
    })
}

fn crop(image: &Field, top: usize, left: usize, size: usize) -> Field {
    Field::from_fn(size, size, image.channels(), |c, i, j| {
        image.get(c, top + i, left + j)
    })
}

/// Draws `count` patch pairs from preloaded images: uniform image choice,
/// uniform top-left corner, optionally a uniform dihedral transform.
/// Deterministic for a fixed seed. Images smaller than the patch are
/// skipped with a warning; it is an error if none remain.
pub fn sample_patches_from(
    images: &[RasterImage],
    patch_size: usize,
    count: usize,
    augment: bool,
    seed: u64,
) -> Result<Vec<TrainPair>> {
    if patch_size < 3 {
        return Err(Error::InvalidValue("patch size must be >= 3".into()));
    }
    let usable: Vec<&RasterImage> = images
        .iter()
        .filter(|img| {
            let ok = img.height() >= patch_size && img.width() >= patch_size;
            if !ok {
                eprintln!(
                    "warning: skipping {}x{} image smaller than patch size {patch_size}",
                    img.height(),
                    img.width()
                );
            }
            ok
        })
        .collect();
    if usable.is_empty() && count > 0 {
        return Err(Error::EmptyDataset(format!(
            "no images can host a {patch_size}x{patch_size} patch"
        )));
    }

    let k0 = stencil(StencilId::K0);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count {
        let img = usable[rng.gen_range(0..usable.len())];
        let top = rng.gen_range(0..=img.height() - patch_size);
        let left = rng.gen_range(0..=img.width() - patch_size);
        let mut gt = crop(img, top, left, patch_size);
        if augment {
            let t = rng.gen_range(0..8u8);
            gt = dihedral(&gt, t);
        }
        let field = laplacian(&gt, &k0)?;
        pairs.push((field, gt));
    }
    Ok(pairs)
}

/// Directory-backed variant of [`sample_patches_from`].
#[cfg(feature = "png")]
pub fn sample_patches(
    image_dir: &std::path::Path,
    patch_size: usize,
    count: usize,
    augment: bool,
    seed: u64,
) -> Result<Vec<TrainPair>> {
    let paths = crate::io::list_images(image_dir)?;
    if paths.is_empty() {
        return Err(Error::EmptyDataset(image_dir.display().to_string()));
    }
    let images = paths
        .iter()
        .map(|p| crate::io::load_png(p))
        .collect::<Result<Vec<_>>>()?;
    sample_patches_from(&images, patch_size, count, augment, seed)
}

/// Splits image indices into (train, held-out) by source image, so no
/// patch of a held-out image ever appears in training.
pub fn holdout_split(image_count: usize, holdout_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..image_count).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let n_hold = ((image_count as f64 * holdout_fraction).round() as usize)
        .max(1)
        .min(image_count.saturating_sub(1).max(1));
    let heldout = order[..n_hold].to_vec();
    let train = order[n_hold..].to_vec();
    (train, heldout)
}
