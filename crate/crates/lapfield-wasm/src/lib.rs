//! Wasm bindings for the browser demo.
//!
//! Three interactive operations over RGBA pixel buffers: synthesize a test
//! image, run an encode → decode round trip with adjustable threshold /
//! quantization / solver, and visualize the Laplacian field with its
//! histogram. Everything works on flat `u8`/`f64` buffers so the page
//! needs nothing beyond a canvas.

use wasm_bindgen::prelude::wasm_bindgen;

use lapfield::analytics::{central_band_fraction, kernel_spectrum, merged_histogram};
use lapfield::codec::{decode_unclamped, encode, serialize, StorageMode};
use lapfield::solvers::{SolverConfig, SolverKind};
use lapfield::synth::natural_image;
use lapfield::wcnn::KernelSet;
use lapfield::{laplacian, stencil, Field, StencilId};

fn rgba_to_field(pixels: &[u8], width: usize, height: usize) -> Field {
    Field::from_fn(height, width, 3, |c, i, j| {
        pixels[(i * width + j) * 4 + c] as f64
    })
}

fn field_to_rgba(field: &Field) -> Vec<u8> {
    let (h, w, c) = field.dims();
    let mut out = Vec::with_capacity(h * w * 4);
    for i in 0..h {
        for j in 0..w {
            for ch in 0..3 {
                let v = field.get(ch.min(c - 1), i, j);
                out.push(v.clamp(0.0, 255.0).round() as u8);
            }
            out.push(255);
        }
    }
    out
}

/// A reproducible piecewise-smooth RGBA test image.
#[wasm_bindgen]
pub fn synth_rgba(size: usize, seed: u64) -> Vec<u8> {
    field_to_rgba(&natural_image(size, size, 3, seed))
}

/// Outcome of one encode → decode round trip.
#[wasm_bindgen]
pub struct Roundtrip {
    pixels: Vec<u8>,
    sparsity: f64,
    bytes: usize,
    mse: f64,
    max_abs_error: f64,
}

#[wasm_bindgen]
impl Roundtrip {
    #[wasm_bindgen(getter)]
    pub fn pixels(&self) -> Vec<u8> {
        self.pixels.clone()
    }

    /// Fraction of nonzero field entries after thresholding.
    #[wasm_bindgen(getter)]
    pub fn sparsity(&self) -> f64 {
        self.sparsity
    }

    /// Serialized container size in bytes (sparse mode).
    #[wasm_bindgen(getter)]
    pub fn bytes(&self) -> usize {
        self.bytes
    }

    #[wasm_bindgen(getter)]
    pub fn mse(&self) -> f64 {
        self.mse
    }

    #[wasm_bindgen(getter, js_name = maxAbsError)]
    pub fn max_abs_error(&self) -> f64 {
        self.max_abs_error
    }
}

/// Encode with dead-zone threshold + quantization, then reconstruct with
/// the chosen solver: "dst", "multigrid", or "wcnn" (pretrained kernels).
#[wasm_bindgen]
pub fn roundtrip(
    pixels: &[u8],
    width: usize,
    height: usize,
    threshold: f64,
    quant: f64,
    solver: &str,
) -> Result<Roundtrip, String> {
    let image = rgba_to_field(pixels, width, height);
    let k0 = stencil(StencilId::K0);
    let encoded =
        encode(&image, &k0, threshold, quant, StorageMode::Sparse).map_err(|e| e.to_string())?;
    let bytes = serialize(&encoded).len();

    let kind: SolverKind = solver.parse().map_err(|e: lapfield::Error| e.to_string())?;
    let config = SolverConfig::new(kind);
    let kernels = (kind == SolverKind::Wcnn).then(KernelSet::pretrained_reference);
    let (u, _) = decode_unclamped(&encoded, &config, kernels.as_ref()).map_err(|e| e.to_string())?;

    Ok(Roundtrip {
        mse: u.mse(&image),
        max_abs_error: u.max_abs_diff(&image),
        pixels: field_to_rgba(&u.clamped()),
        sparsity: encoded.sparsity_ratio(),
        bytes,
    })
}

/// Laplacian-field statistics and a rendering of the field itself.
#[wasm_bindgen]
pub struct FieldView {
    pixels: Vec<u8>,
    histogram: Vec<f64>,
    central_fraction: f64,
    intensity_central_fraction: f64,
}

#[wasm_bindgen]
impl FieldView {
    /// Grayscale rendering: 128 + field/2, clamped.
    #[wasm_bindgen(getter)]
    pub fn pixels(&self) -> Vec<u8> {
        self.pixels.clone()
    }

    /// Normalized histogram densities over [-64, 64].
    #[wasm_bindgen(getter)]
    pub fn histogram(&self) -> Vec<f64> {
        self.histogram.clone()
    }

    /// Fraction of field values in the central 10% band.
    #[wasm_bindgen(getter, js_name = centralFraction)]
    pub fn central_fraction(&self) -> f64 {
        self.central_fraction
    }

    /// Same statistic for the mean-centered intensities.
    #[wasm_bindgen(getter, js_name = intensityCentralFraction)]
    pub fn intensity_central_fraction(&self) -> f64 {
        self.intensity_central_fraction
    }
}

#[wasm_bindgen]
pub fn field_view(pixels: &[u8], width: usize, height: usize, bins: usize) -> Result<FieldView, String> {
    let image = rgba_to_field(pixels, width, height);
    let field = laplacian(&image, &stencil(StencilId::K0)).map_err(|e| e.to_string())?;
    let histogram = merged_histogram(&field, bins.max(2), (-64.0, 64.0))
        .map_err(|e| e.to_string())?
        .density;

    let mean = image.as_slice().iter().sum::<f64>() / image.as_slice().len() as f64;
    let centered: Vec<f64> = image.as_slice().iter().map(|v| v - mean).collect();

    let rendering = field.map(|v| 128.0 + 0.5 * v);
    Ok(FieldView {
        pixels: field_to_rgba(&rendering),
        histogram,
        central_fraction: central_band_fraction(field.as_slice(), 0.1),
        intensity_central_fraction: central_band_fraction(&centered, 0.1),
    })
}

/// DC-centered magnitude spectrum of one pretrained kernel ("h", "g",
/// or "k") as a grayscale square image, each panel normalized to its peak.
#[wasm_bindgen]
pub fn pretrained_spectrum(which: &str, fft_size: usize) -> Result<Vec<u8>, String> {
    let set = KernelSet::pretrained_reference();
    let (kernel, ksize) = match which {
        "h" => (set.analysis(0), set.kernel_size()),
        "g" => (set.reconstruction(0), 3),
        "k" => (set.synthesis(0), set.kernel_size()),
        other => return Err(format!("unknown kernel {other:?}")),
    };
    let spec = kernel_spectrum(kernel, ksize, fft_size).map_err(|e| e.to_string())?;
    let peak = spec.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
    let mut out = Vec::with_capacity(spec.len() * 4);
    for v in spec {
        let g = (v / peak * 255.0).round() as u8;
        out.extend_from_slice(&[g, g, g, 255]);
    }
    Ok(out)
}
