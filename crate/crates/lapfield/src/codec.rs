//! The Laplacian-field image container.
//!
//! An image is stored as its Laplacian field — sparse for natural images —
//! with optional dead-zone thresholding (|L| <= T becomes 0) and uniform
//! quantization (values rounded to multiples of q), both symmetric around
//! zero to match the zero-peaked field distribution. Decoding solves
//! `Δu = L` with any solver, which is exact for T = q = 0 because the
//! Dirichlet Poisson solution is unique.
//!
//! Wire format (little-endian): magic `LAPC`, version u8 = 1, one
//! reserved byte (future entropy-coded payloads), storage mode u8
//! (0 dense, 1 sparse), stencil id u8, height/width/channels u32,
//! threshold f32, quantization step f32. A dense payload is H·W·C f32
//! values channel-planar; a sparse payload is, per channel, a u32 count
//! followed by (u32 flat index, f32 value) pairs with strictly
//! increasing indices and nonzero values.

use crate::error::{Error, Result};
use crate::field::{laplacian, stencil, Field, RasterImage, ScalarField, Stencil3x3, StencilId};
use crate::solvers::{
    solve_cholesky_dense, solve_dst, solve_gauss_seidel, solve_jacobi, solve_multigrid,
    solve_sor, SolverConfig, SolverKind, SolverReport,
};
use crate::wcnn::{default_levels, forward, KernelSet};

pub const MAGIC: [u8; 4] = *b"LAPC";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StorageMode {
    Dense,
    Sparse,
}

impl StorageMode {
    fn code(self) -> u8 {
        match self {
            StorageMode::Dense => 0,
            StorageMode::Sparse => 1,
        }
    }
}

impl std::str::FromStr for StorageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(StorageMode::Dense),
            "sparse" => Ok(StorageMode::Sparse),
            other => Err(Error::InvalidValue(format!(
                "unknown storage mode {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    /// H·W·C values, channel-planar.
    Dense(Vec<f32>),
    /// Per channel: (flat index, value) with strictly increasing indices
    /// and nonzero values.
    Sparse(Vec<Vec<(u32, f32)>>),
}

/// A serialized-form Laplacian field plus its header.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedLaplacian {
    pub height: u32,
    pub width: u32,
    pub channels: u32,
    pub stencil: StencilId,
    pub threshold: f32,
    pub quant: f32,
    pub payload: Payload,
}

impl EncodedLaplacian {
    pub fn mode(&self) -> StorageMode {
        match self.payload {
            Payload::Dense(_) => StorageMode::Dense,
            Payload::Sparse(_) => StorageMode::Sparse,
        }
    }

    pub fn pixels(&self) -> usize {
        self.height as usize * self.width as usize
    }

    /// Nonzero payload entries over H·W·C.
    pub fn sparsity_ratio(&self) -> f64 {
        let total = (self.pixels() * self.channels as usize).max(1);
        let nonzero = match &self.payload {
            Payload::Dense(values) => values.iter().filter(|v| **v != 0.0).count(),
            Payload::Sparse(channels) => channels.iter().map(Vec::len).sum(),
        };
        nonzero as f64 / total as f64
    }
}

/// Encodes an image: Laplacian transform, dead-zone threshold, uniform
/// quantization, and the chosen payload layout.
pub fn encode(
    image: &RasterImage,
    stencil: &Stencil3x3,
    threshold: f64,
    quant: f64,
    mode: StorageMode,
) -> Result<EncodedLaplacian> {
    if threshold < 0.0 || quant < 0.0 {
        return Err(Error::InvalidValue(
            "threshold and quantization step must be >= 0".into(),
        ));
    }
    let field = laplacian(image, stencil)?;
    let (h, w, c) = field.dims();

    let process = |v: f64| -> f32 {
        let v = if v.abs() <= threshold { 0.0 } else { v };
        let v = if quant > 0.0 {
            (v / quant).round() * quant
        } else {
            v
        };
        v as f32
    };

    let payload = match mode {
        StorageMode::Dense => {
            Payload::Dense(field.as_slice().iter().map(|&v| process(v)).collect())
        }
        StorageMode::Sparse => {
            let mut channels = Vec::with_capacity(c);
            for ch in 0..c {
                let entries: Vec<(u32, f32)> = field
                    .channel(ch)
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &v)| {
                        let q = process(v);
                        (q != 0.0).then_some((i as u32, q))
                    })
                    .collect();
                channels.push(entries);
            }
            Payload::Sparse(channels)
        }
    };

    Ok(EncodedLaplacian {
        height: h as u32,
        width: w as u32,
        channels: c as u32,
        stencil: stencil.id(),
        threshold: threshold as f32,
        quant: quant as f32,
        payload,
    })
}

/// Densifies the payload back into a scalar field.
pub fn decode_field(encoded: &EncodedLaplacian) -> Result<ScalarField> {
    let (h, w, c) = (
        encoded.height as usize,
        encoded.width as usize,
        encoded.channels as usize,
    );
    let data = match &encoded.payload {
        Payload::Dense(values) => values.iter().map(|&v| v as f64).collect(),
        Payload::Sparse(channels) => {
            let mut data = vec![0.0f64; h * w * c];
            for (ch, entries) in channels.iter().enumerate() {
                for &(idx, v) in entries {
                    data[ch * h * w + idx as usize] = v as f64;
                }
            }
            data
        }
    };
    Field::from_vec(h, w, c, data)
}

/// Reconstructs the image by solving `Δu = L`, without the final clamp.
/// The network solver needs kernels; a single-channel kernel set is
/// replicated across channels.
pub fn decode_unclamped(
    encoded: &EncodedLaplacian,
    config: &SolverConfig,
    kernels: Option<&KernelSet>,
) -> Result<(RasterImage, Option<SolverReport>)> {
    let field = decode_field(encoded)?;
    let st = stencil(encoded.stencil);
    match config.solver {
        SolverKind::Cholesky => Ok((solve_cholesky_dense(&field, &st)?, None)),
        SolverKind::Dst => Ok((solve_dst(&field, &st)?, None)),
        SolverKind::Jacobi => {
            let (u, r) = solve_jacobi(&field, &st, config)?;
            Ok((u, Some(r)))
        }
        SolverKind::GaussSeidel => {
            let (u, r) = solve_gauss_seidel(&field, &st, config)?;
            Ok((u, Some(r)))
        }
        SolverKind::Sor => {
            let (u, r) = solve_sor(&field, &st, config)?;
            Ok((u, Some(r)))
        }
        SolverKind::Multigrid => {
            let (u, r) = solve_multigrid(&field, &st, config)?;
            Ok((u, Some(r)))
        }
        SolverKind::Wcnn => {
            let kernels = kernels.ok_or_else(|| {
                Error::BadConfig("the wcnn solver needs a kernel checkpoint".into())
            })?;
            let kernels = if kernels.channels() == field.channels() {
                kernels.clone()
            } else if kernels.channels() == 1 {
                kernels.replicate(field.channels())?
            } else {
                return Err(Error::ShapeMismatch {
                    expected: (0, 0, field.channels()),
                    got: (0, 0, kernels.channels()),
                });
            };
            let levels = default_levels(field.height(), field.width());
            Ok((forward(&kernels, &field, levels)?, None))
        }
    }
}

/// [`decode_unclamped`] followed by the clamp to [0, 255]; the clamp is
/// the only nonlinearity and happens nowhere inside the solvers.
pub fn decode(
    encoded: &EncodedLaplacian,
    config: &SolverConfig,
    kernels: Option<&KernelSet>,
) -> Result<(RasterImage, Option<SolverReport>)> {
    let (u, report) = decode_unclamped(encoded, config, kernels)?;
    Ok((u.clamped(), report))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated {
                needed: self.pos + n - self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Bit-exact container bytes.
pub fn serialize(encoded: &EncodedLaplacian) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.push(FORMAT_VERSION);
    out.push(0); // reserved: entropy-coding flag
    out.push(encoded.mode().code());
    out.push(encoded.stencil.code());
    out.extend_from_slice(&encoded.height.to_le_bytes());
    out.extend_from_slice(&encoded.width.to_le_bytes());
    out.extend_from_slice(&encoded.channels.to_le_bytes());
    out.extend_from_slice(&encoded.threshold.to_le_bytes());
    out.extend_from_slice(&encoded.quant.to_le_bytes());
    match &encoded.payload {
        Payload::Dense(values) => {
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Payload::Sparse(channels) => {
            for entries in channels {
                out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
                for (idx, v) in entries {
                    out.extend_from_slice(&idx.to_le_bytes());
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    out
}

pub fn deserialize(bytes: &[u8]) -> Result<EncodedLaplacian> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.u8()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let _reserved = r.u8()?;
    let mode = r.u8()?;
    let stencil_code = r.u8()?;
    let stencil = StencilId::from_code(stencil_code)
        .ok_or_else(|| Error::InvalidValue(format!("unknown stencil code {stencil_code}")))?;
    let height = r.u32()?;
    let width = r.u32()?;
    let channels = r.u32()?;
    let threshold = r.f32()?;
    let quant = r.f32()?;

    let pixels = height as usize * width as usize;
    let payload = match mode {
        0 => {
            let n = pixels * channels as usize;
            let mut values = Vec::with_capacity(n);
            for _ in 0..n {
                values.push(r.f32()?);
            }
            Payload::Dense(values)
        }
        1 => {
            let mut chans = Vec::with_capacity(channels as usize);
            for _ in 0..channels {
                let count = r.u32()? as usize;
                let mut entries = Vec::with_capacity(count);
                let mut prev: Option<u32> = None;
                for _ in 0..count {
                    let idx = r.u32()?;
                    let v = r.f32()?;
                    if idx as usize >= pixels {
                        return Err(Error::IndexOutOfRange {
                            index: idx,
                            limit: pixels,
                        });
                    }
                    if let Some(p) = prev {
                        if idx <= p {
                            return Err(Error::IndexOrder { prev: p, next: idx });
                        }
                    }
                    if v == 0.0 {
                        return Err(Error::InvalidValue(
                            "sparse payload holds an explicit zero".into(),
                        ));
                    }
                    prev = Some(idx);
                    entries.push((idx, v));
                }
                chans.push(entries);
            }
            Payload::Sparse(chans)
        }
        other => {
            return Err(Error::InvalidValue(format!(
                "unknown storage mode byte {other}"
            )));
        }
    };

    if r.pos != bytes.len() {
        return Err(Error::TrailingBytes {
            trailing: bytes.len() - r.pos,
        });
    }

    Ok(EncodedLaplacian {
        height,
        width,
        channels,
        stencil,
        threshold,
        quant,
        payload,
    })
}
