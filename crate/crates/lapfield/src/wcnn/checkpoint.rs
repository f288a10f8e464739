//! Kernel checkpoint files.
//!
//! JSON with exact `f64` round-trip (shortest-representation printing), so
//! a checkpoint written, read, and written again is byte-identical and
//! hand-written decimal values load verbatim.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wcnn::KernelSet;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ChannelKernels {
    h: Vec<f64>,
    g: Vec<f64>,
    k: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    channels: usize,
    kernel_size: usize,
    kernels: Vec<ChannelKernels>,
}

pub fn kernels_to_json(set: &KernelSet) -> String {
    let file = CheckpointFile {
        format: "lapfield-kernels".to_string(),
        version: CHECKPOINT_VERSION,
        channels: set.channels(),
        kernel_size: set.kernel_size(),
        kernels: (0..set.channels())
            .map(|c| ChannelKernels {
                h: set.analysis(c).to_vec(),
                g: set.reconstruction(c).to_vec(),
                k: set.synthesis(c).to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("kernel checkpoints always serialize")
}

pub fn kernels_from_json(text: &str) -> Result<KernelSet> {
    let file: CheckpointFile =
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if file.format != "lapfield-kernels" {
        return Err(Error::Checkpoint(format!(
            "unknown checkpoint format {:?}",
            file.format
        )));
    }
    if file.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {}",
            file.version
        )));
    }
    let mut h = Vec::with_capacity(file.kernels.len());
    let mut g = Vec::with_capacity(file.kernels.len());
    let mut k = Vec::with_capacity(file.kernels.len());
    for ch in file.kernels {
        h.push(ch.h);
        g.push(ch.g);
        k.push(ch.k);
    }
    KernelSet::from_parts(file.channels, file.kernel_size, h, g, k)
}

pub fn save_kernels(path: &Path, set: &KernelSet) -> Result<()> {
    std::fs::write(path, kernels_to_json(set))?;
    Ok(())
}

pub fn load_kernels(path: &Path) -> Result<KernelSet> {
    let text = std::fs::read_to_string(path)?;
    kernels_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn json_round_trip_is_value_exact_and_stable() {
        let mut rng = ChaCha12Rng::seed_from_u64(51);
        let mut set = KernelSet::zeros(3, 5).unwrap();
        set.for_each_param_mut(|v| *v = rng.gen_range(-1.0..1.0));
        let text = kernels_to_json(&set);
        let back = kernels_from_json(&text).unwrap();
        assert_eq!(set, back);
        assert_eq!(text, kernels_to_json(&back));
    }

    #[test]
    fn accepts_hand_written_decimals_verbatim() {
        let text = r#"{
            "format": "lapfield-kernels",
            "version": 1,
            "channels": 1,
            "kernel_size": 3,
            "kernels": [
                {
                    "h": [0.020, 0.072, 0.106, 0.072, 0.245, 0.348, 0.107, 0.348, 0.495],
                    "g": [0.029, 0.087, 0.028, 0.087, 0.311, 0.087, 0.028, 0.087, 0.028],
                    "k": [-0.023, 0.091, 0.188, 0.090, 0.262, 0.331, 0.187, 0.331, 0.340]
                }
            ]
        }"#;
        let set = kernels_from_json(text).unwrap();
        assert_eq!(set.analysis(0)[0], 0.020);
        assert_eq!(set.reconstruction(0)[4], 0.311);
        assert_eq!(set.synthesis(0)[0], -0.023);
    }

    #[test]
    fn rejects_wrong_version_and_shapes() {
        let set = KernelSet::zeros(1, 3).unwrap();
        let good = kernels_to_json(&set);
        let bad_version = good.replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(
            kernels_from_json(&bad_version),
            Err(Error::Checkpoint(_))
        ));
        let bad_shape = good.replace("\"kernel_size\": 3", "\"kernel_size\": 5");
        assert!(matches!(
            kernels_from_json(&bad_shape),
            Err(Error::Checkpoint(_))
        ));
        assert!(matches!(
            kernels_from_json("not json"),
            Err(Error::Checkpoint(_))
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        let set = KernelSet::pretrained_reference();
        save_kernels(&path, &set).unwrap();
        let back = load_kernels(&path).unwrap();
        assert_eq!(set, back);
    }
}
