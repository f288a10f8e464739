//! Regenerates the bundled assets: test images, the pretrained reference
//! checkpoint, and the frozen forward-pass regression output.

use lapfield::synth::natural_image;
use lapfield::wcnn::{default_levels, forward, save_kernels, KernelSet};
use lapfield::Field;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn main() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("assets");
    for i in 0..10u64 {
        let img = natural_image(256, 256, 3, 1000 + i);
        let path = root.join(format!("images/natural{:02}.png", i + 1));
        lapfield::io::save_png(&path, &img).unwrap();
        println!("wrote {}", path.display());
    }
    let path = root.join("kernels/reference_5x5.json");
    save_kernels(&path, &KernelSet::pretrained_reference()).unwrap();
    println!("wrote {}", path.display());

    // Frozen 64x64 single-channel field for the forward-pass regression;
    // the acceptance suite re-derives this input and checks the committed
    // bytes against an independent straight-line evaluation.
    let mut rng = ChaCha12Rng::seed_from_u64(0xF0_2024);
    let input = Field::from_fn(64, 64, 1, |_, _, _| rng.gen_range(-32.0..32.0));
    let kernels = KernelSet::pretrained_reference();
    let out = forward(&kernels, &input, default_levels(64, 64)).unwrap();
    let mut bytes = Vec::with_capacity(out.as_slice().len() * 8);
    for v in out.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let path = root.join("tests/forward_reference_64.bin");
    std::fs::write(&path, &bytes).unwrap();
    println!("wrote {} ({} bytes)", path.display(), bytes.len());
}
