//! Wall-clock measurement that degrades to zero on targets without a
//! monotonic clock (wasm).

#[cfg(not(target_arch = "wasm32"))]
#[derive(Clone, Copy)]
pub struct Stopwatch {
    start: std::time::Instant,
}

#[cfg(not(target_arch = "wasm32"))]
impl Stopwatch {
    pub fn start() -> Self {
        Self {
            start: std::time::Instant::now(),
        }
    }

    pub fn seconds(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

#[cfg(target_arch = "wasm32")]
#[derive(Clone, Copy)]
pub struct Stopwatch;

#[cfg(target_arch = "wasm32")]
impl Stopwatch {
    pub fn start() -> Self {
        Self
    }

    pub fn seconds(&self) -> f64 {
        0.0
    }
}
