//! Seeded normal variates: ChaCha8 stream, Box–Muller transform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Name recorded in reports so a run can be reproduced.
pub const GENERATOR: &str = "chacha8+box-muller";

/// Standard normal generator. Box–Muller yields pairs; the second value is
/// cached for the next call.
#[derive(Debug, Clone)]
pub struct NormalRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the log finite
        let u1 = 1.0 - self.inner.random::<f64>();
        let u2: f64 = self.inner.random();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = self.standard_normal());
    }
}
