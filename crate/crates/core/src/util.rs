//! Small shared plumbing: run budgets and deterministic RNG streams.

use std::time::{Duration, Instant};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Iteration and/or wall-clock budget. Budgets are checked between outer
/// iterations only, so overshoot is bounded by one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub max_iters: Option<usize>,
    pub max_seconds: Option<f64>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget { max_iters: None, max_seconds: None }
    }

    pub fn iterations(n: usize) -> Self {
        Budget { max_iters: Some(n), max_seconds: None }
    }

    pub fn seconds(s: f64) -> Self {
        Budget { max_iters: None, max_seconds: Some(s) }
    }

    pub fn start(&self) -> Stopwatch {
        Stopwatch { started: Instant::now(), budget: *self }
    }
}

/// Running clock against a [`Budget`].
#[derive(Debug, Clone)]
pub struct Stopwatch {
    started: Instant,
    budget: Budget,
}

impl Stopwatch {
    /// True once the budget no longer allows starting iteration `iter`
    /// (zero-based: `exhausted(0)` is true only for a zero budget).
    pub fn exhausted(&self, iter: usize) -> bool {
        if let Some(max) = self.budget.max_iters {
            if iter >= max {
                return true;
            }
        }
        if let Some(secs) = self.budget.max_seconds {
            if self.started.elapsed() >= Duration::from_secs_f64(secs.max(0.0)) {
                return true;
            }
        }
        false
    }

    pub fn elapsed_seconds(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }
}

/// FNV-1a over a byte stream; used to derive per-purpose RNG seeds.
fn fnv1a64(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Deterministic RNG stream derived from a master seed, a purpose label and
/// a stream index. The generator is pinned to ChaCha8 so that sequences stay
/// stable across library versions.
pub fn stream_rng(master_seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let bytes = master_seed
        .to_le_bytes()
        .into_iter()
        .chain(label.bytes())
        .chain(index.to_le_bytes());
    ChaCha8Rng::seed_from_u64(fnv1a64(bytes))
}

/// Format a float for CSV output: shortest round-trip representation with
/// negative zero normalized, so reruns are byte-identical.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}
