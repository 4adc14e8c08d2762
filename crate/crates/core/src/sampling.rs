//! Finite-shot detector statistics.
//!
//! The generator is SplitMix64 with the reference constants
//!
//! ```text
//! state  += 0x9E3779B97F4A7C15
//! z       = state
//! z       = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z       = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! output  = z ^ (z >> 31)
//! ```
//!
//! (all arithmetic wrapping mod 2^64). A uniform in `[0, 1)` is the top 53
//! output bits times `2^-53`. Each shot draws one uniform and selects the first
//! cell, in the order `(+,+), (+,-), (-,+), (-,-)`, whose cumulative
//! probability exceeds it.

use serde::Serialize;

use crate::correlations::JointDistribution;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(Self::GAMMA);
        mix64(self.state)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for task `index` under `master`, independent of execution order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(1).wrapping_mul(SplitMix64::GAMMA)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRecord {
    /// Lexicographic `(+,+), (+,-), (-,+), (-,-)`.
    pub counts: [u64; 4],
    pub shots: u64,
    pub seed: u64,
    pub estimates: [f64; 4],
    pub std_err: [f64; 4],
}

impl CountRecord {
    pub fn from_counts(counts: [u64; 4], seed: u64) -> Self {
        let shots: u64 = counts.iter().sum();
        let n = shots.max(1) as f64;
        let estimates = counts.map(|c| c as f64 / n);
        let std_err = estimates.map(|p| (p * (1.0 - p) / n).sqrt());
        Self {
            counts,
            shots,
            seed,
            estimates,
            std_err,
        }
    }

    pub fn p_same(&self) -> f64 {
        (self.counts[0] + self.counts[3]) as f64 / self.shots as f64
    }

    /// Estimated joint law; its phase is copied from the source distribution.
    pub fn joint(&self, phase: f64) -> JointDistribution {
        let e = self.estimates;
        JointDistribution {
            p: [[e[0], e[1]], [e[2], e[3]]],
            phase,
        }
    }

    /// `C_hat = 2 p_same - 1`.
    pub fn correlation(&self) -> f64 {
        2.0 * self.p_same() - 1.0
    }

    /// `2 sqrt(p_same (1 - p_same) / shots)`.
    pub fn correlation_std_err(&self) -> f64 {
        let p = self.p_same();
        2.0 * (p * (1.0 - p) / self.shots as f64).sqrt()
    }
}

/// One multinomial draw of `shots` detections over the four outcome cells.
pub fn draw_counts(j: &JointDistribution, shots: u64, seed: u64) -> CountRecord {
    let cells = j.cells();
    let mut cumulative = [0.0; 4];
    let mut acc = 0.0;
    for (c, p) in cumulative.iter_mut().zip(cells) {
        acc += p;
        *c = acc;
    }
    // rounding can leave the total just below 1; the overflow goes to the last
    // cell that carries weight
    let last = cells.iter().rposition(|&p| p > 0.0).unwrap_or(3);
    let mut rng = SplitMix64::new(seed);
    let mut counts = [0u64; 4];
    for _ in 0..shots {
        let u = rng.next_f64();
        let cell = cumulative.iter().position(|&c| u < c).unwrap_or(last);
        counts[cell] += 1;
    }
    CountRecord::from_counts(counts, seed)
}

/// `(K3_hat, se)` from records for `C12`, `C23`, `C13` in that order.
pub fn estimate_k3(records: &[CountRecord; 3]) -> (f64, f64) {
    let [c12, c23, c13] = records;
    let k3 = c12.correlation() + c23.correlation() - c13.correlation();
    let se = records
        .iter()
        .map(|r| r.correlation_std_err().powi(2))
        .sum::<f64>()
        .sqrt();
    (k3, se)
}
