//! Joint and conditional two-time outcome laws read off history states.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::history::{record_level, HistoryState, MEMORY_DIM};
use crate::system::outcome_value;

/// Rows with `p(a)` at or below this are treated as never observed.
pub const MARGINAL_FLOOR: f64 = 1e-14;

/// `p(a, b)` over outcome pairs, indexed `[a][b]` with 0 for `+1`, 1 for `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointDistribution {
    pub p: [[f64; 2]; 2],
    /// `omega (t_b - t_a)` the law was obtained at.
    pub phase: f64,
}

impl JointDistribution {
    pub fn new(p: [[f64; 2]; 2], phase: f64) -> Result<Self> {
        let total: f64 = p.iter().flatten().sum();
        if p.iter().flatten().any(|&x| !(x >= 0.0)) || (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "joint distribution must be nonnegative and sum to 1, got {p:?}"
            )));
        }
        Ok(Self { p, phase })
    }

    pub fn marginal_first(&self, a: usize) -> f64 {
        self.p[a][0] + self.p[a][1]
    }

    pub fn marginal_second(&self, b: usize) -> f64 {
        self.p[0][b] + self.p[1][b]
    }

    /// `p(+,+) + p(-,-)`.
    pub fn p_same(&self) -> f64 {
        self.p[0][0] + self.p[1][1]
    }

    /// Cells in lexicographic order `(+,+), (+,-), (-,+), (-,-)`.
    pub fn cells(&self) -> [f64; 4] {
        [self.p[0][0], self.p[0][1], self.p[1][0], self.p[1][1]]
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.cells()
            .iter()
            .zip(other.cells())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `p(b | a)`; rows whose marginal is unobserved are flagged, not filled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalTable {
    pub p: [[f64; 2]; 2],
    pub defined: [bool; 2],
}

impl ConditionalTable {
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.defined[a].then_some(self.p[a][b])
    }

    /// Mean over defined rows of `p(b = a | a)`.
    pub fn same_given(&self) -> Option<f64> {
        self.mean_over_rows(|a| self.p[a][a])
    }

    pub fn diff_given(&self) -> Option<f64> {
        self.mean_over_rows(|a| self.p[a][1 - a])
    }

    fn mean_over_rows(&self, f: impl Fn(usize) -> f64) -> Option<f64> {
        let rows: Vec<f64> = (0..2).filter(|&a| self.defined[a]).map(f).collect();
        (!rows.is_empty()).then(|| rows.iter().sum::<f64>() / rows.len() as f64)
    }
}

/// Squared norms of the memory-pair branches `(m1, m2)` in the renormalized
/// slice at clock index `k`.
pub fn memory_pair_distribution(h: &HistoryState, k: usize) -> Result<[[f64; MEMORY_DIM]; MEMORY_DIM]> {
    if h.measurement_count() != 2 {
        return Err(Error::InvalidArgument("history lacks two memories".into()));
    }
    let slice = h.condition_on_time(k)?;
    let a = slice.amplitudes();
    let m = MEMORY_DIM;
    let mut out = [[0.0; MEMORY_DIM]; MEMORY_DIM];
    for s in 0..2 {
        for (m1, row) in out.iter_mut().enumerate() {
            for (m2, cell) in row.iter_mut().enumerate() {
                *cell += a[(s * m + m1) * m + m2].norm_sqr();
            }
        }
    }
    // renormalize weights rather than amplitudes: equal branches come out exact
    let total: f64 = out.iter().flatten().sum();
    if total == 0.0 {
        return Err(Error::InvalidArgument("zero-weight clock slice".into()));
    }
    out.iter_mut().flatten().for_each(|w| *w /= total);
    Ok(out)
}

/// Distribution of the first memory alone at clock index `k`.
pub fn first_memory_distribution(h: &HistoryState, k: usize) -> Result<[f64; MEMORY_DIM]> {
    if h.measurement_count() == 0 {
        return Err(Error::InvalidArgument("history has no memory".into()));
    }
    let slice = h.condition_on_time(k)?;
    let per_level = slice.len() / (2 * MEMORY_DIM);
    let mut out = [0.0; MEMORY_DIM];
    for (i, amp) in slice.amplitudes().iter().enumerate() {
        out[(i / per_level) % MEMORY_DIM] += amp.norm_sqr();
    }
    let total: f64 = out.iter().sum();
    if total == 0.0 {
        return Err(Error::InvalidArgument("zero-weight clock slice".into()));
    }
    out.iter_mut().for_each(|w| *w /= total);
    Ok(out)
}

/// Born-rule joint law of the two records at the first index holding both.
pub fn extract_joint(h: &HistoryState) -> Result<JointDistribution> {
    let (ka, kb) = match (h.ka(), h.kb()) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::InvalidArgument(
                "joint extraction needs a two-measurement history".into(),
            ))
        }
    };
    if kb >= h.clock().n() {
        return Err(Error::Regions("no lattice point after the second measurement".into()));
    }
    let pairs = memory_pair_distribution(h, kb)?;
    let mut p = [[0.0; 2]; 2];
    for (a, row) in p.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            *cell = pairs[record_level(a)][record_level(b)];
        }
    }
    let phase = h.omega() * (kb - ka) as f64 * h.clock().dt();
    JointDistribution::new(p, phase)
}

/// `p(b|a) = p(a,b) / p(a)`.
pub fn bayes_conditional(j: &JointDistribution) -> ConditionalTable {
    let mut p = [[0.0; 2]; 2];
    let mut defined = [false; 2];
    for a in 0..2 {
        let pa = j.marginal_first(a);
        if pa > MARGINAL_FLOOR {
            defined[a] = true;
            p[a] = [j.p[a][0] / pa, j.p[a][1] / pa];
        }
    }
    ConditionalTable { p, defined }
}

/// Closed-form joint for `|psi0> = (|H> + |V>)/sqrt 2` measured twice in the
/// H/V basis: `cos^2/2` on equal outcomes, `sin^2/2` on unequal ones.
pub fn analytic_joint(phase: f64) -> JointDistribution {
    let same = 0.5 * phase.cos().powi(2);
    let diff = 0.5 * phase.sin().powi(2);
    JointDistribution {
        p: [[same, diff], [diff, same]],
        phase,
    }
}

/// `C = sum Q_a Q_b p(a, b)`.
pub fn two_time_correlation(j: &JointDistribution) -> f64 {
    let mut c = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            c += (outcome_value(a) * outcome_value(b)) as f64 * j.p[a][b];
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::ClockRegister;
    use crate::history::{double_measurement_history, Measurement};
    use crate::system::{initial_state, Qubit};
    use std::f64::consts::PI;

    fn history_at_gap(n: usize, j: i64, ka: usize, gap: usize) -> HistoryState {
        let c = ClockRegister::new(n, 1.0).unwrap();
        let w = c.commensurate_frequency(j).unwrap();
        double_measurement_history(&c, initial_state(), w, Measurement::standard(ka), Measurement::standard(ka + gap)).unwrap()
    }

    #[test]
    fn extract_joint_examples() {
        let c = ClockRegister::new(8, 1.0).unwrap();
        let h = double_measurement_history(&c, initial_state(), 0.0, Measurement::standard(2), Measurement::standard(4)).unwrap();
        let j = extract_joint(&h).unwrap();
        assert!(j.max_diff(&analytic_joint(0.0)) < 1e-15);
        assert_eq!(j.p[0][1], 0.0);

        // n=24, j=6: omega = pi/2 per tick
        let j = extract_joint(&history_at_gap(24, 6, 3, 1)).unwrap();
        assert!((j.phase - PI / 2.0).abs() < 1e-15);
        assert!((j.p[0][1] - 0.5).abs() < 1e-12 && j.p[0][0].abs() < 1e-12);

        // n=24, j=4, gap 1: phase pi/3
        let j = extract_joint(&history_at_gap(24, 4, 3, 1)).unwrap();
        assert!((j.p[0][0] - 0.125).abs() < 1e-12, "{:?}", j);
        assert!((j.p_same() - 0.25).abs() < 1e-12);
        assert!((j.p[0][1] + j.p[1][0] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn brute_force_amplitude_expansion_at_third_of_pi() {
        // direct expansion of the third term: sum over a of <b|U|a><a|psi(t_a)>
        let phase = PI / 3.0;
        let (s, c) = phase.sin_cos();
        let psi_ta = [std::f64::consts::FRAC_1_SQRT_2; 2]; // sigma_x eigenstate, phase only
        let mut p = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let u_ba = if a == b { c } else { s };
                p[a][b] = (u_ba * psi_ta[a]).powi(2);
            }
        }
        let got = extract_joint(&history_at_gap(24, 4, 5, 1)).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!((got.p[a][b] - p[a][b]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn extract_joint_requires_two_measurements() {
        let c = ClockRegister::new(8, 1.0).unwrap();
        let h = crate::history::free_history(&c, initial_state(), 0.1);
        assert!(extract_joint(&h).is_err());
    }

    #[test]
    fn bayes_examples() {
        let j = JointDistribution::new([[0.375, 0.125], [0.125, 0.375]], 0.0).unwrap();
        let t = bayes_conditional(&j);
        assert_eq!(t.get(0, 0), Some(0.75));
        let t = bayes_conditional(&analytic_joint(0.0));
        assert_eq!(t.get(0, 0), Some(1.0));
        assert_eq!(t.get(1, 1), Some(1.0));
        let t = bayes_conditional(&analytic_joint(PI / 3.0));
        assert!((t.get(0, 0).unwrap() - 0.25).abs() < 1e-12);
        assert!((t.get(1, 1).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn undefined_rows_are_flagged() {
        let c = ClockRegister::new(8, 1.0).unwrap();
        let h = double_measurement_history(&c, Qubit::horizontal(), 0.0, Measurement::standard(2), Measurement::standard(5)).unwrap();
        let t = bayes_conditional(&extract_joint(&h).unwrap());
        assert_eq!(t.defined, [true, false]);
        assert_eq!(t.get(1, 0), None);
        assert_eq!(t.same_given(), Some(1.0));
        let j = JointDistribution::new([[0.0, 0.0], [0.0, 0.0]], 0.0);
        assert!(j.is_err());
    }

    #[test]
    fn analytic_joint_examples() {
        assert_eq!(analytic_joint(0.0).cells(), [0.5, 0.0, 0.0, 0.5]);
        for x in analytic_joint(PI / 4.0).cells() {
            assert!((x - 0.25).abs() < 1e-15);
        }
        assert!((analytic_joint(0.7).p[0][0] - 0.292_491_785_725_060_3).abs() < 1e-15);
    }

    #[test]
    fn correlation_examples() {
        assert_eq!(two_time_correlation(&analytic_joint(0.0)), 1.0);
        assert!(two_time_correlation(&analytic_joint(PI / 4.0)).abs() < 1e-15);
        assert!((two_time_correlation(&analytic_joint(PI / 6.0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn region_independence() {
        let h = history_at_gap(32, 3, 5, 7);
        let kb = h.kb().unwrap();
        let reference = memory_pair_distribution(&h, kb).unwrap();
        for k in kb..32 {
            let d = memory_pair_distribution(&h, k).unwrap();
            for (r, dr) in reference.iter().flatten().zip(d.iter().flatten()) {
                assert!((r - dr).abs() <= 1e-12);
            }
        }
        let ka = h.ka().unwrap();
        let reference = first_memory_distribution(&h, ka).unwrap();
        for k in ka..kb {
            let d = first_memory_distribution(&h, k).unwrap();
            for (r, dr) in reference.iter().zip(d.iter()) {
                assert!((r - dr).abs() <= 1e-12);
            }
        }
    }
}
