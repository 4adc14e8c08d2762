//! Leggett-Garg statistic `K3 = C12 + C23 - C13` for equally spaced times
//! `t1 = 0`, `t2 = dt_phase`, `t3 = 2 dt_phase`.
//!
//! `C13` uses a doubled index gap. `C23` is read from a two-measurement
//! history whose preparation is first evolved by `U(x)`, which places the
//! first record at `t2` without disturbing the system before it.

use rayon::prelude::*;
use serde::Serialize;

use crate::backend::{realize_phase, CorrelationBackend, OmegaChoice, TwoTimeSetup};
use crate::clock::ClockRegister;
use crate::correlations::two_time_correlation;
use crate::error::{Error, Result};
use crate::sampling::{derive_seed, estimate_k3, CountRecord};
use crate::system::{evolution, initial_state};

const RANGE_TOL: f64 = 1e-12;
/// `K3` must exceed 1 by more than this to count as a violation.
pub const VIOLATION_TOL: f64 = 1e-9;

/// Published reference rows: `(x, theory, experiment, experiment_se)`.
pub const TABLE_I: [(f64, f64, f64, f64); 3] = [
    (0.2, 1.159, 1.138, 0.004),
    (0.5, 1.499, 1.538, 0.018),
    (0.7, 1.282, 1.238, 0.018),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LgPoint {
    pub x: f64,
    pub c12: f64,
    pub c23: f64,
    pub c13: f64,
    pub k3: f64,
    pub violated: bool,
}

impl LgPoint {
    pub fn from_correlations(x: f64, c12: f64, c23: f64, c13: f64) -> Result<Self> {
        let k3 = k3_combine(c12, c23, c13)?;
        Ok(Self {
            x,
            c12,
            c23,
            c13,
            k3,
            violated: k3 > 1.0 + VIOLATION_TOL,
        })
    }
}

/// One `K3` evaluation; sampled backends also carry the three count records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LgEstimate {
    pub point: LgPoint,
    pub k3_se: Option<f64>,
    pub records: Option<[CountRecord; 3]>,
}

/// Lattice placement shared by the three correlation runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LgLattice {
    pub clock: ClockRegister,
    pub omega: OmegaChoice,
    /// Index of the first record in every run.
    pub ka: usize,
}

pub fn k3_combine(c12: f64, c23: f64, c13: f64) -> Result<f64> {
    for (name, c) in [("c12", c12), ("c23", c23), ("c13", c13)] {
        if !(-1.0 - RANGE_TOL..=1.0 + RANGE_TOL).contains(&c) {
            return Err(Error::InvalidArgument(format!("{name} = {c} outside [-1, 1]")));
        }
    }
    Ok(c12 + c23 - c13)
}

/// `2 cos^2 x - 2 sin^2 x - cos^2 2x + sin^2 2x = 2 cos 2x - cos 4x`.
pub fn k3_analytic(x: f64) -> f64 {
    2.0 * (2.0 * x).cos() - (4.0 * x).cos()
}

pub fn k3_simulated(
    lattice: &LgLattice,
    x: f64,
    backend: &dyn CorrelationBackend,
    seed: u64,
) -> Result<LgEstimate> {
    if !(x > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "measurement spacing phase must be positive, got {x}"
        )));
    }
    let (omega, gap) = realize_phase(&lattice.clock, lattice.omega, x)?;
    let x_real = omega * gap as f64 * lattice.clock.dt();
    let psi0 = initial_state();
    let s12 = TwoTimeSetup::with_gap(lattice.clock, omega, psi0, lattice.ka, gap)?;
    let s13 = TwoTimeSetup::with_gap(lattice.clock, omega, psi0, lattice.ka, 2 * gap)?;
    let shifted = psi0.evolve(&evolution(x_real))?;
    let s23 = TwoTimeSetup::with_gap(lattice.clock, omega, shifted, lattice.ka, gap)?;

    let runs = [s12, s23, s13]
        .iter()
        .enumerate()
        .map(|(i, s)| backend.measure(s, derive_seed(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let corr: Vec<f64> = runs.iter().map(|m| two_time_correlation(&m.joint)).collect();
    let point = LgPoint::from_correlations(x, corr[0], corr[1], corr[2])?;

    let records: Option<Vec<CountRecord>> = runs.into_iter().map(|m| m.counts).collect();
    match records {
        Some(r) => {
            let records: [CountRecord; 3] = r.try_into().expect("three runs");
            let (k3_hat, se) = estimate_k3(&records);
            debug_assert!((k3_hat - point.k3).abs() < 1e-9);
            Ok(LgEstimate {
                point,
                k3_se: Some(se),
                records: Some(records),
            })
        }
        None => Ok(LgEstimate {
            point,
            k3_se: None,
            records: None,
        }),
    }
}

/// Evaluates every grid phase; point `i` is seeded with `derive_seed(seed, i)`
/// so serial and parallel runs agree.
pub fn k3_sweep(
    lattice: &LgLattice,
    grid: &[f64],
    backend: &dyn CorrelationBackend,
    seed: u64,
    parallel: bool,
) -> Result<Vec<LgEstimate>> {
    let eval = |(i, &x): (usize, &f64)| k3_simulated(lattice, x, backend, derive_seed(seed, i as u64));
    if parallel {
        grid.par_iter().enumerate().map(eval).collect()
    } else {
        grid.iter().enumerate().map(eval).collect()
    }
}
