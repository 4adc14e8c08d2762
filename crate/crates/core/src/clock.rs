//! Periodic time lattice standing in for the continuous clock register.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::{dft, Operator, StateVector, C64};

/// `n` lattice times `t_k = k * dt` on one period of length `n * dt`.
///
/// `hbar` is fixed to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockRegister {
    n: usize,
    dt: f64,
}

impl ClockRegister {
    pub const HBAR: f64 = 1.0;

    pub fn new(n: usize, dt: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "clock size must be even and >= 4, got {n}"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "clock spacing must be positive, got {dt}"
            )));
        }
        Ok(Self { n, dt })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn span(&self) -> f64 {
        self.n as f64 * self.dt
    }

    /// Signed harmonic of DFT column `m`: `m` below `n/2`, `m - n` from `n/2` on.
    pub fn signed_harmonic(&self, m: usize) -> i64 {
        if m < self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    /// Momentum eigenvalues in DFT column order.
    pub fn momentum_eigenvalues(&self) -> Vec<f64> {
        (0..self.n)
            .map(|m| 2.0 * PI * self.signed_harmonic(m) as f64 / self.span())
            .collect()
    }

    pub fn time_eigenstate(&self, k: usize) -> Result<StateVector> {
        if k >= self.n {
            return Err(Error::OutOfRange {
                what: "clock",
                index: k as i64,
                bound: self.n,
            });
        }
        StateVector::basis(self.n, k)
    }

    /// `Omega = F diag(omega_m) F^dagger`, the lattice form of `-i d/dt`.
    pub fn momentum_operator(&self) -> Operator {
        let f = dft(self.n).expect("n >= 4");
        let diag = Operator::real_diagonal(&self.momentum_eigenvalues());
        f.matmul(&diag)
            .and_then(|fd| fd.matmul(&f.adjoint()))
            .expect("square operators of equal size")
    }

    pub fn clock_hamiltonian(&self) -> Operator {
        self.momentum_operator().scale(C64::new(Self::HBAR, 0.0))
    }

    /// `2 pi j / (n dt)`; both `+omega` and `-omega` are exact momentum eigenvalues.
    pub fn commensurate_frequency(&self, j: i64) -> Result<f64> {
        let max = self.n as i64 / 2 - 1;
        if j < 1 || j > max {
            return Err(Error::Nyquist {
                harmonic: j,
                max,
                n: self.n,
            });
        }
        Ok(2.0 * PI * j as f64 / self.span())
    }

    /// `sum_k exp(i omega t_k) |t_k> / sqrt(n)`.
    pub fn plane_wave(&self, omega: f64) -> StateVector {
        let norm = 1.0 / (self.n as f64).sqrt();
        StateVector::from_amplitudes(
            (0..self.n)
                .map(|k| C64::from_polar(norm, omega * self.time(k)))
                .collect(),
        )
    }
}
