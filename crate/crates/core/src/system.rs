//! The two-level system: polarization states, waveplate evolution and the
//! generating Hamiltonian.
//!
//! Basis order is `|H>` (index 0, `Q = +1`) then `|V>` (index 1, `Q = -1`).

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::kernel::{apply, Operator, StateVector, C64, I, ONE, ZERO};

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qubit {
    amps: [C64; 2],
}

impl Qubit {
    /// Normalizes the given pair; the zero vector is rejected.
    pub fn new(h: C64, v: C64) -> Result<Self> {
        let norm = (h.norm_sqr() + v.norm_sqr()).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("qubit state must be nonzero".into()));
        }
        Ok(Self {
            amps: [h / norm, v / norm],
        })
    }

    pub fn horizontal() -> Self {
        Self { amps: [ONE, ZERO] }
    }

    pub fn vertical() -> Self {
        Self { amps: [ZERO, ONE] }
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        self.amps
    }

    pub fn to_state(&self) -> StateVector {
        StateVector::from_amplitudes(self.amps.to_vec())
    }

    pub fn from_state(v: &StateVector) -> Result<Self> {
        if v.dims() != [2] {
            return Err(Error::DimensionMismatch {
                expected: vec![2],
                found: v.dims().to_vec(),
            });
        }
        let a = v.amplitudes();
        Self::new(a[0], a[1])
    }

    pub fn evolve(&self, u: &Operator) -> Result<Self> {
        let out = apply(u, &self.to_state())?;
        let a = out.amplitudes();
        Ok(Self { amps: [a[0], a[1]] })
    }

    pub fn is_normalized(&self) -> bool {
        ((self.amps[0].norm_sqr() + self.amps[1].norm_sqr()).sqrt() - 1.0).abs() <= NORM_TOL
    }
}

/// `(|H> + |V>) / sqrt(2)`, the +1 eigenstate of `sigma_x`.
pub fn initial_state() -> Qubit {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    Qubit { amps: [s, s] }
}

/// Waveplate of optical thickness `delta`: `[[cos, i sin], [i sin, cos]] = exp(i delta sigma_x)`.
pub fn evolution(delta: f64) -> Operator {
    let (s, c) = delta.sin_cos();
    let c = C64::new(c, 0.0);
    let is = I * s;
    Operator::from_rows(&[vec![c, is], vec![is, c]]).expect("2x2")
}

/// `H_s = -hbar omega sigma_x`, so that `exp(-i H_s t) = evolution(omega t)`.
pub fn system_hamiltonian(omega: f64) -> Operator {
    Operator::pauli_x().scale(C64::new(-omega, 0.0))
}

/// Orthonormal measurement basis given by the columns of a 2x2 unitary.
///
/// Column `i` is the eigenvector recorded as outcome `i` (`Q = +1` for 0).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    rotation: Operator,
}

impl Default for MeasurementBasis {
    fn default() -> Self {
        Self::horizontal_vertical()
    }
}

impl MeasurementBasis {
    pub fn horizontal_vertical() -> Self {
        Self {
            rotation: Operator::identity(2),
        }
    }

    pub fn rotated(rotation: Operator) -> Result<Self> {
        if rotation.dims() != [2] {
            return Err(Error::DimensionMismatch {
                expected: vec![2],
                found: rotation.dims().to_vec(),
            });
        }
        if !rotation.is_unitary(NORM_TOL) {
            return Err(Error::InvalidArgument(
                "measurement basis rotation must be unitary".into(),
            ));
        }
        Ok(Self { rotation })
    }

    pub fn is_standard(&self) -> bool {
        self.rotation == Operator::identity(2)
    }

    pub fn vector(&self, outcome: usize) -> [C64; 2] {
        [self.rotation.get(0, outcome), self.rotation.get(1, outcome)]
    }

    /// `<a|psi>` for outcome `a`.
    pub fn amplitude(&self, outcome: usize, psi: [C64; 2]) -> C64 {
        let a = self.vector(outcome);
        a[0].conj() * psi[0] + a[1].conj() * psi[1]
    }

    /// `|a><a|` as an operator.
    pub fn projector(&self, outcome: usize) -> Operator {
        let a = self.vector(outcome);
        Operator::from_rows(&[
            vec![a[0] * a[0].conj(), a[0] * a[1].conj()],
            vec![a[1] * a[0].conj(), a[1] * a[1].conj()],
        ])
        .expect("2x2")
    }
}

/// Outcome label for record index: 0 -> +1, 1 -> -1.
pub fn outcome_value(index: usize) -> i8 {
    if index == 0 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    fn to_na(op: &Operator) -> DMatrix<C64> {
        let n = op.dim();
        DMatrix::from_row_slice(n, n, op.entries())
    }

    #[test]
    fn initial_state_examples() {
        let psi = initial_state();
        assert!(psi.is_normalized());
        assert!((psi.amplitudes()[0] - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        let flipped = psi.evolve(&Operator::pauli_x()).unwrap();
        assert_eq!(flipped, psi);
    }

    #[test]
    fn evolution_examples() {
        assert!(evolution(0.0).max_diff(&Operator::identity(2)).unwrap() < 1e-15);
        let out = Qubit::horizontal().evolve(&evolution(PI / 2.0)).unwrap();
        assert!((out.amplitudes()[0]).norm() < 1e-15);
        assert!((out.amplitudes()[1] - I).norm() < 1e-15);
        let p = Qubit::horizontal().evolve(&evolution(PI / 4.0)).unwrap().amplitudes()[1].norm_sqr();
        assert!((p - 0.5).abs() < 1e-15);
        for d in [-3.0, 0.1, 2.0, 17.5] {
            assert!(evolution(d).is_unitary(1e-12));
        }
    }

    #[test]
    fn hamiltonian_examples() {
        assert_eq!(system_hamiltonian(0.0).entries().iter().filter(|z| z.norm() != 0.0).count(), 0);
        let h = system_hamiltonian(1.0);
        assert!(h.is_hermitian(1e-15));
        let mut ev: Vec<f64> = to_na(&h).symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);

        // matrix exponential route vs the closed form
        let omega = 0.9;
        let t = PI / 2.0 / omega;
        let gen = to_na(&system_hamiltonian(omega)) * C64::new(0.0, -t);
        let u = gen.exp();
        let closed = to_na(&evolution(PI / 2.0));
        assert!((u - closed).camax() < 1e-12);
    }

    #[test]
    fn group_law_and_adjoint() {
        // deterministic pseudo-random pairs
        let mut x = 0.123_f64;
        for _ in 0..100 {
            x = (x * 7.31 + 0.917).fract();
            let d1 = (x - 0.5) * 20.0;
            x = (x * 5.77 + 0.311).fract();
            let d2 = (x - 0.5) * 20.0;
            let prod = evolution(d1).matmul(&evolution(d2)).unwrap();
            assert!(prod.max_diff(&evolution(d1 + d2)).unwrap() <= 1e-12);
            assert!(evolution(d1).adjoint().max_diff(&evolution(-d1)).unwrap() <= 1e-15);
        }
    }

    #[test]
    fn conditional_law_on_hv_basis() {
        for i in 0..50 {
            let d = PI * i as f64 / 49.0;
            let u = evolution(d);
            for a in 0..2 {
                for b in 0..2 {
                    let p = u.get(b, a).norm_sqr();
                    let want = if a == b { d.cos().powi(2) } else { d.sin().powi(2) };
                    assert!((p - want).abs() < 1e-12);
                }
            }
            let p_h = initial_state().evolve(&u).unwrap().amplitudes()[0].norm_sqr();
            assert!((p_h - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_rotation_must_be_unitary() {
        let bad = Operator::real_diagonal(&[1.0, 2.0]);
        assert!(MeasurementBasis::rotated(bad).is_err());
        let diag = MeasurementBasis::rotated(crate::kernel::dft(2).unwrap()).unwrap();
        let a = diag.amplitude(0, initial_state().amplitudes());
        assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(Qubit::new(ZERO, ZERO).is_err());
    }
}
