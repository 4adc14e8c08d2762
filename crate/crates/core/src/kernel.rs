//! Dense complex linear algebra over labeled tensor-product spaces.
//!
//! Factor order is row-major: the first factor in `dims` varies slowest.
//! Every space in this crate is laid out as `[clock, system, memory1, memory2]`
//! with trailing factors omitted when absent.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Complex amplitude vector over a tensor-product space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    dims: Vec<usize>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        let size: usize = dims.iter().product();
        if size != amplitudes.len() || dims.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: vec![amplitudes.len()],
            });
        }
        Ok(Self { amplitudes, dims })
    }

    /// Single-factor vector.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Self {
        let n = amplitudes.len();
        Self {
            amplitudes,
            dims: vec![n],
        }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::from_amplitudes(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let size = dims.iter().product();
        Self {
            amplitudes: vec![ZERO; size],
            dims,
        }
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::OutOfRange {
                what: "basis",
                index: index as i64,
                bound: dim,
            });
        }
        let mut v = Self::zeros(vec![dim]);
        v.amplitudes[index] = ONE;
        Ok(v)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Returns the unit vector along `self`. A zero vector is rejected.
    pub fn normalize(&self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument(
                "cannot normalize a zero vector".into(),
            ));
        }
        Ok(self.scale(C64::new(1.0 / norm, 0.0)))
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
            dims: self.dims.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(&self.dims, &other.dims)?;
        Ok(Self {
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| a - b)
                .collect(),
            dims: self.dims.clone(),
        })
    }

    /// Max-norm distance `max_i |a_i - b_i|`.
    pub fn max_diff(&self, other: &Self) -> Result<f64> {
        check_dims(&self.dims, &other.dims)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Same amplitudes regrouped into different factors of equal total size.
    pub fn reshape(&self, dims: Vec<usize>) -> Result<Self> {
        Self::new(self.amplitudes.clone(), dims)
    }
}

/// Dense complex square matrix acting on a labeled space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    entries: Vec<C64>,
    dims: Vec<usize>,
}

impl Operator {
    /// Row-major entries; `entries.len()` must equal `product(dims)^2`.
    pub fn new(entries: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        let size: usize = dims.iter().product();
        if dims.is_empty() || entries.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: vec![entries.len()],
            });
        }
        Ok(Self { entries, dims })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("operator rows must form a square".into()));
        }
        Self::new(rows.concat(), vec![n])
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![ONE; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: vec![ZERO; dim * dim],
            dims: vec![dim],
        }
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let n = values.len();
        let mut op = Self::zeros(n);
        for (i, &v) in values.iter().enumerate() {
            op.entries[i * n + i] = v;
        }
        op
    }

    pub fn real_diagonal(values: &[f64]) -> Self {
        Self::diagonal(&values.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
    }

    pub fn pauli_x() -> Self {
        Self::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).expect("2x2")
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim() + col]
    }

    /// Regroup the factor labels without touching entries.
    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        if dims.iter().product::<usize>() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                found: dims,
            });
        }
        self.dims = dims;
        Ok(self)
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim();
        let mut entries = vec![ZERO; n * n];
        for r in 0..n {
            for c in 0..n {
                entries[c * n + r] = self.entries[r * n + c].conj();
            }
        }
        Self {
            entries,
            dims: self.dims.clone(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dims(&self.dims, &other.dims)?;
        let n = self.dim();
        let mut entries = vec![ZERO; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.entries[r * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.entries[k * n..(k + 1) * n];
                for (dst, b) in entries[r * n..(r + 1) * n].iter_mut().zip(row) {
                    *dst += a * b;
                }
            }
        }
        Ok(Self {
            entries,
            dims: self.dims.clone(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(&self.dims, &other.dims)?;
        Ok(Self {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
            dims: self.dims.clone(),
        })
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            entries: self.entries.iter().map(|a| a * factor).collect(),
            dims: self.dims.clone(),
        }
    }

    pub fn trace(&self) -> C64 {
        let n = self.dim();
        (0..n).map(|i| self.entries[i * n + i]).sum()
    }

    pub fn max_diff(&self, other: &Self) -> Result<f64> {
        check_dims(&self.dims, &other.dims)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `max |U^dagger U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.adjoint().matmul(self).expect("same dims");
        prod.max_diff(&Self::identity(self.dim()).with_dims(self.dims.clone()).expect("same size"))
            .expect("same dims")
    }

    /// `max |A - A^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_diff(&self.adjoint()).expect("same dims")
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }
}

fn check_dims(expected: &[usize], found: &[usize]) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            expected: expected.to_vec(),
            found: found.to_vec(),
        });
    }
    Ok(())
}

/// Kronecker product of two state vectors; factor lists are concatenated.
pub fn tensor(a: &StateVector, b: &StateVector) -> StateVector {
    let mut amplitudes = Vec::with_capacity(a.len() * b.len());
    for x in &a.amplitudes {
        amplitudes.extend(b.amplitudes.iter().map(|y| x * y));
    }
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    StateVector { amplitudes, dims }
}

pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let (na, nb) = (a.dim(), b.dim());
    let n = na * nb;
    let mut entries = vec![ZERO; n * n];
    for ar in 0..na {
        for ac in 0..na {
            let x = a.entries[ar * na + ac];
            if x == ZERO {
                continue;
            }
            for br in 0..nb {
                let row = (ar * nb + br) * n + ac * nb;
                for bc in 0..nb {
                    entries[row + bc] = x * b.entries[br * nb + bc];
                }
            }
        }
    }
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    Operator { entries, dims }
}

pub fn apply(op: &Operator, v: &StateVector) -> Result<StateVector> {
    if op.dim() != v.len() || op.dims != v.dims {
        return Err(Error::DimensionMismatch {
            expected: op.dims.clone(),
            found: v.dims.clone(),
        });
    }
    let n = v.len();
    let amplitudes = (0..n)
        .map(|r| {
            op.entries[r * n..(r + 1) * n]
                .iter()
                .zip(&v.amplitudes)
                .map(|(a, x)| a * x)
                .sum()
        })
        .collect();
    Ok(StateVector {
        amplitudes,
        dims: v.dims.clone(),
    })
}

/// Applies `op` to the contiguous factor block starting at `first_factor`
/// without materializing the full Kronecker product with identities.
pub fn apply_on_factors(
    op: &Operator,
    first_factor: usize,
    v: &StateVector,
) -> Result<StateVector> {
    let k = op.dims.len();
    if first_factor + k > v.dims.len() || v.dims[first_factor..first_factor + k] != op.dims[..] {
        return Err(Error::DimensionMismatch {
            expected: op.dims.clone(),
            found: v.dims.clone(),
        });
    }
    let outer: usize = v.dims[..first_factor].iter().product();
    let inner: usize = v.dims[first_factor + k..].iter().product();
    let mid = op.dim();
    let mut out = vec![ZERO; v.len()];
    for o in 0..outer {
        for r in 0..mid {
            let row = &op.entries[r * mid..(r + 1) * mid];
            for i in 0..inner {
                let mut acc = ZERO;
                for (c, a) in row.iter().enumerate() {
                    acc += a * v.amplitudes[(o * mid + c) * inner + i];
                }
                out[(o * mid + r) * inner + i] = acc;
            }
        }
    }
    Ok(StateVector {
        amplitudes: out,
        dims: v.dims.clone(),
    })
}

/// Unitary discrete Fourier matrix `F[j,k] = exp(+2 pi i j k / n) / sqrt(n)`.
///
/// Column `m` is the plane wave with signed harmonic `m` on an `n`-point
/// periodic lattice.
pub fn dft(n: usize) -> Result<Operator> {
    if n == 0 {
        return Err(Error::InvalidArgument("dft dimension must be >= 1".into()));
    }
    let norm = 1.0 / (n as f64).sqrt();
    let mut entries = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            // reduce j*k mod n before scaling to keep the phase argument small
            let jk = (j * k) % n;
            entries.push(C64::from_polar(norm, 2.0 * PI * jk as f64 / n as f64));
        }
    }
    Operator::new(entries, vec![n])
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner(a: &StateVector, b: &StateVector) -> Result<C64> {
    check_dims(&a.dims, &b.dims)?;
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}
