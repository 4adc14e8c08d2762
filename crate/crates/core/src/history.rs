//! Global history states over the clock lattice.
//!
//! A history is built with zero, one or two instantaneous von Neumann
//! measurements. With measurements at `ka < kb` the lattice splits into three
//! regions: `[0, ka)` before any record, `[ka, kb)` with the first memory
//! holding a record, and `[kb, n)` with both memories holding records.

use crate::clock::ClockRegister;
use crate::error::{Error, Result};
use crate::kernel::{apply, apply_on_factors, kron, Operator, StateVector, C64, ONE, ZERO};
use crate::system::{evolution, system_hamiltonian, MeasurementBasis, Qubit};

/// Memory levels: ready `|r>`, then one record level per outcome.
pub const MEMORY_DIM: usize = 3;
pub const READY: usize = 0;

const NORM_TOL: f64 = 1e-12;

/// Memory level holding the record of `outcome` (0 -> `|+1>`, 1 -> `|-1>`).
pub fn record_level(outcome: usize) -> usize {
    1 + outcome
}

/// Von Neumann record unitary on `system (x) memory`.
///
/// Conditioned on outcome `a` the memory levels cycle `r -> a -> a' -> r`,
/// where `a'` is the other record level. Only the action on `|r>` is used by
/// the histories; the cycle completes it to a permutation.
pub fn record_unitary(basis: &MeasurementBasis) -> Operator {
    let mut total = Operator::zeros(2 * MEMORY_DIM).with_dims(vec![2, MEMORY_DIM]).unwrap();
    for a in 0..2 {
        let mine = record_level(a);
        let other = record_level(1 - a);
        let mut rows = vec![vec![ZERO; MEMORY_DIM]; MEMORY_DIM];
        rows[mine][READY] = ONE;
        rows[other][mine] = ONE;
        rows[READY][other] = ONE;
        let perm = Operator::from_rows(&rows).expect("3x3");
        total = total.add(&kron(&basis.projector(a), &perm)).expect("same dims");
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub index: usize,
    pub basis: MeasurementBasis,
}

impl Measurement {
    pub fn new(index: usize, basis: MeasurementBasis) -> Self {
        Self { index, basis }
    }

    pub fn standard(index: usize) -> Self {
        Self::new(index, MeasurementBasis::default())
    }
}

/// Global clock (x) system (x) memories state with its construction parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryState {
    state: StateVector,
    clock: ClockRegister,
    omega: f64,
    psi0: Qubit,
    first: Option<Measurement>,
    second: Option<Measurement>,
}

impl HistoryState {
    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn clock(&self) -> &ClockRegister {
        &self.clock
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn initial(&self) -> Qubit {
        self.psi0
    }

    pub fn ka(&self) -> Option<usize> {
        self.first.as_ref().map(|m| m.index)
    }

    pub fn kb(&self) -> Option<usize> {
        self.second.as_ref().map(|m| m.index)
    }

    pub fn first(&self) -> Option<&Measurement> {
        self.first.as_ref()
    }

    pub fn second(&self) -> Option<&Measurement> {
        self.second.as_ref()
    }

    pub fn measurement_count(&self) -> usize {
        self.first.is_some() as usize + self.second.is_some() as usize
    }

    /// Dimension of the `system (x) memories` block seen at one clock time.
    pub fn slice_dim(&self) -> usize {
        self.state.len() / self.clock.n()
    }

    /// Unnormalized `<t_k|Psi>`; its norm is `1/sqrt(n)`.
    pub fn condition_on_time(&self, k: usize) -> Result<StateVector> {
        let n = self.clock.n();
        if k >= n {
            return Err(Error::OutOfRange {
                what: "clock",
                index: k as i64,
                bound: n,
            });
        }
        let d = self.slice_dim();
        StateVector::new(
            self.state.amplitudes()[k * d..(k + 1) * d].to_vec(),
            self.state.dims()[1..].to_vec(),
        )
    }

    /// Rebuilds the history with every measurement index moved by `shift` and
    /// the initial state pre-evolved by `U(-shift dt)`.
    pub fn translate_internal_time(&self, shift: i64) -> Result<Self> {
        let n = self.clock.n() as i64;
        let moved = |m: &Measurement| -> Result<Measurement> {
            let k = m.index as i64 + shift;
            if k <= 0 || k >= n {
                return Err(Error::Regions(format!(
                    "shift {shift} moves measurement index {} to {k}, outside 1..{n}",
                    m.index
                )));
            }
            Ok(Measurement::new(k as usize, m.basis.clone()))
        };
        let first = self.first.as_ref().map(moved).transpose()?;
        let second = self.second.as_ref().map(moved).transpose()?;
        let back = evolution(-self.omega * shift as f64 * self.clock.dt());
        let psi0 = self.psi0.evolve(&back)?;
        match (first, second) {
            (None, _) => Ok(free_history(&self.clock, psi0, self.omega)),
            (Some(a), None) => single_measurement_history(&self.clock, psi0, self.omega, a),
            (Some(a), Some(b)) => double_measurement_history(&self.clock, psi0, self.omega, a, b),
        }
    }
}

fn propagator(omega: f64, ticks: usize, dt: f64) -> Operator {
    evolution(omega * ticks as f64 * dt)
}

fn assemble(
    clock: &ClockRegister,
    omega: f64,
    psi0: Qubit,
    first: Option<Measurement>,
    second: Option<Measurement>,
    memory_dims: Vec<usize>,
    slice: impl Fn(usize) -> Vec<C64>,
) -> Result<HistoryState> {
    let n = clock.n();
    let weight = 1.0 / (n as f64).sqrt();
    let mut amplitudes = Vec::new();
    for k in 0..n {
        amplitudes.extend(slice(k).into_iter().map(|a| a * weight));
    }
    let mut dims = vec![n, 2];
    dims.extend(memory_dims);
    let state = StateVector::new(amplitudes, dims)?;
    let norm = state.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::Invariant(format!("history norm {norm} differs from 1")));
    }
    Ok(HistoryState {
        state,
        clock: *clock,
        omega,
        psi0,
        first,
        second,
    })
}

/// `sum_k |t_k> U(t_k)|psi0> / sqrt(n)`.
pub fn free_history(clock: &ClockRegister, psi0: Qubit, omega: f64) -> HistoryState {
    let dt = clock.dt();
    assemble(clock, omega, psi0, None, None, vec![], |k| {
        psi0.evolve(&propagator(omega, k, dt)).expect("2x2").amplitudes().to_vec()
    })
    .expect("unitary slices keep the norm")
}

pub fn single_measurement_history(
    clock: &ClockRegister,
    psi0: Qubit,
    omega: f64,
    first: Measurement,
) -> Result<HistoryState> {
    let n = clock.n();
    let ka = first.index;
    if ka == 0 || ka >= n {
        return Err(Error::Regions(format!("need 0 < ka < {n}, got ka = {ka}")));
    }
    let dt = clock.dt();
    let psi_a = psi0.evolve(&propagator(omega, ka, dt))?.amplitudes();
    let coeffs: Vec<C64> = (0..2).map(|a| first.basis.amplitude(a, psi_a)).collect();
    let basis = first.basis.clone();
    assemble(clock, omega, psi0, Some(first), None, vec![MEMORY_DIM], move |k| {
        let mut out = vec![ZERO; 2 * MEMORY_DIM];
        if k < ka {
            let psi = psi0.evolve(&propagator(omega, k, dt)).expect("2x2").amplitudes();
            for s in 0..2 {
                out[s * MEMORY_DIM + READY] = psi[s];
            }
        } else {
            let u = propagator(omega, k - ka, dt);
            for (a, &c) in coeffs.iter().enumerate() {
                let branch = evolved_basis_vector(&u, &basis, a);
                for s in 0..2 {
                    out[s * MEMORY_DIM + record_level(a)] += c * branch[s];
                }
            }
        }
        out
    })
}

fn evolved_basis_vector(u: &Operator, basis: &MeasurementBasis, outcome: usize) -> [C64; 2] {
    let v = basis.vector(outcome);
    [
        u.get(0, 0) * v[0] + u.get(0, 1) * v[1],
        u.get(1, 0) * v[0] + u.get(1, 1) * v[1],
    ]
}

fn check_two_regions(n: usize, ka: usize, kb: usize) -> Result<()> {
    if !(0 < ka && ka < kb && kb < n) {
        return Err(Error::Regions(format!(
            "need 0 < ka < kb < {n}, got ka = {ka}, kb = {kb}"
        )));
    }
    Ok(())
}

/// Three-region history written term by term.
pub fn double_measurement_history(
    clock: &ClockRegister,
    psi0: Qubit,
    omega: f64,
    first: Measurement,
    second: Measurement,
) -> Result<HistoryState> {
    let n = clock.n();
    let (ka, kb) = (first.index, second.index);
    check_two_regions(n, ka, kb)?;
    let dt = clock.dt();
    let psi_a = psi0.evolve(&propagator(omega, ka, dt))?.amplitudes();
    let ca: Vec<C64> = (0..2).map(|a| first.basis.amplitude(a, psi_a)).collect();
    let gap = propagator(omega, kb - ka, dt);
    // <b|U(t_b - t_a)|a> <a|psi(t_a)>
    let mut cab = [[ZERO; 2]; 2];
    for a in 0..2 {
        let ua = evolved_basis_vector(&gap, &first.basis, a);
        for b in 0..2 {
            cab[a][b] = second.basis.amplitude(b, ua) * ca[a];
        }
    }
    let (basis_a, basis_b) = (first.basis.clone(), second.basis.clone());
    let m = MEMORY_DIM;
    let at = move |s: usize, m1: usize, m2: usize| (s * m + m1) * m + m2;
    assemble(
        clock,
        omega,
        psi0,
        Some(first),
        Some(second),
        vec![m, m],
        move |k| {
            let mut out = vec![ZERO; 2 * m * m];
            if k < ka {
                let psi = psi0.evolve(&propagator(omega, k, dt)).expect("2x2").amplitudes();
                for s in 0..2 {
                    out[at(s, READY, READY)] = psi[s];
                }
            } else if k < kb {
                let u = propagator(omega, k - ka, dt);
                for a in 0..2 {
                    let branch = evolved_basis_vector(&u, &basis_a, a);
                    for s in 0..2 {
                        out[at(s, record_level(a), READY)] += ca[a] * branch[s];
                    }
                }
            } else {
                let u = propagator(omega, k - kb, dt);
                for b in 0..2 {
                    let branch = evolved_basis_vector(&u, &basis_b, b);
                    for a in 0..2 {
                        for s in 0..2 {
                            out[at(s, record_level(a), record_level(b))] += cab[a][b] * branch[s];
                        }
                    }
                }
            }
            out
        },
    )
}

/// The same three-region history built by applying a piecewise global
/// propagator `U(t - t_b) V_b U(t_b - t_a) V_a U(t_a)` to `|psi0, r, r>`.
pub fn history_via_global_propagator(
    clock: &ClockRegister,
    psi0: Qubit,
    omega: f64,
    first: Measurement,
    second: Measurement,
) -> Result<HistoryState> {
    let n = clock.n();
    let (ka, kb) = (first.index, second.index);
    check_two_regions(n, ka, kb)?;
    let dt = clock.dt();
    let dims = vec![2, MEMORY_DIM, MEMORY_DIM];
    let lift = |ticks: usize, v: &StateVector| apply_on_factors(&propagator(omega, ticks, dt), 0, v);
    let v_a = kron(&record_unitary(&first.basis), &Operator::identity(MEMORY_DIM));
    let v_b = second_record_unitary(&second.basis);

    let a0 = psi0.amplitudes();
    let mut amps = vec![ZERO; 2 * MEMORY_DIM * MEMORY_DIM];
    amps[READY] = a0[0];
    amps[MEMORY_DIM * MEMORY_DIM + READY] = a0[1];
    let ready = StateVector::new(amps, dims)?;

    let slices: Vec<Vec<C64>> = (0..n)
        .map(|k| -> Result<Vec<C64>> {
            let mut v = ready.clone();
            let first_leg = k.min(ka);
            v = lift(first_leg, &v)?;
            if k >= ka {
                v = apply(&v_a, &v)?;
                v = lift(k.min(kb) - ka, &v)?;
            }
            if k >= kb {
                v = apply(&v_b, &v)?;
                v = lift(k - kb, &v)?;
            }
            Ok(v.into_amplitudes())
        })
        .collect::<Result<_>>()?;
    assemble(
        clock,
        omega,
        psi0,
        Some(first),
        Some(second),
        vec![MEMORY_DIM, MEMORY_DIM],
        |k| slices[k].clone(),
    )
}

/// `V_b` acting on system and the second memory, identity on the first.
fn second_record_unitary(basis: &MeasurementBasis) -> Operator {
    let v = record_unitary(basis);
    let m = MEMORY_DIM;
    let size = 2 * m * m;
    let mut entries = vec![ZERO; size * size];
    // v is indexed (s, m2); reorder to (s, m1, m2) with m1 passed through
    for s_out in 0..2 {
        for m2_out in 0..m {
            for s_in in 0..2 {
                for m2_in in 0..m {
                    let x = v.get(s_out * m + m2_out, s_in * m + m2_in);
                    if x == ZERO {
                        continue;
                    }
                    for m1 in 0..m {
                        let r = (s_out * m + m1) * m + m2_out;
                        let c = (s_in * m + m1) * m + m2_in;
                        entries[r * size + c] = x;
                    }
                }
            }
        }
    }
    Operator::new(entries, vec![2, m, m]).expect("square")
}

/// `H_g = H_c (x) I + I (x) H_s` on `clock (x) system`.
pub fn global_hamiltonian(clock: &ClockRegister, omega: f64) -> Operator {
    let hc = kron(&clock.clock_hamiltonian(), &Operator::identity(2));
    let hs = kron(&Operator::identity(clock.n()), &system_hamiltonian(omega));
    hc.add(&hs).expect("same dims")
}

/// `||H_g Psi|| / ||Psi||` for a measurement-free history.
pub fn constraint_residual(h: &HistoryState, hg: &Operator) -> Result<f64> {
    if h.measurement_count() > 0 {
        return Err(Error::InvalidArgument(
            "the constraint residual is defined for measurement-free histories only".into(),
        ));
    }
    let out = apply(hg, h.state())?;
    Ok(out.norm() / h.state().norm())
}

/// Same residual as [`constraint_residual`] without forming `H_g` densely.
pub fn constraint_residual_factored(h: &HistoryState) -> Result<f64> {
    if h.measurement_count() > 0 {
        return Err(Error::InvalidArgument(
            "the constraint residual is defined for measurement-free histories only".into(),
        ));
    }
    let hc = apply_on_factors(&h.clock.clock_hamiltonian(), 0, h.state())?;
    let hs = apply_on_factors(&system_hamiltonian(h.omega), 1, h.state())?;
    let total: Vec<C64> = hc
        .amplitudes()
        .iter()
        .zip(hs.amplitudes())
        .map(|(a, b)| a + b)
        .collect();
    Ok(StateVector::from_amplitudes(total).norm() / h.state().norm())
}
