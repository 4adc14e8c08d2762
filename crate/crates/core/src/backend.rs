//! Interchangeable routes from a two-time measurement setup to its joint
//! outcome law, registered by name.
//!
//! | name          | route                                                    |
//! |---------------|----------------------------------------------------------|
//! | `closed-form` | `cos^2/2`, `sin^2/2` law for the default preparation      |
//! | `history`     | term-by-term three-region history, Born rule on records  |
//! | `propagator`  | piecewise global propagator history, Born rule on records|
//! | `sampled`     | finite-shot counts drawn from another backend's law      |

use std::collections::BTreeMap;
use std::fmt;

use crate::clock::ClockRegister;
use crate::correlations::{analytic_joint, extract_joint, JointDistribution};
use crate::error::{Error, Result};
use crate::history::{double_measurement_history, history_via_global_propagator, Measurement};
use crate::sampling::{draw_counts, CountRecord};
use crate::system::{initial_state, Qubit};

/// Relative tolerance for a phase to count as an integer multiple of `omega dt`.
pub const PHASE_MATCH_TOL: f64 = 1e-9;

/// Two measurements on a clock lattice with a given preparation.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoTimeSetup {
    pub clock: ClockRegister,
    pub omega: f64,
    pub psi0: Qubit,
    pub first: Measurement,
    pub second: Measurement,
}

/// How the system frequency is chosen when a phase is requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaChoice {
    /// Frequency given; the phase must be an integer number of `omega dt` steps.
    Fixed(f64),
    /// Frequency fitted as `phase / (gap dt)` with a fixed index gap.
    PerPhase { gap: usize },
}

impl TwoTimeSetup {
    pub fn gap(&self) -> usize {
        self.second.index - self.first.index
    }

    pub fn phase(&self) -> f64 {
        self.omega * self.gap() as f64 * self.clock.dt()
    }

    /// Default preparation and H/V bases with the first record at `ka`,
    /// spaced so that `omega (t_b - t_a) = phase`.
    pub fn at_phase(clock: ClockRegister, choice: OmegaChoice, ka: usize, phase: f64) -> Result<Self> {
        let (omega, gap) = realize_phase(&clock, choice, phase)?;
        Self::with_gap(clock, omega, initial_state(), ka, gap)
    }

    pub fn with_gap(clock: ClockRegister, omega: f64, psi0: Qubit, ka: usize, gap: usize) -> Result<Self> {
        let n = clock.n();
        if ka == 0 || gap == 0 || ka + gap >= n {
            return Err(Error::Regions(format!(
                "need 0 < ka < ka + gap < {n}, got ka = {ka}, gap = {gap}"
            )));
        }
        Ok(Self {
            clock,
            omega,
            psi0,
            first: Measurement::standard(ka),
            second: Measurement::standard(ka + gap),
        })
    }
}

/// `(omega, gap)` such that `omega * gap * dt` equals `phase`.
pub fn realize_phase(clock: &ClockRegister, choice: OmegaChoice, phase: f64) -> Result<(f64, usize)> {
    let dt = clock.dt();
    match choice {
        OmegaChoice::PerPhase { gap } => {
            if gap == 0 {
                return Err(Error::InvalidArgument("index gap must be positive".into()));
            }
            Ok((phase / (gap as f64 * dt), gap))
        }
        OmegaChoice::Fixed(omega) => {
            if phase == 0.0 {
                return Ok((0.0, 1));
            }
            let step = omega * dt;
            if step == 0.0 {
                return Err(Error::Incommensurate {
                    requested: phase,
                    nearest: 0.0,
                });
            }
            let steps = (phase / step).round();
            let nearest = steps * step;
            if steps < 1.0 || (nearest - phase).abs() > PHASE_MATCH_TOL * phase.abs().max(1.0) {
                return Err(Error::Incommensurate {
                    requested: phase,
                    nearest: if steps < 1.0 { step } else { nearest },
                });
            }
            Ok((omega, steps as usize))
        }
    }
}

/// Outcome law of one setup, with the raw counts when it was sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct Measured {
    pub joint: JointDistribution,
    pub counts: Option<CountRecord>,
}

impl Measured {
    fn exact(joint: JointDistribution) -> Self {
        Self { joint, counts: None }
    }
}

pub trait CorrelationBackend: Send + Sync {
    fn name(&self) -> &str;

    /// `seed` is ignored by exact backends.
    fn measure(&self, setup: &TwoTimeSetup, seed: u64) -> Result<Measured>;

    fn is_sampled(&self) -> bool {
        false
    }
}

impl fmt::Debug for dyn CorrelationBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CorrelationBackend({})", self.name())
    }
}

pub struct ClosedForm;

impl CorrelationBackend for ClosedForm {
    fn name(&self) -> &str {
        "closed-form"
    }

    fn measure(&self, setup: &TwoTimeSetup, _seed: u64) -> Result<Measured> {
        if !(setup.first.basis.is_standard() && setup.second.basis.is_standard()) {
            return Err(Error::InvalidArgument(
                "closed-form backend covers H/V measurements only".into(),
            ));
        }
        // closed form holds for sigma_x eigenstates only
        let [h, v] = setup.psi0.amplitudes();
        let off_half = ((h + v).norm_sqr() / 2.0 - 0.5).abs();
        if (off_half - 0.5).abs() > 1e-12 {
            return Err(Error::InvalidArgument(
                "closed-form backend requires a sigma_x eigenstate preparation".into(),
            ));
        }
        Ok(Measured::exact(analytic_joint(setup.phase())))
    }
}

pub struct HistoryRoute;

impl CorrelationBackend for HistoryRoute {
    fn name(&self) -> &str {
        "history"
    }

    fn measure(&self, s: &TwoTimeSetup, _seed: u64) -> Result<Measured> {
        let h = double_measurement_history(&s.clock, s.psi0, s.omega, s.first.clone(), s.second.clone())?;
        Ok(Measured::exact(extract_joint(&h)?))
    }
}

pub struct PropagatorRoute;

impl CorrelationBackend for PropagatorRoute {
    fn name(&self) -> &str {
        "propagator"
    }

    fn measure(&self, s: &TwoTimeSetup, _seed: u64) -> Result<Measured> {
        let h = history_via_global_propagator(&s.clock, s.psi0, s.omega, s.first.clone(), s.second.clone())?;
        Ok(Measured::exact(extract_joint(&h)?))
    }
}

/// Draws `shots` detections from the law of an exact backend.
pub struct Sampled {
    inner: Box<dyn CorrelationBackend>,
    shots: u64,
}

impl Sampled {
    pub fn new(inner: Box<dyn CorrelationBackend>, shots: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::InvalidArgument("sampled backend needs shots >= 1".into()));
        }
        if inner.is_sampled() {
            return Err(Error::InvalidArgument("sampled backends do not nest".into()));
        }
        Ok(Self { inner, shots })
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }
}

impl CorrelationBackend for Sampled {
    fn name(&self) -> &str {
        "sampled"
    }

    fn measure(&self, setup: &TwoTimeSetup, seed: u64) -> Result<Measured> {
        let exact = self.inner.measure(setup, seed)?;
        let counts = draw_counts(&exact.joint, self.shots, seed);
        Ok(Measured {
            joint: counts.joint(exact.joint.phase),
            counts: Some(counts),
        })
    }

    fn is_sampled(&self) -> bool {
        true
    }
}

/// Construction parameters handed to every factory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendParams {
    pub shots: u64,
    /// Exact backend wrapped by `sampled`.
    pub inner: String,
}

impl Default for BackendParams {
    fn default() -> Self {
        Self {
            shots: 0,
            inner: "history".into(),
        }
    }
}

pub type BackendFactory =
    Box<dyn Fn(&BackendRegistry, &BackendParams) -> Result<Box<dyn CorrelationBackend>> + Send + Sync>;

#[derive(Default)]
pub struct BackendRegistry {
    factories: BTreeMap<String, BackendFactory>,
}

impl BackendRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_defaults() -> Self {
        let mut r = Self::new();
        r.register("closed-form", Box::new(|_, _| Ok(Box::new(ClosedForm))));
        r.register("history", Box::new(|_, _| Ok(Box::new(HistoryRoute))));
        r.register("propagator", Box::new(|_, _| Ok(Box::new(PropagatorRoute))));
        r.register(
            "sampled",
            Box::new(|reg, params| {
                if params.inner == "sampled" {
                    return Err(Error::InvalidArgument("sampled backends do not nest".into()));
                }
                let inner = reg.create(&params.inner, params)?;
                Ok(Box::new(Sampled::new(inner, params.shots)?))
            }),
        );
        r
    }

    pub fn register(&mut self, name: &str, factory: BackendFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn create(&self, name: &str, params: &BackendParams) -> Result<Box<dyn CorrelationBackend>> {
        let factory = self
            .factories
            .get(name)
            .ok_or_else(|| Error::UnknownBackend(name.to_string()))?;
        factory(self, params)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }
}
