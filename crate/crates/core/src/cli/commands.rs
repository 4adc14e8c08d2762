//! Dataset builders behind each subcommand.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ConfigError, RunConfig};
use super::output::{csv_table, num, opt_num};
use crate::backend::{BackendParams, BackendRegistry, CorrelationBackend, TwoTimeSetup};
use crate::correlations::{bayes_conditional, two_time_correlation};
use crate::error::Error;
use crate::history::{constraint_residual, constraint_residual_factored, free_history, global_hamiltonian};
use crate::leggett_garg::{k3_analytic, k3_simulated, LgEstimate, TABLE_I};
use crate::sampling::{derive_seed, CountRecord};
use crate::spectral::kernel_projection;
use crate::system::initial_state;
use crate::clock::ClockRegister;

/// Residual above which a commensurate run fails.
pub const RESIDUAL_FAIL: f64 = 1e-8;
/// Dense `H_g` is formed up to this clock size; larger clocks use the factored route.
const DENSE_LIMIT: usize = 256;
const ORACLE_N: usize = 8;
const OUTPUT_TOL: f64 = 1e-9;

#[derive(Debug)]
pub enum CommandError {
    Config(ConfigError),
    /// Some rows could not be computed; the dataset is still emitted.
    Rows(usize),
    Numerical(String),
    Io(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) | CommandError::Rows(_) | CommandError::Io(_) => 1,
            CommandError::Numerical(_) => 2,
        }
    }
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CommandError::Config(e) => write!(f, "{e}"),
            CommandError::Rows(n) => write!(f, "{n} row(s) could not be computed"),
            CommandError::Numerical(m) => write!(f, "numerical invariant failure: {m}"),
            CommandError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError::Config(e)
    }
}

fn guard(what: &str, x: f64, lo: f64, hi: f64) -> Result<(), CommandError> {
    if !(x >= lo - OUTPUT_TOL && x <= hi + OUTPUT_TOL) {
        return Err(CommandError::Numerical(format!("{what} = {x} outside [{lo}, {hi}]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintRow {
    pub check: String,
    pub n: usize,
    pub dt: f64,
    pub omega: f64,
    pub residual: f64,
    pub threshold: f64,
    pub kernel_dim: Option<usize>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintReport {
    pub commensurate: bool,
    pub rows: Vec<ConstraintRow>,
}

impl ConstraintReport {
    pub fn csv(&self) -> String {
        csv_table(
            &["check", "n", "dt", "omega", "residual", "threshold", "kernel_dim", "pass"],
            self.rows.iter().map(|r| {
                vec![
                    r.check.clone(),
                    r.n.to_string(),
                    num(r.dt),
                    num(r.omega),
                    num(r.residual),
                    num(r.threshold),
                    r.kernel_dim.map(|d| d.to_string()).unwrap_or_default(),
                    r.pass.to_string(),
                ]
            }),
        )
    }

    /// Failing rows that should turn into a nonzero exit.
    pub fn failures(&self) -> Vec<&ConstraintRow> {
        self.rows
            .iter()
            .filter(|r| !r.pass && (self.commensurate || r.check == "oracle_kernel"))
            .collect()
    }
}

pub fn run_constraint(cfg: &RunConfig) -> Result<ConstraintReport, CommandError> {
    let clock = cfg.clock()?;
    let omega = cfg.omega()?;
    let commensurate = cfg.incommensurate_harmonic.is_none();
    let h = free_history(&clock, initial_state(), omega);
    let residual = if clock.n() <= DENSE_LIMIT {
        constraint_residual(&h, &global_hamiltonian(&clock, omega))
    } else {
        constraint_residual_factored(&h)
    }
    .map_err(|e| CommandError::Numerical(e.to_string()))?;
    let mut rows = vec![ConstraintRow {
        check: "constraint".into(),
        n: clock.n(),
        dt: clock.dt(),
        omega,
        residual,
        threshold: RESIDUAL_FAIL,
        kernel_dim: None,
        pass: residual <= RESIDUAL_FAIL,
    }];

    let small = ClockRegister::new(ORACLE_N, clock.dt()).expect("valid oracle clock");
    let j = cfg.omega_index.clamp(1, ORACLE_N as i64 / 2 - 1);
    let w = small.commensurate_frequency(j).expect("in range");
    let free = free_history(&small, initial_state(), w);
    let check = kernel_projection(&global_hamiltonian(&small, w), free.state())
        .map_err(|e| CommandError::Numerical(e.to_string()))?;
    rows.push(ConstraintRow {
        check: "oracle_kernel".into(),
        n: ORACLE_N,
        dt: small.dt(),
        omega: w,
        residual: check.projection_residual,
        threshold: RESIDUAL_FAIL,
        kernel_dim: Some(check.kernel_dim),
        pass: check.projection_residual <= RESIDUAL_FAIL,
    });
    Ok(ConstraintReport { commensurate, rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationRow {
    pub phase: f64,
    pub p_pp: Option<f64>,
    pub p_pm: Option<f64>,
    pub p_mp: Option<f64>,
    pub p_mm: Option<f64>,
    pub p_same_given: Option<f64>,
    pub p_diff_given: Option<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationDataset {
    pub rows: Vec<CorrelationRow>,
    #[serde(skip)]
    pub records: Vec<Option<CountRecord>>,
}

impl CorrelationDataset {
    pub fn csv(&self) -> String {
        csv_table(
            &["phase", "p_pp", "p_pm", "p_mp", "p_mm", "p_same_given", "p_diff_given", "C"],
            self.rows.iter().map(|r| {
                vec![
                    num(r.phase),
                    opt_num(r.p_pp),
                    opt_num(r.p_pm),
                    opt_num(r.p_mp),
                    opt_num(r.p_mm),
                    opt_num(r.p_same_given),
                    opt_num(r.p_diff_given),
                    opt_num(r.c),
                ]
            }),
        )
    }

    pub fn error_count(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

fn backends(
    cfg: &RunConfig,
    registry: &BackendRegistry,
) -> Result<(Box<dyn CorrelationBackend>, Option<Box<dyn CorrelationBackend>>), CommandError> {
    let params = BackendParams {
        shots: cfg.shots,
        inner: cfg.backend.clone(),
    };
    let make = |name: &str| {
        registry
            .create(name, &params)
            .map_err(|e| CommandError::Config(ConfigError { key: "backend".into(), message: e.to_string() }))
    };
    let exact = make(&cfg.backend)?;
    let sampled = if cfg.shots > 0 { Some(make("sampled")?) } else { None };
    Ok((exact, sampled))
}

fn map_rows<T: Send>(parallel: bool, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if parallel {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

pub fn run_correlations(cfg: &RunConfig, registry: &BackendRegistry) -> Result<CorrelationDataset, CommandError> {
    let clock = cfg.clock()?;
    let choice = cfg.omega_choice()?;
    let grid = cfg.correlation_grid()?;
    let (exact, sampled) = backends(cfg, registry)?;
    let backend = sampled.as_deref().unwrap_or(exact.as_ref());

    let results = map_rows(cfg.parallel, grid.len(), |i| -> Result<_, Error> {
        let setup = TwoTimeSetup::at_phase(clock, choice, cfg.ka, grid[i])?;
        backend.measure(&setup, derive_seed(cfg.seed, i as u64))
    });

    let mut rows = Vec::with_capacity(grid.len());
    let mut records = Vec::with_capacity(grid.len());
    for (&phase, res) in grid.iter().zip(results) {
        match res {
            Ok(m) => {
                let [pp, pm, mp, mm] = m.joint.cells();
                let cond = bayes_conditional(&m.joint);
                let c = two_time_correlation(&m.joint);
                for p in [pp, pm, mp, mm] {
                    guard("probability", p, 0.0, 1.0)?;
                }
                guard("C", c, -1.0, 1.0)?;
                rows.push(CorrelationRow {
                    phase,
                    p_pp: Some(pp),
                    p_pm: Some(pm),
                    p_mp: Some(mp),
                    p_mm: Some(mm),
                    p_same_given: cond.same_given(),
                    p_diff_given: cond.diff_given(),
                    c: Some(c),
                    error: None,
                });
                records.push(m.counts);
            }
            Err(e) => {
                rows.push(CorrelationRow {
                    phase,
                    p_pp: None,
                    p_pm: None,
                    p_mp: None,
                    p_mm: None,
                    p_same_given: None,
                    p_diff_given: None,
                    c: None,
                    error: Some(e.to_string()),
                });
                records.push(None);
            }
        }
    }
    Ok(CorrelationDataset { rows, records })
}

#[derive(Debug, Clone, Serialize)]
pub struct LgRow {
    pub x: f64,
    pub k3_analytic: f64,
    pub k3_simulated: Option<f64>,
    pub k3_hat: Option<f64>,
    pub k3_se: Option<f64>,
    pub violated: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_theory: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_vs_reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_experiment: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_experiment_se: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LgDataset {
    pub table1: bool,
    pub rows: Vec<LgRow>,
    #[serde(skip)]
    pub records: Vec<Option<[CountRecord; 3]>>,
}

impl LgDataset {
    pub fn csv(&self) -> String {
        let mut header = vec!["x", "k3_analytic", "k3_simulated", "k3_hat", "k3_se", "violated"];
        if self.table1 {
            header.extend(["reference_theory", "delta_vs_reference", "reference_experiment", "reference_experiment_se"]);
        }
        csv_table(
            &header,
            self.rows.iter().map(|r| {
                let mut row = vec![
                    num(r.x),
                    num(r.k3_analytic),
                    opt_num(r.k3_simulated),
                    opt_num(r.k3_hat),
                    opt_num(r.k3_se),
                    r.violated.map(|v| v.to_string()).unwrap_or_default(),
                ];
                if self.table1 {
                    row.extend([
                        opt_num(r.reference_theory),
                        opt_num(r.delta_vs_reference),
                        opt_num(r.reference_experiment),
                        opt_num(r.reference_experiment_se),
                    ]);
                }
                row
            }),
        )
    }

    pub fn error_count(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

pub fn run_lg(cfg: &RunConfig, registry: &BackendRegistry) -> Result<LgDataset, CommandError> {
    let lattice = cfg.lattice()?;
    let grid = cfg.lg_grid()?;
    let (exact, sampled) = backends(cfg, registry)?;

    type Pair = (Result<LgEstimate, Error>, Option<Result<LgEstimate, Error>>);
    let results: Vec<Pair> = map_rows(cfg.parallel, grid.len(), |i| {
        let seed = derive_seed(cfg.seed, i as u64);
        let ex = k3_simulated(&lattice, grid[i], exact.as_ref(), seed);
        let sa = sampled.as_ref().map(|b| k3_simulated(&lattice, grid[i], b.as_ref(), seed));
        (ex, sa)
    });

    let mut rows = Vec::with_capacity(grid.len());
    let mut records = Vec::with_capacity(grid.len());
    for (i, (&x, (ex, sa))) in grid.iter().zip(results).enumerate() {
        let analytic = k3_analytic(x);
        guard("K3", analytic, -3.0, 1.5)?;
        let reference = cfg.table1.then(|| TABLE_I[i]);
        let mut row = LgRow {
            x,
            k3_analytic: analytic,
            k3_simulated: None,
            k3_hat: None,
            k3_se: None,
            violated: None,
            reference_theory: reference.map(|p| p.1),
            delta_vs_reference: reference.map(|p| (analytic - p.1).abs()),
            reference_experiment: reference.map(|p| p.2),
            reference_experiment_se: reference.map(|p| p.3),
            error: None,
        };
        let mut rec = None;
        match ex {
            Ok(e) => {
                guard("K3", e.point.k3, -3.0, 1.5)?;
                row.k3_simulated = Some(e.point.k3);
                row.violated = Some(e.point.violated);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        match sa {
            Some(Ok(e)) => {
                // finite-shot estimates are only bounded by the correlation ranges
                guard("K3 estimate", e.point.k3, -3.0, 3.0)?;
                row.k3_hat = Some(e.point.k3);
                row.k3_se = e.k3_se;
                rec = e.records;
            }
            Some(Err(e)) => row.error = row.error.or(Some(e.to_string())),
            None => {}
        }
        rows.push(row);
        records.push(rec);
    }
    Ok(LgDataset {
        table1: cfg.table1,
        rows,
        records,
    })
}

fn config_json(cfg: &RunConfig) -> Value {
    serde_json::to_value(cfg).expect("serializable")
}

/// Full run record except `duration_s`, which the caller fills in.
pub fn run_record(cfg: &RunConfig, registry: &BackendRegistry) -> Result<(Value, usize), CommandError> {
    let constraint = run_constraint(cfg)?;
    let correlations = run_correlations(cfg, registry)?;
    let lg_cfg = RunConfig {
        table1: false,
        ..cfg.clone()
    };
    let lg = run_lg(&lg_cfg, registry)?;
    let mut results = json!({
        "constraint": constraint,
        "correlations": correlations.rows,
        "lg": lg.rows,
    });
    let mut errors = correlations.error_count() + lg.error_count();
    let mut sampling = json!({
        "shots": cfg.shots,
        "correlations": correlations.records,
        "lg": lg.records,
    });
    if cfg.table1 {
        let table = run_lg(cfg, registry)?;
        errors += table.error_count();
        results["table1"] = serde_json::to_value(&table.rows).expect("serializable");
        sampling["table1"] = serde_json::to_value(&table.records).expect("serializable");
    }
    if cfg.shots > 0 {
        results["sampling"] = sampling;
    }
    let record = json!({
        "config": config_json(cfg),
        "version": crate::VERSION,
        "seed": cfg.seed,
        "results": results,
        "duration_s": 0.0,
    });
    Ok((record, errors))
}
