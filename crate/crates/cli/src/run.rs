//! Building scenarios from a config, running the sweeps and writing the
//! CSV series, metadata sidecar and export files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sts_core::assemblage::{Assemblage, AssemblageError, Mode, Scenario, NULL_BRANCH_PROBABILITY};
use sts_core::dynamics::{
    build_fmo_model, build_three_qubit_chain, ChainParams, CollapseTerm, FmoParams,
    IntegratorOptions, LindbladModel, CM_INV_TO_RAD_PER_PS, FMO_HAMILTONIAN_CM,
};
use sts_core::quantum::{
    c, embed_site_operator, pauli, pauli_measurement_set, ComplexMatrix, DensityMatrix,
};
use sts_core::sdp::{write_sdpa, SolverOptions};
use sts_core::steering::{
    enumerate_strategies, measure, robustness_problem, vanishing_time, weight_problem, Measure,
    SteeringError, REPORTING_THRESHOLD, VANISHING_THRESHOLD,
};
use thiserror::Error;

use crate::config::{EprState, MeasureName, RunConfig, ScenarioKind};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("scenario: {0}")]
    Scenario(#[from] AssemblageError),
    #[error("steering: {0}")]
    Steering(#[from] SteeringError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

pub type Result<T> = std::result::Result<T, RunError>;

impl From<MeasureName> for Measure {
    fn from(m: MeasureName) -> Self {
        match m {
            MeasureName::Weight => Measure::Weight,
            MeasureName::Robustness => Measure::Robustness,
        }
    }
}

/// One model instance. Chain configs with several rates give one group per
/// rate.
#[derive(Debug, Clone)]
pub struct Group {
    pub label: Option<String>,
    pub scenario: Scenario,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub workers: usize,
    pub full_space: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub target: usize,
    pub measure: String,
    pub peak_value: f64,
    pub peak_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vanishing_time: Option<f64>,
    pub failed_rows: usize,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub series: Vec<SeriesSummary>,
    pub metadata: PathBuf,
}

impl RunSummary {
    pub fn failed_rows(&self) -> usize {
        self.series.iter().map(|s| s.failed_rows).sum()
    }
}

fn invalid(msg: impl Into<String>) -> RunError {
    RunError::Invalid(msg.into())
}

fn index(label: usize, n: usize, what: &str) -> Result<usize> {
    if label == 0 || label > n {
        return Err(invalid(format!("{what} {label} out of range 1..={n}")));
    }
    Ok(label - 1)
}

fn ground() -> DensityMatrix {
    DensityMatrix::basis_state(&[0], vec![2]).expect("qubit ground state")
}

fn qubit_network(
    n: usize,
    couplings: &[(usize, usize, f64)],
    dephasing: &[(usize, f64)],
) -> Result<LindbladModel> {
    let dims = vec![2; n];
    let op = |m: &ComplexMatrix, k: usize| {
        embed_site_operator(m, k, &dims).map_err(|e| invalid(e.to_string()))
    };
    let mut h = ComplexMatrix::zeros(1 << n, 1 << n);
    for &(a, b, j) in couplings {
        let hop = op(&pauli::raising(), a)? * op(&pauli::lowering(), b)?;
        h += (&hop + hop.adjoint()).scale(j);
    }
    let mut collapse = Vec::new();
    for &(k, rate) in dephasing {
        collapse.push(CollapseTerm {
            operator: op(&pauli::z(), k)?,
            rate,
        });
    }
    LindbladModel::new(h, collapse, dims).map_err(|e| invalid(e.to_string()))
}

fn mode_for(measured: usize, target: usize) -> Mode {
    if measured == target {
        Mode::Temporal
    } else {
        Mode::SpatioTemporal
    }
}

fn dynamic_scenario(
    rho0: DensityMatrix,
    model: LindbladModel,
    cfg: &RunConfig,
    n: usize,
) -> Result<Scenario> {
    let measured = index(cfg.measured, n, "measured site")?;
    let target = index(cfg.targets[0], n, "target site")?;
    Ok(Scenario::new(
        rho0,
        pauli_measurement_set(),
        measured,
        vec![target],
        model,
        mode_for(measured, target),
    )?)
}

pub fn build_groups(cfg: &RunConfig, full_space: bool) -> Result<Vec<Group>> {
    let reduced = cfg.reduced && !full_space;
    let mut groups = Vec::new();
    match cfg.scenario {
        ScenarioKind::Chain => {
            let p = cfg.chain.as_ref().expect("validated");
            if p.initial.len() != 3 || p.initial.iter().any(|&d| d > 1) {
                return Err(invalid("chain.initial needs three binary digits"));
            }
            for &gamma in &p.gamma {
                let model = build_three_qubit_chain(ChainParams {
                    j12: p.j12,
                    j23: p.j23,
                    gamma,
                })
                .map_err(|e| invalid(e.to_string()))?;
                let rho0 = DensityMatrix::basis_state(&p.initial, vec![2; 3])
                    .map_err(|e| invalid(e.to_string()))?;
                groups.push(Group {
                    label: Some(format!("gamma-{gamma}")),
                    scenario: dynamic_scenario(rho0, model, cfg, 3)?.with_reduction(reduced),
                });
            }
        }
        ScenarioKind::Fmo => {
            let p = cfg.fmo.as_ref().expect("validated");
            let params = FmoParams {
                hamiltonian_cm: FMO_HAMILTONIAN_CM,
                gamma_dp_cm: p.gamma_dp_cm,
                gamma_sink_cm: p.gamma_sink_cm,
                include_reaction_center: p.reaction_center,
            };
            let model = build_fmo_model(&params).map_err(|e| invalid(e.to_string()))?;
            let n = model.factor_dims().len();
            let measured = index(cfg.measured, n, "measured site")?;
            let parts: Vec<DensityMatrix> = (0..n)
                .map(|k| {
                    if k == measured {
                        DensityMatrix::maximally_mixed(2)
                    } else {
                        ground()
                    }
                })
                .collect();
            let rho0 = DensityMatrix::product(&parts);
            groups.push(Group {
                label: None,
                scenario: dynamic_scenario(rho0, model, cfg, n)?.with_reduction(reduced),
            });
        }
        ScenarioKind::Custom => {
            let p = cfg.custom.as_ref().expect("validated");
            let n = p.sites;
            if n == 0 || n > 10 {
                return Err(invalid("custom.sites must lie in 1..=10"));
            }
            if p.initial.len() != n || p.initial.iter().any(|&d| d > 1) {
                return Err(invalid("custom.initial needs one binary digit per site"));
            }
            let mut couplings = Vec::new();
            for cp in &p.couplings {
                let (a, b) = (index(cp.a, n, "coupling site")?, index(cp.b, n, "coupling site")?);
                if a == b {
                    return Err(invalid("a coupling joins two distinct sites"));
                }
                couplings.push((a, b, cp.j));
            }
            let mut dephasing = Vec::new();
            for d in &p.dephasing {
                if d.rate < 0.0 || d.rate.is_nan() {
                    return Err(invalid("dephasing rates must be non-negative"));
                }
                dephasing.push((index(d.site, n, "dephasing site")?, d.rate));
            }
            let model = qubit_network(n, &couplings, &dephasing)?;
            let rho0 = DensityMatrix::basis_state(&p.initial, vec![2; n])
                .map_err(|e| invalid(e.to_string()))?;
            groups.push(Group {
                label: None,
                scenario: dynamic_scenario(rho0, model, cfg, n)?.with_reduction(reduced),
            });
        }
        ScenarioKind::EprFixture => {
            let p = cfg.epr.as_ref().expect("validated");
            let v = match p.state {
                EprState::Bell => 1.0,
                EprState::Werner => p.visibility,
            };
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let phi = DensityMatrix::pure(&[c(h, 0.), c(0., 0.), c(0., 0.), c(h, 0.)], vec![2, 2])
                .map_err(|e| invalid(e.to_string()))?;
            let noise = DensityMatrix::maximally_mixed(4);
            let mixed = phi.matrix().scale(v) + noise.matrix().scale(1.0 - v);
            let rho0 = DensityMatrix::new(mixed, vec![2, 2]).map_err(|e| invalid(e.to_string()))?;
            let measured = index(cfg.measured, 2, "measured qubit")?;
            let target = index(cfg.targets[0], 2, "target qubit")?;
            if measured == target {
                return Err(invalid("EPR fixture reads out the unmeasured qubit"));
            }
            groups.push(Group {
                label: None,
                scenario: Scenario::epr(rho0, pauli_measurement_set(), measured, vec![target])?,
            });
        }
    }
    Ok(groups)
}

/// `{name}[_{group}]_target-{k}`
fn stem(cfg: &RunConfig, group: &Group, target: usize) -> String {
    match &group.label {
        Some(label) => format!("{}_{}_target-{}", cfg.name, label, target),
        None => format!("{}_target-{}", cfg.name, target),
    }
}

struct Row {
    time: f64,
    value: f64,
    gap: f64,
    status: String,
}

fn evaluate(asm: &Assemblage, which: Measure) -> Row {
    match measure(asm, which) {
        Ok(r) => Row {
            time: asm.time(),
            value: r.value,
            gap: r.solution.gap,
            status: if r.certificates.is_clean() {
                "optimal".into()
            } else {
                "optimal-uncertified".into()
            },
        },
        Err(SteeringError::Solver { status, gap }) => Row {
            time: asm.time(),
            value: f64::NAN,
            gap,
            status: format!("failed-{}", status.as_str()),
        },
        Err(_) => Row {
            time: asm.time(),
            value: f64::NAN,
            gap: f64::NAN,
            status: "failed-error".into(),
        },
    }
}

fn is_failure(row: &Row) -> bool {
    row.status.starts_with("failed")
}

fn csv_text(rows: &[Row]) -> String {
    let mut s = String::from("time,value,solver_gap,status\n");
    for r in rows {
        let _ = writeln!(s, "{:.16e},{:.16e},{:.16e},{}", r.time, r.value, r.gap, r.status);
    }
    s
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

/// Assemblages `[target][time]` in config order. Reading out the measured
/// site itself gives the temporal assemblage, computed from a separate
/// scenario on the same model.
fn assemblages(cfg: &RunConfig, group: &Group, grid: &[f64]) -> Result<Vec<Vec<Assemblage>>> {
    let s = &group.scenario;
    let n = s.initial_state().factor_dims().len();
    let measured = s.measured();
    let labels: Vec<usize> = cfg
        .targets
        .iter()
        .map(|&k| index(k, n, "target site"))
        .collect::<Result<_>>()?;
    let others: Vec<Vec<usize>> = labels.iter().filter(|&&t| t != measured).map(|&t| vec![t]).collect();
    let mut spatial = if others.is_empty() {
        Vec::new()
    } else if s.mode() == Mode::Temporal {
        let base = Scenario::new(
            s.initial_state().clone(),
            s.measurements().clone(),
            measured,
            others[0].clone(),
            s.channel().clone(),
            Mode::SpatioTemporal,
        )?
        .with_reduction(s.reduced());
        base.assemblage_series_for(grid, &others)?
    } else {
        s.assemblage_series_for(grid, &others)?
    }
    .into_iter();
    let mut temporal = if labels.contains(&measured) {
        if s.mode() == Mode::Epr {
            return Err(invalid("EPR fixture reads out the unmeasured qubit"));
        }
        let t = Scenario::new(
            s.initial_state().clone(),
            s.measurements().clone(),
            measured,
            vec![measured],
            s.channel().clone(),
            Mode::Temporal,
        )?
        .with_reduction(s.reduced());
        t.assemblage_series(grid)?
    } else {
        Vec::new()
    };
    Ok(labels
        .iter()
        .map(|&t| {
            if t == measured {
                std::mem::take(&mut temporal)
            } else {
                spatial.next().expect("one series per target")
            }
        })
        .collect())
}

/// Runs every (group, target, measure) series on the grid and writes one CSV
/// per series plus `{name}.meta.toml`. Solver failures are recorded in the
/// CSVs, not returned as errors.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary> {
    let groups = build_groups(cfg, opts.full_space)?;
    let grid = cfg.grid.points();
    std::fs::create_dir_all(&opts.out_dir).map_err(|source| RunError::Io {
        path: opts.out_dir.display().to_string(),
        source,
    })?;
    let pool = pool(opts.workers)?;
    let mut series = Vec::new();
    let mut reduced_effective = Vec::new();
    for group in &groups {
        reduced_effective.push(group.scenario.uses_reduction());
        let per_target = pool.install(|| assemblages(cfg, group, &grid))?;
        let n = grid.len();
        let tasks: Vec<(usize, usize, usize)> = (0..cfg.targets.len())
            .flat_map(|k| (0..cfg.measures.len()).flat_map(move |m| (0..n).map(move |i| (k, m, i))))
            .collect();
        let rows: Vec<Row> = pool.install(|| {
            tasks
                .par_iter()
                .map(|&(k, m, i)| evaluate(&per_target[k][i], cfg.measures[m].into()))
                .collect()
        });
        let mut chunks = rows.chunks(grid.len());
        for &target in &cfg.targets {
            for &m in &cfg.measures {
                let rows = chunks.next().expect("one chunk per series");
                let which: Measure = m.into();
                let file = format!("{}_{}.csv", stem(cfg, group, target), which.as_str());
                write_file(&opts.out_dir.join(&file), &csv_text(rows))?;
                let times: Vec<f64> = rows.iter().map(|r| r.time).collect();
                let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
                let (peak_time, peak_value) = rows
                    .iter()
                    .filter(|r| !is_failure(r))
                    .fold((rows[0].time, f64::NEG_INFINITY), |best, r| {
                        if r.value > best.1 {
                            (r.time, r.value)
                        } else {
                            best
                        }
                    });
                series.push(SeriesSummary {
                    file,
                    group: group.label.clone(),
                    target,
                    measure: which.as_str().into(),
                    peak_value,
                    peak_time,
                    vanishing_time: vanishing_time(&times, &values, VANISHING_THRESHOLD),
                    failed_rows: rows.iter().filter(|r| is_failure(r)).count(),
                });
            }
        }
    }
    let metadata = opts.out_dir.join(format!("{}.meta.toml", cfg.name));
    let reduced = reduced_effective.iter().all(|&r| r);
    write_file(&metadata, &metadata_text(cfg, opts.full_space, reduced, &series))?;
    Ok(RunSummary { series, metadata })
}

#[derive(Serialize)]
struct Metadata<'a> {
    version: &'static str,
    full_space_flag: bool,
    reduced_effective: bool,
    thresholds: Thresholds,
    units: Units,
    solver: SolverMeta,
    integrator: IntegratorMeta,
    series: &'a [SeriesSummary],
    config: RunConfig,
}

#[derive(Serialize)]
struct Thresholds {
    reporting: f64,
    vanishing: f64,
    null_branch_probability: f64,
}

#[derive(Serialize)]
struct Units {
    time: String,
    cm_inv_to_rad_per_ps: f64,
}

#[derive(Serialize)]
struct SolverMeta {
    method: &'static str,
    max_iterations: usize,
    gap_tol: f64,
    feasibility_tol: f64,
    infeasibility_tol: f64,
}

#[derive(Serialize)]
struct IntegratorMeta {
    method: &'static str,
    rtol: f64,
    atol: f64,
    max_steps: usize,
}

fn metadata_text(cfg: &RunConfig, full_space: bool, reduced: bool, series: &[SeriesSummary]) -> String {
    let solver = SolverOptions::default();
    let integrator = IntegratorOptions::default();
    // where and how many threads ran must not change the bytes
    let mut config = cfg.clone();
    config.out = None;
    config.workers = None;
    let meta = Metadata {
        version: env!("CARGO_PKG_VERSION"),
        full_space_flag: full_space,
        reduced_effective: reduced,
        thresholds: Thresholds {
            reporting: REPORTING_THRESHOLD,
            vanishing: VANISHING_THRESHOLD,
            null_branch_probability: NULL_BRANCH_PROBABILITY,
        },
        units: Units {
            time: cfg.grid.units.clone(),
            cm_inv_to_rad_per_ps: CM_INV_TO_RAD_PER_PS,
        },
        solver: SolverMeta {
            method: "primal-dual interior point, NT scaling, Mehrotra predictor-corrector",
            max_iterations: solver.max_iterations,
            gap_tol: solver.gap_tol,
            feasibility_tol: solver.feasibility_tol,
            infeasibility_tol: solver.infeasibility_tol,
        },
        integrator: IntegratorMeta {
            method: "Dormand-Prince 5(4)",
            rtol: integrator.rtol,
            atol: integrator.atol,
            max_steps: integrator.max_steps,
        },
        series,
        config,
    };
    toml::to_string(&meta).expect("metadata serializes")
}

#[derive(Debug, Clone)]
pub struct ExportSummary {
    pub files: Vec<PathBuf>,
}

/// Writes the assemblage at time `t` for every group and target
/// (`{stem}_t-{t}.asm`) and the standard-form SDP of each configured
/// measure (`{stem}_t-{t}_{measure}.dat-s`).
pub fn export(cfg: &RunConfig, t: f64, opts: &RunOptions) -> Result<ExportSummary> {
    let groups = build_groups(cfg, opts.full_space)?;
    std::fs::create_dir_all(&opts.out_dir).map_err(|source| RunError::Io {
        path: opts.out_dir.display().to_string(),
        source,
    })?;
    let pool = pool(opts.workers)?;
    let mut files = Vec::new();
    for group in &groups {
        let per_target = pool.install(|| assemblages(cfg, group, &[t]))?;
        for (k, &target) in cfg.targets.iter().enumerate() {
            let asm = &per_target[k][0];
            let base = format!("{}_t-{}", stem(cfg, group, target), t);
            let path = opts.out_dir.join(format!("{base}.asm"));
            write_file(&path, &asm.to_text())?;
            files.push(path);
            let strategies = enumerate_strategies(asm.n_settings(), asm.n_outcomes())?;
            for &m in &cfg.measures {
                let which: Measure = m.into();
                let problem = match which {
                    Measure::Weight => weight_problem(asm, &strategies)?,
                    Measure::Robustness => robustness_problem(asm, &strategies)?,
                };
                let path = opts.out_dir.join(format!("{base}_{}.dat-s", which.as_str()));
                write_file(&path, &write_sdpa(&problem))?;
                files.push(path);
            }
        }
    }
    Ok(ExportSummary { files })
}
