//! Measurement-conditioned assemblages `{σ_{a|x}}` built from a scenario: an
//! initial state, a measurement on one factor at `t = 0`, a channel, and a
//! target set of factors read out at time `t`.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{self, DynamicsError, LindbladModel, Trajectory};
use crate::quantum::{
    self, c, embed_site_operator, partial_trace_matrix, psd_sqrt, ComplexMatrix, DensityMatrix,
    MeasurementSet, QuantumError,
};

/// Branches with `p(a|x)` below this are stored as zero matrices.
pub const NULL_BRANCH_PROBABILITY: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-8;
pub const PSD_TOL: f64 = 1e-8;
pub const NORMALIZATION_TOL: f64 = 1e-7;
/// Diagnostic tolerance on `Σ_a σ_{a|x}` being independent of `x`.
pub const NO_SIGNALLING_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblageError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("assemblage layout mismatch: {0}")]
    Layout(String),
    #[error("malformed assemblage text: {0}")]
    Parse(String),
    #[error("time must be finite and non-negative, got {0}")]
    BadTime(f64),
}

pub type Result<T> = std::result::Result<T, AssemblageError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Measure factor A at `t = 0`, evolve, read out factors B.
    SpatioTemporal,
    /// A single system measured at `t = 0` and read out at `t`.
    Temporal,
    /// Identity channel, `t` ignored.
    Epr,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    initial_state: DensityMatrix,
    measurements: MeasurementSet,
    measured: usize,
    target: Vec<usize>,
    channel: LindbladModel,
    mode: Mode,
    reduced: bool,
}

impl Scenario {
    pub fn new(
        initial_state: DensityMatrix,
        measurements: MeasurementSet,
        measured: usize,
        target: Vec<usize>,
        channel: LindbladModel,
        mode: Mode,
    ) -> Result<Self> {
        let dims = initial_state.factor_dims();
        if measured >= dims.len() {
            return Err(AssemblageError::InvalidScenario(format!(
                "measured factor {measured} out of range"
            )));
        }
        if measurements.dim() != dims[measured] {
            return Err(QuantumError::DimMismatch {
                expected: dims[measured],
                got: measurements.dim(),
            }
            .into());
        }
        if target.is_empty()
            || target.iter().any(|&k| k >= dims.len())
            || target.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(QuantumError::InvalidSubsystems(target).into());
        }
        if channel.factor_dims() != dims {
            return Err(AssemblageError::InvalidScenario(format!(
                "channel acts on {:?}, state on {:?}",
                channel.factor_dims(),
                dims
            )));
        }
        match mode {
            Mode::Temporal if target != [measured] => {
                return Err(AssemblageError::InvalidScenario(
                    "temporal mode reads out the measured system".into(),
                ));
            }
            Mode::Epr
                if !channel.collapse_terms().is_empty()
                    || channel.hamiltonian().iter().any(|z| z.norm() != 0.0) =>
            {
                return Err(AssemblageError::InvalidScenario(
                    "EPR mode needs the identity channel".into(),
                ));
            }
            _ => {}
        }
        Ok(Self {
            initial_state,
            measurements,
            measured,
            target,
            channel,
            mode,
            reduced: true,
        })
    }

    /// EPR scenario: identity channel on the state's factors.
    pub fn epr(
        initial_state: DensityMatrix,
        measurements: MeasurementSet,
        measured: usize,
        target: Vec<usize>,
    ) -> Result<Self> {
        let channel = LindbladModel::identity_channel(initial_state.factor_dims().to_vec());
        Self::new(initial_state, measurements, measured, target, channel, Mode::Epr)
    }

    /// Whether to evolve in the populated excitation sectors when the
    /// channel conserves excitation number (default `true`).
    pub fn with_reduction(mut self, reduced: bool) -> Self {
        self.reduced = reduced;
        self
    }

    pub fn initial_state(&self) -> &DensityMatrix {
        &self.initial_state
    }

    pub fn measurements(&self) -> &MeasurementSet {
        &self.measurements
    }

    pub fn measured(&self) -> usize {
        self.measured
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }

    pub fn channel(&self) -> &LindbladModel {
        &self.channel
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn reduced(&self) -> bool {
        self.reduced
    }

    /// Whether evolution actually runs in the excitation sectors: requested
    /// and the channel conserves excitations.
    pub fn uses_reduction(&self) -> bool {
        self.reduced && dynamics::conserves_excitation(&self.channel)
    }

    /// Same scenario read out on different factors (mode unchanged).
    pub fn with_target(&self, target: Vec<usize>) -> Result<Self> {
        Self::new(
            self.initial_state.clone(),
            self.measurements.clone(),
            self.measured,
            target,
            self.channel.clone(),
            self.mode,
        )
        .map(|s| s.with_reduction(self.reduced))
    }

    fn target_dim(&self) -> usize {
        self.target
            .iter()
            .map(|&k| self.initial_state.factor_dims()[k])
            .product()
    }

    /// Post-measurement subnormalized states `K ρ₀ K†`, `K = √F_{a|x} ⊗ I`,
    /// in x-major order, with their probabilities.
    fn branches(&self) -> Result<Vec<(ComplexMatrix, f64)>> {
        let dims = self.initial_state.factor_dims();
        let rho = self.initial_state.matrix();
        let mut out = Vec::new();
        for povm in self.measurements.settings() {
            for effect in povm.effects() {
                let k = embed_site_operator(&psd_sqrt(effect)?, self.measured, dims)?;
                let branch = quantum::hermitize(&(&k * rho * k.adjoint()));
                let p = quantum::trace(&branch).re;
                out.push((branch, p));
            }
        }
        Ok(out)
    }

    fn evolve_branch(&self, branch: &ComplexMatrix, grid: &[f64]) -> Result<Trajectory> {
        let dims = self.initial_state.factor_dims().to_vec();
        let state = DensityMatrix::from_raw(branch.clone(), dims);
        if self.reduced {
            match dynamics::evolve_reduced(&self.channel, &state, grid) {
                Err(DynamicsError::NotExcitationConserving) => {}
                other => return other.map_err(Into::into),
            }
        }
        Ok(dynamics::evolve(&self.channel, &state, grid)?)
    }

    /// Assemblages at every time in `grid`, one trajectory per branch.
    pub fn assemblage_series(&self, grid: &[f64]) -> Result<Vec<Assemblage>> {
        Ok(self
            .assemblage_series_for(grid, std::slice::from_ref(&self.target))?
            .remove(0))
    }

    /// Like [`Scenario::assemblage_series`] for several target sets at once,
    /// sharing the branch trajectories. Indexed `[target][time]`.
    pub fn assemblage_series_for(
        &self,
        grid: &[f64],
        targets: &[Vec<usize>],
    ) -> Result<Vec<Vec<Assemblage>>> {
        for &t in grid {
            if !t.is_finite() || t < 0.0 {
                return Err(AssemblageError::BadTime(t));
            }
        }
        let readouts: Vec<Scenario> = targets
            .iter()
            .map(|t| self.with_target(t.clone()))
            .collect::<Result<_>>()?;
        let m = self.measurements.n_settings();
        let o = self.measurements.n_outcomes();
        let dims = self.initial_state.factor_dims().to_vec();
        let branches = self.branches()?;

        // [branch][target][time]
        let per_branch: Vec<Vec<Vec<ComplexMatrix>>> = branches
            .par_iter()
            .map(|(branch, p)| -> Result<Vec<Vec<ComplexMatrix>>> {
                if *p < NULL_BRANCH_PROBABILITY {
                    return Ok(readouts
                        .iter()
                        .map(|r| {
                            let d = r.target_dim();
                            vec![ComplexMatrix::zeros(d, d); grid.len()]
                        })
                        .collect());
                }
                let states: Vec<ComplexMatrix> = if self.mode == Mode::Epr {
                    vec![branch.clone(); grid.len()]
                } else {
                    self.evolve_branch(branch, grid)?
                        .states
                        .into_iter()
                        .map(|s| s.into_matrix())
                        .collect()
                };
                readouts
                    .iter()
                    .map(|r| {
                        states
                            .iter()
                            .map(|s| {
                                Ok(quantum::hermitize(&partial_trace_matrix(s, &dims, &r.target)?))
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;

        Ok(readouts
            .iter()
            .enumerate()
            .map(|(k, r)| {
                grid.iter()
                    .enumerate()
                    .map(|(i, &t)| Assemblage {
                        m,
                        o,
                        dim_b: r.target_dim(),
                        time: t,
                        members: per_branch.iter().map(|b| b[k][i].clone()).collect(),
                    })
                    .collect()
            })
            .collect())
    }

    fn single(&self, t: f64) -> Result<Assemblage> {
        if !t.is_finite() || t < 0.0 {
            return Err(AssemblageError::BadTime(t));
        }
        let grid = if self.mode == Mode::Epr { 0.0 } else { t };
        let mut asm = self.assemblage_series(&[grid])?.remove(0);
        asm.time = t;
        Ok(asm)
    }
}

/// `σ_{a|x}(t) = Tr_{¬B} Λ_t[(√F_{a|x} ⊗ I) ρ₀ (√F_{a|x} ⊗ I)]`.
pub fn make_st_assemblage(s: &Scenario, t: f64) -> Result<Assemblage> {
    s.single(t)
}

/// `σ_{a|x}(t) = p(a|x) Λ_t[ρ_{a|x}]` for a system measured at `t = 0` and
/// read out itself.
pub fn make_temporal_assemblage(s: &Scenario, t: f64) -> Result<Assemblage> {
    if s.mode != Mode::Temporal {
        return Err(AssemblageError::InvalidScenario(
            "scenario is not in temporal mode".into(),
        ));
    }
    s.single(t)
}

/// Table of subnormalized states, stored x-major (`index = x·o + a`).
#[derive(Debug, Clone, PartialEq)]
pub struct Assemblage {
    m: usize,
    o: usize,
    dim_b: usize,
    time: f64,
    members: Vec<ComplexMatrix>,
}

impl Assemblage {
    /// Checks only the layout; physical validity is reported by
    /// [`Assemblage::validate`].
    pub fn new(m: usize, o: usize, members: Vec<ComplexMatrix>, time: f64) -> Result<Self> {
        if m == 0 || o == 0 || members.len() != m * o {
            return Err(AssemblageError::Layout(format!(
                "{} members for m = {m}, o = {o}",
                members.len()
            )));
        }
        let dim_b = members[0].nrows();
        if members.iter().any(|s| s.shape() != (dim_b, dim_b)) || dim_b == 0 {
            return Err(AssemblageError::Layout("members must share one square shape".into()));
        }
        Ok(Self {
            m,
            o,
            dim_b,
            time,
            members,
        })
    }

    pub fn n_settings(&self) -> usize {
        self.m
    }

    pub fn n_outcomes(&self) -> usize {
        self.o
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn member(&self, x: usize, a: usize) -> &ComplexMatrix {
        &self.members[x * self.o + a]
    }

    pub fn members(&self) -> &[ComplexMatrix] {
        &self.members
    }

    pub fn probability(&self, x: usize, a: usize) -> f64 {
        quantum::trace(self.member(x, a)).re
    }

    /// `Σ_a σ_{a|x}`.
    pub fn marginal(&self, x: usize) -> ComplexMatrix {
        (0..self.o).fold(ComplexMatrix::zeros(self.dim_b, self.dim_b), |acc, a| {
            acc + self.member(x, a)
        })
    }

    fn same_layout(&self, other: &Assemblage) -> Result<()> {
        if (self.m, self.o, self.dim_b) != (other.m, other.o, other.dim_b) {
            return Err(AssemblageError::Layout(format!(
                "({}, {}, {}) vs ({}, {}, {})",
                self.m, self.o, self.dim_b, other.m, other.o, other.dim_b
            )));
        }
        Ok(())
    }

    /// `q·self + (1 − q)·other`.
    pub fn mix(&self, other: &Assemblage, q: f64) -> Result<Assemblage> {
        self.same_layout(other)?;
        let members = self
            .members
            .iter()
            .zip(&other.members)
            .map(|(a, b)| a.scale(q) + b.scale(1.0 - q))
            .collect();
        Ok(Assemblage {
            members,
            ..self.clone()
        })
    }

    /// `U σ_{a|x} U†` for every member.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Result<Assemblage> {
        if u.shape() != (self.dim_b, self.dim_b) {
            return Err(AssemblageError::Layout("unitary has the wrong dimension".into()));
        }
        let members = self.members.iter().map(|s| u * s * u.adjoint()).collect();
        Ok(Assemblage {
            members,
            ..self.clone()
        })
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport {
            max_hermiticity_error: 0.0,
            min_eigenvalue: f64::INFINITY,
            max_normalization_error: 0.0,
            max_signalling: 0.0,
        };
        for s in &self.members {
            report.max_hermiticity_error = report.max_hermiticity_error.max(quantum::hermiticity_error(s));
            report.min_eigenvalue = report
                .min_eigenvalue
                .min(quantum::min_eigenvalue(&quantum::hermitize(s)));
        }
        let first = self.marginal(0);
        for x in 0..self.m {
            let marginal = self.marginal(x);
            let norm = quantum::trace(&marginal).re;
            report.max_normalization_error = report.max_normalization_error.max((norm - 1.0).abs());
            report.max_signalling = report
                .max_signalling
                .max(quantum::max_abs_diff(&marginal, &first));
        }
        report
    }

    /// Header `m o dim_b t`, then one line per member row: `re im` pairs,
    /// members in x-major order. All floats carry 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {} {:.16e}", self.m, self.o, self.dim_b, self.time);
        for member in &self.members {
            for i in 0..self.dim_b {
                let row: Vec<String> = (0..self.dim_b)
                    .map(|j| {
                        let z = member[(i, j)];
                        format!("{:.16e} {:.16e}", z.re, z.im)
                    })
                    .collect();
                let _ = writeln!(s, "{}", row.join(" "));
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: String| AssemblageError::Parse(msg);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("empty input".into()))?
            .split_whitespace()
            .collect();
        if header.len() != 4 {
            return Err(bad(format!("header has {} fields, expected 4", header.len())));
        }
        let int = |t: &str| t.parse::<usize>().map_err(|_| bad(format!("integer {t:?}")));
        let (m, o, dim_b) = (int(header[0])?, int(header[1])?, int(header[2])?);
        let time: f64 = header[3].parse().map_err(|_| bad(format!("time {:?}", header[3])))?;
        let mut members = Vec::with_capacity(m * o);
        for k in 0..m * o {
            let mut mat = ComplexMatrix::zeros(dim_b, dim_b);
            for i in 0..dim_b {
                let line = lines
                    .next()
                    .ok_or_else(|| bad(format!("member {k} truncated")))?;
                let vals: Vec<f64> = line
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| bad(format!("number {t:?}"))))
                    .collect::<Result<_>>()?;
                if vals.len() != 2 * dim_b {
                    return Err(bad(format!("member {k} row {i} has {} numbers", vals.len())));
                }
                for j in 0..dim_b {
                    mat[(i, j)] = c(vals[2 * j], vals[2 * j + 1]);
                }
            }
            members.push(mat);
        }
        if lines.next().is_some() {
            return Err(bad("trailing data".into()));
        }
        Self::new(m, o, members, time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    /// `max_x |Σ_a tr σ_{a|x} − 1|`.
    pub max_normalization_error: f64,
    /// `max_x ‖Σ_a σ_{a|x} − Σ_a σ_{a|0}‖_max`.
    pub max_signalling: f64,
}

impl ValidationReport {
    pub fn hermitian(&self) -> bool {
        self.max_hermiticity_error <= HERMITIAN_TOL
    }

    pub fn psd(&self) -> bool {
        self.min_eigenvalue >= -PSD_TOL
    }

    pub fn normalized(&self) -> bool {
        self.max_normalization_error <= NORMALIZATION_TOL
    }

    /// All hard checks.
    pub fn is_valid(&self) -> bool {
        self.hermitian() && self.psd() && self.normalized()
    }

    /// Diagnostic only: spatio-temporal channels may signal from A to B.
    pub fn x_independent(&self) -> bool {
        self.max_signalling <= NO_SIGNALLING_TOL
    }
}
