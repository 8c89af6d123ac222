//! Hidden-state programs over an assemblage: the feasibility test, the
//! steering weight and the steering robustness.
//!
//! Hidden-state responses are deterministic by default: any stochastic
//! response `p(a|x,λ)` is a convex mixture of deterministic ones, so the
//! deterministic set spans the same cone of hidden-state models.
//! [`StrategySet::from_responses`] admits stochastic tables for comparison.

use rayon::prelude::*;
use thiserror::Error;

use crate::assemblage::{Assemblage, AssemblageError, Scenario, ValidationReport};
use crate::quantum::ComplexMatrix;
use crate::sdp::{
    self, check_certificates, compress_hermitian, embed_hermitian, CertificateReport, Constraint,
    RealMatrix, SdpError, SdpProblem, SdpSolution, Sense, SolveStatus, Term,
};

/// Values below this are reported as exactly zero.
pub const REPORTING_THRESHOLD: f64 = 1e-7;
/// A series has vanished once it stays at or below this value.
pub const VANISHING_THRESHOLD: f64 = 1e-3;
pub const MAX_STRATEGIES: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteeringError {
    #[error("{count} strategies exceed the limit of {MAX_STRATEGIES}")]
    TooManyStrategies { count: u128 },
    #[error("response table is not a valid conditional distribution: {0}")]
    BadResponses(String),
    #[error("strategy set ({0}, {1}) does not match the assemblage layout")]
    LayoutMismatch(usize, usize),
    #[error("assemblage fails validation: {0:?}")]
    InvalidAssemblage(ValidationReport),
    #[error("solver stopped with status {} (gap {gap:.3e})", status.as_str())]
    Solver { status: SolveStatus, gap: f64 },
    #[error(transparent)]
    Assemblage(#[from] AssemblageError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

pub type Result<T> = std::result::Result<T, SteeringError>;

/// Response table `p(a|x,λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySet {
    m: usize,
    o: usize,
    /// `responses[λ][x·o + a]`
    responses: Vec<Vec<f64>>,
}

/// All `o^m` deterministic response functions `x ↦ a`. Strategy `λ` reads
/// its outcomes as the base-`o` digits of `λ`, setting 0 most significant.
pub fn enumerate_strategies(m: usize, o: usize) -> Result<StrategySet> {
    if m == 0 || o == 0 {
        return Err(SteeringError::BadResponses("m and o must be positive".into()));
    }
    let count = (o as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if count > MAX_STRATEGIES as u128 {
        return Err(SteeringError::TooManyStrategies { count });
    }
    let responses = (0..count as usize)
        .map(|lambda| {
            let mut row = vec![0.0; m * o];
            let mut rest = lambda;
            for x in (0..m).rev() {
                row[x * o + rest % o] = 1.0;
                rest /= o;
            }
            row
        })
        .collect();
    Ok(StrategySet { m, o, responses })
}

impl StrategySet {
    /// `responses[λ][x][a] = p(a|x,λ)`; every row must be a distribution.
    pub fn from_responses(responses: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let first = responses
            .first()
            .ok_or_else(|| SteeringError::BadResponses("no strategies".into()))?;
        let m = first.len();
        let o = first.first().map_or(0, |r| r.len());
        if m == 0 || o == 0 {
            return Err(SteeringError::BadResponses("empty response table".into()));
        }
        let mut flat = Vec::with_capacity(responses.len());
        for (lambda, table) in responses.iter().enumerate() {
            if table.len() != m || table.iter().any(|r| r.len() != o) {
                return Err(SteeringError::BadResponses(format!("strategy {lambda} has the wrong shape")));
            }
            for row in table {
                let total: f64 = row.iter().sum();
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (total - 1.0).abs() > 1e-12 {
                    return Err(SteeringError::BadResponses(format!("strategy {lambda}: {row:?}")));
                }
            }
            flat.push(table.iter().flatten().copied().collect());
        }
        Ok(Self {
            m,
            o,
            responses: flat,
        })
    }

    pub fn n_settings(&self) -> usize {
        self.m
    }

    pub fn n_outcomes(&self) -> usize {
        self.o
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    /// `p(a|x,λ)`.
    pub fn response(&self, lambda: usize, x: usize, a: usize) -> f64 {
        self.responses[lambda][x * self.o + a]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    Weight,
    Robustness,
}

impl Measure {
    pub fn as_str(&self) -> &'static str {
        match self {
            Measure::Weight => "weight",
            Measure::Robustness => "robustness",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringResult {
    /// Reported value: clamped, and zero below [`REPORTING_THRESHOLD`].
    pub value: f64,
    /// Value before clamping and thresholding.
    pub raw_value: f64,
    /// Optimal `ρ_λ = p(λ)σ_λ`.
    pub hidden_states: Vec<ComplexMatrix>,
    /// Robustness only: `τ_{a|x} = (Σ_λ p(a|x,λ)ρ_λ − σ_{a|x}) / α`, x-major.
    /// Empty when `α` is reported as zero.
    pub noise: Vec<ComplexMatrix>,
    pub solution: SdpSolution,
    pub certificates: CertificateReport,
}

fn check(asm: &Assemblage, strategies: &StrategySet) -> Result<Vec<RealMatrix>> {
    if (strategies.m, strategies.o) != (asm.n_settings(), asm.n_outcomes()) {
        return Err(SteeringError::LayoutMismatch(strategies.m, strategies.o));
    }
    let report = asm.validate();
    if !(report.hermitian() && report.psd() && report.normalized()) {
        return Err(SteeringError::InvalidAssemblage(report));
    }
    asm.members()
        .iter()
        .map(|s| embed_hermitian(&crate::quantum::hermitize(s)).map_err(Into::into))
        .collect()
}

/// `Σ_λ p(a|x,λ) X_λ` as constraint terms with the given sign.
fn model_terms(strategies: &StrategySet, x: usize, a: usize, sign: f64) -> Vec<Term> {
    (0..strategies.len())
        .filter_map(|lambda| {
            let p = strategies.response(lambda, x, a);
            (p != 0.0).then_some(Term::Scaled {
                block: lambda,
                coef: sign * p,
            })
        })
        .collect()
}

/// `min −½ Σ tr X_λ` s.t. `embed(σ_{a|x}) − Σ_λ p(a|x,λ) X_λ ⪰ 0`; the
/// weight is `1 + optimum`.
pub fn weight_problem(asm: &Assemblage, strategies: &StrategySet) -> Result<SdpProblem> {
    let sigmas = check(asm, strategies)?;
    let d = 2 * asm.dim_b();
    let mut p = SdpProblem::new(vec![d; strategies.len()]);
    for lambda in 0..strategies.len() {
        p.set_objective(lambda, RealMatrix::identity(d, d) * -0.5)?;
    }
    for x in 0..asm.n_settings() {
        for a in 0..asm.n_outcomes() {
            p.add_constraint(Constraint {
                terms: model_terms(strategies, x, a, -1.0),
                constant: sigmas[x * asm.n_outcomes() + a].clone(),
                sense: Sense::Psd,
            })?;
        }
    }
    Ok(p)
}

/// `min ½ Σ tr X_λ` s.t. `Σ_λ p(a|x,λ) X_λ − embed(σ_{a|x}) ⪰ 0`; the
/// robustness is `optimum − 1`.
pub fn robustness_problem(asm: &Assemblage, strategies: &StrategySet) -> Result<SdpProblem> {
    let sigmas = check(asm, strategies)?;
    let d = 2 * asm.dim_b();
    let mut p = SdpProblem::new(vec![d; strategies.len()]);
    for lambda in 0..strategies.len() {
        p.set_objective(lambda, RealMatrix::identity(d, d) * 0.5)?;
    }
    for x in 0..asm.n_settings() {
        for a in 0..asm.n_outcomes() {
            p.add_constraint(Constraint {
                terms: model_terms(strategies, x, a, 1.0),
                constant: -&sigmas[x * asm.n_outcomes() + a],
                sense: Sense::Psd,
            })?;
        }
    }
    Ok(p)
}

/// `min s` s.t. `s I ± (Σ_λ p(a|x,λ) X_λ − embed(σ_{a|x})) ⪰ 0` and
/// `½ Σ tr X_λ = 1`. The slack `s` is the last block (1×1).
pub fn feasibility_problem(asm: &Assemblage, strategies: &StrategySet) -> Result<SdpProblem> {
    let sigmas = check(asm, strategies)?;
    let d = 2 * asm.dim_b();
    let n = strategies.len();
    let mut dims = vec![d; n];
    dims.push(1);
    let mut p = SdpProblem::new(dims);
    p.set_objective(n, RealMatrix::identity(1, 1))?;
    for x in 0..asm.n_settings() {
        for a in 0..asm.n_outcomes() {
            let sigma = &sigmas[x * asm.n_outcomes() + a];
            for sign in [1.0, -1.0] {
                let mut terms = model_terms(strategies, x, a, sign);
                terms.push(Term::Trace { block: n, coef: 1.0 });
                p.add_constraint(Constraint {
                    terms,
                    constant: sigma * -sign,
                    sense: Sense::Psd,
                })?;
            }
        }
    }
    p.add_constraint(Constraint {
        terms: (0..n).map(|lambda| Term::Trace { block: lambda, coef: 0.5 }).collect(),
        constant: RealMatrix::from_element(1, 1, -1.0),
        sense: Sense::Equality,
    })?;
    Ok(p)
}

fn solve_checked(p: &SdpProblem) -> Result<SdpSolution> {
    let sol = sdp::solve(p);
    if !sol.is_optimal() {
        return Err(SteeringError::Solver {
            status: sol.status,
            gap: sol.gap,
        });
    }
    Ok(sol)
}

fn report(raw: f64, upper: f64) -> f64 {
    let clamped = raw.clamp(0.0, upper);
    if clamped < REPORTING_THRESHOLD {
        0.0
    } else {
        clamped
    }
}

fn hidden_states(sol: &SdpSolution, n: usize) -> Vec<ComplexMatrix> {
    sol.blocks[..n].iter().map(compress_hermitian).collect()
}

/// Whether a hidden-state model reproduces the assemblage exactly, with the
/// optimal slack as margin (model exists iff margin ≤ [`REPORTING_THRESHOLD`]).
pub fn is_unsteerable(asm: &Assemblage) -> Result<(bool, f64)> {
    let strategies = enumerate_strategies(asm.n_settings(), asm.n_outcomes())?;
    is_unsteerable_with(asm, &strategies)
}

pub fn is_unsteerable_with(asm: &Assemblage, strategies: &StrategySet) -> Result<(bool, f64)> {
    let p = feasibility_problem(asm, strategies)?;
    let sol = solve_checked(&p)?;
    let margin = sol.primal_objective.max(0.0);
    Ok((margin <= REPORTING_THRESHOLD, margin))
}

/// `1 − max Σ_λ tr ρ_λ` s.t. `σ_{a|x} − Σ_λ p(a|x,λ)ρ_λ ⪰ 0`, in `[0, 1]`.
pub fn sts_weight(asm: &Assemblage) -> Result<SteeringResult> {
    let strategies = enumerate_strategies(asm.n_settings(), asm.n_outcomes())?;
    sts_weight_with(asm, &strategies)
}

pub fn sts_weight_with(asm: &Assemblage, strategies: &StrategySet) -> Result<SteeringResult> {
    let p = weight_problem(asm, strategies)?;
    let sol = solve_checked(&p)?;
    let raw = 1.0 + sol.primal_objective;
    Ok(SteeringResult {
        value: report(raw, 1.0),
        raw_value: raw,
        hidden_states: hidden_states(&sol, strategies.len()),
        noise: Vec::new(),
        certificates: check_certificates(&p, &sol),
        solution: sol,
    })
}

/// `min Σ_λ tr ρ_λ − 1` s.t. `Σ_λ p(a|x,λ)ρ_λ − σ_{a|x} ⪰ 0`.
pub fn sts_robustness(asm: &Assemblage) -> Result<SteeringResult> {
    let strategies = enumerate_strategies(asm.n_settings(), asm.n_outcomes())?;
    sts_robustness_with(asm, &strategies)
}

pub fn sts_robustness_with(asm: &Assemblage, strategies: &StrategySet) -> Result<SteeringResult> {
    let p = robustness_problem(asm, strategies)?;
    let sol = solve_checked(&p)?;
    let raw = sol.primal_objective - 1.0;
    let value = report(raw, f64::INFINITY);
    let states = hidden_states(&sol, strategies.len());
    let mut noise = Vec::new();
    if value > 0.0 {
        for x in 0..asm.n_settings() {
            for a in 0..asm.n_outcomes() {
                let model = states
                    .iter()
                    .enumerate()
                    .fold(ComplexMatrix::zeros(asm.dim_b(), asm.dim_b()), |acc, (lambda, r)| {
                        acc + r.scale(strategies.response(lambda, x, a))
                    });
                noise.push((model - asm.member(x, a)).unscale(value));
            }
        }
    }
    Ok(SteeringResult {
        value,
        raw_value: raw,
        hidden_states: states,
        noise,
        certificates: check_certificates(&p, &sol),
        solution: sol,
    })
}

pub fn measure(asm: &Assemblage, which: Measure) -> Result<SteeringResult> {
    match which {
        Measure::Weight => sts_weight(asm),
        Measure::Robustness => sts_robustness(asm),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub time: f64,
    pub result: Result<SteeringResult>,
}

/// One measure value per grid time, in grid order. Assemblage generation
/// errors abort the sweep; solver failures are kept per point.
pub fn measure_sweep(scenario: &Scenario, grid: &[f64], which: Measure) -> Result<Vec<SweepPoint>> {
    let assemblages = scenario.assemblage_series(grid)?;
    Ok(assemblages
        .par_iter()
        .map(|asm| SweepPoint {
            time: asm.time(),
            result: measure(asm, which),
        })
        .collect())
}

/// Last grid time at which the series exceeds `threshold`, or `None` if it
/// never does.
pub fn vanishing_time(times: &[f64], values: &[f64], threshold: f64) -> Option<f64> {
    times
        .iter()
        .zip(values)
        .rev()
        .find(|(_, &v)| v > threshold)
        .map(|(&t, _)| t)
}
