//! Small dense semidefinite programs over real symmetric blocks.
//!
//! A problem has PSD variable blocks `X_j`, a linear objective
//! `Σ_j ⟨C_j, X_j⟩` to minimize, and affine constraints
//!
//! ```text
//! G_k(X) = Σ_terms L(X_j) + K_k   ⪰ 0   or   = 0
//! ```
//!
//! where each term is either `c·X_j` or `c·tr(X_j)·I`. Complex Hermitian
//! programs are handled through [`embed_hermitian`]: every term is a real
//! scalar multiple, so the real relaxation is exact (see [`compress_hermitian`]).

mod certificate;
mod export;
mod solver;
mod standard;

pub use certificate::{check_certificates, CertificateReport, Violation};
pub use export::{parse_sdpa, write_sdpa, SdpaProblem};
pub use solver::{solve, solve_with, SolverOptions};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::quantum::{self, ComplexMatrix};

pub type RealMatrix = DMatrix<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("block index {0} out of range")]
    BadBlock(usize),
    #[error("constraint {constraint}: term on block {block} has dimension {got}, expected {expected}")]
    TermDim {
        constraint: usize,
        block: usize,
        expected: usize,
        got: usize,
    },
    #[error("{0} is not symmetric")]
    NotSymmetric(String),
    #[error("objective for block {block} has dimension {got}, expected {expected}")]
    ObjectiveDim {
        block: usize,
        expected: usize,
        got: usize,
    },
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("malformed SDPA input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, SdpError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    /// `G(X) ⪰ 0`
    Psd,
    /// `G(X) = 0`
    Equality,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    /// `coef · X_block`; output dimension equals the block dimension.
    Scaled { block: usize, coef: f64 },
    /// `coef · tr(X_block) · I`; any output dimension.
    Trace { block: usize, coef: f64 },
}

impl Term {
    pub fn block(&self) -> usize {
        match *self {
            Term::Scaled { block, .. } | Term::Trace { block, .. } => block,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<Term>,
    pub constant: RealMatrix,
    pub sense: Sense,
}

impl Constraint {
    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    block_dims: Vec<usize>,
    objective: Vec<RealMatrix>,
    constraints: Vec<Constraint>,
}

fn symmetry_error(m: &RealMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    (m - m.transpose()).amax()
}

impl SdpProblem {
    /// Problem with the given PSD blocks, zero objective and no constraints.
    pub fn new(block_dims: Vec<usize>) -> Self {
        let objective = block_dims.iter().map(|&d| RealMatrix::zeros(d, d)).collect();
        Self {
            block_dims,
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn set_objective(&mut self, block: usize, c: RealMatrix) -> Result<()> {
        let expected = *self.block_dims.get(block).ok_or(SdpError::BadBlock(block))?;
        if c.shape() != (expected, expected) {
            return Err(SdpError::ObjectiveDim {
                block,
                expected,
                got: c.nrows(),
            });
        }
        if symmetry_error(&c) > 0.0 {
            return Err(SdpError::NotSymmetric(format!("objective block {block}")));
        }
        self.objective[block] = c;
        Ok(())
    }

    pub fn add_constraint(&mut self, constraint: Constraint) -> Result<usize> {
        let k = self.constraints.len();
        let dim = constraint.dim();
        if symmetry_error(&constraint.constant) > 0.0 {
            return Err(SdpError::NotSymmetric(format!("constant of constraint {k}")));
        }
        for term in &constraint.terms {
            let block = term.block();
            let bd = *self.block_dims.get(block).ok_or(SdpError::BadBlock(block))?;
            if matches!(term, Term::Scaled { .. }) && bd != dim {
                return Err(SdpError::TermDim {
                    constraint: k,
                    block,
                    expected: dim,
                    got: bd,
                });
            }
        }
        self.constraints.push(constraint);
        Ok(k)
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn objective(&self) -> &[RealMatrix] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Same problem with every objective block multiplied by `factor`.
    pub fn scaled_objective(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.objective {
            *c *= factor;
        }
        out
    }

    pub fn objective_value(&self, blocks: &[RealMatrix]) -> f64 {
        self.objective
            .iter()
            .zip(blocks)
            .map(|(c, x)| c.dot(x))
            .sum()
    }

    /// `G_k(X)`.
    pub fn constraint_value(&self, k: usize, blocks: &[RealMatrix]) -> RealMatrix {
        let con = &self.constraints[k];
        let mut out = con.constant.clone();
        for term in &con.terms {
            match *term {
                Term::Scaled { block, coef } => out += &blocks[block] * coef,
                Term::Trace { block, coef } => {
                    let tr = blocks[block].trace() * coef;
                    for i in 0..out.nrows() {
                        out[(i, i)] += tr;
                    }
                }
            }
        }
        out
    }

    /// `C_j − Σ_k L_kj*(Y_k)` for every variable block.
    pub fn dual_slack(&self, duals: &[RealMatrix]) -> Vec<RealMatrix> {
        let mut out = self.objective.clone();
        for (con, y) in self.constraints.iter().zip(duals) {
            for term in &con.terms {
                match *term {
                    Term::Scaled { block, coef } => out[block] -= y * coef,
                    Term::Trace { block, coef } => {
                        let tr = y.trace() * coef;
                        for i in 0..self.block_dims[block] {
                            out[block][(i, i)] -= tr;
                        }
                    }
                }
            }
        }
        out
    }

    /// `−Σ_k ⟨Y_k, K_k⟩`.
    pub fn dual_objective_value(&self, duals: &[RealMatrix]) -> f64 {
        -self
            .constraints
            .iter()
            .zip(duals)
            .map(|(c, y)| c.constant.dot(y))
            .sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::MaxIterations => "max-iterations",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `max(⟨X,S⟩, |p − d|) / (1 + |p| + |d|)`.
    pub gap: f64,
    /// `‖b − A(X)‖ / (1 + ‖b‖)` in standard form.
    pub primal_residual: f64,
    /// `‖C − Aᵀy − S‖ / (1 + ‖C‖)` in standard form.
    pub dual_residual: f64,
    pub iterations: usize,
    /// Primal variable blocks `X_j`.
    pub blocks: Vec<RealMatrix>,
    /// Dual slack `S_j` paired with each variable block.
    pub dual_slacks: Vec<RealMatrix>,
    /// Multiplier `Y_k` of each constraint (PSD for `Sense::Psd`).
    pub constraint_duals: Vec<RealMatrix>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// `[[Re h, −Im h], [Im h, Re h]]`. PSD iff `h` is PSD; the trace doubles.
pub fn embed_hermitian(h: &ComplexMatrix) -> Result<RealMatrix> {
    if h.nrows() != h.ncols() || quantum::hermiticity_error(h) > quantum::STATE_TOL {
        return Err(SdpError::NotHermitian);
    }
    let h = quantum::hermitize(h);
    let d = h.nrows();
    Ok(RealMatrix::from_fn(2 * d, 2 * d, |i, j| {
        let z = h[(i % d, j % d)];
        match (i < d, j < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    }))
}

/// Left inverse of [`embed_hermitian`] that maps every real symmetric PSD
/// matrix to a Hermitian PSD matrix: `((A + D) + i(C − B)) / 2` for blocks
/// `[[A, B], [C, D]]`.
pub fn compress_hermitian(m: &RealMatrix) -> ComplexMatrix {
    let d = m.nrows() / 2;
    ComplexMatrix::from_fn(d, d, |i, j| {
        num_complex::Complex64::new(
            0.5 * (m[(i, j)] + m[(i + d, j + d)]),
            0.5 * (m[(i + d, j)] - m[(i, j + d)]),
        )
    })
}
