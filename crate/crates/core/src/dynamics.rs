//! Lindblad models for the qubit chain and the FMO complex, and an adaptive
//! Runge–Kutta integrator for the master equation
//!
//! ```text
//! dρ/dt = −i[H, ρ] + Σ_k γ_k (2 A_k ρ A_k† − A_k†A_k ρ − ρ A_k†A_k)
//! ```
//!
//! (ħ = 1). The factor-2 dissipator form is used for every model, so a pure
//! σz dephasing at rate γ damps coherences as `e^{−4γt}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::quantum::{
    self, c, embed_site_operator, hermitize, max_abs_diff, pauli, ComplexMatrix,
    DensityMatrix, QuantumError,
};

/// Speed of light in cm/s.
pub const SPEED_OF_LIGHT_CM_PER_S: f64 = 2.997_924_58e10;

/// Multiplier taking a wavenumber in cm⁻¹ to an angular frequency in rad/ps.
pub const CM_INV_TO_RAD_PER_PS: f64 = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_CM_PER_S * 1e-12;

const HERMITIAN_TOL: f64 = 1e-9;
const CONSERVATION_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("rate {0} is negative")]
    NegativeRate(f64),
    #[error("Hamiltonian is not Hermitian (deviation {0:.3e})")]
    NonHermitian(f64),
    #[error("dimension mismatch: model has {model}, operand has {operand}")]
    DimMismatch { model: usize, operand: usize },
    #[error("step size underflow at t = {t} (h = {h:.3e}); the problem looks stiff")]
    StepUnderflow { t: f64, h: f64 },
    #[error("exceeded {0} integrator steps")]
    TooManySteps(usize),
    #[error("time grid must be non-negative and strictly increasing")]
    BadGrid,
    #[error("model does not conserve the total excitation number")]
    NotExcitationConserving,
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

pub type Result<T> = std::result::Result<T, DynamicsError>;

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseTerm {
    pub operator: ComplexMatrix,
    pub rate: f64,
}

/// Hamiltonian plus weighted collapse operators on a tensor-product space.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    hamiltonian: ComplexMatrix,
    collapse: Vec<CollapseTerm>,
    factor_dims: Vec<usize>,
}

impl LindbladModel {
    pub fn new(
        hamiltonian: ComplexMatrix,
        collapse: Vec<CollapseTerm>,
        factor_dims: Vec<usize>,
    ) -> Result<Self> {
        let dim = hamiltonian.nrows();
        if hamiltonian.ncols() != dim || factor_dims.iter().product::<usize>() != dim {
            return Err(QuantumError::FactorMismatch {
                dims: factor_dims,
                dim,
            }
            .into());
        }
        let herr = quantum::hermiticity_error(&hamiltonian);
        if herr > HERMITIAN_TOL {
            return Err(DynamicsError::NonHermitian(herr));
        }
        for term in &collapse {
            if term.rate < 0.0 || term.rate.is_nan() {
                return Err(DynamicsError::NegativeRate(term.rate));
            }
            if term.operator.shape() != (dim, dim) {
                return Err(DynamicsError::DimMismatch {
                    model: dim,
                    operand: term.operator.nrows(),
                });
            }
        }
        Ok(Self {
            hamiltonian: hermitize(&hamiltonian),
            collapse,
            factor_dims,
        })
    }

    /// Zero Hamiltonian, no dissipation.
    pub fn identity_channel(factor_dims: Vec<usize>) -> Self {
        let dim = factor_dims.iter().product();
        Self {
            hamiltonian: ComplexMatrix::zeros(dim, dim),
            collapse: Vec::new(),
            factor_dims,
        }
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn collapse_terms(&self) -> &[CollapseTerm] {
        &self.collapse
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }
}

/// Three-qubit XY chain with dephasing on the middle qubit. Couplings and
/// rate are in units of J.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    pub j12: f64,
    pub j23: f64,
    pub gamma: f64,
}

/// `H = J12(σ₊¹σ₋² + h.c.) + J23(σ₊²σ₋³ + h.c.)` on qubits `[2, 2, 2]`, with
/// one σz collapse operator on qubit 2 at rate `gamma` (omitted when zero).
pub fn build_three_qubit_chain(p: ChainParams) -> Result<LindbladModel> {
    for v in [p.j12, p.j23, p.gamma] {
        if v < 0.0 || v.is_nan() {
            return Err(DynamicsError::NegativeRate(v));
        }
    }
    let dims = vec![2, 2, 2];
    let hamiltonian = exchange(0, 1, &dims)?.scale(p.j12) + exchange(1, 2, &dims)?.scale(p.j23);
    let mut collapse = Vec::new();
    if p.gamma > 0.0 {
        collapse.push(CollapseTerm {
            operator: embed_site_operator(&pauli::z(), 1, &dims)?,
            rate: p.gamma,
        });
    }
    LindbladModel::new(hamiltonian, collapse, dims)
}

/// `σ₊ⁱσ₋ʲ + σ₋ⁱσ₊ʲ`.
fn exchange(i: usize, j: usize, dims: &[usize]) -> Result<ComplexMatrix> {
    let up_i = embed_site_operator(&pauli::raising(), i, dims)?;
    let down_i = embed_site_operator(&pauli::lowering(), i, dims)?;
    let up_j = embed_site_operator(&pauli::raising(), j, dims)?;
    let down_j = embed_site_operator(&pauli::lowering(), j, dims)?;
    Ok(&up_i * &down_j + &down_i * &up_j)
}

/// Site energies (diagonal) and excitonic couplings (off-diagonal) of the
/// seven-site FMO monomer, in cm⁻¹.
pub const FMO_HAMILTONIAN_CM: [[f64; 7]; 7] = [
    [215.0, -104.1, 5.1, -4.3, 4.7, -15.1, -7.8],
    [-104.1, 220.0, 32.6, 7.1, 5.4, 8.3, 0.8],
    [5.1, 32.6, 0.0, -46.8, 1.0, -8.1, 5.1],
    [-4.3, 7.1, -46.8, 125.0, -70.7, -14.7, -61.5],
    [4.7, 5.4, 1.0, -70.7, 450.0, 89.7, -2.5],
    [-15.1, 8.3, -8.1, -14.7, 89.7, 330.0, 32.7],
    [-7.8, 0.8, 5.1, -61.5, -2.5, 32.7, 280.0],
];

/// Site the excitation leaves through (site 3, zero-based 2).
pub const FMO_SINK_SITE: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct FmoParams {
    /// Symmetric 7×7 matrix in cm⁻¹.
    pub hamiltonian_cm: [[f64; 7]; 7],
    /// Pure-dephasing rate in cm⁻¹.
    pub gamma_dp_cm: f64,
    /// Transfer rate from site 3 into the reaction center, in cm⁻¹.
    pub gamma_sink_cm: f64,
    pub include_reaction_center: bool,
}

impl Default for FmoParams {
    /// T = 15 K values.
    fn default() -> Self {
        Self {
            hamiltonian_cm: FMO_HAMILTONIAN_CM,
            gamma_dp_cm: 7.7 / 8.0,
            gamma_sink_cm: 5.3,
            include_reaction_center: true,
        }
    }
}

pub fn cm_inv_to_angular(wavenumber: f64) -> f64 {
    wavenumber * CM_INV_TO_RAD_PER_PS
}

/// One qubit per site (`|1⟩` = excited) plus, optionally, a reaction-center
/// qubit appended as the last factor. Energies and rates are in rad/ps.
pub fn build_fmo_model(p: &FmoParams) -> Result<LindbladModel> {
    let n_sites = 7;
    let n = n_sites + usize::from(p.include_reaction_center);
    let dims = vec![2; n];
    let dim = 1usize << n;
    for v in [p.gamma_dp_cm, p.gamma_sink_cm] {
        if v < 0.0 || v.is_nan() {
            return Err(DynamicsError::NegativeRate(v));
        }
    }
    // σz^{(n)} = |e⟩⟨e| − |g⟩⟨g|
    let site_z = -pauli::z();
    let mut hamiltonian = ComplexMatrix::zeros(dim, dim);
    for i in 0..n_sites {
        let eps = cm_inv_to_angular(p.hamiltonian_cm[i][i]);
        hamiltonian += embed_site_operator(&site_z, i, &dims)?.scale(eps / 2.0);
        for j in i + 1..n_sites {
            let coupling = p.hamiltonian_cm[i][j];
            if (coupling - p.hamiltonian_cm[j][i]).abs() > 0.0 {
                return Err(DynamicsError::NonHermitian((coupling - p.hamiltonian_cm[j][i]).abs()));
            }
            if coupling != 0.0 {
                hamiltonian += exchange(i, j, &dims)?.scale(cm_inv_to_angular(coupling));
            }
        }
    }
    let mut collapse = Vec::new();
    let gamma_dp = cm_inv_to_angular(p.gamma_dp_cm);
    if gamma_dp > 0.0 {
        for i in 0..n_sites {
            collapse.push(CollapseTerm {
                operator: embed_site_operator(&site_z, i, &dims)?,
                rate: gamma_dp,
            });
        }
    }
    let gamma_sink = cm_inv_to_angular(p.gamma_sink_cm);
    if p.include_reaction_center && gamma_sink > 0.0 {
        let s = embed_site_operator(&pauli::raising(), n_sites, &dims)?
            * embed_site_operator(&pauli::lowering(), FMO_SINK_SITE, &dims)?;
        collapse.push(CollapseTerm {
            operator: s,
            rate: gamma_sink,
        });
    }
    LindbladModel::new(hamiltonian, collapse, dims)
}

/// Right-hand side of the master equation evaluated with dense products.
pub fn lindblad_rhs(model: &LindbladModel, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    if rho.shape() != (model.dim(), model.dim()) {
        return Err(DynamicsError::DimMismatch {
            model: model.dim(),
            operand: rho.nrows(),
        });
    }
    let h = &model.hamiltonian;
    let mut out = (h * rho - rho * h) * c(0.0, -1.0);
    for term in &model.collapse {
        let a = &term.operator;
        let ad = a.adjoint();
        let ada = &ad * a;
        out += (a * rho * &ad).scale(2.0 * term.rate)
            - (&ada * rho + rho * &ada).scale(term.rate);
    }
    Ok(out)
}

/// Row-compressed sparse operator, only used inside the integrator.
#[derive(Debug, Clone)]
struct SparseOp {
    dim: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseOp {
    fn from_dense(m: &ComplexMatrix) -> Self {
        let dim = m.nrows();
        let mut row_start = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for r in 0..dim {
            for col in 0..dim {
                let v = m[(r, col)];
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(col);
                    vals.push(v);
                }
            }
            row_start.push(cols.len());
        }
        Self {
            dim,
            row_start,
            cols,
            vals,
        }
    }

    /// `self · m` for dense `m`, column by column (storage is column-major).
    fn mul_dense(&self, m: &ComplexMatrix, out: &mut ComplexMatrix) {
        let n = self.dim;
        let src = m.as_slice();
        let dst = out.as_mut_slice();
        for j in 0..n {
            let col = &src[j * n..(j + 1) * n];
            let target = &mut dst[j * n..(j + 1) * n];
            for (r, slot) in target.iter_mut().enumerate() {
                let mut acc = c(0.0, 0.0);
                for idx in self.row_start[r]..self.row_start[r + 1] {
                    acc += self.vals[idx] * col[self.cols[idx]];
                }
                *slot = acc;
            }
        }
    }
}

/// `dρ/dt = Kρ + (Kρ)† + Σ 2γ AρA†` with `K = −iH − Σ γ A†A`, valid for
/// Hermitian ρ.
#[derive(Debug, Clone)]
struct Generator {
    dim: usize,
    drift: SparseOp,
    jumps: Vec<(SparseOp, f64)>,
}

impl Generator {
    fn new(model: &LindbladModel) -> Self {
        let mut k = model.hamiltonian.clone() * c(0.0, -1.0);
        let mut jumps = Vec::new();
        for term in &model.collapse {
            if term.rate == 0.0 {
                continue;
            }
            let a = &term.operator;
            k -= (a.adjoint() * a).scale(term.rate);
            jumps.push((SparseOp::from_dense(a), 2.0 * term.rate));
        }
        Self {
            dim: model.dim(),
            drift: SparseOp::from_dense(&k),
            jumps,
        }
    }

    fn apply(&self, rho: &ComplexMatrix, out: &mut ComplexMatrix, scratch: &mut ComplexMatrix) {
        self.drift.mul_dense(rho, scratch);
        scratch.adjoint_to(out);
        *out += &*scratch;
        if self.jumps.is_empty() {
            return;
        }
        let mut adj = ComplexMatrix::zeros(self.dim, self.dim);
        for (a, weight) in &self.jumps {
            // A (Aρ)† = AρA† for Hermitian ρ
            a.mul_dense(rho, scratch);
            scratch.adjoint_to(&mut adj);
            a.mul_dense(&adj, scratch);
            out.zip_apply(scratch, |o, h| *o += h * *weight);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 2_000_000,
        }
    }
}

/// States sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

/// Integrates the master equation from `t = 0` and samples the solution at
/// every time in `t_grid` (non-negative, strictly increasing).
pub fn evolve(model: &LindbladModel, rho0: &DensityMatrix, t_grid: &[f64]) -> Result<Trajectory> {
    evolve_with(model, rho0, t_grid, IntegratorOptions::default())
}

pub fn evolve_with(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    opts: IntegratorOptions,
) -> Result<Trajectory> {
    if rho0.dim() != model.dim() {
        return Err(DynamicsError::DimMismatch {
            model: model.dim(),
            operand: rho0.dim(),
        });
    }
    if t_grid.iter().any(|t| !t.is_finite() || *t < 0.0)
        || t_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(DynamicsError::BadGrid);
    }
    let generator = Generator::new(model);
    let mut integrator = DormandPrince::new(&generator, opts);
    let mut state = rho0.matrix().clone();
    let mut t = 0.0;
    let mut states = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        integrator.advance(&mut state, &mut t, target)?;
        states.push(DensityMatrix::from_raw(
            state.clone(),
            rho0.factor_dims().to_vec(),
        ));
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
    })
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b − b̂ (error estimate weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct DormandPrince<'g> {
    generator: &'g Generator,
    opts: IntegratorOptions,
    /// Last accepted (unclipped) step proposal.
    h: Option<f64>,
    k: [ComplexMatrix; 7],
    stage: ComplexMatrix,
    scratch: ComplexMatrix,
    /// FSAL: k[0] holds f(t, y) for the current state.
    fsal_valid: bool,
    steps: usize,
}

impl<'g> DormandPrince<'g> {
    fn new(generator: &'g Generator, opts: IntegratorOptions) -> Self {
        let z = || DMatrix::zeros(generator.dim, generator.dim);
        Self {
            generator,
            opts,
            h: None,
            k: [z(), z(), z(), z(), z(), z(), z()],
            stage: z(),
            scratch: z(),
            fsal_valid: false,
            steps: 0,
        }
    }

    fn eval(&mut self, idx: usize) {
        let (gen, stage, scratch) = (self.generator, &self.stage, &mut self.scratch);
        gen.apply(stage, &mut self.k[idx], scratch);
    }

    fn combine(&mut self, y: &ComplexMatrix, h: f64, coeffs: &[(usize, f64)]) {
        self.stage.copy_from(y);
        for &(i, a) in coeffs {
            let w = h * a;
            self.stage.zip_apply(&self.k[i], |s, k| *s += k * w);
        }
    }

    fn initial_step(&mut self, y: &ComplexMatrix, span: f64) -> f64 {
        let scale = |v: &ComplexMatrix| -> f64 {
            v.iter()
                .zip(y.iter())
                .map(|(d, yy)| d.norm() / (self.opts.atol + self.opts.rtol * yy.norm()))
                .fold(0.0, f64::max)
        };
        let d0 = scale(y);
        let d1 = scale(&self.k[0]);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0.min(span).max(1e-12)
    }

    /// Advances `y` from `*t` to exactly `target`.
    fn advance(&mut self, y: &mut ComplexMatrix, t: &mut f64, target: f64) -> Result<()> {
        if target <= *t {
            return Ok(());
        }
        if !self.fsal_valid {
            self.stage.copy_from(y);
            self.eval(0);
            self.fsal_valid = true;
        }
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(y, target - *t),
        };
        while *t < target {
            self.steps += 1;
            if self.steps > self.opts.max_steps {
                return Err(DynamicsError::TooManySteps(self.opts.max_steps));
            }
            let remaining = target - *t;
            let clipped = h >= remaining;
            let step = if clipped { remaining } else { h };
            if step < 1e-14 * t.abs().max(1.0) {
                return Err(DynamicsError::StepUnderflow { t: *t, h: step });
            }

            self.combine(y, step, &[(0, A21)]);
            self.eval(1);
            self.combine(y, step, &[(0, A31), (1, A32)]);
            self.eval(2);
            self.combine(y, step, &[(0, A41), (1, A42), (2, A43)]);
            self.eval(3);
            self.combine(y, step, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
            self.eval(4);
            self.combine(y, step, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
            self.eval(5);
            self.combine(y, step, &[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)]);
            // stage now holds the 5th-order solution
            self.eval(6);

            // max norm: unaffected by entries the dynamics never populate, so
            // full-space and reduced runs take the same steps
            let mut err: f64 = 0.0;
            for idx in 0..y.len() {
                let e = (self.k[0][idx] * E1
                    + self.k[2][idx] * E3
                    + self.k[3][idx] * E4
                    + self.k[4][idx] * E5
                    + self.k[5][idx] * E6
                    + self.k[6][idx] * E7)
                    * step;
                let sc = self.opts.atol
                    + self.opts.rtol * y[idx].norm().max(self.stage[idx].norm());
                err = err.max(e.norm() / sc);
            }

            if err <= 1.0 {
                *t = if clipped { target } else { *t + step };
                y.copy_from(&self.stage);
                let (rows, cols) = y.shape();
                for i in 0..rows {
                    for j in i..cols {
                        let avg = (y[(i, j)] + y[(j, i)].conj()) * 0.5;
                        y[(i, j)] = avg;
                        y[(j, i)] = avg.conj();
                    }
                }
                self.k.swap(0, 6);
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // a clipped step says nothing about the natural step size
                h = if clipped { h.max(factor * step) } else { factor * step };
            } else {
                h = step * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
        }
        self.h = Some(h);
        Ok(())
    }
}

/// Total excitation number `Σ_k digit_k` as a diagonal.
pub fn excitation_numbers(factor_dims: &[usize]) -> Vec<usize> {
    let dim: usize = factor_dims.iter().product();
    (0..dim)
        .map(|mut idx| {
            let mut total = 0;
            for &d in factor_dims.iter().rev() {
                total += idx % d;
                idx /= d;
            }
            total
        })
        .collect()
}

/// Ordered list of computational-basis indices spanning a subspace of a
/// tensor-product space.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    pub full_dims: Vec<usize>,
    pub basis: Vec<usize>,
}

impl Subspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn full_dim(&self) -> usize {
        self.full_dims.iter().product()
    }

    pub fn restrict(&self, m: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim(), self.dim(), |i, j| m[(self.basis[i], self.basis[j])])
    }

    /// Zero-padded embedding back into the full space.
    pub fn lift(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let n = self.full_dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for (i, &bi) in self.basis.iter().enumerate() {
            for (j, &bj) in self.basis.iter().enumerate() {
                out[(bi, bj)] = m[(i, j)];
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ReducedProblem {
    pub model: LindbladModel,
    pub state: DensityMatrix,
    pub subspace: Subspace,
}

fn commutes_with_number(m: &ComplexMatrix, numbers: &[usize]) -> bool {
    m.iter().enumerate().all(|(flat, v)| {
        // column-major storage
        let (i, j) = (flat % m.nrows(), flat / m.nrows());
        numbers[i] == numbers[j] || v.norm() <= CONSERVATION_TOL
    })
}

/// Whether the Hamiltonian and every collapse operator commute with the
/// total excitation number.
pub fn conserves_excitation(model: &LindbladModel) -> bool {
    let numbers = excitation_numbers(model.factor_dims());
    commutes_with_number(&model.hamiltonian, &numbers)
        && model
            .collapse
            .iter()
            .all(|t| commutes_with_number(&t.operator, &numbers))
}

/// Restricts the model to the excitation sectors `0..=n_max`, where `n_max`
/// is the largest excitation number populated by `rho0`. Requires that the
/// Hamiltonian and every collapse operator commute with the total excitation
/// number, which makes the restriction exact.
pub fn reduce_to_excitation_sectors(
    model: &LindbladModel,
    rho0: &DensityMatrix,
) -> Result<ReducedProblem> {
    if rho0.dim() != model.dim() {
        return Err(DynamicsError::DimMismatch {
            model: model.dim(),
            operand: rho0.dim(),
        });
    }
    if !conserves_excitation(model) {
        return Err(DynamicsError::NotExcitationConserving);
    }
    let numbers = excitation_numbers(model.factor_dims());
    let rho = rho0.matrix();
    let n_max = (0..rho.nrows())
        .filter(|&i| rho[(i, i)].norm() > 0.0)
        .map(|i| numbers[i])
        .max()
        .unwrap_or(0);
    let basis: Vec<usize> = (0..numbers.len()).filter(|&i| numbers[i] <= n_max).collect();
    let subspace = Subspace {
        full_dims: model.factor_dims().to_vec(),
        basis,
    };
    let dim = subspace.dim();
    let reduced = LindbladModel {
        hamiltonian: subspace.restrict(&model.hamiltonian),
        collapse: model
            .collapse
            .iter()
            .map(|t| CollapseTerm {
                operator: subspace.restrict(&t.operator),
                rate: t.rate,
            })
            .collect(),
        factor_dims: vec![dim],
    };
    let state = DensityMatrix::from_raw(subspace.restrict(rho), vec![dim]);
    Ok(ReducedProblem {
        model: reduced,
        state,
        subspace,
    })
}

/// Evolves in the excitation-sector subspace and lifts every sample back to
/// the full space.
pub fn evolve_reduced(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_grid: &[f64],
) -> Result<Trajectory> {
    let reduced = reduce_to_excitation_sectors(model, rho0)?;
    let traj = evolve(&reduced.model, &reduced.state, t_grid)?;
    let states = traj
        .states
        .iter()
        .map(|s| {
            DensityMatrix::from_raw(
                reduced.subspace.lift(s.matrix()),
                model.factor_dims().to_vec(),
            )
        })
        .collect();
    Ok(Trajectory {
        times: traj.times,
        states,
    })
}

/// Expectation value of the total excitation number.
pub fn mean_excitation(rho: &DensityMatrix) -> f64 {
    let numbers = excitation_numbers(rho.factor_dims());
    numbers
        .iter()
        .enumerate()
        .map(|(i, &n)| n as f64 * rho.matrix()[(i, i)].re)
        .sum()
}

/// Largest entry of `[N, op]` for the excitation number `N`; used by tests.
pub fn excitation_commutator_norm(op: &ComplexMatrix, factor_dims: &[usize]) -> f64 {
    let numbers = excitation_numbers(factor_dims);
    let n = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        numbers.len(),
        numbers.iter().map(|&k| c(k as f64, 0.0)),
    ));
    let comm = &n * op - op * &n;
    max_abs_diff(&comm, &ComplexMatrix::zeros(op.nrows(), op.ncols()))
}
