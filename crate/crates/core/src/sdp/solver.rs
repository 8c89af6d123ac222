//! Infeasible primal–dual path-following method with Nesterov–Todd scaling
//! and Mehrotra predictor–corrector steps, dense Schur complement.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::standard::StandardForm;
use super::{RealMatrix, SdpProblem, SdpSolution, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub gap_tol: f64,
    pub feasibility_tol: f64,
    /// Ratio below which a homogeneous ray certifies infeasibility.
    pub infeasibility_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gap_tol: 1e-8,
            feasibility_tol: 1e-8,
            infeasibility_tol: 1e-8,
        }
    }
}

pub fn solve(problem: &SdpProblem) -> SdpSolution {
    solve_with(problem, &SolverOptions::default())
}

pub fn solve_with(problem: &SdpProblem, opts: &SolverOptions) -> SdpSolution {
    let full = StandardForm::from_problem(problem);
    let form = match full.independent_rows() {
        Ok(keep) if keep.len() == full.m() => full,
        Ok(keep) => full.restrict_rows(&keep),
        Err(_) => return infeasible_by_linear_algebra(problem),
    };
    Ipm::new(&form, opts).run(problem)
}

/// Equality rows that contradict each other; no interior-point run needed.
fn infeasible_by_linear_algebra(problem: &SdpProblem) -> SdpSolution {
    let zeros = |dims: &[usize]| dims.iter().map(|&d| RealMatrix::zeros(d, d)).collect::<Vec<_>>();
    SdpSolution {
        status: SolveStatus::Infeasible,
        primal_objective: f64::INFINITY,
        dual_objective: f64::INFINITY,
        gap: f64::INFINITY,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        iterations: 0,
        blocks: zeros(problem.block_dims()),
        dual_slacks: zeros(problem.block_dims()),
        constraint_duals: problem
            .constraints()
            .iter()
            .map(|c| RealMatrix::zeros(c.dim(), c.dim()))
            .collect(),
    }
}

/// NT scaling of one block: `W = G Gᵀ`, `Gᵀ S G = G⁻¹ X G⁻ᵀ = diag(λ)`.
struct Scaling {
    g: RealMatrix,
    g_inv: RealMatrix,
    w: RealMatrix,
    lambda: DVector<f64>,
}

fn nt_scaling(x: &RealMatrix, s: &RealMatrix) -> Option<Scaling> {
    let lx = Cholesky::new(x.clone())?.l();
    let ls = Cholesky::new(s.clone())?.l();
    let svd = (ls.transpose() * &lx).svd(true, true);
    let u = svd.u?;
    let v = svd.v_t?.transpose();
    let lambda = svd.singular_values;
    if lambda.iter().any(|&l| l <= 0.0 || !l.is_finite()) {
        return None;
    }
    let inv_sqrt = lambda.map(|l| 1.0 / l.sqrt());
    let g = &lx * &v * DMatrix::from_diagonal(&inv_sqrt);
    let g_inv = DMatrix::from_diagonal(&inv_sqrt) * u.transpose() * ls.transpose();
    let w = &g * g.transpose();
    Some(Scaling {
        g,
        g_inv,
        w: symmetrize(&w),
        lambda,
    })
}

fn symmetrize(m: &RealMatrix) -> RealMatrix {
    (m + m.transpose()) * 0.5
}

fn inner(a: &[RealMatrix], b: &[RealMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn norm(a: &[RealMatrix]) -> f64 {
    a.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

/// Largest `α ≤ cap` with `X + α ΔX ⪰ 0`, given `X ≻ 0`.
fn max_step(x: &RealMatrix, dx: &RealMatrix, cap: f64) -> f64 {
    let Some(chol) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = chol.l();
    let Some(linv) = l.clone().try_inverse() else {
        return 0.0;
    };
    let scaled = symmetrize(&(&linv * dx * linv.transpose()));
    let min = SymmetricEigen::new(scaled)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        cap
    } else {
        (-1.0 / min).min(cap)
    }
}

struct Ipm<'a> {
    form: &'a StandardForm,
    opts: &'a SolverOptions,
    x: Vec<RealMatrix>,
    s: Vec<RealMatrix>,
    y: DVector<f64>,
    n_total: f64,
    norm_b: f64,
    norm_c: f64,
}

struct Residuals {
    rp: DVector<f64>,
    rd: Vec<RealMatrix>,
    pobj: f64,
    dobj: f64,
    gap: f64,
    pinf: f64,
    dinf: f64,
    complementarity: f64,
}

impl<'a> Ipm<'a> {
    fn new(form: &'a StandardForm, opts: &'a SolverOptions) -> Self {
        let nb = form.dims.len();
        let mut max_a = vec![0.0f64; nb];
        let mut ratio = vec![0.0f64; nb];
        for i in 0..form.m() {
            let norms = form.row_block_norms(i);
            for b in 0..nb {
                max_a[b] = max_a[b].max(norms[b]);
                ratio[b] = ratio[b].max((1.0 + form.b[i].abs()) / (1.0 + norms[b]));
            }
        }
        let mut x = Vec::with_capacity(nb);
        let mut s = Vec::with_capacity(nb);
        for b in 0..nb {
            let n = form.dims[b] as f64;
            let xi = 10f64.max(n.sqrt()).max(n * ratio[b]);
            let eta = 10f64.max(n.sqrt()).max(max_a[b]).max(form.c[b].norm());
            x.push(DMatrix::identity(form.dims[b], form.dims[b]) * xi);
            s.push(DMatrix::identity(form.dims[b], form.dims[b]) * eta);
        }
        Self {
            form,
            opts,
            x,
            s,
            y: DVector::zeros(form.m()),
            n_total: form.dims.iter().sum::<usize>() as f64,
            norm_b: form.b.norm(),
            norm_c: norm(&form.c),
        }
    }

    fn residuals(&self) -> Residuals {
        let f = self.form;
        let rp = &f.b - f.apply(&self.x);
        let aty = f.adjoint(&self.y);
        let rd: Vec<RealMatrix> = (0..f.dims.len())
            .map(|b| &f.c[b] - &aty[b] - &self.s[b])
            .collect();
        let pobj = inner(&f.c, &self.x);
        let dobj = f.b.dot(&self.y);
        let complementarity = inner(&self.x, &self.s);
        let scale = 1.0 + pobj.abs() + dobj.abs();
        Residuals {
            pinf: rp.norm() / (1.0 + self.norm_b),
            dinf: norm(&rd) / (1.0 + self.norm_c),
            gap: complementarity.max((pobj - dobj).abs()) / scale,
            rp,
            rd,
            pobj,
            dobj,
            complementarity,
        }
    }

    fn schur(&self, scalings: &[Scaling]) -> DMatrix<f64> {
        let f = self.form;
        let m = f.m();
        let mut out = DMatrix::zeros(m, m);
        for j in 0..m {
            // W A_j W, block by block
            let mut waw: Vec<Option<RealMatrix>> = vec![None; f.dims.len()];
            for &(b, p, q, v) in &f.rows[j].entries {
                let w = &scalings[b].w;
                let target = waw[b].get_or_insert_with(|| DMatrix::zeros(f.dims[b], f.dims[b]));
                target.ger(v, &w.column(p), &w.column(q), 1.0);
            }
            for i in j..m {
                let val: f64 = f.rows[i]
                    .entries
                    .iter()
                    .map(|&(b, p, q, v)| waw[b].as_ref().map_or(0.0, |t| v * t[(p, q)]))
                    .sum();
                out[(i, j)] = val;
                out[(j, i)] = val;
            }
        }
        out
    }

    /// Solves for `(ΔX, Δy, ΔS)` given the complementarity target `R`
    /// (`ΔX + W ΔS W = R`).
    fn direction(
        &self,
        factor: &SchurFactor,
        scalings: &[Scaling],
        res: &Residuals,
        r: &[RealMatrix],
    ) -> (Vec<RealMatrix>, DVector<f64>, Vec<RealMatrix>) {
        let f = self.form;
        let wrdw: Vec<RealMatrix> = scalings
            .iter()
            .zip(&res.rd)
            .map(|(sc, rd)| &sc.w * rd * &sc.w)
            .collect();
        let rhs = &res.rp - f.apply(r) + f.apply(&wrdw);
        let mut dy = factor.solve(&rhs);
        let build = |dy: &DVector<f64>| {
            let aty = f.adjoint(dy);
            let ds: Vec<RealMatrix> = res.rd.iter().zip(&aty).map(|(rd, a)| rd - a).collect();
            let dx: Vec<RealMatrix> = (0..f.dims.len())
                .map(|b| symmetrize(&(&r[b] - &scalings[b].w * &ds[b] * &scalings[b].w)))
                .collect();
            (dx, ds)
        };
        let (mut dx, mut ds) = build(&dy);
        // iterative refinement against the unfactored operator: A(ΔX) = r_p
        let mut err = &res.rp - f.apply(&dx);
        for _ in 0..3 {
            let correction = factor.solve(&err);
            let trial = &dy + correction;
            let (tx, ts) = build(&trial);
            let trial_err = &res.rp - f.apply(&tx);
            if trial_err.norm() >= err.norm() {
                break;
            }
            (dy, dx, ds, err) = (trial, tx, ts, trial_err);
        }
        (dx, dy, ds)
    }

    fn step_lengths(&self, dx: &[RealMatrix], ds: &[RealMatrix], cap: f64) -> (f64, f64) {
        let ap = self
            .x
            .iter()
            .zip(dx)
            .map(|(x, d)| max_step(x, d, cap))
            .fold(cap, f64::min);
        let ad = self
            .s
            .iter()
            .zip(ds)
            .map(|(s, d)| max_step(s, d, cap))
            .fold(cap, f64::min);
        (ap, ad)
    }

    fn run(mut self, problem: &SdpProblem) -> SdpSolution {
        let mut iterations = 0;
        let status = loop {
            let res = self.residuals();
            if res.gap <= self.opts.gap_tol
                && res.pinf <= self.opts.feasibility_tol
                && res.dinf <= self.opts.feasibility_tol
            {
                break SolveStatus::Optimal;
            }
            if let Some(status) = self.infeasibility(&res) {
                break status;
            }
            if iterations >= self.opts.max_iterations {
                break SolveStatus::MaxIterations;
            }
            iterations += 1;
            if !self.iterate(&res) {
                break SolveStatus::MaxIterations;
            }
        };
        self.finish(problem, status, iterations)
    }

    fn infeasibility(&self, res: &Residuals) -> Option<SolveStatus> {
        let f = self.form;
        let tol = self.opts.infeasibility_tol;
        // dual ray: Aᵀy + S ≈ 0, S ⪰ 0, bᵀy > 0
        if res.dobj > 0.0 {
            let aty = f.adjoint(&self.y);
            let ray: Vec<RealMatrix> = aty.iter().zip(&self.s).map(|(a, s)| a + s).collect();
            if norm(&ray) < tol * res.dobj && res.pinf > self.opts.feasibility_tol {
                return Some(SolveStatus::Infeasible);
            }
        }
        // primal ray: A(X) ≈ 0, X ⪰ 0, ⟨C, X⟩ < 0
        if res.pobj < 0.0 {
            let ax = f.apply(&self.x);
            if ax.norm() < tol * -res.pobj && res.dinf > self.opts.feasibility_tol {
                return Some(SolveStatus::Unbounded);
            }
        }
        None
    }

    /// One predictor–corrector step. Returns false on numerical breakdown.
    fn iterate(&mut self, res: &Residuals) -> bool {
        let nb = self.form.dims.len();
        let mut scalings = Vec::with_capacity(nb);
        for b in 0..nb {
            match nt_scaling(&self.x[b], &self.s[b]) {
                Some(sc) => scalings.push(sc),
                None => return false,
            }
        }
        let Some(factor) = SchurFactor::new(self.schur(&scalings)) else {
            return false;
        };
        let mu = res.complementarity / self.n_total;

        // predictor: R = −X
        let r_pred: Vec<RealMatrix> = self.x.iter().map(|x| -x).collect();
        let (dx_p, _, ds_p) = self.direction(&factor, &scalings, res, &r_pred);
        let (ap, ad) = self.step_lengths(&dx_p, &ds_p, 1.0);
        let mut mu_aff = 0.0;
        for b in 0..nb {
            let xa = &self.x[b] + &dx_p[b] * ap;
            let sa = &self.s[b] + &ds_p[b] * ad;
            mu_aff += xa.dot(&sa);
        }
        mu_aff /= self.n_total;
        let frac = (mu_aff / mu).max(0.0);
        let expon = 3f64.max(3.0 * ap.min(ad).powi(2));
        let sigma = frac.powf(expon).min(1.0);

        // corrector
        let mut r_corr = Vec::with_capacity(nb);
        for b in 0..nb {
            let sc = &scalings[b];
            let dxt = &sc.g_inv * &dx_p[b] * sc.g_inv.transpose();
            let dst = sc.g.transpose() * &ds_p[b] * &sc.g;
            let second = symmetrize(&(&dxt * &dst));
            let n = self.form.dims[b];
            let rc = DMatrix::from_fn(n, n, |i, j| {
                let target = if i == j {
                    sigma * mu - sc.lambda[i] * sc.lambda[i]
                } else {
                    0.0
                };
                2.0 * (target - second[(i, j)]) / (sc.lambda[i] + sc.lambda[j])
            });
            r_corr.push(symmetrize(&(&sc.g * rc * sc.g.transpose())));
        }
        let (dx, dy, ds) = self.direction(&factor, &scalings, res, &r_corr);
        let (ap_max, ad_max) = self.step_lengths(&dx, &ds, f64::INFINITY);
        let step_frac = 0.9 + 0.09 * ap.min(ad);
        let alpha_p = (step_frac * ap_max).min(1.0);
        let alpha_d = (step_frac * ad_max).min(1.0);
        if !(alpha_p > 0.0 && alpha_d > 0.0) {
            return false;
        }
        for b in 0..nb {
            self.x[b] = symmetrize(&(&self.x[b] + &dx[b] * alpha_p));
            self.s[b] = symmetrize(&(&self.s[b] + &ds[b] * alpha_d));
        }
        self.y += dy * alpha_d;
        self.x.iter().chain(&self.s).all(|m| m.iter().all(|v| v.is_finite()))
    }

    fn finish(self, problem: &SdpProblem, status: SolveStatus, iterations: usize) -> SdpSolution {
        let res = self.residuals();
        let nv = self.form.n_var_blocks;
        SdpSolution {
            status,
            primal_objective: res.pobj,
            dual_objective: res.dobj,
            gap: res.gap,
            primal_residual: res.pinf,
            dual_residual: res.dinf,
            iterations,
            blocks: self.x[..nv].to_vec(),
            dual_slacks: self.s[..nv].to_vec(),
            constraint_duals: self.form.constraint_duals(problem, &self.y),
        }
    }
}

/// Cholesky of the Schur complement, with a small diagonal shift retried
/// when the matrix is numerically semidefinite.
struct SchurFactor {
    chol: Option<Cholesky<f64, nalgebra::Dyn>>,
    dim: usize,
}

impl SchurFactor {
    fn new(m: DMatrix<f64>) -> Option<Self> {
        let dim = m.nrows();
        if dim == 0 {
            return Some(Self { chol: None, dim });
        }
        if let Some(chol) = Cholesky::new(m.clone()) {
            return Some(Self {
                chol: Some(chol),
                dim,
            });
        }
        let scale = m.diagonal().amax().max(1.0);
        for shift in [1e-14, 1e-12, 1e-10] {
            let mut shifted = m.clone();
            for i in 0..dim {
                shifted[(i, i)] += shift * scale;
            }
            if let Some(chol) = Cholesky::new(shifted) {
                return Some(Self {
                    chol: Some(chol),
                    dim,
                });
            }
        }
        None
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match &self.chol {
            Some(c) => c.solve(rhs),
            None => DVector::zeros(self.dim),
        }
    }
}
