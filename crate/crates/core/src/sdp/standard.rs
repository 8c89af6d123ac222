//! Conversion to the standard primal form
//!
//! ```text
//! min ⟨C, X⟩   s.t.   ⟨A_i, X⟩ = b_i,   X ⪰ 0   (block diagonal)
//! ```
//!
//! Each PSD constraint gets its own slack block `Z_k` with `G_k(X) − Z_k = 0`;
//! every matrix constraint contributes one scalar row per upper-triangular
//! entry.

use nalgebra::DVector;

use super::{RealMatrix, Sense, SdpProblem, Term};

/// One entry `(block, row, col, value)` of a constraint matrix. Symmetric
/// pairs are stored explicitly.
pub(crate) type Entry = (usize, usize, usize, f64);

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub entries: Vec<Entry>,
}

impl Row {
    pub fn apply(&self, x: &[RealMatrix]) -> f64 {
        self.entries.iter().map(|&(b, p, q, v)| v * x[b][(p, q)]).sum()
    }
}

/// Where a scalar row came from: constraint `k`, entry `(p, q)` with `p ≤ q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct RowOrigin {
    pub constraint: usize,
    pub p: usize,
    pub q: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct StandardForm {
    pub dims: Vec<usize>,
    pub n_var_blocks: usize,
    pub c: Vec<RealMatrix>,
    pub rows: Vec<Row>,
    pub b: DVector<f64>,
    pub origin: Vec<RowOrigin>,
}

impl StandardForm {
    pub fn from_problem(p: &SdpProblem) -> Self {
        let mut dims = p.block_dims().to_vec();
        let n_var_blocks = dims.len();
        let mut slack_of = Vec::with_capacity(p.constraints().len());
        for con in p.constraints() {
            if con.sense == Sense::Psd {
                slack_of.push(Some(dims.len()));
                dims.push(con.dim());
            } else {
                slack_of.push(None);
            }
        }
        let mut c = p.objective().to_vec();
        for &d in &dims[n_var_blocks..] {
            c.push(RealMatrix::zeros(d, d));
        }

        let mut rows = Vec::new();
        let mut b = Vec::new();
        let mut origin = Vec::new();
        for (k, con) in p.constraints().iter().enumerate() {
            let n = con.dim();
            for q in 0..n {
                for pp in 0..=q {
                    let mut entries = Vec::new();
                    let push_sym = |block: usize, coef: f64, entries: &mut Vec<Entry>| {
                        if pp == q {
                            entries.push((block, pp, pp, coef));
                        } else {
                            entries.push((block, pp, q, 0.5 * coef));
                            entries.push((block, q, pp, 0.5 * coef));
                        }
                    };
                    for term in &con.terms {
                        match *term {
                            Term::Scaled { block, coef } => push_sym(block, coef, &mut entries),
                            Term::Trace { block, coef } => {
                                if pp == q {
                                    for r in 0..dims[block] {
                                        entries.push((block, r, r, coef));
                                    }
                                }
                            }
                        }
                    }
                    if let Some(s) = slack_of[k] {
                        push_sym(s, -1.0, &mut entries);
                    }
                    rows.push(Row { entries });
                    b.push(-con.constant[(pp, q)]);
                    origin.push(RowOrigin {
                        constraint: k,
                        p: pp,
                        q,
                    });
                }
            }
        }
        Self {
            dims,
            n_var_blocks,
            c,
            rows,
            b: DVector::from_vec(b),
            origin,
        }
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// `A(X)`.
    pub fn apply(&self, x: &[RealMatrix]) -> DVector<f64> {
        DVector::from_iterator(self.m(), self.rows.iter().map(|r| r.apply(x)))
    }

    /// `Aᵀ(y) = Σ_i y_i A_i`.
    pub fn adjoint(&self, y: &DVector<f64>) -> Vec<RealMatrix> {
        let mut out: Vec<RealMatrix> = self.dims.iter().map(|&d| RealMatrix::zeros(d, d)).collect();
        for (row, &yi) in self.rows.iter().zip(y.iter()) {
            for &(b, p, q, v) in &row.entries {
                out[b][(p, q)] += yi * v;
            }
        }
        out
    }

    /// Frobenius norm of row `i` restricted to each block, summed in squares.
    pub fn row_block_norms(&self, i: usize) -> Vec<f64> {
        let mut acc = vec![0.0; self.dims.len()];
        // entries can repeat the same position; accumulate densely per block
        let mut dense: Vec<Option<RealMatrix>> = vec![None; self.dims.len()];
        for &(b, p, q, v) in &self.rows[i].entries {
            let d = self.dims[b];
            dense[b].get_or_insert_with(|| RealMatrix::zeros(d, d))[(p, q)] += v;
        }
        for (b, m) in dense.into_iter().enumerate() {
            if let Some(m) = m {
                acc[b] = m.norm();
            }
        }
        acc
    }

    /// Dense vector of row `i` over all matrix positions, for rank tests.
    fn dense_row(&self, i: usize, offsets: &[usize], len: usize) -> DVector<f64> {
        let mut v = DVector::zeros(len);
        for &(b, p, q, val) in &self.rows[i].entries {
            v[offsets[b] + p * self.dims[b] + q] += val;
        }
        v
    }

    /// Drops rows that are linear combinations of earlier rows. Returns the
    /// kept row indices, or `Err(row)` if a dependent row contradicts the
    /// ones it depends on.
    pub fn independent_rows(&self) -> Result<Vec<usize>, usize> {
        let mut offsets = Vec::with_capacity(self.dims.len());
        let mut len = 0;
        for &d in &self.dims {
            offsets.push(len);
            len += d * d;
        }
        let mut basis: Vec<(DVector<f64>, f64)> = Vec::new();
        let mut kept = Vec::new();
        for i in 0..self.m() {
            let orig = self.dense_row(i, &offsets, len);
            let norm0 = orig.norm();
            let mut r = orig;
            let mut rb = self.b[i];
            // two passes of modified Gram–Schmidt
            for _ in 0..2 {
                for (q, qb) in &basis {
                    let coef = r.dot(q);
                    r.axpy(-coef, q, 1.0);
                    rb -= coef * qb;
                }
            }
            let norm = r.norm();
            if norm <= 1e-10 * norm0.max(1e-300) || norm0 == 0.0 {
                if rb.abs() > 1e-9 * (1.0 + self.b[i].abs()) {
                    return Err(i);
                }
                continue;
            }
            basis.push((r / norm, rb / norm));
            kept.push(i);
        }
        Ok(kept)
    }

    pub fn restrict_rows(&self, keep: &[usize]) -> Self {
        let mut out = self.clone();
        out.rows = keep.iter().map(|&i| self.rows[i].clone()).collect();
        out.b = DVector::from_iterator(keep.len(), keep.iter().map(|&i| self.b[i]));
        out.origin = keep.iter().map(|&i| self.origin[i]).collect();
        out
    }

    /// Constraint multipliers `Y_k` built from the row multipliers `y`.
    pub fn constraint_duals(&self, problem: &SdpProblem, y: &DVector<f64>) -> Vec<RealMatrix> {
        let mut out: Vec<RealMatrix> = problem
            .constraints()
            .iter()
            .map(|c| RealMatrix::zeros(c.dim(), c.dim()))
            .collect();
        for (o, &yi) in self.origin.iter().zip(y.iter()) {
            let m = &mut out[o.constraint];
            if o.p == o.q {
                m[(o.p, o.p)] = yi;
            } else {
                m[(o.p, o.q)] = 0.5 * yi;
                m[(o.q, o.p)] = 0.5 * yi;
            }
        }
        out
    }
}
