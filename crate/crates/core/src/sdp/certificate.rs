//! Independent re-verification of a reported solution against the original
//! (non-standard-form) problem.

use nalgebra::SymmetricEigen;

use super::{RealMatrix, Sense, SdpProblem, SdpSolution};

/// Absolute PSD tolerance on variable blocks and dual slacks.
const BLOCK_PSD_TOL: f64 = 1e-9;
/// Relative tolerance on residuals, constraint values and the gap.
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    BlockNotPsd { block: usize, min_eigenvalue: f64 },
    ConstraintNotPsd { constraint: usize, min_eigenvalue: f64 },
    EqualityResidual { constraint: usize, norm: f64 },
    DualSlackNotPsd { block: usize, min_eigenvalue: f64 },
    DualMultiplierNotPsd { constraint: usize, min_eigenvalue: f64 },
    DualResidual { norm: f64 },
    Complementarity { value: f64 },
    DualityGap { gap: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|p − d| / (1 + |p| + |d|)`.
    pub relative_gap: f64,
    /// `Σ⟨X_j, S_j⟩ + Σ_{PSD k}⟨Y_k, G_k(X)⟩`, relative like the gap.
    pub complementarity: f64,
    pub dual_residual: f64,
    pub violations: Vec<Violation>,
}

impl CertificateReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn min_eig(m: &RealMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Recomputes primal feasibility, dual feasibility and complementary
/// slackness from the solution blocks alone.
pub fn check_certificates(p: &SdpProblem, sol: &SdpSolution) -> CertificateReport {
    let mut violations = Vec::new();
    let x = &sol.blocks;

    for (block, xb) in x.iter().enumerate() {
        let min = min_eig(xb);
        if min < -BLOCK_PSD_TOL {
            violations.push(Violation::BlockNotPsd {
                block,
                min_eigenvalue: min,
            });
        }
    }

    let const_scale = 1.0
        + p.constraints()
            .iter()
            .map(|c| c.constant.norm_squared())
            .sum::<f64>()
            .sqrt();
    let mut values = Vec::with_capacity(p.constraints().len());
    for (k, con) in p.constraints().iter().enumerate() {
        let g = p.constraint_value(k, x);
        match con.sense {
            Sense::Psd => {
                let min = min_eig(&g);
                if min < -RESIDUAL_TOL * const_scale {
                    violations.push(Violation::ConstraintNotPsd {
                        constraint: k,
                        min_eigenvalue: min,
                    });
                }
                let ymin = min_eig(&sol.constraint_duals[k]);
                if ymin < -RESIDUAL_TOL * const_scale {
                    violations.push(Violation::DualMultiplierNotPsd {
                        constraint: k,
                        min_eigenvalue: ymin,
                    });
                }
            }
            Sense::Equality => {
                let norm = g.norm();
                if norm > RESIDUAL_TOL * const_scale {
                    violations.push(Violation::EqualityResidual {
                        constraint: k,
                        norm,
                    });
                }
            }
        }
        values.push(g);
    }

    let implied = p.dual_slack(&sol.constraint_duals);
    let c_scale = 1.0
        + p.objective()
            .iter()
            .map(|c| c.norm_squared())
            .sum::<f64>()
            .sqrt();
    let dual_residual = implied
        .iter()
        .zip(&sol.dual_slacks)
        .map(|(a, b)| (a - b).norm_squared())
        .sum::<f64>()
        .sqrt()
        / c_scale;
    if dual_residual > RESIDUAL_TOL {
        violations.push(Violation::DualResidual {
            norm: dual_residual,
        });
    }
    for (block, sb) in sol.dual_slacks.iter().enumerate() {
        let min = min_eig(sb);
        if min < -BLOCK_PSD_TOL {
            violations.push(Violation::DualSlackNotPsd {
                block,
                min_eigenvalue: min,
            });
        }
    }

    let pobj = p.objective_value(x);
    let dobj = p.dual_objective_value(&sol.constraint_duals);
    let scale = 1.0 + pobj.abs() + dobj.abs();
    let relative_gap = (pobj - dobj).abs() / scale;
    if relative_gap > RESIDUAL_TOL {
        violations.push(Violation::DualityGap { gap: relative_gap });
    }
    let mut comp: f64 = x.iter().zip(&sol.dual_slacks).map(|(a, b)| a.dot(b)).sum();
    for (k, con) in p.constraints().iter().enumerate() {
        if con.sense == Sense::Psd {
            comp += values[k].dot(&sol.constraint_duals[k]);
        }
    }
    let complementarity = comp.abs() / scale;
    if complementarity > RESIDUAL_TOL {
        violations.push(Violation::Complementarity {
            value: complementarity,
        });
    }

    CertificateReport {
        primal_objective: pobj,
        dual_objective: dobj,
        relative_gap,
        complementarity,
        dual_residual,
        violations,
    }
}
