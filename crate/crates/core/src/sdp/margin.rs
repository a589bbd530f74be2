//! Largest uniform eigenvalue margin over an affine family.
//!
//! `max t s.t. A(X) = b, X_b ⪰ t I` for every block. The margin is
//! nonnegative exactly when the affine family meets the PSD cone, which
//! turns feasibility questions into a bounded optimization with a
//! strictly feasible start.

use nalgebra::{DMatrix, DVector};

use super::rank::{constraint_vectors, reduce, Reduction};
use super::{solve, Constraint, SdpOptions, SdpProblem, SdpSolution, SdpStatus, Sense};
use crate::error::{Error, Result};
use crate::linalg::HMat;

#[derive(Clone, Debug)]
pub struct MarginResult {
    /// Optimal margin t*.
    pub margin: f64,
    /// Maximizer with `X_b ⪰ t* I`.
    pub x: Vec<HMat>,
    pub solution: SdpSolution,
}

/// Minimum-norm solution of the equality system, or `None` if inconsistent.
fn least_norm(problem: &SdpProblem, rank_tol: f64) -> Option<Vec<HMat>> {
    let keep = match reduce(problem, rank_tol) {
        Reduction::Independent(k) => k,
        Reduction::Inconsistent(_) => return None,
    };
    let vecs = constraint_vectors(problem);
    let r = keep.len();
    let gram = DMatrix::from_fn(r, r, |i, j| vecs[keep[i]].iter().zip(&vecs[keep[j]]).map(|(a, b)| a * b).sum());
    let rhs = DVector::from_fn(r, |i, _| problem.constraints[keep[i]].rhs);
    let coef = if r == 0 { DVector::zeros(0) } else { gram.lu().solve(&rhs)? };
    let mut y = vec![0.0; problem.constraints.len()];
    for (k, &i) in keep.iter().enumerate() {
        y[i] = coef[k];
    }
    Some(problem.adjoint(&y))
}

/// Solves `max t s.t. <A_i, X> = b_i, X_b - t I ⪰ 0` by substituting
/// `X_b = S_b + t I` and shifting `t` so that it is a nonnegative scalar.
pub fn max_margin(blocks: &[usize], equalities: &[Constraint], opts: &SdpOptions) -> Result<MarginResult> {
    let mut base = SdpProblem::new(Sense::Maximize);
    for &n in blocks {
        base.add_block(n);
    }
    base.constraints = equalities.to_vec();
    base.validate()?;

    let x0 = least_norm(&base, opts.rank_tol)
        .ok_or_else(|| Error::Solver { context: "margin equalities".into(), status: SdpStatus::PrimalInfeasible })?;
    let mut lo = f64::INFINITY;
    for x in &x0 {
        lo = lo.min(x.eig_min()?);
    }
    let t_lo = lo - 1.0;

    let mut p = base.clone();
    let tau = p.add_block(1);
    p.set_scalar_objective(tau, 1.0);
    for con in &mut p.constraints {
        let c: f64 = con.terms.iter().map(|t| t.matrix.trace()).sum();
        con.rhs -= c * t_lo;
        con.terms.push(super::Term { block: tau, matrix: HMat::from_real_diag(&[c]) });
    }
    let sol = solve(&p, opts)?;
    if sol.status != SdpStatus::Optimal {
        return Err(Error::Solver { context: "margin program".into(), status: sol.status });
    }
    let margin = sol.x[tau].get(0, 0).re + t_lo;
    let x = sol.x[..blocks.len()].iter().map(|s| s + &HMat::identity(s.dim()).scale(margin)).collect();
    Ok(MarginResult { margin, x, solution: sol })
}
