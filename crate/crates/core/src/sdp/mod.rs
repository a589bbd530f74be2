//! Small dense semidefinite programs over block-diagonal Hermitian matrices.
//!
//! Problems are stated in equality standard form
//!
//! ```text
//!   minimize / maximize   Σ_b <C_b, X_b>
//!   subject to            Σ_b <A_{i,b}, X_b> = b_i      (i = 1..m)
//!                         X_b ⪰ 0
//! ```
//!
//! with the real inner product `<A, B> = Re tr(A* B)`. Scalar variables are
//! 1x1 blocks. The solver is an infeasible-start primal-dual path-following
//! method (HKM direction, Mehrotra predictor-corrector), see [`solve`].

mod margin;
mod rank;
mod solver;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::HMat;

pub use margin::{max_margin, MarginResult};
pub use solver::solve;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Optimal,
    PrimalInfeasible,
    Unbounded,
    MaxIterations,
    NumericalFailure,
}

/// One term `<A_{i,b}, X_b>` of a linear constraint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub block: usize,
    pub matrix: HMat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<Term>,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(rhs: f64) -> Self {
        Constraint { terms: Vec::new(), rhs }
    }

    pub fn with(mut self, block: usize, matrix: HMat) -> Self {
        self.terms.push(Term { block, matrix });
        self
    }

    /// Adds `coef * x` for a 1x1 block `x`.
    pub fn with_scalar(self, block: usize, coef: f64) -> Self {
        self.with(block, HMat::from_real_diag(&[coef]))
    }

    /// <A_i, X> for a full block-diagonal X.
    pub fn eval(&self, x: &[HMat]) -> f64 {
        self.terms.iter().map(|t| t.matrix.inner(&x[t.block])).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub sense: Sense,
    /// Cost matrix per block; `None` means zero.
    pub objective: Vec<Option<HMat>>,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new(sense: Sense) -> Self {
        SdpProblem { blocks: Vec::new(), sense, objective: Vec::new(), constraints: Vec::new() }
    }

    /// Appends a PSD block of the given size and returns its index.
    pub fn add_block(&mut self, dim: usize) -> usize {
        self.blocks.push(dim);
        self.objective.push(None);
        self.blocks.len() - 1
    }

    pub fn set_objective(&mut self, block: usize, cost: HMat) {
        self.objective[block] = Some(cost);
    }

    pub fn set_scalar_objective(&mut self, block: usize, coef: f64) {
        self.set_objective(block, HMat::from_real_diag(&[coef]));
    }

    pub fn add_constraint(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::dim("SDP needs at least one block"));
        }
        if self.blocks.iter().any(|&n| n == 0) {
            return Err(Error::dim("SDP block dimensions must be positive"));
        }
        if self.objective.len() != self.blocks.len() {
            return Err(Error::dim("one objective entry per block required"));
        }
        for (b, c) in self.objective.iter().enumerate() {
            if let Some(c) = c {
                if c.dim() != self.blocks[b] {
                    return Err(Error::dim(format!(
                        "objective of block {b} has dim {} but block has dim {}",
                        c.dim(),
                        self.blocks[b]
                    )));
                }
            }
        }
        for (i, con) in self.constraints.iter().enumerate() {
            if !con.rhs.is_finite() {
                return Err(Error::arg(format!("constraint {i} has non-finite rhs")));
            }
            for t in &con.terms {
                if t.block >= self.blocks.len() {
                    return Err(Error::dim(format!("constraint {i} references missing block {}", t.block)));
                }
                if t.matrix.dim() != self.blocks[t.block] {
                    return Err(Error::dim(format!(
                        "constraint {i} term on block {} has dim {} (block dim {})",
                        t.block,
                        t.matrix.dim(),
                        self.blocks[t.block]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Objective value <C, X> in the problem's own sense.
    pub fn objective_value(&self, x: &[HMat]) -> f64 {
        self.objective
            .iter()
            .zip(x)
            .filter_map(|(c, xb)| c.as_ref().map(|c| c.inner(xb)))
            .sum()
    }

    /// Σ_i y_i A_{i,b} for every block.
    pub fn adjoint(&self, y: &[f64]) -> Vec<HMat> {
        let mut out: Vec<HMat> = self.blocks.iter().map(|&n| HMat::zeros(n)).collect();
        for (con, &yi) in self.constraints.iter().zip(y) {
            if yi == 0.0 {
                continue;
            }
            for t in &con.terms {
                out[t.block] += &t.matrix.scale(yi);
            }
        }
        out
    }

    /// Largest |<A_i, X> - b_i|.
    pub fn primal_residual(&self, x: &[HMat]) -> f64 {
        self.constraints.iter().map(|c| (c.eval(x) - c.rhs).abs()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        crate::io::to_canonical_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        crate::io::from_json(text)
    }
}

#[derive(Clone, Debug)]
pub struct SdpOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub psd_tol: f64,
    pub max_iter: usize,
    /// Fraction-to-boundary step factor.
    pub step_fraction: f64,
    /// Relative tolerance for discarding linearly dependent constraints.
    pub rank_tol: f64,
    /// Tolerance on infeasibility/unboundedness rays.
    pub infeas_tol: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            psd_tol: 1e-9,
            max_iter: 200,
            step_fraction: 0.98,
            rank_tol: 1e-10,
            infeas_tol: 1e-8,
        }
    }
}

impl SdpOptions {
    /// Same tolerances for gap and feasibility.
    pub fn with_tol(tol: f64) -> Self {
        SdpOptions { gap_tol: tol, feas_tol: tol, ..Default::default() }
    }
}

/// Certificate that `{A(X) = b, X ⪰ 0}` is empty: `Σ y_i A_i ⪯ 0` and `b'y = 1`.
#[derive(Clone, Debug)]
pub struct FarkasRay {
    pub y: Vec<f64>,
    /// Largest eigenvalue of `Σ y_i A_i` over all blocks, recomputed from data.
    pub max_eig: f64,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: Vec<HMat>,
    pub y: Vec<f64>,
    pub z: Vec<HMat>,
    /// <C, X> in the problem's sense.
    pub primal_value: f64,
    /// b'y; the dual of a maximization is `min b'y s.t. Σ y_i A_i - C ⪰ 0`.
    pub dual_value: f64,
    /// Duality gap, nonnegative at exact optimality for either sense.
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub farkas: Option<FarkasRay>,
    /// Primal ray `X ⪰ 0` with `A(X) = 0` improving the objective, on `Unbounded`.
    pub primal_ray: Option<Vec<HMat>>,
}

/// Accuracy summary of a solve, kept by higher-level results.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn stats(&self) -> SolveStats {
        SolveStats {
            gap: self.gap,
            primal_residual: self.primal_residual,
            dual_residual: self.dual_residual,
            iterations: self.iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }

    /// Turns non-optimal statuses into an error carrying `context`.
    pub fn require_optimal(self, context: &str) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Solver { context: context.to_string(), status: self.status })
        }
    }
}

/// Orthonormal basis of the d x d Hermitian matrices under `Re tr(A* B)`:
/// diagonal units, then symmetric and antisymmetric off-diagonal pairs.
pub fn hermitian_basis(d: usize) -> Vec<HMat> {
    use crate::linalg::{c64, CMat};
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for p in 0..d {
        let mut m = CMat::zeros(d, d);
        m[(p, p)] = c64(1.0, 0.0);
        out.push(HMat::from_cmat_unchecked(m));
    }
    for p in 0..d {
        for q in (p + 1)..d {
            let mut m = CMat::zeros(d, d);
            m[(p, q)] = c64(s, 0.0);
            m[(q, p)] = c64(s, 0.0);
            out.push(HMat::from_cmat_unchecked(m));
            let mut m = CMat::zeros(d, d);
            m[(p, q)] = c64(0.0, -s);
            m[(q, p)] = c64(0.0, s);
            out.push(HMat::from_cmat_unchecked(m));
        }
    }
    out
}
