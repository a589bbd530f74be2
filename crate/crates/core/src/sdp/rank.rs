//! Rank-revealing reduction of the equality system.
//!
//! Constraint matrices are mapped to real vectors with the isometric
//! Hermitian vectorization (diagonal, then `√2 Re`, `√2 Im` of the strict
//! upper triangle) and factored with Householder-free modified Gram-Schmidt
//! using column-norm pivoting, i.e. a QR with column pivoting of `Aᵀ`.

use super::SdpProblem;

pub(crate) enum Reduction {
    /// Indices of a maximal independent subset of the constraints.
    Independent(Vec<usize>),
    /// Dependent constraint with inconsistent right-hand side; `y` satisfies
    /// `Σ y_i A_i ≈ 0`, `b'y = 1`.
    Inconsistent(Vec<f64>),
}

pub(crate) fn svec_offsets(blocks: &[usize]) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(blocks.len());
    let mut total = 0;
    for &n in blocks {
        offsets.push(total);
        total += n * n;
    }
    (offsets, total)
}

/// Isometric real vectorization of all constraint rows.
pub(crate) fn constraint_vectors(problem: &SdpProblem) -> Vec<Vec<f64>> {
    let (offsets, total) = svec_offsets(&problem.blocks);
    let r2 = std::f64::consts::SQRT_2;
    problem
        .constraints
        .iter()
        .map(|c| {
            let mut v = vec![0.0; total];
            for t in &c.terms {
                let n = problem.blocks[t.block];
                let base = offsets[t.block];
                let mut k = base;
                for p in 0..n {
                    v[k] += t.matrix.get(p, p).re;
                    k += 1;
                }
                for p in 0..n {
                    for q in (p + 1)..n {
                        let z = t.matrix.get(p, q);
                        v[k] += r2 * z.re;
                        v[k + 1] += r2 * z.im;
                        k += 2;
                    }
                }
            }
            v
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn reduce(problem: &SdpProblem, rank_tol: f64) -> Reduction {
    let rows = constraint_vectors(problem);
    let rhs: Vec<f64> = problem.constraints.iter().map(|c| c.rhs).collect();
    let m = rows.len();
    if m == 0 {
        return Reduction::Independent(Vec::new());
    }

    let mut work = rows.clone();
    let mut norms: Vec<f64> = work.iter().map(|v| dot(v, v)).collect();
    let scale = norms.iter().cloned().fold(0.0, f64::max).sqrt();
    if scale == 0.0 {
        // all constraints are 0 = b_i
        if let Some(i) = rhs.iter().position(|&b| b.abs() > rank_tol) {
            let mut y = vec![0.0; m];
            y[i] = 1.0 / rhs[i];
            return Reduction::Inconsistent(y);
        }
        return Reduction::Independent(Vec::new());
    }

    let mut pivots: Vec<usize> = Vec::new();
    // r[k][j]: coefficient of q_k in original row j
    let mut r: Vec<Vec<f64>> = Vec::new();
    let mut used = vec![false; m];
    loop {
        let cand = (0..m).filter(|&j| !used[j]).max_by(|&a, &b| norms[a].total_cmp(&norms[b]));
        let Some(p) = cand else { break };
        let nrm = norms[p].max(0.0).sqrt();
        if nrm <= rank_tol * scale {
            break;
        }
        used[p] = true;
        let q: Vec<f64> = work[p].iter().map(|x| x / nrm).collect();
        let mut coeffs = vec![0.0; m];
        coeffs[p] = nrm;
        for j in 0..m {
            if used[j] {
                continue;
            }
            let c = dot(&q, &work[j]);
            coeffs[j] = c;
            for (w, qi) in work[j].iter_mut().zip(&q) {
                *w -= c * qi;
            }
            norms[j] = dot(&work[j], &work[j]);
        }
        r.push(coeffs);
        pivots.push(p);
    }

    // consistency of dropped rows: a_j = Σ_k c_k a_{p_k}, require b_j = Σ c_k b_{p_k}
    let k = pivots.len();
    for j in (0..m).filter(|j| !used[*j]) {
        let mut c = vec![0.0; k];
        for row in (0..k).rev() {
            let mut acc = r[row][j];
            for col in (row + 1)..k {
                acc -= r[row][pivots[col]] * c[col];
            }
            c[row] = acc / r[row][pivots[row]];
        }
        let predicted: f64 = c.iter().zip(&pivots).map(|(ci, &p)| ci * rhs[p]).sum();
        let mismatch = rhs[j] - predicted;
        let magnitude = 1.0 + rhs[j].abs() + c.iter().zip(&pivots).map(|(ci, &p)| (ci * rhs[p]).abs()).sum::<f64>();
        if mismatch.abs() > 1e-9 * magnitude {
            let mut y = vec![0.0; m];
            y[j] = 1.0 / mismatch;
            for (ci, &p) in c.iter().zip(&pivots) {
                y[p] = -ci / mismatch;
            }
            return Reduction::Inconsistent(y);
        }
    }
    pivots.sort_unstable();
    Reduction::Independent(pivots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HMat;
    use crate::sdp::{Constraint, Sense};

    fn two_scalar_problem(rhs: [f64; 3]) -> SdpProblem {
        let mut p = SdpProblem::new(Sense::Minimize);
        let a = p.add_block(1);
        let b = p.add_block(1);
        p.add_constraint(Constraint::new(rhs[0]).with_scalar(a, 1.0));
        p.add_constraint(Constraint::new(rhs[1]).with_scalar(b, 1.0));
        p.add_constraint(Constraint::new(rhs[2]).with_scalar(a, 2.0).with_scalar(b, -1.0));
        p
    }

    #[test]
    fn drops_consistent_dependent_rows() {
        let p = two_scalar_problem([1.0, 2.0, 0.0]);
        match reduce(&p, 1e-10) {
            Reduction::Independent(idx) => assert_eq!(idx.len(), 2),
            Reduction::Inconsistent(_) => panic!("system is consistent"),
        }
    }

    #[test]
    fn inconsistent_rows_give_farkas_combination() {
        let p = two_scalar_problem([1.0, 2.0, 5.0]);
        let Reduction::Inconsistent(y) = reduce(&p, 1e-10) else { panic!("expected inconsistency") };
        let by: f64 = y.iter().zip(&p.constraints).map(|(yi, c)| yi * c.rhs).sum();
        assert!((by - 1.0).abs() < 1e-12);
        let ay = p.adjoint(&y);
        assert!(ay.iter().all(|m| m.max_abs() < 1e-12));
    }

    #[test]
    fn svec_is_isometric() {
        let mut p = SdpProblem::new(Sense::Minimize);
        let b = p.add_block(2);
        let y = crate::linalg::pauli::y();
        let x = crate::linalg::pauli::x();
        p.add_constraint(Constraint::new(0.0).with(b, &y + &x));
        p.add_constraint(Constraint::new(0.0).with(b, HMat::identity(2)));
        let v = constraint_vectors(&p);
        assert!((dot(&v[0], &v[0]) - (&y + &x).inner(&(&y + &x))).abs() < 1e-14);
        assert!(dot(&v[0], &v[1]).abs() < 1e-14);
    }
}
