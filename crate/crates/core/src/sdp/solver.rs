//! Infeasible-start primal-dual interior point method.
//!
//! Internally every problem is a minimization `min <C,X> s.t. A(X) = b, X ⪰ 0`
//! with dual `max b'y s.t. Z = C - A*(y) ⪰ 0`. Search directions use the
//! HKM scaling: `M Δy = r_p - A(G - X R_d Z⁻¹)`, `ΔZ = R_d - A*(Δy)`,
//! `ΔX = sym(G - X ΔZ Z⁻¹)` with `M_ij = Re tr(A_i X A_j Z⁻¹)`.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::rank::{reduce, Reduction};
use super::{FarkasRay, SdpOptions, SdpProblem, SdpSolution, SdpStatus, Sense};
use crate::error::Result;
use crate::linalg::{c64, CMat, HMat, C64};

/// Nonzero entries `(row, col, value)` of one constraint on one block.
struct SparseTerm {
    block: usize,
    entries: Vec<(usize, usize, C64)>,
}

struct Data {
    blocks: Vec<usize>,
    c: Vec<CMat>,
    cons: Vec<Vec<SparseTerm>>,
    b: Vec<f64>,
    /// For each block, the constraints touching it as (constraint, term index).
    by_block: Vec<Vec<(usize, usize)>>,
}

impl Data {
    fn new(problem: &SdpProblem, keep: &[usize], sign: f64) -> Data {
        let blocks = problem.blocks.clone();
        let c = problem
            .objective
            .iter()
            .zip(&blocks)
            .map(|(c, &n)| match c {
                Some(c) => c.as_cmat() * c64(sign, 0.0),
                None => CMat::zeros(n, n),
            })
            .collect();
        let mut cons = Vec::with_capacity(keep.len());
        let mut b = Vec::with_capacity(keep.len());
        for &i in keep {
            let con = &problem.constraints[i];
            // merge terms on the same block
            let mut dense: Vec<Option<CMat>> = vec![None; blocks.len()];
            for t in &con.terms {
                let slot = dense[t.block].get_or_insert_with(|| CMat::zeros(blocks[t.block], blocks[t.block]));
                *slot += t.matrix.as_cmat();
            }
            let mut terms = Vec::new();
            for (block, m) in dense.into_iter().enumerate() {
                let Some(m) = m else { continue };
                let n = blocks[block];
                let mut entries = Vec::new();
                for col in 0..n {
                    for row in 0..n {
                        let v = m[(row, col)];
                        if v.re != 0.0 || v.im != 0.0 {
                            entries.push((row, col, v));
                        }
                    }
                }
                if !entries.is_empty() {
                    terms.push(SparseTerm { block, entries });
                }
            }
            cons.push(terms);
            b.push(con.rhs);
        }
        let mut by_block = vec![Vec::new(); blocks.len()];
        for (i, terms) in cons.iter().enumerate() {
            for (k, t) in terms.iter().enumerate() {
                by_block[t.block].push((i, k));
            }
        }
        Data { blocks, c, cons, b, by_block }
    }

    fn m(&self) -> usize {
        self.b.len()
    }

    /// A(W)_i = Σ Re tr(A_i W); valid for non-Hermitian W too.
    fn apply(&self, w: &[CMat]) -> Vec<f64> {
        self.cons
            .iter()
            .map(|terms| terms.iter().map(|t| sparse_inner(&t.entries, &w[t.block])).sum())
            .collect()
    }

    fn adjoint(&self, y: &[f64]) -> Vec<CMat> {
        let mut out: Vec<CMat> = self.blocks.iter().map(|&n| CMat::zeros(n, n)).collect();
        for (terms, &yi) in self.cons.iter().zip(y) {
            for t in terms {
                let o = &mut out[t.block];
                for &(r, c, v) in &t.entries {
                    o[(r, c)] += v * yi;
                }
            }
        }
        out
    }

    fn schur(&self, x: &[CMat], zinv: &[CMat]) -> DMatrix<f64> {
        let m = self.m();
        let mut mat = DMatrix::<f64>::zeros(m, m);
        for (b, list) in self.by_block.iter().enumerate() {
            let n = self.blocks[b];
            for (pos, &(j, kj)) in list.iter().enumerate() {
                // T = X A_j Z⁻¹
                let mut xa = CMat::zeros(n, n);
                for &(p, c, v) in &self.cons[j][kj].entries {
                    for r in 0..n {
                        xa[(r, c)] += x[b][(r, p)] * v;
                    }
                }
                let t = &xa * &zinv[b];
                for &(i, ki) in &list[..=pos] {
                    mat[(i, j)] += sparse_inner(&self.cons[i][ki].entries, &t);
                }
            }
        }
        // by_block lists are sorted by constraint index, so only i <= j was filled
        for i in 0..m {
            for j in (i + 1)..m {
                mat[(j, i)] = mat[(i, j)];
            }
        }
        mat
    }
}

/// Re tr(A W) for sparse Hermitian A given by its entries.
fn sparse_inner(entries: &[(usize, usize, C64)], w: &CMat) -> f64 {
    entries.iter().map(|&(r, c, v)| (v * w[(c, r)]).re).sum()
}

fn inner(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p.conj() * q).re).sum::<f64>()).sum()
}

fn herm(m: &CMat) -> CMat {
    (m + m.adjoint()) * c64(0.5, 0.0)
}

fn max_abs(mats: &[CMat]) -> f64 {
    mats.iter().flat_map(|m| m.iter()).map(|z| z.norm()).fold(0.0, f64::max)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Largest α with `X + α ΔX ⪰ 0`, given the Cholesky factor of X.
fn max_step(chol: &Cholesky<C64, nalgebra::Dyn>, dx: &CMat) -> Option<f64> {
    let l = chol.l();
    let y = l.solve_lower_triangular(dx)?;
    let k = l.solve_lower_triangular(&y.adjoint())?;
    let lmin = HMat::from_cmat_unchecked(k).eig_min().ok()?;
    Some(if lmin >= 0.0 { f64::INFINITY } else { -1.0 / lmin })
}

fn step_length(chols: &[Cholesky<C64, nalgebra::Dyn>], d: &[CMat]) -> Option<f64> {
    let mut alpha = f64::INFINITY;
    for (ch, dm) in chols.iter().zip(d) {
        alpha = alpha.min(max_step(ch, dm)?);
    }
    Some(alpha)
}

fn cholesky_all(m: &[CMat]) -> Option<Vec<Cholesky<C64, nalgebra::Dyn>>> {
    m.iter().map(|x| Cholesky::new(herm(x))).collect()
}

enum Linear {
    Chol(Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    Empty,
}

impl Linear {
    fn factor(mut m: DMatrix<f64>) -> Option<Linear> {
        if m.nrows() == 0 {
            return Some(Linear::Empty);
        }
        if let Some(ch) = Cholesky::new(m.clone()) {
            return Some(Linear::Chol(ch));
        }
        let scale = m.diagonal().iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
        for i in 0..m.nrows() {
            m[(i, i)] += 1e-13 * scale;
        }
        if let Some(ch) = Cholesky::new(m.clone()) {
            return Some(Linear::Chol(ch));
        }
        let lu = m.lu();
        if lu.is_invertible() {
            Some(Linear::Lu(lu))
        } else {
            None
        }
    }

    fn solve(&self, rhs: Vec<f64>) -> Option<Vec<f64>> {
        let v = DVector::from_vec(rhs);
        let out = match self {
            Linear::Chol(ch) => ch.solve(&v),
            Linear::Lu(lu) => lu.solve(&v)?,
            Linear::Empty => v,
        };
        if out.iter().all(|x| x.is_finite()) {
            Some(out.iter().copied().collect())
        } else {
            None
        }
    }
}

struct Iterate {
    x: Vec<CMat>,
    y: Vec<f64>,
    z: Vec<CMat>,
}

/// Verifies a Farkas ray against the original problem data.
fn verify_farkas(problem: &SdpProblem, y: &[f64], tol: f64) -> Option<FarkasRay> {
    let by: f64 = problem.constraints.iter().zip(y).map(|(c, yi)| c.rhs * yi).sum();
    if !(by > 0.0) || !by.is_finite() {
        return None;
    }
    let y: Vec<f64> = y.iter().map(|v| v / by).collect();
    let mut max_eig = f64::NEG_INFINITY;
    for m in problem.adjoint(&y) {
        max_eig = max_eig.max(m.eig_max().ok()?);
    }
    (max_eig <= tol).then_some(FarkasRay { y, max_eig })
}

/// Solves `problem`. Non-optimal outcomes are reported through
/// [`SdpSolution::status`]; `Err` is reserved for malformed input.
pub fn solve(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let m_all = problem.constraints.len();
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let zero_blocks = || -> Vec<HMat> { problem.blocks.iter().map(|&n| HMat::zeros(n)).collect() };

    let keep = match reduce(problem, opts.rank_tol) {
        Reduction::Independent(k) => k,
        Reduction::Inconsistent(y) => {
            let farkas = verify_farkas(problem, &y, opts.infeas_tol.max(1e-7));
            let status = if farkas.is_some() { SdpStatus::PrimalInfeasible } else { SdpStatus::NumericalFailure };
            return Ok(SdpSolution {
                status,
                x: zero_blocks(),
                y: farkas.as_ref().map(|f| f.y.clone()).unwrap_or(y),
                z: zero_blocks(),
                primal_value: f64::NAN,
                dual_value: f64::NAN,
                gap: f64::NAN,
                primal_residual: f64::NAN,
                dual_residual: f64::NAN,
                iterations: 0,
                farkas,
                primal_ray: None,
            });
        }
    };
    let data = Data::new(problem, &keep, sign);
    let n_total = problem.total_dim() as f64;
    let b_scale = 1.0 + inf_norm(&data.b);
    let c_scale = 1.0 + max_abs(&data.c);

    // SDPT3-style starting point
    let mut it = {
        let mut x = Vec::new();
        let mut z = Vec::new();
        for (bi, &n) in data.blocks.iter().enumerate() {
            let nf = n as f64;
            let mut xi = 10.0f64.max(nf.sqrt());
            let mut eta = 10.0f64.max(nf.sqrt());
            for &(ci, k) in &data.by_block[bi] {
                let fro = data.cons[ci][k].entries.iter().map(|e| e.2.norm_sqr()).sum::<f64>().sqrt();
                xi = xi.max(nf * (1.0 + data.b[ci].abs()) / (1.0 + fro));
                eta = eta.max(fro);
            }
            eta = eta.max(data.c[bi].norm());
            x.push(CMat::identity(n, n) * c64(xi, 0.0));
            z.push(CMat::identity(n, n) * c64(eta, 0.0));
        }
        Iterate { x, y: vec![0.0; data.m()], z }
    };

    let mut status = SdpStatus::MaxIterations;
    let mut iterations = 0;
    let mut farkas = None;
    let mut primal_ray = None;
    let mut stalls = 0;

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let ax = data.apply(&it.x);
        let rp: Vec<f64> = data.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = data.adjoint(&it.y);
        let rd: Vec<CMat> = (0..data.blocks.len()).map(|k| &data.c[k] - &it.z[k] - &aty[k]).collect();
        let pobj = inner(&data.c, &it.x);
        let dobj: f64 = data.b.iter().zip(&it.y).map(|(b, y)| b * y).sum();
        let xz = inner(&it.x, &it.z);
        let mu = xz / n_total;
        let pinf = inf_norm(&rp);
        let dinf = max_abs(&rd);

        if pinf <= opts.feas_tol * b_scale
            && dinf <= opts.feas_tol * c_scale
            && (pobj - dobj).abs() <= opts.gap_tol * (1.0 + pobj.abs())
            && xz <= opts.gap_tol * (1.0 + pobj.abs())
        {
            status = SdpStatus::Optimal;
            break;
        }

        // primal infeasibility: dual objective growing along a ray
        if dobj > 0.0 {
            let mut y_full = vec![0.0; m_all];
            for (k, &i) in keep.iter().enumerate() {
                y_full[i] = it.y[k];
            }
            if let Some(f) = verify_farkas(problem, &y_full, opts.infeas_tol) {
                farkas = Some(f);
                status = SdpStatus::PrimalInfeasible;
                break;
            }
        }
        // dual infeasibility: primal objective decreasing along a ray
        if pobj < -1.0 {
            let s = 1.0 / -pobj;
            let ray: Vec<CMat> = it.x.iter().map(|x| x * c64(s, 0.0)).collect();
            let ar: Vec<f64> = data.apply(&ray);
            if inf_norm(&ar) <= opts.infeas_tol {
                primal_ray = Some(ray.into_iter().map(HMat::from_cmat_unchecked).collect());
                status = SdpStatus::Unbounded;
                break;
            }
        }
        if iter == opts.max_iter {
            break;
        }

        let Some(step) = newton_step(&data, &it, &rp, &rd, mu, opts) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let (dx, dy, dz, ap, ad) = step;
        if ap.max(ad) < 1e-12 {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
        for k in 0..it.x.len() {
            it.x[k] = herm(&(&it.x[k] + &dx[k] * c64(ap, 0.0)));
            it.z[k] = herm(&(&it.z[k] + &dz[k] * c64(ad, 0.0)));
        }
        for (y, d) in it.y.iter_mut().zip(&dy) {
            *y += ad * d;
        }
    }

    let x: Vec<HMat> = it.x.into_iter().map(HMat::from_cmat_unchecked).collect();
    let z: Vec<HMat> = it.z.into_iter().map(HMat::from_cmat_unchecked).collect();
    let mut y = vec![0.0; m_all];
    for (k, &i) in keep.iter().enumerate() {
        y[i] = sign * it.y[k];
    }
    if let Some(f) = &farkas {
        y = f.y.clone();
    }
    let primal_value = problem.objective_value(&x);
    let dual_value: f64 = problem.constraints.iter().zip(&y).map(|(c, yi)| c.rhs * yi).sum();
    let primal_residual = problem.primal_residual(&x);
    // dual residual in the reported convention: Z = sign (A*(y) - C) up to sign conventions
    let aty = problem.adjoint(&y);
    let dual_residual = (0..problem.blocks.len())
        .map(|k| {
            let c = problem.objective[k].clone().unwrap_or_else(|| HMat::zeros(problem.blocks[k]));
            let r = match problem.sense {
                Sense::Minimize => &(&c - &aty[k]) - &z[k],
                Sense::Maximize => &(&aty[k] - &c) - &z[k],
            };
            r.max_abs()
        })
        .fold(0.0, f64::max);
    let gap = sign * (primal_value - dual_value);
    Ok(SdpSolution {
        status,
        x,
        y,
        z,
        primal_value,
        dual_value,
        gap,
        primal_residual,
        dual_residual,
        iterations,
        farkas,
        primal_ray,
    })
}

type Step = (Vec<CMat>, Vec<f64>, Vec<CMat>, f64, f64);

fn newton_step(data: &Data, it: &Iterate, rp: &[f64], rd: &[CMat], mu: f64, opts: &SdpOptions) -> Option<Step> {
    let xch = cholesky_all(&it.x)?;
    let zch = cholesky_all(&it.z)?;
    let zinv: Vec<CMat> = zch.iter().map(|c| c.inverse()).collect();
    let schur = data.schur(&it.x, &zinv);
    let lin = Linear::factor(schur)?;
    let n_total: f64 = data.blocks.iter().sum::<usize>() as f64;

    let direction = |g: &[CMat]| -> Option<(Vec<CMat>, Vec<f64>, Vec<CMat>)> {
        let w: Vec<CMat> = (0..g.len()).map(|k| &g[k] - &it.x[k] * &rd[k] * &zinv[k]).collect();
        let aw = data.apply(&w);
        let rhs: Vec<f64> = rp.iter().zip(&aw).map(|(r, a)| r - a).collect();
        let dy = lin.solve(rhs)?;
        let atdy = data.adjoint(&dy);
        let dz: Vec<CMat> = (0..g.len()).map(|k| &rd[k] - &atdy[k]).collect();
        let dx: Vec<CMat> = (0..g.len()).map(|k| herm(&(&g[k] - &it.x[k] * &dz[k] * &zinv[k]))).collect();
        Some((dx, dy, dz))
    };

    // predictor
    let g: Vec<CMat> = it.x.iter().map(|x| -x).collect();
    let (dx_a, _, dz_a) = direction(&g)?;
    let ap = step_length(&xch, &dx_a)?.min(1.0);
    let ad = step_length(&zch, &dz_a)?.min(1.0);
    let xa: Vec<CMat> = (0..g.len()).map(|k| &it.x[k] + &dx_a[k] * c64(ap, 0.0)).collect();
    let za: Vec<CMat> = (0..g.len()).map(|k| &it.z[k] + &dz_a[k] * c64(ad, 0.0)).collect();
    let mu_aff = inner(&xa, &za) / n_total;
    let expon = (3.0 * ap.min(ad).powi(2)).max(1.0);
    let sigma = (mu_aff / mu).max(0.0).powf(expon).min(1.0);

    // corrector
    let g: Vec<CMat> = (0..it.x.len())
        .map(|k| &zinv[k] * c64(sigma * mu, 0.0) - &it.x[k] - &dx_a[k] * &dz_a[k] * &zinv[k])
        .collect();
    let (dx, dy, dz) = direction(&g)?;
    let tau = opts.step_fraction;
    let ap = (tau * step_length(&xch, &dx)?).min(1.0);
    let ad = (tau * step_length(&zch, &dz)?).min(1.0);
    if !ap.is_finite() || !ad.is_finite() {
        return None;
    }
    Some((dx, dy, dz, ap, ad))
}
