//! Joint measurability as a semidefinite program, noise robustness, and
//! Zhu's incompatibility criterion.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{HMat, C64};
use crate::povm::{apply_noise, noise_base, MeasurementSet, NoiseKind, NoiseModel, Povm, VALIDATION_TOL};
use crate::sdp::{self, hermitian_basis, Constraint, SdpOptions, SdpProblem, Sense, SolveStats};

/// Default threshold on the feasibility margin.
pub const COMPAT_TOL: f64 = 1e-7;

/// Row-major linearization of multi-indices in `[k_1] x … x [k_g]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointPovmIndex {
    shape: Vec<usize>,
    strides: Vec<usize>,
}

impl JointPovmIndex {
    pub fn new(shape: &[usize]) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::arg(format!("invalid outcome shape {shape:?}")));
        }
        let mut strides = vec![1; shape.len()];
        for i in (0..shape.len() - 1).rev() {
            strides[i] = strides[i + 1] * shape[i + 1];
        }
        Ok(JointPovmIndex { shape: shape.to_vec(), strides })
    }

    pub fn size(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn linearize(&self, eta: &[usize]) -> usize {
        debug_assert!(eta.iter().zip(&self.shape).all(|(e, k)| e < k));
        eta.iter().zip(&self.strides).map(|(e, s)| e * s).sum()
    }

    pub fn delinearize(&self, mut flat: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|s| {
                let e = flat / s;
                flat %= s;
                e
            })
            .collect()
    }

    /// Outcome of POVM `i` in the joint outcome `flat`.
    pub fn component(&self, flat: usize, i: usize) -> usize {
        (flat / self.strides[i]) % self.shape[i]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CompatVerdict {
    pub compatible: bool,
    /// Largest t with G_η ⪰ t I over all joint POVMs with the given marginals.
    pub margin: f64,
    /// Joint POVM over the linearized multi-index, on success.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint: Option<Povm>,
    /// Largest Frobenius deviation of the joint's marginals from the inputs.
    pub marginal_error: f64,
    /// Dual multipliers of the margin program, on failure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Vec<f64>>,
    pub stats: SolveStats,
}

/// Marginal `Σ_{η: η_i = j} G_η` for every `j`.
pub fn marginals(joint: &Povm, shape: &[usize], i: usize) -> Result<Vec<HMat>> {
    let idx = JointPovmIndex::new(shape)?;
    if joint.outcomes() != idx.size() {
        return Err(Error::dim(format!("joint POVM has {} outcomes, shape needs {}", joint.outcomes(), idx.size())));
    }
    let d = joint.dim();
    let mut out = vec![HMat::zeros(d); shape[i]];
    for (flat, g) in joint.effects().iter().enumerate() {
        out[idx.component(flat, i)] += g;
    }
    Ok(out)
}

/// Largest Frobenius deviation between the marginals of `joint` and `set`.
pub fn marginal_error(joint: &Povm, set: &MeasurementSet) -> Result<f64> {
    let shape = set.shape();
    let mut worst = 0.0f64;
    for (i, p) in set.povms().iter().enumerate() {
        for (m, e) in marginals(joint, &shape, i)?.iter().zip(p.effects()) {
            worst = worst.max((m - e).frobenius_norm());
        }
    }
    Ok(worst)
}

/// Adds `Σ_{η ∈ etas} G_η (+ extra) = rhs` entrywise, one scalar equation per
/// Hermitian basis element.
fn add_matrix_equation(
    out: &mut Vec<Constraint>,
    basis: &[HMat],
    blocks: impl Iterator<Item = usize> + Clone,
    extra: Option<(usize, &HMat)>,
    rhs: &HMat,
) {
    for b in basis {
        let mut c = Constraint::new(b.inner(rhs));
        for blk in blocks.clone() {
            c = c.with(blk, b.clone());
        }
        if let Some((blk, m)) = extra {
            let coef = b.inner(m);
            if coef != 0.0 {
                c = c.with_scalar(blk, coef);
            }
        }
        out.push(c);
    }
}

/// Decides joint measurability by maximizing the smallest eigenvalue over
/// all candidate joint POVMs. `tol` thresholds the margin.
pub fn joint_feasibility(set: &MeasurementSet, tol: f64, opts: &SdpOptions) -> Result<CompatVerdict> {
    set.ensure_valid(VALIDATION_TOL)?;
    let d = set.dim();
    let shape = set.shape();
    let idx = JointPovmIndex::new(&shape)?;
    let n = idx.size();
    let basis = hermitian_basis(d);

    let mut cons = Vec::new();
    add_matrix_equation(&mut cons, &basis, 0..n, None, &HMat::identity(d));
    for (i, p) in set.povms().iter().enumerate() {
        for j in 0..shape[i] - 1 {
            let idx = &idx;
            let etas = (0..n).filter(move |&f| idx.component(f, i) == j);
            add_matrix_equation(&mut cons, &basis, etas, None, p.effect(j));
        }
    }
    let blocks = vec![d; n];
    let res = sdp::max_margin(&blocks, &cons, opts).map_err(|e| with_context(e, "joint POVM feasibility"))?;
    let compatible = res.margin >= -tol;
    let stats = res.solution.stats();
    if compatible {
        let joint = Povm::new(res.x)?;
        let marginal_error = marginal_error(&joint, set)?;
        Ok(CompatVerdict { compatible, margin: res.margin, joint: Some(joint), marginal_error, certificate: None, stats })
    } else {
        Ok(CompatVerdict {
            compatible,
            margin: res.margin,
            joint: None,
            marginal_error: f64::NAN,
            certificate: Some(res.solution.y),
            stats,
        })
    }
}

fn with_context(e: Error, context: &str) -> Error {
    match e {
        Error::Solver { status, context: inner } => Error::Solver { context: format!("{context} ({inner})"), status },
        other => other,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Robustness {
    /// Optimal scale t* along the direction.
    pub t: f64,
    /// Noise weights `t* · a`.
    pub weights: Vec<f64>,
    pub stats: SolveStats,
}

fn check_direction(set: &MeasurementSet, direction: &[f64]) -> Result<f64> {
    if direction.len() != set.len() {
        return Err(Error::dim(format!("direction has {} entries for {} POVMs", direction.len(), set.len())));
    }
    if direction.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::arg("direction entries must lie in [0, 1]"));
    }
    let amax = direction.iter().cloned().fold(0.0, f64::max);
    if amax <= 0.0 {
        return Err(Error::arg("direction must have a positive entry"));
    }
    Ok(amax)
}

/// Largest `t ∈ [0, 1/max a]` such that the set with noise weights `t·a`
/// is jointly measurable, as a single SDP in which t enters the marginal
/// constraints affinely.
pub fn robustness(set: &MeasurementSet, kind: NoiseKind, direction: &[f64], opts: &SdpOptions) -> Result<Robustness> {
    set.ensure_valid(VALIDATION_TOL)?;
    let amax = check_direction(set, direction)?;
    // Under linear noise a zero effect stays zero, which forces every joint
    // outcome containing it to vanish; drop such outcomes up front so the
    // program keeps a strictly feasible point.
    let reduced: Vec<Povm> = set
        .povms()
        .iter()
        .map(|p| match kind {
            NoiseKind::Linear => {
                let kept: Vec<HMat> = p.effects().iter().filter(|e| e.max_abs() > 1e-12).cloned().collect();
                Povm::new(kept)
            }
            NoiseKind::Balanced => Ok(p.clone()),
        })
        .collect::<Result<_>>()?;
    let set_r = MeasurementSet::new(reduced)?;

    let d = set_r.dim();
    let shape = set_r.shape();
    let idx = JointPovmIndex::new(&shape)?;
    let n = idx.size();
    let basis = hermitian_basis(d);

    let mut p = SdpProblem::new(Sense::Maximize);
    for _ in 0..n {
        p.add_block(d);
    }
    let t = p.add_block(1);
    let u = p.add_block(1);
    p.set_scalar_objective(t, 1.0);

    let mut cons = Vec::new();
    add_matrix_equation(&mut cons, &basis, 0..n, None, &HMat::identity(d));
    for (i, pov) in set_r.povms().iter().enumerate() {
        let k = shape[i];
        for j in 0..k - 1 {
            let e = pov.effect(j);
            let base = noise_base(kind, e, k);
            let shift = (e - &base).scale(-direction[i]);
            let idx = &idx;
            let etas = (0..n).filter(move |&f| idx.component(f, i) == j);
            add_matrix_equation(&mut cons, &basis, etas, Some((t, &shift)), &base);
        }
    }
    cons.push(Constraint::new(1.0 / amax).with_scalar(t, 1.0).with_scalar(u, 1.0));
    p.constraints = cons;

    let sol = sdp::solve(&p, opts)?.require_optimal("robustness program")?;
    let tv = sol.x[t].get(0, 0).re.clamp(0.0, 1.0 / amax);
    Ok(Robustness { t: tv, weights: direction.iter().map(|a| (a * tv).min(1.0)).collect(), stats: sol.stats() })
}

/// Independent bisection on [`joint_feasibility`]; slow, used to cross-check
/// [`robustness`].
pub fn robustness_by_bisection(
    set: &MeasurementSet,
    kind: NoiseKind,
    direction: &[f64],
    precision: f64,
    opts: &SdpOptions,
) -> Result<f64> {
    let amax = check_direction(set, direction)?;
    let feasible = |t: f64| -> Result<bool> {
        let w: Vec<f64> = direction.iter().map(|a| (a * t).min(1.0)).collect();
        let noisy = apply_noise(set, &NoiseModel::new(kind, w)?)?;
        Ok(joint_feasibility(&noisy, 0.0, opts)?.compatible)
    };
    let (mut lo, mut hi) = (0.0, 1.0 / amax);
    if feasible(hi)? {
        return Ok(hi);
    }
    while hi - lo > precision {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `Ḡ(A) = |A°⟩⟨A°| / tr A` with `A° = A - tr(A) I/d`; `Ḡ(0) = 0`.
pub fn gbar(e: &HMat) -> Result<HMat> {
    let d = e.dim();
    let tr = e.trace();
    if tr < -1e-12 {
        return Err(Error::arg(format!("Zhu operator needs nonnegative trace, got {tr}")));
    }
    if tr <= 1e-14 {
        return Ok(HMat::zeros(d * d));
    }
    let centered = e - &HMat::identity(d).scale(tr / d as f64);
    let v = centered.vectorize();
    let outer = &v * v.adjoint() * C64::new(1.0 / tr, 0.0);
    Ok(HMat::from_cmat_unchecked(outer))
}

/// `Σ_j Ḡ(E_j)`.
pub fn gbar_povm(p: &Povm) -> Result<HMat> {
    let d = p.dim();
    let mut acc = HMat::zeros(d * d);
    for e in p.effects() {
        acc += &gbar(e)?;
    }
    Ok(acc)
}

#[derive(Clone, Debug, Serialize)]
pub struct ZhuResult {
    /// `min tr H` over `H ⪰ Ḡ(E^{(i)})` for all i.
    pub value: f64,
    /// `1 + value > d + tol`; one-sided.
    pub incompatible_certified: bool,
    pub stats: SolveStats,
}

pub fn zhu_check(set: &MeasurementSet, tol: f64, opts: &SdpOptions) -> Result<ZhuResult> {
    set.ensure_valid(VALIDATION_TOL)?;
    let d = set.dim();
    let dd = d * d;
    let gbars: Vec<HMat> = set.povms().iter().map(gbar_povm).collect::<Result<_>>()?;
    let basis = hermitian_basis(dd);

    let mut p = SdpProblem::new(Sense::Minimize);
    let h = p.add_block(dd);
    p.set_objective(h, HMat::identity(dd));
    for g in &gbars {
        let s = p.add_block(dd);
        for b in &basis {
            p.add_constraint(Constraint::new(b.inner(g)).with(h, b.clone()).with(s, b.scale(-1.0)));
        }
    }
    let sol = sdp::solve(&p, opts)?.require_optimal("Zhu program")?;
    let value = sol.primal_value;
    Ok(ZhuResult { value, incompatible_certified: 1.0 + value > d as f64 + tol, stats: sol.stats() })
}
