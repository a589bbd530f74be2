//! POVMs, measurement sets, noise channels, structural transforms and
//! standard constructions.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, isometry_defect, pauli, CMat, HMat, C64};

/// Default tolerance for effect positivity and completeness.
pub const VALIDATION_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPovm")]
pub struct Povm {
    dim: usize,
    effects: Vec<HMat>,
}

#[derive(Deserialize)]
struct RawPovm {
    dim: usize,
    effects: Vec<HMat>,
}

impl TryFrom<RawPovm> for Povm {
    type Error = Error;
    fn try_from(raw: RawPovm) -> Result<Self> {
        let p = Povm::new(raw.effects)?;
        if p.dim != raw.dim {
            return Err(Error::dim(format!("declared dim {} but effects have dim {}", raw.dim, p.dim)));
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// Effect with a negative eigenvalue.
    NotPositive { outcome: usize, min_eig: f64 },
    /// Effect not below the identity.
    AboveIdentity { outcome: usize, max_eig: f64 },
    /// Operator norm of `Σ E_j - I`.
    SumDeviation(f64),
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NotPositive { outcome, min_eig } => {
                write!(f, "effect {outcome} is not positive (min eigenvalue {min_eig:.3e})")
            }
            Violation::AboveIdentity { outcome, max_eig } => {
                write!(f, "effect {outcome} exceeds the identity (max eigenvalue {max_eig:.6})")
            }
            Violation::SumDeviation(dev) => write!(f, "effects sum to I only up to {dev:.3e}"),
        }
    }
}

/// Empty list means valid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Povm {
    /// Structural checks only (nonempty, common dimension); positivity and
    /// completeness are checked by [`Povm::validate`].
    pub fn new(effects: Vec<HMat>) -> Result<Povm> {
        let Some(first) = effects.first() else {
            return Err(Error::InvalidPovm("a POVM needs at least one effect".into()));
        };
        let dim = first.dim();
        if let Some(j) = effects.iter().position(|e| e.dim() != dim) {
            return Err(Error::dim(format!("effect {j} has dim {} but effect 0 has dim {dim}", effects[j].dim())));
        }
        Ok(Povm { dim, effects })
    }

    /// Constructs and requires [`Povm::validate`] to pass.
    pub fn new_valid(effects: Vec<HMat>, tol: f64) -> Result<Povm> {
        let p = Povm::new(effects)?;
        p.ensure_valid(tol)?;
        Ok(p)
    }

    /// Projective measurement in the given orthonormal basis.
    pub fn from_basis(vectors: &[DVector<C64>]) -> Result<Povm> {
        Povm::new(vectors.iter().map(HMat::projector).collect())
    }

    /// Rank-one projectors onto the computational basis of C^d.
    pub fn computational(d: usize) -> Povm {
        let effects = (0..d)
            .map(|i| {
                let mut diag = vec![0.0; d];
                diag[i] = 1.0;
                HMat::from_real_diag(&diag)
            })
            .collect();
        Povm { dim: d, effects }
    }

    /// `k` copies of `I/k`.
    pub fn trivial(d: usize, k: usize) -> Povm {
        Povm { dim: d, effects: vec![HMat::identity(d).scale(1.0 / k as f64); k] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[HMat] {
        &self.effects
    }

    pub fn effect(&self, j: usize) -> &HMat {
        &self.effects[j]
    }

    pub fn validate(&self, tol: f64) -> Result<ValidationReport> {
        let mut violations = Vec::new();
        let id = HMat::identity(self.dim);
        for (j, e) in self.effects.iter().enumerate() {
            let ev = e.eigenvalues()?;
            let (lo, hi) = (ev[0], ev[ev.len() - 1]);
            if lo < -tol {
                violations.push(Violation::NotPositive { outcome: j, min_eig: lo });
            }
            if hi > 1.0 + tol {
                violations.push(Violation::AboveIdentity { outcome: j, max_eig: hi });
            }
        }
        let dev = (&crate::linalg::sum(self.dim, &self.effects) - &id).op_norm()?;
        if dev > tol {
            violations.push(Violation::SumDeviation(dev));
        }
        Ok(ValidationReport { violations })
    }

    pub fn ensure_valid(&self, tol: f64) -> Result<()> {
        let report = self.validate(tol)?;
        match report.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidPovm(v.to_string())),
        }
    }

    /// Merges outcomes group by group; the groups must partition `0..k`.
    pub fn coarse_grain(&self, partition: &[Vec<usize>]) -> Result<Povm> {
        let k = self.outcomes();
        let mut seen = vec![false; k];
        for group in partition {
            if group.is_empty() {
                return Err(Error::arg("partition groups must be nonempty"));
            }
            for &j in group {
                if j >= k {
                    return Err(Error::arg(format!("outcome {j} out of range for {k} outcomes")));
                }
                if std::mem::replace(&mut seen[j], true) {
                    return Err(Error::arg(format!("outcome {j} appears in two groups")));
                }
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(Error::arg(format!("outcome {j} is not covered by the partition")));
        }
        let effects =
            partition.iter().map(|g| crate::linalg::sum(self.dim, g.iter().map(|&j| &self.effects[j]))).collect();
        Ok(Povm { dim: self.dim, effects })
    }

    /// Appends zero effects up to `k_new` outcomes.
    pub fn pad_outcomes(&self, k_new: usize) -> Result<Povm> {
        if k_new < self.outcomes() {
            return Err(Error::arg(format!("cannot pad {} outcomes down to {k_new}", self.outcomes())));
        }
        let mut effects = self.effects.clone();
        effects.resize(k_new, HMat::zeros(self.dim));
        Ok(Povm { dim: self.dim, effects })
    }

    /// `F_j = E_j ⊕ E_{j+1} ⊕ … ⊕ E_{j+k-1}` with indices mod k; every
    /// `F_j` has trace d.
    pub fn cyclic_lift(&self) -> Povm {
        let k = self.outcomes();
        let effects = (0..k)
            .map(|j| {
                let mut acc = self.effects[j].clone();
                for s in 1..k {
                    acc = acc.direct_sum(&self.effects[(j + s) % k]);
                }
                acc
            })
            .collect();
        Povm { dim: k * self.dim, effects }
    }

    /// First `k-1` effects; the last one is implied by completeness.
    pub fn reduced(&self) -> Vec<HMat> {
        self.effects[..self.outcomes() - 1].to_vec()
    }

    /// Inverse of [`Povm::reduced`].
    pub fn from_reduced(dim: usize, reduced: Vec<HMat>) -> Result<Povm> {
        if let Some(j) = reduced.iter().position(|e| e.dim() != dim) {
            return Err(Error::dim(format!("reduced effect {j} has dim {}, expected {dim}", reduced[j].dim())));
        }
        let last = &HMat::identity(dim) - &crate::linalg::sum(dim, &reduced);
        let mut effects = reduced;
        effects.push(last);
        Ok(Povm { dim, effects })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSet")]
pub struct MeasurementSet {
    dim: usize,
    povms: Vec<Povm>,
}

#[derive(Deserialize)]
struct RawSet {
    dim: usize,
    povms: Vec<Povm>,
}

impl TryFrom<RawSet> for MeasurementSet {
    type Error = Error;
    fn try_from(raw: RawSet) -> Result<Self> {
        let s = MeasurementSet::new(raw.povms)?;
        if s.dim != raw.dim {
            return Err(Error::dim(format!("declared dim {} but POVMs have dim {}", raw.dim, s.dim)));
        }
        Ok(s)
    }
}

impl MeasurementSet {
    pub fn new(povms: Vec<Povm>) -> Result<MeasurementSet> {
        let Some(first) = povms.first() else {
            return Err(Error::InvalidPovm("a measurement set needs at least one POVM".into()));
        };
        let dim = first.dim();
        if let Some(i) = povms.iter().position(|p| p.dim() != dim) {
            return Err(Error::dim(format!("POVM {i} has dim {} but POVM 0 has dim {dim}", povms[i].dim())));
        }
        Ok(MeasurementSet { dim, povms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of POVMs g.
    pub fn len(&self) -> usize {
        self.povms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.povms.is_empty()
    }

    pub fn povms(&self) -> &[Povm] {
        &self.povms
    }

    pub fn povm(&self, i: usize) -> &Povm {
        &self.povms[i]
    }

    /// Outcome counts (k_1, …, k_g).
    pub fn shape(&self) -> Vec<usize> {
        self.povms.iter().map(Povm::outcomes).collect()
    }

    pub fn validate(&self, tol: f64) -> Result<Vec<ValidationReport>> {
        self.povms.iter().map(|p| p.validate(tol)).collect()
    }

    pub fn ensure_valid(&self, tol: f64) -> Result<()> {
        for (i, p) in self.povms.iter().enumerate() {
            p.ensure_valid(tol).map_err(|e| match e {
                Error::InvalidPovm(msg) => Error::InvalidPovm(format!("POVM {i}: {msg}")),
                other => other,
            })?;
        }
        Ok(())
    }

    /// Replaces POVM `i`.
    pub fn with_povm(&self, i: usize, p: Povm) -> Result<MeasurementSet> {
        let mut povms = self.povms.clone();
        povms[i] = p;
        MeasurementSet::new(povms)
    }

    /// Maps every effect to `V* E V` for an isometry `V: C^l -> C^d`.
    pub fn compress(&self, v: &CMat) -> Result<MeasurementSet> {
        if v.nrows() != self.dim {
            return Err(Error::dim(format!("isometry has {} rows, set has dim {}", v.nrows(), self.dim)));
        }
        let defect = isometry_defect(v);
        if defect > 1e-9 {
            return Err(Error::NotIsometry(defect));
        }
        let povms = self
            .povms
            .iter()
            .map(|p| Ok(Povm::new(p.effects.iter().map(|e| e.congruence(v)).collect::<Result<_>>()?)?))
            .collect::<Result<_>>()?;
        MeasurementSet::new(povms)
    }

    /// Spectrahedral tuple `B_{i,j} = 2E_j^{(i)} - (2/k_i) I` for `j < k_i`,
    /// concatenated over i.
    pub fn to_spectral_tuple(&self) -> Vec<HMat> {
        let id = HMat::identity(self.dim);
        let mut out = Vec::new();
        for p in &self.povms {
            let k = p.outcomes() as f64;
            for e in p.reduced() {
                out.push(&e.scale(2.0) - &id.scale(2.0 / k));
            }
        }
        out
    }

    /// Inverse of [`MeasurementSet::to_spectral_tuple`]: `E = (B + (2/k)I)/2`
    /// and the last effect completes to the identity.
    pub fn from_spectral_tuple(shape: &[usize], tuple: &[HMat]) -> Result<MeasurementSet> {
        let expected: usize = shape.iter().map(|k| k.saturating_sub(1)).sum();
        if shape.iter().any(|&k| k < 2) {
            return Err(Error::arg("every outcome count must be at least 2"));
        }
        if tuple.len() != expected {
            return Err(Error::dim(format!("shape {shape:?} needs {expected} matrices, got {}", tuple.len())));
        }
        let dim = tuple[0].dim();
        let id = HMat::identity(dim);
        let mut povms = Vec::with_capacity(shape.len());
        let mut it = tuple.iter();
        for &k in shape {
            let reduced: Vec<HMat> =
                it.by_ref().take(k - 1).map(|b| (b + &id.scale(2.0 / k as f64)).scale(0.5)).collect();
            povms.push(Povm::from_reduced(dim, reduced)?);
        }
        MeasurementSet::new(povms)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Mix with `I/k`.
    Balanced,
    /// Mix with `(tr E / d) I`.
    Linear,
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "balanced" => Ok(NoiseKind::Balanced),
            "linear" => Ok(NoiseKind::Linear),
            other => Err(Error::arg(format!("unknown noise model `{other}` (expected balanced or linear)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub weights: Vec<f64>,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::arg(format!("noise weight {w} outside [0, 1]")));
        }
        Ok(NoiseModel { kind, weights })
    }

    pub fn balanced(weights: Vec<f64>) -> Result<Self> {
        Self::new(NoiseKind::Balanced, weights)
    }

    pub fn linear(weights: Vec<f64>) -> Result<Self> {
        Self::new(NoiseKind::Linear, weights)
    }
}

/// The effect that noise mixes in at weight `1 - s`.
pub fn noise_base(kind: NoiseKind, e: &HMat, k: usize) -> HMat {
    let d = e.dim();
    match kind {
        NoiseKind::Balanced => HMat::identity(d).scale(1.0 / k as f64),
        NoiseKind::Linear => HMat::identity(d).scale(e.trace() / d as f64),
    }
}

pub fn apply_noise(set: &MeasurementSet, model: &NoiseModel) -> Result<MeasurementSet> {
    if model.weights.len() != set.len() {
        return Err(Error::dim(format!("{} noise weights for {} POVMs", model.weights.len(), set.len())));
    }
    if let Some(w) = model.weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
        return Err(Error::arg(format!("noise weight {w} outside [0, 1]")));
    }
    let povms = set
        .povms
        .iter()
        .zip(&model.weights)
        .map(|(p, &s)| {
            let k = p.outcomes();
            let effects =
                p.effects.iter().map(|e| &e.scale(s) + &noise_base(model.kind, e, k).scale(1.0 - s)).collect();
            Povm { dim: p.dim, effects }
        })
        .collect();
    MeasurementSet::new(povms)
}

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|p| p * p <= n).all(|p| n % p != 0)
}

/// Orthonormal bases, pairwise mutually unbiased. `count = 2` works for any
/// d (computational + Fourier); up to `d + 1` bases for prime d.
pub fn mub_bases(d: usize, count: usize) -> Result<Vec<Vec<DVector<C64>>>> {
    if d == 0 || count == 0 {
        return Err(Error::arg("MUB construction needs d >= 1 and count >= 1"));
    }
    let s = 1.0 / (d as f64).sqrt();
    let computational: Vec<DVector<C64>> =
        (0..d).map(|b| DVector::from_fn(d, |l, _| if l == b { c64(1.0, 0.0) } else { c64(0.0, 0.0) })).collect();
    if d == 2 {
        if count > 3 {
            return Err(Error::arg("at most 3 mutually unbiased bases exist for d = 2"));
        }
        let x = vec![DVector::from_vec(vec![c64(s, 0.0), c64(s, 0.0)]), DVector::from_vec(vec![c64(s, 0.0), c64(-s, 0.0)])];
        let y = vec![DVector::from_vec(vec![c64(s, 0.0), c64(0.0, s)]), DVector::from_vec(vec![c64(s, 0.0), c64(0.0, -s)])];
        return Ok([computational, x, y].into_iter().take(count).collect());
    }
    let omega = |e: usize| C64::from_polar(s, 2.0 * PI * (e % d) as f64 / d as f64);
    let quadratic = |a: usize| -> Vec<DVector<C64>> {
        (0..d).map(|b| DVector::from_fn(d, |l, _| omega(a * l * l + b * l))).collect()
    };
    if count <= 2 {
        return Ok(std::iter::once(computational).chain((count == 2).then(|| quadratic(0))).collect());
    }
    if !is_prime(d) {
        return Err(Error::arg(format!("more than 2 mutually unbiased bases are only constructed for prime d, got {d}")));
    }
    if count > d + 1 {
        return Err(Error::arg(format!("at most {} mutually unbiased bases exist for d = {d}", d + 1)));
    }
    Ok(std::iter::once(computational).chain((0..count - 1).map(quadratic)).collect())
}

pub fn mub_povms(d: usize, count: usize) -> Result<MeasurementSet> {
    let povms = mub_bases(d, count)?.iter().map(|b| Povm::from_basis(b)).collect::<Result<_>>()?;
    MeasurementSet::new(povms)
}

/// `X_j = cos(jπ/g) σ_X + sin(jπ/g) σ_Y` for j = 1..g.
pub fn planar_directions(g: usize) -> Vec<HMat> {
    (1..=g)
        .map(|j| {
            let th = j as f64 * PI / g as f64;
            &pauli::x().scale(th.cos()) + &pauli::y().scale(th.sin())
        })
        .collect()
}

/// Binary qubit POVMs `{(I + t_j X_j)/2, (I - t_j X_j)/2}`.
pub fn planar_qubit_set(g: usize, t: &[f64]) -> Result<MeasurementSet> {
    if t.len() != g {
        return Err(Error::dim(format!("{} lengths for g = {g}", t.len())));
    }
    if let Some(x) = t.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::arg(format!("Bloch length {x} outside [0, 1]")));
    }
    let id = HMat::identity(2);
    let povms = planar_directions(g)
        .iter()
        .zip(t)
        .map(|(x, &tj)| {
            let e = (&id + &x.scale(tj)).scale(0.5);
            let f = &id - &e;
            Povm { dim: 2, effects: vec![e, f] }
        })
        .collect();
    MeasurementSet::new(povms)
}

fn ginibre(d: usize, rng: &mut ChaCha8Rng) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c64(s * re, s * im)
    })
}

/// `E_j = S^{-1/2} G_j G_j* S^{-1/2}` with Ginibre `G_j` and `S = Σ G_j G_j*`.
pub fn random_povm(d: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Povm> {
    if d == 0 || k == 0 {
        return Err(Error::arg("random POVM needs d >= 1 and k >= 1"));
    }
    let w: Vec<HMat> = (0..k)
        .map(|_| {
            let g = ginibre(d, rng);
            HMat::from_cmat_unchecked(&g * g.adjoint())
        })
        .collect();
    let s = crate::linalg::sum(d, &w);
    let eig = s.eig()?;
    if eig.values[0] <= 0.0 {
        return Err(Error::InvalidPovm("singular Ginibre sum".into()));
    }
    let inv_sqrt = eig.map(|x| 1.0 / x.sqrt());
    let effects = w.iter().map(|wj| wj.congruence(inv_sqrt.as_cmat())).collect::<Result<_>>()?;
    Povm::new(effects)
}

pub fn random_set_with(d: usize, shape: &[usize], rng: &mut ChaCha8Rng) -> Result<MeasurementSet> {
    let povms = shape.iter().map(|&k| random_povm(d, k, rng)).collect::<Result<_>>()?;
    MeasurementSet::new(povms)
}

/// Reproducible random set: the same seed gives bit-identical effects.
pub fn random_set(d: usize, shape: &[usize], seed: u64) -> Result<MeasurementSet> {
    random_set_with(d, shape, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Haar-like random isometry `C^l -> C^d` from the QR of a Ginibre matrix.
pub fn random_isometry(d: usize, l: usize, rng: &mut ChaCha8Rng) -> Result<CMat> {
    if l > d || l == 0 {
        return Err(Error::arg(format!("no isometry from C^{l} into C^{d}")));
    }
    let g = ginibre(d, rng).columns(0, l).into_owned();
    Ok(g.qr().q())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_basis() -> Povm {
        Povm::computational(2)
    }

    fn close(a: &HMat, b: &HMat, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn validate_examples() {
        assert!(z_basis().validate(VALIDATION_TOL).unwrap().is_valid());
        let e = HMat::from_real_diag(&[1.2, 0.0]);
        let bad = Povm::new(vec![e.clone(), &HMat::identity(2) - &e]).unwrap();
        let r = bad.validate(VALIDATION_TOL).unwrap();
        assert!(r.violations.iter().any(|v| matches!(v, Violation::AboveIdentity { outcome: 0, .. })));
        assert!(r.violations.iter().any(|v| matches!(v, Violation::NotPositive { outcome: 1, .. })));
        for d in 1..4 {
            assert!(Povm::trivial(d, 3).validate(VALIDATION_TOL).unwrap().is_valid());
        }
    }

    #[test]
    fn noise_examples() {
        let set = MeasurementSet::new(vec![z_basis()]).unwrap();
        let half = apply_noise(&set, &NoiseModel::balanced(vec![0.5]).unwrap()).unwrap();
        assert!(close(half.povm(0).effect(0), &HMat::from_real_diag(&[0.75, 0.25]), 1e-15));
        assert!(close(half.povm(0).effect(1), &HMat::from_real_diag(&[0.25, 0.75]), 1e-15));
        let same = apply_noise(&set, &NoiseModel::balanced(vec![1.0]).unwrap()).unwrap();
        assert_eq!(same, set);
        let triv = apply_noise(&set, &NoiseModel::balanced(vec![0.0]).unwrap()).unwrap();
        assert_eq!(triv.povm(0), &Povm::trivial(2, 2));
        assert!(NoiseModel::balanced(vec![1.5]).is_err());
    }

    #[test]
    fn coarse_grain_examples() {
        let p = Povm::computational(3);
        let c = p.coarse_grain(&[vec![0, 1], vec![2]]).unwrap();
        assert!(close(c.effect(0), &HMat::from_real_diag(&[1.0, 1.0, 0.0]), 0.0));
        assert!(close(c.effect(1), &HMat::from_real_diag(&[0.0, 0.0, 1.0]), 0.0));
        assert_eq!(p.coarse_grain(&[vec![0], vec![1], vec![2]]).unwrap(), p);
        let all = p.coarse_grain(&[vec![0, 1, 2]]).unwrap();
        assert!(close(all.effect(0), &HMat::identity(3), 0.0));
        assert!(p.coarse_grain(&[vec![0, 1], vec![1, 2]]).is_err());
        assert!(p.coarse_grain(&[vec![0, 1]]).is_err());
    }

    #[test]
    fn pad_and_lift_examples() {
        let padded = z_basis().pad_outcomes(3).unwrap();
        assert_eq!(padded.effect(2), &HMat::zeros(2));
        assert!(padded.validate(VALIDATION_TOL).unwrap().is_valid());
        assert_eq!(z_basis().pad_outcomes(2).unwrap(), z_basis());
        assert!(z_basis().pad_outcomes(1).is_err());

        let lift = z_basis().cyclic_lift();
        assert_eq!(lift.effect(0), &HMat::from_real_diag(&[1.0, 0.0, 0.0, 1.0]));
        assert_eq!(lift.effect(1), &HMat::from_real_diag(&[0.0, 1.0, 1.0, 0.0]));
        let t = Povm::trivial(2, 3).cyclic_lift();
        assert_eq!(t.dim(), 6);
        for e in t.effects() {
            assert!(close(e, &HMat::identity(6).scale(1.0 / 3.0), 1e-15));
        }
    }

    #[test]
    fn compress_examples() {
        let set = MeasurementSet::new(vec![z_basis()]).unwrap();
        assert_eq!(set.compress(&CMat::identity(2, 2)).unwrap(), set);
        let v = CMat::from_fn(2, 1, |i, _| if i == 0 { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
        let c = set.compress(&v).unwrap();
        assert_eq!(c.dim(), 1);
        assert_eq!(c.povm(0).effect(0).get(0, 0).re, 1.0);
        assert_eq!(c.povm(0).effect(1).get(0, 0).re, 0.0);
        let not_iso = CMat::from_fn(2, 1, |_, _| c64(1.0, 0.0));
        assert!(matches!(set.compress(&not_iso), Err(Error::NotIsometry(_))));
    }

    #[test]
    fn mub_examples() {
        let s = mub_povms(2, 2).unwrap();
        assert_eq!(s.povm(0), &z_basis());
        let x_plus = (&HMat::identity(2) + &pauli::x()).scale(0.5);
        assert!(close(s.povm(1).effect(0), &x_plus, 1e-15));
        for (d, count) in [(3, 2), (3, 4), (5, 6), (4, 2), (2, 3)] {
            let bases = mub_bases(d, count).unwrap();
            assert_eq!(bases.len(), count);
            for (i, a) in bases.iter().enumerate() {
                for (j, b) in bases.iter().enumerate() {
                    for (p, u) in a.iter().enumerate() {
                        for (q, v) in b.iter().enumerate() {
                            let ov = u.dotc(v).norm_sqr();
                            let expected = if i == j { if p == q { 1.0 } else { 0.0 } } else { 1.0 / d as f64 };
                            assert!((ov - expected).abs() < 1e-10, "d={d} bases {i},{j}");
                        }
                    }
                }
            }
        }
        assert!(mub_bases(4, 3).is_err());
        assert!(mub_bases(3, 5).is_err());
    }

    #[test]
    fn planar_examples() {
        let s = planar_qubit_set(2, &[1.0, 1.0]).unwrap();
        let id = HMat::identity(2);
        assert!(close(s.povm(0).effect(0), &(&id + &pauli::y()).scale(0.5), 1e-15));
        assert!(close(s.povm(1).effect(0), &(&id - &pauli::x()).scale(0.5), 1e-15));
        let t = planar_qubit_set(3, &[0.0; 3]).unwrap();
        assert!(t.povms().iter().all(|p| p == &Povm::trivial(2, 2)));
        let trine = planar_qubit_set(3, &[1.0; 3]).unwrap();
        for p in trine.povms() {
            for e in p.effects() {
                let sq = HMat::from_cmat_unchecked(e.as_cmat() * e.as_cmat());
                assert!(close(&sq, e, 1e-12));
                assert!((e.trace() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_is_reproducible_and_valid() {
        let a = random_set(3, &[2, 3], 7).unwrap();
        let b = random_set(3, &[2, 3], 7).unwrap();
        assert_eq!(crate::io::to_canonical_json(&a).unwrap(), crate::io::to_canonical_json(&b).unwrap());
        assert!(a.ensure_valid(VALIDATION_TOL).is_ok());
        let c = random_set(3, &[2, 3], 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn spectral_tuple_examples() {
        let set = MeasurementSet::new(vec![z_basis()]).unwrap();
        let t = set.to_spectral_tuple();
        assert_eq!(t.len(), 1);
        assert!(close(&t[0], &pauli::z(), 1e-15));
        let triv = MeasurementSet::new(vec![Povm::trivial(3, 3)]).unwrap();
        assert!(triv.to_spectral_tuple().iter().all(|b| b.max_abs() < 1e-15));
        assert!(MeasurementSet::from_spectral_tuple(&[2, 2], &t).is_err());
    }

    #[test]
    fn json_round_trip_is_byte_stable() {
        let s = random_set(2, &[2, 3], 1).unwrap();
        let text = crate::io::to_canonical_json(&s).unwrap();
        let back: MeasurementSet = crate::io::from_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(crate::io::to_canonical_json(&back).unwrap(), text);
    }

    #[test]
    fn json_dim_mismatch_is_rejected() {
        let text = r#"{"dim": 3, "effects": [[[[1,0]]]]}"#;
        assert!(crate::io::from_json::<Povm>(text).is_err());
    }
}
