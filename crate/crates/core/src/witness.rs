//! Incompatibility witnesses: exact vertex checks, the cube/cuboid SDP
//! relaxation and its three-way classification, and certification of
//! concrete measurement sets.

use serde::{Deserialize, Serialize};

use crate::compat::JointPovmIndex;
use crate::error::{Error, Result};
use crate::linalg::HMat;
use crate::povm::{planar_directions, MeasurementSet};
use crate::sdp::{self, hermitian_basis, Constraint, SdpOptions, SdpProblem, Sense};
use crate::spectra::jewel_membership;

/// Slack allowed when checking that a candidate is a witness.
pub const WITNESS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCandidate")]
pub struct WitnessCandidate {
    shape: Vec<usize>,
    n: usize,
    blocks: Vec<HMat>,
}

#[derive(Deserialize)]
struct RawCandidate {
    shape: Vec<usize>,
    n: usize,
    blocks: Vec<HMat>,
}

impl TryFrom<RawCandidate> for WitnessCandidate {
    type Error = Error;
    fn try_from(raw: RawCandidate) -> Result<Self> {
        let w = WitnessCandidate::new(raw.shape, raw.blocks)?;
        if w.n != raw.n {
            return Err(Error::dim(format!("declared n = {} but blocks have dim {}", raw.n, w.n)));
        }
        Ok(w)
    }
}

impl WitnessCandidate {
    pub fn new(shape: Vec<usize>, blocks: Vec<HMat>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&k| k < 2) {
            return Err(Error::arg(format!("invalid witness shape {shape:?}")));
        }
        let expected: usize = shape.iter().map(|k| k - 1).sum();
        if blocks.len() != expected {
            return Err(Error::dim(format!("shape {shape:?} needs {expected} blocks, got {}", blocks.len())));
        }
        let n = blocks[0].dim();
        if let Some(i) = blocks.iter().position(|b| b.dim() != n) {
            return Err(Error::dim(format!("block {i} has dim {}, expected {n}", blocks[i].dim())));
        }
        Ok(WitnessCandidate { shape, n, blocks })
    }

    /// Shape `(2, …, 2)` with one block per POVM.
    pub fn binary(blocks: Vec<HMat>) -> Result<Self> {
        Self::new(vec![2; blocks.len()], blocks)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[HMat] {
        &self.blocks
    }

    pub fn g(&self) -> usize {
        self.shape.len()
    }

    pub fn is_binary(&self) -> bool {
        self.shape.iter().all(|&k| k == 2)
    }

    pub fn scale(&self, c: f64) -> Self {
        WitnessCandidate { shape: self.shape.clone(), n: self.n, blocks: self.blocks.iter().map(|b| b.scale(c)).collect() }
    }

    fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| b.max_abs() == 0.0)
    }
}

/// `1 - max` over the vertex inequalities; nonnegative iff a witness.
pub fn exact_slack(x: &WitnessCandidate) -> Result<f64> {
    if x.is_binary() {
        // ‖Σ ε_i X_i‖ over sign vectors with ε_1 = +1 (the norm is even)
        let g = x.g();
        let mut worst = 0.0f64;
        for signs in 0..(1usize << (g - 1)) {
            let mut acc = x.blocks[0].clone();
            for i in 1..g {
                if signs >> (i - 1) & 1 == 1 {
                    acc -= &x.blocks[i];
                } else {
                    acc += &x.blocks[i];
                }
            }
            worst = worst.max(acc.op_norm()?);
        }
        Ok(1.0 - worst)
    } else {
        Ok(jewel_membership(&x.shape, &x.blocks, 0.0)?.slack)
    }
}

pub fn is_witness_exact(x: &WitnessCandidate, tol: f64) -> Result<bool> {
    Ok(exact_slack(x)? >= -tol)
}

/// Largest ρ such that `Φ(c) = ρX` for a unital positive map Φ on the cube
/// or cuboid, i.e. `P_{s,r} ⪰ 0`, `Σ P_{s,r} = I`,
/// `(k_s/2)(P_{s,k_s} - P_{s,j}) = ρ X_{s,j}`. `+∞` for `X = 0`.
pub fn sdp_margin(x: &WitnessCandidate, opts: &SdpOptions) -> Result<f64> {
    if x.is_zero() {
        return Ok(f64::INFINITY);
    }
    let n = x.n;
    let basis = hermitian_basis(n);
    let mut p = SdpProblem::new(Sense::Maximize);
    let groups: Vec<Vec<usize>> = x.shape.iter().map(|&k| (0..k).map(|_| p.add_block(n)).collect()).collect();
    let rho = p.add_block(1);
    p.set_scalar_objective(rho, 1.0);
    let all: Vec<usize> = groups.iter().flatten().copied().collect();
    let id = HMat::identity(n);
    for b in &basis {
        let mut c = Constraint::new(b.inner(&id));
        for &blk in &all {
            c = c.with(blk, b.clone());
        }
        p.add_constraint(c);
    }
    let mut block_iter = x.blocks.iter();
    for (s, &k) in x.shape.iter().enumerate() {
        let h = k as f64 / 2.0;
        for j in 0..k - 1 {
            let xj = block_iter.next().expect("block count checked");
            for b in &basis {
                let c = Constraint::new(0.0)
                    .with(groups[s][k - 1], b.scale(h))
                    .with(groups[s][j], b.scale(-h))
                    .with_scalar(rho, -b.inner(xj));
                p.add_constraint(c);
            }
        }
    }
    let sol = sdp::solve(&p, opts)?.require_optimal("witness margin program")?;
    Ok(sol.x[rho].get(0, 0).re)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Witness,
    NotWitness,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WitnessClassification {
    pub verdict: Verdict,
    pub rho: f64,
    /// Inclusion constant used for the negative side; `None` for
    /// non-binary shapes, where no such constant is available.
    pub theta_used: Option<f64>,
}

/// Three-way classification from the SDP margin: `rho ≥ 1` proves a witness,
/// `rho < θ` (binary shapes, default `θ = 1/√g`) disproves it.
pub fn classify(x: &WitnessCandidate, theta: Option<f64>, tol: f64, opts: &SdpOptions) -> Result<WitnessClassification> {
    let rho = sdp_margin(x, opts)?;
    let theta_used = x.is_binary().then(|| theta.unwrap_or(1.0 / (x.g() as f64).sqrt()));
    let verdict = if rho >= 1.0 - tol {
        Verdict::Witness
    } else if theta_used.is_some_and(|th| rho < th - tol) {
        Verdict::NotWitness
    } else {
        Verdict::Indeterminate
    };
    Ok(WitnessClassification { verdict, rho, theta_used })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WitnessApplication {
    /// `λ_max(Σ (2E_j^{(i)} - (2/k_i) I) ⊗ X_{ij})`.
    pub max_eig: f64,
    /// `max_eig > 1 + tol`; one-sided.
    pub certified_incompatible: bool,
}

/// Evaluates a verified witness on a measurement set.
pub fn apply_witness(x: &WitnessCandidate, set: &MeasurementSet, tol: f64) -> Result<WitnessApplication> {
    if set.shape() != x.shape {
        return Err(Error::dim(format!("witness shape {:?} does not match set shape {:?}", x.shape, set.shape())));
    }
    let slack = exact_slack(x)?;
    if slack < -WITNESS_TOL {
        return Err(Error::NotAWitness { slack });
    }
    let d = set.dim();
    let mut acc = HMat::zeros(d * x.n);
    for (b, xb) in set.to_spectral_tuple().iter().zip(&x.blocks) {
        acc += &b.kron(xb);
    }
    let max_eig = acc.eig_max()?;
    Ok(WitnessApplication { max_eig, certified_incompatible: max_eig > 1.0 + tol })
}

/// `λ X_j` with `X_j = cos(jπ/g) σ_X + sin(jπ/g) σ_Y` and `λ = sin(π/(2g))`,
/// the largest scaling that is still a witness.
pub fn planar_witness(g: usize) -> Result<WitnessCandidate> {
    if g == 0 {
        return Err(Error::arg("g must be at least 1"));
    }
    let lambda = (std::f64::consts::PI / (2.0 * g as f64)).sin();
    WitnessCandidate::binary(planar_directions(g).iter().map(|x| x.scale(lambda)).collect())
}

/// Enumerates the sign vectors of a binary shape in row-major order; used
/// by callers that want the individual vertex values.
pub fn vertex_values(x: &WitnessCandidate) -> Result<Vec<f64>> {
    let idx = JointPovmIndex::new(&x.shape)?;
    (0..idx.size())
        .map(|f| {
            let eps = idx.delinearize(f);
            let mut acc = HMat::zeros(x.n);
            let mut it = x.blocks.iter();
            for (&e, &k) in eps.iter().zip(&x.shape) {
                for j in 0..k - 1 {
                    let w = -2.0 / k as f64 + if e == j { 2.0 } else { 0.0 };
                    acc += &it.next().expect("block count checked").scale(w);
                }
            }
            acc.eig_max()
        })
        .collect()
}
