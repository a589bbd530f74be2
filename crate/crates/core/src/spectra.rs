//! Free spectrahedra `D_A = {X : Σ A_i ⊗ X_i ⪯ I}`: the jewel, cuboid,
//! cube and diamond constructions, membership tests, level-1 vertices, and
//! the bridge from jewel inclusion to joint measurability.

use serde::{Deserialize, Serialize};

use crate::compat::{joint_feasibility, CompatVerdict, JointPovmIndex};
use crate::error::{Error, Result};
use crate::linalg::HMat;
use crate::povm::{MeasurementSet, VALIDATION_TOL};
use crate::sdp::{SdpOptions, SolveStats};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTuple")]
pub struct FreeTuple {
    #[serde(rename = "dimD")]
    dim_d: usize,
    matrices: Vec<HMat>,
    label: String,
    #[serde(skip)]
    diagonal: bool,
}

#[derive(Deserialize)]
struct RawTuple {
    #[serde(rename = "dimD")]
    dim_d: usize,
    matrices: Vec<HMat>,
    label: String,
}

impl TryFrom<RawTuple> for FreeTuple {
    type Error = Error;
    fn try_from(raw: RawTuple) -> Result<Self> {
        let t = FreeTuple::new(raw.matrices, raw.label)?;
        if t.dim_d != raw.dim_d {
            return Err(Error::dim(format!("declared dimD {} but matrices have dim {}", raw.dim_d, t.dim_d)));
        }
        Ok(t)
    }
}

impl FreeTuple {
    pub fn new(matrices: Vec<HMat>, label: impl Into<String>) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return Err(Error::arg("a defining tuple needs at least one matrix"));
        };
        let dim_d = first.dim();
        if let Some(i) = matrices.iter().position(|m| m.dim() != dim_d) {
            return Err(Error::dim(format!("matrix {i} has dim {}, expected {dim_d}", matrices[i].dim())));
        }
        let diagonal = matrices.iter().all(HMat::is_diagonal);
        Ok(FreeTuple { dim_d, matrices, label: label.into(), diagonal })
    }

    fn from_diagonals(diags: Vec<Vec<f64>>, label: String) -> Self {
        let dim_d = diags[0].len();
        let matrices = diags.iter().map(|d| HMat::from_real_diag(d)).collect();
        FreeTuple { dim_d, matrices, label, diagonal: true }
    }

    pub fn dim_d(&self) -> usize {
        self.dim_d
    }

    /// Number of defining matrices.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrices(&self) -> &[HMat] {
        &self.matrices
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// `A_i ⊕ 0` followed by `0 ⊕ B_j`; the level-1 set is the Cartesian
    /// product.
    pub fn product(&self, other: &FreeTuple) -> FreeTuple {
        let za = HMat::zeros(self.dim_d);
        let zb = HMat::zeros(other.dim_d);
        let mut matrices: Vec<HMat> = self.matrices.iter().map(|a| a.direct_sum(&zb)).collect();
        matrices.extend(other.matrices.iter().map(|b| za.direct_sum(b)));
        FreeTuple {
            dim_d: self.dim_d + other.dim_d,
            matrices,
            label: format!("product({}, {})", self.label, other.label),
            diagonal: self.diagonal && other.diagonal,
        }
    }

    /// `A_i ⊗ I` followed by `I ⊗ B_j`. Both level-1 sets should be bounded.
    pub fn sum(&self, other: &FreeTuple) -> FreeTuple {
        let ia = HMat::identity(self.dim_d);
        let ib = HMat::identity(other.dim_d);
        let mut matrices: Vec<HMat> = self.matrices.iter().map(|a| a.kron(&ib)).collect();
        matrices.extend(other.matrices.iter().map(|b| ia.kron(b)));
        FreeTuple {
            dim_d: self.dim_d * other.dim_d,
            matrices,
            label: format!("sum({}, {})", self.label, other.label),
            diagonal: self.diagonal && other.diagonal,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseKind {
    /// Parameter k: simplex base of the jewel.
    JewelBase,
    /// Parameter k: dual simplex base of the cuboid.
    CuboidBase,
    /// Parameter g.
    Cube,
    /// Parameter g.
    Diamond,
}

/// `v_j^{(k)}(ε) = -2/k + 2δ_{ε,j}` as a function of ε, for j < k.
fn jewel_base_diagonals(k: usize) -> Vec<Vec<f64>> {
    let kf = k as f64;
    (0..k - 1).map(|j| (0..k).map(|e| -2.0 / kf + if e == j { 2.0 } else { 0.0 }).collect()).collect()
}

pub fn named_base_tuple(kind: BaseKind, param: usize) -> Result<FreeTuple> {
    match kind {
        BaseKind::JewelBase | BaseKind::CuboidBase if param < 2 => {
            Err(Error::arg(format!("base tuples need k >= 2, got {param}")))
        }
        BaseKind::Cube | BaseKind::Diamond if param < 1 => Err(Error::arg("g must be at least 1")),
        BaseKind::JewelBase => Ok(FreeTuple::from_diagonals(jewel_base_diagonals(param), format!("jewel_base({param})"))),
        BaseKind::CuboidBase => {
            let k = param;
            let h = k as f64 / 2.0;
            let diags = (0..k - 1)
                .map(|j| {
                    let mut d = vec![0.0; k];
                    d[j] = -h;
                    d[k - 1] = h;
                    d
                })
                .collect();
            Ok(FreeTuple::from_diagonals(diags, format!("cuboid_base({k})")))
        }
        BaseKind::Cube => {
            let g = param;
            let diags = (0..g)
                .map(|i| {
                    let mut d = vec![0.0; 2 * g];
                    d[i] = 1.0;
                    d[g + i] = -1.0;
                    d
                })
                .collect();
            Ok(FreeTuple::from_diagonals(diags, format!("cube({g})")))
        }
        BaseKind::Diamond => {
            let mut t = jewel_tuple(&vec![2; param])?;
            t.label = format!("diamond({param})");
            Ok(t)
        }
    }
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::arg("shape must be nonempty"));
    }
    if let Some(k) = shape.iter().find(|&&k| k < 2) {
        return Err(Error::arg(format!("every k_i must be at least 2, got {k}")));
    }
    Ok(())
}

/// Iterated sum of jewel bases: `Σ(k_i - 1)` diagonals of size `Π k_i`.
pub fn jewel_tuple(shape: &[usize]) -> Result<FreeTuple> {
    check_shape(shape)?;
    let mut acc = named_base_tuple(BaseKind::JewelBase, shape[0])?;
    for &k in &shape[1..] {
        acc = acc.sum(&named_base_tuple(BaseKind::JewelBase, k)?);
    }
    let label = shape.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
    acc.label = format!("jewel({label})");
    Ok(acc)
}

/// Extremal points of the level-1 jewel base: `-(k/2) e_i` and `(k/2)·1`.
pub fn jewel_vertices(k: usize) -> Result<Vec<Vec<f64>>> {
    if k < 2 {
        return Err(Error::arg(format!("k must be at least 2, got {k}")));
    }
    let h = k as f64 / 2.0;
    let mut out: Vec<Vec<f64>> = (0..k - 1)
        .map(|i| (0..k - 1).map(|j| if i == j { -h } else { 0.0 }).collect())
        .collect();
    out.push(vec![h; k - 1]);
    Ok(out)
}

/// Vertices of the level-1 jewel base for a shape: the direct sum of the
/// simplices, so each vertex lives in one coordinate block.
pub fn jewel_shape_vertices(shape: &[usize]) -> Result<Vec<Vec<f64>>> {
    check_shape(shape)?;
    let total: usize = shape.iter().map(|k| k - 1).sum();
    let mut out = Vec::new();
    let mut offset = 0;
    for &k in shape {
        for v in jewel_vertices(k)? {
            let mut p = vec![0.0; total];
            p[offset..offset + k - 1].copy_from_slice(&v);
            out.push(p);
        }
        offset += k - 1;
    }
    Ok(out)
}

/// `w_i^{(k)}(j) = -2/k + 2δ_{ij}` for `j < k`.
fn simplex_vertex(k: usize, i: usize) -> Vec<f64> {
    let kf = k as f64;
    (0..k - 1).map(|j| -2.0 / kf + if i == j { 2.0 } else { 0.0 }).collect()
}

/// All `Π k_i` concatenations of simplex vertices, in row-major order.
pub fn cuboid_vertices(shape: &[usize]) -> Result<Vec<Vec<f64>>> {
    check_shape(shape)?;
    let idx = JointPovmIndex::new(shape)?;
    Ok((0..idx.size())
        .map(|f| idx.delinearize(f).iter().zip(shape).flat_map(|(&i, &k)| simplex_vertex(k, i)).collect())
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    /// `1 - λ_max(Σ A_i ⊗ X_i)`.
    pub slack: f64,
}

fn common_dim(x: &[HMat]) -> Result<usize> {
    let Some(first) = x.first() else {
        return Err(Error::arg("empty matrix tuple"));
    };
    let n = first.dim();
    if let Some(i) = x.iter().position(|m| m.dim() != n) {
        return Err(Error::dim(format!("tuple entry {i} has dim {}, expected {n}", x[i].dim())));
    }
    Ok(n)
}

/// Largest eigenvalue of `Σ c_i X_i`.
fn weighted_max_eig(coeffs: impl Iterator<Item = f64>, x: &[HMat], n: usize) -> Result<f64> {
    let mut acc = HMat::zeros(n);
    for (c, xi) in coeffs.zip(x) {
        if c != 0.0 {
            acc += &xi.scale(c);
        }
    }
    acc.eig_max()
}

pub fn membership(a: &FreeTuple, x: &[HMat], tol: f64) -> Result<Membership> {
    if x.len() != a.len() {
        return Err(Error::dim(format!("{} matrices for a tuple of length {}", x.len(), a.len())));
    }
    let n = common_dim(x)?;
    let top = if a.diagonal {
        let mut top = f64::NEG_INFINITY;
        for r in 0..a.dim_d {
            let coeffs = a.matrices.iter().map(|m| m.get(r, r).re);
            top = top.max(weighted_max_eig(coeffs, x, n)?);
        }
        top
    } else {
        let mut acc = HMat::zeros(a.dim_d * n);
        for (ai, xi) in a.matrices.iter().zip(x) {
            acc += &ai.kron(xi);
        }
        acc.eig_max()?
    };
    let slack = 1.0 - top;
    Ok(Membership { member: slack >= -tol, slack })
}

/// Membership in the matrix jewel through its `Π k_i` vertex inequalities
/// `Σ_{i,j} v_j^{(k_i)}(ε_i) X_{i,j} ⪯ I`.
pub fn jewel_membership(shape: &[usize], x: &[HMat], tol: f64) -> Result<Membership> {
    check_shape(shape)?;
    let expected: usize = shape.iter().map(|k| k - 1).sum();
    if x.len() != expected {
        return Err(Error::dim(format!("shape {shape:?} needs {expected} matrices, got {}", x.len())));
    }
    let n = common_dim(x)?;
    let idx = JointPovmIndex::new(shape)?;
    let mut top = f64::NEG_INFINITY;
    for f in 0..idx.size() {
        let eps = idx.delinearize(f);
        let coeffs = eps.iter().zip(shape).flat_map(|(&e, &k)| simplex_vertex(k, e));
        top = top.max(weighted_max_eig(coeffs, x, n)?);
    }
    let slack = 1.0 - top;
    Ok(Membership { member: slack >= -tol, slack })
}

/// Level-1 inclusion: the tuple converts to valid POVMs.
pub fn inclusion_level1(shape: &[usize], b: &[HMat], tol: f64) -> Result<bool> {
    let set = MeasurementSet::from_spectral_tuple(shape, b)?;
    Ok(set.validate(tol)?.iter().all(|r| r.is_valid()))
}

/// Inclusion of the matrix jewel of `shape` into `D_B`, decided as joint
/// measurability of the POVMs `E = (B + (2/k) I)/2`.
pub fn inclusion_check(shape: &[usize], b: &[HMat], tol: f64, opts: &SdpOptions) -> Result<CompatVerdict> {
    check_shape(shape)?;
    let set = MeasurementSet::from_spectral_tuple(shape, b)?;
    if !set.validate(VALIDATION_TOL)?.iter().all(|r| r.is_valid()) {
        // already fails at level 1
        return Ok(CompatVerdict {
            compatible: false,
            margin: f64::NAN,
            joint: None,
            marginal_error: f64::NAN,
            certificate: None,
            stats: SolveStats::default(),
        });
    }
    joint_feasibility(&set, tol, opts)
}

/// Points as CSV rows, one per line.
pub fn vertices_csv(points: &[Vec<f64>]) -> String {
    let dim = points.first().map_or(0, Vec::len);
    let mut out = (1..=dim).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for p in points {
        out.push_str(&p.iter().map(|v| crate::io::format_g17(*v)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_vertices_embed_blocks() {
        assert_eq!(jewel_shape_vertices(&[3]).unwrap(), jewel_vertices(3).unwrap());
        let v = jewel_shape_vertices(&[2, 3]).unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v[0], vec![-1.0, 0.0, 0.0]);
        assert_eq!(v[4], vec![0.0, 1.5, 1.5]);
    }
    use crate::linalg::pauli;
    use crate::povm::{apply_noise, mub_povms, random_set, NoiseModel};

    fn diag(t: &FreeTuple, i: usize) -> Vec<f64> {
        t.matrices()[i].diagonal()
    }

    #[test]
    fn base_tuple_examples() {
        let j3 = named_base_tuple(BaseKind::JewelBase, 3).unwrap();
        assert_eq!(j3.len(), 2);
        let near = |a: Vec<f64>, b: [f64; 3]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15);
        assert!(near(diag(&j3, 0), [4.0 / 3.0, -2.0 / 3.0, -2.0 / 3.0]));
        assert!(near(diag(&j3, 1), [-2.0 / 3.0, 4.0 / 3.0, -2.0 / 3.0]));
        let j2 = named_base_tuple(BaseKind::JewelBase, 2).unwrap();
        assert_eq!(j2.len(), 1);
        assert_eq!(diag(&j2, 0), vec![1.0, -1.0]);
        let c3 = named_base_tuple(BaseKind::CuboidBase, 3).unwrap();
        assert_eq!(diag(&c3, 0), vec![-1.5, 0.0, 1.5]);
        assert_eq!(diag(&c3, 1), vec![0.0, -1.5, 1.5]);
        let cube = named_base_tuple(BaseKind::Cube, 2).unwrap();
        assert_eq!(cube.dim_d(), 4);
        assert_eq!(diag(&cube, 1), vec![0.0, 1.0, 0.0, -1.0]);
        assert!(named_base_tuple(BaseKind::JewelBase, 1).is_err());
        assert_eq!(named_base_tuple(BaseKind::Diamond, 3).unwrap().dim_d(), 8);
    }

    #[test]
    fn product_of_segments_is_cube_up_to_permutation() {
        let seg = named_base_tuple(BaseKind::JewelBase, 2).unwrap();
        let p = seg.product(&seg);
        let cube = named_base_tuple(BaseKind::Cube, 2).unwrap();
        // cube diagonal order (1,2,-1,-2) vs product order (1,-1,2,-2)
        let perm = [0, 2, 1, 3];
        for i in 0..2 {
            let a = diag(&p, i);
            let b = diag(&cube, i);
            assert_eq!(perm.iter().map(|&r| a[r]).collect::<Vec<_>>(), b);
        }
    }

    #[test]
    fn sum_of_segments_is_diamond() {
        let seg = named_base_tuple(BaseKind::JewelBase, 2).unwrap();
        let s = seg.sum(&seg);
        assert_eq!(s.matrices(), named_base_tuple(BaseKind::Diamond, 2).unwrap().matrices());
        let j = jewel_tuple(&[2, 3]).unwrap();
        assert_eq!(j.len(), 3);
        assert_eq!(j.dim_d(), 6);
        assert_eq!(jewel_tuple(&[3]).unwrap().matrices(), named_base_tuple(BaseKind::JewelBase, 3).unwrap().matrices());
    }

    #[test]
    fn vertex_examples() {
        assert_eq!(jewel_vertices(3).unwrap(), vec![vec![-1.5, 0.0], vec![0.0, -1.5], vec![1.5, 1.5]]);
        assert_eq!(jewel_vertices(2).unwrap(), vec![vec![-1.0], vec![1.0]]);
        let c = cuboid_vertices(&[2, 2]).unwrap();
        assert_eq!(c, vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]]);
        assert_eq!(cuboid_vertices(&[3, 2, 4]).unwrap().len(), 24);
    }

    #[test]
    fn jewel_vertices_are_tight_on_k_minus_one_facets() {
        for k in 2..7 {
            let t = named_base_tuple(BaseKind::JewelBase, k).unwrap();
            for v in jewel_vertices(k).unwrap() {
                let mut tight = 0;
                for eps in 0..k {
                    let val: f64 = (0..k - 1).map(|j| t.matrices()[j].get(eps, eps).re * v[j]).sum();
                    assert!(val <= 1.0 + 1e-12);
                    if (val - 1.0).abs() < 1e-12 {
                        tight += 1;
                    }
                }
                assert_eq!(tight, k - 1, "k={k} vertex {v:?}");
            }
        }
    }

    #[test]
    fn membership_examples() {
        let dia = named_base_tuple(BaseKind::Diamond, 2).unwrap();
        let zero = vec![HMat::zeros(2), HMat::zeros(2)];
        let m = membership(&dia, &zero, 1e-9).unwrap();
        assert!(m.member && (m.slack - 1.0).abs() < 1e-15);
        let pt = vec![HMat::from_real_diag(&[0.6]), HMat::from_real_diag(&[0.8])];
        assert!(!membership(&dia, &pt, 1e-9).unwrap().member);
        let j3 = named_base_tuple(BaseKind::JewelBase, 3).unwrap();
        let v = vec![HMat::from_real_diag(&[1.5]), HMat::from_real_diag(&[1.5])];
        let m = membership(&j3, &v, 1e-9).unwrap();
        assert!(m.member && m.slack.abs() < 1e-12);
    }

    #[test]
    fn jewel_membership_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = vec![pauli::x().scale(s), pauli::y().scale(s)];
        let m = jewel_membership(&[2, 2], &x, 1e-9).unwrap();
        assert!(m.member && m.slack.abs() < 1e-9);
        assert!(!jewel_membership(&[2, 2], &[pauli::x(), pauli::y()], 1e-9).unwrap().member);
        assert!(jewel_membership(&[3, 2], &[HMat::zeros(2), HMat::zeros(2), HMat::zeros(2)], 1e-9).unwrap().member);
    }

    #[test]
    fn generic_membership_matches_dense_kronecker() {
        // non-diagonal tuple forces the dense branch
        let t = FreeTuple::new(vec![pauli::x(), pauli::z()], "xz").unwrap();
        let x = vec![pauli::y().scale(0.3), HMat::from_real_diag(&[0.2, -0.5])];
        let m = membership(&t, &x, 1e-9).unwrap();
        let dense = &pauli::x().kron(&x[0]) + &pauli::z().kron(&x[1]);
        assert!((m.slack - (1.0 - dense.eig_max().unwrap())).abs() < 1e-12);
    }

    #[test]
    fn inclusion_examples() {
        let zx = mub_povms(2, 2).unwrap();
        let opts = SdpOptions::default();
        let half = apply_noise(&zx, &NoiseModel::balanced(vec![0.5, 0.5]).unwrap()).unwrap();
        assert!(inclusion_check(&[2, 2], &half.to_spectral_tuple(), 1e-7, &opts).unwrap().compatible);
        assert!(!inclusion_check(&[2, 2], &zx.to_spectral_tuple(), 1e-7, &opts).unwrap().compatible);
        let one = random_set(3, &[3], 9).unwrap();
        assert!(inclusion_check(&[3], &one.to_spectral_tuple(), 1e-7, &opts).unwrap().compatible);
        // 2σ_Z gives effects outside [0, I]
        assert!(!inclusion_level1(&[2], &[pauli::z().scale(2.0)], 1e-9).unwrap());
        assert!(!inclusion_check(&[2], &[pauli::z().scale(2.0)], 1e-7, &opts).unwrap().compatible);
    }

    #[test]
    fn tuple_json_round_trip() {
        let t = jewel_tuple(&[2, 3]).unwrap();
        let text = crate::io::to_canonical_json(&t).unwrap();
        assert!(text.contains("\"dimD\":6"));
        let back: FreeTuple = crate::io::from_json(&text).unwrap();
        assert_eq!(back, t);
        assert!(back.is_diagonal());
    }
}
