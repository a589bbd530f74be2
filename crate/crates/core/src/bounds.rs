//! Closed-form inner and outer bounds on compatibility regions, membership
//! predicates for the named regions, and a summary report per `(g, d, k)`.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative slack used by the region predicates, so that points computed to
/// lie exactly on a boundary count as members.
pub const REGION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Cloning,
    Qc,
    DiamondScaled,
    MubPair,
    ZhuMub,
    PlanarSum,
}

impl Region {
    pub const ALL: [Region; 6] =
        [Region::Cloning, Region::Qc, Region::DiamondScaled, Region::MubPair, Region::ZhuMub, Region::PlanarSum];

    pub fn name(self) -> &'static str {
        match self {
            Region::Cloning => "cloning",
            Region::Qc => "qc",
            Region::DiamondScaled => "diamond_scaled",
            Region::MubPair => "mub_pair",
            Region::ZhuMub => "zhu_mub",
            Region::PlanarSum => "planar_sum",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Region {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Region::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown region '{s}'")))
    }
}

/// Parameters some regions need: the dimension and the outcome counts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegionParams {
    pub d: Option<usize>,
    pub shape: Option<Vec<usize>>,
}

impl RegionParams {
    pub fn new(d: usize, shape: Vec<usize>) -> Self {
        RegionParams { d: Some(d), shape: Some(shape) }
    }

    fn d(&self, region: Region) -> Result<usize> {
        self.d.ok_or_else(|| Error::arg(format!("region {region} needs the dimension d")))
    }

    fn shape(&self, region: Region, g: usize) -> Result<&[usize]> {
        let k = self.shape.as_deref().ok_or_else(|| Error::arg(format!("region {region} needs the outcome counts k")))?;
        if k.len() != g {
            return Err(Error::dim(format!("region {region}: {} outcome counts for a point with {g} entries", k.len())));
        }
        if k.iter().any(|&k| k < 2) {
            return Err(Error::arg("outcome counts must be at least 2"));
        }
        Ok(k)
    }
}

fn le(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + REGION_TOL * rhs.abs().max(1.0)
}

/// Cloning region in effective dimension `dim`:
/// `(g+D-1)[g - D² + D + (D²-1)Σs] ≤ (Σ √(s_i(D²-1)+1))²`.
pub fn cloning_contains(s: &[f64], dim: f64) -> bool {
    let g = s.len() as f64;
    let q = dim * dim - 1.0;
    let lhs = (g + dim - 1.0) * (g - dim * dim + dim + q * s.iter().sum::<f64>());
    let rhs = s.iter().map(|&si| (si * q + 1.0).sqrt()).sum::<f64>().powi(2);
    le(lhs, rhs)
}

/// The two equivalent forms of the criterion for a pair of canonically
/// conjugated MUBs with visibilities `(λ, μ)`. Returns the signed margins
/// (nonnegative means member) of the explicit bound on μ and of the
/// union-of-two-sets form.
pub fn mub_pair_margins(lambda: f64, mu: f64, d: usize) -> (f64, f64) {
    let df = d as f64;
    let explicit =
        ((df - 2.0) * (1.0 - lambda) + 2.0 * ((1.0 - df) * lambda * lambda + (df - 2.0) * lambda + 1.0).max(0.0).sqrt())
            / df;
    let quad = lambda * lambda + mu * mu + 2.0 * (df - 2.0) / df * (1.0 - mu) * (1.0 - lambda);
    (explicit - mu, (1.0 - lambda - mu).max(1.0 - quad))
}

/// Membership of a noise-weight vector `s ∈ [0,1]^g` in a named region.
pub fn region_contains(region: Region, s: &[f64], params: &RegionParams) -> Result<bool> {
    if s.is_empty() {
        return Err(Error::dim("empty weight vector"));
    }
    if s.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::arg("weights must lie in [0, 1]"));
    }
    let g = s.len();
    let sq: f64 = s.iter().map(|x| x * x).sum();
    Ok(match region {
        Region::Cloning => {
            let d = params.d(region)?;
            let kmax = *params.shape(region, g)?.iter().max().expect("nonempty");
            cloning_contains(s, (kmax * d) as f64)
        }
        Region::Qc | Region::ZhuMub => le(sq, 1.0),
        Region::DiamondScaled => {
            let k = params.shape(region, g)?;
            let lhs: f64 = s.iter().zip(k).map(|(&si, &ki)| {
                let m = (ki - 1) as f64;
                m * (si * m * m).powi(2)
            }).sum();
            le(lhs, 1.0)
        }
        Region::MubPair => {
            if g != 2 {
                return Err(Error::dim(format!("mub_pair is defined for two weights, got {g}")));
            }
            let d = params.d(region)?;
            let (a, b) = mub_pair_margins(s[0], s[1], d);
            assert!(
                (a >= 0.0) == (b >= 0.0) || a.abs() < 1e-7 || b.abs() < 1e-7,
                "mub_pair forms disagree at ({}, {}), d = {d}: {a} vs {b}",
                s[0],
                s[1]
            );
            a >= -1e-9
        }
        Region::PlanarSum => le(s.iter().sum(), 1.0 / (PI / (2.0 * g as f64)).sin()),
    })
}

/// Largest `t ∈ [0, 1/max a]` with `t·a` in the region, by bisection.
pub fn ray_boundary(region: Region, direction: &[f64], params: &RegionParams) -> Result<f64> {
    let amax = direction.iter().cloned().fold(0.0, f64::max);
    if amax <= 0.0 || direction.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::arg("direction entries must lie in [0, 1] with one positive"));
    }
    let at = |t: f64| -> Vec<f64> { direction.iter().map(|a| (a * t).min(1.0)).collect() };
    let (mut lo, mut hi) = (0.0, 1.0 / amax);
    if region_contains(region, &at(hi), params)? {
        return Ok(hi);
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if region_contains(region, &at(mid), params)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Largest symmetric `s` with `(s, …, s)` in the cloning region of effective
/// dimension `D`: `(g+D)/(g(1+D))`.
pub fn cloning_symmetric(g: usize, dim: usize) -> f64 {
    let (g, dim) = (g as f64, dim as f64);
    (g + dim) / (g * (1.0 + dim))
}

/// Number of mutually unbiased bases known to exist in dimension `d`:
/// `d + 1` for prime powers, otherwise the minimum of `p^r + 1` over the
/// prime-power factors.
pub fn known_mub_count(d: usize) -> usize {
    let mut n = d;
    let mut best = usize::MAX;
    let mut p = 2;
    while n > 1 {
        if p * p > n {
            best = best.min(n + 1);
            break;
        }
        if n % p == 0 {
            let mut q = 1;
            while n % p == 0 {
                n /= p;
                q *= p;
            }
            best = best.min(q + 1);
        }
        p += 1;
    }
    if best == usize::MAX { d + 1 } else { best }
}

/// Upper bound on the symmetric weight, with the condition under which it
/// holds. `value` is `None` when the condition fails.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpperBound {
    pub value: Option<f64>,
    pub condition: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBounds {
    pub cloning_symmetric: f64,
    pub symmetrization_point: Vec<f64>,
    pub symmetrization_symmetric: f64,
    pub diamond_qc_symmetric: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpperBounds {
    pub binary_qc: UpperBound,
    pub mub_symmetric: UpperBound,
    pub planar_symmetric: UpperBound,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub g: usize,
    pub d: usize,
    pub shape: Vec<usize>,
    pub lower: LowerBounds,
    pub upper: UpperBounds,
    pub notes: Vec<String>,
}

impl BoundReport {
    /// Best (largest) symmetric lower bound.
    pub fn best_lower(&self) -> f64 {
        let l = &self.lower;
        l.cloning_symmetric.max(l.symmetrization_symmetric).max(l.diamond_qc_symmetric)
    }

    /// Best (smallest) applicable symmetric upper bound; 1 if none applies.
    pub fn best_upper(&self) -> f64 {
        self.uppers().filter_map(|(_, u)| u.value).fold(1.0, f64::min)
    }

    fn uppers(&self) -> impl Iterator<Item = (&'static str, &UpperBound)> {
        let u = &self.upper;
        [("quarter circle", &u.binary_qc), ("MUB symmetric", &u.mub_symmetric), ("planar qubit", &u.planar_symmetric)]
            .into_iter()
    }

    pub fn to_text(&self) -> String {
        let shape: Vec<String> = self.shape.iter().map(|k| k.to_string()).collect();
        let mut out = String::new();
        let _ = writeln!(out, "bounds on symmetric weights s for g = {}, d = {}, k = ({})", self.g, self.d, shape.join(","));
        let _ = writeln!(out, "{:<18} {:>10}", "lower bound", "s");
        let l = &self.lower;
        let rows = [
            ("cloning", l.cloning_symmetric, format!("effective dimension {}", self.shape.iter().max().unwrap() * self.d)),
            ("symmetrization", l.symmetrization_symmetric, "min over 1/(2d(k_i-1))".to_string()),
            ("matrix diamond", l.diamond_qc_symmetric, String::new()),
        ];
        for (name, v, note) in rows {
            let _ = writeln!(out, "{}", format!("  {name:<16} {v:>10.6}  {note}").trim_end());
        }
        let _ = writeln!(out, "{:<18} {:>10}", "upper bound", "s");
        for (name, u) in self.uppers() {
            let v = u.value.map_or("n/a".to_string(), |v| format!("{v:.6}"));
            let _ = writeln!(out, "  {name:<16} {v:>10}  {}", u.condition);
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}

/// Collects every closed-form bound that applies to `(g, d, k)`.
///
/// Panics if a lower bound exceeds an applicable upper bound, which would
/// mean one of the formulas is wrong.
pub fn report(g: usize, d: usize, shape: &[usize]) -> Result<BoundReport> {
    if g == 0 || d < 2 || shape.len() != g || shape.iter().any(|&k| k < 2) {
        return Err(Error::arg(format!("invalid parameters g = {g}, d = {d}, k = {shape:?}")));
    }
    let gf = g as f64;
    let kmax = *shape.iter().max().expect("nonempty");
    let binary = shape.iter().all(|&k| k == 2);
    let symmetrization_point: Vec<f64> = shape.iter().map(|&k| 1.0 / (2.0 * d as f64 * (k - 1) as f64)).collect();
    let lower = LowerBounds {
        cloning_symmetric: cloning_symmetric(g, kmax * d),
        symmetrization_symmetric: symmetrization_point.iter().cloned().fold(f64::INFINITY, f64::min),
        symmetrization_point,
        diamond_qc_symmetric: 1.0 / shape.iter().map(|&k| ((k - 1) as f64).powi(5)).sum::<f64>().sqrt(),
    };

    let anti_commuting = d >= 1usize << (g - 1).div_ceil(2);
    let mubs = known_mub_count(d);
    let square = shape.iter().all(|&k| k == d) && g <= mubs;
    let mut notes = Vec::new();
    let binary_qc = UpperBound {
        value: (anti_commuting || square).then(|| 1.0 / gf.sqrt()),
        condition: match (anti_commuting, square) {
            (true, _) => format!("d >= 2^ceil((g-1)/2) = {}", 1usize << (g - 1).div_ceil(2)),
            (false, true) => format!("k = d and g <= {mubs} known MUBs"),
            (false, false) => format!("needs d >= {} or k = d with g <= {mubs}", 1usize << (g - 1).div_ceil(2)),
        },
    };
    let sd = (d as f64).sqrt();
    let mub_symmetric = UpperBound {
        value: square.then(|| (sd + gf) / (gf * (sd + 1.0))),
        condition: if square {
            format!("k = d and g <= {mubs} known MUBs")
        } else {
            format!("needs k = d and g <= {mubs} known MUBs")
        },
    };
    let planar_ok = d == 2 && binary;
    let planar_symmetric = UpperBound {
        value: planar_ok.then(|| 1.0 / (gf * (PI / (2.0 * gf)).sin())),
        condition: if planar_ok { "d = 2, binary".to_string() } else { "needs d = 2 and binary outcomes".to_string() },
    };
    if g == 2 && square {
        notes.push("for two canonically conjugated MUBs the region is given exactly by the mub_pair predicate".into());
    }
    if !binary && shape.iter().any(|&k| k != kmax) {
        notes.push("cloning bound uses the largest outcome count".into());
    }
    let report = BoundReport { g, d, shape: shape.to_vec(), lower, upper: UpperBounds { binary_qc, mub_symmetric, planar_symmetric }, notes };

    let lo = report.best_lower();
    for (name, u) in report.uppers() {
        if let Some(v) = u.value {
            assert!(lo <= v + 1e-12, "lower bound {lo} exceeds {name} upper bound {v} at g={g}, d={d}, k={shape:?}");
        }
    }
    if report.upper.binary_qc.value.is_some() {
        assert!(region_contains(Region::Qc, &report.lower.symmetrization_point, &RegionParams::default())?);
    }
    Ok(report)
}
