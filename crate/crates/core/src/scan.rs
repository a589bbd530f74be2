//! Sampling the boundary of a compatibility region along rays, with the
//! analytic bounds evaluated along the same rays for comparison.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{ray_boundary, report, Region, RegionParams};
use crate::compat::robustness;
use crate::error::{Error, Result};
use crate::io::format_g17;
use crate::povm::{MeasurementSet, NoiseKind};
use crate::sdp::SdpOptions;

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub direction: Vec<f64>,
    /// `None` when the solve failed; see `error`.
    pub t: Option<f64>,
    /// Boundary `t` of each region in [`RegionScan::regions`] along the ray.
    pub bounds: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionScan {
    pub label: String,
    pub model: NoiseKind,
    pub seed: u64,
    pub regions: Vec<Region>,
    pub rows: Vec<ScanRow>,
}

/// The g coordinate axes, the symmetric direction, then `n` directions drawn
/// uniformly from the positive orthant of the unit sphere.
pub fn scan_directions(g: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..g).map(|i| (0..g).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    out.push(vec![1.0 / (g as f64).sqrt(); g]);
    while out.len() < n + g + 1 {
        let v: Vec<f64> = (0..g).map(|_| StandardNormal.sample(rng)).map(|x: f64| x.abs()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            out.push(v.iter().map(|x| x / norm).collect());
        }
    }
    out
}

/// Regions whose closed forms apply to sets of this dimension and shape.
pub fn applicable_regions(d: usize, shape: &[usize]) -> Result<Vec<Region>> {
    let r = report(shape.len(), d, shape)?;
    let mut regions = vec![Region::Cloning, Region::DiamondScaled];
    if r.upper.binary_qc.value.is_some() {
        regions.push(Region::Qc);
    }
    if shape.len() == 2 && r.upper.mub_symmetric.value.is_some() {
        regions.push(Region::MubPair);
    }
    if r.upper.planar_symmetric.value.is_some() {
        regions.push(Region::PlanarSum);
    }
    Ok(regions)
}

/// Robustness along `n + g + 1` rays. Solves run in parallel; rows keep the
/// order of [`scan_directions`], and a failed solve is recorded in its row.
pub fn region_scan(
    set: &MeasurementSet,
    label: &str,
    kind: NoiseKind,
    n: usize,
    seed: u64,
    opts: &SdpOptions,
) -> Result<RegionScan> {
    if n == 0 {
        return Err(Error::arg("a scan needs at least one random direction"));
    }
    set.ensure_valid(crate::povm::VALIDATION_TOL)?;
    let shape = set.shape();
    let regions = applicable_regions(set.dim(), &shape)?;
    let params = RegionParams::new(set.dim(), shape);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let directions = scan_directions(set.len(), n, &mut rng);
    let rows = directions
        .into_par_iter()
        .map(|dir| {
            let bounds = regions
                .iter()
                .map(|&r| ray_boundary(r, &dir, &params))
                .collect::<Result<Vec<f64>>>()?;
            let (t, error) = match robustness(set, kind, &dir, opts) {
                Ok(r) => (Some(r.t), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Ok(ScanRow { direction: dir, t, bounds, error })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionScan { label: label.to_string(), model: kind, seed, regions, rows })
}

impl RegionScan {
    /// CSV with a `#` comment line recording the inputs, then a header row:
    /// `a1..ag, t_star, s1..sg, <region>...`, and `error` last.
    pub fn to_csv(&self) -> String {
        let g = self.rows.first().map_or(0, |r| r.direction.len());
        let model = match self.model {
            NoiseKind::Balanced => "balanced",
            NoiseKind::Linear => "linear",
        };
        let mut out = format!("# set={} model={model} seed={}\n", self.label, self.seed);
        let mut header: Vec<String> = (1..=g).map(|i| format!("a{i}")).collect();
        header.push("t_star".into());
        header.extend((1..=g).map(|i| format!("s{i}")));
        header.extend(self.regions.iter().map(|r| r.name().to_string()));
        header.push("error".into());
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut cells: Vec<String> = row.direction.iter().map(|&a| format_g17(a)).collect();
            match row.t {
                Some(t) => {
                    cells.push(format_g17(t));
                    cells.extend(row.direction.iter().map(|a| format_g17((a * t).min(1.0))));
                }
                None => cells.extend(std::iter::repeat_n(String::new(), g + 1)),
            }
            cells.extend(row.bounds.iter().map(|&b| format_g17(b)));
            cells.push(row.error.as_deref().unwrap_or("").replace([',', '\n'], ";"));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}
