//! Acceptance suite: twelve end-to-end criteria, one PASS/FAIL line each.
//! Runs without the libtest harness so every line is printed; exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;
use std::time::Instant;

use jewel_core::bounds::{ray_boundary, Region, RegionParams};
use jewel_core::compat::{joint_feasibility, robustness, robustness_by_bisection, zhu_check, CompatVerdict, Robustness};
use jewel_core::linalg::{c64, pauli, CMat};
use jewel_core::povm::{
    apply_noise, mub_povms, planar_qubit_set, random_isometry, random_set, random_set_with, MeasurementSet, NoiseKind,
    NoiseModel, Povm,
};
use jewel_core::spectra::{jewel_membership, jewel_tuple, jewel_vertices, membership, named_base_tuple, BaseKind};
use jewel_core::witness::{apply_witness, classify, is_witness_exact, planar_witness, Verdict, WitnessCandidate, WITNESS_TOL};
use jewel_core::{HMat, SdpOptions, SolveStats};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Accuracy of every optimal solve made through the helpers below.
static STATS: Mutex<Vec<SolveStats>> = Mutex::new(Vec::new());

fn record(s: SolveStats) {
    STATS.lock().unwrap().push(s);
}

fn opts() -> SdpOptions {
    SdpOptions::default()
}

fn feasible(set: &MeasurementSet) -> CompatVerdict {
    let v = joint_feasibility(set, 1e-7, &opts()).expect("feasibility solve");
    record(v.stats);
    v
}

fn robust(set: &MeasurementSet, kind: NoiseKind, dir: &[f64]) -> Robustness {
    let r = robustness(set, kind, dir, &opts()).expect("robustness solve");
    record(r.stats);
    r
}

fn noisy(set: &MeasurementSet, s: &[f64]) -> MeasurementSet {
    apply_noise(set, &NoiseModel::balanced(s.to_vec()).unwrap()).unwrap()
}

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HMat {
    let m = CMat::from_fn(n, n, |_, _| c64(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    HMat::from_cmat_unchecked(m)
}

const GRID: [(usize, &[usize]); 4] = [(2, &[2, 2]), (2, &[3, 3]), (2, &[2, 2, 2]), (3, &[3, 3])];
const SETS_PER_INSTANCE: u64 = 20;

/// Every set of the grid with balanced noise `s(d, shape)` is compatible.
fn grid_point_compatible(s: impl Fn(usize, &[usize]) -> Vec<f64>) -> Result<String, String> {
    let mut worst = f64::INFINITY;
    for (d, shape) in GRID {
        let w = s(d, shape);
        for seed in 0..SETS_PER_INSTANCE {
            let set = random_set(d, shape, 1000 + seed).unwrap();
            let v = feasible(&noisy(&set, &w));
            worst = worst.min(v.margin);
            if v.margin < -1e-7 {
                return Err(format!("d={d} k={shape:?} seed={seed}: margin {:.3e} at s={w:?}", v.margin));
            }
        }
    }
    Ok(format!("{} sets, worst margin {worst:.3e}", 4 * SETS_PER_INSTANCE))
}

fn c1() -> Result<String, String> {
    let start = Instant::now();
    let r = robust(&mub_povms(2, 2).unwrap(), NoiseKind::Balanced, &[1.0, 1.0]);
    let elapsed = start.elapsed().as_secs_f64();
    let expected = 0.5 * (1.0 + 1.0 / (1.0 + 2f64.sqrt()));
    if (r.t - expected).abs() > 1e-4 || (r.t - 0.707107).abs() > 1e-4 {
        return Err(format!("t* = {} expected {expected}", r.t));
    }
    if elapsed >= 5.0 {
        return Err(format!("took {elapsed:.2} s"));
    }
    Ok(format!("t* = {:.6} in {elapsed:.3} s", r.t))
}

fn c2() -> Result<String, String> {
    let d = 3;
    let set = mub_povms(d, 2).unwrap();
    let mu = |l: f64| {
        let df = d as f64;
        ((df - 2.0) * (1.0 - l) + 2.0 * ((1.0 - df) * l * l + (df - 2.0) * l + 1.0).sqrt()) / df
    };
    let mut worst = 0.0f64;
    for lambda in [0.2, 0.5, 0.8] {
        let r = robust(&set, NoiseKind::Balanced, &[lambda, 1.0]);
        let (s1, s2) = (r.weights[0], r.weights[1]);
        let err = (s2 - mu(s1)).abs();
        let analytic = ray_boundary(Region::MubPair, &[lambda, 1.0], &RegionParams { d: Some(d), shape: None }).unwrap();
        worst = worst.max(err).max((analytic - r.t).abs());
        if err > 1e-3 || (analytic - r.t).abs() > 1e-3 {
            return Err(format!("ray ({lambda},1): boundary ({s1:.6},{s2:.6}), mu(s1) = {:.6}, analytic t {analytic:.6}", mu(s1)));
        }
    }
    Ok(format!("max deviation {worst:.2e}"))
}

fn c3() -> Result<String, String> {
    let z = zhu_check(&mub_povms(3, 2).unwrap(), 1e-6, &opts()).map_err(|e| e.to_string())?;
    record(z.stats);
    if (z.value - 4.0).abs() > 1e-5 || !z.incompatible_certified {
        return Err(format!("value {} certified {}", z.value, z.incompatible_certified));
    }
    Ok(format!("min tr H = {:.8}, certified", z.value))
}

fn c4() -> Result<String, String> {
    grid_point_compatible(|d, shape| {
        let g = shape.len() as f64;
        let kd = (shape.iter().max().unwrap() * d) as f64;
        vec![(g + kd) / (g * (1.0 + kd)); shape.len()]
    })
}

fn c5() -> Result<String, String> {
    grid_point_compatible(|d, shape| shape.iter().map(|&k| 1.0 / (2.0 * d as f64 * (k - 1) as f64)).collect())
}

fn c6() -> Result<String, String> {
    grid_point_compatible(|_, shape| {
        let total: usize = shape.iter().map(|k| k - 1).sum();
        shape.iter().map(|&k| 1.0 / (((k - 1) * (k - 1)) as f64 * (total as f64).sqrt())).collect()
    })
}

fn c7() -> Result<String, String> {
    let set = planar_qubit_set(3, &[1.0, 1.0, 1.0]).unwrap();
    let direct = robust(&set, NoiseKind::Balanced, &[1.0; 3]).t;
    let bisect = robustness_by_bisection(&set, NoiseKind::Balanced, &[1.0; 3], 1e-6, &opts()).map_err(|e| e.to_string())?;
    if !(0.6660..=2.0 / 3.0 + 1e-3).contains(&direct) {
        return Err(format!("t* = {direct} outside [0.6660, 0.6677]"));
    }
    if (direct - bisect).abs() > 1e-5 {
        return Err(format!("direct {direct} vs bisection {bisect}"));
    }
    Ok(format!("t* = {direct:.6}, bisection {bisect:.6}"))
}

fn c8() -> Result<String, String> {
    let w = planar_witness(2).unwrap();
    let r = apply_witness(&w, &planar_qubit_set(2, &[1.0, 1.0]).unwrap(), 1e-9).unwrap();
    if (r.max_eig - 2f64.sqrt()).abs() > 1e-9 || !r.certified_incompatible {
        return Err(format!("max_eig {} certified {}", r.max_eig, r.certified_incompatible));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut trials, mut draws) = (0, 0);
    while trials < 200 {
        draws += 1;
        if draws > 2000 {
            return Err(format!("only {trials} compatible sets in {draws} draws"));
        }
        let set = random_set_with(2, &[2, 2], &mut rng).unwrap();
        let s: Vec<f64> = (0..2).map(|_| rng.random_range(0.3..1.0)).collect();
        let set = noisy(&set, &s);
        if !feasible(&set).compatible {
            continue;
        }
        trials += 1;
        let a = apply_witness(&w, &set, 1e-9).unwrap();
        if a.certified_incompatible {
            return Err(format!("false positive on draw {draws}: max_eig {}", a.max_eig));
        }
    }
    Ok(format!("max_eig = {:.12}; 0 false positives in {trials} compatible sets", r.max_eig))
}

fn c9() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut counts = [0usize; 3];
    for trial in 0..200 {
        let g = 2 + trial % 2;
        let n = 2 + (trial / 2) % 2;
        let blocks: Vec<HMat> = (0..g)
            .map(|_| {
                let h = random_hermitian(n, &mut rng);
                h.scale(1.0 / h.op_norm().unwrap())
            })
            .collect();
        let scale = rng.random_range(0.2..1.2) / (g as f64).sqrt();
        let x = WitnessCandidate::binary(blocks.iter().map(|b| b.scale(scale)).collect()).unwrap();
        let exact = is_witness_exact(&x, WITNESS_TOL).unwrap();
        let c = classify(&x, None, 1e-6, &opts()).map_err(|e| e.to_string())?;
        match c.verdict {
            Verdict::Witness => counts[0] += 1,
            Verdict::NotWitness => counts[1] += 1,
            Verdict::Indeterminate => counts[2] += 1,
        }
        let contradiction = match c.verdict {
            Verdict::Witness => !exact,
            Verdict::NotWitness => exact,
            Verdict::Indeterminate => false,
        };
        if contradiction || (exact && c.rho < 1.0 / (g as f64).sqrt() - 1e-6) {
            return Err(format!("trial {trial}: exact {exact}, rho {}, verdict {:?}", c.rho, c.verdict));
        }
    }
    let gap = WitnessCandidate::binary(vec![pauli::x().scale(0.7), pauli::y().scale(0.7)]).unwrap();
    let c = classify(&gap, None, 1e-6, &opts()).map_err(|e| e.to_string())?;
    if !is_witness_exact(&gap, WITNESS_TOL).unwrap() || (c.rho - 0.714).abs() > 1e-3 || c.verdict != Verdict::Indeterminate {
        return Err(format!("gap example: rho {} verdict {:?}", c.rho, c.verdict));
    }
    Ok(format!(
        "witness/not/indeterminate = {}/{}/{}; gap example rho = {:.5}",
        counts[0], counts[1], counts[2], c.rho
    ))
}

fn c10() -> Result<String, String> {
    let v = jewel_vertices(3).unwrap();
    if v != vec![vec![-1.5, 0.0], vec![0.0, -1.5], vec![1.5, 1.5]] {
        return Err(format!("jewel_vertices(3) = {v:?}"));
    }
    let jewel = jewel_tuple(&[2, 2]).unwrap();
    let diamond = named_base_tuple(BaseKind::Diamond, 2).unwrap();
    if jewel.matrices() != diamond.matrices() {
        return Err("jewel(2,2) differs from the diamond".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let shapes: [&[usize]; 3] = [&[3], &[2, 2], &[2, 3]];
    let mut members = 0;
    for i in 0..100 {
        let shape = shapes[i % 3];
        let tuple = jewel_tuple(shape).unwrap();
        let scale = rng.random_range(0.05..0.6);
        let x: Vec<HMat> = (0..tuple.len()).map(|_| random_hermitian(2, &mut rng).scale(scale)).collect();
        let a = jewel_membership(shape, &x, 0.0).unwrap();
        let b = membership(&tuple, &x, 0.0).unwrap();
        if (a.slack - b.slack).abs() > 1e-9 || (a.member != b.member && a.slack.abs() > 1e-9) {
            return Err(format!("input {i}: {a:?} vs {b:?}"));
        }
        members += a.member as usize;
    }
    Ok(format!("vertices exact, jewel(2,2) = diamond, 100 inputs agree ({members} members)"))
}

fn c11() -> Result<String, String> {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let set = random_set(2, &[2, 2], 1100 + seed).unwrap();
        let direct = robust(&set, NoiseKind::Balanced, &[1.0, 1.0]).t;
        let bisect = robustness_by_bisection(&set, NoiseKind::Balanced, &[1.0, 1.0], 1e-7, &opts()).map_err(|e| e.to_string())?;
        worst = worst.max((direct - bisect).abs());
        if (direct - bisect).abs() > 1e-5 {
            return Err(format!("seed {seed}: direct {direct} vs bisection {bisect}"));
        }
    }
    let stats = STATS.lock().unwrap();
    let bad = stats.iter().filter(|s| s.gap.abs() > 1e-7 || s.primal_residual > 1e-7 || s.dual_residual > 1e-7).count();
    let max_gap = stats.iter().map(|s| s.gap.abs()).fold(0.0, f64::max);
    let max_res = stats.iter().map(|s| s.primal_residual.max(s.dual_residual)).fold(0.0, f64::max);
    if bad > 0 {
        return Err(format!("{bad} of {} solves exceed 1e-7 (max gap {max_gap:.2e}, max residual {max_res:.2e})", stats.len()));
    }
    Ok(format!(
        "{} solves, max gap {max_gap:.2e}, max residual {max_res:.2e}; direct vs bisection within {worst:.2e}",
        stats.len()
    ))
}

fn c12() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut grained = 0;
    for trial in 0..20 {
        let set = random_set_with(2, &[3, 3], &mut rng).unwrap();
        let set = noisy(&set, &[0.4, 0.4]);
        if !feasible(&set).compatible {
            continue;
        }
        let grains: Vec<Povm> = set.povms().iter().map(|p| p.coarse_grain(&[vec![0, 2], vec![1]]).unwrap()).collect();
        let coarse = MeasurementSet::new(grains).unwrap();
        if !feasible(&coarse).compatible {
            return Err(format!("coarse-graining trial {trial} lost compatibility"));
        }
        grained += 1;
    }
    let mut worst_pad = 0.0f64;
    for seed in 0..5 {
        let set = random_set(2, &[2, 3], 1200 + seed).unwrap();
        let dir = [1.0, 0.6];
        let base = robust(&set, NoiseKind::Linear, &dir).t;
        let padded = set.with_povm(0, set.povm(0).pad_outcomes(4).unwrap()).unwrap();
        let padded = padded.with_povm(1, padded.povm(1).pad_outcomes(5).unwrap()).unwrap();
        let t = robust(&padded, NoiseKind::Linear, &dir).t;
        worst_pad = worst_pad.max((t - base).abs());
        if (t - base).abs() > 1e-5 {
            return Err(format!("padding changed linear robustness: {base} vs {t}"));
        }
    }
    let mut compressed = 0;
    for trial in 0..10 {
        let set = random_set_with(3, &[3, 3], &mut rng).unwrap();
        let set = noisy(&set, &[0.3, 0.3]);
        if !feasible(&set).compatible {
            return Err(format!("compression trial {trial}: input unexpectedly incompatible"));
        }
        let v = random_isometry(3, 2, &mut rng).unwrap();
        if !feasible(&set.compress(&v).unwrap()).compatible {
            return Err(format!("compression trial {trial} lost compatibility"));
        }
        compressed += 1;
    }
    Ok(format!("{grained} coarse-grainings, padding deviation {worst_pad:.2e}, {compressed} compressions"))
}

fn main() {
    let criteria: [(&str, fn() -> Result<String, String>); 12] = [
        ("MUB pair robustness, d = 2", c1),
        ("MUB pair asymmetric boundary, d = 3", c2),
        ("Zhu value for two MUBs, d = 3", c3),
        ("cloning lower bound feasible", c4),
        ("symmetrization point feasible", c5),
        ("diamond-scaled point feasible", c6),
        ("trine planar qubits", c7),
        ("witness certification", c8),
        ("witness classification consistency", c9),
        ("jewel geometry", c10),
        ("solver hygiene", c11),
        ("structural properties", c12),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2}: PASS  {name} ({detail}) [{secs:.2} s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2}: FAIL  {name}: {detail} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of 12 passed in {:.1} s", 12 - failures, start.elapsed().as_secs_f64());
    if failures > 0 {
        std::process::exit(1);
    }
}
