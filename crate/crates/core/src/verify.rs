//! A self-contained invariant suite, run by the `verify` subcommand.
//!
//! Every check draws its cases from a ChaCha8 stream derived from the suite
//! seed and reports a pass flag with a one-line detail.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::connectivity::{decomposition_check, Class};
use crate::error::Result;
use crate::linalg::{self, Matrix, Vector};
use crate::mandelbrot::{
    covering_upper_bound, mset_compute, mset_direct_raster, scaling_reduce, sweep, ParamWindow, SweepPolicy,
};
use crate::maps::{
    apply_map, fixed_point, partial_sum_closed_form, partial_sum_map, AffineMap, ContractionMap, SelfMap,
};
use crate::porosity::continuity_probe;
use crate::sets::{attractor_approx, hausdorff_distance, hutchinson_step, CellSet};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{tag} {}: {}\n", c.name, c.detail));
        }
        let ok = self.checks.iter().filter(|c| c.passed).count();
        out.push_str(&format!("{ok}/{} checks passed\n", self.checks.len()));
        out
    }
}

type Check = fn(&mut ChaCha8Rng) -> Result<(bool, String)>;

const CHECKS: &[(&str, Check)] = &[
    ("translation_preserves_modulus", translation_preserves_modulus),
    ("fixed_point_residual", fixed_point_residual),
    ("h_map_identity", h_map_identity),
    ("hutchinson_contraction", hutchinson_contraction),
    ("hausdorff_metric_axioms", hausdorff_metric_axioms),
    ("ball_bound", ball_bound),
    ("scaling_law", scaling_law),
    ("decomposition_residual", decomposition_residual),
    ("uniform_continuity", uniform_continuity),
    ("covering_soundness", covering_soundness),
    ("fastpath_consistency", fastpath_consistency),
    ("sweep_determinism", sweep_determinism),
    ("mset_agreement", mset_agreement),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

pub fn run_suite(seed: u64) -> VerifyReport {
    let checks = CHECKS
        .iter()
        .enumerate()
        .map(|(k, (name, check))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let (passed, detail) = match check(&mut rng) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome { name: (*name).to_string(), passed, detail }
        })
        .collect();
    VerifyReport { seed, checks }
}

fn gaussian_vector(rng: &mut ChaCha8Rng, d: usize) -> Vector {
    Vector::from_fn(d, |_, _| StandardNormal.sample(rng))
}

/// A random matrix rescaled to spectral norm `rate`.
pub(crate) fn random_linear(rng: &mut ChaCha8Rng, d: usize, rate: f64) -> Matrix {
    let m = Matrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let n = linalg::spectral_norm(&m);
    if n == 0.0 {
        linalg::identity(d) * rate
    } else {
        m * (rate / n)
    }
}

fn scalar(d: usize, s: f64) -> Result<ContractionMap> {
    ContractionMap::affine(AffineMap::scalar(d, s)?)
}

fn translation_preserves_modulus(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..50 {
        let d = rng.random_range(1..=3);
        let rate = rng.random_range(0.1..0.95);
        let g = ContractionMap::affine(AffineMap::new(random_linear(rng, d, rate), gaussian_vector(rng, d))?)?;
        let gw = g.translate(gaussian_vector(rng, d) * 3.0)?;
        for _ in 0..20 {
            let x = gaussian_vector(rng, d) * 5.0;
            let y = gaussian_vector(rng, d) * 5.0;
            let lhs = (apply_map(&gw, &x)? - apply_map(&gw, &y)?).norm();
            let rhs = SelfMap::modulus(&gw).phi((x - y).norm());
            worst = worst.max(lhs - rhs);
        }
    }
    Ok((worst <= 1e-12, format!("max excess over the modulus {worst:.3e}")))
}

fn fixed_point_residual(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let d = rng.random_range(1..=4);
        let rate = rng.random_range(0.05..0.95);
        let m = ContractionMap::affine(AffineMap::new(random_linear(rng, d, rate), gaussian_vector(rng, d))?)?;
        let x = fixed_point(&m, 1e-12)?;
        worst = worst.max((apply_map(&m, &x)? - &x).norm());
    }
    Ok((worst <= 1e-9, format!("max residual {worst:.3e}")))
}

fn h_map_identity(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.random_range(1..=4);
        let rate = rng.random_range(0.0..0.9);
        let l = random_linear(rng, d, rate);
        let n = rng.random_range(1..=20);
        let w = gaussian_vector(rng, d);
        let a = partial_sum_map(&l, n, &w)?;
        let b = partial_sum_closed_form(&l, n, &w)?;
        let scale = a.norm().max(b.norm()).max(f64::MIN_POSITIVE);
        worst = worst.max((a - b).norm() / scale);
    }
    Ok((worst <= 1e-10, format!("max relative error {worst:.3e}")))
}

fn random_cellset(rng: &mut ChaCha8Rng, d: usize, eps: f64) -> Result<CellSet> {
    let n = rng.random_range(1..40);
    let cells: Vec<Vec<i64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-40..40)).collect()).collect();
    CellSet::from_indices(d, eps, cells)
}

fn hutchinson_contraction(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut violations = 0;
    for _ in 0..60 {
        let d = rng.random_range(1..=2);
        let eps = 1.0 / 64.0;
        let rate = rng.random_range(0.2..0.8);
        let f = ContractionMap::affine(AffineMap::linear(random_linear(rng, d, rate))?)?;
        let g = ContractionMap::affine(AffineMap::linear(random_linear(rng, d, rate))?)?;
        let gw = g.translate(gaussian_vector(rng, d))?;
        let a = random_cellset(rng, d, eps)?;
        let b = random_cellset(rng, d, eps)?;
        let h0 = hausdorff_distance(&a, &b)?;
        let h1 = hausdorff_distance(&hutchinson_step(&f, &gw, &a)?, &hutchinson_step(&f, &gw, &b)?)?;
        if h1 > rate * h0 + 2.0 * eps * (d as f64).sqrt() {
            violations += 1;
        }
    }
    Ok((violations == 0, format!("{violations} violations in 60 pairs")))
}

fn hausdorff_metric_axioms(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut bad = 0;
    for _ in 0..60 {
        let d = rng.random_range(1..=3);
        let eps = 1.0 / 16.0;
        let a = random_cellset(rng, d, eps)?;
        let b = random_cellset(rng, d, eps)?;
        let c = random_cellset(rng, d, eps)?;
        let (ab, ba) = (hausdorff_distance(&a, &b)?, hausdorff_distance(&b, &a)?);
        let (bc, ac) = (hausdorff_distance(&b, &c)?, hausdorff_distance(&a, &c)?);
        let aa = hausdorff_distance(&a, &a)?;
        if aa != 0.0 || (ab - ba).abs() > 1e-12 || ac > ab + bc + 1e-12 || (a != b && ab <= 0.0) {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("{bad} axiom failures in 60 triples")))
}

fn ball_bound(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..10 {
        let d = rng.random_range(1..=2);
        let alpha = rng.random_range(0.2..0.7);
        let f = ContractionMap::affine(AffineMap::linear(random_linear(rng, d, alpha))?)?;
        let g = ContractionMap::affine(AffineMap::linear(random_linear(rng, d, alpha))?)?;
        let w = gaussian_vector(rng, d).normalize();
        let eps = 1.0 / 64.0;
        let a = attractor_approx(&f, &g.translate(w)?, eps, eps / 4.0)?;
        let limit = 1.0 / (1.0 - alpha) + eps * (d as f64).sqrt();
        let far = a.cover.centers().chunks(d).map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
        worst = worst.max(far - limit);
    }
    Ok((worst <= 0.0, format!("largest excess over the dilated ball {worst:.3e}")))
}

fn scaling_law(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let f = scalar(1, 0.5)?;
    let mut fails = 0;
    for _ in 0..8 {
        let w = Vector::from_element(1, rng.random_range(-2.0..2.0));
        let mut t: f64 = rng.random_range(-4.0..4.0);
        if t.abs() < 0.05 {
            t = 0.5;
        }
        let eps = 1.0 / 256.0;
        if !scaling_reduce(&f, &f, &w, t, eps, eps / 4.0)?.holds() {
            fails += 1;
        }
    }
    Ok((fails == 0, format!("{fails} of 8 scale pairs out of bound")))
}

fn decomposition_residual(_: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let f = scalar(1, 0.5)?;
    let gw = f.translate(Vector::from_element(1, 0.5))?;
    let eps = 1.0 / 256.0;
    let a = attractor_approx(&f, &gw, eps, eps / 4.0)?;
    let mut worst: f64 = f64::NEG_INFINITY;
    for n in 1..=8 {
        let r = decomposition_check(&f, &gw, &a, n)?;
        worst = worst.max(r - (0.5f64.powi(n as i32) + 3.0 * eps));
    }
    Ok((worst <= 0.0, format!("largest excess over 2^-N + 3eps {worst:.3e}")))
}

fn uniform_continuity(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut fails = Vec::new();
    for (name, r) in [("halves", 0.5), ("thirds", 1.0 / 3.0)] {
        let f = scalar(1, r)?;
        let pairs: Vec<(Vector, Vector)> = (0..10)
            .map(|_| {
                let w = rng.random_range(-2.0..2.0);
                let dw = rng.random_range(0.05..0.5);
                (Vector::from_element(1, w), Vector::from_element(1, w + dw))
            })
            .collect();
        let eps = 1.0 / 256.0;
        let rep = continuity_probe(&f, &f, &pairs, eps, eps / 4.0)?;
        if !rep.holds() {
            fails.push(format!("{name} ratio {:.3} > {:.3}", rep.worst_ratio, rep.bound));
        }
    }
    Ok((fails.is_empty(), if fails.is_empty() { "both families within bound".into() } else { fails.join("; ") }))
}

fn covering_soundness(_: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let window = ParamWindow::interval(-2.0, 2.0, 33)?;
    let policy = SweepPolicy { fastpath: false, ..Default::default() };
    let mut violations = 0;
    for r in [0.5, 1.0 / 3.0] {
        let f = scalar(1, r)?;
        let raster = sweep(&f, &f, &window, &policy)?;
        let cover = covering_upper_bound(&f, &f, 2.0, 12, &window, 1.0 / 256.0)?;
        for i in 0..window.width() {
            if raster.class_at(i, 0) == Class::Connected && !cover.is_member(i, 0) {
                violations += 1;
            }
        }
    }
    Ok((violations == 0, format!("{violations} CONNECTED pixels outside the bound")))
}

fn fastpath_consistency(_: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let f = scalar(1, 0.5)?;
    let window = ParamWindow::interval(-2.0, 2.0, 17)?;
    let on = sweep(&f, &f, &window, &SweepPolicy::default())?;
    let off = sweep(&f, &f, &window, &SweepPolicy { fastpath: false, ..Default::default() })?;
    let differ = on.classes().iter().zip(off.classes().iter()).filter(|(a, b)| a != b).count();
    Ok((differ == 0 && on.report.fastpath_used, format!("{differ} pixels differ between fastpath on and off")))
}

fn sweep_determinism(_: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let f = scalar(1, 1.0 / 3.0)?;
    let window = ParamWindow::interval(-1.0, 1.0, 21)?;
    let policy = SweepPolicy { fastpath: false, ..Default::default() };
    let a = sweep(&f, &f, &window, &policy)?;
    let b = sweep(&f, &f, &window, &SweepPolicy { workers: 1, ..policy })?;
    let same = a.to_pgm() == b.to_pgm() && a.to_csv() == b.to_csv();
    Ok((same, if same { "identical raster and CSV".into() } else { "artifacts differ".into() }))
}

fn mset_agreement(_: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let l = Matrix::from_element(1, 1, 0.5);
    let eps = 1.0 / 256.0;
    let d = CellSet::cover_box(&[0.0], &[1.0], eps)?;
    let window = ParamWindow::interval(-2.0, 2.0, 201)?;
    let mut worst: f64 = 1.0;
    for n in [1, 2] {
        let a = mset_compute(&l, n, &d, &window)?;
        let b = mset_direct_raster(&l, n, &d, &window)?;
        let agree = a.members.iter().zip(b.members.iter()).filter(|(x, y)| x == y).count();
        worst = worst.min(agree as f64 / window.len() as f64);
    }
    Ok((worst >= 0.99, format!("lowest agreement {:.2}%", 100.0 * worst)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_and_is_reproducible() {
        let a = run_suite(11);
        assert!(a.passed(), "{}", a.summary());
        assert_eq!(a.checks.len(), check_names().len());
        let b = run_suite(11);
        assert_eq!(a.checks, b.checks);
    }
}
