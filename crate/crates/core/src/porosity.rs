//! Finite-dimensional probes of how small the connectedness locus is.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connectivity::{classify_detailed, Class, ClassifyPolicy, Verdict};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::mandelbrot::mset::union_bound_radius;
use crate::mandelbrot::MinkowskiTest;
use crate::maps::{AffineMap, ContractionMap};
use crate::sets::{attractor_approx, hausdorff_distance};
use crate::spatial::KdTree;

/// How an affine pair `(f_d, g_d)` is produced for each dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyRule {
    /// `f_d = diag(c·λ, c·λ², ..., c·λ^d)`, `g_d = β·I`.
    Decaying { c: f64, lambda: f64, beta: f64 },
    /// `f_d = a·I`, `g_d = b·I`.
    Scalar { a: f64, b: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationFamily {
    pub dims: Vec<usize>,
    pub rule: FamilyRule,
}

impl TruncationFamily {
    /// `c = 0.9, λ = 0.8, β = 0.45`.
    pub fn default_decaying(dims: Vec<usize>) -> Self {
        TruncationFamily { dims, rule: FamilyRule::Decaying { c: 0.9, lambda: 0.8, beta: 0.45 } }
    }

    pub fn scalar(dims: Vec<usize>, a: f64, b: f64) -> Self {
        TruncationFamily { dims, rule: FamilyRule::Scalar { a, b } }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::InvalidArgument("dimensions must be a nonempty list of positive integers".into()));
        }
        let unit = |name: &str, v: f64, open_low: bool| {
            let ok = if open_low { v > 0.0 && v < 1.0 } else { (0.0..1.0).contains(&v) };
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        match self.rule {
            FamilyRule::Decaying { c, lambda, beta } => {
                unit("c", c, true)?;
                unit("lambda", lambda, true)?;
                unit("beta", beta, true)
            }
            FamilyRule::Scalar { a, b } => {
                unit("a", a, false)?;
                unit("b", b, false)
            }
        }
    }

    pub fn build(&self, d: usize) -> Result<(ContractionMap, ContractionMap)> {
        self.validate()?;
        let (f, g) = match self.rule {
            FamilyRule::Decaying { c, lambda, beta } => {
                let diag: Vec<f64> = (1..=d).map(|k| c * lambda.powi(k as i32)).collect();
                (AffineMap::diagonal(&diag)?, AffineMap::scalar(d, beta)?)
            }
            FamilyRule::Scalar { a, b } => (AffineMap::scalar(d, a)?, AffineMap::scalar(d, b)?),
        };
        Ok((ContractionMap::affine(f)?, ContractionMap::affine(g)?))
    }
}

/// One line of the scan table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub d: usize,
    pub samples: usize,
    pub connected: usize,
    pub disconnected: usize,
    pub unknown: usize,
    /// `connected / (connected + disconnected)`; UNKNOWN samples are left out.
    pub fraction: f64,
}

impl ScanRow {
    pub const CSV_HEADER: &'static str = "d,samples,connected,disconnected,unknown,fraction";

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:?}",
            self.d, self.samples, self.connected, self.disconnected, self.unknown, self.fraction
        )
    }

    pub fn unknown_rate(&self) -> f64 {
        self.unknown as f64 / self.samples as f64
    }
}

/// Per-sample record of a scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanSample {
    pub w: Vector,
    pub verdict: Verdict,
    /// Every cell centre of the last attractor cover lies in the ball that
    /// bounds all attractors with `‖w‖ ≤ R`, dilated by one cell diagonal.
    pub within_bound: bool,
    /// For CONNECTED samples, whether `w` lies in `K − E` up to one cell.
    pub in_difference: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanDetail {
    pub row: ScanRow,
    pub samples: Vec<ScanSample>,
}

/// Stream seed for dimension `d`, so that adding dimensions to a scan does
/// not change the samples of the others.
fn dim_seed(seed: u64, d: usize) -> u64 {
    seed ^ (d as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Uniform samples from the ball `B(0, R)` in `ℝ^d`: a normalised Gaussian
/// direction times `R·U^{1/d}`.
pub fn ball_samples(d: usize, radius: f64, n: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(dim_seed(seed, d));
    (0..n)
        .map(|_| {
            let mut u;
            loop {
                u = Vector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
                if u.norm() > 0.0 {
                    break;
                }
            }
            let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
            let n = u.norm();
            u * (r / n)
        })
        .collect()
}

/// Schedule used by scans unless overridden: `1/32` down to `1/4096`.
/// Two-dimensional samples sit close to the connectedness boundary and need
/// the finer levels; higher dimensions settle after a few.
pub fn scan_policy() -> ClassifyPolicy {
    ClassifyPolicy { eps0: 1.0 / 32.0, levels: 8, ..ClassifyPolicy::default() }
}

pub fn dimension_scan(
    fam: &TruncationFamily,
    radius: f64,
    samples: usize,
    seed: u64,
    policy: &ClassifyPolicy,
) -> Result<Vec<ScanRow>> {
    Ok(dimension_scan_detailed(fam, radius, samples, seed, policy)?.into_iter().map(|d| d.row).collect())
}

/// The containment check against `K − E` runs on its own lattice, capped at
/// this many cells across the bounding ball so 2-D scans stay cheap.
const DIFFERENCE_CELLS_PER_AXIS: f64 = 512.0;

pub fn dimension_scan_detailed(
    fam: &TruncationFamily,
    radius: f64,
    samples: usize,
    seed: u64,
    policy: &ClassifyPolicy,
) -> Result<Vec<ScanDetail>> {
    fam.validate()?;
    policy.validate()?;
    if samples < 100 {
        return Err(Error::InvalidArgument(format!("a scan needs at least 100 samples, got {samples}")));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    fam.dims
        .iter()
        .map(|&d| {
            let (f, g) = fam.build(d)?;
            let bound = union_bound_radius(&f, &g, radius)?;
            let eps = policy.finest().max(2.0 * bound / DIFFERENCE_CELLS_PER_AXIS);
            let diff = MinkowskiTest::new(&f, &g, bound, eps)?;
            let ws = ball_samples(d, radius, samples, seed);
            let recs = ws
                .into_par_iter()
                .map(|w| scan_one(&f, &g, w, policy, bound, &diff))
                .collect::<Result<Vec<_>>>()?;
            let tally = |c: Class| recs.iter().filter(|s| s.verdict.class == c).count();
            let (connected, disconnected, unknown) =
                (tally(Class::Connected), tally(Class::Disconnected), tally(Class::Unknown));
            let decided = connected + disconnected;
            let fraction = if decided == 0 { 0.0 } else { connected as f64 / decided as f64 };
            Ok(ScanDetail {
                row: ScanRow { d, samples, connected, disconnected, unknown, fraction },
                samples: recs,
            })
        })
        .collect()
}

fn scan_one(
    f: &ContractionMap,
    g: &ContractionMap,
    w: Vector,
    policy: &ClassifyPolicy,
    bound: f64,
    diff: &MinkowskiTest,
) -> Result<ScanSample> {
    let gw = g.translate(w.clone())?;
    let (verdict, approx) = classify_detailed(f, &gw, policy)?;
    let within_bound = approx.as_ref().is_none_or(|a| {
        let d = a.dim();
        let slack = a.eps() * (d as f64).sqrt();
        a.cover.centers().chunks(d).all(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt() <= bound + slack)
    });
    let in_difference = match verdict.class {
        Class::Connected => Some(diff.contains(&w)?),
        _ => None,
    };
    Ok(ScanSample { w, verdict, within_bound, in_difference })
}

/// Searches random unit directions `u` for `y = x + R·u` whose distance to
/// every point of `m` is at least `αR`. `None` means no witness was found in
/// `trials` attempts.
pub fn strong_porosity_probe(
    m: &[Vector],
    x: &Vector,
    radius: f64,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<Option<Vector>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(radius > 0.0) || trials == 0 {
        return Err(Error::InvalidArgument("radius must be positive and trials at least 1".into()));
    }
    let d = x.len();
    if m.iter().any(|p| p.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: m.iter().map(|p| p.len()).find(|&l| l != d).unwrap_or(d) });
    }
    let flat: Vec<f64> = m.iter().flat_map(|p| p.iter().copied()).collect();
    let tree = (!m.is_empty()).then(|| KdTree::new(d, &flat));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let u = Vector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let n = u.norm();
        if n == 0.0 {
            continue;
        }
        let y = x + u * (radius / n);
        let clear = tree.as_ref().is_none_or(|t| t.nearest(y.as_slice()) >= alpha * radius);
        if clear {
            return Ok(Some(y));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityReport {
    pub worst_ratio: f64,
    /// `1/(1 − α) + 2(err + ε√d)/min ‖w − w'‖`.
    pub bound: f64,
    pub pairs: usize,
}

impl ContinuityReport {
    pub fn holds(&self) -> bool {
        self.worst_ratio <= self.bound
    }
}

/// Largest `H(A_w, A_{w'})/‖w − w'‖` over the given pairs.
pub fn continuity_probe(
    f: &ContractionMap,
    g: &ContractionMap,
    pairs: &[(Vector, Vector)],
    eps: f64,
    tol: f64,
) -> Result<ContinuityReport> {
    let rate = match (f.modulus().banach_rate(), g.modulus().banach_rate()) {
        (Some(a), Some(b)) if f.modulus().block_steps() == 1 && g.modulus().block_steps() == 1 => a.max(b),
        _ => return Err(Error::InvalidArgument("continuity probe needs single-step Banach rates".into())),
    };
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no parameter pairs given".into()));
    }
    let results = pairs
        .par_iter()
        .map(|(w, v)| {
            let sep = (w - v).norm();
            if sep == 0.0 {
                return Err(Error::InvalidArgument("parameter pairs must be distinct".into()));
            }
            let a = attractor_approx(f, &g.translate(w.clone())?, eps, tol)?;
            let b = attractor_approx(f, &g.translate(v.clone())?, eps, tol)?;
            let h = hausdorff_distance(&a.cover, &b.cover)?;
            Ok((h / sep, sep, a.err.max(b.err)))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_ratio = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let min_sep = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let err = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let d = f.dim() as f64;
    Ok(ContinuityReport {
        worst_ratio,
        bound: 1.0 / (1.0 - rate) + 2.0 * (err + eps * d.sqrt()) / min_sep,
        pairs: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_samples_are_reproducible_and_inside() {
        let a = ball_samples(3, 2.0, 200, 11);
        assert_eq!(a, ball_samples(3, 2.0, 200, 11));
        assert!(a.iter().all(|w| w.norm() <= 2.0));
        let mean_norm = a.iter().map(|w| w.norm()).sum::<f64>() / 200.0;
        assert!((mean_norm - 1.5).abs() < 0.1, "{mean_norm}");
    }

    #[test]
    fn halves_scan_is_fully_connected() {
        let fam = TruncationFamily::scalar(vec![1], 0.5, 0.5);
        let policy = ClassifyPolicy { eps0: 1.0 / 16.0, levels: 3, ..Default::default() };
        let rows = dimension_scan(&fam, 3.0, 100, 5, &policy).unwrap();
        assert_eq!(rows[0].fraction, 1.0);
        assert_eq!(rows[0].unknown, 0);
    }

    #[test]
    fn thirds_scan_is_almost_never_connected() {
        let fam = TruncationFamily::scalar(vec![1], 1.0 / 3.0, 1.0 / 3.0);
        let policy = ClassifyPolicy { eps0: 1.0 / 16.0, levels: 4, ..Default::default() };
        let rows = dimension_scan(&fam, 4.0, 100, 5, &policy).unwrap();
        assert!(rows[0].connected <= 1, "{:?}", rows[0]);
    }

    #[test]
    fn scan_rejects_small_sample_counts() {
        let fam = TruncationFamily::scalar(vec![1], 0.5, 0.5);
        assert!(dimension_scan(&fam, 1.0, 10, 0, &ClassifyPolicy::default()).is_err());
    }

    #[test]
    fn porosity_witnesses() {
        let x = Vector::zeros(2);
        let y = strong_porosity_probe(&[], &x, 1.0, 0.5, 1, 3).unwrap().unwrap();
        assert!((y.norm() - 1.0).abs() < 1e-12);
        let y = strong_porosity_probe(&[Vector::zeros(2)], &x, 1.0, 0.5, 5, 3).unwrap().unwrap();
        assert!((y.norm() - 1.0).abs() < 1e-12);
        let mut grid = Vec::new();
        for i in -40..=40 {
            for j in -40..=40 {
                grid.push(Vector::from_vec(vec![i as f64 * 0.05, j as f64 * 0.05]));
            }
        }
        assert!(strong_porosity_probe(&grid, &x, 1.0, 0.5, 200, 3).unwrap().is_none());
        assert!(strong_porosity_probe(&grid, &x, 1.0, 1.5, 200, 3).is_err());
    }

    #[test]
    fn continuity_ratios() {
        let eps = 1.0 / 256.0;
        let half = ContractionMap::affine(AffineMap::scalar(1, 0.5).unwrap()).unwrap();
        let p = [(Vector::from_element(1, 0.5), Vector::from_element(1, 0.6))];
        let r = continuity_probe(&half, &half, &p, eps, eps / 4.0).unwrap();
        assert!(r.holds() && r.worst_ratio <= 2.0 + 2.0 * (r.bound - 2.0), "{r:?}");
        let third = ContractionMap::affine(AffineMap::scalar(1, 1.0 / 3.0).unwrap()).unwrap();
        let p = [(Vector::from_element(1, 1.0), Vector::from_element(1, 1.1))];
        let r = continuity_probe(&third, &third, &p, eps, eps / 4.0).unwrap();
        assert!(r.holds(), "{r:?}");
        let same = [(Vector::from_element(1, 1.0), Vector::from_element(1, 1.0))];
        assert!(continuity_probe(&third, &third, &same, eps, eps / 4.0).is_err());
    }
}
