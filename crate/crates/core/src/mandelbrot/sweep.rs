use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::raster::{describe_map, ClassCounts, ClassificationRaster, Raster, SweepReport, Timings};
use super::window::ParamWindow;
use crate::connectivity::{classify, Certificate, Class, ClassifyPolicy, Verdict};
use crate::error::{check_dim, Error, Result};
use crate::linalg::Vector;
use crate::maps::{AffineMap, ContractionMap};

/// `|det L_f| + |det L_g| ≥ 1 − 1e−12`.
pub fn det_fastpath(f: &AffineMap, g: &AffineMap) -> Result<bool> {
    check_dim(f.dim(), g.dim())?;
    Ok(f.determinant().abs() + g.determinant().abs() >= 1.0 - 1e-12)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepPolicy {
    pub classify: ClassifyPolicy,
    pub fastpath: bool,
    /// Worker threads; 0 uses the ambient pool.
    pub workers: usize,
}

impl Default for SweepPolicy {
    fn default() -> Self {
        SweepPolicy { classify: ClassifyPolicy::default(), fastpath: true, workers: 0 }
    }
}

pub(crate) fn with_workers<T: Send, F: FnOnce() -> T + Send>(workers: usize, job: F) -> Result<T> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(job))
}

fn classify_or_unknown(f: &ContractionMap, g: &ContractionMap, w: &Vector, policy: &ClassifyPolicy) -> Verdict {
    classify(f, g, w, policy).unwrap_or_else(|e| Verdict {
        class: Class::Unknown,
        certificate: Certificate {
            gap: f64::NAN,
            components: None,
            resolutions: Vec::new(),
            threshold: f64::NAN,
            err: f64::NAN,
            margin: f64::NAN,
            fastpath: false,
            heuristic: false,
            note: Some(e.to_string()),
        },
    })
}

/// Classifies every pixel centre of `window`.
pub fn sweep(f: &ContractionMap, g: &ContractionMap, window: &ParamWindow, policy: &SweepPolicy) -> Result<ClassificationRaster> {
    let start = Instant::now();
    window.validate()?;
    policy.classify.validate()?;
    check_dim(f.dim(), g.dim())?;
    check_dim(f.dim(), window.dim())?;
    let fast = match (policy.fastpath, f.as_affine(), g.as_affine()) {
        (true, Some(a), Some(b)) => det_fastpath(a, b)?,
        _ => false,
    };
    let n = window.len();
    let verdicts: Vec<Verdict> = if fast {
        vec![Verdict::fastpath_connected(); n]
    } else {
        with_workers(policy.workers, || {
            (0..n)
                .into_par_iter()
                .map(|p| classify_or_unknown(f, g, &window.pixel_center_flat(p), &policy.classify))
                .collect()
        })?
    };
    let counts = ClassCounts::tally(verdicts.iter().map(|v| &v.class));
    Ok(ClassificationRaster {
        window: window.clone(),
        verdicts: Raster::from_vec(window.width(), window.height(), verdicts),
        report: SweepReport {
            kind: "sweep".into(),
            maps: serde_json::json!({"f": describe_map(f), "g": describe_map(g)}),
            window: window.clone(),
            eps_schedule: policy.classify.schedule(),
            policy: policy.classify.clone(),
            fastpath_enabled: policy.fastpath,
            fastpath_used: fast,
            workers: policy.workers,
            seed: None,
            config_hash: None,
            counts,
            timings: Timings { total_seconds: start.elapsed().as_secs_f64() },
        },
    })
}

/// UNKNOWN pixels and pixels with a 4-neighbour (2-neighbour on a line) of
/// a different class.
pub fn boundary_mask(classes: &Raster<Class>) -> Raster<bool> {
    let (w, h) = (classes.width(), classes.height());
    let mut mask = Vec::with_capacity(w * h);
    for j in 0..h {
        for i in 0..w {
            let c = *classes.get(i, j);
            let mut differs = c == Class::Unknown;
            if i > 0 {
                differs |= *classes.get(i - 1, j) != c;
            }
            if i + 1 < w {
                differs |= *classes.get(i + 1, j) != c;
            }
            if j > 0 {
                differs |= *classes.get(i, j - 1) != c;
            }
            if j + 1 < h {
                differs |= *classes.get(i, j + 1) != c;
            }
            mask.push(differs);
        }
    }
    Raster::from_vec(w, h, mask)
}

/// Splits boundary pixels into 3×3 (3 on a line) sub-pixels and reclassifies
/// them with the resolution schedule divided by 3, `depth` times. Other
/// pixels keep their verdict. The result has `3^depth` times the resolution.
pub fn boundary_refine(
    f: &ContractionMap,
    g: &ContractionMap,
    raster: &ClassificationRaster,
    depth: usize,
    policy: &SweepPolicy,
) -> Result<ClassificationRaster> {
    if depth == 0 {
        return Err(Error::InvalidArgument("refinement depth must be at least 1".into()));
    }
    let start = Instant::now();
    let mut current = raster.clone();
    let mut cpolicy = policy.classify.clone();
    for _ in 0..depth {
        cpolicy.eps0 /= 3.0;
        let mask = boundary_mask(&current.classes());
        let window = current.window.subdivided(3)?;
        let (ow, oh) = (current.verdicts.width(), current.verdicts.height());
        let (nw, nh) = (window.width(), window.height());
        let vsub = if oh > 1 { 3 } else { 1 };
        let verdicts: Vec<Verdict> = with_workers(policy.workers, || {
            (0..nw * nh)
                .into_par_iter()
                .map(|p| {
                    let (i, j) = (p % nw, p / nw);
                    let (pi, pj) = (i / 3, j / vsub);
                    debug_assert!(pi < ow && pj < oh);
                    if *mask.get(pi, pj) {
                        classify_or_unknown(f, g, &window.pixel_center(i, j), &cpolicy)
                    } else {
                        current.verdicts.get(pi, pj).clone()
                    }
                })
                .collect()
        })?;
        let counts = ClassCounts::tally(verdicts.iter().map(|v| &v.class));
        let mut report = current.report.clone();
        report.kind = "boundary_refine".into();
        report.window = window.clone();
        report.counts = counts;
        report.eps_schedule = cpolicy.schedule();
        current = ClassificationRaster {
            window,
            verdicts: Raster::from_vec(nw, nh, verdicts),
            report,
        };
    }
    current.report.timings.total_seconds += start.elapsed().as_secs_f64();
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(s: f64) -> ContractionMap {
        ContractionMap::affine(AffineMap::scalar(1, s).unwrap()).unwrap()
    }

    #[test]
    fn determinant_examples() {
        let half = AffineMap::scalar(1, 0.5).unwrap();
        let third = AffineMap::scalar(1, 1.0 / 3.0).unwrap();
        let six = AffineMap::scalar(2, 0.6).unwrap();
        assert!(det_fastpath(&half, &half).unwrap());
        assert!(!det_fastpath(&third, &third).unwrap());
        assert!(!det_fastpath(&six, &six).unwrap());
    }

    #[test]
    fn fastpath_marks_everything_connected() {
        let window = ParamWindow::interval(-4.0, 4.0, 33).unwrap();
        let r = sweep(&scalar(0.5), &scalar(0.5), &window, &SweepPolicy::default()).unwrap();
        assert!(r.report.fastpath_used);
        assert_eq!(r.counts().connected, 33);
    }

    #[test]
    fn degenerate_window_with_equal_maps() {
        let f = ContractionMap::affine(AffineMap::scalar(2, 0.6).unwrap()).unwrap();
        let window = ParamWindow::square(Vector::zeros(2), 1e-9, 2).unwrap();
        let policy = SweepPolicy { classify: ClassifyPolicy { eps0: 1.0 / 8.0, levels: 3, ..Default::default() }, ..Default::default() };
        let r = sweep(&f, &f, &window, &policy).unwrap();
        assert_eq!(r.counts().connected, 4);
    }

    #[test]
    fn uniform_raster_is_unchanged_by_refinement() {
        let window = ParamWindow::interval(-1.0, 1.0, 9).unwrap();
        let policy = SweepPolicy::default();
        let r = sweep(&scalar(0.5), &scalar(0.5), &window, &policy).unwrap();
        let refined = boundary_refine(&scalar(0.5), &scalar(0.5), &r, 1, &policy).unwrap();
        assert_eq!(refined.counts().connected, 27);
        assert!(boundary_refine(&scalar(0.5), &scalar(0.5), &r, 0, &policy).is_err());
    }
}
