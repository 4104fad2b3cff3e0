//! Connectedness verdicts for attractors of `{f, g_w}`.
//!
//! A DISCONNECTED verdict rests on outer covers: if the centre sets of the
//! image covers `f(A)` and `g_w(A)` are further apart than twice the total
//! error, the true images are disjoint and the attractor splits. CONNECTED
//! is issued when the image covers share a cell at the two finest
//! resolutions and the finest attractor cover forms a single ε-component.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::Vector;
use crate::maps::{fixed_point, AffineMap, ContractionMap, SelfMap, TranslatedMap};
use crate::sets::hausdorff::min_center_distance;
use crate::sets::{attractor_approx_with, hausdorff_distance, image_cellset, AttractorApprox, AttractorOptions, CellSet};
use crate::spatial::KdTree;
use crate::union_find::UnionFind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Class {
    Connected,
    Disconnected,
    Unknown,
}

impl Class {
    pub fn as_str(self) -> &'static str {
        match self {
            Class::Connected => "CONNECTED",
            Class::Disconnected => "DISCONNECTED",
            Class::Unknown => "UNKNOWN",
        }
    }

    /// Gray level used in raster images.
    pub fn gray(self) -> u8 {
        match self {
            Class::Connected => 255,
            Class::Unknown => 128,
            Class::Disconnected => 0,
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Minimum centre distance between the image covers at the last level.
    pub gap: f64,
    /// ε-components of the finest cover, when it was computed.
    pub components: Option<usize>,
    /// Resolutions actually visited, coarse to fine.
    pub resolutions: Vec<f64>,
    /// `threshold = 2(err + ε√d)` at the last level.
    pub threshold: f64,
    pub err: f64,
    /// `|gap − threshold|`.
    pub margin: f64,
    /// Set when the verdict came from the determinant criterion.
    pub fastpath: bool,
    /// Set when the attractor error bound is not backed by a Banach rate.
    pub heuristic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub class: Class,
    pub certificate: Certificate,
}

impl Verdict {
    pub fn fastpath_connected() -> Self {
        Verdict {
            class: Class::Connected,
            certificate: Certificate {
                gap: 0.0,
                components: None,
                resolutions: Vec::new(),
                threshold: 0.0,
                err: 0.0,
                margin: 0.0,
                fastpath: true,
                heuristic: false,
                note: None,
            },
        }
    }

    pub const CSV_TAIL: &'static str = "class,gap,components,resolutions,margin";

    /// `w0,...,w{d-1},class,gap,components,resolutions,margin`; resolutions
    /// are separated by `;`, missing component counts are left empty.
    pub fn csv_row(&self, w: &[f64]) -> String {
        let c = &self.certificate;
        let mut fields: Vec<String> = w.iter().map(|v| format!("{v:?}")).collect();
        fields.push(self.class.to_string());
        fields.push(format!("{:?}", c.gap));
        fields.push(c.components.map(|n| n.to_string()).unwrap_or_default());
        fields.push(c.resolutions.iter().map(|e| format!("{e:?}")).collect::<Vec<_>>().join(";"));
        fields.push(format!("{:?}", c.margin));
        fields.join(",")
    }
}

/// Resolution schedule `eps0/2^k, k < levels` and per-level budgets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyPolicy {
    pub eps0: f64,
    pub levels: usize,
    /// Stopping tolerance of the attractor iteration as a multiple of ε.
    pub tol_ratio: f64,
    pub max_iterations: usize,
    pub max_cells: usize,
    pub radius_cells: i64,
    /// Run the tightening pass on each attractor cover.
    pub tighten: bool,
}

impl Default for ClassifyPolicy {
    fn default() -> Self {
        ClassifyPolicy {
            eps0: 1.0 / 32.0,
            levels: 5,
            tol_ratio: 0.25,
            max_iterations: 4096,
            max_cells: 4_000_000,
            radius_cells: 1,
            tighten: false,
        }
    }
}

impl ClassifyPolicy {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.eps0 > 0.0) || !self.eps0.is_finite() {
            return bad(format!("eps0 must be positive and finite, got {}", self.eps0));
        }
        if self.levels == 0 || self.levels > 40 {
            return bad(format!("levels must lie in 1..=40, got {}", self.levels));
        }
        if !(self.tol_ratio > 0.0) || !self.tol_ratio.is_finite() {
            return bad(format!("tol_ratio must be positive, got {}", self.tol_ratio));
        }
        if self.max_iterations == 0 || self.max_cells == 0 {
            return bad("budgets must be positive".into());
        }
        if self.radius_cells < 1 {
            return bad("radius_cells must be at least 1".into());
        }
        Ok(())
    }

    pub fn schedule(&self) -> Vec<f64> {
        (0..self.levels).map(|k| self.eps0 / (1u64 << k) as f64).collect()
    }

    pub fn finest(&self) -> f64 {
        self.eps0 / (1u64 << (self.levels - 1)) as f64
    }

    /// The same policy one dyadic step finer.
    pub fn halved(&self) -> Self {
        ClassifyPolicy { eps0: self.eps0 / 2.0, ..self.clone() }
    }

    fn options(&self) -> AttractorOptions {
        AttractorOptions {
            max_iterations: self.max_iterations,
            max_cells: self.max_cells,
            seed: None,
            tighten: self.tighten,
        }
    }
}

/// Components of the graph joining cells at Chebyshev index distance at
/// most `radius_cells`.
pub fn epsilon_components(s: &CellSet, radius_cells: i64) -> Result<usize> {
    if radius_cells < 1 {
        return Err(Error::InvalidArgument("radius_cells must be at least 1".into()));
    }
    let dim = s.dim();
    let tree = KdTree::new(dim, &s.centers());
    let mut uf = UnionFind::new(tree.len());
    // Centres sit on the lattice, so half a cell of slack separates the
    // admitted neighbours from the next shell.
    let reach = (radius_cells as f64 + 0.5) * s.eps();
    for i in 0..tree.len() {
        let p = tree.get(i).to_vec();
        tree.within_chebyshev(&p, reach, |j| {
            if j > i {
                uf.union(i, j);
            }
        });
    }
    Ok(uf.count())
}

/// Minimum centre distance between the covers of `f(A)` and `g_w(A)`.
pub fn overlap_gap(f: &ContractionMap, gw: &TranslatedMap, a: &AttractorApprox) -> Result<f64> {
    let fi = image_cellset(f, &a.cover)?;
    let gi = image_cellset(gw, &a.cover)?;
    min_center_distance(&fi, &gi)
}

/// Whether the cell containing `e`, or one of its neighbours, belongs to `s`.
pub fn fixed_point_membership(e: &[f64], s: &CellSet) -> Result<bool> {
    check_dim(s.dim(), e.len())?;
    Ok(s.contains_point_with_collar(e, 1))
}

/// Hausdorff distance between the cover of `g_w(A)` and the cover of
/// `⋃_{n=1..N} g_w^n(f(A)) ∪ {e_w}`.
pub fn decomposition_check(f: &ContractionMap, gw: &TranslatedMap, a: &AttractorApprox, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let cover = &a.cover;
    let lhs = image_cellset(gw, cover)?;
    let e = fixed_point(gw, a.eps() * 1e-6)?;
    let mut rhs = CellSet::cover_points(cover.dim(), cover.eps(), e.as_slice())?;

    match (f.affine_form(), gw.affine_form()) {
        // Compose the affine maps so each term is enclosed once.
        (Some(af), Some(ag)) => {
            let mut comp: AffineMap = af;
            for _ in 0..n {
                comp = ag.compose(&comp);
                let m = ContractionMap::from_parts(
                    crate::maps::Body::Affine(comp.clone()),
                    f.modulus().clone(),
                );
                rhs = rhs.union(&image_cellset(&m, cover)?)?;
            }
        }
        _ => {
            let mut term = image_cellset(f, cover)?;
            for _ in 0..n {
                term = image_cellset(gw, &term)?;
                rhs = rhs.union(&term)?;
            }
        }
    }
    hausdorff_distance(&lhs, &rhs)
}

/// Classifies the attractor of `{f, g + w}` on the policy's resolution
/// schedule. Budget exhaustion yields UNKNOWN.
pub fn classify(f: &ContractionMap, g: &ContractionMap, w: &Vector, policy: &ClassifyPolicy) -> Result<Verdict> {
    policy.validate()?;
    check_dim(f.dim(), g.dim())?;
    check_dim(f.dim(), w.len())?;
    let gw = g.translate(w.clone())?;
    classify_translated(f, &gw, policy)
}

pub fn classify_translated(f: &ContractionMap, gw: &TranslatedMap, policy: &ClassifyPolicy) -> Result<Verdict> {
    classify_detailed(f, gw, policy).map(|(v, _)| v)
}

/// As [`classify_translated`], also returning the last attractor cover.
pub fn classify_detailed(
    f: &ContractionMap,
    gw: &TranslatedMap,
    policy: &ClassifyPolicy,
) -> Result<(Verdict, Option<AttractorApprox>)> {
    policy.validate()?;
    let d = f.dim();
    let root_d = (d as f64).sqrt();
    let warm = d <= 3;
    let mut resolutions = Vec::new();
    let mut shared = Vec::new();
    let mut previous: Option<CellSet> = None;
    let mut last: Option<(AttractorApprox, f64, f64)> = None;
    let mut heuristic = false;

    for eps in policy.schedule() {
        let mut opts = policy.options();
        if warm {
            if let Some(prev) = &previous {
                let factor = (prev.eps() / eps).round() as i64;
                opts.seed = Some(prev.refine(factor)?);
            }
        }
        let tol = policy.tol_ratio * eps;
        let approx = match attractor_approx_with(f, gw, eps, tol, &opts) {
            Ok(a) => a,
            Err(e @ (Error::BudgetExhausted(_) | Error::LatticeOverflow { .. })) => {
                resolutions.push(eps);
                let v = unknown_with(resolutions, last.as_ref(), heuristic, Some(e.to_string()));
                return Ok((v, last.map(|l| l.0)));
            }
            Err(e) => return Err(e),
        };
        resolutions.push(eps);
        heuristic |= approx.heuristic;
        let fi = image_cellset(f, &approx.cover)?;
        let gi = image_cellset(gw, &approx.cover)?;
        let gap = min_center_distance(&fi, &gi)?;
        let threshold = 2.0 * (approx.err + eps * root_d);
        if gap > threshold {
            let v = Verdict {
                class: Class::Disconnected,
                certificate: Certificate {
                    gap,
                    components: None,
                    resolutions,
                    threshold,
                    err: approx.err,
                    margin: gap - threshold,
                    fastpath: false,
                    heuristic,
                    note: None,
                },
            };
            return Ok((v, Some(approx)));
        }
        shared.push(fi.shares_cell_with(&gi));
        previous = Some(approx.cover.clone());
        last = Some((approx, gap, threshold));
    }

    let (approx, gap, threshold) = last.expect("schedule is nonempty");
    // A single resolution cannot witness an overlap that persists under
    // refinement.
    let overlapping = shared.len() >= 2 && shared.iter().rev().take(2).all(|&s| s);
    let components = epsilon_components(&approx.cover, policy.radius_cells)?;
    let class = if overlapping && components == 1 {
        Class::Connected
    } else {
        Class::Unknown
    };
    let v = Verdict {
        class,
        certificate: Certificate {
            gap,
            components: Some(components),
            resolutions,
            threshold,
            err: approx.err,
            margin: (gap - threshold).abs(),
            fastpath: false,
            heuristic,
            note: None,
        },
    };
    Ok((v, Some(approx)))
}

fn unknown_with(
    resolutions: Vec<f64>,
    last: Option<&(AttractorApprox, f64, f64)>,
    heuristic: bool,
    note: Option<String>,
) -> Verdict {
    let (gap, threshold, err) = last.map(|(a, g, t)| (*g, *t, a.err)).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    Verdict {
        class: Class::Unknown,
        certificate: Certificate {
            gap,
            components: None,
            resolutions,
            threshold,
            err,
            margin: (gap - threshold).abs(),
            fastpath: false,
            heuristic,
            note,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::attractor_approx;

    fn scalar(s: f64) -> ContractionMap {
        ContractionMap::affine(AffineMap::scalar(1, s).unwrap()).unwrap()
    }

    fn w1(v: f64) -> Vector {
        Vector::from_element(1, v)
    }

    #[test]
    fn components_of_simple_sets() {
        let s = CellSet::cover_box(&[0.0], &[1.0], 1.0 / 64.0).unwrap();
        assert_eq!(epsilon_components(&s, 1).unwrap(), 1);
        let two = CellSet::from_indices(1, 0.1, vec![vec![0], vec![10]]).unwrap();
        assert_eq!(epsilon_components(&two, 1).unwrap(), 2);
        assert!(epsilon_components(&two, 0).is_err());
    }

    #[test]
    fn cantor_cover_has_several_components() {
        let eps = 1.0 / 27.0;
        let f = scalar(1.0 / 3.0);
        let gw = f.translate(w1(2.0 / 3.0)).unwrap();
        let a = attractor_approx(&f, &gw, eps, eps / 4.0).unwrap();
        assert!(epsilon_components(&a.cover, 1).unwrap() >= 2);
    }

    #[test]
    fn overlap_gaps() {
        let eps = 1.0 / 256.0;
        let half = scalar(0.5);
        let gw = half.translate(w1(0.5)).unwrap();
        let a = attractor_approx(&half, &gw, eps, eps / 4.0).unwrap();
        assert!(overlap_gap(&half, &gw, &a).unwrap() <= 2.0 * eps);

        let third = scalar(1.0 / 3.0);
        let gw = third.translate(w1(2.0 / 3.0)).unwrap();
        let a = attractor_approx(&third, &gw, eps, eps / 4.0).unwrap();
        let gap = overlap_gap(&third, &gw, &a).unwrap();
        assert!((gap - 1.0 / 3.0).abs() <= 2.0 * eps, "{gap}");

        let gw = half.translate(w1(0.0)).unwrap();
        let a = attractor_approx(&half, &gw, eps, eps / 4.0).unwrap();
        assert_eq!(overlap_gap(&half, &gw, &a).unwrap(), 0.0);
    }

    #[test]
    fn classify_examples() {
        let p = ClassifyPolicy::default();
        let v = classify(&scalar(0.5), &scalar(0.5), &w1(1.0), &p).unwrap();
        assert_eq!(v.class, Class::Connected);
        assert_eq!(v.certificate.components, Some(1));
        let v = classify(&scalar(1.0 / 3.0), &scalar(1.0 / 3.0), &w1(1.0), &p).unwrap();
        assert_eq!(v.class, Class::Disconnected);
        assert!(v.certificate.gap > v.certificate.threshold);
        let v = classify(&scalar(0.4), &scalar(0.4), &w1(0.0), &p).unwrap();
        assert_eq!(v.class, Class::Connected);
    }

    #[test]
    fn exhausted_budget_is_unknown() {
        let p = ClassifyPolicy { max_iterations: 1, ..Default::default() };
        let v = classify(&scalar(0.5), &scalar(0.5), &w1(1.0), &p).unwrap();
        assert_eq!(v.class, Class::Unknown);
        assert!(v.certificate.note.is_some());
    }

    #[test]
    fn membership_with_collar() {
        let eps = 0.125;
        let s = CellSet::cover_box(&[0.0], &[1.0], eps).unwrap();
        assert!(fixed_point_membership(&[0.0], &s).unwrap());
        assert!(!fixed_point_membership(&[5.0], &s).unwrap());
        assert!(fixed_point_membership(&[1.0], &s).unwrap());
        assert!(fixed_point_membership(&[1.0 + eps / 2.0], &s).unwrap());
        assert!(!fixed_point_membership(&[1.0 + 2.5 * eps], &s).unwrap());
    }

    #[test]
    fn decomposition_residual_halves() {
        let eps = 1.0 / 256.0;
        let half = scalar(0.5);
        let gw = half.translate(w1(0.5)).unwrap();
        let a = attractor_approx(&half, &gw, eps, eps / 4.0).unwrap();
        let mut prev = f64::INFINITY;
        for n in 1..=8 {
            let r = decomposition_check(&half, &gw, &a, n).unwrap();
            assert!(r <= 0.5f64.powi(n as i32) + 3.0 * eps, "N={n}: {r}");
            assert!(r <= prev + 3.0 * eps);
            prev = r;
        }
    }

    #[test]
    fn decomposition_with_constant_map() {
        let eps = 1.0 / 128.0;
        let f = scalar(0.5);
        let zero = ContractionMap::affine(AffineMap::scalar(1, 0.0).unwrap()).unwrap();
        let gw = zero.translate(w1(0.7)).unwrap();
        let a = attractor_approx(&f, &gw, eps, eps / 4.0).unwrap();
        assert!(decomposition_check(&f, &gw, &a, 1).unwrap() <= eps);
    }

    #[test]
    fn csv_row_layout() {
        let v = Verdict::fastpath_connected();
        assert_eq!(v.csv_row(&[0.5]), "0.5,CONNECTED,0.0,,,0.0");
    }
}
