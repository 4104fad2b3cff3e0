//! The scaling identity `t·A_w = A_{tw}` for linear pairs and the sphere
//! containment `C ∩ S ⊂ K − E`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Vector};
use crate::maps::ContractionMap;
use crate::sets::hausdorff::hausdorff_points;
use crate::sets::image::image_cellset;
use crate::sets::{attractor_approx, CellSet};

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    /// `H(t·A_w, A_{tw})` between cell-centre sets.
    pub residual: f64,
    /// `2(err + ε√d)·max(1, |t|)` with the larger of the two errors.
    pub bound: f64,
    pub err: f64,
}

impl ScalingReport {
    pub fn holds(&self) -> bool {
        self.residual <= self.bound
    }
}

fn require_linear(m: &ContractionMap, name: &str) -> Result<()> {
    match m.as_affine() {
        Some(a) if a.is_linear() => Ok(()),
        _ => Err(Error::InvalidArgument(format!("{name} must be linear"))),
    }
}

pub fn scaling_reduce(
    f: &ContractionMap,
    g: &ContractionMap,
    w: &Vector,
    t: f64,
    eps: f64,
    tol: f64,
) -> Result<ScalingReport> {
    require_linear(f, "f")?;
    require_linear(g, "g")?;
    check_dim(f.dim(), w.len())?;
    if t == 0.0 || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("scale must be finite and nonzero, got {t}")));
    }
    let aw = attractor_approx(f, &g.translate(w.clone())?, eps, tol)?;
    let atw = attractor_approx(f, &g.translate(w * t)?, eps, tol)?;
    let scaled: Vec<f64> = aw.cover.centers().iter().map(|c| c * t).collect();
    let residual = hausdorff_points(f.dim(), &scaled, &atw.cover.centers());
    let err = aw.err.max(atw.err);
    let bound = 2.0 * (err + eps * (f.dim() as f64).sqrt()) * t.abs().max(1.0);
    Ok(ScalingReport { residual, bound, err })
}

/// Covers `K ⊇ f(B(0, M))` and `E ⊇ g(B(0, M))` of the linear images of
/// the ball, and a containment test for `K − E` with a one-cell collar.
#[derive(Clone, Debug)]
pub struct MinkowskiTest {
    f: ContractionMap,
    g: ContractionMap,
    radius: f64,
    eps: f64,
    cells: Option<super::mset::DifferenceSet>,
}

/// Directions tried by the support-function test in higher dimension.
const SUPPORT_DIRECTIONS: usize = 512;
/// Cell-based differences are used up to this dimension.
const CELL_DIM: usize = 2;

impl MinkowskiTest {
    pub fn new(f: &ContractionMap, g: &ContractionMap, radius: f64, eps: f64) -> Result<Self> {
        require_linear(f, "f")?;
        require_linear(g, "g")?;
        check_dim(f.dim(), g.dim())?;
        let cells = if f.dim() <= CELL_DIM {
            let ball = CellSet::cover_ball(&vec![0.0; f.dim()], radius, eps)?;
            let k = image_cellset(f, &ball)?;
            let e = image_cellset(g, &ball)?;
            Some(super::mset::DifferenceSet::new(&k, &e)?)
        } else {
            None
        };
        Ok(MinkowskiTest { f: f.clone(), g: g.clone(), radius, eps, cells })
    }

    /// Whether `x ∈ K − E`, up to one cell. In low dimension this is a
    /// lattice lookup. Otherwise `K − E` is the convex set
    /// `L_f B − L_g B` whose support function is `M(‖L_fᵀu‖ + ‖L_gᵀu‖)`;
    /// `x` is rejected only when some tried direction separates it.
    pub fn contains(&self, x: &Vector) -> Result<bool> {
        check_dim(self.f.dim(), x.len())?;
        if let Some(cells) = &self.cells {
            return Ok(cells.contains_with_collar(x.as_slice()));
        }
        let lf = self.f.as_affine().expect("checked linear").linear_part().transpose();
        let lg = self.g.as_affine().expect("checked linear").linear_part().transpose();
        let d = x.len();
        let slack = self.eps * (d as f64).sqrt();
        let separates = |u: &Vector| -> bool {
            let n = u.norm();
            if n == 0.0 {
                return false;
            }
            let u = u / n;
            let support = self.radius * ((&lf * &u).norm() + (&lg * &u).norm());
            u.dot(x) > support + slack
        };
        if separates(x) {
            return Ok(false);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..SUPPORT_DIRECTIONS {
            let u = Vector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            if separates(&u) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Ball radius `‖w‖/(1 − α)` for a linear pair.
pub fn linear_ball_radius(f: &ContractionMap, g: &ContractionMap, w_norm: f64) -> Result<f64> {
    let rate = linalg::spectral_norm_upper(f.as_affine().ok_or_else(|| Error::InvalidArgument("f must be affine".into()))?.linear_part())
        .max(linalg::spectral_norm_upper(g.as_affine().ok_or_else(|| Error::InvalidArgument("g must be affine".into()))?.linear_part()));
    if rate >= 1.0 {
        return Err(Error::NotContractive(1));
    }
    Ok(w_norm / (1.0 - rate))
}

/// For a unit-norm `w`: whether `w ∈ K − E` with `K, E` covering the images
/// of `B(0, 1/(1 − α))`.
pub fn sphere_criterion(f: &ContractionMap, g: &ContractionMap, w: &Vector, eps: f64) -> Result<bool> {
    if (w.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("sphere criterion needs a unit vector".into()));
    }
    let radius = linear_ball_radius(f, g, 1.0)?;
    MinkowskiTest::new(f, g, radius, eps)?.contains(w)
}
