//! Parameter sets `M_{g,n,D} = {w : D ∩ g_w^n(D) ≠ ∅}` and the covering of
//! the connectedness locus built from them.

use rayon::prelude::*;

use super::raster::{MembershipRaster, Raster};
use super::window::ParamWindow;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::maps::{AffineMap, ContractionMap, PartialSumMap};
use crate::sets::image::image_cellset;
use crate::sets::CellSet;

/// Lattice points `{i − j}` for cells `i` of one set and `j` of another at
/// the same resolution. Point `k` stands for `k·ε`, which is exactly the
/// difference of the two cell centres. Small products are materialised;
/// large ones are queried pairwise on demand.
#[derive(Clone, Debug)]
pub struct DifferenceSet {
    eps: f64,
    repr: DiffRepr,
}

#[derive(Clone, Debug)]
enum DiffRepr {
    Points(CellSet),
    Pairs { a: CellSet, b: CellSet },
}

/// Largest `|A|·|B|` that is expanded into an explicit point set.
const EAGER_PAIRS: usize = 1 << 22;

impl DifferenceSet {
    pub fn new(a: &CellSet, b: &CellSet) -> Result<Self> {
        check_dim(a.dim(), b.dim())?;
        if a.eps() != b.eps() {
            return Err(Error::InvalidArgument("difference sets need equal resolutions".into()));
        }
        let repr = if a.len().saturating_mul(b.len()) <= EAGER_PAIRS {
            let bi: Vec<Vec<i64>> = b.indices().collect();
            let mut out = Vec::with_capacity(a.len() * bi.len());
            for ia in a.indices() {
                for ib in &bi {
                    out.push(ia.iter().zip(ib).map(|(x, y)| x - y).collect::<Vec<i64>>());
                }
            }
            DiffRepr::Points(CellSet::from_indices(a.dim(), a.eps(), out)?)
        } else {
            DiffRepr::Pairs { a: a.clone(), b: b.clone() }
        };
        Ok(DifferenceSet { eps: a.eps(), repr })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Whether some difference point lies within Chebyshev distance `ε` of `x`.
    pub fn contains_with_collar(&self, x: &[f64]) -> bool {
        let q: Vec<f64> = x.iter().map(|v| v / self.eps).collect();
        match &self.repr {
            DiffRepr::Points(p) => any_in_box(p, &q, &vec![0; q.len()], 1),
            DiffRepr::Pairs { a, b } => {
                // a − b ∈ q ± 1  ⇔  a ∈ b + q ± 1  ⇔  b ∈ a − q ± 1.
                if a.len() <= b.len() {
                    let neg: Vec<f64> = q.iter().map(|v| -v).collect();
                    a.indices().any(|ia| any_in_box(b, &neg, &ia, 1))
                } else {
                    b.indices().any(|ib| any_in_box(a, &q, &ib, 1))
                }
            }
        }
    }
}

/// Whether `set` holds an index `k` with `|k − (base + q)|_∞ ≤ r`.
fn any_in_box(set: &CellSet, q: &[f64], base: &[i64], r: i64) -> bool {
    let lo: Vec<i64> = q.iter().zip(base).map(|(v, &b)| b + (v - r as f64).ceil() as i64).collect();
    let hi: Vec<i64> = q.iter().zip(base).map(|(v, &b)| b + (v + r as f64).floor() as i64).collect();
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return false;
    }
    let mut idx = lo.clone();
    loop {
        if set.contains_index(&idx) {
            return true;
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return false;
            }
            if idx[k] < hi[k] {
                idx[k] += 1;
                break;
            }
            idx[k] = lo[k];
            k += 1;
        }
    }
}

fn linear_power_map(l: &Matrix, n: usize) -> Result<ContractionMap> {
    ContractionMap::affine(AffineMap::linear(linalg::matrix_power(l, n))?)
}

/// The `h⁻¹(D ⊖ g^n(D))` test for one parameter: `w` is a member when
/// `h(w + shift)` lies within one cell of the difference set.
struct MsetTester {
    h: PartialSumMap,
    diff: DifferenceSet,
}

impl MsetTester {
    fn new(l: &Matrix, n: usize, d: &CellSet) -> Result<Self> {
        let h = PartialSumMap::new(l, n)?;
        let gn = image_cellset(&linear_power_map(l, n)?, d)?;
        Ok(MsetTester { h, diff: DifferenceSet::new(d, &gn)? })
    }

    fn member(&self, w: &Vector) -> Result<bool> {
        let hw = self.h.eval_closed_form(w)?;
        Ok(self.diff.contains_with_collar(hw.as_slice()))
    }
}

/// Direct test of `D ∩ g_w^n(D) ≠ ∅` on covers, with a one-cell collar.
pub fn mset_direct(l: &Matrix, n: usize, d: &CellSet, w: &Vector) -> Result<bool> {
    check_dim(d.dim(), w.len())?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let shift = PartialSumMap::new(l, n)?.eval_closed_form(w)?;
    let gn = ContractionMap::affine(AffineMap::new(linalg::matrix_power(l, n), shift)?)?;
    let img = image_cellset(&gn, d)?;
    let (small, large) = if img.len() <= d.len() { (&img, d) } else { (d, &img) };
    let hit = small.indices().any(|c| large.near_index(&c, 1));
    Ok(hit)
}

/// Membership raster of `M_{g,n,D}` for the linear part `l` of `g`.
pub fn mset_compute(l: &Matrix, n: usize, d: &CellSet, window: &ParamWindow) -> Result<MembershipRaster> {
    window.validate()?;
    check_dim(d.dim(), window.dim())?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let tester = MsetTester::new(l, n, d)?;
    let members = (0..window.len())
        .into_par_iter()
        .map(|p| tester.member(&window.pixel_center_flat(p)))
        .collect::<Result<Vec<bool>>>()?;
    Ok(MembershipRaster {
        window: window.clone(),
        members: Raster::from_vec(window.width(), window.height(), members),
    })
}

/// Raster of the direct definition, for cross-checking [`mset_compute`].
pub fn mset_direct_raster(l: &Matrix, n: usize, d: &CellSet, window: &ParamWindow) -> Result<MembershipRaster> {
    window.validate()?;
    let members = (0..window.len())
        .into_par_iter()
        .map(|p| mset_direct(l, n, d, &window.pixel_center_flat(p)))
        .collect::<Result<Vec<bool>>>()?;
    Ok(MembershipRaster {
        window: window.clone(),
        members: Raster::from_vec(window.width(), window.height(), members),
    })
}

/// Radius of a ball about the origin containing every attractor of
/// `{f, g + w}` with `‖w‖ ≤ k`: `(‖b_f‖ + ‖b_g‖ + k + 1)/(1 − α)`.
pub fn union_bound_radius(f: &ContractionMap, g: &ContractionMap, k: f64) -> Result<f64> {
    // The bound depends on w only through ‖w‖.
    let mut w = Vector::zeros(f.dim());
    w[0] = k;
    crate::sets::bound_radius(f, &g.translate(w)?)
}

/// Pixels of `⋃_{n ≤ nmax} M_{g,n,D_k} ∪ {w : e_w ∈ D_k}` where `D_k` covers
/// `f` of the ball containing all attractors with `‖w‖ ≤ k`.
pub fn covering_upper_bound(
    f: &ContractionMap,
    g: &ContractionMap,
    k: f64,
    nmax: usize,
    window: &ParamWindow,
    eps: f64,
) -> Result<MembershipRaster> {
    window.validate()?;
    check_dim(f.dim(), g.dim())?;
    check_dim(f.dim(), window.dim())?;
    let ga = g
        .as_affine()
        .ok_or_else(|| Error::InvalidArgument("covering bound needs an affine g".into()))?;
    if f.as_affine().is_none() {
        return Err(Error::InvalidArgument("covering bound needs an affine f".into()));
    }
    if window.max_corner_norm() > k * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "window reaches norm {} outside the ball of radius {k}",
            window.max_corner_norm()
        )));
    }
    let d = f.dim();
    let radius = union_bound_radius(f, g, k)?;
    let ball = CellSet::cover_ball(&vec![0.0; d], radius, eps)?;
    let dk = image_cellset(f, &ball)?;
    let l = ga.linear_part().clone();
    let b = ga.offset().clone();
    let testers = (1..=nmax).map(|n| MsetTester::new(&l, n, &dk)).collect::<Result<Vec<_>>>()?;
    let fixed = linalg::identity(d) - &l;
    let members = (0..window.len())
        .into_par_iter()
        .map(|p| {
            let shifted = window.pixel_center_flat(p) + &b;
            let e = linalg::solve(&fixed, &shifted)?;
            if dk.contains_point_with_collar(e.as_slice(), 1) {
                return Ok(true);
            }
            for t in &testers {
                if t.member(&shifted)? {
                    return Ok(true);
                }
            }
            Ok(false)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(MembershipRaster {
        window: window.clone(),
        members: Raster::from_vec(window.width(), window.height(), members),
    })
}
